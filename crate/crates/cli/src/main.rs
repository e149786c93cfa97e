use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use toposwitch_core::circuit::run_law_corpus;
use toposwitch_core::dcopf::solve_dcopf_unconstrained;
use toposwitch_core::harness::{emit_report, run_monte_carlo, ExperimentConfig, ReportFormat};
use toposwitch_core::paradox::{reference_certificate, ParadoxCertificate, ParadoxKind};
use toposwitch_core::reduction::{reduce_subset_sum, verify_reduction, SubsetSumInstance};
use toposwitch_core::switching::{run_heuristic, ActionKind, Family, HeuristicConfig, SwitchRule};
use toposwitch_core::{check_relaxed_n1, emit_case, load_case, solve_dcopf, Network};

#[derive(Parser)]
#[command(name = "toposwitch", version, about = "Topology control for DC grid models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check connectivity and the two-line rule for load and generator buses.
    Validate { case: PathBuf },
    /// Solve the DC optimal power flow.
    Opf {
        case: PathBuf,
        /// Ignore line limits.
        #[arg(long)]
        unconstrained: bool,
        #[arg(long)]
        json: bool,
    },
    /// Check the loss laws on random resistor circuits.
    Laws {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        max_nodes: usize,
    },
    /// Run a switching heuristic.
    Switch {
        case: PathBuf,
        #[arg(long, value_parser = parse_family)]
        family: Family,
        /// Lines removed together per step (greedy only).
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Also try reconnecting removed lines (greedy only).
        #[arg(long)]
        reconnect: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Only require connectivity, not the two-line rule.
        #[arg(long)]
        connected_only: bool,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Build the subset-sum gadget network.
    Reduce {
        /// Comma-separated nonzero values, e.g. "-1,-2,-3,4,8".
        #[arg(long, allow_hyphen_values = true)]
        set: String,
        /// Decide both problems exhaustively and compare.
        #[arg(long)]
        verify: bool,
    },
    /// Print a certificate for one paradox kind.
    Paradox {
        #[arg(value_enum)]
        kind: KindArg,
        /// Recompute by layout search instead of using the bundled certificate.
        #[arg(long)]
        search: bool,
        /// Write the certificate (case plus evidence) here.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Monte Carlo comparison of heuristic families.
    Montecarlo {
        case: PathBuf,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', value_parser = parse_family, default_value = "random,profit,greedy")]
        families: Vec<Family>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        markdown: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Commutativity,
    Monotonicity,
    ConsistencyA,
    ConsistencyB,
}

impl From<KindArg> for ParadoxKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Commutativity => ParadoxKind::NonCommutativity,
            KindArg::Monotonicity => ParadoxKind::NonMonotonicity,
            KindArg::ConsistencyA => ParadoxKind::NonConsistencyA,
            KindArg::ConsistencyB => ParadoxKind::NonConsistencyB,
        }
    }
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse()
}

fn load(path: &Path) -> Result<Network> {
    load_case(path).with_context(|| format!("loading {}", path.display()))
}

fn bundled(kind: ParadoxKind) -> &'static str {
    match kind {
        ParadoxKind::NonCommutativity => include_str!("../../../data/paradox/non_commutativity.json"),
        ParadoxKind::NonMonotonicity => include_str!("../../../data/paradox/non_monotonicity.json"),
        ParadoxKind::NonConsistencyA => include_str!("../../../data/paradox/non_consistency_a.json"),
        ParadoxKind::NonConsistencyB => include_str!("../../../data/paradox/non_consistency_b.json"),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Validate { case } => {
            let net = load(&case)?;
            let report = check_relaxed_n1(&net.view());
            if report.is_pass() {
                return Ok(ExitCode::SUCCESS);
            }
            if !report.connected {
                eprintln!("network is not connected");
            }
            for bus in &report.low_degree {
                println!("{bus}");
            }
            Ok(ExitCode::from(2))
        }

        Command::Opf { case, unconstrained, json } => {
            let net = load(&case)?;
            let view = net.view();
            let sol = if unconstrained { solve_dcopf_unconstrained(&view)? } else { solve_dcopf(&view)? };
            if json {
                let doc = if sol.feasible {
                    json!({
                        "feasible": true,
                        "total_cost": sol.total_cost,
                        "dispatch": net.generators().iter().zip(&sol.gen_output)
                            .map(|(g, p)| json!({"generator": g.id, "mw": p})).collect::<Vec<_>>(),
                        "prices": net.buses().iter().zip(&sol.prices)
                            .map(|(b, p)| json!({"bus": b.id, "price": p})).collect::<Vec<_>>(),
                        "flows": net.lines().iter().zip(&sol.flows)
                            .map(|(l, f)| json!({"line": l.id, "mw": f})).collect::<Vec<_>>(),
                    })
                } else {
                    json!({"feasible": false})
                };
                println!("{}", serde_json::to_string_pretty(&doc)?);
            } else if sol.feasible {
                println!("cost {:.4}", sol.total_cost);
                for (g, p) in net.generators().iter().zip(&sol.gen_output) {
                    println!("gen {} bus {} {:.4} MW", g.id, g.bus, p);
                }
                for (b, p) in net.buses().iter().zip(&sol.prices) {
                    println!("bus {} price {:.4}", b.id, p);
                }
            } else {
                println!("infeasible");
            }
            Ok(if sol.feasible { ExitCode::SUCCESS } else { ExitCode::from(3) })
        }

        Command::Laws { trials, seed, max_nodes } => {
            let r = run_law_corpus(trials, seed, max_nodes);
            println!("circuits {}", r.circuits);
            println!("removals {}", r.removals);
            println!("max relative loss decrease {:e}", r.max_decrease);
            println!("max relative identity error {:e}", r.max_identity_error);
            Ok(ExitCode::SUCCESS)
        }

        Command::Switch { case, family, k, reconnect, seed, connected_only, trace } => {
            let net = load(&case)?;
            let mut cfg = HeuristicConfig::new(family);
            cfg.move_set.max_removals = k;
            cfg.move_set.allow_reconnect = reconnect;
            cfg.seed = seed;
            if connected_only {
                cfg = cfg.with_rule(SwitchRule::Connected);
            }
            let t = run_heuristic(&net, &cfg)?;
            println!("initial cost {:.4}", t.initial_cost);
            for a in &t.actions {
                let kind = match a.kind {
                    ActionKind::Remove => "remove",
                    ActionKind::Reconnect => "reconnect",
                };
                let ids: Vec<String> = a.lines.iter().map(|l| l.to_string()).collect();
                println!("{kind} {} -> {:.4}", ids.join(" "), a.cost_after);
            }
            println!("final cost {:.4}", t.final_cost);
            println!("lines disconnected {}", t.lines_disconnected(&net));
            println!("dcopf solves {}", t.dcopf_solve_count);
            if let Some(path) = trace {
                let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
                w.write_record(["iteration", "action_kind", "line_ids", "cost_before", "cost_after", "solves_so_far"])?;
                for (i, a) in t.actions.iter().enumerate() {
                    let ids: Vec<String> = a.lines.iter().map(|l| l.to_string()).collect();
                    let kind = match a.kind {
                        ActionKind::Remove => "remove",
                        ActionKind::Reconnect => "reconnect",
                    };
                    w.write_record([
                        (i + 1).to_string(),
                        kind.to_string(),
                        ids.join(" "),
                        a.cost_before.to_string(),
                        a.cost_after.to_string(),
                        a.solves_so_far.to_string(),
                    ])?;
                }
                w.flush()?;
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Reduce { set, verify } => {
            let values = set
                .split(',')
                .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad value `{s}`")))
                .collect::<Result<Vec<_>>>()?;
            let inst = SubsetSumInstance::from_values(&values)?;
            println!("{}", emit_case(&reduce_subset_sum(&inst)?));
            if verify {
                let v = verify_reduction(&inst)?;
                println!("subset sum: {}", if v.subset_sum_yes { "yes" } else { "no" });
                println!("topology feasible: {}", if v.topology_yes { "yes" } else { "no" });
                if let Some(w) = &v.witness_subset {
                    let s: Vec<String> = w.iter().map(|x| x.to_string()).collect();
                    println!("witness subset {{{}}}", s.join(", "));
                }
                if let Some(t) = &v.witness_topology {
                    let s: Vec<String> = t.iter().map(|x| x.to_string()).collect();
                    println!("witness bank lines {}", s.join(" "));
                }
                println!("agree: {}", v.agree);
                if !v.agree {
                    return Ok(ExitCode::FAILURE);
                }
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Paradox { kind, search, emit } => {
            let kind = ParadoxKind::from(kind);
            let cert = if search {
                reference_certificate(kind)?
            } else {
                let c = ParadoxCertificate::from_json(bundled(kind))?;
                if !c.replay()? {
                    bail!("bundled certificate for {kind:?} does not replay");
                }
                c
            };
            println!("kind {kind:?}");
            println!("lines {}", cert.instance.lines().len());
            println!("fallback {}", cert.fallback);
            println!("{}", serde_json::to_string_pretty(&cert.evidence)?);
            if let Some(path) = emit {
                fs::write(&path, cert.to_json()).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Montecarlo { case, trials, seed, families, out, markdown, workers } => {
            let cfg = ExperimentConfig {
                families,
                workers,
                output: Some(out.clone()),
                ..ExperimentConfig::new(case, trials, seed)
            };
            let report = run_monte_carlo(&cfg)?;
            fs::write(&out, emit_report(&report, ReportFormat::Csv)?)
                .with_context(|| format!("writing {}", out.display()))?;
            let md = emit_report(&report, ReportFormat::Markdown)?;
            match markdown {
                Some(path) => fs::write(&path, &md).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{md}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
