//! Monte Carlo comparison of the switching heuristics.
//!
//! Each trial draws fresh generator costs, solves the benchmark pair (case
//! topology with and without line limits) and runs every configured family
//! on the same instance. Savings are normalised by the maximum attainable
//! savings, effort by the greedy family's mean DCOPF solve count.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::PathBuf;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dcopf::{solve_dcopf, solve_dcopf_unconstrained};
use crate::error::HarnessError;
use crate::grid::Network;
use crate::switching::{run_heuristic, Family, HeuristicConfig, SwitchRule};

/// Relative slack for the `[c_unconstrained, c_init]` bracket.
const BRACKET_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub case_path: PathBuf,
    pub trials: usize,
    pub master_seed: u64,
    pub cost_scale_low: f64,
    pub cost_scale_high: f64,
    /// Flat per-generator cost the scale multiplies; the case's own costs
    /// when `None`.
    pub cost_baseline: Option<f64>,
    pub families: Vec<Family>,
    pub rule: SwitchRule,
    /// Worker threads; all available cores when `None`.
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(case_path: impl Into<PathBuf>, trials: usize, master_seed: u64) -> Self {
        ExperimentConfig {
            case_path: case_path.into(),
            trials,
            master_seed,
            cost_scale_low: 0.5,
            cost_scale_high: 1.5,
            cost_baseline: Some(20.0),
            families: vec![Family::Random, Family::LineProfit, Family::Greedy],
            rule: SwitchRule::RelaxedN1,
            workers: None,
            output: None,
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if !(self.cost_scale_low > 0.0 && self.cost_scale_low <= self.cost_scale_high) {
            return bad("need 0 < low <= high for the cost scale");
        }
        if self.cost_baseline.is_some_and(|b| !(b > 0.0 && b.is_finite())) {
            return bad("cost baseline must be positive");
        }
        if self.families.is_empty() {
            return bad("no heuristic families");
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mas {
    pub c_init: f64,
    pub c_unconstrained: f64,
    pub mas: f64,
}

impl Mas {
    /// Below this the benchmark pair is considered equal.
    pub fn is_zero(&self) -> bool {
        self.mas <= BRACKET_TOL * self.c_init.abs().max(1.0)
    }
}

pub fn compute_mas(net: &Network) -> Result<Mas, HarnessError> {
    let view = net.view();
    let init = solve_dcopf(&view)?;
    if !init.feasible {
        return Err(HarnessError::InfeasibleBase);
    }
    let free = solve_dcopf_unconstrained(&view)?;
    let mas = init.total_cost - free.total_cost;
    if mas < -BRACKET_TOL * init.total_cost.abs().max(1.0) {
        return Err(HarnessError::Invariant(format!(
            "unconstrained cost {} above constrained cost {}",
            free.total_cost, init.total_cost
        )));
    }
    Ok(Mas { c_init: init.total_cost, c_unconstrained: free.total_cost, mas: mas.max(0.0) })
}

/// Stable per-trial seed: splitmix64 finaliser over the master seed and the
/// trial index.
pub fn trial_seed(master_seed: u64, trial: usize) -> u64 {
    let mut z = master_seed ^ (trial as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Ok,
    /// Benchmark costs coincide; no saving ratio.
    ZeroMas,
    /// Constrained base case infeasible; the trial is excluded.
    Infeasible,
}

/// One family on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub trial_seed: u64,
    pub family: Family,
    pub status: TrialStatus,
    pub c_init: Option<f64>,
    pub c_unconstrained: Option<f64>,
    pub mas: Option<f64>,
    pub final_cost: Option<f64>,
    pub saving_over_mas: Option<f64>,
    pub lines_disconnected: Option<usize>,
    pub dcopf_solves: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (n - 1); zero for fewer than two samples.
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return MeanStd { mean: f64::NAN, std: f64::NAN, n };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        MeanStd { mean, std, n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyStats {
    pub family: Family,
    pub saving_over_mas: MeanStd,
    pub lines_disconnected: MeanStd,
    pub mean_solves: f64,
    /// Mean solve count relative to greedy (or to the first family when
    /// greedy did not run).
    pub mean_effort: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub trials: usize,
    pub infeasible_trials: usize,
    pub zero_mas_trials: usize,
    pub families: Vec<FamilyStats>,
    pub rows: Vec<TrialRow>,
}

impl StatsReport {
    pub fn family(&self, family: Family) -> Option<&FamilyStats> {
        self.families.iter().find(|f| f.family == family)
    }
}

/// Recompute the aggregates from raw rows. Rows are put in trial order
/// first, so the result does not depend on the order trials finished in.
/// Family order follows the first appearance in `rows`.
pub fn aggregate(mut rows: Vec<TrialRow>) -> StatsReport {
    rows.sort_by_key(|r| r.trial);
    let mut order: Vec<Family> = Vec::new();
    for r in &rows {
        if !order.contains(&r.family) {
            order.push(r.family);
        }
    }
    let mut trial_status: Vec<(usize, TrialStatus)> = rows.iter().map(|r| (r.trial, r.status)).collect();
    trial_status.sort_by_key(|t| t.0);
    trial_status.dedup_by_key(|t| t.0);
    let count = |s: TrialStatus| trial_status.iter().filter(|t| t.1 == s).count();

    let mut families: Vec<FamilyStats> = order
        .iter()
        .map(|&family| {
            let mine: Vec<&TrialRow> = rows.iter().filter(|r| r.family == family).collect();
            let savings: Vec<f64> = mine.iter().filter_map(|r| r.saving_over_mas).collect();
            let lines: Vec<f64> = mine.iter().filter_map(|r| r.lines_disconnected).map(|l| l as f64).collect();
            let solves: Vec<f64> = mine.iter().filter_map(|r| r.dcopf_solves).map(|s| s as f64).collect();
            FamilyStats {
                family,
                saving_over_mas: MeanStd::of(&savings),
                lines_disconnected: MeanStd::of(&lines),
                mean_solves: MeanStd::of(&solves).mean,
                mean_effort: f64::NAN,
            }
        })
        .collect();
    let reference = families
        .iter()
        .find(|f| f.family == Family::Greedy)
        .or(families.first())
        .map(|f| f.mean_solves);
    if let Some(base) = reference {
        for f in &mut families {
            f.mean_effort = f.mean_solves / base;
        }
    }
    StatsReport {
        trials: trial_status.len(),
        infeasible_trials: count(TrialStatus::Infeasible),
        zero_mas_trials: count(TrialStatus::ZeroMas),
        families,
        rows,
    }
}

fn run_trial(net: &Network, cfg: &ExperimentConfig, trial: usize) -> Result<Vec<TrialRow>, HarnessError> {
    let seed = trial_seed(cfg.master_seed, trial);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let costs: Vec<f64> = net
        .generators()
        .iter()
        .map(|g| cfg.cost_baseline.unwrap_or(g.cost) * rng.gen_range(cfg.cost_scale_low..=cfg.cost_scale_high))
        .collect();
    let random_seed: u64 = rng.gen();
    let instance = net.with_costs(&costs);

    let blank = |family, status| TrialRow {
        trial,
        trial_seed: seed,
        family,
        status,
        c_init: None,
        c_unconstrained: None,
        mas: None,
        final_cost: None,
        saving_over_mas: None,
        lines_disconnected: None,
        dcopf_solves: None,
    };
    let mas = match compute_mas(&instance) {
        Ok(m) => m,
        Err(HarnessError::InfeasibleBase) => {
            return Ok(cfg.families.iter().map(|&f| blank(f, TrialStatus::Infeasible)).collect());
        }
        Err(e) => return Err(e),
    };
    let status = if mas.is_zero() { TrialStatus::ZeroMas } else { TrialStatus::Ok };

    let mut rows = Vec::with_capacity(cfg.families.len());
    for &family in &cfg.families {
        let hc = HeuristicConfig { seed: random_seed, ..HeuristicConfig::new(family) }.with_rule(cfg.rule);
        let t = run_heuristic(&instance, &hc)?;
        let slack = BRACKET_TOL * mas.c_init.abs().max(1.0);
        if t.final_cost > mas.c_init + slack || t.final_cost < mas.c_unconstrained - slack {
            return Err(HarnessError::Invariant(format!(
                "trial {trial}, {}: final cost {} outside [{}, {}]",
                family.name(),
                t.final_cost,
                mas.c_unconstrained,
                mas.c_init
            )));
        }
        rows.push(TrialRow {
            c_init: Some(mas.c_init),
            c_unconstrained: Some(mas.c_unconstrained),
            mas: Some(mas.mas),
            final_cost: Some(t.final_cost),
            saving_over_mas: (status == TrialStatus::Ok).then(|| (mas.c_init - t.final_cost) / mas.mas),
            lines_disconnected: Some(t.lines_disconnected(&instance)),
            dcopf_solves: Some(t.dcopf_solve_count),
            ..blank(family, status)
        });
    }
    Ok(rows)
}

/// Run the experiment on an already loaded case. `cfg.case_path` is not read.
pub fn run_monte_carlo_on(net: &Network, cfg: &ExperimentConfig) -> Result<StatsReport, HarnessError> {
    cfg.validate()?;
    let run = || -> Result<Vec<Vec<TrialRow>>, HarnessError> {
        (0..cfg.trials).into_par_iter().map(|t| run_trial(net, cfg, t)).collect()
    };
    let per_trial = match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| HarnessError::Config(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    Ok(aggregate(per_trial.into_iter().flatten().collect()))
}

pub fn run_monte_carlo(cfg: &ExperimentConfig) -> Result<StatsReport, HarnessError> {
    let net = crate::load_case(&cfg.case_path)?;
    run_monte_carlo_on(&net, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

pub fn emit_report(report: &StatsReport, format: ReportFormat) -> Result<String, HarnessError> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in &report.rows {
                w.serialize(row)?;
            }
            let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
        }
        ReportFormat::Markdown => Ok(markdown(report)),
    }
}

fn markdown(report: &StatsReport) -> String {
    let mut s = String::new();
    s.push_str("| Heuristic | Saving/MAS | Lines disconnected | Mean effort |\n");
    s.push_str("|---|---|---|---|\n");
    for f in &report.families {
        let _ = writeln!(
            s,
            "| {} | {:.3} ± {:.3} | {:.2} ± {:.2} | {:.3} |",
            f.family.name(),
            f.saving_over_mas.mean,
            f.saving_over_mas.std,
            f.lines_disconnected.mean,
            f.lines_disconnected.std,
            f.mean_effort
        );
    }
    if report.infeasible_trials + report.zero_mas_trials > 0 {
        let _ = writeln!(
            s,
            "| excluded | {} infeasible, {} zero-MAS of {} trials | | |",
            report.infeasible_trials, report.zero_mas_trials, report.trials
        );
    }
    s
}

/// Parse rows written by [`emit_report`] with [`ReportFormat::Csv`] and
/// recompute the aggregates.
pub fn read_csv_report<R: Read>(reader: R) -> Result<StatsReport, HarnessError> {
    let mut r = csv::Reader::from_reader(reader);
    let rows = r.deserialize().collect::<Result<Vec<TrialRow>, _>>()?;
    Ok(aggregate(rows))
}

pub fn write_report<W: Write>(report: &StatsReport, format: ReportFormat, mut out: W) -> Result<(), HarnessError> {
    out.write_all(emit_report(report, format)?.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::tests::{bus, gen, line};

    fn congested() -> Network {
        // Cheap unit behind a weak corridor; a parallel path around it.
        Network::new(
            vec![bus(1, 0.0), bus(2, 0.0), bus(3, 15.0), bus(4, 0.0)],
            vec![
                line(1, 1, 2, 1.0, 5.0),
                line(2, 1, 3, 1.0, 10.0),
                line(3, 2, 3, 1.0, 1.0),
                line(4, 2, 3, 1.0, 1.0),
                line(5, 2, 3, 1.0, 5.0),
                line(6, 1, 4, 1.0, 50.0),
                line(7, 4, 3, 1.0, 50.0),
            ],
            vec![gen(1, 1, 10.0, 15.0), gen(2, 3, 80.0, 15.0)],
            None,
        )
        .unwrap()
    }

    fn cfg(trials: usize) -> ExperimentConfig {
        ExperimentConfig {
            rule: SwitchRule::Connected,
            cost_baseline: None,
            ..ExperimentConfig::new("unused", trials, 3)
        }
    }

    #[test]
    fn sample_std_uses_n_minus_one() {
        let m = MeanStd::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(MeanStd::of(&[7.0]).std, 0.0);
    }

    #[test]
    fn trial_seeds_differ() {
        let seeds: Vec<u64> = (0..100).map(|t| trial_seed(42, t)).collect();
        let mut sorted = seeds.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 100);
        assert_ne!(trial_seed(1, 0), trial_seed(2, 0));
    }

    #[test]
    fn single_trial_report_is_its_row() {
        let r = run_monte_carlo_on(&congested(), &cfg(1)).unwrap();
        for f in &r.families {
            let row = r.rows.iter().find(|row| row.family == f.family).unwrap();
            if let Some(s) = row.saving_over_mas {
                assert_eq!(f.saving_over_mas.mean, s);
            }
            assert_eq!(f.lines_disconnected.mean, row.lines_disconnected.unwrap() as f64);
            assert_eq!(f.saving_over_mas.std, 0.0);
        }
    }

    #[test]
    fn deterministic_and_order_free() {
        let a = run_monte_carlo_on(&congested(), &cfg(6)).unwrap();
        let b = run_monte_carlo_on(&congested(), &ExperimentConfig { workers: Some(1), ..cfg(6) }).unwrap();
        assert_eq!(emit_report(&a, ReportFormat::Csv).unwrap(), emit_report(&b, ReportFormat::Csv).unwrap());
        let mut rows = a.rows.clone();
        rows.reverse();
        let mut rev = aggregate(rows);
        rev.families.sort_by_key(|f| a.families.iter().position(|g| g.family == f.family));
        assert_eq!(rev.families, a.families);
    }

    #[test]
    fn csv_round_trip() {
        let a = run_monte_carlo_on(&congested(), &cfg(4)).unwrap();
        let text = emit_report(&a, ReportFormat::Csv).unwrap();
        let b = read_csv_report(text.as_bytes()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn markdown_rows_and_footer() {
        let mut r = run_monte_carlo_on(&congested(), &cfg(2)).unwrap();
        let md = emit_report(&r, ReportFormat::Markdown).unwrap();
        assert_eq!(md.lines().count(), 2 + 3);
        r.infeasible_trials = 1;
        let md = emit_report(&r, ReportFormat::Markdown).unwrap();
        assert!(md.lines().last().unwrap().starts_with("| excluded | 1 infeasible"));
    }

    #[test]
    fn rejects_bad_config() {
        let net = congested();
        assert!(run_monte_carlo_on(&net, &cfg(0)).is_err());
        let c = ExperimentConfig { cost_scale_low: 2.0, cost_scale_high: 1.0, ..cfg(1) };
        assert!(run_monte_carlo_on(&net, &c).is_err());
    }
}
