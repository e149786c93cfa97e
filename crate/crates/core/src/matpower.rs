//! Import of MATPOWER-style `.m` case files.
//!
//! Only the parts the DC model needs are read: `baseMVA`, the bus table
//! (id, type, Pd), the generator table (bus, status, Pmax, Pmin), the branch
//! table (from, to, x, rateA, status) and the generator cost table.
//!
//! Susceptances are `baseMVA / x`, so flows are in MW when angles are in
//! radians. A `rateA` of zero means unrated. Out-of-service generators are
//! dropped; out-of-service branches are kept and marked out of service.

use crate::error::GridError;
use crate::grid::{Bus, BusId, GenId, Generator, Line, LineId, LineStatus, Network};

fn table(text: &str, name: &'static str) -> Result<Vec<Vec<f64>>, GridError> {
    let key = format!("mpc.{name}");
    let start = text
        .match_indices(&key)
        .map(|(i, _)| i + key.len())
        .find(|&i| text[i..].trim_start().starts_with('='))
        .ok_or(GridError::MissingTable(name))?;
    let body = &text[start..];
    let open = body.find('[').ok_or(GridError::MissingTable(name))?;
    let close = body[open..]
        .find(']')
        .ok_or_else(|| GridError::Legacy(format!("unterminated table `{name}`")))?;
    let mut rows = Vec::new();
    for raw_line in body[open + 1..open + close].lines() {
        let line = raw_line.split('%').next().unwrap_or("");
        for chunk in line.split(';') {
            let cells: Vec<&str> = chunk
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .collect();
            if cells.is_empty() {
                continue;
            }
            let row = cells
                .iter()
                .map(|c| {
                    c.parse::<f64>()
                        .map_err(|_| GridError::Legacy(format!("bad number `{c}` in table `{name}`")))
                })
                .collect::<Result<Vec<f64>, _>>()?;
            rows.push(row);
        }
    }
    Ok(rows)
}

fn scalar(text: &str, name: &str) -> Option<f64> {
    let key = format!("mpc.{name}");
    let i = text.find(&key)? + key.len();
    let rest = text[i..].trim_start().strip_prefix('=')?;
    rest.split(';').next()?.trim().parse().ok()
}

fn col(row: &[f64], i: usize, name: &str) -> Result<f64, GridError> {
    row.get(i)
        .copied()
        .ok_or_else(|| GridError::Legacy(format!("{name} row has only {} columns", row.len())))
}

fn as_id(v: f64, what: &str) -> Result<u32, GridError> {
    if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
        Ok(v as u32)
    } else {
        Err(GridError::Legacy(format!("{what} id {v} is not a positive integer")))
    }
}

/// How to treat cost data the linear model cannot represent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ImportOptions {
    /// Drop polynomial terms above first order instead of failing.
    pub drop_nonlinear_costs: bool,
}

/// Linear marginal cost from one gencost row.
fn linear_cost(row: &[f64], gen: GenId, opts: ImportOptions) -> Result<f64, GridError> {
    let model = col(row, 0, "gencost")?;
    if model != 2.0 {
        return Err(GridError::Legacy(format!(
            "generator {gen}: only polynomial cost rows (model 2) are supported"
        )));
    }
    let n = col(row, 3, "gencost")? as usize;
    let coeffs: Vec<f64> = (0..n).map(|k| col(row, 4 + k, "gencost")).collect::<Result<_, _>>()?;
    // Highest order first; anything above linear must vanish.
    for (k, &c) in coeffs.iter().enumerate() {
        let order = n - 1 - k;
        if order >= 2 && c != 0.0 && !opts.drop_nonlinear_costs {
            return Err(GridError::NonlinearCost { gen, coeff: c });
        }
    }
    Ok(if n >= 2 { coeffs[n - 2] } else { 0.0 })
}

pub fn import_legacy_case(text: &str) -> Result<Network, GridError> {
    import_legacy_case_with(text, ImportOptions::default())
}

pub fn import_legacy_case_with(text: &str, opts: ImportOptions) -> Result<Network, GridError> {
    let base = scalar(text, "baseMVA").unwrap_or(100.0);
    let bus_rows = table(text, "bus")?;
    let gen_rows = table(text, "gen")?;
    let branch_rows = table(text, "branch")?;
    let cost_rows = table(text, "gencost")?;
    if cost_rows.len() < gen_rows.len() {
        return Err(GridError::Legacy(format!(
            "{} generators but only {} cost rows",
            gen_rows.len(),
            cost_rows.len()
        )));
    }

    let mut reference = None;
    let mut buses = Vec::with_capacity(bus_rows.len());
    for row in &bus_rows {
        let id = BusId(as_id(col(row, 0, "bus")?, "bus")?);
        if col(row, 1, "bus")? == 3.0 && reference.is_none() {
            reference = Some(id);
        }
        buses.push(Bus { id, load: col(row, 2, "bus")? });
    }

    let mut gens = Vec::new();
    for (i, (row, cost_row)) in gen_rows.iter().zip(&cost_rows).enumerate() {
        let id = GenId(i as u32 + 1);
        let cost = linear_cost(cost_row, id, opts)?;
        if col(row, 7, "gen")? <= 0.0 {
            continue;
        }
        gens.push(Generator {
            id,
            bus: BusId(as_id(col(row, 0, "gen")?, "bus")?),
            cost,
            p_min: col(row, 9, "gen")?,
            p_max: col(row, 8, "gen")?,
        });
    }

    let mut lines = Vec::with_capacity(branch_rows.len());
    for (i, row) in branch_rows.iter().enumerate() {
        let x = col(row, 3, "branch")?;
        let rate = col(row, 5, "branch")?;
        let status = if row.get(10).copied().unwrap_or(1.0) > 0.0 {
            LineStatus::InService
        } else {
            LineStatus::OutOfService
        };
        lines.push(Line {
            id: LineId(i as u32 + 1),
            from: BusId(as_id(col(row, 0, "branch")?, "bus")?),
            to: BusId(as_id(col(row, 1, "branch")?, "bus")?),
            susceptance: if x > 0.0 { base / x } else { f64::NAN },
            capacity: if rate > 0.0 { rate } else { f64::INFINITY },
            status,
        });
    }

    Network::new(buses, lines, gens, reference)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
function mpc = tiny
mpc.version = '2';
mpc.baseMVA = 100;
%% bus data
mpc.bus = [
	1	3	0	0	0	0	1	1	0	135	1	1.06	0.94;
	2	1	50	0	0	0	1	1	0	135	1	1.06	0.94;
	3	1	30	0	0	0	1	1	0	135	1	1.06	0.94;
];
mpc.gen = [
	1	0	0	10	-10	1	100	1	100	0	0	0	0	0	0	0	0	0	0	0	0;
	3	0	0	10	-10	1	100	0	100	0	0	0	0	0	0	0	0	0	0	0	0;
];
mpc.branch = [
	1	2	0.01	0.1	0	40	0	0	0	0	1	-360	360;
	2	3	0.01	0.2	0	0	0	0	0	0	1	-360	360;
	1	3	0.01	0.5	0	0	0	0	0	0	0	-360	360;
];
mpc.gencost = [
	2	0	0	3	0	20	0;
	2	0	0	2	35	0;
];
"#;

    #[test]
    fn imports_small_case() {
        let net = import_legacy_case(SMALL).unwrap();
        assert_eq!(net.buses().len(), 3);
        assert_eq!(net.generators().len(), 1);
        assert_eq!(net.generators()[0].cost, 20.0);
        assert_eq!(net.lines().len(), 3);
        assert!((net.lines()[0].susceptance - 1000.0).abs() < 1e-9);
        assert_eq!(net.lines()[0].capacity, 40.0);
        assert!(net.lines()[1].capacity.is_infinite());
        assert_eq!(net.lines()[2].status, LineStatus::OutOfService);
        assert_eq!(net.reference_bus(), BusId(1));
    }

    #[test]
    fn rejects_quadratic_cost() {
        let text = SMALL.replace("2	0	0	3	0	20	0;", "2	0	0	3	0.01	20	0;");
        match import_legacy_case(&text) {
            Err(GridError::NonlinearCost { gen, coeff }) => {
                assert_eq!(gen, GenId(1));
                assert_eq!(coeff, 0.01);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn drops_quadratic_cost_on_request() {
        let text = SMALL.replace("2	0	0	3	0	20	0;", "2	0	0	3	0.01	20	0;");
        let opts = ImportOptions { drop_nonlinear_costs: true };
        let net = import_legacy_case_with(&text, opts).unwrap();
        assert_eq!(net.generators()[0].cost, 20.0);
    }

    #[test]
    fn missing_table() {
        let text = SMALL.replace("mpc.gencost", "mpc.gcost");
        assert!(matches!(import_legacy_case(&text), Err(GridError::MissingTable("gencost"))));
    }
}
