//! Batch runs over settings, sizes, seeds and threshold cases.
//!
//! A case is either `none` (instance thresholds) or `(a,b)`: first the
//! min-max handover and min-max outage optima H*, O* are solved, then total
//! distance is minimized under `H^max = (1 + a/100) H*` and
//! `O^max = (1 + b/100) O*`.
//!
//! CSV columns: setting, n_customers, seed, case, algo, n_drones, h_star,
//! o_star, h_max, o_max, objective, feasible, max_handovers, max_outage_s,
//! trips, generations, wall_time_s, error. Empty cells mean "not
//! applicable"; `error` is empty on success.

use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use cddp::arcs::MetricMatrix;
use cddp::exact::{enumerate_optimal, search_estimate, EnumerationBounds};
use cddp::ga::{self, GaConfig};
use cddp::instance::{generate, GeneratorConfig, Instance, Setting, Thresholds};
use cddp::solution::{EvalResult, ObjectiveKind};

use crate::CliError;

pub const HEADER: [&str; 18] = [
    "setting",
    "n_customers",
    "seed",
    "case",
    "algo",
    "n_drones",
    "h_star",
    "o_star",
    "h_max",
    "o_max",
    "objective",
    "feasible",
    "max_handovers",
    "max_outage_s",
    "trips",
    "generations",
    "wall_time_s",
    "error",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdCase {
    pub name: String,
    /// Percent relaxations of (H*, O*).
    pub relax: Option<(f64, f64)>,
}

impl FromStr for ThresholdCase {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let t = s.trim();
        if t == "none" {
            return Ok(Self {
                name: t.into(),
                relax: None,
            });
        }
        let inner = t
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| CliError::Usage(format!("case {s:?} must be `none` or `(a,b)`")))?;
        let (a, b) = inner
            .split_once(',')
            .ok_or_else(|| CliError::Usage(format!("case {s:?} must be `none` or `(a,b)`")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite() && *x >= 0.0)
                .ok_or_else(|| CliError::Usage(format!("bad relaxation {v:?} in case {s:?}")))
        };
        let (a, b) = (parse(a)?, parse(b)?);
        Ok(Self {
            name: format!("({},{})", a, b),
            relax: Some((a, b)),
        })
    }
}

/// Splits `none,(20,10),(10,10)` at commas outside parentheses.
pub fn parse_cases(list: &str) -> Result<Vec<ThresholdCase>, CliError> {
    let mut out = Vec::new();
    let mut depth = 0;
    let mut cur = String::new();
    for ch in list.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(cur.parse()?);
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    if !cur.trim().is_empty() {
        out.push(cur.parse()?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum AlgoChoice {
    /// Exact when the search estimate fits the budget, GA otherwise.
    Auto,
    Ga,
    Exact,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub settings: Vec<Setting>,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub cases: Vec<ThresholdCase>,
    pub algo: AlgoChoice,
    pub ga: GaConfig,
    pub bounds: EnumerationBounds,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BenchRow {
    pub setting: String,
    pub n_customers: usize,
    pub seed: u64,
    pub case: String,
    pub algo: String,
    pub n_drones: Option<usize>,
    pub h_star: Option<f64>,
    pub o_star: Option<f64>,
    pub h_max: Option<f64>,
    pub o_max: Option<f64>,
    pub objective: Option<f64>,
    pub feasible: Option<bool>,
    pub max_handovers: Option<u32>,
    pub max_outage_s: Option<f64>,
    pub trips: Option<usize>,
    pub generations: Option<usize>,
    pub wall_time_s: Option<f64>,
    pub error: String,
}

struct Solved {
    algo: &'static str,
    value: Option<f64>,
    result: Option<EvalResult>,
    generations: Option<usize>,
}

fn solve(
    inst: &Instance,
    m: &MetricMatrix,
    kind: ObjectiveKind,
    cfg: &BenchConfig,
    seed: u64,
) -> Result<Solved, CliError> {
    let exact = match cfg.algo {
        AlgoChoice::Exact => true,
        AlgoChoice::Ga => false,
        AlgoChoice::Auto => search_estimate(inst, cfg.bounds.max_trips(inst)) <= cfg.bounds.budget,
    };
    if exact {
        let out = enumerate_optimal(inst, m, &cfg.bounds, kind)?;
        Ok(Solved {
            algo: "exact",
            value: out.value,
            result: out.result,
            generations: None,
        })
    } else {
        let ga_cfg = GaConfig {
            objective: kind,
            seed,
            ..cfg.ga.clone()
        };
        let out = ga::run(inst, m, &ga_cfg)?;
        let feasible = out.feasible;
        Ok(Solved {
            algo: "ga",
            value: feasible.then_some(out.objective_value),
            generations: Some(out.stats.generations),
            result: Some(out.result),
        })
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn run_case(
    inst: &Instance,
    m: &MetricMatrix,
    case: &ThresholdCase,
    stars: &mut Option<(f64, f64)>,
    cfg: &BenchConfig,
    row: &mut BenchRow,
    seed: u64,
) -> Result<(), CliError> {
    let mut inst = inst.clone();
    if let Some((a, b)) = case.relax {
        if stars.is_none() {
            let h = solve(&inst, m, ObjectiveKind::MinmaxHandover, cfg, seed)?;
            let o = solve(&inst, m, ObjectiveKind::MinmaxOutage, cfg, seed)?;
            match (h.value, o.value) {
                (Some(h), Some(o)) => *stars = Some((h, o)),
                _ => return Err(CliError::Usage("no feasible plan for the min-max pre-runs".into())),
            }
        }
        let (h, o) = stars.unwrap();
        row.h_star = Some(h);
        row.o_star = Some(o);
        inst.thresholds = Thresholds::new(h * (1.0 + a / 100.0), o * (1.0 + b / 100.0));
    }
    row.h_max = finite(inst.thresholds.h_max);
    row.o_max = finite(inst.thresholds.o_max);
    let s = solve(&inst, m, ObjectiveKind::TotalDistance, cfg, seed)?;
    row.algo = s.algo.into();
    row.objective = s.value;
    row.generations = s.generations;
    row.feasible = Some(s.result.as_ref().is_some_and(|r| r.is_feasible()));
    if let Some(r) = &s.result {
        row.max_handovers = Some(r.max_handovers());
        row.max_outage_s = Some(r.max_outage_s());
        row.trips = Some(r.trips.len());
    }
    Ok(())
}

/// Runs the cross product; failures are recorded in the row's `error` cell.
pub fn run_bench(cfg: &BenchConfig) -> Vec<BenchRow> {
    let mut rows = Vec::new();
    for setting in &cfg.settings {
        for &size in &cfg.sizes {
            for &seed in &cfg.seeds {
                let gen_cfg = GeneratorConfig::new(*setting, size, seed);
                let built = generate(&gen_cfg).and_then(|inst| {
                    let m = inst.metric_matrix()?;
                    Ok((inst, m))
                });
                let mut stars = None;
                for case in &cfg.cases {
                    let started = Instant::now();
                    let mut row = BenchRow {
                        setting: setting.to_string(),
                        n_customers: size,
                        seed,
                        case: case.name.clone(),
                        ..BenchRow::default()
                    };
                    match &built {
                        Ok((inst, m)) => {
                            row.n_drones = Some(inst.n_drones());
                            if let Err(e) = run_case(inst, m, case, &mut stars, cfg, &mut row, seed) {
                                row.error = e.to_string();
                            }
                        }
                        Err(e) => row.error = e.to_string(),
                    }
                    row.wall_time_s = Some(started.elapsed().as_secs_f64());
                    rows.push(row);
                }
            }
        }
    }
    rows
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::Io {
        path: "<csv>".into(),
        source: e,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_parsing() {
        let cases = parse_cases("none,(20,10), (10,10)").unwrap();
        assert_eq!(cases.len(), 3);
        assert_eq!(cases[0].relax, None);
        assert_eq!(cases[1].relax, Some((20.0, 10.0)));
        assert_eq!(cases[1].name, "(20,10)");
        assert!(parse_cases("(20)").is_err());
        assert!(parse_cases("(a,b)").is_err());
    }
}
