use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use cddp::arcs::MetricMatrix;
use cddp::comm::CommParams;
use cddp::exact::{enumerate_optimal, export_mps, verify_against_mps, EnumerationBounds, MipExportConfig};
use cddp::ga::{self, GaConfig};
use cddp::instance::{generate, illustrative, GeneratorConfig, Instance, NodeKind, Setting, Thresholds};
use cddp::solution::{check_feasibility, Plan};

use crate::bench::{self, BenchConfig};
use crate::report::RunReport;
use crate::{
    BenchArgs, CliError, Command, EvalArgs, ExportArgs, GenArgs, PlotArgs, SolveArgs, VerifyArgs, DEFAULT_OUT_DIR,
    EXIT_FEASIBLE, EXIT_INFEASIBLE, OUT_DIR_ENV,
};

type Result<T> = std::result::Result<T, CliError>;

pub fn run(command: Command) -> Result<u8> {
    match command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::ExportMps(a) => cmd_export(&a),
        Command::VerifyMps(a) => cmd_verify(&a),
        Command::Plot(a) => cmd_plot(&a),
        Command::Bench(a) => cmd_bench(&a),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Prints to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn exit_for(feasible: bool) -> u8 {
    if feasible {
        EXIT_FEASIBLE
    } else {
        EXIT_INFEASIBLE
    }
}

/// `inst.json` caches its arc metrics in `inst.metrics.json`.
pub fn sidecar_path(instance: &Path) -> PathBuf {
    instance.with_extension("metrics.json")
}

/// Loads an instance with its metric matrix, then applies threshold
/// overrides. The matrix does not depend on thresholds, so the sidecar is
/// keyed by the file as written.
pub fn load_with_metrics(path: &Path, hmax: Option<f64>, omax: Option<f64>) -> Result<(Instance, MetricMatrix)> {
    let mut inst = Instance::load(path)?;
    let matrix = inst.metric_matrix_cached(&sidecar_path(path))?;
    apply_thresholds(&mut inst, hmax, omax)?;
    Ok((inst, matrix))
}

pub fn apply_thresholds(inst: &mut Instance, hmax: Option<f64>, omax: Option<f64>) -> Result<()> {
    for (name, v) in [("--hmax", hmax), ("--omax", omax)] {
        if let Some(v) = v {
            if v.is_nan() || v < 0.0 {
                return Err(CliError::Usage(format!("{name} must be non-negative, got {v}")));
            }
        }
    }
    inst.thresholds = Thresholds::new(
        hmax.unwrap_or(inst.thresholds.h_max),
        omax.unwrap_or(inst.thresholds.o_max),
    );
    Ok(())
}

/// A fresh `<base>/<hash>-<unix seconds>` directory, where the base comes
/// from `CDDP_OUT_DIR` or defaults to `runs`.
pub fn run_dir(hash: &str) -> PathBuf {
    let base = std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut dir = base.join(format!("{hash}-{secs}"));
    let mut k = 1;
    while dir.exists() {
        dir = base.join(format!("{hash}-{secs}-{k}"));
        k += 1;
    }
    dir
}

fn parse_setting(code: &str) -> Result<Setting> {
    code.parse().map_err(|e: cddp::Error| CliError::Usage(e.to_string()))
}

fn cmd_gen(a: &GenArgs) -> Result<u8> {
    let inst = if a.illustrative {
        illustrative(CommParams::default())?
    } else {
        let mut cfg = match &a.config {
            Some(p) => GeneratorConfig::from_json(&read_text(p)?)?,
            None => GeneratorConfig::new(
                parse_setting(a.setting.as_deref().unwrap_or_default())?,
                a.customers.unwrap_or_default(),
                a.seed.unwrap_or(0),
            ),
        };
        if let Some(code) = &a.setting {
            cfg.setting = parse_setting(code)?;
        }
        if let Some(n) = a.customers {
            cfg.n_customers = n;
        }
        if let Some(seed) = a.seed {
            cfg.seed = seed;
        }
        if cfg.n_customers == 0 {
            return Err(CliError::Usage("--customers must be at least 1".into()));
        }
        generate(&cfg)?
    };
    inst.save(&a.out)?;
    let count = |k: NodeKind| inst.nodes.iter().filter(|n| n.kind == k).count();
    println!(
        "wrote {}: {} labels ({} depots, {} customers, {} charging stations, {} waypoints), {} drones, hash {}",
        a.out.display(),
        inst.n_flyable(),
        count(NodeKind::Depot),
        count(NodeKind::Customer),
        count(NodeKind::ChargingStation),
        count(NodeKind::Waypoint),
        inst.n_drones(),
        inst.hash()
    );
    Ok(EXIT_FEASIBLE)
}

fn ga_config(
    config: &Option<PathBuf>,
    generations: Option<usize>,
    population: Option<usize>,
    time_limit: Option<f64>,
) -> Result<GaConfig> {
    let mut cfg = match config {
        Some(p) => GaConfig::from_json(&read_text(p)?, &p.display().to_string())?,
        None => GaConfig::default(),
    };
    if generations.is_some() {
        cfg.max_generations = generations;
    }
    if let Some(p) = population {
        cfg.population_size = p;
    }
    if let Some(t) = time_limit {
        cfg.time_limit_s = t;
    }
    Ok(cfg)
}

fn cmd_solve(a: &SolveArgs) -> Result<u8> {
    let (inst, matrix) = load_with_metrics(&a.instance, a.hmax, a.omax)?;
    let (plan, report, trace) = match a.algo {
        crate::Algo::Ga => {
            let mut cfg = ga_config(&a.config, a.generations, a.population, a.time_limit)?;
            cfg.objective = a.objective;
            if let Some(s) = a.seed {
                cfg.seed = s;
            }
            if let Some(c) = a.crossover {
                cfg.crossover = c.into();
            }
            let out = ga::run(&inst, &matrix, &cfg)?;
            let report = RunReport::from_ga(&inst, &out, a.objective, cfg.seed);
            (out.plan.clone(), report, Some(out.stats.trace_csv()))
        }
        crate::Algo::Exact => {
            let bounds = EnumerationBounds {
                max_interior_nodes_per_trip: a.max_interior,
                max_trips_per_drone: a.max_trips,
                node_whitelist: a.whitelist.clone(),
                budget: a.budget,
            };
            let started = Instant::now();
            let out = enumerate_optimal(&inst, &matrix, &bounds, a.objective)?;
            let report = RunReport::from_exact(&inst, &out, started.elapsed().as_secs_f64());
            let plan = out.plan.clone().unwrap_or_else(|| Plan::empty(inst.n_drones()));
            (plan, report, None)
        }
    };
    let report = report.with_bound(a.bound);
    let dir = a.out.clone().unwrap_or_else(|| run_dir(&report.instance_hash));
    write_text(&dir.join("plan.json"), &plan.to_json())?;
    write_text(&dir.join("report.json"), &report.to_json())?;
    if let Some(t) = trace {
        write_text(&dir.join("trace.csv"), &t)?;
    }
    match report.objective_value {
        Some(v) if report.feasible => println!("{}: {} = {v}, feasible", report.algorithm, report.objective),
        Some(v) => println!(
            "{}: {} = {v}, infeasible ({:?})",
            report.algorithm, report.objective, report.violated_classes
        ),
        None => println!("{}: no feasible plan", report.algorithm),
    }
    println!("artifacts in {}", dir.display());
    Ok(exit_for(report.feasible))
}

fn cmd_eval(a: &EvalArgs) -> Result<u8> {
    let (inst, matrix) = load_with_metrics(&a.instance, a.hmax, a.omax)?;
    let plan = Plan::load(&a.plan)?;
    plan.matches(&inst)?;
    let result = check_feasibility(&plan, &inst, &matrix);
    let json = result.to_json();
    match &a.out {
        Some(p) => write_text(p, &json)?,
        None => emit(&json),
    }
    Ok(exit_for(result.is_feasible()))
}

fn mip_config(battery_rows: Option<crate::BatteryRowsArg>, max_columns: usize) -> MipExportConfig {
    MipExportConfig {
        name: None,
        battery_rows: battery_rows.map(Into::into),
        max_columns,
    }
}

fn cmd_export(a: &ExportArgs) -> Result<u8> {
    let (inst, matrix) = load_with_metrics(&a.instance, a.hmax, a.omax)?;
    let mps = export_mps(&inst, &matrix, &mip_config(a.battery_rows, a.max_columns))?;
    write_text(&a.out, &mps)?;
    println!("wrote {}", a.out.display());
    Ok(EXIT_FEASIBLE)
}

fn cmd_verify(a: &VerifyArgs) -> Result<u8> {
    let (inst, matrix) = load_with_metrics(&a.instance, a.hmax, a.omax)?;
    let text = read_text(&a.solution)?;
    let cfg = mip_config(a.battery_rows, MipExportConfig::default().max_columns);
    let rep = verify_against_mps(&inst, &matrix, &cfg, &text, a.bound)?;
    let json = serde_json::to_string_pretty(&rep).expect("report serializes");
    match &a.out {
        Some(p) => write_text(p, &json)?,
        None => emit(&json),
    }
    Ok(exit_for(rep.feasible && rep.objective_agrees && rep.row_violations.is_empty()))
}

fn cmd_plot(a: &PlotArgs) -> Result<u8> {
    let inst = Instance::load(&a.instance)?;
    let plan = match &a.plan {
        Some(p) => Plan::load(p)?,
        None => Plan::empty(inst.n_drones()),
    };
    let svg = crate::plot::render_svg(&inst, &plan)?;
    write_text(&a.out, &svg)?;
    println!("wrote {}", a.out.display());
    Ok(EXIT_FEASIBLE)
}

fn cmd_bench(a: &BenchArgs) -> Result<u8> {
    let settings = a.settings.iter().map(|s| parse_setting(s)).collect::<Result<Vec<_>>>()?;
    let cfg = BenchConfig {
        settings,
        sizes: a.sizes.clone(),
        seeds: a.seeds.clone(),
        cases: bench::parse_cases(&a.cases)?,
        algo: a.algo,
        ga: ga_config(&a.config, a.generations, a.population, a.time_limit)?,
        bounds: EnumerationBounds {
            max_interior_nodes_per_trip: a.max_interior,
            budget: a.budget,
            ..EnumerationBounds::default()
        },
    };
    cfg.ga.validate()?;
    let rows = bench::run_bench(&cfg);
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let file = fs::File::create(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    bench::write_csv(&rows, file)?;
    let failed = rows.iter().filter(|r| !r.error.is_empty()).count();
    println!("wrote {} rows to {} ({failed} with errors)", rows.len(), a.out.display());
    Ok(EXIT_FEASIBLE)
}
