use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{self, pick, ConfigFile, ParamLists, Preset};
use super::io::{self, Cell, Table};
use super::{
    usage, CliError, Command, CompareArgs, ComparePreset, DetectArgs, EmbedArgs, EmbedderArg,
    ExponentArgs, KeyArgs, OutputFormat, SimKind, SimPreset, SimulateArgs, SweepArgs, SweepAxis,
    SweepPreset, ValidateArgs,
};
use crate::detector::detect;
use crate::embedder::{embed_optimal, embed_sign};
use crate::exponents::{
    efn_closed_form, max_oracle_deviation, positivity_thresholds, validation_grid,
    DEFAULT_ORACLE_TOL,
};
use crate::model::{derive_geometry, generate_watermark, HostSignal, SystemParams, WatermarkSequence};
use crate::simulate::{
    exponent_convergence_sweep, simulate_fn, simulate_fp, EmbedderKind, TrialBatchResult,
    TrialConfig,
};

pub const SWEEP_HEADER: &[&str] = &["axis_value", "e_fn", "r_star", "q_star", "method"];

pub const SIMULATE_HEADER: &[&str] = &[
    "n",
    "trials",
    "failures",
    "p_hat",
    "ci_low",
    "ci_high",
    "empirical_exponent",
    "theory_exponent",
    "master_seed",
];

pub const COMPARE_HEADER: &[&str] = &[
    "lambda",
    "e_fn_theory",
    "failures_optimal",
    "p_hat_optimal",
    "ci_low_optimal",
    "ci_high_optimal",
    "empirical_optimal",
    "failures_sign",
    "p_hat_sign",
    "ci_low_sign",
    "ci_high_sign",
    "empirical_sign",
    "lambda1",
    "lambda2",
    "n",
    "trials",
    "master_seed",
];

const DEFAULT_MASTER_SEED: u64 = 1;

pub(super) fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Exponent(a) => exponent(a),
        Command::Sweep(a) => sweep(a),
        Command::Simulate(a) => simulate(a),
        Command::CompareEmbedders(a) => compare(a),
        Command::Validate(a) => validate(a),
        Command::Embed(a) => embed(a),
        Command::Detect(a) => detect_cmd(a),
    }
}

/// Serialized name of a unit enum variant.
fn label<T: Serialize>(value: &T) -> String {
    match serde_json::to_value(value) {
        Ok(Value::String(s)) => s,
        other => format!("{other:?}"),
    }
}

fn print_json(value: &Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json value serializes"));
}

// Parameter order inside a combination: D, σ_X², σ_Z², λ.
const NAMES: [&str; 4] = ["D", "sx2", "sz2", "lambda"];

#[derive(Debug, Clone)]
struct Combo {
    values: [f64; 4],
    suffix: String,
}

impl Combo {
    fn params(&self) -> Result<SystemParams, CliError> {
        let [d, sx2, sz2, lambda] = self.values;
        Ok(SystemParams::new(sx2, sz2, d, lambda)?)
    }

    fn with(&self, slot: usize, value: f64) -> Combo {
        let mut c = self.clone();
        c.values[slot] = value;
        c
    }
}

/// Cartesian product of the parameter lists. `free` names a slot supplied
/// later (a sweep axis); it must not be set.
fn combinations(lists: &ParamLists, free: Option<usize>) -> Result<Vec<Combo>, CliError> {
    let slots = [&lists.distortion, &lists.sx2, &lists.sz2, &lists.lambda];
    let mut combos = vec![Combo {
        values: [f64::NAN; 4],
        suffix: String::new(),
    }];
    for (slot, values) in slots.iter().enumerate() {
        if Some(slot) == free {
            if !values.is_empty() {
                return Err(usage(format!("--{} is set by the sweep axis", NAMES[slot])));
            }
            continue;
        }
        if values.is_empty() {
            return Err(usage(format!("missing --{}", NAMES[slot])));
        }
        let tag = values.len() > 1;
        combos = combos
            .into_iter()
            .flat_map(|c| {
                values.iter().map(move |&v| {
                    let mut next = c.with(slot, v);
                    if tag {
                        if !next.suffix.is_empty() {
                            next.suffix.push('_');
                        }
                        next.suffix.push_str(&format!("{}_{v}", NAMES[slot]));
                    }
                    next
                })
            })
            .collect();
    }
    Ok(combos)
}

fn single(lists: &ParamLists, free: Option<usize>, command: &str) -> Result<Combo, CliError> {
    let mut combos = combinations(lists, free)?;
    if combos.len() != 1 {
        return Err(usage(format!("{command} takes one value per parameter")));
    }
    Ok(combos.remove(0))
}

/// Validates every combination up front so that no work starts on bad input.
fn validate_all(combos: &[Combo]) -> Result<Vec<SystemParams>, CliError> {
    combos.iter().map(Combo::params).collect()
}

fn outputs(output: Option<&Path>, combos: &[Combo]) -> Result<Vec<Option<PathBuf>>, CliError> {
    match output {
        Some(p) => Ok(combos.iter().map(|c| Some(io::with_suffix(p, &c.suffix))).collect()),
        None if combos.len() == 1 => Ok(vec![None]),
        None => Err(usage("several series requested; pass --output")),
    }
}

fn write_table(path: Option<&Path>, table: &Table, format: OutputFormat) -> Result<(), CliError> {
    io::emit(path, &table.render(format))?;
    if let Some(p) = path {
        eprintln!("wrote {} rows to {}", table.len(), p.display());
    }
    Ok(())
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(usage("--threads must be at least 1")),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| CliError::Failed(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// `points` evenly spaced values from `start` to `end` inclusive.
fn linspace(start: f64, end: f64, points: usize) -> Result<Vec<f64>, CliError> {
    if !(start.is_finite() && end.is_finite()) {
        return Err(usage("grid bounds must be finite"));
    }
    if points == 1 {
        return Ok(vec![start]);
    }
    if points == 0 || !(start < end) {
        return Err(usage(format!(
            "need start < end and points >= 2, got [{start}, {end}] with {points} points"
        )));
    }
    let step = (end - start) / (points - 1) as f64;
    Ok((0..points)
        .map(|k| if k + 1 == points { end } else { start + step * k as f64 })
        .collect())
}

fn exponent(args: ExponentArgs) -> Result<(), CliError> {
    let cfg = ConfigFile::load(args.params.config.as_deref())?;
    let lists = ParamLists::merge(&args.params, &cfg, &ParamLists::default());
    let params = single(&lists, None, "exponent")?.params()?;
    let report = efn_closed_form(&params)?;
    let mut value = serde_json::to_value(report)?;
    value["seed"] = Value::Null;
    print_json(&value);
    Ok(())
}

fn axis_slot(axis: SweepAxis) -> usize {
    match axis {
        SweepAxis::Distortion => 0,
        SweepAxis::Sx2 | SweepAxis::Sx => 1,
        SweepAxis::Sz2 | SweepAxis::Sz => 2,
        SweepAxis::Lambda => 3,
    }
}

fn sweep(args: SweepArgs) -> Result<(), CliError> {
    let cfg = ConfigFile::load(args.params.config.as_deref())?;
    let preset = match args.preset {
        Some(SweepPreset::Fig2) => config::fig2(),
        Some(SweepPreset::Fig3) => config::fig3(),
        Some(SweepPreset::Fig4) => config::fig4(),
        None => Preset::default(),
    };
    let axis = pick(args.axis, cfg.axis, preset.axis).ok_or_else(|| usage("missing --axis"))?;
    let start = pick(args.start, cfg.start, preset.start).ok_or_else(|| usage("missing --start"))?;
    let end = pick(args.end, cfg.end, preset.end).ok_or_else(|| usage("missing --end"))?;
    let points = pick(args.points, cfg.points, preset.points).ok_or_else(|| usage("missing --points"))?;
    if points < 2 {
        return Err(usage("--points must be at least 2"));
    }
    let grid = linspace(start, end, points)?;
    let format = pick(args.format, cfg.format, None).unwrap_or_default();

    let slot = axis_slot(axis);
    let squared = matches!(axis, SweepAxis::Sz | SweepAxis::Sx);
    let lists = ParamLists::merge(&args.params, &cfg, &preset.params);
    let combos = combinations(&lists, Some(slot))?;
    let paths = outputs(args.output.as_deref(), &combos)?;

    let mut tables = Vec::with_capacity(combos.len());
    for combo in &combos {
        let points: Vec<SystemParams> = grid
            .iter()
            .map(|&v| combo.with(slot, if squared { v * v } else { v }).params())
            .collect::<Result<_, _>>()?;
        let reports = points
            .par_iter()
            .map(efn_closed_form)
            .collect::<Result<Vec<_>, _>>()?;
        let mut table = Table::new(SWEEP_HEADER);
        for (v, rep) in grid.iter().zip(&reports) {
            table.push(vec![
                Cell::from(*v),
                Cell::from(rep.e_fn),
                Cell::from(rep.r_star),
                Cell::from(rep.q_star),
                Cell::Text(label(&rep.method)),
            ]);
        }
        tables.push(table);
    }
    for (table, path) in tables.iter().zip(&paths) {
        write_table(path.as_deref(), table, format)?;
    }
    Ok(())
}

fn batch_row(res: &TrialBatchResult, theory: f64) -> Vec<Cell> {
    vec![
        Cell::from(res.n),
        Cell::from(res.trials),
        Cell::from(res.failures),
        Cell::from(res.p_hat),
        Cell::from(res.ci_low),
        Cell::from(res.ci_high),
        Cell::from(res.empirical_exponent),
        Cell::from(theory),
        Cell::from(res.master_seed),
    ]
}

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let cfg = ConfigFile::load(args.params.config.as_deref())?;
    let preset = match args.preset {
        Some(SimPreset::Fig5) => config::fig5(),
        Some(SimPreset::Fig6) => config::fig6(),
        None => Preset::default(),
    };
    let lists = ParamLists::merge(&args.params, &cfg, &preset.params);
    let combos = combinations(&lists, None)?;
    let all_params = validate_all(&combos)?;
    let n_list = if args.n_list.is_empty() {
        pick(None, cfg.n_list.clone(), preset.n_list.clone()).ok_or_else(|| usage("missing --n-list"))?
    } else {
        args.n_list.clone()
    };
    let trials = pick(args.run.trials, cfg.trials, preset.trials).ok_or_else(|| usage("missing --trials"))?;
    if trials == 0 {
        return Err(crate::error::Error::invalid("trials", "must be >= 1").into());
    }
    let master_seed = pick(args.run.master_seed, cfg.master_seed, None).unwrap_or(DEFAULT_MASTER_SEED);
    let threads = pick(args.run.threads, cfg.threads, None);
    let embedder = match pick(args.embedder, cfg.embedder()?, None) {
        Some(e) => EmbedderKind::from(e),
        None if args.kind == SimKind::Fn => EmbedderKind::Optimal,
        None => EmbedderKind::None,
    };
    let pinned_watermark = pick(args.pin_watermark, cfg.pin_watermark, None);
    let format = pick(args.format, cfg.format, None).unwrap_or_default();
    let paths = outputs(args.output.as_deref(), &combos)?;

    let tables = with_threads(threads, || -> Result<Vec<Table>, CliError> {
        let mut tables = Vec::with_capacity(all_params.len());
        for params in &all_params {
            let base = TrialConfig {
                n: n_list.first().copied().unwrap_or(1),
                trials,
                params: *params,
                embedder,
                master_seed,
                pinned_watermark,
            };
            let mut table = Table::new(SIMULATE_HEADER);
            match args.kind {
                SimKind::Fn => {
                    let theory = efn_closed_form(params)?.e_fn;
                    for (_, res) in exponent_convergence_sweep(&base, &n_list)? {
                        table.push(batch_row(&res, theory));
                    }
                }
                SimKind::Fp => {
                    for &n in &n_list {
                        let res = simulate_fp(&TrialConfig { n, ..base })?;
                        table.push(batch_row(&res, params.fp_exponent));
                    }
                }
            }
            tables.push(table);
        }
        Ok(tables)
    })??;
    for (table, path) in tables.iter().zip(&paths) {
        write_table(path.as_deref(), table, format)?;
    }
    Ok(())
}

fn compare(args: CompareArgs) -> Result<(), CliError> {
    let cfg = ConfigFile::load(args.params.config.as_deref())?;
    let preset = match args.preset {
        Some(ComparePreset::Fig7) => config::fig7(),
        None => Preset::default(),
    };
    let lists = ParamLists::merge(&args.params, &cfg, &preset.params);
    let fixed = ParamLists {
        lambda: Vec::new(),
        ..lists.clone()
    };
    let base = single(&fixed, Some(3), "compare-embedders")?;
    let lambdas = if lists.lambda.is_empty() {
        let start = pick(args.start, cfg.start, preset.start).ok_or_else(|| usage("missing --start or --lambda"))?;
        let points = pick(args.points, cfg.points, preset.points).unwrap_or(1);
        let end = pick(args.end, cfg.end, preset.end).unwrap_or(start);
        linspace(start, end, points)?
    } else {
        lists.lambda.clone()
    };
    let all_params: Vec<SystemParams> = lambdas
        .iter()
        .map(|&l| base.with(3, l).params())
        .collect::<Result<_, _>>()?;
    let n = pick(args.n, cfg.n, preset.n).ok_or_else(|| usage("missing --n"))?;
    let trials = pick(args.run.trials, cfg.trials, preset.trials).ok_or_else(|| usage("missing --trials"))?;
    let master_seed = pick(args.run.master_seed, cfg.master_seed, None).unwrap_or(DEFAULT_MASTER_SEED);
    let threads = pick(args.run.threads, cfg.threads, None);
    let format = pick(args.format, cfg.format, None).unwrap_or_default();
    let [d, sx2, _, _] = base.values;
    let (lambda1, lambda2) = positivity_thresholds(d, sx2)?;

    let table = with_threads(threads, || -> Result<Table, CliError> {
        let mut table = Table::new(COMPARE_HEADER);
        for params in &all_params {
            let run = |embedder| {
                simulate_fn(&TrialConfig {
                    n,
                    trials,
                    params: *params,
                    embedder,
                    master_seed,
                    pinned_watermark: None,
                })
            };
            let theory = efn_closed_form(params)?.e_fn;
            let opt = run(EmbedderKind::Optimal)?;
            let sign = run(EmbedderKind::Sign)?;
            table.push(vec![
                Cell::from(params.fp_exponent),
                Cell::from(theory),
                Cell::from(opt.failures),
                Cell::from(opt.p_hat),
                Cell::from(opt.ci_low),
                Cell::from(opt.ci_high),
                Cell::from(opt.empirical_exponent),
                Cell::from(sign.failures),
                Cell::from(sign.p_hat),
                Cell::from(sign.ci_low),
                Cell::from(sign.ci_high),
                Cell::from(sign.empirical_exponent),
                Cell::from(lambda1),
                Cell::from(lambda2),
                Cell::from(n),
                Cell::from(trials),
                Cell::from(master_seed),
            ]);
        }
        Ok(table)
    })??;
    write_table(args.output.as_deref(), &table, format)
}

fn validate(args: ValidateArgs) -> Result<(), CliError> {
    if !(args.tol > 0.0) {
        return Err(usage(format!("--tol must be positive, got {}", args.tol)));
    }
    let grid = validation_grid();
    let Some(worst) = max_oracle_deviation(&grid, DEFAULT_ORACLE_TOL)? else {
        return Err(CliError::Failed("empty validation grid".into()));
    };
    let p = worst.params;
    let summary = format!(
        "max |closed form - oracle| = {} over {} points, at D={} sx2={} sz2={} lambda={} (closed form {}, oracle {})",
        io::real(worst.deviation),
        grid.len(),
        p.distortion,
        p.host_variance,
        p.attack_variance,
        p.fp_exponent,
        io::real(worst.closed_form),
        io::real(worst.oracle),
    );
    if worst.deviation < args.tol {
        println!("ok: {summary}");
        Ok(())
    } else {
        Err(CliError::Failed(format!("tolerance {} exceeded: {summary}", args.tol)))
    }
}

fn load_key(key: &KeyArgs, n: usize) -> Result<(WatermarkSequence, Option<u64>), CliError> {
    match (key.seed, &key.watermark) {
        (Some(seed), None) => Ok((generate_watermark(n, seed)?, Some(seed))),
        (None, Some(path)) => {
            let u = io::read_watermark(path)?;
            if u.len() != n {
                return Err(crate::error::Error::LengthMismatch {
                    expected: n,
                    actual: u.len(),
                }
                .into());
            }
            Ok((u, None))
        }
        _ => Err(usage("exactly one of --seed or --watermark is required")),
    }
}

fn embed(args: EmbedArgs) -> Result<(), CliError> {
    let samples = io::read_signal(&args.input)?;
    let (u, seed) = load_key(&args.key, samples.len())?;
    let host = HostSignal::new(samples)?;
    let distortion = args.distortion.ok_or_else(|| usage("missing --D"))?;
    let result = match args.embedder {
        EmbedderArg::Optimal => {
            let lambda = args.lambda.ok_or_else(|| usage("missing --lambda"))?;
            embed_optimal(&host, &u, distortion, &derive_geometry(lambda)?)?
        }
        EmbedderArg::Sign => embed_sign(&host, &u, distortion)?,
        EmbedderArg::None => return Err(usage("embed needs --embedder optimal or sign")),
    };
    let sidecar = args.sidecar.clone().unwrap_or_else(|| {
        let mut name = args.output.clone().into_os_string();
        name.push(".json");
        PathBuf::from(name)
    });
    let meta = json!({
        "n": host.len(),
        "a": result.a,
        "b": result.b,
        "r": result.coords.r,
        "alpha": result.coords.alpha,
        "distortion_used": result.distortion_used,
        "branch": label(&result.branch),
        "D": distortion,
        "lambda": args.lambda,
        "seed": seed,
    });
    io::write_atomic(&args.output, &io::signal_csv(&result.y))?;
    io::write_atomic(&sidecar, &(serde_json::to_string_pretty(&meta)? + "\n"))?;
    Ok(())
}

fn detect_cmd(args: DetectArgs) -> Result<(), CliError> {
    let s = io::read_signal(&args.input)?;
    let (u, seed) = load_key(&args.key, s.len())?;
    let lambda = args.lambda.ok_or_else(|| usage("missing --lambda"))?;
    let report = detect(&s, &u, &derive_geometry(lambda)?)?;
    let mut value = serde_json::to_value(report)?;
    value["present"] = Value::Bool(report.decision);
    value["n"] = json!(s.len());
    value["seed"] = json!(seed);
    print_json(&value);
    Ok(())
}
