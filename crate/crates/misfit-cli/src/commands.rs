//! Command implementations: merge flags over config, run the library call,
//! write CSV plus a JSON metadata sidecar, map errors to exit codes.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use serde_json::json;

use misfit_core::bounds::{
    matched_crb, mcrb_from, nested_lb, pseudo_true, sandwich_matrices, BoundReport,
};
use misfit_core::estimators::{cmml_scatter, mml_closed, mml_fit, EstimateRecord};
use misfit_core::harness::{consistency_curve, sweep, EstimatorSpec, PriorSpec};
use misfit_core::models::{build_pair, Budget, EvalMethod, ModelPair, ModelSpec};
use misfit_core::seed::{derive_seed, domain};
use misfit_core::{Error as CoreError, Samples};

use crate::config::{
    merge_method, parse_grid, parse_prior, parse_usize_grid, FileConfig, ModelArgs,
};
use crate::{Cli, CliError, Command, ModelFlags, EXIT_NUMERIC};

const DEFAULT_SEED: u64 = 0x6d69_7366;

pub fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path).map_err(CliError::Parse)?,
        None => FileConfig::default(),
    };
    let seed = cli.seed.or(file.master_seed).unwrap_or(DEFAULT_SEED);
    let workers = cli.workers.or(file.workers);
    let out = cli.command_out(&file);

    let command = match cli.command {
        Some(c) => c,
        None => command_from_config(&file)?,
    };

    let run = || run_command(command, &file, seed, out.as_deref());
    match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| CliError::Io(format!("cannot build worker pool: {e}")))?;
            pool.install(run)
        }
        None => run(),
    }
}

impl Cli {
    fn command_out(&self, file: &FileConfig) -> Option<PathBuf> {
        self.out.clone().or_else(|| file.out.clone())
    }
}

/// A config file can name the command itself.
fn command_from_config(file: &FileConfig) -> Result<Command, CliError> {
    let name = file.command.as_deref().ok_or_else(|| {
        CliError::Parse("no subcommand given and the config file names none".into())
    })?;
    let m = ModelFlags::default();
    Ok(match name {
        "bound" => Command::Bound {
            model: m,
            m: None,
            method: None,
        },
        "estimate" => Command::Estimate {
            model: m,
            m: None,
            estimator: None,
        },
        "sweep" => Command::Sweep {
            model: m,
            param: None,
            grid: None,
            m: None,
            trials: None,
            method: None,
            estimator: None,
            prior: None,
        },
        "consistency" => Command::Consistency {
            model: m,
            grid: None,
            trials: None,
        },
        "bayes" => Command::Bayes {
            model: m,
            grid: None,
            prior: None,
        },
        "acceptance" => Command::Acceptance,
        other => {
            return Err(CliError::Parse(format!(
                "unknown command '{other}' in config (expected bound, estimate, sweep, \
                 consistency, bayes or acceptance)"
            )))
        }
    })
}

fn model_spec(flags: ModelFlags, file: &FileConfig) -> Result<ModelSpec, CliError> {
    ModelArgs {
        id: flags.model,
        mu_bar: flags.mu_bar,
        sigma2_bar: flags.sigma2_bar,
        rho: flags.rho,
        n: flags.n,
        lambda: flags.lambda,
        eta: flags.eta,
        scatter: flags.scatter,
    }
    .merge(file.model.as_ref())
    .map_err(CliError::Parse)
}

impl ModelFlags {
    fn into_pair(self, file: &FileConfig) -> Result<(ModelSpec, ModelPair), CliError> {
        let spec = model_spec(self, file)?;
        let pair = build_pair(&spec)?;
        Ok((spec, pair))
    }
}

fn run_command(
    command: Command,
    file: &FileConfig,
    seed: u64,
    out: Option<&Path>,
) -> Result<ExitCode, CliError> {
    match command {
        Command::Bound { model, m, method } => run_bound(model, m, method, file, seed, out),
        Command::Estimate {
            model,
            m,
            estimator,
        } => run_estimate(model, m, estimator, file, seed, out),
        Command::Sweep {
            model,
            param,
            grid,
            m,
            trials,
            method,
            estimator,
            prior,
        } => run_sweep(
            model, param, grid, m, trials, method, estimator, prior, file, seed, out,
        ),
        Command::Consistency {
            model,
            grid,
            trials,
        } => run_consistency(model, grid, trials, file, seed, out),
        Command::Bayes { model, grid, prior } => run_bayes(model, grid, prior, file, seed, out),
        Command::Acceptance => run_acceptance(seed),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("meta.json")
}

fn write_sidecar(out: &Path, meta: serde_json::Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(&meta)
        .map_err(|e| CliError::Io(format!("metadata serialization failed: {e}")))?;
    write_file(&sidecar_path(out), &(text + "\n"))
}

fn effective_config(
    command: &str,
    spec: Option<&ModelSpec>,
    seed: u64,
    extra: serde_json::Value,
) -> serde_json::Value {
    json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "master_seed": seed,
        "workers": rayon::current_num_threads(),
        "model": spec,
        "params": extra,
    })
}

// ---------------------------------------------------------------------------
// bound
// ---------------------------------------------------------------------------

fn run_bound(
    model: ModelFlags,
    m_flag: Option<usize>,
    method_flag: Option<String>,
    file: &FileConfig,
    seed: u64,
    out: Option<&Path>,
) -> Result<ExitCode, CliError> {
    let (spec, pair) = model.into_pair(file)?;
    let m = m_flag
        .or(file.bound.as_ref().and_then(|b| b.m))
        .ok_or_else(|| CliError::Parse("bound needs -M/--m (or [bound].m)".into()))?;
    let (method, budget) = merge_method(method_flag.as_deref(), file.method.as_ref(), seed)
        .map_err(CliError::Parse)?;

    let theta0 = match method {
        EvalMethod::ClosedForm => pair.reference()?.theta0.clone(),
        _ => {
            let init = pair.family().point(&[1.0]);
            pseudo_true(&pair, &init, method, &budget)?
        }
    };
    let sandwich = sandwich_matrices(&pair, &theta0, method, &budget)?;
    let mut report = mcrb_from(&sandwich, m)?;
    if let Some(nested) = pair.nested() {
        report = nested_lb(&report, &nested)?;
        report.crb = matched_crb(&pair, &nested.theta_bar, m).ok();
    }

    println!("{}", report.to_kv_block());
    if let Some(out) = out {
        let csv = format!(
            "{}\n{}\n",
            BoundReport::csv_header(report.theta0.dim()),
            report.to_csv_row()
        );
        write_file(out, &csv)?;
        write_sidecar(
            out,
            effective_config(
                "bound",
                Some(&spec),
                seed,
                json!({
                    "m": m,
                    "method": method,
                    "budget": budget,
                    "quadrature_support": report.sandwich.truncation,
                }),
            ),
        )?;
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

fn run_estimate(
    model: ModelFlags,
    m_flag: Option<usize>,
    estimator_flag: Option<String>,
    file: &FileConfig,
    seed: u64,
    out: Option<&Path>,
) -> Result<ExitCode, CliError> {
    let (spec, pair) = model.into_pair(file)?;
    let section = file.estimate.clone().unwrap_or_default();
    let m = m_flag
        .or(section.m)
        .ok_or_else(|| CliError::Parse("estimate needs -M/--m (or [estimate].m)".into()))?;
    let estimator = estimator_flag
        .or(section.estimator)
        .unwrap_or_else(|| "closed".to_string());
    let data_seed = derive_seed(seed, domain::TRIAL, 0);
    let data = pair.truth().sample(data_seed, m);

    match estimator.as_str() {
        "closed" | "numeric" => {
            let mut rec = scalar_estimate(&pair, &data, &estimator)?;
            rec.seed = Some(data_seed);
            for (i, v) in rec.theta_hat.as_slice().iter().enumerate() {
                println!("theta_hat_{} = {v}", i + 1);
            }
            println!("M = {}", rec.m);
            println!("method = {}", rec.method);
            println!("seed = {data_seed}");
            println!("grad_norm = {}", rec.grad_norm);
            println!("iterations = {}", rec.iterations);
            if let Some(out) = out {
                let csv = format!(
                    "{}\n{}\n",
                    EstimateRecord::csv_header(rec.theta_hat.dim()),
                    rec.to_csv_row()
                );
                write_file(out, &csv)?;
            }
        }
        "cmml" => {
            let est = cmml_scatter(&data)?;
            let n = est.sigma_hat.nrows();
            println!("sigma2_hat = {}", est.sigma2_hat);
            println!("M = {m}");
            println!("seed = {data_seed}");
            for i in 0..n {
                for j in 0..n {
                    let z = est.sigma_hat[(i, j)];
                    println!(
                        "sigma_hat_{}{} = {}{}{}i",
                        i + 1,
                        j + 1,
                        z.re,
                        if z.im < 0.0 { "" } else { "+" },
                        z.im
                    );
                }
            }
            if let Some(out) = out {
                let mut header = vec!["M".to_string(), "sigma2_hat".into()];
                let mut cells = vec![m.to_string(), est.sigma2_hat.to_string()];
                for i in 0..n {
                    for j in 0..n {
                        header.push(format!("sigma_hat_{}{}_re", i + 1, j + 1));
                        header.push(format!("sigma_hat_{}{}_im", i + 1, j + 1));
                        cells.push(est.sigma_hat[(i, j)].re.to_string());
                        cells.push(est.sigma_hat[(i, j)].im.to_string());
                    }
                }
                write_file(out, &format!("{}\n{}\n", header.join(","), cells.join(",")))?;
            }
        }
        other => {
            return Err(CliError::Parse(format!(
                "unknown estimator '{other}' (expected closed, numeric or cmml)"
            )))
        }
    }
    if let Some(out) = out {
        write_sidecar(
            out,
            effective_config(
                "estimate",
                Some(&spec),
                seed,
                json!({
                    "m": m,
                    "estimator": estimator,
                    "data_seed": data_seed,
                }),
            ),
        )?;
    }
    Ok(ExitCode::SUCCESS)
}

fn scalar_estimate(
    pair: &ModelPair,
    data: &Samples,
    estimator: &str,
) -> Result<EstimateRecord, CoreError> {
    match estimator {
        "closed" => mml_closed(pair, data),
        _ => mml_fit(pair.family(), data, &pair.family().point(&[1.0])),
    }
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

#[allow(clippy::too_many_arguments)]
fn run_sweep(
    model: ModelFlags,
    param_flag: Option<String>,
    grid_flag: Option<String>,
    m_flag: Option<usize>,
    trials_flag: Option<usize>,
    method_flag: Option<String>,
    estimator_flag: Option<String>,
    prior_flag: Option<String>,
    file: &FileConfig,
    seed: u64,
    out: Option<&Path>,
) -> Result<ExitCode, CliError> {
    let section = file.sweep.clone().unwrap_or_default();
    let spec = model_spec(model, file)?;
    let param = param_flag
        .or(section.param)
        .ok_or_else(|| CliError::Parse("sweep needs --param (or [sweep].param)".into()))?;
    let grid_text = grid_flag
        .or(section.grid)
        .unwrap_or_else(|| default_grid(&param));
    let grid = parse_grid(&grid_text).map_err(CliError::Parse)?;
    let m = m_flag
        .or(section.m)
        .ok_or_else(|| CliError::Parse("sweep needs -M/--m (or [sweep].m)".into()))?;
    let trials = trials_flag.or(section.trials).unwrap_or(10_000);
    let (method, budget) = merge_method(method_flag.as_deref(), file.method.as_ref(), seed)
        .map_err(CliError::Parse)?;
    let estimator = resolve_estimator(
        estimator_flag.or(section.estimator).as_deref(),
        prior_flag.or(section.prior).as_deref(),
    )?;

    let table = sweep(
        &spec, estimator, &param, &grid, m, trials, seed, method, &budget,
    )?;
    let csv = table.to_csv();
    match out {
        Some(out) => {
            write_file(out, &csv)?;
            let mut meta = effective_config(
                "sweep",
                Some(&spec),
                seed,
                json!({
                    "param": param,
                    "grid_text": grid_text,
                    "trials": trials,
                    "m": m,
                    "method": method,
                }),
            );
            meta["sweep"] = table.metadata_json();
            write_sidecar(out, meta)?;
        }
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

/// Harness default grids where the figure conventions leave them open.
fn default_grid(param: &str) -> String {
    match param {
        "mu_bar" => "0:2:0.25".to_string(),
        "rho" => "0:0.75:0.25".to_string(),
        _ => "0:1:0.25".to_string(),
    }
}

fn resolve_estimator(
    estimator: Option<&str>,
    prior: Option<&str>,
) -> Result<EstimatorSpec, CliError> {
    match estimator.unwrap_or("closed") {
        "closed" => Ok(EstimatorSpec::MmlClosed),
        "numeric" => Ok(EstimatorSpec::MmlNumeric),
        "bayes" => {
            let prior = match prior {
                Some(p) => parse_prior(p).map_err(CliError::Parse)?,
                None => PriorSpec::InvGamma {
                    shape: 3.0,
                    scale: 2.0,
                },
            };
            Ok(EstimatorSpec::MbSquared { prior })
        }
        other => Err(CliError::Parse(format!(
            "unknown estimator '{other}' (expected closed, numeric or bayes)"
        ))),
    }
}

// ---------------------------------------------------------------------------
// consistency
// ---------------------------------------------------------------------------

fn run_consistency(
    model: ModelFlags,
    grid_flag: Option<String>,
    trials_flag: Option<usize>,
    file: &FileConfig,
    seed: u64,
    out: Option<&Path>,
) -> Result<ExitCode, CliError> {
    let section = file.consistency.clone().unwrap_or_default();
    let (spec, pair) = model.into_pair(file)?;
    let grid_text = grid_flag
        .or(section.m_grid)
        .unwrap_or_else(|| "100,1000,10000".into());
    let m_grid = parse_usize_grid(&grid_text).map_err(CliError::Parse)?;
    let trials = trials_flag.or(section.trials).unwrap_or(200);

    let table = consistency_curve(&pair, &m_grid, trials, seed)?;
    let csv = table.to_csv();
    match out {
        Some(out) => {
            write_file(out, &csv)?;
            write_sidecar(
                out,
                effective_config(
                    "consistency",
                    Some(&spec),
                    seed,
                    json!({
                        "m_grid": m_grid,
                        "trials": trials,
                    }),
                ),
            )?;
        }
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// bayes
// ---------------------------------------------------------------------------

fn run_bayes(
    model: ModelFlags,
    grid_flag: Option<String>,
    prior_flag: Option<String>,
    file: &FileConfig,
    seed: u64,
    out: Option<&Path>,
) -> Result<ExitCode, CliError> {
    use misfit_core::bayes::{concentration_csv, concentration_stat, posterior_compute};
    let section = file.bayes.clone().unwrap_or_default();
    let (spec, pair) = model.into_pair(file)?;
    let grid_text = grid_flag
        .or(section.m_grid)
        .unwrap_or_else(|| "100,1000,10000".into());
    let m_grid = parse_usize_grid(&grid_text).map_err(CliError::Parse)?;
    let prior_text = prior_flag
        .or(section.prior)
        .unwrap_or_else(|| "inv-gamma:3,2".to_string());
    let prior_spec = parse_prior(&prior_text).map_err(CliError::Parse)?;
    let prior = prior_spec.build()?;

    let theta0 = misfit_core::harness::resolve_theta0(&pair, &Budget::default())?;
    let mut posteriors = Vec::new();
    for (i, &m) in m_grid.iter().enumerate() {
        let data = pair
            .truth()
            .sample(derive_seed(seed, domain::BAYES, i as u64), m);
        posteriors.push((m, posterior_compute(pair.family(), prior.as_ref(), &data)?));
    }
    let rows = concentration_stat(&posteriors, &theta0);
    for r in &rows {
        println!(
            "M = {}: posterior mean {} std {} |mean - theta0| {}",
            r.m, r.mean, r.std, r.dist_to_theta0
        );
    }
    let csv = concentration_csv(&rows);
    if let Some(out) = out {
        write_file(out, &csv)?;
        write_sidecar(
            out,
            effective_config(
                "bayes",
                Some(&spec),
                seed,
                json!({
                    "m_grid": m_grid,
                    "prior": prior_text,
                    "theta0": theta0.as_slice(),
                }),
            ),
        )?;
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// acceptance
// ---------------------------------------------------------------------------

fn run_acceptance(seed: u64) -> Result<ExitCode, CliError> {
    let mut all_pass = true;
    for rep in misfit_core::acceptance::run_all() {
        println!("{}", rep.line());
        for d in &rep.details {
            println!("    {d}");
        }
        all_pass &= rep.pass;
    }
    // Criterion 10: identical seed, different worker counts, byte-identical
    // CSV output.
    let run_with = |threads: usize| -> Result<String, CliError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Io(format!("cannot build worker pool: {e}")))?;
        let spec = ModelSpec {
            id: "ar1-power".into(),
            rho: Some(0.5),
            sigma2_bar: Some(4.0),
            n: Some(8),
            ..Default::default()
        };
        let table = pool.install(|| {
            sweep(
                &spec,
                EstimatorSpec::MmlClosed,
                "rho",
                &[0.0, 0.5],
                24,
                2000,
                seed,
                EvalMethod::ClosedForm,
                &Budget::default(),
            )
        })?;
        Ok(table.to_csv())
    };
    let a = run_with(1)?;
    let b = run_with(4)?;
    let pass10 = a == b;
    all_pass &= pass10;
    println!(
        "criterion 10 (determinism across worker counts): {}",
        if pass10 { "PASS" } else { "FAIL" }
    );

    if all_pass {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(EXIT_NUMERIC))
    }
}
