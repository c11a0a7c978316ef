//! Strict structured-text configuration.
//!
//! Every flag has a config-file equivalent; flags override the file. Unknown
//! keys anywhere are a parse error, and hyperparameters that do not apply to
//! the selected model are rejected before any computation runs.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use misfit_core::harness::PriorSpec;
use misfit_core::models::{Budget, EvalMethod, ModelSpec, ScatterSpec};

/// Whole config file. Sections correspond to subcommands; `command` makes a
/// file self-contained (`misfit --config run.toml` with no subcommand).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<String>,
    pub master_seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub model: Option<ModelSection>,
    pub method: Option<MethodSection>,
    pub bound: Option<BoundSection>,
    pub estimate: Option<EstimateSection>,
    pub sweep: Option<SweepSection>,
    pub consistency: Option<ConsistencySection>,
    pub bayes: Option<BayesSection>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub id: Option<String>,
    pub mu_bar: Option<f64>,
    pub sigma2_bar: Option<f64>,
    pub rho: Option<f64>,
    pub n: Option<usize>,
    pub lambda: Option<f64>,
    pub eta: Option<f64>,
    /// `identity` or `ar1:<rho>`.
    pub scatter: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSection {
    /// `closed`, `quadrature` or `mc`.
    pub kind: Option<String>,
    pub mc_draws: Option<usize>,
    pub quad_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSection {
    pub m: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    pub m: Option<usize>,
    /// `closed`, `numeric` or `cmml`.
    pub estimator: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub param: Option<String>,
    /// `a:b:step` or comma-separated values.
    pub grid: Option<String>,
    pub m: Option<usize>,
    pub trials: Option<usize>,
    /// `closed`, `numeric` or `bayes`.
    pub estimator: Option<String>,
    /// Prior for the bayes estimator: `inv-gamma:<shape>,<scale>` or
    /// `flat:<lo>,<hi>`.
    pub prior: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsistencySection {
    /// Sample-size grid, `a:b:step` or comma-separated.
    pub m_grid: Option<String>,
    pub trials: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BayesSection {
    pub m_grid: Option<String>,
    pub prior: Option<String>,
}

impl FileConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("config parse error: {e}"))
    }
}

/// Parse `identity` / `ar1:<rho>`.
pub fn parse_scatter(s: &str) -> Result<ScatterSpec, String> {
    if s == "identity" {
        return Ok(ScatterSpec::Identity);
    }
    if let Some(rest) = s.strip_prefix("ar1:") {
        let rho: f64 = rest
            .parse()
            .map_err(|_| format!("invalid ar1 scatter rho '{rest}'"))?;
        return Ok(ScatterSpec::Ar1 { rho });
    }
    Err(format!(
        "unknown scatter spec '{s}' (expected identity or ar1:<rho>)"
    ))
}

/// Parse `inv-gamma:<shape>,<scale>` / `flat:<lo>,<hi>`.
pub fn parse_prior(s: &str) -> Result<PriorSpec, String> {
    let (kind, args) = s
        .split_once(':')
        .ok_or_else(|| format!("prior '{s}' needs arguments after ':'"))?;
    let nums: Vec<f64> = args
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| format!("invalid prior number '{v}'"))
        })
        .collect::<Result<_, _>>()?;
    if nums.len() != 2 {
        return Err(format!("prior '{s}' needs exactly two numbers"));
    }
    match kind {
        "inv-gamma" => Ok(PriorSpec::InvGamma {
            shape: nums[0],
            scale: nums[1],
        }),
        "flat" => Ok(PriorSpec::Flat {
            lo: nums[0],
            hi: nums[1],
        }),
        other => Err(format!(
            "unknown prior kind '{other}' (expected inv-gamma or flat)"
        )),
    }
}

/// Parse a numeric grid: `start:stop:step` (inclusive of both ends within a
/// half-step) or a comma-separated list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("grid '{s}' must be start:stop:step"));
        }
        let start: f64 = parts[0]
            .parse()
            .map_err(|_| format!("bad grid start '{}'", parts[0]))?;
        let stop: f64 = parts[1]
            .parse()
            .map_err(|_| format!("bad grid stop '{}'", parts[1]))?;
        let step: f64 = parts[2]
            .parse()
            .map_err(|_| format!("bad grid step '{}'", parts[2]))?;
        if !(step > 0.0) || stop < start {
            return Err(format!(
                "grid '{s}' must have positive step and stop >= start"
            ));
        }
        let mut out = Vec::new();
        let mut k = 0u32;
        loop {
            let v = start + step * k as f64;
            if v > stop + 0.5 * step {
                break;
            }
            out.push(v.min(stop));
            k += 1;
            if k > 1_000_000 {
                return Err("grid has more than 1e6 points".into());
            }
        }
        Ok(out)
    } else {
        s.split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("bad grid value '{v}'"))
            })
            .collect()
    }
}

/// Integer grid (sample sizes).
pub fn parse_usize_grid(s: &str) -> Result<Vec<usize>, String> {
    parse_grid(s)?
        .into_iter()
        .map(|v| {
            if v.fract() == 0.0 && v >= 1.0 {
                Ok(v as usize)
            } else {
                Err(format!("'{v}' is not a positive integer sample size"))
            }
        })
        .collect()
}

pub fn parse_method(s: &str) -> Result<EvalMethod, String> {
    match s {
        "closed" => Ok(EvalMethod::ClosedForm),
        "quadrature" => Ok(EvalMethod::Quadrature),
        "mc" => Ok(EvalMethod::MonteCarlo),
        other => Err(format!(
            "unknown method '{other}' (expected closed, quadrature or mc)"
        )),
    }
}

/// Build the model description from merged flag/file values.
pub struct ModelArgs {
    pub id: Option<String>,
    pub mu_bar: Option<f64>,
    pub sigma2_bar: Option<f64>,
    pub rho: Option<f64>,
    pub n: Option<usize>,
    pub lambda: Option<f64>,
    pub eta: Option<f64>,
    pub scatter: Option<String>,
}

impl ModelArgs {
    /// Merge flags (left) over a config section (right) into a model spec.
    pub fn merge(self, file: Option<&ModelSection>) -> Result<ModelSpec, String> {
        let pick_f = |a: Option<f64>, b: Option<f64>| a.or(b);
        let f = file.cloned().unwrap_or_default();
        let id = self
            .id
            .or(f.id)
            .ok_or_else(|| "no model id given (flag --model or [model].id)".to_string())?;
        let scatter = match self.scatter.or(f.scatter) {
            Some(s) => Some(parse_scatter(&s)?),
            None => None,
        };
        Ok(ModelSpec {
            id,
            mu_bar: pick_f(self.mu_bar, f.mu_bar),
            sigma2_bar: pick_f(self.sigma2_bar, f.sigma2_bar),
            rho: pick_f(self.rho, f.rho),
            n: self.n.or(f.n),
            lambda: pick_f(self.lambda, f.lambda),
            eta: pick_f(self.eta, f.eta),
            scatter,
        })
    }
}

/// Merge method flags and section into an evaluation route plus budget.
pub fn merge_method(
    flag: Option<&str>,
    section: Option<&MethodSection>,
    seed: u64,
) -> Result<(EvalMethod, Budget), String> {
    let sec = section.cloned().unwrap_or_default();
    let kind = match flag {
        Some(s) => parse_method(s)?,
        None => match sec.kind.as_deref() {
            Some(s) => parse_method(s)?,
            None => EvalMethod::ClosedForm,
        },
    };
    let mut budget = Budget {
        seed,
        ..Budget::default()
    };
    if let Some(d) = sec.mc_draws {
        budget.mc_draws = d;
    }
    if let Some(t) = sec.quad_tol {
        budget.quad_tol = t;
    }
    Ok((kind, budget))
}
