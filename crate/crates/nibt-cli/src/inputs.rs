//! Parsing of grid specifications, free-parameter files and method options.

use std::fmt;
use std::path::Path;

use anyhow::{Context, Result};
use nibt_core::interpolation::{choose_epsilon, EpsilonContext};
use nibt_core::linalg::{C64, CMat};
use nibt_core::sampling::{conjugate_points, logspace};
use nibt_core::{fileio, LoewnerQuadruple, Mode, Variant, VariantConfig};
use serde_json::{json, Value};

use crate::{GridArgs, MethodArgs};

/// Invalid command-line input (exit code 2).
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn bad(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

/// Positive frequencies from `log:start:stop:count` or a list file (one
/// number per line, `#` starts a comment).
pub fn parse_frequencies(spec: &str) -> Result<Vec<f64>> {
    let freqs = if let Some(rest) = spec.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let [start, stop, count] = parts.as_slice() else {
            return Err(bad(format!("grid \"{spec}\" must look like log:start:stop:count")));
        };
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("grid \"{spec}\": \"{s}\" is not a number")));
        let (start, stop) = (num(start)?, num(stop)?);
        let count: usize = count.parse().map_err(|_| bad(format!("grid \"{spec}\": \"{count}\" is not a count")))?;
        if !(start > 0.0 && stop > 0.0) {
            return Err(bad(format!("grid \"{spec}\": log grids need positive bounds")));
        }
        logspace(start, stop, count)
    } else {
        let text = std::fs::read_to_string(spec).with_context(|| format!("reading frequency list {spec}"))?;
        text.lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .enumerate()
            .map(|(i, l)| l.parse::<f64>().map_err(|_| bad(format!("{spec}: entry {} (\"{l}\") is not a number", i + 1))))
            .collect::<Result<Vec<_>>>()?
    };
    if let Some(w) = freqs.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(bad(format!("grid \"{spec}\": frequencies must be positive and finite, got {w}")));
    }
    Ok(freqs)
}

/// Conjugate-paired right and left points of a grid specification.
pub fn grid_points(grid: &GridArgs) -> Result<(Vec<C64>, Vec<C64>)> {
    points_from(&grid.right, &grid.left, grid.offset)
}

pub fn points_from(right: &str, left: &str, offset: f64) -> Result<(Vec<C64>, Vec<C64>)> {
    if !offset.is_finite() || offset < 0.0 {
        return Err(bad(format!("--offset must be finite and non-negative, got {offset}")));
    }
    Ok((conjugate_points(&parse_frequencies(right)?, offset), conjugate_points(&parse_frequencies(left)?, offset)))
}

fn complex_matrix(v: &Value, path: &str) -> Result<CMat> {
    let rows = fileio::as_array(v, path)?;
    let cols = match rows.first() {
        Some(r) => fileio::as_array(r, &format!("{path}[0]"))?.len(),
        None => 0,
    };
    Ok(fileio::as_complex_matrix(v, rows.len(), cols, path)?)
}

/// Free parameters from `{"right": [[[re, im], ...], ...], "left": ...}`;
/// a missing `left` means the transpose of `right`.
pub fn read_zeta_file(path: &Path) -> Result<(CMat, Option<CMat>)> {
    let source = path.display().to_string();
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {source}"))?;
    let v = fileio::parse_json(&text, &source)?;
    let right = complex_matrix(fileio::field(&v, "right", &source)?, &format!("{source}.right"))?;
    let left = match v.get("left") {
        None | Some(Value::Null) => None,
        Some(l) => Some(complex_matrix(l, &format!("{source}.left"))?),
    };
    Ok((right, left))
}

/// Write a free-parameter file in the format read by [`read_zeta_file`].
pub fn write_zeta_file(path: &Path, right: &CMat) -> Result<()> {
    let text = serde_json::to_string_pretty(&json!({ "right": fileio::complex_matrix(right)? }))?;
    fileio::write_atomic(path, text.as_bytes())?;
    Ok(())
}

pub fn parse_variant(name: &str, gamma: f64) -> Result<Variant> {
    let v: Variant = name.parse()?;
    Ok(match v {
        Variant::Hinf { .. } => Variant::Hinf { gamma },
        other => other,
    })
}

/// Variants named by a comma-separated list or `all`.
pub fn parse_variants(list: &str, gamma: f64) -> Result<Vec<Variant>> {
    if list.trim() == "all" {
        return Ok(Variant::all(gamma).to_vec());
    }
    list.split(',').map(|s| parse_variant(s.trim(), gamma)).collect()
}

/// A method configuration with epsilon resolved, plus its description for
/// the embedded run configuration.
pub struct ResolvedMethod {
    pub mode: Mode,
    pub epsilon: Option<f64>,
    pub fast_path: bool,
    pub zeta: Option<(CMat, Option<CMat>)>,
    pub description: Value,
}

impl ResolvedMethod {
    pub fn config(&self, variant: Variant) -> VariantConfig {
        let base = match self.mode {
            Mode::Adi => VariantConfig::adi(variant),
            Mode::Ddp => VariantConfig::ddp(variant, self.epsilon.unwrap_or(0.0)),
        };
        let base = if self.fast_path { base.fast() } else { base };
        match &self.zeta {
            Some((right, left)) => base.with_zeta(right.clone(), left.clone()),
            None => base,
        }
    }
}

/// Resolve mode, epsilon (explicit or automatic) and free parameters for the
/// right points of `q`.
pub fn resolve_method(args: &MethodArgs, q: &LoewnerQuadruple) -> Result<ResolvedMethod> {
    let mode: Mode = args.mode.parse()?;
    if !(args.gamma > 1.0) {
        return Err(bad(format!("--gamma must exceed 1, got {}", args.gamma)));
    }
    let zeta = args.zeta_file.as_deref().map(read_zeta_file).transpose()?;
    let needs_eps = mode == Mode::Ddp && (args.fast_path || zeta.is_none());
    let mut auto = Value::Null;
    let epsilon = match (&args.eps, &args.eps_auto) {
        (Some(e), _) => Some(*e),
        (None, Some(context)) => {
            let context: EpsilonContext = context.parse()?;
            let mut omegas: Vec<f64> = q.right_points.iter().map(|z| z.im).collect();
            omegas.sort_by(f64::total_cmp);
            let plan = choose_epsilon(&omegas, args.eps_delta, context)?;
            auto = json!({
                "context": context.to_string(),
                "delta": plan.delta,
                "omega_min": plan.omega_min,
                "delta_min": plan.delta_min,
                "bounds": plan.bounds.iter().map(|(name, value)| json!({"name": name, "value": value})).collect::<Vec<_>>(),
            });
            Some(plan.epsilon)
        }
        (None, None) if needs_eps => return Err(bad("ddp mode needs --eps or --eps-auto")),
        (None, None) => None,
    };
    let description = json!({
        "mode": mode.to_string(),
        "epsilon": epsilon,
        "epsilon_auto": auto,
        "gamma": args.gamma,
        "fast_path": args.fast_path,
        "zeta_file": args.zeta_file.as_ref().map(|p| p.display().to_string()),
    });
    Ok(ResolvedMethod { mode, epsilon, fast_path: args.fast_path, zeta, description })
}
