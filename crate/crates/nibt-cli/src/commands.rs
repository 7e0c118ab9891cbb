//! Subcommand implementations. Every output file is written atomically and
//! carries (or sits next to) the configuration that produced it.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use nibt_core::intrusive::{self, QuadratureRule};
use nibt_core::linalg::{self, C64};
use nibt_core::reduction::{self, error_grid, Balancer, ErrorSweep};
use nibt_core::sampling::{generate_samples, read_samples, write_samples_with};
use nibt_core::{fileio, loewner, models, variants, LoewnerQuadruple, StateSpace, Variant};
use serde_json::{json, Value};

use crate::inputs::{self, InputError, ResolvedMethod};
use crate::{CompareArgs, HsvArgs, ReduceArgs, SampleArgs, SynthArgs};

/// Log-spaced points of the error grid, before the pole frequencies are added.
const ERROR_GRID_POINTS: usize = 5000;

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn base_config(command: &str, threads: Option<usize>) -> serde_json::Map<String, Value> {
    let mut map = serde_json::Map::new();
    map.insert("command".into(), json!(command));
    map.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    map.insert("threads".into(), json!(threads));
    map
}

fn read_model(path: &Path) -> Result<StateSpace> {
    StateSpace::read(path).with_context(|| format!("reading model {}", path.display()))
}

fn load_quadruple(path: &Path) -> Result<LoewnerQuadruple> {
    let samples = read_samples(path).with_context(|| format!("reading samples {}", path.display()))?;
    Ok(loewner::assemble(&samples)?)
}

fn hsv_csv(values: &[f64]) -> String {
    let mut out = String::from("index,value\n");
    for (i, &v) in values.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, fileio::fmt17(v)));
    }
    out
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fileio::write_atomic(path, text.as_bytes()).with_context(|| format!("writing {}", path.display()))
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    write_text(path, &serde_json::to_string_pretty(value)?)
}

pub fn sample(args: &SampleArgs, threads: Option<usize>) -> Result<()> {
    let ss = read_model(&args.model)?;
    let (right, left) = inputs::grid_points(&args.grid)?;
    let set = generate_samples(&ss, &right, &left)?;
    let mut config = base_config("sample", threads);
    config.insert("model".into(), json!(path_str(&args.model)));
    config.insert("right".into(), json!(args.grid.right));
    config.insert("left".into(), json!(args.grid.left));
    config.insert("offset".into(), json!(args.grid.offset));
    write_samples_with(&set, &args.out, Some(&json!({ "config": config })))?;
    eprintln!("wrote {} right and {} left samples to {}", right.len(), left.len(), args.out.display());
    Ok(())
}

pub fn reduce(args: &ReduceArgs, threads: Option<usize>) -> Result<()> {
    if args.order == 0 {
        return Err(nibt_core::Error::OrderOutOfRange.into());
    }
    let q = load_quadruple(&args.samples)?;
    let variant = inputs::parse_variant(&args.method.variant, args.method.gamma)?;
    let method = inputs::resolve_method(&args.method, &q)?;
    let cfg = method.config(variant);
    let factors = variants::compute_factors(&q, &cfg)?;
    let balancer = reduction::real_balancer(&q, &factors)?;
    let rom = balancer.reduce(args.order)?;

    let mut config = base_config("reduce", threads);
    config.insert("samples".into(), json!(path_str(&args.samples)));
    config.insert("order".into(), json!(args.order));
    config.insert("method".into(), method.description.clone());
    let metadata = json!({
        "variant": variant.to_string(),
        "mode": method.mode.to_string(),
        "epsilon": if cfg.uses_epsilon() { method.epsilon } else { None },
        "config": config,
    });
    rom.write(&args.out, &metadata).with_context(|| format!("writing {}", args.out.display()))?;
    let hsv_path = args.hsv_out.clone().unwrap_or_else(|| args.out.with_file_name("hsv.csv"));
    write_text(&hsv_path, &hsv_csv(balancer.hankel_values()))?;
    eprintln!("wrote order-{} {} ROM to {} and Hankel-like values to {}", args.order, variant, args.out.display(), hsv_path.display());
    Ok(())
}

pub fn hsv(args: &HsvArgs, threads: Option<usize>) -> Result<()> {
    let variant = inputs::parse_variant(&args.method.variant, args.method.gamma)?;
    let mut config = base_config("hsv", threads);
    config.insert("variant".into(), json!(variant.to_string()));
    let values = match (&args.samples, &args.model) {
        (Some(samples), _) => {
            let q = load_quadruple(samples)?;
            let method = inputs::resolve_method(&args.method, &q)?;
            config.insert("samples".into(), json!(path_str(samples)));
            config.insert("method".into(), method.description.clone());
            reduction::hankel_values(&q, &variants::compute_factors(&q, &method.config(variant))?)?
        }
        (None, Some(model)) => {
            config.insert("model".into(), json!(path_str(model)));
            intrusive::hankel_singular_values(&read_model(model)?, &variant)?
        }
        (None, None) => return Err(InputError("hsv needs --samples or --model".into()).into()),
    };
    write_text(&args.out, &hsv_csv(&values))?;
    write_json(&sidecar(&args.out), &Value::Object(config))?;
    eprintln!("wrote {} values to {}", values.len(), args.out.display());
    Ok(())
}

pub fn synth(args: &SynthArgs, threads: Option<usize>) -> Result<()> {
    let mut config = base_config("synth", threads);
    let ss = if args.example {
        config.insert("example".into(), json!(true));
        models::example8()
    } else {
        config.insert("n".into(), json!(args.n));
        config.insert("m".into(), json!(args.m));
        config.insert("p".into(), json!(args.p));
        config.insert("seed".into(), json!(args.seed));
        config.insert("passive".into(), json!(args.passive));
        models::synthetic(args.n, args.m, args.p, args.seed, args.passive)?
    };
    ss.write_with(&args.out, Some(&json!({ "config": config })))
        .with_context(|| format!("writing {}", args.out.display()))?;
    if let Some(zeta_out) = &args.zeta_out {
        inputs::write_zeta_file(zeta_out, &models::example8_zeta())?;
    }
    eprintln!("wrote n={} m={} p={} model to {}", ss.n(), ss.m(), ss.p(), args.out.display());
    Ok(())
}

/// `<out>.config.json` next to a CSV output.
fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".config.json");
    out.with_file_name(name)
}

/// Quadrature weights for sample points that are `±jω` pairs in the order of
/// [`nibt_core::sampling::conjugate_points`]; `None` when the points do not have that form.
fn pair_weights(points: &[C64]) -> Option<Vec<f64>> {
    if points.len() < 4 || !points.len().is_multiple_of(2) {
        return None;
    }
    let mut freqs = Vec::with_capacity(points.len() / 2);
    for pair in points.chunks(2) {
        let (a, b) = (pair[0], pair[1]);
        if a.re != 0.0 || b.re != 0.0 || !(a.im > 0.0) || b.im != -a.im {
            return None;
        }
        freqs.push(a.im);
    }
    let weights = intrusive::trapezoid_weights(&freqs, QuadratureRule::Exponential).ok()?;
    Some(intrusive::conjugate_pair_weights(&weights))
}

/// `‖a - b‖₂ / ‖a‖₂` over the leading `k` entries.
fn rel_l2_diff(reference: &[f64], other: &[f64], k: usize) -> Option<f64> {
    let k = k.min(reference.len()).min(other.len());
    if k == 0 {
        return None;
    }
    let num: f64 = (0..k).map(|i| (reference[i] - other[i]).powi(2)).sum();
    let den: f64 = reference[..k].iter().map(|x| x * x).sum();
    Some((num / den).sqrt())
}

fn cell(x: Option<f64>) -> String {
    x.map(fileio::fmt17).unwrap_or_default()
}

struct VariantTable {
    rows: Vec<String>,
    note: Value,
}

fn compare_variant(
    ss: &StateSpace,
    q: &LoewnerQuadruple,
    method: &ResolvedMethod,
    variant: Variant,
    max_order: usize,
    sweep: &ErrorSweep,
    quad_weights: Option<&(Vec<f64>, Vec<f64>)>,
) -> Result<VariantTable> {
    let reference = intrusive::intrusive_balancer(ss, &variant)?;
    let data = reduction::real_balancer(q, &variants::compute_factors(q, &method.config(variant))?)?;
    let quad = match (variant, quad_weights) {
        (Variant::Bt, Some((wp, wq))) => Some(quadrature_balancer(q, wp, wq)?),
        _ => None,
    };
    let error_at = |b: &Balancer, r: usize| -> Result<Option<f64>> {
        if r > b.achievable_order() {
            return Ok(None);
        }
        Ok(Some(sweep.relative_error(&b.reduce(r)?)?))
    };
    let hankel_diff = rel_l2_diff(reference.hankel_values(), data.hankel_values(), max_order);
    let mut rows = Vec::with_capacity(max_order);
    for r in 1..=max_order {
        let e_ref = error_at(&reference, r)?;
        let e_data = error_at(&data, r)?;
        let e_quad = quad.as_ref().map(|b| error_at(b, r)).transpose()?.flatten();
        rows.push(format!(
            "{},{},{},{},{},{}",
            variant.name(),
            r,
            cell(e_ref),
            cell(e_data),
            cell(e_quad),
            cell(hankel_diff)
        ));
    }
    let note = json!({
        "variant": variant.to_string(),
        "intrusive_achievable_order": reference.achievable_order(),
        "nonintrusive_achievable_order": data.achievable_order(),
        "quadrature": quad.is_some(),
    });
    Ok(VariantTable { rows, note })
}

fn quadrature_balancer(q: &LoewnerQuadruple, wp: &[f64], wq: &[f64]) -> Result<Balancer> {
    let diag = |w: &[f64], k: usize| {
        let d = linalg::CMat::from_fn(w.len(), w.len(), |i, j| if i == j { C64::new(w[i], 0.0) } else { C64::new(0.0, 0.0) });
        linalg::kron_eye(&d, k)
    };
    let factors = variants::FactorPair::untransformed(diag(wp, q.m), diag(wq, q.p));
    Ok(reduction::real_balancer(q, &factors)?)
}

pub fn compare(args: &CompareArgs, threads: Option<usize>) -> Result<()> {
    if args.max_order == 0 {
        return Err(nibt_core::Error::OrderOutOfRange.into());
    }
    let ss = read_model(&args.model)?;
    let mut config = base_config("compare", threads);
    config.insert("model".into(), json!(path_str(&args.model)));
    let samples = match (&args.samples, &args.right, &args.left) {
        (Some(path), _, _) => {
            config.insert("samples".into(), json!(path_str(path)));
            read_samples(path).with_context(|| format!("reading samples {}", path.display()))?
        }
        (None, Some(right), Some(left)) => {
            let (rp, lp) = inputs::points_from(right, left, args.offset)?;
            config.insert("right".into(), json!(right));
            config.insert("left".into(), json!(left));
            config.insert("offset".into(), json!(args.offset));
            generate_samples(&ss, &rp, &lp)?
        }
        _ => return Err(InputError("compare needs --samples or both --right and --left".into()).into()),
    };
    let q = loewner::assemble(&samples)?;
    let method = inputs::resolve_method(&args.method, &q)?;
    let variant_list = args.variants.as_deref().unwrap_or(&args.method.variant);
    let variants = inputs::parse_variants(variant_list, args.method.gamma)?;

    let poles = linalg::spectrum(&linalg::to_complex(&ss.a))?.eigenvalues;
    let peaks: Vec<f64> = poles.iter().map(|z| z.im.abs()).collect();
    let magnitudes = poles.iter().map(|z| z.norm()).filter(|m| *m > 0.0);
    let lo = magnitudes.clone().fold(f64::INFINITY, f64::min).min(1.0) * 1e-3;
    let hi = magnitudes.fold(0.0, f64::max).max(1.0) * 1e3;
    let grid = error_grid(lo, hi, ERROR_GRID_POINTS, &peaks);
    let full = ss.to_complex();
    let sweep = ErrorSweep::new(&full, &grid)?;

    let quad_weights = pair_weights(&q.right_points).zip(pair_weights(&q.left_points));
    let mut lines = vec!["variant,order,intrusive_error,nonintrusive_error,quadbt_error,hankel_rel_l2_diff".to_string()];
    let mut notes = Vec::new();
    for &variant in &variants {
        let table = compare_variant(&ss, &q, &method, variant, args.max_order, &sweep, quad_weights.as_ref())
            .with_context(|| format!("variant {variant}"))?;
        lines.extend(table.rows);
        notes.push(table.note);
    }
    lines.push(String::new());
    write_text(&args.out, &lines.join("\n"))?;

    config.insert("method".into(), method.description.clone());
    config.insert("variants".into(), json!(variants.iter().map(|v| v.to_string()).collect::<Vec<_>>()));
    config.insert("max_order".into(), json!(args.max_order));
    config.insert(
        "error_grid".into(),
        json!({ "lo": lo, "hi": hi, "log_points": ERROR_GRID_POINTS, "total_points": grid.len() }),
    );
    config.insert("per_variant".into(), json!(notes));
    write_json(&sidecar(&args.out), &Value::Object(config))?;
    eprintln!("wrote {} rows to {}", lines.len() - 2, args.out.display());
    Ok(())
}
