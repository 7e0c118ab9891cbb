//! Balanced square-root reduction on projected data, realification and
//! H-infinity error estimation.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::fileio;
use crate::linalg::{self, C64, CMat};
use crate::loewner::LoewnerQuadruple;
use crate::sampling::{Realization, StateSpace};
use crate::variants::FactorPair;

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_TOL: f64 = 1e-12;
/// Largest imaginary residue accepted when converting sample data to real
/// coordinates.
pub const REALIFY_TOL: f64 = 1e-8;
/// Largest imaginary residue accepted for a realified Gramian. Its imaginary
/// part is rounding noise from solves admitted by [`linalg::COND_GUARD`], so
/// the tolerance is the relative error those solves may carry.
pub const GRAMIAN_REALIFY_TOL: f64 = linalg::COND_GUARD * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Complex,
    Real,
}

/// Reduced realization `(A, B, C, D)` with the Hankel-like values of the
/// reduction that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedModel {
    pub a: CMat,
    pub b: CMat,
    pub c: CMat,
    pub d: CMat,
    pub field: Field,
    pub hankel_values: Vec<f64>,
}

impl ReducedModel {
    pub fn complex(a: CMat, b: CMat, c: CMat, d: CMat) -> Self {
        Self { a, b, c, d, field: Field::Complex, hankel_values: vec![] }
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn realization(&self) -> Realization {
        Realization { a: self.a.clone(), b: self.b.clone(), c: self.c.clone(), d: self.d.clone() }
    }

    pub fn eval(&self, s: C64) -> Result<CMat> {
        self.realization().eval(s)
    }

    pub fn spectrum(&self) -> Result<Vec<C64>> {
        Ok(linalg::spectrum(&self.a)?.eigenvalues)
    }

    /// Real state-space form; fails unless the model is real.
    pub fn to_state_space(&self) -> Result<StateSpace> {
        if self.field != Field::Real {
            return Err(Error::InvariantViolation("only real reduced models can be exported".into()));
        }
        let re = |m: &CMat| m.map(|z| z.re);
        StateSpace::new(re(&self.a), re(&self.b), re(&self.c), re(&self.d))
    }

    /// Write the ROM file: state-space fields plus Hankel values and metadata.
    pub fn write(&self, path: &Path, metadata: &serde_json::Value) -> Result<()> {
        #[derive(Serialize)]
        struct RomFile {
            #[serde(flatten)]
            model: crate::sampling::ModelJson,
            hankel_values: Vec<Box<RawValue>>,
        }
        let file = RomFile {
            model: self.to_state_space()?.to_json_value()?,
            hankel_values: self.hankel_values.iter().map(|&x| fileio::num(x)).collect::<Result<_>>()?,
        };
        fileio::write_atomic(path, fileio::to_json_with(&file, Some(metadata))?.as_bytes())
    }
}

fn is_real(m: &CMat) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

/// Balanced square-root reduction to order `r` with the effective factors
/// `Tv·Lp` and `Tw·Lq`.
///
/// When all inputs are real the result is a real model.
pub fn bsa_reduce(q: &LoewnerQuadruple, f: &FactorPair, r: usize) -> Result<ReducedModel> {
    Balancer::new(q, f)?.reduce(r)
}

/// Balanced square-root basis computed once and truncated to any order.
#[derive(Debug, Clone)]
pub struct Balancer {
    wr_full: CMat,
    vr_full: CMat,
    wav: CMat,
    wb: CMat,
    cv: CMat,
    d: CMat,
    field: Field,
    sigma: Vec<f64>,
}

impl Balancer {
    pub fn new(q: &LoewnerQuadruple, f: &FactorPair) -> Result<Self> {
        let lp = f.controllability_factor();
        let lq = f.observability_factor();
        if lp.nrows() != q.wv.ncols() || lq.nrows() != q.wv.nrows() {
            return Err(Error::DimensionMismatch {
                context: "balanced reduction",
                detail: format!("factors {:?}, {:?} against W*V {:?}", lp.shape(), lq.shape(), q.wv.shape()),
            });
        }
        let real = [&q.wv, &q.wav, &q.wb, &q.cv, &lp, &lq].iter().all(|m| is_real(m));
        let (u, sigma, v) = linalg::svd(&(lq.adjoint() * &q.wv * &lp))?;
        Ok(Self {
            wr_full: lq * u,
            vr_full: lp * v,
            wav: q.wav.clone(),
            wb: q.wb.clone(),
            cv: q.cv.clone(),
            d: q.feedthrough(),
            field: if real { Field::Real } else { Field::Complex },
            sigma,
        })
    }

    /// Hankel-like values, nonincreasing.
    pub fn hankel_values(&self) -> &[f64] {
        &self.sigma
    }

    /// Largest order the numerical rank of the core matrix supports.
    pub fn achievable_order(&self) -> usize {
        let top = self.sigma.first().copied().unwrap_or(0.0);
        self.sigma.iter().filter(|&&s| top > 0.0 && s > RANK_TOL * top).count()
    }

    pub fn reduce(&self, r: usize) -> Result<ReducedModel> {
        if r == 0 {
            return Err(Error::OrderOutOfRange);
        }
        let achievable = self.achievable_order();
        if r > achievable {
            return Err(Error::RankDeficient { requested: r, achievable });
        }
        let scale = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            r,
            self.sigma[..r].iter().map(|s| C64::new(1.0 / s.sqrt(), 0.0)),
        ));
        let wr = self.wr_full.columns(0, r) * &scale;
        let vr = self.vr_full.columns(0, r) * &scale;
        let mut model = ReducedModel {
            a: wr.adjoint() * &self.wav * &vr,
            b: wr.adjoint() * &self.wb,
            c: &self.cv * vr,
            d: self.d.clone(),
            field: self.field,
            hankel_values: self.sigma.clone(),
        };
        if self.field == Field::Real {
            for m in [&mut model.a, &mut model.b, &mut model.c] {
                *m = m.map(|z| C64::new(z.re, 0.0));
            }
        }
        Ok(model)
    }
}

/// Hankel-like values only (singular values of `(Tw Lq)* W*V (Tv Lp)`).
pub fn hankel_values(q: &LoewnerQuadruple, f: &FactorPair) -> Result<Vec<f64>> {
    let core = f.observability_factor().adjoint() * &q.wv * f.controllability_factor();
    Ok(linalg::svd(&core)?.1)
}

/// Unitary `J` mapping conjugate-paired coordinates to real ones: each pair
/// `(a, b)` with `points[b] = conj(points[a])` gets the block
/// `(1/√2)·[[1, -j], [1, j]]`, real points get `1`.
pub fn conjugate_pair_transform(points: &[C64], block: usize) -> Result<CMat> {
    let v = points.len();
    let mut j = CMat::zeros(v, v);
    let mut used = vec![false; v];
    let mut col = 0;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for a in 0..v {
        if used[a] {
            continue;
        }
        let z = points[a];
        let tol = 1e-10 * z.norm().max(1.0);
        used[a] = true;
        if z.im.abs() <= tol {
            j[(a, col)] = C64::new(1.0, 0.0);
            col += 1;
            continue;
        }
        let b = (0..v)
            .find(|&b| !used[b] && (points[b] - z.conj()).norm() <= tol)
            .ok_or_else(|| Error::NotConjugateClosed(format!("point {a} ({z}) has no unused conjugate partner")))?;
        used[b] = true;
        j[(a, col)] = C64::new(h, 0.0);
        j[(b, col)] = C64::new(h, 0.0);
        j[(a, col + 1)] = C64::new(0.0, -h);
        j[(b, col + 1)] = C64::new(0.0, h);
        col += 2;
    }
    Ok(linalg::kron_eye(&j, block))
}

fn strip_imag(m: &CMat, scale: f64, tol: f64) -> Result<CMat> {
    let residue = m.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if residue > tol * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::ResidueTooLarge(residue / scale.max(f64::MIN_POSITIVE)));
    }
    Ok(m.map(|z| C64::new(z.re, 0.0)))
}

/// Realify a model whose state coordinates are paired like `points` (blocks of
/// size `block`), such as the PORK and structured interpolants.
pub fn realify(model: &ReducedModel, points: &[C64], block: usize) -> Result<ReducedModel> {
    if model.field == Field::Real {
        return Ok(model.clone());
    }
    let j = conjugate_pair_transform(points, block)?;
    if j.nrows() != model.order() {
        return Err(Error::DimensionMismatch {
            context: "realify",
            detail: format!("{} paired coordinates for order {}", j.nrows(), model.order()),
        });
    }
    let a = j.adjoint() * &model.a * &j;
    let b = j.adjoint() * &model.b;
    let c = &model.c * &j;
    Ok(ReducedModel {
        a: strip_imag(&a, a.norm(), REALIFY_TOL)?,
        b: strip_imag(&b, b.norm(), REALIFY_TOL)?,
        c: strip_imag(&c, c.norm(), REALIFY_TOL)?,
        d: strip_imag(&model.d, model.d.norm().max(1.0), REALIFY_TOL)?,
        field: Field::Real,
        hankel_values: model.hankel_values.clone(),
    })
}

/// Real factor `R` with `R Rᵀ = Re(X X*)`. For `X = Xr + jXi` this is
/// `Xr Xrᵀ + Xi Xiᵀ`, so `[Xr Xi]` is a factor and the Gramian is never
/// formed; forming it would square the condition number.
fn real_gramian_factor(x: &CMat) -> Result<CMat> {
    let (n, k) = x.shape();
    let xr = x.map(|z| C64::new(z.re, 0.0));
    let xi = x.map(|z| C64::new(z.im, 0.0));
    let imag_part = &xi * xr.transpose() - &xr * xi.transpose();
    let residue = imag_part.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    let scale = (x * x.adjoint()).norm().max(f64::MIN_POSITIVE);
    if residue > GRAMIAN_REALIFY_TOL * scale {
        return Err(Error::ResidueTooLarge(residue / scale));
    }
    let mut r = CMat::zeros(n, 2 * k);
    r.columns_mut(0, k).copy_from(&xr);
    r.columns_mut(k, k).copy_from(&xi);
    if 2 * k <= n {
        return Ok(r);
    }
    // Compress a wide factor to n columns; the SVD of real data stays real.
    let (u, sigma, _) = linalg::svd(&r)?;
    let mut out = u;
    for (j, s) in sigma.iter().enumerate() {
        out.column_mut(j).scale_mut(*s);
    }
    Ok(out)
}

/// Transform the quadruple and factors to real coordinates so that the
/// balanced reduction yields a real model. The factor gauge is re-chosen real;
/// the implied Gramian approximations are unchanged.
pub fn realify_input(q: &LoewnerQuadruple, f: &FactorPair) -> Result<(LoewnerQuadruple, FactorPair)> {
    let jv = conjugate_pair_transform(&q.right_points, q.m)?;
    let jw = conjugate_pair_transform(&q.left_points, q.p)?;
    let wv = jw.adjoint() * &q.wv * &jv;
    let wav = jw.adjoint() * &q.wav * &jv;
    let wb = jw.adjoint() * &q.wb;
    let cv = &q.cv * &jv;
    let rq = LoewnerQuadruple {
        wv: strip_imag(&wv, wv.norm(), REALIFY_TOL)?,
        wav: strip_imag(&wav, wav.norm(), REALIFY_TOL)?,
        wb: strip_imag(&wb, wb.norm(), REALIFY_TOL)?,
        cv: strip_imag(&cv, cv.norm(), REALIFY_TOL)?,
        ..q.clone()
    };
    let lp = real_gramian_factor(&(jv.adjoint() * f.controllability_factor()))?;
    let lq = real_gramian_factor(&(jw.adjoint() * f.observability_factor()))?;
    Ok((rq, FactorPair::untransformed(lp, lq)))
}

/// Balanced basis on realified inputs, reusable across orders.
pub fn real_balancer(q: &LoewnerQuadruple, f: &FactorPair) -> Result<Balancer> {
    let (rq, rf) = realify_input(q, f)?;
    Balancer::new(&rq, &rf)
}

/// Realify the inputs, then reduce: the standard path for sample data.
pub fn reduce_real(q: &LoewnerQuadruple, f: &FactorPair, r: usize) -> Result<ReducedModel> {
    real_balancer(q, f)?.reduce(r)
}

/// Anything with a frequency response.
pub trait FrequencyResponse: Sync {
    fn response(&self, s: C64) -> Result<CMat>;
}

impl FrequencyResponse for Realization {
    fn response(&self, s: C64) -> Result<CMat> {
        self.eval(s)
    }
}

impl FrequencyResponse for ReducedModel {
    fn response(&self, s: C64) -> Result<CMat> {
        self.eval(s)
    }
}

pub fn sigma_max(m: &CMat) -> f64 {
    if m.is_empty() {
        0.0
    } else if m.len() == 1 {
        m[(0, 0)].norm()
    } else {
        m.clone().singular_values().max()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HinfEstimate {
    pub value: f64,
    pub frequency: f64,
}

const GOLDEN_STEPS: usize = 40;

/// Golden-section maximization of `f` on `[lo, hi]`.
fn golden_max(f: impl Fn(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<HinfEstimate> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..GOLDEN_STEPS {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 >= f2 { HinfEstimate { value: f1, frequency: x1 } } else { HinfEstimate { value: f2, frequency: x2 } })
}

fn sweep_and_refine(values: &[f64], grid: &[f64], f: impl Fn(f64) -> Result<f64>) -> Result<HinfEstimate> {
    let (k, &best) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(Error::EmptyGrid)?;
    let lo = grid[k.saturating_sub(1)];
    let hi = grid[(k + 1).min(grid.len() - 1)];
    let refined = if hi > lo { golden_max(f, lo, hi)? } else { HinfEstimate { value: best, frequency: grid[k] } };
    Ok(if refined.value > best { refined } else { HinfEstimate { value: best, frequency: grid[k] } })
}

fn sorted_grid(grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut g: Vec<f64> = grid.iter().map(|w| w.abs()).collect();
    g.sort_by(f64::total_cmp);
    g.dedup();
    Ok(g)
}

/// H-infinity norm estimate: dense sweep of the largest singular value over
/// `grid` (rad/s), then golden-section refinement around the maximizer.
pub fn hinf_norm(sys: &dyn FrequencyResponse, grid: &[f64]) -> Result<HinfEstimate> {
    let grid = sorted_grid(grid)?;
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&w| sys.response(C64::new(0.0, w)).map(|g| sigma_max(&g)))
        .collect::<Result<_>>()?;
    sweep_and_refine(&values, &grid, |w| Ok(sigma_max(&sys.response(C64::new(0.0, w))?)))
}

/// Full-model responses cached on a grid, for repeated error evaluations.
pub struct ErrorSweep<'a> {
    full: &'a dyn FrequencyResponse,
    grid: Vec<f64>,
    values: Vec<CMat>,
    pub full_norm: HinfEstimate,
}

impl<'a> ErrorSweep<'a> {
    pub fn new(full: &'a dyn FrequencyResponse, grid: &[f64]) -> Result<Self> {
        let grid = sorted_grid(grid)?;
        let values: Vec<CMat> = grid.par_iter().map(|&w| full.response(C64::new(0.0, w))).collect::<Result<_>>()?;
        let norms: Vec<f64> = values.iter().map(sigma_max).collect();
        let full_norm = sweep_and_refine(&norms, &grid, |w| Ok(sigma_max(&full.response(C64::new(0.0, w))?)))?;
        Ok(Self { full, grid, values, full_norm })
    }

    /// `‖G - Ĝ‖∞` estimate.
    pub fn absolute_error(&self, rom: &dyn FrequencyResponse) -> Result<HinfEstimate> {
        let errs: Vec<f64> = self
            .grid
            .par_iter()
            .zip(self.values.par_iter())
            .map(|(&w, g)| rom.response(C64::new(0.0, w)).map(|gh| sigma_max(&(g - gh))))
            .collect::<Result<_>>()?;
        sweep_and_refine(&errs, &self.grid, |w| {
            let s = C64::new(0.0, w);
            Ok(sigma_max(&(self.full.response(s)? - rom.response(s)?)))
        })
    }

    /// `‖G - Ĝ‖∞ / ‖G‖∞` estimate.
    pub fn relative_error(&self, rom: &dyn FrequencyResponse) -> Result<f64> {
        Ok(self.absolute_error(rom)?.value / self.full_norm.value)
    }
}

pub fn relative_hinf_error(full: &dyn FrequencyResponse, rom: &dyn FrequencyResponse, grid: &[f64]) -> Result<f64> {
    ErrorSweep::new(full, grid)?.relative_error(rom)
}

/// Log grid on `[lo, hi]` with `count` points, plus zero and any extra
/// frequencies (typically the imaginary parts of the model poles).
pub fn error_grid(lo: f64, hi: f64, count: usize, extra: &[f64]) -> Vec<f64> {
    let mut g = crate::sampling::logspace(lo, hi, count);
    g.push(0.0);
    g.extend(extra.iter().map(|w| w.abs()));
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}
