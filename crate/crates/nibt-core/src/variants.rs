//! Balanced-truncation variants: factor pairs `(Tv·Lp, Tw·Lq)` computed from
//! the projected quadruple.
//!
//! Every variant is handled in transformed coordinates. On the input side a
//! variant supplies a block-diagonal transform `Tv = blkdiag(t_j)`, an input
//! weight, an optional transformed output matrix `C'` and the sign of the
//! quadratic term of its filter equation
//! `A' P + P A'^* + B' B'^* + quad·P C'^* C' P = 0`. In these coordinates the
//! interpolant has the standard shift structure `A' = S_v - B' L_v`, so the
//! ADI solution, the pole-placed projected equation and the block-diagonal
//! closed forms all take one shape for all variants. The output side is dual.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::interpolation::{self, build_shift_system, ShiftSystem};
use crate::linalg::{self, C64, CMat};
use crate::loewner::LoewnerQuadruple;
use crate::reduction::ReducedModel;

pub const DEFAULT_GAMMA: f64 = 2.0;
/// Points with `|Re s| ≤ AXIS_TOL·max(1, |s|)` count as imaginary-axis points.
pub const AXIS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    Bt,
    Lqg,
    Hinf { gamma: f64 },
    Pr,
    Br,
    Sw,
    Bst,
}

impl Variant {
    pub fn all(gamma: f64) -> [Variant; 7] {
        [Variant::Bt, Variant::Lqg, Variant::Hinf { gamma }, Variant::Pr, Variant::Br, Variant::Sw, Variant::Bst]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Bt => "bt",
            Variant::Lqg => "lqg",
            Variant::Hinf { .. } => "hinf",
            Variant::Pr => "pr",
            Variant::Br => "br",
            Variant::Sw => "sw",
            Variant::Bst => "bst",
        }
    }

    /// Scale of the quadratic Riccati term for LQG-type variants.
    fn lqg_gain(&self) -> f64 {
        match self {
            Variant::Hinf { gamma } => 1.0 - gamma.powi(-2),
            _ => 1.0,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "bt" => Variant::Bt,
            "lqg" => Variant::Lqg,
            "hinf" => Variant::Hinf { gamma: DEFAULT_GAMMA },
            "pr" => Variant::Pr,
            "br" => Variant::Br,
            "sw" => Variant::Sw,
            "bst" => Variant::Bst,
            _ => {
                return Err(Error::Parse {
                    location: "variant".into(),
                    message: format!("unknown variant {s:?} (expected bt, lqg, hinf, pr, br, sw or bst)"),
                })
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Right-half-plane samples; low-rank ADI Gramians.
    Adi,
    /// Imaginary-axis samples; pole-placed projected Gramians.
    Ddp,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Adi => "adi",
            Mode::Ddp => "ddp",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adi" => Ok(Mode::Adi),
            "ddp" => Ok(Mode::Ddp),
            _ => Err(Error::Parse { location: "mode".into(), message: format!("unknown mode {s:?} (expected adi or ddp)") }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantConfig {
    pub variant: Variant,
    pub mode: Mode,
    /// Damping of the pole-placed interpolants in DDP mode.
    pub epsilon: f64,
    /// Use the block-diagonal closed forms instead of the full solves.
    pub fast_path: bool,
    /// Input-side free parameter (`v·m x m`) used instead of pole placement.
    pub zeta_right: Option<CMat>,
    /// Output-side free parameter (`p x w·p`) used instead of pole placement.
    pub zeta_left: Option<CMat>,
}

impl VariantConfig {
    pub fn adi(variant: Variant) -> Self {
        Self { variant, mode: Mode::Adi, epsilon: 0.0, fast_path: false, zeta_right: None, zeta_left: None }
    }

    pub fn ddp(variant: Variant, epsilon: f64) -> Self {
        Self { variant, mode: Mode::Ddp, epsilon, fast_path: false, zeta_right: None, zeta_left: None }
    }

    pub fn fast(mut self) -> Self {
        self.fast_path = true;
        self
    }

    /// Supply the free parameters. `left = None` uses the transpose of `right`.
    pub fn with_zeta(mut self, right: CMat, left: Option<CMat>) -> Self {
        self.zeta_left = Some(left.unwrap_or_else(|| right.transpose()));
        self.zeta_right = Some(right);
        self
    }

    /// Whether epsilon enters the computation (DDP mode without both free
    /// parameters supplied, or the DDP closed forms).
    pub fn uses_epsilon(&self) -> bool {
        self.mode == Mode::Ddp && (self.fast_path || self.zeta_right.is_none() || self.zeta_left.is_none())
    }

    /// Check the configuration against the quadruple it will be applied to.
    pub fn validate(&self, q: &LoewnerQuadruple) -> Result<()> {
        check_feedthrough(&self.variant, &q.d)?;
        if q.v() == 0 || q.w() == 0 {
            return Err(Error::AssumptionViolated("both sample sides must be non-empty".into()));
        }
        for &z in q.right_points.iter().chain(&q.left_points) {
            match self.mode {
                Mode::Adi if z.re <= 0.0 => {
                    return Err(Error::ModePointMismatch(format!("adi mode needs right-half-plane points, got {z}")))
                }
                Mode::Ddp if z.re.abs() > AXIS_TOL * z.norm().max(1.0) => {
                    return Err(Error::ModePointMismatch(format!("ddp mode needs imaginary-axis points, got {z}")))
                }
                _ => {}
            }
        }
        let supplied = self.zeta_right.is_some() || self.zeta_left.is_some();
        if self.mode == Mode::Ddp && self.uses_epsilon() && !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::AssumptionViolated(format!("ddp mode needs epsilon > 0, got {}", self.epsilon)));
        }
        if self.mode == Mode::Adi && supplied {
            return Err(Error::ModePointMismatch("a supplied free parameter needs ddp mode".into()));
        }
        if self.fast_path && supplied {
            return Err(Error::AssumptionViolated("a supplied free parameter needs the exact path".into()));
        }
        let (vm, wp) = (q.v() * q.m, q.w() * q.p);
        if let Some(z) = &self.zeta_right {
            if z.shape() != (vm, q.m) {
                return Err(Error::DimensionMismatch {
                    context: "right free parameter",
                    detail: format!("expected {vm}x{}, got {:?}", q.m, z.shape()),
                });
            }
        }
        if let Some(z) = &self.zeta_left {
            if z.shape() != (q.p, wp) {
                return Err(Error::DimensionMismatch {
                    context: "left free parameter",
                    detail: format!("expected {}x{wp}, got {:?}", q.p, z.shape()),
                });
            }
        }
        if self.variant == Variant::Bst && self.fast_path && q.v() != q.w() {
            return Err(Error::AssumptionViolated(format!(
                "the bst closed form pairs right and left points and needs v = w (got {} and {})",
                q.v(),
                q.w()
            )));
        }
        Ok(())
    }
}

fn require_pd(m: &DMatrix<f64>, what: &str) -> Result<()> {
    let sym = (m + m.transpose()) * 0.5;
    let e = nalgebra::SymmetricEigen::new(sym).eigenvalues;
    let min = e.min();
    let scale = e.amax().max(1.0);
    if min > 1e-12 * scale {
        Ok(())
    } else {
        Err(Error::AssumptionViolated(format!("{what} is not positive definite (min eigenvalue {min:.3e})")))
    }
}

/// Check the variant's assumptions on the feedthrough `D`.
pub fn check_feedthrough(variant: &Variant, d: &DMatrix<f64>) -> Result<()> {
    let (p, m) = d.shape();
    let square = || if p == m { Ok(()) } else { Err(Error::NotSquare { p, m }) };
    match *variant {
        Variant::Hinf { gamma } if !(gamma > 1.0) => Err(Error::GammaOutOfRange(gamma)),
        Variant::Pr => {
            square()?;
            require_pd(&(d + d.transpose()), "D + D^T")
        }
        Variant::Br => {
            require_pd(&(DMatrix::identity(p, p) - d * d.transpose()), "I - D D^T")?;
            require_pd(&(DMatrix::identity(m, m) - d.transpose() * d), "I - D^T D")
        }
        Variant::Sw => {
            square()?;
            require_pd(&(d * d.transpose()), "D D^T")
        }
        Variant::Bst => require_pd(&(d * d.transpose()), "D D^T"),
        _ => Ok(()),
    }
}

/// Feedthrough-derived weights shared by the variant equations.
pub(crate) struct Weights {
    pub d: CMat,
    /// `D + D^T`
    pub r_pr: CMat,
    /// `I - D D^T`
    pub r_p: CMat,
    /// `I - D^T D`
    pub r_q: CMat,
    /// `I + D^T R_p^{-1} D`
    pub r_b: CMat,
    /// `I + D R_q^{-1} D^T`
    pub r_c: CMat,
    /// `D D^T`
    pub r_s: CMat,
}

impl Weights {
    pub fn new(d: &DMatrix<f64>) -> Self {
        let (p, m) = d.shape();
        let d = linalg::to_complex(d);
        let dt = d.transpose();
        let r_p = linalg::eye(p) - &d * &dt;
        let r_q = linalg::eye(m) - &dt * &d;
        // the pseudo-inverses only matter when the BR assumptions fail, which
        // is rejected before any of these are used
        let rp_inv = r_p.clone().try_inverse().unwrap_or_else(|| linalg::eye(p));
        let rq_inv = r_q.clone().try_inverse().unwrap_or_else(|| linalg::eye(m));
        Self {
            r_pr: if p == m { &d + &dt } else { CMat::zeros(m, m) },
            r_b: linalg::eye(m) + &dt * rp_inv * &d,
            r_c: linalg::eye(p) + &d * rq_inv * &dt,
            r_s: &d * &dt,
            r_p,
            r_q,
            d,
        }
    }
}

/// Input-side data in transformed coordinates.
struct InputSide {
    t_blocks: Vec<CMat>,
    /// `zeta = Tv B' weight^{-1}` maps transformed to original free parameters.
    weight: CMat,
    c: Option<CMat>,
    quad: f64,
}

/// Output-side data in transformed coordinates.
struct OutputSide {
    t_blocks: Vec<CMat>,
    /// `zeta' = k^{-1} zeta X` with `X = Tw^{-*}`.
    k: CMat,
    b: Option<CMat>,
    quad: f64,
}

fn identity_blocks(count: usize, size: usize) -> Vec<CMat> {
    vec![linalg::eye(size); count]
}

fn input_side(q: &LoewnerQuadruple, variant: &Variant, w: &Weights) -> Result<InputSide> {
    let m = q.m;
    let plain = |c: Option<CMat>, quad| InputSide { t_blocks: identity_blocks(q.v(), m), weight: linalg::eye(m), c, quad };
    Ok(match variant {
        Variant::Bt | Variant::Sw | Variant::Bst => plain(None, 0.0),
        Variant::Lqg | Variant::Hinf { .. } => plain(Some(q.cv.clone()), -variant.lqg_gain()),
        Variant::Pr => {
            let r_inv = linalg::inverse(&w.r_pr, "D + D^T")?;
            let r_mh = linalg::inv_sqrt_pd(&w.r_pr, "D + D^T")?;
            let t_blocks = (0..q.v())
                .map(|j| Ok(linalg::inverse(&(linalg::eye(m) + &r_inv * q.right_value(j)), "T_v block")? * &r_mh))
                .collect::<Result<Vec<_>>>()?;
            let c = &r_mh * &q.cv * linalg::block_diag(&t_blocks);
            InputSide { t_blocks, weight: r_mh, c: Some(c), quad: 1.0 }
        }
        Variant::Br => {
            let rp_inv = linalg::inverse(&w.r_p, "I - D D^T")?;
            let rb_h = linalg::sqrt_psd(&w.r_b)?;
            let coupling = w.d.transpose() * &rp_inv;
            let t_blocks = (0..q.v())
                .map(|j| Ok(linalg::inverse(&(linalg::eye(m) - &coupling * q.right_value(j)), "T_v block")? * &rb_h))
                .collect::<Result<Vec<_>>>()?;
            let c = linalg::inv_sqrt_pd(&w.r_p, "I - D D^T")? * &q.cv * linalg::block_diag(&t_blocks);
            InputSide { t_blocks, weight: rb_h, c: Some(c), quad: 1.0 }
        }
    })
}

/// `WV·P̂·CV^* + WB·D^T`: the projected `P C^* + B D^T` coupling of the
/// stochastic variant.
fn bst_coupling(q: &LoewnerQuadruple, p_hat: &CMat, w: &Weights) -> CMat {
    &q.wv * p_hat * q.cv.adjoint() + &q.wb * w.d.transpose()
}

/// Block-diagonal coupling: diagonal block `i` of `WV`, scaled by the
/// diagonal Gramian approximation `scale_i`.
fn bst_coupling_blocks(q: &LoewnerQuadruple, scale: &[f64], w: &Weights) -> CMat {
    let p = q.p;
    let mut out = CMat::zeros(q.w() * p, p);
    for (i, &s) in scale.iter().enumerate() {
        let block = q.wv_block(i, i) * q.right_value(i).adjoint() * C64::new(s, 0.0) + q.left_value(i) * w.d.transpose();
        out.view_mut((i * p, 0), (p, p)).copy_from(&block);
    }
    out
}

fn output_side(q: &LoewnerQuadruple, variant: &Variant, w: &Weights, coupling: Option<&CMat>) -> Result<OutputSide> {
    let p = q.p;
    let plain = |b: Option<CMat>, quad| OutputSide { t_blocks: identity_blocks(q.w(), p), k: linalg::eye(p), b, quad };
    let blocks = |f: &dyn Fn(usize) -> Result<CMat>| (0..q.w()).map(f).collect::<Result<Vec<_>>>();
    Ok(match variant {
        Variant::Bt => plain(None, 0.0),
        Variant::Lqg | Variant::Hinf { .. } => plain(Some(q.wb.clone()), -variant.lqg_gain()),
        Variant::Pr => {
            let r_inv = linalg::inverse(&w.r_pr, "D + D^T")?;
            let r_mh = linalg::inv_sqrt_pd(&w.r_pr, "D + D^T")?;
            let t_blocks = blocks(&|i| {
                Ok(linalg::inverse(&(linalg::eye(p) + &r_inv * q.left_value(i).adjoint()), "T_w block")? * &r_mh)
            })?;
            let b = linalg::block_diag(&t_blocks).adjoint() * &q.wb * &r_mh;
            OutputSide { t_blocks, k: linalg::sqrt_psd(&w.r_pr)?, b: Some(b), quad: 1.0 }
        }
        Variant::Br => {
            let rq_inv = linalg::inverse(&w.r_q, "I - D^T D")?;
            let rc_h = linalg::sqrt_psd(&w.r_c)?;
            let coupling = &w.d * &rq_inv;
            let t_blocks = blocks(&|i| {
                Ok(linalg::inverse(&(linalg::eye(p) - &coupling * q.left_value(i).adjoint()), "T_w block")? * &rc_h)
            })?;
            let b = linalg::block_diag(&t_blocks).adjoint() * &q.wb * linalg::inv_sqrt_pd(&w.r_q, "I - D^T D")?;
            OutputSide { t_blocks, k: linalg::inv_sqrt_pd(&w.r_c, "R_c")?, b: Some(b), quad: 1.0 }
        }
        Variant::Sw => {
            let t_blocks = blocks(&|i| Ok(linalg::inverse(&(&w.d + q.left_value(i)), "T_w block")?.adjoint()))?;
            OutputSide { t_blocks, k: w.d.clone(), b: None, quad: 0.0 }
        }
        Variant::Bst => {
            let hc = coupling.ok_or_else(|| Error::InvariantViolation("bst output side needs the input Gramian".into()))?;
            let rs_h = linalg::sqrt_psd(&w.r_s)?;
            let t_blocks = blocks(&|i| {
                let hi = hc.rows(i * p, p).adjoint();
                Ok(linalg::inverse(&(&w.r_s + hi), "T_w block")? * &rs_h)
            })?;
            let b = linalg::block_diag(&t_blocks).adjoint() * hc * linalg::inv_sqrt_pd(&w.r_s, "D D^T")?;
            OutputSide { t_blocks, k: rs_h, b: Some(b), quad: 1.0 }
        }
    })
}

/// Gramian approximation of one side in transformed coordinates, stored in
/// whichever form the mode produces.
enum SideGramian {
    /// The Gramian itself.
    Direct(CMat),
    /// The inverse of the Gramian (ADI mode produces `Q_v` and `P_w`).
    Inverse(CMat, &'static str),
}

impl SideGramian {
    fn factor(&self) -> Result<CMat> {
        match self {
            SideGramian::Direct(m) => linalg::psd_factor(m),
            SideGramian::Inverse(m, what) => linalg::inverse_psd_factor(m, what),
        }
    }

    fn matrix(&self) -> Result<CMat> {
        match self {
            SideGramian::Direct(m) => Ok(m.clone()),
            SideGramian::Inverse(m, what) => interpolation::solve_guarded(m, &linalg::eye(m.nrows()), what, interpolation::SPACING_HINT),
        }
    }
}

fn gram_column_blocks(c: &CMat, j: usize, k: usize) -> CMat {
    let cj = c.columns(j * k, k);
    cj.adjoint() * cj
}

fn gram_row_blocks(b: &CMat, i: usize, k: usize) -> CMat {
    let bi = b.rows(i * k, k);
    bi * bi.adjoint()
}

/// `epsilon (I + (I - quad·M)^{1/2})^{-1}`, the diagonal block of the
/// pole-placed projected Gramian in the small-epsilon limit.
fn ddp_block(m: &CMat, quad: f64, epsilon: f64) -> Result<CMat> {
    let k = m.nrows();
    let root = linalg::sqrt_psd(&linalg::hermitian_part(&(linalg::eye(k) - m * C64::new(quad, 0.0))))?;
    let inv = linalg::inverse(&(linalg::eye(k) + root), "closed-form Gramian block")?;
    Ok(linalg::hermitian_part(&(inv * C64::new(epsilon, 0.0))))
}

fn riccati_or_lyapunov(a: &CMat, b: &CMat, c: Option<&CMat>, quad: f64) -> Result<CMat> {
    let bb = linalg::hermitian_part(&(b * b.adjoint()));
    match c {
        Some(c) if quad != 0.0 => {
            let cc = linalg::hermitian_part(&(c.adjoint() * c));
            linalg::solve_care_stabilizing(&a.adjoint(), &cc, &bb, quad)
        }
        _ => linalg::solve_lyapunov(a, &bb),
    }
}

fn input_gramian(q: &LoewnerQuadruple, cfg: &VariantConfig, side: &InputSide, shift: &ShiftSystem) -> Result<SideGramian> {
    let m = q.m;
    let c_gram = |j: usize| match &side.c {
        Some(c) => gram_column_blocks(c, j, m),
        None => CMat::zeros(m, m),
    };
    let quad = C64::new(side.quad, 0.0);
    match (cfg.mode, cfg.fast_path) {
        (Mode::Adi, false) => {
            let mut rhs = shift.l.adjoint() * &shift.l;
            if let Some(c) = &side.c {
                rhs -= c.adjoint() * c * quad;
            }
            let qv = linalg::solve_lyapunov(&(-shift.s.adjoint()), &linalg::hermitian_part(&rhs))?;
            Ok(SideGramian::Inverse(qv, "Q_v"))
        }
        (Mode::Adi, true) => {
            let blocks = (0..q.v())
                .map(|j| {
                    let scale = 2.0 * q.right_points[j].re;
                    let inner = linalg::eye(m) - c_gram(j) * quad;
                    Ok(linalg::hermitian_part(&(linalg::inverse(&inner, "Q_v block")? * C64::new(scale, 0.0))))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SideGramian::Direct(linalg::block_diag(&blocks)))
        }
        (Mode::Ddp, false) => {
            let b = match &cfg.zeta_right {
                Some(zeta) => {
                    let t_inv = linalg::block_diag(
                        &side.t_blocks.iter().map(|t| linalg::inverse(t, "T_v block")).collect::<Result<Vec<_>>>()?,
                    );
                    t_inv * zeta * &side.weight
                }
                None => {
                    let desired = interpolation::damped_poles(&q.right_points, cfg.epsilon);
                    interpolation::pole_place_zeta(shift, &desired)?.zeta
                }
            };
            let a = &shift.s - &b * &shift.l;
            Ok(SideGramian::Direct(riccati_or_lyapunov(&a, &b, side.c.as_ref(), side.quad)?))
        }
        (Mode::Ddp, true) => {
            let blocks = (0..q.v()).map(|j| ddp_block(&c_gram(j), side.quad, cfg.epsilon)).collect::<Result<Vec<_>>>()?;
            Ok(SideGramian::Direct(linalg::block_diag(&blocks)))
        }
    }
}

fn output_gramian(q: &LoewnerQuadruple, cfg: &VariantConfig, side: &OutputSide, shift: &ShiftSystem) -> Result<SideGramian> {
    let p = q.p;
    let b_gram = |i: usize| match &side.b {
        Some(b) => gram_row_blocks(b, i, p),
        None => CMat::zeros(p, p),
    };
    let quad = C64::new(side.quad, 0.0);
    match (cfg.mode, cfg.fast_path) {
        (Mode::Adi, false) => {
            let lw = shift.l_col();
            let mut rhs = &lw * lw.adjoint();
            if let Some(b) = &side.b {
                rhs -= b * b.adjoint() * quad;
            }
            let pw = linalg::solve_lyapunov(&(-&shift.s), &linalg::hermitian_part(&rhs))?;
            Ok(SideGramian::Inverse(pw, "P_w"))
        }
        (Mode::Adi, true) => {
            let blocks = (0..q.w())
                .map(|i| {
                    let scale = 2.0 * q.left_points[i].re;
                    let inner = linalg::eye(p) - b_gram(i) * quad;
                    Ok(linalg::hermitian_part(&(linalg::inverse(&inner, "P_w block")? * C64::new(scale, 0.0))))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SideGramian::Direct(linalg::block_diag(&blocks)))
        }
        (Mode::Ddp, false) => {
            let zeta = match &cfg.zeta_left {
                Some(zeta) => {
                    let x = linalg::block_diag(
                        &side
                            .t_blocks
                            .iter()
                            .map(|t| Ok(linalg::inverse(t, "T_w block")?.adjoint()))
                            .collect::<Result<Vec<_>>>()?,
                    );
                    linalg::inverse(&side.k, "output weight")? * zeta * x
                }
                None => {
                    let desired = interpolation::damped_poles(&q.left_points, cfg.epsilon);
                    interpolation::pole_place_zeta_left(shift, &desired)?.zeta
                }
            };
            let a = &shift.s - shift.l_col() * &zeta;
            let zz = linalg::hermitian_part(&(zeta.adjoint() * &zeta));
            let gram = match &side.b {
                Some(b) if side.quad != 0.0 => {
                    linalg::solve_care_stabilizing(&a, &linalg::hermitian_part(&(b * b.adjoint())), &zz, side.quad)?
                }
                _ => linalg::solve_lyapunov(&a.adjoint(), &zz)?,
            };
            Ok(SideGramian::Direct(gram))
        }
        (Mode::Ddp, true) => {
            let blocks = (0..q.w()).map(|i| ddp_block(&b_gram(i), side.quad, cfg.epsilon)).collect::<Result<Vec<_>>>()?;
            Ok(SideGramian::Direct(linalg::block_diag(&blocks)))
        }
    }
}

/// Gramian factors with their coordinate transforms. The effective factors
/// entering the balanced reduction are `Tv·Lp` and `Tw·Lq`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub tv: CMat,
    pub lp: CMat,
    pub tw: CMat,
    pub lq: CMat,
}

impl FactorPair {
    /// Factors with identity transforms.
    pub fn untransformed(lp: CMat, lq: CMat) -> Self {
        Self { tv: linalg::eye(lp.nrows()), tw: linalg::eye(lq.nrows()), lp, lq }
    }

    pub fn controllability_factor(&self) -> CMat {
        &self.tv * &self.lp
    }

    pub fn observability_factor(&self) -> CMat {
        &self.tw * &self.lq
    }
}

struct Prepared {
    weights: Weights,
    right: ShiftSystem,
    left: ShiftSystem,
    input: InputSide,
}

fn prepare(q: &LoewnerQuadruple, cfg: &VariantConfig) -> Result<Prepared> {
    cfg.validate(q)?;
    let weights = Weights::new(&q.d);
    let input = input_side(q, &cfg.variant, &weights)?;
    Ok(Prepared {
        right: build_shift_system(&q.right_points, q.m)?,
        left: build_shift_system(&q.left_points, q.p)?,
        input,
        weights,
    })
}

fn bst_output_coupling(q: &LoewnerQuadruple, cfg: &VariantConfig, w: &Weights, p_gram: &SideGramian) -> Result<CMat> {
    if cfg.fast_path {
        let scale: Vec<f64> = match cfg.mode {
            Mode::Adi => q.right_points.iter().map(|z| 2.0 * z.re).collect(),
            Mode::Ddp => vec![cfg.epsilon / 2.0; q.v()],
        };
        Ok(bst_coupling_blocks(q, &scale, w))
    } else {
        Ok(bst_coupling(q, &p_gram.matrix()?, w))
    }
}

/// Factor pair of the configured variant and mode.
pub fn compute_factors(q: &LoewnerQuadruple, cfg: &VariantConfig) -> Result<FactorPair> {
    let prep = prepare(q, cfg)?;
    let w = &prep.weights;
    let tv = linalg::block_diag(&prep.input.t_blocks);
    let (p_gram, lq_tw) = if cfg.variant == Variant::Bst {
        let p_gram = input_gramian(q, cfg, &prep.input, &prep.right)?;
        let hc = bst_output_coupling(q, cfg, w, &p_gram)?;
        let out = output_side(q, &cfg.variant, w, Some(&hc))?;
        let lq = output_gramian(q, cfg, &out, &prep.left)?.factor()?;
        (Ok(p_gram), Ok((lq, linalg::block_diag(&out.t_blocks))))
    } else {
        rayon::join(
            || input_gramian(q, cfg, &prep.input, &prep.right),
            || -> Result<(CMat, CMat)> {
                let out = output_side(q, &cfg.variant, w, None)?;
                let lq = output_gramian(q, cfg, &out, &prep.left)?.factor()?;
                Ok((lq, linalg::block_diag(&out.t_blocks)))
            },
        )
    };
    let lp = p_gram?.factor()?;
    let (lq, tw) = lq_tw?;
    Ok(FactorPair { tv, lp, tw, lq })
}

/// Input-side Gramian approximation in transformed coordinates (`P̂` in DDP
/// mode, `Q_v^{-1}` in ADI mode, block diagonal on the fast path).
pub fn input_gramian_matrix(q: &LoewnerQuadruple, cfg: &VariantConfig) -> Result<CMat> {
    let prep = prepare(q, cfg)?;
    input_gramian(q, cfg, &prep.input, &prep.right)?.matrix()
}

/// Input-side transform `Tv`.
pub fn input_transform(q: &LoewnerQuadruple, variant: &Variant) -> Result<CMat> {
    check_feedthrough(variant, &q.d)?;
    let w = Weights::new(&q.d);
    Ok(linalg::block_diag(&input_side(q, variant, &w)?.t_blocks))
}

/// Input-side transform obtained from the full Sylvester equation
/// `(S_v - zeta L_v - zeta K) T - T S_v + zeta W L_v = 0`, where `K` is the
/// variant's output coupling row and `W` its input weight. Only the positive-
/// and bounded-real variants transform the input side.
pub fn input_transform_sylvester(q: &LoewnerQuadruple, variant: &Variant, zeta: &CMat) -> Result<CMat> {
    check_feedthrough(variant, &q.d)?;
    let w = Weights::new(&q.d);
    let (coupling, weight) = match variant {
        Variant::Pr => (linalg::inverse(&w.r_pr, "D + D^T")? * &q.cv, linalg::inv_sqrt_pd(&w.r_pr, "D + D^T")?),
        Variant::Br => (
            -(w.d.transpose() * linalg::inverse(&w.r_p, "I - D D^T")? * &q.cv),
            linalg::sqrt_psd(&w.r_b)?,
        ),
        _ => return Ok(linalg::eye(q.v() * q.m)),
    };
    let shift = build_shift_system(&q.right_points, q.m)?;
    let a = &shift.s - zeta * &shift.l - zeta * coupling;
    linalg::solve_sylvester(&a, &(-&shift.s), &(zeta * weight * &shift.l))
}

/// Largest norm of an off-diagonal `k x k` block.
pub fn max_offdiag_block_norm(m: &CMat, k: usize) -> f64 {
    let n = m.nrows() / k;
    let mut best: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                best = best.max(linalg::svd(&m.view((i * k, j * k), (k, k)).clone_owned()).map(|s| s.1[0]).unwrap_or(f64::NAN));
            }
        }
    }
    best
}

/// Structure-preserving interpolant of the exact ADI path: the positive-real
/// interpolant for PR, the bounded-real one for BR, the minimum-phase output
/// interpolant for SW and the I-PORK interpolant of the variant's input
/// Gramian otherwise.
pub fn structured_interpolant(q: &LoewnerQuadruple, cfg: &VariantConfig) -> Result<ReducedModel> {
    if cfg.mode != Mode::Adi || cfg.fast_path {
        return Err(Error::AssumptionViolated("structured interpolants are defined for the exact adi path".into()));
    }
    let prep = prepare(q, cfg)?;
    let w = &prep.weights;
    let d = w.d.clone();
    if cfg.variant == Variant::Sw {
        let out = output_side(q, &cfg.variant, w, None)?;
        let pw = match output_gramian(q, cfg, &out, &prep.left)? {
            SideGramian::Inverse(m, _) => m,
            SideGramian::Direct(_) => unreachable!("exact adi path yields P_w"),
        };
        let lw = prep.left.l_col();
        let zeta = interpolation::solve_guarded(&pw, &prep.left.l.adjoint(), "P_w", "re-space the interpolation points")?.adjoint();
        let b = linalg::block_diag(&out.t_blocks).adjoint() * &q.wb;
        let a = &prep.left.s - &lw * &zeta + &b * &zeta;
        let c = &d * &zeta;
        return Ok(ReducedModel::complex(a, b, c, d));
    }
    let qv = match input_gramian(q, cfg, &prep.input, &prep.right)? {
        SideGramian::Inverse(m, _) => m,
        SideGramian::Direct(_) => unreachable!("exact adi path yields Q_v"),
    };
    let bp = interpolation::solve_guarded(&qv, &prep.right.l.adjoint(), "Q_v", "re-space the interpolation points")?;
    let base = &prep.right.s - &bp * &prep.right.l;
    let t = linalg::block_diag(&prep.input.t_blocks);
    Ok(match cfg.variant {
        Variant::Pr => {
            let c_pr = prep.input.c.as_ref().expect("pr input side has an output matrix");
            let r_h = linalg::sqrt_psd(&w.r_pr)?;
            ReducedModel::complex(&base + &bp * c_pr, &bp * &r_h, &r_h * c_pr, d)
        }
        Variant::Br => {
            let b = &bp * linalg::inv_sqrt_pd(&w.r_b, "R_b")?;
            let c = &q.cv * &t;
            let a = &base - &b * w.d.transpose() * linalg::inverse(&w.r_p, "I - D D^T")? * &c;
            ReducedModel::complex(a, b, c, d)
        }
        _ => ReducedModel::complex(base, bp, q.cv.clone(), d),
    })
}
