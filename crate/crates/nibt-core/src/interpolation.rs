//! Shift systems, the PORK interpolants, pole placement of the free parameter
//! and the epsilon selection rules.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{self, C64, CMat, COND_GUARD};
use crate::reduction::ReducedModel;

/// `S = diag(points) ⊗ I_k` and `L = 1^T ⊗ I_k` (`k x v·k`).
///
/// On the left side the column form `L^T` is the one that enters the
/// equations; it is available through [`ShiftSystem::l_col`].
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSystem {
    pub s: CMat,
    pub l: CMat,
    pub points: Vec<C64>,
    pub block_size: usize,
}

impl ShiftSystem {
    /// Build without checking the points.
    pub fn new(points: &[C64], block_size: usize) -> Self {
        let v = points.len();
        let diag = CMat::from_diagonal(&nalgebra::DVector::from_column_slice(points));
        let ones = CMat::from_element(1, v, C64::new(1.0, 0.0));
        Self {
            s: linalg::kron_eye(&diag, block_size),
            l: linalg::kron_eye(&ones, block_size),
            points: points.to_vec(),
            block_size,
        }
    }

    pub fn l_col(&self) -> CMat {
        self.l.transpose()
    }

    pub fn dim(&self) -> usize {
        self.points.len() * self.block_size
    }
}

/// Build the shift system, rejecting repeated points.
pub fn build_shift_system(points: &[C64], block_size: usize) -> Result<ShiftSystem> {
    let scale = points.iter().map(|z| z.norm()).fold(1.0, f64::max);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if (points[i] - points[j]).norm() <= 1e-12 * scale {
                return Err(Error::DegeneratePoints(format!("points {i} and {j} coincide ({})", points[i])));
            }
        }
    }
    Ok(ShiftSystem::new(points, block_size))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Input side: `zeta` is `v·m x m`, interpolant matrix `S_v - zeta L_v`.
    Right,
    /// Output side: `zeta` is `p x w·p`, interpolant matrix `S_w - L_w^T zeta`.
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZetaSource {
    IPork,
    OPork,
    PolePlaced,
    Supplied,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreeParameter {
    pub zeta: CMat,
    pub side: Side,
    pub source: ZetaSource,
}

impl FreeParameter {
    /// State matrix of the interpolant this parameter defines.
    pub fn state_matrix(&self, shift: &ShiftSystem) -> CMat {
        match self.side {
            Side::Right => &shift.s - &self.zeta * &shift.l,
            Side::Left => &shift.s - shift.l_col() * &self.zeta,
        }
    }
}

fn check_rhp(points: &[C64]) -> Result<()> {
    match points.iter().find(|z| z.re <= 0.0) {
        Some(&point) => Err(Error::PointNotInRhp { point }),
        None => Ok(()),
    }
}

/// Solve `A X = B` for Gramian-like `A`, refusing near-singular systems.
pub(crate) fn solve_guarded(a: &CMat, b: &CMat, what: &'static str, hint: &str) -> Result<CMat> {
    let cond = linalg::cond2(a);
    if !(cond <= COND_GUARD) {
        return Err(Error::Singular { what, cond, hint: hint.to_string() });
    }
    linalg::solve(a, b, what)
}

pub(crate) const SPACING_HINT: &str = "use fewer or better separated interpolation points, or a smaller epsilon in DDP mode";

/// `Q_v` solving `-S_v^* Q - Q S_v + L_v^T L_v = 0`.
pub fn pork_qv(shift: &ShiftSystem) -> Result<CMat> {
    linalg::solve_lyapunov(&(-shift.s.adjoint()), &(shift.l.adjoint() * &shift.l))
}

/// `P_w` solving `-S_w P - P S_w^* + L_w L_w^T = 0`.
pub fn pork_pw(shift: &ShiftSystem) -> Result<CMat> {
    let lw = shift.l_col();
    linalg::solve_lyapunov(&(-&shift.s), &(&lw * lw.adjoint()))
}

/// Input-side pseudo-optimal interpolant: `B = Q_v^{-1} L_v^T`,
/// `A = S_v - B L_v`, `C = CV`.
pub fn i_pork(shift: &ShiftSystem, cv: &CMat, d: &CMat) -> Result<ReducedModel> {
    check_rhp(&shift.points)?;
    let qv = pork_qv(shift)?;
    let b = solve_guarded(&qv, &shift.l.adjoint(), "Q_v", SPACING_HINT)?;
    let a = &shift.s - &b * &shift.l;
    Ok(ReducedModel::complex(a, b, cv.clone(), d.clone()))
}

/// Output-side pseudo-optimal interpolant: `C = L_w^T P_w^{-1}`,
/// `A = S_w - L_w C`, `B = WB`.
pub fn o_pork(shift: &ShiftSystem, wb: &CMat, d: &CMat) -> Result<ReducedModel> {
    check_rhp(&shift.points)?;
    let pw = pork_pw(shift)?;
    let c = solve_guarded(&pw, &shift.l.adjoint(), "P_w", SPACING_HINT)?.adjoint();
    let a = &shift.s - shift.l_col() * &c;
    Ok(ReducedModel::complex(a, wb.clone(), c, d.clone()))
}

/// I-PORK free parameter `Q_v^{-1} L_v^T`.
pub fn i_pork_zeta(shift: &ShiftSystem) -> Result<FreeParameter> {
    check_rhp(&shift.points)?;
    let zeta = solve_guarded(&pork_qv(shift)?, &shift.l.adjoint(), "Q_v", SPACING_HINT)?;
    Ok(FreeParameter { zeta, side: Side::Right, source: ZetaSource::IPork })
}

/// O-PORK free parameter `L_w^T P_w^{-1}`.
pub fn o_pork_zeta(shift: &ShiftSystem) -> Result<FreeParameter> {
    check_rhp(&shift.points)?;
    let zeta = solve_guarded(&pork_pw(shift)?, &shift.l.adjoint(), "P_w", SPACING_HINT)?.adjoint();
    Ok(FreeParameter { zeta, side: Side::Left, source: ZetaSource::OPork })
}

fn check_desired(shift: &ShiftSystem, desired: &[C64]) -> Result<()> {
    if desired.len() != shift.points.len() {
        return Err(Error::DimensionMismatch {
            context: "pole placement",
            detail: format!("{} desired poles for {} points", desired.len(), shift.points.len()),
        });
    }
    build_shift_system(desired, 1).map(|_| ())
}

/// `X_p` solving `Λ X - X S_v + L_v^T L_v = 0` with `Λ = diag(desired) ⊗ I`.
pub fn pole_placement_gramian(shift: &ShiftSystem, desired: &[C64]) -> Result<CMat> {
    check_desired(shift, desired)?;
    let lambda = ShiftSystem::new(desired, shift.block_size).s;
    linalg::solve_sylvester(&lambda, &(-&shift.s), &(shift.l.adjoint() * &shift.l))
}

/// Free parameter `zeta = X_p^{-1} L_v^T` placing the poles of
/// `S_v - zeta L_v` at `desired`.
pub fn pole_place_zeta(shift: &ShiftSystem, desired: &[C64]) -> Result<FreeParameter> {
    let xp = pole_placement_gramian(shift, desired)?;
    let zeta = solve_guarded(&xp, &shift.l.adjoint(), "X_p", SPACING_HINT)?;
    Ok(FreeParameter { zeta, side: Side::Right, source: ZetaSource::PolePlaced })
}

/// Output-side dual: `zeta = L_w^T Y^{-1}` with `S_w Y - Y Λ = L_w L_w^T`,
/// placing the poles of `S_w - L_w zeta` at `desired`.
pub fn pole_place_zeta_left(shift: &ShiftSystem, desired: &[C64]) -> Result<FreeParameter> {
    check_desired(shift, desired)?;
    let lambda = ShiftSystem::new(desired, shift.block_size).s;
    let lw = shift.l_col();
    let y = linalg::solve_sylvester(&shift.s, &(-lambda), &(-(&lw * lw.transpose())))?;
    let zeta = solve_guarded(&y.transpose(), &lw, "X_p", SPACING_HINT)?.transpose();
    Ok(FreeParameter { zeta, side: Side::Left, source: ZetaSource::PolePlaced })
}

/// Default desired poles `-epsilon + j Im(s_i)`.
pub fn damped_poles(points: &[C64], epsilon: f64) -> Vec<C64> {
    points.iter().map(|z| C64::new(-epsilon, z.im)).collect()
}

/// Which dominance or accuracy result the epsilon bound comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonContext {
    /// Off-diagonal part of the modal interpolant state matrix.
    ModalA,
    /// Block dominance of the LQG `Q_v` (unit-block data term).
    QvDom,
    /// Block dominance of `T_v` (unit-block data term).
    TvDom,
    /// Diagonal dominance of the pole-placement matrix `X_p`.
    XpDom,
    /// Projected Gramian close to `(epsilon/2) I`.
    Gramian,
    /// Row dominance of the pole-placed state matrix.
    AHatRows,
    /// Block dominance of `T_v` in the data-driven mode.
    TvDdp { k_p: f64, sigma_q: f64, gamma: f64 },
}

impl FromStr for EpsilonContext {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "modal-a" => Self::ModalA,
            "qv-dom" => Self::QvDom,
            "tv-dom" => Self::TvDom,
            "xp-dom" => Self::XpDom,
            "gramian" => Self::Gramian,
            "a-hat-rows" => Self::AHatRows,
            "tv-ddp" => Self::TvDdp { k_p: 1.0, sigma_q: 1.0, gamma: 1.0 },
            other => {
                return Err(Error::Parse {
                    location: "epsilon context".into(),
                    message: format!("unknown context \"{other}\""),
                })
            }
        })
    }
}

impl fmt::Display for EpsilonContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::ModalA => "modal-a",
            Self::QvDom => "qv-dom",
            Self::TvDom => "tv-dom",
            Self::XpDom => "xp-dom",
            Self::Gramian => "gramian",
            Self::AHatRows => "a-hat-rows",
            Self::TvDdp { .. } => "tv-ddp",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonPlan {
    pub epsilon: f64,
    pub delta: f64,
    pub omega_min: f64,
    pub delta_min: f64,
    /// Named bounds that were applied, with their values.
    pub bounds: Vec<(String, f64)>,
}

/// Safety factor below the binding bound.
pub const EPSILON_SAFETY: f64 = 0.9;

/// Largest admissible epsilon (times [`EPSILON_SAFETY`]) for the given
/// frequencies, tolerance `delta` and context.
pub fn choose_epsilon(omegas: &[f64], delta: f64, context: EpsilonContext) -> Result<EpsilonPlan> {
    if omegas.is_empty() {
        return Err(Error::EmptyFrequencies);
    }
    if !(delta > 0.0) {
        return Err(Error::AssumptionViolated(format!("tolerance must be positive, got {delta}")));
    }
    let v = omegas.len();
    if v < 2 {
        return Err(Error::AssumptionViolated("epsilon bounds need at least two frequencies".into()));
    }
    let vf = v as f64;
    let omega_min = omegas.iter().map(|w| w.abs()).fold(f64::INFINITY, f64::min);
    let mut delta_min = f64::INFINITY;
    for i in 0..v {
        for k in i + 1..v {
            delta_min = delta_min.min((omegas[i] - omegas[k]).abs());
        }
    }
    if delta_min == 0.0 {
        return Err(Error::DegeneratePoints("frequencies must be distinct".into()));
    }
    let needs_nonzero = matches!(context, EpsilonContext::ModalA | EpsilonContext::AHatRows);
    if needs_nonzero && omega_min == 0.0 {
        return Err(Error::ZeroFrequency);
    }
    // Unit-block dominance bound min_i 1 / (2 sum_{k != i} 1/|w_k - w_i|).
    let unit_dominance = || {
        (0..v)
            .map(|i| {
                let s: f64 = (0..v).filter(|&k| k != i).map(|k| 1.0 / (omegas[k] - omegas[i]).abs()).sum();
                1.0 / (2.0 * s)
            })
            .fold(f64::INFINITY, f64::min)
    };
    let bounds: Vec<(String, f64)> = match context {
        EpsilonContext::ModalA => vec![
            ("tolerance delta/(2(v-1))".into(), delta / (2.0 * (vf - 1.0))),
            ("dominance w_min/sqrt(4(v-1)^2-1)".into(), omega_min / (4.0 * (vf - 1.0).powi(2) - 1.0).sqrt()),
        ],
        EpsilonContext::QvDom => vec![("block dominance of Q_v".into(), unit_dominance())],
        EpsilonContext::TvDom => vec![("block dominance of T_v".into(), unit_dominance())],
        EpsilonContext::XpDom => vec![
            ("dominance D_min/(v-1)".into(), delta_min / (vf - 1.0)),
            ("accuracy delta D_min/sqrt(v-1)".into(), delta * delta_min / (vf - 1.0).sqrt()),
        ],
        EpsilonContext::Gramian => vec![
            ("stability D_min/(4v)".into(), delta_min / (4.0 * vf)),
            ("accuracy delta D_min/(8v^2)".into(), delta * delta_min / (8.0 * vf * vf)),
        ],
        EpsilonContext::AHatRows => vec![
            ("row dominance delta w_min/(v-1)".into(), delta * omega_min / (vf - 1.0)),
            ("disjoint discs D_min/(2(v-1))".into(), delta_min / (2.0 * (vf - 1.0))),
        ],
        EpsilonContext::TvDdp { k_p, sigma_q, gamma } => vec![
            ("spectral separation D_min/(2 v K)".into(), delta_min / (2.0 * vf * k_p)),
            (
                "block dominance".into(),
                delta * sigma_q * delta_min / (4.0 * vf * k_p * k_p * (vf - 1.0) * gamma * (1.0 + gamma * k_p)),
            ),
        ],
    };
    let binding = bounds.iter().map(|b| b.1).fold(f64::INFINITY, f64::min);
    Ok(EpsilonPlan { epsilon: EPSILON_SAFETY * binding, delta, omega_min, delta_min, bounds })
}
