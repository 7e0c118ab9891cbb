//! Intrusive reference pipeline: variant Gramians of a state-space model,
//! balanced truncation through the shared reduction kernel, and the
//! quadrature-based comparator.

use crate::error::{Error, Result};
use crate::linalg::{self, C64, CMat};
use crate::loewner::LoewnerQuadruple;
use crate::reduction::{bsa_reduce, Balancer, ReducedModel};
use crate::sampling::{Realization, StateSpace};
use crate::variants::{check_feedthrough, FactorPair, Variant, Weights};

#[derive(Debug, Clone, PartialEq)]
pub struct GramianPair {
    pub p: CMat,
    pub q: CMat,
    pub variant: Variant,
}

fn gram(b: &CMat) -> CMat {
    linalg::hermitian_part(&(b * b.adjoint()))
}

fn cogram(c: &CMat) -> CMat {
    linalg::hermitian_part(&(c.adjoint() * c))
}

/// Controllability-type Gramian of `sys` for `variant` (complex data allowed).
pub fn realization_gramian_p(sys: &Realization, variant: &Variant) -> Result<CMat> {
    let w = Weights::new(&sys.d.map(|z| z.re));
    let (a, b, c) = (&sys.a, &sys.b, &sys.c);
    match variant {
        Variant::Bt | Variant::Sw | Variant::Bst => linalg::solve_lyapunov(a, &gram(b)),
        Variant::Lqg | Variant::Hinf { .. } => {
            let gain = lqg_gain(variant);
            linalg::solve_care_stabilizing(&a.adjoint(), &(cogram(c) * C64::new(gain, 0.0)), &gram(b), -1.0)
        }
        Variant::Pr => {
            let r_inv = linalg::inverse(&w.r_pr, "D + D^T")?;
            let ap = a - b * &r_inv * c;
            linalg::solve_care_stabilizing(
                &ap.adjoint(),
                &linalg::hermitian_part(&(c.adjoint() * &r_inv * c)),
                &linalg::hermitian_part(&(b * &r_inv * b.adjoint())),
                1.0,
            )
        }
        Variant::Br => {
            let rp_inv = linalg::inverse(&w.r_p, "I - D D^T")?;
            let ab = a + b * w.d.transpose() * &rp_inv * c;
            linalg::solve_care_stabilizing(
                &ab.adjoint(),
                &linalg::hermitian_part(&(c.adjoint() * &rp_inv * c)),
                &linalg::hermitian_part(&(b * &w.r_b * b.adjoint())),
                1.0,
            )
        }
    }
}

/// Observability-type Gramian of `sys` for `variant`. For BST, `coupling` is
/// the `P C^*` term of the stochastic input matrix; `None` computes it from
/// the system's own Lyapunov Gramian.
pub fn realization_gramian_q(sys: &Realization, variant: &Variant, coupling: Option<&CMat>) -> Result<CMat> {
    let w = Weights::new(&sys.d.map(|z| z.re));
    let (a, b, c) = (&sys.a, &sys.b, &sys.c);
    match variant {
        Variant::Bt => linalg::solve_lyapunov(&a.adjoint(), &cogram(c)),
        Variant::Lqg | Variant::Hinf { .. } => {
            let gain = lqg_gain(variant);
            linalg::solve_care_stabilizing(a, &(gram(b) * C64::new(gain, 0.0)), &cogram(c), -1.0)
        }
        Variant::Pr => {
            let r_inv = linalg::inverse(&w.r_pr, "D + D^T")?;
            let ap = a - b * &r_inv * c;
            linalg::solve_care_stabilizing(
                &ap,
                &linalg::hermitian_part(&(b * &r_inv * b.adjoint())),
                &linalg::hermitian_part(&(c.adjoint() * &r_inv * c)),
                1.0,
            )
        }
        Variant::Br => {
            let rq_inv = linalg::inverse(&w.r_q, "I - D^T D")?;
            let ab = a + b * &rq_inv * w.d.transpose() * c;
            linalg::solve_care_stabilizing(
                &ab,
                &linalg::hermitian_part(&(b * &rq_inv * b.adjoint())),
                &linalg::hermitian_part(&(c.adjoint() * &w.r_c * c)),
                1.0,
            )
        }
        Variant::Sw => {
            let d_inv = linalg::inverse(&w.d, "D")?;
            let a_sw = a - b * &d_inv * c;
            linalg::solve_lyapunov(&a_sw.adjoint(), &cogram(&(d_inv * c)))
        }
        Variant::Bst => {
            let own;
            let pc = match coupling {
                Some(pc) => pc,
                None => {
                    own = linalg::solve_lyapunov(a, &gram(b))? * c.adjoint();
                    &own
                }
            };
            let rs_mh = linalg::inv_sqrt_pd(&w.r_s, "D D^T")?;
            let bs = (pc + b * w.d.transpose()) * &rs_mh;
            let cs = &rs_mh * c;
            let a_s = a - &bs * &cs;
            linalg::solve_care_stabilizing(&a_s, &gram(&bs), &cogram(&cs), 1.0)
        }
    }
}

fn lqg_gain(variant: &Variant) -> f64 {
    match variant {
        Variant::Hinf { gamma } => 1.0 - gamma.powi(-2),
        _ => 1.0,
    }
}

/// Both Gramians of a stable real model, after checking the variant's
/// feedthrough assumptions.
pub fn intrusive_gramians(ss: &StateSpace, variant: &Variant) -> Result<GramianPair> {
    ss.check_hurwitz()?;
    check_feedthrough(variant, &ss.d)?;
    let sys = ss.to_complex();
    let (p, q) = rayon::join(|| realization_gramian_p(&sys, variant), || realization_gramian_q(&sys, variant, None));
    Ok(GramianPair { p: p?, q: q?, variant: *variant })
}

/// Hankel(-like) singular values `sqrt(eig(P Q))`, largest first.
pub fn hankel_singular_values(ss: &StateSpace, variant: &Variant) -> Result<Vec<f64>> {
    let g = intrusive_gramians(ss, variant)?;
    let lp = linalg::psd_factor(&g.p)?;
    let lq = linalg::psd_factor(&g.q)?;
    Ok(linalg::svd(&(lq.adjoint() * lp))?.1)
}

/// Balanced basis of the model itself, reusable across orders.
pub fn intrusive_balancer(ss: &StateSpace, variant: &Variant) -> Result<Balancer> {
    let g = intrusive_gramians(ss, variant)?;
    let factors = FactorPair::untransformed(linalg::psd_factor(&g.p)?, linalg::psd_factor(&g.q)?);
    Balancer::new(&LoewnerQuadruple::identity_projection(ss), &factors)
}

/// Balanced truncation of the model itself through the shared kernel.
pub fn intrusive_reduce(ss: &StateSpace, variant: &Variant, r: usize) -> Result<ReducedModel> {
    intrusive_balancer(ss, variant)?.reduce(r)
}

/// Quadrature-based balanced truncation: `Lp = diag(w_p) ⊗ I_m`,
/// `Lq = diag(w_q) ⊗ I_p`, one weight per sample point.
pub fn quadbt_reduce(q: &LoewnerQuadruple, wp: &[f64], wq: &[f64], r: usize) -> Result<ReducedModel> {
    if wp.len() != q.v() {
        return Err(Error::WeightCountMismatch { expected: q.v(), actual: wp.len() });
    }
    if wq.len() != q.w() {
        return Err(Error::WeightCountMismatch { expected: q.w(), actual: wq.len() });
    }
    if let Some(&bad) = wp.iter().chain(wq).find(|&&x| !(x > 0.0)) {
        return Err(Error::AssumptionViolated(format!("quadrature weights must be positive, got {bad}")));
    }
    let diag = |w: &[f64], k: usize| {
        let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(w.len(), w.iter().map(|&x| C64::new(x, 0.0))));
        linalg::kron_eye(&d, k)
    };
    bsa_reduce(q, &FactorPair::untransformed(diag(wp, q.m), diag(wq, q.p)), r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    Linear,
    /// Trapezoid in `log ω` with the Jacobian `ω`.
    Exponential,
}

/// Trapezoid weights `w_i` (unsquared) for `(1/2π) ∫ f(ω) dω` on increasing
/// positive nodes. The squared weights are the quadrature weights.
pub fn trapezoid_weights(freqs: &[f64], rule: QuadratureRule) -> Result<Vec<f64>> {
    if freqs.len() < 2 {
        return Err(Error::TooFewNodes(freqs.len()));
    }
    if let Some(k) = (1..freqs.len()).find(|&k| !(freqs[k] > freqs[k - 1])) {
        return Err(Error::DegeneratePoints(format!("nodes must be strictly increasing (index {k})")));
    }
    if rule == QuadratureRule::Exponential && freqs[0] <= 0.0 {
        return Err(Error::AssumptionViolated("exponential rule needs positive nodes".into()));
    }
    let x: Vec<f64> = match rule {
        QuadratureRule::Linear => freqs.to_vec(),
        QuadratureRule::Exponential => freqs.iter().map(|w| w.ln()).collect(),
    };
    let n = x.len();
    Ok((0..n)
        .map(|i| {
            let span = x[(i + 1).min(n - 1)] - x[i.saturating_sub(1)];
            let jacobian = match rule {
                QuadratureRule::Linear => 1.0,
                QuadratureRule::Exponential => freqs[i],
            };
            (jacobian * span / 2.0 / (2.0 * std::f64::consts::PI)).sqrt()
        })
        .collect())
}

/// Repeat each weight for the point and its conjugate partner, matching the
/// order of [`crate::sampling::conjugate_points`].
pub fn conjugate_pair_weights(weights: &[f64]) -> Vec<f64> {
    weights.iter().flat_map(|&w| [w, w]).collect()
}
