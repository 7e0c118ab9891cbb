//! Loewner assembly of the projected quadruple from transfer-function samples.
//!
//! Left points index block rows and right points index block columns, in the
//! order given by the sample set.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interpolation::ShiftSystem;
use crate::linalg::{self, C64, CMat};
use crate::sampling::{hermite_coincident, SampleSet, StateSpace};

/// Projected quantities `W*V`, `W*AV`, `W*B`, `CV` and the feedthrough.
#[derive(Debug, Clone, PartialEq)]
pub struct LoewnerQuadruple {
    pub wv: CMat,
    pub wav: CMat,
    pub wb: CMat,
    pub cv: CMat,
    pub d: DMatrix<f64>,
    pub right_points: Vec<C64>,
    pub left_points: Vec<C64>,
    pub m: usize,
    pub p: usize,
}

impl LoewnerQuadruple {
    pub fn v(&self) -> usize {
        self.right_points.len()
    }
    pub fn w(&self) -> usize {
        self.left_points.len()
    }

    /// Quadruple of a state-space model itself (`W = V = I`), used by the
    /// intrusive pipeline so that both paths share the same reduction kernel.
    pub fn identity_projection(ss: &StateSpace) -> Self {
        Self {
            wv: linalg::eye(ss.n()),
            wav: linalg::to_complex(&ss.a),
            wb: linalg::to_complex(&ss.b),
            cv: linalg::to_complex(&ss.c),
            d: ss.d.clone(),
            right_points: vec![],
            left_points: vec![],
            m: ss.m(),
            p: ss.p(),
        }
    }

    /// Block of `cv` for right point `j` (`p x m`).
    pub fn right_value(&self, j: usize) -> CMat {
        self.cv.columns(j * self.m, self.m).clone_owned()
    }

    /// Block of `wb` for left point `i` (`p x m`).
    pub fn left_value(&self, i: usize) -> CMat {
        self.wb.rows(i * self.p, self.p).clone_owned()
    }

    /// Block `(i, j)` of `wv` (left point `i`, right point `j`).
    pub fn wv_block(&self, i: usize, j: usize) -> CMat {
        self.wv.view((i * self.p, j * self.m), (self.p, self.m)).clone_owned()
    }

    pub fn feedthrough(&self) -> CMat {
        linalg::to_complex(&self.d)
    }

    /// Transfer function of the descriptor interpolant
    /// `CV (s W*V - W*AV)^{-1} W*B + D`. Diagnostic only.
    pub fn descriptor_transfer(&self, s: C64) -> Result<CMat> {
        let pencil = &self.wv * s - &self.wav;
        let x = pencil.lu().solve(&self.wb).ok_or(Error::SingularResolvent { s })?;
        Ok(&self.cv * x + self.feedthrough())
    }
}

fn block_entry(
    sigma: C64,
    h_sigma: &CMat,
    dh_sigma: Option<&CMat>,
    mu: C64,
    h_mu: &CMat,
    dh_mu: Option<&CMat>,
    index: (usize, usize),
) -> Result<(CMat, CMat)> {
    if hermite_coincident(sigma, mu) {
        let dh = dh_sigma.or(dh_mu).ok_or(Error::MissingDerivative { side: "right", index: index.1 })?;
        let wv = -dh;
        let wav = -(h_sigma + dh * sigma);
        Ok((wv, wav))
    } else {
        let gap = sigma - mu;
        let wv = -(h_sigma - h_mu) / gap;
        let wav = -(h_sigma * sigma - h_mu * mu) / gap;
        Ok((wv, wav))
    }
}

/// Assemble the Loewner quadruple from samples (divided differences, with the
/// derivative branch for coincident right/left points).
pub fn assemble(samples: &SampleSet) -> Result<LoewnerQuadruple> {
    samples.validate()?;
    let (m, p) = (samples.m, samples.p);
    let (v, w) = (samples.right.len(), samples.left.len());
    let rows: Vec<(CMat, CMat)> = samples
        .left
        .par_iter()
        .enumerate()
        .map(|(i, l)| {
            let mut wv = CMat::zeros(p, v * m);
            let mut wav = CMat::zeros(p, v * m);
            for (j, r) in samples.right.iter().enumerate() {
                let (a, b) = block_entry(
                    r.s,
                    &r.value,
                    r.derivative.as_ref(),
                    l.s,
                    &l.value,
                    l.derivative.as_ref(),
                    (i, j),
                )?;
                wv.view_mut((0, j * m), (p, m)).copy_from(&a);
                wav.view_mut((0, j * m), (p, m)).copy_from(&b);
            }
            Ok((wv, wav))
        })
        .collect::<Result<_>>()?;
    let mut wv = CMat::zeros(w * p, v * m);
    let mut wav = CMat::zeros(w * p, v * m);
    for (i, (a, b)) in rows.iter().enumerate() {
        wv.view_mut((i * p, 0), (p, v * m)).copy_from(a);
        wav.view_mut((i * p, 0), (p, v * m)).copy_from(b);
    }
    let mut wb = CMat::zeros(w * p, m);
    for (i, l) in samples.left.iter().enumerate() {
        wb.view_mut((i * p, 0), (p, m)).copy_from(&l.value);
    }
    let mut cv = CMat::zeros(p, v * m);
    for (j, r) in samples.right.iter().enumerate() {
        cv.view_mut((0, j * m), (p, m)).copy_from(&r.value);
    }
    Ok(LoewnerQuadruple {
        wv,
        wav,
        wb,
        cv,
        d: samples.feedthrough.clone(),
        right_points: samples.right_points(),
        left_points: samples.left_points(),
        m,
        p,
    })
}

/// Form the quadruple by explicit projection with the rational Krylov bases
/// `V = [(s_j I - A)^{-1} B]` and `W* = [C (mu_i I - A)^{-1}]`.
pub fn project(ss: &StateSpace, right: &[C64], left: &[C64]) -> Result<LoewnerQuadruple> {
    let sys = ss.to_complex();
    let n = ss.n();
    let (m, p) = (ss.m(), ss.p());
    let vcols: Vec<CMat> = right
        .par_iter()
        .map(|&s| {
            let shifted = linalg::eye(n) * s - &sys.a;
            shifted.lu().solve(&sys.b).ok_or(Error::SingularResolvent { s })
        })
        .collect::<Result<_>>()?;
    let wrows: Vec<CMat> = left
        .par_iter()
        .map(|&s| {
            let shifted = (linalg::eye(n) * s - &sys.a).transpose();
            let x = shifted.lu().solve(&sys.c.transpose()).ok_or(Error::SingularResolvent { s })?;
            Ok(x.transpose())
        })
        .collect::<Result<_>>()?;
    let mut vmat = CMat::zeros(n, right.len() * m);
    for (j, c) in vcols.iter().enumerate() {
        vmat.view_mut((0, j * m), (n, m)).copy_from(c);
    }
    let mut wstar = CMat::zeros(left.len() * p, n);
    for (i, r) in wrows.iter().enumerate() {
        wstar.view_mut((i * p, 0), (p, n)).copy_from(r);
    }
    Ok(LoewnerQuadruple {
        wv: &wstar * &vmat,
        wav: &wstar * &sys.a * &vmat,
        wb: &wstar * &sys.b,
        cv: &sys.c * &vmat,
        d: ss.d.clone(),
        right_points: right.to_vec(),
        left_points: left.to_vec(),
        m,
        p,
    })
}

/// Relative residuals of the two divided-difference identities
/// `W*AV = S_w W*V - L_w CV` and `W*AV = W*V S_v - W*B L_v`.
pub fn sylvester_residuals(q: &LoewnerQuadruple) -> (f64, f64) {
    if q.v() == 0 || q.w() == 0 {
        return (0.0, 0.0);
    }
    let right = ShiftSystem::new(&q.right_points, q.m);
    let left = ShiftSystem::new(&q.left_points, q.p);
    let lw = left.l.transpose();
    let t1 = &left.s * &q.wv;
    let t2 = &lw * &q.cv;
    let r1 = (&q.wav - &t1 + &t2).norm() / (q.wav.norm() + t1.norm() + t2.norm()).max(f64::MIN_POSITIVE);
    let u1 = &q.wv * &right.s;
    let u2 = &q.wb * &right.l;
    let r2 = (&q.wav - &u1 + &u2).norm() / (q.wav.norm() + u1.norm() + u2.norm()).max(f64::MIN_POSITIVE);
    (r1, r2)
}
