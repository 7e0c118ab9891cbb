//! Fixtures shared by the kernel benchmarks.

use nibt_core::linalg::{self, c64, CMat};
use nibt_core::sampling::{conjugate_points, generate_samples, logspace};
use nibt_core::{loewner, models, LoewnerQuadruple, StateSpace};

/// Random stable single-input single-output model of order `n`.
pub fn model(n: usize) -> StateSpace {
    models::synthetic(n, 1, 1, 11, false).expect("synthetic model")
}

/// Complex state matrix of [`model`] and a Hermitian positive semidefinite
/// right-hand side `B B*`.
pub fn lyapunov_data(n: usize) -> (CMat, CMat) {
    let ss = model(n);
    let b = linalg::to_complex(&ss.b);
    (linalg::to_complex(&ss.a), &b * b.adjoint())
}

/// Quadruple from `pairs` conjugate pairs on each side, either on the
/// imaginary axis or shifted into the right half-plane.
pub fn quadruple(n: usize, pairs: usize, axis: bool) -> LoewnerQuadruple {
    let ss = model(n);
    let offset = if axis { 0.0 } else { 0.5 };
    let right = conjugate_points(&logspace(0.05, 50.0, pairs), offset);
    let left = conjugate_points(&logspace(0.06, 60.0, pairs), offset);
    loewner::assemble(&generate_samples(&ss, &right, &left).expect("samples")).expect("quadruple")
}

/// Dense complex matrix with entries from a fixed deterministic pattern.
pub fn dense(rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |i, j| {
        let t = (i * 31 + j * 17) as f64;
        c64((0.37 * t).sin(), (0.11 * t + 0.5).cos())
    })
}
