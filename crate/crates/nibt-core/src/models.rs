//! Seeded synthetic models and the fixed 8th-order illustrative system.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, c64, C64, CMat};
use crate::reduction::{error_grid, hinf_norm};
use crate::sampling::StateSpace;

/// H-infinity norm of the strictly proper part of a `--passive` model.
pub const PASSIVE_NORM: f64 = 0.45;
/// Feedthrough scale of a `--passive` model (`D = PASSIVE_FEEDTHROUGH·I`).
pub const PASSIVE_FEEDTHROUGH: f64 = 0.5;
/// H-infinity norm of a default synthetic model (`D = 0`).
pub const PLAIN_NORM: f64 = 0.9;

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.random_range(lo..hi))
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Random stable model of order `n`.
///
/// The spectrum has real parts `-10^U(-1, 1)` and imaginary parts
/// `±10^U(1, 3)` (one real eigenvalue when `n` is odd), rotated by a random
/// orthogonal similarity. The strictly proper part is scaled to H-infinity
/// norm 0.9 with `D = 0`, or with `passive` (needs `m = p`) to norm 0.45 with
/// `D = 0.5 I`, which makes the model strictly positive real, strictly
/// bounded real and minimum phase.
pub fn synthetic(n: usize, m: usize, p: usize, seed: u64, passive: bool) -> Result<StateSpace> {
    if n == 0 || m == 0 || p == 0 {
        return Err(Error::DimensionMismatch { context: "synthetic model", detail: format!("n={n}, m={m}, p={p}") });
    }
    if passive && m != p {
        return Err(Error::NotSquare { p, m });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a0 = DMatrix::<f64>::zeros(n, n);
    for k in 0..n / 2 {
        let re = -log_uniform(&mut rng, -1.0, 1.0);
        let im = log_uniform(&mut rng, 1.0, 3.0);
        let i = 2 * k;
        a0[(i, i)] = re;
        a0[(i + 1, i + 1)] = re;
        a0[(i, i + 1)] = im;
        a0[(i + 1, i)] = -im;
    }
    if n % 2 == 1 {
        a0[(n - 1, n - 1)] = -log_uniform(&mut rng, -1.0, 1.0);
    }
    let q = normal_matrix(&mut rng, n, n).qr().q();
    let a = &q * a0 * q.transpose();
    let b = normal_matrix(&mut rng, n, m);
    let c = normal_matrix(&mut rng, p, n);
    let strict = StateSpace::new(a, b, c, DMatrix::zeros(p, m))?;
    let peaks: Vec<f64> = linalg::spectrum(&linalg::to_complex(&strict.a))?.eigenvalues.iter().map(|z| z.im.abs()).collect();
    let norm = hinf_norm(&strict.to_complex(), &error_grid(1e-2, 1e4, 2000, &peaks))?.value;
    let (target, d) = if passive {
        (PASSIVE_NORM, DMatrix::identity(p, m) * PASSIVE_FEEDTHROUGH)
    } else {
        (PLAIN_NORM, DMatrix::zeros(p, m))
    };
    StateSpace::new(strict.a, strict.b, strict.c * (target / norm), d)
}

#[rustfmt::skip]
const EXAMPLE_A: [f64; 64] = [
    -22.1414, -14.1915, -35.8543, -7.8301, 54.2479, -1.6149, 4.5713, -47.9895,
    -1.4098, 6.0485, -2.0663, 36.2832, 88.6974, 15.7929, 74.5229, -30.3651,
    -20.9974, -3.8320, -7.5951, -40.6679, -71.4159, -45.2401, -39.4774, -4.9186,
    -107.6001, -67.2020, -108.3961, -33.5432, 43.9644, -77.3467, 21.1433, -109.2904,
    143.7150, 66.7452, 146.1617, 81.1110, -20.7467, 135.0017, 12.6135, 158.4851,
    -101.2836, -48.3008, -93.7796, -47.9424, -20.5617, -89.5448, -28.7377, -78.5117,
    129.4943, 22.2846, 56.8624, 112.4968, 85.9715, 148.5772, 61.3542, 106.4938,
    65.1568, 63.9156, 113.2290, -42.8674, -170.4269, -12.2243, -97.6582, 98.1684,
];
const EXAMPLE_B: [f64; 8] = [0.6007, 1.6263, -0.4206, 2.5576, -2.1955, 1.2682, -0.4758, -3.1936];
const EXAMPLE_C: [f64; 8] = [1.9237, 1.2498, 1.3247, 1.5407, 1.1059, 1.3546, 0.9754, 1.2928];
const EXAMPLE_D: f64 = 0.2378;

/// The 8th-order single-input single-output illustrative system.
pub fn example8() -> StateSpace {
    StateSpace::new(
        DMatrix::from_row_slice(8, 8, &EXAMPLE_A),
        DMatrix::from_column_slice(8, 1, &EXAMPLE_B),
        DMatrix::from_row_slice(1, 8, &EXAMPLE_C),
        DMatrix::from_element(1, 1, EXAMPLE_D),
    )
    .expect("example dimensions are consistent")
}

/// Right and left interpolation points of the illustrative example.
pub fn example8_points() -> (Vec<C64>, Vec<C64>) {
    let pairs = |ws: [f64; 3]| ws.iter().flat_map(|&w| [c64(0.0, w), c64(0.0, -w)]).collect::<Vec<_>>();
    (pairs([9.99, 19.99, 29.99]), pairs([10.0, 20.0, 30.0]))
}

/// Free parameter of the illustrative example (`6 x 1`); the output side
/// uses its transpose.
pub fn example8_zeta() -> CMat {
    CMat::from_column_slice(
        6,
        1,
        &[
            c64(1.0075, 0.0417),
            c64(1.0075, -0.0417),
            c64(1.0080, -0.0792),
            c64(1.0080, 0.0792),
            c64(0.9845, -0.2113),
            c64(0.9845, 0.2113),
        ],
    )
}

/// Robustness parameter of the H-infinity variant in the illustrative example.
pub const EXAMPLE8_GAMMA: f64 = 2.0;
