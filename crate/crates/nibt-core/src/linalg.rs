//! Dense complex kernels: Sylvester/Lyapunov (Bartels-Stewart), stabilizing
//! Riccati, PSD factorizations, spectra and SVD.

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

/// Clip threshold for PSD factorizations, relative to the largest eigenvalue.
pub const PSD_CLIP: f64 = 1e-10;
/// Condition-number guard for inverses of Gramian-like matrices.
pub const COND_GUARD: f64 = 1e12;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn to_complex(m: &DMatrix<f64>) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// `m ⊗ I_k`.
pub fn kron_eye(m: &CMat, k: usize) -> CMat {
    let mut out = CMat::zeros(m.nrows() * k, m.ncols() * k);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            if v != C64::new(0.0, 0.0) {
                for d in 0..k {
                    out[(i * k + d, j * k + d)] = v;
                }
            }
        }
    }
    out
}

pub fn block_diag(blocks: &[CMat]) -> CMat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub fn is_hermitian(m: &CMat, rel_tol: f64) -> bool {
    m.is_square() && (m - m.adjoint()).norm() <= rel_tol * m.norm().max(f64::MIN_POSITIVE)
}

fn check_square(m: &CMat, context: &'static str) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            detail: format!("expected square, got {}x{}", m.nrows(), m.ncols()),
        })
    }
}

/// Solve `A X = B` by partial-pivoting LU.
pub fn solve(a: &CMat, b: &CMat, what: &'static str) -> Result<CMat> {
    check_square(a, what)?;
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch {
            context: what,
            detail: format!("{}x{} against {} rows", a.nrows(), a.ncols(), b.nrows()),
        });
    }
    a.clone().lu().solve(b).ok_or_else(|| Error::Singular {
        what,
        cond: f64::INFINITY,
        hint: "LU factorization hit a zero pivot".into(),
    })
}

pub fn inverse(a: &CMat, what: &'static str) -> Result<CMat> {
    solve(a, &eye(a.nrows()), what)
}

/// 2-norm condition number via singular values.
pub fn cond2(a: &CMat) -> f64 {
    if a.is_empty() {
        return 1.0;
    }
    let s = a.clone().singular_values();
    let max = s.max();
    let min = s.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Complex Schur form `M = Q T Q*` with `T` upper triangular.
pub fn complex_schur(m: &CMat) -> Result<(CMat, CMat)> {
    check_square(m, "schur")?;
    let n = m.nrows();
    if n == 0 {
        return Ok((CMat::zeros(0, 0), CMat::zeros(0, 0)));
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 200 * n.max(10))
        .ok_or(Error::ConvergenceFailure("complex Schur decomposition"))?;
    let (q, mut t) = schur.unpack();
    for j in 0..n {
        for i in j + 1..n {
            t[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    Ok((q, t))
}

/// Swap diagonal entries k and k+1 of an upper-triangular Schur factor.
fn swap_adjacent(q: &mut CMat, t: &mut CMat, k: usize) {
    let n = t.nrows();
    let a = t[(k, k)];
    let b = t[(k + 1, k + 1)];
    let x = t[(k, k + 1)];
    let (v1, v2) = (x, b - a);
    let nv = (v1.norm_sqr() + v2.norm_sqr()).sqrt();
    if nv == 0.0 {
        return;
    }
    let (g11, g21) = (v1 / nv, v2 / nv);
    // G = [[g11, -conj(g21)], [g21, conj(g11)]], first column is the b-eigenvector.
    let g12 = -g21.conj();
    let g22 = g11.conj();
    for j in 0..n {
        let (r0, r1) = (t[(k, j)], t[(k + 1, j)]);
        t[(k, j)] = g11.conj() * r0 + g21.conj() * r1;
        t[(k + 1, j)] = g12.conj() * r0 + g22.conj() * r1;
    }
    for i in 0..n {
        let (c0, c1) = (t[(i, k)], t[(i, k + 1)]);
        t[(i, k)] = c0 * g11 + c1 * g21;
        t[(i, k + 1)] = c0 * g12 + c1 * g22;
        let (q0, q1) = (q[(i, k)], q[(i, k + 1)]);
        q[(i, k)] = q0 * g11 + q1 * g21;
        q[(i, k + 1)] = q0 * g12 + q1 * g22;
    }
    t[(k + 1, k)] = C64::new(0.0, 0.0);
    t[(k, k)] = b;
    t[(k + 1, k + 1)] = a;
}

/// Reorder a complex Schur form so that selected eigenvalues lead.
/// Returns the number of selected eigenvalues.
pub fn reorder_schur(q: &mut CMat, t: &mut CMat, select: impl Fn(C64) -> bool) -> usize {
    let n = t.nrows();
    let mut placed = 0;
    for j in 0..n {
        if select(t[(j, j)]) {
            let mut k = j;
            while k > placed {
                swap_adjacent(q, t, k - 1);
                k -= 1;
            }
            placed += 1;
        }
    }
    placed
}

/// Solve `T_a Y + Y T_b + F = 0` for upper-triangular `T_a`, `T_b`.
fn triangular_sylvester(ta: &CMat, tb: &CMat, f: &CMat) -> CMat {
    let n = ta.nrows();
    let k = tb.nrows();
    let mut y = CMat::zeros(n, k);
    for col in 0..k {
        let mut rhs: Vec<C64> = (0..n).map(|i| -f[(i, col)]).collect();
        for l in 0..col {
            let tlk = tb[(l, col)];
            if tlk != C64::new(0.0, 0.0) {
                for i in 0..n {
                    rhs[i] -= y[(i, l)] * tlk;
                }
            }
        }
        let shift = tb[(col, col)];
        for i in (0..n).rev() {
            let mut acc = rhs[i];
            for j in i + 1..n {
                acc -= ta[(i, j)] * y[(j, col)];
            }
            y[(i, col)] = acc / (ta[(i, i)] + shift);
        }
    }
    y
}

/// Solve `A X + X B + C = 0` (Bartels-Stewart on complex Schur forms).
pub fn solve_sylvester(a: &CMat, b: &CMat, c: &CMat) -> Result<CMat> {
    check_square(a, "sylvester A")?;
    check_square(b, "sylvester B")?;
    if c.nrows() != a.nrows() || c.ncols() != b.nrows() {
        return Err(Error::DimensionMismatch {
            context: "sylvester",
            detail: format!(
                "A {}x{}, B {}x{}, C {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols()
            ),
        });
    }
    if c.is_empty() {
        return Ok(CMat::zeros(c.nrows(), c.ncols()));
    }
    let (qa, ta) = complex_schur(a)?;
    let (qb, tb) = complex_schur(b)?;
    let mut gap = f64::INFINITY;
    for i in 0..ta.nrows() {
        for j in 0..tb.nrows() {
            gap = gap.min((ta[(i, i)] + tb[(j, j)]).norm());
        }
    }
    let scale = a.norm() + b.norm();
    if gap <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::SpectrumOverlap { equation: "sylvester", gap });
    }
    let f = qa.adjoint() * c * &qb;
    let y = triangular_sylvester(&ta, &tb, &f);
    Ok(&qa * y * qb.adjoint())
}

/// Solve `A X + X A* + Q = 0` for Hermitian `Q`; the result is Hermitian.
pub fn solve_lyapunov(a: &CMat, q: &CMat) -> Result<CMat> {
    check_square(a, "lyapunov")?;
    if !is_hermitian(q, 1e-12) {
        return Err(Error::NotHermitian("lyapunov"));
    }
    let (qa, ta) = complex_schur(a)?;
    // A* = Qa Ta* Qa*, and Ta* is lower triangular; flip index order to make it upper.
    let n = a.nrows();
    let mut gap = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            gap = gap.min((ta[(i, i)] + ta[(j, j)].conj()).norm());
        }
    }
    if gap <= 1e-12 * (2.0 * a.norm()).max(f64::MIN_POSITIVE) {
        return Err(Error::SpectrumOverlap { equation: "lyapunov", gap });
    }
    let perm = |m: &CMat| CMat::from_fn(n, n, |i, j| m[(n - 1 - i, n - 1 - j)]);
    let tb = perm(&ta.adjoint());
    let f = qa.adjoint() * q * &qa;
    // Y Ta* = (Y J)(J Ta* J) J with J the exchange matrix.
    let fj = CMat::from_fn(n, n, |i, j| f[(i, n - 1 - j)]);
    let yj = triangular_sylvester(&ta, &tb, &fj);
    let y = CMat::from_fn(n, n, |i, j| yj[(i, n - 1 - j)]);
    Ok(hermitian_part(&(&qa * y * qa.adjoint())))
}

/// Residual `A* X + X A + Q + sign X G X`.
pub fn care_residual(a: &CMat, g: &CMat, q: &CMat, sign: f64, x: &CMat) -> CMat {
    a.adjoint() * x + x * a + q + x * g * x * C64::new(sign, 0.0)
}

/// Stabilizing solution of `A* X + X A + Q + sign X G X = 0`, so that
/// `A + sign G X` is Hurwitz.
pub fn solve_care_stabilizing(a: &CMat, g: &CMat, q: &CMat, sign: f64) -> Result<CMat> {
    const EQ: &str = "riccati";
    check_square(a, EQ)?;
    let n = a.nrows();
    if g.shape() != (n, n) || q.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            context: EQ,
            detail: format!("A is {n}x{n}, G {:?}, Q {:?}", g.shape(), q.shape()),
        });
    }
    if !is_hermitian(g, 1e-12) || !is_hermitian(q, 1e-12) {
        return Err(Error::NotHermitian(EQ));
    }
    if n == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    let mut h = CMat::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(g * C64::new(sign, 0.0)));
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.adjoint()));
    let (mut z, mut t) = complex_schur(&h)?;
    let hn = h.norm();
    let min_re = (0..2 * n).map(|i| t[(i, i)].re.abs()).fold(f64::INFINITY, f64::min);
    if min_re <= 1e-13 * hn.max(1.0) {
        return Err(Error::NoStabilizingSolution {
            equation: EQ,
            reason: format!("Hamiltonian eigenvalue within {min_re:.3e} of the imaginary axis"),
        });
    }
    let stable = reorder_schur(&mut z, &mut t, |l| l.re < 0.0);
    if stable != n {
        return Err(Error::NoStabilizingSolution {
            equation: EQ,
            reason: format!("{stable} stable Hamiltonian eigenvalues, expected {n}"),
        });
    }
    let u1 = z.view((0, 0), (n, n)).clone_owned();
    let u2 = z.view((n, 0), (n, n)).clone_owned();
    let x = solve(&u1.adjoint(), &u2.adjoint(), "stable invariant subspace")
        .map_err(|_| Error::NoStabilizingSolution {
            equation: EQ,
            reason: "stable subspace basis is singular".into(),
        })?
        .adjoint();
    let mut x = hermitian_part(&x);

    // One Newton-Kleinman correction.
    let closed = a + g * &x * C64::new(sign, 0.0);
    let res = care_residual(a, g, q, sign, &x);
    if let Ok(dx) = solve_lyapunov(&closed.adjoint(), &hermitian_part(&res)) {
        let cand = hermitian_part(&(&x + dx));
        if care_residual(a, g, q, sign, &cand).norm() <= res.norm() {
            x = cand;
        }
    }
    let closed = a + g * &x * C64::new(sign, 0.0);
    let max_re = spectrum(&closed)?.max_real_part;
    if max_re >= 0.0 {
        return Err(Error::NoStabilizingSolution {
            equation: EQ,
            reason: format!("closed loop max real part {max_re:.3e}"),
        });
    }
    Ok(x)
}

/// Hermitian eigen-decomposition, eigenvalues ascending.
pub fn eigh(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    check_square(m, "hermitian eigen")?;
    let n = m.nrows();
    if n == 0 {
        return Ok((vec![], CMat::zeros(0, 0)));
    }
    let e = SymmetricEigen::try_new(hermitian_part(m), f64::EPSILON, 200 * n.max(10))
        .ok_or(Error::ConvergenceFailure("Hermitian eigen-decomposition"))?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| e.eigenvalues[i].total_cmp(&e.eigenvalues[j]));
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, c| e.eigenvectors[(r, idx[c])]);
    Ok((vals, vecs))
}

fn clipped_eigen(m: &CMat, what: &'static str) -> Result<(Vec<f64>, CMat)> {
    if !is_hermitian(m, 1e-12) {
        return Err(Error::NotHermitian(what));
    }
    let (vals, vecs) = eigh(m)?;
    let max = vals.last().copied().unwrap_or(0.0);
    let min = vals.first().copied().unwrap_or(0.0);
    let scale = max.abs().max(min.abs());
    if min < -PSD_CLIP * scale || (max <= 0.0 && scale > 0.0) {
        return Err(Error::IndefiniteMatrix { min, max });
    }
    let cut = PSD_CLIP * max;
    let vals = vals.into_iter().map(|l| if l < cut { 0.0 } else { l }).collect();
    Ok((vals, vecs))
}

/// Square factor `L` with `M = L L*` for Hermitian PSD `M`.
pub fn psd_factor(m: &CMat) -> Result<CMat> {
    let (vals, mut vecs) = clipped_eigen(m, "psd_factor")?;
    for (j, l) in vals.iter().enumerate() {
        let s = C64::new(l.sqrt(), 0.0);
        for i in 0..vecs.nrows() {
            vecs[(i, j)] *= s;
        }
    }
    Ok(vecs)
}

/// Hermitian PSD square root.
pub fn sqrt_psd(m: &CMat) -> Result<CMat> {
    let (vals, vecs) = clipped_eigen(m, "sqrt_psd")?;
    let mut scaled = vecs.clone();
    for (j, l) in vals.iter().enumerate() {
        let s = C64::new(l.sqrt(), 0.0);
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= s;
        }
    }
    Ok(hermitian_part(&(scaled * vecs.adjoint())))
}

/// Inverse Hermitian PSD square root of a positive definite matrix.
pub fn inv_sqrt_pd(m: &CMat, what: &'static str) -> Result<CMat> {
    let (vals, vecs) = eigh(&hermitian_part(m))?;
    check_pd(&vals, what)?;
    let mut scaled = vecs.clone();
    for (j, l) in vals.iter().enumerate() {
        let s = C64::new(1.0 / l.sqrt(), 0.0);
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= s;
        }
    }
    Ok(hermitian_part(&(scaled * vecs.adjoint())))
}

fn check_pd(vals: &[f64], what: &'static str) -> Result<()> {
    let min = vals.first().copied().unwrap_or(1.0);
    let max = vals.last().copied().unwrap_or(1.0);
    if min <= 0.0 {
        return Err(Error::Singular {
            what,
            cond: f64::INFINITY,
            hint: format!("not positive definite (min eigenvalue {min:.3e})"),
        });
    }
    let cond = max / min;
    if cond > COND_GUARD {
        return Err(Error::Singular {
            what,
            cond,
            hint: "use fewer or better separated interpolation points, or a smaller epsilon in DDP mode".into(),
        });
    }
    Ok(())
}

/// Square factor `L` with `M^{-1} = L L*` for Hermitian positive definite `M`,
/// computed from the eigen-decomposition of `M` itself.
pub fn inverse_psd_factor(m: &CMat, what: &'static str) -> Result<CMat> {
    if !is_hermitian(m, 1e-10) {
        return Err(Error::NotHermitian(what));
    }
    let (vals, mut vecs) = eigh(m)?;
    check_pd(&vals, what)?;
    for (j, l) in vals.iter().enumerate() {
        let s = C64::new(1.0 / l.sqrt(), 0.0);
        for i in 0..vecs.nrows() {
            vecs[(i, j)] *= s;
        }
    }
    Ok(vecs)
}

#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<C64>,
    pub max_real_part: f64,
}

/// Eigenvalues sorted by imaginary part, then real part.
pub fn spectrum(m: &CMat) -> Result<SpectrumReport> {
    let (_, t) = complex_schur(m)?;
    let mut eig: Vec<C64> = (0..t.nrows()).map(|i| t[(i, i)]).collect();
    eig.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    let max_real_part = eig.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(SpectrumReport { eigenvalues: eig, max_real_part })
}

/// Thin SVD `M = U diag(s) V*`, singular values nonincreasing.
///
/// One-sided Jacobi on the columns of `M` (or of `M*` when `M` is wide).
/// Left vectors belonging to exactly zero singular values are returned as
/// zero columns.
pub fn svd(m: &CMat) -> Result<(CMat, Vec<f64>, CMat)> {
    if m.nrows() < m.ncols() {
        let (u, s, v) = svd(&m.adjoint())?;
        return Ok((v, s, u));
    }
    let n = m.ncols();
    if n == 0 {
        return Ok((CMat::zeros(m.nrows(), 0), vec![], CMat::zeros(0, 0)));
    }
    let mut u = m.clone();
    let mut v = CMat::identity(n, n);
    let tol = (m.nrows() as f64).sqrt() * f64::EPSILON;
    let mut converged = false;
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = u.column(p).norm_squared();
                let beta = u.column(q).norm_squared();
                let gamma = u.column(p).dotc(&u.column(q));
                let g = gamma.norm();
                if g == 0.0 || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma.conj() / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut u, &mut v] {
                    for i in 0..mat.nrows() {
                        let xp = mat[(i, p)];
                        let xq = mat[(i, q)] * phase;
                        mat[(i, p)] = xp * c - xq * s;
                        mat[(i, q)] = xp * s + xq * c;
                    }
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::ConvergenceFailure("singular value decomposition"));
    }
    let norms: Vec<f64> = (0..n).map(|j| u.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let mut uo = CMat::zeros(m.nrows(), n);
    let mut vo = CMat::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        if norms[j] > 0.0 {
            uo.set_column(k, &(u.column(j) / c64(norms[j], 0.0)));
        }
        vo.set_column(k, &v.column(j));
    }
    Ok((uo, order.iter().map(|&j| norms[j]).collect(), vo))
}

const JACOBI_SWEEPS: usize = 80;

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn randn(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMat {
        CMat::from_fn(r, c, |_, _| {
            C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
        })
    }

    fn hurwitz(rng: &mut ChaCha8Rng, n: usize) -> CMat {
        let a = randn(rng, n, n);
        let shift = spectrum(&a).unwrap().max_real_part + 0.5;
        a - eye(n) * C64::new(shift, 0.0)
    }

    #[test]
    fn sylvester_scalar() {
        let x = solve_sylvester(
            &CMat::from_element(1, 1, c64(-1.0, 0.0)),
            &CMat::from_element(1, 1, c64(-2.0, 0.0)),
            &CMat::from_element(1, 1, c64(3.0, 0.0)),
        )
        .unwrap();
        assert!((x[(0, 0)] - c64(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn sylvester_diagonal_closed_form() {
        let a = [c64(-1.0, 2.0), c64(-0.5, -1.0), c64(-3.0, 0.0)];
        let b = [c64(-2.0, 0.5), c64(-0.1, 4.0)];
        let c = CMat::from_fn(3, 2, |i, j| c64(i as f64 + 1.0, j as f64 - 0.5));
        let x = solve_sylvester(
            &CMat::from_diagonal(&nalgebra::DVector::from_row_slice(&a)),
            &CMat::from_diagonal(&nalgebra::DVector::from_row_slice(&b)),
            &c,
        )
        .unwrap();
        for i in 0..3 {
            for j in 0..2 {
                let want = -c[(i, j)] / (a[i] + b[j]);
                assert!((x[(i, j)] - want).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn sylvester_overlap_is_reported() {
        let a = CMat::from_element(1, 1, c64(1.0, 0.0));
        let b = CMat::from_element(1, 1, c64(-1.0, 0.0));
        let c = CMat::from_element(1, 1, c64(1.0, 0.0));
        assert!(matches!(solve_sylvester(&a, &b, &c), Err(Error::SpectrumOverlap { .. })));
    }

    #[test]
    fn lyapunov_trivial() {
        let x = solve_lyapunov(
            &CMat::from_element(1, 1, c64(-1.0, 0.0)),
            &CMat::from_element(1, 1, c64(2.0, 0.0)),
        )
        .unwrap();
        assert!((x[(0, 0)] - c64(1.0, 0.0)).norm() < 1e-14);
        let x = solve_lyapunov(&(-eye(2)), &eye(2)).unwrap();
        assert!((x - eye(2) * c64(0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn care_scalar_filter() {
        let one = CMat::from_element(1, 1, c64(1.0, 0.0));
        let x = solve_care_stabilizing(&(-one.clone()), &one, &one, -1.0).unwrap();
        assert!((x[(0, 0)].re - (2f64.sqrt() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn care_rejects_missing_stabilizing_solution() {
        // a = 0, g = 0: closed loop stays at 0.
        let z = CMat::zeros(1, 1);
        let one = CMat::from_element(1, 1, c64(1.0, 0.0));
        assert!(solve_care_stabilizing(&z, &z, &one, -1.0).is_err());
    }

    #[test]
    fn care_positive_sign_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = hurwitz(&mut rng, 3) - eye(3) * c64(2.0, 0.0);
        let b = randn(&mut rng, 3, 1) * c64(0.2, 0.0);
        let c = randn(&mut rng, 1, 3) * c64(0.2, 0.0);
        let g = &b * b.adjoint();
        let q = c.adjoint() * &c;
        let x = solve_care_stabilizing(&a, &g, &q, 1.0).unwrap();
        let scale = a.norm() * x.norm() + q.norm() + g.norm() * x.norm().powi(2);
        assert!(care_residual(&a, &g, &q, 1.0, &x).norm() <= 1e-9 * scale);
    }

    #[test]
    fn psd_factor_and_sqrt() {
        let m = eye(2) * c64(4.0, 0.0);
        let l = psd_factor(&m).unwrap();
        assert!((&l * l.adjoint() - &m).norm() < 1e-13);
        assert!(psd_factor(&CMat::zeros(2, 2)).unwrap().norm() == 0.0);
        let s = sqrt_psd(&(eye(3) * c64(9.0, 0.0))).unwrap();
        assert!((s - eye(3) * c64(3.0, 0.0)).norm() < 1e-13);
        let d = CMat::from_diagonal(&nalgebra::DVector::from_row_slice(&[c64(1.0, 0.0), c64(4.0, 0.0)]));
        let s = sqrt_psd(&d).unwrap();
        assert!((s[(1, 1)] - c64(2.0, 0.0)).norm() < 1e-13);
        assert!(matches!(psd_factor(&(-eye(2))), Err(Error::IndefiniteMatrix { .. })));
    }

    #[test]
    fn spectrum_known() {
        let d = CMat::from_diagonal(&nalgebra::DVector::from_row_slice(&[c64(-1.0, 0.0), c64(-2.0, 1.0)]));
        let s = spectrum(&d).unwrap();
        assert!((s.eigenvalues[0] - c64(-1.0, 0.0)).norm() < 1e-14);
        assert!((s.eigenvalues[1] - c64(-2.0, 1.0)).norm() < 1e-14);
        let comp = CMat::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(-1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)]);
        let s = spectrum(&comp).unwrap();
        assert!((s.eigenvalues[0] - c64(0.0, -1.0)).norm() < 1e-12);
        assert!((s.eigenvalues[1] - c64(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn svd_known() {
        let (_, s, _) = svd(&eye(3)).unwrap();
        assert_eq!(s, vec![1.0; 3]);
        let d = CMat::from_diagonal(&nalgebra::DVector::from_row_slice(&[c64(1.0, 0.0), c64(3.0, 0.0)]));
        let (_, s, _) = svd(&d).unwrap();
        assert!((s[0] - 3.0).abs() < 1e-14 && (s[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn schur_reordering_keeps_similarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = randn(&mut rng, 6, 6);
        let (mut q, mut t) = complex_schur(&m).unwrap();
        let k = reorder_schur(&mut q, &mut t, |l| l.re < 0.0);
        assert!((&q * &t * q.adjoint() - &m).norm() < 1e-12 * m.norm());
        for i in 0..6 {
            assert_eq!(t[(i, i)].re < 0.0, i < k);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn sylvester_residual_bound(seed in 0u64..10_000, n in 1usize..12, k in 1usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = hurwitz(&mut rng, n);
            let b = hurwitz(&mut rng, k);
            let c = randn(&mut rng, n, k);
            let x = solve_sylvester(&a, &b, &c).unwrap();
            let r = (&a * &x + &x * &b + &c).norm();
            prop_assert!(r <= 1e-10 * (a.norm() * x.norm() + x.norm() * b.norm() + c.norm()));
        }

        #[test]
        fn lyapunov_is_psd_and_accurate(seed in 0u64..10_000, n in 1usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = hurwitz(&mut rng, n);
            let f = randn(&mut rng, n, 2);
            let q = &f * f.adjoint();
            let x = solve_lyapunov(&a, &q).unwrap();
            let r = (&a * &x + &x * a.adjoint() + &q).norm();
            prop_assert!(r <= 1e-10 * (2.0 * a.norm() * x.norm() + q.norm()));
            let (vals, _) = eigh(&x).unwrap();
            prop_assert!(vals[0] >= -1e-10 * x.norm());
        }

        #[test]
        fn care_newton_fixed_point(seed in 0u64..10_000, n in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = hurwitz(&mut rng, n);
            let b = randn(&mut rng, n, 2);
            let c = randn(&mut rng, 2, n);
            let g = &b * b.adjoint();
            let q = c.adjoint() * &c;
            let x = solve_care_stabilizing(&a, &g, &q, -1.0).unwrap();
            let closed = &a - &g * &x;
            let res = care_residual(&a, &g, &q, -1.0, &x);
            let dx = solve_lyapunov(&closed.adjoint(), &hermitian_part(&res)).unwrap();
            prop_assert!(dx.norm() <= 1e-9 * x.norm());
        }

        #[test]
        fn svd_reconstructs(seed in 0u64..10_000, r in 1usize..7, c in 1usize..7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = randn(&mut rng, r, c);
            let (u, s, v) = svd(&m).unwrap();
            let sd = CMat::from_diagonal(&nalgebra::DVector::from_iterator(s.len(), s.iter().map(|x| c64(*x, 0.0))));
            prop_assert!((&u * sd * v.adjoint() - &m).norm() <= 1e-10 * m.norm());
            prop_assert!(s.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!((u.adjoint() * &u - eye(s.len())).norm() < 1e-10);
        }

        #[test]
        fn psd_factor_roundtrip(seed in 0u64..10_000, n in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = randn(&mut rng, n, n);
            let m = &r * r.adjoint();
            let l = psd_factor(&m).unwrap();
            prop_assert!((&l * l.adjoint() - &m).norm() <= 1e-10 * m.norm());
            let s = sqrt_psd(&m).unwrap();
            prop_assert!((&s * &s - &m).norm() <= 1e-10 * m.norm());
        }

        #[test]
        fn spectrum_similarity_invariant(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = randn(&mut rng, 5, 5);
            let t = randn(&mut rng, 5, 5) * c64(0.1, 0.0) + eye(5);
            let sim = &t * &m * inverse(&t, "t").unwrap();
            let a = spectrum(&m).unwrap().eigenvalues;
            let b = spectrum(&sim).unwrap().eigenvalues;
            for l in &a {
                let d = b.iter().map(|x| (x - l).norm()).fold(f64::INFINITY, f64::min);
                prop_assert!(d < 1e-8 * m.norm());
            }
        }
    }
}
