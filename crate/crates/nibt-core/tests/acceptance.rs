//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use nibt_core::interpolation::{self, build_shift_system, damped_poles, ShiftSystem};
use nibt_core::linalg::{self, c64, C64, CMat};
use nibt_core::reduction::{self, error_grid, ErrorSweep, ReducedModel};
use nibt_core::sampling::{conjugate_points, eval_derivative, eval_transfer, generate_samples, Realization};
use nibt_core::variants::{self, compute_factors, input_gramian_matrix, input_transform_sylvester};
use nibt_core::{intrusive, loewner, models, LoewnerQuadruple, StateSpace, Variant, VariantConfig};

type Res<T> = std::result::Result<T, Box<dyn std::error::Error>>;

struct Check {
    pass: bool,
    detail: String,
}

impl Check {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

struct Criterion {
    id: &'static str,
    name: &'static str,
    budget: Duration,
    run: fn() -> Res<Check>,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: "1", name: "example error table", budget: Duration::from_secs(5), run: c1_example_table },
        Criterion { id: "2", name: "closed-form exactness", budget: Duration::from_secs(1), run: c2_closed_forms },
        Criterion { id: "3", name: "convergence orders", budget: Duration::from_secs(5), run: c3_convergence },
        Criterion { id: "4", name: "oracle equivalence", budget: Duration::from_secs(60), run: c4_oracle_equivalence },
        Criterion { id: "5", name: "structural guarantees", budget: Duration::from_secs(60), run: c5_structure },
        Criterion { id: "6", name: "interpolation conditions", budget: Duration::from_secs(10), run: c6_interpolation },
        Criterion { id: "7", name: "solver oracles", budget: Duration::from_secs(30), run: c7_solvers },
        Criterion { id: "8", name: "desk experiment", budget: Duration::from_secs(300), run: c8_desk_experiment },
    ];
    let mut failures = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(check) => (check.pass && elapsed <= c.budget, check.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "{} criterion {} ({}) [{:.2}s of {}s]: {}",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            elapsed.as_secs_f64(),
            c.budget.as_secs(),
            detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn randn(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn pole_frequencies(ss: &StateSpace) -> Res<Vec<f64>> {
    Ok(linalg::spectrum(&linalg::to_complex(&ss.a))?.eigenvalues.iter().map(|z| z.im.abs()).collect())
}

/// Reference relative errors of the order-3 models of the 8th-order example,
/// `(variant, intrusive, non-intrusive)`, printed to four decimals.
const EXAMPLE_TABLE: [(&str, f64, f64); 7] = [
    ("bt", 0.4039, 0.4039),
    ("lqg", 0.4037, 0.4037),
    ("hinf", 0.4038, 0.4037),
    ("pr", 0.4014, 0.4013),
    ("br", 0.4045, 0.4045),
    ("sw", 0.4014, 0.4014),
    ("bst", 0.4014, 0.4014),
];

fn c1_example_table() -> Res<Check> {
    let ss = models::example8();
    let (right, left) = models::example8_points();
    let q = loewner::assemble(&generate_samples(&ss, &right, &left)?)?;
    let full = ss.to_complex();
    let sweep = ErrorSweep::new(&full, &error_grid(1e-3, 1e4, 20_000, &pole_frequencies(&ss)?))?;
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for (name, want_i, want_n) in EXAMPLE_TABLE {
        let variant = match name {
            "hinf" => Variant::Hinf { gamma: models::EXAMPLE8_GAMMA },
            other => other.parse()?,
        };
        let rom_i = intrusive::intrusive_reduce(&ss, &variant, 3)?;
        let cfg = VariantConfig::ddp(variant, 0.0).with_zeta(models::example8_zeta(), None);
        let rom_n = reduction::reduce_real(&q, &compute_factors(&q, &cfg)?, 3)?;
        let got_i = sweep.relative_error(&rom_i)?;
        let got_n = sweep.relative_error(&rom_n)?;
        worst = worst.max((got_i - want_i).abs()).max((got_n - want_n).abs());
        rows.push(format!("{name} {got_i:.4}/{got_n:.4}"));
    }
    Ok(Check::new(worst <= 5e-4, format!("max deviation {worst:.1e} (tol 5e-4); {}", rows.join(", "))))
}

fn modal_off_diagonal(v: usize, m: usize, eps: f64) -> Res<f64> {
    let omegas: Vec<f64> = (1..=v).map(|k| 1.3 * k as f64 + 0.1 * (k * k) as f64).collect();
    let points: Vec<C64> = omegas.iter().map(|&w| c64(eps, w)).collect();
    let shift = build_shift_system(&points, m)?;
    let zeta = linalg::kron_eye(&CMat::from_element(v, 1, c64(2.0 * eps, 0.0)), m);
    let a = &shift.s - zeta * &shift.l;
    let ad = ShiftSystem::new(&damped_poles(&points, eps), m).s;
    let norm = linalg::svd(&(a - ad))?.1[0];
    let expect = 2.0 * eps * (v as f64 - 1.0);
    Ok((norm - expect).abs() / expect)
}

fn c2_closed_forms() -> Res<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_a: f64 = 0.0;
    for v in [2, 5, 10] {
        for eps in [1e-2, 1e-3] {
            worst_a = worst_a.max(modal_off_diagonal(v, 2, eps)?);
        }
    }

    let mut worst_b: f64 = 0.0;
    for eps in [1e-2, 1e-3] {
        let omegas: Vec<f64> = (0..10).map(|k| 2.0 * k as f64 - 9.0 + rng.random::<f64>()).collect();
        let points: Vec<C64> = omegas.iter().map(|&w| c64(0.0, w)).collect();
        let shift = build_shift_system(&points, 1)?;
        let xp = interpolation::pole_placement_gramian(&shift, &damped_poles(&points, eps))?;
        for i in 0..10 {
            for j in 0..10 {
                let y = c64(1.0, 0.0) / c64(eps, omegas[j] - omegas[i]);
                worst_b = worst_b.max((xp[(i, j)] - y).norm() / y.norm());
            }
        }
    }

    let mut worst_c: f64 = 0.0;
    for eps in [1e-2, 1e-3] {
        let ss = models::synthetic(12, 2, 2, 5, false)?;
        let omegas = [3.0, 17.0, 40.0, 95.0, 230.0];
        let points = conjugate_points(&omegas, eps);
        let q = loewner::assemble(&generate_samples(&ss, &points, &points)?)?;
        let shift = build_shift_system(&points, 2)?;
        let mm = shift.l.adjoint() * &shift.l + q.cv.adjoint() * &q.cv;
        let qv = linalg::solve_lyapunov(&(-shift.s.adjoint()), &linalg::hermitian_part(&mm))?;
        for i in 0..points.len() {
            for j in 0..points.len() {
                let block = |x: &CMat| x.view((2 * i, 2 * j), (2, 2)).clone_owned();
                let denom = points[i].conj() + points[j];
                let want = block(&mm) / denom;
                worst_c = worst_c.max((block(&qv) - &want).norm() / want.norm());
            }
        }
    }

    let tol = 1e-12;
    Ok(Check::new(
        worst_a <= tol && worst_b <= tol && worst_c <= tol,
        format!("(a) modal off-diagonal {worst_a:.1e}, (b) pole-placement Sylvester {worst_b:.1e}, (c) input Lyapunov blocks {worst_c:.1e} (tol 1e-12)"),
    ))
}

fn inf_norm(m: &CMat) -> f64 {
    m.row_iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

fn axis_quadruple(ss: &StateSpace, right: &[f64], left: &[f64]) -> Res<LoewnerQuadruple> {
    let r = conjugate_points(right, 0.0);
    let l = conjugate_points(left, 0.0);
    Ok(loewner::assemble(&generate_samples(ss, &r, &l)?)?)
}

fn ratios(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| w[0] / w[1]).collect()
}

fn within(xs: &[f64], lo: f64, hi: f64) -> bool {
    xs.iter().all(|x| (lo..=hi).contains(x))
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", ")
}

/// Stabilizing solution of `Â P + P Â* + B̂ B̂* - P Ĉ* Ĉ P = 0` with
/// `Â = diag(-ε + jω_i) ⊗ I`, `B̂ = ε 1 ⊗ I` and `Ĉ` the samples.
fn modal_lqg_gramian(q: &LoewnerQuadruple, eps: f64) -> Res<CMat> {
    let a = ShiftSystem::new(&damped_poles(&q.right_points, eps), q.m).s;
    let b = linalg::kron_eye(&CMat::from_element(q.v(), 1, c64(eps, 0.0)), q.m);
    let g = linalg::hermitian_part(&(q.cv.adjoint() * &q.cv));
    let bb = linalg::hermitian_part(&(&b * b.adjoint()));
    Ok(linalg::solve_care_stabilizing(&a.adjoint(), &g, &bb, -1.0)?)
}

fn c3_convergence() -> Res<Check> {
    let eps_list = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
    let omegas = [1.0, 2.0, 3.5];
    let ss = models::synthetic(10, 1, 1, 11, true)?;
    let q = axis_quadruple(&ss, &omegas, &[1.5, 2.5, 4.0])?;

    let mut err_a = Vec::new();
    let mut err_b = Vec::new();
    let mut err_c = Vec::new();
    for &eps in &eps_list {
        let p_bt = input_gramian_matrix(&q, &VariantConfig::ddp(Variant::Bt, eps))?;
        err_a.push(inf_norm(&(p_bt - linalg::eye(q.v()) * c64(eps / 2.0, 0.0))));

        let closed = input_gramian_matrix(&q, &VariantConfig::ddp(Variant::Lqg, eps).fast())?;
        err_b.push(inf_norm(&(modal_lqg_gramian(&q, eps)? - closed)));

        let modal_points = conjugate_points(&omegas, eps);
        let qm = loewner::assemble(&generate_samples(&ss, &modal_points, &modal_points)?)?;
        let zeta = CMat::from_element(qm.v(), 1, c64(2.0 * eps, 0.0));
        let t = input_transform_sylvester(&qm, &Variant::Pr, &zeta)?;
        err_c.push(variants::max_offdiag_block_norm(&t, qm.m));
    }
    let (ra, rb, rc) = (ratios(&err_a), ratios(&err_b), ratios(&err_c));
    let (pa, pb, pc) = (within(&ra, 6.0, 10.0), within(&rb, 3.0, 5.0), within(&rc, 1.8, 2.2));
    Ok(Check::new(
        pa && pb && pc,
        format!(
            "(a) BT Gramian ratios [{}] want [6,10] {}; (b) LQG closed-form ratios [{}] want [3,5] {}; (c) off-diagonal transform ratios [{}] from norms [{}] want [1.8,2.2] {}",
            fmt_list(&ra),
            ok(pa),
            fmt_list(&rb),
            ok(pb),
            fmt_list(&rc),
            err_c.iter().map(|x| format!("{x:.1e}")).collect::<Vec<_>>().join(", "),
            ok(pc)
        ),
    ))
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAILED"
    }
}

/// Mirrored eigenvalues with their real parts scaled by 0.9 and 1.1.
fn spanning_shifts(ss: &StateSpace) -> Res<Vec<C64>> {
    let lam = linalg::spectrum(&linalg::to_complex(&ss.a))?.eigenvalues;
    Ok([0.9, 1.1].iter().flat_map(|k| lam.iter().map(move |z| c64(-k * z.re, z.im))).collect())
}

fn c4_oracle_equivalence() -> Res<Check> {
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let ss = models::synthetic(30, 2, 2, seed, false)?;
        let shifts = spanning_shifts(&ss)?;
        let q = loewner::assemble(&generate_samples(&ss, &shifts, &shifts)?)?;
        let hv = reduction::hankel_values(&q, &compute_factors(&q, &VariantConfig::adi(Variant::Bt))?)?;
        let reference = intrusive::hankel_singular_values(&ss, &Variant::Bt)?;
        let diff: f64 = (0..8).map(|k| (hv[k] - reference[k]).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = reference[..8].iter().map(|x| x * x).sum::<f64>().sqrt();
        worst = worst.max(diff / norm);
    }
    Ok(Check::new(worst <= 1e-4, format!("worst top-8 relative L2 difference over 20 seeds {worst:.2e} (tol 1e-4)")))
}

fn rom_grid(rom: &ReducedModel) -> Res<Vec<f64>> {
    let peaks: Vec<f64> = rom.spectrum()?.iter().map(|z| z.im.abs()).collect();
    Ok(error_grid(1e-3, 1e5, 4000, &peaks))
}

fn c5_structure() -> Res<Check> {
    let right: Vec<C64> = [3.0, 30.0, 300.0].iter().flat_map(|&w| [c64(0.3 * w, w), c64(0.3 * w, -w)]).collect();
    let left: Vec<C64> = [6.0, 60.0, 600.0].iter().flat_map(|&w| [c64(0.2 * w, w), c64(0.2 * w, -w)]).collect();
    let (mut pr_margin, mut br_peak, mut sw_gap) = (f64::INFINITY, 0.0_f64, 0.0_f64);
    for seed in 0..10u64 {
        let ss = models::synthetic(20, 2, 2, 100 + seed, true)?;
        let q = loewner::assemble(&generate_samples(&ss, &right, &left)?)?;

        let pr = variants::structured_interpolant(&q, &VariantConfig::adi(Variant::Pr))?;
        let x = intrusive::realization_gramian_p(&pr.realization(), &Variant::Pr)?;
        let (eig, _) = linalg::eigh(&x)?;
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let max = eig.iter().copied().fold(0.0, f64::max);
        pr_margin = pr_margin.min(min / (1e-10 * max));

        let br = variants::structured_interpolant(&q, &VariantConfig::adi(Variant::Br))?;
        br_peak = br_peak.max(reduction::hinf_norm(&br, &rom_grid(&br)?)?.value);

        let sw = variants::structured_interpolant(&q, &VariantConfig::adi(Variant::Sw))?;
        let d_inv = linalg::inverse(&sw.d, "D")?;
        let zeros = linalg::spectrum(&(&sw.a - &sw.b * d_inv * &sw.c))?.eigenvalues;
        for mu in &q.left_points {
            let target = -mu.conj();
            let gap = zeros.iter().map(|z| (z - target).norm()).fold(f64::INFINITY, f64::min) / target.norm();
            sw_gap = sw_gap.max(gap);
        }
    }
    let (a, b, c) = (pr_margin > 1.0, br_peak <= 1.0 + 1e-8, sw_gap <= 1e-7);
    Ok(Check::new(
        a && b && c,
        format!(
            "PR Riccati min eigenvalue / (1e-10 max) >= {pr_margin:.2e} {}; BR sup sigma_max {br_peak:.6} {}; SW zero mismatch {sw_gap:.1e} {}",
            ok(a),
            ok(b),
            ok(c)
        ),
    ))
}

fn rel_err(got: &CMat, want: &CMat) -> f64 {
    (got - want).norm() / want.norm()
}

/// Derivative of `CV (s W*V - W*AV)^{-1} W*B`.
fn descriptor_derivative(q: &LoewnerQuadruple, s: C64) -> Res<CMat> {
    let lu = (&q.wv * s - &q.wav).lu();
    let x = lu.solve(&q.wb).ok_or("singular pencil")?;
    let y = lu.solve(&(&q.wv * x)).ok_or("singular pencil")?;
    Ok(-(&q.cv * y))
}

fn c6_interpolation() -> Res<Check> {
    let mut worst_value: f64 = 0.0;
    let mut worst_hermite: f64 = 0.0;
    for seed in 0..10u64 {
        let ss = models::synthetic(16, 2, 2, 200 + seed, false)?;
        let d = linalg::to_complex(&ss.d);
        let right = conjugate_points(&[2.0, 25.0, 140.0], 1.5);
        let left = conjugate_points(&[5.0, 60.0, 400.0], 2.5);
        let q = loewner::assemble(&generate_samples(&ss, &right, &left)?)?;
        let rshift = build_shift_system(&right, 2)?;
        let lshift = build_shift_system(&left, 2)?;
        let mut check = |rom: &ReducedModel, points: &[C64]| -> Res<()> {
            for &s in points {
                worst_value = worst_value.max(rel_err(&rom.eval(s)?, &eval_transfer(&ss, s)?));
            }
            Ok(())
        };
        check(&interpolation::i_pork(&rshift, &q.cv, &d)?, &right)?;
        check(&interpolation::o_pork(&lshift, &q.wb, &d)?, &left)?;

        let axis_r = conjugate_points(&[2.0, 25.0, 140.0], 0.0);
        let axis_l = conjugate_points(&[5.0, 60.0, 400.0], 0.0);
        let qa = loewner::assemble(&generate_samples(&ss, &axis_r, &axis_l)?)?;
        let ra = build_shift_system(&axis_r, 2)?;
        let la = build_shift_system(&axis_l, 2)?;
        let zr = interpolation::pole_place_zeta(&ra, &damped_poles(&axis_r, 0.5))?.zeta;
        let zl = interpolation::pole_place_zeta_left(&la, &damped_poles(&axis_l, 0.5))?.zeta;
        check(&ReducedModel::complex(&ra.s - &zr * &ra.l, zr.clone(), qa.cv.clone(), d.clone()), &axis_r)?;
        check(&ReducedModel::complex(&la.s - la.l_col() * &zl, qa.wb.clone(), zl.clone(), d.clone()), &axis_l)?;

        let coincident = conjugate_points(&[4.0, 45.0, 300.0], 2.0);
        let qh = loewner::assemble(&generate_samples(&ss, &coincident, &coincident)?)?;
        for &s in &coincident {
            worst_value = worst_value.max(rel_err(&qh.descriptor_transfer(s)?, &eval_transfer(&ss, s)?));
            worst_hermite = worst_hermite.max(rel_err(&descriptor_derivative(&qh, s)?, &eval_derivative(&ss, s)?));
        }
    }
    Ok(Check::new(
        worst_value <= 1e-8 && worst_hermite <= 1e-6,
        format!("worst value mismatch {worst_value:.1e} (tol 1e-8), worst derivative mismatch {worst_hermite:.1e} (tol 1e-6)"),
    ))
}

/// `(1/2π) ∫ (jω - A)^{-1} B B* (jω - A)^{-*} dω` by the midpoint rule after
/// `ω = c·tan θ`.
fn frequency_quadrature(a: &CMat, b: &CMat, nodes: usize) -> Res<CMat> {
    let n = a.nrows();
    let c = a.norm().max(1.0);
    let h = std::f64::consts::PI / nodes as f64;
    let mut acc = CMat::zeros(n, n);
    for k in 0..nodes {
        let theta = -std::f64::consts::FRAC_PI_2 + (k as f64 + 0.5) * h;
        let w = c * theta.tan();
        let jac = c / theta.cos().powi(2);
        let x = (linalg::eye(n) * c64(0.0, w) - a).lu().solve(b).ok_or("singular resolvent")?;
        acc += &x * x.adjoint() * c64(jac * h, 0.0);
    }
    Ok(acc / c64(2.0 * std::f64::consts::PI, 0.0))
}

fn c7_solvers() -> Res<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_lyap: f64 = 0.0;
    for n in 1..=6 {
        for _ in 0..3 {
            let r = linalg::to_complex(&randn(&mut rng, n, n));
            let top = linalg::spectrum(&r)?.max_real_part;
            let a = r - linalg::eye(n) * c64(top + 0.5 + rng.random::<f64>(), 0.0);
            let b = linalg::to_complex(&randn(&mut rng, n, 2));
            let p = linalg::solve_lyapunov(&a, &(&b * b.adjoint()))?;
            let quad = frequency_quadrature(&a, &b, 20_000)?;
            worst_lyap = worst_lyap.max(rel_err(&p, &quad));
        }
    }

    let mut worst_res: f64 = 0.0;
    let mut worst_loop = f64::NEG_INFINITY;
    for k in 0..100 {
        let n = 2 + k % 7;
        let a = linalg::to_complex(&randn(&mut rng, n, n));
        let b = linalg::to_complex(&randn(&mut rng, n, 1 + k % 3));
        let c = linalg::to_complex(&randn(&mut rng, 1 + k % 2, n));
        let g = linalg::hermitian_part(&(&b * b.adjoint()));
        let qm = linalg::hermitian_part(&(c.adjoint() * &c));
        let x = linalg::solve_care_stabilizing(&a, &g, &qm, -1.0)?;
        let res = linalg::care_residual(&a, &g, &qm, -1.0, &x).norm();
        let scale = qm.norm() + x.norm() * (2.0 * a.norm() + g.norm() * x.norm());
        worst_res = worst_res.max(res / scale.max(1.0));
        worst_loop = worst_loop.max(linalg::spectrum(&(&a - &g * &x))?.max_real_part);
    }
    let (a, b, c) = (worst_lyap <= 1e-6, worst_res <= 1e-9, worst_loop < 0.0);
    Ok(Check::new(
        a && b && c,
        format!(
            "Lyapunov vs quadrature {worst_lyap:.1e} (tol 1e-6) {}; CARE scaled residual {worst_res:.1e} (tol 1e-9) {}; closed-loop max real part {worst_loop:.2e} {}",
            ok(a),
            ok(b),
            ok(c)
        ),
    ))
}

/// Seed of the desk experiment. Chosen so that several orders up to 20 reach
/// an intrusive error below 0.1; for most seeds the decay is too slow and the
/// gated comparison would be empty.
const DESK_SEED: u64 = 6;

fn c8_desk_experiment() -> Res<Check> {
    let ss = models::synthetic(100, 2, 2, DESK_SEED, true)?;
    let lam = linalg::spectrum(&linalg::to_complex(&ss.a))?.eigenvalues;
    let right: Vec<C64> = lam.iter().map(|z| c64(-0.9 * z.re, z.im)).collect();
    let left: Vec<C64> = lam.iter().map(|z| c64(-1.1 * z.re, z.im)).collect();
    let q = loewner::assemble(&generate_samples(&ss, &right, &left)?)?;
    let full: Realization = ss.to_complex();
    let sweep = ErrorSweep::new(&full, &error_grid(1e-1, 1e4, 3000, &pole_frequencies(&ss)?))?;
    let mut compared = 0;
    let mut worst_gated: f64 = 0.0;
    let mut worst_all: f64 = 0.0;
    let mut summary = Vec::new();
    for variant in [Variant::Bt, Variant::Lqg, Variant::Pr, Variant::Bst] {
        let intrusive_basis = intrusive::intrusive_balancer(&ss, &variant)?;
        let sample_basis = reduction::real_balancer(&q, &compute_factors(&q, &VariantConfig::adi(variant))?)?;
        let mut gated = 0;
        let mut variant_worst: f64 = 0.0;
        for r in 1..=20 {
            let e_i = sweep.relative_error(&intrusive_basis.reduce(r)?)?;
            let e_n = sweep.relative_error(&sample_basis.reduce(r)?)?;
            let gap = (e_n - e_i).abs() / e_i;
            worst_all = worst_all.max(gap);
            if e_i < 0.1 {
                variant_worst = variant_worst.max(gap);
                gated += 1;
            }
        }
        compared += gated;
        worst_gated = worst_gated.max(variant_worst);
        summary.push(format!("{variant} {gated} orders, gap {variant_worst:.2e}"));
    }
    Ok(Check::new(
        worst_gated <= 0.1 && compared > 0,
        format!(
            "{compared} gated order/variant pairs, worst relative gap {worst_gated:.3} (tol 0.1); {}; all orders 1..20 worst gap {worst_all:.3}",
            summary.join(", ")
        ),
    ))
}
