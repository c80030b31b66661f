//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sparsesrc::helmholtz::pml_width;
use sparsesrc::oracle::{dense_my_minimize, fundamental_solution, peak_match, DenseProblem};
use sparsesrc::realblock::{apply_d_block, apply_dstar_block, apply_vstar, from_block, to_block};
use sparsesrc::ssn::{NewtonSolver, PredualOperator, StepControl};
use sparsesrc::{
    add_noise, alpha_bound, builtin_example, real_part_operator, reconstruct, refraction_index, ssn_continuation,
    tikhonov_solve_detailed, BlockOperator, BuiltinExample, ComplexField, GridSpec, HelmholtzOperator, LinearMode,
    Medium, RealField, SsnConfig,
};

const SEED: u64 = 20240607;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn random_complex(len: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    (0..len)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

/// Operator and noisy data for a builtin example at wavenumber `k` on an
/// `n × n` grid.
fn example_data(ex: BuiltinExample, k: f64, n: usize) -> (HelmholtzOperator, ComplexField) {
    let grid = GridSpec::new(n).unwrap();
    let setup = builtin_example(ex, &grid).unwrap();
    let op = HelmholtzOperator::with_default_pml(&grid, &setup.n_field, k).unwrap();
    let clean = op.forward_solve_real(&setup.source).unwrap();
    let u = add_noise(&clean, setup.noise_level, SEED).unwrap();
    (op, u)
}

fn support(field: &RealField, fraction: f64) -> usize {
    let cut = fraction * field.max_abs();
    field.values().iter().filter(|v| v.abs() > cut).count()
}

fn point_source() -> Outcome {
    let (k, n) = (12.0, 48);
    let grid = GridSpec::new(n).unwrap();
    let op = HelmholtzOperator::with_default_pml(&grid, &refraction_index(&grid, Medium::Homogeneous), k).unwrap();
    let c = grid.nearest_index(0.5, 0.5).unwrap();
    let (cx, cy) = grid.coords(c).unwrap();
    let mut f = vec![Complex64::new(0.0, 0.0); grid.len()];
    f[c] = Complex64::new(1.0 / (grid.h() * grid.h()), 0.0);
    let u = op.solve_slice(&f).unwrap();

    // The layer starts at w; one wavelength exceeds that distance at k = 12,
    // so the inner radius falls back to half the distance to the layer.
    let to_pml = (0.5 - pml_width(k)) - (cx - 0.5).abs().max((cy - 0.5).abs());
    let inner = (2.0 * PI / k).min(0.5 * to_pml);
    let (mut got, mut want) = (Vec::new(), Vec::new());
    for (idx, x, y) in grid.nodes() {
        let r = (x - cx).hypot(y - cy);
        if r > inner && r < to_pml {
            got.push(u[idx]);
            want.push(fundamental_solution(k, r).unwrap());
        }
    }
    let err = rel_diff(&got, &want);
    check(
        err <= 0.05,
        format!(
            "relative l2 error {err:.4} on {} nodes with r in ({inner:.3}, {to_pml:.3}), limit 0.05",
            got.len()
        ),
    )
}

fn operator_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: Vec<(String, f64, f64)> = Vec::new();

    let grid = GridSpec::new(24).unwrap();
    let setup = builtin_example(BuiltinExample::Peaks7Inhomo, &grid).unwrap();
    let op = HelmholtzOperator::with_default_pml(&grid, &setup.n_field, 12.0).unwrap();
    let x = random_complex(grid.len(), &mut rng);
    let y = random_complex(grid.len(), &mut rng);

    let round = op.apply_slice(&op.solve_slice(&x).unwrap()).unwrap();
    worst.push(("D V x = x".into(), rel_diff(&round, &x), 1e-10));
    let round = op.solve_slice(&op.apply_slice(&x).unwrap()).unwrap();
    worst.push(("V D x = x".into(), rel_diff(&round, &x), 1e-10));

    let inner = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(p, q)| p.conj() * q).sum::<Complex64>();
    let dx = op.apply_slice(&x).unwrap();
    let dhy = op.apply_adjoint_slice(&y).unwrap();
    let lhs = inner(&dx, &y);
    worst.push((
        "<Dx,y> = <x,D^H y>".into(),
        (lhs - inner(&x, &dhy)).norm() / lhs.norm(),
        1e-12,
    ));
    let vx = op.solve_slice(&x).unwrap();
    let vhy = op.solve_adjoint_slice(&y).unwrap();
    let lhs = inner(&vx, &y);
    worst.push((
        "<Vx,y> = <x,V^H y>".into(),
        (lhs - inner(&x, &vhy)).norm() / lhs.norm(),
        1e-10,
    ));

    let xf = ComplexField::new(grid, x.clone()).unwrap();
    let blk = apply_d_block(&op, &to_block(&xf)).unwrap();
    worst.push(("block D = D".into(), rel_diff(from_block(&blk).values(), &dx), 1e-12));
    let yf = ComplexField::new(grid, y.clone()).unwrap();
    let star = apply_dstar_block(&op, &to_block(&yf)).unwrap();
    worst.push((
        "block D* = D^H".into(),
        rel_diff(from_block(&star).values(), &dhy),
        1e-12,
    ));
    let vstar = apply_vstar(&op, &to_block(&yf)).unwrap();
    worst.push((
        "block V* = V^H".into(),
        rel_diff(from_block(&vstar).values(), &vhy),
        1e-12,
    ));

    // dense 8x8 grid: block matrix [[Re, -Im], [Im, Re]] against block applies
    let g8 = GridSpec::new(8).unwrap();
    let op8 = HelmholtzOperator::with_default_pml(&g8, &refraction_index(&g8, Medium::Homogeneous), 4.0).unwrap();
    let d = op8.matrix().to_dense();
    let n = g8.len();
    let big = nalgebra::DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = d[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let v: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let vb = sparsesrc::RealBlockVec::new(g8, v.clone()).unwrap();
    let dense = &big * nalgebra::DVector::from_vec(v.clone());
    let via = apply_d_block(&op8, &vb).unwrap();
    let err = via
        .as_slice()
        .iter()
        .zip(dense.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / max_abs(dense.as_slice());
    worst.push(("dense 8x8 block D".into(), err, 1e-12));
    let dense_t = big.transpose() * nalgebra::DVector::from_vec(v);
    let via_t = apply_dstar_block(&op8, &vb).unwrap();
    let err = via_t
        .as_slice()
        .iter()
        .zip(dense_t.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / max_abs(dense_t.as_slice());
    worst.push(("dense 8x8 block D*".into(), err, 1e-12));

    let failed: Vec<String> = worst
        .iter()
        .filter(|(_, e, tol)| !(e <= tol))
        .map(|(name, e, tol)| format!("{name}: {e:.2e} > {tol:.0e}"))
        .collect();
    let biggest = worst.iter().map(|(_, e, _)| *e).fold(0.0, f64::max);
    if failed.is_empty() {
        check(
            true,
            format!("{} identities, largest relative error {biggest:.2e}", worst.len()),
        )
    } else {
        check(false, failed.join("; "))
    }
}

fn table_counts() -> Outcome {
    let config = SsnConfig::default();
    let mut lines = Vec::new();
    let mut pass = true;
    let mut counts_k6 = Vec::new();
    for (k, n) in [(6.0, 24), (12.0, 48), (24.0, 96)] {
        let (op, u) = example_data(BuiltinExample::Peaks9, k, n);
        let rec = reconstruct(&op, &u, &config).unwrap();
        let counts = rec.outcome.trace.inner_counts();
        let total: usize = counts.iter().sum();
        let ok = counts.iter().all(|&c| c <= 10) && total <= 40;
        pass &= ok;
        lines.push(format!(
            "k={k} n={n} counts {counts:?} total {total}{}",
            if ok { "" } else { " (over limit)" }
        ));
        if k == 6.0 {
            counts_k6 = counts;
        }
    }
    let (op, u) = example_data(BuiltinExample::Peaks9, 6.0, 48);
    let fine = reconstruct(&op, &u, &config).unwrap().outcome.trace.inner_counts();
    let spread = counts_k6
        .iter()
        .zip(&fine)
        .map(|(a, b)| a.abs_diff(*b))
        .max()
        .unwrap_or(0);
    pass &= spread <= 3;
    lines.push(format!(
        "k=6 n=48 counts {fine:?}, largest per-gamma difference to n=24 is {spread} (limit 3)"
    ));
    check(pass, format!("limits 10 per gamma, 40 total; {}", lines.join("; ")))
}

fn oracle_equivalence() -> Outcome {
    let (op, u) = example_data(BuiltinExample::Peaks4, 4.0, 8);
    let block = BlockOperator::new(&op);
    let ub = to_block(&u).into_vec();
    let bound = alpha_bound(&block, &ub).unwrap();
    let solver = NewtonSolver::new(&block, &ub, LinearMode::Banded, 1e-10).unwrap();
    let mut worst = 0.0f64;
    let mut steps = 0;
    for alpha in [1e-5, 0.2 * bound] {
        let mut y = vec![0.0; block.dim()];
        for gamma in SsnConfig::default().gammas() {
            y = solver.inner(gamma, alpha, &y, 30, StepControl::Guarded).unwrap().y;
            let reference = dense_my_minimize(&DenseProblem::from_operator(&op, &u, gamma, alpha).unwrap()).unwrap();
            let diff = y
                .iter()
                .zip(reference.as_slice())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst = worst.max(diff);
            steps += 1;
        }
    }
    check(
        worst <= 1e-6,
        format!("{steps} (alpha, gamma) pairs on N=64, largest |y_ssn - y_oracle| {worst:.2e}, limit 1e-6"),
    )
}

fn example_one() -> Outcome {
    let ex = BuiltinExample::Peaks4;
    let (op, u) = example_data(ex, ex.wavenumber(), 24);
    let h = op.grid().h();
    let rec = reconstruct(&op, &u, &SsnConfig::default()).unwrap();
    let mu = rec.mu.re();
    let report = peak_match(&mu, ex.peaks()).unwrap();
    let signs: Vec<&str> = report
        .matches
        .iter()
        .map(|m| match m {
            Some(m) if m.detection.value < 0.0 => "-",
            Some(_) => "+",
            None => "?",
        })
        .collect();
    let located = report.all_within(2.0 * h);
    let tik = tikhonov_solve_detailed(&op, &u, 1e-5).unwrap();
    let (s_ssn, s_tik) = (support(&mu, 0.05), support(&tik.mu.re(), 0.05));
    let pass = located && signs == ["-", "-", "-", "+"] && report.spurious <= 1 && s_tik >= 3 * s_ssn;
    check(
        pass,
        format!(
            "matched {}/4, distances/h {:?}, signs {signs:?}, spurious {}, support SSN {s_ssn} vs Tikhonov {s_tik} nodes",
            report.matched(),
            report.distances().iter().map(|d| d.map(|d| (d / h * 100.0).round() / 100.0)).collect::<Vec<_>>(),
            report.spurious,
        ),
    )
}

fn example_three() -> Outcome {
    let ex = BuiltinExample::Peaks7Inhomo;
    let (op, u) = example_data(ex, ex.wavenumber(), 48);
    let h = op.grid().h();
    let rec = reconstruct(&op, &u, &SsnConfig::default()).unwrap();
    let report = peak_match(&rec.mu.re(), ex.peaks()).unwrap();
    check(
        report.all_within(2.0 * h),
        format!(
            "matched {}/7, sign hits {}, spurious {}, largest distance/h {:.2}, residual check {}",
            report.matched(),
            report.sign_hits,
            report.spurious,
            report.distances().iter().flatten().fold(0.0f64, |m, d| m.max(d / h)),
            if rec.outcome.residual_ok() { "ok" } else { "failed" },
        ),
    )
}

fn zero_threshold() -> Outcome {
    let (op, u) = example_data(BuiltinExample::Peaks4, 6.0, 24);
    let block = BlockOperator::new(&op);
    let ub = to_block(&u).into_vec();
    let bound = alpha_bound(&block, &ub).unwrap();
    let u_inf = max_abs(&ub);
    let mut worst = 0.0f64;
    for factor in [1.0, 1.5, 10.0] {
        let config = SsnConfig {
            alpha: factor * bound,
            ..SsnConfig::default()
        };
        let out = ssn_continuation(&block, &ub, &config).unwrap();
        worst = worst.max(max_abs(&out.zeta) / u_inf);
    }
    check(
        worst <= 1e-8,
        format!("alpha in {{1, 1.5, 10}} x {bound:.3e}: largest |zeta|/|U| = {worst:.2e}, limit 1e-8"),
    )
}

fn tikhonov_closed_form() -> Outcome {
    let (op, u) = example_data(BuiltinExample::Peaks4, 6.0, 24);
    let s = tikhonov_solve_detailed(&op, &u, 1e-5).unwrap();
    let zero = tikhonov_solve_detailed(&op, &u, 0.0).unwrap();
    let du = op.apply_slice(u.values()).unwrap();
    let exact = zero.mu.values() == du.as_slice();
    check(
        s.relative_residual <= 1e-8 && exact,
        format!(
            "residual {:.2e} after {} iterations (limit 1e-8); alpha = 0 returns Du exactly: {exact}",
            s.relative_residual, s.iterations
        ),
    )
}

fn real_part_mode() -> Outcome {
    let ex = BuiltinExample::Peaks4;
    let (op, u) = example_data(ex, 6.0, 16);
    let grid = *op.grid();
    let h = grid.h();
    let rp = match real_part_operator(&op, false) {
        Ok(rp) => rp,
        Err(e) => return check(false, format!("real-part operator not available: {e}")),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mu: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let l1 = rp.apply(&mu);
    let reference = op.forward_solve_real(&RealField::new(grid, mu).unwrap()).unwrap().re();
    let err = l1
        .iter()
        .zip(reference.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / reference.max_abs();

    let ur = u.re().into_values();
    let config = SsnConfig {
        lin_mode: LinearMode::Dense,
        ..SsnConfig::default()
    };
    let out = ssn_continuation(&rp, &ur, &config).unwrap();
    let report = peak_match(&RealField::new(grid, out.zeta).unwrap(), ex.peaks()).unwrap();
    let located = report.matches.iter().all(|m| m.is_some_and(|m| m.distance <= 3.0 * h));
    check(
        rp.report().is_invertible() && err <= 1e-10 && located,
        format!(
            "condition {:.2e}, |L1 mu - Re(V mu)| {err:.2e} (limit 1e-10), matched {}/4 with distances/h {:?}, sign hits {}",
            rp.report().condition_estimate,
            report.matched(),
            report.distances().iter().map(|d| d.map(|d| (d / h * 100.0).round() / 100.0)).collect::<Vec<_>>(),
            report.sign_hits,
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, u64); 9] = [
        ("forward solver vs Hankel point source", point_source, 10),
        ("operator identities", operator_identities, 5),
        ("SSN iteration counts and mesh independence", table_counts, 300),
        ("SSN inner loop vs dense oracle", oracle_equivalence, 30),
        ("four-peak reconstruction", example_one, 30),
        ("seven peaks, inhomogeneous medium", example_three, 120),
        ("zero solution above the alpha bound", zero_threshold, 30),
        ("Tikhonov closed form", tikhonov_closed_form, 30),
        ("real-part mode", real_part_mode, 60),
    ];
    let mut failures = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*budget);
        let pass = outcome.pass && in_time;
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {}: {} - {name}: {} [{:.2}s, budget {budget}s]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed.as_secs_f64(),
        );
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
