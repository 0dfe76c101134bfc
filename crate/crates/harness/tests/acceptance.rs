//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runtime budgets are part of each criterion.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use rsr_core::diagnostics::{
    alignment_a, condition_number, diagnostics_report, kappa1, kappa2, kappa3, noisy_constants_from,
    relative_alignment_r, NoisyInputs,
};
use rsr_core::estimators::{ste_solve, tme_solve};
use rsr_core::generators::{
    gen_haystack, init_from_subspace, outlier_covariance, perturb_subspace, random_orthogonal, sample_subspace,
    AngleProfile, HaystackParams,
};
use rsr_core::spectral::{
    blocks, complement_basis, eigh, geometric_mean, inverse, operator_norm, principal_angles, schur_complement_block,
    schur_split, sin_largest_angle, SubspaceBasis, SymMatrix,
};
use rsr_core::{Dataset, EstimatorConfig, GroundTruth, Label};
use rsr_harness::fit::median;
use rsr_harness::row::ExperimentRow;
use rsr_harness::runners::{run, Outcome, RunOptions};
use rsr_harness::spec::ExperimentSpec;

type Check = std::result::Result<String, String>;

/// Name, check and optional runtime budget.
type Criterion = (&'static str, fn() -> Check, Option<Duration>);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run_fixture(name: &str) -> std::result::Result<Outcome, String> {
    let spec = ExperimentSpec::load(&fixture(name)).map_err(|e| e.to_string())?;
    run(&spec, &RunOptions { threads: None, timings: false }).map_err(|e| e.to_string())
}

fn gaussian(r: usize, c: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

fn random_pd(n: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
    let g = gaussian(n, n, rng);
    SymMatrix::symmetrize(&g * g.transpose() + DMatrix::identity(n, n) * 0.05)
}

fn random_psd_rank(n: usize, r: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
    let g = gaussian(n, r, rng);
    SymMatrix::symmetrize(&g * g.transpose())
}

fn random_basis(n: usize, d: usize, rng: &mut ChaCha8Rng) -> SubspaceBasis {
    SubspaceBasis::orthonormalize(gaussian(n, d, rng)).unwrap()
}

/// `2 ≤ D ≤ 10`, `1 ≤ d < D`.
fn dims(rng: &mut ChaCha8Rng) -> (usize, usize) {
    let big_d = rng.random_range(2..=10);
    (big_d, rng.random_range(1..big_d))
}

fn rank(m: &SymMatrix) -> usize {
    let ev = m.eigenvalues();
    ev.iter().filter(|&&v| v > 1e-9 * ev[0].abs()).count()
}

fn criterion_1() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let big_d = rng.random_range(4..=10);
        let d = rng.random_range(1..=big_d / 2);
        let mut angles: Vec<f64> = (0..d).map(|_| rng.random_range(0.01..1.5)).collect();
        angles.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let alpha = 10f64.powf(rng.random_range(-4.0..0.0));
        let lstar = sample_subspace(big_d, d, &mut rng).unwrap();
        let lhat = perturb_subspace(&lstar, &AngleProfile::new(angles.clone()).unwrap(), &mut rng).unwrap();
        let sigma0 = init_from_subspace(&lhat, alpha).unwrap();
        let s1 = angles[0].sin().powi(2);
        let cd = angles[d - 1].cos().powi(2);
        let want = [
            (alpha + alpha * alpha) / (s1 + alpha).powi(2),
            (s1 + alpha) / alpha,
            (cd + alpha) * (s1 + alpha) / (alpha + alpha * alpha),
        ];
        let got = [
            kappa1(&sigma0, &lstar).map_err(|e| e.to_string())?,
            kappa2(&sigma0, &lstar).map_err(|e| e.to_string())?,
            kappa3(&sigma0, &lstar).map_err(|e| e.to_string())?,
        ];
        for i in 0..3 {
            let e = rel(got[i], want[i]);
            worst = worst.max(e);
            ensure!(e <= 1e-10, "case {case}: kappa{} = {} vs {}", i + 1, got[i], want[i]);
        }
        let b = blocks(&sigma0, &lstar).unwrap();
        let mut schur = SymMatrix::symmetrize(schur_complement_block(&b, 0.0).unwrap()).eigenvalues();
        schur.reverse();
        let mut expect: Vec<f64> = angles.iter().map(|t| (alpha + alpha * alpha) / (t.sin().powi(2) + alpha)).collect();
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (g, w) in schur.iter().zip(&expect) {
            ensure!(rel(*g, *w) <= 1e-10, "case {case}: Schur eigenvalue {g} vs {w}");
        }
    }
    Ok(format!("100 grid points, worst relative error {worst:.2e}"))
}

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut count = 0;
    for seed in 0..50u64 {
        let big_d = rng.random_range(3..=10);
        let d = rng.random_range(1..big_d);
        let params = HaystackParams::isotropic(rng.random_range(10..60), rng.random_range(5..60), d, big_d, seed);
        let (data, truth) = gen_haystack(&params).unwrap();
        let cfg = EstimatorConfig::new(d, 0.01);
        let r =
            diagnostics_report(&SymMatrix::identity(big_d), &data, &truth, 0.01, &cfg).map_err(|e| e.to_string())?;
        for (name, k) in [("kappa1", r.kappa1), ("kappa2", r.kappa2), ("kappa3", r.kappa3)] {
            ensure!((k - 1.0).abs() <= 1e-12, "seed {seed}: {name} = {k}");
        }
        count += 1;
    }
    Ok(format!("{count} instances, all kappas equal 1 within 1e-12"))
}

/// Runs `check` until `n` instances are accepted; `Ok(false)` means the
/// instance falls outside the premise and is redrawn.
fn suite(
    name: &str,
    seed: u64,
    n: usize,
    mut check: impl FnMut(&mut ChaCha8Rng) -> std::result::Result<bool, String>,
) -> std::result::Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut accepted, mut drawn) = (0, 0);
    while accepted < n {
        drawn += 1;
        ensure!(drawn <= 20 * n, "{name}: only {accepted} of {drawn} draws met the premise");
        if check(&mut rng).map_err(|e| format!("{name}, draw {drawn}: {e}"))? {
            accepted += 1;
        }
    }
    Ok(drawn)
}

fn criterion_3() -> Check {
    const N: usize = 1000;
    suite("schur split", 31, N, |rng| {
        let (big_d, d) = dims(rng);
        let m = random_pd(big_d, rng);
        let u = random_basis(big_d, d, rng);
        let s = schur_split(&m, &u, 0.0).map_err(|e| e.to_string())?;
        let scale = m.spectral_norm();
        ensure!((s.g1.add(&s.g2).matrix() - m.matrix()).amax() <= 1e-15 * scale, "parts do not sum");
        ensure!(*s.g1.eigenvalues().last().unwrap() >= -1e-9 * scale, "first part not PSD");
        ensure!(*s.g2.eigenvalues().last().unwrap() >= -1e-9 * scale, "second part not PSD");
        ensure!(rank(&s.g1) == d && rank(&s.g2) == big_d - d, "ranks {} {}", rank(&s.g1), rank(&s.g2));
        Ok(true)
    })?;
    suite("angle bound", 32, N, |rng| {
        let (big_d, d) = dims(rng);
        let r = rng.random_range(1..=big_d);
        let m = random_psd_rank(big_d, r, rng);
        let lstar = random_basis(big_d, d, rng);
        let b = blocks(&m, &lstar).unwrap();
        let ll = SymMatrix::symmetrize(b.sigma_ll.clone()).eigenvalues();
        let pp = SymMatrix::symmetrize(b.sigma_pp.clone()).eigenvalues();
        if !(ll[d - 1] > 1e-10 * m.spectral_norm()) {
            return Ok(false);
        }
        let lhat = eigh(&m).unwrap().top_subspace(d).unwrap();
        let sin = principal_angles(&lhat, &lstar).unwrap().sin_largest;
        let bound = 2.0 * (pp[0].max(0.0) / ll[d - 1]).sqrt();
        ensure!(sin <= bound + 1e-9, "sin {sin} > {bound}");
        Ok(true)
    })?;
    suite("smallest eigenvalue bound", 33, N, |rng| {
        let (big_d, d) = dims(rng);
        let m = random_pd(big_d, rng);
        let u = random_basis(big_d, d, rng);
        let b = blocks(&m, &u).unwrap();
        let x = *SymMatrix::symmetrize(b.sigma_pp.clone()).eigenvalues().last().unwrap();
        let y = *SymMatrix::symmetrize(b.sigma_ll.clone()).eigenvalues().last().unwrap();
        let z = operator_norm(&b.sigma_lp);
        let lower = ((x + y) - ((x - y).powi(2) + 4.0 * z * z).sqrt()) / 2.0;
        let sd = *m.eigenvalues().last().unwrap();
        ensure!(sd >= lower - 1e-9 * m.spectral_norm(), "{sd} < {lower}");
        Ok(true)
    })?;
    suite("weak coupling", 34, N, |rng| {
        let (big_d, d) = dims(rng);
        let a = random_pd(d, rng);
        let c = random_pd(big_d - d, rng);
        let y = *a.eigenvalues().last().unwrap();
        let x = *c.eigenvalues().last().unwrap();
        let g = gaussian(d, big_d - d, rng);
        let t: f64 = rng.random();
        let off = &g * (t * (x * y).sqrt() / 2.0 / operator_norm(&g));
        let mut m = DMatrix::zeros(big_d, big_d);
        m.view_mut((0, 0), (d, d)).copy_from(a.matrix());
        m.view_mut((d, d), (big_d - d, big_d - d)).copy_from(c.matrix());
        m.view_mut((0, d), (d, big_d - d)).copy_from(&off);
        m.view_mut((d, 0), (big_d - d, d)).copy_from(&off.transpose());
        let q = random_orthogonal(big_d, rng);
        let rotated = SymMatrix::symmetrize(&q * m * q.transpose());
        let sd = *rotated.eigenvalues().last().unwrap();
        ensure!(sd >= x.min(y) / 3.0 - 1e-9 * rotated.spectral_norm(), "{sd} < min({x}, {y})/3");
        Ok(true)
    })?;
    suite("product eigenvalues", 35, N, |rng| {
        let d = rng.random_range(1..=10);
        let a = random_pd(d, rng);
        let r = rng.random_range(1..=d);
        let b = random_psd_rank(d, r, rng);
        let ea = a.eigenvalues();
        let sd_b = *b.eigenvalues().last().unwrap();
        let sd_aba = *b.congruence(a.matrix()).eigenvalues().last().unwrap();
        let tol = 1e-9 * ea[0] * ea[0] * b.spectral_norm();
        ensure!(ea[d - 1].powi(2) * sd_b <= sd_aba + tol, "lower side");
        ensure!(sd_aba <= ea[0].powi(2) * sd_b + tol, "upper side");
        Ok(true)
    })?;
    suite("low-rank identity", 36, N, |rng| {
        let (big_d, d) = dims(rng);
        let m = random_psd_rank(big_d, d, rng);
        let u = random_basis(big_d, d, rng);
        let b = blocks(&m, &u).unwrap();
        let ll = SymMatrix::symmetrize(b.sigma_ll.clone());
        let ev = ll.eigenvalues();
        if !(ev[d - 1] > 1e-6 * ev[0]) {
            return Ok(false);
        }
        let rebuilt = &b.sigma_pl * inverse(&ll).unwrap().matrix() * &b.sigma_lp;
        let err = (rebuilt - &b.sigma_pp).amax();
        ensure!(err <= 1e-9 * (1.0 + m.spectral_norm()) * ev[0] / ev[d - 1], "residual {err}");
        Ok(true)
    })?;
    suite("geometric mean", 37, N, |rng| {
        let n = rng.random_range(1..=10);
        let a = random_pd(n, rng);
        let b = random_pd(n, rng);
        let lhs = geometric_mean(&a, &b).map_err(|e| e.to_string())?;
        let harm = inverse(&inverse(&a).unwrap().add(&inverse(&b).unwrap())).unwrap();
        let rhs = geometric_mean(&a.add(&b), &harm).map_err(|e| e.to_string())?;
        let err = (lhs.matrix() - rhs.matrix()).amax();
        ensure!(err <= 1e-8 * lhs.spectral_norm(), "difference {err}");
        Ok(true)
    })?;
    let mut worst: f64 = 0.0;
    suite("TME equivariance", 38, N, |rng| {
        let big_d = rng.random_range(2..=6);
        let n = 4 * big_d + rng.random_range(0..10);
        let pts = gaussian(big_d, n, rng);
        let a = DMatrix::<f64>::identity(big_d, big_d) + gaussian(big_d, big_d, rng) * 0.3;
        if !(a.clone().singular_values().min() > 0.2) {
            return Ok(false);
        }
        let cfg = EstimatorConfig::new(1, 0.5);
        let data = Dataset::new(pts, None).unwrap();
        let s = tme_solve(&data, &cfg, &SymMatrix::identity(big_d)).map_err(|e| e.to_string())?;
        let t =
            tme_solve(&data.transformed(&a).unwrap(), &cfg, &SymMatrix::identity(big_d)).map_err(|e| e.to_string())?;
        ensure!(s.converged && t.converged, "TME did not converge");
        let mapped = s.sigma_final.congruence(&a).trace_normalized().unwrap();
        let err = (mapped.matrix() - t.sigma_final.matrix()).norm() / mapped.matrix().norm();
        worst = worst.max(err);
        ensure!(err <= 1e-6, "relative error {err:e}");
        Ok(true)
    })?;
    Ok(format!("8 suites x {N} instances, TME equivariance worst {worst:.1e}"))
}

fn criterion_4() -> Check {
    let (mut tme_worst, mut gap_worst, mut ste_worst, mut iters) = (0f64, 0f64, 0f64, 0usize);
    for seed in 0..20 {
        let (data, truth) = gen_haystack(&HaystackParams::isotropic(150, 200, 2, 6, seed)).unwrap();
        let cfg = EstimatorConfig::new(2, 0.5);
        let t = tme_solve(&data, &cfg, &SymMatrix::identity(6)).map_err(|e| e.to_string())?;
        let ev = t.sigma_final.eigenvalues();
        let sin_t = sin_largest_angle(&t.subspace, &truth.basis).unwrap();
        let gap = ev[2] / ev[1];
        ensure!(sin_t <= 1e-6 && gap <= 1e-5, "seed {seed}: TME sin {sin_t:e}, gap {gap:e}");
        let s = ste_solve(&data, &cfg, &SymMatrix::identity(6), None).map_err(|e| e.to_string())?;
        let sin_s = sin_largest_angle(&s.subspace, &truth.basis).unwrap();
        ensure!(s.converged && s.iterations <= 200, "seed {seed}: STE took {} iterations", s.iterations);
        ensure!(sin_s <= 1e-8, "seed {seed}: STE sin {sin_s:e}");
        tme_worst = tme_worst.max(sin_t);
        gap_worst = gap_worst.max(gap);
        ste_worst = ste_worst.max(sin_s);
        iters = iters.max(s.iterations);
    }
    Ok(format!(
        "20/20 seeds; TME sin <= {tme_worst:.1e}, gap <= {gap_worst:.1e}; STE sin <= {ste_worst:.1e} in <= {iters} iterations"
    ))
}

fn criterion_5() -> Check {
    let out = run_fixture("convergence.json")?;
    ensure!(out.rows.len() == 10, "{} rows", out.rows.len());
    let (mut worst_ratio, mut worst_growth) = (0f64, f64::INFINITY);
    for r in &out.rows {
        let seed = r.seed;
        ensure!(r.status == "ok", "seed {seed}: status {}", r.status);
        ensure!(r.condition_satisfied == Some(true), "seed {seed}: condition not satisfied");
        let (rate, bound, c0) =
            (r.fitted_rate.ok_or("no fitted rate")?, r.rate_bound.ok_or("no rate bound")?, r.c0.ok_or("no C0")?);
        ensure!(rate <= bound * 1.05, "seed {seed}: rate {rate} > 1.05 x {bound}");
        let g = r.kappa1_growth_min.ok_or("no growth factors")?;
        ensure!(g >= c0, "seed {seed}: growth {g} < C0 = {c0}");
        worst_ratio = worst_ratio.max(rate / bound);
        worst_growth = worst_growth.min(g / c0);
    }
    Ok(format!("10/10 seeds; rate/bound <= {worst_ratio:.3}, growth/C0 >= {worst_growth:.2}"))
}

fn criterion_6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut low: f64 = f64::INFINITY;
    for i in 0..500u64 {
        let big_d = rng.random_range(3..=10);
        let d = rng.random_range(1..big_d);
        let mut params =
            HaystackParams::isotropic(rng.random_range(5..60), rng.random_range(1..60), d, big_d, 6000 + i);
        if i % 2 == 1 {
            let basis = params.subspace().map_err(|e| e.to_string())?;
            let l: Vec<f64> = (0..d).map(|_| rng.random_range(0.2..3.0)).collect();
            let p: Vec<f64> = (0..big_d - d).map(|_| rng.random_range(0.2..3.0)).collect();
            params.outlier_covariance =
                outlier_covariance(&basis, &l, &p, rng.random_range(0.0..0.9)).map_err(|e| e.to_string())?;
            params.basis = Some(basis);
        }
        let (data, truth) = gen_haystack(&params).unwrap();
        let a = alignment_a(&data, &truth).map_err(|e| e.to_string())?;
        let r = relative_alignment_r(&data, &truth).map_err(|e| e.to_string())?;
        ensure!(a >= 1.0 - 1e-12 && r >= 1.0 - 1e-12, "dataset {i}: A = {a}, R = {r}");
        low = low.min(a.min(r));
    }

    let (big_d, d, n0, n1) = (6, 2, 50_000, 100);
    let basis = sample_subspace(big_d, d, &mut rng).unwrap();
    let w = complement_basis(&basis);
    let out = w.columns() * gaussian(big_d - d, n0, &mut rng);
    let inl = basis.columns() * gaussian(d, n1, &mut rng);
    let mut pts = DMatrix::zeros(big_d, n0 + n1);
    pts.columns_mut(0, n1).copy_from(&inl);
    pts.columns_mut(n1, n0).copy_from(&out);
    let labels: Vec<Label> = (0..n0 + n1).map(|i| if i < n1 { Label::Inlier } else { Label::Outlier }).collect();
    let data = Dataset::new(pts, Some(labels.clone())).unwrap();
    let truth = GroundTruth::new(basis, labels, None).unwrap();
    let a_iso = alignment_a(&data, &truth).map_err(|e| e.to_string())?;
    ensure!((a_iso - 1.0).abs() <= 0.05, "isotropic complement outliers: A = {a_iso}");

    let (big_d, d) = (8, 2);
    let basis = sample_subspace(big_d, d, &mut rng).unwrap();
    let cov = outlier_covariance(&basis, &[2.0, 0.5], &[1.0, 3.0, 0.7, 1.5, 1.0, 2.5], 0.3).unwrap();
    let k_out = condition_number(&cov);
    let params = HaystackParams {
        n1: 20_000,
        n0: 100_000,
        d,
        ambient_dim: big_d,
        inlier_spectrum: vec![1.0, 0.5],
        outlier_covariance: cov,
        basis: Some(basis),
        seed: 66,
    };
    let (data, truth) = gen_haystack(&params).unwrap();
    let codim = (big_d - d) as f64;
    let a = alignment_a(&data, &truth).map_err(|e| e.to_string())?;
    let r = relative_alignment_r(&data, &truth).map_err(|e| e.to_string())?;
    let a_bound = k_out.sqrt() * codim / (codim - 2.0) * 1.05;
    let r_bound = k_out.sqrt() * big_d as f64 / (codim - 2.0) * 1.05;
    ensure!(a <= a_bound, "haystack A = {a} > {a_bound}");
    ensure!(r <= r_bound, "haystack R = {r} > {r_bound}");
    Ok(format!(
        "500 datasets min(A, R) = {low:.4}; isotropic A = {a_iso:.4}; haystack A = {a:.3} <= {a_bound:.3}, R = {r:.3} <= {r_bound:.3}"
    ))
}

fn criterion_7() -> Check {
    let out = run_fixture("noise_sweep.json")?;
    ensure!(out.rows.iter().all(|r| r.final_sin_theta1.is_some()), "some replicates failed");
    // Small ε puts cond(Σ) near 1/ε², where the step size sits on a rounding
    // floor above the stopping tolerance; the subspace has settled by then.
    let stalled = out.rows.iter().filter(|r| r.status == "not_converged").count();
    ensure!(out.summary.noise.len() == 1, "expected one noise slice");
    let s = &out.summary.noise[0];
    ensure!(s.monotone, "median error not non-decreasing: {:?}", s.median_error);
    let zero = s.zero_epsilon_error.ok_or("no noiseless cell")?;
    ensure!(zero <= 1e-8, "noiseless error {zero:e}");
    let top = s.epsilon.iter().zip(&s.median_error).find(|(e, _)| **e == 1e-2).ok_or("no 1e-2 cell")?;
    let at_top = top.1 / top.0.sqrt();
    for (e, r) in s.epsilon.iter().filter(|e| **e > 0.0).zip(&s.error_over_sqrt_epsilon) {
        ensure!(*r <= 2.0 * at_top, "eps {e}: error/sqrt(eps) = {r} > 2 x {at_top}");
    }
    Ok(format!(
        "monotone; noiseless error {zero:.1e}; {stalled}/{} runs at max_iter; max error/sqrt(eps) {:.2e} vs {at_top:.2e} at 1e-2; fitted exponent {:.2}",
        out.rows.len(),
        s.max_ratio.unwrap_or(f64::NAN),
        s.fitted_exponent.unwrap_or(f64::NAN)
    ))
}

fn pilot_medians() -> std::result::Result<(f64, f64), String> {
    let mut rd = csv::Reader::from_path(fixture("tme_vs_ste_pilot.csv")).map_err(|e| e.to_string())?;
    let (mut tme, mut both) = (Vec::new(), Vec::new());
    for rec in rd.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let field = |name: &str| -> std::result::Result<f64, String> {
            let i = ExperimentRow::HEADER.iter().position(|h| *h == name).unwrap();
            rec[i].parse().map_err(|_| format!("bad {name} in pilot"))
        };
        tme.push(field("tme_sin_theta1")?);
        both.push(field("final_sin_theta1")?);
    }
    Ok((median(&tme).ok_or("empty pilot")?, median(&both).ok_or("empty pilot")?))
}

fn criterion_8() -> Check {
    let out = run_fixture("tme_vs_ste.json")?;
    ensure!(out.rows.len() == 10, "{} rows", out.rows.len());
    let r0 = &out.rows[0];
    ensure!((r0.dssnr - 0.95).abs() <= 1e-3, "dssnr {}", r0.dssnr);
    ensure!(r0.n1 + r0.n0 == 20_000, "N = {}", r0.n1 + r0.n0);
    let tme: Vec<f64> = out.rows.iter().filter_map(|r| r.tme_sin_theta1).collect();
    let both: Vec<f64> = out.rows.iter().filter_map(|r| r.final_sin_theta1).collect();
    ensure!(tme.len() == 10 && both.len() == 10, "missing results");
    let (mt, mb) = (median(&tme).unwrap(), median(&both).unwrap());
    ensure!(mb <= 1e-4, "TME+STE median {mb:e}");
    ensure!(mt >= 10.0 * mb, "TME median {mt:e} < 10 x {mb:e}");
    let (pt, pb) = pilot_medians()?;
    ensure!(rel(mt, pt) <= 0.05, "TME median {mt:e} drifted from pilot {pt:e}");
    ensure!(pb <= 1e-4 && pt >= 10.0 * pb, "pilot fixture does not separate");
    Ok(format!("TME median {mt:.2e} (pilot {pt:.2e}), TME+STE median {mb:.2e} (pilot {pb:.2e})"))
}

fn write_spec(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

fn criterion_9() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let base = tmp.path();
    let haystack = r#"{"haystack": {"n1": 150, "n0": 200, "d": 2, "ambient_dim": 6}}"#;
    let specs = [
        (
            "run",
            write_spec(
                base,
                "conv.json",
                &format!(
                    r#"{{"kind": "convergence", "model": {haystack}, "estimator": {{"d": 2, "gamma": 0.5}},
               "init": {{"kind": "subspace", "angles_deg": [5.0]}}, "replicates": 3, "seed": 1}}"#
                ),
            ),
        ),
        (
            "noise-sweep",
            write_spec(
                base,
                "noise.json",
                &format!(
                    r#"{{"kind": "noise_sweep", "model": {haystack}, "estimator": {{"d": 2, "gamma": 0.5}},
               "init": {{"kind": "subspace", "angles_deg": [2.0]}},
               "grids": {{"epsilon": [0.0, 1e-3, 1e-2]}}, "replicates": 2, "seed": 2}}"#
                ),
            ),
        ),
        (
            "phase",
            write_spec(
                base,
                "phase.json",
                &format!(
                    r#"{{"kind": "phase_diagram", "model": {haystack}, "estimator": {{"d": 2, "gamma": 0.5}},
               "init": {{"kind": "subspace", "angles_deg": [10.0]}},
               "grids": {{"dssnr": [0.5, 2.0], "gamma": [0.25, 0.9], "alpha": [1e-3, 1e-1]}},
               "replicates": 2, "seed": 3}}"#
                ),
            ),
        ),
        (
            "compare",
            write_spec(
                base,
                "compare.json",
                &format!(
                    r#"{{"kind": "tme_vs_ste", "model": {haystack}, "estimator": {{"d": 2, "gamma": 0.5}},
               "replicates": 2, "seed": 4}}"#
                ),
            ),
        ),
        (
            "diagnose",
            write_spec(
                base,
                "diag.json",
                &format!(
                    r#"{{"kind": "diagnose", "model": {haystack}, "estimator": {{"d": 2, "gamma": 0.5}},
               "init": {{"kind": "subspace", "angles_deg": [3.0]}},
               "grids": {{"epsilon": [1e-3]}}, "seed": 5}}"#
                ),
            ),
        ),
        ("gen", base.join("conv.json")),
    ];
    let bin = env!("CARGO_BIN_EXE_rsr");
    let mut files = 0;
    for (sub, spec) in &specs {
        for format in ["csv", "json"] {
            let mut outs = Vec::new();
            for (attempt, threads) in [(0, "1"), (1, "3")] {
                let out = base.join(format!("{sub}-{format}-{attempt}"));
                let status = Command::new(bin)
                    .arg(sub)
                    .arg("--config")
                    .arg(spec)
                    .arg("--out")
                    .arg(&out)
                    .args(["--format", format, "--threads", threads, "--seed", "17", "--no-timestamp"])
                    .output()
                    .map_err(|e| e.to_string())?;
                ensure!(
                    status.status.success(),
                    "{sub}: exit {:?}: {}",
                    status.status.code(),
                    String::from_utf8_lossy(&status.stderr)
                );
                outs.push(dir_bytes(&out));
            }
            ensure!(!outs[0].is_empty(), "{sub} wrote nothing");
            ensure!(outs[0] == outs[1], "{sub} --format {format}: outputs differ between runs");
            files += outs[0].len();
        }
    }
    Ok(format!("6 subcommands x 2 formats, {files} files byte-identical across reruns and thread counts"))
}

/// Exact rational arithmetic for the hand evaluation of the noisy constants.
#[derive(Clone, Copy, Debug)]
struct Q(i128, i128);

impl Q {
    fn new(n: i128, d: i128) -> Q {
        fn gcd(a: i128, b: i128) -> i128 {
            if b == 0 {
                a.abs()
            } else {
                gcd(b, a % b)
            }
        }
        let g = gcd(n, d).max(1) * d.signum();
        Q(n / g, d / g)
    }
    fn int(n: i128) -> Q {
        Q(n, 1)
    }
    fn add(self, o: Q) -> Q {
        Q::new(self.0 * o.1 + o.0 * self.1, self.1 * o.1)
    }
    fn sub(self, o: Q) -> Q {
        self.add(Q(-o.0, o.1))
    }
    fn mul(self, o: Q) -> Q {
        Q::new(self.0 * o.0, self.1 * o.1)
    }
    fn div(self, o: Q) -> Q {
        Q::new(self.0 * o.1, self.1 * o.0)
    }
    fn min(self, o: Q) -> Q {
        if self.0 * o.1 <= o.0 * self.1 {
            self
        } else {
            o
        }
    }
    fn f(self) -> f64 {
        self.0 as f64 / self.1 as f64
    }
}

fn criterion_10() -> Check {
    // (s, γ, ε, C_E, κ_in, n1, n0, d, D) as exact fractions.
    let cases = [
        (Q(2, 1), Q(1, 2), Q(1, 100), Q(3, 10), Q(3, 2), 300, 200, 2, 6),
        (Q(3, 2), Q(1, 1), Q(1, 10), Q(1, 1), Q(2, 1), 150, 200, 2, 6),
        (Q(10, 1), Q(1, 5), Q(1, 2), Q(1, 20), Q(1, 1), 1000, 50, 3, 10),
    ];
    let mut worst: f64 = 0.0;
    for (s, g, eps, ce, kin, n1, n0, d, big_d) in cases {
        let two = Q::int(2);
        let three = Q::int(3);
        let s2g = s.add(g.mul(two));
        let sg = s.add(g);
        let num = Q::int(152)
            .mul(sg)
            .div(two.mul(g))
            .add(Q::int(16).mul(s2g).mul(s2g).div(three.mul(g).mul(three.mul(g))).mul(sg));
        let den = Q::int(1).sub(two.mul(s2g).div(three.mul(sg)));
        let c = Q::int(3340).div(ce).add(num.div(den));
        let ck2 = Q::int(7);
        let ck3 = Q::int(13).mul(kin).add(Q::int(1));
        let gap = s.div(g).sub(Q::int(1)).min(Q::int(1));
        let m = gap.min(ce.div(two));
        let first = m.mul(m).div(eps.mul(ck2));
        let second = Q::int(n0).div(Q::int(n1 * (big_d - d))).mul(gap);
        let ck1 = first.min(second).div(Q::int(100).mul(eps).mul(ck3));

        let nc = noisy_constants_from(&NoisyInputs {
            dssnr: s.f(),
            gamma: g.f(),
            epsilon: eps.f(),
            c_e: ce.f(),
            kappa_in_star: kin.f(),
            n1: n1 as usize,
            n0: n0 as usize,
            d: d as usize,
            ambient_dim: big_d as usize,
        })
        .map_err(|e| e.to_string())?;
        ensure!(nc.c_kappa2 == 7.0, "C_kappa2 = {}", nc.c_kappa2);
        ensure!(nc.c_kappa3 == 13.0 * kin.f() + 1.0, "C_kappa3 = {}", nc.c_kappa3);
        ensure!(nc.c_kappa3 == ck3.f(), "C_kappa3 = {} vs {}", nc.c_kappa3, ck3.f());
        for (name, got, want) in [("C", nc.c_noisy, c.f()), ("C_kappa1", nc.c_kappa1, ck1.f())] {
            let e = rel(got, want);
            worst = worst.max(e);
            ensure!(e <= 1e-12, "{name} = {got} vs exact {want}");
        }
    }
    Ok(format!("3 tuples, worst relative error {worst:.1e}"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("kappa closed forms", criterion_1, Some(Duration::from_secs(5))),
        ("identity init kappas", criterion_2, None),
        ("matrix inequality suites", criterion_3, Some(Duration::from_secs(60))),
        ("exact recovery, easy regime", criterion_4, Some(Duration::from_secs(30))),
        ("linear convergence under the condition", criterion_5, None),
        ("alignment statistic bounds", criterion_6, Some(Duration::from_secs(60))),
        ("noise scaling", criterion_7, Some(Duration::from_secs(300))),
        ("intermediate regime separation", criterion_8, Some(Duration::from_secs(300))),
        ("determinism", criterion_9, None),
        ("noisy constants", criterion_10, None),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let res = match (res, budget) {
            (Ok(_), Some(b)) if took > *b => {
                Err(format!("runtime {:.1}s over {}s budget", took.as_secs_f64(), b.as_secs()))
            }
            (r, _) => r,
        };
        match res {
            Ok(msg) => println!("PASS {:>2} {name}: {msg} [{:.1}s]", i + 1, took.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg} [{:.1}s]", i + 1, took.as_secs_f64());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
