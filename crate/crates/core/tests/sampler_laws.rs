//! Law-level validation of the increment and path samplers against the
//! characteristic-exponent quadrature and closed-form exit-time values.

use num_complex::Complex;

use levylab::geometry::{Domain, Piece};
use levylab::levy::{LevyModel, PsiEvaluator, SpectralDensity, SpectralForm};
use levylab::sampler::{
    estimate_exit_time_mean, DecomposedSampler, ExitTimeOptions, IncrementSampler, KilledWalk,
    RngStream,
};
use levylab::stats::{cf_two_sample_z, cf_z_score, empirical_cf, test_frequencies};

fn iso(v: f64) -> SpectralDensity<f64> {
    SpectralDensity::new(2, SpectralForm::Constant { value: v }).unwrap()
}

fn cosine(base: f64, amp: f64) -> SpectralDensity<f64> {
    SpectralDensity::new(
        2,
        SpectralForm::Cosine { base, amplitude: amp, axis: vec![1.0, 0.0] },
    )
    .unwrap()
}

fn draw_increments(model: &LevyModel<f64>, dt: f64, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let sampler = IncrementSampler::new(model, dt).unwrap();
    let mut rng = RngStream::new(seed, 0).rng();
    (0..n).map(|_| sampler.sample(&mut rng)).collect()
}

/// max z-score over the test frequencies of the empirical CF against
/// e^{dt psi(z)}.
fn cf_max_z(model: &LevyModel<f64>, dt: f64, n: usize, seed: u64, z_hi: f64) -> f64 {
    let samples = draw_increments(model, dt, n, seed);
    let psi = PsiEvaluator::new(model).unwrap();
    let mut worst: f64 = 0.0;
    for z in test_frequencies::<f64>(2, 20, 0.4, z_hi) {
        let cf = empirical_cf(&samples, &z);
        let target = (psi.eval(&z).unwrap() * Complex::new(dt, 0.0)).exp();
        worst = worst.max(cf_z_score(&cf, target));
    }
    worst
}

#[test]
fn isotropic_exact_sampler_matches_psi() {
    for (alpha, seed) in [(0.7, 101), (1.0, 102), (1.5, 103)] {
        let m = LevyModel::stable(2, alpha, iso(1.0)).unwrap();
        let z = cf_max_z(&m, 0.7, 120_000, seed, 1.1);
        assert!(z < 3.0, "alpha={alpha}: max z = {z}");
    }
}

#[test]
fn anisotropic_series_sampler_matches_psi() {
    let m = LevyModel::stable(2, 1.5, cosine(1.0, 0.5)).unwrap();
    let z = cf_max_z(&m, 0.005, 150_000, 7, 2.2);
    assert!(z < 3.5, "max z = {z}");
    // a heavier-tailed case exercises the alpha < 1 compensator sign
    let m = LevyModel::stable(2, 0.7, cosine(1.0, 0.5)).unwrap();
    let z = cf_max_z(&m, 0.005, 150_000, 8, 1.4);
    assert!(z < 3.5, "alpha=0.7 max z = {z}");
}

#[test]
fn alpha_one_table_density_sampler_matches_psi() {
    // centered anisotropic table density (values symmetric under reflection)
    let pi = std::f64::consts::PI;
    let table = SpectralDensity::new(
        2,
        SpectralForm::Table {
            entries: vec![
                (0.0, 1.5),
                (pi / 2.0, 0.5),
                (pi, 1.5),
                (1.5 * pi, 0.5),
            ],
        },
    )
    .unwrap();
    let m = LevyModel::stable(2, 1.0, table).unwrap();
    let z = cf_max_z(&m, 0.005, 120_000, 9, 1.6);
    assert!(z < 3.5, "max z = {z}");
}

#[test]
fn truncated_sampler_matches_psi() {
    let m = LevyModel::truncated(2, 0.5, iso(1.0)).unwrap();
    let z = cf_max_z(&m, 0.01, 120_000, 11, 1.6);
    assert!(z < 3.5, "alpha=0.5 truncated: max z = {z}");
    let m = LevyModel::truncated(2, 1.5, cosine(1.0, 0.5)).unwrap();
    let z = cf_max_z(&m, 0.005, 120_000, 12, 1.6);
    assert!(z < 3.5, "alpha=1.5 truncated anisotropic: max z = {z}");
}

#[test]
fn brownian_mixture_matches_psi() {
    use levylab::linalg::DenseMatrix;
    let m = LevyModel::stable(2, 1.5, iso(1.0))
        .unwrap()
        .add_brownian(DenseMatrix::from_rows(&[vec![1.0, 0.3], vec![0.3, 0.5]]))
        .unwrap();
    let z = cf_max_z(&m, 0.4, 120_000, 13, 1.2);
    assert!(z < 3.5, "max z = {z}");
}

#[test]
fn dual_sampler_draws_negated_increments() {
    let m = LevyModel::stable(2, 1.2, cosine(1.0, 0.5)).unwrap();
    let dual_samples = draw_increments(&m.dual(), 0.005, 80_000, 15);
    let mut negated = draw_increments(&m, 0.005, 80_000, 16);
    for x in &mut negated {
        for v in x.iter_mut() {
            *v = -*v;
        }
    }
    for z in test_frequencies::<f64>(2, 12, 0.4, 2.0) {
        let a = empirical_cf(&dual_samples, &z);
        let b = empirical_cf(&negated, &z);
        let zs = cf_two_sample_z(&a, &b);
        assert!(zs < 4.0, "two-sample z = {zs}");
    }
}

#[test]
fn decomposition_reassembles_the_stable_law() {
    // anisotropic alpha > 1: exercises the centering drift of the z-part
    let mt = LevyModel::truncated(2, 1.5, cosine(1.0, 0.5)).unwrap();
    let ms = LevyModel::stable(2, 1.5, cosine(1.0, 0.5)).unwrap();
    let dt = 0.01;
    let n = 100_000;
    let ds = DecomposedSampler::new(&mt, dt).unwrap();
    let mut rng = RngStream::new(31, 0).rng();
    let recomposed: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let inc = ds.sample(&mut rng);
            inc.y.iter().zip(&inc.z).map(|(a, b)| a + b).collect()
        })
        .collect();
    let direct = draw_increments(&ms, dt, n, 32);
    for z in test_frequencies::<f64>(2, 20, 0.3, 1.8) {
        let a = empirical_cf(&recomposed, &z);
        let b = empirical_cf(&direct, &z);
        let zs = cf_two_sample_z(&a, &b);
        assert!(zs < 3.5, "two-sample z = {zs} at {z:?}");
    }
}

#[test]
fn dt_scaling_of_quantiles() {
    // q_{0.9}(|X_{2 dt}|) = 2^{1/alpha} q_{0.9}(|X_{dt}|) for stable kinds
    let alpha = 1.5;
    let m = LevyModel::stable(2, alpha, cosine(1.0, 0.5)).unwrap();
    let q90 = |dt: f64, seed: u64| -> f64 {
        let mut norms: Vec<f64> = draw_increments(&m, dt, 60_000, seed)
            .iter()
            .map(|x| (x[0] * x[0] + x[1] * x[1]).sqrt())
            .collect();
        norms.sort_by(|a, b| a.partial_cmp(b).unwrap());
        norms[(norms.len() as f64 * 0.9) as usize]
    };
    let q1 = q90(0.005, 41);
    let q2 = q90(0.01, 42);
    let ratio = q2 / q1;
    let expect = 2.0_f64.powf(1.0 / alpha);
    assert!(
        (ratio - expect).abs() < 0.03 * expect,
        "ratio {ratio} vs {expect}"
    );
}

#[test]
fn exit_time_matches_closed_form_for_isotropic_ball() {
    // E_0[tau_B(0,1)] = Gamma(d/2) / (2^a Gamma(1+a/2) Gamma((d+a)/2)) / sigma_a
    // for the unit-amplitude isotropic model: 0.0716449 at d=2, alpha=1.5
    let m = LevyModel::stable(2, 1.5, iso(1.0)).unwrap();
    let d = Domain::new(vec![Piece::Ball { center: vec![0.0, 0.0], radius: 1.0 }]).unwrap();
    let stats = estimate_exit_time_mean(
        &m,
        &d,
        &[0.0, 0.0],
        60_000,
        RngStream::new(55, 0),
        &ExitTimeOptions::new(0.001),
    )
    .unwrap();
    let expect = 0.071644896031344533;
    let tol = 3.0 * stats.stderr + 0.025 * expect; // MC + step-grid overshoot
    assert!(
        (stats.mean - expect).abs() < tol,
        "mean {} vs {expect} (tol {tol})",
        stats.mean
    );
}

#[test]
fn exit_time_scaling_in_the_domain_radius() {
    let alpha = 1.5;
    let m = LevyModel::stable(2, alpha, iso(1.0)).unwrap();
    let mean_exit = |radius: f64, seed: u64| -> (f64, f64) {
        let d =
            Domain::new(vec![Piece::Ball { center: vec![0.0, 0.0], radius }]).unwrap();
        let stats = estimate_exit_time_mean(
            &m,
            &d,
            &[0.0, 0.0],
            30_000,
            RngStream::new(seed, 0),
            &ExitTimeOptions::new(0.001),
        )
        .unwrap();
        (stats.mean, stats.stderr)
    };
    let (m1, _) = mean_exit(1.0, 61);
    let (m2, _) = mean_exit(2.0, 61); // common random numbers
    let ratio = m2 / m1;
    let expect = 2.0_f64.powf(alpha);
    assert!(
        (ratio - expect).abs() < 0.05 * expect,
        "ratio {ratio} vs {expect}"
    );
}

#[test]
fn exit_time_shrinks_toward_the_boundary() {
    let m = LevyModel::stable(2, 1.5, iso(1.0)).unwrap();
    let d = Domain::new(vec![Piece::Ball { center: vec![0.0, 0.0], radius: 1.0 }]).unwrap();
    let mut prev = f64::INFINITY;
    for (i, x0) in [0.0, 0.5, 0.8, 0.95].iter().enumerate() {
        let stats = estimate_exit_time_mean(
            &m,
            &d,
            &[*x0, 0.0],
            20_000,
            RngStream::new(70, i as u64),
            &ExitTimeOptions::new(0.001),
        )
        .unwrap();
        assert!(
            stats.mean < prev + 3.0 * stats.stderr,
            "mean exit must shrink along the ray"
        );
        prev = stats.mean;
    }
}

#[test]
fn exit_tail_obeys_the_markov_power_bound() {
    // theta = sup_x P_x(tau > t1) over a mesh; P(tau > n t1) <= theta^n (1 + 3 se)
    let m = LevyModel::stable(2, 1.5, iso(1.0)).unwrap();
    let d = Domain::new(vec![Piece::Ball { center: vec![0.0, 0.0], radius: 1.0 }]).unwrap();
    let walk = KilledWalk::new(&m, &d, 0.002).unwrap();
    let t1_steps = 25; // t1 = 0.05
    let n_paths = 20_000;
    let mesh = [
        [0.0, 0.0],
        [0.5, 0.0],
        [0.0, -0.5],
        [-0.7, 0.0],
        [0.4, 0.4],
    ];
    let mut theta: f64 = 0.0;
    let mut tail = vec![0u64; 5]; // survivors of n*t1 for n = 1..=4, worst start
    for (si, x0) in mesh.iter().enumerate() {
        let mut counts = vec![0u64; 5];
        for i in 0..n_paths {
            let mut rng = RngStream::new(90, si as u64).derive(i as u64).rng();
            let end = walk.run(x0, 4 * t1_steps, &mut rng, |_, _, _| {});
            let survived_steps = if end.exited { end.steps - 1 } else { end.steps };
            for n in 1..=4 {
                if survived_steps >= n * t1_steps {
                    counts[n] += 1;
                }
            }
        }
        let p1 = counts[1] as f64 / n_paths as f64;
        if p1 > theta {
            theta = p1;
            tail = counts.clone();
        }
    }
    assert!(theta < 1.0);
    for n in 2..=4 {
        let pn = tail[n] as f64 / n_paths as f64;
        let bound = theta.powi(n as i32);
        let se = (bound * (1.0 - bound) / n_paths as f64).sqrt() + 1e-4;
        assert!(
            pn <= bound * 1.05 + 3.0 * se,
            "n={n}: P = {pn} exceeds theta^n = {bound}"
        );
    }
}
