//! Standalone property suites: kernel symmetry/stationarity/PSD, generator
//! determinism and CDF checks, FDR monotonicity, CSV/JSON round-trips.
//! The whole file runs in well under a minute.

use nalgebra::DMatrix;
use proptest::prelude::{prop_assert, proptest, ProptestConfig};
use rand::Rng;
use rmmd::bench;
use rmmd::dataio::{self, LabelColumn, LabeledDataset};
use rmmd::estimators::{self, Hypothesis, VarianceMode};
use rmmd::kernel::{eval_kernel, gram, Bandwidth, KernelSpec};
use rmmd::multcomp::{fdr_metrics, Region};
use rmmd::rng::rng_from;
use rmmd::synthdata::{acceptance_rate, sample, GeneratorSpec};
use rmmd::testing::{run_test, Method, NullMode, TestConfig};
use rmmd::Sample;
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

const CATALOGUE: [KernelSpec; 4] = [
    KernelSpec::Gaussian {
        bandwidth: Bandwidth::Fixed(0.8),
    },
    KernelSpec::PeriodicCosh,
    KernelSpec::PeriodicLog { theta: 0.9 },
    KernelSpec::ProductPeriodic { theta: 0.9 },
];

fn catalogue_points(spec: &KernelSpec, rng: &mut impl Rng, n: usize) -> Sample {
    let dim = spec.required_dim().unwrap_or(3);
    let data: Vec<f64> = (0..n * dim).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
    Sample::new(data, dim).unwrap()
}

#[test]
fn kernel_symmetry_is_exact() {
    let mut rng = rng_from(1, 0x10, 0);
    for spec in CATALOGUE {
        for _ in 0..200 {
            let pts = catalogue_points(&spec, &mut rng, 2);
            let a = eval_kernel(&spec, pts.point(0), pts.point(1)).unwrap();
            let b = eval_kernel(&spec, pts.point(1), pts.point(0)).unwrap();
            assert_eq!(a.to_bits(), b.to_bits(), "kernel {spec}");
        }
    }
}

#[test]
fn kernel_stationarity_constant_diagonal() {
    let mut rng = rng_from(2, 0x11, 0);
    for spec in CATALOGUE {
        let resolved = spec.resolve(&catalogue_points(&spec, &mut rng, 4)).unwrap();
        let expect = resolved.k0();
        for _ in 0..100 {
            let pts = catalogue_points(&spec, &mut rng, 1);
            let v = resolved.eval(pts.point(0), pts.point(0)).unwrap();
            assert_eq!(v.to_bits(), expect.to_bits(), "kernel {spec}");
        }
    }
}

#[test]
fn periodic_kernels_have_period_two_pi() {
    let mut rng = rng_from(3, 0x12, 0);
    for spec in CATALOGUE.iter().filter(|s| s.is_periodic()) {
        for _ in 0..100 {
            let pts = catalogue_points(spec, &mut rng, 2);
            let a = eval_kernel(spec, pts.point(0), pts.point(1)).unwrap();
            let shifted: Vec<f64> = pts.point(0).iter().map(|v| v + 2.0 * PI).collect();
            let b = eval_kernel(spec, &shifted, pts.point(1)).unwrap();
            assert!((a - b).abs() <= 1e-10, "kernel {spec}: {a} vs {b}");
        }
    }
}

#[test]
fn gram_matrices_are_symmetric_and_psd() {
    let mut rng = rng_from(4, 0x13, 0);
    for spec in CATALOGUE {
        for trial in 0..25 {
            let n = 5 + (trial % 26);
            let pts = catalogue_points(&spec, &mut rng, n);
            let resolved = spec.resolve(&pts).unwrap();
            let g = gram(&resolved, &pts, &pts).unwrap();
            assert!(g.is_square());
            // symmetry within 1e-12 relative tolerance
            for i in 0..n {
                for j in 0..n {
                    let (a, b) = (g.get(i, j), g.get(j, i));
                    assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0));
                }
            }
            // eigenvalues bounded below by -1e-8 * lambda_max
            let sym = DMatrix::from_fn(n, n, |i, j| 0.5 * (g.get(i, j) + g.get(j, i)));
            let eigen = sym.symmetric_eigen();
            let max = eigen.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
            let min = eigen.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
            assert!(min >= -1e-8 * max, "kernel {spec}: min eig {min}, max {max}");
        }
    }
}

#[test]
fn generator_determinism_and_support() {
    for spec in [
        GeneratorSpec::Uniform1d,
        GeneratorSpec::Perturbed1d { omega: 6.0 },
        GeneratorSpec::Uniform2d,
        GeneratorSpec::Perturbed2d { omega: 3.0 },
        GeneratorSpec::Gaussian {
            dim: 5,
            cov_scale: 2.0,
        },
    ] {
        let a = sample(&spec, 500, 77).unwrap();
        let b = sample(&spec, 500, 77).unwrap();
        assert_eq!(a, b, "generator {spec}");
        if !matches!(spec, GeneratorSpec::Gaussian { .. }) {
            assert!(a.as_slice().iter().all(|&v| (0.0..1.0).contains(&v)));
        }
    }
}

/// Simpson-rule CDF of the normalized perturbed density on [0, x].
fn perturbed_cdf_oracle(omega: f64, x: f64) -> f64 {
    let density = |t: f64| 1.0 + (2.0 * PI * omega * t).sin();
    let integrate = |to: f64| {
        let steps = 4000;
        let h = to / steps as f64;
        let mut acc = density(0.0) + density(to);
        for i in 1..steps {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * density(i as f64 * h);
        }
        acc * h / 3.0
    };
    integrate(x) / integrate(1.0)
}

#[test]
fn perturbed_generator_matches_cdf_oracle() {
    let omega = 6.0;
    let n = 100_000;
    let s = sample(&GeneratorSpec::Perturbed1d { omega }, n, 5).unwrap();
    let mut values: Vec<f64> = s.as_slice().to_vec();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut sup_err = 0.0f64;
    for (i, v) in values.iter().enumerate() {
        let emp = (i + 1) as f64 / n as f64;
        let th = perturbed_cdf_oracle(omega, *v);
        sup_err = sup_err.max((emp - th).abs());
    }
    assert!(sup_err < 0.01, "sup CDF error {sup_err}");
}

#[test]
fn perturbed_generator_mean_matches_quadrature() {
    let omega = 3.0;
    let n = 100_000;
    let s = sample(&GeneratorSpec::Perturbed1d { omega }, n, 6).unwrap();
    let mean: f64 = s.as_slice().iter().sum::<f64>() / n as f64;
    // analytic mean and variance of the normalized density via quadrature
    let density = |t: f64| 1.0 + (2.0 * PI * omega * t).sin();
    let steps = 20_000;
    let h = 1.0 / steps as f64;
    let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for i in 0..steps {
        let t = (i as f64 + 0.5) * h;
        let d = density(t) * h;
        z += d;
        m1 += t * d;
        m2 += t * t * d;
    }
    let mu = m1 / z;
    let var = m2 / z - mu * mu;
    let se = (var / n as f64).sqrt();
    assert!(
        (mean - mu).abs() <= 3.0 * se,
        "mean {mean} vs analytic {mu} (3se = {})",
        3.0 * se
    );
}

#[test]
fn omega_zero_draws_pass_a_ks_check_against_uniform() {
    let n = 10_000;
    let s = sample(&GeneratorSpec::Perturbed1d { omega: 0.0 }, n, 9).unwrap();
    let mut values: Vec<f64> = s.as_slice().to_vec();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut d = 0.0f64;
    for (i, v) in values.iter().enumerate() {
        let emp_hi = (i + 1) as f64 / n as f64;
        let emp_lo = i as f64 / n as f64;
        d = d.max((emp_hi - v).abs().max((emp_lo - v).abs()));
    }
    // one-sample KS p-value > 0.01 <=> sqrt(n) D below ~1.63
    assert!((n as f64).sqrt() * d < 1.63, "KS stat too large: {d}");
}

#[test]
fn acceptance_rate_matches_quadrature() {
    for omega in [0.5, 1.0, 2.5, 6.0] {
        let analytic = acceptance_rate(&GeneratorSpec::Perturbed1d { omega }).unwrap();
        let steps = 20_000;
        let h = 1.0 / steps as f64;
        let mut z = 0.0;
        for i in 0..steps {
            let t = (i as f64 + 0.5) * h;
            z += (1.0 + (2.0 * PI * omega * t).sin()) * h;
        }
        assert!((analytic - z / 2.0).abs() < 1e-6, "omega {omega}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fdr_metrics_are_monotone(assignment in proptest::collection::vec(0usize..4, 1..40)) {
        let regions: BTreeMap<String, Region> = assignment
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let region = match r {
                    0 => Region::A1,
                    1 => Region::A2,
                    2 => Region::A3,
                    _ => Region::B,
                };
                (format!("e{i}"), region)
            })
            .collect();
        let rejected: BTreeSet<String> = regions.keys().cloned().collect();
        let m = fdr_metrics(&rejected, &regions).unwrap().unwrap();
        prop_assert!(m.fdr0 >= m.fdr1 && m.fdr1 >= m.fdr2);
        prop_assert!((0.0..=1.0).contains(&m.fdr0));
        prop_assert!((0.0..=1.0).contains(&m.fdr2));
    }

    #[test]
    fn sidak_is_strictly_decreasing_and_inverts(n in 1usize..200) {
        let a = rmmd::multcomp::sidak(0.05, n).unwrap();
        let back = 1.0 - (1.0 - a).powi(n as i32);
        prop_assert!((back - 0.05).abs() <= 1e-12);
        if n > 1 {
            let prev = rmmd::multcomp::sidak(0.05, n - 1).unwrap();
            prop_assert!(a < prev);
        }
    }

    #[test]
    fn unbiased_norms_dominate_min_offdiagonal_entry(seed in 0u64..500) {
        let mut rng = rng_from(seed, 0x20, 0);
        let n = 6;
        let x = Sample::new((0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(), 1).unwrap();
        let spec = KernelSpec::Gaussian { bandwidth: Bandwidth::Fixed(0.9) };
        let k = spec.resolve(&x).unwrap();
        let g = gram(&k, &x, &x).unwrap();
        let st = estimators::embedding_stats(&k, &x, &x, false).unwrap();
        let mut min_off = f64::MAX;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    min_off = min_off.min(g.get(i, j));
                }
            }
        }
        prop_assert!(st.norm_p_sq >= min_off - 1e-12);
    }

    #[test]
    fn variance_estimate_invariant_under_pair_permutation(seed in 0u64..200) {
        let mut rng = rng_from(seed, 0x21, 0);
        let m = 7;
        let xs: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        let ys: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        // permute the pair indices jointly
        let mut order: Vec<usize> = (0..m).collect();
        for i in (1..m).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        let x1 = Sample::from_1d(xs.clone()).unwrap();
        let y1 = Sample::from_1d(ys.clone()).unwrap();
        let x2 = Sample::from_1d(order.iter().map(|&i| xs[i]).collect()).unwrap();
        let y2 = Sample::from_1d(order.iter().map(|&i| ys[i]).collect()).unwrap();
        let k = KernelSpec::PeriodicCosh.resolve(&x1).unwrap();
        let t1 = estimators::pair_kernel_table(&k, &x1, &y1, 0.7, 1.2).unwrap();
        let t2 = estimators::pair_kernel_table(&k, &x2, &y2, 0.7, 1.2).unwrap();
        for hyp in [Hypothesis::Null, Hypothesis::Alternative] {
            for mode in [VarianceMode::Paper, VarianceMode::Zeta1] {
                let v1 = estimators::variance_estimate(&t1, hyp, mode).sigma_sq;
                let v2 = estimators::variance_estimate(&t2, hyp, mode).sigma_sq;
                prop_assert!((v1 - v2).abs() <= 1e-9 * v1.abs().max(1.0));
            }
        }
    }

    #[test]
    fn rmmd_recomposes_from_parts(seed in 0u64..200) {
        let mut rng = rng_from(seed, 0x22, 0);
        let n = 8;
        let x = Sample::new((0..n).map(|_| rng.gen_range(0.0..2.0 * PI)).collect(), 1).unwrap();
        let y = Sample::new((0..n).map(|_| rng.gen_range(0.0..2.0 * PI)).collect(), 1).unwrap();
        let kp = rng.gen_range(0.0..2.0);
        let kq = rng.gen_range(0.0..2.0);
        let k = KernelSpec::PeriodicCosh.resolve(&x).unwrap();
        let whole = estimators::rmmd(&k, &x, &y, kp, kq, false).unwrap();
        let st = estimators::embedding_stats(&k, &x, &y, false).unwrap();
        let recomposed = st.mmd2() - kp * st.norm_p_sq - kq * st.norm_q_sq;
        prop_assert!((whole - recomposed).abs() <= 1e-12 * whole.abs().max(1.0));
    }

    #[test]
    fn biased_mmd_is_nonnegative_for_every_catalogue_kernel(seed in 0u64..100) {
        let mut rng = rng_from(seed, 0x23, 0);
        for spec in CATALOGUE {
            let dim = spec.required_dim().unwrap_or(2);
            let n = 5;
            let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
                Sample::new((0..n * dim).map(|_| rng.gen_range(0.0..2.0 * PI)).collect(), dim).unwrap()
            };
            let x = mk(&mut rng);
            let y = mk(&mut rng);
            let k = spec.resolve(&x).unwrap();
            let v = estimators::mmd2(&k, &x, &y, true).unwrap();
            prop_assert!(v >= 0.0, "kernel {} gave {v}", spec);
        }
    }
}

#[test]
fn permutation_p_values_live_on_the_grid() {
    let mut rng = rng_from(5, 0x24, 0);
    let b = 37;
    for _ in 0..10 {
        let x = Sample::new((0..15).map(|_| rng.gen_range(0.0..1.0)).collect(), 1).unwrap();
        let y = Sample::new((0..15).map(|_| rng.gen_range(0.0..1.5)).collect(), 1).unwrap();
        let mut cfg = TestConfig::new(Method::Mmd).with_seed(rng.gen());
        cfg.n_permutations = b;
        let out = run_test(&x, &y, &cfg).unwrap();
        let grid_pos = out.p_value * (b as f64 + 1.0);
        assert!(
            (grid_pos - grid_pos.round()).abs() < 1e-9,
            "p {} not on the 1/(B+1) grid",
            out.p_value
        );
        assert!(out.p_value >= 1.0 / (b as f64 + 1.0) && out.p_value <= 1.0);
    }
}

#[test]
fn monotone_power_in_n_for_rmmd() {
    // perturbed-uniform family: estimated power never decreases with n
    // beyond two combined standard errors
    let cfg = TestConfig::new(Method::Rmmd)
        .with_kernel(KernelSpec::PeriodicCosh)
        .with_kappa(1.0)
        .with_seed(0);
    let reps = 200;
    let mut prev: Option<bench::PowerEstimate> = None;
    for n in [50, 100, 200, 400] {
        let est = bench::estimate_power(
            &GeneratorSpec::Uniform1d,
            &GeneratorSpec::Perturbed1d { omega: 6.0 },
            n,
            &cfg,
            reps,
            13,
        )
        .unwrap();
        if let Some(p) = &prev {
            let slack = 2.0 * (p.std_err.powi(2) + est.std_err.powi(2)).sqrt();
            assert!(
                est.power >= p.power - slack,
                "power dropped from {} (n={}) to {} (n={})",
                p.power,
                p.n_per_sample,
                est.power,
                est.n_per_sample
            );
        }
        prev = Some(est);
    }
}

#[test]
fn csv_and_json_round_trips() {
    // labeled CSV round-trip at full precision
    let rows = vec![
        vec![0.1234567890123456, -9.87e-7],
        vec![2.0 / 3.0, 1e300],
        vec![-0.0, 42.0],
    ];
    let ds = LabeledDataset::new(
        Sample::from_rows(&rows).unwrap(),
        vec!["a".into(), "b".into(), "a".into()],
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ds.csv");
    dataio::write_csv(&ds, &path, "label").unwrap();
    let back = dataio::read_csv(&path, &LabelColumn::Name("label".into()), true).unwrap();
    assert_eq!(back.points(), ds.points());
    assert_eq!(back.labels(), ds.labels());

    // points CSV round-trip
    let s = sample(&GeneratorSpec::Perturbed1d { omega: 2.0 }, 50, 3).unwrap();
    let path = dir.path().join("points.csv");
    dataio::write_points_csv(&s, &path).unwrap();
    let back = dataio::read_points_csv(&path).unwrap();
    assert_eq!(&back, &s);

    // outcome JSON round-trip
    let x = sample(&GeneratorSpec::Uniform1d, 30, 1).unwrap();
    let y = sample(&GeneratorSpec::Uniform1d, 30, 2).unwrap();
    let mut cfg = TestConfig::new(Method::Rmmd)
        .with_seed(4)
        .with_null_mode(NullMode::Permutation);
    cfg.n_permutations = 50;
    let out = run_test(&x, &y, &cfg).unwrap();
    let json = serde_json::to_string(&out).unwrap();
    let back: rmmd::testing::TestOutcome = serde_json::from_str(&json).unwrap();
    assert_eq!(back.statistic.to_bits(), out.statistic.to_bits());
    assert_eq!(back.p_value.to_bits(), out.p_value.to_bits());
}
