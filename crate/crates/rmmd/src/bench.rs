//! Monte-Carlo experiment harness: power curves, type-I/II error rates,
//! κ-sweeps and empirical relative efficiency via minimal-sample-size search.
//!
//! Trials are independent; each derives its generator and test seeds from
//! (master seed, trial index), so estimates are identical under any thread
//! count. When the configured kernel is periodic, generator output on the
//! unit domain is scaled by 2π before testing.

use crate::rng::{derive_seed, stream};
use crate::synthdata::{sample, GeneratorSpec};
use crate::testing::{run_test, TestConfig};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PowerEstimate {
    pub power: f64,
    pub reps: usize,
    /// Binomial standard error sqrt(p(1-p)/reps).
    pub std_err: f64,
    pub n_per_sample: usize,
    pub gen_p: GeneratorSpec,
    pub gen_q: GeneratorSpec,
    pub config: TestConfig,
    pub seed: u64,
}

fn scale_for_kernel(cfg: &TestConfig) -> f64 {
    match &cfg.kernel {
        Some(k) if k.is_periodic() => 2.0 * PI,
        _ => 1.0,
    }
}

/// Fraction of `reps` independent trials rejecting H0. With gen_p = gen_q
/// this is the type-I error rate; otherwise the power.
pub fn estimate_power(
    gen_p: &GeneratorSpec,
    gen_q: &GeneratorSpec,
    n: usize,
    cfg: &TestConfig,
    reps: usize,
    seed: u64,
) -> Result<PowerEstimate> {
    if reps == 0 {
        return Err(Error::InvalidConfig("reps must be positive".into()));
    }
    cfg.validate()?;
    gen_p.validate()?;
    gen_q.validate()?;
    let scale = scale_for_kernel(cfg);
    let rejections: usize = (0..reps)
        .into_par_iter()
        .map(|t| -> Result<usize> {
            let wrap = |e: Error| Error::TrialFailed {
                trial: t,
                source: Box::new(e),
            };
            let x = sample(gen_p, n, derive_seed(seed, stream::TRIAL_X, t as u64))
                .map_err(wrap)?;
            let y = sample(gen_q, n, derive_seed(seed, stream::TRIAL_Y, t as u64))
                .map_err(wrap)?;
            let (x, y) = if scale != 1.0 {
                (x.scaled(scale), y.scaled(scale))
            } else {
                (x, y)
            };
            let mut trial_cfg = cfg.clone();
            trial_cfg.seed = derive_seed(seed, stream::TRIAL_TEST, t as u64);
            let out = run_test(&x, &y, &trial_cfg).map_err(wrap)?;
            Ok(out.reject as usize)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let power = rejections as f64 / reps as f64;
    Ok(PowerEstimate {
        power,
        reps,
        std_err: (power * (1.0 - power) / reps as f64).sqrt(),
        n_per_sample: n,
        gen_p: *gen_p,
        gen_q: *gen_q,
        config: cfg.clone(),
        seed,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepeatedPower {
    pub mean: f64,
    pub std_dev: f64,
    pub runs: Vec<PowerEstimate>,
}

/// Mean ± standard deviation of the power estimate over independent harness
/// repetitions (the paper-style "averaged over 10 runs" error bars).
pub fn estimate_power_runs(
    gen_p: &GeneratorSpec,
    gen_q: &GeneratorSpec,
    n: usize,
    cfg: &TestConfig,
    reps: usize,
    runs: usize,
    seed: u64,
) -> Result<RepeatedPower> {
    if runs == 0 {
        return Err(Error::InvalidConfig("runs must be positive".into()));
    }
    let mut all = Vec::with_capacity(runs);
    for r in 0..runs {
        all.push(estimate_power(
            gen_p,
            gen_q,
            n,
            cfg,
            reps,
            derive_seed(seed, stream::RUN, r as u64),
        )?);
    }
    let mean = all.iter().map(|p| p.power).sum::<f64>() / runs as f64;
    let var = all
        .iter()
        .map(|p| (p.power - mean) * (p.power - mean))
        .sum::<f64>()
        / runs as f64;
    Ok(RepeatedPower {
        mean,
        std_dev: var.sqrt(),
        runs: all,
    })
}

/// One power estimate per κ, all runs sharing the base seed so data draws
/// are paired across the grid.
pub fn kappa_sweep(
    gen_p: &GeneratorSpec,
    gen_q: &GeneratorSpec,
    n: usize,
    kappas: &[f64],
    cfg: &TestConfig,
    reps: usize,
    seed: u64,
) -> Result<Vec<(f64, PowerEstimate)>> {
    if kappas.is_empty() {
        return Err(Error::InvalidConfig("kappa grid is empty".into()));
    }
    for &k in kappas {
        crate::estimators::check_kappas(k, k)?;
    }
    let mut out = Vec::with_capacity(kappas.len());
    for &kappa in kappas {
        let cfg_k = cfg.clone().with_kappa(kappa);
        out.push((kappa, estimate_power(gen_p, gen_q, n, &cfg_k, reps, seed)?));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleSizeSearch {
    /// Smallest probed n whose estimated power met the target.
    pub n: usize,
    /// Every (n, power) probe in evaluation order.
    pub trace: Vec<(usize, f64)>,
}

/// Geometric expansion (25, 50, 100, ...) until the estimated power reaches
/// `target_power`, then bisection down to a resolution of 5 samples.
pub fn minimal_sample_size(
    gen_p: &GeneratorSpec,
    gen_q: &GeneratorSpec,
    cfg: &TestConfig,
    target_power: f64,
    reps: usize,
    seed: u64,
    n_max: usize,
) -> Result<SampleSizeSearch> {
    if !(target_power > 0.0 && target_power < 1.0) {
        return Err(Error::InvalidConfig(
            "target power must lie in (0, 1)".into(),
        ));
    }
    let mut trace: Vec<(usize, f64)> = Vec::new();
    let probe = |n: usize, trace: &mut Vec<(usize, f64)>| -> Result<f64> {
        let est = estimate_power(
            gen_p,
            gen_q,
            n,
            cfg,
            reps,
            derive_seed(seed, stream::PROBE, n as u64),
        )?;
        trace.push((n, est.power));
        Ok(est.power)
    };

    // geometric expansion; bisection happens between the last failing
    // probe and the first passing one, so a pass at the smallest probe
    // returns immediately
    let mut lo: Option<usize> = None;
    let mut hi = None;
    let mut n = 25usize;
    loop {
        if n > n_max {
            if lo.is_some_and(|l| l >= n_max) {
                break;
            }
            n = n_max;
        }
        let p = probe(n, &mut trace)?;
        if p >= target_power {
            hi = Some(n);
            break;
        }
        lo = Some(n);
        if n == n_max {
            break;
        }
        n *= 2;
    }
    let mut hi = match hi {
        Some(h) => h,
        None => {
            return Err(Error::TargetNotAchieved {
                target: target_power,
                n_max,
                trace,
            })
        }
    };
    let mut lo = match lo {
        Some(l) => l,
        None => return Ok(SampleSizeSearch { n: hi, trace }),
    };

    // bisection to resolution 5
    while hi.saturating_sub(lo) > 5 {
        let mid = (lo + hi) / 2;
        let p = probe(mid, &mut trace)?;
        if p >= target_power {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(SampleSizeSearch { n: hi, trace })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AreResult {
    /// Minimal sample size for the first-named test (T).
    pub n_t: usize,
    /// Minimal sample size for the second-named test (V).
    pub n_v: usize,
    /// n_v / n_t; values below 1 favor the second-named test.
    pub ratio: f64,
    pub target_power: f64,
    pub trace_t: Vec<(usize, f64)>,
    pub trace_v: Vec<(usize, f64)>,
}

/// Empirical relative efficiency e_{T,V} = N_V / N_T at a finite target
/// power: the ratio of minimal sample sizes the two tests need.
#[allow(clippy::too_many_arguments)]
pub fn are(
    gen_p: &GeneratorSpec,
    gen_q: &GeneratorSpec,
    cfg_t: &TestConfig,
    cfg_v: &TestConfig,
    target_power: f64,
    reps: usize,
    seed: u64,
    n_max: usize,
) -> Result<AreResult> {
    let search_t = minimal_sample_size(gen_p, gen_q, cfg_t, target_power, reps, seed, n_max)?;
    let search_v = minimal_sample_size(gen_p, gen_q, cfg_v, target_power, reps, seed, n_max)?;
    Ok(AreResult {
        n_t: search_t.n,
        n_v: search_v.n,
        ratio: search_v.n as f64 / search_t.n as f64,
        target_power,
        trace_t: search_t.trace,
        trace_v: search_v.trace,
    })
}
