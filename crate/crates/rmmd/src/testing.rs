//! Hypothesis-test runners: RMMD (asymptotic-normal and permutation nulls),
//! MMD (permutation), KFDA (permutation) and the classical two-sample
//! Kolmogorov-Smirnov test.
//!
//! All four tests reject in the upper tail. Permutation p-values use the
//! (1 + count)/(1 + B) estimator. Identical inputs and configuration
//! (including the seed) produce bit-identical outcomes, independent of the
//! number of worker threads.

use crate::estimators::{
    check_kappas, pair_kernel_table_from_gram, variance_estimate, Hypothesis, VarianceMode,
};
use crate::kernel::{gram, KernelSpec};
use crate::rng::{rng_from, stream};
use crate::{Error, Result, Sample};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rmmd,
    Mmd,
    Kfda,
    Ks,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::Rmmd => "rmmd",
            Method::Mmd => "mmd",
            Method::Kfda => "kfda",
            Method::Ks => "ks",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rmmd" => Ok(Method::Rmmd),
            "mmd" => Ok(Method::Mmd),
            "kfda" => Ok(Method::Kfda),
            "ks" => Ok(Method::Ks),
            other => Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NullMode {
    Normal,
    Permutation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestConfig {
    pub method: Method,
    /// Absent for the KS test.
    pub kernel: Option<KernelSpec>,
    pub kappa_p: f64,
    pub kappa_q: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub null_mode: NullMode,
    pub n_permutations: usize,
    pub seed: u64,
    /// When the normal-mode variance degenerates, fall back to the
    /// permutation null instead of erroring.
    pub fallback_on_degenerate: bool,
}

impl TestConfig {
    /// Paper-headline defaults: kappa = 1, gamma = 0.1, alpha = 0.05,
    /// gaussian:median kernel, normal null with permutation fallback.
    pub fn new(method: Method) -> Self {
        TestConfig {
            method,
            kernel: match method {
                Method::Ks => None,
                _ => Some(KernelSpec::gaussian_median()),
            },
            kappa_p: 1.0,
            kappa_q: 1.0,
            gamma: 0.1,
            alpha: 0.05,
            null_mode: match method {
                Method::Rmmd => NullMode::Normal,
                _ => NullMode::Permutation,
            },
            n_permutations: 1000,
            seed: 0,
            fallback_on_degenerate: true,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa_p = kappa;
        self.kappa_q = kappa;
        self
    }

    pub fn with_kernel(mut self, kernel: KernelSpec) -> Self {
        self.kernel = Some(kernel);
        self
    }

    pub fn with_null_mode(mut self, null_mode: NullMode) -> Self {
        self.null_mode = null_mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidAlpha(self.alpha));
        }
        check_kappas(self.kappa_p, self.kappa_q)?;
        if self.null_mode == NullMode::Normal && self.method != Method::Rmmd {
            return Err(Error::InvalidConfig(
                "the normal null is only available for the rmmd method".into(),
            ));
        }
        if self.method != Method::Ks && self.kernel.is_none() {
            return Err(Error::InvalidConfig(format!(
                "method `{}` requires a kernel",
                self.method
            )));
        }
        if self.method == Method::Kfda && !(self.gamma > 0.0) {
            return Err(Error::InvalidConfig("gamma must be positive".into()));
        }
        if self.null_mode == NullMode::Permutation && self.n_permutations == 0 {
            return Err(Error::InvalidConfig(
                "n_permutations must be positive".into(),
            ));
        }
        if let Some(k) = &self.kernel {
            k.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
    pub reject: bool,
    /// Center of the null model (normal mode), or the permutation-null mean.
    pub null_center: f64,
    /// Scale of the null model for the statistic (normal mode), or the
    /// permutation-null standard deviation.
    pub null_scale: f64,
    /// Pair count available to the statistic after any equalization.
    pub n_used: usize,
    /// The null mode that actually produced the p-value (differs from the
    /// configured mode after a degenerate-variance fallback).
    pub null_mode_used: NullMode,
    /// Kernel with the median sentinel resolved, when a kernel was used.
    pub resolved_kernel: Option<KernelSpec>,
    pub config: TestConfig,
}

/// Dispatch on the configured method.
pub fn run_test(x: &Sample, y: &Sample, cfg: &TestConfig) -> Result<TestOutcome> {
    cfg.validate()?;
    match cfg.method {
        Method::Rmmd => test_rmmd(x, y, cfg),
        Method::Mmd => test_mmd(x, y, cfg),
        Method::Kfda => test_kfda(x, y, cfg),
        Method::Ks => test_ks(x, y, cfg),
    }
}

fn require_nonempty(x: &Sample, y: &Sample) -> Result<()> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySample);
    }
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch(x.dim(), y.dim()));
    }
    Ok(())
}

/// Regularized-MMD test.
///
/// Normal mode: the unbiased RMMD statistic is compared against a normal
/// null centered at the plug-in penalty −κ_P‖μ̂_P‖² − κ_Q‖μ̂_Q‖², with scale
/// σ̂/√m where σ̂² is the first-order variance of the pair kernel h over the
/// observed pairing z_i = (x_i, y_i). Minimizing σ̂(κ) is what makes κ ≈ 1
/// optimal; the regularizer enters the test through this scale.
///
/// Permutation mode: the statistic is recomputed on seeded label shuffles of
/// the pooled data.
pub fn test_rmmd(x: &Sample, y: &Sample, cfg: &TestConfig) -> Result<TestOutcome> {
    cfg.validate()?;
    if cfg.method != Method::Rmmd {
        return Err(Error::InvalidConfig("config method is not rmmd".into()));
    }
    require_nonempty(x, y)?;
    match cfg.null_mode {
        NullMode::Normal => test_rmmd_normal(x, y, cfg),
        NullMode::Permutation => {
            permutation_test(x, y, cfg, PermStatistic::Rmmd).map(|mut o| {
                o.config = cfg.clone();
                o
            })
        }
    }
}

fn test_rmmd_normal(x: &Sample, y: &Sample, cfg: &TestConfig) -> Result<TestOutcome> {
    let (xs, ys) = crate::estimators::equalize(x, y, cfg.seed)?;
    let m = xs.len();
    if m < 2 {
        return Err(Error::SampleTooSmall { needed: 2, got: m });
    }
    let pooled = xs.concat(&ys)?;
    let kernel_spec = cfg.kernel.as_ref().expect("validated");
    let kernel = kernel_spec.resolve(&pooled)?;

    let kxx = gram(&kernel, &xs, &xs)?;
    let kyy = gram(&kernel, &ys, &ys)?;
    let kxy = gram(&kernel, &xs, &ys)?;
    let stats = crate::estimators::embedding_stats_from_gram(&kxx, &kyy, &kxy, false)?;
    let statistic = stats.rmmd(cfg.kappa_p, cfg.kappa_q);
    let center = -cfg.kappa_p * stats.norm_p_sq - cfg.kappa_q * stats.norm_q_sq;

    let table = pair_kernel_table_from_gram(&kxx, &kyy, &kxy, cfg.kappa_p, cfg.kappa_q)?;
    let var = variance_estimate(&table, Hypothesis::Alternative, VarianceMode::Zeta1);

    if var.sigma_sq <= 1e-14 {
        if cfg.fallback_on_degenerate {
            let mut out = permutation_test(x, y, cfg, PermStatistic::Rmmd)?;
            out.config = cfg.clone();
            return Ok(out);
        }
        return Err(Error::DegenerateVariance(var.sigma_sq));
    }

    let sigma = var.sigma_sq.sqrt();
    let scale = sigma / (m as f64).sqrt();
    let z = (statistic - center) / scale;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let p_value = 1.0 - normal.cdf(z);
    Ok(TestOutcome {
        statistic,
        p_value,
        reject: p_value < cfg.alpha,
        null_center: center,
        null_scale: scale,
        n_used: m,
        null_mode_used: NullMode::Normal,
        resolved_kernel: Some(kernel.spec()),
        config: cfg.clone(),
    })
}

/// MMD test with a permutation null.
pub fn test_mmd(x: &Sample, y: &Sample, cfg: &TestConfig) -> Result<TestOutcome> {
    cfg.validate()?;
    if cfg.method != Method::Mmd {
        return Err(Error::InvalidConfig("config method is not mmd".into()));
    }
    require_nonempty(x, y)?;
    permutation_test(x, y, cfg, PermStatistic::Mmd)
}

/// KFDA homogeneity test with a permutation null.
pub fn test_kfda(x: &Sample, y: &Sample, cfg: &TestConfig) -> Result<TestOutcome> {
    cfg.validate()?;
    if cfg.method != Method::Kfda {
        return Err(Error::InvalidConfig("config method is not kfda".into()));
    }
    require_nonempty(x, y)?;
    permutation_test(x, y, cfg, PermStatistic::Kfda)
}

#[derive(Clone, Copy, PartialEq)]
enum PermStatistic {
    Rmmd,
    Mmd,
    Kfda,
}

/// Pooled Gram summaries for O(m²)-per-shuffle statistic evaluation.
struct PooledGram {
    k: DMatrix<f64>,
    rowsums: Vec<f64>,
    diag: Vec<f64>,
    total: f64,
    trace: f64,
}

impl PooledGram {
    fn new(k: DMatrix<f64>) -> Self {
        let n = k.nrows();
        // the matrix is symmetric; column sums double as row sums
        let rowsums: Vec<f64> = (0..n).map(|i| k.column(i).iter().sum()).collect();
        let diag: Vec<f64> = (0..n).map(|i| k[(i, i)]).collect();
        let total = rowsums.iter().sum();
        let trace = diag.iter().sum();
        PooledGram {
            k,
            rowsums,
            diag,
            total,
            trace,
        }
    }

    /// Unbiased within/cross means for the split (S, complement), where S
    /// holds the first-sample indices.
    fn split_means(&self, s: &[usize], n1: usize, n2: usize) -> (f64, f64, f64) {
        let n = self.k.nrows();
        let data = self.k.as_slice();
        // sum over S x S including the diagonal
        let mut a_full = 0.0;
        let mut diag_s = 0.0;
        let mut lin = 0.0;
        for &i in s {
            let col = &data[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for &j in s {
                acc += col[j];
            }
            a_full += acc;
            diag_s += self.diag[i];
            lin += self.rowsums[i];
        }
        let b_full = self.total - 2.0 * lin + a_full;
        let diag_t = self.trace - diag_s;
        let cross = lin - a_full;
        let ax = (a_full - diag_s) / (n1 * (n1 - 1)) as f64;
        let ay = (b_full - diag_t) / (n2 * (n2 - 1)) as f64;
        let c = cross / (n1 * n2) as f64;
        (ax, ay, c)
    }
}

/// KFDA state reused across shuffles: G = (K/N + γI)⁻¹ and matvec caches.
/// Each shuffle costs O(N²) via a rank-2 Woodbury update of the class-mean
/// correction inside the pooled covariance.
struct KfdaState {
    g: DMatrix<f64>,
    kg_one: Vec<f64>,
    n: usize,
}

impl KfdaState {
    fn new(pooled: &PooledGram, gamma: f64) -> Result<Self> {
        let n = pooled.k.nrows();
        let mut m = pooled.k.clone() / (n as f64);
        for i in 0..n {
            m[(i, i)] += gamma;
        }
        let chol = m.cholesky().ok_or(Error::IllConditioned)?;
        let g = chol.inverse();
        let ones = DMatrix::from_element(n, 1, 1.0);
        let g_one_m = &g * &ones;
        let kg_one_m = &pooled.k * &g_one_m;
        Ok(KfdaState {
            g,
            kg_one: kg_one_m.column(0).iter().copied().collect(),
            n,
        })
    }

    fn statistic(&self, pooled: &PooledGram, s: &[usize], n1: usize, n2: usize) -> f64 {
        let n = self.n;
        let nf = n as f64;
        let gdata = self.g.as_slice();
        let kdata = pooled.k.as_slice();
        // column-subset sum of G over S, then one matvec with K
        let mut sg = vec![0.0f64; n];
        for &i in s {
            let col = &gdata[i * n..(i + 1) * n];
            for (slot, v) in sg.iter_mut().zip(col.iter()) {
                *slot += v;
            }
        }
        let mut skg = vec![0.0f64; n];
        for (j, &w) in sg.iter().enumerate() {
            let col = &kdata[j * n..(j + 1) * n];
            if w != 0.0 {
                for (slot, v) in skg.iter_mut().zip(col.iter()) {
                    *slot += w * v;
                }
            }
        }
        let inv1 = 1.0 / n1 as f64;
        let inv2 = 1.0 / n2 as f64;
        let kga: Vec<f64> = skg.iter().map(|v| v * inv1).collect();
        let kgb: Vec<f64> = skg
            .iter()
            .zip(self.kg_one.iter())
            .map(|(v, t)| (t - v) * inv2)
            .collect();

        let mut in_s = vec![false; n];
        for &i in s {
            in_s[i] = true;
        }
        // u^T v with u in {a, b}: mean of v over the class support
        let mean_over = |v: &[f64], want: bool, inv: f64| -> f64 {
            let mut acc = 0.0;
            for i in 0..n {
                if in_s[i] == want {
                    acc += v[i];
                }
            }
            acc * inv
        };
        let sa = (n1 as f64 / nf).sqrt();
        let sb = (n2 as f64 / nf).sqrt();
        // core = I2 - U^T K G U, with U = [sa*a, sb*b]
        let c11 = 1.0 - sa * sa * mean_over(&kga, true, inv1);
        let c12 = -sa * sb * mean_over(&kgb, true, inv1);
        let c21 = -sb * sa * mean_over(&kga, false, inv2);
        let c22 = 1.0 - sb * sb * mean_over(&kgb, false, inv2);
        let det = c11 * c22 - c12 * c21;

        // right-hand sides: U^T (K G d) and d^T (K G ...) terms
        let kgd: Vec<f64> = kga.iter().zip(kgb.iter()).map(|(a, b)| a - b).collect();
        let r1 = sa * mean_over(&kgd, true, inv1);
        let r2 = sb * mean_over(&kgd, false, inv2);
        // core^{-1} [r1, r2]
        let w1 = (c22 * r1 - c12 * r2) / det;
        let w2 = (-c21 * r1 + c11 * r2) / det;

        // d^T K G d
        let dkgd = mean_over(&kgd, true, inv1) - mean_over(&kgd, false, inv2);
        // d^T K G U = [sa * d^T(KGa), sb * d^T(KGb)]
        let dkga = mean_over(&kga, true, inv1) - mean_over(&kga, false, inv2);
        let dkgb = mean_over(&kgb, true, inv1) - mean_over(&kgb, false, inv2);
        let correction = sa * dkga * w1 + sb * dkgb * w2;

        (n1 as f64) * (n2 as f64) / nf * (dkgd + correction)
    }
}

/// Direct-solve KFDA statistic: T = (n1 n2 / N) dᵀ K (D K + γI)⁻¹ d with
/// D = I/N − (n1/N)aaᵀ − (n2/N)bbᵀ. O(N³) per call; the oracle for the
/// Woodbury route above.
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn kfda_statistic_direct(
    k: &DMatrix<f64>,
    s: &[usize],
    n1: usize,
    n2: usize,
    gamma: f64,
) -> Result<f64> {
    let n = k.nrows();
    let nf = n as f64;
    let mut a = vec![0.0f64; n];
    for &i in s {
        a[i] = 1.0 / n1 as f64;
    }
    let b: Vec<f64> = a
        .iter()
        .map(|&v| if v == 0.0 { 1.0 / n2 as f64 } else { 0.0 })
        .collect();
    let av = DMatrix::from_vec(n, 1, a.clone());
    let bv = DMatrix::from_vec(n, 1, b.clone());
    let mut d_mat = DMatrix::identity(n, n) / nf;
    d_mat -= (n1 as f64 / nf) * &av * av.transpose();
    d_mat -= (n2 as f64 / nf) * &bv * bv.transpose();
    let mut m = d_mat * k;
    for i in 0..n {
        m[(i, i)] += gamma;
    }
    let d: DMatrix<f64> = &av - &bv;
    let lu = m.lu();
    let v = lu.solve(&d).ok_or(Error::IllConditioned)?;
    let kd = k * v;
    let t = (n1 as f64) * (n2 as f64) / nf
        * d.column(0)
            .iter()
            .zip(kd.column(0).iter())
            .map(|(u, w)| u * w)
            .sum::<f64>();
    Ok(t)
}

/// Lexicographic order of the pooled points; makes permutation p-values
/// exactly invariant under swapping the two samples.
fn canonical_order(pooled: &Sample) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pooled.len()).collect();
    idx.sort_by(|&i, &j| {
        pooled
            .point(i)
            .partial_cmp(pooled.point(j))
            .expect("samples contain no NaN")
    });
    idx
}

fn permutation_test(
    x: &Sample,
    y: &Sample,
    cfg: &TestConfig,
    statistic: PermStatistic,
) -> Result<TestOutcome> {
    let (n1, n2) = (x.len(), y.len());
    let min_n = if statistic == PermStatistic::Kfda { 1 } else { 2 };
    if n1 < min_n || n2 < min_n {
        return Err(Error::SampleTooSmall {
            needed: min_n,
            got: n1.min(n2),
        });
    }
    let pooled_raw = x.concat(&y)?;
    let order = canonical_order(&pooled_raw);
    let pooled = pooled_raw.select(&order);
    // positions of the first sample's points inside the canonical order
    let s0: Vec<usize> = order
        .iter()
        .enumerate()
        .filter_map(|(pos, &orig)| (orig < n1).then_some(pos))
        .collect();

    let kernel = cfg.kernel.as_ref().expect("validated").resolve(&pooled)?;
    let gram_pooled = gram(&kernel, &pooled, &pooled)?;
    let pg = PooledGram::new(gram_pooled.entries().clone());

    let (kappa_p, kappa_q) = match statistic {
        PermStatistic::Rmmd => (cfg.kappa_p, cfg.kappa_q),
        _ => (0.0, 0.0),
    };

    let kfda_state = match statistic {
        PermStatistic::Kfda => Some(KfdaState::new(&pg, cfg.gamma)?),
        _ => None,
    };

    let eval_split = |s: &[usize]| -> f64 {
        match statistic {
            PermStatistic::Kfda => kfda_state
                .as_ref()
                .expect("state present")
                .statistic(&pg, s, n1, n2),
            _ => {
                let (ax, ay, c) = pg.split_means(s, n1, n2);
                (1.0 - kappa_p) * ax + (1.0 - kappa_q) * ay - 2.0 * c
            }
        }
    };

    let observed = eval_split(&s0);

    let b = cfg.n_permutations;
    let n = n1 + n2;
    // Each replicate draws the smaller role as a subset of the shuffled
    // pool; the complement takes the larger role. The draw then depends on
    // (seed, sizes) only as an unordered pair, which makes p-values exactly
    // invariant under swapping the two samples (for role-symmetric
    // statistics, i.e. kappa_p = kappa_q for rmmd).
    let m_small = n1.min(n2);
    let small_is_x = n1 <= n2;
    let perm_stats: Vec<f64> = (0..b)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from(cfg.seed, stream::PERMUTATION, r as u64);
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            let (small, rest) = idx.split_at(m_small);
            let mut s: Vec<usize> = if small_is_x { small.to_vec() } else { rest.to_vec() };
            s.sort_unstable();
            eval_split(&s)
        })
        .collect();

    let count = perm_stats.iter().filter(|&&v| v >= observed).count();
    let p_value = (1.0 + count as f64) / (1.0 + b as f64);
    let mean = perm_stats.iter().sum::<f64>() / b as f64;
    let sd = (perm_stats.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / b as f64).sqrt();

    Ok(TestOutcome {
        statistic: observed,
        p_value,
        reject: p_value < cfg.alpha,
        null_center: mean,
        null_scale: sd,
        n_used: n1.min(n2),
        null_mode_used: NullMode::Permutation,
        resolved_kernel: Some(kernel.spec()),
        config: cfg.clone(),
    })
}

/// Classical two-sample Kolmogorov-Smirnov test (1-D only).
pub fn test_ks(x: &Sample, y: &Sample, cfg: &TestConfig) -> Result<TestOutcome> {
    cfg.validate()?;
    if cfg.method != Method::Ks {
        return Err(Error::InvalidConfig("config method is not ks".into()));
    }
    require_nonempty(x, y)?;
    if x.dim() != 1 {
        return Err(Error::KsDimension(x.dim()));
    }
    let d = ks_statistic(x.as_slice(), y.as_slice());
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let ne = n1 * n2 / (n1 + n2);
    let lambda = ne.sqrt() * d;
    let p_value = kolmogorov_sf(lambda);
    Ok(TestOutcome {
        statistic: d,
        p_value,
        reject: p_value < cfg.alpha,
        null_center: 0.0,
        null_scale: 1.0 / ne.sqrt(),
        n_used: x.len().min(y.len()),
        null_mode_used: NullMode::Permutation,
        resolved_kernel: None,
        config: cfg.clone(),
    })
}

/// D = sup |F̂₁ − F̂₂| over the pooled jump points.
pub(crate) fn ks_statistic(xs: &[f64], ys: &[f64]) -> f64 {
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(|u, v| u.partial_cmp(v).unwrap());
    b.sort_by(|u, v| u.partial_cmp(v).unwrap());
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n1 - j as f64 / n2).abs());
    }
    d
}

/// Upper tail of the asymptotic Kolmogorov distribution:
/// Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} exp(−2 k² λ²).
pub(crate) fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.2 {
        // the series alternates too slowly to be useful; Q is 1 to within 1e-10
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Bandwidth;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn s1(values: &[f64]) -> Sample {
        Sample::from_1d(values.to_vec()).unwrap()
    }

    fn random_sample(n: usize, seed: u64, lo: f64, hi: f64) -> Sample {
        let mut rng = rng_from(seed, 0xAB, 0);
        s1(&(0..n).map(|_| rng.gen_range(lo..hi)).collect::<Vec<_>>())
    }

    #[test]
    fn outcomes_are_bit_identical_across_runs_and_threads() {
        let x = random_sample(30, 1, 0.0, 1.0);
        let y = random_sample(30, 2, 0.0, 1.2);
        let cfg = TestConfig::new(Method::Rmmd)
            .with_seed(42)
            .with_null_mode(NullMode::Permutation);
        let a = run_test(&x, &y, &cfg).unwrap();
        let b = run_test(&x, &y, &cfg).unwrap();
        assert_eq!(a.statistic.to_bits(), b.statistic.to_bits());
        assert_eq!(a.p_value.to_bits(), b.p_value.to_bits());
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool.install(|| run_test(&x, &y, &cfg).unwrap());
        assert_eq!(a.p_value.to_bits(), c.p_value.to_bits());
    }

    #[test]
    fn permutation_p_values_are_exchange_invariant() {
        let x = random_sample(17, 3, 0.0, 1.0);
        let y = random_sample(23, 4, 0.3, 1.3);
        for method in [Method::Rmmd, Method::Mmd, Method::Kfda, Method::Ks] {
            let mut cfg = TestConfig::new(method)
                .with_seed(7)
                .with_null_mode(NullMode::Permutation);
            cfg.n_permutations = 200;
            if method == Method::Rmmd {
                cfg = cfg.with_kappa(0.8);
            }
            let pxy = run_test(&x, &y, &cfg).unwrap().p_value;
            let pyx = run_test(&y, &x, &cfg).unwrap().p_value;
            assert_eq!(pxy.to_bits(), pyx.to_bits(), "method {method}");
        }
    }

    #[test]
    fn identical_samples_permutation_p_is_large() {
        let x = random_sample(20, 5, 0.0, 1.0);
        let mut cfg = TestConfig::new(Method::Rmmd)
            .with_seed(11)
            .with_null_mode(NullMode::Permutation);
        cfg.n_permutations = 99;
        let out = run_test(&x, &x.clone(), &cfg).unwrap();
        assert!(out.p_value >= 0.5, "p = {}", out.p_value);
        let cfg = TestConfig::new(Method::Mmd).with_seed(11);
        let out = run_test(&x, &x.clone(), &cfg).unwrap();
        assert!(out.p_value >= 0.5, "p = {}", out.p_value);
    }

    #[test]
    fn rmmd_at_kappa_zero_equals_mmd_in_permutation_mode() {
        let x = random_sample(25, 8, 0.0, 1.0);
        let y = random_sample(25, 9, 0.2, 1.2);
        let mut cfg_r = TestConfig::new(Method::Rmmd)
            .with_seed(5)
            .with_null_mode(NullMode::Permutation)
            .with_kappa(0.0);
        cfg_r.n_permutations = 300;
        let mut cfg_m = TestConfig::new(Method::Mmd).with_seed(5);
        cfg_m.n_permutations = 300;
        let a = run_test(&x, &y, &cfg_r).unwrap();
        let b = run_test(&x, &y, &cfg_m).unwrap();
        assert_eq!(a.statistic.to_bits(), b.statistic.to_bits());
        assert_eq!(a.p_value.to_bits(), b.p_value.to_bits());
    }

    #[test]
    fn ks_examples() {
        let cfg = TestConfig::new(Method::Ks).with_seed(1);
        let x = s1(&[1.0, 2.0, 3.0, 4.0]);
        let y = s1(&[5.0, 6.0, 7.0, 8.0]);
        let out = run_test(&x, &y, &cfg).unwrap();
        assert_relative_eq!(out.statistic, 1.0);
        let out = run_test(&x, &x.clone(), &cfg).unwrap();
        assert_relative_eq!(out.statistic, 0.0);
        assert_relative_eq!(out.p_value, 1.0);
        let x2 = Sample::from_rows(&[vec![0.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert!(matches!(
            run_test(&x2, &x2.clone(), &cfg),
            Err(Error::KsDimension(2))
        ));
    }

    #[test]
    fn kfda_zero_for_identical_samples() {
        let x = random_sample(12, 13, 0.0, 1.0);
        let mut cfg = TestConfig::new(Method::Kfda).with_seed(3);
        cfg.n_permutations = 50;
        let out = run_test(&x, &x.clone(), &cfg).unwrap();
        assert!(out.statistic.abs() < 1e-8, "stat = {}", out.statistic);
    }

    #[test]
    fn kfda_woodbury_matches_direct_solve() {
        let mut rng = rng_from(77, 0xCD, 0);
        for trial in 0..10 {
            let n1 = 6 + trial % 4;
            let n2 = 5 + trial % 3;
            let x = random_sample(n1, 100 + trial as u64, 0.0, 1.0);
            let y = random_sample(n2, 200 + trial as u64, 0.4, 1.5);
            let pooled = x.concat(&y).unwrap();
            let spec = KernelSpec::Gaussian {
                bandwidth: Bandwidth::Fixed(0.6),
            };
            let kernel = spec.resolve(&pooled).unwrap();
            let g = gram(&kernel, &pooled, &pooled).unwrap();
            let pg = PooledGram::new(g.entries().clone());
            let gamma = 0.1 + rng.gen_range(0.0..0.5);
            let state = KfdaState::new(&pg, gamma).unwrap();
            // a random split of the pooled indices
            let mut idx: Vec<usize> = (0..n1 + n2).collect();
            idx.shuffle(&mut rng);
            let mut s: Vec<usize> = idx[..n1].to_vec();
            s.sort_unstable();
            let fast = state.statistic(&pg, &s, n1, n2);
            let direct = kfda_statistic_direct(g.entries(), &s, n1, n2, gamma).unwrap();
            assert_relative_eq!(fast, direct, max_relative = 1e-9);
        }
    }

    #[test]
    fn kfda_large_gamma_limit_matches_scaled_biased_mmd() {
        // gamma -> inf: statistic -> (n1 n2 / N) * ||mu_P - mu_Q||_V^2 / gamma
        for trial in 0..20 {
            let n1 = 10 + trial % 5;
            let n2 = 8 + trial % 4;
            let x = random_sample(n1, 300 + trial as u64, 0.0, 1.0);
            let y = random_sample(n2, 400 + trial as u64, 0.5, 1.8);
            let pooled = x.concat(&y).unwrap();
            let spec = KernelSpec::Gaussian {
                bandwidth: Bandwidth::Fixed(0.8),
            };
            let kernel = spec.resolve(&pooled).unwrap();
            let g = gram(&kernel, &pooled, &pooled).unwrap();
            let gamma = 1e6;
            let s: Vec<usize> = (0..n1).collect();
            let t = kfda_statistic_direct(g.entries(), &s, n1, n2, gamma).unwrap();
            let stats = crate::estimators::embedding_stats(&kernel, &x, &y, true).unwrap();
            let expected = (n1 * n2) as f64 / (n1 + n2) as f64 * stats.mmd2() / gamma;
            assert_relative_eq!(t, expected, max_relative = 1e-4);
        }
    }

    #[test]
    fn degenerate_variance_falls_back_to_permutation() {
        // all points identical: every Gram entry equals k0 and the h-table
        // is constant, so the normal-mode variance is exactly zero
        let x = s1(&[0.5; 12]);
        let y = s1(&[0.5; 12]);
        let mut cfg = TestConfig::new(Method::Rmmd)
            .with_seed(2)
            .with_kernel(KernelSpec::Gaussian {
                bandwidth: Bandwidth::Fixed(1.0),
            });
        cfg.n_permutations = 50;
        let out = run_test(&x, &y, &cfg).unwrap();
        assert_eq!(out.null_mode_used, NullMode::Permutation);
        let mut strict = cfg.clone();
        strict.fallback_on_degenerate = false;
        assert!(matches!(
            run_test(&x, &y, &strict),
            Err(Error::DegenerateVariance(_))
        ));
    }

    #[test]
    fn normal_mode_outcome_fields_are_consistent() {
        let x = random_sample(40, 21, 0.0, 1.0);
        let y = random_sample(40, 22, 0.0, 1.0);
        let cfg = TestConfig::new(Method::Rmmd).with_seed(33);
        let out = run_test(&x, &y, &cfg).unwrap();
        assert!(out.p_value >= 0.0 && out.p_value <= 1.0);
        assert_eq!(out.reject, out.p_value < cfg.alpha);
        assert_eq!(out.n_used, 40);
        assert!(out.null_scale > 0.0);
        assert!(out.resolved_kernel.is_some());
    }

    #[test]
    fn unequal_sizes_equalize_in_normal_mode() {
        let x = random_sample(50, 31, 0.0, 1.0);
        let y = random_sample(30, 32, 0.0, 1.0);
        let cfg = TestConfig::new(Method::Rmmd).with_seed(44);
        let out = run_test(&x, &y, &cfg).unwrap();
        assert_eq!(out.n_used, 30);
    }

    #[test]
    fn kolmogorov_tail_values() {
        // reference values of the Kolmogorov survival function
        assert_relative_eq!(kolmogorov_sf(0.5), 0.9639, epsilon = 1e-3);
        assert_relative_eq!(kolmogorov_sf(1.0), 0.2700, epsilon = 1e-3);
        assert_relative_eq!(kolmogorov_sf(1.36), 0.0490, epsilon = 1e-3);
        assert!(kolmogorov_sf(3.0) < 1e-7);
    }
}
