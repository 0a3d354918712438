//! Mean-embedding statistics: squared-norm estimators, MMD², RMMD, the h/h′
//! pair kernels, variance estimators and the Rényi-entropy estimate.
//!
//! Biased estimators are V-statistics (diagonal included), unbiased ones are
//! U-statistics (within-sample diagonals excluded; the cross term averages
//! over all index pairs).

use crate::kernel::{gram, GramMatrix, ResolvedKernel};
use crate::rng::{derive_seed, stream};
use crate::{Error, Result, Sample};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Squared-norm and cross-inner-product estimates of the two mean embeddings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EmbeddingStats {
    pub norm_p_sq: f64,
    pub norm_q_sq: f64,
    pub cross: f64,
    pub n1: usize,
    pub n2: usize,
    pub biased: bool,
}

impl EmbeddingStats {
    pub fn mmd2(&self) -> f64 {
        self.norm_p_sq + self.norm_q_sq - 2.0 * self.cross
    }

    pub fn rmmd(&self, kappa_p: f64, kappa_q: f64) -> f64 {
        self.mmd2() - kappa_p * self.norm_p_sq - kappa_q * self.norm_q_sq
    }
}

fn norm_sq_from_gram(k: &GramMatrix, biased: bool) -> Result<f64> {
    let n = k.nrows();
    if biased {
        if n < 1 {
            return Err(Error::SampleTooSmall { needed: 1, got: n });
        }
        Ok(k.mean())
    } else {
        if n < 2 {
            return Err(Error::SampleTooSmall { needed: 2, got: n });
        }
        Ok(k.offdiag_mean())
    }
}

/// Embedding statistics from precomputed Gram blocks. The cross block is
/// averaged over all index pairs in both modes.
pub fn embedding_stats_from_gram(
    kxx: &GramMatrix,
    kyy: &GramMatrix,
    kxy: &GramMatrix,
    biased: bool,
) -> Result<EmbeddingStats> {
    Ok(EmbeddingStats {
        norm_p_sq: norm_sq_from_gram(kxx, biased)?,
        norm_q_sq: norm_sq_from_gram(kyy, biased)?,
        cross: kxy.mean(),
        n1: kxx.nrows(),
        n2: kyy.nrows(),
        biased,
    })
}

pub fn embedding_stats(
    kernel: &ResolvedKernel,
    x: &Sample,
    y: &Sample,
    biased: bool,
) -> Result<EmbeddingStats> {
    let kxx = gram(kernel, x, x)?;
    let kyy = gram(kernel, y, y)?;
    let kxy = gram(kernel, x, y)?;
    embedding_stats_from_gram(&kxx, &kyy, &kxy, biased)
}

/// Squared maximum mean discrepancy between the empirical embeddings.
pub fn mmd2(kernel: &ResolvedKernel, x: &Sample, y: &Sample, biased: bool) -> Result<f64> {
    let stats = embedding_stats(kernel, x, y, biased)?;
    if biased {
        // squared norm of an explicit vector; clip round-off
        Ok(stats.mmd2().max(0.0))
    } else {
        Ok(stats.mmd2())
    }
}

/// Regularized MMD: MMD² − κ_P‖μ̂_P‖² − κ_Q‖μ̂_Q‖², all terms in the same
/// biased/unbiased mode. Negative regularization constants are rejected.
pub fn rmmd(
    kernel: &ResolvedKernel,
    x: &Sample,
    y: &Sample,
    kappa_p: f64,
    kappa_q: f64,
    biased: bool,
) -> Result<f64> {
    check_kappas(kappa_p, kappa_q)?;
    let stats = embedding_stats(kernel, x, y, biased)?;
    Ok(stats.rmmd(kappa_p, kappa_q))
}

pub(crate) fn check_kappas(kappa_p: f64, kappa_q: f64) -> Result<()> {
    if kappa_p < 0.0 || kappa_q < 0.0 || !kappa_p.is_finite() || !kappa_q.is_finite() {
        return Err(Error::NegativeKappa(kappa_p, kappa_q));
    }
    Ok(())
}

/// −log of the biased squared-norm estimate; the Parzen-window estimate of
/// the Rényi entropy.
pub fn renyi_entropy_estimate(kernel: &ResolvedKernel, x: &Sample) -> Result<f64> {
    let kxx = gram(kernel, x, x)?;
    let norm = norm_sq_from_gram(&kxx, true)?;
    if norm <= 0.0 {
        return Err(Error::NonPositiveNorm(norm));
    }
    Ok(-norm.ln())
}

/// The paired kernels of the asymptotic-normality theorem, tabulated over
/// all pairs (z_i, z_j) with z_i = (x_i, y_i).
///
/// h(z_i,z_j) = k(x_i,x_j) + k(y_i,y_j) − k(x_i,y_j) − k(x_j,y_i) − h′(z_i,z_j)
/// h′(z_i,z_j) = κ_P k(x_i,x_j) + κ_Q k(y_i,y_j)
///
/// Diagonal entries are stored as zero and excluded from every statistic.
#[derive(Debug, Clone)]
pub struct PairKernelTable {
    h: DMatrix<f64>,
    hprime: DMatrix<f64>,
    pub kappa_p: f64,
    pub kappa_q: f64,
    pub m: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    /// P = Q; the variance of h′ drives the null fluctuations.
    Null,
    /// P ≠ Q; the variance of h drives the fluctuations.
    Alternative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarianceMode {
    /// 4·(E[g²] − E²[g]) over off-diagonal pairs.
    Paper,
    /// 4·Var_i(row means of g): the first-order U-statistic component.
    Zeta1,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub sigma_sq: f64,
    pub mode: VarianceMode,
    pub hypothesis: Hypothesis,
}

impl PairKernelTable {
    pub fn h(&self, i: usize, j: usize) -> f64 {
        self.h[(i, j)]
    }

    pub fn hprime(&self, i: usize, j: usize) -> f64 {
        self.hprime[(i, j)]
    }

    fn table(&self, hypothesis: Hypothesis) -> &DMatrix<f64> {
        match hypothesis {
            Hypothesis::Null => &self.hprime,
            Hypothesis::Alternative => &self.h,
        }
    }

    /// Mean of the selected pair kernel over off-diagonal pairs.
    pub fn mean(&self, hypothesis: Hypothesis) -> f64 {
        let t = self.table(hypothesis);
        t.iter().sum::<f64>() / (self.m * (self.m - 1)) as f64
    }
}

/// Build the pair-kernel tables. Requires equal sample sizes; use
/// [`equalize`] first when n1 ≠ n2.
pub fn pair_kernel_table(
    kernel: &ResolvedKernel,
    x: &Sample,
    y: &Sample,
    kappa_p: f64,
    kappa_q: f64,
) -> Result<PairKernelTable> {
    check_kappas(kappa_p, kappa_q)?;
    if x.len() != y.len() {
        return Err(Error::UnequalSamples(x.len(), y.len()));
    }
    let kxx = gram(kernel, x, x)?;
    let kyy = gram(kernel, y, y)?;
    let kxy = gram(kernel, x, y)?;
    pair_kernel_table_from_gram(&kxx, &kyy, &kxy, kappa_p, kappa_q)
}

/// Same as [`pair_kernel_table`], from precomputed Gram blocks.
pub fn pair_kernel_table_from_gram(
    kxx: &GramMatrix,
    kyy: &GramMatrix,
    kxy: &GramMatrix,
    kappa_p: f64,
    kappa_q: f64,
) -> Result<PairKernelTable> {
    check_kappas(kappa_p, kappa_q)?;
    let m = kxx.nrows();
    if m < 2 {
        return Err(Error::SampleTooSmall { needed: 2, got: m });
    }
    if kyy.nrows() != m || kxy.nrows() != m || kxy.ncols() != m {
        return Err(Error::UnequalSamples(m, kyy.nrows()));
    }
    let mut h = DMatrix::zeros(m, m);
    let mut hp = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let a = kxx.get(i, j) + kyy.get(i, j);
            let b = kxy.get(i, j) + kxy.get(j, i);
            let hpij = kappa_p * kxx.get(i, j) + kappa_q * kyy.get(i, j);
            hp[(i, j)] = hpij;
            h[(i, j)] = a - b - hpij;
        }
    }
    Ok(PairKernelTable {
        h,
        hprime: hp,
        kappa_p,
        kappa_q,
        m,
    })
}

/// Variance of the limiting normal distribution, estimated from the pair
/// table. Tiny negative round-off is clipped to zero.
pub fn variance_estimate(
    table: &PairKernelTable,
    hypothesis: Hypothesis,
    mode: VarianceMode,
) -> VarianceEstimate {
    let t = table.table(hypothesis);
    let m = table.m;
    let sigma_sq = match mode {
        VarianceMode::Paper => {
            let cnt = (m * (m - 1)) as f64;
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for i in 0..m {
                for j in 0..m {
                    if i != j {
                        let v = t[(i, j)];
                        sum += v;
                        sumsq += v * v;
                    }
                }
            }
            let mean = sum / cnt;
            4.0 * (sumsq / cnt - mean * mean)
        }
        VarianceMode::Zeta1 => {
            let mut rows = Vec::with_capacity(m);
            for i in 0..m {
                let mut s = 0.0;
                for j in 0..m {
                    if i != j {
                        s += t[(i, j)];
                    }
                }
                rows.push(s / (m - 1) as f64);
            }
            let mean = rows.iter().sum::<f64>() / m as f64;
            let var = rows.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / m as f64;
            4.0 * var
        }
    };
    VarianceEstimate {
        sigma_sq: sigma_sq.max(0.0),
        mode,
        hypothesis,
    }
}

/// Subsample the larger of the two samples without replacement down to
/// m = min(n1, n2), using the run's seed. Used wherever the theory pairs
/// z_i = (x_i, y_i).
pub fn equalize(x: &Sample, y: &Sample, seed: u64) -> Result<(Sample, Sample)> {
    let m = x.len().min(y.len());
    if m == 0 {
        return Err(Error::EmptySample);
    }
    let xs = if x.len() > m {
        x.subsample(m, derive_seed(seed, stream::EQUALIZE, 0))?
    } else {
        x.clone()
    };
    let ys = if y.len() > m {
        y.subsample(m, derive_seed(seed, stream::EQUALIZE, 1))?
    } else {
        y.clone()
    };
    Ok((xs, ys))
}
