//! Kernel catalogue, bandwidth selection and Gram-matrix construction.
//!
//! All kernels here are stationary: k(x, x) is the same constant for every x.
//! The periodic kernels are 2π-periodic in each coordinate; data living on
//! [0, 1] is expected to be scaled by 2π before evaluation.

use crate::{Error, Result, Sample};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

/// Gaussian bandwidth: a fixed positive value, or the median-distance
/// sentinel resolved once per test invocation from the pooled data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Bandwidth {
    Median,
    Fixed(f64),
}

/// Kernel descriptor. Canonical string forms: `gaussian:median`,
/// `gaussian:1.5`, `pcosh`, `plog:0.9`, `pprod:0.9`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum KernelSpec {
    Gaussian { bandwidth: Bandwidth },
    PeriodicCosh,
    PeriodicLog { theta: f64 },
    ProductPeriodic { theta: f64 },
}

impl KernelSpec {
    pub fn gaussian_median() -> Self {
        KernelSpec::Gaussian {
            bandwidth: Bandwidth::Median,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Gaussian {
                bandwidth: Bandwidth::Fixed(s),
            } => {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(Error::InvalidKernelSpec(
                        self.to_string(),
                        "bandwidth must be a positive finite number".into(),
                    ));
                }
            }
            KernelSpec::PeriodicLog { theta } | KernelSpec::ProductPeriodic { theta } => {
                // at theta -> 1 the log kernel diverges at x = y
                if !(theta > 0.0 && theta < 1.0) {
                    return Err(Error::InvalidKernelSpec(
                        self.to_string(),
                        "theta must lie strictly inside (0, 1)".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Required input dimension, if the kernel constrains it.
    pub fn required_dim(&self) -> Option<usize> {
        match self {
            KernelSpec::Gaussian { .. } => None,
            KernelSpec::PeriodicCosh | KernelSpec::PeriodicLog { .. } => Some(1),
            KernelSpec::ProductPeriodic { .. } => Some(2),
        }
    }

    pub fn is_periodic(&self) -> bool {
        !matches!(self, KernelSpec::Gaussian { .. })
    }

    /// Resolve the `median` sentinel against pooled data. The resolved
    /// bandwidth is sigma = median distance / sqrt(2), i.e. the classic
    /// k(x,y) = exp(-||x-y||^2 / med^2) heuristic; it is then frozen for
    /// the rest of the invocation.
    pub fn resolve(&self, pooled: &Sample) -> Result<ResolvedKernel> {
        self.validate()?;
        if let Some(d) = self.required_dim() {
            if pooled.dim() != d {
                return Err(Error::KernelDimension {
                    kernel: self.to_string(),
                    required: d,
                    got: pooled.dim(),
                });
            }
        }
        let spec = match *self {
            KernelSpec::Gaussian {
                bandwidth: Bandwidth::Median,
            } => KernelSpec::Gaussian {
                bandwidth: Bandwidth::Fixed(median_heuristic(pooled)? / std::f64::consts::SQRT_2),
            },
            other => other,
        };
        Ok(ResolvedKernel { spec })
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Gaussian { bandwidth } => match bandwidth {
                Bandwidth::Median => write!(f, "gaussian:median"),
                Bandwidth::Fixed(s) => write!(f, "gaussian:{s}"),
            },
            KernelSpec::PeriodicCosh => write!(f, "pcosh"),
            KernelSpec::PeriodicLog { theta } => write!(f, "plog:{theta}"),
            KernelSpec::ProductPeriodic { theta } => write!(f, "pprod:{theta}"),
        }
    }
}

impl From<KernelSpec> for String {
    fn from(k: KernelSpec) -> String {
        k.to_string()
    }
}

impl TryFrom<String> for KernelSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidKernelSpec(s.to_string(), msg.to_string());
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let spec = match head {
            "gaussian" => {
                let arg = arg.ok_or_else(|| bad("expected `gaussian:median` or `gaussian:<sigma>`"))?;
                let bandwidth = if arg == "median" {
                    Bandwidth::Median
                } else {
                    Bandwidth::Fixed(
                        arg.parse::<f64>()
                            .map_err(|_| bad("bandwidth is not a number"))?,
                    )
                };
                KernelSpec::Gaussian { bandwidth }
            }
            "pcosh" => {
                if arg.is_some() {
                    return Err(bad("pcosh takes no parameter"));
                }
                KernelSpec::PeriodicCosh
            }
            "plog" => KernelSpec::PeriodicLog {
                theta: arg
                    .ok_or_else(|| bad("expected `plog:<theta>`"))?
                    .parse::<f64>()
                    .map_err(|_| bad("theta is not a number"))?,
            },
            "pprod" => KernelSpec::ProductPeriodic {
                theta: arg
                    .ok_or_else(|| bad("expected `pprod:<theta>`"))?
                    .parse::<f64>()
                    .map_err(|_| bad("theta is not a number"))?,
            },
            _ => return Err(bad("unknown kernel kind")),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// A kernel with any `median` sentinel replaced by a concrete bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedKernel {
    spec: KernelSpec,
}

impl ResolvedKernel {
    pub fn spec(&self) -> KernelSpec {
        self.spec
    }

    /// k(x, x), the same for every x (stationarity).
    pub fn k0(&self) -> f64 {
        match self.spec {
            KernelSpec::Gaussian { .. } => 1.0,
            KernelSpec::PeriodicCosh => PI.cosh(),
            KernelSpec::PeriodicLog { theta } => -(1.0 - 2.0 * theta + theta * theta).ln(),
            KernelSpec::ProductPeriodic { theta } => {
                let v = 1.0 / (1.0 - 2.0 * theta + theta * theta);
                v * v
            }
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch(x.len(), y.len()));
        }
        if let Some(d) = self.spec.required_dim() {
            if x.len() != d {
                return Err(Error::KernelDimension {
                    kernel: self.spec.to_string(),
                    required: d,
                    got: x.len(),
                });
            }
        }
        for (i, v) in x.iter().chain(y.iter()).enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteInput {
                    point: 0,
                    component: i % x.len().max(1),
                });
            }
        }
        Ok(self.eval_unchecked(x, y))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.spec {
            KernelSpec::Gaussian { bandwidth } => {
                let sigma = match bandwidth {
                    Bandwidth::Fixed(s) => s,
                    Bandwidth::Median => unreachable!("resolved kernel"),
                };
                let sq: f64 = x
                    .iter()
                    .zip(y.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (-sq / (2.0 * sigma * sigma)).exp()
            }
            KernelSpec::PeriodicCosh => {
                // evaluate on the ordered pair so symmetry is bit-exact
                let (lo, hi) = if x[0] <= y[0] { (x[0], y[0]) } else { (y[0], x[0]) };
                let r = (hi - lo).rem_euclid(2.0 * PI);
                (PI - r).cosh()
            }
            KernelSpec::PeriodicLog { theta } => {
                -(1.0 - 2.0 * theta * (x[0] - y[0]).cos() + theta * theta).ln()
            }
            KernelSpec::ProductPeriodic { theta } => {
                let t2 = theta * theta;
                let mut prod = 1.0;
                for d in 0..2 {
                    prod *= 1.0 / (1.0 - 2.0 * theta * (x[d] - y[d]).cos() + t2);
                }
                prod
            }
        }
    }
}

/// Evaluate a kernel with an already-numeric bandwidth. The `median`
/// sentinel must be resolved against pooled data first.
pub fn eval_kernel(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if matches!(
        spec,
        KernelSpec::Gaussian {
            bandwidth: Bandwidth::Median
        }
    ) {
        return Err(Error::UnresolvedBandwidth);
    }
    spec.validate()?;
    ResolvedKernel { spec: *spec }.eval(x, y)
}

/// Median of all pairwise Euclidean distances over distinct index pairs.
///
/// Errors when fewer than two points are given or when the median distance
/// is zero (a zero bandwidth would be invalid).
pub fn median_heuristic(pooled: &Sample) -> Result<f64> {
    let n = pooled.len();
    if n < 2 {
        return Err(Error::SampleTooSmall { needed: 2, got: n });
    }
    let mut dists: Vec<f64> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        let pi = pooled.point(i);
        for j in (i + 1)..n {
            let pj = pooled.point(j);
            let sq: f64 = pi
                .iter()
                .zip(pj.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            dists.push(sq.sqrt());
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = dists.len();
    let median = if m % 2 == 1 {
        dists[m / 2]
    } else {
        0.5 * (dists[m / 2 - 1] + dists[m / 2])
    };
    if median <= 0.0 {
        return Err(Error::ZeroMedianDistance);
    }
    Ok(median)
}

/// Dense matrix of pairwise kernel evaluations.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    entries: DMatrix<f64>,
    square: bool,
}

impl GramMatrix {
    #[cfg(test)]
    pub(crate) fn from_parts(entries: DMatrix<f64>, square: bool) -> Self {
        Self { entries, square }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// True when both samples coincide.
    pub fn is_square(&self) -> bool {
        self.square
    }

    /// Mean over all entries.
    pub fn mean(&self) -> f64 {
        self.entries.iter().sum::<f64>() / (self.nrows() * self.ncols()) as f64
    }

    /// Mean over off-diagonal entries; the U-statistic building block.
    pub fn offdiag_mean(&self) -> f64 {
        let n = self.nrows();
        let total: f64 = self.entries.iter().sum();
        let trace: f64 = (0..n.min(self.ncols())).map(|i| self.entries[(i, i)]).sum();
        (total - trace) / (n * (n - 1)) as f64
    }
}

/// All pairwise kernel evaluations of `a` against `b`.
///
/// `square` is set when `a` and `b` are the same sample (caller intent is
/// expressed by passing the same reference).
pub fn gram(kernel: &ResolvedKernel, a: &Sample, b: &Sample) -> Result<GramMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    if let Some(d) = kernel.spec.required_dim() {
        if a.dim() != d {
            return Err(Error::KernelDimension {
                kernel: kernel.spec.to_string(),
                required: d,
                got: a.dim(),
            });
        }
    }
    let square = std::ptr::eq(a, b) || a == b;
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return Err(Error::EmptySample);
    }
    // column-major fill, parallel over columns
    let mut data = vec![0.0f64; n * m];
    data.par_chunks_mut(n).enumerate().for_each(|(j, col)| {
        let bj = b.point(j);
        for (i, slot) in col.iter_mut().enumerate() {
            *slot = kernel.eval_unchecked(a.point(i), bj);
        }
    });
    Ok(GramMatrix {
        entries: DMatrix::from_vec(n, m, data),
        square,
    })
}
