use crate::{Error, Result};
use rand::seq::index::sample as index_sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// An ordered collection of d-dimensional points drawn from one distribution.
///
/// Points are stored flat, row-major; every coordinate is finite by
/// construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    data: Vec<f64>,
    dim: usize,
}

impl Sample {
    pub fn new(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch(0, 1));
        }
        if data.len() % dim != 0 {
            return Err(Error::DimensionMismatch(data.len(), dim));
        }
        for (i, v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteInput {
                    point: i / dim,
                    component: i % dim,
                });
            }
        }
        Ok(Self { data, dim })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        if dim == 0 {
            return Err(Error::EmptySample);
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch(r.len(), dim));
            }
            data.extend_from_slice(r);
        }
        Self::new(data, dim)
    }

    /// 1-D convenience constructor.
    pub fn from_1d(values: Vec<f64>) -> Result<Self> {
        Self::new(values, 1)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Sample {
        Sample {
            data: self.data.iter().map(|v| v * factor).collect(),
            dim: self.dim,
        }
    }

    pub fn concat(&self, other: &Sample) -> Result<Sample> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Sample {
            data,
            dim: self.dim,
        })
    }

    /// Seeded subsample of `m` points without replacement, in original order.
    pub fn subsample(&self, m: usize, seed: u64) -> Result<Sample> {
        let n = self.len();
        if m > n {
            return Err(Error::SampleTooSmall { needed: m, got: n });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = index_sample(&mut rng, n, m).into_vec();
        idx.sort_unstable();
        let mut data = Vec::with_capacity(m * self.dim);
        for i in idx {
            data.extend_from_slice(self.point(i));
        }
        Ok(Sample {
            data,
            dim: self.dim,
        })
    }

    pub fn select(&self, indices: &[usize]) -> Sample {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.point(i));
        }
        Sample {
            data,
            dim: self.dim,
        }
    }
}
