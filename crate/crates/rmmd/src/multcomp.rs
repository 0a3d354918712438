//! Multiple-comparison orchestration: Dunn-Šidák correction, pairwise and
//! one-vs-all plans, and region-labeled false-discovery metrics.

use crate::rng::{derive_seed, stream};
use crate::testing::{run_test, TestConfig, TestOutcome};
use crate::{Error, Result, Sample};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Per-comparison significance level maintaining a familywise level of
/// `alpha_family` over `n_comparisons` independent comparisons:
/// ᾱ = 1 − (1 − α)^(1/n).
pub fn sidak(alpha_family: f64, n_comparisons: usize) -> Result<f64> {
    if !(alpha_family > 0.0 && alpha_family < 1.0) {
        return Err(Error::InvalidAlpha(alpha_family));
    }
    if n_comparisons == 0 {
        return Err(Error::InvalidPlan("need at least one comparison".into()));
    }
    Ok(1.0 - (1.0 - alpha_family).powf(1.0 / n_comparisons as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComparisonMode {
    Pairwise,
    OneVsAll,
}

impl std::str::FromStr for ComparisonMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pairwise" => Ok(ComparisonMode::Pairwise),
            "one-vs-all" => Ok(ComparisonMode::OneVsAll),
            other => Err(Error::InvalidPlan(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ComparisonPlan {
    pub mode: ComparisonMode,
    pub groups: Vec<(String, Sample)>,
    pub alpha_family: f64,
}

impl ComparisonPlan {
    pub fn new(
        mode: ComparisonMode,
        groups: Vec<(String, Sample)>,
        alpha_family: f64,
    ) -> Result<Self> {
        if groups.len() < 2 {
            return Err(Error::InvalidPlan("need at least two groups".into()));
        }
        let mut seen = BTreeSet::new();
        for (label, sample) in &groups {
            if !seen.insert(label.clone()) {
                return Err(Error::InvalidPlan(format!("duplicate label `{label}`")));
            }
            if sample.is_empty() {
                return Err(Error::InvalidPlan(format!("group `{label}` is empty")));
            }
        }
        if !(alpha_family > 0.0 && alpha_family < 1.0) {
            return Err(Error::InvalidAlpha(alpha_family));
        }
        Ok(ComparisonPlan {
            mode,
            groups,
            alpha_family,
        })
    }

    pub fn n_comparisons(&self) -> usize {
        let m = self.groups.len();
        match self.mode {
            ComparisonMode::Pairwise => m * (m - 1) / 2,
            ComparisonMode::OneVsAll => m,
        }
    }
}

/// One row of a multiple-comparison report. `label_b` is `rest` in
/// one-vs-all mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Comparison {
    pub label_a: String,
    pub label_b: String,
    pub outcome: TestOutcome,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiCompReport {
    pub alpha_family: f64,
    pub alpha_per_test: f64,
    pub comparisons: Vec<Comparison>,
    /// Labels of significant comparisons: `a|b` for pairwise, the focal
    /// group label for one-vs-all.
    pub rejected: BTreeSet<String>,
}

/// Run every comparison of the plan at the Šidák-corrected level.
///
/// Comparisons are ordered lexicographically by label, each receives a
/// deterministic sub-seed, and the report ordering does not depend on
/// completion order. In one-vs-all mode the rest group is the concatenation
/// of all other groups, subsampled down to the focal group's size.
pub fn run_plan(plan: &ComparisonPlan, cfg: &TestConfig) -> Result<MultiCompReport> {
    cfg.validate()?;
    let mut groups = plan.groups.clone();
    groups.sort_by(|a, b| a.0.cmp(&b.0));
    let alpha_per_test = sidak(plan.alpha_family, plan.n_comparisons())?;

    struct Job {
        label_a: String,
        label_b: String,
        key: String,
        x: Sample,
        y: Sample,
    }

    let mut jobs = Vec::new();
    match plan.mode {
        ComparisonMode::Pairwise => {
            for i in 0..groups.len() {
                for j in (i + 1)..groups.len() {
                    jobs.push(Job {
                        label_a: groups[i].0.clone(),
                        label_b: groups[j].0.clone(),
                        key: format!("{}|{}", groups[i].0, groups[j].0),
                        x: groups[i].1.clone(),
                        y: groups[j].1.clone(),
                    });
                }
            }
        }
        ComparisonMode::OneVsAll => {
            for i in 0..groups.len() {
                let focal = &groups[i];
                let mut rest: Option<Sample> = None;
                for (j, g) in groups.iter().enumerate() {
                    if j != i {
                        rest = Some(match rest {
                            None => g.1.clone(),
                            Some(r) => r.concat(&g.1)?,
                        });
                    }
                }
                let rest = rest.expect("at least two groups");
                let rest = if rest.len() > focal.1.len() {
                    rest.subsample(
                        focal.1.len(),
                        derive_seed(cfg.seed, stream::REST_GROUP, i as u64),
                    )?
                } else {
                    rest
                };
                jobs.push(Job {
                    label_a: focal.0.clone(),
                    label_b: "rest".to_string(),
                    key: focal.0.clone(),
                    x: focal.1.clone(),
                    y: rest,
                });
            }
        }
    }

    let comparisons: Vec<Comparison> = jobs
        .par_iter()
        .enumerate()
        .map(|(idx, job)| -> Result<Comparison> {
            let mut sub_cfg = cfg.clone();
            sub_cfg.alpha = alpha_per_test;
            sub_cfg.seed = derive_seed(cfg.seed, stream::COMPARISON, idx as u64);
            let outcome = run_test(&job.x, &job.y, &sub_cfg)?;
            Ok(Comparison {
                label_a: job.label_a.clone(),
                label_b: job.label_b.clone(),
                outcome,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let rejected = comparisons
        .iter()
        .zip(jobs.iter())
        .filter(|(c, _)| c.outcome.p_value < alpha_per_test)
        .map(|(_, j)| j.key.clone())
        .collect();

    Ok(MultiCompReport {
        alpha_family: plan.alpha_family,
        alpha_per_test,
        comparisons,
        rejected,
    })
}

/// Electrode-style region categories for false-discovery accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    A1,
    A2,
    A3,
    B,
}

impl std::str::FromStr for Region {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A1" => Ok(Region::A1),
            "A2" => Ok(Region::A2),
            "A3" => Ok(Region::A3),
            "B" => Ok(Region::B),
            other => Err(Error::InvalidPlan(format!("unknown region `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdrMetrics {
    /// Fraction of rejections in A2 ∪ A3 ∪ B.
    pub fdr0: f64,
    /// Fraction in A3 ∪ B.
    pub fdr1: f64,
    /// Fraction in B.
    pub fdr2: f64,
}

/// Region-weighted false-discovery fractions over the rejected set.
/// Returns `None` when the rejected set is empty (U = 0, undefined).
pub fn fdr_metrics(
    rejected: &BTreeSet<String>,
    regions: &BTreeMap<String, Region>,
) -> Result<Option<FdrMetrics>> {
    if rejected.is_empty() {
        return Ok(None);
    }
    let u = rejected.len() as f64;
    let mut c0 = 0.0;
    let mut c1 = 0.0;
    let mut c2 = 0.0;
    for label in rejected {
        let region = regions
            .get(label)
            .ok_or_else(|| Error::MissingRegion(label.clone()))?;
        match region {
            Region::A1 => {}
            Region::A2 => c0 += 1.0,
            Region::A3 => {
                c0 += 1.0;
                c1 += 1.0;
            }
            Region::B => {
                c0 += 1.0;
                c1 += 1.0;
                c2 += 1.0;
            }
        }
    }
    Ok(Some(FdrMetrics {
        fdr0: c0 / u,
        fdr1: c1 / u,
        fdr2: c2 / u,
    }))
}
