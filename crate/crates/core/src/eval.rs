//! F1 against multiple gold summaries, the frequency ORACLE, per-fold
//! reports and the paired t-test.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::dataset::{EntityDescription, GoldSummary};
use crate::error::{Error, Result};

/// Mean over gold summaries of the per-gold F1 of `summary`.
pub fn f1_against_golds(summary: &[usize], golds: &[GoldSummary]) -> Result<f64> {
    if summary.is_empty() {
        return Err(Error::EmptySummary);
    }
    if golds.is_empty() {
        return Err(Error::InvalidInput("no gold summaries to compare against".into()));
    }
    let s: BTreeSet<usize> = summary.iter().copied().collect();
    let total: f64 = golds
        .iter()
        .map(|g| {
            let hits = s.intersection(&g.triple_ids).count() as f64;
            if hits == 0.0 {
                return 0.0;
            }
            let p = hits / s.len() as f64;
            let r = hits / g.triple_ids.len() as f64;
            2.0 * p * r / (p + r)
        })
        .sum();
    Ok(total / golds.len() as f64)
}

/// The `k` triples that appear in the most gold summaries of slot `k`,
/// ties broken by ascending id, in rank order.
pub fn oracle_summary(desc: &EntityDescription, k: usize) -> Result<Vec<usize>> {
    let counts = desc.membership_counts(k)?;
    let mut ids: Vec<usize> = (0..counts.len()).collect();
    ids.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    ids.truncate(k);
    Ok(ids)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub dataset: String,
    pub k: usize,
    pub fold: Option<usize>,
    pub chosen_epoch: Option<usize>,
    pub per_entity_f1: Vec<(String, f64)>,
    pub mean_f1: f64,
}

impl EvalReport {
    pub fn new(
        dataset: impl Into<String>,
        k: usize,
        fold: Option<usize>,
        chosen_epoch: Option<usize>,
        per_entity_f1: Vec<(String, f64)>,
    ) -> Self {
        let mean_f1 = mean(per_entity_f1.iter().map(|(_, f)| *f));
        EvalReport {
            dataset: dataset.into(),
            k,
            fold,
            chosen_epoch,
            per_entity_f1,
            mean_f1,
        }
    }

    pub fn scores(&self) -> Vec<f64> {
        self.per_entity_f1.iter().map(|(_, f)| *f).collect()
    }

    pub fn write_tsv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "entity_iri\tf1")?;
        for (iri, f1) in &self.per_entity_f1 {
            writeln!(out, "{iri}\t{f1}")?;
        }
        Ok(())
    }

    /// `{dataset, k, fold, mean_f1, chosen_epoch}`.
    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            dataset: &'a str,
            k: usize,
            fold: Option<usize>,
            mean_f1: f64,
            chosen_epoch: Option<usize>,
        }
        serde_json::to_string_pretty(&Summary {
            dataset: &self.dataset,
            k: self.k,
            fold: self.fold,
            mean_f1: self.mean_f1,
            chosen_epoch: self.chosen_epoch,
        })
        .expect("report serializes")
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// ORACLE F1 for each of `entities` in order.
pub fn oracle_scores<'a>(entities: impl IntoIterator<Item = &'a EntityDescription>, k: usize) -> Result<Vec<(String, f64)>> {
    entities
        .into_iter()
        .map(|desc| {
            let summary = oracle_summary(desc, k)?;
            Ok((desc.iri().to_string(), f1_against_golds(&summary, desc.golds(k)?)?))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignificanceResult {
    pub t_statistic: f64,
    pub p_value: f64,
    pub n_pairs: usize,
}

impl fmt::Display for SignificanceResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t={:.4}, p={:.4e}, n={}", self.t_statistic, self.p_value, self.n_pairs)
    }
}

/// Two-tailed paired t-test on `a[i] - b[i]`.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<SignificanceResult> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidInput("a paired t-test needs at least two pairs".into()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();

    // rounding noise in equal differences must not masquerade as variance
    if sd <= 1e-12 * mean.abs() || sd == 0.0 {
        if mean == 0.0 {
            return Ok(SignificanceResult {
                t_statistic: 0.0,
                p_value: 1.0,
                n_pairs: n,
            });
        }
        return Err(Error::DegenerateVariance);
    }
    let t = mean / (sd / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("positive degrees of freedom");
    let p = (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0);
    Ok(SignificanceResult {
        t_statistic: t,
        p_value: p,
        n_pairs: n,
    })
}
