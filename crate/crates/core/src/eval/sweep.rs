use serde::{Deserialize, Serialize};

use super::matching::{hungarian_match, Match};
use super::{Counts, EvalError};

/// Predicted and gold component texts of one document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepDocument {
    pub predicted: Vec<String>,
    pub gold: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold: f64,
    /// Per-document F1 averaged over documents.
    pub mean_f1: f64,
    /// F1 over counts pooled across the corpus.
    pub micro_f1: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCurve {
    pub points: Vec<CurvePoint>,
}

impl ThresholdCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,mean_f1,micro_f1\n");
        for p in &self.points {
            out.push_str(&format!("{:.4},{:.6},{:.6}\n", p.threshold, p.mean_f1, p.micro_f1));
        }
        out
    }
}

/// Checks that thresholds lie in [0, 1] and strictly increase.
pub fn check_thresholds(thresholds: &[f64]) -> Result<(), EvalError> {
    if thresholds.is_empty() {
        return Err(EvalError::InvalidThresholds("no thresholds given".into()));
    }
    for (i, t) in thresholds.iter().enumerate() {
        if !(0.0..=1.0).contains(t) {
            return Err(EvalError::InvalidThresholds(format!("{t} is outside [0, 1]")));
        }
        if i > 0 && thresholds[i - 1] >= *t {
            return Err(EvalError::InvalidThresholds(format!(
                "thresholds must strictly increase ({} then {t})",
                thresholds[i - 1]
            )));
        }
    }
    Ok(())
}

/// `count` evenly spaced thresholds from 0 to 1 inclusive.
pub fn even_thresholds(count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

fn counts_at(doc: &SweepDocument, assignment: &[Match], threshold: f64) -> Counts {
    Counts {
        matched: assignment.iter().filter(|m| m.similarity >= threshold).count(),
        predicted: doc.predicted.len(),
        gold: doc.gold.len(),
    }
}

/// Mean F1 against the similarity threshold. Each document is aligned once by
/// Hungarian matching; a threshold only decides which assigned pairs count.
pub fn threshold_sweep(documents: &[SweepDocument], thresholds: &[f64]) -> Result<ThresholdCurve, EvalError> {
    check_thresholds(thresholds)?;
    let assignments: Vec<Vec<Match>> = documents.iter().map(|d| hungarian_match(&d.predicted, &d.gold)).collect();
    let points = thresholds
        .iter()
        .map(|&threshold| {
            let mut pooled = Counts::default();
            let mut f1_sum = 0.0;
            for (doc, assignment) in documents.iter().zip(&assignments) {
                let counts = counts_at(doc, assignment, threshold);
                f1_sum += counts.prf().f1;
                pooled = pooled + counts;
            }
            let mean_f1 = if documents.is_empty() { 1.0 } else { f1_sum / documents.len() as f64 };
            CurvePoint { threshold, mean_f1, micro_f1: pooled.prf().f1 }
        })
        .collect();
    Ok(ThresholdCurve { points })
}
