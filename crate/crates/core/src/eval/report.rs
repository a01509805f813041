use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Scores for one held-out fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cosine: Option<f64>,
}

/// Evaluation output. Absent metrics are omitted from the JSON.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recall: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cosine: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nmi_vae: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nmi_pca: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_fold: Vec<FoldMetrics>,
    /// Seed, fold count, dimensions and similar run facts.
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl MetricsReport {
    pub fn with_meta(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }

    /// Every F1/precision/recall/NMI must lie in [0, 1] and cosine in [-1, 1].
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let mut unit = |name: &str, v: Option<f64>| {
            if let Some(v) = v {
                if !(0.0..=1.0).contains(&v) {
                    bad.push(format!("{name} = {v} outside [0, 1]"));
                }
            }
        };
        unit("f1", self.f1);
        unit("precision", self.precision);
        unit("recall", self.recall);
        unit("nmi_vae", self.nmi_vae);
        unit("nmi_pca", self.nmi_pca);
        for f in &self.per_fold {
            unit("fold f1", Some(f.f1));
            unit("fold precision", Some(f.precision));
            unit("fold recall", Some(f.recall));
        }
        let cosines = self.cosine.into_iter().chain(self.per_fold.iter().filter_map(|f| f.cosine));
        for c in cosines {
            if !(-1.0..=1.0).contains(&c) {
                bad.push(format!("cosine = {c} outside [-1, 1]"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Format(bad.join("; ")))
        }
    }
}
