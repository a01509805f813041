//! Planted-cluster profiles for desk-scale experiments.
//!
//! Each cluster owns a disjoint block of `signature_size` features. A sample
//! carries each feature of its own cluster's signature with probability
//! `p_in` and every other feature with probability `p_out`.

use std::collections::BTreeMap;

use rand::Rng;

use super::profiles::SomaticProfileSet;
use super::record::{Chromosome, MutationKey};
use crate::rng::{stream_rng, streams, substream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SynthParams {
    pub n_samples: usize,
    pub n_features: usize,
    pub n_clusters: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub signature_size: usize,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            n_samples: 2000,
            n_features: 5000,
            n_clusters: 8,
            p_in: 0.3,
            p_out: 0.005,
            signature_size: 200,
            seed: 1,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.n_samples == 0 || self.n_features == 0 || self.n_clusters == 0 {
            bad.push("n_samples, n_features and n_clusters must be positive".to_string());
        }
        if !(0.0..=1.0).contains(&self.p_in) || !(0.0..=1.0).contains(&self.p_out) {
            bad.push("probabilities must lie in [0, 1]".into());
        }
        if self.p_out > self.p_in {
            bad.push(format!("p_out ({}) must not exceed p_in ({})", self.p_out, self.p_in));
        }
        if self.signature_size.saturating_mul(self.n_clusters) > self.n_features {
            bad.push(format!(
                "signature_size * n_clusters ({} * {}) exceeds n_features ({})",
                self.signature_size, self.n_clusters, self.n_features
            ));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Argument(bad.join("; ")))
        }
    }

    /// Columns owned by cluster `c`.
    pub fn signature(&self, c: usize) -> std::ops::Range<usize> {
        c * self.signature_size..(c + 1) * self.signature_size
    }
}

/// Key used for synthetic feature `j`: chromosome 1, position `j`.
pub fn feature_key(j: usize) -> MutationKey {
    MutationKey::new(Chromosome::Autosome(1), j as u64)
}

pub fn sample_id(i: usize) -> String {
    format!("S{i:05}")
}

pub fn cluster_label(c: usize) -> String {
    format!("C{c}")
}

/// A labelled profile set plus the integer cluster of every sample.
#[derive(Debug, Clone)]
pub struct SynthData {
    pub profiles: SomaticProfileSet,
    pub clusters: Vec<usize>,
}

pub fn synth_generate(params: &SynthParams) -> Result<SynthData> {
    params.validate()?;
    let mut rng = stream_rng(params.seed, streams::SYNTH);
    let mut profiles = SomaticProfileSet::new();
    let mut clusters = Vec::with_capacity(params.n_samples);
    let mut labels = BTreeMap::new();
    for i in 0..params.n_samples {
        let id = sample_id(i);
        let c = rng.random_range(0..params.n_clusters);
        let signature = params.signature(c);
        profiles.add_sample(&id);
        for j in 0..params.n_features {
            let p = if signature.contains(&j) { params.p_in } else { params.p_out };
            if rng.random_bool(p) {
                profiles.insert(&id, feature_key(j));
            }
        }
        labels.insert(id, cluster_label(c));
        clusters.push(c);
    }
    profiles.set_labels(labels)?;
    Ok(SynthData { profiles, clusters })
}

/// Binary response labels planted on cluster membership: clusters with an
/// even index respond ("1"), odd ones do not ("0"); each label is flipped
/// independently with probability `flip`.
pub fn planted_response(clusters: &[usize], flip: f64, seed: u64) -> Vec<u8> {
    let mut rng = stream_rng(seed, substream(streams::SYNTH, 1));
    clusters
        .iter()
        .map(|&c| {
            let y = u8::from(c % 2 == 0);
            if rng.random_bool(flip) {
                1 - y
            } else {
                y
            }
        })
        .collect()
}
