use std::collections::BTreeMap;

use super::profiles::SomaticProfileSet;
use super::record::MutationKey;
use crate::kernel::Matrix;
use crate::{Error, Result};

/// Sorted, duplicate-free column keys with their document frequencies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    pub keys: Vec<MutationKey>,
    /// Number of distinct samples carrying each key, aligned with `keys`.
    pub doc_freq: Vec<usize>,
    /// Distinct keys dropped for falling below the threshold.
    pub removed: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

/// Keeps the keys carried by at least `min_freq` distinct samples.
pub fn build_vocabulary(profiles: &SomaticProfileSet, min_freq: usize) -> Result<Vocabulary> {
    if profiles.is_empty() {
        return Err(Error::Argument("no samples to build a vocabulary from".into()));
    }
    if min_freq == 0 {
        return Err(Error::Argument("min_freq must be positive".into()));
    }
    let mut counts: BTreeMap<&MutationKey, usize> = BTreeMap::new();
    for profile in profiles.samples() {
        for key in &profile.keys {
            *counts.entry(key).or_default() += 1;
        }
    }
    let total = counts.len();
    let (keys, doc_freq): (Vec<_>, Vec<_>) = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_freq)
        .map(|(k, c)| (k.clone(), c))
        .unzip();
    if keys.is_empty() {
        return Err(Error::EmptyVocabulary { min_freq });
    }
    Ok(Vocabulary {
        removed: total - keys.len(),
        keys,
        doc_freq,
    })
}

/// Binary sample × mutation matrix in compressed sparse row form.
///
/// Row `i` lists, in strictly increasing order, the columns `j` for which
/// sample `i` carries `vocabulary[j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccurrenceMatrix {
    vocabulary: Vec<MutationKey>,
    sample_ids: Vec<String>,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
}

impl OccurrenceMatrix {
    /// Assembles a matrix from per-row column lists, validating every invariant.
    pub fn from_rows(
        vocabulary: Vec<MutationKey>,
        sample_ids: Vec<String>,
        rows: Vec<Vec<u32>>,
    ) -> Result<Self> {
        if sample_ids.len() != rows.len() {
            return Err(Error::shape("occurrence rows", sample_ids.len(), rows.len()));
        }
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for row in rows {
            col_idx.extend(row);
            row_ptr.push(col_idx.len());
        }
        Self::from_csr(vocabulary, sample_ids, row_ptr, col_idx)
    }

    pub fn from_csr(
        vocabulary: Vec<MutationKey>,
        sample_ids: Vec<String>,
        row_ptr: Vec<usize>,
        col_idx: Vec<u32>,
    ) -> Result<Self> {
        let m = vocabulary.len();
        if vocabulary.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Format("vocabulary not strictly sorted".into()));
        }
        if row_ptr.len() != sample_ids.len() + 1
            || row_ptr.first() != Some(&0)
            || row_ptr.last() != Some(&col_idx.len())
            || row_ptr.windows(2).any(|w| w[0] > w[1])
        {
            return Err(Error::Format("inconsistent row pointers".into()));
        }
        for w in row_ptr.windows(2) {
            let row = &col_idx[w[0]..w[1]];
            if row.windows(2).any(|p| p[0] >= p[1]) || row.last().is_some_and(|&c| c as usize >= m) {
                return Err(Error::Format("row indices not increasing or out of range".into()));
            }
        }
        Ok(OccurrenceMatrix {
            vocabulary,
            sample_ids,
            row_ptr,
            col_idx,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn vocabulary(&self) -> &[MutationKey] {
        &self.vocabulary
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[u32] {
        &self.col_idx
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        (0..self.n_samples()).map(|i| self.row(i))
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.row(i).binary_search(&(j as u32)).is_ok()
    }

    /// Per-column popcounts.
    pub fn column_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_features()];
        for &c in &self.col_idx {
            counts[c as usize] += 1;
        }
        counts
    }

    /// New matrix with the given rows in the given order, same vocabulary.
    pub fn select_rows(&self, indices: &[usize]) -> OccurrenceMatrix {
        let mut row_ptr = Vec::with_capacity(indices.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut sample_ids = Vec::with_capacity(indices.len());
        for &i in indices {
            col_idx.extend_from_slice(self.row(i));
            row_ptr.push(col_idx.len());
            sample_ids.push(self.sample_ids[i].clone());
        }
        OccurrenceMatrix {
            vocabulary: self.vocabulary.clone(),
            sample_ids,
            row_ptr,
            col_idx,
        }
    }

    /// Dense 0/1 rows for the given sample indices.
    pub fn dense_rows(&self, indices: &[usize]) -> Matrix {
        let m = self.n_features();
        let mut out = Matrix::zeros(indices.len(), m);
        for (r, &i) in indices.iter().enumerate() {
            let row = out.row_mut(r);
            for &c in self.row(i) {
                row[c as usize] = 1.0;
            }
        }
        out
    }

    pub fn to_dense(&self) -> Matrix {
        let all: Vec<usize> = (0..self.n_samples()).collect();
        self.dense_rows(&all)
    }
}

/// Row `i` gets column `j` iff sample `i` carries `vocabulary[j]`; keys
/// outside the vocabulary are ignored.
pub fn build_matrix(profiles: &SomaticProfileSet, vocabulary: &[MutationKey]) -> Result<OccurrenceMatrix> {
    if vocabulary.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Argument("vocabulary must be sorted and duplicate-free".into()));
    }
    let rows = profiles
        .samples()
        .iter()
        .map(|p| {
            // Keys iterate in sorted order, so the columns come out increasing.
            p.keys
                .iter()
                .filter_map(|k| vocabulary.binary_search(k).ok())
                .map(|j| j as u32)
                .collect::<Vec<_>>()
        })
        .collect();
    let ids = profiles.sample_ids().map(str::to_string).collect();
    OccurrenceMatrix::from_rows(vocabulary.to_vec(), ids, rows)
}
