use std::collections::HashMap;
use std::hash::Hash;

use crate::{Error, Result};

/// Shannon entropy (natural log) of a labelling.
fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information `2·I(A;B) / (H(A) + H(B))`, natural logs.
///
/// Two constant labellings score 1; exactly one constant labelling scores 0.
pub fn nmi<A: Hash + Eq, B: Hash + Eq>(labels_a: &[A], labels_b: &[B]) -> Result<f64> {
    if labels_a.len() != labels_b.len() {
        return Err(Error::shape("nmi labellings", labels_a.len(), labels_b.len()));
    }
    if labels_a.is_empty() {
        return Err(Error::Argument("nmi of empty labellings".into()));
    }
    let n = labels_a.len() as f64;
    let (ia, ib) = (index_of(labels_a), index_of(labels_b));
    let ka = ia.iter().max().map_or(0, |m| m + 1);
    let kb = ib.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![0usize; ka * kb];
    let (mut ca, mut cb) = (vec![0usize; ka], vec![0usize; kb]);
    for (&a, &b) in ia.iter().zip(&ib) {
        table[a * kb + b] += 1;
        ca[a] += 1;
        cb[b] += 1;
    }
    let ha = entropy(ca.iter().copied(), n);
    let hb = entropy(cb.iter().copied(), n);
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }
    if ha == 0.0 || hb == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for a in 0..ka {
        for b in 0..kb {
            let c = table[a * kb + b];
            if c > 0 {
                let pab = c as f64 / n;
                mi += pab * (c as f64 * n / (ca[a] as f64 * cb[b] as f64)).ln();
            }
        }
    }
    Ok((2.0 * mi / (ha + hb)).clamp(0.0, 1.0))
}

/// Maps labels to 0.. in order of first appearance.
fn index_of<T: Hash + Eq>(labels: &[T]) -> Vec<usize> {
    let mut ids: HashMap<&T, usize> = HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = ids.len();
            *ids.entry(l).or_insert(next)
        })
        .collect()
}
