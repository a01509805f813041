use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use super::record::{make_key, Chromosome, MutationKey, MutationRecord};
use crate::{Error, Result};

/// One sample's mutation key set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Profile {
    pub sample_id: String,
    pub keys: BTreeSet<MutationKey>,
}

/// Samples in first-seen order, plus optional class labels.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SomaticProfileSet {
    samples: Vec<Profile>,
    index: HashMap<String, usize>,
    labels: Option<BTreeMap<String, String>>,
}

/// Counters reported while parsing a mutation file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseStats {
    pub records: usize,
    /// (sample, key) pairs seen more than once and collapsed.
    pub duplicates: usize,
}

impl SomaticProfileSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn samples(&self) -> &[Profile] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Option<&BTreeMap<String, String>> {
        self.labels.as_ref()
    }

    pub fn sample_ids(&self) -> impl Iterator<Item = &str> {
        self.samples.iter().map(|p| p.sample_id.as_str())
    }

    /// Ensures a (possibly empty) profile exists for `sample_id`.
    pub fn add_sample(&mut self, sample_id: &str) -> usize {
        if let Some(&i) = self.index.get(sample_id) {
            return i;
        }
        let i = self.samples.len();
        self.samples.push(Profile {
            sample_id: sample_id.to_string(),
            keys: BTreeSet::new(),
        });
        self.index.insert(sample_id.to_string(), i);
        i
    }

    /// Returns false when the key was already present for the sample.
    pub fn insert(&mut self, sample_id: &str, key: MutationKey) -> bool {
        let i = self.add_sample(sample_id);
        self.samples[i].keys.insert(key)
    }

    /// Appends another set; samples present in both have their keys united.
    pub fn merge(&mut self, other: SomaticProfileSet) -> Result<()> {
        for profile in other.samples {
            let i = self.add_sample(&profile.sample_id);
            self.samples[i].keys.extend(profile.keys);
        }
        if let Some(labels) = other.labels {
            let mut merged = self.labels.take().unwrap_or_default();
            merged.extend(labels);
            self.set_labels(merged)?;
        }
        Ok(())
    }

    /// Attaches labels; every labeled id must name a sample.
    pub fn set_labels(&mut self, labels: BTreeMap<String, String>) -> Result<()> {
        if let Some(missing) = labels.keys().find(|id| !self.index.contains_key(*id)) {
            return Err(Error::Argument(format!(
                "label given for unknown sample {missing:?}"
            )));
        }
        self.labels = Some(labels);
        Ok(())
    }
}

fn split_fields(line: &str) -> Vec<&str> {
    line.trim_end_matches(['\r', '\n']).split('\t').collect()
}

fn is_skipped(line: &str) -> bool {
    line.starts_with('#') || line.trim().is_empty()
}

fn column(header: &[&str], name: &str) -> Option<usize> {
    header.iter().position(|h| h.trim().eq_ignore_ascii_case(name))
}

/// Parses a tab-separated mutation file.
///
/// Required header columns are `sample_id`, `chromosome` and `position`; an
/// optional `vaf` column is validated. Other columns are ignored, as are
/// blank lines and lines starting with `#`. Line numbers in errors are
/// 1-based and count every physical line.
pub fn parse_mutation_file<R: BufRead>(reader: R) -> Result<(SomaticProfileSet, ParseStats)> {
    let mut set = SomaticProfileSet::new();
    let mut stats = ParseStats::default();
    let mut cols: Option<(usize, usize, usize, Option<usize>)> = None;

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        if is_skipped(&line) {
            continue;
        }
        let fields = split_fields(&line);
        let Some((c_sample, c_chrom, c_pos, c_vaf)) = cols else {
            let need = |name: &str| {
                column(&fields, name)
                    .ok_or_else(|| Error::Format(format!("missing required column {name:?}")))
            };
            cols = Some((
                need("sample_id")?,
                need("chromosome")?,
                need("position")?,
                column(&fields, "vaf"),
            ));
            continue;
        };
        let record = parse_record(&fields, lineno, c_sample, c_chrom, c_pos, c_vaf)?;
        stats.records += 1;
        if !set.insert(&record.sample_id, make_key(&record)) {
            stats.duplicates += 1;
        }
    }
    if cols.is_none() {
        return Err(Error::Format("missing header line".into()));
    }
    Ok((set, stats))
}

fn parse_record(
    fields: &[&str],
    line: usize,
    c_sample: usize,
    c_chrom: usize,
    c_pos: usize,
    c_vaf: Option<usize>,
) -> Result<MutationRecord> {
    let err = |message: String| Error::Parse { line, message };
    let field = |c: usize, name: &str| {
        fields
            .get(c)
            .map(|s| s.trim())
            .ok_or_else(|| err(format!("missing {name} field")))
    };
    let sample_id = field(c_sample, "sample_id")?;
    if sample_id.is_empty() {
        return Err(err("empty sample_id".into()));
    }
    let chrom_token = field(c_chrom, "chromosome")?;
    let chromosome = Chromosome::parse(chrom_token)
        .ok_or_else(|| err(format!("unknown chromosome {chrom_token:?}")))?;
    let pos_token = field(c_pos, "position")?;
    let position = pos_token
        .parse::<u64>()
        .map_err(|_| err(format!("position {pos_token:?} is not a non-negative integer")))?;
    let vaf = match c_vaf.and_then(|c| fields.get(c)).map(|s| s.trim()) {
        None | Some("") | Some(".") | Some("NA") => None,
        Some(token) => {
            let v = token
                .parse::<f64>()
                .map_err(|_| err(format!("vaf {token:?} is not a number")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(err(format!("vaf {v} outside [0, 1]")));
            }
            Some(v)
        }
    };
    Ok(MutationRecord {
        sample_id: sample_id.to_string(),
        chromosome,
        position,
        vaf,
    })
}

/// Writes one line per (sample, key). Samples without keys cannot be
/// represented in this format and are omitted.
pub fn write_mutation_file<W: Write>(set: &SomaticProfileSet, mut out: W) -> std::io::Result<()> {
    writeln!(out, "sample_id\tchromosome\tposition")?;
    for profile in set.samples() {
        for key in &profile.keys {
            let (c, p) = key.parts();
            writeln!(out, "{}\t{c}\t{p}", profile.sample_id)?;
        }
    }
    out.flush()
}

/// Parses a `sample_id<TAB>label` file with a header line.
pub fn parse_labels<R: BufRead>(reader: R) -> Result<BTreeMap<String, String>> {
    let mut labels = BTreeMap::new();
    let mut cols = None;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if is_skipped(&line) {
            continue;
        }
        let fields = split_fields(&line);
        let Some((c_id, c_label)) = cols else {
            let need = |name: &str| {
                column(&fields, name)
                    .ok_or_else(|| Error::Format(format!("labels: missing column {name:?}")))
            };
            cols = Some((need("sample_id")?, need("label")?));
            continue;
        };
        let (Some(id), Some(label)) = (fields.get(c_id), fields.get(c_label)) else {
            return Err(Error::Parse {
                line: line_no,
                message: "expected sample_id and label fields".into(),
            });
        };
        let (id, label) = (id.trim(), label.trim());
        if let Some(prev) = labels.insert(id.to_string(), label.to_string()) {
            if prev != label {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("conflicting labels for sample {id:?}"),
                });
            }
        }
    }
    if cols.is_none() {
        return Err(Error::Format("labels: missing header line".into()));
    }
    Ok(labels)
}

pub fn write_labels<'a, W, I>(labels: I, mut out: W) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    writeln!(out, "sample_id\tlabel")?;
    for (id, label) in labels {
        writeln!(out, "{id}\t{label}")?;
    }
    out.flush()
}
