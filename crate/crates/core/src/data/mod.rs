//! Mutation records, positional keys and the binary occurrence matrix.

mod kfold;
mod matrix;
mod matrix_file;
mod profiles;
mod record;
pub mod synth;

pub use kfold::{kfold_split, KFoldPlan};
pub use matrix::{build_matrix, build_vocabulary, OccurrenceMatrix, Vocabulary};
pub use matrix_file::{read_matrix, write_matrix, MATRIX_FORMAT_VERSION, MATRIX_MAGIC};
pub use profiles::{
    parse_labels, parse_mutation_file, write_labels, write_mutation_file, ParseStats, Profile,
    SomaticProfileSet,
};
pub use record::{make_key, Chromosome, MutationKey, MutationRecord};

/// Default document-frequency threshold: keys seen in fewer samples are dropped.
pub const DEFAULT_MIN_FREQ: usize = 5;
