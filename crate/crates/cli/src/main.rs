use std::process::ExitCode;

use clap::{Parser, Subcommand};

use flatsomatic_cli::commands::*;

#[derive(Parser)]
#[command(name = "flatsomatic", version, about = "Latent representations of somatic mutation profiles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted-cluster mutation TSV and labels.
    Synth(SynthArgs),
    /// Filter keys by frequency and write the occurrence matrix.
    BuildMatrix(BuildMatrixArgs),
    /// Train a model and write its checkpoint and history.
    Train(TrainArgs),
    /// k-fold reconstruction scores, one model per fold.
    CrossValidate(CrossValidateArgs),
    /// Write posterior means for every sample.
    Embed(EmbedArgs),
    /// Score reconstruction of a trained model.
    EvalRecon(EvalReconArgs),
    /// Project the matrix onto its principal components.
    Pca(PcaArgs),
    /// k-means on embeddings and/or a PCA projection, scored by NMI.
    Cluster(ClusterArgs),
    /// Cross-validated logistic regression on embeddings or raw rows.
    Classify(ClassifyArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::BuildMatrix(a) => cmd_build_matrix(a),
        Command::Train(a) => cmd_train(a),
        Command::CrossValidate(a) => cmd_cross_validate(a),
        Command::Embed(a) => cmd_embed(a),
        Command::EvalRecon(a) => cmd_eval_recon(a),
        Command::Pca(a) => cmd_pca(a),
        Command::Cluster(a) => cmd_cluster(a),
        Command::Classify(a) => cmd_classify(a),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
