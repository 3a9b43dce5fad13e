use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use noteval_core::analysis::{ensemble, EnsembleConfig, SigmaMode};
use noteval_core::data::{load_score_table, write_score_column};

use crate::output::write_file;
use crate::{config_bail, ConfigError, Outcome};

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    /// Wide score table (`pair_id,<metric>...`).
    #[arg(long)]
    pub scores: PathBuf,
    /// mist-comb1 or mist-comb2.
    #[arg(long, conflicts_with = "members")]
    pub preset: Option<String>,
    /// Comma-separated member columns for a custom ensemble.
    #[arg(long, value_delimiter = ',', requires = "name")]
    pub members: Vec<String>,
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, default_value = "population")]
    pub sigma: SigmaMode,
    /// Column standing in for BERTScore in mist-comb1.
    #[arg(long, default_value = "bertscore-r")]
    pub bertscore_variant: String,
    /// Output column CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: EnsembleArgs) -> anyhow::Result<Outcome> {
    let config = match (&args.preset, args.members.is_empty()) {
        (Some(p), true) => match EnsembleConfig::preset(p, &args.bertscore_variant) {
            Some(cfg) => cfg,
            None => config_bail!("unknown preset `{p}`"),
        },
        (None, false) => EnsembleConfig::new(args.name.clone().unwrap_or_default(), args.members.clone())
            .map_err(|e| anyhow::Error::new(ConfigError(e.to_string())))?,
        _ => config_bail!("give either --preset or --members with --name"),
    };
    let table = load_score_table(&args.scores)
        .with_context(|| format!("loading {}", args.scores.display()))?;
    let column = ensemble(&table, &config, args.sigma)?;
    let text = write_score_column(&column);
    match &args.out {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    Ok(Outcome::Success)
}
