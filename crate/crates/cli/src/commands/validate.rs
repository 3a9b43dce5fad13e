use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, ValueEnum};
use noteval_core::analysis::parse_report_csv;
use noteval_core::concepts::load_lexicon;
use noteval_core::data::{
    load_dataset, load_fact_annotations, load_keyphrase_annotations, load_score_column,
    load_score_table, DataFormat,
};
use noteval_core::embeddings::{load_contextual, load_store, EmbeddingKind};
use noteval_core::likelihood::load_logprobs;

use crate::{config_bail, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FileKind {
    Dataset,
    Facts,
    KeyPhrases,
    Scores,
    Table,
    Store,
    Kge,
    Contextual,
    Logprobs,
    Lexicon,
    Report,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, value_enum)]
    pub kind: FileKind,
    pub path: PathBuf,
    /// Dataset to check pair ids, spans and coverage against.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
}

pub fn run(args: ValidateArgs) -> anyhow::Result<Outcome> {
    if args.dataset.is_some()
        && !matches!(
            args.kind,
            FileKind::Facts | FileKind::KeyPhrases | FileKind::Scores
        )
    {
        config_bail!("--dataset only applies to facts, key-phrases and scores");
    }
    let dataset = match &args.dataset {
        Some(p) => Some(
            load_dataset(p, DataFormat::from_path(p))
                .with_context(|| format!("loading dataset {}", p.display()))?,
        ),
        None => None,
    };
    let path = &args.path;
    let ctx = || format!("validating {}", path.display());
    let summary = match args.kind {
        FileKind::Dataset => {
            let ds = load_dataset(path, DataFormat::from_path(path)).with_context(ctx)?;
            format!("dataset `{}` with {} pairs", ds.dataset_id, ds.len())
        }
        FileKind::Facts => {
            let anns = load_fact_annotations(path, dataset.as_ref()).with_context(ctx)?;
            format!("{} fact annotations", anns.len())
        }
        FileKind::KeyPhrases => {
            let anns = load_keyphrase_annotations(path, dataset.as_ref()).with_context(ctx)?;
            format!("{} key-phrase annotations", anns.len())
        }
        FileKind::Scores => {
            let col = load_score_column(path).with_context(ctx)?;
            if let Some(ds) = &dataset {
                let cov = col.coverage(ds);
                if !cov.unknown.is_empty() {
                    anyhow::bail!("{}: unknown pair `{}`", path.display(), cov.unknown[0]);
                }
                if !cov.missing.is_empty() {
                    eprintln!("warning: {} dataset pair(s) without a value", cov.missing.len());
                }
            }
            format!("column `{}` with {} values", col.metric_name, col.len())
        }
        FileKind::Table => {
            let t = load_score_table(path).with_context(ctx)?;
            format!("{} columns over {} pairs", t.columns.len(), t.pair_ids.len())
        }
        FileKind::Store | FileKind::Kge => {
            let kind = if args.kind == FileKind::Store {
                EmbeddingKind::Token
            } else {
                EmbeddingKind::Concept
            };
            let s = load_store(path, kind).with_context(ctx)?;
            format!("{} vectors of dimension {}", s.len(), s.dim())
        }
        FileKind::Contextual => {
            let s = load_contextual(path).with_context(ctx)?;
            format!("{} documents of dimension {}", s.len(), s.dim().unwrap_or(0))
        }
        FileKind::Logprobs => {
            let f = load_logprobs(path).with_context(ctx)?;
            let dirs: Vec<&str> = f.directions().into_iter().collect();
            format!("{} records ({})", f.len(), dirs.join(", "))
        }
        FileKind::Lexicon => {
            let l = load_lexicon(path).with_context(ctx)?;
            format!("{} lexicon entries", l.len())
        }
        FileKind::Report => {
            let text = std::fs::read_to_string(path).with_context(ctx)?;
            let r = parse_report_csv(&text, "report").with_context(ctx)?;
            format!("report with {} metrics x {} criteria", r.rows.len(), r.criteria.len())
        }
    };
    println!("ok: {summary}");
    Ok(Outcome::Success)
}
