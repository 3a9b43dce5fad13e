use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, ValueEnum};
use noteval_core::data::{
    load_dataset, load_fact_annotations, load_keyphrase_annotations, write_score_column,
    write_score_table, DataFormat, Dataset, ScoreColumn, ScoreTable,
};
use noteval_core::refscores::{
    fact_criteria_columns, keyphrase_criteria_columns, overlap_warnings, quality_score,
    AnnotatorPolicy, ErrorCounts, ErrorWeights,
};
use serde::Deserialize;

use crate::output::write_file;
use crate::{config_bail, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnnotationKindArg {
    Facts,
    KeyPhrases,
}

#[derive(Debug, Args)]
pub struct RefscoresArgs {
    /// Fact or key-phrase annotation JSONL.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "facts")]
    pub kind: AnnotationKindArg,
    /// Dataset; required for key phrases and quality scores.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// mean, first or per-annotator.
    #[arg(long, default_value = "mean")]
    pub policy: AnnotatorPolicy,
    /// Error-count CSV (pair_id, critical, non_critical, spelling_grammar)
    /// for quality scores.
    #[arg(long)]
    pub errors: Option<PathBuf>,
    /// Clamp quality scores to [0, 1].
    #[arg(long)]
    pub clamp01: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Deserialize)]
struct ErrorRow {
    pair_id: String,
    critical: u64,
    non_critical: u64,
    spelling_grammar: u64,
}

fn quality_column(path: &PathBuf, dataset: &Dataset, clamp01: bool) -> anyhow::Result<ScoreColumn> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut column = ScoreColumn::new("quality", true);
    for row in reader.deserialize() {
        let row: ErrorRow = row.with_context(|| format!("parsing {}", path.display()))?;
        let pair = dataset
            .get(&row.pair_id)
            .with_context(|| format!("{}: unknown pair `{}`", path.display(), row.pair_id))?;
        let counts = ErrorCounts {
            critical: row.critical,
            non_critical: row.non_critical,
            spelling_grammar: row.spelling_grammar,
        };
        let q = quality_score(&counts, &ErrorWeights::default(), &pair.system, &pair.reference, clamp01)?;
        column.insert(row.pair_id, q)?;
    }
    Ok(column)
}

pub fn run(args: RefscoresArgs) -> anyhow::Result<Outcome> {
    if args.annotations.is_none() && args.errors.is_none() {
        config_bail!("nothing to do: give --annotations and/or --errors");
    }
    if (args.kind == AnnotationKindArg::KeyPhrases && args.annotations.is_some()
        || args.errors.is_some())
        && args.dataset.is_none()
    {
        config_bail!("key-phrase scores and quality scores need --dataset");
    }

    let dataset = match &args.dataset {
        Some(path) => Some(
            load_dataset(path, DataFormat::from_path(path))
                .with_context(|| format!("loading dataset {}", path.display()))?,
        ),
        None => None,
    };

    let mut columns = Vec::new();
    if let Some(path) = &args.annotations {
        match args.kind {
            AnnotationKindArg::Facts => {
                let anns = load_fact_annotations(path, dataset.as_ref())
                    .with_context(|| format!("loading {}", path.display()))?;
                for (pair, annotators) in overlap_warnings(&anns) {
                    eprintln!(
                        "warning: pair `{pair}`: correct + omitted exceeds reference facts ({})",
                        annotators.join(", ")
                    );
                }
                columns.extend(fact_criteria_columns(&anns, args.policy)?);
            }
            AnnotationKindArg::KeyPhrases => {
                let ds = dataset.as_ref().expect("checked above");
                let anns = load_keyphrase_annotations(path, Some(ds))
                    .with_context(|| format!("loading {}", path.display()))?;
                columns.extend(keyphrase_criteria_columns(&anns, ds, args.policy)?);
            }
        }
    }
    if let Some(path) = &args.errors {
        columns.push(quality_column(path, dataset.as_ref().expect("checked above"), args.clamp01)?);
    }

    let ids: Vec<String> = match &dataset {
        Some(ds) if args.policy != AnnotatorPolicy::PerAnnotator => {
            ds.pair_ids().map(str::to_string).collect()
        }
        _ => {
            let mut ids: Vec<String> = Vec::new();
            for c in &columns {
                for id in c.values.keys() {
                    if !ids.contains(id) {
                        ids.push(id.clone());
                    }
                }
            }
            ids
        }
    };
    let mut table = ScoreTable::new(ids);
    for c in &columns {
        write_file(&args.out.join(format!("{}.csv", c.metric_name)), &write_score_column(c))?;
        table.push(c.clone());
    }
    write_file(&args.out.join("refscores.csv"), &write_score_table(&table))?;
    eprintln!("wrote {} criteria for {} rows", table.columns.len(), table.pair_ids.len());
    Ok(Outcome::Success)
}
