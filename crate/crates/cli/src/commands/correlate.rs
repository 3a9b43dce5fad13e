use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use noteval_core::analysis::{
    correlation_report, paired_points, render_report_table, write_report_csv, ReportCriterion,
};
use noteval_core::data::{
    load_dataset, load_fact_annotations, load_keyphrase_annotations, load_score_table, DataFormat,
};
use noteval_core::refscores::{
    fact_criteria_columns, keyphrase_criteria_columns, AnnotatorPolicy, Criterion,
};

use super::refscores::AnnotationKindArg;
use crate::output::{file_stem_for, write_file};
use crate::{config_bail, Outcome};

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// Wide metric score table.
    #[arg(long)]
    pub scores: PathBuf,
    /// Wide table of reference criteria, as written by `refscores`.
    #[arg(long, conflicts_with = "annotations")]
    pub refs: Option<PathBuf>,
    /// Annotation JSONL; criteria are derived on the fly.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "facts")]
    pub kind: AnnotationKindArg,
    /// Dataset, needed for key-phrase annotations.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, default_value = "mean")]
    pub policy: AnnotatorPolicy,
    /// Name recorded in the report.
    #[arg(long, default_value = "dataset")]
    pub dataset_id: String,
    /// Directory for `report.csv`, `report.txt` and plot data.
    #[arg(long)]
    pub out: PathBuf,
    /// Write one scatter CSV per (metric, criterion) cell.
    #[arg(long)]
    pub emit_plot_data: bool,
}

pub fn run(args: CorrelateArgs) -> anyhow::Result<Outcome> {
    if args.refs.is_none() && args.annotations.is_none() {
        config_bail!("give --refs or --annotations");
    }
    if args.kind == AnnotationKindArg::KeyPhrases && args.annotations.is_some() && args.dataset.is_none() {
        config_bail!("key-phrase annotations need --dataset");
    }
    let table = load_score_table(&args.scores)
        .with_context(|| format!("loading {}", args.scores.display()))?;

    let references = if let Some(path) = &args.refs {
        let refs = load_score_table(path).with_context(|| format!("loading {}", path.display()))?;
        refs.columns
            .into_iter()
            .filter(|c| Criterion::from_column_name(&c.metric_name).is_some())
            .collect::<Vec<_>>()
    } else {
        let path = args.annotations.as_ref().expect("checked above");
        let dataset = match &args.dataset {
            Some(p) => Some(load_dataset(p, DataFormat::from_path(p)).with_context(|| format!("loading {}", p.display()))?),
            None => None,
        };
        match args.kind {
            AnnotationKindArg::Facts => {
                let anns = load_fact_annotations(path, dataset.as_ref())
                    .with_context(|| format!("loading {}", path.display()))?;
                fact_criteria_columns(&anns, args.policy)?
            }
            AnnotationKindArg::KeyPhrases => {
                let ds = dataset.as_ref().expect("checked above");
                let anns = load_keyphrase_annotations(path, Some(ds))
                    .with_context(|| format!("loading {}", path.display()))?;
                keyphrase_criteria_columns(&anns, ds, args.policy)?
            }
        }
    };
    if references.is_empty() {
        anyhow::bail!("no reference criterion columns found");
    }

    let report = correlation_report(&args.dataset_id, &table, &references)?;
    if report.rows.iter().all(|r| r.cells.iter().all(|c| c.n == 0)) {
        anyhow::bail!("scores and reference criteria share no pair ids");
    }

    let text = render_report_table(&report);
    write_file(&args.out.join("report.csv"), &write_report_csv(&report))?;
    write_file(&args.out.join("report.txt"), &text)?;
    if args.emit_plot_data {
        for metric in &table.columns {
            for reference in &references {
                let criterion = Criterion::from_column_name(&reference.metric_name)
                    .map(ReportCriterion::from_reference)
                    .expect("filtered above");
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["pair_id", &metric.metric_name, &reference.metric_name])?;
                for (id, x, y) in paired_points(metric, reference) {
                    w.write_record([id, x.to_string(), y.to_string()])?;
                }
                let body = String::from_utf8(w.into_inner()?)?;
                let name = format!("{}__{}.csv", file_stem_for(&metric.metric_name), criterion.label());
                write_file(&args.out.join("plot-data").join(name), &body)?;
            }
        }
    }
    print!("{text}");
    Ok(Outcome::Success)
}
