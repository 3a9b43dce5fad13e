use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use noteval_core::analysis::{average_pairwise_iaa, f1_header, IaaRow};
use noteval_core::data::load_fact_annotations;

use crate::output::write_file;
use crate::Outcome;

#[derive(Debug, Args)]
pub struct IaaArgs {
    /// Fact annotation JSONL with at least two annotators.
    #[arg(long)]
    pub annotations: PathBuf,
    /// Tolerances for the tolerant F1 columns.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    pub tolerances: Vec<u64>,
    /// Optional CSV output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn fmt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

fn write_csv(rows: &[IaaRow], tolerances: &[u64]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["field".to_string(), "kappa".to_string()];
    header.extend(tolerances.iter().map(|t| f1_header(*t)));
    header.extend(["pearson".to_string(), "annotator_pairs".to_string()]);
    w.write_record(&header)?;
    for row in rows {
        let mut rec = vec![row.field.label().to_string(), row.kappa.to_string()];
        rec.extend(row.f1.iter().map(|(_, f)| f.to_string()));
        rec.push(fmt(row.pearson));
        rec.push(row.annotator_pairs.to_string());
        w.write_record(&rec)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn render(rows: &[IaaRow], tolerances: &[u64]) -> String {
    let mut header = vec!["field".to_string(), "kappa".to_string()];
    header.extend(tolerances.iter().map(|t| f1_header(*t)));
    header.push("pearson".to_string());
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut line = vec![r.field.label().to_string(), format!("{:.2}", r.kappa)];
            line.extend(r.f1.iter().map(|(_, f)| format!("{f:.2}")));
            line.push(r.pearson.map_or_else(|| "NA".to_string(), |p| format!("{p:.2}")));
            line
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|i| body.iter().map(|l| l[i].len()).chain([header[i].len()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for line in std::iter::once(&header).chain(&body) {
        for (i, (cell, w)) in line.iter().zip(&widths).enumerate() {
            if i == 0 {
                let _ = write!(out, "{cell:<w$}");
            } else {
                let _ = write!(out, "  {cell:>w$}");
            }
        }
        out.push('\n');
    }
    out
}

pub fn run(args: IaaArgs) -> anyhow::Result<Outcome> {
    let anns = load_fact_annotations(&args.annotations, None)
        .with_context(|| format!("loading {}", args.annotations.display()))?;
    let rows = average_pairwise_iaa(&anns, &args.tolerances)?;
    if let Some(path) = &args.out {
        write_file(path, &write_csv(&rows, &args.tolerances)?)?;
    }
    print!("{}", render(&rows, &args.tolerances));
    Ok(Outcome::Success)
}
