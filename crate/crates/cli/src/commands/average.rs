use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use noteval_core::analysis::{average_reports, parse_report_csv, render_report_table, write_report_csv};

use crate::output::write_file;
use crate::Outcome;

#[derive(Debug, Args)]
pub struct AverageArgs {
    /// Report CSVs written by `correlate`.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    /// Directory for `report.csv` and `report.txt`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: AverageArgs) -> anyhow::Result<Outcome> {
    let reports = args
        .reports
        .iter()
        .map(|path| {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            parse_report_csv(&text, &id).with_context(|| format!("parsing {}", path.display()))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let avg = average_reports(&reports)?;
    let table = render_report_table(&avg);
    if let Some(out) = &args.out {
        write_file(&out.join("report.csv"), &write_report_csv(&avg))?;
        write_file(&out.join("report.txt"), &table)?;
    }
    print!("{table}");
    Ok(Outcome::Success)
}
