//! Ensembles, correlation meta-evaluation and inter-annotator agreement.

mod ensemble;
mod iaa;
mod report;
mod stats;

pub use ensemble::{ensemble, EnsembleConfig};
pub use iaa::{
    average_pairwise_iaa, cohen_kappa, f1_header, iaa, tolerant_f1, IaaField, IaaRow, IaaScores,
};
pub use report::{
    average_reports, correlation_report, paired_points, parse_report_csv, render_report_table,
    write_report_csv, Cell, CorrelationReport, ReportCriterion, ReportRow,
};
pub use stats::{mean, pearson, std_dev, zscore_column, SigmaMode};
