//! Post-hoc analysis of trained cohorts: representation similarity,
//! ensembles, significance testing and multi-seed summaries.

mod aggregate;
mod cka;
mod ensemble;
mod wilcoxon;

pub use aggregate::{aggregate, write_summary_csv, write_summary_json, MetricRow, MetricSummary};
pub use cka::{cka_matrix, linear_cka, write_cka_csv, ActivationDump, DumpMeta};
pub use ensemble::{ensemble_mean, ensemble_predict};
pub use wilcoxon::{wilcoxon_signed_rank, Wilcoxon, EXACT_LIMIT};
