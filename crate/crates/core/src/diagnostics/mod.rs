//! Fourth-moment diagnostics for kernel sequences, spectral tools for
//! second-chaos variables, and Monte Carlo summaries.

mod report;
mod spectral;
mod stats;

pub use report::{theorem_one_report, DiagnosticReport, KernelSequence, LimitDirection, ReportEntry, Verdict};
pub use spectral::HSOperator;
pub use stats::{ks_against_std_normal, mean_with_se, summarize, KSResult, MomentSummary, KS_MIN_SAMPLES};
