//! Evaluation: PSNR / SSIM, k-space band analysis and reports.

mod band;
mod metrics;
mod report;

pub use band::{band_analysis, band_filter, BandGeometry, BandKind, BandMetrics, BandSpec, DEFAULT_RADIUS_FRACTION};
pub use metrics::{psnr, ssim, IDENTICAL_RTOL, SSIM_K1, SSIM_K2, SSIM_WINDOW};
pub use report::{emit_report, evaluate, read_report_csv, summarize, BandSummary, ReconReport, ReportSummary, Stats};
