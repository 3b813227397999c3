//! Per-image metric records and their CSV / JSON emission.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::band::{band_analysis, BandKind, BandMetrics, BandSpec};
use super::metrics::{psnr, ssim};
use crate::error::{Error, Result};
use crate::image::ComplexImage;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconReport {
    pub id: String,
    pub method: String,
    pub af: f64,
    pub psnr: f64,
    pub ssim: f64,
    pub bands: Vec<BandMetrics>,
}

/// Magnitude metrics for one reconstruction plus the requested bands.
pub fn evaluate<T: Scalar>(
    id: &str,
    method: &str,
    af: f64,
    recon: &ComplexImage<T>,
    reference: &ComplexImage<T>,
    bands: &[BandSpec],
) -> Result<ReconReport> {
    recon.check_same_dims(reference, "evaluate")?;
    let (mr, mt) = (recon.magnitude(), reference.magnitude());
    let bands = bands.iter().map(|b| band_analysis(recon, reference, b)).collect::<Result<Vec<_>>>()?;
    Ok(ReconReport {
        id: id.into(),
        method: method.into(),
        af,
        psnr: psnr(&mr, &mt)?,
        ssim: ssim(&mr, &mt)?,
        bands,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    id: String,
    method: String,
    af: f64,
    band: String,
    psnr_db: f64,
    ssim: f64,
}

/// Boxplot-ready summary of one metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub n: usize,
    #[serde(with = "crate::json::f64_any")]
    pub mean: f64,
    #[serde(with = "crate::json::f64_any")]
    pub median: f64,
    #[serde(with = "crate::json::f64_any")]
    pub q1: f64,
    #[serde(with = "crate::json::f64_any")]
    pub q3: f64,
    #[serde(with = "crate::json::f64_any")]
    pub min: f64,
    #[serde(with = "crate::json::f64_any")]
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data, `q` in `[0, 1]`.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.total_cmp(b));
        Some(Stats {
            n: v.len(),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            median: quantile(&v, 0.5),
            q1: quantile(&v, 0.25),
            q3: quantile(&v, 0.75),
            min: v[0],
            max: v[v.len() - 1],
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandSummary {
    pub psnr: Stats,
    pub ssim: Stats,
}

/// `method -> band -> summary`, band being `full`, `low` or `high`.
pub type ReportSummary = BTreeMap<String, BTreeMap<String, BandSummary>>;

pub fn summarize(reports: &[ReconReport]) -> ReportSummary {
    let mut acc: BTreeMap<String, BTreeMap<String, (Vec<f64>, Vec<f64>)>> = BTreeMap::new();
    for r in reports {
        let m = acc.entry(r.method.clone()).or_default();
        let e = m.entry("full".into()).or_default();
        e.0.push(r.psnr);
        e.1.push(r.ssim);
        for b in &r.bands {
            let e = m.entry(b.band.as_str().into()).or_default();
            e.0.push(b.psnr);
            e.1.push(b.ssim);
        }
    }
    acc.into_iter()
        .map(|(method, bands)| {
            let bands = bands
                .into_iter()
                .map(|(b, (p, s))| (b, BandSummary { psnr: Stats::of(&p).unwrap(), ssim: Stats::of(&s).unwrap() }))
                .collect();
            (method, bands)
        })
        .collect()
}

/// Writes one CSV row per (sample, method, band) to `csv_path` and the
/// per-method summary to `json_path`.
pub fn emit_report(reports: &[ReconReport], csv_path: &Path, json_path: &Path) -> Result<ReportSummary> {
    if reports.is_empty() {
        return Err(Error::InvalidArgument("no reports to emit".into()));
    }
    let mut wtr = csv::Writer::from_path(csv_path)?;
    for r in reports {
        wtr.serialize(Row {
            id: r.id.clone(),
            method: r.method.clone(),
            af: r.af,
            band: "full".into(),
            psnr_db: r.psnr,
            ssim: r.ssim,
        })?;
        for b in &r.bands {
            wtr.serialize(Row {
                id: r.id.clone(),
                method: r.method.clone(),
                af: r.af,
                band: b.band.as_str().into(),
                psnr_db: b.psnr,
                ssim: b.ssim,
            })?;
        }
    }
    wtr.flush()?;
    let summary = summarize(reports);
    fs::write(json_path, serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

/// Parses a CSV written by [`emit_report`] back into reports.
pub fn read_report_csv(path: &Path) -> Result<Vec<ReconReport>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out: Vec<ReconReport> = Vec::new();
    for row in rdr.deserialize() {
        let row: Row = row?;
        let band = match row.band.as_str() {
            "full" => None,
            "low" => Some(BandKind::Low),
            "high" => Some(BandKind::High),
            other => return Err(Error::CorruptManifest(format!("unknown band `{other}` in report"))),
        };
        match band {
            None => out.push(ReconReport {
                id: row.id,
                method: row.method,
                af: row.af,
                psnr: row.psnr_db,
                ssim: row.ssim,
                bands: Vec::new(),
            }),
            Some(kind) => {
                let last = out
                    .last_mut()
                    .filter(|r| r.id == row.id && r.method == row.method)
                    .ok_or_else(|| Error::CorruptManifest(format!("band row for `{}` precedes its full row", row.id)))?;
                last.bands.push(BandMetrics { band: kind, psnr: row.psnr_db, ssim: row.ssim });
            }
        }
    }
    Ok(out)
}
