//! Comparison of fiber fields and activation maps.

use crate::ep::ActivationMap;
use crate::error::{Error, Result};
use crate::frame::FrameField;
use std::io::Write;
use std::path::Path;

/// Number of histogram bins in reports.
pub const HISTOGRAM_BINS: usize = 64;

/// Per-node 1 - |f1 . f2|: 0 for parallel fiber lines, 1 for orthogonal.
pub fn fiber_diff(a: &FrameField, b: &FrameField) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("frame fields of {} and {} nodes", a.len(), b.len())));
    }
    Ok(a.0
        .iter()
        .zip(&b.0)
        .map(|(x, y)| (1.0 - x.fiber().dot(&y.fiber()).abs()).clamp(0.0, 1.0))
        .collect())
}

/// Pointwise activation difference.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationDiff {
    /// |A1 - A2| per node (ms).
    pub delta: Vec<f64>,
    /// Maximum difference M (ms).
    pub max: f64,
    /// M divided by the latest activation of either map.
    pub relative: f64,
}

pub fn activation_diff(a: &ActivationMap, b: &ActivationMap) -> Result<ActivationDiff> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("activation maps of {} and {} nodes", a.len(), b.len())));
    }
    let mut never: Vec<usize> = a.never();
    never.extend(b.never());
    never.sort_unstable();
    never.dedup();
    if !never.is_empty() {
        return Err(Error::Coverage { nodes: never });
    }
    let delta: Vec<f64> = a.times.iter().zip(&b.times).map(|(x, y)| (x.unwrap() - y.unwrap()).abs()).collect();
    let max = delta.iter().copied().fold(0.0, f64::max);
    let total = a.max().unwrap_or(0.0).max(b.max().unwrap_or(0.0));
    let relative = if total > 0.0 { max / total } else { 0.0 };
    Ok(ActivationDiff { delta, max, relative })
}

/// Order statistics of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub q05: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
}

/// Quantile of sorted data with linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return Err(Error::Measurement("empty sample".into()));
    }
    v.sort_by(f64::total_cmp);
    let q = |p| quantile_sorted(&v, p);
    Ok(Summary {
        count: v.len(),
        min: v[0],
        max: v[v.len() - 1],
        mean: v.iter().sum::<f64>() / v.len() as f64,
        q05: q(0.05),
        q25: q(0.25),
        q50: q(0.5),
        q75: q(0.75),
        q95: q(0.95),
    })
}

/// Mean of `values` over nodes where `mask` holds.
pub fn masked_mean(values: &[f64], mask: &[bool]) -> Option<f64> {
    let (s, n) = values
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .fold((0.0, 0usize), |(s, n), (v, _)| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Uniform histogram over [lo, hi]; the last bin is closed.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
}

pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Histogram {
    let mut counts = vec![0; bins.max(1)];
    let nb = counts.len();
    let w = hi - lo;
    for &v in values {
        if !(v >= lo && v <= hi) {
            continue;
        }
        let b = if w > 0.0 { (((v - lo) / w) * nb as f64) as usize } else { 0 };
        counts[b.min(nb - 1)] += 1;
    }
    Histogram { lo, hi, counts }
}

/// 1 where `values` reaches `threshold`, 0 elsewhere. Used only for display.
pub fn display_mask(values: &[f64], threshold: f64) -> Vec<i32> {
    values.iter().map(|&v| i32::from(v >= threshold)).collect()
}

/// Writes one summary row per named sample.
pub fn write_summary_csv(path: &Path, rows: &[(String, Summary)]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "name,count,min,max,mean,q05,q25,q50,q75,q95")?;
    for (n, s) in rows {
        writeln!(
            f,
            "{n},{},{},{},{},{},{},{},{},{}",
            s.count, s.min, s.max, s.mean, s.q05, s.q25, s.q50, s.q75, s.q95
        )?;
    }
    f.flush()?;
    Ok(())
}

/// Writes a histogram as `bin_lo,bin_hi,count` rows.
pub fn write_histogram_csv(path: &Path, h: &Histogram) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "bin_lo,bin_hi,count")?;
    let w = (h.hi - h.lo) / h.counts.len() as f64;
    for (i, c) in h.counts.iter().enumerate() {
        writeln!(f, "{},{},{}", h.lo + i as f64 * w, h.lo + (i + 1) as f64 * w, c)?;
    }
    f.flush()?;
    Ok(())
}
