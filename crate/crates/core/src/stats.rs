//! Error bars for correlated Monte Carlo series.

use crate::error::{Error, Result};

/// Smallest series (and smallest block count) the blocking analysis accepts.
pub const MIN_BLOCKS: usize = 16;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
pub fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Standard error of the mean by successive pair-averaging (Flyvbjerg &
/// Petersen). Returns the largest estimate over all levels that still have
/// at least [`MIN_BLOCKS`] blocks.
pub fn blocking_error(series: &[f64]) -> Result<f64> {
    if series.len() < MIN_BLOCKS {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            min: MIN_BLOCKS,
        });
    }
    let mut blocks = series.to_vec();
    let mut best: f64 = 0.0;
    while blocks.len() >= MIN_BLOCKS {
        let n = blocks.len() as f64;
        let m = mean(&blocks);
        let c0 = blocks.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
        best = best.max((c0 / (n - 1.0)).sqrt());
        blocks = blocks.chunks_exact(2).map(|p| 0.5 * (p[0] + p[1])).collect();
    }
    Ok(best)
}

/// Error of the mean of several independent series pooled together.
pub fn pooled_blocking_error(series: &[&[f64]]) -> Result<f64> {
    let total: usize = series.iter().map(|s| s.len()).sum();
    let mut var = 0.0;
    for s in series {
        let e = blocking_error(s)?;
        let w = s.len() as f64 / total as f64;
        var += w * w * e * e;
    }
    Ok(var.sqrt())
}

/// Mean, standard deviation and blocking errors of both.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesSummary {
    pub mean: f64,
    pub mean_err: f64,
    pub std_dev: f64,
    pub std_dev_err: f64,
}

/// Summary of one or more independent chains' series of the same observable.
pub fn summarize(series: &[&[f64]]) -> Result<SeriesSummary> {
    let total: usize = series.iter().map(|s| s.len()).sum();
    if total == 0 {
        return Err(Error::SeriesTooShort { len: 0, min: MIN_BLOCKS });
    }
    let m = series.iter().map(|s| s.iter().sum::<f64>()).sum::<f64>() / total as f64;
    let sq: Vec<Vec<f64>> = series
        .iter()
        .map(|s| s.iter().map(|x| (x - m).powi(2)).collect())
        .collect();
    let var = sq.iter().map(|s| s.iter().sum::<f64>()).sum::<f64>() / total as f64;
    let sd = var.sqrt();
    let mean_err = pooled_blocking_error(series)?;
    let sq_refs: Vec<&[f64]> = sq.iter().map(|s| s.as_slice()).collect();
    let var_err = pooled_blocking_error(&sq_refs)?;
    let std_dev_err = if sd > 0.0 { var_err / (2.0 * sd) } else { 0.0 };
    Ok(SeriesSummary {
        mean: m,
        mean_err,
        std_dev: sd,
        std_dev_err,
    })
}

/// Jackknife estimate and standard error from leave-one-block-out values.
pub fn jackknife(leave_one_out: &[f64]) -> (f64, f64) {
    let b = leave_one_out.len() as f64;
    let m = mean(leave_one_out);
    let var = leave_one_out.iter().map(|v| (v - m).powi(2)).sum::<f64>() * (b - 1.0) / b;
    (m, var.sqrt())
}
