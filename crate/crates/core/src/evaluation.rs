//! Recall quality: RMSE/NRMSE, phase alignment, multichannel summaries and
//! simple statistics for chaotic outputs.
//!
//! Variances are population variances (divide by `K`).

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::patterns::Pattern;

/// Threshold under which a recall counts as accurate.
pub const GOOD_NRMSE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct NrmseReport {
    /// `None` marks a constant target channel, which is left out of the statistics.
    pub per_channel: Vec<Option<f64>>,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
    pub shift: Option<usize>,
    pub compared_steps: usize,
}

impl NrmseReport {
    pub fn excluded_channels(&self) -> Vec<usize> {
        self.per_channel
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.is_none().then_some(i))
            .collect()
    }

    pub fn from_values(per_channel: Vec<Option<f64>>, shift: Option<usize>, compared_steps: usize) -> Result<Self> {
        let vals: Vec<f64> = per_channel.iter().flatten().copied().collect();
        if vals.is_empty() {
            return Err(Error::ZeroVariance);
        }
        let (mean, std) = mean_std(&vals);
        Ok(NrmseReport {
            min: vals.iter().copied().fold(f64::INFINITY, f64::min),
            max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean,
            std,
            per_channel,
            shift,
            compared_steps,
        })
    }
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k;
    (mean, var.sqrt())
}

pub fn variance(values: &[f64]) -> f64 {
    mean_std(values).1.powi(2)
}

pub fn rmse(observed: &[f64], target: &[f64]) -> Result<f64> {
    check_dim("rmse", target.len(), observed.len())?;
    if target.is_empty() {
        return Err(Error::Range { from: 0, to: 0, len: 0 });
    }
    let mse = observed
        .iter()
        .zip(target)
        .map(|(o, t)| (o - t).powi(2))
        .sum::<f64>()
        / target.len() as f64;
    Ok(mse.sqrt())
}

pub fn nrmse(observed: &[f64], target: &[f64]) -> Result<f64> {
    let e = rmse(observed, target)?;
    let var = variance(target);
    if var <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(e / var.sqrt())
}

/// Finds the shift `d ∈ [1, d_max]` minimizing the NRMSE between
/// `observed[d−1..K]` and `target[0..K−d+1]`, with `K = min(len)`.
///
/// Shifts are tried exhaustively and ties go to the smallest `d`.
pub fn phase_align(observed: &[f64], target: &[f64], d_max: usize) -> Result<(usize, f64)> {
    if d_max == 0 {
        return Err(Error::Config("d_max must be at least 1".into()));
    }
    let k = observed.len().min(target.len());
    if k < d_max + 1 {
        return Err(Error::Range { from: d_max, to: k, len: k });
    }
    let mut best: Option<(usize, f64)> = None;
    for d in 1..=d_max {
        let e = nrmse(&observed[d - 1..k], &target[..k - d + 1])?;
        if best.is_none_or(|(_, b)| e < b) {
            best = Some((d, e));
        }
    }
    Ok(best.expect("d_max ≥ 1"))
}

/// Per-channel NRMSE of two `K × M` matrices.
pub fn nrmse_multichannel(observed: &DMatrix<f64>, target: &DMatrix<f64>) -> Result<NrmseReport> {
    if observed.shape() != target.shape() {
        return Err(Error::Dimension {
            context: "nrmse_multichannel",
            expected: target.len(),
            actual: observed.len(),
        });
    }
    let per_channel = (0..target.ncols())
        .map(|c| {
            let o: Vec<f64> = observed.column(c).iter().copied().collect();
            let t: Vec<f64> = target.column(c).iter().copied().collect();
            match nrmse(&o, &t) {
                Ok(v) => Ok(Some(v)),
                Err(Error::ZeroVariance) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    NrmseReport::from_values(per_channel, None, target.nrows())
}

/// Compares a recall against its target. Single-channel patterns are phase
/// aligned first with shifts up to `d_max`; multichannel patterns are compared
/// step by step over the common length.
pub fn evaluate_recall(observed: &Pattern, target: &Pattern, d_max: usize) -> Result<NrmseReport> {
    check_dim("evaluate_recall channels", target.channels(), observed.channels())?;
    if target.channels() == 1 {
        let (d, e) = phase_align(&observed.channel(0), &target.channel(0), d_max)?;
        let k = observed.length().min(target.length());
        return NrmseReport::from_values(vec![Some(e)], Some(d), k - d + 1);
    }
    let k = observed.length().min(target.length());
    nrmse_multichannel(
        &observed.data.rows(0, k).into_owned(),
        &target.data.rows(0, k).into_owned(),
    )
}

/// Smallest NRMSE between `observed` and any window of `reference` of the
/// same length. Useful for comparing a short segment against a long recall
/// whose phase is unknown.
pub fn best_window_nrmse(observed: &[f64], reference: &[f64]) -> Result<(usize, f64)> {
    let k = observed.len();
    if k == 0 || reference.len() < k {
        return Err(Error::Range { from: 0, to: k, len: reference.len() });
    }
    let mut best: Option<(usize, f64)> = None;
    for offset in 0..=reference.len() - k {
        let e = nrmse(observed, &reference[offset..offset + k])?;
        if best.is_none_or(|(_, b)| e < b) {
            best = Some((offset, e));
        }
    }
    Ok(best.expect("at least one window"))
}

/// Symmetric mean nearest-neighbour distance between two point clouds, one
/// point per column.
pub fn cloud_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    check_dim("cloud_distance", a.nrows(), b.nrows())?;
    if a.ncols() == 0 || b.ncols() == 0 {
        return Err(Error::Config("cloud_distance needs non-empty clouds".into()));
    }
    let one_way = |x: &DMatrix<f64>, y: &DMatrix<f64>| {
        x.column_iter()
            .map(|p| {
                y.column_iter()
                    .map(|q| (p - q).norm_squared())
                    .fold(f64::INFINITY, f64::min)
                    .sqrt()
            })
            .sum::<f64>()
            / x.ncols() as f64
    };
    Ok(0.5 * (one_way(a, b) + one_way(b, a)))
}

/// NRMSE over the first `k` and over the last `k` common steps, averaged over
/// channels for multichannel data.
pub fn long_term_stability(observed: &DMatrix<f64>, target: &DMatrix<f64>, k: usize) -> Result<(f64, f64)> {
    check_dim("long_term_stability channels", target.ncols(), observed.ncols())?;
    let len = observed.nrows().min(target.nrows());
    if k == 0 || k > len {
        return Err(Error::Range { from: 0, to: k, len });
    }
    let window = |from: usize| {
        nrmse_multichannel(
            &observed.rows(from, k).into_owned(),
            &target.rows(from, k).into_owned(),
        )
        .map(|r| r.mean)
    };
    Ok((window(0)?, window(len - k)?))
}

/// Mean spacing between upward zero crossings of the de-meaned signal, with
/// linear interpolation between samples. `None` with fewer than two crossings.
pub fn dominant_period(signal: &[f64]) -> Option<f64> {
    if signal.len() < 3 {
        return None;
    }
    let mean = signal.iter().sum::<f64>() / signal.len() as f64;
    let mut crossings = Vec::new();
    for i in 1..signal.len() {
        let (a, b) = (signal[i - 1] - mean, signal[i] - mean);
        if a < 0.0 && b >= 0.0 {
            crossings.push((i - 1) as f64 + a / (a - b));
        }
    }
    if crossings.len() < 2 {
        return None;
    }
    Some((crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64)
}

/// Bounding box, variance and grid coverage of a two-channel trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStats {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub variance: Vec<f64>,
}

impl TrajectoryStats {
    pub fn within(&self, lo: f64, hi: f64) -> bool {
        self.min.iter().all(|v| *v >= lo) && self.max.iter().all(|v| *v <= hi)
    }
}

pub fn trajectory_stats(data: &DMatrix<f64>) -> TrajectoryStats {
    let cols: Vec<Vec<f64>> = (0..data.ncols())
        .map(|c| data.column(c).iter().copied().collect())
        .collect();
    TrajectoryStats {
        min: cols.iter().map(|c| c.iter().copied().fold(f64::INFINITY, f64::min)).collect(),
        max: cols.iter().map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect(),
        variance: cols.iter().map(|c| variance(c)).collect(),
    }
}

/// Fraction of the cells of a `cells × cells` grid over `[0,1]²` that are
/// visited by `points` (first two columns) and by `reference`, relative to the
/// cells visited by `reference`.
pub fn grid_coverage(points: &DMatrix<f64>, reference: &DMatrix<f64>, cells: usize) -> f64 {
    let occupied = |m: &DMatrix<f64>| {
        let mut grid = vec![false; cells * cells];
        for i in 0..m.nrows() {
            let (x, y) = (m[(i, 0)], m[(i, 1)]);
            if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
                continue;
            }
            let gx = ((x * cells as f64) as usize).min(cells - 1);
            let gy = ((y * cells as f64) as usize).min(cells - 1);
            grid[gy * cells + gx] = true;
        }
        grid
    };
    let a = occupied(points);
    let b = occupied(reference);
    let reference_cells = b.iter().filter(|v| **v).count();
    if reference_cells == 0 {
        return 0.0;
    }
    let shared = a.iter().zip(&b).filter(|(x, y)| **x && **y).count();
    shared as f64 / reference_cells as f64
}

/// The `(pattern, channel, nrmse)` rows of a set of reports, as CSV.
pub fn report_rows_csv(reports: &[(String, NrmseReport)]) -> String {
    let mut out = String::from("pattern,channel,nrmse\n");
    for (name, r) in reports {
        for (c, v) in r.per_channel.iter().enumerate() {
            match v {
                Some(v) => writeln!(out, "{name},{c},{v}").unwrap(),
                None => writeln!(out, "{name},{c},constant").unwrap(),
            }
        }
    }
    out
}

/// One row per pattern with the min/max/mean/std columns, as CSV.
pub fn summary_table_csv(reports: &[(String, NrmseReport)]) -> String {
    let mut out = String::from("pattern,min,max,mean,std,shift,steps\n");
    for (name, r) in reports {
        let shift = r.shift.map(|d| d.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{name},{},{},{},{},{shift},{}",
            r.min, r.max, r.mean, r.std, r.compared_steps
        )
        .unwrap();
    }
    out
}
