//! Dynamic time warping over frame sequences, and the vector metrics shared
//! by the rest of the toolkit.

use serde::{Deserialize, Serialize};

use crate::corpus::FeatureMatrix;
use crate::error::{Error, Result};

const ZERO_NORM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FrameMetric {
    #[default]
    Cosine,
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalize {
    #[default]
    PathLength,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DtwConfig {
    pub frame_metric: FrameMetric,
    pub normalize: Normalize,
}

fn cosine_unchecked<T: Copy + Into<f64>>(u: &[T], v: &[T]) -> f64 {
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (&a, &b) in u.iter().zip(v) {
        let (a, b): (f64, f64) = (a.into(), b.into());
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    let (nu, nv) = (nu.sqrt(), nv.sqrt());
    if nu < ZERO_NORM || nv < ZERO_NORM {
        return 1.0;
    }
    1.0 - dot / (nu * nv)
}

fn euclidean_unchecked<T: Copy + Into<f64>>(u: &[T], v: &[T]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(&a, &b)| {
            let d = a.into() - b.into();
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Argument(format!("dimension mismatch: {a} vs {b}")));
    }
    Ok(())
}

/// `1 - cos(u, v)`, or 1.0 when either vector has (near) zero norm.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    check_dims(u.len(), v.len())?;
    Ok(cosine_unchecked(u, v))
}

pub fn euclidean_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    check_dims(u.len(), v.len())?;
    Ok(euclidean_unchecked(u, v))
}

impl FrameMetric {
    pub fn frame_distance(self, u: &[f32], v: &[f32]) -> f64 {
        match self {
            FrameMetric::Cosine => cosine_unchecked(u, v),
            FrameMetric::Euclidean => euclidean_unchecked(u, v),
        }
    }
}

/// Accumulated cost and path length; ordered by cost, then by length.
#[derive(Clone, Copy, Debug)]
struct Cell {
    cost: f64,
    len: u32,
}

impl Cell {
    fn better_than(self, other: Cell) -> bool {
        self.cost < other.cost || (self.cost == other.cost && self.len < other.len)
    }
}

fn finish(cell: Cell, normalize: Normalize) -> f64 {
    match normalize {
        Normalize::PathLength => cell.cost / cell.len as f64,
        Normalize::None => cell.cost,
    }
}

fn check_pair(a: &FeatureMatrix, b: &FeatureMatrix) -> Result<()> {
    check_dims(a.cols(), b.cols())
}

/// DTW with steps (1,0), (0,1), (1,1) from the first to the last frame pair,
/// using two rolling rows.
pub fn dtw_distance(a: &FeatureMatrix, b: &FeatureMatrix, cfg: &DtwConfig) -> Result<f64> {
    check_pair(a, b)?;
    let (n, m) = (a.rows(), b.rows());
    let metric = cfg.frame_metric;
    let mut prev = vec![Cell { cost: 0.0, len: 0 }; m];
    let mut cur = prev.clone();
    for i in 0..n {
        let ai = a.row(i);
        for j in 0..m {
            let d = metric.frame_distance(ai, b.row(j));
            let best = if i == 0 && j == 0 {
                None
            } else {
                let mut best: Option<Cell> = None;
                let mut consider = |c: Cell| {
                    if best.is_none_or(|b| c.better_than(b)) {
                        best = Some(c);
                    }
                };
                if i > 0 && j > 0 {
                    consider(prev[j - 1]);
                }
                if i > 0 {
                    consider(prev[j]);
                }
                if j > 0 {
                    consider(cur[j - 1]);
                }
                best
            };
            cur[j] = match best {
                None => Cell { cost: d, len: 1 },
                Some(p) => Cell {
                    cost: p.cost + d,
                    len: p.len + 1,
                },
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(finish(prev[m - 1], cfg.normalize))
}

pub const BRUTE_FORCE_MAX_LEN: usize = 8;

/// Same contract as [`dtw_distance`], by enumerating every monotone path.
/// Refuses sequences longer than [`BRUTE_FORCE_MAX_LEN`].
pub fn dtw_brute_force(a: &FeatureMatrix, b: &FeatureMatrix, cfg: &DtwConfig) -> Result<f64> {
    check_pair(a, b)?;
    let (n, m) = (a.rows(), b.rows());
    if n > BRUTE_FORCE_MAX_LEN || m > BRUTE_FORCE_MAX_LEN {
        return Err(Error::Argument(format!(
            "brute force limited to {BRUTE_FORCE_MAX_LEN} frames, got {n}x{m}"
        )));
    }
    let dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..m).map(|j| cfg.frame_metric.frame_distance(a.row(i), b.row(j))).collect())
        .collect();

    fn walk(dist: &[Vec<f64>], i: usize, j: usize, acc: Cell, best: &mut Option<Cell>) {
        let (n, m) = (dist.len(), dist[0].len());
        if i == n - 1 && j == m - 1 {
            if best.is_none_or(|b| acc.better_than(b)) {
                *best = Some(acc);
            }
            return;
        }
        for (di, dj) in [(1, 1), (1, 0), (0, 1)] {
            let (ni, nj) = (i + di, j + dj);
            if ni < n && nj < m {
                let next = Cell {
                    cost: acc.cost + dist[ni][nj],
                    len: acc.len + 1,
                };
                walk(dist, ni, nj, next, best);
            }
        }
    }

    let mut best = None;
    walk(&dist, 0, 0, Cell { cost: dist[0][0], len: 1 }, &mut best);
    Ok(finish(best.expect("at least one path"), cfg.normalize))
}
