//! MFCC front-end: 13 cepstra plus delta and delta-delta coefficients.
//!
//! Pipeline per frame: pre-emphasis (applied to the whole signal), Hamming
//! window, magnitude FFT, HTK-mel triangular filterbank spanning 0 Hz to
//! Nyquist, natural log with a floor, orthonormal DCT-II truncated to
//! `n_ceps`. Deltas use the regression formula with edge replication.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::corpus::FeatureMatrix;
use crate::error::{Error, Result};

pub const FEATURE_KIND: &str = "mfcc39";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MfccConfig {
    pub sample_rate: u32,
    pub window_s: f64,
    pub hop_s: f64,
    pub fft_size: usize,
    pub n_mels: usize,
    pub n_ceps: usize,
    pub pre_emphasis: f64,
    pub delta_window: usize,
    pub floor: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            sample_rate: 16_000,
            window_s: 0.025,
            hop_s: 0.010,
            fft_size: 512,
            n_mels: 26,
            n_ceps: 13,
            pre_emphasis: 0.97,
            delta_window: 2,
            floor: 1e-10,
        }
    }
}

impl MfccConfig {
    pub fn window_len(&self) -> usize {
        (self.window_s * self.sample_rate as f64).round() as usize
    }

    pub fn hop_len(&self) -> usize {
        (self.hop_s * self.sample_rate as f64).round() as usize
    }

    /// Output width: static cepstra plus two derivative orders.
    pub fn output_dim(&self) -> usize {
        3 * self.n_ceps
    }

    /// Number of frames for `n` samples, `None` if shorter than one window.
    pub fn frame_count(&self, n: usize) -> Option<usize> {
        let w = self.window_len();
        (n >= w).then(|| (n - w) / self.hop_len() + 1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Argument(m));
        if self.sample_rate == 0 || self.window_len() == 0 || self.hop_len() == 0 {
            return bad("sample rate, window and hop must be positive".into());
        }
        if self.n_ceps == 0 || self.n_ceps > self.n_mels {
            return bad(format!("n_ceps {} must be in 1..={}", self.n_ceps, self.n_mels));
        }
        if self.fft_size < self.window_len() {
            return bad(format!(
                "fft_size {} shorter than window {}",
                self.fft_size,
                self.window_len()
            ));
        }
        if self.delta_window < 1 {
            return bad("delta_window must be at least 1".into());
        }
        if self.floor.is_nan() || self.floor <= 0.0 {
            return bad("log floor must be positive".into());
        }
        Ok(())
    }
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filters over the `fft_size / 2 + 1` magnitude bins.
pub fn mel_filterbank(cfg: &MfccConfig) -> Vec<Vec<f64>> {
    let n_bins = cfg.fft_size / 2 + 1;
    let nyquist = cfg.sample_rate as f64 / 2.0;
    let top = hz_to_mel(nyquist);
    let edges: Vec<f64> = (0..cfg.n_mels + 2)
        .map(|i| mel_to_hz(top * i as f64 / (cfg.n_mels + 1) as f64))
        .collect();
    let bin_hz = cfg.sample_rate as f64 / cfg.fft_size as f64;
    (0..cfg.n_mels)
        .map(|m| {
            let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..n_bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    if f <= lo || f >= hi {
                        0.0
                    } else if f <= mid {
                        (f - lo) / (mid - lo)
                    } else {
                        (hi - f) / (hi - mid)
                    }
                })
                .collect()
        })
        .collect()
}

/// Orthonormal DCT-II basis, `n_out` rows of length `n_in`.
fn dct_basis(n_in: usize, n_out: usize) -> Vec<Vec<f64>> {
    let n = n_in as f64;
    (0..n_out)
        .map(|k| {
            let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            (0..n_in)
                .map(|i| {
                    scale * (std::f64::consts::PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n)).cos()
                })
                .collect()
        })
        .collect()
}

/// Regression deltas: `sum_n n (x[t+n] - x[t-n]) / (2 sum_n n^2)`, indices
/// clamped to `[0, T-1]`.
pub fn delta(features: &[Vec<f64>], window: usize) -> Result<Vec<Vec<f64>>> {
    if window < 1 {
        return Err(Error::Argument("delta window must be at least 1".into()));
    }
    let t_len = features.len();
    let k = features.first().map_or(0, Vec::len);
    let denom = 2.0 * (1..=window).map(|n| (n * n) as f64).sum::<f64>();
    let last = t_len.saturating_sub(1);
    Ok((0..t_len)
        .map(|t| {
            let mut row = vec![0.0; k];
            for n in 1..=window {
                let ahead = &features[(t + n).min(last)];
                let behind = &features[t.saturating_sub(n)];
                for (r, (a, b)) in row.iter_mut().zip(ahead.iter().zip(behind)) {
                    *r += n as f64 * (a - b);
                }
            }
            row.iter_mut().for_each(|r| *r /= denom);
            row
        })
        .collect())
}

/// Reusable extractor holding the window, filterbank, DCT basis and FFT plan.
pub struct MfccExtractor {
    cfg: MfccConfig,
    window: Vec<f64>,
    filters: Vec<Vec<f64>>,
    dct: Vec<Vec<f64>>,
    fft: Arc<dyn Fft<f64>>,
}

impl MfccExtractor {
    pub fn new(cfg: MfccConfig) -> Result<Self> {
        cfg.validate()?;
        let w = cfg.window_len();
        let window = (0..w)
            .map(|n| {
                0.54 - 0.46 * (2.0 * std::f64::consts::PI * n as f64 / (w - 1).max(1) as f64).cos()
            })
            .collect();
        let filters = mel_filterbank(&cfg);
        let dct = dct_basis(cfg.n_mels, cfg.n_ceps);
        let fft = FftPlanner::new().plan_fft_forward(cfg.fft_size);
        Ok(Self {
            cfg,
            window,
            filters,
            dct,
            fft,
        })
    }

    pub fn config(&self) -> &MfccConfig {
        &self.cfg
    }

    /// Static cepstra only, one row per frame.
    pub fn cepstra(&self, samples: &[f32]) -> Result<Vec<Vec<f64>>> {
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Validation(format!("non-finite sample at index {i}")));
        }
        let n_frames = self.cfg.frame_count(samples.len()).ok_or_else(|| {
            Error::TooShort(format!(
                "{} samples, need at least {}",
                samples.len(),
                self.cfg.window_len()
            ))
        })?;

        let alpha = self.cfg.pre_emphasis;
        let emphasized: Vec<f64> = samples
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let prev = if i == 0 { 0.0 } else { samples[i - 1] as f64 };
                s as f64 - alpha * prev
            })
            .collect();

        let (wlen, hop) = (self.cfg.window_len(), self.cfg.hop_len());
        let n_bins = self.cfg.fft_size / 2 + 1;
        let mut buf = vec![Complex::new(0.0, 0.0); self.cfg.fft_size];
        let mut out = Vec::with_capacity(n_frames);
        for f in 0..n_frames {
            let frame = &emphasized[f * hop..f * hop + wlen];
            buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
            for (b, (x, w)) in buf.iter_mut().zip(frame.iter().zip(&self.window)) {
                b.re = x * w;
            }
            self.fft.process(&mut buf);
            let mag: Vec<f64> = buf[..n_bins].iter().map(|c| c.norm()).collect();
            let log_mel: Vec<f64> = self
                .filters
                .iter()
                .map(|filt| {
                    let e: f64 = filt.iter().zip(&mag).map(|(w, m)| w * m).sum();
                    e.max(self.cfg.floor).ln()
                })
                .collect();
            out.push(
                self.dct
                    .iter()
                    .map(|basis| basis.iter().zip(&log_mel).map(|(b, v)| b * v).sum())
                    .collect(),
            );
        }
        Ok(out)
    }

    /// Full `T x 3*n_ceps` features: cepstra, deltas, delta-deltas.
    pub fn extract(&self, samples: &[f32]) -> Result<FeatureMatrix> {
        let ceps = self.cepstra(samples)?;
        let d1 = delta(&ceps, self.cfg.delta_window)?;
        let d2 = delta(&d1, self.cfg.delta_window)?;
        let dim = self.cfg.output_dim();
        let mut data = Vec::with_capacity(ceps.len() * dim);
        for ((c, a), b) in ceps.iter().zip(&d1).zip(&d2) {
            data.extend(c.iter().chain(a).chain(b).map(|&v| v as f32));
        }
        FeatureMatrix::new(ceps.len(), dim, data, self.cfg.hop_s, FEATURE_KIND)
    }
}

pub fn mfcc(samples: &[f32], cfg: &MfccConfig) -> Result<FeatureMatrix> {
    MfccExtractor::new(cfg.clone())?.extract(samples)
}
