//! Training loop: length-bucketed batches, Adam or SGD with a learning-rate
//! schedule, global-norm clipping, best-epoch model selection.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::awe::{AweModel, Mode};
use crate::corpus::FeatureMatrix;
use crate::error::{Error, Result};
use crate::nn::Parameters;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    Constant,
    /// `lr * factor^floor(epoch / period)`
    Step { factor: f64, period: usize },
    /// Triangle wave from `lr_min` up to `lr_max` and back over `cycle_steps`
    /// optimizer steps.
    CyclicalTriangular {
        lr_min: f64,
        lr_max: f64,
        cycle_steps: usize,
    },
}

impl Schedule {
    /// Learning rate at a given epoch (0-based) and global optimizer step.
    pub fn lr_at(&self, base_lr: f64, epoch: usize, step: usize) -> f64 {
        match *self {
            Schedule::Constant => base_lr,
            Schedule::Step { factor, period } => {
                base_lr * factor.powi((epoch / period.max(1)) as i32)
            }
            Schedule::CyclicalTriangular {
                lr_min,
                lr_max,
                cycle_steps,
            } => {
                let cycle = cycle_steps.max(2) as f64;
                let half = cycle / 2.0;
                let pos = (step as f64) % cycle;
                let frac = if pos <= half {
                    pos / half
                } else {
                    (cycle - pos) / half
                };
                lr_min + (lr_max - lr_min) * frac
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub lr: f64,
    pub schedule: Schedule,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub grad_clip: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: Optimizer::Adam,
            lr: 1e-3,
            schedule: Schedule::Constant,
            batch_size: 32,
            epochs: 50,
            seed: 0,
            grad_clip: Some(5.0),
        }
    }
}

impl TrainConfig {
    /// SGD at 0.1, halved every 10 epochs.
    pub fn sgd() -> Self {
        Self {
            optimizer: Optimizer::Sgd,
            lr: 0.1,
            schedule: Schedule::Step {
                factor: 0.5,
                period: 10,
            },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Argument(m));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("learning rate {} must be positive", self.lr));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if let Some(c) = self.grad_clip {
            if c.is_nan() || c <= 0.0 {
                return bad(format!("grad_clip {c} must be positive"));
            }
        }
        match self.schedule {
            Schedule::CyclicalTriangular {
                lr_min,
                lr_max,
                cycle_steps,
            } if lr_min.partial_cmp(&lr_max) != Some(std::cmp::Ordering::Less) || cycle_steps == 0 || lr_min < 0.0 => {
                bad(format!("cyclical schedule needs 0 <= lr_min < lr_max, got {lr_min}, {lr_max}"))
            }
            Schedule::Step { factor, period } if period == 0 || factor.is_nan() || factor <= 0.0 => {
                bad("step schedule needs a positive factor and period".into())
            }
            _ => Ok(()),
        }
    }
}

/// Per-block first and second moments plus the step count.
#[derive(Debug, Clone, Default)]
pub struct AdamState {
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

fn check_finite<P: Parameters>(grads: &P) -> Result<()> {
    if let Some((name, _)) = grads.blocks().into_iter().find(|(_, m)| !m.all_finite()) {
        return Err(Error::Numeric(format!("non-finite gradient in {name}")));
    }
    Ok(())
}

fn check_shapes<P: Parameters>(params: &P, grads: &P) -> Result<()> {
    let (a, b) = (params.blocks(), grads.blocks());
    if a.len() != b.len() || a.iter().zip(&b).any(|((_, x), (_, y))| x.shape() != y.shape()) {
        return Err(Error::Argument("gradient shapes do not match parameters".into()));
    }
    Ok(())
}

/// Bias-corrected Adam update. Non-finite gradients are refused and leave
/// both parameters and state untouched.
pub fn adam_step<P: Parameters>(params: &mut P, grads: &P, state: &mut AdamState, lr: f64) -> Result<()> {
    check_shapes(params, grads)?;
    check_finite(grads)?;
    let blocks = grads.blocks();
    if state.m.is_empty() {
        state.m = blocks.iter().map(|(_, g)| vec![0.0; g.len()]).collect();
        state.v = state.m.clone();
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - ADAM_BETA1.powi(t);
    let c2 = 1.0 - ADAM_BETA2.powi(t);
    for (b, ((_, p), (_, g))) in params.blocks_mut().into_iter().zip(&blocks).enumerate() {
        let (m, v) = (&mut state.m[b], &mut state.v[b]);
        for (k, (w, &gk)) in p.as_mut_slice().iter_mut().zip(g.as_slice()).enumerate() {
            m[k] = ADAM_BETA1 * m[k] + (1.0 - ADAM_BETA1) * gk;
            v[k] = ADAM_BETA2 * v[k] + (1.0 - ADAM_BETA2) * gk * gk;
            let m_hat = m[k] / c1;
            let v_hat = v[k] / c2;
            *w -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }
    Ok(())
}

/// `p <- p - lr * g`
pub fn sgd_step<P: Parameters>(params: &mut P, grads: &P, lr: f64) -> Result<()> {
    check_shapes(params, grads)?;
    check_finite(grads)?;
    for ((_, p), (_, g)) in params.blocks_mut().into_iter().zip(grads.blocks()) {
        p.add_scaled(g, -lr);
    }
    Ok(())
}

/// Rescales `grads` so its global L2 norm is at most `max_norm`; returns the
/// norm before clipping.
pub fn clip_global_norm<P: Parameters>(grads: &mut P, max_norm: f64) -> f64 {
    let norm = grads.global_norm();
    if norm > max_norm {
        grads.scale_all(max_norm / norm);
    }
    norm
}

/// One training example: features and, for supervised models, the target
/// symbol sequence (ending in EOS).
#[derive(Debug, Clone)]
pub struct TrainSegment {
    pub features: FeatureMatrix,
    pub target: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_loss: f64,
    pub lr: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters at the end of the epoch with the lowest mean loss.
    pub model: AweModel,
    pub best_epoch: usize,
    pub log: Vec<EpochLog>,
    /// Indices of input segments skipped for exceeding `max_frames`.
    pub skipped: Vec<usize>,
}

/// Segment converted once to `f64` with its target resolved to indices.
struct Prepared {
    index: usize,
    rows: Vec<Vec<f64>>,
    target: Option<Vec<usize>>,
}

fn prepare(model: &AweModel, segments: &[TrainSegment]) -> Result<(Vec<Prepared>, Vec<usize>)> {
    let cfg = &model.config;
    let mut out = Vec::with_capacity(segments.len());
    let mut skipped = Vec::new();
    for (i, s) in segments.iter().enumerate() {
        if s.features.cols() != cfg.input_dim {
            return Err(Error::Argument(format!(
                "segment {i} has dimension {}, model expects {}",
                s.features.cols(),
                cfg.input_dim
            )));
        }
        if s.features.rows() > cfg.max_frames {
            log::warn!(
                "skipping segment {i}: {} frames exceeds max_frames {}",
                s.features.rows(),
                cfg.max_frames
            );
            skipped.push(i);
            continue;
        }
        let target = match (cfg.mode, &s.target) {
            (Mode::SelfSupervised, _) => None,
            (Mode::Supervised, Some(t)) => Some(model.encode_target(t)?),
            (Mode::Supervised, None) => {
                return Err(Error::Argument(format!("segment {i} has no target")));
            }
        };
        out.push(Prepared {
            index: i,
            rows: s.features.to_f64_rows(),
            target,
        });
    }
    if out.is_empty() {
        return Err(Error::Argument("no trainable segments".into()));
    }
    Ok((out, skipped))
}

/// Dropout stream for one segment in one epoch, independent of batching.
fn segment_rng(seed: u64, epoch: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_d0d0);
    rng.set_stream(((epoch as u64) << 32) | index as u64);
    rng
}

fn segment_pass(
    model: &AweModel,
    seg: &Prepared,
    rng: &mut ChaCha8Rng,
    grads: Option<(&mut AweModel, f64)>,
) -> Result<f64> {
    match &seg.target {
        None => model.reconstruction_pass(&seg.rows, Some(rng), grads),
        Some(t) => model.symbol_pass(&seg.rows, t, Some(rng), grads),
    }
}

/// Per-segment losses (with the epoch's dropout masks) and the batch-mean
/// gradient. Each segment runs at its true length.
fn batch_pass(
    model: &AweModel,
    batch: &[&Prepared],
    seed: u64,
    epoch: usize,
) -> Result<(Vec<f64>, AweModel)> {
    let scale = 1.0 / batch.len() as f64;
    let per_segment: Vec<Result<(f64, AweModel)>> = batch
        .par_iter()
        .map(|seg| {
            let mut g = model.zeros_like();
            let mut rng = segment_rng(seed, epoch, seg.index);
            let loss = segment_pass(model, seg, &mut rng, Some((&mut g, scale)))?;
            Ok((loss, g))
        })
        .collect();
    let mut grads = model.zeros_like();
    let mut losses = Vec::with_capacity(batch.len());
    for r in per_segment {
        let (loss, g) = r?;
        losses.push(loss);
        grads.accumulate(&g, 1.0);
    }
    Ok((losses, grads))
}

/// Segment indices sorted by length, sliced into batches, batch order
/// shuffled.
fn make_batches(lengths: &[(usize, usize)], batch_size: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<(usize, usize)> = lengths.to_vec();
    order.sort_unstable();
    let mut batches: Vec<Vec<usize>> = order
        .chunks(batch_size)
        .map(|c| c.iter().map(|&(_, i)| i).collect())
        .collect();
    batches.shuffle(rng);
    batches
}

/// Losses of every segment under `model` as seen in `epoch` (same dropout
/// masks as training would use), computed in batches of `batch_size`.
/// Returned in input order.
pub fn segment_losses(
    model: &AweModel,
    segments: &[TrainSegment],
    batch_size: usize,
    seed: u64,
    epoch: usize,
) -> Result<Vec<f64>> {
    let (prepared, _) = prepare(model, segments)?;
    let lengths: Vec<(usize, usize)> =
        prepared.iter().enumerate().map(|(k, p)| (p.rows.len(), k)).collect();
    let mut shuffle = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![f64::NAN; segments.len()];
    for batch in make_batches(&lengths, batch_size.max(1), &mut shuffle) {
        let refs: Vec<&Prepared> = batch.iter().map(|&k| &prepared[k]).collect();
        let (losses, _) = batch_pass(model, &refs, seed, epoch)?;
        for (p, l) in refs.iter().zip(losses) {
            out[p.index] = l;
        }
    }
    Ok(out)
}

pub fn train(model: AweModel, segments: &[TrainSegment], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if segments.is_empty() {
        return Err(Error::Argument("no training segments".into()));
    }
    let (prepared, skipped) = prepare(&model, segments)?;
    let lengths: Vec<(usize, usize)> =
        prepared.iter().enumerate().map(|(k, p)| (p.rows.len(), k)).collect();

    let mut model = model;
    let mut shuffle = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = AdamState::default();
    let mut step = 0usize;
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, AweModel)> = None;

    for epoch in 0..cfg.epochs {
        let mut total = 0.0;
        let mut lr_t = cfg.schedule.lr_at(cfg.lr, epoch, step);
        for (b, batch) in make_batches(&lengths, cfg.batch_size, &mut shuffle).iter().enumerate() {
            let refs: Vec<&Prepared> = batch.iter().map(|&k| &prepared[k]).collect();
            let (losses, mut grads) = batch_pass(&model, &refs, cfg.seed, epoch).map_err(|e| match e {
                Error::Numeric(m) => Error::Numeric(format!("epoch {epoch}, batch {b}: {m}")),
                other => other,
            })?;
            let batch_sum: f64 = losses.iter().sum();
            if !batch_sum.is_finite() {
                return Err(Error::Numeric(format!("epoch {epoch}, batch {b}: loss diverged")));
            }
            total += batch_sum;
            if let Some(clip) = cfg.grad_clip {
                clip_global_norm(&mut grads, clip);
            }
            lr_t = cfg.schedule.lr_at(cfg.lr, epoch, step);
            let res = match cfg.optimizer {
                Optimizer::Adam => adam_step(&mut model, &grads, &mut adam, lr_t),
                Optimizer::Sgd => sgd_step(&mut model, &grads, lr_t),
            };
            res.map_err(|e| Error::Numeric(format!("epoch {epoch}, batch {b}: {e}")))?;
            step += 1;
        }
        let mean_loss = total / prepared.len() as f64;
        log::debug!("epoch {epoch}: loss {mean_loss:.6} lr {lr_t}");
        log.push(EpochLog {
            epoch,
            mean_loss,
            lr: lr_t,
        });
        if best.as_ref().is_none_or(|(l, _, _)| mean_loss < *l) {
            best = Some((mean_loss, epoch, model.clone()));
        }
    }

    let (model, best_epoch) = match best {
        Some((_, e, m)) => (m, e),
        None => (model, 0),
    };
    Ok(TrainOutcome {
        model,
        best_epoch,
        log,
        skipped,
    })
}

pub fn write_loss_log(path: impl AsRef<Path>, log: &[EpochLog]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("epoch\tmean_loss\tlr\n");
    for e in log {
        out.push_str(&format!("{}\t{}\t{}\n", e.epoch, e.mean_loss, e.lr));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
