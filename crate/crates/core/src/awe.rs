//! The acoustic word embedding model: a bidirectional LSTM encoder whose
//! final states form the embedding, linear bridges from the embedding to the
//! initial decoder states, and a unidirectional LSTM decoder that is fed its
//! own previous output.
//!
//! Self-supervised models reconstruct the clean input frames (MSE);
//! supervised models emit a symbol sequence (NLL). The decoder only exists
//! for training; [`AweModel::embed`] never touches it.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::FeatureMatrix;
use crate::error::{Error, Result};
use crate::nn::{
    self, bilstm_backward, bilstm_forward, BiLayer, Linear, LstmLayerParams, Matrix, Parameters,
    StepCache,
};

pub const START: &str = "<s>";
pub const EOS: &str = "</s>";

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"AWEC";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    SelfSupervised,
    Supervised,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AweConfig {
    pub input_dim: usize,
    pub hidden: usize,
    pub encoder_layers: usize,
    pub mode: Mode,
    /// Output symbols for supervised models, including [`START`] and [`EOS`].
    pub vocab: Vec<String>,
    pub dropout_p: f64,
    pub max_frames: usize,
}

impl AweConfig {
    pub fn self_supervised(input_dim: usize) -> Self {
        Self {
            input_dim,
            hidden: 100,
            encoder_layers: 2,
            mode: Mode::SelfSupervised,
            vocab: Vec::new(),
            dropout_p: 0.3,
            max_frames: 400,
        }
    }

    pub fn supervised(input_dim: usize, vocab: Vec<String>) -> Self {
        Self {
            mode: Mode::Supervised,
            vocab,
            ..Self::self_supervised(input_dim)
        }
    }

    pub fn embedding_dim(&self) -> usize {
        2 * self.hidden
    }

    /// Width of the decoder's per-step input.
    pub fn decoder_input_dim(&self) -> usize {
        match self.mode {
            Mode::SelfSupervised => self.input_dim,
            Mode::Supervised => self.hidden,
        }
    }

    pub fn output_dim(&self) -> usize {
        match self.mode {
            Mode::SelfSupervised => self.input_dim,
            Mode::Supervised => self.vocab.len(),
        }
    }

    pub fn symbol_index(&self, sym: &str) -> Result<usize> {
        self.vocab
            .iter()
            .position(|s| s == sym)
            .ok_or_else(|| Error::Vocabulary(sym.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Argument(m));
        if self.input_dim == 0 || self.hidden == 0 || self.encoder_layers == 0 {
            return bad("input_dim, hidden and encoder_layers must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout_p));
        }
        if self.max_frames == 0 {
            return bad("max_frames must be positive".into());
        }
        if self.mode == Mode::Supervised {
            if self.vocab.is_empty() {
                return bad("supervised model needs a vocabulary".into());
            }
            let mut sorted = self.vocab.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != self.vocab.len() {
                return bad("vocabulary symbols must be distinct".into());
            }
            for required in [START, EOS] {
                if !self.vocab.iter().any(|s| s == required) {
                    return bad(format!("vocabulary lacks {required:?}"));
                }
            }
        }
        Ok(())
    }
}

/// Character vocabulary over `words`: `[START, EOS, sorted distinct chars]`.
pub fn char_vocab<S: AsRef<str>>(words: &[S]) -> Vec<String> {
    let mut chars: Vec<char> = words.iter().flat_map(|w| w.as_ref().chars()).collect();
    chars.sort_unstable();
    chars.dedup();
    [START.to_string(), EOS.to_string()]
        .into_iter()
        .chain(chars.into_iter().map(String::from))
        .collect()
}

/// A word's characters followed by [`EOS`].
pub fn char_targets(word: &str) -> Vec<String> {
    word.chars()
        .map(String::from)
        .chain(std::iter::once(EOS.to_string()))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub segment_id: String,
    pub vector: Vec<f64>,
}

/// Model parameters plus configuration. Also used, zero-initialised, as the
/// gradient accumulator for the same architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct AweModel {
    pub config: AweConfig,
    pub encoder: Vec<BiLayer>,
    pub bridge_h: Vec<Linear>,
    pub bridge_c: Vec<Linear>,
    pub decoder: Vec<LstmLayerParams>,
    pub output: Linear,
    /// `|vocab| x H` symbol embeddings (supervised only).
    pub symbols: Option<Matrix>,
}

impl AweModel {
    fn build(config: AweConfig, mut init: impl FnMut(usize, usize) -> Matrix) -> Result<Self> {
        config.validate()?;
        let (h, layers) = (config.hidden, config.encoder_layers);
        let mut lstm = |input: usize| LstmLayerParams {
            w_ih: init(4 * h, input),
            w_hh: init(4 * h, h),
            b_ih: init(4 * h, 1),
            b_hh: init(4 * h, 1),
        };
        let encoder = (0..layers)
            .map(|l| {
                let i = if l == 0 { config.input_dim } else { 2 * h };
                BiLayer {
                    fwd: lstm(i),
                    bwd: lstm(i),
                }
            })
            .collect();
        let decoder = (0..layers)
            .map(|l| lstm(if l == 0 { config.decoder_input_dim() } else { h }))
            .collect();
        let mut linear = |input: usize, output: usize| Linear {
            w: init(output, input),
            b: init(output, 1),
        };
        let bridge_h = (0..layers).map(|_| linear(2 * h, h)).collect();
        let bridge_c = (0..layers).map(|_| linear(2 * h, h)).collect();
        let output = linear(h, config.output_dim());
        let symbols = (config.mode == Mode::Supervised).then(|| init(config.vocab.len(), h));
        Ok(Self {
            config,
            encoder,
            bridge_h,
            bridge_c,
            decoder,
            output,
            symbols,
        })
    }

    /// Seeded initialisation, uniform in `[-1/sqrt(H), 1/sqrt(H)]`.
    pub fn new<R: Rng + ?Sized>(config: AweConfig, rng: &mut R) -> Result<Self> {
        let bound = 1.0 / (config.hidden as f64).sqrt();
        Self::build(config, |r, c| Matrix::uniform(r, c, bound, rng))
    }

    pub fn zeros(config: AweConfig) -> Result<Self> {
        Self::build(config, Matrix::zeros)
    }

    /// Zeroed copy with the same architecture, for gradient accumulation.
    pub fn zeros_like(&self) -> Self {
        let mut g = self.clone();
        g.zero();
        g
    }

    pub fn encoder_param_count(&self) -> usize {
        self.encoder
            .iter()
            .map(|l| l.fwd.num_params() + l.bwd.num_params())
            .sum()
    }

    fn check_input(&self, x: &FeatureMatrix) -> Result<()> {
        if x.cols() != self.config.input_dim {
            return Err(Error::Argument(format!(
                "feature dimension {} does not match model input {}",
                x.cols(),
                self.config.input_dim
            )));
        }
        if x.rows() > self.config.max_frames {
            return Err(Error::Argument(format!(
                "{} frames exceeds max_frames {}",
                x.rows(),
                self.config.max_frames
            )));
        }
        Ok(())
    }

    /// Concatenated final forward/backward states of the top encoder layer.
    pub fn embed(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        self.check_input(x)?;
        self.embed_rows(&x.to_f64_rows())
    }

    pub fn embed_rows(&self, x: &[Vec<f64>]) -> Result<Vec<f64>> {
        Ok(bilstm_forward(&self.encoder, x)?.embedding)
    }

    pub fn embed_segment(&self, segment_id: &str, x: &FeatureMatrix) -> Result<Embedding> {
        Ok(Embedding {
            segment_id: segment_id.to_string(),
            vector: self.embed(x)?,
        })
    }

    fn require_mode(&self, mode: Mode) -> Result<()> {
        if self.config.mode != mode {
            return Err(Error::State(format!(
                "operation needs a {mode:?} model, this one is {:?}",
                self.config.mode
            )));
        }
        Ok(())
    }

    /// Mean squared reconstruction error; input dropout applied from `rng`.
    pub fn reconstruction_loss<R: Rng + ?Sized>(&self, x: &FeatureMatrix, rng: &mut R) -> Result<f64> {
        self.check_input(x)?;
        self.reconstruction_pass(&x.to_f64_rows(), Some(rng), None)
    }

    /// As [`Self::reconstruction_loss`], also adding `scale * dL/dθ` into `grads`.
    pub fn reconstruction_loss_grad<R: Rng + ?Sized>(
        &self,
        x: &FeatureMatrix,
        rng: &mut R,
        grads: &mut AweModel,
        scale: f64,
    ) -> Result<f64> {
        self.check_input(x)?;
        self.reconstruction_pass(&x.to_f64_rows(), Some(rng), Some((grads, scale)))
    }

    /// Mean per-step negative log-likelihood of `target`, which must end in
    /// [`EOS`]; input dropout applied from `rng`.
    pub fn symbol_loss<R: Rng + ?Sized, S: AsRef<str>>(
        &self,
        x: &FeatureMatrix,
        target: &[S],
        rng: &mut R,
    ) -> Result<f64> {
        self.check_input(x)?;
        let target = self.encode_target(target)?;
        self.symbol_pass(&x.to_f64_rows(), &target, Some(rng), None)
    }

    pub fn symbol_loss_grad<R: Rng + ?Sized, S: AsRef<str>>(
        &self,
        x: &FeatureMatrix,
        target: &[S],
        rng: &mut R,
        grads: &mut AweModel,
        scale: f64,
    ) -> Result<f64> {
        self.check_input(x)?;
        let target = self.encode_target(target)?;
        self.symbol_pass(&x.to_f64_rows(), &target, Some(rng), Some((grads, scale)))
    }

    pub fn encode_target<S: AsRef<str>>(&self, target: &[S]) -> Result<Vec<usize>> {
        self.require_mode(Mode::Supervised)?;
        if target.last().map(AsRef::as_ref) != Some(EOS) {
            return Err(Error::Argument(format!("target must end with {EOS:?}")));
        }
        target
            .iter()
            .map(|s| self.config.symbol_index(s.as_ref()))
            .collect()
    }

    /// Loss (and optionally gradients) for one segment of `f64` frames.
    ///
    /// With `rng = None` dropout is disabled.
    pub fn reconstruction_pass<R: Rng + ?Sized>(
        &self,
        x: &[Vec<f64>],
        rng: Option<&mut R>,
        grads: Option<(&mut AweModel, f64)>,
    ) -> Result<f64> {
        self.require_mode(Mode::SelfSupervised)?;
        let noisy = self.apply_dropout(x, rng)?;
        let enc = bilstm_forward(&self.encoder, &noisy)?;
        let t_len = x.len();
        let dim = self.config.input_dim;
        let norm = (t_len * dim) as f64;

        let mut dec = self.decoder_start(&enc.embedding);
        let mut outputs: Vec<Vec<f64>> = Vec::with_capacity(t_len);
        let mut input = vec![0.0; dim];
        for _ in 0..t_len {
            let y = dec.step(self, &input);
            input = y.clone();
            outputs.push(y);
        }
        let loss = outputs
            .iter()
            .zip(x)
            .flat_map(|(y, t)| y.iter().zip(t).map(|(a, b)| (a - b) * (a - b)))
            .sum::<f64>()
            / norm;
        if !loss.is_finite() {
            return Err(Error::Numeric(format!("non-finite reconstruction loss {loss}")));
        }

        if let Some((grads, scale)) = grads {
            let mut back = DecoderBackward::new(self);
            let mut d_feedback = vec![0.0; dim];
            for t in (0..t_len).rev() {
                let dy: Vec<f64> = outputs[t]
                    .iter()
                    .zip(&x[t])
                    .zip(&d_feedback)
                    .map(|((y, tgt), fb)| scale * 2.0 * (y - tgt) / norm + fb)
                    .collect();
                d_feedback = back.step(self, &dec, t, &dy, grads);
            }
            let d_emb = back.finish(self, &enc.embedding, grads);
            bilstm_backward(&self.encoder, &enc, &d_emb, &mut grads.encoder);
        }
        Ok(loss)
    }

    /// Supervised counterpart of [`Self::reconstruction_pass`]; `target`
    /// holds vocabulary indices.
    pub fn symbol_pass<R: Rng + ?Sized>(
        &self,
        x: &[Vec<f64>],
        target: &[usize],
        rng: Option<&mut R>,
        grads: Option<(&mut AweModel, f64)>,
    ) -> Result<f64> {
        self.require_mode(Mode::Supervised)?;
        if target.is_empty() {
            return Err(Error::Argument("empty target".into()));
        }
        let table = self.symbols.as_ref().expect("supervised model has symbols");
        let noisy = self.apply_dropout(x, rng)?;
        let enc = bilstm_forward(&self.encoder, &noisy)?;
        let start = self.config.symbol_index(START)?;

        let mut dec = self.decoder_start(&enc.embedding);
        let mut fed = Vec::with_capacity(target.len());
        let mut logit_grads = Vec::with_capacity(target.len());
        let mut sym = start;
        let mut loss = 0.0;
        for &tgt in target {
            fed.push(sym);
            let logits = dec.step(self, table.row(sym));
            let (l, g) = nn::nll_with_grad(&logits, tgt);
            loss += l;
            logit_grads.push(g);
            sym = nn::argmax(&logits);
        }
        let steps = target.len() as f64;
        loss /= steps;
        if !loss.is_finite() {
            return Err(Error::Numeric(format!("non-finite symbol loss {loss}")));
        }

        if let Some((grads, scale)) = grads {
            let mut back = DecoderBackward::new(self);
            for t in (0..target.len()).rev() {
                let dy: Vec<f64> = logit_grads[t].iter().map(|g| scale * g / steps).collect();
                let d_in = back.step(self, &dec, t, &dy, grads);
                let row = grads.symbols.as_mut().expect("supervised grads").row_mut(fed[t]);
                for (r, d) in row.iter_mut().zip(&d_in) {
                    *r += d;
                }
            }
            let d_emb = back.finish(self, &enc.embedding, grads);
            bilstm_backward(&self.encoder, &enc, &d_emb, &mut grads.encoder);
        }
        Ok(loss)
    }

    fn apply_dropout<R: Rng + ?Sized>(
        &self,
        x: &[Vec<f64>],
        rng: Option<&mut R>,
    ) -> Result<Vec<Vec<f64>>> {
        match rng {
            Some(rng) => nn::input_dropout(x, self.config.dropout_p, true, rng),
            None => Ok(x.to_vec()),
        }
    }

    fn decoder_start(&self, embedding: &[f64]) -> DecoderState {
        let h: Vec<Vec<f64>> = self.bridge_h.iter().map(|b| b.forward(embedding)).collect();
        let c: Vec<Vec<f64>> = self.bridge_c.iter().map(|b| b.forward(embedding)).collect();
        DecoderState {
            h,
            c,
            steps: Vec::new(),
        }
    }

    pub fn save_checkpoint(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.encode_checkpoint()).map_err(|e| Error::io(path, e))
    }

    pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode_checkpoint(&bytes, path)
    }

    /// `AWEC | version u32 | config_len u32 | config JSON | n_blocks u32 |
    /// (name_len u32 | name | rows u32 | cols u32 | f32 values)*`, little-endian.
    pub fn encode_checkpoint(&self) -> Vec<u8> {
        let config = serde_json::to_vec(&self.config).expect("config serializes");
        let mut buf = Vec::new();
        let put = |buf: &mut Vec<u8>, v: usize| buf.extend_from_slice(&(v as u32).to_le_bytes());
        buf.extend_from_slice(CHECKPOINT_MAGIC);
        put(&mut buf, CHECKPOINT_VERSION as usize);
        put(&mut buf, config.len());
        buf.extend_from_slice(&config);
        let blocks = self.blocks();
        put(&mut buf, blocks.len());
        for (name, m) in blocks {
            put(&mut buf, name.len());
            buf.extend_from_slice(name.as_bytes());
            put(&mut buf, m.rows());
            put(&mut buf, m.cols());
            for &v in m.as_slice() {
                buf.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        buf
    }

    pub fn decode_checkpoint(bytes: &[u8], file: &Path) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0, file };
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(Error::corrupt(file, "bad magic"));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::corrupt(file, format!("unsupported version {version}")));
        }
        let n = r.u32()? as usize;
        let config: AweConfig = serde_json::from_slice(r.take(n)?)
            .map_err(|e| Error::corrupt(file, format!("config: {e}")))?;
        let mut model =
            Self::zeros(config).map_err(|e| Error::corrupt(file, format!("config: {e}")))?;
        let n_blocks = r.u32()? as usize;
        let mut blocks = model.blocks_mut();
        if n_blocks != blocks.len() {
            return Err(Error::corrupt(
                file,
                format!("{n_blocks} parameter blocks, architecture needs {}", blocks.len()),
            ));
        }
        for (name, m) in blocks.iter_mut() {
            let len = r.u32()? as usize;
            let got = r.take(len)?;
            if got != name.as_bytes() {
                return Err(Error::corrupt(
                    file,
                    format!("expected block {name:?}, found {:?}", String::from_utf8_lossy(got)),
                ));
            }
            let (rows, cols) = (r.u32()? as usize, r.u32()? as usize);
            if (rows, cols) != m.shape() {
                return Err(Error::corrupt(
                    file,
                    format!("block {name:?} is {rows}x{cols}, expected {:?}", m.shape()),
                ));
            }
            let raw = r.take(4 * rows * cols)?;
            for (dst, c) in m.as_mut_slice().iter_mut().zip(raw.chunks_exact(4)) {
                *dst = f32::from_le_bytes(c.try_into().unwrap()) as f64;
            }
        }
        drop(blocks);
        if r.pos != bytes.len() {
            return Err(Error::corrupt(file, "trailing bytes"));
        }
        if !model.all_finite() {
            return Err(Error::corrupt(file, "non-finite parameters"));
        }
        Ok(model)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    file: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::corrupt(self.file, "truncated"))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

/// Forward state of the decoder, with per-step caches.
struct DecoderState {
    h: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    /// Per step, per layer.
    steps: Vec<Vec<StepCache>>,
}

impl DecoderState {
    /// Runs one step through all layers and returns the output head's value.
    fn step(&mut self, model: &AweModel, input: &[f64]) -> Vec<f64> {
        let mut layer_in = input.to_vec();
        let mut caches = Vec::with_capacity(model.decoder.len());
        for (l, p) in model.decoder.iter().enumerate() {
            let s = nn::step_forward(p, &layer_in, &self.h[l], &self.c[l]);
            self.h[l] = s.h.clone();
            self.c[l] = s.c.clone();
            layer_in = s.h.clone();
            caches.push(s);
        }
        self.steps.push(caches);
        model.output.forward(&layer_in)
    }
}

/// Reverse-time accumulator for the decoder's recurrent gradients.
struct DecoderBackward {
    dh: Vec<Vec<f64>>,
    dc: Vec<Vec<f64>>,
}

impl DecoderBackward {
    fn new(model: &AweModel) -> Self {
        let h = model.config.hidden;
        let l = model.decoder.len();
        Self {
            dh: vec![vec![0.0; h]; l],
            dc: vec![vec![0.0; h]; l],
        }
    }

    /// Back-propagates `dy` (gradient on step `t`'s head output) and returns
    /// the gradient on that step's decoder input.
    fn step(
        &mut self,
        model: &AweModel,
        state: &DecoderState,
        t: usize,
        dy: &[f64],
        grads: &mut AweModel,
    ) -> Vec<f64> {
        let caches = &state.steps[t];
        let top = &caches.last().unwrap().h;
        let mut d_out = model.output.backward(top, dy, &mut grads.output);
        for l in (0..model.decoder.len()).rev() {
            let dh: Vec<f64> = d_out.iter().zip(&self.dh[l]).map(|(a, b)| a + b).collect();
            let (dx, dhp, dcp) =
                nn::step_backward(&model.decoder[l], &caches[l], &dh, &self.dc[l], &mut grads.decoder[l]);
            self.dh[l] = dhp;
            self.dc[l] = dcp;
            d_out = dx;
        }
        d_out
    }

    /// Gradients through the bridges; returns the gradient on the embedding.
    fn finish(self, model: &AweModel, embedding: &[f64],
        grads: &mut AweModel,
    ) -> Vec<f64> {
        let mut d_emb = vec![0.0; embedding.len()];
        for l in 0..model.decoder.len() {
            let a = model.bridge_h[l].backward(embedding, &self.dh[l], &mut grads.bridge_h[l]);
            let b = model.bridge_c[l].backward(embedding, &self.dc[l], &mut grads.bridge_c[l]);
            for ((d, x), y) in d_emb.iter_mut().zip(a).zip(b) {
                *d += x + y;
            }
        }
        d_emb
    }
}

impl Parameters for AweModel {
    fn blocks(&self) -> Vec<(String, &Matrix)> {
        let mut v = Vec::new();
        for (l, layer) in self.encoder.iter().enumerate() {
            layer.fwd.push_blocks(&format!("encoder.{l}.fwd"), &mut v);
            layer.bwd.push_blocks(&format!("encoder.{l}.bwd"), &mut v);
        }
        for (l, (bh, bc)) in self.bridge_h.iter().zip(&self.bridge_c).enumerate() {
            bh.push_blocks(&format!("bridge.{l}.h"), &mut v);
            bc.push_blocks(&format!("bridge.{l}.c"), &mut v);
        }
        for (l, p) in self.decoder.iter().enumerate() {
            p.push_blocks(&format!("decoder.{l}"), &mut v);
        }
        self.output.push_blocks("output", &mut v);
        if let Some(s) = &self.symbols {
            v.push(("symbols".to_string(), s));
        }
        v
    }

    fn blocks_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        let mut v = Vec::new();
        for (l, layer) in self.encoder.iter_mut().enumerate() {
            layer.fwd.push_blocks_mut(&format!("encoder.{l}.fwd"), &mut v);
            layer.bwd.push_blocks_mut(&format!("encoder.{l}.bwd"), &mut v);
        }
        for (l, (bh, bc)) in self.bridge_h.iter_mut().zip(&mut self.bridge_c).enumerate() {
            bh.push_blocks_mut(&format!("bridge.{l}.h"), &mut v);
            bc.push_blocks_mut(&format!("bridge.{l}.c"), &mut v);
        }
        for (l, p) in self.decoder.iter_mut().enumerate() {
            p.push_blocks_mut(&format!("decoder.{l}"), &mut v);
        }
        self.output.push_blocks_mut("output", &mut v);
        if let Some(s) = &mut self.symbols {
            v.push(("symbols".to_string(), s));
        }
        v
    }
}

/// Feature front-ends with their encoder shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureProfile {
    Mfcc,
    Wav2Vec,
    Mcpc,
    Xlsr53,
}

impl FeatureProfile {
    pub const ALL: [FeatureProfile; 4] = [Self::Mfcc, Self::Wav2Vec, Self::Mcpc, Self::Xlsr53];

    pub fn name(self) -> &'static str {
        match self {
            Self::Mfcc => "MFCC",
            Self::Wav2Vec => "Wav2Vec",
            Self::Mcpc => "MCPC",
            Self::Xlsr53 => "XLSR-53",
        }
    }

    pub fn input_dim(self) -> usize {
        match self {
            Self::Mfcc => 39,
            Self::Wav2Vec => 768,
            Self::Mcpc => 256,
            Self::Xlsr53 => 1024,
        }
    }

    /// `(hidden, layers)`; self-supervised XLSR-53 uses a single wider layer.
    pub fn encoder_shape(self, mode: Mode) -> (usize, usize) {
        match (self, mode) {
            (Self::Xlsr53, Mode::SelfSupervised) => (150, 1),
            _ => (100, 2),
        }
    }

    pub fn config(self, mode: Mode, vocab: Vec<String>) -> AweConfig {
        let (hidden, encoder_layers) = self.encoder_shape(mode);
        let base = match mode {
            Mode::SelfSupervised => AweConfig::self_supervised(self.input_dim()),
            Mode::Supervised => AweConfig::supervised(self.input_dim(), vocab),
        };
        AweConfig {
            hidden,
            encoder_layers,
            ..base
        }
    }
}
