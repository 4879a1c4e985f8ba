//! Minimal numerical core for the recurrent encoder-decoder.
//!
//! Everything trains in `f64`. Gradients are computed by hand-written
//! reverse passes over cached forward activations; [`gradcheck`] compares
//! them against central finite differences.

use rand::Rng;

use crate::error::{Error, Result};

/// Dense row-major matrix. Vectors are stored as `n x 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn vector(n: usize) -> Self {
        Self::zeros(n, 1)
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Argument(format!(
                "{rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Uniform in `[-bound, bound]`.
    pub fn uniform<R: Rng + ?Sized>(rows: usize, cols: usize, bound: f64, rng: &mut R) -> Self {
        let data = (0..rows * cols).map(|_| rng.gen_range(-bound..=bound)).collect();
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    /// `self * x`
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `out += self^T * y`
    pub fn add_matvec_t(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.rows);
        for (row, &yr) in self.data.chunks_exact(self.cols).zip(y) {
            if yr != 0.0 {
                for (o, a) in out.iter_mut().zip(row) {
                    *o += a * yr;
                }
            }
        }
    }

    /// `self += y * x^T`
    pub fn add_outer(&mut self, y: &[f64], x: &[f64]) {
        for (row, &yr) in self.data.chunks_exact_mut(self.cols).zip(y) {
            if yr != 0.0 {
                for (w, xv) in row.iter_mut().zip(x) {
                    *w += yr * xv;
                }
            }
        }
    }

    /// `self += v` elementwise (for vectors stored as `n x 1`).
    pub fn add_slice(&mut self, v: &[f64]) {
        for (a, b) in self.data.iter_mut().zip(v) {
            *a += b;
        }
    }

    pub fn add_scaled(&mut self, other: &Matrix, scale: f64) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn sum_squares(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Named parameter blocks, used by optimizers, checkpoints and gradient checks.
///
/// `blocks` and `blocks_mut` must list the same blocks in the same order.
pub trait Parameters {
    fn blocks(&self) -> Vec<(String, &Matrix)>;
    fn blocks_mut(&mut self) -> Vec<(String, &mut Matrix)>;

    fn num_params(&self) -> usize {
        self.blocks().iter().map(|(_, m)| m.len()).sum()
    }

    fn zero(&mut self) {
        for (_, m) in self.blocks_mut() {
            m.fill(0.0);
        }
    }

    fn global_norm(&self) -> f64 {
        self.blocks().iter().map(|(_, m)| m.sum_squares()).sum::<f64>().sqrt()
    }

    fn all_finite(&self) -> bool {
        self.blocks().iter().all(|(_, m)| m.all_finite())
    }

    /// `self += scale * other`, block by block.
    fn accumulate(&mut self, other: &Self, scale: f64)
    where
        Self: Sized,
    {
        for ((_, a), (_, b)) in self.blocks_mut().into_iter().zip(other.blocks()) {
            a.add_scaled(b, scale);
        }
    }

    fn scale_all(&mut self, s: f64) {
        for (_, m) in self.blocks_mut() {
            m.scale(s);
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// One LSTM layer, gates ordered (input, forget, cell, output).
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayerParams {
    pub w_ih: Matrix,
    pub w_hh: Matrix,
    pub b_ih: Matrix,
    pub b_hh: Matrix,
}

impl LstmLayerParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w_ih: Matrix::zeros(4 * hidden, input),
            w_hh: Matrix::zeros(4 * hidden, hidden),
            b_ih: Matrix::vector(4 * hidden),
            b_hh: Matrix::vector(4 * hidden),
        }
    }

    /// Every weight and bias uniform in `[-1/sqrt(H), 1/sqrt(H)]`.
    pub fn init<R: Rng + ?Sized>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let k = 1.0 / (hidden as f64).sqrt();
        Self {
            w_ih: Matrix::uniform(4 * hidden, input, k, rng),
            w_hh: Matrix::uniform(4 * hidden, hidden, k, rng),
            b_ih: Matrix::uniform(4 * hidden, 1, k, rng),
            b_hh: Matrix::uniform(4 * hidden, 1, k, rng),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_ih.cols()
    }

    pub fn hidden(&self) -> usize {
        self.w_hh.cols()
    }

    pub fn num_params(&self) -> usize {
        self.w_ih.len() + self.w_hh.len() + self.b_ih.len() + self.b_hh.len()
    }

    fn check(&self) -> Result<()> {
        let h = self.hidden();
        let ok = self.w_hh.rows() == 4 * h
            && self.w_ih.rows() == 4 * h
            && self.b_ih.shape() == (4 * h, 1)
            && self.b_hh.shape() == (4 * h, 1);
        if !ok {
            return Err(Error::Argument("inconsistent LSTM parameter shapes".into()));
        }
        Ok(())
    }

    pub fn push_blocks<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Matrix)>) {
        out.push((format!("{prefix}.w_ih"), &self.w_ih));
        out.push((format!("{prefix}.w_hh"), &self.w_hh));
        out.push((format!("{prefix}.b_ih"), &self.b_ih));
        out.push((format!("{prefix}.b_hh"), &self.b_hh));
    }

    pub fn push_blocks_mut<'a>(
        &'a mut self,
        prefix: &str,
        out: &mut Vec<(String, &'a mut Matrix)>,
    ) {
        out.push((format!("{prefix}.w_ih"), &mut self.w_ih));
        out.push((format!("{prefix}.w_hh"), &mut self.w_hh));
        out.push((format!("{prefix}.b_ih"), &mut self.b_ih));
        out.push((format!("{prefix}.b_hh"), &mut self.b_hh));
    }
}

impl Parameters for LstmLayerParams {
    fn blocks(&self) -> Vec<(String, &Matrix)> {
        let mut v = Vec::with_capacity(4);
        self.push_blocks("lstm", &mut v);
        v
    }

    fn blocks_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        let mut v = Vec::with_capacity(4);
        self.push_blocks_mut("lstm", &mut v);
        v
    }
}

/// Activations of one cell step, kept for the reverse pass.
#[derive(Debug, Clone)]
pub struct StepCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    tanh_c: Vec<f64>,
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

pub fn step_forward(p: &LstmLayerParams, x: &[f64], h: &[f64], c: &[f64]) -> StepCache {
    let hd = p.hidden();
    let mut z = p.w_ih.matvec(x);
    for ((zv, a), (b1, b2)) in z
        .iter_mut()
        .zip(p.w_hh.matvec(h))
        .zip(p.b_ih.as_slice().iter().zip(p.b_hh.as_slice()))
    {
        *zv += a + b1 + b2;
    }
    let i: Vec<f64> = z[..hd].iter().map(|&v| sigmoid(v)).collect();
    let f: Vec<f64> = z[hd..2 * hd].iter().map(|&v| sigmoid(v)).collect();
    let g: Vec<f64> = z[2 * hd..3 * hd].iter().map(|v| v.tanh()).collect();
    let o: Vec<f64> = z[3 * hd..].iter().map(|&v| sigmoid(v)).collect();
    let c_new: Vec<f64> = (0..hd).map(|k| f[k] * c[k] + i[k] * g[k]).collect();
    let tanh_c: Vec<f64> = c_new.iter().map(|v| v.tanh()).collect();
    let h_new = (0..hd).map(|k| o[k] * tanh_c[k]).collect();
    StepCache {
        x: x.to_vec(),
        h_prev: h.to_vec(),
        c_prev: c.to_vec(),
        i,
        f,
        g,
        o,
        tanh_c,
        h: h_new,
        c: c_new,
    }
}

/// Reverse pass of one step. `dh`, `dc` are the gradients on this step's
/// outputs; returns gradients on `(x, h_prev, c_prev)` and accumulates
/// parameter gradients into `grads`.
pub fn step_backward(
    p: &LstmLayerParams,
    s: &StepCache,
    dh: &[f64],
    dc: &[f64],
    grads: &mut LstmLayerParams,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let hd = p.hidden();
    let mut dz = vec![0.0; 4 * hd];
    let mut dc_prev = vec![0.0; hd];
    for k in 0..hd {
        let d_o = dh[k] * s.tanh_c[k];
        let dct = dc[k] + dh[k] * s.o[k] * (1.0 - s.tanh_c[k] * s.tanh_c[k]);
        let di = dct * s.g[k];
        let dg = dct * s.i[k];
        let df = dct * s.c_prev[k];
        dc_prev[k] = dct * s.f[k];
        dz[k] = di * s.i[k] * (1.0 - s.i[k]);
        dz[hd + k] = df * s.f[k] * (1.0 - s.f[k]);
        dz[2 * hd + k] = dg * (1.0 - s.g[k] * s.g[k]);
        dz[3 * hd + k] = d_o * s.o[k] * (1.0 - s.o[k]);
    }
    grads.w_ih.add_outer(&dz, &s.x);
    grads.w_hh.add_outer(&dz, &s.h_prev);
    grads.b_ih.add_slice(&dz);
    grads.b_hh.add_slice(&dz);
    let mut dx = vec![0.0; s.x.len()];
    p.w_ih.add_matvec_t(&dz, &mut dx);
    let mut dh_prev = vec![0.0; hd];
    p.w_hh.add_matvec_t(&dz, &mut dh_prev);
    (dx, dh_prev, dc_prev)
}

/// Single gated update: returns `(h', c')`.
pub fn lstm_cell_step(
    p: &LstmLayerParams,
    x: &[f64],
    h: &[f64],
    c: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    p.check()?;
    if x.len() != p.input_dim() || h.len() != p.hidden() || c.len() != p.hidden() {
        return Err(Error::Argument(format!(
            "cell expects x[{}], h[{}], c[{}]; got x[{}], h[{}], c[{}]",
            p.input_dim(),
            p.hidden(),
            p.hidden(),
            x.len(),
            h.len(),
            c.len()
        )));
    }
    let s = step_forward(p, x, h, c);
    Ok((s.h, s.c))
}

/// A unidirectional run over a whole sequence.
#[derive(Debug, Clone)]
pub struct LstmRun {
    pub steps: Vec<StepCache>,
}

impl LstmRun {
    pub fn forward(p: &LstmLayerParams, xs: &[Vec<f64>], h0: &[f64], c0: &[f64]) -> Self {
        let mut steps: Vec<StepCache> = Vec::with_capacity(xs.len());
        for x in xs {
            let s = match steps.last() {
                Some(prev) => step_forward(p, x, &prev.h, &prev.c),
                None => step_forward(p, x, h0, c0),
            };
            steps.push(s);
        }
        Self { steps }
    }

    pub fn outputs(&self) -> Vec<Vec<f64>> {
        self.steps.iter().map(|s| s.h.clone()).collect()
    }

    pub fn last_h(&self) -> &[f64] {
        &self.steps.last().expect("non-empty run").h
    }

    /// `dhs[t]` is the gradient on output `h_t`. Returns `(dxs, dh0, dc0)`.
    pub fn backward(
        &self,
        p: &LstmLayerParams,
        dhs: &[Vec<f64>],
        grads: &mut LstmLayerParams,
    ) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
        let hd = p.hidden();
        let mut dh_next = vec![0.0; hd];
        let mut dc_next = vec![0.0; hd];
        let mut dxs = vec![Vec::new(); self.steps.len()];
        for t in (0..self.steps.len()).rev() {
            let dh: Vec<f64> = dhs[t].iter().zip(&dh_next).map(|(a, b)| a + b).collect();
            let (dx, dhp, dcp) = step_backward(p, &self.steps[t], &dh, &dc_next, grads);
            dxs[t] = dx;
            dh_next = dhp;
            dc_next = dcp;
        }
        (dxs, dh_next, dc_next)
    }
}

/// Forward and backward parameters for one bidirectional layer.
#[derive(Debug, Clone, PartialEq)]
pub struct BiLayer {
    pub fwd: LstmLayerParams,
    pub bwd: LstmLayerParams,
}

/// Cached bidirectional stack activations.
#[derive(Debug, Clone)]
pub struct BiLstmCache {
    /// Per layer: forward run and backward run (the latter over reversed time).
    runs: Vec<(LstmRun, LstmRun)>,
    pub embedding: Vec<f64>,
}

impl BiLstmCache {
    /// Per layer, per time step: `[h_fwd_t, h_bwd_t]`.
    pub fn layer_outputs(&self) -> Vec<Vec<Vec<f64>>> {
        self.runs.iter().map(|(f, b)| concat_directions(f, b)).collect()
    }
}

fn concat_directions(f: &LstmRun, b: &LstmRun) -> Vec<Vec<f64>> {
    let t_len = f.steps.len();
    (0..t_len)
        .map(|t| {
            let mut v = f.steps[t].h.clone();
            v.extend_from_slice(&b.steps[t_len - 1 - t].h);
            v
        })
        .collect()
}

fn check_stack(layers: &[BiLayer], input_dim: usize) -> Result<()> {
    if layers.is_empty() {
        return Err(Error::Argument("encoder needs at least one layer".into()));
    }
    let mut expect = input_dim;
    for (l, layer) in layers.iter().enumerate() {
        layer.fwd.check()?;
        layer.bwd.check()?;
        if layer.fwd.input_dim() != expect || layer.bwd.input_dim() != expect {
            return Err(Error::Argument(format!(
                "layer {l} expects input {expect}, has {}/{}",
                layer.fwd.input_dim(),
                layer.bwd.input_dim()
            )));
        }
        if layer.fwd.hidden() != layer.bwd.hidden() {
            return Err(Error::Argument(format!("layer {l} directions disagree on H")));
        }
        expect = 2 * layer.fwd.hidden();
    }
    Ok(())
}

/// Runs the bidirectional stack with zero initial states and caches
/// everything needed for [`bilstm_backward`].
pub fn bilstm_forward(layers: &[BiLayer], x: &[Vec<f64>]) -> Result<BiLstmCache> {
    if x.is_empty() {
        return Err(Error::Argument("empty sequence".into()));
    }
    check_stack(layers, x[0].len())?;
    if x.iter().any(|r| r.len() != x[0].len()) {
        return Err(Error::Argument("ragged input sequence".into()));
    }
    let mut runs = Vec::with_capacity(layers.len());
    let mut input = x.to_vec();
    for layer in layers {
        let h = layer.fwd.hidden();
        let zeros = vec![0.0; h];
        let f = LstmRun::forward(&layer.fwd, &input, &zeros, &zeros);
        let reversed: Vec<Vec<f64>> = input.iter().rev().cloned().collect();
        let b = LstmRun::forward(&layer.bwd, &reversed, &zeros, &zeros);
        input = concat_directions(&f, &b);
        runs.push((f, b));
    }
    let (f, b) = runs.last().unwrap();
    let mut embedding = f.last_h().to_vec();
    embedding.extend_from_slice(b.last_h());
    Ok(BiLstmCache { runs, embedding })
}

/// Row-major `T x d` activations.
pub type Sequence = Vec<Vec<f64>>;

/// Per-layer outputs (`T x 2H` each) and the embedding
/// `[h_fwd at t=T, h_bwd at t=1]` of the last layer.
pub fn bilstm_encode(layers: &[BiLayer], x: &[Vec<f64>]) -> Result<(Vec<Sequence>, Vec<f64>)> {
    let cache = bilstm_forward(layers, x)?;
    Ok((cache.layer_outputs(), cache.embedding))
}

/// Reverse pass from a gradient on the embedding. Accumulates into `grads`
/// (same shapes as `layers`) and returns the gradient on the input sequence.
pub fn bilstm_backward(
    layers: &[BiLayer],
    cache: &BiLstmCache,
    d_embedding: &[f64],
    grads: &mut [BiLayer],
) -> Vec<Vec<f64>> {
    let t_len = cache.runs[0].0.steps.len();
    let last = layers.len() - 1;
    let h = layers[last].fwd.hidden();
    // gradient on layer outputs, per time step, split per direction
    let mut d_fwd = vec![vec![0.0; h]; t_len];
    let mut d_bwd = vec![vec![0.0; h]; t_len]; // indexed in the bwd run's own time
    d_fwd[t_len - 1].copy_from_slice(&d_embedding[..h]);
    d_bwd[t_len - 1].copy_from_slice(&d_embedding[h..]);

    let mut d_input = Vec::new();
    for l in (0..layers.len()).rev() {
        let (f, b) = &cache.runs[l];
        let (dx_f, _, _) = f.backward(&layers[l].fwd, &d_fwd, &mut grads[l].fwd);
        let (dx_b, _, _) = b.backward(&layers[l].bwd, &d_bwd, &mut grads[l].bwd);
        let dx: Vec<Vec<f64>> = (0..t_len)
            .map(|t| {
                dx_f[t]
                    .iter()
                    .zip(&dx_b[t_len - 1 - t])
                    .map(|(a, b)| a + b)
                    .collect()
            })
            .collect();
        if l > 0 {
            let hp = layers[l - 1].fwd.hidden();
            d_fwd = dx.iter().map(|v| v[..hp].to_vec()).collect();
            d_bwd = (0..t_len).map(|s| dx[t_len - 1 - s][hp..].to_vec()).collect();
        } else {
            d_input = dx;
        }
    }
    d_input
}

/// Affine map `y = W x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub w: Matrix,
    pub b: Matrix,
}

impl Linear {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            w: Matrix::zeros(output, input),
            b: Matrix::vector(output),
        }
    }

    pub fn init<R: Rng + ?Sized>(input: usize, output: usize, bound: f64, rng: &mut R) -> Self {
        Self {
            w: Matrix::uniform(output, input, bound, rng),
            b: Matrix::uniform(output, 1, bound, rng),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.w.matvec(x);
        for (v, b) in y.iter_mut().zip(self.b.as_slice()) {
            *v += b;
        }
        y
    }

    /// Accumulates into `grads`; returns the gradient on `x`.
    pub fn backward(&self, x: &[f64], dy: &[f64], grads: &mut Linear) -> Vec<f64> {
        grads.w.add_outer(dy, x);
        grads.b.add_slice(dy);
        let mut dx = vec![0.0; x.len()];
        self.w.add_matvec_t(dy, &mut dx);
        dx
    }

    pub fn push_blocks<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Matrix)>) {
        out.push((format!("{prefix}.w"), &self.w));
        out.push((format!("{prefix}.b"), &self.b));
    }

    pub fn push_blocks_mut<'a>(
        &'a mut self,
        prefix: &str,
        out: &mut Vec<(String, &'a mut Matrix)>,
    ) {
        out.push((format!("{prefix}.w"), &mut self.w));
        out.push((format!("{prefix}.b"), &mut self.b));
    }
}

impl Parameters for Linear {
    fn blocks(&self) -> Vec<(String, &Matrix)> {
        let mut v = Vec::new();
        self.push_blocks("linear", &mut v);
        v
    }

    fn blocks_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        let mut v = Vec::new();
        self.push_blocks_mut("linear", &mut v);
        v
    }
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    logits.iter().map(|v| v - lse).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    log_softmax(logits).into_iter().map(f64::exp).collect()
}

/// Negative log-likelihood of `target` and its gradient w.r.t. the logits.
pub fn nll_with_grad(logits: &[f64], target: usize) -> (f64, Vec<f64>) {
    let logp = log_softmax(logits);
    let mut grad: Vec<f64> = logp.iter().map(|v| v.exp()).collect();
    grad[target] -= 1.0;
    (-logp[target], grad)
}

/// Index of the largest entry; the first wins on ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Inverted dropout. In training each entry is zeroed with probability `p`
/// and survivors are scaled by `1/(1-p)`; in evaluation this is the identity.
pub fn input_dropout<R: Rng + ?Sized>(
    x: &[Vec<f64>],
    p: f64,
    training: bool,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Argument(format!("dropout probability {p} outside [0, 1)")));
    }
    if !training || p == 0.0 {
        return Ok(x.to_vec());
    }
    let keep = 1.0 / (1.0 - p);
    Ok(x.iter()
        .map(|row| {
            row.iter()
                .map(|&v| if rng.gen::<f64>() < p { 0.0 } else { v * keep })
                .collect()
        })
        .collect())
}

/// Encoder parameter count with the double-bias gate form:
/// per layer and direction `4 (H (I_l + H) + 2H)`, where `I_1 = I` and later
/// layers see `H` (unidirectional) or `2H` (bidirectional) inputs.
pub fn count_encoder_params(input: usize, hidden: usize, layers: usize, bidirectional: bool) -> usize {
    let dirs = if bidirectional { 2 } else { 1 };
    (0..layers)
        .map(|l| {
            let i_l = if l == 0 { input } else { dirs * hidden };
            dirs * 4 * (hidden * (i_l + hidden) + 2 * hidden)
        })
        .sum()
}

pub mod gradcheck {
    //! Central finite-difference verification of analytic gradients.

    use super::Parameters;

    /// `|a - n| / max(|a|, |n|, DENOM_FLOOR)`; the floor keeps entries whose
    /// true gradient is (near) zero from dividing finite-difference noise by
    /// nothing.
    pub const DENOM_FLOOR: f64 = 1e-6;

    #[derive(Debug, Clone)]
    pub struct GradCheckReport {
        pub checked: usize,
        pub max_rel_error: f64,
        pub worst: Option<(String, usize, f64, f64)>,
    }

    impl GradCheckReport {
        pub fn passes(&self, tol: f64) -> bool {
            self.max_rel_error < tol
        }
    }

    pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
        (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(DENOM_FLOOR)
    }

    /// Perturbs every parameter of a clone of `params` by `+-eps` and compares
    /// `(L(p+eps) - L(p-eps)) / 2eps` with `analytic`.
    pub fn check<P, F>(params: &P, analytic: &P, eps: f64, mut loss: F) -> GradCheckReport
    where
        P: Parameters + Clone,
        F: FnMut(&P) -> f64,
    {
        let mut probe = params.clone();
        let grads: Vec<(String, Vec<f64>)> = analytic
            .blocks()
            .into_iter()
            .map(|(n, m)| (n, m.as_slice().to_vec()))
            .collect();
        let mut report = GradCheckReport {
            checked: 0,
            max_rel_error: 0.0,
            worst: None,
        };
        for (b, (name, g)) in grads.iter().enumerate() {
            for (k, &a) in g.iter().enumerate() {
                let orig = probe.blocks()[b].1.as_slice()[k];
                probe.blocks_mut()[b].1.as_mut_slice()[k] = orig + eps;
                let up = loss(&probe);
                probe.blocks_mut()[b].1.as_mut_slice()[k] = orig - eps;
                let down = loss(&probe);
                probe.blocks_mut()[b].1.as_mut_slice()[k] = orig;
                let numeric = (up - down) / (2.0 * eps);
                let err = relative_error(a, numeric);
                report.checked += 1;
                if report.worst.is_none() || err > report.max_rel_error {
                    report.max_rel_error = err;
                    report.worst = Some((name.clone(), k, a, numeric));
                }
            }
        }
        report
    }
}
