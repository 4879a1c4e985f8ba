//! Synthetic toy corpus: each character is a short chord of band-limited
//! tones, speakers differ by a pitch scale and a low voicing component, and
//! every token gets random duration and amplitude jitter.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{self, WordSegment, SAMPLE_RATE};
use crate::error::{Error, Result};

pub const MANIFEST_NAME: &str = "manifest.tsv";
pub const AUDIO_DIR: &str = "audio";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub words: Vec<String>,
    pub speakers: usize,
    pub tokens_per_word: usize,
    pub seed: u64,
    pub char_dur_s: f64,
    /// Relative duration and amplitude jitter, uniform in `[1 - j, 1 + j]`.
    pub jitter: f64,
    pub pitch_step_semitones: f64,
    pub noise: f64,
    pub gap_s: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            words: ["light", "night", "might", "sight", "tight"]
                .map(String::from)
                .to_vec(),
            speakers: 3,
            tokens_per_word: 10,
            seed: 0,
            char_dur_s: 0.06,
            jitter: 0.2,
            pitch_step_semitones: 3.0,
            noise: 0.05,
            gap_s: 0.1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let mut w = self.words.clone();
        w.sort();
        w.dedup();
        if w.len() != self.words.len() {
            return Err(Error::Argument("word types must be distinct".into()));
        }
        if !(3..=10).contains(&w.len()) {
            return Err(Error::Argument(format!("need 3 to 10 word types, got {}", w.len())));
        }
        if self.words.iter().any(|w| w.is_empty() || w.chars().any(char::is_whitespace)) {
            return Err(Error::Argument("words must be non-empty without whitespace".into()));
        }
        if self.speakers == 0 || self.tokens_per_word == 0 {
            return Err(Error::Argument("speakers and tokens_per_word must be positive".into()));
        }
        if !(self.char_dur_s >= 0.02 && (0.0..1.0).contains(&self.jitter)) {
            return Err(Error::Argument("char_dur_s must be >= 0.02 and jitter in [0, 1)".into()));
        }
        if !(self.noise >= 0.0 && self.gap_s >= 0.0 && self.pitch_step_semitones.is_finite()) {
            return Err(Error::Argument("noise, gap_s and pitch step must be non-negative".into()));
        }
        Ok(())
    }

    pub fn speaker_id(&self, s: usize) -> String {
        format!("spk{s}")
    }

    /// Frequency scale for speaker `s`, centred on 1.
    pub fn pitch_scale(&self, s: usize) -> f64 {
        let offset = s as f64 - (self.speakers as f64 - 1.0) / 2.0;
        2f64.powf(offset * self.pitch_step_semitones / 12.0)
    }
}

/// Three tone frequencies (Hz) for a character.
pub fn char_tones(c: char) -> [f64; 3] {
    let k = c as u32;
    [
        250.0 + 90.0 * (k % 9) as f64,
        1000.0 + 130.0 * ((k * 7) % 13) as f64,
        2200.0 + 150.0 * ((k * 5) % 7) as f64,
    ]
}

/// Renders one token of `word` for speaker `s`.
pub fn render_word<R: Rng>(word: &str, s: usize, cfg: &SynthConfig, rng: &mut R) -> Vec<f32> {
    let sr = SAMPLE_RATE as f64;
    let scale = cfg.pitch_scale(s);
    let f0 = 110.0 * scale;
    let amp = rng.gen_range(1.0 - cfg.jitter..=1.0 + cfg.jitter) * 0.25;
    let ramp = (0.005 * sr) as usize;
    let mut out = Vec::new();
    let mut t_global = 0usize;
    for c in word.chars() {
        let dur = cfg.char_dur_s * rng.gen_range(1.0 - cfg.jitter..=1.0 + cfg.jitter);
        let n = (dur * sr).round() as usize;
        let tones = char_tones(c);
        let phases: [f64; 3] = [rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI)];
        for i in 0..n {
            let env = if i < ramp {
                0.5 - 0.5 * (PI * i as f64 / ramp as f64).cos()
            } else if n - i <= ramp {
                0.5 - 0.5 * (PI * (n - i) as f64 / ramp as f64).cos()
            } else {
                1.0
            };
            let t = (t_global + i) as f64 / sr;
            let mut v = 0.0;
            for (j, (&f, &ph)) in tones.iter().zip(&phases).enumerate() {
                v += (2.0 * PI * f * scale * t + ph).sin() / (j + 1) as f64;
            }
            v += 0.6 * (2.0 * PI * f0 * t).sin();
            let noise = rng.gen_range(-cfg.noise..=cfg.noise);
            out.push((amp * env * v + noise) as f32);
        }
        t_global += n;
    }
    out
}

/// Writes one WAV per speaker (tokens in shuffled order separated by
/// silence) plus `manifest.tsv` into `out_dir`; audio paths in the manifest
/// are relative to `out_dir`.
pub fn synthesize(cfg: &SynthConfig, out_dir: impl AsRef<Path>) -> Result<Vec<WordSegment>> {
    cfg.validate()?;
    let out_dir = out_dir.as_ref();
    let audio = out_dir.join(AUDIO_DIR);
    fs::create_dir_all(&audio).map_err(|e| Error::io(&audio, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sr = SAMPLE_RATE as f64;
    let gap = vec![0.0f32; (cfg.gap_s * sr).round() as usize];
    let mut segments = Vec::new();
    for s in 0..cfg.speakers {
        let spk = cfg.speaker_id(s);
        let mut order: Vec<(usize, usize)> = (0..cfg.words.len())
            .flat_map(|w| (0..cfg.tokens_per_word).map(move |k| (w, k)))
            .collect();
        order.shuffle(&mut rng);
        let mut samples = gap.clone();
        let rel = format!("{AUDIO_DIR}/{spk}.wav");
        for (w, k) in order {
            let word = &cfg.words[w];
            let start = samples.len();
            samples.extend(render_word(word, s, cfg, &mut rng));
            let end = samples.len();
            samples.extend_from_slice(&gap);
            segments.push(WordSegment {
                segment_id: format!("{spk}_{word}_{k:02}"),
                audio_path: rel.clone(),
                start_s: start as f64 / sr,
                end_s: end as f64 / sr,
                word: word.clone(),
                speaker_id: spk.clone(),
            });
        }
        corpus::write_wav(out_dir.join(&rel), &samples)?;
    }
    segments.sort_by(|a, b| a.segment_id.cmp(&b.segment_id));
    corpus::write_manifest(out_dir.join(MANIFEST_NAME), &segments)?;
    Ok(segments)
}
