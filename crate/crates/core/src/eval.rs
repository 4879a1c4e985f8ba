//! Minimal-pair ABX tasks and k-means clustering accuracy.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{FeatureArchive, WordSegment};
use crate::dtw::{self, DtwConfig};
use crate::error::{Error, Result};

pub const MIN_WORD_CHARS: usize = 5;
pub const DEFAULT_CAP_PER_PAIR: usize = 10;
pub const TASK_HEADER: &str = "a\tb\tx\tx_matches\tvariant";

/// Edit distance over Unicode scalar values.
pub fn levenshtein(s: &str, t: &str) -> usize {
    let t: Vec<char> = t.chars().collect();
    let mut prev: Vec<usize> = (0..=t.len()).collect();
    let mut cur = vec![0; t.len() + 1];
    for (i, a) in s.chars().enumerate() {
        cur[0] = i + 1;
        for (j, &b) in t.iter().enumerate() {
            let sub = prev[j] + usize::from(a != b);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[t.len()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    WithinSpeaker,
    AcrossSpeaker,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::WithinSpeaker => "within_speaker",
            Variant::AcrossSpeaker => "across_speaker",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "within_speaker" | "within" => Some(Variant::WithinSpeaker),
            "across_speaker" | "across" => Some(Variant::AcrossSpeaker),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AbxTriple {
    pub a: String,
    pub b: String,
    pub x: String,
    pub x_matches: Side,
    pub variant: Variant,
}

impl AbxTriple {
    pub fn matched(&self) -> &str {
        match self.x_matches {
            Side::A => &self.a,
            Side::B => &self.b,
        }
    }

    pub fn other(&self) -> &str {
        match self.x_matches {
            Side::A => &self.b,
            Side::B => &self.a,
        }
    }
}

/// Speaker equality where the `UNK` sentinel never equals anything.
fn same_speaker(a: &WordSegment, b: &WordSegment) -> bool {
    !a.speaker_unknown() && !b.speaker_unknown() && a.speaker_id == b.speaker_id
}

/// Whether `(a, b, x)` is a valid triple of `variant`, where `a` and `b`
/// carry the contrasting words and `matched` is the token of X's word.
pub fn speakers_admissible(
    variant: Variant,
    a: &WordSegment,
    b: &WordSegment,
    x: &WordSegment,
    matched: &WordSegment,
) -> bool {
    match variant {
        Variant::WithinSpeaker => same_speaker(a, b) && same_speaker(a, x),
        Variant::AcrossSpeaker => {
            let ab_ok = a.speaker_unknown() || b.speaker_unknown() || a.speaker_id == b.speaker_id;
            ab_ok && !same_speaker(x, matched)
        }
    }
}

/// Whether two words form a minimal-pair contrast.
pub fn is_contrast_pair(w1: &str, w2: &str) -> bool {
    let (n1, n2) = (w1.chars().count(), w2.chars().count());
    n1 >= MIN_WORD_CHARS && n1 == n2 && matches!(levenshtein(w1, w2), 1 | 2)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AbxTasks {
    pub triples: Vec<AbxTriple>,
    pub contrast_pairs: usize,
    /// Contrast pairs that produced no valid triple.
    pub skipped_pairs: usize,
}

/// Builds ABX triples. `cap_per_pair = None` keeps every valid triple;
/// otherwise at most that many per contrast pair are sampled with a
/// generator seeded from `seed`. Output depends only on the set of segments,
/// not their order.
pub fn build_abx_tasks(
    segments: &[WordSegment],
    variant: Variant,
    seed: u64,
    cap_per_pair: Option<usize>,
) -> AbxTasks {
    let mut sorted: Vec<&WordSegment> = segments.iter().collect();
    sorted.sort_by(|x, y| x.segment_id.cmp(&y.segment_id));
    let mut by_word: BTreeMap<&str, Vec<&WordSegment>> = BTreeMap::new();
    for s in sorted {
        if s.word.chars().count() >= MIN_WORD_CHARS {
            by_word.entry(&s.word).or_default().push(s);
        }
    }
    let words: Vec<&str> = by_word.keys().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = AbxTasks::default();

    for (i, &wa) in words.iter().enumerate() {
        for &wb in &words[i + 1..] {
            if !is_contrast_pair(wa, wb) {
                continue;
            }
            out.contrast_pairs += 1;
            let (ta, tb) = (&by_word[wa], &by_word[wb]);
            let mut pair = Vec::new();
            for side in [Side::A, Side::B] {
                let xs = if side == Side::A { ta } else { tb };
                for a in ta {
                    for b in tb {
                        let matched = if side == Side::A { a } else { b };
                        for x in xs {
                            if x.segment_id == matched.segment_id {
                                continue;
                            }
                            if speakers_admissible(variant, a, b, x, matched) {
                                pair.push(AbxTriple {
                                    a: a.segment_id.clone(),
                                    b: b.segment_id.clone(),
                                    x: x.segment_id.clone(),
                                    x_matches: side,
                                    variant,
                                });
                            }
                        }
                    }
                }
            }
            if pair.is_empty() {
                out.skipped_pairs += 1;
                continue;
            }
            match cap_per_pair {
                Some(cap) if pair.len() > cap => {
                    let mut picks = index::sample(&mut rng, pair.len(), cap).into_vec();
                    picks.sort_unstable();
                    out.triples.extend(picks.into_iter().map(|k| pair[k].clone()));
                }
                _ => out.triples.extend(pair),
            }
        }
    }
    out
}

pub fn write_tasks(path: impl AsRef<Path>, triples: &[AbxTriple]) -> Result<()> {
    let path = path.as_ref();
    let mut s = String::from(TASK_HEADER);
    s.push('\n');
    for t in triples {
        let side = match t.x_matches {
            Side::A => "A",
            Side::B => "B",
        };
        let _ = writeln!(s, "{}\t{}\t{}\t{}\t{}", t.a, t.b, t.x, side, t.variant.as_str());
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_tasks(path: impl AsRef<Path>) -> Result<Vec<AbxTriple>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if lineno == 1 {
            if line != TASK_HEADER {
                return Err(parse_err(1, format!("expected header {TASK_HEADER:?}")));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 {
            return Err(parse_err(lineno, format!("expected 5 columns, found {}", cols.len())));
        }
        let x_matches = match cols[3] {
            "A" => Side::A,
            "B" => Side::B,
            other => return Err(parse_err(lineno, format!("x_matches must be A or B, got {other:?}"))),
        };
        let variant = Variant::parse(cols[4])
            .ok_or_else(|| parse_err(lineno, format!("unknown variant {:?}", cols[4])))?;
        out.push(AbxTriple {
            a: cols[0].into(),
            b: cols[1].into(),
            x: cols[2].into(),
            x_matches,
            variant,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantScore {
    pub variant: Variant,
    pub n_triples: usize,
    /// Percentage; `None` when there were no triples.
    pub error_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbxReport {
    pub n_triples: usize,
    pub error_rate: Option<f64>,
    pub by_variant: Vec<VariantScore>,
}

impl AbxReport {
    pub fn variant(&self, v: Variant) -> Option<&VariantScore> {
        self.by_variant.iter().find(|s| s.variant == v)
    }

    pub fn variant_rate(&self, v: Variant) -> Option<f64> {
        self.variant(v).and_then(|s| s.error_rate)
    }

    pub fn to_tsv(&self) -> String {
        let fmt = |r: Option<f64>| r.map_or("NA".to_string(), |v| format!("{v:.4}"));
        let mut s = String::from("variant\tn_triples\terror_rate\n");
        for v in &self.by_variant {
            let _ = writeln!(s, "{}\t{}\t{}", v.variant.as_str(), v.n_triples, fmt(v.error_rate));
        }
        let _ = writeln!(s, "all\t{}\t{}", self.n_triples, fmt(self.error_rate));
        s
    }
}

/// Error contribution of one triple: 0 if X is closer to its match, 1 if
/// closer to the other side, 0.5 on an exact tie.
pub fn triple_error(d_matched: f64, d_other: f64) -> f64 {
    if d_matched < d_other {
        0.0
    } else if d_matched > d_other {
        1.0
    } else {
        0.5
    }
}

/// Micro-averaged ABX error over all triples, with a per-variant breakdown.
/// `distance(x, y)` is evaluated in parallel.
pub fn score_abx<F>(triples: &[AbxTriple], distance: F) -> Result<AbxReport>
where
    F: Fn(&str, &str) -> Result<f64> + Sync,
{
    let errors: Vec<f64> = triples
        .par_iter()
        .map(|t| {
            let dm = distance(&t.x, t.matched())?;
            let dother = distance(&t.x, t.other())?;
            Ok(triple_error(dm, dother))
        })
        .collect::<Result<_>>()?;
    let mut per: BTreeMap<Variant, (usize, f64)> = BTreeMap::new();
    for (t, e) in triples.iter().zip(&errors) {
        let slot = per.entry(t.variant).or_default();
        slot.0 += 1;
        slot.1 += e;
    }
    let rate = |n: usize, sum: f64| (n > 0).then(|| 100.0 * sum / n as f64);
    Ok(AbxReport {
        n_triples: triples.len(),
        error_rate: rate(triples.len(), errors.iter().sum()),
        by_variant: per
            .into_iter()
            .map(|(variant, (n, sum))| VariantScore {
                variant,
                n_triples: n,
                error_rate: rate(n, sum),
            })
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AbxMetric {
    /// DTW between frame sequences.
    Dtw(DtwConfig),
    /// Cosine distance between single-row entries (embeddings).
    Cosine,
}

/// Scores triples against an archive. Cosine requires every entry to be a
/// single row.
pub fn score_abx_archive(
    triples: &[AbxTriple],
    archive: &FeatureArchive,
    metric: AbxMetric,
) -> Result<AbxReport> {
    if metric == AbxMetric::Cosine {
        if let Some((id, m)) = archive.iter().find(|(_, m)| m.rows() != 1) {
            return Err(Error::Argument(format!(
                "cosine scoring needs one vector per segment; {id:?} has {} rows",
                m.rows()
            )));
        }
    }
    score_abx(triples, |x, y| {
        let (u, v) = (archive.get(x)?, archive.get(y)?);
        match metric {
            AbxMetric::Dtw(cfg) => dtw::dtw_distance(u, v, &cfg),
            AbxMetric::Cosine => Ok(dtw::FrameMetric::Cosine.frame_distance(u.row(0), v.row(0))),
        }
    })
}

/// Plain-text table: one row per feature setting, within/across columns.
pub fn render_abx_table(rows: &[(&str, &AbxReport)]) -> String {
    let cell = |r: Option<f64>| r.map_or("-".to_string(), |v| format!("{v:.2}"));
    let width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(8);
    let mut s = String::from("ABX error rates (%)\n");
    let _ = writeln!(s, "{:<width$}  {:>8}  {:>8}", "", "within", "across");
    for (label, rep) in rows {
        let _ = writeln!(
            s,
            "{:<width$}  {:>8}  {:>8}",
            label,
            cell(rep.variant_rate(Variant::WithinSpeaker)),
            cell(rep.variant_rate(Variant::AcrossSpeaker)),
        );
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub max_iter: usize,
    pub tol: f64,
    pub restarts: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            max_iter: 300,
            tol: 1e-6,
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cen) in centroids.iter().enumerate() {
        let d = sq_dist(p, cen);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_seed<R: Rng>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.gen_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = d2.iter().rposition(|&d| d > 0.0).unwrap();
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.gen_range(0..points.len())
        };
        let c = points[pick].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn lloyd<R: Rng>(points: &[Vec<f64>], k: usize, cfg: &KMeansConfig, rng: &mut R) -> KMeansResult {
    let dim = points[0].len();
    let mut centroids = plus_plus_seed(points, k, rng);
    let mut assignments = vec![0; points.len()];
    let mut iterations = 0;
    for _ in 0..cfg.max_iter {
        iterations += 1;
        let nearest_all: Vec<(usize, f64)> =
            points.par_iter().map(|p| nearest(p, &centroids)).collect();
        for (a, (c, _)) in assignments.iter_mut().zip(&nearest_all) {
            *a = *c;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut dists: Vec<f64> = nearest_all.iter().map(|&(_, d)| d).collect();
        let mut moved: f64 = 0.0;
        for c in 0..k {
            let new = if counts[c] == 0 {
                // re-seed an empty cluster at the point farthest from its centroid
                let far = (0..points.len())
                    .max_by(|&i, &j| dists[i].total_cmp(&dists[j]).then(j.cmp(&i)))
                    .unwrap();
                dists[far] = 0.0;
                assignments[far] = c;
                points[far].clone()
            } else {
                sums[c].iter().map(|s| s / counts[c] as f64).collect()
            };
            moved = moved.max(sq_dist(&new, &centroids[c]).sqrt());
            centroids[c] = new;
        }
        if moved < cfg.tol {
            break;
        }
    }
    let final_assign: Vec<(usize, f64)> = points.par_iter().map(|p| nearest(p, &centroids)).collect();
    let assignments: Vec<usize> = final_assign.iter().map(|&(c, _)| c).collect();
    let inertia = final_assign.iter().map(|&(_, d)| d).sum();
    KMeansResult {
        assignments,
        centroids,
        inertia,
        iterations,
    }
}

/// k-means++ seeding followed by Lloyd iterations; the best of
/// `cfg.restarts` runs by inertia. Deterministic for a given seed.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, cfg: &KMeansConfig) -> Result<KMeansResult> {
    if k == 0 || k > points.len() {
        return Err(Error::Argument(format!("k = {k} with {} points", points.len())));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Argument("points differ in dimension".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..cfg.restarts.max(1) {
        let r = lloyd(points, k, cfg, &mut rng);
        if best.as_ref().is_none_or(|b| r.inertia < b.inertia) {
            best = Some(r);
        }
    }
    Ok(best.unwrap())
}

/// Percentage of items whose word equals the modal word of their cluster
/// (ties go to the lexicographically smallest word).
pub fn clustering_accuracy<S: AsRef<str>>(assignments: &[usize], word_ids: &[S]) -> Result<f64> {
    if assignments.len() != word_ids.len() {
        return Err(Error::Argument(format!(
            "{} assignments for {} words",
            assignments.len(),
            word_ids.len()
        )));
    }
    if assignments.is_empty() {
        return Ok(0.0);
    }
    let mut counts: BTreeMap<usize, BTreeMap<&str, usize>> = BTreeMap::new();
    for (&c, w) in assignments.iter().zip(word_ids) {
        *counts.entry(c).or_default().entry(w.as_ref()).or_default() += 1;
    }
    let correct: usize = counts
        .values()
        .map(|words| {
            // BTreeMap iterates in word order, so the first maximum is the smallest id
            words.values().copied().fold(0, usize::max)
        })
        .sum();
    Ok(100.0 * correct as f64 / assignments.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub k: usize,
    pub accuracy: f64,
    pub iterations: usize,
    pub inertia: f64,
}

impl ClusterReport {
    pub fn to_tsv(&self) -> String {
        format!(
            "k\taccuracy\titerations\tinertia\n{}\t{:.4}\t{}\t{}\n",
            self.k, self.accuracy, self.iterations, self.inertia
        )
    }

    pub fn render_table(rows: &[(&str, &ClusterReport)]) -> String {
        let width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(8);
        let mut s = String::from("K-Means clustering accuracy (%)\n");
        let _ = writeln!(s, "{:<width$}  {:>4}  {:>8}", "", "k", "accuracy");
        for (label, r) in rows {
            let _ = writeln!(s, "{:<width$}  {:>4}  {:>8.1}", label, r.k, r.accuracy);
        }
        s
    }
}

/// Clusters `points` with `k` = number of distinct words and scores the
/// result.
pub fn cluster_words<S: AsRef<str>>(
    points: &[Vec<f64>],
    words: &[S],
    seed: u64,
    cfg: &KMeansConfig,
) -> Result<ClusterReport> {
    let mut distinct: Vec<&str> = words.iter().map(AsRef::as_ref).collect();
    distinct.sort_unstable();
    distinct.dedup();
    let k = distinct.len();
    let res = kmeans(points, k, seed, cfg)?;
    Ok(ClusterReport {
        k,
        accuracy: clustering_accuracy(&res.assignments, words)?,
        iterations: res.iterations,
        inertia: res.inertia,
    })
}
