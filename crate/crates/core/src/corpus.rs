//! Segment manifests, WAV slicing and the `AWEF` feature archive.
//!
//! A manifest is a UTF-8 TSV with the fixed header
//! `segment_id audio_path start_s end_s word speaker_id` (tab separated).
//!
//! A feature archive is a directory holding one binary file per segment plus
//! `index.tsv` (`segment_id<TAB>relative_filename`) and `meta.tsv`
//! (feature kind and frame shift). Each binary file is
//!
//! ```text
//! b"AWEF" | version: u32 | rows: u32 | cols: u32 | rows*cols f32 (row-major)
//! ```
//!
//! with every field little-endian.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const MANIFEST_HEADER: &str = "segment_id\taudio_path\tstart_s\tend_s\tword\tspeaker_id";
pub const UNKNOWN_SPEAKER: &str = "UNK";
pub const SAMPLE_RATE: u32 = 16_000;

pub const ARCHIVE_MAGIC: &[u8; 4] = b"AWEF";
pub const ARCHIVE_VERSION: u32 = 1;
pub const ARCHIVE_HEADER_BYTES: usize = 16;
pub const INDEX_FILE: &str = "index.tsv";
pub const META_FILE: &str = "meta.tsv";

#[derive(Debug, Clone, PartialEq)]
pub struct WordSegment {
    pub segment_id: String,
    pub audio_path: String,
    pub start_s: f64,
    pub end_s: f64,
    pub word: String,
    pub speaker_id: String,
}

impl WordSegment {
    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }

    /// True when the speaker is the `UNK` sentinel.
    pub fn speaker_unknown(&self) -> bool {
        self.speaker_id == UNKNOWN_SPEAKER
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.segment_id.is_empty() {
            return Err("empty segment_id".into());
        }
        if self.word.is_empty() {
            return Err("empty word".into());
        }
        if !(self.start_s.is_finite() && self.end_s.is_finite()) {
            return Err("non-finite time bound".into());
        }
        if self.start_s < 0.0 {
            return Err(format!("negative start_s {}", self.start_s));
        }
        if self.end_s <= self.start_s {
            return Err(format!(
                "end_s {} is not after start_s {}",
                self.end_s, self.start_s
            ));
        }
        for (name, field) in [
            ("segment_id", &self.segment_id),
            ("audio_path", &self.audio_path),
            ("word", &self.word),
            ("speaker_id", &self.speaker_id),
        ] {
            if field.contains(['\t', '\n', '\r']) {
                return Err(format!("{name} contains a tab or newline"));
            }
        }
        Ok(())
    }
}

/// Reads a manifest, preserving row order.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<WordSegment>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let mut segments = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if lineno == 1 {
            if line != MANIFEST_HEADER {
                return Err(parse_err(lineno, format!("expected header {MANIFEST_HEADER:?}")));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 6 {
            return Err(parse_err(lineno, format!("expected 6 columns, found {}", cols.len())));
        }
        let time = |s: &str, name: &str| {
            s.parse::<f64>()
                .map_err(|_| parse_err(lineno, format!("{name} is not a number: {s:?}")))
        };
        let seg = WordSegment {
            segment_id: cols[0].to_string(),
            audio_path: cols[1].to_string(),
            start_s: time(cols[2], "start_s")?,
            end_s: time(cols[3], "end_s")?,
            word: cols[4].to_string(),
            speaker_id: cols[5].to_string(),
        };
        seg.validate().map_err(|m| parse_err(lineno, m))?;
        if !seen.insert(seg.segment_id.clone()) {
            return Err(Error::Validation(format!(
                "duplicate segment_id {:?} at line {lineno}",
                seg.segment_id
            )));
        }
        segments.push(seg);
    }
    Ok(segments)
}

pub fn write_manifest(path: impl AsRef<Path>, segments: &[WordSegment]) -> Result<()> {
    let path = path.as_ref();
    let mut seen = HashSet::new();
    let mut out = String::with_capacity(64 * (segments.len() + 1));
    out.push_str(MANIFEST_HEADER);
    out.push('\n');
    for seg in segments {
        seg.validate()
            .map_err(|m| Error::Validation(format!("segment {:?}: {m}", seg.segment_id)))?;
        if !seen.insert(seg.segment_id.as_str()) {
            return Err(Error::Validation(format!("duplicate segment_id {:?}", seg.segment_id)));
        }
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            seg.segment_id, seg.audio_path, seg.start_s, seg.end_s, seg.word, seg.speaker_id
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Sample index for a time in seconds, rounded down.
///
/// A tiny epsilon absorbs representation error so that times lying exactly on
/// a sample boundary (e.g. `0.29 * 16000`) do not fall one sample short.
pub fn time_to_sample(t: f64) -> usize {
    (t * SAMPLE_RATE as f64 + 1e-7).floor().max(0.0) as usize
}

/// Reads `[start_s, end_s)` from a 16 kHz, 16-bit, mono PCM WAV file,
/// scaled to `[-1, 1]`.
pub fn read_wav_segment(path: impl AsRef<Path>, start_s: f64, end_s: f64) -> Result<Vec<f32>> {
    let path = path.as_ref();
    let mut reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other}", path.display())),
    })?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int
        || spec.bits_per_sample != 16
        || spec.channels != 1
        || spec.sample_rate != SAMPLE_RATE
    {
        return Err(Error::Format(format!(
            "{}: need 16-bit PCM mono at {SAMPLE_RATE} Hz, found {}-bit {:?} x{} at {} Hz",
            path.display(),
            spec.bits_per_sample,
            spec.sample_format,
            spec.channels,
            spec.sample_rate
        )));
    }
    if !(start_s.is_finite() && end_s.is_finite()) || start_s < 0.0 || end_s <= start_s {
        return Err(Error::Range(format!("invalid interval [{start_s}, {end_s}]")));
    }
    let total = reader.duration() as usize;
    let (first, last) = (time_to_sample(start_s), time_to_sample(end_s));
    if last > total {
        return Err(Error::Range(format!(
            "interval [{start_s}, {end_s}] exceeds {} ({} samples)",
            path.display(),
            total
        )));
    }
    reader
        .seek(first as u32)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    reader
        .samples::<i16>()
        .take(last - first)
        .map(|s| {
            s.map(|v| v as f32 / 32768.0)
                .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
        })
        .collect()
}

/// Writes 16 kHz mono 16-bit PCM. Samples are clipped to `[-1, 1]`.
pub fn write_wav(path: impl AsRef<Path>, samples: &[f32]) -> Result<()> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: SAMPLE_RATE,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let wrap = |e: hound::Error| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Format(other.to_string()),
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(wrap)?;
    for &s in samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        writer.write_sample(v).map_err(wrap)?;
    }
    writer.finalize().map_err(wrap)
}

/// A `T x d` matrix of frame features for one segment, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
    pub frame_shift_s: f64,
    pub feature_kind: String,
}

impl FeatureMatrix {
    pub fn new(
        rows: usize,
        cols: usize,
        data: Vec<f32>,
        frame_shift_s: f64,
        feature_kind: impl Into<String>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Validation(format!("empty feature matrix {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Validation(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite value at row {}, col {}",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self {
            rows,
            cols,
            data,
            frame_shift_s,
            feature_kind: feature_kind.into(),
        })
    }

    /// Builds a matrix from row slices, all of which must share a length.
    pub fn from_rows<R: AsRef<[f32]>>(
        rows: &[R],
        frame_shift_s: f64,
        feature_kind: impl Into<String>,
    ) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != cols) {
            return Err(Error::Validation("ragged rows".into()));
        }
        let data = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::new(rows.len(), cols, data, frame_shift_s, feature_kind)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, t: usize) -> &[f32] {
        &self.data[t * self.cols..(t + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// Rows widened to `f64`.
    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        self.iter_rows()
            .map(|r| r.iter().map(|&v| v as f64).collect())
            .collect()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(ARCHIVE_HEADER_BYTES + 4 * self.data.len());
        buf.extend_from_slice(ARCHIVE_MAGIC);
        buf.extend_from_slice(&ARCHIVE_VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.rows as u32).to_le_bytes());
        buf.extend_from_slice(&(self.cols as u32).to_le_bytes());
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf
    }

    /// Decodes one `AWEF` blob; `file` is only used in error messages.
    pub fn decode(
        bytes: &[u8],
        file: &Path,
        frame_shift_s: f64,
        feature_kind: &str,
    ) -> Result<Self> {
        if bytes.len() < ARCHIVE_HEADER_BYTES {
            return Err(Error::corrupt(file, "truncated header"));
        }
        if &bytes[..4] != ARCHIVE_MAGIC {
            return Err(Error::corrupt(file, "bad magic"));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let version = word(4);
        if version != ARCHIVE_VERSION {
            return Err(Error::corrupt(file, format!("unsupported version {version}")));
        }
        let (rows, cols) = (word(8) as usize, word(12) as usize);
        let expected = ARCHIVE_HEADER_BYTES + 4 * rows * cols;
        if bytes.len() != expected {
            return Err(Error::corrupt(
                file,
                format!("expected {expected} bytes for {rows}x{cols}, found {}", bytes.len()),
            ));
        }
        let data = bytes[ARCHIVE_HEADER_BYTES..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(rows, cols, data, frame_shift_s, feature_kind)
            .map_err(|e| Error::corrupt(file, e.to_string()))
    }
}

/// An in-memory view of a feature archive directory.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureArchive {
    dim: usize,
    entries: BTreeMap<String, FeatureMatrix>,
}

impl FeatureArchive {
    pub fn new(entries: BTreeMap<String, FeatureMatrix>) -> Result<Self> {
        let dim = entries.values().next().map_or(0, FeatureMatrix::cols);
        if let Some((id, m)) = entries.iter().find(|(_, m)| m.cols() != dim) {
            return Err(Error::Validation(format!(
                "segment {id:?} has dimension {}, archive has {dim}",
                m.cols()
            )));
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Result<&FeatureMatrix> {
        self.entries.get(id).ok_or_else(|| Error::Lookup(id.to_string()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    /// Entries in segment-id order.
    pub fn iter(&self) -> impl Iterator<Item = (&String, &FeatureMatrix)> {
        self.entries.iter()
    }

    pub fn ids(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }

    pub fn feature_kind(&self) -> Option<&str> {
        self.entries.values().next().map(|m| m.feature_kind.as_str())
    }

    pub fn into_entries(self) -> BTreeMap<String, FeatureMatrix> {
        self.entries
    }
}

fn entry_filename(index: usize) -> String {
    format!("{index:06}.awef")
}

/// Writes `entries` into `dir` (created if absent) and returns the archive.
pub fn write_archive(
    entries: &BTreeMap<String, FeatureMatrix>,
    dir: impl AsRef<Path>,
) -> Result<FeatureArchive> {
    let dir = dir.as_ref();
    let archive = FeatureArchive::new(entries.clone())?;
    let first = entries.values().next();
    if let Some(first) = first {
        if let Some((id, _)) = entries.iter().find(|(_, m)| {
            m.feature_kind != first.feature_kind || m.frame_shift_s != first.frame_shift_s
        }) {
            return Err(Error::Validation(format!(
                "segment {id:?} disagrees with the archive's feature kind or frame shift"
            )));
        }
    }
    for id in entries.keys() {
        if id.is_empty() || id.contains(['\t', '\n', '\r']) {
            return Err(Error::Validation(format!("segment id {id:?} cannot be indexed")));
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut index = String::new();
    for (i, (id, m)) in entries.iter().enumerate() {
        let name = entry_filename(i);
        let path = dir.join(&name);
        fs::write(&path, m.encode()).map_err(|e| Error::io(&path, e))?;
        index.push_str(&format!("{id}\t{name}\n"));
    }
    let index_path = dir.join(INDEX_FILE);
    fs::write(&index_path, index).map_err(|e| Error::io(&index_path, e))?;

    let (kind, shift) = first.map_or(("", 0.0), |m| (m.feature_kind.as_str(), m.frame_shift_s));
    let meta_path = dir.join(META_FILE);
    fs::write(
        &meta_path,
        format!("feature_kind\t{kind}\nframe_shift_s\t{shift}\n"),
    )
    .map_err(|e| Error::io(&meta_path, e))?;
    Ok(archive)
}

fn read_meta(dir: &Path) -> Result<(String, f64)> {
    let path = dir.join(META_FILE);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Ok(("unknown".to_string(), 0.0));
        }
        Err(e) => return Err(Error::io(&path, e)),
    };
    let mut kind = "unknown".to_string();
    let mut shift = 0.0;
    for line in text.lines().filter(|l| !l.is_empty()) {
        match line.split_once('\t') {
            Some(("feature_kind", v)) => kind = v.to_string(),
            Some(("frame_shift_s", v)) => {
                shift = v
                    .parse()
                    .map_err(|_| Error::corrupt(&path, format!("bad frame_shift_s {v:?}")))?
            }
            _ => return Err(Error::corrupt(&path, format!("unrecognised line {line:?}"))),
        }
    }
    Ok((kind, shift))
}

pub fn read_archive(dir: impl AsRef<Path>) -> Result<FeatureArchive> {
    let dir = dir.as_ref();
    let index_path = dir.join(INDEX_FILE);
    let index = fs::read_to_string(&index_path).map_err(|e| Error::io(&index_path, e))?;
    let (kind, shift) = read_meta(dir)?;

    let mut entries = BTreeMap::new();
    for (i, line) in index.lines().enumerate().filter(|(_, l)| !l.is_empty()) {
        let (id, rel) = line
            .split_once('\t')
            .ok_or_else(|| Error::corrupt(&index_path, format!("line {}: missing tab", i + 1)))?;
        let path: PathBuf = dir.join(rel);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let m = FeatureMatrix::decode(&bytes, &path, shift, &kind)?;
        if entries.insert(id.to_string(), m).is_some() {
            return Err(Error::corrupt(&index_path, format!("duplicate id {id:?}")));
        }
    }
    FeatureArchive::new(entries).map_err(|e| Error::corrupt(dir, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(id: &str, start: f64, end: f64, word: &str, spk: &str) -> WordSegment {
        WordSegment {
            segment_id: id.into(),
            audio_path: "a.wav".into(),
            start_s: start,
            end_s: end,
            word: word.into(),
            speaker_id: spk.into(),
        }
    }

    fn write_text(dir: &Path, body: &str) -> PathBuf {
        let p = dir.join("m.tsv");
        fs::write(&p, format!("{MANIFEST_HEADER}\n{body}")).unwrap();
        p
    }

    #[test]
    fn manifest_preserves_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_text(
            dir.path(),
            "c\ta.wav\t0\t0.5\tnight\ts1\na\ta.wav\t0.5\t1\tlight\ts1\nb\tb.wav\t0\t0.25\tmight\tUNK\n",
        );
        let segs = load_manifest(&p).unwrap();
        let ids: Vec<_> = segs.iter().map(|s| s.segment_id.as_str()).collect();
        assert_eq!(ids, ["c", "a", "b"]);
        assert!(segs[2].speaker_unknown());
    }

    #[test]
    fn manifest_rejects_empty_interval_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_text(dir.path(), "a\ta.wav\t0\t1\tnight\ts\nb\ta.wav\t1\t1\tlight\ts\n");
        match load_manifest(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn manifest_rejects_bad_columns_and_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_text(dir.path(), "a\ta.wav\t0\t1\tnight\n");
        assert!(matches!(load_manifest(&p), Err(Error::Parse { line: 2, .. })));
        let p = write_text(dir.path(), "a\ta.wav\tzero\t1\tnight\ts\n");
        assert!(matches!(load_manifest(&p), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn manifest_rejects_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_text(dir.path(), "a\ta.wav\t0\t1\tnight\ts\na\ta.wav\t1\t2\tlight\ts\n");
        assert!(matches!(load_manifest(&p), Err(Error::Validation(_))));
    }

    #[test]
    fn manifest_rejects_bad_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.tsv");
        fs::write(&p, "id\tpath\n").unwrap();
        assert!(matches!(load_manifest(&p), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let segs = vec![
            seg("x1", 0.0, 0.3, "abcde", "s1"),
            seg("x2", 0.123456789, 1.0 / 3.0, "naïve", UNKNOWN_SPEAKER),
        ];
        let p = dir.path().join("m.tsv");
        write_manifest(&p, &segs).unwrap();
        assert_eq!(load_manifest(&p).unwrap(), segs);
    }

    #[test]
    fn wav_constant_scaling_and_length() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: SAMPLE_RATE,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&p, spec).unwrap();
        for _ in 0..32000 {
            w.write_sample(8192i16).unwrap();
        }
        w.finalize().unwrap();

        let s = read_wav_segment(&p, 0.5, 1.5).unwrap();
        assert_eq!(s.len(), 16000);
        assert!(s.iter().all(|&v| v == 0.25));
        assert!(matches!(read_wav_segment(&p, 1.5, 2.5), Err(Error::Range(_))));
    }

    #[test]
    fn wav_rejects_other_rates() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&p, spec).unwrap();
        w.write_sample(0i16).unwrap();
        w.finalize().unwrap();
        assert!(matches!(read_wav_segment(&p, 0.0, 0.0001), Err(Error::Format(_))));
    }

    #[test]
    fn tone_stays_in_unit_range() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.wav");
        let tone: Vec<f32> = (0..16000)
            .map(|n| (2.0 * std::f32::consts::PI * 440.0 * n as f32 / 16000.0).sin())
            .collect();
        write_wav(&p, &tone).unwrap();
        let s = read_wav_segment(&p, 0.0, 1.0).unwrap();
        assert_eq!(s.len(), 16000);
        assert!(s.iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn archive_layout_and_bookkeeping() {
        let dir = tempfile::tempdir().unwrap();
        let mut entries = BTreeMap::new();
        let a = FeatureMatrix::new(3, 39, (0..117).map(|v| v as f32).collect(), 0.01, "mfcc39")
            .unwrap();
        let b = FeatureMatrix::new(5, 39, vec![-1.5; 195], 0.01, "mfcc39").unwrap();
        entries.insert("a".to_string(), a);
        entries.insert("b".to_string(), b);
        let archive = write_archive(&entries, dir.path()).unwrap();
        assert_eq!(archive.dim(), 39);
        let index = fs::read_to_string(dir.path().join(INDEX_FILE)).unwrap();
        assert_eq!(index.lines().count(), 2);
        let size = fs::metadata(dir.path().join(entry_filename(1))).unwrap().len();
        assert_eq!(size, 16 + 4 * 5 * 39);
        assert_eq!(read_archive(dir.path()).unwrap(), archive);
    }

    #[test]
    fn archive_two_by_three() {
        let dir = tempfile::tempdir().unwrap();
        let m = FeatureMatrix::new(2, 3, vec![1.0, -2.0, 3.5, 1e-3, 7e8, -0.0], 0.02, "x").unwrap();
        let entries = BTreeMap::from([("only".to_string(), m.clone())]);
        write_archive(&entries, dir.path()).unwrap();
        assert_eq!(read_archive(dir.path()).unwrap().get("only").unwrap(), &m);
    }

    #[test]
    fn archive_rejects_mixed_dims() {
        let dir = tempfile::tempdir().unwrap();
        let entries = BTreeMap::from([
            ("a".to_string(), FeatureMatrix::new(1, 2, vec![0.0; 2], 0.01, "k").unwrap()),
            ("b".to_string(), FeatureMatrix::new(1, 3, vec![0.0; 3], 0.01, "k").unwrap()),
        ]);
        assert!(matches!(write_archive(&entries, dir.path()), Err(Error::Validation(_))));
    }

    #[test]
    fn archive_detects_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let entries = BTreeMap::from([(
            "a".to_string(),
            FeatureMatrix::new(2, 2, vec![1.0; 4], 0.01, "k").unwrap(),
        )]);
        write_archive(&entries, dir.path()).unwrap();
        let f = dir.path().join(entry_filename(0));
        let bytes = fs::read(&f).unwrap();
        fs::write(&f, &bytes[..bytes.len() - 3]).unwrap();
        match read_archive(dir.path()) {
            Err(Error::Corruption { file, .. }) => assert_eq!(file, f),
            other => panic!("expected corruption, got {other:?}"),
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        fs::write(&f, &bad).unwrap();
        assert!(matches!(read_archive(dir.path()), Err(Error::Corruption { .. })));
    }

    #[test]
    fn feature_matrix_rejects_nan() {
        assert!(FeatureMatrix::new(1, 2, vec![0.0, f32::NAN], 0.01, "k").is_err());
        assert!(FeatureMatrix::new(0, 2, vec![], 0.01, "k").is_err());
    }
}
