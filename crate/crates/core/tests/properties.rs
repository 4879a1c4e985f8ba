use std::collections::BTreeMap;

use awe_core::corpus::{self, FeatureMatrix, WordSegment, SAMPLE_RATE};
use awe_core::dtw::{dtw_brute_force, dtw_distance, DtwConfig, FrameMetric, Normalize};
use awe_core::eval::{self, levenshtein, AbxTriple, Side, Variant};
use awe_core::mfcc::{self, MfccConfig};
use proptest::prelude::*;

fn ident() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9_./-]{1,12}"
}

fn segment() -> impl Strategy<Value = WordSegment> {
    (ident(), ident(), 0.0f64..100.0, 0.001f64..10.0, "[a-z']{1,10}", prop_oneof![ident(), Just("UNK".to_string())])
        .prop_map(|(id, path, start, dur, word, spk)| WordSegment {
            segment_id: id,
            audio_path: path,
            start_s: start,
            end_s: start + dur,
            word,
            speaker_id: spk,
        })
}

fn matrix(max_rows: usize, dim: usize) -> impl Strategy<Value = FeatureMatrix> {
    (1..=max_rows).prop_flat_map(move |rows| {
        prop::collection::vec(
            prop_oneof![
                -1e3f32..1e3,
                Just(f32::MAX),
                Just(f32::MIN),
                Just(f32::MIN_POSITIVE),
                Just(-0.0f32)
            ],
            rows * dim,
        )
        .prop_map(move |data| FeatureMatrix::new(rows, dim, data, 0.01, "mfcc39").unwrap())
    })
}

fn small_seq(dim: usize) -> impl Strategy<Value = FeatureMatrix> {
    (1usize..=5).prop_flat_map(move |rows| {
        prop::collection::vec(-2.0f32..2.0, rows * dim)
            .prop_map(move |d| FeatureMatrix::new(rows, dim, d, 0.01, "t").unwrap())
    })
}

fn all_dtw_configs() -> Vec<DtwConfig> {
    let mut v = Vec::new();
    for frame_metric in [FrameMetric::Cosine, FrameMetric::Euclidean] {
        for normalize in [Normalize::PathLength, Normalize::None] {
            v.push(DtwConfig { frame_metric, normalize });
        }
    }
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn manifest_round_trip(segs in prop::collection::vec(segment(), 0..20)) {
        let mut seen = std::collections::HashSet::new();
        let segs: Vec<WordSegment> = segs.into_iter().filter(|s| seen.insert(s.segment_id.clone())).collect();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.tsv");
        corpus::write_manifest(&p, &segs).unwrap();
        prop_assert_eq!(corpus::load_manifest(&p).unwrap(), segs);
    }

    #[test]
    fn archive_round_trip_is_bit_exact(mats in prop::collection::vec(matrix(6, 4), 1..6)) {
        let entries: BTreeMap<String, FeatureMatrix> =
            mats.into_iter().enumerate().map(|(i, m)| (format!("seg{i}"), m)).collect();
        let dir = tempfile::tempdir().unwrap();
        corpus::write_archive(&entries, dir.path()).unwrap();
        let back = corpus::read_archive(dir.path()).unwrap();
        prop_assert_eq!(back.len(), entries.len());
        for (id, m) in &entries {
            let r = back.get(id).unwrap();
            prop_assert_eq!((r.rows(), r.cols()), (m.rows(), m.cols()));
            let a: Vec<u32> = r.as_slice().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u32> = m.as_slice().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn wav_slices_concatenate(
        samples in prop::collection::vec(-32768i32..32768, 50..400),
        cuts in (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0),
    ) {
        let n = samples.len();
        let mut idx = [cuts.0, cuts.1, cuts.2].map(|c| (c * n as f64) as usize);
        idx.sort_unstable();
        prop_assume!(idx[0] < idx[1] && idx[1] < idx[2]);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.wav");
        let spec = hound::WavSpec { channels: 1, sample_rate: SAMPLE_RATE, bits_per_sample: 16, sample_format: hound::SampleFormat::Int };
        let mut w = hound::WavWriter::create(&p, spec).unwrap();
        for s in &samples {
            w.write_sample(*s as i16).unwrap();
        }
        w.finalize().unwrap();
        let t = idx.map(|i| i as f64 / SAMPLE_RATE as f64);
        let mut left = corpus::read_wav_segment(&p, t[0], t[1]).unwrap();
        let right = corpus::read_wav_segment(&p, t[1], t[2]).unwrap();
        left.extend(right);
        prop_assert_eq!(left, corpus::read_wav_segment(&p, t[0], t[2]).unwrap());
    }

    #[test]
    fn dtw_matches_brute_force_and_is_symmetric(a in small_seq(3), b in small_seq(3)) {
        for cfg in all_dtw_configs() {
            let d = dtw_distance(&a, &b, &cfg).unwrap();
            prop_assert!((d - dtw_brute_force(&a, &b, &cfg).unwrap()).abs() < 1e-9);
            prop_assert!((d - dtw_distance(&b, &a, &cfg).unwrap()).abs() < 1e-9);
            prop_assert!(d >= 0.0);
            prop_assert!(dtw_distance(&a, &a, &cfg).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn dtw_scaling(a in small_seq(3), b in small_seq(3), c in 0.1f32..10.0) {
        let scale = |m: &FeatureMatrix| {
            FeatureMatrix::new(m.rows(), m.cols(), m.as_slice().iter().map(|v| v * c).collect(), 0.01, "t").unwrap()
        };
        let (sa, sb) = (scale(&a), scale(&b));
        for cfg in all_dtw_configs() {
            let d = dtw_distance(&a, &b, &cfg).unwrap();
            let ds = dtw_distance(&sa, &sb, &cfg).unwrap();
            match cfg.frame_metric {
                // f32 scaling of the inputs bounds the agreement, not the DP
                FrameMetric::Euclidean => prop_assert!((ds - c as f64 * d).abs() <= 1e-5 * (1.0 + ds.abs())),
                FrameMetric::Cosine => prop_assert!((ds - d).abs() <= 1e-6),
            }
        }
    }

    #[test]
    fn mfcc_frame_count_and_finiteness(n in 400usize..4000, amp in 0.0f32..1.0, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f32> = (0..n).map(|_| rng.gen_range(-amp..=amp)).collect();
        let cfg = MfccConfig::default();
        let m = mfcc::mfcc(&x, &cfg).unwrap();
        prop_assert_eq!(m.rows(), (n - 400) / 160 + 1);
        prop_assert_eq!(m.cols(), 39);
        prop_assert!(m.as_slice().iter().all(|v| v.is_finite()));
        let again = mfcc::mfcc(&x, &cfg).unwrap();
        prop_assert_eq!(m.as_slice(), again.as_slice());
    }

    #[test]
    fn levenshtein_is_a_metric(a in "[abc]{0,7}", b in "[abc]{0,7}", c in "[abc]{0,7}") {
        let ab = levenshtein(&a, &b);
        prop_assert_eq!(ab, levenshtein(&b, &a));
        prop_assert_eq!(ab == 0, a == b);
        prop_assert!(levenshtein(&a, &c) <= ab + levenshtein(&b, &c));
        prop_assert!(ab <= a.len().max(b.len()));
    }

    #[test]
    fn abx_invariant_to_monotone_transforms(
        dists in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..60),
        k in 0.1f64..5.0,
    ) {
        let triples: Vec<AbxTriple> = (0..dists.len())
            .map(|i| AbxTriple {
                a: format!("a{i}"),
                b: format!("b{i}"),
                x: format!("x{i}"),
                x_matches: if i % 2 == 0 { Side::A } else { Side::B },
                variant: Variant::WithinSpeaker,
            })
            .collect();
        let lookup = |y: &str| {
            let i: usize = y[1..].parse().unwrap();
            let (dm, do_) = dists[i];
            let matched_is_a = i.is_multiple_of(2);
            if (y.starts_with('a')) == matched_is_a { dm } else { do_ }
        };
        let base = eval::score_abx(&triples, |_, y| Ok(lookup(y))).unwrap();
        let warped = eval::score_abx(&triples, |_, y| Ok((k * lookup(y)).exp() + 3.0)).unwrap();
        prop_assert_eq!(base, warped);
    }

    #[test]
    fn clustering_accuracy_ignores_relabeling(
        items in prop::collection::vec((0usize..5, 0usize..4), 1..40),
        perm in Just([0usize, 1, 2, 3, 4]).prop_shuffle(),
    ) {
        let assign: Vec<usize> = items.iter().map(|&(c, _)| c).collect();
        let words: Vec<String> = items.iter().map(|&(_, w)| format!("w{w}")).collect();
        let relabeled: Vec<usize> = assign.iter().map(|&c| perm[c]).collect();
        prop_assert_eq!(
            eval::clustering_accuracy(&assign, &words).unwrap(),
            eval::clustering_accuracy(&relabeled, &words).unwrap()
        );
    }
}

#[test]
fn mfcc_hop_shift_moves_rows_by_one() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let x: Vec<f32> = (0..8000).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let cfg = MfccConfig::default();
    let a = mfcc::mfcc(&x, &cfg).unwrap();
    let b = mfcc::mfcc(&x[160..], &cfg).unwrap();
    // delta windows reach 4 frames into the edge clamp on each side
    for t in 5..b.rows() - 5 {
        for (u, v) in a.row(t + 1).iter().zip(b.row(t)) {
            assert!((u - v).abs() < 1e-5 * (1.0 + u.abs()), "row {t}: {u} vs {v}");
        }
    }
}
