//! Acceptance suite: one PASS/FAIL line per criterion; exits nonzero if any
//! criterion fails.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use awe_core::awe::{self, AweConfig, AweModel, FeatureProfile, Mode, EOS};
use awe_core::cli::EMBEDDING_KIND;
use awe_core::corpus::{self, FeatureArchive, FeatureMatrix};
use awe_core::dtw::{dtw_brute_force, dtw_distance, DtwConfig, FrameMetric, Normalize};
use awe_core::eval::{self, AbxMetric, AbxTriple, KMeansConfig, Side, Variant};
use awe_core::nn::{count_encoder_params, gradcheck};
use awe_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'a str, Box<dyn FnOnce() -> Outcome>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_features(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> FeatureMatrix {
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
    FeatureMatrix::new(rows, cols, data, 0.01, "t").unwrap()
}

fn parameter_counts() -> Outcome {
    let rows = [
        ((39, 100, 2), 354_400),
        ((768, 100, 2), 937_600),
        ((256, 100, 2), 528_000),
        ((1024, 100, 2), 1_142_400),
    ];
    for ((i, h, l), want) in rows {
        let got = count_encoder_params(i, h, l, true);
        ensure(got == want, || format!("({i},{h},{l}) gave {got}, expected {want}"))?;
    }
    let (h, l) = FeatureProfile::Xlsr53.encoder_shape(Mode::SelfSupervised);
    let xlsr = count_encoder_params(FeatureProfile::Xlsr53.input_dim(), h, l, true);
    ensure(xlsr == 1_411_200, || format!("self-supervised XLSR gave {xlsr}"))?;
    let alt = count_encoder_params(1024, 250, 1, true);
    Ok(format!(
        "four table rows exact; XLSR self-supervised (H={h}, L={l}) = {xlsr}; H=250 would give {alt}"
    ))
}

fn gradient_correctness() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (seed, (i, h, t, layers)) in [(8, 6, 4, 1), (5, 4, 3, 2), (3, 5, 2, 1)].into_iter().enumerate() {
        let seed = seed as u64;
        let mut cfg = AweConfig::self_supervised(i);
        cfg.hidden = h;
        cfg.encoder_layers = layers;
        let m = AweModel::new(cfg, &mut rng(100 + seed)).unwrap();
        let x = random_features(&mut rng(200 + seed), t, i).to_f64_rows();
        let mut g = m.zeros_like();
        m.reconstruction_pass::<ChaCha8Rng>(&x, None, Some((&mut g, 1.0))).unwrap();
        let rep = gradcheck::check(&m, &g, 1e-5, |p: &AweModel| {
            p.reconstruction_pass::<ChaCha8Rng>(&x, None, None).unwrap()
        });
        ensure(rep.passes(1e-4), || format!("reconstruction I={i} H={h} T={t}: {rep:?}"))?;
        worst = worst.max(rep.max_rel_error);
        checked += rep.checked;
    }
    for (seed, (i, h, t, words)) in [(8, 6, 4, &["abcd"][..]), (5, 4, 3, &["ab", "c"][..])].into_iter().enumerate() {
        let seed = seed as u64;
        let mut cfg = AweConfig::supervised(i, awe::char_vocab(words));
        cfg.hidden = h;
        cfg.encoder_layers = 1;
        assert!(cfg.vocab.len() <= 6);
        let m = AweModel::new(cfg, &mut rng(300 + seed)).unwrap();
        let x = random_features(&mut rng(400 + seed), t, i).to_f64_rows();
        let target = m.encode_target(&["b", "a", EOS]).unwrap();
        let mut g = m.zeros_like();
        m.symbol_pass::<ChaCha8Rng>(&x, &target, None, Some((&mut g, 1.0))).unwrap();
        let rep = gradcheck::check(&m, &g, 1e-5, |p: &AweModel| {
            p.symbol_pass::<ChaCha8Rng>(&x, &target, None, None).unwrap()
        });
        ensure(rep.passes(1e-4), || format!("symbol I={i} H={h} T={t}: {rep:?}"))?;
        worst = worst.max(rep.max_rel_error);
        checked += rep.checked;
    }
    Ok(format!("{checked} parameter entries over 5 models; max relative error {worst:.2e} < 1e-4"))
}

fn dtw_oracle() -> Outcome {
    let mut r = rng(7);
    let mut max_gap: f64 = 0.0;
    let pairs = 250;
    for _ in 0..pairs {
        let (ta, tb) = (r.gen_range(1..=5), r.gen_range(1..=5));
        let a = random_features(&mut r, ta, 3);
        let b = random_features(&mut r, tb, 3);
        for frame_metric in [FrameMetric::Cosine, FrameMetric::Euclidean] {
            for normalize in [Normalize::PathLength, Normalize::None] {
                let cfg = DtwConfig { frame_metric, normalize };
                let d = dtw_distance(&a, &b, &cfg).unwrap();
                let brute = dtw_brute_force(&a, &b, &cfg).unwrap();
                let sym = dtw_distance(&b, &a, &cfg).unwrap();
                let own = dtw_distance(&a, &a, &cfg).unwrap();
                max_gap = max_gap.max((d - brute).abs());
                ensure((d - brute).abs() < 1e-9, || format!("oracle gap {} ({cfg:?})", (d - brute).abs()))?;
                ensure((d - sym).abs() < 1e-9, || format!("asymmetric by {}", (d - sym).abs()))?;
                ensure(own.abs() < 1e-9, || format!("self distance {own}"))?;
            }
        }
    }
    Ok(format!("{pairs} pairs x 4 configs; max |dp - brute| = {max_gap:.1e}"))
}

fn archive_of(vectors: BTreeMap<String, Vec<f32>>) -> FeatureArchive {
    FeatureArchive::new(
        vectors
            .into_iter()
            .map(|(id, v)| {
                let n = v.len();
                (id, FeatureMatrix::new(1, n, v, 0.0, EMBEDDING_KIND).unwrap())
            })
            .collect(),
    )
    .unwrap()
}

fn abx_null_and_separation() -> Outcome {
    let triples: Vec<AbxTriple> = (0..10_000)
        .map(|i| AbxTriple {
            a: format!("a{i}"),
            b: format!("b{i}"),
            x: format!("x{i}"),
            x_matches: if i % 2 == 0 { Side::A } else { Side::B },
            variant: Variant::WithinSpeaker,
        })
        .collect();
    let mut r = rng(2024);
    let mut random = BTreeMap::new();
    let mut separated = BTreeMap::new();
    for (i, t) in triples.iter().enumerate() {
        for id in [&t.a, &t.b, &t.x] {
            random.insert(id.clone(), (0..16).map(|_| r.sample::<f64, _>(StandardNormal) as f32).collect::<Vec<f32>>());
        }
        let axis_of = |id: &str| match &id[..1] {
            "a" => 0,
            "b" => 1,
            _ => i % 2,
        };
        for id in [&t.a, &t.b, &t.x] {
            let axis = axis_of(id);
            let v: Vec<f32> = (0..4).map(|d| f32::from(d == axis) + r.gen_range(-0.05..0.05)).collect();
            separated.insert(id.clone(), v);
        }
    }
    let null = eval::score_abx_archive(&triples, &archive_of(random), AbxMetric::Cosine)
        .map_err(|e| e.to_string())?
        .error_rate
        .unwrap();
    let sep = eval::score_abx_archive(&triples, &archive_of(separated), AbxMetric::Cosine)
        .map_err(|e| e.to_string())?
        .error_rate
        .unwrap();
    ensure(sep == 0.0, || format!("separated embeddings scored {sep}%"))?;
    ensure((null - 50.0).abs() <= 2.0, || format!("random embeddings scored {null}%"))?;
    Ok(format!("separated {sep:.2}%, random {null:.2}% over 10000 triples"))
}

fn end_to_end(dir: &Path) -> Outcome {
    use common::ok;
    let t0 = Instant::now();
    ok(dir, &["synth", "--out", "corpus", "--seed", "0"]);
    ok(dir, &["mfcc", "--manifest", "corpus/manifest.tsv", "--audio-root", "corpus", "--out-archive", "feats"]);
    let segs = corpus::load_manifest(dir.join("corpus/manifest.tsv")).map_err(|e| e.to_string())?;
    ensure(segs.len() == 150, || format!("corpus has {} segments", segs.len()))?;
    ok(dir, &["pairs", "--manifest", "corpus/manifest.tsv", "--variant", "both", "--seed", "0", "--out", "tasks.tsv"]);
    let epochs = "60";
    let mut rates = BTreeMap::new();
    for mode in ["self", "super"] {
        let model = format!("{mode}.awec");
        ok(dir, &[
            "train", "--archive", "feats", "--manifest", "corpus/manifest.tsv", "--mode", mode, "--hidden", "32",
            "--layers", "1", "--epochs", epochs, "--seed", "0", "--out-model", &model,
        ]);
        let emb = format!("{mode}_emb");
        ok(dir, &["embed", "--model", &model, "--archive", "feats", "--out-archive", &emb]);
        let report = format!("{mode}_abx.tsv");
        ok(dir, &["abx", "--tasks", "tasks.tsv", "--source", &emb, "--metric", "cosine", "--out-report", &report]);
        let cl = format!("{mode}_cluster.tsv");
        ok(dir, &["cluster", "--embeddings", &emb, "--manifest", "corpus/manifest.tsv", "--seed", "0", "--out-report", &cl]);
        let r = common::report_rates(&dir.join(&report));
        let within = r["within_speaker"].ok_or("no within-speaker triples")?;
        let across = r["across_speaker"].ok_or("no across-speaker triples")?;
        let (k, acc) = common::cluster_report(&dir.join(&cl));
        rates.insert(mode, (within, across, k, acc));
    }
    let elapsed = t0.elapsed().as_secs_f64();
    let (s_within, s_across, _, s_acc) = rates["self"];
    let (p_within, p_across, k, p_acc) = rates["super"];
    let summary = format!(
        "self: within {s_within:.2}% across {s_across:.2}% cluster {s_acc:.1}%; \
         super: within {p_within:.2}% across {p_across:.2}% cluster {p_acc:.1}% (k={k}); {epochs} epochs; {elapsed:.0}s"
    );
    ensure(s_within < 15.0, || format!("(a) self-supervised within-speaker {s_within}% >= 15%; {summary}"))?;
    ensure(p_within < 5.0, || format!("(b) supervised within-speaker {p_within}% >= 5%; {summary}"))?;
    ensure(p_acc > 90.0, || format!("(b) supervised clustering {p_acc}% <= 90%; {summary}"))?;
    ensure(p_across < s_across, || format!("(c) supervised across {p_across}% not below {s_across}%; {summary}"))?;
    ensure(elapsed < 600.0, || format!("took {elapsed:.0}s; {summary}"))?;
    Ok(summary)
}

fn clustering_oracle() -> Outcome {
    let acc = eval::clustering_accuracy(&[0, 0, 0, 1, 1, 1], &["w1", "w1", "w2", "w2", "w2", "w1"]).unwrap();
    ensure(acc == 400.0 / 6.0, || format!("hand-counted case gave {acc}"))?;
    let pts: Vec<Vec<f64>> = (0..9).map(|i| vec![i as f64, (i * i % 7) as f64]).collect();
    let km = eval::kmeans(&pts, 9, 0, &KMeansConfig::default()).unwrap();
    ensure(km.inertia == 0.0, || format!("k=n inertia {}", km.inertia))?;
    let assign = [0usize, 0, 1, 2, 1, 2, 2, 0, 1, 1];
    let words = ["a", "b", "a", "c", "a", "c", "b", "b", "a", "c"];
    let base = eval::clustering_accuracy(&assign, &words).unwrap();
    for perm in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
        let relabeled: Vec<usize> = assign.iter().map(|&c| perm[c]).collect();
        let a = eval::clustering_accuracy(&relabeled, &words).unwrap();
        ensure(a == base, || format!("relabeling {perm:?} changed accuracy {base} -> {a}"))?;
    }
    Ok(format!("66.7% case = {acc:.4}; k=n inertia 0; all 6 relabelings give {base:.4}"))
}

fn format_round_trips(dir: &Path) -> Outcome {
    let mut r = rng(31);
    let mut entries = BTreeMap::new();
    for i in 0..5 {
        let rows = r.gen_range(1..20);
        let mut m = random_features(&mut r, rows, 39);
        m.feature_kind = "mfcc39".into();
        entries.insert(format!("seg{i}"), m);
    }
    let arch_dir = dir.join("archive");
    corpus::write_archive(&entries, &arch_dir).map_err(|e| e.to_string())?;
    let back = corpus::read_archive(&arch_dir).map_err(|e| e.to_string())?;
    for (id, m) in &entries {
        let b = back.get(id).map_err(|e| e.to_string())?;
        let same = m.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits());
        ensure(same && b.rows() == m.rows(), || format!("archive entry {id} changed"))?;
    }

    let mut cfg = AweConfig::supervised(39, awe::char_vocab(&["night", "light"]));
    cfg.hidden = 6;
    let model = AweModel::new(cfg, &mut rng(32)).unwrap();
    let ckpt = dir.join("m.awec");
    model.save_checkpoint(&ckpt).map_err(|e| e.to_string())?;
    let loaded = AweModel::load_checkpoint(&ckpt).map_err(|e| e.to_string())?;
    ensure(loaded.config == model.config, || "checkpoint config changed".into())?;
    let mut gap: f64 = 0.0;
    for m in entries.values() {
        let (a, b) = (model.embed(m).unwrap(), loaded.embed(m).unwrap());
        gap = a.iter().zip(&b).fold(gap, |g, (x, y)| g.max((x - y).abs()));
    }
    ensure(gap < 1e-5, || format!("checkpoint embeddings differ by {gap}"))?;

    let bytes = fs::read(&ckpt).unwrap();
    fs::write(&ckpt, &bytes[..bytes.len() / 2]).unwrap();
    match AweModel::load_checkpoint(&ckpt) {
        Err(e @ Error::Corruption { .. }) if e.exit_code() == 3 => {}
        other => return Err(format!("truncated checkpoint gave {other:?}")),
    }
    let entry = arch_dir.join("000000.awef");
    let bytes = fs::read(&entry).unwrap();
    fs::write(&entry, &bytes[..bytes.len() - 1]).unwrap();
    match corpus::read_archive(&arch_dir) {
        Err(e @ Error::Corruption { .. }) if e.exit_code() == 3 => {}
        other => return Err(format!("truncated archive gave {:?}", other.map(|a| a.len()))),
    }
    let code = common::code(dir, &["embed", "--model", "m.awec", "--archive", "archive", "--out-archive", "x"]);
    ensure(code == 3, || format!("CLI exit code {code} for truncated inputs"))?;
    Ok(format!("archive bit-exact; checkpoint max embedding gap {gap:.1e}; truncations rejected with code 3"))
}

fn pipeline(dir: &Path) {
    use common::ok;
    ok(dir, &["synth", "--out", "corpus", "--words", "light,night,might,sight", "--speakers", "2", "--tokens", "4", "--seed", "3"]);
    ok(dir, &["mfcc", "--manifest", "corpus/manifest.tsv", "--audio-root", "corpus", "--out-archive", "feats"]);
    ok(dir, &["pairs", "--manifest", "corpus/manifest.tsv", "--seed", "3", "--cap", "5", "--out", "tasks.tsv"]);
    ok(dir, &[
        "train", "--archive", "feats", "--manifest", "corpus/manifest.tsv", "--mode", "super", "--hidden", "8",
        "--layers", "1", "--epochs", "5", "--seed", "3", "--out-model", "model.awec",
    ]);
    ok(dir, &["embed", "--model", "model.awec", "--archive", "feats", "--out-archive", "emb"]);
    ok(dir, &["abx", "--tasks", "tasks.tsv", "--source", "feats", "--metric", "dtw", "--out-report", "dtw.tsv"]);
    ok(dir, &["abx", "--tasks", "tasks.tsv", "--source", "emb", "--metric", "cosine", "--out-report", "emb.tsv"]);
    ok(dir, &["cluster", "--embeddings", "emb", "--manifest", "corpus/manifest.tsv", "--seed", "3", "--out-report", "cluster.tsv"]);
}

fn determinism(dir: &Path) -> Outcome {
    let (a, b) = (dir.join("run1"), dir.join("run2"));
    for d in [&a, &b] {
        fs::create_dir_all(d).unwrap();
        pipeline(d);
    }
    let (sa, sb) = (common::snapshot(&a), common::snapshot(&b));
    ensure(sa.keys().eq(sb.keys()), || "runs produced different file sets".into())?;
    let differing: Vec<String> = sa
        .iter()
        .filter(|(k, v)| sb[*k] != **v)
        .map(|(k, _)| k.display().to_string())
        .collect();
    ensure(differing.is_empty(), || format!("differing outputs: {differing:?}"))?;
    Ok(format!("7 commands; {} output files byte-identical across two runs", sa.len()))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let sub = |name: &str| {
        let p = tmp.path().join(name);
        fs::create_dir_all(&p).unwrap();
        p
    };
    let criteria: Vec<Criterion> = vec![
        ("parameter-count oracles", Box::new(parameter_counts)),
        ("gradient correctness", Box::new(gradient_correctness)),
        ("DTW oracle equivalence", Box::new(dtw_oracle)),
        ("ABX null and separation", Box::new(abx_null_and_separation)),
        ("end-to-end toy experiment", Box::new({
            let d = sub("e2e");
            move || end_to_end(&d)
        })),
        ("clustering accuracy oracle", Box::new(clustering_oracle)),
        ("format round-trips", Box::new({
            let d = sub("formats");
            move || format_round_trips(&d)
        })),
        ("CLI determinism", Box::new({
            let d = sub("determinism");
            move || determinism(&d)
        })),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let t0 = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(run))
            .unwrap_or_else(|p| Err(format!("panicked: {:?}", p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())))));
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name} ({secs:.1}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name} ({secs:.1}s): {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
