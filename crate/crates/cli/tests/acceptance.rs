//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero if any fails. Criteria 4, 5 and 10 share one A/B run (several
//! minutes in release-like profiles).
//!
//! Run alone with `cargo test -p acnn-cli --test acceptance`; append
//! `-- 1 3 8` to run only the listed criteria.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use acnn_core::data::{
    corpus_stats, generate_corpus, parse_annotated, preprocess, write_annotated, write_corpus,
    CorpusFormat, DisfluencyKind, GeneratorConfig, Label, Lexicon,
};
use acnn_core::experiment::{run_ab, AbConfig, AbReport};
use acnn_core::layers::{autocorr_forward, b_storage_shape, conv1d_forward, ConvKernelSpec};
use acnn_core::model::{
    build, param_count_for_config, Arch, LayerConfig, ModelConfig, REFERENCE_TOTAL,
};
use acnn_core::training::check_gradients;
use acnn_core::{Rng, Tensor};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

// 1 --------------------------------------------------------------------------

fn reduction_invariant() -> Outcome {
    let started = Instant::now();
    let mut acnn_cfg = ModelConfig::toy(Arch::Acnn);
    acnn_cfg.vocab_size = 200;
    let cnn_cfg = acnn_cfg.with_arch(Arch::Cnn);
    let (acnn, mut ap) = build(&acnn_cfg, &mut Rng::new(31)).map_err(|e| e.to_string())?;
    let (cnn, mut cp) = build(&cnn_cfg, &mut Rng::new(99)).map_err(|e| e.to_string())?;
    for id in acnn.b_kernel_ids() {
        ap.value_mut(id).fill(0.0);
    }
    for (name, value) in ap.iter() {
        if let Some(id) = cp.id(name) {
            *cp.value_mut(id) = value.clone();
        }
    }
    let mut rng = Rng::new(5);
    for s in 0..50 {
        let n = 1 + rng.below(25);
        let ids: Vec<usize> = (0..n).map(|_| rng.below(acnn_cfg.vocab_size)).collect();
        let pa = acnn.forward(&ap, &ids, false, &mut Rng::new(0)).map_err(|e| e.to_string())?;
        let pc = cnn.forward(&cp, &ids, false, &mut Rng::new(0)).map_err(|e| e.to_string())?;
        let same = pa.data().iter().zip(pc.data()).all(|(x, y)| x.to_bits() == y.to_bits());
        ensure(same, format!("sentence {s} (n={n}) differs"))?;
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(secs < 60.0, format!("took {secs:.1}s"))?;
    Ok(format!("50 sentences bitwise equal in {secs:.1}s"))
}

// 2 --------------------------------------------------------------------------

/// Toy layer structure at the `acnn gradcheck` default width (embedding 4,
/// 3 channels). At the full toy width some gradient elements fall below
/// 1e-8, where central-difference roundoff alone exceeds the tolerance.
fn toy_with_first_layer(arch: Arch, first_groups: &[(usize, usize)]) -> ModelConfig {
    let mut cfg = ModelConfig::toy(arch);
    cfg.embedding_dim = 4;
    cfg.vocab_size = 12;
    for l in &mut cfg.layers {
        l.channels = 3;
    }
    cfg.layers[0] = LayerConfig::new(cfg.layers[0].kind, first_groups, 3);
    cfg
}

fn gradient_correctness() -> Outcome {
    let started = Instant::now();
    let mut tensors = 0;
    let mut worst: f64 = 0.0;
    for arch in [Arch::Cnn, Arch::Acnn] {
        for groups in [&[(2usize, 6usize), (1, 2)][..], &[(0, 1), (0, 2)][..]] {
            let cfg = toy_with_first_layer(arch, groups);
            let (net, params) = build(&cfg, &mut Rng::new(3)).map_err(|e| e.to_string())?;
            for ids in [vec![3usize], vec![1, 4, 4, 7, 2, 9, 11]] {
                let labels: Vec<usize> = ids.iter().map(|i| i % 2).collect();
                let reports = check_gradients(&net, &params, &ids, &labels, 1e-5, 1e-4, |_, _| {})
                    .map_err(|e| e.to_string())?;
                for (name, r) in reports {
                    ensure(
                        r.passed,
                        format!("{arch} groups={groups:?} n={}: {name} rel err {:.2e}", ids.len(), r.max_rel_error),
                    )?;
                    tensors += 1;
                    worst = worst.max(r.max_rel_error);
                }
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(secs < 300.0, format!("took {secs:.1}s"))?;
    Ok(format!("{tensors} tensor checks, worst rel err {worst:.2e}, {secs:.1}s"))
}

// 3 --------------------------------------------------------------------------

fn padded(x: &Tensor, ell: usize, r: usize) -> Vec<Vec<f64>> {
    let (n, m) = (x.rows(), x.shape()[1]);
    let mut p = vec![vec![0.0; m]; n + ell + r];
    for t in 0..n {
        p[t + ell].copy_from_slice(x.row(t));
    }
    p
}

/// Neumaier-compensated sum. Outputs that cancel to ~1e-3 from hundreds of
/// O(1) terms lose ~1e-12 relative accuracy under plain summation, so the
/// oracles accumulate this way to stay the more accurate side.
#[derive(Default)]
struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    fn add(&mut self, v: f64) {
        let t = self.s + v;
        if self.s.abs() >= v.abs() {
            self.c += (self.s - t) + v;
        } else {
            self.c += (v - t) + self.s;
        }
        self.s = t;
    }

    fn value(&self) -> f64 {
        self.s + self.c
    }
}

fn conv_terms(p: &[Vec<f64>], t: usize, u: usize, spec: &ConvKernelSpec, a: &Tensor, b: &Tensor, acc: &mut Sum) {
    acc.add(b.data()[u]);
    for o in 0..spec.width() {
        for (k, v) in p[t + o].iter().enumerate() {
            acc.add(a.get3(u, o, k) * v);
        }
    }
}

fn oracle_conv(x: &Tensor, spec: &ConvKernelSpec, a: &Tensor, b: &Tensor) -> Vec<f64> {
    let p = padded(x, spec.ell, spec.r);
    let mut out = Vec::new();
    for t in 0..x.rows() {
        for u in 0..spec.out_channels {
            let mut acc = Sum::default();
            conv_terms(&p, t, u, spec, a, b, &mut acc);
            out.push(acc.value());
        }
    }
    out
}

/// Builds the whole padded interaction tensor, then contracts each window.
fn oracle_autocorr(x: &Tensor, spec: &ConvKernelSpec, a: &Tensor, bk: &Tensor, b: &Tensor) -> Vec<f64> {
    let (n, m) = (x.rows(), x.shape()[1]);
    let w = spec.width();
    let p = padded(x, spec.ell, spec.r);
    let total = p.len();
    let mut xhat = vec![vec![vec![0.0; m]; total]; total];
    for i in 0..total {
        for j in 0..total {
            for k in 0..m {
                xhat[i][j][k] = p[i][k] * p[j][k];
            }
        }
    }
    let mut out = Vec::new();
    for t in 0..n {
        for u in 0..spec.out_channels {
            let mut acc = Sum::default();
            conv_terms(&p, t, u, spec, a, b, &mut acc);
            for i in 0..w {
                for j in 0..w {
                    for k in 0..m {
                        acc.add(bk.get3(u * w + i, j, k) * xhat[t + i][t + j][k]);
                    }
                }
            }
            out.push(acc.value());
        }
    }
    out
}

fn operator_oracles() -> Outcome {
    let mut rng = Rng::new(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = 1 + rng.below(16);
        let m = 1 + rng.below(8);
        let spec = ConvKernelSpec::new(rng.below(5), rng.below(5), m, 1 + rng.below(4)).map_err(|e| e.to_string())?;
        let x = rng.uniform_tensor(&[n, m], 1.0);
        let a = rng.uniform_tensor(&spec.a_shape(), 1.0);
        let bk = rng.uniform_tensor(&b_storage_shape(&spec), 1.0);
        let b = rng.uniform_tensor(&[spec.out_channels], 1.0);
        let (yc, _) = conv1d_forward(&x, &spec, &a, &b).map_err(|e| e.to_string())?;
        let (ya, _) = autocorr_forward(&x, &spec, &a, &bk, &b).map_err(|e| e.to_string())?;
        for (got, want) in [(yc, oracle_conv(&x, &spec, &a, &b)), (ya, oracle_autocorr(&x, &spec, &a, &bk, &b))] {
            ensure(got.len() == want.len(), "output size differs from oracle")?;
            for (g, w) in got.data().iter().zip(&want) {
                worst = worst.max(rel_err(*g, *w));
            }
        }
    }
    ensure(worst < 1e-12, format!("max rel err {worst:.2e}"))?;
    Ok(format!("100 instances per operator, max rel err {worst:.2e}"))
}

// 4, 5, 10 ---------------------------------------------------------------------

fn ab_run() -> Result<AbReport, String> {
    let cfg = AbConfig::new("rough-copy-hard", vec![1, 2, 3]).map_err(|e| e.to_string())?;
    run_ab(&cfg, |m| {
        if m.contains("done") {
            eprintln!("  {m}");
        }
    })
    .map_err(|e| e.to_string())
}

fn ab_gap(report: &AbReport, elapsed: Duration) -> Outcome {
    let (c, a) = (100.0 * report.mean_f1(Arch::Cnn), 100.0 * report.mean_f1(Arch::Acnn));
    let gap = a - c;
    let detail = format!(
        "CNN F={c:.2} ACNN F={a:.2} gap={gap:+.2} over 3 seeds in {:.0}s",
        elapsed.as_secs_f64()
    );
    ensure(gap >= 3.0 && a >= 85.0, detail.clone())?;
    Ok(detail)
}

fn kind_ordering(report: &AbReport) -> Outcome {
    let get = |arch, kind| report.mean_kind_f1(arch, kind).unwrap_or(f64::NAN) * 100.0;
    let (ar, ac) = (get(Arch::Acnn, DisfluencyKind::Repetition), get(Arch::Acnn, DisfluencyKind::Correction));
    let (cr, cc) = (get(Arch::Cnn, DisfluencyKind::Repetition), get(Arch::Cnn, DisfluencyKind::Correction));
    let detail = format!("repetition ACNN {ar:.2} / CNN {cr:.2}; correction ACNN {ac:.2} / CNN {cc:.2}");
    ensure(ar > ac && ar >= cr && ac >= cc, detail.clone())?;
    Ok(detail)
}

fn similarity(report: &AbReport) -> Outcome {
    let (copy, distinct, random) = report.mean_similarity(Arch::Acnn);
    let detail = format!(
        "ACNN copy-pair cos {copy:.3} vs random {random:.3} (gap {:.3}); distinct-word copy pairs {distinct:.3} (gap {:.3})",
        copy - random,
        distinct - random
    );
    ensure(copy - random >= 0.1 && distinct - random >= 0.1, detail.clone())?;
    Ok(detail)
}

// 6 --------------------------------------------------------------------------

fn generator_statistics() -> Outcome {
    let mut parts = Vec::new();
    for preset in ["switchboard-like", "rough-copy-hard"] {
        let mut cfg = GeneratorConfig::preset(preset).map_err(|e| e.to_string())?;
        cfg.fluent_ratio = 0.0;
        cfg.sentences = 10_000;
        let st = corpus_stats(&generate_corpus(&cfg, &Lexicon::english()).map_err(|e| e.to_string())?);
        ensure(st.spans >= 10_000, format!("{preset}: only {} spans", st.spans))?;
        let rate = st.exact_copy_rate();
        ensure((rate - 0.60).abs() <= 0.05, format!("{preset}: exact-copy rate {rate:.3}"))?;
        let mut worst: f64 = 0.0;
        let buckets = st.distance_hist.len().max(cfg.distance_hist.len());
        for d in 0..buckets {
            let got = st.distance_hist.get(d).copied().unwrap_or(0.0);
            let want = cfg.distance_hist.get(d).copied().unwrap_or(0.0);
            worst = worst.max((got - want).abs());
        }
        ensure(worst <= 0.03, format!("{preset}: histogram off by {worst:.3}"))?;
        parts.push(format!("{preset}: copy {rate:.3}, hist dev {worst:.3}"));
    }
    let cfg = GeneratorConfig::preset("switchboard-like").map_err(|e| e.to_string())?;
    let rate = corpus_stats(&generate_corpus(&cfg, &Lexicon::english()).map_err(|e| e.to_string())?).disfluent_rate();
    ensure((0.05..=0.08).contains(&rate), format!("switchboard-like disfluent rate {rate:.4}"))?;
    parts.push(format!("switchboard-like disfluent rate {:.2}%", 100.0 * rate));
    Ok(parts.join("; "))
}

// 7 --------------------------------------------------------------------------

fn round_trips() -> Outcome {
    let mut cfg = GeneratorConfig::preset("switchboard-like").map_err(|e| e.to_string())?;
    cfg.sentences = 1000;
    cfg.fluent_ratio = 0.3;
    let corpus = generate_corpus(&cfg, &Lexicon::english()).map_err(|e| e.to_string())?;
    for (i, seq) in corpus.iter().enumerate() {
        let text = write_annotated(seq);
        let back = parse_annotated(&text).map_err(|e| format!("sentence {i}: {e}"))?;
        ensure(back == *seq && write_annotated(&back) == text, format!("sentence {i} does not round-trip"))?;
        let once = preprocess(seq);
        ensure(preprocess(&once) == once, format!("preprocess not idempotent on sentence {i}"))?;
    }
    let raw = parse_annotated("Well , [ I I- + I ] said , uh , No .").map_err(|e| e.to_string())?;
    let once = preprocess(&raw);
    ensure(preprocess(&once) == once, "preprocess not idempotent on the raw case")?;
    let ex = parse_annotated("i want a flight [ to boston + { uh i mean } to denver ] on friday")
        .map_err(|e| e.to_string())?;
    let disfluent: Vec<&str> = ex
        .tokens
        .iter()
        .zip(&ex.labels)
        .filter(|(_, l)| **l == Label::Disfluent)
        .map(|(t, _)| t.as_str())
        .collect();
    ensure(disfluent == ["to", "boston"], format!("Example 1 disfluent set {disfluent:?}"))?;
    Ok("1000 sentences round-trip; preprocess idempotent; Example 1 -> {to, boston}".into())
}

// 8 --------------------------------------------------------------------------

fn train_once(dir: &Path, out: &str) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_acnn"))
        .current_dir(dir)
        .args([
            "--threads", "1", "train", "--arch", "acnn", "--train", "train.txt", "--dev", "dev.txt",
            "--seed", "9", "--epochs", "3", "--out", out,
        ])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(
        status.status.success(),
        format!("train failed: {}", String::from_utf8_lossy(&status.stderr)),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = GeneratorConfig::preset("rough-copy-hard").map_err(|e| e.to_string())?;
    cfg.sentences = 150;
    let corpus = generate_corpus(&cfg, &Lexicon::english()).map_err(|e| e.to_string())?;
    let (train, dev) = corpus.split_at(100);
    write_corpus(&dir.path().join("train.txt"), train, CorpusFormat::Bracket).map_err(|e| e.to_string())?;
    write_corpus(&dir.path().join("dev.txt"), dev, CorpusFormat::Bracket).map_err(|e| e.to_string())?;
    train_once(dir.path(), "a")?;
    train_once(dir.path(), "b")?;
    for file in ["metrics.log", "model.ckpt"] {
        let x = std::fs::read(dir.path().join("a").join(file)).map_err(|e| e.to_string())?;
        let y = std::fs::read(dir.path().join("b").join(file)).map_err(|e| e.to_string())?;
        ensure(!x.is_empty() && x == y, format!("{file} differs between runs"))?;
    }
    Ok("metrics.log and model.ckpt byte-identical across two seeded runs".into())
}

// 9 --------------------------------------------------------------------------

fn parameter_counts() -> Outcome {
    let cnn = param_count_for_config(&ModelConfig::preset("cnn-table1").map_err(|e| e.to_string())?);
    let acnn = param_count_for_config(&ModelConfig::preset("acnn-table1").map_err(|e| e.to_string())?);
    ensure(cnn.total() > cnn.network() && acnn.total() > acnn.network(), "embedding not counted")?;
    ensure(
        acnn.layers.iter().any(|l| l.b_kernels > 0) && cnn.layers.iter().all(|l| l.b_kernels == 0),
        "B kernels attributed to the wrong architecture",
    )?;
    let (x, y) = (cnn.network() as f64, acnn.network() as f64);
    let diff = (x - y).abs() / x.max(y);
    let detail = format!(
        "non-embedding CNN {} / ACNN {} ({:.1}% apart); with embedding {} / {}; reference {REFERENCE_TOTAL}",
        cnn.network(),
        acnn.network(),
        100.0 * diff,
        cnn.total(),
        acnn.total()
    );
    ensure(diff <= 0.25, detail.clone())?;
    Ok(detail)
}

// ----------------------------------------------------------------------------

fn run(results: &mut Vec<(usize, bool)>, n: usize, name: &str, f: impl FnOnce() -> Outcome) {
    let started = Instant::now();
    let outcome = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(o) => o,
        Err(p) => Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    };
    let secs = started.elapsed().as_secs_f64();
    match &outcome {
        Ok(d) => println!("PASS {n:>2} {name}: {d} [{secs:.1}s]"),
        Err(d) => println!("FAIL {n:>2} {name}: {d} [{secs:.1}s]"),
    }
    results.push((n, outcome.is_ok()));
}

fn main() {
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let want = |n: usize| only.is_empty() || only.contains(&n);
    let mut results = Vec::new();
    if want(1) {
        run(&mut results, 1, "reduction invariant", reduction_invariant);
    }
    if want(2) {
        run(&mut results, 2, "gradient correctness", gradient_correctness);
    }
    if want(3) {
        run(&mut results, 3, "operator oracles", operator_oracles);
    }
    let ab = if want(4) || want(5) || want(10) {
        let started = Instant::now();
        let ab = ab_run();
        Some((ab, started.elapsed()))
    } else {
        None
    };
    let with_ab = |results: &mut Vec<(usize, bool)>, n: usize, name: &str, f: &dyn Fn(&AbReport, Duration) -> Outcome| {
        if let (true, Some((ab, elapsed))) = (want(n), &ab) {
            match ab {
                Ok(report) => run(results, n, name, || f(report, *elapsed)),
                Err(e) => run(results, n, name, || Err(e.clone())),
            }
        }
    };
    with_ab(&mut results, 4, "A/B gap", &|r, t| ab_gap(r, t));
    with_ab(&mut results, 5, "per-kind ordering", &|r, _| kind_ordering(r));
    if want(6) {
        run(&mut results, 6, "generator statistics", generator_statistics);
    }
    if want(7) {
        run(&mut results, 7, "data round-trips", round_trips);
    }
    if want(8) {
        run(&mut results, 8, "determinism", determinism);
    }
    if want(9) {
        run(&mut results, 9, "parameter counts", parameter_counts);
    }
    with_ab(&mut results, 10, "similarity diagnostic", &|r, _| similarity(r));
    let failed: Vec<usize> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} criteria pass",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        println!("failing: {failed:?}");
        std::process::exit(1);
    }
}
