use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process;
use std::time::Instant;

use acnn_core::data::{
    build_vocab, corpus_stats, format_corpus, generate_splits, preprocess_corpus, read_corpus,
    write_corpus, CorpusFormat, Label, Lexicon, TokenSequence, Vocabulary,
};
use acnn_core::eval::{error_listing, score_corpora, similarity_heatmap};
use acnn_core::experiment::{run_ab, AbConfig};
use acnn_core::model::{
    alternate_reading, build, param_count_for_config, write_atomic, Checkpoint, ModelConfig,
    Network, ParamStore, REFERENCE_TOTAL,
};
use acnn_core::rng::Rng;
use acnn_core::training::{check_gradients, random_search, train, trial_table, SearchSpace};
use serde_json::json;

use crate::args::*;
use crate::config::{apply_model_flags, apply_train_flags, overlay, read_config_file, resolve_generator, resolve_model_train};
use crate::manifest::{self, Recorder};
use crate::CliError;

pub fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = Ctx {
        data_dir: cli.data_dir,
        threads: cli.threads.max(1),
        manifest: cli.manifest,
    };
    match cli.command {
        Command::Synth(a) => synth(&ctx, a),
        Command::Train(a) => cmd_train(&ctx, a),
        Command::Tag(a) => tag(&ctx, a),
        Command::Eval(a) => eval(&ctx, a),
        Command::Gradcheck(a) => gradcheck(&ctx, a),
        Command::AbBench(a) => ab_bench(&ctx, a),
        Command::Search(a) => search(&ctx, a),
        Command::Params(a) => params(&ctx, a),
        Command::Heatmap(a) => heatmap(&ctx, a),
        Command::Replay(a) => replay(a),
    }
}

struct Ctx {
    data_dir: PathBuf,
    threads: usize,
    manifest: Option<PathBuf>,
}

impl Ctx {
    fn manifest_path(&self) -> Option<&Path> {
        self.manifest.as_deref()
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| acnn_core::Error::io(dir, e).into())
}

fn format_for(path: &Path, explicit: Option<CorpusFormat>) -> CorpusFormat {
    explicit.unwrap_or_else(|| CorpusFormat::from_path(path))
}

fn load_clean(path: &Path, format: Option<CorpusFormat>) -> Result<Vec<TokenSequence>, CliError> {
    Ok(preprocess_corpus(&read_corpus(path, format_for(path, format))?))
}

/// Maps `f` over `items` on up to `threads` scoped threads, keeping order.
fn par_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    if threads <= 1 || items.len() < 2 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<R>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker thread panicked"))
            .collect()
    })
}

fn tag_labels(
    net: &Network,
    params: &ParamStore,
    vocab: &Vocabulary,
    corpus: &[TokenSequence],
    threads: usize,
) -> Result<Vec<Vec<Label>>, CliError> {
    par_map(corpus, threads, |s| -> Result<Vec<Label>, CliError> {
        if s.is_empty() {
            return Ok(Vec::new());
        }
        let pred = net.predict(params, &vocab.encode_seq(s))?;
        Ok(pred.into_iter().map(Label::from_index).collect())
    })
    .into_iter()
    .collect()
}

fn synth(ctx: &Ctx, a: SynthArgs) -> Result<(), CliError> {
    let mut rec = Recorder::new("synth");
    let file = read_config_file(a.config.as_deref())?;
    let mut g = resolve_generator(&a.preset, &file)?;
    if let Some(s) = a.seed {
        g.seed = s;
    }
    if let Some(n) = a.train_sentences {
        g.sentences = n;
    }
    if let Some(n) = a.dev_sentences {
        g.dev_sentences = n;
    }
    if let Some(n) = a.test_sentences {
        g.test_sentences = n;
    }
    g.validate()?;
    let out = a.out.unwrap_or_else(|| ctx.data_dir.join(&a.preset));
    create_dir(&out)?;
    let started = Instant::now();
    let splits = generate_splits(&g, &Lexicon::english())?;
    rec.timing("generate", started.elapsed().as_secs_f64());
    let ext = match a.format {
        CorpusFormat::Bracket => "txt",
        CorpusFormat::Tabular => "tsv",
    };
    for (name, corpus) in ["train", "dev", "test"].iter().zip(&splits) {
        let path = out.join(format!("{name}.{ext}"));
        write_corpus(&path, corpus, a.format)?;
        let st = corpus_stats(corpus);
        println!(
            "{}: {} sentences, {} tokens, {:.2}% disfluent, {} spans, exact-copy rate {:.3}",
            path.display(),
            st.sentences,
            st.tokens,
            100.0 * st.disfluent_rate(),
            st.spans,
            st.exact_copy_rate()
        );
        rec.output(&path)?;
    }
    rec.config(json!({ "preset": a.preset, "generator": g, "format": a.format }))
        .seed(g.seed);
    rec.write(ctx.manifest_path(), Some(&out.join("manifest.json")))?;
    Ok(())
}

fn cmd_train(ctx: &Ctx, a: TrainArgs) -> Result<(), CliError> {
    let mut rec = Recorder::new("train");
    let file = read_config_file(a.config.as_deref())?;
    let (mut model, mut tc) = resolve_model_train(a.arch, &a.preset, &file, &a.overrides)?;
    model.seed = a.seed;
    tc.seed = a.seed;
    let train_path = a.train.unwrap_or_else(|| ctx.data_dir.join("train.txt"));
    let dev_path = a.dev.unwrap_or_else(|| ctx.data_dir.join("dev.txt"));
    let train_set = load_clean(&train_path, a.format)?;
    let dev_set = load_clean(&dev_path, a.format)?;
    rec.input(&train_path)?.input(&dev_path)?;
    let vocab = build_vocab(&train_set, a.min_freq)?;
    model.vocab_size = vocab.len();
    model.validate()?;
    let out = a
        .out
        .unwrap_or_else(|| ctx.data_dir.join("runs").join(format!("{}-seed{}", model.name, a.seed)));
    create_dir(&out)?;
    let (net, mut params) = build(&model, &mut Rng::new(model.seed))?;
    println!(
        "training {} on {} sentences ({} dev), vocabulary {}, {} parameters",
        model.name,
        train_set.len(),
        dev_set.len(),
        vocab.len(),
        params.total_len()
    );
    let started = Instant::now();
    let outcome = train(&net, &mut params, &vocab, &train_set, &dev_set, &tc, |e| println!("{e}"))?;
    rec.timing("train", started.elapsed().as_secs_f64());
    let ckpt = out.join("model.ckpt");
    outcome.best.save(&ckpt)?;
    let log_path = out.join("metrics.log");
    write_atomic(&log_path, outcome.log_text().as_bytes())?;
    let best = &outcome.log[outcome.best_epoch - 1];
    println!(
        "best epoch {}: dev P={} R={} F={}",
        best.epoch,
        pct(best.dev_precision),
        pct(best.dev_recall),
        pct(best.dev_f1)
    );
    println!("checkpoint: {}", ckpt.display());
    rec.output(&ckpt)?.output(&log_path)?;
    rec.config(json!({
        "model": model,
        "train": tc,
        "min_freq": a.min_freq,
        "train_path": train_path,
        "dev_path": dev_path,
        "format": a.format,
    }))
    .seed(a.seed);
    rec.write(ctx.manifest_path(), Some(&out.join("manifest.json")))?;
    Ok(())
}

fn pct(v: Option<f64>) -> String {
    v.map_or("NA".into(), |x| format!("{:.2}", 100.0 * x))
}

fn load_checkpoint(path: &Path) -> Result<(Checkpoint, Network, ParamStore, Vocabulary), CliError> {
    let ck = Checkpoint::load(path)?;
    let vocab = Vocabulary::from_words(ck.vocab.clone(), 1)?;
    if vocab.len() != ck.config.vocab_size {
        return Err(acnn_core::Error::Mismatch(format!(
            "checkpoint vocabulary has {} entries but the model embeds {}",
            vocab.len(),
            ck.config.vocab_size
        ))
        .into());
    }
    let (net, params) = ck.restore()?;
    Ok((ck, net, params, vocab))
}

fn tag(ctx: &Ctx, a: TagArgs) -> Result<(), CliError> {
    let mut rec = Recorder::new("tag");
    let (ck, net, params, vocab) = load_checkpoint(&a.checkpoint)?;
    let corpus = load_clean(&a.input, a.format)?;
    rec.input(&a.checkpoint)?.input(&a.input)?;
    let labels = tag_labels(&net, &params, &vocab, &corpus, ctx.threads)?;
    let tagged: Vec<TokenSequence> = corpus
        .into_iter()
        .zip(labels)
        .map(|(s, l)| TokenSequence {
            tokens: s.tokens,
            labels: l,
            spans: Vec::new(),
        })
        .collect();
    let text = format_corpus(&tagged, CorpusFormat::Tabular);
    rec.config(json!({ "model": ck.config, "format": a.format }));
    match &a.output {
        Some(path) => {
            write_atomic(path, text.as_bytes())?;
            rec.output(path)?;
            rec.write(ctx.manifest_path(), Some(&sidecar(path)))?;
        }
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| acnn_core::Error::io("<stdout>", e))?;
            rec.write(ctx.manifest_path(), None)?;
        }
    }
    Ok(())
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}

fn eval(ctx: &Ctx, a: EvalArgs) -> Result<(), CliError> {
    let mut rec = Recorder::new("eval");
    let gold = load_clean(&a.gold, a.gold_format)?;
    let pred = load_clean(&a.pred, a.pred_format)?;
    rec.input(&a.gold)?.input(&a.pred)?;
    let report = score_corpora(&gold, &pred)?;
    println!("{report}");
    let listing = error_listing(&report, a.errors);
    if !listing.is_empty() {
        println!("errors (word|GP both, word|G missed, word|P false alarm):");
        print!("{listing}");
    }
    rec.config(json!({ "gold_format": a.gold_format, "pred_format": a.pred_format, "errors": a.errors }));
    match &a.tsv {
        Some(path) => {
            write_atomic(path, report.to_tsv().as_bytes())?;
            rec.output(path)?;
            rec.write(ctx.manifest_path(), Some(&sidecar(path)))?;
        }
        None => {
            rec.write(ctx.manifest_path(), None)?;
        }
    }
    Ok(())
}

fn gradcheck(ctx: &Ctx, a: GradcheckArgs) -> Result<(), CliError> {
    let mut rec = Recorder::new("gradcheck");
    let mut model = ModelConfig::toy(a.arch);
    model.embedding_dim = a.embedding_dim;
    model.vocab_size = a.vocab.max(2);
    for l in &mut model.layers {
        l.channels = a.channels;
    }
    model.seed = a.seed;
    model.validate()?;
    if a.len == 0 {
        return Err(CliError::Usage("--len must be at least 1".into()));
    }
    let (net, params) = build(&model, &mut Rng::new(a.seed))?;
    let mut rng = Rng::new(a.seed.wrapping_add(1));
    let ids: Vec<usize> = (0..a.len).map(|_| rng.below(model.vocab_size)).collect();
    let labels: Vec<usize> = (0..a.len).map(|_| rng.below(2)).collect();
    let corrupt = a.corrupt.clone();
    let reports = check_gradients(&net, &params, &ids, &labels, a.eps, a.tol, |name, g| {
        if corrupt.as_deref() == Some(name) {
            g.data_mut()[0] += 1.0;
        }
    })?;
    println!("tensor\telements\tmax_rel_error\tstatus");
    let mut failed = Vec::new();
    for (name, r) in &reports {
        println!(
            "{name}\t{}\t{:.3e}\t{}",
            r.checked,
            r.max_rel_error,
            if r.passed { "pass" } else { "FAIL" }
        );
        if !r.passed {
            failed.push(name.clone());
        }
    }
    let rows: Vec<_> = reports
        .iter()
        .map(|(n, r)| json!({ "tensor": n, "max_rel_error": r.max_rel_error, "passed": r.passed }))
        .collect();
    rec.config(json!({ "model": model, "len": a.len, "eps": a.eps, "tol": a.tol, "results": rows }))
        .seed(a.seed);
    rec.write(ctx.manifest_path(), None)?;
    if failed.is_empty() {
        println!("all {} tensors pass at tol={}", reports.len(), a.tol);
        Ok(())
    } else {
        Err(CliError::Numeric(format!("gradient check failed for {}", failed.join(", "))))
    }
}

fn ab_bench(ctx: &Ctx, a: AbBenchArgs) -> Result<(), CliError> {
    let mut rec = Recorder::new("ab-bench");
    let file = read_config_file(a.config.as_deref())?;
    let mut cfg = AbConfig::new(&a.preset, a.seeds.clone())?;
    cfg.corpus = overlay(&cfg.corpus, file.generator.as_ref(), "generator")?;
    cfg.model = overlay(&cfg.model, file.model.as_ref(), "model")?;
    cfg.train = overlay(&cfg.train, file.train.as_ref(), "train")?;
    apply_model_flags(&mut cfg.model, &a.overrides);
    apply_train_flags(&mut cfg.train, &a.overrides);
    cfg.validate()?;
    let started = Instant::now();
    let report = run_ab(&cfg, |m| eprintln!("{m}"))?;
    rec.timing("ab", started.elapsed().as_secs_f64());
    println!("{report}");
    let out = a.out.unwrap_or_else(|| ctx.data_dir.join(format!("ab-{}", a.preset)));
    create_dir(&out)?;
    let table = out.join("ab.tsv");
    write_atomic(&table, format!("{report}\n").as_bytes())?;
    let json_path = out.join("ab.json");
    let body = serde_json::to_vec_pretty(&report).map_err(|e| CliError::Usage(e.to_string()))?;
    write_atomic(&json_path, &body)?;
    rec.output(&table)?.output(&json_path)?;
    rec.config(&cfg);
    rec.write(ctx.manifest_path(), Some(&out.join("manifest.json")))?;
    Ok(())
}

fn search(ctx: &Ctx, a: SearchArgs) -> Result<(), CliError> {
    let mut rec = Recorder::new("search");
    let (base, tc) = resolve_model_train(a.arch, &a.preset, &Default::default(), &a.overrides)?;
    let train_path = a.train.unwrap_or_else(|| ctx.data_dir.join("train.txt"));
    let dev_path = a.dev.unwrap_or_else(|| ctx.data_dir.join("dev.txt"));
    let train_set = load_clean(&train_path, a.format)?;
    let dev_set = load_clean(&dev_path, a.format)?;
    rec.input(&train_path)?.input(&dev_path)?;
    let vocab = build_vocab(&train_set, 1)?;
    let space = SearchSpace::default();
    let run_one = |m: &ModelConfig, t: &acnn_core::TrainConfig| -> Result<Option<f64>, acnn_core::Error> {
        let mut m = m.clone();
        m.vocab_size = vocab.len();
        let (net, mut params) = build(&m, &mut Rng::new(m.seed))?;
        let out = train(&net, &mut params, &vocab, &train_set, &dev_set, t, |_| {})?;
        Ok(Some(out.best_dev_f1))
    };
    // Trials are independent; precompute them in parallel, then rank.
    let plan = acnn_core::training::sample_trials(&space, &base, &tc, a.budget, a.seed)?;
    let results: Vec<Result<Option<f64>, acnn_core::Error>> =
        par_map(&plan, ctx.threads, |(m, t)| run_one(m, t));
    let mut results = results.into_iter();
    let trials = random_search(&space, &base, &tc, a.budget, a.seed, |_, _| {
        results.next().expect("one result per trial")
    })?;
    let table = trial_table(&trials);
    print!("{table}");
    let out = a.out.unwrap_or_else(|| ctx.data_dir.join(format!("search-{}.tsv", a.arch)));
    write_atomic(&out, table.as_bytes())?;
    rec.output(&out)?;
    rec.config(json!({ "base_model": base, "train": tc, "space": space, "budget": a.budget }))
        .seed(a.seed);
    rec.write(ctx.manifest_path(), Some(&sidecar(&out)))?;
    Ok(())
}

fn params(ctx: &Ctx, a: ParamsArgs) -> Result<(), CliError> {
    let mut rec = Recorder::new("params");
    let mut networks = Vec::new();
    for name in &a.presets {
        let cfg = ModelConfig::preset(name)?;
        let report = param_count_for_config(&cfg);
        println!("{report}");
        println!("reference total (for comparison only): {REFERENCE_TOTAL}");
        if let Some(v) = report.implied_vocab(REFERENCE_TOTAL, cfg.embedding_dim) {
            println!("vocabulary that would match the reference total: {v}");
        }
        if a.alternate {
            println!("{}", param_count_for_config(&alternate_reading(&cfg)));
        }
        println!();
        networks.push((name.clone(), report.network(), report.total()));
    }
    if networks.len() == 2 {
        let (x, y) = (networks[0].1 as f64, networks[1].1 as f64);
        println!(
            "non-embedding totals {} vs {}: relative difference {:.1}%",
            networks[0].1,
            networks[1].1,
            100.0 * (x - y).abs() / x.max(y)
        );
    }
    rec.config(json!({ "presets": a.presets, "counts": networks }));
    rec.write(ctx.manifest_path(), None)?;
    Ok(())
}

fn heatmap(ctx: &Ctx, a: HeatmapArgs) -> Result<(), CliError> {
    let mut rec = Recorder::new("heatmap");
    let (_, net, params, vocab) = load_checkpoint(&a.checkpoint)?;
    rec.input(&a.checkpoint)?;
    let tokens: Vec<String> = a.sentence.split_whitespace().map(str::to_lowercase).collect();
    if tokens.is_empty() {
        return Err(CliError::Usage("--sentence is empty".into()));
    }
    let ids = vocab.encode(&tokens);
    let h = similarity_heatmap(params.value(net.embedding_id()), &ids, &tokens)?;
    print!("{}", h.to_text());
    rec.config(json!({ "sentence": tokens, "cell": a.cell }));
    match &a.pgm {
        Some(path) => {
            write_atomic(path, &h.to_pgm(a.cell))?;
            rec.output(path)?;
            rec.write(ctx.manifest_path(), Some(&sidecar(path)))?;
        }
        None => {
            rec.write(ctx.manifest_path(), None)?;
        }
    }
    Ok(())
}

fn replay(a: ReplayArgs) -> Result<(), CliError> {
    let m = manifest::load(&a.manifest_path)?;
    if m.argv.len() < 2 {
        return Err(CliError::Usage("manifest records no command line".into()));
    }
    let exe = std::env::current_exe().map_err(|e| acnn_core::Error::io("<current exe>", e))?;
    eprintln!("replaying: {}", m.argv[1..].join(" "));
    let status = process::Command::new(exe)
        .args(&m.argv[1..])
        .current_dir(&m.cwd)
        .status()
        .map_err(|e| acnn_core::Error::io("<replay>", e))?;
    if !status.success() {
        return Err(CliError::Data(format!("replayed command exited with {status}")));
    }
    let mut differ = Vec::new();
    for out in &m.outputs {
        let now = manifest::sha256_file(&m.cwd.join(&out.path))?;
        let same = now == out.sha256;
        println!("{}\t{}", out.path.display(), if same { "identical" } else { "DIFFERS" });
        if !same {
            differ.push(out.path.display().to_string());
        }
    }
    if differ.is_empty() {
        Ok(())
    } else {
        Err(CliError::Data(format!("replay produced different outputs: {}", differ.join(", "))))
    }
}
