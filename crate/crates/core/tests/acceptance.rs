//! Acceptance suite. Runs every criterion in order, prints one PASS/FAIL
//! line each and exits nonzero if any fail.

mod common;

use std::collections::HashMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use attnmt::harness::{generate_synthetic_corpus, summarize, Report, SyntheticKind, SyntheticSpec};
use attnmt::model::{ModelConfig, Seq2Seq};
use attnmt::tensor::{sigmoid, tanh};
use attnmt::text::*;
use attnmt::train::{batch_loss, evaluate, load_checkpoint, sequence_loss};
use attnmt::{ActivationKind, Graph, Tensor};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

const BIN: &str = env!("CARGO_BIN_EXE_attnmt");

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn attnmt(dir: &Path, args: &[&str]) -> Result<Output, String> {
    let out = Command::new(BIN).args(args).current_dir(dir).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "`attnmt {}` exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out)
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn metrics_losses(path: &Path) -> Result<Vec<f64>, String> {
    read(path)?
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).and_then(|v| v.parse().ok()).ok_or(format!("bad metrics line {l}")))
        .collect()
}

fn report_rows(path: &Path) -> Result<(String, Vec<attnmt::harness::ResultRow>), String> {
    let text = read(path)?;
    let rows = Report::parse_rows(&text).map_err(|e| e.to_string())?;
    Ok((text, rows))
}

fn write_synthetic(dir: &Path, name: &str, spec: SyntheticSpec) -> Result<ParallelCorpus, String> {
    let corpus = generate_synthetic_corpus(&spec).map_err(|e| e.to_string())?;
    fs::write(dir.join(name), corpus.to_tsv()).map_err(|e| e.to_string())?;
    Ok(corpus)
}

fn gradient_fidelity() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let checks = common::primitive_checks();
    for (name, check) in &checks {
        for seed in 0..common::INSTANCES {
            let err = check(seed);
            ensure!(err < common::REL_TOL, "{name} instance {seed}: relative error {err:e}");
            worst = worst.max(err);
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(120), "took {elapsed:?}");
    Ok(format!(
        "{} primitives x {} instances, worst relative error {worst:.1e}, {:.2}s",
        checks.len(),
        common::INSTANCES,
        elapsed.as_secs_f64()
    ))
}

fn activation_values() -> Outcome {
    // reference values computed at 40 significant digits
    let probes: [(f64, f64, f64); 12] = [
        (-40.0, -1.0, 4.248_354_255_291_589e-18),
        (-20.0, -0.9999999999999999915032915, 2.061_153_618_190_203_7e-9),
        (-3.0, -0.995_054_753_686_730_5, 0.047_425_873_177_566_78),
        (-1.0, -0.761_594_155_955_764_9, 0.268_941_421_369_995_1),
        (-0.5, -0.462_117_157_260_009_74, 0.377_540_668_798_145_46),
        (0.0, 0.0, 0.5),
        (1e-8, 1e-8, 0.5000000025),
        (0.5, 0.462_117_157_260_009_74, 0.622_459_331_201_854_6),
        (1.0, 0.761_594_155_955_764_9, 0.731_058_578_630_004_9),
        (3.0, 0.995_054_753_686_730_5, 0.952_574_126_822_433_3),
        (20.0, 0.9999999999999999915032915, 0.999_999_997_938_846_4),
        (40.0, 1.0, 0.9999999999999999957516457),
    ];
    let xs: Vec<f64> = probes.iter().map(|p| p.0).collect();
    let x = Tensor::new([1, xs.len()], xs).unwrap();
    let t = ActivationKind::Tanh.apply(&x);
    let s = ActivationKind::Sigmoid.apply(&x);
    for (i, &(xi, want_t, want_s)) in probes.iter().enumerate() {
        for (what, got) in [("tanh", t.data()[i]), ("tanh scalar", tanh(xi))] {
            ensure!((got - want_t).abs() <= 1e-12, "{what}({xi}) = {got}, want {want_t}");
        }
        for (what, got) in [("sigmoid", s.data()[i]), ("sigmoid scalar", sigmoid(xi))] {
            ensure!((got - want_s).abs() <= 1e-12, "{what}({xi}) = {got}, want {want_s}");
        }
    }
    let softmax_probes: [(Vec<f64>, Vec<f64>); 4] = [
        (vec![1f64.ln(), 2f64.ln(), 3f64.ln()], vec![1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0]),
        (vec![1.0, 2.0], vec![0.268_941_421_369_995_1, 0.731_058_578_630_004_9]),
        (vec![0.7; 4], vec![0.25; 4]),
        (vec![1000.0, 0.0, -1000.0], vec![1.0, 0.0, 0.0]),
    ];
    for (input, want) in &softmax_probes {
        let got = ActivationKind::Softmax.apply(&Tensor::new([1, input.len()], input.clone()).unwrap());
        for (g, w) in got.data().iter().zip(want) {
            ensure!((g - w).abs() <= 1e-12, "softmax({input:?}) = {:?}, want {want:?}", got.data());
        }
    }
    ensure!(ActivationKind::Linear.apply(&x) == x, "linear is not the identity");
    Ok(format!("{} tanh/sigmoid probes, {} softmax probes within 1e-12", probes.len(), softmax_probes.len()))
}

fn overfit() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let corpus = write_synthetic(
        d,
        "pairs.tsv",
        SyntheticSpec { kind: SyntheticKind::MappedBilingual, n_pairs: 32, vocab_size: 30, max_len: 6, seed: 1 },
    )?;
    attnmt(d, &["prep", "--corpus", "pairs.tsv", "--out", "prep", "--train-ratio", "1"])?;
    let start = Instant::now();
    attnmt(
        d,
        &[
            "train",
            "--prep-dir",
            "prep",
            "--checkpoint-dir",
            "ck",
            "--preset",
            "desk",
            "--epochs",
            "300",
            "--checkpoint-every",
            "300",
        ],
    )?;
    let elapsed = start.elapsed();
    let losses = metrics_losses(&d.join("ck/metrics.csv"))?;
    let reached = losses.iter().position(|&l| l < 0.05);
    ensure!(reached.is_some(), "loss never below 0.05; final {:?}", losses.last());
    ensure!(*losses.last().unwrap() < 0.05, "final loss {:?}", losses.last());
    ensure!(elapsed < Duration::from_secs(120), "training took {elapsed:?}");

    let sources: Vec<&str> = corpus.sources();
    fs::write(d.join("sources.txt"), sources.join("\n") + "\n").map_err(|e| e.to_string())?;
    let out = attnmt(d, &["translate", "--checkpoint", "ck", "--prep-dir", "prep", "--input", "sources.txt"])?;
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    let got: Vec<&str> = stdout.lines().collect();
    let want = corpus.targets();
    ensure!(got.len() == want.len(), "{} translations for {} sources", got.len(), want.len());
    let wrong: Vec<_> = got.iter().zip(&want).filter(|(g, w)| g != w).collect();
    ensure!(wrong.is_empty(), "{} mistranslated, first {:?}", wrong.len(), wrong[0]);
    Ok(format!(
        "loss < 0.05 at epoch {}, final {:.5}, {:.1}s training; {}/{} exact translations",
        reached.unwrap() + 1,
        losses.last().unwrap(),
        elapsed.as_secs_f64(),
        got.len(),
        want.len()
    ))
}

fn epoch_study_trend() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let mut details = Vec::new();
    for seed in ["1", "2", "3"] {
        let out = format!("epoch-{seed}.csv");
        attnmt(d, &["experiment", "epoch-study", "--epochs", "100", "--seed", seed, "--out", &out])?;
        let (_, rows) = report_rows(&d.join(&out))?;
        let find = |label: &str| rows.iter().find(|r| r.label == label).ok_or(format!("no {label} row"));
        let (first, second) = (find("first-half")?, find("second-half")?);
        ensure!(first.per_epoch_losses.len() == 50 && second.per_epoch_losses.len() == 50, "halves are not 50 epochs");
        ensure!(
            second.mean_error < first.mean_error && second.std_dev < first.std_dev,
            "seed {seed}: first ({}, {}) second ({}, {})",
            first.mean_error,
            first.std_dev,
            second.mean_error,
            second.std_dev
        );
        details.push(format!(
            "seed {seed}: ({:.3}, {:.3}) -> ({:.3}, {:.3})",
            first.mean_error, first.std_dev, second.mean_error, second.std_dev
        ));
    }
    Ok(details.join("; "))
}

fn cell_comparison() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    attnmt(d, &["experiment", "cells", "--epochs", "100", "--out", "cells.csv"])?;
    let (text, rows) = report_rows(&d.join("cells.csv"))?;
    let labels: Vec<&str> = rows.iter().map(|r| r.label.as_str()).collect();
    ensure!(labels == ["GRU", "LSTM"], "rows {labels:?}");
    for r in &rows {
        ensure!(r.per_epoch_losses.len() == 100, "{} ran {} epochs", r.label, r.per_epoch_losses.len());
        ensure!(r.final_loss() < 0.2, "{} final loss {}", r.label, r.final_loss());
    }
    for line in ["#reference,GRU,0.508", "#reference,LSTM,0.602"] {
        ensure!(text.lines().any(|l| l == line), "footer lacks {line}");
    }
    Ok(format!(
        "final losses GRU {:.4}, LSTM {:.4}; reference footer present",
        rows[0].final_loss(),
        rows[1].final_loss()
    ))
}

fn grids() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let expected: [(&str, [&str; 4]); 2] = [
        ("activation-grid", ["Linear-Linear", "Linear-Tanh", "Tanh-Linear", "Tanh-Tanh"]),
        ("attention-grid", ["Sigmoid-Sigmoid", "Sigmoid-Softmax", "Tanh-Sigmoid", "Tanh-Softmax"]),
    ];
    let mut worst: f64 = 0.0;
    for (study, labels) in expected {
        let out = format!("{study}.csv");
        attnmt(d, &["experiment", study, "--epochs", "6", "--out", &out])?;
        let (_, rows) = report_rows(&d.join(&out))?;
        let got: Vec<&str> = rows.iter().map(|r| r.label.as_str()).collect();
        ensure!(got == labels, "{study} rows {got:?}");
        for r in &rows {
            ensure!(r.per_epoch_losses.len() == 6, "{study} {} has {} losses", r.label, r.per_epoch_losses.len());
            ensure!(r.per_epoch_losses.iter().all(|l| l.is_finite()), "{study} {} non-finite", r.label);
            let s = summarize(&r.per_epoch_losses).map_err(|e| e.to_string())?;
            let err = (s.mean - r.mean_error).abs().max((s.std_dev - r.std_dev).abs());
            ensure!(err < 1e-9, "{study} {}: summary off by {err:e}", r.label);
            worst = worst.max(err);
        }
    }
    Ok(format!("4 + 4 labeled rows, summaries recomputed within {worst:.1e}"))
}

fn init_loss() -> Outcome {
    let vocab = 100;
    let ln_v = (vocab as f64).ln();
    let mut r = common::rng(17);
    let pairs: Vec<EncodedPair> = (0..64)
        .map(|_| EncodedPair {
            source: common::random_sequence(&mut r, 8, vocab),
            target: common::random_sequence(&mut r, 8, vocab),
        })
        .collect();
    let mut details = Vec::new();
    for seed in 0..3 {
        let config = ModelConfig::new(vocab, vocab, 8, 8, 32, 64);
        let model = Seq2Seq::<f32>::new(config, seed).map_err(|e| e.to_string())?;
        let loss = evaluate(&model, &pairs, 16).map_err(|e| e.to_string())?;
        let rel = (loss - ln_v).abs() / ln_v;
        ensure!(rel < 0.15, "seed {seed}: loss {loss} is {:.1}% from ln V", rel * 100.0);
        details.push(format!("{loss:.4}"));
    }
    Ok(format!("ln 100 = {ln_v:.4}, untrained losses {}", details.join(", ")))
}

fn checkpoint_round_trip() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    write_synthetic(
        d,
        "pairs.tsv",
        SyntheticSpec { kind: SyntheticKind::MappedBilingual, n_pairs: 40, vocab_size: 30, max_len: 6, seed: 3 },
    )?;
    attnmt(d, &["prep", "--corpus", "pairs.tsv", "--out", "prep", "--seed", "5"])?;
    let train = |ck: &str, epochs: &str| {
        attnmt(
            d,
            &[
                "train",
                "--prep-dir",
                "prep",
                "--checkpoint-dir",
                ck,
                "--preset",
                "desk",
                "--epochs",
                epochs,
                "--seed",
                "11",
            ],
        )
    };
    train("full", "30")?;
    train("resumed", "10")?;
    train("resumed", "30")?;
    let a = metrics_losses(&d.join("full/metrics.csv"))?;
    let b = metrics_losses(&d.join("resumed/metrics.csv"))?;
    ensure!(a.len() == 30 && b.len() == 30, "epoch counts {} and {}", a.len(), b.len());
    let drift = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    ensure!(drift < 1e-6, "trajectories differ by {drift:e}");

    // reload the saved model and compare a fixed batch bit for bit
    let ckpt = load_checkpoint(&d.join("full/latest.s2sf")).map_err(|e| e.to_string())?;
    let dataset = EncodedDataset::load(&d.join("prep/dataset.txt")).map_err(|e| e.to_string())?;
    let batch: Vec<&EncodedPair> = dataset.train.iter().take(16).collect();
    let model = ckpt.model().map_err(|e| e.to_string())?;
    let bytes = ckpt.to_bytes().map_err(|e| e.to_string())?;
    let reloaded =
        attnmt::train::Checkpoint::from_bytes(&bytes).map_err(|e| e.to_string())?.model().map_err(|e| e.to_string())?;
    let x = batch_loss(&model, &batch).map_err(|e| e.to_string())?.0;
    let y = batch_loss(&reloaded, &batch).map_err(|e| e.to_string())?.0;
    ensure!(x.to_bits() == y.to_bits(), "batch loss {x} vs {y} after reload");
    Ok(format!("fixed-batch loss {x} identical after reload; resumed trajectory max drift {drift:e}"))
}

fn run_property<S: Strategy>(
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    TestRunner::new(Config { cases: 128, failure_persistence: None, ..Config::default() })
        .run(&strategy, test)
        .map_err(|e| format!("{name}: {e}"))
}

fn sentences() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::collection::vec("[a-f]{1,3}", 1..7).prop_map(|w| w.join(" ")), 1..15)
}

fn pipeline_invariants() -> Outcome {
    run_property("tokenizer round trip", sentences(), |ss| {
        let (vocab, _) = Vocabulary::build(&ss).unwrap();
        let len = required_len(&ss);
        for s in &ss {
            let enc = vocab.encode_sentence(s, len).unwrap();
            prop_assert_eq!(&vocab.decode_sequence(&enc.ids).unwrap(), s);
        }
        Ok(())
    })?;
    run_property("frequency-ordered ids", sentences(), |ss| {
        let (vocab, _) = Vocabulary::build(&ss).unwrap();
        let mut counts: HashMap<&str, (usize, usize)> = HashMap::new();
        for (pos, w) in ss.iter().flat_map(|s| s.split(' ')).enumerate() {
            counts.entry(w).or_insert((0, pos)).0 += 1;
        }
        for id in NUM_SPECIAL..vocab.len() - 1 {
            let (a, b) = (counts[vocab.word(id).unwrap()], counts[vocab.word(id + 1).unwrap()]);
            prop_assert!(a.0 > b.0 || (a.0 == b.0 && a.1 < b.1));
        }
        Ok(())
    })?;
    run_property("pad masking", (any::<u64>(), 1usize..5), |(seed, extra)| {
        let mut r = common::rng(seed);
        let (batch, len, vocab) = (3, 5, 11);
        let targets: Vec<EncodedSequence> = (0..batch).map(|_| common::random_sequence(&mut r, len, vocab)).collect();
        let padded: Vec<EncodedSequence> = targets
            .iter()
            .map(|t| {
                let mut ids = t.ids.clone();
                ids.resize(len + extra, PAD);
                EncodedSequence { ids, true_length: t.true_length, truncated: false }
            })
            .collect();
        let logits: Vec<Tensor<f64>> =
            (0..len + extra).map(|_| common::random_tensor(&mut r, &[batch, vocab], 3.0)).collect();
        let g = Graph::new();
        let vars: Vec<_> = logits.iter().map(|t| g.constant(t.clone())).collect();
        let a = sequence_loss(&vars[..len], &targets.iter().collect::<Vec<_>>()).unwrap().item().unwrap();
        let b = sequence_loss(&vars, &padded.iter().collect::<Vec<_>>()).unwrap().item().unwrap();
        prop_assert!((a - b).abs() < 1e-6);
        Ok(())
    })?;
    run_property("80:20 split", (2usize..5000, any::<u64>()), |(n, seed)| {
        let pairs: Vec<(String, String)> = (0..n).map(|i| (format!("s{i}"), format!("t{i}"))).collect();
        let (train, test) = split_corpus(&ParallelCorpus::new(pairs).unwrap(), 0.8, seed).unwrap();
        prop_assert_eq!(train.len(), n * 8 / 10);
        prop_assert_eq!(train.len() + test.len(), n);
        Ok(())
    })?;
    let pairs: Vec<(String, String)> = (0..4000).map(|i| (format!("s{i}"), format!("t{i}"))).collect();
    let (train, test) = split_corpus(&ParallelCorpus::new(pairs).unwrap(), 0.8, 0).map_err(|e| e.to_string())?;
    ensure!((train.len(), test.len()) == (3200, 800), "4000 split into {} / {}", train.len(), test.len());
    Ok("4 properties x 128 cases; 4000 -> 3200/800".into())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    write_synthetic(
        d,
        "pairs.tsv",
        SyntheticSpec { kind: SyntheticKind::MappedBilingual, n_pairs: 24, vocab_size: 20, max_len: 5, seed: 8 },
    )?;
    let mut compared = 0;
    let mut same = |a: &Path, b: &Path| -> Result<(), String> {
        let (x, y) = (fs::read(a).map_err(|e| e.to_string())?, fs::read(b).map_err(|e| e.to_string())?);
        ensure!(x == y, "{} and {} differ", a.display(), b.display());
        compared += 1;
        Ok(())
    };
    for run in ["a", "b"] {
        let prep = format!("prep-{run}");
        attnmt(d, &["prep", "--corpus", "pairs.tsv", "--out", &prep, "--seed", "2"])?;
        attnmt(
            d,
            &[
                "train",
                "--prep-dir",
                &prep,
                "--checkpoint-dir",
                &format!("ck-{run}"),
                "--preset",
                "desk",
                "--epochs",
                "5",
                "--seed",
                "4",
            ],
        )?;
        let out = attnmt(
            d,
            &["translate", "--checkpoint", &format!("ck-{run}"), "--prep-dir", &prep, "--sentence", "ab cd ef"],
        )?;
        fs::write(d.join(format!("translate-{run}.txt")), out.stdout).map_err(|e| e.to_string())?;
        for study in ["activation-grid", "attention-grid", "cells", "epoch-study"] {
            attnmt(d, &["experiment", study, "--epochs", "4", "--seed", "6", "--out", &format!("{run}/{study}.csv")])?;
        }
    }
    for f in ["source.vocab", "target.vocab", "dataset.txt", "stats.json"] {
        same(&d.join("prep-a").join(f), &d.join("prep-b").join(f))?;
    }
    for f in ["metrics.csv", "latest.s2sf"] {
        same(&d.join("ck-a").join(f), &d.join("ck-b").join(f))?;
    }
    same(&d.join("translate-a.txt"), &d.join("translate-b.txt"))?;
    for study in ["activation-grid", "attention-grid", "cells", "epoch-study"] {
        same(&d.join(format!("a/{study}.csv")), &d.join(format!("b/{study}.csv")))?;
        same(&d.join(format!("a/{study}.spec.json")), &d.join(format!("b/{study}.spec.json")))?;
    }
    Ok(format!("{compared} output files byte-identical across reruns"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("gradient fidelity", gradient_fidelity),
        ("activation unit values", activation_values),
        ("overfit and translate", overfit),
        ("epoch-study trend", epoch_study_trend),
        ("cell comparison", cell_comparison),
        ("activation and attention grids", grids),
        ("initialization loss", init_loss),
        ("checkpoint round trip and resume", checkpoint_round_trip),
        ("pipeline invariants", pipeline_invariants),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.iter().any(|f| *f == id || name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS  {name} ({secs:.1}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name} ({secs:.1}s): {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
