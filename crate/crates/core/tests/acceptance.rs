//! Acceptance suite. Runs without the libtest harness and prints one
//! `[PASS]`, `[FAIL]` or `[SKIP]` line per criterion.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use ambinli::convert::{build_ambinli, filter_extreme_unli, unli_to_distribution, ConversionConfig};
use ambinli::dist::{entropy, entropy_nats, jsd, kl, soft_cross_entropy, GoldLabel, Label, LabelDistribution};
use ambinli::eval::{entropy_bins, ExampleRecord, DEFAULT_BIN_EDGES};
use ambinli::ingest::{read_path, ColumnConfig, InputFormat};
use ambinli::model::io::model_hash;
use ambinli::model::train;
use ambinli::transfer::{pearson, train_head, HeadConfig, TaskKind};
use ambinli::{AnnotatedExample, Corpus, Source, TargetMode};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Verdict::{Fail, Pass, Skip};

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn within(verdict: Verdict, elapsed: Duration, budget: Duration) -> Verdict {
    match verdict {
        Pass(d) if elapsed >= budget => Fail(format!("{d}; took {elapsed:.1?}, budget {budget:?}")),
        other => other,
    }
}

const CASES: u32 = 1000;

fn runner() -> TestRunner {
    TestRunner::new(Config { cases: CASES, failure_persistence: None, ..Config::default() })
}

fn property<S: Strategy>(strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    runner().run(&strategy, test).map_err(|e| e.to_string())
}

/// Distributions with randomly zeroed components, never all zero.
fn distribution() -> impl Strategy<Value = LabelDistribution> {
    (prop::array::uniform3(0.0f64..1.0), prop::array::uniform3(any::<bool>()), 0usize..3).prop_map(|(mut w, zero, keep)| {
        for i in 0..3 {
            if zero[i] && i != keep {
                w[i] = 0.0;
            }
        }
        w[keep] += 1e-3;
        LabelDistribution::from_weights(w).unwrap()
    })
}

fn math_suite() -> Verdict {

    let mut results: Vec<(&str, Result<(), String>)> = Vec::new();
    let mut run = |name, r: Result<(), String>| results.push((name, r));

    run(
        "simplex",
        property(prop::array::uniform3(0.0f64..1e6), |w| {
            prop_assume!(w.iter().sum::<f64>() > 0.0);
            let d = LabelDistribution::from_weights(w).unwrap();
            prop_assert!(d.as_array().iter().all(|&p| p >= 0.0));
            prop_assert!((d.as_array().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            Ok(())
        }),
    );
    run(
        "jsd symmetry",
        property((distribution(), distribution()), |(a, b)| {
            prop_assert!((jsd(&a, &b) - jsd(&b, &a)).abs() < 1e-12);
            Ok(())
        }),
    );
    run(
        "jsd bounds",
        property((distribution(), distribution()), |(a, b)| {
            let v = jsd(&a, &b);
            prop_assert!((0.0..=1.0).contains(&v));
            Ok(())
        }),
    );
    run(
        "jsd identity",
        property(distribution(), |a| {
            prop_assert!(jsd(&a, &a) < 1e-15);
            Ok(())
        }),
    );
    run(
        "entropy bounds",
        property(distribution(), |a| {
            let h = entropy(&a);
            prop_assert!(h >= 0.0 && h <= 3f64.log2() + 1e-12);
            Ok(())
        }),
    );
    run(
        "gibbs",
        property((distribution(), distribution()), |(a, b)| {
            prop_assert!(kl(&a, &b) >= 0.0);
            if b.as_array().iter().all(|&p| p > 0.0) {
                let ce = soft_cross_entropy(&a, &b).unwrap();
                prop_assert!(ce >= entropy_nats(&a) - 1e-12);
            }
            Ok(())
        }),
    );
    run(
        "kl edge cases",
        property((distribution(), distribution()), |(a, b)| {
            prop_assert_eq!(kl(&a, &a), 0.0);
            let uncovered = (0..3).any(|i| a.as_array()[i] > 0.0 && b.as_array()[i] == 0.0);
            prop_assert_eq!(kl(&a, &b).is_infinite(), uncovered);
            let top = a.argmax();
            let onehot = LabelDistribution::one_hot(top);
            if b.prob(top) > 0.0 {
                prop_assert!((kl(&onehot, &b) + b.prob(top).log2()).abs() < 1e-12);
            }
            Ok(())
        }),
    );

    let failed: Vec<String> = results.iter().filter_map(|(n, r)| r.as_ref().err().map(|e| format!("{n}: {e}"))).collect();
    check(failed.is_empty(), if failed.is_empty() { format!("{} invariants x {CASES} cases", results.len()) } else { failed.join("; ") })
}

fn conversion_exactness() -> Verdict {
    let expected = [
        (0.0, [0.0, 0.0, 1.0]),
        (0.25, [0.0, 0.5, 0.5]),
        (0.5, [0.0, 1.0, 0.0]),
        (0.75, [0.5, 0.5, 0.0]),
        (1.0, [1.0, 0.0, 0.0]),
    ];
    for (p, want) in expected {
        let got = unli_to_distribution(p).unwrap().as_array();
        if got != want {
            return Fail(format!("p = {p}: got {got:?}, want {want:?}"));
        }
    }
    let left = unli_to_distribution(0.5f64.next_down()).unwrap();
    let gap = left.max_abs_diff(&unli_to_distribution(0.5).unwrap());
    if gap >= 1e-12 {
        return Fail(format!("gap at 0.5 is {gap:e}"));
    }

    let examples: Vec<AnnotatedExample> = (0..1000)
        .map(|i| AnnotatedExample::new(format!("u{i}"), "p", "h", Source::Unli).with_regression(i as f64 / 1000.0))
        .collect();
    let sweep = Corpus::from_examples("sweep", examples).unwrap();
    let (kept, removed) = filter_extreme_unli(&sweep, &ConversionConfig::default());
    let kept_uids: Vec<String> = kept.iter().map(|e| e.uid.clone()).collect();
    let expected_uids: Vec<String> = (50..=970).map(|i| format!("u{i}")).collect();
    check(
        kept_uids == expected_uids && removed == 79,
        format!("5 exact points, gap {gap:e}, sweep kept {} removed {removed}", kept.len()),
    )
}

fn gradient_correctness() -> Verdict {
    let start = Instant::now();
    let errors: Vec<f64> = (0..12).map(common::gradient_check).collect();
    let worst = errors.iter().cloned().fold(0.0, f64::max);
    within(check(worst < 1e-4, format!("12 configurations, max relative error {worst:.2e}")), start.elapsed(), Duration::from_secs(30))
}

fn directional_jsd() -> Verdict {
    let start = Instant::now();
    let results: Vec<(f64, f64)> = (0..10).map(common::jsd_experiment).collect();
    let wins = results.iter().filter(|(s, g)| s < g).count();
    let (s, g) = results.iter().fold((0.0, 0.0), |(a, b), (s, g)| (a + s / 10.0, b + g / 10.0));
    within(
        check(wins >= 9, format!("soft < gold in {wins}/10 seeds (mean JSD {s:.4} vs {g:.4})")),
        start.elapsed(),
        Duration::from_secs(120),
    )
}

fn directional_accuracy() -> Verdict {
    let results: Vec<(f64, f64)> = (0..10).map(common::crossval_experiment).collect();
    let wins = results.iter().filter(|(s, g)| s - g > 0.0).count();
    let diff = results.iter().map(|(s, g)| s - g).sum::<f64>() / 10.0;
    check(wins >= 8, format!("soft > gold in {wins}/10 seeds (mean 3-fold accuracy gain {diff:+.4})"))
}

fn record(entropy: f64) -> ExampleRecord {
    let d = LabelDistribution::uniform();
    ExampleRecord {
        uid: String::new(),
        target: d,
        predicted: d,
        reference: GoldLabel::NoMajority,
        predicted_label: Label::Entailment,
        correct: None,
        entropy,
        jsd: 0.0,
        kl: 0.0,
    }
}

fn entropy_binning() -> Verdict {
    let edges = DEFAULT_BIN_EDGES;
    let pinned = [(0.0799, "below"), (0.08, "0"), (0.5799, "0"), (0.58, "1"), (1.08, "2"), (1.58, "2"), (3f64.log2(), "above")];
    for (h, want) in pinned {
        let report = entropy_bins(&[record(h)], &edges).unwrap();
        let got = if report.below.count == 1 {
            "below".to_string()
        } else if report.above.count == 1 {
            "above".to_string()
        } else {
            report.bins.iter().position(|b| b.count == 1).unwrap().to_string()
        };
        if got != want {
            return Fail(format!("entropy {h} landed in {got}, want {want}"));
        }
    }
    let entropies = prop::collection::vec(prop_oneof![0.0f64..1.6, prop::sample::select(edges.to_vec())], 0..200);
    let partition = runner().run(&(distribution(), entropies), |(_, hs)| {
        let records: Vec<ExampleRecord> = hs.iter().map(|&h| record(h)).collect();
        let report = entropy_bins(&records, &edges).unwrap();
        prop_assert_eq!(report.total(), records.len());
        let below = hs.iter().filter(|&&h| h < edges[0]).count();
        let above = hs.iter().filter(|&&h| h > edges[3]).count();
        prop_assert_eq!((report.below.count, report.above.count), (below, above));
        for (i, b) in report.bins.iter().enumerate() {
            let last = i == report.bins.len() - 1;
            let n = hs.iter().filter(|&&h| h >= edges[i] && (h < edges[i + 1] || (last && h == edges[i + 1]))).count();
            prop_assert_eq!(b.count, n);
        }
        Ok(())
    });
    match partition {
        Ok(()) => Pass(format!("{} pinned values, partition over {CASES} random sets", pinned.len())),
        Err(e) => Fail(format!("partition: {e}")),
    }
}

fn transfer_probe() -> Verdict {
    let mut notes = Vec::new();

    let tables: Vec<_> = (0..10).map(common::transfer_experiment).collect();
    let generator = common::experiment_generator(0);
    let corpus = generator.corpus("train", common::EXPERIMENT_TRAIN).corpus;
    let encoder = train(&common::experiment_config(0).with_mode(TargetMode::Ambiguity), &corpus).unwrap().model;
    let frozen = tables[0].rows.iter().filter(|r| r.encoder == "soft").all(|r| r.encoder_hash == model_hash(&encoder));
    if !frozen {
        return Fail("encoder hash in the table differs from the trained encoder".into());
    }
    notes.push("encoder hash unchanged".to_string());

    let xs: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 / 40.0, 1.0]).collect();
    let ys: Vec<f64> = (0..40).map(|i| (i % 5) as f64 / 4.0).collect();
    for patience in 1..=4 {
        let cfg = HeadConfig { learning_rate: 0.0, patience, hidden: 4, ..HeadConfig::default() };
        let out = train_head((&xs, &ys), (&xs, &ys), TaskKind::Regression01, &cfg, 0).unwrap();
        if out.dev_curve.len() != patience + 1 || !out.stopped_early {
            return Fail(format!("patience {patience}: flat dev loss ran {} epochs", out.dev_curve.len()));
        }
    }
    notes.push("flat dev loss stops after patience+1 epochs".to_string());

    let affine = runner().run(
        &(prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3..50), 0.5f64..5.0, -10.0f64..10.0, any::<bool>()),
        |(pairs, scale, shift, negate)| {
            let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let base = match pearson(&x, &y) {
                Ok(r) => r,
                Err(_) => return Ok(()),
            };
            let a = if negate { -scale } else { scale };
            let moved: Vec<f64> = x.iter().map(|v| a * v + shift).collect();
            let r = pearson(&moved, &y).unwrap();
            prop_assert!((r - a.signum() * base).abs() < 1e-12);
            Ok(())
        },
    );
    if let Err(e) = affine {
        return Fail(format!("pearson affine invariance: {e}"));
    }
    notes.push(format!("pearson affine invariance over {CASES} cases"));

    let mean = |t: &ambinli::transfer::TransferTable, enc: &str, depth| t.row(enc, depth).unwrap().metrics[0].mean;
    let wins = tables.iter().filter(|t| mean(t, "soft", 1) >= mean(t, "gold", 1)).count();
    let wins2 = tables.iter().filter(|t| mean(t, "soft", 2) >= mean(t, "gold", 2)).count();
    notes.push(format!("soft >= gold pearson in {wins}/10 seeds (1-layer head; 2-layer {wins2}/10)"));
    check(wins >= 8, notes.join(", "))
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let fx = common::write_fixture(root, 600, 300, 150, 11);
    let generator = common::experiment_generator(11);
    let items = generator.regression_task("task", 200, 0.05);
    let mut task = Vec::new();
    ambinli::transfer::write_task_csv(&items, TaskKind::Regression01, &mut task).unwrap();
    std::fs::write(root.join("task.csv"), task).unwrap();
    let config = common::write_config(
        root,
        "run.toml",
        &format!(
            r#"seed = 5
output_dir = "out"

[inputs]
snli = "{snli}"
unli = "{unli}"
holdouts = ["{chaos}"]
corpus = "out/corpus.jsonl"
eval_targets = "{chaos}"
compare_model = "gold/model.bin"
task = "task.csv"

[inputs.encoders]
soft = "out/model.bin"
gold = "gold/model.bin"

[train]
epochs = 3
hidden = 16
batch_size = 32
learning_rate = 0.01

[train.features]
hash_dim = 1024

[transfer]
trials = 2

[transfer.head]
hidden = 8
max_epochs = 20
"#,
            snli = fx.snli.display(),
            unli = fx.unli.display(),
            chaos = fx.chaos.display()
        ),
    );
    let pipeline = || {
        common::ambinli_ok("build", &config, &[]);
        common::ambinli_ok("train", &config, &["train.target_mode=gold_one_hot", "output_dir=gold"]);
        for command in ["train", "eval", "bins", "crossval", "transfer"] {
            common::ambinli_ok(command, &config, &[]);
        }
        (common::output_digests(&root.join("out")), common::output_digests(&root.join("gold")))
    };
    let first = pipeline();
    let second = pipeline();
    let files = first.0.len() + first.1.len();
    if first != second {
        let changed: Vec<&String> = first.0.iter().filter(|(k, v)| second.0.get(*k) != Some(v)).map(|(k, _)| k).collect();
        return Fail(format!("outputs differ between runs: {changed:?}"));
    }
    check(files >= 20, format!("6 commands, {files} output files byte-identical across two runs"))
}

fn integration_counts() -> Verdict {
    let Some(dir) = std::env::var_os("AMBINLI_DATA_DIR") else {
        return Skip("AMBINLI_DATA_DIR not set".into());
    };
    let dir = Path::new(&dir);
    let names = [
        "snli_1.0_dev.jsonl",
        "snli_1.0_test.jsonl",
        "multinli_1.0_dev_matched.jsonl",
        "multinli_1.0_dev_mismatched.jsonl",
        "unli_train.csv",
        "chaosNLI_snli.jsonl",
        "chaosNLI_mnli_m.jsonl",
    ];
    if let Some(missing) = names.iter().find(|n| !dir.join(n).is_file()) {
        return Skip(format!("{missing} not found in {}", dir.display()));
    }
    let columns = ColumnConfig::default();
    let read = |name: &str, format| read_path(&dir.join(name), format, &columns, 0.001).map(|p| p.corpus);
    let result = (|| -> Result<Verdict, Box<dyn std::error::Error>> {
        let chaos_snli = read(names[5], InputFormat::Chaos)?;
        let chaos_mnli = read(names[6], InputFormat::Chaos)?;
        let sources = vec![
            read(names[0], InputFormat::Snli)?,
            read(names[1], InputFormat::Snli)?,
            read(names[2], InputFormat::Mnli)?,
            read(names[3], InputFormat::Mnli)?,
            read(names[4], InputFormat::Unli)?,
        ];
        let cfg = ConversionConfig { exclude_no_majority: true, ..ConversionConfig::default() };
        let built = build_ambinli(&sources, &[chaos_snli.clone(), chaos_mnli.clone()], &cfg)?;
        let per = |s| built.report.per_source.get(&s).map_or(0, |t| t.output);
        let got = [chaos_snli.len(), chaos_mnli.len(), per(Source::Snli), per(Source::Mnli), per(Source::Unli), built.report.total];
        let want = [1_514, 1_599, 18_152, 18_048, 55_517, 91_717];
        Ok(check(got == want, format!("counts {got:?}, expected {want:?}")))
    })();
    result.unwrap_or_else(|e| Fail(e.to_string()))
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 9] = [
        ("math invariant suite", || {
            let start = Instant::now();
            let v = math_suite();
            within(v, start.elapsed(), Duration::from_secs(10))
        }),
        ("conversion exactness", conversion_exactness),
        ("gradient correctness", gradient_correctness),
        ("directional JSD: soft beats gold", directional_jsd),
        ("directional accuracy: 3-fold CV", directional_accuracy),
        ("entropy binning", entropy_binning),
        ("transfer probe", transfer_probe),
        ("determinism of every command", determinism),
        ("integration counts on real data", integration_counts),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Fail(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let (tag, detail) = match verdict {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failures += 1;
                ("FAIL", d)
            }
            Skip(d) => ("SKIP", d),
        };
        println!("[{tag}] {name}: {detail} ({:.1}s)", elapsed.as_secs_f64());
    }
    if failures > 0 {
        println!("{failures} criterion(s) failed");
        std::process::exit(1);
    }
}
