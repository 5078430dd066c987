use ambinli::convert::{build_ambinli, unli_to_distribution, ConversionConfig};
use ambinli::dist::{
    entropy, entropy_nats, jsd, majority_label, normalize, soft_cross_entropy, Label, LabelCounts, LabelDistribution,
};
use ambinli::eval::{evaluate, kfold_split, DEFAULT_BIN_EDGES};
use ambinli::ingest::canonical::{read_canonical, to_canonical_string};
use ambinli::ingest::{dedup_against, parse_multilabel_jsonl, DedupKey, MultilabelFields, ParseOptions};
use ambinli::model::io::to_bytes;
use ambinli::model::network::softmax;
use ambinli::model::{train, FeatureConfig, Featurizer, Prediction, TrainConfig};
use ambinli::transfer::{mse, pearson, train_head, HeadConfig, TaskKind};
use ambinli::{AnnotatedExample, Corpus, GoldLabel, Source};
use proptest::prelude::*;

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

fn positive_distribution() -> impl Strategy<Value = LabelDistribution> {
    prop::array::uniform3(1e-3f64..1.0).prop_map(|w| LabelDistribution::from_weights(w).unwrap())
}

fn counts() -> impl Strategy<Value = LabelCounts> {
    prop::array::uniform3(0u32..20)
        .prop_filter("at least one vote", |c| c.iter().sum::<u32>() > 0)
        .prop_map(LabelCounts::from_array)
}

fn text() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9 ,.'\"\\\\é漢-]{1,30}"
}

fn example(uid: String) -> impl Strategy<Value = AnnotatedExample> {
    let source = prop::sample::select(Source::ALL.to_vec());
    let gold = prop::option::of(prop::sample::select(vec![
        GoldLabel::Entailment,
        GoldLabel::Neutral,
        GoldLabel::Contradiction,
        GoldLabel::NoMajority,
    ]));
    let label = prop_oneof![counts().prop_map(|c| (Some(c), None)), (0.0f64..=1.0).prop_map(|p| (None, Some(p))), Just((None, None))];
    (text(), text(), source, label, gold, prop::option::of(distribution())).prop_map(move |(premise, hypothesis, source, (c, p), gold, target)| {
        AnnotatedExample { uid: uid.clone(), premise, hypothesis, source, counts: c, regression_p: p, gold, target }
    })
}

fn corpus(max: usize) -> impl Strategy<Value = Corpus> {
    (1..=max)
        .prop_flat_map(|n| (0..n).map(|i| example(format!("ex{i}"))).collect::<Vec<_>>())
        .prop_map(|examples| Corpus::from_examples("c", examples).unwrap())
}

proptest! {
    #[test]
    fn near_simplex_inputs_land_on_the_simplex(d in distribution(), jitter in -5e-7f64..5e-7) {
        let [e, n, c] = d.as_array();
        let fixed = LabelDistribution::new(e + jitter, n, c).unwrap();
        prop_assert!(fixed.as_array().iter().all(|&p| p >= 0.0));
        prop_assert!((fixed.as_array().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn zero_jsd_means_equal(a in distribution(), b in distribution(), same in any::<bool>()) {
        let b = if same { a } else { b };
        if jsd(&a, &b) == 0.0 {
            prop_assert!(a.max_abs_diff(&b) < 1e-9);
        }
    }

    #[test]
    fn one_hot_entropy_is_zero(i in 0usize..3) {
        prop_assert_eq!(entropy(&LabelDistribution::one_hot(Label::from_index(i).unwrap())), 0.0);
    }

    #[test]
    fn cross_entropy_meets_entropy_only_at_target(t in distribution(), q in positive_distribution()) {
        let h = entropy_nats(&t);
        let ce = soft_cross_entropy(&t, &q).unwrap();
        prop_assert!(ce >= h - 1e-12);
        if t.max_abs_diff(&q) > 1e-3 {
            prop_assert!(ce > h);
        }
        if t.as_array().iter().all(|&p| p > 0.0) {
            prop_assert!((soft_cross_entropy(&t, &t).unwrap() - h).abs() < 1e-12);
        }
    }

    #[test]
    fn majority_ignores_scaling(c in counts(), k in 1u32..50) {
        prop_assert_eq!(majority_label(&c.scaled(k)).unwrap(), majority_label(&c).unwrap());
        prop_assert_eq!(normalize(&c.scaled(k)).unwrap().argmax(), normalize(&c).unwrap().argmax());
    }

    #[test]
    fn softmax_handles_large_logits(logits in prop::array::uniform3(-1e4f64..1e4)) {
        let p = softmax(&logits).as_array();
        prop_assert!(p.iter().all(|&x| x.is_finite() && x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unli_conversion_structure(p in 0.0f64..=1.0) {
        let d = unli_to_distribution(p).unwrap();
        prop_assert!((d.as_array().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        if p >= 0.5 {
            prop_assert_eq!(d.contradiction(), 0.0);
        } else {
            prop_assert_eq!(d.entailment(), 0.0);
        }
        let expected = if p < 0.25 {
            Label::Contradiction
        } else if p <= 0.75 {
            Label::Neutral
        } else {
            Label::Entailment
        };
        if p != 0.25 && p != 0.75 {
            prop_assert_eq!(d.argmax(), expected);
        }
    }

    #[test]
    fn unli_conversion_is_lipschitz(p in 0.0f64..1.0, dp in 0.0f64..1e-6) {
        let q = (p + dp).min(1.0);
        let gap = unli_to_distribution(p).unwrap().max_abs_diff(&unli_to_distribution(q).unwrap());
        prop_assert!(gap <= 2.0 * (q - p) + 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_round_trip(c in corpus(12)) {
        let text = to_canonical_string(&c);
        let back = read_canonical(text.as_bytes(), &ParseOptions::named("c")).unwrap();
        prop_assert!(back.malformed.is_empty());
        prop_assert_eq!(&back.corpus, &c);
        prop_assert_eq!(to_canonical_string(&back.corpus), text);
    }

    #[test]
    fn dedup_is_idempotent(c in corpus(12), picks in prop::collection::vec(any::<bool>(), 12), by_text in any::<bool>()) {
        let key = if by_text { DedupKey::PremiseHypothesisText } else { DedupKey::Uid };
        let held: Vec<AnnotatedExample> = c.iter().zip(&picks).filter(|(_, &p)| p).map(|(e, _)| e.clone()).collect();
        let holdout = Corpus::from_examples("h", held).unwrap();
        let (once, _) = dedup_against(&c, &holdout, key);
        let (twice, removed) = dedup_against(&once, &holdout, key);
        prop_assert_eq!(removed, 0);
        prop_assert_eq!(twice, once);
    }

    #[test]
    fn every_line_is_accounted_for(lines in prop::collection::vec((any::<bool>(), prop::collection::vec(0usize..3, 1..6)), 1..40)) {
        let names = ["entailment", "neutral", "contradiction"];
        let mut input = String::new();
        for (i, (good, votes)) in lines.iter().enumerate() {
            if *good {
                let labels: Vec<&str> = votes.iter().map(|&v| names[v]).collect();
                input.push_str(&serde_json::json!({
                    "pairID": format!("p{i}"), "sentence1": "a", "sentence2": "b",
                    "annotator_labels": labels, "gold_label": names[votes[0]],
                }).to_string());
            } else {
                input.push_str("{\"pairID\": \"broken\"");
            }
            input.push('\n');
        }
        let parsed = parse_multilabel_jsonl(input.as_bytes(), Source::Snli, &MultilabelFields::default(), &ParseOptions::named("x").lenient()).unwrap();
        prop_assert_eq!(parsed.lines, lines.len());
        prop_assert_eq!(parsed.corpus.len() + parsed.malformed.len(), lines.len());
        prop_assert_eq!(parsed.corpus.len(), lines.iter().filter(|(g, _)| *g).count());
    }

    #[test]
    fn build_is_deterministic(c in corpus(12)) {
        let cfg = ConversionConfig { include_sources: Source::ALL.into_iter().collect(), ..ConversionConfig::default() };
        let labelled: Vec<AnnotatedExample> = c.iter().filter(|e| e.counts.is_some() || e.regression_p.is_some() || e.target.is_some()).cloned().collect();
        prop_assume!(!labelled.is_empty());
        let input = Corpus::from_examples("c", labelled).unwrap();
        let a = build_ambinli(std::slice::from_ref(&input), &[], &cfg).unwrap();
        let b = build_ambinli(std::slice::from_ref(&input), &[], &cfg).unwrap();
        prop_assert_eq!(to_canonical_string(&a.corpus), to_canonical_string(&b.corpus));
        prop_assert_eq!(a.report, b.report);
    }

    #[test]
    fn featurizer_is_deterministic(p in text(), h in text(), seed in any::<u64>()) {
        let cfg = FeatureConfig { hash_seed: seed, ..FeatureConfig::default().with_hash_dim(1 << 12) };
        let a = Featurizer::new(cfg.clone()).unwrap().featurize(&p, &h);
        let b = Featurizer::new(cfg).unwrap().featurize(&p, &h);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(&a, &b);
                let norm: f64 = a.iter().map(|(_, v)| v * v).sum();
                prop_assert!((norm - 1.0).abs() < 1e-12);
            }
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }

    #[test]
    fn evaluate_ignores_order(
        pairs in prop::collection::vec((distribution(), distribution()), 1..40),
        seed in any::<u64>(),
    ) {
        let examples: Vec<AnnotatedExample> = pairs.iter().enumerate()
            .map(|(i, (t, _))| AnnotatedExample::new(format!("u{i}"), "p", "h", Source::Snli).with_target(*t).with_gold(t.strict_argmax()))
            .collect();
        let preds: Vec<Prediction> = pairs.iter().enumerate()
            .map(|(i, (_, q))| Prediction { uid: format!("u{i}"), distribution: *q, label: q.argmax() })
            .collect();
        let corpus = Corpus::from_examples("t", examples.clone()).unwrap();
        let base = evaluate(&preds, &corpus, &DEFAULT_BIN_EDGES).unwrap();

        use rand::seq::SliceRandom;
        let mut rng = ambinli::seed::rng_for(seed, "test/permute");
        let mut shuffled = examples;
        shuffled.shuffle(&mut rng);
        let mut shuffled_preds = preds;
        shuffled_preds.shuffle(&mut rng);
        let other = evaluate(&shuffled_preds, &Corpus::from_examples("t", shuffled).unwrap(), &DEFAULT_BIN_EDGES).unwrap();

        prop_assert_eq!(base.mean_jsd.to_bits(), other.mean_jsd.to_bits());
        prop_assert_eq!(base.mean_kl.to_bits(), other.mean_kl.to_bits());
        prop_assert_eq!((base.n_correct, base.n_scored), (other.n_correct, other.n_scored));
        prop_assert_eq!(serde_json::to_string(&base.entropy_bins).unwrap(), serde_json::to_string(&other.entropy_bins).unwrap());
        prop_assert_eq!(base.entropy_bins.total(), pairs.len());
    }

    #[test]
    fn kfold_partitions(n in 3usize..200, k in 2usize..6, seed in any::<u64>()) {
        prop_assume!(n >= k);
        let examples = (0..n).map(|i| AnnotatedExample::new(format!("u{i}"), "p", "h", Source::Snli)).collect();
        let corpus = Corpus::from_examples("c", examples).unwrap();
        let split = kfold_split(&corpus, k, seed).unwrap();
        let sizes = split.fold_sizes();
        prop_assert_eq!(sizes.iter().sum::<usize>(), n);
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for fold in 0..k {
            let (train, test) = split.train_test(fold);
            prop_assert_eq!(train.len() + test.len(), n);
            prop_assert!(test.iter().all(|&i| split.folds[i] == fold));
        }
        prop_assert_eq!(&split, &kfold_split(&corpus, k, seed).unwrap());
    }

    #[test]
    fn pearson_affine_invariance(
        pairs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3..60),
        scale in 0.5f64..5.0,
        shift in -10.0f64..10.0,
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let Ok(r) = pearson(&x, &y) else { return Ok(()) };
        let ax: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
        let ay: Vec<f64> = y.iter().map(|v| scale * v + shift).collect();
        prop_assert!((pearson(&ax, &y).unwrap() - r).abs() < 1e-12);
        prop_assert!((pearson(&x, &ay).unwrap() - r).abs() < 1e-12);
    }

    #[test]
    fn mse_is_nonnegative(pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..60), equal in any::<bool>()) {
        let (p, mut l): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        if equal {
            l = p.clone();
        }
        let m = mse(&p, &l).unwrap();
        prop_assert!(m >= 0.0);
        prop_assert_eq!(m == 0.0, p == l);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn training_is_reproducible(seed in any::<u64>()) {
        let corpus = ambinli::synth::PlantedGenerator::new(ambinli::synth::PlantedConfig::default().with_seed(seed)).corpus("t", 60).corpus;
        let cfg = TrainConfig { epochs: 2, hidden: 8, batch_size: 16, seed, features: FeatureConfig::default().with_hash_dim(1 << 10), ..TrainConfig::default() };
        let a = to_bytes(&train(&cfg, &corpus).unwrap().model);
        let b = to_bytes(&train(&cfg, &corpus).unwrap().model);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn early_stopping_returns_best_checkpoint(seed in any::<u64>(), lr in 1e-3f64..0.5) {
        let mut rng = ambinli::seed::rng_for(seed, "test/head");
        use rand::Rng;
        let mut data = |n: usize| -> (Vec<Vec<f64>>, Vec<f64>) {
            (0..n).map(|_| {
                let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
                let y = (0.5 + 0.3 * x[0] - 0.2 * x[1] + rng.random_range(-0.2..0.2)).clamp(0.0, 1.0);
                (x, y)
            }).unzip()
        };
        let (xs, ys) = data(60);
        let (dx, dy) = data(20);
        let cfg = HeadConfig { hidden: 6, learning_rate: lr, batch_size: 8, max_epochs: 30, ..HeadConfig::default() };
        let out = train_head((&xs, &ys), (&dx, &dy), TaskKind::Regression01, &cfg, seed).unwrap();
        let best = out.dev_curve.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(out.head.mean_loss(&dx, &dy), best);
        prop_assert_eq!(out.dev_curve[out.best_epoch - 1], best);
    }
}
