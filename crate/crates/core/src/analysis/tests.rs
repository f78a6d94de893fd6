use proptest::prelude::*;

use super::*;
use crate::negatives::{attach_negatives, Negative, NegativeSource, NegativeStrategy, StrategyKind, StubOracle};
use crate::parse::{parse, Tagger};
use crate::scorer::{ToyImage, ToyScorer};
use crate::testing::{wordnet_fixture, worked_example_oracle};
use crate::tree::build_incremental;

const WORKED: &str = "several people standing in a green field together while flying kites";

fn store() -> WordNetStore {
    WordNetStore::load(&wordnet_fixture()).unwrap()
}

fn worked_tree() -> CaptionTree {
    let store = store();
    let oracle = StubOracle::from_file(&worked_example_oracle()).unwrap();
    let strategy = NegativeStrategy::new(StrategyKind::WnLlmPromptMask, &store, Some(&oracle), 0).unwrap();
    let mut tree = build_incremental(&parse(WORKED, &Tagger::bundled()).unwrap(), "and")
        .unwrap()
        .with_id("worked");
    attach_negatives(&mut tree, &strategy).unwrap();
    tree
}

/// Scores where the positive wins every level except `fail`, at which
/// negative `negative` wins.
fn scripted(tree: &CaptionTree, fail: Option<(usize, usize)>) -> Vec<Vec<f64>> {
    tree.levels
        .iter()
        .map(|l| {
            let mut s = vec![0.5];
            s.extend(vec![0.1; l.negatives.len()]);
            if let Some((level, negative)) = fail {
                if level == l.level_index {
                    s[negative + 1] = 0.9;
                }
            }
            s
        })
        .collect()
}

#[test]
fn argmax_ties_go_to_negatives() {
    assert_eq!(argmax_prefer_negative(&[0.5, 0.1, 0.2]), 0);
    assert_eq!(argmax_prefer_negative(&[0.5, 0.5, 0.2]), 1);
    assert_eq!(argmax_prefer_negative(&[0.1, 0.5, 0.5]), 1);
    assert_eq!(argmax_prefer_negative(&[0.1, 0.2, 0.5]), 2);
    assert_eq!(argmax_prefer_negative(&[0.3]), 0);
}

#[test]
fn failure_is_the_first_losing_level() {
    let tree = worked_tree();
    let mut scores = scripted(&tree, Some((2, 0)));
    scores[3][2] = 0.95; // a later loss is not the recorded failure
    let record = EvalRecord::from_scores(&tree, "img", scores).unwrap();
    assert_eq!(record.failed_level, Some(2));
    let failure = record.failure.as_ref().unwrap();
    assert_eq!(
        (
            failure.positive_word.as_str(),
            failure.negative_word.as_str(),
            failure.tag
        ),
        ("standing", "gathered", PosTag::Verb)
    );
    assert_eq!(record.evaluated_levels(), 3);
    assert_eq!(record.levels[3].chosen, 2);

    let clean = EvalRecord::from_scores(&tree, "img", scripted(&tree, None)).unwrap();
    assert_eq!((clean.failed_level, clean.evaluated_levels()), (None, 4));
    assert!(EvalRecord::from_scores(&tree, "img", vec![vec![0.1]]).is_err());
    assert!(EvalRecord::<f64>::from_scores(&tree, "img", vec![vec![0.1]; 4]).is_err());
}

#[test]
fn pos_counts_on_synthetic_records() {
    let tree = worked_tree();
    let mut records = Vec::new();
    for i in 0..10 {
        let fail = match i {
            0..=2 => Some((0, 1)), // people -> animals
            3 | 4 => Some((2, 0)), // standing -> gathered
            _ => None,
        };
        records.push(EvalRecord::from_scores(&tree, "img", scripted(&tree, fail)).unwrap());
    }
    let counts = pos_failure_counts(&records);
    assert_eq!(
        counts,
        BTreeMap::from([(PosTag::Noun, 3), (PosTag::Verb, 2), (PosTag::Adj, 0), (PosTag::Adp, 0)])
    );
    let none: Vec<EvalRecord<f64>> = Vec::new();
    assert!(pos_failure_counts(&none).values().all(|c| *c == 0));

    let report = PosReport::new(&counts);
    report.validate().unwrap();
    assert_eq!(
        report.to_text(),
        "POS     failures\nNOUN           3\nADP            0\nVERB           2\nADJ            0\ntotal          5\n"
    );
    let json = serde_json::to_string(&report).unwrap();
    assert_eq!(serde_json::from_str::<PosReport>(&json).unwrap(), report);
}

fn small_dog_tree() -> CaptionTree {
    let mut tree = build_incremental(&parse("a small dog", &Tagger::bundled()).unwrap(), "and").unwrap();
    tree.levels[0].negatives = vec![Negative {
        text: "a large dog".into(),
        replaced_index: 1,
        replaced_word: "small".into(),
        replacement: "large".into(),
        source: NegativeSource::Antonym,
    }];
    tree
}

#[test]
fn word_pair_rates() {
    let tree = small_dog_tree();
    let records: Vec<EvalRecord<f64>> = [(0.6, 0.4), (0.2, 0.3), (0.5, 0.5), (0.9, 0.1)]
        .iter()
        .map(|&(p, n)| EvalRecord::from_scores(&tree, "img", vec![vec![p, n]]).unwrap())
        .collect();
    let pairs = vec![
        ("small".to_string(), "large".to_string()),
        ("off".to_string(), "on".to_string()),
    ];
    let rows = word_pair_fail_rates(&records, &pairs);
    assert_eq!((rows[0].trials, rows[0].failures, rows[0].fail_rate), (4, 2, Some(0.5)));
    assert_eq!((rows[1].trials, rows[1].failures, rows[1].fail_rate), (0, 0, None));
    let report = BiasReport::new(rows);
    report.validate().unwrap();
    let text = report.to_text();
    assert!(text.contains("small    large          4        2    50.00%"), "{text}");
    assert!(text.contains("n/a"));
    let json = serde_json::to_value(&report).unwrap();
    assert_eq!(json["rows"][1]["fail_rate"], serde_json::Value::Null);

    let mut broken = report.clone();
    broken.rows[0].failures = 5;
    assert!(broken.validate().is_err());
}

#[test]
fn levels_after_a_failure_are_not_trials() {
    let tree = worked_tree();
    let record = EvalRecord::from_scores(&tree, "img", scripted(&tree, Some((0, 0)))).unwrap();
    let pairs = vec![
        ("several".to_string(), "one".to_string()),
        ("kites".to_string(), "sales".to_string()),
    ];
    let rows = word_pair_fail_rates(&[record], &pairs);
    assert_eq!((rows[0].trials, rows[0].failures), (1, 1));
    assert_eq!(rows[1].trials, 0);
}

#[test]
fn evaluate_with_toy_scorer() {
    let tree = worked_tree();
    let scorer = ToyScorer::new(0);
    let image = ImageRef::toy(
        ToyImage::new(
            "park",
            vec![
                vec!["several people", "green field", "kites"],
                vec!["people standing", "field", "flying kites"],
            ],
        )
        .unwrap(),
    );
    let record: EvalRecord<f64> = evaluate(&scorer, &tree, &image).unwrap();
    assert_eq!(record.levels.len(), 4);
    for (outcome, level) in record.levels.iter().zip(&tree.levels) {
        assert_eq!(outcome.scores.len(), level.negatives.len() + 1);
        assert_eq!(outcome.chosen, argmax_prefer_negative(&outcome.scores));
    }
    assert_eq!(record.image_id, "park");
    assert_eq!(record.tree.to_tree().unwrap(), tree);
}

fn phone_record() -> (EvalRecord<f64>, ImageRef) {
    let mut tree = build_incremental(&parse("a man holding a cell phone", &Tagger::bundled()).unwrap(), "and")
        .unwrap()
        .with_id("phone");
    let full = tree.levels.last_mut().unwrap();
    assert_eq!(full.positive, "a man holding a cell phone");
    full.negatives = vec![Negative {
        text: "a man holding a nucleus phone".into(),
        replaced_index: 4,
        replaced_word: "cell".into(),
        replacement: "nucleus".into(),
        source: NegativeSource::CoHyponym,
    }];
    let mut scores = scripted(&tree, None);
    *scores.last_mut().unwrap() = vec![0.2, 0.3];
    let record = EvalRecord::from_scores(&tree, "phone-img", scores).unwrap();
    let image =
        ImageRef::toy(ToyImage::new("phone-img", vec![vec!["man", "mobile phone"], vec!["table", ""]]).unwrap());
    (record, image)
}

#[test]
fn expansion_prefers_the_mobile_reading() {
    let (record, image) = phone_record();
    assert_eq!(record.failure.as_ref().unwrap().tag, PosTag::Noun);
    let store = store();
    let scorer = ToyScorer::new(0);
    let expansion = expand_failure_node(&record, &store, &scorer, &image, 3, 0, 10.0).unwrap();
    let words: Vec<&str> = expansion.candidates.iter().map(|c| c.word.as_str()).collect();
    assert!(words.contains(&"mobile"));
    assert!(words.contains(&"organelle"));
    let rank = |w: &str| words.iter().position(|x| *x == w).unwrap();
    assert_eq!(rank("mobile"), 0, "{words:?}");
    assert!(rank("mobile") < rank("nucleus"));
    let total: f64 = expansion.candidates.iter().map(|c| c.probability).sum();
    assert!((total - 1.0).abs() < 1e-9);
    assert!(expansion
        .candidates
        .windows(2)
        .all(|w| w[0].probability >= w[1].probability));
    let mobile = &expansion.candidates[0];
    assert_eq!(mobile.origin, CandidateOrigin::PositiveSynonym);
    assert_eq!(mobile.text, "a man holding a mobile phone");

    let bare = expand_failure_node(&record, &store, &scorer, &image, 0, 0, 1.0).unwrap();
    let mut origins: Vec<CandidateOrigin> = bare.candidates.iter().map(|c| c.origin).collect();
    origins.sort_by_key(|o| *o as u8);
    assert_eq!(origins, [CandidateOrigin::Positive, CandidateOrigin::Negative]);
}

#[test]
fn expansion_needs_a_failure() {
    let tree = worked_tree();
    let record = EvalRecord::from_scores(&tree, "img", scripted(&tree, None)).unwrap();
    let (_, image) = phone_record();
    let err = expand_failure_node(&record, &store(), &ToyScorer::new(0), &image, 2, 0, 1.0).unwrap_err();
    assert!(matches!(err, AnalysisError::NoFailure(_)));
}

/// Single pass over raw score vectors, without the library's bookkeeping.
fn recount(records: &[EvalRecord<f64>], pair: (&str, &str)) -> (BTreeMap<PosTag, usize>, usize, usize) {
    let mut counts = BTreeMap::new();
    let (mut trials, mut failures) = (0, 0);
    for r in records {
        let tree = r.tree.to_tree().unwrap();
        for (level, outcome) in tree.levels.iter().zip(&r.levels) {
            let s = &outcome.scores;
            let best_negative = (1..s.len()).fold(None, |best: Option<usize>, i| match best {
                Some(b) if s[b] >= s[i] => Some(b),
                _ => Some(i),
            });
            let lost = best_negative.filter(|&i| s[i] >= s[0]);
            if level
                .negatives
                .iter()
                .any(|n| (n.replaced_word.as_str(), n.replacement.as_str()) == pair)
            {
                trials += 1;
            }
            if let Some(i) = lost {
                let n = &level.negatives[i - 1];
                *counts.entry(level.positive_tokens[n.replaced_index].tag).or_insert(0) += 1;
                if (n.replaced_word.as_str(), n.replacement.as_str()) == pair {
                    failures += 1;
                }
                break;
            }
        }
    }
    (counts, trials, failures)
}

proptest! {
    #[test]
    fn analytics_match_an_independent_recount(raw in prop::collection::vec(prop::collection::vec(0u8..4, 8), 1..30)) {
        let tree = worked_tree();
        let records: Vec<EvalRecord<f64>> = raw
            .iter()
            .map(|levels| {
                let mut cursor = levels.iter();
                let scores = tree
                    .levels
                    .iter()
                    .map(|l| (0..=l.negatives.len()).map(|_| f64::from(*cursor.next().unwrap_or(&0)) / 4.0).collect())
                    .collect();
                EvalRecord::from_scores(&tree, "img", scores).unwrap()
            })
            .collect();
        let (expected, trials, failures) = recount(&records, ("in", "out"));
        let counts = pos_failure_counts(&records);
        for (tag, n) in &counts {
            prop_assert_eq!(*n, expected.get(tag).copied().unwrap_or(0));
        }
        prop_assert_eq!(counts.values().sum::<usize>(), records.iter().filter(|r| r.failure.is_some()).count());
        let rows = word_pair_fail_rates(&records, &[("in".into(), "out".into())]);
        prop_assert_eq!((rows[0].trials, rows[0].failures), (trials, failures));
    }
}
