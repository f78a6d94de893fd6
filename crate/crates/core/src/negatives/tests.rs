use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde_json::json;

use super::*;
use crate::parse::parse;
use crate::remote::JsonClient;
use crate::testing::{wordnet_fixture, worked_example_oracle, MockServer};
use crate::tree::build_incremental;

const WORKED: &str = "several people standing in a green field together while flying kites";

fn store() -> WordNetStore {
    WordNetStore::load(&wordnet_fixture()).unwrap()
}

fn stub() -> StubOracle {
    StubOracle::from_file(&worked_example_oracle()).unwrap()
}

fn worked_tree() -> CaptionTree {
    build_incremental(&parse(WORKED, &Tagger::bundled()).unwrap(), "and").unwrap()
}

fn texts(negatives: &[Negative]) -> Vec<&str> {
    negatives.iter().map(|n| n.text.as_str()).collect()
}

#[test]
fn first_level_negatives() {
    let store = store();
    let oracle = stub();
    let strategy = NegativeStrategy::new(StrategyKind::WnLlmPromptMask, &store, Some(&oracle), 0).unwrap();
    let tree = worked_tree();
    let negatives = generate_for_level(&tree.levels[0], &BTreeSet::new(), &strategy).unwrap();
    assert_eq!(texts(&negatives), ["one people", "several animals"]);
    assert_eq!(negatives[0].source, NegativeSource::Antonym);
    assert_eq!(negatives[1].source, NegativeSource::CoHyponym);
    assert_eq!(negatives[1].replaced_index, 1);
    assert_eq!(negatives[1].replaced_word, "people");
}

#[test]
fn second_level_skips_previous_words() {
    let store = store();
    let oracle = stub();
    let strategy = NegativeStrategy::new(StrategyKind::WnLlmPromptMask, &store, Some(&oracle), 0).unwrap();
    let tree = worked_tree();
    let seen: BTreeSet<usize> = [0, 1].into();
    let negatives = generate_for_level(&tree.levels[1], &seen, &strategy).unwrap();
    assert_eq!(
        texts(&negatives),
        ["several people and a blue field", "several people and a green forest"]
    );
}

#[test]
fn fully_seen_level_yields_nothing() {
    let store = store();
    let oracle = stub();
    let strategy = NegativeStrategy::new(StrategyKind::WnLlmPromptMask, &store, Some(&oracle), 0).unwrap();
    let tree = worked_tree();
    let seen: BTreeSet<usize> = (0..11).collect();
    assert!(generate_for_level(&tree.levels[3], &seen, &strategy)
        .unwrap()
        .is_empty());
}

#[test]
fn whole_worked_tree() {
    let store = store();
    let oracle = stub();
    let strategy = NegativeStrategy::new(StrategyKind::WnLlmPromptMask, &store, Some(&oracle), 0).unwrap();
    let mut tree = worked_tree();
    attach_negatives(&mut tree, &strategy).unwrap();
    let replacements: Vec<Vec<&str>> = tree
        .levels
        .iter()
        .map(|l| l.negatives.iter().map(|n| n.replacement.as_str()).collect())
        .collect();
    assert_eq!(
        replacements,
        vec![
            vec!["one", "animals"],
            vec!["blue", "forest"],
            vec!["gathered", "out"],
            vec!["soaring", "sales"]
        ]
    );
    assert_eq!(
        tree.levels[2].negatives[1].text,
        "several people standing out a green field"
    );
    assert_eq!(tree.levels[3].negatives[1].source, NegativeSource::MaskFill);
}

#[test]
fn without_mask_step_unreachable_words_are_skipped() {
    let store = store();
    let oracle = stub();
    let strategy = NegativeStrategy::new(StrategyKind::WnLlmPrompt, &store, Some(&oracle), 0).unwrap();
    let mut tree = worked_tree();
    attach_negatives(&mut tree, &strategy).unwrap();
    // "standing", "flying" and "kites" only have mask-fill candidates in the stub
    assert_eq!(tree.negative_count(), 5);
    assert!(tree.levels[3].negatives.is_empty());
}

#[test]
fn wordnet_only_strategy() {
    let store = store();
    let strategy = NegativeStrategy::new(StrategyKind::Wn, &store, None, 3).unwrap();
    let mut tree = worked_tree();
    attach_negatives(&mut tree, &strategy).unwrap();
    let level2 = &tree.levels[2].negatives;
    let into_out = level2.iter().find(|n| n.replaced_word == "in").unwrap();
    assert_eq!(into_out.replacement, "out");
    assert_eq!(into_out.source, NegativeSource::Antonym);
    // "several" has no antonym of its own but shares its head adjective with "numerous"
    let several = &tree.levels[0].negatives[0];
    assert_eq!(several.replaced_word, "several");
    assert!(["numerous", "legion"].contains(&several.replacement.as_str()));
    assert_eq!(several.source, NegativeSource::CoHyponym);

    // "wooden" is unknown to the fixture database: only the random pool is left
    let mut tree = build_incremental(&parse("a wooden table", &Tagger::bundled()).unwrap(), "and").unwrap();
    attach_negatives(&mut tree, &strategy).unwrap();
    let wooden = &tree.levels[0].negatives[0];
    assert_eq!(wooden.source, NegativeSource::RandomPos);
    assert!(store.lemmas(WnPos::Adj).contains(&wooden.replacement));
    assert!(validate_candidate("wooden", &wooden.replacement, PosTag::Adj, &store));
}

#[test]
fn random_adposition_pool() {
    let store = store();
    let strategy = NegativeStrategy::new(StrategyKind::Wn, &store, None, 5)
        .unwrap()
        .with_adpositions(vec!["beside".into(), "near".into()]);
    let mut tree = build_incremental(&parse("a dog near a tree", &Tagger::bundled()).unwrap(), "and").unwrap();
    attach_negatives(&mut tree, &strategy).unwrap();
    let near = tree
        .levels
        .iter()
        .flat_map(|l| &l.negatives)
        .find(|n| n.replaced_word == "near")
        .unwrap();
    assert_eq!(
        (near.replacement.as_str(), near.source),
        ("beside", NegativeSource::RandomPos)
    );
}

#[test]
fn oracle_strategies_require_an_oracle() {
    let store = store();
    for kind in [StrategyKind::WnLlmPrompt, StrategyKind::WnLlmPromptMask] {
        assert!(matches!(
            NegativeStrategy::new(kind, &store, None, 0),
            Err(NegativeError::MissingOracle(_))
        ));
    }
}

#[test]
fn validate_candidate_examples() {
    let store = store();
    assert!(validate_candidate("field", "forest", PosTag::Noun, &store));
    assert!(!validate_candidate("field", "field", PosTag::Noun, &store));
    assert!(!validate_candidate("car", "automobile", PosTag::Noun, &store));
    assert!(!validate_candidate("car", "motor_vehicle", PosTag::Noun, &store));
    assert!(!validate_candidate("car", "", PosTag::Noun, &store));
}

#[test]
fn oracle_output_is_sanitized_and_validated() {
    let store = store();
    let oracle = StubOracle {
        opposite: [
            ("car".to_string(), "Automobile!".to_string()),
            ("apple".to_string(), "  Pear, maybe".to_string()),
        ]
        .into_iter()
        .collect(),
        mask: Default::default(),
    };
    let strategy = NegativeStrategy::new(StrategyKind::WnLlmPrompt, &store, Some(&oracle), 0).unwrap();
    let tree = build_incremental(&parse("a car and an apple", &Tagger::bundled()).unwrap(), "and").unwrap();
    let full = tree.levels.last().unwrap();
    let negatives = generate_for_level(full, &BTreeSet::new(), &strategy).unwrap();
    let car = negatives.iter().find(|n| n.replaced_word == "car").unwrap();
    // the synonym is rejected, so the co-hyponym step supplies the word
    assert_eq!(car.source, NegativeSource::CoHyponym);
    let apple = negatives.iter().find(|n| n.replaced_word == "apple").unwrap();
    assert_eq!(
        (apple.replacement.as_str(), apple.source),
        ("pear", NegativeSource::Antonym)
    );
}

#[test]
fn generation_is_deterministic() {
    let store = store();
    let run = |seed| {
        let strategy = NegativeStrategy::new(StrategyKind::Wn, &store, None, seed).unwrap();
        let mut tree = worked_tree();
        attach_negatives(&mut tree, &strategy).unwrap();
        tree
    };
    assert_eq!(run(9), run(9));
}

#[test]
fn remote_oracle_round_trip() {
    let server = MockServer::start(|path, body| match path {
        "/opposite" => match body["word"].as_str() {
            Some("several") => (200, json!({"word": "One"})),
            Some(_) => (200, json!({"word": null})),
            None => (400, json!({"error": "missing word"})),
        },
        "/fill_mask" => {
            let prompt = body["prompt"].as_str().unwrap_or_default();
            assert!(prompt.contains(MASK_TOKEN));
            (200, json!({"word": "dogs"}))
        }
        _ => (404, json!({})),
    });
    let oracle = RemoteOracle::connect(&server.url);
    assert_eq!(oracle.opposite("several").unwrap(), Some("One".into()));
    assert_eq!(oracle.opposite("kites").unwrap(), None);
    let store = store();
    let strategy = NegativeStrategy::new(StrategyKind::WnLlmPromptMask, &store, Some(&oracle), 0).unwrap();
    let tree = worked_tree();
    let negatives = generate_for_level(&tree.levels[0], &BTreeSet::new(), &strategy).unwrap();
    assert_eq!(texts(&negatives), ["one people", "several animals"]);
}

#[test]
fn persistent_oracle_failure_is_reported() {
    let calls = Arc::new(AtomicUsize::new(0));
    let counter = Arc::clone(&calls);
    let server = MockServer::start(move |_, _| {
        counter.fetch_add(1, Ordering::SeqCst);
        (503, json!({"error": "busy"}))
    });
    let oracle = RemoteOracle::new(JsonClient::new(&server.url).with_retries(3, Duration::from_millis(1)));
    let store = store();
    let strategy = NegativeStrategy::new(StrategyKind::WnLlmPrompt, &store, Some(&oracle), 0).unwrap();
    let tree = worked_tree();
    let err = generate_for_level(&tree.levels[0], &BTreeSet::new(), &strategy).unwrap_err();
    assert!(matches!(err, NegativeError::OracleUnavailable(_)));
    assert_eq!(calls.load(Ordering::SeqCst), 3);
}

#[test]
fn each_original_word_is_replaced_at_most_once() {
    let store = store();
    let strategy = NegativeStrategy::new(StrategyKind::Wn, &store, None, 1).unwrap();
    for caption in [
        WORKED,
        "a dog chasing a cat in a park",
        "a young man on a red motorcycle near a truck",
    ] {
        let mut tree = build_incremental(&parse(caption, &Tagger::bundled()).unwrap(), "and").unwrap();
        attach_negatives(&mut tree, &strategy).unwrap();
        let mut replaced = BTreeSet::new();
        for level in &tree.levels {
            for n in &level.negatives {
                let source = level.positive_tokens[n.replaced_index].source.unwrap();
                assert!(replaced.insert(source), "{caption}: index {source} replaced twice");
                assert_ne!(n.text, level.positive);
                let differing = n
                    .text
                    .split(' ')
                    .zip(level.positive.split(' '))
                    .filter(|(a, b)| a != b)
                    .count();
                assert_eq!(differing, 1);
            }
        }
    }
}
