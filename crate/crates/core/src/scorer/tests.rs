use std::sync::{Arc, Mutex};
use std::time::Duration;

use proptest::prelude::*;
use serde_json::{json, Value};

use super::*;
use crate::remote::JsonClient;
use crate::testing::MockServer;

fn toy(id: &str, rows: Vec<Vec<&str>>) -> ImageRef {
    ImageRef::toy(ToyImage::new(id, rows).unwrap())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn identical_texts_identical_embeddings() {
    let scorer = ToyScorer::new(1);
    let a: Embedding<f64> = scorer.embed_text("a dog on grass").unwrap();
    let b: Embedding<f64> = scorer.embed_text("A dog, on grass.").unwrap();
    assert_eq!(a, b);
    assert_eq!(a.dim(), TOY_DIMENSION);
    let other: Embedding<f64> = ToyScorer::new(2).embed_text("a dog on grass").unwrap();
    assert_ne!(a, other);
}

#[test]
fn matching_grid_scores_higher() {
    let scorer = ToyScorer::new(0);
    let text: Embedding<f64> = scorer.embed_text("people field").unwrap();
    let matching = scorer
        .embed_image(&toy("m", vec![vec!["people", "field"], vec!["", "field"]]))
        .unwrap();
    let other = scorer
        .embed_image(&toy("o", vec![vec!["dog", "bone"], vec!["", "bone"]]))
        .unwrap();
    assert!(text.cosine(&matching) > text.cosine(&other));
}

#[test]
fn relevancy_peaks_on_the_named_cell() {
    let scorer = ToyScorer::new(4);
    let image = toy("i", vec![vec!["tree", "people", "sky"], vec!["grass", "", "road"]]);
    let map: RelevancyMap<f64> = scorer.relevancy(&image, "people").unwrap();
    let (best, _) = map.grid.cells().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap();
    assert_eq!(best, (0, 1));
    assert!((map.grid.get((0, 1)) - 1.0).abs() < 1e-12);
    assert_eq!(*map.grid.get((1, 1)), 0.0);
    assert!(map.grid.cells().filter(|(c, _)| *c != (0, 1)).all(|(_, v)| *v < 0.999));
}

#[test]
fn empty_grid_gives_zero_map_and_no_embedding() {
    let scorer = ToyScorer::new(0);
    let image = toy("e", vec![vec!["", ""], vec!["", ""]]);
    let map: RelevancyMap<f64> = scorer.relevancy(&image, "people").unwrap();
    assert!(map.grid.values().iter().all(|v| *v == 0.0));
    assert!(matches!(
        Scorer::<f64>::embed_image(&scorer, &image),
        Err(ScorerError::EmptyInput(_))
    ));
    assert!(matches!(
        Scorer::<f64>::embed_text(&scorer, " ,. "),
        Err(ScorerError::EmptyInput(_))
    ));
}

#[test]
fn removed_cells_are_invisible() {
    let scorer = ToyScorer::new(0);
    let full = toy("x", vec![vec!["cat", "dog"]]);
    let masked = full.with_removed([(0, 1)].into());
    let cat_only = toy("x", vec![vec!["cat", ""]]);
    let a: Embedding<f64> = scorer.embed_image(&masked).unwrap();
    assert_eq!(a, scorer.embed_image(&cat_only).unwrap());
    let map: RelevancyMap<f64> = scorer.relevancy(&masked, "dog").unwrap();
    assert_eq!(*map.grid.get((0, 1)), 0.0);
}

#[test]
fn similarity_matrix_matches_hand_dot_products() {
    let scorer = ToyScorer::new(3);
    let images = vec![
        toy("a", vec![vec!["red ball", "grass"]]),
        toy("b", vec![vec!["dog", ""], vec!["bone", "dog"]]),
    ];
    let texts: Vec<String> = ["a red ball", "a dog with a bone", "grass"].map(String::from).to_vec();
    let matrix: SimilarityMatrix<f64> = similarity_matrix(&scorer, &images, &texts).unwrap();
    assert_eq!(matrix.scores.shape(), (2, 3));
    assert_eq!(matrix.row_ids, ["a", "b"]);
    for (j, image) in images.iter().enumerate() {
        let ie: Embedding<f64> = scorer.embed_image(image).unwrap();
        for (k, text) in texts.iter().enumerate() {
            let te: Embedding<f64> = scorer.embed_text(text).unwrap();
            let expected = dot(ie.values(), te.values());
            assert!((matrix.scores.get((j, k)) - expected).abs() < 1e-12);
        }
    }
}

#[test]
fn similarity_matrix_edge_cases() {
    let scorer = ToyScorer::new(3);
    let image = toy("a", vec![vec!["cat"]]);
    let one: SimilarityMatrix<f64> = similarity_matrix(&scorer, std::slice::from_ref(&image), &["cat".into()]).unwrap();
    assert_eq!(one.scores.shape(), (1, 1));
    let dup: SimilarityMatrix<f64> =
        similarity_matrix(&scorer, &[image.clone(), image.clone()], &["cat".into(), "dog".into()]).unwrap();
    assert_eq!(dup.scores.row(0), dup.scores.row(1));
    assert!(matches!(
        similarity_matrix::<f64, _>(&scorer, &[], &["cat".into()]),
        Err(ScorerError::EmptyInput(_))
    ));
}

#[test]
fn single_precision_tracks_double() {
    let scorer = ToyScorer::new(8);
    let image = toy("a", vec![vec!["red ball", "grass", "blue"]]);
    let m64: RelevancyMap<f64> = scorer.relevancy(&image, "a red ball").unwrap();
    let m32: RelevancyMap<f32> = scorer.relevancy(&image, "a red ball").unwrap();
    for (a, b) in m64.grid.values().iter().zip(m32.grid.values()) {
        assert!((a - f64::from(*b)).abs() < 1e-5);
    }
}

#[test]
fn toy_images_round_trip_through_json() {
    let image: ToyImage = serde_json::from_str(r#"{"id": "img1", "grid": [["cat", ""], ["", "dog"]]}"#).unwrap();
    assert_eq!(image.grid.shape(), (2, 2));
    assert_eq!(
        serde_json::to_string(&image).unwrap(),
        r#"{"id":"img1","grid":[["cat",""],["","dog"]]}"#
    );
    assert!(serde_json::from_str::<ToyImage>(r#"{"id": "x", "grid": []}"#).is_err());
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = dot(v, v).sqrt();
    v.iter().map(|x| x / n).collect()
}

#[test]
fn remote_scorer_round_trip() {
    let seen: Arc<Mutex<Vec<(String, Value)>>> = Arc::default();
    let log = Arc::clone(&seen);
    let server = MockServer::start(move |path, body| {
        log.lock().unwrap().push((path.to_string(), body.clone()));
        match path {
            "/embed_text" => {
                let n = body["texts"].as_array().map_or(0, Vec::len);
                (200, json!({"embeddings": vec![vec![3.0, 4.0, 0.0]; n]}))
            }
            "/embed_image" => (200, json!({"embedding": [0.0, 1.0, 0.0]})),
            "/relevancy" => (
                200,
                json!({"grid": [[0.1, 0.2], [0.3, 0.4], [0.5, 0.6]], "h": 3, "w": 2}),
            ),
            _ => (404, json!({})),
        }
    });
    let scorer = RemoteScorer::connect(&server.url);
    let text: Embedding<f64> = scorer.embed_text("a cat").unwrap();
    assert_eq!(text.values(), unit(&[3.0, 4.0, 0.0]).as_slice());
    let image = ImageRef::path("img", "/data/cat.jpg").with_removed([(0, 1), (2, 0)].into());
    let ie: Embedding<f64> = scorer.embed_image(&image).unwrap();
    assert!((text.cosine(&ie) - 0.8).abs() < 1e-12);
    let map: RelevancyMap<f64> = scorer.relevancy(&image, "a cat").unwrap();
    assert_eq!(map.shape(), (3, 2));
    assert_eq!(*map.grid.get((2, 1)), 0.6);

    let log = seen.lock().unwrap();
    assert_eq!(log[0].1, json!({"texts": ["a cat"]}));
    assert_eq!(
        log[1].1,
        json!({"image_path": "/data/cat.jpg", "mask": [[0, 1], [2, 0]]})
    );
    assert_eq!(
        log[2].1,
        json!({"image_path": "/data/cat.jpg", "mask": [[0, 1], [2, 0]], "text": "a cat"})
    );
}

#[test]
fn remote_scorer_rejects_protocol_violations() {
    let server = MockServer::start(|path, body| match path {
        "/embed_text" if body["texts"][0] == "short" => (200, json!({"embeddings": [[1.0, 0.0]]})),
        "/embed_text" => (200, json!({"embeddings": [[1.0, 0.0, 0.0]]})),
        "/embed_image" => (200, json!({"embedding": [0.0, 0.0, 0.0]})),
        "/relevancy" => (200, json!({"grid": [[0.1, 0.2]], "h": 2, "w": 1})),
        _ => (404, json!({})),
    });
    let scorer = RemoteScorer::connect(&server.url);
    let _: Embedding<f64> = scorer.embed_text("long").unwrap();
    let err = Scorer::<f64>::embed_text(&scorer, "short").unwrap_err();
    assert!(matches!(err, ScorerError::Protocol(_)), "{err}");
    let image = ImageRef {
        id: "b".into(),
        source: ImageSource::Base64("aGVsbG8=".into()),
        removed: Default::default(),
    };
    assert!(matches!(
        Scorer::<f64>::embed_image(&scorer, &image),
        Err(ScorerError::Protocol(_))
    ));
    assert!(matches!(
        Scorer::<f64>::relevancy(&scorer, &image, "x"),
        Err(ScorerError::Protocol(_))
    ));
    let toy_image = toy("t", vec![vec!["cat"]]);
    assert!(matches!(
        Scorer::<f64>::embed_image(&scorer, &toy_image),
        Err(ScorerError::Unsupported(_))
    ));
}

#[test]
fn unavailable_remote_scorer() {
    let server = MockServer::start(|_, _| (503, json!({"error": "busy"})));
    let scorer = RemoteScorer::new(JsonClient::new(&server.url).with_retries(2, Duration::from_millis(1)));
    assert!(matches!(
        Scorer::<f64>::embed_text(&scorer, "a cat"),
        Err(ScorerError::RemoteUnavailable(_))
    ));
}

proptest! {
    #[test]
    fn toy_embeddings_are_unit_norm(words in prop::collection::vec("[a-z]{1,8}", 1..6), seed in any::<u64>()) {
        let scorer = ToyScorer::new(seed);
        let e: Embedding<f64> = scorer.embed_text(&words.join(" ")).unwrap();
        prop_assert!((e.norm() - 1.0).abs() <= 1e-6);
        let e32: Embedding<f32> = scorer.embed_text(&words.join(" ")).unwrap();
        prop_assert!((e32.norm() - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn toy_similarities_are_bounded(cells in prop::collection::vec("[a-c]{0,2}", 4), text in "[a-c]{1,2}( [a-c]{1,2}){0,2}") {
        let scorer = ToyScorer::new(11);
        let image = ImageRef::toy(ToyImage {
            id: "p".into(),
            grid: Grid::new(2, 2, cells.clone()).unwrap(),
        });
        let map: RelevancyMap<f64> = scorer.relevancy(&image, &text).unwrap();
        prop_assert!(map.grid.values().iter().all(|v| (-1.0..=1.0).contains(v)));
        if cells.iter().any(|c| !c.is_empty()) {
            let m: SimilarityMatrix<f64> = similarity_matrix(&scorer, &[image], &[text]).unwrap();
            prop_assert!((-1.0..=1.0).contains(m.scores.get((0, 0))));
        }
    }
}
