use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use super::{Embedding, ImageRef, ImageSource, RelevancyMap, Scorer, ScorerError};
use crate::grid::{Cell, Grid};
use crate::remote::JsonClient;
use crate::Scalar;

/// HTTP client for an inference service.
///
/// Wire contract (JSON bodies):
///
/// | endpoint          | request                                         | response                         |
/// |-------------------|-------------------------------------------------|----------------------------------|
/// | `/embed_text`     | `{"texts": [..]}`                               | `{"embeddings": [[..], ..]}`     |
/// | `/embed_image`    | `{"image_path" \| "image_b64", "mask"?}`        | `{"embedding": [..]}`            |
/// | `/relevancy`      | `{"image_path" \| "image_b64", "mask"?, "text"}`| `{"grid": [[..]], "h": H, "w": W}` |
///
/// `mask` lists removed tokens as `[row, col]` pairs and is omitted when
/// nothing is removed.
#[derive(Debug)]
pub struct RemoteScorer {
    client: JsonClient,
    dim: AtomicUsize,
}

#[derive(Serialize)]
struct TextsRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct TextsResponse {
    embeddings: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct ImageRequest<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    image_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    image_b64: Option<&'a str>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    mask: Vec<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    text: Option<&'a str>,
}

#[derive(Deserialize)]
struct ImageResponse {
    embedding: Vec<f64>,
}

#[derive(Deserialize)]
struct RelevancyResponse {
    grid: Vec<Vec<f64>>,
    h: usize,
    w: usize,
}

impl RemoteScorer {
    pub fn new(client: JsonClient) -> Self {
        Self {
            client,
            dim: AtomicUsize::new(0),
        }
    }

    pub fn connect(base_url: &str) -> Self {
        Self::new(JsonClient::new(base_url))
    }

    fn image_request<'a>(image: &'a ImageRef, text: Option<&'a str>) -> Result<ImageRequest<'a>, ScorerError> {
        let (image_path, image_b64) = match &image.source {
            ImageSource::Path(p) => (Some(p.display().to_string()), None),
            ImageSource::Base64(b) => (None, Some(b.as_str())),
            ImageSource::Toy(_) => {
                return Err(ScorerError::Unsupported(format!(
                    "toy image {} cannot be sent to a remote scorer",
                    image.id
                )))
            }
        };
        Ok(ImageRequest {
            image_path,
            image_b64,
            mask: image.removed.iter().map(|&(r, c): &Cell| [r, c]).collect(),
            text,
        })
    }

    fn embedding<T: Scalar>(&self, raw: Vec<f64>) -> Result<Embedding<T>, ScorerError> {
        let dim = raw.len();
        match self.dim.compare_exchange(0, dim, Ordering::SeqCst, Ordering::SeqCst) {
            Ok(_) => {}
            Err(known) if known == dim => {}
            Err(known) => {
                return Err(ScorerError::Protocol(format!(
                    "embedding dimension changed from {known} to {dim}"
                )))
            }
        }
        Embedding::from_raw(raw.into_iter().map(T::of).collect())
            .map_err(|_| ScorerError::Protocol("zero or non-finite embedding".into()))
    }
}

impl<T: Scalar> Scorer<T> for RemoteScorer {
    fn embed_text(&self, text: &str) -> Result<Embedding<T>, ScorerError> {
        let mut all = self.embed_texts(&[text.to_string()])?;
        Ok(all.remove(0))
    }

    fn embed_texts(&self, texts: &[String]) -> Result<Vec<Embedding<T>>, ScorerError> {
        if texts.is_empty() || texts.iter().any(|t| t.trim().is_empty()) {
            return Err(ScorerError::EmptyInput("empty text".into()));
        }
        let resp: TextsResponse = self.client.post("/embed_text", &TextsRequest { texts })?;
        if resp.embeddings.len() != texts.len() {
            return Err(ScorerError::Protocol(format!(
                "asked for {} embeddings, got {}",
                texts.len(),
                resp.embeddings.len()
            )));
        }
        resp.embeddings.into_iter().map(|e| self.embedding(e)).collect()
    }

    fn embed_image(&self, image: &ImageRef) -> Result<Embedding<T>, ScorerError> {
        let resp: ImageResponse = self.client.post("/embed_image", &Self::image_request(image, None)?)?;
        self.embedding(resp.embedding)
    }

    fn relevancy(&self, image: &ImageRef, text: &str) -> Result<RelevancyMap<T>, ScorerError> {
        let resp: RelevancyResponse = self
            .client
            .post("/relevancy", &Self::image_request(image, Some(text))?)?;
        let grid = Grid::from_rows(resp.grid).map_err(|e| ScorerError::Protocol(e.to_string()))?;
        if grid.shape() != (resp.h, resp.w) {
            return Err(ScorerError::Protocol(format!(
                "relevancy grid is {}x{} but h={}, w={}",
                grid.rows(),
                grid.cols(),
                resp.h,
                resp.w
            )));
        }
        RelevancyMap::new(grid.map(|v| T::of(*v)), image.id.clone(), text)
    }
}
