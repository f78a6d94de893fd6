//! Input files and atomic output.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use captree::scorer::ImageSource;
use captree::{ImageRef, ToyImage};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::CliError;

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::input(path, e))
}

/// One caption per line, either `caption` or `id<TAB>caption`. Blank lines
/// are skipped; the default id is the 1-based line number.
pub fn parse_captions(text: &str) -> Vec<(usize, String, String)> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| match line.split_once('\t') {
            Some((id, caption)) => (i + 1, id.trim().to_string(), caption.trim().to_string()),
            None => (i + 1, (i + 1).to_string(), line.trim().to_string()),
        })
        .collect()
}

/// Non-blank JSONL lines paired with their 1-based line numbers.
pub fn jsonl_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let text = read_text(path)?;
    jsonl_lines(&text)
        .map(|(n, line)| serde_json::from_str(line).map_err(|e| CliError::input(path, format!("line {n}: {e}"))))
        .collect()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    caption_id: String,
    #[serde(default)]
    image: Option<ToyImage>,
    #[serde(default)]
    image_id: Option<String>,
    #[serde(default)]
    image_path: Option<PathBuf>,
    #[serde(default)]
    image_b64: Option<String>,
}

impl ManifestEntry {
    fn into_image(self, base: &Path) -> Result<(String, ImageRef), String> {
        let image = match (self.image, self.image_path, self.image_b64) {
            (Some(toy), None, None) => {
                if self.image_id.as_ref().is_some_and(|id| *id != toy.id) {
                    return Err("image_id disagrees with image.id".into());
                }
                ImageRef::toy(toy)
            }
            (None, Some(path), None) => {
                let path = if path.is_relative() { base.join(path) } else { path };
                ImageRef::path(self.image_id.ok_or("image_path needs an image_id")?, path)
            }
            (None, None, Some(b64)) => ImageRef {
                id: self.image_id.ok_or("image_b64 needs an image_id")?,
                source: ImageSource::Base64(b64),
                removed: Default::default(),
            },
            _ => return Err("exactly one of image, image_path, image_b64 is required".into()),
        };
        Ok((self.caption_id, image))
    }
}

/// Images keyed by caption id. Relative image paths resolve against the
/// manifest's directory.
pub fn read_manifest(path: &Path) -> Result<BTreeMap<String, ImageRef>, CliError> {
    let base = path.parent().unwrap_or(Path::new("."));
    let entries: Vec<ManifestEntry> = read_jsonl(path)?;
    let mut images = BTreeMap::new();
    for (i, entry) in entries.into_iter().enumerate() {
        let (caption_id, image) = entry
            .into_image(base)
            .map_err(|m| CliError::input(path, format!("entry {}: {m}", i + 1)))?;
        if images.insert(caption_id.clone(), image).is_some() {
            return Err(CliError::input(path, format!("caption id {caption_id:?} listed twice")));
        }
    }
    Ok(images)
}

pub fn image_for<'a>(
    images: &'a BTreeMap<String, ImageRef>,
    caption_id: &str,
    manifest: &Path,
) -> Result<&'a ImageRef, CliError> {
    images
        .get(caption_id)
        .ok_or_else(|| CliError::input(manifest, format!("no image for caption {caption_id:?}")))
}

/// `positive<TAB>negative` per line; blank lines and `#` comments skipped.
pub fn read_pairs(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = read_text(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| match l.split('\t').collect::<Vec<_>>().as_slice() {
            [p, n] if !p.trim().is_empty() && !n.trim().is_empty() => {
                Ok((p.trim().to_lowercase(), n.trim().to_lowercase()))
            }
            _ => Err(CliError::input(
                path,
                format!("line {}: expected positive<TAB>negative", i + 1),
            )),
        })
        .collect()
}

/// Writes via a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail = |e: &dyn std::fmt::Display| CliError::input(path, format!("cannot write: {e}"));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| fail(&e))?;
    tmp.write_all(contents).map_err(|e| fail(&e))?;
    tmp.persist(path).map_err(|e| fail(&e.error))?;
    Ok(())
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::input(path, format!("cannot create directory: {e}")))
}

/// Keeps ASCII alphanumerics, `.`, `-` and `_`; everything else becomes `_`.
pub fn file_stem(id: &str) -> String {
    let stem: String = id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') {
                c
            } else {
                '_'
            }
        })
        .collect();
    if stem.is_empty() || stem.chars().all(|c| c == '.') {
        format!("_{stem}")
    } else {
        stem
    }
}
