use crate::scorer::RelevancyMap;
use crate::Scalar;

pub fn heatmap_json<T: Scalar + serde::Serialize>(map: &RelevancyMap<T>) -> String {
    serde_json::to_string_pretty(map).expect("relevancy maps always serialize")
}

/// Plain (P2) grayscale image, min-max scaled to 0..=255, each token drawn
/// as a `scale` x `scale` block. A constant map renders black.
pub fn heatmap_pgm<T: Scalar>(map: &RelevancyMap<T>, scale: usize) -> String {
    let scale = scale.max(1);
    let values: Vec<f64> = map.grid.values().iter().map(|v| v.as_f64()).collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let level = |v: f64| {
        if hi > lo {
            ((v - lo) / (hi - lo) * 255.0).round() as u8
        } else {
            0
        }
    };
    let (h, w) = map.shape();
    let mut out = format!(
        "P2\n# {} | {}\n{} {}\n255\n",
        map.image_id,
        map.text.replace('\n', " "),
        w * scale,
        h * scale
    );
    for r in 0..h {
        let row: Vec<String> = (0..w * scale)
            .map(|x| level(map.grid.get((r, x / scale)).as_f64()).to_string())
            .collect();
        let line = row.join(" ");
        for _ in 0..scale {
            out.push_str(&line);
            out.push('\n');
        }
    }
    out
}
