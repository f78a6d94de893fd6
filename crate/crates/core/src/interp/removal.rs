use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::InterpError;
use crate::grid::Cell;
use crate::scorer::{ImageRef, RelevancyMap};
use crate::Scalar;

/// Absorbs representation error in `fraction * cells` (0.29 * 100 is
/// 28.999999999999996 in binary floating point).
const FLOOR_SLACK: f64 = 1e-9;

/// `floor(fraction * cells)`, for a fraction already checked to lie in `[0, 1]`.
pub fn removal_count(fraction: f64, cells: usize) -> usize {
    ((fraction * cells as f64 + FLOOR_SLACK).floor() as usize).min(cells)
}

/// Cells ordered from least to most relevant; the first
/// `floor(fraction * H * W)` are removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovalPlan {
    pub order: Vec<Cell>,
    pub fraction: f64,
    pub removed: Vec<Cell>,
}

impl RemovalPlan {
    pub fn new<T: Scalar>(map: &RelevancyMap<T>, fraction: f64) -> Result<Self, InterpError> {
        check_fraction(fraction)?;
        let mut order: Vec<(Cell, T)> = map.grid.cells().map(|(c, v)| (c, *v)).collect();
        order.sort_by(|(ca, va), (cb, vb)| va.partial_cmp(vb).unwrap_or(Ordering::Equal).then(ca.cmp(cb)));
        let order: Vec<Cell> = order.into_iter().map(|(c, _)| c).collect();
        let removed = order[..removal_count(fraction, order.len())].to_vec();
        Ok(Self {
            order,
            fraction,
            removed,
        })
    }

    /// Same order, different fraction.
    pub fn at(&self, fraction: f64) -> Result<Self, InterpError> {
        check_fraction(fraction)?;
        Ok(Self {
            order: self.order.clone(),
            fraction,
            removed: self.order[..removal_count(fraction, self.order.len())].to_vec(),
        })
    }

    pub fn removed_set(&self) -> BTreeSet<Cell> {
        self.removed.iter().copied().collect()
    }
}

pub(crate) fn check_fraction(fraction: f64) -> Result<(), InterpError> {
    if (0.0..=1.0).contains(&fraction) {
        Ok(())
    } else {
        Err(InterpError::InvalidFraction(fraction))
    }
}

/// Masks the `floor(fraction * H * W)` least relevant tokens of `image`
/// (on top of anything it already masks).
pub fn remove_tokens<T: Scalar>(
    image: &ImageRef,
    rel: &RelevancyMap<T>,
    fraction: f64,
) -> Result<ImageRef, InterpError> {
    if let Some(shape) = image.shape() {
        if shape != rel.shape() {
            return Err(InterpError::ShapeMismatch {
                left: shape,
                right: rel.shape(),
            });
        }
    }
    let plan = RemovalPlan::new(rel, fraction)?;
    let mut removed = image.removed.clone();
    removed.extend(plan.removed);
    Ok(image.with_removed(removed))
}
