use serde::{Deserialize, Serialize};

use super::VizError;
use crate::dimred::Layout2D;
use crate::Scalar;

pub const DEFAULT_MARGIN_FRACTION: f64 = 0.10;
const DEGENERATE_FRACTION: f64 = 0.01;

/// Data-space window that gets drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Viewport {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub zoom_scale: f64,
    pub margin_fraction: f64,
}

impl Viewport {
    pub fn width(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    pub fn height(&self) -> f64 {
        self.y[1] - self.y[0]
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x[0] && p[0] <= self.x[1] && p[1] >= self.y[0] && p[1] <= self.y[1]
    }
}

fn bbox(points: impl Iterator<Item = [f64; 2]>) -> Option<([f64; 2], [f64; 2])> {
    points.fold(None, |acc, p| {
        Some(match acc {
            None => ([p[0], p[0]], [p[1], p[1]]),
            Some((x, y)) => (
                [x[0].min(p[0]), x[1].max(p[0])],
                [y[0].min(p[1]), y[1].max(p[1])],
            ),
        })
    })
}

fn grow(range: [f64; 2], factor: f64) -> [f64; 2] {
    let c = 0.5 * (range[0] + range[1]);
    let h = 0.5 * (range[1] - range[0]) * factor;
    [c - h, c + h]
}

/// Bounding box of every layout point, widened by `margin_fraction` on each
/// side. Zero-length axes become unit length around the points.
pub fn data_extent<T: Scalar>(layout: &Layout2D<T>, margin_fraction: f64) -> ([f64; 2], [f64; 2]) {
    let (x, y) = bbox(layout.coords.iter().map(|p| [p[0].as_f64(), p[1].as_f64()]))
        .unwrap_or(([0.0, 0.0], [0.0, 0.0]));
    let fix = |r: [f64; 2]| {
        if r[1] > r[0] {
            grow(r, 1.0 + 2.0 * margin_fraction)
        } else {
            [r[0] - 0.5, r[0] + 0.5]
        }
    };
    (fix(x), fix(y))
}

/// Viewport around a query and its neighbors.
///
/// Steps: bounding box of the query and neighbors, widened by
/// `margin_fraction` per side, scaled about its center by `zoom_scale`, any
/// zero-length axis set to 1% of the larger data-extent side, then clipped
/// to the data extent.
pub fn compute_zoom<T: Scalar>(
    layout: &Layout2D<T>,
    query_index: usize,
    neighbor_indices: &[usize],
    zoom_scale: f64,
    margin_fraction: f64,
) -> Result<Viewport, VizError> {
    if !(zoom_scale >= 1.0) || !zoom_scale.is_finite() {
        return Err(VizError::InvalidZoom(zoom_scale));
    }
    if !(margin_fraction >= 0.0) {
        return Err(VizError::InvalidOptions(format!(
            "margin fraction {margin_fraction} must be >= 0"
        )));
    }
    let len = layout.len();
    for &index in std::iter::once(&query_index).chain(neighbor_indices) {
        if index >= len {
            return Err(VizError::InvalidIndex { index, len });
        }
    }
    let pt = |i: usize| [layout.coords[i][0].as_f64(), layout.coords[i][1].as_f64()];
    let (bx, by) = bbox(
        std::iter::once(query_index)
            .chain(neighbor_indices.iter().copied())
            .map(pt),
    )
    .expect("query index is always present");

    let factor = (1.0 + 2.0 * margin_fraction) * zoom_scale;
    let (mut x, mut y) = (grow(bx, factor), grow(by, factor));

    let (ex, ey) = data_extent(layout, margin_fraction);
    let min_side = DEGENERATE_FRACTION * (ex[1] - ex[0]).max(ey[1] - ey[0]);
    for r in [&mut x, &mut y] {
        if r[1] - r[0] <= 0.0 {
            let c = r[0];
            *r = [c - 0.5 * min_side, c + 0.5 * min_side];
        }
    }
    let clip = |r: [f64; 2], e: [f64; 2]| [r[0].max(e[0]), r[1].min(e[1])];
    Ok(Viewport {
        x: clip(x, ex),
        y: clip(y, ey),
        zoom_scale,
        margin_fraction,
    })
}

/// Affine, aspect-preserving map from data space to pixels inside a plot
/// rectangle. The viewport is centered; y grows upward in data space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelMap {
    scale: f64,
    origin: [f64; 2],
    vp_origin: [f64; 2],
}

impl PixelMap {
    /// `rect` is `[left, top, width, height]` in pixels.
    pub fn new(vp: &Viewport, rect: [f64; 4]) -> Self {
        let (w, h) = (
            vp.width().max(f64::MIN_POSITIVE),
            vp.height().max(f64::MIN_POSITIVE),
        );
        let scale = (rect[2] / w).min(rect[3] / h);
        let pad_x = 0.5 * (rect[2] - w * scale);
        let pad_y = 0.5 * (rect[3] - h * scale);
        Self {
            scale,
            origin: [rect[0] + pad_x, rect[1] + pad_y + h * scale],
            vp_origin: [vp.x[0], vp.y[0]],
        }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn to_pixel(&self, p: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + (p[0] - self.vp_origin[0]) * self.scale,
            self.origin[1] - (p[1] - self.vp_origin[1]) * self.scale,
        ]
    }
}
