//! Deterministic scatter rendering for the model to look at.

mod canvas;
mod palette;
mod render;
mod viewport;

use thiserror::Error;

pub use canvas::Canvas;
pub use palette::{
    assign_palette, ClassColor, ColorMap, NamedColor, CLASS_PALETTE, QUERY_COLOR,
    SEQUENTIAL_PALETTE,
};
pub use render::{
    render_regression_scatter, render_scatter, ColormapEntry, LegendEntry, LegendPosition,
    LegendSidecar, RenderOptions, RenderedPlot,
};
pub use viewport::{compute_zoom, data_extent, PixelMap, Viewport, DEFAULT_MARGIN_FRACTION};

#[derive(Debug, Error, PartialEq)]
pub enum VizError {
    #[error("palette exhausted: {classes} classes, {capacity} named colors")]
    PaletteExhausted { classes: usize, capacity: usize },
    #[error("no classes to color")]
    NoClasses,
    #[error("index {index} out of range for layout of {len} points")]
    InvalidIndex { index: usize, len: usize },
    #[error("zoom scale {0} must be >= 1")]
    InvalidZoom(f64),
    #[error("viewport excludes the query point")]
    QueryOutsideViewport,
    #[error("invalid render options: {0}")]
    InvalidOptions(String),
    #[error("layout and color map disagree: {0}")]
    Inconsistent(String),
    #[error("png encoding failed: {0}")]
    Encoding(String),
}
