use serde::{Deserialize, Serialize};

use super::palette::{ColorMap, NamedColor, QUERY_COLOR, SEQUENTIAL_PALETTE};
use super::{Canvas, PixelMap, Viewport, VizError};
use crate::data::Label;
use crate::dimred::{Layout2D, PointRole};
use crate::Scalar;

const WHITE: [u8; 3] = [255, 255, 255];
const BLACK: [u8; 3] = [0, 0, 0];
const FRAME: [u8; 3] = [90, 90, 90];
const EDGE: [u8; 3] = [160, 160, 160];
const MARGIN: i64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LegendPosition {
    #[default]
    Right,
    Bottom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderOptions {
    pub width: u32,
    pub height: u32,
    pub point_radius: f64,
    pub star_radius: f64,
    pub legend_position: LegendPosition,
    /// Draw segments from the query to each neighbor.
    pub show_knn_edges: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            width: 1024,
            height: 1024,
            point_radius: 6.0,
            star_radius: 16.0,
            legend_position: LegendPosition::Right,
            show_knn_edges: false,
        }
    }
}

impl RenderOptions {
    pub fn validate(&self) -> Result<(), VizError> {
        if self.width < 256 || self.height < 256 {
            return Err(VizError::InvalidOptions(format!(
                "image must be at least 256x256, got {}x{}",
                self.width, self.height
            )));
        }
        if !(self.point_radius > 0.0) || !(self.star_radius > 0.0) {
            return Err(VizError::InvalidOptions(
                "marker radii must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendEntry {
    /// Set for class legends, `None` for value bins.
    pub class_index: Option<usize>,
    pub label: String,
    pub color_name: String,
    pub rgb: [u8; 3],
}

impl LegendEntry {
    pub fn text(&self) -> String {
        format!("{} ({})", self.label, self.color_name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColormapEntry {
    pub class_index: usize,
    pub class_name: String,
    pub color_name: String,
}

/// Everything about a plot that a reader of the PNG needs, in JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendSidecar {
    pub entries: Vec<LegendEntry>,
    pub viewport: Viewport,
    pub colormap: Vec<ColormapEntry>,
    pub query_index: usize,
    /// Center of the query star in image coordinates.
    pub query_pixel: [f64; 2],
    pub neighbor_indices: Vec<usize>,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedPlot {
    pub png: Vec<u8>,
    pub sidecar: LegendSidecar,
}

struct Frame {
    plot: [i64; 4],
    legend: [i64; 4],
    text_scale: i64,
}

fn frame(opts: &RenderOptions) -> Frame {
    let (w, h) = (opts.width as i64, opts.height as i64);
    let text_scale = if w.min(h) >= 768 { 2 } else { 1 };
    match opts.legend_position {
        LegendPosition::Right => {
            let lw = w * 3 / 10;
            Frame {
                plot: [MARGIN, MARGIN, w - lw - 2 * MARGIN, h - 2 * MARGIN],
                legend: [w - lw - MARGIN / 2, MARGIN, lw, h - 2 * MARGIN],
                text_scale,
            }
        }
        LegendPosition::Bottom => {
            let lh = h * 3 / 10;
            Frame {
                plot: [MARGIN, MARGIN, w - 2 * MARGIN, h - lh - 2 * MARGIN],
                legend: [MARGIN, h - lh - MARGIN / 2, w - 2 * MARGIN, lh],
                text_scale,
            }
        }
    }
}

fn to_f64<T: Scalar>(p: [T; 2]) -> [f64; 2] {
    [p[0].as_f64(), p[1].as_f64()]
}

fn check_indices<T: Scalar>(
    layout: &Layout2D<T>,
    query_index: usize,
    neighbors: &[usize],
    vp: &Viewport,
) -> Result<(), VizError> {
    let len = layout.len();
    if layout.roles.len() != len {
        return Err(VizError::Inconsistent(
            "roles and coords differ in length".into(),
        ));
    }
    for &index in std::iter::once(&query_index).chain(neighbors) {
        if index >= len {
            return Err(VizError::InvalidIndex { index, len });
        }
    }
    if !vp.contains(to_f64(layout.coords[query_index])) {
        return Err(VizError::QueryOutsideViewport);
    }
    Ok(())
}

fn fit_text(s: &str, max_chars: usize) -> String {
    if s.chars().count() <= max_chars {
        s.to_string()
    } else {
        let keep: String = s.chars().take(max_chars.saturating_sub(2)).collect();
        format!("{keep}..")
    }
}

/// Shared drawing: frame, edges, points, star, legend.
fn draw(
    opts: &RenderOptions,
    map: &PixelMap,
    points: &[([f64; 2], [u8; 3])],
    query: [f64; 2],
    edges: &[[f64; 2]],
    legend: &[LegendEntry],
) -> Result<Vec<u8>, VizError> {
    let f = frame(opts);
    let mut c = Canvas::new(opts.width, opts.height, WHITE);
    c.stroke_rect(
        f.plot[0] - 1,
        f.plot[1] - 1,
        f.plot[2] + 2,
        f.plot[3] + 2,
        FRAME,
    );

    let q = map.to_pixel(query);
    for &e in edges {
        c.line(q, map.to_pixel(e), EDGE);
    }
    for &(p, rgb) in points {
        let px = map.to_pixel(p);
        c.fill_circle(px[0], px[1], opts.point_radius + 1.0, WHITE);
        c.fill_circle(px[0], px[1], opts.point_radius, rgb);
    }
    c.fill_star(q[0], q[1], opts.star_radius + 2.5, BLACK);
    c.fill_star(q[0], q[1], opts.star_radius, QUERY_COLOR.rgb);

    let s = f.text_scale;
    let line_h = 12 * s;
    let swatch = 8 * s;
    let [lx, ly, lw, _] = f.legend;
    let max_chars = ((lw - swatch - 3 * MARGIN) / (8 * s)).max(4) as usize;
    let mut y = ly + MARGIN / 2;
    c.fill_star(
        (lx + MARGIN + swatch / 2) as f64,
        (y + 4 * s) as f64,
        (5 * s) as f64,
        QUERY_COLOR.rgb,
    );
    c.text(
        lx + MARGIN + swatch + MARGIN / 2,
        y,
        &fit_text("query (red star)", max_chars),
        s,
        BLACK,
    );
    y += line_h + 4 * s;
    for entry in legend {
        c.fill_circle(
            (lx + MARGIN + swatch / 2) as f64,
            (y + 4 * s) as f64,
            (4 * s) as f64,
            entry.rgb,
        );
        c.text(
            lx + MARGIN + swatch + MARGIN / 2,
            y,
            &fit_text(&entry.text(), max_chars),
            s,
            BLACK,
        );
        y += line_h;
    }
    c.into_png()
}

/// Renders a classification layout around one query.
///
/// Train points inside the viewport are drawn as filled circles in their
/// class color, the query as a red star on top. The legend lists exactly the
/// classes that have a point inside the viewport. Other query rows of a
/// shared layout are not drawn.
pub fn render_scatter<T: Scalar>(
    layout: &Layout2D<T>,
    query_index: usize,
    neighbor_indices: &[usize],
    cmap: &ColorMap,
    vp: &Viewport,
    opts: &RenderOptions,
) -> Result<RenderedPlot, VizError> {
    opts.validate()?;
    check_indices(layout, query_index, neighbor_indices, vp)?;

    let mut points = Vec::new();
    let mut visible = vec![false; cmap.len()];
    for (i, (&p, role)) in layout.coords.iter().zip(&layout.roles).enumerate() {
        match role {
            PointRole::Train(Label::Class(c)) => {
                let entry = cmap
                    .get(*c)
                    .ok_or_else(|| VizError::Inconsistent(format!("class {c} has no color")))?;
                let p = to_f64(p);
                if i != query_index && vp.contains(p) {
                    visible[*c] = true;
                    points.push((p, entry.color.rgb));
                }
            }
            PointRole::Train(Label::Value(_)) => {
                return Err(VizError::Inconsistent(
                    "regression target in a class layout".into(),
                ))
            }
            _ => {}
        }
    }
    let legend: Vec<LegendEntry> = cmap
        .entries()
        .iter()
        .filter(|e| visible[e.class_index])
        .map(|e| LegendEntry {
            class_index: Some(e.class_index),
            label: e.class_name.clone(),
            color_name: e.color.name.to_string(),
            rgb: e.color.rgb,
        })
        .collect();

    let f = frame(opts);
    let map = PixelMap::new(vp, f.plot.map(|v| v as f64));
    let edges: Vec<[f64; 2]> = if opts.show_knn_edges {
        neighbor_indices
            .iter()
            .map(|&i| to_f64(layout.coords[i]))
            .collect()
    } else {
        Vec::new()
    };
    let png = draw(
        opts,
        &map,
        &points,
        to_f64(layout.coords[query_index]),
        &edges,
        &legend,
    )?;
    Ok(RenderedPlot {
        png,
        sidecar: LegendSidecar {
            entries: legend,
            viewport: *vp,
            colormap: cmap
                .entries()
                .iter()
                .map(|e| ColormapEntry {
                    class_index: e.class_index,
                    class_name: e.class_name.clone(),
                    color_name: e.color.name.to_string(),
                })
                .collect(),
            query_index,
            query_pixel: map.to_pixel(to_f64(layout.coords[query_index])),
            neighbor_indices: neighbor_indices.to_vec(),
            width: opts.width,
            height: opts.height,
        },
    })
}

fn format_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e12 {
        format!("{v:.0}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Equal-frequency bins over the train targets: point rank `r` of `n` goes
/// to bin `r * bins / n`. Constant targets collapse to a single bin.
/// Returns per-point bin (aligned with `targets`) and `(lo, hi)` per bin.
pub(crate) fn value_bins(targets: &[f64]) -> (Vec<usize>, Vec<(f64, f64)>) {
    let n = targets.len();
    if n == 0 {
        return (vec![], vec![]);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| targets[a].total_cmp(&targets[b]).then(a.cmp(&b)));
    let constant = targets[order[0]] == targets[order[n - 1]];
    let n_bins = if constant {
        1
    } else {
        SEQUENTIAL_PALETTE.len().min(n)
    };
    let mut bin_of = vec![0; n];
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); n_bins];
    for (rank, &i) in order.iter().enumerate() {
        let b = rank * n_bins / n;
        bin_of[i] = b;
        ranges[b].0 = ranges[b].0.min(targets[i]);
        ranges[b].1 = ranges[b].1.max(targets[i]);
    }
    (bin_of, ranges)
}

fn bin_color(bin: usize, n_bins: usize) -> NamedColor {
    if n_bins == 1 {
        SEQUENTIAL_PALETTE[SEQUENTIAL_PALETTE.len() / 2]
    } else {
        SEQUENTIAL_PALETTE[bin]
    }
}

/// Renders a regression layout, coloring train points by target bin.
/// The legend shows every bin as `lo–hi`.
pub fn render_regression_scatter<T: Scalar>(
    layout: &Layout2D<T>,
    query_index: usize,
    neighbor_indices: &[usize],
    vp: &Viewport,
    opts: &RenderOptions,
) -> Result<RenderedPlot, VizError> {
    opts.validate()?;
    check_indices(layout, query_index, neighbor_indices, vp)?;

    let mut train = Vec::new();
    for (i, role) in layout.roles.iter().enumerate() {
        match role {
            PointRole::Train(Label::Value(v)) => {
                if !v.is_finite() {
                    return Err(VizError::Inconsistent(format!(
                        "target of row {i} is not finite"
                    )));
                }
                train.push((i, *v));
            }
            PointRole::Train(Label::Class(_)) => {
                return Err(VizError::Inconsistent(
                    "class label in a regression layout".into(),
                ))
            }
            _ => {}
        }
    }
    let targets: Vec<f64> = train.iter().map(|&(_, v)| v).collect();
    let (bin_of, ranges) = value_bins(&targets);
    let n_bins = ranges.len();

    let points: Vec<([f64; 2], [u8; 3])> = train
        .iter()
        .zip(&bin_of)
        .filter(|((i, _), _)| *i != query_index)
        .map(|(&(i, _), &b)| (to_f64(layout.coords[i]), bin_color(b, n_bins).rgb))
        .filter(|(p, _)| vp.contains(*p))
        .collect();
    let legend: Vec<LegendEntry> = ranges
        .iter()
        .enumerate()
        .map(|(b, &(lo, hi))| {
            let color = bin_color(b, n_bins);
            LegendEntry {
                class_index: None,
                label: format!("{}–{}", format_value(lo), format_value(hi)),
                color_name: color.name.to_string(),
                rgb: color.rgb,
            }
        })
        .collect();

    let f = frame(opts);
    let map = PixelMap::new(vp, f.plot.map(|v| v as f64));
    let edges: Vec<[f64; 2]> = if opts.show_knn_edges {
        neighbor_indices
            .iter()
            .map(|&i| to_f64(layout.coords[i]))
            .collect()
    } else {
        Vec::new()
    };
    let png = draw(
        opts,
        &map,
        &points,
        to_f64(layout.coords[query_index]),
        &edges,
        &legend,
    )?;
    Ok(RenderedPlot {
        png,
        sidecar: LegendSidecar {
            entries: legend,
            viewport: *vp,
            colormap: Vec::new(),
            query_index,
            query_pixel: map.to_pixel(to_f64(layout.coords[query_index])),
            neighbor_indices: neighbor_indices.to_vec(),
            width: opts.width,
            height: opts.height,
        },
    })
}
