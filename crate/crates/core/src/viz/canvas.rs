//! Tiny software rasterizer. No anti-aliasing, so output depends only on
//! the inputs and not on any platform drawing backend.

use font8x8::UnicodeFonts;
use image::{ImageEncoder, RgbImage};

use super::VizError;

pub struct Canvas {
    img: RgbImage,
}

impl Canvas {
    pub fn new(width: u32, height: u32, background: [u8; 3]) -> Self {
        Self {
            img: RgbImage::from_pixel(width, height, image::Rgb(background)),
        }
    }

    pub fn width(&self) -> u32 {
        self.img.width()
    }

    pub fn height(&self) -> u32 {
        self.img.height()
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        self.img.get_pixel(x, y).0
    }

    fn put(&mut self, x: i64, y: i64, rgb: [u8; 3]) {
        if x >= 0
            && y >= 0
            && (x as u64) < self.img.width() as u64
            && (y as u64) < self.img.height() as u64
        {
            self.img.put_pixel(x as u32, y as u32, image::Rgb(rgb));
        }
    }

    /// Fills pixels whose centers lie within `r` of `(cx, cy)`.
    pub fn fill_circle(&mut self, cx: f64, cy: f64, r: f64, rgb: [u8; 3]) {
        let (x0, x1) = ((cx - r).floor() as i64, (cx + r).ceil() as i64);
        let (y0, y1) = ((cy - r).floor() as i64, (cy + r).ceil() as i64);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let dx = x as f64 + 0.5 - cx;
                let dy = y as f64 + 0.5 - cy;
                if dx * dx + dy * dy <= r * r {
                    self.put(x, y, rgb);
                }
            }
        }
    }

    pub fn fill_rect(&mut self, left: i64, top: i64, w: i64, h: i64, rgb: [u8; 3]) {
        for y in top..top + h {
            for x in left..left + w {
                self.put(x, y, rgb);
            }
        }
    }

    pub fn stroke_rect(&mut self, left: i64, top: i64, w: i64, h: i64, rgb: [u8; 3]) {
        self.fill_rect(left, top, w, 1, rgb);
        self.fill_rect(left, top + h - 1, w, 1, rgb);
        self.fill_rect(left, top, 1, h, rgb);
        self.fill_rect(left + w - 1, top, 1, h, rgb);
    }

    /// Even-odd fill of a closed polygon.
    pub fn fill_polygon(&mut self, pts: &[[f64; 2]], rgb: [u8; 3]) {
        if pts.len() < 3 {
            return;
        }
        let min_y = pts
            .iter()
            .map(|p| p[1])
            .fold(f64::INFINITY, f64::min)
            .floor() as i64;
        let max_y = pts
            .iter()
            .map(|p| p[1])
            .fold(f64::NEG_INFINITY, f64::max)
            .ceil() as i64;
        let mut xs = Vec::new();
        for y in min_y..=max_y {
            let sy = y as f64 + 0.5;
            xs.clear();
            for (a, b) in pts.iter().zip(pts.iter().cycle().skip(1)) {
                if (a[1] <= sy) != (b[1] <= sy) {
                    xs.push(a[0] + (sy - a[1]) / (b[1] - a[1]) * (b[0] - a[0]));
                }
            }
            xs.sort_by(f64::total_cmp);
            for pair in xs.chunks_exact(2) {
                let start = (pair[0] - 0.5).ceil() as i64;
                let end = (pair[1] - 0.5).floor() as i64;
                for x in start..=end {
                    self.put(x, y, rgb);
                }
            }
        }
    }

    /// Five-pointed star centered at `(cx, cy)`, first point straight up.
    pub fn fill_star(&mut self, cx: f64, cy: f64, outer: f64, rgb: [u8; 3]) {
        let inner = outer * 0.45;
        let pts: Vec<[f64; 2]> = (0..10)
            .map(|k| {
                let r = if k % 2 == 0 { outer } else { inner };
                let a = -std::f64::consts::FRAC_PI_2 + k as f64 * std::f64::consts::PI / 5.0;
                [cx + r * a.cos(), cy + r * a.sin()]
            })
            .collect();
        self.fill_polygon(&pts, rgb);
    }

    /// Bresenham line between pixel centers.
    pub fn line(&mut self, from: [f64; 2], to: [f64; 2], rgb: [u8; 3]) {
        let (mut x0, mut y0) = (from[0].floor() as i64, from[1].floor() as i64);
        let (x1, y1) = (to[0].floor() as i64, to[1].floor() as i64);
        let dx = (x1 - x0).abs();
        let dy = -(y1 - y0).abs();
        let sx = if x0 < x1 { 1 } else { -1 };
        let sy = if y0 < y1 { 1 } else { -1 };
        let mut err = dx + dy;
        loop {
            self.put(x0, y0, rgb);
            if x0 == x1 && y0 == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x0 += sx;
            }
            if e2 <= dx {
                err += dx;
                y0 += sy;
            }
        }
    }

    /// Draws text with the 8x8 bitmap font; unknown glyphs render as `?`.
    /// Returns the drawn width in pixels.
    pub fn text(&mut self, left: i64, top: i64, s: &str, scale: i64, rgb: [u8; 3]) -> i64 {
        let mut x = left;
        for ch in s.chars() {
            let glyph = font8x8::BASIC_FONTS
                .get(ch)
                .or_else(|| font8x8::BASIC_FONTS.get('?'))
                .unwrap_or([0; 8]);
            for (row, bits) in glyph.iter().enumerate() {
                for col in 0..8 {
                    if bits & (1 << col) != 0 {
                        self.fill_rect(
                            x + col * scale,
                            top + row as i64 * scale,
                            scale,
                            scale,
                            rgb,
                        );
                    }
                }
            }
            x += 8 * scale;
        }
        x - left
    }

    pub fn into_png(self) -> Result<Vec<u8>, VizError> {
        let mut out = Vec::new();
        let encoder = image::codecs::png::PngEncoder::new_with_quality(
            &mut out,
            image::codecs::png::CompressionType::Default,
            image::codecs::png::FilterType::Adaptive,
        );
        encoder
            .write_image(
                self.img.as_raw(),
                self.img.width(),
                self.img.height(),
                image::ExtendedColorType::Rgb8,
            )
            .map_err(|e| VizError::Encoding(e.to_string()))?;
        Ok(out)
    }
}
