use serde::Serialize;

use super::VizError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NamedColor {
    pub name: &'static str,
    pub rgb: [u8; 3],
}

const fn c(name: &'static str, rgb: [u8; 3]) -> NamedColor {
    NamedColor { name, rgb }
}

/// Class colors in assignment order. Red is reserved for the query marker.
pub const CLASS_PALETTE: [NamedColor; 20] = [
    c("blue", [31, 119, 180]),
    c("green", [44, 160, 44]),
    c("orange", [255, 127, 14]),
    c("purple", [148, 103, 189]),
    c("brown", [140, 86, 75]),
    c("pink", [227, 119, 194]),
    c("gray", [127, 127, 127]),
    c("olive", [188, 189, 34]),
    c("cyan", [23, 190, 207]),
    c("navy", [0, 0, 128]),
    c("teal", [0, 128, 128]),
    c("black", [0, 0, 0]),
    c("lime", [50, 205, 50]),
    c("magenta", [255, 0, 255]),
    c("gold", [255, 215, 0]),
    c("indigo", [75, 0, 130]),
    c("tan", [210, 180, 140]),
    c("turquoise", [64, 224, 208]),
    c("lavender", [181, 126, 220]),
    c("mint", [62, 180, 137]),
];

/// Low-to-high value bins for regression plots.
pub const SEQUENTIAL_PALETTE: [NamedColor; 5] = [
    c("purple", [68, 1, 84]),
    c("blue", [59, 82, 139]),
    c("teal", [33, 145, 140]),
    c("green", [94, 201, 98]),
    c("yellow", [253, 231, 37]),
];

pub const QUERY_COLOR: NamedColor = c("red", [255, 0, 0]);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassColor {
    pub class_index: usize,
    pub class_name: String,
    pub color: NamedColor,
}

/// Class index to named color. Derived only from the class list, so every
/// plot of a dataset uses the same mapping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColorMap {
    entries: Vec<ClassColor>,
}

impl ColorMap {
    pub fn entries(&self) -> &[ClassColor] {
        &self.entries
    }

    pub fn get(&self, class_index: usize) -> Option<&ClassColor> {
        self.entries.get(class_index)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(class name, color name)` pairs in class order.
    pub fn pairs(&self) -> Vec<(String, String)> {
        self.entries
            .iter()
            .map(|e| (e.class_name.clone(), e.color.name.to_string()))
            .collect()
    }
}

pub fn assign_palette<S: AsRef<str>>(class_names: &[S]) -> Result<ColorMap, VizError> {
    if class_names.is_empty() {
        return Err(VizError::NoClasses);
    }
    if class_names.len() > CLASS_PALETTE.len() {
        return Err(VizError::PaletteExhausted {
            classes: class_names.len(),
            capacity: CLASS_PALETTE.len(),
        });
    }
    Ok(ColorMap {
        entries: class_names
            .iter()
            .zip(CLASS_PALETTE)
            .enumerate()
            .map(|(class_index, (name, color))| ClassColor {
                class_index,
                class_name: name.as_ref().to_string(),
                color,
            })
            .collect(),
    })
}
