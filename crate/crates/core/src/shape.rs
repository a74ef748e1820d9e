use std::fmt;

use serde::{Deserialize, Serialize};

/// Logical shape of an activation tensor flowing between layers.
///
/// Data is always stored flat (row-major `channel, row, column` for images);
/// the shape only drives layer wiring and validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    /// Flat vector of the given length.
    Flat(usize),
    /// Image stack: `channels` planes of `height` x `width`.
    Image {
        channels: usize,
        height: usize,
        width: usize,
    },
}

impl Shape {
    /// Number of scalars in one tensor of this shape.
    pub fn len(&self) -> usize {
        match *self {
            Shape::Flat(d) => d,
            Shape::Image {
                channels,
                height,
                width,
            } => channels * height * width,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Shape::Flat(d) => write!(f, "{d}"),
            Shape::Image {
                channels,
                height,
                width,
            } => write!(f, "{channels}x{height}x{width}"),
        }
    }
}
