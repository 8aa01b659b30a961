//! Procedural piecewise-constant test image.
//!
//! Shapes are laid out in normalized coordinates so the same picture is
//! produced at any resolution. Values lie in `[0, 1]`.

use std::f64::consts::PI;

use ndarray::Array2;

/// Grayscale test image of size `rows × cols` with values in `[0, 1]`.
pub fn phantom(rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |(j, k)| {
        // pixel centers in [0, 1]²
        let y = (j as f64 + 0.5) / rows as f64;
        let x = (k as f64 + 0.5) / cols as f64;
        let mut value = 0.15;

        if inside_ellipse(x, y, 0.5, 0.5, 0.42, 0.38) {
            value = 0.35;
        }
        if inside_ellipse(x, y, 0.36, 0.40, 0.16, 0.12) {
            value = 0.8;
        }
        if (0.55..0.80).contains(&x) && (0.25..0.45).contains(&y) {
            value = 0.6;
        }
        if inside_ellipse(x, y, 0.66, 0.66, 0.12, 0.12) && !inside_ellipse(x, y, 0.66, 0.66, 0.06, 0.06) {
            value = 1.0;
        }
        // triangle with vertices (0.22, 0.80), (0.46, 0.80), (0.34, 0.58)
        if y < 0.80 && y > 0.58 + (x - 0.34).abs() * (0.22 / 0.12) {
            value = 0.9;
        }
        for (cx, cy) in [(0.30, 0.18), (0.42, 0.16), (0.54, 0.14)] {
            if inside_ellipse(x, y, cx, cy, 0.035, 0.035) {
                value = 0.7;
            }
        }
        // thin bars of varying width
        if (0.86..0.93).contains(&y) && (0.30..0.70).contains(&x) && ((x - 0.30) * 25.0).floor() as i64 % 2 == 0 {
            value = 0.55;
        }
        value
    })
}

/// Phantom edges over smooth low-frequency shading, with values in `[0, 1]`.
///
/// Closer in character to natural test images than [`phantom`] alone, and
/// used as the phase-retrieval benchmark object.
pub fn shaded_phantom(rows: usize, cols: usize) -> Array2<f64> {
    let edges = phantom(rows, cols);
    Array2::from_shape_fn((rows, cols), |(j, k)| {
        let y = (j as f64 + 0.5) / rows as f64;
        let x = (k as f64 + 0.5) / cols as f64;
        let shading = 0.25 * (2.0 * PI * x).sin() * (3.0 * PI * y).cos();
        (0.5 + shading + 0.5 * (edges[[j, k]] - 0.5)).clamp(0.0, 1.0)
    })
}

fn inside_ellipse(x: f64, y: f64, cx: f64, cy: f64, rx: f64, ry: f64) -> bool {
    ((x - cx) / rx).powi(2) + ((y - cy) / ry).powi(2) <= 1.0
}
