//! Total-variation seminorms for complex images.
//!
//! Type-I seminorms measure the complex differences `|x[j,k] − x[j+1,k]|`
//! jointly; type-II seminorms are an `α`-weighted sum of the real TV of the
//! real part and the real TV of the imaginary part. Each comes in an
//! isotropic and an anisotropic flavor. Differences on the last row/column
//! have no partner in the other direction and are counted on their own.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::field::{forward_diff, ComplexField, DiffField};

/// Which complex TV seminorm to use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TvVariant {
    Type1Isotropic,
    Type1Anisotropic,
    /// `α·TV_iso(Re x) + (1−α)·TV_iso(Im x)`
    Type2Isotropic { alpha: f64 },
    /// `α·TV_aniso(Re x) + (1−α)·TV_aniso(Im x)`
    Type2Anisotropic { alpha: f64 },
}

/// Variant name without the weight, as used in config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvKind {
    Type1Isotropic,
    Type1Anisotropic,
    Type2Isotropic,
    Type2Anisotropic,
}

impl TvKind {
    pub const ALL: [TvKind; 4] = [
        TvKind::Type1Isotropic,
        TvKind::Type1Anisotropic,
        TvKind::Type2Isotropic,
        TvKind::Type2Anisotropic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TvKind::Type1Isotropic => "i-iso",
            TvKind::Type1Anisotropic => "i-aniso",
            TvKind::Type2Isotropic => "ii-iso",
            TvKind::Type2Anisotropic => "ii-aniso",
        }
    }

    /// Attaches a weight; `alpha` is ignored for type-I kinds.
    pub fn with_alpha(self, alpha: f64) -> Result<TvVariant> {
        let variant = match self {
            TvKind::Type1Isotropic => TvVariant::Type1Isotropic,
            TvKind::Type1Anisotropic => TvVariant::Type1Anisotropic,
            TvKind::Type2Isotropic => TvVariant::Type2Isotropic { alpha },
            TvKind::Type2Anisotropic => TvVariant::Type2Anisotropic { alpha },
        };
        variant.validate()?;
        Ok(variant)
    }
}

impl FromStr for TvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TvKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown TV variant `{s}`")))
    }
}

impl fmt::Display for TvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl TvVariant {
    pub fn kind(&self) -> TvKind {
        match self {
            TvVariant::Type1Isotropic => TvKind::Type1Isotropic,
            TvVariant::Type1Anisotropic => TvKind::Type1Anisotropic,
            TvVariant::Type2Isotropic { .. } => TvKind::Type2Isotropic,
            TvVariant::Type2Anisotropic { .. } => TvKind::Type2Anisotropic,
        }
    }

    /// Weight of the real-part term (1 for type-I variants).
    pub fn alpha(&self) -> Option<f64> {
        match *self {
            TvVariant::Type2Isotropic { alpha } | TvVariant::Type2Anisotropic { alpha } => Some(alpha),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.alpha() {
            Some(a) if !(0.0..=1.0).contains(&a) => {
                Err(Error::invalid(format!("alpha must lie in [0, 1], got {a}")))
            }
            _ => Ok(()),
        }
    }

    /// The seminorm of `x`.
    pub fn seminorm(&self, x: &ComplexField) -> f64 {
        self.seminorm_of_diff(&forward_diff(x))
    }

    /// The seminorm evaluated directly from precomputed differences.
    pub fn seminorm_of_diff(&self, p: &DiffField) -> f64 {
        match *self {
            TvVariant::Type1Isotropic => type1_isotropic(p),
            TvVariant::Type1Anisotropic => {
                hypot_sum(&p.u1, &p.v1) + hypot_sum(&p.u2, &p.v2)
            }
            TvVariant::Type2Isotropic { alpha } => {
                alpha * real_isotropic(&p.u1, &p.u2) + (1.0 - alpha) * real_isotropic(&p.v1, &p.v2)
            }
            TvVariant::Type2Anisotropic { alpha } => {
                alpha * real_anisotropic(&p.u1, &p.u2) + (1.0 - alpha) * real_anisotropic(&p.v1, &p.v2)
            }
        }
    }
}

impl fmt::Display for TvVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.alpha() {
            Some(a) => write!(f, "{}(alpha={a})", self.kind()),
            None => write!(f, "{}", self.kind()),
        }
    }
}

/// Convenience wrapper for [`TvVariant::seminorm`].
pub fn tv_seminorm(x: &ComplexField, variant: TvVariant) -> f64 {
    variant.seminorm(x)
}

fn hypot_sum(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.hypot(*y)).sum()
}

fn type1_isotropic(p: &DiffField) -> f64 {
    let (m, n) = p.source_dim();
    let mut total = 0.0;
    for j in 0..m.saturating_sub(1) {
        for k in 0..n.saturating_sub(1) {
            let (a, b, c, d) = (p.u1[[j, k]], p.v1[[j, k]], p.u2[[j, k]], p.v2[[j, k]]);
            total += (a * a + b * b + c * c + d * d).sqrt();
        }
        total += p.u1[[j, n - 1]].hypot(p.v1[[j, n - 1]]);
    }
    for k in 0..n.saturating_sub(1) {
        total += p.u2[[m - 1, k]].hypot(p.v2[[m - 1, k]]);
    }
    total
}

/// Real isotropic TV from the vertical (`d1`) and horizontal (`d2`) differences.
fn real_isotropic(d1: &Array2<f64>, d2: &Array2<f64>) -> f64 {
    let (m, n) = (d2.nrows(), d1.ncols());
    let mut total = 0.0;
    for j in 0..m.saturating_sub(1) {
        for k in 0..n.saturating_sub(1) {
            total += d1[[j, k]].hypot(d2[[j, k]]);
        }
        total += d1[[j, n - 1]].abs();
    }
    for k in 0..n.saturating_sub(1) {
        total += d2[[m - 1, k]].abs();
    }
    total
}

fn real_anisotropic(d1: &Array2<f64>, d2: &Array2<f64>) -> f64 {
    d1.iter().chain(d2.iter()).map(|x| x.abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn all_variants(alpha: f64) -> [TvVariant; 4] {
        [
            TvVariant::Type1Isotropic,
            TvVariant::Type1Anisotropic,
            TvVariant::Type2Isotropic { alpha },
            TvVariant::Type2Anisotropic { alpha },
        ]
    }

    #[test]
    fn constant_field_has_zero_tv() {
        let x = ComplexField::constant(4, 5, 0.3, -2.0);
        for variant in all_variants(0.4) {
            assert_eq!(variant.seminorm(&x), 0.0);
        }
    }

    #[test]
    fn hand_evaluated_anisotropic() {
        let x = ComplexField::new(array![[0.0, 1.0], [0.0, 1.0]], Array2::zeros((2, 2))).unwrap();
        assert_eq!(TvVariant::Type1Anisotropic.seminorm(&x), 2.0);
    }

    #[test]
    fn parses_names() {
        for kind in TvKind::ALL {
            assert_eq!(kind.name().parse::<TvKind>().unwrap(), kind);
        }
        assert!("iso".parse::<TvKind>().is_err());
        assert!(TvKind::Type2Isotropic.with_alpha(1.5).is_err());
        assert!(TvKind::Type1Isotropic.with_alpha(1.5).is_ok());
    }

    #[test]
    fn single_pixel_and_lines() {
        let x = ComplexField::constant(1, 1, 2.0, 3.0);
        for variant in all_variants(0.5) {
            assert_eq!(variant.seminorm(&x), 0.0);
        }
        let row = ComplexField::new(array![[0.0, 3.0, 3.0]], array![[0.0, 4.0, 4.0]]).unwrap();
        assert!((TvVariant::Type1Isotropic.seminorm(&row) - 5.0).abs() < 1e-15);
        assert!((TvVariant::Type2Anisotropic { alpha: 0.5 }.seminorm(&row) - 3.5).abs() < 1e-15);
    }
}
