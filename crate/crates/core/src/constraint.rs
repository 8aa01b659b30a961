//! Object-domain constraint sets and their Euclidean projections.

use std::fmt;
use std::str::FromStr;

use ndarray::Zip;

use crate::error::{Error, Result};
use crate::field::ComplexField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConstraintSet {
    /// No constraint.
    FullSpace,
    /// `u² + v² ≤ 1` at every pixel (non-negative absorption).
    #[default]
    UnitDisk,
}

impl ConstraintSet {
    pub fn name(self) -> &'static str {
        match self {
            ConstraintSet::FullSpace => "none",
            ConstraintSet::UnitDisk => "unit-disk",
        }
    }

    /// Euclidean projection onto the set.
    ///
    /// For the unit disk each pixel is scaled by `1 / max(1, |x|)`.
    pub fn project(self, x: &ComplexField) -> ComplexField {
        let mut out = x.clone();
        self.project_in_place(&mut out);
        out
    }

    pub fn project_in_place(self, x: &mut ComplexField) {
        if self == ConstraintSet::UnitDisk {
            let (u, v) = x.parts_mut();
            Zip::from(u).and(v).for_each(|a, b| {
                let r = a.hypot(*b);
                if r > 1.0 {
                    *a /= r;
                    *b /= r;
                }
            });
        }
    }

    pub fn contains(self, x: &ComplexField, slack: f64) -> bool {
        match self {
            ConstraintSet::FullSpace => true,
            ConstraintSet::UnitDisk => Zip::from(x.u())
                .and(x.v())
                .all(|&a, &b| a * a + b * b <= 1.0 + slack),
        }
    }

    /// `‖x − P_C(x)‖_F`, zero exactly on the set.
    pub fn distance(self, x: &ComplexField) -> f64 {
        match self {
            ConstraintSet::FullSpace => 0.0,
            ConstraintSet::UnitDisk => Zip::from(x.u())
                .and(x.v())
                .fold(0.0, |acc, &a, &b| {
                    let excess = (a.hypot(b) - 1.0).max(0.0);
                    acc + excess * excess
                })
                .sqrt(),
        }
    }
}

/// Convenience wrapper for [`ConstraintSet::project`].
pub fn project_constraint(x: &ComplexField, set: ConstraintSet) -> ComplexField {
    set.project(x)
}

impl FromStr for ConstraintSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(ConstraintSet::FullSpace),
            "unit-disk" => Ok(ConstraintSet::UnitDisk),
            other => Err(Error::invalid(format!("unknown constraint `{other}`"))),
        }
    }
}

impl fmt::Display for ConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
