//! Complex images stored as a pair of real matrices, and the finite-difference
//! operator that maps an image onto its vertical/horizontal differences.

use ndarray::{s, Array2, Zip};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// A complex `m × n` image held as its real part `u` and imaginary part `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    u: Array2<f64>,
    v: Array2<f64>,
}

impl ComplexField {
    /// Builds a field from its real and imaginary parts.
    ///
    /// Both parts must share a non-empty shape and contain only finite values.
    pub fn new(u: Array2<f64>, v: Array2<f64>) -> Result<Self> {
        if u.dim() != v.dim() {
            return Err(Error::ShapeMismatch {
                expected: u.dim(),
                found: v.dim(),
            });
        }
        if u.nrows() == 0 || u.ncols() == 0 {
            return Err(Error::EmptyField);
        }
        if !u.iter().chain(v.iter()).all(|x| x.is_finite()) {
            return Err(Error::NonFinite("complex field"));
        }
        Ok(Self { u, v })
    }

    pub(crate) fn from_parts(u: Array2<f64>, v: Array2<f64>) -> Self {
        debug_assert_eq!(u.dim(), v.dim());
        Self { u, v }
    }

    pub(crate) fn from_complex_unchecked(z: Array2<Complex64>) -> Self {
        Self::from_parts(z.mapv(|c| c.re), z.mapv(|c| c.im))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "field dimensions must be positive");
        Self::from_parts(Array2::zeros((rows, cols)), Array2::zeros((rows, cols)))
    }

    /// Constant field with value `re + i·im` everywhere.
    pub fn constant(rows: usize, cols: usize, re: f64, im: f64) -> Self {
        assert!(rows > 0 && cols > 0, "field dimensions must be positive");
        Self::from_parts(
            Array2::from_elem((rows, cols), re),
            Array2::from_elem((rows, cols), im),
        )
    }

    pub fn from_complex(z: &Array2<Complex64>) -> Result<Self> {
        Self::new(z.mapv(|c| c.re), z.mapv(|c| c.im))
    }

    /// Field with the given modulus and argument at each pixel.
    pub fn from_polar(modulus: &Array2<f64>, phase: &Array2<f64>) -> Result<Self> {
        if modulus.dim() != phase.dim() {
            return Err(Error::ShapeMismatch {
                expected: modulus.dim(),
                found: phase.dim(),
            });
        }
        let u = Zip::from(modulus).and(phase).map_collect(|&r, &p| r * p.cos());
        let v = Zip::from(modulus).and(phase).map_collect(|&r, &p| r * p.sin());
        Self::new(u, v)
    }

    /// Unit-modulus field `exp(i·phase)`.
    pub fn unit_phase(phase: &Array2<f64>) -> Result<Self> {
        Self::from_polar(&Array2::ones(phase.dim()), phase)
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut Array2<f64>, &mut Array2<f64>) {
        (&mut self.u, &mut self.v)
    }

    pub fn u(&self) -> &Array2<f64> {
        &self.u
    }

    pub fn v(&self) -> &Array2<f64> {
        &self.v
    }

    pub fn into_parts(self) -> (Array2<f64>, Array2<f64>) {
        (self.u, self.v)
    }

    pub fn dim(&self) -> (usize, usize) {
        self.u.dim()
    }

    pub fn rows(&self) -> usize {
        self.u.nrows()
    }

    pub fn cols(&self) -> usize {
        self.u.ncols()
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        Complex64::new(self.u[[row, col]], self.v[[row, col]])
    }

    pub fn to_complex(&self) -> Array2<Complex64> {
        Zip::from(&self.u)
            .and(&self.v)
            .map_collect(|&re, &im| Complex64::new(re, im))
    }

    pub fn modulus(&self) -> Array2<f64> {
        Zip::from(&self.u).and(&self.v).map_collect(|&re, &im| re.hypot(im))
    }

    /// Argument in `[-π, π]` as returned by `atan2`.
    pub fn phase(&self) -> Array2<f64> {
        Zip::from(&self.u).and(&self.v).map_collect(|&re, &im| im.atan2(re))
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(self.v.iter()).all(|x| x.is_finite())
    }

    /// Real inner product `⟨u, u'⟩ + ⟨v, v'⟩`.
    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "field shapes differ");
        dot(&self.u, &other.u) + dot(&self.v, &other.v)
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    /// Frobenius norm of the matrix pair.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_parts(&self.u * c, &self.v * c)
    }

    /// Returns `self + c·other`.
    pub fn add_scaled(&self, c: f64, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "field shapes differ");
        Self::from_parts(&self.u + &(&other.u * c), &self.v + &(&other.v * c))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(-1.0, other)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.add_scaled(1.0, other)
    }

    /// Multiplies every pixel by `exp(i·angle)`.
    pub fn rotate(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let u = Zip::from(&self.u).and(&self.v).map_collect(|&a, &b| c * a - s * b);
        let v = Zip::from(&self.u).and(&self.v).map_collect(|&a, &b| s * a + c * b);
        Self::from_parts(u, v)
    }

    /// Distance `‖self − other‖_F`.
    pub fn distance(&self, other: &Self) -> f64 {
        self.sub(other).norm()
    }
}

/// Vertical and horizontal finite differences of a complex image.
///
/// `u1`/`v1` are the `(m−1) × n` vertical differences of the real and
/// imaginary parts, `u2`/`v2` the `m × (n−1)` horizontal ones. The same
/// layout carries the dual variable of the TV denoising problem, where the
/// real-part blocks play the role of `r⁽¹⁾, r⁽²⁾` and the imaginary-part
/// blocks that of `s⁽¹⁾, s⁽²⁾`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffField {
    pub u1: Array2<f64>,
    pub u2: Array2<f64>,
    pub v1: Array2<f64>,
    pub v2: Array2<f64>,
}

/// Dual variable of the denoising problem; shares the difference-field layout.
pub type DualField = DiffField;

impl DiffField {
    /// Checks that the four blocks describe a single `m × n` source image.
    pub fn new(u1: Array2<f64>, u2: Array2<f64>, v1: Array2<f64>, v2: Array2<f64>) -> Result<Self> {
        let field = Self { u1, u2, v1, v2 };
        let (m, n) = field.source_dim();
        let expect_vertical = (m.saturating_sub(1), n);
        let expect_horizontal = (m, n.saturating_sub(1));
        for (block, expected) in [
            (&field.u1, expect_vertical),
            (&field.v1, expect_vertical),
            (&field.u2, expect_horizontal),
            (&field.v2, expect_horizontal),
        ] {
            if block.dim() != expected {
                return Err(Error::ShapeMismatch {
                    expected,
                    found: block.dim(),
                });
            }
        }
        if m == 0 || n == 0 {
            return Err(Error::EmptyField);
        }
        Ok(field)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        let vert = (rows.saturating_sub(1), cols);
        let horiz = (rows, cols.saturating_sub(1));
        Self {
            u1: Array2::zeros(vert),
            u2: Array2::zeros(horiz),
            v1: Array2::zeros(vert),
            v2: Array2::zeros(horiz),
        }
    }

    /// Dimensions `(m, n)` of the image these differences belong to.
    pub fn source_dim(&self) -> (usize, usize) {
        (self.u2.nrows(), self.u1.ncols())
    }

    pub fn blocks(&self) -> [&Array2<f64>; 4] {
        [&self.u1, &self.u2, &self.v1, &self.v2]
    }

    /// Applies `f` to every entry of every block.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            u1: self.u1.mapv(&f),
            u2: self.u2.mapv(&f),
            v1: self.v1.mapv(&f),
            v2: self.v2.mapv(&f),
        }
    }

    /// Blockwise `f(self, other)`.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.source_dim(), other.source_dim(), "difference-field shapes differ");
        let zip = |a: &Array2<f64>, b: &Array2<f64>| Zip::from(a).and(b).map_collect(|&x, &y| f(x, y));
        Self {
            u1: zip(&self.u1, &other.u1),
            u2: zip(&self.u2, &other.u2),
            v1: zip(&self.v1, &other.v1),
            v2: zip(&self.v2, &other.v2),
        }
    }

    /// Sum of elementwise products over all four blocks.
    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.source_dim(), other.source_dim(), "difference-field shapes differ");
        dot(&self.u1, &other.u1) + dot(&self.u2, &other.u2) + dot(&self.v1, &other.v1) + dot(&self.v2, &other.v2)
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Returns `self + c·other`.
    pub fn add_scaled(&self, c: f64, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + c * b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|x| x.is_finite()))
    }
}

fn dot(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    Zip::from(a).and(b).fold(0.0, |acc, &x, &y| acc + x * y)
}

fn vertical_diff_into(a: &Array2<f64>, out: &mut Array2<f64>) {
    let m = a.nrows();
    if m < 2 {
        return;
    }
    Zip::from(out)
        .and(a.slice(s![..m - 1, ..]))
        .and(a.slice(s![1.., ..]))
        .for_each(|o, &x, &y| *o = x - y);
}

fn horizontal_diff_into(a: &Array2<f64>, out: &mut Array2<f64>) {
    let n = a.ncols();
    if n < 2 {
        return;
    }
    Zip::from(out)
        .and(a.slice(s![.., ..n - 1]))
        .and(a.slice(s![.., 1..]))
        .for_each(|o, &x, &y| *o = x - y);
}

/// Adjoint of the pair (vertical, horizontal) difference for one real channel.
fn diff_adjoint_into(d1: &Array2<f64>, d2: &Array2<f64>, out: &mut Array2<f64>) {
    out.fill(0.0);
    for ((j, k), &val) in d1.indexed_iter() {
        out[[j, k]] += val;
        out[[j + 1, k]] -= val;
    }
    for ((j, k), &val) in d2.indexed_iter() {
        out[[j, k]] += val;
        out[[j, k + 1]] -= val;
    }
}

pub(crate) fn forward_diff_into(x: &ComplexField, p: &mut DiffField) {
    debug_assert_eq!(p.source_dim(), x.dim());
    vertical_diff_into(&x.u, &mut p.u1);
    horizontal_diff_into(&x.u, &mut p.u2);
    vertical_diff_into(&x.v, &mut p.v1);
    horizontal_diff_into(&x.v, &mut p.v2);
}

pub(crate) fn adjoint_diff_into(q: &DualField, x: &mut ComplexField) {
    debug_assert_eq!(q.source_dim(), x.dim());
    diff_adjoint_into(&q.u1, &q.u2, &mut x.u);
    diff_adjoint_into(&q.v1, &q.v2, &mut x.v);
}

/// The linear map `L`: `u1[j,k] = u[j,k] − u[j+1,k]`, `u2[j,k] = u[j,k] − u[j,k+1]`,
/// and likewise for `v`.
pub fn forward_diff(x: &ComplexField) -> DiffField {
    let (m, n) = x.dim();
    let mut p = DiffField::zeros(m, n);
    forward_diff_into(x, &mut p);
    p
}

/// The adjoint `Lᵀ` of [`forward_diff`] (a negative divergence with zero
/// boundary terms).
pub fn adjoint_diff(q: &DualField) -> ComplexField {
    let (m, n) = q.source_dim();
    let mut x = ComplexField::zeros(m, n);
    adjoint_diff_into(q, &mut x);
    x
}
