use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{IstError, Result};

/// Closed uniform grid on `[lo, hi]` with `n` samples including both endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct UniformGrid {
    lo: f64,
    hi: f64,
    n: usize,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    lo: f64,
    hi: f64,
    n: usize,
}

impl TryFrom<GridRepr> for UniformGrid {
    type Error = IstError;
    fn try_from(r: GridRepr) -> Result<Self> {
        UniformGrid::new(r.lo, r.hi, r.n)
    }
}

impl From<UniformGrid> for GridRepr {
    fn from(g: UniformGrid) -> Self {
        GridRepr {
            lo: g.lo,
            hi: g.hi,
            n: g.n,
        }
    }
}

pub const MIN_SAMPLES: usize = 16;

impl UniformGrid {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(IstError::InvalidGrid(format!(
                "non-finite bounds [{lo}, {hi}]"
            )));
        }
        if lo >= hi {
            return Err(IstError::InvalidGrid(format!("lo = {lo} must be below hi = {hi}")));
        }
        if n < MIN_SAMPLES {
            return Err(IstError::InvalidGrid(format!(
                "n = {n} is below the minimum of {MIN_SAMPLES} samples"
            )));
        }
        Ok(Self { lo, hi, n })
    }

    /// Grid on `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    /// Node `i`. Computed about the midpoint so that nodes of a symmetric grid
    /// are exact negatives of their mirror images.
    pub fn node(&self, i: usize) -> f64 {
        let mid = 0.5 * (self.lo + self.hi);
        let half = 0.5 * (self.hi - self.lo);
        let m = (self.n - 1) as f64;
        mid + half * ((2 * i) as f64 - m) / m
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (self.lo + self.hi).abs() <= 1e-12 * self.hi.abs().max(self.lo.abs())
    }

    /// Index of the node at `-x_i` on a symmetric grid.
    pub fn mirror(&self, i: usize) -> usize {
        self.n - 1 - i
    }

    pub fn require_symmetric(&self, what: &str) -> Result<()> {
        if self.is_symmetric() {
            Ok(())
        } else {
            Err(IstError::RejectedInput(format!(
                "{what} requires a grid symmetric about 0, got [{}, {}]",
                self.lo, self.hi
            )))
        }
    }

    pub fn is_power_of_two(&self) -> bool {
        self.n.is_power_of_two()
    }

    /// Index of the node closest to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        let t = ((x - self.lo) / self.spacing()).round();
        t.clamp(0.0, (self.n - 1) as f64) as usize
    }

    /// Largest |node|.
    pub fn max_abs(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn same_as(&self, other: &UniformGrid) -> bool {
        self.n == other.n
            && (self.lo - other.lo).abs() <= 1e-12 * self.lo.abs().max(1.0)
            && (self.hi - other.hi).abs() <= 1e-12 * self.hi.abs().max(1.0)
    }

    /// Grid over the same interval with `2n - 1` nodes (every old node is kept).
    pub fn refined(&self) -> UniformGrid {
        UniformGrid {
            lo: self.lo,
            hi: self.hi,
            n: 2 * self.n - 1,
        }
    }
}

/// Complex samples over a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    grid: UniformGrid,
    values: Vec<Complex64>,
}

impl SampledField {
    pub fn new(grid: UniformGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(IstError::RejectedInput(format!(
                "{} samples for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(IstError::RejectedInput(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: UniformGrid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_fn(grid: UniformGrid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.node(i))).collect();
        Self::new(grid, values)
    }

    pub fn from_real_fn(grid: UniformGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Pointwise difference; the grids must agree.
    pub fn sub(&self, other: &SampledField) -> Result<Self> {
        if !self.grid.same_as(&other.grid) {
            return Err(IstError::GridMismatch("field difference".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self {
            grid: self.grid,
            values,
        })
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.values)
    }
}

pub(crate) fn max_abs(values: &[Complex64]) -> f64 {
    values.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Composite trapezoid rule with spacing `h`.
pub fn trapezoid(values: &[Complex64], h: f64) -> Complex64 {
    match values.len() {
        0 | 1 => Complex64::new(0.0, 0.0),
        n => {
            let inner: Complex64 = values.iter().sum();
            (inner - 0.5 * (values[0] + values[n - 1])) * h
        }
    }
}

pub fn trapezoid_real(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1])) * h,
    }
}

/// Trapezoid approximation of the integral of the field over `[lo, hi]`.
pub fn trapezoid_integrate(field: &SampledField) -> Complex64 {
    trapezoid(field.values(), field.grid().spacing())
}

/// Running trapezoid integral from the left end: `out[i] = ∫_{lo}^{x_i}`.
pub fn cumulative_from_left(values: &[Complex64], h: f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = Complex64::new(0.0, 0.0);
    out.push(acc);
    for w in values.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Running trapezoid integral from the right end: `out[i] = ∫_{hi}^{x_i} = -∫_{x_i}^{hi}`.
pub fn cumulative_from_right(values: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = values.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let mut acc = Complex64::new(0.0, 0.0);
    for i in (0..n.saturating_sub(1)).rev() {
        acc -= 0.5 * h * (values[i] + values[i + 1]);
        out[i] = acc;
    }
    out
}

/// JSON form: `{ "lo", "hi", "n", "values": [[re, im], ...] }`.
#[derive(Serialize, Deserialize)]
pub(crate) struct FieldRepr {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub values: Vec<[f64; 2]>,
}

impl From<&SampledField> for FieldRepr {
    fn from(f: &SampledField) -> Self {
        FieldRepr {
            lo: f.grid.lo,
            hi: f.grid.hi,
            n: f.grid.n,
            values: f.values.iter().map(|v| [v.re, v.im]).collect(),
        }
    }
}

impl TryFrom<FieldRepr> for SampledField {
    type Error = IstError;
    fn try_from(r: FieldRepr) -> Result<Self> {
        let grid = UniformGrid::new(r.lo, r.hi, r.n)?;
        let values = r
            .values
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect();
        SampledField::new(grid, values)
    }
}

impl Serialize for SampledField {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FieldRepr::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for SampledField {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = FieldRepr::deserialize(d)?;
        SampledField::try_from(repr).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn complex_pairs(values: &[Complex64]) -> Vec<[f64; 2]> {
    values.iter().map(|v| [v.re, v.im]).collect()
}

pub(crate) fn from_pairs(pairs: &[[f64; 2]]) -> Vec<Complex64> {
    pairs.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
}
