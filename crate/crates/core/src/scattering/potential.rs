use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{IstError, Result};
use crate::numerics::{weighted_norm, NormKind, SampledField, UniformGrid};

/// Sign of the nonlinearity. Serialized as the integer `1` or `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i32", into = "i32")]
pub enum Sigma {
    Plus,
    Minus,
}

impl Sigma {
    pub fn value(self) -> f64 {
        match self {
            Sigma::Plus => 1.0,
            Sigma::Minus => -1.0,
        }
    }
}

impl TryFrom<i32> for Sigma {
    type Error = IstError;
    fn try_from(v: i32) -> Result<Self> {
        match v {
            1 => Ok(Sigma::Plus),
            -1 => Ok(Sigma::Minus),
            other => Err(IstError::Configuration(format!(
                "sigma must be +1 or -1, got {other}"
            ))),
        }
    }
}

impl From<Sigma> for i32 {
    fn from(s: Sigma) -> i32 {
        match s {
            Sigma::Plus => 1,
            Sigma::Minus => -1,
        }
    }
}

impl fmt::Display for Sigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+}", i32::from(*self))
    }
}

/// Threshold on `‖q‖₁` below which resonances are excluded and `|r| < 1` is guaranteed.
pub const SMALL_NORM_THRESHOLD: f64 = 1.0 / 6.0;
/// Threshold on `‖q‖₁` for existence of the Jost solutions by contraction.
pub const JOST_NORM_THRESHOLD: f64 = 1.0;
/// Largest admissible `|q|` at either end of the x-grid.
pub const DECAY_TOLERANCE: f64 = 1e-8;

/// Samples of `q(x)` together with the sign `σ` and the derived L¹ norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialRepr", into = "PotentialRepr")]
pub struct Potential {
    field: SampledField,
    sigma: Sigma,
    l1_norm: f64,
}

#[derive(Serialize, Deserialize)]
struct PotentialRepr {
    #[serde(flatten)]
    field: SampledField,
    sigma: Sigma,
    #[serde(default)]
    l1_norm: Option<f64>,
    #[serde(default)]
    small_norm: Option<bool>,
}

impl TryFrom<PotentialRepr> for Potential {
    type Error = IstError;
    fn try_from(r: PotentialRepr) -> Result<Self> {
        Potential::new(r.field, r.sigma)
    }
}

impl From<Potential> for PotentialRepr {
    fn from(p: Potential) -> Self {
        let small = p.small_norm();
        PotentialRepr {
            field: p.field,
            sigma: p.sigma,
            l1_norm: Some(p.l1_norm),
            small_norm: Some(small),
        }
    }
}

impl Potential {
    pub fn new(field: SampledField, sigma: Sigma) -> Result<Self> {
        let l1_norm = weighted_norm(&field, NormKind::L1)?;
        Ok(Self {
            field,
            sigma,
            l1_norm,
        })
    }

    pub fn from_fn(grid: UniformGrid, sigma: Sigma, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::new(SampledField::from_fn(grid, f)?, sigma)
    }

    pub fn zero(grid: UniformGrid, sigma: Sigma) -> Self {
        Self {
            field: SampledField::zeros(grid),
            sigma,
            l1_norm: 0.0,
        }
    }

    /// `amplitude · e^{-(x - center)²}`.
    pub fn gaussian(grid: UniformGrid, sigma: Sigma, amplitude: f64, center: f64) -> Result<Self> {
        Self::from_fn(grid, sigma, |x| {
            Complex64::new(amplitude * (-(x - center) * (x - center)).exp(), 0.0)
        })
    }

    /// `amplitude · 1_[left, right]`, taking the half value at nodes that sit on a jump.
    pub fn boxcar(grid: UniformGrid, sigma: Sigma, amplitude: f64, left: f64, right: f64) -> Result<Self> {
        let eps = 1e-9 * grid.spacing();
        Self::from_fn(grid, sigma, |x| {
            let v = if (x - left).abs() <= eps || (x - right).abs() <= eps {
                0.5 * amplitude
            } else if x > left && x < right {
                amplitude
            } else {
                0.0
            };
            Complex64::new(v, 0.0)
        })
    }

    pub fn field(&self) -> &SampledField {
        &self.field
    }

    pub fn grid(&self) -> &UniformGrid {
        self.field.grid()
    }

    pub fn values(&self) -> &[Complex64] {
        self.field.values()
    }

    pub fn sigma(&self) -> Sigma {
        self.sigma
    }

    pub fn l1_norm(&self) -> f64 {
        self.l1_norm
    }

    pub fn small_norm(&self) -> bool {
        self.l1_norm < SMALL_NORM_THRESHOLD
    }

    pub fn endpoint_magnitude(&self) -> f64 {
        let v = self.values();
        v[0].norm().max(v[v.len() - 1].norm())
    }

    pub fn decays(&self) -> bool {
        self.endpoint_magnitude() <= DECAY_TOLERANCE
    }

    pub fn require_decay(&self) -> Result<()> {
        if self.decays() {
            Ok(())
        } else {
            Err(IstError::RejectedInput(format!(
                "potential does not decay: |q| = {:e} at the grid ends exceeds {DECAY_TOLERANCE:e}",
                self.endpoint_magnitude()
            )))
        }
    }

    /// Samples of `conj(q(-x))`, obtained by index reflection on a symmetric grid.
    pub fn reflected_conj(&self) -> Result<Vec<Complex64>> {
        self.grid().require_symmetric("the reflection x -> -x")?;
        Ok(self.values().iter().rev().map(|v| v.conj()).collect())
    }

    pub fn with_values(&self, values: Vec<Complex64>) -> Result<Self> {
        Self::new(SampledField::new(*self.grid(), values)?, self.sigma)
    }
}
