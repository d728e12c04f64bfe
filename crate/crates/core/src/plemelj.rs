//! Discrete Cauchy operator and Plemelj projections on a uniform k-grid.
//!
//! The projections are realized as `P± = ½(±I + iH)` where `H` is the lattice Hilbert transform
//! `(Hf)_i = Σ_j (2/π(i−j)) f_j` over odd `i − j`. Seen from the whole line this is a Fourier
//! multiplier with symbol `1_{θ>0} + ½·1_{θ=0}` (resp. `1_{θ<0} + ½·1_{θ=0}`), so `P⁺ − P⁻ = I`
//! holds exactly and `P±` are Hermitian contractions. The Toeplitz product is applied with a
//! circulant embedding of length `2n`, which makes every application `O(n log n)`.
//!
//! Truncating the k-line to `[lo, hi]` drops the `1/k` tails of slowly decaying inputs. The
//! tail-corrected variants remove the best fit by `α/(k+i) + β/(k−i)` through the two end
//! samples first and project that part exactly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{IstError, Result};
use crate::numerics::{trapezoid, Direction, FftPair, SampledField, UniformGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

/// Symbol of one projection on the whole-line lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfLineMultiplier {
    pub side: Side,
    pub zero_mode_weight: f64,
}

impl HalfLineMultiplier {
    pub fn new(side: Side) -> Self {
        Self {
            side,
            zero_mode_weight: 0.5,
        }
    }

    /// Multiplier at angular frequency `theta ∈ (−π, π]`, signed so that `P⁺ − P⁻` has symbol 1.
    pub fn symbol(&self, theta: f64) -> f64 {
        let half = match self.side {
            Side::Plus => theta > 0.0,
            Side::Minus => theta < 0.0,
        };
        let m = if theta == 0.0 {
            self.zero_mode_weight
        } else if half {
            1.0
        } else {
            0.0
        };
        self.side.sign() * m
    }
}

/// Cached transform plan and kernel for one grid length.
#[derive(Clone)]
pub struct Plemelj {
    n: usize,
    fft: FftPair,
    kernel_hat: Vec<Complex64>,
}

impl Plemelj {
    pub fn new(n: usize) -> Result<Self> {
        if !n.is_power_of_two() {
            return Err(IstError::UnsupportedSize(n));
        }
        let m = 2 * n;
        let fft = FftPair::new(m);
        let kern = |j: i64| -> f64 {
            if j % 2 == 0 {
                0.0
            } else {
                2.0 / (std::f64::consts::PI * j as f64)
            }
        };
        let mut c = vec![Complex64::new(0.0, 0.0); m];
        for j in 1..n {
            c[j] = Complex64::new(kern(j as i64), 0.0);
            c[m - j] = Complex64::new(kern(-(j as i64)), 0.0);
        }
        fft.raw(&mut c, Direction::Forward);
        // fold the 1/m normalization of the inverse into the kernel
        let scale = 1.0 / m as f64;
        c.iter_mut().for_each(|v| *v *= scale);
        Ok(Self {
            n,
            fft,
            kernel_hat: c,
        })
    }

    pub fn for_grid(grid: &UniformGrid) -> Result<Self> {
        Self::new(grid.len())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn check_len(&self, f: &[Complex64]) -> Result<()> {
        if f.len() == self.n {
            Ok(())
        } else {
            Err(IstError::GridMismatch(format!(
                "projection planned for {} samples, got {}",
                self.n,
                f.len()
            )))
        }
    }

    /// Lattice Hilbert transform.
    pub fn hilbert(&self, f: &[Complex64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * self.n];
        buf[..f.len()].copy_from_slice(f);
        self.fft.raw(&mut buf, Direction::Forward);
        buf.iter_mut().zip(&self.kernel_hat).for_each(|(b, k)| *b *= k);
        self.fft.raw(&mut buf, Direction::Inverse);
        buf.truncate(self.n);
        buf
    }

    /// `P±f` on the lattice.
    pub fn apply(&self, f: &[Complex64], side: Side) -> Vec<Complex64> {
        let s = side.sign();
        let h = self.hilbert(f);
        f.iter()
            .zip(h)
            .map(|(fv, hv)| 0.5 * (s * fv + Complex64::i() * hv))
            .collect()
    }

    /// `(P⁺f, P⁻f)` from a single Hilbert transform.
    pub fn apply_both(&self, f: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let h = self.hilbert(f);
        let plus = f.iter().zip(&h).map(|(fv, hv)| 0.5 * (fv + Complex64::i() * hv)).collect();
        let minus = f.iter().zip(&h).map(|(fv, hv)| 0.5 * (-fv + Complex64::i() * hv)).collect();
        (plus, minus)
    }

    /// `P±f` with the rational tails fitted at the grid ends projected exactly.
    pub fn apply_tail_corrected(&self, f: &[Complex64], grid: &UniformGrid, side: Side) -> Result<Vec<Complex64>> {
        self.check_len(f)?;
        let fit = TailFit::new(f, grid)?;
        let g: Vec<Complex64> = (0..f.len()).map(|i| f[i] - fit.eval(grid.node(i))).collect();
        let mut out = self.apply(&g, side);
        for (i, v) in out.iter_mut().enumerate() {
            *v += fit.projected(grid.node(i), side);
        }
        Ok(out)
    }
}

/// `f ≈ α/(k+i) + β/(k−i)` through the two end samples.
#[derive(Debug, Clone, Copy)]
struct TailFit {
    alpha: Complex64,
    beta: Complex64,
}

impl TailFit {
    fn new(f: &[Complex64], grid: &UniformGrid) -> Result<Self> {
        let i = Complex64::i();
        let (lo, hi) = (grid.lo(), grid.hi());
        let (u1, v1) = (1.0 / (lo + i), 1.0 / (lo - i));
        let (u2, v2) = (1.0 / (hi + i), 1.0 / (hi - i));
        let det = u1 * v2 - u2 * v1;
        if det.norm() < 1e-300 {
            return Err(IstError::DivisionHazard("degenerate tail fit".into()));
        }
        let (f1, f2) = (f[0], f[f.len() - 1]);
        Ok(Self {
            alpha: (f1 * v2 - f2 * v1) / det,
            beta: (u1 * f2 - u2 * f1) / det,
        })
    }

    fn eval(&self, k: f64) -> Complex64 {
        let i = Complex64::i();
        self.alpha / (k + i) + self.beta / (k - i)
    }

    fn projected(&self, k: f64, side: Side) -> Complex64 {
        let i = Complex64::i();
        match side {
            Side::Plus => self.alpha / (k + i),
            Side::Minus => -self.beta / (k - i),
        }
    }

    /// Exact Cauchy transform of the fitted part off the axis.
    fn cauchy(&self, z: Complex64) -> Complex64 {
        let i = Complex64::i();
        if z.im > 0.0 {
            self.alpha / (z + i)
        } else {
            -self.beta / (z - i)
        }
    }
}

fn check_field(field: &SampledField) -> Result<()> {
    let g = field.grid();
    if !g.is_power_of_two() {
        return Err(IstError::UnsupportedSize(g.len()));
    }
    g.require_symmetric("the Plemelj projection")
}

/// Lattice Plemelj projection of a decaying field.
pub fn plemelj(field: &SampledField, side: Side) -> Result<SampledField> {
    check_field(field)?;
    let p = Plemelj::for_grid(field.grid())?;
    SampledField::new(*field.grid(), p.apply(field.values(), side))
}

/// Plemelj projection for fields with algebraic `1/k` tails.
pub fn plemelj_tail_corrected(field: &SampledField, side: Side) -> Result<SampledField> {
    check_field(field)?;
    let p = Plemelj::for_grid(field.grid())?;
    SampledField::new(
        *field.grid(),
        p.apply_tail_corrected(field.values(), field.grid(), side)?,
    )
}

/// Smallest admissible `|Im z|` for off-axis evaluation.
pub const NEAR_AXIS: f64 = 1e-8;

/// `C(h)(z) = (1/2πi) ∫ h(s)/(s − z) ds` for `z` off the real axis.
///
/// The end-fitted rational part is transformed exactly and the remainder by trapezoid.
pub fn cauchy_offaxis(field: &SampledField, z: Complex64) -> Result<Complex64> {
    if !(z.im.abs() >= NEAR_AXIS) {
        return Err(IstError::NearAxis(z.im.abs()));
    }
    let grid = field.grid();
    let f = field.values();
    let fit = TailFit::new(f, grid)?;
    let integrand: Vec<Complex64> = (0..f.len())
        .map(|i| {
            let s = grid.node(i);
            (f[i] - fit.eval(s)) / (s - z)
        })
        .collect();
    let two_pi_i = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
    Ok(trapezoid(&integrand, grid.spacing()) / two_pi_i + fit.cauchy(z))
}

/// `max(‖P⁺f‖₂, ‖P⁻f‖₂)/‖f‖₂` for the lattice projections.
pub fn operator_norm_check(field: &SampledField) -> Result<f64> {
    check_field(field)?;
    let nf = l2(field.values());
    if nf == 0.0 {
        return Err(IstError::UndefinedRatio("zero field has no norm ratio".into()));
    }
    let p = Plemelj::for_grid(field.grid())?;
    let (plus, minus) = p.apply_both(field.values());
    Ok(l2(&plus).max(l2(&minus)) / nf)
}

fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn kgrid() -> UniformGrid {
        UniformGrid::symmetric(24.0, 1024).unwrap()
    }

    fn field(g: UniformGrid, f: impl Fn(f64) -> Complex64) -> SampledField {
        SampledField::from_fn(g, f).unwrap()
    }

    fn sup_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    fn random(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn multiplier_sums_to_identity() {
        let p = HalfLineMultiplier::new(Side::Plus);
        let m = HalfLineMultiplier::new(Side::Minus);
        for theta in [-2.0, -1e-9, 0.0, 1e-9, 3.0] {
            assert_eq!(p.symbol(theta) - m.symbol(theta), 1.0);
        }
    }

    #[test]
    fn difference_is_identity_exactly() {
        let p = Plemelj::new(256).unwrap();
        let f = random(256, 3);
        let (plus, minus) = p.apply_both(&f);
        for i in 0..256 {
            assert!((plus[i] - minus[i] - f[i]).norm() < 1e-15);
        }
    }

    #[test]
    fn gaussian_matches_faddeeva_closed_form() {
        // P⁺ e^{-k²} = w(k)/2; at k = 0, w(0) = 1, and Im w(k) = (2/√π) D(k) with Dawson's D
        let g = UniformGrid::symmetric(12.0, 1024).unwrap();
        let f = field(g, |k| Complex64::new((-k * k).exp(), 0.0));
        let plus = plemelj(&f, Side::Plus).unwrap();
        let i0 = g.len() / 2;
        let k0 = g.node(i0);
        // w(k) = e^{-k²} + (2i/√π) D(k), D(k) ≈ k for small k
        let expect = 0.5 * Complex64::new((-k0 * k0).exp(), 2.0 / std::f64::consts::PI.sqrt() * k0 * (1.0 - 2.0 * k0 * k0 / 3.0));
        assert!((plus.values()[i0] - expect).norm() < 1e-8);
    }

    #[test]
    fn hardy_poles_with_tail_correction() {
        let g = kgrid();
        let up = field(g, |k| 1.0 / Complex64::new(k, 1.0));
        let down = field(g, |k| 1.0 / Complex64::new(k, -1.0));
        let pu = plemelj_tail_corrected(&up, Side::Plus).unwrap();
        let mu = plemelj_tail_corrected(&up, Side::Minus).unwrap();
        assert!(sup_diff(pu.values(), up.values()) < 1e-6);
        assert!(mu.max_abs() < 1e-6);
        let pd = plemelj_tail_corrected(&down, Side::Plus).unwrap();
        let md = plemelj_tail_corrected(&down, Side::Minus).unwrap();
        assert!(pd.max_abs() < 1e-6);
        assert!(sup_diff(md.values(), down.scaled(Complex64::new(-1.0, 0.0)).values()) < 1e-6);
    }

    #[test]
    fn lorentzian_half_at_origin() {
        let g = kgrid();
        let f = field(g, |k| Complex64::new(1.0 / (k * k + 1.0), 0.0));
        let plus = plemelj_tail_corrected(&f, Side::Plus).unwrap();
        // exact P⁺f = (1 + ik)/(2(k² + 1)); no node sits at 0, average the two central nodes
        for (i, v) in plus.values().iter().enumerate() {
            let k = g.node(i);
            let exact = Complex64::new(1.0, k) / (2.0 * (k * k + 1.0));
            assert!((v - exact).norm() < 1e-12);
        }
        let n = g.len();
        let mid = 0.5 * (plus.values()[n / 2 - 1] + plus.values()[n / 2]);
        let k = g.node(n / 2);
        assert!((mid.re - 0.5 / (k * k + 1.0)).abs() < 1e-12);
        assert!((mid.re - 0.5).abs() < 1e-3);
    }

    #[test]
    fn cauchy_examples() {
        let g = kgrid();
        let zero = SampledField::zeros(g);
        assert_eq!(cauchy_offaxis(&zero, Complex64::new(0.3, 1.0)).unwrap(), Complex64::new(0.0, 0.0));
        let up = field(g, |k| 1.0 / Complex64::new(k, 1.0));
        let v = cauchy_offaxis(&up, Complex64::new(0.0, 2.0)).unwrap();
        assert!((v - Complex64::new(0.0, -1.0 / 3.0)).norm() < 1e-6);
        assert!(matches!(
            cauchy_offaxis(&up, Complex64::new(1.0, 1e-9)),
            Err(IstError::NearAxis(_))
        ));
    }

    #[test]
    fn lorentzian_asymptotic_approaches_i_over_two() {
        let g = kgrid();
        let f = field(g, |k| Complex64::new(1.0 / (k * k + 1.0), 0.0));
        let at = |t: f64| {
            let z = Complex64::new(0.0, t);
            z * cauchy_offaxis(&f, z).unwrap()
        };
        let limit = Complex64::new(0.0, 0.5);
        let (d50, d100) = ((at(50.0) - limit).norm(), (at(100.0) - limit).norm());
        assert!(d100 < d50);
        // exact value (i/2)·T/(T+1)
        assert!((at(100.0) - limit * (100.0 / 101.0)).norm() < 1e-12);
        let richardson = 2.0 * at(100.0) - at(50.0);
        assert!((richardson - limit).norm() < 1e-3);
    }

    #[test]
    fn offaxis_converges_to_boundary_values() {
        let g = UniformGrid::symmetric(8.0, 16384).unwrap();
        let f = field(g, |k| Complex64::new((-k * k).exp(), 0.0));
        let plus = plemelj(&f, Side::Plus).unwrap();
        let i = g.nearest(0.7);
        let k = g.node(i);
        let err = |eps: f64| (cauchy_offaxis(&f, Complex64::new(k, eps)).unwrap() - plus.values()[i]).norm();
        let (e1, e2) = (err(1e-1), err(1e-2));
        assert!(e2 < e1, "{e1} {e2}");
    }

    #[test]
    fn norm_ratio_contract() {
        let g = kgrid();
        let f = SampledField::new(g, random(g.len(), 11)).unwrap();
        assert!(operator_norm_check(&f).unwrap() <= 1.0 + 1e-10);
        assert!(matches!(
            operator_norm_check(&SampledField::zeros(g)),
            Err(IstError::UndefinedRatio(_))
        ));
        let up = field(g, |k| Complex64::new((-k * k).exp(), 0.0) / Complex64::new(k, 1.0).powi(2));
        let pu = plemelj(&up, Side::Plus).unwrap();
        let ratio = operator_norm_check(&pu).unwrap();
        assert!(ratio <= 1.0 + 1e-10);
    }

    #[test]
    fn energy_split_identity() {
        // ‖P⁺f‖² + ‖P⁻f‖² = ½(‖f‖² + ‖Hf‖²); the Hilbert part is not an isometry after truncation
        let p = Plemelj::new(512).unwrap();
        let f = random(512, 5);
        let (plus, minus) = p.apply_both(&f);
        let h = p.hilbert(&f);
        let lhs = l2(&plus).powi(2) + l2(&minus).powi(2);
        let rhs = 0.5 * (l2(&f).powi(2) + l2(&h).powi(2));
        assert!((lhs - rhs).abs() < 1e-10 * rhs);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(Plemelj::new(1000), Err(IstError::UnsupportedSize(1000))));
        let g = UniformGrid::symmetric(2.0, 48).unwrap();
        assert!(matches!(
            plemelj(&SampledField::zeros(g), Side::Plus),
            Err(IstError::UnsupportedSize(48))
        ));
    }

    proptest! {
        #[test]
        fn non_expansive_and_hermitian(seed in any::<u64>(), exp in 4u32..11) {
            let n = 1usize << exp;
            let p = Plemelj::new(n).unwrap();
            let f = random(n, seed);
            let g = random(n, seed.wrapping_add(1));
            let nf = l2(&f);
            for side in [Side::Plus, Side::Minus] {
                let pf = p.apply(&f, side);
                prop_assert!(l2(&pf) <= nf * (1.0 + 1e-10));
                let pg = p.apply(&g, side);
                let lhs: Complex64 = pf.iter().zip(&g).map(|(a, b)| a * b.conj()).sum();
                let rhs: Complex64 = f.iter().zip(&pg).map(|(a, b)| a * b.conj()).sum();
                prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + lhs.norm()));
            }
        }
    }
}
