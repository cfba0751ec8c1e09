//! Temperature-dependent viscosity and conductivity laws.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A scalar law `w -> c(w)` bounded away from zero and globally Lipschitz.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoefficientLaw<T> {
    Constant { value: T },
    /// `clamp(intercept + slope * w, lower, upper)`.
    ClampedAffine { intercept: T, slope: T, lower: T, upper: T },
    /// `low + (high - low) * (1 + tanh(w)) / 2`.
    TanhBlend { low: T, high: T },
}

impl<T: Real> CoefficientLaw<T> {
    #[inline]
    pub fn eval(&self, w: T) -> T {
        match *self {
            CoefficientLaw::Constant { value } => value,
            CoefficientLaw::ClampedAffine { intercept, slope, lower, upper } => {
                (intercept + slope * w).max(lower).min(upper)
            }
            CoefficientLaw::TanhBlend { low, high } => {
                low + (high - low) * (T::one() + w.tanh()) * T::lit(0.5)
            }
        }
    }

    /// Tight `(lower, upper)` bounds of the law over the real line.
    pub fn range(&self) -> (T, T) {
        match *self {
            CoefficientLaw::Constant { value } => (value, value),
            CoefficientLaw::ClampedAffine { slope, lower, upper, .. } => {
                if slope == T::zero() {
                    // Degenerates to the clamped intercept.
                    let v = self.eval(T::zero());
                    (v, v)
                } else {
                    (lower, upper)
                }
            }
            CoefficientLaw::TanhBlend { low, high } => (low, high),
        }
    }

    pub fn lipschitz(&self) -> T {
        match *self {
            CoefficientLaw::Constant { .. } => T::zero(),
            CoefficientLaw::ClampedAffine { slope, .. } => slope.abs(),
            CoefficientLaw::TanhBlend { low, high } => (high - low).abs() * T::lit(0.5),
        }
    }

    fn check(&self, what: &str) -> Result<()> {
        let finite = |v: T| v.is_finite();
        let ok = match *self {
            CoefficientLaw::Constant { value } => finite(value) && value > T::zero(),
            CoefficientLaw::ClampedAffine { intercept, slope, lower, upper } => {
                [intercept, slope, lower, upper].into_iter().all(finite) && lower > T::zero() && lower <= upper
            }
            CoefficientLaw::TanhBlend { low, high } => finite(low) && finite(high) && low > T::zero() && low <= high,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("{what} law {self:?} is not positive and bounded")))
        }
    }
}

/// Viscosity `gamma(w)` and conductivity `k(w)` with their declared bounds
/// `gamma0 <= gamma <= gamma1`, `k0 <= k <= k1` and Lipschitz constants
/// `l1`, `l2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoefficientModel<T> {
    pub viscosity: CoefficientLaw<T>,
    pub conductivity: CoefficientLaw<T>,
    pub gamma0: T,
    pub gamma1: T,
    pub k0: T,
    pub k1: T,
    pub l1: T,
    pub l2: T,
}

impl<T: Real> CoefficientModel<T> {
    /// Model with bounds and Lipschitz constants read off the laws.
    pub fn new(viscosity: CoefficientLaw<T>, conductivity: CoefficientLaw<T>) -> Result<Self> {
        viscosity.check("viscosity")?;
        conductivity.check("conductivity")?;
        let (gamma0, gamma1) = viscosity.range();
        let (k0, k1) = conductivity.range();
        Ok(CoefficientModel {
            viscosity,
            conductivity,
            gamma0,
            gamma1,
            k0,
            k1,
            l1: viscosity.lipschitz(),
            l2: conductivity.lipschitz(),
        })
    }

    /// Replaces the derived constants by user-declared ones. The declared
    /// interval must contain the law's range and the declared Lipschitz
    /// constant must dominate the law's.
    pub fn with_declared(mut self, gamma: (T, T), k: (T, T), l1: T, l2: T) -> Result<Self> {
        let mut problems = Vec::new();
        let (g_lo, g_hi) = self.viscosity.range();
        let (k_lo, k_hi) = self.conductivity.range();
        if !(gamma.0 > T::zero() && gamma.0 <= g_lo && g_hi <= gamma.1) {
            problems.push(format!("viscosity bounds {gamma:?} do not enclose the law range [{g_lo}, {g_hi}]"));
        }
        if !(k.0 > T::zero() && k.0 <= k_lo && k_hi <= k.1) {
            problems.push(format!("conductivity bounds {k:?} do not enclose the law range [{k_lo}, {k_hi}]"));
        }
        if !(l1 >= self.viscosity.lipschitz()) {
            problems.push(format!("l1 = {l1} is below the viscosity Lipschitz constant"));
        }
        if !(l2 >= self.conductivity.lipschitz()) {
            problems.push(format!("l2 = {l2} is below the conductivity Lipschitz constant"));
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems.join("; ")));
        }
        (self.gamma0, self.gamma1, self.k0, self.k1, self.l1, self.l2) = (gamma.0, gamma.1, k.0, k.1, l1, l2);
        Ok(self)
    }

    pub fn constant(gamma: T, k: T) -> Result<Self> {
        Self::new(CoefficientLaw::Constant { value: gamma }, CoefficientLaw::Constant { value: k })
    }

    /// Smooth blend used by the manufactured-solution studies.
    pub fn tanh_blend(gamma: (T, T), k: (T, T)) -> Result<Self> {
        Self::new(
            CoefficientLaw::TanhBlend { low: gamma.0, high: gamma.1 },
            CoefficientLaw::TanhBlend { low: k.0, high: k.1 },
        )
    }

    #[inline]
    pub fn viscosity(&self, w: T) -> T {
        self.viscosity.eval(w)
    }

    #[inline]
    pub fn conductivity(&self, w: T) -> T {
        self.conductivity.eval(w)
    }

    pub fn eval_viscosity(&self, w: T) -> Result<T> {
        if !w.is_finite() {
            return Err(Error::Input(format!("viscosity evaluated at non-finite temperature {w}")));
        }
        Ok(self.viscosity(w))
    }

    pub fn eval_conductivity(&self, w: T) -> Result<T> {
        if !w.is_finite() {
            return Err(Error::Input(format!("conductivity evaluated at non-finite temperature {w}")));
        }
        Ok(self.conductivity(w))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoefficientAudit<T> {
    /// Largest `max(lower - c(w), c(w) - upper)` seen; `<= 0` when the
    /// declared bounds hold.
    pub max_violation_bounds: T,
    pub empirical_l1: T,
    pub empirical_l2: T,
}

impl<T: Real> CoefficientAudit<T> {
    pub fn passes(&self, model: &CoefficientModel<T>) -> bool {
        let slack = T::lit(1e-10);
        self.max_violation_bounds <= T::zero()
            && self.empirical_l1 <= model.l1 + slack
            && self.empirical_l2 <= model.l2 + slack
    }
}

const AUDIT_SEED: u64 = 0x5eed_c0ef;
const AUDIT_HALF_WIDTH: f64 = 50.0;

/// Samples both laws on a uniform grid over `[-50, 50]` and on fixed-seed
/// random pairs, reporting the worst bound violation and the largest
/// difference quotients.
pub fn audit_bounds_and_lipschitz<T: Real>(model: &CoefficientModel<T>, samples: usize) -> Result<CoefficientAudit<T>> {
    if samples < 2 {
        return Err(Error::Input(format!("audit needs at least 2 samples, got {samples}")));
    }
    let mut points: Vec<T> = (0..samples)
        .map(|i| T::lit(-AUDIT_HALF_WIDTH + 2.0 * AUDIT_HALF_WIDTH * i as f64 / (samples - 1) as f64))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(AUDIT_SEED);
    let mut pairs: Vec<(T, T)> = points.windows(2).map(|w| (w[0], w[1])).collect();
    for _ in 0..4 * samples {
        let a: f64 = rng.random_range(-AUDIT_HALF_WIDTH..AUDIT_HALF_WIDTH);
        // Mix wide and very close pairs so steep regions are resolved.
        let gap: f64 = if rng.random::<bool>() { rng.random_range(-1.0..1.0) } else { rng.random_range(-1e-3..1e-3) };
        let (a, b) = (T::lit(a), T::lit(a + gap));
        points.push(a);
        pairs.push((a, b));
    }

    let mut violation = T::neg_infinity();
    for &w in &points {
        let g = model.viscosity(w);
        let k = model.conductivity(w);
        violation = violation
            .max(model.gamma0 - g)
            .max(g - model.gamma1)
            .max(model.k0 - k)
            .max(k - model.k1);
    }

    let quotient = |law: &CoefficientLaw<T>| {
        pairs
            .iter()
            .filter(|(a, b)| a != b)
            .map(|&(a, b)| (law.eval(a) - law.eval(b)).abs() / (a - b).abs())
            .fold(T::zero(), T::max)
    };
    Ok(CoefficientAudit {
        max_violation_bounds: violation,
        empirical_l1: quotient(&model.viscosity),
        empirical_l2: quotient(&model.conductivity),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn affine() -> CoefficientLaw<f64> {
        CoefficientLaw::ClampedAffine { intercept: 1.0, slope: 0.5, lower: 0.5, upper: 2.0 }
    }

    #[test]
    fn constant_law() {
        let m = CoefficientModel::constant(1.0, 1.0).unwrap();
        assert_eq!(m.eval_viscosity(5.0).unwrap(), 1.0);
        assert_eq!(m.eval_conductivity(-3.0).unwrap(), 1.0);
        assert_eq!(m.l1, 0.0);
    }

    #[test]
    fn clamped_affine_values() {
        let m = CoefficientModel::new(affine(), affine()).unwrap();
        assert_eq!(m.eval_viscosity(0.0).unwrap(), 1.0);
        assert_eq!(m.eval_viscosity(10.0).unwrap(), 2.0);
        assert_eq!(m.eval_viscosity(-10.0).unwrap(), 0.5);
        assert_eq!((m.gamma0, m.gamma1, m.l1), (0.5, 2.0, 0.5));
    }

    #[test]
    fn tanh_blend_value_at_origin() {
        let m = CoefficientModel::<f64>::tanh_blend((0.5, 2.0), (0.5, 2.0)).unwrap();
        // 0.5 + 1.5 * (1 + 0) / 2
        assert!((m.eval_viscosity(0.0).unwrap() - 1.25).abs() < 1e-15);
        assert!((m.eval_conductivity(0.0).unwrap() - 1.25).abs() < 1e-15);
        assert_eq!(m.l1, 0.75);
    }

    #[test]
    fn non_finite_temperature_rejected() {
        let m = CoefficientModel::constant(1.0, 1.0).unwrap();
        assert!(matches!(m.eval_viscosity(f64::NAN), Err(Error::Input(_))));
        assert!(matches!(m.eval_conductivity(f64::INFINITY), Err(Error::Input(_))));
    }

    #[test]
    fn invalid_laws_rejected() {
        assert!(CoefficientModel::constant(0.0, 1.0).is_err());
        assert!(CoefficientModel::tanh_blend((2.0, 1.0), (1.0, 1.0)).is_err());
        let bad = CoefficientLaw::ClampedAffine { intercept: 1.0, slope: 1.0, lower: -1.0, upper: 2.0 };
        assert!(CoefficientModel::new(bad, affine()).is_err());
    }

    #[test]
    fn declared_constants_must_dominate() {
        let m = CoefficientModel::new(affine(), affine()).unwrap();
        assert!(m.with_declared((0.4, 2.5), (0.5, 2.0), 0.6, 0.5).is_ok());
        assert!(m.with_declared((0.6, 2.0), (0.5, 2.0), 0.5, 0.5).is_err());
        assert!(m.with_declared((0.5, 2.0), (0.5, 2.0), 0.4, 0.5).is_err());
    }

    #[test]
    fn audit_constant_model() {
        let m = CoefficientModel::constant(1.0, 2.0).unwrap();
        let a = audit_bounds_and_lipschitz(&m, 101).unwrap();
        assert_eq!(a.empirical_l1, 0.0);
        assert_eq!(a.empirical_l2, 0.0);
        assert!(a.max_violation_bounds <= 0.0);
        assert!(a.passes(&m));
    }

    #[test]
    fn audit_affine_model() {
        let m = CoefficientModel::new(affine(), affine()).unwrap();
        let a = audit_bounds_and_lipschitz(&m, 1001).unwrap();
        assert!(a.empirical_l1 <= 0.5 + 1e-10);
        assert!(a.empirical_l1 > 0.49);
        assert!(a.passes(&m));
    }

    #[test]
    fn audit_tanh_model() {
        let m = CoefficientModel::tanh_blend((0.5, 2.0), (1.0, 3.0)).unwrap();
        let a = audit_bounds_and_lipschitz(&m, 2001).unwrap();
        assert!(a.empirical_l1 <= 0.75 + 1e-10);
        assert!(a.empirical_l1 > 0.74);
        assert!(a.empirical_l2 <= 1.0 + 1e-10);
        assert!(a.passes(&m));
    }

    #[test]
    fn audit_rejects_too_few_samples() {
        let m = CoefficientModel::constant(1.0, 1.0).unwrap();
        assert!(audit_bounds_and_lipschitz(&m, 1).is_err());
    }

    #[test]
    fn evaluation_is_pure() {
        let m = CoefficientModel::<f64>::tanh_blend((0.5, 2.0), (0.5, 2.0)).unwrap();
        for w in [-3.0, 0.1, 7.5] {
            assert_eq!(m.viscosity(w).to_bits(), m.viscosity(w).to_bits());
        }
    }

    proptest::proptest! {
        #[test]
        fn builtin_laws_respect_bounds(w in -1e3f64..1e3, lo in 0.01f64..5.0, span in 0.0f64..5.0, slope in -3.0f64..3.0) {
            let laws = [
                CoefficientLaw::Constant { value: lo },
                CoefficientLaw::ClampedAffine { intercept: lo + span / 2.0, slope, lower: lo, upper: lo + span },
                CoefficientLaw::TanhBlend { low: lo, high: lo + span },
            ];
            for law in laws {
                let m = CoefficientModel::new(law, law).unwrap();
                let g = m.viscosity(w);
                proptest::prop_assert!(m.gamma0 <= g && g <= m.gamma1);
            }
        }
    }
}
