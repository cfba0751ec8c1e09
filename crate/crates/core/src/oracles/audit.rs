use nalgebra::DVector;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coefficients::CoefficientModel;
use crate::error::{Error, Result};
use crate::forms::{
    assemble_h1_gram, assemble_mass, assemble_temperature_advection, assemble_temperature_diffusion,
    assemble_velocity_advection, assemble_velocity_diffusion, h1_norm_sq, trilinear_b, trilinear_c, FieldVector,
    FunctionSpaces, SpaceId,
};
use crate::linalg::dense::{dual_norm, inverse_sqrt, spectral_norm, submatrix};
use crate::linalg::SparseOperator;
use crate::scalar::Real;
use crate::solver::{solenoidal_basis, temperature_coercivity, velocity_coercivity};

pub const SKEW_TOLERANCE: f64 = 1e-13;
pub const ANTISYMMETRY_TOLERANCE: f64 = 1e-12;
pub const COERCIVITY_SLACK: f64 = 1e-10;
/// Velocity fields used to measure the continuity constant.
pub const CALIBRATION_SAMPLES: usize = 20;
/// Continuity triples per trial.
pub const TRIPLES_PER_TRIAL: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct AuditCheck {
    pub name: &'static str,
    /// Worst value observed over all trials.
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FormAudit {
    pub trials: usize,
    pub seed: u64,
    pub checks: Vec<AuditCheck>,
    pub c1: f64,
    pub c1_prime: f64,
    /// Measured `C` in `|b(u, v, w)| <= C |u|_1 |v|_1 |w|_1`.
    pub continuity: f64,
}

impl FormAudit {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&AuditCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Largest relative skew violation of the advection matrices.
    pub fn max_skew_violation(&self) -> f64 {
        ["velocity_advection_skew", "temperature_advection_skew"]
            .iter()
            .filter_map(|n| self.check(n))
            .map(|c| c.worst)
            .fold(0.0, f64::max)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }
}

#[derive(Clone, Debug)]
pub struct AuditOptions<T> {
    pub trials: usize,
    pub seed: u64,
    pub model: CoefficientModel<T>,
    /// Continuity constant measured on a coarser mesh; measured here if absent.
    pub continuity: Option<f64>,
}

impl<T: Real> AuditOptions<T> {
    pub fn new(trials: usize, seed: u64, model: CoefficientModel<T>) -> Self {
        AuditOptions { trials, seed, model, continuity: None }
    }
}

struct Tracker {
    checks: Vec<AuditCheck>,
}

impl Tracker {
    /// Records `value` as a violation that must stay at or below `tolerance`.
    fn record(&mut self, name: &'static str, value: f64, tolerance: f64) {
        let ok = value <= tolerance;
        match self.checks.iter_mut().find(|c| c.name == name) {
            Some(c) => {
                c.worst = if value.is_nan() { f64::NAN } else { c.worst.max(value) };
                c.passed &= ok;
                c.samples += 1;
            }
            None => self.checks.push(AuditCheck { name, worst: value, tolerance, passed: ok, samples: 1 }),
        }
    }
}

fn random_field<T: Real>(spaces: &FunctionSpaces<T>, space: SpaceId, rng: &mut ChaCha8Rng) -> FieldVector<T> {
    let values = (0..spaces.dim(space)).map(|_| T::lit(rng.random_range(-1.0..1.0))).collect();
    let mut f = FieldVector { space, values };
    spaces.constrain(&mut f);
    f
}

fn relative_skew<T: Real>(x: &SparseOperator<T>) -> f64 {
    let scale = x.max_abs().as_f64();
    if scale == 0.0 {
        0.0
    } else {
        x.max_skew_violation().as_f64() / scale
    }
}

/// `|x^T X x|` relative to `sum |x_i X_ij x_j|`.
fn relative_energy<T: Real>(x: &SparseOperator<T>, v: &[T]) -> Result<f64> {
    let scale: f64 = x.iter().map(|(i, j, a)| (v[i] * a * v[j]).abs().as_f64()).sum();
    let e = x.form(v, v)?.as_f64().abs();
    Ok(if scale == 0.0 { e } else { e / scale })
}

fn lift(values: &DVector<f64>, free: &[usize], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (k, &i) in free.iter().enumerate() {
        out[i] = values[k];
    }
    out
}

fn restrict<T: Real>(values: &[T], free: &[usize]) -> DVector<f64> {
    DVector::from_iterator(free.len(), free.iter().map(|&i| values[i].as_f64()))
}

/// Measured continuity constant of `b`: the largest
/// `sigma_max(G^{-1/2} N(u) G^{-1/2}) / |u|_1` over fixed-seed random `u`.
pub fn continuity_constant<T: Real>(spaces: &FunctionSpaces<T>, seed: u64) -> Result<f64> {
    let free = &spaces.velocity_free;
    let g = submatrix(&assemble_h1_gram(spaces, SpaceId::Velocity).to_dense_f64(), free, free);
    let g_half = inverse_sqrt(&g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x00ca_11b0);
    let mut best = 0.0f64;
    for _ in 0..CALIBRATION_SAMPLES {
        let u = random_field(spaces, SpaceId::Velocity, &mut rng);
        let n = submatrix(&assemble_velocity_advection(spaces, &u)?.to_dense_f64(), free, free);
        let sigma = spectral_norm(&(&g_half * n * &g_half));
        best = best.max(sigma / h1_norm_sq(spaces, &u).as_f64().sqrt());
    }
    Ok(best)
}

/// Runs every structural invariant of the discrete forms on `trials`
/// fixed-seed random fields and reports the worst violations.
pub fn check_forms<T: Real>(spaces: &FunctionSpaces<T>, options: &AuditOptions<T>) -> Result<FormAudit> {
    let mut audit = FormAudit {
        trials: options.trials,
        seed: options.seed,
        checks: Vec::new(),
        c1: f64::NAN,
        c1_prime: f64::NAN,
        continuity: f64::NAN,
    };
    if options.trials == 0 {
        return Ok(audit);
    }
    let model = &options.model;
    let mut t = Tracker { checks: Vec::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);

    let c1 = velocity_coercivity(spaces)?;
    let c1p = temperature_coercivity(spaces)?;
    t.record("c1_positive", -c1, -f64::MIN_POSITIVE);
    t.record("c1_prime_positive", -c1p, -f64::MIN_POSITIVE);
    audit.c1 = c1;
    audit.c1_prime = c1p;

    let continuity = match options.continuity {
        Some(c) => c,
        None => continuity_constant(spaces, options.seed)?,
    };
    if !(continuity.is_finite() && continuity >= 0.0) {
        return Err(Error::Numeric(format!("continuity constant {continuity} is not admissible")));
    }
    audit.continuity = continuity;

    let vfree = &spaces.velocity_free;
    let wfree = &spaces.temperature_free;
    let gv = submatrix(&assemble_h1_gram(spaces, SpaceId::Velocity).to_dense_f64(), vfree, vfree);
    let gv_chol = gv.clone().cholesky().ok_or_else(|| Error::Numeric("velocity Gram matrix is not SPD".into()))?;
    let gw = submatrix(&assemble_h1_gram(spaces, SpaceId::Temperature).to_dense_f64(), wfree, wfree);
    let basis = solenoidal_basis(spaces);
    let n_vel = spaces.dim(SpaceId::Velocity);

    for v in [assemble_mass(spaces, SpaceId::Velocity), assemble_mass(spaces, SpaceId::Temperature)] {
        t.record("mass_symmetry", v.max_asymmetry().as_f64(), 0.0);
    }

    for _ in 0..options.trials {
        let z = random_field(spaces, SpaceId::Velocity, &mut rng);
        let x = random_field(spaces, SpaceId::Velocity, &mut rng);
        let w = random_field(spaces, SpaceId::Temperature, &mut rng);
        let phi = random_field(spaces, SpaceId::Temperature, &mut rng);

        let n = assemble_velocity_advection(spaces, &z)?;
        t.record("velocity_advection_skew", relative_skew(&n), SKEW_TOLERANCE);
        t.record("velocity_advection_energy", relative_energy(&n, &x.values)?, SKEW_TOLERANCE);
        let c = assemble_temperature_advection(spaces, &z)?;
        t.record("temperature_advection_skew", relative_skew(&c), SKEW_TOLERANCE);
        t.record("temperature_advection_energy", relative_energy(&c, &w.values)?, SKEW_TOLERANCE);

        let a = assemble_velocity_diffusion(spaces, model, &w)?;
        t.record("velocity_diffusion_symmetry", a.max_asymmetry().as_f64(), 0.0);
        let k = assemble_temperature_diffusion(spaces, model, &w)?;
        t.record("temperature_diffusion_symmetry", k.max_asymmetry().as_f64(), 0.0);

        let (zn, xn) = (h1_norm_sq(spaces, &z).as_f64().sqrt(), h1_norm_sq(spaces, &x).as_f64().sqrt());
        let scale = zn * zn * xn;
        let bzx = trilinear_b(spaces, &z, &x, &z)?.as_f64();
        let bzz = trilinear_b(spaces, &z, &z, &x)?.as_f64();
        t.record("b_antisymmetry", (bzx + bzz).abs() / scale, ANTISYMMETRY_TOLERANCE);
        t.record("b_vanishing", trilinear_b(spaces, &z, &x, &x)?.as_f64().abs() / (zn * xn * xn), ANTISYMMETRY_TOLERANCE);
        let c_scale = zn
            * h1_norm_sq(spaces, &w).as_f64().sqrt()
            * h1_norm_sq(spaces, &phi).as_f64().sqrt();
        let cwp = trilinear_c(spaces, &z, &w, &phi)?.as_f64();
        let cpw = trilinear_c(spaces, &z, &phi, &w)?.as_f64();
        let skew_form = c.form(&phi.values, &w.values)?.as_f64();
        t.record("temperature_advection_consistency", (skew_form - 0.5 * (cwp - cpw)).abs() / c_scale, ANTISYMMETRY_TOLERANCE);

        // Coercivity on discretely divergence-free and on constrained fields.
        if basis.ncols() > 0 {
            let coef = DVector::from_iterator(basis.ncols(), (0..basis.ncols()).map(|_| rng.random_range(-1.0..1.0)));
            let xs: Vec<T> = lift(&(&basis * coef), vfree, n_vel).into_iter().map(T::lit).collect();
            let energy = a.form(&xs, &xs)?.as_f64();
            let h1 = restrict(&xs, vfree).dot(&(&gv * restrict(&xs, vfree)));
            let bound = model.gamma0.as_f64() * c1 * h1;
            t.record("velocity_coercivity", (bound - energy) / bound.max(f64::MIN_POSITIVE), COERCIVITY_SLACK);
        }
        let ys = random_field(spaces, SpaceId::Temperature, &mut rng);
        let energy = k.form(&ys.values, &ys.values)?.as_f64();
        let yr = restrict(&ys.values, wfree);
        let bound = model.k0.as_f64() * c1p * yr.dot(&(&gw * &yr));
        t.record("temperature_coercivity", (bound - energy) / bound.max(f64::MIN_POSITIVE), COERCIVITY_SLACK);

        for _ in 0..TRIPLES_PER_TRIAL {
            let u = random_field(spaces, SpaceId::Velocity, &mut rng);
            let v = random_field(spaces, SpaceId::Velocity, &mut rng);
            let q = random_field(spaces, SpaceId::Velocity, &mut rng);
            let norms: f64 = [&u, &v, &q].iter().map(|f| h1_norm_sq(spaces, f).as_f64().sqrt()).product();
            let b = trilinear_b(spaces, &u, &v, &q)?.as_f64().abs();
            t.record("continuity", b / (continuity * norms), 1.0);
        }

        let r = n.matvec(&z.values)?;
        let dual = dual_norm(&gv_chol, &restrict(&r, vfree));
        t.record("dual_norm", dual / (continuity * zn * zn), 1.0);
    }
    audit.checks = t.checks;
    Ok(audit)
}
