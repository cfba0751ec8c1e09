use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::mms::{MmsProblem, MMS_GAMMA1};
use crate::coefficients::CoefficientModel;
use crate::error::{Error, Result};
use crate::forms::{
    assemble_mass, grad_norm_sq, l2_norm_sq, rot_l2_error, scalar_l2_error, velocity_l2_error, FieldVector,
    FunctionSpaces, SpaceId,
};
use crate::mesh::{build_rectangle_mesh, refine_uniform, Mesh, PointLocator, Side};
use crate::scalar::{Point2, Real};
use crate::solver::{initialize_state, run, run_from, ProblemData, SolverConfig, State};

/// `log2(e_k / e_{k+1})` for consecutive entries.
pub fn observed_rates(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Nested meshes `coarse x coarse` refined `levels - 1` times.
pub fn nested_meshes<T: Real>(coarse: usize, sides: &[Side], levels: usize) -> Result<Vec<Mesh<T>>> {
    let mut meshes = vec![build_rectangle_mesh(coarse, coarse, sides)?];
    while meshes.len() < levels {
        let next = refine_uniform(meshes.last().unwrap())?;
        meshes.push(next);
    }
    Ok(meshes)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelErrors {
    pub level: usize,
    pub cells: usize,
    pub velocity_l2: f64,
    pub velocity_rot: f64,
    pub temperature_l2: f64,
    pub head_l2: f64,
    pub seconds: f64,
}

impl LevelErrors {
    pub fn as_array(&self) -> [f64; 4] {
        [self.velocity_l2, self.velocity_rot, self.temperature_l2, self.head_l2]
    }
}

/// Error names in the order of [`LevelErrors::as_array`].
pub const ERROR_NAMES: [&str; 4] = ["velocity_l2", "velocity_rot", "temperature_l2", "head_l2"];

/// Minimum finest-pair rates for the quadratic/linear element family.
pub const RATE_TARGETS: [f64; 4] = [2.5, 1.6, 1.6, 1.6];

#[derive(Clone, Debug)]
pub struct StudyReport {
    pub levels: Vec<LevelErrors>,
    /// Rates between consecutive levels, in [`ERROR_NAMES`] order.
    pub rates: Vec<[f64; 4]>,
    pub targets: [f64; 4],
}

impl StudyReport {
    fn new(levels: Vec<LevelErrors>, targets: [f64; 4]) -> Self {
        let rates = levels
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0].as_array(), w[1].as_array());
                std::array::from_fn(|i| (a[i] / b[i]).log2())
            })
            .collect();
        StudyReport { levels, rates, targets }
    }

    pub fn finest_rates(&self) -> Option<[f64; 4]> {
        self.rates.last().copied()
    }

    /// Every error strictly smaller than on the previous level.
    pub fn errors_decreasing(&self) -> bool {
        self.levels.windows(2).all(|w| {
            let (a, b) = (w[0].as_array(), w[1].as_array());
            (0..4).all(|i| b[i] < a[i])
        })
    }

    pub fn rates_met(&self) -> [bool; 4] {
        match self.finest_rates() {
            Some(r) => std::array::from_fn(|i| r[i] >= self.targets[i]),
            None => [false; 4],
        }
    }

    pub fn passed(&self) -> bool {
        self.levels.iter().all(|l| l.as_array().iter().all(|e| e.is_finite()))
            && self.errors_decreasing()
            && self.rates_met().iter().all(|&ok| ok)
    }
}

/// Settings of a manufactured-solution study.
#[derive(Clone, Copy, Debug)]
pub struct MmsStudy<T> {
    pub levels: usize,
    pub coarse: usize,
    pub dt: T,
    pub t_end: T,
    pub beta: T,
    pub gravity: [T; 2],
    pub picard_enabled: bool,
}

impl<T: Real> MmsStudy<T> {
    /// Coarsest mesh 4 x 4, `t_end = 0.1`, no buoyancy.
    pub fn new(levels: usize, dt: T) -> Self {
        MmsStudy {
            levels,
            coarse: 4,
            dt,
            t_end: T::lit(0.1),
            beta: T::zero(),
            gravity: [T::zero(), -T::one()],
            picard_enabled: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.levels < 3 {
            return Err(Error::Config(format!("a refinement study needs at least 3 levels, got {}", self.levels)));
        }
        if self.coarse == 0 {
            return Err(Error::Config("coarse mesh must have at least one cell".into()));
        }
        Ok(())
    }

    fn config(&self) -> Result<SolverConfig<T>> {
        let mut config = SolverConfig::new(self.dt, self.t_end)?;
        config.picard_enabled = self.picard_enabled;
        Ok(config)
    }
}

/// Final-time errors of a solution against the manufactured fields.
pub fn mms_errors<T: Real>(spaces: &FunctionSpaces<T>, state: &State<T>) -> [f64; 4] {
    let t = state.t.as_f64();
    let at = |p: Point2<T>| (p[0].as_f64(), p[1].as_f64());
    let vel = velocity_l2_error(spaces, &state.z, |p| {
        let (x, y) = at(p);
        MmsProblem::velocity(x, y, t).map(T::lit)
    });
    let rot = rot_l2_error(spaces, &state.z, |p| {
        let (x, y) = at(p);
        T::lit(MmsProblem::vorticity(x, y, t))
    });
    let temp = scalar_l2_error(spaces, &state.w, |p| {
        let (x, y) = at(p);
        T::lit(MmsProblem::temperature(x, y, t))
    });
    let head = scalar_l2_error(spaces, &state.p, |p| {
        let (x, y) = at(p);
        T::lit(MmsProblem::head(x, y, t))
    });
    [vel.as_f64(), rot.as_f64(), temp.as_f64(), head.as_f64()]
}

/// Runs the manufactured problem on nested meshes and reports final-time
/// errors and observed rates.
pub fn convergence_study<T: Real>(model: &CoefficientModel<T>, study: &MmsStudy<T>) -> Result<StudyReport> {
    study.validate()?;
    let config = study.config()?;
    let problem = MmsProblem::new(model, study.beta, study.gravity).problem_data(model);
    let meshes = nested_meshes::<T>(study.coarse, &MMS_GAMMA1, study.levels)?;
    let mut levels = Vec::with_capacity(meshes.len());
    for (k, mesh) in meshes.iter().enumerate() {
        let clock = Instant::now();
        let spaces = FunctionSpaces::new(mesh).map_err(|e| e.at_level(k))?;
        let initial = initialize_state(&spaces, &problem).map_err(|e| e.at_level(k))?;
        let last = run_from(&spaces, &problem, &config, initial, |_, _, _| Ok(())).map_err(|e| e.at_level(k))?;
        let e = mms_errors(&spaces, &last);
        levels.push(LevelErrors {
            level: k,
            cells: study.coarse << k,
            velocity_l2: e[0],
            velocity_rot: e[1],
            temperature_l2: e[2],
            head_l2: e[3],
            seconds: clock.elapsed().as_secs_f64(),
        });
    }
    Ok(StudyReport::new(levels, RATE_TARGETS))
}

/// Interpolation errors of the exact fields at `t = 0` on nested meshes;
/// isolates the approximation order of the element family.
pub fn interpolation_study<T: Real>(coarse: usize, levels: usize) -> Result<StudyReport> {
    let meshes = nested_meshes::<T>(coarse, &MMS_GAMMA1, levels)?;
    let mut out = Vec::new();
    for (k, mesh) in meshes.iter().enumerate() {
        let clock = Instant::now();
        let spaces = FunctionSpaces::new(mesh)?;
        let lift = |p: Point2<T>| (p[0].as_f64(), p[1].as_f64());
        let z = spaces.interpolate_velocity(|p| {
            let (x, y) = lift(p);
            MmsProblem::velocity(x, y, 0.0).map(T::lit)
        })?;
        let w = spaces.interpolate_scalar(SpaceId::Temperature, |p| {
            let (x, y) = lift(p);
            T::lit(MmsProblem::temperature(x, y, 0.0))
        })?;
        let p = spaces.interpolate_scalar(SpaceId::Head, |p| {
            let (x, y) = lift(p);
            T::lit(MmsProblem::head(x, y, 0.0))
        })?;
        let e = mms_errors(&spaces, &State { t: T::zero(), z, w, p });
        out.push(LevelErrors {
            level: k,
            cells: coarse << k,
            velocity_l2: e[0],
            velocity_rot: e[1],
            temperature_l2: e[2],
            head_l2: e[3],
            seconds: clock.elapsed().as_secs_f64(),
        });
    }
    Ok(StudyReport::new(out, [3.0 - 0.2, 2.0 - 0.2, 2.0 - 0.2, 2.0 - 0.2]))
}

/// Evaluation of coarse fields at fixed fine-mesh points.
struct Transfer<T> {
    /// Coarse element and barycentric coordinates of every point.
    located: Vec<(usize, [T; 3])>,
}

impl<T: Real> Transfer<T> {
    fn new(coarse: &FunctionSpaces<T>, points: impl Iterator<Item = Point2<T>>) -> Result<Self> {
        let locator = PointLocator::new(&coarse.mesh);
        let located = points
            .map(|p| {
                locator
                    .locate(&coarse.mesh, p)
                    .ok_or_else(|| Error::Mesh(format!("point ({}, {}) is outside the coarse mesh", p[0], p[1])))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Transfer { located })
    }

    fn velocity(&self, coarse: &FunctionSpaces<T>, z: &[T]) -> Vec<[T; 2]> {
        self.located
            .iter()
            .map(|(e, l)| {
                let n = &coarse.element_nodes[*e];
                let b = crate::forms::p2_basis(*l);
                let mut v = [T::zero(); 2];
                for a in 0..6 {
                    v[0] += b[a] * z[2 * n[a]];
                    v[1] += b[a] * z[2 * n[a] + 1];
                }
                v
            })
            .collect()
    }

    fn scalar(&self, coarse: &FunctionSpaces<T>, w: &[T]) -> Vec<T> {
        self.located
            .iter()
            .map(|(e, l)| {
                let tri = &coarse.mesh.triangles[*e];
                (0..3).map(|k| l[k] * w[tri[k]]).sum()
            })
            .collect()
    }
}

/// Successive differences between consecutive levels of a refinement
/// sequence, in `L2(0, T; L2)`.
#[derive(Clone, Debug)]
pub struct CauchyReport {
    /// Velocity differences, prolongation to the finer space.
    pub velocity: Vec<f64>,
    pub temperature: Vec<f64>,
    /// The same differences by quadrature on the finer mesh.
    pub velocity_quadrature: Vec<f64>,
    pub temperature_quadrature: Vec<f64>,
    pub max_ratio: f64,
}

pub const CAUCHY_RATIO: f64 = 0.6;

impl CauchyReport {
    pub fn velocity_ratios(&self) -> Vec<f64> {
        self.velocity.windows(2).map(|w| w[1] / w[0]).collect()
    }

    pub fn temperature_ratios(&self) -> Vec<f64> {
        self.temperature.windows(2).map(|w| w[1] / w[0]).collect()
    }

    /// Largest relative disagreement between the two evaluation paths.
    pub fn path_disagreement(&self) -> f64 {
        let rel = |a: &[f64], b: &[f64]| {
            a.iter().zip(b).map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE)).fold(0.0, f64::max)
        };
        rel(&self.velocity, &self.velocity_quadrature).max(rel(&self.temperature, &self.temperature_quadrature))
    }

    pub fn passed(&self) -> bool {
        self.velocity_ratios().iter().chain(&self.temperature_ratios()).all(|&r| r <= self.max_ratio)
            && self.path_disagreement() <= 0.05
    }
}

/// Time-integrated differences between consecutive nested levels.
pub fn cauchy_study<T: Real>(
    problem: &ProblemData<T>,
    coarse: usize,
    sides: &[Side],
    levels: usize,
    config: &SolverConfig<T>,
) -> Result<CauchyReport> {
    if levels < 3 {
        return Err(Error::Config(format!("a refinement study needs at least 3 levels, got {levels}")));
    }
    let meshes = nested_meshes::<T>(coarse, sides, levels)?;
    let spaces = meshes.iter().map(FunctionSpaces::new).collect::<Result<Vec<_>>>()?;
    let runs = spaces
        .iter()
        .enumerate()
        .map(|(k, s)| run(s, problem, config).map_err(|e| e.at_level(k)))
        .collect::<Result<Vec<_>>>()?;
    let dt = config.dt.as_f64();

    let mut report = CauchyReport {
        velocity: Vec::new(),
        temperature: Vec::new(),
        velocity_quadrature: Vec::new(),
        temperature_quadrature: Vec::new(),
        max_ratio: CAUCHY_RATIO,
    };
    for k in 0..levels - 1 {
        let (cs, fs) = (&spaces[k], &spaces[k + 1]);
        let mass_v = assemble_mass(fs, SpaceId::Velocity);
        let mass_w = assemble_mass(fs, SpaceId::Temperature);
        let node_transfer = Transfer::new(cs, fs.nodes.iter().copied())?;
        let vertex_transfer = Transfer::new(cs, fs.mesh.vertices.iter().copied())?;
        let quad_points: Vec<Point2<T>> =
            (0..fs.n_elements()).flat_map(|e| (0..fs.n_quad()).map(move |q| (e, q))).map(|(e, q)| fs.quad_point(e, q)).collect();
        let quad_transfer = Transfer::new(cs, quad_points.into_iter())?;

        let (mut sv, mut sw, mut qv, mut qw) = (0.0, 0.0, 0.0, 0.0);
        let steps = runs[k].states.len();
        for n in 0..steps {
            let weight = if n == 0 || n == steps - 1 { 0.5 * dt } else { dt };
            let (c, f) = (&runs[k].states[n], &runs[k + 1].states[n]);

            let up: Vec<T> = node_transfer.velocity(cs, &c.z.values).into_iter().flatten().collect();
            let dz = FieldVector { space: SpaceId::Velocity, values: f.z.values.iter().zip(&up).map(|(a, b)| *a - *b).collect() };
            sv += weight * mass_v.form(&dz.values, &dz.values)?.as_f64();
            let upw = vertex_transfer.scalar(cs, &c.w.values);
            let dw: Vec<T> = f.w.values.iter().zip(&upw).map(|(a, b)| *a - *b).collect();
            sw += weight * mass_w.form(&dw, &dw)?.as_f64();

            let cz = quad_transfer.velocity(cs, &c.z.values);
            let cw = quad_transfer.scalar(cs, &c.w.values);
            let (mut iv, mut iw) = (T::zero(), T::zero());
            for e in 0..fs.n_elements() {
                for q in 0..fs.n_quad() {
                    let idx = e * fs.n_quad() + q;
                    let wq = fs.weight(e, q);
                    let (zf, _) = fs.velocity_at(e, q, &f.z.values);
                    let (wf, _) = fs.scalar_at(e, q, &f.w.values);
                    let (a, b) = (zf[0] - cz[idx][0], zf[1] - cz[idx][1]);
                    iv += wq * (a * a + b * b);
                    iw += wq * (wf - cw[idx]) * (wf - cw[idx]);
                }
            }
            qv += weight * iv.as_f64();
            qw += weight * iw.as_f64();
        }
        report.velocity.push(sv.sqrt());
        report.temperature.push(sw.sqrt());
        report.velocity_quadrature.push(qv.sqrt());
        report.temperature_quadrature.push(qw.sqrt());
    }
    Ok(report)
}

/// Two trajectories started a distance `delta` apart.
#[derive(Clone, Debug)]
pub struct ContractionReport {
    pub times: Vec<f64>,
    /// `|z1 - z2|^2 + |w1 - w2|^2` in L2 at every time level.
    pub distance: Vec<f64>,
    /// Exponential bound `D(0) exp(sum (M + N) dt) (1 + 1e-6)`.
    pub bound: Vec<f64>,
    pub re_plus_ra: Vec<f64>,
    pub zero_forcing: bool,
}

pub const GRONWALL_SLACK: f64 = 1e-6;

impl ContractionReport {
    pub fn bound_holds(&self) -> bool {
        self.distance.iter().zip(&self.bound).all(|(d, b)| d <= b)
    }

    /// Smallest `bound - distance` relative to the bound after the
    /// initial time.
    pub fn margin(&self) -> f64 {
        self.distance
            .iter()
            .zip(&self.bound)
            .skip(1)
            .filter(|(_, b)| **b > 0.0)
            .map(|(d, b)| (b - d) / b)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn monotone(&self) -> bool {
        self.distance.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn uniqueness_condition(&self) -> bool {
        self.re_plus_ra.iter().all(|v| *v < 1.0)
    }

    pub fn passed(&self) -> bool {
        let tail = match (self.distance.first(), self.distance.last()) {
            (Some(d0), Some(d1)) => d1 <= d0,
            _ => true,
        };
        self.bound_holds() && (!(self.zero_forcing && self.uniqueness_condition()) || tail)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ContractionOptions<T> {
    pub delta: T,
    pub seed: u64,
    /// The problem has no forcing and no boundary data.
    pub zero_forcing: bool,
}

/// Random constrained perturbation of unit size in `|dz|^2 + |dw|^2`.
fn perturbation<T: Real>(spaces: &FunctionSpaces<T>, seed: u64) -> (FieldVector<T>, FieldVector<T>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |space: SpaceId| {
        let values = (0..spaces.dim(space)).map(|_| T::lit(rng.random_range(-1.0..1.0))).collect();
        let mut f = FieldVector { space, values };
        spaces.constrain(&mut f);
        f
    };
    let (mut dz, mut dw) = (draw(SpaceId::Velocity), draw(SpaceId::Temperature));
    let size = (l2_norm_sq(spaces, &dz) + l2_norm_sq(spaces, &dw)).sqrt();
    for v in dz.values.iter_mut().chain(dw.values.iter_mut()) {
        *v /= size;
    }
    (dz, dw)
}

/// Runs a baseline and a perturbed trajectory and compares their distance
/// with the exponential growth bound built from the baseline norms.
pub fn contraction_study<T: Real>(
    spaces: &FunctionSpaces<T>,
    problem: &ProblemData<T>,
    config: &SolverConfig<T>,
    options: &ContractionOptions<T>,
) -> Result<ContractionReport> {
    if !(options.delta >= T::zero() && options.delta.is_finite()) {
        return Err(Error::Config(format!("perturbation size must be nonnegative, got {}", options.delta)));
    }
    let base_initial = initialize_state(spaces, problem)?;
    let (dz, dw) = perturbation(spaces, options.seed);
    let mut other_initial = base_initial.clone();
    other_initial.z = other_initial.z.axpy(options.delta, &dz);
    other_initial.w = other_initial.w.axpy(options.delta, &dw);

    let mut base = Vec::new();
    let mut base_re_ra = Vec::new();
    run_from(spaces, problem, config, base_initial, |_, s, d| {
        base.push(s.clone());
        base_re_ra.push(d.re_plus_ra.as_f64());
        Ok(())
    })?;
    let mut other = Vec::new();
    run_from(spaces, problem, config, other_initial, |_, s, _| {
        other.push(s.clone());
        Ok(())
    })?;

    let c = &problem.coefficients;
    let k = &config.constants;
    let g_sup = problem.gravity_sup(spaces).as_f64();
    let n_growth = problem.beta.as_f64() * g_sup;
    let a1 = c.l1.as_f64() / (2.0 * c.gamma0.as_f64() * k.c1.as_f64());
    let a2 = c.l2.as_f64() / (2.0 * c.k0.as_f64() * k.c1_prime.as_f64());
    let dt = config.dt.as_f64();

    let mut report = ContractionReport {
        times: Vec::new(),
        distance: Vec::new(),
        bound: Vec::new(),
        re_plus_ra: base_re_ra,
        zero_forcing: options.zero_forcing,
    };
    let mut exponent = 0.0;
    for (n, (b, o)) in base.iter().zip(&other).enumerate() {
        if n > 0 {
            let m = n_growth + a1 * grad_norm_sq(spaces, &b.z).as_f64() + a2 * grad_norm_sq(spaces, &b.w).as_f64();
            exponent += (m + n_growth) * dt;
        }
        let dz = b.z.axpy(-T::one(), &o.z);
        let dw = b.w.axpy(-T::one(), &o.w);
        let d = (l2_norm_sq(spaces, &dz) + l2_norm_sq(spaces, &dw)).as_f64();
        report.times.push(b.t.as_f64());
        report.distance.push(d);
        let d0 = report.distance[0];
        report.bound.push(d0 * exponent.exp() * (1.0 + GRONWALL_SLACK));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;

    fn spaces(n: usize) -> FunctionSpaces<f64> {
        FunctionSpaces::with_threads(&build_rectangle_mesh(n, n, &[Side::Left]).unwrap(), 1).unwrap()
    }

    #[test]
    fn rates_are_log2_ratios() {
        assert_eq!(observed_rates(&[1.0, 0.25, 0.125]), vec![2.0, 1.0]);
    }

    #[test]
    fn too_few_levels_is_a_config_error() {
        let model = CoefficientModel::constant(1.0, 1.0).unwrap();
        let r = convergence_study(&model, &MmsStudy::new(2, 0.01));
        assert!(matches!(r, Err(Error::Config(_))));
        let p = ProblemData::zero(model);
        let cfg = SolverConfig::new(0.1, 0.1).unwrap();
        assert!(matches!(cauchy_study(&p, 2, &[Side::Left], 1, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn interpolation_orders() {
        let r = interpolation_study::<f64>(2, 3).unwrap();
        assert!(r.errors_decreasing());
        let rates = r.finest_rates().unwrap();
        assert!(rates[0] > 2.7 && rates[1] > 1.8 && rates[2] > 1.8 && rates[3] > 1.8, "{rates:?}");
    }

    #[test]
    fn zero_perturbation_gives_zero_distance() {
        let s = spaces(3);
        let model = CoefficientModel::tanh_blend((0.5, 2.0), (0.5, 2.0)).unwrap();
        let p = MmsProblem::new(&model, 0.0, [0.0, -1.0]).problem_data(&model);
        let cfg = SolverConfig::new(0.05, 0.1).unwrap();
        let opts = ContractionOptions { delta: 0.0, seed: 3, zero_forcing: false };
        let r = contraction_study(&s, &p, &cfg, &opts).unwrap();
        assert_eq!(r.distance, vec![0.0; 3]);
        assert!(r.bound_holds() && r.passed());
    }

    #[test]
    fn constant_coefficient_difference_decays() {
        let s = spaces(3);
        let mut p = ProblemData::zero(CoefficientModel::constant(1.0, 1.0).unwrap());
        p.w0 = Arc::new(|x| x[0] * x[1]);
        let cfg = SolverConfig::new(0.02, 0.1).unwrap();
        let opts = ContractionOptions { delta: 1e-3, seed: 42, zero_forcing: true };
        let r = contraction_study(&s, &p, &cfg, &opts).unwrap();
        assert!((r.distance[0] - 1e-6).abs() < 1e-18);
        assert!(r.monotone(), "{:?}", r.distance);
        assert!(r.passed());
    }

    #[test]
    fn identical_levels_have_zero_difference() {
        let s = spaces(2);
        let t = Transfer::new(&s, s.nodes.iter().copied()).unwrap();
        let z = s.interpolate_velocity(|p| [p[0] * p[1], p[1] * p[1]]).unwrap();
        let back: Vec<f64> = t.velocity(&s, &z.values).into_iter().flatten().collect();
        for (a, b) in back.iter().zip(&z.values) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
