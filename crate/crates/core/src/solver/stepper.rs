use crate::error::{Error, Result};
use crate::forms::{
    assemble_buoyancy, assemble_divergence_constraint, assemble_mass, assemble_temperature_advection,
    assemble_temperature_diffusion, assemble_temperature_load, assemble_velocity_advection,
    assemble_velocity_diffusion, assemble_velocity_load, FieldVector, FunctionSpaces, SpaceId,
};
use crate::linalg::{CscMatrix, DirectSolver, SparseOperator};
use crate::scalar::Real;

use super::diagnostics::{compute_diagnostics, Diagnostics, ReRaConstants};
use super::problem::{initialize_state, ProblemData, State};

const NONE: usize = usize::MAX;

/// Time-stepping parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig<T> {
    pub dt: T,
    pub t_end: T,
    pub picard_max: usize,
    pub picard_tol: T,
    pub picard_enabled: bool,
    pub constants: ReRaConstants<T>,
}

impl<T: Real> SolverConfig<T> {
    /// Defaults: Picard on, at most 25 sweeps, relative tolerance `1e-10`.
    pub fn new(dt: T, t_end: T) -> Result<Self> {
        let config = SolverConfig {
            dt,
            t_end,
            picard_max: 25,
            picard_tol: T::lit(1e-10),
            picard_enabled: true,
            constants: ReRaConstants::default(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            problems.push(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end > T::zero() && self.t_end.is_finite()) {
            problems.push(format!("t_end must be positive, got {}", self.t_end));
        }
        if self.dt > self.t_end {
            problems.push(format!("dt = {} exceeds t_end = {}", self.dt, self.t_end));
        }
        if self.picard_max == 0 {
            problems.push("picard_max must be at least 1".into());
        }
        if !(self.picard_tol > T::zero()) {
            problems.push(format!("picard_tol must be positive, got {}", self.picard_tol));
        }
        let c = &self.constants;
        if !(c.c1 > T::zero() && c.c1_prime > T::zero() && c.d > T::zero()) {
            problems.push("constants c1, c1_prime and d must be positive".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    /// `ceil(t_end / dt)`, ignoring a relative excess below `1e-9`.
    pub fn n_steps(&self) -> usize {
        let ratio = (self.t_end / self.dt).as_f64();
        ((ratio - 1e-9 * ratio.max(1.0)).ceil() as usize).max(1)
    }
}

/// Reusable operators and factorization orderings for repeated steps.
pub struct Stepper<'a, T> {
    spaces: &'a FunctionSpaces<T>,
    problem: &'a ProblemData<T>,
    config: SolverConfig<T>,
    mass_v: SparseOperator<T>,
    mass_w: SparseOperator<T>,
    divergence: SparseOperator<T>,
    /// Buoyancy coupling including `beta` and the sign convention.
    buoyancy: SparseOperator<T>,
    velocity_index: Vec<usize>,
    temperature_index: Vec<usize>,
    temperature_solver: DirectSolver,
    saddle_solver: DirectSolver,
}

fn free_index(n: usize, free: &[usize]) -> Vec<usize> {
    let mut index = vec![NONE; n];
    for (k, &i) in free.iter().enumerate() {
        index[i] = k;
    }
    index
}

fn norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|x| *x * *x).sum::<T>().sqrt()
}

fn relative_change<T: Real>(new: &[T], old: &[T]) -> T {
    let diff: T = new.iter().zip(old).map(|(a, b)| (*a - *b) * (*a - *b)).sum::<T>().sqrt();
    let scale = norm(new);
    if diff == T::zero() {
        T::zero()
    } else if scale > T::zero() {
        diff / scale
    } else {
        T::infinity()
    }
}

impl<'a, T: Real> Stepper<'a, T> {
    pub fn new(spaces: &'a FunctionSpaces<T>, problem: &'a ProblemData<T>, config: &SolverConfig<T>) -> Result<Self> {
        config.validate()?;
        if !(problem.beta >= T::zero()) {
            return Err(Error::Config(format!("beta must be nonnegative, got {}", problem.beta)));
        }
        let gravity = problem.gravity.clone();
        let buoyancy = assemble_buoyancy(spaces, problem.beta * problem.buoyancy_sign, move |x| gravity(x));
        if !buoyancy.all_finite() {
            return Err(Error::Input("gravity field is not finite on the mesh".into()));
        }
        Ok(Stepper {
            spaces,
            problem,
            config: *config,
            mass_v: assemble_mass(spaces, SpaceId::Velocity),
            mass_w: assemble_mass(spaces, SpaceId::Temperature),
            divergence: assemble_divergence_constraint(spaces),
            buoyancy,
            velocity_index: free_index(spaces.dim(SpaceId::Velocity), &spaces.velocity_free),
            temperature_index: free_index(spaces.dim(SpaceId::Temperature), &spaces.temperature_free),
            temperature_solver: DirectSolver::new(),
            saddle_solver: DirectSolver::with_trailing(spaces.dim(SpaceId::Head)),
        })
    }

    pub fn config(&self) -> &SolverConfig<T> {
        &self.config
    }

    pub fn divergence(&self) -> &SparseOperator<T> {
        &self.divergence
    }

    pub fn diagnostics(&self, state: &State<T>) -> Diagnostics<T> {
        let c = &self.problem.coefficients;
        compute_diagnostics(self.spaces, state, &self.divergence, &self.config.constants, c.gamma0, c.k0)
    }

    fn solve_temperature(&mut self, w_lin: &FieldVector<T>, z_lin: &FieldVector<T>, rhs: &[T]) -> Result<FieldVector<T>> {
        let spaces = self.spaces;
        let model = &self.problem.coefficients;
        let inv_dt = T::one() / self.config.dt;
        let k = self
            .mass_w
            .scaled(inv_dt)
            .add_scaled(T::one(), &assemble_temperature_diffusion(spaces, model, w_lin)?)?
            .add_scaled(T::one(), &assemble_temperature_advection(spaces, z_lin)?)?;
        let idx = &self.temperature_index;
        let n = spaces.temperature_free.len();
        let triplets: Vec<(usize, usize, T)> = k
            .iter()
            .filter(|&(i, j, _)| idx[i] != NONE && idx[j] != NONE)
            .map(|(i, j, v)| (idx[i], idx[j], v))
            .collect();
        let a = CscMatrix::from_triplets(n, n, &triplets);
        let b: Vec<T> = spaces.temperature_free.iter().map(|&i| rhs[i]).collect();
        let x = self.temperature_solver.solve(&a, &b, "temperature")?;
        let mut w = FieldVector::zeros(spaces, SpaceId::Temperature);
        for (&i, v) in spaces.temperature_free.iter().zip(x) {
            w.values[i] = v;
        }
        Ok(w)
    }

    fn solve_saddle(&mut self, w_new: &FieldVector<T>, z_lin: &FieldVector<T>, rhs: &[T]) -> Result<(FieldVector<T>, FieldVector<T>)> {
        let spaces = self.spaces;
        let model = &self.problem.coefficients;
        let inv_dt = T::one() / self.config.dt;
        let k = self
            .mass_v
            .scaled(inv_dt)
            .add_scaled(T::one(), &assemble_velocity_diffusion(spaces, model, w_new)?)?
            .add_scaled(T::one(), &assemble_velocity_advection(spaces, z_lin)?)?;
        let idx = &self.velocity_index;
        let nf = spaces.velocity_free.len();
        let nh = spaces.dim(SpaceId::Head);
        let mut triplets: Vec<(usize, usize, T)> = k
            .iter()
            .filter(|&(i, j, _)| idx[i] != NONE && idx[j] != NONE)
            .map(|(i, j, v)| (idx[i], idx[j], v))
            .collect();
        for (r, j, v) in self.divergence.iter() {
            if idx[j] != NONE {
                triplets.push((idx[j], nf + r, -v));
                triplets.push((nf + r, idx[j], -v));
            }
        }
        let a = CscMatrix::from_triplets(nf + nh, nf + nh, &triplets);
        let mut b: Vec<T> = spaces.velocity_free.iter().map(|&i| rhs[i]).collect();
        b.resize(nf + nh, T::zero());
        let x = self.saddle_solver.solve(&a, &b, "velocity-head")?;
        let mut z = FieldVector::zeros(spaces, SpaceId::Velocity);
        for (&i, v) in spaces.velocity_free.iter().zip(&x[..nf]) {
            z.values[i] = *v;
        }
        let p = FieldVector { space: SpaceId::Head, values: x[nf..].to_vec() };
        Ok((z, p))
    }

    /// One backward-Euler step with lagged coefficients and transport
    /// velocity, optionally iterated to a Picard fixed point.
    pub fn step(&mut self, state: &State<T>) -> Result<(State<T>, Diagnostics<T>)> {
        self.advance(state, state.t + self.config.dt)
    }

    /// Step from `state` to the new time level `t1`, one `dt` later.
    pub fn advance(&mut self, state: &State<T>, t1: T) -> Result<(State<T>, Diagnostics<T>)> {
        let spaces = self.spaces;
        spaces.check(&state.z, SpaceId::Velocity)?;
        spaces.check(&state.w, SpaceId::Temperature)?;
        let inv_dt = T::one() / self.config.dt;
        let p = self.problem;
        let f1 = assemble_velocity_load(spaces, |x, t| (p.f1)(x, t), |x, t| (p.v1)(x, t), t1)?;
        let f2 = assemble_temperature_load(spaces, |x, t| (p.f2)(x, t), |x, t| (p.v2)(x, t), t1)?;
        let rhs_w: Vec<T> = self
            .mass_w
            .matvec(&state.w.values)?
            .into_iter()
            .zip(&f2)
            .map(|(m, f)| m * inv_dt + *f)
            .collect();
        let mz: Vec<T> = self.mass_v.matvec(&state.z.values)?;

        let max_sweeps = if self.config.picard_enabled { self.config.picard_max } else { 1 };
        let (mut z_lin, mut w_lin) = (state.z.clone(), state.w.clone());
        let mut previous: Option<(FieldVector<T>, FieldVector<T>)> = None;
        let mut head = FieldVector::zeros(spaces, SpaceId::Head);
        let mut sweeps = 0;
        let mut converged = !self.config.picard_enabled;
        while sweeps < max_sweeps {
            sweeps += 1;
            let w_new = self.solve_temperature(&w_lin, &z_lin, &rhs_w)?;
            let gw = self.buoyancy.matvec(&w_new.values)?;
            let rhs_z: Vec<T> = mz.iter().zip(&f1).zip(&gw).map(|((m, f), g)| *m * inv_dt + *f - *g).collect();
            let (z_new, p_new) = self.solve_saddle(&w_new, &z_lin, &rhs_z)?;
            head = p_new;
            if let Some((z_prev, w_prev)) = &previous {
                let change = relative_change(&z_new.values, &z_prev.values).max(relative_change(&w_new.values, &w_prev.values));
                if change < self.config.picard_tol {
                    converged = true;
                }
            }
            z_lin = z_new.clone();
            w_lin = w_new.clone();
            previous = Some((z_new, w_new));
            if converged {
                break;
            }
        }
        let (z, w) = previous.expect("at least one sweep");
        if !(z.is_finite() && w.is_finite() && head.is_finite()) {
            return Err(Error::Divergence { stage: "time step" });
        }
        let next = State { t: t1, z, w, p: head };
        let mut diag = self.diagnostics(&next);
        diag.picard_iters = sweeps;
        diag.picard_converged = converged;
        Ok((next, diag))
    }
}

/// Single step from `state`.
pub fn step<T: Real>(
    spaces: &FunctionSpaces<T>,
    problem: &ProblemData<T>,
    config: &SolverConfig<T>,
    state: &State<T>,
) -> Result<(State<T>, Diagnostics<T>)> {
    Stepper::new(spaces, problem, config)?.step(state)
}

/// States and diagnostics at `t = 0, dt, 2 dt, ...`.
#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub states: Vec<State<T>>,
    pub diagnostics: Vec<Diagnostics<T>>,
}

/// Runs from `initial`, handing every state (the initial one included,
/// with index 0) to `observer`. Returns the final state.
pub fn run_from<T: Real>(
    spaces: &FunctionSpaces<T>,
    problem: &ProblemData<T>,
    config: &SolverConfig<T>,
    initial: State<T>,
    mut observer: impl FnMut(usize, &State<T>, &Diagnostics<T>) -> Result<()>,
) -> Result<State<T>> {
    let mut stepper = Stepper::new(spaces, problem, config)?;
    let diag = stepper.diagnostics(&initial);
    observer(0, &initial, &diag)?;
    let mut state = initial;
    let t0 = state.t;
    for n in 1..=config.n_steps() {
        // Times are n * dt rather than accumulated sums.
        let t1 = t0 + T::from_usize_lossy(n) * config.dt;
        let (next, diag) = stepper.advance(&state, t1).map_err(|e| e.at_step(n))?;
        observer(n, &next, &diag)?;
        state = next;
    }
    Ok(state)
}

/// Runs the problem from its interpolated initial data and keeps every state.
pub fn run<T: Real>(spaces: &FunctionSpaces<T>, problem: &ProblemData<T>, config: &SolverConfig<T>) -> Result<Trajectory<T>> {
    let initial = initialize_state(spaces, problem)?;
    let mut trajectory = Trajectory { states: Vec::new(), diagnostics: Vec::new() };
    run_from(spaces, problem, config, initial, |_, s, d| {
        trajectory.states.push(s.clone());
        trajectory.diagnostics.push(*d);
        Ok(())
    })?;
    Ok(trajectory)
}
