//! The fractional-step θ-scheme on a fixed mesh.
//!
//! Each step runs three implicit substeps of lengths θk, (1 − 2θ)k and θk,
//! alternating the weights (α₁, β₁) on the diffusion and (α₂, β₂) on the
//! forcing. Every intermediate state and its discrete Laplacian is kept in
//! the [`StepRecord`] so the estimators never have to re-solve.

use crate::error::{Error, Result};
use crate::estimators::compact_form_residual;
use crate::fem::{FeFunction, FeSpace, Samples, ScalarField, SparseMatrix};
use crate::solver::solve_spd_from;

/// Largest compact-form residual tolerated before a step is rejected.
pub const COMPACT_RESIDUAL_GUARD: f64 = 1e-6;

/// `t^0 < t^1 < … < t^N` together with the step lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
    steps: Vec<f64>,
}

impl TimeGrid {
    /// Strictly increasing times starting anywhere.
    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::Config("a time grid needs at least two points".into()));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("time grid must be finite and strictly increasing".into()));
        }
        let steps = times.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(TimeGrid { times, steps })
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn time(&self, n: usize) -> f64 {
        self.times[n]
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `k_n = t^n − t^{n−1}` for `1 ≤ n ≤ N`.
    pub fn step(&self, n: usize) -> f64 {
        self.steps[n - 1]
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap()
    }
}

/// `N` equal steps on `[0, T]`.
pub fn make_uniform_grid(n: usize, final_time: f64) -> Result<TimeGrid> {
    if n == 0 {
        return Err(Error::Config("number of time steps must be at least 1".into()));
    }
    if !(final_time > 0.0 && final_time.is_finite()) {
        return Err(Error::Config(format!("final time must be positive, got {final_time}")));
    }
    let k = final_time / n as f64;
    let mut times: Vec<f64> = (0..=n).map(|i| i as f64 * final_time / n as f64).collect();
    times[n] = final_time;
    Ok(TimeGrid {
        times,
        steps: vec![k; n],
    })
}

/// The classical default θ = 1 − √2/2.
pub fn default_theta() -> f64 {
    1.0 - std::f64::consts::FRAC_1_SQRT_2
}

/// `(1 − 2θ)/(1 − θ)`, which makes all substep matrices proportional.
pub fn glowinski_alpha(theta: f64) -> f64 {
    (1.0 - 2.0 * theta) / (1.0 - theta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeParams {
    theta: f64,
    alpha1: f64,
    alpha2: f64,
    grid: TimeGrid,
}

impl SchemeParams {
    pub fn new(theta: f64, alpha1: f64, alpha2: f64, grid: TimeGrid) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0 / 3.0) {
            return Err(Error::Config(format!("theta must lie in (0, 1/3), got {theta}")));
        }
        if !(alpha1 > 0.5 && alpha1 <= 1.0) {
            return Err(Error::Config(format!("alpha1 must lie in (1/2, 1], got {alpha1}")));
        }
        if !(alpha2 > 0.0 && alpha2 < 1.0) {
            return Err(Error::Config(format!("alpha2 must lie in (0, 1), got {alpha2}")));
        }
        Ok(SchemeParams {
            theta,
            alpha1,
            alpha2,
            grid,
        })
    }

    /// θ = 1 − √2/2 with α₁ = α₂ = (1 − 2θ)/(1 − θ).
    pub fn glowinski(grid: TimeGrid) -> Self {
        let theta = default_theta();
        let alpha = glowinski_alpha(theta);
        SchemeParams::new(theta, alpha, alpha, grid).expect("default parameters are valid")
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// θ̃ = 1 − 2θ.
    pub fn theta_tilde(&self) -> f64 {
        1.0 - 2.0 * self.theta
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn beta1(&self) -> f64 {
        1.0 - self.alpha1
    }

    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }

    pub fn beta2(&self) -> f64 {
        1.0 - self.alpha2
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// `[t^{n−1}, t^{n−1+θ}, t^{n−θ}, t^n]`.
    pub fn stage_times(&self, n: usize) -> [f64; 4] {
        let t0 = self.grid.time(n - 1);
        let k = self.grid.step(n);
        [t0, t0 + self.theta * k, t0 + (1.0 - self.theta) * k, self.grid.time(n)]
    }
}

/// Everything computed during step `n`. Arrays are ordered as the stage
/// times `t^{n−1}, t^{n−1+θ}, t^{n−θ}, t^n`.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub n: usize,
    pub k: f64,
    pub times: [f64; 4],
    pub u: [FeFunction; 4],
    /// `(−Δ_h) u` for each stage.
    pub lap: [FeFunction; 4],
    /// `P₀ f` at each stage time.
    pub proj_f: [FeFunction; 4],
    /// `f` at the degree-4 quadrature points for each stage time.
    pub f_samples: [Samples; 4],
    pub compact_residual: f64,
}

impl StepRecord {
    pub fn u_prev(&self) -> &FeFunction {
        &self.u[0]
    }

    pub fn u_theta(&self) -> &FeFunction {
        &self.u[1]
    }

    pub fn u_onemtheta(&self) -> &FeFunction {
        &self.u[2]
    }

    pub fn u_new(&self) -> &FeFunction {
        &self.u[3]
    }

    pub fn lap_prev(&self) -> &FeFunction {
        &self.lap[0]
    }

    pub fn lap_new(&self) -> &FeFunction {
        &self.lap[3]
    }

    pub fn t_prev(&self) -> f64 {
        self.times[0]
    }

    pub fn t_new(&self) -> f64 {
        self.times[3]
    }
}

/// State and forcing data at the start of a step, carried over from the
/// end of the previous one.
#[derive(Debug, Clone)]
struct Carry {
    n: usize,
    u: FeFunction,
    lap: FeFunction,
    load: Vec<f64>,
    proj_f: FeFunction,
    f_samples: Samples,
}

#[derive(Debug, Clone)]
struct SubstepMatrices {
    k: f64,
    /// `M/(θk) + α₁K`.
    outer: SparseMatrix,
    /// `M/(θ̃k) + β₁K`.
    inner: SparseMatrix,
}

/// Advances the discrete solution on one [`FeSpace`].
pub struct Stepper<'a> {
    space: &'a FeSpace,
    params: SchemeParams,
    f: &'a dyn ScalarField,
    matrices: Option<SubstepMatrices>,
    carry: Option<Carry>,
}

impl<'a> Stepper<'a> {
    pub fn new(space: &'a FeSpace, params: SchemeParams, f: &'a dyn ScalarField) -> Self {
        Stepper {
            space,
            params,
            f,
            matrices: None,
            carry: None,
        }
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn space(&self) -> &FeSpace {
        self.space
    }

    fn matrices(&mut self, k: f64) -> Result<SubstepMatrices> {
        if let Some(m) = &self.matrices {
            if m.k == k {
                return Ok(m.clone());
            }
        }
        let theta = self.params.theta;
        let (mass, stiff) = (self.space.mass(), self.space.stiffness());
        let m = SubstepMatrices {
            k,
            outer: SparseMatrix::linear_combination(1.0 / (theta * k), mass, self.params.alpha1, stiff)?,
            inner: SparseMatrix::linear_combination(
                1.0 / (self.params.theta_tilde() * k),
                mass,
                self.params.beta1(),
                stiff,
            )?,
        };
        self.matrices = Some(m.clone());
        Ok(m)
    }

    fn start_of_step(&mut self, prev: &FeFunction, n: usize) -> Result<Carry> {
        if let Some(c) = self.carry.take() {
            if c.n == n - 1 && c.u == *prev {
                return Ok(c);
            }
        }
        let t = self.params.grid.time(n - 1);
        let f_samples = self.space.sample(self.f, t);
        let load = self.space.load_from_samples(&f_samples);
        Ok(Carry {
            n: n - 1,
            u: prev.clone(),
            lap: self.space.discrete_laplacian(prev)?,
            proj_f: self.space.solve_mass(&load)?,
            load,
            f_samples,
        })
    }

    /// Solves `(M/(ck) + aK) x = M u/(ck) − bK u + load`.
    fn substep(&self, lhs: &SparseMatrix, scale: f64, b_weight: f64, u: &FeFunction, load: &[f64]) -> Result<FeFunction> {
        let mu = self.space.mass().mul_vec(u.coeffs());
        let ku = self.space.stiffness().mul_vec(u.coeffs());
        let rhs: Vec<f64> = (0..mu.len()).map(|i| scale * mu[i] - b_weight * ku[i] + load[i]).collect();
        let x = solve_spd_from(lhs, &rhs, u.coeffs().to_vec(), self.space.solver())?;
        self.space.function(x)
    }

    /// Computes `U^n` from `U^{n−1} = prev`.
    pub fn advance(&mut self, prev: &FeFunction, n: usize) -> Result<StepRecord> {
        if n == 0 || n > self.params.grid.n_steps() {
            return Err(Error::Usage(format!(
                "step index {n} outside 1..={}",
                self.params.grid.n_steps()
            )));
        }
        if prev.mesh_id() != self.space.mesh().id() || prev.len() != self.space.n_dofs() {
            return Err(Error::Usage("previous state does not belong to this space".into()));
        }
        let k = self.params.grid.step(n);
        let times = self.params.stage_times(n);
        let start = self.start_of_step(prev, n)?;
        let mats = self.matrices(k)?;
        let p = &self.params;
        let (theta, tt) = (p.theta, p.theta_tilde());
        let (a1, b1, a2, b2) = (p.alpha1, p.beta1(), p.alpha2, p.beta2());

        let samples: Vec<Samples> = times[1..].iter().map(|&t| self.space.sample(self.f, t)).collect();
        let loads: Vec<Vec<f64>> = samples.iter().map(|s| self.space.load_from_samples(s)).collect();
        let combine = |a: f64, x: &[f64], b: f64, y: &[f64]| -> Vec<f64> {
            x.iter().zip(y).map(|(x, y)| a * x + b * y).collect()
        };

        let u_a = self
            .substep(&mats.outer, 1.0 / (theta * k), b1, &start.u, &combine(a2, &loads[0], b2, &start.load))
            .map_err(|e| e.at_step("substep 1", n))?;
        let u_b = self
            .substep(&mats.inner, 1.0 / (tt * k), a1, &u_a, &combine(b2, &loads[1], a2, &loads[0]))
            .map_err(|e| e.at_step("substep 2", n))?;
        let u_n = self
            .substep(&mats.outer, 1.0 / (theta * k), b1, &u_b, &combine(a2, &loads[2], b2, &loads[1]))
            .map_err(|e| e.at_step("substep 3", n))?;

        let laps = [&u_a, &u_b, &u_n]
            .map(|u| self.space.discrete_laplacian(u).map_err(|e| e.at_step("discrete Laplacian", n)));
        let [lap_a, lap_b, lap_n] = laps;
        let (lap_a, lap_b, lap_n) = (lap_a?, lap_b?, lap_n?);
        let mut projs = Vec::with_capacity(3);
        for load in &loads {
            projs.push(self.space.solve_mass(load).map_err(|e| e.at_step("projection", n))?);
        }
        let [p_a, p_b, p_n]: [FeFunction; 3] = projs.try_into().unwrap();
        let [s_a, s_b, s_n]: [Samples; 3] = samples.try_into().unwrap();

        let mut record = StepRecord {
            n,
            k,
            times,
            u: [start.u, u_a, u_b, u_n],
            lap: [start.lap, lap_a, lap_b, lap_n],
            proj_f: [start.proj_f, p_a, p_b, p_n],
            f_samples: [start.f_samples, s_a, s_b, s_n],
            compact_residual: 0.0,
        };
        record.compact_residual = compact_form_residual(self.space, &record, &self.params);
        if !(record.compact_residual <= COMPACT_RESIDUAL_GUARD) {
            return Err(Error::Consistency(format!(
                "compact-form residual {:.3e} at step {n}",
                record.compact_residual
            )));
        }
        self.carry = Some(Carry {
            n,
            u: record.u[3].clone(),
            lap: record.lap[3].clone(),
            load: loads[2].clone(),
            proj_f: record.proj_f[3].clone(),
            f_samples: record.f_samples[3].clone(),
        });
        Ok(record)
    }

    /// Runs all steps from `U^0`, handing each record to `visit` and dropping it.
    pub fn run_with(&mut self, u0: &FeFunction, mut visit: impl FnMut(StepRecord) -> Result<()>) -> Result<FeFunction> {
        let mut u = u0.clone();
        for n in 1..=self.params.grid.n_steps() {
            let rec = self.advance(&u, n)?;
            u = rec.u[3].clone();
            visit(rec)?;
        }
        Ok(u)
    }

    /// Runs all steps from `U^0` and returns every record.
    pub fn run(&mut self, u0: &FeFunction) -> Result<Vec<StepRecord>> {
        let mut out = Vec::with_capacity(self.params.grid.n_steps());
        self.run_with(u0, |r| {
            out.push(r);
            Ok(())
        })?;
        Ok(out)
    }
}

/// `U^0 = P₀ u⁰`.
pub fn initial_state(space: &FeSpace, u0: &dyn ScalarField) -> Result<FeFunction> {
    space.l2_project(u0, 0.0)
}

/// One step of the scheme for the scalar problem `y' = −λ y`.
pub fn scalar_step(lambda: f64, y: f64, k: f64, theta: f64, alpha1: f64) -> f64 {
    let (beta1, tt) = (1.0 - alpha1, 1.0 - 2.0 * theta);
    let ya = (1.0 / (theta * k) - beta1 * lambda) * y / (1.0 / (theta * k) + alpha1 * lambda);
    let yb = (1.0 / (tt * k) - alpha1 * lambda) * ya / (1.0 / (tt * k) + beta1 * lambda);
    (1.0 / (theta * k) - beta1 * lambda) * yb / (1.0 / (theta * k) + alpha1 * lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_uniform_mesh;
    use crate::solver::SolverConfig;
    use std::f64::consts::PI;

    fn space(level: u32) -> FeSpace {
        FeSpace::new(build_uniform_mesh(level).unwrap(), SolverConfig::default()).unwrap()
    }

    #[test]
    fn uniform_grid() {
        let g = make_uniform_grid(4, 1.0).unwrap();
        assert_eq!(g.step(1), 0.25);
        assert_eq!(g.times(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = make_uniform_grid(1, 2.0).unwrap();
        assert_eq!(g.times(), &[0.0, 2.0]);
        let g = make_uniform_grid(7, 1.0).unwrap();
        assert!(((1..=7).map(|n| g.step(n)).sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(g.final_time(), 1.0);
        assert!(make_uniform_grid(0, 1.0).is_err());
        assert!(make_uniform_grid(3, 0.0).is_err());
        assert!(TimeGrid::from_times(vec![0.0, 0.5, 0.5]).is_err());
    }

    #[test]
    fn parameter_validation() {
        let g = make_uniform_grid(2, 1.0).unwrap();
        assert!(SchemeParams::new(0.4, 0.6, 0.5, g.clone()).is_err());
        assert!(SchemeParams::new(0.2, 0.5, 0.5, g.clone()).is_err());
        assert!(SchemeParams::new(0.2, 0.6, 1.0, g.clone()).is_err());
        let p = SchemeParams::glowinski(g);
        assert!((p.alpha1() - 0.585_786_437_626_905).abs() < 1e-12);
        assert!((p.theta_tilde() - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        let [t0, ta, tb, tn] = p.stage_times(2);
        assert!(t0 < ta && ta < tb && tb < tn);
        assert!((tb - t0 - (p.theta() + p.theta_tilde()) * 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_data_stays_zero() {
        let s = space(3);
        let zero = |_: f64, _: f64, _: f64| 0.0;
        let mut st = Stepper::new(&s, SchemeParams::glowinski(make_uniform_grid(4, 1.0).unwrap()), &zero);
        let recs = st.run(&s.zero()).unwrap();
        assert_eq!(recs.len(), 4);
        for r in &recs {
            assert!(r.u.iter().chain(&r.lap).chain(&r.proj_f).all(FeFunction::is_zero));
            assert_eq!(r.compact_residual, 0.0);
        }
    }

    #[test]
    fn single_step_matches_run() {
        let s = space(3);
        let f = |x: f64, y: f64, t: f64| (1.0 + t) * x * (1.0 - x) * y;
        let grid = make_uniform_grid(1, 0.5).unwrap();
        let mut a = Stepper::new(&s, SchemeParams::glowinski(grid.clone()), &f);
        let mut b = Stepper::new(&s, SchemeParams::glowinski(grid), &f);
        let direct = a.advance(&s.zero(), 1).unwrap();
        let run = b.run(&s.zero()).unwrap();
        assert_eq!(run.len(), 1);
        assert_eq!(run[0].u_new(), direct.u_new());
    }

    #[test]
    fn step_index_is_checked() {
        let s = space(2);
        let zero = |_: f64, _: f64, _: f64| 0.0;
        let mut st = Stepper::new(&s, SchemeParams::glowinski(make_uniform_grid(2, 1.0).unwrap()), &zero);
        assert!(matches!(st.advance(&s.zero(), 0), Err(Error::Usage(_))));
        assert!(matches!(st.advance(&s.zero(), 3), Err(Error::Usage(_))));
    }

    #[test]
    fn sine_mode_decay_follows_scalar_recursion() {
        // sin(πx)sin(πy) is not a discrete eigenvector, so compare loosely
        // against the continuous eigenvalue 2π²
        let s = space(5);
        let zero = |_: f64, _: f64, _: f64| 0.0;
        let u0 = s.interpolate(&|x: f64, y: f64, _t: f64| (PI * x).sin() * (PI * y).sin(), 0.0);
        let grid = make_uniform_grid(4, 0.25).unwrap();
        let params = SchemeParams::glowinski(grid);
        let mut st = Stepper::new(&s, params.clone(), &zero);
        let recs = st.run(&u0).unwrap();
        let mut y = s.l2_norm(&u0);
        for r in &recs {
            y = scalar_step(2.0 * PI * PI, y, r.k, params.theta(), params.alpha1());
            assert!((s.l2_norm(r.u_new()) / y - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn unforced_norm_is_nonincreasing() {
        let s = space(3);
        let zero = |_: f64, _: f64, _: f64| 0.0;
        let u0 = s.interpolate(&|x: f64, y: f64, _t: f64| x * y * (1.0 - x) * (1.0 - y) * (20.0 * x).cos(), 0.0);
        for n in [1, 3, 10] {
            let mut st = Stepper::new(&s, SchemeParams::glowinski(make_uniform_grid(n, 1.0).unwrap()), &zero);
            let mut last = s.l2_norm(&u0);
            for r in st.run(&u0).unwrap() {
                let now = s.l2_norm(r.u_new());
                assert!(now <= last * (1.0 + 1e-12));
                last = now;
            }
        }
    }

    #[test]
    fn scalar_step_is_second_order() {
        let (theta, alpha) = (default_theta(), glowinski_alpha(default_theta()));
        let err = |n: usize| {
            let k = 1.0 / n as f64;
            let mut y = 1.0;
            for _ in 0..n {
                y = scalar_step(3.0, y, k, theta, alpha);
            }
            (y - (-3.0f64).exp()).abs()
        };
        let eoc = (err(64) / err(128)).log2();
        assert!((eoc - 2.0).abs() < 0.05, "{eoc}");
    }
}
