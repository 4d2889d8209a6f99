//! Radial parabolic solver for `∂ₜu = Lu + Ṽu`, `L = Δ + (∇μ/μ)·∇`, on a
//! truncated ball with a reflecting inner boundary, plus the exponential fit
//! `‖u(t)‖ ≤ M e^{ωt} ‖u₀‖`.
//!
//! The semi-discretization is the P1 weak form `M u' = -(K - P) u` with
//! lumped `M`, stiffness `K` from `∫u'v' dμ` and consistent potential `P`.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::forms::{mass, EffectivePotential, TestFunction};
use crate::quadrature::{sphere_area, RadialGrid};
use crate::spectral::{assemble_forms, lambda1, scan_grid, solve_tridiagonal, Boundary, TridiagonalForm};
use crate::weights::WeightSpec;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ImplicitEuler,
    CrankNicolson,
}

#[derive(Debug, Clone)]
pub struct EvolutionConfig<T> {
    pub spec: WeightSpec<T>,
    pub vt: EffectivePotential<T>,
    pub grid: RadialGrid<T>,
    pub dt: T,
    pub t_end: T,
    pub scheme: Scheme,
    pub u0: TestFunction<T>,
}

impl<T: Real> EvolutionConfig<T> {
    pub fn new(
        spec: WeightSpec<T>,
        vt: EffectivePotential<T>,
        grid: RadialGrid<T>,
        dt: T,
        t_end: T,
        scheme: Scheme,
        u0: TestFunction<T>,
    ) -> Result<Self> {
        let cfg = Self {
            spec,
            vt,
            grid,
            dt,
            t_end,
            scheme,
            u0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grid.r_min > T::zero()) {
            return Err(LabError::Config("evolution needs a truncated grid with r_min > 0".into()));
        }
        if !(self.dt > T::zero() && self.t_end > T::zero()) {
            return Err(LabError::Config(format!("dt and T must be positive, got {} and {}", self.dt, self.t_end)));
        }
        if self.dt > self.t_end {
            return Err(LabError::Config(format!("dt = {} exceeds T = {}", self.dt, self.t_end)));
        }
        if let Some(r) = self.grid.nodes.iter().find(|r| !(self.u0.value(**r) >= T::zero())) {
            return Err(LabError::Config(format!("u0 is negative (or NaN) at r = {r}")));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        let ratio = (self.t_end / self.dt).as_f64();
        (ratio - 1e-9).ceil().max(1.0) as usize
    }
}

/// `(1 - r/R)(r/R)^{0.1}` scaled to unit `L²_μ` norm on `[0, R]`.
pub fn default_u0<T: Real>(spec: &WeightSpec<T>, r_max: T) -> Result<TestFunction<T>> {
    let bump = TestFunction::polynomial_bump(T::lit(0.1), r_max)?;
    let grid = bump.natural_grid(512)?;
    let m = mass(&bump, spec, &grid)?;
    Ok(bump.scaled(m.sqrt().recip()))
}

/// Assembled system for a configuration.
#[derive(Debug, Clone)]
pub struct Evolver<T> {
    form: TridiagonalForm<T>,
    lumped: Vec<T>,
    dt: T,
    scheme: Scheme,
    nodes: usize,
}

/// `∫ φ_i dμ` for each node.
fn lumped_mass<T: Real>(spec: &WeightSpec<T>, grid: &RadialGrid<T>) -> Vec<T> {
    let sigma = sphere_area::<T>(spec.dimension);
    let nm1 = T::from_usize_lossy(spec.dimension - 1);
    let mut out = vec![T::zero(); grid.nodes.len()];
    for c in 0..grid.cells() {
        let (a, b) = (grid.nodes[c], grid.nodes[c + 1]);
        for (r, w) in grid.span_points(c, c + 1) {
            let dm = w * sigma * spec.mu(r) * r.powf(nm1);
            out[c] = out[c] + dm * (b - r) / (b - a);
            out[c + 1] = out[c + 1] + dm * (r - a) / (b - a);
        }
    }
    out
}

impl<T: Real> Evolver<T> {
    pub fn new(config: &EvolutionConfig<T>) -> Result<Self> {
        config.validate()?;
        let form = assemble_forms(&config.spec, |_| T::one(), Some(&config.vt), &config.grid, Boundary::NaturalLeftDirichletRight)?;
        let mut lumped = lumped_mass(&config.spec, &config.grid);
        lumped.pop();
        Ok(Self {
            form,
            lumped,
            dt: config.dt,
            scheme: config.scheme,
            nodes: config.grid.nodes.len(),
        })
    }

    /// `M + θ dt A` as (sub, diag, sup).
    fn system(&self, theta: T) -> (Vec<T>, Vec<T>) {
        let off = self.form.offdiag.iter().map(|a| theta * self.dt * *a).collect();
        let diag = self.form.diag.iter().zip(&self.lumped).map(|(a, m)| *m + theta * self.dt * *a).collect();
        (off, diag)
    }

    /// One time step on nodal values (the last node is the Dirichlet node).
    pub fn step(&self, state: &[T]) -> Result<Vec<T>> {
        if state.len() != self.nodes {
            return Err(LabError::Config(format!("state has {} values, grid has {} nodes", state.len(), self.nodes)));
        }
        if let Some(i) = state.iter().position(|v| !v.is_finite()) {
            return Err(LabError::Numerical(format!("non-finite state at node {i}")));
        }
        let u = &state[..self.nodes - 1];
        let m = u.len();
        let rhs: Vec<T> = match self.scheme {
            Scheme::ImplicitEuler => u.iter().zip(&self.lumped).map(|(v, mm)| *v * *mm).collect(),
            Scheme::CrankNicolson => {
                let h = T::lit(0.5) * self.dt;
                (0..m)
                    .map(|i| {
                        let mut au = self.form.diag[i] * u[i];
                        if i > 0 {
                            au = au + self.form.offdiag[i - 1] * u[i - 1];
                        }
                        if i + 1 < m {
                            au = au + self.form.offdiag[i] * u[i + 1];
                        }
                        self.lumped[i] * u[i] - h * au
                    })
                    .collect()
            }
        };
        let theta = match self.scheme {
            Scheme::ImplicitEuler => T::one(),
            Scheme::CrankNicolson => T::lit(0.5),
        };
        let (off, diag) = self.system(theta);
        let mut next = solve_tridiagonal(&off, &diag, &off, &rhs)
            .ok_or_else(|| LabError::Numerical("singular time-step system; reduce dt".into()))?;
        next.push(T::zero());
        Ok(next)
    }

    /// `(Σ m_i u_i²)^{1/2}`, the nodal-quadrature `L²_μ` norm.
    pub fn norm(&self, state: &[T]) -> T {
        state
            .iter()
            .zip(&self.lumped)
            .fold(T::zero(), |acc, (u, m)| acc + *m * *u * *u)
            .sqrt()
    }

    /// True when `M + dt A` is a Z-matrix and positive definite, so its
    /// inverse is entrywise nonnegative.
    pub fn implicit_system_is_m_matrix(&self) -> bool {
        if self.form.offdiag.iter().any(|a| *a > T::zero()) {
            return false;
        }
        let zero_off = vec![T::zero(); self.lumped.len().saturating_sub(1)];
        let lumped_form = TridiagonalForm {
            diag: self.form.diag.clone(),
            offdiag: self.form.offdiag.clone(),
            mass_diag: self.lumped.clone(),
            mass_offdiag: zero_off,
            grid: self.form.grid.clone(),
            boundary: self.form.boundary,
        };
        lumped_form.sturm_count(-self.dt.recip()) == 0
    }
}

/// One step of the configured scheme from nodal values.
pub fn step<T: Real>(state: &[T], config: &EvolutionConfig<T>) -> Result<Vec<T>> {
    Evolver::new(config)?.step(state)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolutionTrace<T> {
    pub times: Vec<T>,
    pub norms: Vec<T>,
    pub min_values: Vec<T>,
    #[serde(skip)]
    pub states: Option<Vec<Vec<T>>>,
}

impl<T: Real> EvolutionTrace<T> {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,norm,min_value\n");
        for ((t, n), m) in self.times.iter().zip(&self.norms).zip(&self.min_values) {
            s.push_str(&format!("{t:e},{n:e},{m:e}\n"));
        }
        s
    }
}

fn run_inner<T: Real>(config: &EvolutionConfig<T>, keep_states: bool) -> Result<EvolutionTrace<T>> {
    let ev = Evolver::new(config)?;
    let mut u: Vec<T> = config.grid.nodes.iter().map(|r| config.u0.value(*r)).collect();
    *u.last_mut().unwrap() = T::zero();
    let steps = config.steps();
    let min = |v: &[T]| v.iter().copied().fold(T::infinity(), T::min);
    let mut trace = EvolutionTrace {
        times: vec![T::zero()],
        norms: vec![ev.norm(&u)],
        min_values: vec![min(&u)],
        states: keep_states.then(|| vec![u.clone()]),
    };
    for k in 1..=steps {
        u = ev.step(&u)?;
        trace.times.push(config.dt * T::from_usize_lossy(k));
        trace.norms.push(ev.norm(&u));
        trace.min_values.push(min(&u));
        if let Some(states) = trace.states.as_mut() {
            states.push(u.clone());
        }
    }
    Ok(trace)
}

/// Iterates [`Evolver::step`] over `⌈T/dt⌉` steps, recording the norm and
/// the minimum nodal value after each.
pub fn run<T: Real>(config: &EvolutionConfig<T>) -> Result<EvolutionTrace<T>> {
    run_inner(config, false)
}

/// [`run`], also keeping every nodal state.
pub fn run_with_states<T: Real>(config: &EvolutionConfig<T>) -> Result<EvolutionTrace<T>> {
    run_inner(config, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentialFit<T> {
    #[serde(rename = "M")]
    pub m: T,
    pub omega: T,
    /// Largest deviation of `ln ‖u(t)‖` from the fitted line.
    pub residual: T,
}

/// Least-squares line through `(t, ln ‖u(t)‖)`; `M` is the smallest
/// constant (at least `1`) making the bound hold at every sample.
pub fn fit_exponential<T: Real>(trace: &EvolutionTrace<T>) -> Result<ExponentialFit<T>> {
    let n = trace.norms.len();
    if n < 8 || trace.times.len() != n {
        return Err(LabError::Config(format!("fit needs at least 8 samples, got {n}")));
    }
    if let Some(k) = trace.norms.iter().position(|v| !(*v > T::zero())) {
        return Err(LabError::Domain(format!("norm at sample {k} is {}", trace.norms[k])));
    }
    let nf = T::from_usize_lossy(n);
    let logs: Vec<T> = trace.norms.iter().map(|v| v.ln()).collect();
    let tm = trace.times.iter().fold(T::zero(), |a, b| a + *b) / nf;
    let lm = logs.iter().fold(T::zero(), |a, b| a + *b) / nf;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (t, l) in trace.times.iter().zip(&logs) {
        sxy = sxy + (*t - tm) * (*l - lm);
        sxx = sxx + (*t - tm) * (*t - tm);
    }
    if !(sxx > T::zero()) {
        return Err(LabError::Domain("all samples at the same time".into()));
    }
    let omega = sxy / sxx;
    let intercept = lm - omega * tm;
    let mut m = T::one();
    let mut residual = T::zero();
    for (t, l) in trace.times.iter().zip(&logs) {
        m = m.max((*l - logs[0] - omega * *t).exp());
        residual = residual.max((*l - intercept - omega * *t).abs());
    }
    Ok(ExponentialFit { m, omega, residual })
}

impl<T: Real> ExponentialFit<T> {
    /// `norms[k] ≤ M e^{ω t_k} norms[0] (1 + 1e-9)` at every sample.
    pub fn bounds(&self, trace: &EvolutionTrace<T>) -> bool {
        let slack = T::one() + T::lit(1e-9);
        trace
            .times
            .iter()
            .zip(&trace.norms)
            .all(|(t, v)| *v <= self.m * (self.omega * *t).exp() * trace.norms[0] * slack)
    }
}

/// True iff the minimum nodal value stayed above `-1e-12` at every step.
/// Only meaningful for implicit Euler, whose system matrix is an M-matrix
/// for `dt` below the stability limit; other schemes are refused.
pub fn positivity_check<T: Real>(trace: &EvolutionTrace<T>, config: &EvolutionConfig<T>) -> Result<bool> {
    if config.scheme != Scheme::ImplicitEuler {
        return Err(LabError::Config(
            "positivity is only guaranteed for implicit Euler; Crank-Nicolson can undershoot for large dt".into(),
        ));
    }
    let floor = -T::lit(1e-12);
    let from_states = trace
        .states
        .as_ref()
        .map(|s| s.iter().all(|u| u.iter().all(|v| *v >= floor)))
        .unwrap_or(true);
    Ok(from_states && trace.min_values.iter().all(|v| *v >= floor))
}

/// One level of a truncation ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LadderLevel<T> {
    pub r_min: T,
    pub n: usize,
    pub dt: T,
    pub lambda1: T,
    pub fit: ExponentialFit<T>,
}

/// Runs `Ṽ = c/r²` from the default datum on `(r_min, 1)` for each level.
/// The step is `min(dt, θ/|λ₁|)` with `λ₁` from the spectral module on the
/// same grid, and each level runs a fixed number of steps, so that fast
/// growth is resolved without overflowing.
pub fn growth_ladder<T: Real>(
    spec: &WeightSpec<T>,
    coefficient: T,
    refinements: &[(T, usize)],
    dt: T,
    steps: usize,
    theta: T,
    scheme: Scheme,
) -> Result<Vec<LadderLevel<T>>> {
    let vt = EffectivePotential::inverse_square(coefficient)?;
    let u0 = default_u0(spec, T::one())?;
    refinements
        .iter()
        .map(|&(r_min, n)| {
            let grid = scan_grid(r_min, T::one(), n)?;
            let l1 = lambda1(spec, &vt, &grid)?.lambda1;
            let dt_k = if l1.abs() > T::zero() { dt.min(theta / l1.abs()) } else { dt };
            let t_end = dt_k * T::from_usize_lossy(steps);
            let cfg = EvolutionConfig::new(*spec, vt, grid, dt_k, t_end, scheme, u0.clone())?;
            let fit = fit_exponential(&run(&cfg)?)?;
            Ok(LadderLevel {
                r_min,
                n,
                dt: dt_k,
                lambda1: l1,
                fit,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::graded_grid;
    use approx::assert_relative_eq;

    fn config(c: f64, n: usize, dt: f64, t_end: f64, scheme: Scheme) -> EvolutionConfig<f64> {
        let unit = WeightSpec::unit(3).unwrap();
        let grid = scan_grid(1e-3, 1.0, n).unwrap();
        let u0 = default_u0(&unit, 1.0).unwrap();
        EvolutionConfig::new(unit, EffectivePotential::inverse_square(c).unwrap(), grid, dt, t_end, scheme, u0).unwrap()
    }

    #[test]
    fn default_datum_has_unit_norm() {
        let unit = WeightSpec::unit(3).unwrap();
        let u0 = default_u0(&unit, 1.0).unwrap();
        let g = graded_grid(0.0, 1.0, 1024, 3.0).unwrap();
        assert_relative_eq!(mass(&u0, &unit, &g).unwrap(), 1.0, max_relative = 1e-9);
        let cfg = config(0.0, 512, 1e-3, 1e-2, Scheme::ImplicitEuler);
        let tr = run(&cfg).unwrap();
        assert!((tr.norms[0] - 1.0).abs() < 1e-2);
    }

    #[test]
    fn exact_exponential_fit() {
        let times: Vec<f64> = (0..20).map(|k| k as f64 * 0.05).collect();
        let trace = EvolutionTrace {
            norms: times.iter().map(|t| (2.0 * t).exp()).collect(),
            min_values: vec![0.0; 20],
            times,
            states: None,
        };
        let fit = fit_exponential(&trace).unwrap();
        assert_relative_eq!(fit.omega, 2.0, max_relative = 1e-12);
        assert_relative_eq!(fit.m, 1.0, max_relative = 1e-12);
        assert!(fit.residual < 1e-12);
        assert!(fit.bounds(&trace));
    }

    #[test]
    fn fit_preconditions() {
        let mut trace = EvolutionTrace {
            times: (0..10).map(|k| k as f64).collect(),
            norms: vec![1.0; 10],
            min_values: vec![0.0; 10],
            states: None,
        };
        trace.norms[4] = 0.0;
        assert!(matches!(fit_exponential(&trace), Err(LabError::Domain(_))));
        trace.times.truncate(5);
        trace.norms.truncate(5);
        assert!(matches!(fit_exponential(&trace), Err(LabError::Config(_))));
    }

    #[test]
    fn dissipative_without_potential() {
        for scheme in [Scheme::ImplicitEuler, Scheme::CrankNicolson] {
            for dt in [1e-4, 1e-2, 0.5] {
                let tr = run(&config(0.0, 256, dt, 1.0, scheme)).unwrap();
                assert!(tr.norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "{scheme:?} {dt}");
                let fit = fit_exponential(&EvolutionTrace {
                    times: tr.times.iter().copied().chain((1..8).map(|k| 1.0 + k as f64)).collect(),
                    norms: tr.norms.iter().copied().chain(std::iter::repeat_n(*tr.norms.last().unwrap(), 7)).collect(),
                    min_values: vec![0.0; tr.times.len() + 7],
                    states: None,
                })
                .unwrap();
                assert!(fit.omega <= 0.0);
            }
        }
    }

    #[test]
    fn implicit_euler_keeps_positivity() {
        let cfg = config(0.2, 256, 1e-3, 0.2, Scheme::ImplicitEuler);
        assert!(Evolver::new(&cfg).unwrap().implicit_system_is_m_matrix());
        let tr = run_with_states(&cfg).unwrap();
        assert!(positivity_check(&tr, &cfg).unwrap());
        assert_eq!(tr.states.as_ref().unwrap().len(), cfg.steps() + 1);
        let cn = config(0.2, 256, 1e-3, 0.2, Scheme::CrankNicolson);
        assert!(positivity_check(&tr, &cn).is_err());
    }

    #[test]
    fn zero_datum_stays_zero() {
        let mut cfg = config(0.2, 128, 1e-3, 0.02, Scheme::ImplicitEuler);
        cfg.u0 = TestFunction::zero(1.0);
        let tr = run_with_states(&cfg).unwrap();
        assert!(positivity_check(&tr, &cfg).unwrap());
        assert!(tr.states.unwrap().iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn step_error_order() {
        let unit = WeightSpec::unit(3).unwrap();
        let grid = graded_grid(0.1, 1.0, 64, 1.0).unwrap();
        let u0 = TestFunction::interval_bump(0.0, 1.0, 3.0).unwrap();
        let vt = EffectivePotential::inverse_square(0.2).unwrap();
        for (scheme, expected) in [(Scheme::ImplicitEuler, 4.0), (Scheme::CrankNicolson, 8.0)] {
            let diff = |dt: f64| {
                let big = EvolutionConfig::new(unit, vt, grid.clone(), dt, dt, scheme, u0.clone()).unwrap();
                let small = EvolutionConfig::new(unit, vt, grid.clone(), dt / 2.0, dt, scheme, u0.clone()).unwrap();
                let s0: Vec<f64> = grid.nodes.iter().map(|r| u0.value(*r)).collect();
                let one = step(&s0, &big).unwrap();
                let ev = Evolver::new(&small).unwrap();
                let two = ev.step(&ev.step(&s0).unwrap()).unwrap();
                one.iter().zip(&two).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            };
            let ratio = diff(2e-6) / diff(1e-6);
            assert!((ratio / expected - 1.0).abs() < 0.15, "{scheme:?}: {ratio}");
        }
    }

    #[test]
    fn growth_rate_matches_bottom_eigenvalue() {
        let cfg = config(0.2, 256, 1e-3, 0.5, Scheme::CrankNicolson);
        let fit = fit_exponential(&run(&cfg).unwrap()).unwrap();
        let l1 = lambda1(&cfg.spec, &cfg.vt, &cfg.grid).unwrap().lambda1;
        assert!((fit.omega / -l1 - 1.0).abs() < 0.05);
        assert!(fit.m >= 1.0);
    }

    #[test]
    fn configuration_errors() {
        let unit = WeightSpec::unit(3).unwrap();
        let u0 = default_u0(&unit, 1.0).unwrap();
        let vt = EffectivePotential::zero();
        let g = scan_grid(1e-3, 1.0, 64).unwrap();
        let g0 = graded_grid(0.0, 1.0, 64, 2.0).unwrap();
        assert!(EvolutionConfig::new(unit, vt, g0, 1e-3, 1.0, Scheme::ImplicitEuler, u0.clone()).is_err());
        assert!(EvolutionConfig::new(unit, vt, g.clone(), 2.0, 1.0, Scheme::ImplicitEuler, u0.clone()).is_err());
        assert!(EvolutionConfig::new(unit, vt, g.clone(), -1.0, 1.0, Scheme::ImplicitEuler, u0.clone()).is_err());
        let neg = u0.scaled(-1.0);
        assert!(EvolutionConfig::new(unit, vt, g.clone(), 1e-3, 1.0, Scheme::ImplicitEuler, neg).is_err());
        let cfg = EvolutionConfig::new(unit, vt, g, 1e-3, 1.0, Scheme::ImplicitEuler, u0).unwrap();
        assert_eq!(cfg.steps(), 1000);
        assert!(Evolver::new(&cfg).unwrap().step(&[0.0; 3]).is_err());
        assert!(Evolver::new(&cfg).unwrap().step(&vec![f64::NAN; 65]).is_err());
    }
}
