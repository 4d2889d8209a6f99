//! Radial correctors `g`, their induced potentials
//! `W = -g''/g - g'/(r g)`, and the Bessel-equation criterion
//! `g'' + g'/r + W g = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::quadrature::RadialGrid;
use crate::weights::{HypothesisId, HypothesisReport, Verdict};
use crate::Real;

/// Anything that provides closed-form `(g, g', g'')` of a radial function.
pub trait RadialCorrector<T: Real> {
    fn derivatives(&self, r: T) -> Result<(T, T, T)>;

    /// `W = -g''/g - g'/(r g)`.
    fn potential_w(&self, r: T) -> Result<T> {
        let (g, g1, g2) = self.derivatives(r)?;
        if !(g > T::zero()) {
            return Err(LabError::Domain(format!("g(r) = {g} <= 0 at r = {r}")));
        }
        Ok(-g2 / g - g1 / (r * g))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectorKind {
    Unit,
    LogPower,
    OneMinusPower,
}

/// `g = 1`, `g = |log r|^β` (β ∈ (0,1)) or `g = 1 - r^β` (β ∈ (0,2]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrectorSpec<T> {
    pub kind: CorrectorKind,
    pub beta: T,
    #[serde(skip)]
    pub support: (T, T),
}

impl<T: Real> CorrectorSpec<T> {
    pub fn unit() -> Self {
        Self {
            kind: CorrectorKind::Unit,
            beta: T::zero(),
            support: (T::zero(), T::infinity()),
        }
    }

    pub fn log_power(beta: T) -> Result<Self> {
        Self::new(CorrectorKind::LogPower, beta)
    }

    pub fn one_minus_power(beta: T) -> Result<Self> {
        Self::new(CorrectorKind::OneMinusPower, beta)
    }

    pub fn new(kind: CorrectorKind, beta: T) -> Result<Self> {
        let spec = match kind {
            CorrectorKind::Unit => Self::unit(),
            _ => Self {
                kind,
                beta,
                support: (T::zero(), T::one()),
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let b = self.beta;
        match self.kind {
            CorrectorKind::Unit => Ok(()),
            CorrectorKind::LogPower if b > T::zero() && b < T::one() => Ok(()),
            CorrectorKind::OneMinusPower if b > T::zero() && b <= T::lit(2.0) => Ok(()),
            CorrectorKind::LogPower => Err(LabError::Config(format!("log_power needs beta in (0,1), got {b}"))),
            CorrectorKind::OneMinusPower => {
                Err(LabError::Config(format!("one_minus_power needs beta in (0,2], got {b}")))
            }
        }
    }

    pub fn is_unit(&self) -> bool {
        self.kind == CorrectorKind::Unit
    }

    pub fn in_support(&self, r: T) -> bool {
        r > self.support.0 && r < self.support.1
    }

    /// Exponent `p` with `W(r) ~ r^p` as `r → 0`, ignoring logarithms.
    pub fn w_local_power(&self) -> Option<T> {
        match self.kind {
            CorrectorKind::Unit => None,
            CorrectorKind::LogPower => Some(T::lit(-2.0)),
            CorrectorKind::OneMinusPower => Some(self.beta - T::lit(2.0)),
        }
    }
}

/// Closed-form `(g, g', g'')`.
pub fn eval_g<T: Real>(spec: &CorrectorSpec<T>, r: T) -> Result<(T, T, T)> {
    if !spec.in_support(r) {
        return Err(LabError::Domain(format!(
            "corrector evaluated at r = {r} outside the open support ({}, {})",
            spec.support.0, spec.support.1
        )));
    }
    let b = spec.beta;
    Ok(match spec.kind {
        CorrectorKind::Unit => (T::one(), T::zero(), T::zero()),
        CorrectorKind::LogPower => {
            let l = -r.ln();
            let g = l.powf(b);
            let g1 = -b * l.powf(b - T::one()) / r;
            let g2 = b * l.powf(b - T::lit(2.0)) * ((b - T::one()) + l) / (r * r);
            (g, g1, g2)
        }
        CorrectorKind::OneMinusPower => {
            let rb = r.powf(b);
            (
                T::one() - rb,
                -b * r.powf(b - T::one()),
                -b * (b - T::one()) * r.powf(b - T::lit(2.0)),
            )
        }
    })
}

/// `W(r)` from its closed form.
pub fn eval_w<T: Real>(spec: &CorrectorSpec<T>, r: T) -> Result<T> {
    if !spec.in_support(r) {
        return Err(LabError::Domain(format!("W evaluated at r = {r} outside the support")));
    }
    let b = spec.beta;
    Ok(match spec.kind {
        CorrectorKind::Unit => T::zero(),
        CorrectorKind::LogPower => {
            let l = r.ln();
            b * (T::one() - b) / (r * r * l * l)
        }
        CorrectorKind::OneMinusPower => b * b / (r.powf(T::lit(2.0) - b) * (T::one() - r.powf(b))),
    })
}

impl<T: Real> RadialCorrector<T> for CorrectorSpec<T> {
    fn derivatives(&self, r: T) -> Result<(T, T, T)> {
        eval_g(self, r)
    }

    fn potential_w(&self, r: T) -> Result<T> {
        eval_w(self, r)
    }
}

/// Closed forms of `V` other than `v_fraction · W`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplicitPotential<T> {
    /// `V = β² r^{β-2}` for `g = 1 - r^β`.
    BetaPower,
    /// `V = c / (r² log² r)`; with `c > 1/4` this is not dominated by any
    /// admissible `W` and only serves supercritical probes.
    LogKernel(T),
}

/// Correction potential `V` with `0 <= V <= W`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialSpec<T> {
    pub corrector: CorrectorSpec<T>,
    pub v_fraction: T,
    pub explicit_form: Option<ExplicitPotential<T>>,
}

impl<T: Real> PotentialSpec<T> {
    /// `V = fraction · W`.
    pub fn fraction_of_w(corrector: CorrectorSpec<T>, v_fraction: T) -> Result<Self> {
        if !(v_fraction >= T::zero() && v_fraction <= T::one()) {
            return Err(LabError::Config(format!("v_fraction must lie in [0,1], got {v_fraction}")));
        }
        Ok(Self {
            corrector,
            v_fraction,
            explicit_form: None,
        })
    }

    /// `V = W`.
    pub fn full(corrector: CorrectorSpec<T>) -> Self {
        Self {
            corrector,
            v_fraction: T::one(),
            explicit_form: None,
        }
    }

    /// `V = β² r^{β-2}` under `g = 1 - r^β`.
    pub fn beta_power(beta: T) -> Result<Self> {
        Ok(Self {
            corrector: CorrectorSpec::one_minus_power(beta)?,
            v_fraction: T::one(),
            explicit_form: Some(ExplicitPotential::BetaPower),
        })
    }

    /// `V = c / (r² log² r)` on `(0, 1)`.
    pub fn log_kernel(coefficient: T) -> Result<Self> {
        if !(coefficient >= T::zero()) {
            return Err(LabError::Config(format!("log kernel coefficient must be >= 0, got {coefficient}")));
        }
        Ok(Self {
            corrector: CorrectorSpec::log_power(T::lit(0.5))?,
            v_fraction: T::one(),
            explicit_form: Some(ExplicitPotential::LogKernel(coefficient)),
        })
    }

    pub fn eval(&self, r: T) -> Result<T> {
        match self.explicit_form {
            Some(ExplicitPotential::BetaPower) => {
                let b = self.corrector.beta;
                Ok(self.v_fraction * b * b * r.powf(b - T::lit(2.0)))
            }
            Some(ExplicitPotential::LogKernel(c)) => {
                if !self.corrector.in_support(r) {
                    return Err(LabError::Domain(format!("log kernel evaluated at r = {r} outside (0,1)")));
                }
                let l = r.ln();
                Ok(self.v_fraction * c / (r * r * l * l))
            }
            None => Ok(self.v_fraction * eval_w(&self.corrector, r)?),
        }
    }

    /// Exponent of `V ~ r^p` at the origin (logarithms ignored).
    pub fn local_power(&self) -> Option<T> {
        match self.explicit_form {
            Some(ExplicitPotential::BetaPower) => Some(self.corrector.beta - T::lit(2.0)),
            Some(ExplicitPotential::LogKernel(_)) => Some(T::lit(-2.0)),
            None => self.corrector.w_local_power(),
        }
    }

    /// `k` in `V ~ r^p |ln r|^{-k}` at the origin.
    pub fn local_log_power(&self) -> u32 {
        match (self.explicit_form, self.corrector.kind) {
            (Some(ExplicitPotential::LogKernel(_)), _) | (None, CorrectorKind::LogPower) => 2,
            _ => 0,
        }
    }

    /// Pointwise `0 <= V <= W` on the grid nodes inside the support.
    pub fn check_h3(&self, grid: &RadialGrid<T>) -> Result<bool> {
        for r in grid.positive_nodes().filter(|r| self.corrector.in_support(*r)) {
            let v = self.eval(r)?;
            let w = eval_w(&self.corrector, r)?;
            if v < T::zero() || v > w * (T::one() + T::lit(1e-12)) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// `(g' r)' <= 0` at the nodes, and `g'(r) r` non-increasing across them.
pub fn check_h2<T: Real, G: RadialCorrector<T> + ?Sized>(g: &G, grid: &RadialGrid<T>) -> HypothesisReport<T> {
    let mut worst = (T::zero(), T::infinity());
    let mut prev_flux: Option<T> = None;
    let mut monotone = true;
    for r in grid.positive_nodes() {
        let Ok((gv, g1, g2)) = g.derivatives(r) else { continue };
        if !(gv > T::zero()) {
            continue;
        }
        let d = g2 * r + g1;
        let scale = (g2 * r).abs() + g1.abs();
        let margin = -d;
        let tol = T::lit(1e-12) * scale;
        if margin + tol < worst.1 {
            worst = (r, margin);
        }
        let flux = g1 * r;
        if let Some(p) = prev_flux {
            if flux > p + T::lit(1e-12) * (p.abs() + flux.abs()) {
                monotone = false;
                if margin < worst.1 {
                    worst = (r, margin.min(p - flux));
                }
            }
        }
        prev_flux = Some(flux);
    }
    if worst.1 == T::infinity() {
        worst.1 = T::zero();
    }
    let holds = monotone && worst.1 >= -T::lit(1e-12) * (T::one() + worst.1.abs());
    HypothesisReport {
        hypothesis_id: HypothesisId::H2ii,
        verdict: if holds { Verdict::Holds } else { Verdict::Fails },
        worst_point: worst.0,
        worst_margin: worst.1,
        refinement_trace: Vec::new(),
    }
}

/// Potential for the Bessel-type equation `g'' + g'/r + W g = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BesselPotential<T> {
    Constant(T),
    Corrector(PotentialSpec<T>),
}

impl<T: Real> BesselPotential<T> {
    pub fn eval(&self, r: T) -> Result<T> {
        match self {
            BesselPotential::Constant(c) => Ok(*c),
            BesselPotential::Corrector(p) => p.eval(r),
        }
    }

    pub fn tag(&self) -> String {
        match self {
            BesselPotential::Constant(c) => format!("W = {c}"),
            BesselPotential::Corrector(p) => format!(
                "W = {} x {:?}(beta = {}){}",
                p.v_fraction,
                p.corrector.kind,
                p.corrector.beta,
                match p.explicit_form {
                    Some(ExplicitPotential::BetaPower) => " beta-power".to_string(),
                    Some(ExplicitPotential::LogKernel(c)) => format!(" log-kernel {c}"),
                    None => String::new(),
                }
            ),
        }
    }
}

/// Numerical solution of the Bessel-type equation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BesselSolution<T> {
    pub w_tag: String,
    pub nodes: Vec<T>,
    pub values: Vec<T>,
    pub slopes: Vec<T>,
    pub first_zero: Option<T>,
    pub positive_on: (T, T),
}

impl<T: Real> BesselSolution<T> {
    /// Two-column CSV `r,g`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,g\n");
        for (r, g) in self.nodes.iter().zip(&self.values) {
            s.push_str(&format!("{r:e},{g:e}\n"));
        }
        s
    }
}

fn bessel_rhs<T: Real>(w: &BesselPotential<T>, r: T, y: (T, T)) -> Result<(T, T)> {
    Ok((y.1, -y.1 / r - w.eval(r)? * y.0))
}

fn rk4_step<T: Real>(w: &BesselPotential<T>, r: T, y: (T, T), h: T) -> Result<(T, T)> {
    let half = T::lit(0.5);
    let k1 = bessel_rhs(w, r, y)?;
    let k2 = bessel_rhs(w, r + half * h, (y.0 + half * h * k1.0, y.1 + half * h * k1.1))?;
    let k3 = bessel_rhs(w, r + half * h, (y.0 + half * h * k2.0, y.1 + half * h * k2.1))?;
    let k4 = bessel_rhs(w, r + h, (y.0 + h * k3.0, y.1 + h * k3.1))?;
    let six = T::lit(6.0);
    Ok((
        y.0 + h / six * (k1.0 + T::lit(2.0) * k2.0 + T::lit(2.0) * k3.0 + k4.0),
        y.1 + h / six * (k1.1 + T::lit(2.0) * k2.1 + T::lit(2.0) * k3.1 + k4.1),
    ))
}

/// Integrates `g'' = -g'/r - W g` from `r0` to `r_end` with `n_steps` RK4
/// steps. From `r0 = 0` the first step uses the regular series
/// `g(h) = g0 (1 - W(0) h²/4)`, `g'(h) = -g0 W(0) h/2`; then `dg0` must be 0.
/// The first sign change is refined by bisection on the step length to an
/// absolute tolerance of `1e-10`.
pub fn solve_bessel<T: Real>(
    w: &BesselPotential<T>,
    r0: T,
    g0: T,
    dg0: T,
    r_end: T,
    n_steps: usize,
) -> Result<BesselSolution<T>> {
    if n_steps < 16 {
        return Err(LabError::Config(format!("solve_bessel needs n_steps >= 16, got {n_steps}")));
    }
    if !(r0 >= T::zero()) || !(r_end > r0) {
        return Err(LabError::Config(format!("need 0 <= r0 < r_end, got ({r0}, {r_end})")));
    }
    if r0 == T::zero() && dg0 != T::zero() {
        return Err(LabError::Config("a regular start at r = 0 requires g'(0) = 0".into()));
    }
    let h = (r_end - r0) / T::from_usize_lossy(n_steps);
    let mut nodes = Vec::with_capacity(n_steps + 1);
    let mut values = Vec::with_capacity(n_steps + 1);
    let mut slopes = Vec::with_capacity(n_steps + 1);
    nodes.push(r0);
    values.push(g0);
    slopes.push(dg0);

    let mut y = (g0, dg0);
    let mut first_zero = None;
    let tol = T::lit(1e-10);
    for k in 0..n_steps {
        let r = r0 + h * T::from_usize_lossy(k);
        let next = if k == 0 && r0 == T::zero() {
            let w0 = w.eval(T::zero())?;
            (g0 * (T::one() - w0 * h * h / T::lit(4.0)), -g0 * w0 * h / T::lit(2.0))
        } else {
            rk4_step(w, r, y, h)?
        };
        if !(next.0.is_finite() && next.1.is_finite()) {
            return Err(LabError::Numerical(format!("Bessel integration blew up at r = {}", r + h)));
        }
        if first_zero.is_none() && y.0 > T::zero() && next.0 <= T::zero() {
            first_zero = Some(if k == 0 && r0 == T::zero() {
                // Series start: g(t) = g0 (1 - W(0) t²/4) vanishes at 2/√W(0).
                T::lit(2.0) / w.eval(T::zero())?.sqrt()
            } else {
                let (mut lo, mut hi) = (T::zero(), h);
                while hi - lo > tol {
                    let mid = T::lit(0.5) * (lo + hi);
                    if rk4_step(w, r, y, mid)?.0 > T::zero() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                r + T::lit(0.5) * (lo + hi)
            });
        }
        y = next;
        nodes.push(if k + 1 == n_steps { r_end } else { r + h });
        values.push(y.0);
        slopes.push(y.1);
    }
    let positive_on = (r0, first_zero.unwrap_or(r_end));
    Ok(BesselSolution {
        w_tag: w.tag(),
        nodes,
        values,
        slopes,
        first_zero,
        positive_on,
    })
}
