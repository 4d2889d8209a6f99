//! Left/right decompositions of the weighted Hardy-type inequalities, the
//! Rayleigh quotient of `-(L + Ṽ)`, the multiplication-operator ratio and the
//! pointwise identities behind the vector-field argument.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::correctors::{PotentialSpec, RadialCorrector};
use crate::error::{LabError, Result};
use crate::quadrature::{graded_grid, integrate_radial_with, IntegralValue, QuadOptions, RadialGrid};
use crate::weights::{AdmissibleConstants, WeightSpec};
use crate::Real;

type RadialFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    CutoffPower,
    PolynomialBump,
    Custom,
}

/// Radial test function with closed-form derivative, vanishing at the
/// outer end of its support.
#[derive(Clone)]
pub struct TestFunction<T> {
    profile: RadialFn<T>,
    derivative: RadialFn<T>,
    pub support: (T, T),
    pub family_tag: FamilyTag,
    /// `φ(r) ~ r^a` as `r → 0` when the support reaches the origin.
    pub origin_power: Option<T>,
    pub label: String,
}

impl<T: fmt::Debug> fmt::Debug for TestFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("label", &self.label)
            .field("support", &self.support)
            .field("family_tag", &self.family_tag)
            .finish()
    }
}

fn smoothstep_cutoff<T: Real>(r: T, a: T, b: T) -> (T, T) {
    if r <= a {
        return (T::one(), T::zero());
    }
    if r >= b {
        return (T::zero(), T::zero());
    }
    let w = b - a;
    let s = (r - a) / w;
    let three = T::lit(3.0);
    let two = T::lit(2.0);
    let six = T::lit(6.0);
    (T::one() - three * s * s + two * s * s * s, (six * s * s - six * s) / w)
}

impl<T: Real> TestFunction<T> {
    pub fn custom<F, D>(profile: F, derivative: D, support: (T, T), origin_power: Option<T>, label: &str) -> Self
    where
        F: Fn(T) -> T + Send + Sync + 'static,
        D: Fn(T) -> T + Send + Sync + 'static,
    {
        Self {
            profile: Arc::new(profile),
            derivative: Arc::new(derivative),
            support,
            family_tag: FamilyTag::Custom,
            origin_power,
            label: label.to_string(),
        }
    }

    pub fn zero(support_end: T) -> Self {
        let mut f = Self::custom(|_| T::zero(), |_| T::zero(), (T::zero(), support_end), None, "zero");
        f.origin_power = None;
        f
    }

    /// `φ_ε(r) = r^{-α₀+ε} η(r)` with `η = 1` on `[0, a]` and a C¹ cubic
    /// step down to `0` at `b`.
    pub fn cutoff_power(alpha0: T, eps: T, a: T, b: T) -> Result<Self> {
        if !(a > T::zero() && b > a) {
            return Err(LabError::Config(format!("cutoff needs 0 < a < b, got ({a}, {b})")));
        }
        let e = eps - alpha0;
        let profile = move |r: T| {
            if r <= T::zero() || r >= b {
                return T::zero();
            }
            r.powf(e) * smoothstep_cutoff(r, a, b).0
        };
        let derivative = move |r: T| {
            if r <= T::zero() || r >= b {
                return T::zero();
            }
            let (eta, deta) = smoothstep_cutoff(r, a, b);
            let base = if e == T::zero() { T::zero() } else { e * r.powf(e - T::one()) * eta };
            base + r.powf(e) * deta
        };
        Ok(Self {
            profile: Arc::new(profile),
            derivative: Arc::new(derivative),
            support: (T::zero(), b),
            family_tag: FamilyTag::CutoffPower,
            origin_power: Some(e),
            label: format!("cutoff_power(eps={eps},a={a},b={b})"),
        })
    }

    /// `φ(r) = (1 - r/b)(r/b)^p` on `[0, b]`, `p >= 0`.
    pub fn polynomial_bump(p: T, b: T) -> Result<Self> {
        if !(p >= T::zero() && b > T::zero()) {
            return Err(LabError::Config(format!("polynomial bump needs p >= 0, b > 0, got ({p}, {b})")));
        }
        let profile = move |r: T| {
            if r < T::zero() || r >= b {
                return T::zero();
            }
            let x = r / b;
            (T::one() - x) * x.powf(p)
        };
        let derivative = move |r: T| {
            if r < T::zero() || r >= b {
                return T::zero();
            }
            let x = r / b;
            let grow = if p == T::zero() { T::zero() } else { (T::one() - x) * p * x.powf(p - T::one()) };
            (grow - x.powf(p)) / b
        };
        Ok(Self {
            profile: Arc::new(profile),
            derivative: Arc::new(derivative),
            support: (T::zero(), b),
            family_tag: FamilyTag::PolynomialBump,
            origin_power: Some(p),
            label: format!("polynomial_bump(p={p},b={b})"),
        })
    }

    /// `φ(r) = [4(r-a)(b-r)/(b-a)²]^p` on `[a, b]`, `p >= 2`.
    pub fn interval_bump(a: T, b: T, p: T) -> Result<Self> {
        if !(a >= T::zero() && b > a && p >= T::lit(2.0)) {
            return Err(LabError::Config(format!("interval bump needs 0 <= a < b, p >= 2, got ({a}, {b}, {p})")));
        }
        let c = (b - a) * (b - a) / T::lit(4.0);
        let profile = move |r: T| {
            if r <= a || r >= b {
                return T::zero();
            }
            ((r - a) * (b - r) / c).powf(p)
        };
        let derivative = move |r: T| {
            if r <= a || r >= b {
                return T::zero();
            }
            let u = (r - a) * (b - r) / c;
            let du = ((b - r) - (r - a)) / c;
            p * u.powf(p - T::one()) * du
        };
        Ok(Self {
            profile: Arc::new(profile),
            derivative: Arc::new(derivative),
            support: (a, b),
            family_tag: FamilyTag::PolynomialBump,
            origin_power: None,
            label: format!("interval_bump(a={a},b={b},p={p})"),
        })
    }

    /// `c φ`.
    pub fn scaled(&self, c: T) -> Self {
        let (p, d) = (self.profile.clone(), self.derivative.clone());
        Self {
            profile: Arc::new(move |r| c * p(r)),
            derivative: Arc::new(move |r| c * d(r)),
            support: self.support,
            family_tag: self.family_tag,
            origin_power: self.origin_power,
            label: format!("{c}*{}", self.label),
        }
    }

    #[inline]
    pub fn value(&self, r: T) -> T {
        (self.profile)(r)
    }

    #[inline]
    pub fn deriv(&self, r: T) -> T {
        (self.derivative)(r)
    }

    /// Grid adapted to the support: graded toward the origin (`q = 3`) when
    /// the support reaches it, uniform otherwise.
    pub fn natural_grid(&self, n: usize) -> Result<RadialGrid<T>> {
        if self.support.0 == T::zero() {
            graded_grid(T::zero(), self.support.1, n, T::lit(3.0))
        } else {
            graded_grid(self.support.0, self.support.1, n, T::one())
        }
    }

    fn derivative_power(&self) -> Option<T> {
        self.origin_power.map(|a| if a == T::zero() { T::zero() } else { a - T::one() })
    }
}

/// `Ṽ(r) = c / r² + V(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectivePotential<T> {
    pub hardy_coefficient: T,
    pub correction: Option<PotentialSpec<T>>,
}

impl<T: Real> EffectivePotential<T> {
    pub fn inverse_square(c: T) -> Result<Self> {
        Self::new(c, None)
    }

    pub fn new(hardy_coefficient: T, correction: Option<PotentialSpec<T>>) -> Result<Self> {
        if !(hardy_coefficient >= T::zero()) {
            return Err(LabError::Config(format!(
                "inverse-square coefficient must be >= 0, got {hardy_coefficient}"
            )));
        }
        Ok(Self {
            hardy_coefficient,
            correction,
        })
    }

    pub fn zero() -> Self {
        Self {
            hardy_coefficient: T::zero(),
            correction: None,
        }
    }

    pub fn eval(&self, r: T) -> Result<T> {
        let mut v = if self.hardy_coefficient == T::zero() {
            T::zero()
        } else {
            self.hardy_coefficient / (r * r)
        };
        if let Some(p) = &self.correction {
            v = v + p.eval(r)?;
        }
        Ok(v)
    }

    /// Exponent of the most singular term at the origin.
    /// Log exponent of the most singular term (see [`PotentialSpec::local_log_power`]).
    pub fn local_log_power(&self) -> u32 {
        match self.correction {
            Some(c) if self.hardy_coefficient == T::zero() => c.local_log_power(),
            _ => 0,
        }
    }

    pub fn local_power(&self) -> Option<T> {
        let inv = if self.hardy_coefficient > T::zero() { Some(T::lit(-2.0)) } else { None };
        match (inv, self.correction.and_then(|c| c.local_power())) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityId {
    GlobalWiHi,
    LocalLog,
    LocalBeta,
    Caffarelli,
}

/// `lhs_hardy + lhs_correction <= rhs_gradient + rhs_k1`, with the gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardyReport<T> {
    pub lhs_hardy_term: T,
    pub lhs_correction_term: T,
    pub rhs_gradient_term: T,
    pub rhs_k1_term: T,
    pub slack: T,
    pub inequality_id: InequalityId,
}

impl<T: Real> HardyReport<T> {
    fn new(id: InequalityId, hardy: T, correction: T, gradient: T, k1: T) -> Self {
        Self {
            lhs_hardy_term: hardy,
            lhs_correction_term: correction,
            rhs_gradient_term: gradient,
            rhs_k1_term: k1,
            slack: gradient + k1 - hardy - correction,
            inequality_id: id,
        }
    }

    pub fn rhs(&self) -> T {
        self.rhs_gradient_term + self.rhs_k1_term
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{:e},{:e},{:e},{:e},{:e}",
            self.lhs_hardy_term, self.lhs_correction_term, self.rhs_gradient_term, self.rhs_k1_term, self.slack
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityId {
    DivFExpansion,
    LaplacianFExpansion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertificateReport<T> {
    pub max_pointwise_residual: T,
    pub identity_id: IdentityId,
    pub nodes_checked: usize,
    /// Finite-difference cross-check of `div F` (central step `1e-5`).
    pub fd_residual: Option<T>,
}

/// What kind of radial factor multiplies `μ r^{N-1}` in an integrand; fixes
/// the analytic tail exponent at the origin.
#[derive(Clone, Copy)]
enum Factor<T> {
    /// `φ² k(r)` with `k ~ r^p |ln r|^{-j}`.
    PhiSquared(T, u32),
    GradSquared,
}

fn tail_exponent<T: Real>(phi: &TestFunction<T>, spec: &WeightSpec<T>, factor: Factor<T>) -> Option<T> {
    let base = T::from_usize_lossy(spec.dimension - 1) + spec.local_power();
    match factor {
        Factor::PhiSquared(kernel_power, _) => phi.origin_power.map(|a| T::lit(2.0) * a + kernel_power + base),
        Factor::GradSquared => phi.derivative_power().map(|d| T::lit(2.0) * d + base),
    }
}

fn integral<T: Real, H: Fn(T) -> T>(
    h: H,
    phi: &TestFunction<T>,
    spec: &WeightSpec<T>,
    grid: &RadialGrid<T>,
    factor: Factor<T>,
) -> Result<IntegralValue<T>> {
    let opts = QuadOptions {
        tail_power: if grid.r_min == T::zero() { tail_exponent(phi, spec, factor) } else { None },
        tail_log_power: match factor {
            Factor::PhiSquared(_, j) => j,
            Factor::GradSquared => 0,
        },
        ..QuadOptions::default()
    };
    integrate_radial_with(h, spec, grid, opts)
}

/// `σ_{N-1} ∫ φ² μ r^{N-1} dr`.
pub fn mass<T: Real>(phi: &TestFunction<T>, spec: &WeightSpec<T>, grid: &RadialGrid<T>) -> Result<T> {
    Ok(integral(|r| phi.value(r).powi(2), phi, spec, grid, Factor::PhiSquared(T::zero(), 0))?.value)
}

/// `∫ φ² k(r) dμ` for a kernel that must be evaluated only where `φ ≠ 0`.
fn kernel_term<T: Real, K: Fn(T) -> Result<T>>(
    phi: &TestFunction<T>,
    spec: &WeightSpec<T>,
    grid: &RadialGrid<T>,
    kernel: K,
    kernel_power: (T, u32),
    require_convergence: bool,
) -> Result<T> {
    let failure = std::cell::RefCell::new(None);
    let v = integral(
        |r| {
            let p = phi.value(r);
            if p == T::zero() {
                return T::zero();
            }
            match kernel(r) {
                Ok(k) => p * p * k,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    T::nan()
                }
            }
        },
        phi,
        spec,
        grid,
        Factor::PhiSquared(kernel_power.0, kernel_power.1),
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let v = v?;
    if require_convergence && !v.converged {
        return Err(LabError::Evaluation {
            node: grid.r_min.as_f64(),
            message: format!(
                "left-hand integral not converged (value {}, estimate {}); possibly divergent",
                v.value, v.error_estimate
            ),
        });
    }
    Ok(v.value)
}

/// `σ_{N-1} ∫ φ'(r)² μ(r) r^{N-1} dr`.
pub fn dirichlet_energy<T: Real>(phi: &TestFunction<T>, spec: &WeightSpec<T>, grid: &RadialGrid<T>) -> Result<T> {
    Ok(integral(|r| phi.deriv(r).powi(2), phi, spec, grid, Factor::GradSquared)?.value)
}

fn inverse_square<T: Real>(r: T) -> Result<T> {
    Ok((r * r).recip())
}

/// Global weighted improved Hardy inequality with coefficient
/// `(N + K₂ - 2)²/4` and correction `∫ V φ² dμ`.
pub fn hardy_slack<T: Real>(
    phi: &TestFunction<T>,
    spec: &WeightSpec<T>,
    v: Option<&PotentialSpec<T>>,
    k: &AdmissibleConstants<T>,
    grid: &RadialGrid<T>,
) -> Result<HardyReport<T>> {
    let coeff = k.hardy_coefficient(spec.dimension);
    let hardy = coeff * kernel_term(phi, spec, grid, inverse_square, (T::lit(-2.0), 0), true)?;
    let correction = match v {
        Some(p) => kernel_term(phi, spec, grid, |r| p.eval(r), (p.local_power().unwrap_or(T::zero()), p.local_log_power()), true)?,
        None => T::zero(),
    };
    let gradient = dirichlet_energy(phi, spec, grid)?;
    let k1 = if k.k1 == T::zero() { T::zero() } else { k.k1 * mass(phi, spec, grid)? };
    let id = if v.is_none() && spec.kind == crate::weights::WeightKind::Power {
        InequalityId::Caffarelli
    } else {
        InequalityId::GlobalWiHi
    };
    Ok(HardyReport::new(id, hardy, correction, gradient, k1))
}

fn check_inside_unit_ball<T: Real>(phi: &TestFunction<T>) -> Result<()> {
    if !(phi.support.1 < T::one()) {
        return Err(LabError::Domain(format!(
            "test function support [{}, {}] must stay away from r = 1",
            phi.support.0, phi.support.1
        )));
    }
    Ok(())
}

/// Local inequality on the unit ball with correction
/// `(1/4) ∫ φ² / (r² log² r) dμ`.
pub fn local_log_slack<T: Real>(
    phi: &TestFunction<T>,
    spec: &WeightSpec<T>,
    k: &AdmissibleConstants<T>,
    grid: &RadialGrid<T>,
) -> Result<HardyReport<T>> {
    local_log_slack_with_coefficient(phi, spec, k, grid, T::lit(0.25))
}

/// [`local_log_slack`] with an arbitrary coefficient on the log term; the
/// slack may be negative when the coefficient exceeds `1/4`.
pub fn local_log_slack_with_coefficient<T: Real>(
    phi: &TestFunction<T>,
    spec: &WeightSpec<T>,
    k: &AdmissibleConstants<T>,
    grid: &RadialGrid<T>,
    coefficient: T,
) -> Result<HardyReport<T>> {
    check_inside_unit_ball(phi)?;
    let hardy = k.hardy_coefficient(spec.dimension) * kernel_term(phi, spec, grid, inverse_square, (T::lit(-2.0), 0), true)?;
    let log_kernel = |r: T| {
        let l = r.ln();
        Ok((r * r * l * l).recip())
    };
    let correction = coefficient * kernel_term(phi, spec, grid, log_kernel, (T::lit(-2.0), 2), true)?;
    let gradient = dirichlet_energy(phi, spec, grid)?;
    let k1 = if k.k1 == T::zero() { T::zero() } else { k.k1 * mass(phi, spec, grid)? };
    Ok(HardyReport::new(InequalityId::LocalLog, hardy, correction, gradient, k1))
}

/// Local inequality on the unit ball with correction `β² ∫ φ² / r^{2-β} dμ`.
pub fn local_beta_slack<T: Real>(
    phi: &TestFunction<T>,
    spec: &WeightSpec<T>,
    beta: T,
    k: &AdmissibleConstants<T>,
    grid: &RadialGrid<T>,
) -> Result<HardyReport<T>> {
    if !(beta > T::zero() && beta <= T::lit(2.0)) {
        return Err(LabError::Domain(format!("beta must lie in (0, 2], got {beta}")));
    }
    check_inside_unit_ball(phi)?;
    let hardy = k.hardy_coefficient(spec.dimension) * kernel_term(phi, spec, grid, inverse_square, (T::lit(-2.0), 0), true)?;
    let power = beta - T::lit(2.0);
    let correction = beta * beta * kernel_term(phi, spec, grid, |r| Ok(r.powf(power)), (power, 0), true)?;
    let gradient = dirichlet_energy(phi, spec, grid)?;
    let k1 = if k.k1 == T::zero() { T::zero() } else { k.k1 * mass(phi, spec, grid)? };
    Ok(HardyReport::new(InequalityId::LocalBeta, hardy, correction, gradient, k1))
}

fn potential_term<T: Real>(
    phi: &TestFunction<T>,
    spec: &WeightSpec<T>,
    vt: &EffectivePotential<T>,
    grid: &RadialGrid<T>,
) -> Result<T> {
    if vt.hardy_coefficient == T::zero() && vt.correction.is_none() {
        return Ok(T::zero());
    }
    kernel_term(
        phi,
        spec,
        grid,
        |r| vt.eval(r),
        (vt.local_power().unwrap_or(T::zero()), vt.local_log_power()),
        false,
    )
}

/// `(∫|∇φ|² dμ - ∫ Ṽ φ² dμ) / ∫ φ² dμ`.
pub fn rayleigh_quotient<T: Real>(
    phi: &TestFunction<T>,
    spec: &WeightSpec<T>,
    vt: &EffectivePotential<T>,
    grid: &RadialGrid<T>,
) -> Result<T> {
    let m = mass(phi, spec, grid)?;
    if !(m > T::zero()) {
        return Err(LabError::Domain("Rayleigh quotient of a function with zero mass".into()));
    }
    Ok((dirichlet_energy(phi, spec, grid)? - potential_term(phi, spec, vt, grid)?) / m)
}

/// `‖Ṽ^{1/2} φ‖_{L²_μ} / ‖φ‖_{H¹_μ}`.
pub fn multiplication_ratio<T: Real>(
    phi: &TestFunction<T>,
    spec: &WeightSpec<T>,
    vt: &EffectivePotential<T>,
    grid: &RadialGrid<T>,
) -> Result<T> {
    let h1 = mass(phi, spec, grid)? + dirichlet_energy(phi, spec, grid)?;
    if !(h1 > T::zero()) {
        return Err(LabError::Domain("multiplication ratio of the zero function".into()));
    }
    Ok((potential_term(phi, spec, vt, grid)? / h1).sqrt())
}

/// Closed-form `f = g r^{-α}` and its first two radial derivatives.
fn f_derivatives<T: Real, G: RadialCorrector<T> + ?Sized>(g: &G, alpha: T, r: T) -> Result<(T, T, T, T, T, T)> {
    let (gv, g1, g2) = g.derivatives(r)?;
    if !(gv > T::zero()) {
        return Err(LabError::Domain(format!("g(r) = {gv} <= 0 at r = {r}")));
    }
    let p = r.powf(-alpha);
    let f = gv * p;
    let f1 = g1 * p - alpha * gv * p / r;
    let f2 = g2 * p - T::lit(2.0) * alpha * g1 * p / r + alpha * (alpha + T::one()) * gv * p / (r * r);
    Ok((f, f1, f2, gv, g1, g2))
}

/// Radial component `F_r = -(f'/f) μ` of the vector field.
fn field<T: Real, G: RadialCorrector<T> + ?Sized>(g: &G, spec: &WeightSpec<T>, alpha: T, r: T) -> Result<T> {
    let (f, f1, ..) = f_derivatives(g, alpha, r)?;
    Ok(-(f1 / f) * spec.mu(r))
}

/// Checks at every grid node inside the support of `g`:
/// (a) `-Δf/f = α(N-2-α)/r² + 2α g'/(r g) - Δg/g`, and
/// (b) `div F = (-Δf/f) μ + |f'/f|² μ - (f'/f) μ'` for `F = -(∇f/f) μ`,
/// the latter also against central differences of `r^{N-1} F_r`.
pub fn divergence_certificate<T: Real, G: RadialCorrector<T> + ?Sized>(
    g: &G,
    spec: &WeightSpec<T>,
    alpha: T,
    grid: &RadialGrid<T>,
) -> Result<[CertificateReport<T>; 2]> {
    if !(alpha > T::zero()) {
        return Err(LabError::Config(format!("alpha must be positive, got {alpha}")));
    }
    let n = T::from_usize_lossy(spec.dimension);
    let nm1 = n - T::one();
    let nm2 = n - T::lit(2.0);
    let two = T::lit(2.0);
    let mut res_a = T::zero();
    let mut res_b = T::zero();
    let mut res_fd = T::zero();
    let mut checked = 0;
    for r in grid.positive_nodes() {
        let Ok((f, f1, f2, gv, g1, g2)) = f_derivatives(g, alpha, r) else {
            // outside the corrector's support
            if g.derivatives(r).is_ok() {
                return Err(LabError::Domain(format!("g vanishes at node r = {r}")));
            }
            continue;
        };
        checked += 1;
        // (a)
        let lap_f = f2 + nm1 * f1 / r;
        let lhs_a = -lap_f / f;
        let lap_g_over_g = g2 / gv + nm1 * g1 / (r * gv);
        let rhs_a = alpha * (nm2 - alpha) / (r * r) + two * alpha * g1 / (r * gv) - lap_g_over_g;
        res_a = res_a.max((lhs_a - rhs_a).abs());

        // (b) product rule on F_r, then the claimed expansion.
        let mu = spec.mu(r);
        let dmu = spec.log_derivative(r) * mu;
        let q = f1 / f;
        let dq = f2 / f - q * q;
        let f_r = -q * mu;
        let div_direct = -(dq * mu + q * dmu) + nm1 * f_r / r;
        let rhs_b = rhs_a * mu + q * q * mu - q * dmu;
        res_b = res_b.max((div_direct - rhs_b).abs());

        let h = T::lit(1e-5).min(r / T::lit(4.0));
        let flux = |s: T| -> Result<T> { Ok(s.powf(nm1) * field(g, spec, alpha, s)?) };
        if let (Ok(up), Ok(down)) = (flux(r + h), flux(r - h)) {
            let div_fd = (up - down) / (two * h) / r.powf(nm1);
            res_fd = res_fd.max((div_fd - rhs_b).abs());
        }
    }
    Ok([
        CertificateReport {
            max_pointwise_residual: res_a,
            identity_id: IdentityId::LaplacianFExpansion,
            nodes_checked: checked,
            fd_residual: None,
        },
        CertificateReport {
            max_pointwise_residual: res_b,
            identity_id: IdentityId::DivFExpansion,
            nodes_checked: checked,
            fd_residual: Some(res_fd),
        },
    ])
}

/// `α (N + K₂ - 2 - α)`, the coefficient produced by the vector-field
/// argument for a given `α`.
pub fn alpha_functional<T: Real>(alpha: T, dimension: usize, k2: T) -> T {
    alpha * (T::from_usize_lossy(dimension) + k2 - T::lit(2.0) - alpha)
}

/// Test functions for the global inequality on `[0, r_max]`: twelve
/// near-optimisers `r^{-α₀+ε} η`, six polynomial bumps and four interior
/// bumps.
pub fn global_family<T: Real>(alpha0: T, r_max: T) -> Result<Vec<TestFunction<T>>> {
    let mut out = Vec::new();
    for eps in [0.1, 0.2, 0.3, 0.5, 0.75, 1.0] {
        for a in [0.25, 0.5] {
            out.push(TestFunction::cutoff_power(alpha0, T::lit(eps), T::lit(a) * r_max, r_max)?);
        }
    }
    for p in [0.0, 0.5, 1.0, 2.0, 3.0, 5.0] {
        out.push(TestFunction::polynomial_bump(T::lit(p), r_max)?);
    }
    for (a, b, p) in [(0.1, 0.6, 2.0), (0.2, 0.9, 3.0), (0.05, 0.5, 4.0), (0.4, 0.95, 2.0)] {
        out.push(TestFunction::interval_bump(T::lit(a) * r_max, T::lit(b) * r_max, T::lit(p))?);
    }
    Ok(out)
}

/// Interior bumps with supports inside `[a, b]`.
pub fn local_family<T: Real>(a: T, b: T) -> Result<Vec<TestFunction<T>>> {
    let mut out = Vec::new();
    let w = b - a;
    for (lo, hi) in [(0.0, 1.0), (0.0, 0.5), (0.5, 1.0), (0.25, 0.75), (0.0, 0.2), (0.8, 1.0), (0.1, 0.9), (0.4, 0.6)] {
        for p in [2.0, 3.0, 5.0] {
            out.push(TestFunction::interval_bump(a + w * T::lit(lo), a + w * T::lit(hi), T::lit(p))?);
        }
    }
    Ok(out)
}
