//! Radial weights `μ(r) = r^{-γ} exp(-δ r^m)` and the checks of the
//! structural hypotheses they must satisfy.

use serde::{Deserialize, Serialize};

use crate::correctors::RadialCorrector;
use crate::error::{LabError, Result};
use crate::quadrature::{gauss4, RadialGrid};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Unit,
    Power,
    PowerExp,
    Gaussian,
}

/// Parametric radial weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec<T> {
    #[serde(rename = "N")]
    pub dimension: usize,
    pub kind: WeightKind,
    pub gamma: T,
    pub delta: T,
    pub m: T,
    /// Hölder exponent of `μ` away from the origin. Metadata only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holder_lambda: Option<T>,
}

impl<T: Real> WeightSpec<T> {
    pub fn new(dimension: usize, kind: WeightKind, gamma: T, delta: T, m: T) -> Result<Self> {
        let spec = Self {
            dimension,
            kind,
            gamma,
            delta,
            m,
            holder_lambda: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn unit(dimension: usize) -> Result<Self> {
        Self::new(dimension, WeightKind::Unit, T::zero(), T::zero(), T::lit(2.0))
    }

    pub fn power(dimension: usize, gamma: T) -> Result<Self> {
        Self::new(dimension, WeightKind::Power, gamma, T::zero(), T::lit(2.0))
    }

    pub fn power_exp(dimension: usize, gamma: T, delta: T, m: T) -> Result<Self> {
        Self::new(dimension, WeightKind::PowerExp, gamma, delta, m)
    }

    pub fn gaussian(dimension: usize, delta: T) -> Result<Self> {
        Self::new(dimension, WeightKind::Gaussian, T::zero(), delta, T::lit(2.0))
    }

    /// Same weight without the `γ < N - 2` admissibility requirement. Used
    /// to let the H1 checker confirm divergence for inadmissible exponents.
    pub fn power_unchecked(dimension: usize, gamma: T) -> Self {
        Self {
            dimension,
            kind: WeightKind::Power,
            gamma,
            delta: T::zero(),
            m: T::lit(2.0),
            holder_lambda: None,
        }
    }

    pub fn with_holder_lambda(mut self, lambda: T) -> Result<Self> {
        if !(lambda > T::zero() && lambda < T::one()) {
            return Err(LabError::Config(format!("Hölder exponent must lie in (0,1), got {lambda}")));
        }
        self.holder_lambda = Some(lambda);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(LabError::Config(msg));
        if self.dimension < 3 {
            return bad(format!("dimension N must be >= 3, got {}", self.dimension));
        }
        let n2 = T::from_usize_lossy(self.dimension - 2);
        if !(self.gamma.is_finite() && self.delta.is_finite() && self.m.is_finite()) {
            return bad("weight parameters must be finite".into());
        }
        if self.delta < T::zero() {
            return bad(format!("delta must be >= 0, got {}", self.delta));
        }
        if !(self.m > T::zero()) {
            return bad(format!("m must be > 0, got {}", self.m));
        }
        match self.kind {
            WeightKind::Unit => {
                if self.gamma != T::zero() || self.delta != T::zero() {
                    return bad("kind=unit requires gamma = 0 and delta = 0".into());
                }
            }
            WeightKind::Power => {
                if self.delta != T::zero() {
                    return bad("kind=power requires delta = 0".into());
                }
                if !(self.gamma < n2) {
                    return bad(format!("kind=power requires gamma < N-2 = {n2}, got {}", self.gamma));
                }
            }
            WeightKind::PowerExp => {
                if !(self.gamma < n2) {
                    return bad(format!("kind=power_exp requires gamma < N-2 = {n2}, got {}", self.gamma));
                }
            }
            WeightKind::Gaussian => {
                if self.gamma != T::zero() || self.m != T::lit(2.0) || !(self.delta > T::zero()) {
                    return bad("kind=gaussian requires gamma = 0, m = 2, delta > 0".into());
                }
            }
        }
        if let Some(l) = self.holder_lambda {
            if !(l > T::zero() && l < T::one()) {
                return bad(format!("Hölder exponent must lie in (0,1), got {l}"));
            }
        }
        Ok(())
    }

    /// `μ(r)`; no domain check.
    #[inline]
    pub fn mu(&self, r: T) -> T {
        let mut v = if self.gamma == T::zero() { T::one() } else { r.powf(-self.gamma) };
        if self.delta != T::zero() {
            v = v * (-self.delta * r.powf(self.m)).exp();
        }
        v
    }

    /// `μ'(r)/μ(r) = -γ/r - δ m r^{m-1}`; no domain check.
    #[inline]
    pub fn log_derivative(&self, r: T) -> T {
        let mut d = -self.gamma / r;
        if self.delta != T::zero() {
            d = d - self.delta * self.m * r.powf(self.m - T::one());
        }
        d
    }

    /// Exponent `p` with `μ(r) ~ r^p` as `r → 0`.
    pub fn local_power(&self) -> T {
        -self.gamma
    }

    /// `μ` is an exact power of `r`, so cell integrals have closed forms.
    pub fn is_pure_power(&self) -> bool {
        self.delta == T::zero()
    }

    /// `(N - 2 + K₂)/2` is the optimal `α`; this is `N - 2` as a scalar.
    pub fn n_minus_2(&self) -> T {
        T::from_usize_lossy(self.dimension - 2)
    }
}

/// Closed-form `(μ(r), μ'(r)/μ(r))`.
pub fn eval_weight<T: Real>(spec: &WeightSpec<T>, r: T) -> Result<(T, T)> {
    if !(r > T::zero()) {
        return Err(LabError::Domain(format!("weight evaluated at r = {r} <= 0")));
    }
    Ok((spec.mu(r), spec.log_derivative(r)))
}

/// Constants `K₁, K₂, K₃` of the radial admissibility condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleConstants<T> {
    #[serde(rename = "K1")]
    pub k1: T,
    #[serde(rename = "K2")]
    pub k2: T,
    #[serde(rename = "K3")]
    pub k3: T,
}

impl<T: Real> AdmissibleConstants<T> {
    pub fn new(k1: T, k2: T, k3: T, dimension: usize) -> Result<Self> {
        let c = Self { k1, k2, k3 };
        c.validate(dimension)?;
        Ok(c)
    }

    /// `K₃ = K₂` (which for `K₂ = 0` is the admissible choice `K₃ = 0`).
    pub fn tied(k1: T, k2: T, dimension: usize) -> Result<Self> {
        Self::new(k1, k2, k2, dimension)
    }

    pub fn validate(&self, dimension: usize) -> Result<()> {
        let two_minus_n = T::lit(2.0) - T::from_usize_lossy(dimension);
        if !(self.k2 > two_minus_n) {
            return Err(LabError::Config(format!("K2 must exceed 2-N = {two_minus_n}, got {}", self.k2)));
        }
        if self.k2 != T::zero() && self.k3 != self.k2 {
            return Err(LabError::Config("K3 must equal K2 when K2 != 0".into()));
        }
        if self.k2 == T::zero() && self.k3 > T::zero() {
            return Err(LabError::Config("K3 must be <= 0 when K2 = 0".into()));
        }
        if !self.k1.is_finite() {
            return Err(LabError::Config("K1 must be finite".into()));
        }
        Ok(())
    }

    /// `(N + K₂ - 2)²/4`, the coefficient of `∫φ²/|x|² dμ`.
    pub fn hardy_coefficient(&self, dimension: usize) -> T {
        let s = T::from_usize_lossy(dimension) + self.k2 - T::lit(2.0);
        s * s / T::lit(4.0)
    }

    /// Optimal `α₀ = (N + K₂ - 2)/2`.
    pub fn optimal_alpha(&self, dimension: usize) -> T {
        (T::from_usize_lossy(dimension) + self.k2 - T::lit(2.0)) / T::lit(2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HypothesisId {
    H1i,
    H1ii,
    H2i,
    H2ii,
    H4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

/// Outcome of one hypothesis check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport<T> {
    #[serde(rename = "hypothesis")]
    pub hypothesis_id: HypothesisId,
    pub verdict: Verdict,
    pub worst_point: T,
    pub worst_margin: T,
    #[serde(skip)]
    pub refinement_trace: Vec<(T, T)>,
}

impl<T: Real> HypothesisReport<T> {
    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }
}

const H1_SHELLS: usize = 31;

/// Integral of `f` over `[a, b]` with 4-point Gauss in `ln r` on 8 subcells.
fn log_shell_integral<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> T {
    let sub = 8;
    let (la, lb) = (a.ln(), b.ln());
    let h = (lb - la) / T::from_usize_lossy(sub);
    let half = T::lit(0.5);
    let mut acc = T::zero();
    for j in 0..sub {
        let mid = la + h * (T::from_usize_lossy(j) + half);
        for (x, w) in gauss4::<T>() {
            let t = mid + half * h * x;
            let r = t.exp();
            acc = acc + half * h * w * f(r) * r;
        }
    }
    acc
}

/// Classifies dyadic shell integrals ordered from the outside in.
fn classify_shells<T: Real>(id: HypothesisId, shells: &[T], r_max: T) -> HypothesisReport<T> {
    let mut trace = Vec::with_capacity(shells.len());
    let mut partial = T::zero();
    let two = T::lit(2.0);
    for (k, s) in shells.iter().enumerate() {
        partial = partial + *s;
        trace.push((r_max / two.powi(k as i32), partial));
    }
    let innermost = r_max / two.powi(shells.len() as i32);
    let n = shells.len();
    let tail = &shells[n - 11..];
    let max_ratio = tail
        .windows(2)
        .map(|w| if w[0] == T::zero() { if w[1] == T::zero() { T::zero() } else { T::infinity() } } else { w[1] / w[0] })
        .fold(T::zero(), T::max);
    let worst_margin = T::one() - max_ratio;
    let first10: T = shells[..10].iter().copied().fold(T::zero(), |a, b| a + b);
    let last10: T = shells[n - 10..].iter().copied().fold(T::zero(), |a, b| a + b);
    let last5_nondecreasing = shells[n - 5..].windows(2).all(|w| w[1] >= w[0]);

    let all_zero = shells.iter().all(|s| *s == T::zero());
    let verdict = if all_zero {
        Verdict::Holds
    } else if !partial.is_finite() || (last5_nondecreasing && last10 > T::lit(10.0) * first10) {
        Verdict::Fails
    } else if max_ratio <= T::lit(0.95) {
        Verdict::Holds
    } else {
        Verdict::Inconclusive
    };
    HypothesisReport {
        hypothesis_id: id,
        verdict,
        worst_point: innermost,
        worst_margin: if all_zero { T::zero() } else { worst_margin },
        refinement_trace: trace,
    }
}

/// Local integrability near the origin of `|(√μ)'|² r^{N-1}` (i) and of
/// `μ^{-1} r^{N-1}` (ii), decided on the dyadic shells
/// `[2^{-k-1} R, 2^{-k} R]`, `k = 0..=30`.
pub fn check_h1<T: Real>(spec: &WeightSpec<T>, r_max: T) -> (HypothesisReport<T>, HypothesisReport<T>) {
    let nm1 = T::from_usize_lossy(spec.dimension - 1);
    let quarter = T::lit(0.25);
    let f_i = |r: T| {
        let ld = spec.log_derivative(r);
        quarter * spec.mu(r) * ld * ld * r.powf(nm1)
    };
    let f_ii = |r: T| r.powf(nm1) / spec.mu(r);
    let two = T::lit(2.0);
    let mut s_i = Vec::with_capacity(H1_SHELLS);
    let mut s_ii = Vec::with_capacity(H1_SHELLS);
    for k in 0..H1_SHELLS {
        let b = r_max / two.powi(k as i32);
        let a = b / two;
        s_i.push(log_shell_integral(&f_i, a, b));
        s_ii.push(log_shell_integral(&f_ii, a, b));
    }
    (
        classify_shells(HypothesisId::H1i, &s_i, r_max),
        classify_shells(HypothesisId::H1ii, &s_ii, r_max),
    )
}

fn h4_tolerance<T: Real>(k: &AdmissibleConstants<T>) -> T {
    T::lit(1e-9) * (k.k1.abs() + k.k2.abs() + T::one())
}

/// `(α/r)(μ'/μ - K₂/r) - (g'/g)(μ'/μ - K₃/r)`: the margin without `K₁`.
fn h4_rest<T: Real, G: RadialCorrector<T> + ?Sized>(
    spec: &WeightSpec<T>,
    g: &G,
    alpha: T,
    k2: T,
    k3: T,
    r: T,
) -> Result<T> {
    let (gv, g1, _) = g.derivatives(r).map_err(|e| LabError::Evaluation {
        node: r.as_f64(),
        message: e.to_string(),
    })?;
    if gv == T::zero() || !gv.is_finite() {
        return Err(LabError::Evaluation {
            node: r.as_f64(),
            message: format!("corrector g = {gv} at node"),
        });
    }
    let ld = spec.log_derivative(r);
    Ok(alpha / r * (ld - k2 / r) - g1 / gv * (ld - k3 / r))
}

/// Pointwise check of the radial admissibility condition on the grid nodes
/// in `(0, r_max]`.
pub fn check_h4<T: Real, G: RadialCorrector<T> + ?Sized>(
    spec: &WeightSpec<T>,
    g: &G,
    alpha: T,
    k: &AdmissibleConstants<T>,
    grid: &RadialGrid<T>,
) -> Result<HypothesisReport<T>> {
    let upper = T::from_usize_lossy(spec.dimension) + k.k2 - T::lit(2.0);
    if !(alpha > T::zero() && alpha < upper) {
        return Err(LabError::Config(format!("alpha must lie in (0, N+K2-2) = (0, {upper}), got {alpha}")));
    }
    let tol = h4_tolerance(k);
    let mut worst = (T::zero(), T::infinity());
    for r in grid.positive_nodes() {
        let margin = k.k1 + h4_rest(spec, g, alpha, k.k2, k.k3, r)?;
        if margin < worst.1 {
            worst = (r, margin);
        }
    }
    let verdict = if worst.1 >= -tol { Verdict::Holds } else { Verdict::Fails };
    Ok(HypothesisReport {
        hypothesis_id: HypothesisId::H4,
        verdict,
        worst_point: worst.0,
        worst_margin: worst.1,
        refinement_trace: Vec::new(),
    })
}

/// Scans `K₂ ∈ {2-N+0.01, …, 2}` (step 0.01, descending) and
/// `K₁ ∈ {0, 0.1, …, 50}` (ascending) for the first pair making the radial
/// condition hold at `α = (N + K₂ - 2)/2`, with `K₃` tied to `K₂`.
pub fn find_admissible_k2<T: Real, G: RadialCorrector<T> + ?Sized>(
    spec: &WeightSpec<T>,
    g: &G,
    grid: &RadialGrid<T>,
) -> Result<AdmissibleConstants<T>> {
    let n = spec.dimension as i64;
    let lowest = 100 * (2 - n) + 1;
    let hundred = T::lit(100.0);
    for k2_cent in (lowest..=200).rev() {
        let k2 = T::from_i64(k2_cent).unwrap() / hundred;
        let k3 = k2;
        let alpha = (T::from_i64(n - 2).unwrap() + k2) / T::lit(2.0);
        let mut min_rest = T::infinity();
        let mut ok = true;
        for r in grid.positive_nodes() {
            match h4_rest(spec, g, alpha, k2, k3, r) {
                Ok(v) if v.is_finite() => min_rest = min_rest.min(v),
                Ok(_) => {
                    ok = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if !ok {
            continue;
        }
        // Smallest lattice K₁ = j/10 with K₁ + min_rest >= -tol(K₁).
        let guess = ((-min_rest) * T::lit(10.0)).floor().to_i64().unwrap_or(i64::MAX).max(0);
        for j in guess.saturating_sub(1).max(0)..=500 {
            if j > 500 {
                break;
            }
            let k1 = T::from_i64(j).unwrap() / T::lit(10.0);
            let c = AdmissibleConstants { k1, k2, k3 };
            if k1 + min_rest >= -h4_tolerance(&c) {
                c.validate(spec.dimension)?;
                return Ok(c);
            }
        }
    }
    Err(LabError::NotFound(
        "no (K1, K2) on the lattice satisfies the radial condition on this grid".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correctors::CorrectorSpec;
    use crate::quadrature::graded_grid;
    use approx::assert_relative_eq;

    #[test]
    fn eval_weight_examples() {
        let u = WeightSpec::<f64>::unit(3).unwrap();
        assert_eq!(eval_weight(&u, 0.5).unwrap(), (1.0, 0.0));
        let p = WeightSpec::<f64>::power(4, 1.0).unwrap();
        let (mu, ld) = eval_weight(&p, 2.0).unwrap();
        assert_relative_eq!(mu, 0.5);
        assert_relative_eq!(ld, -0.5);
        let pe = WeightSpec::<f64>::power_exp(4, 1.0, 1.0, 2.0).unwrap();
        let (mu, ld) = eval_weight(&pe, 1.0).unwrap();
        assert_relative_eq!(mu, (-1.0f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(ld, -3.0);
        assert!(matches!(eval_weight(&u, 0.0), Err(LabError::Domain(_))));
        assert!(eval_weight(&u, -1.0).is_err());
    }

    #[test]
    fn kind_invariants() {
        assert!(WeightSpec::<f64>::power(3, 1.0).is_err());
        assert!(WeightSpec::<f64>::power(3, 0.5).is_ok());
        assert!(WeightSpec::<f64>::gaussian(3, 0.0).is_err());
        assert!(WeightSpec::<f64>::new(3, WeightKind::Unit, 0.5, 0.0, 2.0).is_err());
        assert!(WeightSpec::<f64>::new(3, WeightKind::Gaussian, 0.0, 1.0, 3.0).is_err());
        assert!(WeightSpec::<f64>::unit(2).is_err());
        assert!(WeightSpec::<f64>::unit(3).unwrap().with_holder_lambda(1.5).is_err());
    }

    #[test]
    fn h1_examples() {
        let p = WeightSpec::<f64>::power(3, 0.5).unwrap();
        let (i, ii) = check_h1(&p, 1.0);
        assert_eq!(i.verdict, Verdict::Holds);
        assert_eq!(ii.verdict, Verdict::Holds);
        let bad = WeightSpec::<f64>::power_unchecked(3, 2.0);
        let (i, _) = check_h1(&bad, 1.0);
        assert_eq!(i.verdict, Verdict::Fails);
        assert!(i.worst_margin < 0.0);
        let u = WeightSpec::<f64>::unit(3).unwrap();
        let (i, ii) = check_h1(&u, 1.0);
        assert_eq!(i.verdict, Verdict::Holds);
        assert_eq!(ii.verdict, Verdict::Holds);
        assert_eq!(i.refinement_trace.len(), 31);
    }

    #[test]
    fn h1_on_gamma_one_in_three_dimensions() {
        // γ = N-2 exactly: |(√μ)'|² r^{N-1} ~ r^{-1} is log-divergent and the
        // shell test cannot separate it from slow convergence.
        let p = WeightSpec::<f64>::power_unchecked(3, 1.0);
        let (i, _) = check_h1(&p, 1.0);
        assert_eq!(i.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn h4_power_weight_margin_is_exactly_zero() {
        let gamma = 1.0;
        let p = WeightSpec::<f64>::power(4, gamma).unwrap();
        let k = AdmissibleConstants::tied(0.0, -gamma, 4).unwrap();
        let grid = graded_grid(0.0, 1.0, 64, 2.0).unwrap();
        for alpha in [0.1, 0.5, 0.9] {
            let rep = check_h4(&p, &CorrectorSpec::unit(), alpha, &k, &grid).unwrap();
            assert!(rep.holds());
            assert_eq!(rep.worst_margin, 0.0);
        }
    }

    #[test]
    fn h4_unit_and_power_exp_examples() {
        let grid = graded_grid(0.0, 1.0, 64, 2.0).unwrap();
        let u = WeightSpec::<f64>::unit(3).unwrap();
        let k = AdmissibleConstants::tied(0.0, 0.0, 3).unwrap();
        let rep = check_h4(&u, &CorrectorSpec::unit(), 0.5, &k, &grid).unwrap();
        assert!(rep.holds());
        assert_eq!(rep.worst_margin, 0.0);

        // K₂ = K₃ = -γ - δm on the unit ball.
        let pe = WeightSpec::<f64>::power_exp(6, 0.5, 1.0, 2.0).unwrap();
        let k = AdmissibleConstants::tied(0.0, -2.5, 6).unwrap();
        let rep = check_h4(&pe, &CorrectorSpec::unit(), 0.7, &k, &grid).unwrap();
        assert!(rep.holds(), "{rep:?}");
        // Same constants with a corrector: g' <= 0 only helps.
        let g = CorrectorSpec::one_minus_power(2.0).unwrap();
        let inner = graded_grid(0.01, 0.99, 64, 1.0).unwrap();
        let rep = check_h4(&pe, &g, 0.7, &k, &inner).unwrap();
        assert!(rep.holds(), "{rep:?}");
    }

    #[test]
    fn h4_rejects_alpha_out_of_range_and_zero_g() {
        let u = WeightSpec::<f64>::unit(3).unwrap();
        let k = AdmissibleConstants::tied(0.0, 0.0, 3).unwrap();
        let grid = graded_grid(0.0, 1.0, 64, 2.0).unwrap();
        assert!(check_h4(&u, &CorrectorSpec::unit(), 1.0, &k, &grid).is_err());
        let g = CorrectorSpec::one_minus_power(1.0).unwrap();
        let err = check_h4(&u, &g, 0.5, &k, &grid).unwrap_err();
        assert!(matches!(err, LabError::Evaluation { .. } | LabError::Domain(_)), "{err:?}");
    }

    #[test]
    fn h4_detects_violation() {
        let u = WeightSpec::<f64>::gaussian(3, 1.0).unwrap();
        let k = AdmissibleConstants::tied(0.5, 0.0, 3).unwrap();
        let grid = graded_grid(0.0, 2.0, 64, 2.0).unwrap();
        let rep = check_h4(&u, &CorrectorSpec::unit(), 0.5, &k, &grid).unwrap();
        assert_eq!(rep.verdict, Verdict::Fails);
        assert!(rep.worst_margin < 0.0);
    }

    #[test]
    fn admissible_constants_examples() {
        let grid = graded_grid(0.0, 1.0, 64, 2.0).unwrap();
        let g = CorrectorSpec::unit();
        let p = WeightSpec::<f64>::power(4, 1.0).unwrap();
        let k = find_admissible_k2(&p, &g, &grid).unwrap();
        assert_relative_eq!(k.k2, -1.0);
        assert_eq!(k.k1, 0.0);

        let u = WeightSpec::<f64>::unit(3).unwrap();
        let k = find_admissible_k2(&u, &g, &grid).unwrap();
        assert_eq!((k.k1, k.k2, k.k3), (0.0, 0.0, 0.0));

        // μ = e^{-r²}: margin = K₁ - 2α with K₂ = 0, α = (N-2)/2.
        let gs = WeightSpec::<f64>::gaussian(3, 1.0).unwrap();
        let k = find_admissible_k2(&gs, &g, &grid).unwrap();
        assert_eq!(k.k2, 0.0);
        assert_relative_eq!(k.k1, 1.0);
        let gs5 = WeightSpec::<f64>::gaussian(5, 1.0).unwrap();
        let k = find_admissible_k2(&gs5, &g, &grid).unwrap();
        assert_relative_eq!(k.k1, 3.0);
    }

    #[test]
    fn constants_invariants() {
        assert!(AdmissibleConstants::<f64>::new(0.0, -1.0, -1.0, 3).is_err());
        assert!(AdmissibleConstants::<f64>::new(0.0, 0.5, 0.4, 3).is_err());
        assert!(AdmissibleConstants::<f64>::new(0.0, 0.0, -0.3, 3).is_ok());
        assert!(AdmissibleConstants::<f64>::new(0.0, 0.0, 0.3, 3).is_err());
        let k = AdmissibleConstants::<f64>::tied(0.0, -1.0, 4).unwrap();
        assert_relative_eq!(k.hardy_coefficient(4), 0.25);
        assert_relative_eq!(k.optimal_alpha(4), 0.5);
    }

    #[test]
    fn report_json_shape() {
        let (i, _) = check_h1(&WeightSpec::<f64>::unit(3).unwrap(), 1.0);
        let v = serde_json::to_value(&i).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), 4);
        assert_eq!(v["hypothesis"], "H1i");
        assert_eq!(v["verdict"], "holds");
    }
}
