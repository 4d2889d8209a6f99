//! Radial grids and weighted radial quadrature.
//!
//! Every integral over a ball or over `R^N` against `dμ = μ(|x|) dx` of a
//! radial integrand reduces to `σ_{N-1} ∫ h(r) μ(r) r^{N-1} dr`. The grids
//! here carry a smooth parametrisation `r = r(s)`, `s ∈ [0, 1]`, and every
//! cell is integrated with a 4-point Gauss–Legendre rule in the parameter
//! `s`. With algebraic grading `r = r_min + L s^q` this turns power
//! singularities at `r_min` into mild (often polynomial) ones.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::weights::WeightSpec;
use crate::Real;

const GAUSS4_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GAUSS4_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// Gauss–Legendre 4-point nodes and weights on `[-1, 1]`.
pub fn gauss4<T: Real>() -> [(T, T); 4] {
    let mut out = [(T::zero(), T::zero()); 4];
    for (o, (x, w)) in out.iter_mut().zip(GAUSS4_NODES.iter().zip(GAUSS4_WEIGHTS.iter())) {
        *o = (T::lit(*x), T::lit(*w));
    }
    out
}

/// Surface area `σ_{N-1} = 2 π^{N/2} / Γ(N/2)` of the unit sphere in `R^N`.
pub fn sphere_area<T: Real>(dim: usize) -> T {
    assert!(dim >= 2, "sphere_area needs N >= 2");
    // Γ(N/2) by the half-integer recursion.
    let mut gamma = if dim.is_multiple_of(2) { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut x = if dim.is_multiple_of(2) { 1.0 } else { 0.5 };
    while x + 1e-12 < dim as f64 / 2.0 {
        gamma *= x;
        x += 1.0;
    }
    let pi = std::f64::consts::PI;
    T::lit(2.0 * pi.powf(dim as f64 / 2.0) / gamma)
}

/// How the nodes of a [`RadialGrid`] were generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "map", rename_all = "snake_case")]
pub enum GridMap<T> {
    /// `r = r_min + (r_max - r_min) s^q` (or mirrored toward `r_max`).
    Algebraic { q: T, from_right: bool },
    /// Nodes uniform in `f(r) = ln r + κ r - ln(pole - r)` (last term only
    /// when a pole is given). Geometric near `0`, near the pole, roughly
    /// uniform elsewhere.
    LogLinear { kappa: T, right_pole: Option<T> },
    /// Arbitrary increasing nodes; cells are integrated in `r` directly.
    Explicit,
}

/// Graded one-dimensional mesh on `[r_min, r_max]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialGrid<T> {
    pub r_min: T,
    pub r_max: T,
    pub nodes: Vec<T>,
    pub grading_exponent: T,
    pub map: GridMap<T>,
}

/// Result of a radial integral with its two-level error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralValue<T> {
    pub value: T,
    pub error_estimate: T,
    pub converged: bool,
}

/// Options for [`integrate_with`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions<T> {
    /// Local exponent `p` of the full integrand `~ r^p` at `r = 0`. When set
    /// and the grid starts at zero, the first cell is replaced by the
    /// analytic tail `f(r₁) r₁ / (p + 1)`.
    pub tail_power: Option<T>,
    /// `k` in a tail model `r^p |ln r|^{-k}`; `0` for a pure power.
    pub tail_log_power: u32,
    pub rel_tol: T,
    pub abs_tol: T,
}

impl<T: Real> Default for QuadOptions<T> {
    fn default() -> Self {
        Self {
            tail_power: None,
            tail_log_power: 0,
            rel_tol: T::lit(1e-6),
            abs_tol: T::lit(1e-12),
        }
    }
}

impl<T: Real> QuadOptions<T> {
    pub fn with_tail(p: T) -> Self {
        Self {
            tail_power: Some(p),
            ..Self::default()
        }
    }
}

/// Algebraically graded grid `r_k = r_min + (r_max - r_min) (k/n)^q`, `k = 0..=n`.
pub fn graded_grid<T: Real>(r_min: T, r_max: T, n: usize, q: T) -> Result<RadialGrid<T>> {
    check_grid_args(r_min, r_max, n, q)?;
    let len = r_max - r_min;
    let nf = T::from_usize_lossy(n);
    let mut nodes: Vec<T> = (0..=n)
        .map(|k| r_min + len * (T::from_usize_lossy(k) / nf).powf(q))
        .collect();
    nodes[n] = r_max;
    Ok(RadialGrid {
        r_min,
        r_max,
        nodes,
        grading_exponent: q,
        map: GridMap::Algebraic { q, from_right: false },
    })
}

/// Mirror image of [`graded_grid`]: nodes cluster at `r_max`.
pub fn right_graded_grid<T: Real>(r_min: T, r_max: T, n: usize, q: T) -> Result<RadialGrid<T>> {
    check_grid_args(r_min, r_max, n, q)?;
    let len = r_max - r_min;
    let nf = T::from_usize_lossy(n);
    let mut nodes: Vec<T> = (0..=n)
        .map(|k| r_max - len * (T::from_usize_lossy(n - k) / nf).powf(q))
        .collect();
    nodes[0] = r_min;
    Ok(RadialGrid {
        r_min,
        r_max,
        nodes,
        grading_exponent: q,
        map: GridMap::Algebraic { q, from_right: true },
    })
}

/// Grid uniform in `ln r + κ r` (optionally `- ln(pole - r)`), for problems
/// posed on `(r_min, r_max)` with `r_min` many decades below `r_max`.
pub fn log_graded_grid<T: Real>(
    r_min: T,
    r_max: T,
    n: usize,
    kappa: T,
    right_pole: Option<T>,
) -> Result<RadialGrid<T>> {
    if !(r_min > T::zero()) {
        return Err(LabError::Config("log-graded grid needs r_min > 0".into()));
    }
    check_grid_args(r_min, r_max, n, T::one())?;
    if kappa < T::zero() {
        return Err(LabError::Config("log-graded grid needs kappa >= 0".into()));
    }
    if let Some(p) = right_pole {
        if !(p > r_max) {
            return Err(LabError::Config("right pole must lie beyond r_max".into()));
        }
    }
    let map = GridMap::LogLinear { kappa, right_pole };
    let fa = log_linear_f(r_min, kappa, right_pole);
    let fb = log_linear_f(r_max, kappa, right_pole);
    let nf = T::from_usize_lossy(n);
    let mut nodes = Vec::with_capacity(n + 1);
    nodes.push(r_min);
    for k in 1..n {
        let target = fa + (fb - fa) * T::from_usize_lossy(k) / nf;
        let lo = *nodes.last().unwrap();
        nodes.push(invert_log_linear(target, lo, r_max, kappa, right_pole));
    }
    nodes.push(r_max);
    Ok(RadialGrid {
        r_min,
        r_max,
        nodes,
        grading_exponent: T::one(),
        map,
    })
}

fn check_grid_args<T: Real>(r_min: T, r_max: T, n: usize, q: T) -> Result<()> {
    if !(r_min >= T::zero()) || !(r_max > r_min) || !r_max.is_finite() {
        return Err(LabError::Config(format!(
            "grid needs 0 <= r_min < r_max, got ({r_min}, {r_max})"
        )));
    }
    if n < 64 {
        return Err(LabError::Config(format!("grid needs n >= 64 cells, got {n}")));
    }
    if !(q >= T::one()) {
        return Err(LabError::Config(format!("grading exponent must be >= 1, got {q}")));
    }
    Ok(())
}

fn log_linear_f<T: Real>(r: T, kappa: T, pole: Option<T>) -> T {
    let mut f = r.ln() + kappa * r;
    if let Some(p) = pole {
        f = f - (p - r).ln();
    }
    f
}

fn log_linear_df<T: Real>(r: T, kappa: T, pole: Option<T>) -> T {
    let mut d = r.recip() + kappa;
    if let Some(p) = pole {
        d = d + (p - r).recip();
    }
    d
}

/// Safeguarded Newton for the monotone map `f` on `[lo, hi]`.
fn invert_log_linear<T: Real>(target: T, mut lo: T, mut hi: T, kappa: T, pole: Option<T>) -> T {
    let mut r = (lo * hi).sqrt();
    for _ in 0..200 {
        let f = log_linear_f(r, kappa, pole) - target;
        if f > T::zero() {
            hi = r;
        } else {
            lo = r;
        }
        let step = f / log_linear_df(r, kappa, pole);
        let mut next = r - step;
        if !(next > lo && next < hi) {
            next = T::lit(0.5) * (lo + hi);
        }
        if (next - r).abs() <= T::epsilon() * T::lit(4.0) * r.abs() {
            return next;
        }
        r = next;
    }
    r
}

impl<T: Real> RadialGrid<T> {
    /// Grid from explicit, strictly increasing nodes.
    pub fn from_nodes(nodes: Vec<T>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(LabError::Config("grid needs at least two nodes".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(LabError::Config("grid nodes must be strictly increasing".into()));
        }
        if !(nodes[0] >= T::zero()) {
            return Err(LabError::Config("grid nodes must be nonnegative".into()));
        }
        Ok(Self {
            r_min: nodes[0],
            r_max: *nodes.last().unwrap(),
            nodes,
            grading_exponent: T::one(),
            map: GridMap::Explicit,
        })
    }

    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Nodes strictly inside `(0, r_max)` plus `r_max` if positive; used by
    /// the pointwise hypothesis checks, which cannot evaluate at `r = 0`.
    pub fn positive_nodes(&self) -> impl Iterator<Item = T> + '_ {
        self.nodes.iter().copied().filter(|r| *r > T::zero())
    }

    /// Point and Jacobian `dr/ds` at parameter `s`, with `[lo, hi]` a bracket
    /// of nodes known to contain the point.
    fn point(&self, s: T, lo: T, hi: T) -> (T, T) {
        let len = self.r_max - self.r_min;
        match self.map {
            GridMap::Algebraic { q, from_right: false } => {
                let r = self.r_min + len * s.powf(q);
                (r, q * len * s.powf(q - T::one()))
            }
            GridMap::Algebraic { q, from_right: true } => {
                let u = T::one() - s;
                let r = self.r_max - len * u.powf(q);
                (r, q * len * u.powf(q - T::one()))
            }
            GridMap::LogLinear { kappa, right_pole } => {
                let fa = log_linear_f(self.r_min, kappa, right_pole);
                let fb = log_linear_f(self.r_max, kappa, right_pole);
                let r = invert_log_linear(fa + (fb - fa) * s, lo, hi, kappa, right_pole);
                (r, (fb - fa) / log_linear_df(r, kappa, right_pole))
            }
            GridMap::Explicit => unreachable!("explicit grids are integrated in r"),
        }
    }

    /// Gauss points `(r, weight)` on the span of cells `[first, last]`
    /// (inclusive node indices).
    pub fn span_points(&self, first: usize, last: usize) -> [(T, T); 4] {
        let lo = self.nodes[first];
        let hi = self.nodes[last];
        let half = T::lit(0.5);
        let mut out = [(T::zero(), T::zero()); 4];
        match self.map {
            GridMap::Explicit => {
                let mid = half * (lo + hi);
                let rad = half * (hi - lo);
                for (o, (x, w)) in out.iter_mut().zip(gauss4::<T>()) {
                    *o = (mid + rad * x, rad * w);
                }
            }
            _ => {
                let n = T::from_usize_lossy(self.cells());
                let s0 = T::from_usize_lossy(first) / n;
                let s1 = T::from_usize_lossy(last) / n;
                let mid = half * (s0 + s1);
                let rad = half * (s1 - s0);
                for (o, (x, w)) in out.iter_mut().zip(gauss4::<T>()) {
                    let (r, jac) = self.point(mid + rad * x, lo, hi);
                    *o = (r, rad * w * jac);
                }
            }
        }
        out
    }

    /// Two-column CSV (`k,r`) for debugging.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,r\n");
        for (k, r) in self.nodes.iter().enumerate() {
            s.push_str(&format!("{k},{r:e}\n"));
        }
        s
    }
}

fn span_integral<T: Real, F: Fn(T) -> T>(
    f: &F,
    grid: &RadialGrid<T>,
    first: usize,
    last: usize,
) -> Result<T> {
    let mut acc = T::zero();
    for (r, w) in grid.span_points(first, last) {
        let v = f(r);
        if !v.is_finite() {
            return Err(LabError::Evaluation {
                node: r.as_f64(),
                message: format!("non-finite integrand sample {v}"),
            });
        }
        acc = acc + w * v;
    }
    Ok(acc)
}

/// `e^x E₁(x)` for `x > 0`: power series below `1`, continued fraction above.
pub fn scaled_exp_integral<T: Real>(x: T) -> T {
    if x < T::one() {
        let euler = T::lit(0.577_215_664_901_532_9);
        let mut sum = T::zero();
        let mut term = T::one();
        for n in 1..200 {
            let nf = T::from_usize_lossy(n);
            term = term * (-x) / nf;
            let add = term / nf;
            sum = sum + add;
            if add.abs() <= T::epsilon() * sum.abs() {
                break;
            }
        }
        x.exp() * (-euler - x.ln() - sum)
    } else {
        // modified Lentz on 1/(x+1-1/(x+3-4/(x+5-...)))
        let tiny = T::min_positive_value() / T::epsilon();
        let mut b = x + T::one();
        let mut c = T::one() / tiny;
        let mut d = T::one() / b;
        let mut h = d;
        for i in 1..500 {
            let fi = T::from_usize_lossy(i);
            let a = -fi * fi;
            b = b + T::lit(2.0);
            d = T::one() / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h = h * del;
            if (del - T::one()).abs() <= T::epsilon() {
                break;
            }
        }
        h
    }
}

/// `∫_0^{r₁} r^p |ln r|^{-k} dr / (r₁^p |ln r₁|^{-k})`, for `r₁ < 1` when `k > 0`.
fn tail_factor<T: Real>(r1: T, p: T, k: u32) -> T {
    let a = p + T::one();
    if k == 0 {
        return r1 / a;
    }
    // With t = -ln r: r₁ t₁^k e^{a t₁} ∫_{t₁}^∞ e^{-a t} t^{-k} dt, built up
    // from J_1 = e^{x} E₁(x) by J_j = (1 - x J_{j-1}) / (j - 1), x = a t₁.
    let t1 = -r1.ln();
    let x = a * t1;
    let mut j = scaled_exp_integral(x);
    for m in 2..=k {
        j = (T::one() - x * j) / T::from_usize_lossy(m as usize - 1);
    }
    r1 * t1 * j
}

fn tail_integral<T: Real, F: Fn(T) -> T>(f: &F, r1: T, p: T, k: u32) -> Result<T> {
    if !(p > -T::one()) {
        return Err(LabError::Evaluation {
            node: 0.0,
            message: format!("integrand ~ r^{p} is not integrable at the origin"),
        });
    }
    if k > 0 && !(r1 < T::one()) {
        return Err(LabError::Evaluation {
            node: r1.as_f64(),
            message: "logarithmic tail model needs the first cell inside (0, 1)".into(),
        });
    }
    let v = f(r1);
    if !v.is_finite() {
        return Err(LabError::Evaluation {
            node: r1.as_f64(),
            message: format!("non-finite integrand sample {v}"),
        });
    }
    Ok(v * tail_factor(r1, p, k))
}

/// Composite integral of `f` over the grid with cells merged in groups of
/// `stride`, summed left to right.
fn composite<T: Real, F: Fn(T) -> T>(
    f: &F,
    grid: &RadialGrid<T>,
    stride: usize,
    tail_power: Option<T>,
    tail_log_power: u32,
) -> Result<T> {
    let n = grid.cells();
    let mut acc = T::zero();
    let mut first = 0;
    while first < n {
        let last = (first + stride).min(n);
        let part = match tail_power {
            Some(p) if first == 0 && grid.nodes[0] == T::zero() => tail_integral(f, grid.nodes[last], p, tail_log_power)?,
            _ => span_integral(f, grid, first, last)?,
        };
        acc = acc + part;
        first = last;
    }
    Ok(acc)
}

/// `∫ f(r) dr` over the grid: 4-point Gauss per cell, Richardson-style
/// comparison against the half-resolution grid, `error = |I_n - I_{n/2}| / 7`.
pub fn integrate_with<T: Real, F: Fn(T) -> T>(
    f: F,
    grid: &RadialGrid<T>,
    opts: QuadOptions<T>,
) -> Result<IntegralValue<T>> {
    let fine = composite(&f, grid, 1, opts.tail_power, opts.tail_log_power)?;
    let coarse = composite(&f, grid, 2, opts.tail_power, opts.tail_log_power)?;
    let error_estimate = (fine - coarse).abs() / T::lit(7.0);
    let tol = opts.abs_tol + opts.rel_tol * fine.abs();
    Ok(IntegralValue {
        value: fine,
        error_estimate,
        converged: error_estimate <= tol,
    })
}

/// `σ_{N-1} ∫ h(r) μ(r) r^{N-1} dr` over the grid.
pub fn integrate_radial<T: Real, H: Fn(T) -> T>(
    h: H,
    spec: &WeightSpec<T>,
    grid: &RadialGrid<T>,
) -> Result<IntegralValue<T>> {
    integrate_radial_with(h, spec, grid, QuadOptions::default())
}

pub fn integrate_radial_with<T: Real, H: Fn(T) -> T>(
    h: H,
    spec: &WeightSpec<T>,
    grid: &RadialGrid<T>,
    opts: QuadOptions<T>,
) -> Result<IntegralValue<T>> {
    let sigma = sphere_area::<T>(spec.dimension);
    let n_minus_1 = T::from_usize_lossy(spec.dimension - 1);
    let v = integrate_with(
        |r: T| {
            let hv = h(r);
            if hv == T::zero() {
                return T::zero();
            }
            hv * spec.mu(r) * r.powf(n_minus_1)
        },
        grid,
        opts,
    )?;
    Ok(IntegralValue {
        value: sigma * v.value,
        error_estimate: sigma * v.error_estimate,
        converged: v.converged,
    })
}
