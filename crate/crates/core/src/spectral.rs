//! Piecewise-linear Galerkin discretization of the radial forms as
//! generalized symmetric tridiagonal eigenproblems `A u = λ M u`.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::forms::EffectivePotential;
use crate::quadrature::{log_graded_grid, sphere_area, RadialGrid};
use crate::weights::{AdmissibleConstants, WeightKind, WeightSpec};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    DirichletBoth,
    NaturalLeftDirichletRight,
}

/// `A` and `M` restricted to the free nodes; the mass matrix is the
/// consistent one, so `mass_offdiag` is generally nonzero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TridiagonalForm<T> {
    pub diag: Vec<T>,
    pub offdiag: Vec<T>,
    pub mass_diag: Vec<T>,
    pub mass_offdiag: Vec<T>,
    #[serde(skip)]
    pub grid: RadialGrid<T>,
    pub boundary: Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralResult<T> {
    pub lambda1: T,
    /// Values at every grid node (zero at Dirichlet nodes), normalized in
    /// the mass inner product.
    pub eigenvector: Vec<T>,
    pub iterations: usize,
    /// Normwise backward error of the returned pair (see [`scaled_residual`]).
    pub residual: T,
    pub refinement_history: Vec<(usize, T)>,
}

impl<T: Real> TridiagonalForm<T> {
    /// Form from explicit entries on the free nodes of `grid`.
    pub fn from_parts(
        diag: Vec<T>,
        offdiag: Vec<T>,
        mass_diag: Vec<T>,
        mass_offdiag: Vec<T>,
        grid: RadialGrid<T>,
        boundary: Boundary,
    ) -> Result<Self> {
        let form = Self {
            diag,
            offdiag,
            mass_diag,
            mass_offdiag,
            grid,
            boundary,
        };
        form.validate()?;
        Ok(form)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.diag.len();
        if m == 0 || m != self.free_len(&self.grid) {
            return Err(LabError::Config(format!(
                "form has {m} unknowns, grid with {} nodes needs {}",
                self.grid.nodes.len(),
                self.free_len(&self.grid)
            )));
        }
        if self.offdiag.len() + 1 != m || self.mass_diag.len() != m || self.mass_offdiag.len() + 1 != m {
            return Err(LabError::Config("inconsistent tridiagonal lengths".into()));
        }
        if let Some(i) = self.mass_diag.iter().position(|x| !(*x > T::zero())) {
            return Err(LabError::Config(format!("mass_diag[{i}] = {} is not positive", self.mass_diag[i])));
        }
        Ok(())
    }

    fn free_len(&self, grid: &RadialGrid<T>) -> usize {
        free_range(grid.nodes.len(), self.boundary).len()
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Number of generalized eigenvalues strictly below `lambda`, from the
    /// signs of the `LDLᵀ` pivots of `A - λM`.
    pub fn sturm_count(&self, lambda: T) -> usize {
        let tiny = T::min_positive_value();
        let mut count = 0;
        let mut d = T::one();
        for i in 0..self.len() {
            let a = self.diag[i] - lambda * self.mass_diag[i];
            d = if i == 0 {
                a
            } else {
                let e = self.offdiag[i - 1] - lambda * self.mass_offdiag[i - 1];
                a - e * (e / d)
            };
            if d == T::zero() {
                d = -(a.abs() * T::epsilon() + tiny);
            }
            if d < T::zero() {
                count += 1;
            }
        }
        count
    }

    fn apply(&self, diag: &[T], off: &[T], x: &[T]) -> Vec<T> {
        let m = x.len();
        (0..m)
            .map(|i| {
                let mut y = diag[i] * x[i];
                if i > 0 {
                    y = y + off[i - 1] * x[i - 1];
                }
                if i + 1 < m {
                    y = y + off[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    fn dot(x: &[T], y: &[T]) -> T {
        x.iter().zip(y).fold(T::zero(), |acc, (a, b)| acc + *a * *b)
    }

    /// `xᵀAx / xᵀMx`.
    pub fn rayleigh(&self, x: &[T]) -> T {
        Self::dot(x, &self.apply(&self.diag, &self.offdiag, x)) / Self::dot(x, &self.apply(&self.mass_diag, &self.mass_offdiag, x))
    }

    /// Restriction of nodal values to the free nodes.
    pub fn restrict(&self, values: &[T]) -> Vec<T> {
        values[free_range(self.grid.nodes.len(), self.boundary)].to_vec()
    }
}

fn free_range(nodes: usize, boundary: Boundary) -> std::ops::Range<usize> {
    let first = match boundary {
        Boundary::DirichletBoth => 1,
        Boundary::NaturalLeftDirichletRight => 0,
    };
    let last = nodes.saturating_sub(1);
    first..last.max(first)
}

/// `∫_a^b r^p dr` without cancellation for close endpoints.
fn power_integral<T: Real>(a: T, b: T, p: T) -> T {
    let e = p + T::one();
    if a == T::zero() {
        b.powf(e) / e
    } else {
        a.powf(e) * (e * (b / a).ln()).exp_m1() / e
    }
}

/// Galerkin assembly with a signed potential `q` entering as `A - ∫ q φ_i φ_j dμ`.
fn assemble_signed<T: Real, K, Q>(
    spec: &WeightSpec<T>,
    kernel: K,
    potential: Option<Q>,
    grid: &RadialGrid<T>,
    boundary: Boundary,
) -> Result<TridiagonalForm<T>>
where
    K: Fn(T) -> T,
    Q: Fn(T) -> Result<T>,
{
    if !(grid.r_min > T::zero()) {
        return Err(LabError::Domain("assembly needs a truncated grid with r_min > 0".into()));
    }
    let range = free_range(grid.nodes.len(), boundary);
    if range.is_empty() {
        return Err(LabError::Config("grid has no free nodes".into()));
    }
    let m = range.len();
    let first = range.start;
    let sigma = sphere_area::<T>(spec.dimension);
    let nm1 = T::from_usize_lossy(spec.dimension - 1);
    let closed_form = matches!(spec.kind, WeightKind::Unit | WeightKind::Power);
    let mut diag = vec![T::zero(); m];
    let mut offdiag = vec![T::zero(); m.saturating_sub(1)];
    let mut mass_diag = vec![T::zero(); m];
    let mut mass_offdiag = vec![T::zero(); m.saturating_sub(1)];

    for c in 0..grid.cells() {
        let (a, b) = (grid.nodes[c], grid.nodes[c + 1]);
        let h = b - a;
        let fail = |message: String| LabError::Assembly {
            cell: c,
            left: a.as_f64(),
            right: b.as_f64(),
            message,
        };
        let pts = grid.span_points(c, c + 1);
        let k = if closed_form {
            sigma * power_integral(a, b, nm1 - spec.gamma)
        } else {
            pts.iter().fold(T::zero(), |acc, (r, w)| acc + *w * spec.mu(*r) * r.powf(nm1)) * sigma
        };
        let stiff = k / (h * h);
        // local 2x2 blocks [[ll, lr], [lr, rr]]
        let (mut ml, mut mlr, mut mr) = (T::zero(), T::zero(), T::zero());
        let (mut ql, mut qlr, mut qr) = (T::zero(), T::zero(), T::zero());
        for (r, w) in pts {
            let dm = w * sigma * spec.mu(r) * r.powf(nm1);
            let pl = (b - r) / h;
            let pr = (r - a) / h;
            let kv = kernel(r) * dm;
            ml = ml + kv * pl * pl;
            mlr = mlr + kv * pl * pr;
            mr = mr + kv * pr * pr;
            if let Some(q) = &potential {
                let qv = q(r).map_err(|e| fail(e.to_string()))? * dm;
                ql = ql + qv * pl * pl;
                qlr = qlr + qv * pl * pr;
                qr = qr + qv * pr * pr;
            }
        }
        let entries = [stiff, ml, mlr, mr, ql, qlr, qr];
        if let Some(bad) = entries.iter().find(|x| !x.is_finite()) {
            return Err(fail(format!("non-finite local entry {bad}")));
        }
        let li = c.checked_sub(first).filter(|_| c >= first && c < range.end);
        let ri = (c + 1).checked_sub(first).filter(|_| c + 1 >= first && c + 1 < range.end);
        if let Some(i) = li {
            diag[i] = diag[i] + stiff - ql;
            mass_diag[i] = mass_diag[i] + ml;
        }
        if let Some(j) = ri {
            diag[j] = diag[j] + stiff - qr;
            mass_diag[j] = mass_diag[j] + mr;
        }
        if let (Some(i), Some(_)) = (li, ri) {
            offdiag[i] = offdiag[i] - stiff - qlr;
            mass_offdiag[i] = mass_offdiag[i] + mlr;
        }
    }
    TridiagonalForm::from_parts(diag, offdiag, mass_diag, mass_offdiag, grid.clone(), boundary)
}

/// `A_ij = σ∫ φ_i' φ_j' μ r^{N-1} dr - ∫ Ṽ φ_i φ_j dμ`,
/// `M_ij = ∫ kernel φ_i φ_j dμ`.
pub fn assemble_forms<T: Real, K: Fn(T) -> T>(
    spec: &WeightSpec<T>,
    kernel: K,
    vt: Option<&EffectivePotential<T>>,
    grid: &RadialGrid<T>,
    boundary: Boundary,
) -> Result<TridiagonalForm<T>> {
    match vt {
        Some(v) => assemble_signed(spec, kernel, Some(|r| v.eval(r)), grid, boundary),
        None => assemble_signed(spec, kernel, None::<fn(T) -> Result<T>>, grid, boundary),
    }
}

/// LAPACK-style tridiagonal solve with partial pivoting; `None` on an exactly
/// singular pivot.
pub(crate) fn solve_tridiagonal<T: Real>(sub: &[T], diag: &[T], sup: &[T], rhs: &[T]) -> Option<Vec<T>> {
    let n = diag.len();
    let mut dl = sub.to_vec();
    let mut d = diag.to_vec();
    let mut du = sup.to_vec();
    let mut b = rhs.to_vec();
    if n == 1 {
        return if d[0] == T::zero() { None } else { Some(vec![b[0] / d[0]]) };
    }
    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == T::zero() {
                return None;
            }
            let fact = dl[i] / d[i];
            d[i + 1] = d[i + 1] - fact * du[i];
            b[i + 1] = b[i + 1] - fact * b[i];
            dl[i] = T::zero();
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 2 < n {
                dl[i] = du[i + 1];
                du[i + 1] = -fact * dl[i];
            } else {
                dl[i] = T::zero();
            }
            du[i] = temp;
            let tb = b[i];
            b[i] = b[i + 1];
            b[i + 1] = tb - fact * b[i + 1];
        }
    }
    if d[n - 1] == T::zero() {
        return None;
    }
    b[n - 1] = b[n - 1] / d[n - 1];
    b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - dl[i] * b[i + 2]) / d[i];
    }
    if b.iter().all(|x| x.is_finite()) {
        Some(b)
    } else {
        None
    }
}

const MAX_BISECTION: usize = 4000;
const MAX_INVERSE: usize = 60;

/// Smallest generalized eigenvalue by Sturm bisection, refined and paired
/// with its eigenvector by inverse iteration.
pub fn bottom_eigenvalue<T: Real>(form: &TridiagonalForm<T>) -> Result<SpectralResult<T>> {
    form.validate()?;
    let m = form.len();
    let ones = vec![T::one(); m];
    let mut hi = form.rayleigh(&ones);
    if !hi.is_finite() {
        return Err(LabError::Numerical("non-finite Rayleigh quotient of the constant vector".into()));
    }
    let mut iterations = 0;
    let mut step = (hi.abs() + T::one()) * T::lit(1e-10);
    while form.sturm_count(hi) == 0 {
        hi = hi + step;
        step = step + step;
        iterations += 1;
        if iterations > MAX_BISECTION {
            return Err(LabError::Numerical("could not bracket the bottom eigenvalue from above".into()));
        }
    }
    let mut width = hi.abs() + T::one();
    let mut lo = hi - width;
    while form.sturm_count(lo) > 0 {
        width = width + width;
        lo = hi - width;
        iterations += 1;
        if iterations > MAX_BISECTION || !lo.is_finite() {
            return Err(LabError::Numerical("could not bracket the bottom eigenvalue from below".into()));
        }
    }
    let eps = T::epsilon() * T::lit(4.0);
    while iterations < MAX_BISECTION {
        let mid = T::lit(0.5) * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= eps * lo.abs().max(hi.abs()) {
            break;
        }
        if form.sturm_count(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    let shift = T::lit(0.5) * (lo + hi);

    // inverse iteration at the bisection shift
    let sub: Vec<T> = form
        .offdiag
        .iter()
        .zip(&form.mass_offdiag)
        .map(|(a, b)| *a - shift * *b)
        .collect();
    let mut dg: Vec<T> = form.diag.iter().zip(&form.mass_diag).map(|(a, b)| *a - shift * *b).collect();
    let tol = T::lit(1e-8).max(T::epsilon() * T::lit(1e3));
    let mut x = ones;
    let mut lambda = shift;
    let mut residual = T::infinity();
    let mut converged = false;
    let mut prev_res = T::infinity();
    for _ in 0..MAX_INVERSE {
        iterations += 1;
        let rhs = form.apply(&form.mass_diag, &form.mass_offdiag, &x);
        let y = match solve_tridiagonal(&sub, &dg, &sub, &rhs) {
            Some(y) => y,
            None => {
                // shift hit an eigenvalue exactly; nudge it
                let nudge = (shift.abs() + T::one()) * T::epsilon() * T::lit(16.0);
                for (v, mm) in dg.iter_mut().zip(&form.mass_diag) {
                    *v = *v + nudge * *mm;
                }
                continue;
            }
        };
        let my = form.apply(&form.mass_diag, &form.mass_offdiag, &y);
        let norm = TridiagonalForm::dot(&y, &my).sqrt();
        if !(norm > T::zero() && norm.is_finite()) {
            return Err(LabError::Numerical(format!("inverse iteration produced norm {norm}")));
        }
        x = y.into_iter().map(|v| v / norm).collect();
        let ax = form.apply(&form.diag, &form.offdiag, &x);
        lambda = TridiagonalForm::dot(&x, &ax);
        residual = scaled_residual(form, &x, lambda);
        if residual <= tol || residual >= prev_res * T::lit(0.9) {
            converged = true;
            break;
        }
        prev_res = residual;
    }
    if !converged || !lambda.is_finite() || residual > tol {
        return Err(LabError::Numerical(format!(
            "inverse iteration did not converge: shift {shift}, last estimate {lambda}, residual {residual}"
        )));
    }
    let total: T = x.iter().fold(T::zero(), |a, b| a + *b);
    if total < T::zero() {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    let mut eigenvector = vec![T::zero(); form.grid.nodes.len()];
    let range = free_range(form.grid.nodes.len(), form.boundary);
    eigenvector[range].copy_from_slice(&x);
    Ok(SpectralResult {
        lambda1: lambda,
        eigenvector,
        iterations,
        residual,
        refinement_history: vec![(form.grid.cells(), lambda)],
    })
}

/// Normwise backward error `‖D r‖ / ((‖DAD‖ + |λ| ‖DMD‖) ‖D⁻¹x‖)` with
/// `D = diag(M)^{-1/2}`, `r = (A - λM)x`; invariant under the diagonal
/// rescalings that the many-decade grids produce.
pub fn scaled_residual<T: Real>(form: &TridiagonalForm<T>, x: &[T], lambda: T) -> T {
    let m = x.len();
    let d: Vec<T> = form.mass_diag.iter().map(|v| v.sqrt().recip()).collect();
    let (mut rr, mut yy, mut a_norm, mut m_norm) = (T::zero(), T::zero(), T::zero(), T::zero());
    for i in 0..m {
        let mut r = (form.diag[i] - lambda * form.mass_diag[i]) * x[i];
        let mut ra = form.diag[i].abs() * d[i] * d[i];
        let mut rm = T::one();
        for j in [i.wrapping_sub(1), i + 1] {
            if j < m {
                let k = i.min(j);
                r = r + (form.offdiag[k] - lambda * form.mass_offdiag[k]) * x[j];
                ra = ra + form.offdiag[k].abs() * d[i] * d[j];
                rm = rm + form.mass_offdiag[k].abs() * d[i] * d[j];
            }
        }
        rr = rr + (r * d[i]).powi(2);
        yy = yy + (x[i] / d[i]).powi(2);
        a_norm = a_norm.max(ra);
        m_norm = m_norm.max(rm);
    }
    rr.sqrt() / ((a_norm + lambda.abs() * m_norm) * yy.sqrt())
}

impl<T: Real> SpectralResult<T> {
    pub fn to_csv(&self, grid: &RadialGrid<T>) -> String {
        let mut s = String::from("r,u\n");
        for (r, u) in grid.nodes.iter().zip(&self.eigenvector) {
            s.push_str(&format!("{r:e},{u:e}\n"));
        }
        s
    }
}

/// Grid used by the scans on `(r_min, r_max)`: uniform in `ln r + 4 r`.
pub fn scan_grid<T: Real>(r_min: T, r_max: T, n: usize) -> Result<RadialGrid<T>> {
    log_graded_grid(r_min, r_max, n, T::lit(4.0), None)
}

/// One row of a sharpness scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SharpnessRow<T> {
    pub r_min: T,
    pub n: usize,
    pub best_constant: T,
}

/// Discrete best constant of
/// `(∫|∇φ|² dμ + K₁∫φ² dμ) / ∫φ²/r² dμ` over P1 functions vanishing at
/// `r_min` and `1`, for each `(r_min, n)`.
pub fn sharpness_scan<T: Real>(
    spec: &WeightSpec<T>,
    k: &AdmissibleConstants<T>,
    refinements: &[(T, usize)],
) -> Result<Vec<SharpnessRow<T>>> {
    if refinements.is_empty() {
        return Err(LabError::Config("sharpness scan needs at least one refinement".into()));
    }
    if refinements.windows(2).any(|w| w[1].0 > w[0].0) {
        return Err(LabError::Config("sharpness refinements must have nonincreasing r_min".into()));
    }
    let k1 = k.k1;
    refinements
        .iter()
        .map(|&(r_min, n)| {
            let grid = scan_grid(r_min, T::one(), n)?;
            let potential = (k1 != T::zero()).then_some(move |_r: T| Ok(-k1));
            let form = assemble_signed(spec, |r: T| (r * r).recip(), potential, &grid, Boundary::DirichletBoth)?;
            let res = bottom_eigenvalue(&form)?;
            Ok(SharpnessRow {
                r_min,
                n,
                best_constant: res.lambda1,
            })
        })
        .collect()
}

/// Limit of `c(r_min) = a + b / ln²(r_min)` through the last two rows.
pub fn extrapolate_sharpness<T: Real>(rows: &[SharpnessRow<T>]) -> Result<T> {
    if rows.len() < 2 {
        return Err(LabError::Config("extrapolation needs two rows".into()));
    }
    let (p, q) = (rows[rows.len() - 2], rows[rows.len() - 1]);
    let lp = p.r_min.ln().powi(2);
    let lq = q.r_min.ln().powi(2);
    if lp == lq {
        return Err(LabError::Config("extrapolation needs distinct r_min".into()));
    }
    Ok((q.best_constant * lq - p.best_constant * lp) / (lq - lp))
}

pub fn sharpness_csv<T: Real>(rows: &[SharpnessRow<T>]) -> String {
    let mut s = String::from("r_min,n,best_constant\n");
    for row in rows {
        s.push_str(&format!("{:e},{},{:e}\n", row.r_min, row.n, row.best_constant));
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeVerdict {
    BoundedBelow,
    Collapsing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeThresholds<T> {
    /// Minimal factor by which a negative `λ₁` must grow per level.
    pub collapse_factor: T,
    /// Maximal ratio of successive `λ₁` differences.
    pub geometric_ratio: T,
}

impl<T: Real> Default for ProbeThresholds<T> {
    fn default() -> Self {
        Self {
            collapse_factor: T::lit(10.0),
            geometric_ratio: T::lit(0.9),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeOutcome<T> {
    pub verdict: ProbeVerdict,
    /// `(truncation parameter, n, λ₁)` per level.
    pub history: Vec<(T, usize, T)>,
}

/// Classifies the last three values of a refinement ladder.
pub fn classify_ladder<T: Real>(lambdas: &[T], th: &ProbeThresholds<T>) -> Result<ProbeVerdict> {
    if lambdas.len() < 3 {
        return Err(LabError::Config("ladder needs at least three levels".into()));
    }
    let l = &lambdas[lambdas.len() - 3..];
    let collapsing = (0..2).all(|i| l[i] < T::zero() && l[i + 1] <= th.collapse_factor * l[i]);
    if collapsing {
        return Ok(ProbeVerdict::Collapsing);
    }
    let d1 = (l[1] - l[0]).abs();
    let d2 = (l[2] - l[1]).abs();
    // grid-to-grid noise below this is treated as settled
    let floor = T::lit(1e-6) * l[2].abs().max(T::one());
    if d2 <= th.geometric_ratio * d1 || (d1 <= floor && d2 <= floor) {
        return Ok(ProbeVerdict::BoundedBelow);
    }
    Err(LabError::Inconclusive(format!(
        "last three levels {:e}, {:e}, {:e} neither collapse nor settle; refine further",
        l[0], l[1], l[2]
    )))
}

/// `λ₁` of `-(L + Ṽ)` on `(r_min, r_max)`, natural at `r_min`, Dirichlet at `r_max`.
pub fn lambda1<T: Real>(spec: &WeightSpec<T>, vt: &EffectivePotential<T>, grid: &RadialGrid<T>) -> Result<SpectralResult<T>> {
    let form = assemble_forms(spec, |_| T::one(), Some(vt), grid, Boundary::NaturalLeftDirichletRight)?;
    bottom_eigenvalue(&form)
}

/// Runs `λ₁` with `Ṽ = coefficient / r²` on `(r_min, 1)` for each
/// `(r_min, n)` and classifies the ladder.
pub fn supercritical_probe<T: Real>(
    spec: &WeightSpec<T>,
    coefficient: T,
    refinements: &[(T, usize)],
    th: &ProbeThresholds<T>,
) -> Result<ProbeOutcome<T>> {
    let vt = EffectivePotential::inverse_square(coefficient)?;
    let mut history = Vec::with_capacity(refinements.len());
    for &(r_min, n) in refinements {
        let grid = scan_grid(r_min, T::one(), n)?;
        history.push((r_min, n, lambda1(spec, &vt, &grid)?.lambda1));
    }
    let lambdas: Vec<T> = history.iter().map(|h| h.2).collect();
    Ok(ProbeOutcome {
        verdict: classify_ladder(&lambdas, th)?,
        history,
    })
}

impl<T: Real> ProbeOutcome<T> {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,n,lambda1\n");
        for (p, n, l) in &self.history {
            s.push_str(&format!("{p:e},{n},{l:e}\n"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correctors::PotentialSpec;
    use crate::quadrature::graded_grid;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn laplacian_1d(n: usize) -> TridiagonalForm<f64> {
        let h = 1.0 / n as f64;
        let grid = RadialGrid::from_nodes((0..=n).map(|k| k as f64 * h).collect()).unwrap();
        let m = n - 1;
        TridiagonalForm::from_parts(vec![2.0 / h; m], vec![-1.0 / h; m - 1], vec![h; m], vec![0.0; m - 1], grid, Boundary::DirichletBoth)
            .unwrap()
    }

    #[test]
    fn dirichlet_laplacian_bottom() {
        let res = bottom_eigenvalue(&laplacian_1d(512)).unwrap();
        assert!((res.lambda1 / (PI * PI) - 1.0).abs() < 1e-3);
        assert!(res.residual <= 1e-8);
        let mass: f64 = res.eigenvector.iter().map(|u| u * u / 512.0).sum();
        assert_relative_eq!(mass, 1.0, max_relative = 1e-12);
        assert!(res.eigenvector.iter().all(|u| *u >= 0.0));
    }

    #[test]
    fn f32_laplacian() {
        let n = 128usize;
        let h = 1.0f32 / n as f32;
        let grid = RadialGrid::from_nodes((0..=n).map(|k| k as f32 * h).collect()).unwrap();
        let m = n - 1;
        let form = TridiagonalForm::from_parts(vec![2.0 / h; m], vec![-1.0 / h; m - 1], vec![h; m], vec![0.0; m - 1], grid, Boundary::DirichletBoth)
            .unwrap();
        let l = bottom_eigenvalue(&form).unwrap().lambda1;
        assert!((l / (PI as f32 * PI as f32) - 1.0).abs() < 1e-3);
    }

    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
        let n = 2000;
        let h = (b - a) / n as f64;
        (0..=n)
            .map(|k| {
                let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                w * f(a + k as f64 * h)
            })
            .sum::<f64>()
            * h
            / 3.0
    }

    #[test]
    fn hand_assembly_three_interior_nodes() {
        let unit = WeightSpec::unit(3).unwrap();
        let nodes = vec![0.2, 0.4, 0.6, 0.8, 1.0];
        let grid = RadialGrid::from_nodes(nodes.clone()).unwrap();
        let form = assemble_forms(&unit, |_| 1.0, None, &grid, Boundary::DirichletBoth).unwrap();
        assert_eq!(form.len(), 3);
        let h = 0.2;
        let hat = |i: usize, r: f64| (1.0 - (r - nodes[i]).abs() / h).max(0.0);
        let dhat = |i: usize, r: f64| {
            if (r - nodes[i]).abs() >= h {
                0.0
            } else if r < nodes[i] {
                1.0 / h
            } else {
                -1.0 / h
            }
        };
        for i in 1..=3 {
            for j in i..=(i + 1).min(3) {
                let (lo, hi) = (nodes[i - 1], nodes[j + 1]);
                // split at the kink(s) so Simpson sees smooth pieces
                let mut stiff = 0.0;
                let mut mass = 0.0;
                for c in (i - 1)..(j + 1) {
                    let (a, b) = (nodes[c], nodes[c + 1]);
                    let mid = 0.5 * (a + b);
                    stiff += dhat(i, mid) * dhat(j, mid) * 4.0 * PI * (b.powi(3) - a.powi(3)) / 3.0;
                    mass += simpson(|r| 4.0 * PI * r * r * hat(i, r) * hat(j, r), a, b);
                }
                assert!(lo < hi);
                if i == j {
                    assert_relative_eq!(form.diag[i - 1], stiff, max_relative = 1e-12);
                    assert_relative_eq!(form.mass_diag[i - 1], mass, max_relative = 1e-10);
                } else {
                    assert_relative_eq!(form.offdiag[i - 1], stiff, max_relative = 1e-12);
                    assert_relative_eq!(form.mass_offdiag[i - 1], mass, max_relative = 1e-10);
                }
            }
        }
    }

    #[test]
    fn assembly_domain_and_errors() {
        let unit = WeightSpec::unit(3).unwrap();
        let g0 = graded_grid(0.0, 1.0, 64, 2.0).unwrap();
        assert!(matches!(
            assemble_forms(&unit, |_| 1.0, None, &g0, Boundary::DirichletBoth),
            Err(LabError::Domain(_))
        ));
        let g = graded_grid(1e-3, 1.0, 64, 2.0).unwrap();
        let f = assemble_forms(&unit, |r: f64| r.powi(-2), None, &g, Boundary::DirichletBoth).unwrap();
        assert!(f.mass_diag.iter().chain(&f.mass_offdiag).all(|x| x.is_finite()));
        let bad = assemble_forms(&unit, |r: f64| if r > 0.5 { f64::NAN } else { 1.0 }, None, &g, Boundary::DirichletBoth);
        match bad {
            Err(LabError::Assembly { left, right, .. }) => assert!(right > 0.5 && left < right),
            other => panic!("expected assembly error, got {other:?}"),
        }
        let strong = EffectivePotential::inverse_square(3.0).unwrap();
        assert!(assemble_forms(&unit, |_| 1.0, Some(&strong), &g, Boundary::NaturalLeftDirichletRight).is_ok());
    }

    #[test]
    fn nonnegative_without_potential() {
        let g = scan_grid(1e-3, 1.0, 256).unwrap();
        for spec in [
            WeightSpec::unit(3).unwrap(),
            WeightSpec::power(4, 1.0).unwrap(),
            WeightSpec::power_exp(4, 0.5, 1.0, 2.0).unwrap(),
            WeightSpec::gaussian(5, 1.0).unwrap(),
        ] {
            let l = lambda1(&spec, &EffectivePotential::zero(), &g).unwrap().lambda1;
            assert!(l >= 0.0, "{spec:?}: {l}");
        }
    }

    #[test]
    fn sturm_brackets_bottom() {
        let unit = WeightSpec::unit(3).unwrap();
        let g = scan_grid(1e-3, 1.0, 512).unwrap();
        let vt = EffectivePotential::inverse_square(0.2).unwrap();
        let form = assemble_forms(&unit, |_| 1.0, Some(&vt), &g, Boundary::NaturalLeftDirichletRight).unwrap();
        let l = bottom_eigenvalue(&form).unwrap().lambda1;
        assert_eq!(form.sturm_count(l - 1e-6), 0);
        assert!(form.sturm_count(l + 1e-6) >= 1);
    }

    #[test]
    fn variational_consistency_with_interpolants() {
        let unit = WeightSpec::unit(3).unwrap();
        let g = scan_grid(1e-3, 1.0, 512).unwrap();
        let vt = EffectivePotential::inverse_square(0.2).unwrap();
        let form = assemble_forms(&unit, |_| 1.0, Some(&vt), &g, Boundary::NaturalLeftDirichletRight).unwrap();
        let l = bottom_eigenvalue(&form).unwrap().lambda1;
        for phi in crate::forms::global_family(0.5, 1.0).unwrap() {
            let vals: Vec<f64> = g.nodes.iter().map(|r| phi.value(*r)).collect();
            let x = form.restrict(&vals);
            assert!(l <= form.rayleigh(&x) + 1e-8, "{}", phi.label);
        }
    }

    #[test]
    fn sharpness_monotone_in_n_and_r_min() {
        let unit = WeightSpec::unit(3).unwrap();
        let k = AdmissibleConstants::tied(0.0, 0.0, 3).unwrap();
        let by_n = sharpness_scan(&unit, &k, &[(1e-3, 128), (1e-3, 256), (1e-3, 512)]).unwrap();
        assert!(by_n.windows(2).all(|w| w[1].best_constant <= w[0].best_constant));
        let by_r = sharpness_scan(&unit, &k, &[(1e-2, 512), (1e-3, 512), (1e-4, 512)]).unwrap();
        assert!(by_r.windows(2).all(|w| w[1].best_constant <= w[0].best_constant));
        assert!(by_r.iter().all(|r| r.best_constant > 0.25));
        assert!(sharpness_scan(&unit, &k, &[(1e-3, 128), (1e-2, 128)]).is_err());
        assert!(sharpness_scan(&unit, &k, &[]).is_err());
    }

    #[test]
    fn sharpness_targets() {
        let cases = [
            (WeightSpec::unit(3).unwrap(), AdmissibleConstants::tied(0.0, 0.0, 3).unwrap(), 0.25),
            (WeightSpec::power(4, 1.0).unwrap(), AdmissibleConstants::tied(0.0, -1.0, 4).unwrap(), 0.25),
            (WeightSpec::unit(5).unwrap(), AdmissibleConstants::tied(0.0, 0.0, 5).unwrap(), 2.25f64),
        ];
        for (spec, k, target) in cases {
            let rows = sharpness_scan(&spec, &k, &[(1e-4, 1024), (1e-5, 1024)]).unwrap();
            let lim = extrapolate_sharpness(&rows).unwrap();
            assert!((lim / target - 1.0).abs() < 0.02, "{lim} vs {target}");
        }
    }

    #[test]
    fn probe_examples() {
        let unit = WeightSpec::unit(3).unwrap();
        let th = ProbeThresholds::default();
        let ladder = [(1e-2, 256), (1e-3, 384), (1e-4, 512), (1e-5, 640)];
        let sub = supercritical_probe(&unit, 0.2, &ladder, &th).unwrap();
        assert_eq!(sub.verdict, ProbeVerdict::BoundedBelow);
        let sup = supercritical_probe(&unit, 0.5, &ladder, &th).unwrap();
        assert_eq!(sup.verdict, ProbeVerdict::Collapsing);
        let zero = supercritical_probe(&unit, 0.0, &ladder, &th).unwrap();
        assert_eq!(zero.verdict, ProbeVerdict::BoundedBelow);
        assert!(zero.history.iter().all(|h| h.2 >= 0.0));
        let near = supercritical_probe(&unit, 0.24, &ladder, &th).unwrap();
        assert!(near.history.iter().all(|h| h.2 > 0.0));
        assert!(supercritical_probe(&unit, -1.0, &ladder, &th).is_err());
    }

    #[test]
    fn ladder_classifier() {
        let th = ProbeThresholds::default();
        assert_eq!(classify_ladder(&[-1.0, -20.0, -400.0], &th).unwrap(), ProbeVerdict::Collapsing);
        assert_eq!(classify_ladder(&[3.0, 2.0, 1.5], &th).unwrap(), ProbeVerdict::BoundedBelow);
        assert!(matches!(classify_ladder(&[3.0, 2.0, 0.5], &th), Err(LabError::Inconclusive(_))));
        assert!(classify_ladder(&[1.0, 2.0], &th).is_err());
    }

    #[test]
    fn log_kernel_collapse_toward_unit_sphere() {
        let unit = WeightSpec::unit(3).unwrap();
        let th = ProbeThresholds::default();
        let lam = |c: f64| -> Vec<f64> {
            [1e-6, 1e-7, 1e-8]
                .iter()
                .map(|d| {
                    let g = log_graded_grid(1e-3, 1.0 - d, 1024, 0.0, Some(1.0)).unwrap();
                    let vt = EffectivePotential::new(0.25, Some(PotentialSpec::log_kernel(c).unwrap())).unwrap();
                    lambda1(&unit, &vt, &g).unwrap().lambda1
                })
                .collect()
        };
        assert_eq!(classify_ladder(&lam(0.35), &th).unwrap(), ProbeVerdict::Collapsing);
        assert_eq!(classify_ladder(&lam(0.25), &th).unwrap(), ProbeVerdict::BoundedBelow);
    }

    #[test]
    fn power_integral_matches_direct() {
        assert_relative_eq!(power_integral(0.5f64, 0.75, 2.0), (0.75f64.powi(3) - 0.125) / 3.0, max_relative = 1e-14);
        assert_relative_eq!(power_integral(0.0f64, 2.0, 1.0), 2.0, max_relative = 1e-14);
    }
}
