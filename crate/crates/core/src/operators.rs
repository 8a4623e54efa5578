//! The principal operator `A`, the memory operator `B`, and sampled
//! falsifiers for their structural assumptions.
//!
//! Checkers never prove a property. They sample seeded inputs, fit the
//! constants the a priori estimates need, and return a witness when a
//! sample violates the property. Every witness can be regenerated from
//! its seed through the public `*_sample` functions.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{dual_norm_estimate, pairing, va_norm, DualNorm, Grid, StateVector, Tridiagonal};

/// `φ(x) = |x|^{p-2} x`.
#[inline]
fn phi(x: f64, p: f64) -> f64 {
    if p == 2.0 {
        x
    } else {
        x.abs().powf(p - 2.0) * x
    }
}

/// `φ'(x) = (p-1)|x|^{p-2}`.
#[inline]
fn phi_prime(x: f64, p: f64) -> f64 {
    if p == 2.0 {
        1.0
    } else {
        (p - 1.0) * x.abs().powf(p - 2.0)
    }
}

/// Finite-difference p-Laplacian `-(φ(D⁺v_i) - φ(D⁺v_{i-1}))/h` with
/// Dirichlet ghosts.
pub fn p_laplacian_apply(v: &StateVector, grid: &Grid, p: f64) -> StateVector {
    let n = v.len();
    let h = grid.h();
    let at = |k: usize| if k == 0 || k == n + 1 { 0.0 } else { v[k - 1] };
    let flux: Vec<f64> = (0..=n).map(|k| phi((at(k + 1) - at(k)) / h, p)).collect();
    StateVector::from_fn(n, |i, _| -(flux[i + 1] - flux[i]) / h)
}

/// Jacobian of [`p_laplacian_apply`]; symmetric tridiagonal.
pub fn p_laplacian_jacobian(v: &StateVector, grid: &Grid, p: f64) -> Tridiagonal {
    let n = v.len();
    let h = grid.h();
    let h2 = h * h;
    let at = |k: usize| if k == 0 || k == n + 1 { 0.0 } else { v[k - 1] };
    let slope: Vec<f64> = (0..=n).map(|k| phi_prime((at(k + 1) - at(k)) / h, p)).collect();
    let diag = (0..n).map(|i| (slope[i] + slope[i + 1]) / h2).collect();
    let off: Vec<f64> = (1..n).map(|i| -slope[i] / h2).collect();
    Tridiagonal {
        lower: off.clone(),
        diag,
        upper: off,
    }
}

/// A user supplied nonlinear map.
#[derive(Clone)]
pub struct CustomMap {
    pub name: String,
    pub map: Arc<dyn Fn(&StateVector) -> StateVector + Send + Sync>,
}

impl fmt::Debug for CustomMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomMap({})", self.name)
    }
}

#[derive(Debug, Clone)]
pub enum AKind {
    PLaplacian { p: f64 },
    /// Linear operator given by its matrix (expected symmetric positive
    /// definite; the checkers decide).
    Linear(DMatrix<f64>),
    Custom(CustomMap),
}

/// Jacobian of `A` at a point.
#[derive(Debug, Clone)]
pub enum Jacobian {
    Tridiagonal(Tridiagonal),
    Dense(DMatrix<f64>),
}

#[derive(Debug, Clone)]
pub struct OperatorA {
    kind: AKind,
    grid: Grid,
}

impl OperatorA {
    pub fn new(kind: AKind, grid: Grid) -> Result<Self> {
        match &kind {
            AKind::PLaplacian { p } if !(p.is_finite() && *p >= 2.0) => {
                return Err(Error::InvalidParameter(format!("p-Laplacian needs p >= 2, got {p}")));
            }
            AKind::Linear(m) if m.nrows() != grid.n() || m.ncols() != grid.n() => {
                return Err(Error::DimensionMismatch {
                    expected: grid.n(),
                    got: m.nrows(),
                });
            }
            _ => {}
        }
        Ok(Self { kind, grid })
    }

    pub fn p_laplacian(grid: Grid, p: f64) -> Result<Self> {
        Self::new(AKind::PLaplacian { p }, grid)
    }

    pub fn identity(grid: Grid, scale: f64) -> Self {
        Self {
            kind: AKind::Linear(DMatrix::identity(grid.n(), grid.n()) * scale),
            grid,
        }
    }

    pub fn laplacian_plus_identity(grid: Grid) -> Self {
        Self {
            kind: AKind::Linear(grid.laplacian_matrix() + DMatrix::identity(grid.n(), grid.n())),
            grid,
        }
    }

    pub fn zero(grid: Grid) -> Self {
        Self {
            kind: AKind::Linear(DMatrix::zeros(grid.n(), grid.n())),
            grid,
        }
    }

    /// Broken instance: fails monotonicity.
    pub fn negated_laplacian(grid: Grid) -> Self {
        Self {
            kind: AKind::Linear(-grid.laplacian_matrix()),
            grid,
        }
    }

    /// Broken instance for `p = 2`: `A(v) = exp(v) - 1` entrywise grows
    /// exponentially.
    pub fn exp_entrywise(grid: Grid) -> Self {
        Self {
            kind: AKind::Custom(CustomMap {
                name: "exp_entrywise".into(),
                map: Arc::new(|v: &StateVector| v.map(|x| x.exp_m1())),
            }),
            grid,
        }
    }

    /// Broken instance: Laplacian plus entrywise sign, monotone but not
    /// hemicontinuous.
    pub fn sign_switch(grid: Grid) -> Self {
        let lap = grid.laplacian_tridiagonal();
        Self {
            kind: AKind::Custom(CustomMap {
                name: "sign_switch".into(),
                map: Arc::new(move |v: &StateVector| {
                    lap.mul(v) + v.map(|x| if x >= 0.0 { 1.0 } else { -1.0 })
                }),
            }),
            grid,
        }
    }

    pub fn kind(&self) -> &AKind {
        &self.kind
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn is_linear(&self) -> bool {
        match self.kind {
            AKind::Linear(_) => true,
            AKind::PLaplacian { p } => p == 2.0,
            AKind::Custom(_) => false,
        }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            AKind::PLaplacian { p } => format!("p_laplacian(p={p})"),
            AKind::Linear(_) => "linear".into(),
            AKind::Custom(c) => c.name.clone(),
        }
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        match &self.kind {
            AKind::PLaplacian { p } => p_laplacian_apply(v, &self.grid, *p),
            AKind::Linear(m) => m * v,
            AKind::Custom(c) => (c.map)(v),
        }
    }

    pub fn jacobian(&self, v: &StateVector) -> Jacobian {
        match &self.kind {
            AKind::PLaplacian { p } => Jacobian::Tridiagonal(p_laplacian_jacobian(v, &self.grid, *p)),
            AKind::Linear(m) => Jacobian::Dense(m.clone()),
            AKind::Custom(c) => {
                // central differences, column by column
                let n = v.len();
                let base = v.amax().max(1.0);
                let mut jac = DMatrix::zeros(n, n);
                for j in 0..n {
                    let eps = 1e-7 * base;
                    let mut plus = v.clone();
                    let mut minus = v.clone();
                    plus[j] += eps;
                    minus[j] -= eps;
                    let col = ((c.map)(&plus) - (c.map)(&minus)) / (2.0 * eps);
                    jac.set_column(j, &col);
                }
                Jacobian::Dense(jac)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BKind {
    Laplacian,
    FractionalLaplacian(f64),
    IdentityScaled(f64),
    /// Matrix supplied directly (including deliberately broken ones).
    Custom,
}

/// Linear symmetric operator `B`, stored as a dense matrix.
#[derive(Debug, Clone)]
pub struct OperatorB {
    kind: BKind,
    grid: Grid,
    matrix: DMatrix<f64>,
    max_abs: f64,
}

impl OperatorB {
    pub fn new(kind: BKind, grid: Grid) -> Result<Self> {
        let n = grid.n();
        let matrix = match kind {
            BKind::Laplacian => grid.laplacian_matrix(),
            BKind::IdentityScaled(c) => {
                if !(c.is_finite() && c > 0.0) {
                    return Err(Error::InvalidParameter(format!("identity scale must be positive, got {c}")));
                }
                DMatrix::identity(n, n) * c
            }
            BKind::FractionalLaplacian(s) => {
                if !(s > 0.5 && s < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "fractional order must lie in (1/2, 1), got {s}"
                    )));
                }
                fractional_laplacian_matrix(&grid, s)
            }
            BKind::Custom => {
                return Err(Error::InvalidParameter("use OperatorB::from_matrix for custom B".into()))
            }
        };
        Ok(Self::with_kind(kind, grid, matrix))
    }

    pub fn from_matrix(matrix: DMatrix<f64>, grid: Grid) -> Self {
        Self::with_kind(BKind::Custom, grid, matrix)
    }

    fn with_kind(kind: BKind, grid: Grid, matrix: DMatrix<f64>) -> Self {
        let max_abs = matrix.amax();
        Self {
            kind,
            grid,
            matrix,
            max_abs,
        }
    }

    /// Adds `delta` to entry `(0, 1)` only, breaking symmetry.
    pub fn with_asymmetry(mut self, delta: f64) -> Self {
        if self.grid.n() > 1 && delta != 0.0 {
            self.matrix[(0, 1)] += delta;
            self.kind = BKind::Custom;
            self.max_abs = self.matrix.amax();
        }
        self
    }

    pub fn kind(&self) -> BKind {
        self.kind
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub(crate) fn max_abs_entry(&self) -> f64 {
        self.max_abs
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        &self.matrix * v
    }
}

/// Spectral fractional power `V diag(λ_k^s) Vᵀ` of the Dirichlet Laplacian.
pub fn fractional_laplacian_matrix(grid: &Grid, s: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(grid.laplacian_matrix());
    let powered = eig.eigenvalues.map(|l| l.max(0.0).powf(s));
    let v = &eig.eigenvectors;
    let m = v * DMatrix::from_diagonal(&powered) * v.transpose();
    // exact symmetry; the product is symmetric only up to round-off
    (&m + m.transpose()) * 0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Data needed to reproduce a failed sample.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Witness {
    pub seed: Option<u64>,
    pub magnitude: Option<f64>,
    pub indices: Option<(usize, usize)>,
    pub time: Option<f64>,
    /// The offending quantity (negative pairing, asymmetry, excess, ...).
    pub value: f64,
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FittedConstants {
    pub beta_a: Option<f64>,
    pub mu_a: Option<f64>,
    pub c_a: Option<f64>,
    pub beta_b: Option<f64>,
    pub mu_b: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub property: String,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub fitted: FittedConstants,
    pub detail: String,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    fn pass(property: &str, fitted: FittedConstants, detail: String) -> Self {
        Self {
            property: property.into(),
            verdict: Verdict::Pass,
            witness: None,
            fitted,
            detail,
        }
    }

    fn fail(property: &str, witness: Witness, fitted: FittedConstants, detail: String) -> Self {
        Self {
            property: property.into(),
            verdict: Verdict::Fail,
            witness: Some(witness),
            fitted,
            detail,
        }
    }
}

fn random_vector(grid: &Grid, rng: &mut ChaCha8Rng) -> StateVector {
    StateVector::from_fn(grid.n(), |_, _| rng.random_range(-1.0..1.0))
}

/// Pair `(u, v)` probed by [`check_monotone`] for a given seed.
pub fn monotone_sample(grid: &Grid, seed: u64) -> (StateVector, StateVector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mag = 10f64.powf(rng.random_range(-2.0..2.0));
    let u = random_vector(grid, &mut rng) * mag;
    let v = random_vector(grid, &mut rng) * mag;
    (u, v)
}

/// Direction (unit `va_norm` in exponent `p`) probed by the growth and
/// coercivity checkers for a given seed.
pub fn direction_sample(grid: &Grid, p: f64, seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_vector(grid, &mut rng);
    let n = va_norm(&u, grid, p);
    u / n
}

/// Magnitudes `10^-2 .. 10^2` used by the growth and coercivity checkers.
pub fn default_magnitudes() -> Vec<f64> {
    (0..=8).map(|k| 10f64.powf(-2.0 + 0.5 * k as f64)).collect()
}

fn monotone_defect(a: &OperatorA, u: &StateVector, v: &StateVector) -> (f64, f64) {
    let grid = a.grid();
    let diff = u - v;
    let val = pairing(&(a.apply(u) - a.apply(v)), &diff, grid);
    let scale = pairing(&diff, &diff, grid).max(f64::MIN_POSITIVE);
    (val, scale)
}

/// Samples `<Au - Av, u - v> ≥ 0` over `seeds` seeded pairs.
pub fn check_monotone(a: &OperatorA, seeds: usize, base_seed: u64) -> AssumptionReport {
    let grid = a.grid();
    let mut min_ratio = f64::INFINITY;
    for k in 0..seeds.max(1) {
        let seed = base_seed + k as u64;
        let (u, v) = monotone_sample(grid, seed);
        let (val, scale) = monotone_defect(a, &u, &v);
        min_ratio = min_ratio.min(val / scale);
        if val < -1e-10 || !val.is_finite() {
            return AssumptionReport::fail(
                "A monotone",
                Witness {
                    seed: Some(seed),
                    value: val,
                    point: u.iter().chain(v.iter()).copied().collect(),
                    ..Default::default()
                },
                FittedConstants::default(),
                format!("<Au-Av,u-v> = {val:.6e} at seed {seed}"),
            );
        }
    }
    AssumptionReport::pass(
        "A monotone",
        FittedConstants::default(),
        format!("min <Au-Av,u-v>/|u-v|_H^2 = {min_ratio:.6e}"),
    )
}

/// Growth ratio `‖Av‖_{V_A*} / (1 + ‖v‖^{p-1})` for `v = m·u`.
fn growth_ratio(a: &OperatorA, p: f64, u: &StateVector, m: f64, seed: u64) -> f64 {
    let v = u * m;
    let av = a.apply(&v);
    if !av.iter().all(|x| x.is_finite()) {
        return f64::INFINITY;
    }
    let dual = dual_norm_estimate(&av, a.grid(), DualNorm::VA(p), 25, seed);
    dual / (1.0 + m.powf(p - 1.0))
}

/// Growth check with the default magnitude range.
pub fn check_growth_a(a: &OperatorA, p: f64, seeds: usize, base_seed: u64) -> AssumptionReport {
    check_growth_a_with(a, p, seeds, base_seed, &default_magnitudes())
}

/// Fits the smallest `β_A` with `‖Av‖_{V_A*} ≤ β_A(1 + ‖v‖_{V_A}^{p-1})`
/// over the sampled directions and magnitudes. Fails when the ratio more
/// than doubles over the top decade of magnitudes, i.e. no finite `β_A`
/// survives rescaling.
pub fn check_growth_a_with(
    a: &OperatorA,
    p: f64,
    seeds: usize,
    base_seed: u64,
    magnitudes: &[f64],
) -> AssumptionReport {
    let grid = a.grid();
    let mut beta: f64 = 0.0;
    let top = magnitudes.iter().cloned().fold(f64::MIN, f64::max);
    for k in 0..seeds.max(1) {
        let seed = base_seed + k as u64;
        let u = direction_sample(grid, p, seed);
        let ratios: Vec<f64> = magnitudes.iter().map(|&m| growth_ratio(a, p, &u, m, seed)).collect();
        let top_ratio = growth_ratio(a, p, &u, top, seed);
        let lower_ratio = growth_ratio(a, p, &u, top / 10.0, seed);
        let witness = || Witness {
            seed: Some(seed),
            magnitude: Some(top),
            value: top_ratio,
            point: (&u * top).iter().copied().collect(),
            ..Default::default()
        };
        if !top_ratio.is_finite() || (top_ratio > 1e-12 && top_ratio > 2.0 * lower_ratio) {
            return AssumptionReport::fail(
                "A growth of order p-1",
                witness(),
                FittedConstants::default(),
                format!(
                    "ratio grows from {lower_ratio:.3e} to {top_ratio:.3e} over the top decade (seed {seed})"
                ),
            );
        }
        beta = ratios.into_iter().fold(beta, f64::max);
    }
    AssumptionReport::pass(
        "A growth of order p-1",
        FittedConstants {
            beta_a: Some(beta),
            ..Default::default()
        },
        format!("beta_A = {beta:.6e}"),
    )
}

/// Direction minimizing `<Mv, v>/‖v‖²_{V_A,2}` for a linear `A` (the
/// generalized eigenvector against the Laplacian).
fn worst_linear_direction(m: &DMatrix<f64>, grid: &Grid) -> Option<StateVector> {
    let chol = grid.laplacian_matrix().cholesky()?;
    let l = chol.l();
    let l_inv = l.clone().try_inverse()?;
    let sym = (m + m.transpose()) * 0.5;
    let s = &l_inv * sym * l_inv.transpose();
    let eig = SymmetricEigen::new((&s + s.transpose()) * 0.5);
    let k = eig.eigenvalues.imin();
    let y = eig.eigenvectors.column(k).into_owned();
    Some(l_inv.transpose() * y)
}

/// Fits `(μ_A, c_A)` in `<Av, v> ≥ μ_A ‖v‖_{V_A}^p - c_A`.
///
/// First tries `c_A = 0` with `μ_A` the smallest sampled ratio
/// `<Av,v>/‖v‖^p`. When that ratio is not positive, `μ_A` is taken from the
/// largest magnitude only and `c_A` absorbs the small-magnitude deficit;
/// fails when even the large-magnitude ratio is not positive.
pub fn check_coercive_a(a: &OperatorA, p: f64, seeds: usize, base_seed: u64) -> AssumptionReport {
    let grid = a.grid();
    let mags = default_magnitudes();
    let top = *mags.last().unwrap();
    let mut directions: Vec<(Option<u64>, StateVector)> = (0..seeds.max(1))
        .map(|k| {
            let seed = base_seed + k as u64;
            (Some(seed), direction_sample(grid, p, seed))
        })
        .collect();
    if let (AKind::Linear(m), true) = (&a.kind, p == 2.0) {
        if let Some(d) = worst_linear_direction(m, grid) {
            let n = va_norm(&d, grid, p);
            directions.push((None, d / n));
        }
    }
    // (ratio, P, N, seed, magnitude, point)
    let mut samples = Vec::new();
    for (seed, u) in &directions {
        for &m in &mags {
            let v = u * m;
            let form = pairing(&a.apply(&v), &v, grid);
            let norm_p = va_norm(&v, grid, p).powf(p);
            samples.push((form / norm_p, form, norm_p, *seed, m, v));
        }
    }
    let min_all = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    if min_all > 0.0 && min_all.is_finite() {
        return AssumptionReport::pass(
            "A p-coercive",
            FittedConstants {
                mu_a: Some(min_all),
                c_a: Some(0.0),
                ..Default::default()
            },
            format!("mu_A = {min_all:.6e}, c_A = 0"),
        );
    }
    let worst_top = samples
        .iter()
        .filter(|s| s.4 == top)
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .unwrap();
    let mu = worst_top.0;
    if !(mu > 1e-12 && mu.is_finite()) {
        return AssumptionReport::fail(
            "A p-coercive",
            Witness {
                seed: worst_top.3,
                magnitude: Some(top),
                value: worst_top.1,
                point: worst_top.5.iter().copied().collect(),
                ..Default::default()
            },
            FittedConstants::default(),
            format!(
                "<Av,v>/|v|^p = {:.3e} at magnitude {top:.1e}; no positive mu_A",
                worst_top.0
            ),
        );
    }
    let c_a = samples.iter().map(|s| mu * s.2 - s.1).fold(0.0, f64::max);
    AssumptionReport::pass(
        "A p-coercive",
        FittedConstants {
            mu_a: Some(mu),
            c_a: Some(c_a),
            ..Default::default()
        },
        format!("mu_A = {mu:.6e}, c_A = {c_a:.6e}"),
    )
}

fn rayleigh(m: &DMatrix<f64>, x: &StateVector) -> f64 {
    x.dot(&(m * x)) / x.dot(x)
}

/// Checks symmetry and strong positivity of `B` and returns `μ_B`
/// (smallest eigenvalue, inverse iteration) and `β_B` (largest,
/// power iteration). Both are eigenvalues of the matrix, i.e. constants
/// with respect to the H-norm: `<Bv,v> ≥ μ_B ‖v‖²_H`, `‖Bv‖_H ≤ β_B ‖v‖_H`.
pub fn check_b(b: &OperatorB) -> AssumptionReport {
    let m = b.matrix();
    let n = m.nrows();
    let mut worst = (0.0_f64, 0, 0);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (m[(i, j)] - m[(j, i)]).abs();
            if d > worst.0 {
                worst = (d, i, j);
            }
        }
    }
    if worst.0 > 1e-12 {
        return AssumptionReport::fail(
            "B symmetric",
            Witness {
                indices: Some((worst.1, worst.2)),
                value: worst.0,
                point: vec![m[(worst.1, worst.2)], m[(worst.2, worst.1)]],
                ..Default::default()
            },
            FittedConstants::default(),
            format!("|B[{},{}] - B[{},{}]| = {:.3e}", worst.1, worst.2, worst.2, worst.1, worst.0),
        );
    }

    let beta_b = power_iteration(m);
    let chol = match m.clone().cholesky() {
        Some(c) => c,
        None => {
            // not positive definite: report the worst Rayleigh direction found
            let eig = SymmetricEigen::new(m.clone());
            let k = eig.eigenvalues.imin();
            let x = eig.eigenvectors.column(k).into_owned();
            return AssumptionReport::fail(
                "B strongly positive",
                Witness {
                    value: rayleigh(m, &x),
                    point: x.iter().copied().collect(),
                    ..Default::default()
                },
                FittedConstants {
                    beta_b: Some(beta_b),
                    ..Default::default()
                },
                format!("smallest eigenvalue {:.3e} <= 0", eig.eigenvalues[k]),
            );
        }
    };
    let mut x = StateVector::from_fn(n, |i, _| 1.0 + 0.1 * (i as f64).sin());
    x /= x.norm();
    let mut mu = rayleigh(m, &x);
    for _ in 0..1000 {
        let mut y = chol.solve(&x);
        y /= y.norm();
        let next = rayleigh(m, &y);
        x = y;
        let done = (next - mu).abs() <= 1e-15 * next.abs();
        mu = next;
        if done {
            break;
        }
    }
    if !(mu > 0.0) {
        return AssumptionReport::fail(
            "B strongly positive",
            Witness {
                value: mu,
                point: x.iter().copied().collect(),
                ..Default::default()
            },
            FittedConstants::default(),
            format!("mu_B = {mu:.3e} <= 0"),
        );
    }
    AssumptionReport::pass(
        "B symmetric, bounded, strongly positive",
        FittedConstants {
            beta_b: Some(beta_b),
            mu_b: Some(mu),
            ..Default::default()
        },
        format!("mu_B = {mu:.6e}, beta_B = {beta_b:.6e} (H-norm frame)"),
    )
}

/// Largest eigenvalue in magnitude by power iteration with Rayleigh
/// quotients, started near the highest-frequency mode.
fn power_iteration(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut x = StateVector::from_fn(n, |i, _| {
        let s = if i % 2 == 0 { 1.0 } else { -1.0 };
        s * (1.0 + 0.01 * i as f64)
    });
    x /= x.norm();
    let mut est = rayleigh(m, &x);
    let mut stable = 0;
    for _ in 0..50_000 {
        let mut y = m * &x;
        let ny = y.norm();
        if ny == 0.0 {
            return 0.0;
        }
        y /= ny;
        let next = rayleigh(m, &y);
        x = y;
        if (next - est).abs() <= 1e-15 * next.abs() {
            stable += 1;
            if stable >= 3 {
                est = next;
                break;
            }
        } else {
            stable = 0;
        }
        est = next;
    }
    est.abs()
}

/// Largest adjacent difference of `θ ↦ <A(u + θv), w>` on `m` uniform
/// points of `[0, 1]`.
pub fn hemicontinuity_probe(a: &OperatorA, u: &StateVector, v: &StateVector, w: &StateVector, m: usize) -> f64 {
    let m = m.max(2);
    let grid = a.grid();
    let vals: Vec<f64> = (0..m)
        .map(|k| {
            let theta = k as f64 / (m - 1) as f64;
            pairing(&a.apply(&(u + v * theta)), w, grid)
        })
        .collect();
    vals.windows(2).map(|p| (p[1] - p[0]).abs()).fold(0.0, f64::max)
}

/// Triple `(u, v, w)` probed by [`check_hemicontinuity`]; the segment
/// `u + θv` crosses zero in every component at some `θ ∈ (0, 1)`.
pub fn hemicontinuity_sample(grid: &Grid, seed: u64) -> (StateVector, StateVector, StateVector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = random_vector(grid, &mut rng);
    let c = rng.random_range(0.2..0.8);
    let w = random_vector(grid, &mut rng);
    (&v * -c, v, w)
}

/// Flags a failure when the probe's max jump does not decay like `1/m`
/// between `m = 10` and `m = 1000`.
pub fn check_hemicontinuity(a: &OperatorA, seeds: usize, base_seed: u64) -> AssumptionReport {
    let grid = a.grid();
    for k in 0..seeds.max(1) {
        let seed = base_seed + k as u64;
        let (u, v, w) = hemicontinuity_sample(grid, seed);
        let coarse = hemicontinuity_probe(a, &u, &v, &w, 10);
        let fine = hemicontinuity_probe(a, &u, &v, &w, 1000);
        if fine > 0.1 * coarse && fine > 1e-12 {
            return AssumptionReport::fail(
                "A hemicontinuous",
                Witness {
                    seed: Some(seed),
                    value: fine,
                    point: u.iter().chain(v.iter()).chain(w.iter()).copied().collect(),
                    ..Default::default()
                },
                FittedConstants::default(),
                format!("max jump {coarse:.3e} (m=10) vs {fine:.3e} (m=1000) does not decay"),
            );
        }
    }
    AssumptionReport::pass("A hemicontinuous", FittedConstants::default(), "jumps decay ~1/m".into())
}
