//! Time stepping for `v' + Av + B(w + u0) = f`, `w' = λ(v - w)`, and the
//! two strategies that turn it into an inclusion solver.
//!
//! One step: `rhs_n = v_n + τ(f_n - B(w_n + u0))`, then `v_{n+1}` solves
//! `v + τAv = rhs_n` by damped Newton, then `w_{n+1}` is the exact memory
//! update driven by `v_{n+1}`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{memory_step, TimeMesh};
use crate::operators::{Jacobian, OperatorA, OperatorB};
use crate::setvalued::{distance_to_set, select, truncate, SelectionRule, SetField};
use crate::spaces::{h_norm, Exponents, Grid, StateVector};

/// Everything that defines one instance of the inclusion.
#[derive(Debug, Clone)]
pub struct ProblemData {
    pub grid: Grid,
    pub mesh: TimeMesh,
    pub lambda: f64,
    pub u0: StateVector,
    pub v0: StateVector,
    pub a: OperatorA,
    pub b: OperatorB,
    pub field: SetField,
    pub exps: Exponents,
}

impl ProblemData {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        grid: Grid,
        mesh: TimeMesh,
        lambda: f64,
        u0: StateVector,
        v0: StateVector,
        a: OperatorA,
        b: OperatorB,
        field: SetField,
    ) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        for (name, v) in [("u0", &u0), ("v0", &v0)] {
            grid.check(v)?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(name.into()));
            }
        }
        let p = match a.kind() {
            crate::operators::AKind::PLaplacian { p } => *p,
            _ => 2.0,
        };
        Ok(Self {
            grid,
            mesh,
            lambda,
            u0,
            v0,
            a,
            b,
            field,
            exps: Exponents::new(p)?,
        })
    }

    /// Same problem on a different time mesh.
    pub fn with_mesh(&self, mesh: TimeMesh) -> Self {
        Self { mesh, ..self.clone() }
    }

    pub fn with_field(&self, field: SetField) -> Self {
        Self { field, ..self.clone() }
    }
}

/// Starting point of each Newton solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitialGuess {
    /// `v = rhs`, exact when `A = 0`.
    Rhs,
    /// The previous state `v_n`.
    Previous,
    /// `rhs` plus seeded uniform noise of the given amplitude.
    Perturbed { amplitude: f64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol_newton: f64,
    pub max_newton: usize,
    pub guess: InitialGuess,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_newton: 1e-12,
            max_newton: 60,
            guess: InitialGuess::Rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Discrete solution: `v` and `w` on all `N+1` nodes, `f` on the `N` steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub v: Vec<StateVector>,
    pub w: Vec<StateVector>,
    pub f: Vec<StateVector>,
    pub newton: Vec<NewtonStats>,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.f.len()
    }
}

/// Solves `v + τ·Av = rhs` to an absolute H-norm residual `tol` (raised to
/// a round-off floor when `tol` is below what the data can resolve).
pub fn implicit_step_a(
    rhs: &StateVector,
    tau: f64,
    a: &OperatorA,
    tol: f64,
    max_iter: usize,
) -> Result<StateVector> {
    newton_solve(rhs, tau, a, None, tol, max_iter, rhs.clone()).map(|(v, _)| v)
}

/// Damped Newton for `v + τ(Av + Lv) = rhs` with optional linear `L`.
fn newton_solve(
    rhs: &StateVector,
    tau: f64,
    a: &OperatorA,
    extra: Option<&DMatrix<f64>>,
    tol: f64,
    max_iter: usize,
    guess: StateVector,
) -> Result<(StateVector, NewtonStats)> {
    if !(tau > 0.0 && tol > 0.0) {
        return Err(Error::InvalidParameter(format!("need tau > 0 and tol > 0, got {tau}, {tol}")));
    }
    let grid = a.grid();
    let operator = |v: &StateVector| -> StateVector {
        let mut av = a.apply(v);
        if let Some(l) = extra {
            av += l * v;
        }
        av
    };
    let residual_of = |v: &StateVector| -> (StateVector, f64, f64) {
        let tav = operator(v) * tau;
        let r = v + &tav - rhs;
        // round-off level of the three summands
        let floor = 64.0 * f64::EPSILON * (h_norm(v, grid) + h_norm(&tav, grid) + h_norm(rhs, grid));
        let nr = h_norm(&r, grid);
        (r, nr, floor)
    };
    let mut v = guess;
    let (mut r, mut nr, mut floor) = residual_of(&v);
    for it in 0..=max_iter {
        if !nr.is_finite() {
            break;
        }
        if nr <= tol.max(floor) {
            return Ok((v, NewtonStats { iterations: it, residual: nr }));
        }
        if it == max_iter {
            break;
        }
        let jac = a.jacobian(&v);
        let delta = match (jac, extra) {
            (Jacobian::Tridiagonal(t), None) => t.identity_plus(tau).solve(&r),
            (jac, _) => {
                let mut m = match jac {
                    Jacobian::Tridiagonal(t) => tridiagonal_dense(&t),
                    Jacobian::Dense(m) => m,
                };
                if let Some(l) = extra {
                    m += l;
                }
                let sys = DMatrix::identity(v.len(), v.len()) + m * tau;
                match sys.lu().solve(&r) {
                    Some(d) => d,
                    None => break,
                }
            }
        };
        // halving line search on the residual norm
        let mut step = 1.0;
        loop {
            let cand = &v - &delta * step;
            let (rc, nc, fc) = residual_of(&cand);
            if nc < (1.0 - 1e-4 * step) * nr || step < 1e-10 {
                if nc < nr {
                    v = cand;
                    r = rc;
                    nr = nc;
                    floor = fc;
                }
                break;
            }
            step *= 0.5;
        }
        if step < 1e-10 && nr > tol.max(floor) {
            // no descent left: stagnation above tolerance
            return Err(Error::NonlinearSolve {
                step: None,
                residual: nr,
                iterations: it + 1,
            });
        }
    }
    Err(Error::NonlinearSolve {
        step: None,
        residual: nr,
        iterations: max_iter,
    })
}

fn tridiagonal_dense(t: &crate::spaces::Tridiagonal) -> DMatrix<f64> {
    let n = t.diag.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            t.diag[i]
        } else if j + 1 == i {
            t.lower[j]
        } else if i + 1 == j {
            t.upper[i]
        } else {
            0.0
        }
    })
}

fn initial_guess(opts: &SolverOptions, rhs: &StateVector, prev: &StateVector, step: usize) -> StateVector {
    match opts.guess {
        InitialGuess::Rhs => rhs.clone(),
        InitialGuess::Previous => prev.clone(),
        InitialGuess::Perturbed { amplitude, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(step as u64));
            rhs.map(|x| x + amplitude * rng.random_range(-1.0..1.0))
        }
    }
}

fn with_step(e: Error, n: usize) -> Error {
    match e {
        Error::NonlinearSolve { residual, iterations, .. } => Error::NonlinearSolve {
            step: Some(n),
            residual,
            iterations,
        },
        other => other,
    }
}

/// Advances one step from `(v_n, w_n)` with selection `f_n`.
fn advance(
    data: &ProblemData,
    v: &StateVector,
    w: &StateVector,
    f: &StateVector,
    n: usize,
    opts: &SolverOptions,
) -> Result<(StateVector, StateVector, NewtonStats)> {
    let tau = data.mesh.tau();
    let rhs = v + (f - data.b.apply(&(w + &data.u0))) * tau;
    let guess = initial_guess(opts, &rhs, v, n);
    let (v_next, stats) = newton_solve(&rhs, tau, &data.a, None, opts.tol_newton, opts.max_newton, guess)
        .map_err(|e| with_step(e, n))?;
    if v_next.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("v at step {}", n + 1)));
    }
    let w_next = memory_step(w, &v_next, data.lambda, tau);
    Ok((v_next, w_next, stats))
}

/// `G(f)`: the discrete solution driven by the given per-step forcing.
pub fn solve_single_valued(ftraj: &[StateVector], data: &ProblemData, opts: &SolverOptions) -> Result<Trajectory> {
    let steps = data.mesh.steps();
    if ftraj.len() != steps {
        return Err(Error::DimensionMismatch {
            expected: steps,
            got: ftraj.len(),
        });
    }
    let mut traj = Trajectory {
        v: Vec::with_capacity(steps + 1),
        w: Vec::with_capacity(steps + 1),
        f: ftraj.to_vec(),
        newton: Vec::with_capacity(steps),
    };
    traj.v.push(data.v0.clone());
    traj.w.push(data.grid.zeros());
    for (n, f) in ftraj.iter().enumerate() {
        let (v, w, stats) = advance(data, &traj.v[n], &traj.w[n], f, n, opts)?;
        traj.v.push(v);
        traj.w.push(w);
        traj.newton.push(stats);
    }
    Ok(traj)
}

/// One-pass select-then-step: `f_n = select(F(t_n, v_n), rule, f_{n-1})`.
/// `ProjectPrevious` has no previous selection at `n = 0` and uses the
/// minimal-norm element there.
pub fn marching_solve(data: &ProblemData, rule: &SelectionRule, opts: &SolverOptions) -> Result<Trajectory> {
    let steps = data.mesh.steps();
    let mut traj = Trajectory {
        v: vec![data.v0.clone()],
        w: vec![data.grid.zeros()],
        f: Vec::with_capacity(steps),
        newton: Vec::with_capacity(steps),
    };
    for n in 0..steps {
        let set = data.field.evaluate(data.mesh.t(n), &traj.v[n], &data.grid)?;
        let f = match (rule, traj.f.last()) {
            (SelectionRule::ProjectPrevious, None) => select(&set, &SelectionRule::MinimalNorm, None, &data.grid)?,
            (rule, prev) => select(&set, rule, prev, &data.grid)?,
        };
        let (v, w, stats) = advance(data, &traj.v[n], &traj.w[n], &f, n, opts)?;
        traj.v.push(v);
        traj.w.push(w);
        traj.f.push(f);
        traj.newton.push(stats);
    }
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointResult {
    pub f_star: Vec<StateVector>,
    pub v_star: Trajectory,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub converged: bool,
}

impl FixedPointResult {
    /// Successive residual ratios `r_{k+1} / r_k`.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.residual_history.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

/// Outer iteration `f_{k+1}(t_n) = P_{F̂(t_n, v_k(t_n))} f_k(t_n)` with
/// `v_k = G(f_k)` and `F̂` the field truncated at `truncation_radius`.
///
/// Stops at the first `k` with `max_n ‖f_{k+1}(t_n) - f_k(t_n)‖_H ≤ tol_fp`
/// and returns `(f_k, G(f_k))`. Running out of iterations is reported
/// through `converged = false`, not as an error.
pub fn fixed_point_iterate(
    f0: &[StateVector],
    data: &ProblemData,
    truncation_radius: Option<f64>,
    k_max: usize,
    tol_fp: f64,
    opts: &SolverOptions,
) -> Result<FixedPointResult> {
    if f0.iter().flat_map(|f| f.iter()).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("initial selection".into()));
    }
    let field = match truncation_radius {
        Some(m) => truncate(&data.field, m)?,
        None => data.field.clone(),
    };
    let mut f = f0.to_vec();
    let mut history = Vec::new();
    for k in 0..=k_max {
        let traj = solve_single_valued(&f, data, opts)?;
        let next = next_selection(&field, data, &traj, &f)?;
        let residual = f
            .iter()
            .zip(&next)
            .map(|(a, b)| h_norm(&(a - b), &data.grid))
            .fold(0.0, f64::max);
        history.push(residual);
        if residual <= tol_fp || k == k_max {
            return Ok(FixedPointResult {
                f_star: f,
                v_star: traj,
                iterations: k,
                residual_history: history,
                converged: residual <= tol_fp,
            });
        }
        f = next;
    }
    unreachable!("loop returns at k = k_max")
}

fn next_selection(
    field: &SetField,
    data: &ProblemData,
    traj: &Trajectory,
    prev: &[StateVector],
) -> Result<Vec<StateVector>> {
    (0..data.mesh.steps())
        .map(|n| {
            let set = field.evaluate(data.mesh.t(n), &traj.v[n], &data.grid)?;
            select(&set, &SelectionRule::ProjectPrevious, Some(&prev[n]), &data.grid)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateTolerances {
    pub set: f64,
    pub equation: f64,
}

impl Default for CertificateTolerances {
    fn default() -> Self {
        Self {
            set: 1e-9,
            equation: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub inclusion_max: f64,
    pub inclusion_node: usize,
    pub equation_max: f64,
    pub equation_node: usize,
    pub inclusion_ok: bool,
    pub equation_ok: bool,
    pub initial_ok: bool,
    pub tolerances: CertificateTolerances,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.inclusion_ok && self.equation_ok && self.initial_ok
    }
}

/// Checks that `f_n ∈ F(t_n, v_n)`, that the discrete equation holds, and
/// that the initial states are exact.
pub fn residual_certificate(
    traj: &Trajectory,
    data: &ProblemData,
    tols: &CertificateTolerances,
) -> Result<CertificateReport> {
    let grid = &data.grid;
    let tau = data.mesh.tau();
    let (mut inc, mut inc_at, mut eq, mut eq_at) = (0.0_f64, 0, 0.0_f64, 0);
    for n in 0..traj.steps() {
        let set = data.field.evaluate(data.mesh.t(n), &traj.v[n], grid)?;
        let d = distance_to_set(&set, &traj.f[n], grid)?;
        if d > inc || d.is_nan() {
            inc = d;
            inc_at = n;
        }
        let r = (&traj.v[n + 1] - &traj.v[n]) / tau + data.a.apply(&traj.v[n + 1])
            + data.b.apply(&(&traj.w[n] + &data.u0))
            - &traj.f[n];
        let e = h_norm(&r, grid);
        if e > eq || e.is_nan() {
            eq = e;
            eq_at = n;
        }
    }
    let initial_ok = traj.v.first() == Some(&data.v0) && traj.w.first().is_some_and(|w| w.iter().all(|&x| x == 0.0));
    Ok(CertificateReport {
        inclusion_max: inc,
        inclusion_node: inc_at,
        equation_max: eq,
        equation_node: eq_at,
        inclusion_ok: inc <= tols.set,
        equation_ok: eq <= tols.equation,
        initial_ok,
        tolerances: *tols,
    })
}

/// Memoryless comparison scheme for the `λ → ∞` limit:
/// `v_{n+1} + τ(Av_{n+1} + Bv_{n+1}) = v_n + τ(f_n - Bu0)`.
pub fn solve_without_memory(ftraj: &[StateVector], data: &ProblemData, opts: &SolverOptions) -> Result<Vec<StateVector>> {
    let tau = data.mesh.tau();
    let bu0 = data.b.apply(&data.u0);
    let mut v = vec![data.v0.clone()];
    for (n, f) in ftraj.iter().enumerate() {
        let rhs = &v[n] + (f - &bu0) * tau;
        let (next, _) = newton_solve(
            &rhs,
            tau,
            &data.a,
            Some(data.b.matrix()),
            opts.tol_newton,
            opts.max_newton,
            rhs.clone(),
        )
        .map_err(|e| with_step(e, n))?;
        v.push(next);
    }
    Ok(v)
}

/// `max_n ‖v_n - ṽ_n‖_H` between two trajectories on the same mesh.
pub fn max_deviation(a: &[StateVector], b: &[StateVector], grid: &Grid) -> f64 {
    a.iter().zip(b).map(|(x, y)| h_norm(&(x - y), grid)).fold(0.0, f64::max)
}

/// Per-step forcing sampled from `g(t_n)`.
pub fn sample_forcing(mesh: &TimeMesh, g: impl Fn(f64) -> StateVector) -> Vec<StateVector> {
    (0..mesh.steps()).map(|n| g(mesh.t(n))).collect()
}
