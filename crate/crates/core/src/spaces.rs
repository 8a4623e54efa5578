//! Discrete function spaces on a uniform 1D Dirichlet grid.
//!
//! A single vector space of interior nodal values carries three norms:
//! the discrete L² norm ([`h_norm`]), the discrete W₀^{1,p} seminorm
//! ([`va_norm`]) and the energy norm induced by a symmetric positive
//! operator ([`b_norm`]). Boundary values are zero ghosts.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{p_laplacian_apply, OperatorB};

/// Nodal values on the interior of a [`Grid`].
pub type StateVector = DVector<f64>;

/// Uniform grid on `(0, length)` with `n` interior nodes and homogeneous
/// Dirichlet boundary values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    length: f64,
    h: f64,
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGrid("need at least one interior node".into()));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        Ok(Self {
            n,
            length,
            h: length / (n as f64 + 1.0),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Interior node coordinates `x_i = i·h`, `i = 1..=n`.
    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (1..=self.n).map(move |i| i as f64 * self.h)
    }

    pub fn zeros(&self) -> StateVector {
        StateVector::zeros(self.n)
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> StateVector {
        StateVector::from_iterator(self.n, self.nodes().map(f))
    }

    /// Three-point Dirichlet Laplacian `(2, -1, -1)/h²`.
    pub fn laplacian_matrix(&self) -> DMatrix<f64> {
        let n = self.n;
        let s = 1.0 / (self.h * self.h);
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                2.0 * s
            } else if i.abs_diff(j) == 1 {
                -s
            } else {
                0.0
            }
        })
    }

    pub fn laplacian_tridiagonal(&self) -> Tridiagonal {
        let n = self.n;
        let s = 1.0 / (self.h * self.h);
        Tridiagonal {
            lower: vec![-s; n.saturating_sub(1)],
            diag: vec![2.0 * s; n],
            upper: vec![-s; n.saturating_sub(1)],
        }
    }

    /// Errors unless `v` has one entry per interior node.
    pub fn check(&self, v: &StateVector) -> Result<()> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: v.len(),
            });
        }
        Ok(())
    }
}

/// Tridiagonal matrix stored by diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn identity_plus(&self, scale: f64) -> Tridiagonal {
        Tridiagonal {
            lower: self.lower.iter().map(|x| scale * x).collect(),
            diag: self.diag.iter().map(|x| 1.0 + scale * x).collect(),
            upper: self.upper.iter().map(|x| scale * x).collect(),
        }
    }

    pub fn mul(&self, x: &StateVector) -> StateVector {
        let n = self.diag.len();
        StateVector::from_fn(n, |i, _| {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.upper[i] * x[i + 1];
            }
            s
        })
    }

    /// Thomas algorithm. No pivoting; intended for diagonally dominant or
    /// symmetric positive definite systems.
    pub fn solve(&self, rhs: &StateVector) -> StateVector {
        let n = self.diag.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0];
        if n > 1 {
            c[0] = self.upper[0] / denom;
        }
        d[0] = rhs[0] / denom;
        for i in 1..n {
            denom = self.diag[i] - self.lower[i - 1] * c[i - 1];
            if i + 1 < n {
                c[i] = self.upper[i] / denom;
            }
            d[i] = (rhs[i] - self.lower[i - 1] * d[i - 1]) / denom;
        }
        let mut x = StateVector::zeros(n);
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        x
    }
}

/// Exponent pair `p ≥ 2`, `q = p/(p-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub p: f64,
    pub q: f64,
}

impl Exponents {
    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "exponent p must lie in [2, inf), got {p}"
            )));
        }
        let q = if p == 2.0 { 2.0 } else { p / (p - 1.0) };
        Ok(Self { p, q })
    }
}

/// `<g, v> = h Σ g_i v_i`.
pub fn pairing(g: &StateVector, v: &StateVector, grid: &Grid) -> f64 {
    grid.h * g.dot(v)
}

/// Discrete L² norm `sqrt(h Σ v_i²)`.
pub fn h_norm(v: &StateVector, grid: &Grid) -> f64 {
    (grid.h * v.norm_squared()).sqrt()
}

/// Forward differences `(v_{k+1} - v_k)/h` over the `n+1` grid edges,
/// with zero ghost values at both ends.
pub fn forward_differences(v: &StateVector, grid: &Grid) -> Vec<f64> {
    let n = v.len();
    let at = |k: usize| if k == 0 || k == n + 1 { 0.0 } else { v[k - 1] };
    (0..=n).map(|k| (at(k + 1) - at(k)) / grid.h).collect()
}

/// Discrete W₀^{1,p} norm `(h Σ_k |D⁺v_k|^p)^{1/p}`.
pub fn va_norm(v: &StateVector, grid: &Grid, p: f64) -> f64 {
    let diffs = forward_differences(v, grid);
    if p == 2.0 {
        return (grid.h * diffs.iter().map(|d| d * d).sum::<f64>()).sqrt();
    }
    // scale first so large or tiny states do not over/underflow
    let scale = diffs.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let s: f64 = diffs.iter().map(|d| (d.abs() / scale).powf(p)).sum();
    scale * (grid.h * s).powf(1.0 / p)
}

/// Norm induced by `B`: `sqrt(<Bv, v>)`.
pub fn b_norm(v: &StateVector, b: &OperatorB) -> Result<f64> {
    let form = pairing(&b.apply(v), v, b.grid());
    let scale = b.grid().h() * v.norm_squared() * b.max_abs_entry();
    if form < -1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NegativeForm(form));
    }
    Ok(form.max(0.0).sqrt())
}

/// Norm in which a dual norm is measured.
#[derive(Debug, Clone, Copy)]
pub enum DualNorm<'a> {
    H,
    VA(f64),
    B(&'a OperatorB),
}

/// Random starts used by the ascent estimators in addition to their
/// deterministic starts.
const RANDOM_STARTS: usize = 4;

/// Maximizes a scale-invariant ratio by preconditioned, normalized ascent
/// from several starts. Each start's iterate sequence only accepts
/// improving steps, so the returned best value is nondecreasing in `iters`.
struct RatioAscent<'a> {
    value: &'a dyn Fn(&StateVector) -> f64,
    gradient: &'a dyn Fn(&StateVector) -> StateVector,
    normalize: &'a dyn Fn(&StateVector) -> f64,
    precondition: &'a dyn Fn(&StateVector) -> StateVector,
}

impl RatioAscent<'_> {
    fn run(&self, starts: Vec<StateVector>, iters: usize) -> f64 {
        let mut best = 0.0_f64;
        for start in starts {
            let nrm = (self.normalize)(&start);
            if !(nrm > 0.0 && nrm.is_finite()) {
                continue;
            }
            let mut v = start / nrm;
            let mut j = (self.value)(&v);
            best = best.max(j);
            let mut step = 1.0;
            for _ in 0..iters {
                let d = (self.precondition)(&(self.gradient)(&v));
                let dn = d.amax();
                if !(dn > 0.0 && dn.is_finite()) {
                    break;
                }
                let mut improved = false;
                while step > 1e-14 {
                    let cand = &v + &d * step;
                    let cn = (self.normalize)(&cand);
                    if cn > 0.0 && cn.is_finite() {
                        let cand = cand / cn;
                        let jc = (self.value)(&cand);
                        if jc > j {
                            v = cand;
                            j = jc;
                            improved = true;
                            step = (step * 2.0).min(1e8);
                            break;
                        }
                    }
                    step *= 0.5;
                }
                if !improved {
                    break;
                }
                best = best.max(j);
            }
        }
        best
    }
}

fn random_starts(grid: &Grid, seed: u64, count: usize) -> Vec<StateVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| StateVector::from_fn(grid.n, |_, _| rng.random_range(-1.0..1.0)))
        .collect()
}

/// Lower estimate of `sup_{v≠0} <g, v>/‖v‖` for the chosen norm.
///
/// For `H` the value is exact (`h_norm(g)`). For the other norms the ratio
/// is maximized by ascent preconditioned with the norm's own operator
/// (Laplacian for `VA`, `B` itself for `B`), starting from `g`, the
/// preconditioned `g` and seeded random vectors.
pub fn dual_norm_estimate(
    g: &StateVector,
    grid: &Grid,
    norm: DualNorm<'_>,
    iters: usize,
    seed: u64,
) -> f64 {
    if g.amax() == 0.0 {
        return 0.0;
    }
    match norm {
        DualNorm::H => h_norm(g, grid),
        DualNorm::VA(p) => {
            let lap = grid.laplacian_tridiagonal();
            let value = |v: &StateVector| pairing(g, v, grid) / va_norm(v, grid, p);
            let normalize = |v: &StateVector| va_norm(v, grid, p);
            let gradient = |v: &StateVector| {
                let nv = va_norm(v, grid, p);
                let dn = p_laplacian_apply(v, grid, p) * nv.powf(1.0 - p);
                g / nv - dn * (pairing(g, v, grid) / (nv * nv))
            };
            let precondition = |r: &StateVector| lap.solve(r);
            let mut starts = vec![g.clone(), lap.solve(g)];
            starts.extend(random_starts(grid, seed, RANDOM_STARTS));
            RatioAscent {
                value: &value,
                gradient: &gradient,
                normalize: &normalize,
                precondition: &precondition,
            }
            .run(starts, iters)
        }
        DualNorm::B(b) => {
            let lu = b.matrix().clone().lu();
            let bnorm = |v: &StateVector| pairing(&b.apply(v), v, grid).max(0.0).sqrt();
            let value = |v: &StateVector| pairing(g, v, grid) / bnorm(v);
            let gradient = |v: &StateVector| {
                let nv = bnorm(v);
                g / nv - b.apply(v) * (pairing(g, v, grid) / (nv * nv * nv))
            };
            let precondition = |r: &StateVector| lu.solve(r).unwrap_or_else(|| r.clone());
            let mut starts = vec![g.clone(), precondition(g)];
            starts.extend(random_starts(grid, seed, RANDOM_STARTS));
            RatioAscent {
                value: &value,
                gradient: &gradient,
                normalize: &bnorm,
                precondition: &precondition,
            }
            .run(starts, iters)
        }
    }
}

/// Discrete embedding constant `C_e` with `‖v‖_H ≤ C_e ‖v‖_{V_A}`,
/// estimated as the best ratio found by ascent (a lower estimate of the
/// supremum; exact for `p = 2`, where it equals `1/sqrt(λ₁)`).
pub fn embedding_constant(grid: &Grid, p: f64, seed: u64) -> f64 {
    const ITERS: usize = 300;
    let lap = grid.laplacian_tridiagonal();
    let value = |v: &StateVector| h_norm(v, grid) / va_norm(v, grid, p);
    let normalize = |v: &StateVector| va_norm(v, grid, p);
    let gradient = |v: &StateVector| {
        let nh = h_norm(v, grid);
        let na = va_norm(v, grid, p);
        let dn = p_laplacian_apply(v, grid, p) * na.powf(1.0 - p);
        v / (nh * na) - dn * (nh / (na * na))
    };
    let precondition = |r: &StateVector| lap.solve(r);
    let l = grid.length;
    let mut starts = vec![
        grid.sample(|x| (std::f64::consts::PI * x / l).sin()),
        grid.sample(|x| x.min(l - x)),
    ];
    starts.extend(random_starts(grid, seed, RANDOM_STARTS));
    RatioAscent {
        value: &value,
        gradient: &gradient,
        normalize: &normalize,
        precondition: &precondition,
    }
    .run(starts, ITERS)
}
