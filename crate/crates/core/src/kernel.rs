//! The memory operator `(Kv)(t) = u0 + ∫₀ᵗ λe^{-λ(t-s)} v(s) ds`.
//!
//! Only the memory state `w = Kv - u0` is stored. With `v` piecewise
//! constant in time, `w` obeys the exact update [`memory_step`], which is
//! algebraically the same as the direct convolution sum
//! [`apply_k_direct`]. The two are kept as an O(N) / O(N²) oracle pair.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{h_norm, Grid, StateVector};

/// Uniform time mesh `t_n = n·T/N`, `n = 0..=N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeMesh {
    steps: usize,
    final_time: f64,
    tau: f64,
}

impl TimeMesh {
    pub fn new(final_time: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidParameter("time mesh needs at least one step".into()));
        }
        if !(final_time.is_finite() && final_time > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "final time must be positive, got {final_time}"
            )));
        }
        Ok(Self {
            steps,
            final_time,
            tau: final_time / steps as f64,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn t(&self, n: usize) -> f64 {
        if n == self.steps {
            self.final_time
        } else {
            self.final_time * n as f64 / self.steps as f64
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(move |n| self.t(n))
    }
}

/// Parameters of the exponential memory.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryParams {
    pub lambda: f64,
    pub u0: StateVector,
    pub final_time: f64,
}

impl MemoryParams {
    pub fn new(lambda: f64, u0: StateVector, final_time: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        if !(final_time.is_finite() && final_time > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "final time must be positive, got {final_time}"
            )));
        }
        if !u0.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("u0".into()));
        }
        Ok(Self {
            lambda,
            u0,
            final_time,
        })
    }
}

/// `k(z) = λ e^{-λz}`.
pub fn kernel_eval(z: f64, lambda: f64) -> Result<f64> {
    if z < 0.0 || z.is_nan() {
        return Err(Error::InvalidParameter(format!("kernel argument must be >= 0, got {z}")));
    }
    Ok(lambda * (-lambda * z).exp())
}

/// `‖k‖_{L¹(0,T)} = 1 - e^{-λT}`.
pub fn l1_kernel_norm(lambda: f64, final_time: f64) -> f64 {
    -(-lambda * final_time).exp_m1()
}

/// One exact step of `w' = λ(v - w)` with `v` constant over the step:
/// `w⁺ = e^{-λτ} w + (1 - e^{-λτ}) v`.
pub fn memory_step(w: &StateVector, v: &StateVector, lambda: f64, tau: f64) -> StateVector {
    let keep = (-lambda * tau).exp();
    let gain = -(-lambda * tau).exp_m1();
    w * keep + v * gain
}

/// Direct O(N²) convolution of the piecewise-constant (left value)
/// interpolant of `vtraj` against the kernel:
/// `w_n = Σ_{j<n} (e^{-λ(t_n - t_{j+1})} - e^{-λ(t_n - t_j)}) v_j`.
///
/// `vtraj` holds one value per mesh node; the last one is not used.
pub fn apply_k_direct(vtraj: &[StateVector], lambda: f64, mesh: &TimeMesh) -> Vec<StateVector> {
    let n_nodes = mesh.steps() + 1;
    assert_eq!(vtraj.len(), n_nodes, "one state per mesh node");
    let dim = vtraj[0].len();
    (0..n_nodes)
        .map(|n| {
            let tn = mesh.t(n);
            let mut acc = StateVector::zeros(dim);
            for (j, vj) in vtraj.iter().enumerate().take(n) {
                // e^{-λ(t_n - t_{j+1})} - e^{-λ(t_n - t_j)}, factored to avoid cancellation
                let step = mesh.t(j + 1) - mesh.t(j);
                let weight = (-lambda * (tn - mesh.t(j + 1))).exp() * -(-lambda * step).exp_m1();
                acc.axpy(weight, vj, 1.0);
            }
            acc
        })
        .collect()
}

/// [`memory_step`] iterated from `w_0 = 0` with the left values of `vtraj`.
pub fn memory_recurrence(vtraj: &[StateVector], lambda: f64, mesh: &TimeMesh) -> Vec<StateVector> {
    let mut out = Vec::with_capacity(mesh.steps() + 1);
    let mut w = StateVector::zeros(vtraj[0].len());
    out.push(w.clone());
    for vj in vtraj.iter().take(mesh.steps()) {
        w = memory_step(&w, vj, lambda, mesh.tau());
        out.push(w.clone());
    }
    out
}

/// Residual of `(Kv)' = λ(v - (Kv - u0))` probed by centered differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationResidual {
    pub max_residual: f64,
    pub at_node: usize,
}

/// Max over interior nodes of `‖(w_{n+1} - w_{n-1})/(2τ) - λ(v_n - w_n)‖_H`.
/// `u0` drops out of the difference quotient.
pub fn check_relation5(
    vtraj: &[StateVector],
    wtraj: &[StateVector],
    lambda: f64,
    mesh: &TimeMesh,
    grid: &Grid,
) -> RelationResidual {
    let tau = mesh.tau();
    let mut worst = RelationResidual {
        max_residual: 0.0,
        at_node: 0,
    };
    for n in 1..mesh.steps() {
        let dw = (&wtraj[n + 1] - &wtraj[n - 1]) / (2.0 * tau);
        let r = h_norm(&(dw - (&vtraj[n] - &wtraj[n]) * lambda), grid);
        if r > worst.max_residual {
            worst = RelationResidual {
                max_residual: r,
                at_node: n,
            };
        }
    }
    worst
}

/// Both norm bounds on `Kv - u0`, evaluated with left rectangles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    /// `‖w‖_{L²(0,T;H)}`
    pub l2_lhs: f64,
    /// `(1 - e^{-λT}) ‖v‖_{L²(0,T;H)}`
    pub l2_rhs: f64,
    /// `max_n ‖w_n‖_H`
    pub c_lhs: f64,
    /// `λ ‖v‖_{L¹(0,T;H)}`
    pub c_rhs: f64,
    pub l2_ok: bool,
    pub c_ok: bool,
    /// `min(l2_rhs - l2_lhs, c_rhs - c_lhs)`
    pub slack: f64,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.l2_ok && self.c_ok
    }
}

/// Checks `‖Kv - u0‖_{L²} ≤ ‖k‖_{L¹} ‖v‖_{L²}` and
/// `‖Kv - u0‖_{C} ≤ λ ‖v‖_{L¹}` for `w = apply_k_direct(vtraj)`.
pub fn verify_lemma_bounds(vtraj: &[StateVector], mp: &MemoryParams, mesh: &TimeMesh, grid: &Grid) -> LemmaReport {
    let w = apply_k_direct(vtraj, mp.lambda, mesh);
    let tau = mesh.tau();
    let steps = mesh.steps();
    let vn: Vec<f64> = vtraj.iter().map(|v| h_norm(v, grid)).collect();
    let wn: Vec<f64> = w.iter().map(|x| h_norm(x, grid)).collect();
    let l2_lhs = (tau * wn[..steps].iter().map(|x| x * x).sum::<f64>()).sqrt();
    let l2_rhs = l1_kernel_norm(mp.lambda, mesh.final_time())
        * (tau * vn[..steps].iter().map(|x| x * x).sum::<f64>()).sqrt();
    let c_lhs = wn.iter().cloned().fold(0.0, f64::max);
    let c_rhs = mp.lambda * tau * vn[..steps].iter().sum::<f64>();
    const TOL: f64 = 1e-10;
    LemmaReport {
        l2_lhs,
        l2_rhs,
        c_lhs,
        c_rhs,
        l2_ok: l2_rhs - l2_lhs >= -TOL,
        c_ok: c_rhs - c_lhs >= -TOL,
        slack: (l2_rhs - l2_lhs).min(c_rhs - c_lhs),
    }
}
