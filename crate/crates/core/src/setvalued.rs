//! Closed convex set-valued right-hand sides `F(t, v)`.
//!
//! A [`SetField`] maps `(t, v)` to a [`SetValue`]: a ball, a box, the
//! convex hull of at most eight points, or a single point. All metric
//! operations use the discrete H-norm of the grid.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::TimeMesh;
use crate::operators::{AssumptionReport, FittedConstants, Verdict, Witness};
use crate::spaces::{h_norm, pairing, Grid, StateVector};

pub type VectorMap = Arc<dyn Fn(f64, &StateVector) -> StateVector + Send + Sync>;
pub type ScalarMap = Arc<dyn Fn(f64, &StateVector) -> f64 + Send + Sync>;

pub const MAX_POLYTOPE_VERTICES: usize = 8;

/// Base maps of a set-valued field.
#[derive(Clone)]
pub enum FieldKind {
    Ball { center: VectorMap, radius: ScalarMap },
    Box { lower: VectorMap, upper: VectorMap },
    Polytope { vertices: Vec<VectorMap> },
    Singleton(VectorMap),
}

impl fmt::Debug for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldKind::Ball { .. } => write!(f, "Ball"),
            FieldKind::Box { .. } => write!(f, "Box"),
            FieldKind::Polytope { vertices } => write!(f, "Polytope({})", vertices.len()),
            FieldKind::Singleton(_) => write!(f, "Singleton"),
        }
    }
}

/// `F: [0,T] × H → P_fc(H)`, optionally truncated by radial retraction of
/// the state argument.
#[derive(Debug, Clone)]
pub struct SetField {
    kind: FieldKind,
    truncation_radius: Option<f64>,
}

/// Convenience constructors for base maps.
pub fn constant_map(value: StateVector) -> VectorMap {
    Arc::new(move |_, _| value.clone())
}

pub fn constant_scalar(value: f64) -> ScalarMap {
    Arc::new(move |_, _| value)
}

/// `(t, v) ↦ gain·v + offset`.
pub fn affine_map(gain: f64, offset: StateVector) -> VectorMap {
    Arc::new(move |_, v| v * gain + &offset)
}

impl SetField {
    pub fn new(kind: FieldKind) -> Result<Self> {
        if let FieldKind::Polytope { vertices } = &kind {
            if vertices.is_empty() || vertices.len() > MAX_POLYTOPE_VERTICES {
                return Err(Error::InvalidField(format!(
                    "polytope needs 1..={MAX_POLYTOPE_VERTICES} vertices, got {}",
                    vertices.len()
                )));
            }
        }
        Ok(Self {
            kind,
            truncation_radius: None,
        })
    }

    pub fn singleton(g: VectorMap) -> Self {
        Self {
            kind: FieldKind::Singleton(g),
            truncation_radius: None,
        }
    }

    pub fn ball(center: VectorMap, radius: ScalarMap) -> Self {
        Self {
            kind: FieldKind::Ball { center, radius },
            truncation_radius: None,
        }
    }

    pub fn boxed(lower: VectorMap, upper: VectorMap) -> Self {
        Self {
            kind: FieldKind::Box { lower, upper },
            truncation_radius: None,
        }
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn truncation_radius(&self) -> Option<f64> {
        self.truncation_radius
    }

    /// Instantiates `F(t, v)`, retracting `v` onto the truncation ball first
    /// when the field is truncated.
    pub fn evaluate(&self, t: f64, v: &StateVector, grid: &Grid) -> Result<SetValue> {
        let retracted;
        let arg = match self.truncation_radius {
            Some(m) => {
                retracted = retract(v, m, grid);
                &retracted
            }
            None => v,
        };
        let value = match &self.kind {
            FieldKind::Singleton(g) => SetValue::Singleton(g(t, arg)),
            FieldKind::Ball { center, radius } => {
                let r = radius(t, arg);
                if !(r >= 0.0 && r.is_finite()) {
                    return Err(Error::InvalidField(format!("ball radius {r} at t = {t}")));
                }
                SetValue::Ball {
                    center: center(t, arg),
                    radius: r,
                }
            }
            FieldKind::Box { lower, upper } => {
                let (lo, hi) = (lower(t, arg), upper(t, arg));
                if let Some(i) = (0..lo.len()).find(|&i| !(lo[i] <= hi[i])) {
                    return Err(Error::InvalidField(format!(
                        "box lower > upper in component {i} at t = {t}: {} > {}",
                        lo[i], hi[i]
                    )));
                }
                SetValue::Box { lower: lo, upper: hi }
            }
            FieldKind::Polytope { vertices } => SetValue::Polytope {
                vertices: vertices.iter().map(|g| g(t, arg)).collect(),
            },
        };
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("set value at t = {t}")));
        }
        Ok(value)
    }
}

/// Radial retraction onto the closed H-ball of radius `m`.
pub fn retract(v: &StateVector, m: f64, grid: &Grid) -> StateVector {
    let nv = h_norm(v, grid);
    if nv <= m {
        v.clone()
    } else {
        v * (m / nv)
    }
}

/// `F̂(t, v) = F(t, r_M(v))` with `r_M` the radial retraction onto the
/// H-ball of radius `m1`.
pub fn truncate(field: &SetField, m1: f64) -> Result<SetField> {
    if !(m1 > 0.0 && m1.is_finite()) {
        return Err(Error::InvalidParameter(format!("truncation radius must be positive, got {m1}")));
    }
    Ok(SetField {
        kind: field.kind.clone(),
        truncation_radius: Some(m1),
    })
}

/// A concrete closed convex set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SetValue {
    Ball { center: StateVector, radius: f64 },
    Box { lower: StateVector, upper: StateVector },
    Polytope { vertices: Vec<StateVector> },
    Singleton(StateVector),
}

impl SetValue {
    fn is_finite(&self) -> bool {
        let fin = |v: &StateVector| v.iter().all(|x| x.is_finite());
        match self {
            SetValue::Ball { center, radius } => fin(center) && radius.is_finite(),
            SetValue::Box { lower, upper } => fin(lower) && fin(upper),
            SetValue::Polytope { vertices } => vertices.iter().all(fin),
            SetValue::Singleton(p) => fin(p),
        }
    }

    /// Center, box midpoint, vertex centroid, or the point itself.
    pub fn center(&self) -> StateVector {
        match self {
            SetValue::Ball { center, .. } => center.clone(),
            SetValue::Box { lower, upper } => (lower + upper) * 0.5,
            SetValue::Polytope { vertices } => {
                let mut c = StateVector::zeros(vertices[0].len());
                for v in vertices {
                    c += v;
                }
                c / vertices.len() as f64
            }
            SetValue::Singleton(p) => p.clone(),
        }
    }
}

/// `|S| = sup { ‖x‖_H : x ∈ S }`.
pub fn magnitude(s: &SetValue, grid: &Grid) -> f64 {
    match s {
        SetValue::Ball { center, radius } => h_norm(center, grid) + radius,
        SetValue::Box { lower, upper } => {
            let corner = lower.zip_map(upper, |l, u| l.abs().max(u.abs()));
            h_norm(&corner, grid)
        }
        SetValue::Polytope { vertices } => vertices.iter().map(|v| h_norm(v, grid)).fold(0.0, f64::max),
        SetValue::Singleton(p) => h_norm(p, grid),
    }
}

/// Nearest point of `S` to `x` in the H-norm.
pub fn project(s: &SetValue, x: &StateVector, grid: &Grid) -> Result<StateVector> {
    match s {
        SetValue::Singleton(p) => Ok(p.clone()),
        SetValue::Ball { center, radius } => {
            let d = x - center;
            let nd = h_norm(&d, grid);
            if nd <= *radius {
                Ok(x.clone())
            } else {
                Ok(center + d * (radius / nd))
            }
        }
        SetValue::Box { lower, upper } => Ok(StateVector::from_fn(x.len(), |i, _| x[i].clamp(lower[i], upper[i]))),
        SetValue::Polytope { vertices } => {
            let shifted: Vec<StateVector> = vertices.iter().map(|v| v - x).collect();
            let weights = min_norm_point(&shifted, 200)?;
            let mut out = StateVector::zeros(x.len());
            for (w, v) in weights.iter().zip(vertices) {
                out.axpy(*w, v, 1.0);
            }
            Ok(out)
        }
    }
}

/// Convex weights of the minimum-norm point in the hull of `points`
/// (Wolfe's nearest point algorithm).
fn min_norm_point(points: &[StateVector], max_iter: usize) -> Result<Vec<f64>> {
    let k = points.len();
    let gram = DMatrix::from_fn(k, k, |i, j| points[i].dot(&points[j]));
    let scale = (0..k).map(|i| gram[(i, i)]).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let combine = |set: &[usize], lam: &[f64]| -> Vec<f64> {
        let mut w = vec![0.0; k];
        for (&i, &l) in set.iter().zip(lam) {
            w[i] = l;
        }
        w
    };
    // <x, P_j> for x = Σ w_i P_i
    let inner = |w: &[f64], j: usize| (0..k).map(|i| w[i] * gram[(i, j)]).sum::<f64>();

    let first = (0..k).min_by(|&a, &b| gram[(a, a)].total_cmp(&gram[(b, b)])).unwrap();
    let mut set = vec![first];
    let mut lam = vec![1.0];
    let mut iterations = 0;
    loop {
        let w = combine(&set, &lam);
        let xx: f64 = (0..k).map(|i| w[i] * inner(&w, i)).sum();
        let (j, xj) = (0..k)
            .map(|j| (j, inner(&w, j)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if xx - xj <= 1e-14 * scale || set.contains(&j) {
            return Ok(w);
        }
        set.push(j);
        lam.push(0.0);
        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(Error::ProjectionFailure { iterations: max_iter });
            }
            let mu = affine_min_norm(&gram, &set);
            if mu.iter().all(|&m| m > 1e-12) {
                lam = mu;
                break;
            }
            // Step towards mu until the first weight hits zero, then drop it.
            let (drop, theta) = (0..set.len())
                .filter(|&i| mu[i] <= 1e-12)
                .map(|i| {
                    let gap = lam[i] - mu[i];
                    (i, if gap > 0.0 { (lam[i] / gap).min(1.0) } else { 0.0 })
                })
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("some affine weight is non-positive");
            for i in 0..lam.len() {
                lam[i] = (1.0 - theta) * lam[i] + theta * mu[i];
            }
            lam[drop] = 0.0;
            let keep: Vec<bool> = lam.iter().map(|&l| l > 1e-15).collect();
            let mut idx = 0;
            set.retain(|_| {
                idx += 1;
                keep[idx - 1]
            });
            lam.retain(|&l| l > 1e-15);
            let total: f64 = lam.iter().sum();
            lam.iter_mut().for_each(|l| *l /= total);
        }
    }
}

/// Weights of the minimum-norm point of the affine hull of `set`.
fn affine_min_norm(gram: &DMatrix<f64>, set: &[usize]) -> Vec<f64> {
    let m = set.len();
    let mut sys = DMatrix::zeros(m + 1, m + 1);
    let mut rhs = nalgebra::DVector::zeros(m + 1);
    for (a, &i) in set.iter().enumerate() {
        for (b, &j) in set.iter().enumerate() {
            sys[(a, b)] = gram[(i, j)];
        }
        sys[(a, m)] = 1.0;
        sys[(m, a)] = 1.0;
    }
    rhs[m] = 1.0;
    let sol = sys
        .clone()
        .lu()
        .solve(&rhs)
        .filter(|s| s.iter().all(|x| x.is_finite()))
        .unwrap_or_else(|| sys.pseudo_inverse(1e-14).map(|p| p * &rhs).unwrap_or(rhs));
    sol.rows(0, m).iter().copied().collect()
}

/// `argmax_{x ∈ S} <x, d>`.
pub fn support_point(s: &SetValue, d: &StateVector, grid: &Grid) -> Result<StateVector> {
    if d.amax() == 0.0 {
        return Err(Error::ZeroDirection);
    }
    Ok(match s {
        SetValue::Singleton(p) => p.clone(),
        SetValue::Ball { center, radius } => center + d * (radius / h_norm(d, grid)),
        SetValue::Box { lower, upper } => StateVector::from_fn(d.len(), |i, _| {
            if d[i] > 0.0 {
                upper[i]
            } else if d[i] < 0.0 {
                lower[i]
            } else {
                0.5 * (lower[i] + upper[i])
            }
        }),
        SetValue::Polytope { vertices } => vertices
            .iter()
            .max_by(|a, b| pairing(a, d, grid).total_cmp(&pairing(b, d, grid)))
            .unwrap()
            .clone(),
    })
}

/// `‖x - P_S x‖_H`.
pub fn distance_to_set(s: &SetValue, x: &StateVector, grid: &Grid) -> Result<f64> {
    Ok(h_norm(&(x - project(s, x, grid)?), grid))
}

/// Hausdorff distance between two sets of the same kind (closed form for
/// balls and boxes, vertex maxima for polytopes). `None` for mixed kinds.
pub fn hausdorff_distance(a: &SetValue, b: &SetValue, grid: &Grid) -> Option<f64> {
    use SetValue::*;
    match (a, b) {
        (Singleton(x), Singleton(y)) => Some(h_norm(&(x - y), grid)),
        (Ball { center: c1, radius: r1 }, Ball { center: c2, radius: r2 }) => {
            Some(h_norm(&(c1 - c2), grid) + (r1 - r2).abs())
        }
        (Box { lower: l1, upper: u1 }, Box { lower: l2, upper: u2 }) => {
            let one_way = |la: &StateVector, ua: &StateVector, lb: &StateVector, ub: &StateVector| {
                let gap = StateVector::from_fn(la.len(), |i, _| (lb[i] - la[i]).max(ua[i] - ub[i]).max(0.0));
                h_norm(&gap, grid)
            };
            Some(one_way(l1, u1, l2, u2).max(one_way(l2, u2, l1, u1)))
        }
        (Polytope { vertices: v1 }, Polytope { vertices: v2 }) => {
            let one_way = |from: &[StateVector], to: &SetValue| {
                from.iter()
                    .map(|x| distance_to_set(to, x, grid).unwrap_or(f64::INFINITY))
                    .fold(0.0, f64::max)
            };
            Some(one_way(v1, b).max(one_way(v2, a)))
        }
        _ => None,
    }
}

/// Pointwise selection rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SelectionRule {
    MinimalNorm,
    ProjectPrevious,
    Extremal(StateVector),
    ConstantCenter,
}

/// Picks a point of `s` according to `rule`.
pub fn select(s: &SetValue, rule: &SelectionRule, prev: Option<&StateVector>, grid: &Grid) -> Result<StateVector> {
    match rule {
        SelectionRule::MinimalNorm => project(s, &StateVector::zeros(grid.n()), grid),
        SelectionRule::ProjectPrevious => project(s, prev.ok_or(Error::MissingPrevious)?, grid),
        SelectionRule::Extremal(d) => support_point(s, d, grid),
        SelectionRule::ConstantCenter => Ok(s.center()),
    }
}

/// Growth envelope `|F(t,v)| ≤ a(t) + b ‖v‖_H^{2/q}`, with `a` sampled on
/// the time mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthEnvelope {
    pub a: Vec<f64>,
    pub b: f64,
    pub q: f64,
}

impl GrowthEnvelope {
    pub fn new(a: Vec<f64>, b: f64, q: f64) -> Result<Self> {
        if a.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidParameter("envelope a(t) must be finite and >= 0".into()));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::InvalidParameter(format!("envelope b must be positive, got {b}")));
        }
        if !(q > 1.0 && q <= 2.0) {
            return Err(Error::InvalidParameter(format!("envelope q must lie in (1, 2], got {q}")));
        }
        Ok(Self { a, b, q })
    }

    pub fn constant(a: f64, b: f64, q: f64, mesh: &TimeMesh) -> Result<Self> {
        Self::new(vec![a; mesh.steps() + 1], b, q)
    }

    /// `a(t_n) + b ‖v‖^{2/q}` for `norm = ‖v‖_H`.
    pub fn bound(&self, n: usize, norm: f64) -> f64 {
        self.a[n] + self.b * norm.powf(2.0 / self.q)
    }

    /// `â(t_n) = a(t_n) + b M^{2/q}`.
    pub fn truncated_bound(&self, n: usize, m1: f64) -> f64 {
        self.bound(n, m1)
    }
}

/// Samples `magnitude(F(t_n, v)) ≤ a(t_n) + b ‖v‖^{2/q}` over every mesh
/// node and `samples` seeded directions scaled to H-norms `10^-2 .. 10^2`
/// (plus `v = 0`).
pub fn check_growth_f(
    field: &SetField,
    env: &GrowthEnvelope,
    mesh: &TimeMesh,
    grid: &Grid,
    samples: usize,
    seed: u64,
) -> Result<AssumptionReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probes = vec![grid.zeros()];
    for _ in 0..samples.max(1) {
        let d = StateVector::from_fn(grid.n(), |_, _| rng.random_range(-1.0..1.0));
        let d = &d / h_norm(&d, grid);
        for e in -2..=2 {
            probes.push(&d * 10f64.powi(e));
        }
    }
    let mut worst_ratio: f64 = 0.0;
    for n in 0..=mesh.steps() {
        let t = mesh.t(n);
        for v in &probes {
            let nv = h_norm(v, grid);
            let mag = magnitude(&field.evaluate(t, v, grid)?, grid);
            let bound = env.bound(n, nv);
            if mag > bound * (1.0 + 1e-12) + 1e-14 {
                return Ok(AssumptionReport {
                    property: "F growth".into(),
                    verdict: Verdict::Fail,
                    witness: Some(Witness {
                        seed: Some(seed),
                        magnitude: Some(nv),
                        time: Some(t),
                        value: mag - bound,
                        point: v.iter().copied().collect(),
                        ..Default::default()
                    }),
                    fitted: FittedConstants::default(),
                    detail: format!("|F(t,v)| = {mag:.6e} > {bound:.6e} at t = {t}, |v|_H = {nv:.3e}"),
                });
            }
            if bound > 0.0 {
                worst_ratio = worst_ratio.max(mag / bound);
            }
        }
    }
    Ok(AssumptionReport {
        property: "F growth".into(),
        verdict: Verdict::Pass,
        witness: None,
        fitted: FittedConstants::default(),
        detail: format!("max |F|/envelope = {worst_ratio:.6e}"),
    })
}
