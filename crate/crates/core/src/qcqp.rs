//! `max c^T z - mu ||z||^2` subject to `||z||^2 <= R` and `A z <= d`.
//!
//! For `mu > 0` the maximizer is the Euclidean projection of `c / (2 mu)` onto
//! the ball intersected with the polyhedron. Writing the ball multiplier as a
//! shrink factor `s = 1 / (1 + 2 nu)`, that projection equals `P(s v)`, where
//! `P` projects onto the polyhedron alone, and `s` is the largest value in
//! `(0, 1]` with `||P(s v)||^2 <= R`. For `mu = 0` the same holds with
//! `P(t c)` and `t = 1 / (2 nu)`.
//!
//! `P` is computed with the dual active-set method of Goldfarb and Idnani
//! (identity Hessian), so the result is exact up to round-off. A projected
//! gradient solver is kept as an independent cross-check.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::OptimizerTrace;

/// Rows `a_i^T z <= d_i`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HalfspaceSystem {
    dim: usize,
    /// Row-major, `len() x dim`.
    normals: Vec<f64>,
    bounds: Vec<f64>,
}

impl HalfspaceSystem {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            normals: Vec::new(),
            bounds: Vec::new(),
        }
    }

    pub fn push(&mut self, normal: &[f64], bound: f64) -> Result<()> {
        if normal.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "halfspace normal has {} entries, expected {}",
                normal.len(),
                self.dim
            )));
        }
        self.normals.extend_from_slice(normal);
        self.bounds.push(bound);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    pub fn normal(&self, i: usize) -> &[f64] {
        &self.normals[i * self.dim..(i + 1) * self.dim]
    }

    pub fn bound(&self, i: usize) -> f64 {
        self.bounds[i]
    }

    /// `a_i^T z`.
    pub fn evaluate(&self, i: usize, z: &[f64]) -> f64 {
        dot(self.normal(i), z)
    }

    /// Largest `(a_i^T z - d_i) / ||a_i||`, or `-inf` without rows.
    pub fn max_scaled_violation(&self, z: &[f64]) -> f64 {
        (0..self.len())
            .map(|i| {
                let n = norm(self.normal(i));
                if n > 0.0 {
                    (self.evaluate(i, z) - self.bound(i)) / n
                } else {
                    -self.bound(i)
                }
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// One instance of the convex subproblem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubproblemInstance {
    pub c: Vec<f64>,
    pub mu: f64,
    pub ball_radius_sq: f64,
    pub halfspaces: HalfspaceSystem,
}

impl SubproblemInstance {
    pub fn objective(&self, z: &[f64]) -> f64 {
        dot(&self.c, z) - self.mu * dot(z, z)
    }

    fn validate(&self) -> Result<()> {
        if !(self.ball_radius_sq > 0.0 && self.ball_radius_sq.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ball radius squared must be positive, got {}",
                self.ball_radius_sq
            )));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mu must be non-negative, got {}",
                self.mu
            )));
        }
        if self.halfspaces.dim() != self.c.len() && !self.halfspaces.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "c has {} entries, halfspaces have dimension {}",
                self.c.len(),
                self.halfspaces.dim()
            )));
        }
        if self.c.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("c has non-finite entries".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Exact projection with a scalar search on the ball multiplier.
    ActiveSet,
    /// Projected gradient ascent with backtracking.
    ProjectedGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub method: Method,
    /// Starting point for [`Method::ProjectedGradient`].
    pub start: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 5000,
            method: Method::ActiveSet,
            start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub z: Vec<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    /// Halfspace rows with a positive multiplier.
    pub active_constraints: Vec<usize>,
    pub ball_active: bool,
    pub ball_multiplier: f64,
    /// Multipliers aligned with `active_constraints`.
    pub halfspace_multipliers: Vec<f64>,
    pub converged: bool,
    pub trace: OptimizerTrace,
}

/// Exact projection onto a polyhedron: point, active rows and their multipliers.
#[derive(Debug, Clone, PartialEq)]
struct PolyProjection {
    z: Vec<f64>,
    active: Vec<usize>,
    /// Multipliers of the normalized rows.
    lambda: Vec<f64>,
    steps: usize,
}

/// Row-normalized copy of a halfspace system.
struct Polyhedron {
    dim: usize,
    normals: Vec<f64>,
    bounds: Vec<f64>,
    scales: Vec<f64>,
    /// Original row index of each kept row.
    origin: Vec<usize>,
    max_steps: usize,
}

impl Polyhedron {
    fn new(h: &HalfspaceSystem, dim: usize, max_steps: usize) -> Result<Self> {
        let mut p = Self {
            dim,
            normals: Vec::new(),
            bounds: Vec::new(),
            scales: Vec::new(),
            origin: Vec::new(),
            max_steps,
        };
        for i in 0..h.len() {
            let a = h.normal(i);
            let n = norm(a);
            if n == 0.0 {
                if h.bound(i) < 0.0 {
                    return Err(Error::Infeasible {
                        min_norm_sq: f64::INFINITY,
                        radius_sq: f64::NAN,
                    });
                }
                continue;
            }
            p.normals.extend(a.iter().map(|v| v / n));
            p.bounds.push(h.bound(i) / n);
            p.scales.push(n);
            p.origin.push(i);
        }
        Ok(p)
    }

    fn len(&self) -> usize {
        self.bounds.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.normals[i * self.dim..(i + 1) * self.dim]
    }

    fn gram(&self, active: &[usize]) -> DMatrix<f64> {
        let q = active.len();
        DMatrix::from_fn(q, q, |i, j| dot(self.row(active[i]), self.row(active[j])))
    }

    fn solve_gram(&self, active: &[usize], rhs: DVector<f64>) -> DVector<f64> {
        let g = self.gram(active);
        if let Some(ch) = g.clone().cholesky() {
            return ch.solve(&rhs);
        }
        let ridge = 1e-12 * g.trace().max(1.0);
        let g = g + DMatrix::identity(active.len(), active.len()) * ridge;
        match g.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => g
                .lu()
                .solve(&rhs)
                .unwrap_or_else(|| DVector::zeros(active.len())),
        }
    }

    /// Goldfarb-Idnani dual active-set projection of `v`.
    fn project(&self, v: &[f64]) -> Result<PolyProjection> {
        let scale = norm(v)
            .max(self.bounds.iter().fold(0.0f64, |a, b| a.max(b.abs())))
            .max(1e-300);
        let feas_tol = 1e-13 * scale;
        let mut z = v.to_vec();
        let mut active: Vec<usize> = Vec::new();
        let mut lambda: Vec<f64> = Vec::new();
        let mut steps = 0;
        loop {
            let mut p = usize::MAX;
            let mut worst = feas_tol;
            for i in 0..self.len() {
                if active.contains(&i) {
                    continue;
                }
                let s = dot(self.row(i), &z) - self.bounds[i];
                if s > worst {
                    worst = s;
                    p = i;
                }
            }
            if p == usize::MAX {
                break;
            }
            let np = self.row(p).to_vec();
            let mut lam_p = 0.0;
            loop {
                steps += 1;
                if steps > self.max_steps {
                    return Err(Error::InvalidParameter(format!(
                        "polyhedral projection exceeded {} active-set steps",
                        self.max_steps
                    )));
                }
                let q = active.len();
                let r = if q == 0 {
                    DVector::zeros(0)
                } else {
                    let rhs = DVector::from_fn(q, |j, _| dot(self.row(active[j]), &np));
                    self.solve_gram(&active, rhs)
                };
                let mut dir: Vec<f64> = np.iter().map(|v| -v).collect();
                for (j, &a) in active.iter().enumerate() {
                    axpy(r[j], self.row(a), &mut dir);
                }
                let dd = dot(&dir, &dir);
                let mut t1 = f64::INFINITY;
                let mut block = usize::MAX;
                for j in 0..q {
                    if r[j] > 1e-14 {
                        let ratio = lambda[j] / r[j];
                        if ratio < t1 {
                            t1 = ratio;
                            block = j;
                        }
                    }
                }
                let s_p = dot(&np, &z) - self.bounds[p];
                let t2 = if dd > 1e-14 {
                    s_p.max(0.0) / dd
                } else {
                    f64::INFINITY
                };
                if t1.is_infinite() && t2.is_infinite() {
                    return Err(Error::Infeasible {
                        min_norm_sq: f64::INFINITY,
                        radius_sq: f64::NAN,
                    });
                }
                let t = t1.min(t2);
                if t2.is_finite() {
                    axpy(t, &dir, &mut z);
                }
                for j in 0..q {
                    lambda[j] -= t * r[j];
                }
                lam_p += t;
                if t2 <= t1 {
                    active.push(p);
                    lambda.push(lam_p);
                    break;
                }
                active.remove(block);
                lambda.remove(block);
            }
        }
        Ok(PolyProjection {
            z,
            active,
            lambda,
            steps,
        })
    }

    /// For a fixed active set, `P(s v) = s a + b` with `a` orthogonal to `b`.
    fn affine_parts(&self, active: &[usize], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        if active.is_empty() {
            return (v.to_vec(), vec![0.0; v.len()]);
        }
        let q = active.len();
        let nv = self.solve_gram(
            active,
            DVector::from_fn(q, |j, _| dot(self.row(active[j]), v)),
        );
        let ne = self.solve_gram(active, DVector::from_fn(q, |j, _| self.bounds[active[j]]));
        let mut a = v.to_vec();
        let mut b = vec![0.0; v.len()];
        for (j, &i) in active.iter().enumerate() {
            axpy(-nv[j], self.row(i), &mut a);
            axpy(ne[j], self.row(i), &mut b);
        }
        (a, b)
    }
}

/// Result of the ball-and-polyhedron projection of `scale * v`.
struct ScaledProjection {
    proj: PolyProjection,
    scale: f64,
    ball_active: bool,
    evaluations: usize,
    steps: usize,
}

/// Largest `s` in `(0, s_max]` (or any `s > 0` when `s_max` is infinite) with
/// `||P(s v)||^2 <= R`, found by exact solves on fixed active sets safeguarded
/// by bisection.
fn ball_search(
    poly: &Polyhedron,
    v: &[f64],
    radius_sq: f64,
    s_init: f64,
    s_max: f64,
) -> Result<ScaledProjection> {
    let scaled = |s: f64| -> Vec<f64> { v.iter().map(|x| s * x).collect() };
    let mut evaluations = 0;
    let mut steps = 0;
    let eval =
        |s: f64, evaluations: &mut usize, steps: &mut usize| -> Result<(PolyProjection, f64)> {
            let p = poly.project(&scaled(s))?;
            *evaluations += 1;
            *steps += p.steps;
            let phi = dot(&p.z, &p.z);
            Ok((p, phi))
        };

    let p0 = poly.project(&vec![0.0; v.len()])?;
    let min_norm_sq = dot(&p0.z, &p0.z);
    if min_norm_sq > radius_sq * (1.0 + 1e-12) {
        return Err(Error::Infeasible {
            min_norm_sq,
            radius_sq,
        });
    }
    let rel = 1e-13;

    // Bracket: lo feasible (phi <= R), hi infeasible.
    let mut lo = 0.0;
    let mut lo_proj = p0;
    let mut hi;
    let mut s = s_init;
    if s_max.is_finite() {
        let (p1, phi1) = eval(s_max, &mut evaluations, &mut steps)?;
        if phi1 <= radius_sq * (1.0 + rel) {
            return Ok(ScaledProjection {
                proj: p1,
                scale: s_max,
                ball_active: phi1 >= radius_sq * (1.0 - rel),
                evaluations,
                steps,
            });
        }
        hi = s_max;
        let (a, b) = poly.affine_parts(&p1.active, v);
        s = exact_scale(&a, &b, radius_sq).unwrap_or(0.5 * s_max);
    } else {
        hi = f64::INFINITY;
        let v_norm = norm(v);
        for _ in 0..200 {
            let (mut p, phi) = eval(s, &mut evaluations, &mut steps)?;
            if (phi - radius_sq).abs() <= rel * radius_sq {
                return Ok(ScaledProjection {
                    proj: p,
                    scale: s,
                    ball_active: true,
                    evaluations,
                    steps,
                });
            }
            if phi > radius_sq {
                hi = s;
                break;
            }
            let (a, b) = poly.affine_parts(&p.active, v);
            if norm(&a) <= 1e-12 * v_norm {
                // v lies in the cone of the active normals: the polyhedron
                // caps the objective inside the ball and z no longer moves.
                let q = p.active.len();
                let lambda = poly.solve_gram(
                    &p.active,
                    DVector::from_fn(q, |j, _| dot(poly.row(p.active[j]), v)),
                );
                if lambda.iter().all(|&l| l >= -1e-12 * v_norm) {
                    p.z = b;
                    p.lambda = lambda.iter().copied().collect();
                    return Ok(ScaledProjection {
                        proj: p,
                        scale: 1.0,
                        ball_active: false,
                        evaluations,
                        steps,
                    });
                }
            }
            lo = s;
            lo_proj = p;
            s = exact_scale(&a, &b, radius_sq)
                .filter(|&x| x > s)
                .unwrap_or(2.0 * s);
        }
        if hi.is_infinite() {
            return Err(Error::InvalidParameter(
                "ball multiplier search did not bracket".into(),
            ));
        }
        s = 0.5 * (lo + hi);
    }

    for _ in 0..200 {
        if !(s > lo && s < hi) {
            s = 0.5 * (lo + hi);
        }
        let (p, phi) = eval(s, &mut evaluations, &mut steps)?;
        if (phi - radius_sq).abs() <= rel * radius_sq {
            return Ok(ScaledProjection {
                proj: p,
                scale: s,
                ball_active: true,
                evaluations,
                steps,
            });
        }
        let (a, b) = poly.affine_parts(&p.active, v);
        let next = exact_scale(&a, &b, radius_sq);
        if phi > radius_sq {
            hi = s;
        } else {
            lo = s;
            lo_proj = p;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
        s = next.unwrap_or(0.5 * (lo + hi));
    }
    Ok(ScaledProjection {
        proj: lo_proj,
        scale: lo,
        ball_active: true,
        evaluations,
        steps,
    })
}

/// `s` with `s^2 ||a||^2 + ||b||^2 = R`.
fn exact_scale(a: &[f64], b: &[f64], radius_sq: f64) -> Option<f64> {
    let aa = dot(a, a);
    let bb = dot(b, b);
    if aa <= 0.0 || bb >= radius_sq {
        return None;
    }
    Some(((radius_sq - bb) / aa).sqrt())
}

/// Maps multipliers of the normalized rows back to the original rows and
/// drops zeros.
fn original_multipliers(
    poly: &Polyhedron,
    proj: &PolyProjection,
    factor: f64,
) -> (Vec<usize>, Vec<f64>) {
    let mut pairs: Vec<(usize, f64)> = proj
        .active
        .iter()
        .zip(&proj.lambda)
        .filter(|(_, &l)| l > 0.0)
        .map(|(&i, &l)| (poly.origin[i], factor * l / poly.scales[i]))
        .collect();
    pairs.sort_by_key(|p| p.0);
    pairs.into_iter().unzip()
}

/// Relative KKT residual of `z` with the given multipliers: stationarity,
/// primal feasibility and complementary slackness, each scaled to be
/// dimensionless; the largest is returned.
pub fn kkt_residual(
    inst: &SubproblemInstance,
    z: &[f64],
    ball_multiplier: f64,
    rows: &[usize],
    multipliers: &[f64],
) -> f64 {
    let r = inst.ball_radius_sq;
    let mut grad: Vec<f64> = inst
        .c
        .iter()
        .zip(z)
        .map(|(c, z)| c - 2.0 * (inst.mu + ball_multiplier) * z)
        .collect();
    for (&i, &l) in rows.iter().zip(multipliers) {
        axpy(-l, inst.halfspaces.normal(i), &mut grad);
    }
    let grad_scale = norm(&inst.c).max(2.0 * inst.mu * norm(z)).max(1e-300);
    let stationarity = norm(&grad) / grad_scale;
    let zz = dot(z, z);
    let ball = ((zz - r) / r).max(0.0);
    let halfspace = inst.halfspaces.max_scaled_violation(z).max(0.0) / r.sqrt();
    let comp_ball = (ball_multiplier * (zz - r)).abs() / (grad_scale * r.sqrt());
    let comp_rows = rows
        .iter()
        .zip(multipliers)
        .map(|(&i, &l)| (l * (inst.halfspaces.evaluate(i, z) - inst.halfspaces.bound(i))).abs())
        .fold(0.0, f64::max)
        / (grad_scale * r.sqrt());
    let negative = multipliers.iter().fold(0.0f64, |a, &l| a.max(-l)) / grad_scale;
    stationarity
        .max(ball)
        .max(halfspace)
        .max(comp_ball)
        .max(comp_rows)
        .max(negative)
        .max((-ball_multiplier).max(0.0) / grad_scale)
}

/// Solves the subproblem.
pub fn solve(inst: &SubproblemInstance, opts: &SolverOptions) -> Result<SolveReport> {
    inst.validate()?;
    match opts.method {
        Method::ActiveSet => solve_active_set(inst, opts),
        Method::ProjectedGradient => solve_projected_gradient(inst, opts),
    }
}

fn solve_active_set(inst: &SubproblemInstance, opts: &SolverOptions) -> Result<SolveReport> {
    let dim = inst.c.len();
    let poly = Polyhedron::new(&inst.halfspaces, dim, opts.max_iter.max(10 * dim + 100))?;
    let r = inst.ball_radius_sq;
    let c_norm = norm(&inst.c);

    let (proj, ball_active, ball_multiplier, factor, evaluations, steps) = if inst.mu > 0.0 {
        let v: Vec<f64> = inst.c.iter().map(|c| c / (2.0 * inst.mu)).collect();
        let sp = ball_search(&poly, &v, r, 1.0, 1.0)?;
        let s = sp.scale;
        let nu = if sp.ball_active && s > 0.0 {
            inst.mu * (1.0 / s - 1.0)
        } else {
            0.0
        };
        let factor = if s > 0.0 { 2.0 * inst.mu / s } else { 0.0 };
        (
            sp.proj,
            sp.ball_active,
            nu.max(0.0),
            factor,
            sp.evaluations,
            sp.steps,
        )
    } else if c_norm == 0.0 {
        let p = poly.project(&vec![0.0; dim])?;
        let zz = dot(&p.z, &p.z);
        if zz > r * (1.0 + 1e-12) {
            return Err(Error::Infeasible {
                min_norm_sq: zz,
                radius_sq: r,
            });
        }
        let steps = p.steps;
        (p, false, 0.0, 0.0, 1, steps)
    } else {
        let sp = ball_search(&poly, &inst.c, r, r.sqrt() / c_norm, f64::INFINITY)?;
        let t = sp.scale;
        let (nu, factor) = if sp.ball_active {
            (1.0 / (2.0 * t), 1.0 / t)
        } else {
            (0.0, 1.0)
        };
        (
            sp.proj,
            sp.ball_active,
            nu,
            factor,
            sp.evaluations,
            sp.steps,
        )
    };
    let (rows, multipliers) = original_multipliers(&poly, &proj, factor);
    let z = proj.z;
    let kkt = kkt_residual(inst, &z, ball_multiplier, &rows, &multipliers);
    let objective = inst.objective(&z);
    let mut trace = OptimizerTrace::new();
    trace.push(objective, steps as f64, kkt);
    Ok(SolveReport {
        objective,
        kkt_residual: kkt,
        iterations: evaluations,
        active_constraints: rows,
        ball_active,
        ball_multiplier,
        halfspace_multipliers: multipliers,
        converged: kkt <= opts.tol.max(1e-10),
        trace,
        z,
    })
}

fn solve_projected_gradient(
    inst: &SubproblemInstance,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let r = inst.ball_radius_sq;
    let project_onto = |v: &[f64]| project(v, r, &inst.halfspaces, opts.tol);
    let mut z = match &opts.start {
        Some(s) => project_onto(s)?,
        None => project_onto(&vec![0.0; inst.c.len()])?,
    };
    let mut f = inst.objective(&z);
    let mut step = 1.0 / (2.0 * inst.mu + norm(&inst.c) / r.sqrt()).max(1e-300);
    let mut trace = OptimizerTrace::new();
    trace.push(f, 0.0, 0.0);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let grad: Vec<f64> = inst
            .c
            .iter()
            .zip(&z)
            .map(|(c, z)| c - 2.0 * inst.mu * z)
            .collect();
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = z.iter().zip(&grad).map(|(z, g)| z + step * g).collect();
            let next = project_onto(&trial)?;
            let diff: Vec<f64> = next.iter().zip(&z).map(|(a, b)| a - b).collect();
            let fn_ = inst.objective(&next);
            let model = f + dot(&grad, &diff) - dot(&diff, &diff) / (2.0 * step);
            if fn_ >= model - 1e-15 * f.abs().max(1.0) && fn_ >= f - 1e-15 * f.abs().max(1.0) {
                accepted = Some((next, fn_, norm(&diff)));
                break;
            }
            step *= 0.5;
        }
        let Some((next, fn_, moved)) = accepted else {
            break;
        };
        z = next;
        f = fn_;
        trace.push(f, step, moved);
        step *= 2.0;
        if moved <= opts.tol * r.sqrt().max(1.0) {
            converged = true;
            break;
        }
    }
    let active: Vec<usize> = (0..inst.halfspaces.len())
        .filter(|&i| {
            let a = inst.halfspaces.normal(i);
            (inst.halfspaces.evaluate(i, &z) - inst.halfspaces.bound(i)).abs()
                <= 1e-7 * norm(a) * r.sqrt()
        })
        .collect();
    Ok(SolveReport {
        objective: f,
        kkt_residual: f64::NAN,
        iterations,
        ball_active: (dot(&z, &z) - r).abs() <= 1e-7 * r,
        ball_multiplier: f64::NAN,
        halfspace_multipliers: Vec::new(),
        active_constraints: active,
        converged,
        trace,
        z,
    })
}

/// Euclidean projection of `z` onto `{||x||^2 <= R} ∩ {A x <= d}`.
pub fn project(
    z: &[f64],
    ball_radius_sq: f64,
    halfspaces: &HalfspaceSystem,
    tol: f64,
) -> Result<Vec<f64>> {
    let _ = tol;
    if !halfspaces.is_empty() && halfspaces.dim() != z.len() {
        return Err(Error::DimensionMismatch(format!(
            "point has {} entries, halfspaces have dimension {}",
            z.len(),
            halfspaces.dim()
        )));
    }
    let poly = Polyhedron::new(halfspaces, z.len(), 100 * z.len() + 1000)?;
    Ok(ball_search(&poly, z, ball_radius_sq, 1.0, 1.0)?.proj.z)
}

/// Dykstra's alternating projections onto the ball and each halfspace.
/// Converges to the same point as [`project`]; slower, kept for cross-checks.
pub fn project_alternating(
    z: &[f64],
    ball_radius_sq: f64,
    halfspaces: &HalfspaceSystem,
    tol: f64,
    max_sweeps: usize,
) -> Result<Vec<f64>> {
    let sets = halfspaces.len() + 1;
    let mut x = z.to_vec();
    let mut corrections = vec![vec![0.0; z.len()]; sets];
    let radius = ball_radius_sq.sqrt();
    for _ in 0..max_sweeps {
        let start = x.clone();
        for (j, corr) in corrections.iter_mut().enumerate() {
            let y: Vec<f64> = x.iter().zip(corr.iter()).map(|(a, b)| a + b).collect();
            let p = if j == 0 {
                let n = norm(&y);
                if n > radius {
                    y.iter().map(|v| v * radius / n).collect()
                } else {
                    y.clone()
                }
            } else {
                let i = j - 1;
                let a = halfspaces.normal(i);
                let excess = dot(a, &y) - halfspaces.bound(i);
                let aa = dot(a, a);
                if excess > 0.0 && aa > 0.0 {
                    y.iter().zip(a).map(|(v, a)| v - excess / aa * a).collect()
                } else {
                    y.clone()
                }
            };
            for ((c, yv), pv) in corr.iter_mut().zip(&y).zip(&p) {
                *c = yv - pv;
            }
            x = p;
        }
        let moved = norm(&x.iter().zip(&start).map(|(a, b)| a - b).collect::<Vec<_>>());
        if moved <= tol {
            return Ok(x);
        }
    }
    Err(Error::Infeasible {
        min_norm_sq: f64::NAN,
        radius_sq: ball_radius_sq,
    })
}
