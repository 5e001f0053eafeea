//! Linear and fixed-point solvers.
//!
//! The constrained systems are SPD, so a Jacobi-preconditioned conjugate
//! gradient iteration is used throughout; swapping in a stronger
//! preconditioner only means replacing [`pcg`]'s diagonal scaling. For
//! solution-dependent coefficients a Picard iteration re-assembles the
//! linearized system around the previous iterate until the increment is
//! small in the discrete H1 norm.

use std::sync::Arc;

use crate::assembly::{self, Boundary, CondensedSystem, Csr, SparseSystem};
use crate::error::{Result, WgError};
use crate::geom::Point2;
use crate::real::{real, Real};
use crate::space::{Coefficient, WeakFunction, WgSpace};
use crate::weak_gradient::WeakGradients;

#[derive(Debug, Clone)]
pub struct SolveConfig<R: Real> {
    /// Relative residual target `|b - Ax| / |b|` for conjugate gradients.
    pub rel_tol: R,
    pub max_iterations: usize,
    /// Increment tolerance of the fixed-point iteration, measured in the
    /// discrete H1 norm.
    pub picard_tol: R,
    pub picard_max: usize,
    /// Record the `(iteration, residual)` trace of every CG solve.
    pub record_trace: bool,
}

impl<R: Real> Default for SolveConfig<R> {
    fn default() -> Self {
        Self {
            rel_tol: real(1e-11),
            max_iterations: 200_000,
            picard_tol: real(1e-9),
            picard_max: 50,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveStats<R: Real> {
    pub iterations: usize,
    pub final_residual: R,
    /// Present when `record_trace` is set.
    pub trace: Vec<(usize, R)>,
}

impl<R: Real> Default for SolveStats<R> {
    fn default() -> Self {
        Self { iterations: 0, final_residual: R::zero(), trace: Vec::new() }
    }
}

impl<R: Real> SolveStats<R> {
    /// Iteration trace as `iter,residual` CSV.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iter,residual\n");
        for (it, r) in &self.trace {
            out.push_str(&format!("{it},{:.6e}\n", r.to_f64_lossy()));
        }
        out
    }
}

/// Jacobi-preconditioned conjugate gradients with an optional warm start.
/// Constrained rows are identities; starting from the prescribed values
/// keeps them exact through every iteration.
pub fn pcg<R: Real>(
    matrix: &Csr<R>,
    rhs: &[R],
    x0: Option<&[R]>,
    rel_tol: R,
    max_iterations: usize,
    record: bool,
) -> Result<(Vec<R>, SolveStats<R>)> {
    let n = matrix.n();
    let norm_b = rhs.iter().fold(R::zero(), |a, &v| a + v * v).sqrt();
    if norm_b == R::zero() {
        return Ok((vec![R::zero(); n], SolveStats::default()));
    }
    let inv_diag: Vec<R> = matrix
        .diagonal()
        .into_iter()
        .map(|d| if d != R::zero() { R::one() / d } else { R::one() })
        .collect();
    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![R::zero(); n],
    };
    let mut r = rhs.to_vec();
    let ax = matrix.matvec(&x);
    for i in 0..n {
        r[i] -= ax[i];
    }
    let mut trace = Vec::new();
    let resid = |r: &[R]| r.iter().fold(R::zero(), |a, &v| a + v * v).sqrt() / norm_b;
    let mut rel = resid(&r);
    if record {
        trace.push((0, rel));
    }
    if rel <= rel_tol {
        return Ok((x, SolveStats { iterations: 0, final_residual: rel, trace }));
    }
    let mut z: Vec<R> = r.iter().zip(&inv_diag).map(|(&ri, &di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = r.iter().zip(&z).fold(R::zero(), |a, (&ri, &zi)| a + ri * zi);
    for it in 1..=max_iterations {
        let ap = matrix.matvec(&p);
        let pap = p.iter().zip(&ap).fold(R::zero(), |a, (&pi, &qi)| a + pi * qi);
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = resid(&r);
        if record {
            trace.push((it, rel));
        }
        if rel <= rel_tol {
            return Ok((x, SolveStats { iterations: it, final_residual: rel, trace }));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = r.iter().zip(&z).fold(R::zero(), |a, (&ri, &zi)| a + ri * zi);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(WgError::SolverDiverged {
        iterations: max_iterations,
        residual: rel.to_f64_lossy(),
    })
}

/// Solves the full assembled system.
pub fn solve_linear<R: Real>(
    space: &Arc<WgSpace<R>>,
    system: &SparseSystem<R>,
    config: &SolveConfig<R>,
) -> Result<(WeakFunction<R>, SolveStats<R>)> {
    let mut x0 = vec![R::zero(); system.n_dofs()];
    for &(d, v) in &system.constraints {
        x0[d] = v;
    }
    let (mut x, stats) = pcg(
        &system.matrix,
        &system.rhs,
        Some(&x0),
        config.rel_tol,
        config.max_iterations,
        config.record_trace,
    )?;
    for &(d, v) in &system.constraints {
        x[d] = v;
    }
    Ok((WeakFunction::from_coeffs(space, x), stats))
}

/// Solves the condensed (trace-only) system and recovers the interior
/// coefficients by back-substitution.
pub fn solve_condensed<R: Real>(
    space: &Arc<WgSpace<R>>,
    condensed: &CondensedSystem<R>,
    config: &SolveConfig<R>,
) -> Result<(WeakFunction<R>, SolveStats<R>)> {
    let sys = &condensed.system;
    let mut x0 = vec![R::zero(); sys.n_dofs()];
    for &(d, v) in &sys.constraints {
        x0[d] = v;
    }
    let (mut trace, stats) = pcg(
        &sys.matrix,
        &sys.rhs,
        Some(&x0),
        config.rel_tol,
        config.max_iterations,
        config.record_trace,
    )?;
    for &(d, v) in &sys.constraints {
        trace[d] = v;
    }
    let full = condensed.recover(space, &trace);
    Ok((WeakFunction::from_coeffs(space, full), stats))
}

/// The discrete H1 norm
/// `( sum_T |grad_w v|_T^2 + rho sum_T h_T^{-1} |v0 - vb|_{dT}^2 )^{1/2}`,
/// i.e. the energy norm of the stabilized form with identity coefficient.
pub fn triple_bar_norm<R: Real>(
    space: &WgSpace<R>,
    wg: &WeakGradients<R>,
    v: &WeakFunction<R>,
    rho: R,
) -> R {
    let mesh = space.mesh();
    let mut acc = R::zero();
    for c in 0..mesh.n_cells() {
        let local = v.local_values(c);
        let gcoef = wg.apply(c, &local);
        let g_norm = wg.coeff_norm(c, &gcoef);
        acc += g_norm * g_norm;
        let h_t = crate::assembly::stabilization_length(mesh, c);
        let dc = space.dim_cell_basis();
        let de = space.dim_edge_basis();
        for (s, &e) in mesh.cell_edge_ids(c).iter().enumerate() {
            let rule = space.edge_quad(e);
            let cb = space.cell_basis(c, &rule.points);
            let psi = space.edge_basis(e, &rule.points);
            let mut jump2 = R::zero();
            for p in 0..rule.len() {
                let mut d = R::zero();
                for b in 0..dc {
                    d += cb.values.get(p, b) * local[b];
                }
                for j in 0..de {
                    d -= psi.get(p, j) * local[dc + s * de + j];
                }
                jump2 += d * d * rule.weights[p];
            }
            acc += rho / h_t * jump2;
        }
    }
    acc.max(R::zero()).sqrt()
}

/// History of a fixed-point solve: number of linear solves performed and the
/// H1-norm increments between consecutive iterates.
#[derive(Debug, Clone)]
pub struct PicardTrace<R: Real> {
    pub solves: usize,
    pub increments: Vec<R>,
    pub cg: Vec<SolveStats<R>>,
}

/// Fixed-point iteration for the solution-dependent coefficient: starting
/// from the solution with the coefficient frozen at zero arguments, each step
/// re-assembles the linearized system around the previous iterate. For
/// coefficients that do not depend on the solution this is a single linear
/// solve. Non-convergence carries the increment history; existence theory
/// does not promise a contraction, so that outcome is reportable rather than
/// a failure of the discretization.
pub fn solve_picard<R: Real>(
    space: &Arc<WgSpace<R>>,
    wg: &WeakGradients<R>,
    coefficient: &Coefficient<R>,
    f: &(dyn Fn(Point2<R>) -> R + Sync),
    g: &(dyn Fn(Point2<R>) -> R + Sync),
    rho: R,
    config: &SolveConfig<R>,
) -> Result<(WeakFunction<R>, PicardTrace<R>)> {
    if !coefficient.depends_on_solution() {
        let sys = assembly::assemble(
            space,
            wg,
            coefficient,
            f,
            Boundary::Dirichlet(g),
            rho,
            None,
        )?;
        let (u, stats) = solve_linear(space, &sys, config)?;
        return Ok((u, PicardTrace { solves: 1, increments: Vec::new(), cg: vec![stats] }));
    }

    // initial guess: coefficient frozen at (eta, p) = (0, 0)
    let zero_state = WeakFunction::zero(space);
    let sys = assembly::assemble(
        space,
        wg,
        coefficient,
        f,
        Boundary::Dirichlet(g),
        rho,
        Some(&zero_state),
    )?;
    let (mut current, stats0) = solve_linear(space, &sys, config)?;
    let mut trace = PicardTrace { solves: 1, increments: Vec::new(), cg: vec![stats0] };
    for _ in 0..config.picard_max {
        let sys = assembly::assemble(
            space,
            wg,
            coefficient,
            f,
            Boundary::Dirichlet(g),
            rho,
            Some(&current),
        )?;
        let (next, stats) = solve_linear(space, &sys, config)?;
        trace.solves += 1;
        trace.cg.push(stats);
        let inc = triple_bar_norm(space, wg, &next.sub(&current), rho);
        trace.increments.push(inc);
        current = next;
        if inc <= config.picard_tol {
            return Ok((current, trace));
        }
    }
    Err(WgError::PicardDiverged {
        iterations: config.picard_max,
        increments: trace.increments.iter().map(|v| v.to_f64_lossy()).collect(),
    })
}
