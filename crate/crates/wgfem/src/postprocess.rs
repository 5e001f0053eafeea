//! Error norms, flux certificates and convergence-rate fitting.
//!
//! Errors are measured between the discrete solution and the projection of
//! the exact solution: the discrete H1 norm of the difference, the
//! element-based L2 norm of the interior part, and the edge-based L2 norm
//! `(sum_e h_e |eb|_e^2)^{1/2}` of the trace part.
//!
//! The numerical flux `q_h = -Q_grad(a grad_w u_h) + rho h_T^{-1}(u0 - ub) n`
//! satisfies, per cell, `int_{dT} q_h.n = int_T f`, and its normal component
//! is single-valued across interior edges. Both are algebraic identities of
//! the discrete solution, so their residuals track the linear-solver
//! tolerance rather than the mesh size.

use std::sync::Arc;

use crate::error::{Result, WgError};
use crate::real::{real, Real};
use crate::solver::triple_bar_norm;
use crate::space::{Coefficient, WeakFunction, WgSpace};
use crate::weak_gradient::WeakGradients;

/// Errors of one mesh level.
#[derive(Debug, Clone, Copy)]
pub struct ErrorTriple<R: Real> {
    pub h: R,
    pub e_h1: R,
    pub e_l2: R,
    pub e_edge: R,
}

/// Fitted convergence rates; `None` marks a norm whose error was exactly
/// zero (printed as `exact`).
#[derive(Debug, Clone, Copy)]
pub struct RateTriple<R: Real> {
    pub h1: Option<R>,
    pub l2: Option<R>,
    pub edge: Option<R>,
}

/// Computes the three error norms against a manufactured solution.
pub fn error_norms<R: Real>(
    space: &Arc<WgSpace<R>>,
    wg: &WeakGradients<R>,
    u_h: &WeakFunction<R>,
    exact: &(dyn Fn(crate::geom::Point2<R>) -> R + Sync),
    rho: R,
) -> Result<ErrorTriple<R>> {
    let mesh = space.mesh();
    let q = space.project_weak(exact)?;
    let e = q.sub(u_h);
    let e_h1 = triple_bar_norm(space, wg, &e, rho);
    let mut l2 = R::zero();
    for c in 0..mesh.n_cells() {
        let rule = space.cell_rule(c)?;
        let vals = e.eval_interior(c, &rule.points);
        for (p, w) in rule.weights.iter().enumerate() {
            l2 += vals[p] * vals[p] * *w;
        }
    }
    let mut edge = R::zero();
    for eid in 0..mesh.n_edges() {
        let rule = space.edge_quad(eid);
        let vals = e.eval_trace(eid, &rule.points);
        let h_e = mesh.edge_geom(eid).length;
        let mut acc = R::zero();
        for (p, w) in rule.weights.iter().enumerate() {
            acc += vals[p] * vals[p] * *w;
        }
        edge += h_e * acc;
    }
    Ok(ErrorTriple {
        h: mesh.h_max(),
        e_h1,
        e_l2: l2.max(R::zero()).sqrt(),
        e_edge: edge.max(R::zero()).sqrt(),
    })
}

/// Per-cell conservation residuals and per-interior-edge normal-flux jumps,
/// raw and scaled by the local data magnitude `|f|_T |T| + eps`.
#[derive(Debug, Clone)]
pub struct FluxReport<R: Real> {
    /// `| int_{dT} q_h.n - int_T f |` per cell.
    pub conservation: Vec<R>,
    pub conservation_scaled: Vec<R>,
    /// `(edge, |[q_h.n]|_{L2(e)}, scaled)` per interior edge.
    pub jumps: Vec<(usize, R, R)>,
}

impl<R: Real> FluxReport<R> {
    pub fn max_conservation_scaled(&self) -> R {
        self.conservation_scaled.iter().fold(R::zero(), |m, &v| m.max(v))
    }

    pub fn max_jump_scaled(&self) -> R {
        self.jumps.iter().fold(R::zero(), |m, &(_, _, s)| m.max(s))
    }

    pub fn max_conservation_raw(&self) -> R {
        self.conservation.iter().fold(R::zero(), |m, &v| m.max(v))
    }

    pub fn max_jump_raw(&self) -> R {
        self.jumps.iter().fold(R::zero(), |m, &(_, r, _)| m.max(r))
    }
}

/// Evaluates the numerical flux certificates for a discrete solution. The
/// coefficient is evaluated at the solution's own interior value and weak
/// gradient, matching the nonlinear form.
pub fn flux_report<R: Real>(
    space: &Arc<WgSpace<R>>,
    wg: &WeakGradients<R>,
    u_h: &WeakFunction<R>,
    coefficient: &Coefficient<R>,
    f: &(dyn Fn(crate::geom::Point2<R>) -> R + Sync),
    rho: R,
) -> Result<FluxReport<R>> {
    let mesh = space.mesh();
    let m = space.dim_grad_basis();
    let dc = space.dim_cell_basis();
    let de = space.dim_edge_basis();

    // per cell: projected flux -Q_grad(a grad_w u_h) and the data scale
    let mut flux_coeffs: Vec<Vec<R>> = Vec::with_capacity(mesh.n_cells());
    let mut scales: Vec<R> = Vec::with_capacity(mesh.n_cells());
    let mut locals: Vec<Vec<R>> = Vec::with_capacity(mesh.n_cells());
    for c in 0..mesh.n_cells() {
        let local = u_h.local_values(c);
        let gcoef = wg.apply(c, &local);
        let rule = space.cell_rule(c)?;
        let grad_basis = space.grad_basis(c, &rule.points);
        let cell_basis = space.cell_basis(c, &rule.points);
        let mut f_l2 = R::zero();
        let field = |p: usize| {
            let row = grad_basis.values.row(p);
            let mut gx = R::zero();
            let mut gy = R::zero();
            for b in 0..m {
                gx += row[b] * gcoef[b];
                gy += row[b] * gcoef[m + b];
            }
            let crow = cell_basis.values.row(p);
            let mut v0 = R::zero();
            for b in 0..dc {
                v0 += crow[b] * local[b];
            }
            (v0, crate::geom::Vec2::new(gx, gy))
        };
        // project a * grad_w u_h onto the gradient space
        let mass = crate::space::weighted_gram(&grad_basis.values, &rule.weights);
        let chol = crate::dense::Cholesky::new(&mass)
            .ok_or(WgError::SingularMassMatrix { cell: c })?;
        let mut bx = vec![R::zero(); m];
        let mut by = vec![R::zero(); m];
        for (p, pt) in rule.points.iter().enumerate() {
            let w = rule.weights[p];
            let (v0, gv) = field(p);
            let a = coefficient.eval(*pt, v0, gv);
            let av = a.mul_vec(gv);
            for b in 0..m {
                let phi = grad_basis.values.get(p, b);
                bx[b] += w * av.x * phi;
                by[b] += w * av.y * phi;
            }
            let fv = f(*pt);
            f_l2 += fv * fv * w;
        }
        chol.solve_in_place(&mut bx);
        chol.solve_in_place(&mut by);
        bx.extend(by);
        flux_coeffs.push(bx);
        scales.push(f_l2.max(R::zero()).sqrt() * mesh.cell_geom(c).area);
        locals.push(local);
    }
    let max_scale = scales.iter().fold(R::zero(), |a, &s| a.max(s));
    let eps = if max_scale > R::zero() { real::<R>(1e-12) * max_scale } else { R::one() };

    // conservation: int_{dT} (-Q_grad(a grad_w u_h).n + rho/h_T (u0 - ub)) = int_T f
    let mut conservation = Vec::with_capacity(mesh.n_cells());
    let mut conservation_scaled = Vec::with_capacity(mesh.n_cells());
    for c in 0..mesh.n_cells() {
        let rule = space.cell_rule(c)?;
        let mut f_int = R::zero();
        for (p, pt) in rule.points.iter().enumerate() {
            f_int += f(*pt) * rule.weights[p];
        }
        let h_t = crate::assembly::stabilization_length(mesh, c);
        let mut boundary = R::zero();
        for (s, &e) in mesh.cell_edge_ids(c).iter().enumerate() {
            let n = mesh.outward_normal(c, e);
            let er = space.edge_quad(e);
            let gb = space.grad_basis(c, &er.points);
            let cb = space.cell_basis(c, &er.points);
            let psi = space.edge_basis(e, &er.points);
            for p in 0..er.len() {
                let mut qx = R::zero();
                let mut qy = R::zero();
                for b in 0..m {
                    qx += gb.values.get(p, b) * flux_coeffs[c][b];
                    qy += gb.values.get(p, b) * flux_coeffs[c][m + b];
                }
                let mut v0 = R::zero();
                for b in 0..dc {
                    v0 += cb.values.get(p, b) * locals[c][b];
                }
                let mut vb = R::zero();
                for j in 0..de {
                    vb += psi.get(p, j) * locals[c][dc + s * de + j];
                }
                let flux_n = -(qx * n.x + qy * n.y) + rho / h_t * (v0 - vb);
                boundary += flux_n * er.weights[p];
            }
        }
        let raw = (boundary - f_int).abs();
        conservation.push(raw);
        conservation_scaled.push(raw / (scales[c] + eps));
    }

    // normal-flux continuity across interior edges
    let mut jumps = Vec::new();
    for eid in 0..mesh.n_edges() {
        let edge = mesh.edge(eid);
        let Some(right) = edge.right else { continue };
        let er = space.edge_quad(eid);
        let psi = space.edge_basis(eid, &er.points);
        let mut jump2 = R::zero();
        for p in 0..er.len() {
            let mut total = R::zero();
            for &c in &[edge.left, right] {
                let n = mesh.outward_normal(c, eid);
                let gb = space.grad_basis(c, &[er.points[p]]);
                let cb = space.cell_basis(c, &[er.points[p]]);
                let mut qx = R::zero();
                let mut qy = R::zero();
                for b in 0..m {
                    qx += gb.values.get(0, b) * flux_coeffs[c][b];
                    qy += gb.values.get(0, b) * flux_coeffs[c][m + b];
                }
                let mut v0 = R::zero();
                for b in 0..dc {
                    v0 += cb.values.get(0, b) * locals[c][b];
                }
                let s = mesh
                    .cell_edge_ids(c)
                    .iter()
                    .position(|&e| e == eid)
                    .expect("edge not in incident cell");
                let mut vb = R::zero();
                for j in 0..de {
                    vb += psi.get(p, j) * locals[c][dc + s * de + j];
                }
                let h_t = crate::assembly::stabilization_length(mesh, c);
                total += -(qx * n.x + qy * n.y) + rho / h_t * (v0 - vb);
            }
            jump2 += total * total * er.weights[p];
        }
        let raw = jump2.max(R::zero()).sqrt();
        let h_e = mesh.edge_geom(eid).length;
        let scale = scales[edge.left].max(scales[right]) + eps;
        jumps.push((eid, raw, raw * h_e.sqrt() / scale));
    }

    Ok(FluxReport { conservation, conservation_scaled, jumps })
}

/// Least-squares slope of `log(error)` against `log(h)`, per norm. Requires
/// at least three levels with strictly decreasing `h`; an exactly zero error
/// makes that norm's rate `None` ("exact").
pub fn fit_rate<R: Real>(levels: &[ErrorTriple<R>]) -> Result<RateTriple<R>> {
    if levels.len() < 3 {
        return Err(WgError::InvalidArgument(
            "rate fitting needs at least 3 levels".into(),
        ));
    }
    for w in levels.windows(2) {
        if !(w[1].h < w[0].h) {
            return Err(WgError::InvalidArgument(
                "rate fitting needs strictly decreasing h".into(),
            ));
        }
    }
    let slope = |errs: Vec<R>| -> Option<R> {
        if errs.iter().any(|&e| e == R::zero()) {
            return None;
        }
        let n = real::<R>(levels.len() as f64);
        let xs: Vec<R> = levels.iter().map(|l| l.h.ln()).collect();
        let ys: Vec<R> = errs.iter().map(|&e| e.ln()).collect();
        let xm = xs.iter().fold(R::zero(), |a, &x| a + x) / n;
        let ym = ys.iter().fold(R::zero(), |a, &y| a + y) / n;
        let mut num = R::zero();
        let mut den = R::zero();
        for (x, y) in xs.iter().zip(&ys) {
            num += (*x - xm) * (*y - ym);
            den += (*x - xm) * (*x - xm);
        }
        Some(num / den)
    };
    Ok(RateTriple {
        h1: slope(levels.iter().map(|l| l.e_h1).collect()),
        l2: slope(levels.iter().map(|l| l.e_l2).collect()),
        edge: slope(levels.iter().map(|l| l.e_edge).collect()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, Boundary};
    use crate::mesh::PolygonalMesh;
    use crate::solver::{solve_linear, SolveConfig};
    use crate::space::WgSpace;

    type Mesh = PolygonalMesh<f64>;

    fn case1_exact(p: crate::geom::Point2<f64>) -> f64 {
        let pi = std::f64::consts::PI;
        (pi * p.x).sin() * (pi * p.y).sin()
    }

    fn case1_f(p: crate::geom::Point2<f64>) -> f64 {
        let pi = std::f64::consts::PI;
        2.0 * pi * pi * case1_exact(p)
    }

    #[test]
    fn projected_exact_solution_has_zero_error() {
        let space = WgSpace::new(Mesh::unit_square_grid(4), 1);
        let wg = crate::weak_gradient::WeakGradients::build(&space).unwrap();
        let q = space.project_weak(case1_exact).unwrap();
        let e = error_norms(&space, &wg, &q, &case1_exact, 1.0).unwrap();
        assert!(e.e_h1 <= 1e-12, "H1 {}", e.e_h1);
        assert!(e.e_l2 <= 1e-12, "L2 {}", e.e_l2);
        assert!(e.e_edge <= 1e-12, "edge {}", e.e_edge);
    }

    #[test]
    fn flux_identities_hold_for_discrete_solution_and_tighten_with_cg() {
        let space = WgSpace::new(Mesh::unit_square_grid(8), 1);
        let wg = crate::weak_gradient::WeakGradients::build(&space).unwrap();
        let a = Coefficient::identity();
        let sys = assemble(
            &space,
            &wg,
            &a,
            &case1_f,
            Boundary::Dirichlet(&|_| 0.0),
            1.0,
            None,
        )
        .unwrap();
        let residuals = |tol: f64| {
            let cfg = SolveConfig { rel_tol: tol, ..Default::default() };
            let (u, _) = solve_linear(&space, &sys, &cfg).unwrap();
            let report = flux_report(&space, &wg, &u, &a, &case1_f, 1.0).unwrap();
            (report.max_conservation_raw(), report.max_jump_raw(), report)
        };
        let (c5, j5, _) = residuals(1e-5);
        let (c9, j9, report) = residuals(1e-9);
        assert!(c9 <= c5 / 5.0, "conservation {c5} -> {c9}");
        assert!(j9 <= j5 / 5.0, "jump {j5} -> {j9}");
        // at the default tolerance the scaled certificates are tiny
        let cfg = SolveConfig::default();
        let (u, _) = solve_linear(&space, &sys, &cfg).unwrap();
        let tight = flux_report(&space, &wg, &u, &a, &case1_f, 1.0).unwrap();
        assert!(tight.max_conservation_scaled() <= 1e-8);
        assert!(tight.max_jump_scaled() <= 1e-8);
        assert!(tight.max_conservation_scaled() < report.max_conservation_scaled());
    }

    #[test]
    fn projected_solution_is_not_conservative() {
        // negative control: the projection of the exact solution does not
        // satisfy the discrete flux identity
        let space = WgSpace::new(Mesh::unit_square_grid(8), 1);
        let wg = crate::weak_gradient::WeakGradients::build(&space).unwrap();
        let a = Coefficient::identity();
        let q = space.project_weak(case1_exact).unwrap();
        let report = flux_report(&space, &wg, &q, &a, &case1_f, 1.0).unwrap();
        assert!(
            report.max_conservation_scaled() > 1e-4,
            "projection unexpectedly conservative: {}",
            report.max_conservation_scaled()
        );
    }

    #[test]
    fn fit_rate_on_synthetic_errors() {
        let mk = |h: f64| ErrorTriple { h, e_h1: h * h, e_l2: h * h, e_edge: h * h };
        let levels: Vec<_> = [0.5, 0.25, 0.125, 0.0625].iter().map(|&h| mk(h)).collect();
        let r = fit_rate(&levels).unwrap();
        assert!((r.h1.unwrap() - 2.0).abs() < 1e-12);
        // relabeling h -> c h leaves the slope unchanged
        let scaled: Vec<_> = levels
            .iter()
            .map(|l| ErrorTriple { h: 3.7 * l.h, ..*l })
            .collect();
        let r2 = fit_rate(&scaled).unwrap();
        assert!((r2.h1.unwrap() - r.h1.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn fit_rate_validates_input_and_reports_exact() {
        let mk = |h: f64, e: f64| ErrorTriple { h, e_h1: e, e_l2: 0.0, e_edge: e };
        assert!(fit_rate(&[mk(0.5, 1.0), mk(0.25, 0.5)]).is_err());
        let levels = [mk(0.5, 1.0), mk(0.25, 0.5), mk(0.125, 0.25)];
        let r = fit_rate(&levels).unwrap();
        assert!(r.l2.is_none(), "zero errors are `exact`");
        assert!((r.h1.unwrap() - 1.0).abs() < 1e-12);
        let bad = [mk(0.5, 1.0), mk(0.5, 0.5), mk(0.25, 0.2)];
        assert!(fit_rate(&bad).is_err());
    }

    #[test]
    fn h1_error_matches_manual_norm_of_difference() {
        // e_H1 must equal the norm of the coefficient-vector difference
        let space = WgSpace::new(Mesh::unit_square_grid(4), 1);
        let wg = crate::weak_gradient::WeakGradients::build(&space).unwrap();
        let a = Coefficient::identity();
        let sys = assemble(
            &space,
            &wg,
            &a,
            &case1_f,
            Boundary::Dirichlet(&|_| 0.0),
            1.0,
            None,
        )
        .unwrap();
        let (u, _) = solve_linear(&space, &sys, &SolveConfig::default()).unwrap();
        let triple = error_norms(&space, &wg, &u, &case1_exact, 1.0).unwrap();
        let q = space.project_weak(case1_exact).unwrap();
        let manual = crate::solver::triple_bar_norm(&space, &wg, &q.sub(&u), 1.0);
        assert!((triple.e_h1 - manual).abs() <= 1e-12 * manual.max(1.0));
    }
}
