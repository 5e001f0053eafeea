//! The discrete weak gradient: per cell, the `[P_{k-1}]^2` field defined by
//! `(grad_w v, q)_T = -(v0, div q)_T + <vb, q.n>_{dT}` for all vector
//! polynomials `q`. The defining identity is a local linear system in the
//! gradient-space mass matrix, so each cell contributes one dense matrix
//! mapping its local coefficients to gradient coefficients.

use rayon::prelude::*;

use crate::dense::{Cholesky, DMat};
use crate::error::{Result, WgError};
use crate::geom::{Point2, Vec2};
use crate::real::Real;
use crate::space::{weighted_gram, WgSpace};

/// Per-cell weak gradient matrices `G_T` (rows: x-block then y-block of the
/// gradient coefficients; columns: interior then per-segment trace
/// coefficients) together with the gradient-space mass matrices.
///
/// `G_T` depends only on the cell geometry and `k`, never on the PDE
/// coefficient or the stabilization parameter.
pub struct WeakGradients<R: Real> {
    per_cell: Vec<DMat<R>>,
    grad_mass: Vec<DMat<R>>,
}

impl<R: Real> WeakGradients<R> {
    pub fn build(space: &WgSpace<R>) -> Result<Self> {
        let n = space.mesh().n_cells();
        let both: Vec<Result<(DMat<R>, DMat<R>)>> = (0..n)
            .into_par_iter()
            .map(|c| build_weak_gradient(space, c))
            .collect();
        let mut per_cell = Vec::with_capacity(n);
        let mut grad_mass = Vec::with_capacity(n);
        for r in both {
            let (g, m) = r?;
            per_cell.push(g);
            grad_mass.push(m);
        }
        Ok(Self { per_cell, grad_mass })
    }

    pub fn matrix(&self, cell: usize) -> &DMat<R> {
        &self.per_cell[cell]
    }

    pub fn grad_mass(&self, cell: usize) -> &DMat<R> {
        &self.grad_mass[cell]
    }

    /// Gradient coefficients of a weak function on one cell.
    pub fn apply(&self, cell: usize, local_values: &[R]) -> Vec<R> {
        self.per_cell[cell].mul_vec(local_values)
    }

    /// Evaluates a gradient-space field (coefficients x-block then y-block)
    /// at points of the cell.
    pub fn eval(
        &self,
        space: &WgSpace<R>,
        cell: usize,
        coeffs: &[R],
        pts: &[Point2<R>],
    ) -> Vec<Vec2<R>> {
        let m = space.dim_grad_basis();
        let basis = space.grad_basis(cell, pts);
        let mut out = Vec::with_capacity(pts.len());
        for p in 0..pts.len() {
            let row = basis.values.row(p);
            let mut gx = R::zero();
            let mut gy = R::zero();
            for b in 0..m {
                gx += row[b] * coeffs[b];
                gy += row[b] * coeffs[m + b];
            }
            out.push(Vec2::new(gx, gy));
        }
        out
    }

    /// `L2(T)` norm of a gradient-space field given by coefficients.
    pub fn coeff_norm(&self, cell: usize, coeffs: &[R]) -> R {
        let m = self.grad_mass[cell].rows();
        let mut acc = R::zero();
        for block in 0..2 {
            let c = &coeffs[block * m..(block + 1) * m];
            let mc = self.grad_mass[cell].mul_vec(c);
            for i in 0..m {
                acc += c[i] * mc[i];
            }
        }
        acc.max(R::zero()).sqrt()
    }
}

/// Builds `G_T` for one cell by assembling the right-hand sides of the
/// defining identity for every vector basis polynomial and solving the
/// gradient-space mass system. Returns `(G_T, scalar gradient mass)`.
pub fn build_weak_gradient<R: Real>(
    space: &WgSpace<R>,
    cell: usize,
) -> Result<(DMat<R>, DMat<R>)> {
    let mesh = space.mesh();
    let m = space.dim_grad_basis();
    let dc = space.dim_cell_basis();
    let de = space.dim_edge_basis();
    let edges = mesh.cell_edge_ids(cell);
    let nloc = dc + edges.len() * de;

    let rule = space.cell_rule(cell)?;
    let grad = space.grad_basis(cell, &rule.points);
    let mass = weighted_gram(&grad.values, &rule.weights);
    let chol = Cholesky::new(&mass).ok_or(WgError::SingularMassMatrix { cell })?;

    let mut rhs = DMat::zeros(2 * m, nloc);

    // volume part: -(v0, div q)_T, evaluated directly on the divergence of
    // the vector monomials; the integrated-by-parts form is only a test-side
    // cross-check
    let cell_basis = space.cell_basis(cell, &rule.points);
    for p in 0..rule.len() {
        let w = rule.weights[p];
        for i in 0..m {
            let div_x = grad.dx.get(p, i); // div (g_i, 0)
            let div_y = grad.dy.get(p, i); // div (0, g_i)
            for j in 0..dc {
                let phi = cell_basis.values.get(p, j) * w;
                rhs.add_to(i, j, -div_x * phi);
                rhs.add_to(m + i, j, -div_y * phi);
            }
        }
    }

    // boundary part: <vb, q.n>_{dT} over each boundary segment
    for (s, &e) in edges.iter().enumerate() {
        let n = mesh.outward_normal(cell, e);
        let erule = space.edge_quad(e);
        let psi = space.edge_basis(e, &erule.points);
        let g_on_edge = space.grad_basis(cell, &erule.points);
        let col0 = dc + s * de;
        for p in 0..erule.len() {
            let w = erule.weights[p];
            for i in 0..m {
                let gi = g_on_edge.values.get(p, i);
                for j in 0..de {
                    let v = psi.get(p, j) * w * gi;
                    rhs.add_to(i, col0 + j, v * n.x);
                    rhs.add_to(m + i, col0 + j, v * n.y);
                }
            }
        }
    }

    // block-diagonal mass solve, x-block then y-block
    let mut g = DMat::zeros(2 * m, nloc);
    let mut col = vec![R::zero(); m];
    for j in 0..nloc {
        for block in 0..2 {
            for i in 0..m {
                col[i] = rhs.get(block * m + i, j);
            }
            chol.solve_in_place(&mut col);
            for i in 0..m {
                g.set(block * m + i, j, col[i]);
            }
        }
    }
    Ok((g, mass))
}

/// Residual `|| grad_w(Q_h u) - Q_grad(grad u) ||_T` of the commuting
/// identity on one cell. Exact (up to round-off) whenever `u` is a
/// polynomial of degree <= `k`; bounded by quadrature error otherwise.
pub fn verify_commuting_identity<R: Real>(
    space: &WgSpace<R>,
    wg: &WeakGradients<R>,
    cell: usize,
    u: impl Fn(Point2<R>) -> R,
    grad_u: impl Fn(Point2<R>) -> Vec2<R>,
) -> Result<R> {
    let mesh = space.mesh();
    let dc = space.dim_cell_basis();
    let de = space.dim_edge_basis();
    let mut local = space.project_cell(cell, &u)?;
    for &e in mesh.cell_edge_ids(cell) {
        local.extend(space.project_edge(e, &u)?);
    }
    debug_assert_eq!(local.len(), dc + mesh.cell_edge_ids(cell).len() * de);
    let lhs = wg.apply(cell, &local);
    let rhs = space.project_gradient(cell, grad_u)?;
    let diff: Vec<R> = lhs.iter().zip(&rhs).map(|(&a, &b)| a - b).collect();
    Ok(wg.coeff_norm(cell, &diff))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::PolygonalMesh;
    use crate::quadrature;
    use crate::space::WgSpace;
    use rand::{Rng, SeedableRng};
    use std::sync::Arc;

    type Mesh = PolygonalMesh<f64>;

    fn pentagon_mesh() -> Mesh {
        let pts = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.9, -0.2),
            Point2::new(2.6, 1.1),
            Point2::new(1.2, 2.2),
            Point2::new(-0.4, 1.1),
        ];
        Mesh::from_cells(pts, vec![vec![0, 1, 2, 3, 4]]).unwrap()
    }

    #[test]
    fn annihilates_constants() {
        for (mesh, k) in [
            (Mesh::unit_square_grid(2), 1),
            (Mesh::unit_square_triangles(2), 2),
            (pentagon_mesh(), 2),
        ] {
            let space = WgSpace::new(mesh, k);
            let wg = WeakGradients::build(&space).unwrap();
            let ones = crate::space::WeakFunction::constant(&space, 3.5);
            for c in 0..space.mesh().n_cells() {
                let g = wg.apply(c, &ones.local_values(c));
                let norm = wg.coeff_norm(c, &g);
                assert!(norm < 1e-12, "cell {c}: |grad_w const| = {norm}");
            }
        }
    }

    #[test]
    fn linear_weak_function_has_unit_gradient() {
        // v = {x, x} on the unit square, k = 1
        let space = WgSpace::new(Mesh::unit_square_grid(1), 1);
        let wg = WeakGradients::build(&space).unwrap();
        let v = space.project_weak(|p| p.x).unwrap();
        let g = wg.apply(0, &v.local_values(0));
        let vals = wg.eval(&space, 0, &g, &[Point2::new(0.3, 0.7)]);
        assert!((vals[0].x - 1.0).abs() < 1e-13);
        assert!(vals[0].y.abs() < 1e-13);
    }

    #[test]
    fn defining_identity_holds_by_quadrature() {
        // re-evaluate the defining identity for every vector basis monomial
        // on a pentagon with k = 2 and a random weak function
        let space = WgSpace::new(pentagon_mesh(), 2);
        let wg = WeakGradients::build(&space).unwrap();
        let mesh = space.mesh();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let cell = 0;
        let nloc = space.local_dof_indices(cell).len();
        let local: Vec<f64> = (0..nloc).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let gcoef = wg.apply(cell, &local);
        let m = space.dim_grad_basis();
        let rule = space.cell_rule_with(cell, 12).unwrap();
        let grad_basis = space.grad_basis(cell, &rule.points);
        let cell_basis = space.cell_basis(cell, &rule.points);
        let dc = space.dim_cell_basis();
        for i in 0..2 * m {
            // lhs: (grad_w v, q_i)_T
            let mut lhs = 0.0;
            for p in 0..rule.len() {
                let mut gw = 0.0;
                let comp = if i < m { 0 } else { 1 };
                for b in 0..m {
                    gw += grad_basis.values.get(p, b) * gcoef[comp * m + b];
                }
                let qi = grad_basis.values.get(p, i % m);
                lhs += gw * qi * rule.weights[p];
            }
            // rhs: -(v0, div q_i) + <vb, q_i . n>
            let mut rhs = 0.0;
            for p in 0..rule.len() {
                let div = if i < m {
                    grad_basis.dx.get(p, i)
                } else {
                    grad_basis.dy.get(p, i - m)
                };
                let mut v0 = 0.0;
                for b in 0..dc {
                    v0 += cell_basis.values.get(p, b) * local[b];
                }
                rhs -= v0 * div * rule.weights[p];
            }
            for (s, &e) in mesh.cell_edge_ids(cell).iter().enumerate() {
                let n = mesh.outward_normal(cell, e);
                let er = space.edge_quad_with(e, 12);
                let psi = space.edge_basis(e, &er.points);
                let gb = space.grad_basis(cell, &er.points);
                let nc = if i < m { n.x } else { n.y };
                for p in 0..er.len() {
                    let mut vb = 0.0;
                    for j in 0..space.dim_edge_basis() {
                        vb += psi.get(p, j) * local[dc + s * space.dim_edge_basis() + j];
                    }
                    rhs += vb * gb.values.get(p, i % m) * nc * er.weights[p];
                }
            }
            assert!((lhs - rhs).abs() < 1e-12, "basis {i}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn volume_term_matches_integrated_by_parts_form() {
        // -(v0, div q) == (grad v0, q) - <v0, q.n> for polynomial v0
        let space = WgSpace::new(pentagon_mesh(), 2);
        let mesh = space.mesh();
        let cell = 0;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let dc = space.dim_cell_basis();
        let v0: Vec<f64> = (0..dc).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m = space.dim_grad_basis();
        let rule = space.cell_rule_with(cell, 12).unwrap();
        let gb = space.grad_basis(cell, &rule.points);
        let cb = space.cell_basis(cell, &rule.points);
        for i in 0..m {
            let mut direct = 0.0;
            let mut parts = 0.0;
            for p in 0..rule.len() {
                let mut v = 0.0;
                let mut vx = 0.0;
                for b in 0..dc {
                    v += cb.values.get(p, b) * v0[b];
                    vx += cb.dx.get(p, b) * v0[b];
                }
                direct -= v * gb.dx.get(p, i) * rule.weights[p];
                parts += vx * gb.values.get(p, i) * rule.weights[p];
            }
            for &e in mesh.cell_edge_ids(cell) {
                let n = mesh.outward_normal(cell, e);
                let er = space.edge_quad_with(e, 12);
                let cbe = space.cell_basis(cell, &er.points);
                let gbe = space.grad_basis(cell, &er.points);
                for p in 0..er.len() {
                    let mut v = 0.0;
                    for b in 0..dc {
                        v += cbe.values.get(p, b) * v0[b];
                    }
                    parts -= v * gbe.values.get(p, i) * n.x * er.weights[p];
                }
            }
            assert!((direct - parts).abs() < 1e-12, "q = (g_{i}, 0)");
        }
    }

    #[test]
    fn commuting_identity_on_polynomials() {
        let space = WgSpace::new(pentagon_mesh(), 1);
        let wg = WeakGradients::build(&space).unwrap();
        let r = verify_commuting_identity(
            &space,
            &wg,
            0,
            |p| p.x + 2.0 * p.y,
            |_| Vec2::new(1.0, 2.0),
        )
        .unwrap();
        assert!(r <= 1e-12, "linear residual {r}");

        let space = WgSpace::new(pentagon_mesh(), 2);
        let wg = WeakGradients::build(&space).unwrap();
        let r = verify_commuting_identity(
            &space,
            &wg,
            0,
            |p| p.x * p.x * p.y,
            |p| Vec2::new(2.0 * p.x * p.y, p.x * p.x),
        )
        .unwrap();
        assert!(r <= 1e-11, "x^2 y residual {r}");
    }

    #[test]
    fn commuting_residual_for_smooth_field_decreases_with_h() {
        let pi = std::f64::consts::PI;
        let u = move |p: Point2<f64>| (pi * p.x).sin() * (pi * p.y).sin();
        let gu = move |p: Point2<f64>| {
            Vec2::new(
                pi * (pi * p.x).cos() * (pi * p.y).sin(),
                pi * (pi * p.x).sin() * (pi * p.y).cos(),
            )
        };
        // build Q_h with the scheme-level rule (2k + 2) so the residual
        // exposes the quadrature error, which must shrink under refinement
        let worst = |n: usize| -> f64 {
            let space = WgSpace::new(Mesh::unit_square_grid(n), 1);
            let wg = WeakGradients::build(&space).unwrap();
            let ex = space.quad_exactness();
            let mut worst = 0.0f64;
            for c in 0..space.mesh().n_cells() {
                let mut local = space.project_cell_with(c, u, ex).unwrap();
                for &e in space.mesh().cell_edge_ids(c) {
                    local.extend(space.project_edge_with(e, u, ex).unwrap());
                }
                let lhs = wg.apply(c, &local);
                let rhs = space.project_gradient_with(c, gu, 20).unwrap();
                let diff: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
                worst = worst.max(wg.coeff_norm(c, &diff));
            }
            worst
        };
        let at16 = worst(16);
        let at32 = worst(32);
        assert!(at16 <= 1e-6, "residual at h=1/16: {at16}");
        assert!(at32 < at16, "residual must decrease: {at32} vs {at16}");
    }

    #[test]
    fn smooth_field_weak_gradient_matches_high_exactness_projection() {
        // the default-exactness pipeline against a degree-20 projection of
        // grad u; agreement within quadrature error
        let pi = std::f64::consts::PI;
        let u = |p: Point2<f64>| (pi * p.x).sin() * (pi * p.y).sin();
        let gu = |p: Point2<f64>| {
            Vec2::new(
                pi * (pi * p.x).cos() * (pi * p.y).sin(),
                pi * (pi * p.x).sin() * (pi * p.y).cos(),
            )
        };
        let space = WgSpace::new(Mesh::unit_square_grid(16), 1);
        let wg = WeakGradients::build(&space).unwrap();
        let cell = 37;
        let ex = space.quad_exactness();
        let mut local = space.project_cell_with(cell, u, ex).unwrap();
        for &e in space.mesh().cell_edge_ids(cell) {
            local.extend(space.project_edge_with(e, u, ex).unwrap());
        }
        let lhs = wg.apply(cell, &local);
        // oracle: project grad u with a degree-20 fan rule
        let g = space.mesh().cell_geom(cell);
        let rule =
            quadrature::polygon_rule_from(&space.mesh().cell_points(cell), g.centroid, 20, cell)
                .unwrap();
        let basis = space.grad_basis(cell, &rule.points);
        let mass = weighted_gram(&basis.values, &rule.weights);
        let chol = Cholesky::new(&mass).unwrap();
        let m = space.dim_grad_basis();
        let mut bx = vec![0.0; m];
        let mut by = vec![0.0; m];
        for (p, pt) in rule.points.iter().enumerate() {
            let v = gu(*pt);
            for b in 0..m {
                bx[b] += rule.weights[p] * v.x * basis.values.get(p, b);
                by[b] += rule.weights[p] * v.y * basis.values.get(p, b);
            }
        }
        chol.solve_in_place(&mut bx);
        chol.solve_in_place(&mut by);
        let diff: Vec<f64> = lhs
            .iter()
            .zip(bx.iter().chain(by.iter()))
            .map(|(a, b)| a - b)
            .collect();
        let r = wg.coeff_norm(cell, &diff);
        assert!(r <= 1e-6, "oracle residual {r}");
    }

    #[test]
    fn gradient_matrix_is_deterministic_and_geometry_only() {
        let space: Arc<WgSpace<f64>> = WgSpace::new(Mesh::unit_square_triangles(3), 1);
        let a = WeakGradients::build(&space).unwrap();
        let b = WeakGradients::build(&space).unwrap();
        for c in 0..space.mesh().n_cells() {
            assert_eq!(a.matrix(c).data(), b.matrix(c).data());
        }
    }

    #[test]
    fn commuting_identity_fuzz_random_polygons() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for trial in 0..25 {
            let nv = rng.gen_range(3..=7);
            let mut angles: Vec<f64> = (0..nv)
                .map(|_| rng.gen_range(0.0..2.0 * std::f64::consts::PI))
                .collect();
            angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
            angles.dedup_by(|a, b| (*a - *b).abs() < 0.3);
            if angles.len() < 3 {
                continue;
            }
            let r = rng.gen_range(0.4..1.6);
            let pts: Vec<Point2<f64>> = angles
                .iter()
                .map(|t| Point2::new(0.3 + r * t.cos(), -0.2 + r * t.sin()))
                .collect();
            let mesh = Mesh::from_cells(pts, vec![(0..angles.len()).collect()]).unwrap();
            for k in [1usize, 2] {
                let space = WgSpace::new(mesh.clone(), k);
                let wg = WeakGradients::build(&space).unwrap();
                let cx: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let u = {
                    let cx = cx.clone();
                    move |p: Point2<f64>| {
                        cx[0] + cx[1] * p.x
                            + cx[2] * p.y
                            + if k == 2 {
                                cx[3] * p.x * p.x + cx[4] * p.x * p.y + cx[5] * p.y * p.y
                            } else {
                                0.0
                            }
                    }
                };
                let gu = {
                    let cx = cx.clone();
                    move |p: Point2<f64>| {
                        if k == 2 {
                            Vec2::new(
                                cx[1] + 2.0 * cx[3] * p.x + cx[4] * p.y,
                                cx[2] + cx[4] * p.x + 2.0 * cx[5] * p.y,
                            )
                        } else {
                            Vec2::new(cx[1], cx[2])
                        }
                    }
                };
                let res = verify_commuting_identity(&space, &wg, 0, u, gu).unwrap();
                assert!(res <= 1e-11, "trial {trial} k={k}: residual {res}");
            }
        }
    }
}
