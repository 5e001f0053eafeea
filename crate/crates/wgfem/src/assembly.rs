//! Assembly of the stabilized weak Galerkin system.
//!
//! Each cell contributes a stiffness block `G_T^T M_a G_T` (the weighted
//! gradient-space mass matrix sandwiched by the weak gradient), a boundary
//! penalty block `rho / h_T <v0 - vb, w0 - wb>_{dT}`, and a load vector
//! against the interior basis. Dirichlet data enters through the edge
//! projection of `g` on boundary edges, eliminated symmetrically so the
//! constrained system stays SPD. Interior coefficients couple only to their
//! own cell's trace coefficients, which static condensation exploits.

use rayon::prelude::*;

use crate::dense::{Cholesky, DMat};
use crate::error::{Result, WgError};
use crate::geom::{Point2, Vec2};
use crate::real::Real;
use crate::space::{weighted_gram, Coefficient, WeakFunction, WgSpace};
use crate::weak_gradient::WeakGradients;

/// Compressed sparse rows, built from triplets with duplicate summation.
#[derive(Debug, Clone)]
pub struct Csr<R: Real> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<R>,
}

impl<R: Real> Csr<R> {
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, R)>) -> Self {
        triplets.sort_unstable_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut vals: Vec<R> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, R)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.cols[lo..hi].iter().copied().zip(self.vals[lo..hi].iter().copied())
    }

    pub fn matvec_into(&self, x: &[R], y: &mut [R]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let lo = self.row_ptr[i];
            let hi = self.row_ptr[i + 1];
            let mut acc = R::zero();
            for k in lo..hi {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yi = acc;
        });
    }

    pub fn matvec(&self, x: &[R]) -> Vec<R> {
        let mut y = vec![R::zero(); self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<R> {
        let mut d = vec![R::zero(); self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if j == i {
                    d[i] += v;
                }
            }
        }
        d
    }

    pub fn get(&self, i: usize, j: usize) -> R {
        self.row(i)
            .find(|&(c, _)| c == j)
            .map(|(_, v)| v)
            .unwrap_or_else(R::zero)
    }

    pub fn max_abs(&self) -> R {
        self.vals.iter().fold(R::zero(), |m, v| m.max(v.abs()))
    }
}

/// Element-local operator blocks in the cell's local coefficient ordering.
pub struct LocalOperators<R: Real> {
    /// `A_T = G_T^T M_a G_T`
    pub stiffness: DMat<R>,
    /// `S_T = rho / h_T <v0 - vb, w0 - wb>_{dT}`
    pub stabilization: DMat<R>,
    /// `(f, phi_i)_T` against the interior basis.
    pub load: Vec<R>,
}

impl<R: Real> LocalOperators<R> {
    /// `A_T + S_T`.
    pub fn matrix(&self) -> DMat<R> {
        let n = self.stiffness.rows();
        let mut out = DMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, self.stiffness.get(i, j) + self.stabilization.get(i, j));
            }
        }
        out
    }
}

/// The assembled system: symmetric CSR matrix, right-hand side, and the list
/// of constrained trace coefficients with their prescribed values (already
/// eliminated; constrained rows are identities).
pub struct SparseSystem<R: Real> {
    pub matrix: Csr<R>,
    pub rhs: Vec<R>,
    pub constraints: Vec<(usize, R)>,
}

impl<R: Real> SparseSystem<R> {
    pub fn n_dofs(&self) -> usize {
        self.matrix.n()
    }

    pub fn n_unknowns(&self) -> usize {
        self.matrix.n() - self.constraints.len()
    }

    /// MatrixMarket coordinate export (symmetric: lower triangle, 1-based).
    pub fn write_matrix_market(&self, w: &mut impl std::io::Write) -> Result<()> {
        let mut entries = Vec::new();
        for i in 0..self.matrix.n() {
            for (j, v) in self.matrix.row(i) {
                if j <= i {
                    entries.push((i + 1, j + 1, v));
                }
            }
        }
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(w, "{} {} {}", self.matrix.n(), self.matrix.n(), entries.len())?;
        for (i, j, v) in entries {
            writeln!(w, "{i} {j} {:.16e}", v.to_f64_lossy())?;
        }
        Ok(())
    }

    /// Plain one-value-per-line right-hand side export.
    pub fn write_rhs(&self, w: &mut impl std::io::Write) -> Result<()> {
        for v in &self.rhs {
            writeln!(w, "{:.16e}", v.to_f64_lossy())?;
        }
        Ok(())
    }
}

/// Length scale of the boundary penalty `rho / h_T`: the owning cell's
/// diameter. Kept in one place so the form, the discrete H1 norm and the
/// numerical flux stay consistent.
pub fn stabilization_length<R: Real>(
    mesh: &crate::mesh::PolygonalMesh<R>,
    cell: usize,
) -> R {
    match std::env::var("WGFEM_STAB_LEN").as_deref() {
        Ok("max_edge") => mesh
            .cell_edge_ids(cell)
            .iter()
            .map(|&e| mesh.edge_geom(e).length)
            .fold(R::zero(), R::max),
        Ok("min_edge") => mesh
            .cell_edge_ids(cell)
            .iter()
            .map(|&e| mesh.edge_geom(e).length)
            .fold(R::infinity(), R::min),
        Ok("sqrt_area") => mesh.cell_geom(cell).area.sqrt(),
        _ => mesh.cell_geom(cell).diameter,
    }
}

/// Optional Dirichlet data for assembly; `None` leaves the system floating
/// (all trace coefficients free), which the kernel tests rely on.
pub enum Boundary<'a, R: Real> {
    Floating,
    Dirichlet(&'a (dyn Fn(Point2<R>) -> R + Sync)),
}

/// Computes the local operators of one cell. For solution-dependent
/// coefficients the matrix argument of `a` is evaluated at the linearization
/// state's interior value and weak gradient.
pub fn local_operators<R: Real>(
    space: &WgSpace<R>,
    wg: &WeakGradients<R>,
    cell: usize,
    coefficient: &Coefficient<R>,
    f: &(dyn Fn(Point2<R>) -> R + Sync),
    rho: R,
    state: Option<&WeakFunction<R>>,
) -> Result<LocalOperators<R>> {
    let mesh = space.mesh();
    let m = space.dim_grad_basis();
    let dc = space.dim_cell_basis();
    let de = space.dim_edge_basis();
    let edges = mesh.cell_edge_ids(cell);
    let nloc = dc + edges.len() * de;
    let g_t = wg.matrix(cell);

    // state data for the nonlinear coefficient argument
    let state_local = state.map(|s| s.local_values(cell));
    let state_grad = state_local.as_ref().map(|lv| wg.apply(cell, lv));

    let rule = space.cell_rule(cell)?;
    let grad_basis = space.grad_basis(cell, &rule.points);
    let cell_basis = space.cell_basis(cell, &rule.points);

    // weighted gradient-space mass matrix M_a, blocked x then y
    let mut ma = DMat::zeros(2 * m, 2 * m);
    for (p, pt) in rule.points.iter().enumerate() {
        let w = rule.weights[p];
        let (eta, grad) = match (&state_local, &state_grad) {
            (Some(lv), Some(gc)) => {
                let row = cell_basis.values.row(p);
                let mut v0 = R::zero();
                for b in 0..dc {
                    v0 += row[b] * lv[b];
                }
                let gr = grad_basis.values.row(p);
                let mut gx = R::zero();
                let mut gy = R::zero();
                for b in 0..m {
                    gx += gr[b] * gc[b];
                    gy += gr[b] * gc[m + b];
                }
                (v0, Vec2::new(gx, gy))
            }
            _ => (R::zero(), Vec2::zero()),
        };
        let a = coefficient.eval(*pt, eta, grad);
        let row = grad_basis.values.row(p);
        for i in 0..m {
            let gi = row[i] * w;
            for j in 0..m {
                let gj = row[j];
                ma.add_to(i, j, a.xx * gi * gj);
                ma.add_to(i, m + j, a.xy * gi * gj);
                ma.add_to(m + i, j, a.xy * gi * gj);
                ma.add_to(m + i, m + j, a.yy * gi * gj);
            }
        }
    }
    let stiffness = g_t.tr_mul(&ma.mul(g_t));

    // boundary penalty: rho / h_T sum_e int_e (v0 - vb)(w0 - wb)
    let h_t = stabilization_length(mesh, cell);
    let mut stabilization = DMat::zeros(nloc, nloc);
    for (s, &e) in edges.iter().enumerate() {
        let erule = space.edge_quad(e);
        let psi = space.edge_basis(e, &erule.points);
        let cb = space.cell_basis(cell, &erule.points);
        let np = erule.len();
        let mut diff = DMat::zeros(np, nloc);
        for p in 0..np {
            for b in 0..dc {
                diff.set(p, b, cb.values.get(p, b));
            }
            for j in 0..de {
                diff.set(p, dc + s * de + j, -psi.get(p, j));
            }
        }
        let gram = weighted_gram(&diff, &erule.weights);
        let scale = rho / h_t;
        for i in 0..nloc {
            for j in 0..nloc {
                stabilization.add_to(i, j, scale * gram.get(i, j));
            }
        }
    }

    let mut load = vec![R::zero(); dc];
    for (p, pt) in rule.points.iter().enumerate() {
        let w = rule.weights[p] * f(*pt);
        for b in 0..dc {
            load[b] += w * cell_basis.values.get(p, b);
        }
    }

    Ok(LocalOperators { stiffness, stabilization, load })
}

/// Assembles the global system. `rho` must be positive; a solution-dependent
/// coefficient requires `state`. Cells are processed in parallel but
/// scattered in cell order, so the triplet stream is deterministic.
pub fn assemble<R: Real>(
    space: &WgSpace<R>,
    wg: &WeakGradients<R>,
    coefficient: &Coefficient<R>,
    f: &(dyn Fn(Point2<R>) -> R + Sync),
    boundary: Boundary<'_, R>,
    rho: R,
    state: Option<&WeakFunction<R>>,
) -> Result<SparseSystem<R>> {
    if !(rho > R::zero()) {
        return Err(WgError::InvalidArgument("rho must be positive".into()));
    }
    if coefficient.depends_on_solution() && state.is_none() {
        return Err(WgError::InvalidArgument(
            "solution-dependent coefficient needs a linearization state".into(),
        ));
    }
    let mesh = space.mesh();
    let n = space.n_dofs();
    let locals: Vec<Result<LocalOperators<R>>> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| local_operators(space, wg, c, coefficient, f, rho, state))
        .collect();

    let mut triplets: Vec<(usize, usize, R)> = Vec::new();
    let mut rhs = vec![R::zero(); n];
    for (c, res) in locals.into_iter().enumerate() {
        let ops = res?;
        let dofs = space.local_dof_indices(c);
        let k = ops.matrix();
        for (li, &gi) in dofs.iter().enumerate() {
            for (lj, &gj) in dofs.iter().enumerate() {
                let v = k.get(li, lj);
                if v != R::zero() {
                    triplets.push((gi, gj, v));
                }
            }
        }
        for (li, v) in ops.load.iter().enumerate() {
            rhs[space.interior_dof(c, li)] += *v;
        }
    }

    // Dirichlet data: trace coefficients on boundary edges take the edge
    // projection of g and are eliminated symmetrically
    let mut constraint_value = vec![None::<R>; n];
    let mut constraints = Vec::new();
    if let Boundary::Dirichlet(g) = boundary {
        for e in mesh.boundary_edge_ids() {
            let coeffs = space.project_edge(e, g)?;
            for (l, &v) in coeffs.iter().enumerate() {
                let dof = space.trace_dof(e, l);
                constraint_value[dof] = Some(v);
                constraints.push((dof, v));
            }
        }
        constraints.sort_unstable_by_key(|c| c.0);
    }

    let mut reduced = Vec::with_capacity(triplets.len());
    for (i, j, v) in triplets {
        match (constraint_value[i], constraint_value[j]) {
            (None, None) => reduced.push((i, j, v)),
            (None, Some(val)) => rhs[i] -= v * val,
            (Some(_), _) => {}
        }
    }
    for &(dof, val) in &constraints {
        reduced.push((dof, dof, R::one()));
        rhs[dof] = val;
    }

    Ok(SparseSystem { matrix: Csr::from_triplets(n, reduced), rhs, constraints })
}

/// Per-cell recovery data for back-substitution after a condensed solve:
/// `u_I = K_II^{-1} b_I - K_II^{-1} K_IE u_E`.
struct CellRecovery<R: Real> {
    /// `K_II^{-1} K_IE`
    w: DMat<R>,
    /// `K_II^{-1} b_I`
    solved_rhs: Vec<R>,
    /// columns of `w` in condensed (trace-local) indexing
    edge_dofs: Vec<usize>,
}

/// The trace-only Schur complement of an assembled system, with enough data
/// to recover interior coefficients afterwards.
pub struct CondensedSystem<R: Real> {
    pub system: SparseSystem<R>,
    recovery: Vec<CellRecovery<R>>,
    trace_offset: usize,
}

/// Eliminates all interior coefficients cell by cell. The input must be an
/// assembled (constraint-eliminated or floating) system over the full space.
pub fn condense<R: Real>(
    system: &SparseSystem<R>,
    space: &WgSpace<R>,
) -> Result<CondensedSystem<R>> {
    let mesh = space.mesh();
    let dc = space.dim_cell_basis();
    let de = space.dim_edge_basis();
    let offset = space.trace_offset();
    let n_trace = space.n_dofs() - offset;

    let mut triplets: Vec<(usize, usize, R)> = Vec::new();
    let mut rhs = vec![R::zero(); n_trace];
    // trace-trace block of the original matrix
    for i in offset..space.n_dofs() {
        for (j, v) in system.matrix.row(i) {
            if j >= offset {
                triplets.push((i - offset, j - offset, v));
            }
        }
        rhs[i - offset] = system.rhs[i];
    }

    let mut recovery = Vec::with_capacity(mesh.n_cells());
    for c in 0..mesh.n_cells() {
        let edges = mesh.cell_edge_ids(c);
        let ne = edges.len() * de;
        let mut edge_dofs = Vec::with_capacity(ne);
        for &e in edges {
            for l in 0..de {
                edge_dofs.push(space.trace_dof(e, l) - offset);
            }
        }
        let mut k_ii = DMat::zeros(dc, dc);
        let mut k_ie = DMat::zeros(dc, ne);
        let mut b_i = vec![R::zero(); dc];
        for li in 0..dc {
            let gi = space.interior_dof(c, li);
            b_i[li] = system.rhs[gi];
            for (j, v) in system.matrix.row(gi) {
                if j >= offset {
                    let pos = edge_dofs
                        .iter()
                        .position(|&d| d == j - offset)
                        .expect("interior row touches a foreign trace dof");
                    k_ie.add_to(li, pos, v);
                } else {
                    debug_assert!(j >= c * dc && j < (c + 1) * dc);
                    k_ii.add_to(li, j - c * dc, v);
                }
            }
        }
        let chol = Cholesky::new(&k_ii).ok_or(WgError::SingularInteriorBlock { cell: c })?;
        let w = chol.solve_mat(&k_ie);
        let solved_rhs = chol.solve_vec(&b_i);
        // Schur: K_EE -= K_IE^T W, b_E -= K_IE^T (K_II^{-1} b_I)
        let s = k_ie.tr_mul(&w);
        for a in 0..ne {
            for b in 0..ne {
                let v = s.get(a, b);
                if v != R::zero() {
                    triplets.push((edge_dofs[a], edge_dofs[b], -v));
                }
            }
            let mut dot = R::zero();
            for li in 0..dc {
                dot += k_ie.get(li, a) * solved_rhs[li];
            }
            rhs[edge_dofs[a]] -= dot;
        }
        recovery.push(CellRecovery { w, solved_rhs, edge_dofs });
    }

    let constraints: Vec<(usize, R)> = system
        .constraints
        .iter()
        .map(|&(d, v)| (d - offset, v))
        .collect();
    Ok(CondensedSystem {
        system: SparseSystem {
            matrix: Csr::from_triplets(n_trace, triplets),
            rhs,
            constraints,
        },
        recovery,
        trace_offset: offset,
    })
}

impl<R: Real> CondensedSystem<R> {
    /// Expands a condensed (trace-only) solution to the full coefficient
    /// vector by per-cell back-substitution.
    pub fn recover(&self, space: &WgSpace<R>, trace: &[R]) -> Vec<R> {
        let mut full = vec![R::zero(); space.n_dofs()];
        full[self.trace_offset..].copy_from_slice(trace);
        let dc = space.dim_cell_basis();
        for (c, rec) in self.recovery.iter().enumerate() {
            let u_e: Vec<R> = rec.edge_dofs.iter().map(|&d| trace[d]).collect();
            let coupled = rec.w.mul_vec(&u_e);
            for li in 0..dc {
                full[space.interior_dof(c, li)] = rec.solved_rhs[li] - coupled[li];
            }
        }
        full
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::PolygonalMesh;
    use crate::space::WgSpace;
    use std::sync::Arc;

    type Mesh = PolygonalMesh<f64>;

    fn poisson_setup(
        n: usize,
        k: usize,
    ) -> (Arc<WgSpace<f64>>, WeakGradients<f64>, Coefficient<f64>) {
        let space = WgSpace::new(Mesh::unit_square_grid(n), k);
        let wg = WeakGradients::build(&space).unwrap();
        (space, wg, Coefficient::identity())
    }

    fn case1_f(p: crate::geom::Point2<f64>) -> f64 {
        let pi = std::f64::consts::PI;
        2.0 * pi * pi * (pi * p.x).sin() * (pi * p.y).sin()
    }

    #[test]
    fn dof_counts_on_case1_grid() {
        let (space, wg, a) = poisson_setup(4, 1);
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
        assert_eq!(sys.n_dofs(), 128);
        assert_eq!(sys.constraints.len(), 32);
        assert_eq!(sys.n_unknowns(), 96);
    }

    #[test]
    fn matrix_is_symmetric() {
        let (space, wg, a) = poisson_setup(3, 2);
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
        let scale = sys.matrix.max_abs();
        for i in 0..sys.n_dofs() {
            for (j, v) in sys.matrix.row(i) {
                assert!(
                    (v - sys.matrix.get(j, i)).abs() <= 1e-12 * scale,
                    "K[{i}][{j}] asymmetric"
                );
            }
        }
    }

    #[test]
    fn floating_matrix_annihilates_constants() {
        let (space, wg, a) = poisson_setup(3, 1);
        let sys = assemble(&space, &wg, &a, &|_| 0.0, Boundary::Floating, 1.0, None).unwrap();
        let ones = WeakFunction::constant(&space, 1.0);
        let y = sys.matrix.matvec(ones.coeffs());
        let scale = sys.matrix.max_abs();
        let worst = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst <= 1e-12 * scale, "kernel violation {worst}");
    }

    #[test]
    fn interior_rows_touch_only_own_cell() {
        let (space, wg, a) = poisson_setup(4, 1);
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
        for c in 0..space.mesh().n_cells() {
            let allowed: std::collections::HashSet<usize> =
                space.local_dof_indices(c).into_iter().collect();
            for li in 0..space.dim_cell_basis() {
                let gi = space.interior_dof(c, li);
                for (j, _) in sys.matrix.row(gi) {
                    assert!(allowed.contains(&j), "interior dof {gi} couples to {j}");
                }
            }
        }
    }

    #[test]
    fn assembly_is_bitwise_deterministic() {
        let (space, wg, a) = poisson_setup(4, 1);
        let mk = || {
            assemble(
                &space,
                &wg,
                &a,
                &case1_f,
                Boundary::Dirichlet(&|_| 0.0),
                1.0,
                None,
            )
            .unwrap()
        };
        let s1 = mk();
        let s2 = mk();
        assert_eq!(s1.matrix.nnz(), s2.matrix.nnz());
        for i in 0..s1.n_dofs() {
            let r1: Vec<(usize, u64)> = s1.matrix.row(i).map(|(j, v)| (j, v.to_bits())).collect();
            let r2: Vec<(usize, u64)> = s2.matrix.row(i).map(|(j, v)| (j, v.to_bits())).collect();
            assert_eq!(r1, r2, "row {i}");
        }
        for (a, b) in s1.rhs.iter().zip(&s2.rhs) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn homogeneous_boundary_constraints_are_zero() {
        // g = trace of x(1-x)y(1-y), which vanishes on the unit square boundary
        let (space, wg, a) = poisson_setup(4, 1);
        let g = |p: crate::geom::Point2<f64>| p.x * (1.0 - p.x) * p.y * (1.0 - p.y);
        let sys = assemble(&space, &wg, &a, &|_| 1.0, Boundary::Dirichlet(&g), 1.0, None).unwrap();
        for &(_, v) in &sys.constraints {
            assert!(v.abs() <= 1e-14, "constraint value {v}");
        }
    }

    #[test]
    fn invalid_arguments_are_rejected() {
        let (space, wg, a) = poisson_setup(2, 1);
        assert!(matches!(
            assemble(&space, &wg, &a, &|_| 0.0, Boundary::Floating, 0.0, None),
            Err(WgError::InvalidArgument(_))
        ));
        let nonlinear = Coefficient::new(
            |_, eta, _| crate::geom::SymMat2::isotropic(1.0 + eta * eta),
            1.0,
            2.0,
            true,
        );
        assert!(matches!(
            assemble(&space, &wg, &nonlinear, &|_| 0.0, Boundary::Floating, 1.0, None),
            Err(WgError::InvalidArgument(_))
        ));
    }

    #[test]
    fn condensation_counts() {
        let (space, wg, a) = poisson_setup(8, 1);
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
        let cond = condense(&sys, &space).unwrap();
        let n_edges = space.mesh().n_edges();
        assert_eq!(cond.system.n_dofs(), n_edges * 2);
        assert_eq!(cond.system.n_unknowns(), n_edges * 2 - 32 * 2);
        assert!(cond.system.n_dofs() < sys.n_dofs());
    }

    #[test]
    fn single_cell_condensation_is_all_constrained() {
        let (space, wg, a) = poisson_setup(1, 1);
        let sys = assemble(
            &space,
            &wg,
            &a,
            &|_| 1.0,
            Boundary::Dirichlet(&|p| p.x + 2.0 * p.y),
            1.0,
            None,
        )
        .unwrap();
        let cond = condense(&sys, &space).unwrap();
        assert_eq!(cond.system.n_unknowns(), 0);
        // the condensed solve is trivial; interior values come from the
        // local block alone
        let trace: Vec<f64> = {
            let mut t = vec![0.0; cond.system.n_dofs()];
            for &(d, v) in &cond.system.constraints {
                t[d] = v;
            }
            t
        };
        let full = cond.recover(&space, &trace);
        // residual of the full system on interior rows must vanish
        let y = sys.matrix.matvec(&full);
        for li in 0..space.dim_cell_basis() {
            let gi = space.interior_dof(0, li);
            assert!((y[gi] - sys.rhs[gi]).abs() < 1e-12);
        }
    }

    #[test]
    fn matrix_market_export_shape() {
        let (space, wg, a) = poisson_setup(2, 1);
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
        let mut buf = Vec::new();
        sys.write_matrix_market(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "%%MatrixMarket matrix coordinate real symmetric"
        );
        let dims: Vec<usize> = lines
            .next()
            .unwrap()
            .split_whitespace()
            .map(|t| t.parse().unwrap())
            .collect();
        assert_eq!(dims[0], sys.n_dofs());
        assert_eq!(text.lines().count(), 2 + dims[2]);
    }
}
