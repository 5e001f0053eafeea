//! The weak Galerkin space: degree-`k` polynomials inside each cell plus
//! independent degree-`k` traces on each edge, with the projections onto its
//! pieces.
//!
//! Cell bases are monomials centered at the cell centroid and scaled by the
//! cell diameter, ordered by graded-lex multi-index; edge bases are powers of
//! the arclength fraction measured from the edge midpoint, `s` in
//! `[-1/2, 1/2]`. Both choices keep the local mass matrices conditioned
//! independently of the mesh size.

use std::sync::Arc;

use crate::dense::{Cholesky, DMat};
use crate::error::{Result, WgError};
use crate::geom::{Point2, SymMat2, Vec2};
use crate::mesh::PolygonalMesh;
use crate::quadrature::{self, QuadRule};
use crate::real::{real, Real};

/// Graded-lex exponents of the 2D monomials of total degree <= `deg`:
/// `(0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...`
pub fn monomial_exponents(deg: usize) -> Vec<(u32, u32)> {
    let mut out = Vec::with_capacity((deg + 1) * (deg + 2) / 2);
    for d in 0..=deg as u32 {
        for i in (0..=d).rev() {
            out.push((i, d - i));
        }
    }
    out
}

/// Values and first derivatives of scaled monomials at a set of points.
pub struct BasisTable<R: Real> {
    pub values: DMat<R>,
    pub dx: DMat<R>,
    pub dy: DMat<R>,
}

/// Evaluates `((x - cx)/h)^i ((y - cy)/h)^j` for all exponents of degree
/// <= `deg` at the given points, together with the Cartesian gradients.
pub fn eval_scaled_monomials<R: Real>(
    center: Point2<R>,
    h: R,
    deg: usize,
    pts: &[Point2<R>],
) -> BasisTable<R> {
    let exps = monomial_exponents(deg);
    let nb = exps.len();
    let np = pts.len();
    let mut values = DMat::zeros(np, nb);
    let mut dx = DMat::zeros(np, nb);
    let mut dy = DMat::zeros(np, nb);
    let inv_h = R::one() / h;
    let mut px = vec![R::one(); deg + 1];
    let mut py = vec![R::one(); deg + 1];
    for (p, pt) in pts.iter().enumerate() {
        let xi = (pt.x - center.x) * inv_h;
        let eta = (pt.y - center.y) * inv_h;
        for d in 1..=deg {
            px[d] = px[d - 1] * xi;
            py[d] = py[d - 1] * eta;
        }
        for (b, &(i, j)) in exps.iter().enumerate() {
            let (i, j) = (i as usize, j as usize);
            values.set(p, b, px[i] * py[j]);
            if i > 0 {
                dx.set(p, b, real::<R>(i as f64) * inv_h * px[i - 1] * py[j]);
            }
            if j > 0 {
                dy.set(p, b, real::<R>(j as f64) * inv_h * px[i] * py[j - 1]);
            }
        }
    }
    BasisTable { values, dx, dy }
}

/// Gram matrix `V^T diag(w) V` of basis values under quadrature weights.
pub fn weighted_gram<R: Real>(vals: &DMat<R>, weights: &[R]) -> DMat<R> {
    let np = vals.rows();
    let nb = vals.cols();
    assert_eq!(np, weights.len());
    let mut out = DMat::zeros(nb, nb);
    for p in 0..np {
        let w = weights[p];
        let row = vals.row(p);
        for i in 0..nb {
            let wi = w * row[i];
            for j in i..nb {
                out.add_to(i, j, wi * row[j]);
            }
        }
    }
    for i in 0..nb {
        for j in 0..i {
            let v = out.get(j, i);
            out.set(i, j, v);
        }
    }
    out
}

/// Degrees of freedom of the weak Galerkin space of order `k`: per cell the
/// coefficients of `v0` in `P_k`, then per edge the coefficients of `vb` in
/// `P_k(e)`. Trace coefficients are shared by the cells meeting at the edge;
/// interior coefficients never are.
pub struct WgSpace<R: Real> {
    mesh: Arc<PolygonalMesh<R>>,
    k: usize,
    dim_cell: usize,
    dim_grad: usize,
    dim_edge: usize,
    trace_offset: usize,
    n_dofs: usize,
    exactness: usize,
}

impl<R: Real> WgSpace<R> {
    /// `k >= 1`. Quadrature throughout uses exactness `2k + 2`, which keeps
    /// every scheme integral with polynomial data exact, including quadratic
    /// coefficients such as `a = xy`.
    pub fn new(mesh: PolygonalMesh<R>, k: usize) -> Arc<Self> {
        assert!(k >= 1, "the weak Galerkin space needs k >= 1");
        let dim_cell = (k + 1) * (k + 2) / 2;
        let dim_grad = k * (k + 1) / 2;
        let dim_edge = k + 1;
        let trace_offset = mesh.n_cells() * dim_cell;
        let n_dofs = trace_offset + mesh.n_edges() * dim_edge;
        Arc::new(Self {
            mesh: Arc::new(mesh),
            k,
            dim_cell,
            dim_grad,
            dim_edge,
            trace_offset,
            n_dofs,
            exactness: 2 * k + 2,
        })
    }

    pub fn mesh(&self) -> &PolygonalMesh<R> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn dim_cell_basis(&self) -> usize {
        self.dim_cell
    }

    /// Scalar dimension of the gradient space `P_{k-1}`.
    pub fn dim_grad_basis(&self) -> usize {
        self.dim_grad
    }

    pub fn dim_edge_basis(&self) -> usize {
        self.dim_edge
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn trace_offset(&self) -> usize {
        self.trace_offset
    }

    pub fn quad_exactness(&self) -> usize {
        self.exactness
    }

    /// Exactness used by the projection operators. Scheme integrals only
    /// need `2k + 2`, but projections are contracted to be orthogonal
    /// against accurate integration even for non-polynomial fields on
    /// unit-sized cells, which takes a stronger rule.
    pub fn projection_exactness(&self) -> usize {
        self.exactness.max(16)
    }

    pub fn interior_dof(&self, cell: usize, local: usize) -> usize {
        debug_assert!(local < self.dim_cell);
        cell * self.dim_cell + local
    }

    pub fn trace_dof(&self, edge: usize, local: usize) -> usize {
        debug_assert!(local < self.dim_edge);
        self.trace_offset + edge * self.dim_edge + local
    }

    /// Global indices of the cell's local system: interior coefficients, then
    /// the trace coefficients of its boundary segments in loop order.
    pub fn local_dof_indices(&self, cell: usize) -> Vec<usize> {
        let edges = self.mesh.cell_edge_ids(cell);
        let mut out = Vec::with_capacity(self.dim_cell + edges.len() * self.dim_edge);
        for l in 0..self.dim_cell {
            out.push(self.interior_dof(cell, l));
        }
        for &e in edges {
            for l in 0..self.dim_edge {
                out.push(self.trace_dof(e, l));
            }
        }
        out
    }

    /// Global indices of trace coefficients on boundary edges.
    pub fn boundary_trace_dofs(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for e in self.mesh.boundary_edge_ids() {
            for l in 0..self.dim_edge {
                out.push(self.trace_dof(e, l));
            }
        }
        out
    }

    /// Fan quadrature rule on a cell at the space's default exactness.
    pub fn cell_rule(&self, cell: usize) -> Result<QuadRule<R>> {
        self.cell_rule_with(cell, self.exactness)
    }

    pub fn cell_rule_with(&self, cell: usize, exactness: usize) -> Result<QuadRule<R>> {
        quadrature::polygon_rule_from(
            &self.mesh.cell_points(cell),
            self.mesh.cell_geom(cell).centroid,
            exactness,
            cell,
        )
    }

    pub fn edge_quad(&self, edge: usize) -> QuadRule<R> {
        self.edge_quad_with(edge, self.exactness)
    }

    pub fn edge_quad_with(&self, edge: usize, exactness: usize) -> QuadRule<R> {
        let (p0, p1) = self.mesh.edge_endpoints(edge);
        quadrature::edge_rule(p0, p1, exactness)
    }

    /// Cell basis (degree `k`) at the given points.
    pub fn cell_basis(&self, cell: usize, pts: &[Point2<R>]) -> BasisTable<R> {
        let g = self.mesh.cell_geom(cell);
        eval_scaled_monomials(g.centroid, g.diameter, self.k, pts)
    }

    /// Scalar gradient-space basis (degree `k - 1`) at the given points. The
    /// graded-lex ordering makes it the leading block of the cell basis.
    pub fn grad_basis(&self, cell: usize, pts: &[Point2<R>]) -> BasisTable<R> {
        let g = self.mesh.cell_geom(cell);
        eval_scaled_monomials(g.centroid, g.diameter, self.k - 1, pts)
    }

    /// Edge basis values `s^j` at the given on-edge points.
    pub fn edge_basis(&self, edge: usize, pts: &[Point2<R>]) -> DMat<R> {
        let geom = self.mesh.edge_geom(edge);
        let mut out = DMat::zeros(pts.len(), self.dim_edge);
        for (p, pt) in pts.iter().enumerate() {
            let s = (*pt - geom.midpoint).dot(geom.tangent) / geom.length;
            let mut pow = R::one();
            for j in 0..self.dim_edge {
                out.set(p, j, pow);
                pow *= s;
            }
        }
        out
    }

    /// L2 projection of a scalar field onto `P_k` of one cell.
    pub fn project_cell(&self, cell: usize, f: impl Fn(Point2<R>) -> R) -> Result<Vec<R>> {
        self.project_cell_with(cell, f, self.projection_exactness())
    }

    pub fn project_cell_with(
        &self,
        cell: usize,
        f: impl Fn(Point2<R>) -> R,
        exactness: usize,
    ) -> Result<Vec<R>> {
        let rule = self.cell_rule_with(cell, exactness)?;
        let basis = self.cell_basis(cell, &rule.points);
        let mass = weighted_gram(&basis.values, &rule.weights);
        let chol =
            Cholesky::new(&mass).ok_or(WgError::SingularMassMatrix { cell })?;
        let mut rhs = vec![R::zero(); self.dim_cell];
        for (p, pt) in rule.points.iter().enumerate() {
            let w = rule.weights[p] * f(*pt);
            for b in 0..self.dim_cell {
                rhs[b] += w * basis.values.get(p, b);
            }
        }
        chol.solve_in_place(&mut rhs);
        Ok(rhs)
    }

    /// L2 projection of a scalar field onto `P_k` of one edge.
    pub fn project_edge(&self, edge: usize, g: impl Fn(Point2<R>) -> R) -> Result<Vec<R>> {
        self.project_edge_with(edge, g, self.projection_exactness())
    }

    pub fn project_edge_with(
        &self,
        edge: usize,
        g: impl Fn(Point2<R>) -> R,
        exactness: usize,
    ) -> Result<Vec<R>> {
        let rule = self.edge_quad_with(edge, exactness);
        let basis = self.edge_basis(edge, &rule.points);
        let mass = weighted_gram(&basis, &rule.weights);
        let chol = Cholesky::new(&mass).ok_or(WgError::SingularMassMatrix {
            cell: self.mesh.edge(edge).left,
        })?;
        let mut rhs = vec![R::zero(); self.dim_edge];
        for (p, pt) in rule.points.iter().enumerate() {
            let w = rule.weights[p] * g(*pt);
            for b in 0..self.dim_edge {
                rhs[b] += w * basis.get(p, b);
            }
        }
        chol.solve_in_place(&mut rhs);
        Ok(rhs)
    }

    /// Componentwise L2 projection of a vector field onto the gradient space
    /// `[P_{k-1}]^2` of one cell. Coefficients are returned x-block first.
    pub fn project_gradient(
        &self,
        cell: usize,
        w: impl Fn(Point2<R>) -> Vec2<R>,
    ) -> Result<Vec<R>> {
        self.project_gradient_with(cell, w, self.projection_exactness())
    }

    pub fn project_gradient_with(
        &self,
        cell: usize,
        w: impl Fn(Point2<R>) -> Vec2<R>,
        exactness: usize,
    ) -> Result<Vec<R>> {
        let rule = self.cell_rule_with(cell, exactness)?;
        let basis = self.grad_basis(cell, &rule.points);
        let mass = weighted_gram(&basis.values, &rule.weights);
        let chol =
            Cholesky::new(&mass).ok_or(WgError::SingularMassMatrix { cell })?;
        let m = self.dim_grad;
        let mut bx = vec![R::zero(); m];
        let mut by = vec![R::zero(); m];
        for (p, pt) in rule.points.iter().enumerate() {
            let v = w(*pt);
            let wq = rule.weights[p];
            for b in 0..m {
                let phi = basis.values.get(p, b);
                bx[b] += wq * v.x * phi;
                by[b] += wq * v.y * phi;
            }
        }
        chol.solve_in_place(&mut bx);
        chol.solve_in_place(&mut by);
        bx.extend(by);
        Ok(bx)
    }

    /// Projects a smooth field into the weak space: cell projections for the
    /// interior component, edge projections for the trace component.
    pub fn project_weak(self: &Arc<Self>, u: impl Fn(Point2<R>) -> R) -> Result<WeakFunction<R>> {
        let mut wf = WeakFunction::zero(self);
        for c in 0..self.mesh.n_cells() {
            let coeffs = self.project_cell(c, &u)?;
            wf.coeffs_mut()[self.interior_dof(c, 0)..self.interior_dof(c, 0) + self.dim_cell]
                .copy_from_slice(&coeffs);
        }
        for e in 0..self.mesh.n_edges() {
            let coeffs = self.project_edge(e, &u)?;
            let base = self.trace_dof(e, 0);
            wf.coeffs_mut()[base..base + self.dim_edge].copy_from_slice(&coeffs);
        }
        Ok(wf)
    }
}

/// A member of the weak space: one coefficient per global degree of freedom.
/// The interior and trace components are independent; nothing ties `vb` to
/// the boundary values of `v0`.
#[derive(Clone)]
pub struct WeakFunction<R: Real> {
    space: Arc<WgSpace<R>>,
    coeffs: Vec<R>,
}

impl<R: Real> WeakFunction<R> {
    pub fn zero(space: &Arc<WgSpace<R>>) -> Self {
        Self { space: space.clone(), coeffs: vec![R::zero(); space.n_dofs()] }
    }

    pub fn from_coeffs(space: &Arc<WgSpace<R>>, coeffs: Vec<R>) -> Self {
        assert_eq!(coeffs.len(), space.n_dofs());
        Self { space: space.clone(), coeffs }
    }

    /// The constant weak function `{c, c}`.
    pub fn constant(space: &Arc<WgSpace<R>>, c: R) -> Self {
        let mut wf = Self::zero(space);
        for cell in 0..space.mesh().n_cells() {
            wf.coeffs[space.interior_dof(cell, 0)] = c;
        }
        for e in 0..space.mesh().n_edges() {
            wf.coeffs[space.trace_dof(e, 0)] = c;
        }
        wf
    }

    pub fn space(&self) -> &Arc<WgSpace<R>> {
        &self.space
    }

    pub fn coeffs(&self) -> &[R] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [R] {
        &mut self.coeffs
    }

    /// Interior value `v0` at points inside a cell.
    pub fn eval_interior(&self, cell: usize, pts: &[Point2<R>]) -> Vec<R> {
        let basis = self.space.cell_basis(cell, pts);
        let base = self.space.interior_dof(cell, 0);
        let local = &self.coeffs[base..base + self.space.dim_cell_basis()];
        basis.values.mul_vec(local)
    }

    /// Trace value `vb` at points on an edge.
    pub fn eval_trace(&self, edge: usize, pts: &[Point2<R>]) -> Vec<R> {
        let basis = self.space.edge_basis(edge, pts);
        let base = self.space.trace_dof(edge, 0);
        let local = &self.coeffs[base..base + self.space.dim_edge_basis()];
        basis.mul_vec(local)
    }

    /// Gathers the cell-local coefficient vector (interior + incident traces).
    pub fn local_values(&self, cell: usize) -> Vec<R> {
        self.space
            .local_dof_indices(cell)
            .iter()
            .map(|&g| self.coeffs[g])
            .collect()
    }

    pub fn max_abs(&self) -> R {
        self.coeffs.iter().fold(R::zero(), |m, v| m.max(v.abs()))
    }

    /// `self - other`, for error and increment measurements.
    pub fn sub(&self, other: &Self) -> Self {
        assert!(Arc::ptr_eq(&self.space, &other.space));
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| a - b)
            .collect();
        Self { space: self.space.clone(), coeffs }
    }

    /// CSV export: `dof_id,kind,owner,local,value` with kind `cell` or `edge`.
    pub fn write_csv(&self, w: &mut impl std::io::Write) -> Result<()> {
        writeln!(w, "dof_id,kind,owner,local,value")?;
        let s = &self.space;
        for (i, &v) in self.coeffs.iter().enumerate() {
            if i < s.trace_offset() {
                let owner = i / s.dim_cell_basis();
                let local = i % s.dim_cell_basis();
                writeln!(w, "{i},cell,{owner},{local},{:.16e}", v.to_f64_lossy())?;
            } else {
                let j = i - s.trace_offset();
                let owner = j / s.dim_edge_basis();
                let local = j % s.dim_edge_basis();
                writeln!(w, "{i},edge,{owner},{local},{:.16e}", v.to_f64_lossy())?;
            }
        }
        Ok(())
    }
}

/// The diffusion coefficient `a(x, eta, p)`: a symmetric 2x2 matrix field,
/// possibly depending on the solution value `eta` and its weak gradient `p`.
pub struct Coefficient<R: Real> {
    eval: Box<dyn Fn(Point2<R>, R, Vec2<R>) -> SymMat2<R> + Send + Sync>,
    /// Lower ellipticity bound; may be zero for degenerate problems.
    pub lambda: R,
    /// Upper bound on the matrix entries.
    pub upper: R,
    depends_on_solution: bool,
}

impl<R: Real> Coefficient<R> {
    pub fn new(
        eval: impl Fn(Point2<R>, R, Vec2<R>) -> SymMat2<R> + Send + Sync + 'static,
        lambda: R,
        upper: R,
        depends_on_solution: bool,
    ) -> Self {
        Self { eval: Box::new(eval), lambda, upper, depends_on_solution }
    }

    pub fn identity() -> Self {
        Self::new(|_, _, _| SymMat2::identity(), R::one(), R::one(), false)
    }

    /// `a(x) I` for a scalar field independent of the solution.
    pub fn isotropic(
        a: impl Fn(Point2<R>) -> R + Send + Sync + 'static,
        lambda: R,
        upper: R,
    ) -> Self {
        Self::new(move |x, _, _| SymMat2::isotropic(a(x)), lambda, upper, false)
    }

    pub fn eval(&self, x: Point2<R>, eta: R, p: Vec2<R>) -> SymMat2<R> {
        (self.eval)(x, eta, p)
    }

    pub fn depends_on_solution(&self) -> bool {
        self.depends_on_solution
    }
}
