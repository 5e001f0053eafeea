//! Polygonal meshes: construction, generators, barycentric refinement,
//! hanging-node segmentation, regularity diagnostics and a text format.
//!
//! A mesh is a list of vertices plus CCW vertex loops. Edges are derived:
//! every maximal boundary segment of a cell becomes an edge record carrying
//! the one or two incident cells. Meshes are immutable once built; all the
//! operations below are pure functions returning new meshes.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Result, WgError};
use crate::geom::{
    polygon_area, polygon_centroid, polygon_diameter, segments_cross, Point2, Vec2,
};
use crate::real::{real, Real};

/// An edge of the mesh. `left` traverses `v.0 -> v.1` in its CCW loop; the
/// stored outward normal belongs to `left`, the right cell negates it.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub v: (usize, usize),
    pub left: usize,
    pub right: Option<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }

    pub fn cells(&self) -> impl Iterator<Item = usize> {
        std::iter::once(self.left).chain(self.right)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CellGeom<R: Real> {
    pub area: R,
    /// Maximum pairwise vertex distance of the cell.
    pub diameter: R,
    pub centroid: Point2<R>,
}

#[derive(Debug, Clone, Copy)]
pub struct EdgeGeom<R: Real> {
    pub length: R,
    pub midpoint: Point2<R>,
    /// Unit normal oriented outward from the left cell.
    pub normal: Vec2<R>,
    /// Unit tangent from `v.0` to `v.1`; fixes the trace parameterization.
    pub tangent: Vec2<R>,
}

/// Shape-regularity diagnostics: minima of `|T| / h_T^2`, `|e| / h_e` and
/// `h_e / h_T` over the mesh. Purely informative; nothing blocks on them.
#[derive(Debug, Clone, Copy)]
pub struct RegularityReport<R: Real> {
    pub rho_v: R,
    pub rho_e: R,
    pub kappa: R,
}

#[derive(Debug, Clone)]
pub struct PolygonalMesh<R: Real> {
    vertices: Vec<Point2<R>>,
    cells: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    /// Edge ids per cell, aligned with the loop segments of `cells[c]`.
    cell_edges: Vec<Vec<usize>>,
    cell_geom: Vec<CellGeom<R>>,
    edge_geom: Vec<EdgeGeom<R>>,
}

impl<R: Real> PolygonalMesh<R> {
    /// Builds a mesh from raw vertex coordinates and CCW cell loops.
    ///
    /// Loop segments without a partner are recorded as boundary edges; a
    /// nonconforming mesh (hanging vertices) therefore constructs fine and is
    /// fixed up by [`PolygonalMesh::segment_hanging_edges`].
    pub fn from_cells(vertices: Vec<Point2<R>>, cells: Vec<Vec<usize>>) -> Result<Self> {
        if cells.is_empty() {
            return Err(WgError::InvalidMesh("mesh has no cells".into()));
        }
        let nv = vertices.len();
        for (c, cell) in cells.iter().enumerate() {
            if cell.len() < 3 {
                return Err(WgError::InvalidMesh(format!(
                    "cell {c} has fewer than 3 vertices"
                )));
            }
            for &i in cell {
                if i >= nv {
                    return Err(WgError::InvalidMesh(format!(
                        "cell {c} references missing vertex {i}"
                    )));
                }
            }
            let mut sorted = cell.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(WgError::InvalidMesh(format!(
                    "cell {c} repeats a vertex"
                )));
            }
            let pts: Vec<Point2<R>> = cell.iter().map(|&i| vertices[i]).collect();
            if !(polygon_area(&pts) > R::zero()) {
                return Err(WgError::InvalidMesh(format!(
                    "cell {c} is not a counter-clockwise polygon with positive area"
                )));
            }
            // simplicity: no two non-adjacent segments of the loop may cross
            let m = cell.len();
            for i in 0..m {
                for j in (i + 1)..m {
                    if j == i + 1 || (i == 0 && j == m - 1) {
                        continue;
                    }
                    if segments_cross(pts[i], pts[(i + 1) % m], pts[j], pts[(j + 1) % m]) {
                        return Err(WgError::InvalidMesh(format!(
                            "cell {c} is self-intersecting"
                        )));
                    }
                }
            }
        }

        let mut edges: Vec<Edge> = Vec::new();
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut cell_edges: Vec<Vec<usize>> = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let m = cell.len();
            let mut ids = Vec::with_capacity(m);
            for s in 0..m {
                let a = cell[s];
                let b = cell[(s + 1) % m];
                let key = (a.min(b), a.max(b));
                match lookup.get(&key) {
                    None => {
                        lookup.insert(key, edges.len());
                        ids.push(edges.len());
                        edges.push(Edge { v: (a, b), left: c, right: None });
                    }
                    Some(&e) => {
                        if edges[e].right.is_some() {
                            return Err(WgError::InvalidMesh(format!(
                                "edge {}-{} is shared by more than two cells",
                                key.0, key.1
                            )));
                        }
                        if edges[e].v != (b, a) {
                            return Err(WgError::InvalidMesh(format!(
                                "edge {}-{} is traversed twice in the same direction \
                                 (inconsistent cell orientation)",
                                key.0, key.1
                            )));
                        }
                        edges[e].right = Some(c);
                        ids.push(e);
                    }
                }
            }
            cell_edges.push(ids);
        }

        let cell_geom: Vec<CellGeom<R>> = cells
            .iter()
            .map(|cell| {
                let pts: Vec<Point2<R>> = cell.iter().map(|&i| vertices[i]).collect();
                CellGeom {
                    area: polygon_area(&pts),
                    diameter: polygon_diameter(&pts),
                    centroid: polygon_centroid(&pts),
                }
            })
            .collect();
        let mut edge_geom = Vec::with_capacity(edges.len());
        for (idx, e) in edges.iter().enumerate() {
            let p0 = vertices[e.v.0];
            let p1 = vertices[e.v.1];
            let length = (p1 - p0).norm();
            if !(length > R::zero()) {
                return Err(WgError::InvalidMesh(format!(
                    "edge {idx} has zero length"
                )));
            }
            let tangent = (p1 - p0).scale(R::one() / length);
            edge_geom.push(EdgeGeom {
                length,
                midpoint: p0.midpoint(p1),
                normal: tangent.rot_cw(),
                tangent,
            });
        }

        Ok(Self { vertices, cells, edges, cell_edges, cell_geom, edge_geom })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex(&self, i: usize) -> Point2<R> {
        self.vertices[i]
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c]
    }

    pub fn cell_points(&self, c: usize) -> Vec<Point2<R>> {
        self.cells[c].iter().map(|&i| self.vertices[i]).collect()
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn cell_edge_ids(&self, c: usize) -> &[usize] {
        &self.cell_edges[c]
    }

    pub fn cell_geom(&self, c: usize) -> &CellGeom<R> {
        &self.cell_geom[c]
    }

    pub fn edge_geom(&self, e: usize) -> &EdgeGeom<R> {
        &self.edge_geom[e]
    }

    pub fn edge_endpoints(&self, e: usize) -> (Point2<R>, Point2<R>) {
        (self.vertices[self.edges[e].v.0], self.vertices[self.edges[e].v.1])
    }

    /// Outward unit normal of edge `e` as seen from cell `c`.
    pub fn outward_normal(&self, c: usize, e: usize) -> Vec2<R> {
        let n = self.edge_geom[e].normal;
        if self.edges[e].left == c {
            n
        } else {
            debug_assert_eq!(self.edges[e].right, Some(c));
            n.scale(-R::one())
        }
    }

    pub fn boundary_edge_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.is_boundary())
            .map(|(i, _)| i)
    }

    pub fn total_area(&self) -> R {
        self.cell_geom.iter().fold(R::zero(), |a, g| a + g.area)
    }

    /// Largest cell diameter.
    pub fn h_max(&self) -> R {
        self.cell_geom
            .iter()
            .fold(R::zero(), |m, g| m.max(g.diameter))
    }

    pub fn regularity_report(&self) -> RegularityReport<R> {
        let mut rho_v = R::infinity();
        let mut kappa = R::infinity();
        for (c, g) in self.cell_geom.iter().enumerate() {
            rho_v = rho_v.min(g.area / (g.diameter * g.diameter));
            for &e in &self.cell_edges[c] {
                kappa = kappa.min(self.edge_geom[e].length / g.diameter);
            }
        }
        // in 2D the edge measure and the edge diameter coincide
        let rho_e = self
            .edges
            .iter()
            .enumerate()
            .map(|(e, _)| self.edge_geom[e].length / self.edge_geom[e].length)
            .fold(R::infinity(), R::min);
        RegularityReport { rho_v, rho_e, kappa }
    }

    /// Uniform `n x n` partition of the unit square into square cells.
    pub fn unit_square_grid(n: usize) -> Self {
        assert!(n >= 1);
        let nf = real::<R>(n as f64);
        let idx = |i: usize, j: usize| j * (n + 1) + i;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push(Point2::new(real::<R>(i as f64) / nf, real::<R>(j as f64) / nf));
            }
        }
        let mut cells = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                cells.push(vec![idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            }
        }
        Self::from_cells(vertices, cells).expect("uniform grid is always valid")
    }

    /// Uniform triangulation: each grid square is cut by its negative-slope
    /// diagonal into two triangles.
    pub fn unit_square_triangles(n: usize) -> Self {
        assert!(n >= 1);
        let nf = real::<R>(n as f64);
        let idx = |i: usize, j: usize| j * (n + 1) + i;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push(Point2::new(real::<R>(i as f64) / nf, real::<R>(j as f64) / nf));
            }
        }
        let mut cells = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                cells.push(vec![a, b, d]);
                cells.push(vec![b, c, d]);
            }
        }
        Self::from_cells(vertices, cells).expect("uniform triangulation is always valid")
    }

    /// Splits every cell into one quadrilateral per vertex by connecting the
    /// centroid with the edge midpoints. Hanging vertices sitting at an edge
    /// midpoint are reused instead of duplicated, so meshes with hanging
    /// nodes refine into meshes with hanging nodes.
    pub fn refine_barycentric(&self) -> Result<Self> {
        let mut vertices = self.vertices.clone();
        let grid = VertexGrid::build(&self.vertices, self.mean_edge_length());
        let mut midpoint_of: HashMap<(usize, usize), usize> = HashMap::new();
        let mut cells: Vec<Vec<usize>> = Vec::with_capacity(self.cells.len() * 4);
        let snap = real::<R>(1e-9);
        for (c, cell) in self.cells.iter().enumerate() {
            let m = cell.len();
            let centroid_idx = vertices.len();
            vertices.push(self.cell_geom[c].centroid);
            let mut mids = Vec::with_capacity(m);
            for s in 0..m {
                let a = cell[s];
                let b = cell[(s + 1) % m];
                let key = (a.min(b), a.max(b));
                let idx = *midpoint_of.entry(key).or_insert_with(|| {
                    let mid = self.vertices[a].midpoint(self.vertices[b]);
                    let len = self.vertices[a].distance(self.vertices[b]);
                    // a hanging vertex at the midpoint belongs to the cells on
                    // the other side; reuse it to keep the meshes welded
                    match grid.find_near(&self.vertices, mid, snap * len) {
                        Some(v) => v,
                        None => {
                            vertices.push(mid);
                            vertices.len() - 1
                        }
                    }
                });
                mids.push(idx);
            }
            for s in 0..m {
                let prev = mids[(s + m - 1) % m];
                let child = vec![centroid_idx, prev, cell[s], mids[s]];
                let pts: Vec<Point2<R>> = child.iter().map(|&i| vertices[i]).collect();
                if !(polygon_area(&pts) > R::zero()) {
                    return Err(WgError::DegenerateChild { cell: c });
                }
                cells.push(child);
            }
        }
        Self::from_cells(vertices, cells)
    }

    /// Resolves hanging nodes: every vertex lying strictly inside another
    /// cell's edge (within `rel_tol` times the edge length) is inserted into
    /// that cell's loop, so each returned edge is a maximal segment shared
    /// identically by its one or two cells. Conforming meshes pass through
    /// unchanged; nonconformities other than hanging vertices (crossing
    /// edges) are a hard error.
    pub fn segment_hanging_edges(&self, rel_tol: R) -> Result<Self> {
        let grid = VertexGrid::build(&self.vertices, self.mean_edge_length());
        let mut new_cells: Vec<Vec<usize>> = Vec::with_capacity(self.cells.len());
        let mut changed = false;
        for cell in &self.cells {
            let m = cell.len();
            let mut fixed = Vec::with_capacity(m);
            for s in 0..m {
                let a = cell[s];
                let b = cell[(s + 1) % m];
                fixed.push(a);
                let pa = self.vertices[a];
                let pb = self.vertices[b];
                let len = pa.distance(pb);
                let mut on_edge: Vec<(R, usize)> = Vec::new();
                for v in grid.near_segment(&self.vertices, pa, pb, rel_tol * len) {
                    if v == a || v == b {
                        continue;
                    }
                    let d = self.vertices[v] - pa;
                    let t = d.dot(pb - pa) / (len * len);
                    if t > rel_tol && t < R::one() - rel_tol {
                        on_edge.push((t, v));
                    }
                }
                if !on_edge.is_empty() {
                    changed = true;
                    on_edge.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
                    fixed.extend(on_edge.into_iter().map(|(_, v)| v));
                }
            }
            new_cells.push(fixed);
        }
        let out = if changed {
            Self::from_cells(self.vertices.clone(), new_cells)?
        } else {
            self.clone()
        };
        out.check_conforming(rel_tol)?;
        Ok(out)
    }

    /// Verifies that no vertex sits strictly inside an edge and that no two
    /// edges cross.
    fn check_conforming(&self, rel_tol: R) -> Result<()> {
        let grid = VertexGrid::build(&self.vertices, self.mean_edge_length());
        for (idx, e) in self.edges.iter().enumerate() {
            let (pa, pb) = self.edge_endpoints(idx);
            let len = self.edge_geom[idx].length;
            for v in grid.near_segment(&self.vertices, pa, pb, rel_tol * len) {
                if v == e.v.0 || v == e.v.1 {
                    continue;
                }
                let d = self.vertices[v] - pa;
                let t = d.dot(pb - pa) / (len * len);
                if t > rel_tol && t < R::one() - rel_tol {
                    return Err(WgError::InvalidMesh(format!(
                        "vertex {v} still lies inside edge {}-{} after segmentation",
                        e.v.0, e.v.1
                    )));
                }
            }
        }
        // crossing edges, bucketed by midpoint to keep the scan near-linear
        let cell_size = self.max_edge_length();
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let key = |p: Point2<R>| -> (i64, i64) {
            (
                (p.x / cell_size).floor().to_f64_lossy() as i64,
                (p.y / cell_size).floor().to_f64_lossy() as i64,
            )
        };
        for e in 0..self.edges.len() {
            buckets.entry(key(self.edge_geom[e].midpoint)).or_default().push(e);
        }
        for e in 0..self.edges.len() {
            let (pa, pb) = self.edge_endpoints(e);
            let (kx, ky) = key(self.edge_geom[e].midpoint);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    let Some(cands) = buckets.get(&(kx + dx, ky + dy)) else {
                        continue;
                    };
                    for &o in cands {
                        if o <= e {
                            continue;
                        }
                        let eo = &self.edges[o];
                        let ee = &self.edges[e];
                        if eo.v.0 == ee.v.0
                            || eo.v.0 == ee.v.1
                            || eo.v.1 == ee.v.0
                            || eo.v.1 == ee.v.1
                        {
                            continue;
                        }
                        let (qa, qb) = self.edge_endpoints(o);
                        if segments_cross(pa, pb, qa, qb) {
                            return Err(WgError::InvalidMesh(format!(
                                "edges {}-{} and {}-{} cross",
                                ee.v.0, ee.v.1, eo.v.0, eo.v.1
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn mean_edge_length(&self) -> R {
        let sum = self
            .edge_geom
            .iter()
            .fold(R::zero(), |a, g| a + g.length);
        sum / real::<R>(self.edges.len() as f64)
    }

    fn max_edge_length(&self) -> R {
        self.edge_geom
            .iter()
            .fold(R::zero(), |a, g| a.max(g.length))
    }

    /// Writes the line-oriented text format:
    /// `wgmesh 2 <nv> <nc>`, `nv` coordinate lines, `nc` CCW index loops.
    pub fn write(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "wgmesh 2 {} {}", self.vertices.len(), self.cells.len())?;
        for p in &self.vertices {
            writeln!(w, "{:.16e} {:.16e}", p.x.to_f64_lossy(), p.y.to_f64_lossy())?;
        }
        for cell in &self.cells {
            write!(w, "{}", cell.len())?;
            for &i in cell {
                write!(w, " {i}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn write_file(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write(&mut f)
    }

    /// Parses the text format; errors carry the 1-based line number.
    pub fn read(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let mut next_line = || -> Result<(usize, String)> {
            loop {
                match lines.next() {
                    None => {
                        return Err(WgError::MeshFormat {
                            line: 0,
                            message: "unexpected end of file".into(),
                        })
                    }
                    Some((i, line)) => {
                        let line = line.map_err(|e| WgError::Io(e.to_string()))?;
                        if !line.trim().is_empty() {
                            return Ok((i + 1, line));
                        }
                    }
                }
            }
        };
        let (lno, header) = next_line()?;
        let toks: Vec<&str> = header.split_whitespace().collect();
        if toks.len() != 4 || toks[0] != "wgmesh" || toks[1] != "2" {
            return Err(WgError::MeshFormat {
                line: lno,
                message: "expected header `wgmesh 2 <nv> <nc>`".into(),
            });
        }
        let nv: usize = toks[2].parse().map_err(|_| WgError::MeshFormat {
            line: lno,
            message: "vertex count is not an integer".into(),
        })?;
        let nc: usize = toks[3].parse().map_err(|_| WgError::MeshFormat {
            line: lno,
            message: "cell count is not an integer".into(),
        })?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (lno, line) = next_line()?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(WgError::MeshFormat {
                    line: lno,
                    message: format!("expected `x y`, found {} tokens", toks.len()),
                });
            }
            let x: f64 = toks[0].parse().map_err(|_| WgError::MeshFormat {
                line: lno,
                message: "x coordinate is not a number".into(),
            })?;
            let y: f64 = toks[1].parse().map_err(|_| WgError::MeshFormat {
                line: lno,
                message: "y coordinate is not a number".into(),
            })?;
            vertices.push(Point2::new(real::<R>(x), real::<R>(y)));
        }
        let mut cells = Vec::with_capacity(nc);
        for _ in 0..nc {
            let (lno, line) = next_line()?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            let parse = |t: &str| -> Result<usize> {
                t.parse().map_err(|_| WgError::MeshFormat {
                    line: lno,
                    message: format!("`{t}` is not a vertex index"),
                })
            };
            if toks.is_empty() {
                return Err(WgError::MeshFormat { line: lno, message: "empty cell line".into() });
            }
            let m = parse(toks[0])?;
            if toks.len() != m + 1 {
                return Err(WgError::MeshFormat {
                    line: lno,
                    message: format!("cell announces {m} vertices but lists {}", toks.len() - 1),
                });
            }
            let mut cell = Vec::with_capacity(m);
            for t in &toks[1..] {
                cell.push(parse(t)?);
            }
            cells.push(cell);
        }
        Self::from_cells(vertices, cells)
    }

    pub fn read_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read(f)
    }
}

/// Uniform spatial hash over vertices; supports nearest-within-radius and
/// near-segment queries for the hanging-node machinery.
struct VertexGrid<R: Real> {
    cell: R,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl<R: Real> VertexGrid<R> {
    fn build(vertices: &[Point2<R>], cell: R) -> Self {
        let cell = if cell > R::zero() { cell } else { R::one() };
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in vertices.iter().enumerate() {
            buckets
                .entry(Self::key_of(cell, *p))
                .or_default()
                .push(i);
        }
        Self { cell, buckets }
    }

    fn key_of(cell: R, p: Point2<R>) -> (i64, i64) {
        (
            (p.x / cell).floor().to_f64_lossy() as i64,
            (p.y / cell).floor().to_f64_lossy() as i64,
        )
    }

    fn find_near(&self, vertices: &[Point2<R>], p: Point2<R>, tol: R) -> Option<usize> {
        let (kx, ky) = Self::key_of(self.cell, p);
        let mut best: Option<(R, usize)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = self.buckets.get(&(kx + dx, ky + dy)) {
                    for &v in list {
                        let d = vertices[v].distance(p);
                        if d <= tol && best.map_or(true, |(bd, _)| d < bd) {
                            best = Some((d, v));
                        }
                    }
                }
            }
        }
        best.map(|(_, v)| v)
    }

    /// Vertices within `tol` of the segment `a -> b` (by perpendicular
    /// distance, with the projection clamped to the segment).
    fn near_segment(&self, vertices: &[Point2<R>], a: Point2<R>, b: Point2<R>, tol: R) -> Vec<usize> {
        let lo_x = a.x.min(b.x) - tol;
        let hi_x = a.x.max(b.x) + tol;
        let lo_y = a.y.min(b.y) - tol;
        let hi_y = a.y.max(b.y) + tol;
        let (k0x, k0y) = Self::key_of(self.cell, Point2::new(lo_x, lo_y));
        let (k1x, k1y) = Self::key_of(self.cell, Point2::new(hi_x, hi_y));
        let ab = b - a;
        let len2 = ab.dot(ab);
        let mut out = Vec::new();
        for kx in k0x..=k1x {
            for ky in k0y..=k1y {
                let Some(list) = self.buckets.get(&(kx, ky)) else { continue };
                for &v in list {
                    let p = vertices[v];
                    let t = ((p - a).dot(ab) / len2).max(R::zero()).min(R::one());
                    let proj = a + ab.scale(t);
                    if p.distance(proj) <= tol {
                        out.push(v);
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}
