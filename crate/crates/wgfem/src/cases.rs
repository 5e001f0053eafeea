//! The shipped convergence experiments and the end-to-end pipeline behind
//! the command line: mesh family -> hanging-node segmentation -> assembly ->
//! condensed solve -> error norms, flux certificates and fitted rates.
//!
//! Everything here is `f64`-concrete; the experiments are defined by their
//! manufactured solutions and reported against fixed mesh families.

use std::sync::Arc;
use std::time::Instant;

use crate::assembly::{self, Boundary};
use crate::error::{Result, WgError};
use crate::geom::Point2;
use crate::mesh::{PolygonalMesh, RegularityReport};
use crate::postprocess::{self, ErrorTriple, RateTriple};
use crate::solver::{self, SolveConfig, SolveStats};
use crate::space::{Coefficient, WgSpace};
use crate::weak_gradient::WeakGradients;

type Mesh = PolygonalMesh<f64>;
type Scalar2d = Arc<dyn Fn(Point2<f64>) -> f64 + Send + Sync>;

/// A manufactured Dirichlet problem on some polygonal domain.
pub struct Problem {
    pub name: &'static str,
    pub coefficient: Coefficient<f64>,
    pub f: Scalar2d,
    /// Dirichlet data; the trace of the exact solution, so the problem stays
    /// meaningful on arbitrary meshed domains.
    pub g: Scalar2d,
    pub exact: Scalar2d,
}

/// Poisson problem with `u = sin(pi x) sin(pi y)`.
pub fn problem_case1() -> Problem {
    let pi = std::f64::consts::PI;
    let u = move |p: Point2<f64>| (pi * p.x).sin() * (pi * p.y).sin();
    Problem {
        name: "case1",
        coefficient: Coefficient::identity(),
        f: Arc::new(move |p| 2.0 * pi * pi * u(p)),
        g: Arc::new(u),
        exact: Arc::new(u),
    }
}

/// Degenerate diffusion `a = xy` with `u = x(1-x)y(1-y)`; the coefficient
/// vanishes at the origin, so the ellipticity bound is zero.
pub fn problem_case2() -> Problem {
    let u = |p: Point2<f64>| p.x * (1.0 - p.x) * p.y * (1.0 - p.y);
    Problem {
        name: "case2",
        coefficient: Coefficient::isotropic(|p: Point2<f64>| p.x * p.y, 0.0, 1.0),
        f: Arc::new(|p: Point2<f64>| {
            let (x, y) = (p.x, p.y);
            -y * y * (1.0 - y) * (1.0 - 2.0 * x) + 2.0 * x * y * y * (1.0 - y)
                - x * x * (1.0 - x) * (1.0 - 2.0 * y)
                + 2.0 * x * x * y * (1.0 - x)
        }),
        g: Arc::new(u),
        exact: Arc::new(u),
    }
}

pub fn problem_by_name(name: &str) -> Result<Problem> {
    match name {
        "case1" => Ok(problem_case1()),
        "case2" => Ok(problem_case2()),
        other => Err(WgError::InvalidArgument(format!(
            "unknown problem `{other}` (available: case1, case2)"
        ))),
    }
}

/// The five experiment mesh families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseId {
    OneRect,
    OneTri,
    TwoDegenerate,
    ThreeDeformed,
    FourHanging,
}

impl CaseId {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "1-rect" => Ok(Self::OneRect),
            "1-tri" => Ok(Self::OneTri),
            "2-degenerate" => Ok(Self::TwoDegenerate),
            "3-deformed" => Ok(Self::ThreeDeformed),
            "4-hanging" => Ok(Self::FourHanging),
            other => Err(WgError::InvalidArgument(format!(
                "unknown case `{other}` (available: 1-rect, 1-tri, 2-degenerate, \
                 3-deformed, 4-hanging)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::OneRect => "1-rect",
            Self::OneTri => "1-tri",
            Self::TwoDegenerate => "2-degenerate",
            Self::ThreeDeformed => "3-deformed",
            Self::FourHanging => "4-hanging",
        }
    }

    pub fn default_levels(self) -> usize {
        match self {
            Self::TwoDegenerate => 5,
            _ => 6,
        }
    }

    pub fn problem(self) -> Problem {
        match self {
            Self::TwoDegenerate => problem_case2(),
            _ => problem_case1(),
        }
    }

    /// Grid subdivision count at a level, when the family is grid-based.
    pub fn grid_n(self, level: usize) -> Option<usize> {
        match self {
            Self::OneRect | Self::OneTri => Some(4 << level),
            Self::TwoDegenerate => Some(8 << level),
            _ => None,
        }
    }
}

/// Uniform grid with interior vertices displaced by a smooth wave field;
/// boundary vertices stay put so the domain remains the unit square.
pub fn deformed_grid(n: usize, amplitude: f64) -> Mesh {
    let base = Mesh::unit_square_grid(n);
    let tau = 2.0 * std::f64::consts::PI;
    let mut vertices: Vec<Point2<f64>> = (0..base.n_vertices()).map(|i| base.vertex(i)).collect();
    for j in 1..n {
        for i in 1..n {
            let v = &mut vertices[j * (n + 1) + i];
            let (x, y) = (v.x, v.y);
            v.x = x + amplitude * (tau * x).sin() * (tau * y).sin();
            v.y = y + amplitude * (tau * x + 0.8).sin() * (tau * y + 0.4).sin();
        }
    }
    let cells = (0..base.n_cells()).map(|c| base.cell(c).to_vec()).collect();
    Mesh::from_cells(vertices, cells).expect("deformed grid stays valid")
}

/// Initial mesh of the deformed-rectangles experiment: a 5x5 wavy grid.
/// A stand-in with the same character as the published figure; the
/// experiment's acceptance is rate-based.
pub fn case3_initial() -> Mesh {
    deformed_grid(5, 0.03)
}

/// Initial mesh of the hanging-node experiment: a 3x3 wavy grid whose
/// top-middle cell is split vertically in half. The split vertex on the
/// interior edge is a genuine hanging node; barycentric refinement keeps the
/// configuration self-similar, doubling the hanging-node count per level.
pub fn case4_initial() -> Mesh {
    let n = 3;
    let base = deformed_grid(n, 0.05);
    let mut vertices: Vec<Point2<f64>> = (0..base.n_vertices()).map(|i| base.vertex(i)).collect();
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    // split cell (1, 2): corners (1,2) (2,2) (2,3) (1,3)
    let vb0 = idx(1, 2);
    let vb1 = idx(2, 2);
    let vt0 = idx(1, 3);
    let vt1 = idx(2, 3);
    let m_bottom = vertices.len();
    vertices.push(vertices[vb0].midpoint(vertices[vb1]));
    let m_top = vertices.len();
    vertices.push(vertices[vt0].midpoint(vertices[vt1]));
    let mut cells = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if (i, j) == (1, 2) {
                cells.push(vec![vb0, m_bottom, m_top, vt0]);
                cells.push(vec![m_bottom, vb1, vt1, m_top]);
            } else {
                cells.push(vec![idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            }
        }
    }
    Mesh::from_cells(vertices, cells).expect("hanging-node mesh stays valid")
}

/// Hexagon tiling of the unit square: flat-top hexagons clipped to the
/// domain and welded along shared edges. `n` counts hexagon columns.
pub fn build_hex_tiling(n: usize) -> Result<Mesh> {
    assert!(n >= 2);
    let r = 1.0 / (1.5 * n as f64);
    let dy = 3f64.sqrt() * r;
    let mut raw_cells: Vec<Vec<Point2<f64>>> = Vec::new();
    let cols = (1.0 / (1.5 * r)).ceil() as i64 + 2;
    let rows = (1.0 / dy).ceil() as i64 + 2;
    for q in -1..=cols {
        for row in -1..=rows {
            let cx = q as f64 * 1.5 * r;
            let cy = row as f64 * dy + if q.rem_euclid(2) == 1 { dy / 2.0 } else { 0.0 };
            let hex: Vec<Point2<f64>> = (0..6)
                .map(|k| {
                    let th = std::f64::consts::PI / 3.0 * k as f64;
                    Point2::new(cx + r * th.cos(), cy + r * th.sin())
                })
                .collect();
            let clipped = clip_to_unit_square(&hex);
            if clipped.len() >= 3 && crate::geom::polygon_area(&clipped) > 1e-14 * r * r {
                raw_cells.push(clipped);
            }
        }
    }
    // weld shared vertices and snap near-boundary coordinates
    let tol = 1e-9 * r;
    let snap = |v: f64| {
        if (v - 0.0).abs() <= tol {
            0.0
        } else if (v - 1.0).abs() <= tol {
            1.0
        } else {
            v
        }
    };
    let mut vertices: Vec<Point2<f64>> = Vec::new();
    let mut cells: Vec<Vec<usize>> = Vec::new();
    let key_of = |p: Point2<f64>| ((p.x / tol).round() as i64, (p.y / tol).round() as i64);
    let mut buckets: std::collections::HashMap<(i64, i64), Vec<usize>> =
        std::collections::HashMap::new();
    for poly in raw_cells {
        let mut loop_idx = Vec::with_capacity(poly.len());
        for p in poly {
            let p = Point2::new(snap(p.x), snap(p.y));
            let (kx, ky) = key_of(p);
            let mut found = None;
            'search: for dx in -1..=1i64 {
                for dy2 in -1..=1i64 {
                    if let Some(list) = buckets.get(&(kx + dx, ky + dy2)) {
                        for &v in list {
                            if vertices[v].distance(p) <= tol {
                                found = Some(v);
                                break 'search;
                            }
                        }
                    }
                }
            }
            let v = found.unwrap_or_else(|| {
                vertices.push(p);
                buckets.entry((kx, ky)).or_default().push(vertices.len() - 1);
                vertices.len() - 1
            });
            if loop_idx.last() != Some(&v) {
                loop_idx.push(v);
            }
        }
        while loop_idx.len() > 1 && loop_idx.first() == loop_idx.last() {
            loop_idx.pop();
        }
        if loop_idx.len() >= 3 {
            cells.push(loop_idx);
        }
    }
    Mesh::from_cells(vertices, cells)
}

fn clip_to_unit_square(poly: &[Point2<f64>]) -> Vec<Point2<f64>> {
    // Sutherland-Hodgman against the four half-planes of [0,1]^2
    let planes: [(f64, f64, f64); 4] = [
        (1.0, 0.0, 0.0),  // x >= 0
        (-1.0, 0.0, 1.0), // x <= 1
        (0.0, 1.0, 0.0),  // y >= 0
        (0.0, -1.0, 1.0), // y <= 1
    ];
    let mut current = poly.to_vec();
    for (a, b, c) in planes {
        if current.is_empty() {
            break;
        }
        let inside = |p: Point2<f64>| a * p.x + b * p.y + c >= 0.0;
        let mut next = Vec::with_capacity(current.len() + 2);
        for i in 0..current.len() {
            let p = current[i];
            let q = current[(i + 1) % current.len()];
            let pin = inside(p);
            let qin = inside(q);
            if pin {
                next.push(p);
            }
            if pin != qin {
                let dp = a * p.x + b * p.y + c;
                let dq = a * q.x + b * q.y + c;
                let t = dp / (dp - dq);
                next.push(Point2::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)));
            }
        }
        current = next;
    }
    current
}

/// One solved level of an experiment.
pub struct LevelReport {
    /// `1/h` label of the level: the grid count for grid families, `1/h_max`
    /// otherwise.
    pub h_inv_label: String,
    pub errors: ErrorTriple<f64>,
    pub regularity: RegularityReport<f64>,
    pub max_conservation_scaled: f64,
    pub max_jump_scaled: f64,
    pub n_cells: usize,
    pub n_dofs: usize,
    pub cg: SolveStats<f64>,
    pub wall_ms: f64,
}

/// A full experiment: per-level reports plus fitted rates.
pub struct ExperimentReport {
    pub case: String,
    pub k: usize,
    pub rho: f64,
    pub levels: Vec<LevelReport>,
    pub rates: Option<RateTriple<f64>>,
}

/// Scaled flux-certificate tolerance enforced on the two coarsest levels of
/// each experiment (finer levels are limited by the linear solver already).
pub const CERTIFICATE_TOL: f64 = 1e-8;

impl ExperimentReport {
    /// The pinned report format: `h_inv,e_H1,e_L2,e_edge` rows and a
    /// trailing rate row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("h_inv,e_H1,e_L2,e_edge\n");
        for l in &self.levels {
            out.push_str(&format!(
                "{},{:.10e},{:.10e},{:.10e}\n",
                l.h_inv_label, l.errors.e_h1, l.errors.e_l2, l.errors.e_edge
            ));
        }
        if let Some(r) = &self.rates {
            let fmt = |v: Option<f64>| match v {
                Some(v) => format!("{v:.6}"),
                None => "exact".into(),
            };
            out.push_str(&format!(
                "rate,{},{},{}\n",
                fmt(r.h1),
                fmt(r.l2),
                fmt(r.edge)
            ));
        }
        out
    }

    /// Human-readable summary for stdout.
    pub fn summary(&self) -> String {
        let mut out = format!(
            "case {}  (k = {}, rho = {})\n\
             {:>10} {:>13} {:>13} {:>13} {:>8} {:>9} {:>11} {:>9}\n",
            self.case,
            self.k,
            self.rho,
            "1/h",
            "H1 error",
            "L2 error",
            "edge error",
            "cells",
            "CG iters",
            "flux resid",
            "time"
        );
        for l in &self.levels {
            out.push_str(&format!(
                "{:>10} {:>13.4e} {:>13.4e} {:>13.4e} {:>8} {:>9} {:>11.2e} {:>8.0}ms\n",
                l.h_inv_label,
                l.errors.e_h1,
                l.errors.e_l2,
                l.errors.e_edge,
                l.n_cells,
                l.cg.iterations,
                l.max_conservation_scaled.max(l.max_jump_scaled),
                l.wall_ms,
            ));
        }
        if let Some(r) = &self.rates {
            let fmt = |v: Option<f64>| match v {
                Some(v) => format!("{v:.4}"),
                None => "exact".into(),
            };
            out.push_str(&format!(
                "{:>10} {:>13} {:>13} {:>13}\n",
                "rate",
                fmt(r.h1),
                fmt(r.l2),
                fmt(r.edge)
            ));
        }
        out.push_str(&format!(
            "certificates: {}\n",
            if self.certificates_pass() { "pass" } else { "FAIL" }
        ));
        out
    }

    /// Scheme-identity certificates on the two coarsest levels.
    pub fn certificates_pass(&self) -> bool {
        self.levels
            .iter()
            .take(2)
            .all(|l| {
                l.max_conservation_scaled <= CERTIFICATE_TOL
                    && l.max_jump_scaled <= CERTIFICATE_TOL
            })
    }
}

pub struct RunOptions {
    pub k: usize,
    pub rho: f64,
    pub config: SolveConfig<f64>,
    /// Write per-level MatrixMarket/rhs files under this path prefix.
    pub export_matrix: Option<std::path::PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            k: 1,
            rho: 1.0,
            config: SolveConfig::default(),
            export_matrix: None,
        }
    }
}

/// Solves one problem on one (possibly nonconforming) mesh and collects the
/// level diagnostics.
pub fn solve_level(
    raw_mesh: Mesh,
    problem: &Problem,
    opts: &RunOptions,
    h_inv_label: Option<String>,
    export_tag: Option<&str>,
) -> Result<LevelReport> {
    let start = Instant::now();
    let mesh = raw_mesh.segment_hanging_edges(1e-10)?;
    let regularity = mesh.regularity_report();
    let n_cells = mesh.n_cells();
    let space = WgSpace::new(mesh, opts.k);
    let wg = WeakGradients::build(&space)?;
    let f = problem.f.clone();
    let g = problem.g.clone();
    let system = assembly::assemble(
        &space,
        &wg,
        &problem.coefficient,
        &*f,
        Boundary::Dirichlet(&*g),
        opts.rho,
        None,
    )?;
    if let (Some(prefix), Some(tag)) = (&opts.export_matrix, export_tag) {
        let base = prefix.as_os_str().to_string_lossy();
        let mut mw = std::io::BufWriter::new(std::fs::File::create(format!(
            "{base}_{tag}.mtx"
        ))?);
        system.write_matrix_market(&mut mw)?;
        let mut rw = std::io::BufWriter::new(std::fs::File::create(format!(
            "{base}_{tag}.rhs.txt"
        ))?);
        system.write_rhs(&mut rw)?;
    }
    let condensed = assembly::condense(&system, &space)?;
    let (u_h, cg) = solver::solve_condensed(&space, &condensed, &opts.config)?;
    let exact = problem.exact.clone();
    let errors = postprocess::error_norms(&space, &wg, &u_h, &*exact, opts.rho)?;
    let flux = postprocess::flux_report(
        &space,
        &wg,
        &u_h,
        &problem.coefficient,
        &*f,
        opts.rho,
    )?;
    Ok(LevelReport {
        h_inv_label: h_inv_label.unwrap_or_else(|| format!("{:.6e}", 1.0 / errors.h)),
        errors,
        regularity,
        max_conservation_scaled: flux.max_conservation_scaled(),
        max_jump_scaled: flux.max_jump_scaled(),
        n_cells,
        n_dofs: space.n_dofs(),
        cg,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Runs one of the shipped experiments over its mesh family.
pub fn run_case(case: CaseId, levels: usize, opts: &RunOptions) -> Result<ExperimentReport> {
    if levels < 3 {
        return Err(WgError::InvalidArgument(
            "experiments need at least 3 levels".into(),
        ));
    }
    let problem = case.problem();
    let mut reports = Vec::with_capacity(levels);
    let mut refined: Option<Mesh> = None;
    for level in 0..levels {
        let mesh = match case {
            CaseId::OneRect | CaseId::TwoDegenerate => {
                Mesh::unit_square_grid(case.grid_n(level).unwrap())
            }
            CaseId::OneTri => Mesh::unit_square_triangles(case.grid_n(level).unwrap()),
            CaseId::ThreeDeformed | CaseId::FourHanging => {
                let next = match refined.take() {
                    None if case == CaseId::ThreeDeformed => case3_initial(),
                    None => case4_initial(),
                    Some(prev) => prev.refine_barycentric()?,
                };
                refined = Some(next.clone());
                next
            }
        };
        let label = case.grid_n(level).map(|n| n.to_string());
        let tag = format!("L{level}");
        reports.push(solve_level(mesh, &problem, opts, label, Some(&tag))?);
    }
    let triples: Vec<ErrorTriple<f64>> = reports.iter().map(|r| r.errors).collect();
    let rates = postprocess::fit_rate(&triples)?;
    Ok(ExperimentReport {
        case: case.name().into(),
        k: opts.k,
        rho: opts.rho,
        levels: reports,
        rates: Some(rates),
    })
}

/// Runs a named problem on a mesh file: one level, full diagnostics.
pub fn run_meshfile(
    path: impl AsRef<std::path::Path>,
    problem_name: &str,
    opts: &RunOptions,
) -> Result<ExperimentReport> {
    let problem = problem_by_name(problem_name)?;
    let mesh = Mesh::read_file(path)?;
    let report = solve_level(mesh, &problem, opts, None, Some("mesh"))?;
    Ok(ExperimentReport {
        case: format!("meshfile:{problem_name}"),
        k: opts.k,
        rho: opts.rho,
        levels: vec![report],
        rates: None,
    })
}
