//! Quadrature on edges and polygons.
//!
//! Edges use mapped Gauss-Legendre. Polygons are fan-triangulated from their
//! centroid and each triangle carries a collapsed tensor-product rule, which
//! keeps all weights positive and gives a guaranteed polynomial exactness
//! degree. The fan anchor equals the basis-scaling center so the same point
//! maps serve both purposes.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Result, WgError};
use crate::geom::{polygon_centroid, signed_area2, Point2};
use crate::real::{real, Real};

/// A quadrature rule with a known polynomial exactness degree.
#[derive(Debug, Clone)]
pub struct QuadRule<R: Real> {
    pub points: Vec<Point2<R>>,
    pub weights: Vec<R>,
    pub exactness: usize,
}

impl<R: Real> QuadRule<R> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> R {
        self.weights.iter().fold(R::zero(), |a, &w| a + w)
    }

    pub fn integrate(&self, mut f: impl FnMut(Point2<R>) -> R) -> R {
        let mut acc = R::zero();
        for (p, w) in self.points.iter().zip(&self.weights) {
            acc += f(*p) * *w;
        }
        acc
    }
}

fn gauss_legendre_cache() -> &'static Mutex<HashMap<usize, Arc<Vec<(f64, f64)>>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<(f64, f64)>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// computed by Newton iteration on the Legendre recurrence and cached.
pub fn gauss_legendre(n: usize) -> Arc<Vec<(f64, f64)>> {
    assert!(n >= 1);
    if let Some(hit) = gauss_legendre_cache().lock().unwrap().get(&n) {
        return hit.clone();
    }
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P'_n(x)
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = -p1 / dp;
            x += dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push((x, w));
    }
    let rule = Arc::new(rule);
    gauss_legendre_cache().lock().unwrap().insert(n, rule.clone());
    rule
}

/// Gauss-Legendre rule mapped onto the segment `p0 -> p1`, exact for
/// polynomials of the arclength parameter up to `exactness`.
pub fn edge_rule<R: Real>(p0: Point2<R>, p1: Point2<R>, exactness: usize) -> QuadRule<R> {
    let n = exactness / 2 + 1; // 2n - 1 >= exactness
    let gl = gauss_legendre(n);
    let half = real::<R>(0.5);
    let mid = p0.midpoint(p1);
    let along = (p1 - p0).scale(half);
    let length = (p1 - p0).norm();
    let mut points = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for &(t, w) in gl.iter() {
        points.push(mid + along.scale(real::<R>(t)));
        weights.push(real::<R>(w) * length * half);
    }
    QuadRule { points, weights, exactness }
}

/// Collapsed tensor-product rule on the triangle `(a, b, c)`, exact to
/// `exactness`. All weights are positive.
pub fn triangle_rule<R: Real>(
    a: Point2<R>,
    b: Point2<R>,
    c: Point2<R>,
    exactness: usize,
) -> QuadRule<R> {
    // x = u, y = v(1-u) on the reference triangle: a monomial x^p y^q pulls
    // back to degree p+q+1 in u (with the Jacobian) and q in v.
    let nu = (exactness + 2).div_ceil(2);
    let nv = (exactness + 1).div_ceil(2);
    let glu = gauss_legendre(nu);
    let glv = gauss_legendre(nv);
    let jac2 = signed_area2(a, b, c); // 2 * signed area
    let ab = b - a;
    let ac = c - a;
    let mut points = Vec::with_capacity(nu * nv);
    let mut weights = Vec::with_capacity(nu * nv);
    for &(tu, wu) in glu.iter() {
        let u = 0.5 * (tu + 1.0);
        for &(tv, wv) in glv.iter() {
            let v = 0.5 * (tv + 1.0);
            let x = real::<R>(u);
            let y = real::<R>(v * (1.0 - u));
            points.push(a + ab.scale(x) + ac.scale(y));
            weights.push(real::<R>(wu * wv * (1.0 - u) * 0.25) * jac2);
        }
    }
    QuadRule { points, weights, exactness }
}

/// Fan rule over a CCW polygon, anchored at its centroid. Fails when a fan
/// triangle is inverted, i.e. the polygon is not star-shaped with respect to
/// its centroid; `cell` only labels the error.
pub fn polygon_rule<R: Real>(
    loop_pts: &[Point2<R>],
    exactness: usize,
    cell: usize,
) -> Result<QuadRule<R>> {
    let anchor = polygon_centroid(loop_pts);
    polygon_rule_from(loop_pts, anchor, exactness, cell)
}

/// Fan rule with an explicit anchor (the mesh passes the stored centroid so
/// quadrature and basis scaling agree bit-for-bit).
pub fn polygon_rule_from<R: Real>(
    loop_pts: &[Point2<R>],
    anchor: Point2<R>,
    exactness: usize,
    cell: usize,
) -> Result<QuadRule<R>> {
    let m = loop_pts.len();
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for i in 0..m {
        let p = loop_pts[i];
        let q = loop_pts[(i + 1) % m];
        let area2 = signed_area2(anchor, p, q);
        if !(area2 > R::zero()) {
            // collinear fan triangles arise from vertices inserted on straight
            // edges; they carry zero area and are simply skipped
            let len2 = (q - p).dot(q - p);
            if area2.abs() <= R::epsilon().sqrt() * len2 {
                continue;
            }
            return Err(WgError::NotStarShaped { cell });
        }
        let tri = triangle_rule(anchor, p, q, exactness);
        points.extend(tri.points);
        weights.extend(tri.weights);
    }
    Ok(QuadRule { points, weights, exactness })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::polygon_area;
    use rand::{Rng, SeedableRng};

    fn unit_square() -> Vec<Point2<f64>> {
        vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ]
    }

    /// Independent route for polygon monomial integrals: divergence theorem
    /// with F = (x^{p+1} y^q / (p+1), 0) reduces the area integral to edge
    /// integrals, evaluated by 1D Gauss rules of sufficient degree.
    fn monomial_integral_via_boundary(pts: &[Point2<f64>], p: u32, q: u32) -> f64 {
        let mut acc = 0.0;
        let m = pts.len();
        for i in 0..m {
            let a = pts[i];
            let b = pts[(i + 1) % m];
            let t = b - a;
            let len = t.norm();
            let n_x = t.y / len; // outward normal x-component for CCW loop
            let rule = edge_rule(a, b, (p + q + 1) as usize);
            acc += rule.integrate(|pt| pt.x.powi(p as i32 + 1) * pt.y.powi(q as i32)) * n_x
                / (p as f64 + 1.0);
        }
        acc
    }

    #[test]
    fn edge_rule_cubic_exact() {
        let r = edge_rule(Point2::<f64>::new(0.0, 0.0), Point2::new(1.0, 0.0), 3);
        let v = r.integrate(|p| p.x.powi(3));
        assert!((v - 0.25).abs() < 1e-14, "got {v}");
    }

    #[test]
    fn edge_rule_degree_zero_is_midpoint() {
        let r = edge_rule(Point2::<f64>::new(0.0, 0.0), Point2::new(2.0, 0.0), 0);
        assert_eq!(r.len(), 1);
        assert!((r.points[0].x - 1.0).abs() < 1e-15);
        assert!((r.weights[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn edge_rule_vertical_quintic() {
        let r = edge_rule(Point2::<f64>::new(0.0, 0.0), Point2::new(0.0, 2.0), 5);
        let v = r.integrate(|p| p.y.powi(5));
        assert!((v - 32.0 / 3.0).abs() < 1e-13, "got {v}");
    }

    #[test]
    fn square_rule_monomials() {
        let sq = unit_square();
        let r2 = polygon_rule(&sq, 2, 0).unwrap();
        let v = r2.integrate(|p| p.x * p.x);
        assert!((v - 1.0 / 3.0).abs() < 1e-13, "x^2: {v}");
        let r4 = polygon_rule(&sq, 4, 0).unwrap();
        let v = r4.integrate(|p| p.x * p.x * p.y * p.y);
        assert!((v - 1.0 / 9.0).abs() < 1e-13, "x^2 y^2: {v}");
    }

    #[test]
    fn hexagon_area() {
        let n = 6;
        let pts: Vec<Point2<f64>> = (0..n)
            .map(|i| {
                let th = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                Point2::new(th.cos(), th.sin())
            })
            .collect();
        let r = polygon_rule(&pts, 3, 0).unwrap();
        let area = r.total_weight();
        let exact = 3.0 * 3f64.sqrt() / 2.0;
        assert!((area - exact).abs() < 1e-13, "hexagon area {area} vs {exact}");
    }

    #[test]
    fn non_star_shaped_polygon_rejected() {
        // deep L-shape: centroid does not see the inner corner edges
        let pts: Vec<Point2<f64>> = vec![
            Point2::new(0.0, 0.0),
            Point2::new(3.0, 0.0),
            Point2::new(3.0, 1.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 3.0),
            Point2::new(0.0, 3.0),
        ];
        match polygon_rule(&pts, 2, 7) {
            Err(WgError::NotStarShaped { cell: 7 }) => {}
            other => panic!("expected star-shape failure, got {other:?}"),
        }
    }

    #[test]
    fn fuzz_exactness_on_random_convex_polygons() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for trial in 0..60 {
            let nv = rng.gen_range(3..=8);
            // random convex polygon: sorted angles on a jittered circle keeps
            // convexity when the radius is fixed per trial
            let radius = rng.gen_range(0.3..2.0);
            let cx = rng.gen_range(-1.0..1.0);
            let cy = rng.gen_range(-1.0..1.0);
            let mut angles: Vec<f64> = (0..nv)
                .map(|_| rng.gen_range(0.0..2.0 * std::f64::consts::PI))
                .collect();
            angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
            angles.dedup_by(|a, b| (*a - *b).abs() < 1e-2);
            if angles.len() < 3 {
                continue;
            }
            let pts: Vec<Point2<f64>> = angles
                .iter()
                .map(|th| Point2::new(cx + radius * th.cos(), cy + radius * th.sin()))
                .collect();
            let area = polygon_area(&pts);
            if area < 1e-3 {
                continue;
            }
            let exactness = rng.gen_range(0..=6usize);
            let rule = polygon_rule(&pts, exactness, trial).unwrap();
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            assert!(
                ((rule.total_weight() - area) / area).abs() < 1e-13,
                "weight sum vs area on trial {trial}"
            );
            for p in 0..=exactness as u32 {
                for q in 0..=(exactness as u32 - p) {
                    let by_rule = rule.integrate(|pt| pt.x.powi(p as i32) * pt.y.powi(q as i32));
                    let by_boundary = monomial_integral_via_boundary(&pts, p, q);
                    let scale = by_boundary.abs().max(area);
                    assert!(
                        (by_rule - by_boundary).abs() <= 1e-12 * scale,
                        "monomial x^{p} y^{q} trial {trial}: {by_rule} vs {by_boundary}"
                    );
                }
            }
        }
    }

    #[test]
    fn rules_work_in_f32() {
        let sq: Vec<Point2<f32>> = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        let r = polygon_rule(&sq, 2, 0).unwrap();
        assert!((r.total_weight() - 1.0f32).abs() < 1e-6);
    }
}
