//! Plane geometry primitives shared by the mesh and quadrature modules.

use crate::real::Real;

/// A point in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2<R: Real> {
    pub x: R,
    pub y: R,
}

/// A displacement/direction in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec2<R: Real> {
    pub x: R,
    pub y: R,
}

impl<R: Real> Point2<R> {
    pub fn new(x: R, y: R) -> Self {
        Self { x, y }
    }

    pub fn to_vec(self) -> Vec2<R> {
        Vec2 { x: self.x, y: self.y }
    }

    pub fn midpoint(self, other: Self) -> Self {
        let half = R::one() / (R::one() + R::one());
        Self::new((self.x + other.x) * half, (self.y + other.y) * half)
    }

    pub fn distance(self, other: Self) -> R {
        (self - other).norm()
    }
}

impl<R: Real> Vec2<R> {
    pub fn new(x: R, y: R) -> Self {
        Self { x, y }
    }

    pub fn zero() -> Self {
        Self::new(R::zero(), R::zero())
    }

    pub fn dot(self, other: Self) -> R {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the cross product, twice the signed area of the spanned triangle.
    pub fn cross(self, other: Self) -> R {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> R {
        self.dot(self).sqrt()
    }

    pub fn scale(self, s: R) -> Self {
        Self::new(self.x * s, self.y * s)
    }

    pub fn normalize(self) -> Self {
        let n = self.norm();
        Self::new(self.x / n, self.y / n)
    }

    /// Rotation by -90 degrees; maps a CCW tangent to the outward normal.
    pub fn rot_cw(self) -> Self {
        Self::new(self.y, -self.x)
    }
}

impl<R: Real> std::ops::Sub for Point2<R> {
    type Output = Vec2<R>;
    fn sub(self, rhs: Self) -> Vec2<R> {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<R: Real> std::ops::Add<Vec2<R>> for Point2<R> {
    type Output = Point2<R>;
    fn add(self, rhs: Vec2<R>) -> Point2<R> {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<R: Real> std::ops::Add for Vec2<R> {
    type Output = Vec2<R>;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<R: Real> std::ops::Sub for Vec2<R> {
    type Output = Vec2<R>;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

/// A symmetric 2x2 matrix, the value type of diffusion coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMat2<R: Real> {
    pub xx: R,
    pub xy: R,
    pub yy: R,
}

impl<R: Real> SymMat2<R> {
    pub fn new(xx: R, xy: R, yy: R) -> Self {
        Self { xx, xy, yy }
    }

    pub fn identity() -> Self {
        Self::new(R::one(), R::zero(), R::one())
    }

    pub fn isotropic(a: R) -> Self {
        Self::new(a, R::zero(), a)
    }

    pub fn mul_vec(self, v: Vec2<R>) -> Vec2<R> {
        Vec2::new(self.xx * v.x + self.xy * v.y, self.xy * v.x + self.yy * v.y)
    }

    pub fn quad_form(self, v: Vec2<R>) -> R {
        v.dot(self.mul_vec(v))
    }
}

/// Twice the signed area of the triangle `(a, b, c)`; positive for CCW order.
pub fn signed_area2<R: Real>(a: Point2<R>, b: Point2<R>, c: Point2<R>) -> R {
    (b - a).cross(c - a)
}

/// Signed area of a polygon loop by the shoelace formula; positive for CCW.
pub fn polygon_area<R: Real>(loop_pts: &[Point2<R>]) -> R {
    let half = R::one() / (R::one() + R::one());
    let mut acc = R::zero();
    for i in 0..loop_pts.len() {
        let p = loop_pts[i];
        let q = loop_pts[(i + 1) % loop_pts.len()];
        acc += p.to_vec().cross(q.to_vec());
    }
    acc * half
}

/// Area-weighted centroid of a polygon loop (shoelace moments).
pub fn polygon_centroid<R: Real>(loop_pts: &[Point2<R>]) -> Point2<R> {
    let mut area2 = R::zero();
    let mut cx = R::zero();
    let mut cy = R::zero();
    for i in 0..loop_pts.len() {
        let p = loop_pts[i];
        let q = loop_pts[(i + 1) % loop_pts.len()];
        let w = p.to_vec().cross(q.to_vec());
        area2 += w;
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    let three = R::one() + R::one() + R::one();
    let s = area2 * three; // 6 * area
    Point2::new(cx / s, cy / s)
}

/// Maximum pairwise distance between the loop vertices.
pub fn polygon_diameter<R: Real>(loop_pts: &[Point2<R>]) -> R {
    let mut d = R::zero();
    for i in 0..loop_pts.len() {
        for j in (i + 1)..loop_pts.len() {
            d = d.max(loop_pts[i].distance(loop_pts[j]));
        }
    }
    d
}

/// Checks whether two closed segments properly intersect (cross at a point
/// interior to both). Shared endpoints and collinear touching do not count.
pub fn segments_cross<R: Real>(
    a: Point2<R>,
    b: Point2<R>,
    c: Point2<R>,
    d: Point2<R>,
) -> bool {
    let d1 = signed_area2(c, d, a);
    let d2 = signed_area2(c, d, b);
    let d3 = signed_area2(a, b, c);
    let d4 = signed_area2(a, b, d);
    ((d1 > R::zero() && d2 < R::zero()) || (d1 < R::zero() && d2 > R::zero()))
        && ((d3 > R::zero() && d4 < R::zero()) || (d3 < R::zero() && d4 > R::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shoelace_unit_square() {
        let sq: [Point2<f64>; 4] = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        assert!((polygon_area(&sq) - 1.0).abs() < 1e-15);
        let c = polygon_centroid(&sq);
        assert!((c.x - 0.5).abs() < 1e-15 && (c.y - 0.5).abs() < 1e-15);
        assert!((polygon_diameter(&sq) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn centroid_of_right_triangle() {
        let tri: [Point2<f64>; 3] = [
            Point2::new(0.0, 0.0),
            Point2::new(3.0, 0.0),
            Point2::new(0.0, 3.0),
        ];
        let c = polygon_centroid(&tri);
        assert!((c.x - 1.0).abs() < 1e-14 && (c.y - 1.0).abs() < 1e-14);
    }

    #[test]
    fn crossing_detection() {
        let p = |x: f64, y: f64| Point2::new(x, y);
        assert!(segments_cross(p(0.0, 0.0), p(1.0, 1.0), p(0.0, 1.0), p(1.0, 0.0)));
        // shared endpoint is not a crossing
        assert!(!segments_cross(p(0.0, 0.0), p(1.0, 1.0), p(1.0, 1.0), p(2.0, 0.0)));
        // disjoint
        assert!(!segments_cross(p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0), p(1.0, 1.0)));
    }
}
