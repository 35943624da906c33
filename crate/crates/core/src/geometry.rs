//! Two-dimensional space forms in conformal charts.
//!
//! The unit sphere is charted by stereographic projection from the antipode of
//! the pole `p = (0, 0, 1)`, the hyperbolic plane by the Poincaré disk centred
//! at `p`, and the Euclidean plane by the identity. In every chart geodesic
//! balls around points of the model x-axis are Euclidean disks centred on the
//! x-axis, and the metric is `λ(x)² (dx² + dy²)`.
//!
//! Lifts to the ambient space use coordinates `(x₁, x₂, x₃)` with the chart
//! x-axis sent into the `(x₂, x₃)`-plane, so the axis point at signed distance
//! `t` from `p` lifts to `q(t) = (0, sin t, cos t)` on the sphere and
//! `(0, sinh t, cosh t)` on the hyperboloid. The Euclidean plane is lifted to
//! the affine plane `x₃ = 1`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol;

pub type Vec3 = [f64; 3];

/// A point of the planar chart.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm_sqr(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    pub fn from_complex(z: Complex64) -> Self {
        Self { x: z.re, y: z.im }
    }
}

/// Constant-curvature model geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceForm {
    /// Unit sphere, curvature +1.
    Spherical,
    /// Euclidean plane, curvature 0.
    Euclidean,
    /// Hyperbolic plane, curvature −1.
    Hyperbolic,
}

impl SpaceForm {
    pub const ALL: [SpaceForm; 3] = [
        SpaceForm::Spherical,
        SpaceForm::Hyperbolic,
        SpaceForm::Euclidean,
    ];

    pub fn curvature(self) -> i8 {
        match self {
            SpaceForm::Spherical => 1,
            SpaceForm::Euclidean => 0,
            SpaceForm::Hyperbolic => -1,
        }
    }

    /// Short tag used on the command line and in CSV output.
    pub fn tag(self) -> &'static str {
        match self {
            SpaceForm::Spherical => "sph",
            SpaceForm::Euclidean => "euc",
            SpaceForm::Hyperbolic => "hyp",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "sph" => Some(SpaceForm::Spherical),
            "euc" => Some(SpaceForm::Euclidean),
            "hyp" => Some(SpaceForm::Hyperbolic),
            _ => None,
        }
    }

    /// Circumference density of geodesic circles: `sin r`, `r` or `sinh r`.
    pub fn sn(self, r: f64) -> f64 {
        match self {
            SpaceForm::Spherical => r.sin(),
            SpaceForm::Euclidean => r,
            SpaceForm::Hyperbolic => r.sinh(),
        }
    }

    /// Derivative of [`SpaceForm::sn`].
    pub fn cs(self, r: f64) -> f64 {
        match self {
            SpaceForm::Spherical => r.cos(),
            SpaceForm::Euclidean => 1.0,
            SpaceForm::Hyperbolic => r.cosh(),
        }
    }

    fn check_chart(self, x: Point) -> Result<()> {
        if !(x.x.is_finite() && x.y.is_finite()) {
            return Err(Error::Domain(format!("non-finite chart point {x:?}")));
        }
        if self == SpaceForm::Hyperbolic && x.norm_sqr() >= 1.0 {
            return Err(Error::Domain(format!(
                "point {x:?} lies outside the Poincaré disk"
            )));
        }
        Ok(())
    }

    /// Conformal factor `λ(x)` of the chart metric `λ² (dx² + dy²)`.
    pub fn conformal_factor(self, x: Point) -> Result<f64> {
        self.check_chart(x)?;
        Ok(self.conformal_factor_unchecked(x))
    }

    pub(crate) fn conformal_factor_unchecked(self, x: Point) -> f64 {
        match self {
            SpaceForm::Spherical => 2.0 / (1.0 + x.norm_sqr()),
            SpaceForm::Euclidean => 1.0,
            SpaceForm::Hyperbolic => 2.0 / (1.0 - x.norm_sqr()),
        }
    }

    /// Euclidean chart radius of the geodesic circle of radius `s` about `p`.
    /// Odd in `s`.
    pub fn model_radius(self, s: f64) -> Result<f64> {
        if !s.is_finite() {
            return Err(Error::Domain(format!("non-finite geodesic length {s}")));
        }
        match self {
            SpaceForm::Spherical => {
                if s.abs() >= std::f64::consts::PI {
                    return Err(Error::Domain(format!(
                        "spherical geodesic length {s} must satisfy |s| < π"
                    )));
                }
                Ok((0.5 * s).tan())
            }
            SpaceForm::Euclidean => Ok(s),
            SpaceForm::Hyperbolic => Ok((0.5 * s).tanh()),
        }
    }

    /// Inverse of [`SpaceForm::model_radius`].
    pub fn geodesic_radius(self, m: f64) -> Result<f64> {
        if !m.is_finite() {
            return Err(Error::Domain(format!("non-finite model radius {m}")));
        }
        match self {
            SpaceForm::Spherical => Ok(2.0 * m.atan()),
            SpaceForm::Euclidean => Ok(m),
            SpaceForm::Hyperbolic => {
                if m.abs() >= 1.0 {
                    return Err(Error::Domain(format!(
                        "model radius {m} lies outside the Poincaré disk"
                    )));
                }
                Ok(2.0 * m.atanh())
            }
        }
    }

    /// Chart point of the axis point at signed geodesic distance `t` from `p`.
    pub fn axis_point(self, t: f64) -> Result<Point> {
        Ok(Point::new(self.model_radius(t)?, 0.0))
    }

    /// Geodesic distance between two chart points.
    pub fn geodesic_distance(self, x: Point, y: Point) -> Result<f64> {
        self.check_chart(x)?;
        self.check_chart(y)?;
        Ok(match self {
            SpaceForm::Euclidean => x.dist(y),
            SpaceForm::Spherical => {
                let a = self.lift_unchecked(x);
                let b = self.lift_unchecked(y);
                cross(a, b).iter().map(|c| c * c).sum::<f64>().sqrt().atan2(dot(a, b))
            }
            SpaceForm::Hyperbolic => {
                // cosh d = 1 + 2|x−y|²/((1−|x|²)(1−|y|²)), written with sinh(d/2)
                // to stay accurate for nearby points.
                let denom = ((1.0 - x.norm_sqr()) * (1.0 - y.norm_sqr())).sqrt();
                2.0 * (x.dist(y) / denom).asinh()
            }
        })
    }

    /// Inverse chart onto the sphere, hyperboloid or affine plane.
    pub fn lift(self, x: Point) -> Result<Vec3> {
        self.check_chart(x)?;
        Ok(self.lift_unchecked(x))
    }

    fn lift_unchecked(self, x: Point) -> Vec3 {
        let r2 = x.norm_sqr();
        match self {
            SpaceForm::Spherical => {
                let d = 1.0 + r2;
                [2.0 * x.y / d, 2.0 * x.x / d, (1.0 - r2) / d]
            }
            SpaceForm::Hyperbolic => {
                let d = 1.0 - r2;
                [2.0 * x.y / d, 2.0 * x.x / d, (1.0 + r2) / d]
            }
            SpaceForm::Euclidean => [x.y, x.x, 1.0],
        }
    }

    /// Chart coordinates of an ambient point on the model surface.
    pub fn project(self, a: Vec3) -> Point {
        match self {
            SpaceForm::Spherical | SpaceForm::Hyperbolic => {
                let d = 1.0 + a[2];
                Point::new(a[1] / d, a[0] / d)
            }
            SpaceForm::Euclidean => Point::new(a[1], a[0]),
        }
    }

    /// Ambient bilinear form: Euclidean on the sphere and affine plane,
    /// Minkowski `a₁b₁ + a₂b₂ − a₃b₃` on the hyperboloid.
    pub fn ambient_dot(self, a: Vec3, b: Vec3) -> f64 {
        match self {
            SpaceForm::Hyperbolic => a[0] * b[0] + a[1] * b[1] - a[2] * b[2],
            _ => dot(a, b),
        }
    }

    /// Ambient point `q(t)` on the axis.
    pub fn axis_ambient(self, t: f64) -> Vec3 {
        match self {
            SpaceForm::Spherical => [0.0, t.sin(), t.cos()],
            SpaceForm::Hyperbolic => [0.0, t.sinh(), t.cosh()],
            SpaceForm::Euclidean => [0.0, t, 1.0],
        }
    }

    /// Unit tangent `q′(t)`, the normal of the reflection hyperplane through `q(t)`.
    pub fn axis_tangent(self, t: f64) -> Vec3 {
        match self {
            SpaceForm::Spherical => [0.0, t.cos(), -t.sin()],
            SpaceForm::Hyperbolic => [0.0, t.cosh(), t.sinh()],
            SpaceForm::Euclidean => [0.0, 1.0, 0.0],
        }
    }

    /// Ambient velocity of the axis-translating field at `a` (the cutoff is 1 there).
    fn axis_field(self, a: Vec3) -> Vec3 {
        match self {
            SpaceForm::Spherical => [0.0, a[2], -a[1]],
            SpaceForm::Hyperbolic => [0.0, a[2], a[1]],
            SpaceForm::Euclidean => [0.0, 1.0, 0.0],
        }
    }
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// The eccentric annulus `B(p, r1) \ B̄(q(t), r0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusSpec {
    pub geom: SpaceForm,
    pub r0: f64,
    pub r1: f64,
    pub t: f64,
}

impl AnnulusSpec {
    pub fn new(geom: SpaceForm, r0: f64, r1: f64, t: f64) -> Result<Self> {
        let spec = Self { geom, r0, r1, t };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { geom, r0, r1, t } = *self;
        if !(r0.is_finite() && r1.is_finite() && t.is_finite()) {
            return Err(Error::InvalidSpec("non-finite parameter".into()));
        }
        if !(r0 > 0.0 && r1 > r0) {
            return Err(Error::InvalidSpec(format!(
                "radii must satisfy 0 < r0 < r1 (r0 = {r0}, r1 = {r1})"
            )));
        }
        if t.abs() >= r1 - r0 {
            return Err(Error::InvalidSpec(format!(
                "offset |t| = {} must be below r1 − r0 = {}",
                t.abs(),
                r1 - r0
            )));
        }
        if geom == SpaceForm::Spherical && r1 >= std::f64::consts::PI {
            return Err(Error::InvalidSpec(format!(
                "spherical outer radius {r1} must be below π"
            )));
        }
        Ok(())
    }

    pub fn with_offset(&self, t: f64) -> Result<Self> {
        Self::new(self.geom, self.r0, self.r1, t)
    }

    pub fn outer_circle(&self) -> Result<Circle2D> {
        geodesic_ball_to_disk(self.geom, 0.0, self.r1)
    }

    pub fn inner_circle(&self) -> Result<Circle2D> {
        geodesic_ball_to_disk(self.geom, self.t, self.r0)
    }

    /// Chart point of the inner centre `q(t)`.
    pub fn inner_center(&self) -> Result<Point> {
        self.geom.axis_point(self.t)
    }
}

/// Euclidean circle in the chart, centred on the x-axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle2D {
    pub center: f64,
    pub radius: f64,
}

impl Circle2D {
    pub fn new(center: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite() && center.is_finite()) {
            return Err(Error::Geometry(format!(
                "circle needs a finite positive radius (got centre {center}, radius {radius})"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn point_at(&self, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(self.center + self.radius * c, self.radius * s)
    }

    /// Signed distance of `x` from the circle (positive outside).
    pub fn deviation(&self, x: Point) -> f64 {
        Point::new(self.center, 0.0).dist(x) - self.radius
    }
}

/// Chart image of the geodesic ball of radius `r` about the axis point at offset `t`.
pub fn geodesic_ball_to_disk(geom: SpaceForm, t: f64, r: f64) -> Result<Circle2D> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("ball radius {r} must be positive")));
    }
    let far = geom.model_radius(t + r)?;
    let near = geom.model_radius(t - r)?;
    Circle2D::new(0.5 * (far + near), 0.5 * (far - near))
}

fn on_inner_circle(geom: SpaceForm, t0: f64, r0: f64, x: Point) -> Result<Vec3> {
    let q = geom.axis_point(t0)?;
    let d = geom.geodesic_distance(q, x)?;
    if (d - r0).abs() > tol::GEOMETRY {
        return Err(Error::InvalidPoint(format!(
            "point {x:?} is at distance {d} from the inner centre, expected {r0}"
        )));
    }
    geom.lift(x)
}

/// Normal velocity `⟨V, n⟩` at a point of the inner circle, evaluated in the
/// ambient space.
///
/// `V` is the axis-translating field and `n` the unit normal pointing from the
/// annulus into the inner ball. Valid for every offset including `t0 = 0`.
pub fn vn_ambient(geom: SpaceForm, t0: f64, r0: f64, x: Point) -> Result<f64> {
    let a = on_inner_circle(geom, t0, r0, x)?;
    let q = geom.axis_ambient(t0);
    let v = geom.axis_field(a);
    let n: Vec3 = match geom {
        SpaceForm::Spherical => {
            let (s, c) = r0.sin_cos();
            std::array::from_fn(|k| (q[k] - c * a[k]) / s)
        }
        SpaceForm::Hyperbolic => {
            let (s, c) = (r0.sinh(), r0.cosh());
            std::array::from_fn(|k| (q[k] - c * a[k]) / s)
        }
        SpaceForm::Euclidean => std::array::from_fn(|k| (q[k] - a[k]) / r0),
    };
    Ok(geom.ambient_dot(v, n))
}

/// Cosine of the angle at `q(t0)` of the geodesic triangle `[p, q(t0), x]`,
/// from the law of cosines of the model geometry.
pub fn cos_beta(geom: SpaceForm, t0: f64, r0: f64, x: Point) -> Result<f64> {
    if t0 == 0.0 {
        return Err(Error::Degenerate(
            "angle at the inner centre is undefined for concentric balls".into(),
        ));
    }
    on_inner_circle(geom, t0, r0, x)?;
    let a = geom.geodesic_distance(Point::ORIGIN, x)?;
    Ok(match geom {
        SpaceForm::Spherical => (a.cos() - t0.cos() * r0.cos()) / (t0.sin() * r0.sin()),
        SpaceForm::Hyperbolic => {
            (t0.cosh() * r0.cosh() - a.cosh()) / (t0.sinh() * r0.sinh())
        }
        SpaceForm::Euclidean => (t0 * t0 + r0 * r0 - a * a) / (2.0 * t0 * r0),
    })
}

/// Reflection across the geodesic through `q(t0)` perpendicular to the axis.
pub fn reflect(geom: SpaceForm, t0: f64, x: Point) -> Result<Point> {
    let a = geom.lift(x)?;
    let nu = geom.axis_tangent(t0);
    let s = 2.0 * half_domain_criterion(geom, t0, x)?;
    let r: Vec3 = std::array::from_fn(|k| a[k] - s * nu[k]);
    Ok(geom.project(r))
}

/// `⟨x, q′(t0)⟩` for the lifted point; positive on the far side of the
/// reflection geodesic, where the inner circle is closest to the outer one.
pub fn half_domain_criterion(geom: SpaceForm, t0: f64, x: Point) -> Result<f64> {
    let a = geom.lift(x)?;
    let nu = geom.axis_tangent(t0);
    Ok(geom.ambient_dot(a, nu)
        - match geom {
            // The affine plane needs the hyperplane through q(t0), not the origin.
            SpaceForm::Euclidean => t0,
            _ => 0.0,
        })
}

/// Fractional-linear map `w = (z − c − a) / (1 − (z − c)/b)` sending an
/// eccentric circle pair on the x-axis to circles centred at the origin.
///
/// `c` is the outer centre and `a`, `b` (relative to `c`) are the common
/// inverse points of the pair. `b` is stored as its reciprocal so the
/// concentric case is the identity with `a = 0`, `1/b = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusMap {
    pub shift: f64,
    pub a: f64,
    pub inv_b: f64,
}

impl MobiusMap {
    pub const IDENTITY: MobiusMap = MobiusMap {
        shift: 0.0,
        a: 0.0,
        inv_b: 0.0,
    };

    pub fn is_identity(&self) -> bool {
        self.a == 0.0 && self.inv_b == 0.0 && self.shift == 0.0
    }

    /// The inverse point inside the inner circle, in chart coordinates.
    pub fn inner_pole(&self) -> f64 {
        self.shift + self.a
    }

    /// The inverse point outside the outer circle, in chart coordinates
    /// (infinite for the identity).
    pub fn outer_pole(&self) -> f64 {
        self.shift + 1.0 / self.inv_b
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        let z = z - self.shift;
        (z - self.a) / (1.0 - z * self.inv_b)
    }

    pub fn invert(&self, w: Complex64) -> Complex64 {
        (w + self.a) / (1.0 + w * self.inv_b) + self.shift
    }
}

/// Builds the map that makes `inner` and `outer` concentric, returning it with
/// the image radii `(ρ0, ρ1)`, `ρ0 < ρ1`.
pub fn mobius_concentricize(
    outer: Circle2D,
    inner: Circle2D,
) -> Result<(MobiusMap, f64, f64)> {
    let d = inner.center - outer.center;
    let (r1, r0) = (outer.radius, inner.radius);
    if d.abs() + r0 >= r1 {
        return Err(Error::Geometry(format!(
            "inner circle (c = {}, R = {r0}) is not strictly inside outer circle (c = {}, R = {r1})",
            inner.center, outer.center
        )));
    }
    if d == 0.0 {
        let map = MobiusMap {
            shift: outer.center,
            ..MobiusMap::IDENTITY
        };
        return Ok((map, r0, r1));
    }
    // With the outer centre at the origin the inverse points satisfy
    // a·b = r1² and (a − d)(b − d) = r0², so a + b = n/d with
    // n = r1² − r0² + d². The root of smaller magnitude is the inner one; the
    // form below avoids cancellation as d → 0.
    let n = r1 * r1 - r0 * r0 + d * d;
    let disc = n * n - 4.0 * r1 * r1 * d * d;
    if disc <= 0.0 {
        return Err(Error::Geometry("circles touch or intersect".into()));
    }
    let a = 2.0 * r1 * r1 * d / (n + disc.sqrt());
    let inv_b = a / (r1 * r1);
    if (a - d).abs() >= r0 || (1.0 / inv_b).abs() <= r1 {
        return Err(Error::Geometry(
            "inverse points are not separated by the circle pair".into(),
        ));
    }
    let map = MobiusMap {
        shift: outer.center,
        a,
        inv_b,
    };
    let rho = |c: &Circle2D| {
        map.apply(Complex64::new(c.center + c.radius, 0.0)).norm()
    };
    let (rho_in, rho_out) = (rho(&inner), rho(&outer));
    if !(rho_in < rho_out) {
        return Err(Error::Geometry(format!(
            "image radii out of order: inner {rho_in}, outer {rho_out}"
        )));
    }
    Ok((map, rho_in, rho_out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const PI: f64 = std::f64::consts::PI;

    #[test]
    fn conformal_factor_values() {
        assert_eq!(SpaceForm::Spherical.conformal_factor(Point::ORIGIN).unwrap(), 2.0);
        assert_eq!(SpaceForm::Euclidean.conformal_factor(Point::new(3.0, -7.0)).unwrap(), 1.0);
        let l = SpaceForm::Hyperbolic.conformal_factor(Point::new(0.3, 0.4)).unwrap();
        assert_relative_eq!(l, 8.0 / 3.0, max_relative = 1e-15);
        assert!(matches!(
            SpaceForm::Hyperbolic.conformal_factor(Point::new(0.6, 0.8)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn model_radius_values_and_inverse() {
        assert_relative_eq!(SpaceForm::Spherical.model_radius(1.0).unwrap(), 0.5463024898, epsilon = 1e-10);
        assert_relative_eq!(SpaceForm::Hyperbolic.model_radius(1.0).unwrap(), 0.4621171573, epsilon = 1e-10);
        for g in SpaceForm::ALL {
            assert_eq!(g.model_radius(0.0).unwrap(), 0.0);
            for s in [0.01, 0.3, 1.0, 2.5, -1.7] {
                let m = g.model_radius(s).unwrap();
                assert!((g.geodesic_radius(m).unwrap() - s).abs() < 1e-12);
            }
        }
        assert!(SpaceForm::Spherical.model_radius(PI).is_err());
        assert!(SpaceForm::Hyperbolic.geodesic_radius(1.0).is_err());
    }

    #[test]
    fn ball_to_disk_examples() {
        for g in SpaceForm::ALL {
            let c = geodesic_ball_to_disk(g, 0.0, 0.3).unwrap();
            assert_eq!(c.center, 0.0);
            assert_eq!(c.radius, g.model_radius(0.3).unwrap());
        }
        // Oracle: tan(0.25), tan(−0.05).
        let c = geodesic_ball_to_disk(SpaceForm::Spherical, 0.2, 0.3).unwrap();
        let (far, near) = (0.25f64.tan(), (-0.05f64).tan());
        assert_relative_eq!(c.center, 0.5 * (far + near), epsilon = 1e-15);
        assert_relative_eq!(c.center, 0.10265011, epsilon = 1e-8);
        assert_relative_eq!(c.radius, 0.15269182, epsilon = 1e-8);
        for g in [SpaceForm::Spherical, SpaceForm::Hyperbolic] {
            let c = geodesic_ball_to_disk(g, 0.2, 0.3).unwrap();
            let q = g.axis_point(0.2).unwrap();
            for k in 0..360 {
                let x = c.point_at(2.0 * PI * k as f64 / 360.0);
                assert!((g.geodesic_distance(q, x).unwrap() - 0.3).abs() < tol::GEOMETRY);
            }
        }
    }

    #[test]
    fn distance_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for g in SpaceForm::ALL {
            for s in [0.1, 0.9, 1.4] {
                let d = g.geodesic_distance(Point::ORIGIN, g.axis_point(s).unwrap()).unwrap();
                assert_relative_eq!(d, s, epsilon = 1e-13);
            }
            for _ in 0..100 {
                let x = Point::new(rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7));
                let y = Point::new(rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7));
                assert_eq!(g.geodesic_distance(x, y).unwrap(), g.geodesic_distance(y, x).unwrap());
            }
        }
        let g = SpaceForm::Spherical;
        for _ in 0..100 {
            let x = Point::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let y = Point::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let (a, b) = (g.lift(x).unwrap(), g.lift(y).unwrap());
            let oracle = dot(a, b).clamp(-1.0, 1.0).acos();
            assert!((g.geodesic_distance(x, y).unwrap() - oracle).abs() < 1e-10);
        }
        let g = SpaceForm::Hyperbolic;
        for _ in 0..100 {
            let x = Point::new(rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6));
            let y = Point::new(rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6));
            let (a, b) = (g.lift(x).unwrap(), g.lift(y).unwrap());
            let oracle = (-g.ambient_dot(a, b)).acosh();
            assert!((g.geodesic_distance(x, y).unwrap() - oracle).abs() < 1e-10);
        }
    }

    #[test]
    fn lift_conventions() {
        for g in SpaceForm::ALL {
            assert_eq!(g.lift(Point::ORIGIN).unwrap(), [0.0, 0.0, 1.0]);
        }
        let t = 0.7;
        let a = SpaceForm::Spherical.lift(SpaceForm::Spherical.axis_point(t).unwrap()).unwrap();
        for (u, v) in a.iter().zip([0.0, t.sin(), t.cos()]) {
            assert!((u - v).abs() < 1e-15);
        }
        let a = SpaceForm::Hyperbolic.lift(SpaceForm::Hyperbolic.axis_point(t).unwrap()).unwrap();
        for (u, v) in a.iter().zip([0.0, t.sinh(), t.cosh()]) {
            assert!((u - v).abs() < 1e-14);
        }
        let a = SpaceForm::Hyperbolic.lift(Point::new(0.3, -0.55)).unwrap();
        assert!((a[0] * a[0] + a[1] * a[1] - a[2] * a[2] + 1.0).abs() < 1e-12);
        let a = SpaceForm::Spherical.lift(Point::new(1.3, -0.55)).unwrap();
        assert!((dot(a, a) - 1.0).abs() < 1e-12);
        for g in SpaceForm::ALL {
            let x = Point::new(0.31, -0.42);
            let y = g.project(g.lift(x).unwrap());
            assert!(x.dist(y) < 1e-15);
        }
    }

    #[test]
    fn vn_axial_points_and_concentric_case() {
        for g in SpaceForm::ALL {
            let (t0, r0) = (0.35, 0.3);
            let far = g.axis_point(t0 + r0).unwrap();
            let near = g.axis_point(t0 - r0).unwrap();
            assert!((vn_ambient(g, t0, r0, far).unwrap() + 1.0).abs() < 1e-12);
            assert!((vn_ambient(g, t0, r0, near).unwrap() - 1.0).abs() < 1e-12);
            assert!((cos_beta(g, t0, r0, far).unwrap() + 1.0).abs() < 1e-10);
            assert!((cos_beta(g, t0, r0, near).unwrap() - 1.0).abs() < 1e-10);

            let c = geodesic_ball_to_disk(g, 0.0, r0).unwrap();
            for k in 0..64 {
                let angle = 2.0 * PI * k as f64 / 64.0;
                let x = c.point_at(angle);
                assert!((vn_ambient(g, 0.0, r0, x).unwrap() + angle.cos()).abs() < 1e-12);
            }
            assert!(matches!(cos_beta(g, 0.0, r0, c.point_at(1.0)), Err(Error::Degenerate(_))));
        }
        assert!(matches!(
            vn_ambient(SpaceForm::Spherical, 0.2, 0.3, Point::new(0.5, 0.5)),
            Err(Error::InvalidPoint(_))
        ));
    }

    #[test]
    fn cos_beta_matches_vn_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for g in SpaceForm::ALL {
            for t0 in [0.1, 0.35, 0.6, -0.4] {
                let c = geodesic_ball_to_disk(g, t0, 0.3).unwrap();
                for _ in 0..1000 {
                    let x = c.point_at(rng.gen_range(0.0..2.0 * PI));
                    let lhs = cos_beta(g, t0, 0.3, x).unwrap();
                    let rhs = vn_ambient(g, t0, 0.3, x).unwrap();
                    assert!((lhs - rhs).abs() < tol::GEOMETRY, "{g:?} t0={t0}: {lhs} vs {rhs}");
                    assert!(lhs.abs() <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn reflection_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for g in SpaceForm::ALL {
            let (t0, r0) = (0.35, 0.3);
            let q = g.axis_point(t0).unwrap();
            assert!(reflect(g, t0, q).unwrap().dist(q) < 1e-14);
            let a = reflect(g, t0, g.axis_point(t0 + 0.1).unwrap()).unwrap();
            assert!(a.dist(g.axis_point(t0 - 0.1).unwrap()) < 1e-14);
            for _ in 0..100 {
                let x = Point::new(rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6));
                assert!(reflect(g, t0, reflect(g, t0, x).unwrap()).unwrap().dist(x) < 1e-12);
            }
            let c = geodesic_ball_to_disk(g, t0, r0).unwrap();
            for _ in 0..200 {
                let x = c.point_at(rng.gen_range(0.0..2.0 * PI));
                let xr = reflect(g, t0, x).unwrap();
                assert!(c.deviation(xr).abs() < tol::GEOMETRY);
                let crit = half_domain_criterion(g, t0, x).unwrap();
                let cb = cos_beta(g, t0, r0, x).unwrap();
                let cbr = cos_beta(g, t0, r0, xr).unwrap();
                assert!((cb + cbr).abs() < tol::GEOMETRY);
                if crit > 1e-9 {
                    assert!(cb < 0.0);
                }
            }
        }
    }

    #[test]
    fn mobius_examples() {
        let outer = Circle2D::new(0.0, 1.0).unwrap();
        let (m, r0, r1) = mobius_concentricize(outer, Circle2D::new(0.0, 0.3).unwrap()).unwrap();
        assert!(m.is_identity());
        assert_eq!((r0, r1), (0.3, 1.0));

        let inner = Circle2D::new(0.2, 0.3).unwrap();
        let (m, r0, r1) = mobius_concentricize(outer, inner).unwrap();
        // Oracle: roots of s² − 4.75 s + 1.
        let disc: f64 = 4.75 * 4.75 - 4.0;
        let (lo, hi) = ((4.75 - disc.sqrt()) / 2.0, (4.75 + disc.sqrt()) / 2.0);
        assert_relative_eq!(m.inner_pole(), lo, max_relative = 1e-12);
        assert_relative_eq!(m.outer_pole(), hi, max_relative = 1e-12);
        assert_relative_eq!(lo, 0.22079, epsilon = 1e-5);
        assert_relative_eq!(hi, 4.52921, epsilon = 1e-5);
        assert_relative_eq!(m.inner_pole() * m.outer_pole(), 1.0, max_relative = 1e-12);
        assert!(r0 < r1);
        for k in 0..360 {
            let angle = 2.0 * PI * k as f64 / 360.0;
            let wi = m.apply(inner.point_at(angle).to_complex()).norm();
            let wo = m.apply(outer.point_at(angle).to_complex()).norm();
            assert!((wi - r0).abs() < 1e-12);
            assert!((wo - r1).abs() < 1e-12);
        }
        assert!(mobius_concentricize(outer, Circle2D::new(0.7, 0.3).unwrap()).is_err());
        assert!(mobius_concentricize(outer, Circle2D::new(0.75, 0.3).unwrap()).is_err());
    }

    fn circumcircle(p: [Complex64; 3]) -> (Complex64, f64) {
        let (a, b, c) = (p[0], p[1], p[2]);
        let d = 2.0 * (a.re * (b.im - c.im) + b.re * (c.im - a.im) + c.re * (a.im - b.im));
        let ux = (a.norm_sqr() * (b.im - c.im) + b.norm_sqr() * (c.im - a.im) + c.norm_sqr() * (a.im - b.im)) / d;
        let uy = (a.norm_sqr() * (c.re - b.re) + b.norm_sqr() * (a.re - c.re) + c.norm_sqr() * (b.re - a.re)) / d;
        let center = Complex64::new(ux, uy);
        (center, (a - center).norm())
    }

    #[test]
    fn mobius_is_conformal_on_orthogonal_circles() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (m, _, _) = mobius_concentricize(
            Circle2D::new(0.0, 1.0).unwrap(),
            Circle2D::new(0.35, 0.25).unwrap(),
        )
        .unwrap();
        for _ in 0..10 {
            let c1 = Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
            let r1: f64 = rng.gen_range(0.1..0.3);
            let phi: f64 = rng.gen_range(0.0..2.0 * PI);
            let r2: f64 = rng.gen_range(0.1..0.3);
            let c2 = c1 + Complex64::from_polar((r1 * r1 + r2 * r2).sqrt(), phi);
            let image = |c: Complex64, r: f64| {
                let pts: [Complex64; 3] = std::array::from_fn(|k| {
                    m.apply(c + Complex64::from_polar(r, 2.0 * PI * k as f64 / 3.0 + 0.1))
                });
                circumcircle(pts)
            };
            let (d1, s1) = image(c1, r1);
            let (d2, s2) = image(c2, r2);
            let lhs = (d1 - d2).norm_sqr();
            let rhs = s1 * s1 + s2 * s2;
            assert!((lhs - rhs).abs() <= 1e-8 * rhs, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn mobius_inverse_round_trip() {
        let (m, _, _) = mobius_concentricize(
            Circle2D::new(0.0, 0.55).unwrap(),
            Circle2D::new(-0.2, 0.2).unwrap(),
        )
        .unwrap();
        for k in 0..100 {
            let z = Complex64::from_polar(0.05 + 0.5 * k as f64 / 100.0, k as f64);
            assert!((m.invert(m.apply(z)) - z).norm() < 1e-12);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(AnnulusSpec::new(SpaceForm::Spherical, 0.3, 1.0, 0.69).is_ok());
        assert!(AnnulusSpec::new(SpaceForm::Spherical, 0.3, 1.0, 0.7).is_err());
        assert!(AnnulusSpec::new(SpaceForm::Spherical, 0.3, 3.2, 0.0).is_err());
        assert!(AnnulusSpec::new(SpaceForm::Hyperbolic, 0.0, 1.0, 0.0).is_err());
        assert!(AnnulusSpec::new(SpaceForm::Euclidean, 0.6, 0.5, 0.0).is_err());
    }
}
