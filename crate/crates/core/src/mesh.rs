//! Structured triangulations of the eccentric annulus.
//!
//! The chart annulus is first made concentric by a Möbius map; a polar grid
//! with log-spaced radii and uniform angles is laid on the concentric image
//! and pulled back. Möbius maps send circles to circles, so both boundary
//! loops land exactly on the original circles.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{mobius_concentricize, AnnulusSpec, Circle2D, Point};
use crate::tol;

pub const MAX_LEVEL: u32 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub nodes: Vec<Point>,
    /// Counterclockwise node triples.
    pub triangles: Vec<[usize; 3]>,
    /// Closed loop on the inner circle, counterclockwise, first node not repeated.
    pub inner_boundary: Vec<usize>,
    pub outer_boundary: Vec<usize>,
    pub refinement_level: u32,
    pub inner_circle: Circle2D,
    pub outer_circle: Circle2D,
}

/// Number of radial intervals and angular nodes at refinement level `level`.
pub fn grid_size(level: u32) -> (usize, usize) {
    (8 << level, 32 << level)
}

pub fn build_annulus_mesh(spec: &AnnulusSpec, level: u32) -> Result<TriMesh> {
    spec.validate()?;
    if level > MAX_LEVEL {
        return Err(Error::Mesh(format!(
            "refinement level {level} exceeds the maximum {MAX_LEVEL}"
        )));
    }
    let outer = spec.outer_circle()?;
    let inner = spec.inner_circle()?;
    let (map, rho0, rho1) = mobius_concentricize(outer, inner)?;
    let (n_r, n_theta) = grid_size(level);

    let log_ratio = (rho1 / rho0).ln();
    let radii: Vec<f64> = (0..=n_r)
        .map(|i| match i {
            0 => rho0,
            i if i == n_r => rho1,
            i => rho0 * (log_ratio * i as f64 / n_r as f64).exp(),
        })
        .collect();
    let angles: Vec<(f64, f64)> = (0..n_theta)
        .map(|j| unit_direction(j, n_theta))
        .collect();

    let mut nodes = Vec::with_capacity((n_r + 1) * n_theta);
    for &rho in &radii {
        for &(c, s) in &angles {
            let z = map.invert(Complex64::new(rho * c, rho * s));
            nodes.push(Point::from_complex(z));
        }
    }
    // Boundary rows are snapped radially onto their circles; the Möbius
    // round-off is far below the validator tolerance but this keeps the
    // boundary exact for the flux and Hadamard quadratures.
    for (row, circle) in [(0, &inner), (n_r, &outer)] {
        for node in &mut nodes[row * n_theta..(row + 1) * n_theta] {
            let dx = node.x - circle.center;
            let r = dx.hypot(node.y);
            *node = Point::new(
                circle.center + circle.radius * dx / r,
                circle.radius * node.y / r,
            );
        }
    }

    let idx = |i: usize, j: usize| i * n_theta + (j % n_theta);
    let mut triangles = Vec::with_capacity(2 * n_r * n_theta);
    for i in 0..n_r {
        for j in 0..n_theta {
            let a = idx(i, j);
            let b = idx(i + 1, j);
            let c = idx(i + 1, j + 1);
            let d = idx(i, j + 1);
            if (i + j) % 2 == 0 {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }

    Ok(TriMesh {
        nodes,
        triangles,
        inner_boundary: (0..n_theta).map(|j| idx(0, j)).collect(),
        outer_boundary: (0..n_theta).map(|j| idx(n_r, j)).collect(),
        refinement_level: level,
        inner_circle: inner,
        outer_circle: outer,
    })
}

/// `(cos, sin)` of `2πj/n`, computed so that the directions for `j` and
/// `n/2 − j` are exact mirror images (`cos` negated, `sin` equal).
fn unit_direction(j: usize, n: usize) -> (f64, f64) {
    debug_assert!(n.is_multiple_of(4));
    let quarter = n / 4;
    let (quadrant, k) = (j / quarter, j % quarter);
    let phi = std::f64::consts::FRAC_PI_2 * k as f64 / quarter as f64;
    // Use the smaller of the angle and its complement for symmetric rounding.
    let (c, s) = if 2 * k <= quarter {
        let (s, c) = phi.sin_cos();
        (c, s)
    } else {
        let (s, c) = (std::f64::consts::FRAC_PI_2 * (quarter - k) as f64 / quarter as f64).sin_cos();
        (s, c)
    };
    match quadrant {
        0 => (c, s),
        1 => (-s, c),
        2 => (-c, -s),
        _ => (s, -c),
    }
}

impl TriMesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn signed_area(&self, tri: [usize; 3]) -> f64 {
        let [a, b, c] = tri.map(|k| self.nodes[k]);
        0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y))
    }

    /// All nodes on either boundary loop, sorted.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        let mut nodes: Vec<usize> = self
            .inner_boundary
            .iter()
            .chain(&self.outer_boundary)
            .copied()
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    pub fn max_edge_length(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|t| {
                [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])]
                    .map(|(a, b)| self.nodes[a].dist(self.nodes[b]))
            })
            .fold(0.0, f64::max)
    }

    /// Mirror image `(x, y) → (−x, y)`, relabelled so that node `(i, j)`
    /// of the grid maps to node `(i, n/2 − j)`. For a mesh built at offset
    /// `t` this reproduces the mesh built at `−t`.
    pub fn mirrored(&self) -> TriMesh {
        let n_theta = self.inner_boundary.len();
        let perm = |k: usize| {
            let (i, j) = (k / n_theta, k % n_theta);
            i * n_theta + (n_theta / 2 + n_theta - j) % n_theta
        };
        let mut nodes = vec![Point::ORIGIN; self.nodes.len()];
        for (k, p) in self.nodes.iter().enumerate() {
            nodes[perm(k)] = Point::new(-p.x, p.y);
        }
        let mirror_circle = |c: Circle2D| Circle2D {
            center: -c.center,
            radius: c.radius,
        };
        TriMesh {
            nodes,
            triangles: self
                .triangles
                .iter()
                .map(|t| [perm(t[0]), perm(t[2]), perm(t[1])])
                .collect(),
            inner_boundary: (0..n_theta).map(|j| perm(self.inner_boundary[j])).collect(),
            outer_boundary: (0..n_theta).map(|j| perm(self.outer_boundary[j])).collect(),
            refinement_level: self.refinement_level,
            inner_circle: mirror_circle(self.inner_circle),
            outer_circle: mirror_circle(self.outer_circle),
        }
    }

    /// Plain-text dump: `v x y`, `t i j k`, `bi …`, `bo …`, 0-based indices.
    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        for p in &self.nodes {
            writeln!(out, "v {:.17e} {:.17e}", p.x, p.y)?;
        }
        for t in &self.triangles {
            writeln!(out, "t {} {} {}", t[0], t[1], t[2])?;
        }
        for (tag, lp) in [("bi", &self.inner_boundary), ("bo", &self.outer_boundary)] {
            write!(out, "{tag}")?;
            for k in lp {
                write!(out, " {k}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Reads the format of [`TriMesh::write_text`]. Circles are refitted from
    /// the boundary loops; the refinement level is not part of the format.
    pub fn read_text<R: BufRead>(input: R) -> Result<TriMesh> {
        let bad = |line: usize, msg: &str| Error::Mesh(format!("line {}: {msg}", line + 1));
        let mut nodes = Vec::new();
        let mut triangles = Vec::new();
        let mut inner = Vec::new();
        let mut outer = Vec::new();
        for (n, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::Mesh(e.to_string()))?;
            let mut it = line.split_whitespace();
            let Some(tag) = it.next() else { continue };
            match tag {
                "v" => {
                    let v: Vec<f64> = it
                        .map(|s| s.parse().map_err(|_| bad(n, "bad coordinate")))
                        .collect::<Result<_>>()?;
                    let [x, y] = v[..] else { return Err(bad(n, "expected 2 coordinates")) };
                    nodes.push(Point::new(x, y));
                }
                "t" | "bi" | "bo" => {
                    let v: Vec<usize> = it
                        .map(|s| s.parse().map_err(|_| bad(n, "bad index")))
                        .collect::<Result<_>>()?;
                    match tag {
                        "t" => {
                            let [a, b, c] = v[..] else { return Err(bad(n, "expected 3 indices")) };
                            triangles.push([a, b, c]);
                        }
                        "bi" => inner = v,
                        _ => outer = v,
                    }
                }
                _ => return Err(bad(n, "unknown record")),
            }
        }
        if inner.len() < 3 || outer.len() < 3 {
            return Err(Error::Mesh("missing boundary loops".into()));
        }
        let fit = |lp: &[usize]| -> Result<Circle2D> {
            let pts: Vec<Point> = lp
                .iter()
                .map(|&k| nodes.get(k).copied().ok_or_else(|| Error::Mesh(format!("index {k} out of range"))))
                .collect::<Result<_>>()?;
            let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.x), hi.max(p.x))
            });
            Circle2D::new(0.5 * (lo + hi), 0.5 * (hi - lo))
        };
        Ok(TriMesh {
            inner_circle: fit(&inner)?,
            outer_circle: fit(&outer)?,
            nodes,
            triangles,
            inner_boundary: inner,
            outer_boundary: outer,
            refinement_level: 0,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    IndexOutOfRange { triangle: usize },
    NonPositiveArea { triangle: usize, area: f64 },
    OffCircle { node: usize, outer: bool, deviation: f64 },
    LoopNotSimple { outer: bool },
    EulerCharacteristic { value: i64 },
    EdgeSharing { edge: (usize, usize), count: usize, boundary: bool },
    LowQuality { triangle: usize, quality: f64 },
}

#[derive(Debug, Clone)]
pub struct MeshReport {
    pub violations: Vec<Violation>,
    /// Minimum of `2 r_in / r_circ` over triangles (1 for equilateral).
    pub min_quality: f64,
    pub max_edge: f64,
    pub num_nodes: usize,
    pub num_edges: usize,
    pub num_triangles: usize,
}

impl MeshReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

fn triangle_quality(p: [Point; 3]) -> f64 {
    let a = p[1].dist(p[2]);
    let b = p[2].dist(p[0]);
    let c = p[0].dist(p[1]);
    let s = 0.5 * (a + b + c);
    // 2 r_in / r_circ = 8 (s−a)(s−b)(s−c) / (abc)
    (8.0 * (s - a) * (s - b) * (s - c) / (a * b * c)).max(0.0)
}

/// Checks every mesh invariant and collects the violations.
pub fn validate_mesh(mesh: &TriMesh) -> MeshReport {
    let mut violations = Vec::new();
    let n = mesh.nodes.len();
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    let mut min_quality = f64::INFINITY;

    for (k, t) in mesh.triangles.iter().enumerate() {
        if t.iter().any(|&v| v >= n) {
            violations.push(Violation::IndexOutOfRange { triangle: k });
            continue;
        }
        let area = mesh.signed_area(*t);
        if !(area > 0.0) {
            violations.push(Violation::NonPositiveArea { triangle: k, area });
        }
        let q = triangle_quality(t.map(|v| mesh.nodes[v]));
        min_quality = min_quality.min(q);
        if q < tol::MIN_QUALITY {
            violations.push(Violation::LowQuality { triangle: k, quality: q });
        }
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            *edges.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }

    let mut boundary_edges = std::collections::HashSet::new();
    for (lp, circle, outer) in [
        (&mesh.inner_boundary, &mesh.inner_circle, false),
        (&mesh.outer_boundary, &mesh.outer_circle, true),
    ] {
        let mut seen = std::collections::HashSet::new();
        if lp.len() < 3 || !lp.iter().all(|&v| v < n && seen.insert(v)) {
            violations.push(Violation::LoopNotSimple { outer });
            continue;
        }
        for &v in lp.iter() {
            let deviation = circle.deviation(mesh.nodes[v]);
            if deviation.abs() > tol::ALGEBRAIC {
                violations.push(Violation::OffCircle { node: v, outer, deviation });
            }
        }
        for k in 0..lp.len() {
            let (a, b) = (lp[k], lp[(k + 1) % lp.len()]);
            boundary_edges.insert((a.min(b), a.max(b)));
        }
    }

    let mut sorted: Vec<_> = edges.iter().map(|(&e, &c)| (e, c)).collect();
    sorted.sort_unstable();
    for (edge, count) in sorted {
        let boundary = boundary_edges.contains(&edge);
        let expected = if boundary { 1 } else { 2 };
        if count != expected {
            violations.push(Violation::EdgeSharing { edge, count, boundary });
        }
    }
    for &edge in &boundary_edges {
        if !edges.contains_key(&edge) {
            violations.push(Violation::EdgeSharing { edge, count: 0, boundary: true });
        }
    }

    let euler = n as i64 - edges.len() as i64 + mesh.triangles.len() as i64;
    if euler != 0 {
        violations.push(Violation::EulerCharacteristic { value: euler });
    }

    MeshReport {
        violations,
        min_quality,
        max_edge: mesh.max_edge_length(),
        num_nodes: n,
        num_edges: edges.len(),
        num_triangles: mesh.triangles.len(),
    }
}
