//! Hadamard boundary-integral derivatives along the axis-translating field,
//! the reflection-pair flux comparison, and offset sweeps with
//! finite-difference cross-checks.

use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::BoundaryFlux;
use crate::geometry::{cos_beta, half_domain_criterion, reflect, vn_ambient, AnnulusSpec, Point, SpaceForm};
use crate::mesh::TriMesh;
use crate::problems::{solve_shape_bvp, Discretization, EigenSolution, TorsionSolution};
use crate::tol;

/// A boundary integral together with the integral of the absolute value of
/// its integrand, the natural scale for deciding whether it vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HadamardIntegral {
    pub value: f64,
    pub abs_integral: f64,
}

impl HadamardIntegral {
    /// `|value| ≤ rel · ∫|integrand|`.
    pub fn is_negligible(&self, rel: f64) -> bool {
        self.value.abs() <= rel * self.abs_integral
    }
}

/// `∫_{∂B0} (∂u/∂n)² ⟨V, n⟩ dS` by the trapezoid rule on the inner loop, with
/// `dS = λ dℓ`.
fn flux_squared_integral(mesh: &TriMesh, spec: &AnnulusSpec, flux: &BoundaryFlux) -> Result<HadamardIntegral> {
    let n = flux.len();
    if n < 3 {
        return Err(Error::Mesh("inner loop has fewer than three nodes".into()));
    }
    let integrand = flux
        .nodes
        .iter()
        .zip(&flux.metric)
        .map(|(&k, &g)| {
            let x = mesh.nodes[k];
            let vn = vn_ambient(spec.geom, spec.t, spec.r0, x)?;
            Ok(g * g * vn * spec.geom.conformal_factor(x)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut value = 0.0;
    let mut abs_integral = 0.0;
    for k in 0..n {
        let next = (k + 1) % n;
        let len = mesh.nodes[flux.nodes[k]].dist(mesh.nodes[flux.nodes[next]]);
        value += 0.5 * len * (integrand[k] + integrand[next]);
        abs_integral += 0.5 * len * (integrand[k].abs() + integrand[next].abs());
    }
    Ok(HadamardIntegral { value, abs_integral })
}

/// `j′(t0) = ∫_{∂B0} (∂y/∂n)² cos β dS` for the torsion function.
pub fn dj_boundary(torsion: &TorsionSolution) -> Result<HadamardIntegral> {
    flux_squared_integral(torsion.mesh(), torsion.spec(), &torsion.inner_flux)
}

/// `λ1′(t0) = −∫_{∂B0} (∂y1/∂n)² cos β dS` for the normalized eigenfunction.
pub fn dlambda_boundary(eigen: &EigenSolution) -> Result<HadamardIntegral> {
    let i = flux_squared_integral(eigen.mesh(), eigen.spec(), &eigen.inner_flux)?;
    Ok(HadamardIntegral { value: -i.value, abs_integral: i.abs_integral })
}

/// A boundary point on the half-domain side, its mirror image, and the flux
/// magnitudes at both.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionPair {
    pub x: Point,
    pub x_reflected: Point,
    pub flux: f64,
    pub flux_reflected: f64,
    pub cos_beta: f64,
    pub cos_beta_reflected: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionReport {
    pub pairs: Vec<ReflectionPair>,
    pub all_strict: bool,
}

impl ReflectionReport {
    /// Smallest `|flux(x′)| − |flux(x)|` over the pairs.
    pub fn min_margin(&self) -> f64 {
        self.pairs
            .iter()
            .map(|p| p.flux_reflected - p.flux)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Piecewise-linear periodic interpolation of nodal values on the inner
/// circle, parametrized by the angle about its Euclidean centre (proportional
/// to arc length).
struct LoopInterpolant {
    center: Point,
    angles: Vec<f64>,
    values: Vec<f64>,
}

impl LoopInterpolant {
    fn new(mesh: &TriMesh, nodes: &[usize], values: &[f64]) -> Self {
        let center = Point::new(mesh.inner_circle.center, 0.0);
        let mut samples: Vec<(f64, f64)> = nodes
            .iter()
            .zip(values)
            .map(|(&k, &v)| (Self::angle(center, mesh.nodes[k]), v))
            .collect();
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (angles, values) = samples.into_iter().unzip();
        Self { center, angles, values }
    }

    fn angle(center: Point, x: Point) -> f64 {
        (x.y - center.y).atan2(x.x - center.x).rem_euclid(TAU)
    }

    fn eval(&self, x: Point) -> f64 {
        let n = self.angles.len();
        let theta = Self::angle(self.center, x);
        let hi = self.angles.partition_point(|&a| a <= theta);
        let (i0, i1) = ((hi + n - 1) % n, hi % n);
        let (a0, mut a1) = (self.angles[i0], self.angles[i1]);
        let mut th = theta;
        if a1 <= a0 {
            a1 += TAU;
            if th < a0 {
                th += TAU;
            }
        }
        let w = (th - a0) / (a1 - a0);
        (1.0 - w) * self.values[i0] + w * self.values[i1]
    }
}

/// Compares `|∂u/∂n|` at inner-boundary nodes on the half-domain side with
/// its value at the reflected points.
pub fn reflection_report(flux: &BoundaryFlux, mesh: &TriMesh, spec: &AnnulusSpec) -> Result<ReflectionReport> {
    let t0 = spec.t;
    if t0 <= 0.0 {
        return Err(Error::Degenerate(format!(
            "reflection comparison needs a positive offset (got {t0})"
        )));
    }
    let magnitudes: Vec<f64> = flux.metric.iter().map(|g| g.abs()).collect();
    let interp = LoopInterpolant::new(mesh, &flux.nodes, &magnitudes);
    let mut pairs = Vec::new();
    for (&k, &m) in flux.nodes.iter().zip(&magnitudes) {
        let x = mesh.nodes[k];
        if half_domain_criterion(spec.geom, t0, x)? <= tol::HALF_DOMAIN_MARGIN {
            continue;
        }
        let xr = reflect(spec.geom, t0, x)?;
        pairs.push(ReflectionPair {
            x,
            x_reflected: xr,
            flux: m,
            flux_reflected: interp.eval(xr),
            cos_beta: cos_beta(spec.geom, t0, spec.r0, x)?,
            cos_beta_reflected: cos_beta(spec.geom, t0, spec.r0, xr)?,
        });
    }
    let all_strict = !pairs.is_empty() && pairs.iter().all(|p| p.flux < p.flux_reflected);
    Ok(ReflectionReport { pairs, all_strict })
}

/// One offset of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub geom: SpaceForm,
    pub r0: f64,
    pub r1: f64,
    pub t: f64,
    pub level: u32,
    pub j: f64,
    pub lambda1: f64,
    pub dj_bnd: f64,
    pub dj_vol: f64,
    pub dlam_bnd: f64,
    pub dj_fd: f64,
    pub dlam_fd: f64,
    /// `∫|integrand|` of the two boundary integrals.
    pub dj_bnd_scale: f64,
    pub dlam_bnd_scale: f64,
    /// Reflection comparison for the torsion and eigen fluxes, for `t > 0`.
    pub reflection_torsion: Option<bool>,
    pub reflection_eigen: Option<bool>,
    pub energy_identity_residual: f64,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str = "geom,r0,r1,t,L,J,lambda1,dJ_bnd,dJ_vol,dlam_bnd,dJ_fd,dlam_fd";

    /// CSV record with 12 significant digits.
    pub fn csv_record(&self) -> String {
        let f = |v: f64| format!("{v:.11e}");
        [
            self.geom.tag().to_string(),
            f(self.r0),
            f(self.r1),
            f(self.t),
            self.level.to_string(),
            f(self.j),
            f(self.lambda1),
            f(self.dj_bnd),
            f(self.dj_vol),
            f(self.dlam_bnd),
            f(self.dj_fd),
            f(self.dlam_fd),
        ]
        .join(",")
    }
}

/// `J` and `λ1` at one offset.
fn functionals(spec: &AnnulusSpec, level: u32) -> Result<(f64, f64)> {
    let disc = Discretization::new(spec, level)?;
    Ok((disc.torsion()?.j, disc.eigen()?.lambda1))
}

fn sweep_row(base: &AnnulusSpec, t: f64, level: u32, delta: f64) -> Result<SweepRow> {
    let spec = base.with_offset(t)?;
    let plus = base.with_offset(t + delta)?;
    let minus = base.with_offset(t - delta)?;
    let (centre, (fp, fm)) = rayon::join(
        || -> Result<_> {
            let disc = Discretization::new(&spec, level)?;
            let torsion = disc.torsion()?;
            let eigen = disc.eigen()?;
            let dj = dj_boundary(&torsion)?;
            let dl = dlambda_boundary(&eigen)?;
            let (_, dj_vol) = solve_shape_bvp(&torsion)?;
            let reflections = if t > 0.0 {
                (
                    Some(reflection_report(&torsion.inner_flux, torsion.mesh(), &spec)?.all_strict),
                    Some(reflection_report(&eigen.inner_flux, eigen.mesh(), &spec)?.all_strict),
                )
            } else {
                (None, None)
            };
            Ok((torsion.j, eigen.lambda1, torsion.energy_identity_residual(), dj, dl, dj_vol, reflections))
        },
        || rayon::join(|| functionals(&plus, level), || functionals(&minus, level)),
    );
    let (j, lambda1, energy_identity_residual, dj, dl, dj_vol, (rt, re)) = centre?;
    let ((jp, lp), (jm, lm)) = (fp?, fm?);
    Ok(SweepRow {
        geom: spec.geom,
        r0: spec.r0,
        r1: spec.r1,
        t,
        level,
        j,
        lambda1,
        dj_bnd: dj.value,
        dj_vol,
        dlam_bnd: dl.value,
        dj_fd: (jp - jm) / (2.0 * delta),
        dlam_fd: (lp - lm) / (2.0 * delta),
        dj_bnd_scale: dj.abs_integral,
        dlam_bnd_scale: dl.abs_integral,
        reflection_torsion: rt,
        reflection_eigen: re,
        energy_identity_residual,
    })
}

/// Solves at every offset in `ts` and at `t ± δ`; rows are returned in input
/// order.
pub fn sweep(geom: SpaceForm, r0: f64, r1: f64, ts: &[f64], level: u32, delta: f64) -> Result<Vec<SweepRow>> {
    let base = AnnulusSpec::new(geom, r0, r1, 0.0)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidSpec(format!("finite-difference step {delta} must be positive")));
    }
    for &t in ts {
        if !(t.is_finite() && t.abs() + delta < r1 - r0) {
            return Err(Error::InvalidSpec(format!(
                "offset {t} with step {delta} leaves the admissible range |t| < {}",
                r1 - r0
            )));
        }
    }
    ts.par_iter()
        .map(|&t| sweep_row(&base, t, level, delta).map_err(|e| e.context(&format!("offset t = {t}"))))
        .collect()
}
