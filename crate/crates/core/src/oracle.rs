//! Reference solutions on concentric annuli.
//!
//! For concentric balls the torsion function is radial and solves
//! `(sn u′)′ = −sn` with `sn ∈ {sin, id, sinh}`, which integrates in closed
//! form. The first eigenvalue comes from the radial Sturm–Liouville problem
//! `(sn φ′)′ + λ sn φ = 0`, solved by shooting and double-checked with a 1-D
//! finite-element eigensolve.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::SpaceForm;

fn check_radii(geom: SpaceForm, r0: f64, r1: f64) -> Result<()> {
    if !(r0 > 0.0 && r1 > r0 && r1.is_finite()) {
        return Err(Error::Domain(format!("radii must satisfy 0 < r0 < r1 (got {r0}, {r1})")));
    }
    if geom == SpaceForm::Spherical && r1 >= PI {
        return Err(Error::Domain(format!("spherical radius {r1} must be below π")));
    }
    Ok(())
}

/// `u(r) = P(r) + C·H(r) + D` with `P` a particular solution of the radial
/// torsion equation and `H` the radial harmonic function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialTorsion {
    pub geom: SpaceForm,
    pub r0: f64,
    pub r1: f64,
    pub c: f64,
    pub d: f64,
}

/// Values `(P, P′, P″)` of the particular solution.
fn particular(geom: SpaceForm, r: f64) -> [f64; 3] {
    match geom {
        SpaceForm::Spherical => {
            let (s, c) = r.sin_cos();
            [s.ln(), c / s, -1.0 / (s * s)]
        }
        SpaceForm::Euclidean => [-0.25 * r * r, -0.5 * r, -0.5],
        SpaceForm::Hyperbolic => {
            let (s, c) = (r.sinh(), r.cosh());
            [-s.ln(), -c / s, 1.0 / (s * s)]
        }
    }
}

/// Values `(H, H′, H″)` of the radial harmonic function.
fn harmonic(geom: SpaceForm, r: f64) -> [f64; 3] {
    match geom {
        SpaceForm::Spherical => {
            let (s, c) = r.sin_cos();
            [(0.5 * r).tan().ln(), 1.0 / s, -c / (s * s)]
        }
        SpaceForm::Euclidean => [r.ln(), 1.0 / r, -1.0 / (r * r)],
        SpaceForm::Hyperbolic => {
            let (s, c) = (r.sinh(), r.cosh());
            [(0.5 * r).tanh().ln(), 1.0 / s, -c / (s * s)]
        }
    }
}

pub fn radial_torsion(geom: SpaceForm, r0: f64, r1: f64) -> Result<RadialTorsion> {
    check_radii(geom, r0, r1)?;
    let (p0, p1) = (particular(geom, r0)[0], particular(geom, r1)[0]);
    let (h0, h1) = (harmonic(geom, r0)[0], harmonic(geom, r1)[0]);
    let c = -(p1 - p0) / (h1 - h0);
    let d = -p0 - c * h0;
    Ok(RadialTorsion { geom, r0, r1, c, d })
}

impl RadialTorsion {
    fn parts(&self, r: f64) -> ([f64; 3], [f64; 3]) {
        (particular(self.geom, r), harmonic(self.geom, r))
    }

    pub fn u(&self, r: f64) -> f64 {
        let (p, h) = self.parts(r);
        p[0] + self.c * h[0] + self.d
    }

    pub fn du(&self, r: f64) -> f64 {
        let (p, h) = self.parts(r);
        p[1] + self.c * h[1]
    }

    pub fn d2u(&self, r: f64) -> f64 {
        let (p, h) = self.parts(r);
        p[2] + self.c * h[2]
    }

    /// `Δ_g u = u″ + (sn′/sn) u′`; equals −1 for the torsion function.
    pub fn laplacian(&self, r: f64) -> f64 {
        self.d2u(r) + self.geom.cs(r) / self.geom.sn(r) * self.du(r)
    }
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn step<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `∫ u dV = 2π ∫ u(r) sn(r) dr` on the concentric annulus.
pub fn radial_j(geom: SpaceForm, r0: f64, r1: f64) -> Result<f64> {
    let u = radial_torsion(geom, r0, r1)?;
    Ok(2.0 * PI * adaptive_simpson(&|r| u.u(r) * geom.sn(r), r0, r1, 1e-12))
}

const SHOOTING_STEPS: usize = 10_000;

/// Integrates `φ′ = ψ/sn, ψ′ = −λ sn φ` from `(φ, ψ)(r0) = (0, 1)` with RK4,
/// returning `φ(r1)` and the number of sign changes of `φ` on `(r0, r1]`.
fn shoot(geom: SpaceForm, r0: f64, r1: f64, lambda: f64) -> (f64, usize) {
    let h = (r1 - r0) / SHOOTING_STEPS as f64;
    let rhs = |r: f64, y: [f64; 2]| {
        let s = geom.sn(r);
        [y[1] / s, -lambda * s * y[0]]
    };
    let mut y = [0.0, 1.0];
    let mut sign_changes = 0;
    let mut prev = 0.0f64;
    for k in 0..SHOOTING_STEPS {
        let r = r0 + k as f64 * h;
        let k1 = rhs(r, y);
        let k2 = rhs(r + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = rhs(r + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = rhs(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        for i in 0..2 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if prev != 0.0 && y[0] * prev < 0.0 {
            sign_changes += 1;
        }
        prev = y[0];
    }
    (y[0], sign_changes)
}

/// First radial Dirichlet eigenvalue by shooting and bisection.
pub fn radial_lambda1_shooting(geom: SpaceForm, r0: f64, r1: f64) -> Result<f64> {
    check_radii(geom, r0, r1)?;
    let string = (PI / (r1 - r0)).powi(2);
    let step = 0.25 * string;
    let mut lo = 0.0;
    let mut hi = None;
    for k in 1..=400 {
        let lambda = k as f64 * step;
        let (end, changes) = shoot(geom, r0, r1, lambda);
        if end <= 0.0 {
            // Just past λ1 the first zero has entered the interval; a second
            // one means the scan stepped over λ2 as well.
            if changes > 1 {
                return Err(Error::Oracle(format!(
                    "bracket [{lo}, {lambda}] skipped an eigenvalue ({changes} sign changes of φ)"
                )));
            }
            hi = Some(lambda);
            break;
        }
        lo = lambda;
    }
    let Some(mut hi) = hi else {
        return Err(Error::Oracle(format!(
            "no sign change of φ(r1) below λ = {}",
            400.0 * step
        )));
    };
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if shoot(geom, r0, r1, mid).0 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// First radial Dirichlet eigenvalue from P1 elements on `n` uniform intervals.
pub fn radial_lambda1_fem(geom: SpaceForm, r0: f64, r1: f64, n: usize) -> Result<f64> {
    check_radii(geom, r0, r1)?;
    if n < 2 {
        return Err(Error::Oracle("need at least two intervals".into()));
    }
    let h = (r1 - r0) / n as f64;
    // Antiderivative of sn for exact stiffness weights.
    let sn_int = |r: f64| match geom {
        SpaceForm::Spherical => -r.cos(),
        SpaceForm::Euclidean => 0.5 * r * r,
        SpaceForm::Hyperbolic => r.cosh(),
    };
    let m = n - 1;
    let mut kd = vec![0.0; m];
    let mut ko = vec![0.0; m];
    let mut md = vec![0.0; m];
    let mut mo = vec![0.0; m];
    for e in 0..n {
        let (a, b) = (r0 + e as f64 * h, r0 + (e + 1) as f64 * h);
        let stiff = (sn_int(b) - sn_int(a)) / (h * h);
        let (sa, sm, sb) = (geom.sn(a), geom.sn(0.5 * (a + b)), geom.sn(b));
        // Simpson on the products of the two hat functions.
        let (maa, mab, mbb) = (h / 6.0 * (sa + sm), h / 6.0 * sm, h / 6.0 * (sm + sb));
        // Unknown k corresponds to node k + 1.
        if e >= 1 {
            kd[e - 1] += stiff;
            md[e - 1] += maa;
        }
        if e < m {
            kd[e] += stiff;
            md[e] += mbb;
        }
        if e >= 1 && e < m {
            ko[e - 1] -= stiff;
            mo[e - 1] += mab;
        }
    }
    let tri_mul = |d: &[f64], o: &[f64], x: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|i| {
                let mut v = d[i] * x[i];
                if i > 0 {
                    v += o[i - 1] * x[i - 1];
                }
                if i + 1 < m {
                    v += o[i] * x[i + 1];
                }
                v
            })
            .collect()
    };
    let tri_solve = |rhs: &[f64]| -> Vec<f64> {
        let mut c = vec![0.0; m];
        let mut y = vec![0.0; m];
        let mut denom = kd[0];
        if m > 1 {
            c[0] = ko[0] / denom;
        }
        y[0] = rhs[0] / denom;
        for i in 1..m {
            denom = kd[i] - ko[i - 1] * c[i - 1];
            if i + 1 < m {
                c[i] = ko[i] / denom;
            }
            y[i] = (rhs[i] - ko[i - 1] * y[i - 1]) / denom;
        }
        for i in (0..m.saturating_sub(1)).rev() {
            y[i] -= c[i] * y[i + 1];
        }
        y
    };
    let mut u = vec![1.0; m];
    let mut lambda_prev = f64::INFINITY;
    for _ in 0..10_000 {
        let mu = tri_mul(&md, &mo, &u);
        let v = tri_solve(&mu);
        let mv = tri_mul(&md, &mo, &v);
        let s = v.iter().zip(&mv).map(|(a, b)| a * b).sum::<f64>().sqrt();
        u = v.iter().map(|x| x / s).collect();
        let ku = tri_mul(&kd, &ko, &u);
        let lambda: f64 = u.iter().zip(&ku).map(|(a, b)| a * b).sum();
        if (lambda - lambda_prev).abs() < 1e-14 * lambda {
            return Ok(lambda);
        }
        lambda_prev = lambda;
    }
    Err(Error::Oracle("1-D inverse iteration did not converge".into()))
}

/// First radial Dirichlet eigenvalue of the concentric annulus: shooting,
/// verified against the 1-D finite-element eigensolve to `1e−6` relative.
pub fn radial_lambda1(geom: SpaceForm, r0: f64, r1: f64) -> Result<f64> {
    let shooting = radial_lambda1_shooting(geom, r0, r1)?;
    let fem = radial_lambda1_fem(geom, r0, r1, 10_000)?;
    let rel = (shooting - fem).abs() / shooting;
    if rel > 1e-6 {
        return Err(Error::Oracle(format!(
            "shooting ({shooting}) and 1-D FEM ({fem}) disagree by {rel:e}"
        )));
    }
    Ok(shooting)
}
