//! The verification suite behind `spaceform verify`.

use std::fmt;

use spaceform::geometry::{cos_beta, reflect, vn_ambient};
use spaceform::mesh::{build_annulus_mesh, validate_mesh};
use spaceform::shape::{reflection_report, sweep, SweepRow};
use spaceform::{AnnulusSpec, Discretization, Result, SpaceForm};

use crate::canonical::{self, oracle_radii, PROBE_T, R0, R1};
use crate::convergence::convergence;

/// Deliberate faults used to confirm that the suite detects them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Injection {
    /// Negate cos β before comparing it with the normal velocity.
    CosBetaSign,
    /// Negate the recovered inner-boundary flux.
    FluxSign,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: String,
    pub threshold: String,
    pub pass: bool,
}

impl Check {
    fn below(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            measured: format!("{value:.3e}"),
            threshold: format!("< {limit:.1e}"),
            pass: value < limit,
        }
    }

    fn above(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            measured: format!("{value:.3e}"),
            threshold: format!("> {limit:.1e}"),
            pass: value > limit,
        }
    }

    fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            measured: format!("{value:.4}"),
            threshold: format!("in [{lo}, {hi}]"),
            pass: (lo..=hi).contains(&value),
        }
    }

    fn count_zero(name: impl Into<String>, failures: usize, total: usize) -> Self {
        Self {
            name: name.into(),
            measured: format!("{failures} of {total} failing"),
            threshold: "0 failing".into(),
            pass: failures == 0 && total > 0,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{status}  {:<62} {:>22}  ({})", self.name, self.measured, self.threshold)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub level: u32,
    pub delta: f64,
    pub injection: Option<Injection>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { level: canonical::LEVEL, delta: canonical::DELTA, injection: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Normal-velocity identity and reflection properties on sampled points of
/// the inner circle.
fn geometry_checks(geom: SpaceForm, injection: Option<Injection>) -> Result<Vec<Check>> {
    let tag = geom.tag();
    let mut identity = 0.0f64;
    let mut involution = 0.0f64;
    let mut circle = 0.0f64;
    for t0 in [0.1, 0.35, 0.6] {
        let spec = AnnulusSpec::new(geom, R0, R1, t0)?;
        let c = spec.inner_circle()?;
        for k in 0..1000 {
            let x = c.point_at(std::f64::consts::TAU * (k as f64 + 0.5) / 1000.0);
            let mut cb = cos_beta(geom, t0, R0, x)?;
            if injection == Some(Injection::CosBetaSign) {
                cb = -cb;
            }
            identity = identity.max((cb - vn_ambient(geom, t0, R0, x)?).abs());
            let xr = reflect(geom, t0, x)?;
            involution = involution.max(reflect(geom, t0, xr)?.dist(x));
            circle = circle.max(c.deviation(xr).abs());
        }
    }
    let mesh = build_annulus_mesh(&AnnulusSpec::new(geom, R0, R1, 0.6)?, canonical::LEVEL)?;
    let report = validate_mesh(&mesh);
    Ok(vec![
        Check::below(format!("[{tag}] normal velocity identity cos β = <V,n>"), identity, 1e-10),
        Check::below(format!("[{tag}] reflection is an involution"), involution, 1e-10),
        Check::below(format!("[{tag}] reflection maps the inner circle to itself"), circle, 1e-10),
        Check::count_zero(format!("[{tag}] mesh invariants at t = 0.6"), report.violations.len(), report.num_triangles),
    ])
}

fn sweep_checks(geom: SpaceForm, opts: &VerifyOptions) -> Result<Vec<Check>> {
    let tag = geom.tag();
    let grid = canonical::t_grid();
    let mut ts = grid.clone();
    ts.extend([PROBE_T, -PROBE_T]);
    let rows = sweep(geom, R0, R1, &ts, opts.level, opts.delta)?;
    let at = |t: f64| rows.iter().find(|r| r.t == t).expect("offset is part of the sweep");
    let grid_rows: Vec<&SweepRow> = grid.iter().map(|&t| at(t)).collect();
    let positive: Vec<&SweepRow> = rows.iter().filter(|r| r.t >= 0.1).collect();

    let min_dj_step = grid_rows.windows(2).map(|w| w[1].j - w[0].j).fold(f64::INFINITY, f64::min);
    let min_dl_step = grid_rows.windows(2).map(|w| w[0].lambda1 - w[1].lambda1).fold(f64::INFINITY, f64::min);
    let energy = rows.iter().map(|r| r.energy_identity_residual).fold(0.0, f64::max);
    let zero = at(0.0);
    let stationarity = (zero.dj_bnd.abs() / zero.dj_bnd_scale).max(zero.dlam_bnd.abs() / zero.dlam_bnd_scale);
    let (p, m) = (at(PROBE_T), at(-PROBE_T));
    let evenness = rel(m.j, p.j).max(rel(m.lambda1, p.lambda1));
    let antisymmetry = (rel(-m.dj_bnd, p.dj_bnd)).max(rel(-m.dlam_bnd, p.dlam_bnd));
    let min_dj = positive.iter().map(|r| r.dj_bnd).fold(f64::INFINITY, f64::min);
    let max_dl = positive.iter().map(|r| r.dlam_bnd).fold(f64::NEG_INFINITY, f64::max);
    let fd_j_probe = rel(p.dj_bnd, p.dj_fd);
    let fd_l_probe = rel(p.dlam_bnd, p.dlam_fd);
    let green = positive.iter().map(|r| rel(r.dj_vol, r.dj_bnd)).fold(0.0, f64::max);
    // Finite differences of the discrete functionals carry the t-derivative
    // of the discretization error, which grows as the gap closes; the
    // all-offset cross-check is run one level finer.
    let fine_level = opts.level + 1;
    let mut fine_ts: Vec<f64> = grid.iter().copied().filter(|&t| t >= 0.1).collect();
    fine_ts.push(-PROBE_T);
    let fine = sweep(geom, R0, R1, &fine_ts, fine_level, opts.delta)?;
    let worst = |f: fn(&SweepRow) -> f64| fine.iter().map(f).fold(0.0, f64::max);
    let fd_j = worst(|r| rel(r.dj_bnd, r.dj_fd));
    let fd_l = worst(|r| rel(r.dlam_bnd, r.dlam_fd));
    let vol_fd = worst(|r| rel(r.dj_vol, r.dj_fd));
    let refl = |f: fn(&SweepRow) -> Option<bool>| positive.iter().filter(|r| f(r) != Some(true)).count();

    Ok(vec![
        Check::above(format!("[{tag}] J strictly increasing on t = 0..0.6 (min step)"), min_dj_step, 0.0),
        Check::above(format!("[{tag}] λ1 strictly decreasing on t = 0..0.6 (min step)"), min_dl_step, 0.0),
        Check::below(format!("[{tag}] energy identity J = ∫|∇y|²"), energy, 1e-9),
        Check::below(format!("[{tag}] stationarity at t = 0 (relative to ∫|integrand|)"), stationarity, spaceform::tol::STATIONARITY),
        Check::below(format!("[{tag}] evenness of J and λ1 at t = ±{PROBE_T}"), evenness, 1e-10),
        Check::below(format!("[{tag}] antisymmetry of boundary derivatives at t = ±{PROBE_T}"), antisymmetry, 1e-8),
        Check::above(format!("[{tag}] sign law dJ_bnd > 0 for t ≥ 0.1 (min)"), min_dj, 0.0),
        Check::above(format!("[{tag}] sign law dlam_bnd < 0 for t ≥ 0.1 (−max)"), -max_dl, 0.0),
        Check::below(format!("[{tag}] dJ_bnd vs dJ_fd at t = {PROBE_T}, L = {}", opts.level), fd_j_probe, 0.05),
        Check::below(format!("[{tag}] dlam_bnd vs dlam_fd at t = {PROBE_T}, L = {}", opts.level), fd_l_probe, 0.05),
        Check::below(format!("[{tag}] dJ_vol vs dJ_bnd (Green identity), t ≥ 0.1"), green, 0.02),
        Check::below(format!("[{tag}] dJ_bnd vs dJ_fd, |t| ≥ 0.1, L = {fine_level}"), fd_j, 0.05),
        Check::below(format!("[{tag}] dlam_bnd vs dlam_fd, |t| ≥ 0.1, L = {fine_level}"), fd_l, 0.05),
        Check::below(format!("[{tag}] dJ_vol vs dJ_fd, |t| ≥ 0.1, L = {fine_level}"), vol_fd, 0.05),
        Check::count_zero(format!("[{tag}] reflection inequality, torsion flux"), refl(|r| r.reflection_torsion), positive.len()),
        Check::count_zero(format!("[{tag}] reflection inequality, eigen flux"), refl(|r| r.reflection_eigen), positive.len()),
    ])
}

/// Boundary-flux sign, eigenfunction normalization and the sign structure of
/// cos β on reflection pairs at the probe offset.
fn flux_checks(geom: SpaceForm, opts: &VerifyOptions) -> Result<Vec<Check>> {
    let tag = geom.tag();
    let spec = AnnulusSpec::new(geom, R0, R1, PROBE_T)?;
    let disc = Discretization::new(&spec, opts.level)?;
    let torsion = disc.torsion()?;
    let eigen = disc.eigen()?;
    let sign = if opts.injection == Some(Injection::FluxSign) { -1.0 } else { 1.0 };
    let max_flux = torsion
        .inner_flux
        .metric
        .iter()
        .chain(&eigen.inner_flux.metric)
        .map(|g| sign * g)
        .fold(f64::NEG_INFINITY, f64::max);
    let pairs = reflection_report(&torsion.inner_flux, torsion.mesh(), &spec)?.pairs;
    let max_cb = pairs.iter().map(|p| p.cos_beta).fold(f64::NEG_INFINITY, f64::max);
    let mirror = pairs.iter().map(|p| (p.cos_beta + p.cos_beta_reflected).abs()).fold(0.0, f64::max);
    Ok(vec![
        Check::above(format!("[{tag}] Hopf sign: inner-boundary fluxes negative (−max)"), -max_flux, 0.0),
        Check::below(format!("[{tag}] eigenfunction normalization |∫y1² − 1|"), (eigen.l2_norm_sqr() - 1.0).abs(), 1e-10),
        Check::above(format!("[{tag}] cos β < 0 on half-domain pairs (−max)"), -max_cb, 0.0),
        Check::below(format!("[{tag}] cos β(x') = −cos β(x) on pairs"), mirror, 1e-10),
    ])
}

fn convergence_checks(geom: SpaceForm) -> Result<Vec<Check>> {
    let tag = geom.tag();
    let (r0, r1) = oracle_radii(geom);
    let study = convergence(geom, r0, r1, canonical::CONVERGENCE_LEVELS)?;
    let at3 = study.rows.iter().find(|r| r.level == canonical::LEVEL).expect("level 3 is in the study");
    let monotone = study.rows.windows(2).all(|w| {
        w[1].err_j < w[0].err_j && w[1].err_lambda1 < w[0].err_lambda1 && w[1].err_max_nodal < w[0].err_max_nodal
    });
    let o = &study.orders;
    let mut checks = vec![
        Check::below(format!("[{tag}] torsion max nodal error / max u at L = 3"), at3.err_max_nodal, 1e-3),
        Check::within(format!("[{tag}] torsion max nodal error order, L = 2..5"), o.max_nodal, 1.8, 2.2),
        Check::within(format!("[{tag}] J error order"), o.j, 1.8, 2.2),
        Check::within(format!("[{tag}] probe value error order"), o.probe, 1.8, 2.2),
        Check::below(format!("[{tag}] λ1 relative error at L = 3"), at3.err_lambda1, 5e-3),
        Check::within(format!("[{tag}] λ1 error order"), o.lambda1, 1.8, 2.2),
        Check::above(format!("[{tag}] inner flux error order"), o.flux, 1.5),
    ];
    checks.push(Check {
        name: format!("[{tag}] errors decrease monotonically with L"),
        measured: monotone.to_string(),
        threshold: "true".into(),
        pass: monotone,
    });
    Ok(checks)
}

/// Runs every check for all three geometries. Solver failures become
/// failing checks so the table is always complete.
pub fn run(opts: &VerifyOptions) -> VerifyReport {
    let mut checks = Vec::new();
    for geom in SpaceForm::ALL {
        let groups: [(&str, Result<Vec<Check>>); 4] = [
            ("geometry", geometry_checks(geom, opts.injection)),
            ("sweep", sweep_checks(geom, opts)),
            ("flux", flux_checks(geom, opts)),
            ("convergence", convergence_checks(geom)),
        ];
        for (group, result) in groups {
            match result {
                Ok(c) => checks.extend(c),
                Err(e) => checks.push(Check {
                    name: format!("[{}] {group} suite", geom.tag()),
                    measured: e.to_string(),
                    threshold: "no error".into(),
                    pass: false,
                }),
            }
        }
    }
    VerifyReport { checks }
}
