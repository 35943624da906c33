//! Mesh-refinement study against the radial oracles on a concentric annulus.

use std::ops::RangeInclusive;

use spaceform::mesh::grid_size;
use spaceform::oracle::{radial_j, radial_lambda1, radial_torsion};
use spaceform::{AnnulusSpec, Discretization, Point, Result, SpaceForm};

/// Errors at one refinement level, relative to the oracle scale of each
/// quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub level: u32,
    pub j: f64,
    pub lambda1: f64,
    pub err_j: f64,
    pub err_lambda1: f64,
    /// Torsion error at the node of chart radius `√(ρ0 ρ1)` on the x-axis.
    pub err_probe: f64,
    pub err_max_nodal: f64,
    /// Worst relative error of the recovered inner-boundary flux.
    pub err_flux: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Orders {
    pub j: f64,
    pub lambda1: f64,
    pub probe: f64,
    pub max_nodal: f64,
    pub flux: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub geom: SpaceForm,
    pub r0: f64,
    pub r1: f64,
    pub rows: Vec<ConvergenceRow>,
    pub orders: Orders,
}

/// Least-squares slope of `−log₂ err` against the level.
pub fn fitted_order(levels: &[u32], errors: &[f64]) -> f64 {
    let n = levels.len() as f64;
    let xs: Vec<f64> = levels.iter().map(|&l| l as f64).collect();
    let ys: Vec<f64> = errors.iter().map(|e| -e.log2()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

pub fn convergence(geom: SpaceForm, r0: f64, r1: f64, levels: RangeInclusive<u32>) -> Result<ConvergenceStudy> {
    let spec = AnnulusSpec::new(geom, r0, r1, 0.0)?;
    let u = radial_torsion(geom, r0, r1)?;
    let j_exact = radial_j(geom, r0, r1)?;
    let lambda_exact = radial_lambda1(geom, r0, r1)?;
    let u_max = (0..=10_000)
        .map(|k| u.u(r0 + (r1 - r0) * k as f64 / 10_000.0))
        .fold(0.0, f64::max);
    let flux_exact = -u.du(r0);
    let radius = |x: Point| geom.geodesic_distance(Point::ORIGIN, x);

    let mut rows = Vec::new();
    for level in levels {
        let disc = Discretization::new(&spec, level)?;
        let torsion = disc.torsion()?;
        let eigen = disc.eigen()?;
        let mesh = &disc.mesh;
        let mut err_max_nodal = 0.0f64;
        for (k, &x) in mesh.nodes.iter().enumerate() {
            err_max_nodal = err_max_nodal.max((torsion.y.values[k] - u.u(radius(x)?)).abs());
        }
        let (n_r, n_theta) = grid_size(level);
        let probe = (n_r / 2) * n_theta;
        let err_probe = (torsion.y.values[probe] - u.u(radius(mesh.nodes[probe])?)).abs();
        let err_flux = torsion
            .inner_flux
            .metric
            .iter()
            .map(|g| (g - flux_exact).abs())
            .fold(0.0, f64::max);
        rows.push(ConvergenceRow {
            level,
            j: torsion.j,
            lambda1: eigen.lambda1,
            err_j: (torsion.j - j_exact).abs() / j_exact,
            err_lambda1: (eigen.lambda1 - lambda_exact).abs() / lambda_exact,
            err_probe: err_probe / u_max,
            err_max_nodal: err_max_nodal / u_max,
            err_flux: err_flux / flux_exact.abs(),
        });
    }
    let levels: Vec<u32> = rows.iter().map(|r| r.level).collect();
    let order = |f: fn(&ConvergenceRow) -> f64| {
        fitted_order(&levels, &rows.iter().map(f).collect::<Vec<_>>())
    };
    let orders = Orders {
        j: order(|r| r.err_j),
        lambda1: order(|r| r.err_lambda1),
        probe: order(|r| r.err_probe),
        max_nodal: order(|r| r.err_max_nodal),
        flux: order(|r| r.err_flux),
    };
    Ok(ConvergenceStudy { geom, r0, r1, rows, orders })
}

impl ConvergenceStudy {
    pub const CSV_HEADER: &'static str = "L,J,lambda1,err_J,err_lambda1,err_probe,err_max_nodal,err_flux";

    /// CSV table with one row per level and a final `order` row.
    pub fn to_csv(&self) -> String {
        let f = |v: f64| format!("{v:.11e}");
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let cells = [
                r.level.to_string(),
                f(r.j),
                f(r.lambda1),
                f(r.err_j),
                f(r.err_lambda1),
                f(r.err_probe),
                f(r.err_max_nodal),
                f(r.err_flux),
            ];
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        let o = &self.orders;
        let cells = [
            "order".to_string(),
            String::new(),
            String::new(),
            f(o.j),
            f(o.lambda1),
            f(o.probe),
            f(o.max_nodal),
            f(o.flux),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
        out
    }
}
