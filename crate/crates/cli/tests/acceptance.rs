//! The ten acceptance criteria. Each prints one `criterion N: PASS|FAIL`
//! line; the test fails if any criterion fails.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spaceform::geometry::{cos_beta, vn_ambient};
use spaceform::oracle::{radial_lambda1, radial_torsion};
use spaceform::problems::{solve_eigen, solve_torsion};
use spaceform::shape::{sweep, SweepRow};
use spaceform::{AnnulusSpec, Point, SpaceForm};

/// Inner radius of every sweep.
const R0: f64 = 0.3;
const R1: f64 = 1.0;
const LEVEL: u32 = 3;
const DELTA: f64 = 1e-3;
const PROBE_T: f64 = 0.35;
const LEVELS: [u32; 4] = [2, 3, 4, 5];

type Outcome = Result<String, String>;

/// Inner radius of the concentric oracle annulus.
fn r0_of(geom: SpaceForm) -> f64 {
    match geom {
        SpaceForm::Euclidean => 0.5,
        _ => 0.3,
    }
}

fn grid() -> Vec<f64> {
    (0..=6).map(|k| k as f64 / 10.0).collect()
}

/// Least-squares slope of −log₂(err) against the level.
fn order(errs: &[f64]) -> f64 {
    let xs: Vec<f64> = LEVELS.iter().map(|&l| l as f64).collect();
    let ys: Vec<f64> = errs.iter().map(|e| -e.log2()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Sweep rows over the canonical grid plus ±0.35, per geometry.
struct Sweeps(HashMap<SpaceForm, Vec<SweepRow>>);

impl Sweeps {
    fn compute() -> Result<Self, String> {
        let mut ts = grid();
        ts.extend([PROBE_T, -PROBE_T]);
        let mut rows = HashMap::new();
        for geom in SpaceForm::ALL {
            let r = sweep(geom, R0, R1, &ts, LEVEL, DELTA).map_err(|e| e.to_string())?;
            rows.insert(geom, r);
        }
        Ok(Sweeps(rows))
    }

    fn at(&self, geom: SpaceForm, t: f64) -> &SweepRow {
        self.0[&geom].iter().find(|r| (r.t - t).abs() < 1e-12).expect("offset in sweep")
    }

    fn on_grid(&self, geom: SpaceForm) -> Vec<&SweepRow> {
        grid().into_iter().map(|t| self.at(geom, t)).collect()
    }
}

fn criterion_1() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    let mut slowest = Duration::ZERO;
    for geom in SpaceForm::ALL {
        let r0 = r0_of(geom);
        let exact = radial_torsion(geom, r0, R1).map_err(|e| e.to_string())?;
        let spec = AnnulusSpec::new(geom, r0, R1, 0.0).map_err(|e| e.to_string())?;
        let mut errs = Vec::new();
        for level in LEVELS {
            let start = Instant::now();
            let sol = solve_torsion(&spec, level).map_err(|e| e.to_string())?;
            slowest = slowest.max(start.elapsed());
            let (mut err, mut umax) = (0.0f64, 0.0f64);
            for (k, &p) in sol.mesh().nodes.iter().enumerate() {
                let r = geom.geodesic_distance(Point::ORIGIN, p).map_err(|e| e.to_string())?;
                err = err.max((sol.y.values[k] - exact.u(r)).abs());
                umax = umax.max(exact.u(r));
            }
            errs.push(err / umax);
        }
        let p = order(&errs);
        ok &= errs[1] < 1e-3 && (1.8..=2.2).contains(&p);
        details.push(format!("{} err(L=3) {:.2e} order {:.3}", geom.tag(), errs[1], p));
    }
    ok &= slowest < Duration::from_secs(10);
    details.push(format!("slowest solve {:.2} s", slowest.as_secs_f64()));
    check(ok, details.join("; "))
}

fn criterion_2() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for geom in SpaceForm::ALL {
        let r0 = r0_of(geom);
        let exact = radial_lambda1(geom, r0, R1).map_err(|e| e.to_string())?;
        let spec = AnnulusSpec::new(geom, r0, R1, 0.0).map_err(|e| e.to_string())?;
        let errs = LEVELS
            .iter()
            .map(|&l| solve_eigen(&spec, l).map(|s| rel(s.lambda1, exact)).map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        let p = order(&errs);
        ok &= errs[1] < 5e-3 && (1.8..=2.2).contains(&p);
        details.push(format!("{} err(L=3) {:.2e} order {:.3}", geom.tag(), errs[1], p));
    }
    check(ok, details.join("; "))
}

fn monotone(sweeps: &Sweeps, value: fn(&SweepRow) -> f64, increasing: bool) -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for geom in [SpaceForm::Spherical, SpaceForm::Hyperbolic] {
        let col: Vec<f64> = sweeps.on_grid(geom).into_iter().map(value).collect();
        let min_step = col
            .windows(2)
            .map(|w| if increasing { w[1] - w[0] } else { w[0] - w[1] })
            .fold(f64::INFINITY, f64::min);
        ok &= min_step > 0.0;
        details.push(format!("{} min step {:.3e}", geom.tag(), min_step));
    }
    check(ok, details.join("; "))
}

fn criterion_5(sweeps: &Sweeps) -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for geom in SpaceForm::ALL {
        let row = sweeps.at(geom, PROBE_T);
        let e = rel(row.dlam_bnd, row.dlam_fd);
        ok &= e < 0.05 && row.dlam_bnd < 0.0;
        details.push(format!("{} dlam_bnd {:.5} rel {:.2e}", geom.tag(), row.dlam_bnd, e));
    }
    check(ok, details.join("; "))
}

fn criterion_6(sweeps: &Sweeps) -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for geom in SpaceForm::ALL {
        let row = sweeps.at(geom, PROBE_T);
        let vals = [row.dj_bnd, row.dj_vol, row.dj_fd];
        let worst = [(0, 1), (0, 2), (1, 2)]
            .iter()
            .map(|&(a, b)| (vals[a] - vals[b]).abs() / vals[a].abs().min(vals[b].abs()))
            .fold(0.0, f64::max);
        ok &= worst < 0.05 && vals.iter().all(|&v| v > 0.0);
        details.push(format!("{} dJ {:.5}/{:.5}/{:.5} worst {:.2e}", geom.tag(), vals[0], vals[1], vals[2], worst));
    }
    check(ok, details.join("; "))
}

fn criterion_7(sweeps: &Sweeps) -> Outcome {
    let mut ok = true;
    let (mut stat, mut even) = (0.0f64, 0.0f64);
    for geom in SpaceForm::ALL {
        let row = sweeps.at(geom, 0.0);
        let (sj, sl) = (row.dj_bnd.abs() / row.dj_bnd_scale, row.dlam_bnd.abs() / row.dlam_bnd_scale);
        ok &= sj < 1e-6 && sl < 1e-6;
        stat = stat.max(sj).max(sl);
        let (plus, minus) = (sweeps.at(geom, PROBE_T), sweeps.at(geom, -PROBE_T));
        let e = (plus.j - minus.j).abs() / plus.j.abs();
        ok &= e < 1e-10;
        even = even.max(e);
    }
    check(ok, format!("max stationarity ratio {stat:.2e}; max evenness {even:.2e}"))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for geom in [SpaceForm::Spherical, SpaceForm::Hyperbolic] {
        for t in [0.1, 0.35, 0.6] {
            let spec = AnnulusSpec::new(geom, R0, R1, t).map_err(|e| e.to_string())?;
            let circle = spec.inner_circle().map_err(|e| e.to_string())?;
            for _ in 0..1000 {
                let x = circle.point_at(rng.gen_range(0.0..TAU));
                let cb = cos_beta(geom, t, spec.r0, x).map_err(|e| e.to_string())?;
                let vn = vn_ambient(geom, t, spec.r0, x).map_err(|e| e.to_string())?;
                worst = worst.max((cb - vn).abs());
            }
        }
    }
    check(worst < 1e-10, format!("max |cos_beta - vn| {worst:.2e}"))
}

fn criterion_9(sweeps: &Sweeps) -> Outcome {
    let mut checked = 0;
    let mut failures = Vec::new();
    for geom in SpaceForm::ALL {
        for row in sweeps.on_grid(geom).into_iter().filter(|r| r.t >= 0.1 - 1e-12) {
            checked += 1;
            if row.reflection_torsion != Some(true) || row.reflection_eigen != Some(true) {
                failures.push(format!("{} t={}", geom.tag(), row.t));
            }
        }
    }
    check(
        failures.is_empty(),
        format!("{checked} offsets checked, failing: [{}]", failures.join(", ")),
    )
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_spaceform"))
        .arg("verify")
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let summary = String::from_utf8_lossy(&out.stdout).lines().last().unwrap_or("").to_string();
    check(
        out.status.success() && elapsed < Duration::from_secs(600),
        format!("exit {:?} in {:.0} s: {summary}", out.status.code(), elapsed.as_secs_f64()),
    )
}

#[test]
fn acceptance() {
    let sweeps = Sweeps::compute();
    let with_sweeps = |f: &dyn Fn(&Sweeps) -> Outcome| match &sweeps {
        Ok(s) => f(s),
        Err(e) => Err(format!("sweep failed: {e}")),
    };
    let results = [
        criterion_1(),
        criterion_2(),
        with_sweeps(&|s| monotone(s, |r| r.j, true)),
        with_sweeps(&|s| monotone(s, |r| r.lambda1, false)),
        with_sweeps(&criterion_5),
        with_sweeps(&criterion_6),
        with_sweeps(&criterion_7),
        criterion_8(),
        with_sweeps(&criterion_9),
        criterion_10(),
    ];
    let mut failed = Vec::new();
    for (k, result) in results.iter().enumerate() {
        match result {
            Ok(detail) => println!("criterion {}: PASS {detail}", k + 1),
            Err(detail) => {
                println!("criterion {}: FAIL {detail}", k + 1);
                failed.push(k + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
