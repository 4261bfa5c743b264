use laxlab_core::flowint::{integrate_system, invariant_drift, PathSpec, PoleEstimate};
use laxlab_core::laxcore::invariants;
use laxlab_core::numeric::fmt_f64;
use laxlab_core::singlattice::{
    classical_lattice, compare_lattices, period_relations, rh_lattice, u0_classical, LatticePoint, MatchReport,
    PeriodRelations, Periods,
};
use laxlab_core::surfaces::{branch_points, BranchData};
use laxlab_core::toeplitz::{refine_singularity, scan, Candidate, Refined};
use laxlab_core::verify::{run_all, VerifyOptions, VerifyReport};
use laxlab_core::Error;
use num_complex::Complex64;
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::output::{complex_cells, OutDir};
use crate::{Failure, EXIT_BLOWUP, EXIT_CHECK_FAILED, EXIT_OK};

fn out_dir(cfg: &RunConfig) -> Result<OutDir, Failure> {
    let out = OutDir::create(&cfg.output.directory)?;
    out.json("config.json", cfg)?;
    Ok(out)
}

#[derive(Serialize)]
struct Drift {
    #[serde(rename = "A")]
    a: f64,
    #[serde(rename = "B")]
    b: f64,
}

#[derive(Serialize)]
struct SimulateSummary {
    status: &'static str,
    path: Vec<Complex64>,
    samples: usize,
    end_state: Option<[Complex64; 3]>,
    drift: Option<Drift>,
    blow_up: Option<PoleEstimate>,
}

pub fn simulate(cfg: &RunConfig, path: &PathSpec) -> Result<u8, Failure> {
    let out = out_dir(cfg)?;
    let lax = &cfg.lax;
    let mut summary = SimulateSummary {
        status: "ok",
        path: path.vertices.clone(),
        samples: 0,
        end_state: None,
        drift: None,
        blow_up: None,
    };
    let code = match integrate_system(lax, path) {
        Ok(samples) => {
            let (da, db) = invariant_drift(lax, &samples);
            summary.samples = samples.len();
            summary.end_state = samples.last().map(|s| s.state);
            summary.drift = Some(Drift { a: da, b: db });
            if cfg.wants(Format::Csv) {
                let rows = samples.iter().map(|s| {
                    let [x, y, z] = s.state;
                    let (ia, ib) = invariants(x, y, z, lax.a);
                    let mut row = Vec::with_capacity(10);
                    for v in [s.t, x, y, z] {
                        row.extend(complex_cells(v));
                    }
                    row.push(fmt_f64((ia - lax.invariant_a).norm()));
                    row.push(fmt_f64((ib - lax.invariant_b).norm()));
                    row
                });
                let header = ["t_re", "t_im", "x_re", "x_im", "y_re", "y_im", "z_re", "z_im", "A_drift", "B_drift"];
                out.csv("trajectory.csv", &header, rows)?;
            }
            println!("simulate: {} samples, drift A {:.3e}, B {:.3e}", samples.len(), da, db);
            EXIT_OK
        }
        Err(Error::BlowUp(est)) => {
            summary.status = "blow_up";
            summary.blow_up = Some(est);
            println!(
                "simulate: blow-up near t = {} {} (exponent {:.3})",
                fmt_f64(est.t_star.re),
                fmt_f64(est.t_star.im),
                est.exponent
            );
            EXIT_BLOWUP
        }
        Err(e) => return Err(e.into()),
    };
    if cfg.wants(Format::Json) {
        out.json("drift.json", &summary)?;
    }
    Ok(code)
}

#[derive(Serialize)]
struct Offsets {
    classical: Complex64,
    rh: Complex64,
}

#[derive(Serialize)]
struct Generators {
    origin: Complex64,
    step_m: Complex64,
    step_n: Complex64,
}

#[derive(Serialize)]
struct LatticeFile {
    branch: BranchData,
    periods: Periods,
    offsets: Offsets,
    orientation: PeriodRelations,
    generators: Generators,
    tol: f64,
    coincident: bool,
    #[serde(rename = "match")]
    matching: MatchReport,
    points: Vec<LatticePoint>,
    rh_points: Vec<LatticePoint>,
}

pub fn lattice(cfg: &RunConfig) -> Result<u8, Failure> {
    let lax = &cfg.lax;
    let branch = branch_points(lax)?;
    let classical = classical_lattice(lax, &cfg.window, cfg.lattice.mn_bound)?;
    let rh = rh_lattice(lax, &cfg.window, cfg.lattice.mn_bound)?;
    let matching = compare_lattices(&classical, &rh, cfg.lattice.tol);
    let coincident = matching.bijection && matching.max_distance < cfg.lattice.tol;
    let out = out_dir(cfg)?;
    if cfg.wants(Format::Csv) {
        let rows = classical.points.iter().chain(&rh.points).map(|p| {
            let [re, im] = complex_cells(p.t);
            vec![re, im, p.m.to_string(), p.n.to_string(), p.source.as_str().to_string()]
        });
        out.csv("lattice.csv", &["t_re", "t_im", "m", "n", "source"], rows)?;
    }
    println!(
        "lattice: {} classical, {} rh points, max distance {:.3e}, coincident {}",
        classical.len(),
        rh.len(),
        matching.max_distance,
        coincident
    );
    if cfg.wants(Format::Json) {
        let file = LatticeFile {
            branch,
            periods: classical.periods,
            offsets: Offsets {
                classical: u0_classical(lax, &branch)?.u,
                rh: rh.offset,
            },
            orientation: period_relations(&branch)?,
            generators: Generators {
                origin: classical.origin,
                step_m: classical.step_m,
                step_n: classical.step_n,
            },
            tol: cfg.lattice.tol,
            coincident,
            matching,
            points: classical.points,
            rh_points: rh.points,
        };
        out.json("lattice.json", &file)?;
    }
    Ok(if coincident { EXIT_OK } else { EXIT_CHECK_FAILED })
}

#[derive(Serialize)]
struct CandidatesFile<'a> {
    window: laxlab_core::Window,
    resolution: usize,
    #[serde(rename = "N")]
    n: usize,
    threshold: f64,
    slope_bound: f64,
    lattice_points_in_window: Option<usize>,
    candidates: &'a [Candidate],
    mirrors: &'a [Candidate],
}

pub fn scan_cmd(cfg: &RunConfig) -> Result<u8, Failure> {
    let s = &cfg.scan;
    let result = scan(&cfg.lax, &cfg.window, s.resolution, s.n, s.threshold)?;
    // Cross-check count; unavailable when the curve is degenerate.
    let expected = classical_lattice(&cfg.lax, &cfg.window, cfg.lattice.mn_bound)
        .ok()
        .map(|l| l.points.iter().filter(|p| cfg.window.contains(p.t, 0.0)).count());
    let out = out_dir(cfg)?;
    if cfg.wants(Format::Csv) {
        let rows = result.samples.iter().map(|p| {
            let [re, im] = complex_cells(p.t);
            vec![re, im, fmt_f64(p.sigma_min)]
        });
        out.csv("scan.csv", &["t_re", "t_im", "sigma_min"], rows)?;
    }
    if cfg.wants(Format::Json) {
        out.json(
            "candidates.json",
            &CandidatesFile {
                window: result.window,
                resolution: result.resolution,
                n: result.n,
                threshold: result.threshold,
                slope_bound: result.slope_bound,
                lattice_points_in_window: expected,
                candidates: &result.candidates,
                mirrors: &result.mirrors,
            },
        )?;
    }
    println!(
        "scan: {} candidates, {} rejected mirror dips, {} lattice points in window",
        result.candidates.len(),
        result.mirrors.len(),
        expected.map_or("unknown".to_string(), |n| n.to_string())
    );
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct Nearest {
    point: LatticePoint,
    distance: f64,
}

#[derive(Serialize)]
struct RefineFile {
    t_guess: Complex64,
    schedule: Vec<usize>,
    refined: Refined,
    nearest_lattice_point: Option<Nearest>,
}

pub fn refine(cfg: &RunConfig, t_guess: Complex64) -> Result<u8, Failure> {
    let refined = refine_singularity(&cfg.lax, t_guess, &cfg.scan.schedule)?;
    let window = laxlab_core::Window::new(
        refined.point.t.re - 1.0,
        refined.point.t.re + 1.0,
        refined.point.t.im - 1.0,
        refined.point.t.im + 1.0,
    );
    let nearest = classical_lattice(&cfg.lax, &window, cfg.lattice.mn_bound.max(12))
        .ok()
        .and_then(|l| l.nearest_to(refined.point.t).copied())
        .map(|p| Nearest { point: p, distance: (p.t - refined.point.t).norm() });
    println!(
        "refine: t = {} {}, sigma_min {:.3e} at N = {}",
        fmt_f64(refined.point.t.re),
        fmt_f64(refined.point.t.im),
        refined.sigma_min,
        refined.n
    );
    if let Some(n) = &nearest {
        println!("refine: nearest lattice point at distance {:.3e}", n.distance);
    }
    let out = out_dir(cfg)?;
    if cfg.wants(Format::Json) {
        out.json(
            "refined.json",
            &RefineFile {
                t_guess,
                schedule: cfg.scan.schedule.clone(),
                refined,
                nearest_lattice_point: nearest,
            },
        )?;
    }
    Ok(EXIT_OK)
}

fn print_table(report: &VerifyReport) {
    let width = report.checks.iter().map(|c| c.name.len()).max().unwrap_or(4).max(5);
    println!("{:<9} {:<width$} {:>12} {:>10}  result", "suite", "check", "value", "tolerance");
    for c in &report.checks {
        println!(
            "{:<9} {:<width$} {:>12.3e} {:>10.1e}  {}{}",
            c.suite,
            c.name,
            c.value,
            c.tolerance,
            if c.pass { "PASS" } else { "FAIL" },
            c.note.as_deref().map(|n| format!("  ({n})")).unwrap_or_default()
        );
    }
}

pub fn verify(cfg: &RunConfig) -> Result<u8, Failure> {
    let opts = VerifyOptions {
        window: cfg.window,
        mn_bound: cfg.lattice.mn_bound,
        seed: cfg.seed,
    };
    let report = run_all(&cfg.lax, &opts);
    print_table(&report);
    let out = out_dir(cfg)?;
    if cfg.wants(Format::Json) {
        out.json("verify.json", &report)?;
    }
    if report.all_pass() {
        println!("verify: all {} checks pass", report.checks.len());
        return Ok(EXIT_OK);
    }
    let mut suites: Vec<&str> = report.failures().map(|c| c.suite.as_str()).collect();
    suites.dedup();
    Err(Failure {
        code: EXIT_CHECK_FAILED,
        message: format!("verify: failing suites: {}", suites.join(", ")),
    })
}
