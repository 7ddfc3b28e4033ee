use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::cli::config::{RunConfig, Scenario, SpecLabel};
use crate::control::{self, standard_problem, ExperimentConfig, Rect};
use crate::error::Result;
use crate::funcspace::Grid1D;
use crate::inequalities::{
    carleman_scan, clamped_poly, hardy_check, random_hardy_family, select_b, singular_coefficient_defect,
    standard_family, CarlemanParams, CarlemanQuadrature, Poly,
};
use crate::operator1d::{
    coercivity_check, decoupled_extension, designed_extension, eigensolve,
    full_eigensolve, nonsymmetric_transmission_search, random_domain_element, validate_extension,
    Discretization, ExtensionSpec,
};
use crate::semigroup::{evolve1d, fourier_project, mild_solution, Semigroup};

/// An asserted invariant that did not hold.
#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub invariant: String,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub scenario: Scenario,
    pub files: Vec<String>,
    pub failures: Vec<Failure>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    files: Vec<(String, String)>,
    failures: Vec<Failure>,
}

impl Ctx<'_> {
    fn csv(&mut self, name: &str, body: String) {
        self.files.push((name.to_string(), body));
    }

    fn require(&mut self, ok: bool, invariant: &str, detail: String) {
        if !ok {
            self.failures.push(Failure {
                invariant: invariant.to_string(),
                detail,
            });
        }
    }
}

fn spec_for(cfg: &RunConfig) -> Result<ExtensionSpec> {
    match cfg.spec {
        SpecLabel::Designed => designed_extension(cfg.nu),
        SpecLabel::Decoupled => decoupled_extension(cfg.nu),
    }
}

fn discretization(cfg: &RunConfig) -> Result<Arc<Discretization>> {
    let grid = Arc::new(Grid1D::build(cfg.cells, cfg.grading)?);
    Ok(Arc::new(Discretization::new(cfg.nu, cfg.gamma, grid, &spec_for(cfg)?)?))
}

/// Evaluation points avoiding `x = 0`: cell midpoints of a uniform partition.
fn midpoints(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * (i as f64 + 0.5) / n as f64).collect()
}

fn time_samples(t: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| t * i as f64 / n as f64).collect()
}

/// Runs one scenario and writes `summary.json` plus its CSVs into `cfg.out`.
///
/// On invariant failures `failure.json` is written as well and the outcome
/// reports them; I/O and parameter errors are returned as `Err`.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    let start = Instant::now();
    let mut ctx = Ctx {
        cfg,
        files: Vec::new(),
        failures: Vec::new(),
    };
    let results = match cfg.scenario {
        Scenario::Spectrum => spectrum(&mut ctx)?,
        Scenario::Evolve1d => evolve_1d(&mut ctx)?,
        Scenario::Evolve2d => evolve_2d(&mut ctx)?,
        Scenario::Hardy => hardy(&mut ctx)?,
        Scenario::Carleman => carleman(&mut ctx)?,
        Scenario::Control => control_run(&mut ctx)?,
        Scenario::ExtensionCheck => extension_check(&mut ctx)?,
        Scenario::UcCertificate => uc(&mut ctx)?,
    };
    let out = &cfg.out;
    fs::create_dir_all(out)?;
    let mut names = Vec::new();
    for (name, body) in &ctx.files {
        fs::write(out.join(name), body)?;
        names.push(name.clone());
    }
    let summary = json!({
        "scenario": cfg.scenario,
        "status": if ctx.failures.is_empty() { "ok" } else { "failed" },
        "config": cfg,
        "library_version": env!("CARGO_PKG_VERSION"),
        "wall_time_s": start.elapsed().as_secs_f64(),
        "files": names,
        "results": results,
        "failures": ctx.failures,
    });
    write_json(&out.join("summary.json"), &summary)?;
    if !ctx.failures.is_empty() {
        write_json(
            &out.join("failure.json"),
            &json!({ "scenario": cfg.scenario, "failures": ctx.failures }),
        )?;
    } else if out.join("failure.json").exists() {
        fs::remove_file(out.join("failure.json"))?;
    }
    Ok(RunOutcome {
        scenario: cfg.scenario,
        files: names,
        failures: ctx.failures,
    })
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

fn spectrum(ctx: &mut Ctx) -> Result<Value> {
    let cfg = ctx.cfg;
    let disc = discretization(cfg)?;
    let op = disc.operator(cfg.n)?;
    let k = cfg.k.min(op.dim());
    let eig = eigensolve(&op, k)?;
    let mut body = String::from("k,eigenvalue\n");
    for (i, l) in eig.eigenvalues.iter().enumerate() {
        writeln!(body, "{i},{l}").unwrap();
    }
    ctx.csv("spectrum.csv", body);
    let coercivity = coercivity_check(&op, cfg.samples, cfg.seed)?;
    let lowest = eig.eigenvalues[0];
    ctx.require(
        op.symmetry_defect() <= 1e-8,
        "symmetry",
        format!("defect {:e}", op.symmetry_defect()),
    );
    ctx.require(lowest >= -1e-8, "nonnegative spectrum", format!("lowest eigenvalue {lowest:e}"));
    ctx.require(
        coercivity.passed,
        "coercivity",
        format!("minimum relative margin {:e}", coercivity.min_relative_margin),
    );
    Ok(json!({
        "dim": op.dim(),
        "symmetry_defect": op.symmetry_defect(),
        "max_backward_error": eig.max_backward_error(&op),
        "eigenvalues": eig.eigenvalues,
        "coercivity": coercivity,
    }))
}

fn evolve_1d(ctx: &mut Ctx) -> Result<Value> {
    let cfg = ctx.cfg;
    let disc = discretization(cfg)?;
    let op = disc.operator(cfg.n)?;
    let eig = full_eigensolve(&op)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let f0 = random_domain_element(op.basis(), &mut rng)?;
    let m = op.mass();
    let norm = |f: &nalgebra::DVector<f64>| f.dot(&(m * f)).max(0.0).sqrt();
    let mut body = String::from("t,norm\n");
    let mut norms = Vec::new();
    for t in time_samples(cfg.t_final, cfg.samples) {
        let n = norm(&evolve1d(&op, &eig, &f0, t)?);
        writeln!(body, "{t},{n}").unwrap();
        norms.push(n);
    }
    ctx.csv("norms.csv", body);
    let growth = norms.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    ctx.require(
        norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)),
        "contraction",
        format!("largest norm increase {growth:e}"),
    );
    let t_check = cfg.t_final.min(0.1);
    let a = evolve1d(&op, &eig, &f0, t_check)?;
    let b = crate::semigroup::crank_nicolson(&op, &f0, t_check, cfg.dt)?;
    let cn_rel = norm(&(&a - &b)) / norm(&a).max(f64::MIN_POSITIVE);
    ctx.require(
        cn_rel <= 1e-4,
        "eigen expansion vs Crank-Nicolson",
        format!("relative difference {cn_rel:e} at t = {t_check}"),
    );
    Ok(json!({
        "dim": op.dim(),
        "initial_norm": norms[0],
        "final_norm": norms[norms.len() - 1],
        "crank_nicolson_check": { "t": t_check, "dt": cfg.dt, "relative_difference": cn_rel },
    }))
}

fn evolve_2d(ctx: &mut Ctx) -> Result<Value> {
    let cfg = ctx.cfg;
    let disc = discretization(cfg)?;
    let modes: Vec<usize> = (1..=cfg.n_modes).collect();
    let sg = Semigroup::new(disc.clone(), &modes)?;
    let (f0, proj) = fourier_project(
        |x, y| control::bump(x, -0.4, 0.4) * control::bump(y, 0.5, 0.4) + 0.5 * control::bump(x, 0.5, 0.3) * control::bump(y, 0.3, 0.2),
        &disc,
        cfg.n_modes,
        8 * cfg.n_modes.max(8),
    );
    let evo = mild_solution(&f0, &[], cfg.t_final, cfg.t_final / cfg.samples as f64, &sg)?;
    let mut body = String::from("t,norm\n");
    for (t, n) in evo.times.iter().zip(&evo.norms) {
        writeln!(body, "{t},{n}").unwrap();
    }
    ctx.csv("norms.csv", body);
    let mut snap = Vec::new();
    evo.final_state()
        .write_snapshot_csv(&mut snap, &midpoints(-1.0, 1.0, 40), &midpoints(0.0, 1.0, 20))?;
    ctx.csv("snapshot.csv", String::from_utf8(snap).expect("utf8"));
    ctx.require(
        evo.norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)),
        "contraction",
        "norm increased between samples".into(),
    );
    let half = sg.apply(&sg.apply(&f0, 0.5 * cfg.t_final)?, 0.5 * cfg.t_final)?;
    let mut diff = sg.apply(&f0, cfg.t_final)?;
    let full_norm = diff.norm();
    diff.axpy(-1.0, &half)?;
    let rel = diff.norm() / full_norm.max(f64::MIN_POSITIVE);
    ctx.require(rel <= 1e-8, "semigroup identity", format!("relative difference {rel:e}"));
    Ok(json!({
        "n_modes": cfg.n_modes,
        "aliasing_warning": proj.aliasing_warning,
        "initial_norm": evo.norms[0],
        "final_norm": evo.norms[evo.norms.len() - 1],
        "semigroup_identity_defect": rel,
    }))
}

fn hardy(ctx: &mut Ctx) -> Result<Value> {
    let cfg = ctx.cfg;
    let family = random_hardy_family(cfg.family_size, cfg.seed);
    let mut body = String::from("member,alpha,constant,weighted_integral,lhs,rhs,satisfied\n");
    let mut worst = f64::INFINITY;
    let mut all_ok = true;
    for (i, z) in family.iter().enumerate() {
        let r = hardy_check(z, cfg.alpha)?;
        writeln!(
            body,
            "{i},{},{},{},{},{},{}",
            r.alpha, r.constant, r.weighted_integral, r.lhs, r.rhs, r.satisfied
        )
        .unwrap();
        worst = worst.min(r.ratio());
        all_ok &= r.satisfied;
    }
    ctx.csv("hardy.csv", body);
    ctx.require(all_ok, "Hardy inequality", format!("smallest rhs/lhs ratio {worst:e}"));
    let anchor = hardy_check(&clamped_poly(&Poly::new(vec![1.0])), cfg.alpha)?;
    Ok(json!({
        "alpha": cfg.alpha,
        "members": family.len(),
        "min_ratio": worst,
        "anchor_x2_1mx": anchor,
    }))
}

fn carleman(ctx: &mut Ctx) -> Result<Value> {
    let cfg = ctx.cfg;
    let family = standard_family(cfg.t_final, cfg.family_size, cfg.seed);
    let params = CarlemanParams {
        n: cfg.n,
        nu: cfg.nu,
        gamma: cfg.gamma,
        t_final: cfg.t_final,
    };
    let scan = carleman_scan(&family, &params, &cfg.r_grid, &CarlemanQuadrature::default())?;
    let mut body = String::from("R,min_ratio,median_ratio\n");
    for r in &scan.rows {
        writeln!(body, "{},{},{}", r.r, r.min_ratio, r.median_ratio).unwrap();
    }
    ctx.csv("carleman.csv", body);
    ctx.require(scan.c0 > 0.0, "positive C0", format!("C0 = {:e}", scan.c0));
    let b = select_b(cfg.nu)?;
    let defect = if cfg.nu > 0.5 {
        Some(singular_coefficient_defect(cfg.nu, b)?)
    } else {
        None
    };
    if let Some(d) = defect {
        ctx.require(d.abs() <= 1e-14, "singular coefficient identity", format!("defect {d:e}"));
    }
    Ok(json!({ "scan": scan, "singular_coefficient_defect": defect }))
}

fn experiment(cfg: &RunConfig) -> Result<ExperimentConfig> {
    let [x0, x1, y0, y1] = cfg.omega;
    Ok(ExperimentConfig {
        nu: cfg.nu,
        gamma: cfg.gamma,
        cells: cfg.cells,
        grading: cfg.grading,
        n_modes: cfg.n_modes,
        t_final: cfg.t_final,
        omega: Rect::new(x0, x1, y0, y1)?,
        ..Default::default()
    })
}

fn control_run(ctx: &mut Ctx) -> Result<Value> {
    let cfg = ctx.cfg;
    let exp = experiment(cfg)?;
    let spec = spec_for(cfg)?;
    let problem = standard_problem(&exp, &spec, cfg.beta[0])?;
    let results = control::solve_control_sweep(&problem, &cfg.beta)?;
    let mut body = String::from("beta,terminal_error,dual_state_norm,cg_iters,hum_identity_error,control_norm,right_norm\n");
    for r in &results {
        writeln!(
            body,
            "{},{},{},{},{},{},{}",
            r.beta, r.terminal_error, r.dual_state_norm, r.cg.iterations, r.hum_identity_error, r.control_norm, r.right_norm
        )
        .unwrap();
    }
    ctx.csv("control.csv", body);
    if let Some(last) = results.last() {
        let mut field = Vec::new();
        last.write_control_csv(&mut field, problem.dt(), &midpoints(-1.0, 1.0, 20), &midpoints(0.0, 1.0, 10))?;
        ctx.csv("control_field.csv", String::from_utf8(field).expect("utf8"));
    }
    for r in &results {
        if r.cg.converged {
            ctx.require(
                r.hum_identity_error <= 1e-8,
                "penalized HUM identity",
                format!("beta {:e}: error {:e}", r.beta, r.hum_identity_error),
            );
        }
    }
    match cfg.spec {
        SpecLabel::Designed => {
            let mut sorted: Vec<&control::ControlResult> = results.iter().collect();
            sorted.sort_by(|a, b| b.beta.total_cmp(&a.beta));
            ctx.require(
                sorted.windows(2).all(|w| w[1].terminal_error <= w[0].terminal_error),
                "terminal error nonincreasing as beta decreases",
                "monotonicity violated".into(),
            );
        }
        SpecLabel::Decoupled => {
            if problem.omega.iter().all(|r| r.x1 <= 0.0) {
                for r in &results {
                    ctx.require(
                        r.right_norm <= 1e-12 * r.control_norm.max(f64::MIN_POSITIVE),
                        "no cross-side reach",
                        format!("beta {:e}: right norm {:e}", r.beta, r.right_norm),
                    );
                }
            }
        }
    }
    Ok(json!({
        "spec": spec.label,
        "dt": problem.dt(),
        "results": results.iter().map(|r| r.summary()).collect::<Vec<_>>(),
    }))
}

fn extension_check(ctx: &mut Ctx) -> Result<Value> {
    let cfg = ctx.cfg;
    let reports = [validate_extension(&designed_extension(cfg.nu)?), validate_extension(&decoupled_extension(cfg.nu)?)];
    let mut body = String::from("label,rank,residual,reduced_rank,det_m2_tilde,det_m3_tilde,valid\n");
    for r in &reports {
        writeln!(
            body,
            "{},{},{},{},{},{},{}",
            r.label, r.rank, r.residual, r.reduced_rank, r.det_m2_tilde, r.det_m3_tilde, r.valid
        )
        .unwrap();
        ctx.require(r.valid, "self-adjoint extension", format!("{}: residual {:e}, rank {}", r.label, r.residual, r.rank));
    }
    ctx.csv("extension.csv", body);
    let cert = nonsymmetric_transmission_search(cfg.samples, cfg.seed);
    ctx.require(cert.one_sided == 0, "two-sided transmission", format!("{} one-sided trials", cert.one_sided));
    Ok(json!({ "validation": reports, "transmission_search": cert }))
}

fn uc(ctx: &mut Ctx) -> Result<Value> {
    let cfg = ctx.cfg;
    let exp = experiment(cfg)?;
    let spec = spec_for(cfg)?;
    let problem = standard_problem(&exp, &spec, cfg.beta[0])?;
    let report = control::uc_certificate(&problem, cfg.coarse_dim)?;
    let mut body = String::from("index,n,k,lambda,right_fraction\n");
    for (i, ((n, k, l), rf)) in report.directions.iter().zip(&report.right_fraction).enumerate() {
        writeln!(body, "{i},{n},{k},{l},{rf}").unwrap();
    }
    ctx.csv("uc_subspace.csv", body);
    let mut body = String::from("i,eigenvalue\n");
    for (i, e) in report.eigenvalues.iter().enumerate() {
        writeln!(body, "{i},{e}").unwrap();
    }
    ctx.csv("uc_eigenvalues.csv", body);
    if cfg.spec == SpecLabel::Designed {
        ctx.require(
            report.min_eigenvalue > 0.0,
            "positive coarse Gramian",
            format!("smallest eigenvalue {:e}", report.min_eigenvalue),
        );
    }
    Ok(json!({ "spec": spec.label, "report": report }))
}
