use std::sync::Arc;

use grushin::control::*;
use grushin::funcspace::build_grid;
use grushin::operator1d::*;
use grushin::quadrature::LegendreRule;
use grushin::semigroup::*;
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn disc(cells: usize, nu: f64, spec: &ExtensionSpec) -> Arc<Discretization> {
    let g = Arc::new(build_grid(cells, 2.0).unwrap());
    Arc::new(Discretization::new(nu, 1.0, g, spec).unwrap())
}

fn small_semigroup(spec: &ExtensionSpec, modes: usize) -> Arc<Semigroup> {
    let d = disc(48, 0.3, spec);
    let modes: Vec<usize> = (1..=modes).collect();
    Arc::new(Semigroup::new(d, &modes).unwrap())
}

fn random_field(sg: &Semigroup, seed: u64) -> Field2D {
    let d = sg.discretization();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = sg
        .mode_indices()
        .iter()
        .map(|_| random_domain_element(d.basis(), &mut rng).unwrap())
        .collect();
    Field2D::from_coeffs(d.clone(), sg.mode_indices(), coeffs).unwrap()
}

fn left_omega() -> Rect {
    Rect::new(-0.8, -0.2, 0.2, 0.8).unwrap()
}

fn target(sg: &Semigroup) -> Field2D {
    let d = sg.discretization();
    let n = sg.mode_indices().len();
    fourier_project(|x, y| bump(x, 0.5, 0.3) * bump(y, 0.5, 0.3), d, n, 64).0
}

fn problem(sg: &Arc<Semigroup>, beta: f64) -> ControlProblem {
    ControlProblem::new(sg.clone(), vec![left_omega()], 1.0, sg.zeros(), target(sg), beta).unwrap()
}

#[test]
fn y_coupling_matches_quadrature() {
    let rule = LegendreRule::new(40);
    for (y0, y1) in [(0.2, 0.8), (0.0, 0.5), (0.1, 0.15)] {
        for n in 1..6 {
            for m in 1..6 {
                let got = y_coupling(n, m, y0, y1).unwrap();
                let want = rule.integrate(y0, y1, |y| sine_mode(n, y) * sine_mode(m, y));
                assert!((got - want).abs() < 1e-13, "n={n} m={m}");
            }
        }
    }
    assert_eq!(y_coupling(3, 3, 0.0, 1.0).unwrap(), 1.0);
    assert_eq!(y_coupling(0, 0, 0.0, 1.0).unwrap(), 1.0);
    assert!(y_coupling(0, 0, 0.2, 0.8).is_err());
}

#[test]
fn rect_validation() {
    assert!(Rect::new(0.2, 0.1, 0.0, 1.0).is_err());
    assert!(Rect::new(-1.5, 0.1, 0.0, 1.0).is_err());
    assert!(Rect::new(-0.5, 0.1, 0.3, 1.2).is_err());
    let d = disc(20, 0.3, &designed_extension(0.3).unwrap());
    let a = Rect::new(-0.5, 0.0, 0.0, 0.5).unwrap();
    let b = Rect::new(-0.2, 0.3, 0.2, 0.7).unwrap();
    assert!(Restrictor::new(&d, &[1, 2], &[a, b]).is_err());
    assert!(Restrictor::new(&d, &[1, 2], &[]).is_err());
}

#[test]
fn restriction_to_whole_domain_is_identity() {
    let sg = small_semigroup(&designed_extension(0.3).unwrap(), 3);
    let f = random_field(&sg, 1);
    let p = restrict_omega(&f, &[Rect::new(-1.0, 1.0, 0.0, 1.0).unwrap()]).unwrap();
    let mut diff = p.clone();
    diff.axpy(-1.0, &f).unwrap();
    assert!(diff.norm() <= 1e-10 * f.norm());
}

#[test]
fn restriction_kills_fields_supported_elsewhere() {
    let sg = small_semigroup(&designed_extension(0.3).unwrap(), 3);
    let f = fourier_project(|x, y| bump(x, 0.5, 0.3) * bump(y, 0.5, 0.2), sg.discretization(), 3, 32).0;
    let p = restrict_omega(&f, &[left_omega()]).unwrap();
    assert!(p.norm() <= 1e-3 * f.norm(), "{}", p.norm() / f.norm());
}

#[test]
fn restriction_is_a_contraction() {
    let sg = small_semigroup(&designed_extension(0.3).unwrap(), 4);
    let omega = [
        left_omega(),
        Rect::new(0.1, 0.6, 0.0, 0.3).unwrap(),
    ];
    for seed in 0..10 {
        let f = random_field(&sg, seed);
        let p = restrict_omega(&f, &omega).unwrap();
        assert!(p.norm() <= f.norm() * (1.0 + 1e-8));
        // Galerkin P is M-self-adjoint
        let g = random_field(&sg, seed + 100);
        let q = restrict_omega(&g, &omega).unwrap();
        let (a, b) = (p.inner(&g).unwrap(), f.inner(&q).unwrap());
        assert!((a - b).abs() < 1e-10 * f.norm() * g.norm());
    }
}

#[test]
fn gramian_is_symmetric_and_positive() {
    let sg = small_semigroup(&designed_extension(0.3).unwrap(), 3);
    let mut pb = problem(&sg, 1e-3);
    pb.steps = 16;
    assert_eq!(gramian_apply(&sg.zeros(), &pb).unwrap().norm(), 0.0);
    for seed in 0..6 {
        let g = random_field(&sg, seed);
        let h = random_field(&sg, seed + 50);
        let (lg, lh) = (gramian_apply(&g, &pb).unwrap(), gramian_apply(&h, &pb).unwrap());
        let (a, b) = (lg.inner(&h).unwrap(), g.inner(&lh).unwrap());
        assert!((a - b).abs() <= 1e-8 * g.norm() * h.norm());
        assert!(lg.inner(&g).unwrap() >= -1e-12 * g.norm().powi(2));
    }
}

#[test]
fn reduced_gramian_agrees_with_direct_application() {
    let sg = small_semigroup(&designed_extension(0.3).unwrap(), 3);
    let mut pb = problem(&sg, 1e-3);
    pb.steps = 16;
    let red = ReducedGramian::lowest(&pb, 5).unwrap();
    let basis: Vec<Field2D> = red
        .kept
        .iter()
        .map(|&(a, k)| {
            let mut e: Vec<DVector<f64>> = sg.spectra().iter().map(|m| DVector::zeros(m.eig.len())).collect();
            e[a][k] = 1.0;
            sg.from_eigen(&e)
        })
        .collect();
    let direct = coarse_gramian(&pb, &basis).unwrap();
    let diff = (&direct - &red.matrix).amax();
    assert!(diff <= 1e-10 * red.matrix.amax(), "{diff:e}");
    let ev = red.eigenvalues();
    assert!(ev.windows(2).all(|w| w[0] <= w[1]));
    assert!(ev[0] > 0.0);
}

#[test]
fn reachable_target_needs_no_control() {
    let sg = small_semigroup(&designed_extension(0.3).unwrap(), 2);
    let f0 = random_field(&sg, 3);
    let ft = sg.apply(&f0, 1.0).unwrap();
    let pb = ControlProblem::new(sg.clone(), vec![left_omega()], 1.0, f0, ft, 1e-4).unwrap();
    let res = solve_control(&pb).unwrap();
    assert_eq!(res.control_norm, 0.0);
    assert!(res.terminal_error <= 1e-12);
}

#[test]
fn designed_control_improves_with_smaller_beta() {
    let sg = small_semigroup(&designed_extension(0.3).unwrap(), 4);
    let res = solve_control_sweep(&problem(&sg, 1e-2), &[1e-2, 1e-3, 1e-4, 1e-6]).unwrap();
    for w in res.windows(2) {
        assert!(w[1].terminal_error <= w[0].terminal_error + 1e-9);
    }
    for r in &res {
        assert!(r.cg.converged);
        assert!(r.hum_identity_error <= 1e-8, "{:e}", r.hum_identity_error);
        assert!(r.right_norm >= 1e-6 * r.control_norm);
        assert!(r.gramian_min_eig.unwrap() > 0.0);
    }
    assert!(res.last().unwrap().terminal_error < 0.9);
}

#[test]
fn decoupled_control_cannot_reach_the_right() {
    let sg = small_semigroup(&decoupled_extension(0.3).unwrap(), 4);
    let res = solve_control_sweep(&problem(&sg, 1e-2), &[1e-2, 1e-6]).unwrap();
    for r in &res {
        assert!(r.terminal_error >= 0.9);
        assert!(r.right_norm <= 1e-12 * r.control_norm.max(1.0));
        assert!(r.gramian_min_eig.unwrap() <= 1e-14);
    }
}

#[test]
fn uc_certificate_separates_extensions() {
    let d_sg = small_semigroup(&designed_extension(0.3).unwrap(), 4);
    let rep = uc_certificate(&problem(&d_sg, 1e-3), 8).unwrap();
    assert_eq!(rep.eigenvalues.len(), 8);
    assert!(rep.min_eigenvalue > 1e-12, "{:e}", rep.min_eigenvalue);
    for f in &rep.right_fraction {
        assert!((f - 0.5).abs() < 1e-6);
    }
    let c_sg = small_semigroup(&decoupled_extension(0.3).unwrap(), 4);
    let rep = uc_certificate(&problem(&c_sg, 1e-3), 8).unwrap();
    assert!(rep.min_eigenvalue <= 1e-14, "{:e}", rep.min_eigenvalue);
    assert!(rep.right_fraction.iter().any(|&f| f > 1.0 - 1e-12));
}

#[test]
fn single_direction_gramian_is_positive() {
    let sg = small_semigroup(&designed_extension(0.3).unwrap(), 2);
    let pb = problem(&sg, 1e-3);
    let g = fourier_project(|x, y| bump(x, -0.5, 0.2) * bump(y, 0.5, 0.2), sg.discretization(), 2, 32).0;
    let gt = sg.apply(&g, 1.0).unwrap();
    let m = coarse_gramian(&pb, &[gt]).unwrap();
    assert!(m[(0, 0)] > 0.0);
}

#[test]
fn one_dimensional_control() {
    let spec = designed_extension(0.5).unwrap();
    let d = disc(60, 0.5, &spec);
    let samples: Vec<f64> = d.basis().grid().quad_nodes().iter().map(|&x| bump(x, 0.5, 0.3)).collect();
    let ft = d.project_samples(&samples);
    let f0 = DVector::zeros(ft.len());
    let mut prev = f64::INFINITY;
    for beta in [1e-2, 1e-4, 1e-6] {
        let r = control_1d(&d, 0, (-0.8, -0.2), 1.0, &f0, &ft, beta).unwrap();
        assert!(r.terminal_error < prev);
        prev = r.terminal_error;
    }
    let spec = decoupled_extension(0.5).unwrap();
    let d = disc(60, 0.5, &spec);
    let ft = d.project_samples(&samples);
    let r = control_1d(&d, 0, (-0.8, -0.2), 1.0, &f0, &ft, 1e-6).unwrap();
    assert!(r.terminal_error >= 0.9);
}

#[test]
fn standard_experiment_regression() {
    let cfg = ExperimentConfig::default();
    let pb = standard_problem(&cfg, &designed_extension(cfg.nu).unwrap(), 1e-2).unwrap();
    let res = solve_control_sweep(&pb, &[1e-2, 1e-6]).unwrap();
    assert!((res[0].terminal_error - 0.92885).abs() < 1e-3);
    assert!((res[1].terminal_error - 0.60424).abs() < 1e-3);
    let pb = standard_problem(&cfg, &decoupled_extension(cfg.nu).unwrap(), 1e-6).unwrap();
    let res = solve_control(&pb).unwrap();
    assert!((res.terminal_error - 1.0).abs() < 1e-12);
    assert_eq!(res.right_norm, 0.0);
}

#[test]
fn control_csv_has_one_row_per_sample() {
    let sg = small_semigroup(&designed_extension(0.3).unwrap(), 2);
    let mut pb = problem(&sg, 1e-2);
    pb.steps = 4;
    let r = solve_control(&pb).unwrap();
    let mut buf = Vec::new();
    r.write_control_csv(&mut buf, pb.dt(), &[-0.5, 0.5], &[0.5]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 1 + 4 * 2);
}
