use std::sync::Arc;

use finsler_core::geometry::*;
use finsler_core::nonlinearity::Nonlinearity;
use finsler_core::norms::{MinkowskiNorm, NormFamily};
use finsler_core::pde::*;
use finsler_core::Error;

fn disk() -> Domain2D {
    Domain2D::new(
        Boundary::Circle {
            center: [0.0, 0.0],
            r: 1.0,
        },
        DEFAULT_SAMPLES,
    )
    .unwrap()
}

fn square() -> Domain2D {
    Domain2D::new(
        Boundary::Rectangle {
            min: [0.0, 0.0],
            max: [1.0, 1.0],
        },
        DEFAULT_SAMPLES,
    )
    .unwrap()
}

fn cubic() -> Nonlinearity {
    Nonlinearity::power(3.0, 2.0).unwrap()
}

fn constant(domain: Domain2D, k: f64) -> DirichletProblem {
    DirichletProblem::new(
        domain,
        MinkowskiNorm::euclidean(2),
        cubic(),
        BoundaryData::Constant(k),
    )
    .unwrap()
}

fn field_with(mesh: &Arc<GridMesh>, values: Vec<f64>) -> DiscreteField {
    DiscreteField {
        mesh: mesh.clone(),
        values,
        energy: 0.0,
        residual: 0.0,
        converged: true,
        newton_iterations: 0,
    }
}

#[test]
fn energy_examples() {
    let prob = constant(square(), 0.0);
    let mesh = Arc::new(GridMesh::new(&prob.domain, 1.0 / 32.0).unwrap());
    assert_eq!(
        energy_J(&prob, &field_with(&mesh, vec![0.0; mesh.len()])),
        0.0
    );

    let c = 2.0;
    let got = energy_J(&prob, &field_with(&mesh, vec![c; mesh.len()]));
    let want = c.powi(4) / 4.0;
    assert!((got - want).abs() < 0.01 * want, "{got} vs {want}");

    // u = x₁: the gradient term is area/2; subtract the lumped potential
    let x1: Vec<f64> = mesh.nodes.iter().map(|x| x[0]).collect();
    let potential: f64 = mesh
        .nodes
        .iter()
        .zip(&mesh.mass)
        .map(|(x, m)| m * x[0].powi(4) / 4.0)
        .sum();
    assert!((energy_J(&prob, &field_with(&mesh, x1)) - potential - 0.5).abs() < 1e-10);
}

#[test]
fn zero_data_gives_the_zero_minimizer() {
    let f = solve_dirichlet(&constant(disk(), 0.0), 1.0 / 32.0).unwrap();
    assert!(f.values.iter().all(|&v| v == 0.0));
    assert_eq!(f.energy, 0.0);
}

#[test]
fn reported_energy_is_the_discrete_energy() {
    let prob = constant(disk(), 7.0);
    let f = solve_dirichlet(&prob, 1.0 / 32.0).unwrap();
    assert!(f.converged);
    assert!((f.energy - energy_J(&prob, &f)).abs() <= 1e-12 * f.energy.abs().max(1.0));
}

#[test]
fn disk_solution_is_radially_symmetric() {
    // with h = 1/40 the circle of radius 1/2 passes through twelve nodes
    let f = solve_dirichlet(&constant(disk(), 20.0), 1.0 / 40.0).unwrap();
    let ring: Vec<f64> = f
        .mesh
        .nodes
        .iter()
        .zip(&f.values)
        .filter(|(x, _)| (x[0].hypot(x[1]) - 0.5).abs() < 1e-12)
        .map(|(_, &u)| u)
        .collect();
    assert_eq!(ring.len(), 12);
    let lo = ring.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ring.iter().copied().fold(0.0, f64::max);
    assert!(hi - lo <= 0.01 * hi, "{lo} {hi}");
}

#[test]
fn monotone_in_the_boundary_data() {
    let h = 1.0 / 32.0;
    let lo = solve_dirichlet(&constant(disk(), 10.0), h).unwrap();
    let hi = solve_dirichlet(&constant(disk(), 20.0), h).unwrap();
    for (a, b) in lo.values.iter().zip(&hi.values) {
        assert!(*a <= b + 1e-8);
    }
}

#[test]
fn ordered_varying_data_give_ordered_solutions() {
    let norm = MinkowskiNorm::new(
        NormFamily::LinearMap {
            a: vec![vec![2.0, 0.3], vec![0.0, 1.0]],
        },
        2,
    )
    .unwrap();
    let dom = || {
        Domain2D::new(
            Boundary::Ellipse {
                center: [0.0, 0.0],
                a: 1.0,
                b: 0.8,
            },
            DEFAULT_SAMPLES,
        )
        .unwrap()
    };
    let low = BoundaryData::Function(Arc::new(|x: [f64; 2]| 3.0 + x[0]));
    let high = BoundaryData::Function(Arc::new(|x: [f64; 2]| 4.0 + x[0] + x[1] * x[1]));
    let h = 1.0 / 32.0;
    let a = solve_dirichlet(
        &DirichletProblem::new(dom(), norm.clone(), cubic(), low).unwrap(),
        h,
    )
    .unwrap();
    let b = solve_dirichlet(
        &DirichletProblem::new(dom(), norm, cubic(), high).unwrap(),
        h,
    )
    .unwrap();
    for (u, v) in a.values.iter().zip(&b.values) {
        assert!(*u <= v + 1e-8);
    }
}

#[test]
fn minimizer_does_not_depend_on_the_initial_guess() {
    let prob = constant(disk(), 15.0);
    let mesh = Arc::new(GridMesh::new(&prob.domain, 1.0 / 32.0).unwrap());
    let run = |seed: u64| {
        let opts = SolveOptions {
            initial: Initial::Random { seed, scale: 30.0 },
            ..Default::default()
        };
        solve_dirichlet_on(&prob, mesh.clone(), &opts).unwrap()
    };
    let (a, b) = (run(1), run(2));
    assert!(a.converged && b.converged);
    let diff = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    assert!(diff <= 1e-6, "{diff}");
    // any admissible field has at least the minimal energy
    let flat = energy_J(&prob, &field_with(&mesh, vec![15.0; mesh.len()]));
    assert!(a.energy <= flat);
}

#[test]
fn anisotropic_p_three_problem_converges() {
    let norm = MinkowskiNorm::new(
        NormFamily::LambdaMu {
            lambda: 1.0,
            mu: 1.0,
        },
        2,
    )
    .unwrap();
    let nl = Nonlinearity::power(4.0, 3.0).unwrap();
    let prob = DirichletProblem::new(disk(), norm, nl, BoundaryData::Constant(6.0)).unwrap();
    let f = solve_dirichlet(&prob, 1.0 / 24.0).unwrap();
    assert!(f.converged);
    assert!(f.values.iter().all(|&v| (-1e-9..=6.0 + 1e-9).contains(&v)));
}

#[test]
fn csv_layout() {
    let f = solve_dirichlet(&constant(square(), 1.0), 1.0 / 16.0).unwrap();
    let csv = f.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,y,u"));
    assert_eq!(lines.count(), f.mesh.len());
}

#[test]
fn invalid_problems_are_rejected() {
    let e = DirichletProblem::new(
        disk(),
        MinkowskiNorm::euclidean(2),
        cubic(),
        BoundaryData::Constant(-1.0),
    );
    assert!(matches!(e, Err(Error::InvalidProblem(_))));
    let e = DirichletProblem::new(
        disk(),
        MinkowskiNorm::euclidean(3),
        cubic(),
        BoundaryData::Constant(1.0),
    );
    assert!(e.is_err());
    assert!(GridMesh::new(&disk(), 0.5).is_err());
}

#[test]
fn large_solution_increases_with_k_on_an_ellipse() {
    let norm = MinkowskiNorm::new(
        NormFamily::LinearMap {
            a: vec![vec![2.0, 0.0], vec![0.0, 1.0]],
        },
        2,
    )
    .unwrap();
    let dom = Domain2D::new(
        Boundary::Ellipse {
            center: [0.0, 0.0],
            a: 1.0,
            b: 0.8,
        },
        DEFAULT_SAMPLES,
    )
    .unwrap();
    let prob =
        LargeProblem::new(AnisotropicDistanceField::new(dom, norm).unwrap(), cubic()).unwrap();
    let h = 1.0 / 32.0;
    let sol =
        monotone_large_solution(&prob, h, &KSchedule::default(), &SolveOptions::default()).unwrap();
    assert!(sol.fields_by_k.len() >= 3);
    for pair in sol.fields_by_k.windows(2) {
        assert!(pair[0].0 < pair[1].0);
        for (a, b) in pair[0].1.values.iter().zip(&pair[1].1.values) {
            assert!(*a <= b + 1e-8);
        }
    }
    assert!(sol.monotonicity_violation <= 1e-8);
    assert!(sol.fields_by_k.last().unwrap().0 <= prob.k_cap(h).unwrap() * (1.0 + 1e-12));
}

#[test]
fn exhausted_schedule_reports_not_stabilized() {
    let prob = LargeProblem::new(
        AnisotropicDistanceField::new(disk(), MinkowskiNorm::euclidean(2)).unwrap(),
        cubic(),
    )
    .unwrap();
    let sched = KSchedule {
        max_steps: 2,
        ..Default::default()
    };
    let r = monotone_large_solution(&prob, 1.0 / 32.0, &sched, &SolveOptions::default());
    assert!(matches!(r, Err(Error::NotStabilized { .. })));
}

#[test]
fn disk_large_solution_respects_the_inscribed_ball_bound() {
    let prob = LargeProblem::new(
        AnisotropicDistanceField::new(disk(), MinkowskiNorm::euclidean(2)).unwrap(),
        cubic(),
    )
    .unwrap();
    let sol = monotone_large_solution(
        &prob,
        1.0 / 32.0,
        &KSchedule::default(),
        &SolveOptions::default(),
    )
    .unwrap();
    let bound = sol.bound.unwrap();
    assert!(bound.worst_ratio <= 1.0, "{}", bound.worst_ratio);
    let bands = boundary_asym_check(
        &sol,
        &prob.field,
        &prob.nl,
        &[(0.1, 0.2)],
        DistanceKind::Anisotropic,
    )
    .unwrap();
    assert!(
        bands[0].count > 0 && (bands[0].median - 1.0).abs() < 0.15,
        "{:?}",
        bands[0]
    );
}
