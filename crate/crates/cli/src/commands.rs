use serde::Serialize;
use serde_json::{json, Value};

use finsler_core::geometry::{AnisotropicDistanceField, Domain2D, DomainSpec, DEFAULT_SAMPLES};
use finsler_core::nonlinearity::{KOProfile, Nonlinearity, NonlinearitySpec};
use finsler_core::norms::{verify_minkowski, MinkowskiNorm, NormSpec};
use finsler_core::ode1d::{asym_check_1d, solve_interval, Interval1DProblem};
use finsler_core::pde::*;
use finsler_core::radial::*;
use finsler_core::Error;

use crate::config;

/// Flags shared by all subcommands.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Overrides {
    pub seed: u64,
    pub grid: Option<f64>,
    pub k_max: Option<f64>,
    pub eps_schedule: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    /// Human-readable acceptance rule.
    pub rule: String,
}

impl Check {
    fn new(name: &str, passed: bool, value: f64, rule: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            value,
            rule: rule.into(),
        }
    }
}

/// Files to write and checks to record.
pub struct Artifacts {
    pub checks: Vec<Check>,
    pub files: Vec<(String, String)>,
}

pub enum Failure {
    Config(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::InvalidNorm(_)
            | Error::InvalidNonlinearity(_)
            | Error::InvalidDomain(_)
            | Error::InvalidProblem(_) => Failure::Config(e.to_string()),
            _ => Failure::Solver(e.to_string()),
        }
    }
}

type Outcome = Result<Artifacts, Failure>;

fn pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn num(v: f64) -> String {
    format!("{v:.12e}")
}

/// `Ψ(w)`, with `Ψ(0⁺)` standing in for nonpositive values.
fn psi_or_sup(profile: &KOProfile, w: f64) -> Result<f64, Error> {
    if w > 0.0 {
        profile.psi(w)
    } else {
        Ok(profile.psi_sup())
    }
}

fn nonlinearity(spec: &NonlinearitySpec, p: f64) -> Result<Nonlinearity, Failure> {
    Ok(spec.build(p)?)
}

pub fn norm_check(cfg: config::NormCheck, o: &Overrides) -> Outcome {
    let norm = cfg.norm.build()?;
    if cfg.samples == 0 {
        return Err(Failure::Config("samples must be positive".into()));
    }
    let report = verify_minkowski(&norm, cfg.samples, o.seed)?;
    let checks = report
        .checks
        .iter()
        .map(|c| {
            Check::new(
                &c.name,
                c.passed,
                c.worst,
                format!("tolerance {:e}", c.tolerance),
            )
        })
        .collect();
    Ok(Artifacts {
        checks,
        files: vec![("report.json".into(), pretty(&report))],
    })
}

pub fn ko_check(cfg: config::KoCheck, _: &Overrides) -> Outcome {
    let nl = nonlinearity(&cfg.nonlinearity, cfg.p)?;
    let report = nl.ko_report()?;
    let mut checks = Vec::new();
    if let Some(rule) = report.analytic_ko {
        checks.push(Check::new(
            "matches_power_rule",
            rule == report.ko_holds,
            f64::from(u8::from(report.ko_holds)),
            "classification equals q > p - 1",
        ));
    }
    let mut files = vec![("report.json".into(), pretty(&report))];
    if report.ko_holds {
        let mut csv = String::from("r,psi\n");
        for &r in &cfg.psi_at {
            if !(r > 0.0) {
                return Err(Failure::Config(format!(
                    "psi_at entries must be positive, got {r}"
                )));
            }
            csv.push_str(&format!("{},{}\n", num(r), num(nl.psi(r)?)));
        }
        files.push(("psi.csv".into(), csv));
    }
    Ok(Artifacts { checks, files })
}

pub fn solve_1d(cfg: config::Solve1d, _: &Overrides) -> Outcome {
    let nl = nonlinearity(&cfg.nonlinearity, cfg.p)?;
    let [a, b] = cfg.interval;
    if cfg.points == 0 || cfg.margins.iter().any(|m| !(*m > 0.0 && 2.0 * m < b - a)) {
        return Err(Failure::Config(
            "points must be positive and margins inside the half-width".into(),
        ));
    }
    let prob = Interval1DProblem::new(a, b, cfg.gamma, nl)?;
    let sol = solve_interval(&prob)?;
    let profile = prob.profile()?;
    let mut csv = String::from("x,u,delta,psi_ratio\n");
    for i in 1..=cfg.points {
        let x = a + (b - a) * i as f64 / (cfg.points + 1) as f64;
        let u = sol.eval(x)?;
        let d = sol.distance(x);
        let ratio = cfg.gamma * psi_or_sup(profile, u)? / d;
        csv.push_str(&format!(
            "{},{},{},{}\n",
            num(x),
            num(u),
            num(d),
            num(ratio)
        ));
    }
    let rows = asym_check_1d(&sol, &cfg.margins)?;
    let closest = rows
        .iter()
        .min_by(|x, y| x.delta.total_cmp(&y.delta))
        .map(|r| (r.ratio_left - 1.0).abs().max((r.ratio_right - 1.0).abs()))
        .unwrap_or(f64::NAN);
    let report = json!({
        "c_m": sol.c_m,
        "v0": sol.v0,
        "flat_zone": sol.flat_zone,
        "asymptotics": rows,
    });
    Ok(Artifacts {
        checks: vec![Check::new(
            "boundary_ratio",
            closest <= 0.01,
            closest,
            "|gamma Psi(u)/delta - 1| <= 0.01 at the smallest margin",
        )],
        files: vec![
            ("solution.csv".into(), csv),
            ("report.json".into(), pretty(&report)),
        ],
    })
}

pub fn solve_radial(cfg: config::SolveRadial, _: &Overrides) -> Outcome {
    let opts = RadialOptions::default();
    let (nl, k) = match &cfg {
        config::SolveRadial::Annulus {
            p,
            nonlinearity: n,
            k,
            ..
        }
        | config::SolveRadial::Ball {
            p,
            nonlinearity: n,
            k,
            ..
        } => (nonlinearity(n, *p)?, *k),
    };
    if let Some(k) = k {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Failure::Config(format!(
                "k must be finite and nonnegative, got {k}"
            )));
        }
    }
    let ko = nl.profile()?;
    let (profile, limit) = match &cfg {
        config::SolveRadial::Annulus { r1, r2, norm, .. } => {
            let norm = norm.build()?;
            let prob = AnnulusProblem::new(vec![0.0; norm.dim()], *r1, *r2, norm, nl.clone())?;
            match k {
                Some(k) => (solve_annulus_k(&prob, k, &opts)?, None),
                None => {
                    let lim = solve_annulus_large(&prob, &opts)?;
                    let info = Some((lim.last_change, lim.capped));
                    (lim.limit().clone(), info)
                }
            }
        }
        config::SolveRadial::Ball { r, dim, .. } => match k {
            Some(k) => (solve_ball_k(*r, *dim, &nl, k, &opts)?, None),
            None => {
                let lim = solve_ball_large(*r, *dim, &nl, &opts)?;
                let info = Some((lim.last_change, lim.capped));
                (lim.limit().clone(), info)
            }
        },
    };
    let (first, last) = (profile.grid[0], profile.grid[profile.grid.len() - 1]);
    let distance = |t: f64| match profile.blowup_end {
        BlowupEnd::Left => t - first,
        BlowupEnd::Right => last - t,
        BlowupEnd::Both => (t - first).min(last - t),
    };
    let mut csv = String::from("t,w,psi_ratio\n");
    for (&t, &w) in profile.grid.iter().zip(&profile.values) {
        let d = distance(t);
        let ratio = if d > 0.0 {
            psi_or_sup(&ko, w)? / d
        } else {
            f64::NAN
        };
        csv.push_str(&format!("{},{},{}\n", num(t), num(w), num(ratio)));
    }
    let monotone = match profile.blowup_end {
        BlowupEnd::Left => profile.values.windows(2).all(|w| w[1] <= w[0]),
        _ => profile.values.windows(2).all(|w| w[1] >= w[0]),
    };
    let mut checks = vec![
        Check::new(
            "newton_converged",
            profile.converged,
            profile.residual,
            "componentwise residual below tolerance",
        ),
        Check::new(
            "monotone_profile",
            monotone,
            0.0,
            "w monotone toward the blow-up end",
        ),
    ];
    let mut report = json!({
        "dim": profile.dim,
        "p": profile.p,
        "nodes": profile.grid.len(),
        "boundary_value": profile.k_ceiling,
        "residual": profile.residual,
    });
    if let Some((last_change, capped)) = limit {
        report["last_change"] = json!(last_change);
        report["capped"] = json!(capped);
        if profile.blowup_end == BlowupEnd::Left
            && ko.osgood() == finsler_core::nonlinearity::Osgood::A1Diverges
        {
            let rows = annulus_asym_check(&profile, &nl, 1e-3)?;
            let band: Vec<f64> = rows
                .iter()
                .filter(|r| r.distance >= 1e-4)
                .map(|r| r.ratio)
                .collect();
            let worst = band.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
            checks.push(Check::new(
                "boundary_ratio",
                !band.is_empty() && worst <= 0.05,
                worst,
                "|Psi(w)/(t - R1) - 1| <= 0.05 for t - R1 in [1e-4, 1e-3]",
            ));
        }
    }
    Ok(Artifacts {
        checks,
        files: vec![
            ("profile.csv".into(), csv),
            ("report.json".into(), pretty(&report)),
        ],
    })
}

struct PlanarSetup {
    domain: Domain2D,
    norm: MinkowskiNorm,
    nl: Nonlinearity,
    h: f64,
    solve: SolveOptions,
    schedule: KSchedule,
}

fn planar(
    domain: &DomainSpec,
    norm: &NormSpec,
    p: f64,
    nl: &NonlinearitySpec,
    h: Option<f64>,
    o: &Overrides,
) -> Result<PlanarSetup, Failure> {
    let h = o.grid.or(h).unwrap_or(config::DEFAULT_GRID);
    if !(h > 0.0 && h.is_finite()) {
        return Err(Failure::Config(format!(
            "grid spacing must be positive, got {h}"
        )));
    }
    let mut solve = SolveOptions::default();
    if let Some(eps) = &o.eps_schedule {
        if eps.is_empty() || eps.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
            return Err(Failure::Config(
                "eps schedule entries must be finite and nonnegative".into(),
            ));
        }
        solve.eps_schedule = eps.clone();
    }
    if let Some(k) = o.k_max {
        if !(k > 0.0) {
            return Err(Failure::Config(format!("k-max must be positive, got {k}")));
        }
    }
    Ok(PlanarSetup {
        domain: domain.build(DEFAULT_SAMPLES)?,
        norm: norm.build()?,
        nl: nonlinearity(nl, p)?,
        h,
        solve,
        schedule: KSchedule {
            k_max: o.k_max,
            ..Default::default()
        },
    })
}

fn large_problem(s: &PlanarSetup) -> Result<LargeProblem, Failure> {
    let field = AnisotropicDistanceField::new(s.domain.clone(), s.norm.clone())?;
    Ok(LargeProblem::new(field, s.nl.clone())?)
}

fn large_summary(sol: &LargeSolution2D) -> (Value, Vec<Check>) {
    let report = json!({
        "k_steps": sol.fields_by_k.iter().map(|(k, _)| *k).collect::<Vec<_>>(),
        "nodes": sol.mesh().len(),
        "interior_converged": sol.interior_converged,
        "capped": sol.capped,
        "last_change": sol.last_change,
        "monotonicity_violation": sol.monotonicity_violation,
        "interior_bound": sol.bound,
        "max_value": sol.limit().max_value(),
    });
    let mut checks = vec![Check::new(
        "monotone_in_k",
        sol.monotonicity_violation <= 1e-8,
        sol.monotonicity_violation,
        "u_k increasing in k at every node within 1e-8",
    )];
    if let Some(b) = sol.bound {
        checks.push(Check::new(
            "inscribed_ball_bound",
            b.worst_ratio <= 1.0,
            b.worst_ratio,
            "u <= large solution of the inscribed Wulff ball",
        ));
    }
    (report, checks)
}

pub fn solve_2d(cfg: config::Planar, o: &Overrides) -> Outcome {
    let s = planar(&cfg.domain, &cfg.norm, cfg.p, &cfg.nonlinearity, cfg.h, o)?;
    match cfg.boundary_value {
        Some(k) => {
            let prob = DirichletProblem::new(
                s.domain.clone(),
                s.norm.clone(),
                s.nl.clone(),
                BoundaryData::Constant(k),
            )?;
            let field = solve_dirichlet_with(&prob, s.h, &s.solve)?;
            let report = json!({
                "h": s.h,
                "nodes": field.mesh.len(),
                "energy": field.energy,
                "residual": field.residual,
                "newton_iterations": field.newton_iterations,
                "max_value": field.max_value(),
            });
            let checks = vec![Check::new(
                "newton_converged",
                field.converged,
                field.residual,
                "residual and backward error below tolerance",
            )];
            Ok(Artifacts {
                checks,
                files: vec![
                    ("field.csv".into(), field.to_csv()),
                    ("report.json".into(), pretty(&report)),
                ],
            })
        }
        None => {
            let prob = large_problem(&s)?;
            let sol = monotone_large_solution(&prob, s.h, &s.schedule, &s.solve)?;
            let (mut report, checks) = large_summary(&sol);
            report["h"] = json!(s.h);
            Ok(Artifacts {
                checks,
                files: vec![
                    ("field.csv".into(), sol.limit().to_csv()),
                    ("report.json".into(), pretty(&report)),
                ],
            })
        }
    }
}

pub fn asymptotics(cfg: config::Planar, o: &Overrides) -> Outcome {
    if cfg.boundary_value.is_some() {
        return Err(Failure::Config(
            "asymptotics works on the large solution; drop boundary_value".into(),
        ));
    }
    let bands: Vec<(f64, f64)> = cfg.bands.iter().map(|b| (b[0], b[1])).collect();
    if bands.is_empty() || bands.iter().any(|(lo, hi)| !(*lo >= 0.0 && lo < hi)) {
        return Err(Failure::Config(
            "bands must be nonempty [lo, hi] pairs with 0 <= lo < hi".into(),
        ));
    }
    let s = planar(&cfg.domain, &cfg.norm, cfg.p, &cfg.nonlinearity, cfg.h, o)?;
    let prob = large_problem(&s)?;
    let sol = monotone_large_solution(&prob, s.h, &s.schedule, &s.solve)?;
    let aniso = boundary_asym_check(
        &sol,
        &prob.field,
        &prob.nl,
        &bands,
        DistanceKind::Anisotropic,
    )?;
    let eucl = boundary_asym_check(&sol, &prob.field, &prob.nl, &bands, DistanceKind::Euclidean)?;
    let (mut report, mut checks) = large_summary(&sol);
    report["h"] = json!(s.h);
    report["anisotropic_bands"] = json!(aniso);
    report["euclidean_bands"] = json!(eucl);
    for band in &aniso {
        checks.push(Check::new(
            &format!("median_ratio_{}_{}", band.lo, band.hi),
            band.count > 0 && (0.85..=1.15).contains(&band.median),
            band.median,
            "band median of Psi(u)/delta_H0 in [0.85, 1.15]",
        ));
    }
    if !s.norm.is_symmetric() || s.norm.theta_bounds().theta2 - s.norm.theta_bounds().theta1 > 1e-9
    {
        let (a, e) = (&aniso[0], &eucl[0]);
        checks.push(Check::new(
            "anisotropic_distance_closer",
            (a.median - 1.0).abs() < (e.median - 1.0).abs(),
            (a.median - 1.0).abs(),
            "first band: |median - 1| smaller with delta_H0 than with Euclidean distance",
        ));
    }
    Ok(Artifacts {
        checks,
        files: vec![
            ("field.csv".into(), sol.limit().to_csv()),
            ("report.json".into(), pretty(&report)),
        ],
    })
}

pub fn uniqueness(cfg: config::Planar, o: &Overrides) -> Outcome {
    let s = planar(&cfg.domain, &cfg.norm, cfg.p, &cfg.nonlinearity, cfg.h, o)?;
    let prob = large_problem(&s)?;
    let report = uniqueness_check(&prob, s.h, &s.solve)?;
    let checks = vec![Check::new(
        "schemes_agree",
        report.interior_rel_diff <= cfg.uniqueness_tol,
        report.interior_rel_diff,
        format!("interior relative sup difference <= {}", cfg.uniqueness_tol),
    )];
    Ok(Artifacts {
        checks,
        files: vec![("report.json".into(), pretty(&report))],
    })
}
