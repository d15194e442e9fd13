//! One PASS/FAIL line per acceptance criterion.
//!
//! Runs as a plain binary so every criterion is reported even when an
//! earlier one fails. The process fails when any criterion outside
//! `KNOWN_RED` fails, or when a `KNOWN_RED` criterion starts passing.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use hjkit::cli::{self, registry, Command, FibrationSpec, ScenarioConfig, ScenarioSolution};
use hjkit::construct::{build_fibration_prop2, chart_probes, vertical_basis, CompleteSolution, DomainBox};
use hjkit::expr::{MapField, ScalarField};
use hjkit::linalg;
use hjkit::standard::{verify_characteristic, CharacteristicFunction};
use hjkit::symplectic::{apply_j, hamiltonian_vf, lie_bracket, poisson, ConstantField, Subspace, VectorField};
use hjkit::verify::{self, ProbeSet};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KNOWN_RED: &[(usize, &str)] = &[(
    9,
    "dq2(X_H) = {q2, H} = p2 is nonzero, so (p1, p2, q2) is not a first-integrals submersion \
     and cannot be integrable in either sense",
)];

const ROUNDTRIP_TOL: f64 = 1e-8;
const RESIDUAL_TOL: f64 = 1e-5;
const FIRST_INTEGRAL_TOL: f64 = 1e-6;
const CHARACTERISTIC_TOL: f64 = 1e-6;
const FROBENIUS_TOL: f64 = 1e-4;
const RANK_TOL: f64 = 1e-9;
const PROBES: usize = 50;

struct Outcome {
    pass: bool,
    detail: String,
}

type Check = std::result::Result<Outcome, String>;
type Criterion<'a> = (usize, &'static str, Box<dyn FnOnce() -> Check + 'a>);

fn outcome(pass: bool, detail: String) -> Check {
    Ok(Outcome { pass, detail })
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

fn scenario_file(name: &str) -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.json"));
    ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

struct Solved {
    name: String,
    cfg: ScenarioConfig,
    sol: ScenarioSolution,
}

fn sub_box(domain: &DomainBox, start: usize, len: usize, shrink: f64) -> DomainBox {
    DomainBox {
        center: domain.center[start..start + len].to_vec(),
        half_widths: domain.half_widths[start..start + len].iter().map(|h| h * shrink).collect(),
    }
}

fn roundtrip(solved: &[Solved]) -> Check {
    let mut worst = (0.0_f64, 0.0_f64);
    for (i, s) in solved.iter().enumerate() {
        let stacked = s.sol.pi.stack(&s.sol.f).map_err(err)?;
        let seed = 100 + i as u64;
        let zs = ProbeSet::in_box(s.sol.sigma.domain(), 100, seed);
        let forward = verify::sigma_roundtrip(&s.sol.sigma, &stacked, &zs, ROUNDTRIP_TOL).map_err(err)?;
        let xs = s.sol.sigma.domain().sample(100, seed + 1000);
        let xs = xs.iter().map(|z| s.sol.sigma.eval(z)).collect::<hjkit::Result<Vec<_>>>().map_err(err)?;
        let back = verify::stacked_roundtrip(&s.sol.sigma, &stacked, &ProbeSet::from_points(xs), ROUNDTRIP_TOL)
            .map_err(err)?;
        if !forward.passed || !back.passed {
            return outcome(
                false,
                format!("{}: (Pi,F)oSigma {:e}, Sigmao(Pi,F) {:e}", s.name, forward.max_residual, back.max_residual),
            );
        }
        worst = (worst.0.max(forward.max_residual), worst.1.max(back.max_residual));
    }
    outcome(
        true,
        format!(
            "{} scenarios, max |(Pi,F)oSigma - id| {:.1e}, max |Sigmao(Pi,F) - id| {:.1e}",
            solved.len(),
            worst.0,
            worst.1
        ),
    )
}

fn pipeline_soundness(solved: &[Solved]) -> Check {
    let mut lines = Vec::new();
    let mut pass = true;
    for s in solved.iter().filter(|s| s.name == "harmonic-2" || s.name == "anisotropic") {
        let fi = s.sol.first_integrals.as_ref().ok_or("expected a constructed F")?;
        let radius = 0.5 * fi.chart.domain_radius();
        let xs = ProbeSet::from_points(chart_probes(&fi.chart, radius, PROBES, 7).map_err(err)?);
        let first = verify::first_integral_residual(&s.sol.f, &s.sol.h, &xs, FIRST_INTEGRAL_TOL).map_err(err)?;
        // Central difference of F along X_H, independent of the chart differentials.
        let xh = hamiltonian_vf(&s.sol.h);
        let mut fd_first = 0.0_f64;
        for x in &xs.points {
            let d = xh.eval(x).map_err(err)? * 1e-5;
            let fp = s.sol.f.eval((x + &d).as_slice()).map_err(err)?;
            let fm = s.sol.f.eval((x - &d).as_slice()).map_err(err)?;
            fd_first = fd_first.max(((fp - fm) / 2e-5).amax());
        }
        let trans = verify::transversality_check(&s.sol.pi, &s.sol.f, &xs, RANK_TOL).map_err(err)?;
        let iso = verify::kernel_isotropy_check(&s.sol.f, &xs, RANK_TOL, RESIDUAL_TOL).map_err(err)?;
        let zs = ProbeSet::in_box(s.sol.sigma.domain(), PROBES, 11);
        let hje = verify::hje_residual(&s.sol.sigma, &s.sol.h, &s.sol.pi, &zs, RESIDUAL_TOL).map_err(err)?;
        let lag = verify::isotropy_residual(&s.sol.sigma, &zs, RESIDUAL_TOL).map_err(err)?;
        let ok =
            first.passed && fd_first <= FIRST_INTEGRAL_TOL && trans.passed && iso.passed && hje.passed && lag.passed;
        pass &= ok;
        lines.push(format!(
            "{}: dF(X_H) {:.1e} (fd {:.1e}), rank deficit {}, Ker F_* omega {:.1e}, hje {:.1e}, isotropy {:.1e}",
            s.name,
            first.max_residual,
            fd_first,
            trans.max_residual,
            iso.max_residual,
            hje.max_residual,
            lag.max_residual
        ));
    }
    if lines.len() != 2 {
        return Err("oscillator scenarios missing from the registry".into());
    }
    outcome(pass, lines.join("; "))
}

fn rectification(solved: &[Solved]) -> Check {
    let mut worst = 0.0_f64;
    let mut count = 0;
    for s in solved {
        let Some(fi) = &s.sol.first_integrals else { continue };
        let chart = &fi.chart;
        let radius = 0.5 * chart.domain_radius();
        for x in chart_probes(chart, radius, PROBES, 13).map_err(err)? {
            let (_, dpsi) = chart.inverse_with_jacobian(&x).map_err(err)?;
            for (i, field) in chart.frame().iter().enumerate() {
                let w = linalg::solve(&dpsi, &field.eval(&x).map_err(err)?).map_err(err)?;
                let mut e = DVector::zeros(w.len());
                e[i] = 1.0;
                worst = worst.max((w - e).amax());
            }
        }
        count += 1;
    }
    outcome(worst <= RESIDUAL_TOL, format!("{count} charts x {PROBES} probes, max |psi^-1_* X_i - e_i| {worst:.1e}"))
}

fn random_polynomial(rng: &mut ChaCha8Rng) -> String {
    let vars = ["q1", "q2", "p1", "p2"];
    let terms = rng.gen_range(2..=5);
    (0..terms)
        .map(|_| {
            let c: f64 = rng.gen_range(-1.0..1.0);
            let mut t = format!("({c:.6})");
            for _ in 0..rng.gen_range(1..=3) {
                let var = vars[rng.gen_range(0..vars.len())];
                t.push_str(&format!("*{var}"));
            }
            t
        })
        .collect::<Vec<_>>()
        .join("+")
}

fn footnote_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0_f64;
    const STEP: f64 = 1e-4;
    for _ in 0..50 {
        let f = ScalarField::parse(&random_polynomial(&mut rng), 2).map_err(err)?;
        let g = ScalarField::parse(&random_polynomial(&mut rng), 2).map_err(err)?;
        let (xf, xg) = (hamiltonian_vf(&f), hamiltonian_vf(&g));
        for _ in 0..3 {
            let x = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
            let bracket = lie_bracket(&xf, &xg, &x).map_err(err)?;
            let mut grad = DVector::zeros(4);
            for i in 0..4 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += STEP;
                xm[i] -= STEP;
                grad[i] = (poisson(&f, &g, &xp).map_err(err)? - poisson(&f, &g, &xm).map_err(err)?) / (2.0 * STEP);
            }
            worst = worst.max((bracket + apply_j(&grad)).amax());
        }
    }
    outcome(worst <= RESIDUAL_TOL, format!("50 pairs x 3 points, max |[X_f,X_g] + X_{{f,g}}| {worst:.1e}"))
}

fn complement_algebra() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0_f64;
    let mut dim_failures = 0;
    for _ in 0..200 {
        let s = rng.gen_range(1..=4);
        let n = 2 * s;
        let d = rng.gen_range(0..=n);
        let basis = DMatrix::from_fn(n, d, |_, _| rng.gen_range(-1.0..1.0));
        let space = Subspace::span(DVector::zeros(n), &basis, RANK_TOL);
        let perp = space.symp_orth().map_err(err)?;
        if space.dim() + perp.dim() != n {
            dim_failures += 1;
            continue;
        }
        let back = perp.symp_orth().map_err(err)?;
        match linalg::subspace_distance(back.basis(), space.basis()) {
            Some(a) => worst = worst.max(a),
            None => dim_failures += 1,
        }
    }
    outcome(
        dim_failures == 0 && worst <= 1e-9,
        format!("200 subspaces, {dim_failures} dimension failures, max angle((V^perp)^perp, V) {worst:.1e}"),
    )
}

fn characteristic_energy(name: &str, cfg: &ScenarioConfig, sol: &ScenarioSolution) -> std::result::Result<f64, String> {
    let s = cfg.s();
    let sigma = &sol.sigma;
    let n_box = sub_box(sigma.domain(), 0, s, 0.8);
    let l_box = sub_box(sigma.domain(), s, s, 0.8);
    let q_grid = ProbeSet::from_points(cli::grid_points(&n_box, cfg.q_grid));
    let mut worst = 0.0_f64;
    for lambda in cli::grid_points(&l_box, cfg.lambda_grid) {
        let w = CharacteristicFunction::from_solution(sigma.clone(), &lambda, &n_box.center()).map_err(err)?;
        let rep = verify_characteristic(&w, &sol.h, &q_grid, CHARACTERISTIC_TOL).map_err(err)?;
        if !rep.passed {
            return Err(format!("{name}: energy varies by {:e} at lambda {:?}", rep.max_residual, lambda.as_slice()));
        }
        worst = worst.max(rep.max_residual);
    }
    Ok(worst)
}

fn standard_case(solved: &[Solved]) -> Check {
    let mut worst = 0.0_f64;
    let mut fixtures = 0;
    for s in solved {
        match characteristic_energy(&s.name, &s.cfg, &s.sol) {
            Ok(w) => worst = worst.max(w),
            Err(e) => return outcome(false, e),
        }
        fixtures += 1;
    }
    for name in ["free-particle-closed-form", "harmonic-closed-form"] {
        let cfg = scenario_file(name);
        let sol = cli::solve(&cfg).map_err(err)?;
        match characteristic_energy(name, &cfg, &sol) {
            Ok(w) => worst = worst.max(w),
            Err(e) => return outcome(false, e),
        }
        fixtures += 1;
    }
    let cfg = scenario_file("free-particle-closed-form");
    let sol = cli::solve(&cfg).map_err(err)?;
    let n_box = sub_box(sol.sigma.domain(), 0, 1, 0.8);
    let l_box = sub_box(sol.sigma.domain(), 1, 1, 0.8);
    let q0 = n_box.center();
    let mut free = 0.0_f64;
    for lambda in cli::grid_points(&l_box, 5) {
        let w = CharacteristicFunction::from_solution(sol.sigma.clone(), &lambda, &q0).map_err(err)?;
        for q in cli::grid_points(&n_box, 9) {
            let exact = lambda[0] * (q[0] - q0[0]);
            free = free.max((w.eval(&q).map_err(err)? - exact).abs());
        }
    }
    outcome(
        worst <= CHARACTERISTIC_TOL && free <= 1e-12,
        format!("{fixtures} fixtures, max energy variation {worst:.1e}; free particle |W - lambda(q-q0)| {free:.1e}"),
    )
}

fn prop2_fibrations() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = 0;
    let mut swaps = 0;
    for _ in 0..100 {
        let s = rng.gen_range(1..=3);
        let k = rng.gen_range(1..=s);
        let n = 2 * s;
        let momentum_only = rng.gen_bool(0.3);
        let mut x = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        if momentum_only {
            x.rows_mut(0, s).fill(0.0);
        }
        for i in 0..n {
            if rng.gen_bool(0.2) {
                x[i] = 0.0;
            }
        }
        if x.amax() == 0.0 {
            x[n - 1] = 1.0;
        }
        let m = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
        let fib = build_fibration_prop2(&ConstantField::new(x.clone()), &m, k, 1e-12).map_err(err)?;
        swaps += fib.swapped as usize;
        let ker = vertical_basis(&fib.map, &m, RANK_TOL).map_err(err)?;
        let coisotropic = Subspace::new(m.clone(), &ker, RANK_TOL).map_err(err)?.classify().map_err(err)?.coisotropic;
        let col = DMatrix::from_column_slice(n, 1, x.as_slice());
        let transverse = linalg::rank(&linalg::hstack(&[&ker, &col]), RANK_TOL) == ker.ncols() + 1;
        if !(coisotropic && transverse && ker.ncols() == n - k) {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("100 instances ({swaps} swapped), {failures} failures"))
}

fn auto_fibrations() -> Check {
    // Harmonic scenarios are moved to points where X_H is purely in momentum,
    // so the canonical swap is exercised.
    let moved: &[(&str, &[f64])] =
        &[("harmonic-1", &[1.0, 0.0]), ("harmonic-2", &[0.3, 0.1, 0.0, 0.0]), ("anisotropic", &[0.3, 0.1, 0.0, 0.0])];
    let mut lines = Vec::new();
    let mut pass = true;
    for sc in registry() {
        let mut cfg = sc.config.clone();
        cfg.fibration = FibrationSpec::Keyword("auto".into());
        cfg.k = Some(cfg.s());
        if let Some((_, m)) = moved.iter().find(|(n, _)| *n == sc.name()) {
            cfg.base_point = m.to_vec();
        }
        let out = cli::run(Command::Construct, &cfg);
        let r = &out.report;
        let worst = r.all_checks().iter().map(|c| c.max_residual).fold(0.0, f64::max);
        let ok = r.exit_code == 0 && worst <= RESIDUAL_TOL;
        pass &= ok;
        lines.push(format!(
            "{} [{}] exit {} max {:.1e}",
            sc.name(),
            r.fibration.as_deref().unwrap_or_default().join(","),
            r.exit_code,
            worst
        ));
    }
    outcome(pass, lines.join("; "))
}

fn classification() -> Check {
    let h1 = ScalarField::parse("(q1^2+p1^2)/2", 1).map_err(err)?;
    let f1 = MapField::from_scalars(vec![h1.clone()], 1);
    let probes1 = ProbeSet::in_ball(&v(&[0.0, 1.0]), 0.5, PROBES, 0);
    let a = verify::integrability_report(&h1, &f1, &probes1, RANK_TOL).map_err(err)?;

    let h2 = ScalarField::parse("(p1^2+p2^2)/2", 2).map_err(err)?;
    let f2 = MapField::from_exprs(&["p1", "p2", "q2"], 2).map_err(err)?;
    let probes2 = ProbeSet::in_ball(&v(&[0.1, -0.2, 1.0, 0.5]), 0.5, PROBES, 0);
    let b = verify::integrability_report(&h2, &f2, &probes2, RANK_TOL).map_err(err)?;

    let first_ok = a.commutative && a.frobenius.max_residual <= FROBENIUS_TOL;
    let second_ok = b.non_commutative && !b.commutative && b.frobenius.max_residual <= FROBENIUS_TOL;
    outcome(
        first_ok && second_ok,
        format!(
            "(H, F=H): {} (Frobenius {:.1e}); free particle (p1,p2,q2): {} (dF(X_H) {:.1e}, isotropy {}, Frobenius {:.1e})",
            a.label(),
            a.frobenius.max_residual,
            b.label(),
            b.first_integral.max_residual,
            if b.isotropy.passed { "ok" } else { "fails" },
            b.frobenius.max_residual
        ),
    )
}

fn negative_controls() -> Check {
    let h = ScalarField::parse("p1^2/2", 1).map_err(err)?;
    let pi = MapField::from_exprs(&["q1"], 1).map_err(err)?;
    let domain = DomainBox::new(&v(&[0.0, 1.0]), &v(&[0.5, 0.5]));
    let perturbed =
        CompleteSolution::analytic(MapField::from_exprs(&["q1", "p1 + 0.1*q1"], 1).map_err(err)?, 1, domain.clone())
            .map_err(err)?;
    let hje =
        verify::hje_residual(&perturbed, &h, &pi, &ProbeSet::in_box(&domain, PROBES, 3), RESIDUAL_TOL).map_err(err)?;

    let cfg = scenario_file("harmonic-closed-form");
    let sol = cli::solve(&cfg).map_err(err)?;
    let n_box = sub_box(sol.sigma.domain(), 0, 1, 0.8);
    let w = CharacteristicFunction::from_solution(sol.sigma.clone(), &v(&[1.0]), &n_box.center()).map_err(err)?;
    let grid = ProbeSet::from_points(cli::grid_points(&n_box, cfg.q_grid));
    let scaled = verify_characteristic(&w.scaled(1.01), &sol.h, &grid, CHARACTERISTIC_TOL).map_err(err)?;

    let f = MapField::from_exprs(&["q1"], 1).map_err(err)?;
    let probes = ProbeSet::in_ball(&v(&[0.0, 1.0]), 0.5, PROBES, 3);
    let q1 = verify::first_integral_residual(&f, &h, &probes, FIRST_INTEGRAL_TOL).map_err(err)?;

    outcome(
        !hje.passed && !scaled.passed && !q1.passed,
        format!(
            "perturbed Sigma hje {:.1e} ({}), scaled sigma energy {:.1e} ({}), F=q1 dF(X_H) {:.1e} ({})",
            hje.max_residual,
            flag(hje.passed),
            scaled.max_residual,
            flag(scaled.passed),
            q1.max_residual,
            flag(q1.passed)
        ),
    )
}

fn flag(passed: bool) -> &'static str {
    if passed {
        "not flagged"
    } else {
        "flagged"
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let solved: Vec<Solved> = registry()
        .into_iter()
        .map(|sc| {
            let sol = cli::solve(&sc.config).unwrap_or_else(|e| panic!("{}: {e}", sc.name()));
            Solved { name: sc.name().to_string(), cfg: sc.config, sol }
        })
        .collect();
    println!("registry solved in {:.1}s", start.elapsed().as_secs_f64());

    let criteria: Vec<Criterion> = vec![
        (1, "duality round trip", Box::new(|| roundtrip(&solved))),
        (2, "first-integral pipeline", Box::new(|| pipeline_soundness(&solved))),
        (3, "rectification", Box::new(|| rectification(&solved))),
        (4, "bracket identity", Box::new(footnote_identity)),
        (5, "complement algebra", Box::new(complement_algebra)),
        (6, "characteristic functions", Box::new(|| standard_case(&solved))),
        (7, "darboux fibrations", Box::new(prop2_fibrations)),
        (8, "auto fibration end to end", Box::new(auto_fibrations)),
        (9, "integrability classification", Box::new(classification)),
        (10, "negative controls", Box::new(negative_controls)),
    ];

    let mut unexpected = Vec::new();
    for (id, title, check) in criteria {
        let t = Instant::now();
        let result = check();
        let known = KNOWN_RED.iter().find(|(k, _)| *k == id);
        let (pass, detail) = match result {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        println!(
            "criterion {id:>2} {}: {title}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
        match (pass, known) {
            (false, Some((_, why))) => println!("             known red: {why}"),
            (false, None) => unexpected.push(id),
            (true, Some(_)) => {
                println!("             listed as known red but passed");
                unexpected.push(id);
            }
            (true, None) => {}
        }
    }
    println!("total {:.1}s", start.elapsed().as_secs_f64());
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected outcomes for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
