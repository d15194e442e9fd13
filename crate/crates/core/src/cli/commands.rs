use std::sync::Arc;

use nalgebra::DVector;
use serde::Serialize;

use super::config::ScenarioConfig;
use super::output::Table;
use crate::construct::{
    build_fibration_prop2, build_first_integrals, check_assumptions, duality_integrals, duality_sigma,
    half_width_for_radius, AssumptionReport, CompleteSolution, ConstructSettings, DomainBox, ExtensionStep,
    FirstIntegralSubmersion, SigmaSettings,
};
use crate::error::{Error, Result};
use crate::expr::{MapField, ScalarField};
use crate::linalg;
use crate::newton::NewtonSettings;
use crate::standard::{gradient_consistency, verify_characteristic, CharacteristicFunction};
use crate::symplectic::hamiltonian_vf;
use crate::verify::{self, IntegrabilityReport, ProbeSet, ResidualReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Check,
    Construct,
    Characteristic,
    Integrability,
    Fibration,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Construct => "construct",
            Command::Characteristic => "characteristic",
            Command::Integrability => "integrability",
            Command::Fibration => "fibration",
        }
    }
}

/// Everything a command found, in a stable, serializable form.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: Command,
    pub scenario: ScenarioConfig,
    pub hypotheses: Option<AssumptionReport>,
    pub fibration: Option<Vec<String>>,
    pub fibration_swapped: Option<bool>,
    pub history: Vec<ExtensionStep>,
    pub chart_radius: Option<f64>,
    pub sigma_domain: Option<DomainBox>,
    pub checks: Vec<ResidualReport>,
    pub characteristic: Vec<CharacteristicReport>,
    pub integrability: Option<IntegrabilityReport>,
    pub classification: Option<String>,
    pub exit_code: i32,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CharacteristicReport {
    pub lambda: Vec<f64>,
    pub energy: ResidualReport,
    pub gradient: Option<ResidualReport>,
}

impl RunReport {
    fn new(command: Command, scenario: &ScenarioConfig) -> Self {
        RunReport {
            command,
            scenario: scenario.clone(),
            hypotheses: None,
            fibration: None,
            fibration_swapped: None,
            history: Vec::new(),
            chart_radius: None,
            sigma_domain: None,
            checks: Vec::new(),
            characteristic: Vec::new(),
            integrability: None,
            classification: None,
            exit_code: 0,
            error: None,
        }
    }

    /// Every residual report, including those nested in sub-reports.
    pub fn all_checks(&self) -> Vec<&ResidualReport> {
        let mut out: Vec<&ResidualReport> = self.checks.iter().collect();
        for c in &self.characteristic {
            out.push(&c.energy);
            out.extend(c.gradient.iter());
        }
        if let Some(i) = &self.integrability {
            out.extend([&i.first_integral, &i.isotropy, &i.frobenius]);
        }
        out
    }

    pub fn all_passed(&self) -> bool {
        self.all_checks().iter().all(|c| c.passed)
    }

    /// Human-readable lines for the terminal.
    pub fn summary(&self) -> String {
        let mut lines = Vec::new();
        if let Some(h) = &self.hypotheses {
            lines.push(format!(
                "hypothesis (i): {}  hypothesis (ii): {}  (s={}, k={}, l={})",
                pass(h.hypothesis_i),
                pass(h.hypothesis_ii),
                h.s,
                h.k,
                h.l
            ));
        }
        if let Some(f) = &self.fibration {
            lines.push(format!("fibration: ({})", f.join(", ")));
        }
        for step in &self.history {
            lines.push(format!("frame step r={}: y{}", step.r, step.b));
        }
        for c in self.all_checks() {
            lines.push(format!(
                "{:<22} max {:>12.3e}  tol {:>8.1e}  {}",
                c.check,
                c.max_residual,
                c.tolerance,
                pass(c.passed)
            ));
        }
        if let Some(c) = &self.classification {
            lines.push(format!("classification: {c}"));
        }
        if let Some(e) = &self.error {
            lines.push(format!("error: {e}"));
        }
        lines.push(format!("exit {}", self.exit_code));
        lines.join("\n")
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub tables: Vec<Table>,
}

/// Runs a command. Failures are folded into the report's exit code.
pub fn run(command: Command, cfg: &ScenarioConfig) -> RunOutput {
    let mut report = RunReport::new(command, cfg);
    let mut tables = Vec::new();
    let outcome = cfg.validate().and_then(|_| match command {
        Command::Check => cmd_check(cfg, &mut report),
        Command::Fibration => cmd_fibration(cfg, &mut report),
        Command::Construct => cmd_construct(cfg, &mut report, &mut tables),
        Command::Characteristic => cmd_characteristic(cfg, &mut report, &mut tables),
        Command::Integrability => cmd_integrability(cfg, &mut report),
    });
    report.exit_code = match outcome {
        Ok(code) => code,
        Err(e) => {
            report.error = Some(e.to_string());
            e.exit_code()
        }
    };
    RunOutput { report, tables }
}

pub fn construct_settings(cfg: &ScenarioConfig) -> ConstructSettings {
    let mut settings = ConstructSettings::from_tolerances(&cfg.tolerances);
    settings.chart.initial_radius = cfg.domain_radius;
    settings.probes = cfg.probes;
    settings.seed = cfg.seed;
    settings
}

fn fibration(cfg: &ScenarioConfig, h: &ScalarField, report: &mut RunReport) -> Result<MapField> {
    if let Some(c) = cfg.fibration_components() {
        report.fibration = Some(c.to_vec());
        return MapField::from_exprs(c, cfg.s());
    }
    let k = cfg.k.expect("validated");
    let fib = build_fibration_prop2(&hamiltonian_vf(h), &cfg.base_point(), k, cfg.tolerances.rank)?;
    report.fibration = Some(fib.components.clone());
    report.fibration_swapped = Some(fib.swapped);
    Ok(fib.map)
}

fn hypotheses(cfg: &ScenarioConfig, h: &ScalarField, pi: &MapField, report: &mut RunReport) -> Result<()> {
    let rep = check_assumptions(h, pi, &cfg.base_point(), cfg.tolerances.rank)?;
    let err = rep.as_error();
    report.hypotheses = Some(rep);
    err.map_or(Ok(()), Err)
}

fn cmd_check(cfg: &ScenarioConfig, report: &mut RunReport) -> Result<i32> {
    let h = cfg.hamiltonian()?;
    let pi = fibration(cfg, &h, report)?;
    hypotheses(cfg, &h, &pi, report)?;
    Ok(0)
}

fn cmd_fibration(cfg: &ScenarioConfig, report: &mut RunReport) -> Result<i32> {
    let h = cfg.hamiltonian()?;
    let k = cfg.k.or(cfg.fibration_components().map(<[String]>::len)).expect("validated");
    if k > cfg.s() {
        return Err(Error::Config(format!("fibration rank k = {k} exceeds s = {}", cfg.s())));
    }
    let fib = build_fibration_prop2(&hamiltonian_vf(&h), &cfg.base_point(), k, cfg.tolerances.rank)?;
    report.fibration = Some(fib.components.clone());
    report.fibration_swapped = Some(fib.swapped);
    hypotheses(cfg, &h, &fib.map, report)?;
    Ok(0)
}

/// Fibration, first integrals and complete solution of a scenario.
#[derive(Debug, Clone)]
pub struct ScenarioSolution {
    pub h: ScalarField,
    pub pi: MapField,
    pub f: MapField,
    pub sigma: Arc<CompleteSolution>,
    /// Present when `F` was constructed rather than derived from a
    /// closed-form solution.
    pub first_integrals: Option<FirstIntegralSubmersion>,
}

/// Builds the fibration, first integrals and complete solution described
/// by a scenario.
pub fn solve(cfg: &ScenarioConfig) -> Result<ScenarioSolution> {
    cfg.validate()?;
    pipeline(cfg, &mut RunReport::new(Command::Construct, cfg))
}

fn pipeline(cfg: &ScenarioConfig, report: &mut RunReport) -> Result<ScenarioSolution> {
    let h = cfg.hamiltonian()?;
    let pi = fibration(cfg, &h, report)?;
    let k = pi.target_dim();
    if let Some(sol) = &cfg.solution {
        let map = MapField::from_exprs(&sol.components, cfg.s())?;
        let mut sigma = CompleteSolution::analytic(map, k, cfg.solution_box().expect("present"))?;
        sigma = sigma.with_newton(NewtonSettings::default().with_tol(cfg.tolerances.newton));
        let sigma = Arc::new(sigma);
        report.sigma_domain = Some(sigma.domain().clone());
        return Ok(ScenarioSolution { f: duality_integrals(sigma.clone()), h, pi, sigma, first_integrals: None });
    }
    hypotheses(cfg, &h, &pi, report)?;
    let m = cfg.base_point();
    let fi = build_first_integrals(&h, &pi, &m, &construct_settings(cfg))?;
    report.history = fi.history.clone();
    report.chart_radius = Some(fi.chart.domain_radius());
    let stacked_jac = pi.stack(&fi.map)?.jacobian(m.as_slice())?;
    let settings = SigmaSettings {
        newton: NewtonSettings::default().with_tol(cfg.tolerances.newton),
        initial_half_width: Some(half_width_for_radius(&stacked_jac, fi.chart.domain_radius())),
        seed: cfg.seed,
        rank_tol: cfg.tolerances.rank,
        ..SigmaSettings::default()
    };
    let sigma = Arc::new(duality_sigma(&pi, &fi, &m, &settings)?);
    report.sigma_domain = Some(sigma.domain().clone());
    Ok(ScenarioSolution { h, pi, f: fi.map.clone(), sigma, first_integrals: Some(fi) })
}

/// Points of a regular grid with `per_axis` points along each edge.
pub fn grid_points(domain: &DomainBox, per_axis: usize) -> Vec<DVector<f64>> {
    let d = domain.dim();
    let coord = |axis: usize, i: usize| {
        if per_axis == 1 {
            domain.center[axis]
        } else {
            let t = i as f64 / (per_axis - 1) as f64;
            domain.center[axis] + domain.half_widths[axis] * (2.0 * t - 1.0)
        }
    };
    let total = per_axis.pow(d as u32);
    (0..total)
        .map(|mut idx| {
            let mut z = DVector::zeros(d);
            for axis in (0..d).rev() {
                z[axis] = coord(axis, idx % per_axis);
                idx /= per_axis;
            }
            z
        })
        .collect()
}

fn sub_box(domain: &DomainBox, start: usize, len: usize, shrink: f64) -> DomainBox {
    DomainBox {
        center: domain.center[start..start + len].to_vec(),
        half_widths: domain.half_widths[start..start + len].iter().map(|h| h * shrink).collect(),
    }
}

fn names(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}{i}")).collect()
}

fn cmd_construct(cfg: &ScenarioConfig, report: &mut RunReport, tables: &mut Vec<Table>) -> Result<i32> {
    let p = pipeline(cfg, report)?;
    let sigma = &p.sigma;
    let stacked = p.pi.stack(&p.f)?;
    let tol = cfg.tolerances.residual;
    let rank_tol = cfg.tolerances.rank;
    let (s, k, l) = (cfg.s(), sigma.k(), sigma.l());

    let probes_z = ProbeSet::in_box(sigma.domain(), cfg.probes, cfg.seed);
    let points = probes_z.points.iter().map(|z| sigma.eval(z)).collect::<Result<Vec<_>>>()?;
    let probes_x = ProbeSet { points, seed: Some(cfg.seed) };
    // Phase-space points near the image of the box centre, reached linearly.
    let center = sigma.domain().center();
    let (x_c, j_c) = sigma.eval_with_jacobian(&center)?;
    let near = ProbeSet {
        points: sigma
            .domain()
            .sample(cfg.probes, cfg.seed + 1)
            .iter()
            .map(|z| &x_c + &j_c * ((z - &center) * 0.5))
            .collect(),
        seed: Some(cfg.seed + 1),
    };
    report.checks.push(verify::hje_residual(sigma, &p.h, &p.pi, &probes_z, tol)?);
    report.checks.push(verify::isotropy_residual(sigma, &probes_z, tol)?);
    report.checks.push(verify::first_integral_residual(&p.f, &p.h, &probes_x, verify::FIRST_INTEGRAL_TOL)?);
    let sub = verify::submersion_checks(&p.pi, &p.f, &probes_x, rank_tol)?;
    report.checks.extend([sub.transversality, sub.isotropy, sub.frobenius]);
    report.checks.push(verify::sigma_roundtrip(sigma, &stacked, &probes_z, ROUNDTRIP_TOL)?);
    report.checks.push(verify::stacked_roundtrip(sigma, &stacked, &near, ROUNDTRIP_TOL)?);

    let grid = grid_points(sigma.domain(), cfg.lambda_grid);
    let mut sigma_rows = Vec::with_capacity(grid.len());
    let mut f_rows = Vec::with_capacity(grid.len());
    for z in &grid {
        let x = sigma.eval(z)?;
        let fx = p.f.eval(x.as_slice())?;
        sigma_rows.push(z.iter().chain(x.iter()).copied().collect());
        f_rows.push(x.iter().chain(fx.iter()).copied().collect());
    }
    let phase: Vec<String> = names("q", s).into_iter().chain(names("p", s)).collect();
    tables.push(Table {
        file: "sigma.csv".into(),
        header: names("n", k).into_iter().chain(names("lambda", l)).chain(phase.iter().cloned()).collect(),
        rows: sigma_rows,
    });
    tables.push(Table {
        file: "first_integrals.csv".into(),
        header: phase.into_iter().chain(names("F", l)).collect(),
        rows: f_rows,
    });
    Ok(if report.all_passed() { 0 } else { 1 })
}

pub const ROUNDTRIP_TOL: f64 = 1e-8;
pub const CHARACTERISTIC_TOL: f64 = 1e-6;
/// Fraction of the solution box covered by characteristic-function grids.
const GRID_SHRINK: f64 = 0.8;

fn cmd_characteristic(cfg: &ScenarioConfig, report: &mut RunReport, tables: &mut Vec<Table>) -> Result<i32> {
    let s = cfg.s();
    let expected: Vec<String> = names("q", s);
    if cfg.fibration_components() != Some(expected.as_slice()) {
        return Err(Error::Config(format!("characteristic functions need fibration = ({})", expected.join(", "))));
    }
    let p = pipeline(cfg, report)?;
    let sigma = &p.sigma;
    let n_box = sub_box(sigma.domain(), 0, s, GRID_SHRINK);
    let l_box = sub_box(sigma.domain(), s, s, GRID_SHRINK);
    let q_grid = grid_points(&n_box, cfg.q_grid);
    let q0 = n_box.center();
    let lambdas = grid_points(&l_box, cfg.lambda_grid);
    let central = lambdas.len() / 2;
    let mut rows = Vec::new();
    for (i, lambda) in lambdas.iter().enumerate() {
        let w = CharacteristicFunction::from_solution(sigma.clone(), lambda, &q0)?;
        let probes = ProbeSet::from_points(q_grid.clone());
        let energy = verify_characteristic(&w, &p.h, &probes, CHARACTERISTIC_TOL)?;
        let gradient = if i == central { Some(gradient_consistency(&w, &probes, CHARACTERISTIC_TOL)?) } else { None };
        for q in &q_grid {
            let momenta = w.gradient(q)?;
            let x: Vec<f64> = q.iter().chain(momenta.iter()).copied().collect();
            let mut row: Vec<f64> = lambda.iter().chain(q.iter()).copied().collect();
            row.push(w.eval(q)?);
            row.push(p.h.eval(&x)?);
            rows.push(row);
        }
        report.characteristic.push(CharacteristicReport { lambda: lambda.iter().copied().collect(), energy, gradient });
    }
    let mut header: Vec<String> = names("lambda", s).into_iter().chain(names("q", s)).collect();
    header.extend(["W".to_string(), "H".to_string()]);
    tables.push(Table { file: "characteristic.csv".into(), header, rows });
    Ok(if report.all_passed() { 0 } else { 1 })
}

fn cmd_integrability(cfg: &ScenarioConfig, report: &mut RunReport) -> Result<i32> {
    let h = cfg.hamiltonian()?;
    let Some(integrals) = &cfg.integrals else {
        return Err(Error::Config("integrability needs `integrals`".into()));
    };
    let f = MapField::from_exprs(integrals, cfg.s())?;
    let m = cfg.base_point();
    let df = f.jacobian(m.as_slice())?;
    let rank = linalg::rank(&df, cfg.tolerances.rank);
    if rank != f.target_dim() {
        return Err(Error::Hypothesis {
            which: "submersion".into(),
            detail: format!("F has rank {rank} < {} at the base point", f.target_dim()),
        });
    }
    let probes = ProbeSet::in_ball(&m, cfg.domain_radius, cfg.probes, cfg.seed);
    let rep = verify::integrability_report(&h, &f, &probes, cfg.tolerances.rank)?;
    report.classification = Some(rep.label().to_string());
    let code = if rep.non_commutative { 0 } else { 1 };
    report.integrability = Some(rep);
    Ok(code)
}
