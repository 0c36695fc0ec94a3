//! The six subcommands. Each writes its artifacts to the output directory
//! and returns a plain-text summary.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use isps_core::attractor::{absorbing_ball, approximate_attractor, AttractorApprox, AttractorConfig};
use isps_core::sampling::{quasi_random_ball, random_ball_point, random_step_signal, rng_stream};
use isps_core::semiflow::{default_seeds, equilibria, solve, EvolutionProblem, NewtonConfig, Nonlinearity};
use isps_core::signals::{HullSample, StepSignal};
use isps_core::spectral::SpectralState;
use isps_core::stability::{
    check_envelope, default_sector_grid, estimate_gain_curve, isps_envelope, verify_dissipation, verify_sector,
    EnvelopeReport, GainConfig, StabilityCertificate, EPS_CLUSTER,
};

use crate::config::ScenarioConfig;
use crate::svg::{chart, Series};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Equilibria,
    Attractor,
    GainCurve,
    Envelope,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Equilibria => "equilibria",
            Command::Attractor => "attractor",
            Command::GainCurve => "gain-curve",
            Command::Envelope => "envelope",
            Command::Verify => "verify",
        }
    }
}

struct Output<'a> {
    cfg: &'a ScenarioConfig,
}

impl Output<'_> {
    fn dir(&self) -> &Path {
        &self.cfg.output.directory
    }

    fn write(&self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        fs::write(self.dir().join(name), contents)?;
        Ok(())
    }

    fn csv(&self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<(), CliError> {
        if self.cfg.wants("csv") {
            let mut buf = Vec::new();
            f(&mut buf)?;
            self.write(name, &buf)?;
        }
        Ok(())
    }

    fn svg(&self, name: &str, f: impl FnOnce() -> String) -> Result<(), CliError> {
        if self.cfg.wants("svg") {
            self.write(name, f().as_bytes())?;
        }
        Ok(())
    }
}

/// Runs `cmd` and returns its summary; the summary is also written to
/// `summary.txt` next to the resolved `scenario.toml`.
pub fn run(cmd: Command, cfg: &ScenarioConfig) -> Result<String, CliError> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output.directory)?;
    let out = Output { cfg };
    out.write("scenario.toml", cfg.to_toml().as_bytes())?;
    let summary = match cmd {
        Command::Simulate => simulate(cfg, &out),
        Command::Equilibria => find_equilibria(cfg, &out),
        Command::Attractor => attractor(cfg, &out),
        Command::GainCurve => gain_curve(cfg, &out),
        Command::Envelope => envelope(cfg, &out),
        Command::Verify => verify(cfg, &out),
    }?;
    out.write("summary.txt", summary.as_bytes())?;
    Ok(summary)
}

fn simulate(cfg: &ScenarioConfig, out: &Output) -> Result<String, CliError> {
    let p = cfg.evolution_problem()?;
    let x0 = cfg.initial_state()?;
    let u = cfg.signal()?;
    let t_end = cfg.experiment.t_end.unwrap_or(10.0);
    let traj = solve(&p, &x0, &u, t_end, &cfg.integrator())?;
    out.csv("trajectory.csv", |w| traj.write_csv(w))?;
    out.svg("norm.svg", || {
        let pts = traj
            .times
            .iter()
            .zip(&traj.states)
            .map(|(&t, x)| (t, x.norm()))
            .collect();
        chart("state norm", "t", "||x(t)||", &[Series::line("||x(t)||", pts)])
    })?;
    let max_norm = traj.states.iter().map(SpectralState::norm).fold(0.0, f64::max);
    let mut s = String::new();
    let _ = writeln!(s, "simulate: t_end = {t_end}, samples = {}", traj.times.len());
    let _ = writeln!(s, "initial norm = {}", x0.norm());
    let _ = writeln!(s, "final norm = {}", traj.endpoint().norm());
    let _ = writeln!(s, "max norm = {max_norm}");
    Ok(s)
}

fn find_equilibria(cfg: &ScenarioConfig, out: &Output) -> Result<String, CliError> {
    let p = cfg.evolution_problem()?;
    let newton = NewtonConfig {
        cluster_radius: cfg.experiment.cluster_radius.unwrap_or(1e-6),
        ..NewtonConfig::default()
    };
    let rep = equilibria(&p, &default_seeds(p.modes()), &newton)?;
    out.csv("equilibria.csv", |w| {
        isps_core::attractor::write_cloud_csv(w, &rep.roots)
    })?;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "equilibria: {} found, {} seeds dropped",
        rep.roots.len(),
        rep.dropped
    );
    for (i, (x, r)) in rep.roots.iter().zip(&rep.residuals).enumerate() {
        let _ = writeln!(
            s,
            "{i}: norm = {}, a_1 = {}, residual = {r:e}",
            x.norm(),
            x.coefficients()[0]
        );
    }
    Ok(s)
}

fn attractor_config(cfg: &ScenarioConfig, cert: &StabilityCertificate) -> Result<AttractorConfig, CliError> {
    let e = &cfg.experiment;
    let base = AttractorConfig::from_decay_rate(cert.omega0, cfg.integrator())?;
    Ok(AttractorConfig {
        seeds: e.seeds.unwrap_or(base.seeds),
        t_skip: e.t_skip.unwrap_or(base.t_skip),
        window: e.window.unwrap_or(base.window),
        stride: e.stride.unwrap_or(base.stride),
        cluster_radius: e.cluster_radius.unwrap_or(base.cluster_radius),
        rng_seed: cfg.rng_seed,
        ..base
    })
}

fn undisturbed_attractor(
    cfg: &ScenarioConfig,
    p: &EvolutionProblem,
    cert: &StabilityCertificate,
) -> Result<AttractorApprox, CliError> {
    let ball = absorbing_ball(cert, 0.0, 1.0 + cert.gamma.eval(0.0))?;
    let hull = HullSample::singleton(StepSignal::zero());
    Ok(approximate_attractor(p, &hull, &ball, &attractor_config(cfg, cert)?)?)
}

fn projection(points: &[SpectralState]) -> Vec<(f64, f64)> {
    points
        .iter()
        .map(|x| {
            let a = x.coefficients();
            (a[0], a.get(1).copied().unwrap_or(0.0))
        })
        .collect()
}

fn attractor(cfg: &ScenarioConfig, out: &Output) -> Result<String, CliError> {
    let p = cfg.evolution_problem()?;
    let cert = cfg.certificate(&p)?;
    let u = cfg.signal()?;
    let r = u.sup_norm();
    let hull = if r == 0.0 {
        HullSample::singleton(StepSignal::zero())
    } else {
        HullSample::uniform(u, cfg.signal.shifts)
    };
    let ball = absorbing_ball(&cert, r, 1.0 + cert.gamma.eval(r))?;
    let acfg = attractor_config(cfg, &cert)?;
    let a = approximate_attractor(&p, &hull, &ball, &acfg)?;
    out.csv("attractor.csv", |w| a.write_csv(w))?;
    out.svg("attractor.svg", || {
        chart(
            "attractor projection",
            "a_1",
            "a_2",
            &[Series::dots("cloud", projection(a.points()))],
        )
    })?;
    let mut s = String::new();
    let _ = writeln!(s, "attractor: {} points from {} samples", a.len(), a.raw_samples);
    let _ = writeln!(s, "seeds = {}, hull members = {}", a.seeds, hull.len());
    let _ = writeln!(
        s,
        "absorbing ball radius = {}, entry time = {}",
        ball.radius, ball.entry_time
    );
    let _ = writeln!(s, "window = [{}, {}], stride = {}", a.window.0, a.window.1, acfg.stride);
    let _ = writeln!(s, "sup norm = {}", a.sup_norm());
    Ok(s)
}

fn gain_curve(cfg: &ScenarioConfig, out: &Output) -> Result<String, CliError> {
    let p = cfg.evolution_problem()?;
    let cert = cfg.certificate(&p)?;
    let theta = undisturbed_attractor(cfg, &p, &cert)?;
    let e = &cfg.experiment;
    let radii = e.radii.clone().unwrap_or_else(|| vec![0.0, 0.125, 0.25, 0.5, 1.0]);
    let horizon = e.horizon.unwrap_or(40.0 / cert.omega0);
    let gcfg = GainConfig {
        initial_states: e.initial_states.unwrap_or(2),
        rng_seed: cfg.rng_seed,
        cluster_radius: e.cluster_radius.unwrap_or(EPS_CLUSTER),
        integrator: cfg.integrator(),
        ..GainConfig::default()
    };
    let curve = estimate_gain_curve(
        &p,
        theta.points(),
        &radii,
        e.inputs_per_radius.unwrap_or(16),
        horizon,
        &gcfg,
    )?;
    out.csv("gain_curve.csv", |w| curve.write_csv(w))?;
    out.svg("gain_curve.svg", || {
        let r_max = radii.last().copied().unwrap_or(1.0).max(1e-3);
        let m = &curve.majorant.function;
        let line = (0..=100)
            .map(|i| r_max * i as f64 / 100.0)
            .map(|r| (r, m.eval(r)))
            .collect();
        chart(
            "empirical gain",
            "r",
            "delta_hat(r)",
            &[
                Series::dots("delta_hat", curve.samples.clone()),
                Series::line("majorant", line),
            ],
        )
    })?;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "gain curve: {} radii, horizon = {horizon}, |Theta| = {}",
        radii.len(),
        theta.len()
    );
    for &(r, d) in &curve.samples {
        let _ = writeln!(
            s,
            "r = {r}: delta_hat = {d}, majorant = {}",
            curve.majorant.function.eval(r)
        );
    }
    for w in &curve.majorant.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    Ok(s)
}

fn envelope(cfg: &ScenarioConfig, out: &Output) -> Result<String, CliError> {
    let p = cfg.evolution_problem()?;
    let cert = cfg.certificate(&p)?;
    let theta = undisturbed_attractor(cfg, &p, &cert)?;
    let env = isps_envelope(&cert, &theta)?;
    let e = &cfg.experiment;
    let r0 = e.r0.unwrap_or(0.5);
    let runs = e.runs.unwrap_or(50);
    let t_end = e.t_end.unwrap_or(20.0);
    let slack = e.cluster_radius.unwrap_or(EPS_CLUSTER);
    let radius = 1.0 + cert.gamma.eval(r0);
    let integ = cfg.integrator();
    let reports = isps_core::par::try_map(runs, |i| -> Result<EnvelopeReport, CliError> {
        let mut rng = rng_stream(cfg.rng_seed, 1 + i as u64);
        let x0 = random_ball_point(&mut rng, p.modes(), radius);
        let u = random_step_signal(&mut rng, r0, t_end, 8);
        let traj = solve(&p, &x0, &u, t_end, &integ)?;
        Ok(check_envelope(&traj, &env, theta.points(), u.sup_norm(), slack)?)
    })?;
    let worst = reports.iter().map(|r| r.worst_margin).fold(f64::INFINITY, f64::min);
    let combined = EnvelopeReport {
        rows: Vec::new(),
        worst_margin: worst,
        violations: reports.iter().flat_map(|r| r.violations.iter().cloned()).collect(),
    };
    out.csv("envelope_violations.csv", |w| combined.write_violations_csv(w))?;
    let mut s = String::new();
    let _ = writeln!(s, "envelope: {runs} runs, r0 = {r0}, t_end = {t_end}, slack = {slack}");
    let _ = writeln!(
        s,
        "|Theta| = {}, ||Theta|| = {}, c = {}",
        theta.len(),
        env.theta_norm,
        env.c
    );
    let _ = writeln!(s, "sigma_bar(r) = {}", env.sigma_bar.describe());
    let _ = writeln!(s, "gamma_bar(r) = {}", env.gamma_bar.describe());
    let _ = writeln!(s, "violations = {}", combined.violations.len());
    let _ = writeln!(s, "worst margin = {worst}");
    Ok(s)
}

fn verify(cfg: &ScenarioConfig, out: &Output) -> Result<String, CliError> {
    let p = cfg.evolution_problem()?;
    let cert = cfg.certificate(&p)?;
    let mut s = cert.report();
    let mut failures = Vec::new();

    let samples_n = cfg.experiment.samples.unwrap_or(256);
    let radius = 4.0 * (1.0 + cert.gamma.eval(0.0));
    let samples = quasi_random_ball(p.modes(), samples_n, radius, cfg.rng_seed);
    let dis = verify_dissipation(&p, &cert, &samples)?;
    let verdict = if dis.passes { "PASS" } else { "FAIL" };
    let _ = writeln!(
        s,
        "dissipation bound {verdict} ({samples_n} samples in radius {radius}, worst margin {})",
        dis.worst_margin
    );
    if !dis.passes {
        failures.push("dissipation bound");
    }

    if let (Some(sector), Nonlinearity::Pointwise(_)) = (cert.sector, p.nonlinearity()) {
        let grid = default_sector_grid(p.nonlinearity(), 4001)?;
        let rep = verify_sector(p.nonlinearity(), sector, &grid)?;
        let verdict = if rep.passes { "PASS" } else { "FAIL" };
        let _ = writeln!(
            s,
            "sector bounds {verdict} (upper margin {}, lower margin {}, tails {} / {})",
            rep.upper_margin, rep.lower_margin, rep.tail_upper, rep.tail_lower
        );
        if !rep.passes {
            failures.push("sector bounds");
        }
    }
    out.write("certificate.txt", s.as_bytes())?;
    if failures.is_empty() {
        Ok(s)
    } else {
        Err(CliError::Verification {
            report: s,
            failed: failures.join(", "),
        })
    }
}
