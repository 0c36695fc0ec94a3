//! Attractor approximation by omega-limit sampling from an absorbing ball.

use std::io::{self, Write};

use crate::error::{invalid, Error, Result};
use crate::par;
use crate::sampling::quasi_random_ball;
use crate::semiflow::{flow, integrate, EvolutionProblem, IntegratorConfig};
use crate::signals::{HullSample, StepSignal, Time};
use crate::spectral::{dist_point_to_cloud, SpectralState};
use crate::stability::{StabilityCertificate, EPS_CLUSTER};

/// Closed ball `B_0` around the origin with its entry time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AbsorbingBall {
    pub radius: f64,
    pub entry_time: f64,
}

impl AbsorbingBall {
    pub fn new(radius: f64, entry_time: f64) -> Result<AbsorbingBall> {
        if !(radius > 0.0 && radius.is_finite()) || !(entry_time >= 0.0 && entry_time.is_finite()) {
            return Err(invalid(format!(
                "absorbing ball needs radius > 0 and entry time >= 0, got {radius}, {entry_time}"
            )));
        }
        Ok(AbsorbingBall { radius, entry_time })
    }
}

/// `B_0` of radius `1 + gamma(r0)`, entered by every trajectory starting in
/// the ball of radius `seed_radius` once `e^{-omega0 t} sigma(seed_radius) <= 1`.
pub fn absorbing_ball(cert: &StabilityCertificate, r0: f64, seed_radius: f64) -> Result<AbsorbingBall> {
    if !(cert.omega0 > 0.0) {
        return Err(invalid(format!("absorbing ball needs omega0 > 0, got {}", cert.omega0)));
    }
    if !(r0 >= 0.0) || !(seed_radius >= 0.0) {
        return Err(invalid("r0 and the seed radius must be non-negative"));
    }
    let entry_time = cert.sigma.eval(seed_radius).max(1.0).ln() / cert.omega0;
    AbsorbingBall::new(1.0 + cert.gamma.eval(r0), entry_time)
}

/// Sampling parameters for [`approximate_attractor`].
#[derive(Clone, Debug, PartialEq)]
pub struct AttractorConfig {
    /// Quasi-random seeds in the ball.
    pub seeds: usize,
    /// Also seed the ball centre.
    pub include_center: bool,
    /// Additional seeds, used as given.
    pub extra_seeds: Vec<SpectralState>,
    pub t_skip: f64,
    pub window: f64,
    pub stride: f64,
    pub cluster_radius: f64,
    pub rng_seed: u64,
    pub integrator: IntegratorConfig,
}

impl AttractorConfig {
    /// `t_skip = 20 / omega0`, `window = 10 / omega0`, `stride = 0.1 / omega0`,
    /// each rounded to a positive multiple of `integrator.dt`.
    pub fn from_decay_rate(omega0: f64, integrator: IntegratorConfig) -> Result<AttractorConfig> {
        if !(omega0 > 0.0 && omega0.is_finite()) {
            return Err(invalid(format!("omega0 = {omega0} must be positive")));
        }
        let dt = integrator.dt;
        let snap = |t: f64| ((t / dt).round().max(1.0)) * dt;
        Ok(AttractorConfig {
            seeds: 64,
            include_center: true,
            extra_seeds: Vec::new(),
            t_skip: snap(20.0 / omega0),
            window: snap(10.0 / omega0),
            stride: snap(0.1 / omega0),
            cluster_radius: EPS_CLUSTER,
            rng_seed: 0,
            integrator,
        })
    }

    fn seed_states(&self, modes: usize, radius: f64) -> Vec<SpectralState> {
        let mut seeds = Vec::with_capacity(self.seeds + 1 + self.extra_seeds.len());
        if self.include_center {
            seeds.push(SpectralState::zeros(modes));
        }
        seeds.extend(quasi_random_ball(modes, self.seeds, radius, self.rng_seed));
        seeds.extend(self.extra_seeds.iter().cloned());
        seeds
    }
}

/// Finite point cloud approximating an attractor.
#[derive(Clone, Debug, PartialEq)]
pub struct AttractorApprox {
    points: Vec<SpectralState>,
    pub transient: f64,
    /// Sampled time window `[t_skip, t_skip + window]`.
    pub window: (f64, f64),
    pub seeds: usize,
    pub hull: Option<HullSample>,
    pub cluster_radius: f64,
    /// Samples before clustering.
    pub raw_samples: usize,
}

impl AttractorApprox {
    /// Cloud given directly, e.g. from a set of equilibria.
    pub fn from_points(points: Vec<SpectralState>, cluster_radius: f64) -> Result<AttractorApprox> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let raw_samples = points.len();
        Ok(AttractorApprox {
            points: cluster_points(&points, cluster_radius),
            transient: 0.0,
            window: (0.0, 0.0),
            seeds: 0,
            hull: None,
            cluster_radius,
            raw_samples,
        })
    }

    pub fn points(&self) -> &[SpectralState] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `sup ||theta||` over the cloud.
    pub fn sup_norm(&self) -> f64 {
        self.points.iter().map(SpectralState::norm).fold(0.0, f64::max)
    }

    /// CSV `point_id,a_1,...,a_N`.
    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        write_cloud_csv(w, &self.points)
    }
}

pub fn write_cloud_csv<W: Write>(mut w: W, points: &[SpectralState]) -> io::Result<()> {
    let n = points.first().map_or(0, SpectralState::len);
    write!(w, "point_id")?;
    for k in 1..=n {
        write!(w, ",a_{k}")?;
    }
    writeln!(w)?;
    for (i, x) in points.iter().enumerate() {
        write!(w, "{i}")?;
        for a in x.coefficients() {
            write!(w, ",{a}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Greedy leader clustering in the given order: a point becomes a new
/// representative when it is farther than `radius` from all earlier ones.
pub fn cluster_points(points: &[SpectralState], radius: f64) -> Vec<SpectralState> {
    let mut leaders: Vec<SpectralState> = Vec::new();
    for x in points {
        if leaders.iter().all(|l| l.distance(x) > radius) {
            leaders.push(x.clone());
        }
    }
    leaders
}

/// `sup_{a in A} inf_{b in B} ||a - b||`.
pub fn hausdorff_semidist(a: &[SpectralState], b: &[SpectralState]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    a.iter()
        .map(|x| dist_point_to_cloud(x, b))
        .try_fold(0.0, |acc: f64, d| Ok(acc.max(d?)))
}

/// Flows seeds from `ball` under every hull member past `cfg.t_skip` and
/// keeps the clustered states sampled every `cfg.stride` on the window.
///
/// Every output state at or after `ball.entry_time` must stay within
/// `ball.radius + 1e-6`.
pub fn approximate_attractor(
    p: &EvolutionProblem,
    hull: &HullSample,
    ball: &AbsorbingBall,
    cfg: &AttractorConfig,
) -> Result<AttractorApprox> {
    let dt = Time::from_secs(cfg.integrator.dt)?;
    let t_skip = Time::from_secs(cfg.t_skip)?;
    let stride = Time::from_secs(cfg.stride)?;
    let window = Time::from_secs(cfg.window)?;
    if stride == Time::ZERO || stride.ticks() % dt.ticks() != 0 || t_skip.ticks() % dt.ticks() != 0 {
        return Err(invalid("t_skip and stride must be multiples of dt, stride positive"));
    }
    if cfg.t_skip < ball.entry_time {
        return Err(invalid(format!(
            "t_skip = {} is shorter than the ball entry time {}",
            cfg.t_skip, ball.entry_time
        )));
    }
    if !(cfg.cluster_radius >= 0.0) {
        return Err(invalid("cluster radius must be non-negative"));
    }
    let n = p.modes();
    let seeds = cfg.seed_states(n, ball.radius);
    if seeds.is_empty() {
        return Err(invalid("at least one seed is required"));
    }
    for s in &seeds {
        p.spectrum().check(s)?;
    }
    let members = hull.members();
    let entry = Time::from_secs(ball.entry_time)?;
    let limit = ball.radius + 1e-6;
    let t_end = t_skip + window;
    let runs = par::try_map(seeds.len() * members.len(), |i| {
        let (seed, u) = (&seeds[i / members.len()], &members[i % members.len()]);
        let mut samples = Vec::new();
        let mut escape = None;
        integrate(p, seed, u, t_end.as_secs(), &cfg.integrator, |t, x| {
            if t >= entry && escape.is_none() {
                let norm = crate::spectral::norm(x);
                if norm > limit {
                    escape = Some(norm);
                }
            }
            if t >= t_skip && (t.ticks() - t_skip.ticks()) % stride.ticks() == 0 {
                samples.push(SpectralState::new(x.to_vec()));
            }
        })?;
        match escape {
            Some(norm) => Err(Error::OutsideAbsorbingBall {
                norm,
                radius: ball.radius,
            }),
            None => Ok(samples),
        }
    })?;
    let all: Vec<SpectralState> = runs.into_iter().flatten().collect();
    let raw_samples = all.len();
    Ok(AttractorApprox {
        points: cluster_points(&all, cfg.cluster_radius),
        transient: cfg.t_skip,
        window: (cfg.t_skip, t_end.as_secs()),
        seeds: seeds.len(),
        hull: Some(hull.clone()),
        cluster_radius: cfg.cluster_radius,
        raw_samples,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeReport {
    /// `max_theta min_{theta', v} ||S_v(t, 0, theta') - theta||`.
    pub worst: f64,
    pub tolerance: f64,
    pub passes: bool,
}

/// Finite-sample check of `Theta ⊂ S_V(t, 0, Theta)`: every cloud point must be
/// within `2 cluster_radius` of the time-`t` image of some cloud point.
pub fn negative_invariance_probe(
    p: &EvolutionProblem,
    theta: &AttractorApprox,
    hull: &HullSample,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<ProbeReport> {
    let pts = theta.points();
    let members = hull.members();
    let images = par::try_map(pts.len() * members.len(), |i| {
        flow(p, &pts[i / members.len()], &members[i % members.len()], t, cfg)
    })?;
    let worst = hausdorff_semidist(pts, &images)?;
    let tolerance = 2.0 * theta.cluster_radius;
    Ok(ProbeReport {
        worst,
        tolerance,
        passes: worst <= tolerance,
    })
}

/// Parameters for [`upper_semicontinuity_curve`].
#[derive(Clone, Debug, PartialEq)]
pub struct UscConfig {
    pub attractor: AttractorConfig,
    /// Translation shifts per hull sample.
    pub shifts: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UscRow {
    pub amplitude: f64,
    /// `dist(Theta_V(r u), Theta)`.
    pub semidistance: f64,
    pub cluster_radius: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UscCurve {
    pub rows: Vec<UscRow>,
    pub reference: AttractorApprox,
}

impl UscCurve {
    /// CSV `amplitude,semidistance,cluster_radius`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "amplitude,semidistance,cluster_radius")?;
        for r in &self.rows {
            writeln!(w, "{},{},{}", r.amplitude, r.semidistance, r.cluster_radius)?;
        }
        Ok(())
    }
}

/// Semidistance from the hull attractor of `r * u_hat` to the undisturbed
/// attractor, for each amplitude `r`; `u_hat` is `u` scaled to sup-norm 1.
///
/// Each attractor uses the absorbing ball of `cert` for input bound `r`.
pub fn upper_semicontinuity_curve(
    p: &EvolutionProblem,
    u: &StepSignal,
    amplitudes: &[f64],
    cert: &StabilityCertificate,
    cfg: &UscConfig,
) -> Result<UscCurve> {
    if amplitudes.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
        return Err(invalid("amplitudes must be finite and non-negative"));
    }
    let u_hat = u.normalized()?;
    let base_ball = absorbing_ball(cert, 0.0, 1.0 + cert.gamma.eval(0.0))?;
    let reference = approximate_attractor(
        p,
        &HullSample::singleton(StepSignal::zero()),
        &base_ball,
        &cfg.attractor,
    )?;
    let mut rows = Vec::with_capacity(amplitudes.len());
    for &r in amplitudes {
        let hull = HullSample::uniform(u_hat.scaled(r), cfg.shifts);
        let radius = 1.0 + cert.gamma.eval(r);
        let ball = absorbing_ball(cert, r, radius)?;
        let approx = approximate_attractor(p, &hull, &ball, &cfg.attractor)?;
        rows.push(UscRow {
            amplitude: r,
            semidistance: hausdorff_semidist(approx.points(), reference.points())?,
            cluster_radius: cfg.attractor.cluster_radius,
            points: approx.len(),
        });
    }
    Ok(UscCurve { rows, reference })
}
