//! Dissipation certificates, ISpS envelopes and empirical gain curves.

use std::fmt::{self, Write as _};
use std::io::{self, Write};

use crate::attractor::AttractorApprox;
use crate::error::{invalid, Error, Result};
use crate::par;
use crate::sampling::{random_ball_point, random_step_signal, rng_stream};
use crate::semiflow::{integrate, AlphaTable, EvolutionProblem, IntegratorConfig, Nonlinearity, Trajectory};
use crate::signals::{StepSignal, Time};
use crate::spectral::{dist_point_to_cloud, SpectralState};

/// Minimal slope used to make flat gains strictly increasing.
pub const EPS_SLOPE: f64 = 1e-9;

/// Default clustering resolution in state space.
pub const EPS_CLUSTER: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    Mild,
    Weak,
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Route::Mild => "mild",
            Route::Weak => "weak",
        })
    }
}

/// Continuous piecewise-linear function through `(knots[i], values[i])`,
/// extended linearly past the last knot with the last slope.
#[derive(Clone, Debug, PartialEq)]
pub struct KFunction {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl KFunction {
    /// Requires `knots[0] = 0`, strictly increasing knots and at least two points.
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<KFunction> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(invalid("piecewise-linear gain needs at least two matching points"));
        }
        if knots[0] != 0.0 || knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("gain knots must start at 0 and increase strictly"));
        }
        if knots.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(invalid("gain points must be finite"));
        }
        Ok(KFunction { knots, values })
    }

    /// `r -> slope * r`.
    pub fn linear(slope: f64) -> KFunction {
        KFunction {
            knots: vec![0.0, 1.0],
            values: vec![0.0, slope],
        }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, r: f64) -> f64 {
        let n = self.knots.len();
        let slope = |i: usize| (self.values[i + 1] - self.values[i]) / (self.knots[i + 1] - self.knots[i]);
        if r >= self.knots[n - 1] {
            return self.values[n - 1] + slope(n - 2) * (r - self.knots[n - 1]);
        }
        let i = self.knots.partition_point(|&k| k <= r).max(1) - 1;
        self.values[i] + slope(i) * (r - self.knots[i])
    }

    pub fn is_class_k(&self) -> bool {
        self.values[0] == 0.0 && self.values.windows(2).all(|w| w[1] > w[0])
    }
}

/// Gain functions `[0, inf) -> [0, inf)` that certificates and envelopes use.
#[derive(Clone, Debug, PartialEq)]
pub enum Gain {
    /// `slope * r + offset`.
    Affine {
        slope: f64,
        offset: f64,
    },
    /// `sqrt(a + b r^2)`.
    Radical {
        a: f64,
        b: f64,
    },
    PiecewiseLinear(KFunction),
    /// `inner(factor * r) - inner(0) + floor * r`.
    Shifted {
        inner: Box<Gain>,
        factor: f64,
        floor: f64,
    },
}

impl Gain {
    pub fn identity() -> Gain {
        Gain::Affine {
            slope: 1.0,
            offset: 0.0,
        }
    }

    pub fn zero() -> Gain {
        Gain::Affine {
            slope: 0.0,
            offset: 0.0,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Gain::Affine { slope, offset } => slope * r + offset,
            Gain::Radical { a, b } => (a + b * r * r).sqrt(),
            Gain::PiecewiseLinear(k) => k.eval(r),
            Gain::Shifted { inner, factor, floor } => inner.eval(factor * r) - inner.eval(0.0) + floor * r,
        }
    }

    pub fn strictly_increasing(&self) -> bool {
        match self {
            Gain::Affine { slope, .. } => *slope > 0.0,
            Gain::Radical { b, .. } => *b > 0.0,
            Gain::PiecewiseLinear(k) => k.values.windows(2).all(|w| w[1] > w[0]),
            Gain::Shifted { inner, factor, floor } => *floor > 0.0 || (*factor > 0.0 && inner.strictly_increasing()),
        }
    }

    /// A class-K function `k` with `self(factor r) - self(0) <= k(r)`.
    ///
    /// Exact when the difference is already strictly increasing; otherwise
    /// `EPS_SLOPE * r` is added.
    pub fn class_k_bar(&self, factor: f64) -> Gain {
        let floor = if factor > 0.0 && self.strictly_increasing() {
            0.0
        } else {
            EPS_SLOPE
        };
        match self {
            Gain::Affine { slope, .. } => Gain::Affine {
                slope: slope * factor + floor,
                offset: 0.0,
            },
            other => Gain::Shifted {
                inner: Box::new(other.clone()),
                factor,
                floor,
            },
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Gain::Affine { slope, offset } => format!("{slope} * r + {offset}"),
            Gain::Radical { a, b } => format!("sqrt({a} + {b} * r^2)"),
            Gain::PiecewiseLinear(k) => format!("piecewise linear through {} points", k.knots.len()),
            Gain::Shifted { inner, factor, floor } => {
                format!("[{}](r -> {factor} r) - value at 0 + {floor} * r", inner.describe())
            }
        }
    }
}

/// Sector parameters `-kappa - alpha1 |r|^p <= g(r) r <= kappa - alpha2 |r|^p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectorBounds {
    pub kappa: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub p: f64,
}

/// Constants of a dissipation estimate
/// `||x(t)|| <= e^{-omega0 t} sigma(||x0||) + gamma(||u||_inf)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityCertificate {
    pub route: Route,
    pub omega: f64,
    pub omega_prime: f64,
    pub omega0: f64,
    /// Damping offset `C` in `<x, g(x)> <= C + omega' ||x||^2` (mild route).
    pub c: Option<f64>,
    pub sector: Option<SectorBounds>,
    pub h_norm: f64,
    pub domain_measure: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub sigma: Gain,
    /// Gain used in bounds and envelopes.
    pub gamma: Gain,
    /// Affine majorant `C_{omega0,h} (1 + r)` of the mild-route gain.
    pub gamma_majorant: Option<Gain>,
    pub notes: Vec<String>,
}

impl StabilityCertificate {
    /// `e^{-omega0 t} sigma(x0_norm) + gamma(u_norm)`.
    pub fn bound(&self, t: f64, x0_norm: f64, u_norm: f64) -> f64 {
        (-self.omega0 * t).exp() * self.sigma.eval(x0_norm) + self.gamma.eval(u_norm)
    }

    /// `(C, omega')` of the pairing estimate implied by the certificate. On the
    /// weak route the sector bound gives `<y, g(y)> <= kappa L`.
    pub fn pairing_constants(&self) -> (f64, f64) {
        match self.route {
            Route::Mild => (self.c.unwrap_or(0.0), self.omega_prime),
            Route::Weak => (
                self.sector.map_or(0.0, |s| s.kappa) * self.domain_measure.unwrap_or(0.0),
                0.0,
            ),
        }
    }

    /// Plain-text listing of every constant and the formula that produced it.
    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "route: {}", self.route);
        let _ = writeln!(s, "omega = {}  (lambda_1 = (pi / L)^2)", self.omega);
        let _ = writeln!(s, "omega' = {}", self.omega_prime);
        match self.route {
            Route::Mild => {
                let _ = writeln!(s, "omega0 = {}  ((omega - omega') / 2)", self.omega0);
                if let Some(c) = self.c {
                    let _ = writeln!(s, "C = {c}  (<x, g(x)> <= C + omega' ||x||^2)");
                }
            }
            Route::Weak => {
                let _ = writeln!(s, "omega0 = {}  (omega - omega')", self.omega0);
                if let Some(sec) = self.sector {
                    let _ = writeln!(
                        s,
                        "sector: kappa = {}, alpha1 = {}, alpha2 = {}, p = {}  (-kappa - alpha1 |r|^p <= g(r) r <= kappa - alpha2 |r|^p)",
                        sec.kappa, sec.alpha1, sec.alpha2, sec.p
                    );
                }
                if let Some(l) = self.domain_measure {
                    let _ = writeln!(s, "|Omega| = {l}");
                }
                if let Some(c1) = self.c1 {
                    let _ = writeln!(s, "C1 = {c1}  (C1^2 = ||h||^2 / (omega' (1 - e^(-2 omega0))))");
                }
                if let Some(c2) = self.c2 {
                    let _ = writeln!(s, "C2 = {c2}  (C2^2 = kappa |Omega| / omega0)");
                }
            }
        }
        let _ = writeln!(s, "||h|| = {}", self.h_norm);
        let _ = writeln!(s, "sigma(r) = {}", self.sigma.describe());
        let _ = writeln!(s, "gamma(r) = {}", self.gamma.describe());
        if let Some(m) = &self.gamma_majorant {
            let _ = writeln!(
                s,
                "gamma majorant: {}  (C_{{omega0,h}} (1 + r), C_{{omega0,h}} = max(sqrt(C / omega0), ||h|| / omega0))",
                m.describe()
            );
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        s
    }
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} = {v} must be finite")))
    }
}

/// Mild-route certificate from `<x, g(x)> <= C + omega' ||x||^2`.
///
/// `omega0 = (omega - omega') / 2`, `sigma(r) = r` and
/// `gamma(r) = sqrt(C / omega0 + ||h||^2 r^2 / omega0^2)`.
pub fn mild_certificate(omega: f64, omega_prime: f64, c: f64, h_norm: f64) -> Result<StabilityCertificate> {
    for (n, v) in [("omega", omega), ("omega'", omega_prime), ("C", c), ("||h||", h_norm)] {
        check_finite(n, v)?;
    }
    if h_norm < 0.0 {
        return Err(invalid("||h|| must be non-negative"));
    }
    if omega_prime >= omega {
        return Err(Error::NoDecay { omega, omega_prime });
    }
    let mut notes = Vec::new();
    let c = if c < 0.0 {
        notes.push(format!("C = {c} < 0 clamped to 0"));
        0.0
    } else {
        c
    };
    let omega0 = (omega - omega_prime) / 2.0;
    let k = (c / omega0).sqrt().max(h_norm / omega0);
    Ok(StabilityCertificate {
        route: Route::Mild,
        omega,
        omega_prime,
        omega0,
        c: Some(c),
        sector: None,
        h_norm,
        domain_measure: None,
        c1: None,
        c2: None,
        sigma: Gain::identity(),
        gamma: Gain::Radical {
            a: c / omega0,
            b: h_norm * h_norm / (omega0 * omega0),
        },
        gamma_majorant: Some(Gain::Affine { slope: k, offset: k }),
        notes,
    })
}

/// `(omega', C)` for `g(y) = alpha(||y||) y`: `omega' = sup_{r >= r0} alpha` and
/// `C` bounds `sup_{r <= r0} (alpha(r) - omega')_+ r^2`.
pub fn mild_constants_from_alpha(alpha: &AlphaTable, r0: f64) -> Result<(f64, f64)> {
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(invalid(format!("r0 = {r0} must be positive")));
    }
    let omega_prime = alpha.sup_from(r0);
    let mut pts: Vec<f64> = alpha.knots().iter().copied().filter(|&k| k < r0).collect();
    pts.push(r0);
    // (alpha - omega') is linear on each piece, so its positive part peaks at an end
    let c = pts
        .windows(2)
        .map(|w| {
            let top = (alpha.eval(w[0]) - omega_prime).max(alpha.eval(w[1]) - omega_prime);
            top.max(0.0) * w[1] * w[1]
        })
        .fold(0.0, f64::max);
    Ok((omega_prime, c))
}

/// Weak-route certificate from sector bounds on `(0, L)`.
///
/// `omega0 = omega - omega'`, `sigma(r) = r`, `gamma(r) = C1 r + C2` with
/// `C1^2 = ||h||^2 / (omega' (1 - e^{-2 omega0}))` and `C2^2 = kappa L / omega0`.
pub fn weak_certificate(
    sector: SectorBounds,
    h_norm: f64,
    length: f64,
    omega_prime: f64,
) -> Result<StabilityCertificate> {
    for (n, v) in [
        ("kappa", sector.kappa),
        ("alpha1", sector.alpha1),
        ("alpha2", sector.alpha2),
        ("p", sector.p),
        ("||h||", h_norm),
        ("L", length),
        ("omega'", omega_prime),
    ] {
        check_finite(n, v)?;
    }
    if sector.kappa < 0.0 || sector.alpha1 < 0.0 || !(sector.alpha2 > 0.0) || sector.p < 2.0 {
        return Err(invalid(
            "sector bounds need kappa >= 0, alpha1 >= 0, alpha2 > 0 and p >= 2",
        ));
    }
    if !(length > 0.0) || h_norm < 0.0 {
        return Err(invalid("L must be positive and ||h|| non-negative"));
    }
    let omega = (std::f64::consts::PI / length).powi(2);
    if !(omega_prime > 0.0 && omega_prime < omega) {
        return Err(invalid(format!("omega' = {omega_prime} must lie in (0, {omega})")));
    }
    let omega0 = omega - omega_prime;
    let c1 = (h_norm * h_norm / (omega_prime * -(-2.0 * omega0).exp_m1())).sqrt();
    let c2 = (sector.kappa * length / omega0).sqrt();
    Ok(StabilityCertificate {
        route: Route::Weak,
        omega,
        omega_prime,
        omega0,
        c: None,
        sector: Some(sector),
        h_norm,
        domain_measure: Some(length),
        c1: Some(c1),
        c2: Some(c2),
        sigma: Gain::identity(),
        gamma: Gain::Affine { slope: c1, offset: c2 },
        gamma_majorant: None,
        notes: Vec::new(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DissipationReport {
    /// `C + omega' ||y||^2 - <y, g(y)>` per sample.
    pub margins: Vec<f64>,
    pub worst_margin: f64,
    pub passes: bool,
}

/// Checks `<y, g(y)> <= C + omega' ||y||^2 + 1e-8` on each sample.
pub fn verify_dissipation_bound(
    p: &EvolutionProblem,
    c: f64,
    omega_prime: f64,
    samples: &[SpectralState],
) -> Result<DissipationReport> {
    if samples.is_empty() {
        return Err(invalid("at least one sample state is required"));
    }
    let margins = samples
        .iter()
        .map(|y| Ok(c + omega_prime * y.dot(y) - p.pairing(y)?))
        .collect::<Result<Vec<f64>>>()?;
    let worst_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(DissipationReport {
        passes: worst_margin >= -1e-8,
        margins,
        worst_margin,
    })
}

/// [`verify_dissipation_bound`] with the constants of `cert`.
pub fn verify_dissipation(
    p: &EvolutionProblem,
    cert: &StabilityCertificate,
    samples: &[SpectralState],
) -> Result<DissipationReport> {
    let (c, w) = cert.pairing_constants();
    verify_dissipation_bound(p, c, w, samples)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SectorReport {
    /// Smallest `kappa - alpha2 |r|^p - g(r) r` on the grid.
    pub upper_margin: f64,
    /// Smallest `g(r) r + kappa + alpha1 |r|^p` on the grid.
    pub lower_margin: f64,
    pub tail_upper: bool,
    pub tail_lower: bool,
    pub passes: bool,
}

/// Symmetric grid of `points` values on `[-R*, R*]`, `R*` four times the
/// Cauchy root bound of `g`.
pub fn default_sector_grid(g: &Nonlinearity, points: usize) -> Result<Vec<f64>> {
    let poly = match g {
        Nonlinearity::Pointwise(p) => p,
        Nonlinearity::NormScaled(_) => return Err(invalid("sector bounds apply to pointwise nonlinearities")),
    };
    let lead = poly.leading();
    let bound = if lead == 0.0 {
        1.0
    } else {
        1.0 + poly.coefficients().iter().map(|c| (c / lead).abs()).fold(0.0, f64::max)
    };
    let r = 4.0 * bound;
    let points = points.max(3);
    Ok((0..points)
        .map(|i| -r + 2.0 * r * i as f64 / (points - 1) as f64)
        .collect())
}

/// Pointwise check of the sector bounds on `r_grid` plus a comparison of the
/// leading behaviour of `g(r) r` with `|r|^p` for large `|r|`.
pub fn verify_sector(g: &Nonlinearity, sector: SectorBounds, r_grid: &[f64]) -> Result<SectorReport> {
    let poly = match g {
        Nonlinearity::Pointwise(p) => p,
        Nonlinearity::NormScaled(_) => return Err(invalid("sector bounds apply to pointwise nonlinearities")),
    };
    if r_grid.is_empty() {
        return Err(invalid("sector grid is empty"));
    }
    let d = match poly.degree() {
        Some(d) if d % 2 == 1 && poly.leading() < 0.0 => d,
        _ => {
            return Err(Error::SectorImpossible(
                "g(r) r must be dominated by a negative even power; sector bounds cannot hold for any kappa".into(),
            ))
        }
    };
    let lead = poly.leading();
    let q = (d + 1) as f64;
    let SectorBounds {
        kappa,
        alpha1,
        alpha2,
        p,
    } = sector;
    let tail_upper = (p < q) || (p == q && lead <= -alpha2);
    let tail_lower = (p > q) || (p == q && lead >= -alpha1);
    let mut upper_margin = f64::INFINITY;
    let mut lower_margin = f64::INFINITY;
    for &r in r_grid {
        let gr = poly.eval(r) * r;
        let rp = r.abs().powf(p);
        let scale = 1e-12 * (1.0 + gr.abs() + rp * alpha1.max(alpha2));
        upper_margin = upper_margin.min(kappa - alpha2 * rp - gr + scale);
        lower_margin = lower_margin.min(gr + kappa + alpha1 * rp + scale);
    }
    Ok(SectorReport {
        passes: tail_upper && tail_lower && upper_margin >= 0.0 && lower_margin >= 0.0,
        upper_margin,
        lower_margin,
        tail_upper,
        tail_lower,
    })
}

/// Practical-stability envelope
/// `dist(x(t), Theta) <= e^{-omega0 t} sigma_bar(dist(x0, Theta)) + gamma_bar(r) + c`.
#[derive(Clone, Debug, PartialEq)]
pub struct ISpSEnvelope {
    pub omega0: f64,
    pub sigma_bar: Gain,
    pub gamma_bar: Gain,
    /// `sigma(0) + sigma(2 ||Theta||) + gamma(0) + inf ||theta||`.
    pub c: f64,
    pub theta_norm: f64,
    pub theta_min: f64,
}

impl ISpSEnvelope {
    pub fn bound(&self, t: f64, d0: f64, r: f64) -> f64 {
        (-self.omega0 * t).exp() * self.sigma_bar.eval(d0) + self.gamma_bar.eval(r) + self.c
    }
}

/// Envelope built from a certificate and an approximate attractor.
pub fn isps_envelope(cert: &StabilityCertificate, theta: &AttractorApprox) -> Result<ISpSEnvelope> {
    isps_envelope_from_cloud(cert, theta.points())
}

pub fn isps_envelope_from_cloud(cert: &StabilityCertificate, cloud: &[SpectralState]) -> Result<ISpSEnvelope> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let norms = cloud.iter().map(SpectralState::norm);
    let theta_norm = norms.clone().fold(0.0, f64::max);
    let theta_min = norms.fold(f64::INFINITY, f64::min);
    let (s, g) = (&cert.sigma, &cert.gamma);
    let c = s.eval(0.0) + s.eval(2.0 * theta_norm) + g.eval(0.0) + theta_min;
    Ok(ISpSEnvelope {
        omega0: cert.omega0,
        sigma_bar: s.class_k_bar(2.0),
        gamma_bar: g.class_k_bar(1.0),
        c,
        theta_norm,
        theta_min,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeRow {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeReport {
    pub rows: Vec<EnvelopeRow>,
    pub worst_margin: f64,
    pub violations: Vec<EnvelopeRow>,
}

impl EnvelopeReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }

    fn from_rows(rows: Vec<EnvelopeRow>) -> EnvelopeReport {
        let worst_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
        let violations = rows.iter().filter(|r| r.margin < 0.0).cloned().collect();
        EnvelopeReport {
            rows,
            worst_margin,
            violations,
        }
    }

    /// CSV `t,lhs,rhs,margin` of the violations.
    pub fn write_violations_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,lhs,rhs,margin")?;
        for r in &self.violations {
            writeln!(w, "{},{},{},{}", r.t, r.lhs, r.rhs, r.margin)?;
        }
        Ok(())
    }
}

/// Compares `dist(x(t), Theta)` with the envelope plus `slack` at every
/// sample of `trajectory`.
pub fn check_envelope(
    trajectory: &Trajectory,
    env: &ISpSEnvelope,
    theta: &[SpectralState],
    u_norm: f64,
    slack: f64,
) -> Result<EnvelopeReport> {
    let x0 = trajectory.states.first().ok_or_else(|| invalid("empty trajectory"))?;
    let d0 = dist_point_to_cloud(x0, theta)?;
    let rows = trajectory
        .times
        .iter()
        .zip(&trajectory.states)
        .map(|(&t, x)| {
            let lhs = dist_point_to_cloud(x, theta)?;
            let rhs = env.bound(t, d0, u_norm) + slack;
            Ok(EnvelopeRow {
                t,
                lhs,
                rhs,
                margin: rhs - lhs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EnvelopeReport::from_rows(rows))
}

/// Compares `||x(t)||` with the certificate bound plus `slack`.
pub fn check_certificate_bound(
    trajectory: &Trajectory,
    cert: &StabilityCertificate,
    u_norm: f64,
    slack: f64,
) -> Result<EnvelopeReport> {
    let x0 = trajectory.states.first().ok_or_else(|| invalid("empty trajectory"))?;
    let n0 = x0.norm();
    let rows = trajectory
        .times
        .iter()
        .zip(&trajectory.states)
        .map(|(&t, x)| {
            let lhs = x.norm();
            let rhs = cert.bound(t, n0, u_norm) + slack;
            EnvelopeRow {
                t,
                lhs,
                rhs,
                margin: rhs - lhs,
            }
        })
        .collect();
    Ok(EnvelopeReport::from_rows(rows))
}

/// Piecewise-linear class-K majorant of gain samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Majorant {
    pub function: KFunction,
    /// Sample value at `r = 0` when it exceeds the clustering resolution.
    pub offset: Option<f64>,
    pub warnings: Vec<String>,
}

/// Running maximum of `samples` made strictly increasing with slope at least
/// [`EPS_SLOPE`], anchored at `(0, 0)`.
pub fn k_majorant(samples: &[(f64, f64)], cluster_radius: f64) -> Result<Majorant> {
    if samples.is_empty() {
        return Err(invalid("k_majorant needs at least one sample"));
    }
    if samples.windows(2).any(|w| w[0].0 >= w[1].0) || samples[0].0 < 0.0 {
        return Err(invalid("sample radii must be non-negative and strictly increasing"));
    }
    if samples
        .iter()
        .any(|&(r, d)| !r.is_finite() || !(d >= 0.0) || !d.is_finite())
    {
        return Err(invalid("sample values must be finite and non-negative"));
    }
    let mut offset = None;
    let mut warnings = Vec::new();
    let mut knots = vec![0.0];
    let mut values = vec![0.0];
    for &(r, d) in samples {
        if r == 0.0 {
            if d > cluster_radius {
                offset = Some(d);
                warnings.push(format!("AG offset detected: sample at r = 0 is {d} > {cluster_radius}"));
            }
            continue;
        }
        let prev_r = *knots.last().expect("non-empty");
        let prev_v = *values.last().expect("non-empty");
        knots.push(r);
        values.push(d.max(prev_v + EPS_SLOPE * (r - prev_r)));
    }
    if knots.len() == 1 {
        knots.push(1.0);
        values.push(EPS_SLOPE);
    }
    Ok(Majorant {
        function: KFunction::new(knots, values)?,
        offset,
        warnings,
    })
}

/// Sweep parameters for [`estimate_gain_curve`].
#[derive(Clone, Debug, PartialEq)]
pub struct GainConfig {
    /// Random initial states per input.
    pub initial_states: usize,
    /// Initial states are drawn uniformly from the ball of this radius.
    pub ball_radius: f64,
    /// Random breakpoints per test signal.
    pub breakpoints: usize,
    pub rng_seed: u64,
    pub cluster_radius: f64,
    pub integrator: IntegratorConfig,
}

impl Default for GainConfig {
    fn default() -> Self {
        GainConfig {
            initial_states: 2,
            ball_radius: 1.0,
            breakpoints: 8,
            rng_seed: 0,
            cluster_radius: EPS_CLUSTER,
            integrator: IntegratorConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GainCurve {
    /// `(r_i, delta_hat_i)`.
    pub samples: Vec<(f64, f64)>,
    pub majorant: Majorant,
    pub cluster_radius: f64,
}

impl GainCurve {
    /// CSV `radius,delta_hat,majorant`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "radius,delta_hat,majorant")?;
        for &(r, d) in &self.samples {
            writeln!(w, "{r},{d},{}", self.majorant.function.eval(r))?;
        }
        Ok(())
    }
}

/// Empirical gain `delta_hat(r)`: the largest tail distance to `theta` over
/// random step inputs of sup-norm at most `r` (plus the constant input `r`)
/// and random initial states.
///
/// The tail is the last third of `[0, horizon]`. Test signals are drawn once
/// with unit amplitude and scaled by each radius, so every radius sees the
/// same input shapes and initial states.
pub fn estimate_gain_curve(
    p: &EvolutionProblem,
    theta: &[SpectralState],
    radii: &[f64],
    inputs_per_radius: usize,
    horizon: f64,
    cfg: &GainConfig,
) -> Result<GainCurve> {
    if theta.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if radii.is_empty() || radii[0] < 0.0 || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("radii must be non-negative and strictly increasing"));
    }
    if !(horizon > 0.0) || cfg.initial_states == 0 {
        return Err(invalid("horizon and initial state count must be positive"));
    }
    for t in theta {
        p.spectrum().check(t)?;
    }
    let n = p.modes();
    let mut shapes = vec![StepSignal::constant(1.0)];
    for j in 0..inputs_per_radius {
        let mut rng = rng_stream(cfg.rng_seed, 1 + j as u64);
        shapes.push(random_step_signal(&mut rng, 1.0, horizon, cfg.breakpoints));
    }
    let starts: Vec<SpectralState> = (0..cfg.initial_states)
        .map(|i| {
            let mut rng = rng_stream(cfg.rng_seed, (1 << 32) + i as u64);
            random_ball_point(&mut rng, n, cfg.ball_radius)
        })
        .collect();
    let tail_start = Time::from_secs(horizon * 2.0 / 3.0)?;
    let per_radius = shapes.len() * starts.len();
    let values = par::try_map(radii.len() * per_radius, |i| {
        let r = radii[i / per_radius];
        let j = i % per_radius;
        let u = shapes[j / starts.len()].scaled(r);
        let x0 = &starts[j % starts.len()];
        let mut worst: f64 = 0.0;
        let mut state = SpectralState::zeros(n);
        integrate(p, x0, &u, horizon, &cfg.integrator, |t, x| {
            if t >= tail_start {
                state.coefficients_mut().copy_from_slice(x);
                let d = dist_point_to_cloud(&state, theta).expect("dimensions checked");
                worst = worst.max(d);
            }
        })?;
        Ok(worst)
    })?;
    let samples: Vec<(f64, f64)> = radii
        .iter()
        .enumerate()
        .map(|(k, &r)| {
            let d = values[k * per_radius..(k + 1) * per_radius]
                .iter()
                .copied()
                .fold(0.0, f64::max);
            (r, d)
        })
        .collect();
    let majorant = k_majorant(&samples, cfg.cluster_radius)?;
    Ok(GainCurve {
        samples,
        majorant,
        cluster_radius: cfg.cluster_radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    #[test]
    fn mild_examples() {
        let c = mild_certificate(1.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(c.omega0, 0.5);
        assert_eq!(c.gamma.eval(3.0), 0.0);
        let c = mild_certificate(1.0, 0.0, 0.0, 0.5).unwrap();
        assert!((c.gamma.eval(2.0) - 2.0).abs() < 1e-15);
        assert_eq!(mild_certificate(2.0, 1.0, 0.0, 0.0).unwrap().omega0, 0.5);
        assert!(matches!(
            mild_certificate(1.0, 1.0, 0.0, 0.0),
            Err(Error::NoDecay { .. })
        ));
        let clamped = mild_certificate(1.0, 0.0, -2.0, 0.0).unwrap();
        assert_eq!(clamped.c, Some(0.0));
        assert_eq!(clamped.notes.len(), 1);
    }

    #[test]
    fn majorant_dominates_radical() {
        let c = mild_certificate(3.0, 0.5, 0.7, 1.3).unwrap();
        let m = c.gamma_majorant.clone().unwrap();
        for i in 0..100 {
            let r = i as f64 * 0.1;
            assert!(m.eval(r) >= c.gamma.eval(r) - 1e-12);
        }
    }

    #[test]
    fn weak_examples() {
        let s = SectorBounds {
            kappa: 1.0,
            alpha1: 2.0,
            alpha2: 1.0,
            p: 4.0,
        };
        let c = weak_certificate(s, 0.0, PI, 0.5).unwrap();
        assert!((c.omega - 1.0).abs() < 1e-15);
        assert!((c.omega0 - 0.5).abs() < 1e-15);
        assert!((c.c2.unwrap() - (2.0 * PI).sqrt()).abs() < 1e-14);
        assert_eq!(c.c1, Some(0.0));
        let zero = weak_certificate(SectorBounds { kappa: 0.0, ..s }, 1.0, PI, 0.5).unwrap();
        assert_eq!(zero.c2, Some(0.0));
        assert!(weak_certificate(s, 1.0, PI, 1.0).is_err());
        assert!(weak_certificate(s, 1.0, PI, 0.0).is_err());
    }

    #[test]
    fn alpha_constants() {
        let a = AlphaTable::new(vec![0.0, 1.0, 2.0], vec![2.0, 1.0, -2.0]).unwrap();
        let (w, c) = mild_constants_from_alpha(&a, 1.5).unwrap();
        assert_eq!(w, -0.5);
        // both pieces: (2.5 on [0,1]) * 1 and (1.5 on [1,1.5]) * 2.25
        assert_eq!(c, 3.375);
        for i in 0..=300 {
            let r = i as f64 * 0.01;
            assert!(a.eval(r) * r * r <= c + w * r * r + 1e-12, "r = {r}");
        }
    }

    #[test]
    fn sector_examples() {
        let ci = Nonlinearity::chafee_infante(2.0);
        let s = SectorBounds {
            kappa: 1.0,
            alpha1: 2.0,
            alpha2: 1.0,
            p: 4.0,
        };
        let rep = verify_sector(&ci, s, &default_sector_grid(&ci, 20001).unwrap()).unwrap();
        assert!(rep.passes, "{rep:?}");
        assert!(rep.upper_margin < 1e-6);
        let cubic = Nonlinearity::pointwise(vec![0.0, 0.0, 0.0, -1.0]);
        let s0 = SectorBounds {
            kappa: 0.0,
            alpha1: 1.0,
            alpha2: 1.0,
            p: 4.0,
        };
        assert!(
            verify_sector(&cubic, s0, &default_sector_grid(&cubic, 1001).unwrap())
                .unwrap()
                .passes
        );
        let bad = Nonlinearity::pointwise(vec![0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            verify_sector(&bad, s, &[0.0, 1.0]),
            Err(Error::SectorImpossible(_))
        ));
        let small = SectorBounds { kappa: 0.9, ..s };
        assert!(
            !verify_sector(&ci, small, &default_sector_grid(&ci, 20001).unwrap())
                .unwrap()
                .passes
        );
    }

    #[test]
    fn envelope_offsets() {
        let cert = mild_certificate(1.0, 0.0, 0.0, 1.0).unwrap();
        let env = isps_envelope_from_cloud(&cert, &[SpectralState::zeros(3)]).unwrap();
        assert_eq!(env.c, 0.0);
        assert_eq!(env.sigma_bar.eval(1.5), 3.0);
        assert_eq!(env.gamma_bar.eval(0.0), 0.0);
        let q = 0.8;
        let cloud = [
            SpectralState::zeros(2),
            SpectralState::new(vec![q, 0.0]),
            SpectralState::new(vec![-q, 0.0]),
        ];
        let weak = weak_certificate(
            SectorBounds {
                kappa: 1.0,
                alpha1: 2.0,
                alpha2: 1.0,
                p: 4.0,
            },
            1.0,
            PI,
            0.5,
        )
        .unwrap();
        let env = isps_envelope_from_cloud(&weak, &cloud).unwrap();
        assert!((env.c - (2.0 * q + weak.c2.unwrap())).abs() < 1e-14);
        assert!(isps_envelope_from_cloud(&weak, &[]).is_err());
    }

    #[test]
    fn majorant_examples() {
        let m = k_majorant(&[(0.0, 0.0), (1.0, 0.5), (2.0, 0.5)], EPS_CLUSTER).unwrap();
        assert_eq!(m.function.eval(1.0), 0.5);
        assert_eq!(m.function.eval(2.0), 0.5 + EPS_SLOPE);
        assert!(m.offset.is_none());
        let z = k_majorant(&[(0.0, 0.0), (1.0, 0.0), (3.0, 0.0)], EPS_CLUSTER).unwrap();
        assert!((z.function.eval(3.0) - 3.0 * EPS_SLOPE).abs() < 1e-24);
        assert!(z.function.is_class_k());
        let off = k_majorant(&[(0.0, 0.1), (1.0, 0.2)], EPS_CLUSTER).unwrap();
        assert_eq!(off.offset, Some(0.1));
        assert_eq!(off.function.eval(0.0), 0.0);
    }

    #[test]
    fn bar_of_flat_gain_gets_slope_floor() {
        let flat = Gain::Affine {
            slope: 0.0,
            offset: 2.0,
        };
        let bar = flat.class_k_bar(1.0);
        assert!(bar.strictly_increasing());
        assert_eq!(bar.eval(0.0), 0.0);
        let rad = Gain::Radical { a: E, b: 4.0 };
        let bar = rad.class_k_bar(1.0);
        assert_eq!(bar.eval(0.0), 0.0);
        assert!((bar.eval(1.0) - ((E + 4.0).sqrt() - E.sqrt())).abs() < 1e-15);
    }
}
