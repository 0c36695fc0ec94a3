//! Scenario files.
//!
//! A scenario is a TOML document with a top-level `rng_seed` and the blocks
//! `[problem]`, `[signal]`, `[experiment]`, `[certificate]` and `[output]`.
//! Time is in seconds and space in the length unit of `problem.length`.
//!
//! ```toml
//! rng_seed = 7
//!
//! [problem]
//! length = 3.141592653589793
//! modes = 32
//! dt = 0.01
//! nonlinearity = { kind = "polynomial", coefficients = [0.0, 2.0, 0.0, -2.0] }
//! forcing = [1.0]
//!
//! [signal]
//! literal = "steps: [(2,-0.6),(5,0.8)] tail: 1"
//!
//! [experiment]
//! t_end = 10.0
//!
//! [certificate]
//! route = "weak"
//! sector = { kappa = 1.0, alpha1 = 2.0, alpha2 = 1.0, p = 4.0 }
//!
//! [output]
//! directory = "out"
//! formats = ["csv", "svg"]
//! ```

use std::f64::consts::PI;
use std::path::PathBuf;

use isps_core::presets::{chafee_infante_sector, norm_scaled_alpha};
use isps_core::semiflow::{AlphaTable, EvolutionProblem, IntegratorConfig, Nonlinearity, Scheme};
use isps_core::signals::StepSignal;
use isps_core::spectral::{DirichletSpectrum, SpectralState};
use isps_core::stability::{
    mild_certificate, mild_constants_from_alpha, weak_certificate, SectorBounds, StabilityCertificate,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub rng_seed: u64,
    pub problem: ProblemBlock,
    #[serde(default)]
    pub signal: SignalBlock,
    #[serde(default)]
    pub experiment: ExperimentBlock,
    pub certificate: CertificateBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemBlock {
    pub length: f64,
    pub modes: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default = "default_ceiling")]
    pub ceiling: f64,
    pub nonlinearity: NonlinearitySpec,
    /// Leading sine coefficients of `h`; missing modes are zero.
    #[serde(default)]
    pub forcing: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearitySpec {
    /// `g(r) = sum_i c_i r^i`.
    Polynomial { coefficients: Vec<f64> },
    /// `g(r) = lambda (r - r^3)`.
    ChafeeInfante { lambda: f64 },
    /// `g(x) = alpha(||x||) x` with piecewise-linear `alpha`.
    NormScaled { knots: Vec<f64>, values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalBlock {
    /// Step-signal literal, e.g. `steps: [(1,0.5)] tail: 0`.
    pub literal: String,
    /// Number of translates sampled from the hull of the signal.
    #[serde(default = "default_shifts")]
    pub shifts: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// Leading coefficients of `x0`; defaults to `e_1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<Vec<f64>>,
    /// Draw `x0` uniformly from the ball of this radius instead.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_initial_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_skip: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs_per_radius: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_states: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateBlock {
    /// `"mild"` or `"weak"`.
    pub route: String,
    /// Defaults to `omega / 2` on the weak route and `0` on the mild route.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_prime: Option<f64>,
    /// Mild route: constant `C` in `<x, g(x)> <= C + omega' ||x||^2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Mild route with a `norm_scaled` nonlinearity: derive `omega'` and `C`
    /// for inputs of size up to `r0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    /// Weak route sector bounds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sector: Option<SectorSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorSpec {
    pub kappa: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    /// Any of `"csv"` and `"svg"`.
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

fn default_dt() -> f64 {
    0.01
}

fn default_scheme() -> String {
    Scheme::Etdrk4.name().to_string()
}

fn default_ceiling() -> f64 {
    1e6
}

fn default_shifts() -> usize {
    32
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<String> {
    vec!["csv".into(), "svg".into()]
}

impl Default for SignalBlock {
    fn default() -> Self {
        SignalBlock {
            literal: "steps: [] tail: 0".into(),
            shifts: default_shifts(),
        }
    }
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            directory: default_directory(),
            formats: default_formats(),
        }
    }
}

impl From<SectorSpec> for SectorBounds {
    fn from(s: SectorSpec) -> SectorBounds {
        SectorBounds {
            kappa: s.kappa,
            alpha1: s.alpha1,
            alpha2: s.alpha2,
            p: s.p,
        }
    }
}

impl From<SectorBounds> for SectorSpec {
    fn from(s: SectorBounds) -> SectorSpec {
        SectorSpec {
            kappa: s.kappa,
            alpha1: s.alpha1,
            alpha2: s.alpha2,
            p: s.p,
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn padded(values: &[f64], modes: usize, what: &str) -> Result<SpectralState, CliError> {
    if values.len() > modes {
        return Err(config_err(format!(
            "{what} has {} coefficients but modes = {modes}",
            values.len()
        )));
    }
    let mut v = values.to_vec();
    v.resize(modes, 0.0);
    Ok(SpectralState::new(v))
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<ScenarioConfig, CliError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| config_err(e.message().replace('\n', " ")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let p = &self.problem;
        if !(p.length > 0.0 && p.length.is_finite()) {
            return Err(config_err("problem.length must be positive"));
        }
        if p.modes == 0 {
            return Err(config_err("problem.modes must be at least 1"));
        }
        if !(p.dt > 0.0 && p.dt.is_finite()) {
            return Err(config_err("problem.dt must be positive"));
        }
        if Scheme::from_name(&p.scheme).is_none() {
            return Err(config_err(format!("unknown problem.scheme {:?}", p.scheme)));
        }
        if !matches!(self.certificate.route.as_str(), "mild" | "weak") {
            return Err(config_err(format!(
                "certificate.route must be \"mild\" or \"weak\", got {:?}",
                self.certificate.route
            )));
        }
        for f in &self.output.formats {
            if !matches!(f.as_str(), "csv" | "svg") {
                return Err(config_err(format!("unknown output format {f:?}")));
            }
        }
        self.signal()?;
        Ok(())
    }

    /// Built-in scenario for a named preset.
    pub fn preset(name: &str) -> Result<ScenarioConfig, CliError> {
        let weak = |sector: SectorBounds| CertificateBlock {
            route: "weak".into(),
            omega_prime: None,
            c: None,
            r0: None,
            sector: Some(sector.into()),
        };
        let mild = |c: Option<f64>, r0: Option<f64>| CertificateBlock {
            route: "mild".into(),
            omega_prime: None,
            c,
            r0,
            sector: None,
        };
        let (nonlinearity, forcing, certificate) = match name {
            "linear_decay" => (
                NonlinearitySpec::Polynomial { coefficients: vec![] },
                vec![],
                mild(Some(0.0), None),
            ),
            "forced_linear" => (
                NonlinearitySpec::Polynomial { coefficients: vec![] },
                vec![1.0],
                mild(Some(0.0), None),
            ),
            "chafee_infante_lambda2" | "chafee_infante_lambda10" => {
                let lambda = if name.ends_with("10") { 10.0 } else { 2.0 };
                (
                    NonlinearitySpec::ChafeeInfante { lambda },
                    vec![1.0],
                    weak(chafee_infante_sector(lambda)),
                )
            }
            "odd_polynomial_deg5" => (
                NonlinearitySpec::Polynomial {
                    coefficients: vec![0.0, 1.0, 0.0, 0.0, 0.0, -1.0],
                },
                vec![1.0],
                weak(SectorBounds {
                    kappa: 0.55,
                    alpha1: 1.0,
                    alpha2: 0.5,
                    p: 6.0,
                }),
            ),
            "norm_scaled" => {
                let a = norm_scaled_alpha();
                (
                    NonlinearitySpec::NormScaled {
                        knots: a.knots().to_vec(),
                        values: a.values().to_vec(),
                    },
                    vec![1.0],
                    mild(None, Some(1.5)),
                )
            }
            other => {
                return Err(config_err(format!(
                    "unknown preset {other:?}; expected one of {}",
                    isps_core::presets::PRESET_NAMES.join(", ")
                )))
            }
        };
        Ok(ScenarioConfig {
            rng_seed: 0,
            problem: ProblemBlock {
                length: PI,
                modes: 32,
                dt: default_dt(),
                scheme: default_scheme(),
                ceiling: default_ceiling(),
                nonlinearity,
                forcing,
            },
            signal: SignalBlock::default(),
            experiment: ExperimentBlock::default(),
            certificate,
            output: OutputBlock::default(),
        })
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity, CliError> {
        Ok(match &self.problem.nonlinearity {
            NonlinearitySpec::Polynomial { coefficients } => Nonlinearity::pointwise(coefficients.clone()),
            NonlinearitySpec::ChafeeInfante { lambda } => Nonlinearity::chafee_infante(*lambda),
            NonlinearitySpec::NormScaled { knots, values } => {
                Nonlinearity::NormScaled(AlphaTable::new(knots.clone(), values.clone())?)
            }
        })
    }

    pub fn evolution_problem(&self) -> Result<EvolutionProblem, CliError> {
        let p = &self.problem;
        let spectrum = DirichletSpectrum::new(p.length, p.modes)?;
        let h = padded(&p.forcing, p.modes, "problem.forcing")?;
        Ok(EvolutionProblem::new(spectrum, self.nonlinearity()?, h)?)
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            dt: self.problem.dt,
            scheme: Scheme::from_name(&self.problem.scheme).unwrap_or(Scheme::Etdrk4),
            picard_oracle: false,
            ceiling: self.problem.ceiling,
        }
    }

    pub fn signal(&self) -> Result<StepSignal, CliError> {
        self.signal
            .literal
            .parse()
            .map_err(|e: isps_core::Error| config_err(format!("signal.literal: {e}")))
    }

    pub fn certificate(&self, problem: &EvolutionProblem) -> Result<StabilityCertificate, CliError> {
        let c = &self.certificate;
        let omega = problem.spectrum().lambda1();
        let h_norm = problem.forcing_norm();
        match c.route.as_str() {
            "weak" => {
                let sector = c
                    .sector
                    .ok_or_else(|| config_err("certificate.sector is required on the weak route"))?;
                Ok(weak_certificate(
                    sector.into(),
                    h_norm,
                    self.problem.length,
                    c.omega_prime.unwrap_or(omega / 2.0),
                )?)
            }
            _ => {
                let (omega_prime, constant) = match (c.c, problem.nonlinearity()) {
                    (Some(constant), _) => (c.omega_prime.unwrap_or(0.0), constant),
                    (None, Nonlinearity::NormScaled(alpha)) => {
                        let r0 =
                            c.r0.ok_or_else(|| config_err("certificate.r0 is required to derive C from alpha"))?;
                        mild_constants_from_alpha(alpha, r0)?
                    }
                    (None, g) if g.is_zero() => (c.omega_prime.unwrap_or(0.0), 0.0),
                    _ => return Err(config_err("certificate.c is required on the mild route")),
                };
                Ok(mild_certificate(omega, omega_prime, constant, h_norm)?)
            }
        }
    }

    /// `experiment.initial_state`, a random point of the configured ball, or `e_1`.
    pub fn initial_state(&self) -> Result<SpectralState, CliError> {
        let n = self.problem.modes;
        match (&self.experiment.initial_state, self.experiment.random_initial_radius) {
            (Some(_), Some(_)) => Err(config_err(
                "experiment.initial_state and experiment.random_initial_radius are exclusive",
            )),
            (Some(v), None) => padded(v, n, "experiment.initial_state"),
            (None, Some(r)) => {
                if !(r >= 0.0 && r.is_finite()) {
                    return Err(config_err("experiment.random_initial_radius must be non-negative"));
                }
                let mut rng = isps_core::sampling::rng_stream(self.rng_seed, 0);
                Ok(isps_core::sampling::random_ball_point(&mut rng, n, r))
            }
            (None, None) => Ok(SpectralState::basis(n, 1)),
        }
    }

    pub fn wants(&self, format: &str) -> bool {
        self.output.formats.iter().any(|f| f == format)
    }
}
