//! Named benchmark problems with matching certificates.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::semiflow::{AlphaTable, EvolutionProblem, Nonlinearity};
use crate::spectral::{DirichletSpectrum, SpectralState};
use crate::stability::{
    mild_certificate, mild_constants_from_alpha, weak_certificate, SectorBounds, StabilityCertificate,
};

pub const PRESET_NAMES: [&str; 6] = [
    "linear_decay",
    "forced_linear",
    "chafee_infante_lambda2",
    "chafee_infante_lambda10",
    "odd_polynomial_deg5",
    "norm_scaled",
];

/// Input bound used for the mild constants of `norm_scaled`.
const NORM_SCALED_R0: f64 = 1.5;

#[derive(Clone, Debug)]
pub struct Preset {
    pub name: String,
    pub problem: EvolutionProblem,
    pub x0: SpectralState,
    pub certificate: StabilityCertificate,
    pub sector: Option<SectorBounds>,
}

/// Sector parameters `(lambda / 2, lambda, lambda / 2, 4)` of `lambda (r - r^3)`.
pub fn chafee_infante_sector(lambda: f64) -> SectorBounds {
    SectorBounds {
        kappa: lambda / 2.0,
        alpha1: lambda,
        alpha2: lambda / 2.0,
        p: 4.0,
    }
}

/// `alpha` of the `norm_scaled` preset: 2 at 0, 1 at 1, -2 from 2 on.
pub fn norm_scaled_alpha() -> AlphaTable {
    AlphaTable::new(vec![0.0, 1.0, 2.0], vec![2.0, 1.0, -2.0]).expect("valid table")
}

/// Builds the named preset on `(0, length)` with `modes` sine modes.
pub fn preset(name: &str, length: f64, modes: usize) -> Result<Preset> {
    let spectrum = DirichletSpectrum::new(length, modes)?;
    let omega = spectrum.lambda1();
    let e1 = SpectralState::basis(modes, 1);
    let weak = |g: Nonlinearity, sector: SectorBounds| -> Result<Preset> {
        let problem = EvolutionProblem::new(spectrum.clone(), g, e1.clone())?;
        let certificate = weak_certificate(sector, problem.forcing_norm(), length, omega / 2.0)?;
        Ok(Preset {
            name: name.to_string(),
            problem,
            x0: e1.clone(),
            certificate,
            sector: Some(sector),
        })
    };
    match name {
        "linear_decay" | "forced_linear" => {
            let h = if name == "linear_decay" {
                SpectralState::zeros(modes)
            } else {
                e1.clone()
            };
            let problem = EvolutionProblem::new(spectrum.clone(), Nonlinearity::zero(), h)?;
            let certificate = mild_certificate(omega, 0.0, 0.0, problem.forcing_norm())?;
            Ok(Preset {
                name: name.to_string(),
                problem,
                x0: e1.clone(),
                certificate,
                sector: None,
            })
        }
        "chafee_infante_lambda2" => weak(Nonlinearity::chafee_infante(2.0), chafee_infante_sector(2.0)),
        "chafee_infante_lambda10" => weak(Nonlinearity::chafee_infante(10.0), chafee_infante_sector(10.0)),
        "odd_polynomial_deg5" => weak(
            Nonlinearity::pointwise(vec![0.0, 1.0, 0.0, 0.0, 0.0, -1.0]),
            SectorBounds {
                kappa: 0.55,
                alpha1: 1.0,
                alpha2: 0.5,
                p: 6.0,
            },
        ),
        "norm_scaled" => {
            let alpha = norm_scaled_alpha();
            let (omega_prime, c) = mild_constants_from_alpha(&alpha, NORM_SCALED_R0)?;
            let problem = EvolutionProblem::new(spectrum.clone(), Nonlinearity::NormScaled(alpha), e1.clone())?;
            let certificate = mild_certificate(omega, omega_prime, c, problem.forcing_norm())?;
            Ok(Preset {
                name: name.to_string(),
                problem,
                x0: e1.clone(),
                certificate,
                sector: None,
            })
        }
        other => Err(invalid(format!(
            "unknown preset {other:?}; expected one of {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}

/// [`preset`] on `(0, pi)` with 32 modes.
pub fn default_preset(name: &str) -> Result<Preset> {
    preset(name, PI, 32)
}
