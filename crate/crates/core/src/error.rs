use thiserror::Error;

/// Errors raised by model construction, analysis and integration.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("degenerate fixed point (Det J0 = 0), theorems inapplicable")]
    DegenerateFixedPoint,

    #[error("both diffusion coefficients are zero")]
    NoDiffusion,

    #[error("{0}")]
    WrongDiffusionRegime(&'static str),

    #[error("local system has no limit cycle: {0}")]
    NoLimitCycle(&'static str),

    #[error("stability ratio {ratio} exceeds the limit {limit}")]
    UnstableTimeStep { ratio: f64, limit: f64 },

    #[error("non-finite value in {component} at step {step}, cell {cell:?}")]
    NonFinite {
        step: u64,
        cell: (usize, usize),
        component: &'static str,
    },

    #[error("unsupported spatial dimension {0} for simulation (expected 1 or 2)")]
    UnsupportedDimension(usize),

    #[error("field is spatially homogeneous (amplitude {amplitude:e}), period count undefined")]
    HomogeneousField { amplitude: f64 },

    #[error("invalid sweep spec: {0}")]
    InvalidSweep(String),

    #[error("snapshot format: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and strictly positive",
        })
    }
}

pub(crate) fn finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        })
    }
}
