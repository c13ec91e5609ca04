use thiserror::Error;

use crate::materials::Axis;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{axis:?} index requested outside validity range: wavelength {wavelength_m:e} m, temperature {temperature_k} K")]
    OutOfValidityRange {
        axis: Option<Axis>,
        wavelength_m: f64,
        temperature_k: f64,
    },

    #[error("invalid dispersion model: {0}")]
    InvalidModel(String),

    #[error("unknown material: {0}")]
    UnknownMaterial(String),

    #[error("no positive poling period: k_p - k_s - k_i = {mismatch} rad/m")]
    NoPositivePeriod { mismatch: f64 },

    #[error("group-index mismatch vanishes; the linear bandwidth expansion does not apply")]
    DegenerateSlope,

    #[error("no real positive cluster spacing solves the second-order mode-number condition")]
    NoRealRoot,

    #[error("invalid reflectivity or loss: {0}")]
    InvalidReflectivity(String),

    #[error("finesse is infinite; linewidth is undefined")]
    InfiniteFinesse,

    #[error("Bell target {target} is incompatible with {pm} phase matching")]
    IncompatibleTarget { target: String, pm: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("scenario validation failed: {}", .0.join("; "))]
    ScenarioValidation(Vec<String>),

    #[error("unknown figure id: {0}")]
    UnknownFigure(String),

    #[error("bracket [{lo}, {hi}] does not contain a sign change")]
    NoBracket { lo: f64, hi: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("output error: {0}")]
    Output(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        exit_code_for(self.code())
    }

    /// Short stable code written into sweep cells.
    pub fn code(&self) -> &'static str {
        match self {
            Error::OutOfValidityRange { .. } => "out_of_range",
            Error::InvalidModel(_) => "invalid_model",
            Error::UnknownMaterial(_) => "unknown_material",
            Error::NoPositivePeriod { .. } => "no_positive_period",
            Error::DegenerateSlope => "degenerate_slope",
            Error::NoRealRoot => "no_real_root",
            Error::InvalidReflectivity(_) => "invalid_reflectivity",
            Error::InfiniteFinesse => "infinite_finesse",
            Error::IncompatibleTarget { .. } => "incompatible_target",
            Error::InvalidConfig(_) => "invalid_config",
            Error::ScenarioValidation(_) => "validation",
            Error::UnknownFigure(_) => "unknown_figure",
            Error::NoBracket { .. } => "no_bracket",
            Error::Io(_) => "io",
            Error::Parse(_) => "parse",
            Error::Output(_) => "output",
        }
    }
}

/// Exit code for an error `code()` string, as stored in sweep cells.
pub fn exit_code_for(code: &str) -> i32 {
    match code {
        "out_of_range" | "no_positive_period" | "degenerate_slope" | "no_real_root" | "infinite_finesse"
        | "no_bracket" => 3,
        "io" | "output" => 1,
        _ => 2,
    }
}
