use thiserror::Error;

/// Every failure the models, fitters and parsers can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("negative value for {field}: {value}")]
    NegativeValue { field: &'static str, value: f64 },
    #[error("non-finite value for {field}")]
    NonFinite { field: &'static str },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("invalid stage transition from {from:?} to {to:?}")]
    StageTransition {
        from: crate::state::Stage,
        to: crate::state::Stage,
    },
    #[error("unexpected stage for {role}: expected {expected:?}, got {actual:?}")]
    WrongStage {
        role: &'static str,
        expected: crate::state::Stage,
        actual: crate::state::Stage,
    },
    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),
    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("no convergence after {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("energy {0} MeV is not calibrated")]
    UnknownEnergy(f64),
    #[error("no conversion curve calibrated for {0} MeV")]
    UncalibratedEnergy(f64),
    #[error("curve calibrated for {curve} MeV used with a {plan} MeV plan")]
    EnergyMismatch { curve: f64, plan: f64 },
    #[error("model overrun: created NV {nv_ppm} ppm reaches P1 {p1_ppm} ppm")]
    ModelOverrun { nv_ppm: f64, p1_ppm: f64 },
    #[error("T2 {t2_s} s exceeds the nitrogen-independent limit {limit_s} s")]
    OutOfRange { t2_s: f64, limit_s: f64 },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate wavelength {0} nm")]
    DuplicateWavelength(f64),
    #[error("spectrum too short: {0} rows")]
    TooShort(usize),
    #[error("non-positive thickness {0} cm")]
    NonPositiveThickness(f64),
    #[error("reference spectra are degenerate (collinear or zero)")]
    DegenerateReferences,
    #[error("spectra have no overlapping wavelength range")]
    EmptyOverlap,
    #[error("spectrum kinds differ: {0:?} vs {1:?}")]
    KindMismatch(crate::spectra::SpectrumKind, crate::spectra::SpectrumKind),
    #[error("flat signal: amplitude is zero and T2 is undefined")]
    DegenerateSignal,
    #[error("window {lo}-{hi} nm lacks side margin inside the spectrum")]
    WindowOutOfRange { lo: f64, hi: f64 },
    #[error("bad calibration: {0}")]
    BadCalibration(String),
    #[error("no feasible fluence: constraint violated at {0:e} e/cm2")]
    NoFeasibleFluence(f64),
    #[error("constraint is not monotone in fluence near {0:e} e/cm2")]
    NonMonotoneConstraint(f64),
    #[error("no feasible recipe in the search space")]
    NoFeasibleRecipe,
    #[error("unknown table {0:?}")]
    UnknownTable(String),
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Stable variant name, printed by the CLI on standard error.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NegativeValue { .. } => "NegativeValue",
            Error::NonFinite { .. } => "NonFinite",
            Error::InvalidParameter { .. } => "InvalidParameter",
            Error::StageTransition { .. } => "StageTransition",
            Error::WrongStage { .. } => "WrongStage",
            Error::ZeroDenominator(_) => "ZeroDenominator",
            Error::InsufficientData { .. } => "InsufficientData",
            Error::DegenerateData(_) => "DegenerateData",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::UnknownEnergy(_) => "UnknownEnergy",
            Error::UncalibratedEnergy(_) => "UncalibratedEnergy",
            Error::EnergyMismatch { .. } => "EnergyMismatch",
            Error::ModelOverrun { .. } => "ModelOverrun",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::Parse { .. } => "ParseError",
            Error::DuplicateWavelength(_) => "DuplicateWavelength",
            Error::TooShort(_) => "TooShort",
            Error::NonPositiveThickness(_) => "NonPositiveThickness",
            Error::DegenerateReferences => "DegenerateReferences",
            Error::EmptyOverlap => "EmptyOverlap",
            Error::KindMismatch(..) => "KindMismatch",
            Error::DegenerateSignal => "DegenerateSignal",
            Error::WindowOutOfRange { .. } => "WindowOutOfRange",
            Error::BadCalibration(_) => "BadCalibration",
            Error::NoFeasibleFluence(_) => "NoFeasibleFluence",
            Error::NonMonotoneConstraint(_) => "NonMonotoneConstraint",
            Error::NoFeasibleRecipe => "NoFeasibleRecipe",
            Error::UnknownTable(_) => "UnknownTable",
            Error::Config { .. } => "ConfigError",
            Error::Io(_) => "IoError",
        }
    }

    /// True for errors caused by malformed input rather than model limits.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::NegativeValue { .. }
                | Error::NonFinite { .. }
                | Error::InvalidParameter { .. }
                | Error::Parse { .. }
                | Error::DuplicateWavelength(_)
                | Error::TooShort(_)
                | Error::NonPositiveThickness(_)
                | Error::UnknownTable(_)
                | Error::Config { .. }
                | Error::Io(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
