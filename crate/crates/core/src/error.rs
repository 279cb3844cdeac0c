use thiserror::Error;

use crate::model::PhasePoint;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter {name} = {value} must lie strictly inside (0, 1)")]
    ParamOutOfRange { name: &'static str, value: f64 },

    #[error("regime {regime} requires symmetric parameters (nu_a = nu_b, q_a = q_b)")]
    RegimeParamMismatch { regime: &'static str },

    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),

    #[error("step size underflow at t = {t}, state ({}, {})", state.x_a, state.x_b)]
    StepSizeUnderflow { t: f64, state: PhasePoint },

    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("trajectory does not cross the requested boundary edge")]
    NoCrossing,

    #[error("separatrix left the unit square through an unexpected edge at ({}, {})", point.x_a, point.x_b)]
    ExitThroughUnexpectedEdge { point: PhasePoint },

    #[error("separatrix trace did not leave the unit square within the time budget")]
    NoExit,

    #[error("point ({}, {}) lies within the margin of a threshold line", point.x_a, point.x_b)]
    OnBoundary { point: PhasePoint },

    #[error("parameters sit on the triangle/trapezoid case boundary; derivative undefined")]
    AtBoundary,

    #[error("matrix has complex eigenvalues (discriminant {0})")]
    ComplexEigenvalues(f64),

    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
