use serde::{Deserialize, Serialize};
use std::fmt;

/// Non-fatal diagnostics attached to numerical results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// The maximizing index of the associated function reached the end of the table.
    Truncation { t: f64, p_max: usize },
    /// A value was computed from the fitted power-law extension of a finite table.
    Extrapolated { t: f64 },
    /// Samples do not decay at the grid boundary.
    BoundaryDecay { relative_mass: f64 },
    /// Periodic wrap-around of a convolution is not negligible.
    WrapAround { relative_mass: f64 },
    /// The weighted sup is attained near the grid boundary.
    BoundaryDominated { alpha: usize, x: f64 },
    /// The spectrum is not resolved at the band edge.
    SpectralTruncation { relative_edge: f64 },
    /// Symbol growth is not damped by the window at the edge of the time-frequency grid.
    WindowTruncation { relative_mass: f64 },
    /// Values overflowed the floating-point range and were reported in log form only.
    Overflow { detail: String },
    /// Quadrature or tail estimate missed its tolerance.
    Precision { detail: String },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::Truncation { t, p_max } => {
                write!(f, "argmax saturated at p_max = {p_max} for t = {t}")
            }
            Warning::Extrapolated { t } => write!(f, "power-law tail used at t = {t}"),
            Warning::BoundaryDecay { relative_mass } => {
                write!(f, "boundary samples not decayed (relative {relative_mass:e})")
            }
            Warning::WrapAround { relative_mass } => {
                write!(f, "convolution wrap-around mass {relative_mass:e}")
            }
            Warning::BoundaryDominated { alpha, x } => {
                write!(f, "weighted sup dominated by boundary node x = {x} (alpha = {alpha})")
            }
            Warning::SpectralTruncation { relative_edge } => {
                write!(f, "spectrum not decayed at band edge (relative {relative_edge:e})")
            }
            Warning::WindowTruncation { relative_mass } => {
                write!(f, "pairing mass at grid edge {relative_mass:e}")
            }
            Warning::Overflow { detail } => write!(f, "overflow: {detail}"),
            Warning::Precision { detail } => write!(f, "precision: {detail}"),
        }
    }
}
