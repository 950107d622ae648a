//! Weighted space-time norms, Besov/Hölder seminorms over a finite shift
//! set, and the velocity-averaging harness.

mod besov;
mod dispersive;
mod fit;
mod initial;
mod report;
mod shift;
mod trajectory;

pub use besov::{besov_seminorm, besov_seminorm_vector, shifted};
pub use dispersive::{dispersive_average_check, Perturbation};
pub use fit::{fit_decay_exponent, DecayFit};
pub use initial::{triple_norm_initial, PhaseFunction};
pub use report::NormReport;
pub use shift::ShiftSet;
pub use trajectory::{node_terms, trajectory_norm, trajectory_norm_running, TrajectoryTerms};

/// The two Lebesgue exponents used throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exponent {
    One,
    Infinity,
}

impl Exponent {
    pub const BOTH: [Exponent; 2] = [Exponent::One, Exponent::Infinity];

    /// `2(p − 1)/p`, the dispersive weight exponent.
    pub fn decay_weight(self) -> f64 {
        match self {
            Exponent::One => 0.0,
            Exponent::Infinity => 2.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Exponent::One => "1",
            Exponent::Infinity => "inf",
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Exponent::One => 1.0,
            Exponent::Infinity => f64::INFINITY,
        }
    }
}

pub(crate) fn japanese(s: f64) -> f64 {
    (1.0 + s * s).sqrt()
}
