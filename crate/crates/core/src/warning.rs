use core::fmt;

/// Non-fatal conditions reported alongside a result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Warning {
    /// `|Δ_m| τ` is below the series threshold; the mode is driven on
    /// resonance.
    ResonantMode { mode: usize },
    /// Neither driven ion couples to this mode, so its closure rows were left
    /// out of the kernel.
    DroppedConstraint { mode: usize },
    /// The uniform drive had no angle in the kernel; the conventional pulse
    /// fell back to the dominant angle direction.
    ConventionalFallback,
    /// A negative target was met by flipping the sign of ion q's pulse.
    TargetFlipped,
    /// Top Fock level population exceeded the leakage threshold.
    Leakage { mode: usize, population: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::ResonantMode { mode } => write!(f, "mode {mode} is resonant with the drive"),
            Warning::DroppedConstraint { mode } => {
                write!(f, "mode {mode} does not couple to the gate ions; closure rows dropped")
            }
            Warning::ConventionalFallback => {
                f.write_str("uniform drive has no angle in the kernel; used dominant angle direction")
            }
            Warning::TargetFlipped => f.write_str("negative target: ion q pulse sign-flipped"),
            Warning::Leakage { mode, population } => {
                write!(f, "mode {mode} top Fock level population {population:e} exceeds threshold")
            }
        }
    }
}
