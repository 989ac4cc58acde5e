pub mod edge;
pub mod krein;
pub mod linalg;
pub mod models;
pub mod normal_forms;
pub mod spectral;
pub mod tight_binding;
pub mod tolerance;

pub use krein::{KreinEigenvalue, KreinError, Sign, Symmetries, SymmetryKind};
pub use tolerance::Tolerances;
