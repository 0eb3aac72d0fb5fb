//! Exact surface admissibility and cohomology-ring obstructions.

mod obstruction;
mod surface;

pub use obstruction::{
    obstruction_a, obstruction_b, CohomologyRing, DefinitenessProof, IsotropicWitness, ObstructionA, ObstructionB,
    DEFAULT_BOX,
};
pub use surface::{is_null_homologous, surface_log_admissibility, AdmissibilityReport, TriangulatedSurface, Z2Cycle};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TopologyError {
    #[error("invalid surface: {0}")]
    Surface(String),
    #[error("edge {edge:?} borders {count} triangles, expected 2")]
    NotClosed { edge: [usize; 2], count: usize },
    #[error("edge {0:?} is not an edge of the triangulation")]
    EdgeNotInSurface([usize; 2]),
    #[error("Z has odd degree at vertex {vertex}; not a cycle")]
    NotCycle { vertex: usize },
    #[error("ring: {0}")]
    Ring(String),
    #[error("n = {0} must be at least 2")]
    InvalidN(usize),
    #[error("n = {0} is unsupported; the matrix model covers n = 2 and n = 3")]
    UnsupportedN(usize),
}
