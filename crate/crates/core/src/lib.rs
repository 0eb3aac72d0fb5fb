//! Chart-level toolkit for log-symplectic and b-symplectic geometry.

pub mod bivector;
pub mod bmap;
pub mod certificate;
pub mod chart;
pub mod config;
pub mod constructions;
pub mod expr;
pub mod form;
pub mod geometry;
pub mod linalg;
pub mod report;
pub mod scene;
pub mod topology;
pub mod zero;
