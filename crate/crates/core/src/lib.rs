pub mod error;
pub mod estimators;
pub mod fem;
pub mod mesh;
pub mod quadrature;
pub mod report;
pub mod scheme;
pub mod solver;
pub mod sparse;
pub mod study;
