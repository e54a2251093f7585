pub mod decomposition;
pub mod error;
pub mod fem;
pub mod graph;
pub mod harness;
pub mod io;
pub mod manufactured;
pub mod quadrature;
pub mod rbm;
pub mod sparse;
pub mod timestep;
