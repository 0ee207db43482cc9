//! Structure-preserving mixed Galerkin discretization of port-Hamiltonian
//! systems of two conservation laws on simplicial meshes.
//!
//! The pipeline runs mesh → Whitney Galerkin matrices → power-preserving
//! maps → Hodge matrices → explicit port-Hamiltonian model, followed by
//! simulation or spectral analysis.

pub mod analysis;
pub mod error;
pub mod hodge;
pub mod io;
pub mod mesh;
pub mod power_maps;
pub mod sim;
pub mod sparse;
pub mod statespace;
pub mod whitney;

pub use error::{PhError, Result};
pub use hodge::{hodge_1d, hodge_2d, HodgePair};
pub use mesh::{
    partition_boundary, BoundaryPartition, CausalitySpec, Corner, EdgeKind, Face, IncidencePair, SegmentSpec,
    Side, SimplexMesh, TriangleClass,
};
pub use power_maps::{
    build_1d_maps, build_maps_2d, power_balance, power_preservation_residual, ClassWeights, MapSet,
    TriangleWeights, WeightsConfig,
};
pub use sim::{simulate, wave2d_experiment, SimConfig, Signal, Trajectory};
pub use sparse::Csr;
pub use statespace::{assemble_model, build_2d_model, image_rep, io_rep, PHModel};
pub use whitney::{assemble, eval_whitney, FormDegreeSpec, GalerkinMatrices};
