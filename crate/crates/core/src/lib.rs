pub mod error;
pub mod harness;
pub mod integrators;
pub mod ledger;
pub mod mesh;
pub mod operators;
pub mod partition;
pub mod regions;

pub use error::{Error, Result};
pub use integrators::{Scheme, SchemeConfig, State};
pub use ledger::{WorkLedger, Zone};
pub use mesh::VoronoiMesh;
pub use operators::{CellField, EdgeField, StaticFields, VertexField};
pub use regions::RegionMap;
