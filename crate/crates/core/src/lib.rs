//! Embedded tori in a connected sum of copies of S²×S¹, cut by a maximal sphere system.
//!
//! The sphere system is encoded as a cubic graph ([`graph::SphereGraph`]);
//! torus positions ([`position::TorusPosition`]) are normalized by a
//! rewriting system ([`normalize`]) into normal tori
//! ([`normal_graph::NormalTorus`]), which are compared up to equivalence via
//! canonical forms of their decorated dual graphs.

pub mod cli;
pub mod fixtures;
pub mod graph;
pub mod ids;
pub mod normal_graph;
pub mod normalize;
pub mod oracle;
pub mod position;

pub use graph::{build_standard, label_generators, random_cubic, GraphError, SphereGraph};
pub use ids::{CircleId, HalfEdge, PVertex, PieceId, RegionId, Side, SphereId};
pub use normal_graph::{CanonicalForm, CyclicWord, DecoratedGraph, NormalGraphError, NormalTorus};
pub use normalize::{apply_move, find_moves, normalize, Move, MoveError, Normalization, NormalizeError};
pub use position::{PieceKind, TorusPosition};
