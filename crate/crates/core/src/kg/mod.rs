//! Typed knowledge graph: vocabularies, adjacency, the walker's action space,
//! file ingestion and summary statistics.

mod error;
mod graph;
mod io;
mod path;
mod stats;
mod vocab;

pub use error::GraphError;
pub use graph::{Action, KnowledgeGraph, Triple};
pub use path::InstancePath;
pub use io::{load_graph, load_graph_files, write_triples, write_types, GraphBuilder, LoadedGraph};
pub use stats::{graph_stats, max_out_degree, GraphStats};
pub use vocab::{
    inverse_name, EntityId, Interner, RelationId, TypeId, Vocabulary, VocabularyHashes,
    INVERSE_SUFFIX,
};
