use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("entity `{0}` appears in triples but has no type")]
    MissingTypeMapping(String),
    #[error("{source_name} line {line}: expected {expected} tab-separated columns, found {found}")]
    MalformedRow {
        source_name: String,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("{0}: no rows")]
    EmptyInput(String),
    #[error("entity `{entity}` has conflicting types `{first}` and `{second}`")]
    ConflictingType {
        entity: String,
        first: String,
        second: String,
    },
    #[error("graph is already augmented with inverse relations")]
    AlreadyAugmented,
    #[error("inverse relation name `{0}` collides with an input relation")]
    InverseNameClash(String),
    #[error("unknown entity id {0}")]
    UnknownEntity(u32),
    #[error("unknown entity `{0}`")]
    UnknownEntityName(String),
    #[error("unknown relation id {0}")]
    UnknownRelationId(u32),
    #[error("unknown relation `{0}`")]
    UnknownRelationName(String),
    #[error("type table has {types} rows for {entities} entities")]
    TypeTableSize { entities: usize, types: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
