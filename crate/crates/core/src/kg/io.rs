//! Tab-separated triple and type files.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::error::GraphError;
use super::graph::{KnowledgeGraph, Triple};
use super::vocab::{EntityId, TypeId, Vocabulary};

/// Incremental graph construction keyed by names.
#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    vocab: Vocabulary,
    entity_types: Vec<TypeId>,
    triples: Vec<Triple>,
}

impl GraphBuilder {
    /// Registers `name` with type `ty`. Re-registering with the same type is a
    /// no-op.
    pub fn add_entity(&mut self, name: &str, ty: &str) -> Result<EntityId, GraphError> {
        let type_id = TypeId(self.vocab.types.intern(ty));
        if let Some(id) = self.vocab.entities.get(name) {
            let existing = self.entity_types[id as usize];
            if existing != type_id {
                return Err(GraphError::ConflictingType {
                    entity: name.to_owned(),
                    first: self.vocab.types.name(existing.0).unwrap_or("?").to_owned(),
                    second: ty.to_owned(),
                });
            }
            return Ok(EntityId(id));
        }
        let id = self.vocab.entities.intern(name);
        self.entity_types.push(type_id);
        Ok(EntityId(id))
    }

    /// Interns a relation name without adding an edge.
    pub fn add_relation(&mut self, name: &str) -> super::RelationId {
        super::RelationId(self.vocab.relations.intern(name))
    }

    pub fn add_triple(&mut self, head: &str, relation: &str, tail: &str) -> Result<(), GraphError> {
        let h = self
            .vocab
            .entity_id(head)
            .ok_or_else(|| GraphError::MissingTypeMapping(head.to_owned()))?;
        let t = self
            .vocab
            .entity_id(tail)
            .ok_or_else(|| GraphError::MissingTypeMapping(tail.to_owned()))?;
        let r = self.vocab.relations.intern(relation);
        self.triples.push(Triple::new(h, super::RelationId(r), t));
        Ok(())
    }

    /// Builds the graph; also returns the number of duplicate triples dropped.
    pub fn build(self) -> Result<(KnowledgeGraph, usize), GraphError> {
        KnowledgeGraph::from_parts(self.vocab, self.entity_types, self.triples)
    }
}

/// A freshly loaded graph plus ingestion diagnostics.
#[derive(Debug)]
pub struct LoadedGraph {
    pub graph: KnowledgeGraph,
    pub duplicates: usize,
}

fn rows<'a, R: BufRead + 'a>(
    reader: R,
    source_name: &'a str,
    expected: usize,
) -> impl Iterator<Item = Result<(usize, Vec<String>), GraphError>> + 'a {
    reader.lines().enumerate().filter_map(move |(i, line)| {
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                return Some(Err(GraphError::Io {
                    path: source_name.to_owned(),
                    source: e,
                }))
            }
        };
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            return None;
        }
        let cols: Vec<String> = line.split('\t').map(str::to_owned).collect();
        if cols.len() != expected {
            return Some(Err(GraphError::MalformedRow {
                source_name: source_name.to_owned(),
                line: i + 1,
                expected,
                found: cols.len(),
            }));
        }
        Some(Ok((i + 1, cols)))
    })
}

/// Loads `head<TAB>relation<TAB>tail` triples typed by `entity<TAB>type` rows.
///
/// Entity ids follow the order of the types source; relation ids follow the
/// first appearance in the triples source.
pub fn load_graph<R1: BufRead, R2: BufRead>(
    triples: R1,
    triples_name: &str,
    types: R2,
    types_name: &str,
) -> Result<LoadedGraph, GraphError> {
    let mut builder = GraphBuilder::default();
    let mut n_types = 0usize;
    for row in rows(types, types_name, 2) {
        let (_, cols) = row?;
        builder.add_entity(&cols[0], &cols[1])?;
        n_types += 1;
    }
    if n_types == 0 {
        return Err(GraphError::EmptyInput(types_name.to_owned()));
    }
    let mut n_triples = 0usize;
    for row in rows(triples, triples_name, 3) {
        let (_, cols) = row?;
        builder.add_triple(&cols[0], &cols[1], &cols[2])?;
        n_triples += 1;
    }
    if n_triples == 0 {
        return Err(GraphError::EmptyInput(triples_name.to_owned()));
    }
    let (graph, duplicates) = builder.build()?;
    Ok(LoadedGraph { graph, duplicates })
}

fn open(path: &Path) -> Result<BufReader<File>, GraphError> {
    File::open(path).map(BufReader::new).map_err(|e| GraphError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn load_graph_files(triples: &Path, types: &Path) -> Result<LoadedGraph, GraphError> {
    load_graph(
        open(triples)?,
        &triples.display().to_string(),
        open(types)?,
        &types.display().to_string(),
    )
}

/// Writes the stored triples grouped by relation id, so that reloading the
/// file reproduces the relation ids of `kg` (provided every relation has an
/// edge).
pub fn write_triples<W: Write>(kg: &KnowledgeGraph, mut out: W) -> std::io::Result<()> {
    let mut sorted: Vec<&Triple> = kg.triples().iter().collect();
    sorted.sort_by_key(|t| (t.relation, t.head, t.tail));
    for t in sorted {
        writeln!(
            out,
            "{}\t{}\t{}",
            kg.entity_name(t.head),
            kg.relation_name(t.relation),
            kg.entity_name(t.tail)
        )?;
    }
    Ok(())
}

pub fn write_types<W: Write>(kg: &KnowledgeGraph, mut out: W) -> std::io::Result<()> {
    for (i, ty) in kg.entity_types().iter().enumerate() {
        writeln!(
            out,
            "{}\t{}",
            kg.entity_name(EntityId(i as u32)),
            kg.vocab().type_name(*ty).unwrap_or("?")
        )?;
    }
    Ok(())
}
