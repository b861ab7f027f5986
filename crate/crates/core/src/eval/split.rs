//! Train/valid/test partition of head-relation edges and its file format:
//! `split<TAB>head<TAB>relation<TAB>tail`, one edge per line.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::kg::{KnowledgeGraph, Triple};

use super::EvalError;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<Triple>,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
}

impl Split {
    /// Seeded shuffle, then `valid_fraction` and `test_fraction` of the edges
    /// (rounded) go to the held-out parts.
    pub fn shuffle(edges: &[Triple], valid_fraction: f64, test_fraction: f64, seed: u64) -> Self {
        let mut edges = edges.to_vec();
        edges.sort_unstable();
        edges.dedup();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        edges.shuffle(&mut rng);
        let n = edges.len();
        let n_test = ((n as f64) * test_fraction).round() as usize;
        let n_valid = (((n as f64) * valid_fraction).round() as usize).min(n - n_test);
        let test = edges.split_off(n - n_test);
        let valid = edges.split_off(edges.len() - n_valid);
        Self {
            train: edges,
            valid,
            test,
        }
    }

    /// 80/10/10.
    pub fn standard(edges: &[Triple], seed: u64) -> Self {
        Self::shuffle(edges, 0.1, 0.1, seed)
    }

    pub fn held_out(&self) -> impl Iterator<Item = &Triple> {
        self.valid.iter().chain(&self.test)
    }

    pub fn all(&self) -> impl Iterator<Item = &Triple> {
        self.train.iter().chain(self.held_out())
    }

    pub fn write<W: Write>(&self, kg: &KnowledgeGraph, mut out: W) -> std::io::Result<()> {
        for (label, part) in [("train", &self.train), ("valid", &self.valid), ("test", &self.test)] {
            for t in part {
                writeln!(
                    out,
                    "{label}\t{}\t{}\t{}",
                    kg.entity_name(t.head),
                    kg.relation_name(t.relation),
                    kg.entity_name(t.tail)
                )?;
            }
        }
        Ok(())
    }

    pub fn read<R: BufRead>(kg: &KnowledgeGraph, input: R) -> Result<Self, EvalError> {
        let vocab = kg.vocab();
        let mut split = Split::default();
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| EvalError::Io(e.to_string()))?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let bad = |reason: String| EvalError::MalformedSplit {
                line: i + 1,
                reason,
            };
            if cols.len() != 4 {
                return Err(bad(format!("expected 4 columns, found {}", cols.len())));
            }
            let head = vocab
                .entity_id(cols[1])
                .ok_or_else(|| bad(format!("unknown entity `{}`", cols[1])))?;
            let relation = vocab
                .relation_id(cols[2])
                .ok_or_else(|| bad(format!("unknown relation `{}`", cols[2])))?;
            let tail = vocab
                .entity_id(cols[3])
                .ok_or_else(|| bad(format!("unknown entity `{}`", cols[3])))?;
            let t = Triple::new(head, relation, tail);
            match cols[0] {
                "train" => split.train.push(t),
                "valid" => split.valid.push(t),
                "test" => split.test.push(t),
                other => return Err(bad(format!("unknown split `{other}`"))),
            }
        }
        Ok(split)
    }
}
