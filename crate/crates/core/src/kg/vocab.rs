use std::collections::HashMap;
use std::fmt;

use sha2::{Digest, Sha256};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_type!(
    /// Dense entity index.
    EntityId
);
id_type!(
    /// Dense relation index. Inverse relations and the reserved STAY id live
    /// in the same space.
    RelationId
);
id_type!(
    /// Dense entity-type index.
    TypeId
);

/// Insertion-ordered bijection between names and contiguous ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Interner {
    names: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Interner {
    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.ids.insert(name.to_owned(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: u32) -> Option<&str> {
        self.names.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// SHA-256 over the newline-joined names in id order.
    pub fn digest(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        for name in &self.names {
            hasher.update(name.as_bytes());
            hasher.update(b"\n");
        }
        hasher.finalize().into()
    }
}

/// Entity, relation and type name tables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    pub entities: Interner,
    pub relations: Interner,
    pub types: Interner,
}

/// Digests identifying a vocabulary; stored in checkpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VocabularyHashes {
    pub entities: [u8; 32],
    pub relations: [u8; 32],
    pub types: [u8; 32],
}

impl Vocabulary {
    pub fn entity_id(&self, name: &str) -> Option<EntityId> {
        self.entities.get(name).map(EntityId)
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.relations.get(name).map(RelationId)
    }

    pub fn type_id(&self, name: &str) -> Option<TypeId> {
        self.types.get(name).map(TypeId)
    }

    pub fn entity_name(&self, id: EntityId) -> Option<&str> {
        self.entities.name(id.0)
    }

    pub fn relation_name(&self, id: RelationId) -> Option<&str> {
        self.relations.name(id.0)
    }

    pub fn type_name(&self, id: TypeId) -> Option<&str> {
        self.types.name(id.0)
    }

    pub fn hashes(&self) -> VocabularyHashes {
        VocabularyHashes {
            entities: self.entities.digest(),
            relations: self.relations.digest(),
            types: self.types.digest(),
        }
    }
}

/// Suffix marking an inverse relation name.
pub const INVERSE_SUFFIX: &str = "^-1";

pub fn inverse_name(name: &str) -> String {
    format!("{name}{INVERSE_SUFFIX}")
}
