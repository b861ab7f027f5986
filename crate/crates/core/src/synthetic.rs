//! Seeded generator of small typed graphs with one planted rule, for
//! desk-scale end-to-end checks.
//!
//! Generation runs in three stages: entities per type, schema edges with a
//! per-node degree, then head-relation edges planted on every (source,
//! target) pair connected by an instance of the planted body, each with the
//! configured probability. Planting repeats until no undecided body-connected
//! pair is left, so probability 1 yields a graph in which every body-connected
//! pair carries a head edge.

use std::collections::{BTreeSet, HashMap, HashSet};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::Split;
use crate::kg::{EntityId, GraphBuilder, GraphError, KnowledgeGraph, Triple, TypeId, INVERSE_SUFFIX};
use crate::rules::{exact_support, serialize_rules, Rule, RuleError, RuleSet};

#[derive(Debug, Error)]
pub enum SyntheticError {
    #[error("infeasible config: {0}")]
    InfeasibleConfig(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Rule(#[from] RuleError),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TypeSpec {
    pub name: String,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum DegreeMode {
    /// Every source entity draws `degree` distinct targets.
    PerSource,
    /// Every target entity draws `degree` distinct sources.
    PerTarget,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RelationSpec {
    pub name: String,
    pub source: String,
    pub target: String,
    /// Mean number of edges per node on the `mode` side. The fractional part
    /// is realised as a Bernoulli extra edge.
    pub degree: f64,
    #[serde(default = "default_mode")]
    pub mode: DegreeMode,
}

fn default_mode() -> DegreeMode {
    DegreeMode::PerSource
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PlantedRuleSpec {
    pub head_relation: String,
    /// Arrow notation, e.g. `Compound -[binds]-> Gene -[associates^-1]-> Disease`.
    pub body: String,
    pub probability: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SyntheticGraphConfig {
    pub seed: u64,
    /// Scales the degree of every relation that does not occur in the planted
    /// body.
    #[serde(default = "one")]
    pub noise_density: f64,
    #[serde(default = "three")]
    pub max_path_length: usize,
    pub types: Vec<TypeSpec>,
    pub relations: Vec<RelationSpec>,
    pub planted: PlantedRuleSpec,
}

fn one() -> f64 {
    1.0
}

fn three() -> usize {
    3
}

impl Default for SyntheticGraphConfig {
    /// About 300 entities, nine relations, and a length-3 planted body through
    /// shared pharmacologic classes.
    fn default() -> Self {
        let ty = |name: &str, count| TypeSpec {
            name: name.into(),
            count,
        };
        let rel = |name: &str, source: &str, target: &str, degree, mode| RelationSpec {
            name: name.into(),
            source: source.into(),
            target: target.into(),
            degree,
            mode,
        };
        use DegreeMode::*;
        Self {
            seed: 7,
            noise_density: 1.0,
            max_path_length: 3,
            types: vec![
                ty("Compound", 100),
                ty("Disease", 40),
                ty("Gene", 60),
                ty("Pharmacologic Class", 20),
                ty("Side Effect", 50),
                ty("Anatomy", 30),
            ],
            relations: vec![
                rel("treats", "Compound", "Disease", 0.5, PerSource),
                rel("includes", "Pharmacologic Class", "Compound", 1.0, PerTarget),
                rel("binds", "Compound", "Gene", 2.0, PerSource),
                rel("associates", "Disease", "Gene", 2.0, PerSource),
                rel("causes", "Compound", "Side Effect", 2.0, PerSource),
                rel("resembles", "Compound", "Compound", 0.5, PerSource),
                rel("palliates", "Compound", "Disease", 0.3, PerSource),
                rel("expresses", "Anatomy", "Gene", 3.0, PerSource),
                rel("localizes", "Disease", "Anatomy", 1.0, PerSource),
            ],
            planted: PlantedRuleSpec {
                head_relation: "treats".into(),
                body: "Compound -[includes^-1]-> Pharmacologic Class -[includes]-> Compound -[treats]-> Disease".into(),
                probability: 1.0,
            },
        }
    }
}

/// Output of [`generate_synthetic`].
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    /// The generated graph, without inverse relations.
    pub graph: KnowledgeGraph,
    /// Head edges added by planting, sorted.
    pub planted: Vec<Triple>,
    /// The planted rule resolved against the augmented graph, scored with its
    /// exact confidence.
    pub rule: Rule,
    /// Rule file contents for the planted rule.
    pub rules_text: String,
    /// 80/10/10 partition of the planted edges.
    pub split: Split,
}

fn draw_count(rng: &mut ChaCha8Rng, degree: f64, max: usize) -> usize {
    let base = degree.floor();
    let extra = if rng.gen::<f64>() < degree - base { 1 } else { 0 };
    (base as usize + extra).min(max)
}

fn base_relation_name(name: &str) -> &str {
    name.strip_suffix(INVERSE_SUFFIX).unwrap_or(name)
}

fn validate(config: &SyntheticGraphConfig) -> Result<(), SyntheticError> {
    let infeasible = |m: String| Err(SyntheticError::InfeasibleConfig(m));
    let mut names = HashSet::new();
    for t in &config.types {
        if !names.insert(t.name.as_str()) {
            return infeasible(format!("type `{}` declared twice", t.name));
        }
    }
    let count_of = |name: &str| config.types.iter().find(|t| t.name == name).map(|t| t.count);
    for r in &config.relations {
        if count_of(&r.source).is_none() || count_of(&r.target).is_none() {
            return infeasible(format!("relation `{}` uses an undeclared type", r.name));
        }
        if !(r.degree >= 0.0 && r.degree.is_finite()) {
            return infeasible(format!("relation `{}` has invalid degree {}", r.name, r.degree));
        }
        if r.name.ends_with(INVERSE_SUFFIX) {
            return infeasible(format!("relation `{}` must not carry the inverse suffix", r.name));
        }
    }
    let p = config.planted.probability;
    if !(0.0..=1.0).contains(&p) {
        return infeasible(format!("planted probability {p} is outside [0, 1]"));
    }
    if !(config.noise_density >= 0.0 && config.noise_density.is_finite()) {
        return infeasible(format!("noise density {} is invalid", config.noise_density));
    }
    if !config
        .relations
        .iter()
        .any(|r| r.name == config.planted.head_relation)
    {
        return infeasible(format!(
            "head relation `{}` is not in the relation schema",
            config.planted.head_relation
        ));
    }
    Ok(())
}

fn planted_rule(
    config: &SyntheticGraphConfig,
    augmented: &KnowledgeGraph,
) -> Result<Rule, SyntheticError> {
    let body = config.planted.body.trim();
    let first = body.split("-[").next().unwrap_or("").trim();
    let last = body.rsplit("]->").next().unwrap_or("").trim();
    let text = format!(
        "HEAD\t{first}\t{}\t{last}\nSCORE=0 {body}\n",
        config.planted.head_relation
    );
    let file = crate::rules::RuleFile::parse(&text)?;
    let line = &file.rules[0];
    for ty in &line.types {
        match config.types.iter().find(|t| &t.name == ty) {
            Some(t) if t.count > 0 => {}
            _ => {
                return Err(SyntheticError::InfeasibleConfig(format!(
                    "planted body references type `{ty}` with zero entities"
                )))
            }
        }
    }
    for rel in &line.relations {
        if !config
            .relations
            .iter()
            .any(|r| r.name == base_relation_name(rel))
        {
            return Err(SyntheticError::InfeasibleConfig(format!(
                "planted body uses unknown relation `{rel}`"
            )));
        }
    }
    if line.relations.len() > config.max_path_length {
        return Err(SyntheticError::InfeasibleConfig(format!(
            "planted body has length {} > max path length {}",
            line.relations.len(),
            config.max_path_length
        )));
    }
    let set = file.resolve(augmented).map_err(|e| match e {
        RuleError::MalformedRule { reason, .. } => SyntheticError::InfeasibleConfig(reason),
        other => other.into(),
    })?;
    Ok(set.rules()[0].clone())
}

/// All (source, target) pairs joined by at least one instance of `rule.body`.
fn body_pairs(kg: &KnowledgeGraph, rule: &Rule) -> BTreeSet<(EntityId, EntityId)> {
    let body = &rule.body;
    let mut out = BTreeSet::new();
    for source in kg.entities_of_type(body.source_type()) {
        let mut frontier: BTreeSet<EntityId> = BTreeSet::from([source]);
        for (k, &rel) in body.relations().iter().enumerate() {
            let ty = body.types()[k + 1];
            let mut next = BTreeSet::new();
            for &v in &frontier {
                for &(r, t) in kg.neighbors(v) {
                    if r == rel && kg.entity_types()[t.index()] == ty {
                        next.insert(t);
                    }
                }
            }
            frontier = next;
        }
        out.extend(frontier.into_iter().map(|t| (source, t)));
    }
    out
}

pub fn generate_synthetic(config: &SyntheticGraphConfig) -> Result<SyntheticDataset, SyntheticError> {
    validate(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut builder = GraphBuilder::default();
    let mut by_type: HashMap<&str, Vec<EntityId>> = HashMap::new();
    for t in &config.types {
        let ids = by_type.entry(t.name.as_str()).or_default();
        for i in 0..t.count {
            ids.push(builder.add_entity(&format!("{}::{i}", t.name), &t.name)?);
        }
    }
    // Parse errors surface later, from `planted_rule`.
    let body_relations: HashSet<String> =
        crate::rules::RuleFile::parse(&format!("HEAD x y z\nSCORE=0 {}", config.planted.body))
            .map(|f| {
                f.rules[0]
                    .relations
                    .iter()
                    .map(|r| base_relation_name(r).to_owned())
                    .collect()
            })
            .unwrap_or_default();

    let mut triples: Vec<Triple> = Vec::new();
    for spec in &config.relations {
        let rel = builder.add_relation(&spec.name);
        let degree = if body_relations.contains(&spec.name) {
            spec.degree
        } else {
            spec.degree * config.noise_density
        };
        let sources = &by_type[spec.source.as_str()];
        let targets = &by_type[spec.target.as_str()];
        let (anchors, pool) = match spec.mode {
            DegreeMode::PerSource => (sources, targets),
            DegreeMode::PerTarget => (targets, sources),
        };
        for &a in anchors {
            let k = draw_count(&mut rng, degree, pool.len());
            if k == 0 {
                continue;
            }
            // Skip self-loops by drawing one spare candidate.
            let picks = sample(&mut rng, pool.len(), (k + 1).min(pool.len()));
            let mut taken = 0;
            for i in picks.iter() {
                if taken == k {
                    break;
                }
                let b = pool[i];
                if a == b {
                    continue;
                }
                let t = match spec.mode {
                    DegreeMode::PerSource => Triple::new(a, rel, b),
                    DegreeMode::PerTarget => Triple::new(b, rel, a),
                };
                triples.push(t);
                taken += 1;
            }
        }
    }

    let head_rel_name = config.planted.head_relation.as_str();
    let (base, _) = builder.clone().build()?;
    let head_rel = base
        .vocab()
        .relation_id(head_rel_name)
        .expect("head relation interned above");
    let vocab = base.vocab().clone();
    let types: Vec<TypeId> = base.entity_types().to_vec();

    let build = |triples: &[Triple]| -> Result<KnowledgeGraph, SyntheticError> {
        let (g, _) = KnowledgeGraph::from_parts(vocab.clone(), types.clone(), triples.to_vec())?;
        Ok(g)
    };

    let mut graph = build(&triples)?;
    let mut augmented = graph.clone().add_inverse_relations()?;
    let rule = planted_rule(config, &augmented)?;

    let mut decided: HashSet<(EntityId, EntityId)> = HashSet::new();
    let mut planted = Vec::new();
    loop {
        let mut added = false;
        for (s, t) in body_pairs(&augmented, &rule) {
            if !decided.insert((s, t)) {
                continue;
            }
            if graph.has_edge(s, head_rel, t) {
                continue;
            }
            if rng.gen::<f64>() < config.planted.probability {
                let e = Triple::new(s, head_rel, t);
                triples.push(e);
                planted.push(e);
                added = true;
            }
        }
        if !added {
            break;
        }
        graph = build(&triples)?;
        augmented = graph.clone().add_inverse_relations()?;
    }
    planted.sort_unstable();

    let support = exact_support(&augmented, &rule);
    let rule = Rule::new(rule.head, rule.body.clone(), support.confidence())?;
    let rules_text = serialize_rules(&RuleSet::new(rule.head, vec![rule.clone()])?, &augmented);
    let split = Split::standard(&planted, config.seed ^ 0x5eed_5eed);
    Ok(SyntheticDataset {
        graph,
        planted,
        rule,
        rules_text,
        split,
    })
}
