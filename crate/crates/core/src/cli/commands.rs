use std::collections::BTreeMap;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::checkpoint::{read_checkpoint, write_checkpoint};
use crate::eval::{rank_sources, rankings_tsv, BeamConfig, RankMode, Split};
use crate::experiment::{prepare, score_policy, Prepared, ScoreError};
use crate::kg::{graph_stats, load_graph, write_triples, write_types, EntityId, GraphError, KnowledgeGraph};
use crate::policy::PolicyNetwork;
use crate::rules::{self, rewrite_scores, HeadPattern, RuleError, RuleFile, RuleSet};
use crate::synthetic::{self, SyntheticError, SyntheticGraphConfig};
use crate::training::{derive_seed, TrainError, Trainer};

use super::{
    data, fingerprint, read_input, tool_version, CliError, ConfidenceArgs, EvaluateArgs,
    GraphArgs, InputRecord, MakeSplitArgs, Manifest, Partition, RankArgs, RunConfig, RunDir, StatsArgs,
    SyntheticArgs, TrainArgs,
};

type Inputs = BTreeMap<String, InputRecord>;

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::InvalidConfig(m) => CliError::Config(m),
            e @ TrainError::NonFinite { .. } => CliError::Numerical(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<ScoreError> for CliError {
    fn from(e: ScoreError) -> Self {
        CliError::Data(e.to_string())
    }
}

fn load_config(path: Option<&Path>, inputs: &mut Inputs) -> Result<RunConfig, CliError> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let (bytes, rec) = read_input(path)?;
    inputs.insert("config".into(), rec);
    let text = String::from_utf8(bytes).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    RunConfig::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Loads the raw (unaugmented) graph and records both files as inputs.
fn load_base(args: &GraphArgs, inputs: &mut Inputs) -> Result<KnowledgeGraph, CliError> {
    let (triples, rt) = read_input(&args.graph)?;
    let (types, ry) = read_input(&args.types)?;
    inputs.insert("graph".into(), rt);
    inputs.insert("types".into(), ry);
    let loaded = load_graph(
        &triples[..],
        &args.graph.display().to_string(),
        &types[..],
        &args.types.display().to_string(),
    )?;
    Ok(loaded.graph)
}

fn load_split(path: Option<&Path>, kg: &KnowledgeGraph, inputs: &mut Inputs) -> Result<Split, CliError> {
    let Some(path) = path else {
        return Ok(Split::default());
    };
    let (bytes, rec) = read_input(path)?;
    inputs.insert("split".into(), rec);
    Split::read(kg, BufReader::new(&bytes[..])).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// The rule file if given, otherwise an empty set over the configured head.
/// Returns the raw text too, for score rewriting.
fn load_rules(
    path: Option<&Path>,
    augmented: &KnowledgeGraph,
    config: &RunConfig,
    inputs: &mut Inputs,
) -> Result<(RuleSet, Option<String>), CliError> {
    match path {
        Some(path) => {
            let (bytes, rec) = read_input(path)?;
            inputs.insert("rules".into(), rec);
            let text = String::from_utf8(bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            let rules = RuleFile::parse(&text)
                .and_then(|f| f.resolve(augmented))
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            Ok((rules, Some(text)))
        }
        None => {
            let v = augmented.vocab();
            let missing = |what: &str, name: &str| CliError::Data(format!("config names unknown {what} `{name}`"));
            let head = HeadPattern {
                source_type: v.type_id(&config.source_type).ok_or_else(|| missing("type", &config.source_type))?,
                relation: v
                    .relation_id(&config.head_relation)
                    .ok_or_else(|| missing("relation", &config.head_relation))?,
                target_type: v.type_id(&config.target_type).ok_or_else(|| missing("type", &config.target_type))?,
            };
            Ok((RuleSet::empty(head), None))
        }
    }
}

fn load_checkpoint(path: &Path, prepared: &Prepared, inputs: &mut Inputs) -> Result<PolicyNetwork<f32>, CliError> {
    let (bytes, rec) = read_input(path)?;
    inputs.insert("checkpoint".into(), rec);
    let hashes = prepared.graph.vocab().hashes();
    read_checkpoint::<f32, _>(&bytes[..], &hashes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn config_json(config: &RunConfig) -> serde_json::Value {
    serde_json::to_value(config).expect("config serializes")
}

fn beam_config(config: &RunConfig, mode: RankMode, rules: &RuleSet) -> BeamConfig {
    BeamConfig {
        width: config.beam_width,
        steps: config.trainer.max_path_length,
        mode,
        aggregation: config.aggregation,
        target_type: Some(rules.head().target_type),
    }
}

fn require_rules_for(mode: RankMode, rules: &RuleSet) -> Result<(), CliError> {
    if mode == RankMode::Pruned && rules.is_empty() {
        return Err(CliError::Config("pruned ranking needs a non-empty rule file".into()));
    }
    Ok(())
}

pub fn train(args: TrainArgs) -> Result<PathBuf, CliError> {
    let mut inputs = Inputs::new();
    let mut config = load_config(args.config.as_deref(), &mut inputs)?;
    if let Some(seed) = args.run.seed {
        config.trainer.seed = seed;
    }
    let base = load_base(&args.graph, &mut inputs)?;
    let split = load_split(args.split.as_deref(), &base, &mut inputs)?;
    let probe = base.clone().add_inverse_relations()?;
    let (rules, _) = load_rules(args.rules.as_deref(), &probe, &config, &mut inputs)?;
    if config.trainer.lambda > 0.0 && rules.is_empty() {
        return Err(CliError::Config("lambda > 0 needs a non-empty rule file".into()));
    }
    let prepared = prepare(&base, &split, rules.head().relation)?;
    let json = config_json(&config);
    let seed = config.trainer.seed;
    let mut dir = RunDir::create(&args.run.out, "train", &fingerprint("train", seed, &json, &inputs))?;

    let started = Instant::now();
    let mut log = String::new();
    let mut timing = String::new();
    let mut trainer: Trainer<f32> = Trainer::new(&prepared.graph, &rules, prepared.train.clone(), config.trainer.clone())?;
    for _ in 0..config.trainer.updates {
        let rec = trainer.step()?;
        log.push_str(&serde_json::to_string(&rec).expect("record serializes"));
        log.push('\n');
        timing.push_str(&format!(
            "{{\"step\":{},\"elapsed_s\":{:.3}}}\n",
            rec.step,
            started.elapsed().as_secs_f64()
        ));
    }
    let net = trainer.into_network();
    if !net.all_finite() {
        return Err(CliError::Numerical("non-finite parameters after training".into()));
    }

    let mut ckpt = Vec::new();
    write_checkpoint(&net, &prepared.graph.vocab().hashes(), &mut ckpt).map_err(data)?;
    dir.write("checkpoint.bin", &ckpt)?;
    dir.write("train_log.jsonl", log.as_bytes())?;
    dir.write("config.toml", config.to_toml().as_bytes())?;
    std::fs::write(dir.file("timing.jsonl"), timing).map_err(data)?;
    dir.record("timing.jsonl", None);
    dir.finish(Manifest {
        tool: tool_version(),
        command: "train".into(),
        seed,
        config: json,
        inputs,
        outputs: BTreeMap::new(),
        checkpoint: Some("checkpoint.bin".into()),
    })
}

pub fn evaluate(args: EvaluateArgs) -> Result<PathBuf, CliError> {
    let mut inputs = Inputs::new();
    let mut config = load_config(args.config.as_deref(), &mut inputs)?;
    if let Some(seed) = args.run.seed {
        config.trainer.seed = seed;
    }
    let base = load_base(&args.graph, &mut inputs)?;
    let split = load_split(Some(&args.split), &base, &mut inputs)?;
    let probe = base.clone().add_inverse_relations()?;
    let (rules, _) = load_rules(args.rules.as_deref(), &probe, &config, &mut inputs)?;
    require_rules_for(args.mode, &rules)?;
    let prepared = prepare(&base, &split, rules.head().relation)?;
    let net = load_checkpoint(&args.checkpoint, &prepared, &mut inputs)?;
    let (queries, partition) = match args.partition {
        Partition::Test => (&prepared.test, "test"),
        Partition::Valid => (&prepared.valid, "valid"),
    };
    if queries.is_empty() {
        return Err(CliError::Data(format!("the split has no {partition} edges for the head relation")));
    }
    let beam = beam_config(&config, args.mode, &rules);
    let (rankings, mut report) = score_policy(&prepared, &net, &rules, &beam, queries)?;

    let seed = config.trainer.seed;
    let mut json = config_json(&config);
    json["mode"] = args.mode.to_string().into();
    json["partition"] = partition.into();
    let mut dir = RunDir::create(&args.run.out, "evaluate", &fingerprint("evaluate", seed, &json, &inputs))?;
    let meta = &mut report.metadata;
    meta.insert("mode".into(), args.mode.to_string());
    meta.insert("partition".into(), partition.into());
    meta.insert("seed".into(), seed.to_string());
    meta.insert("checkpoint_sha256".into(), inputs["checkpoint"].sha256.clone());
    meta.insert("aggregation".into(), config.aggregation.to_string());
    meta.insert("beam_width".into(), config.beam_width.to_string());
    dir.write("report.txt", report.to_kv().as_bytes())?;
    dir.write("report.json", report.to_json().as_bytes())?;
    dir.write("metrics.csv", report.to_csv().as_bytes())?;
    dir.write("rankings.tsv", rankings_tsv(&prepared.graph, &rankings).as_bytes())?;
    dir.finish(Manifest {
        tool: tool_version(),
        command: "evaluate".into(),
        seed,
        config: json,
        outputs: BTreeMap::new(),
        checkpoint: Some(inputs["checkpoint"].path.clone()),
        inputs,
    })
}

pub fn rank(args: RankArgs) -> Result<PathBuf, CliError> {
    let mut inputs = Inputs::new();
    let mut config = load_config(args.config.as_deref(), &mut inputs)?;
    if let Some(seed) = args.run.seed {
        config.trainer.seed = seed;
    }
    let base = load_base(&args.graph, &mut inputs)?;
    let split = load_split(args.split.as_deref(), &base, &mut inputs)?;
    let probe = base.clone().add_inverse_relations()?;
    let (rules, _) = load_rules(args.rules.as_deref(), &probe, &config, &mut inputs)?;
    require_rules_for(args.mode, &rules)?;
    let prepared = prepare(&base, &split, rules.head().relation)?;
    let net = load_checkpoint(&args.checkpoint, &prepared, &mut inputs)?;
    let kg = &prepared.graph;
    let sources: Vec<EntityId> = if args.compounds.is_empty() {
        kg.entities_of_type(rules.head().source_type).collect()
    } else {
        let mut ids = args
            .compounds
            .iter()
            .map(|name| {
                kg.vocab()
                    .entity_id(name)
                    .ok_or_else(|| CliError::Data(format!("unknown entity `{name}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        ids.sort_unstable();
        ids.dedup();
        ids
    };
    let beam = beam_config(&config, args.mode, &rules);
    let rankings = rank_sources(kg, &net, &rules, &sources, &beam).map_err(data)?;

    let seed = config.trainer.seed;
    let mut json = config_json(&config);
    json["mode"] = args.mode.to_string().into();
    json["compounds"] = args.compounds.clone().into();
    let mut dir = RunDir::create(&args.run.out, "rank", &fingerprint("rank", seed, &json, &inputs))?;
    dir.write("rankings.tsv", rankings_tsv(kg, &rankings).as_bytes())?;
    dir.finish(Manifest {
        tool: tool_version(),
        command: "rank".into(),
        seed,
        config: json,
        outputs: BTreeMap::new(),
        checkpoint: Some(inputs["checkpoint"].path.clone()),
        inputs,
    })
}

pub fn estimate_confidence(args: ConfidenceArgs) -> Result<PathBuf, CliError> {
    let mut inputs = Inputs::new();
    let base = load_base(&args.graph, &mut inputs)?;
    let kg = base.add_inverse_relations()?;
    let config = RunConfig::default();
    let (rules, text) = load_rules(Some(&args.rules), &kg, &config, &mut inputs)?;
    let text = text.expect("rule text is present when a path is given");
    if args.samples == 0 {
        return Err(CliError::Config("--samples must be positive".into()));
    }
    let seed = args.run.seed.unwrap_or(0);
    let scores = rules
        .rules()
        .iter()
        .enumerate()
        .map(|(k, rule)| {
            rules::estimate_confidence(&kg, rule, args.samples, derive_seed(seed, k as u64, 0)).map_err(|e| match e {
                RuleError::UnrealizableBody(body) => CliError::Data(format!("rule {} has no body instance: {body}", k + 1)),
                e => CliError::Data(e.to_string()),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let out = rewrite_scores(&text, &scores).map_err(data)?;

    let json = serde_json::json!({ "samples": args.samples });
    let mut dir = RunDir::create(
        &args.run.out,
        "estimate-confidence",
        &fingerprint("estimate-confidence", seed, &json, &inputs),
    )?;
    dir.write("rules.txt", out.as_bytes())?;
    dir.finish(Manifest {
        tool: tool_version(),
        command: "estimate-confidence".into(),
        seed,
        config: json,
        inputs,
        outputs: BTreeMap::new(),
        checkpoint: None,
    })
}

pub fn generate_synthetic(args: SyntheticArgs) -> Result<PathBuf, CliError> {
    let mut inputs = Inputs::new();
    let mut config = match &args.config {
        None => SyntheticGraphConfig::default(),
        Some(path) => {
            let (bytes, rec) = read_input(path)?;
            inputs.insert("config".into(), rec);
            let text = String::from_utf8(bytes).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
    };
    if let Some(seed) = args.run.seed {
        config.seed = seed;
    }
    let ds = synthetic::generate_synthetic(&config).map_err(|e| match e {
        SyntheticError::InfeasibleConfig(m) => CliError::Config(m),
        e => CliError::Config(e.to_string()),
    })?;
    let mut triples = Vec::new();
    write_triples(&ds.graph, &mut triples).map_err(data)?;
    let mut types = Vec::new();
    write_types(&ds.graph, &mut types).map_err(data)?;
    let mut split = Vec::new();
    ds.split.write(&ds.graph, &mut split).map_err(data)?;

    let json = serde_json::to_value(&config).expect("config serializes");
    let seed = config.seed;
    let mut dir = RunDir::create(
        &args.run.out,
        "generate-synthetic",
        &fingerprint("generate-synthetic", seed, &json, &inputs),
    )?;
    dir.write("triples.tsv", &triples)?;
    dir.write("types.tsv", &types)?;
    dir.write("rules.txt", ds.rules_text.as_bytes())?;
    dir.write("split.tsv", &split)?;
    dir.finish(Manifest {
        tool: tool_version(),
        command: "generate-synthetic".into(),
        seed,
        config: json,
        inputs,
        outputs: BTreeMap::new(),
        checkpoint: None,
    })
}

pub fn stats(args: StatsArgs) -> Result<PathBuf, CliError> {
    let mut inputs = Inputs::new();
    let mut kg = load_base(&args.graph, &mut inputs)?;
    if args.augment {
        kg = kg.add_inverse_relations()?;
    }
    let text = graph_stats(&kg, &args.head_relation).to_kv();
    print!("{text}");
    let seed = args.run.seed.unwrap_or(0);
    let json = serde_json::json!({ "head_relation": args.head_relation, "augment": args.augment });
    let mut dir = RunDir::create(&args.run.out, "stats", &fingerprint("stats", seed, &json, &inputs))?;
    dir.write("stats.txt", text.as_bytes())?;
    dir.finish(Manifest {
        tool: tool_version(),
        command: "stats".into(),
        seed,
        config: json,
        inputs,
        outputs: BTreeMap::new(),
        checkpoint: None,
    })
}

pub fn make_split(args: MakeSplitArgs) -> Result<PathBuf, CliError> {
    let mut inputs = Inputs::new();
    let kg = load_base(&args.graph, &mut inputs)?;
    let rel = kg
        .vocab()
        .relation_id(&args.relation)
        .ok_or_else(|| CliError::Data(format!("unknown relation `{}`", args.relation)))?;
    let edges: Vec<_> = kg.triples().iter().filter(|t| t.relation == rel).copied().collect();
    if edges.is_empty() {
        return Err(CliError::Data(format!("no `{}` edges to split", args.relation)));
    }
    let seed = args.run.seed.unwrap_or(0);
    let split = Split::standard(&edges, seed);
    let mut out = Vec::new();
    split.write(&kg, &mut out).map_err(data)?;
    let json = serde_json::json!({ "relation": args.relation });
    let mut dir = RunDir::create(&args.run.out, "make-split", &fingerprint("make-split", seed, &json, &inputs))?;
    dir.write("split.tsv", &out)?;
    dir.finish(Manifest {
        tool: tool_version(),
        command: "make-split".into(),
        seed,
        config: json,
        inputs,
        outputs: BTreeMap::new(),
        checkpoint: None,
    })
}
