use std::collections::HashSet;
use std::fmt::Write;

use crate::kg::{InstancePath, KnowledgeGraph, RelationId, TypeId};

use super::metapath::{metapath_of, Metapath};
use super::RuleError;

/// Head triple pattern `(source type, relation, target type)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HeadPattern {
    pub source_type: TypeId,
    pub relation: RelationId,
    pub target_type: TypeId,
}

/// `head ← body` with a quality score in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub head: HeadPattern,
    pub body: Metapath,
    pub score: f64,
}

impl Rule {
    pub fn new(head: HeadPattern, body: Metapath, score: f64) -> Result<Self, RuleError> {
        if !(0.0..=1.0).contains(&score) {
            return Err(RuleError::ScoreOutOfRange { line: 0, score });
        }
        if body.source_type() != head.source_type || body.target_type() != head.target_type {
            return Err(RuleError::MalformedRule {
                line: 0,
                reason: "body must run from the head's source type to its target type".into(),
            });
        }
        Ok(Self { head, body, score })
    }
}

/// Rules sharing one head, with pairwise distinct bodies.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    head: HeadPattern,
    rules: Vec<Rule>,
}

impl RuleSet {
    pub fn new(head: HeadPattern, rules: Vec<Rule>) -> Result<Self, RuleError> {
        let mut seen = HashSet::new();
        for (i, r) in rules.iter().enumerate() {
            if r.head != head {
                return Err(RuleError::MalformedRule {
                    line: i + 1,
                    reason: "rule head differs from the rule set head".into(),
                });
            }
            if !seen.insert(&r.body) {
                return Err(RuleError::MalformedRule {
                    line: i + 1,
                    reason: "duplicate rule body".into(),
                });
            }
        }
        Ok(Self { head, rules })
    }

    pub fn empty(head: HeadPattern) -> Self {
        Self {
            head,
            rules: Vec::new(),
        }
    }

    pub fn head(&self) -> HeadPattern {
        self.head
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn max_body_len(&self) -> usize {
        self.rules.iter().map(|r| r.body.len()).max().unwrap_or(0)
    }

    /// `Σᵢ S(Mᵢ)·𝟙{metapath = Mᵢ}`.
    pub fn score_sum(&self, metapath: &Metapath) -> f64 {
        self.rules
            .iter()
            .filter(|r| &r.body == metapath)
            .map(|r| r.score)
            .sum()
    }

    pub fn any_match(&self, metapath: &Metapath) -> bool {
        self.rules.iter().any(|r| &r.body == metapath)
    }

    pub fn with_scores(&self, scores: &[f64]) -> Result<Self, RuleError> {
        assert_eq!(scores.len(), self.rules.len());
        let rules = self
            .rules
            .iter()
            .zip(scores)
            .map(|(r, &s)| Rule::new(r.head, r.body.clone(), s))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            head: self.head,
            rules,
        })
    }
}

/// Whether the metapath of `path` equals the body of `rule` exactly.
pub fn matches(kg: &KnowledgeGraph, path: &InstancePath, rule: &Rule) -> Result<bool, RuleError> {
    Ok(metapath_of(kg, path)? == rule.body)
}

/// Name-level contents of a rule file, before resolution against a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleFile {
    pub head: [String; 3],
    pub rules: Vec<RuleLine>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleLine {
    pub line: usize,
    pub score: f64,
    pub types: Vec<String>,
    pub relations: Vec<String>,
}

fn malformed(line: usize, reason: impl Into<String>) -> RuleError {
    RuleError::MalformedRule {
        line,
        reason: reason.into(),
    }
}

fn is_content(line: &str) -> bool {
    let t = line.trim();
    !t.is_empty() && !t.starts_with('#')
}

fn parse_head(line: usize, text: &str) -> Result<[String; 3], RuleError> {
    let rest = text.trim_end();
    let fields: Vec<&str> = if rest.contains('\t') {
        rest.split('\t').map(str::trim).filter(|s| !s.is_empty()).collect()
    } else {
        rest.split_whitespace().collect()
    };
    match fields.as_slice() {
        ["HEAD", s, r, t] => Ok([s.to_string(), r.to_string(), t.to_string()]),
        _ => Err(malformed(
            line,
            "expected `HEAD <SourceType> <relation> <TargetType>`",
        )),
    }
}

/// Splits `T0 -[r1]-> T1 -[r2]-> T2` into types and relations.
fn parse_body(line: usize, body: &str) -> Result<(Vec<String>, Vec<String>), RuleError> {
    let mut types = Vec::new();
    let mut relations = Vec::new();
    let mut rest = body;
    loop {
        let (ty, tail) = match rest.find("-[") {
            Some(i) => (&rest[..i], Some(&rest[i + 2..])),
            None => (rest, None),
        };
        let ty = ty.trim();
        if ty.is_empty() {
            return Err(malformed(line, "empty type in rule body"));
        }
        types.push(ty.to_owned());
        let Some(tail) = tail else { break };
        let close = tail
            .find("]->")
            .ok_or_else(|| malformed(line, "`-[` without matching `]->`"))?;
        let rel = tail[..close].trim();
        if rel.is_empty() {
            return Err(malformed(line, "empty relation in rule body"));
        }
        relations.push(rel.to_owned());
        rest = &tail[close + 3..];
    }
    if relations.is_empty() {
        return Err(malformed(line, "rule body has no relations"));
    }
    Ok((types, relations))
}

fn parse_rule_line(line: usize, text: &str) -> Result<RuleLine, RuleError> {
    let text = text.trim();
    let rest = text
        .strip_prefix("SCORE=")
        .ok_or_else(|| malformed(line, "rule line must start with `SCORE=`"))?;
    let (score_text, body) = match rest.find(char::is_whitespace) {
        Some(i) => (&rest[..i], rest[i..].trim()),
        None => (rest, ""),
    };
    let score: f64 = score_text
        .parse()
        .map_err(|_| malformed(line, format!("bad score `{score_text}`")))?;
    if !score.is_finite() {
        return Err(malformed(line, format!("bad score `{score_text}`")));
    }
    if !(0.0..=1.0).contains(&score) {
        return Err(RuleError::ScoreOutOfRange { line, score });
    }
    if body.is_empty() {
        return Err(malformed(line, "empty rule body"));
    }
    let (types, relations) = parse_body(line, body)?;
    Ok(RuleLine {
        line,
        score,
        types,
        relations,
    })
}

impl RuleFile {
    pub fn parse(text: &str) -> Result<Self, RuleError> {
        let mut head = None;
        let mut rules = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if !is_content(raw) {
                continue;
            }
            if head.is_none() {
                head = Some(parse_head(line, raw)?);
                continue;
            }
            rules.push(parse_rule_line(line, raw)?);
        }
        let head = head.ok_or_else(|| malformed(0, "missing HEAD line"))?;
        Ok(Self { head, rules })
    }

    pub fn resolve(&self, kg: &KnowledgeGraph) -> Result<RuleSet, RuleError> {
        let vocab = kg.vocab();
        let ty = |line: usize, name: &str| {
            vocab
                .type_id(name)
                .ok_or_else(|| malformed(line, format!("unknown type `{name}`")))
        };
        let rel = |line: usize, name: &str| {
            vocab
                .relation_id(name)
                .ok_or_else(|| malformed(line, format!("unknown relation `{name}`")))
        };
        let head = HeadPattern {
            source_type: ty(1, &self.head[0])?,
            relation: rel(1, &self.head[1])?,
            target_type: ty(1, &self.head[2])?,
        };
        let mut rules = Vec::with_capacity(self.rules.len());
        let mut seen = HashSet::new();
        for r in &self.rules {
            let types = r
                .types
                .iter()
                .map(|t| ty(r.line, t))
                .collect::<Result<Vec<_>, _>>()?;
            let relations = r
                .relations
                .iter()
                .map(|x| rel(r.line, x))
                .collect::<Result<Vec<_>, _>>()?;
            let body = Metapath::new(types, relations);
            let rule = Rule::new(head, body, r.score).map_err(|e| match e {
                RuleError::MalformedRule { reason, .. } => malformed(r.line, reason),
                RuleError::ScoreOutOfRange { score, .. } => {
                    RuleError::ScoreOutOfRange { line: r.line, score }
                }
                other => other,
            })?;
            if !seen.insert(rule.body.clone()) {
                return Err(malformed(r.line, "duplicate rule body"));
            }
            rules.push(rule);
        }
        RuleSet::new(head, rules)
    }
}

/// Parses a rule file and resolves names against `kg`'s vocabulary.
pub fn parse_rules(text: &str, kg: &KnowledgeGraph) -> Result<RuleSet, RuleError> {
    RuleFile::parse(text)?.resolve(kg)
}

fn head_line(kg: &KnowledgeGraph, head: &HeadPattern) -> String {
    let v = kg.vocab();
    let parts = [
        v.type_name(head.source_type).unwrap_or("?"),
        kg.relation_name(head.relation),
        v.type_name(head.target_type).unwrap_or("?"),
    ];
    let sep = if parts.iter().any(|p| p.contains(char::is_whitespace)) {
        "\t"
    } else {
        " "
    };
    format!("HEAD{sep}{}", parts.join(sep))
}

pub fn rule_line(kg: &KnowledgeGraph, rule: &Rule) -> String {
    format!("SCORE={} {}", rule.score, rule.body.display(kg))
}

pub fn serialize_rules(rules: &RuleSet, kg: &KnowledgeGraph) -> String {
    let mut s = head_line(kg, &rules.head);
    s.push('\n');
    for r in &rules.rules {
        let _ = writeln!(s, "{}", rule_line(kg, r));
    }
    s
}

/// Rewrites the `SCORE=` field of every rule line in `text`, keeping comments,
/// the head line and rule order intact.
pub fn rewrite_scores(text: &str, scores: &[f64]) -> Result<String, RuleError> {
    let mut out = String::with_capacity(text.len());
    let mut seen_head = false;
    let mut k = 0;
    for (i, raw) in text.lines().enumerate() {
        if is_content(raw) {
            if !seen_head {
                seen_head = true;
            } else {
                parse_rule_line(i + 1, raw)?;
                let score = *scores
                    .get(k)
                    .ok_or_else(|| malformed(i + 1, "more rule lines than scores"))?;
                if !(0.0..=1.0).contains(&score) {
                    return Err(RuleError::ScoreOutOfRange { line: i + 1, score });
                }
                let rest = raw.trim().strip_prefix("SCORE=").expect("checked by parse");
                let body = &rest[rest.find(char::is_whitespace).unwrap_or(rest.len())..];
                let _ = writeln!(out, "SCORE={score}{body}");
                k += 1;
                continue;
            }
        }
        out.push_str(raw);
        out.push('\n');
    }
    if k != scores.len() {
        return Err(malformed(0, "fewer rule lines than scores"));
    }
    Ok(out)
}
