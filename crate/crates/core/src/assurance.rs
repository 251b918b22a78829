//! Explicit safety cases in a GSN subset.
//!
//! A case is a tree of goals, strategies, solutions, contexts and assumptions.
//! Static nodes are frozen at design time; dynamic nodes are adapted at run
//! time through [`adapt_case`], which bumps the revision and appends a
//! snapshot. Validity is strict conjunction: a goal holds only if every child
//! holds.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::model::{KnowledgeRepository, ModelError, OperationalDomain};

/// Default freshness window for run-time evidence, s.
pub const DEFAULT_RUNTIME_FRESHNESS: f64 = 3600.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CaseError {
    #[error("case root `{0}` is missing")]
    MissingRoot(String),
    #[error("case root `{0}` must be a goal")]
    RootNotGoal(String),
    #[error("node `{parent}` references missing child `{child}`")]
    DanglingChild { parent: String, child: String },
    #[error("node `{node}` references missing evidence `{evidence}`")]
    DanglingEvidence { node: String, evidence: String },
    #[error("node `{0}` has more than one parent")]
    SharedNode(String),
    #[error("node `{0}` is not reachable from the root")]
    Unreachable(String),
    #[error("node id `{key}` does not match its key `{id}`")]
    KeyMismatch { key: String, id: String },
    #[error("node `{0}`: {1}")]
    Malformed(String, String),
    #[error("static node `{0}` cannot be modified")]
    Immutable(String),
    #[error("patch target `{0}` does not exist")]
    UnknownTarget(String),
    #[error("id `{0}` already exists")]
    DuplicateId(String),
    #[error("multiple active constraint contexts: {}", .0.join(", "))]
    MultipleConstraintContexts(Vec<String>),
    #[error("evidence `{0}`: {1}")]
    BadEvidence(String, String),
    #[error(transparent)]
    Domain(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Goal,
    Strategy,
    Solution,
    Context,
    Assumption,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lifecycle {
    Static,
    Dynamic,
}

/// Named run-time checks a dynamic context or assumption can bind to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Predicate {
    /// Latest environment sample lies inside the node's constraint.
    SamplesWithinConstraint,
    /// The independent safety monitor is armed.
    GuardEnabled,
    /// No safety performance indicator is in breach.
    SpiNominal,
    Always,
}

/// Run-time facts the validity evaluation reads.
pub trait Observations {
    fn within(&self, domain: &OperationalDomain) -> bool;
    fn guard_enabled(&self) -> bool;
    fn spi_nominal(&self) -> bool;
}

impl Observations for KnowledgeRepository {
    fn within(&self, domain: &OperationalDomain) -> bool {
        self.latest_sample().is_none_or(|s| domain.contains_sample(s))
    }

    fn guard_enabled(&self) -> bool {
        self.guard.enabled
    }

    fn spi_nominal(&self) -> bool {
        !self.spi_breached()
    }
}

/// Design-time view: nothing has been observed and nothing is in breach.
#[derive(Debug, Clone, Copy, Default)]
pub struct DesignTime {
    pub guard_enabled: bool,
}

impl Observations for DesignTime {
    fn within(&self, _: &OperationalDomain) -> bool {
        true
    }

    fn guard_enabled(&self) -> bool {
        self.guard_enabled
    }

    fn spi_nominal(&self) -> bool {
        true
    }
}

impl Predicate {
    fn eval(self, node: &CaseNode, obs: &dyn Observations) -> bool {
        match self {
            Predicate::SamplesWithinConstraint => {
                node.constraint.as_ref().is_none_or(|d| obs.within(d))
            }
            Predicate::GuardEnabled => obs.guard_enabled(),
            Predicate::SpiNominal => obs.spi_nominal(),
            Predicate::Always => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseNode {
    pub id: String,
    pub kind: NodeKind,
    #[serde(default)]
    pub text: String,
    pub lifecycle: Lifecycle,
    #[serde(default)]
    pub children: Vec<String>,
    /// Obligation ids this node argues, e.g. `TII.B4`.
    #[serde(default)]
    pub discharges: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<OperationalDomain>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicate: Option<Predicate>,
    #[serde(default)]
    pub evidence: Vec<String>,
}

impl CaseNode {
    pub fn new(id: &str, kind: NodeKind, lifecycle: Lifecycle, text: &str) -> Self {
        Self {
            id: id.to_string(),
            kind,
            text: text.to_string(),
            lifecycle,
            children: Vec::new(),
            discharges: BTreeSet::new(),
            constraint: None,
            predicate: None,
            evidence: Vec::new(),
        }
    }

    pub fn with_children(mut self, children: &[&str]) -> Self {
        self.children = children.iter().map(|c| c.to_string()).collect();
        self
    }

    pub fn discharging(mut self, obligations: &[&str]) -> Self {
        self.discharges = obligations.iter().map(|o| o.to_string()).collect();
        self
    }

    pub fn with_evidence(mut self, ids: &[&str]) -> Self {
        self.evidence = ids.iter().map(|e| e.to_string()).collect();
        self
    }

    pub fn with_constraint(mut self, domain: OperationalDomain) -> Self {
        self.constraint = Some(domain);
        self
    }

    pub fn with_predicate(mut self, predicate: Predicate) -> Self {
        self.predicate = Some(predicate);
        self
    }

    fn is_argument(&self) -> bool {
        matches!(self.kind, NodeKind::Goal | NodeKind::Strategy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvidenceKind {
    DesignAnalysis,
    DesignSimulation,
    RuntimeObservation,
    RuntimeAssessment,
}

impl EvidenceKind {
    pub fn is_runtime(self) -> bool {
        matches!(
            self,
            EvidenceKind::RuntimeObservation | EvidenceKind::RuntimeAssessment
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
}

/// How long evidence stays valid after it was produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Freshness {
    Seconds(f64),
    Unlimited,
}

impl Serialize for Freshness {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Freshness::Seconds(v) => s.serialize_f64(*v),
            Freshness::Unlimited => s.serialize_str("unlimited"),
        }
    }
}

impl<'de> Deserialize<'de> for Freshness {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Seconds(f64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Seconds(v) => Ok(Freshness::Seconds(v)),
            Raw::Word(w) if w == "unlimited" => Ok(Freshness::Unlimited),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "freshness must be seconds or \"unlimited\", got {w:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceItem {
    pub id: String,
    pub kind: EvidenceKind,
    pub verdict: Verdict,
    pub produced_at: f64,
    pub freshness: Freshness,
    #[serde(default)]
    pub payload_ref: String,
}

impl EvidenceItem {
    pub fn design(id: &str, kind: EvidenceKind, payload_ref: &str) -> Self {
        Self {
            id: id.to_string(),
            kind,
            verdict: Verdict::Pass,
            produced_at: 0.0,
            freshness: Freshness::Unlimited,
            payload_ref: payload_ref.to_string(),
        }
    }

    pub fn runtime(id: &str, kind: EvidenceKind, verdict: Verdict, at: f64, payload_ref: &str) -> Self {
        Self {
            id: id.to_string(),
            kind,
            verdict,
            produced_at: at,
            freshness: Freshness::Seconds(DEFAULT_RUNTIME_FRESHNESS),
            payload_ref: payload_ref.to_string(),
        }
    }

    pub fn validate(&self) -> Result<(), CaseError> {
        match (self.kind.is_runtime(), self.freshness) {
            (true, Freshness::Seconds(s)) if s.is_finite() && s >= 0.0 => Ok(()),
            (true, _) => Err(CaseError::BadEvidence(
                self.id.clone(),
                "run-time evidence needs a finite freshness".into(),
            )),
            (false, Freshness::Unlimited) => Ok(()),
            (false, _) => Err(CaseError::BadEvidence(
                self.id.clone(),
                "design-time evidence has unlimited freshness".into(),
            )),
        }
    }

    pub fn is_fresh(&self, now: f64) -> bool {
        match self.freshness {
            Freshness::Unlimited => true,
            Freshness::Seconds(window) => now - self.produced_at <= window,
        }
    }

    pub fn supports(&self, now: f64) -> bool {
        self.verdict == Verdict::Pass && self.is_fresh(now)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub revision: u64,
    pub time: f64,
    pub cause: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyCase {
    pub root: String,
    #[serde(default)]
    pub revision: u64,
    pub nodes: BTreeMap<String, CaseNode>,
    #[serde(default)]
    pub evidence: BTreeMap<String, EvidenceItem>,
    #[serde(default)]
    pub snapshots: Vec<Snapshot>,
}

impl SafetyCase {
    pub fn new(root: &str, nodes: Vec<CaseNode>, evidence: Vec<EvidenceItem>) -> Self {
        Self {
            root: root.to_string(),
            revision: 0,
            nodes: nodes.into_iter().map(|n| (n.id.clone(), n)).collect(),
            evidence: evidence.into_iter().map(|e| (e.id.clone(), e)).collect(),
            snapshots: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("case serializes")
    }

    pub fn node(&self, id: &str) -> Option<&CaseNode> {
        self.nodes.get(id)
    }

    pub fn is_fully_static(&self) -> bool {
        self.nodes.values().all(|n| n.lifecycle == Lifecycle::Static)
    }

    /// Structural checks: one root goal, a tree, leaves where GSN wants them.
    pub fn validate(&self) -> Result<(), CaseError> {
        let root = self
            .nodes
            .get(&self.root)
            .ok_or_else(|| CaseError::MissingRoot(self.root.clone()))?;
        if root.kind != NodeKind::Goal {
            return Err(CaseError::RootNotGoal(self.root.clone()));
        }
        let mut parents: BTreeMap<&str, &str> = BTreeMap::new();
        for (key, node) in &self.nodes {
            if key != &node.id {
                return Err(CaseError::KeyMismatch {
                    key: key.clone(),
                    id: node.id.clone(),
                });
            }
            for child in &node.children {
                if !self.nodes.contains_key(child) {
                    return Err(CaseError::DanglingChild {
                        parent: node.id.clone(),
                        child: child.clone(),
                    });
                }
                if child == &self.root || parents.insert(child, &node.id).is_some() {
                    return Err(CaseError::SharedNode(child.clone()));
                }
            }
            self.validate_node(node)?;
        }
        // Single parent per node plus reachability from the root makes a tree.
        let mut seen = BTreeSet::new();
        let mut stack = vec![self.root.as_str()];
        while let Some(id) = stack.pop() {
            if seen.insert(id) {
                stack.extend(self.nodes[id].children.iter().map(String::as_str));
            }
        }
        if let Some(orphan) = self.nodes.keys().find(|k| !seen.contains(k.as_str())) {
            return Err(CaseError::Unreachable(orphan.clone()));
        }
        for item in self.evidence.values() {
            item.validate()?;
        }
        Ok(())
    }

    fn validate_node(&self, node: &CaseNode) -> Result<(), CaseError> {
        let bad = |msg: &str| Err(CaseError::Malformed(node.id.clone(), msg.to_string()));
        match node.kind {
            NodeKind::Solution if !node.children.is_empty() => return bad("solutions are leaves"),
            NodeKind::Context | NodeKind::Assumption if !node.children.is_empty() => {
                return bad("contexts and assumptions are leaves")
            }
            _ => {}
        }
        if node.constraint.is_some() && node.kind != NodeKind::Context {
            return bad("only context nodes carry constraints");
        }
        if node.predicate.is_some() && node.lifecycle != Lifecycle::Dynamic {
            return bad("only dynamic nodes carry predicates");
        }
        if !node.evidence.is_empty() && node.kind != NodeKind::Solution {
            return bad("only solutions carry evidence");
        }
        if let Some(domain) = &node.constraint {
            domain.validate_variables()?;
        }
        for ev in &node.evidence {
            if !self.evidence.contains_key(ev) {
                return Err(CaseError::DanglingEvidence {
                    node: node.id.clone(),
                    evidence: ev.clone(),
                });
            }
        }
        Ok(())
    }

    /// Nodes in depth-first order from the root.
    pub fn preorder(&self) -> Vec<&CaseNode> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root.as_str()];
        while let Some(id) = stack.pop() {
            if let Some(node) = self.nodes.get(id) {
                out.push(node);
                stack.extend(node.children.iter().rev().map(String::as_str));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Validity {
    pub valid: bool,
    /// Unsupported nodes whose failure is local rather than inherited from a
    /// child, in depth-first order.
    pub failing_nodes: Vec<String>,
    pub supported: BTreeSet<String>,
}

fn intrinsic_support(
    case: &SafetyCase,
    node: &CaseNode,
    now: f64,
    obs: &dyn Observations,
) -> bool {
    match node.kind {
        NodeKind::Solution => {
            !node.evidence.is_empty()
                && node
                    .evidence
                    .iter()
                    .all(|id| case.evidence.get(id).is_some_and(|e| e.supports(now)))
        }
        NodeKind::Context | NodeKind::Assumption => match node.lifecycle {
            Lifecycle::Static => true,
            Lifecycle::Dynamic => {
                let predicate = node.predicate.unwrap_or(if node.constraint.is_some() {
                    Predicate::SamplesWithinConstraint
                } else {
                    Predicate::Always
                });
                let in_domain = node.constraint.as_ref().is_none_or(|d| obs.within(d));
                in_domain && predicate.eval(node, obs)
            }
        },
        NodeKind::Goal | NodeKind::Strategy => !node.children.is_empty(),
    }
}

/// Evaluates every node bottom-up and reports whether the root is supported.
pub fn evaluate_validity(
    case: &SafetyCase,
    now: f64,
    knowledge: &dyn Observations,
) -> Result<Validity, CaseError> {
    case.validate()?;
    let order = case.preorder();
    let mut supported = BTreeSet::new();
    let mut local_failure = BTreeSet::new();
    for node in order.iter().rev() {
        let own = intrinsic_support(case, node, now, knowledge);
        let children_ok = node
            .children
            .iter()
            .all(|c| supported.contains(c.as_str()));
        if own && children_ok {
            supported.insert(node.id.clone());
        } else if !own {
            local_failure.insert(node.id.as_str());
        }
    }
    let failing_nodes = order
        .iter()
        .filter(|n| local_failure.contains(n.id.as_str()))
        .map(|n| n.id.clone())
        .collect();
    Ok(Validity {
        valid: supported.contains(&case.root),
        failing_nodes,
        supported,
    })
}

/// One run-time change to the dynamic part of a case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum CasePatch {
    /// Attach evidence to a dynamic solution. Evidence of the same kind
    /// already on the node is superseded.
    AttachEvidence { node: String, item: EvidenceItem },
    ReplaceConstraintContext {
        node: String,
        domain: OperationalDomain,
    },
    /// Adds a subtree of dynamic nodes; the first node hangs under `parent`.
    AddDynamicSubtree { parent: String, nodes: Vec<CaseNode> },
}

fn dynamic_target<'a>(case: &'a mut SafetyCase, id: &str) -> Result<&'a mut CaseNode, CaseError> {
    let node = case
        .nodes
        .get_mut(id)
        .ok_or_else(|| CaseError::UnknownTarget(id.to_string()))?;
    if node.lifecycle == Lifecycle::Static {
        return Err(CaseError::Immutable(id.to_string()));
    }
    Ok(node)
}

fn apply_patch(case: &mut SafetyCase, patch: &CasePatch) -> Result<(), CaseError> {
    match patch {
        CasePatch::AttachEvidence { node, item } => {
            item.validate()?;
            if case.evidence.contains_key(&item.id) {
                return Err(CaseError::DuplicateId(item.id.clone()));
            }
            let kinds: BTreeMap<String, EvidenceKind> = case
                .evidence
                .iter()
                .map(|(k, v)| (k.clone(), v.kind))
                .collect();
            let target = dynamic_target(case, node)?;
            if target.kind != NodeKind::Solution {
                return Err(CaseError::Malformed(
                    node.clone(),
                    "evidence attaches to solutions only".into(),
                ));
            }
            target.evidence.retain(|id| kinds.get(id) != Some(&item.kind));
            target.evidence.push(item.id.clone());
            case.evidence.insert(item.id.clone(), item.clone());
        }
        CasePatch::ReplaceConstraintContext { node, domain } => {
            domain.validate_variables()?;
            let target = dynamic_target(case, node)?;
            if target.kind != NodeKind::Context {
                return Err(CaseError::Malformed(
                    node.clone(),
                    "constraints live on context nodes".into(),
                ));
            }
            target.constraint = Some(domain.clone());
        }
        CasePatch::AddDynamicSubtree { parent, nodes } => {
            let Some(first) = nodes.first() else {
                return Ok(());
            };
            for n in nodes {
                if n.lifecycle != Lifecycle::Dynamic {
                    return Err(CaseError::Immutable(n.id.clone()));
                }
                if case.nodes.contains_key(&n.id) {
                    return Err(CaseError::DuplicateId(n.id.clone()));
                }
            }
            let first_id = first.id.clone();
            let target = dynamic_target(case, parent)?;
            if !target.is_argument() {
                return Err(CaseError::Malformed(
                    parent.clone(),
                    "subtrees hang under goals or strategies".into(),
                ));
            }
            target.children.push(first_id);
            for n in nodes {
                case.nodes.insert(n.id.clone(), n.clone());
            }
        }
    }
    Ok(())
}

/// Applies `patches` in order to a copy of `case`.
///
/// On success the copy has `revision + 1` and a new snapshot. On any error
/// nothing is applied.
pub fn adapt_case(
    case: &SafetyCase,
    patches: &[CasePatch],
    now: f64,
    cause: &str,
) -> Result<SafetyCase, CaseError> {
    let mut next = case.clone();
    for patch in patches {
        apply_patch(&mut next, patch)?;
    }
    next.validate()?;
    next.revision += 1;
    next.snapshots.push(Snapshot {
        revision: next.revision,
        time: now,
        cause: cause.to_string(),
    });
    Ok(next)
}

/// Domain of the single constraint context, or unbounded if there is none.
pub fn current_constraints(case: &SafetyCase) -> Result<OperationalDomain, CaseError> {
    let contexts: Vec<&CaseNode> = case
        .nodes
        .values()
        .filter(|n| n.kind == NodeKind::Context && n.constraint.is_some())
        .collect();
    match contexts.as_slice() {
        [] => Ok(OperationalDomain::unbounded()),
        [one] => Ok(one.constraint.clone().unwrap_or_default()),
        many => Err(CaseError::MultipleConstraintContexts(
            many.iter().map(|n| n.id.clone()).collect(),
        )),
    }
}

/// Indented plain-text rendering for review.
pub fn render_tree(case: &SafetyCase, validity: Option<&Validity>) -> String {
    fn walk(
        case: &SafetyCase,
        id: &str,
        depth: usize,
        validity: Option<&Validity>,
        out: &mut String,
    ) {
        let Some(node) = case.nodes.get(id) else {
            return;
        };
        let mark = match validity {
            Some(v) if v.supported.contains(id) => "[ok] ",
            Some(_) => "[!!] ",
            None => "",
        };
        let kind = match node.kind {
            NodeKind::Goal => "G",
            NodeKind::Strategy => "S",
            NodeKind::Solution => "Sn",
            NodeKind::Context => "C",
            NodeKind::Assumption => "A",
        };
        let life = match node.lifecycle {
            Lifecycle::Static => "static",
            Lifecycle::Dynamic => "dynamic",
        };
        let _ = write!(out, "{}{}{} {} ({}) {}", "  ".repeat(depth), mark, kind, node.id, life, node.text);
        if !node.discharges.is_empty() {
            let tags: Vec<&str> = node.discharges.iter().map(String::as_str).collect();
            let _ = write!(out, " {{{}}}", tags.join(", "));
        }
        if let Some(domain) = &node.constraint {
            let axes: Vec<String> = domain
                .bounds
                .iter()
                .map(|(k, iv)| {
                    let lo = iv.low.map_or("-inf".to_string(), |v| v.to_string());
                    let hi = iv.high.map_or("inf".to_string(), |v| v.to_string());
                    format!("{k} in [{lo}, {hi}]")
                })
                .collect();
            let _ = write!(out, " <{}>", axes.join("; "));
        }
        for ev in &node.evidence {
            if let Some(item) = case.evidence.get(ev) {
                let _ = write!(out, " #{}:{:?}", item.id, item.verdict);
            }
        }
        out.push('\n');
        for child in &node.children {
            walk(case, child, depth + 1, validity, out);
        }
    }
    let mut out = format!("safety case rev {}\n", case.revision);
    walk(case, &case.root, 0, validity, &mut out);
    out
}
