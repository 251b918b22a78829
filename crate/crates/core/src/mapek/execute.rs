//! Applying plans to the knowledge repository, and the fail-safe.

use thiserror::Error;

use crate::assurance::{
    adapt_case, CaseError, CaseNode, CasePatch, EvidenceItem, EvidenceKind, Lifecycle, NodeKind,
    SafetyCase, Verdict,
};
use crate::mapek::candidate::candidate_hash;
use crate::mapek::plan::Plan;
use crate::model::{KnowledgeRepository, ModelError, PostStep};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecuteError {
    #[error("plan carries no action")]
    NoAction,
    #[error("candidate `{0}` has no passing assessment evidence for its exact weights")]
    Unassessed(String),
    #[error("safety case has no dynamic {0} to update")]
    NoTarget(&'static str),
    #[error("post-step {0:?} needs data the plan does not carry")]
    MissingData(PostStep),
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Obligations whose dynamic solutions collect adaptation evidence.
const EVIDENCE_OBLIGATIONS: [&str; 2] = ["TII.B4", "TIII.B6"];

/// Dynamic solution collecting evidence for `obligations`: the carrier
/// itself if it is a solution, otherwise the first dynamic solution below it.
fn dynamic_solution<'a>(case: &'a SafetyCase, obligations: &[&str]) -> Option<&'a CaseNode> {
    let is_target = |n: &CaseNode| n.kind == NodeKind::Solution && n.lifecycle == Lifecycle::Dynamic;
    for carrier in case.preorder() {
        if !obligations.iter().any(|o| carrier.discharges.contains(*o)) {
            continue;
        }
        let mut stack = vec![carrier];
        while let Some(n) = stack.pop() {
            if is_target(n) {
                return Some(n);
            }
            stack.extend(n.children.iter().rev().filter_map(|c| case.node(c)));
        }
    }
    None
}

fn constraint_context(case: &SafetyCase) -> Option<&CaseNode> {
    case.nodes.values().find(|n| {
        n.kind == NodeKind::Context && n.lifecycle == Lifecycle::Dynamic && n.constraint.is_some()
    })
}

/// Applies `plan` between ticks: all or nothing.
///
/// The new configuration, case revision, active option and SPI resets are
/// committed together only after every case patch has been accepted.
pub fn execute_adaptation(
    repo: &mut KnowledgeRepository,
    plan: &Plan,
    now: f64,
) -> Result<(), ExecuteError> {
    let action = plan.action.as_ref().ok_or(ExecuteError::NoAction)?;
    if let Some(net) = &action.network {
        let hash = candidate_hash(net);
        let ok = plan.evidence.as_ref().is_some_and(|e| {
            e.kind == EvidenceKind::RuntimeAssessment && e.verdict == Verdict::Pass && e.payload_ref == hash
        });
        if !ok {
            return Err(ExecuteError::Unassessed(action.option_id.clone()));
        }
    }
    let config = action.apply(&repo.current_config);
    config.validate()?;
    let mut patches = Vec::new();
    for step in &action.post_steps {
        match step {
            PostStep::UpdateCaseConstraints => {
                let domain = plan.domain.clone().ok_or(ExecuteError::MissingData(*step))?;
                let node = constraint_context(&repo.safety_case)
                    .ok_or(ExecuteError::NoTarget("constraint context"))?;
                patches.push(CasePatch::ReplaceConstraintContext {
                    node: node.id.clone(),
                    domain,
                });
            }
            PostStep::AttachAssessmentEvidence => {
                let item = plan.evidence.clone().ok_or(ExecuteError::MissingData(*step))?;
                let node = dynamic_solution(&repo.safety_case, &EVIDENCE_OBLIGATIONS)
                    .ok_or(ExecuteError::NoTarget("evidence solution"))?;
                patches.push(CasePatch::AttachEvidence {
                    node: node.id.clone(),
                    item,
                });
            }
            PostStep::ResetSpi => {}
        }
    }
    let case = if patches.is_empty() {
        None
    } else {
        let cause = format!("adaptation to `{}`", action.option_id);
        Some(adapt_case(&repo.safety_case, &patches, now, &cause)?)
    };
    if let Some(case) = case {
        repo.safety_case = case;
    }
    repo.current_config = config;
    repo.active_option_id = action.option_id.clone();
    repo.config_epoch += 1;
    if action.post_steps.contains(&PostStep::ResetSpi) {
        for w in &mut repo.spi_windows {
            w.reset();
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailSafeOutcome {
    pub evidence: EvidenceItem,
    /// False when the baseline was already active.
    pub changed: bool,
    /// Whether the observation reached the safety case.
    pub attached: bool,
}

/// Restores the baseline configuration after an SPI breach.
///
/// The configuration change always happens; recording the observation in
/// the case is best effort and never blocks it.
pub fn fail_safe(repo: &mut KnowledgeRepository, now: f64, evidence_id: &str) -> FailSafeOutcome {
    let breached: Vec<&str> = repo
        .spi_windows
        .iter()
        .filter(|w| w.breached())
        .map(|w| w.id())
        .collect();
    let evidence = EvidenceItem::runtime(
        evidence_id,
        EvidenceKind::RuntimeObservation,
        Verdict::Pass,
        now,
        &format!(
            "fail-safe:spi={}:baseline={}",
            breached.join("+"),
            repo.baseline_option_id
        ),
    );
    let changed = repo.current_config != repo.baseline_config
        || repo.active_option_id != repo.baseline_option_id;
    if changed {
        repo.current_config = repo.baseline_config.clone();
        repo.active_option_id = repo.baseline_option_id.clone();
        repo.config_epoch += 1;
    }
    let mut attached = false;
    if let Some(node) = dynamic_solution(&repo.safety_case, &["TIII.B7"]) {
        let patch = CasePatch::AttachEvidence {
            node: node.id.clone(),
            item: evidence.clone(),
        };
        if let Ok(case) = adapt_case(&repo.safety_case, &[patch], now, "fail-safe") {
            repo.safety_case = case;
            attached = true;
        }
    }
    FailSafeOutcome {
        evidence,
        changed,
        attached,
    }
}
