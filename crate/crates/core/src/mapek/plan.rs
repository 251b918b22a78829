//! Per-type planning policies.

use std::cmp::Ordering;

use crate::assurance::{current_constraints, CaseError, EvidenceItem, EvidenceKind, SafetyCase, Verdict};
use crate::controller::NetControllerSpec;
use crate::mapek::admission::{admission_test, AdmissionOutcome, AdmissionPolicy};
use crate::mapek::candidate::{assess_candidate, propose_candidate, AssessmentSuite};
use crate::mapek::{AdaptationDecision, Rejection};
use crate::model::{
    domain_subset, AdaptationAction, AdaptationModel, AdaptationOption, EnvironmentSample,
    OperationalDomain, PostStep,
};

/// A decision plus what the executor needs to carry it out.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub decision: AdaptationDecision,
    pub action: Option<AdaptationAction>,
    /// Evidence justifying the action, attached to the case on execution.
    pub evidence: Option<EvidenceItem>,
    /// Constraint context installed on execution (Type II).
    pub domain: Option<OperationalDomain>,
    /// Not enough data to decide; the trigger should be retried.
    pub not_ready: bool,
}

impl Plan {
    fn refuse(decision: AdaptationDecision) -> Self {
        Self {
            decision,
            action: None,
            evidence: None,
            domain: None,
            not_ready: false,
        }
    }
}

/// Orders ids so that digit runs compare numerically ("opt-2" < "opt-10").
pub fn id_order(a: &str, b: &str) -> Ordering {
    fn key(s: &str) -> Vec<(bool, u64, String)> {
        let mut out = Vec::new();
        let mut chars = s.chars().peekable();
        while let Some(&c) = chars.peek() {
            let digit = c.is_ascii_digit();
            let mut run = String::new();
            while let Some(&d) = chars.peek() {
                if d.is_ascii_digit() != digit {
                    break;
                }
                run.push(d);
                chars.next();
            }
            let n = if digit { run.parse().unwrap_or(u64::MAX) } else { 0 };
            out.push((digit, n, if digit { String::new() } else { run }));
        }
        out
    }
    key(a).cmp(&key(b)).then_with(|| a.cmp(b))
}

fn rise(option: &AdaptationOption) -> f64 {
    option.design_rise_time.unwrap_or(f64::INFINITY)
}

/// Enumerated options strictly faster than the active one, best first:
/// smallest design rise time, ties by lowest id.
pub fn ranked_improvements<'a>(model: &'a AdaptationModel, active: &str) -> Vec<&'a AdaptationOption> {
    let options = model.options.as_deref().unwrap_or_default();
    let current = options.iter().find(|o| o.id == active).map_or(f64::INFINITY, rise);
    let mut better: Vec<&AdaptationOption> = options
        .iter()
        .filter(|o| o.id != active && rise(o) < current)
        .collect();
    better.sort_by(|a, b| rise(a).total_cmp(&rise(b)).then_with(|| id_order(&a.id, &b.id)));
    better
}

fn rogue(decision: &mut AdaptationDecision, model: &AdaptationModel, requested: &str) {
    let n = model.options.as_ref().map_or(0, Vec::len);
    decision.rejected.push(Rejection::new(
        requested,
        &format!("not one of the {n} options enumerated at design time (TI.B1)"),
    ));
    decision.reason = format!("refused `{requested}`: not an enumerated option");
}

/// Closed-set policy used for Type 0 and Type I models.
pub fn plan_type1(
    model: &AdaptationModel,
    active: &str,
    mut decision: AdaptationDecision,
    requested: Option<&str>,
) -> Plan {
    let chosen = match requested {
        Some(id) => match model.option(id) {
            None => {
                rogue(&mut decision, model, id);
                return Plan::refuse(decision);
            }
            Some(o) if o.id == active => {
                decision.reason = format!("`{id}` is already active");
                return Plan::refuse(decision);
            }
            Some(o) => o,
        },
        None => match ranked_improvements(model, active).first() {
            Some(o) => *o,
            None => {
                decision.reason = "no enumerated option is faster than the active one".into();
                return Plan::refuse(decision);
            }
        },
    };
    decision.chosen_option = Some(chosen.id.clone());
    decision.reason = format!("selected enumerated option `{}`", chosen.id);
    Plan {
        decision,
        action: Some(AdaptationAction::for_option(chosen, Vec::new())),
        evidence: None,
        domain: None,
        not_ready: false,
    }
}

/// Constrained policy: the option's domain must narrow the current
/// constraints and the observed environment must be admitted into it.
///
/// `window` holds the most recent samples, oldest first.
pub fn plan_type2(
    model: &AdaptationModel,
    active: &str,
    mut decision: AdaptationDecision,
    requested: Option<&str>,
    window: &[EnvironmentSample],
    policy: &AdmissionPolicy,
    case: &SafetyCase,
) -> Result<Plan, CaseError> {
    let current = current_constraints(case)?;
    let candidates: Vec<&AdaptationOption> = match requested {
        Some(id) => match model.option(id) {
            None => {
                rogue(&mut decision, model, id);
                return Ok(Plan::refuse(decision));
            }
            Some(o) if o.id == active => {
                decision.reason = format!("`{id}` is already active");
                return Ok(Plan::refuse(decision));
            }
            Some(o) => vec![o],
        },
        None => ranked_improvements(model, active),
    };
    if candidates.is_empty() {
        decision.reason = "no enumerated option is faster than the active one".into();
        return Ok(Plan::refuse(decision));
    }
    for option in candidates {
        let domain = option.domain.clone().unwrap_or_default();
        if !domain_subset(&domain, &current)? {
            decision.rejected.push(Rejection::new(
                &option.id,
                "domain does not narrow the current operational constraints (TII.C5)",
            ));
            continue;
        }
        match admission_test(window, &domain, policy) {
            AdmissionOutcome::NotReady { samples, span } => {
                decision.reason = format!("admission not ready: {samples} samples over {span:.1} s");
                return Ok(Plan {
                    not_ready: true,
                    ..Plan::refuse(decision)
                });
            }
            AdmissionOutcome::Evaluated(report) => {
                let admit = report.admit;
                if !admit {
                    let failed: Vec<&str> = report
                        .variables
                        .iter()
                        .filter(|v| !v.pass)
                        .map(|v| v.variable.as_str())
                        .collect();
                    decision.rejected.push(Rejection::new(
                        &option.id,
                        &format!("admission rejected on {}", failed.join(", ")),
                    ));
                    decision.admission = Some(report);
                    continue;
                }
                let evidence = EvidenceItem::runtime(
                    &format!("ev-admission-{}", decision.seq),
                    EvidenceKind::RuntimeObservation,
                    Verdict::Pass,
                    decision.time,
                    &format!(
                        "admission:{}:n={}:[{:.1},{:.1}]",
                        option.id, report.n, report.window_start, report.window_end
                    ),
                );
                decision.assessment_evidence.push(evidence.id.clone());
                decision.admission = Some(report);
                decision.chosen_option = Some(option.id.clone());
                decision.reason = format!("`{}` admitted for the observed environment", option.id);
                return Ok(Plan {
                    decision,
                    action: Some(AdaptationAction::for_option(
                        option,
                        vec![PostStep::UpdateCaseConstraints, PostStep::AttachAssessmentEvidence],
                    )),
                    evidence: Some(evidence),
                    domain: Some(domain),
                    not_ready: false,
                });
            }
        }
    }
    decision.reason = "no candidate option passed the monotonicity and admission checks".into();
    Ok(Plan::refuse(decision))
}

/// Seed for the `index`-th proposal of decision `seq`.
pub fn proposal_seed(run_seed: u64, seq: u64, index: u64) -> u64 {
    // SplitMix64 finalizer over the combined inputs.
    let mut z = run_seed
        .wrapping_add(seq.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Dynamic policy: propose `count` candidates from `current`, assess each
/// and select the passing one with the fastest worst-case rise.
pub fn plan_type3(
    current: &NetControllerSpec,
    mut decision: AdaptationDecision,
    requested: Option<&str>,
    suite: &AssessmentSuite,
    count: usize,
    run_seed: u64,
) -> Plan {
    if let Some(id) = requested {
        decision.rejected.push(Rejection::new(
            id,
            "options are synthesized and assessed at run time; named requests are not applied",
        ));
        decision.reason = format!("refused `{id}`");
        return Plan::refuse(decision);
    }
    let mut best: Option<(f64, String, NetControllerSpec, EvidenceItem)> = None;
    for i in 0..count {
        let candidate = propose_candidate(current, proposal_seed(run_seed, decision.seq, i as u64));
        let assessment = assess_candidate(&candidate, suite);
        let id = format!("cand-{}-{}", decision.seq, i);
        let evidence = assessment.evidence(&format!("ev-assess-{}-{}", decision.seq, i), decision.time);
        if assessment.verdict == Verdict::Pass {
            if best.as_ref().is_none_or(|b| assessment.worst_rise < b.0) {
                if let Some((_, old_id, _, old_ev)) = best.take() {
                    decision.rejected.push(Rejection::with_evidence(&old_id, "slower than another passing candidate", &old_ev.id));
                }
                best = Some((assessment.worst_rise, id, candidate, evidence));
            } else {
                decision.rejected.push(Rejection::with_evidence(&id, "slower than another passing candidate", &evidence.id));
            }
        } else {
            decision.rejected.push(Rejection::with_evidence(&id, "assessment failed", &evidence.id));
        }
    }
    let Some((worst, id, candidate, evidence)) = best else {
        decision.reason = format!("none of {count} candidates passed assessment");
        return Plan::refuse(decision);
    };
    decision.chosen_option = Some(id.clone());
    decision.candidate_hash = Some(evidence.payload_ref.clone());
    decision.assessment_evidence.push(evidence.id.clone());
    decision.reason = format!("`{id}` passed assessment, worst-case rise {worst:.1} s");
    Plan {
        decision,
        action: Some(AdaptationAction::for_network(
            &id,
            candidate,
            vec![PostStep::AttachAssessmentEvidence, PostStep::ResetSpi],
        )),
        evidence: Some(evidence),
        domain: None,
        not_ready: false,
    }
}
