//! The managing system: monitor, analyze, plan and execute over the shared
//! knowledge repository.

pub mod admission;
pub mod analyze;
pub mod candidate;
pub mod execute;
pub mod plan;

use serde::{Deserialize, Serialize};

pub use admission::{admission_test, sample_stats, AdmissionOutcome, AdmissionPolicy, AdmissionReport};
pub use analyze::{analyze_goal, AdaptationGoal, GoalAnalysis, GoalMonitor, RiseRecord};
pub use candidate::{assess_candidate, candidate_hash, propose_candidate, Assessment, AssessmentSuite, Envelope};
pub use execute::{execute_adaptation, fail_safe, ExecuteError, FailSafeOutcome};
pub use plan::{plan_type1, plan_type2, plan_type3, Plan};

use crate::assurance::{current_constraints, CaseError, EvidenceItem, Verdict};
use crate::controller::NetControllerSpec;
use crate::model::{AdaptationModel, EnvironmentSample, KnowledgeRepository, OperationalDomain, SystemConfiguration};
use crate::spi::spi_update;
use crate::taxonomy::AdaptationType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trigger {
    GoalViolation,
    SpiBreach,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub option_id: String,
    pub reason: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<String>,
}

impl Rejection {
    pub fn new(option_id: &str, reason: &str) -> Self {
        Self {
            option_id: option_id.to_string(),
            reason: reason.to_string(),
            evidence: None,
        }
    }

    pub fn with_evidence(option_id: &str, reason: &str, evidence: &str) -> Self {
        Self {
            evidence: Some(evidence.to_string()),
            ..Self::new(option_id, reason)
        }
    }
}

/// One line of the decision log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationDecision {
    pub seq: u64,
    pub time: f64,
    pub trigger: Trigger,
    pub model_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requested_option: Option<String>,
    pub chosen_option: Option<String>,
    /// Evidence justifying the chosen option; all of it passed when applied.
    pub assessment_evidence: Vec<String>,
    pub applied: bool,
    pub reason: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rejected: Vec<Rejection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admission: Option<AdmissionReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_hash: Option<String>,
}

impl AdaptationDecision {
    pub fn new(seq: u64, time: f64, trigger: Trigger, model_id: &str) -> Self {
        Self {
            seq,
            time,
            trigger,
            model_id: model_id.to_string(),
            requested_option: None,
            chosen_option: None,
            assessment_evidence: Vec::new(),
            applied: false,
            reason: String::new(),
            rejected: Vec::new(),
            admission: None,
            candidate_hash: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActivationCause {
    Adaptation,
    FailSafe,
}

/// A configuration that became active, with what justified it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Activation {
    pub time: f64,
    pub option_id: String,
    pub cause: ActivationCause,
    pub config: SystemConfiguration,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<EvidenceItem>,
}

/// Orchestrates one MAPE-K iteration per tick.
#[derive(Debug, Clone)]
pub struct ManagingSystem {
    pub repo: KnowledgeRepository,
    pub model: AdaptationModel,
    pub adaptation_type: AdaptationType,
    pub admission: AdmissionPolicy,
    pub suite: Option<AssessmentSuite>,
    pub candidates_per_plan: usize,
    pub seed: u64,
    pub decisions: Vec<AdaptationDecision>,
    pub activations: Vec<Activation>,
    /// Constraint context after each change, starting with the deployed one.
    pub constraint_history: Vec<(f64, OperationalDomain)>,
    pub spi_breaches: Vec<f64>,
    goal_monitor: GoalMonitor,
    goal_fired: bool,
    pending: Option<(Trigger, f64)>,
    seq: u64,
}

impl ManagingSystem {
    pub fn new(
        repo: KnowledgeRepository,
        model: AdaptationModel,
        adaptation_type: AdaptationType,
        goal: AdaptationGoal,
        admission: AdmissionPolicy,
        suite: Option<AssessmentSuite>,
        candidates_per_plan: usize,
        seed: u64,
    ) -> Result<Self, CaseError> {
        let constraint_history = vec![(0.0, current_constraints(&repo.safety_case)?)];
        let activations = vec![Activation {
            time: 0.0,
            option_id: repo.active_option_id.clone(),
            cause: ActivationCause::Adaptation,
            config: repo.current_config.clone(),
            evidence: None,
        }];
        Ok(Self {
            repo,
            model,
            adaptation_type,
            admission,
            suite,
            candidates_per_plan,
            seed,
            decisions: Vec::new(),
            activations,
            constraint_history,
            spi_breaches: Vec::new(),
            goal_monitor: GoalMonitor::new(goal),
            goal_fired: false,
            pending: None,
            seq: 0,
        })
    }

    /// Monitor stage: records the sample, updates the SPIs and the goal
    /// monitor.
    pub fn monitor(&mut self, sample: &EnvironmentSample) {
        self.repo.sample_history.push(*sample);
        for w in &mut self.repo.spi_windows {
            spi_update(w, sample);
        }
        self.goal_fired |= self.goal_monitor.observe(sample);
    }

    pub fn rise_records(&self) -> Vec<RiseRecord> {
        self.goal_monitor.records().cloned().collect()
    }

    fn next_decision(&mut self, now: f64, trigger: Trigger) -> AdaptationDecision {
        self.seq += 1;
        AdaptationDecision::new(self.seq, now, trigger, &self.model.id)
    }

    /// Analyze, plan and execute for the current tick.
    ///
    /// A fresh SPI breach preempts everything else: the fail-safe runs and
    /// any other trigger of this tick is logged as preempted.
    pub fn step(&mut self, now: f64, injected: &[Trigger], requests: &[String]) -> Result<(), CaseError> {
        let mut triggers: Vec<(Trigger, Option<String>)> = Vec::new();
        if let Some((t, _)) = self.pending.take() {
            triggers.push((t, None));
        }
        if std::mem::take(&mut self.goal_fired) {
            triggers.push((Trigger::GoalViolation, None));
        }
        triggers.extend(injected.iter().map(|t| (*t, None)));
        triggers.extend(requests.iter().map(|r| (Trigger::Manual, Some(r.clone()))));

        let mut breach = false;
        for w in &mut self.repo.spi_windows {
            breach |= w.take_new_breach();
        }
        if breach {
            self.spi_breaches.push(now);
            let mut decision = self.next_decision(now, Trigger::SpiBreach);
            let outcome = fail_safe(&mut self.repo, now, &format!("ev-failsafe-{}", decision.seq));
            decision.chosen_option = Some(self.repo.baseline_option_id.clone());
            decision.applied = true;
            decision.reason = if outcome.changed {
                format!("SPI breach: baseline `{}` restored", self.repo.baseline_option_id)
            } else {
                format!("SPI breach: baseline `{}` already active", self.repo.baseline_option_id)
            };
            self.decisions.push(decision);
            if outcome.changed {
                self.activations.push(Activation {
                    time: now,
                    option_id: self.repo.active_option_id.clone(),
                    cause: ActivationCause::FailSafe,
                    config: self.repo.current_config.clone(),
                    evidence: Some(outcome.evidence),
                });
            }
            for (trigger, requested) in triggers {
                let mut d = self.next_decision(now, trigger);
                d.requested_option = requested;
                d.reason = "preempted by fail-safe".into();
                self.decisions.push(d);
            }
            return Ok(());
        }

        for (trigger, requested) in triggers {
            let mut decision = self.next_decision(now, trigger);
            decision.requested_option = requested.clone();
            let plan = self.plan(decision, requested.as_deref(), now)?;
            if plan.not_ready {
                // Retry next tick; only the resolved attempt is logged.
                self.seq -= 1;
                if self.pending.is_none() {
                    self.pending = Some((trigger, now));
                }
                continue;
            }
            self.execute(plan, now);
        }
        Ok(())
    }

    fn plan(&self, decision: AdaptationDecision, requested: Option<&str>, now: f64) -> Result<Plan, CaseError> {
        let active = self.repo.active_option_id.as_str();
        Ok(match self.adaptation_type {
            AdaptationType::T0 | AdaptationType::TI => plan_type1(&self.model, active, decision, requested),
            AdaptationType::TII => {
                let window = self.repo.sample_history.since(now - self.admission.window);
                plan_type2(
                    &self.model,
                    active,
                    decision,
                    requested,
                    &window,
                    &self.admission,
                    &self.repo.safety_case,
                )?
            }
            AdaptationType::TIII => {
                let Some(suite) = &self.suite else {
                    let mut decision = decision;
                    decision.reason = "no assessment suite configured".into();
                    return Ok(Plan {
                        decision,
                        action: None,
                        evidence: None,
                        domain: None,
                        not_ready: false,
                    });
                };
                let current = self.current_network();
                plan_type3(&current, decision, requested, suite, self.candidates_per_plan, self.seed)
            }
        })
    }

    fn current_network(&self) -> NetControllerSpec {
        self.repo
            .current_config
            .network
            .clone()
            .or_else(|| self.repo.baseline_config.network.clone())
            .unwrap_or_else(|| NetControllerSpec::zeros(vec![1]))
    }

    fn execute(&mut self, plan: Plan, now: f64) {
        let mut decision = plan.decision.clone();
        if plan.action.is_some() {
            match execute_adaptation(&mut self.repo, &plan, now) {
                Ok(()) => {
                    decision.applied = true;
                    self.activations.push(Activation {
                        time: now,
                        option_id: self.repo.active_option_id.clone(),
                        cause: ActivationCause::Adaptation,
                        config: self.repo.current_config.clone(),
                        evidence: plan.evidence.clone(),
                    });
                    if let Some(domain) = &plan.domain {
                        self.constraint_history.push((now, domain.clone()));
                    }
                }
                Err(e) => {
                    decision.applied = false;
                    decision.reason = format!("{}; rolled back: {e}", decision.reason);
                }
            }
        }
        debug_assert!(
            !decision.applied
                || plan
                    .evidence
                    .as_ref()
                    .is_none_or(|e| e.verdict == Verdict::Pass)
        );
        self.decisions.push(decision);
    }
}
