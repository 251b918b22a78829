//! The full closed loop: managed system plus managing system, one scenario.

use serde::{Deserialize, Serialize};

use crate::assurance::{evaluate_validity, EvidenceKind, Verdict};
use crate::harness::managed::ManagedSystem;
use crate::harness::scenario::{EnvironmentSource, Scenario};
use crate::harness::system::SystemDescription;
use crate::harness::HarnessError;
use crate::mapek::{
    candidate_hash, Activation, ActivationCause, AdaptationDecision, ManagingSystem, RiseRecord, Trigger,
};
use crate::model::{domain_subset, KnowledgeRepository, OperationalDomain};
use crate::plant::{PlantParams, HAZARD_TEMP};
use crate::spi::SpiWindow;
use crate::taxonomy::{verdict_for, AdaptationType, TaxonomyVerdict};

/// One CSV row; see [`crate::harness::TRACE_HEADER`].
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub inflow_temp: f64,
    pub inflow_rate: f64,
    pub setpoint: f64,
    pub outflow_temp: f64,
    pub power: f64,
    pub valve_open: bool,
    pub active_option: String,
    pub hazard_accum: f64,
    pub hazard_count: u64,
    pub guard_tripped: bool,
    pub spi_near_limit: bool,
    pub case_revision: u64,
    pub case_valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityPoint {
    pub time: f64,
    pub revision: u64,
    pub valid: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failing_nodes: Vec<String>,
}

/// Behavioural criterion checked over the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeCriterion {
    pub id: String,
    pub holds: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiSummary {
    pub id: String,
    pub accumulated_at_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario_id: String,
    pub system_id: String,
    pub seed: u64,
    pub adaptation_type: AdaptationType,
    pub ticks: u64,
    pub hazard_count: u64,
    pub guard_trips: u64,
    pub first_over_limit: Option<f64>,
    pub first_guard_trip: Option<f64>,
    pub max_outflow: Option<f64>,
    pub decisions: Vec<AdaptationDecision>,
    pub activations: Vec<Activation>,
    pub rise_times: Vec<RiseRecord>,
    pub spi_breaches: Vec<f64>,
    pub spi: Vec<SpiSummary>,
    pub constraint_history: Vec<(f64, OperationalDomain)>,
    pub taxonomy: Vec<TaxonomyVerdict>,
    pub validity_timeline: Vec<ValidityPoint>,
    pub runtime_criteria: Vec<RuntimeCriterion>,
    pub final_case_revision: u64,
}

impl RunReport {
    /// Exit code 3 when any hazard occurred, an obligation is undischarged
    /// or a runtime criterion failed.
    pub fn exit_code(&self) -> i32 {
        let clean = self.hazard_count == 0
            && self.taxonomy.iter().all(TaxonomyVerdict::all_discharged)
            && self.runtime_criteria.iter().all(|c| c.holds);
        if clean {
            0
        } else {
            3
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: Vec<TraceRow>,
    pub report: RunReport,
    /// Managing-system state at the end of the run.
    pub managing: ManagingSystem,
}

/// Validates, then runs `scenario` against `system` tick by tick:
/// sense, guard, control, plant, hazard, SPI, MAPE.
pub fn run_scenario(
    scenario: &Scenario,
    system: &SystemDescription,
    seed: Option<u64>,
) -> Result<RunOutput, HarnessError> {
    let mut scenario = scenario.clone();
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    scenario.validate()?;
    system.validate()?;
    let model = system.model()?.clone();
    let adaptation_type = system.adaptation_type()?;
    let params = PlantParams {
        tick: scenario.tick,
        ..system.plant
    };
    params.validate()?;
    let config = system.initial_configuration()?;
    let spi_windows: Vec<SpiWindow> = system
        .spi
        .iter()
        .map(|s| SpiWindow::new(s.clone(), scenario.tick))
        .collect();
    let mut repo = KnowledgeRepository::new(
        config,
        &system.initial_option,
        system.case()?.clone(),
        spi_windows,
        scenario.tick,
    );
    repo.guard.enabled = scenario.guard_enabled;
    let mut managing = ManagingSystem::new(
        repo,
        model,
        adaptation_type,
        system.goal,
        system.admission,
        system.suite(),
        system.assessment.as_ref().map_or(0, |a| a.candidates_per_plan),
        scenario.seed,
    )?;
    let mut managed = ManagedSystem::new(params, scenario.initial_tank_temp, scenario.guard_enabled);
    let mut env = EnvironmentSource::new(&scenario);

    let ticks = scenario.ticks();
    let mut trace = Vec::with_capacity(ticks as usize);
    let mut timeline: Vec<ValidityPoint> = Vec::new();
    let mut guard_trips = 0;
    let mut first_over_limit = None;
    let mut first_guard_trip = None;
    let mut max_outflow: Option<f64> = None;
    let (mut next_trigger, mut next_request) = (0, 0);
    let eps = scenario.tick * 1e-6;

    for k in 0..ticks {
        let t = k as f64 * scenario.tick;
        // sense
        let sample = env.sample(t, managed.state.outflow_temp());
        if sample.outflow_temp > HAZARD_TEMP && first_over_limit.is_none() {
            first_over_limit = Some(t);
        }
        max_outflow = Some(max_outflow.map_or(sample.outflow_temp, |m| m.max(sample.outflow_temp)));
        let active_option = managing.repo.active_option_id.clone();
        // guard, control, plant, hazard
        let rec = managed.step(&sample, &managing.repo.current_config, managing.repo.config_epoch)?;
        if rec.guard_tripped_now {
            guard_trips += 1;
            first_guard_trip.get_or_insert(t);
        }
        managing.repo.guard = managed.guard;
        // SPI and monitor
        managing.monitor(&sample);
        let spi_near_limit = managing
            .repo
            .spi_windows
            .first()
            .is_some_and(|w| w.spec.predicate.holds(&sample));
        // analyze, plan, execute
        let mut injected: Vec<Trigger> = Vec::new();
        while next_trigger < scenario.triggers.len() && scenario.triggers[next_trigger].time <= t + eps {
            injected.push(scenario.triggers[next_trigger].trigger);
            next_trigger += 1;
        }
        let mut requests: Vec<String> = Vec::new();
        while next_request < scenario.requests.len() && scenario.requests[next_request].time <= t + eps {
            requests.push(scenario.requests[next_request].option_id.clone());
            next_request += 1;
        }
        managing.step(t, &injected, &requests)?;

        let validity = evaluate_validity(&managing.repo.safety_case, t, &managing.repo)?;
        let revision = managing.repo.safety_case.revision;
        let changed = timeline
            .last()
            .is_none_or(|p| p.valid != validity.valid || p.revision != revision || p.failing_nodes != validity.failing_nodes);
        if changed {
            timeline.push(ValidityPoint {
                time: t,
                revision,
                valid: validity.valid,
                failing_nodes: validity.failing_nodes.clone(),
            });
        }
        trace.push(TraceRow {
            t,
            inflow_temp: sample.inflow_temp,
            inflow_rate: sample.inflow_rate,
            setpoint: sample.setpoint,
            outflow_temp: sample.outflow_temp,
            power: rec.power,
            valve_open: rec.valve_open,
            active_option,
            hazard_accum: managed.state.hazard_accum,
            hazard_count: managed.state.hazard_count,
            guard_tripped: rec.guard_tripped,
            spi_near_limit,
            case_revision: revision,
            case_valid: validity.valid,
        });
    }

    let now = ticks.checked_sub(1).map_or(0.0, |k| k as f64 * scenario.tick);
    let taxonomy = system
        .models
        .iter()
        .map(|m| verdict_for(m, &managing.repo.safety_case, now, &managing.repo))
        .collect::<Result<Vec<_>, _>>()?;
    let runtime_criteria = runtime_criteria(&managing);
    let report = RunReport {
        scenario_id: scenario.id.clone(),
        system_id: system.id.clone(),
        seed: scenario.seed,
        adaptation_type,
        ticks,
        hazard_count: managed.state.hazard_count,
        guard_trips,
        first_over_limit,
        first_guard_trip,
        max_outflow,
        decisions: managing.decisions.clone(),
        activations: managing.activations.clone(),
        rise_times: managing.rise_records(),
        spi_breaches: managing.spi_breaches.clone(),
        spi: managing
            .repo
            .spi_windows
            .iter()
            .map(|w| SpiSummary {
                id: w.id().to_string(),
                accumulated_at_end: w.accumulated(),
            })
            .collect(),
        constraint_history: managing.constraint_history.clone(),
        taxonomy,
        validity_timeline: timeline,
        runtime_criteria,
        final_case_revision: managing.repo.safety_case.revision,
    };
    Ok(RunOutput {
        trace,
        report,
        managing,
    })
}

/// Behavioural checks for the managed model's type.
pub fn runtime_criteria(m: &ManagingSystem) -> Vec<RuntimeCriterion> {
    let mut out = Vec::new();
    let adaptations = || {
        m.activations
            .iter()
            .skip(1)
            .filter(|a| a.cause == ActivationCause::Adaptation)
    };
    match m.adaptation_type {
        AdaptationType::TI | AdaptationType::TII => {
            let stray: Vec<&str> = m
                .activations
                .iter()
                .filter(|a| {
                    m.model.option(&a.option_id).is_none_or(|o| {
                        o.assignment.iter().any(|(k, v)| a.config.parameters.get(k) != Some(v))
                    })
                })
                .map(|a| a.option_id.as_str())
                .collect();
            let id = if m.adaptation_type == AdaptationType::TII { "TII.B1" } else { "TI.B1" };
            out.push(RuntimeCriterion {
                id: id.into(),
                holds: stray.is_empty(),
                detail: if stray.is_empty() {
                    format!("{} activations, all enumerated options", m.activations.len())
                } else {
                    format!("non-enumerated configurations: {}", stray.join(", "))
                },
            });
        }
        AdaptationType::T0 | AdaptationType::TIII => {}
    }
    if m.adaptation_type == AdaptationType::TII {
        let monotone = m
            .constraint_history
            .windows(2)
            .all(|w| domain_subset(&w[1].1, &w[0].1).unwrap_or(false));
        out.push(RuntimeCriterion {
            id: "TII.C5".into(),
            holds: monotone,
            detail: format!("{} constraint contexts", m.constraint_history.len()),
        });
        let unadmitted = adaptations()
            .filter(|a| {
                a.evidence.as_ref().is_none_or(|e| {
                    e.kind != EvidenceKind::RuntimeObservation || e.verdict != Verdict::Pass
                })
            })
            .count();
        out.push(RuntimeCriterion {
            id: "TII.B4".into(),
            holds: unadmitted == 0,
            detail: format!("{unadmitted} activations without passing admission evidence"),
        });
    }
    if m.adaptation_type == AdaptationType::TIII {
        let unassessed = adaptations()
            .filter(|a| {
                let hash = a.config.network.as_ref().map(candidate_hash);
                a.evidence.as_ref().is_none_or(|e| {
                    e.kind != EvidenceKind::RuntimeAssessment
                        || e.verdict != Verdict::Pass
                        || Some(&e.payload_ref) != hash.as_ref()
                })
            })
            .count();
        out.push(RuntimeCriterion {
            id: "TIII.B4".into(),
            holds: unassessed == 0,
            detail: format!(
                "{} candidate activations, {unassessed} without matching pass assessment",
                adaptations().count()
            ),
        });
    }
    out
}
