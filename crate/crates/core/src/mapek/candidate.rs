//! Type III candidate synthesis and run-time assessment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::assurance::{EvidenceItem, EvidenceKind, Verdict};
use crate::controller::{NetControllerSpec, NetHyper};
use crate::harness::managed::{run_managed, ManagedRun};
use crate::harness::scenario::{Scenario, Trace};
use crate::mapek::AdaptationGoal;
use crate::model::SystemConfiguration;
use crate::plant::PlantParams;

/// Probability of perturbing weights rather than mutating the topology.
pub const WEIGHT_BRANCH_PROBABILITY: f64 = 0.9;
pub const WEIGHT_NOISE_SD: f64 = 0.1;
pub const MAX_LAYER_SIZE: usize = 16;
pub const MAX_LAYERS: usize = 2;

/// Seeded perturbation of `current`.
///
/// Weight branch: additive N(0, 0.1) noise on every weight. Topology branch:
/// exactly one valid hyperparameter mutation, all weights reset to zero.
pub fn propose_candidate(current: &NetControllerSpec, seed: u64) -> NetControllerSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if rng.random_bool(WEIGHT_BRANCH_PROBABILITY) {
        let noise = Normal::new(0.0, WEIGHT_NOISE_SD).expect("positive sd");
        let weights = current
            .weights
            .iter()
            .map(|w| w + noise.sample(&mut rng))
            .collect();
        return NetControllerSpec {
            hyper: current.hyper.clone(),
            weights,
        };
    }
    let mutations = hyper_mutations(&current.hyper.layers);
    let layers = mutations[rng.random_range(0..mutations.len())].clone();
    NetControllerSpec::zeros_with(NetHyper {
        layers,
        activation: current.hyper.activation,
    })
}

/// Every topology one mutation away from `layers`.
pub fn hyper_mutations(layers: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for i in 0..layers.len() {
        if layers[i] < MAX_LAYER_SIZE {
            let mut l = layers.to_vec();
            l[i] += 1;
            out.push(l);
        }
        if layers[i] > 1 {
            let mut l = layers.to_vec();
            l[i] -= 1;
            out.push(l);
        }
    }
    if layers.len() < MAX_LAYERS {
        let mut l = layers.to_vec();
        l.push(*layers.last().unwrap_or(&1));
        out.push(l);
    }
    if layers.len() > 1 {
        out.push(layers[..layers.len() - 1].to_vec());
    }
    out
}

/// sha256 of the candidate's JSON encoding, hex.
pub fn candidate_hash(spec: &NetControllerSpec) -> String {
    let json = serde_json::to_vec(spec).expect("spec serializes");
    hex::encode(Sha256::digest(&json))
}

/// Region of the environment the default suite probes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub inflow_temp: (f64, f64),
    pub inflow_rate: (f64, f64),
    pub setpoint: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentSuite {
    pub scenarios: Vec<Scenario>,
    pub params: PlantParams,
    pub goal: AdaptationGoal,
}

impl AssessmentSuite {
    /// The six default probes: small and large setpoint steps, both inflow
    /// temperature extremes, an inflow-rate drop and the combined worst case.
    pub fn from_envelope(envelope: &Envelope, params: PlantParams, goal: AdaptationGoal, duration: f64) -> Self {
        let (t_lo, t_hi) = envelope.inflow_temp;
        let (q_lo, q_hi) = envelope.inflow_rate;
        let (s_lo, s_hi) = envelope.setpoint;
        let t_mid = (t_lo + t_hi) / 2.0;
        let q_mid = (q_lo + q_hi) / 2.0;
        let small = s_lo + (s_hi - s_lo) / 3.0;
        let step_at = 10.0;
        let drop_at = step_at + goal.rise_time_limit;
        let probe = |id: &str, to: f64, temp: Trace, rate: Trace| Scenario {
            id: id.to_string(),
            tick: params.tick,
            duration,
            setpoint_schedule: vec![(0.0, s_lo), (step_at, to)],
            inflow_temp_trace: temp,
            inflow_rate_trace: rate,
            seed: 0,
            guard_enabled: false,
            initial_tank_temp: s_lo,
            noise: Default::default(),
            triggers: Vec::new(),
            requests: Vec::new(),
        };
        let scenarios = vec![
            probe("small-step", small, Trace::constant(t_mid), Trace::constant(q_mid)),
            probe("large-step", s_hi, Trace::constant(t_mid), Trace::constant(q_mid)),
            probe("cold-inflow", s_hi, Trace::constant(t_lo), Trace::constant(q_hi)),
            probe("warm-inflow", s_hi, Trace::constant(t_hi), Trace::constant(q_lo)),
            probe(
                "rate-drop",
                s_hi,
                Trace::constant(t_mid),
                Trace::steps(&[(0.0, q_hi), (drop_at, q_lo)]),
            ),
            probe(
                "combined",
                s_hi,
                Trace::steps(&[(0.0, t_lo), (drop_at, t_hi)]),
                Trace::steps(&[(0.0, q_hi), (drop_at, q_lo)]),
            ),
        ];
        Self {
            scenarios,
            params,
            goal,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.scenarios.is_empty() {
            return Err("assessment suite needs at least one scenario".into());
        }
        for s in &self.scenarios {
            s.validate().map_err(|e| e.to_string())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assessment {
    pub verdict: Verdict,
    /// Slowest rise over the suite; infinite when a step was never reached.
    pub worst_rise: f64,
    pub payload_hash: String,
    pub runs: Vec<ManagedRun>,
}

/// Runs every suite scenario with `candidate` and the guard disabled.
///
/// Pass requires zero hazards, the rise-time goal met everywhere and finite
/// controller output.
pub fn assess_candidate(candidate: &NetControllerSpec, suite: &AssessmentSuite) -> Assessment {
    let payload_hash = candidate_hash(candidate);
    if candidate.validate().is_err() {
        return Assessment {
            verdict: Verdict::Fail,
            worst_rise: f64::INFINITY,
            payload_hash,
            runs: Vec::new(),
        };
    }
    let config = SystemConfiguration::net(candidate.clone());
    let mut runs = Vec::with_capacity(suite.scenarios.len());
    let mut pass = true;
    let mut worst_rise: f64 = 0.0;
    for scenario in &suite.scenarios {
        let run = run_managed(scenario, &suite.params, &config, &suite.goal, false, true);
        pass &= run.hazard_count == 0 && run.goal_met && run.fault.is_none();
        for r in &run.rises {
            worst_rise = worst_rise.max(r.rise_time.unwrap_or(f64::INFINITY));
        }
        runs.push(run);
        if !pass {
            break;
        }
    }
    Assessment {
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        worst_rise: if pass { worst_rise } else { f64::INFINITY },
        payload_hash,
        runs,
    }
}

impl Assessment {
    pub fn evidence(&self, id: &str, now: f64) -> EvidenceItem {
        EvidenceItem::runtime(id, EvidenceKind::RuntimeAssessment, self.verdict, now, &self.payload_hash)
    }
}
