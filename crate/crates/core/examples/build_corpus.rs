//! Regenerates `corpus/` at the workspace root.
//!
//! Design rise times and the baseline network hash are measured here rather
//! than typed in, so the files always agree with the simulator.
//!
//!     cargo run -p safeadapt --example build_corpus [-- <out-dir>]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use safeadapt::assurance::{
    CaseNode, EvidenceItem, EvidenceKind, Freshness, Lifecycle, NodeKind, Predicate, SafetyCase,
    Verdict,
};
use safeadapt::controller::NetControllerSpec;
use safeadapt::harness::managed::run_managed;
use safeadapt::harness::scenario::{InjectedRequest, InjectedTrigger, Noise};
use safeadapt::harness::system::AssessmentConfig;
use safeadapt::harness::{Scenario, SystemDescription, Trace};
use safeadapt::mapek::{candidate_hash, AdaptationGoal, AdmissionPolicy, Envelope, Trigger};
use safeadapt::model::{
    AdaptationModel, AdaptationOption, ConstraintKind, GuardCondition, OperationalDomain,
    ParameterConstraint, SystemConfiguration,
};
use safeadapt::plant::PlantParams;
use safeadapt::spi::SpiSpec;
use safeadapt::taxonomy::{AdaptationDescriptor, DesignTimeSafety};

const PID_PARAMS: [&str; 3] = ["kd", "ki", "kp"];

fn scenario(id: &str, duration: f64, setpoints: &[(f64, f64)], inflow_temp: Trace, inflow_rate: Trace) -> Scenario {
    Scenario {
        id: id.into(),
        tick: 0.1,
        duration,
        setpoint_schedule: setpoints.to_vec(),
        inflow_temp_trace: inflow_temp,
        inflow_rate_trace: inflow_rate,
        seed: 1,
        guard_enabled: true,
        initial_tank_temp: setpoints[0].1,
        noise: Noise::default(),
        triggers: Vec::new(),
        requests: Vec::new(),
    }
}

/// Rise time of a 40 -> 50 °C step at t = 100 s in a fixed environment.
fn reference_rise(params: &PlantParams, config: &SystemConfiguration, inflow_temp: f64, inflow_rate: f64) -> Option<f64> {
    let sc = scenario(
        "reference-step",
        700.0,
        &[(0.0, 40.0), (100.0, 50.0)],
        Trace::constant(inflow_temp),
        Trace::constant(inflow_rate),
    );
    let goal = AdaptationGoal::default();
    let run = run_managed(&sc, params, config, &goal, true, false);
    assert_eq!(run.hazard_count, 0, "reference step must be hazard free");
    run.rises.first().and_then(|r| r.rise_time).map(|r| (r * 10.0).round() / 10.0)
}

fn pid(kp: f64, ki: f64, kd: f64) -> BTreeMap<String, f64> {
    BTreeMap::from([("kp".into(), kp), ("ki".into(), ki), ("kd".into(), kd)])
}

fn option(model: &str, n: usize, assignment: BTreeMap<String, f64>, evidence: &str) -> AdaptationOption {
    AdaptationOption {
        id: format!("opt-{n}"),
        model_id: model.into(),
        assignment,
        domain: None,
        design_time_evidence: vec![evidence.into()],
        design_rise_time: None,
    }
}

fn interval(target: &str, low: f64, high: f64) -> ParameterConstraint {
    ParameterConstraint {
        kind: ConstraintKind::Interval,
        target: target.into(),
        low: Some(low),
        high: Some(high),
        condition: None,
    }
}

/// Integral action is required once the proportional gain is large.
fn integral_required(threshold: f64) -> ParameterConstraint {
    ParameterConstraint {
        kind: ConstraintKind::Conditional,
        target: "ki".into(),
        low: Some(0.0),
        high: None,
        condition: Some(GuardCondition {
            parameter: "kp".into(),
            threshold,
        }),
    }
}

fn node(id: &str, kind: NodeKind, lifecycle: Lifecycle, text: &str) -> CaseNode {
    CaseNode::new(id, kind, lifecycle, text)
}

fn goal(id: &str, text: &str) -> CaseNode {
    node(id, NodeKind::Goal, Lifecycle::Static, text)
}

fn solution(id: &str, text: &str, evidence: &str) -> CaseNode {
    node(id, NodeKind::Solution, Lifecycle::Static, text).with_evidence(&[evidence])
}

/// Goal `id` discharging `obligation`, supported by one static solution.
fn argued(id: &str, obligation: &str, text: &str, evidence: &str, sn_text: &str) -> [CaseNode; 2] {
    let sn = format!("Sn{}", &id[1..]);
    [
        goal(id, text).discharging(&[obligation]).with_children(&[&sn]),
        solution(&sn, sn_text, evidence),
    ]
}

fn design(id: &str, kind: EvidenceKind, payload: &str) -> EvidenceItem {
    EvidenceItem::design(id, kind, payload)
}

fn type0(dir: &Path) -> (SystemDescription, Vec<Scenario>) {
    let model = AdaptationModel {
        id: "comfort-tuning".into(),
        parameters: PID_PARAMS.map(String::from).to_vec(),
        constraints: Vec::new(),
        descriptor: AdaptationDescriptor {
            affects_safety_critical: false,
            independence_argued: true,
            options_enumerated_at_design_time: true,
            design_time_safety: DesignTimeSafety::None,
            domain_constraints_declared: false,
            runtime_assessment_declared: false,
            case_in_knowledge_repo: false,
        },
        options: Some(vec![
            option("comfort-tuning", 1, pid(2000.0, 20.0, 0.0), "ev-guard-independence"),
            option("comfort-tuning", 2, pid(1.0e6, 1.0e4, 0.0), "ev-guard-independence"),
            option("comfort-tuning", 3, pid(5.0e5, 0.0, -1.0e4), "ev-guard-independence"),
        ]),
    };
    let mut nodes = vec![
        goal("G0", "Water heater is acceptably safe while comfort tuning adapts").with_children(&["C0", "S0"]),
        node("C0", NodeKind::Context, Lifecycle::Static, "Guard cuts power and closes the outlet above 90 °C"),
        node("S0", NodeKind::Strategy, Lifecycle::Static, "Argue that tuning cannot reach the guard")
            .with_children(&["G1", "G2"]),
    ];
    nodes.extend(argued(
        "G1",
        "T0.B1",
        "Controller gains cannot influence the guard",
        "ev-guard-independence",
        "Guard hardware path review",
    ));
    nodes.extend(argued(
        "G2",
        "T0.B2",
        "The case is fixed at design time",
        "ev-case-review",
        "Configuration-management review",
    ));
    let case = SafetyCase::new(
        "G0",
        nodes,
        vec![
            design("ev-guard-independence", EvidenceKind::DesignAnalysis, "guard-independence-review"),
            design("ev-case-review", EvidenceKind::DesignAnalysis, "case-review"),
        ],
    );
    write_json(&dir.join("cases/type0.json"), &case);

    let system = SystemDescription {
        id: "heater-type0".into(),
        models: vec![model],
        managed_model: None,
        initial_config: None,
        initial_option: "opt-2".into(),
        safety_case_path: Some("../cases/type0.json".into()),
        safety_case: None,
        plant: PlantParams::default(),
        goal: AdaptationGoal::default(),
        admission: AdmissionPolicy::default(),
        spi: Vec::new(),
        assessment: None,
    };
    let mut guard = scenario(
        "type0-guard-supremacy",
        600.0,
        &[(0.0, 80.0), (10.0, 95.0)],
        Trace::constant(15.0),
        Trace::constant(0.005),
    );
    guard.seed = 7;
    let steady = scenario(
        "type0-steady-state",
        3600.0,
        &[(0.0, 20.0)],
        Trace::constant(20.0),
        Trace::constant(0.1),
    );
    (system, vec![guard, steady])
}

fn type1(dir: &Path) -> (SystemDescription, Vec<Scenario>) {
    let params = PlantParams {
        volume: 20.0,
        max_power: 40_000.0,
        ..PlantParams::default()
    };
    let gains = [800.0, 1000.0, 1500.0, 2000.0, 2500.0, 3000.0, 4000.0, 6000.0, 8000.0, 12000.0];
    let options = gains
        .iter()
        .enumerate()
        .map(|(i, &kp)| {
            let mut o = option("heat-up-gains", i + 1, pid(kp, kp / 100.0, 0.0), "ev-option-sweep");
            o.design_rise_time = reference_rise(&params, &o.configuration(), 15.0, 0.1);
            o
        })
        .collect();
    let model = AdaptationModel {
        id: "heat-up-gains".into(),
        parameters: PID_PARAMS.map(String::from).to_vec(),
        constraints: vec![interval("kp", 0.0, 20_000.0), interval("kd", 0.0, 0.0), integral_required(1000.0)],
        descriptor: AdaptationDescriptor {
            affects_safety_critical: true,
            independence_argued: false,
            options_enumerated_at_design_time: true,
            design_time_safety: DesignTimeSafety::Unconditional,
            domain_constraints_declared: false,
            runtime_assessment_declared: false,
            case_in_knowledge_repo: false,
        },
        options: Some(options),
    };
    let mut nodes = vec![
        goal("G0", "Water heater is acceptably safe under gain switching").with_children(&["C0", "S0"]),
        node("C0", NodeKind::Context, Lifecycle::Static, "Ten gain sets, each simulated over the full environment"),
        node("S0", NodeKind::Strategy, Lifecycle::Static, "Argue over every enumerated option")
            .with_children(&["G1", "G2", "G3", "G4"]),
    ];
    nodes.extend(argued("G1", "TI.B1", "Only the ten enumerated gain sets are ever applied", "ev-selector-review", "Selector code review"));
    nodes.extend(argued("G2", "TI.B2", "Every gain set is safe over the whole environment", "ev-option-sweep", "Environment sweep per option"));
    nodes.extend(argued("G3", "TI.B3", "Gains switch between ticks without bumps", "ev-switch-test", "Switching test"));
    nodes.extend(argued("G4", "TI.B4", "The case is fixed at design time", "ev-case-review", "Configuration-management review"));
    let case = SafetyCase::new(
        "G0",
        nodes,
        vec![
            design("ev-selector-review", EvidenceKind::DesignAnalysis, "selector-review"),
            design("ev-option-sweep", EvidenceKind::DesignSimulation, "option-sweep"),
            design("ev-switch-test", EvidenceKind::DesignSimulation, "switch-test"),
            design("ev-case-review", EvidenceKind::DesignAnalysis, "case-review"),
        ],
    );
    write_json(&dir.join("cases/type1.json"), &case);

    let system = SystemDescription {
        id: "heater-type1".into(),
        models: vec![model],
        managed_model: None,
        initial_config: None,
        initial_option: "opt-1".into(),
        safety_case_path: Some("../cases/type1.json".into()),
        safety_case: None,
        plant: params,
        goal: AdaptationGoal::default(),
        admission: AdmissionPolicy::default(),
        spi: Vec::new(),
        assessment: None,
    };
    let mut sc = scenario(
        "type1-slow-start",
        900.0,
        &[(0.0, 40.0), (60.0, 50.0), (300.0, 45.0), (400.0, 55.0), (650.0, 48.0)],
        Trace::constant(15.0),
        Trace::constant(0.1),
    );
    sc.seed = 11;
    sc.noise = Noise {
        inflow_temp_sd: 0.2,
        inflow_rate_sd: 0.002,
    };
    sc.requests = vec![
        InjectedRequest {
            time: 500.0,
            option_id: "opt-99".into(),
        },
        InjectedRequest {
            time: 550.0,
            option_id: "opt-4".into(),
        },
    ];
    (system, vec![sc])
}

fn domain(temp: (f64, f64), rate: (f64, f64)) -> OperationalDomain {
    OperationalDomain::unbounded()
        .with("inflow_temp", temp.0, temp.1)
        .with("inflow_rate", rate.0, rate.1)
}

fn type2(dir: &Path) -> (SystemDescription, Vec<Scenario>) {
    let params = PlantParams {
        volume: 50.0,
        max_power: 150_000.0,
        ..PlantParams::default()
    };
    let permissive = domain((-10.0, 40.0), (0.01, 1.0));
    // (kp, domain): moderate gains are only argued for warm inflow; the two
    // aggressive sets only for cold, fast flow where their gain is needed.
    let table: [(f64, OperationalDomain); 10] = [
        (2000.0, permissive.clone()),
        (3000.0, domain((5.0, 40.0), (0.01, 1.0))),
        (4000.0, domain((6.0, 40.0), (0.01, 1.0))),
        (5000.0, domain((8.0, 40.0), (0.01, 0.8))),
        (6000.0, domain((10.0, 40.0), (0.01, 0.8))),
        (8000.0, domain((12.0, 40.0), (0.01, 0.6))),
        (10000.0, domain((14.0, 40.0), (0.01, 0.5))),
        (15000.0, domain((16.0, 40.0), (0.01, 0.4))),
        (60000.0, domain((-10.0, 2.0), (0.2, 1.0))),
        (100000.0, domain((-10.0, 0.0), (0.5, 1.0))),
    ];
    let options = table
        .iter()
        .enumerate()
        .map(|(i, (kp, d))| {
            let mut o = option("cold-climate-gains", i + 1, pid(*kp, kp / 100.0, 0.0), "ev-domain-analysis");
            o.domain = Some(d.clone());
            o.design_rise_time = reference_rise(&params, &o.configuration(), 10.0, 0.2);
            o
        })
        .collect();
    let model = AdaptationModel {
        id: "cold-climate-gains".into(),
        parameters: PID_PARAMS.map(String::from).to_vec(),
        constraints: vec![interval("kp", 0.0, 100_000.0), interval("kd", 0.0, 0.0), integral_required(1000.0)],
        descriptor: AdaptationDescriptor {
            affects_safety_critical: true,
            independence_argued: false,
            options_enumerated_at_design_time: true,
            design_time_safety: DesignTimeSafety::DomainConditional,
            domain_constraints_declared: true,
            runtime_assessment_declared: false,
            case_in_knowledge_repo: true,
        },
        options: Some(options),
    };
    let mut nodes = vec![
        goal("G0", "Water heater is acceptably safe under climate-dependent gains").with_children(&["S0"]),
        node("S0", NodeKind::Strategy, Lifecycle::Static, "Argue per option within its operational domain")
            .with_children(&["G1", "G2", "G3", "G4", "G5"]),
    ];
    nodes.extend(argued("G1", "TII.B1", "Only the ten enumerated gain sets are ever applied", "ev-selector-review", "Selector code review"));
    nodes.extend(argued("G2", "TII.B2", "Each gain set is safe inside its declared domain", "ev-domain-analysis", "Per-domain simulation sweep"));
    nodes.extend(argued("G3", "TII.B3", "Gains switch between ticks without bumps", "ev-switch-test", "Switching test"));
    nodes.extend([
        node("G4", NodeKind::Goal, Lifecycle::Dynamic, "The environment lies inside the active option's domain")
            .discharging(&["TII.B4"])
            .with_children(&["C4", "Sn4"]),
        node("C4", NodeKind::Context, Lifecycle::Dynamic, "Current operational constraints")
            .with_constraint(permissive)
            .with_predicate(Predicate::SamplesWithinConstraint),
        node("Sn4", NodeKind::Solution, Lifecycle::Dynamic, "Admission of observed environment")
            .with_evidence(&["ev-domain-analysis-initial"]),
        node("G5", NodeKind::Goal, Lifecycle::Dynamic, "Leaving the domain is handled safely")
            .discharging(&["TII.B5"])
            .with_children(&["A5", "Sn5"]),
        node("A5", NodeKind::Assumption, Lifecycle::Dynamic, "Guard is armed").with_predicate(Predicate::GuardEnabled),
        solution("Sn5", "Guard trip tests", "ev-guard-test"),
    ]);
    let case = SafetyCase::new(
        "G0",
        nodes,
        vec![
            design("ev-selector-review", EvidenceKind::DesignAnalysis, "selector-review"),
            design("ev-domain-analysis", EvidenceKind::DesignSimulation, "domain-sweep"),
            design("ev-domain-analysis-initial", EvidenceKind::DesignAnalysis, "opt-1-permissive-domain"),
            design("ev-switch-test", EvidenceKind::DesignSimulation, "switch-test"),
            design("ev-guard-test", EvidenceKind::DesignSimulation, "guard-trip-test"),
        ],
    );
    write_json(&dir.join("cases/type2.json"), &case);

    let system = SystemDescription {
        id: "heater-type2".into(),
        models: vec![model],
        managed_model: None,
        initial_config: None,
        initial_option: "opt-1".into(),
        safety_case_path: Some("../cases/type2.json".into()),
        safety_case: None,
        plant: params,
        goal: AdaptationGoal::default(),
        admission: AdmissionPolicy::default(),
        spi: Vec::new(),
        assessment: None,
    };
    let setpoints = [(0.0, 40.0), (350.0, 50.0), (1200.0, 45.0), (1300.0, 55.0)];
    let mut cold = scenario(
        "type2-cold-climate",
        1800.0,
        &setpoints,
        Trace::constant(0.5),
        Trace::constant(0.5),
    );
    cold.seed = 23;
    cold.noise = Noise {
        inflow_temp_sd: 0.2,
        inflow_rate_sd: 0.01,
    };
    cold.requests = vec![InjectedRequest {
        time: 1500.0,
        option_id: "opt-1".into(),
    }];
    let mut warm = scenario(
        "type2-cold-then-warm",
        3600.0,
        &setpoints,
        Trace::linear(&[(0.0, 0.5), (1800.0, 0.5), (2000.0, 12.0)]),
        Trace::constant(0.5),
    );
    warm.seed = 29;
    warm.noise = cold.noise;
    (system, vec![cold, warm])
}

/// One tanh unit driven by setpoint minus outflow; output scaled by `v`.
pub fn baseline_net(v: f64) -> NetControllerSpec {
    let mut spec = NetControllerSpec::zeros(vec![1]);
    spec.weights[0] = 100.0;
    spec.weights[1] = -100.0;
    spec.weights[6] = v;
    spec
}

fn type3(dir: &Path) -> (SystemDescription, Vec<Scenario>) {
    let params = PlantParams {
        volume: 10.0,
        max_power: 30_000.0,
        ..PlantParams::default()
    };
    let baseline = baseline_net(6.0);
    let hash = candidate_hash(&baseline);
    let model = AdaptationModel {
        id: "learned-controller".into(),
        parameters: Vec::new(),
        constraints: Vec::new(),
        descriptor: AdaptationDescriptor {
            affects_safety_critical: true,
            independence_argued: false,
            options_enumerated_at_design_time: false,
            design_time_safety: DesignTimeSafety::None,
            domain_constraints_declared: false,
            runtime_assessment_declared: true,
            case_in_knowledge_repo: true,
        },
        options: None,
    };
    let mut nodes = vec![
        goal("G0", "Water heater is acceptably safe under a retrained controller").with_children(&["C0", "S0"]),
        node("C0", NodeKind::Context, Lifecycle::Static, "Candidates are probed over the declared envelope"),
        node("S0", NodeKind::Strategy, Lifecycle::Static, "Argue over assessment, monitoring and fallback")
            .with_children(&["G1", "G2", "G3", "G4", "G5", "G6", "G7"]),
    ];
    nodes.extend(argued("G1", "TIII.B1", "Controllers are swapped between ticks", "ev-switch-test", "Switching test"));
    nodes.extend(argued("G2", "TIII.B2", "The baseline controller is safe on design-time evidence", "ev-baseline-sim", "Baseline simulation"));
    nodes.extend(argued("G3", "TIII.B3", "Probe scenarios cover the envelope corners", "ev-suite-review", "Assessment suite review"));
    nodes.extend(argued("G4", "TIII.B4", "Failed candidates are never applied", "ev-executor-review", "Executor hash check review"));
    nodes.extend(argued("G5", "TIII.B5", "SPI breaches trigger fail-safe", "ev-failsafe-test", "Fail-safe injection test"));
    nodes.extend([
        node("G6", NodeKind::Goal, Lifecycle::Dynamic, "The active controller passed run-time assessment")
            .discharging(&["TIII.B6"])
            .with_children(&["Sn6"]),
        node("Sn6", NodeKind::Solution, Lifecycle::Dynamic, "Latest assessment result")
            .with_evidence(&["ev-baseline-assessment"]),
        node("G7", NodeKind::Goal, Lifecycle::Dynamic, "Observed operation remains safe")
            .discharging(&["TIII.B7"])
            .with_children(&["A7", "Sn7"]),
        node("A7", NodeKind::Assumption, Lifecycle::Dynamic, "No SPI is in breach").with_predicate(Predicate::SpiNominal),
        node("Sn7", NodeKind::Solution, Lifecycle::Dynamic, "SPI monitoring record").with_evidence(&["ev-spi-design"]),
    ]);
    let mut baseline_assessment = EvidenceItem::runtime(
        "ev-baseline-assessment",
        EvidenceKind::RuntimeAssessment,
        Verdict::Pass,
        0.0,
        &hash,
    );
    baseline_assessment.freshness = Freshness::Seconds(3600.0);
    let case = SafetyCase::new(
        "G0",
        nodes,
        vec![
            design("ev-switch-test", EvidenceKind::DesignSimulation, "switch-test"),
            design("ev-baseline-sim", EvidenceKind::DesignSimulation, "baseline-sweep"),
            design("ev-suite-review", EvidenceKind::DesignAnalysis, "suite-review"),
            design("ev-executor-review", EvidenceKind::DesignAnalysis, "executor-review"),
            design("ev-failsafe-test", EvidenceKind::DesignSimulation, "failsafe-test"),
            design("ev-spi-design", EvidenceKind::DesignSimulation, "spi-threshold-study"),
            baseline_assessment,
        ],
    );
    write_json(&dir.join("cases/type3.json"), &case);
    write_json(&dir.join("candidates/baseline.json"), &baseline);
    write_json(&dir.join("candidates/zero.json"), &NetControllerSpec::<f64>::zeros(vec![1]));

    let system = SystemDescription {
        id: "heater-type3".into(),
        models: vec![model],
        managed_model: None,
        initial_config: Some(SystemConfiguration::net(baseline)),
        initial_option: "baseline".into(),
        safety_case_path: Some("../cases/type3.json".into()),
        safety_case: None,
        plant: params,
        goal: AdaptationGoal::default(),
        admission: AdmissionPolicy::default(),
        spi: vec![SpiSpec::default()],
        assessment: Some(AssessmentConfig {
            envelope: Envelope {
                inflow_temp: (5.0, 25.0),
                inflow_rate: (0.02, 0.1),
                setpoint: (40.0, 55.0),
            },
            duration: 150.0,
            candidates_per_plan: 8,
        }),
    };
    let mut sc = scenario(
        "type3-near-limit",
        1000.0,
        &[(0.0, 45.0), (200.0, 87.0), (700.0, 50.0)],
        Trace::constant(15.0),
        Trace::constant(0.05),
    );
    sc.seed = 31;
    sc.triggers = vec![
        InjectedTrigger {
            time: 30.0,
            trigger: Trigger::Manual,
        },
        InjectedTrigger {
            time: 100.0,
            trigger: Trigger::Manual,
        },
    ];
    (system, vec![sc])
}

fn write_json(path: &Path, value: &impl serde::Serialize) {
    std::fs::create_dir_all(path.parent().expect("nested path")).expect("create dir");
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text).expect("write");
}

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus"));
    for (tag, (system, scenarios)) in [
        ("type0", type0(&dir)),
        ("type1", type1(&dir)),
        ("type2", type2(&dir)),
        ("type3", type3(&dir)),
    ] {
        write_json(&dir.join(format!("systems/{tag}.json")), &system);
        for sc in scenarios {
            write_json(&dir.join(format!("scenarios/{}.json", sc.id)), &sc);
        }
    }
    println!("corpus written to {}", dir.display());
}
