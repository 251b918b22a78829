//! Shared fixtures and the acceptance checks, each returning a one-line
//! detail on success.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safeadapt::assurance::{
    adapt_case, evaluate_validity, CaseNode, CasePatch, EvidenceItem, EvidenceKind, Freshness,
    Lifecycle, NodeKind, Observations, Predicate, SafetyCase, Verdict,
};
use safeadapt::harness::scenario::{InjectedRequest, InjectedTrigger, Noise};
use safeadapt::harness::{run_scenario, trace_csv, RunOutput, Scenario, SystemDescription, Trace};
use safeadapt::mapek::{assess_candidate, candidate_hash, Trigger};
use safeadapt::model::{OperationalDomain, SystemConfiguration};
use safeadapt::plant::{PlantParams, HAZARD_TEMP};
use safeadapt::taxonomy::{
    classify, obligations_for, AdaptationDescriptor, AdaptationType, DesignTimeSafety,
};

pub type Check = Result<String, String>;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn system(tag: &str) -> SystemDescription {
    SystemDescription::load(&corpus_dir().join(format!("systems/{tag}.json"))).expect("corpus system loads")
}

pub fn scenario(id: &str) -> Scenario {
    let text = std::fs::read_to_string(corpus_dir().join(format!("scenarios/{id}.json"))).expect("scenario file");
    Scenario::from_json(&text).expect("corpus scenario parses")
}

/// Every corpus scenario with the system it belongs to.
pub fn corpus_runs() -> Vec<(Scenario, SystemDescription)> {
    let mut out = Vec::new();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(corpus_dir().join("scenarios"))
        .expect("scenario dir")
        .map(|e| e.expect("entry").path())
        .collect();
    paths.sort();
    for p in paths {
        let id = p.file_stem().unwrap().to_string_lossy().to_string();
        let tag = id.split('-').next().unwrap().to_string();
        out.push((scenario(&id), system(&tag)));
    }
    out
}

pub fn run(sc: &Scenario, sys: &SystemDescription) -> RunOutput {
    run_scenario(sc, sys, None).expect("scenario runs")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// 1. guard supremacy
// ---------------------------------------------------------------------------

pub fn guard_scenario(rng: &mut ChaCha8Rng, i: usize) -> (Scenario, SystemDescription) {
    let mut sys = system("type0");
    sys.plant = PlantParams {
        volume: rng.random_range(5.0..50.0),
        max_power: rng.random_range(10_000.0..100_000.0),
        ..PlantParams::default()
    };
    let kp = 10f64.powf(rng.random_range(4.0..7.0));
    let ki = rng.random_range(0.0..1.0e5);
    let kd = rng.random_range(-1.0e5..1.0e5);
    sys.initial_config = Some(SystemConfiguration::pid(kp, ki, kd));
    let initial = rng.random_range(60.0..89.0);
    let target = rng.random_range(92.0..120.0);
    let sc = Scenario {
        id: format!("guard-random-{i}"),
        tick: 0.1,
        duration: 400.0,
        setpoint_schedule: vec![(0.0, initial), (rng.random_range(1.0..30.0), target)],
        inflow_temp_trace: Trace::constant(rng.random_range(5.0..30.0)),
        inflow_rate_trace: Trace::constant(rng.random_range(0.0..0.05)),
        seed: i as u64,
        guard_enabled: true,
        initial_tank_temp: initial,
        noise: Noise {
            inflow_temp_sd: 0.5,
            inflow_rate_sd: 0.001,
        },
        triggers: Vec::new(),
        requests: Vec::new(),
    };
    (sc, sys)
}

pub fn criterion1() -> Check {
    let started = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x7e57);
    let mut runs = vec![(scenario("type0-guard-supremacy"), system("type0"))];
    runs.extend((0..60).map(|i| guard_scenario(&mut rng, i)));
    let mut worst_latency: f64 = 0.0;
    let mut tripped = 0;
    for (sc, sys) in &runs {
        let out = run(sc, sys);
        let r = &out.report;
        ensure(r.hazard_count == 0, || format!("{}: {} hazards", sc.id, r.hazard_count))?;
        // Independent reading of the trace: first row above the limit.
        let first_over = out.trace.iter().find(|row| row.outflow_temp > HAZARD_TEMP).map(|row| row.t);
        let first_trip = out.trace.iter().find(|row| row.guard_tripped).map(|row| row.t);
        match (first_over, first_trip) {
            (Some(over), Some(trip)) => {
                worst_latency = worst_latency.max(trip - over);
                ensure(trip - over <= 2.0 + 1e-9, || format!("{}: guard latency {:.1} s", sc.id, trip - over))?;
                tripped += 1;
            }
            (Some(over), None) => return Err(format!("{}: over limit at {over} s, guard never tripped", sc.id)),
            _ => {}
        }
    }
    ensure(tripped >= 50, || format!("only {tripped} runs reached the limit"))?;
    let elapsed = started.elapsed().as_secs_f64();
    ensure(elapsed < 30.0, || format!("took {elapsed:.1} s"))?;
    Ok(format!(
        "{} runs, {tripped} guard trips, 0 hazards, worst latency {worst_latency:.1} s, {elapsed:.1} s",
        runs.len()
    ))
}

// ---------------------------------------------------------------------------
// 2. closed option set
// ---------------------------------------------------------------------------

const ROGUE_IDS: [&str; 5] = ["opt-0", "opt-11", "opt-99", "turbo", "opt-1 "];

pub fn type1_random(rng: &mut ChaCha8Rng, i: usize) -> (Scenario, SystemDescription) {
    let mut sys = system("type1");
    sys.initial_option = format!("opt-{}", rng.random_range(1..=5));
    let mut sc = scenario("type1-slow-start");
    sc.id = format!("type1-random-{i}");
    sc.seed = i as u64;
    let mut t = 0.0;
    sc.setpoint_schedule = vec![(0.0, 40.0)];
    while t < 800.0 {
        t += rng.random_range(40.0..200.0);
        sc.setpoint_schedule.push((t, rng.random_range(35.0..60.0)));
    }
    let mut triggers: Vec<f64> = (0..rng.random_range(1..6)).map(|_| rng.random_range(0.0..900.0)).collect();
    triggers.sort_by(f64::total_cmp);
    sc.triggers = triggers
        .into_iter()
        .map(|time| InjectedTrigger {
            time,
            trigger: Trigger::GoalViolation,
        })
        .collect();
    let mut requests: Vec<(f64, String)> = (0..rng.random_range(1..5))
        .map(|_| {
            let id = if rng.random_bool(0.5) {
                ROGUE_IDS[rng.random_range(0..ROGUE_IDS.len())].to_string()
            } else {
                format!("opt-{}", rng.random_range(1..=10))
            };
            (rng.random_range(0.0..900.0), id)
        })
        .collect();
    requests.sort_by(|a, b| a.0.total_cmp(&b.0));
    sc.requests = requests
        .into_iter()
        .map(|(time, option_id)| InjectedRequest { time, option_id })
        .collect();
    (sc, sys)
}

pub fn criterion2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1e1);
    let mut runs = vec![(scenario("type1-slow-start"), system("type1"))];
    runs.extend((0..40).map(|i| type1_random(&mut rng, i)));
    let (mut applied, mut rogue) = (0, 0);
    for (sc, sys) in &runs {
        let out = run(sc, sys);
        let model = sys.model().unwrap();
        let options = model.options.as_ref().unwrap();
        ensure(options.len() == 10, || "type I model must enumerate 10 options".into())?;
        for a in &out.report.activations {
            let opt = options
                .iter()
                .find(|o| o.id == a.option_id)
                .ok_or_else(|| format!("{}: activated non-member `{}`", sc.id, a.option_id))?;
            ensure(opt.assignment == a.config.parameters, || {
                format!("{}: `{}` applied with altered parameters", sc.id, a.option_id)
            })?;
            applied += 1;
        }
        for d in &out.report.decisions {
            let Some(req) = &d.requested_option else { continue };
            if options.iter().any(|o| &o.id == req) {
                continue;
            }
            rogue += 1;
            ensure(!d.applied, || format!("{}: rogue `{req}` applied", sc.id))?;
            ensure(
                d.rejected.iter().any(|r| &r.option_id == req && !r.reason.is_empty()),
                || format!("{}: rogue `{req}` refused without a logged reason", sc.id),
            )?;
        }
        let requested = sc.requests.iter().filter(|r| !options.iter().any(|o| o.id == r.option_id)).count();
        let logged = out
            .report
            .decisions
            .iter()
            .filter(|d| d.requested_option.as_ref().is_some_and(|r| !options.iter().any(|o| &o.id == r)))
            .count();
        ensure(requested == logged, || format!("{}: {requested} rogue requests, {logged} logged", sc.id))?;
    }
    ensure(rogue > 0, || "no rogue request exercised".into())?;
    Ok(format!("{} runs, {applied} activations all enumerated, {rogue} rogue requests refused", runs.len()))
}

// ---------------------------------------------------------------------------
// 3. constrained assurance
// ---------------------------------------------------------------------------

/// Sample mean and n-1 standard deviation.
fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn check_cold_climate(out: &RunOutput, id: &str) -> Result<f64, String> {
    let r = &out.report;
    let nine: Vec<_> = r.decisions.iter().filter(|d| d.applied && d.chosen_option.as_deref() == Some("opt-9")).collect();
    ensure(nine.len() == 1, || format!("{id}: opt-9 applied {} times", nine.len()))?;
    let d = nine[0];
    let adm = d.admission.as_ref().ok_or_else(|| format!("{id}: no admission report"))?;
    ensure(adm.admit && adm.n >= 300, || format!("{id}: admitted on {} samples", adm.n))?;
    ensure(d.time >= 300.0, || format!("{id}: applied at {} s", d.time))?;
    // Recompute the bound from the trace rows in the window.
    let window: Vec<f64> = out
        .trace
        .iter()
        .filter(|row| row.t >= d.time - 300.0 - 1e-6 && row.t <= d.time + 1e-6)
        .map(|row| row.inflow_temp)
        .collect();
    ensure(window.len() == adm.n, || format!("{id}: window holds {} rows, report says {}", window.len(), adm.n))?;
    let (mean, sd) = mean_sd(&window);
    let ucb = mean + 2.326 * sd / (window.len() as f64).sqrt();
    let max = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    ensure(ucb <= 2.0 && max <= 2.0, || format!("{id}: recomputed bound {ucb:.3}, max {max:.3}"))?;
    let reported = adm
        .variables
        .iter()
        .find(|v| v.variable == "inflow_temp")
        .map(|v| v.upper_confidence)
        .ok_or_else(|| format!("{id}: no inflow_temp statistics"))?;
    ensure((reported - ucb).abs() < 1e-9, || format!("{id}: reported bound {reported} vs {ucb}"))?;
    // opt-9 is never active before the admission decision.
    ensure(
        out.trace.iter().filter(|row| row.active_option == "opt-9").all(|row| row.t > d.time),
        || format!("{id}: opt-9 active before admission"),
    )?;
    Ok(ucb)
}

fn monotone(out: &RunOutput) -> bool {
    out.report
        .constraint_history
        .windows(2)
        .all(|w| w[1].1.bounds.iter().all(|(k, inner)| {
            let outer = w[0].1.interval(k);
            inner.low.unwrap_or(f64::NEG_INFINITY) >= outer.low.unwrap_or(f64::NEG_INFINITY)
                && inner.high.unwrap_or(f64::INFINITY) <= outer.high.unwrap_or(f64::INFINITY)
        }) && w[0].1.bounds.keys().all(|k| w[1].1.bounds.contains_key(k)))
}

pub fn type2_random(rng: &mut ChaCha8Rng, i: usize) -> Scenario {
    let mut sc = scenario("type2-cold-climate");
    sc.id = format!("type2-random-{i}");
    sc.seed = 100 + i as u64;
    sc.duration = 1500.0;
    let t0 = rng.random_range(-2.0..15.0);
    sc.inflow_temp_trace = Trace::linear(&[(0.0, t0), (1500.0, t0 + rng.random_range(-5.0..10.0))]);
    sc.inflow_rate_trace = Trace::constant(rng.random_range(0.1..0.8));
    sc.triggers = (1..=4)
        .map(|k| InjectedTrigger {
            time: 300.0 * k as f64,
            trigger: Trigger::GoalViolation,
        })
        .collect();
    sc.requests = (1..=3)
        .map(|k| InjectedRequest {
            time: 350.0 * k as f64 + 10.0,
            option_id: format!("opt-{}", rng.random_range(1..=10)),
        })
        .collect();
    sc
}

pub fn criterion3() -> Check {
    let sys = system("type2");
    let cold = run(&scenario("type2-cold-climate"), &sys);
    let ucb = check_cold_climate(&cold, "cold-climate")?;
    let warm = run(&scenario("type2-cold-then-warm"), &sys);
    check_cold_climate(&warm, "cold-then-warm")?;

    let mut rng = ChaCha8Rng::seed_from_u64(0x2c5);
    let mut outs = vec![cold, warm];
    for i in 0..20 {
        outs.push(run(&type2_random(&mut rng, i), &sys));
    }
    for out in &outs {
        ensure(monotone(out), || format!("{}: constraint contexts not nested", out.report.scenario_id))?;
        let c5 = out.report.runtime_criteria.iter().find(|c| c.id == "TII.C5");
        ensure(c5.is_some_and(|c| c.holds), || format!("{}: TII.C5 not reported as held", out.report.scenario_id))?;
    }

    let warm = &outs[1];
    let adopted = warm.report.activations.iter().find(|a| a.option_id == "opt-9").unwrap().time;
    let first_out = warm
        .trace
        .iter()
        .find(|row| row.t > adopted && row.inflow_temp > 2.0)
        .map(|row| row.t)
        .ok_or("cold-then-warm: inflow never left the domain")?;
    let invalid = warm
        .report
        .validity_timeline
        .iter()
        .find(|p| p.time >= first_out && !p.valid && p.failing_nodes.iter().any(|n| n == "C4"))
        .map(|p| p.time)
        .ok_or("cold-then-warm: case never invalid at the constraint node")?;
    ensure(invalid - first_out <= 3600.0, || format!("invalid {:.1} s after leaving", invalid - first_out))?;
    Ok(format!(
        "opt-9 admitted once (upper bound {ucb:.3} °C), {} runs nested, case invalid at C4 {:.1} s after inflow > 2 °C",
        outs.len(),
        invalid - first_out
    ))
}

// ---------------------------------------------------------------------------
// 4. dynamic assurance
// ---------------------------------------------------------------------------

/// Many manual triggers, then a long near-limit episode.
pub fn type3_campaign() -> Scenario {
    let mut sc = scenario("type3-near-limit");
    sc.id = "type3-campaign".into();
    sc.duration = 900.0;
    sc.setpoint_schedule = vec![(0.0, 45.0), (300.0, 87.0), (800.0, 50.0)];
    sc.triggers = (0..26)
        .map(|k| InjectedTrigger {
            time: 5.0 + 10.0 * k as f64,
            trigger: Trigger::Manual,
        })
        .collect();
    sc
}

pub fn criterion4() -> Check {
    let sys = system("type3");
    let suite = sys.suite().unwrap();
    let mut proposals = 0;
    let mut activations = 0;
    let mut fail_safes = Vec::new();
    for sc in [scenario("type3-near-limit"), type3_campaign()] {
        let out = run(&sc, &sys);
        let r = &out.report;
        proposals += r
            .decisions
            .iter()
            .map(|d| {
                d.rejected.iter().filter(|x| x.option_id.starts_with("cand-")).count()
                    + usize::from(d.applied && d.chosen_option.as_ref().is_some_and(|c| c.starts_with("cand-")))
            })
            .sum::<usize>();
        for a in r.activations.iter().filter(|a| a.option_id.starts_with("cand-")) {
            let net = a.config.network.as_ref().ok_or("candidate without network")?;
            let ev = a.evidence.as_ref().ok_or_else(|| format!("{}: no evidence", a.option_id))?;
            ensure(
                ev.kind == EvidenceKind::RuntimeAssessment && ev.verdict == Verdict::Pass && ev.payload_ref == candidate_hash(net),
                || format!("{}: evidence does not cover the applied weights", a.option_id),
            )?;
            ensure(
                out.managing.repo.safety_case.evidence.contains_key(&ev.id),
                || format!("{}: evidence not attached to the case", a.option_id),
            )?;
            // Independent re-assessment of what was actually applied.
            ensure(assess_candidate(net, &suite).verdict == Verdict::Pass, || {
                format!("{}: applied candidate fails re-assessment", a.option_id)
            })?;
            activations += 1;
        }
        // SPI oracle from the trace: near-limit ticks since the last reset.
        let window = (3600.0 / sc.tick).round() as usize;
        let mut start = 0;
        let mut expected = None;
        for (k, row) in out.trace.iter().enumerate() {
            start = start.max((k + 1).saturating_sub(window));
            let count = out.trace[start..=k].iter().filter(|x| x.spi_near_limit).count();
            if count as f64 * sc.tick > 60.0 + 1e-9 {
                expected = Some(row.t);
                break;
            }
            // Adopting a candidate clears the indicator's history.
            if r.activations.iter().any(|a| (a.time - row.t).abs() < 1e-9 && a.option_id.starts_with("cand-")) {
                start = k + 1;
            }
        }
        let expected = expected.ok_or_else(|| format!("{}: no near-limit episode over 60 s", sc.id))?;
        let fs = r
            .activations
            .iter()
            .find(|a| a.cause == safeadapt::mapek::ActivationCause::FailSafe)
            .ok_or_else(|| format!("{}: no fail-safe", sc.id))?;
        ensure(fs.time >= expected - 1e-9 && fs.time <= expected + sc.tick + 1e-9, || {
            format!("{}: fail-safe at {} s, breach at {} s", sc.id, fs.time, expected)
        })?;
        ensure(out.report.runtime_criteria.iter().all(|c| c.holds), || format!("{}: runtime criterion failed", sc.id))?;
        fail_safes.push(fs.time - expected);
    }
    ensure(proposals >= 200, || format!("only {proposals} proposals"))?;
    Ok(format!(
        "{proposals} proposals, {activations} activations all re-assessed pass, fail-safe latency {:?} s",
        fail_safes
    ))
}

// ---------------------------------------------------------------------------
// 5. integrator oracle
// ---------------------------------------------------------------------------

/// Replays the trace's inputs with 100 sub-steps per tick; returns the
/// largest deviation from the simulated outflow.
pub fn oracle_deviation(out: &RunOutput, sc: &Scenario, params: &PlantParams) -> f64 {
    let h = sc.tick / 100.0;
    let cap = params.density * params.specific_heat * params.volume;
    let mut temp = sc.initial_tank_temp;
    let mut worst: f64 = 0.0;
    for row in &out.trace {
        worst = worst.max((row.outflow_temp - temp).abs());
        let flow = if row.valve_open { row.inflow_rate.max(0.0) } else { 0.0 };
        for _ in 0..100 {
            temp += h * (flow / params.volume * (row.inflow_temp - temp) + row.power / cap);
        }
    }
    worst
}

pub fn criterion5() -> Check {
    let mut checked = Vec::new();
    let mut worst: f64 = 0.0;
    for (sc, sys) in corpus_runs() {
        if (sc.duration - 3600.0).abs() > 1e-9 {
            continue;
        }
        let out = run(&sc, &sys);
        let dev = oracle_deviation(&out, &sc, &sys.plant);
        ensure(dev <= 0.05, || format!("{}: deviation {dev:.4} °C", sc.id))?;
        worst = worst.max(dev);
        checked.push(sc.id.clone());
    }
    ensure(!checked.is_empty(), || "no 3600 s corpus scenario".into())?;
    let steady = run(&scenario("type0-steady-state"), &system("type0"));
    let csv = trace_csv(&steady.trace);
    ensure(
        csv.lines().skip(1).all(|l| l.split(',').nth(4) == Some("20.000000")),
        || "steady state drifted from 20.000000".into(),
    )?;
    Ok(format!("{} ({}), worst {worst:.2e} °C; steady state 20.000000", checked.join(", "), checked.len()))
}

// ---------------------------------------------------------------------------
// 6. taxonomy
// ---------------------------------------------------------------------------

/// Structural criteria written out longhand, one closure per type.
fn matches(d: &AdaptationDescriptor, t: AdaptationType) -> bool {
    let a = d.affects_safety_critical;
    let e = d.options_enumerated_at_design_time;
    match t {
        AdaptationType::T0 => !a,
        AdaptationType::TI => a && e && d.design_time_safety == DesignTimeSafety::Unconditional,
        AdaptationType::TII => {
            a && e && d.design_time_safety == DesignTimeSafety::DomainConditional && d.domain_constraints_declared
        }
        AdaptationType::TIII => a && !e && d.runtime_assessment_declared && d.case_in_knowledge_repo,
    }
}

pub fn all_descriptors() -> Vec<AdaptationDescriptor> {
    let mut out = Vec::new();
    for bits in 0..64u32 {
        for safety in [DesignTimeSafety::None, DesignTimeSafety::Unconditional, DesignTimeSafety::DomainConditional] {
            let b = |i: u32| bits & (1 << i) != 0;
            out.push(AdaptationDescriptor {
                affects_safety_critical: b(0),
                independence_argued: b(1),
                options_enumerated_at_design_time: b(2),
                design_time_safety: safety,
                domain_constraints_declared: b(3),
                runtime_assessment_declared: b(4),
                case_in_knowledge_repo: b(5),
            });
        }
    }
    out
}

pub fn criterion6() -> Check {
    let expected = [
        ("type0", AdaptationType::T0),
        ("type1", AdaptationType::TI),
        ("type2", AdaptationType::TII),
        ("type3", AdaptationType::TIII),
    ];
    for (tag, t) in expected {
        let got = system(tag).adaptation_type().map_err(|e| e.to_string())?;
        ensure(got == t, || format!("{tag} classified {got}"))?;
    }
    let tables: [(AdaptationType, &[&str]); 4] = [
        (AdaptationType::T0, &["T0.B1", "T0.B2"]),
        (AdaptationType::TI, &["TI.B1", "TI.B2", "TI.B3", "TI.B4"]),
        (AdaptationType::TII, &["TII.B1", "TII.B2", "TII.B3", "TII.B4", "TII.B5"]),
        (AdaptationType::TIII, &["TIII.B1", "TIII.B2", "TIII.B3", "TIII.B4", "TIII.B5", "TIII.B6", "TIII.B7"]),
    ];
    for (t, ids) in tables {
        ensure(obligations_for(t) == ids, || format!("{t} obligations {:?}", obligations_for(t)))?;
    }
    let (mut well_formed, mut typed, mut errors) = (0, 0, 0);
    for d in all_descriptors().iter().filter(|d| d.is_well_formed()) {
        well_formed += 1;
        let hits: Vec<AdaptationType> = AdaptationType::ALL.into_iter().filter(|t| matches(d, *t)).collect();
        ensure(hits.len() <= 1, || format!("{d:?} matches {hits:?}"))?;
        match (classify(d), hits.first()) {
            (Ok(t), Some(h)) if t == *h => typed += 1,
            (Err(_), None) => errors += 1,
            (got, want) => return Err(format!("{d:?}: classify {got:?}, oracle {want:?}")),
        }
    }
    Ok(format!(
        "corpus types T0/TI/TII/TIII, obligation sets 2/4/5/7, {well_formed} well-formed descriptors: {typed} typed, {errors} errors"
    ))
}

// ---------------------------------------------------------------------------
// 7. determinism
// ---------------------------------------------------------------------------

pub fn criterion7() -> Check {
    let mut runs = corpus_runs();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    runs.push(guard_scenario(&mut rng, 0));
    let (sc, sys) = type1_random(&mut rng, 0);
    runs.push((sc, sys));
    let mut bytes = 0;
    for (sc, sys) in &runs {
        let a = run(sc, sys);
        let b = run(sc, sys);
        let (ta, tb) = (trace_csv(&a.trace), trace_csv(&b.trace));
        ensure(ta == tb, || format!("{}: traces differ", sc.id))?;
        let (ra, rb) = (
            serde_json::to_string(&a.report).unwrap(),
            serde_json::to_string(&b.report).unwrap(),
        );
        ensure(ra == rb, || format!("{}: reports differ", sc.id))?;
        bytes += ta.len();
    }
    Ok(format!("{} scenarios run twice, {bytes} trace bytes identical", runs.len()))
}

// ---------------------------------------------------------------------------
// 8. validity semantics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct Obs {
    pub within: bool,
    pub guard: bool,
    pub spi: bool,
}

impl Observations for Obs {
    fn within(&self, _: &OperationalDomain) -> bool {
        self.within
    }
    fn guard_enabled(&self) -> bool {
        self.guard
    }
    fn spi_nominal(&self) -> bool {
        self.spi
    }
}

pub fn obs_strategy() -> impl Strategy<Value = Obs> {
    (any::<bool>(), any::<bool>(), any::<bool>()).prop_map(|(within, guard, spi)| Obs { within, guard, spi })
}

/// One node to place: kind, lifecycle, and parent choice (index into the
/// goals and strategies placed so far).
type NodePlan = (u8, bool, usize, Vec<(bool, bool, u8)>);

fn node_plan() -> impl Strategy<Value = NodePlan> {
    (
        0u8..5,
        any::<bool>(),
        any::<usize>(),
        prop::collection::vec((any::<bool>(), any::<bool>(), 0u8..4), 1..3),
    )
}

/// Random well-formed case: a tree of goals and strategies with leaves of
/// every kind, evidence with random verdicts and freshness.
pub fn case_strategy() -> impl Strategy<Value = SafetyCase> {
    prop::collection::vec(node_plan(), 1..14).prop_map(|plans| {
        let mut nodes = vec![CaseNode::new("G0", NodeKind::Goal, Lifecycle::Static, "root")];
        let mut evidence = Vec::new();
        let mut parents = vec![0usize];
        for (i, (kind, dynamic, parent, items)) in plans.into_iter().enumerate() {
            let kind = match kind {
                0 => NodeKind::Goal,
                1 => NodeKind::Strategy,
                2 => NodeKind::Solution,
                3 => NodeKind::Context,
                _ => NodeKind::Assumption,
            };
            let lifecycle = if dynamic { Lifecycle::Dynamic } else { Lifecycle::Static };
            let id = format!("N{i}");
            let mut n = CaseNode::new(&id, kind, lifecycle, "node");
            match kind {
                NodeKind::Solution => {
                    for (j, (pass, runtime, age)) in items.into_iter().enumerate() {
                        let eid = format!("e{i}-{j}");
                        let verdict = if pass { Verdict::Pass } else { Verdict::Fail };
                        let mut item = if runtime {
                            EvidenceItem::runtime(&eid, EvidenceKind::RuntimeObservation, verdict, 0.0, "p")
                        } else {
                            EvidenceItem::design(&eid, EvidenceKind::DesignAnalysis, "p")
                        };
                        item.verdict = verdict;
                        if runtime {
                            item.freshness = Freshness::Seconds(f64::from(age) * 100.0);
                        }
                        n.evidence.push(eid);
                        evidence.push(item);
                    }
                }
                NodeKind::Context if dynamic => {
                    n.constraint = Some(OperationalDomain::unbounded().with("inflow_temp", -5.0, 5.0));
                }
                NodeKind::Assumption if dynamic => {
                    n.predicate = Some([Predicate::GuardEnabled, Predicate::SpiNominal][i % 2]);
                }
                _ => {}
            }
            let p = parents[parent % parents.len()];
            nodes[p].children.push(id);
            if matches!(kind, NodeKind::Goal | NodeKind::Strategy) {
                parents.push(nodes.len());
            }
            nodes.push(n);
        }
        SafetyCase::new("G0", nodes, evidence)
    })
}

pub fn patch_strategy() -> impl Strategy<Value = (u8, usize, bool, u8)> {
    (0u8..3, any::<usize>(), any::<bool>(), 0u8..6)
}

/// Turns an abstract patch choice into a concrete patch on `case`.
pub fn concrete_patch(case: &SafetyCase, (op, target, pass, n): (u8, usize, bool, u8), serial: usize) -> CasePatch {
    let ids: Vec<&String> = case.nodes.keys().collect();
    let node = ids[target % ids.len()].clone();
    match op {
        0 => CasePatch::AttachEvidence {
            node,
            item: EvidenceItem::runtime(
                &format!("rt-{serial}"),
                EvidenceKind::RuntimeAssessment,
                if pass { Verdict::Pass } else { Verdict::Fail },
                f64::from(n),
                "p",
            ),
        },
        1 => CasePatch::ReplaceConstraintContext {
            node,
            domain: OperationalDomain::unbounded().with("inflow_temp", -f64::from(n), f64::from(n)),
        },
        _ => CasePatch::AddDynamicSubtree {
            parent: node,
            nodes: vec![CaseNode::new(&format!("D{serial}"), NodeKind::Goal, Lifecycle::Dynamic, "added")
                .with_children(&[&format!("D{serial}a")]),
                CaseNode::new(&format!("D{serial}a"), NodeKind::Solution, Lifecycle::Dynamic, "added")],
        },
    }
}

/// Static nodes never change, rejected patches change nothing, revisions
/// and snapshots only grow.
pub fn static_immutability_holds(case: &SafetyCase, stream: &[(u8, usize, bool, u8)]) -> Result<(), String> {
    let statics: Vec<CaseNode> = case.nodes.values().filter(|n| n.lifecycle == Lifecycle::Static).cloned().collect();
    let mut current = case.clone();
    for (serial, choice) in stream.iter().enumerate() {
        let patch = concrete_patch(&current, *choice, serial);
        let target = match &patch {
            CasePatch::AttachEvidence { node, .. } | CasePatch::ReplaceConstraintContext { node, .. } => node,
            CasePatch::AddDynamicSubtree { parent, .. } => parent,
        }
        .clone();
        let target_static = current.nodes[&target].lifecycle == Lifecycle::Static;
        match adapt_case(&current, &[patch], serial as f64, "prop") {
            Ok(next) => {
                ensure(!target_static, || format!("patch on static `{target}` accepted"))?;
                ensure(next.revision == current.revision + 1, || "revision not bumped".into())?;
                ensure(next.snapshots.starts_with(&current.snapshots), || "snapshot log rewritten".into())?;
                current = next;
            }
            Err(_) => {}
        }
        for s in &statics {
            ensure(current.nodes.get(&s.id) == Some(s), || format!("static `{}` changed", s.id))?;
        }
    }
    Ok(())
}

/// Flipping one failing evidence item to pass never shrinks support.
pub fn evidence_monotone(case: &SafetyCase, pick: usize, obs: Obs, now: f64) -> Result<(), String> {
    let failing: Vec<&String> = case.evidence.iter().filter(|(_, e)| e.verdict == Verdict::Fail).map(|(k, _)| k).collect();
    if failing.is_empty() {
        return Ok(());
    }
    let id = failing[pick % failing.len()].clone();
    let before = evaluate_validity(case, now, &obs).map_err(|e| e.to_string())?;
    let mut flipped = case.clone();
    flipped.evidence.get_mut(&id).unwrap().verdict = Verdict::Pass;
    let after = evaluate_validity(&flipped, now, &obs).map_err(|e| e.to_string())?;
    let lost: BTreeSet<&String> = before.supported.difference(&after.supported).collect();
    ensure(lost.is_empty(), || format!("flipping `{id}` lost support for {lost:?}"))?;
    ensure(!before.valid || after.valid, || format!("flipping `{id}` invalidated the case"))
}

/// Evidence produced at `at` with window `w` supports exactly up to `at + w`.
pub fn freshness_boundary(at: u32, window: u32, offset: i32) -> Result<(), String> {
    let (at, window) = (f64::from(at), f64::from(window));
    let now = at + window + f64::from(offset) * 0.1;
    let mut item = EvidenceItem::runtime("ev", EvidenceKind::RuntimeObservation, Verdict::Pass, at, "p");
    item.freshness = Freshness::Seconds(window);
    let case = SafetyCase::new(
        "G",
        vec![
            CaseNode::new("G", NodeKind::Goal, Lifecycle::Static, "g").with_children(&["Sn"]),
            CaseNode::new("Sn", NodeKind::Solution, Lifecycle::Dynamic, "s").with_evidence(&["ev"]),
        ],
        vec![item],
    );
    let obs = Obs {
        within: true,
        guard: true,
        spi: true,
    };
    let v = evaluate_validity(&case, now, &obs).map_err(|e| e.to_string())?;
    let expect_valid = offset <= 0;
    ensure(v.valid == expect_valid, || format!("at={at} window={window} now={now}: valid={}", v.valid))?;
    if !expect_valid {
        ensure(v.failing_nodes == ["Sn"], || format!("failing {:?}", v.failing_nodes))?;
    }
    Ok(())
}

pub const PROPERTY_CASES: u32 = 10_000;

fn runner() -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases: PROPERTY_CASES,
            failure_persistence: None,
            ..Config::default()
        },
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    )
}

fn prop(result: Result<(), String>) -> Result<(), TestCaseError> {
    result.map_err(TestCaseError::fail)
}

pub fn criterion8() -> Check {
    runner()
        .run(
            &(case_strategy(), prop::collection::vec(patch_strategy(), 1..12)),
            |(case, stream)| prop(static_immutability_holds(&case, &stream)),
        )
        .map_err(|e| format!("static immutability: {e}"))?;
    runner()
        .run(
            &(case_strategy(), any::<usize>(), obs_strategy(), 0.0..500.0f64),
            |(case, pick, obs, now)| prop(evidence_monotone(&case, pick, obs, now)),
        )
        .map_err(|e| format!("evidence monotonicity: {e}"))?;
    runner()
        .run(&(0u32..100_000, 0u32..10_000, -5i32..5), |(at, w, off)| prop(freshness_boundary(at, w, off)))
        .map_err(|e| format!("freshness boundary: {e}"))?;
    Ok(format!("3 properties x {PROPERTY_CASES} cases"))
}
