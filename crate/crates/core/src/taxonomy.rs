//! Executable adaptation taxonomy: classify adaptations into Type 0/I/II/III
//! from structural criteria, list the safety-case obligations of each type,
//! and check which obligations a case discharges.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assurance::{evaluate_validity, CaseError, Lifecycle, Observations, SafetyCase};
use crate::model::AdaptationModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignTimeSafety {
    None,
    Unconditional,
    DomainConditional,
}

/// Structural facts about one adaptation, declared by the system designer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdaptationDescriptor {
    pub affects_safety_critical: bool,
    #[serde(default)]
    pub independence_argued: bool,
    pub options_enumerated_at_design_time: bool,
    pub design_time_safety: DesignTimeSafety,
    #[serde(default)]
    pub domain_constraints_declared: bool,
    #[serde(default)]
    pub runtime_assessment_declared: bool,
    #[serde(default)]
    pub case_in_knowledge_repo: bool,
}

impl AdaptationDescriptor {
    pub fn is_well_formed(&self) -> bool {
        self.design_time_safety == DesignTimeSafety::None || self.options_enumerated_at_design_time
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AdaptationType {
    T0,
    TI,
    TII,
    TIII,
}

impl AdaptationType {
    pub const ALL: [AdaptationType; 4] = [Self::T0, Self::TI, Self::TII, Self::TIII];

    pub fn name(self) -> &'static str {
        match self {
            Self::T0 => "Non-Interference",
            Self::TI => "Static Assurance",
            Self::TII => "Constrained Assurance",
            Self::TIII => "Dynamic Assurance",
        }
    }
}

impl fmt::Display for AdaptationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self {
            Self::T0 => "T0",
            Self::TI => "TI",
            Self::TII => "TII",
            Self::TIII => "TIII",
        };
        f.write_str(tag)
    }
}

/// Where in the case an obligation must be argued.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArgueMode {
    Any,
    Static,
    Dynamic,
    /// The whole case must be static; the carrier node is static too.
    StaticCase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Obligation {
    pub id: &'static str,
    pub mode: ArgueMode,
    pub text: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Criterion {
    pub id: &'static str,
    /// Decidable from the descriptor; otherwise enforced at run time.
    pub structural: bool,
    pub text: &'static str,
}

const fn ob(id: &'static str, mode: ArgueMode, text: &'static str) -> Obligation {
    Obligation { id, mode, text }
}

const fn cr(id: &'static str, structural: bool, text: &'static str) -> Criterion {
    Criterion {
        id,
        structural,
        text,
    }
}

const T0_OBLIGATIONS: [Obligation; 2] = [
    ob("T0.B1", ArgueMode::Any, "adaptation does not interfere with the safety-critical functions"),
    ob("T0.B2", ArgueMode::StaticCase, "safety case is defined at design time and does not change at run time"),
];

const TI_OBLIGATIONS: [Obligation; 4] = [
    ob("TI.B1", ArgueMode::Any, "managing system only executes adaptations defined at design time"),
    ob("TI.B2", ArgueMode::Any, "each option is safe within the entire operational domain"),
    ob("TI.B3", ArgueMode::Static, "managing system safely executes the adaptation action"),
    ob("TI.B4", ArgueMode::StaticCase, "safety case is defined at design time and does not change at run time"),
];

const TII_OBLIGATIONS: [Obligation; 5] = [
    ob("TII.B1", ArgueMode::Static, "managing system only executes adaptations defined at design time"),
    ob("TII.B2", ArgueMode::Static, "options are safe subject to assumptions on the operational domain"),
    ob("TII.B3", ArgueMode::Static, "managing system safely executes the adaptation action"),
    ob("TII.B4", ArgueMode::Dynamic, "the current operational domain satisfies the applied option's constraints"),
    ob("TII.B5", ArgueMode::Dynamic, "violations of the current operational constraints are safely handled or not possible"),
];

const TIII_OBLIGATIONS: [Obligation; 7] = [
    ob("TIII.B1", ArgueMode::Static, "managing system safely executes the adaptation action"),
    ob("TIII.B2", ArgueMode::Static, "adaptation is reasonably safe on design-time evidence"),
    ob("TIII.B3", ArgueMode::Static, "run-time assessment procedures are appropriate"),
    ob("TIII.B4", ArgueMode::Static, "managing system will not apply an option it determines to be unsafe"),
    ob("TIII.B5", ArgueMode::Static, "managing system detects and responds to changes in monitored SPIs"),
    ob("TIII.B6", ArgueMode::Dynamic, "run-time assessment evidence shows the selected option is safe"),
    ob("TIII.B7", ArgueMode::Dynamic, "real-time SPI data shows operation continues to be safe"),
];

const T0_CRITERIA: [Criterion; 1] = [cr("T0.C1", true, "does not affect safety-critical functions")];

const TI_CRITERIA: [Criterion; 3] = [
    cr("TI.C1", true, "affects safety-critical functions"),
    cr("TI.C2", true, "all options defined at design time"),
    cr("TI.C3", true, "all options shown safe at design time"),
];

const TII_CRITERIA: [Criterion; 5] = [
    cr("TII.C1", true, "affects safety-critical functions"),
    cr("TII.C2", true, "all options defined at design time"),
    cr("TII.C3", true, "options shown safe subject to operational-domain constraints"),
    cr("TII.C4", true, "adaptation imposes constraints reflected in the safety case"),
    cr("TII.C5", false, "adaptations monotonically increase domain constraints"),
];

const TIII_CRITERIA: [Criterion; 5] = [
    cr("TIII.C1", true, "affects safety-critical functions"),
    cr("TIII.C2", true, "options not defined at design time"),
    cr("TIII.C3", true, "options assessed at run time into a dynamic safety case"),
    cr("TIII.C4", true, "safety case stored in the knowledge repository"),
    cr("TIII.C5", false, "uncertainty arises from limits of run-time assessment"),
];

pub fn obligation_table(t: AdaptationType) -> &'static [Obligation] {
    match t {
        AdaptationType::T0 => &T0_OBLIGATIONS,
        AdaptationType::TI => &TI_OBLIGATIONS,
        AdaptationType::TII => &TII_OBLIGATIONS,
        AdaptationType::TIII => &TIII_OBLIGATIONS,
    }
}

pub fn criteria_table(t: AdaptationType) -> &'static [Criterion] {
    match t {
        AdaptationType::T0 => &T0_CRITERIA,
        AdaptationType::TI => &TI_CRITERIA,
        AdaptationType::TII => &TII_CRITERIA,
        AdaptationType::TIII => &TIII_CRITERIA,
    }
}

pub fn obligations_for(t: AdaptationType) -> Vec<String> {
    obligation_table(t).iter().map(|o| o.id.to_string()).collect()
}

fn obligation(id: &str) -> Option<&'static Obligation> {
    AdaptationType::ALL
        .iter()
        .flat_map(|t| obligation_table(*t))
        .find(|o| o.id == id)
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("no adaptation type matches; nearest {nearest}, first unmet criterion {unmet}")]
pub struct ClassificationError {
    pub nearest: AdaptationType,
    pub unmet: String,
}

/// Which structural criteria of `t` the descriptor meets, in table order.
fn structural_results(d: &AdaptationDescriptor, t: AdaptationType) -> Vec<(&'static str, bool)> {
    let affects = d.affects_safety_critical;
    let enumerated = d.options_enumerated_at_design_time;
    let results: Vec<bool> = match t {
        AdaptationType::T0 => vec![!affects],
        AdaptationType::TI => vec![
            affects,
            enumerated,
            d.design_time_safety == DesignTimeSafety::Unconditional,
        ],
        AdaptationType::TII => vec![
            affects,
            enumerated,
            d.design_time_safety == DesignTimeSafety::DomainConditional,
            d.domain_constraints_declared,
        ],
        AdaptationType::TIII => vec![
            affects,
            !enumerated,
            d.runtime_assessment_declared,
            d.case_in_knowledge_repo,
        ],
    };
    criteria_table(t)
        .iter()
        .filter(|c| c.structural)
        .map(|c| c.id)
        .zip(results)
        .collect()
}

/// Classifies by structural criteria. Exactly one type can match a
/// well-formed descriptor.
pub fn classify(d: &AdaptationDescriptor) -> Result<AdaptationType, ClassificationError> {
    for t in AdaptationType::ALL {
        if structural_results(d, t).iter().all(|(_, ok)| *ok) {
            return Ok(t);
        }
    }
    // Nearest: the type whose leading criteria the descriptor gets furthest
    // through, following the same decision order as above.
    let nearest = if !d.affects_safety_critical {
        AdaptationType::T0
    } else if !d.options_enumerated_at_design_time {
        AdaptationType::TIII
    } else if d.design_time_safety == DesignTimeSafety::DomainConditional {
        AdaptationType::TII
    } else {
        AdaptationType::TI
    };
    let unmet = structural_results(d, nearest)
        .into_iter()
        .find(|(_, ok)| !ok)
        .map(|(id, _)| id.to_string())
        .unwrap_or_default();
    Err(ClassificationError { nearest, unmet })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Discharge {
    Discharged,
    Missing,
    UnsupportedNode,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TaxonomyError {
    #[error("node `{node}` argues {obligation} but is {found:?}; it must be {required:?}")]
    LifecycleMismatch {
        node: String,
        obligation: String,
        found: Lifecycle,
        required: Lifecycle,
    },
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Classification(#[from] ClassificationError),
}

/// Obligation-by-obligation discharge of `t` against `case`.
pub fn check_obligations(
    t: AdaptationType,
    case: &SafetyCase,
    now: f64,
    knowledge: &dyn Observations,
) -> Result<BTreeMap<String, Discharge>, TaxonomyError> {
    let validity = evaluate_validity(case, now, knowledge)?;
    // Lifecycle placement is checked for every tagged node first so a
    // misplaced argument is reported even if another node carries the tag.
    for node in case.nodes.values() {
        for tag in &node.discharges {
            let Some(o) = obligation(tag) else { continue };
            let required = match o.mode {
                ArgueMode::Any => continue,
                ArgueMode::Static | ArgueMode::StaticCase => Lifecycle::Static,
                ArgueMode::Dynamic => Lifecycle::Dynamic,
            };
            if node.lifecycle != required {
                return Err(TaxonomyError::LifecycleMismatch {
                    node: node.id.clone(),
                    obligation: tag.clone(),
                    found: node.lifecycle,
                    required,
                });
            }
        }
    }
    let mut out = BTreeMap::new();
    for o in obligation_table(t) {
        let carriers: Vec<&str> = case
            .nodes
            .values()
            .filter(|n| n.discharges.contains(o.id))
            .map(|n| n.id.as_str())
            .collect();
        let status = if carriers.is_empty() {
            Discharge::Missing
        } else if carriers.iter().any(|c| validity.supported.contains(*c))
            && (o.mode != ArgueMode::StaticCase || case.is_fully_static())
        {
            Discharge::Discharged
        } else {
            Discharge::UnsupportedNode
        };
        out.insert(o.id.to_string(), status);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyVerdict {
    pub model_id: String,
    #[serde(rename = "type")]
    pub adaptation_type: AdaptationType,
    pub matched_criteria: Vec<String>,
    /// Behavioural criteria enforced by the managing system at run time.
    pub runtime_criteria: Vec<String>,
    pub required_obligations: Vec<String>,
    pub discharge: BTreeMap<String, Discharge>,
}

impl TaxonomyVerdict {
    pub fn all_discharged(&self) -> bool {
        self.required_obligations
            .iter()
            .all(|o| self.discharge.get(o) == Some(&Discharge::Discharged))
    }
}

/// Classifies a model; the discharge map is left empty.
pub fn classify_model(model: &AdaptationModel) -> Result<TaxonomyVerdict, ClassificationError> {
    let t = classify(&model.descriptor)?;
    Ok(TaxonomyVerdict {
        model_id: model.id.clone(),
        adaptation_type: t,
        matched_criteria: structural_results(&model.descriptor, t)
            .into_iter()
            .map(|(id, _)| id.to_string())
            .collect(),
        runtime_criteria: criteria_table(t)
            .iter()
            .filter(|c| !c.structural)
            .map(|c| c.id.to_string())
            .collect(),
        required_obligations: obligations_for(t),
        discharge: BTreeMap::new(),
    })
}

/// Classifies a model and checks its obligations against a case.
pub fn verdict_for(
    model: &AdaptationModel,
    case: &SafetyCase,
    now: f64,
    knowledge: &dyn Observations,
) -> Result<TaxonomyVerdict, TaxonomyError> {
    let mut verdict = classify_model(model)?;
    verdict.discharge = check_obligations(verdict.adaptation_type, case, now, knowledge)?;
    Ok(verdict)
}
