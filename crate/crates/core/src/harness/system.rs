//! System description files: adaptation models, the deployed configuration,
//! plant parameters and the managing system's policies.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::assurance::SafetyCase;
use crate::harness::HarnessError;
use crate::mapek::{AdaptationGoal, AdmissionPolicy, AssessmentSuite, Envelope};
use crate::model::{option_satisfies_model, AdaptationModel, SystemConfiguration};
use crate::plant::PlantParams;
use crate::spi::SpiSpec;
use crate::taxonomy::{classify, AdaptationType};

fn default_candidates() -> usize {
    8
}

fn default_probe_duration() -> f64 {
    150.0
}

/// How Type III candidates are proposed and probed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentConfig {
    pub envelope: Envelope,
    #[serde(default = "default_probe_duration")]
    pub duration: f64,
    #[serde(default = "default_candidates")]
    pub candidates_per_plan: usize,
}

fn default_initial_option() -> String {
    "baseline".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemDescription {
    pub id: String,
    pub models: Vec<AdaptationModel>,
    /// Model the managing system adapts; defaults to the first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub managed_model: Option<String>,
    /// Deployed configuration; defaults to the initial option's assignment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_config: Option<SystemConfiguration>,
    #[serde(default = "default_initial_option")]
    pub initial_option: String,
    /// Relative to the system file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub safety_case_path: Option<String>,
    /// Inline case; takes precedence over the path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub safety_case: Option<SafetyCase>,
    #[serde(default)]
    pub plant: PlantParams,
    #[serde(default)]
    pub goal: AdaptationGoal,
    #[serde(default)]
    pub admission: AdmissionPolicy,
    #[serde(default)]
    pub spi: Vec<SpiSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assessment: Option<AssessmentConfig>,
}

impl SystemDescription {
    /// Parses, resolves the case path and validates.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, &base)
    }

    /// Parses `text`, reading a referenced case relative to `base`.
    pub fn from_json(text: &str, base: &Path) -> Result<Self, HarnessError> {
        let mut system: SystemDescription =
            serde_json::from_str(text).map_err(|e| HarnessError::validation("system", &e.to_string()))?;
        if system.safety_case.is_none() {
            let Some(rel) = &system.safety_case_path else {
                return Err(HarnessError::validation(
                    "system.safety_case_path",
                    "either safety_case_path or safety_case is required",
                ));
            };
            let path: PathBuf = base.join(rel);
            system.safety_case = Some(load_case(&path)?);
        }
        system.validate()?;
        Ok(system)
    }

    pub fn model(&self) -> Result<&AdaptationModel, HarnessError> {
        match &self.managed_model {
            Some(id) => self.models.iter().find(|m| &m.id == id).ok_or_else(|| {
                HarnessError::validation("system.managed_model", &format!("no model `{id}`"))
            }),
            None => self
                .models
                .first()
                .ok_or_else(|| HarnessError::validation("system.models", "at least one model is required")),
        }
    }

    pub fn adaptation_type(&self) -> Result<AdaptationType, HarnessError> {
        Ok(classify(&self.model()?.descriptor)?)
    }

    pub fn case(&self) -> Result<&SafetyCase, HarnessError> {
        self.safety_case
            .as_ref()
            .ok_or_else(|| HarnessError::validation("system.safety_case", "not loaded"))
    }

    pub fn initial_configuration(&self) -> Result<SystemConfiguration, HarnessError> {
        if let Some(c) = &self.initial_config {
            return Ok(c.clone());
        }
        self.model()?
            .option(&self.initial_option)
            .map(|o| o.configuration())
            .ok_or_else(|| {
                HarnessError::validation(
                    "system.initial_option",
                    &format!("`{}` is not an option of the managed model", self.initial_option),
                )
            })
    }

    pub fn suite(&self) -> Option<AssessmentSuite> {
        self.assessment
            .as_ref()
            .map(|a| AssessmentSuite::from_envelope(&a.envelope, self.plant, self.goal, a.duration))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.plant
            .validate()
            .map_err(|e| HarnessError::validation("system.plant", &e.to_string()))?;
        self.goal
            .validate()
            .map_err(|e| HarnessError::validation("system.goal", &e))?;
        self.admission
            .validate()
            .map_err(|e| HarnessError::validation("system.admission", &e))?;
        for (i, m) in self.models.iter().enumerate() {
            for (j, o) in m.options.iter().flatten().enumerate() {
                let field = format!("system.models[{i}].options[{j}]");
                match option_satisfies_model(o, m) {
                    Ok(true) => {}
                    Ok(false) => {
                        return Err(HarnessError::validation(&field, "assignment violates the model's constraints"))
                    }
                    Err(e) => return Err(HarnessError::validation(&field, &e.to_string())),
                }
            }
            m.validate()
                .map_err(|e| HarnessError::validation(&format!("system.models[{i}]"), &e.to_string()))?;
        }
        let t = self.adaptation_type()?;
        let config = self.initial_configuration()?;
        config
            .validate()
            .map_err(|e| HarnessError::validation("system.initial_config", &e.to_string()))?;
        for (i, s) in self.spi.iter().enumerate() {
            if !(s.window > 0.0 && s.threshold >= 0.0 && s.threshold <= s.window) {
                return Err(HarnessError::validation(
                    &format!("system.spi[{i}]"),
                    "need 0 <= threshold <= window and window > 0",
                ));
            }
        }
        if t == AdaptationType::TIII {
            let suite = self.suite().ok_or_else(|| {
                HarnessError::validation("system.assessment", "type III systems need an assessment envelope")
            })?;
            suite
                .validate()
                .map_err(|e| HarnessError::validation("system.assessment", &e))?;
        }
        self.case()?.validate()?;
        Ok(())
    }
}

pub fn load_case(path: &Path) -> Result<SafetyCase, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let case = SafetyCase::from_json(&text)
        .map_err(|e| HarnessError::validation("safety_case", &e.to_string()))?;
    case.validate()?;
    Ok(case)
}
