//! Scenario files: what to run, against which topology and signatures,
//! and what the run is expected to produce.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::defender::{CostModel, LikelihoodRatios};

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variation {
    /// Starts at the moment the victim downloads the bot executable.
    InfectionDownload,
    /// Starts with an already infected machine joining the network.
    PreInfected,
}

fn default_cfg_uri() -> String {
    "/cfg.bin".to_string()
}

fn default_gate_uri() -> String {
    "/gate.php".to_string()
}

fn default_download_uri() -> String {
    "/bot.exe".to_string()
}

fn default_ping_interval() -> u64 {
    25
}

fn default_cnc_port() -> u16 {
    80
}

/// Zeus emulator parameters, by model host name.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZeusScenarioConfig {
    pub bot: String,
    pub cnc: String,
    pub rc4_key: String,
    #[serde(default = "default_cfg_uri")]
    pub cfg_uri: String,
    #[serde(default = "default_gate_uri")]
    pub gate_uri: String,
    #[serde(default = "default_download_uri")]
    pub download_uri: String,
    #[serde(default = "default_ping_interval")]
    pub ping_interval_ticks: u64,
    #[serde(default = "default_cnc_port")]
    pub cnc_port: u16,
}

/// Assertions a run is expected to satisfy; checked by `run` and the
/// acceptance suite.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Expectations {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alerts_total: Option<usize>,
    /// Expected multiset of signature-alert SIDs (sid -> count).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature_sids: Option<BTreeMap<u32, usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub informative_total: Option<usize>,
    /// Expected rendered rule lines, in order, byte-exact.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rules: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<bool>,
}

fn default_leaf_prior() -> f64 {
    1.0
}

fn default_start_tick() -> u64 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    /// Paths are relative to the scenario file's directory.
    pub topology: PathBuf,
    pub signatures: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rules: Option<PathBuf>,
    pub variation: Variation,
    pub ticks: u64,
    /// First tick carrying traffic; earlier ticks are a quiet warm-up.
    #[serde(default = "default_start_tick")]
    pub start_tick: u64,
    #[serde(default)]
    pub seed: u64,
    pub zeus: ZeusScenarioConfig,
    #[serde(default)]
    pub costs: Option<CostModel>,
    #[serde(default)]
    pub likelihoods: Option<LikelihoodRatios>,
    #[serde(default = "default_leaf_prior")]
    pub leaf_prior: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expectations>,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.ticks < 1 {
            return Err(HarnessError::BadScenario("ticks must be at least 1".to_string()));
        }
        if self.start_tick < 1 {
            return Err(HarnessError::BadScenario(
                "start_tick must be at least 1".to_string(),
            ));
        }
        if !(0.0..=1.0).contains(&self.leaf_prior) {
            return Err(HarnessError::BadScenario(
                "leaf_prior must be in [0,1]".to_string(),
            ));
        }
        if let Some(costs) = &self.costs {
            costs.validate().map_err(HarnessError::BadScenario)?;
        }
        if let Some(lrs) = &self.likelihoods {
            lrs.validate().map_err(HarnessError::BadScenario)?;
        }
        Ok(())
    }
}

/// Loads a scenario file and resolves its relative paths against the
/// file's own directory.
pub fn load_scenario(path: &Path) -> Result<Scenario, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::File {
        path: path.display().to_string(),
        source: e,
    })?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let mut scenario: Scenario =
        serde_path_to_error::deserialize(de).map_err(|e| HarnessError::BadScenario(format!(
            "{} at {}",
            e.inner(),
            e.path()
        )))?;
    scenario.validate()?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    scenario.topology = base.join(&scenario.topology);
    scenario.signatures = base.join(&scenario.signatures);
    if let Some(rules) = &scenario.rules {
        scenario.rules = Some(base.join(rules));
    }
    if scenario.name.is_empty() {
        scenario.name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
    }
    Ok(scenario)
}
