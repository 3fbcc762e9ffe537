//! All rule constants of the pipeline in one versioned document.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aggregation::AggregationConfig;
use crate::formations::FormationConfig;
use crate::kinematics::KinematicsConfig;
use crate::model::SpeedThresholds;
use crate::possession::PossessionConfig;
use crate::tactical::TacticalConfig;
use crate::valuation::ValuationConfig;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub version: u32,
    pub thresholds: SpeedThresholds,
    pub kinematics: KinematicsConfig,
    pub tactical: TacticalConfig,
    pub possession: PossessionConfig,
    pub formations: FormationConfig,
    pub valuation: ValuationConfig,
    pub aggregation: AggregationConfig,
    /// Speed before a reception is sampled this long before it.
    pub reception_lookback_ms: i64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            thresholds: SpeedThresholds::default(),
            kinematics: KinematicsConfig::default(),
            tactical: TacticalConfig::default(),
            possession: PossessionConfig::default(),
            formations: FormationConfig::default(),
            valuation: ValuationConfig::default(),
            aggregation: AggregationConfig::default(),
            reception_lookback_ms: 2000,
        }
    }
}

impl EngineConfig {
    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}
