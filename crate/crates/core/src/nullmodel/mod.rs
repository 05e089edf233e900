//! Random-graph null models.
//!
//! Exact-count models fix edge totals, degrees or block edge counts exactly;
//! expected-count models include each pair independently so that those
//! quantities match only on average.

mod config;
mod dcsbm;
mod gnm;
mod independent;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use config::{config_model_sample, DEFAULT_SWAPS_PER_EDGE};
pub use dcsbm::{
    dcsbm_generate, dcsbm_maxent_sample, dcsbm_repair, dcsbm_repair_observed, BlockModelParams,
    RepairOutcome, StubMatching, DEFAULT_MAX_ATTEMPTS,
};
pub use gnm::gen_gnm;
pub use independent::{chung_lu_sample, gen_gnp};

use crate::error::Error;

/// The six supported null models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NullModel {
    #[serde(rename = "gnm")]
    Gnm,
    #[serde(rename = "gnp")]
    Gnp,
    #[serde(rename = "config")]
    Config,
    #[serde(rename = "chung-lu")]
    ChungLu,
    #[serde(rename = "dcsbm")]
    Dcsbm,
    #[serde(rename = "dcsbm-maxent")]
    DcsbmMaxent,
}

impl NullModel {
    pub const ALL: [NullModel; 6] = [
        NullModel::Gnm,
        NullModel::Gnp,
        NullModel::Config,
        NullModel::ChungLu,
        NullModel::Dcsbm,
        NullModel::DcsbmMaxent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NullModel::Gnm => "gnm",
            NullModel::Gnp => "gnp",
            NullModel::Config => "config",
            NullModel::ChungLu => "chung-lu",
            NullModel::Dcsbm => "dcsbm",
            NullModel::DcsbmMaxent => "dcsbm-maxent",
        }
    }

    /// Whether parameters come from block-model inference.
    pub fn needs_partition(self) -> bool {
        matches!(self, NullModel::Dcsbm | NullModel::DcsbmMaxent)
    }
}

impl fmt::Display for NullModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NullModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        NullModel::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::param(format!("unknown null model {s:?}")))
    }
}
