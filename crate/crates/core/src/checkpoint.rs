//! Resumable search state.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::driver::{DriverOptions, Example, QueryKind};
use crate::error::{Error, Result};
use crate::exact;
use crate::prooflog::ProofLog;
use crate::propagation::GTable;
use crate::search::{PendingNode, Query, SearchConfig, Snapshot};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Open nodes of an interrupted search with everything needed to continue it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub kind: QueryKind,
    pub query: Query,
    pub config: SearchConfig,
    pub gtable: GTable,
    #[serde(with = "exact::dec")]
    pub seed: u64,
    #[serde(with = "exact::dec")]
    pub nodes: u64,
    pub elapsed_s: f64,
    /// Vector attaining the current threshold, if known.
    pub example: Option<Example>,
    pub frontier: Vec<PendingNode>,
    /// Events logged so far.
    pub log: ProofLog,
}

impl Checkpoint {
    pub fn new(
        kind: QueryKind,
        query: Query,
        opts: &DriverOptions,
        gtable: &GTable,
        snap: &Snapshot<'_>,
        example: Option<Example>,
        elapsed_s: f64,
    ) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            kind,
            query,
            config: opts.search.clone(),
            gtable: gtable.clone(),
            seed: opts.search.propagation.rng_seed,
            nodes: snap.nodes,
            elapsed_s,
            example,
            frontier: snap.frontier.clone(),
            log: snap.log.clone(),
        }
    }

    /// Writes atomically through a temporary sibling file.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, serde_json::to_string(self)?)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::InvalidParameters(format!("unsupported checkpoint version {}", ck.version)));
        }
        Ok(ck)
    }
}
