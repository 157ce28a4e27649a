//! Versioned, field-tagged text snapshots of detector state.
//!
//! Snapshots are JSON objects carrying a format tag and version next to the
//! full detector state. Floats are written in shortest round-trip form and
//! parsed back exactly, so a restored detector continues bit-identically.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::Detector;
use crate::error::{CpdError, Result};
use crate::models::ConjugateModel;

pub const SNAPSHOT_FORMAT: &str = "streamcpd-detector";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    format: String,
    version: u32,
    state: T,
}

impl<M> Detector<M>
where
    M: ConjugateModel + Serialize + DeserializeOwned,
{
    pub fn to_snapshot(&self) -> Result<String> {
        encode_snapshot(self)
    }

    pub fn from_snapshot(text: &str) -> Result<Self> {
        let mut d: Self = decode_snapshot(text)?;
        d.restore_scratch();
        Ok(d)
    }
}

/// Serializes any state with the snapshot envelope.
pub fn encode_snapshot<T: Serialize>(state: &T) -> Result<String> {
    serde_json::to_string(&Envelope {
        format: SNAPSHOT_FORMAT.to_string(),
        version: SNAPSHOT_VERSION,
        state,
    })
    .map_err(|e| CpdError::Snapshot(e.to_string()))
}

/// Inverse of [`encode_snapshot`].
pub fn decode_snapshot<T: DeserializeOwned>(text: &str) -> Result<T> {
    let env: Envelope<T> = serde_json::from_str(text).map_err(|e| CpdError::Snapshot(e.to_string()))?;
    check_header(&env.format, env.version)?;
    Ok(env.state)
}

fn check_header(format: &str, version: u32) -> Result<()> {
    if format != SNAPSHOT_FORMAT {
        return Err(CpdError::Snapshot(format!("unexpected snapshot format {format:?}")));
    }
    if version != SNAPSHOT_VERSION {
        return Err(CpdError::Snapshot(format!(
            "snapshot version {version} is not supported (expected {SNAPSHOT_VERSION})"
        )));
    }
    Ok(())
}
