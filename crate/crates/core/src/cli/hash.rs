//! Content hash of the semantic part of a configuration.

use sha2::{Digest, Sha256};

use super::config::SemanticConfig;

/// Bumped whenever the meaning of a configuration field changes.
const HASH_VERSION: &str = "hbundle-config-v1";

/// Hex SHA-256 of the canonical JSON of `config`.
pub fn spec_hash(config: &SemanticConfig) -> String {
    let body = serde_json::to_string(config).expect("configuration serializes");
    let mut h = Sha256::new();
    h.update(HASH_VERSION.as_bytes());
    h.update([0u8]);
    h.update(body.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Prefix used in artifact file names.
pub fn short_hash(full: &str) -> &str {
    &full[..16]
}
