//! Reproducibility header and output envelopes.

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const SCHEMA: u32 = 1;

/// Hash over every input, each tagged with its role.
#[derive(Default)]
pub struct InputHash {
    hasher: Sha256,
}

impl InputHash {
    pub fn add(&mut self, role: &str, bytes: &[u8]) {
        self.hasher.update((role.len() as u64).to_le_bytes());
        self.hasher.update(role.as_bytes());
        self.hasher.update((bytes.len() as u64).to_le_bytes());
        self.hasher.update(bytes);
    }

    pub fn hex(&self) -> String {
        self.hasher.clone().finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Serialize)]
pub struct Envelope<'a, B: Serialize, R: Serialize> {
    pub schema: u32,
    pub command: &'a str,
    pub input_sha256: String,
    pub budgets: B,
    pub report: R,
}

pub fn json<B: Serialize, R: Serialize>(command: &str, hash: &InputHash, budgets: B, report: R) -> String {
    let env = Envelope { schema: SCHEMA, command, input_sha256: hash.hex(), budgets, report };
    let mut s = serde_json::to_string_pretty(&env).expect("reports serialize");
    s.push('\n');
    s
}

/// `# key: value` lines for text and CSV output.
pub fn comment_header<B: Serialize>(prefix: &str, command: &str, hash: &InputHash, budgets: &B) -> String {
    let budgets = serde_json::to_string(budgets).expect("budgets serialize");
    format!("{prefix} fgrow {command} schema {SCHEMA}\n{prefix} input-sha256: {}\n{prefix} budgets: {budgets}\n", hash.hex())
}
