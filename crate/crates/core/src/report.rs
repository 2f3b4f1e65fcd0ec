//! Structured results of verification runs: a named table of grid values,
//! the violations found, and provenance (input hash + tolerance set) so
//! emitted artifacts are traceable to their configuration.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Text(String),
    Flag(bool),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(v) => write!(f, "{v}"),
            Value::Text(t) => f.write_str(t),
            Value::Flag(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Violation {
    pub location: f64,
    pub magnitude: f64,
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct Provenance {
    pub config_hash: String,
    pub tolerances: String,
}

/// 64-bit FNV-1a; stable across runs and toolchains so provenance hashes are
/// reproducible.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

impl Provenance {
    pub fn new(name: &str, inputs: &[(String, String)], tolerances: String) -> Self {
        let mut blob = String::new();
        blob.push_str(name);
        for (k, v) in inputs {
            blob.push('|');
            blob.push_str(k);
            blob.push('=');
            blob.push_str(v);
        }
        blob.push('|');
        blob.push_str(&tolerances);
        Provenance {
            config_hash: format!("{:016x}", fnv1a(blob.as_bytes())),
            tolerances,
        }
    }
}

/// Verdict is pass iff the violation list is empty; the only mutators keep
/// that invariant.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub name: String,
    pub inputs: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    violations: Vec<Violation>,
    pub provenance: Provenance,
}

impl ExperimentReport {
    pub fn new(name: &str, inputs: Vec<(String, String)>, columns: &[&str], tolerances: String) -> Self {
        let provenance = Provenance::new(name, &inputs, tolerances);
        ExperimentReport {
            name: name.to_string(),
            inputs,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            violations: Vec::new(),
            provenance,
        }
    }

    pub fn push_row(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn record_violation(&mut self, location: f64, magnitude: f64, note: impl Into<String>) {
        self.violations.push(Violation {
            location,
            magnitude,
            note: note.into(),
        });
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn max_violation(&self) -> f64 {
        self.violations
            .iter()
            .map(|v| v.magnitude)
            .fold(0.0, f64::max)
    }

    /// One-line summary for console output.
    pub fn summary_line(&self) -> String {
        if self.passed() {
            format!("[PASS] {} ({} rows)", self.name, self.rows.len())
        } else {
            format!(
                "[FAIL] {} ({} rows, {} violations, worst {:.3e})",
                self.name,
                self.rows.len(),
                self.violations.len(),
                self.max_violation()
            )
        }
    }
}
