use std::fmt;

/// A single failed invariant, named by the invariant and (when applicable)
/// the outcome label it concerns.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub invariant: &'static str,
    pub label: Option<String>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.label {
            Some(label) => write!(f, "{} [{}]: {}", self.invariant, label, self.detail),
            None => write!(f, "{}: {}", self.invariant, self.detail),
        }
    }
}

/// Outcome of `validate` on a POVM or instrument. Empty means valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, invariant: &str) -> bool {
        self.violations.iter().any(|v| v.invariant == invariant)
    }

    pub(crate) fn push(&mut self, invariant: &'static str, label: Option<&str>, detail: String) {
        self.violations.push(Violation {
            invariant,
            label: label.map(str::to_owned),
            detail,
        });
    }
}
