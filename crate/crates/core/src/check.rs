use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One named numerical assertion: `value ≤ allowed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub allowed: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value ≤ allowed`; NaN never passes.
    pub fn at_most(name: impl Into<String>, value: f64, allowed: f64) -> Self {
        Check {
            name: name.into(),
            value,
            allowed,
            passed: value <= allowed,
        }
    }

    /// Boolean clause, recorded as `0 ≤ 0` or `1 ≤ 0`.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Check {
            name: name.into(),
            value: if ok { 0.0 } else { 1.0 },
            allowed: 0.0,
            passed: ok,
        }
    }

    pub fn ensure(&self) -> Result<()> {
        if self.passed {
            Ok(())
        } else {
            Err(Error::AssertionFailure {
                clause: self.name.clone(),
                defect: self.value,
                allowed: self.allowed,
            })
        }
    }
}

/// Error for the first failed check, if any.
pub fn ensure_all(checks: &[Check]) -> Result<()> {
    checks.iter().try_for_each(Check::ensure)
}
