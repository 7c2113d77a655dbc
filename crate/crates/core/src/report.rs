use serde::Serialize;

/// One verified property: `value` compared against `bound`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl CheckRow {
    /// Passes when `value <= bound` (NaN fails).
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            pass: value <= bound,
        }
    }

    /// Passes when `value >= bound`.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            pass: value >= bound,
        }
    }
}
