//! Verification records emitted by checks and constructions.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::chart::GridSpec;
use crate::config::Config;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = ">")]
    Greater,
    #[serde(rename = ">=")]
    GreaterEq,
    #[serde(rename = "<=")]
    LessEq,
}

/// One thresholded quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub construction: String,
    pub parameters: BTreeMap<String, Value>,
    pub grid: Option<GridSpec>,
    pub sphere_samples: Option<usize>,
    pub seed: Option<u64>,
    pub checks: Vec<Check>,
    pub facts: BTreeMap<String, Value>,
    pub pass: bool,
}

impl Certificate {
    pub fn new(construction: impl Into<String>) -> Self {
        Certificate {
            construction: construction.into(),
            parameters: BTreeMap::new(),
            grid: None,
            sphere_samples: None,
            seed: None,
            checks: Vec::new(),
            facts: BTreeMap::new(),
            pass: true,
        }
    }

    pub fn with_grid(mut self, grid: GridSpec) -> Self {
        self.grid = Some(grid);
        self
    }

    pub fn param(&mut self, key: &str, v: impl Into<Value>) {
        self.parameters.insert(key.to_string(), v.into());
    }

    pub fn fact(&mut self, key: &str, v: impl Serialize) {
        self.facts
            .insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    pub fn check(&mut self, name: &str, value: f64, relation: Relation, threshold: f64) -> bool {
        let ok = match relation {
            Relation::Greater => value > threshold,
            Relation::GreaterEq => value >= threshold,
            Relation::LessEq => value <= threshold,
        };
        self.checks.push(Check {
            name: name.to_string(),
            value,
            relation,
            threshold,
            ok,
        });
        self.pass &= ok;
        ok
    }

    /// A boolean requirement recorded as a 0/1 check.
    pub fn require(&mut self, name: &str, holds: bool) -> bool {
        self.check(name, if holds { 1.0 } else { 0.0 }, Relation::GreaterEq, 1.0)
    }

    pub fn margin(&self, name: &str) -> Option<f64> {
        self.checks.iter().find(|c| c.name == name).map(|c| c.value)
    }

    pub fn record_config(&mut self, cfg: &Config) {
        self.fact("tolerances", cfg.tol);
    }

    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.ok).map(|c| c.name.as_str()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_is_conjunction_of_checks() {
        let mut c = Certificate::new("demo");
        assert!(c.check("a", 1.0, Relation::Greater, 0.0));
        assert!(c.pass);
        assert!(!c.check("b", 1e-3, Relation::LessEq, 1e-10));
        assert!(!c.pass);
        assert_eq!(c.failed_checks(), vec!["b"]);
    }
}
