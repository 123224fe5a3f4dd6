//! JSON reports.

use std::collections::BTreeMap;
use std::path::Path;

use semigabor::checks::Check;
use semigabor::presets::Grids;
use semigabor::ProductGrid;
use serde::Serialize;

use crate::config::AxisSpec;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckEntry {
    pub check_name: String,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl From<Check> for CheckEntry {
    fn from(c: Check) -> Self {
        Self { check_name: c.name, value: c.value, expected: c.expected, tolerance: c.tolerance, pass: c.pass }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridMetadata {
    pub h: Vec<AxisSpec>,
    pub k: Vec<AxisSpec>,
    pub freq: Vec<AxisSpec>,
    pub full_cap: usize,
}

fn axis_specs(g: &ProductGrid) -> Vec<AxisSpec> {
    g.axes()
        .iter()
        .map(|a| AxisSpec { kind: a.kind().to_string(), start: a.start(), stop: a.stop(), count: a.count() })
        .collect()
}

impl GridMetadata {
    pub fn new(grids: &Grids, full_cap: usize) -> Self {
        Self { h: axis_specs(&grids.h), k: axis_specs(&grids.k), freq: axis_specs(&grids.freq), full_cap }
    }
}

/// Non-finite numbers serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub group: String,
    pub transform: String,
    pub mode: String,
    pub seed: u64,
    pub grid_metadata: GridMetadata,
    pub metadata: BTreeMap<String, f64>,
    pub checks: Vec<CheckEntry>,
    pub overall_pass: bool,
}

impl Report {
    pub fn push(&mut self, check: Check) {
        self.checks.push(check.into());
        self.overall_pass = self.checks.iter().all(|c| c.pass);
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = Check>) {
        for c in checks {
            self.push(c);
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckEntry> {
        self.checks.iter().find(|c| c.check_name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| CliError::io(path, e))
    }
}
