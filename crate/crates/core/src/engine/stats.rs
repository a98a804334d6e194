use std::fmt::Write as _;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::datalog::{AnnotatedDatabase, Program};
use crate::featexpr::count_unique_pcs;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub name: String,
    pub millis: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratumStats {
    pub relations: Vec<String>,
    pub iterations: usize,
}

/// Counters for one evaluation. Fact counts cover the derived relations.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub phases: Vec<Phase>,
    pub output_facts: usize,
    pub facts_with_pc: usize,
    pub facts_with_pc_percent: f64,
    pub unique_pcs: usize,
    pub unsat_dropped: usize,
    pub fm_removed: usize,
    pub strata: Vec<StratumStats>,
}

impl RunStats {
    pub fn record_phase(&mut self, name: &str, elapsed: Duration) {
        self.phases.push(Phase {
            name: name.to_string(),
            millis: elapsed.as_secs_f64() * 1e3,
        });
    }

    pub fn count_outputs(&mut self, p: &Program, db: &AnnotatedDatabase) {
        let pcs: Vec<_> = p
            .derived()
            .filter_map(|d| db.relation(&d.name))
            .flat_map(|r| r.tuples.values().copied())
            .collect();
        self.output_facts = pcs.len();
        self.facts_with_pc = pcs.iter().filter(|pc| !pc.is_true()).count();
        self.facts_with_pc_percent = if pcs.is_empty() {
            0.0
        } else {
            100.0 * self.facts_with_pc as f64 / pcs.len() as f64
        };
        self.unique_pcs = count_unique_pcs(pcs);
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "output_facts: {}", self.output_facts).unwrap();
        writeln!(out, "facts_with_pc: {}", self.facts_with_pc).unwrap();
        writeln!(out, "facts_with_pc_percent: {:.2}", self.facts_with_pc_percent).unwrap();
        writeln!(out, "unique_pcs: {}", self.unique_pcs).unwrap();
        writeln!(out, "unsat_dropped: {}", self.unsat_dropped).unwrap();
        writeln!(out, "fm_removed: {}", self.fm_removed).unwrap();
        for s in &self.strata {
            writeln!(out, "iterations[{}]: {}", s.relations.join(","), s.iterations).unwrap();
        }
        for p in &self.phases {
            writeln!(out, "time_ms[{}]: {:.3}", p.name, p.millis).unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialise")
    }
}
