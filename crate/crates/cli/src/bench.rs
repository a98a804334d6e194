//! Lifted versus plain evaluation on a synthetic fact base.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use splift::datalog::Program;
use splift::engine::{evaluate_lifted, ground_eval, EvalOptions};
use splift::synth::{behaviour_workload, WorkloadParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub tuples: usize,
    pub features: usize,
    pub variational_percent: f64,
    pub variational_facts: usize,
    pub planted_unsat: usize,
    pub seed: u64,
    pub runs: usize,
    /// Per-run wall times in milliseconds.
    pub ground_ms: Vec<f64>,
    pub lifted_ms: Vec<f64>,
    /// Mean after dropping the fastest and the slowest run.
    pub ground_trimmed_ms: f64,
    pub lifted_trimmed_ms: f64,
    pub overhead_percent: f64,
    /// Derived facts of the run that ignores PCs.
    pub ground_facts: usize,
    pub lifted_facts: usize,
    pub fact_delta: usize,
    pub unsat_dropped: usize,
    pub unique_pcs: usize,
}

impl BenchReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "tuples: {}", self.tuples).unwrap();
        writeln!(s, "features: {}", self.features).unwrap();
        writeln!(
            s,
            "variational facts: {} ({:.2}%)",
            self.variational_facts, self.variational_percent
        )
        .unwrap();
        writeln!(s, "seed: {}", self.seed).unwrap();
        writeln!(s, "runs: {} (min and max dropped)", self.runs).unwrap();
        writeln!(s, "ground ms: {:.3}", self.ground_trimmed_ms).unwrap();
        writeln!(s, "lifted ms: {:.3}", self.lifted_trimmed_ms).unwrap();
        writeln!(s, "overhead: {:.1}%", self.overhead_percent).unwrap();
        writeln!(s, "ground facts: {}", self.ground_facts).unwrap();
        writeln!(s, "lifted facts: {}", self.lifted_facts).unwrap();
        writeln!(s, "fact delta: {}", self.fact_delta).unwrap();
        writeln!(s, "unsat dropped: {}", self.unsat_dropped).unwrap();
        writeln!(s, "planted unsat: {}", self.planted_unsat).unwrap();
        writeln!(s, "unique pcs: {}", self.unique_pcs).unwrap();
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// The report without wall times; equal for equal parameters.
    pub fn without_timings(&self) -> BenchReport {
        BenchReport {
            ground_ms: Vec::new(),
            lifted_ms: Vec::new(),
            ground_trimmed_ms: 0.0,
            lifted_trimmed_ms: 0.0,
            overhead_percent: 0.0,
            ..self.clone()
        }
    }
}

/// Mean of `xs` without one minimum and one maximum. Falls back to the plain
/// mean for fewer than three samples.
pub fn trimmed_mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let inner = if v.len() >= 3 { &v[1..v.len() - 1] } else { &v[..] };
    inner.iter().sum::<f64>() / inner.len() as f64
}

fn derived_len<V: Copy>(p: &Program, db: &splift::datalog::Database<V>) -> usize {
    p.derived().filter_map(|d| db.relation(&d.name)).map(|r| r.len()).sum()
}

pub fn cmd_bench(params: &WorkloadParams, runs: usize) -> BenchReport {
    let runs = runs.max(1);
    let mut inst = behaviour_workload(params);
    let plain = inst.db.to_plain();
    let variational_facts = inst
        .db
        .relations
        .values()
        .flat_map(|r| r.tuples.values())
        .filter(|pc| !pc.is_true())
        .count();
    let opts = EvalOptions {
        collect_stats: true,
        ..Default::default()
    };

    let (mut ground_ms, mut lifted_ms) = (Vec::new(), Vec::new());
    let (mut ground_facts, mut last) = (0, None);
    for _ in 0..runs {
        let t = Instant::now();
        let g = ground_eval(&inst.program, &plain).expect("workload matches its program");
        ground_ms.push(t.elapsed().as_secs_f64() * 1e3);
        ground_facts = derived_len(&inst.program, &g);

        inst.store.clear_caches();
        let t = Instant::now();
        let out = evaluate_lifted(&inst.program, &inst.db, &mut inst.store, &opts).expect("workload matches");
        lifted_ms.push(t.elapsed().as_secs_f64() * 1e3);
        last = Some(out);
    }
    let (_, stats) = last.unwrap();
    let (g, l) = (trimmed_mean(&ground_ms), trimmed_mean(&lifted_ms));
    BenchReport {
        tuples: inst.db.tuple_count(),
        features: params.features,
        variational_percent: 100.0 * variational_facts as f64 / inst.db.tuple_count().max(1) as f64,
        variational_facts,
        planted_unsat: inst.planted,
        seed: params.seed,
        runs,
        ground_ms,
        lifted_ms,
        ground_trimmed_ms: g,
        lifted_trimmed_ms: l,
        overhead_percent: if g > 0.0 { 100.0 * (l - g) / g } else { 0.0 },
        ground_facts,
        lifted_facts: stats.output_facts,
        fact_delta: ground_facts - stats.output_facts,
        unsat_dropped: stats.unsat_dropped,
        unique_pcs: stats.unique_pcs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trimming() {
        assert_eq!(trimmed_mean(&[5.0, 1.0, 2.0, 3.0, 100.0]), 10.0 / 3.0);
        assert_eq!(trimmed_mean(&[4.0, 2.0]), 3.0);
        assert_eq!(trimmed_mean(&[]), 0.0);
    }

    fn small(seed: u64, variational_percent: f64, gadgets: usize) -> WorkloadParams {
        WorkloadParams {
            tuples: 3_000,
            features: 30,
            variational_percent,
            gadgets,
            components: 6,
            seed,
        }
    }

    #[test]
    fn all_true_pcs_are_conservative() {
        let r = cmd_bench(&small(1, 0.0, 0), 3);
        assert_eq!(r.variational_facts, 0);
        assert_eq!(r.ground_facts, r.lifted_facts);
        assert_eq!(r.unique_pcs, 0);
    }

    #[test]
    fn delta_is_unsat_dropped() {
        let r = cmd_bench(&small(2, 1.0, 5), 3);
        assert_eq!(r.fact_delta, r.unsat_dropped);
        assert_eq!(r.unsat_dropped, r.planted_unsat);
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let a = cmd_bench(&small(3, 1.0, 2), 1);
        let b = cmd_bench(&small(3, 1.0, 2), 1);
        assert_eq!(a.without_timings().to_json(), b.without_timings().to_json());
    }
}
