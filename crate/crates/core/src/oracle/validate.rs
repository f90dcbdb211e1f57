//! Exhaustive checking of bounds against concrete runs.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{BoxSpec, ConcreteInput, InputSpace, Interpreter, RunStatus};
use crate::analysis::{min_of, BoundMap};
use crate::ir::{EdgeId, FlowGraph};
use crate::symexpr::Expr;

/// Violations kept in full; the rest are only counted.
const KEPT_VIOLATIONS: usize = 32;

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub edge: EdgeId,
    pub src: String,
    pub dst: String,
    pub input: ConcreteInput,
    pub status: RunStatus,
    pub count: u64,
    pub bound: String,
    pub value: i128,
}

/// How close the least bound of an edge comes to the observed counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Tightness {
    /// Runs in which the least bound could be evaluated.
    pub runs: u64,
    /// Runs where the count reached the least bound.
    pub exact: u64,
    pub max_count: u64,
    /// Largest `count / bound` over runs with a positive bound.
    pub max_ratio: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ValidationReport {
    pub runs: u64,
    pub finished: u64,
    pub step_cap_hit: u64,
    pub blocked: u64,
    /// Runs that divided by zero or read outside an array; not checked.
    pub undefined: u64,
    /// Single comparisons of a count against a bound.
    pub checks: u64,
    pub violation_count: u64,
    pub violations: Vec<Violation>,
    /// Bound evaluations that had no value (for instance a read outside an array).
    pub unevaluable: u64,
    /// Edges with an empty bound set, which nothing is checked against.
    pub skipped_edges: Vec<EdgeId>,
    pub tightness: BTreeMap<EdgeId, Tightness>,
}

impl ValidationReport {
    pub fn is_sound(&self) -> bool {
        self.violation_count == 0
    }

    fn merge(mut self, other: ValidationReport) -> ValidationReport {
        self.runs += other.runs;
        self.finished += other.finished;
        self.step_cap_hit += other.step_cap_hit;
        self.blocked += other.blocked;
        self.undefined += other.undefined;
        self.checks += other.checks;
        self.violation_count += other.violation_count;
        self.unevaluable += other.unevaluable;
        for v in other.violations {
            if self.violations.len() < KEPT_VIOLATIONS {
                self.violations.push(v);
            }
        }
        for (e, t) in other.tightness {
            let mine = self.tightness.entry(e).or_default();
            mine.runs += t.runs;
            mine.exact += t.exact;
            mine.max_count = mine.max_count.max(t.max_count);
            mine.max_ratio = mine.max_ratio.max(t.max_ratio);
        }
        self
    }

    /// One-line summary.
    pub fn summary(&self) -> String {
        format!(
            "validation: {} runs ({} finished, {} at step cap, {} blocked, {} undefined), {} checks, {} violations",
            self.runs,
            self.finished,
            self.step_cap_hit,
            self.blocked,
            self.undefined,
            self.checks,
            self.violation_count
        )
    }
}

struct Checked<'a> {
    id: EdgeId,
    src: &'a str,
    dst: &'a str,
    bounds: &'a [Expr],
    min: Option<Expr>,
}

struct Harness<'a> {
    g: &'a FlowGraph,
    interp: Interpreter<'a>,
    edges: Vec<Checked<'a>>,
    step_cap: u64,
}

impl Harness<'_> {
    fn one(&self, input: &ConcreteInput) -> ValidationReport {
        let mut rep = ValidationReport {
            runs: 1,
            ..ValidationReport::default()
        };
        let trace = self.interp.run(input, self.step_cap, false);
        match trace.status {
            RunStatus::Undefined => {
                rep.undefined = 1;
                return rep;
            }
            RunStatus::Finished => rep.finished = 1,
            RunStatus::StepCapHit => rep.step_cap_hit = 1,
            RunStatus::Blocked => rep.blocked = 1,
        }
        let val = input.valuation(self.g);
        for e in &self.edges {
            let count = trace.count(e.id);
            for b in e.bounds {
                rep.checks += 1;
                match val.eval(b) {
                    None => rep.unevaluable += 1,
                    Some(v) if (count as i128) > v => {
                        rep.violation_count += 1;
                        rep.violations.push(Violation {
                            edge: e.id,
                            src: e.src.to_string(),
                            dst: e.dst.to_string(),
                            input: input.clone(),
                            status: trace.status,
                            count,
                            bound: b.to_string(),
                            value: v,
                        });
                    }
                    Some(_) => {}
                }
            }
            if let Some(m) = e.min.as_ref().and_then(|m| val.eval(m)) {
                let t = rep.tightness.entry(e.id).or_default();
                t.runs = 1;
                t.max_count = count;
                t.exact = u64::from(count as i128 == m);
                if m > 0 {
                    t.max_ratio = count as f64 / m as f64;
                }
            }
        }
        rep
    }
}

/// Runs `g` on every input of `spec` and compares every edge count with
/// every member of its bound set.
pub fn validate_bounds(g: &FlowGraph, bounds: &BoundMap, spec: BoxSpec, step_cap: u64) -> ValidationReport {
    let space = InputSpace::new(g, spec);
    validate_inputs(g, bounds, step_cap, space.len(), |i| space.get(i))
}

/// Like [`validate_bounds`] over an explicit list of inputs.
pub fn validate_on(g: &FlowGraph, bounds: &BoundMap, inputs: &[ConcreteInput], step_cap: u64) -> ValidationReport {
    validate_inputs(g, bounds, step_cap, inputs.len() as u128, |i| inputs[i as usize].clone())
}

fn validate_inputs(
    g: &FlowGraph,
    bounds: &BoundMap,
    step_cap: u64,
    total: u128,
    input: impl Fn(u128) -> ConcreteInput + Sync,
) -> ValidationReport {
    let mut skipped = Vec::new();
    let mut edges = Vec::new();
    for e in g.sorted_edges() {
        match bounds.get(&e.id) {
            Some(set) if !set.is_empty() => edges.push(Checked {
                id: e.id,
                src: &e.src,
                dst: &e.dst,
                bounds: set,
                min: min_of(set),
            }),
            _ => skipped.push(e.id),
        }
    }
    let h = Harness {
        g,
        interp: Interpreter::new(g),
        edges,
        step_cap,
    };

    #[cfg(feature = "parallel")]
    let rep = {
        use rayon::prelude::*;
        let total = u64::try_from(total).expect("input box too large");
        (0..total)
            .into_par_iter()
            .fold(ValidationReport::default, |acc, i| acc.merge(h.one(&input(i as u128))))
            .reduce(ValidationReport::default, ValidationReport::merge)
    };
    #[cfg(not(feature = "parallel"))]
    let rep = (0..total).fold(ValidationReport::default(), |acc, i| acc.merge(h.one(&input(i))));

    ValidationReport {
        skipped_edges: skipped,
        ..rep
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{analyze, AnalysisOptions};
    use crate::ir::parse_flowgraph;

    fn step2() -> FlowGraph {
        parse_flowgraph(
            "begin a\nend d\nedge a b assign i := 5\nedge b c assume i < x\nedge c b assign i := i + 2\nedge b d assume x <= i\n",
        )
        .unwrap()
    }

    #[test]
    fn analysis_bounds_hold_on_step2() {
        let g = step2();
        let r = analyze(&g, &AnalysisOptions::default()).unwrap();
        let spec: BoxSpec = "-10:20".parse().unwrap();
        let v = validate_bounds(&g, &r.bounds, spec, 10_000);
        assert_eq!(v.runs, 31);
        assert_eq!(v.finished, 31);
        assert!(v.is_sound(), "{:?}", v.violations);
        let t = v.tightness[&EdgeId(1)];
        assert_eq!(t.exact, 31);
        assert_eq!(t.max_count, 8);
    }

    #[test]
    fn wrong_bound_is_caught() {
        let g = step2();
        let mut b = analyze(&g, &AnalysisOptions::default()).unwrap().bounds;
        b.insert(EdgeId(2), vec![Expr::Const(0)]);
        let inputs = [ConcreteInput {
            scalars: [("x".to_string(), 12)].into(),
            ..ConcreteInput::default()
        }];
        let v = validate_on(&g, &b, &inputs, 1000);
        assert_eq!(v.violation_count, 1);
        assert_eq!(v.violations[0].count, 4);
        assert_eq!((v.violations[0].src.as_str(), v.violations[0].dst.as_str()), ("c", "b"));
    }

    #[test]
    fn empty_sets_are_skipped() {
        let g = step2();
        let mut b = analyze(&g, &AnalysisOptions::default()).unwrap().bounds;
        b.insert(EdgeId(1), vec![]);
        let v = validate_bounds(&g, &b, "0:3".parse().unwrap(), 1000);
        assert_eq!(v.skipped_edges, [EdgeId(1)]);
        assert!(v.is_sound());
    }
}
