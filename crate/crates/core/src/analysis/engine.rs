//! Symbolic execution along backbones, loop processing and bound computation.

use std::collections::{BTreeMap, BTreeSet};

use super::bounds::{self, BoundMap, BoundSet};
use super::summary::compute_summary;
use super::{AnalysisOptions, Diagnostic};
use crate::error::AnalysisError;
use crate::ir::{
    backbones, induced_flowgraph, loop_at, Backbone, EdgeId, FlowGraph, Instruction, LoopRef,
    NodeId,
};
use crate::solver::{extract_counter_inequalities, extract_geometric_inequalities, SatResult};
use crate::symexpr::{
    simplify, simplify_formula, substitute, substitute_formula, CounterId, Expr, Formula, Rel,
    SubstKey, SymbolicMemory,
};

/// Symbolic state at the end of one backbone.
#[derive(Clone, Debug)]
pub struct BackboneState {
    pub backbone: Backbone,
    pub memory: SymbolicMemory,
    /// Conjuncts of the path condition; none of them mentions `Unknown`.
    pub condition: Vec<Formula>,
    pub bounds: BoundMap,
    /// Edges on the backbone or inside a loop along it.
    pub covered: BTreeSet<EdgeId>,
    pub pruned: bool,
}

impl BackboneState {
    pub fn condition_formula(&self) -> Formula {
        conj(&self.condition)
    }
}

/// One loop path as seen by its summary.
#[derive(Clone, Debug)]
pub struct LoopPath {
    pub counter: CounterId,
    pub backbone: Backbone,
    /// Effect of one iteration.
    pub memory: SymbolicMemory,
    /// Condition of the path before composition with the summary.
    pub condition: Formula,
    /// Condition before an iteration along this path, in terms of the state
    /// before the loop.
    pub counted_condition: Formula,
}

/// The result of summarizing one loop at one place of the analysis.
#[derive(Clone, Debug)]
pub struct LoopSummary {
    pub entry: NodeId,
    pub paths: Vec<LoopPath>,
    /// Scalar values after the iterations counted by the path counters.
    pub memory: SymbolicMemory,
    pub entry_memory: SymbolicMemory,
    pub exit_memory: SymbolicMemory,
}

impl LoopSummary {
    pub fn counters(&self) -> Vec<CounterId> {
        self.paths.iter().map(|p| p.counter).collect()
    }
}

pub(crate) struct Engine<'o> {
    opts: &'o AnalysisOptions,
    next_counter: u32,
    pub diagnostics: Vec<Diagnostic>,
    pub summaries: Vec<LoopSummary>,
    /// Every loop met during the analysis, by entry node.
    pub loops: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

fn conj(parts: &[Formula]) -> Formula {
    match parts.len() {
        0 => Formula::True,
        1 => parts[0].clone(),
        _ => Formula::And(parts.to_vec()),
    }
}

fn disj(parts: Vec<Formula>) -> Formula {
    match parts.len() {
        0 => Formula::False,
        1 => parts.into_iter().next().unwrap(),
        _ => Formula::Or(parts),
    }
}

fn free(e: &Expr) -> bool {
    e.is_kappa_free() && !e.contains_unknown()
}

impl<'o> Engine<'o> {
    pub fn new(opts: &'o AnalysisOptions) -> Self {
        Engine {
            opts,
            next_counter: 1,
            diagnostics: Vec::new(),
            summaries: Vec::new(),
            loops: BTreeMap::new(),
        }
    }

    fn note(&mut self, code: &'static str, message: String) {
        let d = Diagnostic { code, message };
        if !self.diagnostics.contains(&d) {
            self.diagnostics.push(d);
        }
    }

    fn fresh_counter(&mut self) -> CounterId {
        let k = CounterId(self.next_counter);
        self.next_counter += 1;
        k
    }

    /// Bound sets for every edge of `g` plus the state at the end of each backbone.
    pub fn execute_program(
        &mut self,
        g: &FlowGraph,
    ) -> Result<(Vec<BackboneState>, BoundMap), AnalysisError> {
        let cap = self.opts.set_cap;
        let initial = SymbolicMemory::initial(g.scalars(), g.arrays());
        let mut states = Vec::new();
        for bb in backbones(g, self.opts.backbone_cap)? {
            let state = match self.walk(g, &bb, &initial) {
                Ok(s) => s,
                Err(e @ AnalysisError::BackboneLimitExceeded { .. }) => return Err(e),
                Err(e) => {
                    self.note(
                        "backbone-failed",
                        format!("backbone {}: {e}", bb.nodes.join(" ")),
                    );
                    BackboneState {
                        memory: initial.map_values(|_| Expr::Unknown),
                        condition: Vec::new(),
                        bounds: g.edges().iter().map(|e| (e.id, Vec::new())).collect(),
                        covered: g.edges().iter().map(|e| e.id).collect(),
                        backbone: bb,
                        pruned: false,
                    }
                }
            };
            states.push(state);
        }
        if self.opts.prune_infeasible {
            for s in &mut states {
                if self.opts.solver.is_satisfiable(&s.condition_formula()) == SatResult::Unsat {
                    s.pruned = true;
                }
            }
        }
        let live: Vec<&BackboneState> = states.iter().filter(|s| !s.pruned).collect();
        let mut merged = BoundMap::new();
        for e in g.edges() {
            let sets: Vec<&BoundSet> = live.iter().map(|s| &s.bounds[&e.id]).collect();
            let set = if sets.is_empty() {
                vec![Expr::Const(0)]
            } else {
                bounds::max_merge(&sets, cap)
            };
            merged.insert(e.id, set);
        }
        Ok((states, merged))
    }

    fn walk(
        &mut self,
        g: &FlowGraph,
        bb: &Backbone,
        initial: &SymbolicMemory,
    ) -> Result<BackboneState, AnalysisError> {
        let cap = self.opts.set_cap;
        let mut theta = initial.clone();
        let mut phi: Vec<Formula> = Vec::new();
        let mut beta: BoundMap = g.edges().iter().map(|e| (e.id, vec![Expr::Const(0)])).collect();
        let mut covered = BTreeSet::new();
        for (j, eid) in bb.edges.iter().enumerate() {
            if let Some(l) = loop_at(g, bb, j) {
                let (lb, out) = self.process_loop(g, &l, &theta, &conj(&phi))?;
                for (e, set) in lb {
                    let cur = beta.get_mut(&e).expect("loop edges belong to the graph");
                    *cur = bounds::add(cur, &set, cap);
                    covered.insert(e);
                }
                theta = out;
            }
            let edge = g.edge(*eid).expect("backbone edges belong to the graph");
            match &edge.instr {
                Instruction::Assume(f) => {
                    let f = simplify_formula(&theta.apply_formula(f)?);
                    if !f.contains_unknown() && f != Formula::True {
                        phi.push(f);
                    }
                }
                Instruction::Assign(v, x) => {
                    let x = simplify(&theta.apply(x)?);
                    theta.set(v.clone(), x);
                }
            }
            let cur = beta.get_mut(eid).unwrap();
            *cur = bounds::plus_const(cur, 1, cap);
            covered.insert(*eid);
        }
        Ok(BackboneState {
            backbone: bb.clone(),
            memory: theta,
            condition: phi,
            bounds: beta,
            covered,
            pruned: false,
        })
    }

    /// Bounds for the edges of the loop `l` of `g`, entered in state
    /// (`theta_in`, `phi_in`), and the memory after the loop.
    pub fn process_loop(
        &mut self,
        g: &FlowGraph,
        l: &LoopRef,
        theta_in: &SymbolicMemory,
        phi_in: &Formula,
    ) -> Result<(BoundMap, SymbolicMemory), AnalysisError> {
        let cap = self.opts.set_cap;
        self.loops
            .entry(l.entry.clone())
            .or_default()
            .extend(l.body.iter().cloned());
        let q = induced_flowgraph(g, l);
        let nested_before = self.summaries.len();
        let (states, inner) = self.execute_program(&q)?;
        let nested = self.summaries.len() > nested_before;
        let states: Vec<BackboneState> = states.into_iter().filter(|s| !s.pruned).collect();

        let counters: Vec<CounterId> = states.iter().map(|_| self.fresh_counter()).collect();
        let memories: Vec<SymbolicMemory> = states.iter().map(|s| s.memory.clone()).collect();
        let summary = compute_summary(&memories, &counters);

        // state before an iteration along each path, after the counted ones
        let outer = |e: &Expr| simplify(&theta_in.compose(&summary.compose(e)));
        let counted: Vec<Formula> = states
            .iter()
            .map(|s| {
                let mut parts = vec![phi_in.clone()];
                for c in &s.condition {
                    let c = simplify_formula(&theta_in.compose_formula(&summary.compose_formula(c)));
                    if !c.contains_unknown() {
                        parts.push(c);
                    }
                }
                conj(&parts)
            })
            .collect();
        let transformed: BoundMap = inner
            .iter()
            .map(|(e, set)| {
                let mut out = Vec::new();
                for r in set {
                    let t = outer(r);
                    if !t.contains_unknown() {
                        bounds::insert(&mut out, t, cap);
                    }
                }
                (*e, out)
            })
            .collect();

        let paths_through = |e: EdgeId| -> BTreeSet<usize> {
            (0..states.len()).filter(|i| states[*i].covered.contains(&e)).collect()
        };
        let mut result = BoundMap::new();
        for edge in q.edges() {
            let e = edge.id;
            let through = paths_through(e);
            let ids: BTreeSet<CounterId> = through.iter().map(|i| counters[*i]).collect();
            let b_outer = self.bounds_for_paths(&through, &counters, &counted);
            if b_outer.is_empty() {
                self.note(
                    "no-iteration-bound",
                    format!("loop at {}: no bound on iterations through {}", l.entry, edge_name(edge)),
                );
            }
            let mut set = Vec::new();
            if b_outer.contains(&Expr::Const(0)) {
                set.push(Expr::Const(0));
            } else {
                for rho in &transformed[&e] {
                    if rho.is_kappa_free() {
                        for ro in &b_outer {
                            bounds::insert(&mut set, Expr::mul(rho.clone(), ro.clone()), cap);
                        }
                        continue;
                    }
                    let mut hit = false;
                    if let Some(form) = crate::symexpr::match_affine_counter_form(rho) {
                        for ro in &b_outer {
                            if let Some(total) =
                                self.nested_total(&form, &ids, &counters, &counted, ro, phi_in)
                            {
                                bounds::insert(&mut set, total, cap);
                                hit = true;
                            }
                        }
                    }
                    if !hit {
                        self.note(
                            "unmatched-inner-bound",
                            format!("loop at {}: inner bound {rho} on {} not used", l.entry, edge_name(edge)),
                        );
                    }
                }
            }
            result.insert(e, set);
        }

        // An iteration that never completes still runs the edges before the
        // point where it gets stuck.
        let stuck: Vec<&crate::ir::Edge> = q
            .edges()
            .iter()
            .filter(|e| transformed[&e.id].is_empty() || blocking(g, e))
            .collect();
        if !stuck.is_empty() {
            let none = BTreeSet::new();
            for edge in q.edges() {
                let reach = q.reachable_from(&edge.dst, &none);
                let hits = stuck
                    .iter()
                    .any(|s| s.id == edge.id || reach.contains(&s.src));
                if !hits {
                    continue;
                }
                let partial: BoundSet = transformed[&edge.id]
                    .iter()
                    .filter(|r| r.is_kappa_free())
                    .cloned()
                    .collect();
                let cur = result.get_mut(&edge.id).unwrap();
                *cur = bounds::add(cur, &partial, cap);
            }
        }

        // memory after the loop
        let mut exit = theta_in.map_values(|v| v.clone());
        let smart = if self.opts.smart_elimination && !nested && states.len() == 1 {
            smart_count(g, l, &states[0], counters[0], theta_in, &summary)
        } else {
            None
        };
        for (a, v) in summary.scalars() {
            let mut v = simplify(&theta_in.compose(v));
            if let Some((k, n)) = &smart {
                let b = BTreeMap::from([(SubstKey::Counter(*k), n.clone())]);
                v = simplify(&substitute(&v, &b));
            }
            exit.set(a.clone(), if v.is_kappa_free() { v } else { Expr::Unknown });
        }

        self.summaries.push(LoopSummary {
            entry: l.entry.clone(),
            paths: states
                .iter()
                .zip(&counters)
                .zip(&counted)
                .map(|((s, k), c)| LoopPath {
                    counter: *k,
                    backbone: s.backbone.clone(),
                    memory: s.memory.clone(),
                    condition: s.condition_formula(),
                    counted_condition: c.clone(),
                })
                .collect(),
            memory: summary,
            entry_memory: theta_in.clone(),
            exit_memory: exit.clone(),
        });
        Ok((result, exit))
    }

    /// Total visits of an edge whose per-iteration bound is the affine form
    /// `max{c, b + sum(a_i k_i)}`, over at most `rho_outer` iterations.
    fn nested_total(
        &mut self,
        form: &crate::symexpr::AffineCounterForm,
        through: &BTreeSet<CounterId>,
        counters: &[CounterId],
        counted: &[Formula],
        rho_outer: &Expr,
        phi_in: &Formula,
    ) -> Option<Expr> {
        let c = form.c.as_const().filter(|c| *c >= 0)?;
        let mut coeffs = BTreeMap::new();
        for (k, a) in &form.coeffs {
            coeffs.insert(*k, a.as_const()?);
        }
        let others: BTreeSet<CounterId> = coeffs
            .iter()
            .filter(|(k, a)| !through.contains(k) && **a != 0)
            .map(|(k, _)| *k)
            .collect();
        if others.iter().any(|k| !counters.contains(k)) {
            return None;
        }
        let mut b = form.b.clone();
        let a_others = others.iter().map(|k| coeffs[k].max(0)).max().unwrap_or(0);
        if a_others > 0 {
            let idx: BTreeSet<usize> = (0..counters.len()).filter(|i| others.contains(&counters[*i])).collect();
            let b_j = self.bounds_for_paths(&idx, counters, counted);
            let m = bounds::min_of(&b_j)?;
            if m.contains_unknown() {
                return None;
            }
            b = Expr::add(b, Expr::mul(Expr::Const(a_others), m));
        }
        let b = simplify(&b);
        let a = through.iter().map(|k| coeffs.get(k).copied().unwrap_or(0)).max()?;
        Some(closed_form_sum(c, &b, a, rho_outer, phi_in, &self.opts.solver))
    }

    /// Iteration bounds for the loop paths `idx`. When no inequality relates
    /// all of their counters, the per-path bounds are added up instead.
    fn bounds_for_paths(
        &mut self,
        idx: &BTreeSet<usize>,
        counters: &[CounterId],
        counted: &[Formula],
    ) -> BoundSet {
        let ids: BTreeSet<CounterId> = idx.iter().map(|i| counters[*i]).collect();
        let phi = disj(idx.iter().map(|i| counted[*i].clone()).collect());
        let found = self.compute_bounds(&ids, &phi);
        if !found.is_empty() || idx.len() < 2 {
            return found;
        }
        let mut parts = Vec::new();
        for i in idx {
            let one = self.compute_bounds(&BTreeSet::from([counters[*i]]), &counted[*i]);
            match bounds::min_of(&one) {
                Some(m) => parts.push(m),
                None => return Vec::new(),
            }
        }
        vec![simplify(&Expr::Add(parts))]
    }

    /// Upper bounds on the number of iterations along the paths counted by `ids`,
    /// given that `phi` holds before each of them.
    pub fn compute_bounds(&mut self, ids: &BTreeSet<CounterId>, phi: &Formula) -> BoundSet {
        let cap = self.opts.set_cap;
        if ids.is_empty() {
            return vec![Expr::Const(0)];
        }
        let zero: BTreeMap<SubstKey, Expr> =
            ids.iter().map(|k| (SubstKey::Counter(*k), Expr::Const(0))).collect();
        let mut first = vec![substitute_formula(phi, &zero)];
        for k in phi.counters() {
            if !ids.contains(&k) {
                first.push(Formula::le(Expr::Const(0), Expr::Counter(k)));
            }
        }
        match self.opts.solver.is_satisfiable(&conj(&first)) {
            SatResult::Unsat => return vec![Expr::Const(0)],
            SatResult::Unknown => self.note(
                "unknown-sat",
                "a loop entry condition could not be decided; assumed satisfiable".into(),
            ),
            SatResult::Sat => {}
        }
        let mut out = Vec::new();
        for ineq in extract_counter_inequalities(phi, ids) {
            let a_min = ids.iter().map(|k| ineq.coeffs[k]).min().unwrap();
            let e = Expr::max(vec![
                Expr::Const(0),
                Expr::ceil(ineq.bound, Expr::Const(a_min)),
            ]);
            if !bounds::insert(&mut out, e, cap) {
                self.note("set-cap", format!("bound set capped at {cap} members"));
            }
        }
        for geo in extract_geometric_inequalities(phi, ids) {
            let Ok(base) = u32::try_from(geo.base) else { continue };
            if base < 2 {
                continue;
            }
            // scale * base^k < bound, scale >= 1  ==>  k < log(bound / scale)
            let arg = match geo.scale.as_const() {
                Some(s) if s >= 1 => Expr::ceil(geo.bound, Expr::Const(s)),
                Some(_) => continue,
                None => {
                    let one = Formula::le(Expr::Const(1), geo.scale.clone());
                    if !self.opts.solver.proves(phi, &one) {
                        continue;
                    }
                    geo.bound
                }
            };
            bounds::insert(&mut out, Expr::log(base, arg), cap);
        }
        out
    }
}

fn edge_name(e: &crate::ir::Edge) -> String {
    format!("({},{})", e.src, e.dst)
}

/// An assumption that may fail with no alternative edge, ending the run.
fn blocking(g: &FlowGraph, e: &crate::ir::Edge) -> bool {
    matches!(&e.instr, Instruction::Assume(f) if simplify_formula(f) != Formula::True)
        && g.out_degree(&e.src) == 1
}

/// The exact iteration count of a simple loop: one path, leaving only
/// through the negated guard at the entry, whose condition reads `k < n`.
fn smart_count(
    g: &FlowGraph,
    l: &LoopRef,
    state: &BackboneState,
    k: CounterId,
    theta_in: &SymbolicMemory,
    summary: &SymbolicMemory,
) -> Option<(CounterId, Expr)> {
    if g.out_degree(&l.entry) != 2 {
        return None;
    }
    if l.body.iter().any(|v| *v != l.entry && g.out_degree(v) != 1) {
        return None;
    }
    let [guard] = state.condition.as_slice() else {
        return None;
    };
    let atom = simplify_formula(&theta_in.compose_formula(&summary.compose_formula(guard)));
    if !matches!(atom, Formula::Cmp(Rel::Lt | Rel::Le, ..)) || atom.contains_unknown() {
        return None;
    }
    let ids = BTreeSet::from([k]);
    let found = extract_counter_inequalities(&atom, &ids);
    let [ineq] = found.as_slice() else {
        return None;
    };
    if ineq.coeffs.len() != 1 || ineq.coeffs[&k] != 1 || !free(&ineq.bound) {
        return None;
    }
    Some((k, simplify(&Expr::max(vec![Expr::Const(0), ineq.bound.clone()]))))
}

/// `sum(K = 0 .. rho_outer - 1, max{c, b + a*K})`, as an arithmetic series
/// when the solver shows every term exceeds `c`.
pub fn closed_form_sum(
    c: i64,
    b: &Expr,
    a: i64,
    rho_outer: &Expr,
    phi_in: &Formula,
    solver: &crate::solver::Solver,
) -> Expr {
    let term = |k: Expr| Expr::add(b.clone(), Expr::mul(Expr::Const(a), k));
    let general = Expr::sum(
        "K",
        Expr::Const(0),
        Expr::sub(rho_outer.clone(), Expr::Const(1)),
        Expr::max(vec![Expr::Const(c), term(Expr::Index("K".into()))]),
    );
    // max{0, R} iterations run the same terms as R iterations
    let r = match rho_outer {
        Expr::Max(xs) if xs.len() == 2 && xs[0] == Expr::Const(0) => xs[1].clone(),
        other => other.clone(),
    };
    if r.as_const().is_some_and(|n| n <= 0) {
        return Expr::Const(0);
    }
    let smallest = if a >= 0 {
        b.clone()
    } else {
        term(Expr::sub(r.clone(), Expr::Const(1)))
    };
    let ctx = Formula::and(vec![
        phi_in.clone(),
        Formula::le(Expr::Const(1), r.clone()),
    ]);
    if !solver.proves(&ctx, &Formula::le(Expr::Const(c), smallest)) {
        return simplify(&general);
    }
    // R * (2b + a(R - 1)) / 2, exact because the numerator is even
    let twice = Expr::add(
        Expr::mul(Expr::Const(2), b.clone()),
        Expr::mul(Expr::Const(a), Expr::sub(r.clone(), Expr::Const(1))),
    );
    let series = Expr::div(Expr::mul(r.clone(), twice), Expr::Const(2));
    simplify(&Expr::ite(
        Formula::lt(Expr::Const(0), r),
        series,
        Expr::Const(0),
    ))
}
