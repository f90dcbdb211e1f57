//! Finite input domains and their enumeration.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::ConcreteInput;
use crate::ir::{FlowGraph, Instruction, NodeId};

/// Scalars range over `lo..=hi`; every array takes every size up to
/// `max_size` with entries in `-value_range..=value_range`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BoxSpec {
    pub lo: i64,
    pub hi: i64,
    pub max_size: usize,
    pub value_range: i64,
}

impl Default for BoxSpec {
    fn default() -> Self {
        BoxSpec {
            lo: -6,
            hi: 6,
            max_size: 5,
            value_range: 2,
        }
    }
}

impl fmt::Display for BoxSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{},{},{}", self.lo, self.hi, self.max_size, self.value_range)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid box `{0}`: expected lo:hi[,size[,val]] with lo <= hi")]
pub struct BoxSpecError(String);

impl FromStr for BoxSpec {
    type Err = BoxSpecError;

    /// `lo:hi,size,val`; the size and value parts may be left out.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || BoxSpecError(s.to_string());
        let mut parts = s.split(',');
        let range = parts.next().ok_or_else(err)?;
        let (lo, hi) = range.split_once(':').ok_or_else(err)?;
        let mut spec = BoxSpec {
            lo: lo.trim().parse().map_err(|_| err())?,
            hi: hi.trim().parse().map_err(|_| err())?,
            ..BoxSpec::default()
        };
        if let Some(size) = parts.next() {
            spec.max_size = size.trim().parse().map_err(|_| err())?;
        }
        if let Some(val) = parts.next() {
            spec.value_range = val.trim().parse().map_err(|_| err())?;
        }
        if parts.next().is_some() || spec.lo > spec.hi || spec.value_range < 0 {
            return Err(err());
        }
        Ok(spec)
    }
}

/// Scalars that may be read before any assignment on some path from begin.
/// All other scalars are local and start at 0.
pub fn input_variables(g: &FlowGraph) -> BTreeSet<String> {
    // must-defined sets, greatest fixpoint from "everything defined"
    let all: BTreeSet<String> = g.scalars().clone();
    let mut defined: BTreeMap<NodeId, BTreeSet<String>> =
        g.nodes().iter().map(|n| (n.clone(), all.clone())).collect();
    defined.insert(g.begin().clone(), BTreeSet::new());
    let mut changed = true;
    while changed {
        changed = false;
        for n in g.nodes() {
            if n == g.begin() {
                continue;
            }
            let mut acc: Option<BTreeSet<String>> = None;
            for e in g.in_edges(n) {
                let mut d = defined[&e.src].clone();
                if let Instruction::Assign(v, _) = &e.instr {
                    d.insert(v.clone());
                }
                acc = Some(match acc {
                    None => d,
                    Some(a) => a.intersection(&d).cloned().collect(),
                });
            }
            let acc = acc.unwrap_or_else(|| all.clone());
            if acc != defined[n] {
                defined.insert(n.clone(), acc);
                changed = true;
            }
        }
    }
    let mut inputs = BTreeSet::new();
    for e in g.edges() {
        let mut read = BTreeSet::new();
        match &e.instr {
            Instruction::Assign(_, x) => read.extend(x.symbols()),
            Instruction::Assume(f) => f.visit_exprs(&mut |x| {
                if let crate::symexpr::Expr::Symbol(s) = x {
                    read.insert(s.clone());
                }
            }),
        }
        inputs.extend(read.into_iter().filter(|v| !defined[&e.src].contains(v)));
    }
    inputs
}

/// Every input of a box, addressable by index so it can be split across threads.
#[derive(Clone, Debug)]
pub struct InputSpace {
    spec: BoxSpec,
    scalars: Vec<String>,
    arrays: Vec<String>,
    array_choices: u128,
    total: u128,
}

impl InputSpace {
    pub fn new(g: &FlowGraph, spec: BoxSpec) -> Self {
        let scalars: Vec<String> = input_variables(g).into_iter().collect();
        let arrays: Vec<String> = g.arrays().iter().cloned().collect();
        let v = (2 * spec.value_range + 1) as u128;
        let array_choices = (0..=spec.max_size as u32)
            .map(|s| v.saturating_pow(s))
            .fold(0u128, u128::saturating_add);
        let width = (spec.hi - spec.lo + 1) as u128;
        let total = std::iter::repeat_n(width, scalars.len())
            .chain(std::iter::repeat_n(array_choices, arrays.len()))
            .fold(1u128, u128::saturating_mul);
        InputSpace {
            spec,
            scalars,
            arrays,
            array_choices,
            total,
        }
    }

    pub fn len(&self) -> u128 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn scalars(&self) -> &[String] {
        &self.scalars
    }

    /// The `idx`-th input, in mixed radix with the first scalar varying slowest.
    pub fn get(&self, mut idx: u128) -> ConcreteInput {
        let mut input = ConcreteInput::default();
        let v = (2 * self.spec.value_range + 1) as u128;
        for a in self.arrays.iter().rev() {
            let mut k = idx % self.array_choices;
            idx /= self.array_choices;
            let mut size = 0u32;
            while k >= v.pow(size) {
                k -= v.pow(size);
                size += 1;
            }
            let mut vals = vec![0i64; size as usize];
            for slot in vals.iter_mut().rev() {
                *slot = (k % v) as i64 - self.spec.value_range;
                k /= v;
            }
            input.arrays.insert(a.clone(), vals);
        }
        let width = (self.spec.hi - self.spec.lo + 1) as u128;
        for s in self.scalars.iter().rev() {
            input.scalars.insert(s.clone(), self.spec.lo + (idx % width) as i64);
            idx /= width;
        }
        input
    }

    pub fn iter(&self) -> impl Iterator<Item = ConcreteInput> + '_ {
        (0..self.total).map(|i| self.get(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_flowgraph;

    #[test]
    fn parse_box() {
        let b: BoxSpec = "-0:6,6,2".parse().unwrap();
        assert_eq!((b.lo, b.hi, b.max_size, b.value_range), (0, 6, 6, 2));
        let b: BoxSpec = "-10:20".parse().unwrap();
        assert_eq!((b.lo, b.hi, b.max_size), (-10, 20, 5));
        assert!("3:1".parse::<BoxSpec>().is_err());
        assert!("1,2".parse::<BoxSpec>().is_err());
        assert_eq!(BoxSpec::default().to_string(), "-6:6,5,2");
    }

    #[test]
    fn locals_are_not_inputs() {
        let g = parse_flowgraph(
            "begin a\nend d\nedge a b assign i := 5\nedge b c assume i < x\nedge c b assign i := i + 2\nedge b d assume x <= i\n",
        )
        .unwrap();
        assert_eq!(input_variables(&g), BTreeSet::from(["x".to_string()]));
        // only one branch defines y
        let g = parse_flowgraph(
            "begin a\nend d\nedge a b assume 0 < x\nedge a c assume x <= 0\nedge b c assign y := 1\nedge c d assign z := y\n",
        )
        .unwrap();
        assert_eq!(input_variables(&g), BTreeSet::from(["x".to_string(), "y".to_string()]));
    }

    #[test]
    fn enumeration_is_exhaustive_and_distinct() {
        let g = parse_flowgraph("begin a\nend b\nedge a b assign y := A[x]\n").unwrap();
        let spec = BoxSpec {
            lo: 0,
            hi: 2,
            max_size: 2,
            value_range: 1,
        };
        let space = InputSpace::new(&g, spec);
        // 3 scalar values times 1 + 3 + 9 arrays
        assert_eq!(space.len(), 39);
        let all: BTreeSet<String> = space.iter().map(|i| format!("{i:?}")).collect();
        assert_eq!(all.len(), 39);
        assert!(space.iter().any(|i| i.arrays["A"] == [-1, 1] && i.scalars["x"] == 2));
    }
}
