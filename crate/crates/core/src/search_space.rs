//! Cell-based DAG search space.
//!
//! A cell has `num_inputs` input nodes followed by `num_intermediate_nodes`
//! intermediate nodes. Intermediate node `i` picks an unordered pair of
//! distinct predecessors among the `num_inputs + i` nodes before it and puts
//! one operation on each of the two chosen edges. The cell output
//! concatenates every intermediate node.
//!
//! An architecture is described by a flat vector of categorical parameters in
//! canonical order: cells in index order, nodes in index order, and within a
//! node the input-pair parameter followed by the operation of the edge from
//! the smaller predecessor, then the one from the larger predecessor.

use std::fmt;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::seed::Rng;

/// Operation labels of the DARTS cell space.
pub const DARTS_OPERATIONS: [&str; 8] = [
    "none",
    "max_pool_3x3",
    "avg_pool_3x3",
    "skip_connect",
    "sep_conv_3x3",
    "sep_conv_5x5",
    "dil_conv_3x3",
    "dil_conv_5x5",
];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SearchSpaceSpec {
    num_intermediate_nodes: usize,
    num_inputs: usize,
    operations: Vec<String>,
    num_cells: usize,
}

impl Default for SearchSpaceSpec {
    fn default() -> Self {
        Self::new(
            4,
            2,
            DARTS_OPERATIONS.iter().map(|s| s.to_string()).collect(),
            1,
        )
        .expect("default space is valid")
    }
}

impl SearchSpaceSpec {
    pub fn new(
        num_intermediate_nodes: usize,
        num_inputs: usize,
        operations: Vec<String>,
        num_cells: usize,
    ) -> Result<Self> {
        if num_intermediate_nodes == 0 {
            return Err(Error::InvalidSpace("need at least one intermediate node".into()));
        }
        if num_inputs < 2 {
            return Err(Error::InvalidSpace(
                "the first intermediate node needs two distinct predecessors, so num_inputs >= 2"
                    .into(),
            ));
        }
        if num_cells == 0 {
            return Err(Error::InvalidSpace("need at least one cell".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for op in &operations {
            if op.is_empty() || op.contains(['|', ';', '=', '(', ')', '[', ']', ',']) {
                return Err(Error::InvalidSpace(format!("illegal operation label {op:?}")));
            }
            if !seen.insert(op) {
                return Err(Error::InvalidSpace(format!("duplicate operation label {op:?}")));
            }
        }
        if operations.len() < 2 {
            return Err(Error::InvalidSpace("need at least two distinct operations".into()));
        }
        Ok(Self {
            num_intermediate_nodes,
            num_inputs,
            operations,
            num_cells,
        })
    }

    /// A space whose operations are labelled `op0`, `op1`, ...
    pub fn generic(
        num_intermediate_nodes: usize,
        num_inputs: usize,
        num_operations: usize,
        num_cells: usize,
    ) -> Result<Self> {
        let ops = (0..num_operations).map(|i| format!("op{i}")).collect();
        Self::new(num_intermediate_nodes, num_inputs, ops, num_cells)
    }

    /// DARTS labels when `num_operations <= 8`, generic labels beyond that.
    pub fn with_operation_count(
        num_intermediate_nodes: usize,
        num_inputs: usize,
        num_operations: usize,
        num_cells: usize,
    ) -> Result<Self> {
        if num_operations <= DARTS_OPERATIONS.len() {
            let ops = DARTS_OPERATIONS[..num_operations]
                .iter()
                .map(|s| s.to_string())
                .collect();
            Self::new(num_intermediate_nodes, num_inputs, ops, num_cells)
        } else {
            Self::generic(num_intermediate_nodes, num_inputs, num_operations, num_cells)
        }
    }

    pub fn num_intermediate_nodes(&self) -> usize {
        self.num_intermediate_nodes
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn operations(&self) -> &[String] {
        &self.operations
    }

    pub fn num_operations(&self) -> usize {
        self.operations.len()
    }

    pub fn operation_index(&self, label: &str) -> Option<usize> {
        self.operations.iter().position(|op| op == label)
    }

    /// Number of candidate predecessors of intermediate node `node`.
    pub fn num_predecessors(&self, node: usize) -> usize {
        self.num_inputs + node
    }

    /// Number of unordered predecessor pairs available to `node`.
    pub fn num_pairs(&self, node: usize) -> usize {
        let k = self.num_predecessors(node);
        k * (k - 1) / 2
    }

    /// Total nodes (genes) across all cells.
    pub fn num_genes(&self) -> usize {
        self.num_cells * self.num_intermediate_nodes
    }

    pub fn num_parameters(&self) -> usize {
        3 * self.num_genes()
    }

    /// Parameters in canonical order.
    pub fn parameters(&self) -> Vec<Parameter> {
        let mut out = Vec::with_capacity(self.num_parameters());
        for cell in 0..self.num_cells {
            for node in 0..self.num_intermediate_nodes {
                out.push(Parameter {
                    cell,
                    node,
                    kind: ParameterKind::InputPair,
                    levels: self.num_pairs(node),
                });
                for slot in 0..2 {
                    out.push(Parameter {
                        cell,
                        node,
                        kind: ParameterKind::Operation { slot },
                        levels: self.num_operations(),
                    });
                }
            }
        }
        out
    }

    /// Parameters with at least two levels.
    pub fn num_mutable_parameters(&self) -> usize {
        self.parameters().iter().filter(|p| p.levels >= 2).count()
    }

    /// Size of the space, or `None` on overflow.
    pub fn num_architectures(&self) -> Option<u128> {
        self.parameters()
            .iter()
            .try_fold(1u128, |acc, p| acc.checked_mul(p.levels as u128))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParameterKind {
    InputPair,
    Operation { slot: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Parameter {
    pub cell: usize,
    pub node: usize,
    pub kind: ParameterKind,
    pub levels: usize,
}

/// Index of the unordered pair `(p, q)`, `p < q`, ordered by `q` then `p`.
pub fn pair_index(p: usize, q: usize) -> usize {
    debug_assert!(p < q);
    q * (q - 1) / 2 + p
}

/// Inverse of [`pair_index`].
pub fn pair_from_index(index: usize) -> (usize, usize) {
    // q is the largest value with q(q-1)/2 <= index
    let mut q = 1;
    while (q + 1) * q / 2 <= index {
        q += 1;
    }
    (index - q * (q - 1) / 2, q)
}

/// One intermediate node: its two predecessors (ascending) and the operation
/// on each incoming edge, in the same order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeGene {
    pub inputs: [usize; 2],
    pub ops: [usize; 2],
}

/// A concrete architecture: one [`NodeGene`] per intermediate node per cell,
/// flattened cell-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Architecture {
    genes: Vec<NodeGene>,
}

impl Architecture {
    pub fn from_genes(spec: &SearchSpaceSpec, genes: Vec<NodeGene>) -> Result<Self> {
        let arch = Self { genes };
        arch.validate(spec)?;
        Ok(arch)
    }

    pub fn genes(&self) -> &[NodeGene] {
        &self.genes
    }

    pub fn gene(&self, spec: &SearchSpaceSpec, cell: usize, node: usize) -> &NodeGene {
        &self.genes[cell * spec.num_intermediate_nodes() + node]
    }

    pub fn validate(&self, spec: &SearchSpaceSpec) -> Result<()> {
        if self.genes.len() != spec.num_genes() {
            return Err(Error::SpaceMismatch(format!(
                "expected {} node genes, found {}",
                spec.num_genes(),
                self.genes.len()
            )));
        }
        for (g, gene) in self.genes.iter().enumerate() {
            let node = g % spec.num_intermediate_nodes();
            let [p, q] = gene.inputs;
            if !(p < q && q < spec.num_predecessors(node)) {
                return Err(Error::SpaceMismatch(format!(
                    "node {node} has invalid input pair ({p},{q})"
                )));
            }
            if gene.ops.iter().any(|&op| op >= spec.num_operations()) {
                return Err(Error::SpaceMismatch(format!(
                    "node {node} uses an operation outside the space"
                )));
            }
        }
        Ok(())
    }

    /// Flat parameter values in canonical order.
    pub fn parameter_values(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.genes.len() * 3);
        for gene in &self.genes {
            out.push(pair_index(gene.inputs[0], gene.inputs[1]));
            out.extend_from_slice(&gene.ops);
        }
        out
    }

    pub fn from_parameter_values(spec: &SearchSpaceSpec, values: &[usize]) -> Result<Self> {
        if values.len() != spec.num_parameters() {
            return Err(Error::SpaceMismatch(format!(
                "expected {} parameter values, found {}",
                spec.num_parameters(),
                values.len()
            )));
        }
        let genes = values
            .chunks_exact(3)
            .map(|c| {
                let (p, q) = pair_from_index(c[0]);
                NodeGene {
                    inputs: [p, q],
                    ops: [c[1], c[2]],
                }
            })
            .collect();
        Self::from_genes(spec, genes)
    }

    fn set_parameter(&mut self, index: usize, value: usize) {
        let gene = &mut self.genes[index / 3];
        match index % 3 {
            0 => {
                let (p, q) = pair_from_index(value);
                gene.inputs = [p, q];
            }
            slot => gene.ops[slot - 1] = value,
        }
    }

    /// Canonical flat text form, e.g.
    /// `0/0:pair=(0,1);op[0]=skip_connect;op[1]=sep_conv_3x3|0/1:...`.
    pub fn to_canonical_string(&self, spec: &SearchSpaceSpec) -> String {
        let mut parts = Vec::with_capacity(self.genes.len());
        for (g, gene) in self.genes.iter().enumerate() {
            let cell = g / spec.num_intermediate_nodes();
            let node = g % spec.num_intermediate_nodes();
            let [p, q] = gene.inputs;
            parts.push(format!(
                "{cell}/{node}:pair=({p},{q});op[{p}]={};op[{q}]={}",
                spec.operations()[gene.ops[0]],
                spec.operations()[gene.ops[1]],
            ));
        }
        parts.join("|")
    }

    pub fn parse_canonical(spec: &SearchSpaceSpec, text: &str) -> Result<Self> {
        let bad = |why: &str| Error::Parse(format!("{why} in architecture {text:?}"));
        let mut genes = Vec::new();
        for (g, part) in text.split('|').enumerate() {
            let (head, body) = part.split_once(':').ok_or_else(|| bad("missing ':'"))?;
            let (cell, node) = head.split_once('/').ok_or_else(|| bad("missing '/'"))?;
            let cell: usize = cell.parse().map_err(|_| bad("bad cell index"))?;
            let node: usize = node.parse().map_err(|_| bad("bad node index"))?;
            if spec.num_intermediate_nodes() == 0
                || cell != g / spec.num_intermediate_nodes()
                || node != g % spec.num_intermediate_nodes()
            {
                return Err(bad("nodes out of canonical order"));
            }
            let fields: Vec<&str> = body.split(';').collect();
            if fields.len() != 3 {
                return Err(bad("expected pair and two operations"));
            }
            let pair = fields[0]
                .strip_prefix("pair=(")
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| bad("bad pair field"))?;
            let (p, q) = pair.split_once(',').ok_or_else(|| bad("bad pair field"))?;
            let p: usize = p.parse().map_err(|_| bad("bad predecessor"))?;
            let q: usize = q.parse().map_err(|_| bad("bad predecessor"))?;
            let mut ops = [0usize; 2];
            for (slot, (field, pred)) in fields[1..].iter().zip([p, q]).enumerate() {
                let rest = field
                    .strip_prefix(&format!("op[{pred}]="))
                    .ok_or_else(|| bad("operation field does not match pair"))?;
                ops[slot] = spec
                    .operation_index(rest)
                    .ok_or_else(|| bad("unknown operation label"))?;
            }
            genes.push(NodeGene {
                inputs: [p, q],
                ops,
            });
        }
        Self::from_genes(spec, genes)
    }

    /// Number of parameters (input pairs and edge-slot operations) whose
    /// values differ. Operations are compared by edge slot even when the
    /// input pairs differ.
    pub fn edit_distance(&self, other: &Architecture) -> Result<usize> {
        if self.genes.len() != other.genes.len() {
            return Err(Error::SpaceMismatch(format!(
                "architectures have {} and {} node genes",
                self.genes.len(),
                other.genes.len()
            )));
        }
        Ok(self
            .genes
            .iter()
            .zip(&other.genes)
            .map(|(a, b)| {
                usize::from(a.inputs != b.inputs)
                    + usize::from(a.ops[0] != b.ops[0])
                    + usize::from(a.ops[1] != b.ops[1])
            })
            .sum())
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (g, gene) in self.genes.iter().enumerate() {
            if g > 0 {
                f.write_str("|")?;
            }
            write!(
                f,
                "({},{}):{},{}",
                gene.inputs[0], gene.inputs[1], gene.ops[0], gene.ops[1]
            )?;
        }
        Ok(())
    }
}

/// Free-function form of [`Architecture::edit_distance`].
pub fn edit_distance(a: &Architecture, b: &Architecture) -> Result<usize> {
    a.edit_distance(b)
}

/// Draws an architecture uniformly: each input pair uniformly over the
/// node's unordered pairs, each edge operation uniformly, all independent.
pub fn sample_uniform(spec: &SearchSpaceSpec, rng: &mut Rng) -> Architecture {
    let mut genes = Vec::with_capacity(spec.num_genes());
    for _cell in 0..spec.num_cells() {
        for node in 0..spec.num_intermediate_nodes() {
            let (p, q) = pair_from_index(rng.random_range(0..spec.num_pairs(node)));
            let ops = [
                rng.random_range(0..spec.num_operations()),
                rng.random_range(0..spec.num_operations()),
            ];
            genes.push(NodeGene { inputs: [p, q], ops });
        }
    }
    Architecture { genes }
}

/// Applies `n_edits` edits to distinct, randomly chosen mutable parameters,
/// each resampled uniformly among its other levels. The result is at edit
/// distance exactly `n_edits` from `arch`.
pub fn mutate(
    spec: &SearchSpaceSpec,
    arch: &Architecture,
    rng: &mut Rng,
    n_edits: usize,
) -> Result<Architecture> {
    let mutable: Vec<(usize, usize)> = spec
        .parameters()
        .iter()
        .enumerate()
        .filter(|(_, p)| p.levels >= 2)
        .map(|(i, p)| (i, p.levels))
        .collect();
    if n_edits == 0 || n_edits > mutable.len() {
        return Err(Error::InsufficientParameters {
            requested: n_edits,
            available: mutable.len(),
        });
    }
    let values = arch.parameter_values();
    let mut out = arch.clone();
    for pick in rand::seq::index::sample(rng, mutable.len(), n_edits).into_iter() {
        let (param, levels) = mutable[pick];
        let current = values[param];
        let mut next = rng.random_range(0..levels - 1);
        if next >= current {
            next += 1;
        }
        out.set_parameter(param, next);
    }
    Ok(out)
}

/// Every architecture at edit distance exactly one, in canonical parameter
/// order with alternative levels ascending.
pub fn neighbors(spec: &SearchSpaceSpec, arch: &Architecture) -> Vec<Architecture> {
    let params = spec.parameters();
    let values = arch.parameter_values();
    let mut out = Vec::with_capacity(params.iter().map(|p| p.levels.saturating_sub(1)).sum());
    for (i, param) in params.iter().enumerate() {
        for level in 0..param.levels {
            if level != values[i] {
                let mut n = arch.clone();
                n.set_parameter(i, level);
                out.push(n);
            }
        }
    }
    out
}

/// Enumerates the whole space in lexicographic parameter order. Intended for
/// small spaces; refuses more than `limit` architectures.
pub fn enumerate_all(spec: &SearchSpaceSpec, limit: usize) -> Result<Vec<Architecture>> {
    let total = spec
        .num_architectures()
        .filter(|&n| n <= limit as u128)
        .ok_or_else(|| Error::InvalidSpace(format!("space has more than {limit} architectures")))?;
    let params = spec.parameters();
    let mut values = vec![0usize; params.len()];
    let mut out = Vec::with_capacity(total as usize);
    loop {
        out.push(Architecture::from_parameter_values(spec, &values)?);
        let mut i = params.len();
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            values[i] += 1;
            if values[i] < params[i].levels {
                break;
            }
            values[i] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use proptest::prelude::*;
    use std::collections::{HashMap, HashSet};

    fn tiny() -> SearchSpaceSpec {
        SearchSpaceSpec::generic(1, 2, 2, 1).unwrap()
    }

    fn small() -> SearchSpaceSpec {
        // 1 * 3 pairs * 2^4 ops = 48 architectures
        SearchSpaceSpec::generic(2, 2, 2, 1).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(SearchSpaceSpec::generic(0, 2, 2, 1).is_err());
        assert!(SearchSpaceSpec::generic(1, 1, 2, 1).is_err());
        assert!(SearchSpaceSpec::generic(1, 2, 1, 1).is_err());
        assert!(SearchSpaceSpec::generic(1, 2, 2, 0).is_err());
        assert!(SearchSpaceSpec::new(1, 2, vec!["a".into(), "a".into()], 1).is_err());
        let d = SearchSpaceSpec::default();
        assert_eq!(d.num_intermediate_nodes(), 4);
        assert_eq!(d.num_operations(), 8);
        assert_eq!(d.num_predecessors(3), 5);
    }

    #[test]
    fn pair_index_roundtrip() {
        let mut seen = HashSet::new();
        for q in 1..12 {
            for p in 0..q {
                let i = pair_index(p, q);
                assert_eq!(pair_from_index(i), (p, q));
                assert!(seen.insert(i));
            }
        }
        assert_eq!(seen.len(), 66);
        assert!(seen.iter().all(|&i| i < 66));
    }

    #[test]
    fn single_pair_space_sampling() {
        let spec = tiny();
        let mut rng = rng_from_seed(3);
        for _ in 0..50 {
            let a = sample_uniform(&spec, &mut rng);
            assert_eq!(a.genes()[0].inputs, [0, 1]);
            assert!(a.genes()[0].ops.iter().all(|&o| o < 2));
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = SearchSpaceSpec::default();
        let a = sample_uniform(&spec, &mut rng_from_seed(11));
        let b = sample_uniform(&spec, &mut rng_from_seed(11));
        assert_eq!(a, b);
    }

    #[test]
    fn pair_frequencies_are_uniform() {
        // node 1 has predecessors {0,1,2}: three pairs, each 1/3
        let spec = SearchSpaceSpec::generic(2, 2, 2, 1).unwrap();
        let mut rng = rng_from_seed(5);
        let mut counts: HashMap<[usize; 2], usize> = HashMap::new();
        let n = 30_000;
        for _ in 0..n {
            *counts
                .entry(sample_uniform(&spec, &mut rng).genes()[1].inputs)
                .or_default() += 1;
        }
        let expected: HashSet<[usize; 2]> = [[0, 1], [0, 2], [1, 2]].into();
        assert_eq!(counts.keys().copied().collect::<HashSet<_>>(), expected);
        for c in counts.values() {
            assert!((*c as f64 / n as f64 - 1.0 / 3.0).abs() < 0.02);
        }
    }

    #[test]
    fn uniform_over_small_space() {
        let spec = small();
        let all = enumerate_all(&spec, 5000).unwrap();
        assert_eq!(all.len(), 48);
        let mut rng = rng_from_seed(99);
        let draws = 100_000usize;
        let mut counts: HashMap<Architecture, usize> = HashMap::new();
        for _ in 0..draws {
            *counts.entry(sample_uniform(&spec, &mut rng)).or_default() += 1;
        }
        let p = 1.0 / all.len() as f64;
        let mean = draws as f64 * p;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for a in &all {
            let c = *counts.get(a).unwrap_or(&0) as f64;
            assert!((c - mean).abs() <= 3.0 * sigma, "{a}: {c} vs {mean}");
        }
    }

    #[test]
    fn mutate_hits_requested_distance() {
        let spec = SearchSpaceSpec::default();
        let mut rng = rng_from_seed(1);
        let a = sample_uniform(&spec, &mut rng);
        let m1 = mutate(&spec, &a, &mut rng, 1).unwrap();
        assert_eq!(a.edit_distance(&m1).unwrap(), 1);
        let m8 = mutate(&spec, &a, &mut rng, 8).unwrap();
        let brute = a
            .parameter_values()
            .iter()
            .zip(m8.parameter_values())
            .filter(|(x, y)| **x != *y)
            .count();
        assert_eq!(brute, 8);
        assert_eq!(a.edit_distance(&m8).unwrap(), 8);
        m8.validate(&spec).unwrap();
    }

    #[test]
    fn mutate_forced_alternative() {
        // two binary operation parameters, pair fixed: two edits force the
        // unique architecture with both operations flipped
        let spec = tiny();
        let a = Architecture::from_genes(
            &spec,
            vec![NodeGene {
                inputs: [0, 1],
                ops: [0, 1],
            }],
        )
        .unwrap();
        let m = mutate(&spec, &a, &mut rng_from_seed(0), 2).unwrap();
        assert_eq!(m.genes()[0].ops, [1, 0]);
        // one edit flips exactly one operation to its only alternative
        let m = mutate(&spec, &a, &mut rng_from_seed(4), 1).unwrap();
        assert!(m.genes()[0].ops == [1, 1] || m.genes()[0].ops == [0, 0]);
    }

    #[test]
    fn mutate_rejects_too_many_edits() {
        let spec = tiny();
        let a = sample_uniform(&spec, &mut rng_from_seed(0));
        let err = mutate(&spec, &a, &mut rng_from_seed(0), 3).unwrap_err();
        assert!(err.to_string().contains("insufficient parameters"));
        assert!(mutate(&spec, &a, &mut rng_from_seed(0), 0).is_err());
    }

    #[test]
    fn tiny_space_neighbors() {
        let spec = tiny();
        let all = enumerate_all(&spec, 10).unwrap();
        assert_eq!(all.len(), 4);
        for a in &all {
            let n = neighbors(&spec, a);
            assert_eq!(n.len(), 2);
            let brute: Vec<_> = all
                .iter()
                .filter(|b| a.edit_distance(b).unwrap() == 1)
                .cloned()
                .collect();
            let got: HashSet<_> = n.into_iter().collect();
            assert_eq!(got, brute.into_iter().collect());
        }
    }

    #[test]
    fn neighbor_count_identity() {
        let spec = SearchSpaceSpec::default();
        let a = sample_uniform(&spec, &mut rng_from_seed(8));
        let expected: usize = spec.parameters().iter().map(|p| p.levels - 1).sum();
        let n = neighbors(&spec, &a);
        assert_eq!(n.len(), expected);
        assert!(n.iter().all(|b| a.edit_distance(b).unwrap() == 1));
        assert_eq!(n.iter().collect::<HashSet<_>>().len(), n.len());
    }

    #[test]
    fn hand_constructed_distance() {
        let spec = SearchSpaceSpec::generic(2, 2, 3, 1).unwrap();
        let a = Architecture::from_genes(
            &spec,
            vec![
                NodeGene { inputs: [0, 1], ops: [0, 1] },
                NodeGene { inputs: [0, 2], ops: [2, 2] },
            ],
        )
        .unwrap();
        let b = Architecture::from_genes(
            &spec,
            vec![
                NodeGene { inputs: [0, 1], ops: [1, 1] },
                NodeGene { inputs: [1, 2], ops: [2, 0] },
            ],
        )
        .unwrap();
        assert_eq!(a.edit_distance(&b).unwrap(), 3);
        assert_eq!(a.edit_distance(&a).unwrap(), 0);
    }

    #[test]
    fn distance_rejects_mismatched_spaces() {
        let a = sample_uniform(&tiny(), &mut rng_from_seed(0));
        let b = sample_uniform(&small(), &mut rng_from_seed(0));
        assert!(a.edit_distance(&b).is_err());
    }

    #[test]
    fn canonical_text_form() {
        let spec = SearchSpaceSpec::generic(2, 2, 3, 1).unwrap();
        let a = Architecture::from_genes(
            &spec,
            vec![
                NodeGene { inputs: [0, 1], ops: [0, 1] },
                NodeGene { inputs: [0, 2], ops: [2, 2] },
            ],
        )
        .unwrap();
        let text = a.to_canonical_string(&spec);
        assert_eq!(
            text,
            "0/0:pair=(0,1);op[0]=op0;op[1]=op1|0/1:pair=(0,2);op[0]=op2;op[2]=op2"
        );
        assert_eq!(Architecture::parse_canonical(&spec, &text).unwrap(), a);
        assert!(Architecture::parse_canonical(&spec, "0/0:pair=(0,1);op[0]=op0").is_err());
        assert!(Architecture::parse_canonical(
            &spec,
            "0/0:pair=(0,1);op[0]=op9;op[1]=op1|0/1:pair=(0,2);op[0]=op2;op[2]=op2"
        )
        .is_err());
    }

    #[test]
    fn neighborhood_matches_brute_force_on_small_space() {
        let spec = SearchSpaceSpec::generic(2, 2, 3, 1).unwrap();
        let all = enumerate_all(&spec, 5000).unwrap();
        assert_eq!(all.len(), 3 * 81);
        for a in all.iter().step_by(7) {
            let got: HashSet<_> = neighbors(&spec, a).into_iter().collect();
            let brute: HashSet<_> = all
                .iter()
                .filter(|b| a.edit_distance(b).unwrap() == 1)
                .cloned()
                .collect();
            assert_eq!(got, brute);
        }
    }

    proptest! {
        #[test]
        fn distance_is_a_metric(s1 in any::<u64>(), s2 in any::<u64>(), s3 in any::<u64>()) {
            let spec = SearchSpaceSpec::with_operation_count(3, 2, 5, 2).unwrap();
            let a = sample_uniform(&spec, &mut rng_from_seed(s1));
            let b = sample_uniform(&spec, &mut rng_from_seed(s2));
            let c = sample_uniform(&spec, &mut rng_from_seed(s3));
            let ab = a.edit_distance(&b).unwrap();
            prop_assert_eq!(ab, b.edit_distance(&a).unwrap());
            prop_assert!(a.edit_distance(&c).unwrap() <= ab + b.edit_distance(&c).unwrap());
        }

        #[test]
        fn mutation_and_text_form_close_over_the_space(seed in any::<u64>(), edits in 1usize..=11) {
            let spec = SearchSpaceSpec::with_operation_count(4, 2, 8, 1).unwrap();
            let mut rng = rng_from_seed(seed);
            let a = sample_uniform(&spec, &mut rng);
            let m = mutate(&spec, &a, &mut rng, edits).unwrap();
            prop_assert!(m.validate(&spec).is_ok());
            prop_assert_eq!(a.edit_distance(&m).unwrap(), edits);
            let text = m.to_canonical_string(&spec);
            prop_assert_eq!(Architecture::parse_canonical(&spec, &text).unwrap(), m);
        }
    }
}
