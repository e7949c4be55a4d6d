//! Architecture encodings.
//!
//! * Path encoding: one binary feature per operation-label sequence that can
//!   be traced from a cell input to the cell output, truncated to the most
//!   frequent sequences under uniform sampling.
//! * Tabular encoding: one categorical column per input-pair choice and one
//!   per potential edge, with `.missing` on edges the input pair does not
//!   select.

use std::collections::HashSet;
use std::io::Write;

use crate::error::{Error, Result};
use crate::search_space::{
    pair_from_index, pair_index, sample_uniform, Architecture, NodeGene, SearchSpaceSpec,
};
use crate::seed::Rng;

/// Level name used for inactive operation columns.
pub const MISSING_LEVEL: &str = ".missing";

/// Monte Carlo sample count used to rank paths by occurrence probability.
pub const PATH_PROBABILITY_SAMPLES: usize = 10_000;

/// Default number of retained paths.
pub const DEFAULT_TRUNCATION: usize = 128;

const MAX_PATHS: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Numeric,
    Categorical { levels: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodingKind {
    Path,
    Tabular,
}

impl EncodingKind {
    pub fn label(self) -> &'static str {
        match self {
            EncodingKind::Path => "path",
            EncodingKind::Tabular => "tabular",
        }
    }
}

/// A path feature: the operation labels along a path, within one cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PathKey {
    pub cell: usize,
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct PathEntry {
    pub key: PathKey,
    pub occurrence_prob: f64,
}

/// Enumerates path identities densely: per cell, sequences ordered by length
/// then by base-`ops` value of their labels.
#[derive(Debug, Clone)]
struct PathIndexer {
    n_ops: usize,
    max_len: usize,
    per_cell: usize,
    // offsets[len - 1] = number of sequences shorter than len
    offsets: Vec<usize>,
}

impl PathIndexer {
    fn new(spec: &SearchSpaceSpec) -> Result<Self> {
        let n_ops = spec.num_operations() as u128;
        let mut total = 0u128;
        let mut pow = 1u128;
        let mut offsets = Vec::new();
        for _ in 0..spec.num_intermediate_nodes() {
            offsets.push(total);
            pow = pow.saturating_mul(n_ops);
            total = total.saturating_add(pow);
            if total.saturating_mul(spec.num_cells() as u128) > MAX_PATHS {
                return Err(Error::SpaceTooLarge(
                    total.saturating_mul(spec.num_cells() as u128),
                ));
            }
        }
        Ok(Self {
            n_ops: spec.num_operations(),
            max_len: spec.num_intermediate_nodes(),
            per_cell: total as usize,
            offsets: offsets.into_iter().map(|o| o as usize).collect(),
        })
    }

    fn total(&self, cells: usize) -> usize {
        self.per_cell * cells
    }

    fn id(&self, cell: usize, labels: &[usize]) -> usize {
        let packed = labels.iter().fold(0usize, |acc, &l| acc * self.n_ops + l);
        cell * self.per_cell + self.offsets[labels.len() - 1] + packed
    }

    fn key(&self, id: usize) -> PathKey {
        let cell = id / self.per_cell;
        let rest = id % self.per_cell;
        let len = (1..=self.max_len)
            .rev()
            .find(|&l| self.offsets[l - 1] <= rest)
            .expect("offsets start at zero");
        let mut packed = rest - self.offsets[len - 1];
        let mut labels = vec![0; len];
        for slot in labels.iter_mut().rev() {
            *slot = packed % self.n_ops;
            packed /= self.n_ops;
        }
        PathKey { cell, labels }
    }
}

/// Dense ids of every distinct label sequence present in `arch`.
fn architecture_path_ids(
    spec: &SearchSpaceSpec,
    indexer: &PathIndexer,
    arch: &Architecture,
) -> HashSet<usize> {
    let mut ids = HashSet::new();
    let nodes = spec.num_intermediate_nodes();
    for cell in 0..spec.num_cells() {
        // label sequences of all input-to-node paths, per intermediate node
        let mut ending: Vec<Vec<Vec<usize>>> = Vec::with_capacity(nodes);
        for node in 0..nodes {
            let gene = arch.gene(spec, cell, node);
            let mut here = Vec::new();
            for (pred, op) in gene.inputs.iter().zip(gene.ops) {
                if *pred < spec.num_inputs() {
                    here.push(vec![op]);
                } else {
                    for seq in &ending[pred - spec.num_inputs()] {
                        let mut s = seq.clone();
                        s.push(op);
                        here.push(s);
                    }
                }
            }
            for seq in &here {
                ids.insert(indexer.id(cell, seq));
            }
            ending.push(here);
        }
    }
    ids
}

/// Ranked path features with the retained prefix.
#[derive(Debug, Clone)]
pub struct PathTable {
    spec: SearchSpaceSpec,
    indexer: PathIndexer,
    /// All paths, most probable first.
    entries: Vec<PathEntry>,
    truncation_length: usize,
    /// dense path id -> retained column
    column_of: Vec<u32>,
}

const NOT_RETAINED: u32 = u32::MAX;

/// Ranks every path by its Monte Carlo occurrence probability over
/// [`PATH_PROBABILITY_SAMPLES`] uniform architectures and keeps the top
/// `truncation_length`. Ties are broken lexicographically by `(cell, labels)`.
pub fn build_path_table(
    spec: &SearchSpaceSpec,
    truncation_length: usize,
    rng: &mut Rng,
) -> Result<PathTable> {
    if truncation_length == 0 {
        return Err(Error::Config("truncation length must be at least 1".into()));
    }
    let indexer = PathIndexer::new(spec)?;
    let total = indexer.total(spec.num_cells());
    let mut counts = vec![0u32; total];
    for _ in 0..PATH_PROBABILITY_SAMPLES {
        let arch = sample_uniform(spec, rng);
        for id in architecture_path_ids(spec, &indexer, &arch) {
            counts[id] += 1;
        }
    }
    let mut entries: Vec<PathEntry> = (0..total)
        .map(|id| PathEntry {
            key: indexer.key(id),
            occurrence_prob: counts[id] as f64 / PATH_PROBABILITY_SAMPLES as f64,
        })
        .collect();
    entries.sort_by(|a, b| {
        b.occurrence_prob
            .total_cmp(&a.occurrence_prob)
            .then_with(|| a.key.cmp(&b.key))
    });
    let mut column_of = vec![NOT_RETAINED; total];
    let kept = truncation_length.min(total);
    for (col, entry) in entries.iter().take(kept).enumerate() {
        column_of[indexer.id(entry.key.cell, &entry.key.labels)] = col as u32;
    }
    Ok(PathTable {
        spec: spec.clone(),
        indexer,
        entries,
        truncation_length,
        column_of,
    })
}

impl PathTable {
    pub fn spec(&self) -> &SearchSpaceSpec {
        &self.spec
    }

    pub fn truncation_length(&self) -> usize {
        self.truncation_length
    }

    pub fn total_paths(&self) -> usize {
        self.entries.len()
    }

    pub fn encoding_length(&self) -> usize {
        self.truncation_length.min(self.entries.len())
    }

    /// All paths ranked, retained ones first.
    pub fn entries(&self) -> &[PathEntry] {
        &self.entries
    }

    pub fn retained(&self) -> &[PathEntry] {
        &self.entries[..self.encoding_length()]
    }

    pub fn label_sequence(&self, key: &PathKey) -> String {
        let labels: Vec<&str> = key
            .labels
            .iter()
            .map(|&l| self.spec.operations()[l].as_str())
            .collect();
        format!("c{}:{}", key.cell, labels.join(">"))
    }

    /// Writes the ranking as CSV: `rank,label_sequence,occurrence_prob,retained`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rank", "label_sequence", "occurrence_prob", "retained"])?;
        for (rank, entry) in self.entries.iter().enumerate() {
            w.write_record([
                (rank + 1).to_string(),
                self.label_sequence(&entry.key),
                format!("{}", entry.occurrence_prob),
                (rank < self.encoding_length()).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Binary path features of `arch`.
    pub fn encode(&self, arch: &Architecture) -> Result<Vec<f64>> {
        arch.validate(&self.spec)?;
        let mut out = vec![0.0; self.encoding_length()];
        for id in architecture_path_ids(&self.spec, &self.indexer, arch) {
            let col = self.column_of[id];
            if col != NOT_RETAINED {
                out[col as usize] = 1.0;
            }
        }
        Ok(out)
    }
}

pub fn encode_path(arch: &Architecture, table: &PathTable) -> Result<Vec<f64>> {
    table.encode(arch)
}

/// One categorical value of a tabular row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    Value(usize),
    Missing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TabularColumn {
    InputPair { cell: usize, node: usize },
    EdgeOperation { cell: usize, node: usize, predecessor: usize },
}

/// Column layout of the tabular encoding, in canonical parameter order.
#[derive(Debug, Clone)]
pub struct TabularSchema {
    spec: SearchSpaceSpec,
    columns: Vec<TabularColumn>,
}

impl TabularSchema {
    pub fn new(spec: &SearchSpaceSpec) -> Self {
        let mut columns = Vec::new();
        for cell in 0..spec.num_cells() {
            for node in 0..spec.num_intermediate_nodes() {
                columns.push(TabularColumn::InputPair { cell, node });
                for predecessor in 0..spec.num_predecessors(node) {
                    columns.push(TabularColumn::EdgeOperation {
                        cell,
                        node,
                        predecessor,
                    });
                }
            }
        }
        Self {
            spec: spec.clone(),
            columns,
        }
    }

    pub fn spec(&self) -> &SearchSpaceSpec {
        &self.spec
    }

    pub fn columns(&self) -> &[TabularColumn] {
        &self.columns
    }

    pub fn column_name(&self, col: usize) -> String {
        match self.columns[col] {
            TabularColumn::InputPair { cell, node } => format!("c{cell}_n{node}_pair"),
            TabularColumn::EdgeOperation {
                cell,
                node,
                predecessor,
            } => format!("c{cell}_n{node}_op{predecessor}"),
        }
    }

    /// Categorical column kinds. Operation columns carry one extra level for
    /// `.missing`, which is coded as `num_operations`.
    pub fn column_kinds(&self) -> Vec<ColumnKind> {
        self.columns
            .iter()
            .map(|c| match *c {
                TabularColumn::InputPair { node, .. } => ColumnKind::Categorical {
                    levels: self.spec.num_pairs(node),
                },
                TabularColumn::EdgeOperation { .. } => ColumnKind::Categorical {
                    levels: self.spec.num_operations() + 1,
                },
            })
            .collect()
    }

    pub fn encode(&self, arch: &Architecture) -> TabularRow {
        let mut values = Vec::with_capacity(self.columns.len());
        for column in &self.columns {
            let value = match *column {
                TabularColumn::InputPair { cell, node } => {
                    let g = arch.gene(&self.spec, cell, node);
                    Level::Value(pair_index(g.inputs[0], g.inputs[1]))
                }
                TabularColumn::EdgeOperation {
                    cell,
                    node,
                    predecessor,
                } => {
                    let g = arch.gene(&self.spec, cell, node);
                    match g.inputs.iter().position(|&p| p == predecessor) {
                        Some(slot) => Level::Value(g.ops[slot]),
                        None => Level::Missing,
                    }
                }
            };
            values.push(value);
        }
        TabularRow { values }
    }

    pub fn decode(&self, row: &TabularRow) -> Result<Architecture> {
        if row.values.len() != self.columns.len() {
            return Err(Error::SchemaMismatch(format!(
                "tabular row has {} values, schema has {} columns",
                row.values.len(),
                self.columns.len()
            )));
        }
        let mut genes = Vec::with_capacity(self.spec.num_genes());
        let mut col = 0;
        for _cell in 0..self.spec.num_cells() {
            for node in 0..self.spec.num_intermediate_nodes() {
                let Level::Value(pair) = row.values[col] else {
                    return Err(Error::SchemaMismatch("input pair is .missing".into()));
                };
                let (p, q) = pair_from_index(pair);
                let k = self.spec.num_predecessors(node);
                let ops_of = |pred: usize| match row.values.get(col + 1 + pred) {
                    Some(Level::Value(op)) if pred < k => Ok(*op),
                    _ => Err(Error::SchemaMismatch(format!(
                        "active edge {pred} of node {node} has no operation"
                    ))),
                };
                genes.push(NodeGene {
                    inputs: [p, q],
                    ops: [ops_of(p)?, ops_of(q)?],
                });
                col += 1 + k;
            }
        }
        Architecture::from_genes(&self.spec, genes)
    }
}

/// Tabular encoding of one architecture.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TabularRow {
    pub values: Vec<Level>,
}

impl TabularRow {
    /// Integer level codes as `f64`; `.missing` becomes `num_operations`.
    pub fn codes(&self, spec: &SearchSpaceSpec) -> Vec<f64> {
        self.values
            .iter()
            .map(|v| match v {
                Level::Value(x) => *x as f64,
                Level::Missing => spec.num_operations() as f64,
            })
            .collect()
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| **v == Level::Missing).count()
    }
}

pub fn encode_tabular(arch: &Architecture, spec: &SearchSpaceSpec) -> TabularRow {
    TabularSchema::new(spec).encode(arch)
}

/// An encoding ready to feed a surrogate.
#[derive(Debug, Clone)]
pub enum Encoder {
    Path(PathTable),
    Tabular(TabularSchema),
}

impl Encoder {
    pub fn kind(&self) -> EncodingKind {
        match self {
            Encoder::Path(_) => EncodingKind::Path,
            Encoder::Tabular(_) => EncodingKind::Tabular,
        }
    }

    pub fn column_kinds(&self) -> Vec<ColumnKind> {
        match self {
            Encoder::Path(t) => vec![ColumnKind::Numeric; t.encoding_length()],
            Encoder::Tabular(s) => s.column_kinds(),
        }
    }

    pub fn encode(&self, arch: &Architecture) -> Result<Vec<f64>> {
        match self {
            Encoder::Path(t) => t.encode(arch),
            Encoder::Tabular(s) => {
                arch.validate(s.spec())?;
                Ok(s.encode(arch).codes(s.spec()))
            }
        }
    }
}
