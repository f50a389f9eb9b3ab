//! Genetic encoding: node genes, innovation-numbered connection genes and the
//! operators that act on them.
//!
//! Node ids are laid out by role: sensors occupy `1..=sensors`, bias nodes
//! follow, then outputs, and hidden nodes take ids handed out by the
//! [`InnovationRegistry`]. Genomes are values; every operator returns a new
//! genome.

mod codec;
mod crossover;
mod mutation;

pub use codec::{decode_genome, encode_genome, GENOME_FORMAT_VERSION, GENOME_MAGIC};
pub use crossover::crossover;
pub use mutation::{mutate_add_connection, mutate_add_node, mutate_remove_connection, mutate_weights};

use std::collections::{HashMap, HashSet};

use rand::Rng;
use thiserror::Error;

pub type NodeId = u32;
pub type Innovation = u32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenomeError {
    #[error("parents have different input/output layouts ({0:?} vs {1:?})")]
    IoMismatch(IoSpec, IoSpec),
    #[error("invalid genome: {0}")]
    Invalid(String),
    #[error("line {line}: bad {field}: {message}")]
    Parse {
        line: usize,
        field: &'static str,
        message: String,
    },
    #[error("unsupported genome format version {found} (expected {GENOME_FORMAT_VERSION})")]
    Version { found: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Sensor,
    Bias,
    Hidden,
    Output,
}

impl NodeKind {
    pub fn is_input(self) -> bool {
        matches!(self, NodeKind::Sensor | NodeKind::Bias)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Sensor => "sensor",
            NodeKind::Bias => "bias",
            NodeKind::Hidden => "hidden",
            NodeKind::Output => "output",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "sensor" => NodeKind::Sensor,
            "bias" => NodeKind::Bias,
            "hidden" => NodeKind::Hidden,
            "output" => NodeKind::Output,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeGene {
    pub id: NodeId,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionGene {
    pub innovation: Innovation,
    pub in_node: NodeId,
    pub out_node: NodeId,
    pub weight: f64,
    pub enabled: bool,
}

/// Counts of sensor, bias and output nodes. Fixed for the life of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IoSpec {
    pub sensors: u32,
    pub bias: u32,
    pub outputs: u32,
}

impl IoSpec {
    /// Five food sensors, five robot sensors, a wall sensor and the energy
    /// difference sensor; one bias; left, right and forward outputs.
    pub const DUEL: IoSpec = IoSpec {
        sensors: 12,
        bias: 1,
        outputs: 3,
    };

    pub fn new(sensors: u32, bias: u32, outputs: u32) -> Self {
        Self { sensors, bias, outputs }
    }

    pub fn inputs(&self) -> u32 {
        self.sensors + self.bias
    }

    pub fn fixed_nodes(&self) -> u32 {
        self.inputs() + self.outputs
    }

    /// Kind of the node with this id if it belongs to the fixed layout.
    pub fn kind_of(&self, id: NodeId) -> Option<NodeKind> {
        if id == 0 {
            None
        } else if id <= self.sensors {
            Some(NodeKind::Sensor)
        } else if id <= self.inputs() {
            Some(NodeKind::Bias)
        } else if id <= self.fixed_nodes() {
            Some(NodeKind::Output)
        } else {
            None
        }
    }

    pub fn input_ids(&self) -> impl Iterator<Item = NodeId> {
        1..=self.inputs()
    }

    pub fn output_ids(&self) -> impl Iterator<Item = NodeId> {
        self.inputs() + 1..=self.fixed_nodes()
    }

    fn fixed_node_genes(&self) -> impl Iterator<Item = NodeGene> + '_ {
        (1..=self.fixed_nodes()).map(|id| NodeGene {
            id,
            kind: self.kind_of(id).expect("fixed id"),
        })
    }
}

/// Coefficients of the compatibility distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompatibilityCoeffs {
    pub excess: f64,
    pub disjoint: f64,
    pub weight: f64,
    /// Divide gene counts by the larger genome size instead of 1.
    pub normalize: bool,
}

impl Default for CompatibilityCoeffs {
    fn default() -> Self {
        Self {
            excess: 1.0,
            disjoint: 1.0,
            weight: 2.0,
            normalize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Genome {
    io: IoSpec,
    nodes: Vec<NodeGene>,
    connections: Vec<ConnectionGene>,
}

impl Genome {
    /// Builds a genome after checking every structural invariant. Nodes may
    /// be given in any order; connections must already be sorted by
    /// innovation number.
    pub fn from_parts(
        io: IoSpec,
        mut nodes: Vec<NodeGene>,
        connections: Vec<ConnectionGene>,
    ) -> Result<Self, GenomeError> {
        nodes.sort_by_key(|n| n.id);
        for pair in nodes.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(GenomeError::Invalid(format!("duplicate node id {}", pair[0].id)));
            }
        }
        for fixed in io.fixed_node_genes() {
            match nodes.binary_search_by_key(&fixed.id, |n| n.id) {
                Ok(i) if nodes[i].kind == fixed.kind => {}
                _ => {
                    return Err(GenomeError::Invalid(format!(
                        "missing {} node {}",
                        fixed.kind.as_str(),
                        fixed.id
                    )))
                }
            }
        }
        for n in &nodes {
            if io.kind_of(n.id).is_none() && n.kind != NodeKind::Hidden {
                return Err(GenomeError::Invalid(format!(
                    "node {} outside the fixed layout must be hidden",
                    n.id
                )));
            }
        }
        let genome = Self { io, nodes, connections };
        genome.check_connections()?;
        Ok(genome)
    }

    fn check_connections(&self) -> Result<(), GenomeError> {
        let mut pairs = HashSet::with_capacity(self.connections.len());
        let mut last = 0;
        for c in &self.connections {
            if c.innovation == 0 || c.innovation <= last {
                return Err(GenomeError::Invalid(format!(
                    "innovation {} out of order or duplicated",
                    c.innovation
                )));
            }
            last = c.innovation;
            if !c.weight.is_finite() {
                return Err(GenomeError::Invalid(format!("non-finite weight on gene {}", c.innovation)));
            }
            let src = self.node_kind(c.in_node);
            let dst = self.node_kind(c.out_node);
            match (src, dst) {
                (None, _) | (_, None) => {
                    return Err(GenomeError::Invalid(format!(
                        "gene {} references a missing node",
                        c.innovation
                    )))
                }
                (_, Some(k)) if k.is_input() => {
                    return Err(GenomeError::Invalid(format!(
                        "gene {} targets input node {}",
                        c.innovation, c.out_node
                    )))
                }
                _ => {}
            }
            if !pairs.insert((c.in_node, c.out_node)) {
                return Err(GenomeError::Invalid(format!(
                    "gene {} duplicates connection {} -> {}",
                    c.innovation, c.in_node, c.out_node
                )));
            }
        }
        Ok(())
    }

    pub fn io(&self) -> IoSpec {
        self.io
    }

    pub fn nodes(&self) -> &[NodeGene] {
        &self.nodes
    }

    pub fn connections(&self) -> &[ConnectionGene] {
        &self.connections
    }

    pub fn node_kind(&self, id: NodeId) -> Option<NodeKind> {
        self.nodes
            .binary_search_by_key(&id, |n| n.id)
            .ok()
            .map(|i| self.nodes[i].kind)
    }

    pub fn hidden_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Hidden).count()
    }

    pub fn connection_count(&self) -> usize {
        self.connections.len()
    }

    pub fn enabled_count(&self) -> usize {
        self.connections.iter().filter(|c| c.enabled).count()
    }

    pub fn max_innovation(&self) -> Innovation {
        self.connections.last().map_or(0, |c| c.innovation)
    }

    pub fn max_node_id(&self) -> NodeId {
        self.nodes.last().map_or(0, |n| n.id)
    }

    pub fn has_pair(&self, in_node: NodeId, out_node: NodeId) -> bool {
        self.connections
            .iter()
            .any(|c| c.in_node == in_node && c.out_node == out_node)
    }

    /// Same topology, innovation numbers and enable bits; fresh uniform weights.
    pub fn with_random_weights<R: Rng + ?Sized>(&self, rng: &mut R, range: f64) -> Genome {
        let mut g = self.clone();
        for c in &mut g.connections {
            c.weight = uniform(rng, range);
        }
        g
    }

    /// Used by the operators, which maintain the invariants themselves.
    pub(crate) fn from_parts_unchecked(
        io: IoSpec,
        nodes: Vec<NodeGene>,
        connections: Vec<ConnectionGene>,
    ) -> Self {
        let g = Self { io, nodes, connections };
        debug_assert!(
            Genome::from_parts(g.io, g.nodes.clone(), g.connections.clone()).is_ok(),
            "operator broke a genome invariant"
        );
        g
    }
}

/// Uniform draw from `[-range, range]`.
pub(crate) fn uniform<R: Rng + ?Sized>(rng: &mut R, range: f64) -> f64 {
    range * (2.0 * rng.gen::<f64>() - 1.0)
}

/// The generation-zero genome: every input wired to every output, no hidden
/// nodes. Innovation numbers `1..=inputs*outputs` follow `(in, out)` order, so
/// all minimal genomes share their markings and differ only in weights.
pub fn minimal_genome<R: Rng + ?Sized>(io: IoSpec, rng: &mut R, weight_range: f64) -> Genome {
    let nodes: Vec<_> = io.fixed_node_genes().collect();
    let mut connections = Vec::with_capacity((io.inputs() * io.outputs) as usize);
    for in_node in io.input_ids() {
        for out_node in io.output_ids() {
            connections.push(ConnectionGene {
                innovation: connections.len() as Innovation + 1,
                in_node,
                out_node,
                weight: uniform(rng, weight_range),
                enabled: true,
            });
        }
    }
    Genome::from_parts_unchecked(io, nodes, connections)
}

/// Fully connected, fully recurrent network with `hidden` hidden nodes and
/// direct input-to-output connections: input→hidden, hidden→hidden (self
/// loops included), hidden→output and input→output.
///
/// The input→output genes keep the innovation numbers of [`minimal_genome`];
/// the remaining genes are numbered after them in `(in, out)` order.
pub fn fully_recurrent_genome<R: Rng + ?Sized>(
    io: IoSpec,
    hidden: u32,
    rng: &mut R,
    weight_range: f64,
) -> Genome {
    let first_hidden = io.fixed_node_genes().count() as NodeId + 1;
    let hidden_ids: Vec<NodeId> = (first_hidden..first_hidden + hidden).collect();
    let mut nodes: Vec<_> = io.fixed_node_genes().collect();
    nodes.extend(hidden_ids.iter().map(|&id| NodeGene { id, kind: NodeKind::Hidden }));

    let mut pairs: Vec<(NodeId, NodeId)> = Vec::new();
    for i in io.input_ids() {
        for o in io.output_ids() {
            pairs.push((i, o));
        }
    }
    let mut rest = Vec::new();
    for i in io.input_ids() {
        rest.extend(hidden_ids.iter().map(|&h| (i, h)));
    }
    for &h in &hidden_ids {
        rest.extend(hidden_ids.iter().map(|&h2| (h, h2)));
        rest.extend(io.output_ids().map(|o| (h, o)));
    }
    rest.sort_unstable();
    pairs.extend(rest);

    let connections = pairs
        .into_iter()
        .enumerate()
        .map(|(i, (in_node, out_node))| ConnectionGene {
            innovation: i as Innovation + 1,
            in_node,
            out_node,
            weight: uniform(rng, weight_range),
            enabled: true,
        })
        .collect();
    Genome::from_parts_unchecked(io, nodes, connections)
}

/// Node id and the two innovation numbers created by splitting a gene.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitMarks {
    pub node: NodeId,
    pub in_innovation: Innovation,
    pub out_innovation: Innovation,
}

/// Hands out innovation numbers and hidden-node ids. Identical structural
/// mutations within one generation receive identical numbers; the memory of
/// what was seen is cleared by [`InnovationRegistry::new_generation`].
#[derive(Debug, Clone, PartialEq)]
pub struct InnovationRegistry {
    next_innovation: Innovation,
    next_node_id: NodeId,
    links: HashMap<(NodeId, NodeId), Innovation>,
    splits: HashMap<Innovation, SplitMarks>,
}

impl InnovationRegistry {
    pub fn new(next_innovation: Innovation, next_node_id: NodeId) -> Self {
        Self {
            next_innovation,
            next_node_id,
            links: HashMap::new(),
            splits: HashMap::new(),
        }
    }

    /// A registry whose counters start past everything used by `genomes`.
    pub fn following<'a>(io: IoSpec, genomes: impl IntoIterator<Item = &'a Genome>) -> Self {
        let mut innov = 0;
        let mut node = io.fixed_nodes();
        for g in genomes {
            innov = innov.max(g.max_innovation());
            node = node.max(g.max_node_id());
        }
        Self::new(innov + 1, node + 1)
    }

    pub fn new_generation(&mut self) {
        self.links.clear();
        self.splits.clear();
    }

    pub fn next_innovation(&self) -> Innovation {
        self.next_innovation
    }

    pub fn next_node_id(&self) -> NodeId {
        self.next_node_id
    }

    pub fn link_innovation(&mut self, in_node: NodeId, out_node: NodeId) -> Innovation {
        let next = &mut self.next_innovation;
        *self.links.entry((in_node, out_node)).or_insert_with(|| {
            let i = *next;
            *next += 1;
            i
        })
    }

    pub fn split_marks(&mut self, split: Innovation) -> SplitMarks {
        if let Some(m) = self.splits.get(&split) {
            return *m;
        }
        let marks = SplitMarks {
            node: self.next_node_id,
            in_innovation: self.next_innovation,
            out_innovation: self.next_innovation + 1,
        };
        self.next_node_id += 1;
        self.next_innovation += 2;
        self.splits.insert(split, marks);
        marks
    }
}

/// Compatibility distance `c1·E/N + c2·D/N + c3·W̄`.
///
/// Non-matching genes with an innovation number above the other genome's
/// largest are excess; the rest are disjoint. `W̄` is the mean absolute weight
/// difference of matching genes (0 when none match).
pub fn compatibility_distance(a: &Genome, b: &Genome, coeffs: &CompatibilityCoeffs) -> f64 {
    let (ga, gb) = (a.connections(), b.connections());
    let (max_a, max_b) = (a.max_innovation(), b.max_innovation());
    let (mut i, mut j) = (0, 0);
    let (mut excess, mut disjoint, mut matching) = (0usize, 0usize, 0usize);
    let mut weight_diff = 0.0;
    let mut unmatched = |innov: Innovation, other_max: Innovation| {
        if innov > other_max {
            excess += 1;
        } else {
            disjoint += 1;
        }
    };
    while i < ga.len() || j < gb.len() {
        match (ga.get(i), gb.get(j)) {
            (Some(x), Some(y)) if x.innovation == y.innovation => {
                matching += 1;
                weight_diff += (x.weight - y.weight).abs();
                i += 1;
                j += 1;
            }
            (Some(x), Some(y)) if x.innovation < y.innovation => {
                unmatched(x.innovation, max_b);
                i += 1;
            }
            (Some(x), None) => {
                unmatched(x.innovation, max_b);
                i += 1;
            }
            (_, Some(y)) => {
                unmatched(y.innovation, max_a);
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    let n = if coeffs.normalize {
        ga.len().max(gb.len()).max(1) as f64
    } else {
        1.0
    };
    let mean_diff = if matching > 0 { weight_diff / matching as f64 } else { 0.0 };
    coeffs.excess * excess as f64 / n + coeffs.disjoint * disjoint as f64 / n + coeffs.weight * mean_diff
}
