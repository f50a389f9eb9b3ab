//! Independent oracles and fixtures shared by the integration suites and the
//! acceptance runner. Nothing here calls the code under test to compute an
//! expected value.
#![allow(dead_code)]

pub mod checks;

use std::collections::{BTreeMap, BTreeSet};

use neat_duel::genome::{CompatibilityCoeffs, ConnectionGene, Genome, IoSpec, NodeGene, NodeKind};
use rand::seq::SliceRandom;
use rand::Rng;

/// Small layout for randomized instances: two sensors, a bias, two outputs.
pub const SMALL: IoSpec = IoSpec {
    sensors: 2,
    bias: 1,
    outputs: 2,
};

/// Hidden ids available to small random genomes.
pub const SMALL_HIDDEN: [u32; 3] = [6, 7, 8];

pub fn node_kind(io: IoSpec, id: u32) -> NodeKind {
    if id <= io.sensors {
        NodeKind::Sensor
    } else if id <= io.sensors + io.bias {
        NodeKind::Bias
    } else if id <= io.sensors + io.bias + io.outputs {
        NodeKind::Output
    } else {
        NodeKind::Hidden
    }
}

/// Genome from `(innovation, in, out, weight, enabled)` tuples in any order.
/// Hidden nodes are created for every referenced id past the fixed layout.
pub fn build(io: IoSpec, genes: &[(u32, u32, u32, f64, bool)]) -> Genome {
    let fixed = io.sensors + io.bias + io.outputs;
    let mut ids: BTreeSet<u32> = (1..=fixed).collect();
    let mut conns: Vec<ConnectionGene> = genes
        .iter()
        .map(|&(innovation, in_node, out_node, weight, enabled)| {
            ids.insert(in_node);
            ids.insert(out_node);
            ConnectionGene {
                innovation,
                in_node,
                out_node,
                weight,
                enabled,
            }
        })
        .collect();
    conns.sort_by_key(|c| c.innovation);
    let nodes = ids
        .into_iter()
        .map(|id| NodeGene {
            id,
            kind: node_kind(io, id),
        })
        .collect();
    Genome::from_parts(io, nodes, conns).expect("valid fixture")
}

/// Every legal `(in, out)` pair of the small layout, in a random order; the
/// position in the list is the innovation number minus one. Sharing one
/// list between genomes keeps their historical markings consistent.
pub fn innovation_table<R: Rng>(rng: &mut R) -> Vec<(u32, u32)> {
    let fixed = SMALL.sensors + SMALL.bias + SMALL.outputs;
    let all: Vec<u32> = (1..=fixed).chain(SMALL_HIDDEN).collect();
    let targets: Vec<u32> = (SMALL.sensors + SMALL.bias + 1..=fixed).chain(SMALL_HIDDEN).collect();
    let mut pairs: Vec<(u32, u32)> = all.iter().flat_map(|&i| targets.iter().map(move |&o| (i, o))).collect();
    pairs.shuffle(rng);
    pairs
}

/// Random genome with up to `max_genes` genes drawn from `table`.
pub fn random_genome<R: Rng>(rng: &mut R, table: &[(u32, u32)], max_genes: usize) -> Genome {
    let n = rng.gen_range(0..=max_genes);
    let picks: Vec<usize> = rand::seq::index::sample(rng, table.len(), n).into_vec();
    let genes: Vec<(u32, u32, u32, f64, bool)> = picks
        .into_iter()
        .map(|i| {
            let (a, b) = table[i];
            let w = (rng.gen_range(-40..=40) as f64) / 8.0;
            (i as u32 + 1, a, b, w, rng.gen_bool(0.8))
        })
        .collect();
    build(SMALL, &genes)
}

/// Distance by explicit set classification over the union of innovations.
pub fn brute_force_distance(a: &Genome, b: &Genome, c: &CompatibilityCoeffs) -> f64 {
    let wa: BTreeMap<u32, f64> = a.connections().iter().map(|g| (g.innovation, g.weight)).collect();
    let wb: BTreeMap<u32, f64> = b.connections().iter().map(|g| (g.innovation, g.weight)).collect();
    let max_a = wa.keys().max().copied().unwrap_or(0);
    let max_b = wb.keys().max().copied().unwrap_or(0);
    let union: BTreeSet<u32> = wa.keys().chain(wb.keys()).copied().collect();
    let (mut e, mut d, mut m, mut diff) = (0.0, 0.0, 0.0, 0.0);
    for i in union {
        match (wa.get(&i), wb.get(&i)) {
            (Some(x), Some(y)) => {
                m += 1.0;
                diff += (x - y).abs();
            }
            (Some(_), None) => {
                if i > max_b {
                    e += 1.0
                } else {
                    d += 1.0
                }
            }
            (None, Some(_)) => {
                if i > max_a {
                    e += 1.0
                } else {
                    d += 1.0
                }
            }
            (None, None) => unreachable!(),
        }
    }
    let n = if c.normalize {
        a.connection_count().max(b.connection_count()).max(1) as f64
    } else {
        1.0
    };
    let wbar = if m > 0.0 { diff / m } else { 0.0 };
    c.excess * e / n + c.disjoint * d / n + c.weight * wbar
}

/// Dense synchronous propagation: a weight matrix over all nodes and one
/// matrix-vector product per step.
pub struct DenseNet {
    io: IoSpec,
    ids: Vec<u32>,
    w: Vec<Vec<f64>>,
    act: Vec<f64>,
}

impl DenseNet {
    pub fn new(g: &Genome) -> Self {
        let io = g.io();
        let ids: Vec<u32> = g.nodes().iter().map(|n| n.id).collect();
        let n = ids.len();
        let at = |id: u32| ids.iter().position(|&x| x == id).unwrap();
        let mut w = vec![vec![0.0; n]; n];
        for c in g.connections().iter().filter(|c| c.enabled) {
            w[at(c.out_node)][at(c.in_node)] += c.weight;
        }
        let mut act = vec![0.0; n];
        for (i, &id) in ids.iter().enumerate() {
            if node_kind(io, id) == NodeKind::Bias {
                act[i] = 1.0;
            }
        }
        Self { io, ids, w, act }
    }

    pub fn step(&mut self, inputs: &[f64]) -> Vec<f64> {
        for (i, &id) in self.ids.iter().enumerate() {
            if id >= 1 && id <= self.io.sensors {
                self.act[i] = inputs[id as usize - 1];
            }
        }
        let prev = self.act.clone();
        for (i, &id) in self.ids.iter().enumerate() {
            if matches!(node_kind(self.io, id), NodeKind::Hidden | NodeKind::Output) {
                let x: f64 = self.w[i].iter().zip(&prev).map(|(w, a)| w * a).sum();
                self.act[i] = 1.0 / (1.0 + (-4.9 * x).exp());
            }
        }
        self.ids
            .iter()
            .zip(&self.act)
            .filter(|(&id, _)| node_kind(self.io, id) == NodeKind::Output)
            .map(|(_, &a)| a)
            .collect()
    }
}

/// Hamilton apportionment by exhaustive search over every split of `total`
/// into `weights.len()` parts: the minimum of `Σ (c_i·W − total·w_i)²` in
/// exact integers, ties broken toward the lexicographically largest vector
/// (extra seats go to lower indices first).
pub fn exhaustive_apportionment(weights: &[u64], total: usize) -> Vec<usize> {
    let sum: u64 = weights.iter().sum();
    let k = weights.len();
    let mut best: Option<(u128, Vec<usize>)> = None;
    let mut current = vec![0usize; k];
    fn rec(
        i: usize,
        left: usize,
        current: &mut Vec<usize>,
        weights: &[u64],
        sum: u64,
        total: usize,
        best: &mut Option<(u128, Vec<usize>)>,
    ) {
        if i + 1 == weights.len() {
            current[i] = left;
            let cost: u128 = current
                .iter()
                .zip(weights)
                .map(|(&c, &w)| {
                    let d = c as i128 * sum as i128 - total as i128 * w as i128;
                    (d * d) as u128
                })
                .sum();
            let better = match best {
                None => true,
                Some((bc, bv)) => cost < *bc || (cost == *bc && current > bv),
            };
            if better {
                *best = Some((cost, current.clone()));
            }
            return;
        }
        for c in 0..=left {
            current[i] = c;
            rec(i + 1, left - c, current, weights, sum, total, best);
        }
    }
    rec(0, total, &mut current, weights, sum, total, &mut best);
    best.unwrap().1
}

/// Checks a crossover child against set algebra on the parents' genes.
///
/// The child's innovations must be the matching set plus the fitter
/// parent's unmatched set, or lie between the matching set and the union on
/// a fitness tie. Every gene must carry its parents' endpoints, a weight
/// from one parent or their mean, and stay enabled when both parents had it
/// enabled. The node list must be the fixed layout plus referenced hidden ids.
pub fn check_crossover(a: &Genome, fa: f64, b: &Genome, fb: f64, child: &Genome) -> Result<(), String> {
    let ga: BTreeMap<u32, &ConnectionGene> = a.connections().iter().map(|g| (g.innovation, g)).collect();
    let gb: BTreeMap<u32, &ConnectionGene> = b.connections().iter().map(|g| (g.innovation, g)).collect();
    let sa: BTreeSet<u32> = ga.keys().copied().collect();
    let sb: BTreeSet<u32> = gb.keys().copied().collect();
    let matching: BTreeSet<u32> = sa.intersection(&sb).copied().collect();
    let union: BTreeSet<u32> = sa.union(&sb).copied().collect();
    let sc: BTreeSet<u32> = child.connections().iter().map(|g| g.innovation).collect();
    if fa > fb && sc != sa {
        return Err(format!("fitter A: expected {sa:?}, got {sc:?}"));
    }
    if fb > fa && sc != sb {
        return Err(format!("fitter B: expected {sb:?}, got {sc:?}"));
    }
    if fa == fb && !(matching.is_subset(&sc) && sc.is_subset(&union)) {
        return Err(format!("tie: {sc:?} not between {matching:?} and {union:?}"));
    }
    for g in child.connections() {
        let parents: Vec<&ConnectionGene> = [ga.get(&g.innovation), gb.get(&g.innovation)]
            .into_iter()
            .flatten()
            .copied()
            .collect();
        let p = parents[0];
        if (g.in_node, g.out_node) != (p.in_node, p.out_node) {
            return Err(format!("gene {} changed endpoints", g.innovation));
        }
        let mean = parents.iter().map(|p| p.weight).sum::<f64>() / parents.len() as f64;
        if !parents.iter().any(|p| p.weight == g.weight) && g.weight != mean {
            return Err(format!("gene {} weight {} from nowhere", g.innovation, g.weight));
        }
        if parents.iter().all(|p| p.enabled) && !g.enabled {
            return Err(format!("gene {} disabled though enabled in every parent", g.innovation));
        }
    }
    let fixed = a.io().sensors + a.io().bias + a.io().outputs;
    let mut expected: BTreeSet<u32> = (1..=fixed).collect();
    for g in child.connections() {
        expected.insert(g.in_node);
        expected.insert(g.out_node);
    }
    let got: BTreeSet<u32> = child.nodes().iter().map(|n| n.id).collect();
    if got != expected {
        return Err(format!("nodes {got:?}, expected {expected:?}"));
    }
    Ok(())
}

/// Whether an observed rate lies within three binomial standard deviations.
pub fn within_3_sigma(hits: usize, n: usize, p: f64) -> bool {
    let rate = hits as f64 / n as f64;
    (rate - p).abs() <= 3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

/// Referee over tagged genomes. A tag is the weight of the first gene; the
/// table lists which tag beats which, everything else ties.
pub struct TableReferee {
    wins: BTreeSet<(i64, i64)>,
    pub calls: std::sync::atomic::AtomicUsize,
}

pub fn tagged(tag: i64) -> Genome {
    build(SMALL, &[(1, 1, 4, tag as f64, true)])
}

impl TableReferee {
    pub fn new(wins: &[(i64, i64)]) -> Self {
        Self {
            wins: wins.iter().copied().collect(),
            calls: Default::default(),
        }
    }

    /// Strict total order: a higher tag beats a lower one.
    pub fn ladder(n: i64) -> Self {
        let wins: Vec<(i64, i64)> = (1..=n).flat_map(|j| (1..j).map(move |i| (j, i))).collect();
        Self::new(&wins)
    }
}

impl neat_duel::dominance::Referee for TableReferee {
    fn compare(&self, a: &Genome, b: &Genome) -> neat_duel::dominance::ComparisonResult {
        use neat_duel::dominance::ComparisonResult;
        self.calls.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        let (ta, tb) = (a.connections()[0].weight as i64, b.connections()[0].weight as i64);
        let win = ComparisonResult { wins_a: 150, wins_b: 130, draws: 8 };
        if self.wins.contains(&(ta, tb)) {
            win
        } else if self.wins.contains(&(tb, ta)) {
            win.swapped()
        } else {
            ComparisonResult { wins_a: 140, wins_b: 140, draws: 8 }
        }
    }
}
