use std::collections::{BTreeSet, HashSet};

use rand::Rng;

use super::{ConnectionGene, Genome, GenomeError, NodeGene};
use crate::params::EvolutionParams;

/// Recombines two parents aligned by innovation number.
///
/// Matching genes come from either parent at random, or in a fraction
/// `crossover_average_prob` of crossovers carry the mean of both weights.
/// Disjoint and excess genes come from the fitter parent; on equal fitness
/// each one is taken with probability 1/2. A gene disabled in either parent
/// stays disabled with probability `disable_inherit_prob`.
pub fn crossover<R: Rng + ?Sized>(
    parent_a: &Genome,
    fitness_a: f64,
    parent_b: &Genome,
    fitness_b: f64,
    rng: &mut R,
    params: &EvolutionParams,
) -> Result<Genome, GenomeError> {
    if parent_a.io != parent_b.io {
        return Err(GenomeError::IoMismatch(parent_a.io, parent_b.io));
    }
    let average = rng.gen::<f64>() < params.crossover_average_prob;
    let (ga, gb) = (&parent_a.connections, &parent_b.connections);
    let mut genes: Vec<ConnectionGene> = Vec::with_capacity(ga.len().max(gb.len()));
    let mut pairs = HashSet::with_capacity(genes.capacity());

    let keep_disabled = |disabled: bool, rng: &mut R| disabled && rng.gen::<f64>() < params.disable_inherit_prob;
    let inherit = |g: &ConnectionGene, rng: &mut R| ConnectionGene {
        enabled: !keep_disabled(!g.enabled, rng),
        ..*g
    };
    let take_unmatched = |from_a: bool, rng: &mut R| {
        if fitness_a == fitness_b {
            rng.gen::<bool>()
        } else {
            (fitness_a > fitness_b) == from_a
        }
    };

    let (mut i, mut j) = (0, 0);
    while i < ga.len() || j < gb.len() {
        let gene = match (ga.get(i), gb.get(j)) {
            (Some(x), Some(y)) if x.innovation == y.innovation => {
                i += 1;
                j += 1;
                let mut g = if rng.gen::<bool>() { *x } else { *y };
                if average {
                    g.weight = (x.weight + y.weight) / 2.0;
                }
                g.enabled = !keep_disabled(!x.enabled || !y.enabled, rng);
                Some(g)
            }
            (Some(x), y) if y.is_none_or(|y| x.innovation < y.innovation) => {
                i += 1;
                take_unmatched(true, rng).then(|| inherit(x, rng))
            }
            (_, Some(y)) => {
                j += 1;
                take_unmatched(false, rng).then(|| inherit(y, rng))
            }
            (_, None) => unreachable!(),
        };
        if let Some(g) = gene {
            if pairs.insert((g.in_node, g.out_node)) {
                genes.push(g);
            }
        }
    }

    let referenced: BTreeSet<_> = genes.iter().flat_map(|g| [g.in_node, g.out_node]).collect();
    let mut nodes: Vec<NodeGene> = parent_a
        .nodes
        .iter()
        .chain(parent_b.nodes.iter().filter(|n| parent_a.node_kind(n.id).is_none()))
        .filter(|n| parent_a.io.kind_of(n.id).is_some() || referenced.contains(&n.id))
        .copied()
        .collect();
    nodes.sort_by_key(|n| n.id);
    Genome::from_parts(parent_a.io, nodes, genes)
}
