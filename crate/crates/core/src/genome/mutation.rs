use rand::seq::SliceRandom;
use rand::Rng;

use super::{uniform, ConnectionGene, Genome, InnovationRegistry, NodeGene, NodeId, NodeKind};
use crate::params::EvolutionParams;

/// With probability `weight_mutation_rate` every weight is either perturbed
/// by a uniform delta or replaced by a fresh uniform value; otherwise the
/// genome is returned unchanged. Weights are clamped to `±weight_cap`.
pub fn mutate_weights<R: Rng + ?Sized>(genome: &Genome, rng: &mut R, params: &EvolutionParams) -> Genome {
    let mut g = genome.clone();
    if g.connections.is_empty() || rng.gen::<f64>() >= params.weight_mutation_rate {
        return g;
    }
    for c in &mut g.connections {
        let w = if rng.gen::<f64>() < params.weight_perturb_prob {
            c.weight + uniform(rng, params.weight_perturb_power)
        } else {
            uniform(rng, params.weight_init_range)
        };
        c.weight = w.clamp(-params.weight_cap, params.weight_cap);
    }
    g
}

/// Adds one enabled connection between a uniformly chosen unconnected pair.
/// Targets may be hidden or output nodes, including self loops and recurrent
/// pairs. Returns `None` when every legal pair is already connected.
pub fn mutate_add_connection<R: Rng + ?Sized>(
    genome: &Genome,
    registry: &mut InnovationRegistry,
    rng: &mut R,
    weight_range: f64,
) -> Option<Genome> {
    let mut candidates: Vec<(NodeId, NodeId)> = Vec::new();
    for src in &genome.nodes {
        for dst in genome.nodes.iter().filter(|n| !n.kind.is_input()) {
            if !genome.has_pair(src.id, dst.id) {
                candidates.push((src.id, dst.id));
            }
        }
    }
    let &(in_node, out_node) = candidates.choose(rng)?;
    let weight = uniform(rng, weight_range);
    let innovation = registry.link_innovation(in_node, out_node);
    if genome.connections.iter().any(|c| c.innovation == innovation) {
        return None;
    }
    let mut g = genome.clone();
    let gene = ConnectionGene {
        innovation,
        in_node,
        out_node,
        weight,
        enabled: true,
    };
    let at = g.connections.partition_point(|c| c.innovation < innovation);
    g.connections.insert(at, gene);
    Some(Genome::from_parts_unchecked(g.io, g.nodes, g.connections))
}

/// Splits a uniformly chosen enabled connection `a → b` into `a → new` with
/// weight 1 and `new → b` with the old weight, disabling the original.
/// Returns `None` if no connection is enabled.
pub fn mutate_add_node<R: Rng + ?Sized>(
    genome: &Genome,
    registry: &mut InnovationRegistry,
    rng: &mut R,
) -> Option<Genome> {
    let enabled: Vec<usize> = (0..genome.connections.len())
        .filter(|&i| genome.connections[i].enabled)
        .collect();
    let &idx = enabled.choose(rng)?;
    let old = genome.connections[idx];
    let marks = registry.split_marks(old.innovation);
    if genome.node_kind(marks.node).is_some()
        || genome
            .connections
            .iter()
            .any(|c| c.innovation == marks.in_innovation || c.innovation == marks.out_innovation)
    {
        return None;
    }
    let mut g = genome.clone();
    g.connections[idx].enabled = false;
    let node_at = g.nodes.partition_point(|n| n.id < marks.node);
    g.nodes.insert(
        node_at,
        NodeGene {
            id: marks.node,
            kind: NodeKind::Hidden,
        },
    );
    for gene in [
        ConnectionGene {
            innovation: marks.in_innovation,
            in_node: old.in_node,
            out_node: marks.node,
            weight: 1.0,
            enabled: true,
        },
        ConnectionGene {
            innovation: marks.out_innovation,
            in_node: marks.node,
            out_node: old.out_node,
            weight: old.weight,
            enabled: true,
        },
    ] {
        let at = g.connections.partition_point(|c| c.innovation < gene.innovation);
        g.connections.insert(at, gene);
    }
    Some(Genome::from_parts_unchecked(g.io, g.nodes, g.connections))
}

/// Deletes one uniformly chosen connection gene. Hidden endpoints left with
/// no connections are removed as well; fixed-layout nodes always stay.
/// Returns `None` for a genome without connections.
pub fn mutate_remove_connection<R: Rng + ?Sized>(genome: &Genome, rng: &mut R) -> Option<Genome> {
    if genome.connections.is_empty() {
        return None;
    }
    let idx = rng.gen_range(0..genome.connections.len());
    let mut g = genome.clone();
    let removed = g.connections.remove(idx);
    let attached = |id: NodeId, conns: &[ConnectionGene]| {
        conns.iter().any(|c| c.in_node == id || c.out_node == id)
    };
    g.nodes.retain(|n| {
        n.kind != NodeKind::Hidden
            || (n.id != removed.in_node && n.id != removed.out_node)
            || attached(n.id, &g.connections)
    });
    Some(Genome::from_parts_unchecked(g.io, g.nodes, g.connections))
}
