//! Species assignment by compatibility distance, explicit fitness sharing,
//! offspring allocation and reproduction.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::genome::{
    compatibility_distance, crossover, mutate_add_connection, mutate_add_node, mutate_remove_connection,
    mutate_weights, CompatibilityCoeffs, Genome, InnovationRegistry,
};
use crate::params::EvolutionParams;

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    /// Position in the population that was assigned.
    pub index: usize,
    pub genome: Genome,
    pub fitness: f64,
    pub adjusted: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Species {
    pub id: u32,
    pub representative: Genome,
    /// Ordered by population index.
    pub members: Vec<Member>,
    /// Generations since the species appeared.
    pub age: u32,
    pub best_fitness: f64,
    /// Generations since `best_fitness` last rose.
    pub since_improvement: u32,
}

impl Species {
    pub fn adjusted_sum(&self) -> f64 {
        self.members.iter().map(|m| m.adjusted).sum()
    }

    /// Members by raw fitness, best first; ties keep population order.
    pub fn ranked(&self) -> Vec<&Member> {
        let mut v: Vec<&Member> = self.members.iter().collect();
        v.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));
        v
    }

    pub fn champion(&self) -> &Member {
        self.ranked()[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesSet {
    /// Ascending by id.
    pub species: Vec<Species>,
    pub threshold: f64,
    pub target_species: usize,
    pub threshold_step: f64,
    pub threshold_floor: f64,
    next_id: u32,
}

impl SpeciesSet {
    pub fn new(params: &EvolutionParams) -> Self {
        Self {
            species: Vec::new(),
            threshold: params.initial_threshold,
            target_species: params.target_species,
            threshold_step: params.threshold_step,
            threshold_floor: params.threshold_floor,
            next_id: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.species.len()
    }

    pub fn is_empty(&self) -> bool {
        self.species.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.species.iter().map(|s| s.members.len()).collect()
    }

    /// Places each genome into the first species whose representative lies
    /// within the threshold, founding a new species otherwise. Species left
    /// without members are dropped; ages and improvement counters advance.
    pub fn assign(&self, genomes: &[Genome], fitness: &[f64], coeffs: &CompatibilityCoeffs) -> SpeciesSet {
        assert_eq!(genomes.len(), fitness.len());
        let mut next = SpeciesSet {
            species: self
                .species
                .iter()
                .map(|s| Species {
                    members: Vec::new(),
                    age: s.age + 1,
                    ..s.clone()
                })
                .collect(),
            ..self.clone()
        };
        for (index, (genome, &f)) in genomes.iter().zip(fitness).enumerate() {
            let member = Member {
                index,
                genome: genome.clone(),
                fitness: f,
                adjusted: f,
            };
            let home = next
                .species
                .iter()
                .position(|s| compatibility_distance(genome, &s.representative, coeffs) < next.threshold);
            match home {
                Some(i) => next.species[i].members.push(member),
                None => {
                    next.species.push(Species {
                        id: next.next_id,
                        representative: genome.clone(),
                        members: vec![member],
                        age: 0,
                        best_fitness: f64::NEG_INFINITY,
                        since_improvement: 0,
                    });
                    next.next_id += 1;
                }
            }
        }
        for s in &mut next.species {
            let best = s.members.iter().map(|m| m.fitness).fold(f64::NEG_INFINITY, f64::max);
            if best > s.best_fitness {
                s.best_fitness = best;
                s.since_improvement = 0;
            } else {
                s.since_improvement += 1;
            }
        }
        next.species.retain(|s| !s.members.is_empty());
        next
    }

    /// Moves the threshold one step toward the target species count.
    pub fn adjust_threshold(&mut self) {
        use std::cmp::Ordering::*;
        match self.species.len().cmp(&self.target_species) {
            Greater => self.threshold += self.threshold_step,
            Less => self.threshold = (self.threshold - self.threshold_step).max(self.threshold_floor),
            Equal => {}
        }
    }

    /// Adjusted fitness is raw fitness divided by species size.
    pub fn share_fitness(&mut self) {
        for s in &mut self.species {
            let n = s.members.len() as f64;
            for m in &mut s.members {
                m.adjusted = m.fitness / n;
            }
        }
    }

    /// Species index barred from reproducing: the lowest performer among
    /// those older than the stagnation limit, if there is more than one species.
    pub fn stagnant_species(&self, stagnation_limit: u32) -> Option<usize> {
        if self.species.len() < 2 {
            return None;
        }
        self.species
            .iter()
            .enumerate()
            .filter(|(_, s)| s.age > stagnation_limit)
            .min_by(|(_, a), (_, b)| a.adjusted_sum().total_cmp(&b.adjusted_sum()))
            .map(|(i, _)| i)
    }

    /// Offspring per species (aligned with `species`), proportional to each
    /// species' adjusted-fitness sum and rounded by largest remainder with
    /// ties to the lower species id. All-zero fitness splits evenly.
    pub fn allocate_offspring(&self, pop_size: usize, stagnation_limit: u32) -> Vec<usize> {
        let barred = self.stagnant_species(stagnation_limit);
        let weights: Vec<f64> = self
            .species
            .iter()
            .enumerate()
            .map(|(i, s)| if Some(i) == barred { 0.0 } else { s.adjusted_sum().max(0.0) })
            .collect();
        let total: f64 = weights.iter().sum();
        let weights = if total > 0.0 {
            weights
        } else {
            (0..self.species.len())
                .map(|i| if Some(i) == barred { 0.0 } else { 1.0 })
                .collect()
        };
        largest_remainder(&weights, pop_size)
    }

    /// Replaces every representative by a uniformly chosen current member.
    pub fn choose_representatives<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for s in &mut self.species {
            s.representative = s.members.choose(rng).expect("species are never empty").genome.clone();
        }
    }
}

/// Hamilton apportionment of `total` seats by `weights`. Ties in remainder
/// go to the lower index.
///
/// Remainders are kept as `total * w mod sum`, which floating point computes
/// exactly, so equal fractional parts compare equal.
pub fn largest_remainder(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let scaled: Vec<f64> = weights.iter().map(|w| total as f64 * w).collect();
    let rem: Vec<f64> = scaled.iter().map(|s| s % sum).collect();
    let mut counts: Vec<usize> = scaled
        .iter()
        .zip(&rem)
        .map(|(s, r)| ((s - r) / sum).round() as usize)
        .collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| rem[b].total_cmp(&rem[a]).then(a.cmp(&b)));
    for &i in order.iter().cycle().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Structural mutations permitted by the evolution mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructuralMutation {
    /// Add nodes and links.
    Grow,
    /// Only remove links.
    Shrink,
    /// No structural change.
    Frozen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    /// Species champion copied unchanged.
    Elite,
    MutationOnly,
    Crossover { interspecies: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructuralChange {
    None,
    AddedNode,
    AddedLink,
    RemovedLink,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Offspring {
    pub genome: Genome,
    pub species: u32,
    pub origin: Origin,
    pub change: StructuralChange,
}

/// Produces the next population. Species are visited in ascending id order
/// and offspring in index order, so the random stream is consumed in a fixed
/// sequence.
pub fn reproduce<R: Rng + ?Sized>(
    set: &SpeciesSet,
    counts: &[usize],
    registry: &mut InnovationRegistry,
    rng: &mut R,
    params: &EvolutionParams,
    structural: StructuralMutation,
) -> Vec<Offspring> {
    assert_eq!(counts.len(), set.species.len());
    let ranked: Vec<Vec<&Member>> = set.species.iter().map(Species::ranked).collect();
    let mut out = Vec::with_capacity(counts.iter().sum());
    for (si, species) in set.species.iter().enumerate() {
        let mut remaining = counts[si];
        if remaining == 0 {
            continue;
        }
        let members = &ranked[si];
        if members.len() > params.elitism_min_size {
            out.push(Offspring {
                genome: members[0].genome.clone(),
                species: species.id,
                origin: Origin::Elite,
                change: StructuralChange::None,
            });
            remaining -= 1;
        }
        let survivors = ((params.survival_fraction * members.len() as f64).ceil() as usize).clamp(1, members.len());
        let pool = &members[..survivors];
        for _ in 0..remaining {
            let (child, origin) = if rng.gen::<f64>() < params.mutation_only_prob {
                (pool.choose(rng).unwrap().genome.clone(), Origin::MutationOnly)
            } else {
                let mother = *pool.choose(rng).unwrap();
                let interspecies = set.species.len() > 1 && rng.gen::<f64>() < params.interspecies_mating_prob;
                let father = if interspecies {
                    let mut other = rng.gen_range(0..set.species.len() - 1);
                    if other >= si {
                        other += 1;
                    }
                    ranked[other][0]
                } else {
                    *pool.choose(rng).unwrap()
                };
                let (fm, ff) = if structural == StructuralMutation::Shrink && mother.fitness == father.fitness {
                    // a random parent counts as fitter, so the child never gains genes
                    if rng.gen::<bool>() { (1.0, 0.0) } else { (0.0, 1.0) }
                } else {
                    (mother.fitness, father.fitness)
                };
                let child = crossover(&mother.genome, fm, &father.genome, ff, rng, params)
                    .expect("one population shares one layout");
                (child, Origin::Crossover { interspecies })
            };
            let (child, change) = mutate_structure(&child, registry, rng, params, structural);
            out.push(Offspring {
                genome: mutate_weights(&child, rng, params),
                species: species.id,
                origin,
                change,
            });
        }
    }
    out
}

/// At most one structural mutation per offspring.
fn mutate_structure<R: Rng + ?Sized>(
    genome: &Genome,
    registry: &mut InnovationRegistry,
    rng: &mut R,
    params: &EvolutionParams,
    structural: StructuralMutation,
) -> (Genome, StructuralChange) {
    let roll = rng.gen::<f64>();
    let result = match structural {
        StructuralMutation::Grow if roll < params.add_node_prob => {
            mutate_add_node(genome, registry, rng).map(|g| (g, StructuralChange::AddedNode))
        }
        StructuralMutation::Grow if roll < params.add_node_prob + params.add_link_prob => {
            mutate_add_connection(genome, registry, rng, params.weight_init_range).map(|g| (g, StructuralChange::AddedLink))
        }
        StructuralMutation::Shrink if roll < params.remove_link_prob => {
            mutate_remove_connection(genome, rng).map(|g| (g, StructuralChange::RemovedLink))
        }
        _ => None,
    };
    result.unwrap_or_else(|| (genome.clone(), StructuralChange::None))
}
