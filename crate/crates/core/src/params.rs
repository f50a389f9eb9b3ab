//! Evolution parameters. Defaults are the published NEAT settings for the
//! robot duel experiments; values the original setup leaves open carry the
//! choices documented on each field.

use crate::genome::CompatibilityCoeffs;

/// Steepness of the modified sigmoid `1 / (1 + e^(-4.9 x))`.
pub const SIGMOID_SLOPE: f64 = 4.9;

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionParams {
    pub population_size: usize,
    pub compatibility: CompatibilityCoeffs,
    pub initial_threshold: f64,
    pub threshold_step: f64,
    /// Lower bound for the dynamic compatibility threshold.
    pub threshold_floor: f64,
    pub target_species: usize,
    /// Species older than this many generations may be barred from reproducing.
    pub stagnation_limit: u32,
    /// Species with more members than this keep their champion unchanged.
    pub elitism_min_size: usize,
    /// Chance that a genome has its weights mutated at all.
    pub weight_mutation_rate: f64,
    /// Per-weight chance of a uniform perturbation; otherwise the weight is replaced.
    pub weight_perturb_prob: f64,
    /// Perturbations are drawn from `[-power, power]`.
    pub weight_perturb_power: f64,
    /// Initial and replacement weights are drawn from `[-range, range]`.
    pub weight_init_range: f64,
    pub weight_cap: f64,
    pub disable_inherit_prob: f64,
    pub crossover_average_prob: f64,
    pub mutation_only_prob: f64,
    pub interspecies_mating_prob: f64,
    pub add_node_prob: f64,
    pub add_link_prob: f64,
    /// Connection-removal rate used only by simplifying runs.
    pub remove_link_prob: f64,
    /// Fraction of each species (ranked by raw fitness) eligible to parent offspring.
    pub survival_fraction: f64,
}

impl Default for EvolutionParams {
    fn default() -> Self {
        Self {
            population_size: 256,
            compatibility: CompatibilityCoeffs::default(),
            initial_threshold: 3.0,
            threshold_step: 0.3,
            threshold_floor: 0.1,
            target_species: 10,
            stagnation_limit: 30,
            elitism_min_size: 5,
            weight_mutation_rate: 0.8,
            weight_perturb_prob: 0.9,
            weight_perturb_power: 0.5,
            weight_init_range: 1.0,
            weight_cap: 8.0,
            disable_inherit_prob: 0.75,
            crossover_average_prob: 0.4,
            mutation_only_prob: 0.25,
            interspecies_mating_prob: 0.05,
            add_node_prob: 0.01,
            add_link_prob: 0.1,
            remove_link_prob: 0.1,
            survival_fraction: 0.2,
        }
    }
}

impl EvolutionParams {
    /// Checks ranges; returns the name of the first offending field.
    pub fn validate(&self) -> Result<(), String> {
        let probs = [
            ("weight_mutation_rate", self.weight_mutation_rate),
            ("weight_perturb_prob", self.weight_perturb_prob),
            ("disable_inherit_prob", self.disable_inherit_prob),
            ("crossover_average_prob", self.crossover_average_prob),
            ("mutation_only_prob", self.mutation_only_prob),
            ("interspecies_mating_prob", self.interspecies_mating_prob),
            ("add_node_prob", self.add_node_prob),
            ("add_link_prob", self.add_link_prob),
            ("remove_link_prob", self.remove_link_prob),
            ("survival_fraction", self.survival_fraction),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} must be in [0, 1], got {p}"));
            }
        }
        if self.add_node_prob + self.add_link_prob > 1.0 {
            return Err("add_node_prob + add_link_prob must not exceed 1".into());
        }
        if self.population_size < 2 {
            return Err("population_size must be at least 2".into());
        }
        let c = &self.compatibility;
        if c.excess < 0.0 || c.disjoint < 0.0 || c.weight < 0.0 {
            return Err("compatibility coefficients must be non-negative".into());
        }
        if self.initial_threshold <= 0.0 || self.threshold_floor <= 0.0 {
            return Err("compatibility threshold must be positive".into());
        }
        if self.weight_cap <= 0.0 || self.weight_init_range < 0.0 || self.weight_perturb_power < 0.0 {
            return Err("weight ranges must be non-negative and the cap positive".into());
        }
        Ok(())
    }
}
