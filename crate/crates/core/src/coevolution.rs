//! Two-population host/parasite coevolution.
//!
//! Each generation both populations are evaluated, each against twelve
//! parasites drawn from the other side: the champions of its best species
//! plus samples from the shared Hall of Fame. Fitness is the number of games
//! won out of 24. After speciation the two population champions meet in a
//! 288-game comparison; the winner becomes the generation champion, joins
//! the Hall of Fame and enters the dominance tournament.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use thiserror::Error;

use crate::dominance::{ComparisonResult, DominanceHierarchy, DuelReferee, Referee};
use crate::duel::{run_duel_networks, DuelConfig, Winner};
use crate::genome::{fully_recurrent_genome, minimal_genome, Genome, InnovationRegistry, IoSpec};
use crate::network::Network;
use crate::params::EvolutionParams;
use crate::rng::{stream, Purpose, Rng};
use crate::speciation::{reproduce, SpeciesSet, StructuralMutation};

#[derive(Debug, Error)]
pub enum CoevolutionError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("a run needs at least one generation")]
    NoGenerations,
    #[error("seed genome does not use the duel sensor layout")]
    SeedLayout,
    #[error("cannot start worker pool: {0}")]
    Workers(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum FixedTopology {
    /// Fully recurrent network with direct input-output links.
    Hidden(u32),
    /// Topology of a given genome; weights are drawn afresh.
    Seed(Genome),
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvolutionMode {
    /// Minimal start, structure only grows.
    Complexifying,
    /// Weights evolve, structure never changes.
    FixedTopology(FixedTopology),
    /// Fully recurrent start, connections are only removed.
    Simplifying { initial_hidden: u32 },
    /// Complexifying, but every game is decided by a coin flip.
    RandomFitness,
}

impl EvolutionMode {
    pub fn structural(&self) -> StructuralMutation {
        match self {
            Self::Complexifying | Self::RandomFitness => StructuralMutation::Grow,
            Self::FixedTopology(_) => StructuralMutation::Frozen,
            Self::Simplifying { .. } => StructuralMutation::Shrink,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoevolutionConfig {
    pub params: EvolutionParams,
    pub mode: EvolutionMode,
    pub generations: u32,
    pub seed: u64,
    /// Training duel. Comparisons reuse its physics on the 144 layouts.
    pub duel: DuelConfig,
    /// Parasite slots filled by species champions.
    pub parasite_champions: usize,
    /// Parasite slots sampled from the Hall of Fame.
    pub parasite_hall: usize,
    /// Worker threads; 0 uses the rayon default. Never affects results.
    pub workers: usize,
}

impl CoevolutionConfig {
    pub fn new(params: EvolutionParams, mode: EvolutionMode, generations: u32, seed: u64) -> Self {
        Self {
            params,
            mode,
            generations,
            seed,
            duel: DuelConfig::default(),
            parasite_champions: 4,
            parasite_hall: 8,
            workers: 0,
        }
    }

    pub fn parasites(&self) -> usize {
        self.parasite_champions + self.parasite_hall
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct HallOfFame {
    /// `(generation, champion)` in generation order.
    pub entries: Vec<(u32, Genome)>,
}

impl HallOfFame {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, generation: u32, genome: Genome) {
        debug_assert_eq!(generation as usize, self.entries.len());
        self.entries.push((generation, genome));
    }
}

/// Opponents for one host population.
///
/// With species from the previous generation, the champions of the
/// `champions` species with the best raw fitness come first. Missing slots
/// are padded with the next-best members of the largest species. The hall
/// supplies `hall_slots` more, without replacement when it is large enough.
/// Without species (generation 0) every slot is a random opponent member.
pub fn select_parasites<R: rand::Rng + ?Sized>(
    species: Option<&SpeciesSet>,
    opponents: &[Genome],
    hall: &HallOfFame,
    champions: usize,
    hall_slots: usize,
    rng: &mut R,
) -> Vec<Genome> {
    let total = champions + hall_slots;
    let set = match species {
        Some(s) if !s.is_empty() && !hall.is_empty() => s,
        _ => return draw(opponents, total, rng),
    };
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = set.species[a].champion().fitness;
        let fb = set.species[b].champion().fitness;
        fb.total_cmp(&fa)
    });
    let mut out: Vec<Genome> = order
        .iter()
        .take(champions)
        .map(|&i| set.species[i].champion().genome.clone())
        .collect();
    if out.len() < champions {
        let largest = (0..set.len())
            .max_by(|&a, &b| set.species[a].members.len().cmp(&set.species[b].members.len()).then(b.cmp(&a)))
            .expect("non-empty");
        let ranked = set.species[largest].ranked();
        let pad = ranked.iter().skip(1).chain(ranked.iter().cycle());
        let missing = champions - out.len();
        out.extend(pad.take(missing).map(|m| m.genome.clone()));
    }
    let hall_genomes: Vec<Genome> = hall.entries.iter().map(|(_, g)| g.clone()).collect();
    out.extend(draw(&hall_genomes, hall_slots, rng));
    out
}

/// `n` uniform draws, without replacement when `pool` is large enough.
fn draw<R: rand::Rng + ?Sized>(pool: &[Genome], n: usize, rng: &mut R) -> Vec<Genome> {
    if pool.len() >= n {
        pool.choose_multiple(rng, n).cloned().collect()
    } else {
        (0..n).map(|_| pool.choose(rng).expect("non-empty pool").clone()).collect()
    }
}

/// How games are decided during fitness evaluation.
pub enum Games<'a> {
    Simulate(&'a DuelConfig),
    /// Fair coin per game, drawn in (host, parasite, side) order.
    CoinFlip(&'a mut Rng),
}

/// Raw fitness of each host: wins out of two games per parasite, one from
/// each starting side. Timeouts count as losses.
pub fn evaluate_host_population(hosts: &[Genome], parasites: &[Genome], games: Games<'_>) -> Vec<f64> {
    match games {
        Games::CoinFlip(rng) => hosts
            .iter()
            .map(|_| (0..2 * parasites.len()).filter(|_| rng.gen::<bool>()).count() as f64)
            .collect(),
        Games::Simulate(cfg) => {
            let east = cfg.swapped();
            let opponents: Vec<Network> = parasites.iter().map(Network::build).collect();
            hosts
                .par_iter()
                .map(|h| {
                    let mut host = Network::build(h);
                    let mut wins = 0;
                    for p in &opponents {
                        let mut p = p.clone();
                        for side in [cfg, &east] {
                            if run_duel_networks(&mut host, &mut p, side, false).winner == Winner::A {
                                wins += 1;
                            }
                        }
                    }
                    wins as f64
                })
                .collect()
        }
    }
}

/// Which population supplied the generation champion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChampionSource {
    Host,
    Parasite,
}

/// The winner of the 288-game comparison between the two population
/// champions. An exact tie goes to the host.
pub fn generation_champion<R: Referee + ?Sized>(
    host: &Genome,
    parasite: &Genome,
    referee: &R,
) -> (ChampionSource, ComparisonResult) {
    let r = referee.compare(host, parasite);
    let source = if r.superior() == Winner::B {
        ChampionSource::Parasite
    } else {
        ChampionSource::Host
    };
    (source, r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesStat {
    pub id: u32,
    pub size: usize,
    pub best_fitness: f64,
    pub age: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationStats {
    pub champion: Genome,
    pub champion_fitness: f64,
    pub mean_fitness: f64,
    /// Compatibility threshold used for this generation's assignment.
    pub threshold: f64,
    pub species: Vec<SpeciesStat>,
    pub min_connections: usize,
    pub max_connections: usize,
    pub min_hidden: usize,
    pub max_hidden: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub generation: u32,
    /// Population 0 plays host in the champion comparison.
    pub populations: [PopulationStats; 2],
    pub champion_source: ChampionSource,
    /// Population 0 champion as side A.
    pub champion_comparison: ComparisonResult,
    pub generation_champion: Genome,
    /// Hierarchy size after this generation's tournament entry.
    pub dominance_level: usize,
    pub new_dominant: bool,
    pub tournament_comparisons: usize,
}

impl GenerationRecord {
    pub fn min_connections(&self) -> usize {
        self.populations.iter().map(|p| p.min_connections).min().unwrap()
    }

    pub fn max_connections(&self) -> usize {
        self.populations.iter().map(|p| p.max_connections).max().unwrap()
    }

    pub fn best_fitness(&self) -> f64 {
        self.populations[0].champion_fitness.max(self.populations[1].champion_fitness)
    }

    pub fn species_count(&self) -> usize {
        self.populations[0].species.len() + self.populations[1].species.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunArchive {
    pub config: CoevolutionConfig,
    pub records: Vec<GenerationRecord>,
    pub hall: HallOfFame,
    pub hierarchy: DominanceHierarchy,
}

pub fn run_coevolution(config: &CoevolutionConfig) -> Result<RunArchive, CoevolutionError> {
    run_coevolution_observed(config, |_, _| {})
}

/// As [`run_coevolution`], calling `observe(record, populations)` after each
/// generation is evaluated, before reproduction.
pub fn run_coevolution_observed<F>(config: &CoevolutionConfig, observe: F) -> Result<RunArchive, CoevolutionError>
where
    F: FnMut(&GenerationRecord, &[Vec<Genome>; 2]) + Send,
{
    config.params.validate().map_err(CoevolutionError::Params)?;
    if config.generations == 0 {
        return Err(CoevolutionError::NoGenerations);
    }
    if let EvolutionMode::FixedTopology(FixedTopology::Seed(g)) = &config.mode {
        if g.io() != IoSpec::DUEL {
            return Err(CoevolutionError::SeedLayout);
        }
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if config.workers > 0 {
        builder = builder.num_threads(config.workers);
    }
    let pool = builder.build().map_err(|e| CoevolutionError::Workers(e.to_string()))?;
    Ok(pool.install(|| Run::new(config).execute(observe)))
}

fn initial_population(config: &CoevolutionConfig, population: u8) -> Vec<Genome> {
    let mut rng = stream(config.seed, Purpose::Initialization, population, 0);
    let (io, range, n) = (IoSpec::DUEL, config.params.weight_init_range, config.params.population_size);
    (0..n)
        .map(|_| match &config.mode {
            EvolutionMode::Complexifying | EvolutionMode::RandomFitness => minimal_genome(io, &mut rng, range),
            EvolutionMode::FixedTopology(FixedTopology::Hidden(h)) => fully_recurrent_genome(io, *h, &mut rng, range),
            EvolutionMode::FixedTopology(FixedTopology::Seed(g)) => g.with_random_weights(&mut rng, range),
            EvolutionMode::Simplifying { initial_hidden } => {
                fully_recurrent_genome(io, *initial_hidden, &mut rng, range)
            }
        })
        .collect()
}

struct Run<'a> {
    config: &'a CoevolutionConfig,
    referee: DuelReferee,
    populations: [Vec<Genome>; 2],
    registries: [InnovationRegistry; 2],
    species: [SpeciesSet; 2],
    evaluated: bool,
    hall: HallOfFame,
    hierarchy: DominanceHierarchy,
    records: Vec<GenerationRecord>,
}

impl<'a> Run<'a> {
    fn new(config: &'a CoevolutionConfig) -> Self {
        let populations = [initial_population(config, 0), initial_population(config, 1)];
        let registries = [0, 1].map(|p| InnovationRegistry::following(IoSpec::DUEL, &populations[p]));
        Self {
            config,
            referee: DuelReferee::new(&config.duel),
            populations,
            registries,
            species: [SpeciesSet::new(&config.params), SpeciesSet::new(&config.params)],
            evaluated: false,
            hall: HallOfFame::default(),
            hierarchy: DominanceHierarchy::default(),
            records: Vec::with_capacity(config.generations as usize),
        }
    }

    fn execute<F: FnMut(&GenerationRecord, &[Vec<Genome>; 2])>(mut self, mut observe: F) -> RunArchive {
        for g in 0..self.config.generations {
            self.generation(g);
            observe(self.records.last().expect("just recorded"), &self.populations);
            if g + 1 < self.config.generations {
                self.reproduce(g);
            }
        }
        RunArchive {
            config: self.config.clone(),
            records: self.records,
            hall: self.hall,
            hierarchy: self.hierarchy,
        }
    }

    fn fitness(&self, g: u32, host: usize, parasites: &[Genome]) -> Vec<f64> {
        let hosts = &self.populations[host];
        match self.config.mode {
            EvolutionMode::RandomFitness => {
                let mut rng = stream(self.config.seed, Purpose::RandomFitness, host as u8, g as u64);
                evaluate_host_population(hosts, parasites, Games::CoinFlip(&mut rng))
            }
            _ => evaluate_host_population(hosts, parasites, Games::Simulate(&self.config.duel)),
        }
    }

    fn generation(&mut self, g: u32) {
        let cfg = self.config;
        let parasites = [0usize, 1].map(|p| {
            let mut rng = stream(cfg.seed, Purpose::ParasiteSelection, p as u8, g as u64);
            let prev = self.evaluated.then(|| &self.species[1 - p]);
            select_parasites(
                prev,
                &self.populations[1 - p],
                &self.hall,
                cfg.parasite_champions,
                cfg.parasite_hall,
                &mut rng,
            )
        });
        let (f0, f1) = rayon::join(|| self.fitness(g, 0, &parasites[0]), || self.fitness(g, 1, &parasites[1]));
        let fitness = [f0, f1];

        let mut stats = Vec::with_capacity(2);
        for (p, fitness) in fitness.iter().enumerate() {
            let threshold = self.species[p].threshold;
            let mut set = self.species[p].assign(&self.populations[p], fitness, &cfg.params.compatibility);
            set.adjust_threshold();
            set.share_fitness();
            self.species[p] = set;
            stats.push(population_stats(&self.populations[p], fitness, &self.species[p], threshold));
        }
        self.evaluated = true;
        let populations: [PopulationStats; 2] = stats.try_into().expect("two populations");

        let (source, comparison) = generation_champion(&populations[0].champion, &populations[1].champion, &self.referee);
        let champion = match source {
            ChampionSource::Host => populations[0].champion.clone(),
            ChampionSource::Parasite => populations[1].champion.clone(),
        };
        self.hall.push(g, champion.clone());
        let step = self.hierarchy.update(&champion, g, &self.referee);
        self.records.push(GenerationRecord {
            generation: g,
            populations,
            champion_source: source,
            champion_comparison: comparison,
            generation_champion: champion,
            dominance_level: self.hierarchy.len(),
            new_dominant: step.accepted,
            tournament_comparisons: step.comparisons,
        });
    }

    fn reproduce(&mut self, g: u32) {
        let cfg = self.config;
        for p in 0..2 {
            let set = &self.species[p];
            let counts = set.allocate_offspring(cfg.params.population_size, cfg.params.stagnation_limit);
            let mut rng = stream(cfg.seed, Purpose::Reproduction, p as u8, g as u64);
            let offspring = reproduce(
                set,
                &counts,
                &mut self.registries[p],
                &mut rng,
                &cfg.params,
                cfg.mode.structural(),
            );
            self.populations[p] = offspring.into_iter().map(|o| o.genome).collect();
            self.registries[p].new_generation();
            let mut rng = stream(cfg.seed, Purpose::Representatives, p as u8, g as u64);
            self.species[p].choose_representatives(&mut rng);
        }
    }
}

fn population_stats(genomes: &[Genome], fitness: &[f64], set: &SpeciesSet, threshold: f64) -> PopulationStats {
    let best = (0..genomes.len())
        .max_by(|&a, &b| fitness[a].total_cmp(&fitness[b]).then(b.cmp(&a)))
        .expect("non-empty population");
    let conns = genomes.iter().map(Genome::connection_count);
    let hidden = genomes.iter().map(Genome::hidden_count);
    PopulationStats {
        champion: genomes[best].clone(),
        champion_fitness: fitness[best],
        mean_fitness: fitness.iter().sum::<f64>() / fitness.len() as f64,
        threshold,
        species: set
            .species
            .iter()
            .map(|s| SpeciesStat {
                id: s.id,
                size: s.members.len(),
                best_fitness: s.best_fitness,
                age: s.age,
            })
            .collect(),
        min_connections: conns.clone().min().unwrap(),
        max_connections: conns.max().unwrap(),
        min_hidden: hidden.clone().min().unwrap(),
        max_hidden: hidden.max().unwrap(),
    }
}
