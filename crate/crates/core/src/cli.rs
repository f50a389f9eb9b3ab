//! Operator surface: run configuration files, archive reading and writing,
//! and the five subcommands. The binary only parses arguments and maps
//! errors to exit codes.
//!
//! Archive layout:
//!
//! ```text
//! run.meta                       magic line, then the canonical run config
//! seed.genome                    only for seeded fixed-topology runs
//! stats.csv                      one row per generation
//! dominance.txt                  the dominance hierarchy
//! gen_NNNN/generation.txt        scalar record fields
//! gen_NNNN/species.csv           species of both populations
//! gen_NNNN/champion_a.genome     population champions
//! gen_NNNN/champion_b.genome
//! gen_NNNN/generation_champion.genome
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::coevolution::{
    run_coevolution_observed, ChampionSource, CoevolutionConfig, EvolutionMode, FixedTopology, GenerationRecord,
    HallOfFame, PopulationStats, RunArchive, SpeciesStat,
};
use crate::dominance::{
    complexity_series, dominance_gap_curve, performance_score, ComparisonResult, DominanceHierarchy,
    DominantStrategy, DuelReferee,
};
use crate::duel::{evaluation_layouts, run_duel, DuelConfig, DuelOutcome};
use crate::genome::{decode_genome, encode_genome, Genome};
use crate::params::EvolutionParams;

pub const RUN_MAGIC: &str = "neat-duel-run 1";
pub const GENERATION_MAGIC: &str = "neat-duel-generation 1";
pub const STATS_MAGIC: &str = "#neat-duel-stats 1";
pub const SPECIES_MAGIC: &str = "#neat-duel-species 1";
pub const DOMINANCE_MAGIC: &str = "#neat-duel-dominance 1";

pub const STATS_HEADER: &str = "generation,dominance_level,new_dominant,champion_source,champion_nodes,\
champion_connections,min_connections,max_connections,best_fitness_a,best_fitness_b,threshold_a,threshold_b,\
species_a,species_b";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Data(_) | Self::Io { .. } => 2,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn read_genome(path: &Path) -> Result<Genome, CliError> {
    decode_genome(&read(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// run configuration

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeName {
    Complexifying,
    FixedTopology,
    Simplifying,
    RandomFitness,
}

impl ModeName {
    fn as_str(self) -> &'static str {
        match self {
            Self::Complexifying => "complexifying",
            Self::FixedTopology => "fixed-topology",
            Self::Simplifying => "simplifying",
            Self::RandomFitness => "random-fitness",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [Self::Complexifying, Self::FixedTopology, Self::Simplifying, Self::RandomFitness]
            .into_iter()
            .find(|m| m.as_str() == s)
    }
}

/// Flat `key = value` run description. `#` starts a comment.
///
/// Every key except `seed` has a default: the standard NEAT parameters, the
/// training duel, 500 generations and 4 + 8 parasites. `hidden` defaults to
/// 10 for fixed-topology runs and 12 for simplifying runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: ModeName,
    pub hidden: Option<u32>,
    /// Topology source for a fixed-topology run.
    pub seed_genome: Option<PathBuf>,
    pub generations: u32,
    pub seed: Option<u64>,
    pub params: EvolutionParams,
    pub duel: DuelConfig,
    pub parasite_champions: usize,
    pub parasite_hall: usize,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: ModeName::Complexifying,
            hidden: None,
            seed_genome: None,
            generations: 500,
            seed: None,
            params: EvolutionParams::default(),
            duel: DuelConfig::default(),
            parasite_champions: 4,
            parasite_hall: 8,
            output: None,
        }
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("bad value '{value}' for key '{key}'"))
}

fn flag(key: &str, value: &str) -> Result<bool, String> {
    match value {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err(format!("bad value '{value}' for key '{key}'")),
    }
}

impl RunConfig {
    /// Parses a config file. Relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        let mut seen = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("line {}: expected key = value", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if seen.insert(key.to_owned(), n + 1).is_some() {
                return Err(CliError::Usage(format!("line {}: duplicate key '{key}'", n + 1)));
            }
            cfg.set(key, value, base)
                .map_err(|e| CliError::Usage(format!("line {}: {e}", n + 1)))?;
        }
        cfg.params
            .validate()
            .map_err(|e| CliError::Usage(format!("invalid parameters: {e}")))?;
        if cfg.seed_genome.is_some() && cfg.mode != ModeName::FixedTopology {
            return Err(CliError::Usage("key 'seed_genome' needs mode = fixed-topology".into()));
        }
        if cfg.hidden.is_some() && !matches!(cfg.mode, ModeName::FixedTopology | ModeName::Simplifying) {
            return Err(CliError::Usage(format!("key 'hidden' has no effect in mode {}", cfg.mode.as_str())));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&read(path)?, base)
    }

    fn set(&mut self, key: &str, v: &str, base: &Path) -> Result<(), String> {
        let p = &mut self.params;
        let d = &mut self.duel;
        match key {
            "mode" => self.mode = ModeName::parse(v).ok_or_else(|| format!("unknown mode '{v}'"))?,
            "hidden" => self.hidden = Some(num(key, v)?),
            "seed_genome" => self.seed_genome = Some(base.join(v)),
            "generations" => self.generations = num(key, v)?,
            "seed" => self.seed = Some(num(key, v)?),
            "output" => self.output = Some(base.join(v)),
            "parasite_champions" => self.parasite_champions = num(key, v)?,
            "parasite_hall" => self.parasite_hall = num(key, v)?,
            "population_size" => p.population_size = num(key, v)?,
            "excess_coeff" => p.compatibility.excess = num(key, v)?,
            "disjoint_coeff" => p.compatibility.disjoint = num(key, v)?,
            "weight_coeff" => p.compatibility.weight = num(key, v)?,
            "normalize_distance" => p.compatibility.normalize = flag(key, v)?,
            "initial_threshold" => p.initial_threshold = num(key, v)?,
            "threshold_step" => p.threshold_step = num(key, v)?,
            "threshold_floor" => p.threshold_floor = num(key, v)?,
            "target_species" => p.target_species = num(key, v)?,
            "stagnation_limit" => p.stagnation_limit = num(key, v)?,
            "elitism_min_size" => p.elitism_min_size = num(key, v)?,
            "weight_mutation_rate" => p.weight_mutation_rate = num(key, v)?,
            "weight_perturb_prob" => p.weight_perturb_prob = num(key, v)?,
            "weight_perturb_power" => p.weight_perturb_power = num(key, v)?,
            "weight_init_range" => p.weight_init_range = num(key, v)?,
            "weight_cap" => p.weight_cap = num(key, v)?,
            "disable_inherit_prob" => p.disable_inherit_prob = num(key, v)?,
            "crossover_average_prob" => p.crossover_average_prob = num(key, v)?,
            "mutation_only_prob" => p.mutation_only_prob = num(key, v)?,
            "interspecies_mating_prob" => p.interspecies_mating_prob = num(key, v)?,
            "add_node_prob" => p.add_node_prob = num(key, v)?,
            "add_link_prob" => p.add_link_prob = num(key, v)?,
            "remove_link_prob" => p.remove_link_prob = num(key, v)?,
            "survival_fraction" => p.survival_fraction = num(key, v)?,
            "max_steps" => d.max_steps = num(key, v)?,
            "initial_energy" => d.initial_energy = num(key, v)?,
            "food_energy" => d.food_energy = num(key, v)?,
            "collision_radius" => d.collision_radius = num(key, v)?,
            "pickup_radius" => d.pickup_radius = num(key, v)?,
            "sensor_range" => d.sensor_range = num(key, v)?,
            "wall_range" => d.wall_range = num(key, v)?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    /// Every key with its value, `seed_genome` and `output` excepted.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let p = &self.params;
        let d = &self.duel;
        let mut v = vec![("mode", self.mode.as_str().to_owned())];
        if let Some(h) = self.effective_hidden() {
            v.push(("hidden", h.to_string()));
        }
        v.extend([
            ("generations", self.generations.to_string()),
            ("seed", self.seed.map_or_else(String::new, |s| s.to_string())),
            ("parasite_champions", self.parasite_champions.to_string()),
            ("parasite_hall", self.parasite_hall.to_string()),
            ("population_size", p.population_size.to_string()),
            ("excess_coeff", p.compatibility.excess.to_string()),
            ("disjoint_coeff", p.compatibility.disjoint.to_string()),
            ("weight_coeff", p.compatibility.weight.to_string()),
            ("normalize_distance", p.compatibility.normalize.to_string()),
            ("initial_threshold", p.initial_threshold.to_string()),
            ("threshold_step", p.threshold_step.to_string()),
            ("threshold_floor", p.threshold_floor.to_string()),
            ("target_species", p.target_species.to_string()),
            ("stagnation_limit", p.stagnation_limit.to_string()),
            ("elitism_min_size", p.elitism_min_size.to_string()),
            ("weight_mutation_rate", p.weight_mutation_rate.to_string()),
            ("weight_perturb_prob", p.weight_perturb_prob.to_string()),
            ("weight_perturb_power", p.weight_perturb_power.to_string()),
            ("weight_init_range", p.weight_init_range.to_string()),
            ("weight_cap", p.weight_cap.to_string()),
            ("disable_inherit_prob", p.disable_inherit_prob.to_string()),
            ("crossover_average_prob", p.crossover_average_prob.to_string()),
            ("mutation_only_prob", p.mutation_only_prob.to_string()),
            ("interspecies_mating_prob", p.interspecies_mating_prob.to_string()),
            ("add_node_prob", p.add_node_prob.to_string()),
            ("add_link_prob", p.add_link_prob.to_string()),
            ("remove_link_prob", p.remove_link_prob.to_string()),
            ("survival_fraction", p.survival_fraction.to_string()),
            ("max_steps", d.max_steps.to_string()),
            ("initial_energy", d.initial_energy.to_string()),
            ("food_energy", d.food_energy.to_string()),
            ("collision_radius", d.collision_radius.to_string()),
            ("pickup_radius", d.pickup_radius.to_string()),
            ("sensor_range", d.sensor_range.to_string()),
            ("wall_range", d.wall_range.to_string()),
        ]);
        v
    }

    /// Canonical text form, the body of `run.meta`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(s, "{k} = {v}");
        }
        if self.seed_genome.is_some() {
            s.push_str("seed_genome = seed.genome\n");
        }
        s
    }

    fn effective_hidden(&self) -> Option<u32> {
        match self.mode {
            ModeName::FixedTopology if self.seed_genome.is_none() => Some(self.hidden.unwrap_or(10)),
            ModeName::Simplifying => Some(self.hidden.unwrap_or(12)),
            _ => None,
        }
    }

    /// Resolves the run: checks the seed and loads any seed genome.
    pub fn coevolution(&self, workers: usize) -> Result<CoevolutionConfig, CliError> {
        let seed = self
            .seed
            .ok_or_else(|| CliError::Usage("missing required key 'seed'".into()))?;
        if self.generations == 0 {
            return Err(CliError::Usage("key 'generations' must be at least 1".into()));
        }
        let mode = match self.mode {
            ModeName::Complexifying => EvolutionMode::Complexifying,
            ModeName::RandomFitness => EvolutionMode::RandomFitness,
            ModeName::Simplifying => EvolutionMode::Simplifying {
                initial_hidden: self.effective_hidden().expect("simplifying has hidden"),
            },
            ModeName::FixedTopology => match &self.seed_genome {
                Some(path) => EvolutionMode::FixedTopology(FixedTopology::Seed(read_genome(path)?)),
                None => EvolutionMode::FixedTopology(FixedTopology::Hidden(self.effective_hidden().unwrap())),
            },
        };
        Ok(CoevolutionConfig {
            params: self.params.clone(),
            mode,
            generations: self.generations,
            seed,
            duel: self.duel.clone(),
            parasite_champions: self.parasite_champions,
            parasite_hall: self.parasite_hall,
            workers,
        })
    }

    /// The config that reproduces `c`. Seeded runs refer to `seed.genome`.
    pub fn from_coevolution(c: &CoevolutionConfig) -> Self {
        let (mode, hidden, seed_genome) = match &c.mode {
            EvolutionMode::Complexifying => (ModeName::Complexifying, None, None),
            EvolutionMode::RandomFitness => (ModeName::RandomFitness, None, None),
            EvolutionMode::Simplifying { initial_hidden } => (ModeName::Simplifying, Some(*initial_hidden), None),
            EvolutionMode::FixedTopology(FixedTopology::Hidden(h)) => (ModeName::FixedTopology, Some(*h), None),
            EvolutionMode::FixedTopology(FixedTopology::Seed(_)) => {
                (ModeName::FixedTopology, None, Some(PathBuf::from("seed.genome")))
            }
        };
        Self {
            mode,
            hidden,
            seed_genome,
            generations: c.generations,
            seed: Some(c.seed),
            params: c.params.clone(),
            duel: c.duel.clone(),
            parasite_champions: c.parasite_champions,
            parasite_hall: c.parasite_hall,
            output: None,
        }
    }
}

// ---------------------------------------------------------------------------
// archive I/O

fn gen_dir(root: &Path, g: u32) -> PathBuf {
    root.join(format!("gen_{g:04}"))
}

fn source_str(s: ChampionSource) -> &'static str {
    match s {
        ChampionSource::Host => "a",
        ChampionSource::Parasite => "b",
    }
}

pub fn stats_csv(records: &[GenerationRecord]) -> String {
    let mut s = format!("{STATS_MAGIC}\n{STATS_HEADER}\n");
    for r in records {
        let [a, b] = &r.populations;
        let c = &r.generation_champion;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.generation,
            r.dominance_level,
            r.new_dominant as u8,
            source_str(r.champion_source),
            c.nodes().len(),
            c.connection_count(),
            r.min_connections(),
            r.max_connections(),
            a.champion_fitness,
            b.champion_fitness,
            a.threshold,
            b.threshold,
            a.species.len(),
            b.species.len(),
        );
    }
    s
}

fn generation_text(r: &GenerationRecord) -> String {
    let mut s = format!("{GENERATION_MAGIC}\n");
    let c = &r.champion_comparison;
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("generation", r.generation.to_string());
    kv("champion_source", source_str(r.champion_source).into());
    kv("comparison", format!("{}/{}/{}", c.wins_a, c.wins_b, c.draws));
    kv("dominance_level", r.dominance_level.to_string());
    kv("new_dominant", r.new_dominant.to_string());
    kv("tournament_comparisons", r.tournament_comparisons.to_string());
    for (tag, p) in ["a", "b"].iter().zip(&r.populations) {
        kv(&format!("champion_fitness_{tag}"), p.champion_fitness.to_string());
        kv(&format!("mean_fitness_{tag}"), p.mean_fitness.to_string());
        kv(&format!("threshold_{tag}"), p.threshold.to_string());
        kv(&format!("min_connections_{tag}"), p.min_connections.to_string());
        kv(&format!("max_connections_{tag}"), p.max_connections.to_string());
        kv(&format!("min_hidden_{tag}"), p.min_hidden.to_string());
        kv(&format!("max_hidden_{tag}"), p.max_hidden.to_string());
    }
    s
}

fn species_csv(r: &GenerationRecord) -> String {
    let mut s = format!("{SPECIES_MAGIC}\npopulation,id,size,best_fitness,age\n");
    for (tag, p) in ["a", "b"].iter().zip(&r.populations) {
        for sp in &p.species {
            let _ = writeln!(s, "{tag},{},{},{},{}", sp.id, sp.size, sp.best_fitness, sp.age);
        }
    }
    s
}

fn comparison_str(c: &ComparisonResult) -> String {
    format!("{}/{}/{}", c.wins_a, c.wins_b, c.draws)
}

fn parse_comparison(s: &str) -> Option<ComparisonResult> {
    let mut it = s.split('/').map(str::parse::<u32>);
    let r = ComparisonResult {
        wins_a: it.next()?.ok()?,
        wins_b: it.next()?.ok()?,
        draws: it.next()?.ok()?,
    };
    it.next().is_none().then_some(r)
}

/// Dominance table: level, generation, nodes, connections, then the
/// `wins/losses/draws` record against each lower level, separated by `;`.
pub fn dominance_report(h: &DominanceHierarchy) -> String {
    let mut s = format!("{DOMINANCE_MAGIC}\nlevel,generation,nodes,connections,record\n");
    for (i, d) in h.levels.iter().enumerate() {
        let record: Vec<String> = d.record.iter().map(comparison_str).collect();
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            i + 1,
            d.generation,
            d.genome.nodes().len(),
            d.genome.connection_count(),
            record.join(";")
        );
    }
    s
}

pub fn write_archive(dir: &Path, archive: &RunArchive) -> Result<(), CliError> {
    if dir.join("run.meta").exists() {
        return Err(CliError::Data(format!("{} already holds a run", dir.display())));
    }
    create_dir(dir)?;
    let cfg = RunConfig::from_coevolution(&archive.config);
    write(&dir.join("run.meta"), &format!("{RUN_MAGIC}\n{}", cfg.to_text()))?;
    if let EvolutionMode::FixedTopology(FixedTopology::Seed(g)) = &archive.config.mode {
        write(&dir.join("seed.genome"), &encode_genome(g))?;
    }
    for r in &archive.records {
        let gd = gen_dir(dir, r.generation);
        create_dir(&gd)?;
        write(&gd.join("generation.txt"), &generation_text(r))?;
        write(&gd.join("species.csv"), &species_csv(r))?;
        write(&gd.join("champion_a.genome"), &encode_genome(&r.populations[0].champion))?;
        write(&gd.join("champion_b.genome"), &encode_genome(&r.populations[1].champion))?;
        write(&gd.join("generation_champion.genome"), &encode_genome(&r.generation_champion))?;
    }
    write(&dir.join("stats.csv"), &stats_csv(&archive.records))?;
    write(&dir.join("dominance.txt"), &dominance_report(&archive.hierarchy))?;
    Ok(())
}

fn corrupt(path: &Path, what: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {what}", path.display()))
}

fn body_after_magic<'a>(path: &Path, text: &'a str, magic: &str) -> Result<&'a str, CliError> {
    match text.split_once('\n') {
        Some((first, rest)) if first.trim_end() == magic => Ok(rest),
        _ => Err(corrupt(path, format!("expected leading line '{magic}'"))),
    }
}

fn read_generation(dir: &Path, g: u32) -> Result<GenerationRecord, CliError> {
    let gd = gen_dir(dir, g);
    let path = gd.join("generation.txt");
    let text = read(&path)?;
    let mut kv = BTreeMap::new();
    for line in body_after_magic(&path, &text, GENERATION_MAGIC)?.lines() {
        let (k, v) = line.split_once(" = ").ok_or_else(|| corrupt(&path, format!("bad line '{line}'")))?;
        kv.insert(k.to_owned(), v.to_owned());
    }
    let get = |k: &str| kv.get(k).ok_or_else(|| corrupt(&path, format!("missing '{k}'")));
    fn val<T: FromStr>(path: &Path, k: &str, v: &str) -> Result<T, CliError> {
        v.parse().map_err(|_| corrupt(path, format!("bad value for '{k}'")))
    }
    let field = |k: &str| -> Result<f64, CliError> { val(&path, k, get(k)?) };
    let count = |k: &str| -> Result<usize, CliError> { val(&path, k, get(k)?) };

    let species_path = gd.join("species.csv");
    let species_text = read(&species_path)?;
    let mut species: [Vec<SpeciesStat>; 2] = [Vec::new(), Vec::new()];
    for line in body_after_magic(&species_path, &species_text, SPECIES_MAGIC)?.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let bad = || corrupt(&species_path, format!("bad row '{line}'"));
        if f.len() != 5 {
            return Err(bad());
        }
        let slot = match f[0] {
            "a" => 0,
            "b" => 1,
            _ => return Err(bad()),
        };
        species[slot].push(SpeciesStat {
            id: f[1].parse().map_err(|_| bad())?,
            size: f[2].parse().map_err(|_| bad())?,
            best_fitness: f[3].parse().map_err(|_| bad())?,
            age: f[4].parse().map_err(|_| bad())?,
        });
    }

    let mut pops = Vec::with_capacity(2);
    for (slot, (tag, sp)) in ["a", "b"].iter().zip(species).enumerate() {
        let _ = slot;
        pops.push(PopulationStats {
            champion: read_genome(&gd.join(format!("champion_{tag}.genome")))?,
            champion_fitness: field(&format!("champion_fitness_{tag}"))?,
            mean_fitness: field(&format!("mean_fitness_{tag}"))?,
            threshold: field(&format!("threshold_{tag}"))?,
            species: sp,
            min_connections: count(&format!("min_connections_{tag}"))?,
            max_connections: count(&format!("max_connections_{tag}"))?,
            min_hidden: count(&format!("min_hidden_{tag}"))?,
            max_hidden: count(&format!("max_hidden_{tag}"))?,
        });
    }
    let generation: u32 = val(&path, "generation", get("generation")?)?;
    if generation != g {
        return Err(corrupt(&path, format!("generation {generation} stored under gen_{g:04}")));
    }
    Ok(GenerationRecord {
        generation,
        populations: pops.try_into().expect("two populations"),
        champion_source: match get("champion_source")?.as_str() {
            "a" => ChampionSource::Host,
            "b" => ChampionSource::Parasite,
            _ => return Err(corrupt(&path, "bad champion_source")),
        },
        champion_comparison: parse_comparison(get("comparison")?).ok_or_else(|| corrupt(&path, "bad comparison"))?,
        generation_champion: read_genome(&gd.join("generation_champion.genome"))?,
        dominance_level: count("dominance_level")?,
        new_dominant: val(&path, "new_dominant", get("new_dominant")?)?,
        tournament_comparisons: count("tournament_comparisons")?,
    })
}

fn read_hierarchy(dir: &Path, records: &[GenerationRecord]) -> Result<DominanceHierarchy, CliError> {
    let path = dir.join("dominance.txt");
    let text = read(&path)?;
    let mut levels = Vec::new();
    for line in body_after_magic(&path, &text, DOMINANCE_MAGIC)?.lines().skip(1) {
        let bad = || corrupt(&path, format!("bad row '{line}'"));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad());
        }
        let generation: u32 = f[1].parse().map_err(|_| bad())?;
        let genome = records
            .get(generation as usize)
            .ok_or_else(bad)?
            .generation_champion
            .clone();
        let record = if f[4].is_empty() {
            Vec::new()
        } else {
            f[4].split(';').map(parse_comparison).collect::<Option<Vec<_>>>().ok_or_else(bad)?
        };
        levels.push(DominantStrategy {
            generation,
            genome,
            record,
        });
    }
    let h = DominanceHierarchy { levels };
    if !h.is_consistent() {
        return Err(corrupt(&path, "hierarchy records are inconsistent"));
    }
    Ok(h)
}

pub fn read_archive(dir: &Path) -> Result<RunArchive, CliError> {
    let meta = dir.join("run.meta");
    let text = read(&meta)?;
    let body = body_after_magic(&meta, &text, RUN_MAGIC)?;
    let cfg = RunConfig::parse(body, dir).map_err(|e| corrupt(&meta, e))?;
    let config = cfg.coevolution(0).map_err(|e| corrupt(&meta, e))?;

    let stats_path = dir.join("stats.csv");
    let stats = read(&stats_path)?;
    let rows = body_after_magic(&stats_path, &stats, STATS_MAGIC)?.lines().skip(1).count();
    let mut records = Vec::with_capacity(rows);
    for g in 0..rows as u32 {
        records.push(read_generation(dir, g)?);
    }
    if stats_csv(&records) != stats {
        return Err(corrupt(&stats_path, "does not match the generation records"));
    }
    let hall = HallOfFame {
        entries: records
            .iter()
            .map(|r| (r.generation, r.generation_champion.clone()))
            .collect(),
    };
    let hierarchy = read_hierarchy(dir, &records)?;
    Ok(RunArchive {
        config,
        records,
        hall,
        hierarchy,
    })
}

// ---------------------------------------------------------------------------
// commands

fn pool(workers: usize) -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if workers > 0 {
        b = b.num_threads(workers);
    }
    b.build().map_err(|e| CliError::Usage(format!("cannot start {workers} workers: {e}")))
}

/// Runs the configured experiment and writes its archive to `out` (or the
/// config's `output`). Prints one summary line per generation to `log`.
pub fn cmd_evolve(
    config_path: &Path,
    out: Option<&Path>,
    workers: usize,
    log: &mut (dyn std::io::Write + Send),
) -> Result<RunArchive, CliError> {
    let cfg = RunConfig::load(config_path)?;
    let out = out
        .map(Path::to_owned)
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| CliError::Usage("no output directory: set 'output' or pass --out".into()))?;
    if out.join("run.meta").exists() {
        return Err(CliError::Data(format!("{} already holds a run", out.display())));
    }
    let run = cfg.coevolution(workers)?;
    let _ = writeln!(log, "generation best_fitness species threshold dominance_level");
    let archive = run_coevolution_observed(&run, |r, _| {
        let _ = writeln!(
            log,
            "{:>5} {:>5} {:>4} {:>6.2} {:>4}",
            r.generation,
            r.best_fitness(),
            r.species_count(),
            r.populations[0].threshold,
            r.dominance_level
        );
    })
    .map_err(|e| CliError::Usage(e.to_string()))?;
    write_archive(&out, &archive)?;
    Ok(archive)
}

pub struct DuelRequest<'a> {
    pub genome_a: &'a Path,
    pub genome_b: &'a Path,
    pub config: Option<&'a Path>,
    /// Comparison layout index instead of the training layout.
    pub layout: Option<usize>,
    /// Start A on the east side.
    pub swap: bool,
    pub replay: Option<&'a Path>,
}

pub fn cmd_duel(req: &DuelRequest<'_>) -> Result<DuelOutcome, CliError> {
    let a = read_genome(req.genome_a)?;
    let b = read_genome(req.genome_b)?;
    let mut cfg = match req.config {
        Some(p) => RunConfig::load(p)?.duel,
        None => DuelConfig::default(),
    };
    if let Some(i) = req.layout {
        let layouts = evaluation_layouts();
        let food = layouts
            .get(i)
            .ok_or_else(|| CliError::Usage(format!("layout {i} out of range 0..{}", layouts.len())))?;
        cfg = cfg.with_food(food.clone());
    }
    if req.swap {
        cfg = cfg.swapped();
    }
    let outcome = run_duel(&a, &b, &cfg, req.replay.is_some()).map_err(|e| CliError::Data(e.to_string()))?;
    if let (Some(path), Some(replay)) = (req.replay, &outcome.replay) {
        write(path, &replay.to_text())?;
    }
    Ok(outcome)
}

pub struct TournamentReport {
    pub hierarchy: DominanceHierarchy,
    pub comparisons: usize,
    pub matches_archive: bool,
}

/// Rebuilds the dominance hierarchy from the archived generation champions.
pub fn cmd_tournament(archive_dir: &Path, workers: usize) -> Result<TournamentReport, CliError> {
    let archive = read_archive(archive_dir)?;
    let referee = DuelReferee::new(&archive.config.duel);
    let (hierarchy, comparisons) = pool(workers)?.install(|| {
        let mut h = DominanceHierarchy::default();
        let mut n = 0;
        for (g, champion) in &archive.hall.entries {
            n += h.update(champion, *g, &referee).comparisons;
        }
        (h, n)
    });
    Ok(TournamentReport {
        matches_archive: hierarchy == archive.hierarchy,
        hierarchy,
        comparisons,
    })
}

pub struct CompareReport {
    /// `(archive, levels, score)`
    pub runs: Vec<(PathBuf, usize, f64)>,
    pub mean: f64,
}

/// Scores `champion` against the hierarchy of each archive.
pub fn cmd_compare(champion: &Path, archives: &[PathBuf], workers: usize) -> Result<CompareReport, CliError> {
    if archives.is_empty() {
        return Err(CliError::Usage("compare needs at least one archive".into()));
    }
    let genome = read_genome(champion)?;
    let pool = pool(workers)?;
    let mut runs = Vec::with_capacity(archives.len());
    for dir in archives {
        let archive = read_archive(dir)?;
        let referee = DuelReferee::new(&archive.config.duel);
        let score = pool
            .install(|| performance_score(&genome, &archive.hierarchy, &referee))
            .map_err(|e| corrupt(dir, e))?;
        runs.push((dir.clone(), archive.hierarchy.len(), score));
    }
    let mean = runs.iter().map(|r| r.2).sum::<f64>() / runs.len() as f64;
    Ok(CompareReport { runs, mean })
}

/// Writes `stats.csv`, `complexity.csv`, `dominance_gap.csv`,
/// `complexity.svg` and `dominance.svg` into `out`.
pub fn cmd_report(archive_dir: &Path, out: &Path) -> Result<(), CliError> {
    let archive = read_archive(archive_dir)?;
    create_dir(out)?;
    write(&out.join("stats.csv"), &stats_csv(&archive.records))?;
    let mut series = String::from(
        "generation,level,dominant_hidden,dominant_connections,population_min_connections,population_max_connections\n",
    );
    for p in complexity_series(&archive) {
        let _ = writeln!(
            series,
            "{},{},{},{},{},{}",
            p.generation,
            p.level,
            p.dominant_hidden,
            p.dominant_connections,
            p.population_min_connections,
            p.population_max_connections
        );
    }
    write(&out.join("complexity.csv"), &series)?;
    let mut gaps = String::from("gap,mean_margin\n");
    for (g, m) in dominance_gap_curve(&archive.hierarchy) {
        let _ = writeln!(gaps, "{g},{m}");
    }
    write(&out.join("dominance_gap.csv"), &gaps)?;
    write(&out.join("complexity.svg"), &complexity_svg(&archive.records))?;
    write(&out.join("dominance.svg"), &dominance_svg(&archive.records))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// SVG charts

const W: f64 = 640.0;
const H: f64 = 360.0;
const MARGIN: f64 = 48.0;

struct Frame {
    x_max: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        MARGIN + v / self.x_max.max(1.0) * (W - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        H - MARGIN - v / self.y_max.max(1.0) * (H - 2.0 * MARGIN)
    }

    fn open(&self, title: &str, y_label: &str) -> String {
        let mut s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
             <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
             <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n",
            W / 2.0
        );
        let (x0, y0, x1, y1) = (MARGIN, H - MARGIN, W - MARGIN, MARGIN);
        let _ = writeln!(s, "<path d=\"M{x0} {y1} L{x0} {y0} L{x1} {y0}\" stroke=\"black\" fill=\"none\"/>");
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\">generation (0..{})</text>",
            W / 2.0,
            H - 12.0,
            self.x_max
        );
        let _ = writeln!(
            s,
            "<text x=\"12\" y=\"{}\" font-size=\"11\" transform=\"rotate(-90 12 {})\" text-anchor=\"middle\">{y_label} (0..{})</text>",
            H / 2.0,
            H / 2.0,
            self.y_max
        );
        s
    }

    fn polyline(&self, points: impl Iterator<Item = (f64, f64)>, colour: &str) -> String {
        let pts: Vec<String> = points
            .map(|(x, y)| format!("{:.2},{:.2}", self.x(x), self.y(y)))
            .collect();
        format!(
            "<polyline points=\"{}\" stroke=\"{colour}\" fill=\"none\" stroke-width=\"1.5\"/>\n",
            pts.join(" ")
        )
    }
}

/// Champion connections with the population connection range.
pub fn complexity_svg(records: &[GenerationRecord]) -> String {
    let frame = Frame {
        x_max: records.len().saturating_sub(1) as f64,
        y_max: records.iter().map(|r| r.max_connections()).max().unwrap_or(0) as f64,
    };
    let mut s = frame.open("Complexity over generations", "connections");
    let g = |r: &GenerationRecord| r.generation as f64;
    s += &frame.polyline(records.iter().map(|r| (g(r), r.max_connections() as f64)), "#999999");
    s += &frame.polyline(records.iter().map(|r| (g(r), r.min_connections() as f64)), "#999999");
    s += &frame.polyline(
        records.iter().map(|r| (g(r), r.generation_champion.connection_count() as f64)),
        "#c03030",
    );
    s.push_str("</svg>\n");
    s
}

/// Dominance level over generations with one tick per new dominant strategy.
pub fn dominance_svg(records: &[GenerationRecord]) -> String {
    let frame = Frame {
        x_max: records.len().saturating_sub(1) as f64,
        y_max: records.last().map_or(0, |r| r.dominance_level) as f64,
    };
    let mut s = frame.open("Dominance transitions", "dominance level");
    for r in records.iter().filter(|r| r.new_dominant) {
        let x = frame.x(r.generation as f64);
        let _ = writeln!(
            s,
            "<line class=\"transition\" x1=\"{x:.2}\" y1=\"{}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"#3050c0\"/>",
            H - MARGIN,
            MARGIN
        );
    }
    s += &frame.polyline(
        records.iter().map(|r| (r.generation as f64, r.dominance_level as f64)),
        "black",
    );
    s.push_str("</svg>\n");
    s
}
