//! Progress measurement for competitive coevolution.
//!
//! Two genomes are compared over the 144 comparison layouts, once from each
//! starting side. A strategy is superior when it wins strictly more of those
//! 288 games. The dominance hierarchy keeps every generation champion that is
//! superior to all dominant strategies before it.

use rayon::prelude::*;
use thiserror::Error;

use crate::coevolution::RunArchive;
use crate::duel::{evaluation_configs, run_duel_networks, DuelConfig, Winner};
use crate::genome::Genome;
use crate::network::Network;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DominanceError {
    #[error("the dominance hierarchy is empty")]
    EmptyHierarchy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ComparisonResult {
    pub wins_a: u32,
    pub wins_b: u32,
    pub draws: u32,
}

impl ComparisonResult {
    pub fn games(&self) -> u32 {
        self.wins_a + self.wins_b + self.draws
    }

    /// `Winner::A` or `Winner::B` for a strict majority of wins, else `Draw`.
    pub fn superior(&self) -> Winner {
        use std::cmp::Ordering::*;
        match self.wins_a.cmp(&self.wins_b) {
            Greater => Winner::A,
            Less => Winner::B,
            Equal => Winner::Draw,
        }
    }

    pub fn a_superior(&self) -> bool {
        self.superior() == Winner::A
    }

    pub fn swapped(&self) -> Self {
        Self {
            wins_a: self.wins_b,
            wins_b: self.wins_a,
            draws: self.draws,
        }
    }

    fn tally(&mut self, w: Winner) {
        match w {
            Winner::A => self.wins_a += 1,
            Winner::B => self.wins_b += 1,
            Winner::Draw => self.draws += 1,
        }
    }
}

/// Decides pairwise comparisons between strategies.
pub trait Referee: Sync {
    fn compare(&self, a: &Genome, b: &Genome) -> ComparisonResult;
}

/// Plays the full comparison in the duel. Timeouts count as draws.
#[derive(Debug, Clone)]
pub struct DuelReferee {
    configs: Vec<DuelConfig>,
}

impl DuelReferee {
    /// Comparison layouts with the physics of `base`.
    pub fn new(base: &DuelConfig) -> Self {
        Self {
            configs: evaluation_configs(base),
        }
    }

    /// Arbitrary layouts; each is played from both starting sides.
    pub fn with_configs(configs: Vec<DuelConfig>) -> Self {
        Self { configs }
    }
}

impl Referee for DuelReferee {
    fn compare(&self, a: &Genome, b: &Genome) -> ComparisonResult {
        let (na, nb) = (Network::build(a), Network::build(b));
        self.configs
            .par_iter()
            .map(|cfg| {
                let (mut x, mut y) = (na.clone(), nb.clone());
                let west = run_duel_networks(&mut x, &mut y, cfg, false).winner;
                let east = run_duel_networks(&mut x, &mut y, &cfg.swapped(), false).winner;
                let mut r = ComparisonResult::default();
                r.tally(west);
                r.tally(east);
                r
            })
            .reduce(ComparisonResult::default, |p, q| ComparisonResult {
                wins_a: p.wins_a + q.wins_a,
                wins_b: p.wins_b + q.wins_b,
                draws: p.draws + q.draws,
            })
    }
}

/// 288-game comparison of `a` against `b` with the physics of `base`.
pub fn compare(a: &Genome, b: &Genome, base: &DuelConfig) -> ComparisonResult {
    DuelReferee::new(base).compare(a, b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominantStrategy {
    pub generation: u32,
    pub genome: Genome,
    /// Results against `d_1 .. d_{j-1}`, this strategy as side A.
    pub record: Vec<ComparisonResult>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DominanceHierarchy {
    pub levels: Vec<DominantStrategy>,
}

/// What one tournament entry cost and decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TournamentStep {
    pub accepted: bool,
    pub comparisons: usize,
}

impl DominanceHierarchy {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn top(&self) -> Option<&DominantStrategy> {
        self.levels.last()
    }

    /// Enters `candidate` if it is superior to every dominant strategy so far.
    /// Opponents are played from the highest level down and the first
    /// non-win ends the attempt. The first candidate is accepted outright.
    pub fn update<R: Referee + ?Sized>(&mut self, candidate: &Genome, generation: u32, referee: &R) -> TournamentStep {
        debug_assert!(self.top().is_none_or(|t| t.generation < generation));
        let mut record = Vec::with_capacity(self.levels.len());
        for level in self.levels.iter().rev() {
            let r = referee.compare(candidate, &level.genome);
            record.push(r);
            if !r.a_superior() {
                return TournamentStep {
                    accepted: false,
                    comparisons: record.len(),
                };
            }
        }
        let comparisons = record.len();
        record.reverse();
        self.levels.push(DominantStrategy {
            generation,
            genome: candidate.clone(),
            record,
        });
        TournamentStep {
            accepted: true,
            comparisons,
        }
    }

    /// Checks the stored records: every level beat all levels below it.
    pub fn is_consistent(&self) -> bool {
        self.levels.iter().enumerate().all(|(j, d)| {
            d.record.len() == j && d.record.iter().all(ComparisonResult::a_superior)
        }) && self.levels.windows(2).all(|w| w[0].generation < w[1].generation)
    }
}

/// Fraction of the hierarchy that `champion` beats as a consecutive prefix:
/// it plays `d_1, d_2, ...` until its first non-win.
pub fn performance_score<R: Referee + ?Sized>(
    champion: &Genome,
    hierarchy: &DominanceHierarchy,
    referee: &R,
) -> Result<f64, DominanceError> {
    if hierarchy.is_empty() {
        return Err(DominanceError::EmptyHierarchy);
    }
    let beaten = hierarchy
        .levels
        .iter()
        .take_while(|d| referee.compare(champion, &d.genome).a_superior())
        .count();
    Ok(beaten as f64 / hierarchy.len() as f64)
}

/// Mean win margin of the higher strategy over the lower one for each level
/// gap `1 ..= n-1`, from the stored comparison records.
pub fn dominance_gap_curve(hierarchy: &DominanceHierarchy) -> Vec<(usize, f64)> {
    let n = hierarchy.len();
    (1..n)
        .map(|gap| {
            let margins: Vec<f64> = (gap..n)
                .map(|j| {
                    let r = hierarchy.levels[j].record[j - gap];
                    r.wins_a as f64 - r.wins_b as f64
                })
                .collect();
            (gap, margins.iter().sum::<f64>() / margins.len() as f64)
        })
        .collect()
}

/// One point of the complexity-over-dominance series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityPoint {
    pub generation: u32,
    pub level: usize,
    pub dominant_hidden: usize,
    pub dominant_connections: usize,
    pub population_min_connections: usize,
    pub population_max_connections: usize,
}

/// Complexity of each new dominant strategy at the generation it appeared,
/// alongside the population's connection-count range at that time.
pub fn complexity_series(archive: &RunArchive) -> Vec<ComplexityPoint> {
    archive
        .hierarchy
        .levels
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let rec = &archive.records[d.generation as usize];
            ComplexityPoint {
                generation: d.generation,
                level: i + 1,
                dominant_hidden: d.genome.hidden_count(),
                dominant_connections: d.genome.connection_count(),
                population_min_connections: rec.min_connections(),
                population_max_connections: rec.max_connections(),
            }
        })
        .collect()
}
