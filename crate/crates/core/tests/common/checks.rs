//! Randomized equivalence checks against the oracles. Each returns the
//! number of instances examined or the first disagreement.

use neat_duel::genome::{compatibility_distance, crossover, CompatibilityCoeffs};
use neat_duel::network::Network;
use neat_duel::params::EvolutionParams;
use neat_duel::rng::seeded;
use neat_duel::speciation::largest_remainder;
use rand::Rng;

use super::*;

pub fn distance(instances: usize, seed: u64) -> Result<usize, String> {
    let mut rng = seeded(seed);
    for i in 0..instances {
        let table = innovation_table(&mut rng);
        let a = random_genome(&mut rng, &table, 10);
        let b = random_genome(&mut rng, &table, 10);
        let coeffs = CompatibilityCoeffs {
            excess: rng.gen_range(0..4) as f64 * 0.5,
            disjoint: rng.gen_range(0..4) as f64 * 0.5,
            weight: rng.gen_range(0..5) as f64 * 0.5,
            normalize: rng.gen_bool(0.3),
        };
        let got = compatibility_distance(&a, &b, &coeffs);
        let want = brute_force_distance(&a, &b, &coeffs);
        if got != want {
            return Err(format!("instance {i}: distance {got} vs oracle {want}"));
        }
        if compatibility_distance(&b, &a, &coeffs) != want {
            return Err(format!("instance {i}: distance not symmetric"));
        }
    }
    Ok(instances)
}

pub fn network(instances: usize, seed: u64) -> Result<usize, String> {
    let mut rng = seeded(seed);
    for i in 0..instances {
        let table = innovation_table(&mut rng);
        let g = random_genome(&mut rng, &table, 14);
        let mut net = Network::build(&g);
        let mut dense = DenseNet::new(&g);
        for t in 0..12 {
            let x: Vec<f64> = (0..SMALL.sensors).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let got = net.activate(&x).to_vec();
            let want = dense.step(&x);
            if got.len() != want.len() || got.iter().zip(&want).any(|(p, q)| (p - q).abs() > 1e-12) {
                return Err(format!("instance {i} step {t}: {got:?} vs oracle {want:?}"));
            }
        }
    }
    Ok(instances)
}

pub fn apportionment(instances: usize, seed: u64) -> Result<usize, String> {
    let mut rng = seeded(seed);
    for i in 0..instances {
        let k = rng.gen_range(1..=5);
        let weights: Vec<u64> = (0..k).map(|_| rng.gen_range(0..=9)).collect();
        if weights.iter().all(|&w| w == 0) {
            continue;
        }
        let total = rng.gen_range(0..=12);
        let float: Vec<f64> = weights.iter().map(|&w| w as f64).collect();
        let got = largest_remainder(&float, total);
        let want = exhaustive_apportionment(&weights, total);
        if got != want {
            return Err(format!("instance {i}: weights {weights:?} total {total}: {got:?} vs oracle {want:?}"));
        }
    }
    Ok(instances)
}

pub fn crossover_sets(instances: usize, seed: u64) -> Result<usize, String> {
    let mut rng = seeded(seed);
    let params = EvolutionParams::default();
    for i in 0..instances {
        let table = innovation_table(&mut rng);
        let a = random_genome(&mut rng, &table, 8);
        let b = random_genome(&mut rng, &table, 8);
        let fa = rng.gen_range(0..3) as f64;
        let fb = rng.gen_range(0..3) as f64;
        let child = crossover(&a, fa, &b, fb, &mut rng, &params).map_err(|e| e.to_string())?;
        check_crossover(&a, fa, &b, fb, &child).map_err(|e| format!("instance {i}: {e}"))?;
    }
    Ok(instances)
}

/// Observed rate with its binomial 3σ verdict.
pub struct Rate {
    pub name: &'static str,
    pub hits: usize,
    pub n: usize,
    pub p: f64,
}

impl Rate {
    pub fn ok(&self) -> bool {
        within_3_sigma(self.hits, self.n, self.p)
    }

    pub fn describe(&self) -> String {
        format!("{} {:.4} (expected {} over {})", self.name, self.hits as f64 / self.n as f64, self.p, self.n)
    }
}

fn parents_with_one_gene(wa: f64, wb: f64, a_enabled: bool) -> (Genome, Genome) {
    (build(SMALL, &[(1, 1, 4, wa, a_enabled)]), build(SMALL, &[(1, 1, 4, wb, true)]))
}

/// Disable inheritance and weight averaging from single-gene crossovers.
pub fn crossover_rates(n: usize, seed: u64) -> [Rate; 2] {
    let params = EvolutionParams::default();
    let mut rng = seeded(seed);
    let (a, b) = parents_with_one_gene(1.0, 3.0, false);
    let mut disabled = 0;
    let mut averaged = 0;
    for _ in 0..n {
        let c = crossover(&a, 1.0, &b, 1.0, &mut rng, &params).unwrap();
        let g = c.connections()[0];
        disabled += !g.enabled as usize;
        averaged += (g.weight == 2.0) as usize;
    }
    [
        Rate { name: "disable inheritance", hits: disabled, n, p: params.disable_inherit_prob },
        Rate { name: "averaging crossover", hits: averaged, n, p: params.crossover_average_prob },
    ]
}

/// Add-node and mutation-only rates among non-elite offspring.
pub fn reproduction_rates(min_samples: usize, seed: u64) -> [Rate; 2] {
    use neat_duel::genome::{minimal_genome, InnovationRegistry};
    use neat_duel::speciation::{reproduce, Origin, SpeciesSet, StructuralChange, StructuralMutation};
    let params = EvolutionParams::default();
    let mut rng = seeded(seed);
    let pop: Vec<Genome> = (0..200).map(|_| minimal_genome(IoSpec::DUEL, &mut rng, 1.0)).collect();
    let fitness: Vec<f64> = (0..200).map(|_| rng.gen_range(0..25) as f64).collect();
    let set = SpeciesSet::new(&params).assign(&pop, &fitness, &params.compatibility);
    let mut registry = InnovationRegistry::following(IoSpec::DUEL, &pop);
    let (mut n, mut nodes, mut mutation_only) = (0, 0, 0);
    while n < min_samples {
        let counts = vec![1000 / set.len(); set.len()];
        for o in reproduce(&set, &counts, &mut registry, &mut rng, &params, StructuralMutation::Grow) {
            if o.origin == Origin::Elite {
                continue;
            }
            n += 1;
            nodes += (o.change == StructuralChange::AddedNode) as usize;
            mutation_only += (o.origin == Origin::MutationOnly) as usize;
        }
        registry.new_generation();
    }
    [
        Rate { name: "add-node", hits: nodes, n, p: params.add_node_prob },
        Rate { name: "mutation-only", hits: mutation_only, n, p: params.mutation_only_prob },
    ]
}

/// Host win rate under coin-flip evaluation.
pub fn random_fitness_rate(min_games: usize, seed: u64) -> Rate {
    use neat_duel::coevolution::{evaluate_host_population, Games};
    use neat_duel::genome::minimal_genome;
    let mut rng = seeded(seed);
    let parasites: Vec<Genome> = (0..12).map(|_| minimal_genome(IoSpec::DUEL, &mut rng, 1.0)).collect();
    let hosts = vec![parasites[0].clone(); min_games.div_ceil(24)];
    let fitness = evaluate_host_population(&hosts, &parasites, Games::CoinFlip(&mut rng));
    Rate {
        name: "random-fitness win",
        hits: fitness.iter().sum::<f64>() as usize,
        n: hosts.len() * 24,
        p: 0.5,
    }
}

/// Motion law and per-step energy cost over random output triples.
pub fn motion(samples: usize, seed: u64) -> Result<usize, String> {
    use neat_duel::duel::{DuelConfig, Motion, Point, RobotState, WorldState};
    let mut rng = seeded(seed);
    let cfg = DuelConfig::default();
    for i in 0..samples {
        let a: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
        let b: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
        let m = Motion::from_outputs(a);
        let theta = 0.24 * (a[0] - a[1]).abs();
        if (m.turn.abs() - theta).abs() > 1e-12 || (m.forward - 1.33 * a[2]).abs() > 1e-12 {
            return Err(format!("sample {i}: motion {m:?} for outputs {a:?}"));
        }
        let robots = [
            RobotState::new(Point::new(150.0, 300.0), rng.gen_range(-3.0..3.0), 1000.0),
            RobotState::new(Point::new(450.0, 300.0), rng.gen_range(-3.0..3.0), 800.0),
        ];
        let mut w = WorldState::from_parts(&cfg, robots, Vec::new());
        w.step(a, b).map_err(|e| e.to_string())?;
        let cost_a = 0.24 * (a[0] - a[1]).abs() + 1.33 * a[2];
        let cost_b = 0.24 * (b[0] - b[1]).abs() + 1.33 * b[2];
        let (da, db) = (1000.0 - w.robots[0].energy, 800.0 - w.robots[1].energy);
        if (da - cost_a).abs() > 1e-12 || (db - cost_b).abs() > 1e-12 {
            return Err(format!("sample {i}: energy drop {da}/{db}, expected {cost_a}/{cost_b}"));
        }
    }
    Ok(samples)
}

/// Minimal-topology controller that spins until the opponent enters its
/// robot ring, steers toward it and charges. `noise` perturbs every weight.
pub fn chaser<R: Rng>(rng: &mut R, noise: f64) -> Genome {
    // sensors 1-5 food ring, 6-10 robot ring (right to left), 11 wall,
    // 12 energy difference, 13 bias; outputs 14 left, 15 right, 16 forward
    let base = |input: u32, output: u32| -> f64 {
        match (input, output) {
            (13, 14) => 0.4,
            (13, 16) => 0.2,
            (9 | 10, 14) | (6 | 7, 15) => 3.0,
            (9 | 10, 15) | (6 | 7, 14) => -3.0,
            (6..=10, 16) => 2.0,
            (11, 16) => -1.0,
            _ => 0.0,
        }
    };
    let mut genes = Vec::new();
    for input in 1..=13 {
        for output in 14..=16 {
            let innovation = (input - 1) * 3 + (output - 13);
            let w = base(input, output) + rng.gen_range(-noise..=noise);
            genes.push((innovation, input, output, w, true));
        }
    }
    build(IoSpec::DUEL, &genes)
}

/// Genome pairs for duel property checks: chasers with noisy weights, which
/// collide often, and random recurrent networks.
pub fn duel_pairs(n: usize, seed: u64) -> Vec<(Genome, Genome)> {
    use neat_duel::genome::fully_recurrent_genome;
    let mut rng = seeded(seed);
    (0..n)
        .map(|i| match i % 3 {
            0 | 1 => (chaser(&mut rng, 0.5), chaser(&mut rng, 0.5)),
            _ => (
                fully_recurrent_genome(IoSpec::DUEL, 2, &mut rng, 3.0),
                chaser(&mut rng, 0.5),
            ),
        })
        .collect()
}

/// Determinism, point-reflection symmetry, termination and collision rule
/// over random genome pairs and comparison layouts.
pub fn simulator(pairs: usize, seed: u64) -> Result<String, String> {
    use neat_duel::duel::{evaluation_configs, run_duel, DuelConfig, EndReason, Winner};
    let base = DuelConfig::default();
    let mut configs = vec![base.clone(), base.swapped()];
    configs.extend(evaluation_configs(&base).into_iter().step_by(29));
    let (mut duels, mut collisions, mut worst) = (0, 0, 0.0f64);
    for (pi, (a, b)) in duel_pairs(pairs, seed).iter().enumerate() {
        for (ci, cfg) in configs.iter().enumerate() {
            let tag = format!("pair {pi} config {ci}");
            let first = run_duel(a, b, cfg, true).map_err(|e| e.to_string())?;
            let again = run_duel(a, b, cfg, true).map_err(|e| e.to_string())?;
            if first != again {
                return Err(format!("{tag}: replays differ"));
            }
            let rows = &first.replay.as_ref().unwrap().rows;
            if first.steps > 750 || rows.len() != first.steps as usize {
                return Err(format!("{tag}: {} steps, {} rows", first.steps, rows.len()));
            }
            let last = rows.last().unwrap();
            let [ra, rb] = last.robots;
            if first.reason == EndReason::Collision {
                collisions += 1;
                let d = ((ra.x - rb.x).powi(2) + (ra.y - rb.y).powi(2)).sqrt();
                let ok = d <= 20.0
                    && match first.winner {
                        Winner::A => ra.energy > rb.energy,
                        Winner::B => rb.energy > ra.energy,
                        Winner::Draw => ra.energy == rb.energy,
                    };
                if !ok {
                    return Err(format!("{tag}: collision at {d} with energies {} / {}", ra.energy, rb.energy));
                }
            } else if first.winner != Winner::Draw || first.steps != cfg.max_steps {
                return Err(format!("{tag}: timeout must be a draw at max_steps"));
            }
            let mirror = run_duel(a, b, &cfg.reflected(), true).map_err(|e| e.to_string())?;
            if mirror.winner != first.winner || mirror.steps != first.steps {
                return Err(format!("{tag}: reflected outcome differs"));
            }
            for (p, q) in rows.iter().zip(&mirror.replay.as_ref().unwrap().rows) {
                for k in 0..2 {
                    let dev = (p.robots[k].x - (600.0 - q.robots[k].x))
                        .abs()
                        .max((p.robots[k].y - (600.0 - q.robots[k].y)).abs());
                    worst = worst.max(dev);
                    if dev > 1e-9 {
                        return Err(format!("{tag}: step {} deviates by {dev}", p.step));
                    }
                }
            }
            duels += 1;
        }
    }
    if collisions == 0 {
        return Err(format!("{duels} duels without a single collision; pairs too passive"));
    }
    Ok(format!("{duels} duels, {collisions} collisions, worst mirror deviation {worst:e}"))
}
