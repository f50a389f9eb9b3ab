//! The robot duel: two Khepera-like robots on a 600×600 board compete for
//! food and energy; a collision is won by the robot holding more energy.
//!
//! Positions are stored relative to the board center and headings as unit
//! vectors. Under the point reflection `(x, y) → (600 − x, 600 − y)` every
//! quantity of the simulation then simply changes sign, so a reflected duel
//! reproduces the original bit for bit.

use std::fmt::Write as _;

use thiserror::Error;

use crate::genome::{Genome, IoSpec};
use crate::network::Network;

pub const BOARD_SIZE: f64 = 600.0;
const HALF: f64 = BOARD_SIZE / 2.0;
/// Turn angle per unit of |left − right| output difference, in radians.
pub const TURN_COEFF: f64 = 0.24;
/// Forward distance per unit of forward output.
pub const FORWARD_COEFF: f64 = 1.33;
pub const RING_SENSORS: usize = 5;
/// Sensor inputs fed to a controller: food ring, robot ring, wall, energy difference.
pub const SENSOR_INPUTS: usize = 2 * RING_SENSORS + 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DuelError {
    #[error("the duel is already decided")]
    Finished,
    #[error("controller layout {0:?} does not match the duel layout")]
    IoMismatch(IoSpec),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Image under the point reflection through the board center.
    pub fn reflected(self) -> Self {
        Self::new(BOARD_SIZE - self.x, BOARD_SIZE - self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Point,
    /// Radians, counterclockwise from east.
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DuelConfig {
    pub food_layout: Vec<Point>,
    pub start_poses: [Pose; 2],
    pub max_steps: u32,
    pub initial_energy: f64,
    pub food_energy: f64,
    pub collision_radius: f64,
    pub pickup_radius: f64,
    /// Range of the food and robot rangefinders.
    pub sensor_range: f64,
    /// Distance at which the wall sensor starts to respond.
    pub wall_range: f64,
}

impl Default for DuelConfig {
    /// Training setup: the nine-item layout, robots on the west and east
    /// sides facing away from each other.
    fn default() -> Self {
        Self {
            food_layout: standard_food_layout(),
            start_poses: [
                Pose {
                    position: Point::new(60.0, 300.0),
                    heading: std::f64::consts::PI,
                },
                Pose {
                    position: Point::new(540.0, 300.0),
                    heading: 0.0,
                },
            ],
            max_steps: 750,
            initial_energy: 2000.0,
            food_energy: 500.0,
            collision_radius: 20.0,
            pickup_radius: 20.0,
            sensor_range: 300.0,
            wall_range: 100.0,
        }
    }
}

impl DuelConfig {
    pub fn with_food(&self, food_layout: Vec<Point>) -> Self {
        Self {
            food_layout,
            ..self.clone()
        }
    }

    /// Robot A starts where robot B would, and vice versa.
    pub fn swapped(&self) -> Self {
        let [a, b] = self.start_poses;
        Self {
            start_poses: [b, a],
            ..self.clone()
        }
    }

    /// Food and start poses reflected through the board center; robot slots kept.
    pub fn reflected(&self) -> Self {
        let reflect = |p: Pose| Pose {
            position: p.position.reflected(),
            heading: p.heading + std::f64::consts::PI,
        };
        Self {
            food_layout: self.food_layout.iter().map(|p| p.reflected()).collect(),
            start_poses: self.start_poses.map(reflect),
            ..self.clone()
        }
    }
}

/// Nine items on a 3×3 grid, symmetric about the vertical midline (and the
/// board center).
pub fn standard_food_layout() -> Vec<Point> {
    let mut v = Vec::with_capacity(9);
    for y in [150.0, 300.0, 450.0] {
        for x in [100.0, 300.0, 500.0] {
            v.push(Point::new(x, y));
        }
    }
    v
}

/// The twelve extra-item slots of the west half; the east slots are their
/// mirror images across `x = 300`.
pub fn west_extra_slots() -> Vec<Point> {
    let mut v = Vec::with_capacity(12);
    for y in [120.0, 240.0, 360.0, 480.0] {
        for x in [75.0, 150.0, 225.0] {
            v.push(Point::new(x, y));
        }
    }
    v
}

pub fn east_extra_slots() -> Vec<Point> {
    west_extra_slots()
        .into_iter()
        .map(|p| Point::new(BOARD_SIZE - p.x, p.y))
        .collect()
}

/// The 144 comparison layouts: the training layout plus one west and one
/// east extra item, every west slot paired with every east slot.
pub fn evaluation_layouts() -> Vec<Vec<Point>> {
    let base = standard_food_layout();
    let east = east_extra_slots();
    let mut layouts = Vec::with_capacity(144);
    for w in west_extra_slots() {
        for &e in &east {
            let mut l = base.clone();
            l.push(w);
            l.push(e);
            layouts.push(l);
        }
    }
    layouts
}

/// [`evaluation_layouts`] applied to the physics of `base`.
pub fn evaluation_configs(base: &DuelConfig) -> Vec<DuelConfig> {
    evaluation_layouts().into_iter().map(|l| base.with_food(l)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Vec2 {
    x: f64,
    y: f64,
}

impl Vec2 {
    fn from_board(p: Point) -> Self {
        Self {
            x: p.x - HALF,
            y: p.y - HALF,
        }
    }

    fn to_board(self) -> Point {
        Point::new(self.x + HALF, self.y + HALF)
    }

    /// Unit vector for an angle; components below 1e-15 are flushed to zero
    /// so axis-aligned headings are exact.
    fn unit(angle: f64) -> Self {
        let flush = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
        Self {
            x: flush(angle.cos()),
            y: flush(angle.sin()),
        }
    }

    fn sub(self, o: Vec2) -> Vec2 {
        Vec2 {
            x: self.x - o.x,
            y: self.y - o.y,
        }
    }

    fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    fn rotate(self, cos: f64, sin: f64) -> Vec2 {
        let r = Vec2 {
            x: cos * self.x - sin * self.y,
            y: sin * self.x + cos * self.y,
        };
        let n = r.norm();
        Vec2 { x: r.x / n, y: r.y / n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    pos: Vec2,
    dir: Vec2,
    pub energy: f64,
}

impl RobotState {
    pub fn new(position: Point, heading: f64, energy: f64) -> Self {
        Self {
            pos: Vec2::from_board(position),
            dir: Vec2::unit(heading),
            energy,
        }
    }

    pub fn position(&self) -> Point {
        self.pos.to_board()
    }

    /// Heading in `(-π, π]`.
    pub fn heading(&self) -> f64 {
        self.dir.y.atan2(self.dir.x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoodItem {
    pub position: Point,
    pub consumed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    A,
    B,
    Draw,
}

impl Winner {
    /// The same result seen with the robots' roles exchanged.
    pub fn swapped(self) -> Self {
        match self {
            Winner::A => Winner::B,
            Winner::B => Winner::A,
            Winner::Draw => Winner::Draw,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndReason {
    Collision,
    Timeout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DuelOutcome {
    pub winner: Winner,
    pub reason: EndReason,
    pub steps: u32,
    pub replay: Option<Replay>,
}

/// Sensor readings of one robot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorFrame {
    /// Five sectors from rightmost to leftmost.
    pub food: [f64; RING_SENSORS],
    pub robot: [f64; RING_SENSORS],
    pub wall: f64,
    pub energy_diff: f64,
}

impl SensorFrame {
    /// Controller input order: food ring, robot ring, wall, energy difference.
    pub fn to_inputs(&self) -> [f64; SENSOR_INPUTS] {
        let mut v = [0.0; SENSOR_INPUTS];
        v[..5].copy_from_slice(&self.food);
        v[5..10].copy_from_slice(&self.robot);
        v[10] = self.wall;
        v[11] = self.energy_diff;
        v
    }
}

/// Physical constants copied out of the config for stepping.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Physics {
    max_steps: u32,
    initial_energy: f64,
    food_energy: f64,
    collision_radius: f64,
    pickup_radius: f64,
    sensor_range: f64,
    wall_range: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    physics: Physics,
    pub robots: [RobotState; 2],
    pub food: Vec<FoodItem>,
    pub step: u32,
    pub outcome: Option<(Winner, EndReason)>,
}

/// Robots at their start poses with full energy, all food present.
pub fn init_duel(cfg: &DuelConfig) -> WorldState {
    let robots = cfg
        .start_poses
        .map(|p| RobotState::new(p.position, p.heading, cfg.initial_energy));
    WorldState::from_parts(cfg, robots, cfg.food_layout.clone())
}

/// Cost and displacement of one motor command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Motion {
    /// Signed turn; positive is counterclockwise (left output larger).
    pub turn: f64,
    pub forward: f64,
}

impl Motion {
    /// `outputs` are `(left, right, forward)`.
    pub fn from_outputs(outputs: [f64; 3]) -> Self {
        let [l, r, f] = outputs;
        let magnitude = TURN_COEFF * (l - r).abs();
        Self {
            turn: if l >= r { magnitude } else { -magnitude },
            forward: FORWARD_COEFF * f,
        }
    }

    /// Energy spent: turn angle plus forward distance.
    pub fn cost(&self) -> f64 {
        self.turn.abs() + self.forward
    }
}

impl WorldState {
    pub fn from_parts(cfg: &DuelConfig, robots: [RobotState; 2], food: Vec<Point>) -> Self {
        assert!(food.len() <= 64, "at most 64 food items are supported");
        Self {
            physics: Physics {
                max_steps: cfg.max_steps,
                initial_energy: cfg.initial_energy,
                food_energy: cfg.food_energy,
                collision_radius: cfg.collision_radius,
                pickup_radius: cfg.pickup_radius,
                sensor_range: cfg.sensor_range,
                wall_range: cfg.wall_range,
            },
            robots,
            food: food
                .into_iter()
                .map(|position| FoodItem {
                    position,
                    consumed: false,
                })
                .collect(),
            step: 0,
            outcome: None,
        }
    }

    pub fn remaining_food(&self) -> usize {
        self.food.iter().filter(|f| !f.consumed).count()
    }

    /// Bit `i` set while food item `i` is still on the board.
    pub fn food_mask(&self) -> u64 {
        self.food
            .iter()
            .enumerate()
            .filter(|(_, f)| !f.consumed)
            .fold(0, |m, (i, _)| m | 1 << i)
    }

    pub fn robot_distance(&self) -> f64 {
        self.robots[0].pos.sub(self.robots[1].pos).norm()
    }

    pub fn sense(&self, which: usize) -> SensorFrame {
        let me = &self.robots[which];
        let other = &self.robots[1 - which];
        let range = self.physics.sensor_range;
        let mut food = [0.0; RING_SENSORS];
        for item in self.food.iter().filter(|f| !f.consumed) {
            ring_reading(me, Vec2::from_board(item.position), range, &mut food);
        }
        let mut robot = [0.0; RING_SENSORS];
        ring_reading(me, other.pos, range, &mut robot);
        let wall_dist = HALF - me.pos.x.abs().max(me.pos.y.abs());
        SensorFrame {
            food,
            robot,
            wall: (1.0 - wall_dist / self.physics.wall_range).clamp(0.0, 1.0),
            energy_diff: ((me.energy - other.energy) / self.physics.initial_energy).clamp(-1.0, 1.0),
        }
    }

    /// Advances both robots simultaneously by one time step. Each robot turns
    /// half its angle, drives forward, then turns the other half. Food is
    /// collected next, then collisions are resolved.
    pub fn step(&mut self, out_a: [f64; 3], out_b: [f64; 3]) -> Result<(), DuelError> {
        if self.outcome.is_some() {
            return Err(DuelError::Finished);
        }
        for (robot, out) in self.robots.iter_mut().zip([out_a, out_b]) {
            let m = Motion::from_outputs(out);
            let half = m.turn / 2.0;
            let (sin, cos) = half.sin_cos();
            robot.dir = robot.dir.rotate(cos, sin);
            robot.pos.x = (robot.pos.x + m.forward * robot.dir.x).clamp(-HALF, HALF);
            robot.pos.y = (robot.pos.y + m.forward * robot.dir.y).clamp(-HALF, HALF);
            robot.dir = robot.dir.rotate(cos, sin);
            robot.energy = (robot.energy - m.cost()).max(0.0);
        }

        let p = self.physics;
        for item in self.food.iter_mut().filter(|f| !f.consumed) {
            let at = Vec2::from_board(item.position);
            for robot in &mut self.robots {
                if robot.pos.sub(at).norm() <= p.pickup_radius {
                    robot.energy += p.food_energy;
                    item.consumed = true;
                }
            }
        }

        self.step += 1;
        if self.robot_distance() <= p.collision_radius {
            let [a, b] = self.robots.map(|r| r.energy);
            let winner = if a > b {
                Winner::A
            } else if b > a {
                Winner::B
            } else {
                Winner::Draw
            };
            self.outcome = Some((winner, EndReason::Collision));
        } else if self.step >= p.max_steps {
            self.outcome = Some((Winner::Draw, EndReason::Timeout));
        }
        Ok(())
    }
}

fn ring_reading(me: &RobotState, target: Vec2, range: f64, ring: &mut [f64; RING_SENSORS]) {
    let d = target.sub(me.pos);
    let ahead = me.dir.x * d.x + me.dir.y * d.y;
    if ahead < 0.0 {
        return;
    }
    let left = me.dir.x * d.y - me.dir.y * d.x;
    let angle = left.atan2(ahead);
    let sector = (((angle + std::f64::consts::FRAC_PI_2) / (std::f64::consts::PI / RING_SENSORS as f64))
        .floor() as usize)
        .min(RING_SENSORS - 1);
    let value = (1.0 - d.norm() / range).max(0.0);
    if value > ring[sector] {
        ring[sector] = value;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplayRobot {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplayRow {
    pub step: u32,
    pub robots: [ReplayRobot; 2],
    pub food_mask: u64,
}

impl ReplayRow {
    fn capture(w: &WorldState) -> Self {
        Self {
            step: w.step,
            robots: w.robots.map(|r| {
                let p = r.position();
                ReplayRobot {
                    x: p.x,
                    y: p.y,
                    heading: r.heading(),
                    energy: r.energy,
                }
            }),
            food_mask: w.food_mask(),
        }
    }
}

/// Per-step log of a duel: one row with the state after every step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Replay {
    pub rows: Vec<ReplayRow>,
}

pub const REPLAY_HEADER: &str =
    "#neat-duel-replay 1 step x_a y_a heading_a energy_a x_b y_b heading_b energy_b food_mask";

impl Replay {
    /// Whitespace-delimited text: the header line, then one line per step.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(REPLAY_HEADER.len() + 1 + 120 * self.rows.len());
        s.push_str(REPLAY_HEADER);
        s.push('\n');
        for r in &self.rows {
            let [a, b] = r.robots;
            writeln!(
                s,
                "{} {} {} {} {} {} {} {} {} {}",
                r.step, a.x, a.y, a.heading, a.energy, b.x, b.y, b.heading, b.energy, r.food_mask
            )
            .unwrap();
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut lines = text.lines();
        if lines.next() != Some(REPLAY_HEADER) {
            return Err("line 1: missing or unsupported replay header".into());
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let ln = i + 2;
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 10 {
                return Err(format!("line {ln}: expected 10 fields, found {}", t.len()));
            }
            let num = |k: usize| t[k].parse::<f64>().map_err(|_| format!("line {ln}: bad number {:?}", t[k]));
            let robot = |k: usize| -> Result<ReplayRobot, String> {
                Ok(ReplayRobot {
                    x: num(k)?,
                    y: num(k + 1)?,
                    heading: num(k + 2)?,
                    energy: num(k + 3)?,
                })
            };
            rows.push(ReplayRow {
                step: t[0].parse().map_err(|_| format!("line {ln}: bad step"))?,
                robots: [robot(1)?, robot(5)?],
                food_mask: t[9].parse().map_err(|_| format!("line {ln}: bad food mask"))?,
            });
        }
        Ok(Self { rows })
    }
}

/// Runs a duel between two already-built controllers, resetting their
/// memory first. Robot A uses `start_poses[0]`.
pub fn run_duel_networks(a: &mut Network, b: &mut Network, cfg: &DuelConfig, record: bool) -> DuelOutcome {
    a.reset();
    b.reset();
    let mut world = init_duel(cfg);
    let mut replay = record.then(Replay::default);
    let outputs = |net: &mut Network, frame: SensorFrame| -> [f64; 3] {
        let o = net.activate(&frame.to_inputs());
        [o[0], o[1], o[2]]
    };
    loop {
        let out_a = outputs(a, world.sense(0));
        let out_b = outputs(b, world.sense(1));
        world.step(out_a, out_b).expect("loop stops at the outcome");
        if let Some(r) = replay.as_mut() {
            r.rows.push(ReplayRow::capture(&world));
        }
        if let Some((winner, reason)) = world.outcome {
            return DuelOutcome {
                winner,
                reason,
                steps: world.step,
                replay,
            };
        }
    }
}

/// Plays genome A against genome B on `cfg` with freshly built networks.
pub fn run_duel(a: &Genome, b: &Genome, cfg: &DuelConfig, record: bool) -> Result<DuelOutcome, DuelError> {
    for g in [a, b] {
        if g.io() != IoSpec::DUEL {
            return Err(DuelError::IoMismatch(g.io()));
        }
    }
    Ok(run_duel_networks(
        &mut Network::build(a),
        &mut Network::build(b),
        cfg,
        record,
    ))
}
