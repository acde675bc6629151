//! Synthetic System 1: occupancy-grid world, evidence generator and reactive
//! navigator, closed-loop with the executive one primitive step at a time.

pub mod fixtures;
pub mod grid;
pub mod navigator;
pub mod perception;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use grid::{
    geodesic_distance, line_of_sight, parse_fixture, Cell, DistanceField, GridMap, Layout,
    MapParams, Tile,
};
pub use navigator::{system1_step, NavMode, NavigatorParams, NavigatorState, PrimitiveAction};
pub use perception::{emit_evidence, GoalInstance, GoalKind, Observation, PerceptionParams};

use crate::executive::{Executive, ExecutiveError, GoalId, Point2, StepRecord};
use crate::signal::SignalSample;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("cell ({}, {}) is not free", .0.x, .0.y)]
    OccupiedCell(Cell),
    #[error("fixture: {0}")]
    Fixture(String),
    #[error("unknown goal {0}")]
    UnknownGoal(GoalId),
    #[error("invalid world parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Executive(#[from] ExecutiveError),
}

/// One episode's world: map, goals, navigator and the seeded random source
/// that every stochastic draw flows through.
#[derive(Debug, Clone)]
pub struct World {
    map: GridMap,
    spawn: Cell,
    goals: Vec<GoalInstance>,
    fields: BTreeMap<GoalId, DistanceField>,
    perception: PerceptionParams,
    nav_params: NavigatorParams,
    navigator: NavigatorState,
    rng: ChaCha8Rng,
}

/// What one primitive step produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldStep {
    pub goal: GoalId,
    pub action: PrimitiveAction,
    pub pose: Cell,
    pub observation: Observation,
    pub distance: f64,
    pub mode: NavMode,
}

impl World {
    pub fn new(
        map: GridMap,
        spawn: Cell,
        goals: Vec<GoalInstance>,
        perception: PerceptionParams,
        nav_params: NavigatorParams,
        seed: u64,
    ) -> Result<Self, WorldError> {
        perception.validate()?;
        if !map.is_free(spawn) {
            return Err(WorldError::OccupiedCell(spawn));
        }
        let mut fields = BTreeMap::new();
        for g in &goals {
            if !map.is_free(g.cell) {
                return Err(WorldError::OccupiedCell(g.cell));
            }
            fields.insert(g.goal_id, DistanceField::compute(&map, g.cell));
        }
        let navigator = NavigatorState::new(&map, spawn);
        let mut nav_params = nav_params;
        nav_params
            .approach_trigger
            .get_or_insert(perception.approach_trigger());
        Ok(Self {
            map,
            spawn,
            goals,
            fields,
            perception,
            nav_params,
            navigator,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn map(&self) -> &GridMap {
        &self.map
    }

    pub fn spawn(&self) -> Cell {
        self.spawn
    }

    pub fn goals(&self) -> &[GoalInstance] {
        &self.goals
    }

    pub fn goal(&self, id: GoalId) -> Result<&GoalInstance, WorldError> {
        self.goals
            .iter()
            .find(|g| g.goal_id == id)
            .ok_or(WorldError::UnknownGoal(id))
    }

    pub fn navigator(&self) -> &NavigatorState {
        &self.navigator
    }

    pub fn pose(&self) -> Cell {
        self.navigator.pose
    }

    pub fn agent_position(&self) -> Point2 {
        self.map.to_point(self.navigator.pose)
    }

    /// Goal positions in meters, as used by the greedy re-ordering.
    pub fn goal_positions(&self) -> BTreeMap<GoalId, Point2> {
        self.goals
            .iter()
            .map(|g| (g.goal_id, self.map.to_point(g.cell)))
            .collect()
    }

    /// Ground-truth geodesic distance from the agent to `goal`, meters.
    pub fn distance_to(&self, goal: GoalId) -> Result<f64, WorldError> {
        let field = self.fields.get(&goal).ok_or(WorldError::UnknownGoal(goal))?;
        Ok(field.meters(&self.map, self.navigator.pose))
    }

    /// Observe, act, and measure for the active goal.
    pub fn step(&mut self, goal: GoalId) -> Result<WorldStep, WorldError> {
        let instance = self
            .goals
            .iter()
            .find(|g| g.goal_id == goal)
            .ok_or(WorldError::UnknownGoal(goal))?;
        let here = self.distance_to(goal)?;
        let observation = emit_evidence(
            instance,
            self.navigator.pose,
            &self.map,
            here,
            &self.perception,
            &mut self.rng,
        );
        let action = system1_step(
            &mut self.navigator,
            goal,
            &self.map,
            &observation,
            &self.nav_params,
            &mut self.rng,
        );
        Ok(WorldStep {
            goal,
            action,
            pose: self.navigator.pose,
            observation,
            distance: self.distance_to(goal)?,
            mode: self.navigator.mode(goal),
        })
    }
}

/// One closed-loop step: the world moves for the active goal, the executive
/// ingests the resulting sample and decides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeStep {
    pub sample: SignalSample,
    pub world: WorldStep,
    pub record: StepRecord,
}

/// Advance the episode by one primitive step. Returns `None` once the
/// budget is spent or no goals remain.
pub fn episode_step(
    world: &mut World,
    executive: &mut Executive,
) -> Result<Option<EpisodeStep>, WorldError> {
    if executive.finished() {
        return Ok(None);
    }
    let goal = executive.active_goal().ok_or(ExecutiveError::NoActiveGoal)?;
    let ws = world.step(goal)?;
    let t = executive.ledger().elapsed as u64 + 1;
    let sample = SignalSample::new(t, ws.distance, ws.observation.score);
    let record = executive.observe(&sample, world.agent_position())?;
    Ok(Some(EpisodeStep {
        sample,
        world: ws,
        record,
    }))
}
