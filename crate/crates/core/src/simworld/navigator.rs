//! The reactive System-1 navigator.
//!
//! Frontier-style coverage until the target signal is sighted twice in a
//! row, then greedy descent of the geodesic field toward the sighted source.
//! The navigator sees only its own observations: it never reads meta-states,
//! budgets or the executive's thresholds.

use std::collections::{BTreeMap, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::grid::{line_of_sight, Cell, DistanceField, GridMap};
use super::perception::Observation;
use crate::executive::GoalId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NavMode {
    Explore,
    Approach,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PrimitiveAction {
    MoveEast,
    MoveWest,
    MoveSouth,
    MoveNorth,
    Stay,
}

impl PrimitiveAction {
    fn between(from: Cell, to: Cell) -> Self {
        match (to.x as i64 - from.x as i64, to.y as i64 - from.y as i64) {
            (1, 0) => PrimitiveAction::MoveEast,
            (-1, 0) => PrimitiveAction::MoveWest,
            (0, 1) => PrimitiveAction::MoveSouth,
            (0, -1) => PrimitiveAction::MoveNorth,
            _ => PrimitiveAction::Stay,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NavigatorParams {
    /// Cells within this geodesic radius count as searched, meters.
    pub view_radius: f64,
    /// Consecutive sightings needed to start an approach.
    pub sightings_to_approach: u32,
    /// Consecutive misses after which an approach is abandoned.
    pub misses_to_give_up: u32,
    /// Sighting threshold on the raw score. Unset means halfway up the
    /// perception signal (`b + A/2`), resolved by the world.
    pub approach_trigger: Option<f64>,
}

impl Default for NavigatorParams {
    fn default() -> Self {
        Self {
            view_radius: 2.5,
            sightings_to_approach: 2,
            misses_to_give_up: 12,
            approach_trigger: None,
        }
    }
}

/// Search memory for one goal category.
#[derive(Debug, Clone)]
pub struct SearchMemory {
    pub mode: NavMode,
    pub seen: Vec<bool>,
    pub seen_count: usize,
    pub believed_target: Option<Cell>,
    target_field: Option<DistanceField>,
    hits: u32,
    misses: u32,
    last_source: Option<Cell>,
    /// Completed passes over the reachable region.
    pub sweeps: u32,
    // Every reachable cell is visible from the current pose.
    exhausted: bool,
}

impl SearchMemory {
    fn new(map: &GridMap) -> Self {
        Self {
            mode: NavMode::Explore,
            seen: vec![false; map.len()],
            seen_count: 0,
            believed_target: None,
            target_field: None,
            hits: 0,
            misses: 0,
            last_source: None,
            sweeps: 0,
            exhausted: false,
        }
    }
}

/// Pose plus one search memory per goal the navigator has been tasked with.
#[derive(Debug, Clone)]
pub struct NavigatorState {
    pub pose: Cell,
    pub heading: PrimitiveAction,
    memories: BTreeMap<GoalId, SearchMemory>,
    // Scratch buffers reused across steps.
    stamp: Vec<u32>,
    stamp_gen: u32,
    parent: Vec<u32>,
    queue: VecDeque<Cell>,
}

impl NavigatorState {
    pub fn new(map: &GridMap, pose: Cell) -> Self {
        Self {
            pose,
            heading: PrimitiveAction::Stay,
            memories: BTreeMap::new(),
            stamp: vec![0; map.len()],
            stamp_gen: 0,
            parent: vec![0; map.len()],
            queue: VecDeque::new(),
        }
    }

    pub fn memory(&self, goal: GoalId) -> Option<&SearchMemory> {
        self.memories.get(&goal)
    }

    pub fn mode(&self, goal: GoalId) -> NavMode {
        self.memories.get(&goal).map_or(NavMode::Explore, |m| m.mode)
    }

    /// Fraction of free cells searched for `goal`.
    pub fn coverage(&self, map: &GridMap, goal: GoalId) -> f64 {
        let free = map.free_cells().count().max(1);
        self.memories
            .get(&goal)
            .map_or(0.0, |m| m.seen_count as f64 / free as f64)
    }

    fn next_gen(&mut self) -> u32 {
        self.stamp_gen = self.stamp_gen.wrapping_add(1);
        if self.stamp_gen == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.stamp_gen = 1;
        }
        self.stamp_gen
    }

    fn mark_seen(&mut self, map: &GridMap, goal: GoalId, radius_cells: u32) {
        let gen = self.next_gen();
        let mem = self.memories.get_mut(&goal).expect("memory exists");
        self.queue.clear();
        self.queue.push_back(self.pose);
        let start = map.index(self.pose);
        self.stamp[start] = gen;
        self.parent[start] = 0;
        while let Some(c) = self.queue.pop_front() {
            let i = map.index(c);
            if !mem.seen[i] && line_of_sight(map, self.pose, c) {
                mem.seen[i] = true;
                mem.seen_count += 1;
            }
            let depth = self.parent[i];
            if depth == radius_cells {
                continue;
            }
            for n in map.neighbours(c) {
                let j = map.index(n);
                if self.stamp[j] != gen {
                    self.stamp[j] = gen;
                    self.parent[j] = depth + 1;
                    self.queue.push_back(n);
                }
            }
        }
    }

    /// First step toward the nearest unsearched reachable cell.
    fn frontier_step<R: Rng + ?Sized>(
        &mut self,
        map: &GridMap,
        goal: GoalId,
        rng: &mut R,
    ) -> Option<Cell> {
        let gen = self.next_gen();
        let mem = &self.memories[&goal];
        let start = map.index(self.pose);
        self.stamp[start] = gen;
        self.queue.clear();
        let mut first: Vec<Cell> = map.neighbours(self.pose).collect();
        first.shuffle(rng);
        for n in first {
            let j = map.index(n);
            self.stamp[j] = gen;
            self.parent[j] = j as u32;
            self.queue.push_back(n);
        }
        while let Some(c) = self.queue.pop_front() {
            let i = map.index(c);
            if !mem.seen[i] {
                return Some(map.cell_at(self.parent[i] as usize));
            }
            let root = self.parent[i];
            for n in map.neighbours(c) {
                let j = map.index(n);
                if self.stamp[j] != gen {
                    self.stamp[j] = gen;
                    self.parent[j] = root;
                    self.queue.push_back(n);
                }
            }
        }
        None
    }
}

fn radius_cells(map: &GridMap, params: &NavigatorParams) -> u32 {
    (params.view_radius / map.cell_size()).floor().max(0.0) as u32
}

/// Make `goal` the navigator's current task, creating its search memory on
/// first use.
pub fn engage(state: &mut NavigatorState, goal: GoalId, map: &GridMap, params: &NavigatorParams) {
    if let std::collections::btree_map::Entry::Vacant(e) = state.memories.entry(goal) {
        e.insert(SearchMemory::new(map));
        state.mark_seen(map, goal, radius_cells(map, params));
    }
}

/// One reactive step: fold in the latest observation, pick a primitive
/// action and move.
pub fn system1_step<R: Rng + ?Sized>(
    state: &mut NavigatorState,
    goal: GoalId,
    map: &GridMap,
    observation: &Observation,
    params: &NavigatorParams,
    rng: &mut R,
) -> PrimitiveAction {
    engage(state, goal, map, params);
    let pose = state.pose;
    {
        let mem = state.memories.get_mut(&goal).expect("engaged");
        let sighted = observation.score > params.approach_trigger.unwrap_or(0.5);
        if sighted {
            mem.hits += 1;
            mem.misses = 0;
            if observation.source.is_some() {
                mem.last_source = observation.source;
            }
        } else {
            mem.hits = 0;
            mem.misses += 1;
        }
        match mem.mode {
            NavMode::Explore if mem.hits >= params.sightings_to_approach => {
                let target = mem.last_source.unwrap_or(pose);
                mem.target_field = Some(DistanceField::compute(map, target));
                mem.believed_target = Some(target);
                mem.mode = NavMode::Approach;
            }
            NavMode::Approach if mem.misses >= params.misses_to_give_up => {
                mem.mode = NavMode::Explore;
                mem.believed_target = None;
                mem.target_field = None;
                mem.last_source = None;
            }
            _ => {}
        }
    }

    let mem = &state.memories[&goal];
    let next = match mem.mode {
        NavMode::Approach => mem
            .target_field
            .as_ref()
            .and_then(|f| f.descend(map, pose)),
        // Hold still to confirm a first sighting before moving on.
        NavMode::Explore if mem.exhausted || mem.hits > 0 => None,
        NavMode::Explore => match state.frontier_step(map, goal, rng) {
            Some(n) => Some(n),
            None => {
                // Everything was seen but the goal was missed: sweep again.
                let mem = state.memories.get_mut(&goal).expect("engaged");
                mem.seen.iter_mut().for_each(|s| *s = false);
                mem.seen_count = 0;
                mem.sweeps += 1;
                state.mark_seen(map, goal, radius_cells(map, params));
                let step = state.frontier_step(map, goal, rng);
                if step.is_none() {
                    state.memories.get_mut(&goal).expect("engaged").exhausted = true;
                }
                step
            }
        },
    };
    let action = match next {
        Some(n) => {
            state.pose = n;
            PrimitiveAction::between(pose, n)
        }
        None => PrimitiveAction::Stay,
    };
    if action != PrimitiveAction::Stay {
        state.heading = action;
    }
    state.mark_seen(map, goal, radius_cells(map, params));
    action
}
