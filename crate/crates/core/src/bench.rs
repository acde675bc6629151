//! Benchmark harness: seeded episode suites, closed-loop runs per method
//! variant, metrics, failure decomposition and threshold sweeps.
//!
//! Every variant runs against the same [`EpisodeSpec`] list and world seeds,
//! so per-episode outcomes are paired across methods.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};
use std::io::{self, Write};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RunConfig;
use crate::executive::{
    DecisionReason, Executive, GoalId, GoalState, MetaAction, MethodVariant,
};
use crate::simworld::grid::{generate_layout, DistanceField, Layout};
use crate::simworld::{
    episode_step, fixtures, Cell, GoalInstance, GoalKind, GridMap, MapParams, NavMode,
    PrimitiveAction, World, WorldError,
};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("no traces to score")]
    EmptyInput,
    #[error("unknown sweep parameter `{0}` (expected abort, switch, commit, commit_distance or grace)")]
    UnknownParameter(String),
    #[error("sweep needs at least one value")]
    EmptySweep,
    #[error("could not place goals for episode {episode} after {attempts} maps")]
    Placement { episode: u32, attempts: u32 },
    #[error("thread pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

const CATEGORIES: [&str; 10] = [
    "chair", "bed", "plant", "toilet", "tv_monitor", "sofa", "mug", "printer", "sink", "oven",
];

/// Goal-placement attempts per map before a fresh map is drawn.
const PLACEMENT_TRIES: u32 = 64;
const MAX_MAPS: u32 = 32;

/// Mixes the master seed with an episode index (SplitMix64 finalizer over
/// `master + (index + 1)·φ`).
pub fn episode_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed.wrapping_add((index + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum MapSource {
    Generated {
        params: MapParams,
        map_seed: u64,
        sealed_room: Option<usize>,
    },
    Fixture {
        name: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalSpec {
    pub goal_id: GoalId,
    pub category: String,
    pub cell: Cell,
    pub kind: GoalKind,
    pub detectability: f64,
}

impl GoalSpec {
    fn instance(&self) -> GoalInstance {
        GoalInstance {
            goal_id: self.goal_id,
            category: self.category.clone(),
            cell: self.cell,
            detectability: self.detectability,
            present: self.kind != GoalKind::Absent,
            kind: self.kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub episode_id: u32,
    pub seed: u64,
    pub goal_count: usize,
    pub budget_max: u32,
    pub map: MapSource,
    pub spawn: Cell,
    /// Goals in prescribed order.
    pub goals: Vec<GoalSpec>,
    pub min_separation: f64,
    /// Maps drawn before goal placement succeeded.
    pub map_attempts: u32,
}

impl EpisodeSpec {
    pub fn build_map(&self) -> Result<GridMap, WorldError> {
        match &self.map {
            MapSource::Generated {
                params,
                map_seed,
                sealed_room,
            } => {
                let mut layout = generate_layout(params, &mut ChaCha8Rng::seed_from_u64(*map_seed));
                if let Some(r) = sealed_room {
                    layout.seal(*r);
                }
                Ok(layout.map)
            }
            MapSource::Fixture { name } => Ok(fixtures::load(name, 0.25)?.map),
        }
    }

    pub fn build_world(&self, cfg: &RunConfig) -> Result<World, WorldError> {
        let map = self.build_map()?;
        World::new(
            map,
            self.spawn,
            self.goals.iter().map(GoalSpec::instance).collect(),
            cfg.perception,
            cfg.navigator,
            self.seed,
        )
    }

    /// Spec for a fixture map. Digit goals become goals in digit order;
    /// goals unreachable from the spawn are marked sealed. Digits listed in
    /// `absent` become absent goals (decoy positions).
    pub fn from_fixture(
        name: &str,
        episode_id: u32,
        seed: u64,
        budget_max: u32,
        absent: &[u8],
        detectability: f64,
    ) -> Result<Self, WorldError> {
        let f = fixtures::load(name, 0.25)?;
        let from_spawn = DistanceField::compute(&f.map, f.spawn);
        let goals = f
            .goals
            .iter()
            .enumerate()
            .map(|(i, (&digit, &cell))| {
                let kind = if absent.contains(&digit) {
                    GoalKind::Absent
                } else if from_spawn.meters(&f.map, cell).is_finite() {
                    GoalKind::Feasible
                } else {
                    GoalKind::Sealed
                };
                GoalSpec {
                    goal_id: GoalId(digit as u32),
                    category: CATEGORIES[i % CATEGORIES.len()].to_string(),
                    cell,
                    kind,
                    detectability,
                }
            })
            .collect::<Vec<_>>();
        Ok(Self {
            episode_id,
            seed,
            goal_count: goals.len(),
            budget_max,
            map: MapSource::Fixture {
                name: name.to_string(),
            },
            spawn: f.spawn,
            goals,
            min_separation: 0.0,
            map_attempts: 1,
        })
    }
}

fn place_goals(
    layout: &Layout,
    kinds: &[GoalKind],
    sealed_room: Option<usize>,
    min_sep: f64,
    rng: &mut ChaCha8Rng,
) -> Option<(Cell, Vec<Cell>)> {
    let map = &layout.map;
    let in_sealed = |c: Cell| sealed_room.is_some_and(|r| layout.rooms[r].contains(c));
    let open: Vec<Cell> = map.free_cells().filter(|c| !in_sealed(*c)).collect();
    let sealed: Vec<Cell> = map.free_cells().filter(|c| in_sealed(*c)).collect();
    if open.is_empty() {
        return None;
    }
    let separation = |a: Cell, b: Cell, field: &DistanceField| {
        let g = field.meters(map, b);
        if g.is_finite() {
            g
        } else {
            map.to_point(a).distance(&map.to_point(b))
        }
    };
    for _ in 0..PLACEMENT_TRIES {
        let spawn = *open.choose(rng)?;
        let mut cells: Vec<Cell> = Vec::with_capacity(kinds.len());
        let mut fields = vec![DistanceField::compute(map, spawn)];
        let mut anchors = vec![spawn];
        let mut ok = true;
        for kind in kinds {
            let pool = if *kind == GoalKind::Sealed { &sealed } else { &open };
            let Some(&cell) = pool.choose(rng) else {
                ok = false;
                break;
            };
            let far_enough = anchors
                .iter()
                .zip(&fields)
                .all(|(a, f)| separation(*a, cell, f) >= min_sep);
            if !far_enough {
                ok = false;
                break;
            }
            fields.push(DistanceField::compute(map, cell));
            anchors.push(cell);
            cells.push(cell);
        }
        if ok {
            return Some((spawn, cells));
        }
    }
    None
}

/// Deterministic episode suite: `count_k2` two-goal episodes followed by
/// `count_k3` three-goal episodes.
pub fn generate(
    count_k2: usize,
    count_k3: usize,
    master_seed: u64,
    cfg: &RunConfig,
) -> Result<Vec<EpisodeSpec>, BenchError> {
    let b = &cfg.bench;
    let mut specs = Vec::with_capacity(count_k2 + count_k3);
    for index in 0..count_k2 + count_k3 {
        let (k, budget) = if index < count_k2 {
            (2, b.budget_k2)
        } else {
            (3, b.budget_k3)
        };
        let seed = episode_seed(master_seed, index as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let kinds: Vec<GoalKind> = (0..k)
            .map(|_| {
                if rng.random_bool(b.infeasible_fraction) {
                    if rng.random_bool(b.absent_share) {
                        GoalKind::Absent
                    } else {
                        GoalKind::Sealed
                    }
                } else {
                    GoalKind::Feasible
                }
            })
            .collect();
        let mut categories: Vec<&str> = CATEGORIES.to_vec();
        categories.shuffle(&mut rng);

        let mut placed = None;
        for attempt in 1..=MAX_MAPS {
            let map_seed = rng.next_u64();
            let mut layout = generate_layout(&cfg.map, &mut ChaCha8Rng::seed_from_u64(map_seed));
            let sealed_room = if kinds.contains(&GoalKind::Sealed) {
                let mut rooms: Vec<usize> = (0..layout.rooms.len()).collect();
                rooms.shuffle(&mut rng);
                let Some(r) = rooms.into_iter().find(|&r| layout.can_seal(r)) else {
                    continue;
                };
                layout.seal(r);
                Some(r)
            } else {
                None
            };
            if let Some((spawn, cells)) =
                place_goals(&layout, &kinds, sealed_room, b.min_separation, &mut rng)
            {
                placed = Some((attempt, map_seed, sealed_room, spawn, cells));
                break;
            }
        }
        let Some((attempts, map_seed, sealed_room, spawn, cells)) = placed else {
            return Err(BenchError::Placement {
                episode: index as u32,
                attempts: MAX_MAPS,
            });
        };
        let goals = cells
            .into_iter()
            .zip(&kinds)
            .enumerate()
            .map(|(i, (cell, kind))| GoalSpec {
                goal_id: GoalId(i as u32),
                category: categories[i].to_string(),
                cell,
                kind: *kind,
                detectability: b.detectability,
            })
            .collect();
        specs.push(EpisodeSpec {
            episode_id: index as u32,
            seed,
            goal_count: k,
            budget_max: budget,
            map: MapSource::Generated {
                params: cfg.map,
                map_seed,
                sealed_room,
            },
            spawn,
            goals,
            min_separation: b.min_separation,
            map_attempts: attempts,
        });
    }
    Ok(specs)
}

/// One executive step as it appears in a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    pub t: u64,
    pub goal: GoalId,
    pub x: usize,
    pub y: usize,
    pub primitive: PrimitiveAction,
    pub nav_mode: NavMode,
    /// Meters; `None` when the goal is unreachable.
    pub distance: Option<f64>,
    pub evidence: f64,
    pub mean: f64,
    pub variance: f64,
    pub stability: f64,
    pub velocity: f64,
    pub info_gain: f64,
    pub potentiality: f64,
    pub persistence: f64,
    pub sufficiency: f64,
    pub action: MetaAction,
    pub reason: DecisionReason,
    pub next_goal: Option<GoalId>,
    pub elapsed: u32,
    pub allocation: u32,
    pub active_spent: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FailureMode {
    NoDetection,
    Aborted,
    SwitchedUnresolved,
    FalseCommit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalOutcome {
    pub goal_id: GoalId,
    pub category: String,
    pub kind: GoalKind,
    pub final_state: GoalState,
    /// Executive emitted COMMIT for this goal.
    pub committed: bool,
    /// Committed within the success radius of a present goal.
    pub success: bool,
    pub commit_step: Option<u64>,
    /// Agent distance to the goal at commit time, meters.
    pub commit_distance: Option<f64>,
    pub charged_steps: u32,
    pub switch_count: u32,
    pub activations: u32,
    pub last_exit: Option<(MetaAction, DecisionReason)>,
    pub failure: Option<FailureMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub episode_id: u32,
    pub variant: MethodVariant,
    pub seed: u64,
    pub goal_count: usize,
    pub budget_max: u32,
    pub total_steps: u32,
    pub outcomes: Vec<GoalOutcome>,
    /// Successful goals, in the order they were committed.
    pub success_order: Vec<GoalId>,
    /// Prescribed goal order from the spec.
    pub prescribed_order: Vec<GoalId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<StepTrace>,
}

impl EpisodeTrace {
    pub fn completed(&self) -> usize {
        self.outcomes.iter().filter(|o| o.success).count()
    }

    pub fn all_completed(&self) -> bool {
        self.completed() == self.goal_count
    }

    pub fn wasted_steps(&self) -> u32 {
        self.outcomes
            .iter()
            .filter(|o| !o.success)
            .map(|o| o.charged_steps)
            .sum()
    }

    /// Steps charged to never-completed goals over all steps taken.
    pub fn wasted_fraction(&self) -> f64 {
        if self.total_steps == 0 {
            0.0
        } else {
            self.wasted_steps() as f64 / self.total_steps as f64
        }
    }

    /// Drop per-step records, keeping outcomes.
    pub fn summarized(mut self) -> Self {
        self.steps = Vec::new();
        self
    }

    /// The trace as JSON lines: a header, one record per step, one per goal.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<(), BenchError> {
        #[derive(Serialize)]
        #[serde(tag = "record", rename_all = "snake_case")]
        enum Line<'a> {
            Header {
                episode_id: u32,
                variant: MethodVariant,
                seed: u64,
                goal_count: usize,
                budget_max: u32,
                prescribed_order: &'a [GoalId],
            },
            Step(&'a StepTrace),
            Goal(&'a GoalOutcome),
            Footer {
                total_steps: u32,
                completed: usize,
                wasted_steps: u32,
            },
        }
        let mut emit = |line: &Line| -> Result<(), BenchError> {
            serde_json::to_writer(&mut out, line)?;
            out.write_all(b"\n")?;
            Ok(())
        };
        emit(&Line::Header {
            episode_id: self.episode_id,
            variant: self.variant,
            seed: self.seed,
            goal_count: self.goal_count,
            budget_max: self.budget_max,
            prescribed_order: &self.prescribed_order,
        })?;
        for s in &self.steps {
            emit(&Line::Step(s))?;
        }
        for o in &self.outcomes {
            emit(&Line::Goal(o))?;
        }
        emit(&Line::Footer {
            total_steps: self.total_steps,
            completed: self.completed(),
            wasted_steps: self.wasted_steps(),
        })
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("json is utf-8")
    }
}

fn classify(o: &GoalOutcome) -> Option<FailureMode> {
    if o.success {
        return None;
    }
    if o.committed {
        return Some(FailureMode::FalseCommit);
    }
    match (o.final_state, o.last_exit) {
        (GoalState::Failed, Some((MetaAction::Abort, DecisionReason::LowPotentiality))) => {
            Some(FailureMode::Aborted)
        }
        (GoalState::Pending, Some((MetaAction::Switch, DecisionReason::GateClosed))) => {
            Some(FailureMode::SwitchedUnresolved)
        }
        _ => Some(FailureMode::NoDetection),
    }
}

/// Run one episode closed-loop under `variant`.
pub fn run(spec: &EpisodeSpec, variant: MethodVariant, cfg: &RunConfig) -> Result<EpisodeTrace, BenchError> {
    let mut world = spec.build_world(cfg)?;
    let order: Vec<GoalId> = spec.goals.iter().map(|g| g.goal_id).collect();
    let mut exec = Executive::new(
        variant,
        cfg.thresholds,
        cfg.weights,
        cfg.signal,
        &order,
        world.goal_positions(),
        spec.budget_max,
    );
    exec.start(world.agent_position())
        .map_err(WorldError::from)?;

    let mut steps = Vec::new();
    let mut commits: BTreeMap<GoalId, (u64, f64)> = BTreeMap::new();
    let mut success_order = Vec::new();
    let success_radius = cfg.bench.success_radius;

    while let Some(step) = episode_step(&mut world, &mut exec)? {
        let r = &step.record;
        let d = &r.decision;
        if d.action == MetaAction::Commit {
            commits.insert(r.goal, (step.sample.step, step.sample.distance));
            let present = world.goal(r.goal)?.present;
            if present && step.sample.distance <= success_radius {
                success_order.push(r.goal);
            }
        }
        steps.push(StepTrace {
            t: step.sample.step,
            goal: r.goal,
            x: step.world.pose.x,
            y: step.world.pose.y,
            primitive: step.world.action,
            nav_mode: step.world.mode,
            distance: step.sample.distance.is_finite().then_some(step.sample.distance),
            evidence: step.sample.evidence,
            mean: r.summary.mean,
            variance: r.summary.variance,
            stability: r.summary.stability,
            velocity: r.summary.velocity,
            info_gain: r.summary.info_gain,
            potentiality: d.states.potentiality,
            persistence: d.states.persistence,
            sufficiency: d.states.sufficiency,
            action: d.action,
            reason: d.reason,
            next_goal: d.next_goal,
            elapsed: r.ledger.elapsed,
            allocation: r.ledger.allocation,
            active_spent: r.ledger.active_spent,
        });
    }

    let outcomes = spec
        .goals
        .iter()
        .map(|g| {
            let status = exec
                .schedule()
                .get(g.goal_id)
                .expect("every spec goal is scheduled");
            let commit = commits.get(&g.goal_id).copied();
            let mut o = GoalOutcome {
                goal_id: g.goal_id,
                category: g.category.clone(),
                kind: g.kind,
                final_state: status.state,
                committed: commit.is_some(),
                success: success_order.contains(&g.goal_id),
                commit_step: commit.map(|c| c.0),
                commit_distance: commit.map(|c| c.1).filter(|d| d.is_finite()),
                charged_steps: status.spent,
                switch_count: status.switch_count,
                activations: status.activations,
                last_exit: status.last_exit.map(|e| (e.action, e.reason)),
                failure: None,
            };
            o.failure = classify(&o);
            o
        })
        .collect();

    Ok(EpisodeTrace {
        episode_id: spec.episode_id,
        variant,
        seed: spec.seed,
        goal_count: spec.goal_count,
        budget_max: spec.budget_max,
        total_steps: exec.ledger().elapsed,
        outcomes,
        success_order,
        prescribed_order: order,
        steps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FailureCounts {
    pub no_detection: usize,
    pub aborted: usize,
    pub switched_unresolved: usize,
    pub false_commit: usize,
}

impl FailureCounts {
    pub fn total(&self) -> usize {
        self.no_detection + self.aborted + self.switched_unresolved + self.false_commit
    }

    fn add(&mut self, mode: FailureMode) {
        match mode {
            FailureMode::NoDetection => self.no_detection += 1,
            FailureMode::Aborted => self.aborted += 1,
            FailureMode::SwitchedUnresolved => self.switched_unresolved += 1,
            FailureMode::FalseCommit => self.false_commit += 1,
        }
    }
}

/// Tag every never-completed goal with its failure mode.
pub fn decompose_failures(traces: &[EpisodeTrace]) -> FailureCounts {
    let mut counts = FailureCounts::default();
    for o in traces.iter().flat_map(|t| &t.outcomes) {
        if let Some(mode) = classify(o) {
            counts.add(mode);
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub episodes: usize,
    pub mgsr: f64,
    pub ssr: f64,
    pub cr: f64,
    pub mean_steps: f64,
    pub wsf: f64,
    pub failure_counts: FailureCounts,
    pub utility_mean: f64,
}

pub fn compute_metrics(
    traces: &[EpisodeTrace],
    reward: f64,
    lambda_cost: f64,
) -> Result<MetricsReport, BenchError> {
    if traces.is_empty() {
        return Err(BenchError::EmptyInput);
    }
    let n = traces.len() as f64;
    // Sorted summation makes the result independent of trace order.
    let mean = |f: &dyn Fn(&EpisodeTrace) -> f64| {
        let mut v: Vec<f64> = traces.iter().map(f).collect();
        v.sort_by(f64::total_cmp);
        v.iter().sum::<f64>() / n
    };
    Ok(MetricsReport {
        episodes: traces.len(),
        mgsr: mean(&|t| t.all_completed() as u8 as f64),
        ssr: mean(&|t| (t.all_completed() && t.success_order == t.prescribed_order) as u8 as f64),
        cr: mean(&|t| t.completed() as f64 / t.goal_count as f64),
        mean_steps: mean(&|t| t.total_steps as f64),
        wsf: mean(&|t| t.wasted_fraction()),
        failure_counts: decompose_failures(traces),
        utility_mean: mean(&|t| reward * t.completed() as f64 - lambda_cost * t.total_steps as f64),
    })
}

/// Which threshold a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Abort,
    Switch,
    Commit,
    CommitDistance,
    Grace,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Abort => "abort",
            SweepParameter::Switch => "switch",
            SweepParameter::Commit => "commit",
            SweepParameter::CommitDistance => "commit_distance",
            SweepParameter::Grace => "grace",
        }
    }

    pub fn apply(self, cfg: &mut RunConfig, value: f64) {
        let th = &mut cfg.thresholds;
        match self {
            SweepParameter::Abort => th.abort = value,
            SweepParameter::Switch => th.switch = value,
            SweepParameter::Commit => th.commit = value,
            SweepParameter::CommitDistance => th.commit_distance = value,
            SweepParameter::Grace => th.grace = value.max(0.0).round() as u32,
        }
    }
}

impl std::str::FromStr for SweepParameter {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase();
        let key = key.strip_prefix("thresholds.").unwrap_or(&key);
        Ok(match key {
            "abort" | "tau_a" => SweepParameter::Abort,
            "switch" | "tau_s" => SweepParameter::Switch,
            "commit" | "tau_c" => SweepParameter::Commit,
            "commit_distance" | "d_commit" => SweepParameter::CommitDistance,
            "grace" | "t_g" => SweepParameter::Grace,
            _ => return Err(BenchError::UnknownParameter(s.to_string())),
        })
    }
}

/// Per-variant results of a suite run.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub variant: MethodVariant,
    /// Summarized traces, in spec order.
    pub traces: Vec<EpisodeTrace>,
    /// Digest over every full trace file, in spec order.
    pub trace_digest: u64,
}

impl SuiteResult {
    pub fn metrics(&self, cfg: &RunConfig) -> Result<MetricsReport, BenchError> {
        compute_metrics(&self.traces, cfg.bench.reward, cfg.bench.lambda_cost)
    }

    pub fn metrics_for_k(&self, k: usize, cfg: &RunConfig) -> Result<MetricsReport, BenchError> {
        let subset: Vec<EpisodeTrace> = self
            .traces
            .iter()
            .filter(|t| t.goal_count == k)
            .cloned()
            .collect();
        compute_metrics(&subset, cfg.bench.reward, cfg.bench.lambda_cost)
    }
}

/// Options for [`run_suite`].
#[derive(Debug, Clone, Default)]
pub struct SuiteOptions<'a> {
    /// Worker threads; `None` uses available parallelism.
    pub workers: Option<usize>,
    /// Write one JSONL trace per (variant, episode) here.
    pub trace_dir: Option<&'a Path>,
}

fn digest(bytes: &[u8]) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    bytes.hash(&mut h);
    h.finish()
}

/// Run every variant over every spec. Episodes execute in parallel; results
/// are returned in spec order regardless of scheduling.
pub fn run_suite(
    specs: &[EpisodeSpec],
    variants: &[MethodVariant],
    cfg: &RunConfig,
    opts: &SuiteOptions<'_>,
) -> Result<Vec<SuiteResult>, BenchError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = opts.workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder.build().map_err(|e| BenchError::Pool(e.to_string()))?;
    if let Some(dir) = opts.trace_dir {
        std::fs::create_dir_all(dir)?;
    }
    pool.install(|| {
        variants
            .iter()
            .map(|&variant| {
                let per_episode: Vec<(EpisodeTrace, u64)> = specs
                    .par_iter()
                    .map(|spec| {
                        let trace = run(spec, variant, cfg)?;
                        let text = trace.to_jsonl();
                        if let Some(dir) = opts.trace_dir {
                            let path = dir.join(format!(
                                "{}_ep{:04}.jsonl",
                                variant.name().to_ascii_lowercase(),
                                spec.episode_id
                            ));
                            std::fs::write(path, &text)?;
                        }
                        Ok((trace.summarized(), digest(text.as_bytes())))
                    })
                    .collect::<Result<_, BenchError>>()?;
                let mut h = std::collections::hash_map::DefaultHasher::new();
                for (_, d) in &per_episode {
                    d.hash(&mut h);
                }
                Ok(SuiteResult {
                    variant,
                    trace_digest: h.finish(),
                    traces: per_episode.into_iter().map(|(t, _)| t).collect(),
                })
            })
            .collect()
    })
}

/// One report per value of `parameter`, over the same specs and seeds.
pub fn sweep(
    specs: &[EpisodeSpec],
    variant: MethodVariant,
    parameter: SweepParameter,
    values: &[f64],
    cfg: &RunConfig,
    opts: &SuiteOptions<'_>,
) -> Result<Vec<(f64, MetricsReport)>, BenchError> {
    if values.is_empty() {
        return Err(BenchError::EmptySweep);
    }
    values
        .iter()
        .map(|&v| {
            let mut c = *cfg;
            parameter.apply(&mut c, v);
            let res = run_suite(specs, &[variant], &c, opts)?;
            Ok((v, res[0].metrics(&c)?))
        })
        .collect()
}

fn fmt4(x: f64) -> String {
    format!("{x:.4}")
}

pub const BENCH_CSV_HEADER: &str = "method,\
k2_mgsr,k2_ssr,k2_cr,k2_steps,k2_wsf,\
k3_mgsr,k3_ssr,k3_cr,k3_steps,k3_wsf,\
mgsr,ssr,cr,steps,wsf,utility,\
no_detection,aborted,switched_unresolved,false_commit";

fn metric_cells(m: Option<&MetricsReport>) -> String {
    match m {
        Some(m) => [m.mgsr, m.ssr, m.cr, m.mean_steps, m.wsf]
            .iter()
            .map(|&v| fmt4(v))
            .collect::<Vec<_>>()
            .join(","),
        None => ["", "", "", "", ""].join(","),
    }
}

/// Table-shaped CSV: one row per variant with K=2, K=3 and overall groups.
pub fn bench_csv(results: &[SuiteResult], cfg: &RunConfig) -> Result<String, BenchError> {
    let mut out = String::new();
    writeln!(out, "{BENCH_CSV_HEADER}").expect("string write");
    for r in results {
        let k2 = r.metrics_for_k(2, cfg).ok();
        let k3 = r.metrics_for_k(3, cfg).ok();
        let all = r.metrics(cfg)?;
        let f = all.failure_counts;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.variant.name(),
            metric_cells(k2.as_ref()),
            metric_cells(k3.as_ref()),
            metric_cells(Some(&all)),
            fmt4(all.utility_mean),
            f.no_detection,
            f.aborted,
            f.switched_unresolved,
            f.false_commit
        )
        .expect("string write");
    }
    Ok(out)
}

pub const SWEEP_CSV_HEADER: &str = "parameter,value,mgsr,ssr,cr,steps,wsf,utility,\
no_detection,aborted,switched_unresolved,false_commit";

pub fn sweep_csv(parameter: SweepParameter, rows: &[(f64, MetricsReport)]) -> String {
    let mut out = String::new();
    writeln!(out, "{SWEEP_CSV_HEADER}").expect("string write");
    for (v, m) in rows {
        let f = m.failure_counts;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            parameter.name(),
            fmt4(*v),
            fmt4(m.mgsr),
            fmt4(m.ssr),
            fmt4(m.cr),
            fmt4(m.mean_steps),
            fmt4(m.wsf),
            fmt4(m.utility_mean),
            f.no_detection,
            f.aborted,
            f.switched_unresolved,
            f.false_commit
        )
        .expect("string write");
    }
    out
}

/// Machine-readable run summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: RunConfig,
    pub episodes: usize,
    pub reports: BTreeMap<String, MetricsReport>,
    pub trace_digests: BTreeMap<String, String>,
}

pub fn summarize(results: &[SuiteResult], cfg: &RunConfig) -> Result<RunSummary, BenchError> {
    let mut reports = BTreeMap::new();
    let mut trace_digests = BTreeMap::new();
    let mut episodes = BTreeSet::new();
    for r in results {
        reports.insert(r.variant.name().to_string(), r.metrics(cfg)?);
        trace_digests.insert(r.variant.name().to_string(), format!("{:016x}", r.trace_digest));
        episodes.extend(r.traces.iter().map(|t| t.episode_id));
    }
    Ok(RunSummary {
        config: *cfg,
        episodes: episodes.len(),
        reports,
        trace_digests,
    })
}

/// ASCII frame of the map with the agent path, goals and spawn.
pub fn render_ascii(spec: &EpisodeSpec, trace: &EpisodeTrace) -> Result<String, BenchError> {
    let map = spec.build_map()?;
    let mut grid = map.render();
    for s in &trace.steps {
        grid[s.y][s.x] = '*';
    }
    grid[spec.spawn.y][spec.spawn.x] = 'S';
    for g in &spec.goals {
        let ch = match g.kind {
            GoalKind::Feasible => char::from_digit(g.goal_id.0 % 10, 10).unwrap_or('G'),
            GoalKind::Absent => '?',
            GoalKind::Sealed => 'X',
        };
        grid[g.cell.y][g.cell.x] = ch;
    }
    if let Some(last) = trace.steps.last() {
        grid[last.y][last.x] = '@';
    }
    Ok(grid
        .into_iter()
        .map(|row| row.into_iter().collect::<String>())
        .collect::<Vec<_>>()
        .join("\n"))
}
