//! The System-2 meta-controller.
//!
//! Per step the executive ingests one [`SignalSample`] for the active goal,
//! updates the rolling window and meta-states, and emits one
//! [`ExecutiveDecision`]. Branch order is abort, switch, commit, then the
//! per-goal cap, then persist. Abort and switch are suppressed while the
//! active goal is inside its grace period.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::meta_state::{self, MetaStateError, MetaStateVector, StateWeights, SunkCost};
use crate::signal::{RollingWindow, SignalParams, SignalSample, SignalSummary};

/// Floor and ceiling of the dynamic per-goal allocation, steps.
pub const MIN_ALLOCATION: u32 = 50;
pub const MAX_ALLOCATION: u32 = 300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExecutiveError {
    #[error("allocation requested with no remaining goals")]
    NoRemainingGoals,
    #[error("no goal is active")]
    NoActiveGoal,
    #[error("invalid threshold `{name}`: {reason}")]
    InvalidThreshold { name: &'static str, reason: String },
    #[error(transparent)]
    MetaState(#[from] MetaStateError),
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct GoalId(pub u32);

impl fmt::Display for GoalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}", self.0)
    }
}

/// Planar position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub abort: f64,
    pub switch: f64,
    pub commit: f64,
    /// Meters.
    pub commit_distance: f64,
    /// Per-goal grace period, steps.
    pub grace: u32,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            abort: 0.30,
            switch: 0.20,
            commit: 0.300,
            commit_distance: 3.0,
            grace: 20,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), ExecutiveError> {
        for (name, v) in [
            ("abort", self.abort),
            ("switch", self.switch),
            ("commit", self.commit),
            ("commit_distance", self.commit_distance),
        ] {
            if !v.is_finite() {
                return Err(ExecutiveError::InvalidThreshold {
                    name,
                    reason: format!("must be finite, got {v}"),
                });
            }
        }
        if self.commit_distance <= 0.0 {
            return Err(ExecutiveError::InvalidThreshold {
                name: "commit_distance",
                reason: format!("must be > 0, got {}", self.commit_distance),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MetaAction {
    Persist,
    Switch,
    Abort,
    Commit,
}

impl fmt::Display for MetaAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetaAction::Persist => "PERSIST",
            MetaAction::Switch => "SWITCH",
            MetaAction::Abort => "ABORT",
            MetaAction::Commit => "COMMIT",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DecisionReason {
    Grace,
    LowPotentiality,
    GateClosed,
    EvidenceCommit,
    SubgoalCap,
    Default,
}

impl fmt::Display for DecisionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecisionReason::Grace => "GRACE",
            DecisionReason::LowPotentiality => "LOW_POTENTIALITY",
            DecisionReason::GateClosed => "GATE_CLOSED",
            DecisionReason::EvidenceCommit => "EVIDENCE_COMMIT",
            DecisionReason::SubgoalCap => "SUBGOAL_CAP",
            DecisionReason::Default => "DEFAULT",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MethodVariant {
    FixedOrder,
    ReactiveOrder,
    MornAbortOnly,
    MornSwitchOnly,
    MornFull,
}

impl MethodVariant {
    pub const ALL: [MethodVariant; 5] = [
        MethodVariant::FixedOrder,
        MethodVariant::ReactiveOrder,
        MethodVariant::MornAbortOnly,
        MethodVariant::MornSwitchOnly,
        MethodVariant::MornFull,
    ];

    pub fn abort_enabled(self) -> bool {
        matches!(self, MethodVariant::MornAbortOnly | MethodVariant::MornFull)
    }

    pub fn switch_enabled(self) -> bool {
        matches!(self, MethodVariant::MornSwitchOnly | MethodVariant::MornFull)
    }

    /// Whether re-selection uses the greedy nearest-goal heuristic.
    pub fn reorders(self) -> bool {
        !matches!(self, MethodVariant::FixedOrder)
    }

    pub fn name(self) -> &'static str {
        match self {
            MethodVariant::FixedOrder => "FIXED_ORDER",
            MethodVariant::ReactiveOrder => "REACTIVE_ORDER",
            MethodVariant::MornAbortOnly => "MORN_ABORT_ONLY",
            MethodVariant::MornSwitchOnly => "MORN_SWITCH_ONLY",
            MethodVariant::MornFull => "MORN_FULL",
        }
    }
}

impl fmt::Display for MethodVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MethodVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        let v = match norm.as_str() {
            "FIXED_ORDER" | "FO" => MethodVariant::FixedOrder,
            "REACTIVE_ORDER" | "RO" => MethodVariant::ReactiveOrder,
            "MORN_ABORT_ONLY" | "ABORT_ONLY" => MethodVariant::MornAbortOnly,
            "MORN_SWITCH_ONLY" | "SWITCH_ONLY" => MethodVariant::MornSwitchOnly,
            "MORN_FULL" | "MORN" => MethodVariant::MornFull,
            _ => return Err(format!("unknown method variant `{s}`")),
        };
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GoalState {
    Pending,
    Active,
    Completed,
    Failed,
}

impl GoalState {
    pub fn is_terminal(self) -> bool {
        matches!(self, GoalState::Completed | GoalState::Failed)
    }
}

/// How a goal last left the active slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalExit {
    pub action: MetaAction,
    pub reason: DecisionReason,
    pub step: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalStatus {
    pub goal_id: GoalId,
    pub state: GoalState,
    /// Steps charged to this goal across all activations.
    pub spent: u32,
    pub switch_count: u32,
    pub activations: u32,
    pub last_exit: Option<GoalExit>,
}

impl GoalStatus {
    pub fn new(goal_id: GoalId) -> Self {
        Self {
            goal_id,
            state: GoalState::Pending,
            spent: 0,
            switch_count: 0,
            activations: 0,
            last_exit: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetLedger {
    pub budget_max: u32,
    pub elapsed: u32,
    pub allocation: u32,
    pub active_spent: u32,
}

impl BudgetLedger {
    pub fn new(budget_max: u32) -> Self {
        Self {
            budget_max,
            elapsed: 0,
            allocation: MIN_ALLOCATION,
            active_spent: 0,
        }
    }

    pub fn exhausted(&self) -> bool {
        self.elapsed >= self.budget_max
    }

    pub fn remaining(&self) -> u32 {
        self.budget_max.saturating_sub(self.elapsed)
    }
}

/// Dynamic per-goal cap: `min(300, max(⌊(B_max − t)/|G_rem|⌋, 50))`.
pub fn allocate(budget: &BudgetLedger, remaining_goals: usize) -> Result<u32, ExecutiveError> {
    if remaining_goals == 0 {
        return Err(ExecutiveError::NoRemainingGoals);
    }
    let share = budget.remaining() as u64 / remaining_goals as u64;
    Ok(share.clamp(MIN_ALLOCATION as u64, MAX_ALLOCATION as u64) as u32)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExecutiveDecision {
    pub action: MetaAction,
    pub next_goal: Option<GoalId>,
    pub states: MetaStateVector,
    pub reason: DecisionReason,
}

/// Per-step branch selection.
///
/// `has_alternative` reports whether another pending goal exists to switch
/// to; without one, a closed gate cannot switch and the cap aborts instead.
pub fn decide(
    states: &MetaStateVector,
    distance: f64,
    ledger: &BudgetLedger,
    thresholds: &Thresholds,
    variant: MethodVariant,
    has_alternative: bool,
) -> ExecutiveDecision {
    let in_grace = ledger.active_spent < thresholds.grace;
    let mk = |action, reason| ExecutiveDecision {
        action,
        next_goal: None,
        states: *states,
        reason,
    };

    let low_potentiality = variant.abort_enabled() && states.potentiality < thresholds.abort;
    let gate_closed =
        variant.switch_enabled() && has_alternative && states.persistence < thresholds.switch;

    if !in_grace && low_potentiality {
        return mk(MetaAction::Abort, DecisionReason::LowPotentiality);
    }
    if !in_grace && gate_closed {
        return mk(MetaAction::Switch, DecisionReason::GateClosed);
    }
    if states.sufficiency > thresholds.commit && distance < thresholds.commit_distance {
        return mk(MetaAction::Commit, DecisionReason::EvidenceCommit);
    }
    if ledger.active_spent >= ledger.allocation {
        let action = if has_alternative {
            MetaAction::Switch
        } else {
            MetaAction::Abort
        };
        return mk(action, DecisionReason::SubgoalCap);
    }
    if in_grace && (low_potentiality || gate_closed) {
        return mk(MetaAction::Persist, DecisionReason::Grace);
    }
    mk(MetaAction::Persist, DecisionReason::Default)
}

/// Greedy re-ordering: the remaining goal nearest (Euclidean) to the agent,
/// ties broken by lowest id.
pub fn select_next<'a, I>(
    remaining: I,
    agent_position: Point2,
    goal_positions: &BTreeMap<GoalId, Point2>,
) -> Result<GoalId, ExecutiveError>
where
    I: IntoIterator<Item = &'a GoalStatus>,
{
    remaining
        .into_iter()
        .map(|g| {
            let d = goal_positions
                .get(&g.goal_id)
                .map_or(f64::INFINITY, |p| p.distance(&agent_position));
            (d, g.goal_id)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
        .ok_or(ExecutiveError::NoRemainingGoals)
}

/// Goal statuses plus the prescribed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionSchedule {
    pub goals: Vec<GoalStatus>,
    pub active: Option<GoalId>,
}

impl MissionSchedule {
    /// Goals in prescribed order; none active yet.
    pub fn new(order: &[GoalId]) -> Self {
        Self {
            goals: order.iter().copied().map(GoalStatus::new).collect(),
            active: None,
        }
    }

    pub fn get(&self, id: GoalId) -> Option<&GoalStatus> {
        self.goals.iter().find(|g| g.goal_id == id)
    }

    fn get_mut(&mut self, id: GoalId) -> Option<&mut GoalStatus> {
        self.goals.iter_mut().find(|g| g.goal_id == id)
    }

    /// Goals not yet completed or failed, including the active one.
    pub fn remaining(&self) -> impl Iterator<Item = &GoalStatus> {
        self.goals.iter().filter(|g| !g.state.is_terminal())
    }

    pub fn remaining_count(&self) -> usize {
        self.remaining().count()
    }

    pub fn is_done(&self) -> bool {
        self.remaining_count() == 0
    }
}

/// One executive instance per episode: schedule, budget and signal window.
#[derive(Debug, Clone)]
pub struct Executive {
    variant: MethodVariant,
    thresholds: Thresholds,
    weights: StateWeights,
    signal_params: SignalParams,
    schedule: MissionSchedule,
    ledger: BudgetLedger,
    window: RollingWindow,
    goal_positions: BTreeMap<GoalId, Point2>,
}

/// Everything the executive computed for one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub goal: GoalId,
    pub summary: SignalSummary,
    pub decision: ExecutiveDecision,
    pub ledger: BudgetLedger,
}

impl Executive {
    pub fn new(
        variant: MethodVariant,
        thresholds: Thresholds,
        weights: StateWeights,
        signal_params: SignalParams,
        order: &[GoalId],
        goal_positions: BTreeMap<GoalId, Point2>,
        budget_max: u32,
    ) -> Self {
        Self {
            variant,
            thresholds,
            weights,
            signal_params,
            schedule: MissionSchedule::new(order),
            ledger: BudgetLedger::new(budget_max),
            window: RollingWindow::new(signal_params.window),
            goal_positions,
        }
    }

    pub fn variant(&self) -> MethodVariant {
        self.variant
    }

    pub fn schedule(&self) -> &MissionSchedule {
        &self.schedule
    }

    pub fn ledger(&self) -> &BudgetLedger {
        &self.ledger
    }

    pub fn window(&self) -> &RollingWindow {
        &self.window
    }

    pub fn active_goal(&self) -> Option<GoalId> {
        self.schedule.active
    }

    /// True once every goal is resolved or the budget is spent.
    pub fn finished(&self) -> bool {
        self.schedule.is_done() || self.ledger.exhausted()
    }

    /// Pick and activate the first goal.
    pub fn start(&mut self, agent_position: Point2) -> Result<GoalId, ExecutiveError> {
        let first = self.choose_next(agent_position, None)?;
        self.activate(first)?;
        Ok(first)
    }

    fn choose_next(
        &self,
        agent_position: Point2,
        leaving: Option<GoalId>,
    ) -> Result<GoalId, ExecutiveError> {
        let pending: Vec<&GoalStatus> = self
            .schedule
            .goals
            .iter()
            .filter(|g| g.state == GoalState::Pending)
            .collect();
        // Prefer a goal other than the one just switched away from.
        let others: Vec<&GoalStatus> = pending
            .iter()
            .copied()
            .filter(|g| Some(g.goal_id) != leaving)
            .collect();
        let pool = if others.is_empty() { pending } else { others };
        if pool.is_empty() {
            return Err(ExecutiveError::NoRemainingGoals);
        }
        if self.variant.reorders() {
            return select_next(pool, agent_position, &self.goal_positions);
        }
        // Prescribed order, cycling forward from the goal being left.
        let index_of = |id: GoalId| {
            self.schedule
                .goals
                .iter()
                .position(|g| g.goal_id == id)
                .unwrap_or(0)
        };
        let start = leaving.map_or(0, |id| index_of(id) + 1);
        let n = self.schedule.goals.len();
        (0..n)
            .map(|k| &self.schedule.goals[(start + k) % n])
            .find(|g| pool.iter().any(|p| p.goal_id == g.goal_id))
            .map(|g| g.goal_id)
            .ok_or(ExecutiveError::NoRemainingGoals)
    }

    fn activate(&mut self, id: GoalId) -> Result<(), ExecutiveError> {
        let remaining = self.schedule.remaining_count();
        self.ledger.allocation = allocate(&self.ledger, remaining)?;
        self.ledger.active_spent = 0;
        self.window.reset();
        let goal = self
            .schedule
            .get_mut(id)
            .ok_or(ExecutiveError::NoActiveGoal)?;
        goal.state = GoalState::Active;
        goal.activations += 1;
        self.schedule.active = Some(id);
        Ok(())
    }

    /// Charge one primitive step to the active goal, update signals and
    /// meta-states, decide, and apply the decision.
    pub fn observe(
        &mut self,
        sample: &SignalSample,
        agent_position: Point2,
    ) -> Result<StepRecord, ExecutiveError> {
        let goal = self.schedule.active.ok_or(ExecutiveError::NoActiveGoal)?;
        self.ledger.elapsed += 1;
        self.ledger.active_spent += 1;
        if let Some(g) = self.schedule.get_mut(goal) {
            g.spent += 1;
        }
        let summary = self.window.update(sample, &self.signal_params);
        let sunk = SunkCost::new(self.ledger.active_spent, self.ledger.allocation);
        let states = meta_state::evaluate(sample, &summary, sunk, &self.weights)?;
        let has_alternative = self
            .schedule
            .goals
            .iter()
            .any(|g| g.state == GoalState::Pending);
        let mut decision = decide(
            &states,
            sample.distance,
            &self.ledger,
            &self.thresholds,
            self.variant,
            has_alternative,
        );
        let ledger_at_decision = self.ledger;
        decision.next_goal = self.apply(&decision, sample.step, agent_position)?;
        Ok(StepRecord {
            goal,
            summary,
            decision,
            ledger: ledger_at_decision,
        })
    }

    /// Apply a decision to the schedule and budget. Returns the newly
    /// activated goal, if any.
    pub fn apply(
        &mut self,
        decision: &ExecutiveDecision,
        step: u64,
        agent_position: Point2,
    ) -> Result<Option<GoalId>, ExecutiveError> {
        if decision.action == MetaAction::Persist {
            return Ok(None);
        }
        let current = self.schedule.active.ok_or(ExecutiveError::NoActiveGoal)?;
        let exit = GoalExit {
            action: decision.action,
            reason: decision.reason,
            step,
        };
        {
            let g = self
                .schedule
                .get_mut(current)
                .ok_or(ExecutiveError::NoActiveGoal)?;
            g.state = match decision.action {
                MetaAction::Commit => GoalState::Completed,
                MetaAction::Abort => GoalState::Failed,
                MetaAction::Switch => {
                    g.switch_count += 1;
                    GoalState::Pending
                }
                MetaAction::Persist => unreachable!(),
            };
            g.last_exit = Some(exit);
        }
        self.schedule.active = None;
        self.ledger.active_spent = 0;
        self.window.reset();
        if self.schedule.is_done() || self.ledger.exhausted() {
            return Ok(None);
        }
        let leaving = (decision.action == MetaAction::Switch).then_some(current);
        let next = self.choose_next(agent_position, leaving)?;
        self.activate(next)?;
        Ok(Some(next))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ledger(budget_max: u32, elapsed: u32, allocation: u32, active_spent: u32) -> BudgetLedger {
        BudgetLedger {
            budget_max,
            elapsed,
            allocation,
            active_spent,
        }
    }

    fn states(p: f64, g: f64, s: f64) -> MetaStateVector {
        MetaStateVector {
            potentiality: p,
            persistence: g,
            sufficiency: s,
        }
    }

    #[test]
    fn allocate_examples() {
        assert_eq!(allocate(&ledger(500, 0, 0, 0), 2).unwrap(), 250);
        assert_eq!(allocate(&ledger(650, 600, 0, 0), 3).unwrap(), 50);
        assert_eq!(allocate(&ledger(500, 0, 0, 0), 1).unwrap(), 300);
        assert_eq!(allocate(&ledger(500, 200, 0, 0), 2).unwrap(), 150);
        assert_eq!(
            allocate(&ledger(500, 0, 0, 0), 0),
            Err(ExecutiveError::NoRemainingGoals)
        );
    }

    #[test]
    fn decide_examples() {
        let th = Thresholds::default();
        let v = MethodVariant::MornFull;

        let d = decide(&states(0.10, 0.5, 0.0), 8.0, &ledger(500, 5, 250, 5), &th, v, true);
        assert_eq!((d.action, d.reason), (MetaAction::Persist, DecisionReason::Grace));

        let d = decide(&states(0.25, 0.5, 0.0), 8.0, &ledger(500, 25, 250, 25), &th, v, true);
        assert_eq!(
            (d.action, d.reason),
            (MetaAction::Abort, DecisionReason::LowPotentiality)
        );

        let d = decide(&states(0.6, 0.5, 0.5), 2.0, &ledger(500, 40, 250, 40), &th, v, true);
        assert_eq!(
            (d.action, d.reason),
            (MetaAction::Commit, DecisionReason::EvidenceCommit)
        );

        let d = decide(&states(0.6, 0.5, 0.5), 4.0, &ledger(500, 40, 250, 40), &th, v, true);
        assert_eq!(
            (d.action, d.reason),
            (MetaAction::Persist, DecisionReason::Default)
        );
    }

    #[test]
    fn branch_priority_follows_abort_switch_commit() {
        let th = Thresholds::default();
        let l = ledger(500, 30, 250, 30);
        let all = states(0.1, 0.1, 0.9);
        let d = decide(&all, 1.0, &l, &th, MethodVariant::MornFull, true);
        assert_eq!(d.action, MetaAction::Abort);
        let d = decide(&all, 1.0, &l, &th, MethodVariant::MornSwitchOnly, true);
        assert_eq!(d.action, MetaAction::Switch);
        let d = decide(&all, 1.0, &l, &th, MethodVariant::FixedOrder, true);
        assert_eq!(d.action, MetaAction::Commit);
    }

    #[test]
    fn commit_ignores_grace() {
        let th = Thresholds::default();
        let d = decide(
            &states(0.1, 0.1, 0.9),
            1.0,
            &ledger(500, 2, 250, 2),
            &th,
            MethodVariant::MornFull,
            true,
        );
        assert_eq!(d.action, MetaAction::Commit);
    }

    #[test]
    fn subgoal_cap_switches_or_aborts() {
        let th = Thresholds::default();
        let healthy = states(0.9, 0.9, 0.0);
        for v in MethodVariant::ALL {
            let d = decide(&healthy, 9.0, &ledger(500, 250, 250, 250), &th, v, true);
            assert_eq!((d.action, d.reason), (MetaAction::Switch, DecisionReason::SubgoalCap));
            let d = decide(&healthy, 9.0, &ledger(500, 250, 250, 250), &th, v, false);
            assert_eq!((d.action, d.reason), (MetaAction::Abort, DecisionReason::SubgoalCap));
        }
    }

    #[test]
    fn gate_without_alternative_persists() {
        let th = Thresholds::default();
        let d = decide(
            &states(0.9, 0.05, 0.0),
            9.0,
            &ledger(500, 100, 250, 60),
            &th,
            MethodVariant::MornFull,
            false,
        );
        assert_eq!(d.action, MetaAction::Persist);
    }

    #[test]
    fn baselines_never_abort_or_switch_on_states() {
        let th = Thresholds::default();
        for v in [MethodVariant::FixedOrder, MethodVariant::ReactiveOrder] {
            let d = decide(&states(0.0, 0.0, 0.0), 9.0, &ledger(500, 100, 250, 60), &th, v, true);
            assert_eq!(d.action, MetaAction::Persist);
        }
        let d = decide(
            &states(0.9, 0.0, 0.0),
            9.0,
            &ledger(500, 100, 250, 60),
            &th,
            MethodVariant::MornAbortOnly,
            true,
        );
        assert_eq!(d.action, MetaAction::Persist);
        let d = decide(
            &states(0.0, 0.9, 0.0),
            9.0,
            &ledger(500, 100, 250, 60),
            &th,
            MethodVariant::MornSwitchOnly,
            true,
        );
        assert_eq!(d.action, MetaAction::Persist);
    }

    fn statuses(ids: &[u32]) -> Vec<GoalStatus> {
        ids.iter().map(|&i| GoalStatus::new(GoalId(i))).collect()
    }

    #[test]
    fn select_next_examples() {
        let mut pos = BTreeMap::new();
        pos.insert(GoalId(1), Point2::new(3.0, 4.0));
        pos.insert(GoalId(2), Point2::new(6.0, 0.0));
        let origin = Point2::new(0.0, 0.0);
        assert_eq!(select_next(&statuses(&[1, 2]), origin, &pos).unwrap(), GoalId(1));
        assert_eq!(select_next(&statuses(&[2]), origin, &pos).unwrap(), GoalId(2));

        let mut tie = BTreeMap::new();
        tie.insert(GoalId(7), Point2::new(0.0, 5.0));
        tie.insert(GoalId(4), Point2::new(5.0, 0.0));
        assert_eq!(select_next(&statuses(&[7, 4]), origin, &tie).unwrap(), GoalId(4));

        assert_eq!(
            select_next(&statuses(&[]), origin, &pos),
            Err(ExecutiveError::NoRemainingGoals)
        );
    }

    fn executive(variant: MethodVariant, budget: u32, ids: &[u32]) -> Executive {
        let order: Vec<GoalId> = ids.iter().map(|&i| GoalId(i)).collect();
        let positions = order
            .iter()
            .map(|&g| (g, Point2::new(g.0 as f64, 0.0)))
            .collect();
        Executive::new(
            variant,
            Thresholds::default(),
            StateWeights::default(),
            SignalParams::default(),
            &order,
            positions,
            budget,
        )
    }

    #[test]
    fn abort_reallocates_from_remaining_budget() {
        let mut ex = executive(MethodVariant::MornFull, 500, &[0, 1, 2]);
        ex.start(Point2::new(0.0, 0.0)).unwrap();
        ex.ledger.elapsed = 200;
        let d = ExecutiveDecision {
            action: MetaAction::Abort,
            next_goal: None,
            states: states(0.1, 0.5, 0.0),
            reason: DecisionReason::LowPotentiality,
        };
        let next = ex.apply(&d, 200, Point2::new(0.0, 0.0)).unwrap();
        assert_eq!(next, Some(GoalId(1)));
        assert_eq!(ex.ledger.allocation, 150);
        assert_eq!(ex.schedule.get(GoalId(0)).unwrap().state, GoalState::Failed);
    }

    #[test]
    fn switched_goal_stays_pending_and_reselectable() {
        let mut ex = executive(MethodVariant::MornFull, 500, &[0, 1]);
        ex.start(Point2::new(0.0, 0.0)).unwrap();
        let sw = ExecutiveDecision {
            action: MetaAction::Switch,
            next_goal: None,
            states: states(0.5, 0.1, 0.0),
            reason: DecisionReason::GateClosed,
        };
        assert_eq!(ex.apply(&sw, 30, Point2::new(0.0, 0.0)).unwrap(), Some(GoalId(1)));
        let g0 = ex.schedule.get(GoalId(0)).unwrap();
        assert_eq!(g0.state, GoalState::Pending);
        assert_eq!(g0.switch_count, 1);
        // Switching back from goal 1 returns to goal 0.
        assert_eq!(ex.apply(&sw, 60, Point2::new(0.0, 0.0)).unwrap(), Some(GoalId(0)));
    }

    #[test]
    fn commit_on_last_goal_ends_mission() {
        let mut ex = executive(MethodVariant::FixedOrder, 500, &[5]);
        ex.start(Point2::new(0.0, 0.0)).unwrap();
        let c = ExecutiveDecision {
            action: MetaAction::Commit,
            next_goal: None,
            states: states(0.5, 0.5, 0.9),
            reason: DecisionReason::EvidenceCommit,
        };
        assert_eq!(ex.apply(&c, 10, Point2::new(0.0, 0.0)).unwrap(), None);
        assert!(ex.schedule.is_done());
        assert!(ex.finished());
    }

    #[test]
    fn fixed_order_cycles_forward_on_switch() {
        let mut ex = executive(MethodVariant::FixedOrder, 650, &[3, 1, 2]);
        assert_eq!(ex.start(Point2::new(9.0, 0.0)).unwrap(), GoalId(3));
        let sw = ExecutiveDecision {
            action: MetaAction::Switch,
            next_goal: None,
            states: states(0.5, 0.5, 0.0),
            reason: DecisionReason::SubgoalCap,
        };
        assert_eq!(ex.apply(&sw, 1, Point2::new(9.0, 0.0)).unwrap(), Some(GoalId(1)));
        assert_eq!(ex.apply(&sw, 2, Point2::new(9.0, 0.0)).unwrap(), Some(GoalId(2)));
        assert_eq!(ex.apply(&sw, 3, Point2::new(9.0, 0.0)).unwrap(), Some(GoalId(3)));
    }

    #[test]
    fn observe_resets_context_after_intervention() {
        let mut ex = executive(MethodVariant::MornFull, 500, &[0, 1]);
        ex.start(Point2::new(0.0, 0.0)).unwrap();
        // Walk up to a strong stable signal at the goal: commit.
        let mut committed = false;
        for t in 1..=10u64 {
            let r = ex
                .observe(&SignalSample::new(t, 0.5, 0.9), Point2::new(0.0, 0.0))
                .unwrap();
            if r.decision.action == MetaAction::Commit {
                committed = true;
                assert_eq!(r.decision.next_goal, Some(GoalId(1)));
                break;
            }
        }
        assert!(committed);
        let r = ex
            .observe(&SignalSample::new(11, 9.0, 0.1), Point2::new(0.0, 0.0))
            .unwrap();
        assert_eq!(r.goal, GoalId(1));
        assert_eq!(ex.window().len(), 1);
        assert_eq!(ex.ledger().active_spent, 1);
    }
}
