//! Independent oracles and checkers shared by the integration targets.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, VecDeque};

use morn_core::executive::{
    DecisionReason, Executive, GoalId, MetaAction, MethodVariant, Point2, StepRecord, Thresholds,
};
use morn_core::meta_state::StateWeights;
use morn_core::signal::{SignalParams, SignalSample};
use morn_core::simworld::{Cell, GridMap, Tile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two-pass population variance.
pub fn naive_variance(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

/// Plain breadth-first search over (x, y) pairs with a hash map, 4-connected.
/// Returns step counts from `from` to every reachable free cell.
pub fn bfs_oracle(map: &GridMap, from: Cell) -> HashMap<(usize, usize), u64> {
    let mut dist = HashMap::new();
    if !map.is_free(from) {
        return dist;
    }
    let mut q = VecDeque::new();
    dist.insert((from.x, from.y), 0u64);
    q.push_back((from.x, from.y));
    while let Some((x, y)) = q.pop_front() {
        let d = dist[&(x, y)];
        let mut next = Vec::with_capacity(4);
        if y > 0 {
            next.push((x, y - 1));
        }
        if x > 0 {
            next.push((x - 1, y));
        }
        next.push((x + 1, y));
        next.push((x, y + 1));
        for (nx, ny) in next {
            if nx >= map.width() || ny >= map.height() {
                continue;
            }
            if map.tile(Cell::new(nx, ny)) != Tile::Free {
                continue;
            }
            if let std::collections::hash_map::Entry::Vacant(e) = dist.entry((nx, ny)) {
                e.insert(d + 1);
                q.push_back((nx, ny));
            }
        }
    }
    dist
}

/// Oracle geodesic distance in meters; infinity when unreachable.
pub fn oracle_geodesic(map: &GridMap, a: Cell, b: Cell) -> f64 {
    bfs_oracle(map, a)
        .get(&(b.x, b.y))
        .map_or(f64::INFINITY, |&s| s as f64 * map.cell_size())
}

/// Random map with a walled border and interior walls at `density`.
pub fn random_map(rng: &mut ChaCha8Rng, density: f64) -> GridMap {
    let w = rng.random_range(5..=24);
    let h = rng.random_range(5..=18);
    let mut map = GridMap::filled(w, h, 0.25);
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            if !rng.random_bool(density) {
                map.set(Cell::new(x, y), Tile::Free);
            }
        }
    }
    map
}

/// What a controller invariant check saw over one random sequence.
#[derive(Debug, Default, Clone)]
pub struct InvariantReport {
    pub steps: u64,
    pub aborts: u64,
    pub switches: u64,
    pub commits: u64,
    pub violations: Vec<String>,
}

/// Drive an executive with a random telemetry stream and audit every step.
pub fn audit_random_sequence(seed: u64) -> InvariantReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let variant = MethodVariant::ALL[rng.random_range(0..5)];
    let k = rng.random_range(1..=3u32);
    let budget = rng.random_range(40..=400u32);
    let thresholds = Thresholds {
        abort: rng.random_range(0.0..0.7),
        switch: rng.random_range(0.0..0.7),
        commit: rng.random_range(0.1..0.9),
        commit_distance: rng.random_range(0.5..5.0),
        grace: rng.random_range(0..=40),
    };
    let mut weights = StateWeights::default();
    weights.pot_bias = rng.random_range(-1.5..0.5);
    weights.gate_bias = rng.random_range(-2.0..0.5);
    let params = SignalParams::default();
    let order: Vec<GoalId> = (0..k).map(GoalId).collect();
    let positions: BTreeMap<GoalId, Point2> = order
        .iter()
        .map(|&g| (g, Point2::new(rng.random_range(0.0..20.0), rng.random_range(0.0..20.0))))
        .collect();
    let mut exec = Executive::new(variant, thresholds, weights, params, &order, positions, budget);
    let agent = Point2::new(0.0, 0.0);
    exec.start(agent).expect("start");

    let mut report = InvariantReport::default();
    let mut distance = rng.random_range(0.0..12.0);
    let mut evidence = 0.1;
    let mut prev: Option<StepRecord> = None;
    while !exec.finished() {
        // Random walk in distance with occasional unreachable stretches and
        // evidence regime changes.
        distance = if rng.random_bool(0.02) {
            f64::INFINITY
        } else if distance.is_infinite() {
            rng.random_range(0.0..12.0)
        } else {
            (distance + rng.random_range(-0.25..=0.25f64)).max(0.0)
        };
        if rng.random_bool(0.05) {
            evidence = rng.random_range(0.0..1.0);
        }
        let s = (evidence + rng.random_range(-0.1..0.1f64)).clamp(0.0, 1.0);
        let t = exec.ledger().elapsed as u64 + 1;
        let rec = match exec.observe(&SignalSample::new(t, distance, s), agent) {
            Ok(r) => r,
            Err(e) => {
                report.violations.push(format!("step {t}: {e}"));
                break;
            }
        };
        report.steps += 1;
        let d = &rec.decision;
        let mut bad = |msg: String| report.violations.push(format!("step {t} ({variant}): {msg}"));

        if rec.ledger.elapsed > budget {
            bad(format!("elapsed {} > budget {budget}", rec.ledger.elapsed));
        }
        let intervention = matches!(d.action, MetaAction::Abort | MetaAction::Switch);
        if intervention && rec.ledger.active_spent < thresholds.grace {
            bad(format!("{:?} ({:?}) during grace", d.action, d.reason));
        }
        if d.action == MetaAction::Commit
            && !(d.states.sufficiency > thresholds.commit && distance < thresholds.commit_distance)
        {
            bad(format!(
                "commit with sufficiency {} and distance {distance}",
                d.states.sufficiency
            ));
        }
        match (variant, d.action, d.reason) {
            (MethodVariant::FixedOrder | MethodVariant::ReactiveOrder, MetaAction::Abort | MetaAction::Switch, r)
                if r != DecisionReason::SubgoalCap =>
            {
                bad(format!("baseline emitted {:?} ({r:?})", d.action))
            }
            (MethodVariant::MornAbortOnly, MetaAction::Switch, DecisionReason::GateClosed) => {
                bad("abort-only emitted a gate switch".into())
            }
            (MethodVariant::MornSwitchOnly, MetaAction::Abort, DecisionReason::LowPotentiality) => {
                bad("switch-only emitted a potentiality abort".into())
            }
            _ => {}
        }
        if let Some(p) = prev {
            if p.decision.action != MetaAction::Persist
                && (rec.summary.fill != 1 || rec.ledger.active_spent != 1)
            {
                bad(format!(
                    "after reset: window {} active_spent {}",
                    rec.summary.fill, rec.ledger.active_spent
                ));
            }
        }
        match d.action {
            MetaAction::Abort => report.aborts += 1,
            MetaAction::Switch => report.switches += 1,
            MetaAction::Commit => report.commits += 1,
            MetaAction::Persist => {}
        }
        prev = Some(rec);
    }
    if exec.ledger().elapsed > budget {
        report
            .violations
            .push(format!("final elapsed {} > {budget}", exec.ledger().elapsed));
    }
    report
}
