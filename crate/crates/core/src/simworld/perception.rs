//! Synthetic perception: a noisy evidence score standing in for an
//! image-text matching head.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::grid::{line_of_sight, Cell, GridMap};
use super::WorldError;
use crate::executive::GoalId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GoalKind {
    /// Present and reachable from spawn.
    Feasible,
    /// Not in the scene; the position is a decoy used for telemetry.
    Absent,
    /// Present but walled off from the agent.
    Sealed,
}

impl GoalKind {
    pub fn is_feasible(self) -> bool {
        self == GoalKind::Feasible
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalInstance {
    pub goal_id: GoalId,
    pub category: String,
    pub cell: Cell,
    /// Probability that an in-range, in-sight observation carries signal.
    pub detectability: f64,
    pub present: bool,
    pub kind: GoalKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerceptionParams {
    pub base_noise_mean: f64,
    pub noise_std: f64,
    pub signal_amplitude: f64,
    /// Meters.
    pub signal_range: f64,
    pub false_positive_rate: f64,
}

impl Default for PerceptionParams {
    fn default() -> Self {
        Self {
            base_noise_mean: 0.10,
            noise_std: 0.05,
            signal_amplitude: 0.80,
            signal_range: 5.0,
            false_positive_rate: 0.02,
        }
    }
}

impl PerceptionParams {
    pub fn validate(&self) -> Result<(), WorldError> {
        let bad = |name: &str, why: String| Err(WorldError::InvalidParams(format!("{name}: {why}")));
        if !(0.0..=1.0).contains(&self.base_noise_mean) {
            return bad("base_noise_mean", format!("must lie in [0, 1], got {}", self.base_noise_mean));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad("noise_std", format!("must be >= 0, got {}", self.noise_std));
        }
        if !(self.signal_amplitude >= 0.0 && self.signal_amplitude.is_finite()) {
            return bad("signal_amplitude", format!("must be >= 0, got {}", self.signal_amplitude));
        }
        if !(self.signal_range > 0.0 && self.signal_range.is_finite()) {
            return bad("signal_range", format!("must be > 0, got {}", self.signal_range));
        }
        if !(0.0..=1.0).contains(&self.false_positive_rate) {
            return bad(
                "false_positive_rate",
                format!("must lie in [0, 1], got {}", self.false_positive_rate),
            );
        }
        Ok(())
    }

    /// Score the navigator treats as a sighting: halfway up the signal.
    pub fn approach_trigger(&self) -> f64 {
        self.base_noise_mean + self.signal_amplitude / 2.0
    }
}

/// One perception reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub score: f64,
    /// Where the target signal came from, when it was genuine.
    pub source: Option<Cell>,
    pub spike: bool,
}

/// Draw one evidence score for `goal` seen from `pose`.
///
/// Three draws are consumed on every call (noise, detection, false positive)
/// so that the random stream does not depend on which branch fires.
pub fn emit_evidence<R: Rng + ?Sized>(
    goal: &GoalInstance,
    pose: Cell,
    map: &GridMap,
    geodesic_m: f64,
    params: &PerceptionParams,
    rng: &mut R,
) -> Observation {
    let noise = if params.noise_std > 0.0 {
        Normal::new(0.0, params.noise_std)
            .expect("validated noise std")
            .sample(rng)
    } else {
        0.0
    };
    let detect_draw: f64 = rng.random();
    let spike_draw: f64 = rng.random();

    let in_range = goal.present
        && geodesic_m <= params.signal_range
        && line_of_sight(map, pose, goal.cell);
    if in_range && detect_draw < goal.detectability {
        let raw = params.base_noise_mean
            + params.signal_amplitude * (-geodesic_m / params.signal_range).exp()
            + noise;
        return Observation {
            score: raw.clamp(0.0, 1.0),
            source: Some(goal.cell),
            spike: false,
        };
    }
    if spike_draw < params.false_positive_rate {
        let raw = params.base_noise_mean + params.signal_amplitude + noise;
        return Observation {
            score: raw.clamp(0.0, 1.0),
            source: None,
            spike: true,
        };
    }
    Observation {
        score: (params.base_noise_mean + noise).clamp(0.0, 1.0),
        source: None,
        spike: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simworld::grid::parse_fixture;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn goal(present: bool, cell: Cell) -> GoalInstance {
        GoalInstance {
            goal_id: GoalId(1),
            category: "chair".into(),
            cell,
            detectability: 1.0,
            present,
            kind: if present { GoalKind::Feasible } else { GoalKind::Absent },
        }
    }

    fn quiet() -> PerceptionParams {
        PerceptionParams {
            noise_std: 0.0,
            false_positive_rate: 0.0,
            ..PerceptionParams::default()
        }
    }

    #[test]
    fn absent_goal_without_noise_is_constant_baseline() {
        let f = parse_fixture("#####\n#S.1#\n#####", 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = goal(false, f.goals[&1]);
        for _ in 0..50 {
            let o = emit_evidence(&g, f.spawn, &f.map, 0.5, &quiet(), &mut rng);
            assert_eq!(o.score, 0.10);
            assert_eq!(o.source, None);
        }
    }

    #[test]
    fn present_goal_at_zero_distance() {
        let f = parse_fixture("#####\n#S.1#\n#####", 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = goal(true, f.goals[&1]);
        let o = emit_evidence(&g, g.cell, &f.map, 0.0, &quiet(), &mut rng);
        assert!((o.score - 0.9).abs() < 1e-12);
        assert_eq!(o.source, Some(g.cell));
    }

    #[test]
    fn walls_block_the_signal() {
        let f = parse_fixture("#######\n#S.#.1#\n#######", 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = goal(true, f.goals[&1]);
        let o = emit_evidence(&g, f.spawn, &f.map, 1.0, &quiet(), &mut rng);
        assert_eq!(o.score, 0.10);
    }

    #[test]
    fn spikes_occur_at_configured_rate() {
        let f = parse_fixture("#####\n#S.1#\n#####", 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = goal(false, f.goals[&1]);
        let p = PerceptionParams {
            noise_std: 0.0,
            false_positive_rate: 0.1,
            ..PerceptionParams::default()
        };
        let n = 20_000;
        let spikes = (0..n)
            .filter(|_| emit_evidence(&g, f.spawn, &f.map, 0.5, &p, &mut rng).spike)
            .count();
        let rate = spikes as f64 / n as f64;
        assert!((rate - 0.1).abs() < 0.01, "rate {rate}");
    }

    #[test]
    fn scores_stay_in_unit_interval() {
        let f = parse_fixture("#####\n#S.1#\n#####", 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = goal(true, f.goals[&1]);
        let p = PerceptionParams {
            noise_std: 0.5,
            false_positive_rate: 0.3,
            ..PerceptionParams::default()
        };
        for _ in 0..2000 {
            let o = emit_evidence(&g, f.spawn, &f.map, 0.5, &p, &mut rng);
            assert!((0.0..=1.0).contains(&o.score));
        }
    }
}
