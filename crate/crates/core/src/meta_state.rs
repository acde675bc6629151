//! The three executive meta-states.
//!
//! * Potentiality `Π = σ(w_v·v + w_s·s + w_stab·stab + b_Π)`: is the search on
//!   the active goal still productive?
//! * Persistence gate `Γ = σ(u_g·g − u_i·c/B_sub + u_v·v + b_Γ)`: is further
//!   investment justified given what has already been spent?
//! * Sufficiency `Σ = w_e·s + w_stab·stab + w_prox·exp(−d/λ)`: is it safe to
//!   declare the goal found? Linear, no squashing.
//!
//! The published coefficients are available as [`StateWeights::published`];
//! they carry zero biases. [`StateWeights::default`] is the calibrated set used
//! by the benchmark (see the README for why the two differ).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{SignalSample, SignalSummary};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetaStateError {
    #[error("sunk cost allocation must be positive")]
    ZeroAllocation,
    #[error("distance must be non-negative, got {0}")]
    NegativeDistance(f64),
    #[error("invalid state weights: {0}")]
    InvalidWeights(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateWeights {
    pub pot_v: f64,
    pub pot_s: f64,
    pub pot_stab: f64,
    pub pot_bias: f64,
    pub gate_gain: f64,
    pub gate_inertia: f64,
    pub gate_v: f64,
    pub gate_bias: f64,
    pub acc_e: f64,
    pub acc_stab: f64,
    pub acc_prox: f64,
    /// Proximity kernel length scale, meters.
    pub prox_scale: f64,
}

impl StateWeights {
    /// Coefficients exactly as published, without pre-activation biases.
    pub const fn published() -> Self {
        Self {
            pot_v: 0.4,
            pot_s: 0.3,
            pot_stab: 0.3,
            pot_bias: 0.0,
            gate_gain: 0.5,
            gate_inertia: 0.3,
            gate_v: 0.2,
            gate_bias: 0.0,
            acc_e: 0.3,
            acc_stab: 0.4,
            acc_prox: 0.3,
            prox_scale: 5.0,
        }
    }

    /// Sum of the accumulation weights; the upper bound of `Σ` for unit inputs.
    pub fn accumulation_total(&self) -> f64 {
        self.acc_e + self.acc_stab + self.acc_prox
    }

    pub fn validate(&self) -> Result<(), MetaStateError> {
        let all = [
            ("pot_v", self.pot_v),
            ("pot_s", self.pot_s),
            ("pot_stab", self.pot_stab),
            ("pot_bias", self.pot_bias),
            ("gate_gain", self.gate_gain),
            ("gate_inertia", self.gate_inertia),
            ("gate_v", self.gate_v),
            ("gate_bias", self.gate_bias),
            ("acc_e", self.acc_e),
            ("acc_stab", self.acc_stab),
            ("acc_prox", self.acc_prox),
            ("prox_scale", self.prox_scale),
        ];
        if let Some((name, v)) = all.iter().find(|(_, v)| !v.is_finite()) {
            return Err(MetaStateError::InvalidWeights(format!(
                "{name} must be finite, got {v}"
            )));
        }
        if self.prox_scale <= 0.0 {
            return Err(MetaStateError::InvalidWeights(format!(
                "prox_scale must be > 0, got {}",
                self.prox_scale
            )));
        }
        for (name, v) in [
            ("acc_e", self.acc_e),
            ("acc_stab", self.acc_stab),
            ("acc_prox", self.acc_prox),
        ] {
            if v < 0.0 {
                return Err(MetaStateError::InvalidWeights(format!(
                    "{name} must be >= 0, got {v}"
                )));
            }
        }
        let total = self.accumulation_total();
        if total > 1.0 + 1e-9 {
            return Err(MetaStateError::InvalidWeights(format!(
                "accumulation weights sum to {total}, must not exceed 1"
            )));
        }
        Ok(())
    }
}

impl Default for StateWeights {
    fn default() -> Self {
        Self {
            pot_v: 0.4,
            pot_s: 0.3,
            pot_stab: 0.3,
            pot_bias: -0.45,
            gate_gain: 0.5,
            gate_inertia: 0.3,
            gate_v: 0.2,
            gate_bias: -1.3,
            acc_e: 0.25,
            acc_stab: 0.2,
            acc_prox: 0.04,
            prox_scale: 5.0,
        }
    }
}

/// Steps invested in the active goal against its current allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SunkCost {
    pub spent: u32,
    pub allocation: u32,
}

impl SunkCost {
    pub fn new(spent: u32, allocation: u32) -> Self {
        Self { spent, allocation }
    }

    /// Fraction of the allocation already consumed. Not capped at 1.
    pub fn inertia(&self) -> Result<f64, MetaStateError> {
        if self.allocation == 0 {
            return Err(MetaStateError::ZeroAllocation);
        }
        Ok(self.spent as f64 / self.allocation as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetaStateVector {
    pub potentiality: f64,
    pub persistence: f64,
    pub sufficiency: f64,
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn potentiality(velocity: f64, evidence: f64, stability: f64, w: &StateWeights) -> f64 {
    sigmoid(w.pot_v * velocity + w.pot_s * evidence + w.pot_stab * stability + w.pot_bias)
}

pub fn persistence_gate(
    info_gain: f64,
    sunk: SunkCost,
    velocity: f64,
    w: &StateWeights,
) -> Result<f64, MetaStateError> {
    let inertia = sunk.inertia()?;
    Ok(sigmoid(
        w.gate_gain * info_gain - w.gate_inertia * inertia + w.gate_v * velocity + w.gate_bias,
    ))
}

/// `exp(−d/λ)`. An unreachable goal (`d = ∞`) has zero proximity.
pub fn proximity(distance: f64, w: &StateWeights) -> Result<f64, MetaStateError> {
    if distance < 0.0 || distance.is_nan() {
        return Err(MetaStateError::NegativeDistance(distance));
    }
    Ok((-distance / w.prox_scale).exp())
}

pub fn sufficiency(
    evidence: f64,
    stability: f64,
    distance: f64,
    w: &StateWeights,
) -> Result<f64, MetaStateError> {
    let prox = proximity(distance, w)?;
    Ok(w.acc_e * evidence + w.acc_stab * stability + w.acc_prox * prox)
}

/// All three states for one step of telemetry.
pub fn evaluate(
    sample: &SignalSample,
    summary: &SignalSummary,
    sunk: SunkCost,
    w: &StateWeights,
) -> Result<MetaStateVector, MetaStateError> {
    Ok(MetaStateVector {
        potentiality: potentiality(summary.velocity, sample.evidence, summary.stability, w),
        persistence: persistence_gate(summary.info_gain, sunk, summary.velocity, w)?,
        sufficiency: sufficiency(sample.evidence, summary.stability, sample.distance, w)?,
    })
}
