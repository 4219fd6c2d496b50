//! First-order filtered sigmoid synapse.
//!
//! The presynaptic voltage is low-pass filtered, `τ dV_f/dt = V_pre - V_f`,
//! and the current delivered to the postsynaptic cell is
//! `g_syn / (1 + exp(-α (V_f - V_th)))`. A negative `g_syn` is inhibitory.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynapseParams {
    /// Signed strength, in the current units of the postsynaptic model.
    pub g_syn: f64,
    /// Filter time constant.
    pub tau: f64,
    /// Sigmoid threshold.
    pub v_th: f64,
    /// Sigmoid steepness.
    pub alpha: f64,
}

impl SynapseParams {
    pub fn new(g_syn: f64, tau: f64, v_th: f64, alpha: f64) -> Self {
        Self {
            g_syn,
            tau,
            v_th,
            alpha,
        }
    }

    pub fn is_inhibitory(&self) -> bool {
        self.g_syn < 0.0
    }

    pub fn is_excitatory(&self) -> bool {
        self.g_syn > 0.0
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.tau > 0.0) {
            return Err(format!("synapse tau must be > 0 (got {})", self.tau));
        }
        if !(self.alpha > 0.0) {
            return Err(format!("synapse alpha must be > 0 (got {})", self.alpha));
        }
        if !self.g_syn.is_finite() || !self.v_th.is_finite() {
            return Err("synapse g_syn and v_th must be finite".into());
        }
        Ok(())
    }
}

/// Filtered presynaptic voltage.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SynapseState {
    pub v_f: f64,
}

#[inline]
pub fn synapse_filter_derivative(v_pre: f64, state: SynapseState, params: &SynapseParams) -> f64 {
    (v_pre - state.v_f) / params.tau
}

/// The sigmoid `g / (1 + exp(-α x))`.
#[inline]
pub fn sigmoid(g: f64, alpha: f64, x: f64) -> f64 {
    g / (1.0 + (-alpha * x).exp())
}

#[inline]
pub fn synapse_current(state: SynapseState, params: &SynapseParams) -> f64 {
    sigmoid(params.g_syn, params.alpha, state.v_f - params.v_th)
}
