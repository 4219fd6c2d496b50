//! Adaptive frequency controller and the entrainment input path.
//!
//! The controller compares event rates of a reference signal `u_r` and a
//! monitored neuron voltage `u_v`:
//!
//! ```text
//! u      = F(u_r) - F(u_v)        F = train of unit deltas at upward crossings
//! de/dt  = (u - e) / τ_c
//! dI/dt  = g_c · e
//! ```
//!
//! Each delta is integrated exactly: a reference event makes `e` jump by
//! `+1/τ_c`, a voltage event by `-1/τ_c`, and between events `e` decays by
//! `exp(-dt/τ_c)` per step.

use serde::{Deserialize, Serialize};

use crate::network::PulseWave;
use crate::synapse::sigmoid;

/// Strength, threshold and steepness of the sigmoid that turns the
/// reference waveform into a current.
pub const ENTRAINMENT_GAIN: f64 = 2.0;
pub const ENTRAINMENT_THRESHOLD: f64 = -45.0;
pub const ENTRAINMENT_ALPHA: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerParams {
    /// Error filter time constant (ms).
    pub tau_c: f64,
    /// Integrator gain (1/ms).
    pub g_c: f64,
    /// Upward-crossing threshold for both monitored signals (mV).
    pub threshold: f64,
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self {
            tau_c: 250.0,
            g_c: 2.0 / 250.0,
            threshold: -40.0,
        }
    }
}

impl ControllerParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.tau_c > 0.0) {
            return Err(format!("controller tau_c must be > 0 (got {})", self.tau_c));
        }
        if !(self.g_c > 0.0) {
            return Err(format!("controller g_c must be > 0 (got {})", self.g_c));
        }
        Ok(())
    }
}

/// Which signals a controller compares.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControllerAttachment {
    #[serde(default)]
    pub params: ControllerParams,
    /// Neuron whose voltage is `u_v`.
    pub monitor: usize,
    /// Reference waveform `u_r`.
    pub reference: PulseWave,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ControllerState {
    /// Filtered event-rate error (1/ms).
    pub e: f64,
    /// Accumulated bias current.
    pub i_apply: f64,
    pub prev_reference: f64,
    pub prev_voltage: f64,
}

impl ControllerState {
    /// Zero error and current, primed with the first samples of both signals.
    pub fn new(reference: f64, voltage: f64) -> Self {
        Self {
            e: 0.0,
            i_apply: 0.0,
            prev_reference: reference,
            prev_voltage: voltage,
        }
    }
}

#[inline]
fn crossed(prev: f64, cur: f64, threshold: f64) -> bool {
    prev < threshold && cur >= threshold
}

pub fn controller_step(
    state: ControllerState,
    params: &ControllerParams,
    reference: f64,
    voltage: f64,
    dt: f64,
) -> ControllerState {
    let mut impulses = 0.0;
    if crossed(state.prev_reference, reference, params.threshold) {
        impulses += 1.0;
    }
    if crossed(state.prev_voltage, voltage, params.threshold) {
        impulses -= 1.0;
    }
    let mut e = state.e;
    if e != 0.0 {
        e *= (-dt / params.tau_c).exp();
    }
    e += impulses / params.tau_c;
    ControllerState {
        e,
        i_apply: state.i_apply + params.g_c * e * dt,
        prev_reference: reference,
        prev_voltage: voltage,
    }
}

/// Current injected into the entrained neuron for reference sample `u_r`.
pub fn entrainment_input(reference: f64) -> f64 {
    sigmoid(
        ENTRAINMENT_GAIN,
        ENTRAINMENT_ALPHA,
        reference - ENTRAINMENT_THRESHOLD,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quiet_and_zero_is_a_fixed_point() {
        let p = ControllerParams::default();
        let s = ControllerState::new(-65.0, -70.0);
        let next = controller_step(s, &p, -65.0, -70.0, 0.01);
        assert_eq!(next, s);
    }

    #[test]
    fn simultaneous_events_cancel() {
        let p = ControllerParams::default();
        let s = ControllerState {
            e: 0.0,
            ..ControllerState::new(-65.0, -70.0)
        };
        let next = controller_step(s, &p, 0.0, 20.0, 0.01);
        assert_eq!(next.e, 0.0);
        assert_eq!(next.i_apply, 0.0);
    }

    #[test]
    fn single_reference_event_jumps_by_inverse_tau() {
        let p = ControllerParams::default();
        let s = ControllerState::new(-65.0, -70.0);
        let next = controller_step(s, &p, 0.0, -70.0, 0.01);
        assert_eq!(next.e, 1.0 / 250.0);
        assert_eq!(next.i_apply, p.g_c * next.e * 0.01);
        // staying above threshold is not a new event
        let again = controller_step(next, &p, 0.0, -70.0, 0.01);
        assert!(again.e < next.e);
    }

    #[test]
    fn decay_is_exact() {
        let p = ControllerParams::default();
        let dt = 0.01;
        let mut s = ControllerState {
            e: 0.3,
            ..ControllerState::new(-65.0, -70.0)
        };
        for _ in 0..10_000 {
            s = controller_step(s, &p, -65.0, -70.0, dt);
        }
        let exact = 0.3 * (-10_000.0 * dt / p.tau_c).exp();
        assert!(((s.e - exact) / exact).abs() < 1e-12, "{} vs {exact}", s.e);
    }

    #[test]
    fn entrainment_sigmoid_values() {
        assert!(entrainment_input(-200.0) < 1e-60);
        assert_eq!(entrainment_input(-45.0), 1.0);
        // 2 / (1 + e^-67.5); e^-67.5 ≈ 4.4e-30 is below f64 resolution around 1
        assert_eq!(entrainment_input(0.0), 2.0);
    }

    #[test]
    fn rejects_bad_params() {
        let p = ControllerParams {
            tau_c: 0.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = ControllerParams {
            g_c: -1.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    proptest! {
        // k reference and k voltage events, in any order, leave no net
        // impulse once decay is switched off.
        #[test]
        fn balanced_events_cancel(order in proptest::collection::vec(any::<bool>(), 1..40)) {
            let p = ControllerParams { tau_c: 1e300, ..Default::default() };
            let mut s = ControllerState::new(-65.0, -70.0);
            for &reference_first in &order {
                let (a, b) = if reference_first { ((0.0, -70.0), (-65.0, 20.0)) } else { ((-65.0, 20.0), (0.0, -70.0)) };
                s = controller_step(s, &p, a.0, a.1, 0.01);
                s = controller_step(s, &p, -65.0, -70.0, 0.01);
                s = controller_step(s, &p, b.0, b.1, 0.01);
                s = controller_step(s, &p, -65.0, -70.0, 0.01);
            }
            prop_assert!(s.e.abs() < 1e-290);
        }
    }
}
