//! Conductance-based rebound neuron models.
//!
//! Two models are provided:
//!
//! * the Hodgkin–Huxley squid axon model (voltages in mV, time in ms,
//!   currents in µA/cm²),
//! * the Ribar–Sepulchre rebound neuron, a three-variable model with fast
//!   and slow voltage filters expressed in dimensionless units.
//!
//! ```text
//! C dV/dt = -g_Na m³h (V - E_Na) - g_K n⁴ (V - E_K) - g_L (V - E_L) + I
//! dx/dt   = (x_∞(V) - x) / τ_x(V),   x ∈ {m, h, n}
//! ```
//!
//! Everything here is a pure function of its arguments.

use serde::{Deserialize, Serialize};

/// Below this magnitude of `(V - V_sing)/10` the removable singularity of
/// `α_m`/`α_n` is evaluated through its series expansion.
const SINGULARITY_EPS: f64 = 1e-7;

/// Membrane and channel constants of the Hodgkin–Huxley model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HHParams {
    /// Membrane capacitance (µF/cm²).
    pub c: f64,
    /// Maximal sodium conductance (mS/cm²).
    pub g_na: f64,
    /// Maximal potassium conductance (mS/cm²).
    pub g_k: f64,
    /// Leak conductance (mS/cm²).
    pub g_l: f64,
    /// Sodium reversal potential (mV).
    pub e_na: f64,
    /// Potassium reversal potential (mV).
    pub e_k: f64,
    /// Leak reversal potential (mV).
    pub e_l: f64,
}

impl Default for HHParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            g_na: 120.0,
            g_k: 36.0,
            g_l: 0.3,
            e_na: 50.0,
            e_k: -77.0,
            e_l: -54.387,
        }
    }
}

impl HHParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.c > 0.0) {
            return Err(format!("capacitance must be > 0 (got {})", self.c));
        }
        for (name, g) in [("g_na", self.g_na), ("g_k", self.g_k), ("g_l", self.g_l)] {
            if !(g > 0.0) {
                return Err(format!("{name} must be > 0 (got {g})"));
            }
        }
        for (name, e) in [("e_na", self.e_na), ("e_k", self.e_k), ("e_l", self.e_l)] {
            if !e.is_finite() {
                return Err(format!("{name} must be finite"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HHState {
    pub v: f64,
    pub m: f64,
    pub h: f64,
    pub n: f64,
}

impl HHState {
    pub const LEN: usize = 4;

    /// State with every gate at its steady-state value for voltage `v`.
    pub fn at_steady_state(v: f64) -> Self {
        let ss = hh_steady_state(v);
        Self {
            v,
            m: ss.m.0,
            h: ss.h.0,
            n: ss.n.0,
        }
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Self {
            v: s[0],
            m: s[1],
            h: s[2],
            n: s[3],
        }
    }

    pub fn write_to(&self, out: &mut [f64]) {
        out[0] = self.v;
        out[1] = self.m;
        out[2] = self.h;
        out[3] = self.n;
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RSState {
    pub v: f64,
    /// Fast filtered voltage (time constant 30).
    pub v1: f64,
    /// Slow filtered voltage (time constant 60).
    pub v2: f64,
}

impl RSState {
    pub const LEN: usize = 3;

    pub fn from_slice(s: &[f64]) -> Self {
        Self {
            v: s[0],
            v1: s[1],
            v2: s[2],
        }
    }

    pub fn write_to(&self, out: &mut [f64]) {
        out[0] = self.v;
        out[1] = self.v1;
        out[2] = self.v2;
    }
}

/// Opening (`alpha_*`) and closing (`beta_*`) rates of the three gates, in 1/ms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HHRates {
    pub alpha_m: f64,
    pub beta_m: f64,
    pub alpha_h: f64,
    pub beta_h: f64,
    pub alpha_n: f64,
    pub beta_n: f64,
}

/// `scale * x / (1 - exp(-x/10))`, continuous through `x = 0` where it equals `10 * scale`.
fn linoid(scale: f64, x: f64) -> f64 {
    let z = x / 10.0;
    if z.abs() < SINGULARITY_EPS {
        // x / (1 - e^{-x/10}) = 10 (1 + z/2 + z²/12 + ...)
        scale * 10.0 * (1.0 + z / 2.0)
    } else {
        scale * x / -(-z).exp_m1()
    }
}

pub fn hh_rate_constants(v: f64) -> HHRates {
    HHRates {
        alpha_m: linoid(0.1, v + 40.0),
        beta_m: 4.0 * (-(v + 65.0) / 18.0).exp(),
        alpha_h: 0.07 * (-(v + 65.0) / 20.0).exp(),
        beta_h: 1.0 / (1.0 + (-(v + 35.0) / 10.0).exp()),
        alpha_n: linoid(0.01, v + 55.0),
        beta_n: 0.125 * (-(v + 65.0) / 80.0).exp(),
    }
}

/// `(x_∞, τ_x)` for each gate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HHSteadyState {
    pub m: (f64, f64),
    pub h: (f64, f64),
    pub n: (f64, f64),
}

pub fn hh_steady_state(v: f64) -> HHSteadyState {
    let r = hh_rate_constants(v);
    let pair = |a: f64, b: f64| (a / (a + b), 1.0 / (a + b));
    HHSteadyState {
        m: pair(r.alpha_m, r.beta_m),
        h: pair(r.alpha_h, r.beta_h),
        n: pair(r.alpha_n, r.beta_n),
    }
}

/// Ionic current flowing out of the membrane (µA/cm²).
pub fn hh_ionic_current(state: &HHState, p: &HHParams) -> f64 {
    let HHState { v, m, h, n } = *state;
    let i_na = p.g_na * m * m * m * h * (v - p.e_na);
    let i_k = p.g_k * n * n * n * n * (v - p.e_k);
    let i_l = p.g_l * (v - p.e_l);
    i_na + i_k + i_l
}

pub fn hh_derivatives(state: &HHState, p: &HHParams, i_total: f64) -> HHState {
    let r = hh_rate_constants(state.v);
    // α(1-x) - βx is (x_∞ - x)/τ_x without the division round trip.
    HHState {
        v: (i_total - hh_ionic_current(state, p)) / p.c,
        m: r.alpha_m * (1.0 - state.m) - r.beta_m * state.m,
        h: r.alpha_h * (1.0 - state.h) - r.beta_h * state.h,
        n: r.alpha_n * (1.0 - state.n) - r.beta_n * state.n,
    }
}

pub fn rs_derivatives(state: &RSState, u: f64) -> RSState {
    let RSState { v, v1, v2 } = *state;
    RSState {
        v: -0.5 * v + 2.0 * (v - 1.0).tanh() - 2.0 * (v1 - 1.0).tanh() - (v1 + 2.0).tanh() + u,
        v1: (v - v1) / 30.0,
        v2: (v - v2) / 60.0,
    }
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
pub(crate) fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    let mut flo = f(lo);
    if flo == 0.0 {
        return Some(lo);
    }
    if flo.signum() == f(hi).signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || mid == lo || mid == hi {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Resting potential of an unstimulated HH neuron: the zero of the ionic
/// current with all gates at steady state.
pub fn hh_resting_potential(p: &HHParams) -> f64 {
    let f = |v: f64| hh_ionic_current(&HHState::at_steady_state(v), p);
    bisect(f, -75.0, -58.0).expect("HH parameters without a resting state in [-75, -58] mV")
}

/// Resting voltage of the unstimulated RS neuron (`V = V1 = V2`).
pub fn rs_resting_potential() -> f64 {
    // With V = V1 the two tanh(· - 1) terms cancel.
    bisect(|v| -0.5 * v - (v + 2.0).tanh(), -3.0, 0.0).expect("RS resting state bracket")
}

/// Neuron model together with its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NeuronModel {
    Hh {
        #[serde(flatten)]
        params: HHParams,
    },
    Rs,
}

impl NeuronModel {
    pub fn hh() -> Self {
        NeuronModel::Hh {
            params: HHParams::default(),
        }
    }

    pub fn state_len(&self) -> usize {
        match self {
            NeuronModel::Hh { .. } => HHState::LEN,
            NeuronModel::Rs => RSState::LEN,
        }
    }

    /// Names of the state components, voltage first.
    pub fn state_names(&self) -> &'static [&'static str] {
        match self {
            NeuronModel::Hh { .. } => &["v", "m", "h", "n"],
            NeuronModel::Rs => &["v", "v1", "v2"],
        }
    }

    pub fn resting_state(&self) -> Vec<f64> {
        self.state_at_voltage(self.resting_potential())
    }

    pub fn resting_potential(&self) -> f64 {
        match self {
            NeuronModel::Hh { params } => hh_resting_potential(params),
            NeuronModel::Rs => rs_resting_potential(),
        }
    }

    /// Internal variables relaxed to their equilibrium for a clamped voltage.
    pub fn state_at_voltage(&self, v: f64) -> Vec<f64> {
        match self {
            NeuronModel::Hh { .. } => {
                let s = HHState::at_steady_state(v);
                vec![s.v, s.m, s.h, s.n]
            }
            NeuronModel::Rs => vec![v, v, v],
        }
    }

    /// Writes `d state/dt` for total input `input` into `out`.
    #[inline]
    pub fn derivatives(&self, state: &[f64], input: f64, out: &mut [f64]) {
        match self {
            NeuronModel::Hh { params } => {
                hh_derivatives(&HHState::from_slice(state), params, input).write_to(out)
            }
            NeuronModel::Rs => rs_derivatives(&RSState::from_slice(state), input).write_to(out),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            NeuronModel::Hh { params } => params.validate(),
            NeuronModel::Rs => Ok(()),
        }
    }
}
