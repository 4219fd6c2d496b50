//! Fixed-step classical Runge–Kutta integration of a compiled [`Network`].
//!
//! Noise draws and the controller current are frozen for the duration of a
//! step; every other input is evaluated at the stage times. This treats noise
//! as a piecewise-constant current and is not a strong-order SDE scheme.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::controller::{controller_step, ControllerAttachment, ControllerState};
use crate::error::{Error, Result};
use crate::network::{FrozenInputs, Network};
use crate::neuron::NeuronModel;

/// Tolerance on the [0, 1] gating bound before a run is flagged.
pub const GATE_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Step size (ms for HH networks, model time units for RS).
    pub dt: f64,
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    /// Steps between recorded samples.
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    /// Record gating/filter variables and applied currents as well as voltages.
    #[serde(default)]
    pub record_all: bool,
}

fn default_stride() -> usize {
    1
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            duration: 100.0,
            seed: 0,
            record_stride: 1,
            record_all: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("dt must be > 0 (got {})", self.dt));
        }
        if !(self.duration.is_finite()) || self.duration < self.dt * (1.0 - 1e-9) {
            return bad(format!("duration must be >= dt (got {})", self.duration));
        }
        if self.record_stride == 0 {
            return bad("record_stride must be >= 1".into());
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        ((self.duration / self.dt).round() as usize).max(1)
    }
}

/// First time an HH gate left `[-GATE_TOLERANCE, 1 + GATE_TOLERANCE]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateViolation {
    pub time: f64,
    pub neuron: usize,
    pub value: f64,
}

/// Column-oriented record of one run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub times: Vec<f64>,
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    pub gate_violation: Option<GateViolation>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }

    /// Membrane voltage of neuron `index` (0-based).
    pub fn voltage(&self, index: usize) -> Option<&[f64]> {
        self.channel(&voltage_channel(index))
    }

    fn push_row(&mut self, t: f64, row: impl IntoIterator<Item = f64>) {
        self.times.push(t);
        for (col, x) in self.columns.iter_mut().zip(row) {
            col.push(x);
        }
    }
}

/// Channel names are 1-based to match neuron ids in reports.
pub fn voltage_channel(index: usize) -> String {
    format!("v{}", index + 1)
}

/// Reproducible standard-normal draws keyed by `(seed, stream, step)`.
#[derive(Clone, Debug)]
pub struct NoiseSource {
    base: ChaCha8Rng,
}

/// Stream slots reserved per neuron, one per noise signal.
const STREAMS_PER_NEURON: u64 = 16;
/// ChaCha words reserved per draw; the ziggurat sampler almost always uses two.
const WORDS_PER_DRAW: u128 = 16;

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn standard_normal(&self, neuron: usize, signal: usize, step: u64) -> f64 {
        let mut rng = self.base.clone();
        rng.set_stream(neuron as u64 * STREAMS_PER_NEURON + signal as u64);
        rng.set_word_pos(step as u128 * WORDS_PER_DRAW);
        StandardNormal.sample(&mut rng)
    }
}

/// Scratch buffers for [`step_rk4`].
#[derive(Clone, Debug)]
pub struct Rk4Workspace {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Workspace {
    pub fn new(len: usize) -> Self {
        Self {
            k1: vec![0.0; len],
            k2: vec![0.0; len],
            k3: vec![0.0; len],
            k4: vec![0.0; len],
            tmp: vec![0.0; len],
        }
    }
}

/// Generic classical RK4 step of `dy/dt = f(t, y)` into `out`.
pub fn rk4_step_with<F>(f: F, y: &[f64], t: f64, dt: f64, ws: &mut Rk4Workspace, out: &mut [f64])
where
    F: Fn(&[f64], f64, &mut [f64]),
{
    let half = 0.5 * dt;
    f(y, t, &mut ws.k1);
    for i in 0..y.len() {
        ws.tmp[i] = y[i] + half * ws.k1[i];
    }
    f(&ws.tmp, t + half, &mut ws.k2);
    for i in 0..y.len() {
        ws.tmp[i] = y[i] + half * ws.k2[i];
    }
    f(&ws.tmp, t + half, &mut ws.k3);
    for i in 0..y.len() {
        ws.tmp[i] = y[i] + dt * ws.k3[i];
    }
    f(&ws.tmp, t + dt, &mut ws.k4);
    let sixth = dt / 6.0;
    for i in 0..y.len() {
        out[i] = y[i] + sixth * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
    }
}

/// Neuron owning flat state component `index`; a synapse filter maps to its
/// presynaptic neuron.
fn owner_of(net: &Network, index: usize) -> usize {
    let count = net.neuron_count();
    if index >= net.filter_index(0) {
        return net.spec().synapses[index - net.filter_index(0)].pre;
    }
    (0..count)
        .rev()
        .find(|&i| net.neuron_offset(i) <= index)
        .unwrap_or(0)
}

/// One RK4 step of the coupled network with `frozen` held across stages.
pub fn step_rk4(
    net: &Network,
    state: &[f64],
    t: f64,
    dt: f64,
    frozen: &FrozenInputs,
    ws: &mut Rk4Workspace,
    out: &mut [f64],
) -> Result<()> {
    rk4_step_with(
        |y, time, dy| net.derivatives(y, time, frozen, dy),
        state,
        t,
        dt,
        ws,
        out,
    );
    if let Some(bad) = out.iter().position(|x| !x.is_finite()) {
        return Err(Error::Divergence {
            time: t + dt,
            neuron: owner_of(net, bad),
        });
    }
    Ok(())
}

fn check_gates(net: &Network, state: &[f64], t: f64) -> Option<GateViolation> {
    for i in 0..net.neuron_count() {
        if let NeuronModel::Hh { .. } = net.neuron_model(i) {
            let o = net.neuron_offset(i);
            for &g in &state[o + 1..o + 4] {
                if !(-GATE_TOLERANCE..=1.0 + GATE_TOLERANCE).contains(&g) {
                    return Some(GateViolation {
                        time: t,
                        neuron: i,
                        value: g,
                    });
                }
            }
        }
    }
    None
}

fn channel_names(net: &Network, config: &SimConfig, controller: bool) -> Vec<String> {
    let n = net.neuron_count();
    let mut names: Vec<String> = (0..n).map(voltage_channel).collect();
    if config.record_all {
        for i in 0..n {
            for var in &net.neuron_model(i).state_names()[1..] {
                names.push(format!("{var}{}", i + 1));
            }
        }
        for k in 0..net.spec().synapses.len() {
            names.push(format!("vf{}", k + 1));
        }
        for i in 0..n {
            names.push(format!("iext{}", i + 1));
        }
    }
    if controller {
        names.extend(["u_r", "ctrl_e", "ctrl_i_apply"].map(String::from));
    }
    names
}

/// Runs `net` for `config.duration`, optionally closing the loop through an
/// adaptive controller that is stepped once after every state update.
pub fn simulate(
    net: &Network,
    config: &SimConfig,
    controller: Option<&ControllerAttachment>,
) -> Result<Trace> {
    config.validate()?;
    if let Some(c) = controller {
        c.params.validate().map_err(Error::InvalidConfig)?;
        if c.monitor >= net.neuron_count() {
            return Err(Error::InvalidConfig(format!(
                "controller monitors missing neuron {}",
                c.monitor
            )));
        }
    }
    let n = net.neuron_count();
    let steps = config.steps();
    let dt = config.dt;
    let noise = NoiseSource::new(config.seed);
    let noisy: Vec<Vec<f64>> = (0..n)
        .map(|i| net.noise_variances(i).iter().map(|v| v.sqrt()).collect())
        .collect();

    let mut trace = Trace {
        names: channel_names(net, config, controller.is_some()),
        ..Default::default()
    };
    trace.columns = vec![Vec::with_capacity(steps / config.record_stride + 1); trace.names.len()];

    let mut state = net.initial_state();
    let mut next = vec![0.0; state.len()];
    let mut ws = Rk4Workspace::new(state.len());
    let mut frozen = FrozenInputs::zero(n);
    let mut ctrl = controller
        .map(|c| ControllerState::new(c.reference.value(0.0), net.voltage(&state, c.monitor)));
    trace.gate_violation = check_gates(net, &state, 0.0);

    let mut row = Vec::with_capacity(trace.names.len());
    for k in 0..=steps {
        let t = k as f64 * dt;
        for (i, sigmas) in noisy.iter().enumerate() {
            frozen.noise[i] = sigmas
                .iter()
                .enumerate()
                .map(|(j, s)| s * noise.standard_normal(i, j, k as u64))
                .sum();
        }
        frozen.controller = ctrl.map_or(0.0, |c| c.i_apply);

        if k % config.record_stride == 0 {
            row.clear();
            row.extend((0..n).map(|i| net.voltage(&state, i)));
            if config.record_all {
                for i in 0..n {
                    let o = net.neuron_offset(i);
                    row.extend_from_slice(&state[o + 1..o + net.neuron_model(i).state_len()]);
                }
                row.extend_from_slice(&state[net.filter_index(0)..]);
                row.extend((0..n).map(|i| net.external_input(i, t, &frozen)));
            }
            if let (Some(c), Some(cs)) = (controller, ctrl) {
                row.extend([c.reference.value(t), cs.e, cs.i_apply]);
            }
            trace.push_row(t, row.iter().copied());
        }
        if k == steps {
            break;
        }

        step_rk4(net, &state, t, dt, &frozen, &mut ws, &mut next)?;
        std::mem::swap(&mut state, &mut next);
        let t_next = (k + 1) as f64 * dt;
        if trace.gate_violation.is_none() {
            trace.gate_violation = check_gates(net, &state, t_next);
        }
        if let (Some(c), Some(cs)) = (controller, ctrl.as_mut()) {
            *cs = controller_step(
                *cs,
                &c.params,
                c.reference.value(t_next),
                net.voltage(&state, c.monitor),
                dt,
            );
        }
    }
    Ok(trace)
}
