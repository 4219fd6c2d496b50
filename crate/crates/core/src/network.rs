//! Network description, topology builders, and the coupled right-hand side.
//!
//! A [`NetworkSpec`] is purely declarative. [`Network`] is its compiled
//! form: fixed state-vector layout, per-neuron incoming synapse lists and
//! grouped input signals. The flat state vector holds every neuron state in
//! spec order followed by one filter voltage per synapse in spec order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neuron::NeuronModel;
use crate::synapse::{sigmoid, synapse_current, SynapseParams, SynapseState};

/// Per-neuron voltage offset used to break the symmetry of identical cells.
pub const INITIAL_STAGGER: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeuronSpec {
    pub model: NeuronModel,
    /// Initial state, voltage first, in the model's component order.
    pub initial: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynapseSpec {
    pub pre: usize,
    pub post: usize,
    #[serde(flatten)]
    pub params: SynapseParams,
}

/// Rectangular pulse waveform: `low` everywhere except on
/// `[onset + k·period, onset + k·period + width)` for `k ≥ 0`, where it is `high`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseWave {
    pub onset: f64,
    pub period: f64,
    pub width: f64,
    pub low: f64,
    pub high: f64,
}

impl PulseWave {
    pub fn value(&self, t: f64) -> f64 {
        if t < self.onset {
            return self.low;
        }
        let phase = (t - self.onset) % self.period;
        if phase < self.width {
            self.high
        } else {
            self.low
        }
    }

    fn validate(&self) -> Result<(), String> {
        if !(self.period > 0.0) || !(self.width > 0.0) || self.width >= self.period {
            return Err(format!(
                "pulse width must be in (0, period) (width {}, period {})",
                self.width, self.period
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InputSignal {
    ConstantBias {
        amplitude: f64,
    },
    /// Current pulses of `amplitude` added on top of zero.
    PulseTrain {
        onset: f64,
        width: f64,
        period: f64,
        amplitude: f64,
    },
    /// Zero-mean Gaussian current drawn once per integration step.
    GaussianNoise {
        variance: f64,
    },
    /// A rhythmic voltage-like waveform passed through an unfiltered sigmoid
    /// synapse `g / (1 + exp(-α (u - V_th)))`.
    RhythmicPulses {
        #[serde(flatten)]
        wave: PulseWave,
        g_syn: f64,
        v_th: f64,
        alpha: f64,
    },
    /// Receives the adaptive controller's output current.
    ControllerDriven,
}

impl InputSignal {
    fn validate(&self) -> Result<(), String> {
        match *self {
            InputSignal::PulseTrain {
                onset,
                width,
                period,
                amplitude,
            } => PulseWave {
                onset,
                period,
                width,
                low: 0.0,
                high: amplitude,
            }
            .validate(),
            InputSignal::GaussianNoise { variance } if !(variance >= 0.0) => {
                Err(format!("noise variance must be >= 0 (got {variance})"))
            }
            InputSignal::RhythmicPulses { wave, alpha, .. } => {
                wave.validate()?;
                if !(alpha > 0.0) {
                    return Err("rhythmic input alpha must be > 0".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Deterministic, time-dependent part of the signal.
    fn deterministic(&self, t: f64) -> f64 {
        match *self {
            InputSignal::ConstantBias { amplitude } => amplitude,
            InputSignal::PulseTrain {
                onset,
                width,
                period,
                amplitude,
            } => PulseWave {
                onset,
                period,
                width,
                low: 0.0,
                high: amplitude,
            }
            .value(t),
            InputSignal::RhythmicPulses {
                wave,
                g_syn,
                v_th,
                alpha,
            } => sigmoid(g_syn, alpha, wave.value(t) - v_th),
            InputSignal::GaussianNoise { .. } | InputSignal::ControllerDriven => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputAssignment {
    pub neuron: usize,
    #[serde(flatten)]
    pub signal: InputSignal,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub neurons: Vec<NeuronSpec>,
    #[serde(default)]
    pub synapses: Vec<SynapseSpec>,
    #[serde(default)]
    pub inputs: Vec<InputAssignment>,
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.neurons.is_empty() {
            return bad("network has no neurons".into());
        }
        for (i, n) in self.neurons.iter().enumerate() {
            n.model
                .validate()
                .map_err(|e| Error::InvalidSpec(format!("neuron {i}: {e}")))?;
            if n.initial.len() != n.model.state_len() {
                return bad(format!(
                    "neuron {i}: initial state has {} components, model needs {}",
                    n.initial.len(),
                    n.model.state_len()
                ));
            }
            if n.initial.iter().any(|x| !x.is_finite()) {
                return bad(format!("neuron {i}: initial state is not finite"));
            }
        }
        let count = self.neurons.len();
        for (k, s) in self.synapses.iter().enumerate() {
            if s.pre >= count || s.post >= count {
                return bad(format!(
                    "synapse {k}: index out of range ({} -> {})",
                    s.pre, s.post
                ));
            }
            if s.pre == s.post {
                return bad(format!("synapse {k}: self-synapse on neuron {}", s.pre));
            }
            s.params
                .validate()
                .map_err(|e| Error::InvalidSpec(format!("synapse {k}: {e}")))?;
        }
        for a in &self.inputs {
            if a.neuron >= count {
                return bad(format!("input targets missing neuron {}", a.neuron));
            }
            a.signal
                .validate()
                .map_err(|e| Error::InvalidSpec(format!("input on neuron {}: {e}", a.neuron)))?;
        }
        Ok(())
    }

    pub fn neuron_count(&self) -> usize {
        self.neurons.len()
    }

    pub fn inputs_for(&self, neuron: usize) -> impl Iterator<Item = &InputSignal> {
        self.inputs
            .iter()
            .filter(move |a| a.neuron == neuron)
            .map(|a| &a.signal)
    }

    pub fn add_input(&mut self, neuron: usize, signal: InputSignal) {
        self.inputs.push(InputAssignment { neuron, signal });
    }

    /// Adds `signal` to every neuron.
    pub fn add_input_to_all(&mut self, signal: InputSignal) {
        for i in 0..self.neurons.len() {
            self.add_input(i, signal);
        }
    }

    pub fn inhibitory_synapses(&self) -> impl Iterator<Item = &SynapseSpec> {
        self.synapses.iter().filter(|s| s.params.is_inhibitory())
    }

    pub fn excitatory_synapses(&self) -> impl Iterator<Item = &SynapseSpec> {
        self.synapses.iter().filter(|s| !s.params.is_inhibitory())
    }

    pub fn compile(&self) -> Result<Network> {
        self.validate()?;
        Ok(Network::new(self.clone()))
    }
}

/// `count` identical neurons at the model's resting state, neuron `i`
/// shifted by `-i · INITIAL_STAGGER` in voltage with internal variables
/// equilibrated to the shifted voltage.
pub fn resting_neurons(model: NeuronModel, count: usize) -> Vec<NeuronSpec> {
    let rest = model.resting_potential();
    (0..count)
        .map(|i| NeuronSpec {
            model,
            initial: model.state_at_voltage(rest - INITIAL_STAGGER * i as f64),
        })
        .collect()
}

pub fn build_hco(model: NeuronModel, inhibition: SynapseParams) -> Result<NetworkSpec> {
    if !inhibition.is_inhibitory() {
        return Err(Error::InvalidSpec(format!(
            "half-center inhibition needs g_syn < 0 (got {})",
            inhibition.g_syn
        )));
    }
    let spec = NetworkSpec {
        neurons: resting_neurons(model, 2),
        synapses: vec![
            SynapseSpec {
                pre: 0,
                post: 1,
                params: inhibition,
            },
            SynapseSpec {
                pre: 1,
                post: 0,
                params: inhibition,
            },
        ],
        inputs: Vec::new(),
    };
    spec.validate()?;
    Ok(spec)
}

/// All-to-all inhibition among `count` neurons plus excitation `i -> i+1 (mod count)`.
pub fn build_ring(
    count: usize,
    model: NeuronModel,
    inhibition: SynapseParams,
    excitation: SynapseParams,
) -> Result<NetworkSpec> {
    if count < 2 {
        return Err(Error::InvalidSpec(format!(
            "ring needs at least 2 neurons (got {count})"
        )));
    }
    if !inhibition.is_inhibitory() {
        return Err(Error::InvalidSpec(format!(
            "ring inhibition needs g_syn < 0 (got {})",
            inhibition.g_syn
        )));
    }
    if excitation.g_syn < 0.0 {
        return Err(Error::InvalidSpec(format!(
            "ring excitation needs g_syn >= 0 (got {})",
            excitation.g_syn
        )));
    }
    let mut synapses = Vec::with_capacity(count * count);
    for pre in 0..count {
        for post in (0..count).filter(|&p| p != pre) {
            synapses.push(SynapseSpec {
                pre,
                post,
                params: inhibition,
            });
        }
    }
    for pre in 0..count {
        synapses.push(SynapseSpec {
            pre,
            post: (pre + 1) % count,
            params: excitation,
        });
    }
    let spec = NetworkSpec {
        neurons: resting_neurons(model, count),
        synapses,
        inputs: Vec::new(),
    };
    spec.validate()?;
    Ok(spec)
}

/// Inputs that stay constant across the stages of one integration step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FrozenInputs {
    /// Summed noise draw per neuron.
    pub noise: Vec<f64>,
    /// Adaptive controller current, delivered to `ControllerDriven` neurons.
    pub controller: f64,
}

impl FrozenInputs {
    pub fn zero(neurons: usize) -> Self {
        Self {
            noise: vec![0.0; neurons],
            controller: 0.0,
        }
    }
}

#[derive(Clone, Debug)]
struct IncomingSynapse {
    filter_index: usize,
    params: SynapseParams,
}

#[derive(Clone, Debug)]
struct NeuronInputs {
    deterministic: Vec<InputSignal>,
    noise_variances: Vec<f64>,
    controller_driven: bool,
}

/// Compiled network with a fixed state layout.
#[derive(Clone, Debug)]
pub struct Network {
    spec: NetworkSpec,
    offsets: Vec<usize>,
    synapse_base: usize,
    incoming: Vec<Vec<IncomingSynapse>>,
    inputs: Vec<NeuronInputs>,
}

impl Network {
    fn new(spec: NetworkSpec) -> Self {
        let mut offsets = Vec::with_capacity(spec.neurons.len());
        let mut cursor = 0;
        for n in &spec.neurons {
            offsets.push(cursor);
            cursor += n.model.state_len();
        }
        let synapse_base = cursor;
        let mut incoming = vec![Vec::new(); spec.neurons.len()];
        for (k, s) in spec.synapses.iter().enumerate() {
            incoming[s.post].push(IncomingSynapse {
                filter_index: synapse_base + k,
                params: s.params,
            });
        }
        let inputs = (0..spec.neurons.len())
            .map(|i| {
                let signals: Vec<InputSignal> = spec.inputs_for(i).copied().collect();
                NeuronInputs {
                    noise_variances: signals
                        .iter()
                        .filter_map(|s| match s {
                            InputSignal::GaussianNoise { variance } => Some(*variance),
                            _ => None,
                        })
                        .collect(),
                    controller_driven: signals
                        .iter()
                        .any(|s| matches!(s, InputSignal::ControllerDriven)),
                    deterministic: signals
                        .into_iter()
                        .filter(|s| {
                            !matches!(
                                s,
                                InputSignal::GaussianNoise { .. } | InputSignal::ControllerDriven
                            )
                        })
                        .collect(),
                }
            })
            .collect();
        Self {
            spec,
            offsets,
            synapse_base,
            incoming,
            inputs,
        }
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn neuron_count(&self) -> usize {
        self.spec.neurons.len()
    }

    pub fn state_len(&self) -> usize {
        self.synapse_base + self.spec.synapses.len()
    }

    pub fn neuron_offset(&self, neuron: usize) -> usize {
        self.offsets[neuron]
    }

    pub fn neuron_model(&self, neuron: usize) -> &NeuronModel {
        &self.spec.neurons[neuron].model
    }

    pub fn filter_index(&self, synapse: usize) -> usize {
        self.synapse_base + synapse
    }

    #[inline]
    pub fn voltage(&self, state: &[f64], neuron: usize) -> f64 {
        state[self.offsets[neuron]]
    }

    /// Noise variances of each `GaussianNoise` signal on `neuron`, in spec order.
    pub fn noise_variances(&self, neuron: usize) -> &[f64] {
        &self.inputs[neuron].noise_variances
    }

    pub fn has_noise(&self) -> bool {
        self.inputs.iter().any(|i| !i.noise_variances.is_empty())
    }

    /// Initial state; each synapse filter starts at its presynaptic voltage.
    pub fn initial_state(&self) -> Vec<f64> {
        let mut state = vec![0.0; self.state_len()];
        for (i, n) in self.spec.neurons.iter().enumerate() {
            let o = self.offsets[i];
            state[o..o + n.initial.len()].copy_from_slice(&n.initial);
        }
        for (k, s) in self.spec.synapses.iter().enumerate() {
            state[self.synapse_base + k] = state[self.offsets[s.pre]];
        }
        state
    }

    /// Non-synaptic current into `neuron` at time `t`.
    #[inline]
    pub fn external_input(&self, neuron: usize, t: f64, frozen: &FrozenInputs) -> f64 {
        let inp = &self.inputs[neuron];
        let mut total: f64 = inp.deterministic.iter().map(|s| s.deterministic(t)).sum();
        total += frozen.noise[neuron];
        if inp.controller_driven {
            total += frozen.controller;
        }
        total
    }

    #[inline]
    pub fn synaptic_input(&self, neuron: usize, state: &[f64]) -> f64 {
        self.incoming[neuron]
            .iter()
            .map(|s| {
                synapse_current(
                    SynapseState {
                        v_f: state[s.filter_index],
                    },
                    &s.params,
                )
            })
            .sum()
    }

    /// Total current (external plus synaptic) into every neuron.
    pub fn total_input(&self, state: &[f64], t: f64, frozen: &FrozenInputs) -> Vec<f64> {
        (0..self.neuron_count())
            .map(|i| self.external_input(i, t, frozen) + self.synaptic_input(i, state))
            .collect()
    }

    /// Writes `d state/dt` of the full coupled system into `out`.
    pub fn derivatives(&self, state: &[f64], t: f64, frozen: &FrozenInputs, out: &mut [f64]) {
        for (i, n) in self.spec.neurons.iter().enumerate() {
            let input = self.external_input(i, t, frozen) + self.synaptic_input(i, state);
            let o = self.offsets[i];
            let len = n.model.state_len();
            n.model
                .derivatives(&state[o..o + len], input, &mut out[o..o + len]);
        }
        for (k, s) in self.spec.synapses.iter().enumerate() {
            let idx = self.synapse_base + k;
            out[idx] = (state[self.offsets[s.pre]] - state[idx]) / s.params.tau;
        }
    }
}
