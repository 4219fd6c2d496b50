//! Scenario documents, named presets, overrides, and run summaries.
//!
//! A scenario is a TOML document with five sections:
//!
//! ```toml
//! name = "fig2_hco"
//! [sim]        # SimConfig: dt, duration, seed, record_stride, record_all
//! [network]    # topology = "single" | "hco" | "ring" | "explicit"
//! [drive]      # bias, noise_variance, start_pulse, entrainment, inputs
//! [controller] # optional adaptive frequency controller
//! [analysis]   # event_threshold, burst_window, discard_events, phase_neuron
//! ```
//!
//! `rwta show-preset <name>` prints a complete document for every preset.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::controller::{
    ControllerAttachment, ControllerParams, ENTRAINMENT_ALPHA, ENTRAINMENT_GAIN,
    ENTRAINMENT_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::events::{
    detect_events, estimate_period, phase_difference, winner_sequence, EventTrain, PeriodEstimate,
    PhaseOffset, DEFAULT_BURST_WINDOW, HH_EVENT_THRESHOLD, RS_EVENT_THRESHOLD,
};
use crate::integrator::{simulate, voltage_channel, GateViolation, SimConfig, Trace};
use crate::network::{
    build_hco, build_ring, resting_neurons, InputAssignment, InputSignal, NetworkSpec, NeuronSpec,
    PulseWave, SynapseSpec,
};
use crate::neuron::NeuronModel;
use crate::synapse::SynapseParams;

/// Channel name of the reference waveform in traces and event files.
pub const REFERENCE_CHANNEL: &str = "u_r";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "topology", rename_all = "snake_case", deny_unknown_fields)]
pub enum Topology {
    Single {
        model: NeuronModel,
    },
    Hco {
        model: NeuronModel,
        inhibition: SynapseParams,
    },
    Ring {
        count: usize,
        model: NeuronModel,
        inhibition: SynapseParams,
        excitation: SynapseParams,
    },
    Explicit {
        neurons: Vec<NeuronSpec>,
        #[serde(default)]
        synapses: Vec<SynapseSpec>,
    },
}

impl Topology {
    fn build(&self) -> Result<NetworkSpec> {
        match self {
            Topology::Single { model } => Ok(NetworkSpec {
                neurons: resting_neurons(*model, 1),
                ..Default::default()
            }),
            Topology::Hco { model, inhibition } => build_hco(*model, *inhibition),
            Topology::Ring {
                count,
                model,
                inhibition,
                excitation,
            } => build_ring(*count, *model, *inhibition, *excitation),
            Topology::Explicit { neurons, synapses } => Ok(NetworkSpec {
                neurons: neurons.clone(),
                synapses: synapses.clone(),
                inputs: Vec::new(),
            }),
        }
    }
}

/// Brief current pulse that kicks one neuron out of the quiescent state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartPulse {
    pub neuron: usize,
    pub onset: f64,
    pub width: f64,
    pub amplitude: f64,
}

/// Rhythmic reference waveform fed to one neuron through the entrainment sigmoid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entrainment {
    pub neuron: usize,
    pub wave: PulseWave,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Drive {
    /// Constant current added to every neuron.
    #[serde(default)]
    pub bias: f64,
    /// Variance of independent per-neuron Gaussian noise.
    #[serde(default)]
    pub noise_variance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_pulse: Option<StartPulse>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entrainment: Option<Entrainment>,
    /// Additional explicit inputs.
    #[serde(default)]
    pub inputs: Vec<InputAssignment>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    #[serde(default)]
    pub params: ControllerParams,
    /// Neuron whose voltage is compared with the reference.
    pub monitor: usize,
    /// Reference waveform; defaults to the entrainment waveform.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<PulseWave>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Analysis {
    /// Upward-crossing threshold; defaults by model (-40 mV HH, 0 RS).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_threshold: Option<f64>,
    #[serde(default = "default_burst_window")]
    pub burst_window: f64,
    /// Leading events dropped before period estimation.
    #[serde(default = "default_discard")]
    pub discard_events: usize,
    /// Neuron whose events are compared with the reference (0-based).
    #[serde(default)]
    pub phase_neuron: usize,
}

fn default_burst_window() -> f64 {
    DEFAULT_BURST_WINDOW
}

fn default_discard() -> usize {
    5
}

impl Default for Analysis {
    fn default() -> Self {
        Self {
            event_threshold: None,
            burst_window: DEFAULT_BURST_WINDOW,
            discard_events: default_discard(),
            phase_neuron: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub sim: SimConfig,
    pub network: Topology,
    #[serde(default)]
    pub drive: Drive,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controller: Option<ControllerSection>,
    #[serde(default)]
    pub analysis: Analysis,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes to TOML")
    }

    /// Loads a preset by name, or a TOML document if `source` names a file.
    pub fn load(source: &str) -> Result<Self> {
        if let Some(s) = preset(source) {
            return Ok(s);
        }
        let path = Path::new(source);
        if path.exists() {
            return Self::from_toml(&fs::read_to_string(path)?);
        }
        Err(Error::UnknownPreset(source.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        let spec = self.network_spec()?;
        let n = spec.neuron_count();
        if let Some(c) = &self.controller {
            c.params.validate().map_err(Error::InvalidConfig)?;
            if c.monitor >= n {
                return Err(Error::InvalidConfig(format!(
                    "controller monitors missing neuron {}",
                    c.monitor
                )));
            }
            if self.reference_wave().is_none() {
                return Err(Error::InvalidConfig(
                    "controller needs a reference waveform (controller.reference or drive.entrainment)"
                        .into(),
                ));
            }
        }
        if self.analysis.phase_neuron >= n {
            return Err(Error::InvalidConfig(format!(
                "analysis.phase_neuron {} out of range",
                self.analysis.phase_neuron
            )));
        }
        if !(self.analysis.burst_window >= 0.0) {
            return Err(Error::InvalidConfig(
                "analysis.burst_window must be >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Reference waveform: the controller's own, else the entrainment waveform.
    pub fn reference_wave(&self) -> Option<PulseWave> {
        self.controller
            .and_then(|c| c.reference)
            .or(self.drive.entrainment.map(|e| e.wave))
    }

    pub fn controller_attachment(&self) -> Option<ControllerAttachment> {
        let c = self.controller?;
        Some(ControllerAttachment {
            params: c.params,
            monitor: c.monitor,
            reference: self.reference_wave()?,
        })
    }

    /// Fully assembled network: topology plus every drive input. Neurons
    /// without a `ControllerDriven` input get one when a controller is present.
    pub fn network_spec(&self) -> Result<NetworkSpec> {
        let mut spec = self.network.build()?;
        let d = &self.drive;
        if d.bias != 0.0 {
            spec.add_input_to_all(InputSignal::ConstantBias { amplitude: d.bias });
        }
        if d.noise_variance != 0.0 {
            spec.add_input_to_all(InputSignal::GaussianNoise {
                variance: d.noise_variance,
            });
        }
        if let Some(p) = d.start_pulse {
            spec.add_input(
                p.neuron,
                InputSignal::PulseTrain {
                    onset: p.onset,
                    width: p.width,
                    // a single pulse within any practical run
                    period: 1e9,
                    amplitude: p.amplitude,
                },
            );
        }
        if let Some(e) = d.entrainment {
            spec.add_input(
                e.neuron,
                InputSignal::RhythmicPulses {
                    wave: e.wave,
                    g_syn: ENTRAINMENT_GAIN,
                    v_th: ENTRAINMENT_THRESHOLD,
                    alpha: ENTRAINMENT_ALPHA,
                },
            );
        }
        spec.inputs.extend(d.inputs.iter().copied());
        if self.controller.is_some() {
            for i in 0..spec.neuron_count() {
                if !spec
                    .inputs_for(i)
                    .any(|s| matches!(s, InputSignal::ControllerDriven))
                {
                    spec.add_input(i, InputSignal::ControllerDriven);
                }
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Same scenario with the network and every input spelled out explicitly.
    pub fn normalized(&self) -> Result<Self> {
        let spec = self.network_spec()?;
        let mut out = self.clone();
        out.network = Topology::Explicit {
            neurons: spec.neurons,
            synapses: spec.synapses,
        };
        out.drive = Drive {
            inputs: spec.inputs,
            ..Drive::default()
        };
        if let Some(c) = out.controller.as_mut() {
            c.reference = self.reference_wave();
        }
        out.analysis.event_threshold = Some(self.event_threshold());
        Ok(out)
    }

    pub fn event_threshold(&self) -> f64 {
        self.analysis.event_threshold.unwrap_or_else(|| {
            let rs = match &self.network {
                Topology::Single { model }
                | Topology::Hco { model, .. }
                | Topology::Ring { model, .. } => matches!(model, NeuronModel::Rs),
                Topology::Explicit { neurons, .. } => neurons
                    .first()
                    .is_some_and(|n| matches!(n.model, NeuronModel::Rs)),
            };
            if rs {
                RS_EVENT_THRESHOLD
            } else {
                HH_EVENT_THRESHOLD
            }
        })
    }

    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut doc = toml::Table::try_from(self).map_err(|e| Error::Parse(e.to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o.as_ref())?;
        }
        let text = toml::to_string(&doc).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_toml(&text)
    }

    pub fn run_dir_name(&self) -> String {
        format!("{}-seed{}", self.name, self.sim.seed)
    }
}

fn parse_override_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Sets a dotted `path=value` in a TOML document. The parent table must
/// exist; array elements are addressed by index (`drive.inputs.0.amplitude`).
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<()> {
    let fail = |msg: &str| Error::Override(assignment.to_string(), msg.to_string());
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| fail("expected path=value"))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(fail("empty path component"));
    }
    let value = parse_override_value(raw.trim());
    let (last, parents) = keys.split_last().expect("non-empty path");
    let mut node: &mut toml::Value = doc
        .get_mut(parents.first().copied().unwrap_or(last))
        .ok_or_else(|| fail("no such section"))?;
    if parents.is_empty() {
        *node = value;
        return Ok(());
    }
    for key in &parents[1..] {
        node = step_into(node, key).ok_or_else(|| fail("no such parameter path"))?;
    }
    match node {
        toml::Value::Table(t) => {
            t.insert(last.to_string(), value);
        }
        toml::Value::Array(a) => {
            let idx: usize = last.parse().map_err(|_| fail("array index expected"))?;
            *a.get_mut(idx)
                .ok_or_else(|| fail("array index out of range"))? = value;
        }
        _ => return Err(fail("parent is not a table")),
    }
    Ok(())
}

fn step_into<'a>(node: &'a mut toml::Value, key: &str) -> Option<&'a mut toml::Value> {
    match node {
        toml::Value::Table(t) => t.get_mut(key),
        toml::Value::Array(a) => a.get_mut(key.parse::<usize>().ok()?),
        _ => None,
    }
}

pub const PRESET_NAMES: [&str; 7] = [
    "fig1_rebound",
    "fig2_hco",
    "fig4_ring_hh",
    "fig4_ring_rs",
    "fig5a_endogenous",
    "fig5b_entrained",
    "fig5c_adaptive",
];

/// Endogenous period of the fig5 ring is about 45.07 ms; the reference runs 4.6% faster.
pub const FIG5_REFERENCE_PERIOD: f64 = 43.0;

fn hh_start_pulse() -> Option<StartPulse> {
    Some(StartPulse {
        neuron: 0,
        onset: 10.0,
        width: 1.0,
        amplitude: 40.0,
    })
}

fn fig5_ring() -> Topology {
    Topology::Ring {
        count: 5,
        model: NeuronModel::hh(),
        inhibition: SynapseParams::new(-15.0, 0.1, -65.0, 1.5),
        excitation: SynapseParams::new(10.0, 0.1, 10.0, 1.5),
    }
}

fn fig5_reference() -> PulseWave {
    PulseWave {
        onset: 100.0,
        period: FIG5_REFERENCE_PERIOD,
        width: 2.0,
        low: -65.0,
        high: 0.0,
    }
}

pub fn preset(name: &str) -> Option<Scenario> {
    let hh = NeuronModel::hh();
    let sim = |duration: f64, record_stride: usize| SimConfig {
        dt: 0.01,
        duration,
        seed: 1,
        record_stride,
        record_all: false,
    };
    let fig5_base = |name: &str, description: &str| Scenario {
        name: name.into(),
        description: description.into(),
        sim: sim(20_000.0, 20),
        network: fig5_ring(),
        drive: Drive {
            noise_variance: 0.1,
            start_pulse: hh_start_pulse(),
            ..Drive::default()
        },
        controller: None,
        analysis: Analysis::default(),
    };
    let scenario = match name {
        "fig1_rebound" => Scenario {
            name: name.into(),
            description: "HH neuron released from a 50 ms hyperpolarizing pulse".into(),
            sim: sim(300.0, 1),
            network: Topology::Single { model: hh },
            drive: Drive {
                inputs: vec![InputAssignment {
                    neuron: 0,
                    signal: InputSignal::PulseTrain {
                        onset: 100.0,
                        width: 50.0,
                        period: 1000.0,
                        amplitude: -5.0,
                    },
                }],
                ..Drive::default()
            },
            controller: None,
            analysis: Analysis {
                discard_events: 0,
                ..Analysis::default()
            },
        },
        "fig2_hco" => Scenario {
            name: name.into(),
            description: "Half-center oscillator of two HH neurons".into(),
            sim: sim(1000.0, 1),
            network: Topology::Hco {
                model: hh,
                inhibition: SynapseParams::new(-10.0, 1.0, -65.0, 1.5),
            },
            drive: Drive {
                start_pulse: hh_start_pulse(),
                ..Drive::default()
            },
            controller: None,
            analysis: Analysis::default(),
        },
        "fig4_ring_hh" => Scenario {
            name: name.into(),
            description: "Ring oscillator of five HH neurons".into(),
            sim: sim(2000.0, 5),
            network: Topology::Ring {
                count: 5,
                model: hh,
                inhibition: SynapseParams::new(-10.0, 1.0, -65.0, 1.5),
                excitation: SynapseParams::new(0.5, 5.0, -65.0, 1.5),
            },
            drive: Drive {
                start_pulse: hh_start_pulse(),
                ..Drive::default()
            },
            controller: None,
            analysis: Analysis::default(),
        },
        "fig4_ring_rs" => Scenario {
            name: name.into(),
            description: "Ring oscillator of five Ribar-Sepulchre neurons".into(),
            sim: sim(2000.0, 10),
            network: Topology::Ring {
                count: 5,
                model: NeuronModel::Rs,
                inhibition: SynapseParams::new(-5.0, 0.1, -4.0, 2.0),
                excitation: SynapseParams::new(0.3, 60.0, -4.0, 2.0),
            },
            drive: Drive::default(),
            controller: None,
            analysis: Analysis {
                event_threshold: Some(RS_EVENT_THRESHOLD),
                ..Analysis::default()
            },
        },
        "fig5a_endogenous" => fig5_base(name, "Noisy HH ring, endogenous rhythm"),
        "fig5b_entrained" => {
            let mut s = fig5_base(
                name,
                "Noisy HH ring entrained by rhythmic pulses on neuron 1",
            );
            s.drive.entrainment = Some(Entrainment {
                neuron: 0,
                wave: fig5_reference(),
            });
            s
        }
        "fig5c_adaptive" => {
            let mut s = fig5_base(
                name,
                "Entrained HH ring with the adaptive frequency controller",
            );
            s.drive.entrainment = Some(Entrainment {
                neuron: 0,
                wave: fig5_reference(),
            });
            s.controller = Some(ControllerSection {
                params: ControllerParams::default(),
                monitor: 4,
                reference: None,
            });
            s
        }
        _ => return None,
    };
    Some(scenario)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSummary {
    pub channel: String,
    pub events: usize,
    pub period: Option<PeriodEstimate>,
    pub frequency: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WinnerEntry {
    pub time: f64,
    /// 1-based neuron id.
    pub neuron: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControllerSummary {
    pub final_e: f64,
    pub final_i_apply: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub seed: u64,
    pub dt: f64,
    pub duration: f64,
    pub samples: usize,
    pub event_threshold: f64,
    pub discard_events: usize,
    pub noise: String,
    pub channels: Vec<ChannelSummary>,
    pub reference: Option<ChannelSummary>,
    pub winner_sequence: Vec<WinnerEntry>,
    pub phase_offsets: Option<Vec<PhaseOffset>>,
    pub controller: Option<ControllerSummary>,
    pub gate_violation: Option<GateViolation>,
    pub config: serde_json::Value,
}

impl RunSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes") + "\n"
    }

    /// Winner ids as 0-based indices.
    pub fn winner_indices(&self) -> Vec<usize> {
        self.winner_sequence.iter().map(|w| w.neuron - 1).collect()
    }
}

/// Everything one run produces.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub scenario: Scenario,
    pub trace: Trace,
    /// One train per neuron, then the reference train if any.
    pub events: Vec<EventTrain>,
    pub summary: RunSummary,
}

const NOISE_NOTE: &str =
    "gaussian noise sampled once per step per neuron and held constant within the step";

fn channel_summary(train: &EventTrain, discard: usize) -> ChannelSummary {
    let period = estimate_period(train, discard).ok();
    ChannelSummary {
        channel: train.channel.clone(),
        events: train.len(),
        period,
        frequency: period.map(|p| p.frequency()),
    }
}

/// Builds the summary from event trains and the final trace row only, so
/// it can be recomputed from the emitted files.
pub fn summarize(
    scenario: &Scenario,
    events: &[EventTrain],
    samples: usize,
    controller_final: Option<ControllerSummary>,
    gate_violation: Option<GateViolation>,
) -> RunSummary {
    let discard = scenario.analysis.discard_events;
    let (neurons, reference) = match events.last() {
        Some(t) if t.channel == REFERENCE_CHANNEL => (&events[..events.len() - 1], Some(t)),
        _ => (events, None),
    };
    let phase_offsets = reference.and_then(|r| {
        neurons
            .get(scenario.analysis.phase_neuron)
            .and_then(|obs| phase_difference(r, obs).ok())
    });
    RunSummary {
        scenario: scenario.name.clone(),
        seed: scenario.sim.seed,
        dt: scenario.sim.dt,
        duration: scenario.sim.duration,
        samples,
        event_threshold: scenario.event_threshold(),
        discard_events: discard,
        noise: NOISE_NOTE.into(),
        channels: neurons
            .iter()
            .map(|t| channel_summary(t, discard))
            .collect(),
        reference: reference.map(|t| channel_summary(t, discard)),
        winner_sequence: winner_sequence(neurons, scenario.analysis.burst_window)
            .into_iter()
            .map(|w| WinnerEntry {
                time: w.time,
                neuron: w.neuron + 1,
            })
            .collect(),
        phase_offsets,
        controller: controller_final,
        gate_violation,
        config: serde_json::to_value(scenario).expect("scenario serializes"),
    }
}

/// Detects events on every voltage channel (and on `u_r` when present).
pub fn trace_events(trace: &Trace, neurons: usize, threshold: f64) -> Vec<EventTrain> {
    let mut out: Vec<EventTrain> = (0..neurons)
        .map(|i| {
            let name = voltage_channel(i);
            detect_events(
                &name,
                &trace.times,
                trace.channel(&name).unwrap_or(&[]),
                threshold,
            )
        })
        .collect();
    if let Some(u) = trace.channel(REFERENCE_CHANNEL) {
        out.push(detect_events(REFERENCE_CHANNEL, &trace.times, u, threshold));
    }
    out
}

pub fn run_scenario(scenario: &Scenario) -> Result<RunOutput> {
    scenario.validate()?;
    let spec = scenario.network_spec()?;
    let net = spec.compile()?;
    let attachment = scenario.controller_attachment();
    let mut trace = simulate(&net, &scenario.sim, attachment.as_ref())?;
    if trace.channel(REFERENCE_CHANNEL).is_none() {
        if let Some(wave) = scenario.reference_wave() {
            trace.names.push(REFERENCE_CHANNEL.into());
            trace
                .columns
                .push(trace.times.iter().map(|&t| wave.value(t)).collect());
        }
    }
    let events = trace_events(&trace, net.neuron_count(), scenario.event_threshold());
    let controller_final = controller_final_row(&trace);
    let summary = summarize(
        scenario,
        &events,
        trace.len(),
        controller_final,
        trace.gate_violation,
    );
    Ok(RunOutput {
        scenario: scenario.clone(),
        trace,
        events,
        summary,
    })
}

fn controller_final_row(trace: &Trace) -> Option<ControllerSummary> {
    let e = trace.channel("ctrl_e")?;
    let i = trace.channel("ctrl_i_apply")?;
    // rounded as in trace.csv so the summary is recomputable from the file
    let as_written = |x: f64| {
        format_sample(x)
            .parse::<f64>()
            .expect("formatted float parses")
    };
    Some(ControllerSummary {
        final_e: as_written(*e.last()?),
        final_i_apply: as_written(*i.last()?),
    })
}

/// Formats with nine significant digits.
pub fn format_sample(x: f64) -> String {
    format!("{x:.8e}")
}

pub fn trace_to_csv(trace: &Trace) -> String {
    let mut out = String::with_capacity(trace.len() * (trace.names.len() + 1) * 16);
    out.push('t');
    for n in &trace.names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for (k, t) in trace.times.iter().enumerate() {
        out.push_str(&format_sample(*t));
        for col in &trace.columns {
            out.push(',');
            let _ = write!(out, "{:.8e}", col[k]);
        }
        out.push('\n');
    }
    out
}

pub const TRACE_FILE: &str = "trace.csv";
pub const EVENTS_FILE: &str = "events.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_FILE: &str = "config.resolved.toml";

/// Writes the four run files into `root/<name>-seed<seed>/` and returns that directory.
pub fn write_run(output: &RunOutput, root: &Path) -> Result<PathBuf> {
    let dir = root.join(output.scenario.run_dir_name());
    fs::create_dir_all(&dir)?;
    fs::write(dir.join(TRACE_FILE), trace_to_csv(&output.trace))?;
    fs::write(
        dir.join(EVENTS_FILE),
        serde_json::to_string_pretty(&output.events)? + "\n",
    )?;
    fs::write(dir.join(SUMMARY_FILE), output.summary.to_json())?;
    fs::write(dir.join(CONFIG_FILE), output.scenario.to_toml())?;
    Ok(dir)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: String,
    pub period: Option<f64>,
    pub period_std: Option<f64>,
    pub frequency: Option<f64>,
    pub events: Option<usize>,
    pub error: Option<String>,
}

/// Runs `base` with `path=value` and reports the phase neuron's rhythm.
pub fn sweep_point(base: &Scenario, path: &str, value: &str) -> SweepRow {
    let result = base
        .with_overrides(&[format!("{path}={value}")])
        .and_then(|s| run_scenario(&s));
    match result {
        Ok(out) => {
            let ch = &out.summary.channels[out.scenario.analysis.phase_neuron];
            SweepRow {
                value: value.to_string(),
                period: ch.period.map(|p| p.mean),
                period_std: ch.period.map(|p| p.std),
                frequency: ch.frequency,
                events: Some(ch.events),
                error: ch
                    .period
                    .is_none()
                    .then(|| "too few events for a period".to_string()),
            }
        }
        Err(e) => SweepRow {
            value: value.to_string(),
            period: None,
            period_std: None,
            frequency: None,
            events: None,
            error: Some(e.to_string()),
        },
    }
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let opt = |x: Option<f64>| x.map(format_sample).unwrap_or_default();
    let mut out = String::from("value,period,period_std,frequency,events,error\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.value,
            opt(r.period),
            opt(r.period_std),
            opt(r.frequency),
            r.events.map(|e| e.to_string()).unwrap_or_default(),
            r.error.as_deref().unwrap_or("").replace(',', ";"),
        );
    }
    out
}
