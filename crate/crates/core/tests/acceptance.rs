//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rwta::events::{cyclic_order, immediate_repeats, sequence_breaks, unwrap_phase, EventTrain};
use rwta::integrator::{rk4_step_with, Rk4Workspace};
use rwta::neuron::{hh_derivatives, HHParams, HHState};
use rwta::scenario::{preset, run_scenario, sweep_point, RunOutput, Scenario, PRESET_NAMES};

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn run(s: &Scenario) -> (RunOutput, Duration) {
    timed(|| run_scenario(s).unwrap_or_else(|e| panic!("{}: {e}", s.name)))
}

fn ids(out: &RunOutput, from_time: f64) -> Vec<usize> {
    out.summary
        .winner_sequence
        .iter()
        .filter(|w| w.time >= from_time)
        .map(|w| w.neuron - 1)
        .collect()
}

fn rebound() -> Check {
    let base = preset("fig1_rebound").unwrap();
    let (pulsed, t_pulsed) = run(&base);
    let control = base
        .with_overrides(&["drive.inputs.0.amplitude=0"])
        .unwrap();
    let (quiet, t_quiet) = run(&control);
    let release = 150.0;
    let after = pulsed.events[0]
        .times
        .iter()
        .filter(|&&t| t > release && t <= release + 50.0)
        .count();
    let spent = t_pulsed.max(t_quiet);
    Check {
        name: "rebound spike",
        pass: after == 1
            && pulsed.events[0].len() == 1
            && quiet.events[0].is_empty()
            && spent.as_secs_f64() < 1.0,
        detail: format!(
            "{after} event(s) within 50 ms of release at {:?}, {} in control, {spent:.2?}",
            pulsed.events[0].times,
            quiet.events[0].len()
        ),
    }
}

fn hco(out: &RunOutput, spent: Duration) -> Check {
    let seq = out.summary.winner_indices();
    let tail = seq.get(5..).unwrap_or(&[]);
    let mut longest = 0;
    let mut current = 1;
    for w in tail.windows(2) {
        current = if w[0] != w[1] { current + 1 } else { 1 };
        longest = longest.max(current);
    }
    Check {
        name: "HCO alternation",
        pass: longest >= 20 && spent.as_secs_f64() < 10.0,
        detail: format!("{longest} consecutive alternating events after discarding 5, {spent:.2?}"),
    }
}

/// Supra-threshold intervals of one voltage trace, with interpolated edges.
fn active_intervals(times: &[f64], v: &[f64], threshold: f64) -> Vec<(f64, f64)> {
    let edge = |k: usize| {
        let f = (threshold - v[k - 1]) / (v[k] - v[k - 1]);
        times[k - 1] + f * (times[k] - times[k - 1])
    };
    let mut out = Vec::new();
    let mut start = (v[0] >= threshold).then_some(times[0]);
    for k in 1..v.len() {
        match (start, v[k - 1] < threshold, v[k] < threshold) {
            (None, true, false) => start = Some(edge(k)),
            (Some(s), false, true) => {
                out.push((s, edge(k)));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, times[times.len() - 1]));
    }
    out
}

fn max_pairwise_overlap(out: &RunOutput, from_time: f64) -> f64 {
    let th = out.scenario.event_threshold();
    let t = &out.trace.times;
    let intervals: Vec<Vec<(f64, f64)>> = (0..out.summary.channels.len())
        .map(|i| {
            active_intervals(t, out.trace.voltage(i).unwrap(), th)
                .into_iter()
                .filter(|iv| iv.1 >= from_time)
                .collect()
        })
        .collect();
    let mut worst: f64 = 0.0;
    for a in 0..intervals.len() {
        for b in a + 1..intervals.len() {
            for x in &intervals[a] {
                for y in &intervals[b] {
                    worst = worst.max(x.1.min(y.1) - x.0.max(y.0));
                }
            }
        }
    }
    worst
}

fn ring(name: &'static str, out: &RunOutput, spent: Duration) -> Check {
    let transient = out.scenario.sim.duration * 0.25;
    let seq = ids(out, transient);
    let order = cyclic_order(&seq, 5);
    let breaks = order.as_ref().map(|o| sequence_breaks(&seq, o).len());
    let laps = seq.len() / 5;
    let overlap = max_pairwise_overlap(out, transient);
    let repeats = immediate_repeats(&seq);
    Check {
        name,
        pass: breaks == Some(0) && laps >= 4 && overlap <= 1.0 && repeats == 0 && spent.as_secs_f64() < 60.0,
        detail: format!(
            "order {:?}, {laps} laps, {breaks:?} breaks, max overlap {overlap:.3}, {repeats} repeats, {spent:.2?}",
            order.map(|o| o.iter().map(|i| i + 1).collect::<Vec<_>>())
        ),
    }
}

fn monotonicity() -> Check {
    let base = preset("fig4_ring_hh").unwrap();
    let (rows, spent) = timed(|| {
        ["-1", "0", "1", "2", "3"]
            .iter()
            .map(|b| sweep_point(&base, "drive.bias", b))
            .collect::<Vec<_>>()
    });
    let mut pass = rows.iter().all(|r| r.period.is_some());
    let mut steps = Vec::new();
    if pass {
        for w in rows.windows(2) {
            let dp = w[0].period.unwrap() - w[1].period.unwrap();
            let jitter = 3.0 * w[0].period_std.unwrap().max(w[1].period_std.unwrap());
            pass &= w[1].frequency > w[0].frequency && dp > jitter;
            steps.push(format!("{dp:.3}>{jitter:.1e}"));
        }
    }
    pass &= spent.as_secs_f64() < 300.0;
    Check {
        name: "frequency monotonicity",
        pass,
        detail: format!(
            "periods {:?}, steps [{}], {spent:.2?}",
            rows.iter()
                .map(|r| r.period.map(|p| (p * 1e3).round() / 1e3))
                .collect::<Vec<_>>(),
            steps.join(", ")
        ),
    }
}

fn entrainment(endogenous: &RunOutput, out: &RunOutput, spent: Duration) -> Check {
    let natural = endogenous.summary.channels[0]
        .period
        .map(|p| p.mean)
        .unwrap_or(f64::NAN);
    let reference = out.scenario.reference_wave().unwrap().period;
    let detuning = (reference - natural) / natural;
    let half = out.scenario.sim.duration / 2.0;
    let offsets: Vec<f64> = out
        .summary
        .phase_offsets
        .iter()
        .flatten()
        .filter(|p| p.time >= half)
        .map(|p| p.offset)
        .collect();
    let u = unwrap_phase(&offsets);
    let drift =
        u.iter().cloned().fold(f64::MIN, f64::max) - u.iter().cloned().fold(f64::MAX, f64::min);
    Check {
        name: "entrainment",
        pass: detuning.abs() <= 0.15 && !u.is_empty() && drift <= 1.0 && spent.as_secs_f64() < 120.0,
        detail: format!(
            "reference {reference} vs endogenous {natural:.3} ({:+.1}%), unwrapped drift {drift:.3} cycles over {} offsets, {spent:.2?}",
            100.0 * detuning,
            u.len()
        ),
    }
}

fn adaptive(out: &RunOutput, spent: Duration) -> Check {
    let from = 0.75 * out.scenario.sim.duration;
    let reference = out.scenario.reference_wave().unwrap().period;
    let v1: Vec<f64> = out.events[0]
        .times
        .iter()
        .cloned()
        .filter(|&t| t >= from)
        .collect();
    let period = (v1[v1.len() - 1] - v1[0]) / (v1.len() - 1) as f64;
    let error = ((1.0 / period) - (1.0 / reference)).abs() * reference;
    let seq = ids(out, from);
    let breaks = cyclic_order(&seq, 5).map(|o| sequence_breaks(&seq, &o).len());
    Check {
        name: "adaptive convergence",
        pass: error < 0.02 && breaks == Some(0) && spent.as_secs_f64() < 300.0,
        detail: format!(
            "final-quarter period {period:.4} vs {reference}, error {:.3}%, {breaks:?} breaks, I_apply {:.4}, {spent:.2?}",
            100.0 * error,
            out.summary.controller.map(|c| c.final_i_apply).unwrap_or(f64::NAN)
        ),
    }
}

fn rk4_order() -> Check {
    // y' = A y with A = [[-0.5, 2], [-2, -0.5]], exact solution is a decaying rotation
    let f = |y: &[f64], _t: f64, out: &mut [f64]| {
        out[0] = -0.5 * y[0] + 2.0 * y[1];
        out[1] = -2.0 * y[0] - 0.5 * y[1];
    };
    let t_end = 2.0;
    let error = |steps: usize| {
        let dt = t_end / steps as f64;
        let mut ws = Rk4Workspace::new(2);
        let mut y = [1.0, 0.0];
        let mut next = [0.0; 2];
        for k in 0..steps {
            rk4_step_with(f, &y, k as f64 * dt, dt, &mut ws, &mut next);
            y = next;
        }
        let decay = (-0.5 * t_end).exp();
        let exact = [decay * (2.0 * t_end).cos(), -decay * (2.0 * t_end).sin()];
        ((y[0] - exact[0]).powi(2) + (y[1] - exact[1]).powi(2)).sqrt()
    };
    let ratios: Vec<f64> = [20, 40, 80]
        .iter()
        .map(|&n| error(n) / error(2 * n))
        .collect();
    Check {
        name: "numerics: RK4 order",
        pass: ratios.iter().all(|r| (8.0..=32.0).contains(r)),
        detail: format!("error ratios on halving dt {ratios:.2?}"),
    }
}

fn spike_convergence() -> Check {
    let coarse = preset("fig4_ring_hh")
        .unwrap()
        .with_overrides(&["sim.record_stride=1"])
        .unwrap();
    let fine = coarse.with_overrides(&["sim.dt=0.005"]).unwrap();
    let (a, _) = run(&coarse);
    let (b, _) = run(&fine);
    let mut worst: f64 = 0.0;
    let mut same_counts = true;
    for (x, y) in a.events.iter().zip(&b.events) {
        same_counts &= x.len() == y.len();
        for (s, t) in x.times.iter().zip(&y.times) {
            worst = worst.max((s - t).abs());
        }
    }
    let total: usize = a.events.iter().map(EventTrain::len).sum();
    Check {
        name: "numerics: spike-time self-convergence",
        pass: same_counts && worst < 0.05,
        detail: format!("max |t(dt=0.01) - t(dt=0.005)| = {worst:.2e} ms over {total} events"),
    }
}

fn rhs_oracle() -> Check {
    let transcription = |v: f64, m: f64, h: f64, n: f64, i: f64| {
        let am = 0.1 * (v + 40.0) / (1.0 - (-(v + 40.0) / 10.0).exp());
        let bm = 4.0 * (-(v + 65.0) / 18.0).exp();
        let ah = 0.07 * (-(v + 65.0) / 20.0).exp();
        let bh = 1.0 / (1.0 + (-(v + 35.0) / 10.0).exp());
        let an = 0.01 * (v + 55.0) / (1.0 - (-(v + 55.0) / 10.0).exp());
        let bn = 0.125 * (-(v + 65.0) / 80.0).exp();
        [
            -120.0 * m.powi(3) * h * (v - 50.0)
                - 36.0 * n.powi(4) * (v + 77.0)
                - 0.3 * (v + 54.387)
                + i,
            am * (1.0 - m) - bm * m,
            ah * (1.0 - h) - bh * h,
            an * (1.0 - n) - bn * n,
        ]
    };
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let p = HHParams::default();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let s = HHState {
            v: rng.random_range(-100.0..60.0),
            m: rng.random(),
            h: rng.random(),
            n: rng.random(),
        };
        let i = rng.random_range(-20.0..20.0);
        let got = hh_derivatives(&s, &p, i);
        for (g, w) in [got.v, got.m, got.h, got.n]
            .into_iter()
            .zip(transcription(s.v, s.m, s.h, s.n, i))
        {
            if g != w {
                worst = worst.max((g - w).abs() / g.abs().max(w.abs()));
            }
        }
    }
    Check {
        name: "numerics: HH RHS oracle",
        pass: worst <= 1e-12,
        detail: format!("worst relative error {worst:.2e} over 1000 random states"),
    }
}

fn gates(outputs: &[(RunOutput, Duration)]) -> Check {
    let bad: Vec<String> = outputs
        .iter()
        .filter_map(|(o, _)| {
            o.summary
                .gate_violation
                .map(|g| format!("{}: {g:?}", o.scenario.name))
        })
        .collect();
    Check {
        name: "numerics: gates in [0, 1]",
        pass: bad.is_empty(),
        detail: if bad.is_empty() {
            format!("no excursions in {} presets", outputs.len())
        } else {
            bad.join("; ")
        },
    }
}

fn determinism(outputs: &[(RunOutput, Duration)]) -> Check {
    let differing: Vec<&str> = outputs
        .iter()
        .filter(|(o, _)| run(&o.scenario).0.summary.to_json() != o.summary.to_json())
        .map(|(o, _)| o.scenario.name.as_str())
        .collect();
    Check {
        name: "determinism",
        pass: differing.is_empty(),
        detail: if differing.is_empty() {
            format!(
                "summary.json byte-identical on rerun for all {} presets",
                outputs.len()
            )
        } else {
            format!("differs: {differing:?}")
        },
    }
}

fn main() -> ExitCode {
    let outputs: Vec<(RunOutput, Duration)> = PRESET_NAMES
        .iter()
        .map(|name| run(&preset(name).unwrap()))
        .collect();
    let by_name = |name: &str| {
        outputs
            .iter()
            .find(|(o, _)| o.scenario.name == name)
            .expect("preset was run")
    };
    let (hco_out, hco_t) = by_name("fig2_hco");
    let (hh_out, hh_t) = by_name("fig4_ring_hh");
    let (rs_out, rs_t) = by_name("fig4_ring_rs");
    let (endo, _) = by_name("fig5a_endogenous");
    let (entrained, entrained_t) = by_name("fig5b_entrained");
    let (adapt, adapt_t) = by_name("fig5c_adaptive");

    let checks = [
        rebound(),
        hco(hco_out, *hco_t),
        ring("ring sequential activation (HH)", hh_out, *hh_t),
        ring("ring sequential activation (RS)", rs_out, *rs_t),
        monotonicity(),
        entrainment(endo, entrained, *entrained_t),
        adaptive(adapt, *adapt_t),
        rk4_order(),
        spike_convergence(),
        rhs_oracle(),
        gates(&outputs),
        determinism(&outputs),
    ];
    let failed = checks.iter().filter(|c| !c.pass).count();
    for c in &checks {
        println!(
            "{} {}: {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        checks.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
