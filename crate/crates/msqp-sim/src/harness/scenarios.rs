//! Scenario runners. Each turns a validated config into result rows; all
//! randomness flows from the base seed through per-trial mixes, so a given
//! config pins its output byte for byte.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::{self, ChannelConfig, Target};
use crate::comm;
use crate::dsp::{self, mix_seed};
use crate::harness::config::{
    build_msqp, scaled_count, scaled_odd_len, BuiltWaveform, ExperimentConfig, RootChoice,
    TargetDraw, WaveformTable,
};
use crate::harness::{rate_ci_halfwidth, ResultRow};
use crate::radar::{self, CfarConfig, RangeDopplerMap};
use crate::waveform::{self, Constellation, DeMsQpSpec, MsQpSpec, ZcParams};
use crate::{ComplexSequence, Error, Result, C0};

const SALT_TARGETS: u64 = 16;
const SALT_CHANNEL: u64 = 17;
const SALT_DATA: u64 = 18;
const SALT_XCORR: u64 = 19;
const SALT_LOOPBACK: u64 = 20;

/// Which physical error a sweep reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Range,
    Velocity,
}

fn draw_targets(draw: &TargetDraw, seed: u64) -> Vec<Target> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..draw.count)
        .map(|_| Target {
            range_m: rng.gen_range(draw.range_m[0]..=draw.range_m[1]),
            velocity_mps: rng.gen_range(draw.velocity_mps[0]..=draw.velocity_mps[1]),
            gain: Complex64::new(draw.gain, 0.0),
        })
        .collect()
}

/// Map cell a target should land in: round-trip delay in samples and the
/// Doppler frequency in padded bin units.
fn truth_bins(
    targets: &[Target],
    block_len: usize,
    doppler_bins: usize,
    carrier_hz: f64,
    sample_period_s: f64,
) -> Vec<(usize, usize)> {
    targets
        .iter()
        .map(|t| {
            let n = ((2.0 * t.range_m / (C0 * sample_period_s)).round() as usize) % block_len;
            let v = channel::normalized_doppler(t.velocity_mps, carrier_hz, sample_period_s);
            let k = ((v * block_len as f64 * doppler_bins as f64).round() as i64)
                .rem_euclid(doppler_bins as i64) as usize;
            (n, k)
        })
        .collect()
}

/// Distance between two values on a circle of circumference `span`.
fn cyclic_err(a: f64, b: f64, span: f64) -> f64 {
    let e = (a - b).rem_euclid(span);
    e.min(span - e)
}

/// Unambiguous one-way range covered by a block.
fn range_span_m(block_len: usize, sample_period_s: f64) -> f64 {
    block_len as f64 * C0 * sample_period_s / 2.0
}

/// Unambiguous velocity covered by the block-rate Doppler axis.
fn velocity_span_mps(block_len: usize, carrier_hz: f64, sample_period_s: f64) -> f64 {
    C0 / (2.0 * block_len as f64 * carrier_hz * sample_period_s)
}

fn best_err(est: f64, truths: impl Iterator<Item = f64>, span: f64) -> f64 {
    truths.map(|t| cyclic_err(est, t, span)).fold(f64::INFINITY, f64::min)
}

/// One processing interval: echo blocks, optional per-subband receive
/// front end, correlation, Doppler transform.
fn simulate_cpi(
    reference: &ComplexSequence,
    cfg: &ChannelConfig,
    blocks: usize,
    frontend: Option<&MsQpSpec>,
    fft_pad: usize,
    seed: u64,
) -> Result<RangeDopplerMap> {
    let sim = channel::EchoSimulator::new(reference, cfg, seed)?;
    let mut rx = Vec::with_capacity(blocks);
    for q in 0..blocks {
        let mut y = sim.block(q)?;
        if let Some(spec) = frontend {
            y = radar::subband_receive(&y, spec)?;
        }
        rx.push(y);
    }
    let set = radar::SubblockSet::from_sequences(&rx, fft_pad)?;
    radar::range_doppler_map(&set, reference, cfg.carrier_hz)
}

/// Processing interval built from data-carrying frames: every frame is
/// drawn fresh, pushed through the channel, and cut back into sensing
/// blocks correlated against the plain comb reference.
fn simulate_de_cpi(
    spec: &DeMsQpSpec,
    cfg: &ChannelConfig,
    frames: usize,
    fft_pad: usize,
    channel_seed: u64,
    data_seed: u64,
) -> Result<RangeDopplerMap> {
    let reference = waveform::msqp_build(&spec.base)?.with_sample_period(cfg.sample_period_s)?;
    let mut blocks = Vec::with_capacity(frames * spec.extension);
    for f in 0..frames {
        let indices = spec.draw_symbol_indices(mix_seed(data_seed, f as u64, spec.extension as u64));
        let symbols = spec.indices_to_symbols(&indices);
        let frame = waveform::de_msqp_build(spec, &symbols)?
            .with_sample_period(cfg.sample_period_s)?;
        let rx = channel::propagate(&frame, cfg, f, channel_seed)?;
        let split = radar::de_msqp_split(&rx, spec, fft_pad)?;
        blocks.extend(split.blocks().iter().cloned());
    }
    let set = radar::SubblockSet::new(blocks, cfg.sample_period_s, fft_pad)?;
    radar::range_doppler_map(&set, &reference, cfg.carrier_hz)
}

/// Strongest detection if the detector fires, otherwise the loudest cell.
fn strongest_cell(map: &RangeDopplerMap, cfar: &CfarConfig) -> Result<(usize, usize)> {
    let floor = radar::cfar_floor(map, cfar)?;
    let report = radar::temp_detect(map, &floor, cfar)?;
    if let Some(d) = report.detections.first() {
        return Ok((d.range_bin, d.doppler_bin));
    }
    let mut best = (0, 0);
    let mut best_power = f64::NEG_INFINITY;
    for i in 0..map.num_range_bins() {
        for k in 0..map.num_doppler_bins() {
            let p = map.power(i, k);
            if p > best_power {
                best_power = p;
                best = (i, k);
            }
        }
    }
    Ok(best)
}

fn msqp_spec_from(cfg: &ExperimentConfig) -> Result<(MsQpSpec, bool)> {
    match &cfg.waveform {
        Some(WaveformTable::Msqp {
            subband_count,
            subband_len,
            guard_len,
            roots,
            phases,
            low_rate_frontend,
        }) => {
            let spec = build_msqp(
                *subband_count,
                *subband_len,
                *guard_len,
                roots,
                phases.as_deref(),
                cfg.scale,
            )?;
            Ok((spec, *low_rate_frontend))
        }
        _ => Err(Error::arg("this scenario needs an msqp [waveform] table")),
    }
}

fn row(cfg: &ExperimentConfig, variable: f64, metric: impl Into<String>, value: f64, trials: u64) -> ResultRow {
    ResultRow {
        scenario: cfg.scenario.id().to_string(),
        variable,
        metric: metric.into(),
        value,
        trials,
        seed: cfg.base_seed,
    }
}

pub fn run_papr(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let table =
        cfg.papr.as_ref().ok_or_else(|| Error::arg("papr scenario needs a [papr] table"))?;
    let (mut spec, _) = msqp_spec_from(cfg)?;

    spec.clear_chosen_phases();
    let unrotated = dsp::papr_db(&waveform::msqp_build(&spec)?)?;

    spec.set_phase_alphabet(table.alphabet_rad.clone())?;
    let phases = waveform::phase_rotation_search(&spec)?;
    spec.set_chosen_phases(phases)?;
    let rotated = waveform::msqp_build(&spec)?;
    let searched = dsp::papr_db(&rotated)?;

    if let Some(path) = &table.waveform_out {
        let io = |e: std::io::Error| Error::Io { path: path.clone(), source: e };
        let file = std::fs::File::create(path).map_err(io)?;
        if path.ends_with(".csv") {
            waveform::write_waveform_csv(&rotated, file).map_err(io)?;
        } else {
            waveform::write_waveform_binary(&rotated, file).map_err(io)?;
        }
    }

    Ok(vec![
        row(cfg, 0.0, "papr_unrotated_db", unrotated, 1),
        row(cfg, 0.0, "papr_searched_db", searched, 1),
    ])
}

/// Sidelobes of a Doppler-shifted sequence correlated against its clean
/// copy, counted beyond the given cyclic distance from the peak.
fn far_sidelobes(
    len: usize,
    root: usize,
    doppler: f64,
    gate_db: f64,
    neighborhood: usize,
) -> Result<usize> {
    let zc = waveform::zc_generate(&ZcParams::new(len, root)?);
    let shifted = ComplexSequence::from_samples(
        zc.samples
            .iter()
            .enumerate()
            .map(|(n, &x)| x * Complex64::from_polar(1.0, TAU * doppler * n as f64))
            .collect(),
    )?;
    let r = dsp::cyclic_correlate(&shifted, &zc)?;
    let mags: Vec<f64> = r.samples.iter().map(|c| c.norm()).collect();
    let (peak_idx, peak) = mags
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &m)| if m > acc.1 { (i, m) } else { acc });
    let gate = peak * 10f64.powf(gate_db / 20.0);
    let count = mags
        .iter()
        .enumerate()
        .filter(|(i, &m)| {
            let d = (i + len - peak_idx) % len;
            m > gate && d.min(len - d) > neighborhood
        })
        .count();
    Ok(count)
}

pub fn run_root_design(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let t = cfg
        .root_design
        .as_ref()
        .ok_or_else(|| Error::arg("root-design scenario needs a [root_design] table"))?;
    let len = scaled_odd_len(t.length, cfg.scale);
    let doppler = t.doppler_length_product / len as f64;
    let lo = waveform::zc_root_design(len)?;
    let mut rows = Vec::new();
    for root in [lo, lo + 1, t.contrast_root] {
        let count = far_sidelobes(len, root, doppler, t.gate_db, t.neighborhood)?;
        rows.push(row(cfg, root as f64, "far_sidelobes_above_gate", count as f64, 1));
    }
    Ok(rows)
}

pub fn run_false_alarm(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let fa = cfg
        .false_alarm
        .as_ref()
        .ok_or_else(|| Error::arg("false-alarm scenario needs a [false_alarm] table"))?;
    let cpi = cfg.cpi.as_ref().ok_or_else(|| Error::arg("missing [cpi] table"))?;
    let cfar = cfg.cfar.as_ref().ok_or_else(|| Error::arg("missing [cfar] table"))?;
    let draw = cfg
        .target_draw
        .as_ref()
        .ok_or_else(|| Error::arg("missing [target_draw]"))?
        .at_scale(cfg.scale);
    let base_channel = cfg.channel.as_ref().ok_or_else(|| Error::arg("missing [channel]"))?;

    let (designed, frontend) = msqp_spec_from(cfg)?;
    let contrast = match &cfg.waveform {
        Some(WaveformTable::Msqp { subband_count, subband_len, guard_len, .. }) => build_msqp(
            *subband_count,
            *subband_len,
            *guard_len,
            &RootChoice::Fixed(fa.contrast_root),
            None,
            cfg.scale,
        )?,
        _ => unreachable!("validated as msqp"),
    };
    let period = base_channel.sample_period_s;
    let arms = [
        ("designed", waveform::msqp_build(&designed)?.with_sample_period(period)?, &designed),
        ("contrast", waveform::msqp_build(&contrast)?.with_sample_period(period)?, &contrast),
    ];

    let blocks = scaled_count(cpi.blocks, cfg.scale);
    let mut fa_trials = vec![vec![0u64; cfar.threshold_db.len()]; arms.len()];
    for t in 0..cfg.trials {
        let targets = draw_targets(&draw, mix_seed(cfg.base_seed, t, SALT_TARGETS));
        let channel_seed = mix_seed(cfg.base_seed, t, SALT_CHANNEL);
        let mut ch = base_channel.clone();
        ch.targets = targets;
        for (ai, (_, reference, spec)) in arms.iter().enumerate() {
            let map = simulate_cpi(
                reference,
                &ch,
                blocks,
                frontend.then_some(*spec),
                cpi.fft_pad,
                channel_seed,
            )?;
            let floor = radar::cfar_floor(&map, &cfar.at_db(cfar.threshold_db[0]))?;
            let truths = truth_bins(
                &ch.targets,
                map.num_range_bins(),
                map.num_doppler_bins(),
                ch.carrier_hz,
                ch.sample_period_s,
            );
            for (gi, &gamma) in cfar.threshold_db.iter().enumerate() {
                let report = radar::temp_detect(&map, &floor, &cfar.at_db(gamma))?;
                let outcome = radar::match_detections(&report, &truths, 3, 3);
                if !outcome.false_alarms.is_empty() {
                    fa_trials[ai][gi] += 1;
                }
            }
        }
    }

    let mut rows = Vec::new();
    for (gi, &gamma) in cfar.threshold_db.iter().enumerate() {
        for (ai, (name, _, _)) in arms.iter().enumerate() {
            let rate = fa_trials[ai][gi] as f64 / cfg.trials as f64;
            rows.push(row(cfg, gamma, format!("fa_rate_{name}"), rate, cfg.trials));
            rows.push(row(
                cfg,
                gamma,
                format!("fa_rate_{name}_ci"),
                rate_ci_halfwidth(cfg.trials),
                cfg.trials,
            ));
        }
    }
    Ok(rows)
}

fn arm_labels(arms: &[WaveformTable]) -> Vec<String> {
    let mut seen = std::collections::HashMap::new();
    arms.iter()
        .map(|a| {
            let n = seen.entry(a.kind_label()).or_insert(0usize);
            *n += 1;
            if *n == 1 {
                a.kind_label().to_string()
            } else {
                format!("{}#{n}", a.kind_label())
            }
        })
        .collect()
}

pub fn run_ranging_velocity(cfg: &ExperimentConfig, axis: Axis) -> Result<Vec<ResultRow>> {
    let arms = cfg.arms.as_ref().ok_or_else(|| Error::arg("missing [[arms]] list"))?;
    let cpi = cfg.cpi.as_ref().ok_or_else(|| Error::arg("missing [cpi] table"))?;
    let cfar = cfg.cfar.as_ref().ok_or_else(|| Error::arg("missing [cfar] table"))?;
    let draw = cfg
        .target_draw
        .as_ref()
        .ok_or_else(|| Error::arg("missing [target_draw]"))?
        .at_scale(cfg.scale);
    let base_channel = cfg.channel.as_ref().ok_or_else(|| Error::arg("missing [channel]"))?;

    let built: Vec<BuiltWaveform> = arms
        .iter()
        .map(|a| a.build(cfg.scale, base_channel.sample_period_s))
        .collect::<Result<_>>()?;
    let labels = arm_labels(arms);
    let detector = cfar.at_db(cfar.threshold_db[0]);
    let blocks = scaled_count(cpi.blocks, cfg.scale);

    let mut sums = vec![0f64; built.len()];
    for t in 0..cfg.trials {
        let targets = draw_targets(&draw, mix_seed(cfg.base_seed, t, SALT_TARGETS));
        let channel_seed = mix_seed(cfg.base_seed, t, SALT_CHANNEL);
        for (ai, arm) in built.iter().enumerate() {
            let mut ch = base_channel.clone();
            ch.targets = targets.clone();
            let map = simulate_cpi(
                &arm.reference,
                &ch,
                blocks,
                arm.frontend.as_ref(),
                cpi.fft_pad,
                channel_seed,
            )?;
            let (range_bin, doppler_bin) = strongest_cell(&map, &detector)?;
            let n = arm.reference.len();
            sums[ai] += match axis {
                Axis::Range => {
                    let est = radar::estimate_range(range_bin, ch.sample_period_s);
                    best_err(
                        est,
                        ch.targets.iter().map(|t| t.range_m),
                        range_span_m(n, ch.sample_period_s),
                    )
                }
                Axis::Velocity => {
                    let est = radar::estimate_velocity(
                        doppler_bin,
                        map.num_doppler_bins(),
                        n,
                        ch.carrier_hz,
                        ch.sample_period_s,
                    );
                    best_err(
                        est,
                        ch.targets.iter().map(|t| t.velocity_mps),
                        velocity_span_mps(n, ch.carrier_hz, ch.sample_period_s),
                    )
                }
            };
        }
    }

    let metric_suffix = match axis {
        Axis::Range => "range_error_m",
        Axis::Velocity => "velocity_error_mps",
    };
    let snr = base_channel.snr_db.unwrap_or(f64::INFINITY);
    Ok(built
        .iter()
        .enumerate()
        .map(|(ai, _)| {
            row(
                cfg,
                snr,
                format!("{}/{metric_suffix}", labels[ai]),
                sums[ai] / cfg.trials as f64,
                cfg.trials,
            )
        })
        .collect())
}

pub fn run_tradeoff(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let t = cfg
        .tradeoff
        .as_ref()
        .ok_or_else(|| Error::arg("tradeoff scenario needs a [tradeoff] table"))?;
    let cpi = cfg.cpi.as_ref().ok_or_else(|| Error::arg("missing [cpi] table"))?;
    let cfar = cfg.cfar.as_ref().ok_or_else(|| Error::arg("missing [cfar] table"))?;
    let draw = cfg
        .target_draw
        .as_ref()
        .ok_or_else(|| Error::arg("missing [target_draw]"))?
        .at_scale(cfg.scale);
    let base_channel = cfg.channel.as_ref().ok_or_else(|| Error::arg("missing [channel]"))?;

    let (base_spec, _) = msqp_spec_from(cfg)?;
    let detector = cfar.at_db(cfar.threshold_db[0]);
    let total_blocks = scaled_count(cpi.blocks, cfg.scale);

    let mut rows = Vec::new();
    for &snr in &t.snr_db {
        for &m_ext in &t.extensions {
            let spec = DeMsQpSpec::with_matched_guard(
                base_spec.clone(),
                m_ext,
                t.cp_len,
                Constellation::qpsk(),
            )?;
            let frames = (total_blocks / m_ext).max(1);
            let n = spec.base.total_len();
            let mut range_sum = 0f64;
            let mut velocity_sum = 0f64;
            for trial in 0..cfg.trials {
                let targets = draw_targets(&draw, mix_seed(cfg.base_seed, trial, SALT_TARGETS));
                let mut ch = base_channel.clone();
                ch.snr_db = Some(snr);
                ch.targets = targets;
                let map = simulate_de_cpi(
                    &spec,
                    &ch,
                    frames,
                    cpi.fft_pad,
                    mix_seed(cfg.base_seed, trial, SALT_CHANNEL),
                    mix_seed(cfg.base_seed, trial, SALT_DATA),
                )?;
                let (range_bin, doppler_bin) = strongest_cell(&map, &detector)?;
                range_sum += best_err(
                    radar::estimate_range(range_bin, ch.sample_period_s),
                    ch.targets.iter().map(|t| t.range_m),
                    range_span_m(n, ch.sample_period_s),
                );
                velocity_sum += best_err(
                    radar::estimate_velocity(
                        doppler_bin,
                        map.num_doppler_bins(),
                        n,
                        ch.carrier_hz,
                        ch.sample_period_s,
                    ),
                    ch.targets.iter().map(|t| t.velocity_mps),
                    velocity_span_mps(n, ch.carrier_hz, ch.sample_period_s),
                );
            }
            rows.push(row(
                cfg,
                m_ext as f64,
                format!("range_error_m@snr{snr}"),
                range_sum / cfg.trials as f64,
                cfg.trials,
            ));
            rows.push(row(
                cfg,
                m_ext as f64,
                format!("velocity_error_mps@snr{snr}"),
                velocity_sum / cfg.trials as f64,
                cfg.trials,
            ));
        }
    }
    Ok(rows)
}

pub fn run_xcorr(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let x = cfg.xcorr.as_ref().ok_or_else(|| Error::arg("xcorr scenario needs an [xcorr] table"))?;
    let mut rows = Vec::new();
    for (gi, g) in x.geometries.iter().enumerate() {
        let spec = build_msqp(
            g.subband_count,
            g.subband_len,
            g.guard_len,
            &RootChoice::default(),
            None,
            cfg.scale,
        )?;
        let reference = waveform::msqp_build(&spec)?;
        let n = reference.len();
        let scale = reference.average_power().sqrt().recip();
        let unit = ComplexSequence::from_samples(
            reference.samples.iter().map(|&v| v * scale).collect(),
        )?;
        let ref_spectrum = dsp::dft(&unit, n)?;

        let mut mean_abs = vec![0f64; n];
        for trial in 0..cfg.trials {
            let seed = mix_seed(cfg.base_seed, ((gi as u64) << 32) | trial, SALT_XCORR);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data = ComplexSequence::from_samples(
                (0..n)
                    .map(|_| {
                        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                            * std::f64::consts::FRAC_1_SQRT_2
                    })
                    .collect(),
            )?;
            let mut spectrum = dsp::dft(&data, n)?;
            for (b, r) in spectrum.bins.iter_mut().zip(&ref_spectrum.bins) {
                *b *= r.conj();
            }
            let r = dsp::idft(&spectrum, n)?;
            for (acc, v) in mean_abs.iter_mut().zip(&r.samples) {
                *acc += v.norm();
            }
        }
        let max_mean = mean_abs
            .iter()
            .map(|a| a / cfg.trials as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        rows.push(row(cfg, n as f64, "max_lag_mean_abs", max_mean, cfg.trials));
        rows.push(row(cfg, n as f64, "bound", (n as f64).sqrt(), 1));
    }
    Ok(rows)
}

pub fn run_loopback_ber(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let lb = cfg
        .loopback
        .as_ref()
        .ok_or_else(|| Error::arg("loopback-ber scenario needs a [loopback] table"))?;
    let table = match &cfg.waveform {
        Some(w @ WaveformTable::DeMsqp { .. }) => w,
        _ => return Err(Error::arg("loopback-ber needs a de-msqp [waveform] table")),
    };
    let spec = table.build_de_spec(cfg.scale, Constellation::qpsk())?;
    if spec.data_symbols_per_frame() == 0 {
        return Err(Error::arg("loopback needs extension >= 2 so frames carry data"));
    }
    let gains = comm::flat_gains(&spec, Complex64::new(1.0, 0.0));

    let mut points: Vec<Option<f64>> = Vec::new();
    if lb.include_noiseless {
        points.push(None);
    }
    points.extend(lb.ebn0_db.iter().copied().map(Some));

    let mut rows = Vec::new();
    for (pi, point) in points.iter().enumerate() {
        let point_seed = mix_seed(cfg.base_seed, pi as u64, SALT_LOOPBACK);
        let mut bits_total = 0u64;
        let mut bits_errored = 0u64;
        let mut frames = 0u64;
        loop {
            let done = match point {
                // A clean run proves exactness; it never accumulates
                // errors, so it gets a fixed frame count.
                None => frames >= cfg.trials.min(lb.max_frames),
                Some(_) => frames >= lb.max_frames || bits_errored >= lb.min_errors,
            };
            if done {
                break;
            }
            let indices = spec.draw_symbol_indices(mix_seed(point_seed, frames, SALT_DATA));
            let symbols = spec.indices_to_symbols(&indices);
            let frame = waveform::de_msqp_build(&spec, &symbols)?;
            let rx = match point {
                None => frame,
                Some(ebn0) => {
                    let snr = ebn0 + 10.0 * (2.0 * frame.average_power()).log10();
                    dsp::awgn(&frame, snr, mix_seed(point_seed, frames, SALT_CHANNEL))?
                }
            };
            let body = comm::strip_cp(&rx, &spec)?;
            let grid = comm::extract_streams(&body, &spec)?;
            let decided = comm::equalize_and_demap(&grid, &gains, &spec)?;
            let tx_bits = comm::bits_from_indices(&indices, &spec.constellation);
            let rx_bits = comm::bits_from_indices(&decided, &spec.constellation);
            let report = comm::ber_count(&tx_bits, &rx_bits)?;
            bits_total += report.bits_total;
            bits_errored += report.bits_errored;
            frames += 1;
        }

        let variable = point.unwrap_or(f64::INFINITY);
        let ber = if bits_total == 0 { 0.0 } else { bits_errored as f64 / bits_total as f64 };
        let expected = match point {
            None => 0.0,
            Some(ebn0) => comm::gaussian_tail_q((2.0 * 10f64.powf(ebn0 / 10.0)).sqrt()),
        };
        rows.push(row(cfg, variable, "ber", ber, frames));
        rows.push(row(cfg, variable, "bits", bits_total as f64, frames));
        rows.push(row(cfg, variable, "errors", bits_errored as f64, frames));
        rows.push(row(cfg, variable, "ber_expected", expected, frames));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness;

    fn micro(scenario_block: &str) -> ExperimentConfig {
        let text = format!(
            "schema_version = 1\ntrials = 4\nbase_seed = 11\n{scenario_block}"
        );
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        cfg.validate().unwrap();
        cfg
    }

    const MICRO_RADAR_TABLES: &str = r#"
[channel]
carrier_hz = 3.0e11
sample_period_s = 1.0e-9
snr_db = -10.0

[cpi]
blocks = 8
fft_pad = 2

[cfar]
threshold_db = [10.0]
temp_radius = 4
train_cells = 8
guard_cells = 2

[target_draw]
count = 1
range_m = [0.5, 2.5]
velocity_mps = [10.0, 30.0]
"#;

    #[test]
    fn truth_bins_match_hand_values() {
        let targets = vec![Target {
            range_m: 1.5,
            velocity_mps: 20.0,
            gain: Complex64::new(1.0, 0.0),
        }];
        let bins = truth_bins(&targets, 11070, 100, 3.0e11, 1.0e-9);
        // Round trip of 3 m at 0.3 m per sample, Doppler at 0.4428 cycles
        // per block on a 100-bin axis.
        assert_eq!(bins, vec![(10, 44)]);
    }

    #[test]
    fn cyclic_error_wraps() {
        assert_eq!(cyclic_err(0.5, 9.5, 10.0), 1.0);
        assert_eq!(cyclic_err(9.5, 0.5, 10.0), 1.0);
        assert_eq!(cyclic_err(3.0, 3.0, 10.0), 0.0);
    }

    #[test]
    fn papr_rows_are_deterministic_and_ordered() {
        let cfg = micro(
            r#"scenario = "papr"

[waveform]
kind = "msqp"
subband_count = 2
subband_len = 31
guard_len = 3

[papr]
alphabet_rad = [0.0, 3.14159265358979]
"#,
        );
        let a = harness::run(&cfg).unwrap();
        let b = harness::run(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        assert_eq!(a[0].metric, "papr_unrotated_db");
        assert_eq!(a[1].metric, "papr_searched_db");
        assert!(a[1].value <= a[0].value);
    }

    #[test]
    fn root_design_separates_designed_from_contrast() {
        let cfg = micro(
            r#"scenario = "root-design"

[root_design]
length = 101
doppler_length_product = 0.4
contrast_root = 3
neighborhood = 10
"#,
        );
        let rows = harness::run(&cfg).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].variable, 50.0);
        assert_eq!(rows[1].variable, 51.0);
        assert_eq!(rows[0].value, 0.0);
        assert_eq!(rows[1].value, 0.0);
        assert!(rows[2].value > 0.0, "contrast root shows no far sidelobes");
    }

    #[test]
    fn false_alarm_emits_rates_with_intervals() {
        let cfg = micro(&format!(
            r#"scenario = "false-alarm"
{MICRO_RADAR_TABLES}
[waveform]
kind = "msqp"
subband_count = 2
subband_len = 31
guard_len = 3

[false_alarm]
contrast_root = 3
"#
        ));
        let rows = harness::run(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        let metrics: Vec<&str> = rows.iter().map(|r| r.metric.as_str()).collect();
        assert_eq!(
            metrics,
            ["fa_rate_designed", "fa_rate_designed_ci", "fa_rate_contrast", "fa_rate_contrast_ci"]
        );
        for r in &rows {
            assert!((0.0..=1.0).contains(&r.value));
            assert_eq!(r.variable, 10.0);
        }
        assert_eq!(harness::run(&cfg).unwrap(), rows);
    }

    #[test]
    fn ranging_reports_one_row_per_arm() {
        let cfg = micro(&format!(
            r#"scenario = "ranging"
{MICRO_RADAR_TABLES}
[[arms]]
kind = "msqp"
subband_count = 2
subband_len = 31
guard_len = 3
low_rate_frontend = true

[[arms]]
kind = "zc"
length = 67
"#
        ));
        let rows = harness::run(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].metric, "msqp/range_error_m");
        assert_eq!(rows[1].metric, "zc/range_error_m");
        for r in &rows {
            assert!(r.value.is_finite());
            assert_eq!(r.variable, -10.0);
        }
    }

    #[test]
    fn velocity_uses_same_scenes_as_ranging() {
        let block = format!(
            r#"scenario = "velocity"
{MICRO_RADAR_TABLES}
[[arms]]
kind = "zc"
length = 67
"#
        );
        let cfg = micro(&block);
        let rows = harness::run(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].metric, "zc/velocity_error_mps");
        assert!(rows[0].value.is_finite());
    }

    #[test]
    fn duplicate_arm_kinds_get_numbered_labels() {
        let arms = vec![
            WaveformTable::Zc { length: 31, root: None },
            WaveformTable::Zc { length: 67, root: None },
            WaveformTable::Lfm { bandwidth_hz: 1.0e9, duration_s: 1.0e-7 },
        ];
        assert_eq!(arm_labels(&arms), ["zc", "zc#2", "lfm"]);
    }

    #[test]
    fn tradeoff_emits_both_errors_per_extension() {
        let cfg = micro(&format!(
            r#"scenario = "tradeoff"
{MICRO_RADAR_TABLES}
[waveform]
kind = "msqp"
subband_count = 2
subband_len = 31
guard_len = 3

[tradeoff]
extensions = [1, 2]
snr_db = [-10.0]
"#
        ));
        let rows = harness::run(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].metric, "range_error_m@snr-10");
        assert_eq!(rows[1].metric, "velocity_error_mps@snr-10");
        assert_eq!(rows[0].variable, 1.0);
        assert_eq!(rows[2].variable, 2.0);
        assert_eq!(harness::run(&cfg).unwrap(), rows);
    }

    #[test]
    fn xcorr_stays_under_the_power_bound() {
        let cfg = micro(
            r#"scenario = "xcorr"

[xcorr]
[[xcorr.geometries]]
subband_count = 2
subband_len = 31
guard_len = 3
"#,
        );
        let rows = harness::run(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].variable, 68.0);
        assert_eq!(rows[1].metric, "bound");
        assert!((rows[1].value - 68f64.sqrt()).abs() < 1e-12);
        assert!(rows[0].value > 0.0);
        // 4 trials is noisy; just require the right order of magnitude.
        assert!(rows[0].value < 3.0 * rows[1].value);
    }

    #[test]
    fn loopback_noiseless_point_is_error_free() {
        let cfg = micro(
            r#"scenario = "loopback-ber"

[waveform]
kind = "de-msqp"
subband_count = 2
subband_len = 31
guard_len = 3
extension = 2
cp_len = 5

[loopback]
ebn0_db = [30.0]
min_errors = 1
max_frames = 3
"#,
        );
        let rows = harness::run(&cfg).unwrap();
        assert_eq!(rows.len(), 8);
        let noiseless_ber = &rows[0];
        assert_eq!(noiseless_ber.metric, "ber");
        assert_eq!(noiseless_ber.variable, f64::INFINITY);
        assert_eq!(noiseless_ber.value, 0.0);
        let bits = &rows[1];
        assert_eq!(bits.metric, "bits");
        // trials = 4 capped at max_frames = 3; 2 subbands, 1 data stream,
        // 31 QPSK symbols each.
        assert_eq!(bits.value, 3.0 * 2.0 * 31.0 * 2.0);
        let noisy_ber = &rows[4];
        assert_eq!(noisy_ber.variable, 30.0);
        assert!(noisy_ber.value <= 1e-2);
    }
}
