//! Acceptance gate: eleven end-to-end checks, one pass/fail line each,
//! nonzero exit if any fails. An optional CLI argument substring-filters
//! which checks run, e.g. `cargo test --test acceptance -- papr`.
//!
//! The numbered checks that sweep Monte Carlo scenarios load the configs
//! shipped under `configs/`, so each one can also be reproduced with a
//! single `msqp-sim run` command.

use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use msqp_sim::harness::{self, ExperimentConfig, ResultRow};
use msqp_sim::radar::{self, CfarConfig, RangeDopplerMap};
use msqp_sim::waveform::{
    self, zc_generate, Constellation, DeMsQpSpec, MsQpSpec, ZcParams,
};
use msqp_sim::{comm, dsp, ComplexSequence, C0};

type CheckResult = Result<(bool, String), Box<dyn std::error::Error>>;

struct Criterion {
    name: &'static str,
    /// Wall-clock budget in seconds; 0 means untimed.
    budget_s: u64,
    run: fn() -> CheckResult,
}

const CRITERIA: &[Criterion] = &[
    Criterion { name: "01 zc-autocorrelation", budget_s: 10, run: c01_zc_autocorrelation },
    Criterion { name: "02 residue-table", budget_s: 0, run: c02_residue_table },
    Criterion { name: "03 sidelobe-locality", budget_s: 30, run: c03_sidelobe_locality },
    Criterion { name: "04 false-alarm-contrast", budget_s: 600, run: c04_false_alarm_contrast },
    Criterion { name: "05 low-rate-estimation", budget_s: 900, run: c05_low_rate_estimation },
    Criterion { name: "06 papr-search", budget_s: 300, run: c06_papr_search },
    Criterion { name: "07 stream-isolation", budget_s: 60, run: c07_stream_isolation },
    Criterion { name: "08 spectral-efficiency", budget_s: 1, run: c08_spectral_efficiency },
    Criterion { name: "09 data-cross-correlation", budget_s: 120, run: c09_data_cross_correlation },
    Criterion { name: "10 extension-tradeoff", budget_s: 1200, run: c10_extension_tradeoff },
    Criterion { name: "11 processing-identities", budget_s: 60, run: c11_processing_identities },
];

fn main() {
    let filter = std::env::args().nth(1);
    let mut ran = 0;
    let mut failed = 0;
    for c in CRITERIA {
        if let Some(f) = &filter {
            if !c.name.contains(f.as_str()) {
                continue;
            }
        }
        ran += 1;
        let start = Instant::now();
        let (mut pass, detail) = match (c.run)() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        let elapsed = start.elapsed().as_secs_f64();
        let mut note = detail;
        if c.budget_s > 0 && elapsed > c.budget_s as f64 {
            pass = false;
            note = format!("{note}; over {}s budget", c.budget_s);
        }
        println!(
            "criterion {}: {} ({note}) [{elapsed:.1}s]",
            c.name,
            if pass { "PASS" } else { "FAIL" }
        );
        if !pass {
            failed += 1;
        }
    }
    if ran == 0 {
        eprintln!("no criterion matches the filter");
        std::process::exit(2);
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run_config(name: &str) -> Result<Vec<ResultRow>, Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::from_path(config_path(name))?;
    Ok(harness::run(&cfg)?)
}

fn value_at(rows: &[ResultRow], metric: &str, variable: f64) -> Option<f64> {
    rows.iter().find(|r| r.metric == metric && r.variable == variable).map(|r| r.value)
}

fn value_of(rows: &[ResultRow], metric: &str) -> Option<f64> {
    rows.iter().find(|r| r.metric == metric).map(|r| r.value)
}

/// 50 random sequences up to length 2001: the cyclic autocorrelation must
/// vanish off the peak to within 1e-9 of the peak value.
fn c01_zc_autocorrelation() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0f64;
    for _ in 0..50 {
        let length = 2 * rng.gen_range(1..=1000) + 1;
        let params = loop {
            let root = rng.gen_range(1..length);
            if let Ok(p) = ZcParams::new(length, root) {
                break p;
            }
        };
        let zc = zc_generate(&params);
        let r = dsp::cyclic_correlate(&zc, &zc)?;
        let limit = 1e-9 * length as f64;
        let off_peak =
            r.samples[1..].iter().map(|c| c.norm()).fold(0f64, f64::max);
        worst = worst.max(off_peak / limit);
    }
    Ok((worst < 1.0, format!("worst off-peak at {:.2e} of the 1e-9*L limit", worst)))
}

/// Midpoint root at length 10007: the residues that locate the strong
/// Doppler sidelobes alternate far/near as [5003, 1, 5002, 2] over lag
/// offsets 1..=4, identically on the negative side.
fn c02_residue_table() -> CheckResult {
    let length = 10007usize;
    let params = ZcParams::new(length, 5003)?;
    let residues = waveform::sidelobe_residues(&params, 0);
    let expected: [i64; 4] = [5003, 1, 5002, 2];
    let mut ok = true;
    let mut got = Vec::new();
    for (i, &want) in expected.iter().enumerate() {
        let fwd = residues[i + 1].unsigned_abs() as i64;
        let back = residues[length - 1 - i].unsigned_abs() as i64;
        got.push(fwd);
        ok &= fwd == want && back == want;
    }
    Ok((ok, format!("offsets 1..=4 gave {:?}, want {:?}", got, expected)))
}

/// Doppler-shifted correlation of the midpoint root pair keeps every
/// above-gate sidelobe near the peak; a small naive root does not.
fn c03_sidelobe_locality() -> CheckResult {
    let rows = run_config("root-design.toml")?;
    let designed_far: f64 = rows[0].value + rows[1].value;
    let contrast_far = rows[2].value;
    Ok((
        designed_far == 0.0 && contrast_far > 0.0,
        format!(
            "far sidelobes: roots {}/{} -> {}/{}, root {} -> {}",
            rows[0].variable, rows[1].variable, rows[0].value, rows[1].value,
            rows[2].variable, contrast_far
        ),
    ))
}

/// Some threshold keeps the designed-root false-alarm rate under 1e-2
/// while the naive root still false-alarms in over a tenth of trials.
fn c04_false_alarm_contrast() -> CheckResult {
    let rows = run_config("false-alarm.toml")?;
    let gammas: Vec<f64> = {
        let mut g: Vec<f64> =
            rows.iter().filter(|r| r.metric == "fa_rate_designed").map(|r| r.variable).collect();
        g.dedup();
        g
    };
    let mut witness = None;
    let mut closest = String::new();
    for &g in &gammas {
        let designed = value_at(&rows, "fa_rate_designed", g).unwrap_or(f64::NAN);
        let contrast = value_at(&rows, "fa_rate_contrast", g).unwrap_or(f64::NAN);
        if closest.is_empty() {
            closest = format!("at {g} dB designed={designed}, contrast={contrast}");
        }
        if designed < 1e-2 && contrast > 1e-1 {
            witness = Some(format!("at {g} dB designed={designed}, contrast={contrast}"));
            break;
        }
    }
    match witness {
        Some(w) => Ok((true, w)),
        None => Ok((false, format!("no threshold separates the designs; {closest}"))),
    }
}

/// At -45 dB the subband-rate system localizes to within one bin on both
/// axes and stays within a factor of two of the full-rate wideband
/// sequence.
fn c05_low_rate_estimation() -> CheckResult {
    let ranging = run_config("ranging.toml")?;
    let velocity = run_config("velocity.toml")?;

    let cfg = ExperimentConfig::from_path(config_path("ranging.toml"))?;
    let ch = cfg.channel.as_ref().expect("ranging config carries a channel");
    let cpi = cfg.cpi.as_ref().expect("ranging config carries a cpi");
    let n = 10 * 1007 + 10 * 100;
    let q0 = (cpi.blocks * cpi.fft_pad) as f64;
    let range_bin = C0 * ch.sample_period_s / 2.0;
    let velocity_bin = C0 / (2.0 * n as f64 * ch.carrier_hz * ch.sample_period_s) / q0;

    let msqp_r = value_of(&ranging, "msqp/range_error_m").unwrap_or(f64::NAN);
    let zc_r = value_of(&ranging, "zc/range_error_m").unwrap_or(f64::NAN);
    let msqp_v = value_of(&velocity, "msqp/velocity_error_mps").unwrap_or(f64::NAN);
    let zc_v = value_of(&velocity, "zc/velocity_error_mps").unwrap_or(f64::NAN);

    let pass = msqp_r <= range_bin
        && msqp_v <= velocity_bin
        && msqp_r <= 2.0 * zc_r
        && msqp_v <= 2.0 * zc_v;
    Ok((
        pass,
        format!(
            "range {:.3}/{:.3} bins (subband/wideband), velocity {:.3}/{:.3} bins",
            msqp_r / range_bin,
            zc_r / range_bin,
            msqp_v / velocity_bin,
            zc_v / velocity_bin
        ),
    ))
}

/// The composite's peak power sticks out past 11 dB until the phase search
/// pulls it down by at least 4 dB; both levels sit within 1 dB of their
/// reference values.
fn c06_papr_search() -> CheckResult {
    let rows = run_config("papr.toml")?;
    let unrotated = value_of(&rows, "papr_unrotated_db").unwrap_or(f64::NAN);
    let searched = value_of(&rows, "papr_searched_db").unwrap_or(f64::NAN);
    let pass = unrotated > 11.0
        && searched <= unrotated - 4.0
        && (unrotated - 13.7).abs() <= 1.0
        && (searched - 6.6).abs() <= 1.0;
    Ok((pass, format!("unrotated {unrotated:.4} dB, searched {searched:.4} dB")))
}

/// 20 random frame geometries: a lone data stream leaves every other
/// stream's bins empty to 1e-12, and a clean loopback decodes bit-exact.
fn c07_stream_isolation() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst_leak = 0f64;
    let mut bits = 0u64;
    for _ in 0..20 {
        let m = rng.gen_range(1..=4);
        let mp = rng.gen_range(1..=4);
        let l = 2 * rng.gen_range(5..=30) + 1;
        let lg = rng.gen_range(0..=8);
        let cp = rng.gen_range(0..=10);
        let base = MsQpSpec::uniform(m, l, lg)?;
        let spec = DeMsQpSpec::with_matched_guard(base, mp, cp, Constellation::qpsk())?;

        if mp >= 2 {
            let tgt_band = rng.gen_range(0..m);
            let tgt_stream = rng.gen_range(0..mp - 1);
            let mut data = vec![vec![vec![Complex64::ZERO; l]; mp - 1]; m];
            for s in data[tgt_band][tgt_stream].iter_mut() {
                *s = spec.constellation.symbol(rng.gen_range(0..4));
            }
            let frame = waveform::de_msqp_build_unchecked(&spec, &data)?;
            let body = comm::strip_cp(&frame, &spec)?;
            let grid = comm::extract_streams(&body, &spec)?;
            let mut injected = 0f64;
            let mut leaked = 0f64;
            for band in 0..m {
                for stream in 1..mp {
                    let peak =
                        grid.bins(band, stream).iter().map(|c| c.norm()).fold(0f64, f64::max);
                    if band == tgt_band && stream == tgt_stream + 1 {
                        injected = peak;
                    } else {
                        leaked = leaked.max(peak);
                    }
                }
            }
            worst_leak = worst_leak.max(leaked / injected);
        }

        let indices = spec.draw_symbol_indices(rng.gen());
        let symbols = spec.indices_to_symbols(&indices);
        let frame = waveform::de_msqp_build(&spec, &symbols)?;
        let body = comm::strip_cp(&frame, &spec)?;
        let grid = comm::extract_streams(&body, &spec)?;
        let gains = comm::flat_gains(&spec, Complex64::new(1.0, 0.0));
        let decided = comm::equalize_and_demap(&grid, &gains, &spec)?;
        let report = comm::ber_count(
            &comm::bits_from_indices(&indices, &spec.constellation),
            &comm::bits_from_indices(&decided, &spec.constellation),
        )?;
        if report.bits_errored > 0 {
            return Ok((false, format!("clean loopback lost {} bits", report.bits_errored)));
        }
        bits += report.bits_total;
    }
    Ok((
        worst_leak < 1e-12,
        format!("worst cross-stream leak {worst_leak:.2e}, {bits} clean loopback bits"),
    ))
}

/// The closed-form efficiency equals an explicit walk over the frame's bin
/// layout, exactly, for 20 random geometries.
fn c08_spectral_efficiency() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    for _ in 0..20 {
        let m = rng.gen_range(1..=4);
        let mp = rng.gen_range(1..=4);
        let l = 2 * rng.gen_range(5..=40) + 1;
        let lg = rng.gen_range(0..=9);
        let cp = rng.gen_range(0..=16);
        let cons = if rng.gen() { Constellation::qpsk() } else { Constellation::bpsk() };
        let base = MsQpSpec::uniform(m, l, lg)?;
        let spec = DeMsQpSpec::with_matched_guard(base, mp, cp, cons)?;

        let mut data_bins = 0usize;
        let offsets = spec.ext_offsets();
        for bin in 0..spec.frame_len() {
            for (band, &off) in offsets.iter().enumerate() {
                if bin >= off && bin < off + spec.ext_len(band) && (bin - off) % mp != 0 {
                    data_bins += 1;
                }
            }
        }
        let counted = (data_bins * spec.constellation.bits_per_symbol()) as f64
            / (spec.frame_len() + spec.cp_len) as f64;
        let formula = waveform::spectral_efficiency(&spec);
        if formula != counted {
            return Ok((
                false,
                format!("formula {formula} != counted {counted} for M={m} M'={mp} L={l}"),
            ));
        }
    }
    Ok((true, "formula equals the bin walk on 20 random geometries".into()))
}

/// Monte Carlo mean of the data-vs-sequence cross-correlation magnitude
/// stays under sqrt(N) at every lag for both shipped geometries.
fn c09_data_cross_correlation() -> CheckResult {
    let rows = run_config("xcorr.toml")?;
    let mut detail = Vec::new();
    let mut pass = true;
    for pair in rows.chunks(2) {
        let (mean_abs, bound) = (&pair[0], &pair[1]);
        pass &= mean_abs.value <= bound.value;
        detail.push(format!(
            "N={}: {:.2} of {:.2}",
            mean_abs.variable, mean_abs.value, bound.value
        ));
    }
    Ok((pass, detail.join(", ")))
}

/// Estimation stays bin-accurate while data streams widen, up to a
/// breakpoint that grows with SNR and lands within one sweep point of the
/// reference breakpoints (4 and 10); every point past the breakpoint
/// exceeds a bin.
fn c10_extension_tradeoff() -> CheckResult {
    let cfg = ExperimentConfig::from_path(config_path("tradeoff.toml"))?;
    let rows = harness::run(&cfg)?;
    let t = cfg.tradeoff.as_ref().expect("tradeoff table");
    let ch = cfg.channel.as_ref().expect("channel table");
    let cpi = cfg.cpi.as_ref().expect("cpi table");

    let n = 10 * 1007 + 10 * 100;
    let q0 = (cpi.blocks * cpi.fft_pad) as f64;
    let range_bin = C0 * ch.sample_period_s / 2.0;
    let velocity_bin = C0 / (2.0 * n as f64 * ch.carrier_hz * ch.sample_period_s) / q0;

    let nearest_index = |target: f64| -> usize {
        t.extensions
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (**a as f64 - target).abs().total_cmp(&(**b as f64 - target).abs())
            })
            .map(|(i, _)| i)
            .expect("extensions non-empty")
    };
    let reference_break = [nearest_index(4.0), nearest_index(10.0)];

    let mut breakpoints = Vec::new();
    let mut detail = Vec::new();
    for (si, &snr) in t.snr_db.iter().enumerate() {
        let scores: Vec<f64> = t
            .extensions
            .iter()
            .map(|&m| {
                let r = value_at(&rows, &format!("range_error_m@snr{snr}"), m as f64)
                    .unwrap_or(f64::NAN);
                let v = value_at(&rows, &format!("velocity_error_mps@snr{snr}"), m as f64)
                    .unwrap_or(f64::NAN);
                (r / range_bin).max(v / velocity_bin)
            })
            .collect();

        let flat_end = scores.iter().take_while(|&&s| s <= 1.0).count();
        if flat_end == 0 {
            return Ok((false, format!("no accurate point at snr {snr}: {scores:?}")));
        }
        let break_idx = flat_end - 1;
        for j in flat_end..scores.len() {
            if !(scores[j] > 1.0) {
                return Ok((
                    false,
                    format!("snr {snr}: point M'={} dips back under a bin", t.extensions[j]),
                ));
            }
        }
        if break_idx.abs_diff(reference_break[si]) > 1 {
            return Ok((
                false,
                format!(
                    "snr {snr}: breakpoint M'={} too far from reference M'={}",
                    t.extensions[break_idx], t.extensions[reference_break[si]]
                ),
            ));
        }
        breakpoints.push(break_idx);
        detail.push(format!(
            "snr {snr}: accurate through M'={}, scores {:?}",
            t.extensions[break_idx],
            scores.iter().map(|s| (s * 100.0).round() / 100.0).collect::<Vec<_>>()
        ));
    }
    if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Ok((false, format!("breakpoint does not grow with SNR; {}", detail.join("; "))));
    }
    Ok((true, detail.join("; ")))
}

/// The transform-domain correlator matches the O(N^2) definition for every
/// length up to 256, and the detector's averaged floor is unbiased on
/// white noise.
fn c11_processing_identities() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    let mut worst_rel = 0f64;
    for n in 1..=256usize {
        let draw = |rng: &mut ChaCha8Rng| {
            ComplexSequence::from_samples(
                (0..n)
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect(),
            )
            .expect("non-empty")
        };
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        let fast = dsp::cyclic_correlate(&a, &b)?;
        let direct = dsp::cyclic_correlate_direct(&a.samples, &b.samples);
        let scale = direct.iter().map(|c| c.norm()).fold(f64::MIN_POSITIVE, f64::max);
        for (f, d) in fast.samples.iter().zip(&direct) {
            worst_rel = worst_rel.max((f - d).norm() / scale);
        }
    }
    if worst_rel >= 1e-9 {
        return Ok((false, format!("correlator deviates by {worst_rel:.2e} relative")));
    }

    let (rows, cols) = (400usize, 64usize);
    let mut cells = ndarray::Array2::zeros((rows, cols));
    let mut noise = ChaCha8Rng::seed_from_u64(2222);
    let mut mean_power = 0f64;
    for cell in cells.iter_mut() {
        let v = Complex64::new(
            noise.sample::<f64, _>(rand_distr::StandardNormal),
            noise.sample::<f64, _>(rand_distr::StandardNormal),
        ) * std::f64::consts::FRAC_1_SQRT_2;
        mean_power += v.norm_sqr();
        *cell = v;
    }
    mean_power /= (rows * cols) as f64;
    let map = RangeDopplerMap { cells, sample_period_s: 1e-9, carrier_hz: 1e9 };
    let floor = radar::cfar_floor(&map, &CfarConfig::from_db(13.0, 5))?;
    let mean_floor = floor.iter().sum::<f64>() / floor.len() as f64;
    let rel = (mean_floor - mean_power).abs() / mean_power;
    Ok((
        rel < 0.02,
        format!("correlator within {worst_rel:.2e}, floor bias {:.3}%", rel * 100.0),
    ))
}
