//! Mono-static echo channel: per-target delay, Doppler and complex gain,
//! receive-side I/Q imbalance, shared-LO phase noise, and additive noise.
//!
//! Delays are fractional: the block is upsampled, cyclically shifted at the
//! high rate, lowpass filtered, and decimated back. Delays landing on a
//! whole base-rate sample bypass the filter chain, so integer delays (and
//! the zero-delay identity) are bit-exact. All delays wrap cyclically
//! within the block, matching the cyclic-correlation receiver.
//!
//! Because TX and RX share one oscillator, phase noise enters only as the
//! difference `theta[n - tau] - theta[n]`; at zero delay it cancels
//! exactly.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{dsp, ComplexSequence, Error, Result, C0};

const TAU: f64 = std::f64::consts::TAU;

/// Point scatterer: range, radial velocity, aggregate round-trip gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    pub range_m: f64,
    pub velocity_mps: f64,
    pub gain: Complex64,
}

impl Target {
    fn validate(&self, idx: usize) -> Result<()> {
        if !(self.range_m >= 0.0) || !self.range_m.is_finite() {
            return Err(Error::arg(format!("target {idx}: range must be >= 0")));
        }
        if !self.velocity_mps.is_finite() {
            return Err(Error::arg(format!("target {idx}: velocity must be finite")));
        }
        if !(self.gain.norm() > 0.0) || !self.gain.re.is_finite() || !self.gain.im.is_finite() {
            return Err(Error::arg(format!("target {idx}: gain must be finite and nonzero")));
        }
        Ok(())
    }
}

/// Starting value policy for the oscillator phase walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PnInitial {
    UniformRandom,
    #[default]
    Zero,
}

/// Receive-side hardware impairments; the default is a clean receiver.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImpairmentConfig {
    pub iq_amp: f64,
    pub iq_phase_rad: f64,
    pub pn_sigma_rad: f64,
    pub pn_initial: PnInitial,
}

impl ImpairmentConfig {
    fn validate(&self) -> Result<()> {
        if !(self.pn_sigma_rad >= 0.0) || !self.pn_sigma_rad.is_finite() {
            return Err(Error::arg("phase-noise sigma must be >= 0"));
        }
        if !self.iq_amp.is_finite() || !self.iq_phase_rad.is_finite() {
            return Err(Error::arg("iq imbalance parameters must be finite"));
        }
        Ok(())
    }
}

fn default_upsample() -> usize {
    4
}

/// Everything the echo model needs besides the transmit block itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub carrier_hz: f64,
    pub sample_period_s: f64,
    /// `None` switches additive noise off.
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default = "default_upsample")]
    pub upsample_factor: usize,
    #[serde(default)]
    pub impairments: ImpairmentConfig,
    #[serde(default)]
    pub targets: Vec<Target>,
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_hz > 0.0) || !self.carrier_hz.is_finite() {
            return Err(Error::arg("carrier frequency must be positive"));
        }
        if !(self.sample_period_s > 0.0) || !self.sample_period_s.is_finite() {
            return Err(Error::arg("sample period must be positive"));
        }
        if self.upsample_factor == 0 {
            return Err(Error::arg("upsample factor must be >= 1"));
        }
        if let Some(snr) = self.snr_db {
            if !snr.is_finite() {
                return Err(Error::arg("snr must be finite (omit it for noise-off)"));
            }
        }
        self.impairments.validate()?;
        for (i, t) in self.targets.iter().enumerate() {
            t.validate(i)?;
        }
        Ok(())
    }
}

/// Doppler cycles per sample: `v = 2 u f_c T_s / c0`.
pub fn normalized_doppler(velocity_mps: f64, carrier_hz: f64, sample_period_s: f64) -> f64 {
    2.0 * velocity_mps * carrier_hz * sample_period_s / C0
}

/// Direct and image branch gains of the imbalanced receiver:
/// `mu = cos(phi) + j eps sin(phi)`, `nu = eps cos(phi) - j sin(phi)`.
pub fn iq_coeffs(cfg: &ImpairmentConfig) -> (Complex64, Complex64) {
    let (sin, cos) = cfg.iq_phase_rad.sin_cos();
    (
        Complex64::new(cos, cfg.iq_amp * sin),
        Complex64::new(cfg.iq_amp * cos, -sin),
    )
}

/// Oscillator phase as a random walk: i.i.d. Gaussian increments of
/// standard deviation `pn_sigma_rad` on top of the policy-chosen start.
pub fn phase_noise_path(length: usize, cfg: &ImpairmentConfig, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta = match cfg.pn_initial {
        PnInitial::UniformRandom => rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
        PnInitial::Zero => 0.0,
    };
    let mut path = Vec::with_capacity(length);
    for _ in 0..length {
        path.push(theta);
        let step: f64 = rng.sample(StandardNormal);
        theta += step * cfg.pn_sigma_rad;
    }
    path
}

const SALT_NOISE: u64 = 1;
const SALT_PN: u64 = 2;

struct PreparedTarget {
    /// Transmit block after the fractional-delay chain, gain applied.
    delayed: Vec<Complex64>,
    /// Whole-sample part of the delay, for indexing the phase-noise path.
    pn_delay: usize,
    /// Doppler cycles per sample.
    doppler: f64,
}

/// One transmit block pushed through the echo model repeatedly.
///
/// Construction runs the per-target delay chain once; [`EchoSimulator::block`]
/// then applies the per-block Doppler progression, phase noise, I/Q image,
/// and noise. `propagate` is the one-shot wrapper.
pub struct EchoSimulator {
    targets: Vec<PreparedTarget>,
    mu: Complex64,
    nu: Complex64,
    impairments: ImpairmentConfig,
    snr_db: Option<f64>,
    sample_period_s: f64,
    len: usize,
    seed: u64,
}

impl EchoSimulator {
    pub fn new(x: &ComplexSequence, cfg: &ChannelConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let n = x.len();
        let factor = cfg.upsample_factor;
        let n_hi = n * factor;
        let period_hi = cfg.sample_period_s / factor as f64;

        let mut upsampled: Option<ComplexSequence> = None;
        let mut targets = Vec::with_capacity(cfg.targets.len());
        for t in &cfg.targets {
            let delay_hi = (2.0 * t.range_m / C0 / period_hi).round() as u64;
            if delay_hi >= n_hi as u64 {
                eprintln!(
                    "warning: target at {} m is delayed {delay_hi} samples, past the \
                     {n_hi}-sample block; the echo wraps around (range aliasing)",
                    t.range_m
                );
            }
            let delay_hi = (delay_hi % n_hi as u64) as usize;
            let delayed = if delay_hi % factor == 0 {
                // Whole base-rate delay: plain cyclic shift, no filtering.
                let shift = delay_hi / factor;
                let mut out = Vec::with_capacity(n);
                out.extend_from_slice(&x.samples[n - shift..]);
                out.extend_from_slice(&x.samples[..n - shift]);
                out
            } else {
                let up = upsampled.get_or_insert_with(|| {
                    dsp::upsample_filter(x, factor).expect("validated factor")
                });
                let mut hi = Vec::with_capacity(n_hi);
                hi.extend_from_slice(&up.samples[n_hi - delay_hi..]);
                hi.extend_from_slice(&up.samples[..n_hi - delay_hi]);
                hi.into_iter().step_by(factor).collect()
            };
            let gained: Vec<Complex64> = delayed.into_iter().map(|s| s * t.gain).collect();
            targets.push(PreparedTarget {
                delayed: gained,
                pn_delay: ((delay_hi as f64 / factor as f64).round() as usize) % n,
                doppler: normalized_doppler(t.velocity_mps, cfg.carrier_hz, cfg.sample_period_s),
            });
        }

        let (mu, nu) = iq_coeffs(&cfg.impairments);
        Ok(Self {
            targets,
            mu,
            nu,
            impairments: cfg.impairments,
            snr_db: cfg.snr_db,
            sample_period_s: cfg.sample_period_s,
            len: n,
            seed,
        })
    }

    pub fn block_len(&self) -> usize {
        self.len
    }

    /// Echo for block `block_index`; Doppler phase continues across blocks
    /// as `exp(j 2 pi v (n + q N))`, while noise and the phase-noise path
    /// are drawn fresh per block from seeds derived off `(seed, q)`.
    pub fn block(&self, block_index: usize) -> Result<ComplexSequence> {
        let n = self.len;
        let q = block_index as u64;

        let pn_rotors: Option<Vec<Complex64>> = if self.impairments.pn_sigma_rad > 0.0
            && self.targets.iter().any(|t| t.pn_delay != 0)
        {
            let path = phase_noise_path(n, &self.impairments, dsp::mix_seed(self.seed, q, SALT_PN));
            Some(path.iter().map(|&t| Complex64::from_polar(1.0, t)).collect())
        } else {
            None
        };

        let mut sum = vec![Complex64::ZERO; n];
        for t in &self.targets {
            if t.doppler == 0.0 && (t.pn_delay == 0 || pn_rotors.is_none()) {
                for (acc, &d) in sum.iter_mut().zip(&t.delayed) {
                    *acc += d;
                }
                continue;
            }
            let step = Complex64::from_polar(1.0, TAU * t.doppler);
            let mut rot = Complex64::from_polar(1.0, TAU * t.doppler * (q as f64 * n as f64));
            match (&pn_rotors, t.pn_delay) {
                (Some(rotors), tau) if tau != 0 => {
                    for (i, (acc, &d)) in sum.iter_mut().zip(&t.delayed).enumerate() {
                        let pn = rotors[(i + n - tau) % n] * rotors[i].conj();
                        *acc += d * rot * pn;
                        rot *= step;
                    }
                }
                _ => {
                    for (acc, &d) in sum.iter_mut().zip(&t.delayed) {
                        *acc += d * rot;
                        rot *= step;
                    }
                }
            }
        }

        let needs_image = self.nu != Complex64::ZERO;
        let needs_direct = self.mu != Complex64::new(1.0, 0.0);
        if needs_image || needs_direct {
            for v in sum.iter_mut() {
                *v = self.mu * *v + self.nu * v.conj();
            }
        }

        let y = ComplexSequence::new(sum, self.sample_period_s)?;
        match self.snr_db {
            Some(snr) => {
                if y.average_power() <= 0.0 {
                    return Err(Error::arg(
                        "snr is undefined: aggregate echo power is zero (no targets?)",
                    ));
                }
                dsp::awgn(&y, snr, dsp::mix_seed(self.seed, q, SALT_NOISE))
            }
            None => Ok(y),
        }
    }
}

/// One block through the full echo model of the channel config.
/// Deterministic given `(cfg, block_index, seed)`.
pub fn propagate(
    x: &ComplexSequence,
    cfg: &ChannelConfig,
    block_index: usize,
    seed: u64,
) -> Result<ComplexSequence> {
    EchoSimulator::new(x, cfg, seed)?.block(block_index)
}
