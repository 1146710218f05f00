//! Transform and sample-rate primitives shared by every other module.
//!
//! Conventions, fixed once here so the rest of the crate never argues about
//! them:
//! - forward DFT is unnormalized, `X[k] = sum_n x[n] exp(-j 2 pi k n / N)`
//! - inverse DFT carries the `1/N` factor
//! - cyclic correlation is `r[n] = sum_i a[i] conj(b[<i - n>_N])`, computed
//!   as `idft(dft(a) .* conj(dft(b)))`
//!
//! Transform sizes are arbitrary (the FFT backend falls back to Bluestein
//! for primes, which the odd Zadoff-Chu lengths exercise constantly).

use std::cell::RefCell;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;

use crate::{ComplexSequence, Error, Result, Spectrum};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place unnormalized forward FFT.
pub(crate) fn fft_forward(buf: &mut [Complex64]) {
    if buf.len() < 2 {
        return;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    fft.process(buf);
}

/// In-place inverse FFT without the `1/N` factor.
pub(crate) fn fft_inverse_unscaled(buf: &mut [Complex64]) {
    if buf.len() < 2 {
        return;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    fft.process(buf);
}

/// In-place inverse FFT with the `1/N` factor.
pub(crate) fn fft_inverse(buf: &mut [Complex64]) {
    fft_inverse_unscaled(buf);
    let scale = 1.0 / buf.len() as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

pub(crate) fn dft_vec(x: &[Complex64], size: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::ZERO; size];
    buf[..x.len()].copy_from_slice(x);
    fft_forward(&mut buf);
    buf
}

pub(crate) fn idft_vec(x: &[Complex64], size: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::ZERO; size];
    buf[..x.len()].copy_from_slice(x);
    fft_inverse(&mut buf);
    buf
}

/// Unnormalized forward DFT of `x` zero-padded to `size` bins.
///
/// Bin spacing is `1 / (size * sample_period)`.
pub fn dft(x: &ComplexSequence, size: usize) -> Result<Spectrum> {
    if size == 0 {
        return Err(Error::arg("dft size must be positive"));
    }
    if size < x.len() {
        return Err(Error::arg(format!(
            "dft size {size} shorter than input length {}",
            x.len()
        )));
    }
    Ok(Spectrum {
        bins: dft_vec(&x.samples, size),
        bin_spacing_hz: 1.0 / (size as f64 * x.sample_period_s),
    })
}

/// Inverse DFT with `1/size` normalization; exact inverse of [`dft`] at the
/// same size.
pub fn idft(x: &Spectrum, size: usize) -> Result<ComplexSequence> {
    if size == 0 {
        return Err(Error::arg("idft size must be positive"));
    }
    if size < x.len() {
        return Err(Error::arg(format!(
            "idft size {size} shorter than input length {}",
            x.len()
        )));
    }
    ComplexSequence::new(
        idft_vec(&x.bins, size),
        1.0 / (size as f64 * x.bin_spacing_hz),
    )
}

pub(crate) fn cyclic_correlate_vec(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = a.len();
    let mut fa = a.to_vec();
    let mut fb = b.to_vec();
    fft_forward(&mut fa);
    fft_forward(&mut fb);
    for (va, vb) in fa.iter_mut().zip(&fb) {
        *va *= vb.conj();
    }
    fft_inverse(&mut fa);
    debug_assert_eq!(fa.len(), n);
    fa
}

/// Cyclic cross-correlation `r[n] = sum_i a[i] conj(b[<i - n>_N])` of two
/// equal-length sequences, computed in the transform domain.
pub fn cyclic_correlate(a: &ComplexSequence, b: &ComplexSequence) -> Result<ComplexSequence> {
    if a.len() != b.len() {
        return Err(Error::arg(format!(
            "correlation inputs must match in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    ComplexSequence::new(cyclic_correlate_vec(&a.samples, &b.samples), a.sample_period_s)
}

/// Reference `O(N^2)` evaluation of the same correlation; kept public so
/// tests can pin the transform path against it.
pub fn cyclic_correlate_direct(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = a.len();
    assert_eq!(n, b.len(), "correlation inputs must match in length");
    (0..n)
        .map(|lag| {
            (0..n)
                .map(|i| a[i] * b[(i + n - lag) % n].conj())
                .sum()
        })
        .collect()
}

/// Half-width of the interpolation kernel in low-rate samples per side.
const INTERP_HALF_TAPS: i64 = 32;
const INTERP_KAISER_BETA: f64 = 8.0;

fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-18 {
            break;
        }
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (std::f64::consts::PI * x).sin() / (std::f64::consts::PI * x)
    }
}

/// Windowed-sinc interpolation kernel laid out cyclically over `len` samples.
///
/// Tap `j` (in high-rate samples, `|j| <= factor * INTERP_HALF_TAPS`) is
/// `sinc(j / factor) * kaiser(j)`, so every multiple of `factor` lands on a
/// sinc zero except `j = 0`. That makes phase-0 decimation of the
/// interpolated stream reproduce the input exactly.
fn interp_kernel_cyclic(factor: usize, len: usize) -> Vec<Complex64> {
    let f = factor as f64;
    let half = INTERP_HALF_TAPS * factor as i64;
    let denom = bessel_i0(INTERP_KAISER_BETA);
    let mut kernel = vec![Complex64::ZERO; len];
    for j in -half..=half {
        let t = j as f64 / half as f64;
        let window = bessel_i0(INTERP_KAISER_BETA * (1.0 - t * t).max(0.0).sqrt()) / denom;
        let tap = sinc(j as f64 / f) * window;
        let idx = j.rem_euclid(len as i64) as usize;
        kernel[idx] += Complex64::new(tap, 0.0);
    }
    kernel
}

/// Zero-stuff by `factor` and lowpass with a cyclic windowed-sinc kernel.
///
/// The output holds `factor * len(x)` samples at `sample_period / factor`.
/// Decimating the result back with [`downsample`] at phase 0 is an exact
/// identity; interpolated phases are accurate to the kernel's stopband for
/// in-band signals.
pub fn upsample_filter(x: &ComplexSequence, factor: usize) -> Result<ComplexSequence> {
    if factor == 0 {
        return Err(Error::arg("upsample factor must be positive"));
    }
    if factor == 1 {
        return Ok(x.clone());
    }
    let n_hi = x.len() * factor;
    let mut buf = vec![Complex64::ZERO; n_hi];
    for (i, &s) in x.samples.iter().enumerate() {
        buf[i * factor] = s;
    }
    let mut kernel = interp_kernel_cyclic(factor, n_hi);
    fft_forward(&mut buf);
    fft_forward(&mut kernel);
    for (v, k) in buf.iter_mut().zip(&kernel) {
        *v *= k;
    }
    fft_inverse(&mut buf);
    ComplexSequence::new(buf, x.sample_period_s / factor as f64)
}

/// Keep every `factor`-th sample starting at `phase`.
pub fn downsample(x: &ComplexSequence, factor: usize, phase: usize) -> Result<ComplexSequence> {
    if factor == 0 {
        return Err(Error::arg("downsample factor must be positive"));
    }
    if phase >= factor {
        return Err(Error::arg(format!(
            "downsample phase {phase} out of range for factor {factor}"
        )));
    }
    if x.len() % factor != 0 {
        return Err(Error::arg(format!(
            "input length {} not divisible by factor {factor}",
            x.len()
        )));
    }
    ComplexSequence::new(
        x.samples.iter().skip(phase).step_by(factor).copied().collect(),
        x.sample_period_s * factor as f64,
    )
}

/// Peak-to-average power ratio in dB.
pub fn papr_db(x: &ComplexSequence) -> Result<f64> {
    let mean = x.average_power();
    if mean <= 0.0 {
        return Err(Error::arg("papr undefined for an all-zero sequence"));
    }
    let peak = x.samples.iter().map(|s| s.norm_sqr()).fold(0.0, f64::max);
    Ok(10.0 * (peak / mean).log10())
}

/// Add circular white Gaussian noise at `snr_db` relative to the measured
/// average power of `x`. Noise power splits equally between the real and
/// imaginary parts. `snr_db = +inf` returns the input unchanged.
pub fn awgn(x: &ComplexSequence, snr_db: f64, seed: u64) -> Result<ComplexSequence> {
    if snr_db == f64::INFINITY {
        return Ok(x.clone());
    }
    if !snr_db.is_finite() {
        return Err(Error::arg(format!("snr must be finite or +inf, got {snr_db}")));
    }
    let power = x.average_power();
    if power <= 0.0 {
        return Err(Error::arg("awgn snr is undefined for an all-zero input"));
    }
    let sigma_component = (power * 10f64.powf(-snr_db / 10.0) / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = x
        .samples
        .iter()
        .map(|&s| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            s + Complex64::new(re * sigma_component, im * sigma_component)
        })
        .collect();
    ComplexSequence::new(samples, x.sample_period_s)
}

/// Derive an independent stream seed from a base seed and two indices
/// (splitmix64 steps, one per word).
pub fn mix_seed(base: u64, stream: u64, salt: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    splitmix(splitmix(splitmix(base) ^ stream) ^ salt)
}
