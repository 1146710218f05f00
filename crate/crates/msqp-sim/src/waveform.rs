//! Transmit waveform synthesis.
//!
//! The sensing waveform is built in the frequency domain: the DFT of one
//! odd-length Zadoff-Chu (ZC) sequence per subband is placed on a block of
//! adjacent bins, subbands are separated by empty guard bins, and a single
//! inverse transform of size `N = sum(L_m) + M * L_G` produces the composite
//! sequence. ZC spectra are constant-magnitude, so every occupied bin of the
//! composite has magnitude `sqrt(N)` and the cyclic autocorrelation stays
//! quasi-perfect while the bandwidth scales with the subband count.
//!
//! The data-embedded frame extends each subband by a factor `M'`: block
//! repetition keeps the ZC comb on every `M'`-th bin, and phase-ramped data
//! blocks fill the residue classes in between. Dropping the data recovers
//! periodic repetitions of the plain sensing sequence.
//!
//! Baselines for comparison runs: plain wide/narrow-band ZC and an LFM chirp.

use std::io::{BufRead, Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dsp;
use crate::{ComplexSequence, Error, Result};

const TAU: f64 = std::f64::consts::TAU;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Zadoff-Chu sequence parameters: odd length and coprime root.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZcParams {
    length: usize,
    root: usize,
}

impl ZcParams {
    pub fn new(length: usize, root: usize) -> Result<Self> {
        if length < 3 || length % 2 == 0 {
            return Err(Error::arg(format!("zc length must be odd and >= 3, got {length}")));
        }
        if root == 0 || root >= length {
            return Err(Error::arg(format!(
                "zc root must satisfy 0 < root < length, got root {root} for length {length}"
            )));
        }
        if gcd(root as u64, length as u64) != 1 {
            return Err(Error::arg(format!(
                "zc root {root} shares a factor with length {length}"
            )));
        }
        Ok(Self { length, root })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn root(&self) -> usize {
        self.root
    }
}

/// `b[n] = exp(-j pi p n (n+1) / L)`, unit modulus, perfect cyclic
/// autocorrelation. The phase is reduced modulo `2L` in integer arithmetic
/// so long sequences lose no precision.
pub fn zc_generate(params: &ZcParams) -> ComplexSequence {
    let l = params.length as u128;
    let p = params.root as u128;
    let samples = (0..params.length)
        .map(|n| {
            let n = n as u128;
            let num = (p * n * (n + 1)) % (2 * l);
            Complex64::from_polar(1.0, -std::f64::consts::PI * num as f64 / l as f64)
        })
        .collect();
    ComplexSequence::from_samples(samples).expect("zc sequence is non-empty and finite")
}

/// Root choice that pushes the strong Doppler-induced correlation sidelobes
/// next to the main peak: `(L-1)/2`, falling back to `(L+1)/2` if the first
/// candidate shares a factor with `L`.
pub fn zc_root_design(length: usize) -> Result<usize> {
    if length < 3 || length % 2 == 0 {
        return Err(Error::arg(format!("root design needs an odd length >= 3, got {length}")));
    }
    for candidate in [(length - 1) / 2, (length + 1) / 2] {
        if candidate > 0 && gcd(candidate as u64, length as u64) == 1 {
            return Ok(candidate);
        }
    }
    Err(Error::NoValidRoot(length))
}

/// Residues `<p (n - delay)>_L` for `n = 0..L-1`, mapped into
/// `[-(L-1)/2, (L-1)/2]`.
///
/// Under a Doppler offset the correlation sidelobe at lag `n` scales
/// inversely with the residue magnitude, so this list predicts where the
/// strong sidelobes land. With a coprime root the list is a permutation of
/// the full interval.
pub fn sidelobe_residues(params: &ZcParams, delay: i64) -> Vec<i64> {
    let l = params.length as i64;
    let p = params.root as i64;
    let half = (l - 1) / 2;
    (0..l)
        .map(|n| {
            let r = (p as i128 * (n - delay) as i128).rem_euclid(l as i128) as i64;
            if r > half {
                r - l
            } else {
                r
            }
        })
        .collect()
}

/// Multi-subband sensing waveform: `M` ZC spectra on adjacent subbands with
/// `guard_len` empty bins after each, plus an optional per-subband phase
/// rotation used to tame the PAPR.
#[derive(Debug, Clone, PartialEq)]
pub struct MsQpSpec {
    pub subbands: Vec<ZcParams>,
    pub guard_len: usize,
    phase_alphabet: Vec<f64>,
    chosen_phases: Option<Vec<f64>>,
}

/// Default rotation alphabet: quarter-circle grid.
pub const DEFAULT_PHASE_ALPHABET: [f64; 4] = [
    0.0,
    std::f64::consts::FRAC_PI_2,
    std::f64::consts::PI,
    3.0 * std::f64::consts::FRAC_PI_2,
];

impl MsQpSpec {
    pub fn new(subbands: Vec<ZcParams>, guard_len: usize) -> Result<Self> {
        if subbands.is_empty() {
            return Err(Error::arg("need at least one subband"));
        }
        Ok(Self {
            subbands,
            guard_len,
            phase_alphabet: DEFAULT_PHASE_ALPHABET.to_vec(),
            chosen_phases: None,
        })
    }

    /// `count` equal-length subbands with designed roots.
    pub fn uniform(count: usize, length: usize, guard_len: usize) -> Result<Self> {
        let root = zc_root_design(length)?;
        let band = ZcParams::new(length, root)?;
        Self::new(vec![band; count], guard_len)
    }

    pub fn set_phase_alphabet(&mut self, alphabet: Vec<f64>) -> Result<()> {
        if let Some(bad) = alphabet.iter().find(|p| !(0.0..TAU).contains(*p)) {
            return Err(Error::arg(format!("alphabet phase {bad} outside [0, 2pi)")));
        }
        if let Some(chosen) = &self.chosen_phases {
            validate_membership(chosen, &alphabet)?;
        }
        self.phase_alphabet = alphabet;
        Ok(())
    }

    pub fn phase_alphabet(&self) -> &[f64] {
        &self.phase_alphabet
    }

    /// Phases must come from the alphabet, one per subband.
    pub fn set_chosen_phases(&mut self, phases: Vec<f64>) -> Result<()> {
        if phases.len() != self.subbands.len() {
            return Err(Error::arg(format!(
                "got {} phases for {} subbands",
                phases.len(),
                self.subbands.len()
            )));
        }
        validate_membership(&phases, &self.phase_alphabet)?;
        self.chosen_phases = Some(phases);
        Ok(())
    }

    pub fn clear_chosen_phases(&mut self) {
        self.chosen_phases = None;
    }

    /// Per-subband rotation applied at build time; zeros before any search.
    pub fn effective_phases(&self) -> Vec<f64> {
        self.chosen_phases
            .clone()
            .unwrap_or_else(|| vec![0.0; self.subbands.len()])
    }

    pub fn chosen_phases(&self) -> Option<&[f64]> {
        self.chosen_phases.as_deref()
    }

    /// Composite length `N = sum(L_m) + M * L_G`.
    pub fn total_len(&self) -> usize {
        self.subbands.iter().map(|b| b.length()).sum::<usize>()
            + self.subbands.len() * self.guard_len
    }

    /// First bin of each subband: `f_m = sum_{i<m} L_i + m * L_G`.
    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.subbands
            .iter()
            .map(|b| {
                let here = acc;
                acc += b.length() + self.guard_len;
                here
            })
            .collect()
    }

    /// Bin ranges carrying signal, in subband order.
    pub fn occupied_bins(&self) -> Vec<std::ops::Range<usize>> {
        self.offsets()
            .iter()
            .zip(&self.subbands)
            .map(|(&f, b)| f..f + b.length())
            .collect()
    }

    /// Fraction of bins occupied, `sum(L_m) / N`; also the average power of
    /// the built sequence.
    pub fn occupancy(&self) -> f64 {
        let used: usize = self.subbands.iter().map(|b| b.length()).sum();
        used as f64 / self.total_len() as f64
    }
}

fn validate_membership(phases: &[f64], alphabet: &[f64]) -> Result<()> {
    for &p in phases {
        let ok = alphabet.iter().any(|&a| {
            let d = (p - a).rem_euclid(TAU);
            d < 1e-9 || TAU - d < 1e-9
        });
        if !ok {
            return Err(Error::arg(format!("phase {p} is not in the alphabet")));
        }
    }
    Ok(())
}

/// Size-N spectrum of subband `m` alone: `sqrt(N / L_m) e^{j phi} B_m[k]`
/// on its bins, zero elsewhere.
fn subband_spectrum(spec: &MsQpSpec, m: usize, phase: f64) -> Vec<Complex64> {
    let n = spec.total_len();
    let band = &spec.subbands[m];
    let offset = spec.offsets()[m];
    let bins = dsp::dft_vec(&zc_generate(band).samples, band.length());
    let scale = Complex64::from_polar((n as f64 / band.length() as f64).sqrt(), phase);
    let mut out = vec![Complex64::ZERO; n];
    for (k, b) in bins.iter().enumerate() {
        out[offset + k] = scale * b;
    }
    out
}

/// Composite sensing sequence of length `N`: inverse transform of the
/// concatenated, scaled subband spectra. Guard bins are exact zeros; every
/// occupied bin has magnitude `sqrt(N)`, so the average power is
/// `sum(L_m) / N`.
pub fn msqp_build(spec: &MsQpSpec) -> Result<ComplexSequence> {
    let phases = spec.effective_phases();
    let n = spec.total_len();
    let mut spectrum = vec![Complex64::ZERO; n];
    for (m, &phase) in phases.iter().enumerate() {
        let band = &spec.subbands[m];
        let offset = spec.offsets()[m];
        let bins = dsp::dft_vec(&zc_generate(band).samples, band.length());
        let scale = Complex64::from_polar((n as f64 / band.length() as f64).sqrt(), phase);
        for (k, b) in bins.iter().enumerate() {
            spectrum[offset + k] = scale * b;
        }
    }
    ComplexSequence::from_samples(dsp::idft_vec(&spectrum, n))
}

/// Single-subband component of the composite waveform; the components sum
/// to the [`msqp_build`] output and occupy disjoint bins, so distinct
/// components are nearly orthogonal under every cyclic shift.
pub fn subsequence_extract(spec: &MsQpSpec, m: usize) -> Result<ComplexSequence> {
    if m >= spec.subbands.len() {
        return Err(Error::arg(format!(
            "subband index {m} out of range for {} subbands",
            spec.subbands.len()
        )));
    }
    let phases = spec.effective_phases();
    let spectrum = subband_spectrum(spec, m, phases[m]);
    ComplexSequence::from_samples(dsp::idft_vec(&spectrum, spec.total_len()))
}

/// True when the alphabet is the uniform grid `phi_0 + 2 pi k / L` in the
/// order given. Rotating every index by a constant then only multiplies the
/// waveform by a global phase, so the search space collapses by one digit.
fn is_circular_grid(alphabet: &[f64]) -> bool {
    let l = alphabet.len();
    let step = TAU / l as f64;
    alphabet.iter().enumerate().all(|(k, &p)| {
        let d = (p - alphabet[0] - k as f64 * step).rem_euclid(TAU);
        d < 1e-12 || TAU - d < 1e-12
    })
}

/// Reflected mixed-radix Gray counter: every step changes one digit by one.
struct GrayCounter {
    digits: Vec<usize>,
    dirs: Vec<i8>,
    focus: Vec<usize>,
    radix: usize,
}

impl GrayCounter {
    fn new(len: usize, radix: usize) -> Self {
        assert!(radix >= 2);
        Self {
            digits: vec![0; len],
            dirs: vec![1; len],
            focus: (0..=len).collect(),
            radix,
        }
    }

    /// Advance; returns the changed position and its old and new values.
    fn next(&mut self) -> Option<(usize, usize, usize)> {
        let j = self.focus[0];
        self.focus[0] = 0;
        if j == self.digits.len() {
            return None;
        }
        let old = self.digits[j];
        let new = (old as i64 + self.dirs[j] as i64) as usize;
        self.digits[j] = new;
        if new == 0 || new == self.radix - 1 {
            self.dirs[j] = -self.dirs[j];
            self.focus[j] = self.focus[j + 1];
            self.focus[j + 1] = j + 1;
        }
        Some((j, old, new))
    }
}

const SEARCH_BUDGET: u128 = 1 << 20;
const RANDOM_SEARCH_SEED: u64 = 0x6d73_7170;

/// Minimize the peak power of the composite waveform over per-subband
/// rotations drawn from the alphabet.
///
/// The whole assignment space is enumerated when it fits the budget
/// (`|alphabet|^M <= 2^20`, walked in Gray order so each candidate is one
/// rank-1 update); otherwise a seeded random sample of the same budget is
/// scored, always including the all-zero-index assignment so the result
/// never loses to the unrotated waveform. Ties prefer the lexicographically
/// smallest index list.
pub fn phase_rotation_search(spec: &MsQpSpec) -> Result<Vec<f64>> {
    let alphabet = spec.phase_alphabet.clone();
    if alphabet.is_empty() {
        return Err(Error::arg("phase alphabet is empty"));
    }
    let m = spec.subbands.len();
    if alphabet.len() == 1 {
        return Ok(vec![alphabet[0]; m]);
    }
    let parts: Vec<Vec<Complex64>> = (0..m)
        .map(|i| dsp::idft_vec(&subband_spectrum(spec, i, 0.0), spec.total_len()))
        .collect();
    let rotors: Vec<Complex64> = alphabet.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();

    let space = (alphabet.len() as u128).checked_pow(m as u32);
    let best = match space {
        Some(total) if total <= SEARCH_BUDGET => exhaustive_search(&parts, &rotors, &alphabet),
        _ => random_search(&parts, &rotors, alphabet.len()),
    };
    Ok(best.into_iter().map(|idx| alphabet[idx]).collect())
}

fn peak_power(parts: &[Vec<Complex64>], rotors: &[Complex64], digits: &[usize]) -> f64 {
    let n = parts[0].len();
    let mut peak = 0.0f64;
    for i in 0..n {
        let mut acc = Complex64::ZERO;
        for (part, &d) in parts.iter().zip(digits) {
            acc += rotors[d] * part[i];
        }
        peak = peak.max(acc.norm_sqr());
    }
    peak
}

/// (peak power, index list) ordering: smaller peak first, then lex indices.
fn better(a: &(f64, Vec<usize>), b: &(f64, Vec<usize>)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

fn exhaustive_search(parts: &[Vec<Complex64>], rotors: &[Complex64], alphabet: &[f64]) -> Vec<usize> {
    let m = parts.len();
    let radix = alphabet.len();
    // On a circular-grid alphabet, pin the first digit to zero: any
    // minimizer rotates into that slice with identical peak power, and the
    // lexicographically smallest one already lives there.
    let chunk_pos = (is_circular_grid(alphabet) as usize).min(m - 1);
    let tail = m - chunk_pos - 1;

    let best = (0..radix)
        .into_par_iter()
        .map(|lead| {
            let mut digits = vec![0usize; m];
            digits[chunk_pos] = lead;
            let mut current: Vec<Complex64> = vec![Complex64::ZERO; parts[0].len()];
            for (part, &d) in parts.iter().zip(&digits) {
                for (c, p) in current.iter_mut().zip(part) {
                    *c += rotors[d] * p;
                }
            }
            let mut local_best = (
                current.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max),
                digits.clone(),
            );
            if tail > 0 {
                let mut gray = GrayCounter::new(tail, radix);
                while let Some((pos, old, new)) = gray.next() {
                    let j = chunk_pos + 1 + pos;
                    digits[j] = new;
                    let delta = rotors[new] - rotors[old];
                    let mut peak = 0.0f64;
                    for (c, p) in current.iter_mut().zip(&parts[j]) {
                        *c += delta * p;
                        peak = peak.max(c.norm_sqr());
                    }
                    if peak <= local_best.0 * (1.0 + 1e-12) {
                        // Recompute from scratch so the Gray walk's
                        // accumulated rounding never decides a winner.
                        let cand = (peak_power(parts, rotors, &digits), digits.clone());
                        if better(&cand, &local_best) {
                            local_best = cand;
                        }
                    }
                }
            }
            local_best
        })
        .reduce_with(|a, b| if better(&b, &a) { b } else { a })
        .expect("radix >= 2 yields candidates");
    best.1
}

fn random_search(parts: &[Vec<Complex64>], rotors: &[Complex64], radix: usize) -> Vec<usize> {
    let m = parts.len();
    let zero = (peak_power(parts, rotors, &vec![0; m]), vec![0usize; m]);
    let best = (0..SEARCH_BUDGET as u64)
        .into_par_iter()
        .map(|i| {
            let digits: Vec<usize> = (0..m)
                .map(|j| (dsp::mix_seed(RANDOM_SEARCH_SEED, i, j as u64) % radix as u64) as usize)
                .collect();
            (peak_power(parts, rotors, &digits), digits)
        })
        .reduce(|| zero.clone(), |a, b| if better(&b, &a) { b } else { a });
    best.1
}

/// Repeat `x` `extension` times, scaling the g-th copy by
/// `exp(j 2 pi g i / extension)`. The output's DFT is then nonzero only on
/// bins congruent to `i` modulo `extension`, which is what lets several
/// streams share a subband without touching each other.
pub fn time_extend(x: &ComplexSequence, stream_index: usize, extension: usize) -> Result<ComplexSequence> {
    if extension == 0 || stream_index >= extension {
        return Err(Error::arg(format!(
            "stream index {stream_index} out of range for extension {extension}"
        )));
    }
    let mut samples = Vec::with_capacity(x.len() * extension);
    for g in 0..extension {
        let rot = Complex64::from_polar(1.0, TAU * (g * stream_index) as f64 / extension as f64);
        samples.extend(x.samples.iter().map(|&s| rot * s));
    }
    ComplexSequence::new(samples, x.sample_period_s)
}

/// Finite symbol alphabet with unit average power.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    bits_per_symbol: usize,
}

impl Constellation {
    pub fn new(points: Vec<Complex64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::arg("constellation needs at least two points"));
        }
        if !points.len().is_power_of_two() {
            return Err(Error::arg("constellation size must be a power of two"));
        }
        let avg: f64 = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64;
        if (avg - 1.0).abs() > 1e-6 {
            return Err(Error::arg(format!("constellation average power {avg} is not 1")));
        }
        for (i, a) in points.iter().enumerate() {
            if points[..i].iter().any(|b| (a - b).norm() < 1e-12) {
                return Err(Error::arg("constellation points must be distinct"));
            }
        }
        let bits_per_symbol = points.len().trailing_zeros() as usize;
        Ok(Self { points, bits_per_symbol })
    }

    /// Gray-mapped QPSK: bit 0 picks the real sign, bit 1 the imaginary.
    pub fn qpsk() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(vec![
            Complex64::new(a, a),
            Complex64::new(-a, a),
            Complex64::new(a, -a),
            Complex64::new(-a, -a),
        ])
        .expect("qpsk is valid")
    }

    pub fn bpsk() -> Self {
        Self::new(vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)])
            .expect("bpsk is valid")
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn symbol(&self, index: usize) -> Complex64 {
        self.points[index]
    }

    /// Minimum-distance decision.
    pub fn decide(&self, y: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (y - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Bits of a symbol index, LSB first.
    pub fn bits(&self, index: usize) -> Vec<bool> {
        (0..self.bits_per_symbol).map(|b| (index >> b) & 1 == 1).collect()
    }

    pub fn contains(&self, s: Complex64) -> bool {
        self.points.iter().any(|p| (p - s).norm() < 1e-9)
    }
}

/// Data-embedded frame layout: the base sensing spec, the time extension
/// factor `M'`, the widened guard `L'_G`, an optional cyclic prefix, and the
/// data alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct DeMsQpSpec {
    pub base: MsQpSpec,
    pub extension: usize,
    pub guard_len_ext: usize,
    pub cp_len: usize,
    pub constellation: Constellation,
}

impl DeMsQpSpec {
    pub fn new(
        base: MsQpSpec,
        extension: usize,
        guard_len_ext: usize,
        cp_len: usize,
        constellation: Constellation,
    ) -> Result<Self> {
        if extension == 0 {
            return Err(Error::arg("extension factor must be >= 1"));
        }
        Ok(Self { base, extension, guard_len_ext, cp_len, constellation })
    }

    /// Keep the sensing comb structure intact: `L'_G = M' * L_G`, so the
    /// frame body is exactly `M'` repetitions long.
    pub fn with_matched_guard(
        base: MsQpSpec,
        extension: usize,
        cp_len: usize,
        constellation: Constellation,
    ) -> Result<Self> {
        let guard = base.guard_len * extension;
        Self::new(base, extension, guard, cp_len, constellation)
    }

    /// Extended subband length `L'_m = L_m * M'`.
    pub fn ext_len(&self, m: usize) -> usize {
        self.base.subbands[m].length() * self.extension
    }

    /// Frame body length `N' = sum(L'_m) + M * L'_G` (cyclic prefix not
    /// counted).
    pub fn frame_len(&self) -> usize {
        self.base.subbands.iter().map(|b| b.length() * self.extension).sum::<usize>()
            + self.base.subbands.len() * self.guard_len_ext
    }

    /// First bin of each extended subband.
    pub fn ext_offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.base
            .subbands
            .iter()
            .map(|b| {
                let here = acc;
                acc += b.length() * self.extension + self.guard_len_ext;
                here
            })
            .collect()
    }

    /// Data symbols per frame: `(M' - 1) * sum(L_m)`.
    pub fn data_symbols_per_frame(&self) -> usize {
        (self.extension - 1) * self.base.subbands.iter().map(|b| b.length()).sum::<usize>()
    }

    /// Uniform random symbol indices shaped `[subband][stream][symbol]`.
    pub fn draw_symbol_indices(&self, seed: u64) -> Vec<Vec<Vec<usize>>> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        self.base
            .subbands
            .iter()
            .map(|b| {
                (1..self.extension)
                    .map(|_| {
                        (0..b.length())
                            .map(|_| rng.gen_range(0..self.constellation.points().len()))
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    pub fn indices_to_symbols(&self, indices: &[Vec<Vec<usize>>]) -> Vec<Vec<Vec<Complex64>>> {
        indices
            .iter()
            .map(|per_band| {
                per_band
                    .iter()
                    .map(|stream| stream.iter().map(|&i| self.constellation.symbol(i)).collect())
                    .collect()
            })
            .collect()
    }
}

/// Data-embedded frame: per subband, the ZC comb sits on bins `M' k'` and
/// data stream `i` on bins `M' k' + i`, all scaled by `sqrt(N' / L_m)` so
/// the frame's average power equals the plain sensing sequence's and the
/// comb holds exactly `1/M'` of it. A cyclic prefix of `cp_len` tail
/// samples is prepended.
///
/// `data` is shaped `[subband][stream 1..M'-1][symbol 0..L_m-1]` with
/// symbols from the constellation.
pub fn de_msqp_build(spec: &DeMsQpSpec, data: &[Vec<Vec<Complex64>>]) -> Result<ComplexSequence> {
    validate_data(spec, data, true)?;
    Ok(build_frame(spec, data))
}

/// [`de_msqp_build`] without the alphabet-membership check; lets tests feed
/// zeroed or otherwise synthetic streams.
#[doc(hidden)]
pub fn de_msqp_build_unchecked(
    spec: &DeMsQpSpec,
    data: &[Vec<Vec<Complex64>>],
) -> Result<ComplexSequence> {
    validate_data(spec, data, false)?;
    Ok(build_frame(spec, data))
}

fn validate_data(spec: &DeMsQpSpec, data: &[Vec<Vec<Complex64>>], check_alphabet: bool) -> Result<()> {
    let m = spec.base.subbands.len();
    if data.len() != m {
        return Err(Error::arg(format!("data has {} subbands, spec has {m}", data.len())));
    }
    for (mi, (per_band, band)) in data.iter().zip(&spec.base.subbands).enumerate() {
        if per_band.len() != spec.extension - 1 {
            return Err(Error::arg(format!(
                "subband {mi}: {} data streams, expected {}",
                per_band.len(),
                spec.extension - 1
            )));
        }
        for (si, stream) in per_band.iter().enumerate() {
            if stream.len() != band.length() {
                return Err(Error::arg(format!(
                    "subband {mi} stream {si}: {} symbols, expected {}",
                    stream.len(),
                    band.length()
                )));
            }
            if check_alphabet {
                if let Some(bad) = stream.iter().find(|s| !spec.constellation.contains(**s)) {
                    return Err(Error::arg(format!(
                        "subband {mi} stream {si}: symbol {bad} not in the constellation"
                    )));
                }
            }
        }
    }
    Ok(())
}

fn build_frame(spec: &DeMsQpSpec, data: &[Vec<Vec<Complex64>>]) -> ComplexSequence {
    let np = spec.frame_len();
    let mp = spec.extension;
    let phases = spec.base.effective_phases();
    let offsets = spec.ext_offsets();
    let mut spectrum = vec![Complex64::ZERO; np];
    for (m, band) in spec.base.subbands.iter().enumerate() {
        let l = band.length();
        let lp = l * mp;
        let scale = Complex64::from_polar((np as f64 / l as f64).sqrt(), phases[m]);
        let comb = dsp::dft_vec(&zc_generate(band).samples, l);
        for (kp, c) in comb.iter().enumerate() {
            spectrum[offsets[m] + mp * kp] = scale * c;
        }
        for i in 1..mp {
            // Ramp the symbols so their spectrum lands shifted by one bin
            // per stream inside the extended grid.
            let ramped: Vec<Complex64> = data[m][i - 1]
                .iter()
                .enumerate()
                .map(|(n, s)| s * Complex64::from_polar(1.0, -TAU * (i * n) as f64 / lp as f64))
                .collect();
            let bins = dsp::dft_vec(&ramped, l);
            for (kp, b) in bins.iter().enumerate() {
                spectrum[offsets[m] + mp * kp + i] = scale * b;
            }
        }
    }
    let body = dsp::idft_vec(&spectrum, np);
    let mut samples = Vec::with_capacity(np + spec.cp_len);
    samples.extend_from_slice(&body[np - spec.cp_len.min(np)..]);
    samples.extend_from_slice(&body);
    ComplexSequence::from_samples(samples).expect("frame is non-empty and finite")
}

/// `(N' - M L'_G) / (N' + L_cp) * (M'-1)/M' * log2 |constellation|` in
/// bit/s/Hz: occupied-bandwidth fraction times data-stream fraction times
/// bits per symbol. The numerator collapses to the integer count of
/// data-carrying bins, so the value is a single exact division.
pub fn spectral_efficiency(spec: &DeMsQpSpec) -> f64 {
    let data_bits = spec.data_symbols_per_frame() * spec.constellation.bits_per_symbol();
    data_bits as f64 / (spec.frame_len() + spec.cp_len) as f64
}

/// Linear chirp parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LfmSpec {
    pub bandwidth_hz: f64,
    pub duration_s: f64,
    pub sample_period_s: f64,
}

impl LfmSpec {
    pub fn new(bandwidth_hz: f64, duration_s: f64, sample_period_s: f64) -> Result<Self> {
        if !(bandwidth_hz > 0.0) || !(duration_s > 0.0) || !(sample_period_s > 0.0) {
            return Err(Error::arg("lfm parameters must be positive"));
        }
        if bandwidth_hz * sample_period_s > 1.0 + 1e-12 {
            return Err(Error::arg(format!(
                "lfm bandwidth {bandwidth_hz} Hz exceeds the {} Hz sampling rate",
                1.0 / sample_period_s
            )));
        }
        Ok(Self { bandwidth_hz, duration_s, sample_period_s })
    }
}

/// Unit-modulus chirp sweeping `[-B/2, B/2]` over the pulse duration.
pub fn lfm_generate(spec: &LfmSpec) -> Result<ComplexSequence> {
    let len = (spec.duration_s / spec.sample_period_s).round() as usize;
    if len == 0 {
        return Err(Error::arg("lfm pulse shorter than one sample"));
    }
    let rate = spec.bandwidth_hz / spec.duration_s;
    let samples = (0..len)
        .map(|n| {
            let t = n as f64 * spec.sample_period_s - spec.duration_s / 2.0;
            Complex64::from_polar(1.0, std::f64::consts::PI * rate * t * t)
        })
        .collect();
    ComplexSequence::new(samples, spec.sample_period_s)
}

/// Binary waveform dump: u64 LE sample count, f64 LE sample period, then
/// interleaved f64 LE (re, im) pairs.
pub fn write_waveform_binary(x: &ComplexSequence, mut w: impl Write) -> std::io::Result<()> {
    w.write_all(&(x.len() as u64).to_le_bytes())?;
    w.write_all(&x.sample_period_s.to_le_bytes())?;
    for s in &x.samples {
        w.write_all(&s.re.to_le_bytes())?;
        w.write_all(&s.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_waveform_binary(mut r: impl Read) -> Result<ComplexSequence> {
    let bad = |msg: &str| Error::arg(format!("waveform stream: {msg}"));
    let mut u = [0u8; 8];
    r.read_exact(&mut u).map_err(|_| bad("truncated header"))?;
    let len = u64::from_le_bytes(u) as usize;
    r.read_exact(&mut u).map_err(|_| bad("truncated header"))?;
    let period = f64::from_le_bytes(u);
    let mut samples = Vec::with_capacity(len);
    for _ in 0..len {
        r.read_exact(&mut u).map_err(|_| bad("truncated samples"))?;
        let re = f64::from_le_bytes(u);
        r.read_exact(&mut u).map_err(|_| bad("truncated samples"))?;
        samples.push(Complex64::new(re, f64::from_le_bytes(u)));
    }
    ComplexSequence::new(samples, period)
}

/// Text dump, one `index,re,im` row per sample.
pub fn write_waveform_csv(x: &ComplexSequence, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "index,re,im")?;
    for (i, s) in x.samples.iter().enumerate() {
        writeln!(w, "{i},{},{}", s.re, s.im)?;
    }
    Ok(())
}

pub fn read_waveform_csv(r: impl Read, sample_period_s: f64) -> Result<ComplexSequence> {
    let bad = |msg: String| Error::arg(format!("waveform csv: {msg}"));
    let mut samples = Vec::new();
    for (i, line) in std::io::BufReader::new(r).lines().enumerate() {
        let line = line.map_err(|e| bad(e.to_string()))?;
        if i == 0 {
            continue;
        }
        let mut fields = line.split(',');
        let mut field = |name: &str| {
            fields
                .next()
                .ok_or_else(|| bad(format!("row {i}: missing {name}")))?
                .trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("row {i}: {name}: {e}")))
        };
        field("index")?;
        let re = field("re")?;
        let im = field("im")?;
        samples.push(Complex64::new(re, im));
    }
    ComplexSequence::new(samples, sample_period_s)
}
