//! Data receiver for the embedded-frame waveform: bin extraction per
//! subband and stream, channel estimation off the sensing comb, one-tap
//! equalization, per-stream inverse transform with phase restoration, and
//! minimum-distance symbol decisions with bit-error accounting.

use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::waveform::{zc_generate, DeMsQpSpec};
use crate::{dsp, ComplexSequence, Error, Result};

const TAU: f64 = std::f64::consts::TAU;

/// Frequency-domain view of one received frame body: `bins[m][i][k']` is
/// the bin of subband `m`, stream `i`, comb index `k'`. Stream 0 carries
/// the sensing comb; streams `1..M'` carry data.
#[derive(Debug, Clone)]
pub struct StreamGrid {
    bins: Vec<Vec<Vec<Complex64>>>,
}

impl StreamGrid {
    pub fn num_subbands(&self) -> usize {
        self.bins.len()
    }

    pub fn num_streams(&self) -> usize {
        self.bins.first().map_or(0, |b| b.len())
    }

    pub fn bins(&self, subband: usize, stream: usize) -> &[Complex64] {
        &self.bins[subband][stream]
    }
}

/// Bit-error bookkeeping for one measurement point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerReport {
    pub bits_total: u64,
    pub bits_errored: u64,
    pub ber: f64,
}

/// Drops the cyclic prefix, leaving the frame body the receiver works on.
pub fn strip_cp(frame: &ComplexSequence, spec: &DeMsQpSpec) -> Result<ComplexSequence> {
    let expected = spec.frame_len() + spec.cp_len;
    if frame.len() != expected {
        return Err(Error::arg(format!(
            "frame length {} does not match body {} plus cp {}",
            frame.len(),
            spec.frame_len(),
            spec.cp_len
        )));
    }
    ComplexSequence::new(frame.samples[spec.cp_len..].to_vec(), frame.sample_period_s)
}

/// Transforms the frame body and sorts each subband's bins into residue
/// classes: bin `M' k' + i` belongs to stream `i`.
pub fn extract_streams(body: &ComplexSequence, spec: &DeMsQpSpec) -> Result<StreamGrid> {
    let np = spec.frame_len();
    if body.len() != np {
        return Err(Error::arg(format!(
            "body length {} does not match the frame body {np} (is the cp stripped?)",
            body.len()
        )));
    }
    let mut spectrum = body.samples.clone();
    dsp::fft_forward(&mut spectrum);
    let mp = spec.extension;
    let offsets = spec.ext_offsets();
    let bins = spec
        .base
        .subbands
        .iter()
        .enumerate()
        .map(|(m, band)| {
            let l = band.length();
            (0..mp)
                .map(|i| (0..l).map(|kp| spectrum[offsets[m] + mp * kp + i]).collect())
                .collect()
        })
        .collect();
    Ok(StreamGrid { bins })
}

/// The comb bins the transmitter is known to have sent, per subband.
fn comb_reference(spec: &DeMsQpSpec) -> Vec<Vec<Complex64>> {
    let np = spec.frame_len();
    let phases = spec.base.effective_phases();
    spec.base
        .subbands
        .iter()
        .enumerate()
        .map(|(m, band)| {
            let scale =
                Complex64::from_polar((np as f64 / band.length() as f64).sqrt(), phases[m]);
            dsp::dft_vec(&zc_generate(band).samples, band.length())
                .into_iter()
                .map(|b| scale * b)
                .collect()
        })
        .collect()
}

/// Per-bin gains from the sensing comb: least squares on each comb bin,
/// linear interpolation (cyclic across the subband edge) onto the bins in
/// between. Comb bins with a vanishing reference are skipped and covered
/// by interpolation from their neighbors.
pub fn channel_estimate(grid: &StreamGrid, spec: &DeMsQpSpec) -> Result<Vec<Vec<Complex64>>> {
    let mp = spec.extension;
    if grid.num_subbands() != spec.base.subbands.len() || grid.num_streams() != mp {
        return Err(Error::arg("grid does not match the frame layout"));
    }
    let reference = comb_reference(spec);
    let mut gains = Vec::with_capacity(grid.num_subbands());
    for (m, band) in spec.base.subbands.iter().enumerate() {
        let l = band.length();
        let lp = l * mp;
        let comb = grid.bins(m, 0);
        let anchors: Vec<(usize, Complex64)> = (0..l)
            .filter(|&kp| reference[m][kp].norm_sqr() > 1e-24)
            .map(|kp| (mp * kp, comb[kp] / reference[m][kp]))
            .collect();
        if anchors.is_empty() {
            return Err(Error::arg(format!("subband {m}: no usable reference bins")));
        }
        let mut per_bin = Vec::with_capacity(lp);
        for j in 0..lp {
            // Bracketing anchors around bin j, cyclically.
            let hi = anchors.partition_point(|&(p, _)| p <= j) % anchors.len();
            let lo = (hi + anchors.len() - 1) % anchors.len();
            let (pa, ga) = anchors[lo];
            let (pb, gb) = anchors[hi];
            let span = (pb + lp - pa) % lp;
            if span == 0 {
                per_bin.push(ga);
            } else {
                let alpha = ((j + lp - pa) % lp) as f64 / span as f64;
                per_bin.push(ga * (1.0 - alpha) + gb * alpha);
            }
        }
        gains.push(per_bin);
    }
    Ok(gains)
}

/// Constant gain for every bin, shaped like [`channel_estimate`] output.
pub fn flat_gains(spec: &DeMsQpSpec, gain: Complex64) -> Vec<Vec<Complex64>> {
    spec.base
        .subbands
        .iter()
        .map(|band| vec![gain; band.length() * spec.extension])
        .collect()
}

/// One-tap equalization, per-stream inverse transform, phase restoration,
/// and minimum-distance decisions. Returns symbol indices shaped
/// `[subband][stream 1..M'-1][symbol]`, matching the transmit layout.
pub fn equalize_and_demap(
    grid: &StreamGrid,
    gains: &[Vec<Complex64>],
    spec: &DeMsQpSpec,
) -> Result<Vec<Vec<Vec<usize>>>> {
    let mp = spec.extension;
    if grid.num_subbands() != spec.base.subbands.len() || grid.num_streams() != mp {
        return Err(Error::arg("grid does not match the frame layout"));
    }
    if gains.len() != spec.base.subbands.len() {
        return Err(Error::arg("gain table does not match the subband count"));
    }
    let np = spec.frame_len();
    let phases = spec.base.effective_phases();
    for (m, band) in spec.base.subbands.iter().enumerate() {
        let lp = band.length() * mp;
        if gains[m].len() != lp {
            return Err(Error::arg(format!("subband {m}: expected {lp} gains")));
        }
        if let Some(j) = gains[m].iter().position(|g| !(g.norm_sqr() > 0.0)) {
            return Err(Error::arg(format!("subband {m}: unusable gain at bin {j}")));
        }
    }

    let decided: Vec<Vec<Vec<usize>>> = spec
        .base
        .subbands
        .par_iter()
        .enumerate()
        .map(|(m, band)| {
            let l = band.length();
            let lp = l * mp;
            let descale = (l as f64 / np as f64).sqrt();
            (1..mp)
                .map(|i| {
                    let eq: Vec<Complex64> = (0..l)
                        .map(|kp| grid.bins(m, i)[kp] / gains[m][mp * kp + i])
                        .collect();
                    let time = dsp::idft_vec(&eq, l);
                    time.iter()
                        .enumerate()
                        .map(|(n, s)| {
                            let undo = Complex64::from_polar(
                                descale,
                                TAU * (i * n) as f64 / lp as f64 - phases[m],
                            );
                            spec.constellation.decide(s * undo)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(decided)
}

/// Full receive chain: extract, estimate off the comb, equalize, decide.
pub fn demodulate_frame(
    body: &ComplexSequence,
    spec: &DeMsQpSpec,
) -> Result<Vec<Vec<Vec<usize>>>> {
    let grid = extract_streams(body, spec)?;
    let gains = channel_estimate(&grid, spec)?;
    equalize_and_demap(&grid, &gains, spec)
}

/// Symbol indices flattened to bits in transmit order (subband, stream,
/// symbol; least-significant bit of each index first).
pub fn bits_from_indices(
    indices: &[Vec<Vec<usize>>],
    constellation: &crate::waveform::Constellation,
) -> Vec<bool> {
    let mut bits = Vec::new();
    for per_band in indices {
        for stream in per_band {
            for &idx in stream {
                bits.extend(constellation.bits(idx));
            }
        }
    }
    bits
}

pub fn ber_count(tx_bits: &[bool], rx_bits: &[bool]) -> Result<BerReport> {
    if tx_bits.len() != rx_bits.len() {
        return Err(Error::arg(format!(
            "bit streams differ in length: {} vs {}",
            tx_bits.len(),
            rx_bits.len()
        )));
    }
    let errored = tx_bits.iter().zip(rx_bits).filter(|(a, b)| a != b).count() as u64;
    let total = tx_bits.len() as u64;
    Ok(BerReport {
        bits_total: total,
        bits_errored: errored,
        ber: if total == 0 { 0.0 } else { errored as f64 / total as f64 },
    })
}

/// Upper tail of the standard normal distribution. Rational approximation
/// with absolute error below 1e-7, plenty for comparing Monte Carlo BER
/// against the closed form.
pub fn gaussian_tail_q(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - gaussian_tail_q(-x);
    }
    let z = x / std::f64::consts::SQRT_2;
    let t = 1.0 / (1.0 + 0.3275911 * z);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    0.5 * poly * (-z * z).exp()
}

/// Packed bit dump: u64 LE count, then bytes filled least significant bit
/// first.
pub fn write_bits_packed(bits: &[bool], mut w: impl Write) -> std::io::Result<()> {
    w.write_all(&(bits.len() as u64).to_le_bytes())?;
    for chunk in bits.chunks(8) {
        let mut byte = 0u8;
        for (i, &b) in chunk.iter().enumerate() {
            if b {
                byte |= 1 << i;
            }
        }
        w.write_all(&[byte])?;
    }
    Ok(())
}

pub fn read_bits_packed(mut r: impl Read) -> Result<Vec<bool>> {
    let io = |e| Error::Io { path: "<bits>".into(), source: e };
    let mut header = [0u8; 8];
    r.read_exact(&mut header).map_err(io)?;
    let count = u64::from_le_bytes(header) as usize;
    let mut bytes = vec![0u8; count.div_ceil(8)];
    r.read_exact(&mut bytes).map_err(io)?;
    Ok((0..count).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect())
}
