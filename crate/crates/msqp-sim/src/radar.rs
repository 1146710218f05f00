//! Sensing receiver: per-subband low-rate capture and reassembly, subblock
//! correlation, range-Doppler map, cell-averaging noise floor, and the
//! threshold-exclude detection walk with bin-to-physical-unit conversion.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::waveform::{DeMsQpSpec, MsQpSpec};
use crate::{dsp, ComplexSequence, Error, Result, C0};

/// A CPI worth of received blocks, all the same length, plus the
/// zero-padding factor used when the Doppler axis is transformed.
#[derive(Debug, Clone)]
pub struct SubblockSet {
    blocks: Vec<Vec<Complex64>>,
    block_len: usize,
    sample_period_s: f64,
    fft_pad: usize,
}

impl SubblockSet {
    pub fn new(blocks: Vec<Vec<Complex64>>, sample_period_s: f64, fft_pad: usize) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::arg("need at least one block"));
        }
        let block_len = blocks[0].len();
        if block_len == 0 {
            return Err(Error::arg("blocks must be non-empty"));
        }
        if blocks.iter().any(|b| b.len() != block_len) {
            return Err(Error::arg("all blocks must have the same length"));
        }
        if fft_pad == 0 {
            return Err(Error::arg("fft pad factor must be >= 1"));
        }
        if !(sample_period_s > 0.0) || !sample_period_s.is_finite() {
            return Err(Error::arg("sample period must be positive"));
        }
        Ok(Self { blocks, block_len, sample_period_s, fft_pad })
    }

    pub fn from_sequences(seqs: &[ComplexSequence], fft_pad: usize) -> Result<Self> {
        if seqs.is_empty() {
            return Err(Error::arg("need at least one block"));
        }
        let period = seqs[0].sample_period_s;
        if seqs.iter().any(|s| s.sample_period_s != period) {
            return Err(Error::arg("blocks disagree on the sample period"));
        }
        Self::new(seqs.iter().map(|s| s.samples.clone()).collect(), period, fft_pad)
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn fft_pad(&self) -> usize {
        self.fft_pad
    }

    pub fn sample_period_s(&self) -> f64 {
        self.sample_period_s
    }

    pub fn blocks(&self) -> &[Vec<Complex64>] {
        &self.blocks
    }
}

/// Correlation magnitude over range (rows) and Doppler (columns) plus the
/// bin geometry needed to convert indices to meters and meters per second.
#[derive(Debug, Clone)]
pub struct RangeDopplerMap {
    pub cells: Array2<Complex64>,
    pub sample_period_s: f64,
    pub carrier_hz: f64,
}

impl RangeDopplerMap {
    pub fn num_range_bins(&self) -> usize {
        self.cells.nrows()
    }

    pub fn num_doppler_bins(&self) -> usize {
        self.cells.ncols()
    }

    pub fn power(&self, range_bin: usize, doppler_bin: usize) -> f64 {
        self.cells[[range_bin, doppler_bin]].norm_sqr()
    }

    /// Rows of `range_bin,doppler_bin,power`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let open = |e| Error::Io { path: path.display().to_string(), source: e };
        let mut w = BufWriter::new(File::create(path).map_err(open)?);
        let mut emit = || -> std::io::Result<()> {
            writeln!(w, "range_bin,doppler_bin,power")?;
            for ((n, k), cell) in self.cells.indexed_iter() {
                writeln!(w, "{n},{k},{}", cell.norm_sqr())?;
            }
            w.flush()
        };
        emit().map_err(open)
    }

    /// Little-endian dump: row count, column count, sample period, carrier,
    /// then the complex cells row-major as interleaved re/im doubles.
    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let open = |e| Error::Io { path: path.display().to_string(), source: e };
        let mut w = BufWriter::new(File::create(path).map_err(open)?);
        let mut emit = || -> std::io::Result<()> {
            w.write_all(&(self.cells.nrows() as u64).to_le_bytes())?;
            w.write_all(&(self.cells.ncols() as u64).to_le_bytes())?;
            w.write_all(&self.sample_period_s.to_le_bytes())?;
            w.write_all(&self.carrier_hz.to_le_bytes())?;
            for cell in self.cells.iter() {
                w.write_all(&cell.re.to_le_bytes())?;
                w.write_all(&cell.im.to_le_bytes())?;
            }
            w.flush()
        };
        emit().map_err(open)
    }
}

/// Detector tuning. `threshold` is the linear power ratio a cell must
/// clear over the estimated floor; `temp_radius` is the half-width of the
/// range neighborhood suppressed around an accepted detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfarConfig {
    pub threshold: f64,
    pub train_cells: usize,
    pub guard_cells: usize,
    pub temp_radius: usize,
}

impl CfarConfig {
    pub fn from_db(threshold_db: f64, temp_radius: usize) -> Self {
        Self {
            threshold: 10f64.powf(threshold_db / 10.0),
            train_cells: 32,
            guard_cells: 4,
            temp_radius,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0) || !self.threshold.is_finite() {
            return Err(Error::arg("threshold must be a positive linear ratio"));
        }
        if self.train_cells == 0 {
            return Err(Error::arg("need at least one training cell per side"));
        }
        if self.temp_radius == 0 {
            return Err(Error::arg("exclusion radius must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub range_bin: usize,
    pub doppler_bin: usize,
    pub power: f64,
    pub range_m: f64,
    pub velocity_mps: f64,
}

/// Detections in acceptance order (strongest first) plus the map geometry
/// they index into.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub detections: Vec<Detection>,
    pub range_bins: usize,
    pub doppler_bins: usize,
}

/// Models the low-rate capture path: each subband is selected in the
/// frequency domain, held at its own converter rate, and the composite is
/// reassembled. Energy on guard bins is discarded. Accepts any whole
/// number of composite blocks.
pub fn subband_receive(y: &ComplexSequence, spec: &MsQpSpec) -> Result<ComplexSequence> {
    let n = spec.total_len();
    if y.len() % n != 0 {
        return Err(Error::arg(format!(
            "input length {} is not a multiple of the composite length {n}",
            y.len()
        )));
    }
    let occupied = spec.occupied_bins();
    let mut out = Vec::with_capacity(y.len());
    for chunk in y.samples.chunks_exact(n) {
        let mut spec_bins = chunk.to_vec();
        dsp::fft_forward(&mut spec_bins);
        let mut kept = vec![Complex64::ZERO; n];
        for band in &occupied {
            kept[band.clone()].copy_from_slice(&spec_bins[band.clone()]);
        }
        dsp::fft_inverse(&mut kept);
        out.extend_from_slice(&kept);
    }
    ComplexSequence::new(out, y.sample_period_s)
}

/// Column `q` is the cyclic cross-correlation of block `q` against the
/// reference, so rows index range lag.
pub fn correlate_subblocks(
    rx: &SubblockSet,
    reference: &ComplexSequence,
) -> Result<Array2<Complex64>> {
    let n = rx.block_len();
    if reference.len() != n {
        return Err(Error::arg(format!(
            "reference length {} does not match block length {n}",
            reference.len()
        )));
    }
    let mut ref_spec = reference.samples.clone();
    dsp::fft_forward(&mut ref_spec);
    for v in ref_spec.iter_mut() {
        *v = v.conj();
    }

    let columns: Vec<Vec<Complex64>> = rx
        .blocks()
        .par_iter()
        .map(|block| {
            let mut buf = block.clone();
            dsp::fft_forward(&mut buf);
            for (b, r) in buf.iter_mut().zip(&ref_spec) {
                *b *= r;
            }
            dsp::fft_inverse(&mut buf);
            buf
        })
        .collect();

    let mut corr = Array2::zeros((n, rx.num_blocks()));
    for (q, col) in columns.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            corr[[i, q]] = *v;
        }
    }
    Ok(corr)
}

/// Doppler transform across blocks: each range row is zero-padded to
/// `pad_factor` times the block count and transformed.
pub fn rdm(
    corr: &Array2<Complex64>,
    pad_factor: usize,
    sample_period_s: f64,
    carrier_hz: f64,
) -> Result<RangeDopplerMap> {
    if pad_factor == 0 {
        return Err(Error::arg("fft pad factor must be >= 1"));
    }
    let (n, q) = corr.dim();
    if n == 0 || q == 0 {
        return Err(Error::arg("correlation matrix must be non-empty"));
    }
    let q0 = q * pad_factor;
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut buf = vec![Complex64::ZERO; q0];
            for (b, v) in buf.iter_mut().zip(corr.row(i)) {
                *b = *v;
            }
            dsp::fft_forward(&mut buf);
            buf
        })
        .collect();
    let mut cells = Array2::zeros((n, q0));
    for (i, row) in rows.iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            cells[[i, k]] = *v;
        }
    }
    Ok(RangeDopplerMap { cells, sample_period_s, carrier_hz })
}

/// Correlation plus Doppler transform using the geometry carried by the
/// subblock set.
pub fn range_doppler_map(
    rx: &SubblockSet,
    reference: &ComplexSequence,
    carrier_hz: f64,
) -> Result<RangeDopplerMap> {
    let corr = correlate_subblocks(rx, reference)?;
    rdm(&corr, rx.fft_pad(), rx.sample_period_s(), carrier_hz)
}

/// Cell-averaging floor estimate: per Doppler column, the mean power over
/// `train_cells` range cells on each side of the cell under test, skipping
/// `guard_cells` neighbors, wrapping cyclically.
pub fn cfar_floor(map: &RangeDopplerMap, cfg: &CfarConfig) -> Result<Array2<f64>> {
    cfg.validate()?;
    let (n, q0) = map.cells.dim();
    let window = 2 * (cfg.train_cells + cfg.guard_cells) + 1;
    if window > n {
        return Err(Error::arg(format!(
            "training window of {window} cells does not fit {n} range bins"
        )));
    }
    let t = cfg.train_cells;
    let g = cfg.guard_cells;
    let mut floor = Array2::zeros((n, q0));
    let mut power = vec![0.0f64; n];
    let mut prefix = vec![0.0f64; n + 1];
    for k in 0..q0 {
        for i in 0..n {
            power[i] = map.cells[[i, k]].norm_sqr();
            prefix[i + 1] = prefix[i] + power[i];
        }
        let total = prefix[n];
        // Sum over a cyclic index window [a, a+len).
        let window_sum = |a: usize, len: usize| -> f64 {
            let a = a % n;
            if a + len <= n {
                prefix[a + len] - prefix[a]
            } else {
                (total - prefix[a]) + prefix[a + len - n]
            }
        };
        for i in 0..n {
            let lead = window_sum(i + g + 1, t);
            let lag = window_sum(i + n - g - t, t);
            floor[[i, k]] = (lead + lag) / (2 * t) as f64;
        }
    }
    Ok(floor)
}

fn doppler_argmax(map: &RangeDopplerMap, n: usize) -> (usize, f64) {
    let mut best_k = 0;
    let mut best = f64::NEG_INFINITY;
    for (k, cell) in map.cells.row(n).iter().enumerate() {
        let p = cell.norm_sqr();
        if p > best {
            best = p;
            best_k = k;
        }
    }
    (best_k, best)
}

/// Threshold-exclude detection walk. Each range bin is reduced to its
/// strongest Doppler cell up front; bins are then visited strongest first,
/// and an accepted detection suppresses every range bin within
/// `temp_radius` (cyclically) so correlation sidelobes of a strong return
/// cannot re-trigger. Rejected bins are simply consumed.
pub fn temp_detect(
    map: &RangeDopplerMap,
    floor: &Array2<f64>,
    cfg: &CfarConfig,
) -> Result<DetectionReport> {
    cfg.validate()?;
    let (n, q0) = map.cells.dim();
    if floor.dim() != (n, q0) {
        return Err(Error::arg("floor matrix does not match the map dimensions"));
    }

    let per_bin: Vec<(usize, f64)> = (0..n).map(|i| doppler_argmax(map, i)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| per_bin[b].1.total_cmp(&per_bin[a].1).then(a.cmp(&b)));

    let mut excluded = vec![false; n];
    let mut detections = Vec::new();
    for &i in &order {
        if excluded[i] {
            continue;
        }
        let (k, p) = per_bin[i];
        if p >= cfg.threshold * floor[[i, k]] {
            detections.push(Detection {
                range_bin: i,
                doppler_bin: k,
                power: p,
                range_m: estimate_range(i, map.sample_period_s),
                velocity_mps: estimate_velocity(k, q0, n, map.carrier_hz, map.sample_period_s),
            });
            for d in 0..=cfg.temp_radius {
                excluded[(i + d) % n] = true;
                excluded[(i + n - d % n) % n] = true;
            }
        } else {
            excluded[i] = true;
        }
    }
    Ok(DetectionReport { detections, range_bins: n, doppler_bins: q0 })
}

/// Round-trip range of a correlation lag: `c0 * n * T_s / 2`.
pub fn estimate_range(range_bin: usize, sample_period_s: f64) -> f64 {
    C0 * range_bin as f64 * sample_period_s / 2.0
}

/// Radial velocity of a Doppler bin; bins in the upper half alias to
/// negative velocities.
pub fn estimate_velocity(
    doppler_bin: usize,
    doppler_bins: usize,
    block_len: usize,
    carrier_hz: f64,
    sample_period_s: f64,
) -> f64 {
    let k = if (doppler_bin as f64) < doppler_bins as f64 / 2.0 {
        doppler_bin as f64
    } else {
        doppler_bin as f64 - doppler_bins as f64
    };
    C0 * k / (2.0 * doppler_bins as f64 * block_len as f64 * carrier_hz * sample_period_s)
}

/// Strips the cyclic prefix and cuts the frame body into `extension`
/// blocks of the base composite length. Requires the extended guard to be
/// `extension` times the base guard, otherwise the body is not a whole
/// number of base blocks.
pub fn de_msqp_split(
    frame_rx: &ComplexSequence,
    spec: &DeMsQpSpec,
    fft_pad: usize,
) -> Result<SubblockSet> {
    let n = spec.base.total_len();
    let m_ext = spec.extension;
    if spec.guard_len_ext != spec.base.guard_len * m_ext {
        return Err(Error::arg(format!(
            "subblock split needs the extended guard matched to the base guard \
             ({} = {} * {}), got {}",
            spec.base.guard_len * m_ext,
            m_ext,
            spec.base.guard_len,
            spec.guard_len_ext
        )));
    }
    let expected = spec.cp_len + m_ext * n;
    if frame_rx.len() != expected {
        return Err(Error::arg(format!(
            "frame length {} does not match cp {} plus {m_ext} blocks of {n}",
            frame_rx.len(),
            spec.cp_len
        )));
    }
    let body = &frame_rx.samples[spec.cp_len..];
    let blocks = body.chunks_exact(n).map(|c| c.to_vec()).collect();
    SubblockSet::new(blocks, frame_rx.sample_period_s, fft_pad)
}

/// Greedy pairing of detections against ground-truth bins: detections are
/// taken strongest first and claim the first unused truth within the given
/// cyclic bin tolerances. Leftover detections are false alarms; leftover
/// truths are misses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchOutcome {
    /// `(truth index, detection index)` pairs.
    pub pairs: Vec<(usize, usize)>,
    pub false_alarms: Vec<usize>,
    pub missed: Vec<usize>,
}

pub fn match_detections(
    report: &DetectionReport,
    truth_bins: &[(usize, usize)],
    range_tol: usize,
    doppler_tol: usize,
) -> MatchOutcome {
    let cyc = |a: usize, b: usize, n: usize| -> usize {
        let d = (a + n - b) % n;
        d.min(n - d)
    };
    let mut used = vec![false; truth_bins.len()];
    let mut pairs = Vec::new();
    let mut false_alarms = Vec::new();
    for (di, det) in report.detections.iter().enumerate() {
        let hit = truth_bins.iter().enumerate().find(|(ti, (tn, tk))| {
            !used[*ti]
                && cyc(det.range_bin, *tn, report.range_bins) <= range_tol
                && cyc(det.doppler_bin, *tk, report.doppler_bins) <= doppler_tol
        });
        match hit {
            Some((ti, _)) => {
                used[ti] = true;
                pairs.push((ti, di));
            }
            None => false_alarms.push(di),
        }
    }
    let missed = (0..truth_bins.len()).filter(|&ti| !used[ti]).collect();
    MatchOutcome { pairs, false_alarms, missed }
}
