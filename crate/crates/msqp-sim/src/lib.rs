//! Joint radar-communication waveform toolbox built around multi-subband
//! quasi-perfect (MS-QP) sequences.
//!
//! An MS-QP waveform stacks the DFTs of several odd-length Zadoff-Chu
//! sequences onto adjacent subbands separated by guard bins, giving a
//! composite sequence whose cyclic autocorrelation stays quasi-perfect while
//! the bandwidth grows with the number of subbands. The data-embedded
//! variant (DE-MS-QP) time-extends each subband so that phase-rotated data
//! blocks ride on bins interleaved with the sensing comb.
//!
//! Modules:
//! - [`dsp`]: DFT wrappers, resampling, cyclic correlation, PAPR, AWGN
//! - [`waveform`]: ZC / MS-QP / DE-MS-QP / LFM synthesis and phase search
//! - [`channel`]: delay-Doppler echoes with IQ imbalance and phase noise
//! - [`radar`]: subband receiver, range-Doppler map, CFAR and peak extraction
//! - [`comm`]: comb-pilot channel estimation, equalization, demapping
//! - [`harness`]: config-driven experiment scenarios and CSV emission

pub mod channel;
pub mod comm;
pub mod dsp;
pub mod harness;
pub mod radar;
pub mod waveform;

use num_complex::Complex64;

/// Speed of light in vacuum, m/s.
pub const C0: f64 = 299_792_458.0;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no valid root for length {0}")]
    NoValidRoot(usize),
    #[error("invalid config: {}", issues.join("; "))]
    Config { issues: Vec<String> },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Complex baseband samples with a uniform sample period.
///
/// Waveform constructors return sequences normalized to a 1 s sample period;
/// [`ComplexSequence::with_sample_period`] re-stamps them for a concrete
/// front end.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSequence {
    pub samples: Vec<Complex64>,
    pub sample_period_s: f64,
}

impl ComplexSequence {
    pub fn new(samples: Vec<Complex64>, sample_period_s: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::arg("sequence must be non-empty"));
        }
        if !(sample_period_s > 0.0) || !sample_period_s.is_finite() {
            return Err(Error::arg(format!(
                "sample period must be positive and finite, got {sample_period_s}"
            )));
        }
        if let Some(bad) = samples.iter().find(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::arg(format!("non-finite sample {bad}")));
        }
        Ok(Self { samples, sample_period_s })
    }

    /// Same samples at symbol rate 1 (sample period 1 s).
    pub fn from_samples(samples: Vec<Complex64>) -> Result<Self> {
        Self::new(samples, 1.0)
    }

    pub fn with_sample_period(mut self, sample_period_s: f64) -> Result<Self> {
        if !(sample_period_s > 0.0) || !sample_period_s.is_finite() {
            return Err(Error::arg(format!(
                "sample period must be positive and finite, got {sample_period_s}"
            )));
        }
        self.sample_period_s = sample_period_s;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Average power, `mean(|x|^2)`.
    pub fn average_power(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }
}

/// Frequency-domain bins produced by [`dsp::dft`].
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub bins: Vec<Complex64>,
    pub bin_spacing_hz: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }
}
