//! Scenario config schema: versioned TOML with nested tables, unknown
//! keys rejected, and a validation pass that reports every offending
//! field at once.

use std::path::Path;

use serde::Deserialize;

use crate::channel::ChannelConfig;
use crate::waveform::{
    zc_root_design, Constellation, DeMsQpSpec, LfmSpec, MsQpSpec, ZcParams,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Papr,
    RootDesign,
    FalseAlarm,
    Ranging,
    Velocity,
    Tradeoff,
    Xcorr,
    LoopbackBer,
}

impl Scenario {
    pub fn id(&self) -> &'static str {
        match self {
            Scenario::Papr => "papr",
            Scenario::RootDesign => "root-design",
            Scenario::FalseAlarm => "false-alarm",
            Scenario::Ranging => "ranging",
            Scenario::Velocity => "velocity",
            Scenario::Tradeoff => "tradeoff",
            Scenario::Xcorr => "xcorr",
            Scenario::LoopbackBer => "loopback-ber",
        }
    }

    pub fn all() -> [Scenario; 8] {
        [
            Scenario::Papr,
            Scenario::RootDesign,
            Scenario::FalseAlarm,
            Scenario::Ranging,
            Scenario::Velocity,
            Scenario::Tradeoff,
            Scenario::Xcorr,
            Scenario::LoopbackBer,
        ]
    }

    pub fn describe(&self) -> &'static str {
        match self {
            Scenario::Papr => "peak-to-average power before and after phase rotation search",
            Scenario::RootDesign => {
                "sidelobe placement under Doppler for designed vs naive roots"
            }
            Scenario::FalseAlarm => "false-alarm rate vs detection threshold, both root designs",
            Scenario::Ranging => "mean ranging error per waveform arm",
            Scenario::Velocity => "mean velocity error per waveform arm",
            Scenario::Tradeoff => "sensing accuracy vs data-stream extension factor",
            Scenario::Xcorr => "random-data cross-correlation level against the power bound",
            Scenario::LoopbackBer => "frame loopback bit error rate, noiseless and vs Eb/N0",
        }
    }
}

/// Root selection for subband sequences: the designed pair midpoint, one
/// fixed root for every subband, or an explicit per-subband list.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum RootChoice {
    Named(RootPolicy),
    Fixed(usize),
    PerSubband(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootPolicy {
    Designed,
}

impl Default for RootChoice {
    fn default() -> Self {
        RootChoice::Named(RootPolicy::Designed)
    }
}

impl RootChoice {
    /// Concrete roots for `count` subbands of (already scaled) length `len`.
    pub fn resolve(&self, count: usize, len: usize) -> Result<Vec<usize>> {
        match self {
            RootChoice::Named(RootPolicy::Designed) => {
                Ok(vec![zc_root_design(len)?; count])
            }
            RootChoice::Fixed(r) => Ok(vec![*r; count]),
            RootChoice::PerSubband(list) => {
                if list.len() != count {
                    return Err(Error::arg(format!(
                        "{} roots listed for {count} subbands",
                        list.len()
                    )));
                }
                Ok(list.clone())
            }
        }
    }

    fn is_explicit(&self) -> bool {
        !matches!(self, RootChoice::Named(RootPolicy::Designed))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WaveformTable {
    Msqp {
        subband_count: usize,
        subband_len: usize,
        guard_len: usize,
        #[serde(default)]
        roots: RootChoice,
        #[serde(default)]
        phases: Option<Vec<f64>>,
        /// Model per-subband low-rate converters on receive.
        #[serde(default)]
        low_rate_frontend: bool,
    },
    Zc {
        length: usize,
        #[serde(default)]
        root: Option<usize>,
    },
    Lfm {
        bandwidth_hz: f64,
        duration_s: f64,
    },
    DeMsqp {
        subband_count: usize,
        subband_len: usize,
        guard_len: usize,
        #[serde(default)]
        roots: RootChoice,
        extension: usize,
        #[serde(default)]
        cp_len: usize,
    },
}

impl WaveformTable {
    pub fn kind_label(&self) -> &'static str {
        match self {
            WaveformTable::Msqp { .. } => "msqp",
            WaveformTable::Zc { .. } => "zc",
            WaveformTable::Lfm { .. } => "lfm",
            WaveformTable::DeMsqp { .. } => "de-msqp",
        }
    }

    fn uses_explicit_roots(&self) -> bool {
        match self {
            WaveformTable::Msqp { roots, .. } | WaveformTable::DeMsqp { roots, .. } => {
                roots.is_explicit()
            }
            WaveformTable::Zc { root, .. } => root.is_some(),
            WaveformTable::Lfm { .. } => false,
        }
    }
}

fn default_gain() -> f64 {
    1.0
}

/// Per-trial uniform target draw; gain is a fixed real amplitude.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetDraw {
    pub count: usize,
    pub range_m: [f64; 2],
    pub velocity_mps: [f64; 2],
    #[serde(default = "default_gain")]
    pub gain: f64,
}

impl TargetDraw {
    /// Range bounds shrink with the geometry so scaled-down runs keep
    /// their scenes inside the unambiguous window. Velocities stay put:
    /// the velocity window widens as blocks get shorter.
    pub fn at_scale(&self, scale: f64) -> TargetDraw {
        TargetDraw {
            range_m: [self.range_m[0] * scale, self.range_m[1] * scale],
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpiTable {
    /// Subblocks per processing interval (Q).
    pub blocks: usize,
    /// Doppler-axis zero-pad factor (w).
    pub fft_pad: usize,
}

fn default_train() -> usize {
    32
}

fn default_guard() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CfarTable {
    pub threshold_db: Vec<f64>,
    pub temp_radius: usize,
    #[serde(default = "default_train")]
    pub train_cells: usize,
    #[serde(default = "default_guard")]
    pub guard_cells: usize,
}

impl CfarTable {
    pub fn at_db(&self, db: f64) -> crate::radar::CfarConfig {
        crate::radar::CfarConfig {
            threshold: 10f64.powf(db / 10.0),
            train_cells: self.train_cells,
            guard_cells: self.guard_cells,
            temp_radius: self.temp_radius,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaprTable {
    pub alphabet_rad: Vec<f64>,
    #[serde(default)]
    pub waveform_out: Option<String>,
}

fn default_gate_db() -> f64 {
    -20.0
}

fn default_neighborhood() -> usize {
    40
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RootDesignTable {
    pub length: usize,
    /// Product of normalized Doppler and sequence length (v * L).
    pub doppler_length_product: f64,
    pub contrast_root: usize,
    #[serde(default = "default_gate_db")]
    pub gate_db: f64,
    #[serde(default = "default_neighborhood")]
    pub neighborhood: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FalseAlarmTable {
    pub contrast_root: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TradeoffTable {
    pub extensions: Vec<usize>,
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub cp_len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XcorrGeometry {
    pub subband_count: usize,
    pub subband_len: usize,
    pub guard_len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XcorrTable {
    pub geometries: Vec<XcorrGeometry>,
}

fn default_min_errors() -> u64 {
    100
}

fn default_max_frames() -> u64 {
    100_000
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopbackTable {
    pub ebn0_db: Vec<f64>,
    #[serde(default = "default_true")]
    pub include_noiseless: bool,
    #[serde(default = "default_min_errors")]
    pub min_errors: u64,
    #[serde(default = "default_max_frames")]
    pub max_frames: u64,
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub scenario: Scenario,
    pub trials: u64,
    pub base_seed: u64,
    #[serde(default = "default_scale")]
    pub scale: f64,

    #[serde(default)]
    pub channel: Option<ChannelConfig>,
    #[serde(default)]
    pub target_draw: Option<TargetDraw>,
    #[serde(default)]
    pub cpi: Option<CpiTable>,
    #[serde(default)]
    pub cfar: Option<CfarTable>,
    #[serde(default)]
    pub waveform: Option<WaveformTable>,
    #[serde(default)]
    pub arms: Option<Vec<WaveformTable>>,

    #[serde(default)]
    pub papr: Option<PaprTable>,
    #[serde(default)]
    pub root_design: Option<RootDesignTable>,
    #[serde(default)]
    pub false_alarm: Option<FalseAlarmTable>,
    #[serde(default)]
    pub tradeoff: Option<TradeoffTable>,
    #[serde(default)]
    pub xcorr: Option<XcorrTable>,
    #[serde(default)]
    pub loopback: Option<LoopbackTable>,
}

/// Command-line overrides applied on top of a parsed config.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub scale: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)
            .map_err(|e| Error::Config { issues: vec![e.to_string()] })?;
        if cfg.schema_version != 1 {
            return Err(Error::Config {
                issues: vec![format!(
                    "unsupported schema_version {}, expected 1",
                    cfg.schema_version
                )],
            });
        }
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
        Self::from_toml(&text)
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(seed) = overrides.seed {
            self.base_seed = seed;
        }
        if let Some(trials) = overrides.trials {
            self.trials = trials;
        }
        if let Some(scale) = overrides.scale {
            self.scale = scale;
        }
    }

    /// Collects every problem instead of stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        if self.trials == 0 {
            issues.push("trials must be >= 1".into());
        }
        if !(self.scale > 0.0 && self.scale <= 1.0) {
            issues.push(format!("scale {} outside (0, 1]", self.scale));
        }

        let need = |issues: &mut Vec<String>, present: bool, what: &str| {
            if !present {
                issues.push(format!("scenario {} needs {what}", self.scenario.id()));
            }
        };
        let radar_tables = |issues: &mut Vec<String>| {
            need(issues, self.channel.is_some(), "a [channel] table");
            need(issues, self.cpi.is_some(), "a [cpi] table");
            need(issues, self.cfar.is_some(), "a [cfar] table");
            need(issues, self.target_draw.is_some(), "a [target_draw] table");
        };

        match self.scenario {
            Scenario::Papr => {
                need(&mut issues, self.papr.is_some(), "a [papr] table");
                need(
                    &mut issues,
                    matches!(self.waveform, Some(WaveformTable::Msqp { .. })),
                    "an msqp [waveform] table",
                );
                if let Some(p) = &self.papr {
                    if p.alphabet_rad.is_empty() {
                        issues.push("papr.alphabet_rad must not be empty".into());
                    }
                }
            }
            Scenario::RootDesign => {
                need(&mut issues, self.root_design.is_some(), "a [root_design] table");
            }
            Scenario::FalseAlarm => {
                radar_tables(&mut issues);
                need(&mut issues, self.false_alarm.is_some(), "a [false_alarm] table");
                need(
                    &mut issues,
                    matches!(self.waveform, Some(WaveformTable::Msqp { .. })),
                    "an msqp [waveform] table",
                );
            }
            Scenario::Ranging | Scenario::Velocity => {
                radar_tables(&mut issues);
                match &self.arms {
                    None => issues.push(format!(
                        "scenario {} needs an [[arms]] list",
                        self.scenario.id()
                    )),
                    Some(arms) if arms.is_empty() => {
                        issues.push("[[arms]] must not be empty".into())
                    }
                    Some(arms) => {
                        for (i, arm) in arms.iter().enumerate() {
                            if matches!(arm, WaveformTable::DeMsqp { .. }) {
                                issues.push(format!(
                                    "arm {i}: de-msqp arms belong to the tradeoff scenario"
                                ));
                            }
                        }
                    }
                }
                if let Some(cfar) = &self.cfar {
                    if cfar.threshold_db.len() != 1 {
                        issues.push("this scenario sweeps no threshold: give exactly one".into());
                    }
                }
            }
            Scenario::Tradeoff => {
                radar_tables(&mut issues);
                need(&mut issues, self.tradeoff.is_some(), "a [tradeoff] table");
                need(
                    &mut issues,
                    matches!(self.waveform, Some(WaveformTable::Msqp { .. })),
                    "an msqp [waveform] table for the frame base",
                );
                if let (Some(t), Some(cpi)) = (&self.tradeoff, &self.cpi) {
                    if t.extensions.is_empty() {
                        issues.push("tradeoff.extensions must not be empty".into());
                    }
                    if t.snr_db.is_empty() {
                        issues.push("tradeoff.snr_db must not be empty".into());
                    }
                    for &m in &t.extensions {
                        if m == 0 || cpi.blocks % m.max(1) != 0 {
                            issues.push(format!(
                                "extension {m} does not divide cpi.blocks = {}",
                                cpi.blocks
                            ));
                        }
                    }
                }
                if let Some(cfar) = &self.cfar {
                    if cfar.threshold_db.len() != 1 {
                        issues.push("this scenario sweeps no threshold: give exactly one".into());
                    }
                }
            }
            Scenario::Xcorr => {
                need(&mut issues, self.xcorr.is_some(), "an [xcorr] table");
                if let Some(x) = &self.xcorr {
                    if x.geometries.is_empty() {
                        issues.push("xcorr.geometries must not be empty".into());
                    }
                }
            }
            Scenario::LoopbackBer => {
                need(&mut issues, self.loopback.is_some(), "a [loopback] table");
                need(
                    &mut issues,
                    matches!(self.waveform, Some(WaveformTable::DeMsqp { .. })),
                    "a de-msqp [waveform] table",
                );
                if let Some(WaveformTable::DeMsqp { extension, .. }) = &self.waveform {
                    if *extension < 2 {
                        issues.push("loopback needs extension >= 2 so frames carry data".into());
                    }
                }
                if let Some(lb) = &self.loopback {
                    if lb.ebn0_db.is_empty() && !lb.include_noiseless {
                        issues.push("loopback sweep has no points at all".into());
                    }
                }
            }
        }

        if let Some(cpi) = &self.cpi {
            if cpi.blocks == 0 {
                issues.push("cpi.blocks must be >= 1".into());
            }
            if cpi.fft_pad == 0 {
                issues.push("cpi.fft_pad must be >= 1".into());
            }
        }
        if let Some(cfar) = &self.cfar {
            if cfar.threshold_db.is_empty() {
                issues.push("cfar.threshold_db must not be empty".into());
            }
            if cfar.temp_radius == 0 {
                issues.push("cfar.temp_radius must be >= 1".into());
            }
        }
        if let Some(draw) = &self.target_draw {
            if draw.count == 0 {
                issues.push("target_draw.count must be >= 1".into());
            }
            if draw.range_m[1] < draw.range_m[0] {
                issues.push("target_draw.range_m span is reversed".into());
            }
            if draw.velocity_mps[1] < draw.velocity_mps[0] {
                issues.push("target_draw.velocity_mps span is reversed".into());
            }
            if !(draw.gain > 0.0) {
                issues.push("target_draw.gain must be positive".into());
            }
        }
        if let Some(channel) = &self.channel {
            if let Err(e) = channel.validate() {
                issues.push(e.to_string());
            }
        }
        if self.scale != 1.0 {
            let explicit = self.waveform.iter().chain(self.arms.iter().flatten());
            for w in explicit {
                if w.uses_explicit_roots() {
                    issues.push(
                        "scale != 1 cannot re-derive explicit roots; use roots = \"designed\""
                            .into(),
                    );
                }
            }
        }

        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config { issues })
        }
    }
}

/// Nearest odd length to `len * scale`, at least 3.
pub fn scaled_odd_len(len: usize, scale: f64) -> usize {
    let scaled = (len as f64 * scale).round() as usize;
    let odd = if scaled % 2 == 0 { scaled + 1 } else { scaled };
    odd.max(3)
}

/// Nearest positive count to `count * scale`.
pub fn scaled_count(count: usize, scale: f64) -> usize {
    ((count as f64 * scale).round() as usize).max(1)
}

/// A waveform table turned into something the scenarios can transmit.
pub struct BuiltWaveform {
    pub label: String,
    pub reference: crate::ComplexSequence,
    /// Set when the receive path models per-subband low-rate converters.
    pub frontend: Option<MsQpSpec>,
}

impl WaveformTable {
    /// Instantiates the waveform at the given scale and sample period.
    pub fn build(&self, scale: f64, sample_period_s: f64) -> Result<BuiltWaveform> {
        match self {
            WaveformTable::Msqp {
                subband_count,
                subband_len,
                guard_len,
                roots,
                phases,
                low_rate_frontend,
            } => {
                let spec = build_msqp(
                    *subband_count,
                    *subband_len,
                    *guard_len,
                    roots,
                    phases.as_deref(),
                    scale,
                )?;
                let reference =
                    crate::waveform::msqp_build(&spec)?.with_sample_period(sample_period_s)?;
                Ok(BuiltWaveform {
                    label: self.kind_label().to_string(),
                    reference,
                    frontend: low_rate_frontend.then_some(spec),
                })
            }
            WaveformTable::Zc { length, root } => {
                let len = scaled_odd_len(*length, scale);
                let root = match root {
                    Some(r) => *r,
                    None => zc_root_design(len)?,
                };
                let reference = crate::waveform::zc_generate(&ZcParams::new(len, root)?)
                    .with_sample_period(sample_period_s)?;
                Ok(BuiltWaveform {
                    label: self.kind_label().to_string(),
                    reference,
                    frontend: None,
                })
            }
            WaveformTable::Lfm { bandwidth_hz, duration_s } => {
                let spec =
                    LfmSpec::new(*bandwidth_hz, duration_s * scale, sample_period_s)?;
                Ok(BuiltWaveform {
                    label: self.kind_label().to_string(),
                    reference: crate::waveform::lfm_generate(&spec)?,
                    frontend: None,
                })
            }
            WaveformTable::DeMsqp { .. } => Err(Error::arg(
                "de-msqp waveforms are driven by the tradeoff/loopback scenarios",
            )),
        }
    }

    /// The frame spec behind a de-msqp table, with the guard matched so the
    /// body splits into whole sensing blocks.
    pub fn build_de_spec(&self, scale: f64, constellation: Constellation) -> Result<DeMsQpSpec> {
        match self {
            WaveformTable::DeMsqp {
                subband_count,
                subband_len,
                guard_len,
                roots,
                extension,
                cp_len,
            } => {
                let base =
                    build_msqp(*subband_count, *subband_len, *guard_len, roots, None, scale)?;
                DeMsQpSpec::with_matched_guard(base, *extension, *cp_len, constellation)
            }
            _ => Err(Error::arg("not a de-msqp waveform table")),
        }
    }
}

pub fn build_msqp(
    count: usize,
    len: usize,
    guard: usize,
    roots: &RootChoice,
    phases: Option<&[f64]>,
    scale: f64,
) -> Result<MsQpSpec> {
    let len = scaled_odd_len(len, scale);
    let guard = (guard as f64 * scale).round() as usize;
    let roots = roots.resolve(count, len)?;
    let subbands = roots
        .into_iter()
        .map(|r| ZcParams::new(len, r))
        .collect::<Result<Vec<_>>>()?;
    let mut spec = MsQpSpec::new(subbands, guard)?;
    if let Some(ph) = phases {
        spec.set_chosen_phases(ph.to_vec())?;
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL_PAPR: &str = r#"
schema_version = 1
scenario = "papr"
trials = 1
base_seed = 7

[waveform]
kind = "msqp"
subband_count = 2
subband_len = 31
guard_len = 3

[papr]
alphabet_rad = [0.0, 3.14159265358979]
"#;

    #[test]
    fn parses_a_minimal_config() {
        let cfg = ExperimentConfig::from_toml(MINIMAL_PAPR).unwrap();
        assert_eq!(cfg.scenario, Scenario::Papr);
        assert_eq!(cfg.scale, 1.0);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL_PAPR.replace("base_seed = 7", "base_seed = 7\nbananas = 3");
        let err = ExperimentConfig::from_toml(&text).unwrap_err();
        assert!(err.to_string().contains("bananas"), "{err}");
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let text = MINIMAL_PAPR.replace("schema_version = 1", "schema_version = 2");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }

    #[test]
    fn validation_lists_every_missing_table() {
        let text = r#"
schema_version = 1
scenario = "false-alarm"
trials = 0
base_seed = 1
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        let err = cfg.validate().unwrap_err();
        let msg = err.to_string();
        for needle in ["trials", "[channel]", "[cpi]", "[cfar]", "[target_draw]", "[false_alarm]"]
        {
            assert!(msg.contains(needle), "missing {needle} in: {msg}");
        }
    }

    #[test]
    fn overrides_replace_fields() {
        let mut cfg = ExperimentConfig::from_toml(MINIMAL_PAPR).unwrap();
        cfg.apply(&Overrides { seed: Some(99), trials: Some(5), scale: Some(0.5) });
        assert_eq!((cfg.base_seed, cfg.trials, cfg.scale), (99, 5, 0.5));
    }

    #[test]
    fn scale_rejects_explicit_roots() {
        let text = MINIMAL_PAPR.replace("guard_len = 3", "guard_len = 3\nroots = [5, 7]");
        let mut cfg = ExperimentConfig::from_toml(&text).unwrap();
        cfg.scale = 0.5;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn root_choice_forms_deserialize() {
        #[derive(Deserialize)]
        struct Probe {
            roots: RootChoice,
        }
        let named: Probe = toml::from_str("roots = \"designed\"").unwrap();
        assert_eq!(named.roots, RootChoice::Named(RootPolicy::Designed));
        let fixed: Probe = toml::from_str("roots = 3").unwrap();
        assert_eq!(fixed.roots, RootChoice::Fixed(3));
        let list: Probe = toml::from_str("roots = [5, 7]").unwrap();
        assert_eq!(list.roots, RootChoice::PerSubband(vec![5, 7]));
    }

    #[test]
    fn scaling_helpers_stay_odd_and_positive() {
        assert_eq!(scaled_odd_len(1007, 0.1), 101);
        assert_eq!(scaled_odd_len(1007, 1.0), 1007);
        assert_eq!(scaled_odd_len(10, 0.1), 3);
        assert_eq!(scaled_odd_len(100, 0.1), 11);
        assert_eq!(scaled_count(128, 0.25), 32);
        assert_eq!(scaled_count(3, 0.01), 1);
    }

    #[test]
    fn designed_roots_resolve_to_the_midpoint() {
        let roots = RootChoice::default().resolve(3, 1007).unwrap();
        assert_eq!(roots, vec![503, 503, 503]);
    }

    #[test]
    fn msqp_builder_applies_scale_and_phases() {
        let spec = build_msqp(
            2,
            1007,
            100,
            &RootChoice::default(),
            Some(&[0.0, std::f64::consts::PI]),
            0.1,
        )
        .unwrap();
        assert_eq!(spec.subbands[0].length(), 101);
        assert_eq!(spec.guard_len, 10);
        assert_eq!(spec.chosen_phases(), Some(&[0.0, std::f64::consts::PI][..]));
    }
}
