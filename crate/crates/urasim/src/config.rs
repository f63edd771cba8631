//! System parameters, receiver options and the offset search grid.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// LDPC block length (channel bits) shared by every user.
pub const LDPC_BLOCK_LEN: usize = 200;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("failed to read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse config file: {0}")]
    Parse(#[from] toml::de::Error),
}

/// All scalar system parameters.
///
/// Defaults follow the narrowband setup this library targets: 1024
/// subcarriers with a 72-sample cyclic prefix, 128 odd-indexed subcarriers
/// per user, 4 pilot + 21 data OFDM symbols, 100 message bits split 7+7+86,
/// and a 9x9 timing/frequency offset search grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    /// Total subcarrier count (DFT size).
    pub subcarriers: usize,
    /// Cyclic prefix length in samples.
    pub cp_len: usize,
    /// Subcarriers assigned to each user per OFDM symbol.
    pub subcarriers_per_user: usize,
    /// 1-based subcarrier indices, strictly increasing. Empty means the
    /// default comb `[1, 3, 5, ...]` of length `subcarriers_per_user`.
    pub subcarrier_indices: Vec<usize>,
    /// Pilot OFDM symbols (= stages of the collision graph).
    pub pilot_symbols: usize,
    /// Data OFDM symbols.
    pub data_symbols: usize,
    /// Base-station antennas.
    pub antennas: usize,
    /// Active users per slot.
    pub active_users: usize,
    /// Message bits per user.
    pub msg_bits: usize,
    /// Bits per preamble fragment (four fragments of this size are sent).
    pub frag_bits: usize,
    /// LDPC payload bits.
    pub payload_bits: usize,
    /// Maximum integer timing offset in samples; offsets live in `[1, max_to]`.
    pub max_to: usize,
    /// Maximum |frequency offset| as a fraction of the subcarrier spacing.
    pub max_fo: f64,
    /// Number of frequency-offset grid points.
    pub fo_grid_size: usize,
    /// Noise variance per complex entry.
    pub noise_var: f64,
    /// Symbol power per occupied channel use.
    pub sym_power: f64,
    /// Channel coefficient variance per antenna.
    pub channel_var: f64,
    /// Master seed for code construction (tree parities, LDPC, interleavers).
    pub seed: u64,
    /// Collision test threshold, in units of `antennas * noise_eff_var`.
    pub gamma_coeff: f64,
    /// Row-activity threshold, in units of `antennas * noise_eff_var`.
    pub act_thresh_coeff: f64,
    /// Offset candidates kept per user for constellation-aided correction.
    pub n_cand: usize,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            subcarriers: 1024,
            cp_len: 72,
            subcarriers_per_user: 128,
            subcarrier_indices: Vec::new(),
            pilot_symbols: 4,
            data_symbols: 21,
            antennas: 16,
            active_users: 20,
            msg_bits: 100,
            frag_bits: 7,
            payload_bits: 86,
            max_to: 9,
            max_fo: 0.0133,
            fo_grid_size: 9,
            noise_var: 1.0,
            sym_power: 1.0,
            channel_var: 1.0,
            seed: 0,
            gamma_coeff: 3.0,
            act_thresh_coeff: 4.0,
            n_cand: 5,
        }
    }
}

impl SystemConfig {
    /// Pilot codebook size; the codebook is square so this also equals the
    /// pilot length `subcarriers_per_user`.
    pub fn codebook_size(&self) -> usize {
        1usize << self.frag_bits
    }

    /// Total channel uses in the slot.
    pub fn channel_uses(&self) -> usize {
        (self.pilot_symbols + self.data_symbols) * self.subcarriers_per_user
    }

    /// Data-phase channel uses.
    pub fn data_uses(&self) -> usize {
        self.data_symbols * self.subcarriers_per_user
    }

    /// Amplitude of the single nonzero pilot entry.
    ///
    /// The sparse pilot concentrates the OFDM symbol's power budget
    /// `subcarriers_per_user * sym_power` into its one occupied entry;
    /// spreading only `sym_power` there would leave activity detection and
    /// the offset search starved at any realistic operating point.
    pub fn pilot_amp(&self) -> f64 {
        (self.subcarriers_per_user as f64 * self.sym_power).sqrt()
    }

    /// Amplitude of a nonzero (BPSK) data entry.
    pub fn data_amp(&self) -> f64 {
        self.sym_power.sqrt()
    }

    /// Resolved subcarrier index list (default comb when unset).
    pub fn subcarriers_list(&self) -> Vec<usize> {
        if self.subcarrier_indices.is_empty() {
            (0..self.subcarriers_per_user).map(|i| 2 * i + 1).collect()
        } else {
            self.subcarrier_indices.clone()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError::Invalid(msg));
        if self.subcarriers == 0 || !self.subcarriers.is_power_of_two() {
            return fail(format!("subcarriers must be a power of two, got {}", self.subcarriers));
        }
        if self.codebook_size() != self.subcarriers_per_user {
            return fail(format!(
                "square pilot codebook requires 2^frag_bits == subcarriers_per_user, got 2^{} != {}",
                self.frag_bits, self.subcarriers_per_user
            ));
        }
        let subs = self.subcarriers_list();
        if subs.len() != self.subcarriers_per_user {
            return fail(format!(
                "subcarrier_indices has {} entries, expected {}",
                subs.len(),
                self.subcarriers_per_user
            ));
        }
        if !subs.windows(2).all(|w| w[0] < w[1]) {
            return fail("subcarrier_indices must be strictly increasing".into());
        }
        if subs[0] < 1 || *subs.last().unwrap() > self.subcarriers {
            return fail(format!(
                "subcarrier indices must lie in [1, {}]",
                self.subcarriers
            ));
        }
        if self.pilot_symbols != 4 {
            return fail(format!(
                "the two-parity tree code supports exactly 4 pilot stages, got {}",
                self.pilot_symbols
            ));
        }
        if 2 * self.frag_bits + self.payload_bits != self.msg_bits {
            return fail(format!(
                "bit budget mismatch: 2*{} + {} != {}",
                self.frag_bits, self.payload_bits, self.msg_bits
            ));
        }
        if self.max_to == 0 || self.max_to > self.cp_len {
            return fail(format!(
                "max_to must lie in [1, cp_len={}], got {}",
                self.cp_len, self.max_to
            ));
        }
        if self.max_fo < 0.0 || !self.max_fo.is_finite() {
            return fail("max_fo must be finite and nonnegative".into());
        }
        if self.fo_grid_size == 0 {
            return fail("fo_grid_size must be positive".into());
        }
        if self.data_uses() < LDPC_BLOCK_LEN {
            return fail(format!(
                "data phase too short: {} channel uses < {} coded bits",
                self.data_uses(),
                LDPC_BLOCK_LEN
            ));
        }
        if self.payload_bits >= LDPC_BLOCK_LEN {
            return fail(format!(
                "payload_bits must be below the LDPC block length {LDPC_BLOCK_LEN}"
            ));
        }
        if self.noise_var < 0.0 || self.sym_power <= 0.0 || self.channel_var <= 0.0 {
            return fail("noise_var must be >= 0; sym_power and channel_var must be > 0".into());
        }
        if self.gamma_coeff < 0.0 || self.act_thresh_coeff < 0.0 {
            return fail("threshold coefficients must be nonnegative".into());
        }
        if self.n_cand == 0 || self.n_cand > self.max_to * self.fo_grid_size {
            return fail(format!(
                "n_cand must lie in [1, {}]",
                self.max_to * self.fo_grid_size
            ));
        }
        if self.antennas == 0 || self.active_users > 10_000 {
            return fail("antennas must be positive and active_users sane".into());
        }
        Ok(())
    }

    /// Parse a TOML config file. Unknown keys are rejected.
    pub fn from_toml_file(path: &std::path::Path) -> Result<(Self, TrialOptions), ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<(Self, TrialOptions), ConfigError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct FileSchema {
            #[serde(flatten)]
            system: SystemConfig,
            #[serde(default)]
            options: TrialOptions,
        }
        let parsed: FileSchema = toml::from_str(text)?;
        parsed.system.validate()?;
        Ok((parsed.system, parsed.options))
    }
}

/// Channel synthesis fidelity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ChannelMode {
    /// Full frequency-offset mixing matrix (inter-carrier interference kept).
    #[default]
    Exact,
    /// Diagonal phase-rotation model (the receiver-side approximation).
    Simplified,
}

/// Per-run harness switches that are not system parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrialOptions {
    /// Channel synthesis mode for pilot and data symbols.
    pub channel_mode: ChannelMode,
    /// Draw the true frequency offset from the receiver grid instead of the
    /// continuous interval.
    pub fo_on_grid: bool,
    /// Redraw users until no two share a codeword index at any stage.
    pub collision_free: bool,
    /// Run constellation-aided offset correction after path extraction.
    pub refine: bool,
    /// Re-estimate channels with the final offsets.
    pub reestimate: bool,
    /// Reveal each matched user's true offsets to the receiver (lower-bound
    /// runs); false paths keep their estimates.
    pub reveal_tfo: bool,
    /// Belief-propagation iteration cap for the data decoder.
    pub bp_max_iters: usize,
}

impl Default for TrialOptions {
    fn default() -> Self {
        Self {
            channel_mode: ChannelMode::Exact,
            fo_on_grid: false,
            collision_free: false,
            refine: true,
            reestimate: true,
            reveal_tfo: false,
            bp_max_iters: 50,
        }
    }
}

/// Timing/frequency offset search grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    /// Integer timing offsets `1..=max_to`.
    pub to: Vec<i64>,
    /// Frequency offsets, uniformly spaced over `[-max_fo, max_fo]`,
    /// symmetric about zero for odd lengths.
    pub fo: Vec<f64>,
}

impl PhaseGrid {
    pub fn from_config(cfg: &SystemConfig) -> Self {
        Self::new(cfg.max_to, cfg.max_fo, cfg.fo_grid_size)
    }

    pub fn new(max_to: usize, max_fo: f64, fo_points: usize) -> Self {
        let to = (1..=max_to as i64).collect();
        let fo = if fo_points == 1 {
            vec![0.0]
        } else {
            (0..fo_points)
                .map(|i| -max_fo + 2.0 * max_fo * i as f64 / (fo_points - 1) as f64)
                .collect()
        };
        Self { to, fo }
    }

    pub fn len(&self) -> usize {
        self.to.len() * self.fo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.to.is_empty() || self.fo.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_match_budget() {
        let cfg = SystemConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.channel_uses(), 3200);
        assert_eq!(cfg.codebook_size(), 128);
        assert_eq!(cfg.data_uses(), 2688);
        let subs = cfg.subcarriers_list();
        assert_eq!(subs[0], 1);
        assert_eq!(subs[127], 255);
    }

    #[test]
    fn grid_is_symmetric_for_odd_sizes() {
        let g = PhaseGrid::new(9, 0.0133, 9);
        assert_eq!(g.to, (1..=9).collect::<Vec<_>>());
        assert_eq!(g.fo.len(), 9);
        assert_eq!(g.fo[4], 0.0);
        for i in 0..9 {
            assert!((g.fo[i] + g.fo[8 - i]).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(SystemConfig::from_toml_str("bogus_key = 3").is_err());
        assert!(SystemConfig::from_toml_str("cp_len = 4\nmax_to = 9").is_err());
        let (cfg, opts) = SystemConfig::from_toml_str("antennas = 8\n[options]\nfo_on_grid = true").unwrap();
        assert_eq!(cfg.antennas, 8);
        assert!(opts.fo_on_grid);
        assert!(!TrialOptions::default().fo_on_grid);
    }

    #[test]
    fn roundtrips_through_toml() {
        let cfg = SystemConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let (back, _) = SystemConfig::from_toml_str(&text).unwrap();
        assert_eq!(back.subcarriers, cfg.subcarriers);
        assert_eq!(back.max_fo, cfg.max_fo);
    }
}
