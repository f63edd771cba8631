//! Frequency-domain phase-rotation model for residual timing and frequency
//! offsets, plus pilot/data received-symbol synthesis.
//!
//! A timing offset of `tau` samples (within the cyclic prefix) rotates
//! subcarrier `n` by `psi^(1-n)` with `psi = e^{j*2*pi*tau/N_c}`. A carrier
//! frequency offset of `eps` subcarrier spacings accumulates
//! `omega^{(N_cp+N_c)t - (N_c+1)/2}` by OFDM symbol `t`, with
//! `omega = e^{j*2*pi*eps/N_c}`, and additionally mixes subcarriers through a
//! Dirichlet-kernel matrix. `ChannelMode::Exact` keeps the mixing matrix;
//! `ChannelMode::Simplified` keeps only the per-subcarrier phases, which is
//! the model the receiver works in.

use crate::config::{ChannelMode, SystemConfig};
use crate::util::{cis, fill_complex_gaussian, CMat};
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

/// OFDM dimensioning needed by the phase model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ofdm {
    /// DFT size.
    pub n_c: usize,
    /// Cyclic prefix length.
    pub n_cp: usize,
    /// 1-based subcarrier indices in use, strictly increasing.
    pub subs: Vec<usize>,
}

impl Ofdm {
    pub fn from_config(cfg: &SystemConfig) -> Self {
        Self {
            n_c: cfg.subcarriers,
            n_cp: cfg.cp_len,
            subs: cfg.subcarriers_list(),
        }
    }

    pub fn num_subs(&self) -> usize {
        self.subs.len()
    }
}

/// One transmitting user as the channel sees it.
#[derive(Debug, Clone, Copy)]
pub struct UserFront<'a> {
    /// Integer timing offset in samples.
    pub to: i64,
    /// Frequency offset in subcarrier spacings.
    pub fo: f64,
    /// Per-antenna channel coefficients.
    pub h: &'a [Complex64],
}

/// Combined timing/frequency phase rotation on subcarrier `s_val` (1-based)
/// of OFDM symbol `t` (1-based).
///
/// Unit magnitude for any argument.
#[inline]
pub fn phase_coeff(tau: i64, eps: f64, t: usize, s_val: usize, ofdm: &Ofdm) -> Complex64 {
    let n_c = ofdm.n_c as f64;
    let sym_span = (ofdm.n_cp + ofdm.n_c) as f64;
    let exponent = tau as f64 * (1.0 - s_val as f64) + eps * (sym_span * t as f64 - (n_c + 1.0) / 2.0);
    cis(2.0 * PI * exponent / n_c)
}

/// Normalized Dirichlet kernel
/// `P(x) = sin(pi x) / (N_c sin(pi x / N_c)) * e^{j pi x (N_c - 1) / N_c}`.
///
/// The removable singularities at integer `x` are evaluated by their limit:
/// 1 when `x` is a multiple of `N_c`, 0 at other integers.
pub fn dirichlet(x: f64, n_c: usize) -> Complex64 {
    let n = n_c as f64;
    if x == x.round() {
        let r = (x.round() as i64).rem_euclid(n_c as i64);
        return if r == 0 { Complex64::ONE } else { Complex64::ZERO };
    }
    let mag = (PI * x).sin() / (n * (PI * x / n).sin());
    mag * cis(PI * x * (n - 1.0) / n)
}

/// Exact frequency-offset mixing matrix restricted to the used subcarriers:
/// entry `(r, c)` couples transmitted subcarrier `subs[c]` into received
/// subcarrier `subs[r]`. Identity at `eps = 0`. The symbol-index phase
/// `omega^{N_cp + (t-1)(N_cp+N_c)}` is not included.
pub fn fo_matrix_exact(eps: f64, ofdm: &Ofdm) -> CMat {
    let s = ofdm.num_subs();
    CMat::from_fn(s, s, |r, c| {
        let shift = (ofdm.subs[c] + ofdm.n_c - ofdm.subs[r]) % ofdm.n_c;
        dirichlet(shift as f64 + eps, ofdm.n_c)
    })
}

/// Exact timing-offset matrix on the used subcarriers: the diagonal
/// `psi^{1-subs[r]}` with `psi = e^{j*2*pi*tau/N_c}`.
pub fn to_matrix_exact(tau: i64, ofdm: &Ofdm) -> CMat {
    let s = ofdm.num_subs();
    let n_c = ofdm.n_c as f64;
    CMat::from_fn(s, s, |r, c| {
        if r == c {
            cis(2.0 * PI * tau as f64 * (1.0 - ofdm.subs[r] as f64) / n_c)
        } else {
            Complex64::ZERO
        }
    })
}

/// Frobenius distance between the exact offset matrix for symbol `t` and its
/// diagonal phase approximation. Zero at `eps = 0`; grows with `|eps|`.
pub fn approx_error(eps: f64, tau: i64, ofdm: &Ofdm) -> f64 {
    // Both matrices share the unit-magnitude factors phi^t and psi^{1-n_s}
    // (a scalar and a right diagonal), so the distance reduces to
    // || P_sxs - omega^{(N_c-1)/2} I ||_F.
    let exact = fo_matrix_exact(eps, ofdm);
    let n_c = ofdm.n_c as f64;
    let diag_phase = cis(2.0 * PI * eps * (n_c - 1.0) / (2.0 * n_c));
    let _ = tau; // the timing part is an exact diagonal; it cancels here
    let s = ofdm.num_subs();
    let mut acc = 0.0;
    for r in 0..s {
        for c in 0..s {
            let model = if r == c { diag_phase } else { Complex64::ZERO };
            acc += (exact[(r, c)] - model).norm_sqr();
        }
    }
    acc.sqrt()
}

/// Synthesize one received pilot OFDM symbol (`subs x antennas`).
///
/// `indices[k]` is user `k`'s 1-based codeword index for this stage; the
/// pilot places amplitude `amp` on that row. AWGN with per-entry variance
/// `noise_var` is added.
pub fn simulate_pilot_symbol<R: Rng>(
    ofdm: &Ofdm,
    users: &[UserFront<'_>],
    indices: &[usize],
    amp: f64,
    t: usize,
    noise_var: f64,
    mode: ChannelMode,
    rng: &mut R,
) -> CMat {
    assert_eq!(users.len(), indices.len());
    let s = ofdm.num_subs();
    let m = users.first().map_or(0, |u| u.h.len());
    let mut y = CMat::zeros(s, m.max(1));
    for (user, &idx) in users.iter().zip(indices) {
        assert!((1..=s).contains(&idx), "codeword index out of range");
        let col = idx - 1;
        match mode {
            ChannelMode::Simplified => {
                let coef = amp * phase_coeff(user.to, user.fo, t, ofdm.subs[col], ofdm);
                let row = y.row_mut(col);
                for (o, &h) in row.iter_mut().zip(user.h) {
                    *o += coef * h;
                }
            }
            ChannelMode::Exact => {
                let phi_t = symbol_phase(user.fo, t, ofdm);
                let psi = cis(2.0 * PI * user.to as f64 * (1.0 - ofdm.subs[col] as f64) / ofdm.n_c as f64);
                for r in 0..s {
                    let shift = (ofdm.subs[col] + ofdm.n_c - ofdm.subs[r]) % ofdm.n_c;
                    let coef = amp * phi_t * dirichlet(shift as f64 + user.fo, ofdm.n_c) * psi;
                    let row = y.row_mut(r);
                    for (o, &h) in row.iter_mut().zip(user.h) {
                        *o += coef * h;
                    }
                }
            }
        }
    }
    add_noise(&mut y, noise_var, rng);
    y
}

/// Synthesize one received data OFDM symbol (`subs x antennas`).
///
/// `symbols[k]` is user `k`'s frequency-domain symbol vector of length
/// `subs` (zeros at padded positions), already scaled to transmit amplitude.
/// `t` is the global 1-based OFDM symbol index.
pub fn simulate_data_symbol<R: Rng>(
    ofdm: &Ofdm,
    users: &[UserFront<'_>],
    symbols: &[&[Complex64]],
    t: usize,
    noise_var: f64,
    mode: ChannelMode,
    rng: &mut R,
) -> CMat {
    assert_eq!(users.len(), symbols.len());
    let s = ofdm.num_subs();
    let m = users.first().map_or(0, |u| u.h.len());
    let mut y = CMat::zeros(s, m.max(1));
    for (user, &x) in users.iter().zip(symbols) {
        assert_eq!(x.len(), s);
        match mode {
            ChannelMode::Simplified => {
                for (r, &xr) in x.iter().enumerate() {
                    if xr == Complex64::ZERO {
                        continue;
                    }
                    let coef = xr * phase_coeff(user.to, user.fo, t, ofdm.subs[r], ofdm);
                    let row = y.row_mut(r);
                    for (o, &h) in row.iter_mut().zip(user.h) {
                        *o += coef * h;
                    }
                }
            }
            ChannelMode::Exact => {
                let phi_t = symbol_phase(user.fo, t, ofdm);
                // y_r = phi^t * sum_c P((s_c - s_r) + eps) psi^{1-s_c} x_c
                for (c, &xc) in x.iter().enumerate() {
                    if xc == Complex64::ZERO {
                        continue;
                    }
                    let psi = cis(2.0 * PI * user.to as f64 * (1.0 - ofdm.subs[c] as f64) / ofdm.n_c as f64);
                    let tx = phi_t * psi * xc;
                    for r in 0..s {
                        let shift = (ofdm.subs[c] + ofdm.n_c - ofdm.subs[r]) % ofdm.n_c;
                        let coef = tx * dirichlet(shift as f64 + user.fo, ofdm.n_c);
                        let row = y.row_mut(r);
                        for (o, &h) in row.iter_mut().zip(user.h) {
                            *o += coef * h;
                        }
                    }
                }
            }
        }
    }
    add_noise(&mut y, noise_var, rng);
    y
}

/// Frequency-offset phase accumulated up to OFDM symbol `t` (1-based):
/// `omega^{N_cp + (t-1)(N_cp + N_c)}`.
fn symbol_phase(eps: f64, t: usize, ofdm: &Ofdm) -> Complex64 {
    let exp = ofdm.n_cp as f64 + (t as f64 - 1.0) * (ofdm.n_cp + ofdm.n_c) as f64;
    cis(2.0 * PI * eps * exp / ofdm.n_c as f64)
}

fn add_noise<R: Rng>(y: &mut CMat, noise_var: f64, rng: &mut R) {
    if noise_var == 0.0 {
        return;
    }
    let (rows, cols) = (y.rows, y.cols);
    let mut buf = vec![Complex64::ZERO; cols];
    for r in 0..rows {
        fill_complex_gaussian(rng, &mut buf, noise_var);
        for (o, &n) in y.row_mut(r).iter_mut().zip(&buf) {
            *o += n;
        }
    }
}
