//! MMSE front end: per-stage pilot estimation, row-energy activity
//! detection, and multiuser data-symbol separation.

use crate::config::SystemConfig;
use crate::util::CMat;
use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RxError {
    #[error("data equalizer matrix is singular (noiseless with rank-deficient channels)")]
    SingularEqualizer,
}

/// MMSE scaling applied to a received pilot symbol: with the scaled identity
/// codebook `A = amp * I`, the estimator `A^H (A A^H + noise I)^-1` collapses
/// to this scalar.
#[inline]
pub fn mmse_scale(pilot_amp: f64, noise_var: f64) -> f64 {
    pilot_amp / (pilot_amp * pilot_amp + noise_var)
}

/// Signal coefficient left on the estimate: `amp^2 / (amp^2 + noise)`.
#[inline]
pub fn mmse_signal_gain(pilot_amp: f64, noise_var: f64) -> f64 {
    pilot_amp * mmse_scale(pilot_amp, noise_var)
}

/// Per-entry noise variance after MMSE scaling.
#[inline]
pub fn mmse_noise_var(pilot_amp: f64, noise_var: f64) -> f64 {
    let s = mmse_scale(pilot_amp, noise_var);
    s * s * noise_var
}

/// MMSE estimate of the row-sparse phase-channel matrix from one received
/// pilot symbol. With the square sparse codebook this is an exact evaluation
/// of the linear MMSE formula, a single scalar multiply.
pub fn mmse_pilot_estimate(y: &CMat, pilot_amp: f64, noise_var: f64) -> CMat {
    y.scale(Complex64::new(mmse_scale(pilot_amp, noise_var), 0.0))
}

/// Per-stage MMSE pilot estimates plus the effective noise statistics the
/// detector and thresholds run on. Mutated in place by interference
/// cancellation during path extraction.
#[derive(Debug, Clone)]
pub struct PilotObservationSet {
    /// One `codebook_size x antennas` matrix per pilot stage.
    pub stages: Vec<CMat>,
    /// Post-MMSE noise variance per complex entry.
    pub noise_eff_var: f64,
    /// Signal coefficient left on the estimates.
    pub signal_gain: f64,
}

impl PilotObservationSet {
    /// Apply the MMSE front end to the raw received pilot symbols.
    pub fn from_received(received: &[CMat], cfg: &SystemConfig) -> Self {
        let amp = cfg.pilot_amp();
        let stages = received
            .iter()
            .map(|y| mmse_pilot_estimate(y, amp, cfg.noise_var))
            .collect();
        Self {
            stages,
            noise_eff_var: mmse_noise_var(amp, cfg.noise_var),
            signal_gain: mmse_signal_gain(amp, cfg.noise_var),
        }
    }

    /// Observation row for 1-based node value `node` at 0-based `stage`.
    pub fn row(&self, stage: usize, node: usize) -> &[Complex64] {
        self.stages[stage].row(node - 1)
    }

    /// Row-activity energy threshold.
    pub fn activity_threshold(&self, cfg: &SystemConfig) -> f64 {
        cfg.act_thresh_coeff * cfg.antennas as f64 * self.noise_eff_var
    }

    /// Collision-test threshold for path extraction.
    pub fn gamma(&self, cfg: &SystemConfig) -> f64 {
        cfg.gamma_coeff * cfg.antennas as f64 * self.noise_eff_var
    }
}

/// Hard decision on row energies: 1-based node values of rows whose energy
/// exceeds `threshold`, in ascending order. May be empty.
pub fn detect_active_rows(g_hat: &CMat, threshold: f64) -> Vec<usize> {
    (0..g_hat.rows)
        .filter(|&r| g_hat.row_energy(r) > threshold)
        .map(|r| r + 1)
        .collect()
}

/// Multiuser MMSE separation of one data symbol:
/// `X = H* (H^T H* + noise I)^-1 Y^T`, mapping the `subs x antennas`
/// observation to per-user symbol rows (`users x subs`). Linear in `Y`.
pub fn mmse_data_estimate(y_t: &CMat, h_hat: &CMat, noise_var: f64) -> Result<CMat, RxError> {
    let m = h_hat.cols;
    let k = h_hat.rows;
    let s = y_t.rows;
    assert_eq!(y_t.cols, m, "antenna count mismatch");
    // A = H^T conj(H) + noise I (M x M)
    let mut a = DMatrix::<Complex64>::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let mut acc = Complex64::ZERO;
            for u in 0..k {
                acc += h_hat[(u, i)] * h_hat[(u, j)].conj();
            }
            a[(i, j)] = acc;
        }
        a[(i, i)] += Complex64::new(noise_var, 0.0);
    }
    // rhs = Y^T (M x S)
    let rhs = DMatrix::<Complex64>::from_fn(m, s, |i, j| y_t[(j, i)]);
    let solved = a.lu().solve(&rhs).ok_or(RxError::SingularEqualizer)?;
    // X = conj(H) * solved (K x S)
    let mut x = CMat::zeros(k, s);
    for u in 0..k {
        for col in 0..s {
            let mut acc = Complex64::ZERO;
            for i in 0..m {
                acc += h_hat[(u, i)].conj() * solved[(i, col)];
            }
            x[(u, col)] = acc;
        }
    }
    Ok(x)
}

/// Post-equalization statistics for one user: effective symbol gain and
/// interference-plus-noise variance, both computed from receiver-side
/// quantities only. Used to scale decoder LLRs.
pub fn data_llr_stats(
    h_hat: &CMat,
    user: usize,
    noise_var: f64,
    sym_power: f64,
) -> Result<(f64, f64), RxError> {
    let m = h_hat.cols;
    let k = h_hat.rows;
    let mut a = DMatrix::<Complex64>::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let mut acc = Complex64::ZERO;
            for u in 0..k {
                acc += h_hat[(u, i)] * h_hat[(u, j)].conj();
            }
            a[(i, j)] = acc;
        }
        a[(i, i)] += Complex64::new(noise_var, 0.0);
    }
    let lu = a.lu();
    // w = A^-1 conj(h_user); per-user gains are h_v^T w
    let rhs = DMatrix::<Complex64>::from_fn(m, 1, |i, _| h_hat[(user, i)].conj());
    let w = lu.solve(&rhs).ok_or(RxError::SingularEqualizer)?;
    let mut gain = Complex64::ZERO;
    let mut interference = 0.0;
    for v in 0..k {
        let g: Complex64 = (0..m).map(|i| h_hat[(v, i)] * w[(i, 0)]).sum();
        if v == user {
            gain = g;
        } else {
            interference += sym_power * g.norm_sqr();
        }
    }
    let w_energy: f64 = (0..m).map(|i| w[(i, 0)].norm_sqr()).sum();
    let var = interference + noise_var * w_energy;
    Ok((gain.re.max(1e-300), var.max(1e-300)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::{fill_complex_gaussian, rng_from_key};

    #[test]
    fn pilot_mmse_trivial_scales() {
        let y = CMat::from_fn(4, 2, |r, c| Complex64::new(r as f64, c as f64));
        // noiseless, unit codebook scale: estimate equals the observation
        assert_eq!(mmse_pilot_estimate(&y, 1.0, 0.0), y);
        // zero observation stays zero
        let z = CMat::zeros(4, 2);
        assert_eq!(mmse_pilot_estimate(&z, 1.0, 2.0), z);
        // unit scale, unit noise: halved
        let half = mmse_pilot_estimate(&y, 1.0, 1.0);
        assert!((half[(3, 1)] - y[(3, 1)] * Complex64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn pilot_mmse_is_linear_and_contracting_at_unit_scale() {
        let mut rng = rng_from_key(41);
        let mut mk = |rng: &mut rand_chacha::ChaCha8Rng| {
            let mut m = CMat::zeros(8, 3);
            for r in 0..8 {
                fill_complex_gaussian(rng, m.row_mut(r), 1.0);
            }
            m
        };
        let y1 = mk(&mut rng);
        let y2 = mk(&mut rng);
        for &nv in &[0.0, 0.3, 2.0] {
            let e1 = mmse_pilot_estimate(&y1, 1.0, nv);
            let e2 = mmse_pilot_estimate(&y2, 1.0, nv);
            let a = Complex64::new(0.7, -0.2);
            let mut combo = CMat::zeros(8, 3);
            for r in 0..8 {
                for c in 0..3 {
                    combo[(r, c)] = a * y1[(r, c)] + y2[(r, c)];
                }
            }
            let est = mmse_pilot_estimate(&combo, 1.0, nv);
            let mut want = CMat::zeros(8, 3);
            for r in 0..8 {
                for c in 0..3 {
                    want[(r, c)] = a * e1[(r, c)] + e2[(r, c)];
                }
            }
            assert!(est.sub(&want).frobenius_norm() < 1e-12);
            assert!(e1.frobenius_norm() <= y1.frobenius_norm() + 1e-12);
        }
    }

    #[test]
    fn activity_detection_behaviour() {
        // single strong row
        let mut g = CMat::zeros(8, 4);
        for c in 0..4 {
            g[(5, c)] = Complex64::new(1.0, -1.0);
        }
        assert_eq!(detect_active_rows(&g, 0.5), vec![6]);

        // two colliding users on one row still yield one detection
        for c in 0..4 {
            g[(5, c)] += Complex64::new(0.3, 0.8);
        }
        assert_eq!(detect_active_rows(&g, 0.5), vec![6]);

        // pure noise with the default coefficient: false activations are
        // essentially impossible (chi-square tail far beyond 4*M*sigma^2)
        let mut rng = rng_from_key(42);
        let m = 16;
        let mut count = 0;
        for _ in 0..200 {
            let mut noise = CMat::zeros(64, m);
            for r in 0..64 {
                fill_complex_gaussian(&mut rng, noise.row_mut(r), 1.0);
            }
            count += detect_active_rows(&noise, 4.0 * m as f64).len();
        }
        assert_eq!(count, 0, "false activations in 12800 noise rows");
    }

    #[test]
    fn data_mmse_recovers_scalar_and_orthogonal_users() {
        // K=1, M=1, h=1, noiseless: perfect recovery
        let h = CMat::from_fn(1, 1, |_, _| Complex64::ONE);
        let x_true = [Complex64::new(0.5, -0.7), Complex64::new(-1.0, 0.2)];
        let y = CMat::from_fn(2, 1, |r, _| x_true[r]);
        let x = mmse_data_estimate(&y, &h, 0.0).unwrap();
        for s in 0..2 {
            assert!((x[(0, s)] - x_true[s]).norm() < 1e-12);
        }
        // zero observation maps to zero
        let z = mmse_data_estimate(&CMat::zeros(2, 1), &h, 0.7).unwrap();
        assert!(z.frobenius_norm() < 1e-15);

        // two orthogonal channel rows separate exactly at zero noise
        let h2 = CMat::from_fn(2, 2, |r, c| {
            if r == c {
                Complex64::new(2.0 - r as f64, 0.0)
            } else {
                Complex64::ZERO
            }
        });
        let xa = Complex64::new(1.0, 1.0);
        let xb = Complex64::new(-0.3, 0.4);
        let mut y2 = CMat::zeros(3, 2);
        for s in 0..3 {
            y2[(s, 0)] = xa * h2[(0, 0)];
            y2[(s, 1)] = xb * h2[(1, 1)];
        }
        let x2 = mmse_data_estimate(&y2, &h2, 0.0).unwrap();
        for s in 0..3 {
            assert!((x2[(0, s)] - xa).norm() < 1e-10);
            assert!((x2[(1, s)] - xb).norm() < 1e-10);
        }
    }

    #[test]
    fn data_mmse_single_user_is_matched_filter() {
        let mut rng = rng_from_key(43);
        let m = 4;
        let mut h = CMat::zeros(1, m);
        fill_complex_gaussian(&mut rng, h.row_mut(0), 1.0);
        let mut y = CMat::zeros(2, m);
        for r in 0..2 {
            fill_complex_gaussian(&mut rng, y.row_mut(r), 1.0);
        }
        let nv = 0.37;
        let x = mmse_data_estimate(&y, &h, nv).unwrap();
        let h_energy: f64 = h.row_energy(0);
        for s in 0..2 {
            let mf: Complex64 = (0..m).map(|i| h[(0, i)].conj() * y[(s, i)]).sum();
            let want = mf / Complex64::new(h_energy + nv, 0.0);
            assert!((x[(0, s)] - want).norm() < 1e-10);
        }
    }

    #[test]
    fn data_mmse_reports_singular_noiseless_rank_deficiency() {
        // two identical channel rows, zero noise: the normal matrix is singular
        let h = CMat::from_fn(2, 2, |_, c| Complex64::new(1.0 + c as f64, 0.0));
        let y = CMat::zeros(2, 2);
        assert!(mmse_data_estimate(&y, &h, 0.0).is_err());
        assert!(mmse_data_estimate(&y, &h, 1e-6).is_ok());
    }

    #[test]
    fn llr_stats_sane_for_isolated_user() {
        let h = CMat::from_fn(1, 3, |_, c| Complex64::new(1.0 + c as f64, -0.5));
        let (gain, var) = data_llr_stats(&h, 0, 0.25, 1.0).unwrap();
        assert!(gain > 0.0 && gain < 1.0);
        assert!(var > 0.0);
    }
}
