//! Random channel drops and per-subcarrier capacity evaluation.
//!
//! One drop consists of i.i.d. unit-variance complex Gaussian multipath
//! fading on every subcarrier, a deterministic log-distance path loss,
//! and one log-normal shadowing realization shared by all subcarriers.
//! Beamforming is maximum ratio transmission, so the effective channel
//! gain on a subcarrier with `n_t` active antennas is the squared norm of
//! the first `n_t` fading coefficients.

pub use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::params::SystemParams;
use crate::{Error, Result};

/// One fading/shadowing drop for a fixed geometry.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// Per-subcarrier fading vectors, `n_f` rows of `n_max` coefficients.
    /// An allocation of `n_t` antennas uses the first `n_t` entries of
    /// every row.
    pub fading: Vec<Vec<Complex64>>,
    /// Linear path-loss gain.
    pub path_loss: f64,
    /// Linear log-normal shadowing gain.
    pub shadowing: f64,
}

impl ChannelRealization {
    /// Combined large-scale gain `l * g` seen by every subcarrier.
    pub fn link_gain(&self) -> f64 {
        self.path_loss * self.shadowing
    }
}

/// Draw one channel realization. Deterministic given `(params, seed)`:
/// the generator is seeded ChaCha and the draw order is fixed (shadowing
/// first, then fading row by row).
pub fn sample_channel(params: &SystemParams, seed: u64) -> ChannelRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let x_db: f64 = rng.sample::<f64, _>(StandardNormal) * params.shadowing_sigma_db;
    let shadowing = 10f64.powf(x_db / 10.0);

    // Unit-variance complex Gaussian: real and imaginary parts each have
    // variance 1/2.
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let fading = (0..params.n_f)
        .map(|_| {
            (0..params.n_max)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re * scale, im * scale)
                })
                .collect()
        })
        .collect();

    ChannelRealization {
        fading,
        path_loss: params.path_loss(),
        shadowing,
    }
}

/// Squared beamforming gain `|h^T f|^2` under maximum ratio transmission
/// with `n_t` active antennas on the given subcarrier (0-based index).
/// The conjugate beamformer `f = h* / ||h||` attains the maximum-eigenvalue
/// gain, so this is the squared Euclidean norm of the first `n_t`
/// coefficients.
pub fn mrt_gain(realization: &ChannelRealization, subcarrier: usize, n_t: u32) -> Result<f64> {
    let row = realization.fading.get(subcarrier).ok_or_else(|| {
        Error::Domain(format!(
            "subcarrier index {subcarrier} out of range (n_f = {})",
            realization.fading.len()
        ))
    })?;
    if n_t == 0 || n_t as usize > row.len() {
        return Err(Error::Domain(format!(
            "antenna count {n_t} out of range [1, {}]",
            row.len()
        )));
    }
    Ok(row[..n_t as usize].iter().map(|h| h.norm_sqr()).sum())
}

/// Exact per-subcarrier capacity `W log2(1 + p * lg * gain / (N0 W))` in
/// bit/s. Zero power yields exactly zero.
pub fn exact_capacity(p: f64, lg: f64, gain: f64, params: &SystemParams) -> f64 {
    debug_assert!(p >= 0.0 && gain >= 0.0);
    if p == 0.0 {
        return 0.0;
    }
    let w = params.subcarrier_bandwidth();
    let snr = p * lg * gain / params.noise_power_per_subcarrier;
    w * (1.0 + snr).log2()
}

/// Asymptotic per-subcarrier capacity `W log2(p * lg * n_t / (N0 W))` in
/// bit/s, valid in the large-antenna regime where the beamforming gain
/// hardens to `n_t` and the SNR dominates the `+1`. May be negative for
/// SNR below one.
pub fn asymptotic_capacity(p: f64, lg: f64, n_t: f64, params: &SystemParams) -> Result<f64> {
    if p <= 0.0 {
        return Err(Error::Domain(format!(
            "asymptotic capacity requires p > 0, got {p}"
        )));
    }
    if n_t <= 0.0 {
        return Err(Error::Domain(format!(
            "asymptotic capacity requires n_t > 0, got {n_t}"
        )));
    }
    let w = params.subcarrier_bandwidth();
    let snr = p * lg * n_t / params.noise_power_per_subcarrier;
    Ok(w * snr.log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small_params() -> SystemParams {
        SystemParams {
            n_f: 2,
            n_max: 16,
            ..SystemParams::default()
        }
    }

    fn all_ones_realization(n_f: usize, n_max: usize) -> ChannelRealization {
        ChannelRealization {
            fading: vec![vec![Complex64::new(1.0, 0.0); n_max]; n_f],
            path_loss: 1.0,
            shadowing: 1.0,
        }
    }

    #[test]
    fn same_seed_same_realization() {
        let p = small_params();
        let a = sample_channel(&p, 0xDEADBEEF);
        let b = sample_channel(&p, 0xDEADBEEF);
        assert_eq!(a.shadowing.to_bits(), b.shadowing.to_bits());
        for (ra, rb) in a.fading.iter().zip(&b.fading) {
            for (ha, hb) in ra.iter().zip(rb) {
                assert_eq!(ha.re.to_bits(), hb.re.to_bits());
                assert_eq!(ha.im.to_bits(), hb.im.to_bits());
            }
        }
    }

    #[test]
    fn different_seeds_differ() {
        let p = small_params();
        let a = sample_channel(&p, 1);
        let b = sample_channel(&p, 2);
        assert_ne!(a.fading[0][0], b.fading[0][0]);
    }

    #[test]
    fn zero_sigma_gives_unit_shadowing() {
        let mut p = small_params();
        p.shadowing_sigma_db = 0.0;
        let r = sample_channel(&p, 7);
        assert_eq!(r.shadowing, 1.0);
    }

    #[test]
    fn fading_has_unit_variance() {
        // 1e6 scalar coefficients across drops; sample mean of |h|^2
        // must land within 1% of 1.
        let p = SystemParams {
            n_f: 4,
            n_max: 500,
            ..SystemParams::default()
        };
        let mut sum = 0.0;
        let mut count = 0usize;
        for seed in 0..500 {
            let r = sample_channel(&p, seed);
            for row in &r.fading {
                for h in row {
                    sum += h.norm_sqr();
                    count += 1;
                }
            }
        }
        assert!(count >= 1_000_000);
        let mean = sum / count as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean |h|^2 = {mean}");
    }

    #[test]
    fn mrt_gain_all_ones() {
        let r = all_ones_realization(2, 16);
        assert_relative_eq!(mrt_gain(&r, 0, 4).unwrap(), 4.0);
    }

    #[test]
    fn mrt_gain_scalar_case() {
        let mut r = all_ones_realization(1, 4);
        r.fading[0][0] = Complex64::new(3.0, -4.0);
        assert_relative_eq!(mrt_gain(&r, 0, 1).unwrap(), 25.0);
    }

    #[test]
    fn mrt_gain_rejects_out_of_range() {
        let r = all_ones_realization(2, 16);
        assert!(mrt_gain(&r, 2, 1).is_err());
        assert!(mrt_gain(&r, 0, 0).is_err());
        assert!(mrt_gain(&r, 0, 17).is_err());
    }

    #[test]
    fn channel_hardening() {
        // Law of large numbers: mean of mrt_gain / n_t near 1 for large
        // antenna counts.
        let p = SystemParams {
            n_f: 1,
            ..SystemParams::default()
        };
        for n_t in [100u32, 500] {
            let mut sum = 0.0;
            let drops = 2000;
            for seed in 0..drops {
                let r = sample_channel(&p, seed);
                sum += mrt_gain(&r, 0, n_t).unwrap() / n_t as f64;
            }
            let mean = sum / drops as f64;
            assert!(
                (mean - 1.0).abs() < 0.02,
                "hardening mean at n_t={n_t}: {mean}"
            );
        }
    }

    #[test]
    fn exact_capacity_values() {
        let p = SystemParams::default();
        let w = p.subcarrier_bandwidth();
        assert_eq!(exact_capacity(0.0, 1.0, 1.0, &p), 0.0);

        // SNR exactly one: capacity equals W.
        let snr_one_power = p.noise_power_per_subcarrier;
        assert_relative_eq!(
            exact_capacity(snr_one_power, 1.0, 1.0, &p),
            w,
            max_relative = 1e-12
        );

        // SNR = 1000 -> W log2(1001).
        let snr_1000 = 1000.0 * p.noise_power_per_subcarrier;
        assert_relative_eq!(
            exact_capacity(snr_1000, 1.0, 1.0, &p),
            w * 1001f64.log2(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn asymptotic_capacity_values() {
        let p = SystemParams::default();
        let w = p.subcarrier_bandwidth();

        // SNR exactly one: zero capacity.
        let p_one = p.noise_power_per_subcarrier;
        assert_relative_eq!(
            asymptotic_capacity(p_one, 1.0, 1.0, &p).unwrap(),
            0.0,
            epsilon = 1e-9
        );

        // SNR = 1024 -> 10 W.
        let p_1024 = 1024.0 * p.noise_power_per_subcarrier;
        assert_relative_eq!(
            asymptotic_capacity(p_1024, 1.0, 1.0, &p).unwrap(),
            10.0 * w,
            max_relative = 1e-12
        );

        assert!(asymptotic_capacity(0.0, 1.0, 1.0, &p).is_err());
        assert!(asymptotic_capacity(1.0, 1.0, 0.0, &p).is_err());
        assert!(asymptotic_capacity(-1.0, 1.0, 5.0, &p).is_err());
    }

    #[test]
    fn asymptotic_matches_exact_in_hardened_regime() {
        // With gain hardened near n_t and SNR far above one, the two
        // capacity expressions agree to better than 1%.
        let p = SystemParams {
            n_f: 1,
            ..SystemParams::default()
        };
        let n_t = 200u32;
        let lg = 1.0;
        // Choose power so the asymptotic SNR is ~1000.
        let pw = 1000.0 * p.noise_power_per_subcarrier / (lg * n_t as f64);
        let drops = 500;
        let mut exact_sum = 0.0;
        for seed in 0..drops {
            let r = sample_channel(&p, seed);
            let gain = mrt_gain(&r, 0, n_t).unwrap();
            exact_sum += exact_capacity(pw, lg, gain, &p);
        }
        let exact_mean = exact_sum / drops as f64;
        let asym = asymptotic_capacity(pw, lg, n_t as f64, &p).unwrap();
        let gap = (asym - exact_mean).abs() / exact_mean;
        assert!(gap < 0.01, "relative gap {gap}");
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// Capacity is strictly increasing and concave in power.
            #[test]
            fn exact_capacity_increasing_concave(
                p1 in 1e-6f64..10.0,
                step in 1e-3f64..1.0,
                gain in 1e-3f64..1e3,
            ) {
                let params = SystemParams::default();
                let lg = 1e-12;
                let c0 = exact_capacity(p1, lg, gain, &params);
                let c1 = exact_capacity(p1 + step, lg, gain, &params);
                let c2 = exact_capacity(p1 + 2.0 * step, lg, gain, &params);
                prop_assert!(c1 > c0);
                // Second difference of a concave function is <= 0.
                prop_assert!(c2 - 2.0 * c1 + c0 <= 1e-9 * c1.abs());
            }

            /// Seeded sampling is a pure function of (params, seed).
            #[test]
            fn sampling_deterministic(seed in any::<u64>()) {
                let params = SystemParams {
                    n_f: 1,
                    n_max: 8,
                    ..SystemParams::default()
                };
                let a = sample_channel(&params, seed);
                let b = sample_channel(&params, seed);
                prop_assert_eq!(a.shadowing.to_bits(), b.shadowing.to_bits());
                prop_assert_eq!(a.fading[0][7], b.fading[0][7]);
            }
        }
    }
}
