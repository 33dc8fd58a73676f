//! Dirichlet kernel, the three-term split of the periodogram and the
//! closed-form means and variances of each term.
//!
//! For user `u` at offset `Ω`, with `ω_{q} := 2π(q − u)/K + ω_q − Ω`,
//!
//! ```text
//! Φ_u(Ω)/p_u = T1 + T2 + T3
//! T1 = (1/M) Σ_m |w_m|²/p_u
//! T2 = (2/M) Re Σ_m w_m*·S_m/√p_u
//! T3 = (1/M) Σ_m |S_m|²
//! ```
//!
//! where `w_m = N^{-1/2} Σ_t n_m[t]·exp(−j(2πu/K + Ω)t)` and
//! `S_m = Σ_q H_{m,q}·A(ω_q)`. Moments are taken over channel and noise with
//! the CFOs and the offset held fixed.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::config::{PowerDelayProfile, SystemConfig};
use crate::error::{Error, Result};
use crate::signal::{cis, root_of_unity, CfoVector, ReceivedFrame};

/// Below this `|sin(x/2)|` the kernel is replaced by its limit.
pub const SINGULARITY_THRESHOLD: f64 = 1e-9;

/// `A(ω) = N^{-1/2} Σ_{t<N} exp(jωt) = N^{-1/2}·sin(Nω/2)/sin(ω/2)·exp(j(N−1)ω/2)`.
///
/// Returns `√N` exactly at `ω ≡ 0 (mod 2π)`.
pub fn dirichlet_kernel(omega: f64, n: usize) -> Complex64 {
    let nf = n as f64;
    let s = libm::sin(0.5 * omega);
    if s.abs() < SINGULARITY_THRESHOLD {
        return Complex64::new(libm::sqrt(nf), 0.0);
    }
    let mag = libm::sin(0.5 * nf * omega) / (s * libm::sqrt(nf));
    cis(0.5 * (nf - 1.0) * omega) * mag
}

/// `sin²(Nx/2)/sin²(x/2)`, with the limit `N²` near `x ≡ 0 (mod 2π)`.
pub fn kernel_power_ratio(x: f64, n: usize) -> f64 {
    let nf = n as f64;
    let s = libm::sin(0.5 * x);
    if s.abs() < SINGULARITY_THRESHOLD {
        return nf * nf;
    }
    let num = libm::sin(0.5 * nf * x);
    (num * num) / (s * s)
}

/// Relative frequency `ω_{q}` of user `q` seen from user `user` at offset `omega`.
pub fn relative_frequency(user: usize, q: usize, users: usize, cfo_q: f64, omega: f64) -> f64 {
    2.0 * PI * (q as f64 - user as f64) / users as f64 + (cfo_q - omega)
}

/// Values of the three periodogram terms for one frame, user and offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermDecomposition {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
}

impl TermDecomposition {
    pub fn total(&self) -> f64 {
        self.t1 + self.t2 + self.t3
    }
}

/// Splits `Φ_user(omega)/p_u` into its noise, cross and signal terms using the
/// frame's ground truth.
pub fn decompose_terms(
    frame: &ReceivedFrame,
    user: usize,
    omega: f64,
) -> Result<TermDecomposition> {
    let truth = frame.truth().ok_or(Error::MissingTruth)?;
    let (m_ant, k, n) = (frame.antennas(), frame.users(), frame.len());
    if user >= k {
        return Err(Error::arg("user", "must lie in 0..K"));
    }
    let pu = truth.pilot_power;
    let inv_sqrt_n = 1.0 / libm::sqrt(n as f64);

    let demod: Vec<Complex64> = (0..n)
        .map(|t| root_of_unity(k - (user * t) % k, k) * cis(-omega * t as f64))
        .collect();
    let kernels: Vec<Complex64> = (0..k)
        .map(|q| dirichlet_kernel(relative_frequency(user, q, k, truth.cfos[q], omega), n))
        .collect();

    let (mut noise_energy, mut cross, mut signal) = (0.0, 0.0, 0.0);
    for m in 0..m_ant {
        let row = &truth.noise[m * n..(m + 1) * n];
        let w: Complex64 = row
            .iter()
            .zip(&demod)
            .map(|(x, y)| x * y)
            .sum::<Complex64>()
            * inv_sqrt_n;
        let s: Complex64 = truth
            .channel
            .effective_row(m)
            .iter()
            .zip(&kernels)
            .map(|(h, a)| h * a)
            .sum();
        noise_energy += w.norm_sqr();
        cross += (w.conj() * s).re;
        signal += s.norm_sqr();
    }
    let mf = m_ant as f64;
    Ok(TermDecomposition {
        t1: noise_energy / (mf * pu),
        t2: 2.0 * cross / (mf * libm::sqrt(pu)),
        t3: signal / mf,
    })
}

/// Closed-form means and variances of the three terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticMoments {
    pub mean_t1: f64,
    pub var_t1: f64,
    pub mean_t2: f64,
    pub var_t2: f64,
    pub mean_t3: f64,
    pub var_t3: f64,
}

pub fn analytic_moments(
    cfg: &SystemConfig,
    pdp: &PowerDelayProfile,
    cfos: &CfoVector,
    user: usize,
    omega: f64,
) -> Result<AnalyticMoments> {
    let (k, n) = (cfg.users, cfg.pilot_len);
    Error::check_dim("pdp users", k, pdp.users())?;
    Error::check_dim("cfos", k, cfos.len())?;
    if user >= k {
        return Err(Error::arg("user", "must lie in 0..K"));
    }
    let (mf, nf, gamma) = (cfg.antennas as f64, n as f64, cfg.gamma);
    let beta = pdp.beta();
    let ratios: Vec<f64> = (0..k)
        .map(|q| kernel_power_ratio(relative_frequency(user, q, k, cfos[q], omega), n))
        .collect();

    let weighted: f64 = beta.iter().zip(&ratios).map(|(b, r)| b * r).sum();
    let mut var_t3 = 0.0;
    for q1 in 0..k {
        for q2 in 0..k {
            var_t3 += beta[q1] * beta[q2] * ratios[q1] * ratios[q2] / (mf * nf * nf);
        }
    }
    Ok(AnalyticMoments {
        mean_t1: 1.0 / gamma,
        var_t1: 1.0 / (mf * gamma * gamma),
        mean_t2: 0.0,
        var_t2: 2.0 * weighted / (mf * nf * gamma),
        mean_t3: weighted / nf,
        var_t3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn kernel_at_zero() {
        let a = dirichlet_kernel(0.0, 800);
        assert_eq!(a, Complex64::new(800f64.sqrt(), 0.0));
        assert!((a.re - 28.2843).abs() < 1e-4);
        assert_eq!(dirichlet_kernel(2.0 * PI, 7).re, 7f64.sqrt());
    }

    #[test]
    fn kernel_zeros() {
        let n = 64;
        for m in [1, 2, 5, 31, 63] {
            let a = dirichlet_kernel(2.0 * PI * m as f64 / n as f64, n);
            assert!(a.norm() < 1e-12, "m={m}: {a}");
        }
        assert!(dirichlet_kernel(PI, 4).norm() < 1e-15);
    }

    #[test]
    fn kernel_matches_sum() {
        let n = 37;
        for &w in &[0.013, -0.4, 1.7, 3.0, -2.9] {
            let direct: Complex64 = (0..n)
                .map(|t| Complex64::new(0.0, w * t as f64).exp())
                .sum::<Complex64>()
                / (n as f64).sqrt();
            assert!((dirichlet_kernel(w, n) - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn ratio_limit() {
        assert_eq!(kernel_power_ratio(0.0, 100), 1e4);
        assert!((kernel_power_ratio(1e-7, 100) - 1e4).abs() / 1e4 < 1e-6);
    }

    #[test]
    fn table_values_at_minus_ten_db() {
        let cfg = SystemConfig::default();
        let pdp = PowerDelayProfile::uniform(10, 5).unwrap();
        let cfos = CfoVector::zeros(10);
        let a = analytic_moments(&cfg, &pdp, &cfos, 3, 0.0).unwrap();
        assert!((a.mean_t1 - 10.0).abs() < 1e-12);
        assert!((a.var_t1 - 1.25).abs() < 1e-12);
        assert_eq!(a.mean_t2, 0.0);
        // with zero CFOs and 10 | N, only the own-user term survives
        assert!((a.mean_t3 - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn zero_profile_moments() {
        let cfg = SystemConfig::default();
        let pdp = PowerDelayProfile::new(10, 5, vec![0.0; 50]).unwrap();
        let a = analytic_moments(&cfg, &pdp, &CfoVector::zeros(10), 0, 1e-4).unwrap();
        assert_eq!((a.var_t2, a.mean_t3, a.var_t3), (0.0, 0.0, 0.0));
    }

    #[test]
    fn missing_truth() {
        let frame = ReceivedFrame::new(1, 1, 4, vec![Complex64::new(0.0, 0.0); 4]).unwrap();
        assert_eq!(decompose_terms(&frame, 0, 0.0), Err(Error::MissingTruth));
    }
}
