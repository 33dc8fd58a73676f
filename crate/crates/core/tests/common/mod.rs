#![allow(dead_code)]

use std::f64::consts::PI;

use cecfo_core::{CfoVector, ChannelRealization, Complex64, ReceivedFrame, SystemConfig};

pub fn small_config(antennas: usize, users: usize, pilot_len: usize, taps: usize) -> SystemConfig {
    SystemConfig {
        antennas,
        users,
        pilot_len,
        taps,
        gamma: 1.0,
        delta_max: 0.5 * PI / users as f64,
        alpha: 1.5,
        noise_var: 1.0,
        coherence_len: None,
    }
}

/// Direct evaluation of the spatially averaged periodogram: full-phase
/// trigonometry per sample, no folding.
pub fn direct_periodogram(frame: &ReceivedFrame, user: usize, omega: f64) -> f64 {
    let theta = 2.0 * PI * user as f64 / frame.users() as f64 + omega;
    let mut total = 0.0;
    for m in 0..frame.antennas() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (t, r) in frame.antenna(m).iter().enumerate() {
            let ph = -theta * t as f64;
            acc += r * Complex64::new(ph.cos(), ph.sin());
        }
        total += acc.norm_sqr();
    }
    total / (frame.antennas() * frame.len()) as f64
}

/// Tap-domain synthesis: each pilot is sent with a cyclic copy of its last
/// `L − 1` samples, passed through the `L`-tap channel, then rotated by the
/// user's CFO at receive time.
pub fn convolution_samples(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    cfos: &CfoVector,
    noise: &[Complex64],
) -> Vec<Complex64> {
    let (m_ant, k, n, l) = (cfg.antennas, cfg.users, cfg.pilot_len, ch.taps());
    let amp = cfg.pilot_power().sqrt();
    let pilot = |u: usize, idx: usize| {
        let ph = 2.0 * PI * (u * idx) as f64 / k as f64;
        Complex64::new(ph.cos(), ph.sin())
    };
    let mut out = vec![Complex64::new(0.0, 0.0); m_ant * n];
    for m in 0..m_ant {
        for t in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for u in 0..k {
                let mut conv = Complex64::new(0.0, 0.0);
                for tap in 0..l {
                    // transmitted index t − tap, wrapped into the cyclic prefix
                    let idx = (t + n - tap) % n;
                    conv += ch.tap(m, u, tap) * pilot(u, idx);
                }
                let ph = cfos[u] * t as f64;
                acc += conv * Complex64::new(ph.cos(), ph.sin());
            }
            out[m * n + t] = amp * acc + noise[m * n + t];
        }
    }
    out
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
