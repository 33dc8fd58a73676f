//! Constant-envelope pilots, block-fading multipath channels, user CFOs and
//! the received uplink frame.
//!
//! User `u` (zero-based) transmits `p_u[t] = exp(j·2π·u·t/K)`. Each pilot is
//! preceded by a cyclic copy of its last `L − 1` samples, so after the
//! `L`-tap channel the received sinusoid from user `u` is the pilot scaled by
//! the channel's frequency response at `2πu/K`. Frames are synthesized from
//! that steady-state form directly.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::{PowerDelayProfile, SystemConfig};
use crate::error::{Error, Result};

/// `exp(j·2π·idx/n)`, exact on the axes.
pub fn root_of_unity(idx: usize, n: usize) -> Complex64 {
    let idx = idx % n;
    if (4 * idx).is_multiple_of(n) {
        return match 4 * idx / n {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    let theta = 2.0 * PI * idx as f64 / n as f64;
    Complex64::new(libm::cos(theta), libm::sin(theta))
}

/// `exp(j·theta)`.
pub(crate) fn cis(theta: f64) -> Complex64 {
    let (s, c) = libm::sincos(theta);
    Complex64::new(c, s)
}

/// Pilot of user `user` (zero-based) out of `users`, `len` samples long.
pub fn gen_pilot(user: usize, users: usize, len: usize) -> Result<Vec<Complex64>> {
    if users == 0 || user >= users {
        return Err(Error::arg("user", "must lie in 0..K"));
    }
    if len == 0 {
        return Err(Error::arg("len", "must be at least 1"));
    }
    Ok((0..len)
        .map(|t| root_of_unity((user * t) % users, users))
        .collect())
}

/// One block-fading channel draw: taps `h_{m,u}[l]` and the effective gains
/// `H_{m,u} = Σ_l h_{m,u}[l]·exp(−j·2π·u·l/K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    antennas: usize,
    users: usize,
    taps: usize,
    tap_gains: Vec<Complex64>,
    effective: Vec<Complex64>,
}

impl ChannelRealization {
    /// `tap_gains` is row-major `antennas × users × taps`.
    pub fn from_taps(
        antennas: usize,
        users: usize,
        taps: usize,
        tap_gains: Vec<Complex64>,
    ) -> Result<Self> {
        if antennas == 0 || users == 0 || taps == 0 {
            return Err(Error::arg("channel", "all dimensions must be at least 1"));
        }
        Error::check_dim("channel taps", antennas * users * taps, tap_gains.len())?;
        let effective = tap_gains
            .chunks_exact(taps)
            .enumerate()
            .map(|(mu, h)| {
                let u = mu % users;
                h.iter()
                    .enumerate()
                    .map(|(l, &g)| g * root_of_unity(users - (u * l) % users, users))
                    .sum()
            })
            .collect();
        Ok(ChannelRealization {
            antennas,
            users,
            taps,
            tap_gains,
            effective,
        })
    }

    /// Frequency-flat channel given directly by its effective gains
    /// (`antennas × users`, row-major); the single tap equals the gain.
    pub fn flat(antennas: usize, users: usize, gains: Vec<Complex64>) -> Result<Self> {
        Self::from_taps(antennas, users, 1, gains)
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn taps(&self) -> usize {
        self.taps
    }

    pub fn tap(&self, antenna: usize, user: usize, tap: usize) -> Complex64 {
        self.tap_gains[(antenna * self.users + user) * self.taps + tap]
    }

    pub fn tap_gains(&self) -> &[Complex64] {
        &self.tap_gains
    }

    pub fn effective(&self, antenna: usize, user: usize) -> Complex64 {
        self.effective[antenna * self.users + user]
    }

    /// Effective gains of one antenna, indexed by user.
    pub fn effective_row(&self, antenna: usize) -> &[Complex64] {
        &self.effective[antenna * self.users..(antenna + 1) * self.users]
    }
}

/// Circular-symmetric complex Gaussian with total variance `var`.
pub(crate) fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let scale = libm::sqrt(0.5 * var);
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(scale * re, scale * im)
}

/// `count` i.i.d. `CN(0, var)` samples, in order.
pub fn sample_noise<R: Rng + ?Sized>(count: usize, var: f64, rng: &mut R) -> Vec<Complex64> {
    (0..count).map(|_| complex_normal(rng, var)).collect()
}

/// Independent Rayleigh taps `h_{m,u}[l] ~ CN(0, σ²_{u,l})`, drawn antenna by
/// antenna, then user, then tap.
pub fn sample_channel<R: Rng + ?Sized>(
    pdp: &PowerDelayProfile,
    antennas: usize,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let (users, taps) = (pdp.users(), pdp.taps());
    let mut gains = Vec::with_capacity(antennas * users * taps);
    for _ in 0..antennas {
        for u in 0..users {
            for &var in pdp.row(u) {
                gains.push(complex_normal(rng, var));
            }
        }
    }
    ChannelRealization::from_taps(antennas, users, taps, gains)
}

/// True per-user CFOs in radians per channel use.
#[derive(Debug, Clone, PartialEq)]
pub struct CfoVector(Vec<f64>);

impl CfoVector {
    pub fn new(omega: Vec<f64>, delta_max: f64) -> Result<Self> {
        if omega
            .iter()
            .any(|w| !(w.is_finite() && w.abs() <= delta_max))
        {
            return Err(Error::arg(
                "omega",
                "every CFO must lie in [-delta_max, delta_max]",
            ));
        }
        Ok(CfoVector(omega))
    }

    pub fn zeros(users: usize) -> Self {
        CfoVector(vec![0.0; users])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl core::ops::Index<usize> for CfoVector {
    type Output = f64;

    fn index(&self, u: usize) -> &f64 {
        &self.0[u]
    }
}

/// I.i.d. CFOs, uniform on `[−delta_max, delta_max]`.
pub fn draw_cfos<R: Rng + ?Sized>(delta_max: f64, users: usize, rng: &mut R) -> Result<CfoVector> {
    if !(delta_max.is_finite() && delta_max >= 0.0) {
        return Err(Error::arg("delta_max", "must be finite and non-negative"));
    }
    let omega = (0..users)
        .map(|_| {
            let x: f64 = rng.random();
            // x ∈ [0, 1); clamp guards the rounding of 2x − 1 at the edges
            (delta_max * (2.0 * x - 1.0)).clamp(-delta_max, delta_max)
        })
        .collect();
    Ok(CfoVector(omega))
}

/// Side data carried with a synthesized frame for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub cfos: CfoVector,
    pub channel: ChannelRealization,
    /// Raw noise `n_m[t]`, same layout as the frame samples.
    pub noise: Vec<Complex64>,
    pub pilot_power: f64,
}

/// `M × N` received samples, antenna-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedFrame {
    antennas: usize,
    users: usize,
    len: usize,
    samples: Vec<Complex64>,
    truth: Option<GroundTruth>,
}

impl ReceivedFrame {
    pub fn new(antennas: usize, users: usize, len: usize, samples: Vec<Complex64>) -> Result<Self> {
        if antennas == 0 || users == 0 || len == 0 {
            return Err(Error::arg("frame", "all dimensions must be at least 1"));
        }
        Error::check_dim("frame samples", antennas * len, samples.len())?;
        if let Some(i) = samples
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::NonFinite(i));
        }
        Ok(ReceivedFrame {
            antennas,
            users,
            len,
            samples,
            truth: None,
        })
    }

    pub fn with_truth(mut self, truth: GroundTruth) -> Result<Self> {
        Error::check_dim("truth noise", self.samples.len(), truth.noise.len())?;
        Error::check_dim("truth antennas", self.antennas, truth.channel.antennas())?;
        Error::check_dim("truth users", self.users, truth.channel.users())?;
        Error::check_dim("truth cfos", self.users, truth.cfos.len())?;
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn antenna(&self, m: usize) -> &[Complex64] {
        &self.samples[m * self.len..(m + 1) * self.len]
    }

    pub fn truth(&self) -> Option<&GroundTruth> {
        self.truth.as_ref()
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }
}

/// Received pilot block `r_m[t] = √p_u Σ_u H_{m,u} exp(j(2πu/K + ω_u)t) + n_m[t]`.
///
/// Noise is drawn antenna by antenna, sample by sample (real part first)
/// unless the configuration is noiseless.
pub fn synth_frame<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    channel: &ChannelRealization,
    cfos: &CfoVector,
    rng: &mut R,
) -> Result<ReceivedFrame> {
    cfg.validate()?;
    let (m_ant, k, n) = (cfg.antennas, cfg.users, cfg.pilot_len);
    Error::check_dim("channel antennas", m_ant, channel.antennas())?;
    Error::check_dim("channel users", k, channel.users())?;
    Error::check_dim("cfos", k, cfos.len())?;

    let mut tones = Vec::with_capacity(k * n);
    for u in 0..k {
        let w = cfos[u];
        tones.extend((0..n).map(|t| root_of_unity((u * t) % k, k) * cis(w * t as f64)));
    }

    let amp = libm::sqrt(cfg.pilot_power());
    let mut samples = vec![Complex64::new(0.0, 0.0); m_ant * n];
    for (m, row) in samples.chunks_exact_mut(n).enumerate() {
        for (u, tone) in tones.chunks_exact(n).enumerate() {
            let g = amp * channel.effective(m, u);
            if g == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (r, z) in row.iter_mut().zip(tone) {
                *r += g * z;
            }
        }
    }

    let sigma2 = cfg.injected_noise_var();
    let noise = if sigma2 > 0.0 {
        let noise = sample_noise(m_ant * n, sigma2, rng);
        for (r, z) in samples.iter_mut().zip(&noise) {
            *r += *z;
        }
        noise
    } else {
        vec![Complex64::new(0.0, 0.0); m_ant * n]
    };

    ReceivedFrame::new(m_ant, k, n, samples)?.with_truth(GroundTruth {
        cfos: cfos.clone(),
        channel: channel.clone(),
        noise,
        pilot_power: cfg.pilot_power(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::trial_rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn dc_pilot() {
        assert_eq!(gen_pilot(0, 10, 4).unwrap(), vec![c(1.0, 0.0); 4]);
    }

    #[test]
    fn quarter_turn_pilot() {
        let p = gen_pilot(1, 4, 4).unwrap();
        assert_eq!(
            p,
            vec![c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)]
        );
    }

    #[test]
    fn pilot_argument_errors() {
        assert!(gen_pilot(4, 4, 8).is_err());
        assert!(gen_pilot(0, 4, 0).is_err());
        assert!(gen_pilot(0, 0, 4).is_err());
    }

    #[test]
    fn zero_profile_gives_zero_channel() {
        let pdp = PowerDelayProfile::new(3, 2, vec![0.0; 6]).unwrap();
        let ch = sample_channel(&pdp, 4, &mut trial_rng(1, 0)).unwrap();
        assert!(ch.tap_gains().iter().all(|h| h.norm() == 0.0));
        assert!((0..4).all(|m| ch.effective_row(m).iter().all(|h| h.norm() == 0.0)));
    }

    #[test]
    fn effective_gain_definition() {
        let taps: Vec<_> = (0..2 * 3 * 4)
            .map(|i| c(i as f64, 1.0 - i as f64))
            .collect();
        let ch = ChannelRealization::from_taps(2, 3, 4, taps).unwrap();
        for m in 0..2 {
            for u in 0..3 {
                let want: Complex64 = (0..4)
                    .map(|l| {
                        let ph = -2.0 * PI * (u * l) as f64 / 3.0;
                        ch.tap(m, u, l) * c(ph.cos(), ph.sin())
                    })
                    .sum();
                let got = ch.effective(m, u);
                assert!((got - want).norm() <= 1e-12 * want.norm().max(1.0));
            }
        }
    }

    #[test]
    fn cfo_bounds() {
        let d = PI / 2500.0;
        let cfos = draw_cfos(d, 1000, &mut trial_rng(3, 0)).unwrap();
        assert!(cfos.as_slice().iter().all(|w| w.abs() <= d));
        let zero = draw_cfos(0.0, 10, &mut trial_rng(3, 0)).unwrap();
        assert!(zero.as_slice().iter().all(|&w| w == 0.0));
        assert!(CfoVector::new(vec![0.1], 0.01).is_err());
    }

    #[test]
    fn single_unit_user_reproduces_pilot() {
        let cfg = SystemConfig {
            antennas: 3,
            users: 4,
            pilot_len: 16,
            taps: 1,
            gamma: f64::INFINITY,
            coherence_len: None,
            delta_max: 0.01,
            ..SystemConfig::default()
        };
        let mut gains = vec![c(0.0, 0.0); 12];
        for m in 0..3 {
            gains[m * 4 + 2] = c(1.0, 0.0);
        }
        let ch = ChannelRealization::flat(3, 4, gains).unwrap();
        let frame = synth_frame(&cfg, &ch, &CfoVector::zeros(4), &mut trial_rng(0, 0)).unwrap();
        let pilot = gen_pilot(2, 4, 16).unwrap();
        for m in 0..3 {
            assert_eq!(frame.antenna(m), &pilot[..]);
        }
    }

    #[test]
    fn synth_rejects_mismatch() {
        let cfg = SystemConfig {
            antennas: 2,
            users: 2,
            pilot_len: 8,
            taps: 1,
            coherence_len: None,
            delta_max: 0.01,
            ..SystemConfig::default()
        };
        let ch = ChannelRealization::flat(3, 2, vec![c(1.0, 0.0); 6]).unwrap();
        let r = synth_frame(&cfg, &ch, &CfoVector::zeros(2), &mut trial_rng(0, 0));
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn frame_rejects_nan() {
        let r = ReceivedFrame::new(1, 1, 2, vec![c(0.0, 0.0), c(f64::NAN, 0.0)]);
        assert_eq!(r, Err(Error::NonFinite(1)));
    }
}
