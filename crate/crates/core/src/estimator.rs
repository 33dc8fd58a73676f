//! Per-user CFO search on the spatially averaged periodogram.
//!
//! For user `u` and offset `Ω` the statistic is
//! `Φ_u(Ω) = (1/MN) Σ_m |Σ_t r_m[t]·exp(−j(2πu/K + Ω)t)|²`, evaluated on the
//! grid `Ω(i) = 2πi/N^α`, `|i| ≤ T₀`, `T₀ = ⌈Δmax·N^α/(2π)⌉`.
//!
//! Evaluation splits the demodulating exponential into the user tone
//! `exp(−j2πut/K)`, which is periodic in `t` with period `K`, and the offset
//! phasor `exp(−jΩt)`. Each antenna row is multiplied by the offset phasor
//! and folded into `K` residue bins (`t mod K`); a `K`-term sum against the
//! user tone then yields the inner DFT sum for every user at once. Work per
//! antenna and offset is `N + K²` for all users instead of `K·N`.
//!
//! Accumulation order is fixed: residue bins in time order, bins in residue
//! order, antennas in index order. Evaluating one user or all users yields
//! bit-identical values.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::{cis, root_of_unity, ReceivedFrame};

/// Discrete offset set `Ω(i) = i·spacing`, `i = −T₀..=T₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    pilot_len: usize,
    alpha: f64,
    t0: usize,
    spacing: f64,
    offsets: Vec<f64>,
}

/// Search grid for pilot length `pilot_len`, exponent `alpha > 1` and
/// maximum CFO `delta_max`. The outermost points may exceed `delta_max`.
pub fn build_grid(pilot_len: usize, alpha: f64, delta_max: f64) -> Result<FrequencyGrid> {
    if pilot_len == 0 {
        return Err(Error::arg("pilot_len", "must be at least 1"));
    }
    if !(alpha.is_finite() && alpha > 1.0) {
        return Err(Error::arg("alpha", "must exceed 1"));
    }
    if !(delta_max.is_finite() && delta_max > 0.0) {
        return Err(Error::arg("delta_max", "must be positive and finite"));
    }
    let resolution = libm::pow(pilot_len as f64, alpha);
    let t0 = libm::ceil(delta_max * resolution / (2.0 * PI)) as usize;
    let spacing = 2.0 * PI / resolution;
    let offsets = (0..=2 * t0)
        .map(|j| spacing * (j as f64 - t0 as f64))
        .collect();
    Ok(FrequencyGrid {
        pilot_len,
        alpha,
        t0,
        spacing,
        offsets,
    })
}

impl FrequencyGrid {
    pub fn t0(&self) -> usize {
        self.t0
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn pilot_len(&self) -> usize {
        self.pilot_len
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Largest offset magnitude, `T₀·spacing`.
    pub fn half_span(&self) -> f64 {
        self.t0 as f64 * self.spacing
    }

    /// Signed grid index `i` of storage position `pos`.
    pub fn signed_index(&self, pos: usize) -> i64 {
        pos as i64 - self.t0 as i64
    }

    /// Squared error floor of nearest-point rounding, `spacing²/12`.
    pub fn quantization_floor(&self) -> f64 {
        self.spacing * self.spacing / 12.0
    }
}

/// Periodogram of one user over the grid, with its maximizer.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodogramResult {
    /// Zero-based user index.
    pub user: usize,
    /// `Φ_u(Ω(i))` in grid order.
    pub values: Vec<f64>,
    /// Storage position of the maximum; ties go to the lowest position.
    pub argmax_index: usize,
    pub estimate: f64,
}

impl PeriodogramResult {
    fn from_values(user: usize, values: Vec<f64>, grid: &FrequencyGrid) -> Self {
        let best = argmax_lowest(values.iter().copied());
        PeriodogramResult {
            user,
            estimate: grid.offsets[best],
            argmax_index: best,
            values,
        }
    }
}

/// `exp(−j2πs/K)` for `s = 0..K`.
fn user_twiddles(users: usize) -> Vec<Complex64> {
    (0..users)
        .map(|s| root_of_unity(users - s, users))
        .collect()
}

/// `bins[s] = Σ_{t ≡ s mod K} row[t]·phasor[t]`.
fn fold(row: &[Complex64], phasor: &[Complex64], bins: &mut [Complex64]) {
    let k = bins.len();
    bins.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
    let mut rows = row.chunks_exact(k);
    let mut phs = phasor.chunks_exact(k);
    for (r, p) in (&mut rows).zip(&mut phs) {
        for ((b, x), y) in bins.iter_mut().zip(r).zip(p) {
            *b += x * y;
        }
    }
    for ((b, x), y) in bins.iter_mut().zip(rows.remainder()).zip(phs.remainder()) {
        *b += x * y;
    }
}

/// `Σ_s bins[s]·exp(−j2πus/K)`.
fn user_projection(bins: &[Complex64], twiddles: &[Complex64], user: usize) -> Complex64 {
    let k = bins.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for (s, b) in bins.iter().enumerate() {
        acc += b * twiddles[(user * s) % k];
    }
    acc
}

fn user_power(bins: &[Complex64], twiddles: &[Complex64], user: usize) -> f64 {
    user_projection(bins, twiddles, user).norm_sqr()
}

/// First position of the maximum.
fn argmax_lowest(values: impl Iterator<Item = f64>) -> usize {
    let (mut best, mut best_v) = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if i == 0 || v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

/// Periodogram of `a·s + w` as an exact quadratic in the amplitude `a`,
/// for a signal frame `s` and a noise frame `w`:
/// `Φ_u(Ω(i); a) = a²·S + a·C + W`.
///
/// With `s` synthesized at unit pilot power and `a = √p`, one pass over the
/// samples yields the periodogram at every pilot power.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeProfile {
    grid_len: usize,
    /// User-major, `grid_len` entries per user.
    signal: Vec<f64>,
    cross: Vec<f64>,
    noise: Vec<f64>,
}

impl AmplitudeProfile {
    pub fn users(&self) -> usize {
        self.signal.len() / self.grid_len
    }

    pub fn grid_len(&self) -> usize {
        self.grid_len
    }

    fn at(&self, user: usize, a: f64) -> impl Iterator<Item = f64> + '_ {
        let r = user * self.grid_len..(user + 1) * self.grid_len;
        self.signal[r.clone()]
            .iter()
            .zip(&self.cross[r.clone()])
            .zip(&self.noise[r])
            .map(move |((s, c), w)| a * a * s + a * c + w)
    }

    /// `Φ_user` over the grid at amplitude `a`.
    pub fn values(&self, user: usize, a: f64) -> Vec<f64> {
        self.at(user, a).collect()
    }

    /// Storage position of the maximizer at amplitude `a`, lowest on ties.
    pub fn argmax(&self, user: usize, a: f64) -> usize {
        argmax_lowest(self.at(user, a))
    }
}

/// Precomputed offset phasors for repeated evaluation on frames of one shape.
#[derive(Debug, Clone)]
pub struct PeriodogramPlan {
    grid: FrequencyGrid,
    users: usize,
    /// `exp(−jΩ(i)t)`, one row of `N` per grid point.
    phasors: Vec<Complex64>,
    twiddles: Vec<Complex64>,
}

impl PeriodogramPlan {
    pub fn new(grid: FrequencyGrid, users: usize) -> Result<Self> {
        if users == 0 {
            return Err(Error::arg("users", "must be at least 1"));
        }
        let n = grid.pilot_len;
        let mut phasors = Vec::with_capacity(grid.len() * n);
        for &omega in &grid.offsets {
            phasors.extend((0..n).map(|t| cis(-omega * t as f64)));
        }
        Ok(PeriodogramPlan {
            twiddles: user_twiddles(users),
            grid,
            users,
            phasors,
        })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn users(&self) -> usize {
        self.users
    }

    fn check(&self, frame: &ReceivedFrame) -> Result<()> {
        Error::check_dim("frame length", self.grid.pilot_len, frame.len())?;
        Error::check_dim("frame users", self.users, frame.users())
    }

    /// Rows: selected users in the given order; columns: grid points.
    fn evaluate(&self, frame: &ReceivedFrame, users: &[usize]) -> Vec<Vec<f64>> {
        let (n, g) = (self.grid.pilot_len, self.grid.len());
        let mut acc = vec![vec![0.0; g]; users.len()];
        let mut bins = vec![Complex64::new(0.0, 0.0); self.users];
        for m in 0..frame.antennas() {
            let row = frame.antenna(m);
            for (i, phasor) in self.phasors.chunks_exact(n).enumerate() {
                fold(row, phasor, &mut bins);
                for (a, &u) in acc.iter_mut().zip(users) {
                    a[i] += user_power(&bins, &self.twiddles, u);
                }
            }
        }
        let scale = 1.0 / (frame.antennas() * n) as f64;
        for a in &mut acc {
            a.iter_mut().for_each(|v| *v *= scale);
        }
        acc
    }

    /// Signal, cross and noise parts of every user's periodogram; see
    /// [`AmplitudeProfile`].
    pub fn amplitude_profile(
        &self,
        signal: &ReceivedFrame,
        noise: &ReceivedFrame,
    ) -> Result<AmplitudeProfile> {
        self.check(signal)?;
        self.check(noise)?;
        Error::check_dim("noise antennas", signal.antennas(), noise.antennas())?;
        let (n, g, k) = (self.grid.pilot_len, self.grid.len(), self.users);
        let mut s_acc = vec![0.0; k * g];
        let mut c_acc = vec![0.0; k * g];
        let mut w_acc = vec![0.0; k * g];
        let mut s_bins = vec![Complex64::new(0.0, 0.0); k];
        let mut w_bins = vec![Complex64::new(0.0, 0.0); k];
        for m in 0..signal.antennas() {
            for (i, phasor) in self.phasors.chunks_exact(n).enumerate() {
                fold(signal.antenna(m), phasor, &mut s_bins);
                fold(noise.antenna(m), phasor, &mut w_bins);
                for u in 0..k {
                    let ys = user_projection(&s_bins, &self.twiddles, u);
                    let yw = user_projection(&w_bins, &self.twiddles, u);
                    s_acc[u * g + i] += ys.norm_sqr();
                    c_acc[u * g + i] += 2.0 * (ys.conj() * yw).re;
                    w_acc[u * g + i] += yw.norm_sqr();
                }
            }
        }
        let scale = 1.0 / (signal.antennas() * n) as f64;
        for v in s_acc.iter_mut().chain(&mut c_acc).chain(&mut w_acc) {
            *v *= scale;
        }
        Ok(AmplitudeProfile {
            grid_len: g,
            signal: s_acc,
            cross: c_acc,
            noise: w_acc,
        })
    }

    pub fn estimate(&self, frame: &ReceivedFrame, user: usize) -> Result<PeriodogramResult> {
        self.check(frame)?;
        if user >= self.users {
            return Err(Error::arg("user", "must lie in 0..K"));
        }
        let values = self.evaluate(frame, &[user]).pop().unwrap_or_default();
        Ok(PeriodogramResult::from_values(user, values, &self.grid))
    }

    pub fn estimate_all(&self, frame: &ReceivedFrame) -> Result<Vec<PeriodogramResult>> {
        self.check(frame)?;
        let users: Vec<usize> = (0..self.users).collect();
        Ok(self
            .evaluate(frame, &users)
            .into_iter()
            .enumerate()
            .map(|(u, values)| PeriodogramResult::from_values(u, values, &self.grid))
            .collect())
    }
}

/// `Φ_user(omega)` for an arbitrary real offset.
pub fn periodogram_at(frame: &ReceivedFrame, user: usize, omega: f64) -> Result<f64> {
    let k = frame.users();
    if user >= k {
        return Err(Error::arg("user", "must lie in 0..K"));
    }
    let n = frame.len();
    let phasor: Vec<Complex64> = (0..n).map(|t| cis(-omega * t as f64)).collect();
    let twiddles = user_twiddles(k);
    let mut bins = vec![Complex64::new(0.0, 0.0); k];
    let mut total = 0.0;
    for m in 0..frame.antennas() {
        fold(frame.antenna(m), &phasor, &mut bins);
        total += user_power(&bins, &twiddles, user);
    }
    Ok(total / (frame.antennas() * n) as f64)
}

/// CFO estimate of one user: the grid offset maximizing its periodogram.
pub fn estimate_cfo(
    frame: &ReceivedFrame,
    user: usize,
    grid: &FrequencyGrid,
) -> Result<PeriodogramResult> {
    PeriodogramPlan::new(grid.clone(), frame.users())?.estimate(frame, user)
}

/// CFO estimates of every user of the frame.
pub fn estimate_all(frame: &ReceivedFrame, grid: &FrequencyGrid) -> Result<Vec<PeriodogramResult>> {
    PeriodogramPlan::new(grid.clone(), frame.users())?.estimate_all(frame)
}
