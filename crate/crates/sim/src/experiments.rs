//! Monte-Carlo MSE of the CFO estimator and the studies built on it.
//!
//! Trial `i` of a run with master seed `s` draws, from
//! [`trial_rng`]`(s, i)` and in this order: the `K` CFOs, the channel taps,
//! then the frame noise. Nothing in a trial depends on `α` or on the SNR
//! except through the grid and the pilot amplitude, so sweeps over either
//! reuse identical draws. Trials run on the current rayon pool and are
//! reduced in trial order, so results do not depend on the thread count.

use cecfo_core::config::db_to_linear;
use cecfo_core::seed::{derive_seed, splitmix64, trial_rng};
use cecfo_core::{
    build_grid, draw_cfos, sample_channel, sample_noise, synth_frame, AmplitudeProfile,
    ChannelRealization, Complex64, PeriodogramPlan, PowerDelayProfile, ReceivedFrame, SystemConfig,
};
use rayon::prelude::*;

use crate::error::{SimError, SimResult};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Pooled mean squared CFO error over users and trials.
#[derive(Debug, Clone, PartialEq)]
pub struct MseEstimate {
    pub mse: f64,
    pub trials: usize,
    pub seed: u64,
    /// 95% confidence half-width of `mse`.
    pub half_width: f64,
    pub per_user: Vec<f64>,
    /// Fingerprint of every random draw of the run.
    pub draw_digest: u64,
}

fn trial_digest(
    trial: u64,
    cfos: &[f64],
    channel: &ChannelRealization,
    last_noise: Option<&Complex64>,
) -> u64 {
    let mut digest = trial;
    for w in cfos {
        digest = mix(digest, w.to_bits());
    }
    let h = channel.tap(0, 0, 0);
    digest = mix(mix(digest, h.re.to_bits()), h.im.to_bits());
    if let Some(n) = last_noise {
        digest = mix(mix(digest, n.re.to_bits()), n.im.to_bits());
    }
    digest
}

struct TrialOutcome {
    sq_err: Vec<f64>,
    digest: u64,
}

fn mix(h: u64, x: u64) -> u64 {
    splitmix64(h ^ x)
}

fn run_trial(
    cfg: &SystemConfig,
    pdp: &PowerDelayProfile,
    plan: &PeriodogramPlan,
    seed: u64,
    trial: u64,
) -> SimResult<TrialOutcome> {
    let mut rng = trial_rng(seed, trial);
    let cfos = draw_cfos(cfg.delta_max, cfg.users, &mut rng)?;
    let channel = sample_channel(pdp, cfg.antennas, &mut rng)?;
    let frame = synth_frame(cfg, &channel, &cfos, &mut rng)?;
    let results = plan.estimate_all(&frame)?;

    let noise = frame.truth().and_then(|t| t.noise.last());
    let digest = trial_digest(trial, cfos.as_slice(), &channel, noise);

    let sq_err = results
        .iter()
        .map(|r| (r.estimate - cfos[r.user]).powi(2))
        .collect();
    Ok(TrialOutcome { sq_err, digest })
}

/// MSE of the grid estimator over `trials` independent (CFO, channel, noise)
/// draws.
pub fn run_mse(
    cfg: &SystemConfig,
    pdp: &PowerDelayProfile,
    trials: usize,
    seed: u64,
) -> SimResult<MseEstimate> {
    check_run(cfg, pdp, trials)?;
    let grid = build_grid(cfg.pilot_len, cfg.alpha, cfg.delta_max)?;
    let plan = PeriodogramPlan::new(grid, cfg.users)?;

    let outcomes = (0..trials as u64)
        .into_par_iter()
        .map(|i| run_trial(cfg, pdp, &plan, seed, i))
        .collect::<SimResult<Vec<_>>>()?;
    Ok(pool(&outcomes, cfg.users, seed))
}

fn check_run(cfg: &SystemConfig, pdp: &PowerDelayProfile, trials: usize) -> SimResult<()> {
    cfg.validate()?;
    if trials == 0 {
        return Err(SimError::Argument("trials must be at least 1".into()));
    }
    if pdp.users() != cfg.users || pdp.taps() != cfg.taps {
        return Err(SimError::Argument(format!(
            "power delay profile is {}x{}, scenario needs {}x{}",
            pdp.users(),
            pdp.taps(),
            cfg.users,
            cfg.taps
        )));
    }
    Ok(())
}

/// Pools per-trial squared errors, in trial order.
fn pool(outcomes: &[TrialOutcome], k: usize, seed: u64) -> MseEstimate {
    let trials = outcomes.len();
    let mut per_user = vec![0.0; k];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    let mut digest = seed;
    for o in outcomes {
        for (acc, &e) in per_user.iter_mut().zip(&o.sq_err) {
            *acc += e;
            sum += e;
            sum_sq += e * e;
        }
        digest = mix(digest, o.digest);
    }
    let count = (trials * k) as f64;
    let mse = sum / count;
    let var = if count > 1.0 {
        ((sum_sq - count * mse * mse) / (count - 1.0)).max(0.0)
    } else {
        0.0
    };
    per_user.iter_mut().for_each(|v| *v /= trials as f64);
    MseEstimate {
        mse,
        trials,
        seed,
        half_width: Z95 * (var / count).sqrt(),
        per_user,
        draw_digest: digest,
    }
}

struct TrialProfile {
    profile: AmplitudeProfile,
    cfos: Vec<f64>,
    digest: u64,
}

/// The draws of an MSE run, reduced to per-trial periodogram profiles so the
/// MSE can be re-evaluated at any SNR without re-synthesizing frames.
///
/// Trial `i` consumes its generator exactly as [`run_mse`] does, so
/// `profiles.mse_at(γ)` and `run_mse` at SNR `γ` see the same CFOs, channels
/// and noise (up to floating-point rounding of the periodogram).
pub struct SnrProfiles {
    offsets: Vec<f64>,
    noise_var: f64,
    seed: u64,
    users: usize,
    trials: Vec<TrialProfile>,
}

impl SnrProfiles {
    /// Draws `trials` trials of `cfg`; its SNR is ignored.
    pub fn draw(
        cfg: &SystemConfig,
        pdp: &PowerDelayProfile,
        trials: usize,
        seed: u64,
    ) -> SimResult<Self> {
        check_run(cfg, pdp, trials)?;
        let grid = build_grid(cfg.pilot_len, cfg.alpha, cfg.delta_max)?;
        let offsets = grid.offsets().to_vec();
        let plan = PeriodogramPlan::new(grid, cfg.users)?;
        let unit = SystemConfig {
            gamma: f64::INFINITY,
            noise_var: 1.0,
            ..*cfg
        };
        let (m, n) = (cfg.antennas, cfg.pilot_len);
        let trials = (0..trials as u64)
            .into_par_iter()
            .map(|i| -> SimResult<TrialProfile> {
                let mut rng = trial_rng(seed, i);
                let cfos = draw_cfos(cfg.delta_max, cfg.users, &mut rng)?;
                let channel = sample_channel(pdp, m, &mut rng)?;
                let signal = synth_frame(&unit, &channel, &cfos, &mut rng)?;
                let noise = sample_noise(m * n, cfg.noise_var, &mut rng);
                let digest = trial_digest(i, cfos.as_slice(), &channel, noise.last());
                let noise = ReceivedFrame::new(m, cfg.users, n, noise)?;
                Ok(TrialProfile {
                    profile: plan.amplitude_profile(&signal, &noise)?,
                    cfos: cfos.as_slice().to_vec(),
                    digest,
                })
            })
            .collect::<SimResult<Vec<_>>>()?;
        Ok(SnrProfiles {
            offsets,
            noise_var: cfg.noise_var,
            seed,
            users: cfg.users,
            trials,
        })
    }

    /// Pooled MSE at pilot SNR `snr_db`.
    pub fn mse_at(&self, snr_db: f64) -> MseEstimate {
        let amp = (self.noise_var * db_to_linear(snr_db)).sqrt();
        let outcomes: Vec<TrialOutcome> = self
            .trials
            .par_iter()
            .map(|t| TrialOutcome {
                sq_err: (0..self.users)
                    .map(|u| (self.offsets[t.profile.argmax(u, amp)] - t.cfos[u]).powi(2))
                    .collect(),
                digest: t.digest,
            })
            .collect();
        pool(&outcomes, self.users, self.seed)
    }
}

/// MSE for each grid exponent, with common random numbers across exponents.
pub fn sweep_alpha(
    base: &SystemConfig,
    pdp: &PowerDelayProfile,
    alphas: &[f64],
    trials: usize,
    seed: u64,
) -> SimResult<Vec<(f64, MseEstimate)>> {
    if let Some(a) = alphas.iter().find(|a| a.is_nan() || **a <= 1.0) {
        return Err(SimError::Argument(format!("alpha {a} must exceed 1")));
    }
    alphas
        .iter()
        .map(|&alpha| {
            let cfg = SystemConfig { alpha, ..*base };
            run_mse(&cfg, pdp, trials, seed).map(|e| (alpha, e))
        })
        .collect()
}

/// Parameters of a minimum-SNR search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrSearch {
    pub target_mse: f64,
    pub trials: usize,
    /// Stop once the bracket is at most this wide (dB).
    pub tol_db: f64,
    /// Initial `(low, high)` SNR bracket (dB).
    pub bracket_db: (f64, f64),
    pub seed: u64,
}

impl Default for SnrSearch {
    fn default() -> Self {
        SnrSearch {
            target_mse: 1e-8,
            trials: 2000,
            tol_db: 0.1,
            bracket_db: (-25.0, 0.0),
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnrSearchResult {
    /// Smallest evaluated SNR whose measured MSE meets the target.
    pub gamma_star_db: f64,
    /// Final bracket; the MSE misses the target at `.0` and meets it at `.1`.
    pub bracket: (f64, f64),
    pub evaluations: Vec<(f64, MseEstimate)>,
}

impl SnrSearchResult {
    pub fn estimate_at_star(&self) -> Option<&MseEstimate> {
        self.evaluations
            .iter()
            .find(|(db, _)| *db == self.gamma_star_db)
            .map(|(_, e)| e)
    }
}

/// Bisection in dB for the smallest SNR at which the MSE meets the target.
///
/// Every evaluation reuses one set of draws (see [`SnrProfiles`]), so the
/// measured MSE curve is a deterministic function of the SNR and successive
/// midpoints compare like with like. The search treats the MSE as non-increasing in SNR and returns
/// the upper end of the final bracket, where the measured MSE is at most the
/// target.
pub fn min_snr_for_mse(
    base: &SystemConfig,
    pdp: &PowerDelayProfile,
    search: &SnrSearch,
) -> SimResult<SnrSearchResult> {
    let SnrSearch {
        target_mse,
        trials,
        tol_db,
        bracket_db: (mut low, mut high),
        seed,
    } = *search;
    let positive = |x: f64| x > 0.0;
    if !positive(tol_db) || !positive(target_mse) || !positive(high - low) {
        return Err(SimError::Argument(
            "search needs tol_db > 0, low < high and a positive target".into(),
        ));
    }
    let floor = build_grid(base.pilot_len, base.alpha, base.delta_max)?.quantization_floor();
    if target_mse <= floor {
        return Err(SimError::Infeasible {
            target: target_mse,
            floor,
        });
    }

    let profiles = SnrProfiles::draw(base, pdp, trials, seed)?;
    let mut evaluations = Vec::new();
    let mut eval = |db: f64| -> SimResult<f64> {
        let est = profiles.mse_at(db);
        let mse = est.mse;
        evaluations.push((db, est));
        Ok(mse)
    };
    let mse_low = eval(low)?;
    let mse_high = eval(high)?;
    if mse_low <= target_mse || mse_high > target_mse {
        return Err(SimError::Bracket {
            low_db: low,
            high_db: high,
            mse_low,
            mse_high,
            target: target_mse,
        });
    }
    while high - low > tol_db {
        let mid = 0.5 * (low + high);
        if eval(mid)? <= target_mse {
            high = mid;
        } else {
            low = mid;
        }
    }
    Ok(SnrSearchResult {
        gamma_star_db: high,
        bracket: (low, high),
        evaluations,
    })
}

/// Seed of the sub-study for antenna count `antennas`.
pub fn antenna_seed(seed: u64, antennas: usize) -> u64 {
    derive_seed(seed, antennas as u64)
}

/// Minimum SNR for each antenna count, each search with its own sub-seed.
pub fn sweep_m(
    base: &SystemConfig,
    pdp: &PowerDelayProfile,
    antennas: &[usize],
    search: &SnrSearch,
) -> SimResult<Vec<(usize, SnrSearchResult)>> {
    antennas
        .iter()
        .map(|&m| {
            let cfg = SystemConfig {
                antennas: m,
                ..*base
            };
            let s = SnrSearch {
                seed: antenna_seed(search.seed, m),
                ..*search
            };
            min_snr_for_mse(&cfg, pdp, &s).map(|r| (m, r))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> (SystemConfig, PowerDelayProfile) {
        let cfg = SystemConfig {
            antennas: 4,
            users: 3,
            pilot_len: 60,
            taps: 2,
            delta_max: 0.02,
            coherence_len: None,
            ..SystemConfig::default()
        };
        (cfg, PowerDelayProfile::uniform(3, 2).unwrap())
    }

    #[test]
    fn pooled_is_mean_of_per_user() {
        let (cfg, pdp) = tiny();
        let e = run_mse(&cfg, &pdp, 50, 9).unwrap();
        let mean = e.per_user.iter().sum::<f64>() / e.per_user.len() as f64;
        assert!((e.mse - mean).abs() <= 1e-12 * e.mse);
        assert!(e.half_width >= 0.0);
        let grid = build_grid(cfg.pilot_len, cfg.alpha, cfg.delta_max).unwrap();
        assert!(e.mse <= (grid.half_span() + cfg.delta_max).powi(2));
    }

    #[test]
    fn same_seed_same_estimate() {
        let (cfg, pdp) = tiny();
        assert_eq!(
            run_mse(&cfg, &pdp, 20, 3).unwrap(),
            run_mse(&cfg, &pdp, 20, 3).unwrap()
        );
        assert_ne!(
            run_mse(&cfg, &pdp, 20, 3).unwrap().draw_digest,
            run_mse(&cfg, &pdp, 20, 4).unwrap().draw_digest
        );
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let (cfg, pdp) = tiny();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = one.install(|| run_mse(&cfg, &pdp, 40, 5)).unwrap();
        let b = four.install(|| run_mse(&cfg, &pdp, 40, 5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn profiles_reproduce_direct_runs() {
        let (cfg, pdp) = tiny();
        let profiles = SnrProfiles::draw(&cfg, &pdp, 30, 8).unwrap();
        for db in [-15.0, -3.0, 10.0] {
            let direct = run_mse(&cfg.with_snr_db(db), &pdp, 30, 8).unwrap();
            let fast = profiles.mse_at(db);
            assert_eq!(direct.draw_digest, fast.draw_digest);
            assert!((direct.mse - fast.mse).abs() <= 1e-12 * direct.mse.max(1e-300));
        }
    }

    #[test]
    fn zero_trials_rejected() {
        let (cfg, pdp) = tiny();
        assert!(run_mse(&cfg, &pdp, 0, 1).is_err());
    }

    #[test]
    fn alpha_sweep_rejects_alpha_one() {
        let (cfg, pdp) = tiny();
        assert!(sweep_alpha(&cfg, &pdp, &[1.5, 1.0], 5, 1).is_err());
    }

    #[test]
    fn infeasible_target() {
        let cfg = SystemConfig {
            pilot_len: 800,
            alpha: 1.2,
            ..SystemConfig::default()
        };
        let pdp = PowerDelayProfile::uniform(10, 5).unwrap();
        let floor = build_grid(800, 1.2, cfg.delta_max)
            .unwrap()
            .quantization_floor();
        assert!(floor > 1e-8);
        let r = min_snr_for_mse(&cfg, &pdp, &SnrSearch::default());
        assert!(matches!(r, Err(SimError::Infeasible { .. })));
    }

    #[test]
    fn bracket_must_straddle() {
        let (cfg, pdp) = tiny();
        let search = SnrSearch {
            target_mse: 1.0,
            trials: 5,
            bracket_db: (-5.0, 0.0),
            ..SnrSearch::default()
        };
        assert!(matches!(
            min_snr_for_mse(&cfg, &pdp, &search),
            Err(SimError::Bracket { .. })
        ));
    }
}
