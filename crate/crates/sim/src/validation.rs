//! Monte-Carlo check of the closed-form periodogram term moments.
//!
//! The CFOs and the grid offset are drawn once and held fixed; each trial
//! redraws only the channel and the noise, matching the conditioning of the
//! closed forms.

use cecfo_core::seed::trial_rng;
use cecfo_core::{
    analytic_moments, build_grid, decompose_terms, draw_cfos, sample_channel, synth_frame,
    AnalyticMoments, CfoVector, PowerDelayProfile, SystemConfig,
};
use rayon::prelude::*;

use crate::error::{SimError, SimResult};

pub const MIN_TRIALS: usize = 10_000;

/// Stream id reserved for the conditioning CFO draw.
const CFO_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentCheck {
    pub trials: usize,
    pub seed: u64,
    pub user: usize,
    /// Signed grid index of the offset; `None` picks the grid point nearest
    /// the user's true CFO.
    pub offset_index: Option<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentRow {
    pub term: &'static str,
    pub statistic: &'static str,
    pub analytic: f64,
    pub empirical: f64,
    /// `(empirical − analytic)/|analytic|`; NaN when the analytic value is 0.
    pub rel_dev: f64,
    pub std_err: f64,
}

impl MomentRow {
    /// Deviation in standard errors.
    pub fn z_score(&self) -> f64 {
        (self.empirical - self.analytic) / self.std_err
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub cfos: CfoVector,
    pub user: usize,
    pub omega: f64,
    pub analytic: AnalyticMoments,
    pub rows: Vec<MomentRow>,
}

impl MomentReport {
    pub fn row(&self, term: &str, statistic: &str) -> Option<&MomentRow> {
        self.rows
            .iter()
            .find(|r| r.term == term && r.statistic == statistic)
    }

    /// Rows whose relative deviation exceeds `tol`.
    pub fn deviations_over(&self, tol: f64) -> Vec<&MomentRow> {
        self.rows.iter().filter(|r| r.rel_dev.abs() > tol).collect()
    }
}

struct Sample {
    mean: f64,
    var: f64,
    se_mean: f64,
    se_var: f64,
}

fn describe(xs: &[f64]) -> Sample {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for x in xs {
        let d = (x - mean) * (x - mean);
        m2 += d;
        m4 += d * d;
    }
    let var = m2 / (n - 1.0);
    let m4 = m4 / n;
    let pop_var = m2 / n;
    Sample {
        mean,
        var,
        se_mean: (var / n).sqrt(),
        se_var: ((m4 - pop_var * pop_var).max(0.0) / n).sqrt(),
    }
}

fn row(
    term: &'static str,
    statistic: &'static str,
    analytic: f64,
    empirical: f64,
    se: f64,
) -> MomentRow {
    let rel_dev = if analytic == 0.0 {
        f64::NAN
    } else {
        (empirical - analytic) / analytic.abs()
    };
    MomentRow {
        term,
        statistic,
        analytic,
        empirical,
        rel_dev,
        std_err: se,
    }
}

/// Empirical means and variances of the three terms against their closed
/// forms.
pub fn validate_moments(
    cfg: &SystemConfig,
    pdp: &PowerDelayProfile,
    check: &MomentCheck,
) -> SimResult<MomentReport> {
    cfg.validate()?;
    if check.trials < MIN_TRIALS {
        return Err(SimError::Argument(format!(
            "moment validation needs at least {MIN_TRIALS} trials"
        )));
    }
    if check.user >= cfg.users {
        return Err(SimError::Argument(format!(
            "user {} out of range",
            check.user
        )));
    }
    let grid = build_grid(cfg.pilot_len, cfg.alpha, cfg.delta_max)?;
    let cfos = draw_cfos(
        cfg.delta_max,
        cfg.users,
        &mut trial_rng(check.seed, CFO_STREAM),
    )?;
    let pos = match check.offset_index {
        Some(i) => {
            let p = i + grid.t0() as i64;
            if p < 0 || p as usize >= grid.len() {
                return Err(SimError::Argument(format!(
                    "offset index {i} outside the grid"
                )));
            }
            p as usize
        }
        None => {
            let p = (cfos[check.user] / grid.spacing()).round() as i64 + grid.t0() as i64;
            p.clamp(0, grid.len() as i64 - 1) as usize
        }
    };
    let omega = grid.offsets()[pos];
    let analytic = analytic_moments(cfg, pdp, &cfos, check.user, omega)?;

    let terms = (0..check.trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(check.seed, i);
            let channel = sample_channel(pdp, cfg.antennas, &mut rng)?;
            let frame = synth_frame(cfg, &channel, &cfos, &mut rng)?;
            Ok(decompose_terms(&frame, check.user, omega)?)
        })
        .collect::<SimResult<Vec<_>>>()?;

    let t1 = describe(&terms.iter().map(|d| d.t1).collect::<Vec<_>>());
    let t2 = describe(&terms.iter().map(|d| d.t2).collect::<Vec<_>>());
    let t3 = describe(&terms.iter().map(|d| d.t3).collect::<Vec<_>>());
    let a = &analytic;
    let rows = vec![
        row("T1", "mean", a.mean_t1, t1.mean, t1.se_mean),
        row("T1", "variance", a.var_t1, t1.var, t1.se_var),
        row("T2", "mean", a.mean_t2, t2.mean, t2.se_mean),
        row("T2", "variance", a.var_t2, t2.var, t2.se_var),
        row("T3", "mean", a.mean_t3, t3.mean, t3.se_mean),
        row("T3", "variance", a.var_t3, t3.var, t3.se_var),
    ];
    Ok(MomentReport {
        cfos,
        user: check.user,
        omega,
        analytic,
        rows,
    })
}
