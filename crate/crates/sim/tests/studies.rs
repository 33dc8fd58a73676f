use std::time::{Duration, Instant};

use cecfo::experiments::{run_mse, sweep_alpha, sweep_m, SnrProfiles, SnrSearch};
use cecfo::validation::{validate_moments, MomentCheck, MomentReport};
use cecfo_core::{PowerDelayProfile, SystemConfig};

fn small(antennas: usize, users: usize) -> (SystemConfig, PowerDelayProfile) {
    let cfg = SystemConfig {
        antennas,
        users,
        pilot_len: 100,
        taps: 2,
        gamma: 0.5,
        delta_max: 0.3 / users as f64,
        coherence_len: None,
        ..SystemConfig::default()
    };
    (cfg, PowerDelayProfile::uniform(users, 2).unwrap())
}

fn moments(antennas: usize) -> MomentReport {
    let (cfg, pdp) = small(antennas, 4);
    let check = MomentCheck {
        trials: 10_000,
        seed: 21,
        user: 1,
        offset_index: None,
    };
    validate_moments(&cfg, &pdp, &check).unwrap()
}

#[test]
fn moments_scale_with_array_size() {
    let (a, b) = (moments(4), moments(8));
    assert_eq!(a.cfos, b.cfos);
    assert_eq!(a.omega, b.omega);
    for term in ["T1", "T2", "T3"] {
        let (va, vb) = (
            a.row(term, "variance").unwrap(),
            b.row(term, "variance").unwrap(),
        );
        assert!((va.analytic / vb.analytic - 2.0).abs() < 1e-12, "{term}");
        let ratio = va.empirical / vb.empirical;
        assert!((ratio - 2.0).abs() < 0.2, "{term} variance ratio {ratio}");
    }
    for term in ["T1", "T3"] {
        let (ma, mb) = (a.row(term, "mean").unwrap(), b.row(term, "mean").unwrap());
        assert!((ma.analytic - mb.analytic).abs() <= 1e-12 * ma.analytic);
        assert!((ma.empirical / mb.empirical - 1.0).abs() < 0.05, "{term}");
    }
}

#[test]
fn too_few_moment_trials_rejected() {
    let (cfg, pdp) = small(4, 4);
    let check = MomentCheck {
        trials: 100,
        seed: 1,
        user: 0,
        offset_index: None,
    };
    assert!(validate_moments(&cfg, &pdp, &check).is_err());
}

#[test]
fn doubling_trials_shrinks_interval() {
    let (cfg, pdp) = small(8, 4);
    let search = |trials| SnrSearch {
        target_mse: 1e-4,
        trials,
        tol_db: 0.5,
        bracket_db: (-25.0, 30.0),
        seed: 4,
    };
    let a = sweep_m(&cfg, &pdp, &[8], &search(400)).unwrap();
    let b = sweep_m(&cfg, &pdp, &[8], &search(800)).unwrap();
    assert_eq!(a.len(), 1);
    // the low bracket end is evaluated first and at the same SNR in both runs
    let (wa, wb) = (
        a[0].1.evaluations[0].1.half_width,
        b[0].1.evaluations[0].1.half_width,
    );
    let ratio = wb / wa;
    assert!((ratio * 2f64.sqrt() - 1.0).abs() <= 0.2, "ratio {ratio}");
}

#[test]
fn search_meets_target_at_returned_snr() {
    let (cfg, pdp) = small(8, 4);
    let search = SnrSearch {
        target_mse: 1e-4,
        trials: 300,
        tol_db: 0.1,
        bracket_db: (-25.0, 30.0),
        seed: 2,
    };
    let r = &sweep_m(&cfg, &pdp, &[8], &search).unwrap()[0].1;
    assert!(r.bracket.1 - r.bracket.0 <= 0.1);
    assert!(r.estimate_at_star().unwrap().mse <= 1e-4);
    assert!(r
        .evaluations
        .iter()
        .any(|(db, e)| *db == r.bracket.0 && e.mse > 1e-4));
}

#[test]
fn alpha_sweep_reuses_draws() {
    let (cfg, pdp) = small(4, 3);
    let rows = sweep_alpha(&cfg, &pdp, &[1.2, 1.5, 1.8], 40, 6).unwrap();
    let digest = rows[0].1.draw_digest;
    assert!(rows.iter().all(|(_, e)| e.draw_digest == digest));
    let other = sweep_alpha(&cfg, &pdp, &[1.2], 40, 7).unwrap();
    assert_ne!(other[0].1.draw_digest, digest);
    // the SNR only scales the pilot, so the draws are shared across SNRs too
    let louder = run_mse(&cfg.with_snr_db(10.0), &pdp, 40, 6).unwrap();
    assert_eq!(
        louder.draw_digest,
        run_mse(&cfg, &pdp, 40, 6).unwrap().draw_digest
    );
}

#[test]
fn profiles_track_direct_runs_across_snr() {
    let (cfg, pdp) = small(6, 5);
    let profiles = SnrProfiles::draw(&cfg, &pdp, 60, 13).unwrap();
    for db in [-20.0, -5.0, 0.0, 15.0] {
        let direct = run_mse(&cfg.with_snr_db(db), &pdp, 60, 13).unwrap();
        let fast = profiles.mse_at(db);
        assert!(
            (direct.mse - fast.mse).abs() <= 1e-12 * direct.mse,
            "{db} dB"
        );
        assert_eq!(direct.per_user.len(), fast.per_user.len());
    }
}

fn best_run(antennas: usize, users: usize) -> Duration {
    let cfg = SystemConfig {
        antennas,
        users,
        pilot_len: 400,
        taps: 2,
        gamma: 0.1,
        delta_max: 0.3 / 10.0,
        coherence_len: None,
        ..SystemConfig::default()
    };
    let pdp = PowerDelayProfile::uniform(users, 2).unwrap();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    (0..5)
        .map(|_| {
            let start = Instant::now();
            pool.install(|| run_mse(&cfg, &pdp, 10, 3)).unwrap();
            start.elapsed()
        })
        .min()
        .unwrap()
}

#[test]
fn mse_runtime_scales_linearly() {
    let by_m = best_run(40, 5).as_secs_f64() / best_run(20, 5).as_secs_f64();
    let by_k = best_run(20, 10).as_secs_f64() / best_run(20, 5).as_secs_f64();
    assert!(by_m <= 2.3, "M doubling: ×{by_m:.2}");
    assert!(by_k <= 2.3, "K doubling: ×{by_k:.2}");
}
