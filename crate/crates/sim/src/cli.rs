//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use cecfo_core::seed::trial_rng;
use cecfo_core::{build_grid, draw_cfos, estimate_all, sample_channel, synth_frame};
use clap::{Args, Parser, Subcommand};

use crate::error::{SimError, SimResult};
use crate::experiments::{sweep_alpha, sweep_m, SnrSearch};
use crate::frame_io::write_frame;
use crate::output::{
    min_snr_tables, moments_table, mse_alpha_tables, write_atomic, RunManifest, StudyParams, Table,
    ESTIMATE_HEADER,
};
use crate::scenario::Scenario;
use crate::validation::{validate_moments, MomentCheck};

pub const DEFAULT_PILOT_LENS: [usize; 2] = [800, 1000];
pub const DEFAULT_ANTENNAS: [usize; 4] = [40, 80, 160, 320];
pub const DEFAULT_TARGET_MSE: f64 = 1e-8;
pub const DEFAULT_BRACKET_DB: [f64; 2] = [-25.0, 0.0];
pub const DEFAULT_TOL_DB: f64 = 0.1;
pub const DEFAULT_MOMENT_TRIALS: usize = 100_000;

pub fn default_alphas() -> Vec<f64> {
    (11..=20).map(|i| i as f64 / 10.0).collect()
}

#[derive(Debug, Parser)]
#[command(
    name = "cecfo",
    version,
    about = "Constant-envelope pilot CFO estimation experiments"
)]
pub struct Cli {
    /// Maximum worker threads (default: one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario file; the built-in reference scenario when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the scenario's `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the scenario's `trials`.
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Output directory for CSV tables and `manifest.toml`.
    #[arg(long)]
    pub out: PathBuf,
    /// Replay a previous run: scenario, seed, trials and study parameters
    /// all come from this manifest.
    #[arg(long, conflicts_with_all = ["config", "seed", "trials"])]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate every user's CFO on one synthesized frame.
    Estimate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Also dump the frame in the binary frame format.
        #[arg(long)]
        dump_frame: Option<PathBuf>,
    },
    /// MSE against the grid exponent, one curve per pilot length.
    MseAlpha {
        #[command(flatten)]
        study: StudyArgs,
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        pilot_lens: Option<Vec<usize>>,
    },
    /// Minimum SNR reaching a target MSE, per antenna count and pilot length.
    MinSnrVsM {
        #[command(flatten)]
        study: StudyArgs,
        #[arg(long, value_delimiter = ',')]
        antennas: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        pilot_lens: Option<Vec<usize>>,
        #[arg(long)]
        target_mse: Option<f64>,
        /// Initial bracket `LOW,HIGH` in dB.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        bracket_db: Option<Vec<f64>>,
        #[arg(long)]
        tol_db: Option<f64>,
    },
    /// Empirical against closed-form moments of the periodogram terms.
    ValidateMoments {
        #[command(flatten)]
        study: StudyArgs,
        /// User number, 1-based.
        #[arg(long)]
        user: Option<usize>,
        /// Signed grid index of the offset (default: nearest the true CFO).
        #[arg(long, allow_negative_numbers = true)]
        offset_index: Option<i64>,
    },
    /// Print the reference scenario file.
    DefaultConfig,
}

fn resolve_scenario(args: &ScenarioArgs) -> SimResult<Scenario> {
    let mut s = match &args.config {
        Some(p) => Scenario::load(p)?,
        None => Scenario::default(),
    };
    if let Some(seed) = args.seed {
        s.seed = seed;
    }
    if let Some(trials) = args.trials {
        s.trials = trials;
    }
    Ok(s)
}

/// Scenario and recorded parameters for a study, from a manifest or from
/// the command line.
fn resolve_study(
    args: &StudyArgs,
    command: &str,
    cli: StudyParams,
) -> SimResult<(Scenario, StudyParams)> {
    match &args.manifest {
        Some(path) => {
            let m = RunManifest::load(path)?;
            if m.command != command {
                return Err(SimError::Config(format!(
                    "{}: manifest is for `{}`, not `{command}`",
                    path.display(),
                    m.command
                )));
            }
            Ok((m.config, m.params))
        }
        None => Ok((resolve_scenario(&args.scenario)?, cli)),
    }
}

fn ensure_dir(dir: &Path) -> SimResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))
}

fn finish(
    dir: &Path,
    command: &str,
    scenario: Scenario,
    params: StudyParams,
    files: Vec<(&str, Vec<u8>)>,
) -> SimResult<()> {
    ensure_dir(dir)?;
    let mut names = Vec::new();
    for (name, bytes) in files {
        write_atomic(&dir.join(name), &bytes)?;
        names.push(name.to_string());
    }
    RunManifest::new(command, scenario, params, names).write(dir)
}

pub fn run(cli: Cli) -> SimResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| SimError::Argument(format!("thread pool: {e}")))?;
    }
    let stdout = std::io::stdout();
    match cli.command {
        Command::Estimate {
            scenario,
            dump_frame,
        } => {
            let s = resolve_scenario(&scenario)?;
            cmd_estimate(&s, dump_frame.as_deref(), &mut stdout.lock())
        }
        Command::MseAlpha {
            study,
            alphas,
            pilot_lens,
        } => {
            let cli_params = StudyParams {
                alphas: Some(alphas.unwrap_or_else(default_alphas)),
                pilot_lens: Some(pilot_lens.unwrap_or_else(|| DEFAULT_PILOT_LENS.to_vec())),
                ..StudyParams::default()
            };
            let (s, p) = resolve_study(&study, "mse-alpha", cli_params)?;
            cmd_mse_alpha(&s, &p, &study.out)
        }
        Command::MinSnrVsM {
            study,
            antennas,
            pilot_lens,
            target_mse,
            bracket_db,
            tol_db,
        } => {
            let bracket = match bracket_db.as_deref() {
                None => DEFAULT_BRACKET_DB,
                Some([lo, hi]) => [*lo, *hi],
                Some(_) => return Err(SimError::Argument("--bracket-db takes LOW,HIGH".into())),
            };
            let cli_params = StudyParams {
                antennas: Some(antennas.unwrap_or_else(|| DEFAULT_ANTENNAS.to_vec())),
                pilot_lens: Some(pilot_lens.unwrap_or_else(|| DEFAULT_PILOT_LENS.to_vec())),
                target_mse: Some(target_mse.unwrap_or(DEFAULT_TARGET_MSE)),
                bracket_db: Some(bracket),
                tol_db: Some(tol_db.unwrap_or(DEFAULT_TOL_DB)),
                ..StudyParams::default()
            };
            let (s, p) = resolve_study(&study, "min-snr-vs-m", cli_params)?;
            cmd_min_snr_vs_m(&s, &p, &study.out)
        }
        Command::ValidateMoments {
            study,
            user,
            offset_index,
        } => {
            let cli_params = StudyParams {
                user: Some(user.unwrap_or(1)),
                offset_index,
                ..StudyParams::default()
            };
            let (mut s, p) = resolve_study(&study, "validate-moments", cli_params)?;
            if study.manifest.is_none() && study.scenario.trials.is_none() {
                s.trials = DEFAULT_MOMENT_TRIALS;
            }
            cmd_validate_moments(&s, &p, &study.out)
        }
        Command::DefaultConfig => {
            let mut out = stdout.lock();
            out.write_all(Scenario::default().to_text().as_bytes())
                .map_err(|e| SimError::io("<stdout>", e))
        }
    }
}

/// Synthesizes one frame and prints `k,omega_true,omega_hat,sq_err` rows.
pub fn cmd_estimate(s: &Scenario, dump: Option<&Path>, out: &mut dyn Write) -> SimResult<()> {
    let cfg = s.system_config()?;
    let pdp = s.power_delay_profile()?;
    let mut rng = trial_rng(s.seed, 0);
    let cfos = draw_cfos(cfg.delta_max, cfg.users, &mut rng)?;
    let channel = sample_channel(&pdp, cfg.antennas, &mut rng)?;
    let frame = synth_frame(&cfg, &channel, &cfos, &mut rng)?;
    if let Some(path) = dump {
        write_frame(path, &frame)?;
    }
    let grid = build_grid(cfg.pilot_len, cfg.alpha, cfg.delta_max)?;
    let mut table = Table::new(&ESTIMATE_HEADER);
    for r in estimate_all(&frame, &grid)? {
        let truth = cfos[r.user];
        table.push([
            (r.user + 1).to_string(),
            truth.to_string(),
            r.estimate.to_string(),
            (r.estimate - truth).powi(2).to_string(),
        ]);
    }
    out.write_all(&table.into_bytes())
        .map_err(|e| SimError::io("<stdout>", e))
}

fn required<T: Clone>(v: &Option<T>, name: &str) -> SimResult<T> {
    v.clone()
        .ok_or_else(|| SimError::Config(format!("manifest params lack `{name}`")))
}

pub fn cmd_mse_alpha(s: &Scenario, p: &StudyParams, out: &Path) -> SimResult<()> {
    let alphas = required(&p.alphas, "alphas")?;
    let lens = required(&p.pilot_lens, "pilot_lens")?;
    let pdp = s.power_delay_profile()?;
    let mut rows = Vec::new();
    for &n in &lens {
        let cfg = Scenario { n, ..s.clone() }.system_config()?;
        for (alpha, est) in sweep_alpha(&cfg, &pdp, &alphas, s.trials, s.seed)? {
            eprintln!(
                "n={n} alpha={alpha}: mse={:e} ± {:e}",
                est.mse, est.half_width
            );
            rows.push((n, alpha, est));
        }
    }
    let (main, per_user) = mse_alpha_tables(&rows);
    finish(
        out,
        "mse-alpha",
        s.clone(),
        p.clone(),
        vec![
            ("mse_alpha.csv", main),
            ("mse_alpha_per_user.csv", per_user),
        ],
    )
}

pub fn cmd_min_snr_vs_m(s: &Scenario, p: &StudyParams, out: &Path) -> SimResult<()> {
    let antennas = required(&p.antennas, "antennas")?;
    let lens = required(&p.pilot_lens, "pilot_lens")?;
    let [lo, hi] = required(&p.bracket_db, "bracket_db")?;
    let search = SnrSearch {
        target_mse: required(&p.target_mse, "target_mse")?,
        trials: s.trials,
        tol_db: required(&p.tol_db, "tol_db")?,
        bracket_db: (lo, hi),
        seed: s.seed,
    };
    let pdp = s.power_delay_profile()?;
    let mut rows = Vec::new();
    for &n in &lens {
        let cfg = Scenario { n, ..s.clone() }.system_config()?;
        for (m, r) in sweep_m(&cfg, &pdp, &antennas, &search)? {
            eprintln!("n={n} m={m}: gamma*={} dB", r.gamma_star_db);
            rows.push((n, m, r));
        }
    }
    let (main, evals) = min_snr_tables(&rows);
    finish(
        out,
        "min-snr-vs-m",
        s.clone(),
        p.clone(),
        vec![
            ("min_snr_vs_m.csv", main),
            ("min_snr_evaluations.csv", evals),
        ],
    )
}

pub fn cmd_validate_moments(s: &Scenario, p: &StudyParams, out: &Path) -> SimResult<()> {
    let user = required(&p.user, "user")?;
    if user == 0 {
        return Err(SimError::Argument("--user is 1-based".into()));
    }
    let cfg = s.system_config()?;
    let pdp = s.power_delay_profile()?;
    let report = validate_moments(
        &cfg,
        &pdp,
        &MomentCheck {
            trials: s.trials,
            seed: s.seed,
            user: user - 1,
            offset_index: p.offset_index,
        },
    )?;
    for r in report.deviations_over(0.10) {
        eprintln!(
            "warning: {} {} deviates {:+.1}% from the closed form ({} vs {})",
            r.term,
            r.statistic,
            100.0 * r.rel_dev,
            r.empirical,
            r.analytic
        );
    }
    finish(
        out,
        "validate-moments",
        s.clone(),
        p.clone(),
        vec![("moments.csv", moments_table(&report))],
    )
}
