//! CSV result tables and run manifests.
//!
//! Tables (header line first, one row per record):
//!
//! | file | columns |
//! |------|---------|
//! | `mse_alpha.csv` | `n,alpha,mse,ci_half_width,trials,seed` |
//! | `mse_alpha_per_user.csv` | `n,alpha,k,mse` |
//! | `min_snr_vs_m.csv` | `n,m,gamma_star_db,bracket_low_db,bracket_high_db,mse_at_star,ci_half_width,evaluations,trials,seed` |
//! | `min_snr_evaluations.csv` | `n,m,snr_db,mse,ci_half_width,trials,seed` |
//! | `moments.csv` | `term,statistic,analytic,empirical,rel_dev,std_err` |
//!
//! Users are numbered from 1 in every table. Files are written to a
//! temporary file in the destination directory and renamed into place.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};
use crate::experiments::{MseEstimate, SnrSearchResult};
use crate::scenario::Scenario;
use crate::validation::MomentReport;

pub const MSE_ALPHA_HEADER: [&str; 6] = ["n", "alpha", "mse", "ci_half_width", "trials", "seed"];
pub const MSE_ALPHA_PER_USER_HEADER: [&str; 4] = ["n", "alpha", "k", "mse"];
pub const MIN_SNR_HEADER: [&str; 10] = [
    "n",
    "m",
    "gamma_star_db",
    "bracket_low_db",
    "bracket_high_db",
    "mse_at_star",
    "ci_half_width",
    "evaluations",
    "trials",
    "seed",
];
pub const MIN_SNR_EVAL_HEADER: [&str; 7] =
    ["n", "m", "snr_db", "mse", "ci_half_width", "trials", "seed"];
pub const MOMENTS_HEADER: [&str; 6] = [
    "term",
    "statistic",
    "analytic",
    "empirical",
    "rel_dev",
    "std_err",
];
pub const ESTIMATE_HEADER: [&str; 4] = ["k", "omega_true", "omega_hat", "sq_err"];

/// Writes `bytes` to `path` via a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> SimResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| SimError::io(dir, e))?;
    tmp.write_all(bytes)
        .map_err(|e| SimError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| SimError::io(path, e.error))?;
    Ok(())
}

/// In-memory CSV table.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(header)
            .expect("writing to memory cannot fail");
        Table { writer }
    }

    pub fn push<I, S>(&mut self, record: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer
            .write_record(record)
            .expect("writing to memory cannot fail");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer
            .into_inner()
            .expect("flushing to memory cannot fail")
    }
}

pub fn mse_alpha_tables(rows: &[(usize, f64, MseEstimate)]) -> (Vec<u8>, Vec<u8>) {
    let mut main = Table::new(&MSE_ALPHA_HEADER);
    let mut users = Table::new(&MSE_ALPHA_PER_USER_HEADER);
    for (n, alpha, e) in rows {
        main.push([
            n.to_string(),
            alpha.to_string(),
            e.mse.to_string(),
            e.half_width.to_string(),
            e.trials.to_string(),
            e.seed.to_string(),
        ]);
        for (u, v) in e.per_user.iter().enumerate() {
            users.push([
                n.to_string(),
                alpha.to_string(),
                (u + 1).to_string(),
                v.to_string(),
            ]);
        }
    }
    (main.into_bytes(), users.into_bytes())
}

pub fn min_snr_tables(rows: &[(usize, usize, SnrSearchResult)]) -> (Vec<u8>, Vec<u8>) {
    let mut main = Table::new(&MIN_SNR_HEADER);
    let mut evals = Table::new(&MIN_SNR_EVAL_HEADER);
    for (n, m, r) in rows {
        let star = r.estimate_at_star();
        main.push([
            n.to_string(),
            m.to_string(),
            r.gamma_star_db.to_string(),
            r.bracket.0.to_string(),
            r.bracket.1.to_string(),
            star.map_or(f64::NAN, |e| e.mse).to_string(),
            star.map_or(f64::NAN, |e| e.half_width).to_string(),
            r.evaluations.len().to_string(),
            star.map_or(0, |e| e.trials).to_string(),
            star.map_or(0, |e| e.seed).to_string(),
        ]);
        for (db, e) in &r.evaluations {
            evals.push([
                n.to_string(),
                m.to_string(),
                db.to_string(),
                e.mse.to_string(),
                e.half_width.to_string(),
                e.trials.to_string(),
                e.seed.to_string(),
            ]);
        }
    }
    (main.into_bytes(), evals.into_bytes())
}

pub fn moments_table(report: &MomentReport) -> Vec<u8> {
    let mut t = Table::new(&MOMENTS_HEADER);
    for r in &report.rows {
        t.push([
            r.term.to_string(),
            r.statistic.to_string(),
            r.analytic.to_string(),
            r.empirical.to_string(),
            r.rel_dev.to_string(),
            r.std_err.to_string(),
        ]);
    }
    t.into_bytes()
}

/// Study-specific parameters recorded for replay.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StudyParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pilot_lens: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub antennas: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_mse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket_db: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset_index: Option<i64>,
}

/// Written as `manifest.toml` next to every set of result files. The
/// `config` table is the effective scenario (seed and trial overrides
/// applied), so replaying the manifest reproduces the tables byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub timestamp_unix: u64,
    pub seed: u64,
    pub trials: usize,
    pub outputs: Vec<String>,
    pub params: StudyParams,
    pub config: Scenario,
}

impl RunManifest {
    pub fn new(command: &str, config: Scenario, params: StudyParams, outputs: Vec<String>) -> Self {
        let timestamp_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            timestamp_unix,
            seed: config.seed,
            trials: config.trials,
            outputs,
            params,
            config,
        }
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("manifest fields are always representable")
    }

    pub fn load(path: &Path) -> SimResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        toml::from_str(&text)
            .map_err(|e| SimError::Config(format!("{}: {}", path.display(), e.message())))
    }

    pub fn write(&self, dir: &Path) -> SimResult<()> {
        write_atomic(&dir.join("manifest.toml"), self.to_text().as_bytes())
    }
}
