//! Monte-Carlo runs, parameter sweeps, ground-truth export and frame replay.
//!
//! Every output file is a pure function of the config and seeds: runs are
//! collected in index order after the parallel section, and floats are
//! written in shortest round-trip form.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use multidop_core::geometry::doppler_tgt;
use multidop_core::{DopplerTrack, EstimatorError, ObservationFrame, PathRecord, SignedAngle};

use crate::config::{parse_value, set_path, ConfigError, ScenarioConfig};
use crate::pipeline::estimate_track;
use crate::sim::{simulate_run, RunSeeds};
use crate::SimError;

/// Environment variable that caps the worker-thread count.
pub const THREADS_ENV: &str = "MULTIDOP_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("run {run_id} (seed {seed}): {source}")]
    Simulation { run_id: usize, seed: u64, source: SimError },
    #[error("run {run_id} (seed {seed}): {source}")]
    Estimation { run_id: usize, seed: u64, source: EstimatorError },
    #[error("sweep: {0}")]
    Sweep(String),
    #[error("frame dump: {0}")]
    Replay(String),
    #[error("thread pool: {0}")]
    Threads(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: usize,
    pub seed: u64,
    pub mae_hz: f64,
    pub frames_dropped: usize,
    pub frames_degraded: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub summary: RunSummary,
    pub track: DopplerTrack,
    pub frames: Vec<ObservationFrame>,
}

#[derive(Serialize, Deserialize)]
struct TrackRow {
    k: u64,
    f_true_hz: f64,
    f_est_hz: f64,
}

#[derive(Serialize)]
struct OracleRow {
    k: u64,
    f_true_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameRow {
    pub k: u64,
    pub rx: usize,
    pub phi_los_rad: f64,
    pub phi_tgt_rad: f64,
    pub aoa_los_rad: f64,
    pub aoa_tgt_rad: f64,
    pub amp_los: f64,
    pub amp_tgt: f64,
}

/// Simulates and estimates one seeded run.
pub fn run_one(cfg: &ScenarioConfig, run_id: usize, seed: u64) -> Result<RunRecord, HarnessError> {
    let scene = cfg.scene()?;
    let out = simulate_run(&scene, &cfg.sim_setup(), RunSeeds::new(seed))
        .map_err(|source| HarnessError::Simulation { run_id, seed, source })?;
    let frames: Vec<ObservationFrame> = out.frames.into_iter().flatten().collect();
    let est_err = |source| HarnessError::Estimation { run_id, seed, source };
    let result = estimate_track(&frames, &out.truth, &scene.rx_pos, cfg.estimator_config()).map_err(est_err)?;
    let mae_hz = result.track.mae().map_err(est_err)?;
    Ok(RunRecord {
        summary: RunSummary { run_id, seed, mae_hz, frames_dropped: out.dropped, frames_degraded: result.degraded },
        track: result.track,
        frames,
    })
}

/// Runs `f` on a pool sized by `MULTIDOP_THREADS` when it is set.
fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T, HarnessError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| HarnessError::Threads(format!("{THREADS_ENV}={v} is not a thread count")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| HarnessError::Threads(e.to_string()))?;
            Ok(pool.install(f))
        }
        Err(_) => Ok(f()),
    }
}

/// Creates `dir` and proves it writable before any work starts.
pub fn ensure_writable(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let probe = dir.join(".write_probe");
    fs::write(&probe, b"").map_err(io_err(&probe))?;
    fs::remove_file(&probe).map_err(io_err(&probe))
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn write_track(path: &Path, track: &DopplerTrack) -> Result<(), HarnessError> {
    write_rows(path, track.points.iter().map(|p| TrackRow { k: p.k, f_true_hz: p.f_true, f_est_hz: p.f_est }))
}

pub fn write_summary(path: &Path, rows: &[RunSummary]) -> Result<(), HarnessError> {
    write_rows(path, rows)
}

pub fn read_summary(path: &Path) -> Result<Vec<RunSummary>, HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().collect::<Result<_, _>>().map_err(csv_err(path))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Also write `frames_<id>.csv` per run.
    pub dump_frames: bool,
}

fn run_many(cfg: &ScenarioConfig) -> Result<Vec<RunRecord>, HarnessError> {
    let base = cfg.run.base_seed;
    with_pool(|| {
        (0..cfg.run.runs_per_point)
            .into_par_iter()
            .map(|i| run_one(cfg, i, base.wrapping_add(i as u64)))
            .collect::<Result<Vec<_>, _>>()
    })?
}

fn write_run_outputs(dir: &Path, records: &[RunRecord], opts: RunOptions) -> Result<Vec<RunSummary>, HarnessError> {
    for rec in records {
        let id = rec.summary.run_id;
        write_track(&dir.join(format!("run_{id}.csv")), &rec.track)?;
        if opts.dump_frames {
            write_frames(&dir.join(format!("frames_{id}.csv")), &rec.frames)?;
        }
    }
    let summaries: Vec<RunSummary> = records.iter().map(|r| r.summary.clone()).collect();
    write_summary(&dir.join("summary.csv"), &summaries)?;
    Ok(summaries)
}

/// `runs_per_point` seeded runs; writes `run_<id>.csv` and `summary.csv`.
pub fn run(cfg: &ScenarioConfig, out_dir: &Path, opts: RunOptions) -> Result<Vec<RunSummary>, HarnessError> {
    ensure_writable(out_dir)?;
    let records = run_many(cfg)?;
    write_run_outputs(out_dir, &records, opts)
}

/// Ground-truth Doppler at the reference receiver, no simulation.
pub fn oracle_track(cfg: &ScenarioConfig) -> Result<Vec<f64>, HarnessError> {
    let scene = cfg.scene()?;
    let lambda = cfg.wavelength();
    let r = cfg.run.reference_rx - 1;
    (0..cfg.run.steps)
        .map(|k| {
            doppler_tgt(&scene.advance(k), r, lambda, cfg.convention())
                .map_err(|e| HarnessError::Config(ConfigError::Invalid { key: "geometry", message: e.to_string() }))
        })
        .collect()
}

pub fn oracle(cfg: &ScenarioConfig, out_dir: &Path) -> Result<PathBuf, HarnessError> {
    ensure_writable(out_dir)?;
    let truth = oracle_track(cfg)?;
    let path = out_dir.join("oracle.csv");
    write_rows(&path, truth.iter().enumerate().map(|(k, &f)| OracleRow { k: k as u64, f_true_hz: f }))?;
    Ok(path)
}

pub fn write_frames(path: &Path, frames: &[ObservationFrame]) -> Result<(), HarnessError> {
    let rows = frames.iter().flat_map(|f| {
        f.records.iter().enumerate().map(move |(rx, r)| FrameRow {
            k: f.k,
            rx,
            phi_los_rad: r.phi_los,
            phi_tgt_rad: r.phi_tgt,
            aoa_los_rad: r.aoa_los.radians(),
            aoa_tgt_rad: r.aoa_tgt.radians(),
            amp_los: r.amp_los,
            amp_tgt: r.amp_tgt,
        })
    });
    write_rows(path, rows)
}

/// Groups dump rows into frames; rows of one slot must be contiguous and in
/// receiver order.
pub fn read_frames(path: &Path, num_rx: usize) -> Result<Vec<ObservationFrame>, HarnessError> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut frames: Vec<ObservationFrame> = Vec::new();
    for row in reader.deserialize::<FrameRow>() {
        let row = row.map_err(csv_err(path))?;
        let record = PathRecord {
            phi_los: row.phi_los_rad,
            phi_tgt: row.phi_tgt_rad,
            aoa_los: SignedAngle::new(row.aoa_los_rad),
            aoa_tgt: SignedAngle::new(row.aoa_tgt_rad),
            amp_los: row.amp_los,
            amp_tgt: row.amp_tgt,
        };
        match frames.last_mut() {
            Some(f) if f.k == row.k => {
                if row.rx != f.records.len() {
                    return Err(HarnessError::Replay(format!("slot {}: receiver {} out of order", row.k, row.rx)));
                }
                f.records.push(record);
            }
            last => {
                if let Some(prev) = last {
                    if row.k <= prev.k {
                        return Err(HarnessError::Replay(format!("slot {} follows slot {}", row.k, prev.k)));
                    }
                }
                if row.rx != 0 {
                    return Err(HarnessError::Replay(format!("slot {} does not start at receiver 0", row.k)));
                }
                frames.push(ObservationFrame { k: row.k, records: vec![record] });
            }
        }
    }
    if let Some(f) = frames.iter().find(|f| f.records.len() != num_rx) {
        return Err(HarnessError::Replay(format!("slot {} has {} receivers, expected {num_rx}", f.k, f.records.len())));
    }
    Ok(frames)
}

/// Re-estimates a dumped run. Truth comes from the config geometry; slots
/// missing from the dump count as dropped.
pub fn replay(
    cfg: &ScenarioConfig,
    frames_path: &Path,
    run_id: usize,
    out_dir: &Path,
) -> Result<RunSummary, HarnessError> {
    ensure_writable(out_dir)?;
    let scene = cfg.scene()?;
    let frames = read_frames(frames_path, scene.num_rx())?;
    if frames.last().is_some_and(|f| f.k >= cfg.run.steps) {
        return Err(HarnessError::Replay(format!("dump runs past run.steps = {}", cfg.run.steps)));
    }
    let truth = oracle_track(cfg)?;
    let seed = cfg.run.base_seed.wrapping_add(run_id as u64);
    let est_err = |source| HarnessError::Estimation { run_id, seed, source };
    let result = estimate_track(&frames, &truth, &scene.rx_pos, cfg.estimator_config()).map_err(est_err)?;
    let summary = RunSummary {
        run_id,
        seed,
        mae_hz: result.track.mae().map_err(est_err)?,
        frames_dropped: cfg.run.steps as usize - frames.len(),
        frames_degraded: result.degraded,
    };
    write_track(&out_dir.join(format!("run_{run_id}.csv")), &result.track)?;
    Ok(summary)
}

/// One sweep value: a label and the config edits it stands for.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub label: String,
    pub patches: Vec<(String, toml::Value)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub name: String,
    /// Edits applied to every point before its own.
    pub common: Vec<(String, toml::Value)>,
    pub points: Vec<SweepPoint>,
}

fn v(text: &str) -> toml::Value {
    parse_value(text)
}

fn single(path: &str, values: &[&str]) -> Vec<SweepPoint> {
    values
        .iter()
        .map(|&x| SweepPoint { label: x.to_string(), patches: vec![(path.to_string(), v(x))] })
        .collect()
}

pub const PREDEFINED_SWEEPS: [&str; 6] =
    ["aoa_noise", "rx_spacing", "tx_distance_near", "tx_distance_far", "distributed_15nc", "target_speed"];

impl SweepSpec {
    /// A predefined sweep, or `path=v1,v2,...` with TOML literal values.
    pub fn resolve(name: &str) -> Result<Self, HarnessError> {
        let tx_x = ["10", "7", "5", "0"];
        let (common, points) = match name {
            "aoa_noise" => (vec![], single("impairments.aoa_noise_deg", &["1", "2", "3", "10", "20"])),
            "rx_spacing" => (vec![], single("geometry.rx_spacing_m", &["0.5", "1", "2"])),
            "tx_distance_near" => (vec![("geometry.target".into(), v("[12, -12]"))], single("geometry.tx.0", &tx_x)),
            "tx_distance_far" => (vec![("geometry.target".into(), v("[8, -12]"))], single("geometry.tx.0", &tx_x)),
            "distributed_15nc" => (
                vec![("geometry.tx".into(), v("[0, 0]"))],
                vec![
                    SweepPoint {
                        label: "colocated".into(),
                        patches: vec![("geometry.rx".into(), v("[[15, 4], [15, 2], [15, 0], [15, -2]]"))],
                    },
                    SweepPoint {
                        label: "15nc".into(),
                        patches: vec![("geometry.rx".into(), v("[[15, -2], [15, 4], [-15, 4], [-15, -2]]"))],
                    },
                ],
            ),
            "target_speed" => (
                vec![("geometry.tx_heading_deg".into(), v("270")), ("geometry.target_heading_deg".into(), v("270"))],
                single("geometry.target_speed_mps", &["2", "6", "20"]),
            ),
            custom => return Self::parse_custom(custom),
        };
        Ok(Self { name: name.to_string(), common, points })
    }

    fn parse_custom(text: &str) -> Result<Self, HarnessError> {
        let (path, values) = text.split_once('=').ok_or_else(|| {
            HarnessError::Sweep(format!(
                "unknown sweep `{text}`; use one of {} or `path=v1,v2,...`",
                PREDEFINED_SWEEPS.join(", ")
            ))
        })?;
        let path = path.trim();
        let values = split_top_level(values);
        if values.is_empty() {
            return Err(HarnessError::Sweep(format!("`{path}` has an empty value list")));
        }
        let points = values
            .into_iter()
            .map(|x| SweepPoint { label: x.clone(), patches: vec![(path.to_string(), v(&x))] })
            .collect();
        Ok(Self { name: path.replace('.', "_"), common: vec![], points })
    }

    /// Patched, validated config per point.
    pub fn configs(&self, base: &toml::Table) -> Result<Vec<ScenarioConfig>, HarnessError> {
        if self.points.is_empty() {
            return Err(HarnessError::Sweep(format!("`{}` has an empty value list", self.name)));
        }
        self.points
            .iter()
            .map(|p| {
                let mut t = base.clone();
                for (path, value) in self.common.iter().chain(&p.patches) {
                    set_path(&mut t, path, value.clone())?;
                }
                ScenarioConfig::from_table(t)
                    .map_err(|e| HarnessError::Sweep(format!("value {}: {e}", p.label)))
            })
            .collect()
    }
}

/// Splits on commas outside brackets and quotes.
fn split_top_level(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let (mut depth, mut quoted, mut cur) = (0i32, false, String::new());
    for c in text.chars() {
        match c {
            '"' => quoted = !quoted,
            '[' | '{' if !quoted => depth += 1,
            ']' | '}' if !quoted => depth -= 1,
            ',' if depth == 0 && !quoted => {
                out.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    out.push(cur);
    out.into_iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

/// Boxplot statistics of per-run MAE at one sweep value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: String,
    pub runs: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
}

/// Linear-interpolation quantile (Hyndman-Fan type 7) of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn aggregate(value: &str, summaries: &[RunSummary]) -> SweepRow {
    let mut mae: Vec<f64> = summaries.iter().map(|s| s.mae_hz).collect();
    mae.sort_by(f64::total_cmp);
    SweepRow {
        value: value.to_string(),
        runs: mae.len(),
        min: mae[0],
        q1: quantile(&mae, 0.25),
        median: quantile(&mae, 0.5),
        mean: mae.iter().sum::<f64>() / mae.len() as f64,
        q3: quantile(&mae, 0.75),
        max: mae[mae.len() - 1],
    }
}

/// Directory holding the runs of sweep point `index`.
pub fn point_dir(out_dir: &Path, spec: &SweepSpec, index: usize) -> PathBuf {
    out_dir.join(format!("{}_{index}", spec.name))
}

/// Runs every point; writes per-point run directories and `sweep_<name>.csv`.
pub fn sweep(base: &toml::Table, spec: &SweepSpec, out_dir: &Path, opts: RunOptions) -> Result<Vec<SweepRow>, HarnessError> {
    let configs = spec.configs(base)?;
    ensure_writable(out_dir)?;
    let jobs: Vec<(usize, usize)> = configs
        .iter()
        .enumerate()
        .flat_map(|(p, c)| (0..c.run.runs_per_point).map(move |i| (p, i)))
        .collect();
    let records = with_pool(|| {
        jobs.par_iter()
            .map(|&(p, i)| run_one(&configs[p], i, configs[p].run.base_seed.wrapping_add(i as u64)))
            .collect::<Result<Vec<_>, _>>()
    })??;

    let mut rows = Vec::with_capacity(configs.len());
    let mut rest = records.as_slice();
    for (p, (point, cfg)) in spec.points.iter().zip(&configs).enumerate() {
        let (mine, tail) = rest.split_at(cfg.run.runs_per_point);
        rest = tail;
        let dir = point_dir(out_dir, spec, p);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let summaries = write_run_outputs(&dir, mine, opts)?;
        rows.push(aggregate(&point.label, &summaries));
    }
    write_rows(&out_dir.join(format!("sweep_{}.csv", spec.name)), &rows)?;
    Ok(rows)
}

/// Outcome of one built-in sanity check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

/// Quick end-to-end checks on shortened reference runs.
pub fn selftest() -> Result<Vec<Check>, HarnessError> {
    let mut checks = Vec::new();
    let cfg = ScenarioConfig::parse("[run]\nsteps = 600\nruns_per_point = 1\n")?;
    let f0 = oracle_track(&cfg)?[0];
    checks.push(check("oracle_reference_start", (f0 + 545.1).abs() < 0.05, format!("f_D[0] = {f0:.3} Hz")));

    let clean = ScenarioConfig::parse(
        "[run]\nsteps = 600\nwindow = 50\n[impairments]\naoa_noise_deg = 0\nawgn = false\n[link_budget]\nfixed_rcs_m2 = 50\n",
    )?;
    let rec = run_one(&clean, 0, 1)?;
    let worst = rec.track.points.iter().map(|p| (p.f_est - p.f_true).abs()).fold(0.0, f64::max);
    checks.push(check("noise_free_track", worst < 5.0, format!("max error {worst:.3} Hz")));

    let a = run_one(&cfg, 0, 7)?;
    let b = run_one(&cfg, 0, 7)?;
    checks.push(check("deterministic_rerun", a == b, format!("MAE {:.3} Hz", a.summary.mae_hz)));
    checks.push(check(
        "reference_noisy_run",
        a.summary.mae_hz.is_finite() && a.summary.frames_dropped == 0,
        format!("MAE {:.3} Hz, {} dropped", a.summary.mae_hz, a.summary.frames_dropped),
    ));
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_table;

    #[test]
    fn type7_quantiles() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&x, 0.0), 1.0);
        assert_eq!(quantile(&x, 0.25), 1.75);
        assert_eq!(quantile(&x, 0.5), 2.5);
        assert_eq!(quantile(&x, 0.75), 3.25);
        assert_eq!(quantile(&x, 1.0), 4.0);
        assert_eq!(quantile(&[7.0], 0.5), 7.0);
    }

    #[test]
    fn aggregate_matches_summaries() {
        let s: Vec<RunSummary> = [30.0, 10.0, 20.0]
            .iter()
            .enumerate()
            .map(|(i, &m)| RunSummary { run_id: i, seed: i as u64, mae_hz: m, frames_dropped: 0, frames_degraded: 0 })
            .collect();
        let row = aggregate("x", &s);
        assert_eq!((row.runs, row.min, row.median, row.mean, row.max), (3, 10.0, 20.0, 20.0, 30.0));
        assert_eq!((row.q1, row.q3), (15.0, 25.0));
    }

    #[test]
    fn predefined_sweeps_resolve_and_validate() {
        let base = default_table();
        let expected = [5, 3, 4, 4, 2, 3];
        for (name, n) in PREDEFINED_SWEEPS.iter().zip(expected) {
            let spec = SweepSpec::resolve(name).unwrap();
            let cfgs = spec.configs(&base).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(cfgs.len(), n, "{name}");
        }
        let speed = SweepSpec::resolve("target_speed").unwrap().configs(&base).unwrap();
        assert!(speed.iter().all(|c| c.geometry.target_heading_deg == 270.0 && c.geometry.tx_heading_deg == 270.0));
        assert_eq!(speed[2].geometry.target_speed_mps, 20.0);
        let far = SweepSpec::resolve("tx_distance_far").unwrap().configs(&base).unwrap();
        assert_eq!((far[3].geometry.tx, far[3].geometry.target), ([0.0, 0.0], [8.0, -12.0]));
    }

    #[test]
    fn custom_sweeps() {
        let base = default_table();
        let spec = SweepSpec::resolve("geometry.target=[12, -12], [10, -12]").unwrap();
        assert_eq!(spec.name, "geometry_target");
        let cfgs = spec.configs(&base).unwrap();
        assert_eq!(cfgs[1].geometry.target, [10.0, -12.0]);
        assert!(matches!(SweepSpec::resolve("impairments.aoa_noise_deg="), Err(HarnessError::Sweep(_))));
        assert!(matches!(SweepSpec::resolve("nonsense"), Err(HarnessError::Sweep(_))));
        let bad = SweepSpec::resolve("impairments.nosuch=1").unwrap();
        assert!(bad.configs(&base).is_err());
        let empty = SweepSpec { name: "e".into(), common: vec![], points: vec![] };
        assert!(matches!(empty.configs(&base), Err(HarnessError::Sweep(_))));
    }

    #[test]
    fn oracle_reference_start_and_static_target() {
        let cfg = ScenarioConfig::parse("[run]\nsteps = 10\n").unwrap();
        let f = oracle_track(&cfg).unwrap();
        assert!((f[0] + 545.1).abs() < 0.05, "{}", f[0]);
        let still = ScenarioConfig::parse("[run]\nsteps = 10\n[geometry]\ntarget_speed_mps = 0\n").unwrap();
        assert!(oracle_track(&still).unwrap().iter().all(|&x| x == 0.0));
        let half = ScenarioConfig::parse("[run]\nsteps = 10\ndoppler_convention = \"no_bistatic_factor\"\n").unwrap();
        for (a, b) in oracle_track(&half).unwrap().iter().zip(&f) {
            assert!((2.0 * a - b).abs() <= 1e-12 * b.abs());
        }
    }

    #[test]
    fn frame_dump_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let frames = vec![
            ObservationFrame {
                k: 3,
                records: (0..2)
                    .map(|n| PathRecord {
                        phi_los: 0.1 * n as f64,
                        phi_tgt: -1.0 / 3.0,
                        aoa_los: SignedAngle::new(2.5),
                        aoa_tgt: SignedAngle::new(-0.7 + n as f64),
                        amp_los: 1e-6,
                        amp_tgt: 3.3e-9,
                    })
                    .collect(),
            },
            ObservationFrame { k: 5, records: vec![PathRecord { phi_los: 1.0, ..Default::default() }; 2] },
        ];
        let path = dir.path().join("f.csv");
        write_frames(&path, &frames).unwrap();
        assert_eq!(read_frames(&path, 2).unwrap(), frames);
        assert!(matches!(read_frames(&path, 3), Err(HarnessError::Replay(_))));
    }

    #[test]
    fn unwritable_output_fails_before_work() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("occupied");
        fs::write(&file, b"x").unwrap();
        let cfg = ScenarioConfig::parse("").unwrap();
        let t = std::time::Instant::now();
        let err = run(&cfg, &file.join("out"), RunOptions { dump_frames: false }).unwrap_err();
        assert!(matches!(err, HarnessError::Io { .. }), "{err}");
        assert!(t.elapsed().as_secs_f64() < 1.0);
    }
}
