//! Experiment drivers: constant-parameter grids, per-coordinate lookup
//! sweeps, SANG tuning runs, and a consolidated report over their outputs.
//!
//! Seed pools are kept apart. Held-out evaluations always use path seeds
//! `0..paths`, shared by every experiment so results are directly
//! comparable. Selection sweeps and the optimizer draw seeds with
//! [`TUNING_SEED_BIT`] set.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{PolicyFamily, PolicySpec};
use crate::scenario::Scenario;
use crate::sim::{estimate_objective, improvement, rollout, Estimate};
use crate::zo::{write_history_csv, SangConfig, SangResult, SangState, StepsizeRule, TUNING_SEED_BIT};

/// First path seed of the held-out evaluation pool.
pub const HELDOUT_BASE: u64 = 0;

/// Costs within this relative distance of the minimum count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Seed base of the selection pool for a master seed.
pub fn selection_base(master_seed: u64) -> u64 {
    TUNING_SEED_BIT | ((master_seed & 0xFFFF_FFFF) << 24)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            lo: 0.5,
            hi: 1.5,
            step: 0.1,
        }
    }
}

impl GridSpec {
    /// Grid points, rounded to ten decimals so `1.0` lands exactly.
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || !(self.hi >= self.lo) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::Config(format!("invalid grid {self:?}")));
        }
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        Ok((0..=n)
            .map(|i| ((self.lo + i as f64 * self.step) * 1e10).round() / 1e10)
            .collect())
    }
}

/// Index of the best candidate. Near-ties go to the candidate closest to
/// `neutral`, then to the smaller parameter.
pub fn select_argmin(thetas: &[f64], costs: &[f64], neutral: f64) -> usize {
    assert_eq!(thetas.len(), costs.len());
    assert!(!costs.is_empty());
    let best = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = TIE_TOLERANCE * best.abs().max(1.0);
    (0..costs.len())
        .filter(|&i| costs[i] <= best + tol)
        .min_by(|&i, &j| {
            let di = (thetas[i] - neutral).abs();
            let dj = (thetas[j] - neutral).abs();
            di.total_cmp(&dj).then(thetas[i].total_cmp(&thetas[j]))
        })
        .expect("at least one candidate")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridRow {
    pub theta: f64,
    pub mean: f64,
    pub stderr: f64,
    pub delta_f: f64,
}

fn grid_row(theta: f64, est: Estimate, bench: &Estimate) -> Result<GridRow> {
    Ok(GridRow {
        theta,
        mean: est.mean,
        stderr: est.stderr,
        delta_f: improvement(est.mean, bench.mean)?,
    })
}

/// Held-out comparison of a chosen policy against the benchmark.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeldOut {
    pub paths: usize,
    pub benchmark: Estimate,
    pub policy: Estimate,
    pub delta_f: f64,
}

fn held_out(spec: &PolicySpec, scenario: &Scenario, paths: usize) -> Result<HeldOut> {
    let benchmark = estimate_objective(&PolicySpec::benchmark(), scenario, paths, HELDOUT_BASE)?;
    let policy = estimate_objective(spec, scenario, paths, HELDOUT_BASE)?;
    Ok(HeldOut {
        paths,
        benchmark,
        delta_f: improvement(policy.mean, benchmark.mean)?,
        policy,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridResult {
    pub rho_e: f64,
    /// Selection-pool benchmark estimate.
    pub benchmark: Estimate,
    pub rows: Vec<GridRow>,
    pub argmin: usize,
    pub held_out: HeldOut,
}

impl GridResult {
    pub fn argmin_theta(&self) -> f64 {
        self.rows[self.argmin].theta
    }
}

/// Evaluates `const θ` over `grid` on the selection pool, picks the argmin,
/// and re-evaluates it with the benchmark on the held-out pool.
pub fn grid_search_const(
    scenario: &Scenario,
    grid: &[f64],
    selection_paths: usize,
    heldout_paths: usize,
    master_seed: u64,
) -> Result<GridResult> {
    if grid.is_empty() {
        return Err(Error::Config("grid has no points".into()));
    }
    let base = selection_base(master_seed);
    let benchmark = estimate_objective(&PolicySpec::benchmark(), scenario, selection_paths, base)?;
    let rows = grid
        .iter()
        .map(|&th| {
            let est = estimate_objective(&PolicySpec::constant(th), scenario, selection_paths, base)?;
            grid_row(th, est, &benchmark)
        })
        .collect::<Result<Vec<_>>>()?;
    let costs: Vec<f64> = rows.iter().map(|r| r.mean).collect();
    let argmin = select_argmin(grid, &costs, 1.0);
    let held_out = held_out(&PolicySpec::constant(grid[argmin]), scenario, heldout_paths)?;
    Ok(GridResult {
        rho_e: scenario.forecast.rho_e,
        benchmark,
        rows,
        argmin,
        held_out,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoordCurve {
    /// Zero-based coordinate, i.e. lookahead offset `index + 1`.
    pub index: usize,
    pub rows: Vec<GridRow>,
    pub argmin: usize,
}

impl CoordCurve {
    pub fn argmin_theta(&self) -> f64 {
        self.rows[self.argmin].theta
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoordResult {
    pub rho_e: f64,
    pub benchmark: Estimate,
    pub curves: Vec<CoordCurve>,
}

/// Sweeps each lookup coordinate over `grid` with the others held at 1.
pub fn coordinate_search_lkup(scenario: &Scenario, grid: &[f64], paths: usize, master_seed: u64) -> Result<CoordResult> {
    if grid.is_empty() {
        return Err(Error::Config("grid has no points".into()));
    }
    let h = scenario.params.lookahead_h;
    let base = selection_base(master_seed);
    let benchmark = estimate_objective(&PolicySpec::benchmark(), scenario, paths, base)?;
    let mut curves = Vec::with_capacity(h);
    for index in 0..h {
        let rows = grid
            .iter()
            .map(|&th| {
                let mut theta = vec![1.0; h];
                theta[index] = th;
                let est = estimate_objective(&PolicySpec::lookup(theta), scenario, paths, base)?;
                grid_row(th, est, &benchmark)
            })
            .collect::<Result<Vec<_>>>()?;
        let costs: Vec<f64> = rows.iter().map(|r| r.mean).collect();
        let argmin = select_argmin(grid, &costs, 1.0);
        curves.push(CoordCurve { index, rows, argmin });
    }
    Ok(CoordResult {
        rho_e: scenario.forecast.rho_e,
        benchmark,
        curves,
    })
}

/// Optimizer settings as exposed to experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SangSettings {
    pub iters: usize,
    pub batch: usize,
    pub a: f64,
    pub delta: f64,
    pub lip_l0: f64,
    pub stepsize_rule: StepsizeRule,
    /// Starting point; the family's neutral parameters when absent.
    pub theta0: Option<Vec<f64>>,
    pub independent_omega: bool,
}

impl Default for SangSettings {
    fn default() -> Self {
        SangSettings {
            iters: 50,
            batch: 10,
            a: 2.0,
            delta: 1.0,
            lip_l0: 1.0,
            stepsize_rule: StepsizeRule::Rmsprop { b: 1.0, gamma: 0.1 },
            theta0: None,
            independent_omega: false,
        }
    }
}

impl SangSettings {
    pub fn to_config(&self, theta0: Vec<f64>, seed: u64) -> SangConfig {
        SangConfig {
            dim_d: theta0.len(),
            iters_n: self.iters,
            delta: self.delta,
            lip_l0: self.lip_l0,
            alpha_scale_a: self.a,
            batch_m: self.batch,
            stepsize_rule: self.stepsize_rule,
            theta0,
            seed,
            independent_omega: self.independent_omega,
        }
    }
}

/// One point of an improvement curve, evaluated on held-out paths.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub k: usize,
    /// Optimizer evaluations spent so far (monitoring excluded).
    pub evals: usize,
    pub mean: f64,
    pub stderr: f64,
    pub delta_f: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TuneResult {
    pub rho_e: f64,
    pub family: PolicyFamily,
    /// `None` when the iteration budget is zero.
    pub sang: Option<SangResult>,
    pub theta_final: Vec<f64>,
    pub curve: Vec<CurvePoint>,
    pub held_out: HeldOut,
    pub optimizer_evals: usize,
    pub monitor_evals: usize,
}

/// Monitoring of the improvement curve during tuning.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveSpec {
    /// Evaluate every this many iterations; 0 disables the curve.
    pub every: usize,
    pub paths: usize,
}

impl Default for CurveSpec {
    fn default() -> Self {
        CurveSpec { every: 10, paths: 100 }
    }
}

/// Tunes `family` by SANG on the simulator and reports the held-out ΔF at θ^R.
pub fn tune(
    scenario: &Scenario,
    family: PolicyFamily,
    settings: &SangSettings,
    curve: CurveSpec,
    heldout_paths: usize,
    master_seed: u64,
) -> Result<TuneResult> {
    if family == PolicyFamily::Benchmark {
        return Err(Error::Config("the benchmark has no parameters to tune".into()));
    }
    let h = scenario.params.lookahead_h;
    let neutral = PolicySpec::neutral(family, h);
    let theta0 = settings.theta0.clone().unwrap_or_else(|| neutral.theta.clone());
    neutral.with_theta(theta0.clone()).validate(&scenario.params)?;

    let oracle = |theta: &[f64], seed: u64| -> Result<f64> {
        Ok(rollout(&neutral.with_theta(theta.to_vec()), scenario, seed)?.total_cost)
    };
    let curve_bench = if curve.every > 0 {
        Some(estimate_objective(&PolicySpec::benchmark(), scenario, curve.paths, HELDOUT_BASE)?)
    } else {
        None
    };
    let mut points = Vec::new();
    let mut monitor_evals = 0;
    let mut monitor = |k: usize, evals: usize, theta: &[f64]| -> Result<()> {
        if let Some(bench) = &curve_bench {
            let est = estimate_objective(&neutral.with_theta(theta.to_vec()), scenario, curve.paths, HELDOUT_BASE)?;
            monitor_evals += curve.paths;
            points.push(CurvePoint {
                k,
                evals,
                mean: est.mean,
                stderr: est.stderr,
                delta_f: improvement(est.mean, bench.mean)?,
            });
        }
        Ok(())
    };

    monitor(0, 0, &theta0)?;
    let (sang, theta_final, optimizer_evals) = if settings.iters == 0 {
        (None, theta0, 0)
    } else {
        let cfg = settings.to_config(theta0, master_seed);
        let mut state = SangState::new(&cfg)?;
        for k in 1..=cfg.iters_n {
            let rec = state.step(&cfg, &oracle)?;
            let (evals, theta) = (rec.evals_cumulative, rec.theta.clone());
            if curve.every > 0 && (k % curve.every == 0 || k == cfg.iters_n) {
                monitor(k, evals, &theta)?;
            }
        }
        let res = state.finish()?;
        let theta = res.theta_r.clone();
        (Some(res), theta, cfg.evaluation_budget())
    };
    let held_out = held_out(&neutral.with_theta(theta_final.clone()), scenario, heldout_paths)?;
    Ok(TuneResult {
        rho_e: scenario.forecast.rho_e,
        family,
        sang,
        theta_final,
        curve: points,
        held_out,
        optimizer_evals,
        monitor_evals,
    })
}

/// Experiment description loaded from JSON; every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Output file stem; the experiment kind when absent.
    pub id: Option<String>,
    /// Scenario JSON; the built-in synthetic scenario when absent.
    pub scenario: Option<PathBuf>,
    pub family: PolicyFamily,
    /// Policy parameters for `simulate`.
    pub theta: Option<Vec<f64>>,
    pub rho_e: Vec<f64>,
    /// Held-out evaluation paths.
    pub paths: usize,
    /// Paths used to pick a grid argmin or draw coordinate curves.
    pub selection_paths: usize,
    pub grid: GridSpec,
    pub sang: SangSettings,
    pub curve: CurveSpec,
    pub out: PathBuf,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            id: None,
            scenario: None,
            family: PolicyFamily::Lkup,
            theta: None,
            rho_e: vec![0.0, 0.1, 0.2, 0.3, 0.4],
            paths: 1000,
            selection_paths: 200,
            grid: GridSpec::default(),
            sang: SangSettings::default(),
            curve: CurveSpec::default(),
            out: PathBuf::from("results"),
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config; a relative scenario path is resolved against the
    /// config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if let (Some(sc), Some(dir)) = (&cfg.scenario, path.parent()) {
            if sc.is_relative() {
                cfg.scenario = Some(dir.join(sc));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(rho) = self.rho_e.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
            return Err(Error::Config(format!("noise levels must be nonnegative, got {rho}")));
        }
        if self.paths == 0 || self.selection_paths == 0 {
            return Err(Error::Config("path counts must be at least 1".into()));
        }
        if self.paths as u64 >= 1 << 40 {
            return Err(Error::Config("too many evaluation paths".into()));
        }
        self.grid.values()?;
        Ok(())
    }

    pub fn load_scenario(&self) -> Result<Scenario> {
        match &self.scenario {
            Some(p) => Scenario::load(p),
            None => Ok(Scenario::default()),
        }
    }

    fn id_or(&self, kind: &str) -> String {
        self.id.clone().unwrap_or_else(|| kind.to_string())
    }
}

/// One consolidated result row; every experiment writes a list of these
/// next to its table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub id: String,
    pub kind: String,
    pub family: PolicyFamily,
    pub rho_e: f64,
    pub theta: Vec<f64>,
    pub mean: f64,
    pub delta_f: f64,
    pub benchmark_mean: f64,
    pub paths: usize,
    pub evals: usize,
}

fn write_outputs(out: &Path, id: &str, table: &[Vec<String>], header: &[&str], summary: &[SummaryRow]) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let table_path = out.join(format!("{id}.csv"));
    let file = fs::File::create(&table_path).map_err(|e| Error::io(&table_path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header)?;
    for row in table {
        w.write_record(row)?;
    }
    w.flush().map_err(|e| Error::io(&table_path, e))?;
    let summary_path = out.join(format!("{id}.summary.json"));
    let text = serde_json::to_string_pretty(summary)?;
    fs::write(&summary_path, text + "\n").map_err(|e| Error::io(&summary_path, e))
}

fn num(v: f64) -> String {
    v.to_string()
}

fn join_theta(theta: &[f64]) -> String {
    theta.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

/// Runs `grid` for every noise level and writes `<id>.csv` and `<id>.summary.json`.
pub fn run_grid(cfg: &ExperimentConfig) -> Result<Vec<GridResult>> {
    let base = cfg.load_scenario()?;
    let grid = cfg.grid.values()?;
    let id = cfg.id_or("grid");
    let mut table = Vec::new();
    let mut summary = Vec::new();
    let mut results = Vec::new();
    for &rho in &cfg.rho_e {
        let sc = base.clone().with_rho(rho);
        let res = grid_search_const(&sc, &grid, cfg.selection_paths, cfg.paths, cfg.seed)?;
        for (i, r) in res.rows.iter().enumerate() {
            table.push(vec![
                num(rho),
                num(r.theta),
                num(r.mean),
                num(r.stderr),
                num(r.delta_f),
                u8::from(i == res.argmin).to_string(),
            ]);
        }
        let best = &res.rows[res.argmin];
        summary.push(SummaryRow {
            id: id.clone(),
            kind: "grid".into(),
            family: PolicyFamily::Const,
            rho_e: rho,
            theta: vec![best.theta],
            mean: best.mean,
            delta_f: best.delta_f,
            benchmark_mean: res.benchmark.mean,
            paths: cfg.selection_paths,
            evals: grid.len() * cfg.selection_paths,
        });
        summary.push(SummaryRow {
            id: id.clone(),
            kind: "grid-heldout".into(),
            family: PolicyFamily::Const,
            rho_e: rho,
            theta: vec![best.theta],
            mean: res.held_out.policy.mean,
            delta_f: res.held_out.delta_f,
            benchmark_mean: res.held_out.benchmark.mean,
            paths: cfg.paths,
            evals: 0,
        });
        results.push(res);
    }
    write_outputs(
        &cfg.out,
        &id,
        &table,
        &["rho_e", "theta", "mean", "stderr", "delta_f", "argmin"],
        &summary,
    )?;
    Ok(results)
}

/// Runs `coord` for every noise level.
pub fn run_coord(cfg: &ExperimentConfig) -> Result<Vec<CoordResult>> {
    let base = cfg.load_scenario()?;
    let grid = cfg.grid.values()?;
    let id = cfg.id_or("coord");
    let mut table = Vec::new();
    let mut summary = Vec::new();
    let mut results = Vec::new();
    for &rho in &cfg.rho_e {
        let sc = base.clone().with_rho(rho);
        let res = coordinate_search_lkup(&sc, &grid, cfg.selection_paths, cfg.seed)?;
        for c in &res.curves {
            for (i, r) in c.rows.iter().enumerate() {
                table.push(vec![
                    num(rho),
                    (c.index + 1).to_string(),
                    num(r.theta),
                    num(r.mean),
                    num(r.stderr),
                    num(r.delta_f),
                    u8::from(i == c.argmin).to_string(),
                ]);
            }
        }
        let best = res
            .curves
            .iter()
            .min_by(|a, b| a.rows[a.argmin].mean.total_cmp(&b.rows[b.argmin].mean))
            .expect("lookahead has at least one coordinate");
        let mut theta = vec![1.0; sc.params.lookahead_h];
        theta[best.index] = best.argmin_theta();
        summary.push(SummaryRow {
            id: id.clone(),
            kind: "coord".into(),
            family: PolicyFamily::Lkup,
            rho_e: rho,
            theta,
            mean: best.rows[best.argmin].mean,
            delta_f: best.rows[best.argmin].delta_f,
            benchmark_mean: res.benchmark.mean,
            paths: cfg.selection_paths,
            evals: grid.len() * res.curves.len() * cfg.selection_paths,
        });
        results.push(res);
    }
    write_outputs(
        &cfg.out,
        &id,
        &table,
        &["rho_e", "coord", "theta", "mean", "stderr", "delta_f", "argmin"],
        &summary,
    )?;
    Ok(results)
}

/// Runs `tune` for every noise level; also writes `<id>.history.csv` per level.
pub fn run_tune(cfg: &ExperimentConfig) -> Result<Vec<TuneResult>> {
    let base = cfg.load_scenario()?;
    let id = cfg.id_or("tune");
    let mut table = Vec::new();
    let mut summary = Vec::new();
    let mut results = Vec::new();
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    for &rho in &cfg.rho_e {
        let sc = base.clone().with_rho(rho);
        let res = tune(&sc, cfg.family, &cfg.sang, cfg.curve, cfg.paths, cfg.seed)?;
        for p in &res.curve {
            table.push(vec![
                num(rho),
                p.k.to_string(),
                p.evals.to_string(),
                num(p.mean),
                num(p.stderr),
                num(p.delta_f),
            ]);
        }
        if let Some(sang) = &res.sang {
            let path = cfg.out.join(format!("{id}.rho{rho}.history.csv"));
            let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            write_history_csv(&sang.history, file)?;
        }
        summary.push(SummaryRow {
            id: id.clone(),
            kind: "tune".into(),
            family: cfg.family,
            rho_e: rho,
            theta: res.theta_final.clone(),
            mean: res.held_out.policy.mean,
            delta_f: res.held_out.delta_f,
            benchmark_mean: res.held_out.benchmark.mean,
            paths: cfg.paths,
            evals: res.optimizer_evals,
        });
        results.push(res);
    }
    write_outputs(
        &cfg.out,
        &id,
        &table,
        &["rho_e", "k", "evals", "mean", "stderr", "delta_f"],
        &summary,
    )?;
    Ok(results)
}

/// Report over every `*.summary.json` in a directory.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub rows: Vec<SummaryRow>,
    pub csv_path: PathBuf,
    pub text_path: PathBuf,
}

pub const REPORT_HEADER: [&str; 10] = [
    "id",
    "kind",
    "family",
    "rho_e",
    "theta",
    "mean",
    "delta_f",
    "benchmark_mean",
    "paths",
    "evals",
];

fn summary_record(r: &SummaryRow) -> Vec<String> {
    vec![
        r.id.clone(),
        r.kind.clone(),
        r.family.to_string(),
        num(r.rho_e),
        join_theta(&r.theta),
        num(r.mean),
        num(r.delta_f),
        num(r.benchmark_mean),
        r.paths.to_string(),
        r.evals.to_string(),
    ]
}

/// Consolidates summaries in `dir` into `report.csv` and `report.txt`
/// there. Both files are written even when nothing is found, but an empty
/// report or any unreadable summary is an error.
pub fn report(dir: impl AsRef<Path>) -> Result<Report> {
    let dir = dir.as_ref();
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(".summary.json"))
        .collect();
    files.sort();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for path in &files {
        let parsed = fs::read_to_string(path)
            .map_err(|e| e.to_string())
            .and_then(|t| serde_json::from_str::<Vec<SummaryRow>>(&t).map_err(|e| e.to_string()));
        match parsed {
            Ok(mut r) => rows.append(&mut r),
            Err(msg) => failures.push(format!("{}: {msg}", path.display())),
        }
    }
    rows.sort_by(|a, b| {
        (a.id.as_str(), a.rho_e, a.family.name(), a.kind.as_str())
            .partial_cmp(&(b.id.as_str(), b.rho_e, b.family.name(), b.kind.as_str()))
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let csv_path = dir.join("report.csv");
    let file = fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(REPORT_HEADER)?;
    for r in &rows {
        w.write_record(summary_record(r))?;
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))?;

    let mut text = format!("{} result rows from {} files\n", rows.len(), files.len());
    for r in &rows {
        text += &format!(
            "{:<16} {:<13} {:<9} rho={:<5} mean={:<14.2} dF={:+.5} theta=[{}]\n",
            r.id,
            r.kind,
            r.family.name(),
            r.rho_e,
            r.mean,
            r.delta_f,
            join_theta(&r.theta)
        );
    }
    for f in &failures {
        text += &format!("error: {f}\n");
    }
    let text_path = dir.join("report.txt");
    fs::write(&text_path, &text).map_err(|e| Error::io(&text_path, e))?;

    if !failures.is_empty() {
        return Err(Error::Config(format!("unreadable result files: {}", failures.join("; "))));
    }
    if rows.is_empty() {
        return Err(Error::Config(format!("no results found in {}", dir.display())));
    }
    Ok(Report {
        rows,
        csv_path,
        text_path,
    })
}
