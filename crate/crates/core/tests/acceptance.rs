//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#[path = "common/oracles.rs"]
mod oracles;

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use storage_cfa::experiment::{coordinate_search_lkup, grid_search_const, tune, CurveSpec, GridResult, GridSpec, SangSettings};
use storage_cfa::forecast::ForecastCurve;
use storage_cfa::lp::{solve, LpStatus};
use storage_cfa::policy::lookahead_lp;
use storage_cfa::sim::{path_costs, rollout, Trajectory};
use storage_cfa::zo::{gradient_estimate, sample_output_index, sang_run, smoothed_reference, SangConfig, StepsizeRule};
use storage_cfa::{PolicyFamily, PolicySpec, Scenario, State};

use oracles::{chi_square_critical, chi_square_statistic, random_bounded_lp, vertex_enumeration_optimum};

const SELECTION_PATHS: usize = 200;
const HELDOUT_PATHS: usize = 1000;
const GRID_SEED: u64 = 1;
const TUNE_SEEDS: [u64; 3] = [1, 2, 3];
const TUNE_ITERS: usize = 100;

type Outcome = Result<String, String>;

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn grid() -> Vec<f64> {
    GridSpec::default().values().unwrap()
}

fn criterion_1() -> Outcome {
    let sc = Scenario::default().with_rho(0.0);
    let g = grid_search_const(&sc, &grid(), SELECTION_PATHS, HELDOUT_PATHS, GRID_SEED).map_err(|e| e.to_string())?;
    let c = coordinate_search_lkup(&sc, &grid(), SELECTION_PATHS, GRID_SEED).map_err(|e| e.to_string())?;
    let bad: Vec<String> = c
        .curves
        .iter()
        .filter(|cv| cv.argmin_theta() != 1.0)
        .map(|cv| format!("{}:{}", cv.index + 1, cv.argmin_theta()))
        .collect();
    let detail = format!(
        "const argmin {}, {} of {} lkup coordinates at 1.0",
        g.argmin_theta(),
        c.curves.len() - bad.len(),
        c.curves.len()
    );
    if g.argmin_theta() == 1.0 && bad.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; off: {}", bad.join(" ")))
    }
}

fn criterion_2(results: &mut Vec<GridResult>) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for rho in [0.2, 0.4] {
        let sc = Scenario::default().with_rho(rho);
        let r = grid_search_const(&sc, &grid(), SELECTION_PATHS, HELDOUT_PATHS, GRID_SEED).map_err(|e| e.to_string())?;
        ok &= r.held_out.delta_f <= -0.005;
        parts.push(format!("rho {rho}: theta {} dF {:+.5}", r.argmin_theta(), r.held_out.delta_f));
        results.push(r);
    }
    let detail = parts.join(", ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_3(const_best: Option<f64>) -> Outcome {
    let Some(target) = const_best else {
        return Err("no constant baseline from criterion 2".into());
    };
    let sc = Scenario::default().with_rho(0.2);
    let settings = SangSettings {
        iters: TUNE_ITERS,
        ..SangSettings::default()
    };
    let curve = CurveSpec { every: 0, paths: 0 };
    let mut parts = Vec::new();
    let mut ok = true;
    for seed in TUNE_SEEDS {
        let r = tune(&sc, PolicyFamily::Lkup, &settings, curve, HELDOUT_PATHS, seed).map_err(|e| e.to_string())?;
        ok &= r.held_out.delta_f < target;
        let idx = r.sang.as_ref().map_or(0, |s| s.r);
        parts.push(format!("seed {seed}: R {idx} dF {:+.5}", r.held_out.delta_f));
    }
    let detail = format!("const best {target:+.5}; {}", parts.join(", "));
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 100_000;
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_moment = f64::NEG_INFINITY;
    for d in [2usize, 10] {
        for eta in [0.05, 0.5] {
            let bound = eta * (d as f64).sqrt();
            let moment_bound = eta * eta * ((d + 4) as f64).powi(2);
            for _ in 0..50 {
                let theta: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
                let est = smoothed_reference(l2, &theta, eta, n, &mut rng).map_err(|e| e.to_string())?;
                let gap = (est.value - l2(&theta)).abs() - 4.0 * est.value_stderr;
                worst_gap = worst_gap.max(gap / bound);
                let f0 = l2(&theta);
                let mut acc = 0.0;
                for _ in 0..n {
                    let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                    let p: Vec<f64> = theta.iter().zip(&v).map(|(t, x)| t + eta * x).collect();
                    acc += (l2(&p) - f0).powi(2) * v.iter().map(|x| x * x).sum::<f64>();
                }
                worst_moment = worst_moment.max(acc / n as f64 / moment_bound);
            }
        }
    }
    let detail = format!("max gap/bound {worst_gap:.3}, max moment/bound {worst_moment:.3}");
    if worst_gap <= 1.0 && worst_moment <= 1.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_5() -> Outcome {
    let c = [1.5, -2.0, 0.25, 0.0, 3.0];
    let f = |t: &[f64], _: u64| Ok(t.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>());
    let theta = [0.3, -1.0, 2.0, 0.5, -0.2];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 100_000;
    let mut sum = [0.0; 5];
    let mut sq = [0.0; 5];
    for _ in 0..n {
        let g = gradient_estimate(&f, &theta, 0.1, 1, false, &mut rng).map_err(|e| e.to_string())?.grad;
        for i in 0..5 {
            sum[i] += g[i];
            sq[i] += g[i] * g[i];
        }
    }
    let nf = n as f64;
    let mut worst: f64 = 0.0;
    for i in 0..5 {
        let mean = sum[i] / nf;
        let se = ((sq[i] / nf - mean * mean) / nf).sqrt();
        worst = worst.max((mean - c[i]).abs() / se);
    }
    let detail = format!("max |mean - c| / stderr = {worst:.2}");
    if worst <= 4.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mean_output_gbar(n: usize, runs: u64) -> Result<f64, String> {
    let d = 23;
    let f = |t: &[f64], _: u64| Ok(l1(t) / (d as f64).sqrt());
    let mut total = 0.0;
    for run in 0..runs {
        let cfg = SangConfig {
            iters_n: n,
            stepsize_rule: StepsizeRule::Corollary,
            delta: 1.0,
            seed: 6000 + run,
            ..SangConfig::new(vec![1.0; d])
        };
        let res = sang_run(&cfg, &f).map_err(|e| e.to_string())?;
        total += res.history[res.r - 1].gbar_norm_sq;
    }
    Ok(total / runs as f64)
}

fn criterion_6() -> Outcome {
    let small = mean_output_gbar(100, 20)?;
    let large = mean_output_gbar(400, 20)?;
    let ratio = large / small;
    let detail = format!("N=100 {small:.4}, N=400 {large:.4}, ratio {ratio:.3}");
    if (0.2..=1.0).contains(&ratio) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_state(sc: &Scenario, rng: &mut ChaCha8Rng) -> State {
    let t = rng.random_range(0..=sc.params.horizon_t);
    let end = sc.forecast.window_end(t);
    let values = (t..=end).map(|_| rng.random_range(0.0..150.0)).collect();
    State {
        t,
        r: rng.random_range(0.0..=sc.params.r_max),
        forecast: ForecastCurve { base_time: t, values },
        curves: Arc::clone(&sc.curves),
    }
}

fn random_policy(h: usize, rng: &mut ChaCha8Rng) -> PolicySpec {
    match rng.random_range(0..4) {
        0 => PolicySpec::benchmark(),
        1 => PolicySpec::constant(rng.random_range(0.0..2.0)),
        2 => PolicySpec::lookup((0..h).map(|_| rng.random_range(0.0..2.0)).collect()),
        _ => PolicySpec::exponential(rng.random_range(0.5..1.5), rng.random_range(-0.1..0.1)),
    }
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    while compared < 200 {
        let vars = rng.random_range(2..=4);
        let rows = rng.random_range(2..=5);
        let lp = random_bounded_lp(&mut rng, vars, rows);
        let sol = solve(&lp);
        let Some(reference) = vertex_enumeration_optimum(&lp) else {
            return Err("oracle found no vertex on a bounded LP".into());
        };
        if sol.status != LpStatus::Optimal {
            return Err(format!("solver reported {} on a feasible bounded LP", sol.status.as_str()));
        }
        worst = worst.max((sol.objective_value - reference).abs() / reference.abs().max(1e-12));
        compared += 1;
    }
    let sc = Scenario::default();
    let mut failures = 0;
    for _ in 0..10_000 {
        let state = random_state(&sc, &mut rng);
        let spec = random_policy(sc.params.lookahead_h, &mut rng);
        let lp = lookahead_lp(&spec, &state, &sc.params).map_err(|e| e.to_string())?;
        if solve(&lp).status != LpStatus::Optimal {
            failures += 1;
        }
    }
    let detail = format!("200 LPs max rel err {worst:.2e}; {failures} non-optimal lookahead verdicts in 10000");
    if worst <= 1e-7 && failures == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Re-derives feasibility, storage dynamics and total cost from a trajectory.
fn audit(tr: &Trajectory, sc: &Scenario) -> Result<(), String> {
    let p = &sc.params;
    let c = &sc.curves;
    let tol = 1e-9;
    let mut total = 0.0;
    for (i, rec) in tr.records.iter().enumerate() {
        let x = rec.decision;
        let t = rec.t;
        let fail = |what: &str| Err(format!("seed {} t {t}: {what}", tr.seed));
        if !(0.0..=p.r_max).contains(&rec.r) {
            return fail("storage outside [0, r_max]");
        }
        if x.to_array().iter().any(|&v| v < -tol) {
            return fail("negative flow");
        }
        if x.wd + p.beta_d * x.rd + x.gd > c.demand[t] + tol
            || x.rd + x.rg > rec.r + tol
            || x.wr + x.wd > rec.wind + tol
            || p.beta_c * (x.wr + x.gr) - x.rd - x.rg > p.r_max - rec.r + tol
            || x.wr + x.gr > p.gamma_c + tol
            || x.rd + x.rg > p.gamma_d + tol
        {
            return fail("infeasible decision");
        }
        if let Some(next) = tr.records.get(i + 1) {
            let expected = rec.r - x.rd + p.beta_c * (x.wr + x.gr) - x.rg;
            if (next.r - expected).abs() > tol * p.r_max.max(1.0) {
                return fail("storage transition mismatch");
            }
        }
        let served = x.wd + p.beta_d * x.rd + x.gd;
        let cost = p.penalty_cp * c.demand[t] - (p.penalty_cp + c.price_market[t]) * served
            - c.price_grid[t] * (p.beta_d * x.rg - x.gr - x.gd);
        total += cost;
    }
    if (total - tr.total_cost).abs() > 1e-9 * total.abs().max(1.0) {
        return Err(format!("seed {}: cost {} vs re-summed {total}", tr.seed, tr.total_cost));
    }
    Ok(())
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

fn criterion_8() -> Outcome {
    let sc = Scenario::default().with_rho(0.2);
    let h = sc.params.lookahead_h;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let specs: Vec<PolicySpec> = (0..1000).map(|_| random_policy(h, &mut rng)).collect();
    let run_all = || -> Result<Vec<Trajectory>, String> {
        specs
            .iter()
            .enumerate()
            .map(|(i, s)| rollout(s, &sc, i as u64).map_err(|e| e.to_string()))
            .collect()
    };
    let first = run_all()?;
    for tr in &first {
        audit(tr, &sc)?;
    }
    let second = run_all()?;
    if first != second {
        return Err("rerun differs".into());
    }
    let spec = PolicySpec::constant(0.8);
    let bits = |threads: usize| -> Result<Vec<u64>, String> {
        let costs = in_pool(threads, || path_costs(&spec, &sc, 200, 0)).map_err(|e| e.to_string())?;
        Ok(costs.iter().map(|c| c.to_bits()).collect())
    };
    let one = bits(1)?;
    let three = bits(3)?;
    let direct = (0..200)
        .map(|i| rollout(&spec, &sc, i).map(|t| t.total_cost.to_bits()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    if one != three || one != direct {
        return Err("path costs depend on the worker count".into());
    }
    Ok("1000 rollouts audited, reruns identical, 1 and 3 workers bitwise equal".into())
}

fn criterion_9() -> Outcome {
    let k = 20;
    let n = 100_000;
    let alpha = 0.001;
    let critical = chi_square_critical(k - 1, alpha);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut parts = Vec::new();
    let mut ok = true;
    let profiles: [(&str, Vec<f64>); 2] = [
        ("uniform", vec![1.0; k]),
        ("linear", (1..=k).map(|i| i as f64).collect()),
    ];
    for (name, betas) in profiles {
        let alphas = vec![0.5; k];
        let mut counts = vec![0u64; k];
        for _ in 0..n {
            let r = sample_output_index(&alphas, &betas, &mut rng).map_err(|e| e.to_string())?;
            counts[r - 1] += 1;
        }
        let total: f64 = betas.iter().sum();
        let probs: Vec<f64> = betas.iter().map(|b| b / total).collect();
        let stat = chi_square_statistic(&counts, &probs);
        ok &= stat <= critical;
        parts.push(format!("{name} chi2 {stat:.2}"));
    }
    let detail = format!("{} (critical {critical:.2})", parts.join(", "));
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn report(id: usize, limit: Option<Duration>, start: Instant, outcome: Outcome) -> bool {
    let elapsed = start.elapsed();
    let in_time = limit.is_none_or(|l| elapsed <= l);
    let (pass, detail) = match outcome {
        Ok(d) => (in_time, d),
        Err(d) => (false, d),
    };
    println!(
        "criterion {id}: {} {detail} [{:.1} s{}{}]",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.map_or(String::new(), |l| format!(", limit {} s", l.as_secs())),
        if in_time { "" } else { ", over time" }
    );
    pass
}

fn main() -> ExitCode {
    let min = |m: u64| Some(Duration::from_secs(60 * m));
    let mut all = true;

    let s = Instant::now();
    all &= report(1, min(5), s, criterion_1());

    let s = Instant::now();
    let mut grids = Vec::new();
    all &= report(2, min(10), s, criterion_2(&mut grids));
    let const_best = grids.iter().find(|g| g.rho_e == 0.2).map(|g| g.held_out.delta_f);

    let s = Instant::now();
    all &= report(3, min(30), s, criterion_3(const_best));

    let s = Instant::now();
    all &= report(4, min(2), s, criterion_4());
    let s = Instant::now();
    all &= report(5, min(1), s, criterion_5());
    let s = Instant::now();
    all &= report(6, min(5), s, criterion_6());
    let s = Instant::now();
    all &= report(7, min(3), s, criterion_7());
    let s = Instant::now();
    all &= report(8, min(5), s, criterion_8());
    let s = Instant::now();
    all &= report(9, None, s, criterion_9());

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
