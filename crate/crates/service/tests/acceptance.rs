//! Acceptance suite: one line per criterion, non-zero exit on any failure.

use std::process::Command;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::Request;
use forecast::models::FittedModel;
use forecast::synthetic::{generate, linear_gaussian, RegimeConfig};
use forecast::{
    blocked_cv_split, bootstrap_intervals, fit_model, run_pipeline, BootstrapConfig, CvConfig, FeatureMatrix,
    Hyperparams, ModelKind, ModelSpec,
};
use http_body_util::BodyExt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sim_core::scenario::Scenario;
use sim_core::{
    sensitivity_sweep, simulate, step, Occupancy, PipelineState, PlannerParam, ScenarioParams, StageId,
};
use tower::ServiceExt;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bottleneck_reproduction() -> Outcome {
    // A standing queue of one day's registrations keeps the desk busy from day 1.
    let initial = PipelineState::new(Occupancy {
        want_to_leave: 1e6,
        at_border: 300.0,
        ..Default::default()
    });
    let params = ScenarioParams {
        arrival_rate: 500.0,
        registration_capacity: 300.0,
        horizon: 30,
        ..Default::default()
    };
    let trace = simulate(&initial, &params).map_err(|e| e.to_string())?;
    let border = trace.series(StageId::AtBorder);
    let mut worst: f64 = 0.0;
    for (day, w) in border.windows(2).enumerate() {
        let err = (w[1] - w[0] - 200.0).abs();
        worst = worst.max(err);
        check(err <= 1e-9, || format!("day {}: growth {}", day + 1, w[1] - w[0]))?;
    }
    Ok(format!("30 daily increments of 200, max error {worst:e}"))
}

fn random_scenario(rng: &mut ChaCha8Rng, horizon: u32) -> (ScenarioParams, PipelineState) {
    let params = ScenarioParams {
        latent_demand: rng.random_range(0.0..2000.0),
        arrival_rate: rng.random_range(0.0..2000.0),
        registration_capacity: rng.random_range(0.0..2000.0),
        special_needs_fraction: rng.random_range(0.0..=1.0),
        extra_shelter_requests: rng.random_range(0.0..500.0),
        relocation_capacity: rng.random_range(0.0..1000.0),
        shelter_capacity: None,
        horizon,
    };
    let mut occ = Occupancy::default();
    for stage in StageId::ALL {
        occ[stage] = rng.random_range(0.0..1e5);
    }
    (params, PipelineState::new(occ))
}

fn conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for n in 0..1000 {
        let (params, initial) = random_scenario(&mut rng, 100);
        let mut state = initial;
        for _ in 0..params.horizon {
            let (next, flows) = step(&state, &params).map_err(|e| e.to_string())?;
            let inflow = params.latent_demand + params.extra_shelter_requests;
            let err = (next.occupancy.total() - state.occupancy.total() - inflow).abs();
            worst = worst.max(err);
            check(err <= 1e-9, || format!("scenario {n} day {}: balance error {err:e}", next.day))?;
            for (stage, v) in next.occupancy.iter() {
                check(v >= 0.0, || format!("scenario {n} day {}: {} = {v}", next.day, stage.name()))?;
            }
            for f in &flows {
                check(f.amount >= 0.0 && f.amount <= state.get(f.from()), || {
                    format!("scenario {n}: {:?} moved {} from a pool of {}", f.edge, f.amount, state.get(f.from()))
                })?;
                if let Some(cap) = f.edge.capacity(&params) {
                    check(f.amount <= cap, || format!("scenario {n}: {:?} moved {} over cap {cap}", f.edge, f.amount))?;
                }
            }
            state = next;
        }
    }
    Ok(format!("1000 scenarios x 100 days, max balance error {worst:e}"))
}

fn sweep_monotonicity() -> Outcome {
    let base = ScenarioParams {
        latent_demand: 600.0,
        arrival_rate: 500.0,
        registration_capacity: 400.0,
        special_needs_fraction: 0.6,
        extra_shelter_requests: 20.0,
        relocation_capacity: 100.0,
        shelter_capacity: None,
        horizon: 60,
    };
    let initial = PipelineState::new(Occupancy {
        want_to_leave: 5e4,
        at_border: 500.0,
        sheltered: 1000.0,
        ..Default::default()
    });
    let cases = [
        (PlannerParam::RelocationCapacity, (0..10).map(|i| i as f64 * 40.0).collect::<Vec<_>>(), -1.0),
        (PlannerParam::ExtraShelterRequests, (0..10).map(|i| i as f64 * 25.0).collect(), 1.0),
    ];
    for (param, grid, sign) in cases {
        let sweep = sensitivity_sweep(&base, param, &grid, &initial).map_err(|e| e.to_string())?;
        for w in sweep.series.windows(2) {
            for (day, (a, b)) in w[0].sheltered.iter().zip(&w[1].sheltered).enumerate() {
                check(sign * (b - a) >= -1e-9, || {
                    format!("{}: day {day}, {}->{} gives {a}->{b}", param.name(), w[0].value, w[1].value)
                })?;
            }
        }
        let first = sweep.series[0].sheltered.last().unwrap();
        let last = sweep.series[9].sheltered.last().unwrap();
        check(sign * (last - first) > 0.0, || format!("{}: sweep has no effect", param.name()))?;
    }
    Ok("relocation non-increasing, extra requests non-decreasing, 10-point grids, 61 days".into())
}

fn forecast_pipeline() -> Outcome {
    let regime = generate(&RegimeConfig::default());
    let cfg = regime.pipeline_config(2022);
    let out = run_pipeline(&regime.arrivals, &regime.indicators, &cfg).map_err(|e| e.to_string())?;
    let base_rmse = out.baseline.test_rmse.unwrap();
    let base_mae = out.baseline.test_mae.unwrap();
    let models = &out.summaries[..out.summaries.len() - 1];
    let mae_losers: Vec<&str> = models
        .iter()
        .filter(|m| m.test_mae >= base_mae)
        .map(|m| m.name.as_str())
        .collect();
    let rmse_losers = models.iter().filter(|m| m.test_rmse >= base_rmse).count();
    let best = models.iter().map(|m| m.test_rmse).fold(f64::INFINITY, f64::min);
    let ratio = out.ensemble_test.rmse / best;
    check((170..=210).contains(&out.n_train) && (75..=90).contains(&out.n_test), || {
        format!("split {}/{} is off the target shape", out.n_train, out.n_test)
    })?;
    check(mae_losers.is_empty(), || format!("models not beating baseline MAE: {mae_losers:?}"))?;
    check(rmse_losers <= 2, || format!("{rmse_losers} models fail to beat baseline RMSE"))?;
    check(ratio <= 1.2, || format!("ensemble RMSE {} is {ratio:.3} x best {best}", out.ensemble_test.rmse))?;
    Ok(format!(
        "{} train / {} test days, {} models beat baseline MAE {base_mae:.2}, {rmse_losers} lose on RMSE, ensemble/best RMSE {ratio:.3}",
        out.n_train,
        out.n_test,
        models.len()
    ))
}

/// Normal equations on `[1, x]`, solved by Gauss-Jordan elimination.
fn ols_oracle(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = x[0].len() + 1;
    let mut a = vec![vec![0.0; p + 1]; p];
    for (row, t) in x.iter().zip(y) {
        let r: Vec<f64> = std::iter::once(1.0).chain(row.iter().copied()).collect();
        for i in 0..p {
            a[i][p] += r[i] * t;
            for j in 0..p {
                a[i][j] += r[i] * r[j];
            }
        }
    }
    for col in 0..p {
        let piv = (col..p).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        let d = a[col][col];
        a[col].iter_mut().for_each(|v| *v /= d);
        for row in 0..p {
            if row != col {
                let f = a[row][col];
                let pivot_row = a[col].clone();
                a[row].iter_mut().zip(&pivot_row).for_each(|(v, pv)| *v -= f * pv);
            }
        }
    }
    a.iter().map(|r| r[p]).collect()
}

fn ridge_vs_ols() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x: Vec<Vec<f64>> = (0..200)
        .map(|_| (0..5).map(|j| rng.random_range(-3.0..3.0) * (1.0 + j as f64)).collect())
        .collect();
    let beta = [1.5, -2.0, 0.7, 3.3, -0.4];
    let y: Vec<f64> = x
        .iter()
        .map(|r| 12.0 + r.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() + rng.random_range(-2.0..2.0))
        .collect();
    let oracle = ols_oracle(&x, &y);
    let m = FeatureMatrix::from_xy(x, y);
    let spec = ModelSpec::new("ridge", ModelKind::Ridge, vec![Hyperparams::Ridge { alpha: 0.0 }]);
    let model = fit_model(&spec, &m, &CvConfig::default(), 0).map_err(|e| e.to_string())?;
    let FittedModel::Linear(lin) = model.fitted else {
        return Err("ridge did not produce a linear model".into());
    };
    let fitted: Vec<f64> = std::iter::once(lin.intercept).chain(lin.coefficients).collect();
    let mut worst: f64 = 0.0;
    for (a, b) in fitted.iter().zip(&oracle) {
        let rel = (a - b).abs() / b.abs();
        worst = worst.max(rel);
    }
    check(worst <= 1e-6, || format!("max relative error {worst:e}"))?;
    Ok(format!("6 coefficients, max relative error {worst:e}"))
}

fn bootstrap_coverage() -> Outcome {
    const TRIALS: u64 = 200;
    const TRAIN: usize = 120;
    const TEST: usize = 5;
    let spec = ModelSpec::new("ridge", ModelKind::Ridge, vec![Hyperparams::Ridge { alpha: 0.0 }]);
    let mut hits = 0usize;
    for trial in 0..TRIALS {
        let (x, y) = linear_gaussian(TRAIN + TEST, 50.0, 3.0, 4.0, 1000 + trial);
        let rows: Vec<Vec<f64>> = x.iter().map(|v| vec![*v]).collect();
        let train = FeatureMatrix::from_xy(rows[..TRAIN].to_vec(), y[..TRAIN].to_vec());
        let test = FeatureMatrix::from_xy(rows[TRAIN..].to_vec(), y[TRAIN..].to_vec());
        let model = fit_model(&spec, &train, &CvConfig::default(), trial).map_err(|e| e.to_string())?;
        let cfg = BootstrapConfig {
            replicates: 1000,
            level: 0.8,
            seed: trial,
        };
        let band = bootstrap_intervals(&model, &test.rows(), &cfg).map_err(|e| e.to_string())?;
        hits += test
            .y
            .iter()
            .enumerate()
            .filter(|(i, t)| band.lower[*i] <= **t && **t <= band.upper[*i])
            .count();
    }
    let total = TRIALS as usize * TEST;
    let coverage = hits as f64 / total as f64;
    check((0.70..=0.90).contains(&coverage), || format!("coverage {coverage:.3}"))?;
    Ok(format!("{hits}/{total} held-out points inside 80% bands, coverage {coverage:.3}"))
}

/// Independent restatement of the split rule.
fn expected_folds(n: usize, k: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for b in 0..k {
        let size = if b < n % k { n / k + 1 } else { n / k };
        let train = (size as f64 * 0.8).floor() as usize;
        out.push((start, start + train, start + size));
        start += size;
    }
    out
}

fn blocked_cv() -> Outcome {
    for n in [100usize, 137, 20] {
        let folds = blocked_cv_split(n, 10).map_err(|e| e.to_string())?;
        let want = expected_folds(n, 10);
        check(folds.len() == 10, || format!("n={n}: {} folds", folds.len()))?;
        let mut next = 0;
        for (i, (f, w)) in folds.iter().zip(&want).enumerate() {
            check(f.train.start == next, || format!("n={n} block {i}: gap or overlap at {}", f.train.start))?;
            check(!f.train.is_empty() && !f.validation.is_empty(), || format!("n={n} block {i}: empty side"))?;
            check(f.train.end == f.validation.start, || format!("n={n} block {i}: validation not after train"))?;
            check((f.train.start, f.train.end, f.validation.end) == *w, || {
                format!("n={n} block {i}: {:?}/{:?} vs expected {w:?}", f.train, f.validation)
            })?;
            next = f.validation.end;
        }
        check(next == n, || format!("n={n}: blocks end at {next}"))?;
    }
    Ok("n = 100, 137, 20 with k = 10 match the contiguous 80/20 block rule".into())
}

fn numeric_tokens(v: &serde_json::Value, path: &str, out: &mut Vec<(String, String)>) {
    match v {
        serde_json::Value::Number(n) => out.push((path.to_string(), n.to_string())),
        serde_json::Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                numeric_tokens(x, &format!("{path}[{i}]"), out);
            }
        }
        serde_json::Value::Object(map) => {
            for (k, x) in map {
                numeric_tokens(x, &format!("{path}.{k}"), out);
            }
        }
        _ => {}
    }
}

async fn cli_api_parity() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let app = service::router(service::AppState::in_memory());
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut compared = 0usize;
    for n in 0..50 {
        let horizon = rng.random_range(1..=90);
        let (params, initial) = random_scenario(&mut rng, horizon);
        let scenario = Scenario { params: params.clone(), initial };
        let toml_path = dir.path().join(format!("s{n}.toml"));
        let json_path = dir.path().join(format!("s{n}.json"));
        let csv_path = dir.path().join(format!("s{n}.csv"));
        std::fs::write(&toml_path, scenario.to_toml()).map_err(|e| e.to_string())?;
        let status = Command::new(env!("CARGO_BIN_EXE_planner"))
            .args(["simulate", "--scenario"])
            .arg(&toml_path)
            .arg("--json")
            .arg(&json_path)
            .arg("--out")
            .arg(&csv_path)
            .stdout(std::process::Stdio::null())
            .status()
            .map_err(|e| e.to_string())?;
        check(status.success(), || format!("scenario {n}: CLI exited with {status}"))?;
        let cli_bytes = std::fs::read(&json_path).map_err(|e| e.to_string())?;

        let body = serde_json::json!({ "params": params, "initial": initial.occupancy }).to_string();
        let req = Request::post("/v1/simulate")
            .header("content-type", "application/json")
            .body(Body::from(body))
            .map_err(|e| e.to_string())?;
        let resp = app.clone().oneshot(req).await.map_err(|e| e.to_string())?;
        check(resp.status().is_success(), || format!("scenario {n}: API returned {}", resp.status()))?;
        let api_bytes = resp.into_body().collect().await.map_err(|e| e.to_string())?.to_bytes();

        let parse = |b: &[u8]| serde_json::from_slice::<serde_json::Value>(b).map_err(|e| e.to_string());
        let (mut cli_nums, mut api_nums) = (Vec::new(), Vec::new());
        numeric_tokens(&parse(&cli_bytes)?, "$", &mut cli_nums);
        numeric_tokens(&parse(&api_bytes)?, "$", &mut api_nums);
        check(cli_nums == api_nums, || {
            let diff = cli_nums.iter().zip(&api_nums).find(|(a, b)| a != b);
            format!("scenario {n}: first numeric difference {diff:?}")
        })?;
        check(cli_bytes == api_bytes.as_ref(), || format!("scenario {n}: response bytes differ"))?;

        // The occupancy CSV carries the same number text as the API trace.
        let api = parse(&api_bytes)?;
        let csv = std::fs::read_to_string(&csv_path).map_err(|e| e.to_string())?;
        for line in csv.lines().skip(1) {
            let mut cells = line.split(',');
            let (day, stage, value) = (cells.next(), cells.next(), cells.next());
            let (Some(day), Some(stage), Some(value)) = (day, stage, value) else {
                return Err(format!("scenario {n}: bad CSV line `{line}`"));
            };
            let day: usize = day.parse().map_err(|_| format!("bad day `{day}`"))?;
            let from_api = api["trace"]["states"][day]["occupancy"][stage].to_string();
            check(from_api == value, || format!("scenario {n} day {day} {stage}: csv {value} vs api {from_api}"))?;
        }
        compared += cli_nums.len();
    }
    Ok(format!("50 scenarios, {compared} numeric fields identical, CSV text matches"))
}

fn main() {
    let rt = tokio::runtime::Runtime::new().expect("runtime");
    type Criterion<'a> = (&'a str, Duration, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("bottleneck reproduction", Duration::from_secs(1), Box::new(bottleneck_reproduction)),
        ("conservation suite", Duration::from_secs(10), Box::new(conservation)),
        ("sweep monotonicity", Duration::from_secs(1), Box::new(sweep_monotonicity)),
        ("forecast pipeline", Duration::from_secs(120), Box::new(forecast_pipeline)),
        ("ridge vs OLS oracle", Duration::from_secs(1), Box::new(ridge_vs_ols)),
        ("bootstrap coverage", Duration::from_secs(120), Box::new(bootstrap_coverage)),
        ("blocked CV contract", Duration::from_secs(1), Box::new(blocked_cv)),
        ("CLI/API parity", Duration::from_secs(10), Box::new(|| rt.block_on(cli_api_parity()))),
    ];
    let mut failed = 0;
    for (name, limit, run) in &criteria {
        let started = Instant::now();
        let outcome = run();
        let elapsed = started.elapsed();
        let outcome = outcome.and_then(|msg| {
            if elapsed <= *limit {
                Ok(msg)
            } else {
                Err(format!("{msg}; took {elapsed:.2?}, limit {limit:?}"))
            }
        });
        match outcome {
            Ok(msg) => println!("PASS  {name:<24} {elapsed:>9.2?}  {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {name:<24} {elapsed:>9.2?}  {msg}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
