mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use xltwin::beamform::{proactive_optimize, zf_precode, ReactiveKind};
use xltwin::channel::{self, doppler_and_coherence, los_channel, plane_wave_steering, CVec};
use xltwin::dynamics::{hotspot_activate, Hotspot};
use xltwin::geometry::{Aabb, Vec3};
use xltwin::harness::output::{self, TraceData};
use xltwin::harness::pipeline::{self, build_training_dataset, layout_for};
use xltwin::harness::sim::run_grid;
use xltwin::harness::{run_cell, ExperimentConfig, SchemeId};
use xltwin::metrics::{self, MetricsReport};
use xltwin::par::Execution;
use xltwin::predictor::gan::{adversarial_value, examples_from_dataset, prediction_loss, FeatureLayout, Normalizer};
use xltwin::predictor::nn::Mlp;
use xltwin::predictor::{prediction_rmse, train_generative, GenerativeModel, TrainingConfig};
use xltwin::rng::{self, SimRng};
use xltwin::scene::{classify_regime, rayleigh_distance, Regime, Scene, SceneConfig};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1() -> Outcome {
    let (fd, tc) = doppler_and_coherence(1.0, 100e9);
    let ok = ((fd - 333.3) / 333.3).abs() <= 0.005 && ((tc - 1.27e-3) / 1.27e-3).abs() <= 0.005;
    check(ok, format!("f_d = {fd:.2} Hz, T_c = {:.4} ms", tc * 1e3))
}

fn table_array_scene() -> Scene {
    SceneConfig::parse(
        r#"
carrier_frequency = 100e9
room = { min = [0.0, 0.0, 0.0], max = [10.0, 10.0, 3.0] }
scatterers_per_link = 0
[[transmitter]]
center = [5.0, 5.0, 1.5]
nx = 16
ny = 16
boresight = [1.0, 0.0, 0.0]
"#,
    )
    .and_then(|c| c.build(0))
    .expect("table array scene")
}

fn c2() -> Outcome {
    let scene = table_array_scene();
    let tx = &scene.transmitters[0];
    let r = rayleigh_distance(tx.array.aperture(), scene.wavelength).map_err(|e| e.to_string())?;
    let boundary = classify_regime(r, r) == Regime::NearField && classify_regime(r.next_up(), r) == Regime::FarField;
    let examples = classify_regime(0.5, 0.675) == Regime::NearField && classify_regime(2.0, 0.675) == Regime::FarField;
    check((r - 0.675).abs() <= 1e-3 && boundary && examples, format!("R = {r:.6} m, boundary exact = {boundary}"))
}

fn gaussian_cvec(n: usize, r: &mut SimRng) -> CVec {
    CVec::from_fn(n, |_, _| {
        let re: f64 = StandardNormal.sample(r);
        let im: f64 = StandardNormal.sample(r);
        Complex64::new(re, im)
    })
}

fn c3() -> Outcome {
    let start = Instant::now();
    let mut r = common::rng(3);
    let mut worst: f64 = 0.0;
    for k in [2, 4, 8] {
        for _ in 0..100 {
            let hs: Vec<CVec> = (0..k).map(|_| gaussian_cvec(256, &mut r)).collect();
            let ws = zf_precode(&hs, Some(0.0)).map_err(|e| e.to_string())?;
            for (i, w) in ws.iter().enumerate() {
                for (j, h) in hs.iter().enumerate() {
                    if i != j {
                        worst = worst.max(h.dotc(w).norm() / (h.norm() * w.norm()));
                    }
                }
            }
        }
    }
    let t = start.elapsed();
    check(worst <= 1e-9 && t < Duration::from_secs(5), format!("worst relative cross-gain {worst:e} in {t:.2?}"))
}

fn steering_ratio(scene: &Scene, u: &Vec3) -> Result<f64, String> {
    let h = los_channel(scene, 0, u, Regime::NearField).map_err(|e| e.to_string())?;
    let a = plane_wave_steering(scene, 0, u).map_err(|e| e.to_string())?;
    let matched = h.norm_squared();
    let steered = h.dotc(&a).norm() / a.norm();
    Ok(matched / (steered * steered))
}

fn c4() -> Outcome {
    let start = Instant::now();
    let scene = table_array_scene();
    let center = scene.transmitters[0].center;
    let rd = scene.rayleigh(0).map_err(|e| e.to_string())?;
    let mut r = common::rng(4);
    let mut min_gain = f64::INFINITY;
    for _ in 0..100 {
        let theta: f64 = r.random_range(-1.0..1.0);
        let phi: f64 = r.random_range(-0.5..0.5);
        let dir = Vec3::new(theta.cos() * phi.cos(), theta.sin() * phi.cos(), phi.sin());
        min_gain = min_gain.min(steering_ratio(&scene, &(center + dir * 0.3))?);
    }
    let dir = Vec3::new(0.6_f64.cos(), 0.6_f64.sin(), 0.0);
    let grid: Vec<f64> = (0..10).map(|i| rd + (0.1 - rd) * i as f64 / 9.0).collect();
    let loss = grid
        .iter()
        .map(|d| steering_ratio(&scene, &(center + dir * *d)))
        .collect::<Result<Vec<_>, _>>()?;
    let monotone = loss.windows(2).all(|w| w[1] > w[0]);
    let t = start.elapsed();
    check(
        min_gain > 1.0 && monotone && t < Duration::from_secs(5),
        format!(
            "min focusing gain at 0.3 m {min_gain:.3}, mismatch loss {:.3} -> {:.3} monotone = {monotone}",
            loss[0],
            loss[9]
        ),
    )
}

fn c5() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig::default();
    for seed in 0..5 {
        let cell = run_cell(&cfg, &[SchemeId::Oracle], cfg.interferers, seed, None, Execution::Parallel)
            .map_err(|e| e.to_string())?
            .remove(0);
        if let Some(s) = cell.steps.iter().find(|s| s.sinr != s.predicted_sinr) {
            return Err(format!("seed {seed} step {}: SINR {} vs predicted {}", s.step, s.sinr, s.predicted_sinr));
        }
        let p: Vec<Vec<f64>> = cell.steps.iter().map(|s| s.predicted.clone()).collect();
        let q: Vec<Vec<f64>> = cell.steps.iter().map(|s| s.realized.clone()).collect();
        let rmse = prediction_rmse(&p, &q).map_err(|e| e.to_string())?;
        if rmse.aggregate != 0.0 || rmse.per_horizon.iter().any(|x| *x != 0.0) {
            return Err(format!("seed {seed}: RMSE {:?}", rmse.per_horizon));
        }
    }
    Ok(format!("RMSE 0 and SINR equality over 5 seeds in {:.2?}", start.elapsed()))
}

fn c6() -> Outcome {
    let start = Instant::now();
    let mut r = common::rng(6);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let paths = r.random_range(0..=3);
        let scene = common::random_scene(&mut r, 4, 4, paths);
        let u = loop {
            let u = Vec3::new(r.random_range(0.1..9.9), r.random_range(0.1..9.9), r.random_range(0.1..2.9));
            if (u - scene.transmitters[0].center).norm() > 0.05 {
                break u;
            }
        };
        let regime = if r.random_bool(0.5) { Regime::NearField } else { Regime::FarField };
        let blockage = if r.random_bool(0.5) { 1.0 } else { scene.blockage_attenuation };
        let nlos = channel::nlos_paths(&scene, 0, &u).map_err(|e| e.to_string())?;
        let c = channel::hybrid_channel(&scene, 0, &u, regime, blockage, &nlos).map_err(|e| e.to_string())?;
        let (oracle, big_lambda) = common::brute_force_channel(&scene, &u, regime, blockage);
        worst = worst.max((c.lambda_total - big_lambda).abs() / big_lambda);
        let norm = oracle.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for (a, b) in c.h_eff.iter().zip(&oracle) {
            worst = worst.max((a - b).norm() / norm);
        }
    }
    let t = start.elapsed();
    check(worst <= 1e-12, format!("worst relative error {worst:e} over 1000 configurations in {t:.2?}"))
}

fn toy_model() -> GenerativeModel {
    let mut r = rng::substream(7, &[]);
    GenerativeModel {
        layout: FeatureLayout {
            links: 0,
            history: 0,
            horizon: 1,
            latent_dim: 1,
        },
        config: TrainingConfig {
            latent_dim: 1,
            hidden: 1,
            consistency_draws: 1,
            ..TrainingConfig::default()
        },
        cond_norm: Normalizer::identity(0),
        disp_norm: Normalizer::identity(3),
        int_norm: Normalizer::identity(1),
        generator: Mlp::new(&[1, 1, 4], &mut r).expect("toy generator"),
        discriminator: Mlp::new(&[4, 1, 1], &mut r).expect("toy discriminator"),
        epochs_trained: 0,
    }
}

fn c7() -> Outcome {
    let layout = FeatureLayout {
        links: 3,
        history: 2,
        horizon: 5,
        latent_dim: 4,
    };
    let target: Vec<f64> = (0..layout.out_dim()).map(|i| (0.37 * i as f64).cos()).collect();
    let zero = prediction_loss(&layout, &target, &target, 1.0);
    let adv = adversarial_value(0.5, 0.5);
    let model = toy_model();
    if model.generator.num_params() != 10 {
        return Err(format!("toy has {} parameters", model.generator.num_params()));
    }
    let z = vec![vec![0.7]];
    let y = vec![0.3, -0.2, 0.5, -1.1];
    let (_, grad) = model.prediction_loss_gradient(&[], &y, &z);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let mut a = model.clone();
        a.generator.params[i] += h;
        let mut b = model.clone();
        b.generator.params[i] -= h;
        let fd = (a.prediction_loss_gradient(&[], &y, &z).0 - b.prediction_loss_gradient(&[], &y, &z).0) / (2.0 * h);
        worst = worst.max((fd - grad[i]).abs() / fd.abs().max(1e-8));
    }
    let ok = zero == 0.0 && (adv - 2.0 * 0.5_f64.ln()).abs() < 1e-15 && worst <= 1e-4;
    check(ok, format!("L_pred = {zero}, adversarial value = {adv:.6}, worst gradient error {worst:e}"))
}

fn c8() -> Outcome {
    let start = Instant::now();
    let hotspot = Hotspot {
        region: Aabb::new([1.0, 1.0, 0.0], [3.0, 3.0, 2.0]),
        intensity: 3.0,
        users: vec![],
    };
    let mut r = common::rng(8);
    let n = 100_000;
    let counts = (0..n)
        .map(|_| hotspot_activate(&hotspot, &mut r).map(|h| h.users.len() as f64))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let mean = counts.iter().sum::<f64>() / n as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = start.elapsed();
    check(
        (2.97..=3.03).contains(&mean) && (var - 3.0).abs() <= 0.15 && t < Duration::from_secs(5),
        format!("mean {mean:.4}, variance {var:.4} in {t:.2?}"),
    )
}

struct Sweep {
    reports: BTreeMap<SchemeId, MetricsReport>,
    per_seed: BTreeMap<SchemeId, Vec<f64>>,
    elapsed: Duration,
}

fn sweep() -> Result<Sweep, String> {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        interferers: 8,
        ..ExperimentConfig::default()
    };
    let k = cfg.interferers;
    let e = |e: xltwin::Error| e.to_string();
    let ds = build_training_dataset(&cfg, k, Execution::Parallel).map_err(e)?;
    let ex = examples_from_dataset(&ds).map_err(e)?;
    let (model, _) = train_generative(&ex, layout_for(&cfg, k), cfg.training, None).map_err(e)?;
    let model = Arc::new(model);
    let lookup = |_: usize| Some(Arc::clone(&model));
    let mut schemes = SchemeId::COMPARED.to_vec();
    schemes.push(SchemeId::Oracle);
    let cells = run_grid(&cfg, &schemes, &[k], &lookup, Execution::Parallel).map_err(e)?;
    let hash = cfg.hash().map_err(e)?;
    let traces: Vec<TraceData> = cells.iter().map(|c| TraceData::from_cell(c, &hash, cfg.horizon)).collect();
    let thresholds = metrics::default_threshold_grid_db();
    let mut reports = BTreeMap::new();
    let mut per_seed = BTreeMap::new();
    for s in &schemes {
        let group: Vec<&TraceData> = traces.iter().filter(|t| t.header.scheme == *s).collect();
        reports.insert(*s, output::report(&group, &thresholds).map_err(e)?);
        let means = group
            .iter()
            .map(|t| metrics::avg_interference(&t.interference()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(e)?;
        per_seed.insert(*s, means);
    }
    Ok(Sweep {
        reports,
        per_seed,
        elapsed: start.elapsed(),
    })
}

/// Paired mean difference `b - a` over seeds and its standard error.
fn paired(a: &[f64], b: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn c9(s: &Sweep) -> Outcome {
    let order = [
        SchemeId::GenaiRegimeAwareProposed,
        SchemeId::GenaiRegimeUnaware,
        SchemeId::DtDeterministic,
        SchemeId::ReactiveHybrid,
        SchemeId::ReactiveZf,
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for w in order.windows(2) {
        let (d, se) = paired(&s.per_seed[&w[0]], &s.per_seed[&w[1]]);
        let holds = d > se;
        ok &= holds;
        parts.push(format!(
            "{} < {}: {} (diff {d:.3e}, se {se:.3e})",
            w[0].name(),
            w[1].name(),
            if holds { "ok" } else { "violated" }
        ));
    }
    check(ok && s.elapsed < Duration::from_secs(180), format!("{}; sweep {:.1?}", parts.join("; "), s.elapsed))
}

fn c10(s: &Sweep) -> Outcome {
    let compared = SchemeId::COMPARED;
    let mut problems = Vec::new();
    for id in compared {
        let r = &s.reports[&id];
        if r.outage.windows(2).any(|w| w[1] < w[0]) {
            problems.push(format!("outage of {} decreases in gamma_min", id.name()));
        }
    }
    let at5 = |id: SchemeId| -> f64 {
        let r = &s.reports[&id];
        let i = r.thresholds_db.iter().position(|g| *g == 5.0).expect("5 dB in the threshold grid");
        r.outage[i]
    };
    let proposed = at5(SchemeId::GenaiRegimeAwareProposed);
    if compared.iter().any(|id| at5(*id) < proposed) {
        problems.push(format!("proposed outage at 5 dB {proposed:.4} is not the lowest"));
    }
    for id in [SchemeId::DtDeterministic, SchemeId::GenaiRegimeUnaware, SchemeId::GenaiRegimeAwareProposed] {
        let rm = &s.reports[&id].rmse_per_horizon;
        if rm.windows(2).any(|w| w[1] < w[0]) {
            problems.push(format!("RMSE of {} not non-decreasing in tau: {:?}", id.name(), rm));
        }
    }
    let rm5 = |id: SchemeId| s.reports[&id].rmse_per_horizon[4];
    let (gp, gd) = (rm5(SchemeId::GenaiRegimeAwareProposed), rm5(SchemeId::DtDeterministic));
    if gp > gd {
        problems.push(format!("RMSE at tau 5: proposed {gp:.3e} > dt {gd:.3e}"));
    }
    let best = compared.iter().map(|id| s.reports[&id].min_rate).fold(f64::NEG_INFINITY, f64::max);
    let mine = s.reports[&SchemeId::GenaiRegimeAwareProposed].min_rate;
    if mine < best {
        problems.push(format!("proposed min-rate {mine:.4} below best {best:.4}"));
    }
    let summary = format!("outage@5dB proposed {proposed:.4}, RMSE@5 proposed {gp:.3e} dt {gd:.3e}, min-rate proposed {mine:.4}");
    if problems.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{summary}; {}", problems.join("; ")))
    }
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).expect("readable dir") {
            let p = e.expect("dir entry").path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).expect("under root").to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).expect("readable file"));
            }
        }
    }
    out
}

fn pipeline_run(cfg: &ExperimentConfig, root: &Path) -> Result<(), String> {
    let e = |e: xltwin::Error| e.to_string();
    let k = cfg.interferers;
    let data = root.join("data");
    let mut with_models = cfg.clone();
    with_models.model_dir = root.join("models");
    pipeline::run_dataset(&with_models, &[k], &data, Execution::Parallel).map_err(e)?;
    pipeline::run_train(&with_models, k, &data, &root.join("train"), false, None).map_err(e)?;
    let mut schemes = SchemeId::COMPARED.to_vec();
    schemes.push(SchemeId::Oracle);
    let sim = root.join("sim");
    pipeline::run_simulate(&with_models, &schemes, &[k], &sim, true, Execution::Parallel).map_err(e)?;
    pipeline::run_evaluate(&sim, &root.join("eval")).map_err(e)?;
    pipeline::run_sweep(&with_models, &[SchemeId::ReactiveZf, SchemeId::ReactiveHybrid], &root.join("sweep"), false, Execution::Parallel)
        .map_err(e)?;
    Ok(())
}

fn c11() -> Outcome {
    let start = Instant::now();
    let mut cfg = common::quick_config();
    cfg.k_range = [2, 6];
    cfg.k_step = 2;
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    pipeline_run(&cfg, a.path())?;
    pipeline_run(&cfg, b.path())?;
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    let differing: Vec<&String> = ta.keys().filter(|k| tb.get(*k) != ta.get(*k)).collect();
    let t = start.elapsed();
    check(
        ta.len() > 10 && ta.len() == tb.len() && differing.is_empty(),
        format!("{} files compared, {} differ, {t:.1?}", ta.len(), differing.len()),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Median wall time per iteration over a few optimizer runs.
fn per_iteration_time(k: usize, m: usize, t: usize) -> Result<f64, String> {
    let mut samples = Vec::new();
    for seed in 0..6 {
        let inst = common::Instance::on_layout(k, m, t, 500 + seed);
        let out = proactive_optimize(&inst.problem(ReactiveKind::RegimeDispatch, None), &inst.config, Execution::Sequential)
            .map_err(|e| e.to_string())?;
        samples.extend(out.trace.iteration_time.iter().map(Duration::as_secs_f64));
    }
    Ok(median(samples))
}

fn c12() -> Outcome {
    let start = Instant::now();
    let mut runs = 0;
    for seed in 0..25 {
        for (k, m, t) in [(2, 2, 3), (4, 4, 5), (8, 3, 2), (3, 10, 5)] {
            let inst = common::Instance::on_layout(k, m, t, seed);
            let out = proactive_optimize(&inst.problem(ReactiveKind::RegimeDispatch, None), &inst.config, Execution::Sequential)
                .map_err(|e| e.to_string())?;
            let tr = &out.trace;
            if let Some(w) = tr.objective.windows(2).find(|w| w[1] > w[0]) {
                return Err(format!("run {runs}: objective rose {:e} -> {:e}", w[0], w[1]));
            }
            if let Some(p) = tr.total_power.iter().find(|p| **p > inst.config.power_budget * (1.0 + 1e-12)) {
                return Err(format!("run {runs}: power {p} over budget {}", inst.config.power_budget));
            }
            runs += 1;
        }
    }
    per_iteration_time(4, 8, 5)?;
    let base = per_iteration_time(4, 8, 5)?;
    let doubled = [per_iteration_time(4, 16, 5)?, per_iteration_time(4, 8, 10)?, per_iteration_time(8, 8, 5)?];
    let ratios: Vec<f64> = doubled.iter().map(|d| d / base).collect();
    let ok = ratios.iter().all(|r| *r <= 2.5);
    let t = start.elapsed();
    check(
        ok,
        format!(
            "{runs} runs monotone within budget; per-iteration ratio for doubled M, T, K: {:.2}, {:.2}, {:.2} ({t:.1?})",
            ratios[0], ratios[1], ratios[2]
        ),
    )
}

fn main() -> ExitCode {
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: usize| filter.is_empty() || filter.contains(&n);
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    let simple: [(usize, fn() -> Outcome); 8] = [(1, c1), (2, c2), (3, c3), (4, c4), (5, c5), (6, c6), (7, c7), (8, c8)];
    for (n, f) in simple {
        if wanted(n) {
            results.push((n, f()));
        }
    }
    if wanted(9) || wanted(10) {
        match sweep() {
            Ok(s) => {
                if wanted(9) {
                    results.push((9, c9(&s)));
                }
                if wanted(10) {
                    results.push((10, c10(&s)));
                }
            }
            Err(e) => {
                for n in [9, 10].into_iter().filter(|n| wanted(*n)) {
                    results.push((n, Err(format!("sweep failed: {e}"))));
                }
            }
        }
    }
    for (n, f) in [(11, c11 as fn() -> Outcome), (12, c12)] {
        if wanted(n) {
            results.push((n, f()));
        }
    }
    let mut failed = 0;
    for (n, r) in &results {
        match r {
            Ok(d) => println!("criterion {n:>2} PASS {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {n:>2} FAIL {d}");
            }
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
