//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any failed. Pass criterion numbers as arguments to run a
//! subset, e.g. `cargo test -p ddtf-cli --test acceptance -- 4 6`.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use ddtf_cli::BenchRow;
use ddtf_core::denoiser::{self, initial_bank};
use ddtf_core::diagnostics::subspace_split;
use ddtf_core::filterbank::{dct_basis, subselect_random};
use ddtf_core::imgcore::{add_awgn, extract_patches, read_pgm, write_pgm};
use ddtf_core::learner::{self, learn_full, update_coefficients, update_filters};
use ddtf_core::linops::hard_threshold;
use ddtf_core::transform::{analyze, synthesize};
use ddtf_core::{DenoiseParams, FilterBank, Image, LearnParams, Matrix, NoiseParams};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Check = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Check);

/// Cumulative energy fraction at index 30 measured by the independent
/// learner in `tests/oracles/spectrum_floor.py` was 0.999999994336; the
/// floor sits 1e-7 below it.
const SPECTRUM_FLOOR: f64 = 0.9999999;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| r.sample(StandardNormal))
}

/// Orthonormal columns from QR of a Gaussian matrix, signs fixed so `R` has
/// a nonnegative diagonal.
fn qf(a: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = a.clone().qr();
    let (mut q, rr) = (qr.q(), qr.r());
    for j in 0..q.ncols() {
        if rr[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn to_core(m: &DMatrix<f64>) -> Matrix {
    Matrix::from_col_major(m.nrows(), m.ncols(), m.as_slice().to_vec()).unwrap()
}

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_column_slice(m.rows(), m.cols(), m.as_slice())
}

fn within(start: Instant, budget: Duration, detail: String) -> Check {
    let spent = start.elapsed();
    if spent <= budget {
        Ok(detail)
    } else {
        Err(format!(
            "{detail}; took {:.1} s, budget {} s",
            spent.as_secs_f64(),
            budget.as_secs()
        ))
    }
}

fn tight_frame_identity() -> Check {
    let start = Instant::now();
    let bank = dct_basis(8);
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (w, h) = (r.random_range(16..=64), r.random_range(16..=64));
        let img = Image::from_fn(w, h, |_, _| r.random_range(0.0..255.0)).unwrap();
        let back = synthesize(&analyze(&img, &bank).map_err(|e| e.to_string())?, &bank)
            .map_err(|e| e.to_string())?;
        for (a, b) in back.pixels().iter().zip(img.pixels()) {
            worst = worst.max((a - b).abs());
        }
    }
    let detail = format!("max error {worst:.2e} over 100 images");
    if worst > 1e-9 * 255.0 {
        return Err(detail);
    }
    within(start, Duration::from_secs(10), detail)
}

fn trace_of(d: &DMatrix<f64>, m: &DMatrix<f64>) -> f64 {
    d.component_mul(m).sum()
}

/// Ascent on `Tr(QᵀM)` over the Stiefel manifold: a step along the
/// Riemannian gradient `M − Q·sym(QᵀM)`, retracted with QR, until the
/// gradient vanishes. Best of three starts.
fn projected_gradient(m: &DMatrix<f64>, r: &mut ChaCha8Rng) -> f64 {
    let eta = 1.0 / m.norm();
    let mut best = f64::NEG_INFINITY;
    for _ in 0..3 {
        let mut q = qf(&gaussian(r, m.nrows(), m.ncols()));
        for _ in 0..200_000 {
            let qtm = q.transpose() * m;
            let grad = m - &q * ((&qtm + qtm.transpose()) * 0.5);
            if grad.norm() < 1e-13 * m.norm() {
                break;
            }
            q = qf(&(&q + grad * eta));
        }
        best = best.max(trace_of(&q, m));
    }
    best
}

fn procrustes_optimality() -> Check {
    let start = Instant::now();
    let (p, s, n) = (4, 5, 60);
    let mut r = rng(2);
    let (mut worst_gap, mut closest) = (f64::NEG_INFINITY, f64::INFINITY);
    for trial in 0..50 {
        let g = gaussian(&mut r, p * p, n) * 30.0;
        let dense = gaussian(&mut r, s, n) * 30.0;
        let v = hard_threshold(&to_core(&dense), 25.0).unwrap();
        let prev = FilterBank::new(p, to_core(&qf(&gaussian(&mut r, p * p, s)))).unwrap();
        let bank = update_filters(&to_core(&g), &v, 0.0, &prev).map_err(|e| e.to_string())?;
        let m = &g * to_na(&v).transpose();
        let ours = trace_of(&to_na(bank.atoms()), &m);

        for k in 0..1000 {
            let q = qf(&gaussian(&mut r, p * p, s));
            let theirs = trace_of(&q, &m);
            if theirs > ours {
                return Err(format!(
                    "pair {trial}: random competitor {k} scores {theirs} > {ours}"
                ));
            }
        }
        let oracle = projected_gradient(&m, &mut r);
        let gap = (oracle - ours) / oracle.abs();
        worst_gap = worst_gap.max(gap);
        closest = closest.min(gap.abs());
        if gap > 1e-6 {
            return Err(format!(
                "pair {trial}: ascent oracle {oracle} beats {ours} (relative {gap:.2e})"
            ));
        }
    }
    within(
        start,
        Duration::from_secs(30),
        format!(
            "50 pairs beat 1000 competitors each; oracle minus update, relative: at most {worst_gap:.2e}, nearest {closest:.2e}"
        ),
    )
}

fn natural_crops() -> Vec<(&'static str, Image)> {
    let load =
        |name: &str, x: usize, y: usize| read_pgm(data(name)).unwrap().crop(x, y, 64, 64).unwrap();
    vec![
        ("astronaut", load("astronaut.pgm", 190, 80)),
        ("camera", load("camera.pgm", 200, 120)),
        ("grass", load("grass.pgm", 100, 100)),
    ]
}

fn objective_monotonicity() -> Check {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut runs = 0;
    for (name, clean) in natural_crops() {
        for sigma in [25.0, 40.0] {
            let noisy = add_awgn(&clean, &NoiseParams { sigma, seed: 3 });
            let patches = extract_patches(&noisy, 8, 1).map_err(|e| e.to_string())?;
            for params in [DenoiseParams::new(sigma), DenoiseParams::ddtf(sigma, 8)] {
                let init = initial_bank(&patches, &params).map_err(|e| e.to_string())?;
                let lambda = params.learn.lambda;
                let g = patches.matrix();
                let v0 = hard_threshold(&init.atoms().tr_matmul(g).unwrap(), lambda).unwrap();
                let mut objectives = vec![learner::objective(g, &v0, &init, lambda).unwrap()];
                let outcome =
                    learn_full(&patches, &init, &params.learn).map_err(|e| e.to_string())?;
                objectives.extend(outcome.trace.objectives());
                if objectives.len() != 26 {
                    return Err(format!(
                        "{name}: expected 25 iterations, got {}",
                        objectives.len() - 1
                    ));
                }
                let slack = 1e-9 * objectives[0];
                for (k, w) in objectives.windows(2).enumerate() {
                    let rise = w[1] - w[0];
                    worst = worst.max(rise / objectives[0]);
                    if rise > slack {
                        return Err(format!(
                            "{name} sigma {sigma} s {}: objective rose by {rise:e} at iteration {}",
                            params.learn.s,
                            k + 1
                        ));
                    }
                }
                runs += 1;
            }
        }
    }
    within(
        start,
        Duration::from_secs(60),
        format!("{runs} runs non-increasing; worst relative rise {worst:.2e}"),
    )
}

fn threshold_exactness() -> Check {
    let start = Instant::now();
    let mut r = rng(4);
    for trial in 0..1000 {
        let d = qf(&gaussian(&mut r, 4, 3));
        let g = gaussian(&mut r, 4, 4) * 2.0;
        let lambda: f64 = r.random_range(0.1..2.5);
        let bank = FilterBank::new(2, to_core(&d)).unwrap();
        let v = to_na(
            &update_coefficients(&to_core(&g), &bank, lambda, 0.0, None)
                .map_err(|e| e.to_string())?,
        );

        let c = d.transpose() * &g;
        let (mut best_cost, mut best_mask) = (f64::INFINITY, 0u32);
        for mask in 0u32..(1 << 12) {
            let mut cost = 0.0;
            for k in 0..12 {
                if mask & (1 << k) != 0 {
                    cost += lambda * lambda;
                } else {
                    cost += c[k] * c[k];
                }
            }
            if cost < best_cost {
                (best_cost, best_mask) = (cost, mask);
            }
        }
        for k in 0..12 {
            let expected = if best_mask & (1 << k) != 0 { c[k] } else { 0.0 };
            if (v[k] == 0.0) != (expected == 0.0) || (v[k] - expected).abs() > 1e-12 {
                return Err(format!(
                    "instance {trial}, entry {k}: got {}, minimizer has {expected}",
                    v[k]
                ));
            }
        }
    }
    within(
        start,
        Duration::from_secs(5),
        "1000 instances match exhaustive 2^12 search".into(),
    )
}

fn proximal_reduction() -> Check {
    let (_, clean) = natural_crops().remove(0);
    let noisy = add_awgn(
        &clean,
        &NoiseParams {
            sigma: 25.0,
            seed: 5,
        },
    );
    let patches = extract_patches(&noisy, 8, 1).map_err(|e| e.to_string())?;
    let init = subselect_random(&dct_basis(8), 30, 5).unwrap();
    let base_params = LearnParams::new(8, 30, 25.0);
    let g = patches.matrix();

    // Plain alternating steps, written out independently of the learner loop.
    let mut bank = init.clone();
    let mut v = Matrix::zeros(0, 0);
    for _ in 0..base_params.iters {
        v = update_coefficients(g, &bank, base_params.lambda, 0.0, None)
            .map_err(|e| e.to_string())?;
        bank = update_filters(g, &v, 0.0, &bank).map_err(|e| e.to_string())?;
    }

    let zero = learn_full(&patches, &init, &base_params).map_err(|e| e.to_string())?;
    let bits = |m: &Matrix| m.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    if bits(zero.bank.atoms()) != bits(bank.atoms()) || bits(&zero.coefficients) != bits(&v) {
        return Err("zero proximal weights differ from the plain steps".into());
    }

    let mut tiny_params = base_params.clone();
    tiny_params.prox_lambda = 1e-15;
    tiny_params.prox_mu = 1e-15;
    let tiny = learn_full(&patches, &init, &tiny_params).map_err(|e| e.to_string())?;
    let drift = tiny.bank.atoms().sub(zero.bank.atoms()).unwrap().max_abs();
    let detail = format!("zero weights bit-identical; weights 1e-15 move atoms by {drift:.2e}");
    if drift <= 1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn scaling_invariance() -> Check {
    let mut r = rng(6);
    let p = 8;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let g = to_core(&(gaussian(&mut r, p * p, 400) * 40.0));
        let prev = FilterBank::new(p, to_core(&qf(&gaussian(&mut r, p * p, 30)))).unwrap();
        let v = update_coefficients(&g, &prev, 60.0, 0.0, None).map_err(|e| e.to_string())?;
        let reference = update_filters(&g, &v, 0.0, &prev).map_err(|e| e.to_string())?;
        for c in [0.01, 1.0 / p as f64, 100.0] {
            let scaled = update_filters(&g.scaled(c), &v, 0.0, &prev).map_err(|e| e.to_string())?;
            worst = worst.max(scaled.atoms().sub(reference.atoms()).unwrap().max_abs());
        }
    }
    let detail = format!("max atom change {worst:.2e} over 20 pairs and c in {{0.01, 1/8, 100}}");
    if worst <= 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// The 18-cell benchmark grid, run once through the binary and shared by the
/// reproduction and harness-shape criteria.
struct GridRun {
    exit_ok: bool,
    header: String,
    rows: Vec<BenchRow>,
}

fn grid() -> &'static Result<GridRun, String> {
    static GRID: OnceLock<Result<GridRun, String>> = OnceLock::new();
    GRID.get_or_init(|| {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let out = dir.path().join("grid.csv");
        let config = serde_json::json!({
            "images": [data("astronaut.pgm"), data("camera.pgm")],
            "sigmas": [30.0, 40.0, 50.0],
            "methods": [
                {"method": "ddtf", "p": 8},
                {"method": "alg1", "p": 8, "s": 20, "init": "signal"},
                {"method": "alg1", "p": 8, "s": 30, "init": "signal"},
            ],
            "iters": 25,
            "seed": 0,
            "out": out,
        });
        let config_path = dir.path().join("grid.json");
        std::fs::write(&config_path, config.to_string()).map_err(|e| e.to_string())?;
        let jobs = std::thread::available_parallelism().map_or(1, |n| n.get().min(6));
        let status = Command::new(env!("CARGO_BIN_EXE_ddtf"))
            .arg("bench")
            .arg(&config_path)
            .args(["--jobs", &jobs.to_string()])
            .status()
            .map_err(|e| e.to_string())?;
        let text = std::fs::read_to_string(&out).map_err(|e| e.to_string())?;
        let header = text.lines().next().unwrap_or_default().to_string();
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let rows = reader
            .deserialize()
            .collect::<Result<Vec<BenchRow>, _>>()
            .map_err(|e| e.to_string())?;
        Ok(GridRun {
            exit_ok: status.success(),
            header,
            rows,
        })
    })
}

fn psnr_reproduction() -> Check {
    if let Ok(dir) = std::env::var("DDTF_REFERENCE_IMAGES") {
        return reference_psnr(Path::new(&dir));
    }
    let run = grid().as_ref().map_err(Clone::clone)?;
    let find = |image: &str, sigma: f64, method: &str, s: usize| {
        run.rows
            .iter()
            .find(|r| r.image == image && r.sigma == sigma && r.method == method && r.s == s)
            .and_then(|r| {
                r.psnr_denoised
                    .map(|db| (db, r.seconds.unwrap_or(f64::INFINITY)))
            })
            .ok_or_else(|| format!("no successful row for {image} sigma {sigma} {method} s={s}"))
    };
    let mut notes = Vec::new();
    let mut failures = Vec::new();
    for image in ["astronaut", "camera"] {
        for (sigma, margin) in [(30.0, -0.1), (50.0, 0.1)] {
            let (ddtf, t_ddtf) = find(image, sigma, "ddtf", 64)?;
            let (alg1, t_alg1) = find(image, sigma, "alg1", 30)?;
            let gain = alg1 - ddtf;
            notes.push(format!("{image} sigma {sigma}: {gain:+.2} dB"));
            if gain < margin {
                failures.push(format!(
                    "{image} sigma {sigma}: Alg1(30) {alg1:.2} vs DDTF {ddtf:.2}"
                ));
            }
            if t_ddtf.max(t_alg1) > 300.0 {
                failures.push(format!("{image} sigma {sigma}: run exceeded 5 min"));
            }
        }
    }
    let detail = format!(
        "stand-in images, relative claim; Alg1(30) minus DDTF: {}",
        notes.join(", ")
    );
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", failures.join("; ")))
    }
}

/// Absolute PSNR on the historical 512×512 images, when a directory holding
/// `lena.pgm` and `barbara.pgm` is supplied.
fn reference_psnr(dir: &Path) -> Check {
    let cases = [
        ("lena.pgm", 30.0, DenoiseParams::new(30.0), 30.59),
        ("lena.pgm", 30.0, DenoiseParams::ddtf(30.0, 8), 30.31),
        ("barbara.pgm", 40.0, DenoiseParams::new(40.0), 27.15),
    ];
    let mut notes = Vec::new();
    let mut ok = true;
    for (file, sigma, params, expected) in cases {
        let start = Instant::now();
        let clean = read_pgm(dir.join(file)).map_err(|e| e.to_string())?;
        let noisy = add_awgn(&clean, &NoiseParams { sigma, seed: 0 });
        let (_, report) =
            denoiser::run_pipeline(&noisy, Some(&clean), &params).map_err(|e| e.to_string())?;
        let db = report.psnr_denoised.unwrap_or(f64::NAN);
        ok &= (db - expected).abs() <= 0.5 && start.elapsed() <= Duration::from_secs(300);
        notes.push(format!(
            "{file} sigma {sigma} s={}: {db:.2} dB (reference {expected})",
            params.learn.s
        ));
    }
    let detail = notes.join(", ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn spectrum_decay() -> Check {
    let clean = read_pgm(data("brick.pgm"))
        .map_err(|e| e.to_string())?
        .crop(0, 0, 256, 256)
        .unwrap();
    let noisy = add_awgn(
        &clean,
        &NoiseParams {
            sigma: 25.0,
            seed: 0,
        },
    );
    let patches = extract_patches(&noisy, 8, 1).map_err(|e| e.to_string())?;
    let params = LearnParams::new(8, 64, 25.0);
    let outcome = learn_full(&patches, &dct_basis(8), &params).map_err(|e| e.to_string())?;
    let (_, _, spectrum) =
        subspace_split(patches.matrix(), &outcome.coefficients, 30).map_err(|e| e.to_string())?;
    let energy = spectrum.energy_at(30);
    let detail = format!("energy at 30 of 64 is {energy:.12}, floor {SPECTRUM_FLOOR}");
    if energy > SPECTRUM_FLOOR {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn strip_wall_clock(value: &mut serde_json::Value) {
    if let Some(map) = value.as_object_mut() {
        map.remove("timings");
        map.remove("seconds");
        map.values_mut().for_each(strip_wall_clock);
    } else if let Some(items) = value.as_array_mut() {
        items.iter_mut().for_each(strip_wall_clock);
    }
}

fn pipeline_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let clean = read_pgm(data("camera.pgm"))
        .map_err(|e| e.to_string())?
        .crop(150, 100, 128, 128)
        .unwrap();
    let noisy = add_awgn(
        &clean,
        &NoiseParams {
            sigma: 30.0,
            seed: 9,
        },
    );
    let (clean_path, noisy_path) = (dir.path().join("clean.pgm"), dir.path().join("noisy.pgm"));
    write_pgm(&clean, &clean_path).unwrap();
    write_pgm(&noisy, &noisy_path).unwrap();

    let mut outputs = Vec::new();
    for run in 0..2 {
        let (out, report) = (
            dir.path().join(format!("out{run}.pgm")),
            dir.path().join(format!("r{run}.json")),
        );
        let status = Command::new(env!("CARGO_BIN_EXE_ddtf"))
            .arg("denoise")
            .arg("--input")
            .arg(&noisy_path)
            .arg("--clean")
            .arg(&clean_path)
            .args(["--sigma", "30", "--seed", "7", "--init", "dct"])
            .arg("--output")
            .arg(&out)
            .arg("--report")
            .arg(&report)
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("run {run} exited with {status}"));
        }
        let image = std::fs::read(&out).map_err(|e| e.to_string())?;
        let mut json: serde_json::Value =
            serde_json::from_slice(&std::fs::read(&report).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
        strip_wall_clock(&mut json);
        outputs.push((image, json));
    }
    if outputs[0].0 != outputs[1].0 {
        return Err("output PGMs differ".into());
    }
    if outputs[0].1 != outputs[1].1 {
        return Err("reports differ outside wall-clock fields".into());
    }
    Ok(format!(
        "two runs: identical {}-byte PGM and report",
        outputs[0].0.len()
    ))
}

fn bench_shape() -> Check {
    let run = grid().as_ref().map_err(Clone::clone)?;
    let expected = "image,sigma,method,p,s,init,psnr_noisy,psnr_denoised,seconds,status";
    if run.header != expected {
        return Err(format!("header {:?}", run.header));
    }
    let bad: Vec<String> = run
        .rows
        .iter()
        .filter(|r| r.status != "ok")
        .map(|r| format!("{} {} {}: {}", r.image, r.sigma, r.method, r.status))
        .collect();
    let detail = format!("{} rows, {} not ok", run.rows.len(), bad.len());
    if run.rows.len() == 18 && bad.is_empty() && run.exit_ok {
        Ok(detail)
    } else {
        Err(format!("{detail} {bad:?}"))
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "tight-frame identity", tight_frame_identity),
        (2, "Procrustes update optimality", procrustes_optimality),
        (3, "objective monotonicity", objective_monotonicity),
        (4, "hard-threshold exactness", threshold_exactness),
        (5, "proximal reduction", proximal_reduction),
        (6, "scaling invariance", scaling_invariance),
        (7, "PSNR reproduction", psnr_reproduction),
        (8, "spectrum decay", spectrum_decay),
        (9, "pipeline determinism", pipeline_determinism),
        (10, "bench harness shape", bench_shape),
    ];
    let wanted: BTreeSet<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();

    let mut failed = 0;
    for (id, name, check) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {id:>2} {name}: {detail} ({secs:.1} s)"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {id:>2} {name}: {detail} ({secs:.1} s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
