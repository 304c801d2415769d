//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use locbeam::alignment::{calibrate_timing, exhaustive_align, location_aware_align, SlotContext};
use locbeam::array::{beam_coverage_m, steering_vector, uniform_codebook, ArrayConfig};
use locbeam::channel::{
    los_channel, max_peak_shift_deg, Impairments, SignalConfig, IMPAIRMENT_PHASE_BOUND_DEG,
};
use locbeam::positioning::{
    rms_position_error, simulate_ranges, trilaterate, AnchorSet, Position, PositionEstimate,
    RangingModel, DEFAULT_RANGING_SIGMA_M,
};
use locbeam::scenario::{
    run_misalignment_sweep, run_trace, staleness_instants, walk_points, Algorithm, ScenarioConfig,
};
use locbeam::Execution;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(started: Instant, limit: Duration, what: &str) -> Check {
    let took = started.elapsed();
    ensure(took < limit, format!("{what} took {:.2} s (limit {} s)", took.as_secs_f64(), limit.as_secs()))
}

fn p(x: f64, y: f64) -> Position {
    Position::new(x, y).unwrap()
}

fn exact(pos: Position) -> PositionEstimate {
    PositionEstimate {
        position: pos,
        residual_norm_m: 0.0,
    }
}

fn noiseless_config() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.signal.noise_power = Some(0.0);
    cfg
}

fn c1_measurement_counts() -> Check {
    let started = Instant::now();
    let cfg = ArrayConfig::default();
    let cb = uniform_codebook(-30.0, 30.0, 5.0).unwrap();
    let imp = Impairments::identity(cfg.num_elements());
    let sig = SignalConfig::new(1024, 1.0, 1e-9, 7).unwrap();
    let timing = Default::default();
    let rx = p(6.0, 1.0);
    let ch = los_channel(&cfg, Position::origin(), rx).unwrap();
    let ctx = SlotContext {
        array: &cfg,
        tx_pos: Position::origin(),
        channel: &ch,
        tx_codebook: &cb,
        rx_codebook: &cb,
        impairments: &imp,
        signal: &sig,
        timing: &timing,
        search_halfwidth: 1,
        stream_base: 0,
        exec: Execution::default(),
    };
    let ex = exhaustive_align(&ctx).unwrap().num_measurements;
    let la = location_aware_align(&ctx, &exact(rx)).unwrap().num_measurements;
    ensure(ex == 169 && la == 9, format!("exhaustive {ex}, location-aware {la}"))?;
    within(started, Duration::from_secs(1), "both searches")?;
    Ok(format!("exhaustive {ex}, location-aware {la}"))
}

fn c2_latency() -> Check {
    let t = calibrate_timing(9, 0.28, 169, 3.7).map_err(|e| e.to_string())?;
    let (d, c) = (t.dwell_per_measurement_s(), t.overhead_s());
    ensure(
        (d - 0.021_375).abs() < 1e-9 && (c - 0.087_625).abs() < 1e-9,
        format!("d = {d:.9}, c = {c:.9}"),
    )?;
    let s = ScenarioConfig::default().build().unwrap();
    let exec = Execution::default();
    let ex = run_trace(&s, Algorithm::Exhaustive, exec).unwrap();
    let la = run_trace(&s, Algorithm::LocationAware, exec).unwrap();
    let ex_bad = ex.iter().filter(|r| (r.elapsed_s - 3.7).abs() >= 1e-9).count();
    let la_bad = la.iter().filter(|r| (r.elapsed_s - 0.28).abs() >= 1e-9).count();
    ensure(
        ex_bad == 0 && la_bad == 0,
        format!("{ex_bad}/{} exhaustive and {la_bad}/{} location-aware slots off 3.7 / 0.28 s", ex.len(), la.len()),
    )?;
    Ok(format!(
        "d = {d:.7} s, c = {c:.7} s; slots report 3.7 s ({} cycles) and 0.28 s ({} cycles)",
        ex.len(),
        la.len()
    ))
}

fn c3_coverage() -> Check {
    let near = beam_coverage_m(6.0, 8.0).unwrap();
    let far = beam_coverage_m(100.0, 1.6).unwrap();
    ensure(
        (0.83..=0.85).contains(&near) && (2.75..=2.85).contains(&far),
        format!("6 m @ 8° = {near:.4} m, 100 m @ 1.6° = {far:.4} m"),
    )
}

fn c4_misalignment() -> Check {
    let started = Instant::now();
    let s = noiseless_config().build().unwrap();
    if s.sweep_codebook.len() != 7 {
        return Err(format!("sweep codebook has {} beams", s.sweep_codebook.len()));
    }
    let distances: Vec<f64> = (1..=8).map(f64::from).collect();
    let rows = run_misalignment_sweep(&s, &distances, 3, Execution::default()).unwrap();
    for d in &distances {
        let means: Vec<f64> = rows
            .iter()
            .filter(|r| r.distance_m == *d)
            .map(|r| r.mean_rss_db.expect("every degree reachable"))
            .collect();
        let decreasing = means.windows(2).all(|w| w[1] < w[0]);
        let peak = means[1..].iter().all(|m| *m < means[0]);
        if !(decreasing && peak) {
            return Err(format!("{d} m: means {means:?}"));
        }
    }
    within(started, Duration::from_secs(10), "sweep")?;
    Ok(format!("strictly decreasing over degrees 0..3 at {} distances", distances.len()))
}

fn c5_oracle_equivalence() -> Check {
    let started = Instant::now();
    let cfg = ArrayConfig::default();
    let cb = uniform_codebook(-30.0, 30.0, 5.0).unwrap();
    let imp = Impairments::identity(cfg.num_elements());
    let sig = SignalConfig::new(1024, 1.0, 0.0, 0).unwrap();
    let timing = Default::default();
    let tan30 = 30f64.to_radians().tan();
    let mut positions = Vec::new();
    for xi in 40..=80 {
        let x = f64::from(xi) / 10.0;
        let ymax = (x * tan30 / 0.1 + 1e-9).floor() as i32;
        for yi in -ymax..=ymax {
            positions.push(p(x, f64::from(yi) / 10.0));
        }
    }
    let (mut in_window, mut agree) = (0usize, 0usize);
    for &rx in &positions {
        let ch = los_channel(&cfg, Position::origin(), rx).unwrap();
        let ctx = SlotContext {
            array: &cfg,
            tx_pos: Position::origin(),
            channel: &ch,
            tx_codebook: &cb,
            rx_codebook: &cb,
            impairments: &imp,
            signal: &sig,
            timing: &timing,
            search_halfwidth: 1,
            stream_base: 0,
            exec: Execution::Sequential,
        };
        let ex = exhaustive_align(&ctx).unwrap();
        let la = location_aware_align(&ctx, &exact(rx)).unwrap();
        let window = la.rss_table.iter().any(|m| m.tx_index == ex.chosen.tx_index && m.rx_index == ex.chosen.rx_index);
        if window {
            in_window += 1;
            agree += usize::from(la.chosen == ex.chosen);
        }
    }
    let n = positions.len();
    let coverage = in_window as f64 / n as f64;
    ensure(
        agree == in_window && coverage >= 0.99,
        format!("{n} positions, winner in window at {in_window} ({:.2}%), identical choice at {agree}/{in_window}", 100.0 * coverage),
    )?;
    within(started, Duration::from_secs(120), "grid")?;
    Ok(format!("{n} positions, winner in window {:.2}%, identical choice {agree}/{in_window}", 100.0 * coverage))
}

fn c6_positioning() -> Check {
    let anchors = AnchorSet::room_corners();
    let s = ScenarioConfig::default().build().unwrap();
    let points = walk_points(&s, 101);
    let model = RangingModel::new(DEFAULT_RANGING_SIGMA_M, 0xACCE).unwrap();
    let rms = rms_position_error(&anchors, &points, &model, 10_000, Execution::default()).unwrap();
    ensure((0.064..=0.08).contains(&rms), format!("RMS {rms:.5} m at σ = {DEFAULT_RANGING_SIGMA_M} m"))?;
    let clean = RangingModel::new(0.0, 0).unwrap();
    let mut worst = 0.0f64;
    for xi in 0..=12 {
        for yi in -9..=9 {
            let truth = p(f64::from(xi) * 0.5, f64::from(yi) * 0.5);
            let est = trilaterate(&anchors, &simulate_ranges(truth, &anchors, &clean, 0)).unwrap();
            worst = worst.max(est.position.distance_to(truth));
        }
    }
    ensure(worst <= 1e-9, format!("zero-noise error {worst:.3e} m"))?;
    Ok(format!("RMS {rms:.5} m at σ = {DEFAULT_RANGING_SIGMA_M} m; zero-noise error {worst:.1e} m"))
}

fn c7_tracking() -> Check {
    let started = Instant::now();
    let s = ScenarioConfig::default().build().unwrap();
    let exec = Execution::default();
    let ex = run_trace(&s, Algorithm::Exhaustive, exec).unwrap();
    let la = run_trace(&s, Algorithm::LocationAware, exec).unwrap();
    let off: Vec<usize> = la
        .iter()
        .filter(|r| r.chosen.rx_index.abs_diff(r.true_pair.rx_index) > 1)
        .map(|r| r.k)
        .collect();
    ensure(off.is_empty(), format!("location-aware slots more than 1 index off: {off:?}"))?;
    let stale = staleness_instants(&s, &ex, &la, 0.01).unwrap();
    ensure(!stale.is_empty(), "no instant with exhaustive ≥ 2 stale and location-aware ≤ 1".into())?;
    within(started, Duration::from_secs(30), "tracking")?;
    Ok(format!(
        "{} location-aware slots within 1 index; {} stale instants from {:.2} s",
        la.len(),
        stale.len(),
        stale[0]
    ))
}

fn sha256_hex(path: &Path) -> String {
    Sha256::digest(fs::read(path).unwrap()).iter().map(|b| format!("{b:02x}")).collect()
}

fn c8_determinism() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("scenario.toml");
    fs::write(&config, ScenarioConfig::default().to_toml_string()).unwrap();
    let mut hashes = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        for cmd in ["run", "sweep"] {
            let status = Command::new(env!("CARGO_BIN_EXE_locbeam"))
                .arg(cmd)
                .arg(&config)
                .arg("--out-dir")
                .arg(&out)
                .output()
                .unwrap()
                .status;
            ensure(status.success(), format!("`{cmd}` exited with {status}"))?;
        }
        hashes.push((sha256_hex(&out.join("tracking.csv")), sha256_hex(&out.join("misalignment.csv"))));
    }
    ensure(
        hashes[0] == hashes[1],
        format!("hashes differ: {:?} vs {:?}", hashes[0], hashes[1]),
    )?;
    Ok(format!("tracking {}…, misalignment {}…", &hashes[0].0[..12], &hashes[0].1[..12]))
}

fn c9_invariants() -> Check {
    let cfg = ArrayConfig::default();
    let m = cfg.num_elements() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst_norm = 0.0f64;
    for _ in 0..1000 {
        let theta = rng.random_range(-90.0..=90.0);
        let v = steering_vector(&cfg, theta).unwrap();
        worst_norm = worst_norm.max((v.norm_sqr() - m).abs() / m);
    }
    ensure(worst_norm < 1e-12, format!("‖a‖² relative error {worst_norm:.2e}"))?;

    let mut worst_ratio = 0.0f64;
    for _ in 0..100 {
        let rx = p(rng.random_range(0.5..8.0), rng.random_range(-4.5..4.5));
        let sv = los_channel(&cfg, Position::origin(), rx).unwrap().singular_values();
        worst_ratio = worst_ratio.max(sv[1] / sv[0]);
    }
    ensure(worst_ratio < 1e-10, format!("σ₂/σ₁ up to {worst_ratio:.2e}"))?;

    let angles = uniform_codebook(-30.0, 30.0, 5.0).unwrap().angles_deg().to_vec();
    let shift = max_peak_shift_deg(&cfg, IMPAIRMENT_PHASE_BOUND_DEG, &angles, 1000, 0xC0FFEE, Execution::default())
        .unwrap();
    ensure(shift <= 5.0, format!("peak shift up to {shift:.3}° at {IMPAIRMENT_PHASE_BOUND_DEG}° bound"))?;
    Ok(format!(
        "‖a‖² rel err {worst_norm:.1e}, σ₂/σ₁ ≤ {worst_ratio:.1e}, peak shift ≤ {shift:.3}° at ±{IMPAIRMENT_PHASE_BOUND_DEG}°"
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("measurement counts", c1_measurement_counts),
        ("latency model", c2_latency),
        ("beam coverage", c3_coverage),
        ("misalignment monotonicity", c4_misalignment),
        ("oracle equivalence", c5_oracle_equivalence),
        ("positioning calibration", c6_positioning),
        ("tracking trace", c7_tracking),
        ("determinism", c8_determinism),
        ("numerical invariants", c9_invariants),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let (tag, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "criterion {}: {tag} {name} ({:.2} s): {detail}",
            i + 1,
            started.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
