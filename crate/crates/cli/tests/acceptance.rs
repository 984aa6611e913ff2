//! Acceptance checks, one line per criterion. Run with
//! `cargo test -p ehsa-cli --test acceptance`.

use std::f64::consts::TAU;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use ehsa_cli::pipeline::{control, run_identification};
use ehsa_cli::ExperimentConfig;
use ehsa_core::control::{
    find_critical_gain, nonlinear_gain, npid_step, ControllerState, CriticalGainOptions, NpidConfig,
    PidGains,
};
use ehsa_core::metrics::{best_fit, fpe, mse, rmse};
use ehsa_core::plant::{step_rk4, LinearTf, PlantParams, PlantState};
use ehsa_core::signals::{chirp, multisine, ChirpSpec, MultisineSpec};
use ehsa_core::sysid::{arx_fit, ArxOrders, Dataset, Detrend};
use ehsa_core::target::TfTarget;
use ehsa_core::TimeSeries;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::{num_complex::Complex, FftPlanner};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&configs_dir().join(name)).unwrap()
}

// 1 -------------------------------------------------------------------------

const A: [f64; 3] = [-1.5, 0.7, -0.1];
const B: [f64; 3] = [0.05, 0.03, 0.01];

/// `y(t) = -sum a_i y(t-i) + sum b_j u(t-nk-j+1) + e(t)`, zero initial conditions.
fn arx_generate(a: &[f64], b: &[f64], nk: usize, u: &[f64], e: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; u.len()];
    for t in 0..u.len() {
        let mut acc = e[t];
        for (i, ai) in a.iter().enumerate() {
            if t > i {
                acc -= ai * y[t - 1 - i];
            }
        }
        for (j, bj) in b.iter().enumerate() {
            if t >= nk + j {
                acc += bj * u[t - nk - j];
            }
        }
        y[t] = acc;
    }
    y
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

fn arx_recovery() -> Verdict {
    let n = 1000;
    let ts = 0.05;
    // 40 equal-amplitude tones up to just below Nyquist, Schroeder phases.
    let tones = 40;
    let u: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 * ts;
            (1..=tones)
                .map(|k| {
                    let phase = std::f64::consts::PI * (k * (k + 1)) as f64 / tones as f64;
                    (1.55 * k as f64 * t + phase).sin()
                })
                .sum()
        })
        .collect();
    let zeros = vec![0.0; n];
    let orders = ArxOrders::new(3, 3, 1);

    let start = Instant::now();
    let y = arx_generate(&A, &B, 1, &u, &zeros);
    let clean = arx_fit(&Dataset::from_columns(0.0, ts, u.clone(), y.clone()).unwrap(), orders, Detrend::None).unwrap();
    let clean_time = start.elapsed().as_secs_f64();

    // Equation-error noise, scaled so that its contribution to the output is
    // 40 dB below the noise-free output.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let e: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let at_output = arx_generate(&A, &[1.0], 0, &zeros, &e);
    let scale = rms(&y) / rms(&at_output) / 100.0;
    let e: Vec<f64> = e.iter().map(|v| v * scale).collect();
    let start = Instant::now();
    let y_noisy = arx_generate(&A, &B, 1, &u, &e);
    let noisy = arx_fit(&Dataset::from_columns(0.0, ts, u, y_noisy).unwrap(), orders, Detrend::None).unwrap();
    let noisy_time = start.elapsed().as_secs_f64();

    let max_err = |m: &ehsa_core::sysid::ArxModel| {
        m.a.iter()
            .zip(A)
            .chain(m.b.iter().zip(B))
            .map(|(g, w)| (g - w).abs())
            .fold(0.0, f64::max)
    };
    let (ec, en) = (max_err(&clean), max_err(&noisy));
    verdict(
        ec <= 1e-6 && en <= 1e-2 && clean_time < 1.0 && noisy_time < 1.0,
        format!(
            "max coefficient error {ec:.2e} noise-free, {en:.2e} at 40 dB; {clean_time:.3} s / {noisy_time:.3} s"
        ),
    )
}

// 2 -------------------------------------------------------------------------

fn fit_of(cfg: &ExperimentConfig) -> (f64, f64) {
    let start = Instant::now();
    let fit = run_identification(cfg).unwrap().identification.report.best_fit_percent;
    (fit, start.elapsed().as_secs_f64())
}

/// Same experiment with every excitation frequency ten times higher, recorded
/// at 10 ms and block-averaged to the model period.
fn out_of_band(mut cfg: ExperimentConfig) -> ExperimentConfig {
    let ex = cfg.excitation.as_mut().unwrap();
    ex.band_scale = Some(10.0);
    ex.dt = 0.01;
    cfg
}

fn pipeline_fits() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["chirp.toml", "multisine.toml"] {
        let cfg = load(name);
        let (fit, t) = fit_of(&cfg);
        let (fit10, t10) = fit_of(&out_of_band(cfg));
        pass &= fit >= 95.0 && fit10 < fit && t < 30.0 && t10 < 30.0;
        parts.push(format!(
            "{} {fit:.2}% ({t:.1} s), 10x band {fit10:.1}% ({t10:.1} s)",
            name.trim_end_matches(".toml")
        ));
    }
    verdict(pass, parts.join("; "))
}

// 3 -------------------------------------------------------------------------

fn metric_consistency() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for _ in 0..500 {
        let n = rng.random_range(2..300);
        let scale: f64 = 10f64.powf(rng.random_range(-6.0..6.0));
        let y: Vec<f64> = (0..n).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        let yh: Vec<f64> = y.iter().map(|v| v + scale * rng.random_range(-0.5..0.5)).collect();
        let y = TimeSeries::new(0.0, 0.05, y).unwrap();
        let yh = TimeSeries::new(0.0, 0.05, yh).unwrap();
        let m = mse(&y, &yh).unwrap();
        let r = rmse(&y, &yh).unwrap();
        let rel = (r * r - m).abs() / m;
        worst = worst.max(rel);
        pass &= rel <= 1e-12;
        pass &= fpe(m, n, 0).unwrap() == m;
        pass &= best_fit(&y, &y).unwrap() == 100.0;
    }
    verdict(pass, format!("500 random pairs, worst |rmse^2 - mse| / mse = {worst:.1e}"))
}

// 4 -------------------------------------------------------------------------

fn zero_crossings(x: &[f64], dt: f64) -> Vec<f64> {
    x.windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] * w[1] < 0.0)
        .map(|(i, w)| (i as f64 + w[0] / (w[0] - w[1])) * dt)
        .collect()
}

fn line_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

fn excitation_spectra() -> Verdict {
    let duration = 50.0;
    let spec = ChirpSpec::for_bandwidth(TAU, 9.0, duration, 1e-3).unwrap();
    let x = chirp(&spec).unwrap();
    let est: Vec<(f64, f64)> = zero_crossings(x.samples(), x.dt())
        .windows(2)
        .map(|w| (0.5 * (w[0] + w[1]), 0.5 / (w[1] - w[0])))
        .collect();
    // Half-period estimates near each end, extrapolated to t = 0 and t = T.
    let head: Vec<_> = est.iter().copied().filter(|p| p.0 < 0.3 * duration).collect();
    let tail: Vec<_> = est.iter().copied().filter(|p| p.0 > 0.9 * duration).collect();
    let (c0, s0) = line_fit(&head);
    let (c1, s1) = line_fit(&tail);
    let f_start = c0 + s0 * 0.0;
    let f_end = c1 + s1 * duration;
    let e0 = (f_start / spec.f0 - 1.0).abs();
    let e1 = (f_end / spec.f1 - 1.0).abs();

    let ms = MultisineSpec::for_bandwidth(TAU, 1.0, duration, 0.01).unwrap();
    let y = multisine(&ms).unwrap();
    let body = &y.samples()[..y.len() - 1];
    let n = body.len();
    let mut buf: Vec<Complex<f64>> = body.iter().map(|v| Complex::new(*v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mag: Vec<f64> = buf[..n / 2].iter().map(|c| c.norm()).collect();
    let top = mag.iter().cloned().fold(0.0, f64::max);
    let peaks: Vec<usize> = (1..mag.len() - 1)
        .filter(|&i| mag[i] > 1e-3 * top && mag[i] >= mag[i - 1] && mag[i] >= mag[i + 1])
        .collect();
    let bin_hz = 1.0 / (n as f64 * y.dt());
    let on_tones = peaks.len() == 3
        && peaks
            .iter()
            .zip(&ms.frequencies)
            .all(|(k, w)| (*k as f64 * bin_hz - w / TAU).abs() <= bin_hz);
    verdict(
        e0 <= 0.02 && e1 <= 0.02 && on_tones,
        format!(
            "chirp start {:.2}% / end {:.2}% off; multisine peaks at bins {peaks:?} ({bin_hz} Hz bins)",
            100.0 * e0,
            100.0 * e1
        ),
    )
}

// 5 -------------------------------------------------------------------------

/// Textbook discrete PID with the same discretisation as the controller.
struct ReferencePid {
    kp: f64,
    ki: f64,
    kd: f64,
    tau: f64,
    i: f64,
    e_prev: f64,
    f_prev: Option<f64>,
}

impl ReferencePid {
    fn step(&mut self, e: f64, dt: f64) -> f64 {
        let f_prev = self.f_prev.unwrap_or(e);
        let alpha = dt / (self.tau + dt);
        let f = (1.0 - alpha) * f_prev + alpha * e;
        let d = (f - f_prev) / dt;
        let i_new = self.i + dt * (self.e_prev + e) / 2.0;
        let mut v = self.kp * e + self.ki * i_new + self.kd * d;
        if (v > 10.0 && e > 0.0) || (v < -10.0 && e < 0.0) {
            v = self.kp * e + self.ki * self.i + self.kd * d;
        } else {
            self.i = i_new;
        }
        self.e_prev = e;
        self.f_prev = Some(f);
        v.clamp(-10.0, 10.0)
    }
}

fn gain_law() -> Verdict {
    let k = |e: f64| nonlinear_gain(e, 1.0, 3.0, 0.05);
    let e1 = 1f64.exp();
    let k20 = 4.0 - 3.0 * 2.0 / (e1 + 1.0 / e1);
    let d20 = (k(20.0) - k20).abs();
    let far = (k(1e4) - 4.0).abs().max((k(-1e4) - 4.0).abs());

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (kp, ki, kd) = (rng.random_range(0.0..5.0), rng.random_range(0.0..5.0), rng.random_range(0.0..1.0));
        let dt = rng.random_range(1e-3..0.1);
        let cfg = NpidConfig {
            gains: PidGains { kp, ki, kd },
            k1: 0.0,
            ..NpidConfig::default()
        };
        let mut reference = ReferencePid { kp, ki, kd, tau: 5.0 * dt, i: 0.0, e_prev: 0.0, f_prev: None };
        let mut state = ControllerState::default();
        for _ in 0..200 {
            let e = rng.random_range(-5.0..5.0);
            let u = npid_step(&mut state, e, dt, &cfg).unwrap().u;
            let v = reference.step(e, dt);
            worst = worst.max((u - v).abs() / v.abs().max(1.0));
        }
    }
    verdict(
        k(0.0) == 1.0 && far < 1e-12 && d20 <= 1e-9 && worst <= 1e-12,
        format!("k(0) = {}, |k(+-1e4) - 4| = {far:.1e}, |k(20) - ref| = {d20:.1e}, k1 = 0 vs PID {worst:.1e}", k(0.0)),
    )
}

// 6 -------------------------------------------------------------------------

fn ziegler_nichols_oracle() -> Verdict {
    let start = Instant::now();
    let tf = LinearTf::new(vec![1.0], vec![1.0, 3.0, 2.0, 0.0]).unwrap();
    let mut target = TfTarget::new(&tf, 1e-3).unwrap();
    let cg = find_critical_gain(&mut target, &CriticalGainOptions::new(0.5, 50.0, 0.01, 120.0)).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let tcr = TAU / 2f64.sqrt();
    let (ek, et) = ((cg.kcr / 6.0 - 1.0).abs(), (cg.tcr / tcr - 1.0).abs());
    verdict(
        ek <= 0.05 && et <= 0.05 && secs < 10.0,
        format!(
            "Kcr {:.4} ({:.2}% off), Tcr {:.4} s ({:.2}% off), {secs:.2} s",
            cg.kcr,
            100.0 * ek,
            cg.tcr,
            100.0 * et
        ),
    )
}

// 7 -------------------------------------------------------------------------

fn closed_loop_agreement() -> Verdict {
    let (outcome, _) = control(&load("chirp.toml")).unwrap();
    let m: Vec<_> = outcome
        .runs
        .iter()
        .map(|r| r.metrics.clone().unwrap().unwrap())
        .collect();
    let (id, nl) = (&m[0], &m[1]);
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let d = [
        rel(id.rise_time, nl.rise_time),
        rel(id.settling_time, nl.settling_time),
        rel(id.overshoot, nl.overshoot),
    ];
    verdict(
        d.iter().all(|v| *v <= 0.25),
        format!(
            "identified Tr/Ts/OS {:.3}/{:.3}/{:.2}%, nonlinear {:.3}/{:.3}/{:.2}%, differences {:.1}/{:.1}/{:.1}%",
            id.rise_time,
            id.settling_time,
            id.overshoot,
            nl.rise_time,
            nl.settling_time,
            nl.overshoot,
            100.0 * d[0],
            100.0 * d[1],
            100.0 * d[2]
        ),
    )
}

// 8 -------------------------------------------------------------------------

fn integrator_order() -> Verdict {
    // Position 50 ms into a 5 V step, while the hydraulic transient still rings.
    let p = PlantParams::default();
    let endpoint = |h: f64| {
        let mut s = PlantState::rest(&p);
        for _ in 0..(0.05 / h).round() as usize {
            s = step_rk4(&s, 5.0, h, &p).unwrap();
        }
        s.position
    };
    let x: Vec<f64> = [1e-3, 5e-4, 2.5e-4].iter().map(|h| endpoint(*h)).collect();
    let ratio = (x[0] - x[1]).abs() / (x[1] - x[2]).abs();
    verdict(ratio >= 8.0, format!("error ratio {ratio:.2} for h = 1, 0.5, 0.25 ms"))
}

// 9 -------------------------------------------------------------------------

fn run_cli(command: &str, config: &Path, out: &Path) {
    let status = Command::new(env!("CARGO_BIN_EXE_ehsa"))
        .arg(command)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{command}: {}", String::from_utf8_lossy(&status.stderr));
}

fn determinism() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let mut compared = 0;
    let mut differing = Vec::new();
    for config in ["chirp.toml", "multisine.toml"] {
        for command in ["simulate", "identify", "validate", "control"] {
            let dirs: Vec<PathBuf> = (0..2)
                .map(|i| tmp.path().join(format!("{config}-{command}-{i}")))
                .collect();
            for d in &dirs {
                run_cli(command, &configs_dir().join(config), d);
            }
            let mut names: Vec<_> = std::fs::read_dir(&dirs[0])
                .unwrap()
                .map(|e| e.unwrap().file_name())
                .collect();
            names.sort();
            for name in names {
                let a = std::fs::read(dirs[0].join(&name)).unwrap();
                let b = std::fs::read(dirs[1].join(&name)).unwrap_or_default();
                compared += 1;
                if a != b {
                    differing.push(format!("{config} {command} {}", name.to_string_lossy()));
                }
            }
        }
    }
    verdict(
        differing.is_empty() && compared > 0,
        if differing.is_empty() {
            format!("{compared} artifacts byte-identical across two runs")
        } else {
            format!("differing: {}", differing.join(", "))
        },
    )
}

type Check = (u8, &'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let checks: [Check; 9] = [
        (1, "ARX(3,3,1) recovery", arx_recovery),
        (2, "pipeline fit levels", pipeline_fits),
        (3, "fit/MSE/FPE consistency", metric_consistency),
        (4, "chirp sweep and multisine spectrum", excitation_spectra),
        (5, "NPID gain law", gain_law),
        (6, "critical gain of 1/(s(s+1)(s+2))", ziegler_nichols_oracle),
        (7, "closed-loop agreement", closed_loop_agreement),
        (8, "RK4 order", integrator_order),
        (9, "determinism", determinism),
    ];
    let mut failed = 0;
    for (id, name, check) in checks {
        let v = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        if !v.pass {
            failed += 1;
        }
        println!(
            "criterion {id} {}: {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
