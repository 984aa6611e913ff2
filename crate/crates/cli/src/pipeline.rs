//! The four experiment commands.
//!
//! Each command computes all of its artifacts in memory and only then writes
//! them, so a failing run leaves no partial output behind.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ehsa_core::control::{
    find_critical_gain, simulate_closed_loop, ziegler_nichols, ClosedLoopRun, NpidConfig, ZnResult,
};
use ehsa_core::metrics::{rmse, transient_metrics, TransientMetrics};
use ehsa_core::plant::{simulate_trajectory, substeps_for, PlantParams, PlantState};
use ehsa_core::signals::{SignalParams, SignalRegistry};
use ehsa_core::sysid::{identify as fit_and_validate, order_search, ArxModel, Candidate, Dataset, Identification};
use ehsa_core::target::{ArxTarget, NonlinearPlantTarget, Target};
use ehsa_core::TimeSeries;

use crate::config::{ExperimentConfig, Gains, TuneOn};
use crate::error::{CliError, Result};
use crate::table::{fmt, read_numeric, sample_period, write_metrics, write_numeric};

pub const TRAJECTORY_HEADER: [&str; 6] = ["t", "u", "xp", "vp", "p1", "p2"];
pub const DATASET_HEADER: [&str; 3] = ["t", "u", "y"];
pub const SIGNAL_HEADER: [&str; 2] = ["t", "value"];
pub const CLOSED_LOOP_HEADER: [&str; 6] = ["t", "r", "y", "u", "e", "k"];

/// Named file contents produced by a command.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    files: Vec<(String, String)>,
}

impl Artifacts {
    fn add(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    /// Writes every file into `dir`, creating it if needed; returns the paths.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        self.files
            .iter()
            .map(|(name, contents)| {
                let path = dir.join(name);
                fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
                Ok(path)
            })
            .collect()
    }
}

/// Fills in the plant bandwidth when the signal has no explicit frequencies.
fn with_bandwidth(cfg: &ExperimentConfig, params: &PlantParams, mut spec: SignalParams) -> Result<SignalParams> {
    let explicit = (spec.f0.is_some() && spec.f1.is_some())
        || spec.frequencies.is_some()
        || spec.frequency.is_some();
    let needs = !matches!(spec.kind.as_str(), "step" | "staircase" | "zero");
    if spec.bandwidth.is_none() && !explicit && needs {
        spec.bandwidth = Some(cfg.bandwidth(params)?);
    }
    Ok(spec)
}

fn excitation_signal(cfg: &ExperimentConfig, params: &PlantParams) -> Result<TimeSeries> {
    let spec = cfg.excitation.clone().ok_or_else(|| CliError::Config("missing [excitation] section".into()))?;
    let spec = with_bandwidth(cfg, params, spec)?;
    Ok(SignalRegistry::builtin().generate(&spec)?)
}

fn signal_csv(x: &TimeSeries) -> String {
    write_numeric(
        &SIGNAL_HEADER,
        x.samples().iter().enumerate().map(|(i, v)| vec![x.time(i), *v]),
    )
}

/// `simulate`: open-loop response of the nonlinear plant to the excitation.
pub fn simulate(cfg: &ExperimentConfig) -> Result<Artifacts> {
    cfg.check_output_dir()?;
    let params = cfg.plant_params()?;
    let u = excitation_signal(cfg, &params)?;
    let states = simulate_trajectory(&u, &PlantState::rest(&params), &params, substeps_for(u.dt()))?;
    let mut out = Artifacts::default();
    out.add(
        "trajectory.csv",
        write_numeric(
            &TRAJECTORY_HEADER,
            states.iter().zip(u.samples()).enumerate().map(|(i, (s, ui))| {
                vec![u.time(i), *ui, s.position, s.velocity, s.p1, s.p2]
            }),
        ),
    );
    out.add("excitation.csv", signal_csv(&u));
    Ok(out)
}

/// Records the excitation response as an identification dataset:
/// `y` is the piston displacement from its starting position.
pub fn record_dataset(cfg: &ExperimentConfig, params: &PlantParams) -> Result<Dataset> {
    let u = excitation_signal(cfg, params)?;
    let rest = PlantState::rest(params);
    let states = simulate_trajectory(&u, &rest, params, substeps_for(u.dt()))?;
    let y = states.iter().map(|s| s.position - rest.position).collect();
    Ok(Dataset::new(u.clone(), u.with_samples(y)?)?)
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let cols = read_numeric(&text, &DATASET_HEADER, path)?;
    let dt = sample_period(&cols[0], path)?;
    let mut cols = cols.into_iter();
    let t = cols.next().unwrap_or_default();
    let u = cols.next().unwrap_or_default();
    let y = cols.next().unwrap_or_default();
    Ok(Dataset::from_columns(t[0], dt, u, y)?)
}

fn dataset_csv(d: &Dataset) -> String {
    write_numeric(
        &DATASET_HEADER,
        (0..d.len()).map(|i| vec![d.u().time(i), d.u().samples()[i], d.y().samples()[i]]),
    )
}

/// Result of the identification stage.
#[derive(Debug, Clone)]
pub struct Identified {
    /// Full dataset at the model sampling period.
    pub dataset: Dataset,
    pub identification: Identification,
    /// Ranked order-search candidates; empty for a single order.
    pub candidates: Vec<Candidate>,
}

pub fn run_identification(cfg: &ExperimentConfig) -> Result<Identified> {
    let section = &cfg.identification;
    let grid = section.grid()?;
    let split = section.split_spec()?;
    let options = section.options();
    let raw = match &section.dataset {
        Some(path) => read_dataset(&cfg.resolve(path))?,
        None => record_dataset(cfg, &cfg.plant_params()?)?,
    };
    let dataset = raw.resample(section.ts)?;
    let candidates = grid.candidates();
    let (orders, candidates) = if candidates.len() == 1 {
        (candidates[0], Vec::new())
    } else {
        let ranked = order_search(&dataset, split, &grid, options)?;
        (ranked[0].orders, ranked)
    };
    let identification = fit_and_validate(&dataset, split, orders, options)?;
    Ok(Identified {
        dataset,
        identification,
        candidates,
    })
}

fn identification_report(id: &Identification) -> String {
    let m = &id.model;
    let r = &id.report;
    let poly = |name: &str, c: &[f64], first: usize| {
        let mut s = format!("{name}(q) =");
        for (i, v) in c.iter().enumerate() {
            let sign = if v.is_sign_negative() { '-' } else { '+' };
            let _ = write!(s, " {sign} {} q^-{}", fmt(v.abs()), i + first);
        }
        s
    };
    let mut s = String::new();
    let _ = writeln!(s, "{} identified at Ts = {} s", m.orders, m.ts);
    let _ = writeln!(
        s,
        "estimation samples: {}, validation samples: {}",
        id.estimation.len(),
        id.validation.len()
    );
    let _ = writeln!(s, "best fit: {:.2} %", r.best_fit_percent);
    let _ = writeln!(s, "mse:      {:.6e}", r.mse);
    let _ = writeln!(s, "fpe:      {:.6e}", r.fpe);
    let _ = writeln!(s, "rmse:     {:.6e}", r.rmse);
    let _ = writeln!(s, "{}", poly("A", &m.a, 1).replacen("A(q) =", "A(q) = 1", 1));
    let _ = writeln!(s, "{}", poly("B", &m.b, m.orders.nk).replacen("= + ", "= ", 1));
    s
}

fn search_csv(candidates: &[Candidate]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let _ = w.write_record(["na", "nb", "nk", "best_fit_percent", "fpe", "status"]);
    for c in candidates {
        let o = c.orders;
        let (fit, fpe, status) = match &c.outcome {
            Ok((_, r)) => (fmt(r.best_fit_percent), fmt(r.fpe), "ok".to_string()),
            Err(e) => (String::new(), String::new(), e.to_string()),
        };
        let _ = w.write_record([o.na.to_string(), o.nb.to_string(), o.nk.to_string(), fit, fpe, status]);
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

fn add_identification(out: &mut Artifacts, id: &Identified) {
    let ident = &id.identification;
    out.add("dataset.csv", dataset_csv(&id.dataset));
    out.add("model.txt", ident.model.to_model_file());
    let o = ident.model.orders;
    let orders = [("na", o.na as f64), ("nb", o.nb as f64), ("nk", o.nk as f64)];
    out.add(
        "report.csv",
        write_metrics(orders.into_iter().chain(ident.report.rows())),
    );
    out.add("report.txt", identification_report(ident));
    if !id.candidates.is_empty() {
        out.add("search.csv", search_csv(&id.candidates));
    }
}

/// `identify`: dataset, ARX model and fit report.
pub fn identify(cfg: &ExperimentConfig) -> Result<(Identified, Artifacts)> {
    cfg.check_output_dir()?;
    let id = run_identification(cfg)?;
    let mut out = Artifacts::default();
    add_identification(&mut out, &id);
    Ok((id, out))
}

/// The configured model file, or a model identified from the config.
fn model_for(cfg: &ExperimentConfig) -> Result<(ArxModel, Option<Identified>)> {
    match &cfg.model {
        Some(section) => {
            let path = cfg.resolve(&section.file);
            let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            let model = ArxModel::parse(&text).map_err(|e| CliError::Data {
                path: path.clone(),
                detail: e.to_string(),
            })?;
            Ok((model, None))
        }
        None => {
            let id = run_identification(cfg)?;
            Ok((id.identification.model.clone(), Some(id)))
        }
    }
}

/// Drives `target` from its initial condition with a held input and records
/// the output at every input sample.
pub fn open_loop(target: &mut dyn Target, u: &TimeSeries) -> Result<TimeSeries> {
    target.reset();
    let mut y = Vec::with_capacity(u.len());
    y.push(target.output());
    for &ui in &u.samples()[..u.len() - 1] {
        y.push(target.advance(ui, u.dt())?);
    }
    Ok(u.with_samples(y)?)
}

/// One cell of the validation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub signal: String,
    pub amplitude: f64,
    pub frequency: f64,
    pub rmse: f64,
}

/// Output RMSE between `reference` and `candidate` for every test signal,
/// amplitude and frequency, in that nesting order.
pub fn validation_grid(
    reference: &mut dyn Target,
    candidate: &mut dyn Target,
    cfg: &ExperimentConfig,
    dt: f64,
) -> Result<Vec<GridCell>> {
    let v = &cfg.validation;
    if v.signals.is_empty() || v.amplitudes.is_empty() || v.frequencies.is_empty() {
        return Err(CliError::Config(
            "[validation] needs at least one signal, amplitude and frequency".into(),
        ));
    }
    let registry = SignalRegistry::builtin();
    if let Some(bad) = v.signals.iter().find(|s| registry.get(s).is_none()) {
        return Err(CliError::Config(format!("[validation] unknown signal `{bad}`")));
    }
    let mut cells = Vec::new();
    for signal in &v.signals {
        for &amplitude in &v.amplitudes {
            for &frequency in &v.frequencies {
                let mut spec = SignalParams::new(signal, v.duration, dt);
                spec.amplitude = Some(amplitude);
                spec.frequency = Some(frequency);
                let u = registry.generate(&spec)?;
                let y_ref = open_loop(reference, &u)?;
                let y = open_loop(candidate, &u)?;
                cells.push(GridCell {
                    signal: signal.clone(),
                    amplitude,
                    frequency,
                    rmse: rmse(&y_ref, &y)?,
                });
            }
        }
    }
    Ok(cells)
}

fn grid_csv(cells: &[GridCell]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let _ = w.write_record(["signal", "amplitude", "frequency_hz", "rmse"]);
    for c in cells {
        let _ = w.write_record([c.signal.clone(), fmt(c.amplitude), fmt(c.frequency), fmt(c.rmse)]);
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

/// `validate`: test-signal RMSE between the nonlinear plant and the model.
pub fn validate(cfg: &ExperimentConfig) -> Result<(Vec<GridCell>, Artifacts)> {
    cfg.check_output_dir()?;
    let params = cfg.plant_params()?;
    let (model, _) = model_for(cfg)?;
    let dt = model.ts;
    let mut plant = NonlinearPlantTarget::new(params)?;
    let mut arx = ArxTarget::new(model)?;
    let cells = validation_grid(&mut plant, &mut arx, cfg, dt)?;
    let mut out = Artifacts::default();
    out.add("validation.csv", grid_csv(&cells));
    Ok((cells, out))
}

const STEP_METRICS: [&str; 4] = ["rise_time", "settling_time", "overshoot_percent", "steady_state_error"];

/// Step-response metrics, or why they could not be computed.
pub type StepMetrics = std::result::Result<TransientMetrics, String>;

/// Closed-loop results for one target.
#[derive(Debug, Clone)]
pub struct TargetRun {
    pub name: String,
    pub run: ClosedLoopRun,
    /// Only for step references.
    pub metrics: Option<StepMetrics>,
}

#[derive(Debug, Clone)]
pub struct ControlOutcome {
    pub controller: NpidConfig,
    pub zn: Option<ZnResult>,
    pub reference_kind: String,
    /// Identified model first, then the nonlinear plant.
    pub runs: Vec<TargetRun>,
}

fn closed_loop_csv(run: &ClosedLoopRun) -> String {
    write_numeric(
        &CLOSED_LOOP_HEADER,
        (0..run.len()).map(|i| vec![run.time(i), run.r[i], run.y[i], run.u[i], run.e[i], run.k[i]]),
    )
}

fn control_report(outcome: &ControlOutcome) -> (String, String) {
    let g = outcome.controller.gains;
    let mut rows: Vec<(String, f64)> = vec![
        ("kp".into(), g.kp),
        ("ki".into(), g.ki),
        ("kd".into(), g.kd),
    ];
    if let Some(zn) = &outcome.zn {
        rows.push(("kcr".into(), zn.kcr));
        rows.push(("tcr".into(), zn.tcr));
    }
    let mut text = String::new();
    let c = &outcome.controller;
    let _ = writeln!(
        text,
        "NPID: kp = {:.6e}, ki = {:.6e}, kd = {:.6e}, k0 = {}, k1 = {}, k2 = {}",
        g.kp, g.ki, g.kd, c.k0, c.k1, c.k2
    );
    if let Some(zn) = &outcome.zn {
        let _ = writeln!(text, "Ziegler-Nichols: Kcr = {:.6e}, Tcr = {:.6} s", zn.kcr, zn.tcr);
    }
    let _ = writeln!(text, "reference: {}", outcome.reference_kind);
    let _ = writeln!(text);
    let step = outcome.runs.iter().any(|r| r.metrics.is_some());
    if step {
        let _ = writeln!(text, "{:<12}{:>12}{:>12}{:>12}", "target", "Tr [s]", "Ts [s]", "OS [%]");
    } else {
        let _ = writeln!(text, "{:<12}{:>16}", "target", "tracking RMSE");
    }
    for tr in &outcome.runs {
        match &tr.metrics {
            Some(Ok(m)) => {
                for (name, v) in m.rows() {
                    rows.push((format!("{}.{name}", tr.name), v));
                }
                let _ = writeln!(
                    text,
                    "{:<12}{:>12.4}{:>12.4}{:>12.2}",
                    tr.name, m.rise_time, m.settling_time, m.overshoot
                );
            }
            Some(Err(why)) => {
                for name in STEP_METRICS {
                    rows.push((format!("{}.{name}", tr.name), f64::NAN));
                }
                let _ = writeln!(text, "{:<12}  metrics undefined: {why}", tr.name);
            }
            None => {
                let _ = writeln!(text, "{:<12}{:>16.6e}", tr.name, tr.run.tracking_rmse());
            }
        }
        rows.push((format!("{}.tracking_rmse", tr.name), tr.run.tracking_rmse()));
    }
    let csv = write_metrics(rows.iter().map(|(n, v)| (n.as_str(), *v)));
    (csv, text)
}

/// `control`: one NPID on the identified model and on the nonlinear plant.
pub fn control(cfg: &ExperimentConfig) -> Result<(ControlOutcome, Artifacts)> {
    cfg.check_output_dir()?;
    let section = cfg.controller()?;
    section.gains.is_auto()?;
    let params = cfg.plant_params()?;
    let (model, identified) = model_for(cfg)?;
    let dt = model.ts;

    let reference_spec = with_bandwidth(cfg, &params, section.reference(dt))?;
    if (reference_spec.dt - dt).abs() > 1e-12 * dt {
        return Err(CliError::Config(format!(
            "reference dt {} s must equal the model sampling period {dt} s",
            reference_spec.dt
        )));
    }
    let reference = SignalRegistry::builtin().generate(&reference_spec)?;

    let mut arx = ArxTarget::new(model)?;
    let mut plant = NonlinearPlantTarget::new(params.clone())?;

    let (gains, zn) = match &section.gains {
        Gains::Manual(g) => (*g, None),
        Gains::Named(_) => {
            let opts = section.critical_gain_options(dt);
            let target: &mut dyn Target = match section.tune_on {
                TuneOn::Identified => &mut arx,
                TuneOn::Nonlinear => &mut plant,
            };
            let critical = find_critical_gain(target, &opts)?;
            let zn = ziegler_nichols(critical.kcr, critical.tcr)?;
            let [sp, si, sd] = section.scale;
            (zn.gains.scaled(sp, si, sd), Some(zn))
        }
    };
    let controller = section.npid(gains, params.input_limit)?;

    let step = reference_spec.kind == "step";
    let level = reference_spec.amplitude_or_default();
    let mut runs = Vec::new();
    for target in [&mut arx as &mut dyn Target, &mut plant] {
        let run = simulate_closed_loop(target, &controller, &reference)?;
        let metrics = if step {
            Some(transient_metrics(&run.output()?, level).map_err(|e| e.to_string()))
        } else {
            None
        };
        runs.push(TargetRun {
            name: target.name().to_string(),
            run,
            metrics,
        });
    }

    let outcome = ControlOutcome {
        controller,
        zn,
        reference_kind: reference_spec.kind.clone(),
        runs,
    };
    let mut out = Artifacts::default();
    if let Some(id) = &identified {
        add_identification(&mut out, id);
    }
    out.add("reference.csv", signal_csv(&reference));
    for tr in &outcome.runs {
        out.add(&format!("closed_loop_{}.csv", tr.name), closed_loop_csv(&tr.run));
    }
    let (csv, text) = control_report(&outcome);
    out.add("control_report.csv", csv);
    out.add("control_report.txt", text);
    Ok((outcome, out))
}
