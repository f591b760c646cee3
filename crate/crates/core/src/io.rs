//! Scenario files and the CSV/JSON artifacts.
//!
//! Scenario files are JSON. Boxes are lists of `[lo, hi]` pairs over the
//! constrained dimensions only; `x0` covers the full state. Unknown keys
//! are rejected and every problem is reported with its key path.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::controller::ControllerConfig;
use crate::error::{FieldError, Result, SttError};
use crate::geometry::{HyperRect, Interval};
use crate::metrics::BASELINE_STEEPNESS;
use crate::plant::{Dynamics, DisturbanceKind, DisturbanceModel, Integrator, OmniRobot, SimOptions, SimTrace};
use crate::scenario::{RasTask, TubeParams};
use crate::stt::Tube;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: Option<String>,
    pub task: TaskSection,
    #[serde(default)]
    pub tube: TubeSection,
    #[serde(default)]
    pub controller: ControllerSection,
    #[serde(default)]
    pub plant: PlantSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSection {
    pub state_dim: usize,
    /// 1-based; all dimensions when omitted.
    #[serde(default)]
    pub constrained_dims: Option<Vec<usize>>,
    pub initial_set: Vec<[f64; 2]>,
    pub target_set: Vec<[f64; 2]>,
    #[serde(default)]
    pub unsafe_sets: Vec<ObstacleSpec>,
    pub t_c: f64,
    pub x0: Vec<f64>,
    pub eta: Vec<f64>,
    pub d_s: Vec<f64>,
    pub d_t: Vec<f64>,
    pub workspace: Vec<[f64; 2]>,
    /// Half-width of the constant tube in unconstrained dimensions (rad or m).
    #[serde(default = "default_free_halfwidth")]
    pub free_halfwidth: f64,
}

fn default_free_halfwidth() -> f64 {
    std::f64::consts::FRAC_PI_2
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TubeSection {
    pub delta: Option<f64>,
    pub delta_t: Option<f64>,
    pub v: Option<f64>,
    pub eps_den: Option<f64>,
    pub dt: Option<f64>,
    /// Steepness of the reconstructed baseline; `v / 20` when omitted.
    pub baseline_v: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_gain_sign")]
    pub gain_sign: f64,
    #[serde(default)]
    pub u_max: Option<f64>,
}

fn default_kappa() -> f64 {
    2.0
}

fn default_gain_sign() -> f64 {
    1.0
}

impl Default for ControllerSection {
    fn default() -> Self {
        Self {
            kappa: default_kappa(),
            gain_sign: default_gain_sign(),
            u_max: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSection {
    #[serde(default)]
    pub kind: DisturbanceKind,
    #[serde(default)]
    pub bound: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_frequency")]
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

fn default_frequency() -> f64 {
    0.1
}

impl Default for DisturbanceSection {
    fn default() -> Self {
        Self {
            kind: DisturbanceKind::None,
            bound: 0.0,
            seed: 0,
            frequency: default_frequency(),
            phase: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PlantModel {
    #[default]
    Omni,
    Integrator,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    #[serde(default)]
    pub model: PlantModel,
    #[serde(default)]
    pub disturbance: DisturbanceSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Seconds past `t_c`; `0.25 t_c` when omitted.
    pub stay_horizon: Option<f64>,
    pub output_dir: Option<PathBuf>,
    /// Closed-loop integration step; 5 ms when omitted.
    pub sim_dt: Option<f64>,
    /// Step used by `compare` for both runs; 20 µs when omitted.
    pub compare_dt: Option<f64>,
    /// Keep every n-th simulation step in the trace; 10 when omitted.
    pub record_every: Option<usize>,
}

pub const DEFAULT_SIM_DT: f64 = 5e-3;
pub const DEFAULT_COMPARE_DT: f64 = 2e-5;
pub const DEFAULT_RECORD_EVERY: usize = 10;

/// Fully validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub task: RasTask,
    pub params: TubeParams,
    pub controller: ControllerConfig,
    pub plant: PlantModel,
    pub disturbance: DisturbanceModel,
    pub sim: SimOptions,
    pub compare_dt: f64,
    pub baseline_v: f64,
    pub output_dir: PathBuf,
}

impl Scenario {
    pub fn dynamics(&self) -> Box<dyn Dynamics> {
        match self.plant {
            PlantModel::Omni => Box::new(OmniRobot),
            PlantModel::Integrator => Box::new(Integrator::new(self.task.dim())),
        }
    }
}

struct Errors(Vec<FieldError>);

impl Errors {
    fn push(&mut self, path: impl Into<String>, msg: impl Into<String>) {
        self.0.push(FieldError::new(path, msg));
    }

    fn positive(&mut self, path: &str, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.push(path, format!("must be positive and finite (got {v})"));
        }
    }
}

fn intervals(errs: &mut Errors, path: &str, raw: &[[f64; 2]], want: usize) -> Option<Vec<Interval>> {
    if raw.len() != want {
        errs.push(path, format!("expected {want} intervals, got {}", raw.len()));
        return None;
    }
    let mut out = Vec::with_capacity(want);
    for (i, &[lo, hi]) in raw.iter().enumerate() {
        match Interval::new(lo, hi) {
            Ok(iv) if lo.is_finite() && hi.is_finite() => out.push(iv),
            _ => {
                errs.push(format!("{path}[{i}]"), format!("[{lo}, {hi}] is not a finite interval with lo ≤ hi"));
                return None;
            }
        }
    }
    Some(out)
}

/// Parses and validates scenario text. `origin` is used as the default name.
pub fn parse_scenario_str(text: &str, origin: &str) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        SttError::Config(vec![FieldError::new(
            if path == "." { "<document>".to_string() } else { path },
            e.inner().to_string(),
        )])
    })?;
    build_scenario(file, origin)
}

pub fn parse_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path)?;
    let origin = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into());
    parse_scenario_str(&text, &origin)
}

pub fn build_scenario(file: ScenarioFile, origin: &str) -> Result<Scenario> {
    let mut errs = Errors(Vec::new());
    let t = &file.task;
    let n = t.state_dim;
    if n == 0 {
        errs.push("task.state_dim", "must be at least 1");
        return Err(SttError::Config(errs.0));
    }
    let dims: Vec<usize> = t.constrained_dims.clone().unwrap_or_else(|| (1..=n).collect());
    let mut constrained = vec![false; n];
    for (i, &d) in dims.iter().enumerate() {
        if d == 0 || d > n {
            errs.push(format!("task.constrained_dims[{i}]"), format!("dimension {d} is outside 1..={n}"));
        } else if constrained[d - 1] {
            errs.push(format!("task.constrained_dims[{i}]"), format!("dimension {d} listed twice"));
        } else {
            constrained[d - 1] = true;
        }
    }
    let m = dims.len();
    if m == 0 {
        errs.push("task.constrained_dims", "at least one dimension must be constrained");
    }
    if !errs.0.is_empty() {
        return Err(SttError::Config(errs.0));
    }
    let mut order: Vec<usize> = dims.iter().map(|d| d - 1).collect();
    order.sort_unstable();
    // position of each constrained state dimension in the file's lists
    let slot = |state: usize| dims.iter().position(|&d| d - 1 == state);

    errs.positive("task.t_c", t.t_c);
    errs.positive("task.free_halfwidth", t.free_halfwidth);
    if t.x0.len() != n {
        errs.push("task.x0", format!("expected {n} values, got {}", t.x0.len()));
    }
    for (name, v) in [("task.eta", &t.eta), ("task.d_s", &t.d_s), ("task.d_t", &t.d_t)] {
        if v.len() != m {
            errs.push(name, format!("expected {m} values (one per constrained dimension), got {}", v.len()));
        }
    }
    for (name, v) in [("task.d_s", &t.d_s), ("task.d_t", &t.d_t)] {
        for (i, &d) in v.iter().enumerate() {
            if !(d > 0.0 && d.is_finite()) {
                errs.push(format!("{name}[{i}]"), format!("must be positive (got {d})"));
            }
        }
    }
    let initial = intervals(&mut errs, "task.initial_set", &t.initial_set, m);
    let target = intervals(&mut errs, "task.target_set", &t.target_set, m);
    let workspace = intervals(&mut errs, "task.workspace", &t.workspace, m);
    let obstacles: Vec<_> = t
        .unsafe_sets
        .iter()
        .enumerate()
        .map(|(j, u)| {
            if !(u.margin > 0.0 && u.margin.is_finite()) {
                errs.push(format!("task.unsafe_sets[{j}].margin"), format!("must be positive (got {})", u.margin));
            }
            intervals(&mut errs, &format!("task.unsafe_sets[{j}].box"), &u.bounds, m)
        })
        .collect();
    if !errs.0.is_empty() {
        return Err(SttError::Config(errs.0));
    }

    let lift = |ivs: &[Interval]| {
        HyperRect::new(
            (0..n)
                .map(|s| slot(s).map_or(Interval::unbounded(), |k| ivs[k]))
                .collect(),
        )
    };
    let initial = lift(&initial.unwrap());
    let target = lift(&target.unwrap());
    let workspace = lift(&workspace.unwrap());
    let unsafe_sets: Vec<HyperRect> = obstacles.into_iter().map(|o| lift(&o.unwrap())).collect();
    let per_state = |v: &[f64], free: f64| (0..n).map(|s| slot(s).map_or(free, |k| v[k])).collect::<Vec<_>>();
    let eta: Vec<f64> = (0..n).map(|s| slot(s).map_or(t.x0[s], |k| t.eta[k])).collect();

    for s in 0..n {
        if !t.x0[s].is_finite() {
            errs.push(format!("task.x0[{s}]"), "must be finite");
        }
    }
    for &s in &order {
        let k = slot(s).unwrap();
        if !initial.interval(s).contains_strictly(t.x0[s]) {
            errs.push("task.x0", format!("x0[{s}] = {} is not inside the initial set", t.x0[s]));
        }
        if !target.interval(s).contains_strictly(t.eta[k]) {
            errs.push(format!("task.eta[{k}]"), format!("{} is not inside the target set", t.eta[k]));
        }
        if !workspace.interval(s).contains_interval(initial.interval(s)) || !workspace.interval(s).contains_interval(target.interval(s)) {
            errs.push(format!("task.workspace[{k}]"), "must contain the initial and target sets");
        }
    }
    for (j, u) in unsafe_sets.iter().enumerate() {
        if !initial.disjoint(u)? {
            errs.push(format!("task.unsafe_sets[{j}]"), "intersects the initial set");
        }
        if !target.disjoint(u)? {
            errs.push(format!("task.unsafe_sets[{j}]"), "intersects the target set");
        }
    }

    let defaults = TubeParams::defaults_for(t.t_c.max(f64::MIN_POSITIVE));
    let tb = &file.tube;
    let delta = tb.delta.unwrap_or(defaults.delta);
    let delta_t = tb.delta_t.unwrap_or(delta / 2.0);
    let params = TubeParams {
        delta,
        delta_t,
        v: tb.v.unwrap_or(delta_t / 4.0),
        eps_den: tb.eps_den.unwrap_or(defaults.eps_den),
        dt: tb.dt.unwrap_or(defaults.dt),
    };
    errs.positive("tube.delta", params.delta);
    if !(params.delta_t > 0.0 && params.delta_t < params.delta) {
        errs.push("tube.delta_t", format!("must satisfy 0 < delta_t < delta (got {} with delta = {})", params.delta_t, params.delta));
    }
    errs.positive("tube.v", params.v);
    errs.positive("tube.eps_den", params.eps_den);
    errs.positive("tube.dt", params.dt);
    let baseline_v = tb.baseline_v.unwrap_or(params.v / BASELINE_STEEPNESS);
    errs.positive("tube.baseline_v", baseline_v);

    let controller = ControllerConfig {
        kappa: file.controller.kappa,
        gain_sign: file.controller.gain_sign,
        u_max: file.controller.u_max,
    };
    if let Err(SttError::Config(bad)) = controller.check() {
        errs.0.extend(bad);
    }

    let d = &file.plant.disturbance;
    if !(d.bound >= 0.0 && d.bound.is_finite()) {
        errs.push("plant.disturbance.bound", "must be non-negative and finite");
    }
    if d.kind == DisturbanceKind::Sinusoidal && !d.frequency.is_finite() {
        errs.push("plant.disturbance.frequency", "must be finite");
    }
    if file.plant.model == PlantModel::Omni && n != 3 {
        errs.push("plant.model", format!("the omni robot has 3 states, task.state_dim is {n}"));
    }

    let r = &file.run;
    let stay_horizon = r.stay_horizon.unwrap_or(0.25 * t.t_c);
    if !(stay_horizon >= 0.0 && stay_horizon.is_finite()) {
        errs.push("run.stay_horizon", "must be non-negative");
    }
    let sim_dt = r.sim_dt.unwrap_or(DEFAULT_SIM_DT);
    errs.positive("run.sim_dt", sim_dt);
    let compare_dt = r.compare_dt.unwrap_or(DEFAULT_COMPARE_DT);
    errs.positive("run.compare_dt", compare_dt);
    let record_every = r.record_every.unwrap_or(DEFAULT_RECORD_EVERY);
    if record_every == 0 {
        errs.push("run.record_every", "must be at least 1");
    }
    if !errs.0.is_empty() {
        return Err(SttError::Config(errs.0));
    }

    let task = RasTask {
        initial,
        target,
        unsafe_sets,
        d_u: t.unsafe_sets.iter().map(|u| u.margin).collect(),
        t_c: t.t_c,
        x0: t.x0.clone(),
        eta,
        d_s: per_state(&t.d_s, t.free_halfwidth),
        d_t: per_state(&t.d_t, t.free_halfwidth),
        constrained,
        workspace,
    };
    task.check()?;
    Ok(Scenario {
        name: file.name.clone().unwrap_or_else(|| origin.to_string()),
        task,
        params,
        controller,
        plant: file.plant.model,
        disturbance: DisturbanceModel {
            kind: d.kind,
            bound: d.bound,
            seed: d.seed,
            frequency: d.frequency,
            phase: d.phase,
        },
        sim: SimOptions {
            dt: sim_dt,
            stay_horizon,
            record_every,
        },
        compare_dt,
        baseline_v,
        output_dir: r.output_dir.clone().unwrap_or_else(|| PathBuf::from("out")),
    })
}

/// Round-trip exact formatting (17 significant digits).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_tube_csv<W: Write>(tube: &Tube, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    for i in 1..=tube.dim() {
        header.push(format!("g{i}L"));
        header.push(format!("g{i}U"));
    }
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for s in 0..tube.len() {
        row.clear();
        row.push(fmt_f64(tube.time(s)));
        for (l, u) in tube.lower_at(s).iter().zip(tube.upper_at(s)) {
            row.push(fmt_f64(*l));
            row.push(fmt_f64(*u));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_tube_csv(tube: &Tube, path: &Path) -> Result<()> {
    let f = std::io::BufWriter::new(fs::File::create(path)?);
    write_tube_csv(tube, f)
}

/// Reads a tube written by [`write_tube_csv`]. The time column must start at
/// zero and be uniformly spaced.
pub fn read_tube_csv<R: std::io::Read>(input: R) -> Result<Tube> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let cols = header.len();
    if cols < 3 || cols % 2 == 0 || &header[0] != "t" {
        return Err(SttError::TubeFormat("expected header t,g1L,g1U,...".into()));
    }
    for i in 0..(cols - 1) / 2 {
        if header[1 + 2 * i] != format!("g{}L", i + 1) || header[2 + 2 * i] != format!("g{}U", i + 1) {
            return Err(SttError::TubeFormat(format!("unexpected column names for dimension {}", i + 1)));
        }
    }
    let n = (cols - 1) / 2;
    let (mut times, mut lower, mut upper) = (Vec::new(), Vec::new(), Vec::new());
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |c: usize| {
            rec[c]
                .trim()
                .parse::<f64>()
                .map_err(|_| SttError::TubeFormat(format!("row {}: column {} is not a number", line + 1, c + 1)))
        };
        times.push(parse(0)?);
        for i in 0..n {
            lower.push(parse(1 + 2 * i)?);
            upper.push(parse(2 + 2 * i)?);
        }
    }
    if times.len() < 2 {
        return Err(SttError::TubeFormat("need at least two samples".into()));
    }
    if times[0] != 0.0 {
        return Err(SttError::TubeFormat("time column must start at 0".into()));
    }
    let dt = times[times.len() - 1] / (times.len() - 1) as f64;
    if let Some(s) = times
        .iter()
        .enumerate()
        .position(|(s, &t)| (t - s as f64 * dt).abs() > 1e-9 * dt.max(1.0) + 1e-12 * t.abs())
    {
        return Err(SttError::TubeFormat(format!("time column is not uniform at row {}", s + 1)));
    }
    Tube::from_samples(dt, n, lower, upper)
}

pub fn load_tube_csv(path: &Path) -> Result<Tube> {
    read_tube_csv(std::io::BufReader::new(fs::File::open(path)?))
}

pub fn write_trace_csv<W: Write>(trace: &SimTrace, out: W) -> Result<()> {
    let n = trace.n;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    for i in 1..=n {
        header.push(format!("g{i}L"));
        header.push(format!("g{i}U"));
    }
    header.extend((1..=n).map(|i| format!("u{i}")));
    header.push("active_obstacle".into());
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for r in 0..trace.rows() {
        row.clear();
        row.push(fmt_f64(trace.t[r]));
        row.extend(trace.state(r).iter().map(|v| fmt_f64(*v)));
        for i in 0..n {
            row.push(fmt_f64(trace.lower[r * n + i]));
            row.push(fmt_f64(trace.upper[r * n + i]));
        }
        row.extend(trace.input(r).iter().map(|v| fmt_f64(*v)));
        row.push(trace.active_obstacle[r].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_trace_csv(trace: &SimTrace, path: &Path) -> Result<()> {
    write_trace_csv(trace, std::io::BufWriter::new(fs::File::create(path)?))
}

/// Pretty JSON with a trailing newline.
pub fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
