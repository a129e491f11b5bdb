//! Two-parameter grids combining the closed-form verdict, the spectral
//! oracle and (optionally) a simulation per point.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::analysis::{classify_asymptotic, count_spatial_periods, AsymptoticKind, Thresholds};
use crate::error::{Error, Result};
use crate::linstab::{DiffusionPair, DomainSpec, InstabilityClass};
use crate::model::{BrusselatorParams, LocalModel, Model, NormalFormParams};
use crate::pde::{integrate, limit_cycle_ic, random_ic, Grid, IntegratorConfig};
use crate::theorems::{cross_validate, ThmCase, ThmOutcome};

pub const CSV_HEADER: &str =
    "idx,param1,param2,thm_outcome,thm_case,window_lo,window_hi,oracle_lambda,oracle_class,argmax_norm2,sim_class,period_count,error";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AxisScale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub scale: AxisScale,
}

impl Axis {
    pub fn linear(name: &str, min: f64, max: f64, count: usize) -> Self {
        Self {
            name: name.to_string(),
            min,
            max,
            count,
            scale: AxisScale::Linear,
        }
    }

    pub fn log(name: &str, min: f64, max: f64, count: usize) -> Self {
        Self {
            scale: AxisScale::Log,
            ..Self::linear(name, min, max, count)
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSweep(format!("axis `{}`: {msg}", self.name)));
        if self.count < 2 {
            return bad(format!("count must be at least 2, got {}", self.count));
        }
        if !(self.min.is_finite() && self.max.is_finite()) {
            return bad("bounds must be finite".into());
        }
        if self.scale == AxisScale::Log && !(self.min > 0.0 && self.max > 0.0) {
            return bad("log axes need positive bounds".into());
        }
        Ok(())
    }

    /// Grid values, endpoints included.
    pub fn values(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let f = i as f64 / last;
                match self.scale {
                    AxisScale::Linear => self.min + f * (self.max - self.min),
                    AxisScale::Log => (self.min.ln() + f * (self.max.ln() - self.min.ln())).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InitialCondition {
    Random,
    LimitCycle,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSpec {
    pub n_cells: usize,
    pub dt: f64,
    pub t_end: f64,
    pub snapshots: u64,
    pub amplitude: f64,
    pub ic: InitialCondition,
    pub thresholds: Thresholds,
}

impl SimulationSpec {
    /// N = 100, t = 300 at dt = 0.001.
    pub fn desk_scale() -> Self {
        Self {
            n_cells: 100,
            dt: 1e-3,
            t_end: 300.0,
            snapshots: 100,
            amplitude: 0.01,
            ic: InitialCondition::Random,
            thresholds: Thresholds::default(),
        }
    }

    /// N = 250, t = 1000 at dt = 0.001.
    pub fn full_scale() -> Self {
        Self {
            n_cells: 250,
            t_end: 1000.0,
            ..Self::desk_scale()
        }
    }

    pub fn steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub model: Model,
    pub axes: [Axis; 2],
    pub k: usize,
    pub side: f64,
    pub diffusion: DiffusionPair,
    /// `None` runs the analysis only.
    pub simulation: Option<SimulationSpec>,
    pub base_seed: u64,
}

/// Parameter names that may be swept for `model`.
pub fn sweepable(model: &Model) -> &'static [&'static str] {
    match model {
        Model::Brusselator(_) => &["A", "B", "k1", "k2", "k3", "k4", "D1", "D2", "S"],
        Model::NormalForm(_) => &["nu", "beta", "a", "b", "D1", "D2", "S"],
    }
}

/// The model, diffusivities and side after setting `name = value`.
fn apply(model: &Model, d: &DiffusionPair, side: f64, name: &str, value: f64) -> Result<(Model, DiffusionPair, f64)> {
    let (mut model, mut d, mut side) = (*model, *d, side);
    match name {
        "D1" => d = DiffusionPair::new(value, d.d2())?,
        "D2" => d = DiffusionPair::new(d.d1(), value)?,
        "S" => side = value,
        _ => {
            model = match model {
                Model::Brusselator(p) => {
                    let mut v = [p.a(), p.b(), p.k1(), p.k2(), p.k3(), p.k4()];
                    let at = ["A", "B", "k1", "k2", "k3", "k4"].iter().position(|n| *n == name);
                    v[at.ok_or_else(|| unknown(name, &model))?] = value;
                    BrusselatorParams::new(v[0], v[1], v[2], v[3], v[4], v[5])?.into()
                }
                Model::NormalForm(p) => {
                    let mut v = [p.nu(), p.beta(), p.a(), p.b()];
                    let at = ["nu", "beta", "a", "b"].iter().position(|n| *n == name);
                    v[at.ok_or_else(|| unknown(name, &model))?] = value;
                    NormalFormParams::new(v[0], v[1], v[2], v[3])?.into()
                }
            }
        }
    }
    Ok((model, d, side))
}

fn unknown(name: &str, model: &Model) -> Error {
    Error::InvalidSweep(format!("`{name}` is not a parameter of the {:?} model", model.family()))
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        for axis in &self.axes {
            axis.validate()?;
            if !sweepable(&self.model).contains(&axis.name.as_str()) {
                return Err(unknown(&axis.name, &self.model));
            }
        }
        if self.axes[0].name == self.axes[1].name {
            return Err(Error::InvalidSweep(
                "the two axes must sweep different parameters".into(),
            ));
        }
        DomainSpec::new(self.k, self.side)?;
        if let Some(sim) = &self.simulation {
            if sim.n_cells == 0 || !(sim.dt > 0.0 && sim.t_end > 0.0) {
                return Err(Error::InvalidSweep(
                    "simulation needs n_cells >= 1, dt > 0, t_end > 0".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.axes[0].count * self.axes[1].count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates of point `idx` in row-major order (first axis outer).
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let (v1, v2) = (self.axes[0].values(), self.axes[1].values());
        (v1[idx / self.axes[1].count], v2[idx % self.axes[1].count])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub idx: usize,
    pub param1: f64,
    pub param2: f64,
    pub thm_outcome: Option<ThmOutcome>,
    pub thm_case: Option<ThmCase>,
    pub window: Option<(f64, f64)>,
    pub oracle_lambda: Option<f64>,
    pub oracle_class: Option<InstabilityClass>,
    pub argmax_norm2: Option<u64>,
    /// Closed form and oracle agree at this point.
    pub agree: Option<bool>,
    pub sim_class: Option<AsymptoticKind>,
    pub period_count: Option<usize>,
    pub error: Option<String>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl SweepRow {
    fn empty(idx: usize, param1: f64, param2: f64) -> Self {
        Self {
            idx,
            param1,
            param2,
            thm_outcome: None,
            thm_case: None,
            window: None,
            oracle_lambda: None,
            oracle_class: None,
            argmax_norm2: None,
            agree: None,
            sim_class: None,
            period_count: None,
            error: None,
            wall_time: Duration::ZERO,
        }
    }
}

/// Evaluates one grid point. Failures land in the `error` field.
pub fn run_point(spec: &SweepSpec, idx: usize) -> SweepRow {
    let start = Instant::now();
    let (p1, p2) = spec.point(idx);
    let mut row = SweepRow::empty(idx, p1, p2);
    if let Err(e) = fill_point(spec, &mut row) {
        row.error = Some(e.to_string());
    }
    row.wall_time = start.elapsed();
    row
}

fn fill_point(spec: &SweepSpec, row: &mut SweepRow) -> Result<()> {
    let (model, d, side) = apply(&spec.model, &spec.diffusion, spec.side, &spec.axes[0].name, row.param1)?;
    let (model, d, side) = apply(&model, &d, side, &spec.axes[1].name, row.param2)?;
    let dom = DomainSpec::new(spec.k, side)?;

    let cv = cross_validate(&model.jacobian(), &d, &dom)?;
    row.thm_outcome = Some(cv.verdict.outcome);
    row.thm_case = Some(cv.verdict.case_fired);
    row.window = cv.verdict.window.map(|w| (w.lo, w.hi));
    row.oracle_lambda = Some(cv.scan.capital_lambda);
    row.oracle_class = Some(cv.scan.classification);
    row.argmax_norm2 = cv.scan.argmax_norm2();
    row.agree = Some(cv.agree);

    let Some(sim) = &spec.simulation else {
        return Ok(());
    };
    let grid = Grid::with_side(spec.k, sim.n_cells, side)?;
    let steps = sim.steps();
    let config = IntegratorConfig::new(sim.dt, steps, (steps / sim.snapshots.max(1)).max(1));
    config.validate(&grid, &d)?;
    let seed = spec.base_seed ^ row.idx as u64;
    let field = match sim.ic {
        InitialCondition::Random => random_ic(grid, sim.amplitude, seed)?,
        InitialCondition::LimitCycle => limit_cycle_ic(&model, grid, sim.amplitude, seed)?,
    };
    let traj = integrate(field, &model, &d, &config)?;
    let class = classify_asymptotic(&traj.snapshots, &sim.thresholds);
    row.sim_class = Some(class.kind);
    if spec.k == 1 && class.spatial_amplitude >= sim.thresholds.theta_space {
        row.period_count = count_spatial_periods(&traj.final_field, sim.thresholds.theta_space).ok();
    }
    Ok(())
}

/// Runs every point on `workers` threads and hands rows to `on_row` in index
/// order as soon as they are contiguous.
pub fn run_sweep_with(spec: &SweepSpec, workers: usize, mut on_row: impl FnMut(&SweepRow)) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let total = spec.len();
    let workers = workers.clamp(1, total.max(1));
    let next = AtomicUsize::new(0);
    let mut rows = Vec::with_capacity(total);
    std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel::<SweepRow>();
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            scope.spawn(move || loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= total || tx.send(run_point(spec, idx)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut pending = BTreeMap::new();
        for row in rx {
            pending.insert(row.idx, row);
            while let Some(row) = pending.remove(&rows.len()) {
                on_row(&row);
                rows.push(row);
            }
        }
    });
    Ok(rows)
}

/// [`run_sweep_with`] using all available cores.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    run_sweep_with(spec, workers, |_| {})
}

struct Cell<T>(Option<T>);

impl<T: fmt::Display> fmt::Display for Cell<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Some(v) => v.fmt(f),
            None => Ok(()),
        }
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn write_csv_row<W: Write>(mut w: W, r: &SweepRow) -> io::Result<()> {
    writeln!(
        w,
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.idx,
        r.param1,
        r.param2,
        Cell(r.thm_outcome.map(ThmOutcome::as_str)),
        Cell(r.thm_case.map(ThmCase::as_str)),
        Cell(r.window.map(|w| w.0)),
        Cell(r.window.map(|w| w.1)),
        Cell(r.oracle_lambda),
        Cell(r.oracle_class.map(InstabilityClass::as_str)),
        Cell(r.argmax_norm2),
        Cell(r.sim_class.map(AsymptoticKind::as_str)),
        Cell(r.period_count),
        Cell(r.error.as_deref().map(csv_escape)),
    )
}

pub fn write_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    rows.iter().try_for_each(|r| write_csv_row(&mut w, r))
}

/// Contingency table of theorem outcome against simulated class.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct RegionSummary {
    /// `(thm outcome, sim class)` → count; missing values read `"none"`.
    pub counts: BTreeMap<(String, String), usize>,
    /// Instability predicted but the simulation oscillates.
    pub instability_without_pattern: usize,
    /// No instability predicted (or an empty window) but a pattern forms.
    pub pattern_without_instability: usize,
    pub disagreements: usize,
    pub errors: usize,
}

impl RegionSummary {
    pub fn count(&self, thm: &str, sim: &str) -> usize {
        self.counts
            .get(&(thm.to_string(), sim.to_string()))
            .copied()
            .unwrap_or(0)
    }
}

pub fn region_summary(rows: &[SweepRow]) -> RegionSummary {
    let mut s = RegionSummary::default();
    for r in rows {
        let thm = r.thm_outcome.map_or("none", ThmOutcome::as_str).to_string();
        let sim = r.sim_class.map_or("none", AsymptoticKind::as_str).to_string();
        *s.counts.entry((thm, sim)).or_default() += 1;
        let oscillating = r.sim_class.is_some_and(AsymptoticKind::is_oscillatory);
        let pattern = r.sim_class == Some(AsymptoticKind::TuringPattern);
        match r.thm_outcome {
            Some(ThmOutcome::Instability) if oscillating => s.instability_without_pattern += 1,
            Some(ThmOutcome::NoInstability | ThmOutcome::ConditionalWindowEmpty) if pattern => {
                s.pattern_without_instability += 1
            }
            _ => {}
        }
        s.disagreements += usize::from(r.agree == Some(false));
        s.errors += usize::from(r.error.is_some());
    }
    s
}
