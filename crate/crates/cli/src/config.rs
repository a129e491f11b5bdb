//! Line-based run configuration: `key = value` pairs under `[section]`
//! headers, `#` comments, case-sensitive keys.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;
use turing_core::pde::{derive_grid_at_ratio, dt_for_ratio, DEFAULT_STABILITY_RATIO};
use turing_core::sweep::{Axis, AxisScale, InitialCondition, SimulationSpec};
use turing_core::{BrusselatorParams, DiffusionPair, DomainSpec, Grid, Model, NormalFormParams, Thresholds};

/// Largest accepted `|S − N·sqrt(dt·max D/ratio)|`.
pub const SIDE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    AtLine { line: usize, msg: String },
    #[error("{0}")]
    General(String),
}

fn at(line: usize, msg: impl Into<String>) -> ConfigError {
    ConfigError::AtLine { line, msg: msg.into() }
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub steps: u64,
    pub stride: u64,
    pub seed: u64,
    pub ic: InitialCondition,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSection {
    pub axes: [Axis; 2],
    /// `false` runs the analysis only.
    pub simulate: bool,
    pub n_cells: usize,
    pub dt: f64,
    pub t_end: f64,
    pub snapshots: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: Model,
    pub k: usize,
    pub n_cells: usize,
    pub dt: f64,
    pub side: f64,
    /// `dt·max D/dx²` the grid is built for; at most 1/6.
    pub ratio: f64,
    pub diffusion: DiffusionPair,
    pub run: RunSection,
    pub thresholds: Thresholds,
    pub sweep: Option<SweepSection>,
    /// Informational `[output]` entries, kept verbatim.
    pub output: Vec<(String, String)>,
}

const SECTIONS: &[(&str, &[&str])] = &[
    (
        "model",
        &["family", "A", "B", "k1", "k2", "k3", "k4", "nu", "beta", "a", "b"],
    ),
    ("domain", &["k", "N", "dt", "S", "ratio"]),
    ("diffusion", &["D1", "D2"]),
    ("run", &["steps", "stride", "seed", "ic", "amplitude"]),
    (
        "analysis",
        &["theta_time", "theta_time_relative", "theta_space", "window_fraction"],
    ),
    (
        "sweep",
        &["axis1", "axis2", "simulate", "N", "dt", "t_end", "snapshots"],
    ),
];

/// Raw `(section, key) → (line, value)` entries.
struct Entries {
    map: BTreeMap<(String, String), (usize, String)>,
    output: Vec<(String, String)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut output = Vec::new();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| at(line, format!("malformed section header `{content}`")))?
                    .trim();
                if name != "output" && !SECTIONS.iter().any(|(s, _)| *s == name) {
                    return Err(at(line, format!("unknown section `[{name}]`")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| at(line, format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section
                .as_deref()
                .ok_or_else(|| at(line, format!("`{key}` appears before any [section] header")))?;
            if sec == "output" {
                output.push((key.to_string(), value.to_string()));
                continue;
            }
            let keys = SECTIONS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
            if !keys.contains(&key) {
                return Err(at(line, format!("unknown key `{key}` in [{sec}]")));
            }
            if map
                .insert((sec.to_string(), key.to_string()), (line, value.to_string()))
                .is_some()
            {
                return Err(at(line, format!("duplicate key `{key}` in [{sec}]")));
            }
        }
        Ok(Self { map, output })
    }

    fn raw(&self, section: &str, key: &str) -> Option<(usize, &str)> {
        self.map
            .get(&(section.to_string(), key.to_string()))
            .map(|(l, v)| (*l, v.as_str()))
    }

    fn line(&self, section: &str, key: &str) -> Option<usize> {
        self.raw(section, key).map(|(l, _)| l)
    }

    fn parsed<T: std::str::FromStr>(&self, section: &str, key: &str, what: &str) -> Result<Option<(usize, T)>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(|x| Some((line, x)))
                .map_err(|_| at(line, format!("`{key}` expects {what}, got `{v}`"))),
        }
    }

    fn f64(&self, section: &str, key: &str, default: f64) -> Result<f64> {
        let v = self.parsed::<f64>(section, key, "a number")?;
        if let Some((line, x)) = v {
            if !x.is_finite() {
                return Err(at(line, format!("`{key}` must be finite")));
            }
        }
        Ok(v.map_or(default, |(_, x)| x))
    }

    fn u64(&self, section: &str, key: &str, default: u64) -> Result<u64> {
        Ok(self
            .parsed(section, key, "a non-negative integer")?
            .map_or(default, |(_, x)| x))
    }

    fn usize(&self, section: &str, key: &str, default: usize) -> Result<usize> {
        Ok(self
            .parsed(section, key, "a non-negative integer")?
            .map_or(default, |(_, x)| x))
    }

    fn bool(&self, section: &str, key: &str, default: bool) -> Result<bool> {
        Ok(self
            .parsed(section, key, "`true` or `false`")?
            .map_or(default, |(_, x)| x))
    }

    fn has_section(&self, section: &str) -> bool {
        self.map.keys().any(|(s, _)| s == section)
    }

    /// Attaches the line of `section.key` (if present) to a core error.
    fn wrap(&self, section: &str, key: &str, e: impl std::fmt::Display) -> ConfigError {
        match self.line(section, key) {
            Some(line) => at(line, e.to_string()),
            None => ConfigError::General(e.to_string()),
        }
    }
}

fn parse_model(e: &Entries) -> Result<Model> {
    let Some((line, family)) = e.raw("model", "family") else {
        return Err(ConfigError::General("model family required".into()));
    };
    let keys: &[&str] = match family {
        "brusselator" => &["A", "B", "k1", "k2", "k3", "k4"],
        "normal_form" => &["nu", "beta", "a", "b"],
        other => {
            return Err(at(
                line,
                format!("unknown model family `{other}` (expected `brusselator` or `normal_form`)"),
            ))
        }
    };
    for ((sec, key), (l, _)) in &e.map {
        if sec == "model" && key != "family" && !keys.contains(&key.as_str()) {
            return Err(at(*l, format!("`{key}` is not a parameter of the {family} model")));
        }
    }
    let model = if family == "brusselator" {
        let Some(_) = e.raw("model", "B") else {
            return Err(at(line, "the brusselator model needs `B`"));
        };
        BrusselatorParams::new(
            e.f64("model", "A", 2.0)?,
            e.f64("model", "B", 0.0)?,
            e.f64("model", "k1", 1.0)?,
            e.f64("model", "k2", 1.0)?,
            e.f64("model", "k3", 1.0)?,
            e.f64("model", "k4", 1.0)?,
        )
        .map(Model::from)
    } else {
        for key in ["nu", "beta"] {
            if e.raw("model", key).is_none() {
                return Err(at(line, format!("the normal_form model needs `{key}`")));
            }
        }
        NormalFormParams::new(
            e.f64("model", "nu", 0.0)?,
            e.f64("model", "beta", 0.0)?,
            e.f64("model", "a", -1.0)?,
            e.f64("model", "b", 0.0)?,
        )
        .map(Model::from)
    };
    model.map_err(|err| at(line, err.to_string()))
}

fn parse_axis(e: &Entries, key: &str) -> Result<Axis> {
    let (line, v) = e
        .raw("sweep", key)
        .ok_or_else(|| ConfigError::General(format!("[sweep] needs `{key} = NAME MIN MAX COUNT [linear|log]`")))?;
    let parts: Vec<&str> = v.split_whitespace().collect();
    if !(4..=5).contains(&parts.len()) {
        return Err(at(
            line,
            format!("`{key}` expects `NAME MIN MAX COUNT [linear|log]`, got `{v}`"),
        ));
    }
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| at(line, format!("`{key}`: `{s}` is not a number")))
    };
    let count = parts[3]
        .parse::<usize>()
        .map_err(|_| at(line, format!("`{key}`: count `{}` is not an integer", parts[3])))?;
    let scale = match parts.get(4).copied().unwrap_or("linear") {
        "linear" => AxisScale::Linear,
        "log" => AxisScale::Log,
        other => return Err(at(line, format!("`{key}`: unknown scale `{other}`"))),
    };
    Ok(Axis {
        name: parts[0].to_string(),
        min: num(parts[1])?,
        max: num(parts[2])?,
        count,
        scale,
    })
}

/// Parses and validates a configuration, filling every default.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let e = Entries::parse(text)?;
    let model = parse_model(&e)?;

    let d1 = e.f64("diffusion", "D1", 1.0)?;
    let d2 = e.f64("diffusion", "D2", 1.0)?;
    let diffusion = DiffusionPair::new(d1, d2).map_err(|err| e.wrap("diffusion", "D1", err))?;

    let k = e.usize("domain", "k", 1)?;
    let n_cells = e.usize("domain", "N", 250)?;
    let explicit_dt = e.parsed::<f64>("domain", "dt", "a number")?;
    let explicit_side = e.parsed::<f64>("domain", "S", "a number")?;
    let d_max = diffusion.max();
    let ratio = e.f64("domain", "ratio", DEFAULT_STABILITY_RATIO)?;
    if !(ratio > 0.0 && ratio <= DEFAULT_STABILITY_RATIO) {
        return Err(e.wrap("domain", "ratio", format!("`ratio` must lie in (0, 1/6], got {ratio}")));
    }
    let (dt, side) = match (explicit_side, explicit_dt) {
        (Some((line, side)), Some((_, dt))) => {
            let (_, derived) =
                derive_grid_at_ratio(n_cells, dt, d_max, ratio).map_err(|err| at(line, err.to_string()))?;
            if (side - derived).abs().is_nan() || (side - derived).abs() > SIDE_TOLERANCE {
                return Err(at(
                    line,
                    format!(
                        "S = {side} is inconsistent with N·sqrt(dt·max D/ratio) = {derived} (N = {n_cells}, dt = {dt}, max D = {d_max}, ratio = {ratio})"
                    ),
                ));
            }
            (dt, side)
        }
        (Some((line, side)), None) => {
            let dx = side / n_cells.max(1) as f64;
            let dt = dt_for_ratio(dx, d_max, ratio).map_err(|err| at(line, err.to_string()))?;
            (dt, side)
        }
        (None, dt) => {
            let dt = dt.map_or(1e-3, |(_, x)| x);
            let (_, side) =
                derive_grid_at_ratio(n_cells, dt, d_max, ratio).map_err(|err| e.wrap("domain", "dt", err))?;
            (dt, side)
        }
    };
    DomainSpec::new(k, side).map_err(|err| e.wrap("domain", "k", err))?;
    Grid::with_side(k, n_cells, side).map_err(|err| e.wrap("domain", "N", err))?;

    let ic = match e.raw("run", "ic") {
        None | Some((_, "random")) => InitialCondition::Random,
        Some((_, "limit_cycle")) => InitialCondition::LimitCycle,
        Some((line, other)) => {
            return Err(at(
                line,
                format!("unknown initial condition `{other}` (expected `random` or `limit_cycle`)"),
            ))
        }
    };
    let run = RunSection {
        steps: e.u64("run", "steps", 1_000_000)?,
        stride: e.u64("run", "stride", 10_000)?,
        seed: e.u64("run", "seed", 1)?,
        ic,
        amplitude: e.f64("run", "amplitude", 0.01)?,
    };
    if run.amplitude < 0.0 {
        return Err(e.wrap("run", "amplitude", "`amplitude` must be non-negative"));
    }

    let defaults = Thresholds::default();
    let thresholds = Thresholds {
        theta_time: e.f64("analysis", "theta_time", defaults.theta_time)?,
        theta_time_relative: e.f64("analysis", "theta_time_relative", defaults.theta_time_relative)?,
        theta_space: e.f64("analysis", "theta_space", defaults.theta_space)?,
        window_fraction: e.f64("analysis", "window_fraction", defaults.window_fraction)?,
    };
    if !(thresholds.window_fraction > 0.0 && thresholds.window_fraction <= 1.0) {
        return Err(e.wrap("analysis", "window_fraction", "`window_fraction` must lie in (0, 1]"));
    }

    let sweep = if e.has_section("sweep") {
        let desk = SimulationSpec::desk_scale();
        Some(SweepSection {
            axes: [parse_axis(&e, "axis1")?, parse_axis(&e, "axis2")?],
            simulate: e.bool("sweep", "simulate", true)?,
            n_cells: e.usize("sweep", "N", desk.n_cells)?,
            dt: e.f64("sweep", "dt", desk.dt)?,
            t_end: e.f64("sweep", "t_end", desk.t_end)?,
            snapshots: e.u64("sweep", "snapshots", desk.snapshots)?,
        })
    } else {
        None
    };

    Ok(RunConfig {
        model,
        k,
        n_cells,
        dt,
        side,
        ratio,
        diffusion,
        run,
        thresholds,
        sweep,
        output: e.output,
    })
}

impl RunConfig {
    pub fn grid(&self) -> Grid {
        Grid::with_side(self.k, self.n_cells, self.side).expect("validated on parse")
    }

    pub fn domain(&self) -> DomainSpec {
        DomainSpec::new(self.k, self.side).expect("validated on parse")
    }

    /// Full configuration with every value explicit. Floats use the
    /// shortest representation that parses back to the same bits.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[model]");
        match self.model {
            Model::Brusselator(p) => {
                let _ = writeln!(s, "family = brusselator");
                for (k, v) in [
                    ("A", p.a()),
                    ("B", p.b()),
                    ("k1", p.k1()),
                    ("k2", p.k2()),
                    ("k3", p.k3()),
                    ("k4", p.k4()),
                ] {
                    let _ = writeln!(s, "{k} = {v:?}");
                }
            }
            Model::NormalForm(p) => {
                let _ = writeln!(s, "family = normal_form");
                for (k, v) in [("nu", p.nu()), ("beta", p.beta()), ("a", p.a()), ("b", p.b())] {
                    let _ = writeln!(s, "{k} = {v:?}");
                }
            }
        }
        let _ = writeln!(
            s,
            "\n[domain]\nk = {}\nN = {}\ndt = {:?}\nS = {:?}\nratio = {:?}",
            self.k, self.n_cells, self.dt, self.side, self.ratio
        );
        let _ = writeln!(
            s,
            "\n[diffusion]\nD1 = {:?}\nD2 = {:?}",
            self.diffusion.d1(),
            self.diffusion.d2()
        );
        let ic = match self.run.ic {
            InitialCondition::Random => "random",
            InitialCondition::LimitCycle => "limit_cycle",
        };
        let r = &self.run;
        let _ = writeln!(
            s,
            "\n[run]\nsteps = {}\nstride = {}\nseed = {}\nic = {ic}\namplitude = {:?}",
            r.steps, r.stride, r.seed, r.amplitude
        );
        let t = &self.thresholds;
        let _ = writeln!(
            s,
            "\n[analysis]\ntheta_time = {:?}\ntheta_time_relative = {:?}\ntheta_space = {:?}\nwindow_fraction = {:?}",
            t.theta_time, t.theta_time_relative, t.theta_space, t.window_fraction
        );
        if let Some(sw) = &self.sweep {
            let axis = |a: &Axis| {
                let scale = match a.scale {
                    AxisScale::Linear => "linear",
                    AxisScale::Log => "log",
                };
                format!("{} {:?} {:?} {} {scale}", a.name, a.min, a.max, a.count)
            };
            let _ = writeln!(
                s,
                "\n[sweep]\naxis1 = {}\naxis2 = {}\nsimulate = {}\nN = {}\ndt = {:?}\nt_end = {:?}\nsnapshots = {}",
                axis(&sw.axes[0]),
                axis(&sw.axes[1]),
                sw.simulate,
                sw.n_cells,
                sw.dt,
                sw.t_end,
                sw.snapshots
            );
        }
        if !self.output.is_empty() {
            let _ = writeln!(s, "\n[output]");
            for (k, v) in &self.output {
                let _ = writeln!(s, "{k} = {v}");
            }
        }
        s
    }
}
