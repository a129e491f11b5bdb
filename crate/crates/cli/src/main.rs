//! `turing`: instability verdicts, dispersion tables, simulations, analysis
//! and parameter sweeps from one configuration file.

mod config;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use turing_core::analysis::{classify_fields, cosine_spectrum, count_spatial_periods};
use turing_core::linstab::{scan_spectrum_with_entries, write_spectrum_csv};
use turing_core::pde::{integrate_with, limit_cycle_ic, random_ic, read_snapshot, write_pgm, write_snapshot};
use turing_core::sweep::{region_summary, run_sweep_with, write_csv_row, CSV_HEADER};
use turing_core::theorems::{brusselator_conditions, cross_validate, normal_form_conditions};
use turing_core::{
    CutoffPolicy, Error as CoreError, Field, InitialCondition, IntegratorConfig, LocalModel, Model, ScanResult,
    SimulationSpec, SweepSpec, Thresholds,
};

use config::{parse_config, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "turing",
    version,
    about = "Turing and oscillatory instabilities of two-component reaction-diffusion systems"
)]
struct Cli {
    /// Run configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `[run] seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Sweep worker threads (default: available cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Sweep points at N = 250, t = 1000.
    #[arg(long, global = true)]
    full_scale: bool,
    /// Machine-readable report on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form verdict cross-checked against the spectral scan.
    Classify,
    /// Per-mode trace, determinant and eigenvalues up to the analytic cutoff.
    Dispersion,
    /// Integrates the system and writes snapshots plus a sidecar config.
    Simulate,
    /// Classifies snapshot files or a simulation directory.
    Analyze {
        /// Snapshot files or directories written by `simulate`.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Runs the `[sweep]` grid and writes one CSV row per point.
    Sweep,
}

/// Failure carrying its process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let blow_up = error
            .chain()
            .any(|e| matches!(e.downcast_ref::<CoreError>(), Some(CoreError::NonFinite { .. })));
        Self {
            code: if blow_up { 2 } else { 1 },
            error,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Command::Analyze { paths } = &cli.command {
        return Ok(analyze(cli, paths)?);
    }
    let cfg = load(cli)?;
    match &cli.command {
        Command::Classify => classify(cli, &cfg)?,
        Command::Dispersion => dispersion(cli, &cfg)?,
        Command::Simulate => simulate(cli, cfg)?,
        Command::Sweep => sweep(cli, cfg)?,
        Command::Analyze { .. } => unreachable!(),
    }
    Ok(())
}

fn read_config(path: &Path) -> anyhow::Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}

fn load(cli: &Cli) -> anyhow::Result<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| anyhow!("--config PATH is required"))?;
    let mut cfg = read_config(path)?;
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    cfg.output.clear();
    Ok(cfg)
}

fn out_dir(cli: &Cli) -> anyhow::Result<Option<&Path>> {
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(cli.out.as_deref())
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_json(path: &Path, value: &Value) -> anyhow::Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(w.flush()?)
}

/// Prints a line to stdout; a closed pipe is not an error.
fn emit(text: &str) -> anyhow::Result<()> {
    match writeln!(io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn scan_json(scan: &ScanResult) -> Value {
    json!({
        "lambda": scan.capital_lambda,
        "class": scan.classification.as_str(),
        "argmax_modes": scan.argmax_modes.iter().map(|m| m.indices().to_vec()).collect::<Vec<_>>(),
        "argmax_norm2": scan.argmax_norm2(),
        "scanned_norm2_max": scan.scanned_norm2_max,
        "asymptotic_limit": scan.asymptotic_limit,
    })
}

fn classify(cli: &Cli, cfg: &RunConfig) -> anyhow::Result<()> {
    let j = cfg.model.jacobian();
    let cv = cross_validate(&j, &cfg.diffusion, &cfg.domain())?;
    let closed_forms = match &cfg.model {
        Model::Brusselator(p) => brusselator_conditions(p, &cfg.diffusion)
            .ok()
            .map(serde_json::to_value)
            .transpose()?,
        Model::NormalForm(p) => Some(serde_json::to_value(normal_form_conditions(p, &cfg.diffusion))?),
    };
    let report = json!({
        "model": cfg.model,
        "diffusion": [cfg.diffusion.d1(), cfg.diffusion.d2()],
        "domain": { "k": cfg.k, "S": cfg.side },
        "jacobian": j,
        "fixed_point": cfg.model.fixed_point(),
        "verdict": {
            "outcome": cv.verdict.outcome.as_str(),
            "case": cv.verdict.case_fired.as_str(),
            "window": cv.verdict.window,
            "dominance_window": cv.verdict.dominance_window,
            "witnesses": cv.verdict.witnesses.iter().map(|m| m.indices().to_vec()).collect::<Vec<_>>(),
            "infinite_order": cv.verdict.infinite_order,
            "zero_mode_unstable": cv.verdict.zero_mode_unstable,
            "boundary": cv.verdict.boundary,
            "params": cv.verdict.params,
        },
        "oracle": scan_json(&cv.scan),
        "agree": cv.agree,
        "disagreement": cv.reason,
        "closed_forms": closed_forms,
    });
    if let Some(dir) = out_dir(cli)? {
        write_json(&dir.join("classify.json"), &report)?;
    }
    if cli.json {
        emit(&serde_json::to_string_pretty(&report)?)?;
    } else {
        let modes: Vec<_> = cv.scan.argmax_modes.iter().map(|m| m.indices().to_vec()).collect();
        emit(&format!(
            "theorem: {} (case {}); oracle: {} with Λ = {} at {modes:?}; {}",
            cv.verdict.outcome.as_str(),
            cv.verdict.case_fired.as_str(),
            cv.scan.classification.as_str(),
            cv.scan.capital_lambda,
            if cv.agree { "consistent" } else { "INCONSISTENT" },
        ))?;
    }
    Ok(())
}

fn dispersion(cli: &Cli, cfg: &RunConfig) -> anyhow::Result<()> {
    let scan = scan_spectrum_with_entries(
        &cfg.model.jacobian(),
        &cfg.diffusion,
        &cfg.domain(),
        CutoffPolicy::Analytic,
    )?;
    let entries = scan.entries.as_deref().unwrap_or(&[]);
    match out_dir(cli)? {
        Some(dir) => {
            let mut w = create(&dir.join("dispersion.csv"))?;
            write_spectrum_csv(entries, &mut w)?;
            w.flush()?;
            eprintln!(
                "{} modes written to {}",
                entries.len(),
                dir.join("dispersion.csv").display()
            );
        }
        None => write_spectrum_csv(entries, io::stdout().lock())?,
    }
    Ok(())
}

fn initial_field(cfg: &RunConfig) -> anyhow::Result<Field> {
    let grid = cfg.grid();
    Ok(match cfg.run.ic {
        InitialCondition::Random => random_ic(grid, cfg.run.amplitude, cfg.run.seed)?,
        InitialCondition::LimitCycle => limit_cycle_ic(&cfg.model, grid, cfg.run.amplitude, cfg.run.seed)?,
    })
}

fn simulate(cli: &Cli, mut cfg: RunConfig) -> anyhow::Result<()> {
    let integrator = IntegratorConfig::new(cfg.dt, cfg.run.steps, cfg.run.stride);
    integrator.validate(&cfg.grid(), &cfg.diffusion)?;
    let dir = out_dir(cli)?.ok_or_else(|| anyhow!("simulate needs --out DIR"))?;
    let field = initial_field(&cfg)?;

    let mut write_err = None;
    let result = integrate_with(field, &cfg.model, &cfg.diffusion, &integrator, |snap| {
        if write_err.is_some() {
            return;
        }
        let path = dir.join(format!("snap_{:010}.bin", snap.step));
        let res = create(&path).and_then(|mut w| {
            write_snapshot(&mut w, &snap.field, snap.t)?;
            Ok(w.flush()?)
        });
        write_err = res.err();
    });
    if let Some(e) = write_err {
        return Err(e);
    }
    let traj = result?;
    let mut w = create(&dir.join("final.bin"))?;
    write_snapshot(&mut w, &traj.final_field, traj.final_t)?;
    w.flush()?;

    cfg.output.push(("t_final".into(), format!("{:?}", traj.final_t)));
    cfg.output.push(("snapshots".into(), traj.snapshots.len().to_string()));
    cfg.output.push((
        "stability_ratio".into(),
        format!("{:?}", integrator.stability_ratio(&cfg.grid(), &cfg.diffusion)),
    ));
    if cfg.k == 2 {
        for (name, values) in [("phi1", &traj.final_field.phi1), ("phi2", &traj.final_field.phi2)] {
            let mut w = create(&dir.join(format!("final_{name}.pgm")))?;
            let (lo, hi) = write_pgm(&mut w, values, cfg.n_cells)?;
            w.flush()?;
            cfg.output.push((format!("{name}_min"), format!("{lo:?}")));
            cfg.output.push((format!("{name}_max"), format!("{hi:?}")));
        }
    }
    fs::write(dir.join("run.cfg"), cfg.render()).context("writing run.cfg")?;
    eprintln!(
        "{} steps to t = {}; {} snapshots in {}",
        cfg.run.steps,
        traj.final_t,
        traj.snapshots.len(),
        dir.display()
    );
    Ok(())
}

/// Snapshot files under `paths`, in order; a directory contributes its
/// `snap_*.bin` files, or `final.bin` when it has none.
fn snapshot_files(paths: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut snaps: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    f.file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.starts_with("snap_") && n.ends_with(".bin"))
                })
                .collect();
            snaps.sort();
            if snaps.is_empty() && p.join("final.bin").is_file() {
                snaps.push(p.join("final.bin"));
            }
            files.extend(snaps);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        bail!("no snapshot files found");
    }
    Ok(files)
}

fn analyze(cli: &Cli, paths: &[PathBuf]) -> anyhow::Result<()> {
    let sidecar = paths.iter().map(|p| p.join("run.cfg")).find(|p| p.is_file());
    let thresholds = match (&cli.config, &sidecar) {
        (Some(path), _) => read_config(path)?.thresholds,
        (None, Some(path)) => read_config(path)?.thresholds,
        (None, None) => Thresholds::default(),
    };
    let files = snapshot_files(paths)?;
    let mut fields = Vec::with_capacity(files.len());
    let mut t_last = 0.0;
    for f in &files {
        let (field, t) = read_snapshot(File::open(f).with_context(|| format!("opening {}", f.display()))?)
            .with_context(|| format!("reading {}", f.display()))?;
        fields.push(field);
        t_last = t;
    }
    let refs: Vec<&Field> = fields.iter().collect();
    let class = classify_fields(&refs, &thresholds);
    let last = fields.last().expect("at least one snapshot");
    let periods = count_spatial_periods(last, thresholds.theta_space).ok();
    let spectrum = cosine_spectrum(last);
    let top: Vec<Value> = spectrum
        .top(10)
        .iter()
        .map(|&n| json!({ "n": n, "c": spectrum.coefficients[n] }))
        .collect();
    let report = json!({
        "class": class.kind.as_str(),
        "temporal_amplitude": class.temporal_amplitude,
        "spatial_amplitude": class.spatial_amplitude,
        "window_range": class.window_range,
        "window_len": class.window_len,
        "snapshots": files.len(),
        "t_last": t_last,
        "period_count": periods,
        "c0": spectrum.coefficients.first(),
        "top10": top,
        "thresholds": thresholds,
    });

    let dir = match out_dir(cli)? {
        Some(d) => d.to_path_buf(),
        None => paths
            .iter()
            .find(|p| p.is_dir())
            .cloned()
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    write_json(&dir.join("analysis.json"), &report)?;
    let mut w = create(&dir.join("spectrum.csv"))?;
    writeln!(w, "n,c_phi1,c_phi2")?;
    for (n, (c1, c2)) in spectrum.coefficients.iter().zip(&spectrum.coefficients2).enumerate() {
        writeln!(w, "{n},{c1},{c2}")?;
    }
    w.flush()?;

    if cli.json {
        emit(&serde_json::to_string_pretty(&report)?)?;
    } else {
        let periods = periods.map_or("n/a".to_string(), |p| p.to_string());
        emit(&format!(
            "{} (temporal {:.3e}, spatial {:.3e}); periods {periods}; top indices {:?}",
            class.kind.as_str(),
            class.temporal_amplitude,
            class.spatial_amplitude,
            spectrum.top(5)
        ))?;
    }
    Ok(())
}

fn sweep(cli: &Cli, cfg: RunConfig) -> anyhow::Result<()> {
    let section = cfg
        .sweep
        .clone()
        .ok_or_else(|| anyhow!("sweep needs a [sweep] section"))?;
    let simulation = section.simulate.then(|| {
        let mut sim = SimulationSpec {
            n_cells: section.n_cells,
            dt: section.dt,
            t_end: section.t_end,
            snapshots: section.snapshots,
            amplitude: cfg.run.amplitude,
            ic: cfg.run.ic,
            thresholds: cfg.thresholds,
        };
        if cli.full_scale {
            let full = SimulationSpec::full_scale();
            sim.n_cells = full.n_cells;
            sim.t_end = full.t_end;
        }
        sim
    });
    let spec = SweepSpec {
        model: cfg.model,
        axes: section.axes.clone(),
        k: cfg.k,
        side: cfg.side,
        diffusion: cfg.diffusion,
        simulation,
        base_seed: cfg.run.seed,
    };
    spec.validate()?;
    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);

    let dir = out_dir(cli)?;
    let mut sink: Box<dyn Write> = match dir {
        Some(d) => Box::new(create(&d.join("sweep.csv"))?),
        None => Box::new(io::stdout().lock()),
    };
    writeln!(sink, "{CSV_HEADER}")?;
    let total = spec.len();
    let (n1, n2) = (&spec.axes[0].name, &spec.axes[1].name);
    let mut io_err = None;
    let rows = run_sweep_with(&spec, workers, |r| {
        if io_err.is_none() {
            io_err = write_csv_row(&mut sink, r).err();
        }
        eprintln!(
            "point {}/{total} {n1}={} {n2}={}: thm {}, oracle {}, sim {}{} [{:.0} ms]",
            r.idx + 1,
            r.param1,
            r.param2,
            r.thm_outcome.map_or("-", |o| o.as_str()),
            r.oracle_class.map_or("-", |c| c.as_str()),
            r.sim_class.map_or("-", |c| c.as_str()),
            r.error.as_deref().map_or(String::new(), |e| format!(", error: {e}")),
            r.wall_time.as_secs_f64() * 1e3,
        );
    })?;
    if let Some(e) = io_err {
        return Err(e.into());
    }
    sink.flush()?;
    drop(sink);

    let summary = region_summary(&rows);
    let table: Vec<Value> = summary
        .counts
        .iter()
        .map(|((thm, sim), n)| json!({ "thm_outcome": thm, "sim_class": sim, "count": n }))
        .collect();
    let report = json!({
        "points": rows.len(),
        "table": table,
        "instability_without_pattern": summary.instability_without_pattern,
        "pattern_without_instability": summary.pattern_without_instability,
        "disagreements": summary.disagreements,
        "errors": summary.errors,
    });
    if let Some(d) = dir {
        write_json(&d.join("summary.json"), &report)?;
        fs::write(d.join("sweep.cfg"), cfg.render()).context("writing sweep.cfg")?;
    }
    eprintln!(
        "{} points; instability without pattern {}, pattern without instability {}, errors {}",
        rows.len(),
        summary.instability_without_pattern,
        summary.pattern_without_instability,
        summary.errors
    );
    Ok(())
}
