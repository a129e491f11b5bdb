//! Explicit forward-time centred-space integration of the reaction-diffusion
//! system on 1D and 2D cell-centred grids with zero-flux boundaries.
//!
//! Cell `i` sits at `x_i = (i + 1/2)·dx` and the mirror ghost beyond each wall
//! repeats the adjacent interior cell, so the plain lattice sum is conserved
//! by pure diffusion and `cos(2πn x/S)` is an exact discrete eigenvector.

use std::io::{self, Read, Write};

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::Serialize;

use crate::error::{positive, Error, Result};
use crate::linstab::{DiffusionPair, DomainSpec};
use crate::model::{BrusselatorParams, FixedPoint, Jacobian2x2, LocalModel, Model, NormalFormParams};

/// `dt·max(D1, D2)/dx²` used by default.
pub const DEFAULT_STABILITY_RATIO: f64 = 1.0 / 6.0;

/// Slack allowed above the configured ratio limit.
pub const RATIO_SLACK: f64 = 1e-12;

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"RDSNAP01";
pub const SNAPSHOT_HEADER_LEN: usize = 32;

/// `dx = sqrt(6·dt·d_max)` and `S = n_cells·dx`.
pub fn derive_grid(n_cells: usize, dt: f64, d_max: f64) -> Result<(f64, f64)> {
    derive_grid_at_ratio(n_cells, dt, d_max, DEFAULT_STABILITY_RATIO)
}

/// `dx = sqrt(dt·d_max/ratio)` and `S = n_cells·dx`.
pub fn derive_grid_at_ratio(n_cells: usize, dt: f64, d_max: f64, ratio: f64) -> Result<(f64, f64)> {
    if n_cells == 0 {
        return Err(Error::InvalidParameter {
            name: "n_cells",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    positive("dt", dt)?;
    positive("d_max", d_max)?;
    positive("ratio", ratio)?;
    let dx = (dt * d_max / ratio).sqrt();
    Ok((dx, n_cells as f64 * dx))
}

/// Time step giving `ratio = dt·d_max/dx²`.
pub fn dt_for_ratio(dx: f64, d_max: f64, ratio: f64) -> Result<f64> {
    Ok(positive("ratio", ratio)? * positive("dx", dx)?.powi(2) / positive("d_max", d_max)?)
}

/// Cell layout shared by both components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    k: usize,
    n: usize,
    dx: f64,
}

impl Grid {
    pub fn new(k: usize, n: usize, dx: f64) -> Result<Self> {
        if !(1..=2).contains(&k) {
            return Err(Error::UnsupportedDimension(k));
        }
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n_cells",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        positive("dx", dx)?;
        Ok(Self { k, n, dx })
    }

    /// Grid with `n` cells per axis covering a side of length `side`.
    pub fn with_side(k: usize, n: usize, side: f64) -> Result<Self> {
        Self::new(k, n, positive("S", side)? / n.max(1) as f64)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_cells(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn side(&self) -> f64 {
        self.n as f64 * self.dx
    }

    /// Number of lattice values per component.
    pub fn len(&self) -> usize {
        self.n.pow(self.k as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    pub fn domain(&self) -> Result<DomainSpec> {
        DomainSpec::new(self.k, self.side())
    }
}

/// Both components on a grid, in fixed-point-centred coordinates.
///
/// 2D values are row-major: index `row·N + col`, with `col` along `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
}

impl Field {
    /// The fixed point everywhere.
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            phi1: vec![0.0; grid.len()],
            phi2: vec![0.0; grid.len()],
        }
    }

    pub fn uniform(grid: Grid, v1: f64, v2: f64) -> Self {
        Self {
            grid,
            phi1: vec![v1; grid.len()],
            phi2: vec![v2; grid.len()],
        }
    }

    /// Samples `f` at cell centres; `f` receives `(x, y)` with `y = 0` in 1D.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64) -> (f64, f64)) -> Self {
        let mut field = Self::zeros(grid);
        let n = grid.n;
        for idx in 0..grid.len() {
            let (row, col) = (idx / n, idx % n);
            let y = if grid.k == 2 { grid.center(row) } else { 0.0 };
            let (a, b) = f(grid.center(col), y);
            field.phi1[idx] = a;
            field.phi2[idx] = b;
        }
        field
    }

    pub fn from_parts(grid: Grid, phi1: Vec<f64>, phi2: Vec<f64>) -> Result<Self> {
        if phi1.len() != grid.len() || phi2.len() != grid.len() {
            return Err(Error::Format(format!(
                "expected {} values per component, got {} and {}",
                grid.len(),
                phi1.len(),
                phi2.len()
            )));
        }
        Ok(Self { grid, phi1, phi2 })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn k(&self) -> usize {
        self.grid.k
    }

    pub fn n_cells(&self) -> usize {
        self.grid.n
    }

    pub fn dx(&self) -> f64 {
        self.grid.dx
    }

    pub fn side(&self) -> f64 {
        self.grid.side()
    }

    /// First non-finite value, scanning φ₁ before φ₂.
    pub fn find_non_finite(&self) -> Option<((usize, usize), &'static str)> {
        let n = self.grid.n;
        let locate = |idx: usize| if self.grid.k == 2 { (idx / n, idx % n) } else { (idx, 0) };
        for (values, name) in [(&self.phi1, "phi1"), (&self.phi2, "phi2")] {
            if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
                return Some((locate(idx), name));
            }
        }
        None
    }

    /// Max-norm distance between two fields on the same grid.
    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.phi1
            .iter()
            .zip(&other.phi1)
            .chain(self.phi2.iter().zip(&other.phi2))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Values in original (unshifted) variables.
    pub fn to_original(&self, fp: &FixedPoint) -> (Vec<f64>, Vec<f64>) {
        (
            self.phi1.iter().map(|v| v + fp.u_star).collect(),
            self.phi2.iter().map(|v| v + fp.v_star).collect(),
        )
    }

    /// Row means (`axis = 0`, a profile along `y`) or column means
    /// (`axis = 1`, along `x`) of a 2D component. 1D fields are returned as is.
    pub fn axis_profile(values: &[f64], grid: &Grid, axis: usize) -> Vec<f64> {
        if grid.k == 1 {
            return values.to_vec();
        }
        let n = grid.n;
        (0..n)
            .map(|i| {
                let sum: f64 = if axis == 0 {
                    values[i * n..(i + 1) * n].iter().sum()
                } else {
                    (0..n).map(|r| values[r * n + i]).sum()
                };
                sum / n as f64
            })
            .collect()
    }
}

/// Local kinetics used by the integrator.
///
/// [`DiffusionOnly`] switches the reaction term off for conservation tests.
pub trait Kinetics {
    fn rate(&self, u: f64, v: f64) -> (f64, f64);
}

impl<M: LocalModel> Kinetics for M {
    #[inline]
    fn rate(&self, u: f64, v: f64) -> (f64, f64) {
        self.rhs_shifted(u, v)
    }
}

/// Zero reaction term.
#[derive(Debug, Clone, Copy, Default)]
pub struct DiffusionOnly;

impl LocalModel for DiffusionOnly {
    fn fixed_point(&self) -> FixedPoint {
        FixedPoint {
            u_star: 0.0,
            v_star: 0.0,
        }
    }

    fn jacobian(&self) -> Jacobian2x2 {
        Jacobian2x2::new(0.0, 0.0, 0.0, 0.0)
    }

    #[inline]
    fn rhs_shifted(&self, _u: f64, _v: f64) -> (f64, f64) {
        (0.0, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub steps: u64,
    /// Steps between recorded snapshots; 0 records none.
    pub snapshot_stride: u64,
    /// Largest accepted `dt·max(D)/dx²` (before [`RATIO_SLACK`]).
    pub ratio_limit: f64,
}

impl IntegratorConfig {
    pub fn new(dt: f64, steps: u64, snapshot_stride: u64) -> Self {
        Self {
            dt,
            steps,
            snapshot_stride,
            ratio_limit: DEFAULT_STABILITY_RATIO,
        }
    }

    /// Config integrating to `t_end` at the default ratio on `grid`.
    pub fn for_duration(grid: &Grid, d: &DiffusionPair, t_end: f64, snapshots: u64) -> Result<Self> {
        let dt = dt_for_ratio(grid.dx, d.max(), DEFAULT_STABILITY_RATIO)?;
        let steps = (positive("t_end", t_end)? / dt).round() as u64;
        let stride = steps.checked_div(snapshots).map_or(0, |s| s.max(1));
        Ok(Self::new(dt, steps, stride))
    }

    pub fn stability_ratio(&self, grid: &Grid, d: &DiffusionPair) -> f64 {
        self.dt * d.max() / (grid.dx * grid.dx)
    }

    pub fn validate(&self, grid: &Grid, d: &DiffusionPair) -> Result<()> {
        positive("dt", self.dt)?;
        let ratio = self.stability_ratio(grid, d);
        if ratio > self.ratio_limit + RATIO_SLACK {
            return Err(Error::UnstableTimeStep {
                ratio,
                limit: self.ratio_limit,
            });
        }
        Ok(())
    }
}

/// Field recorded during integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: u64,
    pub t: f64,
    pub field: Field,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub final_field: Field,
    pub final_t: f64,
}

/// Reusable double buffer for stepping one grid.
#[derive(Debug, Clone)]
pub struct Stepper {
    next1: Vec<f64>,
    next2: Vec<f64>,
}

impl Stepper {
    pub fn new(grid: &Grid) -> Self {
        Self {
            next1: vec![0.0; grid.len()],
            next2: vec![0.0; grid.len()],
        }
    }

    /// Advances `field` by one step in place. `step` is only used for
    /// diagnostics.
    pub fn advance(
        &mut self,
        field: &mut Field,
        kinetics: &impl Kinetics,
        d: &DiffusionPair,
        dt: f64,
        step: u64,
    ) -> Result<()> {
        let grid = field.grid;
        let inv = dt / (grid.dx * grid.dx);
        let (r1, r2) = (d.d1() * inv, d.d2() * inv);
        match grid.k {
            1 => advance_1d(field, &mut self.next1, &mut self.next2, kinetics, dt, r1, r2),
            _ => advance_2d(field, &mut self.next1, &mut self.next2, kinetics, dt, r1, r2),
        }
        std::mem::swap(&mut field.phi1, &mut self.next1);
        std::mem::swap(&mut field.phi2, &mut self.next2);
        if !(all_finite(&field.phi1) && all_finite(&field.phi2)) {
            let (cell, component) = field.find_non_finite().expect("a non-finite value was detected");
            return Err(Error::NonFinite { step, cell, component });
        }
        Ok(())
    }
}

fn all_finite(values: &[f64]) -> bool {
    // sum is non-finite whenever any term is (or on overflow, which is just
    // as fatal here)
    values.iter().sum::<f64>().is_finite()
}

fn advance_1d(field: &Field, next1: &mut [f64], next2: &mut [f64], kin: &impl Kinetics, dt: f64, r1: f64, r2: f64) {
    let (p1, p2) = (&field.phi1, &field.phi2);
    let n = p1.len();
    for i in 0..n {
        let l = if i == 0 { 0 } else { i - 1 };
        let r = if i + 1 == n { i } else { i + 1 };
        let (f1, f2) = kin.rate(p1[i], p2[i]);
        next1[i] = p1[i] + dt * f1 + r1 * (p1[l] + p1[r] - 2.0 * p1[i]);
        next2[i] = p2[i] + dt * f2 + r2 * (p2[l] + p2[r] - 2.0 * p2[i]);
    }
}

fn advance_2d(field: &Field, next1: &mut [f64], next2: &mut [f64], kin: &impl Kinetics, dt: f64, r1: f64, r2: f64) {
    let (p1, p2) = (&field.phi1, &field.phi2);
    let n = field.grid.n;
    for row in 0..n {
        let up = if row == 0 { 0 } else { row - 1 } * n;
        let down = if row + 1 == n { row } else { row + 1 } * n;
        let here = row * n;
        for col in 0..n {
            let left = if col == 0 { 0 } else { col - 1 };
            let right = if col + 1 == n { col } else { col + 1 };
            let i = here + col;
            let (f1, f2) = kin.rate(p1[i], p2[i]);
            let l1 = p1[here + left] + p1[here + right] + p1[up + col] + p1[down + col] - 4.0 * p1[i];
            let l2 = p2[here + left] + p2[here + right] + p2[up + col] + p2[down + col] - 4.0 * p2[i];
            next1[i] = p1[i] + dt * f1 + r1 * l1;
            next2[i] = p2[i] + dt * f2 + r2 * l2;
        }
    }
}

/// One explicit step, returning the new field.
pub fn step(field: &Field, kinetics: &impl Kinetics, d: &DiffusionPair, dt: f64) -> Result<Field> {
    IntegratorConfig::new(dt, 1, 0).validate(&field.grid, d)?;
    let mut out = field.clone();
    Stepper::new(&field.grid).advance(&mut out, kinetics, d, dt, 1)?;
    Ok(out)
}

/// Applies `config.steps` steps, recording a snapshot after every
/// `snapshot_stride`-th step.
pub fn integrate(
    field: Field,
    kinetics: &impl Kinetics,
    d: &DiffusionPair,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    integrate_with(field, kinetics, d, config, |_| {})
}

/// [`integrate`] with a callback invoked for each snapshot as it is taken.
pub fn integrate_with(
    mut field: Field,
    kinetics: &impl Kinetics,
    d: &DiffusionPair,
    config: &IntegratorConfig,
    mut on_snapshot: impl FnMut(&Snapshot),
) -> Result<Trajectory> {
    config.validate(&field.grid, d)?;
    if let Some((cell, component)) = field.find_non_finite() {
        return Err(Error::NonFinite {
            step: 0,
            cell,
            component,
        });
    }
    let mut stepper = Stepper::new(&field.grid);
    let mut snapshots = Vec::new();
    for s in 1..=config.steps {
        stepper.advance(&mut field, kinetics, d, config.dt, s)?;
        if config.snapshot_stride > 0 && s % config.snapshot_stride == 0 {
            let snap = Snapshot {
                step: s,
                t: s as f64 * config.dt,
                field: field.clone(),
            };
            on_snapshot(&snap);
            snapshots.push(snap);
        }
    }
    Ok(Trajectory {
        snapshots,
        final_t: config.steps as f64 * config.dt,
        final_field: field,
    })
}

/// Uniform draw in `[0, 1)` from the top 53 bits.
fn unit(rng: &mut SplitMix64) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Adds independent uniform noise in `[-amplitude, amplitude]` to every
/// cell, all of φ₁ first, then all of φ₂.
pub fn perturb(field: &mut Field, amplitude: f64, seed: u64) -> Result<()> {
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "amplitude",
            value: amplitude,
            reason: "must be finite and non-negative",
        });
    }
    let mut rng = SplitMix64::seed_from_u64(seed);
    for v in field.phi1.iter_mut().chain(field.phi2.iter_mut()) {
        *v += amplitude * (2.0 * unit(&mut rng) - 1.0);
    }
    Ok(())
}

/// Small uniform perturbation of the fixed point (zero in shifted
/// coordinates), drawn from SplitMix64 seeded with `seed`.
pub fn random_ic(grid: Grid, amplitude: f64, seed: u64) -> Result<Field> {
    let mut field = Field::zeros(grid);
    perturb(&mut field, amplitude, seed)?;
    Ok(field)
}

/// Time the Brusselator is relaxed onto its cycle by [`limit_cycle_point`].
pub const RELAXATION_TIME: f64 = 500.0;
const RELAXATION_DT: f64 = 1e-3;

/// Classical RK4 integration of the local system (no diffusion).
pub fn relax_local(kinetics: &impl Kinetics, start: (f64, f64), t: f64, h: f64) -> (f64, f64) {
    let steps = (t / h).round() as u64;
    let (mut u, mut v) = start;
    for _ in 0..steps {
        let k1 = kinetics.rate(u, v);
        let k2 = kinetics.rate(u + 0.5 * h * k1.0, v + 0.5 * h * k1.1);
        let k3 = kinetics.rate(u + 0.5 * h * k2.0, v + 0.5 * h * k2.1);
        let k4 = kinetics.rate(u + h * k3.0, v + h * k3.1);
        u += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        v += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    (u, v)
}

/// A point on (or very near) the stable limit cycle, in shifted coordinates.
pub fn limit_cycle_point(model: &Model) -> Result<(f64, f64)> {
    match model {
        Model::Brusselator(p) => brusselator_cycle_point(p),
        Model::NormalForm(p) => normal_form_cycle_point(p),
    }
}

fn brusselator_cycle_point(p: &BrusselatorParams) -> Result<(f64, f64)> {
    if p.b() <= p.hopf_threshold() {
        return Err(Error::NoLimitCycle("Brusselator B must exceed the Hopf threshold"));
    }
    Ok(relax_local(p, (0.01, 0.0), RELAXATION_TIME, RELAXATION_DT))
}

fn normal_form_cycle_point(p: &NormalFormParams) -> Result<(f64, f64)> {
    let r = p.limit_cycle_radius()?;
    if r == 0.0 {
        return Err(Error::NoLimitCycle("normal form needs nu > 0"));
    }
    Ok((r, 0.0))
}

/// Homogeneous field on the limit cycle plus a [`perturb`] of the given
/// amplitude.
pub fn limit_cycle_ic(model: &Model, grid: Grid, amplitude: f64, seed: u64) -> Result<Field> {
    let (u, v) = limit_cycle_point(model)?;
    let mut field = Field::uniform(grid, u, v);
    perturb(&mut field, amplitude, seed)?;
    Ok(field)
}

/// Writes the binary snapshot: header then row-major φ₁ and φ₂.
pub fn write_snapshot<W: Write>(mut w: W, field: &Field, t: f64) -> io::Result<()> {
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&(field.k() as u32).to_le_bytes())?;
    w.write_all(&(field.n_cells() as u32).to_le_bytes())?;
    w.write_all(&field.dx().to_le_bytes())?;
    w.write_all(&t.to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * field.phi1.len());
    for v in field.phi1.iter().chain(&field.phi2) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}

/// Reads a snapshot written by [`write_snapshot`], returning the field and `t`.
pub fn read_snapshot<R: Read>(mut r: R) -> Result<(Field, f64)> {
    let io_err = |e: io::Error| Error::Format(e.to_string());
    let mut header = [0u8; SNAPSHOT_HEADER_LEN];
    r.read_exact(&mut header).map_err(io_err)?;
    if &header[..8] != SNAPSHOT_MAGIC {
        return Err(Error::Format("bad magic, expected RDSNAP01".into()));
    }
    let word = |at: usize| u32::from_le_bytes(header[at..at + 4].try_into().unwrap()) as usize;
    let float = |at: usize| f64::from_le_bytes(header[at..at + 8].try_into().unwrap());
    let grid = Grid::new(word(8), word(12), float(16)).map_err(|e| Error::Format(e.to_string()))?;
    let t = float(24);
    let len = grid.len();
    let mut body = vec![0u8; 16 * len];
    r.read_exact(&mut body).map_err(io_err)?;
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let (phi1, phi2) = values.split_at(len);
    Ok((Field::from_parts(grid, phi1.to_vec(), phi2.to_vec())?, t))
}

/// Writes an `n × n` component as a 16-bit binary PGM, linearly rescaled to
/// `0..=65535`. Returns the `(min, max)` mapped to the extremes.
pub fn write_pgm<W: Write>(mut w: W, values: &[f64], n: usize) -> io::Result<(f64, f64)> {
    if values.len() != n * n {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            "PGM export needs an N×N field",
        ));
    }
    let (min, max) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let span = max - min;
    write!(w, "P5\n{n} {n}\n65535\n")?;
    let mut buf = Vec::with_capacity(2 * values.len());
    for &v in values {
        let level = if span > 0.0 {
            ((v - min) / span * 65535.0).round() as u16
        } else {
            0
        };
        buf.extend_from_slice(&level.to_be_bytes());
    }
    w.write_all(&buf)?;
    Ok((min, max))
}
