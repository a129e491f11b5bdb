//! Fixtures and independent measurements shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use turing_core::pde::{integrate, DiffusionOnly, Stepper};
use turing_core::{
    BrusselatorParams, DiffusionPair, DomainSpec, Field, Grid, IntegratorConfig, LocalModel, Model, NormalFormParams,
};

pub const SIDE: f64 = 19.365;
pub const SMALL_SIDE: f64 = 3.098;

/// A = 2, unit rates, B = 15, D = (0.1, 1).
pub fn p_point() -> (Model, DiffusionPair) {
    (
        BrusselatorParams::unit_rates(2.0, 15.0).unwrap().into(),
        DiffusionPair::new(0.1, 1.0).unwrap(),
    )
}

pub fn normal_form_point() -> (Model, DiffusionPair) {
    (
        NormalFormParams::new(1.0, -0.48, -1.0, 0.5).unwrap().into(),
        DiffusionPair::new(1.0, 0.001).unwrap(),
    )
}

pub fn dom(k: usize, side: f64) -> DomainSpec {
    DomainSpec::new(k, side).unwrap()
}

/// Uniform sampler on top of SplitMix64.
pub struct Draws(SplitMix64);

impl Draws {
    pub fn new(seed: u64) -> Self {
        Self(SplitMix64::seed_from_u64(seed))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + u * (hi - lo)
    }

    pub fn pick<T: Copy>(&mut self, items: &[T]) -> T {
        items[(self.0.next_u64() % items.len() as u64) as usize]
    }

    pub fn brusselator(&mut self) -> BrusselatorParams {
        let a = self.uniform(0.5, 4.0);
        let b = self.uniform(0.5, 20.0);
        let k: Vec<f64> = (0..4).map(|_| self.uniform(0.5, 2.0)).collect();
        BrusselatorParams::new(a, b, k[0], k[1], k[2], k[3]).unwrap()
    }

    pub fn normal_form(&mut self) -> NormalFormParams {
        let nu = self.uniform(-2.0, 2.0);
        let beta = self.uniform(-2.0, 2.0);
        NormalFormParams::new(nu, beta, -1.0, 0.5).unwrap()
    }

    pub fn diffusion(&mut self) -> DiffusionPair {
        DiffusionPair::new(self.uniform(0.01, 2.0), self.uniform(0.01, 2.0)).unwrap()
    }

    pub fn domain(&mut self) -> DomainSpec {
        let side = self.pick(&[SMALL_SIDE, SIDE]);
        dom(self.pick(&[1, 2]), side)
    }
}

/// Continuum growth rate `Re λ⁺` of mode `n` from the 2×2 mode matrix,
/// written out independently of the library.
pub fn continuum_rate(model: &Model, d: &DiffusionPair, side: f64, n: u32) -> f64 {
    let j = model.jacobian();
    let q2 = (2.0 * PI * n as f64 / side).powi(2);
    let (m11, m22) = (j.a11 - d.d1() * q2, j.a22 - d.d2() * q2);
    let tr = m11 + m22;
    let disc = tr * tr - 4.0 * (m11 * m22 - j.a12 * j.a21);
    if disc >= 0.0 {
        0.5 * (tr + disc.sqrt())
    } else {
        0.5 * tr
    }
}

/// Growth rate of a single full-wave cosine mode measured from a 1D run
/// started along the λ⁺ eigenvector with amplitude `amp`. The log of the
/// projected amplitude is fitted by least squares while it stays below
/// `cap`.
pub fn measured_rate(model: &Model, d: &DiffusionPair, side: f64, n: u32, cells: usize, amp: f64, cap: f64) -> f64 {
    let j = model.jacobian();
    let q2 = (2.0 * PI * n as f64 / side).powi(2);
    let lambda = continuum_rate(model, d, side, n);
    let (v1, v2) = (j.a12, lambda - (j.a11 - d.d1() * q2));
    let norm = v1.hypot(v2);
    let grid = Grid::with_side(1, cells, side).unwrap();
    let basis: Vec<f64> = (0..cells)
        .map(|i| (2.0 * PI * n as f64 * grid.center(i) / side).cos())
        .collect();
    let field = Field::from_fn(grid, |x, _| {
        let c = amp * (2.0 * PI * n as f64 * x / side).cos();
        (c * v1 / norm, c * v2 / norm)
    });
    let mut field = field;
    let dt = 0.25 * grid.dx() * grid.dx() / d.max() / 6.0;
    let stride = ((0.005 / dt) as u64).max(1);
    let energy: f64 = basis.iter().map(|b| b * b).sum();
    let proj = |phi: &[f64]| phi.iter().zip(&basis).map(|(p, b)| p * b).sum::<f64>() / energy;
    let mut stepper = Stepper::new(&grid);
    let mut samples = vec![(0.0, amp.ln())];
    for step in 1..=10_000_000u64 {
        stepper.advance(&mut field, model, d, dt, step).unwrap();
        if step % stride != 0 {
            continue;
        }
        let peak = field.phi1.iter().chain(&field.phi2).fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > cap {
            break;
        }
        let a = proj(&field.phi1).hypot(proj(&field.phi2));
        samples.push((step as f64 * dt, a.ln()));
    }
    least_squares_slope(&samples)
}

pub fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Largest deviation from zero after `steps` steps from the fixed point.
pub fn equilibrium_drift(model: &Model, d: &DiffusionPair, k: usize, cells: usize, steps: u64) -> f64 {
    let grid = Grid::with_side(k, cells, SIDE).unwrap();
    let dt = 0.9 * grid.dx() * grid.dx() / d.max() / 6.0;
    let traj = integrate(Field::zeros(grid), model, d, &IntegratorConfig::new(dt, steps, 0)).unwrap();
    traj.final_field.max_abs_diff(&Field::zeros(grid))
}

/// Largest relative change of either component's sum under pure diffusion.
pub fn mass_drift(d: &DiffusionPair, k: usize, cells: usize, steps: u64, seed: u64) -> f64 {
    let grid = Grid::with_side(k, cells, SIDE).unwrap();
    let mut rng = Draws::new(seed);
    let field = Field::from_fn(grid, |_, _| (1.0 + rng.uniform(0.0, 1.0), 2.0 + rng.uniform(0.0, 1.0)));
    let dt = grid.dx() * grid.dx() / d.max() / 6.0;
    let mass = |f: &Field| (f.phi1.iter().sum::<f64>(), f.phi2.iter().sum::<f64>());
    let before = mass(&field);
    let traj = integrate(field, &DiffusionOnly, d, &IntegratorConfig::new(dt, steps, 0)).unwrap();
    let after = mass(&traj.final_field);
    ((after.0 - before.0) / before.0)
        .abs()
        .max(((after.1 - before.1) / before.1).abs())
}
