//! Local vector fields: the Brusselator and the Hopf normal form.
//!
//! Both models are written in coordinates centred on their fixed point, so
//! the origin is always the steady state analysed by [`crate::linstab`] and
//! [`crate::theorems`] and the state integrated by [`crate::pde`].

use serde::Serialize;

use crate::error::{finite, positive, Error, Result};

/// Common interface of a two-component local system.
pub trait LocalModel {
    /// Fixed point in original (unshifted) variables.
    fn fixed_point(&self) -> FixedPoint;

    /// Linearization at the fixed point.
    fn jacobian(&self) -> Jacobian2x2;

    /// Full nonlinear vector field in fixed-point-centred coordinates.
    fn rhs_shifted(&self, u: f64, v: f64) -> (f64, f64);
}

/// Rate constants of the Brusselator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BrusselatorParams {
    a: f64,
    b: f64,
    k1: f64,
    k2: f64,
    k3: f64,
    k4: f64,
}

impl BrusselatorParams {
    pub fn new(a: f64, b: f64, k1: f64, k2: f64, k3: f64, k4: f64) -> Result<Self> {
        Ok(Self {
            a: positive("A", a)?,
            b: positive("B", b)?,
            k1: positive("k1", k1)?,
            k2: positive("k2", k2)?,
            k3: positive("k3", k3)?,
            k4: positive("k4", k4)?,
        })
    }

    /// `A`, `B` with all rate constants equal to one.
    pub fn unit_rates(a: f64, b: f64) -> Result<Self> {
        Self::new(a, b, 1.0, 1.0, 1.0, 1.0)
    }

    pub fn with_b(self, b: f64) -> Result<Self> {
        Self::new(self.a, b, self.k1, self.k2, self.k3, self.k4)
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn k1(&self) -> f64 {
        self.k1
    }
    pub fn k2(&self) -> f64 {
        self.k2
    }
    pub fn k3(&self) -> f64 {
        self.k3
    }
    pub fn k4(&self) -> f64 {
        self.k4
    }

    /// `A²k1²k3/k4²`, which is both `-a22` and `Det J0`.
    pub fn q(&self) -> f64 {
        let s = self.a * self.k1 / self.k4;
        s * s * self.k3
    }

    /// Unshifted local vector field at `(U, V)`.
    pub fn rhs(&self, u: f64, v: f64) -> (f64, f64) {
        let auto = self.k3 * u * u * v;
        (
            self.k1 * self.a - (self.k2 * self.b + self.k4) * u + auto,
            self.k2 * self.b * u - auto,
        )
    }

    /// Critical `B` of the supercritical Hopf bifurcation. The fixed point
    /// is stable iff `B <= threshold`.
    pub fn hopf_threshold(&self) -> f64 {
        self.k4 / self.k2 + self.q() / self.k2
    }
}

impl LocalModel for BrusselatorParams {
    fn fixed_point(&self) -> FixedPoint {
        FixedPoint {
            u_star: self.k1 * self.a / self.k4,
            v_star: self.k2 * self.k4 * self.b / (self.a * self.k1 * self.k3),
        }
    }

    fn jacobian(&self) -> Jacobian2x2 {
        let q = self.q();
        Jacobian2x2 {
            a11: self.k2 * self.b - self.k4,
            a12: q,
            a21: -self.k2 * self.b,
            a22: -q,
        }
    }

    #[inline]
    fn rhs_shifted(&self, u: f64, v: f64) -> (f64, f64) {
        let q = self.q();
        let c_uu = self.b * self.k2 * self.k4 / (self.a * self.k1);
        let c_uv = 2.0 * self.a * self.k1 * self.k3 / self.k4;
        let nl = c_uu * u * u + c_uv * u * v + self.k3 * u * u * v;
        let kb = self.k2 * self.b;
        ((kb - self.k4) * u + q * v + nl, -kb * u - q * v - nl)
    }
}

/// Parameters of the versal unfolding of the Hopf bifurcation,
/// `dr/dt = r(nu + a r²)`, `dθ/dt = beta + b r²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalFormParams {
    nu: f64,
    beta: f64,
    a: f64,
    b: f64,
}

impl NormalFormParams {
    /// Accepts any finite coefficients; classification works for all of them.
    pub fn new(nu: f64, beta: f64, a: f64, b: f64) -> Result<Self> {
        Ok(Self {
            nu: finite("nu", nu)?,
            beta: finite("beta", beta)?,
            a: finite("a", a)?,
            b: finite("b", b)?,
        })
    }

    /// Like [`NormalFormParams::new`] but also requires the supercritical
    /// regime `a < 0` used by every simulation.
    pub fn supercritical(nu: f64, beta: f64, a: f64, b: f64) -> Result<Self> {
        let p = Self::new(nu, beta, a, b)?;
        p.require_supercritical()?;
        Ok(p)
    }

    pub fn require_supercritical(&self) -> Result<()> {
        if self.a < 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name: "a",
                value: self.a,
                reason: "cubic radial coefficient must be negative (supercritical Hopf)",
            })
        }
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }

    /// Radius of the limit cycle, `sqrt(-nu/a)`, or zero when `nu <= 0`.
    pub fn limit_cycle_radius(&self) -> Result<f64> {
        self.require_supercritical()?;
        if self.nu > 0.0 {
            Ok((-self.nu / self.a).sqrt())
        } else {
            Ok(0.0)
        }
    }
}

impl LocalModel for NormalFormParams {
    fn fixed_point(&self) -> FixedPoint {
        FixedPoint {
            u_star: 0.0,
            v_star: 0.0,
        }
    }

    fn jacobian(&self) -> Jacobian2x2 {
        Jacobian2x2 {
            a11: self.nu,
            a12: -self.beta,
            a21: self.beta,
            a22: self.nu,
        }
    }

    #[inline]
    fn rhs_shifted(&self, x: f64, y: f64) -> (f64, f64) {
        let r2 = x * x + y * y;
        (
            self.nu * x - self.beta * y + r2 * (self.a * x - self.b * y),
            self.beta * x + self.nu * y + r2 * (self.a * y + self.b * x),
        )
    }
}

/// Either of the two supported local systems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family")]
pub enum Model {
    Brusselator(BrusselatorParams),
    NormalForm(NormalFormParams),
}

impl Model {
    pub fn family(&self) -> ModelFamily {
        match self {
            Model::Brusselator(_) => ModelFamily::Brusselator,
            Model::NormalForm(_) => ModelFamily::NormalForm,
        }
    }

    /// Converts a shifted state back to original variables.
    pub fn to_original(&self, u: f64, v: f64) -> (f64, f64) {
        let fp = self.fixed_point();
        (u + fp.u_star, v + fp.v_star)
    }
}

impl LocalModel for Model {
    fn fixed_point(&self) -> FixedPoint {
        match self {
            Model::Brusselator(p) => p.fixed_point(),
            Model::NormalForm(p) => p.fixed_point(),
        }
    }

    fn jacobian(&self) -> Jacobian2x2 {
        match self {
            Model::Brusselator(p) => p.jacobian(),
            Model::NormalForm(p) => p.jacobian(),
        }
    }

    fn rhs_shifted(&self, u: f64, v: f64) -> (f64, f64) {
        match self {
            Model::Brusselator(p) => p.rhs_shifted(u, v),
            Model::NormalForm(p) => p.rhs_shifted(u, v),
        }
    }
}

impl From<BrusselatorParams> for Model {
    fn from(p: BrusselatorParams) -> Self {
        Model::Brusselator(p)
    }
}

impl From<NormalFormParams> for Model {
    fn from(p: NormalFormParams) -> Self {
        Model::NormalForm(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ModelFamily {
    Brusselator,
    NormalForm,
}

/// Steady state in original variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPoint {
    pub u_star: f64,
    pub v_star: f64,
}

/// Linearization `J0` of the local system at its fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jacobian2x2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Jacobian2x2 {
    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self { a11, a12, a21, a22 }
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    /// Relabels the components (φ1 ↔ φ2).
    pub fn swapped(&self) -> Self {
        Self {
            a11: self.a22,
            a12: self.a21,
            a21: self.a12,
            a22: self.a11,
        }
    }
}

/// Fixed point of either model.
pub fn fixed_point(model: &impl LocalModel) -> FixedPoint {
    model.fixed_point()
}

pub fn jacobian_at_fixed_point(model: &impl LocalModel) -> Jacobian2x2 {
    model.jacobian()
}

pub fn eval_rhs_shifted(model: &impl LocalModel, u: f64, v: f64) -> (f64, f64) {
    model.rhs_shifted(u, v)
}

pub fn limit_cycle_radius(params: &NormalFormParams) -> Result<f64> {
    params.limit_cycle_radius()
}

pub fn brusselator_hopf_threshold(params: &BrusselatorParams) -> f64 {
    params.hopf_threshold()
}
