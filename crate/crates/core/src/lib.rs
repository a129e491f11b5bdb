//! Linear stability, closed-form instability criteria and explicit
//! reaction-diffusion integration for two-component systems on hypercubes
//! with no-flux boundaries.

pub mod analysis;
pub mod error;
pub mod linstab;
pub mod model;
pub mod pde;
pub mod sweep;
pub mod theorems;

pub use analysis::{AsymptoticClass, AsymptoticKind, SpectrumReport, Thresholds};
pub use error::{Error, Result};
pub use linstab::{
    CutoffPolicy, DiffusionPair, DomainSpec, InstabilityClass, ModeIndex, ModeSpectrumEntry, ScanResult,
};
pub use model::{BrusselatorParams, FixedPoint, Jacobian2x2, LocalModel, Model, ModelFamily, NormalFormParams};
pub use pde::{Field, Grid, IntegratorConfig, Snapshot, Trajectory};
pub use sweep::{Axis, AxisScale, InitialCondition, RegionSummary, SimulationSpec, SweepRow, SweepSpec};
pub use theorems::{NormWindow, ThmCase, ThmOutcome, ThmParams, TuringVerdict};
