//! Classification of simulated asymptotics, cosine spectra and period counts.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::pde::{Field, Snapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum AsymptoticKind {
    HomogeneousStationary,
    TuringPattern,
    HomogeneousOscillatory,
    InhomogeneousOscillatory,
    Undecided,
}

impl AsymptoticKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AsymptoticKind::HomogeneousStationary => "HomogeneousStationary",
            AsymptoticKind::TuringPattern => "TuringPattern",
            AsymptoticKind::HomogeneousOscillatory => "HomogeneousOscillatory",
            AsymptoticKind::InhomogeneousOscillatory => "InhomogeneousOscillatory",
            AsymptoticKind::Undecided => "Undecided",
        }
    }

    pub fn is_oscillatory(self) -> bool {
        matches!(
            self,
            AsymptoticKind::HomogeneousOscillatory | AsymptoticKind::InhomogeneousOscillatory
        )
    }
}

/// Decision thresholds for [`classify_asymptotic`].
///
/// The window counts as stationary when its temporal amplitude is below
/// `max(theta_time, theta_time_relative · range)`, where `range` is the
/// largest spread of either component over the window. The relative term
/// lets slowly relaxing large-amplitude patterns count as stationary; set it
/// to zero for a purely absolute test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub theta_time: f64,
    pub theta_time_relative: f64,
    pub theta_space: f64,
    /// Trailing fraction of the snapshots forming the analysis window.
    pub window_fraction: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            theta_time: 1e-3,
            theta_time_relative: 0.25,
            theta_space: 1e-3,
            window_fraction: 0.1,
        }
    }
}

impl Thresholds {
    /// Absolute thresholds only.
    pub fn absolute(theta_time: f64, theta_space: f64) -> Self {
        Self {
            theta_time,
            theta_time_relative: 0.0,
            theta_space,
            window_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticClass {
    pub kind: AsymptoticKind,
    /// `max |φ(x,t) − φ(x,t_end)|` over the window, both components.
    pub temporal_amplitude: f64,
    /// `max φ₁ − min φ₁` at the last snapshot.
    pub spatial_amplitude: f64,
    /// Largest spread of either component over the whole window.
    pub window_range: f64,
    pub window_len: usize,
}

/// Classifies the trailing window of `snapshots` into one of the four
/// stationary/oscillatory × homogeneous/patterned quadrants.
pub fn classify_asymptotic(snapshots: &[Snapshot], th: &Thresholds) -> AsymptoticClass {
    let fields: Vec<&Field> = snapshots.iter().map(|s| &s.field).collect();
    classify_fields(&fields, th)
}

/// [`classify_asymptotic`] over bare fields in time order.
pub fn classify_fields(fields: &[&Field], th: &Thresholds) -> AsymptoticClass {
    let window_len = ((fields.len() as f64 * th.window_fraction).ceil() as usize).min(fields.len());
    let Some(last) = fields.last() else {
        return AsymptoticClass {
            kind: AsymptoticKind::Undecided,
            temporal_amplitude: f64::NAN,
            spatial_amplitude: f64::NAN,
            window_range: f64::NAN,
            window_len: 0,
        };
    };
    let spatial_amplitude = peak_to_peak(&last.phi1);
    let window = &fields[fields.len() - window_len..];
    let temporal_amplitude = window.iter().map(|f| f.max_abs_diff(last)).fold(0.0, f64::max);
    let spread = |pick: fn(&Field) -> &[f64]| {
        peak_to_peak(&window.iter().flat_map(|f| pick(f).iter().copied()).collect::<Vec<_>>())
    };
    let window_range = spread(|f| &f.phi1).max(spread(|f| &f.phi2));
    let theta_time = th.theta_time.max(th.theta_time_relative * window_range);
    let kind = if window_len < 2 {
        AsymptoticKind::Undecided
    } else {
        match (temporal_amplitude < theta_time, spatial_amplitude < th.theta_space) {
            (true, true) => AsymptoticKind::HomogeneousStationary,
            (true, false) => AsymptoticKind::TuringPattern,
            (false, true) => AsymptoticKind::HomogeneousOscillatory,
            (false, false) => AsymptoticKind::InhomogeneousOscillatory,
        }
    };
    AsymptoticClass {
        kind,
        temporal_amplitude,
        spatial_amplitude,
        window_range,
        window_len,
    }
}

pub fn peak_to_peak(values: &[f64]) -> f64 {
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    if values.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    /// `c_n` of φ₁ for `0 <= n < N/2`; `c_0` is the mean.
    pub coefficients: Vec<f64>,
    /// Same projection of φ₂.
    pub coefficients2: Vec<f64>,
    /// Indices `n >= 1` ordered by decreasing `|c_n|`.
    pub dominant_indices: Vec<usize>,
}

impl SpectrumReport {
    pub fn top(&self, j: usize) -> &[usize] {
        &self.dominant_indices[..j.min(self.dominant_indices.len())]
    }
}

/// Projection of samples at `x_i = (i + 1/2)·S/N` onto `cos(π·m·x/S)` for
/// `m = 0, step, 2·step, …` below `N`, scaled by `2/N` (mean for `m = 0`).
fn project(values: &[f64], step: usize) -> Vec<f64> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut out = vec![mean];
    let mut m = step;
    while m < n {
        let sum: f64 = values
            .iter()
            .enumerate()
            .map(|(i, v)| v * (PI * m as f64 * (i as f64 + 0.5) / n as f64).cos())
            .sum();
        out.push(2.0 * sum / n as f64);
        m += step;
    }
    out
}

fn rank(coefficients: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (1..coefficients.len()).collect();
    idx.sort_by(|&a, &b| coefficients[b].abs().total_cmp(&coefficients[a].abs()).then(a.cmp(&b)));
    idx
}

/// Full-wave cosine spectrum `c_n = (2/N) Σ φ(x_i) cos(2πn x_i/S)`.
///
/// 2D fields are projected along `x` after averaging over `y`; see
/// [`cosine_spectrum_axis`] for the other axis.
pub fn cosine_spectrum(field: &Field) -> SpectrumReport {
    cosine_spectrum_axis(field, 1)
}

/// Spectrum of the profile along `y` (`axis = 0`) or `x` (`axis = 1`).
pub fn cosine_spectrum_axis(field: &Field, axis: usize) -> SpectrumReport {
    let p1 = Field::axis_profile(&field.phi1, field.grid(), axis);
    let p2 = Field::axis_profile(&field.phi2, field.grid(), axis);
    let coefficients = project(&p1, 2);
    SpectrumReport {
        dominant_indices: rank(&coefficients),
        coefficients2: project(&p2, 2),
        coefficients,
    }
}

/// Half-wave projection onto `cos(πj x/S)`, `0 <= j < N`: the eigenbasis of
/// the Neumann Laplacian, for comparison with [`cosine_spectrum`].
pub fn half_wave_spectrum(field: &Field) -> SpectrumReport {
    let p1 = Field::axis_profile(&field.phi1, field.grid(), 1);
    let p2 = Field::axis_profile(&field.phi2, field.grid(), 1);
    let coefficients = project(&p1, 1);
    SpectrumReport {
        dominant_indices: rank(&coefficients),
        coefficients2: project(&p2, 1),
        coefficients,
    }
}

/// Dead band, relative to the peak-to-peak amplitude, inside which sign
/// changes of `φ₁ − mean` are ignored.
pub const DEAD_BAND_FRACTION: f64 = 0.05;
/// Absolute floor of the dead band.
pub const DEAD_BAND_FLOOR: f64 = 1e-9;

/// Half the number of sign changes of `φ₁ − mean`, rounded.
///
/// A change only counts once the profile leaves the dead band on the other
/// side, so noise around a zero crossing is coalesced. 2D fields use the
/// profile along `x`.
pub fn count_spatial_periods(field: &Field, theta_space: f64) -> Result<usize> {
    let profile = Field::axis_profile(&field.phi1, field.grid(), 1);
    let amplitude = peak_to_peak(&profile);
    if amplitude.is_nan() || amplitude < theta_space || amplitude == 0.0 {
        return Err(Error::HomogeneousField { amplitude });
    }
    let mean = profile.iter().sum::<f64>() / profile.len() as f64;
    let band = (DEAD_BAND_FRACTION * amplitude).max(DEAD_BAND_FLOOR);
    let mut sign = 0i8;
    let mut changes = 0usize;
    for v in profile {
        let dev = v - mean;
        let s = if dev > band {
            1
        } else if dev < -band {
            -1
        } else {
            continue;
        };
        if sign != 0 && s != sign {
            changes += 1;
        }
        sign = s;
    }
    Ok(changes.div_ceil(2))
}
