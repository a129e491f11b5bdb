//! Brute-force spectral oracle.
//!
//! Enumerates the cosine eigenmodes of the linearized system on `[0, S]^k`,
//! evaluates the dispersion relation for each mode norm `Σ nᵢ²`, and
//! classifies the instability from the resulting spectral abscissa `Λ`.
//! Nothing here depends on [`crate::theorems`]; the two are compared by
//! [`crate::theorems::cross_validate`].

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::Jacobian2x2;

/// Absolute tolerance for reporting ties in the spectral maximum.
pub const ARGMAX_TOL: f64 = 1e-12;

/// Domain `[0, S]^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DomainSpec {
    k: usize,
    s: f64,
}

impl DomainSpec {
    pub fn new(k: usize, s: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter {
                name: "k",
                value: 0.0,
                reason: "spatial dimension must be at least 1",
            });
        }
        Ok(Self {
            k,
            s: crate::error::positive("S", s)?,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn side(&self) -> f64 {
        self.s
    }

    /// `4π² m / S²`, the Laplacian eigenvalue magnitude of a mode with norm `m`.
    #[inline]
    pub fn wavenumber2(&self, norm2: u64) -> f64 {
        4.0 * PI * PI * norm2 as f64 / (self.s * self.s)
    }
}

/// Diffusion coefficients of the two components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiffusionPair {
    d1: f64,
    d2: f64,
}

impl DiffusionPair {
    pub fn new(d1: f64, d2: f64) -> Result<Self> {
        for (name, v) in [("D1", d1), ("D2", d2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "diffusion coefficient must be finite and non-negative",
                });
            }
        }
        Ok(Self { d1, d2 })
    }

    pub fn d1(&self) -> f64 {
        self.d1
    }

    pub fn d2(&self) -> f64 {
        self.d2
    }

    pub fn max(&self) -> f64 {
        self.d1.max(self.d2)
    }

    pub fn swapped(&self) -> Self {
        Self {
            d1: self.d2,
            d2: self.d1,
        }
    }

    pub(crate) fn require_some(&self) -> Result<()> {
        if self.d1 + self.d2 > 0.0 {
            Ok(())
        } else {
            Err(Error::NoDiffusion)
        }
    }
}

/// Eigenmode order `(n1, …, nk)`.
///
/// Ordered by `Σ nᵢ²` first; tuples of equal norm are ordered
/// lexicographically so that the order is total.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModeIndex {
    indices: Vec<u32>,
}

impl ModeIndex {
    pub fn new(indices: Vec<u32>) -> Self {
        Self { indices }
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn norm2(&self) -> u64 {
        self.indices.iter().map(|&n| u64::from(n) * u64::from(n)).sum()
    }
}

impl Ord for ModeIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.norm2()
            .cmp(&other.norm2())
            .then_with(|| self.indices.cmp(&other.indices))
    }
}

impl PartialOrd for ModeIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, n) in self.indices.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ")")
    }
}

impl Serialize for ModeIndex {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.indices.serialize(serializer)
    }
}

/// One row of the dispersion table.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrumEntry {
    pub mode: ModeIndex,
    pub trace: f64,
    pub det: f64,
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
}

impl ModeSpectrumEntry {
    pub fn is_real(&self) -> bool {
        self.lambda_plus.im == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum InstabilityClass {
    Stable,
    TuringInstability,
    OscillatoryInstability,
    TuringInstabilityInfiniteOrder,
}

impl InstabilityClass {
    pub fn is_turing(self) -> bool {
        matches!(
            self,
            InstabilityClass::TuringInstability | InstabilityClass::TuringInstabilityInfiniteOrder
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InstabilityClass::Stable => "Stable",
            InstabilityClass::TuringInstability => "TuringInstability",
            InstabilityClass::OscillatoryInstability => "OscillatoryInstability",
            InstabilityClass::TuringInstabilityInfiniteOrder => "TuringInstabilityInfiniteOrder",
        }
    }
}

/// How far the mode enumeration goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CutoffPolicy {
    /// Bound derived from a Gershgorin estimate of the mode matrices; the
    /// discrete maximum over the scanned set equals the true `Λ`.
    #[default]
    Analytic,
    /// Scan `Σ nᵢ² <= max_norm2` only.
    MaxNorm2(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub capital_lambda: f64,
    pub argmax_modes: Vec<ModeIndex>,
    pub classification: InstabilityClass,
    pub scanned_norm2_max: u64,
    /// `lim Re λ⁺` as `Σ nᵢ² → ∞` when exactly one diffusivity vanishes.
    pub asymptotic_limit: Option<f64>,
    pub entries: Option<Vec<ModeSpectrumEntry>>,
}

impl ScanResult {
    /// Norm of the argmax modes (all share it up to the tie tolerance).
    pub fn argmax_norm2(&self) -> Option<u64> {
        self.argmax_modes.first().map(ModeIndex::norm2)
    }
}

/// Trace and determinant of the mode matrix `J_n` for `Σ nᵢ² = norm2`.
pub fn mode_trace_det(j0: &Jacobian2x2, d: &DiffusionPair, dom: &DomainSpec, norm2: u64) -> (f64, f64) {
    let e = dom.wavenumber2(norm2);
    let trace = j0.trace() - (d.d1 + d.d2) * e;
    let det = j0.det() - (j0.a11 * d.d2 + j0.a22 * d.d1) * e + d.d1 * d.d2 * e * e;
    (trace, det)
}

/// Roots of `λ² - trace·λ + det`, `λ⁺` carrying the `+` branch.
pub fn mode_eigenvalues(trace: f64, det: f64) -> (Complex64, Complex64) {
    let disc = trace * trace - 4.0 * det;
    if disc < 0.0 {
        let im = 0.5 * (-disc).sqrt();
        let re = 0.5 * trace;
        (Complex64::new(re, im), Complex64::new(re, -im))
    } else {
        let s = disc.sqrt();
        (
            Complex64::new(0.5 * (trace + s), 0.0),
            Complex64::new(0.5 * (trace - s), 0.0),
        )
    }
}

/// `Re λ⁺` seen as a function on the trace–determinant plane.
pub fn growth_function(x: f64, y: f64) -> f64 {
    let disc = x * x - 4.0 * y;
    if disc < 0.0 {
        0.5 * x
    } else {
        0.5 * (x + disc.sqrt())
    }
}

/// The curve `y(x) = Det J0 + α(x − Tr J0) + δ(x − Tr J0)²` on which every
/// mode's `(Tr J_n, Det J_n)` lies. With one vanishing diffusivity it
/// degenerates to a line of slope `a11` (`D1 = 0`) or `a22` (`D2 = 0`).
pub fn trace_det_parabola(j0: &Jacobian2x2, d: &DiffusionPair) -> Result<impl Fn(f64) -> f64> {
    d.require_some()?;
    let sum = d.d1 + d.d2;
    let alpha = (j0.a11 * d.d2 + j0.a22 * d.d1) / sum;
    let delta = d.d1 * d.d2 / (sum * sum);
    let (tr0, det0) = (j0.trace(), j0.det());
    Ok(move |x: f64| {
        let dx = x - tr0;
        det0 + alpha * dx + delta * dx * dx
    })
}

/// Every norm `m <= max` expressible as a sum of `k` squares.
pub fn representable_norms(k: usize, max: u64) -> Vec<u64> {
    let size = max as usize + 1;
    let mut reach = vec![false; size];
    let mut n = 0u64;
    while n * n <= max {
        reach[(n * n) as usize] = true;
        n += 1;
    }
    match k {
        1 => {}
        2 => {
            // direct enumeration of pairs
            let top = isqrt(max);
            for n1 in 0..=top {
                for n2 in n1..=top {
                    let m = n1 * n1 + n2 * n2;
                    if m > max {
                        break;
                    }
                    reach[m as usize] = true;
                }
            }
        }
        _ => {
            for _ in 1..k {
                let prev = reach.clone();
                for (m, _) in prev.iter().enumerate().filter(|(_, &r)| r) {
                    let mut n = 1u64;
                    while m as u64 + n * n <= max {
                        reach[m + (n * n) as usize] = true;
                        n += 1;
                    }
                }
            }
        }
    }
    reach
        .iter()
        .enumerate()
        .filter_map(|(m, &r)| r.then_some(m as u64))
        .collect()
}

/// All index tuples with `Σ nᵢ² = norm2`, in lexicographic order.
pub fn modes_with_norm(k: usize, norm2: u64) -> Vec<ModeIndex> {
    fn rec(k: usize, rest: u64, prefix: &mut Vec<u32>, out: &mut Vec<ModeIndex>) {
        if k == 1 {
            let n = isqrt(rest);
            if n * n == rest {
                prefix.push(n as u32);
                out.push(ModeIndex::new(prefix.clone()));
                prefix.pop();
            }
            return;
        }
        let mut n = 0u64;
        while n * n <= rest {
            prefix.push(n as u32);
            rec(k - 1, rest - n * n, prefix, out);
            prefix.pop();
            n += 1;
        }
    }
    let mut out = Vec::new();
    rec(k, norm2, &mut Vec::with_capacity(k), &mut out);
    out
}

pub(crate) fn isqrt(m: u64) -> u64 {
    let mut r = (m as f64).sqrt() as u64;
    while r * r > m {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= m {
        r += 1;
    }
    r
}

struct NormEval {
    norm2: u64,
    trace: f64,
    det: f64,
    lp: Complex64,
    lm: Complex64,
}

fn eval_norm(j0: &Jacobian2x2, d: &DiffusionPair, dom: &DomainSpec, norm2: u64) -> NormEval {
    let (trace, det) = mode_trace_det(j0, d, dom, norm2);
    let (lp, lm) = mode_eigenvalues(trace, det);
    NormEval {
        norm2,
        trace,
        det,
        lp,
        lm,
    }
}

/// `M*` for strictly positive diffusivities.
fn analytic_cutoff(j0: &Jacobian2x2, d: &DiffusionPair, dom: &DomainSpec, best: f64) -> u64 {
    let bound = j0.a11.max(j0.a22) + (j0.a12 * j0.a21).abs().sqrt() + best.abs();
    let s2 = dom.side() * dom.side();
    let m = (s2 * bound.max(0.0) / (4.0 * PI * PI * d.d1.min(d.d2))).ceil();
    m as u64 + 1
}

fn validate(j0: &Jacobian2x2, d: &DiffusionPair) -> Result<()> {
    if j0.det() == 0.0 {
        return Err(Error::DegenerateFixedPoint);
    }
    d.require_some()
}

/// Computes `Λ`, its argmax modes and the instability class.
pub fn scan_spectrum(
    j0: &Jacobian2x2,
    d: &DiffusionPair,
    dom: &DomainSpec,
    cutoff: CutoffPolicy,
) -> Result<ScanResult> {
    scan(j0, d, dom, cutoff, false)
}

/// [`scan_spectrum`] that also keeps the per-mode table.
pub fn scan_spectrum_with_entries(
    j0: &Jacobian2x2,
    d: &DiffusionPair,
    dom: &DomainSpec,
    cutoff: CutoffPolicy,
) -> Result<ScanResult> {
    scan(j0, d, dom, cutoff, true)
}

fn scan(j0: &Jacobian2x2, d: &DiffusionPair, dom: &DomainSpec, cutoff: CutoffPolicy, keep: bool) -> Result<ScanResult> {
    validate(j0, d)?;
    let zero = eval_norm(j0, d, dom, 0);
    let one_zero = d.d1 == 0.0 || d.d2 == 0.0;

    let (max_norm2, limit) = match (cutoff, one_zero) {
        (CutoffPolicy::MaxNorm2(m), false) => (m, None),
        (CutoffPolicy::MaxNorm2(m), true) => (m, Some(degenerate_limit(j0, d))),
        (CutoffPolicy::Analytic, false) => (analytic_cutoff(j0, d, dom, zero.lp.re), None),
        (CutoffPolicy::Analytic, true) => {
            let m = degenerate_cutoff(j0, d, dom);
            (m, Some(degenerate_limit(j0, d)))
        }
    };

    let evals: Vec<NormEval> = representable_norms(dom.k(), max_norm2)
        .into_iter()
        .map(|m| eval_norm(j0, d, dom, m))
        .collect();

    let finite_best = evals.iter().map(|e| e.lp.re).fold(f64::NEG_INFINITY, f64::max);

    // The supremum is approached only in the limit when it strictly exceeds
    // every finite mode and the finite modes never reach it.
    let limit_dominates = match limit {
        Some(l) => l > finite_best + ARGMAX_TOL && j0.a12 * j0.a21 < 0.0,
        None => false,
    };

    let (capital_lambda, argmax_modes, classification) = if limit_dominates {
        let l = limit.unwrap_or(finite_best);
        let class = if l > 0.0 {
            InstabilityClass::TuringInstabilityInfiniteOrder
        } else {
            InstabilityClass::Stable
        };
        (l, Vec::new(), class)
    } else {
        let winners: Vec<&NormEval> = evals
            .iter()
            .filter(|e| (e.lp.re - finite_best).abs() <= ARGMAX_TOL)
            .collect();
        let class = if finite_best <= 0.0 {
            InstabilityClass::Stable
        } else if winners.iter().any(|e| e.lp.im == 0.0) {
            InstabilityClass::TuringInstability
        } else {
            InstabilityClass::OscillatoryInstability
        };
        let mut modes: Vec<ModeIndex> = winners.iter().flat_map(|e| modes_with_norm(dom.k(), e.norm2)).collect();
        modes.sort();
        (finite_best, modes, class)
    };

    let entries = keep.then(|| {
        let mut rows = Vec::new();
        for e in &evals {
            for mode in modes_with_norm(dom.k(), e.norm2) {
                rows.push(ModeSpectrumEntry {
                    mode,
                    trace: e.trace,
                    det: e.det,
                    lambda_plus: e.lp,
                    lambda_minus: e.lm,
                });
            }
        }
        rows
    });

    Ok(ScanResult {
        capital_lambda,
        argmax_modes,
        classification,
        scanned_norm2_max: max_norm2,
        asymptotic_limit: limit,
        entries,
    })
}

/// `lim Re λ⁺` for large mode norms when one diffusivity is zero: the
/// diagonal entry of the non-diffusing component.
fn degenerate_limit(j0: &Jacobian2x2, d: &DiffusionPair) -> f64 {
    if d.d1 == 0.0 {
        j0.a11
    } else {
        j0.a22
    }
}

/// Finite scan bound when one diffusivity is zero.
///
/// With `g(m) = D·e(m) + a_other − α` and `p = a12·a21`, every mode with
/// `g > 0` satisfies `Re λ⁺ <= α + max(p, 0)/g`. For `p <= 0` nothing beyond
/// `g > 0` exceeds `α`; for `p > 0` the bound decays and the scan stops once
/// it falls below the best finite value.
fn degenerate_cutoff(j0: &Jacobian2x2, d: &DiffusionPair, dom: &DomainSpec) -> u64 {
    let (alpha, other, dpos) = if d.d1 == 0.0 {
        (j0.a11, j0.a22, d.d2)
    } else {
        (j0.a22, j0.a11, d.d1)
    };
    let p = j0.a12 * j0.a21;
    let per_norm = dpos * 4.0 * PI * PI / (dom.side() * dom.side());
    let g = |m: u64| per_norm * m as f64 + other - alpha;
    let first_positive = (((alpha - other) / per_norm).max(0.0).floor() as u64) + 1;
    if p <= 0.0 {
        return first_positive;
    }
    let mut max = first_positive.max(1);
    let mut best = f64::NEG_INFINITY;
    let mut scanned = 0u64;
    let mut first = true;
    loop {
        for m in representable_norms(dom.k(), max) {
            if first || m > scanned {
                best = best.max(eval_norm(j0, d, dom, m).lp.re);
            }
        }
        first = false;
        scanned = max;
        if best > alpha && g(max) > 0.0 && alpha + p / g(max) < best {
            return max;
        }
        max = max * 2 + 1;
    }
}

/// Norms (within the cutoff) whose `λ⁺` is real and strictly positive.
pub fn unstable_real_mode_range(j0: &Jacobian2x2, d: &DiffusionPair, dom: &DomainSpec) -> Result<Vec<u64>> {
    let scan = scan_spectrum_with_entries(j0, d, dom, CutoffPolicy::Analytic)?;
    let mut out: Vec<u64> = scan
        .entries
        .unwrap_or_default()
        .iter()
        .filter(|e| e.is_real() && e.lambda_plus.re > 0.0)
        .map(|e| e.mode.norm2())
        .collect();
    out.dedup();
    Ok(out)
}

/// Writes the dispersion table as CSV.
pub fn write_spectrum_csv<W: Write>(entries: &[ModeSpectrumEntry], mut w: W) -> io::Result<()> {
    writeln!(
        w,
        "norm2,n_indices,trace,det,re_lambda_plus,im_lambda_plus,re_lambda_minus,im_lambda_minus"
    )?;
    for e in entries {
        let idx: Vec<String> = e.mode.indices().iter().map(u32::to_string).collect();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            e.mode.norm2(),
            idx.join(";"),
            e.trace,
            e.det,
            e.lambda_plus.re,
            e.lambda_plus.im,
            e.lambda_minus.re,
            e.lambda_minus.im
        )?;
    }
    Ok(())
}
