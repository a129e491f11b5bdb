//! Closed-form instability criteria and their cross-check against the
//! spectral oracle in [`crate::linstab`].
//!
//! [`classify_thm22`] handles strictly positive diffusivities (cases a–f with
//! integer mode windows), [`classify_thm23`] the case where exactly one
//! diffusivity vanishes. [`brusselator_conditions`] and
//! [`normal_form_conditions`] are the model-specific closed forms.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linstab::{self, CutoffPolicy, DiffusionPair, DomainSpec, InstabilityClass, ModeIndex, ScanResult};
use crate::model::{BrusselatorParams, Jacobian2x2, LocalModel, NormalFormParams};

/// Tolerance used to flag inputs sitting on a region boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Maximum number of witness tuples kept in a verdict.
pub const MAX_WITNESSES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThmParams {
    pub alpha: f64,
    pub delta: f64,
    pub eps: f64,
}

/// `α = (a11·D2 + a22·D1)/(D1+D2)`, `δ = D1·D2/(D1+D2)²`, `ε = 4π²(D1+D2)/S²`.
pub fn thm_params(j0: &Jacobian2x2, d: &DiffusionPair, dom: &DomainSpec) -> Result<ThmParams> {
    d.require_some()?;
    let sum = d.d1() + d.d2();
    Ok(ThmParams {
        alpha: (j0.a11 * d.d2() + j0.a22 * d.d1()) / sum,
        delta: d.d1() * d.d2() / (sum * sum),
        eps: 4.0 * PI * PI * sum / (dom.side() * dom.side()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ThmOutcome {
    Instability,
    NoInstability,
    /// The necessary inequalities hold but no admissible lattice point lies
    /// in the mode window.
    ConditionalWindowEmpty,
}

impl ThmOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            ThmOutcome::Instability => "Instability",
            ThmOutcome::NoInstability => "NoInstability",
            ThmOutcome::ConditionalWindowEmpty => "ConditionalWindowEmpty",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ThmCase {
    T22a,
    T22b,
    T22c,
    T22d,
    T22e,
    T22f,
    T23a,
    T23b,
    T23c,
    T23d,
    T23e,
    None,
}

impl ThmCase {
    pub fn as_str(self) -> &'static str {
        match self {
            ThmCase::T22a => "T22a",
            ThmCase::T22b => "T22b",
            ThmCase::T22c => "T22c",
            ThmCase::T22d => "T22d",
            ThmCase::T22e => "T22e",
            ThmCase::T22f => "T22f",
            ThmCase::T23a => "T23a",
            ThmCase::T23b => "T23b",
            ThmCase::T23c => "T23c",
            ThmCase::T23d => "T23d",
            ThmCase::T23e => "T23e",
            ThmCase::None => "None",
        }
    }
}

/// Interval on `Σ pᵢ²` with independently open or closed ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormWindow {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl NormWindow {
    pub fn open(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_closed: true,
            hi_closed: true,
        }
    }

    pub fn contains(&self, m: f64) -> bool {
        let above = if self.lo_closed { m >= self.lo } else { m > self.lo };
        let below = if self.hi_closed { m <= self.hi } else { m < self.hi };
        above && below
    }

    pub fn intersect(&self, other: &NormWindow) -> NormWindow {
        let (lo, lo_closed) = if self.lo > other.lo {
            (self.lo, self.lo_closed)
        } else if other.lo > self.lo {
            (other.lo, other.lo_closed)
        } else {
            (self.lo, self.lo_closed && other.lo_closed)
        };
        let (hi, hi_closed) = if self.hi < other.hi {
            (self.hi, self.hi_closed)
        } else if other.hi < self.hi {
            (other.hi, other.hi_closed)
        } else {
            (self.hi, self.hi_closed && other.hi_closed)
        };
        NormWindow {
            lo,
            hi,
            lo_closed,
            hi_closed,
        }
    }

    /// Integer range `[first, last]` of `m >= 1` inside the window.
    fn integer_range(&self) -> Option<(u64, u64)> {
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.hi < 1.0 {
            return None;
        }
        let mut first = if self.lo < 1.0 { 1 } else { self.lo.floor() as u64 };
        if !self.contains(first as f64) {
            first += 1;
        }
        let mut last = self.hi.floor() as u64;
        if !self.contains(last as f64) {
            last = last.checked_sub(1)?;
        }
        (first <= last).then_some((first, last))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuringVerdict {
    pub outcome: ThmOutcome,
    pub case_fired: ThmCase,
    /// Window on `Σ pᵢ²` stated with cases e) and f).
    pub window: Option<NormWindow>,
    /// Case f) only: norms whose real eigenvalue beats the complex zero mode.
    pub dominance_window: Option<NormWindow>,
    pub witnesses: Vec<ModeIndex>,
    pub infinite_order: bool,
    pub zero_mode_unstable: bool,
    /// Some inequality evaluated for this input is within [`BOUNDARY_TOL`]
    /// of equality.
    pub boundary: bool,
    pub params: ThmParams,
}

impl TuringVerdict {
    fn new(outcome: ThmOutcome, case_fired: ThmCase, params: ThmParams) -> Self {
        Self {
            outcome,
            case_fired,
            window: None,
            dominance_window: None,
            witnesses: Vec::new(),
            infinite_order: false,
            zero_mode_unstable: false,
            boundary: false,
            params,
        }
    }
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= BOUNDARY_TOL * a.abs().max(b.abs()).max(1.0)
}

fn require_det(j0: &Jacobian2x2) -> Result<()> {
    if j0.det() == 0.0 {
        Err(Error::DegenerateFixedPoint)
    } else {
        Ok(())
    }
}

/// Lattice points with `Σ pᵢ²` in `window` and `Σ pᵢ² > 0`, by increasing norm.
///
/// For `k <= 2` all tuples of each norm are listed; for `k >= 3` one
/// representative tuple per norm.
pub fn lattice_points_in(k: usize, window: &NormWindow, cap: usize) -> Vec<ModeIndex> {
    let mut out = Vec::new();
    let Some((first, last)) = window.integer_range() else {
        return out;
    };
    if k == 1 {
        let mut n = linstab::isqrt(first);
        if n * n < first {
            n += 1;
        }
        while n * n <= last && out.len() < cap {
            out.push(ModeIndex::new(vec![n as u32]));
            n += 1;
        }
        return out;
    }
    let mut m = first;
    while m <= last && out.len() < cap {
        if k == 2 {
            for mode in linstab::modes_with_norm(2, m) {
                if out.len() == cap {
                    break;
                }
                out.push(mode);
            }
        } else if let Some(mode) = sum_of_squares(k, m) {
            out.push(mode);
        }
        m += 1;
    }
    out
}

/// One representation of `m` as a sum of `k` squares (largest parts first).
fn sum_of_squares(k: usize, m: u64) -> Option<ModeIndex> {
    fn rec(k: usize, rest: u64, limit: u64, parts: &mut Vec<u32>) -> bool {
        if k == 0 {
            return rest == 0;
        }
        if rest == 0 {
            parts.extend(std::iter::repeat_n(0, k));
            return true;
        }
        let mut n = linstab::isqrt(rest).min(limit);
        // A few candidates suffice: the remainder is almost always representable.
        let mut tries = 0;
        loop {
            parts.push(n as u32);
            if rec(k - 1, rest - n * n, n, parts) {
                return true;
            }
            parts.truncate(parts.len() - 1);
            tries += 1;
            if n == 0 || tries > 64 {
                return false;
            }
            n -= 1;
        }
    }
    if k == 3 {
        // Legendre: m is a sum of three squares unless m = 4^a (8b + 7).
        let mut r = m;
        while r > 0 && r.is_multiple_of(4) {
            r /= 4;
        }
        if r % 8 == 7 {
            return None;
        }
    }
    let mut parts = Vec::with_capacity(k);
    rec(k, m, u64::MAX, &mut parts).then(|| ModeIndex::new(parts))
}

/// Open window `{ m : δε²m² − bε·m + c < 0 }`, if non-empty and positive.
fn quadratic_window(delta: f64, eps: f64, b: f64, c: f64, closed: bool) -> Option<NormWindow> {
    let disc = b * b - 4.0 * delta * c;
    if disc < 0.0 || b <= 0.0 {
        return None;
    }
    let s = disc.sqrt();
    let hi = (b + s) / (2.0 * eps * delta);
    // product of the roots is c/(δε²)
    let lo = 2.0 * c / (eps * (b + s));
    Some(if closed {
        NormWindow::closed(lo, hi)
    } else {
        NormWindow::open(lo, hi)
    })
}

/// The inequality blocks of cases a)–f), each evaluated in full.
pub fn thm22_predicates(tr: f64, det: f64, p: &ThmParams) -> [bool; 6] {
    let (alpha, delta) = (p.alpha, p.delta);
    let pos = delta > 0.0;
    let saddle = tr <= 0.0 && det < 0.0;
    let real_unstable = tr > 0.0 && 4.0 * det <= tr * tr;
    [
        pos && alpha <= 0.0 && saddle,
        pos && alpha <= 0.0 && real_unstable,
        pos && alpha > 0.0 && saddle,
        pos && alpha > 0.0 && real_unstable,
        pos && alpha > 0.0 && tr <= 0.0 && 0.0 < det && det < alpha * alpha / (4.0 * delta),
        pos && alpha > 0.0
            && 0.0 < tr
            && tr <= alpha / (2.0 * delta)
            && tr * tr < 4.0 * det
            && 4.0 * det < alpha * alpha / delta - 2.0 * tr,
    ]
}

/// Cases a)–f) for `D1 > 0`, `D2 > 0`.
pub fn classify_thm22(j0: &Jacobian2x2, d: &DiffusionPair, dom: &DomainSpec) -> Result<TuringVerdict> {
    require_det(j0)?;
    if !(d.d1() > 0.0 && d.d2() > 0.0) {
        return Err(Error::WrongDiffusionRegime(
            "both diffusivities must be positive here; use classify_thm23",
        ));
    }
    let p = thm_params(j0, d, dom)?;
    let (alpha, delta, eps) = (p.alpha, p.delta, p.eps);
    let (tr, det) = (j0.trace(), j0.det());

    let boundary = near(alpha, 0.0)
        || near(tr, 0.0)
        || near(4.0 * det, tr * tr)
        || near(det, alpha * alpha / (4.0 * delta))
        || near(tr, alpha / (2.0 * delta))
        || near(4.0 * det, alpha * alpha / delta - 2.0 * tr);

    let sufficient = |case, zero_mode| {
        let mut v = TuringVerdict::new(ThmOutcome::Instability, case, p);
        v.zero_mode_unstable = zero_mode;
        v.boundary = boundary;
        Ok(v)
    };

    let fired = thm22_predicates(tr, det, &p).iter().position(|&c| c);
    match fired {
        Some(0) => return sufficient(ThmCase::T22a, true),
        Some(1) => return sufficient(ThmCase::T22b, true),
        Some(2) => return sufficient(ThmCase::T22c, true),
        Some(3) => return sufficient(ThmCase::T22d, true),
        Some(4) => {
            let window = quadratic_window(delta, eps, alpha, det, false);
            return Ok(windowed(ThmCase::T22e, p, dom.k(), window, None, boundary));
        }
        Some(_) => {
            let window = quadratic_window(delta, eps, alpha, det + 0.5 * tr, false);
            // A mode beats the complex zero mode (Re = Tr/2) iff its point
            // lies on or below the level line y = (Tr/2)x − Tr²/4.
            let dominance = quadratic_window(delta, eps, alpha - 0.5 * tr, det - 0.25 * tr * tr, true);
            return Ok(windowed(ThmCase::T22f, p, dom.k(), window, dominance, boundary));
        }
        None => {}
    }
    let mut v = TuringVerdict::new(ThmOutcome::NoInstability, ThmCase::None, p);
    v.boundary = boundary;
    Ok(v)
}

fn windowed(
    case: ThmCase,
    p: ThmParams,
    k: usize,
    window: Option<NormWindow>,
    dominance: Option<NormWindow>,
    boundary: bool,
) -> TuringVerdict {
    let mut v = TuringVerdict::new(ThmOutcome::ConditionalWindowEmpty, case, p);
    v.boundary = boundary;
    v.window = window;
    v.dominance_window = dominance;
    let search = match (case, window, dominance) {
        (ThmCase::T22f, Some(w), Some(dw)) => Some(w.intersect(&dw)),
        (ThmCase::T22f, _, None) => None,
        (_, w, _) => w,
    };
    if let Some(w) = search {
        v.witnesses = lattice_points_in(k, &w, MAX_WITNESSES);
    }
    if !v.witnesses.is_empty() {
        v.outcome = ThmOutcome::Instability;
    }
    v
}

/// Cases a)–e) when exactly one diffusivity is zero (necessary and
/// sufficient).
pub fn classify_thm23(j0: &Jacobian2x2, d: &DiffusionPair, dom: &DomainSpec) -> Result<TuringVerdict> {
    require_det(j0)?;
    let alpha = match (d.d1() == 0.0, d.d2() == 0.0) {
        (true, true) => return Err(Error::NoDiffusion),
        (false, false) => {
            return Err(Error::WrongDiffusionRegime(
                "exactly one diffusivity must be zero here; use classify_thm22",
            ))
        }
        (true, false) => j0.a11,
        (false, true) => j0.a22,
    };
    let sum = d.d1() + d.d2();
    let p = ThmParams {
        alpha,
        delta: 0.0,
        eps: 4.0 * PI * PI * sum / (dom.side() * dom.side()),
    };
    let (tr, det) = (j0.trace(), j0.det());
    let line = det - alpha * tr;
    let boundary = near(alpha, 0.0)
        || near(tr, 0.0)
        || near(line, -alpha * alpha)
        || near(4.0 * det, tr * tr)
        || near(tr, 2.0 * alpha);

    let case = if alpha <= 0.0 {
        if tr <= 0.0 && det < 0.0 {
            ThmCase::T23a
        } else if tr > 0.0 && 4.0 * det <= tr * tr {
            ThmCase::T23b
        } else {
            ThmCase::None
        }
    } else if line <= -alpha * alpha {
        ThmCase::T23c
    } else if 4.0 * det > tr * tr && tr < 2.0 * alpha {
        ThmCase::T23d
    } else if 4.0 * det <= tr * tr {
        ThmCase::T23e
    } else {
        ThmCase::None
    };

    let outcome = if case == ThmCase::None {
        ThmOutcome::NoInstability
    } else {
        ThmOutcome::Instability
    };
    let mut v = TuringVerdict::new(outcome, case, p);
    v.boundary = boundary;
    v.infinite_order = case == ThmCase::T23d;
    v.zero_mode_unstable = matches!(case, ThmCase::T23a | ThmCase::T23b | ThmCase::T23c | ThmCase::T23e);
    Ok(v)
}

/// Dispatches to [`classify_thm22`] or [`classify_thm23`] by the diffusivities.
pub fn classify(j0: &Jacobian2x2, d: &DiffusionPair, dom: &DomainSpec) -> Result<TuringVerdict> {
    d.require_some()?;
    if d.d1() > 0.0 && d.d2() > 0.0 {
        classify_thm22(j0, d, dom)
    } else {
        classify_thm23(j0, d, dom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossValidation {
    pub verdict: TuringVerdict,
    pub scan: ScanResult,
    pub agree: bool,
    /// Which implication failed, if any.
    pub reason: Option<&'static str>,
}

/// Runs the closed-form criteria and the spectral oracle and checks them
/// against each other according to each case's logical strength.
pub fn cross_validate(j0: &Jacobian2x2, d: &DiffusionPair, dom: &DomainSpec) -> Result<CrossValidation> {
    let verdict = classify(j0, d, dom)?;
    let scan = linstab::scan_spectrum(j0, d, dom, CutoffPolicy::Analytic)?;
    let turing = scan.classification.is_turing();
    let reason = match verdict.outcome {
        ThmOutcome::Instability if !turing => Some("sufficient case fired but the oracle finds no Turing instability"),
        ThmOutcome::Instability
            if verdict.infinite_order && scan.classification != InstabilityClass::TuringInstabilityInfiniteOrder =>
        {
            Some("infinite-order case fired but the oracle maximum is attained at a finite mode")
        }
        ThmOutcome::ConditionalWindowEmpty if turing => {
            Some("mode window holds no admissible lattice point but the oracle finds a Turing instability")
        }
        ThmOutcome::NoInstability if turing => Some("oracle finds a Turing instability but no necessary case holds"),
        _ => None,
    };
    Ok(CrossValidation {
        verdict,
        scan,
        agree: reason.is_none(),
        reason,
    })
}

/// One closed-form inequality block with the truth value of each line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityBlock {
    pub label: &'static str,
    pub terms: Vec<bool>,
    pub holds: bool,
}

impl InequalityBlock {
    fn new(label: &'static str, terms: Vec<bool>) -> Self {
        let holds = !terms.is_empty() && terms.iter().all(|&t| t);
        Self { label, terms, holds }
    }

    fn inapplicable(label: &'static str) -> Self {
        Self {
            label,
            terms: Vec::new(),
            holds: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BrusselatorVerdict {
    /// Both diffusivities positive and one of the necessary blocks holds.
    NecessaryConditionHolds,
    /// One diffusivity zero and the necessary-and-sufficient block holds.
    Instability,
    NoInstability,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrusselatorConditions {
    /// Case b) of the general criterion.
    pub zero_mode_alpha_nonpositive: InequalityBlock,
    /// Case d).
    pub zero_mode_alpha_positive: InequalityBlock,
    /// Case e).
    pub stable_trace_window: InequalityBlock,
    /// Case f), diagnostic only.
    pub complex_zero_mode: InequalityBlock,
    /// `D2 = 0`.
    pub immobile_inhibitor: InequalityBlock,
    /// `D1 = 0`.
    pub immobile_activator: InequalityBlock,
    pub verdict: BrusselatorVerdict,
}

/// The Brusselator specializations of the general criteria.
pub fn brusselator_conditions(params: &BrusselatorParams, d: &DiffusionPair) -> Result<BrusselatorConditions> {
    d.require_some()?;
    let (a, b, k1, k2, k3, k4) = (
        params.a(),
        params.b(),
        params.k1(),
        params.k2(),
        params.k3(),
        params.k4(),
    );
    let base = k4 / k2;
    let q_k2 = params.q() / k2; // A²k1²k3/(k2k4²)
    let hopf = base + q_k2;
    let root = 2.0 * a * k1 * k3.sqrt() / (k2 * k4);
    let (d1, d2) = (d.d1(), d.d2());

    let (nonpositive, positive, trace_window, complex) = if d2 > 0.0 && d1 > 0.0 {
        let r = d1 / d2;
        let complex_last = base + q_k2 * r + r / k2 + (2.0 * q_k2 * r + 2.0 * q_k2 * r * r + r * r / (k2 * k2)).sqrt();
        (
            InequalityBlock::new(
                "zero_mode_alpha_nonpositive",
                vec![b <= base + q_k2 * r, b > hopf, b >= hopf + root],
            ),
            InequalityBlock::new("zero_mode_alpha_positive", vec![b > base + q_k2 * r, b >= hopf + root]),
            InequalityBlock::new(
                "stable_trace_window",
                vec![b <= hopf, b > base + q_k2 * r + root * r.sqrt()],
            ),
            InequalityBlock::new(
                "complex_zero_mode",
                vec![d1 <= d2, b > hopf, b < hopf + root, b > complex_last],
            ),
        )
    } else {
        (
            InequalityBlock::inapplicable("zero_mode_alpha_nonpositive"),
            InequalityBlock::inapplicable("zero_mode_alpha_positive"),
            InequalityBlock::inapplicable("stable_trace_window"),
            InequalityBlock::inapplicable("complex_zero_mode"),
        )
    };
    let inhibitor = InequalityBlock::new("immobile_inhibitor", vec![d1 > 0.0, d2 == 0.0, b >= hopf + root]);
    let activator = InequalityBlock::new("immobile_activator", vec![d1 == 0.0, d2 > 0.0, b > base]);

    let verdict = if d1 > 0.0 && d2 > 0.0 {
        if nonpositive.holds || positive.holds || trace_window.holds || complex.holds {
            BrusselatorVerdict::NecessaryConditionHolds
        } else {
            BrusselatorVerdict::NoInstability
        }
    } else if inhibitor.holds || activator.holds {
        BrusselatorVerdict::Instability
    } else {
        BrusselatorVerdict::NoInstability
    };

    Ok(BrusselatorConditions {
        zero_mode_alpha_nonpositive: nonpositive,
        zero_mode_alpha_positive: positive,
        stable_trace_window: trace_window,
        complex_zero_mode: complex,
        immobile_inhibitor: inhibitor,
        immobile_activator: activator,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NormalFormConditions {
    /// `ν > 0`, both `D > 0`, `β = 0`: necessary and sufficient.
    pub rotation_free: bool,
    /// `ν > 0`, both `D > 0`, `β ≠ 0`, `β² < ν²(D1−D2)²/(4D1D2) − ν`: necessary.
    pub rotating: bool,
    /// `ν > 0`, `D1 = 0`, `D2 > 0`.
    pub first_immobile: bool,
    /// `ν > 0`, `D1 > 0`, `D2 = 0`.
    pub second_immobile: bool,
}

pub fn normal_form_conditions(params: &NormalFormParams, d: &DiffusionPair) -> NormalFormConditions {
    let (nu, beta) = (params.nu(), params.beta());
    let (d1, d2) = (d.d1(), d.d2());
    let both = d1 > 0.0 && d2 > 0.0;
    NormalFormConditions {
        rotation_free: nu > 0.0 && both && beta == 0.0,
        rotating: nu > 0.0
            && both
            && beta != 0.0
            && beta * beta < nu * nu * (d1 - d2) * (d1 - d2) / (4.0 * d1 * d2) - nu,
        first_immobile: nu > 0.0 && d1 == 0.0 && d2 > 0.0,
        second_immobile: nu > 0.0 && d1 > 0.0 && d2 == 0.0,
    }
}

/// Verdict of the closed forms evaluated on a concrete model.
pub fn classify_model(model: &impl LocalModel, d: &DiffusionPair, dom: &DomainSpec) -> Result<TuringVerdict> {
    classify(&model.jacobian(), d, dom)
}
