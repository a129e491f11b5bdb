//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` fail for documented reasons and are
//! reported without failing the run; any other failure exits non-zero.

mod common;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::Instant;

use common::*;
use turing_core::analysis::{classify_asymptotic, cosine_spectrum, count_spatial_periods};
use turing_core::linstab::{scan_spectrum, unstable_real_mode_range};
use turing_core::model::brusselator_hopf_threshold;
use turing_core::pde::{derive_grid, integrate, limit_cycle_ic, random_ic};
use turing_core::sweep::{region_summary, run_sweep_with};
use turing_core::theorems::{brusselator_conditions, cross_validate, thm22_predicates, thm_params};
use turing_core::{
    AsymptoticClass, AsymptoticKind, Axis, BrusselatorParams, CutoffPolicy, Field, Grid, InstabilityClass,
    IntegratorConfig, LocalModel, Model, SimulationSpec, SweepSpec, Thresholds,
};

const KNOWN_FAILURES: &[(u32, &str)] = &[
    (
        5,
        "the case f integer window can exclude the mode that is actually unstable",
    ),
    (
        6,
        "the Brusselator blocks assume a determinant lacking a factor k4, so they match the general cases only for k4 = 1",
    ),
    (
        7,
        "the selected wavelength is seed dependent; seed 2 settles on 17 half-waves",
    ),
];

const FULL_DT: f64 = 1e-3;
const FULL_STEPS: u64 = 1_000_000;
const DRAWS: usize = 1000;
const DRAW_SEED: u64 = 1;

struct Check {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Check {
    Check { pass, detail }
}

/// Full-scale 1D grid: N = 250 at dt = 0.001 with max D = 1.
fn full_grid() -> Grid {
    let (dx, _) = derive_grid(250, FULL_DT, 1.0).unwrap();
    Grid::new(1, 250, dx).unwrap()
}

fn full_run(model: &Model, field: Field) -> (AsymptoticClass, Field) {
    let d = if matches!(model, Model::Brusselator(_)) {
        p_point().1
    } else {
        normal_form_point().1
    };
    let config = IntegratorConfig::new(FULL_DT, FULL_STEPS, FULL_STEPS / 200);
    let traj = integrate(field, model, &d, &config).unwrap();
    (
        classify_asymptotic(&traj.snapshots, &Thresholds::default()),
        traj.final_field,
    )
}

fn c1() -> Check {
    let (model, d) = p_point();
    let s = scan_spectrum(&model.jacobian(), &d, &dom(1, SIDE), CutoffPolicy::Analytic).unwrap();
    let modes: Vec<_> = s.argmax_modes.iter().map(|m| m.indices().to_vec()).collect();
    check(
        s.classification == InstabilityClass::TuringInstability
            && modes == vec![vec![10]]
            && (s.capital_lambda - 10.555).abs() <= 0.01,
        format!("{:?}, argmax {modes:?}, Λ = {:.5}", s.classification, s.capital_lambda),
    )
}

fn c2() -> Check {
    let (model, d) = p_point();
    let band = unstable_real_mode_range(&model.jacobian(), &d, &dom(1, SIDE)).unwrap();
    let want: Vec<u64> = (0..=35).map(|n| n * n).collect();
    check(
        band == want,
        format!(
            "{} norms, n = {}..{}",
            band.len(),
            band.first().map_or(0, |&b| isqrt(b)),
            band.last().map_or(0, |&b| isqrt(b))
        ),
    )
}

fn isqrt(v: u64) -> u64 {
    (v as f64).sqrt().round() as u64
}

fn c3() -> Check {
    let (model, d) = p_point();
    let s = scan_spectrum(&model.jacobian(), &d, &dom(2, SIDE), CutoffPolicy::Analytic).unwrap();
    let modes: BTreeSet<Vec<u32>> = s.argmax_modes.iter().map(|m| m.indices().to_vec()).collect();
    let want: BTreeSet<Vec<u32>> = [vec![4, 9], vec![9, 4]].into();
    check(
        modes == want,
        format!("argmax {modes:?}, scanned to Σn² = {}", s.scanned_norm2_max),
    )
}

fn c4() -> Check {
    let hopf = brusselator_hopf_threshold(&BrusselatorParams::unit_rates(2.0, 1.0).unwrap());
    let trace = |b: f64| BrusselatorParams::unit_rates(2.0, b).unwrap().jacobian().trace();
    let (below, above) = (trace(5.0 - 1e-9), trace(5.0 + 1e-9));
    check(
        hopf == 5.0 && below < 0.0 && above > 0.0,
        format!("threshold {hopf}, Tr J0 = {below:.2e} / {above:.2e} across B = 5 ± 1e-9"),
    )
}

fn c5() -> Check {
    let mut draws = Draws::new(DRAW_SEED);
    let mut disagreements = Vec::new();
    for family in ["Brusselator", "NormalForm"] {
        for i in 0..DRAWS {
            let model: Model = if family == "Brusselator" {
                draws.brusselator().into()
            } else {
                draws.normal_form().into()
            };
            let (d, dm) = (draws.diffusion(), draws.domain());
            let cv = cross_validate(&model.jacobian(), &d, &dm).unwrap();
            if !cv.agree {
                disagreements.push(format!("{family} draw {i}: {}", cv.reason.unwrap_or_default()));
            }
        }
    }
    check(
        disagreements.is_empty(),
        format!(
            "{} draws per family, {} disagreements {:?}",
            DRAWS,
            disagreements.len(),
            disagreements
        ),
    )
}

/// Draws of the Brusselator blocks against the general cases b/d/e; case f
/// differences go to the report only.
fn closed_form_mismatches(unit_k4: bool, report: &mut String) -> (usize, usize) {
    let mut draws = Draws::new(DRAW_SEED);
    let (mut mismatches, mut f_mismatches) = (0, 0);
    for i in 0..DRAWS {
        let mut p = draws.brusselator();
        if unit_k4 {
            p = BrusselatorParams::new(p.a(), p.b(), p.k1(), p.k2(), p.k3(), 1.0).unwrap();
        }
        let d = draws.diffusion();
        let j = p.jacobian();
        let cases = thm22_predicates(j.trace(), j.det(), &thm_params(&j, &d, &dom(1, SIDE)).unwrap());
        let c = brusselator_conditions(&p, &d).unwrap();
        let got = [
            c.zero_mode_alpha_nonpositive.holds,
            c.zero_mode_alpha_positive.holds,
            c.stable_trace_window.holds,
        ];
        let want = [cases[1], cases[3], cases[4]];
        if got != want {
            mismatches += 1;
            let _ = writeln!(report, "{i},bde,{p:?},{d:?},closed_form={got:?},general={want:?}");
        }
        if c.complex_zero_mode.holds != cases[5] {
            f_mismatches += 1;
            let _ = writeln!(
                report,
                "{i},f,{p:?},{d:?},closed_form={},general={}",
                c.complex_zero_mode.holds, cases[5]
            );
        }
    }
    (mismatches, f_mismatches)
}

fn c6() -> Check {
    let mut report = String::from("draw,block,params,diffusion,closed_form,general\n");
    let (mismatches, f_mismatches) = closed_form_mismatches(false, &mut report);
    let (control, _) = closed_form_mismatches(true, &mut String::new());
    let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("closed_form_report.csv");
    std::fs::write(&path, report).unwrap();
    check(
        mismatches == 0,
        format!(
            "{mismatches}/{DRAWS} b/d/e mismatches (k4 = 1 control: {control}); {f_mismatches} case-f differences logged to {}",
            path.display()
        ),
    )
}

fn c7() -> Check {
    let model = p_point().0;
    let mut parts = Vec::new();
    let mut pass = true;
    for seed in [1, 2, 3] {
        let (class, field) = full_run(&model, random_ic(full_grid(), 0.01, seed).unwrap());
        let periods = count_spatial_periods(&field, Thresholds::default().theta_space).ok();
        pass &= class.kind == AsymptoticKind::TuringPattern && periods.is_some_and(|p| (6..=8).contains(&p));
        parts.push(format!("seed {seed}: {:?}, {periods:?} periods", class.kind));
    }
    check(pass, parts.join("; "))
}

fn c8() -> Check {
    let model = p_point().0;
    let (class, _) = full_run(&model, limit_cycle_ic(&model, full_grid(), 0.01, 1).unwrap());
    check(
        class.kind == AsymptoticKind::HomogeneousOscillatory,
        format!(
            "{:?} (temporal {:.3}, spatial {:.2e})",
            class.kind, class.temporal_amplitude, class.spatial_amplitude
        ),
    )
}

fn c9() -> Check {
    let (model, d) = normal_form_point();
    let s = scan_spectrum(&model.jacobian(), &d, &dom(1, SIDE), CutoffPolicy::Analytic).unwrap();
    let (class, field) = full_run(&model, random_ic(full_grid(), 0.01, 1).unwrap());
    let spec = cosine_spectrum(&field);
    let top = spec.top(5).to_vec();
    let c0 = spec.coefficients[0];
    let largest = spec.top(1).first().map_or(0.0, |&i| spec.coefficients[i].abs());
    check(
        s.classification == InstabilityClass::OscillatoryInstability
            && (s.capital_lambda - 1.0).abs() <= 1e-9
            && class.kind == AsymptoticKind::TuringPattern
            && top.iter().all(|n| (1..=30).contains(n))
            && c0.abs() > largest,
        format!(
            "{:?}, Λ = {:.12}; simulation {:?}; top-5 {top:?}; c0 = {c0:.3} vs max |c_n| = {largest:.3}",
            s.classification, s.capital_lambda, class.kind
        ),
    )
}

fn c10() -> Check {
    let (model, d) = p_point();
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [5, 10, 20] {
        let want = continuum_rate(&model, &d, SIDE, n);
        let got = measured_rate(&model, &d, SIDE, n, 1000, 1e-6, 1e-3);
        let rel = ((got - want) / want).abs();
        pass &= rel < 0.05;
        parts.push(format!("n = {n}: {got:.4} vs {want:.4} ({:.2}%)", 100.0 * rel));
    }
    check(pass, parts.join("; "))
}

fn c11() -> Check {
    let spec = SweepSpec {
        model: BrusselatorParams::unit_rates(2.0, 5.0).unwrap().into(),
        axes: [Axis::linear("D1", 0.02, 1.0, 15), Axis::linear("B", 2.0, 16.0, 15)],
        k: 1,
        side: SIDE,
        diffusion: p_point().1,
        simulation: Some(SimulationSpec::desk_scale()),
        base_seed: 1,
    };
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(8);
    let rows = run_sweep_with(&spec, workers, |_| {}).unwrap();
    let inst = |r: &&turing_core::SweepRow| r.thm_outcome == Some(turing_core::ThmOutcome::Instability);
    let pattern = |r: &&turing_core::SweepRow| r.sim_class == Some(AsymptoticKind::TuringPattern);
    let osc = |r: &&turing_core::SweepRow| r.sim_class.is_some_and(AsymptoticKind::is_oscillatory);
    let below = rows
        .iter()
        .filter(inst)
        .filter(pattern)
        .filter(|r| r.param2 < 5.0)
        .count();
    let above = rows
        .iter()
        .filter(inst)
        .filter(pattern)
        .filter(|r| r.param2 > 5.0)
        .count();
    let osc_above = rows.iter().filter(inst).filter(osc).filter(|r| r.param2 > 5.0).count();
    let summary = region_summary(&rows);
    check(
        below > 0 && above > 0 && osc_above > 0 && summary.errors == 0,
        format!(
            "Instability+TuringPattern: {below} below / {above} above B = 5; Instability+oscillatory above: {osc_above}; errors {}; {workers} workers",
            summary.errors
        ),
    )
}

fn c12() -> Check {
    let mut worst = (0.0f64, 0.0f64);
    for (model, d) in [p_point(), normal_form_point()] {
        for (k, cells) in [(1, 100), (2, 32)] {
            worst.0 = worst.0.max(equilibrium_drift(&model, &d, k, cells, 10_000));
            worst.1 = worst.1.max(mass_drift(&d, k, cells, 1000, 11));
        }
    }
    check(
        worst.0 <= 1e-12 && worst.1 <= 1e-12,
        format!("equilibrium drift {:.1e}, relative mass drift {:.1e}", worst.0, worst.1),
    )
}

type Criterion = (u32, &'static str, f64, fn() -> Check);

fn main() {
    let criteria: [Criterion; 12] = [
        (1, "instability order at P", 1.0, c1),
        (2, "unstable real band at P", 1.0, c2),
        (3, "2D orders at P", 1.0, c3),
        (4, "Hopf threshold", 1.0, c4),
        (5, "theorem-oracle equivalence", 60.0, c5),
        (6, "Brusselator closed forms", 30.0, c6),
        (7, "pattern formation at P", 120.0, c7),
        (8, "coexistence at P", 60.0, c8),
        (9, "pattern without Turing instability", 90.0, c9),
        (10, "linear growth rates", 30.0, c10),
        (11, "coarse parameter-plane regions", 900.0, c11),
        (12, "numerical hygiene", f64::INFINITY, c12),
    ];
    let filter: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut unexpected = Vec::new();
    for (id, title, budget, run) in criteria {
        if filter.is_some_and(|f| f != id) {
            continue;
        }
        let start = Instant::now();
        let c = run();
        let secs = start.elapsed().as_secs_f64();
        let pass = c.pass && secs < budget;
        let timing = if secs < budget {
            String::new()
        } else {
            format!(" over the {budget} s budget")
        };
        println!(
            "criterion {id:>2} {} [{secs:.2} s{timing}] {title}: {}",
            if pass { "PASS" } else { "FAIL" },
            c.detail
        );
        if !pass {
            match KNOWN_FAILURES.iter().find(|(k, _)| *k == id) {
                Some((_, why)) => println!("             known failure: {why}"),
                None => unexpected.push(id),
            }
        }
    }
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
