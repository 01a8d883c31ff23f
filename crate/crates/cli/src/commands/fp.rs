//! Fokker–Planck runs: spectrum, decomposition, decay and resolvent scans.

use std::path::Path;

use enlarge_core::enlargement::{
    check_h2, check_h4, enlargement_bound_chain, EmbeddedSpacePair, Verdict, Witness, XiSampler, YGrid,
};
use enlarge_core::fokker_planck::decomposition::dense_split;
use enlarge_core::fokker_planck::experiment::REFERENCE_LIMIT;
use enlarge_core::fokker_planck::scan::shifted_frame_bound;
use enlarge_core::fokker_planck::{
    decay_experiment, find_decomposition, resolvent_scan_fp, spectral_gap_h, uniform_decay_envelope, FPDiscretization,
    FpProblem, SearchBox, SparseOperator, SpectralGap,
};
use enlarge_core::io::matrix_market::write_real_coordinate;
use enlarge_core::io::table::Table;
use enlarge_core::operator::{Scheme, WeightedSpace};
use enlarge_core::par::Execution;
use enlarge_core::{Complex64, Tolerances};

use crate::config::{Command, ProblemRef, RunConfig};
use crate::report::{CheckRecord, RunReport};
use crate::CliError;

/// Mass defect allowed relative to the largest generator entry.
const MASS_TOL: f64 = 1e-13;
/// Null-vector defect allowed for the symmetric part.
const NULL_TOL: f64 = 1e-14;
/// Symmetry defect allowed for the symmetrized symmetric part.
const SYMMETRY_TOL: f64 = 1e-13;
/// Largest relative gap between the sparse and dense scans.
const SCAN_AGREEMENT: f64 = 1e-6;
/// Largest dense cross-check of the sparse scan.
const DENSE_SCAN_LIMIT: usize = 400;

fn pass_if(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn message(reason: impl Into<String>) -> Option<Witness> {
    Some(Witness::Message { reason: reason.into() })
}

fn save_operator(dir: &Path, name: &str, op: &SparseOperator, report: &mut RunReport) -> Result<(), CliError> {
    let f = std::fs::File::create(dir.join(name))?;
    write_real_coordinate(std::io::BufWriter::new(f), op.dim(), op.dim(), op.triplets())?;
    report.artifact(name);
    Ok(())
}

fn structure_checks(disc: &FPDiscretization, gap: &SpectralGap, tol: &Tolerances, report: &mut RunReport) {
    let s = disc.structure();
    report.push(CheckRecord::new(
        "mass-conservation",
        pass_if(s.mass_defect <= MASS_TOL),
        None,
        &[("column_sum_defect", s.mass_defect), ("tolerance", MASS_TOL)],
    ));
    report.push(CheckRecord::new(
        "equilibrium-null-vector",
        pass_if(s.null_defect <= NULL_TOL && s.skew_null_defect <= MASS_TOL),
        None,
        &[("symmetric_defect", s.null_defect), ("skew_defect", s.skew_null_defect), ("tolerance", NULL_TOL)],
    ));
    report.push(CheckRecord::new(
        "h-symmetry",
        pass_if(s.symmetry_defect <= SYMMETRY_TOL),
        None,
        &[("symmetry_defect", s.symmetry_defect), ("tolerance", SYMMETRY_TOL)],
    ));
    let scale = disc.symmetric.norm_bound().max(1.0);
    report.push(CheckRecord::new(
        "nonpositivity",
        pass_if(gap.top <= tol.eig * scale && gap.lambda_p < 0.0),
        None,
        &[("top", gap.top), ("lambda_P", gap.lambda_p), ("band", tol.eig * scale)],
    ));
}

fn coarse(problem: &FpProblem) -> Result<FPDiscretization, CliError> {
    let mut p = problem.clone();
    p.n = match p.d {
        1 => p.n.min(64),
        _ => p.n.min(12),
    };
    Ok(p.discretization()?)
}

/// Times at which the dense envelope is evaluated: at most 61 of the
/// recording times, always including the first.
fn thinned(times: &[f64]) -> Vec<usize> {
    let stride = (times.len() - 1).div_ceil(60).max(1);
    (0..times.len()).step_by(stride).collect()
}

pub fn run_fp(cfg: &RunConfig, exec: Execution) -> Result<RunReport, CliError> {
    let tol = cfg.tolerances()?;
    let problem = cfg.problem()?;
    let mut effective = cfg.clone();
    effective.problem = Some(ProblemRef::Inline(Box::new(problem.clone())));
    let mut report = RunReport::new(effective, tol);
    let disc = problem.discretization()?;
    let gap = spectral_gap_h(&disc, &tol)?;
    structure_checks(&disc, &gap, &tol, &mut report);
    report.constant("lambda_P", gap.lambda_p);
    report.constant("h", disc.grid.h);
    report.note(
        "abscissa-interval",
        "rates are taken in (lambda_P, 0) with lambda_P < 0; the interval (-lambda_P, 0) would be empty",
    );
    report.note(
        "poincare-constant",
        "lambda_P is the second eigenvalue of the symmetric part symmetrized in L2(1/mu)",
    );
    let a = problem.target_a.unwrap_or(0.5 * gap.lambda_p);
    if !(gap.lambda_p < a && a < 0.0) {
        return Err(CliError::Config(format!(
            "target_a = {a} must lie in (lambda_P, 0) = ({}, 0)",
            gap.lambda_p
        )));
    }
    report.constant("a", a);
    let out = cfg.output.as_path();
    match cfg.command {
        Command::FpSpectrum => {
            save_operator(out, "generator.mtx", &disc.generator, &mut report)?;
            save_operator(out, "symmetric.mtx", &disc.symmetric, &mut report)?;
            save_operator(out, "skew.mtx", &disc.skew, &mut report)?;
        }
        Command::FpDecay => decay(&problem, &cfg.search, &disc, &gap, a, &tol, exec, out, &mut report)?,
        Command::FpResolventScan => scans(&problem, &cfg.search, &disc, a, &tol, exec, out, &mut report)?,
        _ => unreachable!("not a Fokker-Planck command"),
    }
    Ok(report)
}

/// Decomposition on `disc`, recorded in the report. `None` when infeasible.
fn decompose(
    disc: &FPDiscretization,
    ambient: &WeightedSpace,
    a: f64,
    search: &SearchBox,
    exec: Execution,
    report: &mut RunReport,
) -> Result<Option<(f64, f64)>, CliError> {
    let search = find_decomposition(disc, ambient, a, search, exec)?;
    report.details["decomposition"] = serde_json::json!({
        "target": search.target,
        "accepted": search.accepted,
        "frontier": search.frontier,
    });
    match search.accepted {
        Some(c) => {
            report.push(CheckRecord::new(
                "decomposition",
                Verdict::Pass,
                None,
                &[("M", c.m), ("R", c.r), ("dissipation_top", c.top), ("target", a)],
            ));
            report.constant("M", c.m);
            report.constant("R", c.r);
            Ok(Some((c.m, c.r)))
        }
        None => {
            let err = search.require().unwrap_err();
            report.push(CheckRecord::new("decomposition", Verdict::Fail, message(err.to_string()), &[("target", a)]));
            report.note("infeasible", err.to_string());
            Ok(None)
        }
    }
}

/// Dense enlargement checks on a coarse copy of the problem.
fn coarse_split(
    problem: &FpProblem,
    a: f64,
    search: &SearchBox,
    exec: Execution,
) -> Result<Option<(FPDiscretization, enlarge_core::enlargement::SplitOperator, EmbeddedSpacePair)>, CliError> {
    let c = coarse(problem)?;
    let amb = c.ambient_space(&problem.weight)?;
    let search = find_decomposition(&c, &amb, a, search, exec)?;
    let Some(cand) = search.accepted else {
        return Ok(None);
    };
    let split = dense_split(&c, cand.m, cand.r)?;
    let pair = EmbeddedSpacePair::new(amb, c.small_space()?)?;
    Ok(Some((c, split, pair)))
}

#[allow(clippy::too_many_arguments)]
fn decay(
    problem: &FpProblem,
    search: &SearchBox,
    disc: &FPDiscretization,
    gap: &SpectralGap,
    a: f64,
    tol: &Tolerances,
    exec: Execution,
    out: &Path,
    report: &mut RunReport,
) -> Result<(), CliError> {
    let ambient = disc.ambient_space(&problem.weight)?;
    report.details = serde_json::json!({});
    if decompose(disc, &ambient, a, search, exec, report)?.is_none() {
        return Ok(());
    }
    match coarse_split(problem, a, search, exec)? {
        Some((c, split, pair)) => {
            let xis = XiSampler::light().sample(a, a.abs() / 3.0, &[Complex64::new(0.0, 0.0)], 10.0 * gap.lambda_p.abs(), 10.0);
            let h4 = check_h4(&split, &pair, &xis, tol, exec)?;
            report.push(CheckRecord::new(
                "h4-revalidation",
                h4.verdict,
                h4.witness.clone(),
                &[
                    ("N_coarse", c.grid.n as f64),
                    ("sup_b_inverse", h4.sup_b_inverse),
                    ("sup_a_b_inverse", h4.sup_a_b_inverse),
                    ("sup_b_inverse_a", h4.sup_b_inverse_a),
                ],
            ));
        }
        None => report.push(CheckRecord::new(
            "h4-revalidation",
            Verdict::Indeterminate,
            message("no decomposition found on the coarse grid"),
            &[],
        )),
    }

    let f0 = problem.initial.sample(disc)?;
    let times = problem.times();
    let exp = decay_experiment(disc, &ambient, &f0, &times, problem.scheme, problem.dt, tol)?;
    exp.table()?.save(out.join("trajectory.csv"))?;
    report.artifact("trajectory.csv");
    let drift_tol = 10.0 * tol.solve;
    report.push(CheckRecord::new(
        "trajectory-mass",
        pass_if(exp.max_mass_drift <= drift_tol),
        None,
        &[("max_step_drift", exp.max_mass_drift), ("tolerance", drift_tol)],
    ));
    match &exp.fit {
        Some(fit) => {
            report.push(CheckRecord::new(
                "trajectory-decay",
                pass_if(fit.rate < 0.0),
                None,
                &[("C", fit.prefactor), ("rate", fit.rate)],
            ));
            report.constant("trajectory_C", fit.prefactor);
            report.constant("trajectory_rate", fit.rate);
        }
        None => report.push(CheckRecord::new(
            "trajectory-decay",
            Verdict::Pass,
            None,
            &[("initial_deviation", exp.norm_hh[0])],
        )),
    }

    if disc.dim() > REFERENCE_LIMIT {
        report.note(
            "uniform-envelope",
            format!("skipped: dense envelope limited to {REFERENCE_LIMIT} unknowns"),
        );
        return Ok(());
    }
    let idx = thinned(&times);
    let env_times: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
    let env = uniform_decay_envelope(disc, &ambient, &env_times, exec)?;
    let lower = gap.lambda_p - 0.1 * gap.lambda_p.abs();
    let rate_ok = env.fit.rate < 0.0 && env.fit.rate >= lower;
    report.push(CheckRecord::new(
        "uniform-envelope",
        pass_if(rate_ok),
        (!rate_ok).then(|| Witness::Message {
            reason: format!("rate {} outside [{lower}, 0)", env.fit.rate),
        }),
        &[("C_lambda", env.fit.prefactor), ("lambda", env.fit.rate), ("lower_limit", lower)],
    ));
    report.constant("C_lambda", env.fit.prefactor);
    report.constant("lambda", env.fit.rate);
    let within = exp.fit.is_none()
        || idx
            .iter()
            .all(|&i| exp.norm_hh[i] <= env.fit.bound(times[i]) * exp.norm_hh[0] * (1.0 + 1e-6));
    report.push(CheckRecord::new(
        "trajectory-within-envelope",
        pass_if(within),
        None,
        &[("C_lambda", env.fit.prefactor), ("lambda", env.fit.rate)],
    ));

    let probe = disc.equilibrium() + &env.witness * 1e-2;
    let w = decay_experiment(disc, &ambient, &probe, &env_times, Scheme::ReferenceExponential, problem.dt, tol)?;
    let excess = env_times
        .iter()
        .zip(&w.norm_hh)
        .map(|(&t, &n)| n / (w.norm_hh[0] * (env.fit.rate * t).exp()))
        .fold(0.0, f64::max);
    report.constant("transient_excess", excess);
    report.constant("transient_time", env.witness_time);
    let mut t = Table::new(&["t", "uniform_norm", "envelope", "witness_norm"]);
    for (k, &time) in env_times.iter().enumerate() {
        t.push_row(&[time, env.norms[k], env.fit.bound(time), w.norm_hh[k] / w.norm_hh[0]])?;
    }
    t.save(out.join("envelope.csv"))?;
    report.artifact("envelope.csv");
    Ok(())
}

fn scans(
    problem: &FpProblem,
    search: &SearchBox,
    disc: &FPDiscretization,
    a: f64,
    tol: &Tolerances,
    exec: Execution,
    out: &Path,
    report: &mut RunReport,
) -> Result<(), CliError> {
    let ambient = disc.ambient_space(&problem.weight)?;
    let small = disc.small_space()?;
    for (label, space, file) in [("H", &small, "scan_H.csv"), ("enlarged", &ambient, "scan_HH.csv")] {
        let grid = YGrid::standard(shifted_frame_bound(&disc.generator, space, a), &[]);
        let scan = resolvent_scan_fp(&disc.generator, space, a, &grid, tol, exec)?;
        scan.table()?.save(out.join(file))?;
        report.artifact(file);
        report.push(CheckRecord::new(
            format!("resolvent-scan-{label}"),
            scan.verdict,
            scan.witness.clone(),
            &[("K", scan.k), ("k_grid", scan.k_grid), ("tail_bound", scan.tail_bound), ("argmax_y", scan.argmax_y)],
        ));
        report.constant(&format!("K_{label}"), scan.k);
        if disc.dim() <= DENSE_SCAN_LIMIT {
            let dense = check_h2(&disc.generator.to_dense(), a, space, &grid, tol, exec)?;
            let gap = scan
                .samples
                .iter()
                .zip(&dense.samples)
                .map(|(s, (_, d))| (s.resolvent_norm - d).abs() / d)
                .fold(0.0, f64::max);
            report.push(CheckRecord::new(
                format!("dense-consistency-{label}"),
                pass_if(gap <= SCAN_AGREEMENT),
                None,
                &[("max_relative_gap", gap), ("tolerance", SCAN_AGREEMENT)],
            ));
        }
    }

    match coarse_split(problem, a, search, exec)? {
        Some((c, split, pair)) => {
            let grid = YGrid::standard(shifted_frame_bound(&c.generator, pair.ambient(), a), &[]);
            let scan = resolvent_scan_fp(&c.generator, pair.ambient(), a, &grid, tol, exec)?;
            let xis: Vec<Complex64> = grid.points.iter().map(|&y| Complex64::new(a, y)).collect();
            let h4 = check_h4(&split, &pair, &xis, tol, exec)?;
            let chain = enlargement_bound_chain(&split, &pair, &h4, tol, exec)?;
            let ok = h4.verdict.passed() && chain.violations == 0 && scan.k_grid <= chain.k_ambient * (1.0 + 1e-12);
            report.push(CheckRecord::new(
                "domination",
                pass_if(ok),
                h4.witness.clone(),
                &[
                    ("N_coarse", c.grid.n as f64),
                    ("K_scan", scan.k_grid),
                    ("K_chain", chain.k_ambient),
                    ("violations", chain.violations as f64),
                ],
            ));
            report.constant("K_enlarged_certified", chain.k_ambient);
        }
        None => report.push(CheckRecord::new(
            "domination",
            Verdict::Indeterminate,
            message("no decomposition found on the coarse grid"),
            &[],
        )),
    }
    Ok(())
}
