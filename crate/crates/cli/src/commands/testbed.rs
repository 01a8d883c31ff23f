//! Generated instances: every hypothesis, the factorization, the bound
//! chain and the decay round trip.

use std::path::Path;

use enlarge_core::enlargement::instance::{load_instance, write_instance};
use enlarge_core::enlargement::{generate_instance, run_instance, GeneratedInstance, InstanceRun, Verdict, Witness, XiSampler};
use enlarge_core::io::table::Table;
use enlarge_core::par::{self, Execution};
use serde::Serialize;

use crate::config::{RunConfig, SamplerKind};
use crate::report::{CheckRecord, RunReport};
use crate::CliError;

#[derive(Debug, Serialize)]
struct SeedSummary {
    seed: u64,
    verdict: Verdict,
    a: f64,
    r: f64,
    k: Option<f64>,
    k_enlarged: f64,
    c_lambda: Option<f64>,
    lambda: Option<f64>,
    xi_samples: usize,
}

fn sampler(kind: SamplerKind) -> XiSampler {
    match kind {
        SamplerKind::Standard => XiSampler::default(),
        SamplerKind::Light => XiSampler::light(),
    }
}

fn checks(prefix: &str, run: &InstanceRun) -> Vec<CheckRecord> {
    let name = |s: &str| format!("{prefix}{s}");
    let h = &run.hypotheses;
    let mut out = vec![CheckRecord::new(
        name("h1-localization"),
        h.h1.verdict,
        h.h1.witness.clone(),
        &[
            ("a", h.h1.spectral.abscissa),
            ("r", h.h1.spectral.radius),
            ("isolated", h.h1.spectral.discrete.len() as f64),
        ],
    )];
    if let Some(h2) = &h.h2 {
        out.push(CheckRecord::new(
            name("h2-resolvent"),
            h2.verdict,
            h2.witness.clone(),
            &[("K", h2.k), ("tail_bound", h2.tail_bound), ("y_max", h2.y_max)],
        ));
    }
    if let Some(h3) = &h.h3 {
        out.push(CheckRecord::new(
            name("h3-semigroup"),
            h3.verdict,
            None,
            &[("C_b", h3.fit.prefactor), ("b", h3.fit.rate)],
        ));
    }
    if let Some(h4) = &h.h4 {
        out.push(CheckRecord::new(
            name("h4-decomposition"),
            h4.verdict,
            h4.witness.clone(),
            &[
                ("sup_b_inverse", h4.sup_b_inverse),
                ("sup_a_b_inverse", h4.sup_a_b_inverse),
                ("sup_b_inverse_a", h4.sup_b_inverse_a),
            ],
        ));
    }
    let f = &run.factorization;
    out.push(CheckRecord::new(
        name("factorization"),
        f.verdict,
        f.witness.clone(),
        &[
            ("max_scaled_residual", f.report.max_scaled_residual),
            ("max_oracle_gap", f.report.max_oracle_gap),
        ],
    ));
    let worst = run.chain.samples.iter().find(|s| s.chain < s.direct);
    out.push(CheckRecord::new(
        name("bound-chain"),
        run.chain_verdict(),
        worst.map(|s| Witness::SpectralPoint {
            xi: s.xi,
            reason: format!("chain {:e} below direct {:e}", s.chain, s.direct),
        }),
        &[
            ("K_enlarged", run.chain.k_ambient),
            ("direct_sup", run.chain.direct_sup),
            ("violations", run.chain.violations as f64),
        ],
    ));
    match &run.decay {
        Some(d) => out.push(CheckRecord::new(
            name("decay-enlarged"),
            d.verdict,
            d.witness.clone(),
            &[
                ("C_lambda", d.certificate.prefactor),
                ("lambda", d.certificate.abscissa),
                ("fitted_rate", d.fit.rate),
            ],
        )),
        None => out.push(CheckRecord::new(
            name("decay-enlarged"),
            Verdict::Indeterminate,
            Some(Witness::Message {
                reason: "skipped: localization, resolvent or semigroup check did not pass".into(),
            }),
            &[],
        )),
    }
    if let Some(c) = &run.converse {
        let lhs = c.laplace.iter().map(|s| s.lhs / s.rhs).fold(0.0, f64::max);
        out.push(CheckRecord::new(
            name("converse"),
            c.verdict,
            c.witness.clone(),
            &[
                ("commutation", c.commutation),
                ("laplace_points", c.laplace.len() as f64),
                ("max_laplace_ratio", lhs),
            ],
        ));
    }
    out
}

fn summary(seed: u64, run: &InstanceRun, inst: &GeneratedInstance) -> SeedSummary {
    SeedSummary {
        seed,
        verdict: run.verdict(),
        a: inst.certificate.a,
        r: inst.certificate.r,
        k: run.hypotheses.h2.as_ref().map(|h| h.k),
        k_enlarged: run.chain.k_ambient,
        c_lambda: run.decay.as_ref().map(|d| d.certificate.prefactor),
        lambda: run.decay.as_ref().map(|d| d.certificate.abscissa),
        xi_samples: run.xi_count,
    }
}

fn write_curves(dir: &Path, run: &InstanceRun, report: &mut RunReport) -> Result<(), CliError> {
    if let Some(h2) = &run.hypotheses.h2 {
        let mut t = Table::new(&["y", "resolvent_norm"]);
        for (y, n) in &h2.samples {
            t.push_row(&[*y, *n])?;
        }
        t.save(dir.join("h2_scan.csv"))?;
        report.artifact("h2_scan.csv");
    }
    if let Some(d) = &run.decay {
        let mut t = Table::new(&["t", "deviation_norm", "envelope"]);
        for (time, n) in d.times.iter().zip(&d.norms) {
            let env = d.certificate.prefactor * (d.certificate.abscissa * time).exp();
            t.push_row(&[*time, *n, env])?;
        }
        t.save(dir.join("decay.csv"))?;
        report.artifact("decay.csv");
    }
    Ok(())
}

fn record_single(report: &mut RunReport, run: &InstanceRun, inst: &GeneratedInstance) {
    for c in checks("", run) {
        report.push(c);
    }
    report.constant("a", inst.certificate.a);
    report.constant("r", inst.certificate.r);
    report.constant("c_J", inst.pair.embedding_constant());
    if let Some(h2) = &run.hypotheses.h2 {
        report.constant("K", h2.k);
    }
    report.constant("K_enlarged", run.chain.k_ambient);
    if let Some(d) = &run.decay {
        report.constant("C_lambda", d.certificate.prefactor);
        report.constant("lambda", d.certificate.abscissa);
    }
}

pub fn run_testbed(cfg: &RunConfig, exec: Execution) -> Result<RunReport, CliError> {
    let tol = cfg.tolerances()?;
    let settings = &cfg.testbed;
    let xs = sampler(settings.sampler);
    let seeds: Vec<u64> = (cfg.seed..cfg.seed + settings.count).collect();
    let build = |seed: u64| -> Result<GeneratedInstance, CliError> {
        let mut inst = generate_instance(seed, settings.n, settings.options)?;
        if let Some(a) = settings.abscissa {
            inst.certificate.a = a;
        }
        Ok(inst)
    };
    let mut report = RunReport::new(cfg.clone(), tol);
    if seeds.len() == 1 {
        let inst = build(seeds[0])?;
        let run = run_instance(&inst, &xs, &tol, exec)?;
        record_single(&mut report, &run, &inst);
        let manifest = write_instance(&cfg.output.join("instance"), &inst, &tol)?;
        report.artifact(format!("instance/{}", manifest.file_name().unwrap().to_string_lossy()));
        write_curves(&cfg.output, &run, &mut report)?;
        report.details = serde_json::to_value(vec![summary(seeds[0], &run, &inst)]).unwrap_or_default();
        return Ok(report);
    }
    let runs = par::try_map(exec, &seeds, |&seed| {
        let inst = build(seed)?;
        let run = run_instance(&inst, &xs, &tol, Execution::Sequential)?;
        Ok::<_, CliError>((summary(seed, &run, &inst), checks(&format!("seed-{seed}/"), &run), run.chain.violations))
    })?;
    let mut violations = 0;
    let mut summaries = Vec::new();
    for (s, c, v) in runs {
        violations += v;
        summaries.push(s);
        for rec in c {
            report.push(rec);
        }
    }
    report.constant("seeds", seeds.len() as f64);
    report.constant("chain_violations", violations as f64);
    let failed = summaries.iter().filter(|s| !s.verdict.passed()).count();
    report.constant("failed_seeds", failed as f64);
    report.details = serde_json::to_value(summaries).unwrap_or_default();
    Ok(report)
}

pub fn run_enlarge_check(cfg: &RunConfig, exec: Execution) -> Result<RunReport, CliError> {
    let path = cfg.instance.as_ref().expect("validated");
    let (inst, saved) = load_instance(path).map_err(|e| CliError::Config(format!("instance {}: {e}", path.display())))?;
    let mut tol = saved;
    for (k, v) in &cfg.tolerances {
        tol.set(k, *v).map_err(|e| CliError::Config(e.to_string()))?;
    }
    let xs = sampler(cfg.testbed.sampler);
    let run = run_instance(&inst, &xs, &tol, exec)?;
    let mut report = RunReport::new(cfg.clone(), tol);
    record_single(&mut report, &run, &inst);
    write_curves(&cfg.output, &run, &mut report)?;
    report.details = serde_json::to_value(vec![summary(inst.certificate.seed, &run, &inst)]).unwrap_or_default();
    Ok(report)
}
