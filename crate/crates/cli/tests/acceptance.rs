//! One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

mod common;

use std::time::Instant;

use enlarge_core::enlargement::{generate_instance, run_instance, InstanceOptions, InstanceRun, Verdict, XiSampler};
use enlarge_core::fokker_planck::spectrum::{kth_largest, sturm_count, symmetrized_tridiagonal};
use enlarge_core::fokker_planck::{
    decay_experiment, spectral_gap_h, uniform_decay_envelope, EnlargedWeight, FPDiscretization, FpProblem, Grid,
    Potential, SwirlField, SwirlProfile, WeightKind,
};
use enlarge_core::operator::Scheme;
use enlarge_core::par::Execution;
use enlarge_core::Tolerances;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

const SEEDS: u64 = 100;

fn sweep() -> (Vec<InstanceRun>, f64) {
    let tol = Tolerances::default();
    let start = Instant::now();
    let runs = (1..=SEEDS)
        .map(|seed| {
            let n = 2 + (seed as usize * 7) % 31;
            let opts = InstanceOptions {
                discrete: 1 + (seed as usize % 2),
                ..Default::default()
            };
            let inst = generate_instance(seed, n, opts).expect("instance");
            run_instance(&inst, &XiSampler::light(), &tol, Execution::Parallel).expect("run")
        })
        .collect();
    (runs, start.elapsed().as_secs_f64())
}

fn factorization(runs: &[InstanceRun], secs: f64) -> Outcome {
    let failed = runs.iter().filter(|r| r.factorization.verdict != Verdict::Pass).count();
    let min_xi = runs.iter().map(|r| r.xi_count).min().unwrap_or(0);
    let worst_scaled = runs
        .iter()
        .flat_map(|r| &r.factorization.report.samples)
        .map(|s| s.residual / s.cond)
        .fold(0.0, f64::max);
    let worst_oracle = runs.iter().map(|r| r.factorization.report.max_oracle_gap).fold(0.0, f64::max);
    outcome(
        failed == 0 && min_xi >= 25 && secs <= 60.0,
        format!(
            "{} seeds, min {min_xi} xi each, failures {failed}, max residual/cond {worst_scaled:.2e} (limit 1e-9), \
             max oracle gap {worst_oracle:.2e} (limit 1e-8), {secs:.1} s (limit 60 s)",
            runs.len()
        ),
    )
}

fn domination(runs: &[InstanceRun]) -> Outcome {
    let violations: usize = runs.iter().map(|r| r.chain.violations).sum();
    let samples: usize = runs.iter().map(|r| r.chain.samples.len()).sum();
    outcome(
        violations == 0 && runs.len() as u64 == SEEDS,
        format!("{samples} sampled xi over {} seeds, {violations} violations", runs.len()),
    )
}

fn round_trip(runs: &[InstanceRun]) -> Outcome {
    let mut eligible = 0;
    let mut bad = Vec::new();
    let mut min_laplace = usize::MAX;
    for (i, r) in runs.iter().enumerate() {
        let h = &r.hypotheses;
        let ok = h.h1.verdict.passed()
            && h.h2.as_ref().is_some_and(|x| x.verdict.passed())
            && h.h3.as_ref().is_some_and(|x| x.verdict.passed());
        if !ok {
            continue;
        }
        eligible += 1;
        let (Some(d), Some(c)) = (&r.decay, &r.converse) else {
            bad.push(i + 1);
            continue;
        };
        min_laplace = min_laplace.min(c.laplace.len());
        let laplace_ok = c.laplace.len() >= 50 && c.laplace.iter().all(|s| s.lhs <= s.rhs);
        if !(d.verdict.passed() && c.verdict.passed() && laplace_ok) {
            bad.push(i + 1);
        }
    }
    outcome(
        bad.is_empty() && eligible > 0,
        format!("{eligible} instances pass the hypotheses, min {min_laplace} Laplace points, failing seeds {bad:?}"),
    )
}

fn radial(s: f64, l: f64, n: usize) -> FPDiscretization {
    FPDiscretization::new(Grid::new(1, n, l).unwrap(), Potential::radial(s).unwrap(), SwirlField::none()).unwrap()
}

fn structure() -> Outcome {
    let tol = Tolerances::default();
    let mut worst = [0.0f64; 4];
    let mut bad = Vec::new();
    for (s, l) in [(1.0, 30.0), (2.0, 8.0), (3.0, 4.0)] {
        for n in [200, 400, 800] {
            let disc = radial(s, l, n);
            let h = disc.grid.cell_volume();
            let small = disc.small_space().unwrap();
            let wave = |a: f64, b: f64| {
                let mut g = disc.sample(|x| (a * x[0]).sin() + 0.3 * (b * x[0] + 0.4).cos());
                for (v, m) in g.iter_mut().zip(&disc.mu) {
                    *v *= m;
                }
                g
            };
            let f = wave(1.7, 5.3);
            let g = wave(0.9, 3.1);

            let tf = disc.generator.apply(&f);
            let l1: f64 = tf.iter().map(|v| v.abs()).sum::<f64>() * h;
            let mass = (disc.mass(&tf)).abs() / l1;

            let sf = disc.symmetric.apply(&f);
            let sg = disc.symmetric.apply(&g);
            let lhs = small.inner(&sf, &g).unwrap();
            let rhs = small.inner(&f, &sg).unwrap();
            let scale = small.norm(&sf).unwrap() * small.norm(&g).unwrap()
                + small.norm(&f).unwrap() * small.norm(&sg).unwrap();
            let symmetry = (lhs - rhs).abs() / scale;

            let null = disc.structure().null_defect;

            let (diag, off) = symmetrized_tridiagonal(&disc).unwrap();
            let band = tol.eig * disc.symmetric.norm_bound().max(1.0);
            let above = n - sturm_count(&diag, &off, band);
            let near_zero = n - sturm_count(&diag, &off, -band);
            let sign_ok = above == 0 && near_zero == 1;

            worst[0] = worst[0].max(mass);
            worst[1] = worst[1].max(symmetry);
            worst[2] = worst[2].max(null);
            if !(mass <= 1e-13 && symmetry <= 1e-13 && null <= 1e-14 && sign_ok) {
                bad.push(format!("s={s} N={n}"));
            }
            worst[3] = worst[3].max(kth_largest(&diag, &off, 1).abs() / band);
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "s in {{1,2,3}}, N in {{200,400,800}}: mass {:.1e} (1e-13), H-symmetry {:.1e} (1e-13), \
             null vector {:.1e} (1e-14), |top|/band {:.1e}, failing {bad:?}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn spectral_gap() -> Outcome {
    let tol = Tolerances::default();
    let start = Instant::now();
    let ou = spectral_gap_h(&radial(2.0, 8.0, 2000), &tol).unwrap().lambda_p;
    let flat = FPDiscretization::new(Grid::new(1, 2000, 8.0).unwrap(), Potential::Flat, SwirlField::none()).unwrap();
    let neumann = spectral_gap_h(&flat, &tol).unwrap().lambda_p;
    let neumann_exact = -(std::f64::consts::PI / 16.0).powi(2);
    let e1 = (ou + 2.0).abs() / 2.0;
    let e2 = (neumann - neumann_exact).abs() / neumann_exact.abs();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        e1 <= 0.01 && e2 <= 0.01 && secs <= 120.0,
        format!(
            "N=2000 L=8: lambda_P {ou:.6} vs -2 (rel {e1:.1e}); flat {neumann:.6e} vs {neumann_exact:.6e} \
             (rel {e2:.1e}); {secs:.1} s"
        ),
    )
}

fn one_dimensional_problem(n: usize) -> FpProblem {
    FpProblem::from_json(&format!(
        r#"{{"d": 1, "s": 2, "L": 8, "N": {n},
            "weight": {{"kind": "polynomial", "k": 3}},
            "scheme": "implicit-euler", "t_max": 6, "dt": 0.01,
            "initial": {{"kind": "heavy-tail", "power": 2}}}}"#
    ))
    .unwrap()
}

fn envelope() -> Outcome {
    let tol = Tolerances::default();
    let problem = one_dimensional_problem(400);
    let disc = problem.discretization().unwrap();
    let ambient = disc.ambient_space(&problem.weight).unwrap();
    let gap = spectral_gap_h(&disc, &tol).unwrap();
    let times: Vec<f64> = (0..=30).map(|i| 0.2 * i as f64).collect();

    let env = uniform_decay_envelope(&disc, &ambient, &times, Execution::Parallel).unwrap();
    let lower = gap.lambda_p - 0.1 * gap.lambda_p.abs();
    let rate = env.fit.rate;
    let rate_ok = rate < 0.0 && rate >= lower;

    let f0 = problem.initial.sample(&disc).unwrap();
    let heavy = decay_experiment(&disc, &ambient, &f0, &times, problem.scheme, problem.dt, &tol).unwrap();
    let within = heavy.within(env.fit.prefactor, rate, 1e-6);

    let probe = disc.equilibrium() + &env.witness * 1e-2;
    let w = decay_experiment(&disc, &ambient, &probe, &times, Scheme::ReferenceExponential, problem.dt, &tol).unwrap();
    let (t_star, excess) = times
        .iter()
        .zip(&w.norm_hh)
        .map(|(&t, &n)| (t, n / (w.norm_hh[0] * (rate * t).exp())))
        .fold((0.0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    let heavy_rate = heavy.fit.map(|f| f.rate).unwrap_or(f64::NAN);
    outcome(
        rate_ok && within && excess > 1.0,
        format!(
            "lambda_P {:.4}, certified lambda {rate:.4} in [{lower:.4}, 0), C_lambda {:.4}; witness deviation \
             {excess:.4} x e^(lambda t) at t = {t_star:.1}; heavy-tail data within envelope: {within} \
             (own rate {heavy_rate:.3})",
            gap.lambda_p, env.fit.prefactor
        ),
    )
}

fn skew() -> Outcome {
    let start = Instant::now();
    let weight = EnlargedWeight::new(WeightKind::Polynomial, 3.0, 2).unwrap();
    let swirl = SwirlField {
        phi: SwirlProfile::InverseOnePlus,
        amplitude: 1.0,
    };
    let mut pts = Vec::new();
    for n in [32, 64, 128] {
        let disc = FPDiscretization::new(Grid::new(2, n, 6.0).unwrap(), Potential::radial(2.0).unwrap(), swirl).unwrap();
        let ambient = disc.ambient_space(&weight).unwrap();
        let f = disc.sample(|x| (-((x[0] - 0.7).powi(2) + (x[1] + 0.3).powi(2))).exp());
        pts.push((disc.grid.h.ln(), disc.skew_ratio(&f, &ambient).unwrap().ln()));
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();

    let tol = Tolerances::default();
    let problem = FpProblem::from_json(
        r#"{"d": 2, "s": 2, "L": 6, "N": 32,
            "weight": {"kind": "polynomial", "k": 3},
            "swirl": {"phi": "inverse-one-plus", "amplitude": 1},
            "scheme": "implicit-euler", "t_max": 4, "dt": 0.02,
            "initial": {"kind": "bump", "center": [0.7, -0.3], "width": 1}}"#,
    )
    .unwrap();
    let disc = problem.discretization().unwrap();
    let ambient = disc.ambient_space(&problem.weight).unwrap();
    let f0 = problem.initial.sample(&disc).unwrap();
    let exp = decay_experiment(&disc, &ambient, &f0, &problem.times(), problem.scheme, problem.dt, &tol).unwrap();
    let fit = exp.fit.expect("nonzero deviation");
    let secs = start.elapsed().as_secs_f64();
    outcome(
        (1.7..=2.3).contains(&slope) && fit.rate < 0.0 && exp.within(fit.prefactor, fit.rate, 1e-6) && secs <= 300.0,
        format!(
            "skew ratio slope {slope:.3} in [1.7, 2.3]; 2D decay with swirl: rate {:.4}, C {:.4}; {secs:.1} s",
            fit.rate, fit.prefactor
        ),
    )
}

fn cli_contract() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let code_a = common::run_in(&a, &["testbed", "--seed", "1"]);
    let code_b = common::run_in(&b, &["testbed", "--seed", "1", "--jobs", "1"]);
    let golden = common::check_golden(&a);
    let csvs = common::same_csvs(&a, &b);
    let json_same = common::portable(common::report(&a)) == common::portable(common::report(&b));
    let codes = common::exit_code_cases(&tmp.path().join("codes"));
    let wrong: Vec<_> = codes.iter().filter(|c| c.1 != c.2).collect();
    let ok = code_a == 0 && code_b == 0 && golden.is_ok() && csvs.is_ok() && json_same && wrong.is_empty();
    outcome(
        ok,
        format!(
            "golden {}, CSVs {}, reports identical across --jobs: {json_same}, {} exit-code cases, mismatches {wrong:?}",
            golden.map(|_| "match".to_string()).unwrap_or_else(|e| e),
            csvs.map(|n| format!("{n} byte-identical")).unwrap_or_else(|e| e),
            codes.len()
        ),
    )
}

fn main() {
    let (runs, secs) = sweep();
    let criteria: Vec<(&str, Box<dyn FnOnce() -> Outcome + '_>)> = vec![
        ("factorization identity", Box::new(|| factorization(&runs, secs))),
        ("bound-chain domination", Box::new(|| domination(&runs))),
        ("decay/resolvent round trip", Box::new(|| round_trip(&runs))),
        ("Fokker-Planck structure", Box::new(structure)),
        ("spectral gap oracles", Box::new(spectral_gap)),
        ("enlarged-space decay envelope", Box::new(envelope)),
        ("skew part refinement and decay", Box::new(skew)),
        ("CLI determinism and exit codes", Box::new(cli_contract)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.into_iter().enumerate() {
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {} {name}: {} ({})", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
