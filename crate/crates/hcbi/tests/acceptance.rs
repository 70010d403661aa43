//! Acceptance suite: runs the shipped configurations and prints one
//! PASS/FAIL line per criterion. Exits nonzero if any criterion fails.
//!
//! Set `ACCEPTANCE_ONLY=3,10` to run a subset.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use hawkes_cbi::cmj::{excess_life_distribution, size_biased_distribution, LifeLaw};
use hawkes_cbi::harness::{atoms, distribution_distance, ks_two_sample_pvalue, path_rng, Metric};
use hawkes_cbi::volterra::resolvent_solve;
use hcbi::{load_config, run_experiment, ExperimentConfig, Report};
use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};

const RESOLVENT_BUDGET: Duration = Duration::from_secs(1);
const CBI_BUDGET: Duration = Duration::from_secs(120);
const SCALING_BUDGET: Duration = Duration::from_secs(600);
const COLLAPSE_BUDGET: Duration = Duration::from_secs(600);
const KS_SAMPLES: usize = 100_000;
const KS_MIN_PVALUE: f64 = 0.01;
/// Path count for the determinism reruns.
const RERUN_PATHS: usize = 200;

struct Outcome {
    id: u32,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn config(name: &str) -> ExperimentConfig {
    let path = configs().join(name);
    load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn run(cfg: &ExperimentConfig) -> (Report, Duration, tempfile::TempDir) {
    let dir = tempfile::tempdir().expect("temp dir");
    let start = Instant::now();
    let report =
        run_experiment(cfg, dir.path()).unwrap_or_else(|e| panic!("{}: {e}", cfg.display_name()));
    (report, start.elapsed(), dir)
}

/// Passes when every check whose name contains one of `keys` passes (and
/// at least one matches); the detail lists the matched checks.
fn checks(report: &Report, keys: &[&str]) -> (bool, String) {
    let hits: Vec<_> = report
        .checks
        .iter()
        .filter(|c| keys.iter().any(|k| c.name.contains(k)))
        .collect();
    let pass = !hits.is_empty() && hits.iter().all(|c| c.pass);
    let detail = hits
        .iter()
        .map(|c| {
            format!(
                "[{}] {}: {}",
                if c.pass { "ok" } else { "FAIL" },
                c.name,
                c.detail
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    (pass, detail)
}

fn timed(pass: bool, detail: String, took: Duration, budget: Duration) -> (bool, String) {
    (
        pass && took < budget,
        format!(
            "{detail}; runtime {:.1} s (budget {} s)",
            took.as_secs_f64(),
            budget.as_secs()
        ),
    )
}

fn resolvent_criteria(out: &mut Vec<Outcome>, only: &dyn Fn(u32) -> bool) {
    if !only(1) && !only(2) {
        return;
    }
    let (report, _, _dir) = run(&config("resolvent.json"));
    if only(1) {
        let dt = 1e-3;
        let phi: Vec<f64> = (0..=20_000)
            .map(|k| 0.5 * (-(k as f64) * dt).exp())
            .collect();
        let start = Instant::now();
        resolvent_solve(&phi, dt, 20.0).expect("solve");
        let took = start.elapsed();
        let (pass, detail) = checks(&report, &["closed form", "step halving"]);
        let (pass, detail) = timed(pass, detail, took, RESOLVENT_BUDGET);
        out.push(Outcome {
            id: 1,
            title: "resolvent closed form and step halving",
            pass,
            detail,
        });
    }
    if only(2) {
        let (pass, detail) = checks(&report, &["mass identity"]);
        let masses_ok = ["case 0: 0.5", "case 1: 0.9"].iter().all(|m| {
            report
                .checks
                .iter()
                .any(|c| c.name.starts_with(m) && c.name.contains("mass identity"))
        });
        out.push(Outcome {
            id: 2,
            title: "resolvent mass identity for masses 0.5 and 0.9",
            pass: pass && masses_ok,
            detail,
        });
    }
}

fn monte_carlo_criteria(out: &mut Vec<Outcome>, only: &dyn Fn(u32) -> bool) {
    if only(3) {
        let (report, took, _dir) = run(&config("cbi.json"));
        let (pass, detail) = checks(&report, &["Laplace transform"]);
        let (pass, detail) = timed(pass && report.checks.len() == 3, detail, took, CBI_BUDGET);
        out.push(Outcome {
            id: 3,
            title: "CBI Laplace transform: Monte Carlo vs Riccati",
            pass,
            detail,
        });
    }
    if only(4) {
        let (report, took, _dir) = run(&config("scaling_hawkes.json"));
        let (pass, detail) = checks(&report, &["moments", "Laplace gap"]);
        let (pass, detail) = timed(pass, detail, took, SCALING_BUDGET);
        out.push(Outcome {
            id: 4,
            title: "rescaled Hawkes density converges to the CBI",
            pass,
            detail,
        });
    }
    if only(5) || only(6) {
        let (report, _, _dir) = run(&config("shot_noise.json"));
        if only(5) {
            let (pass, detail) = checks(&report, &["instantaneous"]);
            out.push(Outcome {
                id: 5,
                title: "instantaneous shot noise, with and without ancestor correction",
                pass,
                detail,
            });
        }
        if only(6) {
            let (pass, detail) = checks(&report, &["cumulative"]);
            out.push(Outcome {
                id: 6,
                title: "cumulative shot noise mean",
                pass,
                detail,
            });
        }
    }
    if only(7) {
        let (report, _, _dir) = run(&config("cmj.json"));
        let (pass, detail) = checks(&report, &[""]);
        out.push(Outcome {
            id: 7,
            title: "CMJ reproduction counts against the birth-rate compensator",
            pass,
            detail,
        });
    }
    if only(8) {
        let (report, _, _dir) = run(&config("scaling_cmj.json"));
        let (pass, detail) = checks(&report, &["moments", "Laplace gap"]);
        out.push(Outcome {
            id: 8,
            title: "rescaled CMJ birth rate converges to the CBI",
            pass,
            detail,
        });
    }
    if only(9) {
        let (report, took, _dir) = run(&config("collapse.json"));
        let (pass, detail) = checks(&report, &["KS decays", "excess life law"]);
        let (pass, detail) = timed(pass, detail, took, COLLAPSE_BUDGET);
        out.push(Outcome {
            id: 9,
            title: "state-space collapse of age and residual life",
            pass,
            detail,
        });
    }
}

/// Two-sample KS between the library's sampler for `law` and an
/// independent analytic sampler.
fn ks_pair(
    label: &str,
    seed: u64,
    transformed: &hawkes_cbi::cmj::Law,
    oracle: impl Fn(&mut dyn rand::RngCore) -> f64,
) -> (bool, String) {
    let mut a_rng = path_rng(seed, 0);
    let mut b_rng = path_rng(seed, 1);
    let a: Vec<f64> = (0..KS_SAMPLES)
        .map(|_| transformed.sample(&mut a_rng))
        .collect();
    let b: Vec<f64> = (0..KS_SAMPLES).map(|_| oracle(&mut b_rng)).collect();
    let d = distribution_distance(&atoms(&a), &atoms(&b), Metric::Ks).expect("distance");
    let p = ks_two_sample_pvalue(d, KS_SAMPLES, KS_SAMPLES);
    (
        p > KS_MIN_PVALUE,
        format!("{label}: D = {d:.4}, p = {p:.3}"),
    )
}

fn distribution_criterion(out: &mut Vec<Outcome>) {
    let exp = LifeLaw::Exponential { rate: 1.5 };
    let uni = LifeLaw::Uniform { c: 2.0 };
    let exp_oracle = Exp::new(1.5).unwrap();
    let gamma_oracle = Gamma::new(2.0, 1.0 / 1.5).unwrap();
    let results = [
        ks_pair(
            "excess Exponential -> Exponential",
            101,
            &excess_life_distribution(&exp),
            |r| exp_oracle.sample(r),
        ),
        ks_pair(
            "size-biased Exponential -> Gamma(2)",
            102,
            &size_biased_distribution(&exp),
            |r| gamma_oracle.sample(r),
        ),
        // min and max of two uniforms have densities 2(1−y) and 2y on [0, 1]
        ks_pair(
            "excess Uniform -> 2(1-y)",
            103,
            &excess_life_distribution(&uni),
            |r| 2.0 * r.random::<f64>().min(r.random::<f64>()),
        ),
        ks_pair(
            "size-biased Uniform -> 2y",
            104,
            &size_biased_distribution(&uni),
            |r| 2.0 * r.random::<f64>().max(r.random::<f64>()),
        ),
    ];
    out.push(Outcome {
        id: 10,
        title: "excess and size-biased transforms of life laws",
        pass: results.iter().all(|r| r.0),
        detail: results
            .iter()
            .map(|r| r.1.as_str())
            .collect::<Vec<_>>()
            .join("; "),
    });
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .expect("read output dir")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

fn determinism_criterion(out: &mut Vec<Outcome>) {
    let mut names: Vec<PathBuf> = std::fs::read_dir(configs())
        .expect("configs dir")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    names.sort();
    let mut failures = Vec::new();
    let mut compared = 0;
    for path in &names {
        let cfg = load_config(path).expect("shipped config");
        let cfg = if cfg.experiment.uses_paths() {
            let paths = cfg.numerics.paths().min(RERUN_PATHS);
            cfg.with_overrides(None, Some(paths)).expect("override")
        } else {
            cfg
        };
        let (_, _, a) = run(&cfg);
        let (_, _, b) = run(&cfg);
        let (fa, fb) = (csv_files(a.path()), csv_files(b.path()));
        compared += fa.len();
        if fa.is_empty() || fa != fb {
            failures.push(path.file_name().unwrap().to_string_lossy().into_owned());
        }
    }
    out.push(Outcome {
        id: 11,
        title: "reruns with the same seed give identical CSV bytes",
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("{} configs, {compared} CSV files identical (Monte Carlo paths capped at {RERUN_PATHS})", names.len())
        } else {
            format!("differing output: {}", failures.join(", "))
        },
    });
}

fn negative_criterion(out: &mut Vec<Outcome>) {
    let mut lines = Vec::new();
    let mut pass = true;
    for name in ["wrong_sigma.json", "wrong_c.json", "fresh_ancestors.json"] {
        let dir = tempfile::tempdir().expect("temp dir");
        let status = Command::new(env!("CARGO_BIN_EXE_hcbi"))
            .arg("run")
            .arg(configs().join("negative").join(name))
            .arg("--out")
            .arg(dir.path())
            .arg("--quiet")
            .output()
            .expect("spawn hcbi");
        let code = status.status.code();
        let failed_report = code == Some(hcbi::EXIT_REPORT_FAILED);
        pass &= failed_report;
        let failing: Vec<String> = std::fs::read_to_string(dir.path().join("summary.txt"))
            .unwrap_or_default()
            .lines()
            .filter(|l| l.contains("FAIL"))
            .map(|l| l.trim().to_string())
            .take(2)
            .collect();
        lines.push(format!("{name}: exit {code:?} {}", failing.join(" | ")));
    }
    out.push(Outcome {
        id: 12,
        title: "negative controls fail their reports",
        pass,
        detail: lines.join("; "),
    });
}

fn main() -> ExitCode {
    let selected: Option<BTreeSet<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let only = |id: u32| selected.as_ref().is_none_or(|s| s.contains(&id));
    let mut out = Vec::new();
    resolvent_criteria(&mut out, &only);
    monte_carlo_criteria(&mut out, &only);
    if only(10) {
        distribution_criterion(&mut out);
    }
    if only(11) {
        determinism_criterion(&mut out);
    }
    if only(12) {
        negative_criterion(&mut out);
    }
    out.sort_by_key(|o| o.id);
    for o in &out {
        println!(
            "criterion {:>2} {}: {} — {}",
            o.id,
            if o.pass { "PASS" } else { "FAIL" },
            o.title,
            o.detail
        );
    }
    let failed = out.iter().filter(|o| !o.pass).count();
    println!(
        "acceptance: {} of {} criteria passed",
        out.len() - failed,
        out.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
