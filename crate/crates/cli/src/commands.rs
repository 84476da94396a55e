use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use beatlab::experiments::{self, corollary_schedule, emit_report, run_beating, run_sweep, ScenarioConfig};
use beatlab::model::{self, Branch, PhasePlaneState};
use beatlab::resonance::{closure_check, extend_sequence, intra_cluster_check, ClusterFamily};
use beatlab::spectral::{evolve, SimParams, SpectralField};
use beatlab::Params;
use num_complex::Complex;
use serde_json::json;

use crate::manifest::Run;
use crate::{BeatingArgs, BranchArg, Cli, Command, ModelArgs, ScheduleArgs, SequenceArgs, SimulateArgs, SweepArgs, VerifyArgs};

/// Exit code of `verify` when the family has violations.
pub const EXIT_VIOLATIONS: u8 = 3;

pub fn dispatch(cli: &Cli) -> Result<ExitCode> {
    let out = cli.out_dir.as_path();
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    match &cli.command {
        Command::Sequence(a) => sequence(a, out),
        Command::Verify(a) => verify(a, out),
        Command::Model(a) => model_cmd(a, out),
        Command::Simulate(a) => simulate(a, out),
        Command::Beating(a) => beating(a, out),
        Command::Sweep(a) => sweep(a, out),
        Command::Schedule(a) => schedule(a, out),
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<PathBuf> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(path.to_path_buf())
}

fn done(run: Run, out: &Path, stem: &str, outputs: &[PathBuf]) -> Result<()> {
    let manifest = run.finish(out, stem, outputs)?;
    for p in outputs {
        println!("{}", p.display());
    }
    println!("{}", manifest.display());
    Ok(())
}

fn sequence(a: &SequenceArgs, out: &Path) -> Result<ExitCode> {
    let run = Run::start("sequence", json!({ "prefix": a.prefix, "count": a.count, "window": a.window }));
    let (centers, complete) = extend_sequence(&a.prefix, a.count, a.window)?;
    if !complete {
        log::warn!("search window exhausted after {} centres", centers.len());
    }
    println!("centres: {centers:?}{}", if complete { "" } else { " (incomplete)" });
    let path = write_json(&out.join("sequence.json"), &json!({ "centers": centers, "complete": complete }))?;
    done(run, out, "sequence", &[path])?;
    Ok(ExitCode::SUCCESS)
}

fn verify(a: &VerifyArgs, out: &Path) -> Result<ExitCode> {
    let run = Run::start("verify", json!({ "centers": a.centers, "relaxed": a.relaxed }));
    let family = if a.relaxed { ClusterFamily::relaxed(&a.centers)? } else { ClusterFamily::new(&a.centers)? };
    let closure = closure_check(&family)?;
    let intra = intra_cluster_check(&family)?;
    let clean = closure.violations.is_empty() && intra.violations.is_empty();
    println!(
        "{} seeds, {} completions ({} trivial), {} closure violations, {} cross-cluster violations",
        closure.seeds_enumerated,
        closure.completions,
        closure.trivial,
        closure.violations.len(),
        intra.violations.len()
    );
    let path = write_json(
        &out.join("verify.json"),
        &json!({
            "centers": a.centers,
            "growth_hypothesis": family.hypothesis_ok(),
            "closure": closure,
            "cross_cluster": intra,
            "clean": clean,
        }),
    )?;
    done(run, out, "verify", &[path])?;
    Ok(if clean { ExitCode::SUCCESS } else { ExitCode::from(EXIT_VIOLATIONS) })
}

fn model_cmd(a: &ModelArgs, out: &Path) -> Result<ExitCode> {
    let run = Run::start(
        "model",
        json!({ "C": a.c, "K0": a.k0, "phi0": a.phi0, "branch": format!("{:?}", a.branch).to_lowercase(),
                "span": a.span, "tol": a.tol, "samples": a.samples }),
    );
    let p = Params::from_c(a.c);
    let g = model::gamma(&p)?;
    let side = model::band_branch(a.k0, &p)?;
    match (a.branch, side) {
        (BranchArg::Lower, Branch::Upper) => bail!("K0 = {} is on the upper branch; use --branch upper or check", a.k0),
        (BranchArg::Upper, Branch::Lower) => bail!("K0 = {} is on the lower branch; use --branch lower or check", a.k0),
        _ => {}
    }
    let on_axis = a.phi0 == 0.0;
    let half = if on_axis { Some(model::half_period_detail(a.k0, &p, a.tol)?) } else { None };
    let mirror = match (a.branch, on_axis) {
        (BranchArg::Check, true) => Some(model::half_period(1.0 - a.k0, &p, a.tol)?),
        _ => None,
    };
    let span = match (a.span, &half) {
        (Some(s), _) => s,
        (None, Some(h)) => 2.0 * h.tau,
        (None, None) => bail!("--span is required when phi0 is not zero"),
    };
    if !(span > 0.0) || a.samples < 2 {
        bail!("span must be positive and samples at least 2");
    }
    let tr = model::integrate(PhasePlaneState::new(a.phi0, a.k0), &p, span, a.tol)?;
    let csv_path = out.join("model.csv");
    let mut w = csv::Writer::from_path(&csv_path).with_context(|| format!("writing {}", csv_path.display()))?;
    w.write_record(["tau", "phi", "K", "H_star"])?;
    for i in 0..a.samples {
        let tau = span * i as f64 / (a.samples - 1) as f64;
        let s = tr.sample(tau);
        let h = model::hstar(s, &p)?;
        w.write_record([tau, s.phi, s.k, h].map(|x| format!("{x:e}")))?;
    }
    w.flush()?;
    let summary = json!({
        "C": a.c,
        "K0": a.k0,
        "branch": match side { Branch::Lower => "lower", Branch::Upper => "upper" },
        "gamma": g,
        "band": [g, 1.0 - g],
        "D": model::band_d(&p)?,
        "limit_half_period": model::limit_period(&p),
        "heteroclinic_level": model::heteroclinic_level(&p),
        "half_period": half.as_ref().map(|h| h.tau),
        "K_at_half_period": half.as_ref().map(|h| h.end.k),
        "mirror_half_period": mirror,
        "mirror_relative_difference": mirror.zip(half.as_ref()).map(|(m, h)| (m / h.tau - 1.0).abs()),
        "energy_drift": tr.max_energy_drift(),
    });
    if let Some(h) = &half {
        println!("half-period T = {:.10}, K(T) = {:.10}", h.tau, h.end.k);
    }
    if let Some(m) = mirror {
        println!("mirror half-period T(1 - K0) = {m:.10}");
    }
    let json_path = write_json(&out.join("model.json"), &summary)?;
    done(run, out, "model", &[csv_path, json_path])?;
    Ok(ExitCode::SUCCESS)
}

fn simulate(a: &SimulateArgs, out: &Path) -> Result<ExitCode> {
    let run = Run::start(
        "simulate",
        json!({ "initial": a.initial, "cluster": a.cluster, "K0": a.k0, "nu": a.nu, "dt": a.dt, "m": a.m,
                "pad": a.pad, "t_end": a.t_end, "stride": a.stride, "modes": a.modes }),
    );
    let field = match (&a.initial, a.cluster) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let triples: Vec<(i64, f64, f64)> =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            let modes: Vec<(i64, Complex<f64>)> = triples.iter().map(|&(j, re, im)| (j, Complex::new(re, im))).collect();
            SpectralField::from_modes(a.m, &modes)
                .with_context(|| format!("initial data has modes beyond M = {}", a.m))?
        }
        (None, Some(n)) => experiments::thm0_initial_data(a.k0, &beatlab::resonance::cluster(n)?, [0.0; 4], a.m)?,
        (None, None) => bail!("either --initial or --cluster is required"),
    };
    let mut p = SimParams::new(a.nu, a.dt, a.m);
    p.pad = a.pad;
    p.sample_stride = a.stride;
    if a.dt > p.dt_guideline() {
        log::warn!("dt = {} exceeds the guideline 0.5/M^2 = {:.3e}", a.dt, p.dt_guideline());
    }
    let ev = evolve(&field, &p, a.t_end, &a.modes, &mut [])?;
    let d = &ev.diagnostics;
    let csv_path = out.join("simulate.csv");
    let mut w = csv::Writer::from_path(&csv_path).with_context(|| format!("writing {}", csv_path.display()))?;
    let mut header = vec!["t".to_string(), "mass".to_string(), "hamiltonian".to_string()];
    header.extend(d.modes.iter().map(|j| format!("I_{j}")));
    w.write_record(&header)?;
    for (s, t) in d.times.iter().enumerate() {
        let mut row = vec![format!("{t:e}"), format!("{:e}", d.mass[s]), format!("{:e}", d.hamiltonian[s])];
        row.extend(d.actions[s].iter().map(|x| format!("{x:e}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    let summary = json!({
        "steps": ev.steps,
        "samples": d.times.len(),
        "mass_drift": d.mass_drift(),
        "hamiltonian_drift": d.hamiltonian_drift(),
        "momentum_drift": d.momentum_drift(),
    });
    println!(
        "{} steps, mass drift {:.3e}, hamiltonian drift {:.3e}",
        ev.steps,
        d.mass_drift(),
        d.hamiltonian_drift()
    );
    let json_path = write_json(&out.join("simulate.json"), &summary)?;
    done(run, out, "simulate", &[csv_path, json_path])?;
    Ok(ExitCode::SUCCESS)
}

fn load_config(path: Option<&Path>) -> Result<ScenarioConfig> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ScenarioConfig::from_toml(&text).with_context(|| format!("in {}", p.display()))
        }
        None => Ok(ScenarioConfig::default()),
    }
}

fn beating(a: &BeatingArgs, out: &Path) -> Result<ExitCode> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(nu) = a.nu {
        cfg.nu = nu;
    }
    cfg.skip_pde |= a.skip_pde;
    cfg.validate()?;
    let run = Run::start("beating", serde_json::to_value(&cfg)?);
    let report = run_beating(&cfg)?;
    for flag in &report.flags {
        println!("note: {flag}");
    }
    for c in &report.clusters {
        println!(
            "cluster {}: amplitude {:.4}, sup error {:.4}, max+min {:.4}, model period {:?}",
            c.center, c.amplitude, c.sup_error, c.extremum_sum, c.model_period
        );
    }
    println!("leakage max {:.4e}, mass drift {:.2e}", report.leakage_max, report.mass_drift);
    let outputs = emit_report(&report, out, &a.name)?;
    done(run, out, &a.name, &outputs)?;
    Ok(ExitCode::SUCCESS)
}

fn sweep(a: &SweepArgs, out: &Path) -> Result<ExitCode> {
    let cfg = load_config(a.config.as_deref())?;
    if a.nus.is_empty() {
        bail!("--nus needs at least one value");
    }
    let run = Run::start("sweep", json!({ "base": cfg, "nus": a.nus }));
    let (reports, checks) = run_sweep(&cfg, &a.nus)?;
    let mut outputs = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        outputs.extend(emit_report(r, out, &format!("{}_{i}", a.name))?);
    }
    let rows: Vec<_> = reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            json!({
                "stem": format!("{}_{i}", a.name),
                "nu": r.nu,
                "leakage_max": r.leakage_max,
                "sup_error": r.clusters.iter().map(|c| c.sup_error).collect::<Vec<_>>(),
                "sum_drift": r.clusters.iter().map(|c| c.sum_drift).collect::<Vec<_>>(),
            })
        })
        .collect();
    for c in &checks {
        println!(
            "nu {:e} -> {:e}: leakage exponent {:?} (window {:?}) {}",
            c.nu_hi,
            c.nu_lo,
            c.exponent,
            c.window,
            if c.inconclusive { "inconclusive" } else if c.pass { "pass" } else { "fail" }
        );
    }
    outputs.push(write_json(&out.join(format!("{}.json", a.name)), &json!({ "runs": rows, "checks": checks }))?);
    done(run, out, &a.name, &outputs)?;
    Ok(ExitCode::SUCCESS)
}

fn schedule(a: &ScheduleArgs, out: &Path) -> Result<ExitCode> {
    let run = Run::start("schedule", json!({ "centers": a.centers, "lambdas": a.lambdas, "nu": a.nu }));
    let family = ClusterFamily::relaxed(&a.centers)?;
    let s = corollary_schedule(&a.lambdas, &family, a.nu)?;
    println!("threshold {:.6}, N = {}, K0 = {:?}, valid = {}", s.threshold, s.n, s.k0(), s.valid);
    let path = write_json(&out.join("schedule.json"), &s)?;
    done(run, out, "schedule", &[path])?;
    Ok(ExitCode::SUCCESS)
}
