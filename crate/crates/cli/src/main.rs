//! `voctri` — command-line front end for the crop–aphid–natural-enemy
//! dynamics library: equilibria, local stability, global-stability
//! certificates, bifurcation scans, and time integration.
//!
//! Every command reads an optional JSON configuration (`--config`), applies
//! `--set KEY=VALUE` overrides, prints a human-readable summary to stdout,
//! and writes full-precision CSV artifacts (plus an optional SVG) into the
//! output directory.
//!
//! Exit codes: `0` success, `2` invalid input (bad flags, configuration, or
//! parameters), `3` numerical failure (no event in the window, lost branch,
//! step-size underflow).

mod config;
mod output;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use config::RunConfig;
use output::{num, trajectory_svg, write_file};
use voctri::bifurcation::{
    locate_fold, locate_hopf, scan_parameter, transcritical_attraction, transcritical_mortality,
    BifParam,
};
use voctri::certificate::{certify, estimate_eta, search_weights, CertificateConfig};
use voctri::equilibria::{aphid_free_equilibrium, collapse_equilibrium, find_interior_equilibria};
use voctri::model::feasible_region;
use voctri::simulate::{integrate, IntegratorConfig};
use voctri::stability::{classify_aphid_free, classify_collapse, classify_interior};

#[derive(Parser)]
#[command(
    name = "voctri",
    version,
    about = "Crop–aphid–natural-enemy dynamics: equilibria, stability, certificates, bifurcations, simulation"
)]
struct Cli {
    /// JSON configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a configuration key, e.g. --set b=0.24 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    /// Directory for CSV/SVG artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Locate all equilibria (collapse, aphid-free, coexistence).
    Equilibria,
    /// Classify the local stability of every equilibrium.
    Stability,
    /// Evaluate the global-stability certificate for the coexistence state.
    Certify {
        /// Persistence floor; falls back to the configuration, then to a
        /// trajectory-based estimate.
        #[arg(long)]
        eta: Option<f64>,
        /// Norm weights as "alpha,beta,zeta".
        #[arg(long)]
        weights: Option<String>,
        /// Search a weight grid for a certifying combination.
        #[arg(long)]
        search_weights: bool,
    },
    /// Sweep a parameter, classify branches, and detect bifurcations.
    Bifurcate {
        /// Scan window as "lo:hi".
        #[arg(long)]
        range: Option<String>,
        /// Number of scan increments.
        #[arg(long)]
        steps: Option<usize>,
        /// Locator tolerance on the parameter.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Critical parameter values: closed-form exchanges plus located fold
    /// and Hopf points.
    CriticalValues,
    /// Integrate the model from the configured initial state.
    Simulate {
        /// Relative step-error tolerance override.
        #[arg(long)]
        tol: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// Input problems exit with 2, numerical failures with 3.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<voctri::Error>() {
            return match e {
                voctri::Error::NoFoldInRange { .. }
                | voctri::Error::NoHopfInRange { .. }
                | voctri::Error::BranchLost { .. }
                | voctri::Error::StepSizeUnderflow { .. }
                | voctri::Error::NonFiniteState { .. }
                | voctri::Error::NotCritical(_) => 3,
                _ => 2,
            };
        }
    }
    2
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for assignment in &cli.set {
        cfg.apply_set(assignment)?;
    }
    std::fs::create_dir_all(&cli.out)
        .with_context(|| format!("cannot create output directory {}", cli.out.display()))?;

    match cli.command {
        Command::Equilibria => cmd_equilibria(&cfg, &cli.out),
        Command::Stability => cmd_stability(&cfg, &cli.out),
        Command::Certify {
            eta,
            weights,
            search_weights,
        } => cmd_certify(&cfg, &cli.out, eta, weights.as_deref(), search_weights),
        Command::Bifurcate { range, steps, tol } => {
            cmd_bifurcate(&cfg, &cli.out, range.as_deref(), steps, tol)
        }
        Command::CriticalValues => cmd_critical_values(&cfg, &cli.out),
        Command::Simulate { tol } => cmd_simulate(&cfg, &cli.out, tol),
    }
}

fn cmd_equilibria(cfg: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let p = cfg.params();
    p.validate()?;
    let search = find_interior_equilibria(&p, cfg.grid_points, cfg.tol);

    let mut reports = vec![collapse_equilibrium(&p), aphid_free_equilibrium(&p)];
    reports.extend(search.roots.iter().copied());

    let mut csv = String::from("kind,x,y,z,residual,marginal\n");
    for r in &reports {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.kind,
            num(r.point.crop),
            num(r.point.aphids),
            num(r.point.enemies),
            num(r.residual),
            r.marginal
        );
        println!(
            "{}: x={:.6} y={:.6} z={:.6} residual={:.3e}{}",
            r.kind,
            r.point.crop,
            r.point.aphids,
            r.point.enemies,
            r.residual,
            if r.marginal { " (marginal)" } else { "" }
        );
    }
    let ex = &search.existence;
    println!(
        "coexistence states: {} transversal; growth outpaces mortality: {}; boundary threshold holds: {}",
        search.transversal_count(),
        ex.conversion_exceeds_mortality,
        ex.threshold_holds
    );
    write_file(&out.join("equilibria.csv"), &csv)
}

fn cmd_stability(cfg: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let p = cfg.params();
    p.validate()?;
    let search = find_interior_equilibria(&p, cfg.grid_points, cfg.tol);

    let mut reports = vec![classify_collapse(&p), classify_aphid_free(&p)];
    for root in &search.roots {
        reports.push(classify_interior(&p, root));
    }

    let mut csv = String::from("kind,x,y,z,verdict,a1,a2,a3,g\n");
    for r in &reports {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            r.kind,
            num(r.point.crop),
            num(r.point.aphids),
            num(r.point.enemies),
            r.verdict,
            num(r.coeffs.a1),
            num(r.coeffs.a2),
            num(r.coeffs.a3),
            num(r.coeffs.rh_discriminant)
        );
        println!(
            "{} at (x={:.6}, y={:.6}, z={:.6}): {}",
            r.kind, r.point.crop, r.point.aphids, r.point.enemies, r.verdict
        );
        if let Some((gain, loss)) = r.threshold {
            println!("  invasion gain {:.6} vs loss {:.6}", gain, loss);
        }
    }
    write_file(&out.join("stability.csv"), &csv)
}

fn parse_weights(text: &str) -> anyhow::Result<[f64; 3]> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        anyhow::bail!("weights must be three comma-separated numbers, got `{text}`");
    }
    let mut w = [0.0; 3];
    for (slot, part) in w.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse::<f64>()
            .with_context(|| format!("weight `{part}` is not a number"))?;
    }
    Ok(w)
}

fn cmd_certify(
    cfg: &RunConfig,
    out: &Path,
    eta_flag: Option<f64>,
    weights_flag: Option<&str>,
    search: bool,
) -> anyhow::Result<()> {
    let p = cfg.params();
    p.validate()?;
    let region = feasible_region(&p, cfg.x0);

    let eta = match eta_flag.or(cfg.eta) {
        Some(v) => v,
        None => {
            let est = estimate_eta(&p, cfg.initial_state(), cfg.t_end)?;
            println!("estimated persistence floor eta = {}", num(est));
            est
        }
    };

    let report = if search {
        search_weights(&p, eta, region, 50)?
    } else {
        let weights = match weights_flag {
            Some(text) => parse_weights(text)?,
            None => [cfg.alpha, cfg.beta, cfg.zeta],
        };
        certify(&p, CertificateConfig::new(eta, weights, region)?)
    };

    let [alpha, beta, zeta] = report.config.weights;
    println!("region: crop <= {:.6}, weighted biomass <= {:.6}", region.k1, region.total_cap);
    println!("floor eta = {:.6}, weights alpha={alpha:.6} beta={beta:.6} zeta={zeta:.6}", report.config.eta);
    println!(
        "case bounds: {:.6} {:.6} {:.6} (sup {:.6})",
        report.cases[0], report.cases[1], report.cases[2], report.sup
    );
    println!(
        "compat case bounds: {:.6} {:.6} {:.6} (sup {:.6})",
        report.alt_cases[0], report.alt_cases[1], report.alt_cases[2], report.alt_sup
    );
    if report.n12_mismatch {
        println!(
            "note: conventions for the (1,2) bound disagree here: {} vs {}",
            num(report.bounds.n12),
            num(report.alt_n12)
        );
    }
    println!(
        "persistence: invasion gain {:.6} vs loss {:.6} -> {}",
        report.persistence.invasion_gain,
        report.persistence.invasion_loss,
        if report.persistence.holds { "holds" } else { "fails" }
    );
    println!("verdict: {}", report.verdict);

    let n = &report.bounds;
    let mut csv = String::from("name,value\n");
    for (name, value) in [
        ("eta", report.config.eta),
        ("alpha", alpha),
        ("beta", beta),
        ("zeta", zeta),
        ("k1", region.k1),
        ("total_cap", region.total_cap),
        ("n11", n.n11),
        ("n12", n.n12),
        ("n12_compat", report.alt_n12),
        ("n21", n.n21),
        ("n22", n.n22),
        ("n23", n.n23),
        ("n31", n.n31),
        ("n32", n.n32),
        ("n33", n.n33),
        ("case1", report.cases[0]),
        ("case2", report.cases[1]),
        ("case3", report.cases[2]),
        ("sup", report.sup),
        ("case1_compat", report.alt_cases[0]),
        ("case2_compat", report.alt_cases[1]),
        ("case3_compat", report.alt_cases[2]),
        ("sup_compat", report.alt_sup),
        ("invasion_gain", report.persistence.invasion_gain),
        ("invasion_loss", report.persistence.invasion_loss),
        ("persistence_holds", f64::from(u8::from(report.persistence.holds))),
        ("n12_mismatch", f64::from(u8::from(report.n12_mismatch))),
        (
            "certified",
            f64::from(u8::from(report.verdict == voctri::certificate::CertVerdict::Certified)),
        ),
    ] {
        let _ = writeln!(csv, "{name},{}", num(value));
    }
    write_file(&out.join("certificate.csv"), &csv)
}

fn parse_range(text: &str) -> anyhow::Result<(f64, f64)> {
    let Some((lo, hi)) = text.split_once(':') else {
        anyhow::bail!("range must be of the form lo:hi, got `{text}`");
    };
    let lo = lo
        .trim()
        .parse::<f64>()
        .with_context(|| format!("range endpoint `{lo}` is not a number"))?;
    let hi = hi
        .trim()
        .parse::<f64>()
        .with_context(|| format!("range endpoint `{hi}` is not a number"))?;
    Ok((lo, hi))
}

fn cmd_bifurcate(
    cfg: &RunConfig,
    out: &Path,
    range_flag: Option<&str>,
    steps_flag: Option<usize>,
    tol_flag: Option<f64>,
) -> anyhow::Result<()> {
    let p = cfg.params();
    p.validate()?;
    let param = cfg.bif_param()?;
    let range = match range_flag {
        Some(text) => parse_range(text)?,
        None => cfg.scan_range(param),
    };
    let steps = steps_flag.unwrap_or(cfg.steps);
    let _ = tol_flag; // scan locators refine to their own tight tolerance
    let scan = scan_parameter(&p, param, range, steps)?;

    let mut branches = format!("{},x,y,z,verdict,a1,a2,a3,g\n", param.key());
    for row in &scan.rows {
        for entry in &row.entries {
            let _ = writeln!(
                branches,
                "{},{},{},{},{},{},{},{},{}",
                num(row.value),
                num(entry.point.crop),
                num(entry.point.aphids),
                num(entry.point.enemies),
                entry.verdict,
                num(entry.coeffs.a1),
                num(entry.coeffs.a2),
                num(entry.coeffs.a3),
                num(entry.coeffs.rh_discriminant)
            );
        }
    }

    let mut events = String::from(
        "kind,parameter,value,x,y,z,q1,q2,q3,nondegenerate,crossing_speed,defect\n",
    );
    for ev in &scan.events {
        let (q1, q2, q3, nondeg) = match &ev.transversality {
            Some(t) => (
                num(t.q1),
                num(t.q2),
                num(t.q3),
                t.nondegenerate.to_string(),
            ),
            None => (String::new(), String::new(), String::new(), String::new()),
        };
        let speed = ev.crossing_speed.map(num).unwrap_or_default();
        let _ = writeln!(
            events,
            "{},{},{},{},{},{},{q1},{q2},{q3},{nondeg},{speed},{}",
            ev.kind,
            ev.parameter,
            num(ev.value),
            num(ev.location.crop),
            num(ev.location.aphids),
            num(ev.location.enemies),
            num(ev.defect)
        );
        println!("{} at {} = {}", ev.kind, ev.parameter, num(ev.value));
    }
    println!(
        "scanned {} over [{}, {}] in {} steps: {} branch rows, {} events",
        param.key(),
        range.0,
        range.1,
        steps,
        scan.rows.iter().map(|r| r.entries.len()).sum::<usize>(),
        scan.events.len()
    );

    write_file(&out.join("scan.csv"), &branches)?;
    write_file(&out.join("events.csv"), &events)
}

fn cmd_critical_values(cfg: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let p = cfg.params();
    p.validate()?;

    let m_star = transcritical_mortality(&p);
    let b_star = transcritical_attraction(&p);
    let fold = locate_fold(&p, BifParam::Attraction, (cfg.fold_lo, cfg.fold_hi), cfg.tol)?;
    let hopf = locate_hopf(&p, BifParam::Attraction, (cfg.hopf_lo, cfg.hopf_hi), cfg.tol)?;

    let mut csv = String::from("name,value\n");
    for (name, value) in [
        ("m_star", m_star),
        ("b_star", b_star),
        ("b_fold", fold.value),
        ("b_hopf", hopf.value),
    ] {
        println!("{name} = {}", num(value));
        let _ = writeln!(csv, "{name},{}", num(value));
    }
    write_file(&out.join("critical_values.csv"), &csv)
}

fn cmd_simulate(cfg: &RunConfig, out: &Path, tol_flag: Option<f64>) -> anyhow::Result<()> {
    let p = cfg.params();
    p.validate()?;
    let icfg = IntegratorConfig {
        rel_tol: tol_flag.unwrap_or(cfg.rel_tol),
        abs_tol: cfg.abs_tol,
        max_step: cfg.max_step,
        ..IntegratorConfig::new(cfg.initial_state(), cfg.t_end)
    };
    let traj = integrate(&p, &icfg)?;

    let mut csv = String::from("t,x,y,z\n");
    for s in &traj.samples {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            num(s.t),
            num(s.state.crop),
            num(s.state.aphids),
            num(s.state.enemies)
        );
    }
    write_file(&out.join("trajectory.csv"), &csv)?;
    if cfg.svg {
        write_file(&out.join("trajectory.svg"), &trajectory_svg(&traj.samples))?;
    }

    let last = traj.last();
    println!(
        "integrated to t = {}: x={:.6} y={:.6} z={:.6}",
        last.t, last.state.crop, last.state.aphids, last.state.enemies
    );
    println!("steps: {} accepted, {} rejected", traj.accepted, traj.rejected);
    for (name, monitor) in [
        ("positivity", traj.positivity),
        ("boundedness", traj.boundedness),
    ] {
        match monitor.first_violation {
            None => println!("{name}: ok"),
            Some(t) => println!("{name}: violated at t = {t}"),
        }
    }
    Ok(())
}
