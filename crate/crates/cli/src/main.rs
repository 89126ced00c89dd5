//! `chirpsim` command line: validation, single runs, sweeps and scaling studies.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use chirpsim::adiabatic::{build_slow_hamiltonian, endpoint_projectors, estimate_suite, write_eigendirections, write_report};
use chirpsim::harness::{self, Axis, ExperimentConfig, HarnessError, PulseFamily, Regime, WORKERS_ENV};
use chirpsim::pulse::{certify_frequencies, DEFAULT_WINDOW};
use chirpsim::PulseSpec;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "chirpsim", version, about = "Chirped-pulse population transfer in two-level systems")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct Common {
    /// Flat `key=value` config file.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Config override, repeatable (`--set alpha=0.25`).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,
    #[arg(long = "E", global = true)]
    e: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    eps1: Option<f64>,
    #[arg(long, global = true)]
    eps2: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    v0: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    v1: Option<f64>,
    /// sine, one-minus-cos, hann or custom.
    #[arg(long, global = true)]
    scheme: Option<String>,
    /// Elimination order N0.
    #[arg(long = "n0", global = true)]
    n0: Option<u32>,
    /// magnus2 or magnus4.
    #[arg(long, global = true)]
    method: Option<String>,
    #[arg(long = "ppp", global = true)]
    points_per_period: Option<u32>,
    #[arg(long, short = 'j', global = true, env = WORKERS_ENV)]
    workers: Option<usize>,
    /// Output file (stdout when absent).
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Check pulse hypotheses and the frequency certificate.
    Validate,
    /// One full pipeline run.
    Single,
    /// Log-spaced (eps1, eps2) grid.
    Sweep2d {
        /// `min:max:n`
        #[arg(long, value_parser = parse_axis_log)]
        eps1_range: Option<Axis>,
        #[arg(long, value_parser = parse_axis_log)]
        eps2_range: Option<Axis>,
    },
    /// Linear alpha grid at fixed (eps1, eps2).
    SweepAlpha {
        #[arg(long, value_parser = parse_axis_lin, allow_hyphen_values = true)]
        alpha_range: Option<Axis>,
    },
    /// Endpoint distance along eps1 = eps2^(2/N0).
    Scaling {
        #[arg(long, value_delimiter = ',')]
        eps2_list: Vec<f64>,
    },
    /// Real against complex field.
    Compare {
        #[arg(long, value_delimiter = ',')]
        eps_list: Vec<f64>,
        #[arg(long, value_enum, default_value_t = FamilyArg::SingleScale)]
        family: FamilyArg,
    },
    /// First-order RWA dynamics alone at E = 0, alpha = 0.
    RwaOnly {
        #[arg(long, value_delimiter = ',')]
        eps2_list: Vec<f64>,
        #[arg(long, value_enum, default_value_t = RegimeArg::Squared)]
        regime: RegimeArg,
    },
    /// Adiabatic passage without the RWA along the half-circle path.
    AdiabaticDemo {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-0.4,0,0.4")]
        alphas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.025")]
        eps_list: Vec<f64>,
    },
    /// Fidelity trajectories plus a gnuplot script.
    Trajectory {
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        /// Output stem; writes `<stem>_full.csv`, `<stem>_rwa1.csv`, `<stem>_aa.csv`, `<stem>.gp`.
        #[arg(long, default_value = "trajectory")]
        stem: PathBuf,
    },
    /// Text dump of the cleaned operator series.
    EliminateDump,
    /// Gap, projector derivatives and bound integrand over s.
    AdiabaticReport {
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Negative-eigenvalue Bloch direction over a (u, Delta') grid.
    Eigendirections {
        #[arg(long, default_value_t = 40)]
        points: usize,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FamilyArg {
    SingleScale,
    TwoScale,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum RegimeArg {
    Squared,
    Root,
}

fn parse_axis(s: &str, log: bool) -> Result<Axis, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected min:max:n, got {s:?}"));
    }
    let min = parts[0].parse::<f64>().map_err(|e| e.to_string())?;
    let max = parts[1].parse::<f64>().map_err(|e| e.to_string())?;
    let n = parts[2].parse::<usize>().map_err(|e| e.to_string())?;
    Ok(Axis { min, max, n, log })
}

fn parse_axis_log(s: &str) -> Result<Axis, String> {
    parse_axis(s, true)
}

fn parse_axis_lin(s: &str) -> Result<Axis, String> {
    parse_axis(s, false)
}

fn load(common: &Common) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::new(PulseSpec::reference(0.5, 0.1, 0.0), 3),
    };
    let mut overrides: Vec<(String, String)> = Vec::new();
    let mut num = |k: &str, v: Option<f64>| {
        if let Some(v) = v {
            overrides.push((k.into(), v.to_string()));
        }
    };
    num("v0", common.v0);
    num("v1", common.v1);
    num("E", common.e);
    num("alpha", common.alpha);
    num("eps1", common.eps1);
    num("eps2", common.eps2);
    if let Some(s) = &common.scheme {
        overrides.push(("scheme".into(), s.clone()));
    }
    if let Some(n) = common.n0 {
        overrides.push(("N0".into(), n.to_string()));
    }
    if let Some(m) = &common.method {
        overrides.push(("method".into(), m.clone()));
    }
    if let Some(p) = common.points_per_period {
        overrides.push(("points_per_period".into(), p.to_string()));
    }
    for s in &common.sets {
        let (k, v) = s.split_once('=').ok_or_else(|| HarnessError::Config(format!("expected KEY=VALUE, got {s:?}")))?;
        overrides.push((k.trim().into(), v.trim().into()));
    }
    for (k, v) in overrides {
        cfg.set(&k, &v)?;
    }
    if common.workers.is_some() {
        cfg.workers = common.workers;
    }
    if common.out.is_some() {
        cfg.output = common.out.clone();
    }
    if cfg.n0 == 0 {
        return Err(HarnessError::Config("N0 must be at least 1".into()));
    }
    Ok(cfg)
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>, HarnessError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let mut cfg = load(&cli.common)?;
    let out = cfg.output.clone();
    match cli.cmd {
        Cmd::Validate => {
            let report = cfg.spec.validate();
            let cert = certify_frequencies(&cfg.spec.frequencies(), DEFAULT_WINDOW);
            let mut w = sink(&out)?;
            writeln!(w, "{report}")?;
            writeln!(
                w,
                "frequency certificate: {} (min|lambda| = {:.6}, min|phi| = {:.6}, min|f1-f2| = {:.6}, 2f1<f2 margin = {:.6})",
                if cert.passed() { "pass" } else { "FAIL" },
                cert.min_lambda(),
                cert.min_phi(),
                cert.min_abs_f1_minus_f2,
                cert.omega_margin
            )?;
            w.flush()?;
            if !report.is_valid() || !cert.passed() {
                return Err(HarnessError::Validation("pulse hypotheses or frequency certificate not satisfied".into()));
            }
        }
        Cmd::Single => {
            let row = harness::run_single(&cfg.spec, cfg.n0, &cfg.propagator)?;
            eprintln!("wall time: {:.3} s", row.wall_time.as_secs_f64());
            harness::write_rows(sink(&out)?, "single", &[row])?;
        }
        Cmd::Sweep2d { eps1_range, eps2_range } => {
            if let Some(a) = eps1_range {
                cfg.eps1_axis = a;
            }
            if let Some(a) = eps2_range {
                cfg.eps2_axis = a;
            }
            let rows = harness::sweep2d(&cfg)?;
            report_failures(&rows);
            harness::write_rows(sink(&out)?, "sweep2d", &rows)?;
        }
        Cmd::SweepAlpha { alpha_range } => {
            if let Some(a) = alpha_range {
                cfg.alpha_axis = a;
            }
            let rows = harness::sweep_alpha(&cfg)?;
            report_failures(&rows);
            harness::write_rows(sink(&out)?, "sweep-alpha", &rows)?;
        }
        Cmd::Scaling { eps2_list } => {
            if !eps2_list.is_empty() {
                cfg.eps_list = eps2_list;
            }
            let rep = harness::scaling_study(&cfg)?;
            eprintln!("slope = {:.4}, target = {:.4}", rep.slope, rep.target);
            harness::write_scaling(sink(&out)?, &rep)?;
        }
        Cmd::Compare { eps_list, family } => {
            if !eps_list.is_empty() {
                cfg.eps_list = eps_list;
            }
            let family = match family {
                FamilyArg::SingleScale => PulseFamily::SingleScale,
                FamilyArg::TwoScale => PulseFamily::TwoScale,
            };
            harness::write_compare(sink(&out)?, &harness::compare_real_complex(&cfg, family)?)?;
        }
        Cmd::RwaOnly { eps2_list, regime } => {
            if !eps2_list.is_empty() {
                cfg.eps_list = eps2_list;
            }
            let regime = match regime {
                RegimeArg::Squared => Regime::Squared,
                RegimeArg::Root => Regime::Root,
            };
            harness::write_rwa(sink(&out)?, &harness::rwa_only_study(&cfg, regime)?)?;
        }
        Cmd::AdiabaticDemo { alphas, eps_list } => {
            let rows = harness::adiabatic_demo(&harness::demo_path(), &alphas, &eps_list, &cfg)?;
            harness::write_demo(sink(&out)?, &rows)?;
        }
        Cmd::Trajectory { samples, stem } => {
            if samples == 0 {
                return Err(HarnessError::Config("samples must be positive".into()));
            }
            for p in harness::trajectory_dump(&cfg.spec, samples, &cfg.propagator, &stem)? {
                println!("{}", p.display());
            }
        }
        Cmd::EliminateDump => {
            let mut w = sink(&out)?;
            w.write_all(harness::eliminate_dump(&cfg.spec, cfg.n0)?.as_bytes())?;
            w.flush()?;
        }
        Cmd::AdiabaticReport { points } => {
            harness::check_valid(&cfg.spec)?;
            let prep = harness::prepare(&cfg.spec, cfg.n0)?;
            let sh = build_slow_hamiltonian(&prep.effective, &cfg.spec);
            let est = estimate_suite(&sh, &cfg.spec)?;
            let ends = endpoint_projectors(&sh)?;
            eprintln!("{est:#?}");
            eprintln!("endpoint projector distances: initial {:.3e}, target {:.3e}", ends.dist_initial, ends.dist_target);
            let mut w = sink(&out)?;
            writeln!(w, "{}", harness::SCHEMA_HEADER)?;
            writeln!(w, "# experiment=adiabatic-report")?;
            write_report(&mut w, &sh, points.max(1)).map_err(|e| HarnessError::Numerical(e.to_string()))?;
        }
        Cmd::Eigendirections { points } => {
            let spec = &cfg.spec;
            let d1 = spec.delta.derivative();
            let dd = (d1.eval_unchecked(0.0).min(d1.eval_unchecked(1.0)), d1.eval_unchecked(0.0).max(d1.eval_unchecked(1.0)));
            let mut w = sink(&out)?;
            writeln!(w, "{}", harness::SCHEMA_HEADER)?;
            writeln!(w, "# experiment=eigendirections")?;
            write_eigendirections(&mut w, spec.eps1, spec.alpha, (0.0, spec.u.inf_norm()), dd, points.max(1))?;
        }
    }
    Ok(())
}

fn report_failures(rows: &[harness::ResultRow]) {
    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        eprintln!("{failed} of {} cells failed; see the status column", rows.len());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
