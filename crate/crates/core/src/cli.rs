//! Command-line front end.
//!
//! Every command prints a human-readable report followed by machine lines of
//! the form `key=value`. Machine lines never carry timings, so identical
//! inputs give byte-identical machine output.
//!
//! Exit codes: 0 success, 1 not converged / not verified / not certified,
//! 2 infeasibility detected, 3 input error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gpg::{self, CertifyOutcome};
use crate::gs::{gs_solve, verify_gne, GneReport, GsConfig, GsStatus, TauRule};
use crate::instance::{builtin_setup, parse_instance, random_instance, GneppInstance, RandomConstraint};
use crate::pop::{pop_minimize, PopOptions, PopStatus};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "gnepp", version, about = "Gauss-Seidel solver for polynomial GNEPs")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the Gauss-Seidel method, then verify the final iterate.
    Solve {
        #[command(flatten)]
        src: Source,
        #[command(flatten)]
        gs: GsFlags,
        #[command(flatten)]
        pop: PopFlags,
        /// Start point, comma separated; defaults to the builtin's start or zero.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1e-6)]
        gne_tol: f64,
    },
    /// Check whether a point is a GNE.
    Verify {
        #[command(flatten)]
        src: Source,
        #[command(flatten)]
        pop: PopFlags,
        /// Point to check, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        point: Vec<f64>,
        #[arg(long, default_value_t = 1e-6)]
        gne_tol: f64,
    },
    /// Search for a generalized-potential-game certificate.
    Certify {
        #[command(flatten)]
        src: Source,
        /// Half degree d of the certificate (degree 2d); default max ceil(deg f_i / 2) + 1,
        /// retried once at d + 1.
        #[arg(long)]
        cert_degree: Option<u32>,
        #[arg(long, default_value_t = gpg::CERT_TOL)]
        cert_tol: f64,
    },
    /// Solve random instances and report the success rate.
    Bench {
        /// Number of players; with a single `--dims` value every player gets that dimension.
        #[arg(long)]
        players: Option<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long)]
        deg: u32,
        /// simplex or ball
        #[arg(long)]
        constraint: RandomConstraint,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-6)]
        gne_tol: f64,
    },
    /// Minimize player 1's objective over its constraints with the Moment-SOS hierarchy.
    Pop {
        #[command(flatten)]
        src: Source,
        #[command(flatten)]
        pop: PopFlags,
    },
}

#[derive(Args, Debug)]
struct Source {
    /// Problem file.
    file: Option<PathBuf>,
    /// Built-in example instead of a file.
    #[arg(long, conflicts_with = "file")]
    builtin: Option<String>,
    /// Add `R^2 - ||x_i||^2 >= 0` to every player.
    #[arg(long, value_name = "R")]
    add_ball: Option<f64>,
}

#[derive(Args, Debug)]
struct GsFlags {
    /// Defaults to the builtin's setting, else 0.1.
    #[arg(long)]
    tau0: Option<f64>,
    /// fixed, adaptive or zero; defaults to the builtin's setting, else adaptive.
    #[arg(long)]
    tau_rule: Option<TauRule>,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    conv_tol: f64,
}

#[derive(Args, Debug)]
struct PopFlags {
    /// Highest relaxation order; default d_0 + 3.
    #[arg(long)]
    order_max: Option<u32>,
    #[arg(long, default_value_t = 1e-6)]
    rank_tol: f64,
    /// Seed of the random combination used in minimizer extraction.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl PopFlags {
    fn options(&self) -> PopOptions {
        PopOptions { d_max: self.order_max, rank_tol: self.rank_tol, seed: self.seed, ..PopOptions::default() }
    }
}

struct Loaded {
    inst: GneppInstance,
    x0: Option<Vec<f64>>,
    tau0: Option<f64>,
    rule: Option<TauRule>,
}

impl Source {
    fn load(&self) -> Result<Loaded> {
        let mut loaded = match (&self.file, &self.builtin) {
            (Some(path), None) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
                Loaded { inst: parse_instance(&text)?, x0: None, tau0: None, rule: None }
            }
            (None, Some(name)) => {
                let b = builtin_setup(name)?;
                Loaded { inst: b.instance, x0: Some(b.x0), tau0: Some(b.tau0), rule: Some(b.tau_rule) }
            }
            _ => return Err(Error::Input("give a problem file or --builtin NAME".into())),
        };
        if let Some(r) = self.add_ball {
            if !(r > 0.0) {
                return Err(Error::Input("--add-ball needs a positive radius".into()));
            }
            loaded.inst = loaded.inst.with_ball(r);
        }
        Ok(loaded)
    }
}

/// Four decimals, without a sign on zero.
pub fn fmt4(v: f64) -> String {
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

pub fn fmt_point(x: &[f64]) -> String {
    format!("({})", x.iter().map(|&v| fmt4(v)).collect::<Vec<_>>().join(", "))
}

/// Full-precision, round-trippable list.
pub fn fmt_exact(x: &[f64]) -> String {
    x.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",")
}

/// Lines of the form `key=value`.
pub fn machine_lines(output: &str) -> Vec<&str> {
    output
        .lines()
        .filter(|l| l.split_once('=').is_some_and(|(k, _)| !k.is_empty() && !k.contains(' ')))
        .collect()
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    let res = match cli.cmd {
        Command::Solve { src, gs, pop, x0, gne_tol } => cmd_solve(&src, &gs, &pop, x0, gne_tol, out),
        Command::Verify { src, pop, point, gne_tol } => cmd_verify(&src, &pop, &point, gne_tol, out),
        Command::Certify { src, cert_degree, cert_tol } => cmd_certify(&src, cert_degree, cert_tol, out),
        Command::Bench { players, dims, deg, constraint, count, seed, max_iter, gne_tol } => {
            let shape = BenchShape { players, dims, deg, constraint };
            cmd_bench(&shape, count, seed, max_iter, gne_tol, out)
        }
        Command::Pop { src, pop } => cmd_pop(&src, &pop, out),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::Numerical(_) => EXIT_FAIL,
                _ => EXIT_INPUT,
            }
        }
    }
}

fn io(e: std::io::Error) -> Error {
    Error::Input(format!("cannot write output: {e}"))
}

fn write_report(rep: &GneReport, out: &mut dyn Write) -> std::io::Result<()> {
    for (i, p) in rep.players.iter().enumerate() {
        writeln!(
            out,
            "  player {}: f_i(x) {:.6e}, best response value {:.6e}, gap {:.3e} ({:?})",
            i + 1,
            p.value,
            p.optimum,
            p.gap,
            p.status
        )?;
        if let Some(br) = &p.best_response {
            if p.gap > rep.threshold {
                writeln!(out, "    better response {}", fmt_point(br))?;
            }
        }
    }
    writeln!(out, "  max constraint violation {:.3e}", rep.max_violation)?;
    writeln!(out, "  {} a GNE at accuracy {:.1e}", if rep.is_gne { "is" } else { "is NOT" }, rep.threshold)?;
    Ok(())
}

fn write_verify_lines(rep: &GneReport, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "eps={:e}", rep.eps)?;
    writeln!(out, "max_violation={:e}", rep.max_violation)?;
    let gaps: Vec<f64> = rep.players.iter().map(|p| p.gap).collect();
    writeln!(out, "gaps={}", fmt_exact(&gaps))?;
    writeln!(out, "verified={}", rep.is_gne)
}

fn cmd_solve(
    src: &Source,
    flags: &GsFlags,
    pop: &PopFlags,
    x0: Option<Vec<f64>>,
    gne_tol: f64,
    out: &mut dyn Write,
) -> Result<i32> {
    let loaded = src.load()?;
    let inst = &loaded.inst;
    let x0 = x0.or(loaded.x0).unwrap_or_else(|| vec![0.0; inst.dim()]);
    if x0.len() != inst.dim() {
        return Err(Error::Input(format!("start point has {} entries, instance has {} variables", x0.len(), inst.dim())));
    }
    let cfg = GsConfig {
        tau0: flags.tau0.or(loaded.tau0).unwrap_or(0.1),
        rule: flags.tau_rule.or(loaded.rule).unwrap_or(TauRule::Adaptive),
        max_iter: flags.max_iter,
        conv_tol: flags.conv_tol,
        pop: pop.options(),
        ..GsConfig::default()
    };
    let trace = gs_solve(inst, &x0, &cfg)?;
    let x = trace.final_point();
    let w = |e| io(e);
    writeln!(out, "instance {} ({} players, {} variables)", inst.name, inst.num_players(), inst.dim()).map_err(w)?;
    writeln!(out, "tau0 {} rule {}", cfg.tau0, cfg.rule).map_err(w)?;
    for warn in &trace.warnings {
        writeln!(out, "warning: {warn}").map_err(w)?;
    }
    for (k, xk) in trace.iterates.iter().enumerate() {
        writeln!(out, "  x({k}) {}", fmt_point(xk)).map_err(w)?;
    }
    writeln!(out, "{} after {} iterations in {:.2} s", trace.status, trace.iterations(), trace.wall_time.as_secs_f64())
        .map_err(w)?;
    writeln!(out, "final point {}", fmt_point(x)).map_err(w)?;

    let rep = match verify_gne(inst, x, gne_tol, &cfg.pop) {
        Ok(r) => Some(r),
        Err(e) => {
            writeln!(out, "verification failed: {e}").map_err(w)?;
            None
        }
    };
    if let Some(r) = &rep {
        write_report(r, out).map_err(w)?;
    }

    writeln!(out, "status={}", trace.status.name()).map_err(w)?;
    match &trace.status {
        GsStatus::CycleDetected { period, outer_period } => {
            writeln!(out, "period={period}").map_err(w)?;
            writeln!(out, "outer_period={outer_period}").map_err(w)?;
        }
        GsStatus::SubproblemInfeasible { k, i } | GsStatus::SubproblemFailed { k, i, .. } => {
            writeln!(out, "k={k}").map_err(w)?;
            writeln!(out, "i={i}").map_err(w)?;
        }
        _ => {}
    }
    writeln!(out, "iters={}", trace.iterations()).map_err(w)?;
    writeln!(out, "point={}", fmt_exact(x)).map_err(w)?;
    match &rep {
        Some(r) => write_verify_lines(r, out).map_err(w)?,
        None => writeln!(out, "verified=false").map_err(w)?,
    }
    Ok(match (&trace.status, &rep) {
        (GsStatus::SubproblemInfeasible { .. }, _) => EXIT_INFEASIBLE,
        (_, Some(r)) if r.is_gne => EXIT_OK,
        _ => EXIT_FAIL,
    })
}

fn cmd_verify(src: &Source, pop: &PopFlags, point: &[f64], gne_tol: f64, out: &mut dyn Write) -> Result<i32> {
    let loaded = src.load()?;
    let inst = &loaded.inst;
    if point.len() != inst.dim() {
        return Err(Error::Input(format!("point has {} entries, instance has {} variables", point.len(), inst.dim())));
    }
    let rep = verify_gne(inst, point, gne_tol, &pop.options())?;
    let w = |e| io(e);
    writeln!(out, "instance {}", inst.name).map_err(w)?;
    writeln!(out, "point {}", fmt_point(point)).map_err(w)?;
    write_report(&rep, out).map_err(w)?;
    write_verify_lines(&rep, out).map_err(w)?;
    Ok(if rep.is_gne { EXIT_OK } else { EXIT_FAIL })
}

fn cmd_certify(src: &Source, degree: Option<u32>, cert_tol: f64, out: &mut dyn Write) -> Result<i32> {
    let loaded = src.load()?;
    let inst = &loaded.inst;
    let w = |e| io(e);
    writeln!(out, "instance {}", inst.name).map_err(w)?;
    let warnings = inst.shared_constraint_warnings();
    for warn in &warnings {
        writeln!(out, "warning: {warn}").map_err(w)?;
    }
    let start = Instant::now();
    let outcome = gpg::certify_auto(inst, degree, cert_tol)?;
    match &outcome {
        CertifyOutcome::Certified(c) => {
            write!(out, "{}", gpg::report(inst, c)).map_err(w)?;
            writeln!(out, "solved in {:.2} s", start.elapsed().as_secs_f64()).map_err(w)?;
            writeln!(out, "status=Certified").map_err(w)?;
            writeln!(out, "degree={}", 2 * c.order).map_err(w)?;
            writeln!(out, "potential={}", gpg::format_potential(inst, &c.potential)).map_err(w)?;
            writeln!(out, "residual={:e}", c.max_residual()).map_err(w)?;
            writeln!(out, "min_eig={:e}", c.min_eig()).map_err(w)?;
        }
        CertifyOutcome::NotCertified { order, reason } => {
            writeln!(out, "no certificate: {reason}").map_err(w)?;
            writeln!(out, "status=NotCertified").map_err(w)?;
            writeln!(out, "degree={}", 2 * order).map_err(w)?;
        }
    }
    writeln!(out, "shared_constraints={}", if warnings.is_empty() { "consistent" } else { "unverified" }).map_err(w)?;
    Ok(if outcome.is_certified() { EXIT_OK } else { EXIT_FAIL })
}

struct BenchShape {
    players: Option<usize>,
    dims: Vec<usize>,
    deg: u32,
    constraint: RandomConstraint,
}

impl BenchShape {
    fn dims(&self) -> Result<Vec<usize>> {
        match (self.players, self.dims.as_slice()) {
            (Some(n), [d]) => Ok(vec![*d; n]),
            (Some(n), ds) if ds.len() != n => {
                Err(Error::Input(format!("--players {n} does not match {} dimensions", ds.len())))
            }
            (_, ds) => Ok(ds.to_vec()),
        }
    }
}

/// One benchmark run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub name: String,
    pub seed: u64,
    /// A Gauss-Seidel status name, or `Verified` / `NotVerified` after a
    /// run that converged or reached the iteration cap.
    pub status: String,
    pub iterations: usize,
    pub eps: f64,
    pub wall_time: f64,
    pub gaps: Vec<f64>,
}

impl RunRecord {
    pub fn success(&self) -> bool {
        self.status == "Verified"
    }
}

/// Solves one random instance with τ0 = 0.1 and the adaptive rule.
pub fn bench_run(
    dims: &[usize],
    deg: u32,
    constraint: RandomConstraint,
    seed: u64,
    max_iter: usize,
    gne_tol: f64,
) -> Result<RunRecord> {
    let inst = random_instance(dims, deg, constraint, seed)?;
    let x0 = constraint.start_point(&inst.layout);
    let cfg = GsConfig { tau0: 0.1, rule: TauRule::Adaptive, max_iter, ..GsConfig::default() };
    let start = Instant::now();
    let mut rec = RunRecord {
        name: inst.name.clone(),
        seed,
        status: String::new(),
        iterations: 0,
        eps: f64::INFINITY,
        wall_time: 0.0,
        gaps: Vec::new(),
    };
    match gs_solve(&inst, &x0, &cfg) {
        Ok(trace) => {
            rec.iterations = trace.iterations();
            rec.status = trace.status.name().to_string();
            // a run that used up its iterations still counts when the final
            // iterate verifies
            if matches!(trace.status, GsStatus::Converged | GsStatus::MaxIterReached) {
                if let Ok(rep) = verify_gne(&inst, trace.final_point(), gne_tol, &cfg.pop) {
                    rec.eps = rep.eps;
                    rec.gaps = rep.players.iter().map(|p| p.gap).collect();
                    rec.status = if rep.is_gne { "Verified" } else { "NotVerified" }.to_string();
                } else {
                    rec.status = "NotVerified".to_string();
                }
            }
        }
        Err(e) => rec.status = format!("Error({e})"),
    }
    rec.wall_time = start.elapsed().as_secs_f64();
    Ok(rec)
}

fn cmd_bench(shape: &BenchShape, count: usize, seed: u64, max_iter: usize, gne_tol: f64, out: &mut dyn Write) -> Result<i32> {
    let dims = shape.dims()?;
    // surface shape errors before spawning work
    random_instance(&dims, shape.deg, shape.constraint, seed)?;
    let records: Vec<RunRecord> = (0..count)
        .into_par_iter()
        .map(|k| bench_run(&dims, shape.deg, shape.constraint, seed.wrapping_add(k as u64), max_iter, gne_tol))
        .collect::<Result<_>>()?;
    let w = |e| io(e);
    let dims_s = dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",");
    let kind = match shape.constraint {
        RandomConstraint::Simplex => "simplex",
        RandomConstraint::Ball => "ball",
    };
    for (k, r) in records.iter().enumerate() {
        writeln!(out, "  #{k:<3} seed {:<6} {:<16} iters {:<4} eps {:.2e}  {:.2} s", r.seed, r.status, r.iterations, r.eps, r.wall_time)
            .map_err(w)?;
    }
    let ok = records.iter().filter(|r| r.success()).count();
    let rate = if count == 0 { 0.0 } else { 100.0 * ok as f64 / count as f64 };
    let avg_time = if ok == 0 {
        0.0
    } else {
        records.iter().filter(|r| r.success()).map(|r| r.wall_time).sum::<f64>() / ok as f64
    };
    writeln!(out, "{:>3} | {:>12} | {:>3} | {:>8} | {:>5} | {:>8} | {:>9}", "N", "dims", "deg", "set", "count", "success", "avg time").map_err(w)?;
    writeln!(
        out,
        "{:>3} | {:>12} | {:>3} | {:>8} | {:>5} | {:>7.0}% | {:>7.2} s",
        dims.len(),
        format!("({dims_s})"),
        shape.deg,
        kind,
        count,
        rate,
        avg_time
    )
    .map_err(w)?;
    for (k, r) in records.iter().enumerate() {
        writeln!(out, "run.{k}={} status={} iters={} eps={:e}", r.name, r.status, r.iterations, r.eps).map_err(w)?;
    }
    writeln!(out, "count={count}").map_err(w)?;
    writeln!(out, "successes={ok}").map_err(w)?;
    writeln!(out, "success_rate={rate}").map_err(w)?;
    Ok(EXIT_OK)
}

fn cmd_pop(src: &Source, pop: &PopFlags, out: &mut dyn Write) -> Result<i32> {
    let loaded = src.load()?;
    let inst = &loaded.inst;
    if inst.num_players() != 1 {
        return Err(Error::Input(format!("pop expects a single-player file, got {} players", inst.num_players())));
    }
    let p = &inst.players[0];
    let ineqs: Vec<_> = p.inequalities().cloned().collect();
    let eqs: Vec<_> = p.equalities().cloned().collect();
    let res = pop_minimize(&inst.layout.block_vars(0), &p.objective, &ineqs, &eqs, &pop.options())?;
    let w = |e| io(e);
    writeln!(out, "instance {}", inst.name).map_err(w)?;
    for (d, b) in &res.bounds {
        writeln!(out, "  order {d}: lower bound {b:.8e}").map_err(w)?;
    }
    for u in &res.minimizers {
        writeln!(out, "  minimizer {}", fmt_point(u)).map_err(w)?;
    }
    writeln!(out, "status={:?}", res.status).map_err(w)?;
    writeln!(out, "order={}", res.order).map_err(w)?;
    writeln!(out, "value={:e}", res.lower_bound).map_err(w)?;
    writeln!(out, "minimizers={}", res.minimizers.iter().map(|u| fmt_exact(u)).collect::<Vec<_>>().join(";")).map_err(w)?;
    Ok(match res.status {
        PopStatus::MinimizersExtracted => EXIT_OK,
        PopStatus::Infeasible => EXIT_INFEASIBLE,
        PopStatus::BoundOnly | PopStatus::OrderCapReached => EXIT_FAIL,
    })
}
