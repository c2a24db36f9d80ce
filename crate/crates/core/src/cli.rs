//! Command-line front end.
//!
//! Subcommands:
//! - `run --config <file> [--out <dir>]`: time-march the configured problem
//!   and write CSV reports, VTK snapshots and a manifest;
//! - `sweep --config <file> [--out <dir>]`: grid over the `[sweep]` lists,
//!   one summary row per cell (worst observed contraction ratio, bound,
//!   iterations);
//! - `validate [--out <dir>] [--fast]`: manufactured-solution convergence
//!   study and the Terzaghi consolidation benchmark, written as CSV tables;
//! - `compare-oracle --config <file> [--out <dir>]`: per-step discrepancy
//!   between the converged fixed-stress state and the fully implicit solve;
//! - `print-bound --config <file>`: the contraction quantities beta and
//!   (1/(lambda beta))^2 for the configured material.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::{apply_sweep_value, parse_config, SolverConfig};
use crate::error::Error;
use crate::fespace::make_dofmaps_drained;
use crate::fixed_stress::{beta, contraction_bound, Simulator};
use crate::oracle::{compare_states, MonolithicSolver};
use crate::output::{reports_csv, sci17, write_file, write_outputs};
use crate::validate::{
    manufactured_convergence, terzaghi_case, ManufacturedCase, SolvePath, TerzaghiCase,
};
use crate::Result;

/// Runs the CLI on pre-split arguments (no program name) and returns the
/// process exit status: 0 on success, 1 on usage/configuration errors, 2 on
/// runtime failures.
pub fn run_cli(args: &[String]) -> i32 {
    match dispatch(args) {
        Ok(()) => 0,
        Err(CliFailure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("{USAGE}");
            1
        }
        Err(CliFailure::Runtime(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

const USAGE: &str = "usage: porocontact <run|sweep|validate|compare-oracle|print-bound> \
[--config <file>] [--out <dir>] [--fast]";

enum CliFailure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliFailure {
    fn from(e: Error) -> Self {
        match e {
            Error::Usage(m) => CliFailure::Usage(m),
            Error::Config { .. } | Error::Expression(..) => CliFailure::Usage(e.to_string()),
            other => CliFailure::Runtime(other),
        }
    }
}

struct Flags {
    config: Option<String>,
    out: Option<String>,
    fast: bool,
}

fn parse_flags(args: &[String]) -> std::result::Result<Flags, CliFailure> {
    let mut flags = Flags {
        config: None,
        out: None,
        fast: false,
    };
    let mut it = args.iter();
    while let Some(a) = it.next() {
        match a.as_str() {
            "--config" | "-c" => {
                flags.config = Some(
                    it.next()
                        .ok_or_else(|| CliFailure::Usage("--config needs a path".into()))?
                        .clone(),
                )
            }
            "--out" | "-o" => {
                flags.out = Some(
                    it.next()
                        .ok_or_else(|| CliFailure::Usage("--out needs a directory".into()))?
                        .clone(),
                )
            }
            "--fast" => flags.fast = true,
            other => return Err(CliFailure::Usage(format!("unknown argument '{other}'"))),
        }
    }
    Ok(flags)
}

fn load_config(flags: &Flags) -> std::result::Result<SolverConfig, CliFailure> {
    let path = flags
        .config
        .as_ref()
        .ok_or_else(|| CliFailure::Usage("this subcommand needs --config <file>".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliFailure::Runtime(Error::Io {
            path: path.clone(),
            source: e,
        })
    })?;
    let cfg = parse_config(&text)?;
    for w in &cfg.warnings {
        println!("warning: {w}");
    }
    Ok(cfg)
}

fn dispatch(args: &[String]) -> std::result::Result<(), CliFailure> {
    let Some(cmd) = args.first() else {
        return Err(CliFailure::Usage("missing subcommand".into()));
    };
    let flags = parse_flags(&args[1..])?;
    match cmd.as_str() {
        "run" => cmd_run(&flags),
        "sweep" => cmd_sweep(&flags),
        "validate" => cmd_validate(&flags),
        "compare-oracle" => cmd_compare_oracle(&flags),
        "print-bound" => cmd_print_bound(&flags),
        other => Err(CliFailure::Usage(format!("unknown subcommand '{other}'"))),
    }
}

fn build_simulator(cfg: &SolverConfig) -> Result<Simulator> {
    let (mesh, warnings) = cfg.build_mesh()?;
    for w in warnings {
        println!("mesh warning: {w}");
    }
    let dofmaps = make_dofmaps_drained(&mesh, &cfg.drained);
    Simulator::with_dofmaps(
        mesh,
        dofmaps,
        cfg.params.clone(),
        cfg.loads.to_loads(),
        cfg.dt,
        cfg.opts.clone(),
    )
}

fn out_dir(cfg: &SolverConfig, flags: &Flags) -> PathBuf {
    PathBuf::from(flags.out.clone().unwrap_or_else(|| cfg.out_dir.clone()))
}

fn cmd_run(flags: &Flags) -> std::result::Result<(), CliFailure> {
    let cfg = load_config(flags)?;
    let sim = build_simulator(&cfg)?;
    let result = sim.run(sim.zero_state(), cfg.t_end);
    let dir = out_dir(&cfg, flags);
    let files = write_outputs(
        &dir,
        &sim.mesh,
        &result.states,
        &result.reports,
        &cfg.raw_text,
        cfg.vtk_every,
    )?;
    println!(
        "run: {} time steps, {} coupling iterations, outputs in {} ({} files)",
        result.reports.len(),
        result.reports.iter().map(|r| r.iterations()).sum::<usize>(),
        dir.display(),
        files.len()
    );
    if let Ok(bound) = contraction_bound(&cfg.params) {
        let worst = result
            .reports
            .iter()
            .filter_map(|r| r.worst_ratio())
            .fold(f64::NAN, f64::max);
        println!("contraction: worst observed ratio {worst:.6e}, bound {bound:.6e}");
    }
    let violations: usize = result.reports.iter().map(|r| r.violations.len()).sum();
    if violations > 0 {
        println!("warning: {violations} iteration(s) exceeded the contraction bound beyond slack");
    }
    if let Some((step, e)) = result.failure {
        return Err(CliFailure::Runtime(Error::StepFailed {
            step,
            source: Box::new(match *e {
                Error::StepFailed { source, .. } => *source,
                other => other,
            }),
        }));
    }
    Ok(())
}

fn cmd_sweep(flags: &Flags) -> std::result::Result<(), CliFailure> {
    let cfg = load_config(flags)?;
    if cfg.sweep.is_empty() {
        return Err(CliFailure::Usage(
            "sweep mode needs a [sweep] section with at least one parameter list".into(),
        ));
    }
    // Cross product in declaration order.
    let mut cells: Vec<Vec<(String, f64)>> = vec![Vec::new()];
    for (key, values) in &cfg.sweep {
        let mut next = Vec::new();
        for cell in &cells {
            for &v in values {
                let mut c = cell.clone();
                c.push((key.clone(), v));
                next.push(c);
            }
        }
        cells = next;
    }
    let dir = out_dir(&cfg, flags);

    struct Row {
        assignments: Vec<(String, f64)>,
        iterations: usize,
        worst_ratio: f64,
        bound: f64,
        converged: bool,
        csv: String,
    }

    let rows: Vec<Result<Row>> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for cell in &cells {
            let cfg = &cfg;
            handles.push(scope.spawn(move || -> Result<Row> {
                let mut params = cfg.params.clone();
                for (k, v) in cell {
                    params = apply_sweep_value(&params, k, *v, cfg.stab_l_explicit)?;
                }
                let (mesh, _) = cfg.build_mesh()?;
                let dofmaps = make_dofmaps_drained(&mesh, &cfg.drained);
                let sim = Simulator::with_dofmaps(
                    mesh,
                    dofmaps,
                    params.clone(),
                    cfg.loads.to_loads(),
                    cfg.dt,
                    cfg.opts.clone(),
                )?;
                let result = sim.run(sim.zero_state(), cfg.t_end);
                let iterations = result.reports.iter().map(|r| r.iterations()).sum();
                let worst_ratio = result
                    .reports
                    .iter()
                    .filter_map(|r| r.worst_ratio())
                    .fold(f64::NAN, f64::max);
                Ok(Row {
                    assignments: cell.clone(),
                    iterations,
                    worst_ratio,
                    bound: contraction_bound(&params).unwrap_or(f64::NAN),
                    converged: result.failure.is_none(),
                    csv: reports_csv(&result.reports),
                })
            }));
        }
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });

    let keys: Vec<&str> = cfg.sweep.iter().map(|(k, _)| k.as_str()).collect();
    let mut summary = String::from("cell,");
    summary.push_str(&keys.join(","));
    summary.push_str(",iterations,worst_ratio,bound,converged\n");
    for (i, row) in rows.iter().enumerate() {
        match row {
            Ok(r) => {
                let _ = write!(summary, "{i}");
                for (_, v) in &r.assignments {
                    let _ = write!(summary, ",{}", sci17(*v));
                }
                let _ = writeln!(
                    summary,
                    ",{},{},{},{}",
                    r.iterations,
                    sci17(r.worst_ratio),
                    sci17(r.bound),
                    r.converged
                );
                write_file(&dir.join(format!("cell_{i:03}")).join("reports.csv"), &r.csv)?;
            }
            Err(e) => {
                let _ = writeln!(summary, "{i},failed: {e}");
            }
        }
    }
    write_file(&dir.join("sweep_summary.csv"), &summary)?;
    println!("sweep: {} cells, summary in {}", cells.len(), dir.join("sweep_summary.csv").display());
    for (i, row) in rows.iter().enumerate() {
        if let Ok(r) = row {
            println!(
                "cell {i}: iterations {}, worst ratio {}, bound {}",
                r.iterations,
                sci17(r.worst_ratio),
                sci17(r.bound)
            );
        } else if let Err(e) = row {
            println!("cell {i}: failed: {e}");
        }
    }
    Ok(())
}

fn cmd_validate(flags: &Flags) -> std::result::Result<(), CliFailure> {
    let dir = PathBuf::from(flags.out.clone().unwrap_or_else(|| "out".into()));
    let (ns, terzaghi_ny, terzaghi_dtf): (&[usize], usize, f64) = if flags.fast {
        (&[4, 8, 16], 16, 0.005)
    } else {
        (&[8, 16, 32], 64, 0.002)
    };

    let case = ManufacturedCase::trig();
    let study = manufactured_convergence(&case, ns, 0.25, 0.5, SolvePath::FixedStress)?;
    let mut csv = String::from("h,p_l2,u_h1,z_hdiv\n");
    for r in &study.records {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            sci17(r.h),
            sci17(r.p_l2),
            sci17(r.u_h1),
            sci17(r.z_hdiv)
        );
    }
    let _ = writeln!(
        csv,
        "order,{},{},{}",
        sci17(study.order_p.order),
        sci17(study.order_u.order),
        sci17(study.order_z.order)
    );
    write_file(&dir.join("manufactured_trig.csv"), &csv)?;
    println!(
        "manufactured '{}': orders p {:.3}, u {:.3}, z {:.3} (expected ~1)",
        case.id, study.order_p.order, study.order_u.order, study.order_z.order
    );

    let tz = TerzaghiCase::default();
    let report = terzaghi_case(&tz, terzaghi_ny, terzaghi_dtf, &[0.02, 0.1, 0.5, 1.0, 2.0])?;
    let mut csv = String::from("time_factor,rel_l2_error,profile_norm_ratio\n");
    for s in &report.snapshots {
        let _ = writeln!(
            csv,
            "{},{},{}",
            sci17(s.time_factor),
            sci17(s.rel_l2_error),
            sci17(s.profile_norm_ratio)
        );
    }
    write_file(&dir.join("terzaghi.csv"), &csv)?;
    for s in &report.snapshots {
        println!(
            "terzaghi T_v = {:.3}: relative L2 error {:.4e}, profile norm ratio {:.4e}",
            s.time_factor, s.rel_l2_error, s.profile_norm_ratio
        );
    }
    println!(
        "terzaghi early interior deviation from undrained response: {:.4e}",
        report.early_interior_max_dev
    );
    println!("validation tables written to {}", dir.display());
    Ok(())
}

fn cmd_compare_oracle(flags: &Flags) -> std::result::Result<(), CliFailure> {
    let cfg = load_config(flags)?;
    let sim = build_simulator(&cfg)?;
    let nsteps = ((cfg.t_end / cfg.dt).round() as usize).max(1);
    let dofmaps = make_dofmaps_drained(&sim.mesh, &cfg.drained);
    let mono = MonolithicSolver::new(
        sim.mesh.clone(),
        &dofmaps,
        cfg.params.clone(),
        &cfg.loads.to_loads(),
        cfg.dt,
        Default::default(),
    )?;
    let mut csv = String::from("k,p_l2_rel,u_h1_rel,z_hdiv_rel\n");
    let mut state = sim.zero_state();
    let mut worst = 0.0f64;
    for k in 1..=nsteps {
        let (next, _) = sim.solve_time_step(&state)?;
        let reference = mono.solve_step(&state)?.state;
        let d = compare_states(&sim.mesh, &next, &reference)?;
        let _ = writeln!(
            csv,
            "{k},{},{},{}",
            sci17(d.p_l2.rel),
            sci17(d.u_h1.rel),
            sci17(d.z_hdiv.rel)
        );
        worst = worst.max(d.max_rel());
        state = next;
    }
    let dir = out_dir(&cfg, flags);
    write_file(&dir.join("oracle_compare.csv"), &csv)?;
    println!(
        "compare-oracle: {} steps, worst relative discrepancy {} (table in {})",
        nsteps,
        sci17(worst),
        dir.join("oracle_compare.csv").display()
    );
    Ok(())
}

fn cmd_print_bound(flags: &Flags) -> std::result::Result<(), CliFailure> {
    let cfg = load_config(flags)?;
    match (beta(&cfg.params), contraction_bound(&cfg.params)) {
        (Ok(b), Ok(cb)) => {
            println!("beta = {b}");
            println!("bound = {cb}");
            Ok(())
        }
        _ => {
            println!("beta undefined (alpha = 0); the scheme decouples and converges in one sweep");
            Ok(())
        }
    }
}

/// Convenience used by tests: runs `run` twice into two directories and
/// returns the two CSV byte strings.
pub fn run_twice_for_determinism(config_text: &str, base: &Path) -> Result<(String, String)> {
    let cfg = parse_config(config_text)?;
    let mut outputs = Vec::new();
    for sub in ["a", "b"] {
        let sim = build_simulator(&cfg)?;
        let result = sim.run(sim.zero_state(), cfg.t_end);
        if let Some((_, e)) = result.failure {
            return Err(*e);
        }
        let dir = base.join(sub);
        write_outputs(
            &dir,
            &sim.mesh,
            &result.states,
            &result.reports,
            &cfg.raw_text,
            cfg.vtk_every,
        )?;
        let csv = std::fs::read_to_string(dir.join("reports.csv")).map_err(|e| Error::Io {
            path: dir.join("reports.csv").display().to_string(),
            source: e,
        })?;
        outputs.push(csv);
    }
    let b = outputs.pop().unwrap();
    let a = outputs.pop().unwrap();
    Ok((a, b))
}
