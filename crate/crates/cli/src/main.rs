//! Command-line front end: integrate trajectories to CSV, classify parameter
//! sets, and run the verification sweeps.

mod config;

use clap::{Parser, Subcommand};
use config::{parse_config, parse_model, SimConfig};
use curvemag::analytic::{
    canonical_parameters, classify, radial_quadratic, AxialClass, RadialClass,
};
use curvemag::dynamics::{integrate, invariants_of, MotionConstants, StepControl, Trajectory};
use curvemag::verify::{measure_convergence_order, CheckReport, ConvergenceCase};
use curvemag::{FieldStrengthB, SpaceModel};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Environment variable naming the default directory for relative output
/// paths.
const OUT_DIR_ENV: &str = "CURVEMAG_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "curvemag",
    about = "Charged-particle motion in a uniform magnetic field on H3, S3 and E3",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the trajectory described by a key=value config file and
    /// write CSV samples plus a summary.
    Simulate { config_file: PathBuf },
    /// Classify the motion for constants (model, B, I, A, eps).
    #[command(allow_negative_numbers = true)]
    Classify {
        model: String,
        b: String,
        i: String,
        a: String,
        eps: String,
    },
    /// Run verification sweeps and print one report line per check.
    Verify {
        /// conservation | closed-form | symmetry | convergence | all
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        cases: usize,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Simulate { config_file } => cmd_simulate(&config_file),
        Command::Classify {
            model,
            b,
            i,
            a,
            eps,
        } => cmd_classify(&model, &b, &i, &a, &eps),
        Command::Verify { suite, seed, cases } => cmd_verify(&suite, seed, cases),
    }
}

fn resolve_output(path: &str) -> PathBuf {
    let p = Path::new(path);
    if p.is_absolute() {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) => Path::new(&dir).join(p),
        None => p.to_path_buf(),
    }
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_csv(
    path: &Path,
    cfg: &SimConfig,
    traj: &Trajectory,
) -> std::io::Result<(usize, (f64, curvemag::CylState))> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "t,r,phi,z,vr,vphi,vz,eps,I,A")?;
    let last_idx = traj.samples.len() - 1;
    let mut written = 0;
    let mut last_written = traj.samples[0];
    for (k, (t, s)) in traj.samples.iter().enumerate() {
        if k % cfg.stride != 0 && k != last_idx {
            continue;
        }
        let c = invariants_of(cfg.model, cfg.effective_b(), s);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt17(*t),
            fmt17(s.point.r),
            fmt17(s.point.phi),
            fmt17(s.point.z),
            fmt17(s.vr),
            fmt17(s.vphi),
            fmt17(s.vz),
            fmt17(c.epsilon),
            fmt17(c.i_phi),
            fmt17(c.a_transverse)
        )?;
        written += 1;
        last_written = (*t, *s);
    }
    out.flush()?;
    Ok((written, last_written))
}

fn print_constants(label: &str, c: &MotionConstants) {
    println!(
        "{label}_eps={} {label}_I={} {label}_A={}",
        fmt17(c.epsilon),
        fmt17(c.i_phi),
        fmt17(c.a_transverse)
    );
}

fn cmd_simulate(config_file: &Path) -> ExitCode {
    let text = match std::fs::read_to_string(config_file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config_file.display());
            return ExitCode::from(1);
        }
    };
    let cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let b = cfg.effective_b();
    let traj = match integrate(cfg.model, b, &cfg.initial, cfg.t_end, &cfg.step) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let path = resolve_output(&cfg.output);
    let (written, (t_last, s_last)) = match write_csv(&path, &cfg, &traj) {
        Ok(n) => n,
        Err(e) => {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(1);
        }
    };

    let c0 = traj.initial_constants;
    println!(
        "model={} b={} lambda={}",
        cfg.model.name(),
        cfg.b_field,
        cfg.lambda.map_or_else(|| "none".into(), |l| l.to_string())
    );
    println!(
        "output={} samples={written} t_final={}",
        path.display(),
        fmt17(t_last)
    );
    print_constants("initial", &c0);
    print_constants("final", &invariants_of(cfg.model, b, &s_last));
    print_constants("drift", &traj.drift);
    match classify(cfg.model, b, c0.i_phi, c0.a_transverse, c0.epsilon) {
        Ok(class) => println!(
            "radial_class={} axial_class={}",
            radial_label(class.radial),
            axial_label(class.axial)
        ),
        Err(_) => println!("radial_class=n/a axial_class=n/a"),
    }
    println!(
        "termination={} flagged={}",
        traj.termination.label(),
        !traj.termination.is_completed()
    );
    if traj.termination.is_completed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn radial_label(c: RadialClass) -> &'static str {
    match c {
        RadialClass::FixedRadius => "fixed-radius",
        RadialClass::FiniteTwoTurning => "finite-two-turning",
        RadialClass::InfiniteCritical => "infinite-critical",
        RadialClass::InfiniteOneTurning => "infinite-one-turning",
        RadialClass::SphericalFinite => "spherical-finite",
        RadialClass::NonPhysical => "non-physical",
    }
}

fn axial_label(c: AxialClass) -> &'static str {
    match c {
        AxialClass::TypeI => "type-i",
        AxialClass::TypeII => "type-ii",
        AxialClass::CriticalPlane => "critical-plane",
        AxialClass::CriticalExp => "critical-exp",
    }
}

fn cmd_classify(model: &str, b: &str, i: &str, a: &str, eps: &str) -> ExitCode {
    let model = match parse_model(model) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let nums: Vec<f64> = match [b, i, a, eps]
        .iter()
        .map(|s| s.parse::<f64>())
        .collect::<Result<_, _>>()
    {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: invalid numeric argument: {e}");
            return ExitCode::from(1);
        }
    };
    let (b, i, a, eps) = (nums[0], nums[1], nums[2], nums[3]);
    let bf = FieldStrengthB(b);
    let class = match classify(model, bf, i, a, eps) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let q = radial_quadratic(model, bf, i, a).expect("classify validated the model");
    println!("model={} B={b} I={i} A={a} eps={eps}", model.name());
    println!(
        "radial={} axial={}",
        radial_label(class.radial),
        axial_label(class.axial)
    );
    println!("a={} b={} c={} disc={}", q.a, q.b, q.c, q.disc);
    match q.roots {
        Some((x1, x2)) => println!("roots={x1},{x2}"),
        None => println!("roots=none"),
    }
    match canonical_parameters(model, bf, i, a) {
        Ok(cp) => println!("J={} C={} invariant={}", cp.j, cp.c_par, cp.invariant_value),
        Err(_) => {
            let inv = match model {
                SpaceModel::Hyperbolic => b * b - a,
                _ => a + b * b,
            };
            println!("J=none C=none invariant={inv}");
        }
    }
    ExitCode::SUCCESS
}

fn cmd_verify(suite: &str, seed: u64, cases: usize) -> ExitCode {
    use curvemag::verify::{run_closed_form_sweep, run_conservation_sweep, run_symmetry_sweep};
    let curved = [SpaceModel::Hyperbolic, SpaceModel::Spherical];
    let mut reports: Vec<CheckReport> = Vec::new();
    let run = |name: &str| suite == name || suite == "all";
    let fail = |e: curvemag::Error| {
        eprintln!("error: {e}");
        ExitCode::from(3)
    };
    if run("conservation") {
        for model in curved {
            match run_conservation_sweep(model, cases, 50.0, &StepControl::default(), seed) {
                Ok(r) => reports.push(r),
                Err(e) => return fail(e),
            }
        }
    }
    if run("closed-form") {
        for model in curved {
            match run_closed_form_sweep(model, cases, seed) {
                Ok(rs) => reports.extend(rs),
                Err(e) => return fail(e),
            }
        }
    }
    if run("symmetry") {
        for model in curved {
            match run_symmetry_sweep(model, cases, seed) {
                Ok(rs) => reports.extend(rs),
                Err(e) => return fail(e),
            }
        }
    }
    if run("convergence") {
        let steps = [1e-2, 5e-3, 2.5e-3];
        for (case, name) in [
            (
                ConvergenceCase::HyperbolicAxial,
                "convergence/hyperbolic-axial",
            ),
            (
                ConvergenceCase::SphericalPeriodic,
                "convergence/spherical-periodic",
            ),
        ] {
            match measure_convergence_order(case, &steps) {
                Ok(order) => {
                    let err = (order - 4.0).abs();
                    reports.push(CheckReport {
                        name: name.into(),
                        samples: steps.len(),
                        worst_error: err,
                        threshold: 0.3,
                        passed: err <= 0.3,
                        details: Some(format!("fitted order {order:.4}")),
                        seed,
                    });
                }
                Err(e) => return fail(e),
            }
        }
    }
    if reports.is_empty() {
        eprintln!(
            "error: unknown suite '{suite}' (expected conservation, closed-form, symmetry, convergence or all)"
        );
        return ExitCode::from(3);
    }
    let mut all_passed = true;
    for r in &reports {
        println!("{}", r.to_line());
        all_passed &= r.passed;
    }
    if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}
