use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use csfem::bench::{run_bench, BenchName, BenchResult, BenchSpec, Verdict};
use csfem::element::mixed::check_stability;
use csfem::model::ElementKind;
use csfem::{output, parse_model, validate_model, Analysis, Error};

const EXIT_INPUT: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_METRIC: u8 = 3;

#[derive(Parser)]
#[command(name = "csfem", version, about = "Mixed finite elements for couple stress membranes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a JSON model file and write nodal, element and history tables.
    Run {
        model: PathBuf,
        #[arg(long, default_value = "csfem_out")]
        out: PathBuf,
        /// Also write a legacy VTK file per converged step.
        #[arg(long)]
        vtk: bool,
    },
    /// Generate, solve and evaluate a reference study.
    Bench {
        name: String,
        #[command(flatten)]
        opts: BenchOpts,
        #[arg(long)]
        l: Option<f64>,
        #[arg(long)]
        density: Option<usize>,
    },
    /// Report the stability counts and spectral test of an element kind.
    Check { kind: String },
    /// Run a study over every combination of the listed lengths and densities.
    Sweep {
        name: String,
        #[command(flatten)]
        opts: BenchOpts,
        #[arg(long, value_delimiter = ',', required = true)]
        l: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        density: Vec<usize>,
    },
}

#[derive(Args)]
struct BenchOpts {
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    steps: Option<usize>,
    /// Panel to beam modulus ratio (joint).
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long, default_value = "csfem_out")]
    out: PathBuf,
}

/// Exit status for a library error.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Syntax { .. } | Error::Model(_) | Error::Io(_) => EXIT_INPUT,
        Error::Evaluation(_) => EXIT_METRIC,
        _ => EXIT_SOLVER,
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit_code(e))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::Run { model, out, vtk } => cmd_run(&model, &out, vtk),
        Command::Bench { name, opts, l, density } => cmd_bench(&name, &opts, l, density),
        Command::Check { kind } => cmd_check(&kind),
        Command::Sweep { name, opts, l, density } => cmd_sweep(&name, &opts, &l, &density),
    }
}

fn cmd_run(path: &Path, out: &Path, vtk: bool) -> ExitCode {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let model = match parse_model(&text) {
        Ok(m) => m,
        Err(e) => return fail(&e),
    };
    let diagnostics = validate_model(&model);
    if !diagnostics.is_empty() {
        for d in &diagnostics {
            eprintln!("error: {d}");
        }
        return ExitCode::from(EXIT_INPUT);
    }
    let mut analysis = match Analysis::new(&model) {
        Ok(a) => a,
        Err(e) => return fail(&e),
    };
    let vtk_dir = out.join("vtk");
    let solved = analysis.run_with(|a, rec| {
        println!(
            "step {:>4}  lambda {:.4}  iterations {:>3}  residual {:.3e}",
            rec.step, rec.lambda, rec.iterations, rec.residual
        );
        if vtk {
            output::write_step_vtk(&vtk_dir, a)?;
        }
        Ok(())
    });
    // converged steps are written even when a later step fails
    if let Err(e) = output::write_run(out, &analysis) {
        return fail(&e);
    }
    match solved {
        Ok(()) => {
            println!("wrote results to {}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!(
                "error: {e}\n{} of {} steps converged; partial results in {}",
                analysis.steps_done(),
                model.analysis.steps,
                out.display()
            );
            ExitCode::from(exit_code(&e))
        }
    }
}

fn base_spec(name: &str, opts: &BenchOpts) -> csfem::Result<BenchSpec> {
    let mut spec = BenchSpec::new(name.parse::<BenchName>()?);
    if let Some(k) = &opts.kind {
        spec.kind = k.parse()?;
    }
    if let Some(s) = opts.steps {
        spec.steps = s;
    }
    if let Some(r) = opts.ratio {
        spec.modulus_ratio = r;
    }
    Ok(spec)
}

fn print_result(r: &BenchResult) {
    println!("{}", r.spec.label());
    println!("  {:<24} {:>16} {:>18}  {:<7} source", "metric", "value", "tolerance", "verdict");
    for m in &r.metrics {
        println!(
            "  {:<24} {:>16.8e} {:>18}  {:<7} {}",
            m.name,
            m.value,
            m.tolerance.to_string(),
            m.verdict.to_string(),
            m.source
        );
    }
}

/// Runs one spec, printing its table and writing its files.
fn run_one(spec: &BenchSpec, out: &Path) -> Result<BenchResult, Error> {
    spec.check()?;
    let result = run_bench(spec)?;
    print_result(&result);
    output::write_bench(out, &result)?;
    Ok(result)
}

fn cmd_bench(name: &str, opts: &BenchOpts, l: Option<f64>, density: Option<usize>) -> ExitCode {
    let mut spec = match base_spec(name, opts) {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    if let Some(l) = l {
        spec.l = l;
    }
    if let Some(n) = density {
        spec.density = n;
    }
    match run_one(&spec, &opts.out) {
        Ok(r) if r.passed() => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(EXIT_METRIC),
        Err(e) => fail(&e),
    }
}

fn cmd_sweep(name: &str, opts: &BenchOpts, ls: &[f64], densities: &[usize]) -> ExitCode {
    let base = match base_spec(name, opts) {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    let densities = if densities.is_empty() { vec![base.density] } else { densities.to_vec() };
    let mut specs = Vec::new();
    for &n in &densities {
        for &l in ls {
            let spec = BenchSpec { l, density: n, ..base.clone() };
            if let Err(e) = spec.check() {
                return fail(&e);
            }
            specs.push(spec);
        }
    }

    let mut table = String::from("label,kind,density,l,metric,value,verdict\n");
    let mut worst = 0;
    for spec in &specs {
        match run_one(spec, &opts.out) {
            Ok(r) => {
                for m in &r.metrics {
                    table.push_str(&format!(
                        "{},{},{},{},{},{:.12e},{}\n",
                        spec.label(),
                        spec.kind,
                        spec.density,
                        spec.l,
                        m.name,
                        m.value,
                        m.verdict
                    ));
                }
                if !r.passed() {
                    worst = worst.max(EXIT_METRIC);
                }
            }
            Err(e) => {
                eprintln!("error: {}: {e}", spec.label());
                table.push_str(&format!(
                    "{},{},{},{},error,NaN,{}\n",
                    spec.label(),
                    spec.kind,
                    spec.density,
                    spec.l,
                    Verdict::Fail
                ));
                worst = worst.max(exit_code(&e));
            }
        }
    }
    let path = opts.out.join(format!("sweep_{name}.csv"));
    if let Err(e) = fs::create_dir_all(&opts.out).and_then(|_| fs::write(&path, table)) {
        return fail(&Error::Io(e));
    }
    println!("wrote {}", path.display());
    ExitCode::from(worst)
}

fn cmd_check(kind: &str) -> ExitCode {
    let kind: ElementKind = match kind.parse() {
        Ok(k) => k,
        Err(e) => return fail(&e),
    };
    if !kind.is_membrane() {
        println!("{kind} is not a mixed element: it has no condensed fields, so there is nothing to check.");
        return ExitCode::SUCCESS;
    }
    let r = match check_stability(kind) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
    println!("{kind}");
    println!("  integration points   {}", r.n_ip);
    println!("  strain modes         {} x {}", r.i, r.j);
    println!("  curvature modes      {} x {}", r.m, r.n);
    println!("  element DoFs         {} ({} rigid-body)", r.n_k, r.n_f);
    println!(
        "  inequality           {} >= {}  {}",
        r.lhs,
        r.rhs,
        verdict(r.inequality_holds)
    );
    println!(
        "  spectral test        {} zero-energy modes (expected {})  {}",
        r.zero_modes,
        r.n_f,
        verdict(r.spectral_pass)
    );
    println!("  cond(H4)             {:.4e}", r.cond_h4);
    println!("  cond(H5)             {:.4e}", r.cond_h5);
    if r.discrepancy() {
        println!("  note: the counting inequality and the spectral test disagree; the spectral test decides");
    }
    ExitCode::SUCCESS
}
