mod io;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use spirallax::coords::extract_coords_with;
use spirallax::laxspec::{spectral_table_with, verify_spectral_invariance};
use spirallax::lift::canonical_lift_with;
use spirallax::shiftmap::shift_coords_n;
use spirallax::verify::{run_suite_with, LAX_SAMPLES};
use spirallax::{
    alpha_beta, derive, geometric_shift, random_seed, shift_coords, Coords, LiftedSpiral, Seed, Tolerances,
};
use thiserror::Error;

use crate::io::{check_n, emit, read_input, to_json, Input};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{path}: {source}", path = .0.display(), source = .1)]
    Io(PathBuf, std::io::Error),
    #[error(transparent)]
    Numeric(spirallax::Error),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl From<spirallax::Error> for CliError {
    fn from(e: spirallax::Error) -> Self {
        use spirallax::Error as E;
        match e {
            E::InvalidN { .. } | E::InvalidSeed(_) => CliError::Validation(e.to_string()),
            other => CliError::Numeric(other),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Io(..) => 2,
            CliError::Numeric(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

/// Twisted (N,1) pentagram spirals: lifts, coordinates, shift map and
/// spectral invariants.
#[derive(Debug, Parser)]
#[command(name = "spirallax", version)]
struct Cli {
    /// Residual allowed on the unit-determinant lift constraints.
    #[arg(long, global = true)]
    tol_lift: Option<f64>,
    /// Relative tolerance on spectral coefficients.
    #[arg(long, global = true)]
    tol_spec: Option<f64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    /// Size of the monodromy's departure from the identity.
    #[arg(long, default_value_t = 0.25)]
    twist: f64,
}

#[derive(Debug, Args)]
struct Io {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Random generic seed.
    Gen {
        #[command(flatten)]
        gen: GenArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Seed → canonical lift.
    Lift {
        #[command(flatten)]
        io: Io,
    },
    /// Seed or lift → coordinates with derived invariants.
    Coords {
        #[command(flatten)]
        io: Io,
    },
    /// Apply the shift map `steps` times.
    Shift {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = 1)]
        steps: usize,
        /// Shift the seed geometrically (needs a seed or lift input).
        #[arg(long)]
        geometric: bool,
    },
    /// Coefficients of det(M(μ) − rI).
    Spectrum {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        check_invariance: bool,
        #[arg(long, default_value_t = 1)]
        steps: usize,
    },
    /// CSV of the shift orbit.
    Orbit {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = 10)]
        steps: usize,
    },
    /// Run the property suite; exit 4 if any check fails.
    Verify {
        #[arg(short, long, conflicts_with = "n")]
        input: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
        #[arg(long, default_value_t = 0.25)]
        twist: f64,
        /// Spectral parameters for the Lax check.
        #[arg(long, num_args = 1.., allow_negative_numbers = true)]
        mu: Vec<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// SVG of the spiral window in the chart z = 1.
    Render {
        #[command(flatten)]
        io: Io,
        /// Extra vertices past the default window.
        #[arg(long, default_value_t = 0)]
        steps: usize,
    },
}

fn tolerances(cli: &Cli) -> Result<Tolerances, CliError> {
    let mut tol = Tolerances::default();
    for (flag, v, slot) in [
        ("--tol-lift", cli.tol_lift, &mut tol.lift),
        ("--tol-spec", cli.tol_spec, &mut tol.spec),
    ] {
        if let Some(v) = v {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Validation(format!("{flag} must be positive, got {v}")));
            }
            *slot = v;
        }
    }
    Ok(tol)
}

fn seed_of(input: Input) -> Result<Seed, CliError> {
    match input {
        Input::Seed(s) => Ok(s),
        Input::Lifted(l) => Ok(l.seed().clone()),
        other => Err(CliError::Validation(format!(
            "expected a seed or lifted spiral, got {}",
            other.kind()
        ))),
    }
}

fn coords_of(input: Input, tol: &Tolerances) -> Result<Coords, CliError> {
    Ok(match input {
        Input::Coords(c) => c,
        Input::Lifted(l) => extract_coords_with(&l, tol)?,
        Input::Seed(s) => extract_coords_with(&canonical_lift_with(&s, tol)?, tol)?,
    })
}

/// Coords JSON with the derived block.
fn coords_doc(c: &Coords) -> Result<Value, CliError> {
    let mut v = serde_json::to_value(c).map_err(|e| CliError::Validation(e.to_string()))?;
    v["derived"] = serde_json::to_value(derive(c)?).map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(v)
}

fn orbit_csv(c0: &Coords, steps: usize, tol: &Tolerances) -> Result<String, CliError> {
    let n = c0.n();
    let base = spectral_table_with(c0, tol)?;
    let mut support: Vec<(i32, u8)> = base.entries().map(|(k, _)| k).filter(|&(_, r)| r < 3).collect();
    support.sort_by_key(|&(m, r)| (r, m));
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["step".to_string()];
    header.extend((0..n).map(|i| format!("a{i}")));
    header.extend((0..n).map(|i| format!("b{i}")));
    header.extend(["c_n", "alpha", "beta"].map(String::from));
    header.extend(support.iter().map(|(m, r)| format!("r{r}_mu{m}")));
    let csv_err = |e: csv::Error| CliError::Validation(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    let mut c = c0.clone();
    for step in 0..=steps {
        if step > 0 {
            c = shift_coords(&c)?;
        }
        let ab = alpha_beta(&c, &derive(&c)?)?;
        let t = spectral_table_with(&c, tol)?;
        let mut row = vec![step.to_string()];
        row.extend(c.to_flat().iter().map(f64::to_string));
        row.push(ab.alpha.to_string());
        row.push(ab.beta.to_string());
        row.extend(support.iter().map(|&(m, r)| t.get(m, r).to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Validation(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Validation(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let tol = tolerances(&cli)?;
    match cli.cmd {
        Cmd::Gen { gen, output } => {
            check_n(gen.n)?;
            let seed = random_seed(gen.n, gen.rng_seed, gen.twist)?;
            emit(output.as_deref(), &to_json(&seed)?)
        }
        Cmd::Lift { io } => {
            let seed = seed_of(read_input(&io.input)?)?;
            let ls = canonical_lift_with(&seed, &tol)?;
            emit(io.output.as_deref(), &to_json(&ls)?)
        }
        Cmd::Coords { io } => {
            let c = coords_of(read_input(&io.input)?, &tol)?;
            emit(io.output.as_deref(), &to_json(&coords_doc(&c)?)?)
        }
        Cmd::Shift { io, steps, geometric } => {
            let input = read_input(&io.input)?;
            let c = if geometric {
                let mut seed = seed_of(input)?;
                for _ in 0..steps {
                    seed = geometric_shift(&seed)?;
                }
                coords_of(Input::Seed(seed), &tol)?
            } else {
                shift_coords_n(&coords_of(input, &tol)?, steps)?
            };
            emit(io.output.as_deref(), &to_json(&coords_doc(&c)?)?)
        }
        Cmd::Spectrum {
            io,
            check_invariance,
            steps,
        } => {
            let c = coords_of(read_input(&io.input)?, &tol)?;
            let table = spectral_table_with(&c, &tol)?;
            if !check_invariance {
                return emit(io.output.as_deref(), &to_json(&table)?);
            }
            let report = verify_spectral_invariance(&c, steps, &tol)?;
            let pass = report.pass;
            emit(
                io.output.as_deref(),
                &to_json(&json!({ "table": table, "invariance": report }))?,
            )?;
            if pass {
                Ok(())
            } else {
                Err(CliError::Verification(format!(
                    "spectral table not invariant over {steps} steps (first failure {:?})",
                    report.first_failure
                )))
            }
        }
        Cmd::Orbit { io, steps } => {
            let c = coords_of(read_input(&io.input)?, &tol)?;
            emit(io.output.as_deref(), &orbit_csv(&c, steps, &tol)?)
        }
        Cmd::Verify {
            input,
            n,
            rng_seed,
            twist,
            mu,
            output,
        } => {
            let seed = match (input, n) {
                (Some(p), _) => seed_of(read_input(&p)?)?,
                (None, Some(n)) => {
                    check_n(n)?;
                    random_seed(n, rng_seed, twist)?
                }
                (None, None) => return Err(CliError::Validation("verify needs --input or --n".into())),
            };
            let samples = if mu.is_empty() { LAX_SAMPLES.to_vec() } else { mu };
            let report = run_suite_with(&seed, &tol, &samples)?;
            let body = to_json(&report)?;
            if output.is_some() {
                emit(output.as_deref(), &body)?;
            }
            emit(None, &body)?;
            if report.pass {
                Ok(())
            } else {
                let names: Vec<&str> = report.failures().map(|c| c.check.as_str()).collect();
                Err(CliError::Verification(names.join(", ")))
            }
        }
        Cmd::Render { io, steps } => {
            let ls: LiftedSpiral = match read_input(&io.input)? {
                Input::Lifted(l) => l,
                Input::Seed(s) => canonical_lift_with(&s, &tol)?,
                Input::Coords(_) => return Err(CliError::Validation("render needs a seed or lifted spiral".into())),
            };
            let ls = ls.widen(ls.lo(), ls.hi() + steps as i64)?;
            emit(io.output.as_deref(), &render::svg(&ls)?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SPIRALLAX_LOG", "warn")).init();
    let cli = Cli::parse();
    log::debug!("{cli:?}");
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
