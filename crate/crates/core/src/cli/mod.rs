//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 unreadable input,
//! 3 pipeline failure, 4 report does not replay.

pub mod files;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::exactalg::{RMatrix, Rational};
use crate::fixtures;
use crate::numeric::compare_recast;
use crate::qpmodel::QpSystem;
use crate::random::{deficient_system, invertible_matrix, standard_system, Deficiency};
use crate::reductions::{
    first_integrals_from_m, standardize, to_lotka_volterra, to_lotka_volterra_prioritized, to_unimonomial_prioritized,
    EmbedMode, ReductionReport,
};
use crate::transforms::{quasimonomial_transform, TransformStep};

pub use files::{load_system, parse_json, read_json, to_json, IntegralEntry, RankSummary, ReportFile, SystemFile};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("{0}")]
    Parse(String),
    #[error("{stage} failed: {source}")]
    Pipeline { stage: &'static str, source: Error },
    #[error("report is corrupt: {0}")]
    Replay(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Pipeline { .. } => 3,
            CliError::Replay(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "qprecast",
    version,
    about = "Recast quasipolynomial ODE systems by exact matrix transformations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print dimensions, ranks, the standard-form verdict and first integrals.
    Info { system: PathBuf },
    /// Bring a system to standard form.
    Standardize {
        system: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Recast a standard system into Lotka-Volterra form.
    ToLv {
        system: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// none, full or partial=k.
        #[arg(long, default_value = "full")]
        embed: EmbedMode,
        /// Quasimonomial indices (0-based) to prefer when choosing rows.
        #[arg(long, value_delimiter = ',')]
        priority: Vec<usize>,
    },
    /// Recast a standard system into unimonomial form.
    ToUnimonomial {
        system: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// none, full or partial=k.
        #[arg(long, default_value = "full")]
        embed: EmbedMode,
        /// Quasimonomial indices (0-based) to prefer when choosing columns.
        #[arg(long, value_delimiter = ',')]
        priority: Vec<usize>,
    },
    /// Apply a quasimonomial transformation with a user matrix.
    Transform {
        system: PathBuf,
        /// Rows separated by ';', entries by ',', e.g. "1,0;1/2,1".
        #[arg(long, allow_hyphen_values = true)]
        c: String,
        /// Names of the new variables, comma separated.
        #[arg(long, value_delimiter = ',')]
        names: Vec<String>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Apply a new-time transformation with exponents beta.
    Newtime {
        system: PathBuf,
        /// Entries separated by ',', e.g. "-1,0".
        #[arg(long, allow_hyphen_values = true)]
        beta: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// List the first integrals carried by the composed matrix.
    FirstIntegrals { system: PathBuf },
    /// Integrate a system and a recast of it and compare the trajectories.
    Verify {
        original: PathBuf,
        report: PathBuf,
        /// Initial point, comma separated; defaults to all ones.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        /// Integrator tolerance. The check passes when every error is at
        /// most 1000 times this value.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Print a built-in reference system as JSON, or list their names.
    Fixture { name: Option<String> },
    /// Run the structural properties on seeded random systems.
    Selfcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("qprecast: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Info { system } => info(&system),
        Command::Standardize { system, out } => pipeline(&system, out.as_deref(), "standardize", standardize),
        Command::ToLv {
            system,
            out,
            embed,
            priority,
        } => pipeline(&system, out.as_deref(), "to-lv", |s| {
            if priority.is_empty() {
                to_lotka_volterra(s, embed)
            } else {
                to_lotka_volterra_prioritized(s, embed, &priority)
            }
        }),
        Command::ToUnimonomial {
            system,
            out,
            embed,
            priority,
        } => pipeline(&system, out.as_deref(), "to-unimonomial", |s| {
            to_unimonomial_prioritized(s, embed, &priority)
        }),
        Command::Transform { system, c, names, out } => {
            let c = parse_matrix(&c)?;
            let names = (!names.is_empty()).then_some(names);
            pipeline(&system, out.as_deref(), "transform", |s| {
                single_step(
                    s,
                    TransformStep::Quasimonomial {
                        c: c.clone(),
                        names: names.clone(),
                    },
                )
            })
        }
        Command::Newtime { system, beta, out } => {
            let beta = parse_vector(&beta, "beta")?;
            pipeline(&system, out.as_deref(), "newtime", |s| {
                single_step(s, TransformStep::NewTime { beta: beta.clone() })
            })
        }
        Command::FirstIntegrals { system } => first_integrals(&system),
        Command::Verify {
            original,
            report,
            x0,
            t_end,
            tol,
        } => verify(&original, &report, x0, t_end, tol),
        Command::Fixture { name } => fixture(name.as_deref()),
        Command::Selfcheck { seed, count } => selfcheck(seed, count),
    }
}

fn parse_vector(text: &str, what: &str) -> Result<Vec<Rational>, CliError> {
    text.split(',')
        .map(|t| t.parse::<Rational>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Parse(format!("--{what}: {e}")))
}

fn parse_matrix(text: &str) -> Result<RMatrix, CliError> {
    let rows = text
        .split(';')
        .map(|r| parse_vector(r, "c"))
        .collect::<Result<Vec<_>, _>>()?;
    RMatrix::try_from_rows(rows, None).ok_or_else(|| CliError::Parse("--c: rows have different lengths".into()))
}

fn single_step(sys: &QpSystem, op: TransformStep) -> crate::Result<ReductionReport> {
    let mut rep = ReductionReport::identity(sys);
    rep.push(op)?;
    Ok(rep)
}

fn ranks_line(sys: &QpSystem) -> String {
    let r = sys.ranks();
    format!(
        "n={} m={} rank(A)={} rank(B)={} rank(M)={} standard={}",
        sys.n(),
        sys.m(),
        r.a,
        r.b,
        r.m,
        if sys.is_standard() { "yes" } else { "no" }
    )
}

fn info(path: &Path) -> Result<(), CliError> {
    let (sys, _) = load_system(path)?;
    println!("{}", ranks_line(&sys));
    println!("terms={}", sys.term_count());
    let integrals = first_integrals_from_m(&sys);
    println!("first_integrals={}", integrals.len());
    for fi in &integrals {
        println!("  {}", fi.monomial());
    }
    Ok(())
}

fn first_integrals(path: &Path) -> Result<(), CliError> {
    let (sys, _) = load_system(path)?;
    let from_m = first_integrals_from_m(&sys);
    println!("from M ({}):", from_m.len());
    for fi in &from_m {
        println!("  {}", entry_line(fi));
    }
    if sys.is_standard() && sys.m() > sys.n() {
        let lv =
            to_lotka_volterra(&sys, EmbedMode::Full).map_err(|source| CliError::Pipeline { stage: "to-lv", source })?;
        println!("of the Lotka-Volterra embedding ({}):", lv.first_integrals.len());
        for fi in &lv.first_integrals {
            println!("  {}", entry_line(fi));
        }
    }
    Ok(())
}

fn entry_line(fi: &crate::reductions::FirstIntegral) -> String {
    let e: Vec<String> = fi.exponents.iter().map(|v| v.to_string()).collect();
    match &fi.constant {
        Some(c) => format!("{} = {c}  [{}]", fi.monomial(), e.join(", ")),
        None => format!("{}  [{}]", fi.monomial(), e.join(", ")),
    }
}

fn pipeline<F>(path: &Path, out: Option<&Path>, stage: &'static str, run: F) -> Result<(), CliError>
where
    F: FnOnce(&QpSystem) -> crate::Result<ReductionReport>,
{
    let (sys, file) = load_system(path)?;
    let rep = run(&sys).map_err(|source| CliError::Pipeline { stage, source })?;
    let report = ReportFile::from_report(stage, &rep, file.shift.clone());
    let summary = format!(
        "{stage}: n={} m={} -> n={} m={} terms={} steps={} integrals={} quadratures={}",
        rep.input.n(),
        rep.input.m(),
        rep.output.n(),
        rep.output.m(),
        rep.output.term_count(),
        rep.trace.len(),
        rep.first_integrals.len(),
        rep.quadratures.len()
    );
    match out {
        Some(out) => {
            fs::write(out, to_json(&report))
                .map_err(|e| CliError::Parse(format!("{}: cannot write: {e}", out.display())))?;
            println!("{summary}");
        }
        None => {
            print!("{}", to_json(&report));
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn verify(original: &Path, report: &Path, x0: Vec<f64>, t_end: f64, tol: f64) -> Result<(), CliError> {
    let (sys, file) = load_system(original)?;
    let rep = read_json::<ReportFile>(report)?.to_report()?;
    if rep.input != sys {
        return Err(CliError::Replay(format!(
            "{} was not produced from {}",
            report.display(),
            original.display()
        )));
    }
    let mut x = if x0.is_empty() { vec![1.0; sys.n()] } else { x0 };
    if x.len() != sys.n() {
        return Err(CliError::Parse(format!(
            "--x0: expected {} values, got {}",
            sys.n(),
            x.len()
        )));
    }
    if let Some(shift) = file.shift_f64() {
        for (v, s) in x.iter_mut().zip(shift) {
            *v += s;
        }
    }
    let eq = compare_recast(&sys, &rep, &x, t_end, tol).map_err(|e| CliError::Verification(e.to_string()))?;
    let threshold = tol * 1e3;
    println!(
        "horizon={} samples={} max_abs_log_error={:.3e}",
        eq.horizon, eq.samples, eq.max_abs_log_error
    );
    for d in &eq.integral_drifts {
        println!("drift {} = {:.3e}", d.integral.monomial(), d.drift);
    }
    let worst = eq.worst();
    if worst <= threshold {
        println!("pass: worst error {worst:.3e} <= {threshold:.3e}");
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "worst error {worst:.3e} exceeds {threshold:.3e}"
        )))
    }
}

fn fixture(name: Option<&str>) -> Result<(), CliError> {
    let all = fixtures::all();
    match name {
        None => {
            for (name, _) in &all {
                println!("{name}");
            }
            Ok(())
        }
        Some(name) => {
            let (_, sys) = all
                .iter()
                .find(|(n, _)| *n == name)
                .ok_or_else(|| CliError::Parse(format!("no fixture named {name:?}")))?;
            print!("{}", to_json(&SystemFile::from_system(sys, None)));
            Ok(())
        }
    }
}

/// Counts of passed checks out of `count` for each seeded property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SelfcheckTally {
    pub class_invariant: usize,
    pub lotka_volterra: usize,
    pub standardize: usize,
}

/// The structural properties on `count` seeded random systems: the class
/// invariant under a random invertible `C`, the full Lotka-Volterra
/// recast, and standardization of systems with each kind of rank defect.
pub fn selfcheck_tally(seed: u64, count: usize) -> SelfcheckTally {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = SelfcheckTally::default();
    for i in 0..count {
        let sys = standard_system(&mut rng, 4, 6);
        let c = invertible_matrix(&mut rng, sys.n());
        let invariant = sys.class_invariant();
        if quasimonomial_transform(&sys, &c).is_ok_and(|t| t.class_invariant() == invariant) {
            tally.class_invariant += 1;
        }
        if to_lotka_volterra(&sys, EmbedMode::Full)
            .is_ok_and(|r| r.output.b.is_identity() && r.output.composed() == invariant)
        {
            tally.lotka_volterra += 1;
        }
        let kind = Deficiency::ALL[i % Deficiency::ALL.len()];
        let sys = deficient_system(&mut rng, kind);
        if standardize(&sys).is_ok_and(|r| r.output.is_standard() && r.replays()) {
            tally.standardize += 1;
        }
    }
    tally
}

fn selfcheck(seed: u64, count: usize) -> Result<(), CliError> {
    let t = selfcheck_tally(seed, count);
    println!("class invariant: {}/{count}", t.class_invariant);
    println!("lotka-volterra:  {}/{count}", t.lotka_volterra);
    println!("standardize:     {}/{count}", t.standardize);
    if t.class_invariant == count && t.lotka_volterra == count && t.standardize == count {
        Ok(())
    } else {
        Err(CliError::Verification(format!("seed {seed}: some properties failed")))
    }
}
