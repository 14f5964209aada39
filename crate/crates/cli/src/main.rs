//! `sixq` command-line driver.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use sixq::pipeline::{emit_report, render_text, run, to_json, Command, RunConfig};
use sixq::Complex64;

#[derive(Parser, Debug)]
#[command(
    name = "sixq",
    version,
    about = "Six-vertex transfer and Q-matrix workbench at roots of unity"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Full spectrum: classification, Bethe roots, strings, sum rules, q <-> 1/q pairing.
    Spectrum(RunArgs),
    /// Operator identities: representation, functional equations, loop relations, intertwiners.
    Verify(RunArgs),
    /// Highest-weight vectors and Drinfeld polynomials of the degenerate multiplets.
    Drinfeld(RunArgs),
    /// Evaluation-parameter table with the reference relations.
    Table(RunArgs),
    /// Every stage.
    All(RunArgs),
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Root-of-unity order, q = exp(2 pi i / N).
    #[arg(long = "N")]
    n: Option<usize>,
    /// Chain length.
    #[arg(long = "M")]
    m: Option<usize>,
    /// First classification probe: `a`, `a+bi` or polar `r@phase`.
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<String>,
    /// Second classification probe.
    #[arg(long, allow_hyphen_values = true)]
    mu2: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict to a 2S^z sector; repeatable or comma separated.
    #[arg(long = "sector", value_delimiter = ',', allow_hyphen_values = true)]
    sectors: Vec<i32>,
    /// Output stem: writes <stem>.json and <stem>.txt.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Tolerance applied to every gating check.
    #[arg(long)]
    tol: Option<f64>,
    /// Interpolation radius.
    #[arg(long)]
    radius: Option<f64>,
    /// Random draws per sector in the verification suite.
    #[arg(long)]
    draws: Option<usize>,
    /// TOML file with the same keys; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the JSON report on stdout instead of the text rendering.
    #[arg(long)]
    json: bool,
}

/// Keys accepted in a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(alias = "N")]
    n: Option<usize>,
    #[serde(alias = "M")]
    m: Option<usize>,
    mu: Option<String>,
    mu2: Option<String>,
    radius: Option<f64>,
    seed: Option<u64>,
    sectors: Option<Vec<i32>>,
    tol: Option<f64>,
    draws: Option<usize>,
}

/// Parses `a`, `bi`, `a+bi`, `a-bi` or polar `r@phase` (phase in radians).
fn parse_complex(text: &str) -> Result<Complex64> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        bail!("empty complex number");
    }
    if let Some((r, phase)) = t.split_once('@') {
        let r: f64 = r
            .parse()
            .with_context(|| format!("bad modulus in {text:?}"))?;
        let p: f64 = phase
            .parse()
            .with_context(|| format!("bad phase in {text:?}"))?;
        return Ok(Complex64::from_polar(r, p));
    }
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return Ok(Complex64::new(
            t.parse().with_context(|| format!("bad number {text:?}"))?,
            0.0,
        ));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        s => s
            .parse()
            .with_context(|| format!("bad imaginary part in {text:?}"))?,
    };
    Ok(Complex64::new(
        re.parse()
            .with_context(|| format!("bad real part in {text:?}"))?,
        im,
    ))
}

fn build_config(command: Command, a: &RunArgs) -> Result<RunConfig> {
    let file = match &a.config {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str::<FileConfig>(&text)
                .with_context(|| format!("parsing {}", p.display()))?
        }
        None => FileConfig::default(),
    };
    let d = RunConfig::default();
    let complex = |flag: &Option<String>, file: &Option<String>, default| -> Result<Complex64> {
        flag.as_ref()
            .or(file.as_ref())
            .map_or(Ok(default), |s| parse_complex(s))
    };
    Ok(RunConfig {
        n: a.n.or(file.n).unwrap_or(d.n),
        m: a.m.or(file.m).unwrap_or(d.m),
        mu: complex(&a.mu, &file.mu, d.mu)?,
        mu2: complex(&a.mu2, &file.mu2, d.mu2)?,
        radius: a.radius.or(file.radius).unwrap_or(d.radius),
        seed: a.seed.or(file.seed).unwrap_or(d.seed),
        sectors: if a.sectors.is_empty() {
            file.sectors
        } else {
            Some(a.sectors.clone())
        },
        tol: a.tol.or(file.tol),
        draws: a.draws.or(file.draws).unwrap_or(d.draws),
        command,
    })
}

fn execute(cli: Cli) -> Result<bool> {
    let (command, args) = match &cli.command {
        Sub::Spectrum(a) => (Command::Spectrum, a),
        Sub::Verify(a) => (Command::Verify, a),
        Sub::Drinfeld(a) => (Command::Drinfeld, a),
        Sub::Table(a) => (Command::Table, a),
        Sub::All(a) => (Command::All, a),
    };
    let cfg = build_config(command, args)?;
    let report = run(&cfg).context("invalid run configuration")?;
    if let Some(stem) = &args.out {
        emit_report(&report, stem)?;
    }
    if args.json {
        println!("{}", to_json(&report)?);
    } else {
        print!("{}", render_text(&report));
    }
    Ok(report.summary.all_pass())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
