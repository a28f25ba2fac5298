use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use langreth::langreth_compiler::{all_targets, emit_rule};
use langreth::numeric_oracle::verify_expression;
use langreth::tables::{builtin_tables, render_tables};
use langreth::{
    derive_rule, parse_equations, parse_rule, parse_superindex, verify, Contour, ContourEquation,
    Format, Naming, SuperIndex, VerifyConfig, VerifyReport,
};

/// Largest number of externals for which `all` targets are enumerated.
const MAX_ALL_EXTERNALS: usize = 4;

#[derive(Parser)]
#[command(
    name = "langreth",
    version,
    about = "Derive and verify generalized Langreth rules"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the real-time rule of each target component.
    Derive(DeriveArgs),
    /// Check rules against the exact oracle and the discrete contour.
    Verify(VerifyArgs),
    /// Print the built-in rule tables.
    Tables(TablesArgs),
}

#[derive(Args)]
struct Common {
    /// Equation file, one equation per blank-line separated stanza.
    #[arg(long)]
    input: PathBuf,
    /// Target components, comma separated or repeated; `all` enumerates them.
    #[arg(long, value_delimiter = ',', default_value = "all")]
    target: Vec<String>,
    #[arg(long, value_enum, default_value_t = ContourArg::Extended)]
    contour: ContourArg,
    /// Machine-readable output.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct DeriveArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
    #[arg(long, value_enum, default_value_t = NamingArg::Mixed)]
    naming: NamingArg,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// File of rule lines `D^> = …` to check instead of derived rules.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Grid points per branch.
    #[arg(long, default_value_t = 24)]
    grid: usize,
    /// Number of random component tables, seeded 1..=K.
    #[arg(long, default_value_t = 3)]
    seeds: u64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args)]
struct TablesArgs {
    /// Only the table with this key.
    #[arg(long)]
    only: Option<String>,
    #[arg(long, value_enum, default_value_t = ContourArg::Extended)]
    contour: ContourArg,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ContourArg {
    Keldysh,
    Extended,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Ascii,
    Latex,
}

#[derive(Clone, Copy, ValueEnum)]
enum NamingArg {
    Langreth,
    Hacek,
    Labeled,
    Mixed,
}

impl From<ContourArg> for Contour {
    fn from(c: ContourArg) -> Self {
        match c {
            ContourArg::Keldysh => Contour::Keldysh,
            ContourArg::Extended => Contour::Extended,
        }
    }
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => Format::Text,
            FormatArg::Ascii => Format::Ascii,
            FormatArg::Latex => Format::Latex,
        }
    }
}

impl From<NamingArg> for Naming {
    fn from(n: NamingArg) -> Self {
        match n {
            NamingArg::Langreth => Naming::Langreth,
            NamingArg::Hacek => Naming::Hacek,
            NamingArg::Labeled => Naming::Labeled,
            NamingArg::Mixed => Naming::Mixed,
        }
    }
}

/// Error text with the offending source line and a caret under the span.
/// `first_line` is the line number of the start of `text` in the file.
fn located(err: &langreth::Error, path: &Path, text: &str, first_line: usize) -> anyhow::Error {
    let Some(span) = err.span() else {
        return anyhow!("{}: {err}", path.display());
    };
    let mut start = span.start.min(text.len());
    if text[start..].trim().is_empty() {
        // End of input: point just past the last token.
        start = text[..start].trim_end().len();
    }
    let line_start = text[..start].rfind('\n').map_or(0, |i| i + 1);
    let line_end = text[start..].find('\n').map_or(text.len(), |i| start + i);
    let line_no = text[..start].matches('\n').count() + first_line;
    let col = text[line_start..start].chars().count();
    let width = text[start..span.end.clamp(start, line_end)]
        .chars()
        .count()
        .max(1);
    anyhow!(
        "{}:{line_no}:{}: {err}\n  {}\n  {}{}",
        path.display(),
        col + 1,
        &text[line_start..line_end],
        " ".repeat(col),
        "^".repeat(width)
    )
}

fn load(common: &Common) -> anyhow::Result<Vec<ContourEquation>> {
    let text = std::fs::read_to_string(&common.input)
        .with_context(|| format!("reading {}", common.input.display()))?;
    let eqs = parse_equations(&text).map_err(|e| located(&e, &common.input, &text, 1))?;
    Ok(eqs
        .into_iter()
        .map(|e| e.with_contour(common.contour.into()))
        .collect())
}

fn targets(eq: &ContourEquation, wanted: &[String]) -> anyhow::Result<Vec<SuperIndex>> {
    let mut out = Vec::new();
    for w in wanted {
        if w == "all" {
            if eq.external.len() > MAX_ALL_EXTERNALS {
                bail!(
                    "`all` is limited to {MAX_ALL_EXTERNALS} externals; {} has {}",
                    eq.lhs_name,
                    eq.external.len()
                );
            }
            out.extend(all_targets(eq));
        } else {
            let t = parse_superindex(w, eq)
                .map_err(|e| anyhow!("target `{w}` of {}: {e}", eq.lhs_name))?;
            if eq.contour == Contour::Keldysh && !t.matsubara().is_empty() {
                bail!("target `{w}` has Matsubara labels but the contour is Keldysh");
            }
            out.push(t);
        }
    }
    Ok(out)
}

fn derive(args: &DeriveArgs) -> anyhow::Result<ExitCode> {
    let mut records = Vec::new();
    for eq in load(&args.common)? {
        if !args.common.json {
            println!("# {eq}");
        }
        for target in targets(&eq, &args.common.target)? {
            let expr = derive_rule(&eq, &target)?;
            let line = emit_rule(&eq, &target, &expr, args.format.into(), args.naming.into())?;
            if args.common.json {
                records.push(serde_json::json!({
                    "equation": eq.to_string(),
                    "target": target.to_string(),
                    "rule": line,
                }));
            } else {
                println!("{line}");
            }
        }
    }
    if args.common.json {
        println!("{}", serde_json::to_string_pretty(&records)?);
    }
    Ok(ExitCode::SUCCESS)
}

fn rule_reports(
    eqs: &[ContourEquation],
    path: &Path,
    cfg: &VerifyConfig,
) -> anyhow::Result<Vec<VerifyReport>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut reports = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let name: String = trimmed
            .chars()
            .take_while(|c| c.is_alphanumeric() || *c == '\'')
            .collect();
        let eq = eqs.iter().find(|e| e.lhs_name == name).ok_or_else(|| {
            anyhow!(
                "{}:{}: no equation for rule `{trimmed}`",
                path.display(),
                i + 1
            )
        })?;
        let (target, expr) = parse_rule(line, eq).map_err(|e| located(&e, path, line, i + 1))?;
        reports.push(verify_expression(eq, &target, &expr, cfg)?);
    }
    Ok(reports)
}

fn check(args: &VerifyArgs) -> anyhow::Result<ExitCode> {
    let cfg = VerifyConfig {
        seeds: (1..=args.seeds).collect(),
        grid: args.grid,
        tol: args.tol,
        ..VerifyConfig::default()
    };
    cfg.validate()?;
    let eqs = load(&args.common)?;
    let reports = match &args.rules {
        Some(path) => rule_reports(&eqs, path, &cfg)?,
        None => {
            let mut out = Vec::new();
            for eq in &eqs {
                for target in targets(eq, &args.common.target)? {
                    out.push(verify(eq, &target, &cfg)?);
                }
            }
            out
        }
    };
    let pass = reports.iter().all(|r| r.pass);
    if args.common.json {
        println!("{}", serde_json::to_string_pretty(&reports)?);
    } else {
        for r in &reports {
            println!("{}", r.summary());
            for rec in r.numeric.iter().filter(|rec| !rec.pass) {
                println!(
                    "  seed {}: max error {:.3e} over {} samples",
                    rec.seed, rec.max_error, rec.samples
                );
            }
            if !r.symbolic_pass {
                println!("  {} mismatching basis terms", r.mismatches);
                for t in &r.offending_terms {
                    println!("  offending term: {t}");
                }
            }
        }
        println!(
            "{}: {} of {} checks pass",
            if pass { "PASS" } else { "FAIL" },
            reports.iter().filter(|r| r.pass).count(),
            reports.len()
        );
    }
    Ok(if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn tables(args: &TablesArgs) -> anyhow::Result<ExitCode> {
    if let Some(k) = &args.only {
        let keys: Vec<&str> = builtin_tables().iter().map(|t| t.key).collect();
        if !keys.contains(&k.as_str()) {
            bail!("unknown table `{k}`; known: {}", keys.join(", "));
        }
    }
    print!(
        "{}",
        render_tables(
            args.only.as_deref(),
            args.contour.into(),
            args.format.into()
        )?
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Derive(a) => derive(a),
        Command::Verify(a) => check(a),
        Command::Tables(a) => tables(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
