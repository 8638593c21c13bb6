//! Command-line front end: matches patterns, runs rollups, classifies
//! hierarchies and validates pattern files, emitting XML witness trees on
//! stdout and JSON reports. Exit status: 0 success, 1 usage error, 2 data or
//! parse error, 3 oracle divergence.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use xolap::matcher::{self, build_witness, embed, match_pattern};
use xolap::mdmodel::{bind_schema, classify_hierarchy, SchemaConfig};
use xolap::pattern::{parse_pattern, parse_pattern_lenient, Formula, PatternTree};
use xolap::rollup::{self, rollup, AggKind, RollupQuery};
use xolap::xmltree::{parse_document, DataTree};

/// Environment variable overriding the oracle tree-size limits.
const ORACLE_LIMIT_VAR: &str = "XOLAP_ORACLE_LIMIT";

#[derive(Parser)]
#[command(name = "xolap", version, about = "XML pattern matching and rollup over complex hierarchies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Match a pattern against a document (structure and formula)
    Match(MatchArgs),
    /// Embed a pattern into a document (structure only)
    Embed(MatchArgs),
    /// Aggregate a measure up to a hierarchy value
    Rollup(RollupArgs),
    /// Classify the dimension hierarchies of a document
    Classify(ClassifyArgs),
    /// Validate a pattern file and print the violation report
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Xml,
    Json,
}

#[derive(Args)]
struct MatchArgs {
    /// XML document to query
    #[arg(short = 'd', long = "document")]
    document: PathBuf,
    /// Pattern file (JSON)
    #[arg(short = 'p', long = "pattern")]
    pattern: PathBuf,
    /// xml: witness tree; json: binding set as child-index paths
    #[arg(long, value_enum, default_value = "xml")]
    format: OutputFormat,
    /// Re-run the query through the brute-force oracle and fail on divergence
    #[arg(long)]
    oracle_check: bool,
}

#[derive(Args)]
struct RollupArgs {
    /// XML document holding the facts
    #[arg(short = 'd', long = "document")]
    document: PathBuf,
    /// Label of the fact elements (e.g. book)
    #[arg(long)]
    fact: String,
    /// Label of the hierarchy container under each fact (e.g. categories)
    #[arg(long)]
    hierarchy: String,
    /// Label of the measure child (e.g. price)
    #[arg(long)]
    measure: String,
    /// Hierarchy value to aggregate up to (e.g. Software)
    #[arg(long)]
    value: String,
    /// Aggregate function
    #[arg(long)]
    agg: String,
    /// xml: witness tree on stdout; json: result report on stdout
    #[arg(long, value_enum, default_value = "xml")]
    format: OutputFormat,
    /// Re-run the query through the rollup oracle and fail on divergence
    #[arg(long)]
    oracle_check: bool,
}

#[derive(Args)]
struct ClassifyArgs {
    /// XML document to interpret
    #[arg(short = 'd', long = "document")]
    document: PathBuf,
    /// Schema config file (JSON)
    #[arg(short = 's', long = "schema")]
    schema: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    /// Pattern file (JSON)
    #[arg(short = 'p', long = "pattern")]
    pattern: PathBuf,
}

enum CliError {
    Data(String),
    Divergence(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Data(_) => 2,
            CliError::Divergence(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Data(m) | CliError::Divergence(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("xolap: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Match(args) => run_match(args, true),
        Command::Embed(args) => run_match(args, false),
        Command::Rollup(args) => run_rollup(args),
        Command::Classify(args) => run_classify(args),
        Command::Validate(args) => run_validate(args),
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn load_document(path: &Path) -> Result<DataTree, CliError> {
    let bytes = read_file(path)?;
    parse_document(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn load_pattern(path: &Path) -> Result<PatternTree, CliError> {
    let bytes = read_file(path)?;
    let text = String::from_utf8(bytes)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    parse_pattern(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn oracle_limit(default: usize) -> Result<usize, CliError> {
    match std::env::var(ORACLE_LIMIT_VAR) {
        Err(_) => Ok(default),
        Ok(raw) => raw
            .parse()
            .map_err(|_| CliError::Data(format!("{ORACLE_LIMIT_VAR}={raw} is not a node count"))),
    }
}

fn run_match(args: MatchArgs, apply_formula: bool) -> Result<(), CliError> {
    let tree = load_document(&args.document)?;
    let pt = load_pattern(&args.pattern)?;
    let bindings = if apply_formula { match_pattern(&pt, &tree) } else { embed(&pt, &tree) };

    if args.oracle_check {
        // The embedding oracle is the matching oracle with the formula forced TRUE.
        let oracle_pt = if apply_formula {
            pt.clone()
        } else {
            PatternTree::new(pt.vars().map(|v| pt.node(v).clone()).collect(), Formula::True)
                .expect("pattern stays structurally sound")
        };
        let limit = oracle_limit(matcher::ORACLE_TREE_LIMIT)?;
        let oracle = matcher::match_oracle_with_limit(&oracle_pt, &tree, limit)
            .map_err(|e| CliError::Data(format!("{}: {e}", args.document.display())))?;
        if oracle != bindings {
            return Err(CliError::Divergence(format!(
                "engine produced {} bindings but the oracle produced {}",
                bindings.len(),
                oracle.len()
            )));
        }
        eprintln!("oracle-check: {} bindings agree", bindings.len());
    }

    match args.format {
        OutputFormat::Xml => {
            let witness = build_witness(&pt, &bindings, &tree)
                .map_err(|e| CliError::Data(e.to_string()))?;
            let mut out = witness.serialize();
            out.push(b'\n');
            print_stdout(&out);
        }
        OutputFormat::Json => {
            let report: Vec<serde_json::Value> = bindings.iter().map(|b| b.to_json(&tree)).collect();
            println!("{}", serde_json::Value::Array(report));
        }
    }
    Ok(())
}

fn run_rollup(args: RollupArgs) -> Result<(), CliError> {
    let tree = load_document(&args.document)?;
    let agg: AggKind = args.agg.parse().map_err(CliError::Data)?;
    let query = RollupQuery::new(&args.fact, &args.hierarchy, &args.measure, &args.value, agg);
    let result = rollup(&tree, &query)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.document.display())))?;

    if args.oracle_check {
        let limit = oracle_limit(rollup::ORACLE_NODE_LIMIT)?;
        let oracle = rollup::rollup_oracle_with_limit(&tree, &query, limit)
            .map_err(|e| CliError::Data(format!("{}: {e}", args.document.display())))?;
        if oracle != result.value {
            return Err(CliError::Divergence(format!(
                "engine value {} but oracle value {}",
                result.value, oracle
            )));
        }
        eprintln!("oracle-check: value {} agrees", result.value);
    }

    let footer = format!(r#"{{"value":{},"matched_facts":{}}}"#, result.value, result.matched_facts);
    match args.format {
        OutputFormat::Xml => {
            let mut out = result.witness.serialize();
            out.push(b'\n');
            print_stdout(&out);
        }
        OutputFormat::Json => println!("{footer}"),
    }
    eprintln!("{footer}");
    Ok(())
}

fn run_classify(args: ClassifyArgs) -> Result<(), CliError> {
    let tree = load_document(&args.document)?;
    let schema_text = String::from_utf8(read_file(&args.schema)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.schema.display())))?;
    let cfg = SchemaConfig::from_json(&schema_text)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.schema.display())))?;
    let view = bind_schema(&tree, &cfg)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.document.display())))?;
    for warning in view.warnings() {
        eprintln!("warning: {warning}");
    }
    let mut report = serde_json::Map::new();
    for dim in &cfg.dimension_roots {
        let class = classify_hierarchy(&view, dim)
            .map_err(|e| CliError::Data(format!("{}: {e}", args.document.display())))?;
        report.insert(dim.clone(), class.to_json());
    }
    println!("{}", serde_json::Value::Object(report));
    Ok(())
}

fn run_validate(args: ValidateArgs) -> Result<(), CliError> {
    let bytes = read_file(&args.pattern)?;
    let text = String::from_utf8(bytes)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.pattern.display())))?;
    let (_, report) = parse_pattern_lenient(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.pattern.display())))?;
    let violations: Vec<serde_json::Value> = report
        .violations
        .iter()
        .map(|v| {
            serde_json::json!({
                "var": v.var.map(|p| p.to_string()),
                "message": v.message,
            })
        })
        .collect();
    let doc = serde_json::json!({ "valid": report.is_empty(), "violations": violations });
    println!("{doc}");
    Ok(())
}

fn print_stdout(bytes: &[u8]) {
    use std::io::Write;
    std::io::stdout().write_all(bytes).expect("stdout is writable");
}
