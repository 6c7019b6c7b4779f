//! Command-line interface. Each command is a thin wrapper over a library
//! call: data goes to stdout, diagnostics to stderr, and the exit status is
//! 0 on success, 1 for domain errors and 2 for I/O or environment errors.

use std::fmt::Display;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use bibcap_core::registry::{Span, StemQuery};
use bibcap_core::workflow::{load_volume_dir, VolumeSnapshot};
use bibcap_core::{
    validate_bibcode_string, BibstemEntry, Registry, RegistryError, Service, ServiceError,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_OK: u8 = 0;
pub const EXIT_DOMAIN: u8 = 1;
pub const EXIT_ENVIRONMENT: u8 = 2;

const DEFAULT_OPERATOR: &str = "cli";

#[derive(Debug, Parser)]
#[command(
    name = "bibcap",
    version,
    about = "Bibcode capture tools for scanned publications"
)]
pub struct Cli {
    /// Bibstem registry file.
    #[arg(long, global = true, default_value = "registry.tsv")]
    pub registry: PathBuf,

    /// Output format for `derive`.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Operator name recorded in event logs.
    #[arg(long, global = true, default_value = DEFAULT_OPERATOR)]
    pub operator: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Tsv,
    ExportBlock,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a file of bibcodes, one per line.
    Validate { input: PathBuf },
    /// Take a volume directory through finalization and print its export.
    Derive {
        volume_dir: PathBuf,
        /// Persist into this data directory instead of working in memory.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Import a volume directory into a data directory.
    Ingest {
        volume_dir: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Inspect or extend the bibstem registry.
    #[command(subcommand)]
    Registry(RegistryCommand),
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        #[arg(long)]
        data: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum RegistryCommand {
    /// Print every entry as a registry line.
    List,
    /// Print the stem for a publication title.
    Resolve(ResolveArgs),
    /// Register a new stem and rewrite the registry file.
    Add(AddArgs),
}

#[derive(Debug, Args)]
pub struct ResolveArgs {
    pub title: String,
    #[arg(long)]
    pub series: Option<String>,
    #[arg(long)]
    pub year: Option<u32>,
    #[arg(long)]
    pub volume: Option<u32>,
}

#[derive(Debug, Args)]
pub struct AddArgs {
    pub stem: String,
    pub title: String,
    #[arg(long)]
    pub series: Option<String>,
    /// Year range as `start-end`, `start-` or `-end`.
    #[arg(long, value_parser = parse_span)]
    pub years: Option<Span>,
    /// Volume range as `start-end`, `start-` or `-end`.
    #[arg(long, value_parser = parse_span)]
    pub volumes: Option<Span>,
    #[arg(long)]
    pub predecessor: Option<String>,
}

fn parse_span(text: &str) -> Result<Span, String> {
    let (start, end) = text
        .split_once('-')
        .ok_or_else(|| format!("expected start-end, got {text:?}"))?;
    let bound = |s: &str| -> Result<Option<u32>, String> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| format!("bad bound {s:?}"))
        }
    };
    Ok(Span::new(bound(start)?, bound(end)?))
}

/// What a command wrote and how it ended.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Output {
    pub stdout: String,
    pub stderr: String,
    pub code: u8,
}

impl Output {
    fn data(stdout: String) -> Output {
        Output {
            stdout,
            ..Output::default()
        }
    }

    fn fail(code: u8, message: impl Display) -> Output {
        Output {
            stderr: format!("error: {message}\n"),
            code,
            ..Output::default()
        }
    }
}

fn service_failure(err: ServiceError) -> Output {
    let code = if err.is_environmental() {
        EXIT_ENVIRONMENT
    } else {
        EXIT_DOMAIN
    };
    Output::fail(code, format_args!("{}: {err}", err.code()))
}

fn registry_failure(err: RegistryError) -> Output {
    Output::fail(EXIT_DOMAIN, format_args!("{}: {err}", err.code()))
}

fn load_registry(path: &Path) -> Result<Registry, Output> {
    let text = fs::read_to_string(path)
        .map_err(|e| Output::fail(EXIT_ENVIRONMENT, format_args!("{}: {e}", path.display())))?;
    Registry::load(&text).map_err(registry_failure)
}

/// Runs every command except `serve`.
pub fn run(cli: &Cli) -> Output {
    match &cli.command {
        Command::Validate { input } => validate(input),
        Command::Derive { volume_dir, data } => derive(cli, volume_dir, data.as_deref()),
        Command::Ingest { volume_dir, data } => ingest(cli, volume_dir, data),
        Command::Registry(sub) => registry(cli, sub),
        Command::Serve { .. } => Output::fail(EXIT_DOMAIN, "serve runs through `serve`"),
    }
}

/// One stderr line per invalid code: `line N: <diagnostic>[; <diagnostic>...]`.
/// Blank lines are skipped.
pub fn validate(input: &Path) -> Output {
    let text = match fs::read_to_string(input) {
        Ok(text) => text,
        Err(e) => return Output::fail(EXIT_ENVIRONMENT, format_args!("{}: {e}", input.display())),
    };
    let mut out = Output::default();
    for (i, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let diagnostics = validate_bibcode_string(line);
        if !diagnostics.is_empty() {
            let joined: Vec<String> = diagnostics.iter().map(ToString::to_string).collect();
            out.stderr
                .push_str(&format!("line {}: {}\n", i + 1, joined.join("; ")));
            out.code = EXIT_DOMAIN;
        }
    }
    out
}

fn open_service(cli: &Cli, data: Option<&Path>) -> Result<Service, Output> {
    let registry = load_registry(&cli.registry)?;
    match data {
        Some(dir) => Service::open(dir, registry).map_err(service_failure),
        None => Ok(Service::in_memory(registry)),
    }
}

fn derive(cli: &Cli, volume_dir: &Path, data: Option<&Path>) -> Output {
    let service = match open_service(cli, data) {
        Ok(s) => s,
        Err(out) => return out,
    };
    let result = load_volume_dir(volume_dir).and_then(|dir| {
        let id = service.import_volume(dir, &cli.operator)?;
        let export = service.complete_volume(&id, &cli.operator)?;
        Ok(match cli.format {
            Some(Format::Tsv) => articles_tsv(&service.snapshot(&id)?),
            _ => export,
        })
    });
    match result {
        Ok(text) => Output::data(text),
        Err(e) => service_failure(e),
    }
}

fn articles_tsv(snapshot: &VolumeSnapshot) -> String {
    snapshot.get("articles.tsv").unwrap_or_default().to_string()
}

fn ingest(cli: &Cli, volume_dir: &Path, data: &Path) -> Output {
    let service = match open_service(cli, Some(data)) {
        Ok(s) => s,
        Err(out) => return out,
    };
    match load_volume_dir(volume_dir).and_then(|dir| service.import_volume(dir, &cli.operator)) {
        Ok(id) => Output::data(format!("{id}\n")),
        Err(e) => service_failure(e),
    }
}

fn registry(cli: &Cli, command: &RegistryCommand) -> Output {
    let registry = match load_registry(&cli.registry) {
        Ok(r) => r,
        Err(out) => return out,
    };
    match command {
        RegistryCommand::List => {
            let text: String = registry
                .entries()
                .map(|e| format!("{}\n", e.to_line()))
                .collect();
            Output::data(text)
        }
        RegistryCommand::Resolve(args) => {
            let query = StemQuery {
                title: &args.title,
                series: args.series.as_deref(),
                year: args.year,
                volume: args.volume,
            };
            match registry.resolve_stem(&query) {
                Ok(stem) => Output::data(format!("{stem}\n")),
                Err(e) => registry_failure(e),
            }
        }
        RegistryCommand::Add(args) => {
            let mut entry = BibstemEntry::new(&args.stem, &args.title);
            entry.series_designation = args.series.clone();
            entry.year_range = args.years.unwrap_or_default();
            entry.volume_range = args.volumes.unwrap_or_default();
            entry.predecessor = args.predecessor.clone();
            let (next, audit) = match registry.register_stem(entry) {
                Ok(r) => r,
                Err(e) => return registry_failure(e),
            };
            if let Err(e) = write_atomically(&cli.registry, &next.to_tsv()) {
                return Output::fail(
                    EXIT_ENVIRONMENT,
                    format_args!("{}: {e}", cli.registry.display()),
                );
            }
            Output::data(format!("{audit}\n"))
        }
    }
}

fn write_atomically(path: &Path, contents: &str) -> std::io::Result<()> {
    let tmp = path.with_extension("tsv.tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

/// Opens the data directory and serves the HTTP API until interrupted.
pub async fn serve(cli: &Cli, listen: SocketAddr, data: &Path) -> Output {
    let service = match open_service(cli, Some(data)) {
        Ok(s) => Arc::new(s),
        Err(out) => return out,
    };
    let listener = match tokio::net::TcpListener::bind(listen).await {
        Ok(l) => l,
        Err(e) => return Output::fail(EXIT_ENVIRONMENT, format_args!("bind {listen}: {e}")),
    };
    let bound = listener.local_addr().map_or(listen, |a| a);
    eprintln!("listening on http://{bound}");
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    match axum::serve(listener, crate::http::router(service))
        .with_graceful_shutdown(shutdown)
        .await
    {
        Ok(()) => Output::default(),
        Err(e) => Output::fail(EXIT_ENVIRONMENT, e),
    }
}
