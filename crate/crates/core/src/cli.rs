//! Command-line front end: `gen-data`, `sanitize` and `certify`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::certify::{ClosedEnvironment, EnvironmentConfig, SanitizerConfig};
use crate::data::{generate_synthetic, load_dataset, save_dataset, Role, SyntheticConfig};
use crate::error::{Error, Result};
use crate::metrics::UtilityMode;
use crate::sanitizer::{Method, Sanitizer};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DIVERGENCE: i32 = 4;
pub const EXIT_METRIC: i32 = 5;

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::Io { .. }
        | Error::Schema { .. }
        | Error::Validation { .. }
        | Error::EmptyDataset => EXIT_IO,
        Error::Divergence { .. } | Error::Numeric(_) => EXIT_DIVERGENCE,
        Error::Metric(_) | Error::Precondition(_) | Error::Pairing(_) | Error::Training(_) => {
            EXIT_METRIC
        }
        _ => EXIT_CONFIG,
    }
}

/// All settings a command may read; every section is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: SyntheticConfig,
    pub environment: EnvironmentConfig,
    pub sanitizer: SanitizerConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                Ok(serde_json::from_str(&text)?)
            }
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "closedenv",
    version,
    about = "Privacy certification of a closed environment"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EnvArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// max-accuracy or verification-auc
    #[arg(long)]
    pub utility_mode: Option<UtilityMode>,
    /// Sanitization method to fit: identity, linear or mmd
    #[arg(long)]
    pub method: Option<Method>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the synthetic train, test and user sets plus a manifest
    GenData {
        #[command(flatten)]
        common: Common,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a sanitizer and optionally apply it to a user set
    Sanitize {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        env: EnvArgs,
        /// Sanitizer JSON output
        #[arg(long)]
        out: PathBuf,
        /// User set to sanitize
        #[arg(long, requires = "user_out")]
        user: Option<PathBuf>,
        /// Where to write the sanitized user set
        #[arg(long, requires = "user")]
        user_out: Option<PathBuf>,
    },
    /// Train the environment, apply a sanitizer and write the report
    Certify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        env: EnvArgs,
        /// Previously fitted sanitizer; otherwise one is fitted from --method
        #[arg(long, conflicts_with = "method")]
        sanitizer: Option<PathBuf>,
        #[arg(long)]
        user: Option<PathBuf>,
        /// Report JSON output
        #[arg(long)]
        out: PathBuf,
    },
}

fn configure_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn environment(common: &Common, args: &EnvArgs) -> Result<(RunConfig, ClosedEnvironment)> {
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.environment.master_seed = seed;
        cfg.sanitizer.mmd.seed = seed;
    }
    if let Some(mode) = args.utility_mode {
        cfg.environment.utility_mode = mode;
    }
    if let Some(method) = args.method {
        cfg.sanitizer.method = method;
    }
    let train = load_dataset(&args.train, Role::Train)?;
    let test = load_dataset(&args.test, Role::Test)?;
    let env = ClosedEnvironment::new(train, test, cfg.environment.clone())?;
    Ok((cfg, env))
}

fn gen_data(common: &Common, out: &Path) -> Result<String> {
    let mut cfg = RunConfig::load(common.config.as_deref())?.data;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let (train, test, user) = generate_synthetic(&cfg)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut files = serde_json::Map::new();
    for (name, ds) in [("train", &train), ("test", &test), ("user", &user)] {
        let file = format!("{name}.csv");
        save_dataset(ds, out.join(&file))?;
        files.insert(
            name.to_string(),
            json!({ "file": file, "records": ds.len(), "sha256": ds.digest() }),
        );
    }
    let manifest = json!({ "generator": cfg, "files": files });
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write_text(&out.join("manifest.json"), &text)?;
    Ok(format!(
        "wrote {} train, {} test and {} user records to {}\n",
        train.len(),
        test.len(),
        user.len(),
        out.display()
    ))
}

fn sanitize(
    common: &Common,
    args: &EnvArgs,
    out: &Path,
    user: Option<&Path>,
    user_out: Option<&Path>,
) -> Result<String> {
    let (cfg, env) = environment(common, args)?;
    let san = env.fit_sanitizer(&cfg.sanitizer)?;
    let mut text = san.to_json()?;
    text.push('\n');
    write_text(out, &text)?;
    let mut msg = format!(
        "wrote {} sanitizer to {}\n",
        san.method().as_str(),
        out.display()
    );
    if let (Some(user), Some(user_out)) = (user, user_out) {
        let users = load_dataset(user, Role::User)?;
        let sanitized = san.sanitize_dataset(&users)?;
        save_dataset(&sanitized, user_out)?;
        msg.push_str(&format!(
            "wrote {} sanitized user records to {}\n",
            sanitized.len(),
            user_out.display()
        ));
    }
    Ok(msg)
}

fn certify(
    common: &Common,
    args: &EnvArgs,
    sanitizer: Option<&Path>,
    user: Option<&Path>,
    out: &Path,
) -> Result<String> {
    let (cfg, env) = environment(common, args)?;
    let san = match sanitizer {
        Some(p) => Sanitizer::load(p, Some(&env.train))?,
        None => env.fit_sanitizer(&cfg.sanitizer)?,
    };
    let users = user.map(|p| load_dataset(p, Role::User)).transpose()?;
    let report = env.certify(&san, users.as_ref())?;
    write_text(out, &report.to_json()?)?;
    Ok(report.summary())
}

/// Runs one parsed command and returns its stdout text.
pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::GenData { common, out } => {
            configure_threads(common.threads)?;
            gen_data(common, out)
        }
        Command::Sanitize {
            common,
            env,
            out,
            user,
            user_out,
        } => {
            configure_threads(common.threads)?;
            sanitize(common, env, out, user.as_deref(), user_out.as_deref())
        }
        Command::Certify {
            common,
            env,
            sanitizer,
            user,
            out,
        } => {
            configure_threads(common.threads)?;
            certify(common, env, sanitizer.as_deref(), user.as_deref(), out)
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(text) => {
            print!("{text}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
