mod commands;
mod play;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use inquest_core::{AgentKind, Difficulty, Mode, QuestionType};

#[derive(Parser)]
#[command(name = "inquest", version, about = "Question answering in generated text-game worlds")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a world and its question as JSON.
    Gen(GenArgs),
    /// Play an episode in the terminal.
    Play(PlayArgs),
    /// Run an evaluation suite with a built-in or external agent.
    Eval(EvalArgs),
    /// Serve episodes to programs or human players.
    Serve {
        #[command(subcommand)]
        target: ServeCmd,
    },
    /// Export explorer trajectories as {document, question, answer} triplets.
    ExportDocs(ExportArgs),
    /// Re-run a stored episode record and print its transcript.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum DifficultyArg {
    Fixed,
    Random,
}

impl From<DifficultyArg> for Difficulty {
    fn from(d: DifficultyArg) -> Self {
        match d {
            DifficultyArg::Fixed => Difficulty::FixedMap,
            DifficultyArg::Random => Difficulty::RandomMap,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum QtypeArg {
    Location,
    Existence,
    Attribute,
}

impl From<QtypeArg> for QuestionType {
    fn from(q: QtypeArg) -> Self {
        match q {
            QtypeArg::Location => QuestionType::Location,
            QtypeArg::Existence => QuestionType::Existence,
            QtypeArg::Attribute => QuestionType::Attribute,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Train,
    Test,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Train => Mode::Train,
            ModeArg::Test => Mode::Test,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum AgentArg {
    Random,
    RandomCmd,
    Explorer,
}

impl From<AgentArg> for AgentKind {
    fn from(a: AgentArg) -> Self {
        match a {
            AgentArg::Random => AgentKind::Random,
            AgentArg::RandomCmd => AgentKind::RandomCmd,
            AgentArg::Explorer => AgentKind::Explorer,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum SettingArg {
    Training,
    Unlimited,
    ZeroShot,
}

#[derive(Args, Clone)]
pub struct GameArgs {
    #[arg(long, value_enum, default_value = "fixed")]
    pub difficulty: DifficultyArg,
    #[arg(long, value_enum, default_value = "location")]
    pub qtype: QtypeArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub game: GameArgs,
    /// Override the number of rooms.
    #[arg(long)]
    pub locations: Option<u32>,
    /// Print on one line.
    #[arg(long)]
    pub compact: bool,
}

#[derive(Args)]
pub struct PlayArgs {
    #[command(flatten)]
    pub game: GameArgs,
    #[arg(long, value_enum, default_value = "test")]
    pub mode: ModeArg,
    /// Save the episode record here when the episode ends.
    #[arg(long)]
    pub record: Option<PathBuf>,
    /// Print the result as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long, value_enum)]
    pub setting: SettingArg,
    /// Size of the training game pool.
    #[arg(long, default_value_t = 1)]
    pub games: usize,
    /// Episodes to run (training and unlimited settings).
    #[arg(long, default_value_t = 1000)]
    pub episodes: usize,
    #[arg(long, value_enum, default_value = "fixed")]
    pub difficulty: DifficultyArg,
    #[arg(long, value_enum, default_value = "location")]
    pub qtype: QtypeArg,
    #[arg(long, value_enum, default_value = "random", conflicts_with = "agent_cmd")]
    pub agent: AgentArg,
    /// External agent program speaking the line protocol on stdin/stdout,
    /// e.g. "python3 agent.py".
    #[arg(long)]
    pub agent_cmd: Option<String>,
    /// Master seed of the suite.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Per-step agent time limit in milliseconds.
    #[arg(long)]
    pub step_timeout_ms: Option<u64>,
    /// Save every episode record into this directory.
    #[arg(long)]
    pub records: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Subcommand)]
pub enum ServeCmd {
    /// The JSON-lines agent protocol, one episode per TCP connection or over stdio.
    Agent(ServeAgentArgs),
    /// The HTTP + WebSocket play API.
    Play(ServePlayArgs),
}

#[derive(Args)]
pub struct ServeAgentArgs {
    #[command(flatten)]
    pub game: GameArgs,
    #[arg(long, value_enum, default_value = "test")]
    pub mode: ModeArg,
    #[arg(long, env = "INQUEST_BIND", default_value = "127.0.0.1:7070", conflicts_with = "stdio")]
    pub bind: String,
    /// Play one episode over stdin/stdout instead of listening.
    #[arg(long)]
    pub stdio: bool,
    /// Every connection plays the game of `--seed` instead of a derived one.
    #[arg(long)]
    pub repeat_seed: bool,
    /// Include the ground truth in result frames.
    #[arg(long)]
    pub reveal_truth: bool,
    #[arg(long)]
    pub idle_secs: Option<u64>,
    #[arg(long, env = "INQUEST_RECORD_DIR")]
    pub record_dir: Option<PathBuf>,
}

#[derive(Args)]
pub struct ServePlayArgs {
    #[arg(long, env = "INQUEST_BIND", default_value = "127.0.0.1:8080")]
    pub bind: String,
    #[arg(long, env = "INQUEST_RECORD_DIR", default_value = "records")]
    pub record_dir: PathBuf,
    /// Directory of the built play client, served at `/`.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
    #[arg(long, env = "INQUEST_IDLE_SECS", default_value_t = 900)]
    pub idle_secs: u64,
    /// Seed stream for sessions created without a seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args)]
pub struct ExportArgs {
    #[arg(long, value_enum, default_value = "fixed")]
    pub difficulty: DifficultyArg,
    /// Question types to cycle through; all three by default.
    #[arg(long, value_enum)]
    pub qtype: Vec<QtypeArg>,
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.8)]
    pub train: f64,
    #[arg(long, default_value_t = 0.1)]
    pub valid: f64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args)]
pub struct ReplayArgs {
    pub record: PathBuf,
    /// Print the re-run record as JSON instead of the transcript.
    #[arg(long)]
    pub json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn,inquest_service=info".into()),
        )
        .init();
    let result = match cli.command {
        Cmd::Gen(a) => commands::gen(a),
        Cmd::Play(a) => play::run(a),
        Cmd::Eval(a) => commands::eval(a),
        Cmd::Serve { target } => commands::serve(target),
        Cmd::ExportDocs(a) => commands::export_docs(a),
        Cmd::Replay(a) => commands::replay(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
