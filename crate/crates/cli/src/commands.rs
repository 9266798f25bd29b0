use std::io::Write;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use inquest_core::eval::{build_suite, evaluate, EvalOptions, Setting};
use inquest_core::export::{export_dataset, ExportConfig};
use inquest_core::protocol::{Agent, AgentError, AgentMessage, ObsFrame};
use inquest_core::rng::derive_seed;
use inquest_core::store::{load_record, RecordStore};
use inquest_core::{replay as rerun, AgentKind, Episode, EpisodeConfig, EpisodeRecord, Mode, QuestionType};
use inquest_service::{serve_play, serve_stdio, serve_tcp, AgentServerConfig, PlayConfig, SubprocessAgent};
use serde_json::json;

use crate::{EvalArgs, ExportArgs, GenArgs, ReplayArgs, ServeCmd, SettingArg};

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

pub fn gen(args: GenArgs) -> Result<ExitCode> {
    let g = &args.game;
    let mut config = EpisodeConfig::new(g.difficulty.into(), g.qtype.into(), g.seed, Mode::Test);
    if let Some(n) = args.locations {
        config.gen = config.gen.with_locations(n);
    }
    let (episode, first) = Episode::start(config.clone())?;
    let out = json!({
        "config": config,
        "question": episode.question(),
        "observation": first.observation,
        "world": episode.world(),
    });
    let text = if args.compact { serde_json::to_string(&out)? } else { serde_json::to_string_pretty(&out)? };
    emit(&text)?;
    Ok(ExitCode::SUCCESS)
}

/// Stands in for an external agent that could not be started.
struct Unavailable(String);

impl Agent for Unavailable {
    fn act(&mut self, _: &ObsFrame) -> Result<AgentMessage, AgentError> {
        Err(AgentError::Failed(self.0.clone()))
    }
}

pub fn eval(args: EvalArgs) -> Result<ExitCode> {
    let setting = match args.setting {
        SettingArg::Training => Setting::TrainingGames { games: args.games, episodes: args.episodes },
        SettingArg::Unlimited => Setting::Unlimited { episodes: args.episodes },
        SettingArg::ZeroShot => Setting::ZeroShot,
    };
    let qtype: QuestionType = args.qtype.into();
    let suite = build_suite(setting, args.difficulty.into(), qtype, args.seed)?;
    let timeout = args.step_timeout_ms.map(Duration::from_millis);
    let opts = EvalOptions { workers: args.workers, step_timeout: timeout };

    let (agent_name, (report, records)) = match &args.agent_cmd {
        Some(cmd) => {
            let mut words = cmd.split_whitespace().map(str::to_owned);
            let program = words.next().context("--agent-cmd is empty")?;
            let rest: Vec<String> = words.collect();
            let make = |_: &EpisodeConfig| -> Box<dyn Agent> {
                match SubprocessAgent::spawn(&program, &rest, timeout) {
                    Ok(a) => Box::new(a),
                    Err(e) => Box::new(Unavailable(format!("cannot start '{program}': {e}"))),
                }
            };
            (cmd.clone(), evaluate(&suite, make, opts)?)
        }
        None => {
            let kind: AgentKind = args.agent.into();
            let make = |c: &EpisodeConfig| kind.build(derive_seed(c.seed(), "question", c.question_index));
            (kind.to_string(), evaluate(&suite, make, opts)?)
        }
    };

    if let Some(dir) = &args.records {
        let store = RecordStore::open(dir)?;
        for (i, rec) in records.iter().enumerate() {
            store.save(&format!("episode-{i:06}"), rec)?;
        }
    }

    let title = format!("{agent_name} on {setting}, {} {qtype} (seed {})", suite.difficulty, args.seed);
    if args.json {
        let out = json!({
            "agent": agent_name,
            "setting": setting,
            "difficulty": suite.difficulty,
            "qtype": qtype,
            "seed": args.seed,
            "report": report,
        });
        emit(&serde_json::to_string_pretty(&out)?)?;
    } else {
        emit(report.table(&title).trim_end())?;
    }
    Ok(ExitCode::SUCCESS)
}

async fn ctrl_c() {
    if tokio::signal::ctrl_c().await.is_err() {
        std::future::pending::<()>().await;
    }
}

pub fn serve(target: ServeCmd) -> Result<ExitCode> {
    let rt = tokio::runtime::Runtime::new()?;
    match target {
        ServeCmd::Agent(a) => {
            let g = &a.game;
            let mut config = AgentServerConfig::new(g.difficulty.into(), g.qtype.into(), a.mode.into(), g.seed);
            config.repeat_seed = a.repeat_seed;
            config.reveal_truth = a.reveal_truth;
            config.idle_timeout = a.idle_secs.map(Duration::from_secs);
            config.store = a.record_dir.as_ref().map(RecordStore::open).transpose()?.map(Arc::new);
            rt.block_on(async {
                if a.stdio {
                    let rec = serve_stdio(config).await?;
                    tracing::info!(correct = rec.answer_correct, aborted = ?rec.aborted, "episode finished");
                    return Ok(());
                }
                let listener = tokio::net::TcpListener::bind(&a.bind).await.with_context(|| format!("cannot bind {}", a.bind))?;
                eprintln!("agent protocol listening on {}", listener.local_addr()?);
                serve_tcp(listener, config, ctrl_c()).await?;
                anyhow::Ok(())
            })?;
        }
        ServeCmd::Play(a) => {
            let config = PlayConfig {
                store: Arc::new(RecordStore::open(&a.record_dir)?),
                idle_timeout: Duration::from_secs(a.idle_secs),
                static_dir: a.static_dir.clone(),
                seed: a.seed,
            };
            if let Some(dir) = &a.static_dir {
                if !dir.is_dir() {
                    bail!("static directory {} does not exist", dir.display());
                }
            }
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(&a.bind).await.with_context(|| format!("cannot bind {}", a.bind))?;
                eprintln!("play API listening on http://{}", listener.local_addr()?);
                serve_play(listener, config, ctrl_c()).await?;
                anyhow::Ok(())
            })?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

pub fn export_docs(args: ExportArgs) -> Result<ExitCode> {
    let qtypes: Vec<QuestionType> = if args.qtype.is_empty() {
        vec![QuestionType::Location, QuestionType::Existence, QuestionType::Attribute]
    } else {
        args.qtype.iter().map(|&q| q.into()).collect()
    };
    let cfg = ExportConfig {
        difficulty: args.difficulty.into(),
        qtypes,
        count: args.count,
        master_seed: args.seed,
        ratios: (args.train, args.valid),
    };
    let manifest = export_dataset(&cfg, &args.out)?;
    if args.json {
        emit(&serde_json::to_string_pretty(&manifest)?)?;
    } else {
        let c = &manifest.counts;
        emit(&format!(
            "wrote {} triplets to {} (train {}, valid {}, test {}); {} games skipped",
            c.train + c.valid + c.test,
            args.out.display(),
            c.train,
            c.valid,
            c.test,
            manifest.skipped_seeds.len()
        ))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn print_transcript(rec: &EpisodeRecord, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "Question: {}", rec.question.text)?;
    writeln!(out, "{}", rec.initial.observation)?;
    let mut last = &rec.initial.observation;
    for s in &rec.steps {
        writeln!(out, "\n> {}", s.command)?;
        if !s.outcome.feedback.is_empty() {
            writeln!(out, "{}", s.outcome.feedback)?;
        }
        if &s.outcome.observation != last {
            writeln!(out, "{}", s.outcome.observation)?;
        }
        last = &s.outcome.observation;
    }
    writeln!(out)?;
    match (&rec.answer, &rec.aborted) {
        (_, Some(reason)) => writeln!(out, "Aborted: {reason}")?,
        (Some(a), None) => writeln!(
            out,
            "Answer: {a} ({}; ground truth {})",
            if rec.answer_correct { "correct" } else { "incorrect" },
            rec.question.answer
        )?,
        (None, None) => writeln!(out, "Unanswered")?,
    }
    if rec.config.mode == Mode::Train {
        writeln!(out, "Sufficient information: {:.3}", rec.sufficient_info.total)?;
    }
    Ok(())
}

pub fn replay(args: ReplayArgs) -> Result<ExitCode> {
    let stored = load_record(&args.record)?;
    let again = rerun(&stored)?;
    if again != stored {
        let outcomes = |r: &EpisodeRecord| {
            std::iter::once(r.initial.clone()).chain(r.steps.iter().map(|s| s.outcome.clone())).collect::<Vec<_>>()
        };
        let (a, b) = (outcomes(&stored), outcomes(&again));
        match a.iter().zip(&b).position(|(x, y)| x != y) {
            Some(i) => bail!("replay diverges from {} at step {i}", args.record.display()),
            None => bail!("replay of {} differs from the stored record", args.record.display()),
        }
    }
    if args.json {
        emit(&serde_json::to_string_pretty(&again)?)?;
    } else {
        let mut text = Vec::new();
        print_transcript(&again, &mut text)?;
        emit(String::from_utf8_lossy(&text).trim_end())?;
    }
    Ok(ExitCode::SUCCESS)
}
