//! Terminal play: one command per line, `answer <token>` to finish.

use std::io::{BufRead, IsTerminal, Write};
use std::process::ExitCode;

use anyhow::{Context, Result};
use inquest_core::{Episode, EpisodeConfig, EpisodeRecord, Mode};
use serde_json::json;

use crate::PlayArgs;

const HELP: &str = "Type a command such as `go north`, `open fridge` or `take apple`.\n\
`wait` ends exploration; `answer <token>` answers the question; `quit` gives up.";

pub fn run(args: PlayArgs) -> Result<ExitCode> {
    let g = &args.game;
    let mode: Mode = args.mode.into();
    let config = EpisodeConfig::new(g.difficulty.into(), g.qtype.into(), g.seed, mode);
    let (mut ep, first) = Episode::start(config)?;
    let interactive = std::io::stdin().is_terminal();
    let mut out = std::io::stdout().lock();

    writeln!(out, "Question: {}", ep.question().text)?;
    writeln!(out, "{}", first.observation)?;
    if interactive {
        writeln!(out, "\n{HELP}")?;
    }

    let mut last_obs = first.observation;
    let mut lines = std::io::stdin().lock().lines();
    let record = loop {
        if interactive {
            write!(out, "\n[{}/{}] > ", ep.step_index(), ep.config().max_steps)?;
            out.flush()?;
        }
        let Some(line) = lines.next().transpose()? else {
            break ep.abort("input closed");
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line == "quit" || line == "exit" {
            break ep.abort("player quit");
        }
        if line == "help" {
            writeln!(out, "{HELP}")?;
            continue;
        }
        if let Some(token) = line.strip_prefix("answer ") {
            if !ep.is_done() {
                let o = ep.step("wait")?;
                writeln!(out, "{}", o.feedback)?;
            }
            break ep.answer(token.trim())?;
        }
        if ep.is_done() {
            writeln!(out, "No more moves; type `answer <token>`.")?;
            continue;
        }
        let o = ep.step(line)?;
        if !o.feedback.is_empty() {
            writeln!(out, "{}", o.feedback)?;
        }
        if o.observation != last_obs {
            writeln!(out, "{}", o.observation)?;
            last_obs = o.observation.clone();
        }
        if let Some(info) = &o.train_only {
            if info.episodic_bonus > 0.0 {
                writeln!(out, "(discovery bonus {:+.2})", info.episodic_bonus)?;
            }
        }
        if o.done {
            writeln!(out, "Time to answer: type `answer <token>`.")?;
        }
    };

    report(&record, mode, args.json, &mut out)?;
    if let Some(path) = &args.record {
        std::fs::write(path, serde_json::to_string_pretty(&record)?)
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn report(rec: &EpisodeRecord, mode: Mode, as_json: bool, out: &mut impl Write) -> Result<()> {
    let sufficiency = (mode == Mode::Train).then_some(rec.sufficient_info.total);
    if as_json {
        let v = json!({
            "correct": rec.answer_correct,
            "answer": rec.answer,
            "ground_truth": rec.question.answer,
            "sufficient_info": sufficiency,
            "steps": rec.steps.len(),
            "aborted": rec.aborted,
        });
        writeln!(out, "{v}")?;
        return Ok(());
    }
    match &rec.aborted {
        Some(reason) => writeln!(out, "Episode ended: {reason}. The answer was {}.", rec.question.answer)?,
        None if rec.answer_correct => writeln!(out, "Correct!")?,
        None => writeln!(out, "Incorrect. The answer was {}.", rec.question.answer)?,
    }
    if let Some(s) = sufficiency {
        writeln!(out, "Sufficient information: {s:.3}")?;
    }
    Ok(())
}
