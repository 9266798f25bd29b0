//! Drives agents through episodes, alone or in lock-step batches.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::episode::{EpisodeConfig, EpisodeRecord};
use crate::error::EpisodeError;
use crate::protocol::{Agent, ObsFrame, ServerFrame, Session};

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Wall-clock limit for a single agent turn. Exceeding it aborts the episode.
    pub step_timeout: Option<Duration>,
}

struct Slot {
    session: Session,
    agent: Box<dyn Agent>,
    frame: ObsFrame,
    padding: u32,
}

/// One agent turn. Returns true once the session has finished.
fn turn(session: &mut Session, agent: &mut dyn Agent, frame: &mut ObsFrame, opts: RunOptions) -> bool {
    let started = Instant::now();
    let reply = agent.act(frame);
    if let Some(limit) = opts.step_timeout {
        if started.elapsed() > limit {
            session.abort(&format!("agent timed out after {} ms", limit.as_millis()));
            return true;
        }
    }
    let msg = match reply {
        Ok(m) => m,
        Err(e) => {
            session.abort(&e.to_string());
            return true;
        }
    };
    for f in session.handle(msg) {
        match f {
            ServerFrame::Obs(o) => *frame = o,
            ServerFrame::Error(e) if !e.fatal => agent.on_error(&e),
            _ => {}
        }
    }
    session.is_finished()
}

fn start(config: &EpisodeConfig) -> Result<(Session, ObsFrame), EpisodeError> {
    let (session, first) = Session::start(config.clone(), false)?;
    match first {
        ServerFrame::Obs(o) => Ok((session, o)),
        _ => unreachable!("sessions open with an observation"),
    }
}

/// Plays one episode to completion.
pub fn run_episode(config: &EpisodeConfig, agent: &mut dyn Agent, opts: RunOptions) -> Result<EpisodeRecord, EpisodeError> {
    let (mut session, mut frame) = start(config)?;
    while !turn(&mut session, agent, &mut frame, opts) {}
    Ok(session.into_record().expect("finished sessions hold a record"))
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    pub records: Vec<EpisodeRecord>,
    /// Turns each episode sat out after finishing while others were still running.
    pub padding_turns: Vec<u32>,
}

/// Plays a batch in lock-step: every round gives each unfinished episode one
/// turn, and finished episodes idle until the last one ends. Episodes are
/// independent, so each record equals the one a solo run would produce.
pub fn run_batch<F>(configs: &[EpisodeConfig], make_agent: F, opts: RunOptions) -> Result<BatchResult, EpisodeError>
where
    F: Fn(&EpisodeConfig) -> Box<dyn Agent> + Sync,
{
    let mut slots = configs
        .par_iter()
        .map(|c| {
            let (session, frame) = start(c)?;
            Ok(Slot { session, agent: make_agent(c), frame, padding: 0 })
        })
        .collect::<Result<Vec<Slot>, EpisodeError>>()?;
    while slots.iter().any(|s| !s.session.is_finished()) {
        slots.par_iter_mut().for_each(|s| {
            if s.session.is_finished() {
                s.padding += 1;
            } else {
                turn(&mut s.session, s.agent.as_mut(), &mut s.frame, opts);
            }
        });
    }
    let padding_turns = slots.iter().map(|s| s.padding).collect();
    let records = slots.into_iter().map(|s| s.session.into_record().expect("all finished")).collect();
    Ok(BatchResult { records, padding_turns })
}
