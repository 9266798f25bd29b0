//! An external program as an [`Agent`]: frames go to its stdin, one reply
//! line per frame is read from its stdout.

use std::io::{self, BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use inquest_core::protocol::ErrorFrame;
use inquest_core::{Agent, AgentError, AgentMessage, ObsFrame, ServerFrame};

pub struct SubprocessAgent {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<io::Result<String>>,
    timeout: Option<Duration>,
}

impl SubprocessAgent {
    /// Spawns `program args...` with piped stdin and stdout; stderr is inherited.
    pub fn spawn(program: &str, args: &[String], timeout: Option<Duration>) -> io::Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(SubprocessAgent { child, stdin, lines, timeout })
    }

    fn send(&mut self, frame: &ServerFrame) -> Result<(), AgentError> {
        let stdin = self.stdin.as_mut().ok_or(AgentError::Disconnected)?;
        writeln!(stdin, "{}", frame.to_line())
            .and_then(|_| stdin.flush())
            .map_err(|_| AgentError::Disconnected)
    }

    fn recv(&mut self) -> Result<String, AgentError> {
        let line = match self.timeout {
            Some(t) => self.lines.recv_timeout(t).map_err(|e| match e {
                RecvTimeoutError::Timeout => AgentError::Timeout(t.as_millis() as u64),
                RecvTimeoutError::Disconnected => AgentError::Disconnected,
            })?,
            None => self.lines.recv().map_err(|_| AgentError::Disconnected)?,
        };
        line.map_err(|e| AgentError::Failed(e.to_string()))
    }
}

impl Agent for SubprocessAgent {
    fn act(&mut self, frame: &ObsFrame) -> Result<AgentMessage, AgentError> {
        self.send(&ServerFrame::Obs(frame.clone()))?;
        let line = self.recv()?;
        serde_json::from_str(&line).map_err(|e| AgentError::Failed(format!("malformed message: {e}")))
    }

    fn on_error(&mut self, frame: &ErrorFrame) {
        // a dead child surfaces on the next act
        let _ = self.send(&ServerFrame::Error(frame.clone()));
    }
}

impl Drop for SubprocessAgent {
    fn drop(&mut self) {
        drop(self.stdin.take());
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
