use std::io::{self, BufRead, Write};

use srx::session::{Session, SessionError};
use rustyline::error::ReadlineError;
use rustyline::DefaultEditor;

const PROMPT: &str = "srx> ";

/// Error text with a caret under the offending character when the error
/// has a position.
pub fn format_error(line: &str, err: &SessionError) -> String {
    match err.position() {
        Some(pos) => format!("error: {err}\n  {line}\n  {}^", " ".repeat(pos)),
        None => format!("error: {err}"),
    }
}

fn is_exit(line: &str) -> bool {
    matches!(line, "quit" | "exit")
}

/// Run one line. Returns the text to print, or `None` for blank lines.
pub fn step(session: &mut Session, line: &str) -> Option<String> {
    let line = line.trim_end();
    if line.trim().is_empty() || line.trim_start().starts_with('#') {
        return None;
    }
    Some(match session.run(line) {
        Ok(out) => out.to_string(),
        Err(e) => format_error(line, &e),
    })
}

/// Non-interactive loop: one command per input line, each output followed by
/// a blank line.
pub fn run_script<R: BufRead, W: Write>(session: &mut Session, input: R, mut out: W) -> io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if is_exit(line.trim()) {
            break;
        }
        if let Some(text) = step(session, &line) {
            writeln!(out, "{text}\n")?;
        }
    }
    out.flush()
}

/// Line-edited loop with in-memory history. Ctrl-C discards the current
/// line, Ctrl-D leaves.
pub fn run_interactive(session: &mut Session) -> rustyline::Result<()> {
    let mut rl = DefaultEditor::new()?;
    loop {
        match rl.readline(PROMPT) {
            Ok(line) => {
                if is_exit(line.trim()) {
                    break;
                }
                if !line.trim().is_empty() {
                    let _ = rl.add_history_entry(line.as_str());
                }
                if let Some(text) = step(session, &line) {
                    println!("{text}\n");
                }
            }
            Err(ReadlineError::Interrupted) => continue,
            Err(ReadlineError::Eof) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(())
}
