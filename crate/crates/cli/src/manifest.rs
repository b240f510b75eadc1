//! Run manifests: what a command read, wrote and printed, with content
//! digests so a replay can be checked byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::commands::{dispatch, write_atomic};
use crate::{Cli, Command, Failure, Run, EXIT_OK, EXIT_USAGE};

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub subcommand: String,
    pub argv: Vec<String>,
    /// Working directory the paths are relative to.
    pub cwd: PathBuf,
    pub inputs: Vec<PathBuf>,
    /// Output path to SHA-256 of its contents.
    pub outputs: BTreeMap<PathBuf, String>,
    pub stdout_sha256: String,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    pub exit_status: u8,
}

fn sha256(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn digests(paths: &[PathBuf]) -> Result<BTreeMap<PathBuf, String>, Failure> {
    paths
        .iter()
        .map(|p| Ok((p.clone(), sha256(&fs::read(p)?))))
        .collect()
}

fn params(command: &Command) -> serde_json::Value {
    match serde_json::to_value(command) {
        Ok(serde_json::Value::Object(map)) => {
            map.into_iter().next().map(|(_, v)| v).unwrap_or_default()
        }
        _ => serde_json::Value::Null,
    }
}

pub fn record(path: &Path, cli: &Cli, argv: &[String], run: &Run, code: u8) -> Result<(), Failure> {
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        subcommand: cli.command.name().to_owned(),
        argv: argv.to_vec(),
        cwd: std::env::current_dir()?,
        inputs: run.inputs.clone(),
        outputs: digests(&run.outputs)?,
        stdout_sha256: sha256(&run.stdout),
        params: params(&cli.command),
        seed: run.seed,
        exit_status: code,
    };
    let json =
        serde_json::to_string_pretty(&manifest).map_err(|e| Failure::usage(e.to_string()))?;
    write_atomic(path, |w| Ok(writeln!(w, "{json}")?))
}

/// Re-runs the manifest's command from its working directory and compares
/// exit status, stdout and every output file.
pub fn replay(path: &Path, run: &mut Run) -> Result<u8, Failure> {
    let text = fs::read_to_string(path)?;
    run.inputs.push(path.to_owned());
    let m: RunManifest = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let cli = Cli::try_parse_from(&m.argv)
        .map_err(|e| Failure::usage(format!("recorded command no longer parses: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(Failure::usage("refusing to replay a replay"));
    }
    std::env::set_current_dir(&m.cwd)?;

    let mut again = Run::default();
    let code = match dispatch(&cli.command, &mut again) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("replayed command failed: {}", f.message);
            f.code
        }
    };
    run.stdout.extend_from_slice(&again.stdout);
    run.seed = again.seed;

    let mut mismatches = Vec::new();
    if code != m.exit_status {
        mismatches.push(format!("exit status {code}, recorded {}", m.exit_status));
    }
    if sha256(&again.stdout) != m.stdout_sha256 {
        mismatches.push("stdout differs".to_owned());
    }
    let now = digests(&again.outputs)?;
    for (p, digest) in &m.outputs {
        match now.get(p) {
            Some(d) if d == digest => {}
            Some(_) => mismatches.push(format!("{} differs", p.display())),
            None => mismatches.push(format!("{} was not written", p.display())),
        }
    }
    if mismatches.is_empty() {
        eprintln!("replay: {} output(s) identical", m.outputs.len());
        Ok(EXIT_OK)
    } else {
        Err(Failure {
            code: EXIT_USAGE,
            message: format!("replay differs: {}", mismatches.join("; ")),
        })
    }
}
