//! `key=value` config files.
//!
//! Each line becomes `--key value` inserted right after the subcommand name,
//! ahead of the user's own flags. Clap is set to let later occurrences win,
//! so a flag on the command line beats the file, which beats the default.
//! `key=true` turns into a bare `--key`; `key=false` is dropped.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

pub fn expand_config(raw: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut args = Vec::with_capacity(raw.len());
    let mut config = None;
    let mut iter = raw.into_iter();
    while let Some(arg) = iter.next() {
        let text = arg.to_string_lossy();
        if text == "--config" {
            let path = iter.next().context("--config needs a file path")?;
            config = Some(path);
        } else if let Some(path) = text.strip_prefix("--config=") {
            config = Some(OsString::from(path));
        } else {
            args.push(arg);
        }
    }
    let Some(path) = config else {
        return Ok(args);
    };
    let extra = read_config(Path::new(&path))?;
    // First non-flag argument after the program name is the subcommand.
    let Some(sub) = args
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
    else {
        return Ok(args);
    };
    let at = sub + 2;
    args.splice(at..at, extra);
    Ok(args)
}

fn read_config(path: &Path) -> Result<Vec<OsString>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in config file {}", path.display()))
}

pub fn parse_config(text: &str) -> Result<Vec<OsString>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected key=value, got {line:?}", n + 1);
        };
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            bail!("line {}: empty key", n + 1);
        }
        let flag = OsString::from(format!("--{key}"));
        match value.trim() {
            "true" => out.push(flag),
            "false" => {}
            v => {
                out.push(flag);
                out.push(OsString::from(v));
            }
        }
    }
    Ok(out)
}
