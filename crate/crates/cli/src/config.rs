//! Key-value config files that preload command-line flags.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Command, CommandFactory, FromArgMatches};

use crate::{Cli, CliError};

/// One `key = value` entry.
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Parses `key = value` lines; `#` starts a comment, underscores in keys
/// read as dashes.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(format!("line {}: expected `key = value`, got {line:?}", i + 1));
        };
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            return Err(format!("line {}: empty key", i + 1));
        }
        out.push(Entry {
            line: i + 1,
            key,
            value: v.trim().to_string(),
        });
    }
    Ok(out)
}

fn long_names(cmd: &Command) -> Vec<(String, bool)> {
    cmd.get_arguments()
        .filter_map(|a| a.get_long().map(|l| (l.to_string(), a.get_action().takes_values())))
        .collect()
}

/// Turns config entries into flags for subcommand `sub`. Keys that only
/// belong to other subcommands are skipped; unknown keys are errors.
fn entries_to_args(entries: &[Entry], root: &Command, sub: &str, path: &Path) -> Result<Vec<OsString>, String> {
    let sub_cmd = root.find_subcommand(sub).expect("parsed subcommand exists");
    let mut own = long_names(root);
    own.extend(long_names(sub_cmd));
    let elsewhere: Vec<String> = root.get_subcommands().flat_map(long_names).map(|(l, _)| l).collect();
    let mut args = Vec::new();
    for e in entries {
        if e.key == "config" {
            return Err(format!("{}:{}: config files cannot include other config files", path.display(), e.line));
        }
        match own.iter().find(|(l, _)| *l == e.key) {
            Some((l, true)) => {
                args.push(format!("--{l}").into());
                args.push(e.value.clone().into());
            }
            Some((l, false)) => match e.value.as_str() {
                "true" | "yes" | "1" | "" => args.push(format!("--{l}").into()),
                "false" | "no" | "0" => {}
                v => return Err(format!("{}:{}: flag {l} takes true or false, got {v:?}", path.display(), e.line)),
            },
            None if elsewhere.contains(&e.key) => {}
            None => return Err(format!("{}:{}: unknown key {:?}", path.display(), e.line, e.key)),
        }
    }
    Ok(args)
}

fn parse_from(argv: &[OsString]) -> Result<Cli, CliError> {
    let matches = Cli::command().try_get_matches_from(argv).map_err(CliError::Usage)?;
    Cli::from_arg_matches(&matches).map_err(CliError::Usage)
}

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    argv.iter().enumerate().skip(1).find_map(|(i, a)| {
        let a = a.to_str()?;
        match a.strip_prefix("--config") {
            Some("") => argv.get(i + 1).map(PathBuf::from),
            Some(rest) => rest.strip_prefix('=').map(PathBuf::from),
            None => None,
        }
    })
}

/// Index and name of the subcommand token, skipping values of global options.
fn subcommand_at(argv: &[OsString], root: &Command) -> Option<(usize, String)> {
    let valued: Vec<String> = long_names(root).into_iter().filter(|(_, v)| *v).map(|(l, _)| format!("--{l}")).collect();
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].to_str()?;
        if valued.iter().any(|v| v == a) {
            i += 2;
            continue;
        }
        if let Some(sub) = root.get_subcommands().find(|c| c.get_name() == a) {
            return Some((i, sub.get_name().to_string()));
        }
        if !a.starts_with('-') {
            return None;
        }
        i += 1;
    }
    None
}

/// Parses `argv`, splicing flags from `--config` right after the
/// subcommand so that explicit flags win.
pub fn parse_args(argv: Vec<OsString>) -> Result<Cli, CliError> {
    let root = Cli::command();
    let (Some(path), Some((at, sub))) = (config_path(&argv), subcommand_at(&argv, &root)) else {
        return parse_from(&argv);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Validation(format!("cannot read config file {}: {e}", path.display())))?;
    let entries = parse_entries(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let explicit: Vec<&str> = argv.iter().filter_map(|a| a.to_str()?.strip_prefix("--")).map(|a| a.split('=').next().unwrap_or(a)).collect();
    let entries: Vec<Entry> = entries.into_iter().filter(|e| !explicit.contains(&e.key.as_str())).collect();
    let extra = entries_to_args(&entries, &root, &sub, &path).map_err(CliError::Validation)?;
    let mut spliced = argv[..=at].to_vec();
    spliced.extend(extra);
    spliced.extend_from_slice(&argv[at + 1..]);
    parse_from(&spliced)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_skip_comments_and_normalize_keys() {
        let e = parse_entries("# sweep\nsample_size = 767\n\n--eta=0.05 # noise\n").unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!((e[0].key.as_str(), e[0].value.as_str(), e[0].line), ("sample-size", "767", 2));
        assert_eq!((e[1].key.as_str(), e[1].value.as_str()), ("eta", "0.05"));
    }

    #[test]
    fn malformed_line_names_its_number() {
        let err = parse_entries("seats = 3\nlam 40\n").unwrap_err();
        assert!(err.starts_with("line 2"), "{err}");
    }

    #[test]
    fn keys_map_to_flags() {
        let root = Cli::command();
        let p = Path::new("c.conf");
        let e = parse_entries("seats = 3\ntrials = 9\n").unwrap();
        let args = entries_to_args(&e, &root, "tabulate", p).unwrap();
        assert_eq!(args, ["--seats", "3"]);
        let e = parse_entries("bogus = 1\n").unwrap();
        assert!(entries_to_args(&e, &root, "tabulate", p).unwrap_err().contains("bogus"));
    }

    #[test]
    fn finds_config_and_subcommand() {
        let argv: Vec<OsString> = ["stv-audit", "--out", "graph", "--config=a.conf", "graph", "x.blt"].map(Into::into).to_vec();
        assert_eq!(config_path(&argv), Some(PathBuf::from("a.conf")));
        assert_eq!(subcommand_at(&argv, &Cli::command()), Some((4, "graph".to_string())));
    }
}
