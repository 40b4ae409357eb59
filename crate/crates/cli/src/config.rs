//! Config files.
//!
//! A config file is TOML. Top-level `seed` sets the global seed; each table
//! is named after a subcommand (`[explain]`, `[eval]`, `["ontology validate"]`)
//! and holds that subcommand's long flag names as keys, with `_` and `-`
//! interchangeable:
//!
//! ```toml
//! seed = 7
//!
//! [explain]
//! ontology = "builtin:drug_abuse"
//! samples = 2000
//! lime-mode = true
//! ```
//!
//! Config values are spliced into the argument list ahead of the user's
//! own flags, so anything given on the command line wins.

use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Command};
use toml::Value;

fn scalar(key: &str, v: &Value) -> Result<String> {
    Ok(match v {
        Value::String(s) => s.clone(),
        Value::Integer(i) => i.to_string(),
        Value::Float(f) => f.to_string(),
        Value::Boolean(b) => b.to_string(),
        _ => bail!("config key {key:?}: expected a scalar, got {v}"),
    })
}

/// Flags for `cmd` taken from `table`.
fn table_args(cmd: &Command, table: &toml::Table, section: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (raw, value) in table {
        let key = raw.replace('_', "-");
        let arg = cmd
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
            .with_context(|| format!("config [{section}]: unknown key {raw:?}"))?;
        let flag = format!("--{key}");
        match arg.get_action() {
            ArgAction::SetTrue => match value {
                Value::Boolean(true) => out.push(flag),
                Value::Boolean(false) => {}
                _ => bail!("config [{section}] {raw}: expected true or false"),
            },
            ArgAction::Append => {
                let items = match value {
                    Value::Array(items) => items.clone(),
                    v => vec![v.clone()],
                };
                for item in &items {
                    out.push(flag.clone());
                    out.push(scalar(raw, item)?);
                }
            }
            _ => {
                let text = match value {
                    Value::Array(items) => items
                        .iter()
                        .map(|i| scalar(raw, i))
                        .collect::<Result<Vec<_>>>()?
                        .join(","),
                    v => scalar(raw, v)?,
                };
                out.push(format!("{flag}={text}"));
            }
        }
    }
    Ok(out)
}

/// Rewrites `argv` so that values from the config file at `path` precede
/// the user's flags for the chosen subcommand path.
pub fn splice(root: &Command, argv: &[String], path: &Path, subcommands: &[String]) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let doc: toml::Table = text.parse().with_context(|| format!("parsing config {}", path.display()))?;

    let section = subcommands.join(" ");
    let mut global = Vec::new();
    let mut local = Vec::new();
    for (key, value) in &doc {
        match (key.as_str(), value) {
            ("seed", v) => global.push(format!("--seed={}", scalar(key, v)?)),
            (name, Value::Table(t)) => {
                let mut cmd = Some(root);
                for part in name.split(' ') {
                    cmd = cmd.and_then(|c| c.find_subcommand(part));
                }
                let cmd = cmd.with_context(|| format!("config: unknown section [{name}]"))?;
                if *name == section {
                    local = table_args(cmd, t, name)?;
                } else {
                    // Validate sections for other subcommands too.
                    table_args(cmd, t, name)?;
                }
            }
            (name, _) => bail!("config: unknown top-level key {name:?}"),
        }
    }

    let mut out = vec![argv[0].clone()];
    out.extend(global);
    let mut rest = argv[1..].iter();
    let mut pending = subcommands.iter().peekable();
    for a in rest.by_ref() {
        out.push(a.clone());
        if pending.peek() == Some(&a) {
            pending.next();
            if pending.peek().is_none() {
                break;
            }
        }
    }
    out.extend(local);
    out.extend(rest.cloned());
    Ok(out)
}
