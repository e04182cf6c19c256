//! TOML config files. Keys are the long flag names (`_` and `-` both
//! accepted); a table named after the subcommand overrides top-level keys.
//! Flags given on the command line always win.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::Path;

use clap::parser::ValueSource;
use clap::{ArgAction, ArgMatches, Command};
use serde_json::{Map, Value};

use crate::Failure;

fn scalar(key: &str, v: &toml::Value) -> Result<String, Failure> {
    Ok(match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        toml::Value::Array(items) => items.iter().map(|x| scalar(key, x)).collect::<Result<Vec<_>, _>>()?.join(","),
        _ => return Err(Failure::Input(format!("config key '{key}' must be a string, number, boolean or array"))),
    })
}

pub fn load(path: &Path) -> Result<toml::Table, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read config {}: {e}", path.display())))?;
    text.parse::<toml::Table>().map_err(|e| Failure::Input(format!("config {}: {e}", path.display())))
}

fn from_command_line(m: &ArgMatches, id: &str) -> bool {
    m.ids().any(|i| i.as_str() == id) && matches!(m.value_source(id), Some(ValueSource::CommandLine))
}

/// Appends config values for every flag not given on the command line.
pub fn merge(
    cmd: &Command,
    top: &ArgMatches,
    raw: Vec<OsString>,
    table: &toml::Table,
) -> Result<Vec<OsString>, Failure> {
    let Some((name, sub_m)) = top.subcommand() else {
        return Ok(raw);
    };
    let sub = cmd.find_subcommand(name).expect("parsed subcommand exists");

    let mut entries: BTreeMap<String, &toml::Value> = BTreeMap::new();
    for (k, v) in table {
        if !v.is_table() {
            entries.insert(k.replace('_', "-"), v);
        }
    }
    if let Some(toml::Value::Table(section)) = table.get(name) {
        for (k, v) in section {
            entries.insert(k.replace('_', "-"), v);
        }
    }

    let mut out = raw;
    let mut positional = Vec::new();
    for (key, v) in entries {
        if key == "config" {
            return Err(Failure::Input("config files cannot name another config".into()));
        }
        let arg = sub
            .get_arguments()
            .chain(cmd.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()) || (a.is_positional() && a.get_id() == key.as_str()))
            .ok_or_else(|| Failure::Input(format!("unknown config key '{key}' for '{name}'")))?;
        let id = arg.get_id().as_str();
        if from_command_line(top, id) || from_command_line(sub_m, id) {
            continue;
        }
        if arg.is_positional() {
            positional.push(OsString::from(scalar(&key, v)?));
            continue;
        }
        let flag = OsString::from(format!("--{key}"));
        match arg.get_action() {
            ArgAction::SetTrue => match v {
                toml::Value::Boolean(true) => out.push(flag),
                toml::Value::Boolean(false) => {}
                _ => return Err(Failure::Input(format!("config key '{key}' must be a boolean"))),
            },
            _ => {
                let mut s = flag;
                s.push("=");
                s.push(scalar(&key, v)?);
                out.push(s);
            }
        }
    }
    out.extend(positional);
    Ok(out)
}

/// Resolved inputs as a TOML config accepted by `merge`.
pub fn emit(inputs: &Map<String, Value>) -> String {
    let mut t = toml::Table::new();
    for (k, v) in inputs {
        let tv = match v {
            Value::String(s) => toml::Value::String(s.clone()),
            Value::Bool(b) => toml::Value::Boolean(*b),
            Value::Number(n) => match n.as_i64() {
                Some(i) => toml::Value::Integer(i),
                None => toml::Value::Float(n.as_f64().expect("finite")),
            },
            _ => continue,
        };
        t.insert(k.clone(), tv);
    }
    toml::to_string(&t).expect("flat table serializes")
}
