//! Configuration files and their merge with command-line flags.
//!
//! A configuration file is TOML with flat `key = value` pairs. Keys use the
//! flag names (`u-min` or `u_min`). Top-level keys apply to every command that
//! knows them and are ignored by the others; keys inside a table named after
//! the command override the top level and must all be known. A flag given on
//! the command line always wins.

use std::path::Path;

use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use woundwave::Params;

use crate::CliError;

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    table: toml::Table,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| CliError::Invalid(format!("config {}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| e.message().to_string())?;
        Ok(Self { table })
    }

    /// Entries for `section` as JSON, with a flag telling whether unknown
    /// keys are an error (section tables) or skipped (top level).
    fn entries(&self, section: &str) -> Result<Vec<(String, Value, bool)>, CliError> {
        let convert =
            |v: &toml::Value| serde_json::to_value(v).map_err(|e| CliError::Invalid(format!("config value: {e}")));
        let mut out = Vec::new();
        for (k, v) in &self.table {
            if !v.is_table() {
                out.push((k.replace('_', "-"), convert(v)?, false));
            }
        }
        match self.table.get(section) {
            Some(toml::Value::Table(t)) => {
                for (k, v) in t {
                    out.push((k.replace('_', "-"), convert(v)?, true));
                }
            }
            Some(_) => return Err(CliError::Invalid(format!("config key [{section}] must be a table"))),
            None => {}
        }
        Ok(out)
    }
}

/// Fills every option left unset on the command line from `file`.
pub fn merge<A: Serialize + DeserializeOwned>(
    args: &A,
    file: Option<&ConfigFile>,
    section: &str,
) -> Result<A, CliError> {
    let Some(file) = file else {
        return deserialize(to_object(args)?);
    };
    let mut obj = to_object(args)?;
    let flags: Vec<String> = obj
        .iter()
        .filter(|(_, v)| !v.is_null())
        .map(|(k, _)| k.clone())
        .collect();
    for (key, value, strict) in file.entries(section)? {
        if !obj.contains_key(&key) {
            if strict {
                return Err(CliError::Invalid(format!(
                    "unknown key `{key}` in config table [{section}]"
                )));
            }
            continue;
        }
        if !flags.contains(&key) {
            obj.insert(key, value);
        }
    }
    deserialize(obj)
}

fn to_object<A: Serialize>(args: &A) -> Result<Map<String, Value>, CliError> {
    match serde_json::to_value(args) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(CliError::Invalid("arguments do not form a table".into())),
        Err(e) => Err(CliError::Invalid(e.to_string())),
    }
}

fn deserialize<A: DeserializeOwned>(obj: Map<String, Value>) -> Result<A, CliError> {
    serde_json::from_value(Value::Object(obj)).map_err(|e| CliError::Invalid(format!("config: {e}")))
}

/// Resolved value of an optional setting.
pub fn required<T: Copy>(v: Option<T>, name: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Invalid(format!("missing --{name} (flag or config key `{name}`)")))
}

/// The model parameters shared by most commands.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ParamArgs {
    /// Growth-rate ratio alpha > 0.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Healed-state parameter beta > 1.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Wavespeed c > 0.
    #[arg(long)]
    pub c: Option<f64>,
}

impl ParamArgs {
    pub fn params(&self) -> Result<Params, CliError> {
        Params::new(
            required(self.alpha, "alpha")?,
            required(self.beta, "beta")?,
            required(self.c, "c")?,
        )
        .map_err(|e| CliError::Invalid(e.to_string()))
    }
}
