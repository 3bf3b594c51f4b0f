//! Config-file defaults: values from the TOML file are appended as flags
//! for every option the command line did not set, then argv is reparsed.

use std::ffi::OsString;
use std::path::Path;

use clap::parser::ValueSource;
use clap::ArgMatches;

use crate::CliError;

fn flag_name(key: &str) -> String {
    format!("--{}", key.replace('_', "-"))
}

fn given(m: &ArgMatches, key: &str) -> bool {
    let id = key.replace('-', "_");
    m.ids().any(|i| i.as_str() == id) && m.value_source(&id) == Some(ValueSource::CommandLine)
}

fn render(value: &toml::Value) -> Result<Option<String>, String> {
    Ok(Some(match value {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(_) => return Ok(None),
        toml::Value::Array(items) => items
            .iter()
            .map(|v| match render(v)? {
                Some(s) => Ok(s),
                None => Err("arrays of booleans are not supported".to_string()),
            })
            .collect::<Result<Vec<_>, _>>()?
            .join(","),
        other => return Err(format!("unsupported value {other}")),
    }))
}

fn push(args: &mut Vec<OsString>, m: &ArgMatches, key: &str, value: &toml::Value) -> Result<(), CliError> {
    if given(m, key) {
        return Ok(());
    }
    match (value, render(value).map_err(|e| CliError::Usage(format!("config key '{key}': {e}")))?) {
        (toml::Value::Boolean(true), _) => args.push(flag_name(key).into()),
        (toml::Value::Boolean(false), _) => {}
        (_, Some(v)) => {
            args.push(flag_name(key).into());
            args.push(v.into());
        }
        (_, None) => {}
    }
    Ok(())
}

/// Returns `argv` extended with the config file's defaults.
pub fn merge(argv: &[OsString], matches: &ArgMatches, path: &Path) -> Result<Vec<OsString>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime("io", format!("{}: {e}", path.display())))?;
    let table: toml::Table =
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;

    // Deepest subcommand: `eval gap` reads [eval.gap], others [<name>].
    let mut chain = Vec::new();
    let mut m = matches;
    while let Some((name, sub)) = m.subcommand() {
        chain.push(name.to_string());
        m = sub;
    }
    let leaf = m;

    let mut args = argv.to_vec();
    for (key, value) in &table {
        if key == "config" {
            return Err(CliError::Usage("config files cannot include other config files".into()));
        }
        if !value.is_table() {
            push(&mut args, leaf, key, value)?;
        }
    }
    let mut section = Some(&table);
    for name in &chain {
        section = section.and_then(|t| t.get(name)).and_then(|v| v.as_table());
    }
    if let Some(section) = section {
        for (key, value) in section {
            if !value.is_table() {
                push(&mut args, leaf, key, value)?;
            }
        }
    }
    Ok(args)
}
