//! Flat key-value config files. Each key names a flag of the subcommand
//! being run (`queue_pkts` or `queue-pkts` for `--queue-pkts`); flags given
//! on the command line win.

use std::ffi::OsString;
use std::path::Path;

use clap::Command;

use crate::error::{CliError, Context, Result};

/// Long flag names accepted by the subcommand selected in `argv`.
fn subcommand_flags(root: &Command, argv: &[OsString]) -> Vec<String> {
    let mut cmd = root;
    for arg in argv.iter().skip(1) {
        let Some(arg) = arg.to_str() else { continue };
        if let Some(sub) = cmd.find_subcommand(arg) {
            cmd = sub;
        }
    }
    cmd.get_arguments()
        .filter_map(|a| a.get_long().map(str::to_string))
        .collect()
}

fn given_on_command_line(argv: &[OsString], flag: &str) -> bool {
    let long = format!("--{flag}");
    let with_value = format!("--{flag}=");
    argv.iter()
        .filter_map(|a| a.to_str())
        .any(|a| a == long || a.starts_with(&with_value))
}

fn scalar(key: &str, v: &toml::Value) -> Result<String> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        _ => Err(CliError::invalid(format!("config key `{key}` must be a scalar or a list of scalars"))),
    }
}

/// Appends `--flag value` pairs for every config key the command line did
/// not already set. Keys the selected subcommand does not know are ignored.
pub fn inject(root: &Command, argv: Vec<OsString>, config: &Path) -> Result<Vec<OsString>> {
    let text = std::fs::read_to_string(config).context(format!("reading config {}", config.display()))?;
    let table: toml::Table = toml::from_str(&text).context(format!("parsing config {}", config.display()))?;
    let flags = subcommand_flags(root, &argv);
    let mut extra = Vec::new();
    for (key, value) in &table {
        let flag = key.replace('_', "-");
        if !flags.contains(&flag) {
            log::debug!("config key `{key}` does not apply to this subcommand");
            continue;
        }
        if given_on_command_line(&argv, &flag) {
            continue;
        }
        match value {
            toml::Value::Boolean(true) => extra.push(format!("--{flag}")),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                for item in items {
                    extra.push(format!("--{flag}={}", scalar(key, item)?));
                }
            }
            v => extra.push(format!("--{flag}={}", scalar(key, v)?)),
        }
    }
    let mut out = argv;
    out.extend(extra.into_iter().map(OsString::from));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::{Arg, ArgAction};

    fn cmd() -> Command {
        Command::new("t").subcommand(
            Command::new("sim")
                .arg(Arg::new("rate").long("rate-bps"))
                .arg(Arg::new("aqm").long("aqm"))
                .arg(Arg::new("up").long("shape-uplink").action(ArgAction::SetTrue))
                .arg(Arg::new("lat").long("latency-ms").action(ArgAction::Append)),
        )
    }

    fn args(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn command_line_wins_and_unknown_keys_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(
            &path,
            "rate_bps = 4e6\naqm = \"codel\"\nshape_uplink = true\nlatency_ms = [10, 100]\nunrelated = 1\n",
        )
        .unwrap();
        let out = inject(&cmd(), args(&["t", "sim", "--aqm", "pfifo"]), &path).unwrap();
        let out: Vec<&str> = out.iter().map(|s| s.to_str().unwrap()).collect();
        assert_eq!(
            out,
            ["t", "sim", "--aqm", "pfifo", "--latency-ms=10", "--latency-ms=100", "--rate-bps=4000000", "--shape-uplink"]
        );
    }

    #[test]
    fn nested_tables_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "[aqm]\nx = 1\n").unwrap();
        assert!(inject(&cmd(), args(&["t", "sim"]), &path).is_err());
    }
}
