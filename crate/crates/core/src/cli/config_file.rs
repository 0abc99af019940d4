use std::ffi::OsString;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Parses flat `key = value` text. Blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::MalformedLine { line: i + 1, message: "expected key=value".into() })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::MalformedLine { line: i + 1, message: "empty key".into() });
        }
        entries.push((key.replace('_', "-"), value.trim().to_string()));
    }
    Ok(entries)
}

/// Flag tokens for config entries. `key=true` becomes a bare switch and
/// `key=false` is dropped.
fn entries_to_flags(entries: &[(String, String)]) -> Vec<OsString> {
    let mut out = Vec::new();
    for (key, value) in entries {
        match value.as_str() {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                out.push(format!("--{key}").into());
                out.push(value.into());
            }
        }
    }
    out
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut iter = args.iter();
    while let Some(a) = iter.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return iter.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

/// Splices values from the `--config` file in right after the subcommand so
/// flags given on the command line, which come later, take precedence.
pub fn merge_config_file(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let flags = entries_to_flags(&parse_config_text(&text)?);
    let Some(sub) = args.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')) else {
        return Ok(args);
    };
    let at = sub + 2;
    let mut merged = args[..at].to_vec();
    merged.extend(flags);
    merged.extend_from_slice(&args[at..]);
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_maps_keys() {
        let entries = parse_config_text("# comment\nunits = 64\n\nembed_dim=32\ntiming=true\nquiet=false\n").unwrap();
        assert_eq!(entries[0], ("units".to_string(), "64".to_string()));
        assert_eq!(entries[1].0, "embed-dim");
        let flags: Vec<String> = entries_to_flags(&entries).into_iter().map(|s| s.into_string().unwrap()).collect();
        assert_eq!(flags, ["--units", "64", "--embed-dim", "32", "--timing"]);
    }

    #[test]
    fn rejects_lines_without_equals() {
        let err = parse_config_text("units 64\n").unwrap_err();
        assert!(err.to_string().contains("line 1"));
    }

    #[test]
    fn file_values_come_before_cli_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(&cfg, "epochs=5\n").unwrap();
        let args: Vec<OsString> = ["attnmt", "train", "--config", cfg.to_str().unwrap(), "--epochs", "7"]
            .iter()
            .map(OsString::from)
            .collect();
        let merged: Vec<String> =
            merge_config_file(args).unwrap().into_iter().map(|s| s.into_string().unwrap()).collect();
        assert_eq!(merged[..4], ["attnmt", "train", "--epochs", "5"]);
        assert_eq!(merged[merged.len() - 2..], ["--epochs", "7"]);
    }
}
