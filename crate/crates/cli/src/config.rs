//! Flat `key=value` config files. Keys are long flag names; entries are
//! injected right after the subcommand so that explicit flags override them.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected key=value, got '{line}'", no + 1);
        };
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            bail!("config line {}: empty key", no + 1);
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

/// Returns `args` with the entries of any `--config` file spliced in.
pub fn expand(args: Vec<OsString>, subcommands: &[&str]) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .with_context(|| format!("reading config file {}", Path::new(&path).display()))?;
    let injected: Vec<OsString> = parse(&text)?.into_iter().map(|(k, v)| format!("--{k}={v}").into()).collect();
    let at =
        args.iter().position(|a| subcommands.contains(&a.to_string_lossy().as_ref())).map_or(args.len(), |i| i + 1);
    let mut out = args[..at].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[at..]);
    Ok(out)
}

/// Every resolved option as `key=value`.
pub fn snapshot<T: Serialize>(parts: &[&T]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for p in parts {
        let serde_json::Value::Object(map) = serde_json::to_value(p)? else {
            bail!("config snapshot is not a map");
        };
        for (k, v) in map {
            let s = match v {
                serde_json::Value::Null => continue,
                serde_json::Value::String(s) => s,
                other => other.to_string(),
            };
            out.push((k, s));
        }
    }
    Ok(out)
}

pub fn render(entries: &std::collections::BTreeMap<String, String>) -> String {
    entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_underscores() {
        let kv = parse("# c\nseed = 7\n\nfast_path=false\n--msc=24\n").unwrap();
        assert_eq!(
            kv,
            vec![("seed".into(), "7".into()), ("fast-path".into(), "false".into()), ("msc".into(), "24".into())]
        );
        assert!(parse("novalue\n").is_err());
    }

    #[test]
    fn injects_after_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.cfg");
        std::fs::write(&p, "msc=24\n").unwrap();
        let args: Vec<OsString> =
            ["ambc", "--config", p.to_str().unwrap(), "theory", "--msc", "8"].iter().map(Into::into).collect();
        let out = expand(args, &["theory"]).unwrap();
        let s: Vec<String> = out.iter().map(|a| a.to_string_lossy().into_owned()).collect();
        assert_eq!(s[3..], ["theory", "--msc=24", "--msc", "8"]);
    }
}
