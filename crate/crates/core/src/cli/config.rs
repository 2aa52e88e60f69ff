//! `key = value` config files, spliced into the argument list ahead of the
//! command-line flags so that flags win.

use std::ffi::OsString;
use std::fs;

use crate::error::{Error, Result};

/// Parses config text into flag tokens: `key = v` becomes `--key v`,
/// `key = true` becomes `--key`, and `key = false` is dropped. Blank lines
/// and lines starting with `#` are skipped; underscores in keys become dashes.
pub fn config_tokens(text: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("config line {}: expected key=value, got {line:?}", lineno + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(Error::Format(format!("config line {}: invalid key {key:?}", lineno + 1)));
        }
        match value {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            v => {
                out.push(format!("--{key}"));
                out.push(v.to_string());
            }
        }
    }
    Ok(out)
}

/// Expands a `--config FILE` (or `--config=FILE`) found after the subcommand.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut path = None;
    for (i, a) in args.iter().enumerate().skip(2) {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = args.get(i + 1).cloned();
            if path.is_none() {
                return Err(Error::InvalidParameter("--config needs a file".into()));
            }
            break;
        }
        if let Some(p) = s.strip_prefix("--config=") {
            path = Some(OsString::from(p));
            break;
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = fs::read_to_string(&path)
        .map_err(|e| Error::InvalidParameter(format!("cannot read config {}: {e}", path.to_string_lossy())))?;
    let tokens = config_tokens(&text)?;
    let mut out: Vec<OsString> = args[..2].to_vec();
    out.extend(tokens.into_iter().map(OsString::from));
    out.extend(args[2..].iter().cloned());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens() {
        let t = config_tokens("# sweep\nbeta = 2\n\nn_list=64,128\nplot = true\ndealias=false\n").unwrap();
        assert_eq!(t, ["--beta", "2", "--n-list", "64,128", "--plot"]);
        assert!(config_tokens("beta 2").is_err());
        assert!(config_tokens("config = x").is_err());
    }

    #[test]
    fn flags_follow_config() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.cfg");
        fs::write(&p, "beta = 3\n").unwrap();
        let args: Vec<OsString> = ["blab", "blocks", "--config", p.to_str().unwrap(), "--beta", "5"]
            .iter()
            .map(OsString::from)
            .collect();
        let e = expand(args).unwrap();
        let s: Vec<String> = e.iter().map(|a| a.to_string_lossy().into_owned()).collect();
        assert_eq!(&s[..4], ["blab", "blocks", "--beta", "3"]);
        assert_eq!(s.last().unwrap(), "5");
    }
}
