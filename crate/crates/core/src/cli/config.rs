//! Flat `key = value` config files merged into the argument list.
//!
//! File entries become `--key value` arguments placed directly after the
//! subcommand, ahead of the flags given on the command line, so that with
//! overriding enabled the command line wins.

use std::fs;

/// Config-file error: unreadable file or malformed line.
#[derive(Debug)]
pub struct ConfigError(pub String);

pub fn parse(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("line {}: expected key = value", no + 1)))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(ConfigError(format!("line {}: empty key", no + 1)));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

/// Removes `--config <file>` from `args` and splices the file's entries in.
pub fn merge(args: Vec<String>, subcommands: &[&str]) -> Result<Vec<String>, ConfigError> {
    let mut rest = Vec::with_capacity(args.len());
    let mut path = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(it.next().ok_or_else(|| ConfigError("--config needs a file".into()))?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = fs::read_to_string(&path).map_err(|e| ConfigError(format!("cannot read {path}: {e}")))?;
    let entries = parse(&text)?;

    let mut command = None;
    let mut injected = Vec::new();
    for (k, v) in entries {
        match (k.as_str(), v.as_str()) {
            ("command", _) => command = Some(v),
            (_, "true") => injected.push(format!("--{k}")),
            (_, "false") => {}
            _ => {
                injected.push(format!("--{k}"));
                injected.push(v);
            }
        }
    }

    let pos = rest.iter().position(|a| subcommands.contains(&a.as_str()));
    let at = match (pos, command) {
        (Some(p), _) => p + 1,
        (None, Some(c)) => {
            if !subcommands.contains(&c.as_str()) {
                return Err(ConfigError(format!("unknown command {c} in config")));
            }
            // global flags are accepted after the subcommand too
            rest.insert(1.min(rest.len()), c);
            2.min(rest.len())
        }
        (None, None) => return Err(ConfigError("no command given on the command line or in the config".into())),
    };
    rest.splice(at..at, injected);
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn parses_comments_and_underscores() {
        let e = parse("# c\nseed = 3\nsample_count=10 # trailing\n\n").unwrap();
        assert_eq!(e, vec![("seed".into(), "3".into()), ("sample-count".into(), "10".into())]);
        assert!(parse("novalue").is_err());
    }

    #[test]
    fn file_entries_precede_command_line_flags() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.cfg");
        fs::write(&p, "seed = 1\nsamples = 5\n").unwrap();
        let args = s(&["prog", "--threads", "2", "validate", "--config", p.to_str().unwrap(), "--seed", "9"]);
        let out = merge(args, &["validate"]).unwrap();
        assert_eq!(out, s(&["prog", "--threads", "2", "validate", "--seed", "1", "--samples", "5", "--seed", "9"]));
    }

    #[test]
    fn command_may_come_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.cfg");
        fs::write(&p, "command = validate\nseed = 4\n").unwrap();
        let out = merge(s(&["prog", "--threads", "2", "--config", p.to_str().unwrap()]), &["validate"]).unwrap();
        assert_eq!(out, s(&["prog", "validate", "--seed", "4", "--threads", "2"]));
    }
}
