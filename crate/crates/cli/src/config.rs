//! Flat `key=value` config files.
//!
//! Each key names a long option of the chosen subcommand (or a global
//! option). Values are spliced into the argument list unless the option was
//! already given on the command line, so explicit flags win over the file and
//! the file wins over environment fallbacks and built-in defaults.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::{Arg, Command};

pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected key=value, got {line:?}", n + 1);
        };
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            bail!("line {}: empty key", n + 1);
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

fn find_long<'a>(cmd: &'a Command, key: &str) -> Option<&'a Arg> {
    cmd.get_arguments().find(|a| a.get_long() == Some(key))
}

fn given(args: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    let prefix = format!("--{key}=");
    args.iter().any(|a| {
        a.to_str()
            .is_some_and(|s| s == flag || s.starts_with(&prefix))
    })
}

/// Returns `args` extended with the config entries that were not given
/// explicitly. `config` and `threads` are handled by the caller.
pub fn apply(root: &Command, args: Vec<OsString>, path: &Path) -> Result<Vec<OsString>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let entries = parse(&text).with_context(|| format!("in {}", path.display()))?;

    let sub_name = args
        .iter()
        .skip(1)
        .filter_map(|a| a.to_str())
        .find(|a| root.find_subcommand(a).is_some())
        .map(str::to_string);
    let sub = sub_name.as_deref().and_then(|n| root.find_subcommand(n));

    let mut out = args.clone();
    for (key, value) in entries {
        let arg = sub
            .and_then(|s| find_long(s, &key))
            .or_else(|| find_long(root, &key));
        let Some(arg) = arg else {
            bail!(
                "{}: unknown option {key:?} for {}",
                path.display(),
                sub_name.as_deref().unwrap_or("this command")
            );
        };
        if key == "config" || given(&args, &key) {
            continue;
        }
        if arg.get_action().takes_values() {
            out.push(format!("--{key}").into());
            out.push(value.into());
        } else {
            match value.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" => out.push(format!("--{key}").into()),
                "false" | "no" | "0" => {}
                _ => bail!(
                    "{}: {key} expects true or false, got {value:?}",
                    path.display()
                ),
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_underscores() {
        let e = parse("# defaults\nk = 8\n\nk_list=2,4\n").unwrap();
        assert_eq!(
            e,
            vec![("k".into(), "8".into()), ("k-list".into(), "2,4".into())]
        );
        assert!(parse("novalue\n").is_err());
    }
}
