//! Optional TOML config files. Keys are the long flag names without the
//! leading dashes. Precedence is flags, then the `[<command>]` table, then
//! top-level keys, then built-in defaults.

use std::path::Path;

use crate::args::{all_keys, Layered};
use crate::error::{CliError, Result};

const COMMANDS: [&str; 5] = ["pairs", "embed", "diagnose", "eval", "bench"];

fn snake(key: &str) -> String {
    key.replace('-', "_")
}

/// Options for `command` from `path`; all-`None` when there is no file.
pub fn load<T: Layered + Default>(path: Option<&Path>, command: &str) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text, command).map_err(|message| CliError::Config {
        path: path.to_path_buf(),
        message,
    })
}

pub fn parse<T: Layered>(text: &str, command: &str) -> std::result::Result<T, String> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| e.message().to_string())?;
    let mut merged = toml::Table::new();
    let mut section = None;
    for (key, value) in table {
        if COMMANDS.contains(&key.as_str()) {
            if !value.is_table() {
                return Err(format!("[{key}] must be a table"));
            }
            if key == command {
                section = Some(value);
            }
            continue;
        }
        let name = snake(&key);
        if T::KEYS.contains(&name.as_str()) {
            merged.insert(key, value);
        } else if !all_keys().any(|k| k == name) {
            return Err(format!("unknown key {key:?}"));
        }
    }
    if let Some(toml::Value::Table(overrides)) = section {
        for (key, value) in overrides {
            merged.insert(key, value);
        }
    }
    toml::Value::Table(merged)
        .try_into()
        .map_err(|e: toml::de::Error| e.message().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::args::{EmbedOptions, EvalOptions};
    use fuse_core::GradientMode;

    #[test]
    fn section_overrides_top_level() {
        let text = "k = 8\nseed = 1\nepochs = 5\n[embed]\nk = 32\ngradient-mode = \"exact\"\n";
        let embed: EmbedOptions = parse(text, "embed").unwrap();
        assert_eq!(embed.k, Some(32));
        assert_eq!(embed.seed, Some(1));
        assert_eq!(embed.gradient_mode, Some(GradientMode::Exact));
        let eval: EvalOptions = parse(text, "eval").unwrap();
        assert_eq!(eval.epochs, Some(5));
        assert_eq!(eval.seed, Some(1));
    }

    #[test]
    fn flags_win_over_file() {
        let file: EmbedOptions = parse("k = 8\nseed = 3\n", "embed").unwrap();
        let flags = EmbedOptions {
            k: Some(64),
            ..Default::default()
        };
        let merged = flags.overlay(file);
        assert_eq!(merged.k, Some(64));
        assert_eq!(merged.seed, Some(3));
    }

    #[test]
    fn rejects_typos_and_wrong_types() {
        assert!(parse::<EmbedOptions>("lamda-scaled = 1.0\n", "embed")
            .unwrap_err()
            .contains("lamda-scaled"));
        assert!(parse::<EmbedOptions>("[embed]\nepochs = 3\n", "embed").is_err());
        assert!(parse::<EmbedOptions>("k = \"wide\"\n", "embed").is_err());
    }

    #[test]
    fn keys_mirror_flag_names() {
        let embed: EmbedOptions = parse("eta-scaled = 2.0\nlambda-scaled = 0\n", "embed").unwrap();
        assert_eq!(embed.eta_scaled, Some(2.0));
        assert_eq!(embed.lambda_scaled, Some(0.0));
    }
}
