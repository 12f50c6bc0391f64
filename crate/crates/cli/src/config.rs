//! Key-value configuration file.
//!
//! Lines are `key = value`; `#` starts a comment. Recognized keys (defaults
//! in parentheses):
//!
//! ```text
//! frame_dur         = 0.96       # frame length, seconds
//! fill_fraction     = 0.5        # frame-fill positive threshold
//! duration_fraction = 0.5        # share of total label duration threshold
//! clamp_epsilon     = 1e-6       # AUC clamp before the probit
//! pooling           = balanced   # balanced | pooled
//! music_id          = /m/04rlf   # subtree root for --collapse-music
//! ```

use std::path::Path;

use framelab::framing::FramingParams;
use framelab::metrics::EvalParams;
use framelab::time::parse_seconds;
use framelab::Mid;

use crate::errors::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub framing: FramingParams,
    pub eval: EvalParams,
    pub music_id: Mid,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            framing: FramingParams::default(),
            eval: EvalParams::default(),
            music_id: Mid::from("/m/04rlf"),
        }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> CliResult<Config> {
        let mut config = Config::default();
        let Some(path) = path else {
            return Ok(config);
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad_line = || {
                CliError::validation(format!(
                    "{}:{}: expected `key = value`, found {raw:?}",
                    path.display(),
                    idx + 1
                ))
            };
            let (key, value) = line.split_once('=').ok_or_else(bad_line)?;
            let (key, value) = (key.trim(), value.trim());
            let parse_f64 = |v: &str| -> CliResult<f64> {
                v.parse::<f64>().map_err(|_| {
                    CliError::validation(format!(
                        "{}:{}: invalid number {v:?} for {key}",
                        path.display(),
                        idx + 1
                    ))
                })
            };
            match key {
                "frame_dur" => {
                    config.framing.frame_dur = parse_seconds(value)
                        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
                }
                "fill_fraction" => config.framing.fill_fraction = parse_f64(value)?,
                "duration_fraction" => config.framing.duration_fraction = parse_f64(value)?,
                "clamp_epsilon" => config.eval.clamp_eps = parse_f64(value)?,
                "pooling" => {
                    config.eval.pooling = value
                        .parse()
                        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
                }
                "music_id" => config.music_id = Mid::from(value),
                other => {
                    return Err(CliError::validation(format!(
                        "{}:{}: unknown config key {other:?}",
                        path.display(),
                        idx + 1
                    )))
                }
            }
        }
        config.framing.validate()?;
        if !(config.eval.clamp_eps > 0.0 && config.eval.clamp_eps < 0.5) {
            return Err(CliError::validation(format!(
                "clamp_epsilon must be in (0, 0.5), found {}",
                config.eval.clamp_eps
            )));
        }
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn defaults_without_file() {
        let c = Config::load(None).unwrap();
        assert_eq!(c, Config::default());
    }

    #[test]
    fn parses_overrides_and_comments() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# comment\nframe_dur = 0.5\npooling = pooled  # inline").unwrap();
        let c = Config::load(Some(f.path())).unwrap();
        assert_eq!(c.framing.frame_dur, std::time::Duration::from_millis(500));
        assert_eq!(c.eval.pooling, framelab::metrics::PoolingMode::Pooled);
        assert_eq!(c.framing.fill_fraction, 0.5);
    }

    #[test]
    fn rejects_unknown_keys() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "frame_len = 0.5").unwrap();
        let err = Config::load(Some(f.path())).unwrap_err();
        assert_eq!(err.code, crate::errors::EXIT_VALIDATION);
    }
}
