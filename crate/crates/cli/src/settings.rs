use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use clap::parser::ValueSource;
use clap::ArgMatches;

use crate::failure::Failure;

/// Keys that describe where output goes rather than what is computed; they
/// are left out of the provenance block so that outputs do not depend on
/// them.
const NON_SEMANTIC: [&str; 4] = ["out", "workers", "config", "verbose"];

/// Resolved key-value settings of one invocation. Precedence: command line,
/// then config file, then preset, then built-in defaults.
#[derive(Clone, Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
    explicit: BTreeSet<String>,
}

fn normalise(key: &str) -> String {
    key.trim().replace('-', "_")
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, Failure> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Failure::invalid(format!("config line {}: expected key = value", n + 1)))?;
        let k = normalise(k);
        if k.is_empty() {
            return Err(Failure::invalid(format!("config line {}: empty key", n + 1)));
        }
        out.insert(k, v.trim().to_string());
    }
    Ok(out)
}

impl Settings {
    /// `known` lists every argument id of the subcommand, set or not.
    pub fn resolve(matches: &ArgMatches, known: &[String], config: Option<&Path>) -> Result<Self, Failure> {
        let mut s = Settings::default();
        for id in known {
            if matches.value_source(id) == Some(ValueSource::CommandLine) {
                if let Some(v) = raw(matches, id) {
                    s.values.insert(id.clone(), v);
                    s.explicit.insert(id.clone());
                }
            }
        }
        if let Some(path) = config {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::invalid(format!("cannot read config {}: {e}", path.display())))?;
            let cli_sets_model = s.explicit.contains("p") || s.explicit.contains("beta");
            for (k, v) in parse_config(&text)? {
                if !known.contains(&k) || k == "config" {
                    return Err(Failure::invalid(format!("unknown config key `{k}`")));
                }
                if s.explicit.contains(&k) || (cli_sets_model && (k == "p" || k == "beta")) {
                    continue;
                }
                s.values.insert(k.clone(), v);
                s.explicit.insert(k);
            }
        }
        for id in known {
            if !s.values.contains_key(id) {
                if let Some(v) = raw(matches, id) {
                    s.values.insert(id.clone(), v);
                }
            }
        }
        if s.explicit.contains("p") && s.explicit.contains("beta") {
            return Err(Failure::invalid("give exactly one of p and beta"));
        }
        Ok(s)
    }

    /// Applies preset values to keys not set explicitly.
    pub fn apply_preset(&mut self, preset: &[(&str, &str)]) {
        let model_set = self.explicit.contains("p") || self.explicit.contains("beta");
        for &(k, v) in preset {
            if self.explicit.contains(k) || ((k == "p" || k == "beta") && model_set) {
                continue;
            }
            self.values.insert(k.to_string(), v.to_string());
            self.explicit.insert(k.to_string());
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, Failure>
    where
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| Failure::invalid(format!("bad value `{v}` for {key}: {e}")))
            })
            .transpose()
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, Failure>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?
            .ok_or_else(|| Failure::invalid(format!("missing required setting `{key}`")))
    }

    pub fn flag(&self, key: &str) -> bool {
        self.values.get(key).is_some_and(|v| v == "true")
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Settings that determine the results.
    pub fn provenance(&self) -> BTreeMap<String, String> {
        self.values
            .iter()
            .filter(|(k, _)| !NON_SEMANTIC.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }
}

fn raw(matches: &ArgMatches, id: &str) -> Option<String> {
    let mut vals = matches.try_get_raw(id).ok()??;
    let first = vals.next()?.to_string_lossy().into_owned();
    Some(first)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lines() {
        let m = parse_config("# comment\np = 0.45  # trailing\nbox-size=64\n\n").unwrap();
        assert_eq!(m["p"], "0.45");
        assert_eq!(m["box_size"], "64");
        assert!(parse_config("novalue").is_err());
    }
}
