//! Startup configuration: vocabularies, bin table, encoding parameters and
//! the colour theme.
//!
//! The file is UTF-8 `key = value` text. Blank lines and lines starting with
//! `#` are ignored. Recognised keys:
//!
//! ```text
//! bin = several 2 9          # repeatable, in display order; `+` marks an open bin
//! bin = numerous 10 +
//! triggers = natural, skier, explosive
//! problem_types = storm-slab, wind-slab
//! darkness_cap = 100
//! radius_base = 8
//! scalar_policy = midpoint   # or lower_bound
//! theme.numeric_hue = 255    # CIE LCh hue angle, degrees
//! theme.ordinal_hue = 140
//! theme.chroma = 45
//! theme.lightness_light = 90
//! theme.lightness_span = 60
//! ```
//!
//! Any `bin` lines replace the default bin table as a whole. `unspecified`
//! is always appended to both vocabularies when absent.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DomainError, OrdinalBin, OrdinalBinTable, ScalarPolicy, UNSPECIFIED};

pub const DEFAULT_TRIGGERS: &[&str] = &[
    "natural",
    "skier",
    "skier-remote",
    "explosive",
    "cornice-fall",
    "vehicle",
    "other",
    UNSPECIFIED,
];

pub const DEFAULT_PROBLEM_TYPES: &[&str] = &[
    "storm-slab",
    "wind-slab",
    "persistent-slab",
    "deep-persistent-slab",
    "wet-slab",
    "loose-dry",
    "loose-wet",
    "cornice",
    UNSPECIFIED,
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: invalid value for {key}: {reason}")]
    InvalidValue {
        line: usize,
        key: String,
        reason: String,
    },
    #[error("bin table: {0}")]
    Bins(#[from] DomainError),
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
}

/// Trigger and problem-type tokens in display order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub triggers: Vec<String>,
    pub problem_types: Vec<String>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self {
            triggers: DEFAULT_TRIGGERS.iter().map(|s| s.to_string()).collect(),
            problem_types: DEFAULT_PROBLEM_TYPES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl Vocabulary {
    pub fn has_trigger(&self, token: &str) -> bool {
        self.triggers.iter().any(|t| t == token)
    }

    pub fn has_problem_type(&self, token: &str) -> bool {
        self.problem_types.iter().any(|t| t == token)
    }
}

/// Colour ramps for the two count families. Darkness `d` maps to CIE
/// lightness `lightness_light - lightness_span * d` at a fixed hue and chroma.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theme {
    pub numeric_hue: f64,
    pub ordinal_hue: f64,
    pub chroma: f64,
    pub lightness_light: f64,
    pub lightness_span: f64,
}

impl Default for Theme {
    fn default() -> Self {
        Self {
            numeric_hue: 255.0,
            ordinal_hue: 140.0,
            chroma: 45.0,
            lightness_light: 90.0,
            lightness_span: 60.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub bins: OrdinalBinTable,
    pub vocabulary: Vocabulary,
    pub darkness_cap: u32,
    pub radius_base: f64,
    pub scalar_policy: ScalarPolicy,
    pub theme: Theme,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            bins: OrdinalBinTable::default(),
            vocabulary: Vocabulary::default(),
            darkness_cap: 100,
            radius_base: 8.0,
            scalar_policy: ScalarPolicy::Midpoint,
            theme: Theme::default(),
        }
    }
}

impl Config {
    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut config = Config::default();
        let mut bins = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or(ConfigError::Syntax { line })?;
            let invalid = |reason: &str| ConfigError::InvalidValue {
                line,
                key: key.to_string(),
                reason: reason.to_string(),
            };
            let number = |v: &str| -> Result<f64, ConfigError> {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| invalid("expected a number"))
            };
            match key {
                "bin" => bins.push(parse_bin(value).map_err(|r| invalid(&r))?),
                "triggers" => config.vocabulary.triggers = token_list(value),
                "problem_types" => config.vocabulary.problem_types = token_list(value),
                "darkness_cap" => {
                    config.darkness_cap = value
                        .parse::<u32>()
                        .ok()
                        .filter(|c| *c >= 1)
                        .ok_or_else(|| invalid("expected an integer >= 1"))?
                }
                "radius_base" => {
                    let v = number(value)?;
                    if v <= 0.0 {
                        return Err(invalid("must be positive"));
                    }
                    config.radius_base = v;
                }
                "scalar_policy" => {
                    config.scalar_policy = match value {
                        "midpoint" => ScalarPolicy::Midpoint,
                        "lower_bound" => ScalarPolicy::LowerBound,
                        _ => return Err(invalid("expected midpoint or lower_bound")),
                    }
                }
                "theme.numeric_hue" => config.theme.numeric_hue = number(value)?,
                "theme.ordinal_hue" => config.theme.ordinal_hue = number(value)?,
                "theme.chroma" => config.theme.chroma = number(value)?,
                "theme.lightness_light" => config.theme.lightness_light = number(value)?,
                "theme.lightness_span" => config.theme.lightness_span = number(value)?,
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: key.to_string(),
                    })
                }
            }
        }
        if !bins.is_empty() {
            config.bins = OrdinalBinTable::new(bins)?;
        }
        for list in [
            &mut config.vocabulary.triggers,
            &mut config.vocabulary.problem_types,
        ] {
            if !list.iter().any(|t| t == UNSPECIFIED) {
                list.push(UNSPECIFIED.to_string());
            }
        }
        Ok(config)
    }
}

fn token_list(value: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for tok in value.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if !out.iter().any(|t| t == tok) {
            out.push(tok.to_string());
        }
    }
    out
}

fn parse_bin(value: &str) -> Result<OrdinalBin, String> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    let [label, lo, hi] = parts.as_slice() else {
        return Err("expected `label lo hi` (hi may be `+`)".into());
    };
    let lo: u32 = lo.parse().map_err(|_| "lo must be an integer")?;
    let hi = match *hi {
        "+" => None,
        h => Some(h.parse::<u32>().map_err(|_| "hi must be an integer or `+`")?),
    };
    OrdinalBin::new(*label, lo, hi).map_err(|e| e.to_string())
}
