use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Letter range kept by [`normalize_text`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Script {
    /// `a` to `z` after ASCII lowercasing.
    English,
    /// The Bengali block, U+0980 to U+09FF.
    Bangla,
}

impl Script {
    fn keeps(self, ch: char) -> bool {
        match self {
            Script::English => ch.is_ascii_lowercase(),
            Script::Bangla => ('\u{0980}'..='\u{09FF}').contains(&ch),
        }
    }
}

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Script::English => "english",
            Script::Bangla => "bangla",
        })
    }
}

impl FromStr for Script {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "english" | "en" => Ok(Script::English),
            "bangla" | "bn" | "bengali" => Ok(Script::Bangla),
            other => Err(Error::InvalidConfig(format!("unknown script `{other}`"))),
        }
    }
}

/// Lowercases (English), drops every character outside the script's letters
/// and whitespace, collapses whitespace runs to one space and trims.
///
/// Returns an empty string when nothing survives; callers decide whether
/// that is an error.
pub fn normalize_text(raw: &str, script: Script) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for ch in raw.chars() {
        if ch.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        let ch = match script {
            Script::English => ch.to_ascii_lowercase(),
            Script::Bangla => ch,
        };
        if !script.keeps(ch) {
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.push(ch);
    }
    out
}
