//! Bundled scenario files.

use std::fmt;
use std::str::FromStr;

use crate::config::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Two sensors, two crossing targets, adaptive birth.
    Scenario1,
    /// Prior birth with a target that one sensor initializes late.
    Scenario1Prior,
    /// Three sensors, five targets with births and deaths.
    Scenario2,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Scenario1, Preset::Scenario1Prior, Preset::Scenario2];

    pub fn toml(self) -> &'static str {
        match self {
            Preset::Scenario1 => include_str!("../presets/scenario1.toml"),
            Preset::Scenario1Prior => include_str!("../presets/scenario1-prior.toml"),
            Preset::Scenario2 => include_str!("../presets/scenario2.toml"),
        }
    }

    pub fn config(self) -> ScenarioConfig {
        ScenarioConfig::from_toml_str(self.toml()).expect("bundled preset parses")
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Scenario1 => "scenario1",
            Preset::Scenario1Prior => "scenario1-prior",
            Preset::Scenario2 => "scenario2",
        })
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Preset::ALL
            .into_iter()
            .find(|p| p.to_string() == s)
            .ok_or_else(|| {
                format!("unknown preset `{s}` (expected scenario1, scenario1-prior or scenario2)")
            })
    }
}
