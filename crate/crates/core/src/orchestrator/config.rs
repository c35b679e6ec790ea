//! Cooperation options and helper roster, read from TOML.
//!
//! ```toml
//! master = "kind"
//! helpers = ["affine", "interval"]
//! restartMaster = true
//! termAfterFirstInv = false
//! timerM = 5.0
//! timeoutH = 20.0
//! timeout = 60.0
//!
//! [[external]]
//! name = "aff-ext"
//! executable = "target/debug/coop-helper"
//! args = ["--technique", "affine"]
//! encoding = "assert_stmt"
//! output = "raw"
//! ```

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exchange::{ExternalHelperSpec, OutputKind};
use crate::frontend::PropertyEncoding;
use crate::helpers::Technique;
use crate::master::MasterKind;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("bad config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExternalEntry {
    pub name: String,
    pub executable: PathBuf,
    #[serde(default)]
    pub args: Vec<String>,
    #[serde(default = "default_encoding")]
    pub encoding: String,
    #[serde(default = "default_output")]
    pub output: String,
}

fn default_encoding() -> String {
    PropertyEncoding::ErrorLabel.name().into()
}

fn default_output() -> String {
    OutputKind::Witness.name().into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoopConfig {
    #[serde(rename = "restartMaster", default = "yes")]
    pub restart_master: bool,
    #[serde(rename = "termAfterFirstInv", default)]
    pub term_after_first_inv: bool,
    /// Seconds before the master asks for help.
    #[serde(rename = "timerM", default = "default_timer")]
    pub timer_m: f64,
    /// Seconds each helper may run.
    #[serde(rename = "timeoutH", default = "default_helper_timeout")]
    pub timeout_h: f64,
    #[serde(default = "default_master")]
    pub master: String,
    #[serde(default)]
    pub helpers: Vec<String>,
    #[serde(default)]
    pub external: Vec<ExternalEntry>,
    /// Whole-task budget in seconds.
    #[serde(default = "default_timeout")]
    pub timeout: f64,
    /// Let a stalled master ask for help before its timer runs out.
    #[serde(rename = "requestOnStall", default)]
    pub request_on_stall: bool,
    #[serde(default = "default_width")]
    pub width: u32,
}

fn yes() -> bool {
    true
}

fn default_timer() -> f64 {
    5.0
}

fn default_helper_timeout() -> f64 {
    20.0
}

fn default_master() -> String {
    "kind".into()
}

fn default_timeout() -> f64 {
    60.0
}

fn default_width() -> u32 {
    crate::frontend::DEFAULT_WIDTH
}

impl Default for CoopConfig {
    fn default() -> Self {
        CoopConfig {
            restart_master: true,
            term_after_first_inv: false,
            timer_m: default_timer(),
            timeout_h: default_helper_timeout(),
            master: default_master(),
            helpers: Vec::new(),
            external: Vec::new(),
            timeout: default_timeout(),
            request_on_stall: false,
            width: default_width(),
        }
    }
}

/// A helper as named in a configuration.
#[derive(Clone, Debug)]
pub enum HelperChoice {
    Builtin(Technique),
    External(ExternalHelperSpec),
}

impl HelperChoice {
    pub fn short(&self) -> String {
        match self {
            HelperChoice::Builtin(t) => t.short().to_string(),
            HelperChoice::External(s) => s.name.clone(),
        }
    }
}

impl CoopConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let c: CoopConfig = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.timeout > 0.0) {
            return Err(ConfigError::Invalid("timeout must be positive".into()));
        }
        if !(self.timer_m >= 0.0) || self.timer_m > self.timeout {
            return Err(ConfigError::Invalid(format!(
                "timerM ({}) must lie between 0 and timeout ({})",
                self.timer_m, self.timeout
            )));
        }
        if !(self.timeout_h > 0.0) {
            return Err(ConfigError::Invalid("timeoutH must be positive".into()));
        }
        if !(1..=32).contains(&self.width) {
            return Err(ConfigError::Invalid(format!("width {} out of range", self.width)));
        }
        self.master_kind()?;
        self.helper_roster()?;
        Ok(())
    }

    pub fn master_kind(&self) -> Result<MasterKind, ConfigError> {
        self.master.parse().map_err(ConfigError::Invalid)
    }

    /// Built-in helpers in listed order, then external ones.
    pub fn helper_roster(&self) -> Result<Vec<HelperChoice>, ConfigError> {
        let mut out = Vec::new();
        for h in &self.helpers {
            out.push(HelperChoice::Builtin(h.parse().map_err(ConfigError::Invalid)?));
        }
        for e in &self.external {
            let enc: PropertyEncoding = e.encoding.parse().map_err(ConfigError::Invalid)?;
            let kind: OutputKind = e.output.parse().map_err(ConfigError::Invalid)?;
            let spec = ExternalHelperSpec::new(
                e.name.clone(),
                e.executable.clone(),
                enc,
                kind,
                Duration::from_secs_f64(self.timeout_h),
            )
            .map_err(|err| ConfigError::Invalid(err.to_string()))?
            .with_args(e.args.clone());
            out.push(HelperChoice::External(spec));
        }
        Ok(out)
    }

    /// `<master>-<helpers>-<timerM>[-wait-<timeoutH>]`; the suffix marks runs that wait
    /// for every helper instead of taking the first invariant.
    pub fn run_name(&self) -> String {
        let master = self
            .master_kind()
            .map(|m| m.short().to_string())
            .unwrap_or_else(|_| self.master.clone());
        let mut helpers: Vec<String> = self
            .helpers
            .iter()
            .map(|h| {
                h.parse::<Technique>()
                    .map(|t| t.short().to_string())
                    .unwrap_or_else(|_| h.clone())
            })
            .collect();
        helpers.extend(self.external.iter().map(|e| e.name.clone()));
        if helpers.is_empty() {
            return master;
        }
        let mut s = format!("{master}-{}-{}", helpers.join("-"), secs(self.timer_m));
        if !self.term_after_first_inv {
            s.push_str(&format!("-wait-{}", secs(self.timeout_h)));
        }
        s
    }
}

fn secs(x: f64) -> String {
    if x.fract() == 0.0 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}
