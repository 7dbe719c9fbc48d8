use std::collections::HashSet;
use std::path::{Path, PathBuf};

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::model::hex_digest;
use crate::poset::MessageUniverse;

pub const FILE_PLACEHOLDER: &str = "{file}";
pub const DEFAULT_TIMEOUT_SECS: f64 = 30.0;

fn default_timeout() -> f64 {
    DEFAULT_TIMEOUT_SECS
}

fn default_threshold() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParserSpec {
    pub name: String,
    /// Shell-style command line with exactly one `{file}` placeholder.
    pub command: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    /// Set when the pattern matches the parser's combined output.
    Regex,
    /// Set when the parser exits nonzero, is killed, or times out.
    ExitCodeNonzero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MessageRule {
    pub parser: String,
    pub message: String,
    pub kind: RuleKind,
    #[serde(default)]
    pub pattern: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnessConfig {
    pub parsers: Vec<ParserSpec>,
    pub message_rules: Vec<MessageRule>,
    #[serde(default = "default_threshold")]
    pub inversion_threshold: f64,
}

/// A validated parser: program path resolved, arguments split, rules compiled.
#[derive(Debug, Clone)]
pub(crate) struct ResolvedParser {
    pub name: String,
    pub program: PathBuf,
    pub args: Vec<String>,
    pub timeout: std::time::Duration,
    /// `(message index, compiled regex)`.
    pub regex_rules: Vec<(usize, Regex)>,
    pub exit_rules: Vec<usize>,
}

impl HarnessConfig {
    pub fn from_json_str(text: &str) -> Result<Self, IngestError> {
        let config: HarnessConfig =
            serde_json::from_str(text).map_err(|e| IngestError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// Message names in rule order.
    pub fn universe(&self) -> Result<MessageUniverse, IngestError> {
        MessageUniverse::new(self.message_rules.iter().map(|r| r.message.clone()))
            .map_err(|e| IngestError::Config(e.to_string()))
    }

    pub fn digest(&self) -> String {
        hex_digest(
            serde_json::to_string(self)
                .expect("serializable")
                .as_bytes(),
        )
    }

    /// Structural checks that need no filesystem access.
    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |msg: String| Err(IngestError::Config(msg));
        let mut parsers = HashSet::new();
        for p in &self.parsers {
            if p.name.is_empty() {
                return bad("parser with empty name".into());
            }
            if !parsers.insert(p.name.as_str()) {
                return bad(format!("duplicate parser `{}`", p.name));
            }
            let placeholders = p.command.matches(FILE_PLACEHOLDER).count();
            if placeholders != 1 {
                return bad(format!(
                    "parser `{}`: command must contain exactly one {FILE_PLACEHOLDER}, found {placeholders}",
                    p.name
                ));
            }
            match shlex::split(&p.command) {
                Some(words) if !words.is_empty() => {}
                _ => return bad(format!("parser `{}`: cannot split command", p.name)),
            }
            if !(p.timeout_secs > 0.0 && p.timeout_secs.is_finite()) {
                return bad(format!("parser `{}`: timeout must be positive", p.name));
            }
        }
        self.universe()?;
        for r in &self.message_rules {
            if !parsers.contains(r.parser.as_str()) {
                return bad(format!(
                    "message `{}` refers to unknown parser `{}`",
                    r.message, r.parser
                ));
            }
            if r.kind == RuleKind::Regex {
                compile(&r.pattern)
                    .map_err(|e| IngestError::Config(format!("message `{}`: {e}", r.message)))?;
            }
        }
        if !(self.inversion_threshold > 0.0 && self.inversion_threshold <= 1.0) {
            return Err(IngestError::InvalidThreshold(self.inversion_threshold));
        }
        Ok(())
    }

    /// Validates and resolves every parser's program on `PATH`.
    pub(crate) fn resolve(&self) -> Result<Vec<ResolvedParser>, IngestError> {
        self.validate()?;
        let mut resolved = Vec::with_capacity(self.parsers.len());
        for p in &self.parsers {
            let words = shlex::split(&p.command).expect("validated");
            let program =
                which::which(&words[0]).map_err(|_| IngestError::UnresolvableCommand {
                    parser: p.name.clone(),
                    program: words[0].clone(),
                })?;
            let mut regex_rules = Vec::new();
            let mut exit_rules = Vec::new();
            for (j, r) in self.message_rules.iter().enumerate() {
                if r.parser != p.name {
                    continue;
                }
                match r.kind {
                    RuleKind::Regex => {
                        regex_rules.push((j, compile(&r.pattern).expect("validated")))
                    }
                    RuleKind::ExitCodeNonzero => exit_rules.push(j),
                }
            }
            resolved.push(ResolvedParser {
                name: p.name.clone(),
                program,
                args: words[1..].to_vec(),
                timeout: std::time::Duration::from_secs_f64(p.timeout_secs),
                regex_rules,
                exit_rules,
            });
        }
        Ok(resolved)
    }
}

fn compile(pattern: &str) -> Result<Regex, regex::Error> {
    RegexBuilder::new(pattern).multi_line(true).build()
}
