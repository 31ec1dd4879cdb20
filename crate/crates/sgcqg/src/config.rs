//! Run configuration: turn budgets, filtering thresholds, and per-capability
//! backend selection. Loads from TOML or JSON (chosen by file extension),
//! with every field optional on disk and an environment-variable override
//! for backend URLs (`SGCQG_BACKEND_<CAPABILITY>_URL`, capability in
//! upper snake case, e.g. `SGCQG_BACKEND_SPAN_EXTRACT_URL`).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::backend::Capability;
use crate::error::{Error, Result};
use crate::filter::RfConfig;

/// Which implementation serves a capability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Stub,
    Http,
}

/// Backend selection for one capability.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    #[serde(default)]
    pub kind: BackendKind,
    #[serde(default)]
    pub url: Option<String>,
}

/// Backend selections for all four capabilities plus shared HTTP knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackendsConfig {
    pub qg: BackendConfig,
    pub cqa: BackendConfig,
    pub span_extract: BackendConfig,
    pub type_classify: BackendConfig,
    pub timeout_ms: u64,
    pub retries: usize,
}

impl Default for BackendsConfig {
    fn default() -> Self {
        BackendsConfig {
            qg: BackendConfig::default(),
            cqa: BackendConfig::default(),
            span_extract: BackendConfig::default(),
            type_classify: BackendConfig::default(),
            timeout_ms: 10_000,
            retries: 2,
        }
    }
}

impl BackendsConfig {
    pub fn for_capability(&self, cap: Capability) -> &BackendConfig {
        match cap {
            Capability::Qg => &self.qg,
            Capability::Cqa => &self.cqa,
            Capability::SpanExtract => &self.span_extract,
            Capability::TypeClassify => &self.type_classify,
        }
    }

    fn for_capability_mut(&mut self, cap: Capability) -> &mut BackendConfig {
        match cap {
            Capability::Qg => &mut self.qg,
            Capability::Cqa => &mut self.cqa,
            Capability::SpanExtract => &mut self.span_extract,
            Capability::TypeClassify => &mut self.type_classify,
        }
    }
}

/// Full pipeline configuration. Defaults run everything offline on the
/// deterministic stubs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Maximum accepted turns per conversation.
    pub max_turns: usize,
    /// Candidate spans requested per rationale sentence.
    pub max_spans_per_rationale: usize,
    /// Rewriting-and-filtering thresholds.
    pub filter: RfConfig,
    /// Boolean bucket modulus for the stub type classifier.
    pub stub_boolean_modulus: u64,
    pub backends: BackendsConfig,
    /// Score diversity over questions only, ignoring answers.
    pub questions_only: bool,
    /// Optional token-vector file for the entailment embedder; one-hot
    /// when absent.
    pub embedder_vectors: Option<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            max_turns: 20,
            max_spans_per_rationale: 5,
            filter: RfConfig::default(),
            stub_boolean_modulus: 5,
            backends: BackendsConfig::default(),
            questions_only: false,
            embedder_vectors: None,
        }
    }
}

impl PipelineConfig {
    /// Parse from a TOML (`.toml`) or JSON (anything else) file and apply
    /// environment overrides.
    pub fn from_path(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)?;
        let is_toml = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let mut config: PipelineConfig = if is_toml {
            toml::from_str(&raw).map_err(|e| Error::Config(e.to_string()))?
        } else {
            serde_json::from_str(&raw).map_err(|e| Error::Config(e.to_string()))?
        };
        config.apply_env();
        config.validate()?;
        Ok(config)
    }

    /// Overlay `SGCQG_BACKEND_<CAPABILITY>_URL` variables; a set variable
    /// switches that capability to the HTTP backend at the given URL.
    pub fn apply_env(&mut self) {
        for cap in [
            Capability::Qg,
            Capability::Cqa,
            Capability::SpanExtract,
            Capability::TypeClassify,
        ] {
            let var = format!("SGCQG_BACKEND_{}_URL", cap.as_str().to_uppercase());
            if let Ok(url) = std::env::var(&var) {
                if !url.is_empty() {
                    let slot = self.backends.for_capability_mut(cap);
                    slot.kind = BackendKind::Http;
                    slot.url = Some(url);
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_spans_per_rationale == 0 {
            return Err(Error::Config("max_spans_per_rationale must be positive".into()));
        }
        for cap in [
            Capability::Qg,
            Capability::Cqa,
            Capability::SpanExtract,
            Capability::TypeClassify,
        ] {
            let b = self.backends.for_capability(cap);
            if b.kind == BackendKind::Http && b.url.is_none() {
                return Err(Error::Config(format!(
                    "backend '{}' is http but has no url",
                    cap.as_str()
                )));
            }
        }
        for (name, v) in [
            ("roundtrip_threshold", self.filter.roundtrip_threshold),
            ("redundancy_threshold", self.filter.redundancy_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must be within [0, 1]")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    #[test]
    fn defaults_are_offline_stubs() {
        let c = PipelineConfig::default();
        assert_eq!(c.max_turns, 20);
        assert_eq!(c.max_spans_per_rationale, 5);
        assert_eq!(c.backends.qg.kind, BackendKind::Stub);
        assert_eq!(c.backends.retries, 2);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn toml_roundtrip_with_partial_fields() {
        let mut f = tempfile::Builder::new().suffix(".toml").tempfile().unwrap();
        writeln!(
            f,
            "max_turns = 7\n\n[backends.qg]\nkind = \"http\"\nurl = \"http://localhost:9000/qg\"\n"
        )
        .unwrap();
        let c = PipelineConfig::from_path(f.path()).unwrap();
        assert_eq!(c.max_turns, 7);
        assert_eq!(c.backends.qg.kind, BackendKind::Http);
        assert_eq!(c.backends.qg.url.as_deref(), Some("http://localhost:9000/qg"));
        // Unspecified fields keep defaults.
        assert_eq!(c.max_spans_per_rationale, 5);
        assert_eq!(c.backends.cqa.kind, BackendKind::Stub);
    }

    #[test]
    fn json_config_parses() {
        let mut f = tempfile::Builder::new().suffix(".json").tempfile().unwrap();
        write!(f, "{}", serde_json::json!({"max_turns": 3})).unwrap();
        let c = PipelineConfig::from_path(f.path()).unwrap();
        assert_eq!(c.max_turns, 3);
    }

    #[test]
    fn http_without_url_is_rejected() {
        let mut c = PipelineConfig::default();
        c.backends.cqa.kind = BackendKind::Http;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_field_is_rejected() {
        let mut f = tempfile::Builder::new().suffix(".toml").tempfile().unwrap();
        writeln!(f, "max_turnz = 7").unwrap();
        assert!(matches!(
            PipelineConfig::from_path(f.path()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn env_override_switches_to_http() {
        let mut c = PipelineConfig::default();
        std::env::set_var("SGCQG_BACKEND_CQA_URL", "http://localhost:1234/cqa");
        c.apply_env();
        std::env::remove_var("SGCQG_BACKEND_CQA_URL");
        assert_eq!(c.backends.cqa.kind, BackendKind::Http);
        assert_eq!(c.backends.cqa.url.as_deref(), Some("http://localhost:1234/cqa"));
    }
}
