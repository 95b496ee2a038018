//! Versioned, self-describing router files (pretty-printed JSON).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::baselines::{AvengersRouter, StaticRouter};
use crate::dataset::QueryRecord;
use crate::eval::{RoutedAnswer, Router};
use crate::router::RouterArtifact;
use crate::{Error, Result};

pub const ARTIFACT_FORMAT: &str = "cascal-router";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouterPayload {
    Cascal(RouterArtifact),
    Static(StaticRouter),
    Avengers(AvengersRouter),
}

impl RouterPayload {
    pub fn model_pool(&self) -> &[String] {
        match self {
            RouterPayload::Cascal(a) => &a.model_pool,
            RouterPayload::Static(s) => &s.model_pool,
            RouterPayload::Avengers(a) => &a.model_pool,
        }
    }
}

impl Router for RouterPayload {
    fn answer(&self, record: &QueryRecord) -> Result<RoutedAnswer> {
        match self {
            RouterPayload::Cascal(a) => a.answer(record),
            RouterPayload::Static(s) => s.answer(record),
            RouterPayload::Avengers(a) => a.answer(record),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactFile {
    pub format: String,
    pub version: u32,
    pub config: RunConfig,
    pub router: RouterPayload,
}

impl ArtifactFile {
    pub fn new(config: RunConfig, router: RouterPayload) -> Self {
        Self {
            format: ARTIFACT_FORMAT.to_string(),
            version: FORMAT_VERSION,
            config,
            router,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Invariant(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("artifact is not JSON: {e}")))?;
        check_header(&value, ARTIFACT_FORMAT)?;
        serde_json::from_value(value).map_err(|e| Error::Format(format!("malformed artifact: {e}")))
    }
}

/// Fails unless `value` carries the expected `format` tag and version.
pub(crate) fn check_header(value: &serde_json::Value, format: &str) -> Result<()> {
    let found = value.get("format").and_then(|f| f.as_str());
    if found != Some(format) {
        return Err(Error::Format(format!("expected format {format}, found {found:?}")));
    }
    let version = value.get("version").and_then(|v| v.as_u64());
    if version != Some(u64::from(FORMAT_VERSION)) {
        return Err(Error::Format(format!(
            "unsupported {format} version {version:?} (this build reads version {FORMAT_VERSION})"
        )));
    }
    Ok(())
}

pub fn save_artifact(artifact: &ArtifactFile, path: &Path) -> Result<()> {
    std::fs::write(path, artifact.to_json()?).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_artifact(path: &Path) -> Result<ArtifactFile> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ArtifactFile::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::StaticKind;

    fn sample() -> ArtifactFile {
        ArtifactFile::new(
            RunConfig::new("train"),
            RouterPayload::Static(StaticRouter {
                kind: StaticKind::Top1,
                model_pool: vec!["m1".into(), "m2".into()],
                ranking: vec!["m2".into(), "m1".into()],
                seed: 3,
            }),
        )
    }

    #[test]
    fn json_round_trip() {
        let a = sample();
        let text = a.to_json().unwrap();
        assert_eq!(ArtifactFile::from_json(&text).unwrap(), a);
    }

    #[test]
    fn version_mismatch_fails_loudly() {
        let text = sample()
            .to_json()
            .unwrap()
            .replacen("\"version\": 1", "\"version\": 2", 1);
        let err = ArtifactFile::from_json(&text).unwrap_err();
        assert!(err.to_string().contains("unsupported cascal-router version"), "{err}");
        let text = sample()
            .to_json()
            .unwrap()
            .replacen(ARTIFACT_FORMAT, "something-else", 1);
        assert!(ArtifactFile::from_json(&text).is_err());
    }
}
