use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{StaticKind, AVENGERS_K};
use crate::router::{RouterConfig, Variant};
use crate::{Error, Result};

/// Environment variable consulted for the seed when neither a flag nor the
/// config file sets one.
pub const SEED_ENV: &str = "CASCAL_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RouterKind {
    Cascal,
    CascalGt,
    Top1,
    Top3,
    Random1,
    Random3,
    Avengers,
    Oracle,
}

impl RouterKind {
    pub fn static_kind(self) -> Option<StaticKind> {
        match self {
            RouterKind::Top1 => Some(StaticKind::Top1),
            RouterKind::Top3 => Some(StaticKind::Top3Vote),
            RouterKind::Random1 => Some(StaticKind::Random1),
            RouterKind::Random3 => Some(StaticKind::Random3Vote),
            RouterKind::Oracle => Some(StaticKind::Oracle),
            RouterKind::Cascal | RouterKind::CascalGt | RouterKind::Avengers => None,
        }
    }
}

/// Every setting a subcommand ran with. Embedded verbatim in each artifact
/// and report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub subcommand: String,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub router: RouterKind,
    pub k_select: usize,
    pub silhouette_threshold: f64,
    pub merge_tau: f64,
    pub jaccard_threshold: f64,
    pub k_min: usize,
    pub k_max: usize,
    pub avengers_k: usize,
    pub seed: u64,
    pub split_fraction: f64,
}

impl RunConfig {
    pub fn new(subcommand: &str) -> Self {
        let r = RouterConfig::default();
        Self {
            subcommand: subcommand.to_string(),
            input: None,
            output: None,
            router: RouterKind::Cascal,
            k_select: r.k_select,
            silhouette_threshold: r.silhouette_threshold,
            merge_tau: r.merge_tau,
            jaccard_threshold: r.jaccard_threshold,
            k_min: r.k_min,
            k_max: r.k_max,
            avengers_k: AVENGERS_K,
            seed: r.seed,
            split_fraction: 0.6,
        }
    }

    pub fn router_config(&self) -> RouterConfig {
        RouterConfig {
            k_select: self.k_select,
            variant: if self.router == RouterKind::CascalGt {
                Variant::GroundTruth
            } else {
                Variant::Consensus
            },
            k_min: self.k_min,
            k_max: self.k_max,
            silhouette_threshold: self.silhouette_threshold,
            merge_tau: self.merge_tau,
            jaccard_threshold: self.jaccard_threshold,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.router_config().validate()?;
        if self.avengers_k == 0 {
            return Err(Error::InvalidArgument("avengers_k must be positive".into()));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "split fraction must lie in (0, 1), got {}",
                self.split_fraction
            )));
        }
        Ok(())
    }

    /// Fills every field the file sets. Seeds fall back to [`SEED_ENV`] when
    /// the file has none; explicit flags are applied by the caller afterwards.
    pub fn apply_file(&mut self, file: &ConfigFile) {
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = file.$f.clone() { self.$f = v; } )* };
        }
        take!(
            router,
            k_select,
            silhouette_threshold,
            merge_tau,
            jaccard_threshold,
            k_min,
            k_max,
            avengers_k,
            split_fraction
        );
        if let Some(v) = file.input.clone() {
            self.input = Some(v);
        }
        if let Some(v) = file.output.clone() {
            self.output = Some(v);
        }
        if let Some(s) = file.seed {
            self.seed = s;
        }
    }

    pub fn apply_seed_env(&mut self, file: Option<&ConfigFile>, env_value: Option<&str>) -> Result<()> {
        if file.and_then(|f| f.seed).is_some() {
            return Ok(());
        }
        if let Some(v) = env_value {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("{SEED_ENV}={v} is not an unsigned integer")))?;
        }
        Ok(())
    }
}

/// Optional settings read from `--config` (TOML).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub router: Option<RouterKind>,
    pub k_select: Option<usize>,
    pub silhouette_threshold: Option<f64>,
    pub merge_tau: Option<f64>,
    pub jaccard_threshold: Option<f64>,
    pub k_min: Option<usize>,
    pub k_max: Option<usize>,
    pub avengers_k: Option<usize>,
    pub seed: Option<u64>,
    pub split_fraction: Option<f64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }
}
