//! Run configuration: one TOML file, paths relative to the file.

use std::fs;
use std::path::{Path, PathBuf};

use portrayal::group_embedding::TrainerConfig;
use portrayal::synth::PlantSpec;
use portrayal::toxicity::{CONSERVATIVE_LEVEL, DEFAULT_ANCHOR_DECADE, DEFAULT_TOP_AXES};
use portrayal::{Decade, DecadeRange, Group};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Shard files or directories (every regular file inside, sorted).
    pub shards: Vec<PathBuf>,
    pub roster: Option<PathBuf>,
    pub group_map: Option<PathBuf>,
    pub overrides: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    /// Vector file per decade, `{decade}` is replaced by the decade.
    pub embeddings: Option<String>,
    pub axes: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AxesConfig {
    pub min_words: usize,
    pub top_k: usize,
}

impl Default for AxesConfig {
    fn default() -> Self {
        AxesConfig { min_words: 3, top_k: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToxicityConfig {
    pub anchor_decade: Decade,
    pub top_axes: usize,
    /// Lexicon level to keep; empty keeps every row.
    pub level: String,
}

impl Default for ToxicityConfig {
    fn default() -> Self {
        ToxicityConfig {
            anchor_decade: DEFAULT_ANCHOR_DECADE,
            top_axes: DEFAULT_TOP_AXES,
            level: CONSERVATIVE_LEVEL.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub k: Vec<usize>,
    pub n: Vec<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            k: vec![500_000, 1_000_000],
            n: vec![1, 4, 10, 20],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FetchConfig {
    pub endpoint: Option<String>,
    pub query: Option<PathBuf>,
    pub fixture: Option<PathBuf>,
    pub timeout_secs: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Scan workers; 0 uses one per core.
    pub workers: usize,
    pub output_dir: PathBuf,
    pub first_decade: Decade,
    pub last_decade: Decade,
    /// The two groups to contrast. Defaults to the group map's targets.
    pub groups: Vec<Group>,
    pub paths: PathsConfig,
    pub trainer: TrainerConfig,
    pub axes: AxesConfig,
    pub toxicity: ToxicityConfig,
    pub sweep: SweepConfig,
    pub fetch: FetchConfig,
    pub synth: PlantSpec,
    #[serde(skip)]
    pub plots: bool,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
    /// Hash of the config file bytes and the applied overrides.
    #[serde(skip)]
    pub hash: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        let range = DecadeRange::default();
        RunConfig {
            seed: 0,
            workers: 0,
            output_dir: PathBuf::from("out"),
            first_decade: range.first,
            last_decade: range.last,
            groups: Vec::new(),
            paths: PathsConfig::default(),
            trainer: TrainerConfig::default(),
            axes: AxesConfig::default(),
            toxicity: ToxicityConfig::default(),
            sweep: SweepConfig::default(),
            fetch: FetchConfig::default(),
            synth: PlantSpec::default(),
            plots: false,
            base_dir: PathBuf::from("."),
            hash: String::new(),
        }
    }
}

/// Command-line values that win over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub first_decade: Option<Decade>,
    pub last_decade: Option<Decade>,
    pub plots: bool,
}

impl RunConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| CliError::Config(format!("{}: not UTF-8", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut cfg = RunConfig::from_toml(&text, &base)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.apply(overrides, &bytes);
        Ok(cfg)
    }

    /// Apply overrides and compute the config hash.
    pub fn apply(&mut self, o: &Overrides, file_bytes: &[u8]) {
        if let Some(d) = &o.output_dir {
            self.output_dir = d.clone();
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(w) = o.workers {
            self.workers = w;
        }
        if let Some(d) = o.first_decade {
            self.first_decade = d;
        }
        if let Some(d) = o.last_decade {
            self.last_decade = d;
        }
        self.plots |= o.plots;
        let mut h = Sha256::new();
        h.update(file_bytes);
        h.update(format!("{:?}|{}|{}|{}|{}", o.output_dir, self.seed, self.workers, self.first_decade, self.last_decade));
        self.hash = hex::encode(h.finalize());
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn decades(&self) -> Result<DecadeRange, CliError> {
        DecadeRange::new(self.first_decade, self.last_decade).ok_or_else(|| {
            CliError::Config(format!(
                "decade range {}..{} is empty or not decade-aligned",
                self.first_decade, self.last_decade
            ))
        })
    }

    /// Trainer config with the root seed.
    pub fn trainer(&self) -> TrainerConfig {
        TrainerConfig {
            seed: self.seed,
            ..self.trainer.clone()
        }
    }

    /// A required path, resolved and checked to exist.
    pub fn require(&self, name: &str, p: &Option<PathBuf>) -> Result<PathBuf, CliError> {
        let p = p
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("paths.{name} is not set")))?;
        let full = self.resolve(p);
        if !full.exists() {
            return Err(CliError::Config(format!("paths.{name}: {} does not exist", full.display())));
        }
        Ok(full)
    }

    pub fn embedding_path(&self, decade: Decade) -> Result<PathBuf, CliError> {
        let pattern = self
            .paths
            .embeddings
            .as_ref()
            .ok_or_else(|| CliError::Config("paths.embeddings is not set".into()))?;
        if !pattern.contains("{decade}") {
            return Err(CliError::Config("paths.embeddings must contain {decade}".into()));
        }
        Ok(self.resolve(Path::new(&pattern.replace("{decade}", &decade.to_string()))))
    }

    /// Shard files: listed files, plus every regular file of listed directories.
    pub fn shard_files(&self) -> Result<Vec<PathBuf>, CliError> {
        if self.paths.shards.is_empty() {
            return Err(CliError::Config("paths.shards is empty".into()));
        }
        let mut out = Vec::new();
        for s in &self.paths.shards {
            let p = self.resolve(s);
            if p.is_dir() {
                let mut files: Vec<PathBuf> = fs::read_dir(&p)
                    .map_err(|e| CliError::io(&p, e))?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.is_file())
                    .collect();
                files.sort();
                out.extend(files);
            } else if p.exists() {
                out.push(p);
            } else {
                return Err(CliError::Config(format!("paths.shards: {} does not exist", p.display())));
            }
        }
        Ok(out)
    }
}
