//! Layered configuration: defaults, then the TOML config file, then
//! command-line overrides, later layers winning field by field.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;

use expool_core::backends::{
    Backends, FixtureTable, HashEmbedder, RemoteBackend, RemoteConfig, RemoteEmbedder,
    RemoteEmbedderConfig, RunClock, Sandbox, SandboxConfig, ScriptedBackend,
};
use expool_core::error::{Error, Result};
use expool_core::propagation::{Pattern, RunConfig};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub corpus: CorpusSection,
    #[serde(default)]
    pub backend: BackendSection,
    #[serde(default)]
    pub embedder: EmbedderSection,
    #[serde(default)]
    pub sandbox: SandboxSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub pattern: Option<String>,
    pub batches: Option<u32>,
    pub k: Option<usize>,
    pub epsilon: Option<f64>,
    pub theta: Option<f64>,
    pub max_review_rounds: Option<u32>,
    pub max_test_rounds: Option<u32>,
    pub seed: Option<u64>,
    pub metrics_include_failed: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSection {
    /// "scripted" or "remote".
    pub mode: Option<String>,
    pub fixtures: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub token_env: Option<String>,
    pub timeout_secs: Option<u64>,
    pub retries: Option<u32>,
    pub temperature: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedderSection {
    /// "local" or "remote".
    pub mode: Option<String>,
    pub dimension: Option<usize>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub token_env: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SandboxSection {
    pub compile_cmd: Option<Vec<String>>,
    pub run_cmd: Option<Vec<String>>,
    pub timeout_secs: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)?;
        toml::from_str(&raw)
            .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))
    }
}

/// Command-line overrides for the run command.
#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub corpus: Option<PathBuf>,
    pub pattern: Option<Pattern>,
    pub batches: Option<u32>,
    pub seed: Option<u64>,
    pub epsilon: Option<f64>,
    pub theta: Option<f64>,
    pub k: Option<usize>,
    pub backend: Option<String>,
    pub fixtures: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

/// Fully resolved settings for one run.
pub struct Resolved {
    pub run: RunConfig,
    pub corpus: PathBuf,
    pub out_dir: PathBuf,
    pub backend_mode: String,
    pub fixtures: Option<PathBuf>,
    pub remote: RemoteConfig,
    pub embedder_mode: String,
    pub embedder_dimension: usize,
    pub embedder_remote: RemoteEmbedderConfig,
    pub sandbox: SandboxConfig,
}

pub fn resolve(file: &FileConfig, cli: &RunOverrides) -> Result<Resolved> {
    let defaults = RunConfig::default();
    let pattern = match &cli.pattern {
        Some(p) => *p,
        None => match &file.run.pattern {
            Some(s) => s.parse()?,
            None => defaults.pattern,
        },
    };
    let run = RunConfig {
        pattern,
        n_batches: cli.batches.or(file.run.batches).unwrap_or(defaults.n_batches),
        k: cli.k.or(file.run.k).unwrap_or(defaults.k),
        epsilon: cli.epsilon.or(file.run.epsilon).unwrap_or(defaults.epsilon),
        theta: cli.theta.or(file.run.theta).unwrap_or(defaults.theta),
        max_review_rounds: file
            .run
            .max_review_rounds
            .unwrap_or(defaults.max_review_rounds),
        max_test_rounds: file.run.max_test_rounds.unwrap_or(defaults.max_test_rounds),
        seed: cli.seed.or(file.run.seed).unwrap_or(defaults.seed),
        metrics_include_failed: file
            .run
            .metrics_include_failed
            .unwrap_or(defaults.metrics_include_failed),
    };
    run.validate()?;

    let corpus = cli
        .corpus
        .clone()
        .or_else(|| file.corpus.path.clone())
        .ok_or_else(|| Error::Config("no corpus path configured".into()))?;
    let out_dir = cli
        .out
        .clone()
        .or_else(|| file.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));

    let backend_mode = cli
        .backend
        .clone()
        .or_else(|| file.backend.mode.clone())
        .unwrap_or_else(|| "scripted".to_string());
    if backend_mode != "scripted" && backend_mode != "remote" {
        return Err(Error::Config(format!(
            "backend mode must be scripted or remote, not {backend_mode:?}"
        )));
    }
    let fixtures = cli.fixtures.clone().or_else(|| file.backend.fixtures.clone());

    let remote_defaults = RemoteConfig::default();
    let remote = RemoteConfig {
        endpoint: file
            .backend
            .endpoint
            .clone()
            .unwrap_or(remote_defaults.endpoint),
        model: file.backend.model.clone().unwrap_or(remote_defaults.model),
        token_env: file
            .backend
            .token_env
            .clone()
            .unwrap_or(remote_defaults.token_env),
        timeout: Duration::from_secs(file.backend.timeout_secs.unwrap_or(60)),
        retries: file.backend.retries.unwrap_or(remote_defaults.retries),
        temperature: file
            .backend
            .temperature
            .unwrap_or(remote_defaults.temperature),
    };

    let embedder_mode = file
        .embedder
        .mode
        .clone()
        .unwrap_or_else(|| "local".to_string());
    if embedder_mode != "local" && embedder_mode != "remote" {
        return Err(Error::Config(format!(
            "embedder mode must be local or remote, not {embedder_mode:?}"
        )));
    }
    let embedder_dimension = file
        .embedder
        .dimension
        .unwrap_or(HashEmbedder::DEFAULT_DIMENSION);
    let embedder_remote = RemoteEmbedderConfig {
        endpoint: file
            .embedder
            .endpoint
            .clone()
            .unwrap_or_else(|| "https://api.openai.com/v1/embeddings".to_string()),
        model: file
            .embedder
            .model
            .clone()
            .unwrap_or_else(|| "text-embedding-ada-002".to_string()),
        token_env: file
            .embedder
            .token_env
            .clone()
            .unwrap_or_else(|| remote.token_env.clone()),
        dimension: embedder_dimension,
        timeout: remote.timeout,
        retries: remote.retries,
    };

    let sandbox_defaults = SandboxConfig::default();
    let sandbox = SandboxConfig {
        compile_cmd: file
            .sandbox
            .compile_cmd
            .clone()
            .unwrap_or(sandbox_defaults.compile_cmd),
        run_cmd: file.sandbox.run_cmd.clone().unwrap_or(sandbox_defaults.run_cmd),
        timeout: Duration::from_secs(file.sandbox.timeout_secs.unwrap_or(30)),
    };

    Ok(Resolved {
        run,
        corpus,
        out_dir,
        backend_mode,
        fixtures,
        remote,
        embedder_mode,
        embedder_dimension,
        embedder_remote,
        sandbox,
    })
}

impl Resolved {
    /// Instantiates the backend bundle. Scripted mode performs zero network
    /// operations and uses simulated time.
    pub fn backends(&self) -> Result<Backends> {
        let embedder: Box<dyn expool_core::backends::Embedder> = match self.embedder_mode.as_str()
        {
            "local" => Box::new(HashEmbedder::new(self.embedder_dimension, self.run.seed)),
            _ => Box::new(RemoteEmbedder::new(self.embedder_remote.clone())),
        };
        match self.backend_mode.as_str() {
            "scripted" => {
                let path = self.fixtures.as_ref().ok_or_else(|| {
                    Error::Config("scripted backend requires a fixtures path".into())
                })?;
                let table = FixtureTable::load(path)?;
                Ok(Backends {
                    agent: Box::new(ScriptedBackend::new(table)),
                    embedder,
                    sandbox: Sandbox::new(self.sandbox.clone()),
                    clock: RunClock::simulated(),
                })
            }
            _ => Ok(Backends {
                agent: Box::new(RemoteBackend::new(self.remote.clone())),
                embedder,
                sandbox: Sandbox::new(self.sandbox.clone()),
                clock: RunClock::wall(),
            }),
        }
    }
}
