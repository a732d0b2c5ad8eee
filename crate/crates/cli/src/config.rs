//! Run configuration: a TOML file that fully determines a run and is
//! copied into every output directory for provenance.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dasslab_core::catalog::Subscale;
use dasslab_core::gateway::{CollectConfig, HttpBackendConfig, SyntheticRespondentConfig};
use dasslab_core::lexi::{AggregationMode, Dimension};
use dasslab_core::net::{CorrelationMethod, EgaConfig, FilterChoice};
use dasslab_core::prompts::Valence;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub backend: BackendSection,
    pub analysis: AnalysisSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            run: RunSection::default(),
            backend: BackendSection::default(),
            analysis: AnalysisSection::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Prompt grid iterations per cell. 300 reproduces the full-scale
    /// dataset; the default keeps desk runs fast while leaving each
    /// gender x role persona with enough conversations (iterations x 15)
    /// for a stable network.
    pub iterations: u32,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Persona repetitions inside each prompt.
    pub repetitions: usize,
    /// Optional custom template / instrument files.
    pub template: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            iterations: 20,
            seed: 42,
            out_dir: PathBuf::from("out"),
            repetitions: 3,
            template: None,
            catalog: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendSection {
    /// `synthetic` or `openai`.
    pub kind: String,
    pub concurrency: usize,
    pub max_retries: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,

    // Synthetic respondent knobs.
    pub latent_sd: f64,
    /// Latent mean preset: `three_factor`, `valence_sensitive` or
    /// `uniform`.
    pub preset: String,
    /// Planted lexicon slopes: (subscale, dimension, slope).
    pub lexicon_bias: Vec<(Subscale, Dimension, f64)>,

    // OpenAI-compatible endpoint knobs.
    pub base_url: String,
    pub model: String,
    pub temperature: Option<f64>,
    pub api_key_env: String,
    pub timeout_secs: u64,
}

impl Default for BackendSection {
    fn default() -> Self {
        let http = HttpBackendConfig::default();
        BackendSection {
            kind: "synthetic".into(),
            concurrency: 4,
            max_retries: 5,
            base_delay_ms: 500,
            max_delay_ms: 30_000,
            latent_sd: 0.6,
            preset: "valence_sensitive".into(),
            lexicon_bias: Vec::new(),
            base_url: http.base_url,
            model: http.model,
            temperature: http.temperature,
            api_key_env: http.api_key_env,
            timeout_secs: http.timeout_secs,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    /// `pearson` or `spearman`.
    pub correlation: String,
    /// `glasso` or `tmfg`.
    pub filter: String,
    pub gamma: f64,
    pub grid_points: usize,
    /// 0 skips the stability analysis.
    pub bootstrap_reps: usize,
    pub lexicon: Option<PathBuf>,
    /// Valence slice for the lexicon heatmap: `neutral`, `positive`,
    /// `negative` or `all`.
    pub heatmap_valence: String,
    pub heatmap_include_role: bool,
    /// `mean` or `concatenate`.
    pub aggregation: String,
    pub significance_alpha: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            correlation: "pearson".into(),
            filter: "glasso".into(),
            gamma: 0.5,
            grid_points: 100,
            bootstrap_reps: 0,
            lexicon: None,
            heatmap_valence: "neutral".into(),
            heatmap_include_role: false,
            aggregation: "mean".into(),
            significance_alpha: 0.01,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| anyhow::anyhow!("bad config {}: {e}", path.display()))
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, toml::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn collect_config(&self, journal: Option<PathBuf>) -> CollectConfig {
        CollectConfig {
            max_retries: self.backend.max_retries,
            base_delay_ms: self.backend.base_delay_ms,
            max_delay_ms: self.backend.max_delay_ms,
            concurrency: self.backend.concurrency,
            journal,
        }
    }

    pub fn synthetic_config(&self) -> anyhow::Result<SyntheticRespondentConfig> {
        let base = match self.backend.preset.as_str() {
            "three_factor" => SyntheticRespondentConfig::three_factor(self.run.seed),
            "valence_sensitive" => SyntheticRespondentConfig::valence_sensitive(self.run.seed),
            "uniform" => SyntheticRespondentConfig::default().with_seed(self.run.seed),
            other => anyhow::bail!("unknown synthetic preset {other:?}"),
        };
        let mut config = base.with_latent_sd(self.backend.latent_sd);
        for &(subscale, dimension, slope) in &self.backend.lexicon_bias {
            config = config.with_bias(subscale, dimension, slope);
        }
        Ok(config)
    }

    pub fn http_config(&self) -> HttpBackendConfig {
        HttpBackendConfig {
            base_url: self.backend.base_url.clone(),
            model: self.backend.model.clone(),
            temperature: self.backend.temperature,
            api_key_env: self.backend.api_key_env.clone(),
            timeout_secs: self.backend.timeout_secs,
        }
    }

    pub fn ega_config(&self) -> anyhow::Result<EgaConfig> {
        let method = match self.analysis.correlation.as_str() {
            "pearson" => CorrelationMethod::Pearson,
            "spearman" => CorrelationMethod::Spearman,
            other => anyhow::bail!("unknown correlation method {other:?}"),
        };
        let filter = match self.analysis.filter.as_str() {
            "glasso" => FilterChoice::Glasso {
                gamma: self.analysis.gamma,
                grid_points: self.analysis.grid_points,
            },
            "tmfg" => FilterChoice::Tmfg,
            other => anyhow::bail!("unknown filter {other:?}"),
        };
        Ok(EgaConfig {
            method,
            filter,
            louvain_seed: None,
        })
    }

    pub fn aggregation_mode(&self) -> anyhow::Result<AggregationMode> {
        match self.analysis.aggregation.as_str() {
            "mean" => Ok(AggregationMode::MeanOfSentences),
            "concatenate" => Ok(AggregationMode::Concatenate),
            other => anyhow::bail!("unknown aggregation mode {other:?}"),
        }
    }

    pub fn heatmap_valence(&self) -> anyhow::Result<Option<Valence>> {
        match self.analysis.heatmap_valence.as_str() {
            "all" => Ok(None),
            other => Ok(Some(other.parse().map_err(|e| anyhow::anyhow!("{e}"))?)),
        }
    }
}
