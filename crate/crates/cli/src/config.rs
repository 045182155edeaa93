use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fairfront_core::io;
use fairfront_core::population::{estimate_from_samples, GroupDensity};
use fairfront_core::{
    discretize_beta, preset_by_name, BinnedDensity, DsMatrices, FairnessSpec, Justifier, PopulationModel, Sample,
    UtilityMatrix, DEFAULT_BINS,
};
use serde::Deserialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// One JSON document describing a run.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub population: Option<PopulationSource>,
    pub n_bins: Option<usize>,
    pub dm: Option<UtilityMatrix>,
    pub ds: Option<DsSpec>,
    pub fairness: Option<Value>,
    pub grid_m: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(skip)]
    base_dir: PathBuf,
}

/// Exactly one way of obtaining the per-group score densities.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PopulationSource {
    Beta(BTreeMap<String, BetaGroup>),
    Binned(BTreeMap<String, BinnedGroup>),
    PopulationFile(PathBuf),
    Samples(PathBuf),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaGroup {
    pub alpha: f64,
    pub beta: f64,
    pub share: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinnedGroup {
    pub share: f64,
    pub weights: Vec<f64>,
}

/// A preset metric name or explicit matrices.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DsSpec {
    Preset(String),
    Matrices(DsMatrices),
}

/// The loaded population, plus the raw samples when it came from a sample file.
pub struct Population {
    pub model: PopulationModel,
    pub samples: Option<Vec<Sample>>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let mut cfg: RunConfig = io::load_json(path).map_err(CliError::config)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// Paths inside the config are relative to the config file.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn n_bins(&self, flag: Option<usize>) -> usize {
        flag.or(self.n_bins).unwrap_or(DEFAULT_BINS)
    }

    pub fn population(&self, bins_flag: Option<usize>) -> CliResult<Population> {
        let source = self
            .population
            .as_ref()
            .ok_or_else(|| CliError::config_msg("config has no `population`"))?;
        let n_bins = self.n_bins(bins_flag);
        let model = match source {
            PopulationSource::Beta(groups) => {
                let mut parts = Vec::with_capacity(groups.len());
                for (label, g) in groups {
                    let w = discretize_beta(g.alpha, g.beta, n_bins)
                        .map_err(|e| CliError::config_msg(format!("population.beta.{label}: {e}")))?;
                    parts.push(GroupDensity {
                        label: label.clone(),
                        share: g.share,
                        weights: w,
                    });
                }
                PopulationModel::new(parts).map_err(CliError::config)?
            }
            PopulationSource::Binned(groups) => {
                let mut parts = Vec::with_capacity(groups.len());
                for (label, g) in groups {
                    if bins_flag.or(self.n_bins).is_some_and(|n| n != g.weights.len()) {
                        return Err(CliError::config_msg(format!(
                            "population.binned.{label} has {} weights but n_bins is {n_bins}",
                            g.weights.len()
                        )));
                    }
                    let w = BinnedDensity::new(g.weights.clone())
                        .map_err(|e| CliError::config_msg(format!("population.binned.{label}: {e}")))?;
                    parts.push(GroupDensity {
                        label: label.clone(),
                        share: g.share,
                        weights: w,
                    });
                }
                PopulationModel::new(parts).map_err(CliError::config)?
            }
            PopulationSource::PopulationFile(path) => {
                let path = self.resolve(path);
                let model: PopulationModel = io::load_json(&path).map_err(CliError::data)?;
                if bins_flag.or(self.n_bins).is_some_and(|n| n != model.n_bins()) {
                    return Err(CliError::config_msg(format!(
                        "{} has {} bins but n_bins is {n_bins}",
                        path.display(),
                        model.n_bins()
                    )));
                }
                model
            }
            PopulationSource::Samples(path) => {
                let samples = io::load_samples(&self.resolve(path)).map_err(CliError::data)?;
                let model = estimate_from_samples(&samples, n_bins).map_err(CliError::data)?;
                return Ok(Population {
                    model,
                    samples: Some(samples),
                });
            }
        };
        Ok(Population { model, samples: None })
    }

    pub fn dm(&self) -> CliResult<UtilityMatrix> {
        let m = self.dm.ok_or_else(|| CliError::config_msg("config has no `dm` matrix"))?;
        m.into_dm().map_err(|e| CliError::config_msg(format!("dm: {e}")))
    }

    /// DS matrices and fairness spec. A preset supplies the justifier when
    /// `fairness` omits it; an explicit, different justifier is an error.
    pub fn fairness(&self) -> CliResult<(DsMatrices, FairnessSpec)> {
        let ds = self.ds.as_ref().ok_or_else(|| CliError::config_msg("config has no `ds`"))?;
        let mut spec = match &self.fairness {
            Some(Value::Object(map)) => map.clone(),
            Some(_) => return Err(CliError::config_msg("`fairness` must be an object")),
            None => serde_json::Map::new(),
        };
        spec.entry("principle").or_insert_with(|| Value::from("egalitarian_abs_diff"));
        let matrices = match ds {
            DsSpec::Matrices(m) => m.clone(),
            DsSpec::Preset(name) => {
                let p = preset_by_name(name).map_err(|e| CliError::config_msg(format!("ds: {e}")))?;
                let preset_j = serde_json::to_value(p.justifier).expect("justifier serializes");
                if let Some(given) = spec.get("justifier") {
                    let given: Justifier = serde_json::from_value(given.clone())
                        .map_err(|e| CliError::config_msg(format!("fairness.justifier: {e}")))?;
                    if given != p.justifier {
                        return Err(CliError::config_msg(format!(
                            "fairness.justifier conflicts with preset `{name}`"
                        )));
                    }
                }
                spec.insert("justifier".into(), preset_j);
                p.evaluation_matrix().into()
            }
        };
        matrices.validate().map_err(|e| CliError::config_msg(format!("ds: {e}")))?;
        Ok((matrices, parse_spec(&Value::Object(spec))?))
    }
}

fn parse_spec(v: &Value) -> CliResult<FairnessSpec> {
    serde_json::from_value(v.clone()).map_err(|e| CliError::config_msg(format!("fairness: {e}")))
}
