//! Versioned JSON documents for trained ensembles.

use serde::{Deserialize, Serialize};

use crate::{
    forecast_rows, BootstrapConfig, FeatureRows, FeatureSpec, ForecastError, ForecastRow, ModelSummary,
    PipelineOutput, TrainedModel,
};

pub const FORMAT_VERSION: u32 = 1;

/// Everything needed to forecast again without refitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleArtifact {
    pub format_version: u32,
    pub features: FeatureSpec,
    pub bootstrap: BootstrapConfig,
    pub models: Vec<TrainedModel>,
    pub weights: Vec<f64>,
    pub baseline: TrainedModel,
    pub summaries: Vec<ModelSummary>,
}

impl EnsembleArtifact {
    pub fn from_output(output: &PipelineOutput, features: &FeatureSpec, bootstrap: &BootstrapConfig) -> Self {
        EnsembleArtifact {
            format_version: FORMAT_VERSION,
            features: features.clone(),
            bootstrap: *bootstrap,
            models: output.models.clone(),
            weights: output.weights.clone(),
            baseline: output.baseline.clone(),
            summaries: output.summaries.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("artifact serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ForecastError> {
        #[derive(Deserialize)]
        struct Version {
            format_version: u32,
        }
        let v: Version = serde_json::from_str(text).map_err(|e| ForecastError::Artifact(e.to_string()))?;
        if v.format_version != FORMAT_VERSION {
            return Err(ForecastError::Artifact(format!(
                "unsupported format_version {}, expected {FORMAT_VERSION}",
                v.format_version
            )));
        }
        let artifact: EnsembleArtifact =
            serde_json::from_str(text).map_err(|e| ForecastError::Artifact(e.to_string()))?;
        if artifact.models.len() != artifact.weights.len() {
            return Err(ForecastError::Artifact(format!(
                "{} models but {} weights",
                artifact.models.len(),
                artifact.weights.len()
            )));
        }
        Ok(artifact)
    }

    /// Ensemble forecast with intervals for `rows`.
    pub fn forecast(&self, rows: &FeatureRows, truth: Option<&[f64]>) -> Result<Vec<ForecastRow>, ForecastError> {
        forecast_rows(&self.models, &self.weights, rows, truth, &self.bootstrap)
    }
}
