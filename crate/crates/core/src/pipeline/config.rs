//! Pipeline configuration (TOML file, overridable by command-line flags).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::Epoch;
use crate::cug::Conditioning;
use crate::error::{Error, Result};
use crate::network::Stratifier;
use crate::regression::{CumulativeWindow, Formula, Term};
use crate::stats::Statistic;

use super::Stage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CugConfig {
    pub replicates: usize,
    pub statistics: Vec<Statistic>,
    pub conditionings: Vec<Conditioning>,
}

impl Default for CugConfig {
    fn default() -> Self {
        CugConfig {
            replicates: crate::cug::DEFAULT_REPLICATES,
            statistics: vec![
                Statistic::EdgewiseReciprocity,
                Statistic::Transitivity,
                Statistic::InDegreeCentralization,
                Statistic::OutDegreeCentralization,
                Statistic::BetweennessCentralization,
            ],
            conditionings: Conditioning::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PcaConfig {
    /// Which strata form the graph set.
    pub stratifier: Stratifier,
    pub components: usize,
    pub centered_scores: bool,
    pub scale_loadings: bool,
}

impl Default for PcaConfig {
    fn default() -> Self {
        PcaConfig {
            stratifier: Stratifier::Role,
            components: 2,
            centered_scores: false,
            scale_loadings: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressionConfig {
    pub terms: Vec<Term>,
    /// Overrides the lexicon's reference cause theme.
    pub cause_reference: Option<String>,
    /// Overrides the lexicon's reference effect theme.
    pub effect_reference: Option<String>,
    pub cum_window: CumulativeWindow,
    pub originals_only: bool,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        RegressionConfig {
            terms: Formula::default().terms,
            cause_reference: None,
            effect_reference: None,
            cum_window: CumulativeWindow::Before,
            originals_only: true,
        }
    }
}

impl RegressionConfig {
    pub fn formula(&self) -> Formula {
        Formula {
            terms: self.terms.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    /// `None` uses the bundled demo lexicon.
    pub lexicon: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub epoch: Epoch,
    /// Root seed for every stochastic step.
    pub seed: Option<u64>,
    pub stratifiers: Vec<Stratifier>,
    /// Rows in the top-narrative table.
    pub top_narratives: usize,
    pub cug: CugConfig,
    pub pca: PcaConfig,
    pub regression: RegressionConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: None,
            lexicon: None,
            out_dir: PathBuf::from("out"),
            epoch: Epoch::default(),
            seed: None,
            stratifiers: vec![Stratifier::Total, Stratifier::Month, Stratifier::Role],
            top_narratives: 5,
            cug: CugConfig::default(),
            pca: PcaConfig::default(),
            regression: RegressionConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Reads a config file. Relative corpus and lexicon paths resolve
    /// against the file's directory; `out_dir` stays relative to the
    /// working directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.corpus, &mut cfg.lexicon].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Checks everything `stage` needs before any work starts.
    pub fn validate(&self, stage: Stage) -> Result<()> {
        let stages = stage.expand();
        let needs = |s: Stage| stages.contains(&s);
        if needs(Stage::Extract) || needs(Stage::Network) || needs(Stage::Regress) {
            match &self.corpus {
                None => return Err(Error::Config("a corpus path is required".into())),
                Some(p) if !p.is_file() => {
                    return Err(Error::Config(format!("corpus {} does not exist", p.display())))
                }
                _ => {}
            }
        }
        if let Some(p) = &self.lexicon {
            if !p.is_file() {
                return Err(Error::Config(format!("lexicon {} does not exist", p.display())));
            }
        }
        if (needs(Stage::Stats) || needs(Stage::Cug)) && self.seed.is_none() {
            return Err(Error::Config("a seed is required for CUG tests".into()));
        }
        if self.cug.replicates == 0 {
            return Err(Error::Config("CUG replicates must be at least 1".into()));
        }
        if self.pca.components == 0 {
            return Err(Error::Config("PCA needs at least one component".into()));
        }
        if self.top_narratives == 0 {
            return Err(Error::Config("top_narratives must be at least 1".into()));
        }
        if needs(Stage::Network) {
            let has = |s: Stratifier| self.stratifiers.contains(&s);
            if !has(Stratifier::Total) {
                return Err(Error::Config("stratifiers must include total".into()));
            }
            if stages.contains(&Stage::Regress) && !has(Stratifier::Month) {
                return Err(Error::Config("regression needs the month stratifier".into()));
            }
            if stages.contains(&Stage::Pca) && !has(self.pca.stratifier) {
                return Err(Error::Config(format!(
                    "PCA stratifier {:?} is not among the network stratifiers",
                    self.pca.stratifier
                )));
            }
        }
        Ok(())
    }

    /// Digest of the settings that affect artifact contents. Paths are
    /// left out so runs from different directories compare equal.
    pub fn settings_digest(&self) -> String {
        let mut c = self.clone();
        c.corpus = None;
        c.lexicon = None;
        c.out_dir = PathBuf::new();
        let json = serde_json::to_string(&c).expect("config serializes");
        super::io::sha256_hex(json.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_partial_toml() {
        let cfg = PipelineConfig::from_toml(
            r#"
            seed = 7
            stratifiers = ["total", "month"]
            [cug]
            replicates = 50
            statistics = ["density"]
            [regression]
            cum_window = "through"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.cug.replicates, 50);
        assert_eq!(cfg.cug.statistics, vec![Statistic::Density]);
        assert_eq!(cfg.regression.cum_window, CumulativeWindow::Through);
        assert_eq!(cfg.pca.components, 2);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(PipelineConfig::from_toml("sede = 1").is_err());
    }

    #[test]
    fn stochastic_stages_need_a_seed() {
        let cfg = PipelineConfig::default();
        let err = cfg.validate(Stage::Cug).unwrap_err();
        assert!(err.to_string().contains("seed"));
        assert!(PipelineConfig { seed: Some(1), ..cfg }.validate(Stage::Cug).is_ok());
    }
}
