//! TOML experiment configuration: schema, validation, and conversion into
//! the library's family, statistic, and geometry types.

use std::path::Path;

use anyhow::{Context, Result, bail};
use serde::{Deserialize, Serialize};

use wishart_gff::analytic::{BetaWeights, OverlapGeometry};
use wishart_gff::rng_ensemble::{CornerFamilySpec, EntryDistribution, FamilySpec, pair_blocks};
use wishart_gff::spectra::StatisticDef;

/// One scale or a schedule of scales.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScaleSchedule {
    One(usize),
    Many(Vec<usize>),
}

impl ScaleSchedule {
    pub fn scales(&self) -> Vec<usize> {
        match self {
            ScaleSchedule::One(l) => vec![*l],
            ScaleSchedule::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub distribution: EntryDistribution,
    pub scale: ScaleSchedule,
    pub replicates: usize,
    pub batches: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairGeometrySection {
    pub mu1: f64,
    pub nu1: f64,
    pub mu2: f64,
    pub nu2: f64,
    pub mu12: f64,
    pub nu12: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CornerFamilySection {
    pub mu: f64,
    pub nu: f64,
    pub levels: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatisticSection {
    pub label: String,
    /// Single level, exclusive with `parts`.
    pub level: Option<f64>,
    /// (level, weight) atoms, exclusive with `level`.
    pub parts: Option<Vec<(f64, f64)>>,
    /// Ascending polynomial coefficients, constant first.
    pub poly: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    /// |z| threshold for a row to pass.
    pub threshold: Option<f64>,
    /// Attach exact-enumeration values where the budget allows.
    pub use_oracle: Option<bool>,
}

impl VerifySection {
    pub fn threshold(&self) -> f64 {
        self.threshold.unwrap_or(4.0)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticSection {
    /// Monomial degrees for the covariance table.
    pub degrees: Option<Vec<usize>>,
    /// Emit the tree-polynomial table up to this edge count.
    pub narayana_max_k: Option<usize>,
    /// Emit the chart round-trip error over a bulk grid.
    pub omega_roundtrip: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    /// Trace powers for exact moments and pairwise exact covariances.
    pub powers: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    pub json: Option<String>,
    pub csv: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunSection,
    pub pair_geometry: Option<PairGeometrySection>,
    pub corner_family: Option<CornerFamilySection>,
    #[serde(default, rename = "statistic")]
    pub statistics: Vec<StatisticSection>,
    pub verify: Option<VerifySection>,
    pub analytic: Option<AnalyticSection>,
    pub oracle: Option<OracleSection>,
    pub output: Option<OutputSection>,
}

/// The family shape a config describes, before realization at a scale.
#[derive(Debug, Clone)]
pub enum FamilyShape {
    Pair(OverlapGeometry),
    Corners { mu: f64, nu: f64, levels: Vec<f64> },
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: ExperimentConfig = toml::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.run.replicates < 2 * self.run.batches || self.run.batches < 2 {
            bail!(
                "need replicates >= 2 * batches >= 4, got R = {}, B = {}",
                self.run.replicates,
                self.run.batches
            );
        }
        if self.run.scale.scales().is_empty() {
            bail!("scale schedule is empty");
        }
        if self.run.scale.scales().contains(&0) {
            bail!("scales must be positive");
        }
        match (&self.pair_geometry, &self.corner_family) {
            (Some(_), Some(_)) => bail!("give either [pair_geometry] or [corner_family], not both"),
            (None, None) => bail!("missing geometry: add [pair_geometry] or [corner_family]"),
            _ => {}
        }
        let shape = self.shape()?;
        let level_keys: Vec<f64> = match &shape {
            FamilyShape::Pair(_) => vec![1.0, 2.0],
            FamilyShape::Corners { levels, .. } => levels.clone(),
        };
        for s in &self.statistics {
            if s.label.is_empty()
                || !s
                    .label
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || "_-.@".contains(c))
            {
                bail!(
                    "statistic label {:?} must be nonempty and use only [A-Za-z0-9_-.@]",
                    s.label
                );
            }
            match (&s.level, &s.parts) {
                (Some(_), Some(_)) => {
                    bail!("statistic {:?}: give level or parts, not both", s.label)
                }
                (None, None) => bail!("statistic {:?}: needs level or parts", s.label),
                _ => {}
            }
            let def = self.statistic_def(s)?;
            def.validate()?;
            for &(level, _) in &def.parts {
                if !level_keys.contains(&level) {
                    bail!(
                        "statistic {:?}: level {level} not in the family (available: {level_keys:?})",
                        s.label
                    );
                }
            }
        }
        let labels: Vec<&str> = self.statistics.iter().map(|s| s.label.as_str()).collect();
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                bail!("duplicate statistic label {l:?}");
            }
        }
        if let Some(t) = self.verify.as_ref().and_then(|v| v.threshold)
            && !(t >= 0.0 && t.is_finite())
        {
            bail!("verify threshold must be >= 0, got {t}");
        }
        Ok(())
    }

    pub fn shape(&self) -> Result<FamilyShape> {
        if let Some(p) = &self.pair_geometry {
            let geom = OverlapGeometry::new(p.mu1, p.nu1, p.mu2, p.nu2, p.mu12, p.nu12)?;
            return Ok(FamilyShape::Pair(geom));
        }
        let c = self.corner_family.as_ref().expect("validated");
        // validate via a trial realization at the first scale
        CornerFamilySpec::new(c.mu, c.nu, c.levels.clone(), self.run.scale.scales()[0])?;
        Ok(FamilyShape::Corners {
            mu: c.mu,
            nu: c.nu,
            levels: c.levels.clone(),
        })
    }

    /// Realizes the configured family at one scale.
    pub fn family_at(&self, scale: usize) -> Result<FamilySpec> {
        Ok(match self.shape()? {
            FamilyShape::Pair(geom) => pair_blocks(&geom, scale)?,
            FamilyShape::Corners { mu, nu, levels } => {
                FamilySpec::Corners(CornerFamilySpec::new(mu, nu, levels, scale)?)
            }
        })
    }

    pub fn statistic_def(&self, s: &StatisticSection) -> Result<StatisticDef> {
        let parts = if let Some(level) = s.level {
            vec![(level, 1.0)]
        } else {
            s.parts.clone().unwrap_or_default()
        };
        Ok(StatisticDef {
            label: s.label.clone(),
            parts,
            poly: s.poly.clone(),
        })
    }

    pub fn statistic_defs(&self) -> Result<Vec<StatisticDef>> {
        self.statistics
            .iter()
            .map(|s| self.statistic_def(s))
            .collect()
    }

    pub fn weights(&self) -> BetaWeights {
        BetaWeights::from_distribution(self.run.distribution)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    const BASE: &str = r#"
        [run]
        seed = 7
        distribution = "real_gaussian"
        scale = 50
        replicates = 100
        batches = 10

        [pair_geometry]
        mu1 = 1.0
        nu1 = 1.0
        mu2 = 1.0
        nu2 = 1.0
        mu12 = 0.75
        nu12 = 0.75

        [[statistic]]
        label = "x1"
        level = 1.0
        poly = [0.0, 1.0]
    "#;

    #[test]
    fn base_config_parses() {
        let cfg = parse(BASE).unwrap();
        assert_eq!(cfg.run.scale.scales(), vec![50]);
        assert_eq!(cfg.statistics.len(), 1);
        assert!(matches!(cfg.shape().unwrap(), FamilyShape::Pair(_)));
    }

    #[test]
    fn scale_schedules_parse_both_ways() {
        let cfg = parse(&BASE.replace("scale = 50", "scale = [50, 100]")).unwrap();
        assert_eq!(cfg.run.scale.scales(), vec![50, 100]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse(&BASE.replace("seed = 7", "seed = 7\nbogus = 1")).unwrap_err();
        assert!(err.to_string().contains("bogus") || format!("{err:#}").contains("bogus"));
    }

    #[test]
    fn too_few_replicates_are_rejected() {
        assert!(parse(&BASE.replace("replicates = 100", "replicates = 19")).is_err());
    }

    #[test]
    fn geometry_sections_are_exclusive() {
        let both = format!("{BASE}\n[corner_family]\nmu = 1.0\nnu = 1.0\nlevels = [0.5, 1.0]\n");
        assert!(parse(&both).is_err());
    }

    #[test]
    fn overlap_larger_than_blocks_is_rejected() {
        assert!(parse(&BASE.replace("mu12 = 0.75", "mu12 = 1.5")).is_err());
    }

    #[test]
    fn statistic_needs_exactly_one_locator() {
        let twice = BASE.replace("level = 1.0", "level = 1.0\nparts = [[1.0, 1.0]]");
        assert!(parse(&twice).is_err());
        let neither = BASE.replace("level = 1.0\n", "");
        assert!(parse(&neither).is_err());
    }

    #[test]
    fn duplicate_labels_are_rejected() {
        let dup =
            format!("{BASE}\n[[statistic]]\nlabel = \"x1\"\nlevel = 1.0\npoly = [0.0, 1.0]\n");
        assert!(parse(&dup).is_err());
    }

    #[test]
    fn corner_config_parses() {
        let corner = BASE
            .replace(
                "[pair_geometry]\n        mu1 = 1.0\n        nu1 = 1.0\n        mu2 = 1.0\n        nu2 = 1.0\n        mu12 = 0.75\n        nu12 = 0.75",
                "[corner_family]\n        mu = 1.0\n        nu = 1.0\n        levels = [0.5, 1.0]",
            )
            .replace("level = 1.0", "parts = [[0.5, 0.5], [1.0, 0.5]]");
        let cfg = parse(&corner).unwrap();
        assert!(matches!(cfg.shape().unwrap(), FamilyShape::Corners { .. }));
        let fam = cfg.family_at(50).unwrap();
        assert_eq!(fam.resolve().unwrap().len(), 2);
    }
}
