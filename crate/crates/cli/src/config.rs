//! Breakdown experiment configs.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use otdepth::breakdown::{HarnessOptions, Strategy};
use otdepth::io::read_cloud_file;
use otdepth::reference::generate;
use otdepth::{DepthValue, PointCloud, RefSpec};
use serde::{Deserialize, Serialize};

pub const FIGURE1: &str = include_str!("../configs/figure1.json");
pub const QUANTILE1D: &str = include_str!("../configs/quantile1d.json");

/// A point cloud given inline, as a CSV path, or as a generator spec.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CloudSource {
    Scalars(Vec<f64>),
    Rows(Vec<Vec<f64>>),
    Generated(RefSpec),
    Path(PathBuf),
}

impl CloudSource {
    pub fn load(&self, base: &Path) -> Result<PointCloud> {
        Ok(match self {
            CloudSource::Scalars(v) => PointCloud::from_scalars(v)?,
            CloudSource::Rows(rows) => PointCloud::from_rows(rows.clone())?,
            CloudSource::Generated(spec) => generate(spec)?,
            CloudSource::Path(p) => {
                let path = base.join(p);
                read_cloud_file(&path).with_context(|| format!("reading {}", path.display()))?
            }
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BreakdownConfig {
    #[serde(rename = "ref")]
    pub reference: CloudSource,
    /// Defaults to the reference cloud.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<CloudSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<DepthValue>,
    #[serde(default)]
    pub median: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategies: Option<Vec<Strategy>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell_range: Option<(usize, usize)>,
}

/// Which statistic a config asks about.
#[derive(Clone, Copy, Debug)]
pub enum Estimand {
    Map(usize),
    Contour(DepthValue),
    Median,
}

impl BreakdownConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).context("invalid breakdown config")
    }

    /// Reads a config file, or one of the packaged configs by name.
    /// Returns the config and the directory relative paths resolve against.
    pub fn locate(name: &str) -> Result<(Self, PathBuf)> {
        let path = Path::new(name);
        if path.is_file() {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {name}"))?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            return Ok((Self::parse(&text)?, base));
        }
        let text = match name.trim_end_matches(".json") {
            "figure1" => FIGURE1,
            "quantile1d" => QUANTILE1D,
            _ => bail!("no config file or packaged config named {name:?}"),
        };
        Ok((Self::parse(text)?, PathBuf::new()))
    }

    pub fn estimand(&self) -> Result<Estimand> {
        match (self.index, self.tau, self.median) {
            (Some(i), None, false) => Ok(Estimand::Map(i)),
            (None, Some(t), false) => Ok(Estimand::Contour(t)),
            (None, None, true) => Ok(Estimand::Median),
            _ => bail!("a config needs exactly one of \"index\", \"tau\" or \"median\": true"),
        }
    }

    pub fn options(&self) -> HarnessOptions {
        let defaults = HarnessOptions::default();
        HarnessOptions {
            strategies: self.strategies.clone().unwrap_or(defaults.strategies),
            seed: self.seed,
            schedule: self.schedule.clone().unwrap_or(defaults.schedule),
            ell_range: self.ell_range,
            audit: true,
        }
    }

    pub fn clouds(&self, base: &Path) -> Result<(PointCloud, PointCloud)> {
        let reference = self.reference.load(base)?;
        let target = match &self.target {
            Some(t) => t.load(base)?,
            None => reference.clone(),
        };
        Ok((reference, target))
    }
}

/// Parses `"1e2,1e3,..."`.
pub fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|e| anyhow::anyhow!("invalid list entry {s:?}: {e}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packaged_configs_parse() {
        let (fig, _) = BreakdownConfig::locate("figure1").unwrap();
        assert!(matches!(fig.estimand().unwrap(), Estimand::Map(0)));
        let (q, _) = BreakdownConfig::locate("quantile1d.json").unwrap();
        let (r, t) = q.clouds(Path::new("")).unwrap();
        assert_eq!((r.len(), t.dim()), (5, 1));
        assert!(BreakdownConfig::locate("nope").is_err());
    }

    #[test]
    fn estimand_must_be_unique() {
        let c = BreakdownConfig::parse(r#"{"ref": [1, 2], "index": 0, "median": true}"#).unwrap();
        assert!(c.estimand().is_err());
        let c = BreakdownConfig::parse(r#"{"ref": [[0, 0], [1, 1]], "tau": "1/2"}"#).unwrap();
        assert!(matches!(c.estimand().unwrap(), Estimand::Contour(_)));
        assert!(BreakdownConfig::parse(r#"{"ref": [1], "bogus": 1}"#).is_err());
    }

    #[test]
    fn sources() {
        let c = BreakdownConfig::parse(
            r#"{"ref": {"kind": "halton_cube", "n": 4, "dim": 2}, "target": "data/x.csv", "median": true}"#,
        )
        .unwrap();
        assert!(matches!(c.reference, CloudSource::Generated(_)));
        assert!(matches!(c.target, Some(CloudSource::Path(_))));
        assert_eq!(parse_list::<f64>("1e2, 1e3").unwrap(), vec![100.0, 1000.0]);
        assert!(parse_list::<f64>("1e2,x").is_err());
    }
}
