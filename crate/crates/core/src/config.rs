//! TOML configuration: model, drift, diffusion, solver, noise and experiment sections.

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{config, Error, Result};
use crate::fbm::{fbm_from_wiener, sample_wiener, FbmPath};
use crate::function_spaces::{DiffusionField, HolderDrift};
use crate::grid::TimeGrid;
use crate::roughpath::LiftKind;
use crate::solver::{Noise, NoiseOptions, PartitionSpec, Scheme, SolveConfig};

pub const YOUNG_DEFAULT: &str = include_str!("../../../configs/young_default.toml");
pub const ROUGH_DEFAULT: &str = include_str!("../../../configs/rough_default.toml");
pub const SMOOTH_DEFAULT: &str = include_str!("../../../configs/smooth_default.toml");
pub const WEAK_DEFAULT: &str = include_str!("../../../configs/weak_default.toml");

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: ModelSection,
    pub drift: DriftSection,
    #[serde(default)]
    pub diffusion: DiffusionSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub experiments: ExperimentSection,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub hurst: f64,
    pub dim: usize,
    pub n_steps: usize,
    #[serde(default = "one")]
    pub t_end: f64,
    pub x0: Vec<f64>,
    /// Stopping threshold.
    pub k: Option<f64>,
    /// Initial time, rounded to the nearest grid node.
    #[serde(default)]
    pub s0: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
pub enum DriftKind {
    Zero,
    Constant,
    Smooth,
    Power,
    Lacunary,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DriftSection {
    pub family: DriftKind,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    pub value: Option<Vec<f64>>,
    pub frequency: Option<f64>,
    pub phases: Option<Vec<f64>>,
    pub radius: Option<f64>,
    pub center: Option<Vec<f64>>,
    pub direction: Option<Vec<f64>>,
    pub levels: Option<u32>,
    pub frequency_direction: Option<Vec<f64>>,
    /// Mollification level applied before solving.
    pub level: Option<u32>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
pub enum DiffusionKind {
    #[default]
    Sin,
    Identity,
    Zero,
    Linear,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DiffusionSection {
    #[serde(default)]
    pub kind: DiffusionKind,
    pub eps: Option<f64>,
    pub psi: Option<f64>,
    /// Slope of the one-dimensional linear field.
    pub slope: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub scheme: Option<Scheme>,
    #[serde(default = "uniform")]
    pub partition: String,
    #[serde(default = "one_usize")]
    pub stride: usize,
    #[serde(default)]
    pub broken: bool,
}

fn uniform() -> String {
    "uniform".into()
}

fn one_usize() -> usize {
    1
}

impl Default for SolverSection {
    fn default() -> Self {
        Self { scheme: None, partition: uniform(), stride: 1, broken: false }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default = "tail")]
    pub tail_start: f64,
    #[serde(default = "sixteen")]
    pub refinement: usize,
    #[serde(default = "geometric")]
    pub lift: String,
}

fn tail() -> f64 {
    -8.0
}

fn sixteen() -> usize {
    16
}

fn geometric() -> String {
    "geometric".into()
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { tail_start: tail(), refinement: sixteen(), lift: geometric() }
    }
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub seeds: Option<String>,
    pub levels: Option<Vec<u32>>,
    pub k_values: Option<Vec<f64>>,
    pub u0: Option<f64>,
    pub strides: Option<Vec<usize>>,
    pub eps: Option<Vec<f64>>,
    pub control_direction: Option<Vec<f64>>,
    /// Seeds (from the front of the list) that also run the sewing reconstruction.
    pub sewing_seeds: Option<usize>,
    pub mc_samples: Option<usize>,
}

/// Parses `a..b` (inclusive), `a` or a comma list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::Parse(format!("bad seed list `{s}`"));
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if b < a {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect()
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let c: Config = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        c.check()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn young_default() -> Self {
        Self::from_toml_str(YOUNG_DEFAULT).expect("shipped config parses")
    }

    pub fn rough_default() -> Self {
        Self::from_toml_str(ROUGH_DEFAULT).expect("shipped config parses")
    }

    pub fn smooth_default() -> Self {
        Self::from_toml_str(SMOOTH_DEFAULT).expect("shipped config parses")
    }

    pub fn weak_default() -> Self {
        Self::from_toml_str(WEAK_DEFAULT).expect("shipped config parses")
    }

    fn check(&self) -> Result<()> {
        if self.model.x0.len() != self.model.dim {
            return config("x0 must have `dim` entries");
        }
        if self.model.n_steps == 0 {
            return config("n_steps must be positive");
        }
        self.drift()?;
        self.sigma()?;
        self.partition()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(0.0, self.model.t_end, self.model.n_steps)
    }

    pub fn drift(&self) -> Result<HolderDrift> {
        let s = &self.drift;
        let d = self.model.dim;
        let vec_or = |v: &Option<Vec<f64>>, default: Vec<f64>| -> Result<Vec<f64>> {
            let v = v.clone().unwrap_or(default);
            if v.len() != d {
                return config(format!("drift vectors need {d} entries"));
            }
            Ok(v)
        };
        let mut e1 = vec![0.0; d];
        e1[0] = 1.0;
        match s.family {
            DriftKind::Zero => Ok(HolderDrift::zero(d)),
            DriftKind::Constant => Ok(HolderDrift::constant(vec_or(&s.value, vec![0.0; d])?)),
            DriftKind::Smooth => Ok(HolderDrift::smooth(
                s.amplitude,
                s.frequency.unwrap_or(1.0),
                vec_or(&s.phases, vec![0.0; d])?,
                s.alpha,
            )),
            DriftKind::Power => HolderDrift::power(
                vec_or(&s.center, vec![0.0; d])?,
                vec_or(&s.direction, e1.clone())?,
                s.amplitude,
                s.radius.unwrap_or(1.0),
                s.alpha,
            ),
            DriftKind::Lacunary => HolderDrift::lacunary(
                s.amplitude,
                s.alpha,
                s.levels.unwrap_or(12),
                vec_or(&s.frequency_direction, e1.clone())?,
                vec_or(&s.direction, e1)?,
            ),
        }
    }

    pub fn sigma(&self) -> Result<DiffusionField> {
        let d = self.model.dim;
        match self.diffusion.kind {
            DiffusionKind::Sin => DiffusionField::sin_perturbed(d, self.diffusion.eps.unwrap_or(0.1), self.diffusion.psi.unwrap_or(0.9)),
            DiffusionKind::Identity => Ok(DiffusionField::identity(d)),
            DiffusionKind::Zero => Ok(DiffusionField::zero(d, d)),
            DiffusionKind::Linear => {
                if d != 1 {
                    return config("the linear diffusion field is one-dimensional");
                }
                Ok(DiffusionField::linear_1d(self.diffusion.slope.unwrap_or(1.0)))
            }
        }
    }

    pub fn partition(&self) -> Result<PartitionSpec> {
        let stride = self.solver.stride;
        match self.solver.partition.as_str() {
            "uniform" => Ok(PartitionSpec::Uniform { stride }),
            "nonuniform" => Ok(PartitionSpec::NonUniform { stride }),
            other => config(format!("unknown partition `{other}`")),
        }
    }

    pub fn noise_options(&self) -> Result<NoiseOptions> {
        let lift = match self.noise.lift.as_str() {
            "geometric" => LiftKind::Geometric,
            "ito" => LiftKind::Ito,
            other => return config(format!("unknown lift `{other}`")),
        };
        Ok(NoiseOptions { tail_start: self.noise.tail_start, refinement: self.noise.refinement, lift })
    }

    pub fn sample_noise(&self, seed: u64) -> Result<Arc<Noise>> {
        Noise::sample(self.model.hurst, self.grid()?, self.model.dim, seed, self.noise_options()?)
    }

    /// fBm on the config grid itself, without refinement or lift.
    pub fn sample_fbm(&self, seed: u64) -> Result<FbmPath> {
        let w = sample_wiener(self.grid()?, self.model.dim, seed, self.noise.tail_start)?;
        fbm_from_wiener(&w, self.model.hurst)
    }

    pub fn solve_config(&self) -> Result<SolveConfig> {
        let drift = self.drift()?;
        let regime = crate::roughpath::Regime::of(self.model.hurst, drift.alpha)?;
        let scheme = self.solver.scheme.unwrap_or(Scheme::pair_for(regime).0);
        let grid = self.grid()?;
        let mut cfg = SolveConfig::new(self.model.hurst, self.model.x0.clone(), drift, self.sigma()?, scheme);
        cfg.s0 = grid.nearest_index(self.model.s0);
        cfg.level = self.drift.level;
        cfg.partition = self.partition()?;
        cfg.k = self.model.k;
        cfg.broken = self.solver.broken;
        Ok(cfg)
    }

    pub fn seeds(&self) -> Result<Vec<u64>> {
        parse_seeds(self.experiments.seeds.as_deref().unwrap_or("1"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_defaults_parse() {
        for (c, h) in [
            (Config::young_default(), 0.75),
            (Config::rough_default(), 0.45),
            (Config::smooth_default(), 1.3),
            (Config::weak_default(), 0.45),
        ] {
            assert_eq!(c.model.hurst, h);
            assert!(c.solve_config().is_ok());
        }
        assert_eq!(Config::young_default().seeds().unwrap().len(), 20);
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        assert!(Config::from_toml_str("[model]\nhurst = 0.7").is_err());
        let bad = YOUNG_DEFAULT.replace("family = \"power\"", "family = \"cubic\"");
        assert!(Config::from_toml_str(&bad).is_err());
        let typo = YOUNG_DEFAULT.replace("stride = 1", "strid = 1");
        assert!(Config::from_toml_str(&typo).is_err());
        assert!(parse_seeds("3..1").is_err());
        assert_eq!(parse_seeds("2, 5").unwrap(), vec![2, 5]);
    }
}
