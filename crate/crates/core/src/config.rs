//! Run configuration, read from a sectioned `key = value` (TOML) file.
//!
//! Every key has a default equal to the 97x25 benchmark, so an empty file is
//! a valid configuration. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adapt::RChoice;
use crate::diffusion::BcCase;
use crate::error::{Error, Result};
use crate::mesh::Rect;
use crate::random_field::VarianceConvention;

/// Largest accepted 1-based sparse-grid level.
pub const MAX_LEVEL: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Geometry {
    pub x1_min: f64,
    pub x1_max: f64,
    pub x2_min: f64,
    pub x2_max: f64,
    pub n1: usize,
    pub n2: usize,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry { x1_min: 0.0, x1_max: 240.0, x2_min: 0.0, x2_max: 60.0, n1: 97, n2: 25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Kernel {
    pub a0: f64,
    pub sigma_a: f64,
    pub l1: f64,
    pub l2: f64,
    pub lognormal_variance_convention: VarianceConvention,
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel { a0: 5.0, sigma_a: 2.5, l1: 24.0, l2: 20.0, lognormal_variance_convention: VarianceConvention::Published }
    }
}

/// `r = 3`, `r = "auto"` or one value per subdomain `r = [3, 3, 2, ...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RSetting {
    Fixed(usize),
    PerSubdomain(Vec<usize>),
    Named(String),
}

impl RSetting {
    pub fn to_choice(&self) -> Result<RChoice> {
        match self {
            RSetting::Fixed(r) => Ok(RChoice::Fixed(*r)),
            RSetting::PerSubdomain(v) => Ok(RChoice::PerSubdomain(v.clone())),
            RSetting::Named(s) if s == "auto" => Ok(RChoice::Auto),
            RSetting::Named(s) => Err(Error::invalid(format!("unknown r setting {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Stochastic {
    pub d: usize,
    pub p: usize,
    /// 1-based sparse-grid levels.
    pub paper_level_full: usize,
    pub paper_level_coarse: usize,
    pub eta_level: usize,
    pub r: RSetting,
    pub coarse_spatial_factor: usize,
}

impl Default for Stochastic {
    fn default() -> Self {
        Stochastic {
            d: 10,
            p: 3,
            paper_level_full: 5,
            paper_level_coarse: 3,
            eta_level: 5,
            r: RSetting::Fixed(3),
            coarse_spatial_factor: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Partition {
    pub nx: usize,
    pub ny: usize,
}

impl Default for Partition {
    fn default() -> Self {
        Partition { nx: 4, ny: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcName {
    Mixed,
    Dirichlet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub bc: BcName,
    /// Constant source term.
    pub source: f64,
}

impl Default for ProblemSection {
    fn default() -> Self {
        ProblemSection { bc: BcName::Mixed, source: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Pdf {
    pub points: Vec<[f64; 2]>,
    pub samples: usize,
}

impl Default for Pdf {
    fn default() -> Self {
        Pdf {
            points: vec![
                [24.0, 15.0],
                [81.0, 15.0],
                [150.0, 15.0],
                [210.0, 15.0],
                [210.0, 45.0],
                [150.0, 45.0],
                [81.0, 45.0],
                [24.0, 45.0],
            ],
            samples: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Run {
    pub seed: u64,
    pub mc_samples: usize,
    pub workers: usize,
    pub output_dir: PathBuf,
}

impl Default for Run {
    fn default() -> Self {
        Run { seed: 2024, mc_samples: 10_000, workers: 1, output_dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: Geometry,
    pub kernel: Kernel,
    pub stochastic: Stochastic,
    pub partition: Partition,
    pub problem: ProblemSection,
    pub pdf: Pdf,
    pub run: Run,
}

impl RunConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Parse { path: origin.to_string(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Check every constraint and report all violations together.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let g = &self.geometry;
        if !(g.x1_max > g.x1_min) || !(g.x2_max > g.x2_min) {
            errs.push("geometry: box must have positive extent".to_string());
        }
        if g.n1 < 2 || g.n2 < 2 {
            errs.push("geometry: n1 and n2 must be at least 2".to_string());
        }
        let k = &self.kernel;
        if !(k.a0 > 0.0) {
            errs.push("kernel: a0 must be positive".to_string());
        }
        if !(k.sigma_a >= 0.0) {
            errs.push("kernel: sigma_a must be non-negative".to_string());
        }
        if !(k.l1 > 0.0) || !(k.l2 > 0.0) {
            errs.push("kernel: correlation lengths must be positive".to_string());
        }
        let s = &self.stochastic;
        if s.d == 0 {
            errs.push("stochastic: d must be positive".to_string());
        } else if g.n1 >= 2 && g.n2 >= 2 && s.d > g.n1 * g.n2 {
            errs.push("stochastic: d exceeds the number of grid nodes".to_string());
        }
        if s.p == 0 {
            errs.push("stochastic: p must be positive".to_string());
        }
        for (name, level) in [
            ("paper_level_full", s.paper_level_full),
            ("paper_level_coarse", s.paper_level_coarse),
            ("eta_level", s.eta_level),
        ] {
            if level == 0 || level > MAX_LEVEL {
                errs.push(format!("stochastic: {name} must lie in 1..={MAX_LEVEL}"));
            }
        }
        if s.paper_level_coarse == 1 {
            errs.push("stochastic: paper_level_coarse must be at least 2 for a first-order projection".to_string());
        }
        let parts = self.partition.nx * self.partition.ny;
        match &s.r {
            RSetting::Fixed(r) => {
                if *r == 0 || *r > s.d {
                    errs.push(format!("stochastic: r = {r} must lie in 1..=d"));
                }
            }
            RSetting::PerSubdomain(v) => {
                if v.len() != parts {
                    errs.push(format!("stochastic: r lists {} values for {parts} subdomains", v.len()));
                }
                if v.iter().any(|&r| r == 0 || r > s.d) {
                    errs.push("stochastic: every r must lie in 1..=d".to_string());
                }
            }
            RSetting::Named(name) if name == "auto" => {}
            RSetting::Named(name) => errs.push(format!("stochastic: unknown r setting {name:?}")),
        }
        let f = s.coarse_spatial_factor;
        if f == 0 {
            errs.push("stochastic: coarse_spatial_factor must be positive".to_string());
        } else if g.n1 >= 2 && g.n2 >= 2 && ((g.n1 - 1) % f != 0 || (g.n2 - 1) % f != 0) {
            errs.push("stochastic: coarse_spatial_factor must divide both cell counts".to_string());
        }
        let pt = &self.partition;
        if pt.nx == 0 || pt.ny == 0 {
            errs.push("partition: nx and ny must be positive".to_string());
        } else if g.n1 >= 2 && g.n2 >= 2 && ((g.n1 - 1) % pt.nx != 0 || (g.n2 - 1) % pt.ny != 0) {
            errs.push("partition: nx and ny must divide the cell counts".to_string());
        }
        if !self.problem.source.is_finite() {
            errs.push("problem: source must be finite".to_string());
        }
        let rect = self.rect();
        for p in &self.pdf.points {
            if !rect.contains(*p) {
                errs.push(format!("pdf: point ({}, {}) lies outside the domain", p[0], p[1]));
            }
        }
        if self.pdf.samples < crate::chaos::PDF_MIN_SAMPLES {
            errs.push(format!("pdf: samples must be at least {}", crate::chaos::PDF_MIN_SAMPLES));
        }
        if self.run.mc_samples < crate::validation::MC_MIN_SAMPLES {
            errs.push(format!("run: mc_samples must be at least {}", crate::validation::MC_MIN_SAMPLES));
        }
        if self.run.workers == 0 {
            errs.push("run: workers must be positive".to_string());
        }
        if errs.is_empty() { Ok(()) } else { Err(Error::Config(errs)) }
    }

    pub fn rect(&self) -> Rect {
        let g = &self.geometry;
        Rect::new(g.x1_min, g.x1_max, g.x2_min, g.x2_max)
    }

    pub fn bc(&self) -> BcCase {
        match self.problem.bc {
            BcName::Mixed => BcCase::Mixed,
            BcName::Dirichlet => BcCase::AllDirichlet,
        }
    }
}
