//! Run configuration file (TOML). Unknown keys are rejected.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use abrule::domain::Segment;
use abrule::propagator::{packet_k_max, recommended_dt};
use abrule::{
    BoundaryKind, PhysicalConstants, PotentialSpec, Profile, SimulationDomain, WaveFunction,
};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::exit::ConfigError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub constants: ConstantsSection,
    pub domain: DomainSection,
    pub packet: PacketSection,
    pub boundary: Option<BoundarySection>,
    pub potential: Option<PotentialSection>,
    pub soft: Option<SoftSection>,
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    pub hbar: f64,
    pub mass: f64,
}

impl Default for ConstantsSection {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub x_min: f64,
    pub dx: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSection {
    pub x0: f64,
    pub sigma: f64,
    pub k0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryChoice {
    Absorbing,
    Neumann,
    Dirichlet,
    Robin,
}

/// Condition at `x = 0` for the hard detector.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySection {
    #[serde(default = "absorbing")]
    pub kind: BoundaryChoice,
    pub kappa: Option<f64>,
    #[serde(default)]
    pub nu: f64,
    pub c: Option<f64>,
}

fn absorbing() -> BoundaryChoice {
    BoundaryChoice::Absorbing
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSection {
    pub start: f64,
    pub end: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    #[serde(default)]
    pub real: Vec<SegmentSection>,
    #[serde(default)]
    pub imag: Vec<SegmentSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SoftSection {
    pub width: Option<f64>,
    pub strength: Option<f64>,
    #[serde(default = "neumann")]
    pub back_wall: String,
    /// First shell width of a soft-limit sweep.
    pub initial_width: Option<f64>,
    #[serde(default = "four")]
    pub terms: usize,
}

fn neumann() -> String {
    "neumann".into()
}

fn four() -> usize {
    4
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub t_final: f64,
    pub dt: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "samples")]
    pub samples: usize,
}

fn samples() -> usize {
    10_000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "here")]
    pub dir: PathBuf,
}

fn here() -> PathBuf {
    PathBuf::from(".")
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: here() }
    }
}

/// A far wall `neumann`, `dirichlet` or `robin:<c>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackWall(pub BoundaryKind);

impl FromStr for BackWall {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "neumann" => Ok(Self(BoundaryKind::Neumann)),
            "dirichlet" => Ok(Self(BoundaryKind::Dirichlet)),
            _ => {
                let c = s.strip_prefix("robin:").ok_or_else(|| {
                    format!("unknown back wall `{s}` (neumann, dirichlet or robin:<c>)")
                })?;
                let c: f64 = c
                    .parse()
                    .map_err(|_| format!("bad Robin coefficient `{c}`"))?;
                if !c.is_finite() {
                    return Err(format!("bad Robin coefficient `{c}`"));
                }
                Ok(Self(BoundaryKind::Robin { c }))
            }
        }
    }
}

/// A parsed configuration with the digest of its source text.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub digest: String,
}

pub fn digest_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn bad(field: &str, reason: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("`{field}`: {reason}"))
}

fn positive(field: &str, x: f64) -> Result<f64, ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(bad(field, format!("must be positive (got {x})")))
    }
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        config.validate()?;
        Ok(Self {
            config,
            digest: digest_hex(text.as_bytes()),
        })
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("constants.hbar", self.constants.hbar)?;
        positive("constants.mass", self.constants.mass)?;
        if !(self.domain.x_min < 0.0) || !self.domain.x_min.is_finite() {
            return Err(bad("domain.x_min", "must be negative"));
        }
        positive("domain.dx", self.domain.dx)?;
        positive("packet.sigma", self.packet.sigma)?;
        if !(self.packet.x0 < 0.0 && self.packet.x0 > self.domain.x_min) {
            return Err(bad("packet.x0", "must lie inside (x_min, 0)"));
        }
        if !self.packet.k0.is_finite() {
            return Err(bad("packet.k0", "must be finite"));
        }
        if let Some(b) = &self.boundary {
            b.kind()?;
        }
        if let Some(s) = &self.soft {
            if let Some(w) = s.width {
                positive("soft.width", w)?;
            }
            if let Some(v) = s.strength {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(bad("soft.strength", "must be non-negative"));
                }
            }
            if let Some(w) = s.initial_width {
                positive("soft.initial_width", w)?;
            }
            BackWall::from_str(&s.back_wall).map_err(|e| bad("soft.back_wall", e))?;
        }
        positive("run.t_final", self.run.t_final)?;
        if let Some(dt) = self.run.dt {
            positive("run.dt", dt)?;
        }
        Ok(())
    }

    pub fn constants(&self) -> PhysicalConstants {
        PhysicalConstants {
            hbar: self.constants.hbar,
            mass: self.constants.mass,
        }
    }

    pub fn boundary(&self) -> Result<&BoundarySection, ConfigError> {
        self.boundary
            .as_ref()
            .ok_or_else(|| ConfigError("missing section [boundary]".into()))
    }

    pub fn soft(&self) -> Result<&SoftSection, ConfigError> {
        self.soft
            .as_ref()
            .ok_or_else(|| ConfigError("missing section [soft]".into()))
    }

    /// `dx·m/(ħ k_max)` for the configured packet.
    pub fn dt_heuristic(&self, dx: f64) -> f64 {
        recommended_dt(
            dx,
            &self.constants(),
            packet_k_max(self.packet.k0, self.packet.sigma),
        )
    }

    /// The configured step, or the heuristic shrunk to divide `t_final`.
    pub fn dt(&self, dx: f64) -> f64 {
        match self.run.dt {
            Some(dt) => dt,
            None => {
                let h = self.dt_heuristic(dx);
                self.run.t_final / (self.run.t_final / h).ceil()
            }
        }
    }

    pub fn interior_domain(&self, dx: f64) -> abrule::Result<SimulationDomain> {
        SimulationDomain::with_spacing(self.domain.x_min, 0.0, dx)
    }

    pub fn packet_on(&self, domain: &SimulationDomain) -> abrule::Result<WaveFunction> {
        abrule::wave::make_gaussian_packet(
            domain,
            self.packet.x0,
            self.packet.sigma,
            self.packet.k0,
        )
    }

    pub fn potential(&self) -> abrule::Result<PotentialSpec> {
        let seg = |v: &[SegmentSection]| {
            if v.is_empty() {
                Profile::Zero
            } else {
                Profile::Segments(
                    v.iter()
                        .map(|s| Segment {
                            start: s.start,
                            end: s.end,
                            value: s.value,
                        })
                        .collect(),
                )
            }
        };
        match &self.potential {
            None => Ok(PotentialSpec::free()),
            Some(p) => PotentialSpec::new(seg(&p.real), seg(&p.imag)),
        }
    }
}

impl BoundarySection {
    pub fn kind(&self) -> Result<BoundaryKind, ConfigError> {
        match self.kind {
            BoundaryChoice::Absorbing => {
                let kappa = self
                    .kappa
                    .ok_or_else(|| bad("boundary.kappa", "required for an absorbing boundary"))?;
                positive("boundary.kappa", kappa)?;
                if !self.nu.is_finite() {
                    return Err(bad("boundary.nu", "must be finite"));
                }
                Ok(BoundaryKind::AbsorbingRobin { kappa, nu: self.nu })
            }
            BoundaryChoice::Neumann => Ok(BoundaryKind::Neumann),
            BoundaryChoice::Dirichlet => Ok(BoundaryKind::Dirichlet),
            BoundaryChoice::Robin => {
                let c = self
                    .c
                    .ok_or_else(|| bad("boundary.c", "required for a Robin boundary"))?;
                Ok(BoundaryKind::Robin { c })
            }
        }
    }

    pub fn kappa(&self) -> Result<f64, ConfigError> {
        let kappa = self
            .kappa
            .ok_or_else(|| bad("boundary.kappa", "required"))?;
        positive("boundary.kappa", kappa)
    }
}

impl SoftSection {
    pub fn back_wall(&self) -> BoundaryKind {
        BackWall::from_str(&self.back_wall)
            .map(|b| b.0)
            .unwrap_or(BoundaryKind::Neumann)
    }
}
