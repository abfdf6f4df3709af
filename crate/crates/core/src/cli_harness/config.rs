use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::distributions::{DemandFamily, JointDistribution};
use crate::error::{Error, Result};
use crate::learners::{RetailerSpec, SupplierSpec};
use crate::repeated_game::BoundKind;
use crate::vertical_integration::{AdversarialInstance, PostedPriceGenerator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    SolveSe,
    Simulate,
    Adversarial,
}

/// One experiment, as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<DemandFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supplier: Option<SupplierSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retailer: Option<RetailerSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub horizons: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Bound curves to report; defaults to the ones matching the policies.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bounds: Vec<BoundKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adversarial: Option<AdversarialSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarialSection {
    /// Defaults to `T^{−1/3}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Defaults to `T^{−2/3}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    pub instance: InstanceSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum InstanceSource {
    /// Tab-separated instance file; relative paths resolve against the config file.
    File {
        path: PathBuf,
    },
    PostedPrice(PostedPriceGenerator),
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed_base: Option<u64>,
    pub seeds: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        let mut cfg: Self =
            toml::from_str(text).map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        if let Some(AdversarialSection { instance: InstanceSource::File { path: file }, .. }) = &mut cfg.adversarial {
            if file.is_relative() {
                if let Some(dir) = path.parent() {
                    *file = dir.join(&*file);
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path)
    }

    /// Applies overrides, expands seeds and checks the whole configuration.
    pub fn resolve(mut self, overrides: &Overrides) -> Result<Self> {
        if let Some(out) = &overrides.out {
            self.output_dir = Some(out.clone());
        }
        if self.mode != Mode::SolveSe {
            self.seeds = Some(self.resolve_seeds(overrides)?);
            self.base_seed = None;
            self.seed_count = None;
        }
        if self.bounds.is_empty() {
            self.bounds = self.default_bounds();
        }
        if self.mode == Mode::Adversarial {
            self.resolve_horizons()?;
        }
        self.validate()?;
        Ok(self)
    }

    fn resolve_seeds(&self, o: &Overrides) -> Result<Vec<u64>> {
        if self.seeds.is_some() && (self.base_seed.is_some() || self.seed_count.is_some()) {
            return Err(Error::config("set either `seeds` or `base_seed` + `seed_count`, not both"));
        }
        let seeds = match (&self.seeds, o.seed_base, o.seeds) {
            (Some(list), None, None) => list.clone(),
            _ => {
                let count = o
                    .seeds
                    .or(self.seed_count)
                    .or(self.seeds.as_ref().map(Vec::len))
                    .ok_or_else(|| Error::config("no seeds: set `seeds` or `base_seed` + `seed_count`"))?;
                let base = o.seed_base.or(self.base_seed).unwrap_or(0);
                (0..count as u64).map(|i| base + i).collect()
            }
        };
        if seeds.is_empty() {
            return Err(Error::config("at least one seed is required"));
        }
        if seeds.iter().collect::<BTreeSet<_>>().len() != seeds.len() {
            return Err(Error::config("seeds must be distinct"));
        }
        Ok(seeds)
    }

    fn resolve_horizons(&mut self) -> Result<()> {
        let Some(AdversarialSection { instance: InstanceSource::File { path }, .. }) = &self.adversarial else {
            return Ok(());
        };
        let n = AdversarialInstance::from_file(path)?.horizon();
        match self.horizons.as_slice() {
            [] => self.horizons = vec![n],
            [h] if *h == n => {}
            other => return Err(Error::config(format!("instance file has {n} rounds but `horizons` = {other:?}"))),
        }
        Ok(())
    }

    fn default_bounds(&self) -> Vec<BoundKind> {
        match (self.mode, &self.supplier) {
            (Mode::Simulate, Some(s)) => allowed_bounds(s).to_vec(),
            (Mode::Adversarial, _) => vec![BoundKind::Exp3Vi, BoundKind::Exp3ViSimplified],
            _ => vec![],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            Mode::SolveSe => {
                self.family()?;
            }
            Mode::Simulate => self.validate_simulate()?,
            Mode::Adversarial => self.validate_adversarial()?,
        }
        Ok(())
    }

    /// The configured distribution.
    pub fn family(&self) -> Result<DemandFamily> {
        let family = self.distribution.ok_or_else(|| Error::config("missing [distribution] section"))?;
        JointDistribution::from_family(family)?;
        Ok(family)
    }

    pub fn seed_list(&self) -> &[u64] {
        self.seeds.as_deref().unwrap_or(&[])
    }

    fn validate_horizons(&self, min: usize, who: &str) -> Result<()> {
        if self.horizons.is_empty() {
            return Err(Error::config("`horizons` must list at least one horizon"));
        }
        for &t in &self.horizons {
            if t == 0 {
                return Err(Error::config("horizons must be at least 1"));
            }
            if t < min {
                return Err(Error::config(format!("{who} requires horizon T >= {min}, got T = {t}")));
            }
        }
        Ok(())
    }

    fn validate_simulate(&self) -> Result<()> {
        let dist = JointDistribution::from_family(self.family()?)?;
        if !dist.is_bounded() {
            return Err(Error::config("the repeated game needs demand supported in [0, 1]; weibull is unbounded"));
        }
        let supplier = self.supplier.as_ref().ok_or_else(|| Error::config("missing [supplier] section"))?;
        let retailer = self.retailer.as_ref().ok_or_else(|| Error::config("missing [retailer] section"))?;
        if let SupplierSpec::Fixed { w } = supplier {
            if !(0.0..=1.0).contains(w) {
                return Err(Error::config(format!("fixed wholesale price {w} outside [0, 1]")));
            }
        }
        if let SupplierSpec::Piyavskii { lipschitz: Some(m) } = supplier {
            if !(*m > 0.0) {
                return Err(Error::config(format!("Lipschitz constant must be positive, got {m}")));
            }
        }
        self.validate_horizons(supplier.min_horizon(), "ETC without E[C] (supplier policy etc-no-cost)")?;
        self.validate_horizons(retailer.min_horizon(), "FTL (retailer policy ftl)")?;
        let allowed = allowed_bounds(supplier);
        if let Some(b) = self.bounds.iter().find(|b| !allowed.contains(b)) {
            return Err(Error::config(format!("bound `{b}` does not apply to supplier policy {supplier:?}")));
        }
        if self.adversarial.is_some() {
            return Err(Error::config("[adversarial] is only valid with mode = \"adversarial\""));
        }
        Ok(())
    }

    fn validate_adversarial(&self) -> Result<()> {
        let section = self.adversarial.as_ref().ok_or_else(|| Error::config("missing [adversarial] section"))?;
        if let Some(g) = section.gamma {
            if !(g > 0.0 && g <= 1.0) {
                return Err(Error::config(format!("gamma must lie in (0, 1], got {g}")));
            }
        }
        if let Some(e) = section.eta {
            if !(e > 0.0) {
                return Err(Error::config(format!("eta must be positive, got {e}")));
            }
        }
        if let InstanceSource::PostedPrice(g) = &section.instance {
            g.validate()?;
        }
        self.validate_horizons(1, "Exp3-VI")?;
        if self.supplier.is_some() || self.retailer.is_some() {
            return Err(Error::config("adversarial mode takes no [supplier] or [retailer] section"));
        }
        if let Some(b) = self.bounds.iter().find(|b| !matches!(b, BoundKind::Exp3Vi | BoundKind::Exp3ViSimplified)) {
            return Err(Error::config(format!("bound `{b}` does not apply to adversarial runs")));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, ignoring the output directory.
    pub fn content_hash(&self) -> Result<String> {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        let json = serde_json::to_vec(&canonical)?;
        Ok(hex::encode(Sha256::digest(json)))
    }
}

/// Bounds that certify a supplier policy.
pub fn allowed_bounds(supplier: &SupplierSpec) -> &'static [BoundKind] {
    match supplier {
        SupplierSpec::Etc {} => &[BoundKind::Etc, BoundKind::EtcLastIterate],
        SupplierSpec::Piyavskii { .. } => &[BoundKind::Piyavskii, BoundKind::PiyavskiiSimple],
        SupplierSpec::EtcNoCost {} => &[BoundKind::EtcFtl],
        SupplierSpec::Fixed { .. } => &[],
    }
}
