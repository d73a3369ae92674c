//! Pipeline configuration: a flat `key=value` file with `#` comments, a
//! canonical serialization used for the run manifest, and a config hash so
//! artifacts can be traced back to the exact parameters that produced
//! them.

use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::generator::GenerationParams;
use crate::privacy::PrivacyParams;
use crate::synth::SynthSpec;
use crate::Scalar;

/// Every tunable of the pipeline, with the evaluation defaults baked in.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    // generation
    pub par_c: Scalar,
    pub par_l: Scalar,
    pub par_m: Scalar,
    pub par_v: Scalar,
    pub count_per_seed: usize,
    // privacy test
    pub par_i: usize,
    pub par_s: Scalar,
    pub par_d: Scalar,
    pub k: usize,
    pub geo_both_directions: bool,
    /// Users (from the end of the corpus) held out as deniability
    /// alternates and never used as seeds.
    pub alternates: usize,
    // aggregate model
    pub epsilon: Scalar,
    // clustering
    pub kappa_min: usize,
    pub kappa_max: usize,
    // attack scenario
    pub beta: Scalar,
    pub num_fakes: Vec<usize>,
    pub trials: usize,
    // stats
    pub kl_floor: Scalar,
    pub top_m: usize,
    pub top_k: usize,
    // synthetic corpus
    pub users: usize,
    pub roles: usize,
    pub trace_len: usize,
    pub noise: Scalar,
    // master RNG seed; per-stage streams derive from it
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            par_c: 0.25,
            par_l: 1.0,
            par_m: 0.75,
            par_v: 4.0,
            count_per_seed: 50,
            par_i: 0,
            par_s: 0.1,
            par_d: 0.1,
            k: 2,
            geo_both_directions: false,
            alternates: 5,
            epsilon: 0.01,
            kappa_min: 2,
            kappa_max: 8,
            beta: 0.5,
            num_fakes: vec![1, 5, 10],
            trials: 20,
            kl_floor: 0.1,
            top_m: 50,
            top_k: 3,
            users: 20,
            roles: 3,
            trace_len: 72,
            noise: 0.02,
            seed: 42,
        }
    }
}

impl PipelineConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("invalid value '{value}' for key '{key}'")))
        }
        match key {
            "par_c" => self.par_c = parse(key, value)?,
            "par_l" => self.par_l = parse(key, value)?,
            "par_m" => self.par_m = parse(key, value)?,
            "par_v" => self.par_v = parse(key, value)?,
            "count_per_seed" => self.count_per_seed = parse(key, value)?,
            "par_i" => self.par_i = parse(key, value)?,
            "par_s" => self.par_s = parse(key, value)?,
            "par_d" => self.par_d = parse(key, value)?,
            "k" => self.k = parse(key, value)?,
            "geo_both_directions" => self.geo_both_directions = parse(key, value)?,
            "alternates" => self.alternates = parse(key, value)?,
            "epsilon" => self.epsilon = parse(key, value)?,
            "kappa_min" => self.kappa_min = parse(key, value)?,
            "kappa_max" => self.kappa_max = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "num_fakes" => {
                self.num_fakes = value
                    .split(',')
                    .map(|x| parse::<usize>(key, x.trim()))
                    .collect::<Result<_>>()?
            }
            "trials" => self.trials = parse(key, value)?,
            "kl_floor" => self.kl_floor = parse(key, value)?,
            "top_m" => self.top_m = parse(key, value)?,
            "top_k" => self.top_k = parse(key, value)?,
            "users" => self.users = parse(key, value)?,
            "roles" => self.roles = parse(key, value)?,
            "trace_len" => self.trace_len = parse(key, value)?,
            "noise" => self.noise = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn from_str(text: &str) -> Result<PipelineConfig> {
        let mut config = PipelineConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key=value, got '{raw}'", i + 1))
            })?;
            config.set(key.trim(), value.trim())?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<PipelineConfig> {
        PipelineConfig::from_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.generation_params().validate()?;
        self.privacy_params().validate()?;
        if self.epsilon <= 0.0 {
            return Err(Error::InvalidParameter(format!("epsilon = {}", self.epsilon)));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::InvalidParameter(format!("beta = {}", self.beta)));
        }
        if self.kappa_min < 1 || self.kappa_min > self.kappa_max {
            return Err(Error::InvalidParameter(format!(
                "kappa range {}..={}",
                self.kappa_min, self.kappa_max
            )));
        }
        if self.alternates >= self.users {
            return Err(Error::InvalidParameter(format!(
                "alternates = {} must leave at least one seed user of {}",
                self.alternates, self.users
            )));
        }
        Ok(())
    }

    pub fn generation_params(&self) -> GenerationParams {
        GenerationParams {
            par_c: self.par_c,
            par_l: self.par_l,
            par_m: self.par_m,
            par_v: self.par_v,
        }
    }

    pub fn privacy_params(&self) -> PrivacyParams {
        PrivacyParams {
            par_s: self.par_s,
            par_i: self.par_i,
            par_d: self.par_d,
            k: self.k,
            geo_both_directions: self.geo_both_directions,
        }
    }

    pub fn synth_spec(&self) -> SynthSpec {
        SynthSpec {
            users: self.users,
            roles: self.roles,
            trace_len: self.trace_len,
            noise: self.noise,
            ..SynthSpec::default()
        }
    }

    /// Stable per-stage RNG seeds derived from the master seed.
    pub fn stage_seed(&self, stage: &str) -> u64 {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(stage.as_bytes());
        let digest = hasher.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }

    /// Canonical `key=value` lines, sorted by key.
    pub fn to_lines(&self) -> String {
        let num_fakes = self
            .num_fakes
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let mut pairs: Vec<(&str, String)> = vec![
            ("alternates", self.alternates.to_string()),
            ("beta", self.beta.to_string()),
            ("count_per_seed", self.count_per_seed.to_string()),
            ("epsilon", self.epsilon.to_string()),
            ("geo_both_directions", self.geo_both_directions.to_string()),
            ("k", self.k.to_string()),
            ("kappa_max", self.kappa_max.to_string()),
            ("kappa_min", self.kappa_min.to_string()),
            ("kl_floor", self.kl_floor.to_string()),
            ("noise", self.noise.to_string()),
            ("num_fakes", num_fakes),
            ("par_c", self.par_c.to_string()),
            ("par_d", self.par_d.to_string()),
            ("par_i", self.par_i.to_string()),
            ("par_l", self.par_l.to_string()),
            ("par_m", self.par_m.to_string()),
            ("par_s", self.par_s.to_string()),
            ("par_v", self.par_v.to_string()),
            ("roles", self.roles.to_string()),
            ("seed", self.seed.to_string()),
            ("top_k", self.top_k.to_string()),
            ("top_m", self.top_m.to_string()),
            ("trace_len", self.trace_len.to_string()),
            ("trials", self.trials.to_string()),
            ("users", self.users.to_string()),
        ];
        pairs.sort_by_key(|(k, _)| *k);
        let mut out = String::new();
        for (key, value) in pairs {
            writeln!(out, "{key}={value}").expect("string write");
        }
        out
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_lines().as_bytes());
        digest.iter().fold(String::new(), |mut acc, b| {
            write!(acc, "{b:02x}").expect("string write");
            acc
        })
    }
}

/// Write a run manifest: the subcommand, the config hash, the full
/// canonical config, and any extra entries (e.g. produced artifacts). No
/// timestamps, so identical runs produce identical manifests.
pub fn write_manifest(
    path: &Path,
    subcommand: &str,
    config: &PipelineConfig,
    extra: &[(String, String)],
) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "subcommand={subcommand}").expect("string write");
    writeln!(out, "config_hash={}", config.hash()).expect("string write");
    for (key, value) in extra {
        writeln!(out, "{key}={value}").expect("string write");
    }
    out.push_str(&config.to_lines());
    std::fs::write(path, out)?;
    Ok(())
}
