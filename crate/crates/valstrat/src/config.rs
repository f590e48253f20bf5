//! Run configuration: seed, precision and sampling counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Knobs shared by the sampling-based operations.  All randomness in the
/// crate is derived deterministically from `seed`.
#[derive(Debug, Clone)]
pub struct Config {
    pub seed: u64,
    /// Truncation depth in exponent levels past the leading exponent.
    pub depth: i64,
    /// Fibers sampled per triviality check.
    pub n_fibers: usize,
    /// Point placements per critical-value-function query.
    pub n_points: usize,
    /// Tuples sampled per arc pair in Taylor-order checks.
    pub n_tuples: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 0x76616c73,
            depth: crate::puiseux::DEFAULT_DEPTH,
            n_fibers: 32,
            n_points: 3,
            n_tuples: 64,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        if self.depth < 1 {
            return Err(Error::Input("precision depth must be >= 1".into()));
        }
        if self.n_fibers < 1 || self.n_points < 1 || self.n_tuples < 1 {
            return Err(Error::Input("sampling counts must be >= 1".into()));
        }
        Ok(())
    }

    /// Deterministic sub-generator for a named sampling site.
    pub fn rng(&self, tag: &str) -> ChaCha8Rng {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in tag.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        ChaCha8Rng::seed_from_u64(self.seed ^ h)
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Config> {
        let mut cfg = Config::default();
        if let Some(s) = v.get("seed") {
            cfg.seed = s
                .as_u64()
                .ok_or_else(|| Error::Input("seed must be a u64".into()))?;
        }
        if let Some(p) = v.get("precision") {
            cfg.depth = p
                .as_i64()
                .ok_or_else(|| Error::Input("precision must be an integer depth".into()))?;
        }
        if let Some(n) = v.get("n_fibers") {
            cfg.n_fibers = n
                .as_u64()
                .ok_or_else(|| Error::Input("n_fibers must be a count".into()))?
                as usize;
        }
        if let Some(n) = v.get("n_points") {
            cfg.n_points = n
                .as_u64()
                .ok_or_else(|| Error::Input("n_points must be a count".into()))?
                as usize;
        }
        if let Some(n) = v.get("n_tuples") {
            cfg.n_tuples = n
                .as_u64()
                .ok_or_else(|| Error::Input("n_tuples must be a count".into()))?
                as usize;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
