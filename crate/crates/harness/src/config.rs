//! Sweep configuration.

use num_rational::Rational64;
use paraproduct_core::engine::{grid_for, local_l4_grid};
use paraproduct_core::ledger::{format_rational, parse_rational};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Scaling,
    LocalL4,
    Decoupling,
    Commutator,
    Hessian,
    Angles,
    Window,
    Kernel,
    Ledger,
    TileMax,
}

impl Experiment {
    pub fn id(&self) -> &'static str {
        match self {
            Experiment::Scaling => "scaling",
            Experiment::LocalL4 => "local-l4",
            Experiment::Decoupling => "decoupling",
            Experiment::Commutator => "commutator",
            Experiment::Hessian => "hessian",
            Experiment::Angles => "angles",
            Experiment::Window => "window",
            Experiment::Kernel => "kernel",
            Experiment::Ledger => "ledger",
            Experiment::TileMax => "tile-max",
        }
    }

    /// Smallest admissible grid multiplier `m` in `n ≥ m·λ`.
    pub fn min_grid_rule(&self) -> f64 {
        match self {
            Experiment::Scaling | Experiment::Decoupling => 5.0,
            Experiment::LocalL4 => 8.0,
            Experiment::Commutator => 2.0,
            _ => 0.0,
        }
    }

    pub fn default_grid_rule(&self) -> f64 {
        self.min_grid_rule().max(1.0)
    }

    fn uses_grid(&self) -> bool {
        self.min_grid_rule() > 0.0
    }

}

fn ser_delta<S: Serializer>(d: &Rational64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(*d))
}

fn de_delta<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Rational64, D::Error> {
    let text = String::deserialize(d)?;
    parse_rational(&text).map_err(serde::de::Error::custom)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub experiment: Experiment,
    /// Dyadic scales; frequencies `N` for window/kernel, `μ` for the
    /// localized commutator.
    pub lambdas: Vec<u64>,
    #[serde(serialize_with = "ser_delta", deserialize_with = "de_delta")]
    pub delta: Rational64,
    pub grid_rule: f64,
    /// Fixed grid size overriding `grid_rule`.
    pub grid: Option<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Monte Carlo samples (hessian, angles).
    pub samples: usize,
    /// Derivative order (window).
    pub k: usize,
    /// Power-iteration steps (commutator).
    pub iters: usize,
    /// Chained commutator instead of the localized norm (commutator).
    pub chained: bool,
    /// Refuse cells whose nine complex fields would exceed this many bytes.
    pub memory_cap: u64,
    pub strict: bool,
    /// Record wall times; off by default so artifacts are reproducible.
    pub timing: bool,
}

pub const DEFAULT_MEMORY_CAP: u64 = 4 << 30;

impl SweepConfig {
    pub fn new(experiment: Experiment, lambdas: Vec<u64>, delta: Rational64) -> Self {
        Self {
            experiment,
            lambdas,
            delta,
            grid_rule: experiment.default_grid_rule(),
            grid: None,
            trials: 1,
            seed: 42,
            samples: 10_000,
            k: 5,
            iters: 300,
            chained: false,
            memory_cap: DEFAULT_MEMORY_CAP,
            strict: false,
            timing: false,
        }
    }

    /// Complex `n³` arrays one cell holds at its peak, from measured
    /// resident sizes rounded up.
    pub fn resident_fields(&self) -> u64 {
        match self.experiment {
            Experiment::Scaling => 24,
            Experiment::Decoupling => 28,
            Experiment::LocalL4 => 2,
            Experiment::Commutator if self.chained => 16,
            _ => 9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() {
            return Err(HarnessError::Config("empty list of scales".into()));
        }
        if let Some(l) = self.lambdas.iter().find(|l| !l.is_power_of_two()) {
            return Err(HarnessError::Config(format!("scale {l} is not a power of two")));
        }
        if self.trials == 0 {
            return Err(HarnessError::Config("trials must be at least 1".into()));
        }
        let zero = Rational64::from_integer(0);
        let one = Rational64::from_integer(1);
        if self.delta <= zero || self.delta >= one {
            return Err(HarnessError::Config(format!(
                "δ = {} must lie in (0, 1)",
                format_rational(self.delta)
            )));
        }
        let min = self.experiment.min_grid_rule();
        if self.grid_rule < min {
            return Err(HarnessError::Config(format!(
                "grid rule m = {} is below the minimum {min} for {}",
                self.grid_rule,
                self.experiment.id()
            )));
        }
        if self.experiment.uses_grid() {
            for &l in &self.lambdas {
                let n = self.grid_size(l)?;
                let fields = self.resident_fields();
                let bytes = fields * 16 * (n as u64).pow(3);
                if bytes > self.memory_cap {
                    return Err(HarnessError::Config(format!(
                        "λ = {l} needs an n={n} grid ({} MiB for {fields} complex fields), above the cap of {} MiB",
                        bytes >> 20,
                        self.memory_cap >> 20
                    )));
                }
            }
        }
        Ok(())
    }

    /// Grid edge used for the cell at scale `lambda`.
    pub fn grid_size(&self, lambda: u64) -> Result<usize> {
        if let Some(n) = self.grid {
            return Ok(n);
        }
        let l = lambda as f64;
        let n = match self.experiment {
            Experiment::LocalL4 => local_l4_grid(l)?.n().max(grid_for(l, self.grid_rule)?.n()),
            Experiment::Commutator if self.chained => grid_for(l, 8.0_f64.max(self.grid_rule))?.n(),
            Experiment::Commutator => {
                let top = *self.lambdas.iter().max().unwrap_or(&lambda) as f64;
                grid_for(top, self.grid_rule)?.n()
            }
            _ => grid_for(l, self.grid_rule)?.n(),
        };
        Ok(n)
    }
}
