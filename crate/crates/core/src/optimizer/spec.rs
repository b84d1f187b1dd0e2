use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::OptimizerError;

/// Names of the available optimizers, as accepted on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OptimizerName {
    RandomSearch,
    OnePlusOne,
    LenglerOnePlusOne,
    OptimisticNoisyOnePlusOne,
    #[serde(rename = "DiagonalES")]
    DiagonalEs,
    DifferentialEvolution,
    /// Resolved through [`super::wizard::wizard_select`] at construction.
    #[serde(rename = "NGOptLite")]
    NgOptLite,
}

impl OptimizerName {
    pub const ALL: [OptimizerName; 7] = [
        OptimizerName::RandomSearch,
        OptimizerName::OnePlusOne,
        OptimizerName::LenglerOnePlusOne,
        OptimizerName::OptimisticNoisyOnePlusOne,
        OptimizerName::DiagonalEs,
        OptimizerName::DifferentialEvolution,
        OptimizerName::NgOptLite,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OptimizerName::RandomSearch => "RandomSearch",
            OptimizerName::OnePlusOne => "OnePlusOne",
            OptimizerName::LenglerOnePlusOne => "LenglerOnePlusOne",
            OptimizerName::OptimisticNoisyOnePlusOne => "OptimisticNoisyOnePlusOne",
            OptimizerName::DiagonalEs => "DiagonalES",
            OptimizerName::DifferentialEvolution => "DifferentialEvolution",
            OptimizerName::NgOptLite => "NGOptLite",
        }
    }

    /// Single-parent elitist family.
    pub fn is_one_plus_one(self) -> bool {
        matches!(
            self,
            OptimizerName::OnePlusOne
                | OptimizerName::LenglerOnePlusOne
                | OptimizerName::OptimisticNoisyOnePlusOne
        )
    }
}

impl fmt::Display for OptimizerName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OptimizerName {
    type Err = OptimizerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let name = match s.to_ascii_lowercase().as_str() {
            "randomsearch" | "random" => OptimizerName::RandomSearch,
            "oneplusone" | "(1+1)" => OptimizerName::OnePlusOne,
            "lengleroneplusone" | "lengler" | "discretelengleroneplusone" => {
                OptimizerName::LenglerOnePlusOne
            }
            "optimisticnoisyoneplusone" | "optimdisc(1+1)" | "optimisticdiscreteoneplusone" => {
                OptimizerName::OptimisticNoisyOnePlusOne
            }
            "diagonales" | "diagonalcma" => OptimizerName::DiagonalEs,
            "differentialevolution" | "de" => OptimizerName::DifferentialEvolution,
            "ngoptlite" | "ngopt" => OptimizerName::NgOptLite,
            _ => return Err(OptimizerError::UnknownName(s.to_string())),
        };
        Ok(name)
    }
}

/// How repeated evaluations are scheduled for noisy losses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseHandling {
    #[default]
    None,
    /// Every 5th ask re-evaluates the incumbent; losses are averaged per genome.
    Optimistic,
    /// Every 5th ask re-evaluates a uniformly drawn archived genome.
    RandomReeval,
}

/// Static configuration of an optimizer run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSpec {
    pub name: OptimizerName,
    #[serde(default)]
    pub noise_handling: NoiseHandling,
    /// Maximum number of candidates in flight.
    pub parallelism: usize,
    /// Maximum number of asks.
    pub budget: usize,
    /// Population override for DifferentialEvolution / DiagonalES.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<usize>,
}

impl OptimizerSpec {
    pub fn new(name: OptimizerName, budget: usize, parallelism: usize) -> Self {
        let noise_handling = match name {
            OptimizerName::OptimisticNoisyOnePlusOne => NoiseHandling::Optimistic,
            _ => NoiseHandling::None,
        };
        Self { name, noise_handling, parallelism, budget, population: None }
    }

    pub fn with_noise(mut self, noise_handling: NoiseHandling) -> Self {
        self.noise_handling = noise_handling;
        self
    }

    pub fn with_population(mut self, population: usize) -> Self {
        self.population = Some(population);
        self
    }

    pub fn validate(&self) -> Result<(), OptimizerError> {
        let invalid = |msg: String| Err(OptimizerError::InvalidSpec(msg));
        if self.budget == 0 {
            return invalid("budget must be at least 1".into());
        }
        if self.parallelism == 0 {
            return invalid("parallelism must be at least 1".into());
        }
        let optimistic_ok = self.name.is_one_plus_one() || self.name == OptimizerName::NgOptLite;
        if self.noise_handling == NoiseHandling::Optimistic && !optimistic_ok {
            return invalid(format!("optimistic noise handling is not available for {}", self.name));
        }
        if self.name == OptimizerName::OptimisticNoisyOnePlusOne
            && self.noise_handling != NoiseHandling::Optimistic
        {
            return invalid("OptimisticNoisyOnePlusOne requires optimistic noise handling".into());
        }
        if let Some(p) = self.population {
            if self.name == OptimizerName::DifferentialEvolution && p < 4 {
                return invalid(format!("DifferentialEvolution needs a population of at least 4, got {p}"));
            }
            if p < 2 {
                return invalid(format!("population must be at least 2, got {p}"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip_through_strings() {
        for name in OptimizerName::ALL {
            assert_eq!(name.as_str().parse::<OptimizerName>().unwrap(), name);
            let json = serde_json::to_string(&name).unwrap();
            assert_eq!(json, format!("\"{}\"", name.as_str()));
        }
        assert_eq!("DiagonalCMA".parse::<OptimizerName>().unwrap(), OptimizerName::DiagonalEs);
        assert!("CMA".parse::<OptimizerName>().is_err());
    }

    #[test]
    fn spec_invariants() {
        assert!(OptimizerSpec::new(OptimizerName::OnePlusOne, 0, 1).validate().is_err());
        assert!(OptimizerSpec::new(OptimizerName::OnePlusOne, 1, 0).validate().is_err());
        assert!(OptimizerSpec::new(OptimizerName::DiagonalEs, 10, 1)
            .with_noise(NoiseHandling::Optimistic)
            .validate()
            .is_err());
        assert!(OptimizerSpec::new(OptimizerName::OptimisticNoisyOnePlusOne, 10, 1)
            .with_noise(NoiseHandling::None)
            .validate()
            .is_err());
        assert!(OptimizerSpec::new(OptimizerName::OptimisticNoisyOnePlusOne, 10, 1).validate().is_ok());
        assert!(OptimizerSpec::new(OptimizerName::DifferentialEvolution, 10, 1)
            .with_population(3)
            .validate()
            .is_err());
    }
}
