//! Ask/tell black-box optimizers.
//!
//! An [`Optimizer`] is a single serializable state machine: callers request
//! candidates with [`Optimizer::ask`], report losses with [`Optimizer::tell`]
//! (or comparisons with [`Optimizer::tell_rank`]) and read the final choice
//! with [`Optimizer::recommend`]. Calls must be externally serialized.

mod de;
mod diagonal_es;
mod one_plus_one;
mod spec;
pub mod wizard;

use std::collections::{BTreeMap, HashMap};

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Candidate, Domain, DomainError, Genome};

use de::DeState;
use diagonal_es::EsState;
use one_plus_one::{OnePlusOneState, Variant};

pub use spec::{NoiseHandling, OptimizerName, OptimizerSpec};
pub use wizard::wizard_select;

/// Re-evaluations (optimistic or random) happen on every ask whose 1-based
/// index is a multiple of this period.
pub const REEVALUATION_PERIOD: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("budget of {budget} asks exhausted")]
    BudgetExhausted { budget: usize },
    #[error("{parallelism} candidates already in flight")]
    ParallelismExceeded { parallelism: usize },
    #[error("candidate {0} is not in flight")]
    UnknownUid(u64),
    #[error("no evaluation has been told yet")]
    NoEvaluations,
    #[error("every told evaluation was non-finite")]
    NoFiniteEvaluation,
    #[error("rank feedback needs at least one winner")]
    EmptyWinners,
    #[error("candidate {0} appears more than once in rank feedback")]
    Overlap(u64),
    #[error("{0} does not accept rank-only feedback")]
    NotRankBased(String),
    #[error("invalid optimizer spec: {0}")]
    InvalidSpec(String),
    #[error("unknown optimizer name {0:?}")]
    UnknownName(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Why a candidate was put in flight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Origin {
    Proposal,
    Reevaluation,
    External,
    DeInit { slot: usize },
    DeTrial { target: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Pending {
    candidate: Candidate,
    origin: Origin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
enum AlgorithmState {
    RandomSearch,
    OnePlusOne(OnePlusOneState),
    DiagonalEs(EsState),
    De(DeState),
}

/// Per-genome running means, kept only under noisy re-evaluation.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
struct Archive {
    entries: Vec<ArchiveEntry>,
    #[serde(skip)]
    index: HashMap<u64, Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ArchiveEntry {
    genome: Genome,
    #[serde(with = "crate::float_serde")]
    loss_sum: f64,
    #[serde(with = "crate::float_serde")]
    loss_sq_sum: f64,
    count: u32,
    first_uid: u64,
}

impl PartialEq for Archive {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl ArchiveEntry {
    fn mean(&self) -> f64 {
        self.loss_sum / f64::from(self.count)
    }

    fn as_candidate(&self) -> Candidate {
        Candidate {
            uid: self.first_uid,
            genome: self.genome.clone(),
            loss: Some(self.mean()),
            eval_count: self.count,
            parent_uids: vec![],
        }
    }
}

impl Archive {
    fn rebuild_index(&mut self) {
        let indexed: usize = self.index.values().map(Vec::len).sum();
        if indexed == self.entries.len() {
            return;
        }
        self.index.clear();
        for (i, e) in self.entries.iter().enumerate() {
            self.index.entry(e.genome.fingerprint()).or_default().push(i);
        }
    }

    fn find(&mut self, genome: &Genome) -> Option<usize> {
        self.rebuild_index();
        self.index
            .get(&genome.fingerprint())?
            .iter()
            .copied()
            .find(|&i| self.entries[i].genome == *genome)
    }

    /// Records one evaluation; returns the running mean and count.
    fn record(&mut self, genome: &Genome, loss: f64, uid: u64) -> (f64, u32) {
        let i = match self.find(genome) {
            Some(i) => i,
            None => {
                self.entries.push(ArchiveEntry {
                    genome: genome.clone(),
                    loss_sum: 0.0,
                    loss_sq_sum: 0.0,
                    count: 0,
                    first_uid: uid,
                });
                let i = self.entries.len() - 1;
                self.index.entry(genome.fingerprint()).or_default().push(i);
                i
            }
        };
        let e = &mut self.entries[i];
        e.loss_sum += loss;
        e.loss_sq_sum += loss * loss;
        e.count += 1;
        (e.mean(), e.count)
    }

    /// Noise standard deviation: pooled within-genome estimate once some
    /// genome has been re-evaluated, spread of the means before that.
    fn noise_scale(&self) -> f64 {
        let finite: Vec<&ArchiveEntry> = self.entries.iter().filter(|e| e.mean().is_finite()).collect();
        let (ss, dof) = finite.iter().filter(|e| e.count > 1).fold((0.0, 0u32), |(ss, dof), e| {
            let within = e.loss_sq_sum - e.loss_sum * e.loss_sum / f64::from(e.count);
            (ss + within.max(0.0), dof + e.count - 1)
        });
        if dof > 0 {
            return (ss / f64::from(dof)).sqrt();
        }
        if finite.len() < 2 {
            return 0.0;
        }
        let n = finite.len() as f64;
        let mean = finite.iter().map(|e| e.mean()).sum::<f64>() / n;
        (finite.iter().map(|e| (e.mean() - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    }

    /// Entry minimizing `mean + sign * scale / sqrt(count)`: `sign = 1` gives
    /// the pessimistic choice, `sign = -1` the optimistic one.
    fn bounded_best(&self, sign: f64) -> Option<&ArchiveEntry> {
        let scale = self.noise_scale();
        let bound = |e: &ArchiveEntry| e.mean() + sign * scale / f64::from(e.count).sqrt();
        self.entries
            .iter()
            .filter(|e| e.mean().is_finite())
            .min_by(|a, b| bound(a).total_cmp(&bound(b)).then(a.first_uid.cmp(&b.first_uid)))
    }

    /// Best running mean among the genomes with the highest evaluation count.
    fn recommend(&self) -> Option<&ArchiveEntry> {
        let finite = self.entries.iter().filter(|e| e.mean().is_finite());
        let top = finite.clone().map(|e| e.count).max()?;
        finite.filter(|e| e.count == top).min_by(|a, b| {
            a.mean().total_cmp(&b.mean()).then(a.first_uid.cmp(&b.first_uid))
        })
    }
}

/// An ask/tell optimizer instance (initialized with domain, budget and parallelism).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Optimizer {
    spec: OptimizerSpec,
    /// Concrete algorithm after wizard resolution.
    algorithm: OptimizerName,
    noise: NoiseHandling,
    domain: Domain,
    rng: ChaCha8Rng,
    next_uid: u64,
    asked: usize,
    told: usize,
    in_flight: BTreeMap<u64, Pending>,
    best: Option<Candidate>,
    archive: Archive,
    state: AlgorithmState,
}

impl Optimizer {
    pub fn new(spec: OptimizerSpec, domain: Domain, seed: u64) -> Result<Self, OptimizerError> {
        spec.validate()?;
        domain.validate()?;
        let resolved = if spec.name == OptimizerName::NgOptLite {
            let noisy = spec.noise_handling != NoiseHandling::None;
            let mut chosen = wizard_select(&domain, spec.budget, spec.parallelism, noisy);
            chosen.population = spec.population;
            chosen
        } else {
            spec.clone()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = match resolved.name {
            OptimizerName::RandomSearch => AlgorithmState::RandomSearch,
            OptimizerName::OnePlusOne => {
                AlgorithmState::OnePlusOne(OnePlusOneState::new(Variant::Standard, &domain, &mut rng))
            }
            OptimizerName::LenglerOnePlusOne => {
                AlgorithmState::OnePlusOne(OnePlusOneState::new(Variant::Lengler, &domain, &mut rng))
            }
            OptimizerName::OptimisticNoisyOnePlusOne => {
                AlgorithmState::OnePlusOne(OnePlusOneState::new(Variant::Optimistic, &domain, &mut rng))
            }
            OptimizerName::DiagonalEs => AlgorithmState::DiagonalEs(EsState::new(&domain, resolved.population)),
            OptimizerName::DifferentialEvolution => AlgorithmState::De(DeState::new(resolved.population)),
            OptimizerName::NgOptLite => unreachable!("wizard never selects itself"),
        };
        Ok(Self {
            algorithm: resolved.name,
            noise: resolved.noise_handling,
            spec,
            domain,
            rng,
            next_uid: 0,
            asked: 0,
            told: 0,
            in_flight: BTreeMap::new(),
            best: None,
            archive: Archive::default(),
            state,
        })
    }

    pub fn spec(&self) -> &OptimizerSpec {
        &self.spec
    }

    /// The algorithm actually running (differs from `spec().name` for NGOptLite).
    pub fn algorithm(&self) -> OptimizerName {
        self.algorithm
    }

    pub fn noise_handling(&self) -> NoiseHandling {
        self.noise
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Number of asks so far (the iteration counter).
    pub fn asked(&self) -> usize {
        self.asked
    }

    pub fn told(&self) -> usize {
        self.told
    }

    pub fn remaining_budget(&self) -> usize {
        self.spec.budget - self.asked
    }

    pub fn in_flight(&self) -> impl Iterator<Item = &Candidate> {
        self.in_flight.values().map(|p| &p.candidate)
    }

    pub fn in_flight_count(&self) -> usize {
        self.in_flight.len()
    }

    pub fn is_rank_based(&self) -> bool {
        self.noise == NoiseHandling::None
    }

    /// Current incumbent for the (1+1) family, best-so-far otherwise.
    pub fn incumbent(&self) -> Option<&Candidate> {
        match &self.state {
            AlgorithmState::OnePlusOne(s) => s.incumbent.as_ref(),
            _ => self.best.as_ref(),
        }
    }

    fn check_capacity(&self) -> Result<(), OptimizerError> {
        if self.asked >= self.spec.budget {
            return Err(OptimizerError::BudgetExhausted { budget: self.spec.budget });
        }
        if self.in_flight.len() >= self.spec.parallelism {
            return Err(OptimizerError::ParallelismExceeded { parallelism: self.spec.parallelism });
        }
        Ok(())
    }

    fn launch(&mut self, genome: Genome, parent_uids: Vec<u64>, origin: Origin) -> Candidate {
        let candidate = Candidate::new(self.next_uid, genome, parent_uids);
        self.next_uid += 1;
        self.asked += 1;
        self.in_flight.insert(candidate.uid, Pending { candidate: candidate.clone(), origin });
        candidate
    }

    /// Requests the next candidate to evaluate.
    pub fn ask(&mut self) -> Result<Candidate, OptimizerError> {
        self.check_capacity()?;
        if let Some((genome, parents)) = self.due_reevaluation() {
            return Ok(self.launch(genome, parents, Origin::Reevaluation));
        }
        if self.noise == NoiseHandling::Optimistic {
            // Mutate from the point that is best even under a pessimistic
            // reading of its noise.
            if let (AlgorithmState::OnePlusOne(s), Some(parent)) = (&mut self.state, self.archive.bounded_best(1.0)) {
                s.incumbent = Some(parent.as_candidate());
            }
        }
        let t = self.asked;
        let (genome, parents, origin) = match &mut self.state {
            AlgorithmState::RandomSearch => (self.domain.sample_uniform(&mut self.rng), vec![], Origin::Proposal),
            AlgorithmState::OnePlusOne(s) => {
                let (g, p) = s.propose(&self.domain, t, &mut self.rng)?;
                (g, p, Origin::Proposal)
            }
            AlgorithmState::DiagonalEs(s) => (s.propose(&self.domain, &mut self.rng), vec![], Origin::Proposal),
            AlgorithmState::De(s) => s.propose(&self.domain, self.next_uid, &mut self.rng),
        };
        Ok(self.launch(genome, parents, origin))
    }

    /// Puts an externally proposed genome in flight (counts against budget and
    /// parallelism like an ask). The genome is repaired into the domain.
    pub fn suggest(&mut self, genome: Genome, parent_uids: Vec<u64>) -> Result<Candidate, OptimizerError> {
        self.check_capacity()?;
        self.domain.check_dim(&genome)?;
        let genome = self.domain.repair(genome.values);
        Ok(self.launch(genome, parent_uids, Origin::External))
    }

    fn due_reevaluation(&mut self) -> Option<(Genome, Vec<u64>)> {
        if (self.asked + 1) % REEVALUATION_PERIOD != 0 {
            return None;
        }
        match self.noise {
            NoiseHandling::None => None,
            NoiseHandling::Optimistic => match &self.state {
                AlgorithmState::OnePlusOne(_) => {
                    let entry = self.archive.bounded_best(-1.0)?;
                    Some((entry.genome.clone(), vec![entry.first_uid]))
                }
                _ => None,
            },
            NoiseHandling::RandomReeval => {
                let entry = self.archive.entries.choose(&mut self.rng)?;
                Some((entry.genome.clone(), vec![entry.first_uid]))
            }
        }
    }

    /// Reports the loss of an in-flight candidate. Non-finite losses are
    /// recorded as `+inf`.
    pub fn tell(&mut self, uid: u64, loss: f64) -> Result<(), OptimizerError> {
        let pending = self.in_flight.remove(&uid).ok_or(OptimizerError::UnknownUid(uid))?;
        let loss = if loss.is_finite() {
            loss
        } else {
            log::warn!("candidate {uid}: non-finite loss {loss} recorded as +inf");
            f64::INFINITY
        };
        self.told += 1;
        let mut candidate = pending.candidate;
        candidate.loss = Some(loss);
        candidate.eval_count = 1;
        if self.noise != NoiseHandling::None {
            let (mean, count) = self.archive.record(&candidate.genome, loss, uid);
            candidate.loss = Some(mean);
            candidate.eval_count = count;
        }
        if loss.is_finite() && pending.origin != Origin::Reevaluation {
            let better = match &self.best {
                None => true,
                Some(b) => (loss, uid) < (b.loss.unwrap_or(f64::INFINITY), b.uid),
            };
            if better {
                self.best = Some(candidate.clone());
            }
        }
        let reevaluation = pending.origin == Origin::Reevaluation;
        match &mut self.state {
            AlgorithmState::RandomSearch => {}
            AlgorithmState::OnePlusOne(s) => s.observe(candidate, reevaluation),
            AlgorithmState::DiagonalEs(s) => {
                if !reevaluation {
                    s.observe(&self.domain, &candidate);
                }
            }
            AlgorithmState::De(s) => s.observe(&pending.origin, &candidate),
        }
        Ok(())
    }

    /// Rank-only feedback over the current batch: winners are better than
    /// losers, nothing else is known. Encoded as synthetic losses 0 (winners)
    /// and 1 (losers); the (1+1) incumbent is then drawn uniformly among winners.
    pub fn tell_rank(&mut self, winners: &[u64], losers: &[u64]) -> Result<(), OptimizerError> {
        if !self.is_rank_based() {
            return Err(OptimizerError::NotRankBased(format!(
                "{} with {:?} noise handling",
                self.algorithm, self.noise
            )));
        }
        if winners.is_empty() {
            return Err(OptimizerError::EmptyWinners);
        }
        let mut seen = std::collections::BTreeSet::new();
        for &uid in winners.iter().chain(losers) {
            if !seen.insert(uid) {
                return Err(OptimizerError::Overlap(uid));
            }
            if !self.in_flight.contains_key(&uid) {
                return Err(OptimizerError::UnknownUid(uid));
            }
        }
        let mut feedback: Vec<(u64, f64)> =
            winners.iter().map(|&u| (u, 0.0)).chain(losers.iter().map(|&u| (u, 1.0))).collect();
        feedback.sort_by_key(|&(u, _)| u);
        let mut winner_candidates = Vec::with_capacity(winners.len());
        for (uid, loss) in feedback {
            if loss == 0.0 {
                winner_candidates.push(self.in_flight[&uid].candidate.clone());
            }
            self.tell(uid, loss)?;
        }
        if let AlgorithmState::OnePlusOne(s) = &mut self.state {
            let mut chosen = winner_candidates
                .choose(&mut self.rng)
                .cloned()
                .expect("winners checked non-empty");
            chosen.loss = Some(0.0);
            chosen.eval_count = 1;
            s.incumbent = Some(chosen);
        }
        Ok(())
    }

    /// Best guess so far; deterministic given the state.
    pub fn recommend(&self) -> Result<Candidate, OptimizerError> {
        if self.told == 0 {
            return Err(OptimizerError::NoEvaluations);
        }
        if self.noise != NoiseHandling::None {
            let entry = self.archive.recommend().ok_or(OptimizerError::NoFiniteEvaluation)?;
            return Ok(entry.as_candidate());
        }
        let chosen = match &self.state {
            AlgorithmState::OnePlusOne(s) => s.incumbent.as_ref(),
            _ => self.best.as_ref(),
        };
        chosen
            .filter(|c| c.loss.is_some_and(f64::is_finite))
            .cloned()
            .ok_or(OptimizerError::NoFiniteEvaluation)
    }

    /// JSON snapshot of the full state (including the random generator).
    pub fn snapshot(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("optimizer state is always serializable")
    }

    pub fn restore(snapshot: serde_json::Value) -> Result<Self, serde_json::Error> {
        serde_json::from_value(snapshot)
    }
}
