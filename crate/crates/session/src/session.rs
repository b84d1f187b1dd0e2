//! Interactive session state and its transitions.
//!
//! A session is fully determined by its [`SessionConfig`] and the ordered
//! list of feedback events: [`Session::replay`] rebuilds it from scratch.

use rand::Rng;
use retrofit::latent::{
    latent_batch, latent_evolve, tree_fit, voronoi_multi_random, ClickPoint, Label, LatentShape, LatentTensor,
    IMAGE_SIZE,
};
use retrofit::{seed, Genome, Optimizer, OptimizerName, OptimizerSpec};
use serde::{Deserialize, Serialize};

use crate::SessionError;

/// Number of seed screens shown in seed-diversity mode.
pub const SCREEN_COUNT: usize = 30;
/// Screens the user must pick in seed-diversity mode.
pub const SCREEN_PICKS: usize = 5;
pub const DEFAULT_LAMBDA: usize = 15;
pub const DEFAULT_MU: usize = 5;
pub const DEFAULT_EVOLVE_BUDGET: usize = 200;
pub const DEFAULT_EPSILON: f64 = 0.01;

/// Budget handed to the bookkeeping optimizer; sessions never come close.
const OPTIMIZER_BUDGET: usize = 1 << 30;

// Seed-derivation streams.
const FIRST_BATCH: u64 = 0;
const SCREEN_SEEDS: u64 = 1;
const SEED_CHOICE: u64 = 2;
const OFFSPRING: u64 = 3;
const EVOLVE: u64 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Interactive,
    SeedDiversity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    AwaitingFeedback,
    Closed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub session_id: String,
    pub mode: Mode,
    pub lambda: usize,
    pub mu: usize,
    pub shape: LatentShape,
    pub seed: u64,
    pub evolve_budget: usize,
    pub epsilon: f64,
    /// Fit the surrogate on every batch seen so far instead of the last one.
    #[serde(default)]
    pub cumulative_surrogate: bool,
}

impl SessionConfig {
    pub fn new(session_id: impl Into<String>, mode: Mode, seed: u64) -> Self {
        Self {
            session_id: session_id.into(),
            mode,
            lambda: DEFAULT_LAMBDA,
            mu: DEFAULT_MU,
            shape: LatentShape::default(),
            seed,
            evolve_budget: DEFAULT_EVOLVE_BUDGET,
            epsilon: DEFAULT_EPSILON,
            cumulative_surrogate: false,
        }
    }

    fn validate(&self) -> Result<(), SessionError> {
        let invalid = |m: String| Err(SessionError::InvalidConfig(m));
        if self.mu == 0 || self.mu >= self.lambda {
            return invalid(format!("need 1 <= mu < lambda, got mu={} lambda={}", self.mu, self.lambda));
        }
        if self.evolve_budget == 0 {
            return invalid("evolve_budget must be at least 1".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return invalid(format!("epsilon must be positive, got {}", self.epsilon));
        }
        self.shape.validate().map_err(|e| SessionError::InvalidConfig(e.to_string()))?;
        Ok(())
    }
}

/// One selected image, with an optional click inside it (pixel coordinates).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub uid: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub px: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub py: Option<u32>,
}

impl Selection {
    pub fn new(uid: u64) -> Self {
        Self { uid, px: None, py: None }
    }

    fn click(&self) -> ClickPoint {
        let c = ClickPoint::center();
        ClickPoint::new(self.px.unwrap_or(c.px), self.py.unwrap_or(c.py))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Feedback { selected: Vec<Selection> },
    SeedChoice { indices: Vec<usize>, chosen_seed: u64 },
    Close,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchItem {
    pub uid: u64,
    pub latent: LatentTensor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub schema_version: u32,
    pub config: SessionConfig,
    pub mode: Mode,
    pub status: Status,
    pub generation: usize,
    /// Seeds of the screens offered in seed-diversity mode.
    pub screen_seeds: Vec<u64>,
    pub batch: Vec<BatchItem>,
    /// Labeled latents of earlier batches (only kept for the cumulative surrogate).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seen: Vec<(Vec<f64>, Label)>,
    pub optimizer: Optimizer,
    pub history: Vec<Event>,
}

impl Session {
    pub fn create(config: SessionConfig) -> Result<Self, SessionError> {
        config.validate()?;
        let spec = OptimizerSpec::new(OptimizerName::LenglerOnePlusOne, OPTIMIZER_BUDGET, config.lambda);
        let optimizer = Optimizer::new(spec, config.shape.domain(), config.seed).map_err(internal)?;
        let mut session = Self {
            schema_version: retrofit::SCHEMA_VERSION,
            mode: config.mode,
            status: Status::AwaitingFeedback,
            generation: 0,
            screen_seeds: Vec::new(),
            batch: Vec::new(),
            seen: Vec::new(),
            optimizer,
            history: Vec::new(),
            config,
        };
        match session.mode {
            Mode::Interactive => {
                let mut rng = seed::rng(session.config.seed, &[FIRST_BATCH]);
                let latents = (0..session.config.lambda)
                    .map(|_| LatentTensor::standard_normal(session.config.shape, &mut rng))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(internal)?;
                session.load_batch(latents)?;
            }
            Mode::SeedDiversity => {
                let mut rng = seed::rng(session.config.seed, &[SCREEN_SEEDS]);
                session.screen_seeds = (0..SCREEN_COUNT).map(|_| rng.random()).collect();
            }
        }
        Ok(session)
    }

    /// Rebuilds a session from its configuration and event history.
    pub fn replay(config: SessionConfig, history: &[Event]) -> Result<Self, SessionError> {
        let mut session = Self::create(config)?;
        for event in history {
            match event {
                Event::Feedback { selected } => session.submit_feedback(selected)?,
                Event::SeedChoice { indices, .. } => {
                    session.select_screens(indices)?;
                }
                Event::Close => session.close(),
            }
        }
        Ok(session)
    }

    pub fn id(&self) -> &str {
        &self.config.session_id
    }

    /// Latents of one seed-diversity screen.
    pub fn screen(&self, index: usize) -> Result<Vec<LatentTensor>, SessionError> {
        let seed = *self
            .screen_seeds
            .get(index)
            .ok_or_else(|| SessionError::InvalidRequest(format!("no screen {index}")))?;
        latent_batch(seed, self.config.lambda, self.config.shape).map_err(internal)
    }

    fn load_batch(&mut self, latents: Vec<LatentTensor>) -> Result<(), SessionError> {
        self.batch = latents
            .into_iter()
            .map(|latent| {
                let c = self.optimizer.suggest(latent.to_genome(), vec![]).map_err(internal)?;
                Ok(BatchItem { uid: c.uid, latent })
            })
            .collect::<Result<_, SessionError>>()?;
        Ok(())
    }

    fn ensure_open(&self, mode: Mode) -> Result<(), SessionError> {
        if self.status == Status::Closed {
            return Err(SessionError::Closed);
        }
        if self.mode != mode {
            return Err(SessionError::WrongMode { expected: mode, actual: self.mode });
        }
        Ok(())
    }

    pub fn submit_feedback(&mut self, selected: &[Selection]) -> Result<(), SessionError> {
        self.ensure_open(Mode::Interactive)?;
        let invalid = |m: String| Err(SessionError::InvalidRequest(m));
        if selected.is_empty() || selected.len() > self.config.mu {
            return invalid(format!("select between 1 and {} images, got {}", self.config.mu, selected.len()));
        }
        let mut picked = Vec::with_capacity(selected.len());
        for s in selected {
            let Some(i) = self.batch.iter().position(|b| b.uid == s.uid) else {
                return Err(SessionError::StaleUid(s.uid));
            };
            if picked.contains(&i) {
                return invalid(format!("uid {} selected twice", s.uid));
            }
            if s.px.is_some_and(|p| p >= IMAGE_SIZE) || s.py.is_some_and(|p| p >= IMAGE_SIZE) {
                return invalid(format!("click outside the {IMAGE_SIZE}x{IMAGE_SIZE} image"));
            }
            picked.push(i);
        }
        let winners: Vec<u64> = picked.iter().map(|&i| self.batch[i].uid).collect();
        let losers: Vec<u64> =
            self.batch.iter().enumerate().filter(|(i, _)| !picked.contains(i)).map(|(_, b)| b.uid).collect();
        if losers.is_empty() {
            return invalid("at least one image must stay unselected".into());
        }
        self.optimizer.tell_rank(&winners, &losers).map_err(internal)?;

        // Local surrogate: selected images are good, the rest bad.
        let labeled: Vec<(Vec<f64>, Label)> = self
            .batch
            .iter()
            .enumerate()
            .map(|(i, b)| (b.latent.values().to_vec(), if picked.contains(&i) { Label::Good } else { Label::Bad }))
            .collect();
        if self.config.cumulative_surrogate {
            self.seen.extend(labeled.iter().cloned());
        }
        let training = if self.config.cumulative_surrogate { &self.seen } else { &labeled };
        let (x, y): (Vec<Vec<f64>>, Vec<Label>) = training.iter().cloned().unzip();
        let model = tree_fit(&x, &y).map_err(internal)?;

        let parents: Vec<(LatentTensor, ClickPoint)> =
            picked.iter().zip(selected).map(|(&i, s)| (self.batch[i].latent.clone(), s.click())).collect();
        let generation = self.generation as u64;
        let offspring = (0..self.config.lambda as u64)
            .map(|i| {
                let mut rng = seed::rng(self.config.seed, &[OFFSPRING, generation, i]);
                let start = voronoi_multi_random(&parents, &mut rng).map_err(internal)?.latent;
                let evolve_seed = seed::derive(self.config.seed, &[EVOLVE, generation, i]);
                let out = latent_evolve(&model, &start, self.config.epsilon, self.config.evolve_budget, evolve_seed)
                    .map_err(internal)?;
                Ok(out.latent)
            })
            .collect::<Result<Vec<_>, SessionError>>()?;
        self.load_batch(offspring)?;
        self.generation += 1;
        self.history.push(Event::Feedback { selected: selected.to_vec() });
        Ok(())
    }

    /// Picks one of the chosen screens at random and turns the session
    /// interactive with that screen as its first batch. Returns the seed.
    pub fn select_screens(&mut self, indices: &[usize]) -> Result<u64, SessionError> {
        self.ensure_open(Mode::SeedDiversity)?;
        let invalid = |m: String| Err(SessionError::InvalidRequest(m));
        if indices.len() != SCREEN_PICKS {
            return invalid(format!("choose exactly {SCREEN_PICKS} screens, got {}", indices.len()));
        }
        for (k, &i) in indices.iter().enumerate() {
            if i >= self.screen_seeds.len() {
                return invalid(format!("screen index {i} out of range 0..{}", self.screen_seeds.len()));
            }
            if indices[..k].contains(&i) {
                return invalid(format!("screen {i} chosen twice"));
            }
        }
        let mut rng = seed::rng(self.config.seed, &[SEED_CHOICE]);
        let chosen_seed = self.screen_seeds[indices[rng.random_range(0..indices.len())]];
        let latents = latent_batch(chosen_seed, self.config.lambda, self.config.shape).map_err(internal)?;
        self.mode = Mode::Interactive;
        self.load_batch(latents)?;
        self.history.push(Event::SeedChoice { indices: indices.to_vec(), chosen_seed });
        Ok(chosen_seed)
    }

    /// Closes the session; the batch stays readable.
    pub fn close(&mut self) {
        if self.status != Status::Closed {
            self.status = Status::Closed;
            self.history.push(Event::Close);
        }
    }

    pub fn batch_genomes(&self) -> Vec<Genome> {
        self.batch.iter().map(|b| b.latent.to_genome()).collect()
    }
}

fn internal<E: std::fmt::Display>(e: E) -> SessionError {
    SessionError::Internal(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SessionConfig {
        SessionConfig { shape: LatentShape::new(4, 4, 2), lambda: 6, mu: 2, evolve_budget: 30, ..SessionConfig::new("s", Mode::Interactive, seed) }
    }

    #[test]
    fn defaults_give_fifteen_images() {
        let s = Session::create(SessionConfig::new("a", Mode::Interactive, 1)).unwrap();
        assert_eq!(s.batch.len(), 15);
        assert_eq!(s.status, Status::AwaitingFeedback);
        assert!(s.history.is_empty());
    }

    #[test]
    fn mu_must_be_below_lambda() {
        let config = SessionConfig { mu: 6, ..small(1) };
        assert!(matches!(Session::create(config), Err(SessionError::InvalidConfig(_))));
        let config = SessionConfig { mu: 0, ..small(1) };
        assert!(Session::create(config).is_err());
    }

    #[test]
    fn same_seed_same_first_batch() {
        let a = Session::create(small(3)).unwrap();
        let b = Session::create(small(3)).unwrap();
        assert_eq!(a.batch, b.batch);
        assert_ne!(a.batch, Session::create(small(4)).unwrap().batch);
    }

    #[test]
    fn feedback_validation() {
        let mut s = Session::create(small(2)).unwrap();
        let uids: Vec<u64> = s.batch.iter().map(|b| b.uid).collect();
        assert!(s.submit_feedback(&[]).is_err());
        let three: Vec<Selection> = uids[..3].iter().map(|&u| Selection::new(u)).collect();
        assert!(s.submit_feedback(&three).is_err());
        assert_eq!(s.submit_feedback(&[Selection::new(9999)]), Err(SessionError::StaleUid(9999)));
        let dup = [Selection::new(uids[0]), Selection::new(uids[0])];
        assert!(s.submit_feedback(&dup).is_err());
        let off = [Selection { uid: uids[0], px: Some(IMAGE_SIZE), py: None }];
        assert!(s.submit_feedback(&off).is_err());
        assert!(s.history.is_empty());

        s.submit_feedback(&[Selection::new(uids[1])]).unwrap();
        assert_eq!(s.batch.len(), 6);
        assert_eq!(s.generation, 1);
        // Old uids are stale now.
        assert_eq!(s.submit_feedback(&[Selection::new(uids[0])]), Err(SessionError::StaleUid(uids[0])));
    }

    #[test]
    fn selecting_every_image_is_rejected() {
        let config = SessionConfig { lambda: 3, mu: 2, ..small(5) };
        let mut s = Session::create(config).unwrap();
        let all: Vec<Selection> = s.batch.iter().map(|b| Selection::new(b.uid)).collect();
        // mu < lambda already forbids it; the explicit check is a backstop.
        assert!(s.submit_feedback(&all).is_err());
    }

    #[test]
    fn single_parent_offspring_stay_near_it() {
        let mut s = Session::create(small(6)).unwrap();
        let parent = s.batch[2].latent.clone();
        s.submit_feedback(&[Selection::new(s.batch[2].uid)]).unwrap();
        // Each offspring is the parent moved by epsilon * x.
        for item in &s.batch {
            let moved = item.latent.distance(&parent);
            assert!(moved < 0.5, "{moved}");
        }
    }

    #[test]
    fn replay_matches_live_state() {
        let mut s = Session::create(small(7)).unwrap();
        for round in 0..3 {
            let pick = [Selection { uid: s.batch[round].uid, px: Some(10), py: Some(100) }, Selection::new(s.batch[5].uid)];
            s.submit_feedback(&pick).unwrap();
        }
        s.close();
        let replayed = Session::replay(s.config.clone(), &s.history).unwrap();
        assert_eq!(replayed, s);
        assert_eq!(s.submit_feedback(&[Selection::new(s.batch[0].uid)]), Err(SessionError::Closed));
    }

    #[test]
    fn seed_diversity_flow() {
        let config = SessionConfig { mode: Mode::SeedDiversity, ..small(8) };
        let mut s = Session::create(config.clone()).unwrap();
        assert_eq!(s.screen_seeds.len(), SCREEN_COUNT);
        assert!(s.batch.is_empty());
        assert_eq!(s.screen(3).unwrap().len(), 6);
        assert!(matches!(s.submit_feedback(&[Selection::new(0)]), Err(SessionError::WrongMode { .. })));
        assert!(s.select_screens(&[1, 2, 3, 4]).is_err());
        assert!(s.select_screens(&[1, 2, 3, 4, 4]).is_err());
        assert!(s.select_screens(&[1, 2, 3, 4, 30]).is_err());
        let chosen = s.select_screens(&[0, 5, 9, 12, 29]).unwrap();
        assert!([0, 5, 9, 12, 29].iter().any(|&i| s.screen_seeds[i] == chosen));
        assert_eq!(s.mode, Mode::Interactive);
        assert_eq!(s.batch.len(), 6);
        assert!(s.select_screens(&[0, 1, 2, 3, 4]).is_err());

        let mut again = Session::create(config).unwrap();
        assert_eq!(again.select_screens(&[0, 5, 9, 12, 29]).unwrap(), chosen);
        assert_eq!(Session::replay(s.config.clone(), &s.history).unwrap(), s);
    }

    #[test]
    fn cumulative_surrogate_keeps_history() {
        let config = SessionConfig { cumulative_surrogate: true, ..small(9) };
        let mut s = Session::create(config).unwrap();
        for _ in 0..2 {
            s.submit_feedback(&[Selection::new(s.batch[0].uid)]).unwrap();
        }
        assert_eq!(s.seen.len(), 12);
    }
}
