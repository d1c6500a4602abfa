//! Deterministic fixed-horizon continuous-control environments with known
//! ground-truth task reward.
//!
//! Two environments are built in:
//!
//! - [`EnvSpec::rail_pendulum`]: a cart on a bounded rail balancing a pole;
//!   reward is the negative absolute pole angle.
//! - [`EnvSpec::point_lander`]: a 2-D thrust-controlled point mass descending
//!   to a landing pad under gravity, with a one-time terminal bonus for a
//!   soft on-pad arrival.
//!
//! Episodes never terminate early: every rollout has exactly `horizon`
//! transitions regardless of state. Dynamics integrate with semi-implicit
//! Euler at a fixed timestep.

mod point_lander;
mod rail_pendulum;

pub use point_lander::PointLanderParams;
pub use rail_pendulum::RailPendulumParams;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Stream};
use crate::trajectory::Trajectory;

/// Anything that maps a state to an action, possibly using randomness.
///
/// Scripted controllers ignore the RNG; stochastic policies consume it.
pub trait ActionSource {
    fn action_dim(&self) -> usize;
    fn act(&self, state: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<f64>>;
}

impl<F> ActionSource for (usize, F)
where
    F: Fn(&[f64], &mut ChaCha8Rng) -> Result<Vec<f64>>,
{
    fn action_dim(&self) -> usize {
        self.0
    }

    fn act(&self, state: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        (self.1)(state, rng)
    }
}

/// Which dynamics a spec describes.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EnvKind {
    RailPendulum(RailPendulumParams),
    PointLander(PointLanderParams),
}

/// Full description of an environment: dimensions, horizon, bounds,
/// timestep, and physical constants.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EnvSpec {
    pub name: String,
    pub horizon: usize,
    /// Integration timestep in seconds.
    pub dt: f64,
    pub kind: EnvKind,
}

/// Physical state vector plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub vec: Vec<f64>,
    pub step: usize,
}

impl EnvSpec {
    pub fn rail_pendulum() -> Self {
        EnvSpec {
            name: "rail-pendulum".to_string(),
            horizon: 200,
            dt: 0.02,
            kind: EnvKind::RailPendulum(RailPendulumParams::default()),
        }
    }

    pub fn point_lander() -> Self {
        EnvSpec {
            name: "point-lander".to_string(),
            horizon: 100,
            dt: 0.02,
            kind: EnvKind::PointLander(PointLanderParams::default()),
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "rail-pendulum" => Ok(Self::rail_pendulum()),
            "point-lander" => Ok(Self::point_lander()),
            other => Err(Error::Config(format!(
                "unknown environment '{other}' (expected rail-pendulum or point-lander)"
            ))),
        }
    }

    pub fn state_dim(&self) -> usize {
        4
    }

    pub fn action_dim(&self) -> usize {
        match &self.kind {
            EnvKind::RailPendulum(_) => 1,
            EnvKind::PointLander(_) => 2,
        }
    }

    pub fn action_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.kind {
            EnvKind::RailPendulum(p) => (vec![-p.max_force], vec![p.max_force]),
            EnvKind::PointLander(p) => {
                (vec![-p.max_thrust; 2], vec![p.max_thrust; 2])
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::invalid("horizon must be >= 1"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::invalid("timestep must be > 0"));
        }
        let (lo, hi) = self.action_bounds();
        for (l, h) in lo.iter().zip(hi.iter()) {
            if !(l.is_finite() && h.is_finite() && l < h) {
                return Err(Error::invalid("action bounds must be finite with lower < upper"));
            }
        }
        Ok(())
    }

    /// Sample an initial state: the nominal state plus a seeded uniform
    /// perturbation of +-0.05 on every coordinate.
    pub fn reset(&self, seed: u64) -> EnvState {
        let mut rng = rng::derive_rng(seed, Stream::EnvReset, &[]);
        self.reset_with_rng(&mut rng)
    }

    pub fn reset_with_rng(&self, rng: &mut ChaCha8Rng) -> EnvState {
        let nominal = match &self.kind {
            EnvKind::RailPendulum(_) => vec![0.0, 0.0, 0.0, 0.0],
            EnvKind::PointLander(p) => vec![0.0, p.start_height, 0.0, 0.0],
        };
        let vec = nominal
            .iter()
            .map(|&v| v + rng.random_range(-0.05..=0.05))
            .collect();
        EnvState { vec, step: 0 }
    }

    /// Advance one step. The action is clipped to bounds before integration;
    /// the reward is the ground-truth task reward.
    pub fn step(&self, state: &EnvState, action: &[f64]) -> Result<(EnvState, f64)> {
        self.validate()?;
        if state.step >= self.horizon {
            return Err(Error::EpisodeFinished);
        }
        if action.len() != self.action_dim() {
            return Err(Error::Shape {
                context: "env action",
                expected: self.action_dim(),
                actual: action.len(),
            });
        }
        if action.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("action"));
        }
        let (lo, hi) = self.action_bounds();
        let clipped: Vec<f64> = action
            .iter()
            .zip(lo.iter().zip(hi.iter()))
            .map(|(&a, (&l, &h))| a.clamp(l, h))
            .collect();
        let is_final = state.step + 1 == self.horizon;
        let (next_vec, reward) = match &self.kind {
            EnvKind::RailPendulum(p) => p.step(&state.vec, &clipped, self.dt),
            EnvKind::PointLander(p) => p.step(&state.vec, &clipped, self.dt, is_final),
        };
        Ok((
            EnvState {
                vec: next_vec,
                step: state.step + 1,
            },
            reward,
        ))
    }

    /// Largest possible per-step reward magnitude (documented bound).
    pub fn reward_bound(&self) -> f64 {
        match &self.kind {
            EnvKind::RailPendulum(_) => std::f64::consts::PI,
            EnvKind::PointLander(p) => p.reward_bound(),
        }
    }

    /// Run one full fixed-horizon episode under `source`, recording states,
    /// pre-clip actions, and ground-truth rewards.
    pub fn rollout<S: ActionSource + ?Sized>(&self, source: &S, seed: u64) -> Result<Trajectory> {
        if source.action_dim() != self.action_dim() {
            return Err(Error::Shape {
                context: "rollout policy action dim",
                expected: self.action_dim(),
                actual: source.action_dim(),
            });
        }
        let mut reset_rng = rng::derive_rng(seed, Stream::EnvReset, &[]);
        let mut action_rng = rng::derive_rng(seed, Stream::Rollout, &[]);
        let mut state = self.reset_with_rng(&mut reset_rng);
        let mut states = Vec::with_capacity(self.horizon + 1);
        let mut actions = Vec::with_capacity(self.horizon);
        let mut rewards = Vec::with_capacity(self.horizon);
        states.push(state.vec.clone());
        for _ in 0..self.horizon {
            let action = source.act(&state.vec, &mut action_rng)?;
            if action.iter().any(|a| !a.is_finite()) {
                return Err(Error::NonFinite("policy action during rollout"));
            }
            let (next, reward) = self.step(&state, &action)?;
            actions.push(action);
            rewards.push(reward);
            states.push(next.vec.clone());
            state = next;
        }
        Trajectory::new(states, actions, rewards)
    }
}
