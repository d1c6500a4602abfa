//! Thrust-controlled 2-D point mass descending to a landing pad.
//!
//! State `(x, y, vx, vy)`; the pad is centered at the origin. Each action
//! component is an acceleration in [-1, 1]; gravity pulls along -y. The
//! per-step reward is `-0.1 * distance_to_pad - 0.01 * |thrust|^2`, and a
//! single +10 bonus is paid on the final step when the lander sits on the
//! pad with speed below the soft-landing threshold.
//!
//! Positions are confined to a bounded arena (velocity zeroed on contact),
//! which keeps the per-step reward magnitude bounded.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PointLanderParams {
    pub gravity: f64,
    pub max_thrust: f64,
    pub start_height: f64,
    pub pad_radius: f64,
    pub soft_speed: f64,
    pub landing_bonus: f64,
    /// Positions are clamped to [-arena, +arena] on both axes.
    pub arena_half_width: f64,
    pub max_speed: f64,
}

impl Default for PointLanderParams {
    fn default() -> Self {
        PointLanderParams {
            gravity: -0.5,
            max_thrust: 1.0,
            start_height: 0.6,
            pad_radius: 0.15,
            soft_speed: 0.1,
            landing_bonus: 10.0,
            arena_half_width: 3.0,
            max_speed: 5.0,
        }
    }
}

impl PointLanderParams {
    pub(crate) fn step(
        &self,
        state: &[f64],
        action: &[f64],
        dt: f64,
        is_final: bool,
    ) -> (Vec<f64>, f64) {
        let (x, y, vx, vy) = (state[0], state[1], state[2], state[3]);
        let (ax, ay) = (action[0], action[1]);

        let mut new_vx = (vx + ax * dt).clamp(-self.max_speed, self.max_speed);
        let mut new_vy = (vy + (ay + self.gravity) * dt).clamp(-self.max_speed, self.max_speed);
        let mut new_x = x + new_vx * dt;
        let mut new_y = y + new_vy * dt;
        if new_x.abs() > self.arena_half_width {
            new_x = new_x.clamp(-self.arena_half_width, self.arena_half_width);
            new_vx = 0.0;
        }
        if new_y.abs() > self.arena_half_width {
            new_y = new_y.clamp(-self.arena_half_width, self.arena_half_width);
            new_vy = 0.0;
        }

        let dist = (new_x * new_x + new_y * new_y).sqrt();
        let thrust_sq = ax * ax + ay * ay;
        let mut reward = -0.1 * dist - 0.01 * thrust_sq;
        if is_final {
            let speed = (new_vx * new_vx + new_vy * new_vy).sqrt();
            if dist <= self.pad_radius && speed < self.soft_speed {
                reward += self.landing_bonus;
            }
        }
        (vec![new_x, new_y, new_vx, new_vy], reward)
    }

    /// Documented per-step reward magnitude bound: the shaped portion at the
    /// arena corner plus the terminal bonus.
    pub fn reward_bound(&self) -> f64 {
        let max_dist = self.arena_half_width * std::f64::consts::SQRT_2;
        0.1 * max_dist + 0.01 * 2.0 * self.max_thrust * self.max_thrust + self.landing_bonus
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gravity_pulls_down() {
        let p = PointLanderParams::default();
        let (next, _) = p.step(&[0.0, 0.6, 0.0, 0.0], &[0.0, 0.0], 0.02, false);
        assert!(next[3] < 0.0);
    }

    #[test]
    fn no_bonus_off_pad() {
        let p = PointLanderParams::default();
        let (_, reward) = p.step(&[2.0, 0.0, 0.0, 0.0], &[0.0, 0.5], 0.02, true);
        assert!(reward < 0.0);
    }

    #[test]
    fn no_bonus_when_fast() {
        let p = PointLanderParams::default();
        let (_, reward) = p.step(&[0.0, 0.0, 3.0, 0.0], &[0.0, 0.5], 0.02, true);
        assert!(reward < 0.0);
    }

    #[test]
    fn bonus_on_soft_pad_arrival() {
        let p = PointLanderParams::default();
        let (_, reward) = p.step(&[0.0, 0.01, 0.0, 0.0], &[0.0, 0.5], 0.02, true);
        assert!(reward > 5.0);
    }
}
