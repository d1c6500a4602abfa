//! Time-indexed record of one episode.

use crate::error::{Error, Result};

/// States `s_0..s_T`, actions `a_0..a_{T-1}`, and per-step ground-truth
/// rewards from one fixed-horizon episode.
///
/// Actions are recorded before environment clipping so that action
/// log-densities stay exact; the environment clips at execution time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
}

impl Trajectory {
    pub fn new(states: Vec<Vec<f64>>, actions: Vec<Vec<f64>>, rewards: Vec<f64>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Empty("trajectory states"));
        }
        if states.len() != actions.len() + 1 {
            return Err(Error::Shape {
                context: "trajectory states vs actions",
                expected: actions.len() + 1,
                actual: states.len(),
            });
        }
        if rewards.len() != actions.len() {
            return Err(Error::Shape {
                context: "trajectory rewards vs actions",
                expected: actions.len(),
                actual: rewards.len(),
            });
        }
        Ok(Trajectory {
            states,
            actions,
            rewards,
        })
    }

    /// Number of transitions T.
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn action_dim(&self) -> usize {
        self.actions.first().map_or(0, Vec::len)
    }

    /// Undiscounted sum of ground-truth rewards.
    pub fn total_return(&self) -> f64 {
        self.rewards.iter().sum()
    }

    /// Iterate `(s_t, a_t, s_{t+1})` transitions.
    pub fn transitions(&self) -> impl Iterator<Item = (&[f64], &[f64], &[f64])> {
        (0..self.len()).map(move |t| {
            (
                self.states[t].as_slice(),
                self.actions[t].as_slice(),
                self.states[t + 1].as_slice(),
            )
        })
    }

    /// Write states, actions, and rewards as CSV rows for external plotting.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let d_s = self.state_dim();
        let d_a = self.action_dim();
        let mut header = vec!["t".to_string()];
        header.extend((0..d_s).map(|i| format!("s{i}")));
        header.extend((0..d_a).map(|i| format!("a{i}")));
        header.push("reward".to_string());
        w.write_record(&header)?;
        for t in 0..self.len() {
            let mut row = vec![t.to_string()];
            row.extend(self.states[t].iter().map(|v| format!("{v}")));
            row.extend(self.actions[t].iter().map(|v| format!("{v}")));
            row.push(format!("{}", self.rewards[t]));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_mismatched_lengths() {
        let states = vec![vec![0.0]; 3];
        let actions = vec![vec![0.0]; 3];
        let rewards = vec![0.0; 3];
        assert!(Trajectory::new(states, actions, rewards).is_err());
    }

    #[test]
    fn return_sums_rewards() {
        let t = Trajectory::new(
            vec![vec![0.0], vec![1.0], vec![2.0]],
            vec![vec![0.5], vec![0.5]],
            vec![-1.0, -2.0],
        )
        .unwrap();
        assert_eq!(t.total_return(), -3.0);
        assert_eq!(t.len(), 2);
    }
}
