//! Scripted heterogeneous demonstrators and demonstration sets.
//!
//! Demonstrations come from deterministic state-feedback controllers, one
//! per behavior style, plus convex mixtures of them: at every state the
//! mixture demo executes `sum_j w_j a_j` over the scripted controllers'
//! actions. The generating weights are retained under an eval-only key for
//! evaluation; the learner never sees them.
//!
//! Styles:
//! - rail-pendulum: balance at rail offsets `{0, +0.6, -0.6}`, or slide back
//!   and forth with amplitude 0.4 (a velocity-sign relay, so it stays pure
//!   state feedback).
//! - point-lander: vertical descent, or arcs through a left/right waypoint
//!   before the final approach.

use std::io::{Read as _, Write as _};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{ActionSource, EnvKind, EnvSpec};
use crate::error::{Error, Result};
use crate::rng::{self, Stream};
use crate::trajectory::Trajectory;

/// One behavior style for an environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "style", rename_all = "kebab-case")]
pub enum ControlStyle {
    /// Hold the pole upright with the cart parked at `target_x`.
    Balance { target_x: f64 },
    /// Keep the pole up while sliding along the rail with the given
    /// amplitude.
    Oscillate { amplitude: f64 },
    /// Descend to the pad, optionally through a waypoint arc.
    /// `arc` is -1 (left), 0 (vertical), or +1 (right).
    Approach { arc: i8 },
}

impl ControlStyle {
    pub fn label(&self) -> String {
        match self {
            ControlStyle::Balance { target_x } => format!("balance@{target_x}"),
            ControlStyle::Oscillate { amplitude } => format!("oscillate@{amplitude}"),
            ControlStyle::Approach { arc } => match arc {
                -1 => "approach-left".to_string(),
                1 => "approach-right".to_string(),
                _ => "approach-vertical".to_string(),
            },
        }
    }
}

/// Canonical style list per environment, most mutually distinct first.
pub fn available_styles(spec: &EnvSpec) -> Vec<ControlStyle> {
    match spec.kind {
        EnvKind::RailPendulum(_) => vec![
            ControlStyle::Balance { target_x: 0.0 },
            ControlStyle::Balance { target_x: 0.6 },
            ControlStyle::Oscillate { amplitude: 0.4 },
            ControlStyle::Balance { target_x: -0.6 },
        ],
        EnvKind::PointLander(_) => vec![
            ControlStyle::Approach { arc: 0 },
            ControlStyle::Approach { arc: -1 },
            ControlStyle::Approach { arc: 1 },
        ],
    }
}

/// Deterministic state-feedback controller realizing one style.
#[derive(Debug, Clone)]
pub struct ScriptedController {
    style: ControlStyle,
    env: EnvKind,
    action_dim: usize,
}

/// Build the controller for a style; errors when the style does not belong
/// to the environment.
pub fn scripted_controller(spec: &EnvSpec, style: ControlStyle) -> Result<ScriptedController> {
    let valid = match (&spec.kind, &style) {
        (EnvKind::RailPendulum(_), ControlStyle::Balance { target_x }) => target_x.abs() <= 0.9,
        (EnvKind::RailPendulum(_), ControlStyle::Oscillate { amplitude }) => {
            *amplitude > 0.0 && *amplitude <= 0.9
        }
        (EnvKind::PointLander(_), ControlStyle::Approach { arc }) => arc.abs() <= 1,
        _ => false,
    };
    if !valid {
        return Err(Error::invalid(format!(
            "style {} is not available for environment {}",
            style.label(),
            spec.name
        )));
    }
    Ok(ScriptedController {
        style,
        env: spec.kind.clone(),
        action_dim: spec.action_dim(),
    })
}

impl ScriptedController {
    pub fn style(&self) -> ControlStyle {
        self.style
    }

    fn pendulum_action(&self, state: &[f64], target_x: f64) -> f64 {
        let (x, x_dot, theta, theta_dot) = (state[0], state[1], state[2], state[3]);
        // Pole-angle PD dominates; the cart-position loop leans the pole
        // set-point toward the target (a sustained lean of theta makes the
        // cart accelerate at roughly g*theta in the lean direction). Gains
        // are deliberately soft: the wobble spreads the demonstration's
        // state cloud, which keeps adversarial reward learning off the
        // saturated regime where a point-like expert is trivially separable.
        let theta_ref = (0.22 * (target_x - x) - 0.16 * x_dot).clamp(-0.18, 0.18);
        24.0 * (theta - theta_ref) + 5.0 * theta_dot
    }

    fn lander_action(&self, state: &[f64], arc: i8) -> (f64, f64) {
        let (x, y, vx, vy) = (state[0], state[1], state[2], state[3]);
        // Lateral corridor slanted with altitude: the set-point collapses to
        // the pad as the lander descends, so each arc returns by design.
        let tx = arc as f64 * 0.9 * y.max(0.0);
        let ax = 8.0 * (tx - x) + 4.0 * (0.0 - vx);
        // Vertical: track a brake-limited descent speed profile
        // v_ref = -sqrt(2 * 0.45 * y), which net thrust of +0.5 can always
        // arrest; gravity feedforward keeps the loop symmetric.
        let v_ref = if y > 0.0 {
            -(0.9 * y).sqrt().min(1.2)
        } else {
            (0.8 * -y).min(0.5)
        };
        let ay = 0.5 + 4.0 * (v_ref - vy);
        (ax.clamp(-1.0, 1.0), ay.clamp(-1.0, 1.0))
    }
}

impl ActionSource for ScriptedController {
    fn action_dim(&self) -> usize {
        self.action_dim
    }

    fn act(&self, state: &[f64], _rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        match (&self.env, self.style) {
            (EnvKind::RailPendulum(_), ControlStyle::Balance { target_x }) => {
                Ok(vec![self.pendulum_action(state, target_x)])
            }
            (EnvKind::RailPendulum(_), ControlStyle::Oscillate { amplitude }) => {
                // Relay on cart position: always chase the far side of the
                // rail, which sustains a slide back and forth across center.
                // The set-point overshoots the amplitude so the damped cart
                // actually reaches it.
                let target = 1.4 * if state[0] < 0.0 { amplitude } else { -amplitude };
                Ok(vec![self.pendulum_action(state, target)])
            }
            (EnvKind::PointLander(_), ControlStyle::Approach { arc }) => {
                let (ax, ay) = self.lander_action(state, arc);
                Ok(vec![ax, ay])
            }
            _ => Err(Error::invalid("controller/environment mismatch")),
        }
    }
}

/// Convex combination of scripted controllers, evaluated exactly at every
/// state (the controllers are deterministic).
pub struct ScriptedMixture {
    controllers: Vec<ScriptedController>,
    weights: Vec<f64>,
}

impl ScriptedMixture {
    pub fn new(controllers: Vec<ScriptedController>, weights: Vec<f64>) -> Result<Self> {
        if controllers.is_empty() {
            return Err(Error::Empty("mixture controllers"));
        }
        if controllers.len() != weights.len() {
            return Err(Error::Shape {
                context: "mixture weights",
                expected: controllers.len(),
                actual: weights.len(),
            });
        }
        Ok(ScriptedMixture {
            controllers,
            weights,
        })
    }
}

impl ActionSource for ScriptedMixture {
    fn action_dim(&self) -> usize {
        self.controllers[0].action_dim
    }

    fn act(&self, state: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let mut action = vec![0.0; self.action_dim()];
        for (controller, &w) in self.controllers.iter().zip(self.weights.iter()) {
            let a = controller.act(state, rng)?;
            for (acc, v) in action.iter_mut().zip(a.iter()) {
                *acc += w * v;
            }
        }
        Ok(action)
    }
}

/// One demonstration: trajectory plus evaluation-only generator metadata.
#[derive(Debug, Clone)]
pub struct DemoRecord {
    pub id: usize,
    pub trajectory: Trajectory,
    /// Generating weights over the scripted prototype styles. On the
    /// simplex; one-hot for pure-style records. Evaluation only.
    pub hidden_weights: Vec<f64>,
    pub generator_seed: u64,
    pub style_label: String,
}

impl DemoRecord {
    /// True when the generating weights are one-hot (a pure-style demo).
    pub fn is_pure(&self) -> bool {
        self.hidden_weights.iter().any(|&w| (w - 1.0).abs() < 1e-9)
    }
}

/// Ordered demonstrations sharing one environment; arrival order matters.
#[derive(Debug, Clone)]
pub struct DemoSet {
    pub env: EnvSpec,
    pub records: Vec<DemoRecord>,
}

/// Arrival ordering of the generated records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ArrivalOrder {
    /// Pure styles first in canonical order, then shuffled mixtures.
    #[default]
    PureFirst,
    /// Everything shuffled together.
    Shuffled,
}

/// Flat simplex draw floored at `floor` and renormalized, which keeps
/// mixture demos away from the degenerate near-pure corner.
fn floored_simplex(n: usize, floor: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let sum: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= sum;
        *v = v.max(floor);
    }
    let sum: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= sum;
    }
    w
}

/// Generate `n_pure` pure-style records followed by `n_mixture` mixture
/// records (ordering per `order`), all rolled out in `spec`.
pub fn generate_demo_set(
    spec: &EnvSpec,
    n_pure: usize,
    n_mixture: usize,
    seed: u64,
    order: ArrivalOrder,
) -> Result<DemoSet> {
    let styles = available_styles(spec);
    if n_pure == 0 {
        return Err(Error::invalid("need at least one pure style"));
    }
    if n_pure > styles.len() {
        return Err(Error::invalid(format!(
            "{n_pure} pure styles requested but only {} available for {}",
            styles.len(),
            spec.name
        )));
    }
    let controllers: Vec<ScriptedController> = styles[..n_pure]
        .iter()
        .map(|&s| scripted_controller(spec, s))
        .collect::<Result<_>>()?;

    let mut pure_records = Vec::with_capacity(n_pure);
    for (j, controller) in controllers.iter().enumerate() {
        let record_seed = rng::derive_seed(seed, Stream::DemoGen, &[j as u64]);
        let trajectory = spec.rollout(controller, record_seed)?;
        let mut hidden = vec![0.0; n_pure];
        hidden[j] = 1.0;
        pure_records.push(DemoRecord {
            id: 0, // assigned after ordering
            trajectory,
            hidden_weights: hidden,
            generator_seed: record_seed,
            style_label: controller.style().label(),
        });
    }

    let mut mix_rng = rng::derive_rng(seed, Stream::DemoGen, &[0xffff]);
    let mut mixture_records = Vec::with_capacity(n_mixture);
    for m in 0..n_mixture {
        let weights = floored_simplex(n_pure, 0.05, &mut mix_rng);
        let record_seed = rng::derive_seed(seed, Stream::DemoGen, &[1000 + m as u64]);
        let mixture = ScriptedMixture::new(controllers.clone(), weights.clone())?;
        let trajectory = spec.rollout(&mixture, record_seed)?;
        mixture_records.push(DemoRecord {
            id: 0,
            trajectory,
            hidden_weights: weights,
            generator_seed: record_seed,
            style_label: "mixture".to_string(),
        });
    }

    let mut order_rng = rng::derive_rng(seed, Stream::DemoGen, &[0xaaaa]);
    let mut records = match order {
        ArrivalOrder::PureFirst => {
            mixture_records.shuffle(&mut order_rng);
            let mut all = pure_records;
            all.extend(mixture_records);
            all
        }
        ArrivalOrder::Shuffled => {
            let mut all = pure_records;
            all.extend(mixture_records);
            all.shuffle(&mut order_rng);
            all
        }
    };
    for (i, r) in records.iter_mut().enumerate() {
        r.id = i;
    }
    Ok(DemoSet {
        env: spec.clone(),
        records,
    })
}

// ---------------------------------------------------------------------------
// File format: one JSON header line (environment spec, per-record metadata
// with hidden weights under an "eval_only" key), then per-record binary
// blocks of little-endian f64 states, actions, and rewards. Round-trips
// bit-exactly.
// ---------------------------------------------------------------------------

pub const DEMO_FILE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct DemoFileHeader {
    format_version: u32,
    env: EnvSpec,
    records: Vec<DemoRecordMeta>,
}

#[derive(Serialize, Deserialize)]
struct DemoRecordMeta {
    id: usize,
    generator_seed: u64,
    style_label: String,
    transitions: usize,
    eval_only: EvalOnlyMeta,
}

#[derive(Serialize, Deserialize)]
struct EvalOnlyMeta {
    hidden_weights: Vec<f64>,
}

pub fn write_demo_set(path: &Path, set: &DemoSet) -> Result<()> {
    let header = DemoFileHeader {
        format_version: DEMO_FILE_VERSION,
        env: set.env.clone(),
        records: set
            .records
            .iter()
            .map(|r| DemoRecordMeta {
                id: r.id,
                generator_seed: r.generator_seed,
                style_label: r.style_label.clone(),
                transitions: r.trajectory.len(),
                eval_only: EvalOnlyMeta {
                    hidden_weights: r.hidden_weights.clone(),
                },
            })
            .collect(),
    };
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(&mut file, &header)?;
    file.write_all(b"\n")?;
    for r in &set.records {
        for s in &r.trajectory.states {
            for v in s {
                file.write_all(&v.to_le_bytes())?;
            }
        }
        for a in &r.trajectory.actions {
            for v in a {
                file.write_all(&v.to_le_bytes())?;
            }
        }
        for v in &r.trajectory.rewards {
            file.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_demo_set(path: &Path) -> Result<DemoSet> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut header_bytes = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        file.read_exact(&mut byte)
            .map_err(|_| Error::CorruptFile("missing demo header".into()))?;
        if byte[0] == b'\n' {
            break;
        }
        header_bytes.push(byte[0]);
    }
    let header: DemoFileHeader = serde_json::from_slice(&header_bytes)?;
    if header.format_version != DEMO_FILE_VERSION {
        return Err(Error::FormatVersion {
            found: header.format_version,
            expected: DEMO_FILE_VERSION,
        });
    }
    let d_s = header.env.state_dim();
    let d_a = header.env.action_dim();
    let mut read_f64 = |count: usize| -> Result<Vec<f64>> {
        let mut out = vec![0.0f64; count];
        let mut buf = [0u8; 8];
        for v in out.iter_mut() {
            file.read_exact(&mut buf)
                .map_err(|_| Error::CorruptFile("truncated demo block".into()))?;
            *v = f64::from_le_bytes(buf);
        }
        Ok(out)
    };
    let mut records = Vec::with_capacity(header.records.len());
    let mut seen_ids = std::collections::HashSet::new();
    for meta in &header.records {
        if !seen_ids.insert(meta.id) {
            return Err(Error::CorruptFile(format!("duplicate demo id {}", meta.id)));
        }
        let t = meta.transitions;
        let states_flat = read_f64((t + 1) * d_s)?;
        let actions_flat = read_f64(t * d_a)?;
        let rewards = read_f64(t)?;
        let states = states_flat.chunks(d_s).map(<[f64]>::to_vec).collect();
        let actions = actions_flat.chunks(d_a).map(<[f64]>::to_vec).collect();
        records.push(DemoRecord {
            id: meta.id,
            trajectory: Trajectory::new(states, actions, rewards)?,
            hidden_weights: meta.eval_only.hidden_weights.clone(),
            generator_seed: meta.generator_seed,
            style_label: meta.style_label.clone(),
        });
    }
    Ok(DemoSet {
        env: header.env,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pendulum() -> EnvSpec {
        EnvSpec::rail_pendulum()
    }

    #[test]
    fn balance_controller_keeps_pole_up() {
        let spec = pendulum();
        let c = scripted_controller(&spec, ControlStyle::Balance { target_x: 0.0 }).unwrap();
        let traj = spec.rollout(&c, 7).unwrap();
        let mean_abs_angle: f64 =
            traj.states.iter().map(|s| s[2].abs()).sum::<f64>() / traj.states.len() as f64;
        assert!(mean_abs_angle < 0.05, "mean |theta| = {mean_abs_angle}");
    }

    #[test]
    fn offset_balance_reaches_target() {
        let spec = pendulum();
        for target in [0.6, -0.6] {
            let c = scripted_controller(&spec, ControlStyle::Balance { target_x: target }).unwrap();
            let traj = spec.rollout(&c, 11).unwrap();
            let tail_mean_x: f64 =
                traj.states[150..].iter().map(|s| s[0]).sum::<f64>() / 51.0;
            assert!(
                (tail_mean_x - target).abs() < 0.2,
                "target {target}: settled at {tail_mean_x}"
            );
            let mean_abs_angle: f64 =
                traj.states.iter().map(|s| s[2].abs()).sum::<f64>() / traj.states.len() as f64;
            assert!(mean_abs_angle < 0.2, "mean |theta| = {mean_abs_angle}");
        }
    }

    #[test]
    fn oscillate_controller_crosses_the_rail() {
        let spec = pendulum();
        let c =
            scripted_controller(&spec, ControlStyle::Oscillate { amplitude: 0.4 }).unwrap();
        let traj = spec.rollout(&c, 13).unwrap();
        let mut crossings = 0;
        for pair in traj.states.windows(2) {
            for bound in [0.3, -0.3] {
                if (pair[0][0] - bound).signum() != (pair[1][0] - bound).signum() {
                    crossings += 1;
                }
            }
        }
        assert!(crossings >= 3, "only {crossings} crossings of +-0.3");
        let mean_abs_angle: f64 =
            traj.states.iter().map(|s| s[2].abs()).sum::<f64>() / traj.states.len() as f64;
        assert!(mean_abs_angle < 0.25, "pole fell during oscillation");
    }

    #[test]
    fn lander_styles_reach_the_pad() {
        let spec = EnvSpec::point_lander();
        for arc in [-1, 0, 1] {
            let c = scripted_controller(&spec, ControlStyle::Approach { arc }).unwrap();
            let traj = spec.rollout(&c, 17).unwrap();
            let last = traj.states.last().unwrap();
            let dist = (last[0] * last[0] + last[1] * last[1]).sqrt();
            assert!(dist < 0.15, "arc {arc}: final distance {dist}");
            let speed = (last[2] * last[2] + last[3] * last[3]).sqrt();
            assert!(speed < 0.3, "arc {arc}: final speed {speed}");
        }
        // The straight vertical descent arrives softly enough for the bonus.
        let c = scripted_controller(&spec, ControlStyle::Approach { arc: 0 }).unwrap();
        let traj = spec.rollout(&c, 17).unwrap();
        assert!(
            traj.rewards.last().unwrap() > &5.0,
            "vertical descent should earn the landing bonus"
        );
    }

    #[test]
    fn lander_arcs_are_distinct() {
        let spec = EnvSpec::point_lander();
        let left = spec
            .rollout(
                &scripted_controller(&spec, ControlStyle::Approach { arc: -1 }).unwrap(),
                19,
            )
            .unwrap();
        let right = spec
            .rollout(
                &scripted_controller(&spec, ControlStyle::Approach { arc: 1 }).unwrap(),
                19,
            )
            .unwrap();
        let min_x_left = left.states.iter().map(|s| s[0]).fold(f64::MAX, f64::min);
        let max_x_right = right.states.iter().map(|s| s[0]).fold(f64::MIN, f64::max);
        assert!(min_x_left < -0.2, "left arc never swung left: {min_x_left}");
        assert!(max_x_right > 0.2, "right arc never swung right: {max_x_right}");
    }

    #[test]
    fn controllers_are_deterministic() {
        let spec = pendulum();
        let c = scripted_controller(&spec, ControlStyle::Balance { target_x: 0.0 }).unwrap();
        assert_eq!(spec.rollout(&c, 3).unwrap(), spec.rollout(&c, 3).unwrap());
    }

    #[test]
    fn unknown_style_rejected() {
        let spec = pendulum();
        assert!(scripted_controller(&spec, ControlStyle::Approach { arc: 0 }).is_err());
        assert!(
            scripted_controller(&spec, ControlStyle::Balance { target_x: 5.0 }).is_err()
        );
    }

    #[test]
    fn mixture_action_is_exact_convex_combination() {
        let spec = pendulum();
        let c0 = scripted_controller(&spec, ControlStyle::Balance { target_x: 0.0 }).unwrap();
        let c1 = scripted_controller(&spec, ControlStyle::Balance { target_x: 0.6 }).unwrap();
        let mixture =
            ScriptedMixture::new(vec![c0.clone(), c1.clone()], vec![0.7, 0.3]).unwrap();
        let mut rng = rng::derive_rng(0, Stream::DemoGen, &[]);
        let state = [0.1, -0.05, 0.02, 0.0];
        let a0 = c0.act(&state, &mut rng).unwrap()[0];
        let a1 = c1.act(&state, &mut rng).unwrap()[0];
        let am = mixture.act(&state, &mut rng).unwrap()[0];
        assert!((am - (0.7 * a0 + 0.3 * a1)).abs() < 1e-12);
    }

    #[test]
    fn pure_demo_set_has_one_hot_weights() {
        let spec = pendulum();
        let set = generate_demo_set(&spec, 3, 0, 5, ArrivalOrder::PureFirst).unwrap();
        assert_eq!(set.records.len(), 3);
        for (j, r) in set.records.iter().enumerate() {
            assert!(r.is_pure());
            assert!((r.hidden_weights[j] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ten_demo_set_composition() {
        let spec = pendulum();
        let set = generate_demo_set(&spec, 3, 7, 5, ArrivalOrder::PureFirst).unwrap();
        assert_eq!(set.records.len(), 10);
        assert!(set.records[..3].iter().all(DemoRecord::is_pure));
        for r in &set.records[3..] {
            assert!(!r.is_pure());
            let sum: f64 = r.hidden_weights.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            // Floor 0.05 before renormalization; the post-normalization
            // minimum is 0.05 / (1 + n * 0.05).
            let floor = 0.05 / (1.0 + 3.0 * 0.05);
            assert!(r.hidden_weights.iter().all(|&w| w >= floor - 1e-12));
        }
        let ids: Vec<usize> = set.records.iter().map(|r| r.id).collect();
        assert_eq!(ids, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn scalability_set_size() {
        let spec = EnvSpec::point_lander();
        let set = generate_demo_set(&spec, 3, 97, 6, ArrivalOrder::PureFirst).unwrap();
        assert_eq!(set.records.len(), 100);
    }

    #[test]
    fn generation_is_reproducible() {
        let spec = pendulum();
        let a = generate_demo_set(&spec, 3, 4, 9, ArrivalOrder::PureFirst).unwrap();
        let b = generate_demo_set(&spec, 3, 4, 9, ArrivalOrder::PureFirst).unwrap();
        for (ra, rb) in a.records.iter().zip(b.records.iter()) {
            assert_eq!(ra.trajectory, rb.trajectory);
            assert_eq!(ra.hidden_weights, rb.hidden_weights);
        }
    }

    #[test]
    fn requesting_too_many_styles_errors() {
        let spec = pendulum();
        assert!(generate_demo_set(&spec, 9, 0, 1, ArrivalOrder::PureFirst).is_err());
    }

    #[test]
    fn demo_file_round_trips_bit_exactly() {
        let spec = pendulum();
        let set = generate_demo_set(&spec, 2, 3, 21, ArrivalOrder::PureFirst).unwrap();
        let dir = std::env::temp_dir().join(format!("flair_demo_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("set.demos");
        write_demo_set(&path, &set).unwrap();
        let loaded = read_demo_set(&path).unwrap();
        assert_eq!(loaded.env, set.env);
        assert_eq!(loaded.records.len(), set.records.len());
        for (a, b) in loaded.records.iter().zip(set.records.iter()) {
            assert_eq!(a.trajectory, b.trajectory);
            assert_eq!(a.hidden_weights, b.hidden_weights);
            assert_eq!(a.generator_seed, b.generator_seed);
        }
        // Byte-identical rewrite.
        let original = std::fs::read(&path).unwrap();
        let path2 = dir.join("set2.demos");
        write_demo_set(&path2, &loaded).unwrap();
        assert_eq!(original, std::fs::read(&path2).unwrap());
        std::fs::remove_dir_all(&dir).ok();
    }
}
