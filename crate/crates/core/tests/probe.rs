//! Temporary tuning probe (deleted before finalizing).

use flair_core::demo::{scripted_controller, ControlStyle};
use flair_core::env::EnvSpec;
use flair_core::reward::{AirlConfig, AirlTrainer, FusionBuffer, RewardModel};
use flair_core::rng::{derive_seed, Stream};

fn curve(
    spec: &EnvSpec,
    demo: &flair_core::trajectory::Trajectory,
    cfg: AirlConfig,
    iters: usize,
    seed: u64,
) -> (Vec<String>, f64) {
    let mut model = RewardModel::new(spec.state_dim(), 64, 0.99, seed);
    model.push_strategy(seed + 1);
    let mut fusion = FusionBuffer::new(10_000);
    let mut out = Vec::new();
    let t0 = std::time::Instant::now();
    {
        let mut trainer = AirlTrainer::new(&mut model, 0, demo, spec, cfg, seed).unwrap();
        for it in 0..iters {
            trainer.step(&mut fusion).unwrap();
            if (it + 1) % 100 == 0 {
                let p = trainer.policy.clone();
                let ret: f64 = (0..3)
                    .map(|r| {
                        spec.rollout(&p, derive_seed(9, Stream::Eval, &[seed, r]))
                            .unwrap()
                            .total_return()
                    })
                    .sum::<f64>()
                    / 3.0;
                out.push(format!("{}:{ret:.1}", it + 1));
            }
        }
    }
    (out, t0.elapsed().as_secs_f64())
}

#[test]
#[ignore]
fn probe_rail_600() {
    let spec = EnvSpec::rail_pendulum();
    let controller = scripted_controller(&spec, ControlStyle::Balance { target_x: 0.0 }).unwrap();
    let demo = spec
        .rollout(&controller, derive_seed(1, Stream::DemoGen, &[0]))
        .unwrap();
    println!("rail demo return: {:.3}", demo.total_return());
    for seed in [42u64, 43, 44, 45, 46] {
        let mut cfg = AirlConfig::default();
        cfg.disc_batch = 32;
        cfg.pg.learning_rate = 1.0;
        cfg.pg.episodes_per_iteration = 20;
        cfg.policy_init_log_std = 0.5;
        let (points, secs) = curve(&spec, &demo, cfg, 600, seed);
        println!("rail seed={seed}: {secs:.0}s {points:?}");
    }
}

#[test]
#[ignore]
fn probe_lander() {
    let spec = EnvSpec::point_lander();
    let controller = scripted_controller(&spec, ControlStyle::Approach { arc: 0 }).unwrap();
    let demo = spec
        .rollout(&controller, derive_seed(1, Stream::DemoGen, &[0]))
        .unwrap();
    println!("lander demo return: {:.3}", demo.total_return());
    for (ls0, lr) in [(-0.3, 1.0), (0.0, 1.0)] {
        for seed in [42u64, 43] {
            let mut cfg = AirlConfig::default();
            cfg.disc_batch = 32;
            cfg.pg.learning_rate = lr;
            cfg.pg.episodes_per_iteration = 20;
            cfg.policy_init_log_std = ls0;
            let (points, secs) = curve(&spec, &demo, cfg, 300, seed);
            println!("lander ls0={ls0} lr={lr} seed={seed}: {secs:.0}s {points:?}");
        }
    }
}

#[test]
#[ignore]
fn probe_lifelong_ten() {
    use flair_core::config::ExperimentConfig;
    use flair_core::demo::{generate_demo_set, ArrivalOrder};
    let spec = EnvSpec::rail_pendulum();
    let set = generate_demo_set(&spec, 3, 7, 1000, ArrivalOrder::PureFirst).unwrap();
    for r in &set.records {
        println!("demo {} style={} hidden={:?} ret={:.2}", r.id, r.style_label, r.hidden_weights.iter().map(|w| (w * 100.0).round() / 100.0).collect::<Vec<_>>(), r.trajectory.total_return());
    }
    let mut config = ExperimentConfig::default_for("rail-pendulum").unwrap().lifelong;
    config.search.sample_cap = 600;
    let t0 = std::time::Instant::now();
    let report = flair_core::lifelong::run_lifelong(&set, &config, 2000, None).unwrap();
    println!("run took {:.0}s; {} strategies", t0.elapsed().as_secs_f64(), report.final_strategy_count);
    for d in &report.decisions {
        println!(
            "demo {}: {:?} klmix={:?} klnew={:?} w={:?} eps_search={} eps_train={}",
            d.demo_id, d.branch,
            d.kl_mixture.map(|v| (v * 100.0).round() / 100.0),
            d.kl_new_strategy.map(|v| (v * 100.0).round() / 100.0),
            d.weights.iter().map(|w| (w * 100.0).round() / 100.0).collect::<Vec<_>>(),
            d.episodes_search, d.episodes_training
        );
    }
    for m in &report.metrics {
        println!("demo {}: ret={:.2} ll={:.0} kl={:.2}", m.demo_id, m.environment_return, m.log_likelihood, m.kl_accepted);
    }
}

#[test]
#[ignore]
fn probe_styles_600() {
    let spec = EnvSpec::rail_pendulum();
    for style in [
        ControlStyle::Balance { target_x: 0.6 },
        ControlStyle::Oscillate { amplitude: 0.4 },
    ] {
        let controller = scripted_controller(&spec, style).unwrap();
        let demo = spec
            .rollout(&controller, derive_seed(1, Stream::DemoGen, &[0]))
            .unwrap();
        println!("{style:?} demo return: {:.3}", demo.total_return());
        for seed in [42u64, 43, 44] {
            let mut cfg = AirlConfig::default();
            cfg.disc_batch = 32;
            cfg.pg.learning_rate = 1.0;
            cfg.pg.episodes_per_iteration = 20;
            cfg.policy_init_log_std = 0.5;
            let (points, secs) = curve(&spec, &demo, cfg, 600, seed);
            println!("{style:?} seed={seed}: {secs:.0}s {points:?}");
        }
    }
}
