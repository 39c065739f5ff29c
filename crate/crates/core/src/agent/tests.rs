use super::*;
use crate::nn::Layer;
use approx::assert_abs_diff_eq;
use ndarray::{array, Array2};

fn tiny_config() -> AgentConfig {
    AgentConfig {
        hidden_layers: vec![],
        spread_width: 0,
        batch_size: 1,
        buffer_capacity: 10,
        saturation_coef: 0.0,
        grad_clip: 0.0,
        ..Default::default()
    }
}

fn single(w: Array2<f64>, b: ndarray::Array1<f64>, out: Activation) -> DenseNetwork {
    DenseNetwork::from_layers(vec![Layer { weights: w, bias: b }], Activation::Relu, out).unwrap()
}

/// Actor 3 -> 2 (sigmoid), critic 5 -> 1 (identity), state width 3.
fn tiny_agent(config: AgentConfig) -> Agent {
    let actor = single(
        array![[0.3, -0.2], [0.1, 0.4], [-0.5, 0.2]],
        array![0.05, -0.1],
        Activation::Sigmoid,
    );
    let critic = single(
        array![[0.2], [-0.1], [0.4], [0.7], [-0.3]],
        array![0.15],
        Activation::Identity,
    );
    Agent::from_networks(3, vec![2], config, actor, critic, None).unwrap()
}

fn transition(s: [f64; 3], a: [f64; 2], r: f64, s2: [f64; 3], done: bool) -> Transition {
    Transition {
        state: StateVector(s.to_vec()),
        action: ActionVector(a.to_vec()),
        reward: r,
        next_state: StateVector(s2.to_vec()),
        done,
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[test]
fn terminal_and_undiscounted_targets_equal_reward() {
    let agent = tiny_agent(tiny_config());
    let t = transition([0.1, 0.2, 0.3], [0.5, 0.5], 1.25, [0.4, 0.5, 0.6], true);
    let batch = Batch::from_transitions(&[&t]);
    assert_eq!(agent.td_targets(&batch).unwrap()[0], 1.25);

    let mut agent = tiny_agent(tiny_config());
    agent.config.gamma = 0.0;
    let t = transition([0.1, 0.2, 0.3], [0.5, 0.5], -0.75, [0.4, 0.5, 0.6], false);
    let batch = Batch::from_transitions(&[&t]);
    assert_eq!(agent.td_targets(&batch).unwrap()[0], -0.75);
}

#[test]
fn critic_loss_matches_scalar_evaluation() {
    let mut agent = tiny_agent(tiny_config());
    let t = transition([0.1, 0.2, 0.3], [0.6, 0.1], 0.5, [0.4, 0.5, 0.6], false);
    // next action from the (identical) target actor
    let s2 = [0.4, 0.5, 0.6];
    let a2 = [
        sigmoid(0.05 + 0.3 * s2[0] + 0.1 * s2[1] - 0.5 * s2[2]),
        sigmoid(-0.1 - 0.2 * s2[0] + 0.4 * s2[1] + 0.2 * s2[2]),
    ];
    let wc = [0.2, -0.1, 0.4, 0.7, -0.3];
    let q = |s: [f64; 3], a: [f64; 2]| {
        0.15 + wc[0] * s[0] + wc[1] * s[1] + wc[2] * s[2] + wc[3] * a[0] + wc[4] * a[1]
    };
    let y = 0.5 + 0.99 * q(s2, a2);
    let expected = (q([0.1, 0.2, 0.3], [0.6, 0.1]) - y).powi(2);
    let loss = agent.critic_update(&Batch::from_transitions(&[&t])).unwrap();
    assert_abs_diff_eq!(loss, expected, epsilon = 1e-14);
}

#[test]
fn constant_critic_leaves_actor_unchanged() {
    let mut config = tiny_config();
    config.saturation_coef = 0.0;
    let mut agent = tiny_agent(config);
    agent.critic = single(Array2::zeros((5, 1)), array![2.0], Activation::Identity);
    let before = agent.actor.clone();
    let t = transition([0.1, 0.2, 0.3], [0.6, 0.1], 0.5, [0.4, 0.5, 0.6], false);
    let objective = agent.actor_update(&Batch::from_transitions(&[&t])).unwrap();
    assert_eq!(objective, 2.0);
    assert_eq!(agent.actor, before);

    // with saturated outputs only the penalty moves the actor
    let mut config = tiny_config();
    config.saturation_coef = 1.0;
    config.saturation_threshold = 0.1;
    let mut agent = tiny_agent(config);
    agent.critic = single(Array2::zeros((5, 1)), array![2.0], Activation::Identity);
    let before = agent.actor.clone();
    let t = transition([1.0, 1.0, 0.0], [0.6, 0.1], 0.5, [0.4, 0.5, 0.6], false);
    agent.actor_update(&Batch::from_transitions(&[&t])).unwrap();
    assert_ne!(agent.actor, before);
}

#[test]
fn linear_critic_pushes_first_action_up() {
    let mut agent = tiny_agent(tiny_config());
    agent.critic = single(
        array![[0.0], [0.0], [0.0], [1.0], [0.0]],
        array![0.0],
        Activation::Identity,
    );
    let items: Vec<Transition> = (0..4)
        .map(|i| {
            let x = i as f64 * 0.2;
            transition([x, 1.0 - x, 0.5], [0.0, 0.0], 0.0, [0.0; 3], false)
        })
        .collect();
    let refs: Vec<&Transition> = items.iter().collect();
    let batch = Batch::from_transitions(&refs);
    let mean_a0 = |agent: &Agent| agent.policy(batch.states.view()).unwrap().column(0).mean().unwrap();
    let before = mean_a0(&agent);
    agent.actor_update(&batch).unwrap();
    assert!(mean_a0(&agent) > before);
}

/// Objective `mean Q(s, μ(spread(s))) − penalty/B` evaluated from scratch.
fn objective(agent: &Agent, states: &Array2<f64>) -> f64 {
    agent.actor_gradients(states.view()).unwrap().0
}

fn check_against_finite_differences(agent: &Agent, states: &Array2<f64>) {
    let (_, actor_tape, spread_tape) = agent.actor_gradients(states.view()).unwrap();
    let eps = 1e-5;
    let flat = |tape: &GradientTape| {
        tape.weights
            .iter()
            .zip(&tape.biases)
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied().collect::<Vec<_>>())
            .collect::<Vec<f64>>()
    };
    let analytic = flat(&actor_tape);
    let base = agent.actor.flat_parameters();
    let mut probe = agent.clone();
    for k in 0..base.len() {
        let mut p = base.clone();
        p[k] += eps;
        probe.actor.set_flat_parameters(&p).unwrap();
        let up = objective(&probe, states);
        p[k] -= 2.0 * eps;
        probe.actor.set_flat_parameters(&p).unwrap();
        let down = objective(&probe, states);
        // tapes hold descent directions of the objective
        let n = -(up - down) / (2.0 * eps);
        assert!((analytic[k] - n).abs() <= 1e-4 * analytic[k].abs().max(n.abs()) + 1e-9);
    }
    if let Some(tape) = spread_tape {
        let analytic = flat(&tape);
        let base = agent.spread.as_ref().unwrap().flat_parameters();
        let mut probe = agent.clone();
        for k in 0..base.len() {
            let mut p = base.clone();
            p[k] += eps;
            probe.spread.as_mut().unwrap().set_flat_parameters(&p).unwrap();
            let up = objective(&probe, states);
            p[k] -= 2.0 * eps;
            probe.spread.as_mut().unwrap().set_flat_parameters(&p).unwrap();
            let down = objective(&probe, states);
            let n = -(up - down) / (2.0 * eps);
            assert!((analytic[k] - n).abs() <= 1e-4 * analytic[k].abs().max(n.abs()) + 1e-9);
        }
    }
}

#[test]
fn actor_gradient_matches_finite_differences() {
    let mut rng = stream(21, Stream::Agent);
    let config = AgentConfig {
        hidden_layers: vec![3],
        spread_width: 0,
        saturation_coef: 0.05,
        saturation_threshold: 0.2,
        ..tiny_config()
    };
    let mut agent = Agent::new(4, 2, vec![3], config, &mut rng).unwrap();
    for l in agent.actor.layers_mut() {
        l.weights.mapv_inplace(|w| w * 3.0);
    }
    let states = Array2::from_shape_fn((5, 4), |(i, j)| ((i * 4 + j) as f64 * 0.37).sin().abs());
    check_against_finite_differences(&agent, &states);
}

#[test]
fn spread_gradient_matches_finite_differences() {
    let mut rng = stream(22, Stream::Agent);
    let config = AgentConfig {
        hidden_layers: vec![6, 5],
        spread_width: 3,
        saturation_coef: 0.01,
        ..tiny_config()
    };
    let agent = Agent::new(6, 2, vec![2, 5], config, &mut rng).unwrap();
    assert_eq!(agent.actor.input_size(), 4 + 3);
    let states = Array2::from_shape_fn((4, 6), |(i, j)| ((i * 6 + j) as f64 * 0.61).cos().abs());
    check_against_finite_differences(&agent, &states);
}

#[test]
fn action_selection() {
    let mut rng = stream(3, Stream::Agent);
    let config = AgentConfig { hidden_layers: vec![16], ..AgentConfig::default() };
    let agent = Agent::new(30, 8, energy_indices(2), config, &mut rng).unwrap();
    let s = StateVector((0..30).map(|i| i as f64 / 30.0).collect());
    let mut noise = stream(3, Stream::Noise);
    let a = agent.select_action(&s, 0.0, &mut noise).unwrap();
    assert_eq!(a, agent.select_action(&s, 0.0, &mut noise).unwrap());
    assert_eq!(a.0.len(), 8);
    let wild = agent.select_action(&s, 5.0, &mut noise).unwrap();
    assert!(wild.0.iter().all(|v| (0.0..=1.0).contains(v)));
    assert!(wild.0.iter().any(|v| *v == 0.0 || *v == 1.0));
}

#[test]
fn soft_update_keeps_shapes_and_contracts() {
    let mut rng = stream(4, Stream::Agent);
    let config = AgentConfig { hidden_layers: vec![8], tau: 0.25, ..tiny_config() };
    let mut agent = Agent::new(6, 2, vec![5], config, &mut rng).unwrap();
    agent.actor.layers_mut()[0].weights.mapv_inplace(|w| w + 1.0);
    let before = agent.actor_target.flat_parameters();
    agent.soft_update_targets().unwrap();
    assert_eq!(agent.actor_target.sizes(), agent.actor.sizes());
    for ((t1, t0), o) in agent
        .actor_target
        .flat_parameters()
        .iter()
        .zip(&before)
        .zip(agent.actor.flat_parameters())
    {
        assert!(((t1 - o).abs() - 0.75 * (t0 - o).abs()).abs() < 1e-15);
    }
}

#[test]
fn zero_episodes_leave_networks_untouched() {
    let env_config = EnvConfig::default();
    let config = AgentConfig { episodes: 0, hidden_layers: vec![8], ..AgentConfig::default() };
    let out = train(&env_config, &config, 5).unwrap();
    assert!(out.curve.is_empty());
    let mut rng = stream(5, Stream::Agent);
    let fresh = Agent::new(30, 8, energy_indices(2), config, &mut rng).unwrap();
    assert_eq!(out.agent.actor, fresh.actor);
    assert_eq!(out.agent.critic, fresh.critic);
}

#[test]
fn training_is_reproducible() {
    let env_config = EnvConfig::default();
    let config = AgentConfig {
        episodes: 2,
        hidden_layers: vec![16, 16],
        batch_size: 16,
        ..AgentConfig::default()
    };
    let a = train(&env_config, &config, 9).unwrap();
    let b = train(&env_config, &config, 9).unwrap();
    let bits = |c: &[CurvePoint]| {
        c.iter()
            .map(|p| (p.total_reward.to_bits(), p.mean_q.to_bits()))
            .collect::<Vec<_>>()
    };
    assert_eq!(bits(&a.curve), bits(&b.curve));
    assert_eq!(a.agent.actor, b.agent.actor);
    let c = train(&env_config, &config, 10).unwrap();
    assert_ne!(bits(&a.curve), bits(&c.curve));
}

#[test]
fn noise_schedule_is_linear() {
    let c = AgentConfig::default();
    assert_eq!(c.noise_sigma(0), 0.2);
    assert_abs_diff_eq!(c.noise_sigma(49), 0.02, epsilon = 1e-15);
    assert!(c.noise_sigma(25) < c.noise_sigma(24));
}
