use lightrl_core::nn::{softmax, train_minibatch, Activation, Layer, LearningRate, Loss, MiniBatch, Sample, Target, TinyMlp};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense evaluation written input-major, independent of the library's loop order.
fn reference_forward(layers: &[Layer], x: &[f64]) -> Vec<f64> {
    let mut a = x.to_vec();
    for l in layers {
        let mut z = l.biases.clone();
        for (i, xi) in a.iter().enumerate() {
            for (o, zo) in z.iter_mut().enumerate() {
                *zo += l.weights[o * l.inputs + i] * xi;
            }
        }
        a = match l.activation {
            Activation::Relu => z.into_iter().map(|v| if v > 0.0 { v } else { 0.0 }).collect(),
            Activation::Identity => z,
            Activation::Softmax => {
                let m = z.iter().cloned().fold(f64::MIN, f64::max);
                let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
                let s: f64 = e.iter().sum();
                e.into_iter().map(|v| v / s).collect()
            }
        };
    }
    a
}

fn random_input(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn forward_matches_independent_evaluation() {
    let nets = [
        TinyMlp::new(&[9, 9, 3], Activation::Relu, Activation::Identity, 1).unwrap(),
        TinyMlp::new(&[9, 64, 64, 8], Activation::Relu, Activation::Softmax, 2).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for net in &nets {
        for _ in 0..100 {
            let x = random_input(&mut rng, 9);
            let got = net.predict(&x).unwrap();
            let want = reference_forward(net.layers(), &x);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-12, "{g} vs {w}");
            }
        }
    }
}

fn nll(net: &TinyMlp, x: &[f64], class: usize) -> f64 {
    -net.predict(x).unwrap()[class].ln()
}

#[test]
fn fused_nll_step_follows_finite_difference_gradient() {
    let net = TinyMlp::new(&[9, 16, 4], Activation::Relu, Activation::Softmax, 7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let h = 1e-5;
    let rate = 1e-3;
    for probe in 0..10 {
        let x = random_input(&mut rng, 9);
        let class = probe % 4;
        let mut stepped = net.clone();
        let batch = MiniBatch::new(vec![Sample::new(x.clone(), Target::Class(class))]);
        train_minibatch(&mut stepped, &batch, Loss::WeightedNll, rate).unwrap();
        let p0 = net.parameters();
        let p1 = stepped.parameters();
        let mut probe_net = net.clone();
        for i in 0..p0.len() {
            let g = (p0[i] - p1[i]) / rate;
            let mut p = p0.clone();
            p[i] = p0[i] + h;
            probe_net.set_parameters(&p).unwrap();
            let up = nll(&probe_net, &x, class);
            p[i] = p0[i] - h;
            probe_net.set_parameters(&p).unwrap();
            let down = nll(&probe_net, &x, class);
            let fd = (up - down) / (2.0 * h);
            let err = (g - fd).abs() / g.abs().max(fd.abs()).max(1e-6);
            assert!(err < 1e-4, "param {i}: step {g} vs fd {fd}");
        }
    }
}

#[test]
fn regression_error_drops_a_hundredfold() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = [0.7, -1.2, 0.4];
    let samples: Vec<Sample> = (0..32)
        .map(|_| {
            let x = random_input(&mut rng, 3);
            let y = a.iter().zip(&x).map(|(a, x)| a * x).sum::<f64>() + 0.3;
            Sample::new(x, Target::Values(vec![y]))
        })
        .collect();
    let batch = MiniBatch::new(samples);
    let mut net = TinyMlp::new(&[3, 16, 1], Activation::Relu, Activation::Identity, 5).unwrap();
    let mse = |net: &TinyMlp| {
        batch
            .samples
            .iter()
            .map(|s| match &s.target {
                Target::Values(t) => (net.predict(&s.input).unwrap()[0] - t[0]).powi(2),
                _ => unreachable!(),
            })
            .sum::<f64>()
            / 32.0
    };
    let start = mse(&net);
    let schedule = LearningRate::with_base(0.05);
    for step in 0..2000 {
        train_minibatch(&mut net, &batch, Loss::SquaredError, schedule.at(step, 2000)).unwrap();
    }
    let end = mse(&net);
    assert!(end * 100.0 <= start, "{start} -> {end}");
}

#[test]
fn weighted_nll_recovers_sample_frequencies() {
    let mut net = TinyMlp::new(&[1, 2], Activation::Relu, Activation::Softmax, 6).unwrap();
    let batch = MiniBatch::new(vec![
        Sample::weighted(vec![1.0], Target::Class(0), 1.0),
        Sample::weighted(vec![1.0], Target::Class(1), 3.0),
    ]);
    for _ in 0..5000 {
        train_minibatch(&mut net, &batch, Loss::WeightedNll, 0.1).unwrap();
    }
    let p = net.predict(&[1.0]).unwrap();
    assert!((p[0] - 0.25).abs() < 0.02 && (p[1] - 0.75).abs() < 0.02, "{p:?}");
}

proptest! {
    #[test]
    fn softmax_is_a_distribution(scores in prop::collection::vec(-50.0f64..50.0, 1..12)) {
        let p = softmax(&scores);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn parameters_round_trip(seed in 0u64..1000, x in prop::collection::vec(-1.0f64..1.0, 4)) {
        let a = TinyMlp::new(&[4, 5, 3], Activation::Relu, Activation::Identity, seed).unwrap();
        let mut b = TinyMlp::new(&[4, 5, 3], Activation::Relu, Activation::Identity, seed + 1).unwrap();
        b.set_parameters(&a.parameters()).unwrap();
        prop_assert_eq!(a.predict(&x).unwrap(), b.predict(&x).unwrap());
    }

    #[test]
    fn rejected_step_leaves_net_untouched(seed in 0u64..1000, t in -2.0f64..2.0) {
        let mut net = TinyMlp::new(&[2, 4, 1], Activation::Relu, Activation::Identity, seed).unwrap();
        let before = net.parameters();
        let batch = MiniBatch::new(vec![Sample::new(vec![0.5, -0.5], Target::Values(vec![t]))]);
        prop_assert!(train_minibatch(&mut net, &batch, Loss::SquaredError, 0.0).is_err());
        prop_assert_eq!(net.parameters(), before);
    }
}
