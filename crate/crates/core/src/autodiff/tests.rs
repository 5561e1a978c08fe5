use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};

use super::*;

const H: f64 = 1e-5;

fn normal_matrix(rows: usize, cols: usize, sd: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = Normal::new(0.0, sd).unwrap();
    Array2::from_shape_simple_fn((rows, cols), || n.sample(rng))
}

fn random_activation(rng: &mut ChaCha8Rng) -> Activation {
    match rng.random_range(0..4) {
        0 => Activation::LeakyRelu { slope: 0.2 },
        1 => Activation::Tanh,
        2 => Activation::Sigmoid,
        _ => Activation::Identity,
    }
}

fn random_mlp(rng: &mut ChaCha8Rng, discriminator: bool) -> Mlp {
    let depth = rng.random_range(1..=3);
    let mut sizes = vec![rng.random_range(1..=4)];
    for _ in 0..depth - 1 {
        sizes.push(rng.random_range(2..=6));
    }
    sizes.push(if discriminator { 1 } else { rng.random_range(1..=3) });
    let layers = (0..depth)
        .map(|i| Layer {
            weight: normal_matrix(sizes[i], sizes[i + 1], 0.8, rng),
            bias: rng.random_bool(0.8).then(|| normal_matrix(1, sizes[i + 1], 0.5, rng)),
            activation: if discriminator && i + 1 == depth {
                Activation::Sigmoid
            } else {
                random_activation(rng)
            },
        })
        .collect();
    Mlp::from_layers(layers).unwrap()
}

/// Smallest |pre-activation| feeding a leaky ReLU anywhere in the pass.
fn kink_distance(net: &Mlp, x: &Array2<f64>) -> f64 {
    let mut h = x.clone();
    let mut min = f64::INFINITY;
    for l in net.layers() {
        let mut z = h.dot(&l.weight);
        if let Some(b) = &l.bias {
            z += b;
        }
        if matches!(l.activation, Activation::LeakyRelu { .. }) {
            min = z.iter().fold(min, |m, v| m.min(v.abs()));
        }
        let one = Mlp::from_layers(vec![Layer {
            weight: Array2::eye(z.ncols()),
            bias: None,
            activation: l.activation,
        }])
        .unwrap();
        h = one.forward(&z).unwrap();
    }
    min
}

/// Relative error with a 1e-4 denominator floor: central differences carry
/// about ε·|f|/h ≈ 1e-11 of round-off, which swamps entries near zero.
fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-4)
}

fn with_param(net: &Mlp, idx: usize, r: usize, c: usize, delta: f64) -> Mlp {
    let mut n = net.clone();
    n.params_mut()[idx][[r, c]] += delta;
    n
}

/// Scalar test objective: sum of tanh of the outputs, weighted per column.
fn objective_value(net: &Mlp, x: &Array2<f64>) -> f64 {
    let out = net.forward(x).unwrap();
    out.indexed_iter().map(|((_, j), v)| (j as f64 + 1.0) * v.tanh()).sum()
}

fn objective_grads(net: &Mlp, x: &Array2<f64>) -> (Vec<Array2<f64>>, Array2<f64>) {
    let (mut g, t) = net.trace(x).unwrap();
    let cols = net.output_dim();
    let weights = Array2::from_shape_fn((1, cols), |(_, j)| j as f64 + 1.0);
    let w = g.leaf(Array2::from_shape_fn((x.nrows(), cols), |(_, j)| weights[[0, j]]));
    let th = g.unary(t.output, Unary::Tanh).unwrap();
    let prod = g.mul(th, w).unwrap();
    let y = g.sum(prod).unwrap();
    assert!((g.scalar_value(y).unwrap() - objective_value(net, x)).abs() < 1e-12);
    let grads = g.backward(y).unwrap();
    (t.params.iter().map(|&p| grads.wrt(p)).collect(), grads.wrt(t.input))
}

#[test]
fn mlp_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut nets = 0;
    let mut checks = 0;
    while nets < 50 {
        let net = random_mlp(&mut rng, false);
        let x = normal_matrix(rng.random_range(1..=4), net.input_dim(), 1.0, &mut rng);
        if kink_distance(&net, &x) < 1e-3 {
            continue;
        }
        let (grads, gx) = objective_grads(&net, &x);
        for (idx, g) in grads.iter().enumerate() {
            for ((r, c), &analytic) in g.indexed_iter() {
                let fd = (objective_value(&with_param(&net, idx, r, c, H), &x)
                    - objective_value(&with_param(&net, idx, r, c, -H), &x))
                    / (2.0 * H);
                assert!(
                    rel_err(analytic, fd) < 1e-5,
                    "net {nets} param {idx}[{r},{c}]: {analytic} vs {fd}"
                );
                checks += 1;
            }
        }
        for ((r, c), &analytic) in gx.indexed_iter() {
            let mut xp = x.clone();
            xp[[r, c]] += H;
            let mut xm = x.clone();
            xm[[r, c]] -= H;
            let fd = (objective_value(&net, &xp) - objective_value(&net, &xm)) / (2.0 * H);
            assert!(
                rel_err(analytic, fd) < 1e-5,
                "net {nets} input [{r},{c}]: {analytic} vs {fd}"
            );
        }
        nets += 1;
    }
    assert!(checks > 500);
}

fn logit_input_gradient_fd(net: &Mlp, x: &Array2<f64>) -> Vec<f64> {
    (0..x.nrows())
        .map(|i| {
            (0..x.ncols())
                .map(|j| {
                    let mut xp = x.clone();
                    xp[[i, j]] += H;
                    let mut xm = x.clone();
                    xm[[i, j]] -= H;
                    let d = (net.logits(&xp).unwrap()[[i, 0]] - net.logits(&xm).unwrap()[[i, 0]]) / (2.0 * H);
                    d * d
                })
                .sum()
        })
        .collect()
}

#[test]
fn penalty_value_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut done = 0;
    while done < 20 {
        let net = random_mlp(&mut rng, true);
        let x = normal_matrix(5, net.input_dim(), 1.0, &mut rng);
        if kink_distance(&net, &x) < 1e-3 {
            continue;
        }
        let r = net.input_gradient_norm_sq(&x).unwrap();
        let fd = logit_input_gradient_fd(&net, &x);
        for (a, b) in r.per_sample.iter().zip(&fd) {
            assert!(rel_err(*a, *b) < 1e-5, "{a} vs {b}");
        }
        done += 1;
    }
}

#[test]
fn penalty_parameter_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut done = 0;
    while done < 20 {
        let net = random_mlp(&mut rng, true);
        let x = normal_matrix(4, net.input_dim(), 1.0, &mut rng);
        if kink_distance(&net, &x) < 1e-3 {
            continue;
        }
        let r = net.input_gradient_norm_sq(&x).unwrap();
        for (idx, g) in r.param_grads.iter().enumerate() {
            for ((row, col), &analytic) in g.indexed_iter() {
                let plus = with_param(&net, idx, row, col, H);
                let minus = with_param(&net, idx, row, col, -H);
                if kink_distance(&plus, &x) < 1e-4 || kink_distance(&minus, &x) < 1e-4 {
                    continue;
                }
                let fd = (plus.input_gradient_norm_sq(&x).unwrap().mean
                    - minus.input_gradient_norm_sq(&x).unwrap().mean)
                    / (2.0 * H);
                assert!(
                    rel_err(analytic, fd) < 1e-4,
                    "param {idx}[{row},{col}]: {analytic} vs {fd}"
                );
            }
        }
        done += 1;
    }
}

#[test]
fn penalty_node_backpropagates_into_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let net = random_mlp(&mut rng, true);
    let x = normal_matrix(3, net.input_dim(), 1.0, &mut rng);
    let r = net.input_gradient_norm_sq(&x).unwrap();
    let mut g = ValueGraph::new();
    let params = net.bind(&mut g);
    let p = net.input_gradient_norm_sq_node(&mut g, &params, &x).unwrap();
    let scaled = g.scale(p, 5.0).unwrap();
    let grads = g.backward(scaled).unwrap();
    for (id, expected) in params.iter().zip(&r.param_grads) {
        assert_eq!(grads.wrt(*id), expected * 5.0);
    }
    assert_eq!(g.scalar_value(scaled).unwrap(), 5.0 * r.mean);
}

#[test]
fn identical_seeds_give_identical_trajectories() {
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let mut net = Mlp::discriminator(2, 16, &mut rng).unwrap();
        let mut adam = AdamState::new(AdamConfig::default(), &net.param_shapes()).unwrap();
        for _ in 0..20 {
            let x = normal_matrix(8, 2, 1.0, &mut rng);
            let (mut g, t) = net.trace(&x).unwrap();
            let lg = g.unary(t.output, Unary::Log).unwrap();
            let y = g.mean(lg).unwrap();
            let grads = g.backward(y).unwrap();
            let gs: Vec<_> = t.params.iter().map(|&p| grads.wrt(p)).collect();
            adam.step(&mut net.params_mut(), &gs).unwrap();
        }
        net.to_json().unwrap()
    };
    assert_eq!(run(), run());
}
