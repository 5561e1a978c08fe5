//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line and then
//! asserts it; run with `--nocapture` to see the lines for passing tests.

use std::f64::consts::LN_2;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use renyigan_lab::autodiff::{Activation, Mlp, NodeId, ValueGraph};
use renyigan_lab::fid::{frechet_distance, GaussianFit};
use renyigan_lab::losses::{
    gan_disc_loss, gan_gen_loss, gradient_penalty, lkgan_disc_loss, lkgan_gen_loss, renyigan_gen_loss, LkganParams,
    LossError, PenaltyConfig,
};
use renyigan_lab::measures::{
    renyi_cross_entropy, renyi_cross_entropy_functional, ContinuousDensity, Distribution, Order, Weighting,
};
use renyigan_lab::theorems::{
    condition_number, cross_entropy_limit_gap, jensen_renyi_limit_gap, optimal_disc_renyi, renyi_kl_limit_gap,
    run_suite, verify_generator_limit, verify_lkgan_identity, verify_renyigan_identity, DensityPair, Point,
};
use renyigan_lab::trainer::{sweep, train, TrainConfig, TrainOutcome};

const IDENTITY_GAP: f64 = 1e-6;
const IDENTITY_BUDGET: Duration = Duration::from_secs(30);
const EQUILIBRIUM_TOL: f64 = 1e-9;
const LIMIT_EPS: f64 = 1e-4;
const LIMIT_GAP: f64 = 1e-3;
const MONOTONE_SLACK: f64 = 1e-9;
const ALPHA_GRID: [f64; 8] = [0.1, 0.5, 0.9, 1.1, 2.0, 3.0, 5.0, 9.0];
const STABLE_SLACK: f64 = 1e-9;
const UNSTABLE_KAPPA: f64 = 1e6;
const SMALLEST_Q0: i32 = 12;
const FD_FIRST_ORDER: f64 = 1e-5;
const FD_SECOND_ORDER: f64 = 1e-4;
const FD_STEP: f64 = 1e-5;
/// Round-off allowance for "zero on identical fits".
const FID_IDENTICAL_TOL: f64 = 1e-9;
const FID_MEAN_SHIFT_TOL: f64 = 1e-8;
const FID_DIAGONAL_TOL: f64 = 1e-9;
const TRAINING_SEEDS: [u64; 5] = [123, 5005, 1600, 199621, 60677];
const FID_RATIO: f64 = 0.25;
const FID_RATIO_MIN_SEEDS: usize = 3;
const TRAINING_BUDGET: Duration = Duration::from_secs(20 * 60);

fn report(n: u32, what: &str, passed: bool, detail: String) {
    println!(
        "criterion {n} [{}] {what}: {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "criterion {n} failed: {detail}");
}

fn random_gaussian_pair(rng: &mut ChaCha8Rng) -> DensityPair {
    DensityPair::gaussians(
        rng.random_range(-2.0..2.0),
        rng.random_range(0.3..3.0),
        rng.random_range(-2.0..2.0),
        rng.random_range(0.3..3.0),
    )
    .unwrap()
}

fn random_histogram(rng: &mut ChaCha8Rng) -> ContinuousDensity {
    let bins = rng.random_range(2..8);
    let mut inner: Vec<f64> = (0..bins - 1).map(|_| rng.random_range(-2.5..2.5)).collect();
    inner.sort_by(f64::total_cmp);
    let mut edges = vec![-3.0];
    for e in inner {
        if e > edges[edges.len() - 1] + 1e-3 {
            edges.push(e);
        }
    }
    edges.push(3.0);
    let w: Vec<f64> = (0..edges.len() - 1).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    ContinuousDensity::histogram(edges, w.iter().map(|v| v / total).collect()).unwrap()
}

/// Ten Gaussian pairs followed by ten histogram pairs.
fn twenty_pairs(seed: u64) -> Vec<DensityPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<DensityPair> = (0..10).map(|_| random_gaussian_pair(&mut rng)).collect();
    for _ in 0..10 {
        let (a, b) = (random_histogram(&mut rng), random_histogram(&mut rng));
        out.push(DensityPair::new(a.into(), b.into()).unwrap());
    }
    out
}

fn random_simplex(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|v| v / total).collect()
}

#[test]
fn criterion_1_lkgan_identity() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for pair in twenty_pairs(1) {
        for k in [1.0, 2.0, 3.0] {
            for params in [LkganParams::v1(k).unwrap(), LkganParams::v2(k).unwrap()] {
                worst = worst.max(verify_lkgan_identity(&pair, &params).unwrap().gap);
                cases += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    report(
        1,
        "LkGAN optimal generator identity",
        worst < IDENTITY_GAP && elapsed < IDENTITY_BUDGET,
        format!("{cases} cases, worst gap {worst:.3e} (< {IDENTITY_GAP:e}), {elapsed:.2?} (< {IDENTITY_BUDGET:?})"),
    );
}

#[test]
fn criterion_2_renyi_identity() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut worst_eq: f64 = 0.0;
    let mut cases = 0;
    for pair in twenty_pairs(2) {
        for a in [0.5, 2.0, 3.0, 9.0] {
            let alpha = Order::renyi(a).unwrap();
            worst = worst.max(verify_renyigan_identity(&pair, alpha).unwrap().gap);
            let same = DensityPair::new(pair.p_x().clone(), pair.p_x().clone()).unwrap();
            let eq = verify_renyigan_identity(&same, alpha).unwrap();
            worst_eq = worst_eq.max((eq.lhs + 2.0 * LN_2).abs());
            cases += 1;
        }
    }
    let elapsed = start.elapsed();
    report(
        2,
        "RényiGAN optimal generator identity",
        worst < IDENTITY_GAP && worst_eq <= EQUILIBRIUM_TOL && elapsed < IDENTITY_BUDGET,
        format!(
            "{cases} cases, worst gap {worst:.3e} (< {IDENTITY_GAP:e}), equilibrium |lhs + 2 log 2| {worst_eq:.3e} (<= {EQUILIBRIUM_TOL:e}), {elapsed:.2?}"
        ),
    );
}

#[test]
fn criterion_3_alpha_to_one_limits() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut ce, mut gen, mut kl, mut jr): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..10 {
        // Equal variances keep every inverse moment in the sweep finite.
        let v = rng.random_range(0.5..2.0);
        let pair = DensityPair::gaussians(rng.random_range(-1.0..1.0), v, rng.random_range(-1.0..1.0), v).unwrap();
        let (p, q) = (pair.p_x(), pair.p_g());
        ce = ce.max(cross_entropy_limit_gap(p, q, LIMIT_EPS).unwrap());
        kl = kl.max(renyi_kl_limit_gap(p, q, LIMIT_EPS).unwrap());
        jr = jr.max(jensen_renyi_limit_gap(p, q, LIMIT_EPS).unwrap());
        let d_star = optimal_disc_renyi(&pair);
        let f = d_star.as_fn();
        gen = gen.max(verify_generator_limit(Weighting::Function(&f), &pair, LIMIT_EPS).unwrap());
        let w: f64 = rng.random_range(0.2..0.8);
        let constant = move |_: f64| w;
        gen = gen.max(verify_generator_limit(Weighting::Function(&constant), &pair, LIMIT_EPS).unwrap());
    }
    for _ in 0..10 {
        let (pv, qv) = (random_simplex(5, &mut rng), random_simplex(5, &mut rng));
        let pair = DensityPair::discrete(pv, qv).unwrap();
        let (p, q) = (pair.p_x(), pair.p_g());
        ce = ce.max(cross_entropy_limit_gap(p, q, LIMIT_EPS).unwrap());
        kl = kl.max(renyi_kl_limit_gap(p, q, LIMIT_EPS).unwrap());
        jr = jr.max(jensen_renyi_limit_gap(p, q, LIMIT_EPS).unwrap());
        let d: Vec<f64> = (0..5).map(|_| rng.random_range(0.05..0.95)).collect();
        gen = gen.max(verify_generator_limit(Weighting::Values(&d), &pair, LIMIT_EPS).unwrap());
    }
    let worst = ce.max(gen).max(kl).max(jr);
    report(
        3,
        "alpha -> 1 limits",
        worst < LIMIT_GAP,
        format!("eps {LIMIT_EPS:e}: cross-entropy {ce:.3e}, generator loss {gen:.3e}, Rényi->KL {kl:.3e}, JR->JSD {jr:.3e} (< {LIMIT_GAP:e})"),
    );
}

#[test]
fn criterion_4_monotone_in_alpha() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_increase: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(2..10);
        let p = Distribution::discrete(random_simplex(n, &mut rng)).unwrap();
        let q = Distribution::discrete(random_simplex(n, &mut rng)).unwrap();
        let h: Vec<f64> = ALPHA_GRID
            .iter()
            .map(|&a| renyi_cross_entropy(&p, &q, Order::renyi(a).unwrap()).unwrap())
            .collect();
        for w in h.windows(2) {
            worst_increase = worst_increase.max(w[1] - w[0]);
        }
    }
    report(
        4,
        "Rényi cross-entropy non-increasing in alpha",
        worst_increase <= MONOTONE_SLACK,
        format!("100 pairs, largest increase {worst_increase:.3e} (slack {MONOTONE_SLACK:e})"),
    );
}

#[test]
fn criterion_5_condition_number_boundary() {
    // p uniform on [0, 1]; q a sigmoid-shaped weight in (0, 1) whose value at
    // x0 alone is swept towards 0.
    let x0 = 0.5;
    let p: Distribution = ContinuousDensity::evaluable(|_| 1.0, 0.0, 1.0).unwrap().into();
    let base = |x: f64| 1.0 / (1.0 + (-(2.0 * x + 1.0)).exp());
    let q_max = base(1.0);
    let mut lines = Vec::new();
    let mut ok = true;
    for a in [2.0, 3.0, 9.0, 0.5, 1.5] {
        let alpha = Order::renyi(a).unwrap();
        let denominator =
            ((1.0 - a) * renyi_cross_entropy_functional(&p, Weighting::Function(&base), alpha).unwrap()).exp();
        let mut worst_excess = f64::NEG_INFINITY;
        let mut crossed_at = None;
        for j in 0..=SMALLEST_Q0 {
            let q0 = 10f64.powi(-j);
            let q = move |x: f64| if x == x0 { q0 } else { base(x) };
            let kappa = condition_number(&p, Weighting::Function(&q), alpha, Point::At(x0)).unwrap();
            let bound = q_max.max(q0).powf(a - 2.0) / denominator + STABLE_SLACK;
            worst_excess = worst_excess.max(kappa - bound);
            if crossed_at.is_none() && kappa > UNSTABLE_KAPPA {
                crossed_at = Some(q0);
            }
        }
        if a >= 2.0 {
            ok &= worst_excess < 0.0;
            lines.push(format!("alpha {a}: max(kappa - bound) {worst_excess:.3e}"));
        } else {
            ok &= crossed_at.is_some();
            lines.push(format!("alpha {a}: kappa > 1e6 from q0 = {crossed_at:?}"));
        }
    }
    report(5, "condition-number stability boundary", ok, lines.join("; "));
}

/// Relative error with the repository-wide floor on the denominator.
fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-4)
}

fn column(v: &[f64]) -> Array2<f64> {
    Array2::from_shape_vec((v.len(), 1), v.to_vec()).unwrap()
}

type InputLoss = dyn Fn(&mut ValueGraph, NodeId, NodeId) -> Result<NodeId, LossError>;

/// Worst relative error of d(loss)/d(discriminator outputs).
fn input_gradient_error(real: &[f64], fake: &[f64], f: &InputLoss) -> f64 {
    let value = |r: &[f64], fk: &[f64]| {
        let mut g = ValueGraph::new();
        let (rn, fnode) = (g.leaf(column(r)), g.leaf(column(fk)));
        let out = f(&mut g, rn, fnode).unwrap();
        g.scalar_value(out).unwrap()
    };
    let mut g = ValueGraph::new();
    let (rn, fnode) = (g.leaf(column(real)), g.leaf(column(fake)));
    let out = f(&mut g, rn, fnode).unwrap();
    let grads = g.backward(out).unwrap();
    let mut worst: f64 = 0.0;
    for (side, node) in [(0, rn), (1, fnode)] {
        let analytic = grads.wrt(node);
        let base = if side == 0 { real } else { fake };
        for i in 0..base.len() {
            let (mut plus, mut minus) = (base.to_vec(), base.to_vec());
            plus[i] += FD_STEP;
            minus[i] -= FD_STEP;
            let fd = if side == 0 {
                (value(&plus, fake) - value(&minus, fake)) / (2.0 * FD_STEP)
            } else {
                (value(real, &plus) - value(real, &minus)) / (2.0 * FD_STEP)
            };
            worst = worst.max(rel_err(analytic[[i, 0]], fd));
        }
    }
    worst
}

/// Worst relative error of the penalty's parameter gradient, which goes
/// through the input gradient and so needs second derivatives.
fn penalty_gradient_error(net: &Mlp, x: &Array2<f64>, cfg: &PenaltyConfig) -> f64 {
    let value = |net: &Mlp| {
        let mut g = ValueGraph::new();
        let params = net.bind(&mut g);
        let p = gradient_penalty(&mut g, net, &params, x, cfg).unwrap();
        g.scalar_value(p).unwrap()
    };
    let mut g = ValueGraph::new();
    let params = net.bind(&mut g);
    let p = gradient_penalty(&mut g, net, &params, x, cfg).unwrap();
    let grads = g.backward(p).unwrap();
    let mut worst: f64 = 0.0;
    for (pi, &node) in params.iter().enumerate() {
        let analytic = grads.wrt(node);
        for idx in 0..analytic.len() {
            let (r, c) = (idx / analytic.ncols(), idx % analytic.ncols());
            let mut plus = net.clone();
            plus.params_mut()[pi][[r, c]] += FD_STEP;
            let mut minus = net.clone();
            minus.params_mut()[pi][[r, c]] -= FD_STEP;
            let fd = (value(&plus) - value(&minus)) / (2.0 * FD_STEP);
            worst = worst.max(rel_err(analytic[[r, c]], fd));
        }
    }
    worst
}

#[test]
fn criterion_6_gradient_integrity() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut first, mut first_fail, mut first_worst) = (0usize, 0usize, 0.0f64);
    for _ in 0..40 {
        let m = rng.random_range(1..10);
        let real: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..0.95)).collect();
        let fake: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..0.95)).collect();
        let k = rng.random_range(1.0..4.0);
        let lk = [LkganParams::v1(k).unwrap(), LkganParams::v2(k).unwrap()][rng.random_range(0..2)];
        let alpha = Order::renyi([0.5, 1.5, 2.0, 3.0, 9.0][rng.random_range(0..5)]).unwrap();
        let checks: [Box<InputLoss>; 5] = [
            Box::new(move |g: &mut ValueGraph, r, f| lkgan_disc_loss(g, r, f, &lk)),
            Box::new(move |g: &mut ValueGraph, _, f| lkgan_gen_loss(g, f, &lk)),
            Box::new(|g: &mut ValueGraph, r, f| gan_disc_loss(g, r, f, true)),
            Box::new(move |g: &mut ValueGraph, _, f| renyigan_gen_loss(g, f, alpha, false, true)),
            Box::new(|g: &mut ValueGraph, _, f| gan_gen_loss(g, f, false, true)),
        ];
        for f in &checks {
            let e = input_gradient_error(&real, &fake, f.as_ref());
            first += 1;
            first_worst = first_worst.max(e);
            if e >= FD_FIRST_ORDER {
                first_fail += 1;
            }
        }
    }

    let (mut second, mut second_fail, mut second_worst) = (0usize, 0usize, 0.0f64);
    let cfg = PenaltyConfig::enabled(5.0);
    for _ in 0..10 {
        // Smooth activations and weights large enough for real curvature.
        let mut net = Mlp::random(&[2, 5, 5, 1], Activation::Tanh, Activation::Sigmoid, &mut rng).unwrap();
        for p in net.params_mut() {
            p.mapv_inplace(|v| v * 80.0);
        }
        let x = Array2::from_shape_simple_fn((4, 2), || rng.random_range(-1.0..1.0));
        let e = penalty_gradient_error(&net, &x, &cfg);
        second += 1;
        second_worst = second_worst.max(e);
        if e >= FD_SECOND_ORDER {
            second_fail += 1;
        }
    }
    report(
        6,
        "finite-difference gradient checks",
        first_fail == 0 && second_fail == 0,
        format!(
            "losses {}/{first} within {FD_FIRST_ORDER:e} (worst {first_worst:.2e}); penalty double-backprop {}/{second} within {FD_SECOND_ORDER:e} (worst {second_worst:.2e})",
            first - first_fail,
            second - second_fail
        ),
    );
}

fn random_spd(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0)) / (d as f64).sqrt();
    &a * a.transpose() + DMatrix::identity(d, d) * 0.1
}

#[test]
fn criterion_7_fid() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut same, mut shift, mut diag): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..50 {
        let d = rng.random_range(1..=8);
        let mean = DVector::from_fn(d, |_, _| rng.random_range(-3.0..3.0));
        let fit = GaussianFit {
            mean: mean.clone(),
            covariance: random_spd(d, &mut rng),
        };
        same = same.max(frechet_distance(&fit, &fit).unwrap().abs());

        let mu = DVector::from_fn(d, |_, _| rng.random_range(-3.0..3.0));
        let moved = GaussianFit {
            mean: &mean + &mu,
            covariance: fit.covariance.clone(),
        };
        shift = shift.max((frechet_distance(&fit, &moved).unwrap() - mu.norm_squared()).abs());

        let v1: Vec<f64> = (0..d).map(|_| rng.random_range(0.01..10.0)).collect();
        let v2: Vec<f64> = (0..d).map(|_| rng.random_range(0.01..10.0)).collect();
        let a = GaussianFit {
            mean: DVector::zeros(d),
            covariance: DMatrix::from_diagonal(&DVector::from_vec(v1.clone())),
        };
        let b = GaussianFit {
            mean: DVector::zeros(d),
            covariance: DMatrix::from_diagonal(&DVector::from_vec(v2.clone())),
        };
        let oracle: f64 = v1.iter().zip(&v2).map(|(x, y)| (x.sqrt() - y.sqrt()).powi(2)).sum();
        diag = diag.max((frechet_distance(&a, &b).unwrap() - oracle).abs());
    }
    report(
        7,
        "FID closed forms",
        same < FID_IDENTICAL_TOL && shift < FID_MEAN_SHIFT_TOL && diag < FID_DIAGONAL_TOL,
        format!(
            "identical {same:.2e} (< {FID_IDENTICAL_TOL:e}), mean shift {shift:.2e} (< {FID_MEAN_SHIFT_TOL:e}), diagonal {diag:.2e} (< {FID_DIAGONAL_TOL:e})"
        ),
    );
}

fn preset(name: &str) -> TrainConfig {
    let path: PathBuf = [
        env!("CARGO_MANIFEST_DIR"),
        "..",
        "..",
        "configs",
        &format!("{name}.toml"),
    ]
    .iter()
    .collect();
    TrainConfig::from_path(&path).unwrap()
}

fn median(mut v: Vec<usize>) -> usize {
    v.sort_unstable();
    v[v.len() / 2]
}

#[test]
fn criterion_8_ring_training() {
    let start = Instant::now();
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let run = |name: &str| -> Vec<TrainOutcome> {
        sweep(&preset(name), &TRAINING_SEEDS, jobs)
            .into_iter()
            .map(|r| r.unwrap_or_else(|e| panic!("{name}: {e}")))
            .collect()
    };
    let renyi = run("renyigan-alpha");
    let base = run("dcgan-baseline");
    let elapsed = start.elapsed();

    let modes = |runs: &[TrainOutcome]| -> Vec<usize> {
        runs.iter()
            .map(|o| o.record.final_coverage.expect("ring dataset").modes_hit)
            .collect()
    };
    let (renyi_modes, base_modes) = (modes(&renyi), modes(&base));
    let finite = renyi.iter().all(|o| o.record.rows.iter().all(|r| r.fid.is_finite()));
    let ratios: Vec<f64> = renyi
        .iter()
        .map(|o| o.record.rows.last().unwrap().fid / o.record.rows[0].fid)
        .collect();
    let good = ratios.iter().filter(|&&r| r < FID_RATIO).count();
    let passed = median(renyi_modes.clone()) >= median(base_modes.clone())
        && finite
        && good >= FID_RATIO_MIN_SEEDS
        && elapsed < TRAINING_BUDGET;
    report(
        8,
        "8-mode ring training",
        passed,
        format!(
            "modes hit: Rényi alpha=3 L1 {renyi_modes:?} (median {}), baseline {base_modes:?} (median {}); final/epoch-1 FID {:?}, {good}/5 below {FID_RATIO}; {elapsed:.0?} (< {TRAINING_BUDGET:?})",
            median(renyi_modes.clone()),
            median(base_modes.clone()),
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>()
        ),
    );
}

#[test]
fn criterion_9_determinism() {
    let mut c = preset("renyigan-sweep");
    c.epochs = 3;
    let first = train(&c).unwrap().record;
    let second = train(&c).unwrap().record;
    let train_same = first.to_csv_string().unwrap() == second.to_csv_string().unwrap()
        && first.to_json_string().unwrap() == second.to_json_string().unwrap();
    let verify_same =
        format!("{:?}", run_suite(1e-5, None).unwrap()) == format!("{:?}", run_suite(1e-5, None).unwrap());
    report(
        9,
        "byte-identical repeated runs",
        train_same && verify_same,
        format!("training record identical: {train_same}, verification table identical: {verify_same}"),
    );
}
