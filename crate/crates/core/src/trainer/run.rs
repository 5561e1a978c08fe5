use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::{LossFamily, TrainConfig};
use super::dataset::mode_coverage;
use super::record::{EpochRow, RunRecord};
use super::TrainError;
use crate::autodiff::{Activation, AdamState, AutodiffError, Mlp, ValueGraph};
use crate::fid::{fit_gaussian, frechet_distance_detailed, FidError};
use crate::losses::{
    clamp_activations, gan_disc_loss, gan_gen_loss, gradient_penalty, lkgan_disc_loss, lkgan_gen_loss,
    renyigan_gen_loss, LossError,
};
use crate::measures::Order;

/// A logged loss beyond this magnitude aborts the run.
pub const DIVERGENCE_LIMIT: f64 = 1e6;
/// Order used by [`equilibrium_probe`] when the config is not a RényiGAN one.
pub const PROBE_ALPHA: f64 = 3.0;

const STREAM_POOL: u64 = 0;
const STREAM_INIT: u64 = 1;
const STREAM_TRAIN: u64 = 2;
const STREAM_EVAL: u64 = 3;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn latents(n: usize, dim: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((n, dim), || StandardNormal.sample(rng))
}

/// Final networks plus the record of how they got there.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub record: RunRecord,
    pub generator: Mlp,
    pub discriminator: Mlp,
}

impl TrainOutcome {
    /// Record files plus `generator.json` and `discriminator.json`.
    pub fn write_to(&self, dir: &Path) -> Result<(), TrainError> {
        self.record.write_to(dir)?;
        self.generator.save(&dir.join("generator.json"))?;
        self.discriminator.save(&dir.join("discriminator.json"))?;
        Ok(())
    }
}

struct Setup {
    pool: Array2<f64>,
    gen: Mlp,
    disc: Mlp,
}

fn setup(config: &TrainConfig) -> Result<Setup, TrainError> {
    config.validate()?;
    let pool = config
        .dataset
        .sample(config.pool_size, &mut rng_for(config.seed, STREAM_POOL))?;
    let mut init = rng_for(config.seed, STREAM_INIT);
    let dim = config.dataset.dim();
    let disc = Mlp::discriminator(dim, config.hidden, &mut init)?;
    let gen = Mlp::generator(config.latent_dim, config.hidden, dim, Activation::Identity, &mut init)?;
    Ok(Setup { pool, gen, disc })
}

struct DiscStep {
    loss: f64,
    penalty: f64,
    clamped: u64,
}

fn disc_step(
    config: &TrainConfig,
    disc: &mut Mlp,
    adam: &mut AdamState,
    real: &Array2<f64>,
    fake: &Array2<f64>,
) -> Result<DiscStep, StepError> {
    let mut g = ValueGraph::new();
    let params = disc.bind(&mut g);
    let xr = g.leaf(real.clone());
    let xf = g.leaf(fake.clone());
    let dr = disc.forward_on(&mut g, &params, xr)?.output;
    let df = disc.forward_on(&mut g, &params, xf)?.output;
    let outputs: Vec<f64> = g.value(dr).iter().chain(g.value(df).iter()).copied().collect();
    let clamped = clamp_activations(&outputs) as u64;

    let loss = match (config.loss_family, &config.lkgan) {
        (LossFamily::Lkgan, Some(p)) => lkgan_disc_loss(&mut g, dr, df, p)?,
        _ => gan_disc_loss(&mut g, dr, df, config.clamp)?,
    };
    let (total, penalty) = if config.penalty.enabled {
        let pen = gradient_penalty(&mut g, disc, &params, real, &config.penalty)?;
        let value = g.scalar_value(pen)?;
        (g.add(loss, pen)?, value)
    } else {
        (loss, 0.0)
    };
    let loss_value = g.scalar_value(loss)?;
    let total_value = g.scalar_value(total)?;
    check_value("disc_loss", total_value)?;

    let grads = g.backward(total)?;
    let grads: Vec<Array2<f64>> = params.iter().map(|&p| grads.wrt(p)).collect();
    adam.step(&mut disc.params_mut(), &grads)?;
    Ok(DiscStep {
        loss: loss_value,
        penalty,
        clamped,
    })
}

fn gen_step(
    config: &TrainConfig,
    gen: &mut Mlp,
    disc: &Mlp,
    adam: &mut AdamState,
    z: Array2<f64>,
    alpha: Option<Order>,
) -> Result<f64, StepError> {
    let mut g = ValueGraph::new();
    let gp = gen.bind(&mut g);
    let dp = disc.bind(&mut g);
    let zn = g.leaf(z);
    let fake = gen.forward_on(&mut g, &gp, zn)?.output;
    let df = disc.forward_on(&mut g, &dp, fake)?.output;
    let loss = match (config.loss_family, &config.lkgan, &config.renyigan, alpha) {
        (LossFamily::Lkgan, Some(p), _, _) => lkgan_gen_loss(&mut g, df, p)?,
        (LossFamily::Renyigan, _, Some(p), Some(a)) => renyigan_gen_loss(&mut g, df, a, p.l1_normalized, config.clamp)?,
        _ => gan_gen_loss(&mut g, df, false, config.clamp)?,
    };
    let value = g.scalar_value(loss)?;
    check_value("gen_loss", value)?;
    let grads = g.backward(loss)?;
    let grads: Vec<Array2<f64>> = gp.iter().map(|&p| grads.wrt(p)).collect();
    adam.step(&mut gen.params_mut(), &grads)?;
    Ok(value)
}

/// Failure inside an epoch: either a tripped divergence cutoff, which
/// `train` turns into [`TrainError::NumericalDivergence`], or anything else.
enum StepError {
    Diverged { quantity: String, value: f64 },
    Other(TrainError),
}

impl From<TrainError> for StepError {
    fn from(e: TrainError) -> Self {
        StepError::Other(e)
    }
}

impl From<LossError> for StepError {
    fn from(e: LossError) -> Self {
        match e {
            LossError::SaturatedDiscriminator { value } => StepError::Diverged {
                quantity: "discriminator saturation".into(),
                value,
            },
            other => StepError::Other(other.into()),
        }
    }
}

impl From<AutodiffError> for StepError {
    fn from(e: AutodiffError) -> Self {
        LossError::from(e).into()
    }
}

impl From<FidError> for StepError {
    fn from(e: FidError) -> Self {
        StepError::Other(e.into())
    }
}

fn check_value(quantity: &str, value: f64) -> Result<(), StepError> {
    if !value.is_finite() || value.abs() > DIVERGENCE_LIMIT {
        return Err(StepError::Diverged {
            quantity: quantity.to_string(),
            value,
        });
    }
    Ok(())
}

/// Runs the configured alternating optimization and returns the record with
/// the final networks.
///
/// Each epoch shuffles the fixed real pool and walks it in batches of
/// `batch_size`. Every batch drives one discriminator step against fresh
/// generator samples; every `disc_steps_per_gen_step`-th batch is followed by
/// one generator step. FID is measured at the end of each epoch on fixed
/// evaluation latents. A non-finite or oversized loss stops the run with
/// [`TrainError::NumericalDivergence`], carrying the completed epochs and the
/// networks as they were after the last completed epoch.
pub fn train(config: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    let Setup {
        pool,
        mut gen,
        mut disc,
    } = setup(config)?;
    let pool_fit = fit_gaussian(&pool)?;
    let eval_z = latents(
        config.eval_samples,
        config.latent_dim,
        &mut rng_for(config.seed, STREAM_EVAL),
    );
    let mut rng = rng_for(config.seed, STREAM_TRAIN);
    let mut disc_adam = AdamState::new(config.optimizer, &disc.param_shapes())?;
    let mut gen_adam = AdamState::new(config.optimizer, &gen.param_shapes())?;

    let m = config.batch_size;
    let batches = config.pool_size / m;
    let mut order: Vec<usize> = (0..config.pool_size).collect();
    let mut record = RunRecord::new(config.clone());
    let mut last_good = (gen.clone(), disc.clone());

    for epoch in 0..config.epochs {
        let started = Instant::now();
        let alpha = match &config.renyigan {
            Some(p) if config.loss_family == LossFamily::Renyigan => Some(p.alpha_at(epoch, config.epochs)?),
            _ => None,
        };
        order.shuffle(&mut rng);

        let mut step = |gen: &mut Mlp, disc: &mut Mlp, rng: &mut ChaCha8Rng| -> Result<EpochRow, StepError> {
            let (mut disc_sum, mut pen_sum, mut gen_sum) = (0.0, 0.0, 0.0);
            let (mut gen_steps, mut clamped) = (0usize, 0u64);
            for b in 0..batches {
                let real = pool.select(Axis(0), &order[b * m..(b + 1) * m]);
                let fake = gen.forward(&latents(m, config.latent_dim, rng))?;
                let d = disc_step(config, disc, &mut disc_adam, &real, &fake)?;
                disc_sum += d.loss;
                pen_sum += d.penalty;
                clamped += d.clamped;
                if (b + 1) % config.disc_steps_per_gen_step == 0 {
                    let z = latents(m, config.latent_dim, rng);
                    gen_sum += gen_step(config, gen, disc, &mut gen_adam, z, alpha)?;
                    gen_steps += 1;
                }
            }
            let eval = gen.forward(&eval_z)?;
            if let Some(&bad) = eval.iter().find(|v| !v.is_finite()) {
                check_value("generator output", bad)?;
            }
            let fid = frechet_distance_detailed(&fit_gaussian(&eval)?, &pool_fit)?;
            check_value("fid", fid.value)?;
            Ok(EpochRow {
                epoch: epoch + 1,
                alpha_in_effect: alpha.map(Order::value),
                disc_loss: disc_sum / batches as f64,
                gen_loss: gen_sum / gen_steps as f64,
                penalty_value: pen_sum / batches as f64,
                fid: fid.value,
                fid_clipped: fid.clipped,
                clamp_activations: clamped,
                wall_ms: 0,
            })
        };

        match step(&mut gen, &mut disc, &mut rng) {
            Ok(mut row) => {
                row.wall_ms = started.elapsed().as_millis() as u64;
                record.rows.push(row);
                last_good = (gen.clone(), disc.clone());
            }
            Err(StepError::Other(e)) => return Err(e),
            Err(StepError::Diverged { quantity, value }) => {
                record.divergence = Some(format!(
                    "epoch {}: {quantity} = {value} (limit {DIVERGENCE_LIMIT:e})",
                    epoch + 1
                ));
                let (generator, discriminator) = last_good;
                return Err(TrainError::NumericalDivergence {
                    epoch: epoch + 1,
                    quantity,
                    value,
                    partial: Box::new(TrainOutcome {
                        record,
                        generator,
                        discriminator,
                    }),
                });
            }
        }
    }

    if config.dataset.modes().is_some() {
        record.final_coverage = Some(mode_coverage(&gen.forward(&eval_z)?, &config.dataset)?);
    }
    Ok(TrainOutcome {
        record,
        generator: gen,
        discriminator: disc,
    })
}

/// Losses seen when the generator is replaced by the real data itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumProbe {
    /// Classical discriminator loss; at least 2·log 2 whenever both batches
    /// coincide.
    pub disc_loss: f64,
    /// L1-normalized Rényi generator loss on the same outputs.
    pub renyi_l1_gen_loss: f64,
}

/// Debug hook: trains a fresh discriminator for `steps` batches with the fake
/// batch forced equal to the real one, then evaluates both losses on one more
/// such batch.
pub fn equilibrium_probe(config: &TrainConfig, steps: usize) -> Result<EquilibriumProbe, TrainError> {
    let Setup { pool, mut disc, .. } = setup(config)?;
    let mut rng = rng_for(config.seed, STREAM_TRAIN);
    let mut adam = AdamState::new(config.optimizer, &disc.param_shapes())?;
    let m = config.batch_size;
    let mut order: Vec<usize> = (0..config.pool_size).collect();
    let batches = config.pool_size / m;
    let mut batch = |i: usize, rng: &mut ChaCha8Rng| {
        if i.is_multiple_of(batches) {
            order.shuffle(rng);
        }
        let b = i % batches;
        pool.select(Axis(0), &order[b * m..(b + 1) * m])
    };
    for i in 0..steps {
        let real = batch(i, &mut rng);
        let mut g = ValueGraph::new();
        let params = disc.bind(&mut g);
        let x = g.leaf(real);
        let d = disc.forward_on(&mut g, &params, x)?.output;
        let loss = gan_disc_loss(&mut g, d, d, config.clamp)?;
        let grads = g.backward(loss)?;
        let grads: Vec<Array2<f64>> = params.iter().map(|&p| grads.wrt(p)).collect();
        adam.step(&mut disc.params_mut(), &grads)?;
    }
    let real = batch(steps, &mut rng);
    let alpha = match &config.renyigan {
        Some(p) => p.alpha(),
        None => Order::renyi(PROBE_ALPHA).map_err(LossError::from)?,
    };
    let (mut g, trace) = disc.trace(&real)?;
    let d = trace.output;
    let disc_loss = gan_disc_loss(&mut g, d, d, config.clamp)?;
    let gen_loss = renyigan_gen_loss(&mut g, d, alpha, true, config.clamp)?;
    Ok(EquilibriumProbe {
        disc_loss: g.scalar_value(disc_loss)?,
        renyi_l1_gen_loss: g.scalar_value(gen_loss)?,
    })
}

/// Trains one copy of `config` per seed on up to `jobs` worker threads.
/// Results come back in `seeds` order and do not depend on `jobs`.
pub fn sweep(config: &TrainConfig, seeds: &[u64], jobs: usize) -> Vec<Result<TrainOutcome, TrainError>> {
    let jobs = jobs.clamp(1, seeds.len().max(1));
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<TrainOutcome, TrainError>>>> =
        Mutex::new((0..seeds.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= seeds.len() {
                    break;
                }
                let mut c = config.clone();
                c.seed = seeds[i];
                let r = train(&c);
                results.lock().expect("no worker panics while holding the lock")[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .expect("workers joined")
        .into_iter()
        .map(|r| r.expect("every seed was run"))
        .collect()
}
