//! Central finite differences against the analytic gradient of the full
//! loss on a tiny model.

use bbbg::model::{build_model, loss, loss_and_grad, Batch, BbbgConfig, LayerShapes, Variant};
use bbbg::nn::grad_check;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> bbbg::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut uniform = |r, c| DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));
    let t0 = uniform(3, 8);
    let x = uniform(8, 4);
    let noise = uniform(3, 4);
    let theta0 = DMatrix::from_element(3, 4, 1.0 / 3.0);
    for variant in [Variant::Bbbg, Variant::Sbbg] {
        let cfg = BbbgConfig {
            input_dim: 8,
            latent_dim: 3,
            n_themes: 3,
            shapes: LayerShapes {
                trunk: vec![6, 5],
                head: vec![4],
                theme: vec![5],
                decoder: vec![6],
                predictor: vec![4],
            },
            variant,
            ..BbbgConfig::default()
        };
        let with_context = variant == Variant::Bbbg;
        let params = build_model(&cfg, with_context.then_some(&t0), 3)?;
        let batch = Batch {
            x: x.clone(),
            labels: vec![Some(0), None, Some(1), None],
            theta0: with_context.then(|| theta0.clone()),
            t0: with_context.then_some(&t0),
        };
        let (breakdown, grads) = loss_and_grad(&params, &cfg, &batch, &noise, 0.5)?;
        let report = grad_check(&params, &grads, |p| Ok(loss(p, &cfg, &batch, &noise, 0.5)?.total), 1e-5, 1e-4, None)?;
        println!(
            "{variant}: loss {:.4}, {} coordinates, max relative error {:.2e}, passed {}",
            breakdown.total, report.checked, report.max_rel_error, report.passed
        );
    }
    Ok(())
}
