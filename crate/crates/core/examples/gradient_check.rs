//! Compare backpropagated gradients with central differences.

use hydroseries::model::{backward, forward_with_masks, mse_loss, DropoutMasks, ModelParams, ModelShape};
use hydroseries::numerics::{finite_diff_grad, Matrix, Rng};

fn main() -> hydroseries::Result<()> {
    let mut rng = Rng::new(7);
    let shape = ModelShape {
        n_inputs: 4,
        encoder_size: 8,
        hidden_size: 8,
        n_targets: 2,
    };
    let params = ModelParams::init(shape, 0.2, &mut rng)?;
    let inputs: Vec<Matrix> = (0..5).map(|_| Matrix::from_fn(3, 4, |_, _| rng.normal(0.0, 1.0))).collect();
    let target = Matrix::from_fn(3, 2, |_, _| rng.uniform());
    // fixed masks make the train-mode loss a deterministic function
    let masks = DropoutMasks::sample(0.2, 5, 3, 8, 8, &mut rng);

    let (pred, cache) = forward_with_masks(&inputs, &params, Some(masks.clone()))?;
    let (loss, d) = mse_loss(&pred, &target)?;
    let analytic = backward(&cache, &params, &d)?.flatten();
    let numeric = finite_diff_grad(
        |flat| {
            let mut q = params.clone();
            q.assign_flat(flat).expect("same length");
            let (p, _) = forward_with_masks(&inputs, &q, Some(masks.clone())).expect("forward");
            mse_loss(&p, &target).expect("loss").0
        },
        &params.flatten(),
        1e-5,
    )?;
    let worst = analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    println!("loss {loss:.6}, {} parameters, max relative error {worst:.2e}", analytic.len());
    Ok(())
}
