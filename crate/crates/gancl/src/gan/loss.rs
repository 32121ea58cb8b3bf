//! Minimax losses. The discriminator ascends
//! `(1/m) Σ log D(x) + (1/m) Σ log(1 − D(G(z)))`; the generator descends
//! either the saturating `(1/m) Σ log(1 − D(G(z)))` or the non-saturating
//! `−(1/m) Σ log D(G(z))`.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::nn::{ForwardTrace, GradientVector, Network};

/// Discriminator outputs are clamped to `[PROB_CLAMP, 1 − PROB_CLAMP]` before
/// any log; gradients use the clamped value so they stay finite everywhere.
pub const PROB_CLAMP: f64 = 1e-7;

fn clamped_prob(p: f64) -> Result<f64> {
    if !p.is_finite() {
        return Err(Error::Numerical(format!("discriminator output is {p}")));
    }
    Ok(p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP))
}

/// Discriminator minibatch objective and its exact parameter gradient, with
/// the fake batch already materialized. Both batches must be non-empty and of
/// equal size.
pub fn discriminator_loss_parts(
    d: &Network,
    real: ArrayView2<'_, f64>,
    fake: ArrayView2<'_, f64>,
) -> Result<(f64, GradientVector)> {
    let m = real.nrows();
    if m == 0 || fake.nrows() != m {
        return Err(Error::Config(format!(
            "discriminator batches must be non-empty and equal: real {}, fake {}",
            m,
            fake.nrows()
        )));
    }
    let inv_m = 1.0 / m as f64;

    let trace_real = d.forward_trace(real)?;
    let trace_fake = d.forward_trace(fake)?;

    let mut loss = 0.0;
    let mut up_real = Array2::<f64>::zeros((m, 1));
    for (j, row) in trace_real.output().rows().into_iter().enumerate() {
        let p = clamped_prob(row[0])?;
        loss += p.ln();
        up_real[[j, 0]] = inv_m / p;
    }
    let mut up_fake = Array2::<f64>::zeros((m, 1));
    for (j, row) in trace_fake.output().rows().into_iter().enumerate() {
        let p = clamped_prob(row[0])?;
        loss += (1.0 - p).ln();
        up_fake[[j, 0]] = -inv_m / (1.0 - p);
    }
    loss *= inv_m;

    let mut grad = d.backward(&trace_real, up_real.view())?;
    let grad_fake = d.backward(&trace_fake, up_fake.view())?;
    for (g, gf) in grad.values_mut().iter_mut().zip(grad_fake.values()) {
        *g += gf;
    }
    Ok((loss, grad))
}

/// Discriminator objective given the generator and a latent batch; the
/// generator's parameters are treated as constants.
pub fn discriminator_loss(
    d: &Network,
    gen: &Network,
    real: ArrayView2<'_, f64>,
    latent: ArrayView2<'_, f64>,
) -> Result<(f64, GradientVector)> {
    let fake = gen.forward(latent)?;
    discriminator_loss_parts(d, real, fake.view())
}

/// Generator objective and its exact parameter gradient, reusing the
/// generator forward trace from the current iteration. The discriminator is a
/// constant here; its current parameters define the loss surface.
pub fn generator_loss_from_trace(
    d: &Network,
    gen: &Network,
    gen_trace: &ForwardTrace,
    saturating: bool,
) -> Result<(f64, GradientVector)> {
    let m = gen_trace.batch_size();
    if m == 0 {
        return Err(Error::Config("generator batch must be non-empty".into()));
    }
    let inv_m = 1.0 / m as f64;

    let d_trace = d.forward_trace(gen_trace.output())?;
    let mut loss = 0.0;
    let mut up = Array2::<f64>::zeros((m, 1));
    for (j, row) in d_trace.output().rows().into_iter().enumerate() {
        let p = clamped_prob(row[0])?;
        if saturating {
            loss += (1.0 - p).ln();
            up[[j, 0]] = -inv_m / (1.0 - p);
        } else {
            loss -= p.ln();
            up[[j, 0]] = -inv_m / p;
        }
    }
    loss *= inv_m;

    let input_grad = d.input_gradient(&d_trace, up.view())?;
    let grad = gen.backward(gen_trace, input_grad.view())?;
    Ok((loss, grad))
}

/// Generator objective from a raw latent batch.
pub fn generator_loss(
    d: &Network,
    gen: &Network,
    latent: ArrayView2<'_, f64>,
    saturating: bool,
) -> Result<(f64, GradientVector)> {
    let gen_trace = gen.forward_trace(latent)?;
    generator_loss_from_trace(d, gen, &gen_trace, saturating)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, LayerSpec, Network};
    use approx::assert_relative_eq;
    use ndarray::Array2;

    fn constant_half_discriminator() -> Network {
        // Zero weights and bias drive the sigmoid head to exactly 0.5.
        Network::zeros(vec![LayerSpec::new(2, 4, Activation::Relu), LayerSpec::new(4, 1, Activation::Sigmoid)])
            .unwrap()
    }

    fn tiny_generator() -> Network {
        Network::zeros(vec![LayerSpec::new(3, 2, Activation::Identity)]).unwrap()
    }

    #[test]
    fn constant_half_discriminator_loss() {
        let d = constant_half_discriminator();
        let real = Array2::from_shape_vec((4, 2), vec![0.0; 8]).unwrap();
        let fake = Array2::from_shape_vec((4, 2), vec![1.0; 8]).unwrap();
        let (loss, _) = discriminator_loss_parts(&d, real.view(), fake.view()).unwrap();
        assert_relative_eq!(loss, 2.0 * 0.5f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn confident_correct_discriminator_approaches_zero_loss() {
        // One sigmoid unit with a huge weight separates x > 0 from x < 0.
        let mut d =
            Network::zeros(vec![LayerSpec::new(2, 1, Activation::Sigmoid)]).unwrap();
        d.params_mut().values_mut()[0] = 50.0;
        let real = Array2::from_shape_vec((2, 2), vec![1.0, 0.0, 2.0, 0.0]).unwrap();
        let fake = Array2::from_shape_vec((2, 2), vec![-1.0, 0.0, -2.0, 0.0]).unwrap();
        let (loss, _) = discriminator_loss_parts(&d, real.view(), fake.view()).unwrap();
        assert!(loss < 0.0 && loss > -1e-6, "loss {loss} should be just below 0");
    }

    #[test]
    fn generator_loss_values_at_half() {
        let d = constant_half_discriminator();
        let gen = tiny_generator();
        let latent = Array2::from_shape_vec((5, 3), vec![0.3; 15]).unwrap();

        let (sat, grad) = generator_loss(&d, &gen, latent.view(), true).unwrap();
        assert_relative_eq!(sat, 0.5f64.ln(), max_relative = 1e-12);
        // Zero discriminator weights pass no gradient back to the generator.
        assert!(grad.values().iter().all(|g| *g == 0.0));

        let (non_sat, _) = generator_loss(&d, &gen, latent.view(), false).unwrap();
        assert_relative_eq!(non_sat, -(0.5f64.ln()), max_relative = 1e-12);
    }

    #[test]
    fn batch_size_mismatch_rejected() {
        let d = constant_half_discriminator();
        let real = Array2::zeros((3, 2));
        let fake = Array2::zeros((2, 2));
        assert!(discriminator_loss_parts(&d, real.view(), fake.view()).is_err());
        let empty = Array2::zeros((0, 2));
        assert!(discriminator_loss_parts(&d, empty.view(), empty.view()).is_err());
    }

    #[test]
    fn wrapper_matches_parts() {
        let d = constant_half_discriminator();
        let gen = tiny_generator();
        let real = Array2::from_shape_vec((4, 2), vec![0.5; 8]).unwrap();
        let latent = Array2::from_shape_vec((4, 3), vec![0.1; 12]).unwrap();
        let fake = gen.forward(latent.view()).unwrap();
        let (a, ga) = discriminator_loss(&d, &gen, real.view(), latent.view()).unwrap();
        let (b, gb) = discriminator_loss_parts(&d, real.view(), fake.view()).unwrap();
        assert_eq!(a, b);
        assert_eq!(ga.values(), gb.values());
    }
}
