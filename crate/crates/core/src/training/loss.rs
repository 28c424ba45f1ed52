use super::TrainError;
use crate::tensor::{Result as TensorResult, Tape, Tensor, Var};

/// Mean pinball loss over horizons and quantiles. `pred` is `[H, Q]`.
pub fn quantile_loss(pred: &Tensor, target: &[f64], quantiles: &[f64]) -> Result<f64, TrainError> {
    if pred.shape() != [target.len(), quantiles.len()] {
        return Err(TrainError::Shape(format!(
            "predictions {:?} for {} targets and {} quantiles",
            pred.shape(),
            target.len(),
            quantiles.len()
        )));
    }
    if target.iter().chain(quantiles).any(|v| v.is_nan()) || pred.data().iter().any(|v| v.is_nan()) {
        return Err(TrainError::Data("NaN in quantile loss input".into()));
    }
    let q_len = quantiles.len();
    let total: f64 = pred
        .data()
        .iter()
        .enumerate()
        .map(|(i, &p)| pinball(target[i / q_len] - p, quantiles[i % q_len]))
        .sum();
    Ok(total / pred.numel() as f64)
}

pub fn pinball(residual: f64, q: f64) -> f64 {
    (q * residual).max((q - 1.0) * residual)
}

/// Differentiable form on the tape: `relu(r) + (q − 1)·r`, averaged.
pub fn quantile_loss_on_tape(tape: &mut Tape, pred: Var, target: &[f64], quantiles: &[f64]) -> TensorResult<Var> {
    let y = tape.constant(Tensor::new(vec![target.len(), 1], target.to_vec())?)?;
    let qm1 = tape.constant(Tensor::row(&quantiles.iter().map(|q| q - 1.0).collect::<Vec<_>>())?)?;
    let r = tape.sub(y, pred)?;
    let pos = tape.relu(r)?;
    let lin = tape.mul(r, qm1)?;
    let total = tape.add(pos, lin)?;
    tape.mean(total)
}
