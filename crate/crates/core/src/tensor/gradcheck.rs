use super::{Result, Tape, Tensor, TensorError, Var};

/// Fixed, non-constant probe weights used to reduce a tensor output to a
/// scalar. A plain sum would hide errors in shift-invariant maps such as
/// layer normalization, whose outputs always sum to zero.
pub fn probe_weights(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 + ((i * 7919 + 13) % 17) as f64 / 17.0).collect()
}

fn probed_output(tape: &mut Tape, out: Var) -> Result<Var> {
    let shape = tape.shape(out).to_vec();
    let w = Tensor::new(shape.clone(), probe_weights(tape.value(out).numel()))?;
    let w = tape.constant(w)?;
    let weighted = tape.mul(out, w)?;
    tape.sum(weighted)
}

fn eval_probe<F>(f: &F, x: &Tensor) -> Result<f64>
where
    F: Fn(&mut Tape, Var) -> Result<Var>,
{
    let mut tape = Tape::new();
    let xv = tape.constant(x.clone())?;
    let out = f(&mut tape, xv)?;
    let loss = probed_output(&mut tape, out)?;
    Ok(tape.value(loss).item())
}

/// Compares the tape gradient of `f` at `x` with central differences of step
/// `eps`, returning `max_i |analytic_i − numeric_i| / (|numeric_i| + 1e-8)`.
///
/// Non-scalar outputs are reduced with [`probe_weights`].
pub fn finite_diff_check<F>(f: F, x: &Tensor, eps: f64) -> Result<f64>
where
    F: Fn(&mut Tape, Var) -> Result<Var>,
{
    if !(eps > 0.0 && eps <= 1e-3) {
        return Err(TensorError::Invalid {
            op: "finite_diff_check",
            msg: format!("step {eps} outside (0, 1e-3]"),
        });
    }
    let mut tape = Tape::new();
    let xv = tape.leaf("x", x.clone())?;
    let out = f(&mut tape, xv)?;
    let loss = probed_output(&mut tape, out)?;
    let analytic = tape.backward(loss)?.wrt(xv);

    let mut worst = 0.0_f64;
    let mut probe = x.data().to_vec();
    for i in 0..probe.len() {
        let orig = probe[i];
        probe[i] = orig + eps;
        let plus = eval_probe(&f, &Tensor::new(x.shape().to_vec(), probe.clone())?)?;
        probe[i] = orig - eps;
        let minus = eval_probe(&f, &Tensor::new(x.shape().to_vec(), probe.clone())?)?;
        probe[i] = orig;
        let numeric = (plus - minus) / (2.0 * eps);
        if !numeric.is_finite() {
            return Err(TensorError::NonFinite {
                op: "finite_diff_check",
                index: i,
            });
        }
        let rel = (analytic.data()[i] - numeric).abs() / (numeric.abs() + 1e-8);
        worst = worst.max(rel);
    }
    Ok(worst)
}
