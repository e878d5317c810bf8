use crate::error::{Error, Result};

/// Central-difference gradient check.
///
/// Returns `max_i |fd_i - grad_i| / max(1, |grad_i|)` where
/// `fd_i = (f(x + h e_i) - f(x - h e_i)) / 2h`.
pub fn grad_check<F, G>(f: F, grad: G, x: &[f64], h: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    if !(h > 0.0) {
        return Err(Error::usage(format!("finite-difference step must be positive, got {h}")));
    }
    let analytic = grad(x);
    if analytic.len() != x.len() {
        return Err(Error::usage(format!(
            "gradient has dimension {} but point has {}",
            analytic.len(),
            x.len()
        )));
    }
    let mut probe = x.to_vec();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::Evaluation(format!(
                "non-finite value at coordinate {i} (f(x+h)={up}, f(x-h)={down})"
            )));
        }
        let fd = (up - down) / (2.0 * h);
        let err = (fd - analytic[i]).abs() / analytic[i].abs().max(1.0);
        worst = worst.max(err);
    }
    Ok(worst)
}
