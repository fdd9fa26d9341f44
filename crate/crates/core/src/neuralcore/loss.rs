use super::{shape_err, Real, Result, Tensor3};

/// Mean absolute error over every element: `sum |x - x'| / n`.
pub fn mae(x: &Tensor3, x_prime: &Tensor3) -> Result<Real> {
    if x.shape() != x_prime.shape() {
        return Err(shape_err(
            "mae",
            format!("{:?}", x.shape()),
            format!("{:?}", x_prime.shape()),
        ));
    }
    let n = x.data().len();
    if n == 0 {
        return Ok(0.0);
    }
    let sum: Real = x
        .data()
        .iter()
        .zip(x_prime.data())
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok(sum / n as Real)
}

/// Gradient of [`mae`] with respect to `x_prime` (subgradient 0 at ties).
pub fn mae_grad(x: &Tensor3, x_prime: &Tensor3) -> Result<Tensor3> {
    if x.shape() != x_prime.shape() {
        return Err(shape_err(
            "mae_grad",
            format!("{:?}", x.shape()),
            format!("{:?}", x_prime.shape()),
        ));
    }
    let scale = 1.0 / x.data().len().max(1) as Real;
    Ok(Tensor3::from_raw(
        x.shape(),
        x.data()
            .iter()
            .zip(x_prime.data())
            .map(|(a, b)| {
                let d = b - a;
                if d > 0.0 {
                    scale
                } else if d < 0.0 {
                    -scale
                } else {
                    0.0
                }
            })
            .collect(),
    ))
}
