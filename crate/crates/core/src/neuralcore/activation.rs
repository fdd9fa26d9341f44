use super::{shape_err, Result, Tensor3};

pub fn relu_forward(x: &Tensor3) -> Tensor3 {
    Tensor3::from_raw(x.shape(), x.data().iter().map(|&v| v.max(0.0)).collect())
}

/// Gradient passes where the forward input was strictly positive.
pub fn relu_backward(x: &Tensor3, grad_out: &Tensor3) -> Result<Tensor3> {
    if x.shape() != grad_out.shape() {
        return Err(shape_err(
            "relu grad_out",
            format!("{:?}", x.shape()),
            format!("{:?}", grad_out.shape()),
        ));
    }
    Ok(Tensor3::from_raw(
        x.shape(),
        x.data()
            .iter()
            .zip(grad_out.data())
            .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
            .collect(),
    ))
}
