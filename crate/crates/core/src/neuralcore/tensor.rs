use super::{shape_err, NnError, Real, Result};

/// Dense `(batch, length, channels)` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    shape: [usize; 3],
    data: Vec<Real>,
}

impl Tensor3 {
    pub fn zeros(batch: usize, length: usize, channels: usize) -> Self {
        Self {
            shape: [batch, length, channels],
            data: vec![0.0; batch * length * channels],
        }
    }

    /// Builds a tensor from row-major data, rejecting wrong lengths and
    /// non-finite entries.
    pub fn from_vec(shape: [usize; 3], data: Vec<Real>) -> Result<Self> {
        let n = shape.iter().product::<usize>();
        if data.len() != n {
            return Err(shape_err("Tensor3::from_vec", n, data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(NnError::NonFinite("Tensor3::from_vec"));
        }
        Ok(Self { shape, data })
    }

    pub(crate) fn from_raw(shape: [usize; 3], data: Vec<Real>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn batch(&self) -> usize {
        self.shape[0]
    }

    pub fn length(&self) -> usize {
        self.shape[1]
    }

    pub fn channels(&self) -> usize {
        self.shape[2]
    }

    pub fn data(&self) -> &[Real] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Real] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Real> {
        self.data
    }

    #[inline]
    pub fn index(&self, b: usize, l: usize, c: usize) -> usize {
        (b * self.shape[1] + l) * self.shape[2] + c
    }

    #[inline]
    pub fn get(&self, b: usize, l: usize, c: usize) -> Real {
        self.data[self.index(b, l, c)]
    }

    /// Reinterprets the per-sample block as `(length, channels)`; the batch
    /// dimension is kept.
    pub fn reshape(self, length: usize, channels: usize) -> Result<Self> {
        if length * channels != self.shape[1] * self.shape[2] {
            return Err(shape_err(
                "Tensor3::reshape",
                self.shape[1] * self.shape[2],
                length * channels,
            ));
        }
        Ok(Self {
            shape: [self.shape[0], length, channels],
            data: self.data,
        })
    }

    /// Copy of the rows `0..length` of every sample.
    pub fn crop_length(&self, length: usize) -> Result<Self> {
        if length > self.shape[1] {
            return Err(shape_err("Tensor3::crop_length", format!("<= {}", self.shape[1]), length));
        }
        let [b, l, c] = self.shape;
        let mut out = Vec::with_capacity(b * length * c);
        for bi in 0..b {
            let start = bi * l * c;
            out.extend_from_slice(&self.data[start..start + length * c]);
        }
        Ok(Self::from_raw([b, length, c], out))
    }

    /// Inverse of [`crop_length`](Self::crop_length) for gradients: zero rows
    /// are appended up to `length`.
    pub fn pad_length(&self, length: usize) -> Result<Self> {
        if length < self.shape[1] {
            return Err(shape_err("Tensor3::pad_length", format!(">= {}", self.shape[1]), length));
        }
        let [b, l, c] = self.shape;
        let mut out = vec![0.0; b * length * c];
        for bi in 0..b {
            out[bi * length * c..bi * length * c + l * c]
                .copy_from_slice(&self.data[bi * l * c..(bi + 1) * l * c]);
        }
        Ok(Self::from_raw([b, length, c], out))
    }

    /// Single sample `b` as a batch of one.
    pub fn sample(&self, b: usize) -> Self {
        let block = self.shape[1] * self.shape[2];
        Self::from_raw(
            [1, self.shape[1], self.shape[2]],
            self.data[b * block..(b + 1) * block].to_vec(),
        )
    }

    /// Concatenates batches of identical `(length, channels)`.
    pub fn stack(parts: &[Tensor3]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| shape_err("Tensor3::stack", "at least one tensor", 0))?;
        let [_, l, c] = first.shape;
        let mut data = Vec::new();
        let mut batch = 0;
        for p in parts {
            if p.shape[1] != l || p.shape[2] != c {
                return Err(shape_err(
                    "Tensor3::stack",
                    format!("(_, {l}, {c})"),
                    format!("{:?}", p.shape),
                ));
            }
            batch += p.shape[0];
            data.extend_from_slice(&p.data);
        }
        Ok(Self::from_raw([batch, l, c], data))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_checks_length_and_finiteness() {
        assert!(Tensor3::from_vec([1, 2, 2], vec![0.0; 3]).is_err());
        assert_eq!(
            Tensor3::from_vec([1, 1, 2], vec![0.0, Real::NAN]),
            Err(NnError::NonFinite("Tensor3::from_vec"))
        );
        let t = Tensor3::from_vec([2, 2, 1], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(t.get(1, 0, 0), 3.0);
    }

    #[test]
    fn crop_then_pad_restores_shape() {
        let t = Tensor3::from_vec([2, 3, 1], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let c = t.crop_length(2).unwrap();
        assert_eq!(c.data(), &[1.0, 2.0, 4.0, 5.0]);
        let p = c.pad_length(3).unwrap();
        assert_eq!(p.data(), &[1.0, 2.0, 0.0, 4.0, 5.0, 0.0]);
    }

    #[test]
    fn stack_and_sample() {
        let a = Tensor3::from_vec([1, 2, 1], vec![1.0, 2.0]).unwrap();
        let b = Tensor3::from_vec([1, 2, 1], vec![3.0, 4.0]).unwrap();
        let s = Tensor3::stack(&[a.clone(), b]).unwrap();
        assert_eq!(s.shape(), [2, 2, 1]);
        assert_eq!(s.sample(0), a);
    }
}
