//! Column-major storage for i.i.d. observation batches.
//!
//! Observations are real vectors; complex-valued models store the real and
//! imaginary parts interleaved, so one type serves every model in the crate.

use num_complex::Complex64;

/// A batch of `count` observations, each a real vector of length `dim`,
/// stored contiguously column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    dim: usize,
    count: usize,
    data: Vec<f64>,
}

impl Samples {
    pub fn zeros(dim: usize, count: usize) -> Self {
        Samples {
            dim,
            count,
            data: vec![0.0; dim * count],
        }
    }

    /// Build from a flat column-major buffer. Panics on length mismatch.
    pub fn from_vec(dim: usize, count: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), dim * count, "samples buffer length mismatch");
        Samples { dim, count, data }
    }

    /// Convenience constructor for scalar observations.
    pub fn from_scalars(values: &[f64]) -> Self {
        Samples {
            dim: 1,
            count: values.len(),
            data: values.to_vec(),
        }
    }

    /// Build from observation slices (each of equal length).
    pub fn from_obs(rows: &[&[f64]]) -> Self {
        assert!(!rows.is_empty(), "no observations");
        let dim = rows[0].len();
        let mut data = Vec::with_capacity(dim * rows.len());
        for r in rows {
            assert_eq!(r.len(), dim, "ragged observations");
            data.extend_from_slice(r);
        }
        Samples {
            dim,
            count: rows.len(),
            data,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    #[inline]
    pub fn obs(&self, m: usize) -> &[f64] {
        &self.data[m * self.dim..(m + 1) * self.dim]
    }

    #[inline]
    pub fn obs_mut(&mut self, m: usize) -> &mut [f64] {
        &mut self.data[m * self.dim..(m + 1) * self.dim]
    }

    pub fn iter_obs(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Reinterpret an interleaved real/imaginary observation as a complex
    /// vector. Panics if `dim` is odd.
    pub fn obs_complex(&self, m: usize) -> Vec<Complex64> {
        let o = self.obs(m);
        assert!(o.len() % 2 == 0, "observation length is not even");
        o.chunks_exact(2)
            .map(|p| Complex64::new(p[0], p[1]))
            .collect()
    }
}

/// Interleave a complex observation into a real buffer.
pub fn interleave_complex(z: &[Complex64], out: &mut [f64]) {
    assert_eq!(out.len(), 2 * z.len());
    for (i, c) in z.iter().enumerate() {
        out[2 * i] = c.re;
        out[2 * i + 1] = c.im;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_layout_round_trips() {
        let s = Samples::from_obs(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        assert_eq!(s.dim(), 2);
        assert_eq!(s.count(), 3);
        assert_eq!(s.obs(1), &[3.0, 4.0]);
        assert_eq!(s.iter_obs().count(), 3);
    }

    #[test]
    fn complex_view_interleaves() {
        let s = Samples::from_obs(&[&[1.0, -1.0, 0.5, 2.0]]);
        let z = s.obs_complex(0);
        assert_eq!(z[0], Complex64::new(1.0, -1.0));
        assert_eq!(z[1], Complex64::new(0.5, 2.0));
    }
}
