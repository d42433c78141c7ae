use num_complex::Complex64;

use crate::error::Result;

/// A real, weighted, self-adjoint smoothing operator on node functions.
///
/// Complex inputs are handled through their real and imaginary parts.
pub trait SmoothingOperator: Sync {
    fn weights(&self) -> &[f64];

    fn apply_real(&self, f: &[f64]) -> Result<Vec<f64>>;

    fn apply_complex(&self, f: &[Complex64]) -> Result<Vec<Complex64>> {
        let re: Vec<f64> = f.iter().map(|z| z.re).collect();
        let im: Vec<f64> = f.iter().map(|z| z.im).collect();
        let (ur, ui) = (self.apply_real(&re)?, self.apply_real(&im)?);
        Ok(ur.into_iter().zip(ui).map(|(a, b)| Complex64::new(a, b)).collect())
    }

    /// Weighted inner product `sum_p w_p f_p g_p`.
    fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights().iter().zip(f).zip(g).map(|((w, a), b)| w * a * b).sum()
    }
}
