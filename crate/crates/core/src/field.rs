//! Truncated Fourier fields: the state vectors `u`, `v`, `w`, `xi`.

use num_complex::Complex;

use crate::grid::{GridSpec, Mode};
use crate::scalar::Real;

/// Complex coefficient array over the truncated lattice of a [`GridSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct FourierField<T: Real> {
    grid: GridSpec,
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> FourierField<T> {
    /// The zero field.
    pub fn zeros(grid: GridSpec) -> Self {
        FourierField {
            grid,
            coeffs: vec![Complex::new(T::zero(), T::zero()); grid.mode_count()],
        }
    }

    /// Field with a single excited mode.
    pub fn single_mode(grid: GridSpec, j: &Mode, amplitude: Complex<T>) -> Self {
        let mut f = Self::zeros(grid);
        f.set(j, amplitude);
        f
    }

    pub fn from_coeffs(grid: GridSpec, coeffs: Vec<Complex<T>>) -> Self {
        assert_eq!(coeffs.len(), grid.mode_count(), "coefficient length mismatch");
        FourierField { grid, coeffs }
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    #[inline]
    pub fn get(&self, j: &Mode) -> Complex<T> {
        self.coeffs[self.grid.index_of(j)]
    }

    #[inline]
    pub fn set(&mut self, j: &Mode, value: Complex<T>) {
        let idx = self.grid.index_of(j);
        self.coeffs[idx] = value;
    }

    /// The coefficient of the zero mode.
    #[inline]
    pub fn zero_mode(&self) -> Complex<T> {
        self.get(&[0, 0, 0])
    }

    pub fn set_zero_mode(&mut self, value: Complex<T>) {
        self.set(&[0, 0, 0], value);
    }

    /// Sum of squared moduli over all retained modes.
    pub fn l2sq(&self) -> T {
        self.coeffs
            .iter()
            .fold(T::zero(), |acc, c| acc + c.norm_sqr())
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> T {
        self.coeffs
            .iter()
            .fold(T::zero(), |acc, c| acc.max(c.norm_sqr()))
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn scale(&mut self, factor: T) {
        for c in &mut self.coeffs {
            *c *= factor;
        }
    }

    /// `self - other`, fields on the same grid.
    pub fn difference(&self, other: &Self) -> Self {
        assert_eq!(self.grid, other.grid);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        FourierField {
            grid: self.grid,
            coeffs,
        }
    }

    /// Largest modulus of the coefficient-wise difference.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.grid, other.grid);
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(T::zero(), |acc, (a, b)| acc.max((a - b).norm_sqr()))
            .sqrt()
    }

    /// Copy coefficients into a (possibly larger) grid, preserving mode
    /// indices; target must contain every mode of the source.
    pub fn embed(&self, target: GridSpec) -> Self {
        assert!(target.dim() == self.grid.dim() && target.cutoff() >= self.grid.cutoff());
        let mut out = Self::zeros(target);
        for (i, j) in self.grid.modes().enumerate() {
            out.set(&j, self.coeffs[i]);
        }
        out
    }

    /// Iterate `(mode, coefficient)` pairs in flat-index order.
    pub fn iter_modes(&self) -> impl Iterator<Item = (Mode, Complex<T>)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, c)| (self.grid.mode_at(i), *c))
    }
}
