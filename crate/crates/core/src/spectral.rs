//! Norms, conserved functionals, the alias-free cubic nonlinearity and the
//! random perturbation sampler.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::fft::PaddedFft;
use crate::field::FourierField;
use crate::grid::{shell, GridSpec, Mode};
use crate::scalar::{int, lit, Real};

/// The standard invariants of the cubic flow: squared l2 norm, momentum
/// vector and energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConservedFunctionals<T: Real> {
    pub l2sq: T,
    pub momentum: [T; 3],
    pub energy: T,
}

/// Weighted l2 norm.
///
/// With `exclude_zero` set the weight is `|j|^{2s}` and the zero mode is
/// ignored (the perturbation norm); otherwise the weight is `(1 + |j|^2)^s`.
pub fn sobolev_norm<T: Real>(f: &FourierField<T>, s: T, exclude_zero: bool) -> T {
    let mut acc = T::zero();
    for (i, c) in f.coeffs().iter().enumerate() {
        let j = f.grid().mode_at(i);
        let n = shell(&j);
        if exclude_zero {
            if n == 0 {
                continue;
            }
            acc += int::<T>(n as i64).powf(s) * c.norm_sqr();
        } else {
            acc += (T::one() + int::<T>(n as i64)).powf(s) * c.norm_sqr();
        }
    }
    acc.sqrt()
}

/// Evaluate the three conserved functionals; the quartic part of the energy
/// is computed alias-free on the padded collocation grid.
pub fn conserved_with<T: Real>(
    fft: &mut PaddedFft<T>,
    f: &FourierField<T>,
    lambda: T,
) -> ConservedFunctionals<T> {
    let mut l2sq = T::zero();
    let mut momentum = [T::zero(); 3];
    let mut kinetic = T::zero();
    for (i, c) in f.coeffs().iter().enumerate() {
        let j = f.grid().mode_at(i);
        let a2 = c.norm_sqr();
        l2sq += a2;
        for ax in 0..3 {
            momentum[ax] += int::<T>(j[ax]) * a2;
        }
        kinetic += int::<T>(shell(&j) as i64) * a2;
    }
    let mut buf = Vec::new();
    fft.synthesize_into(f, &mut buf);
    let quartic_mean = buf
        .iter()
        .fold(T::zero(), |acc, v| acc + v.norm_sqr() * v.norm_sqr())
        / lit::<T>(f.grid().point_count() as f64);
    ConservedFunctionals {
        l2sq,
        momentum,
        energy: kinetic + lambda * quartic_mean / lit::<T>(2.0),
    }
}

/// Convenience wrapper planning transforms internally; for repeated
/// evaluation construct a [`PaddedFft`] once and use [`conserved_with`].
pub fn conserved<T: Real>(f: &FourierField<T>, lambda: T) -> ConservedFunctionals<T> {
    conserved_with(&mut PaddedFft::new(*f.grid()), f, lambda)
}

/// The truncated cubic convolution `lambda (f * f * conj(f))` restricted to
/// the retained band, exact for all retained modes.
pub fn cubic_term_with<T: Real>(
    fft: &mut PaddedFft<T>,
    f: &FourierField<T>,
    lambda: T,
) -> FourierField<T> {
    let mut buf = Vec::new();
    fft.synthesize_into(f, &mut buf);
    for v in &mut buf {
        *v *= v.norm_sqr();
    }
    let mut out = FourierField::zeros(*f.grid());
    fft.analyze_into(&mut buf, &mut out);
    out.scale(lambda);
    out
}

/// See [`cubic_term_with`].
pub fn cubic_term<T: Real>(f: &FourierField<T>, lambda: T) -> FourierField<T> {
    cubic_term_with(&mut PaddedFft::new(*f.grid()), f, lambda)
}

/// Random zero-mean-mode field with independent complex Gaussian
/// coefficients damped like `|j|^{-(s + (d+1)/2)}`, rescaled so that its
/// zero-excluded Sobolev norm equals `eps` exactly. Deterministic in `seed`.
pub fn random_perturbation<T: Real>(
    grid: GridSpec,
    s: T,
    eps: T,
    seed: u64,
) -> FourierField<T>
where
    StandardNormal: Distribution<T>,
{
    assert!(eps > T::zero(), "target norm must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let decay = s + lit::<T>((grid.dim() as f64 + 1.0) / 2.0);
    let mut f = FourierField::zeros(grid);
    for i in 0..grid.mode_count() {
        let j = grid.mode_at(i);
        let n = shell(&j);
        if n == 0 {
            continue;
        }
        let re: T = StandardNormal.sample(&mut rng);
        let im: T = StandardNormal.sample(&mut rng);
        let amp = int::<T>(n as i64).sqrt().powf(-decay);
        f.coeffs_mut()[i] = Complex::new(re * amp, im * amp);
    }
    let norm = sobolev_norm(&f, s, true);
    f.scale(eps / norm);
    f
}

/// Mask for lossless frame shifting: zero every mode `j` with `j + shift`
/// outside the grid, so the shifted field keeps all its mass.
pub fn mask_for_shift<T: Real>(f: &mut FourierField<T>, shift: &Mode) {
    let grid = *f.grid();
    for i in 0..grid.mode_count() {
        let j = grid.mode_at(i);
        let t = crate::grid::add(&j, shift);
        if !grid.contains(&t) {
            f.coeffs_mut()[i] = Complex::default();
        }
    }
}

/// Symmetric support margin: zero every mode with `|j_i| > K - margin_i` on
/// any axis. A margin of `|m|` keeps shifts by both `m` and `-m` lossless
/// and keeps the truncation boxes of the shifted and unshifted systems
/// aligned on the support.
pub fn mask_margin<T: Real>(f: &mut FourierField<T>, margin: &Mode) {
    let grid = *f.grid();
    let k = grid.cutoff();
    for i in 0..grid.mode_count() {
        let j = grid.mode_at(i);
        if (0..grid.dim()).any(|ax| j[ax].abs() > k - margin[ax].abs()) {
            f.coeffs_mut()[i] = Complex::default();
        }
    }
}
