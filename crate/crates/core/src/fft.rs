//! Padded collocation transforms.
//!
//! A field with per-axis cutoff `K` is synthesized on a `G >= 4K + 1` point
//! grid per axis, so trigonometric products of degree up to `3K` plus the
//! retained band `K` stay below the first alias image at `G - K`. Cubic
//! convolutions of retained modes are therefore exact on the retained band,
//! and the quartic energy sum is exact at the zero mode.
//!
//! Plans and work buffers are owned by the struct; clone it per thread (the
//! underlying FFT plans are shared through `Arc`).

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::field::FourierField;
use crate::grid::GridSpec;
use crate::scalar::{lit, Real};

pub struct PaddedFft<T: Real> {
    grid: GridSpec,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
    scratch: Vec<Complex<T>>,
    line: Vec<Complex<T>>,
}

impl<T: Real> Clone for PaddedFft<T> {
    fn clone(&self) -> Self {
        PaddedFft {
            grid: self.grid,
            fwd: self.fwd.clone(),
            inv: self.inv.clone(),
            scratch: self.scratch.clone(),
            line: self.line.clone(),
        }
    }
}

impl<T: Real> PaddedFft<T> {
    pub fn new(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(grid.collocation());
        let inv = planner.plan_fft_inverse(grid.collocation());
        let scratch_len = fwd
            .get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len());
        PaddedFft {
            grid,
            fwd,
            inv,
            scratch: vec![Complex::default(); scratch_len],
            line: vec![Complex::default(); grid.collocation()],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Collocation values `u(x_n) = sum_j c_j e^{i j . x_n}` on the padded
    /// grid, written into `buf` (resized to `G^d`).
    pub fn synthesize_into(&mut self, f: &FourierField<T>, buf: &mut Vec<Complex<T>>) {
        assert_eq!(f.grid(), &self.grid, "field grid mismatch");
        buf.clear();
        buf.resize(self.grid.point_count(), Complex::default());
        for (i, j) in self.grid.modes().enumerate() {
            buf[self.grid.padded_slot(&j)] = f.coeffs()[i];
        }
        // Axes above the current one are untouched and still band-limited, so
        // lines outside the band are identically zero and are skipped.
        for axis in (0..self.grid.dim()).rev() {
            self.apply_axis(buf, axis, false);
        }
    }

    /// Forward transform of collocation values; writes the normalized
    /// coefficients of the retained modes into `out`. `buf` is destroyed.
    pub fn analyze_into(&mut self, buf: &mut [Complex<T>], out: &mut FourierField<T>) {
        assert_eq!(buf.len(), self.grid.point_count());
        assert_eq!(out.grid(), &self.grid, "field grid mismatch");
        // Axes below the current one are already transformed; only their
        // banded slots can reach the retained output modes.
        for axis in 0..self.grid.dim() {
            self.apply_axis(buf, axis, true);
        }
        let norm = T::one() / lit::<T>(self.grid.point_count() as f64);
        for i in 0..self.grid.mode_count() {
            let j = self.grid.mode_at(i);
            out.coeffs_mut()[i] = buf[self.grid.padded_slot(&j)] * norm;
        }
    }

    /// One-dimensional FFTs along `axis` for every line whose indices on
    /// axes below `axis` lie in the retained band (other axes: all lines).
    fn apply_axis(&mut self, buf: &mut [Complex<T>], axis: usize, forward: bool) {
        let d = self.grid.dim();
        let g = self.grid.collocation();
        let k = self.grid.cutoff() as usize;
        let plan = if forward {
            self.fwd.clone()
        } else {
            self.inv.clone()
        };

        // Per-axis banded slots form two contiguous runs: [0, K] and [G-K, G-1].
        let band_runs: [(usize, usize); 2] = [(0, k + 1), (g - k, k)];

        if axis == d - 1 {
            // Contiguous lines; batch whole runs into single FFT calls.
            match d {
                1 => plan.process_with_scratch(buf, &mut self.scratch),
                2 => {
                    for &(start, len) in &band_runs {
                        let chunk = &mut buf[start * g..(start + len) * g];
                        plan.process_with_scratch(chunk, &mut self.scratch);
                    }
                }
                _ => {
                    for &(s0, l0) in &band_runs {
                        for i0 in s0..s0 + l0 {
                            for &(s1, l1) in &band_runs {
                                let base = (i0 * g + s1) * g;
                                let chunk = &mut buf[base..base + l1 * g];
                                plan.process_with_scratch(chunk, &mut self.scratch);
                            }
                        }
                    }
                }
            }
            return;
        }

        let stride = g.pow((d - 1 - axis) as u32);
        let banded: Vec<usize> = band_runs
            .iter()
            .flat_map(|&(s, l)| s..s + l)
            .collect();
        let full: Vec<usize> = (0..g).collect();

        // Outer axes in ascending order, skipping `axis`.
        let outer: Vec<(usize, &[usize])> = (0..d)
            .filter(|&b| b != axis)
            .map(|b| {
                let idx: &[usize] = if b < axis { &banded } else { &full };
                (g.pow((d - 1 - b) as u32), idx)
            })
            .collect();

        let mut process_line = |base: usize, line: &mut Vec<Complex<T>>, scratch: &mut Vec<Complex<T>>| {
            for i in 0..g {
                line[i] = buf[base + i * stride];
            }
            plan.process_with_scratch(line, scratch);
            for i in 0..g {
                buf[base + i * stride] = line[i];
            }
        };

        match outer.len() {
            0 => process_line(0, &mut self.line, &mut self.scratch),
            1 => {
                let (st, idx) = outer[0];
                for &i in idx {
                    process_line(i * st, &mut self.line, &mut self.scratch);
                }
            }
            _ => {
                let (st0, idx0) = outer[0];
                let (st1, idx1) = outer[1];
                for &i0 in idx0 {
                    for &i1 in idx1 {
                        process_line(i0 * st0 + i1 * st1, &mut self.line, &mut self.scratch);
                    }
                }
            }
        }
    }
}
