//! Truncated Fourier lattices on the torus.
//!
//! Modes are lattice points `j` with `|j_i| <= K` per axis; the collocation
//! grid used for nonlinear products has `G >= 4K + 1` points per axis so that
//! cubic products of retained modes cannot alias back into the retained band.

use crate::error::{Error, Result};

/// Lattice index in up to three dimensions; coordinates beyond the grid
/// dimension are zero.
pub type Mode = [i64; 3];

/// `|j|^2`, the shell index of a mode.
#[inline]
pub fn shell(j: &Mode) -> u64 {
    (j[0] * j[0] + j[1] * j[1] + j[2] * j[2]) as u64
}

#[inline]
pub fn neg(j: &Mode) -> Mode {
    [-j[0], -j[1], -j[2]]
}

#[inline]
pub fn add(a: &Mode, b: &Mode) -> Mode {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: &Mode, b: &Mode) -> Mode {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn dot(a: &Mode, b: &Mode) -> i64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Truncated lattice: dimension, per-axis mode cutoff and collocation size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct GridSpec {
    d: usize,
    k: i64,
    g: usize,
}

/// Smallest integer `>= n` whose prime factors are all `<= 11`; FFT lengths
/// with small factors are far cheaper than near-prime ones.
fn next_smooth(n: usize) -> usize {
    'outer: for g in n.. {
        let mut rem = g;
        for p in [2usize, 3, 5, 7, 11] {
            while rem % p == 0 {
                rem /= p;
            }
        }
        if rem == 1 {
            return g;
        }
        continue 'outer;
    }
    unreachable!()
}

impl GridSpec {
    /// Grid with an alias-free collocation size: the smallest FFT-friendly
    /// `G >= 4K + 1`.
    pub fn new(d: usize, k: usize) -> Result<Self> {
        Self::with_collocation(d, k, next_smooth(4 * k + 1))
    }

    /// Grid with an explicit collocation size (must satisfy `G >= 4K + 1`).
    pub fn with_collocation(d: usize, k: usize, g: usize) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::InvalidConfig(format!(
                "dimension must be 1, 2 or 3, got {d}"
            )));
        }
        if k == 0 {
            return Err(Error::InvalidConfig("mode cutoff K must be >= 1".into()));
        }
        if g < 4 * k + 1 {
            return Err(Error::InvalidConfig(format!(
                "collocation size G = {g} violates G >= 4K + 1 = {}",
                4 * k + 1
            )));
        }
        Ok(GridSpec {
            d,
            k: k as i64,
            g,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn cutoff(&self) -> i64 {
        self.k
    }

    #[inline]
    pub fn collocation(&self) -> usize {
        self.g
    }

    /// Modes per axis, `2K + 1`.
    #[inline]
    pub fn width(&self) -> usize {
        (2 * self.k + 1) as usize
    }

    /// Total retained mode count, `(2K + 1)^d`.
    #[inline]
    pub fn mode_count(&self) -> usize {
        self.width().pow(self.d as u32)
    }

    /// Total collocation points, `G^d`.
    #[inline]
    pub fn point_count(&self) -> usize {
        self.g.pow(self.d as u32)
    }

    /// Largest shell index present on the lattice, `d * K^2`.
    #[inline]
    pub fn max_shell(&self) -> u64 {
        (self.d as u64) * (self.k * self.k) as u64
    }

    #[inline]
    pub fn contains(&self, j: &Mode) -> bool {
        (0..3).all(|ax| {
            if ax < self.d {
                j[ax].unsigned_abs() <= self.k as u64
            } else {
                j[ax] == 0
            }
        })
    }

    /// Flat storage index of a mode; the last axis varies fastest.
    #[inline]
    pub fn index_of(&self, j: &Mode) -> usize {
        debug_assert!(self.contains(j));
        let w = self.width();
        let mut idx = 0usize;
        for ax in 0..self.d {
            idx = idx * w + (j[ax] + self.k) as usize;
        }
        idx
    }

    /// Inverse of [`index_of`](Self::index_of).
    pub fn mode_at(&self, idx: usize) -> Mode {
        let w = self.width();
        let mut rem = idx;
        let mut j = [0i64; 3];
        for ax in (0..self.d).rev() {
            j[ax] = (rem % w) as i64 - self.k;
            rem /= w;
        }
        debug_assert_eq!(rem, 0);
        j
    }

    /// Iterate all retained modes in flat-index order.
    pub fn modes(&self) -> impl Iterator<Item = Mode> + '_ {
        (0..self.mode_count()).map(move |i| self.mode_at(i))
    }

    /// Collocation slot of mode `j` on the padded grid (negative frequencies
    /// wrap to the top half), flattened with the last axis fastest.
    #[inline]
    pub fn padded_slot(&self, j: &Mode) -> usize {
        let g = self.g;
        let mut idx = 0usize;
        for ax in 0..self.d {
            let s = if j[ax] >= 0 {
                j[ax] as usize
            } else {
                (j[ax] + g as i64) as usize
            };
            idx = idx * g + s;
        }
        idx
    }
}
