//! Small-divisor scans over shell frequency combinations.
//!
//! For shells `m_1 <= ... <= m_p` and `n_1 <= ... <= n_q` the divisor is
//! `|Omega_{m_1} + ... + Omega_{m_p} - Omega_{n_1} - ... - Omega_{n_q}|`.
//! Combinations whose (+) and (-) shell multisets coincide cancel exactly
//! and are exempt; over the remaining records the scan certifies the largest
//! `gamma` with `divisor >= gamma / mu3^alpha`, where `mu3` is the
//! third-largest shell involved (taken as 1 at order two).

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::reduction::omega;
use crate::scalar::{int, lit, Real};

/// One frequency combination.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivisorRecord<T> {
    /// Shells entering with a plus sign, nondecreasing.
    pub m: Vec<u64>,
    /// Shells entering with a minus sign, nondecreasing.
    pub n: Vec<u64>,
    /// `|sum Omega_m - sum Omega_n|`.
    pub value: T,
    /// Third-largest shell index (1 when only two shells are involved).
    pub mu3: u64,
    pub cancels_pairwise: bool,
}

impl<T: Real> DivisorRecord<T> {
    /// `value * mu3^alpha`, the certified gamma this record alone allows.
    pub fn gamma_contribution(&self, alpha: T) -> T {
        self.value * int::<T>(self.mu3 as i64).powf(alpha)
    }
}

/// Scan box and certification parameters.
#[derive(Clone, Copy, Debug, Serialize, serde::Deserialize)]
pub struct ScanParams<T> {
    /// Maximum combination order `p + q`.
    pub r: usize,
    /// Largest shell index included.
    pub shell_cutoff: u64,
    /// Exponent of the `mu3` weight.
    pub alpha: T,
    /// When set, restrict to shells realizable as `|j|^2` on a lattice of
    /// this dimension.
    #[serde(default)]
    pub realizable_dim: Option<usize>,
}

/// Certified lower-bound data for one `rho`.
#[derive(Clone, Debug, Serialize)]
pub struct ResonanceCertificate<T> {
    pub rho: T,
    pub lambda: T,
    pub r: usize,
    pub shell_cutoff: u64,
    pub alpha: T,
    /// Largest gamma with `divisor >= gamma / mu3^alpha` over all
    /// non-cancelling records; infinite if the box contains none.
    pub gamma_hat: T,
    /// The minimizing record, if any.
    pub worst: Option<DivisorRecord<T>>,
}

/// Is `n` the squared norm of some nonzero lattice point in `Z^d`?
pub fn lattice_realizable(n: u64, d: usize) -> bool {
    if n == 0 {
        return false;
    }
    let root = (n as f64).sqrt() as u64 + 1;
    match d {
        1 => (1..=root).any(|a| a * a == n),
        2 => (0..=root).any(|a| {
            a * a <= n && {
                let rest = n - a * a;
                (0..=root).any(|b| b * b == rest)
            }
        }),
        3 => (0..=root).any(|a| {
            a * a <= n
                && (0..=root).any(|b| {
                    a * a + b * b <= n && {
                        let rest = n - a * a - b * b;
                        (0..=root).any(|c| c * c == rest)
                    }
                })
        }),
        _ => false,
    }
}

fn included_shells<T: Real>(params: &ScanParams<T>) -> Vec<u64> {
    (1..=params.shell_cutoff)
        .filter(|&n| match params.realizable_dim {
            Some(d) => lattice_realizable(n, d),
            None => true,
        })
        .collect()
}

fn check_regime<T: Real>(rho: T, lambda: T) -> Result<()> {
    let stab = T::one() + lit::<T>(2.0) * lambda * rho * rho;
    if stab <= T::zero() {
        return Err(Error::UnstableRegime {
            n: 1,
            value: stab.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

fn mu3(m: &[u64], n: &[u64]) -> u64 {
    let mut all: Vec<u64> = m.iter().chain(n.iter()).copied().collect();
    all.sort_unstable_by(|a, b| b.cmp(a));
    if all.len() >= 3 {
        all[2]
    } else {
        1
    }
}

/// Enumerate nondecreasing tuples of the given length over `shells`.
fn for_each_multiset<F: FnMut(&[u64])>(shells: &[u64], len: usize, f: &mut F) {
    fn rec<F: FnMut(&[u64])>(
        shells: &[u64],
        len: usize,
        start: usize,
        cur: &mut Vec<u64>,
        f: &mut F,
    ) {
        if cur.len() == len {
            f(cur);
            return;
        }
        for i in start..shells.len() {
            cur.push(shells[i]);
            rec(shells, len, i, cur, f);
            cur.pop();
        }
    }
    rec(shells, len, 0, &mut Vec::with_capacity(len), f);
}

/// Exhaustively enumerate the scan box, calling `f` once per combination
/// modulo the `(m, n) <-> (n, m)` symmetry.
pub fn scan_divisors_for_each<T: Real, F: FnMut(&DivisorRecord<T>)>(
    rho: T,
    lambda: T,
    params: &ScanParams<T>,
    mut f: F,
) -> Result<()> {
    check_regime(rho, lambda)?;
    let shells = included_shells(params);
    let freq: Vec<T> = shells
        .iter()
        .map(|&n| omega(n, rho, lambda))
        .collect::<Result<_>>()?;
    let freq_of = |tuple: &[u64]| -> T {
        tuple.iter().fold(T::zero(), |acc, &s| {
            let i = shells.binary_search(&s).expect("shell in box");
            acc + freq[i]
        })
    };
    for p in 1..params.r {
        for q in 1..=(params.r - p) {
            for_each_multiset(&shells, p, &mut |m| {
                let fm = freq_of(m);
                for_each_multiset(&shells, q, &mut |n| {
                    // the (m, n) vs (n, m) mirror is emitted once
                    if (p, m) > (q, n) {
                        return;
                    }
                    let rec = DivisorRecord {
                        m: m.to_vec(),
                        n: n.to_vec(),
                        value: (fm - freq_of(n)).abs(),
                        mu3: mu3(m, n),
                        cancels_pairwise: m == n,
                    };
                    f(&rec);
                });
            });
        }
    }
    Ok(())
}

/// Collected scan (small boxes only; the record count grows combinatorially).
pub fn scan_divisors<T: Real>(
    rho: T,
    lambda: T,
    params: &ScanParams<T>,
) -> Result<Vec<DivisorRecord<T>>> {
    let mut out = Vec::new();
    scan_divisors_for_each(rho, lambda, params, |r| out.push(r.clone()))?;
    Ok(out)
}

/// Threshold below which a non-cancelling divisor counts as an exact
/// resonance and certification fails.
pub const EXACT_RESONANCE_FLOOR: f64 = 1e-14;

fn better<T: Real>(a: &DivisorRecord<T>, b: &DivisorRecord<T>, alpha: T) -> bool {
    // deterministic strict ordering on (contribution, m, n)
    let (ca, cb) = (a.gamma_contribution(alpha), b.gamma_contribution(alpha));
    if ca != cb {
        return ca < cb;
    }
    (&a.m, &a.n) < (&b.m, &b.n)
}

/// Certify the box: `gamma_hat = min value * mu3^alpha` over non-cancelling
/// records. Enumeration partitions on the leading (+) shell and reduces by
/// minimum, so the result is deterministic regardless of scheduling.
pub fn certify<T: Real>(
    rho: T,
    lambda: T,
    params: &ScanParams<T>,
) -> Result<ResonanceCertificate<T>> {
    check_regime(rho, lambda)?;
    let shells = included_shells(params);
    let freq: Vec<T> = shells
        .iter()
        .map(|&n| omega(n, rho, lambda))
        .collect::<Result<_>>()?;

    let worst = (0..shells.len())
        .into_par_iter()
        .map(|lead| {
            let mut local: Option<DivisorRecord<T>> = None;
            // (+) tuples whose smallest shell is shells[lead]
            let tail = &shells[lead..];
            let lead_shell = shells[lead];
            let lead_freq = freq[lead];
            for p in 1..params.r {
                for q in 1..=(params.r - p) {
                    for_each_multiset(tail, p - 1, &mut |m_rest| {
                        let mut m = Vec::with_capacity(p);
                        m.push(lead_shell);
                        m.extend_from_slice(m_rest);
                        let fm = m_rest.iter().fold(lead_freq, |acc, &s| {
                            acc + freq[shells.binary_search(&s).unwrap()]
                        });
                        for_each_multiset(&shells, q, &mut |n| {
                            if (p, m.as_slice()) > (q, n) || m == n {
                                return;
                            }
                            let fn_ = n.iter().fold(T::zero(), |acc, &s| {
                                acc + freq[shells.binary_search(&s).unwrap()]
                            });
                            let rec = DivisorRecord {
                                m: m.clone(),
                                n: n.to_vec(),
                                value: (fm - fn_).abs(),
                                mu3: mu3(&m, n),
                                cancels_pairwise: false,
                            };
                            if local
                                .as_ref()
                                .map(|b| better(&rec, b, params.alpha))
                                .unwrap_or(true)
                            {
                                local = Some(rec);
                            }
                        });
                    });
                }
            }
            local
        })
        .reduce(
            || None,
            |a, b| match (a, b) {
                (Some(x), Some(y)) => {
                    if better(&x, &y, params.alpha) {
                        Some(x)
                    } else {
                        Some(y)
                    }
                }
                (x, None) => x,
                (None, y) => y,
            },
        );

    let gamma_hat = worst
        .as_ref()
        .map(|w| w.gamma_contribution(params.alpha))
        .unwrap_or_else(T::infinity);
    if let Some(w) = &worst {
        if w.value < lit::<T>(EXACT_RESONANCE_FLOOR) {
            return Err(Error::ExactResonance {
                m: w.m.clone(),
                n: w.n.clone(),
                value: w.value.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    Ok(ResonanceCertificate {
        rho,
        lambda,
        r: params.r,
        shell_cutoff: params.shell_cutoff,
        alpha: params.alpha,
        gamma_hat,
        worst,
    })
}

/// One row of a rho-grid scan.
#[derive(Clone, Debug, Serialize)]
pub struct RhoScanRow<T> {
    pub rho: T,
    /// None when certification errored (reason recorded).
    pub gamma_hat: Option<T>,
    pub pass: bool,
    pub reason: Option<String>,
    pub worst: Option<DivisorRecord<T>>,
}

/// Certify every `rho` and mark it pass iff `gamma_hat >= gamma_floor`.
/// Per-rho errors are recorded as failures, not propagated.
pub fn rho_grid_scan<T: Real>(
    rho_values: &[T],
    lambda: T,
    params: &ScanParams<T>,
    gamma_floor: T,
) -> Vec<RhoScanRow<T>> {
    rho_values
        .iter()
        .map(|&rho| match certify(rho, lambda, params) {
            Ok(cert) => RhoScanRow {
                rho,
                gamma_hat: Some(cert.gamma_hat),
                pass: cert.gamma_hat >= gamma_floor,
                reason: None,
                worst: cert.worst,
            },
            Err(e) => RhoScanRow {
                rho,
                gamma_hat: None,
                pass: false,
                reason: Some(e.to_string()),
                worst: None,
            },
        })
        .collect()
}

/// Fraction of passing rows.
pub fn pass_fraction<T>(rows: &[RhoScanRow<T>]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    rows.iter().filter(|r| r.pass).count() as f64 / rows.len() as f64
}

/// Exploration mode: the smallest exponent `alpha` (within `alpha_max`, to
/// `tol`) whose certificate clears `gamma_floor`. `gamma_hat` is
/// non-decreasing in `alpha` (all `mu3 >= 1`), so bisection applies.
pub fn fit_alpha<T: Real>(
    rho: T,
    lambda: T,
    params: &ScanParams<T>,
    gamma_floor: T,
    alpha_max: T,
    tol: T,
) -> Result<Option<T>> {
    let gamma_at = |alpha: T| -> Result<T> {
        let mut p = *params;
        p.alpha = alpha;
        Ok(certify(rho, lambda, &p)?.gamma_hat)
    };
    if gamma_at(alpha_max)? < gamma_floor {
        return Ok(None);
    }
    let mut lo = T::zero();
    let mut hi = alpha_max;
    if gamma_at(lo)? >= gamma_floor {
        return Ok(Some(lo));
    }
    while hi - lo > tol {
        let mid = (lo + hi) / lit::<T>(2.0);
        if gamma_at(mid)? >= gamma_floor {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Solve `sum Omega_m(sigma) = sum Omega_n(sigma)` for `sigma = rho^2` by
/// bisection on `(0, sigma_hi]`; returns the resonant `rho` if the bracket
/// contains a sign change. Used to plant exact resonances in stress tests.
pub fn plant_exact_resonance<T: Real>(m: &[u64], n: &[u64], lambda: T, sigma_hi: T) -> Option<T> {
    let gap = |sigma: T| -> Option<T> {
        let rho = sigma.sqrt();
        let mut acc = T::zero();
        for &s in m {
            acc += omega(s, rho, lambda).ok()?;
        }
        for &s in n {
            acc -= omega(s, rho, lambda).ok()?;
        }
        Some(acc)
    };
    let mut lo = lit::<T>(1e-12);
    let mut hi = sigma_hi;
    let (mut glo, ghi) = (gap(lo)?, gap(hi)?);
    if (glo > T::zero()) == (ghi > T::zero()) {
        return None;
    }
    for _ in 0..200 {
        let mid = (lo + hi) / lit::<T>(2.0);
        let gmid = gap(mid)?;
        if (gmid > T::zero()) == (glo > T::zero()) {
            lo = mid;
            glo = gmid;
        } else {
            hi = mid;
        }
    }
    Some(((lo + hi) / lit::<T>(2.0)).sqrt())
}

/// Format a shell tuple like `1+1+4` for CSV cells.
fn tuple_label(t: &[u64]) -> String {
    t.iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join("+")
}

/// Write scan rows as CSV with the fixed column set
/// `rho,r,cutoff,alpha,gamma_hat,worst_m,worst_n,worst_value,pass`;
/// 17 significant digits, locale independent.
pub fn write_certificates_csv<W: Write>(
    out: &mut W,
    params: &ScanParams<f64>,
    rows: &[RhoScanRow<f64>],
) -> Result<()> {
    writeln!(
        out,
        "rho,r,cutoff,alpha,gamma_hat,worst_m,worst_n,worst_value,pass"
    )?;
    for row in rows {
        let (wm, wn, wv) = match &row.worst {
            Some(w) => (
                tuple_label(&w.m),
                tuple_label(&w.n),
                format!("{:.16e}", w.value),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        writeln!(
            out,
            "{:.16e},{},{},{:.16e},{},{},{},{},{}",
            row.rho,
            params.r,
            params.shell_cutoff,
            params.alpha,
            row.gamma_hat
                .map(|g| format!("{g:.16e}"))
                .unwrap_or_default(),
            wm,
            wn,
            wv,
            row.pass as u8,
        )?;
    }
    Ok(())
}
