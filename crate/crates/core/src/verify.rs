//! Built-in invariant suite behind the `verify` command: chain round trips,
//! shell diagonalization identities, the central-difference oracle for the
//! reduced right-hand side, and the frequency asymptotics bound.

use num_complex::Complex;

use crate::field::FourierField;
use crate::grid::GridSpec;
use crate::integrator::strang_step;
use crate::reduction::{
    build_sn, eliminate_zero_mode, from_normal_coords, linearization_block, restore_zero_mode,
    rhs_reduced, shift_frame, to_normal_coords, unshift_frame, DiagonalFrame, Mat2,
    PlaneWaveFrame,
};
use crate::spectral::{mask_for_shift, random_perturbation};

/// Deliberate corruption hooks for exercising the failure paths.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    None,
    /// Perturb one entry of one `S_n` before the diagonalization check.
    PerturbSnEntry,
}

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// The measured quantity the tolerance applies to.
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckResult {
    fn leq(name: &'static str, measured: f64, tolerance: f64, detail: String) -> Self {
        CheckResult {
            name,
            passed: measured <= tolerance && measured.is_finite(),
            measured,
            tolerance,
            detail,
        }
    }

    fn geq(name: &'static str, measured: f64, floor: f64, detail: String) -> Self {
        CheckResult {
            name,
            passed: measured >= floor && measured.is_finite(),
            measured,
            tolerance: floor,
            detail,
        }
    }
}

/// `Omega_n - (n + lambda sigma - sigma^2 / (2 (n + lambda sigma)))`
/// evaluated cancellation-free as
/// `-sigma^4 / (2 (n + lambda sigma) (Omega_n + n + lambda sigma)^2)`;
/// the direct subtraction drowns in roundoff for n above ~1e3.
pub fn asymptotic_defect(n: u64, sigma: f64, lambda: f64) -> f64 {
    let om = ((n * n) as f64 + 2.0 * n as f64 * lambda * sigma).sqrt();
    let base = n as f64 + lambda * sigma;
    -sigma.powi(4) / (2.0 * base * (om + base) * (om + base))
}

/// Fit `C = max |defect| n^2` on `n in [10, 100]` and validate the bound on
/// `n in [100, 10^6]`; returns `(C, margin)` with `margin >= 1` meaning no
/// violation.
pub fn asymptotics_fit_and_margin(sigma: f64, lambda: f64) -> (f64, f64) {
    let weighted = |n: u64| asymptotic_defect(n, sigma, lambda).abs() * (n * n) as f64;
    let c = (10..=100u64).map(weighted).fold(0.0f64, f64::max);
    let worst = (100..=1_000_000u64).map(weighted).fold(0.0f64, f64::max);
    (c, c / worst)
}

/// Errors of the central-difference derivative of the chain-transformed
/// trajectory against the analytic reduced right-hand side, one per step
/// size. Second-order splitting makes consecutive halvings shrink the error
/// by about 4.
pub fn rhs_oracle_errors(dts: &[f64]) -> Vec<f64> {
    let grid = GridSpec::new(1, 8).unwrap();
    let rho = 1.0;
    let lambda = 1.0;
    let mut v: FourierField<f64> = random_perturbation(grid, 3.0, 0.2, 12);
    let l2 = v.l2sq();
    v.set_zero_mode(Complex::new((rho * rho - l2).sqrt(), 0.0));
    let u = v; // carrier at m = 0: the shift is the identity

    let to_w = |f: &FourierField<f64>| eliminate_zero_mode(f).unwrap().w;
    let w0 = to_w(&u);
    let rhs = rhs_reduced(&w0, rho, lambda).unwrap();

    dts.iter()
        .map(|&dt| {
            let wp = to_w(&strang_step(&u, dt, lambda));
            let wm = to_w(&strang_step(&u, -dt, lambda));
            let mut err = 0.0f64;
            for (i, r) in rhs.coeffs().iter().enumerate() {
                let fd = (wp.coeffs()[i] - wm.coeffs()[i]) / Complex::new(2.0 * dt, 0.0);
                err += (fd - r).norm_sqr();
            }
            err.sqrt()
        })
        .collect()
}

/// Run the whole suite; `fault` selects a deliberate corruption.
pub fn run_checks(fault: Fault) -> Vec<CheckResult> {
    let mut out = Vec::new();

    // chain round trip through all coordinate changes
    {
        let grid = GridSpec::new(2, 5).unwrap();
        let m = [1, 0, 0];
        let (rho, lambda) = (1.0, 1.0);
        let mut u: FourierField<f64> = random_perturbation(grid, 1.5, 0.3, 4242);
        mask_for_shift(&mut u, &[-1, 0, 0]);
        u.set(&m, Complex::new(0.9, 0.2));
        let frame = PlaneWaveFrame::new(m, rho, lambda).at(0.6);
        let diag = DiagonalFrame::for_grid(&grid, rho, lambda).unwrap();
        let err = shift_frame(&u, &frame)
            .and_then(|v| {
                let mut red = eliminate_zero_mode(&v)?;
                red.w = from_normal_coords(&to_normal_coords(&red.w, &diag), &diag);
                unshift_frame(&restore_zero_mode(&red), &frame)
            })
            .map(|back| u.max_abs_diff(&back))
            .unwrap_or(f64::INFINITY);
        out.push(CheckResult::leq(
            "chain round trip",
            err,
            1e-12,
            "shift -> eliminate -> diagonalize -> invert".into(),
        ));
    }

    // shell diagonalization identities up to n = 1e4
    {
        let mut residual = 0.0f64;
        let mut det_err = 0.0f64;
        let mut asym = 0.0f64;
        let mut cond = 0.0f64;
        for &(lambda, rho) in &[(1.0, 1.0), (-1.0, 0.5)] {
            for n in 1..=10_000u64 {
                let (mut s, s_inv, om) = build_sn(n, rho, lambda).unwrap();
                if fault == Fault::PerturbSnEntry && n == 17 && lambda == 1.0 {
                    s.a += 1e-6;
                }
                let a = linearization_block(n, rho, lambda);
                let d = s_inv.mul(&a).mul(&s);
                let target = Mat2 {
                    a: om,
                    b: 0.0,
                    c: 0.0,
                    d: -om,
                };
                residual = residual.max(d.max_abs_diff(&target));
                det_err = det_err.max((s.det() - 1.0).abs());
                asym = asym.max((s.b - s.c).abs());
                cond = cond.max(s.sym_condition_number());
            }
        }
        out.push(CheckResult::leq(
            "diagonalization residual",
            residual,
            1e-10,
            "max |S^-1 A S - diag(Omega, -Omega)| over n <= 1e4".into(),
        ));
        out.push(CheckResult::leq(
            "symplectic determinant",
            det_err,
            1e-12,
            "max |det S - 1|".into(),
        ));
        out.push(CheckResult::leq(
            "matrix symmetry",
            asym,
            0.0,
            "S must be exactly symmetric".into(),
        ));
        out.push(CheckResult::leq(
            "condition number",
            cond,
            2.0 - f64::EPSILON,
            "max cond(S_n) stays below 2".into(),
        ));
    }

    // central-difference oracle for the reduced right-hand side
    {
        let errs = rhs_oracle_errors(&[1e-3, 5e-4]);
        let ratio = errs[0] / errs[1];
        out.push(CheckResult {
            name: "reduced rhs oracle",
            passed: (3.5..=4.5).contains(&ratio),
            measured: ratio,
            tolerance: 4.0,
            detail: format!(
                "central-difference error ratio, errors {:.3e} -> {:.3e}",
                errs[0], errs[1]
            ),
        });
    }

    // frequency asymptotics bound
    {
        let (c, margin) = asymptotics_fit_and_margin(1.0, 1.0);
        out.push(CheckResult::geq(
            "frequency asymptotics",
            margin,
            1.0,
            format!("C = {c:.3e} fitted on [10,100] must bound [100,1e6]"),
        ));
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::omega;

    #[test]
    fn pristine_suite_passes() {
        let results = run_checks(Fault::None);
        for r in &results {
            assert!(r.passed, "{}: measured {:.3e}", r.name, r.measured);
        }
    }

    #[test]
    fn fault_injection_names_the_diagonalization() {
        let results = run_checks(Fault::PerturbSnEntry);
        let failing: Vec<_> = results.iter().filter(|r| !r.passed).collect();
        assert!(!failing.is_empty());
        assert_eq!(failing[0].name, "diagonalization residual");
    }

    #[test]
    fn defect_matches_direct_subtraction_at_moderate_n() {
        for &(sigma, lambda) in &[(1.0f64, 1.0f64), (0.25, -1.0)] {
            for n in [10u64, 50, 200, 1000] {
                let om = omega(n, sigma.sqrt(), lambda).unwrap();
                let approx = n as f64 + lambda * sigma - sigma * sigma / (2.0 * (n as f64 + lambda * sigma));
                let direct = om - approx;
                let closed = asymptotic_defect(n, sigma, lambda);
                assert!(
                    (direct - closed).abs() < 1e-11,
                    "n={n}: {direct:e} vs {closed:e}"
                );
            }
        }
    }

    #[test]
    fn asymptotics_margin_is_comfortable() {
        let (c, margin) = asymptotics_fit_and_margin(1.0, 1.0);
        assert!(c > 0.0);
        assert!(margin >= 1.0, "margin {margin}");
    }
}
