//! The chi-squared tail and the contingency-table invariants, checked
//! against references that share no code with the library.

use proptest::prelude::*;
use relscope_core::stats::{chi2_sf, chi_squared_test};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Even dof 2m: Q = e^{-x/2} Σ_{i<m} (x/2)^i / i!
fn even_dof_sf(x: f64, dof: u32) -> f64 {
    let h = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for i in 1..dof / 2 {
        term *= h / i as f64;
        sum += term;
    }
    (-h).exp() * sum
}

fn grid() -> impl Iterator<Item = (u32, f64)> {
    (1..=20u32).flat_map(|k| (0..=400).map(move |i| (k, i as f64 * 0.25)))
}

#[test]
fn matches_closed_form_for_even_dof() {
    for (k, x) in grid().filter(|(k, _)| k % 2 == 0) {
        let want = even_dof_sf(x, k);
        let got = chi2_sf(x, k);
        assert!((got - want).abs() < 1e-8, "dof {k} x {x}: {got} vs {want}");
    }
}

#[test]
fn matches_statrs_over_reference_grid() {
    for (k, x) in grid() {
        let want = ChiSquared::new(k as f64).unwrap().sf(x);
        let got = chi2_sf(x, k);
        assert!((got - want).abs() < 1e-8, "dof {k} x {x}: {got} vs {want}");
    }
}

#[test]
fn dof_one_closed_form() {
    // Q(1/2, x/2) = erfc(√(x/2)); erfc(1) = 0.15729920705028513
    assert!((chi2_sf(2.0, 1) - 0.157_299_207_050_285_13).abs() < 1e-12);
}

proptest! {
    #[test]
    fn table_invariants(
        rows in 2usize..6,
        cols in 2usize..6,
        cells in proptest::collection::vec(1u64..200, 36),
    ) {
        let observed: Vec<Vec<u64>> = (0..rows).map(|i| cells[i * cols..(i + 1) * cols].to_vec()).collect();
        let n: u64 = observed.iter().flatten().sum();
        let t = chi_squared_test(&observed, false).unwrap();
        let expected_sum: f64 = t.expected.iter().flatten().sum();
        prop_assert!((expected_sum - n as f64).abs() < 1e-9 * n as f64);
        let rsq: f64 = t.residuals.iter().flatten().map(|r| r * r).sum();
        prop_assert!((rsq - t.chi2).abs() <= 1e-9 * t.chi2.max(1.0));
        prop_assert_eq!(t.dof as usize, (rows - 1) * (cols - 1));
        for i in 0..rows {
            let row_total: u64 = observed[i].iter().sum();
            for j in 0..cols {
                let col_total: u64 = observed.iter().map(|r| r[j]).sum();
                let e = row_total as f64 * col_total as f64 / n as f64;
                prop_assert!((t.expected[i][j] - e).abs() < 1e-9 * e.max(1.0));
                let r = (observed[i][j] as f64 - e) / e.sqrt();
                prop_assert!((t.residuals[i][j] - r).abs() < 1e-9);
            }
        }
        prop_assert!((0.0..=1.0).contains(&t.p_value));
    }
}
