use serde::Serialize;

/// Five-number summary with Tukey whiskers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxSummary {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// Smallest value no further than 1.5 × IQR below `q1`.
    pub whisker_low: f64,
    /// Largest value no further than 1.5 × IQR above `q3`.
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

/// Quantile of sorted data by linear interpolation between closest ranks
/// (Hyndman & Fan type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn box_summary(values: &[f64]) -> Option<BoxSummary> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&v, 0.25);
    let median = quantile_sorted(&v, 0.5);
    let q3 = quantile_sorted(&v, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside = || v.iter().copied().filter(|&x| x >= lo_fence && x <= hi_fence);
    Some(BoxSummary {
        n: v.len(),
        min: v[0],
        q1,
        median,
        q3,
        max: v[v.len() - 1],
        whisker_low: inside().next().unwrap_or(q1),
        whisker_high: inside().next_back().unwrap_or(q3),
        outliers: v
            .iter()
            .copied()
            .filter(|&x| x < lo_fence || x > hi_fence)
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_to_five() {
        let b = box_summary(&[5.0, 1.0, 4.0, 2.0, 3.0]).unwrap();
        assert_eq!((b.q1, b.median, b.q3), (2.0, 3.0, 4.0));
        assert_eq!((b.whisker_low, b.whisker_high), (1.0, 5.0));
        assert!(b.outliers.is_empty());
    }

    #[test]
    fn constant_data() {
        let b = box_summary(&[5.0; 4]).unwrap();
        for x in [b.min, b.q1, b.median, b.q3, b.max, b.whisker_low, b.whisker_high] {
            assert_eq!(x, 5.0);
        }
        assert!(b.outliers.is_empty());
    }

    #[test]
    fn far_point_is_outlier() {
        let b = box_summary(&[1.0, 1.0, 1.0, 1.0, 100.0]).unwrap();
        assert_eq!(b.outliers, vec![100.0]);
        assert_eq!(b.whisker_high, 1.0);
        assert_eq!(b.max, 100.0);
    }

    #[test]
    fn interpolates_between_ranks() {
        // h = 3 * 0.25 = 0.75 → 1 + 0.75 * (2 - 1)
        assert_eq!(quantile_sorted(&[1.0, 2.0, 3.0, 10.0], 0.25), 1.75);
        assert!(box_summary(&[]).is_none());
    }

    proptest! {
        #[test]
        fn ordering_and_whisker_bounds(v in proptest::collection::vec(-1e3f64..1e3, 1..60)) {
            let b = box_summary(&v).unwrap();
            prop_assert!(b.min <= b.q1 && b.q1 <= b.median && b.median <= b.q3 && b.q3 <= b.max);
            let iqr = b.q3 - b.q1;
            prop_assert!(b.whisker_low >= b.q1 - 1.5 * iqr - 1e-9);
            prop_assert!(b.whisker_high <= b.q3 + 1.5 * iqr + 1e-9);
            prop_assert_eq!(b.n, v.len());
            let inside = v.iter().filter(|&&x| x >= b.whisker_low && x <= b.whisker_high).count();
            prop_assert_eq!(inside + b.outliers.len(), v.len());
        }
    }
}
