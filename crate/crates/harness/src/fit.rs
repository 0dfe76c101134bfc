//! Small statistics over runs.

use rsr_core::tol;

/// Median of the finite-or-infinite values; `None` when empty or any is NaN.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() || values.iter().any(|v| v.is_nan()) {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Least-squares slope of `y` against `x`; needs two distinct abscissae.
pub fn slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

/// Per-iteration contraction `ρ = exp(slope of ln sin θ₁)` over the iterates
/// from the first one at or below `RATE_WINDOW_HIGH` up to, not including,
/// the first one below `RATE_WINDOW_LOW`.
pub fn contraction_rate(sin_series: &[f64]) -> Option<f64> {
    let start = sin_series.iter().position(|&s| s <= tol::RATE_WINDOW_HIGH)?;
    let (mut ks, mut ys) = (Vec::new(), Vec::new());
    for (k, &s) in sin_series.iter().enumerate().skip(start) {
        if s < tol::RATE_WINDOW_LOW {
            break;
        }
        ks.push(k as f64);
        ys.push(s.ln());
    }
    slope(&ks, &ys).map(f64::exp)
}

/// `κ̂₁(k+1)/κ̂₁(k)` for every `k` with `κ̂₁(k)` below saturation.
pub fn growth_factors(kappa1: &[f64]) -> Vec<f64> {
    kappa1
        .windows(2)
        .take_while(|w| w[0].is_finite() && w[0] < tol::KAPPA_SATURATION)
        .map(|w| if w[1].is_infinite() { f64::INFINITY } else { w[1] / w[0] })
        .collect()
}

/// Exponent `p` of `y ∝ x^p` fitted on the positive pairs.
pub fn power_exponent(x: &[f64], y: &[f64]) -> Option<f64> {
    let (lx, ly): (Vec<f64>, Vec<f64>) =
        x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).unzip();
    slope(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn median_is_order_free_and_bracketed(mut v in prop::collection::vec(-1e6f64..1e6, 1..40), k in 0usize..40) {
            let m = median(&v).unwrap();
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo <= m && m <= hi);
            let n = v.len();
            v.rotate_left(k % n);
            prop_assert_eq!(median(&v), Some(m));
        }

        #[test]
        fn geometric_rate_is_recovered(rho in 0.01f64..0.95, start in 1e-3f64..1.0) {
            let s: Vec<f64> = (0..2000).map(|k| start * rho.powi(k)).take_while(|v| *v > 1e-300).collect();
            let got = contraction_rate(&s).unwrap();
            prop_assert!((got - rho).abs() <= 1e-9 * rho);
        }

        #[test]
        fn power_law_exponent_is_recovered(p in -3.0f64..3.0, c in 1e-3f64..1e3) {
            let x = [1e-4f64, 3e-4, 1e-3, 3e-3, 1e-2];
            let y: Vec<f64> = x.iter().map(|v| c * v.powf(p)).collect();
            prop_assert!((power_exponent(&x, &y).unwrap() - p).abs() <= 1e-9);
        }
    }

    #[test]
    fn median_odd_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(median(&[1.0, f64::INFINITY, f64::INFINITY]), Some(f64::INFINITY));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn geometric_series_rate() {
        let s: Vec<f64> = (0..40).map(|k| 0.5 * 0.3f64.powi(k)).collect();
        let r = contraction_rate(&s).unwrap();
        assert!((r - 0.3).abs() < 1e-12);
    }

    #[test]
    fn rate_needs_two_points_in_window() {
        assert_eq!(contraction_rate(&[1.0, 0.5, 1e-3, 1e-14]), None);
        assert_eq!(contraction_rate(&[1.0, 0.5]), None);
    }

    #[test]
    fn growth_stops_at_saturation() {
        let g = growth_factors(&[1.0, 3.0, 9.0, 1e11, 1e11]);
        assert_eq!(g, vec![3.0, 3.0, 1e11 / 9.0]);
        assert_eq!(growth_factors(&[2.0, f64::INFINITY, 1.0]), vec![f64::INFINITY]);
    }

    #[test]
    fn square_root_exponent() {
        let x = [1e-4, 1e-3, 1e-2];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.sqrt()).collect();
        assert!((power_exponent(&x, &y).unwrap() - 0.5).abs() < 1e-12);
    }
}
