//! Small numeric helpers: stable log-sum-exp accumulation and least-squares
//! line fits. Everything here is deterministic: summation order is fixed
//! regardless of thread count.

/// Pairwise (cascade) summation. Deterministic and accurate to
/// `O(log n)·ulp` instead of the `O(n)·ulp` of a naive left fold.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// `log Σ_i exp(xs[i])` computed without overflow. Returns `-∞` for an empty
/// slice or when every entry is `-∞`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        // All -inf (empty sum) or a +inf entry; both propagate correctly.
        return m;
    }
    let mut buf = Vec::with_capacity(xs.len());
    buf.extend(xs.iter().map(|&x| (x - m).exp()));
    m + pairwise_sum(&buf).ln()
}

/// `log Σ_i exp(scale·xs[i])` without materializing the scaled slice.
/// Identical accumulation order to [`log_sum_exp`].
pub fn log_sum_exp_scaled(xs: &[f64], scale: f64) -> f64 {
    let m = xs
        .iter()
        .map(|&x| scale * x)
        .fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let mut buf = Vec::with_capacity(xs.len());
    buf.extend(xs.iter().map(|&x| (scale * x - m).exp()));
    m + pairwise_sum(&buf).ln()
}

/// Weighted mean of `values` under unnormalized log-weights `log_w`
/// (`Σ v_i·e^{lw_i} / Σ e^{lw_i}`), shift-stabilized.
pub fn weighted_mean_log(log_w: &[f64], values: &[f64]) -> f64 {
    assert_eq!(log_w.len(), values.len());
    let m = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ws: Vec<f64> = log_w.iter().map(|&lw| (lw - m).exp()).collect();
    let num: Vec<f64> = ws.iter().zip(values).map(|(&w, &v)| w * v).collect();
    pairwise_sum(&num) / pairwise_sum(&ws)
}

/// Result of an ordinary least-squares line fit `y ≈ slope·x + intercept`.
#[derive(Clone, Copy, Debug)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute deviation of a sample from the fitted line.
    pub max_abs_residual: f64,
}

/// Least-squares line through `(xs[i], ys[i])`. Returns `None` with fewer
/// than two points or when all abscissae coincide.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_abs_residual = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (y - slope * x - intercept).abs())
        .fold(0.0, f64::max);
    Some(LineFit {
        slope,
        intercept,
        max_abs_residual,
    })
}
