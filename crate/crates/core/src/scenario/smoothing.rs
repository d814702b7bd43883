use crate::error::{Error, Result};

/// Centred moving average used for plotted signals.
///
/// For an odd `window` the kernel spans `window / 2` samples on each side;
/// for an even one it spans `window / 2` samples back and `window / 2 - 1`
/// ahead. The kernel is truncated at both ends of the series.
pub fn moving_average(series: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::Input("moving average window must be >= 1".into()));
    }
    let back = window / 2;
    let ahead = window - 1 - back;
    let mut prefix = Vec::with_capacity(series.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &x in series {
        acc += x;
        prefix.push(acc);
    }
    let n = series.len();
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(back);
            let hi = (i + ahead).min(n - 1);
            if lo == hi {
                series[i]
            } else {
                (prefix[hi + 1] - prefix[lo]) / (hi + 1 - lo) as f64
            }
        })
        .collect())
}
