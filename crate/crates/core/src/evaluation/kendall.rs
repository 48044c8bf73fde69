//! Kendall tau-b rank correlation with tie correction in both variables,
//! computed by merge-sort inversion counting in O(n log n).

use super::EvalError;

/// Kendall tau-b between two equal-length ordinal sequences:
/// (C - D) / sqrt((n0 - n1)(n0 - n2)) with n0 = n(n-1)/2 and n1, n2 the
/// tied-pair counts of each variable.
///
/// Errors when either variable is entirely tied (denominator zero).
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(EvalError::EmptyInput);
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(EvalError::NonFiniteScore);
    }

    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.partial_cmp(b).unwrap());

    // tie counts in x and joint ties, from runs of the (x, y)-sorted list
    let mut ties_x = 0u64;
    let mut ties_xy = 0u64;
    {
        let mut run_x = 1u64;
        let mut run_xy = 1u64;
        for i in 1..n {
            if pairs[i].0 == pairs[i - 1].0 {
                run_x += 1;
                if pairs[i].1 == pairs[i - 1].1 {
                    run_xy += 1;
                } else {
                    ties_xy += run_xy * (run_xy - 1) / 2;
                    run_xy = 1;
                }
            } else {
                ties_x += run_x * (run_x - 1) / 2;
                run_x = 1;
                ties_xy += run_xy * (run_xy - 1) / 2;
                run_xy = 1;
            }
        }
        ties_x += run_x * (run_x - 1) / 2;
        ties_xy += run_xy * (run_xy - 1) / 2;
    }

    // discordant pairs = inversions of the y sequence once sorted by (x, y)
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let discordant = count_inversions(&mut ys);

    // ys is now fully sorted; read off the y tie count
    let mut ties_y = 0u64;
    {
        let mut run = 1u64;
        for i in 1..n {
            if ys[i] == ys[i - 1] {
                run += 1;
            } else {
                ties_y += run * (run - 1) / 2;
                run = 1;
            }
        }
        ties_y += run * (run - 1) / 2;
    }

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let denom_x = (n0 - ties_x) as f64;
    let denom_y = (n0 - ties_y) as f64;
    if denom_x == 0.0 || denom_y == 0.0 {
        return Err(EvalError::AllTied);
    }

    // concordant - discordant = n0 - n1 - n2 + joint - 2*discordant
    let c_minus_d =
        n0 as f64 - ties_x as f64 - ties_y as f64 + ties_xy as f64 - 2.0 * discordant as f64;
    Ok((c_minus_d / (denom_x * denom_y).sqrt()).clamp(-1.0, 1.0))
}

/// Bottom-up merge sort counting inversions (strict left > right). Equal
/// elements merge stably and are never counted.
fn count_inversions(values: &mut [f64]) -> u64 {
    let n = values.len();
    let mut buf = vec![0.0; n];
    let mut swaps = 0u64;
    let mut width = 1;
    while width < n {
        let mut start = 0;
        while start < n {
            let mid = (start + width).min(n);
            let end = (start + 2 * width).min(n);
            if mid < end {
                swaps += merge(&values[start..mid], &values[mid..end], &mut buf[start..end]);
                values[start..end].copy_from_slice(&buf[start..end]);
            }
            start = end;
        }
        width *= 2;
    }
    swaps
}

fn merge(left: &[f64], right: &[f64], out: &mut [f64]) -> u64 {
    let mut i = 0;
    let mut j = 0;
    let mut k = 0;
    let mut swaps = 0u64;
    while i < left.len() && j < right.len() {
        if left[i] > right[j] {
            // every remaining left element is inverted with right[j]
            swaps += (left.len() - i) as u64;
            out[k] = right[j];
            j += 1;
        } else {
            out[k] = left[i];
            i += 1;
        }
        k += 1;
    }
    while i < left.len() {
        out[k] = left[i];
        i += 1;
        k += 1;
    }
    while j < right.len() {
        out[k] = right[j];
        j += 1;
        k += 1;
    }
    swaps
}
