//! Order-fixed summation.
//!
//! Every reduction over cells goes through [`pairwise_sum`], which splits the
//! canonical cell ordering into a fixed binary tree. The result therefore does
//! not depend on how the work producing the summands was scheduled.

const LEAF: usize = 32;

pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `f(i)` for `i in 0..len` without materializing more than
/// one leaf at a time.
pub fn pairwise_sum_by<F: Fn(usize) -> f64>(len: usize, f: &F) -> f64 {
    fn rec<F: Fn(usize) -> f64>(start: usize, end: usize, f: &F) -> f64 {
        if end - start <= LEAF {
            return (start..end).map(f).sum();
        }
        let mid = start + (end - start) / 2;
        rec(start, mid, f) + rec(mid, end, f)
    }
    rec(0, len, f)
}

pub fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_sum_on_integers() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499500.0);
        assert_eq!(pairwise_sum_by(v.len(), &|i| v[i]), 499500.0);
    }

    #[test]
    fn empty_is_zero() {
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(max_abs(&[]), 0.0);
    }
}
