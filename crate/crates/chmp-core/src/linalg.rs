//! Small dense vector kernels shared by the solvers.

use crate::scalar::Scalar;

pub(crate) fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub(crate) fn norm2<S: Scalar>(a: &[S]) -> S {
    dot(a, a)
}

pub(crate) fn norm<S: Scalar>(a: &[S]) -> S {
    norm2(a).sqrt()
}

pub(crate) fn dist2<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

pub(crate) fn dist<S: Scalar>(a: &[S], b: &[S]) -> S {
    dist2(a, b).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernels_match_hand_values() {
        let a = [1.0, 2.0, 3.0];
        let b = [4.0, -5.0, 6.0];
        assert_eq!(dot(&a, &b), 12.0);
        assert_eq!(norm2(&b), 77.0);
        assert_eq!(dist2(&a, &b), 67.0);
        assert_eq!(norm(&[3.0, 4.0]), 5.0);
        assert_eq!(dist(&[0.0, 0.0], &[3.0, 4.0]), 5.0);
    }
}
