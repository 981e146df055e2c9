//! Dense univariate polynomials in ascending-coefficient form, with real-root
//! isolation on bounded intervals.

use crate::scalar::Real;

/// Horner evaluation of `c[0] + c[1] x + c[2] x^2 + ...`.
#[inline]
pub fn eval<T: Real>(c: &[T], x: T) -> T {
    c.iter().rev().fold(T::zero(), |acc, &ci| acc * x + ci)
}

pub fn derivative<T: Real>(c: &[T]) -> Vec<T> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(j, &cj)| cj * T::count(j))
        .collect()
}

/// Antiderivative vanishing at `x = 0`.
pub fn antiderivative<T: Real>(c: &[T]) -> Vec<T> {
    std::iter::once(T::zero())
        .chain(c.iter().enumerate().map(|(j, &cj)| cj / T::count(j + 1)))
        .collect()
}

/// Coefficients of `p(x + h)` given those of `p(x)`.
pub fn taylor_shift<T: Real>(c: &[T], h: T) -> Vec<T> {
    let mut out = c.to_vec();
    let n = out.len();
    for i in 0..n {
        for j in (i..n.saturating_sub(1)).rev() {
            let add = out[j + 1] * h;
            out[j] = out[j] + add;
        }
    }
    out
}

pub fn trim<T: Real>(mut c: Vec<T>) -> Vec<T> {
    while c.len() > 1 && c.last().is_some_and(|v| v.is_zero()) {
        c.pop();
    }
    c
}

/// Bisection of a sign change of `g` on `[lo, hi]` down to adjacent floats.
pub fn bisect<T: Real>(g: impl Fn(T) -> T, mut lo: T, mut hi: T) -> T {
    let mut glo = g(lo);
    if glo.is_zero() {
        return lo;
    }
    if g(hi).is_zero() {
        return hi;
    }
    let two = T::lit(2.0);
    for _ in 0..2000 {
        let mid = lo + (hi - lo) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm.is_zero() {
            return mid;
        }
        if (gm < T::zero()) == (glo < T::zero()) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    if g(lo).abs() <= g(hi).abs() {
        lo
    } else {
        hi
    }
}

/// All real roots of the polynomial in `[lo, hi]`, sorted and deduplicated.
///
/// Recursive on the derivative: between consecutive critical points the
/// polynomial is monotone, so each sign change there holds exactly one root.
pub fn real_roots<T: Real>(c: &[T], lo: T, hi: T) -> Vec<T> {
    let c = trim(c.to_vec());
    if c.len() <= 1 || lo > hi {
        return Vec::new();
    }
    if c.len() == 2 {
        let x = -c[0] / c[1];
        return if x >= lo && x <= hi { vec![x] } else { Vec::new() };
    }
    let crit = real_roots(&derivative(&c), lo, hi);
    let mut knots = Vec::with_capacity(crit.len() + 2);
    knots.push(lo);
    knots.extend(crit.into_iter().filter(|&x| x > lo && x < hi));
    knots.push(hi);
    let mut roots: Vec<T> = Vec::new();
    let push = |x: T, roots: &mut Vec<T>| {
        if roots.last().is_none_or(|&last| x > last) {
            roots.push(x);
        }
    };
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ga, gb) = (eval(&c, a), eval(&c, b));
        if ga.is_zero() {
            push(a, &mut roots);
        }
        if (ga < T::zero() && gb > T::zero()) || (ga > T::zero() && gb < T::zero()) {
            push(bisect(|x| eval(&c, x), a, b), &mut roots);
        }
    }
    if eval(&c, hi).is_zero() {
        push(hi, &mut roots);
    }
    roots
}

/// Critical points in the open interval, sorted.
pub fn critical_points<T: Real>(c: &[T], lo: T, hi: T) -> Vec<T> {
    real_roots(&derivative(c), lo, hi)
        .into_iter()
        .filter(|&x| x > lo && x < hi)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_round_trip() {
        let c = [1.0f64, -2.0, 0.5, 3.0];
        let s = taylor_shift(&c, 0.75);
        for &x in &[-1.0, 0.0, 0.3, 2.0] {
            assert!((eval(&s, x) - eval(&c, x + 0.75)).abs() < 1e-12);
        }
    }

    #[test]
    fn cubic_roots() {
        // (x - 1)(x + 2)(x - 0.5)
        let c = [1.0f64, -2.5, 0.5, 1.0];
        let r = real_roots(&c, -5.0, 5.0);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([-2.0, 0.5, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn double_root_found_at_critical_point() {
        // (x - 1)^2
        let r = real_roots(&[1.0f64, -2.0, 1.0], -3.0, 3.0);
        assert_eq!(r, vec![1.0]);
    }
}
