//! Pointwise elimination of the normal flux scalar `ζ`.

/// The unique root `ζ` of `(a + ζ²)^{(p−2)/2} ζ + b = 0`, for `a ≥ 0` and `p ≥ 2`.
///
/// The left side is strictly increasing in `ζ`, so the root has the sign of `−b` and
/// its magnitude `s` solves `ψ(s) = (a + s²)^{(p−2)/2} s − |b| = 0` on
/// `[0, min(|b|^{1/(p−1)}, |b| / a^{(p−2)/2})]`. Newton steps that leave the current
/// bracket are replaced by bisection. Working on `|b|` makes the result exactly odd
/// in `b`.
pub fn solve_zeta(a: f64, b: f64, p: f64) -> f64 {
    debug_assert!(a >= 0.0 && p >= 2.0, "solve_zeta needs a >= 0, p >= 2");
    if b == 0.0 {
        return 0.0;
    }
    let q = 0.5 * (p - 2.0);
    if q == 0.0 {
        return -b;
    }
    let target = b.abs();
    let mut hi = target.powf(1.0 / (p - 1.0));
    if a > 0.0 {
        hi = hi.min(target / a.powf(q));
    }
    let mut lo = 0.0;
    let mut s = hi;
    for _ in 0..200 {
        let base = a + s * s;
        let value = base.powf(q) * s - target;
        if value == 0.0 {
            break;
        }
        if value > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let slope = base.powf(q - 1.0) * (a + (p - 1.0) * s * s);
        let mut next = s - value / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let done = (next - s).abs() <= 2.0 * f64::EPSILON * s || hi - lo <= 2.0 * f64::EPSILON * hi;
        s = next;
        if done {
            break;
        }
    }
    if b > 0.0 {
        -s
    } else {
        s
    }
}

/// `(a + ζ²)^{(p−2)/2} ζ + b`, the equation `solve_zeta` eliminates.
pub fn zeta_residual(a: f64, b: f64, p: f64, zeta: f64) -> f64 {
    (a + zeta * zeta).powf(0.5 * (p - 2.0)) * zeta + b
}
