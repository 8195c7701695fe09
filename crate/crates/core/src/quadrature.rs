//! Gauss–Legendre rules on the unit interval.

/// Two-point rule on [0, 1] as (node, weight) pairs.
pub const GAUSS2: [(f64, f64); 2] = [
    (0.211_324_865_405_187_1, 0.5),
    (0.788_675_134_594_812_9, 0.5),
];

/// Four-point rule on [0, 1] as (node, weight) pairs.
pub const GAUSS4: [(f64, f64); 4] = [
    (0.069_431_844_202_973_71, 0.173_927_422_568_726_93),
    (0.330_009_478_207_571_87, 0.326_072_577_431_273_07),
    (0.669_990_521_792_428_1, 0.326_072_577_431_273_07),
    (0.930_568_155_797_026_3, 0.173_927_422_568_726_93),
];

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(rule: &[(f64, f64)], k: i32) -> f64 {
        rule.iter().map(|&(x, w)| w * x.powi(k)).sum()
    }

    #[test]
    fn exact_on_monomials_up_to_degree() {
        for k in 0..=3 {
            assert!((integrate(&GAUSS2, k) - 1.0 / (k + 1) as f64).abs() < 1e-15);
        }
        for k in 0..=7 {
            assert!((integrate(&GAUSS4, k) - 1.0 / (k + 1) as f64).abs() < 1e-15);
        }
        assert!((integrate(&GAUSS2, 4) - 0.2).abs() > 1e-4);
    }
}
