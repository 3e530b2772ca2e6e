//! Periodic cubic B-spline basis with equally spaced knots.

/// Cardinal cubic B-spline supported on `[0, 4)`.
fn cardinal_cubic(u: f64) -> f64 {
    if !(0.0..4.0).contains(&u) {
        return 0.0;
    }
    if u < 1.0 {
        u * u * u / 6.0
    } else if u < 2.0 {
        let v = u - 1.0;
        (1.0 + 3.0 * v + 3.0 * v * v - 3.0 * v * v * v) / 6.0
    } else if u < 3.0 {
        let v = 3.0 - u;
        (1.0 + 3.0 * v + 3.0 * v * v - 3.0 * v * v * v) / 6.0
    } else {
        let v = 4.0 - u;
        v * v * v / 6.0
    }
}

/// Values of the `nbasis` periodic cubic B-splines at time `t` for the given
/// period. Basis `i` peaks at `(i + 2) * period / nbasis` (mod period).
pub fn periodic_bspline_basis(t: f64, nbasis: usize, period: f64) -> Vec<f64> {
    assert!(nbasis >= 4, "a periodic cubic basis needs at least 4 functions");
    let width = period / nbasis as f64;
    let x = (t / width).rem_euclid(nbasis as f64);
    (0..nbasis)
        .map(|i| {
            let u = (x - i as f64).rem_euclid(nbasis as f64);
            cardinal_cubic(u)
        })
        .collect()
}
