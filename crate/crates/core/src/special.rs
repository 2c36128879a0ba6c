//! Cylinder functions of integer order and real positive argument.

use num_complex::Complex64;

/// Bessel function of the first kind, any integer order.
pub fn bessel_j(n: i32, x: f64) -> f64 {
    let v = puruspe::Jn(n.unsigned_abs(), x);
    if n < 0 && n % 2 != 0 {
        -v
    } else {
        v
    }
}

/// Bessel function of the second kind, any integer order. `x` must be positive.
pub fn bessel_y(n: i32, x: f64) -> f64 {
    let v = puruspe::Yn(n.unsigned_abs(), x);
    if n < 0 && n % 2 != 0 {
        -v
    } else {
        v
    }
}

/// Hankel function of the second kind, H_n^(2)(x) = J_n(x) − j·Y_n(x).
/// Outgoing for the e^{+jωt} time convention.
pub fn hankel2(n: i32, x: f64) -> Complex64 {
    Complex64::new(bessel_j(n, x), -bessel_y(n, x))
}

pub fn bessel_j_prime(n: i32, x: f64) -> f64 {
    0.5 * (bessel_j(n - 1, x) - bessel_j(n + 1, x))
}

pub fn hankel2_prime(n: i32, x: f64) -> Complex64 {
    0.5 * (hankel2(n - 1, x) - hankel2(n + 1, x))
}
