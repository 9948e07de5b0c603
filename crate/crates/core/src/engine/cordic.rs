//! Fixed-point hyperbolic CORDIC and the functions built on it.
//!
//! `exp(x)` is range-reduced to `2^q * exp(r)` with `|r| <= ln2 / 2`, and
//! `exp(r) = cosh(r) + sinh(r)` comes from rotation-mode hyperbolic CORDIC.
//! Iterations 4, 13, 40, ... are repeated, as hyperbolic CORDIC requires for
//! convergence.

use std::sync::OnceLock;

use crate::wide::pow2;

pub const DEFAULT_ITERATIONS: u32 = 16;

/// Beyond this magnitude the sigmoid is returned as exactly 0 or 1
/// (the true value is within 1.2e-7 of it).
pub const SIGMOID_SATURATION: f64 = 16.0;

const FRAC: u32 = 48;
const ONE: f64 = (1u64 << FRAC) as f64;

struct Table {
    /// `(shift, atanh(2^-shift))` per micro-rotation, fixed-point.
    steps: Vec<(u32, i64)>,
    /// `1 / gain`, fixed-point.
    x0: i64,
}

fn build_table(iterations: u32) -> Table {
    let mut steps = Vec::new();
    let mut gain = 1.0f64;
    let mut repeat = 4u32;
    for i in 1..=iterations {
        let times = if i == repeat {
            repeat = 3 * repeat + 1;
            2
        } else {
            1
        };
        for _ in 0..times {
            let t = pow2(-(i as i32));
            steps.push((i, (t.atanh() * ONE).round() as i64));
            gain *= (1.0 - t * t).sqrt();
        }
    }
    Table { steps, x0: (ONE / gain).round() as i64 }
}

fn with_table<R>(iterations: u32, f: impl FnOnce(&Table) -> R) -> R {
    static DEFAULT: OnceLock<Table> = OnceLock::new();
    if iterations == DEFAULT_ITERATIONS {
        f(DEFAULT.get_or_init(|| build_table(DEFAULT_ITERATIONS)))
    } else {
        f(&build_table(iterations))
    }
}

/// `(cosh r, sinh r)` for `|r| <= 1.1`.
pub fn cordic_cosh_sinh(r: f64, iterations: u32) -> (f64, f64) {
    assert!(iterations >= 1, "CORDIC needs at least one iteration");
    debug_assert!(r.abs() <= 1.1, "argument {r} outside the CORDIC convergence range");
    with_table(iterations, |t| {
        let (mut x, mut y) = (t.x0, 0i64);
        let mut z = (r * ONE).round() as i64;
        for &(i, a) in &t.steps {
            let (dx, dy) = (y >> i, x >> i);
            if z >= 0 {
                x += dx;
                y += dy;
                z -= a;
            } else {
                x -= dx;
                y -= dy;
                z += a;
            }
        }
        (x as f64 / ONE, y as f64 / ONE)
    })
}

pub fn cordic_exp(x: f64, iterations: u32) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x > 710.0 {
        return f64::INFINITY;
    }
    if x < -746.0 {
        return 0.0;
    }
    let q = (x / std::f64::consts::LN_2).round();
    let r = x - q * std::f64::consts::LN_2;
    let (c, s) = cordic_cosh_sinh(r, iterations);
    (c + s) * pow2(q as i32)
}

/// `tanh`, odd by construction (`tanh(0) == 0` exactly) and saturating to
/// +-1 beyond half the sigmoid saturation bound.
pub fn cordic_tanh(x: f64, iterations: u32) -> f64 {
    if x == 0.0 || x.is_nan() {
        return x;
    }
    let t = x.abs();
    let mag = if t >= SIGMOID_SATURATION / 2.0 {
        1.0
    } else {
        let e = cordic_exp(-2.0 * t, iterations);
        (1.0 - e) / (1.0 + e)
    };
    mag.copysign(x)
}

/// Logistic sigmoid `0.5 * (1 + tanh(x / 2))`, saturating to 0 / 1 beyond
/// [`SIGMOID_SATURATION`].
pub fn cordic_sigmoid(x: f64, iterations: u32) -> f64 {
    if x >= SIGMOID_SATURATION {
        1.0
    } else if x <= -SIGMOID_SATURATION {
        0.0
    } else {
        0.5 * (1.0 + cordic_tanh(x / 2.0, iterations))
    }
}
