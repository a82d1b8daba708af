//! Independent reference computations shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite 20-point Gauss–Legendre over `pieces` equal panels.
pub fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64, pieces: usize) -> f64 {
    let rule = gauss_legendre(20);
    let h = (b - a) / pieces as f64;
    let mut s = 0.0;
    for p in 0..pieces {
        let lo = a + p as f64 * h;
        let mut part = 0.0;
        for &(x, w) in &rule {
            part += w * f(lo + 0.5 * h * (x + 1.0));
        }
        s += 0.5 * h * part;
    }
    s
}

/// Panels sized so that each holds at most a quarter period of `max_freq`.
pub fn quad_osc(f: impl Fn(f64) -> f64, a: f64, b: f64, max_freq: f64) -> f64 {
    let pieces = ((b - a) * max_freq / (0.5 * PI)).ceil() as usize + 8;
    quad(f, a, b, pieces)
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}
