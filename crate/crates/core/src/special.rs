//! Small numerical helpers shared across modules.

use num_complex::Complex64 as C64;

/// `ln(k!)` for `k = 0..=max`, accumulated as a running sum of logarithms.
pub fn ln_factorials(max: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(max + 1);
    let mut acc = 0.0;
    table.push(0.0);
    for k in 1..=max {
        acc += (k as f64).ln();
        table.push(acc);
    }
    table
}

pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `e^z - 1` without cancellation for small `|z|`.
pub fn expm1(z: C64) -> C64 {
    let half_sin = (0.5 * z.im).sin();
    let re = z.re.exp_m1() * z.im.cos() - 2.0 * half_sin * half_sin;
    let im = z.re.exp() * z.im.sin();
    C64::new(re, im)
}

/// Associated Laguerre polynomial `L_n^{(alpha)}(x)` by forward recurrence in degree:
/// `(k+1) L_{k+1} = (2k + 1 + alpha - x) L_k - (k + alpha) L_{k-1}`.
pub fn laguerre(n: usize, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Product `x (x-1) ... (x-k+1)`, the falling factorial.
pub fn falling(x: usize, k: usize) -> f64 {
    (0..k).map(|j| (x - j) as f64).product()
}
