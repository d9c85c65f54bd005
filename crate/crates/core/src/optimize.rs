//! One-dimensional minimization of unimodal functions.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

/// Golden-section search on the open interval `(lo, hi)`.
///
/// The end points are never evaluated, so `f` may diverge there. Stops once
/// the bracket is narrower than `tol`; exceeding `max_iter` is an error.
pub fn golden_section(
    f: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Minimum> {
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::invalid(
            "interval",
            format!("need lo < hi and tol > 0, got ({lo}, {hi}) tol {tol}"),
        ));
    }
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iterations = 0;
    while hi - lo > tol {
        if iterations == max_iter {
            return Err(Error::NonConvergence {
                iterations,
                width: hi - lo,
            });
        }
        iterations += 1;
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let (x, value) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    Ok(Minimum {
        x,
        value,
        iterations,
    })
}

/// Coarse scan over `steps` interior points followed by golden-section on the
/// cell around the best sample. For functions that are unimodal only up to
/// the scan resolution.
pub fn scan_then_golden(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    steps: usize,
    tol: f64,
    max_iter: usize,
) -> Result<Minimum> {
    let steps = steps.max(2);
    let h = (hi - lo) / (steps + 1) as f64;
    let best = (1..=steps)
        .map(|k| lo + h * k as f64)
        .map(|x| (x, f(x)))
        .fold((f64::NAN, f64::INFINITY), |acc, p| if p.1 < acc.1 { p } else { acc });
    if best.0.is_nan() {
        return Err(Error::NonConvergence {
            iterations: steps,
            width: hi - lo,
        });
    }
    let refined = golden_section(&f, best.0 - h, best.0 + h, tol, max_iter)?;
    Ok(if refined.value <= best.1 {
        refined
    } else {
        Minimum {
            x: best.0,
            value: best.1,
            iterations: refined.iterations,
        }
    })
}
