//! Adaptive Dormand–Prince 5(4) stepping for small fixed-size systems, with
//! cubic Hermite dense output on the accepted steps.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// difference between the 5th and embedded 4th order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const MAX_STEPS: usize = 1_000_000;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    /// Upper bound on |h|; `None` lets the controller decide.
    pub max_step: Option<f64>,
}

/// One accepted node: time, state and derivative.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Node<const D: usize> {
    pub t: f64,
    pub y: [f64; D],
    pub dy: [f64; D],
}

/// Integrate `dy/dt = f(t, y)` from `t0` to `t1` (either direction). Returns every
/// accepted node including both endpoints.
pub(crate) fn integrate<const D: usize, F>(
    mut f: F,
    t0: f64,
    y0: [f64; D],
    t1: f64,
    tol: Tolerance,
) -> Result<Vec<Node<D>>>
where
    F: FnMut(f64, &[f64; D]) -> Result<[f64; D]>,
{
    let dy0 = f(t0, &y0)?;
    let mut nodes = vec![Node { t: t0, y: y0, dy: dy0 }];
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(nodes);
    }
    let dir = span.signum();
    let max_step = tol.max_step.unwrap_or(span.abs()).min(span.abs());

    let mut t = t0;
    let mut y = y0;
    let mut k1 = dy0;
    let mut h = dir * initial_step(&y, &k1, tol, span.abs()).min(max_step);

    for _ in 0..MAX_STEPS {
        let remaining = t1 - t;
        if remaining * dir <= 0.0 {
            break;
        }
        let last = h.abs() >= remaining.abs();
        if last {
            h = remaining;
        }

        let mut k = [[0.0; D]; 7];
        k[0] = k1;
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..D {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            if s == 6 {
                // 7th stage is evaluated at the 5th-order solution (FSAL)
                k[6] = f(t + h, &ys)?;
                break;
            }
            k[s] = f(t + C[s] * h, &ys)?;
        }
        let mut y_new = y;
        for (j, kj) in k.iter().enumerate().take(6) {
            for i in 0..D {
                y_new[i] += h * A[6][j] * kj[i];
            }
        }

        let mut err = 0.0;
        for i in 0..D {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            let scale = tol.abs + tol.rel * y[i].abs().max(y_new[i].abs());
            err += (h * e / scale).powi(2);
        }
        let err = (err / D as f64).sqrt();
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t });
        }

        if err <= 1.0 {
            t = if last { t1 } else { t + h };
            y = y_new;
            k1 = k[6];
            nodes.push(Node { t, y, dy: k1 });
            if last {
                return Ok(nodes);
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = dir * (h.abs() * factor).min(max_step);
        } else {
            let factor = (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            h *= factor;
        }
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow { t, h });
        }
    }
    Err(Error::StepSizeUnderflow { t, h })
}

fn initial_step<const D: usize>(y: &[f64; D], dy: &[f64; D], tol: Tolerance, span: f64) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..D {
        let sc = tol.abs + tol.rel * y[i].abs();
        d0 += (y[i] / sc).powi(2);
        d1 += (dy[i] / sc).powi(2);
    }
    let (d0, d1) = ((d0 / D as f64).sqrt(), (d1 / D as f64).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(span).max(1e-12 * span)
}

/// Cubic Hermite interpolation between two accepted nodes.
pub(crate) fn hermite<const D: usize>(a: &Node<D>, b: &Node<D>, t: f64) -> [f64; D] {
    let h = b.t - a.t;
    if h == 0.0 {
        return a.y;
    }
    let s = (t - a.t) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    let mut out = [0.0; D];
    for i in 0..D {
        out[i] = h00 * a.y[i] + h10 * h * a.dy[i] + h01 * b.y[i] + h11 * h * b.dy[i];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol(rel: f64) -> Tolerance {
        Tolerance { rel, abs: rel * 1e-3, max_step: None }
    }

    #[test]
    fn exponential_decay_matches_closed_form() {
        let nodes = integrate(|_, y: &[f64; 1]| Ok([-y[0]]), 0.0, [1.0], 2.0, tol(1e-12)).unwrap();
        let last = nodes.last().unwrap();
        assert_eq!(last.t, 2.0);
        assert!((last.y[0] - (-2.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn backward_integration_of_oscillator() {
        let nodes = integrate(
            |_, y: &[f64; 2]| Ok([y[1], -y[0]]),
            1.0,
            [1.0f64.cos(), -1.0f64.sin()],
            -0.5,
            tol(1e-12),
        )
        .unwrap();
        let last = nodes.last().unwrap();
        assert!((last.y[0] - 0.5f64.cos()).abs() < 1e-10);
        assert!((last.y[1] - 0.5f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let p = |t: f64| 1.0 + t - 2.0 * t * t + 0.5 * t * t * t;
        let dp = |t: f64| 1.0 - 4.0 * t + 1.5 * t * t;
        let a = Node { t: 0.3, y: [p(0.3)], dy: [dp(0.3)] };
        let b = Node { t: 1.1, y: [p(1.1)], dy: [dp(1.1)] };
        for t in [0.3, 0.5, 0.77, 1.1] {
            assert!((hermite(&a, &b, t)[0] - p(t)).abs() < 1e-13);
        }
    }

    #[test]
    fn rhs_failure_propagates() {
        let r = integrate(
            |t, _: &[f64; 1]| if t > 0.5 { Err(Error::NonFinite { t }) } else { Ok([1.0]) },
            0.0,
            [0.0],
            1.0,
            tol(1e-8),
        );
        assert!(r.is_err());
    }
}
