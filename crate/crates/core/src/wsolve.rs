//! Solution of the inhomogeneous w-system
//!
//! ```text
//! d/dt (w1, w2, w3) = 2 [[-2b12, 0, -2b11], [0, 2b12, 2b22], [b22, -b11, 0]] (w1, w2, w3)
//!                     + e^{w4} (k1, k2, Re k3)
//! dw4/dt            = −4ħ Im k3
//! ```
//!
//! with all four starting at zero. `w4` is carried as a fourth state variable so
//! the `e^{w4}` forcing stays consistent inside each step.

use crate::error::{Error, Result};
use crate::model::{check_physicality, PhysicalityReport, QdeCoefficients};
use crate::ode::{self, Node, Tolerance};

pub const DEFAULT_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WPoint {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
}

impl WPoint {
    fn from_array(y: [f64; 4]) -> Self {
        Self { w1: y[0], w2: y[1], w3: y[2], w4: y[3] }
    }
}

/// Accepted integrator nodes from `t_min` to `t_end`, with cubic Hermite
/// evaluation in between.
#[derive(Debug, Clone)]
pub struct WTrajectory {
    nodes: Vec<Node<4>>,
    rel_tol: f64,
    hbar: f64,
}

impl WTrajectory {
    pub fn t_min(&self) -> f64 {
        self.nodes[0].t
    }

    pub fn t_end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1].t
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    /// Polynomial degree of the dense output.
    pub fn interpolation_order(&self) -> usize {
        3
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, WPoint)> + '_ {
        self.nodes.iter().map(|n| (n.t, WPoint::from_array(n.y)))
    }

    pub fn at(&self, t: f64) -> Result<WPoint> {
        let (lo, hi) = (self.t_min(), self.t_end());
        if !(lo..=hi).contains(&t) {
            return Err(Error::OutOfRange { t, lo, hi });
        }
        let j = self.nodes.partition_point(|n| n.t <= t).clamp(1, self.nodes.len() - 1);
        Ok(WPoint::from_array(ode::hermite(&self.nodes[j - 1], &self.nodes[j], t)))
    }

    pub fn physicality(&self) -> PhysicalityReport {
        check_physicality(self, self.hbar)
    }
}

fn rhs(coeffs: &QdeCoefficients, t: f64, y: &[f64; 4]) -> Result<[f64; 4]> {
    let c = coeffs.sample(t)?;
    let [w1, w2, w3, w4] = *y;
    let e = w4.exp();
    Ok([
        2.0 * (-2.0 * c.b12 * w1 - 2.0 * c.b11 * w3) + e * c.k1,
        2.0 * (2.0 * c.b12 * w2 + 2.0 * c.b22 * w3) + e * c.k2,
        2.0 * (c.b22 * w1 - c.b11 * w2) + e * c.k3.re,
        -4.0 * coeffs.hbar() * c.k3.im,
    ])
}

/// Integrate the w-system from 0 to `t_end`. Physicality violations are not
/// errors; inspect [`WTrajectory::physicality`].
pub fn solve_w(coeffs: &QdeCoefficients, t_end: f64, rel_tol: f64) -> Result<WTrajectory> {
    if !(1e-12..=1e-4).contains(&rel_tol) {
        return Err(Error::InvalidParameter {
            name: "rel_tol",
            value: rel_tol,
            reason: "must lie in [1e-12, 1e-4]",
        });
    }
    let t_min = coeffs.t_min();
    if !(t_end >= t_min) || !t_end.is_finite() {
        return Err(Error::InvalidParameter { name: "t_end", value: t_end, reason: "must be at least t_min" });
    }
    let tol = Tolerance { rel: rel_tol, abs: rel_tol * 1e-3, max_step: Some(t_end / 512.0) };
    let f = |t: f64, y: &[f64; 4]| rhs(coeffs, t, y);
    let nodes = ode::integrate(f, 0.0, [0.0; 4], t_end, tol)?;

    // re-anchor the dense output at t_min
    let j = nodes.partition_point(|n| n.t <= t_min).clamp(1, nodes.len() - 1);
    let y = ode::hermite(&nodes[j - 1], &nodes[j], t_min);
    let start = Node { t: t_min, y, dy: rhs(coeffs, t_min, &y)? };
    let mut kept = vec![start];
    kept.extend(nodes.into_iter().filter(|n| n.t > t_min));
    Ok(WTrajectory { nodes: kept, rel_tol, hbar: coeffs.hbar() })
}

/// The w-point at a single time, integrating exactly to `t` (no interpolation).
pub fn w_at(coeffs: &QdeCoefficients, t: f64) -> Result<WPoint> {
    let traj = solve_w(coeffs, t, DEFAULT_REL_TOL)?;
    Ok(WPoint::from_array(traj.nodes[traj.nodes.len() - 1].y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_reference_model, Coefficients};
    use num_complex::Complex64 as C64;

    #[test]
    fn zero_noise_gives_zero_w() {
        let m = QdeCoefficients::custom(
            |_| Coefficients { b11: 0.5, b12: 0.1, b22: 0.5, ..Coefficients::zero() },
            1.0,
            1e-3,
        )
        .unwrap();
        let traj = solve_w(&m, 2.0, 1e-10).unwrap();
        for (_, w) in traj.samples() {
            assert_eq!(w, WPoint { w1: 0.0, w2: 0.0, w3: 0.0, w4: 0.0 });
        }
        assert!(!traj.physicality().all_ok());
    }

    #[test]
    fn trajectory_starts_at_t_min_and_is_increasing() {
        let m = make_reference_model(1.0, 1.0, 2.0).unwrap();
        let traj = solve_w(&m, 2.0, 1e-10).unwrap();
        assert_eq!(traj.t_min(), 1e-3);
        assert_eq!(traj.t_end(), 2.0);
        let ts: Vec<f64> = traj.samples().map(|(t, _)| t).collect();
        assert!(ts.windows(2).all(|w| w[1] > w[0]));
        let w4: Vec<f64> = traj.samples().map(|(_, w)| w.w4).collect();
        assert!(w4.windows(2).all(|w| w[1] >= w[0]));
        assert!(traj.at(0.0).is_err());
        assert!(traj.at(2.1).is_err());
    }

    #[test]
    fn rejects_tolerance_outside_range() {
        let m = make_reference_model(1.0, 1.0, 2.0).unwrap();
        assert!(solve_w(&m, 1.0, 1e-3).is_err());
        assert!(solve_w(&m, 1.0, 1e-13).is_err());
    }

    #[test]
    fn undefined_coefficients_surface() {
        let row = Coefficients { k1: 0.1, k2: 0.1, k3: C64::new(0.0, -0.1), ..Coefficients::zero() };
        let table = crate::model::CoefficientTable::new(vec![0.0, 1.0], vec![row, row]).unwrap();
        let m = QdeCoefficients::from_table(table, 1.0).unwrap();
        assert!(matches!(solve_w(&m, 2.0, 1e-8), Err(Error::CoefficientUndefined { .. })));
        assert!(solve_w(&m, 1.0, 1e-8).is_ok());
    }
}
