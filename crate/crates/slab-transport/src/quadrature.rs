//! Quadrature rules: composite Gauss-Legendre panels for line integrals,
//! midpoint angular grids on the unit sphere with hemisphere splits, and an
//! adaptive Simpson rule used as an independent cross-check.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Direction;

/// 8-point Gauss-Legendre abscissas on [-1, 1] (positive half; rule is symmetric).
const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_805,
    0.525_532_409_916_328_986,
    0.796_666_477_413_626_740,
    0.960_289_856_497_536_232,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_361_983,
    0.313_706_645_877_887_287,
    0.222_381_034_453_374_471,
    0.101_228_536_290_376_259,
];

/// All 8 (node, weight) pairs on [-1, 1], in increasing node order.
pub fn gauss_legendre_8() -> [(f64, f64); 8] {
    let mut rule = [(0.0, 0.0); 8];
    for i in 0..4 {
        rule[i] = (-GL8_NODES[3 - i], GL8_WEIGHTS[3 - i]);
        rule[4 + i] = (GL8_NODES[i], GL8_WEIGHTS[i]);
    }
    rule
}

/// Integrate `f` over `[a, b]` with a single 8-point Gauss-Legendre rule.
pub fn gl8_panel<F: FnMut(f64) -> f64>(a: f64, b: f64, mut f: F) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for &(t, w) in gauss_legendre_8().iter() {
        acc += w * f(mid + half * t);
    }
    acc * half
}

/// Integrate `f` over `[a, b]` with `panels` equal Gauss-Legendre panels.
pub fn gl8_composite<F: FnMut(f64) -> f64>(a: f64, b: f64, panels: usize, mut f: F) -> f64 {
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let mut acc = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * width;
        acc += gl8_panel(lo, lo + width, &mut f);
    }
    acc
}

/// Integrate over `[a, b]` splitting panels at the given breakpoints.
///
/// Breakpoints outside `(a, b)` are ignored. Each smooth piece gets its own
/// composite rule sized by `panels_per_unit`, so integrands with known kinks
/// or steps keep spectral accuracy piecewise.
pub fn gl8_with_breakpoints<F: FnMut(f64) -> f64>(
    a: f64,
    b: f64,
    panels_per_unit: f64,
    breakpoints: &[f64],
    mut f: F,
) -> f64 {
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&s| s > a && s < b)
        .collect();
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    cuts.dedup();
    let mut acc = 0.0;
    let mut lo = a;
    for hi in cuts.into_iter().chain(std::iter::once(b)) {
        let len = hi - lo;
        if len > 0.0 {
            let panels = (len * panels_per_unit).ceil().max(1.0) as usize;
            acc += gl8_composite(lo, hi, panels, &mut f);
        }
        lo = hi;
    }
    acc
}

/// Adaptive Simpson quadrature. Kept deliberately separate from the
/// Gauss-Legendre path so it can serve as an independent reference.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("angular node count must be at least {min}, got {got}")]
    TooFewAngularNodes { min: usize, got: usize },
    #[error("tail_epsilon must lie in (0, 1e-3], got {0}")]
    TailEpsilonOutOfRange(f64),
    #[error("ray_panels_per_unit must be positive, got {0}")]
    NonpositivePanelDensity(f64),
    #[error("dimension {0} is not supported (need 2 or 3)")]
    UnsupportedDimension(usize),
}

/// Controls every integral approximation: angular node counts per hemisphere,
/// Gauss-Legendre panel density along rays, and the exponential truncation
/// threshold for rays that never leave the slab.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Midpoint nodes per hemisphere: theta count for d=2, polar slices for d=3.
    pub angular_nodes: usize,
    /// Azimuthal node count for d=3 product rules (ignored for d=2).
    pub azimuth_nodes: usize,
    /// Gauss-Legendre panels per unit ray length.
    pub ray_panels_per_unit: f64,
    /// Survival threshold below which infinite rays are truncated.
    pub tail_epsilon: f64,
    /// Tolerance for the phase-function normalization check.
    pub phase_tolerance: f64,
    /// Sample budget for medium validation.
    pub validation_samples: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            angular_nodes: 64,
            azimuth_nodes: 64,
            ray_panels_per_unit: 4.0,
            tail_epsilon: 1e-6,
            phase_tolerance: 1e-6,
            validation_samples: 10_000,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<(), QuadratureError> {
        if self.angular_nodes < 2 {
            return Err(QuadratureError::TooFewAngularNodes {
                min: 2,
                got: self.angular_nodes,
            });
        }
        if !(self.tail_epsilon > 0.0 && self.tail_epsilon <= 1e-3) {
            return Err(QuadratureError::TailEpsilonOutOfRange(self.tail_epsilon));
        }
        if !(self.ray_panels_per_unit > 0.0) {
            return Err(QuadratureError::NonpositivePanelDensity(
                self.ray_panels_per_unit,
            ));
        }
        Ok(())
    }

    pub fn with_angular_nodes(mut self, n: usize) -> Self {
        self.angular_nodes = n;
        self.azimuth_nodes = n;
        self
    }

    pub fn with_tail_epsilon(mut self, eps: f64) -> Self {
        self.tail_epsilon = eps;
        self
    }

    /// Panel count for a segment of the given length.
    pub fn panels_for(&self, length: f64) -> usize {
        (length * self.ray_panels_per_unit).ceil().max(1.0) as usize
    }

    /// Truncation length for rays with unbounded exit time: beyond this the
    /// survival factor is below `tail_epsilon` whenever `mu_t >= mu_t_lower`.
    pub fn truncation_length(&self, mu_t_lower: f64) -> f64 {
        assert!(mu_t_lower > 0.0, "truncation needs a positive mu_t infimum");
        -self.tail_epsilon.ln() / mu_t_lower
    }
}

/// Quadrature nodes on the unit sphere, split by sign of the depth component.
///
/// d=2 uses midpoints in theta on (0, pi) and (pi, 2pi); d=3 uses a product
/// midpoint rule in (depth component, azimuth) per hemisphere. By
/// construction no node has a zero depth component.
#[derive(Debug, Clone)]
pub struct AngularGrid<const D: usize> {
    nodes: Vec<Direction<D>>,
    weights: Vec<f64>,
    /// d=2: theta per node (kept for interpolation); empty for d=3.
    thetas: Vec<f64>,
    nodes_per_hemisphere: usize,
    azimuth_nodes: usize,
}

impl<const D: usize> AngularGrid<D> {
    pub fn build(spec: &QuadratureSpec) -> Result<Self, QuadratureError> {
        spec.validate()?;
        let n = spec.angular_nodes;
        match D {
            2 => {
                let step = std::f64::consts::PI / n as f64;
                let mut nodes = Vec::with_capacity(2 * n);
                let mut thetas = Vec::with_capacity(2 * n);
                for i in 0..2 * n {
                    let theta = (i as f64 + 0.5) * step;
                    thetas.push(theta);
                    let mut c = [0.0; D];
                    c[0] = theta.cos();
                    c[1] = theta.sin();
                    nodes.push(Direction::new(c).expect("unit by construction"));
                }
                let weights = vec![step; 2 * n];
                Ok(Self {
                    nodes,
                    weights,
                    thetas,
                    nodes_per_hemisphere: n,
                    azimuth_nodes: 0,
                })
            }
            3 => {
                let n_az = spec.azimuth_nodes.max(2);
                let mut nodes = Vec::with_capacity(2 * n * n_az);
                let w = (1.0 / n as f64) * (2.0 * std::f64::consts::PI / n_az as f64);
                for hemi in [1.0f64, -1.0] {
                    for i in 0..n {
                        let u = hemi * (i as f64 + 0.5) / n as f64;
                        let r = (1.0 - u * u).sqrt();
                        for j in 0..n_az {
                            let phi = (j as f64 + 0.5) * 2.0 * std::f64::consts::PI
                                / n_az as f64;
                            let mut c = [0.0; D];
                            c[0] = r * phi.cos();
                            c[1] = r * phi.sin();
                            c[2] = u;
                            nodes.push(Direction::new(c).expect("unit by construction"));
                        }
                    }
                }
                let weights = vec![w; nodes.len()];
                Ok(Self {
                    nodes,
                    weights,
                    thetas: Vec::new(),
                    nodes_per_hemisphere: n * n_az,
                    azimuth_nodes: n_az,
                })
            }
            d => Err(QuadratureError::UnsupportedDimension(d)),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, i: usize) -> &Direction<D> {
        &self.nodes[i]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn nodes(&self) -> &[Direction<D>] {
        &self.nodes
    }

    /// d=2 only: polar angle of node `i`.
    pub fn theta(&self, i: usize) -> f64 {
        self.thetas[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Direction<D>, f64)> {
        self.nodes.iter().zip(self.weights.iter().copied())
    }

    /// Indices whose depth component is positive (`upper = true`) or negative.
    pub fn hemisphere_indices(&self, upper: bool) -> impl Iterator<Item = usize> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(move |(_, d)| (d.depth_component() > 0.0) == upper)
            .map(|(i, _)| i)
    }

    /// Interpolation stencil (indices and convex weights) for an off-node
    /// direction. d=2: periodic linear interpolation in theta. d=3: bilinear
    /// in (depth component, azimuth) within the direction's hemisphere.
    pub fn interp_stencil(&self, xi: &Direction<D>) -> Vec<(usize, f64)> {
        match D {
            2 => {
                let n_total = self.nodes.len();
                let step = 2.0 * std::f64::consts::PI / n_total as f64;
                let theta = xi.polar_angle();
                let t = theta / step - 0.5;
                let i0 = t.floor();
                let frac = t - i0;
                let a = ((i0 as i64).rem_euclid(n_total as i64)) as usize;
                let b = (a + 1) % n_total;
                vec![(a, 1.0 - frac), (b, frac)]
            }
            3 => {
                let n_u = self.nodes_per_hemisphere / self.azimuth_nodes;
                let n_az = self.azimuth_nodes;
                let u = xi.depth_component();
                let upper = u > 0.0;
                let base = if upper { 0 } else { self.nodes_per_hemisphere };
                // Polar index within the hemisphere: nodes at (i+0.5)/n_u.
                let tu = (u.abs() * n_u as f64 - 0.5).clamp(0.0, (n_u - 1) as f64);
                let iu0 = tu.floor() as usize;
                let iu1 = (iu0 + 1).min(n_u - 1);
                let fu = if iu1 == iu0 { 0.0 } else { tu - iu0 as f64 };
                // Azimuth index, periodic.
                let phi = xi.components()[1].atan2(xi.components()[0]);
                let phi = if phi < 0.0 {
                    phi + 2.0 * std::f64::consts::PI
                } else {
                    phi
                };
                let step = 2.0 * std::f64::consts::PI / n_az as f64;
                let tp = phi / step - 0.5;
                let ip0f = tp.floor();
                let fp = tp - ip0f;
                let ip0 = ((ip0f as i64).rem_euclid(n_az as i64)) as usize;
                let ip1 = (ip0 + 1) % n_az;
                let idx = |iu: usize, ip: usize| base + iu * n_az + ip;
                vec![
                    (idx(iu0, ip0), (1.0 - fu) * (1.0 - fp)),
                    (idx(iu0, ip1), (1.0 - fu) * fp),
                    (idx(iu1, ip0), fu * (1.0 - fp)),
                    (idx(iu1, ip1), fu * fp),
                ]
            }
            _ => unreachable!("grids only constructible for d=2,3"),
        }
    }
}
