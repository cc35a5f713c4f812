//! The coefficient triple (attenuation, scattering, phase function), the
//! standing-assumption checks, and optical depths along upstream ray
//! segments.
//!
//! Validation samples a dense lattice: boundedness and the three standing
//! inequalities (positive absorption gap, positive attenuation infimum,
//! scattering ratio below one) are checked there, together with the phase
//! normalization under the angular quadrature. Continuity of the
//! coefficients is assumed, not verified; it is not decidable from samples.

use serde::Serialize;
use thiserror::Error;

use crate::geometry::SlabDomain;
use crate::quadrature::{gl8_panel, AngularGrid, QuadratureSpec};

const SEGMENT_DEPTH_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MediumError {
    #[error("segment leaves the closed slab (depth {0})")]
    SegmentExitsSlab(f64),
    #[error("segment length must be finite and nonnegative, got {0}")]
    BadSegmentLength(f64),
    #[error("grid field: {0}")]
    Grid(String),
    #[error(transparent)]
    Quadrature(#[from] crate::quadrature::QuadratureError),
}

/// A scalar coefficient on the slab: an analytic preset or a sampled grid
/// with multilinear interpolation and constant lateral tails.
#[derive(Debug, Clone)]
pub enum ScalarField<const D: usize> {
    Constant(f64),
    /// intercept + slope * depth.
    DepthAffine { intercept: f64, slope: f64 },
    /// base + amplitude * exp(-|x - center|^2 / width^2).
    Bump {
        base: f64,
        amplitude: f64,
        center: [f64; D],
        width: f64,
    },
    Grid(GridField<D>),
}

impl<const D: usize> ScalarField<D> {
    pub fn eval(&self, x: &[f64; D]) -> f64 {
        match self {
            ScalarField::Constant(c) => *c,
            ScalarField::DepthAffine { intercept, slope } => intercept + slope * x[D - 1],
            ScalarField::Bump {
                base,
                amplitude,
                center,
                width,
            } => {
                let r2: f64 = x
                    .iter()
                    .zip(center.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                base + amplitude * (-r2 / (width * width)).exp()
            }
            ScalarField::Grid(g) => g.eval(x),
        }
    }

    /// Exact infimum over the slab. Multilinear grids attain extrema at
    /// nodes, the analytic presets have closed-form ranges.
    pub fn min_value(&self) -> f64 {
        match self {
            ScalarField::Constant(c) => *c,
            ScalarField::DepthAffine { intercept, slope } => {
                intercept.min(intercept + slope)
            }
            ScalarField::Bump {
                base, amplitude, ..
            } => base.min(base + amplitude),
            ScalarField::Grid(g) => g.values.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn max_value(&self) -> f64 {
        match self {
            ScalarField::Constant(c) => *c,
            ScalarField::DepthAffine { intercept, slope } => {
                intercept.max(intercept + slope)
            }
            ScalarField::Bump {
                base, amplitude, ..
            } => base.max(base + amplitude),
            ScalarField::Grid(g) => g.values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// A sampled scalar field on an axis-aligned box, multilinear in between and
/// clamped (constant) outside.
#[derive(Debug, Clone)]
pub struct GridField<const D: usize> {
    bounds: [(f64, f64); D],
    dims: [usize; D],
    /// Row-major with the last (depth) axis fastest.
    values: Vec<f64>,
}

impl<const D: usize> GridField<D> {
    pub fn new(
        bounds: [(f64, f64); D],
        dims: [usize; D],
        values: Vec<f64>,
    ) -> Result<Self, MediumError> {
        let mut total: usize = 1;
        for (axis, (&n, &(lo, hi))) in dims.iter().zip(bounds.iter()).enumerate() {
            if n < 2 {
                return Err(MediumError::Grid(format!(
                    "axis {axis} needs at least 2 nodes, got {n}"
                )));
            }
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(MediumError::Grid(format!(
                    "axis {axis} bounds must be finite with min < max"
                )));
            }
            total = total
                .checked_mul(n)
                .ok_or_else(|| MediumError::Grid("grid size overflows".into()))?;
            if total > 1 << 24 {
                return Err(MediumError::Grid("grid larger than 2^24 values".into()));
            }
        }
        if values.len() != total {
            return Err(MediumError::Grid(format!(
                "expected {total} values, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(MediumError::Grid(format!("non-finite grid value {v}")));
        }
        Ok(Self {
            bounds,
            dims,
            values,
        })
    }

    /// Parses the CSV grid format: a header row with `min,max,count` per axis
    /// (depth axis last), then one row per leading multi-index with one
    /// column per depth node. Blank lines and `#` comments are skipped.
    pub fn from_csv_str(text: &str) -> Result<Self, MediumError> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| MediumError::Grid("missing header row".into()))?;
        let fields: Vec<&str> = header.split(',').map(str::trim).collect();
        if fields.len() != 3 * D {
            return Err(MediumError::Grid(format!(
                "header needs {} comma-separated entries (min,max,count per axis), got {}",
                3 * D,
                fields.len()
            )));
        }
        let mut bounds = [(0.0, 0.0); D];
        let mut dims = [0usize; D];
        for axis in 0..D {
            let lo: f64 = fields[3 * axis]
                .parse()
                .map_err(|_| MediumError::Grid(format!("bad min on axis {axis}")))?;
            let hi: f64 = fields[3 * axis + 1]
                .parse()
                .map_err(|_| MediumError::Grid(format!("bad max on axis {axis}")))?;
            let n: usize = fields[3 * axis + 2]
                .parse()
                .map_err(|_| MediumError::Grid(format!("bad count on axis {axis}")))?;
            bounds[axis] = (lo, hi);
            dims[axis] = n;
        }
        let mut values = Vec::new();
        for line in lines {
            for field in line.split(',') {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| MediumError::Grid(format!("bad value {field:?}")))?;
                values.push(v);
                if values.len() > 1 << 24 {
                    return Err(MediumError::Grid("grid larger than 2^24 values".into()));
                }
            }
        }
        Self::new(bounds, dims, values)
    }

    pub fn eval(&self, x: &[f64; D]) -> f64 {
        multilinear(&self.bounds, &self.dims, &self.values, x)
    }
}

/// Multilinear interpolation with per-axis clamping (constant extension).
///
/// Reduced axis by axis with nested lerps `a + t (b - a)`, so a stored
/// constant is reproduced exactly regardless of the query point.
pub(crate) fn multilinear<const D: usize>(
    bounds: &[(f64, f64); D],
    dims: &[usize; D],
    values: &[f64],
    x: &[f64; D],
) -> f64 {
    debug_assert!(D <= 3);
    let mut base = [0usize; D];
    let mut frac = [0.0f64; D];
    for axis in 0..D {
        let (lo, hi) = bounds[axis];
        let n = dims[axis];
        let t = ((x[axis] - lo) / (hi - lo) * (n - 1) as f64).clamp(0.0, (n - 1) as f64);
        let i0 = (t.floor() as usize).min(n - 2);
        base[axis] = i0;
        frac[axis] = t - i0 as f64;
    }
    let mut strides = [1usize; D];
    for axis in (0..D - 1).rev() {
        strides[axis] = strides[axis + 1] * dims[axis + 1];
    }
    let mut corner_vals = [0.0f64; 8];
    let corners = 1usize << D;
    for (corner, slot) in corner_vals.iter_mut().enumerate().take(corners) {
        let mut idx = 0usize;
        for axis in 0..D {
            let hi_side = (corner >> axis) & 1 == 1;
            idx += (base[axis] + hi_side as usize) * strides[axis];
        }
        *slot = values[idx];
    }
    let mut remaining = corners;
    for axis in (0..D).rev() {
        let t = frac[axis];
        remaining /= 2;
        for j in 0..remaining {
            let a = corner_vals[j];
            let b = corner_vals[j + remaining];
            corner_vals[j] = a + t * (b - a);
        }
    }
    corner_vals[0]
}

/// Scattering kernel presets. All presets are position-independent; the
/// evaluation still takes the position so grids of anisotropy could slot in
/// behind the same signature.
#[derive(Debug, Clone)]
pub enum PhaseFunction {
    /// 1 / |S^{d-1}|.
    Isotropic,
    /// (1 + coefficient * cos angle(xi, xi')) / |S^{d-1}|; |coefficient| <= 1.
    LinearAnisotropic { coefficient: f64 },
    /// factor * base; deliberately breaks normalization unless factor = 1.
    Scaled {
        base: Box<PhaseFunction>,
        factor: f64,
    },
}

/// Surface measure of the unit sphere in dimension d.
pub fn sphere_measure(d: usize) -> f64 {
    match d {
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        _ => panic!("sphere measure only provided for d=2,3"),
    }
}

impl PhaseFunction {
    pub fn eval<const D: usize>(
        &self,
        _x: &[f64; D],
        xi: &crate::geometry::Direction<D>,
        xi_prime: &crate::geometry::Direction<D>,
    ) -> f64 {
        match self {
            PhaseFunction::Isotropic => 1.0 / sphere_measure(D),
            PhaseFunction::LinearAnisotropic { coefficient } => {
                (1.0 + coefficient * xi.dot(xi_prime)) / sphere_measure(D)
            }
            PhaseFunction::Scaled { base, factor } => factor * base.eval(_x, xi, xi_prime),
        }
    }
}

/// The validated coefficient triple.
#[derive(Debug, Clone)]
pub struct Medium<const D: usize> {
    pub mu_t: ScalarField<D>,
    pub mu_s: ScalarField<D>,
    pub phase: PhaseFunction,
}

/// Which standing assumption failed first, in the canonical check order.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub enum Violation {
    NonFiniteOrNegative { field: String, value: f64 },
    NonpositiveGap { gap: f64 },
    NonpositiveAttenuationInfimum { mu_t_lower: f64 },
    ScatteringRatioNotBelowOne { m_ratio: f64 },
    PhaseNotNormalized { max_error: f64, tolerance: f64 },
    NegativePhase { value: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NonFiniteOrNegative { field, value } => {
                write!(f, "{field} must be nonnegative and bounded, sampled {value}")
            }
            Violation::NonpositiveGap { gap } => write!(
                f,
                "inf(mu_t - mu_s) must be positive, sampled gap {gap}"
            ),
            Violation::NonpositiveAttenuationInfimum { mu_t_lower } => {
                write!(f, "inf mu_t must be positive, sampled {mu_t_lower}")
            }
            Violation::ScatteringRatioNotBelowOne { m_ratio } => {
                write!(f, "sup(mu_s/mu_t) must be below one, sampled {m_ratio}")
            }
            Violation::PhaseNotNormalized {
                max_error,
                tolerance,
            } => write!(
                f,
                "phase normalization error {max_error:.3e} exceeds tolerance {tolerance:.3e}"
            ),
            Violation::NegativePhase { value } => {
                write!(f, "phase function must be nonnegative, sampled {value}")
            }
        }
    }
}

/// Outcome of the standing-assumption checks on a sample lattice.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub violation: Option<Violation>,
    pub gap: f64,
    pub mu_t_lower: f64,
    pub mu_t_upper: f64,
    pub mu_s_upper: f64,
    pub m_ratio: f64,
    pub max_phase_error: f64,
    pub spatial_samples: usize,
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "medium validation ({} spatial samples)", self.spatial_samples)?;
        writeln!(f, "  gap inf(mu_t - mu_s)   {:>14.6e}", self.gap)?;
        writeln!(f, "  inf mu_t               {:>14.6e}", self.mu_t_lower)?;
        writeln!(f, "  sup mu_t               {:>14.6e}", self.mu_t_upper)?;
        writeln!(f, "  sup mu_s               {:>14.6e}", self.mu_s_upper)?;
        writeln!(f, "  M = sup(mu_s/mu_t)     {:>14.6e}", self.m_ratio)?;
        writeln!(f, "  phase norm error       {:>14.6e}", self.max_phase_error)?;
        match &self.violation {
            None => write!(f, "  PASS"),
            Some(v) => write!(f, "  FAIL: {v}"),
        }
    }
}

impl<const D: usize> Medium<D> {
    pub fn isotropic_constant(mu_t: f64, mu_s: f64) -> Self {
        Self {
            mu_t: ScalarField::Constant(mu_t),
            mu_s: ScalarField::Constant(mu_s),
            phase: PhaseFunction::Isotropic,
        }
    }

    /// Exact infimum of the attenuation coefficient; used for truncation
    /// lengths and the survival bound.
    pub fn mu_t_lower(&self) -> f64 {
        self.mu_t.min_value()
    }

    /// Checks the standing assumptions on a deterministic sample lattice.
    pub fn validate(
        &self,
        domain: &SlabDomain<D>,
        quad: &QuadratureSpec,
    ) -> Result<ValidationReport, MediumError> {
        let angular = AngularGrid::<D>::build(quad)?;
        let per_axis = (quad.validation_samples.max(1) as f64)
            .powf(1.0 / D as f64)
            .ceil() as usize;
        let per_axis = per_axis.max(4);

        let mut gap = f64::INFINITY;
        let mut mu_t_lower = f64::INFINITY;
        let mut mu_t_upper = f64::NEG_INFINITY;
        let mut mu_s_upper = f64::NEG_INFINITY;
        let mut m_ratio = f64::NEG_INFINITY;
        let mut violation: Option<Violation> = None;
        let mut spatial_samples = 0usize;

        let bounds = domain.bounds();
        let mut idx = [0usize; D];
        'outer: loop {
            let mut x = [0.0f64; D];
            for axis in 0..D {
                let (lo, hi) = bounds[axis];
                x[axis] = lo + (idx[axis] as f64 + 0.5) * (hi - lo) / per_axis as f64;
            }
            spatial_samples += 1;
            let mt = self.mu_t.eval(&x);
            let ms = self.mu_s.eval(&x);
            for (name, v) in [("mu_t", mt), ("mu_s", ms)] {
                if !v.is_finite() || v < 0.0 {
                    violation.get_or_insert(Violation::NonFiniteOrNegative {
                        field: name.into(),
                        value: v,
                    });
                }
            }
            gap = gap.min(mt - ms);
            mu_t_lower = mu_t_lower.min(mt);
            mu_t_upper = mu_t_upper.max(mt);
            mu_s_upper = mu_s_upper.max(ms);
            if mt > 0.0 {
                m_ratio = m_ratio.max(ms / mt);
            } else if ms > 0.0 {
                m_ratio = f64::INFINITY;
            } else {
                m_ratio = m_ratio.max(0.0);
            }

            // Advance the lattice index.
            for axis in 0..D {
                idx[axis] += 1;
                if idx[axis] < per_axis {
                    break;
                }
                idx[axis] = 0;
                if axis == D - 1 {
                    break 'outer;
                }
            }
        }

        if violation.is_none() && !(gap > 0.0) {
            violation = Some(Violation::NonpositiveGap { gap });
        }
        if violation.is_none() && !(mu_t_lower > 0.0) {
            violation = Some(Violation::NonpositiveAttenuationInfimum { mu_t_lower });
        }
        if violation.is_none() && !(m_ratio < 1.0) {
            violation = Some(Violation::ScatteringRatioNotBelowOne { m_ratio });
        }

        // Phase normalization at a coarser spatial subset, every outgoing node.
        let mut max_phase_error: f64 = 0.0;
        let mut min_phase: f64 = f64::INFINITY;
        let n_phase_pts = 8usize;
        for k in 0..n_phase_pts {
            let mut x = [0.0f64; D];
            for axis in 0..D {
                let (lo, hi) = bounds[axis];
                x[axis] = lo + (k as f64 + 0.5) * (hi - lo) / n_phase_pts as f64;
            }
            for xi in angular.nodes() {
                let mut total = 0.0;
                for (xi_p, w) in angular.iter() {
                    let p = self.phase.eval(&x, xi, xi_p);
                    min_phase = min_phase.min(p);
                    total += w * p;
                }
                max_phase_error = max_phase_error.max((total - 1.0).abs());
            }
        }
        // Dot products at opposed directions round to a few ulps below -1,
        // so a kernel touching zero needs a roundoff allowance.
        if violation.is_none() && min_phase < -1e-12 {
            violation = Some(Violation::NegativePhase { value: min_phase });
        }
        if violation.is_none() && max_phase_error > quad.phase_tolerance {
            violation = Some(Violation::PhaseNotNormalized {
                max_error: max_phase_error,
                tolerance: quad.phase_tolerance,
            });
        }

        Ok(ValidationReport {
            pass: violation.is_none(),
            violation,
            gap,
            mu_t_lower,
            mu_t_upper,
            mu_s_upper,
            m_ratio,
            max_phase_error,
            spatial_samples,
        })
    }

    /// Optical depth along the upstream segment of length `s` from `x`
    /// against `xi`, by composite Gauss-Legendre panels.
    pub fn optical_depth(
        &self,
        x: &[f64; D],
        xi: &crate::geometry::Direction<D>,
        s: f64,
        quad: &QuadratureSpec,
    ) -> Result<f64, MediumError> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(MediumError::BadSegmentLength(s));
        }
        if s == 0.0 {
            return Ok(0.0);
        }
        for endpoint in [x[D - 1], x[D - 1] - s * xi.depth_component()] {
            if !(-SEGMENT_DEPTH_SLACK..=1.0 + SEGMENT_DEPTH_SLACK).contains(&endpoint) {
                return Err(MediumError::SegmentExitsSlab(endpoint));
            }
        }
        let panels = quad.panels_for(s);
        let width = s / panels as f64;
        let mut acc = 0.0;
        for k in 0..panels {
            let lo = k as f64 * width;
            acc += gl8_panel(lo, lo + width, |r| self.eval_mu_t_upstream(x, xi, r));
        }
        Ok(acc)
    }

    /// exp(-optical_depth); bounded above by exp(-inf(mu_t) * s).
    pub fn survival(
        &self,
        x: &[f64; D],
        xi: &crate::geometry::Direction<D>,
        s: f64,
        quad: &QuadratureSpec,
    ) -> Result<f64, MediumError> {
        Ok((-self.optical_depth(x, xi, s, quad)?).exp())
    }

    pub(crate) fn eval_mu_t_upstream(
        &self,
        x: &[f64; D],
        xi: &crate::geometry::Direction<D>,
        r: f64,
    ) -> f64 {
        let mut y = *x;
        for (yi, di) in y.iter_mut().zip(xi.components()) {
            *yi -= r * di;
        }
        y[D - 1] = y[D - 1].clamp(0.0, 1.0);
        self.mu_t.eval(&y)
    }

}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Direction;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn domain2() -> SlabDomain<2> {
        SlabDomain::new(&[(-1.0, 1.0)]).unwrap()
    }

    #[test]
    fn constant_medium_passes_validation() {
        let m = Medium::<2>::isotropic_constant(1.0, 0.5);
        let report = m.validate(&domain2(), &QuadratureSpec::default()).unwrap();
        assert!(report.pass, "{report}");
        assert_relative_eq!(report.m_ratio, 0.5);
        assert_relative_eq!(report.gap, 0.5);
    }

    #[test]
    fn zero_gap_medium_rejected_naming_gap() {
        // mu_t = mu_s = 1 has no absorption gap.
        let m = Medium::<2>::isotropic_constant(1.0, 1.0);
        let report = m.validate(&domain2(), &QuadratureSpec::default()).unwrap();
        assert!(!report.pass);
        assert!(matches!(
            report.violation,
            Some(Violation::NonpositiveGap { .. })
        ));
    }

    #[test]
    fn linear_anisotropic_phase_normalized() {
        // Oracle: the cosine term integrates to zero over the circle, so the
        // analytic normalization is exactly 1.
        let m = Medium::<2> {
            mu_t: ScalarField::Constant(1.0),
            mu_s: ScalarField::Constant(0.3),
            phase: PhaseFunction::LinearAnisotropic { coefficient: 1.0 },
        };
        let quad = QuadratureSpec::default().with_angular_nodes(512);
        let report = m.validate(&domain2(), &quad).unwrap();
        assert!(report.pass, "{report}");
        assert!(report.max_phase_error <= 1e-10);
    }

    #[test]
    fn scaled_phase_rejected() {
        let m = Medium::<2> {
            mu_t: ScalarField::Constant(1.0),
            mu_s: ScalarField::Constant(0.5),
            phase: PhaseFunction::Scaled {
                base: Box::new(PhaseFunction::Isotropic),
                factor: 1.01,
            },
        };
        let report = m.validate(&domain2(), &QuadratureSpec::default()).unwrap();
        assert!(!report.pass);
        assert!(matches!(
            report.violation,
            Some(Violation::PhaseNotNormalized { .. })
        ));
    }

    #[test]
    fn optical_depth_constant() {
        let m = Medium::<2>::isotropic_constant(2.0, 0.0);
        let quad = QuadratureSpec::default();
        let xi = Direction::new([0.0, 1.0]).unwrap();
        let d = m.optical_depth(&[0.0, 1.0], &xi, 0.5, &quad).unwrap();
        assert_relative_eq!(d, 1.0, max_relative = 1e-14);
        assert_relative_eq!(
            m.optical_depth(&[0.0, 1.0], &xi, 0.0, &quad).unwrap(),
            0.0
        );
    }

    #[test]
    fn optical_depth_depth_affine() {
        // mu_t(x) = depth; from (0, 0.8) upstream against (0,1):
        // integral_0^0.6 (0.8 - r) dr = 0.3 by the antiderivative.
        let m = Medium::<2> {
            mu_t: ScalarField::DepthAffine {
                intercept: 0.0,
                slope: 1.0,
            },
            mu_s: ScalarField::Constant(0.0),
            phase: PhaseFunction::Isotropic,
        };
        let xi = Direction::new([0.0, 1.0]).unwrap();
        let d = m
            .optical_depth(&[0.0, 0.8], &xi, 0.6, &QuadratureSpec::default())
            .unwrap();
        assert_relative_eq!(d, 0.3, max_relative = 1e-13);
    }

    #[test]
    fn survival_closed_form() {
        let m = Medium::<2>::isotropic_constant(1.0, 0.0);
        let quad = QuadratureSpec::default();
        let xi = Direction::new([0.0, 1.0]).unwrap();
        assert_relative_eq!(m.survival(&[0.0, 0.5], &xi, 0.0, &quad).unwrap(), 1.0);
        assert_relative_eq!(
            m.survival(&[0.0, 0.9], &xi, 0.5, &quad).unwrap(),
            (-0.5f64).exp(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn segment_leaving_slab_rejected() {
        let m = Medium::<2>::isotropic_constant(1.0, 0.0);
        let xi = Direction::new([0.0, 1.0]).unwrap();
        let r = m.optical_depth(&[0.0, 0.5], &xi, 0.6, &QuadratureSpec::default());
        assert!(matches!(r, Err(MediumError::SegmentExitsSlab(_))));
    }

    #[test]
    fn grid_field_roundtrip_and_clamp() {
        let csv = "\n# depth-affine samples\n-1.0,1.0,3,0.0,1.0,2\n0.0,1.0\n0.0,1.0\n0.0,1.0\n";
        let g = GridField::<2>::from_csv_str(csv).unwrap();
        assert_relative_eq!(g.eval(&[0.0, 0.25]), 0.25, epsilon = 1e-14);
        // Constant lateral extension beyond the window.
        assert_relative_eq!(g.eval(&[25.0, 0.5]), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn grid_field_malformed_inputs() {
        assert!(GridField::<2>::from_csv_str("").is_err());
        assert!(GridField::<2>::from_csv_str("0,1,2").is_err());
        assert!(GridField::<2>::from_csv_str("0,1,2,0,1,2\n1.0,nope\n1.0,2.0").is_err());
        assert!(GridField::<2>::from_csv_str("1,0,2,0,1,2\n1,1\n1,1").is_err());
        assert!(GridField::<2>::from_csv_str("0,1,2,0,1,2\n1,1\n1,1\n1,1").is_err());
        assert!(GridField::<2>::from_csv_str("0,1,1,0,1,2\n1,1").is_err());
    }

    #[test]
    fn d3_validation_smoke() {
        let m = Medium::<3>::isotropic_constant(1.5, 0.6);
        let domain = SlabDomain::new(&[(-1.0, 1.0), (-1.0, 1.0)]).unwrap();
        let mut quad = QuadratureSpec::default().with_angular_nodes(16);
        quad.azimuth_nodes = 24;
        quad.validation_samples = 1000;
        let report = m.validate(&domain, &quad).unwrap();
        assert!(report.pass, "{report}");
        assert_relative_eq!(report.m_ratio, 0.4);
    }

    proptest! {
        /// Optical depth is additive along the ray.
        #[test]
        fn optical_depth_additivity(
            depth in 0.2f64..0.8,
            theta in 0.3f64..(std::f64::consts::PI - 0.3),
            split in 0.1f64..0.9,
        ) {
            let m = Medium::<2> {
                mu_t: ScalarField::Bump {
                    base: 0.5,
                    amplitude: 0.7,
                    center: [0.2, 0.4],
                    width: 0.6,
                },
                mu_s: ScalarField::Constant(0.1),
                phase: PhaseFunction::Isotropic,
            };
            let quad = QuadratureSpec::default();
            let xi = Direction::from_theta(theta);
            let p = crate::geometry::PhasePoint::from_coords([0.3, depth], [xi.components()[0], xi.components()[1]]).unwrap();
            let total_len = crate::geometry::tau_minus(&p).min(5.0) * 0.999;
            let s1 = split * total_len;
            let s2 = total_len - s1;
            let whole = m.optical_depth(&[0.3, depth], &xi, total_len, &quad).unwrap();
            let first = m.optical_depth(&[0.3, depth], &xi, s1, &quad).unwrap();
            let mut y = [0.3, depth];
            for (yi, di) in y.iter_mut().zip(xi.components()) {
                *yi -= s1 * di;
            }
            let second = m.optical_depth(&y, &xi, s2, &quad).unwrap();
            prop_assert!((whole - (first + second)).abs() < 1e-10);
        }

        /// Survival never exceeds the exp(-inf(mu_t) * s) envelope.
        #[test]
        fn survival_bound(
            depth in 0.2f64..0.8,
            theta in 0.3f64..(std::f64::consts::PI - 0.3),
            frac in 0.05f64..0.95,
        ) {
            let m = Medium::<2> {
                mu_t: ScalarField::DepthAffine { intercept: 0.8, slope: 0.5 },
                mu_s: ScalarField::Constant(0.2),
                phase: PhaseFunction::Isotropic,
            };
            let quad = QuadratureSpec::default();
            let xi = Direction::from_theta(theta);
            let p = crate::geometry::PhasePoint::from_coords(
                [0.0, depth],
                [xi.components()[0], xi.components()[1]],
            ).unwrap();
            let s = frac * crate::geometry::tau_minus(&p);
            let surv = m.survival(&[0.0, depth], &xi, s, &quad).unwrap();
            prop_assert!(surv <= (-m.mu_t_lower() * s).exp() + 1e-12);
        }

        /// Interpolating a stored constant returns that constant exactly.
        #[test]
        fn grid_constant_exact(x1 in -3.0f64..3.0, depth in 0.0f64..1.0) {
            let g = GridField::<2>::new(
                [(-1.0, 1.0), (0.0, 1.0)],
                [4, 5],
                vec![2.75; 20],
            ).unwrap();
            prop_assert_eq!(g.eval(&[x1, depth]), 2.75);
        }
    }
}
