//! Incoming boundary data on the slab: value profiles, declared
//! discontinuity seeds with their propagated rays, and empirical
//! classification of the two per-variable continuity conditions.
//!
//! Profiles are defined on the whole incoming boundary, so backtraced feet
//! far outside any lateral window always have a value. Jump magnitudes are
//! measured along declared one-parameter approaches (lateral at fixed
//! direction, or angular at fixed point); the classification scans report a
//! jump only when a bisection-refined two-sided difference fails to vanish.

use thiserror::Error;

use crate::geometry::{
    tau_plus, Direction, Face, GeometryError, PhasePoint, Position, SlabDomain,
};

const JUMP_DETECT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum BoundaryError {
    #[error("phase point is not on the incoming boundary")]
    NotOnIncomingBoundary,
    #[error("seed jump must be nonzero")]
    ZeroJump,
    #[error("this profile is only defined for d=2")]
    RequiresDimension2,
    #[error("focus point must be interior: depth {0}")]
    FocusNotInterior(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Which of the two per-variable continuity conditions the data satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum RegularityClass {
    /// Continuous in the spatial variable for almost every direction.
    Condition1,
    /// Continuous in the direction variable for almost every boundary point.
    Condition2,
    Both,
    Neither,
}

impl RegularityClass {
    pub fn includes_condition1(&self) -> bool {
        matches!(self, RegularityClass::Condition1 | RegularityClass::Both)
    }

    pub fn includes_condition2(&self) -> bool {
        matches!(self, RegularityClass::Condition2 | RegularityClass::Both)
    }

    pub fn from_flags(c1: bool, c2: bool) -> Self {
        match (c1, c2) {
            (true, true) => RegularityClass::Both,
            (true, false) => RegularityClass::Condition1,
            (false, true) => RegularityClass::Condition2,
            (false, false) => RegularityClass::Neither,
        }
    }
}

/// Piecewise-constant boundary data (d=2): the bottom-face piece where the
/// lateral coordinate clears a direction-dependent cutoff takes value 1, the
/// rest of the incoming boundary takes value 0. Every backtraced
/// characteristic through the focus point grazes the jump locus, so neither
/// continuity condition holds.
#[derive(Debug, Clone, Copy)]
pub struct CounterexampleData {
    x_bar: [f64; 2],
}

/// The three pieces partitioning the incoming boundary for
/// [`CounterexampleData`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaPiece {
    /// Bottom face, lateral coordinate at or beyond the cutoff.
    One,
    /// Bottom face, lateral coordinate below the cutoff.
    Two,
    /// Top face.
    Three,
}

impl CounterexampleData {
    pub fn new(x_bar: [f64; 2]) -> Result<Self, BoundaryError> {
        if !(x_bar[1] > 0.0 && x_bar[1] < 1.0) {
            return Err(BoundaryError::FocusNotInterior(x_bar[1]));
        }
        Ok(Self { x_bar })
    }

    pub fn focus(&self) -> [f64; 2] {
        self.x_bar
    }

    /// Lateral cutoff for a bottom-face direction with components
    /// (cos theta, sin theta), sin theta > 0.
    pub fn cutoff(&self, xi: &Direction<2>) -> f64 {
        let cot = xi.components()[0] / xi.components()[1];
        self.x_bar[0] - self.x_bar[1] * cot
    }

    pub fn piece(&self, p: &PhasePoint<2>) -> Option<GammaPiece> {
        match p.boundary_face()? {
            Face::Top => Some(GammaPiece::Three),
            Face::Bottom => {
                // The cutoff inequality is non-strict. Backtraced feet that
                // sit exactly on the cutoff arrive with a few ulps of
                // rounding (tau * cos against the cutoff's cos/sin round
                // differently), so equality gets a width proportional to
                // the cutoff magnitude.
                let cutoff = self.cutoff(p.direction());
                let eps = 4e-14 * (1.0 + cutoff.abs());
                if p.position().coords()[0] >= cutoff - eps {
                    Some(GammaPiece::One)
                } else {
                    Some(GammaPiece::Two)
                }
            }
        }
    }

    pub fn eval(&self, p: &PhasePoint<2>) -> f64 {
        match self.piece(p) {
            Some(GammaPiece::One) => 1.0,
            _ => 0.0,
        }
    }
}

/// Named boundary-value profiles; each is defined on the whole incoming
/// boundary and carries its constant lateral tails implicitly.
#[derive(Debug, Clone)]
pub enum BoundaryProfile<const D: usize> {
    Constant(f64),
    /// `high` where the lateral coordinate on `axis` is at or beyond
    /// `threshold`, `low` below; independent of the direction.
    LateralStep {
        axis: usize,
        threshold: f64,
        low: f64,
        high: f64,
    },
    /// d=2: `high` where the polar angle is at or beyond `split`, `low`
    /// below; independent of the boundary point.
    AngularStep { split: f64, low: f64, high: f64 },
    /// mean + amplitude * (depth component of the direction); smooth in both
    /// variables.
    DirectionalLinear { mean: f64, amplitude: f64 },
    /// d=2 focused piecewise-constant data; see [`CounterexampleData`].
    Counterexample(CounterexampleData),
    /// d=2 explicit piecewise-constant data.
    Piecewise {
        pieces: Vec<PiecewisePiece>,
        default: f64,
    },
}

/// One half-open box of a d=2 piecewise profile.
#[derive(Debug, Clone)]
pub struct PiecewisePiece {
    pub face: Face,
    pub lateral: (f64, f64),
    pub theta: (f64, f64),
    pub value: f64,
}

/// How a seed's two-sided jump is approached when measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum ApproachFamily {
    /// Offset the position along a lateral axis at fixed direction.
    Lateral { axis: usize },
    /// Offset the polar angle at a fixed position (d=2).
    Angular,
}

/// A declared discontinuity of the boundary data.
#[derive(Debug, Clone, Copy)]
pub struct DiscSeed<const D: usize> {
    point: PhasePoint<D>,
    jump: f64,
    approach: ApproachFamily,
}

impl<const D: usize> DiscSeed<D> {
    pub fn new(
        point: PhasePoint<D>,
        jump: f64,
        approach: ApproachFamily,
    ) -> Result<Self, BoundaryError> {
        if !point.on_incoming_boundary() {
            return Err(BoundaryError::NotOnIncomingBoundary);
        }
        if jump == 0.0 || !jump.is_finite() {
            return Err(BoundaryError::ZeroJump);
        }
        Ok(Self {
            point,
            jump,
            approach,
        })
    }

    pub fn point(&self) -> &PhasePoint<D> {
        &self.point
    }

    pub fn jump(&self) -> f64 {
        self.jump
    }

    pub fn approach(&self) -> ApproachFamily {
        self.approach
    }
}

/// A propagated jump: the forward characteristic segment from a seed until
/// it exits the slab.
#[derive(Debug, Clone, Copy)]
pub struct DiscontinuityRay<const D: usize> {
    seed: DiscSeed<D>,
    length: f64,
}

impl<const D: usize> DiscontinuityRay<D> {
    pub fn seed(&self) -> &DiscSeed<D> {
        &self.seed
    }

    /// Exit time of the seed; the ray is the half-open segment [0, length).
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Phase point at parameter `t` in [0, length).
    pub fn point_at(&self, t: f64) -> Result<PhasePoint<D>, GeometryError> {
        let p = self.seed.point();
        PhasePoint::new(p.position().advanced(p.direction(), t)?, *p.direction())
    }
}

/// Boundary data: a profile plus declared discontinuity seeds, regularity
/// class, and optional declared null sets for the "almost every" clauses.
#[derive(Debug, Clone)]
pub struct BoundaryData<const D: usize> {
    profile: BoundaryProfile<D>,
    seeds: Vec<DiscSeed<D>>,
    declared: RegularityClass,
    /// Directions (by polar angle, d=2) exempt from the condition-1 scan.
    pub exceptional_thetas: Vec<f64>,
    /// Lateral coordinates exempt from the condition-2 scan.
    pub exceptional_lateral: Vec<f64>,
}

impl<const D: usize> BoundaryData<D> {
    pub fn new(
        profile: BoundaryProfile<D>,
        seeds: Vec<DiscSeed<D>>,
        declared: RegularityClass,
    ) -> Result<Self, BoundaryError> {
        match &profile {
            BoundaryProfile::AngularStep { .. }
            | BoundaryProfile::Counterexample(_)
            | BoundaryProfile::Piecewise { .. }
                if D != 2 =>
            {
                return Err(BoundaryError::RequiresDimension2)
            }
            _ => {}
        }
        Ok(Self {
            profile,
            seeds,
            declared,
            exceptional_thetas: Vec::new(),
            exceptional_lateral: Vec::new(),
        })
    }

    pub fn constant(value: f64) -> Self {
        Self::new(
            BoundaryProfile::Constant(value),
            Vec::new(),
            RegularityClass::Both,
        )
        .expect("constant profile is dimension-free")
    }

    pub fn profile(&self) -> &BoundaryProfile<D> {
        &self.profile
    }

    pub fn seeds(&self) -> &[DiscSeed<D>] {
        &self.seeds
    }

    pub fn declared_regularity(&self) -> RegularityClass {
        self.declared
    }

    /// Declared bound on |f0|; exact for every preset.
    pub fn sup_norm(&self) -> f64 {
        match &self.profile {
            BoundaryProfile::Constant(c) => c.abs(),
            BoundaryProfile::LateralStep { low, high, .. }
            | BoundaryProfile::AngularStep { low, high, .. } => low.abs().max(high.abs()),
            BoundaryProfile::DirectionalLinear { mean, amplitude } => {
                (mean.abs() + amplitude.abs()).max((mean - amplitude).abs())
            }
            BoundaryProfile::Counterexample(_) => 1.0,
            BoundaryProfile::Piecewise { pieces, default } => pieces
                .iter()
                .map(|p| p.value.abs())
                .fold(default.abs(), f64::max),
        }
    }

    /// Whether the profile is laterally constant far outside any window, the
    /// convention the collocation solver relies on.
    pub fn has_constant_lateral_tails(&self) -> bool {
        !matches!(self.profile, BoundaryProfile::Counterexample(_))
    }

    /// Boundary value at an incoming boundary point.
    pub fn eval(&self, p: &PhasePoint<D>) -> Result<f64, BoundaryError> {
        let face = p
            .boundary_face()
            .ok_or(BoundaryError::NotOnIncomingBoundary)?;
        if !p.on_incoming_boundary() {
            return Err(BoundaryError::NotOnIncomingBoundary);
        }
        Ok(match &self.profile {
            BoundaryProfile::Constant(c) => *c,
            BoundaryProfile::LateralStep {
                axis,
                threshold,
                low,
                high,
            } => {
                if p.position().coords()[*axis] >= *threshold {
                    *high
                } else {
                    *low
                }
            }
            BoundaryProfile::AngularStep { split, low, high } => {
                if p.direction().polar_angle() >= *split {
                    *high
                } else {
                    *low
                }
            }
            BoundaryProfile::DirectionalLinear { mean, amplitude } => {
                mean + amplitude * p.direction().depth_component()
            }
            BoundaryProfile::Counterexample(data) => {
                debug_assert_eq!(D, 2);
                let q = PhasePoint::<2>::from_coords(
                    [p.position().coords()[0], p.position().coords()[D - 1]],
                    [p.direction().components()[0], p.direction().components()[D - 1]],
                )?;
                data.eval(&q)
            }
            BoundaryProfile::Piecewise { pieces, default } => {
                let x1 = p.position().coords()[0];
                let theta = p.direction().polar_angle();
                pieces
                    .iter()
                    .find(|piece| {
                        piece.face == face
                            && x1 >= piece.lateral.0
                            && x1 < piece.lateral.1
                            && theta >= piece.theta.0
                            && theta < piece.theta.1
                    })
                    .map(|piece| piece.value)
                    .unwrap_or(*default)
            }
        })
    }

    /// One propagated ray per declared seed.
    pub fn seed_rays(&self) -> Vec<DiscontinuityRay<D>> {
        self.seeds
            .iter()
            .map(|seed| DiscontinuityRay {
                seed: *seed,
                length: tau_plus(seed.point()),
            })
            .collect()
    }
}

/// A detected jump of a one-dimensional scan.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct DetectedJump {
    pub location: f64,
    pub magnitude: f64,
}

/// Bisection-refined jump detection on `[lo, hi]`: finds the coarse interval
/// with the largest increment and shrinks it; a genuine jump keeps its
/// magnitude as the bracket collapses, a steep smooth ramp does not.
pub fn scan_for_jump<F: Fn(f64) -> f64>(
    g: &F,
    lo: f64,
    hi: f64,
    coarse: usize,
    tol: f64,
) -> Option<DetectedJump> {
    let coarse = coarse.max(8);
    let h = (hi - lo) / coarse as f64;
    let mut best = (0.0f64, lo, lo + h);
    let mut prev = g(lo);
    // The bracket must reuse the exact previous sample coordinate;
    // recomputing it as x - h rounds differently and can land the whole
    // bracket on one side of the jump.
    let mut prev_x = lo;
    for i in 1..=coarse {
        let x = lo + i as f64 * h;
        let v = g(x);
        let d = (v - prev).abs();
        if d > best.0 {
            best = (d, prev_x, x);
        }
        prev = v;
        prev_x = x;
    }
    if best.0 <= tol {
        return None;
    }
    let (mut a, mut b) = (best.1, best.2);
    let (mut ga, mut gb) = (g(a), g(b));
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        let gm = g(m);
        if (gm - ga).abs() >= (gb - gm).abs() {
            b = m;
            gb = gm;
        } else {
            a = m;
            ga = gm;
        }
    }
    let magnitude = gb - ga;
    if magnitude.abs() > tol {
        Some(DetectedJump {
            location: 0.5 * (a + b),
            magnitude,
        })
    } else {
        None
    }
}

/// Count the jumps on `[lo, hi]` whose refined magnitude exceeds `tol`.
pub fn count_jumps<F: Fn(f64) -> f64>(g: &F, lo: f64, hi: f64, coarse: usize, tol: f64) -> usize {
    let coarse = coarse.max(8);
    let h = (hi - lo) / coarse as f64;
    let mut count = 0;
    let mut prev = g(lo);
    let mut prev_x = lo;
    for i in 1..=coarse {
        let x = lo + i as f64 * h;
        let v = g(x);
        if (v - prev).abs() > tol && scan_for_jump(g, prev_x, x, 8, tol).is_some() {
            count += 1;
        }
        prev = v;
        prev_x = x;
    }
    count
}

/// Evidence gathered by [`classify_regularity`].
#[derive(Debug, Clone, serde::Serialize)]
pub struct RegularityReport {
    pub condition1: bool,
    pub condition2: bool,
    pub classified: RegularityClass,
    pub declared: RegularityClass,
    pub contradicts_declaration: bool,
    /// (polar angle, jump) pairs where an x-scan found a discontinuity.
    pub x_jumps: Vec<(f64, DetectedJump)>,
    /// (lateral coordinate, jump) pairs where a direction scan found one.
    pub xi_jumps: Vec<(f64, DetectedJump)>,
}

/// Empirical classification of the two continuity conditions by sampled
/// one-dimensional scans (d=2; d=3 data built from the dimension-free
/// presets classifies through the same lateral scans).
pub fn classify_regularity<const D: usize>(
    data: &BoundaryData<D>,
    domain: &SlabDomain<D>,
    samples: usize,
) -> RegularityReport {
    let samples = samples.max(32);
    let n_dirs = 24usize;
    let n_points = 24usize;
    let (lat_lo, lat_hi) = domain.lateral_window()[0];
    let scan_lo = lat_lo - 1.0;
    let scan_hi = lat_hi + 1.0;

    let mut x_jumps = Vec::new();
    let mut xi_jumps = Vec::new();

    // Condition 1: continuity in the boundary point at fixed direction.
    for i in 0..n_dirs {
        let theta = (i as f64 + 0.5) * 2.0 * std::f64::consts::PI / n_dirs as f64;
        if data
            .exceptional_thetas
            .iter()
            .any(|t| (t - theta).abs() < 1e-9)
        {
            continue;
        }
        let (face_depth, xi) = direction_for_scan::<D>(theta);
        let g = |x1: f64| {
            let mut c = [0.0; D];
            c[0] = x1;
            c[D - 1] = face_depth;
            let p = PhasePoint::new(Position::new(c).unwrap(), xi).unwrap();
            data.eval(&p).unwrap()
        };
        if let Some(jump) = scan_for_jump(&g, scan_lo, scan_hi, samples, JUMP_DETECT_TOL) {
            x_jumps.push((theta, jump));
        }
    }

    // Condition 2: continuity in the direction at fixed boundary point.
    for i in 0..n_points {
        let x1 = scan_lo + (i as f64 + 0.5) * (scan_hi - scan_lo) / n_points as f64;
        if data
            .exceptional_lateral
            .iter()
            .any(|t| (t - x1).abs() < 1e-9)
        {
            continue;
        }
        for face in [Face::Bottom, Face::Top] {
            let g = |s: f64| {
                let (face_depth, xi) = incoming_direction_on_face::<D>(face, s);
                let mut c = [0.0; D];
                c[0] = x1;
                c[D - 1] = face_depth;
                let p = PhasePoint::new(Position::new(c).unwrap(), xi).unwrap();
                data.eval(&p).unwrap()
            };
            if let Some(jump) = scan_for_jump(&g, 0.02, 0.98, samples, JUMP_DETECT_TOL) {
                xi_jumps.push((x1, jump));
            }
        }
    }

    let condition1 = x_jumps.is_empty();
    let condition2 = xi_jumps.is_empty();
    let classified = RegularityClass::from_flags(condition1, condition2);
    RegularityReport {
        condition1,
        condition2,
        classified,
        declared: data.declared_regularity(),
        contradicts_declaration: classified != data.declared_regularity(),
        x_jumps,
        xi_jumps,
    }
}

/// Incoming direction and matching face depth for a full-circle parameter
/// (d=2: theta itself; d=3: a meridian path with the same depth component).
fn direction_for_scan<const D: usize>(theta: f64) -> (f64, Direction<D>) {
    let mut c = [0.0; D];
    c[0] = theta.cos();
    c[D - 1] = theta.sin();
    if D == 3 {
        // Keep unit norm on the meridian.
        c[1] = 0.0;
    }
    let xi = Direction::new(c).expect("unit by construction");
    let depth = if theta.sin() > 0.0 { 0.0 } else { 1.0 };
    (depth, xi)
}

/// Incoming direction on the given face for a scan parameter in (0, 1):
/// the depth component sweeps the incoming hemisphere.
fn incoming_direction_on_face<const D: usize>(face: Face, s: f64) -> (f64, Direction<D>) {
    match face {
        Face::Bottom => {
            let theta = s * std::f64::consts::PI;
            direction_for_scan::<D>(theta)
        }
        Face::Top => {
            let theta = std::f64::consts::PI * (1.0 + s);
            direction_for_scan::<D>(theta)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn domain2() -> SlabDomain<2> {
        SlabDomain::new(&[(-1.0, 1.0)]).unwrap()
    }

    fn gamma_point(x1: f64, face: Face, theta: f64) -> PhasePoint<2> {
        PhasePoint::new(
            Position::new([x1, face.depth()]).unwrap(),
            Direction::from_theta(theta),
        )
        .unwrap()
    }

    #[test]
    fn constant_eval_and_supnorm() {
        let b = BoundaryData::<2>::constant(3.5);
        let p = gamma_point(0.2, Face::Bottom, 1.0);
        assert_eq!(b.eval(&p).unwrap(), 3.5);
        assert_eq!(b.sup_norm(), 3.5);
    }

    #[test]
    fn eval_rejects_interior_points() {
        let b = BoundaryData::<2>::constant(1.0);
        let p = PhasePoint::from_coords([0.0, 0.5], [0.0, 1.0]).unwrap();
        assert!(matches!(
            b.eval(&p),
            Err(BoundaryError::NotOnIncomingBoundary)
        ));
    }

    #[test]
    fn counterexample_cutoff_is_nonstrict() {
        // At theta = pi/2 the cutoff equals the focus lateral coordinate and
        // the inequality includes it.
        let data = CounterexampleData::new([0.3, 0.5]).unwrap();
        let b = BoundaryData::new(
            BoundaryProfile::Counterexample(data),
            Vec::new(),
            RegularityClass::Neither,
        )
        .unwrap();
        let p = gamma_point(0.3, Face::Bottom, std::f64::consts::FRAC_PI_2);
        assert_eq!(b.eval(&p).unwrap(), 1.0);
        let below = gamma_point(0.3 - 1e-12, Face::Bottom, std::f64::consts::FRAC_PI_2);
        assert_eq!(b.eval(&below).unwrap(), 0.0);
        // Top-face data vanishes for every incoming angle.
        for theta in [3.5, 4.2, 5.9] {
            let q = gamma_point(0.7, Face::Top, theta);
            assert_eq!(b.eval(&q).unwrap(), 0.0);
        }
    }

    #[test]
    fn counterexample_requires_interior_focus() {
        assert!(CounterexampleData::new([0.0, 0.0]).is_err());
        assert!(CounterexampleData::new([0.0, 1.0]).is_err());
    }

    #[test]
    fn counterexample_pieces_partition() {
        let data = CounterexampleData::new([0.0, 0.5]).unwrap();
        let mut counts = [0usize; 3];
        for i in 0..40 {
            let x1 = -2.0 + 0.1 * i as f64;
            for j in 0..20 {
                let theta = 0.05 + j as f64 * 0.155;
                let p = gamma_point(x1, Face::Bottom, theta);
                match data.piece(&p).unwrap() {
                    GammaPiece::One => counts[0] += 1,
                    GammaPiece::Two => counts[1] += 1,
                    GammaPiece::Three => counts[2] += 1,
                }
            }
            let q = gamma_point(x1, Face::Top, 4.0);
            assert_eq!(data.piece(&q), Some(GammaPiece::Three));
            counts[2] += 1;
        }
        // Each boundary point belongs to exactly one piece and the bottom
        // pieces are both populated.
        assert!(counts[0] > 0 && counts[1] > 0 && counts[2] > 0);
        assert_eq!(counts.iter().sum::<usize>(), 40 * 20 + 40);
    }

    #[test]
    fn counterexample_single_jump_at_cutoff() {
        let data = CounterexampleData::new([0.25, 0.4]).unwrap();
        let b = BoundaryData::new(
            BoundaryProfile::Counterexample(data),
            Vec::new(),
            RegularityClass::Neither,
        )
        .unwrap();
        for theta in [0.4, 1.1, std::f64::consts::FRAC_PI_2, 2.2, 2.9] {
            let xi = Direction::from_theta(theta);
            let expected = data.cutoff(&xi);
            let g = |x1: f64| b.eval(&gamma_point(x1, Face::Bottom, theta)).unwrap();
            let lo = expected - 3.0;
            let hi = expected + 3.0;
            assert_eq!(count_jumps(&g, lo, hi, 600, 1e-9), 1);
            let jump = scan_for_jump(&g, lo, hi, 600, 1e-9).unwrap();
            assert_relative_eq!(jump.location, expected, epsilon = 1e-9);
            assert_relative_eq!(jump.magnitude, 1.0);
        }
    }

    #[test]
    fn classify_lateral_step_is_condition2() {
        let b = BoundaryData::new(
            BoundaryProfile::LateralStep {
                axis: 0,
                threshold: 0.0,
                low: 0.0,
                high: 1.0,
            },
            Vec::new(),
            RegularityClass::Condition2,
        )
        .unwrap();
        let report = classify_regularity(&b, &domain2(), 256);
        assert!(!report.condition1);
        assert!(report.condition2);
        assert_eq!(report.classified, RegularityClass::Condition2);
        assert!(!report.contradicts_declaration);
    }

    #[test]
    fn classify_angular_step_is_condition1() {
        let b = BoundaryData::new(
            BoundaryProfile::AngularStep {
                split: std::f64::consts::FRAC_PI_2,
                low: 0.0,
                high: 1.0,
            },
            Vec::new(),
            RegularityClass::Condition1,
        )
        .unwrap();
        let report = classify_regularity(&b, &domain2(), 256);
        assert!(report.condition1);
        assert!(!report.condition2);
        assert_eq!(report.classified, RegularityClass::Condition1);
    }

    #[test]
    fn classify_counterexample_is_neither() {
        let b = BoundaryData::new(
            BoundaryProfile::Counterexample(CounterexampleData::new([0.0, 0.5]).unwrap()),
            Vec::new(),
            RegularityClass::Neither,
        )
        .unwrap();
        let report = classify_regularity(&b, &domain2(), 256);
        assert_eq!(report.classified, RegularityClass::Neither);
        assert!(!report.contradicts_declaration);
    }

    #[test]
    fn classify_flags_contradiction() {
        let b = BoundaryData::new(
            BoundaryProfile::LateralStep {
                axis: 0,
                threshold: 0.0,
                low: 0.0,
                high: 1.0,
            },
            Vec::new(),
            RegularityClass::Both,
        )
        .unwrap();
        let report = classify_regularity(&b, &domain2(), 256);
        assert!(report.contradicts_declaration);
    }

    #[test]
    fn seed_rays_lengths() {
        let vertical = DiscSeed::new(
            gamma_point(0.0, Face::Bottom, std::f64::consts::FRAC_PI_2),
            1.0,
            ApproachFamily::Lateral { axis: 0 },
        )
        .unwrap();
        // Oracle: exit time (1 - 0)/sin(pi/4) for the oblique seed.
        let oblique = DiscSeed::new(
            gamma_point(0.0, Face::Bottom, std::f64::consts::FRAC_PI_4),
            -0.5,
            ApproachFamily::Lateral { axis: 0 },
        )
        .unwrap();
        let b = BoundaryData::new(
            BoundaryProfile::LateralStep {
                axis: 0,
                threshold: 0.0,
                low: 0.0,
                high: 1.0,
            },
            vec![vertical, oblique],
            RegularityClass::Condition2,
        )
        .unwrap();
        let rays = b.seed_rays();
        assert_eq!(rays.len(), 2);
        assert_relative_eq!(rays[0].length(), 1.0);
        assert_relative_eq!(rays[1].length(), std::f64::consts::SQRT_2, epsilon = 1e-12);
        let mid = rays[0].point_at(0.5).unwrap();
        assert_relative_eq!(mid.position().depth(), 0.5);

        let empty = BoundaryData::<2>::constant(1.0);
        assert!(empty.seed_rays().is_empty());
    }

    #[test]
    fn seed_validation() {
        let p = gamma_point(0.0, Face::Bottom, 1.0);
        assert!(DiscSeed::new(p, 0.0, ApproachFamily::Angular).is_err());
        let interior = PhasePoint::from_coords([0.0, 0.5], [0.0, 1.0]).unwrap();
        assert!(DiscSeed::new(interior, 1.0, ApproachFamily::Angular).is_err());
    }

    #[test]
    fn scan_ignores_steep_smooth_ramps() {
        let g = |x: f64| (200.0 * x).tanh();
        assert!(scan_for_jump(&g, -1.0, 1.0, 64, 1e-9).is_none());
    }

    #[test]
    fn d2_only_profiles_rejected_in_d3() {
        let r = BoundaryData::<3>::new(
            BoundaryProfile::AngularStep {
                split: 1.0,
                low: 0.0,
                high: 1.0,
            },
            Vec::new(),
            RegularityClass::Condition1,
        );
        assert!(matches!(r, Err(BoundaryError::RequiresDimension2)));
    }
}
