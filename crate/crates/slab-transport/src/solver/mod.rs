//! The characteristic-line integral operators and their fixed point: the
//! ballistic term, the scattering source, one collision step on the
//! collocation grid, and the certified geometrically-convergent sum.
//!
//! The solution splits as ballistic plus scattered. The ballistic part is a
//! closed-form survival-weighted boundary trace and carries every jump of
//! the data; the scattered part accumulates collision steps, each of which
//! contracts the sup norm by the scattering ratio, so the tail after N steps
//! is certified by a geometric bound rather than only by the empirical
//! increment. Rays that never leave the slab are truncated where the
//! survival factor drops below the configured tail threshold.

mod grid;

pub use grid::{CollocationGrid, GridValues};

use rayon::prelude::*;
use thiserror::Error;

use crate::boundary::{BoundaryData, BoundaryError};
use crate::geometry::{tau_minus, Direction, GeometryError, PhasePoint};
use crate::medium::{Medium, MediumError, ValidationReport};
use crate::quadrature::{
    gauss_legendre_8, gl8_panel, gl8_with_breakpoints, AngularGrid, QuadratureError,
    QuadratureSpec,
};

/// Optical depth beyond which the ballistic survival factor is treated as
/// exactly zero (exp(-46) is below 1e-20, far under every tolerance here).
const BALLISTIC_CUTOFF_OPTICAL_DEPTH: f64 = 46.0;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("medium failed validation: {0}")]
    InvalidMedium(Box<ValidationReport>),
    #[error(
        "not certified after {iterations} steps: last increment {empirical_increment:.3e}, \
         certified remainder {certified_remainder:.3e}"
    )]
    NotCertified {
        iterations: usize,
        empirical_increment: f64,
        certified_remainder: f64,
    },
    #[error(transparent)]
    Medium(#[from] MediumError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Ballistic term at an arbitrary point of the closed slab. Zero for
/// horizontal directions and whenever the guaranteed optical depth along the
/// backtrace exceeds the cutoff; equal to the boundary data on the incoming
/// boundary where the backtrace has length zero.
pub fn eval_f0_raw<const D: usize>(
    m: &Medium<D>,
    b: &BoundaryData<D>,
    x: &[f64; D],
    xi: &Direction<D>,
    quad: &QuadratureSpec,
) -> Result<f64, SolveError> {
    let xi_d = xi.depth_component();
    if xi_d == 0.0 {
        return Ok(0.0);
    }
    let depth = x[D - 1];
    let tau = if xi_d > 0.0 {
        depth / xi_d
    } else {
        (depth - 1.0) / xi_d
    };
    if m.mu_t_lower() * tau > BALLISTIC_CUTOFF_OPTICAL_DEPTH {
        return Ok(0.0);
    }
    let mut foot = *x;
    for (ci, di) in foot.iter_mut().zip(xi.components()) {
        *ci -= tau * di;
    }
    foot[D - 1] = if xi_d > 0.0 { 0.0 } else { 1.0 };
    let foot_point = PhasePoint::new(crate::geometry::Position(foot), *xi)?;
    let data = b.eval(&foot_point)?;
    if data == 0.0 {
        return Ok(0.0);
    }
    let survival = m.survival(x, xi, tau, quad)?;
    Ok(survival * data)
}

/// Ballistic term at a phase point of X.
pub fn eval_f0<const D: usize>(
    m: &Medium<D>,
    b: &BoundaryData<D>,
    p: &PhasePoint<D>,
    quad: &QuadratureSpec,
) -> Result<f64, SolveError> {
    eval_f0_raw(m, b, p.position().coords(), p.direction(), quad)
}

/// Scattering source at `x` against direction `xi`: mu_s times the angular
/// quadrature of the phase function against the direction-indexed values.
pub fn scatter_source<const D: usize>(
    m: &Medium<D>,
    x: &[f64; D],
    xi: &Direction<D>,
    angular: &AngularGrid<D>,
    field: &[f64],
) -> f64 {
    debug_assert_eq!(field.len(), angular.len());
    let mut acc = 0.0;
    for (i, (xi_p, w)) in angular.iter().enumerate() {
        acc += w * m.phase.eval(x, xi, xi_p) * field[i];
    }
    m.mu_s.eval(x) * acc
}

/// Integrate `s -> mu_s(x - s xi) exp(-M_t(x, xi; s)) source(x - s xi)` over
/// `[0, length]` with cumulative optical depth across Gauss-Legendre panels.
fn ray_collision_integral<const D: usize, F: FnMut(&[f64; D], f64) -> f64>(
    m: &Medium<D>,
    x: &[f64; D],
    xi: &Direction<D>,
    length: f64,
    quad: &QuadratureSpec,
    mut source: F,
) -> f64 {
    if !(length > 0.0) {
        return 0.0;
    }
    let panels = quad.panels_for(length);
    let width = length / panels as f64;
    let rule = gauss_legendre_8();
    let mut acc = 0.0;
    let mut depth_at_panel_start = 0.0;
    for k in 0..panels {
        let lo = k as f64 * width;
        let hi = lo + width;
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * width;
        for &(t, w) in rule.iter() {
            let s = mid + half * t;
            let optical = depth_at_panel_start
                + gl8_panel(lo, s, |r| m.eval_mu_t_upstream(x, xi, r));
            let mut y = *x;
            for (yi, di) in y.iter_mut().zip(xi.components()) {
                *yi -= s * di;
            }
            y[D - 1] = y[D - 1].clamp(0.0, 1.0);
            let mu_s = m.mu_s.eval(&y);
            if mu_s != 0.0 {
                acc += w * half * mu_s * (-optical).exp() * source(&y, s);
            }
        }
        depth_at_panel_start += gl8_panel(lo, hi, |r| m.eval_mu_t_upstream(x, xi, r));
    }
    acc
}

/// Angular quadrature of the phase function against grid values, per
/// (direction, spatial node); the mu_s factor is applied later at the exact
/// upstream point.
fn scatter_integral_grid<const D: usize>(
    m: &Medium<D>,
    grid: &CollocationGrid<D>,
    values: &GridValues,
) -> GridValues {
    let n_sp = grid.n_spatial();
    let n_ang = grid.n_angular();
    let angular = grid.angular();
    let mut out = GridValues::zeros(n_ang, n_sp);
    // All phase presets are position-independent, so the weighted phase
    // matrix can be built once.
    let x0 = grid.node_position(0);
    let mut matrix = vec![0.0f64; n_ang * n_ang];
    for a in 0..n_ang {
        for bidx in 0..n_ang {
            matrix[a * n_ang + bidx] =
                angular.weight(bidx) * m.phase.eval(&x0, angular.node(a), angular.node(bidx));
        }
    }
    out.angle_slices_mut()
        .enumerate()
        .par_bridge()
        .for_each(|(a, slice)| {
            for bidx in 0..n_ang {
                let w = matrix[a * n_ang + bidx];
                if w == 0.0 {
                    continue;
                }
                let src = values.angle_slice(bidx);
                for (o, v) in slice.iter_mut().zip(src.iter()) {
                    *o += w * v;
                }
            }
        });
    out
}

/// One collision step applied to arbitrary grid values.
fn apply_transport_step<const D: usize>(
    m: &Medium<D>,
    grid: &CollocationGrid<D>,
    values: &GridValues,
    quad: &QuadratureSpec,
) -> GridValues {
    let scatter = scatter_integral_grid(m, grid, values);
    let n_sp = grid.n_spatial();
    let s_max = quad.truncation_length(m.mu_t_lower());
    let mut out = GridValues::zeros(grid.n_angular(), n_sp);
    out.angle_slices_mut()
        .enumerate()
        .par_bridge()
        .for_each(|(a, slice)| {
            let xi = grid.angular().node(a);
            let xi_d = xi.depth_component();
            let q_slice = scatter.angle_slice(a);
            for (node, out_v) in slice.iter_mut().enumerate() {
                let x = grid.node_position(node);
                let depth = x[D - 1];
                let tau = if xi_d > 0.0 {
                    depth / xi_d
                } else if xi_d < 0.0 {
                    (depth - 1.0) / xi_d
                } else {
                    f64::INFINITY
                };
                let length = tau.min(s_max);
                *out_v = ray_collision_integral(m, &x, xi, length, quad, |y, _| {
                    grid.interp_spatial(q_slice, y)
                });
            }
        });
    out
}

/// One term of the Neumann sum on the collocation grid.
#[derive(Debug, Clone)]
pub struct NeumannIterate {
    pub n: usize,
    pub sup_norm: f64,
    /// Present when the solve retains full grids.
    pub values: Option<GridValues>,
}

/// One collision step: the next iterate from the previous one.
pub fn iterate_step<const D: usize>(
    m: &Medium<D>,
    grid: &CollocationGrid<D>,
    prev: &NeumannIterate,
    quad: &QuadratureSpec,
) -> NeumannIterate {
    let values = prev
        .values
        .as_ref()
        .expect("iterate_step needs retained grid values");
    let next = apply_transport_step(m, grid, values, quad);
    NeumannIterate {
        n: prev.n + 1,
        sup_norm: next.sup_norm(),
        values: Some(next),
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iterations: usize,
    pub retain_iterates: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iterations: 60,
            retain_iterates: true,
        }
    }
}

/// Convergence record of a solve.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SolveMeta {
    /// Index of the last computed iterate.
    pub iterations: usize,
    pub final_increment: f64,
    /// Guaranteed sup bound on the discarded tail: M^(N+1) sup|f0| / (1 - M).
    pub certified_remainder: f64,
    pub m_ratio: f64,
    pub sup_f0_data: f64,
    pub sup_solution: f64,
    pub tol: f64,
    pub iterate_norms: Vec<f64>,
    /// False when the boundary data has no constant lateral tails, in which
    /// case the collocation values are approximations near the window edge.
    pub lateral_tails_ok: bool,
}

/// Converged solution: closed-form ballistic evaluator plus the accumulated
/// scattered grid, with retained iterates and the convergence certificate.
#[derive(Debug, Clone)]
pub struct SolutionField<const D: usize> {
    medium: Medium<D>,
    boundary: BoundaryData<D>,
    grid: CollocationGrid<D>,
    quad: QuadratureSpec,
    f0_grid: GridValues,
    f1_grid: GridValues,
    total_grid: GridValues,
    scatter_total: GridValues,
    iterates: Vec<NeumannIterate>,
    meta: SolveMeta,
    validation: ValidationReport,
}

/// Sum the Neumann series on the grid until both the empirical increment and
/// the geometric certificate fall below the tolerance.
pub fn neumann_solve<const D: usize>(
    m: &Medium<D>,
    b: &BoundaryData<D>,
    grid: CollocationGrid<D>,
    quad: &QuadratureSpec,
    opts: &SolveOptions,
) -> Result<SolutionField<D>, SolveError> {
    let validation = m.validate(grid.domain(), quad)?;
    if !validation.pass {
        return Err(SolveError::InvalidMedium(Box::new(validation)));
    }
    let m_ratio = validation.m_ratio;
    let sup_f0_data = b.sup_norm();

    // Ballistic grid.
    let n_sp = grid.n_spatial();
    let n_ang = grid.n_angular();
    let mut f0_grid = GridValues::zeros(n_ang, n_sp);
    let mut fill_err: Option<String> = None;
    {
        let results: Vec<Result<Vec<f64>, SolveError>> = (0..n_ang)
            .into_par_iter()
            .map(|a| {
                let xi = grid.angular().node(a);
                (0..n_sp)
                    .map(|node| {
                        let x = grid.node_position(node);
                        eval_f0_raw(m, b, &x, xi, quad)
                    })
                    .collect()
            })
            .collect();
        for (a, row) in results.into_iter().enumerate() {
            match row {
                Ok(vals) => {
                    for (node, v) in vals.into_iter().enumerate() {
                        f0_grid.set(a, node, v);
                    }
                }
                Err(e) => {
                    fill_err.get_or_insert(e.to_string());
                }
            };
        }
    }
    if let Some(e) = fill_err {
        return Err(SolveError::Medium(MediumError::Grid(e)));
    }

    let mut iterates = vec![NeumannIterate {
        n: 0,
        sup_norm: f0_grid.sup_norm(),
        values: Some(f0_grid.clone()),
    }];
    let mut f1_grid = GridValues::zeros(n_ang, n_sp);
    let mut final_increment = 0.0;
    let mut certified_remainder = 0.0;

    // A medium with no scattering truncates the series after the ballistic
    // term exactly.
    if m.mu_s.max_value() != 0.0 {
        let mut certified = false;
        let mut prev = iterates[0].clone();
        for n in 1..=opts.max_iterations {
            let next = iterate_step(m, &grid, &prev, quad);
            f1_grid.add_assign(next.values.as_ref().unwrap());
            final_increment = next.sup_norm;
            let geometric = m_ratio.powi(n as i32) * sup_f0_data;
            certified_remainder = geometric * m_ratio / (1.0 - m_ratio);
            let keep = NeumannIterate {
                n: next.n,
                sup_norm: next.sup_norm,
                values: if opts.retain_iterates {
                    next.values.clone()
                } else {
                    None
                },
            };
            iterates.push(keep);
            prev = next;
            if final_increment <= opts.tol && geometric <= opts.tol * (1.0 - m_ratio) {
                certified = true;
                break;
            }
        }
        if !certified {
            return Err(SolveError::NotCertified {
                iterations: opts.max_iterations,
                empirical_increment: final_increment,
                certified_remainder,
            });
        }
    }

    if !opts.retain_iterates {
        if let Some(first) = iterates.first_mut() {
            first.values = None;
        }
    }

    let mut total_grid = f0_grid.clone();
    total_grid.add_assign(&f1_grid);
    let scatter_total = scatter_integral_grid(m, &grid, &total_grid);

    let meta = SolveMeta {
        iterations: iterates.last().map(|it| it.n).unwrap_or(0),
        final_increment,
        certified_remainder,
        m_ratio,
        sup_f0_data,
        sup_solution: total_grid.sup_norm(),
        tol: opts.tol,
        iterate_norms: iterates.iter().map(|it| it.sup_norm).collect(),
        lateral_tails_ok: b.has_constant_lateral_tails(),
    };

    Ok(SolutionField {
        medium: m.clone(),
        boundary: b.clone(),
        grid,
        quad: quad.clone(),
        f0_grid,
        f1_grid,
        total_grid,
        scatter_total,
        iterates,
        meta,
        validation,
    })
}

impl<const D: usize> SolutionField<D> {
    pub fn medium(&self) -> &Medium<D> {
        &self.medium
    }

    pub fn boundary(&self) -> &BoundaryData<D> {
        &self.boundary
    }

    pub fn grid(&self) -> &CollocationGrid<D> {
        &self.grid
    }

    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.quad
    }

    pub fn meta(&self) -> &SolveMeta {
        &self.meta
    }

    pub fn validation(&self) -> &ValidationReport {
        &self.validation
    }

    pub fn iterates(&self) -> &[NeumannIterate] {
        &self.iterates
    }

    pub fn f0_grid(&self) -> &GridValues {
        &self.f0_grid
    }

    pub fn f1_grid(&self) -> &GridValues {
        &self.f1_grid
    }

    pub fn total_grid(&self) -> &GridValues {
        &self.total_grid
    }

    /// Closed-form ballistic part.
    pub fn eval_ballistic(&self, p: &PhasePoint<D>) -> Result<f64, SolveError> {
        eval_f0(&self.medium, &self.boundary, p, &self.quad)
    }

    /// Interpolated scattered part.
    pub fn eval_scattered(&self, p: &PhasePoint<D>) -> f64 {
        self.f1_grid
            .eval(&self.grid, p.position().coords(), p.direction())
    }

    /// Full solution: closed-form ballistic plus interpolated scattered part.
    pub fn eval(&self, p: &PhasePoint<D>) -> Result<f64, SolveError> {
        Ok(self.eval_ballistic(p)? + self.eval_scattered(p))
    }

    /// Full solution with the scattered part re-integrated along the
    /// characteristic from the converged scatter source. This evaluation is
    /// differentiable along the ray (the quantity the residual checks probe),
    /// unlike the piecewise-linear interpolant. Quadrature panels are split
    /// where the ray crosses interpolation node planes, so the value varies
    /// smoothly under small shifts of the endpoint.
    pub fn eval_refined(&self, p: &PhasePoint<D>) -> Result<f64, SolveError> {
        let x = p.position().coords();
        let xi = p.direction();
        let f0 = self.eval_ballistic(p)?;
        let tau = tau_minus(p);
        let s_max = self.quad.truncation_length(self.medium.mu_t_lower());
        let length = tau.min(s_max);
        if !(length > 0.0) {
            return Ok(f0);
        }
        let breaks = self.grid.cell_crossings(x, xi, length);
        let stencil = self.grid.angular().interp_stencil(xi);
        let mut err: Option<SolveError> = None;
        let scattered = gl8_with_breakpoints(
            0.0,
            length,
            self.quad.ray_panels_per_unit,
            &breaks,
            |s| {
                let mut y = *x;
                for (yi, di) in y.iter_mut().zip(xi.components()) {
                    *yi -= s * di;
                }
                y[D - 1] = y[D - 1].clamp(0.0, 1.0);
                let mu_s = self.medium.mu_s.eval(&y);
                if mu_s == 0.0 {
                    return 0.0;
                }
                let optical = match self.medium.optical_depth(x, xi, s, &self.quad) {
                    Ok(v) => v,
                    Err(e) => {
                        err.get_or_insert(e.into());
                        return 0.0;
                    }
                };
                let source: f64 = stencil
                    .iter()
                    .map(|&(a, w)| {
                        w * self.grid.interp_spatial(self.scatter_total.angle_slice(a), &y)
                    })
                    .sum();
                mu_s * (-optical).exp() * source
            },
        );
        match err {
            None => Ok(f0 + scattered),
            Some(e) => Err(e),
        }
    }

    /// Scattering source of the converged field at a phase point, through the
    /// same interpolated representation the refined evaluation integrates.
    pub fn scatter_source_at(&self, p: &PhasePoint<D>) -> f64 {
        let x = p.position().coords();
        let stencil = self.grid.angular().interp_stencil(p.direction());
        let q: f64 = stencil
            .iter()
            .map(|&(a, w)| w * self.grid.interp_spatial(self.scatter_total.angle_slice(a), x))
            .sum();
        self.medium.mu_s.eval(x) * q
    }

    /// Sup over collocation nodes of |ballistic + one collision step of the
    /// converged grid - converged grid|.
    pub fn fixed_point_residual(&self) -> f64 {
        let stepped = apply_transport_step(&self.medium, &self.grid, &self.total_grid, &self.quad);
        let mut worst = 0.0f64;
        for a in 0..self.grid.n_angular() {
            for node in 0..self.grid.n_spatial() {
                let lhs = self.f0_grid.at(a, node) + stepped.at(a, node);
                worst = worst.max((lhs - self.total_grid.at(a, node)).abs());
            }
        }
        worst
    }
}

/// The two hemisphere integrals of the survival-weighted backtraced boundary
/// data against the phase function.
#[derive(Debug, Clone, Copy)]
pub struct GParts {
    pub plus: f64,
    pub minus: f64,
}

impl GParts {
    pub fn total(&self) -> f64 {
        self.plus + self.minus
    }
}

/// Hemisphere-quadrature form of the collision kernel of the first scattered
/// iterate, split by hemisphere.
pub fn eval_g<const D: usize>(
    m: &Medium<D>,
    b: &BoundaryData<D>,
    x: &[f64; D],
    xi: &Direction<D>,
    angular: &AngularGrid<D>,
    quad: &QuadratureSpec,
) -> Result<GParts, SolveError> {
    let mut plus = 0.0;
    let mut minus = 0.0;
    for (i, (xi_p, w)) in angular.iter().enumerate() {
        let _ = i;
        let f0 = eval_f0_raw(m, b, x, xi_p, quad)?;
        if f0 == 0.0 {
            continue;
        }
        let term = w * m.phase.eval(x, xi, xi_p) * f0;
        if xi_p.depth_component() > 0.0 {
            plus += term;
        } else {
            minus += term;
        }
    }
    Ok(GParts { plus, minus })
}

/// The upper-hemisphere part of the collision kernel computed as an integral
/// over the bottom boundary plane, with the change-of-variables weight
/// depth / |x - y0|^d, truncated where the survival factor is below the tail
/// threshold. Agrees with the hemisphere form up to quadrature error.
pub fn eval_g_plus_boundary_form<const D: usize>(
    m: &Medium<D>,
    b: &BoundaryData<D>,
    x: &[f64; D],
    xi: &Direction<D>,
    quad: &QuadratureSpec,
) -> Result<f64, SolveError> {
    let depth = x[D - 1];
    assert!(depth > 0.0 && depth < 1.0, "needs an interior point");
    let s_max = quad.truncation_length(m.mu_t_lower());
    if s_max <= depth {
        return Ok(0.0);
    }
    let radius = (s_max * s_max - depth * depth).sqrt();
    let panel_len = (0.5 * depth).min(1.0 / quad.ray_panels_per_unit);
    let panels = ((2.0 * radius) / panel_len).ceil().max(1.0) as usize;

    let integrand = |lateral: &[f64]| -> Result<f64, SolveError> {
        let mut y0 = [0.0f64; D];
        y0[..D - 1].copy_from_slice(lateral);
        y0[D - 1] = 0.0;
        let mut diff = *x;
        for (d, y) in diff.iter_mut().zip(y0.iter()) {
            *d -= y;
        }
        let rho: f64 = diff.iter().map(|c| c * c).sum::<f64>().sqrt();
        if rho > s_max {
            return Ok(0.0);
        }
        let omega = Direction::from_vector(diff)?;
        let foot = PhasePoint::new(crate::geometry::Position(y0), omega)?;
        let data = b.eval(&foot)?;
        if data == 0.0 {
            return Ok(0.0);
        }
        let attenuation = m.survival(x, &omega, rho, quad)?;
        Ok(m.phase.eval(x, xi, &omega) * attenuation * data * depth / rho.powi(D as i32))
    };

    match D {
        2 => {
            let mut err: Option<SolveError> = None;
            let v = crate::quadrature::gl8_composite(
                x[0] - radius,
                x[0] + radius,
                panels,
                |y1| match integrand(&[y1]) {
                    Ok(v) => v,
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                },
            );
            match err {
                None => Ok(v),
                Some(e) => Err(e),
            }
        }
        3 => {
            let mut err: Option<SolveError> = None;
            let v = crate::quadrature::gl8_composite(x[0] - radius, x[0] + radius, panels, |y1| {
                crate::quadrature::gl8_composite(x[1] - radius, x[1] + radius, panels, |y2| {
                    match integrand(&[y1, y2]) {
                        Ok(v) => v,
                        Err(e) => {
                            err.get_or_insert(e);
                            0.0
                        }
                    }
                })
            });
            match err {
                None => Ok(v),
                Some(e) => Err(e),
            }
        }
        _ => Err(SolveError::Quadrature(
            QuadratureError::UnsupportedDimension(D),
        )),
    }
}

/// First scattered iterate by direct nested quadrature (no collocation
/// grid): the ray integral of the survival-weighted collision kernel.
/// `breakpoints` are ray parameters where the integrand is known to jump;
/// panels are split there so each piece stays smooth.
pub fn eval_f1_direct<const D: usize>(
    m: &Medium<D>,
    b: &BoundaryData<D>,
    x: &[f64; D],
    xi: &Direction<D>,
    angular: &AngularGrid<D>,
    quad: &QuadratureSpec,
    breakpoints: &[f64],
) -> Result<f64, SolveError> {
    let depth = x[D - 1];
    assert!((0.0..=1.0).contains(&depth), "point must be in the slab");
    let xi_d = xi.depth_component();
    let tau = if xi_d > 0.0 {
        depth / xi_d
    } else if xi_d < 0.0 {
        (depth - 1.0) / xi_d
    } else {
        f64::INFINITY
    };
    let length = tau.min(quad.truncation_length(m.mu_t_lower()));
    let mut err: Option<SolveError> = None;
    let v = gl8_with_breakpoints(0.0, length, quad.ray_panels_per_unit, breakpoints, |s| {
        let mut y = *x;
        for (yi, di) in y.iter_mut().zip(xi.components()) {
            *yi -= s * di;
        }
        y[D - 1] = y[D - 1].clamp(0.0, 1.0);
        let mu_s = m.mu_s.eval(&y);
        if mu_s == 0.0 {
            return 0.0;
        }
        let optical = match m.optical_depth(x, xi, s, quad) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e.into());
                return 0.0;
            }
        };
        let g = match eval_g(m, b, &y, xi, angular, quad) {
            Ok(g) => g.total(),
            Err(e) => {
                err.get_or_insert(e);
                return 0.0;
            }
        };
        mu_s * (-optical).exp() * g
    });
    match err {
        None => Ok(v),
        Some(e) => Err(e),
    }
}
