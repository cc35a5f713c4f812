//! CSV artifact writers. All floats are formatted with a fixed scientific
//! notation so identical runs produce byte-identical files.

use crate::analysis::{ConvergenceTable, CounterexampleReport, JumpEstimate};
use crate::solver::SolutionField;

pub fn fmt_float(v: f64) -> String {
    format!("{v:.12e}")
}

/// Full solution grid. d=2 uses the pinned header `x1,x2,theta,f,F0,F1`;
/// d=3 lists direction components instead of the polar angle.
pub fn solution_csv<const D: usize>(sol: &SolutionField<D>) -> String {
    let grid = sol.grid();
    let mut out = String::new();
    if D == 2 {
        out.push_str("x1,x2,theta,f,F0,F1\n");
    } else {
        for i in 1..=D {
            out.push_str(&format!("x{i},"));
        }
        for i in 1..=D {
            out.push_str(&format!("xi{i},"));
        }
        out.push_str("f,F0,F1\n");
    }
    for a in 0..grid.n_angular() {
        for node in 0..grid.n_spatial() {
            let x = grid.node_position(node);
            let f0 = sol.f0_grid().at(a, node);
            let f1 = sol.f1_grid().at(a, node);
            let mut row = String::new();
            for c in x.iter() {
                row.push_str(&fmt_float(*c));
                row.push(',');
            }
            if D == 2 {
                row.push_str(&fmt_float(grid.angular().theta(a)));
                row.push(',');
            } else {
                for c in grid.angular().node(a).components().iter() {
                    row.push_str(&fmt_float(*c));
                    row.push(',');
                }
            }
            row.push_str(&fmt_float(f0 + f1));
            row.push(',');
            row.push_str(&fmt_float(f0));
            row.push(',');
            row.push_str(&fmt_float(f1));
            row.push('\n');
            out.push_str(&row);
        }
    }
    out
}

/// One retained iterate as CSV (same spatial/angular layout as the solution).
pub fn iterate_csv<const D: usize>(sol: &SolutionField<D>, n: usize) -> Option<String> {
    let it = sol.iterates().iter().find(|it| it.n == n)?;
    let values = it.values.as_ref()?;
    let grid = sol.grid();
    let mut out = String::from("angle_index,spatial_index,value\n");
    for a in 0..grid.n_angular() {
        for node in 0..grid.n_spatial() {
            out.push_str(&format!("{a},{node},{}\n", fmt_float(values.at(a, node))));
        }
    }
    Some(out)
}

pub fn convergence_csv(table: &ConvergenceTable) -> String {
    let mut out = String::from("n,sup_norm,ratio,geometric_bound,certified_remainder\n");
    for row in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.n,
            fmt_float(row.sup_norm),
            row.ratio.map(fmt_float).unwrap_or_default(),
            fmt_float(row.geometric_bound),
            fmt_float(row.certified_remainder),
        ));
    }
    out
}

/// Ray geometry for seeded discontinuities.
pub fn rays_csv<const D: usize>(rays: &[crate::boundary::DiscontinuityRay<D>]) -> String {
    let mut out = String::new();
    out.push_str("ray");
    for i in 1..=D {
        out.push_str(&format!(",x{i}"));
    }
    for i in 1..=D {
        out.push_str(&format!(",xi{i}"));
    }
    out.push_str(",length,jump\n");
    for (k, ray) in rays.iter().enumerate() {
        out.push_str(&k.to_string());
        for c in ray.seed().point().position().coords() {
            out.push(',');
            out.push_str(&fmt_float(*c));
        }
        for c in ray.seed().point().direction().components() {
            out.push(',');
            out.push_str(&fmt_float(*c));
        }
        out.push(',');
        out.push_str(&fmt_float(ray.length()));
        out.push(',');
        out.push_str(&fmt_float(ray.seed().jump()));
        out.push('\n');
    }
    out
}

/// Measured against predicted jumps along seeded rays.
pub fn jump_scan_csv(rows: &[(usize, JumpEstimate, f64)]) -> String {
    let mut out =
        String::from("ray,t,measured_jump,predicted_jump,uncertainty,f1_oscillation\n");
    for (ray, est, osc) in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            ray,
            fmt_float(est.t),
            fmt_float(est.measured),
            fmt_float(est.predicted),
            fmt_float(est.uncertainty),
            fmt_float(*osc),
        ));
    }
    out
}

/// Lateral scan of the collision kernel through the focus point.
pub fn g_scan_csv(rows: &[(f64, f64, f64, f64)]) -> String {
    let mut out = String::from("x1,g,g_plus,g_minus\n");
    for (x1, g, gp, gm) in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_float(*x1),
            fmt_float(*g),
            fmt_float(*gp),
            fmt_float(*gm)
        ));
    }
    out
}

pub fn fd_mismatch_csv(report: &CounterexampleReport) -> String {
    let mut out = String::from("h,mismatch_at_focus,mismatch_at_control\n");
    for row in &report.fd_rows {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_float(row.h),
            fmt_float(row.mismatch_at_focus),
            fmt_float(row.mismatch_at_control)
        ));
    }
    out
}

/// Monte Carlo cross-check rows: probe coordinates, deterministic value,
/// estimate, standard error, z-score.
pub fn mc_csv<const D: usize>(rows: &[(Vec<f64>, f64, f64, f64, f64)]) -> String {
    let mut out = String::new();
    for i in 1..=D {
        out.push_str(&format!("x{i},"));
    }
    for i in 1..=D {
        out.push_str(&format!("xi{i},"));
    }
    out.push_str("deterministic,mc_mean,mc_std_error,z\n");
    for (coords, det, mean, se, z) in rows {
        for c in coords {
            out.push_str(&fmt_float(*c));
            out.push(',');
        }
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_float(*det),
            fmt_float(*mean),
            fmt_float(*se),
            fmt_float(*z)
        ));
    }
    out
}
