//! Adaptive Dormand-Prince 5(4) integration with PI step-size control and
//! 4th-order dense output.
//!
//! The fast handling/searching exchange makes the scaled system stiff-ish
//! (rates up to `1/eps = 1e4` per year), but still within reach of an
//! explicit pair with a step budget; see the module-level stats for how many
//! steps a run took. States are population vectors, so components driven
//! below zero by an accepted step are clamped to `positivity_floor` and the
//! event is counted: the vector fields are forward-invariant on the orthant,
//! so clamp events indicate tolerance trouble rather than model behavior.

use crate::error::{Error, Result};

/// Tolerances and budgets for one integration run.
#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    /// Relative tolerance on the local error (per step).
    pub rel_tol: f64,
    /// Absolute tolerance on the local error, in individuals.
    pub abs_tol: f64,
    /// Budget of attempted steps (accepted + rejected).
    pub max_steps: u64,
    /// Initial step size; `None` selects one automatically.
    pub initial_step: Option<f64>,
    /// Value assigned to components driven below zero.
    pub positivity_floor: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_steps: 50_000_000,
            initial_step: None,
            positivity_floor: 0.0,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        IntegratorConfig {
            rel_tol,
            abs_tol,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(Error::invalid("tolerance", "rel_tol and abs_tol must be positive"));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps", "step budget must be at least 1"));
        }
        Ok(())
    }
}

/// Work counters for one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub steps_accepted: u64,
    pub steps_rejected: u64,
    pub rhs_evals: u64,
    /// Components clamped to the positivity floor (steps and dense output).
    pub clamp_events: u64,
}

/// Time grid plus state samples from one integration run.
#[derive(Debug, Clone)]
pub struct Trajectory<const D: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; D]>,
    pub stats: StepStats,
}

impl<const D: usize> Trajectory<D> {
    /// State at the final grid point.
    pub fn terminal(&self) -> [f64; D] {
        *self.states.last().expect("trajectory has at least one sample")
    }
}

/// Uniform output grid `t0, t0+step, ..., t1` (the endpoint is always
/// included, deduplicated against roundoff).
pub fn uniform_grid(t0: f64, t1: f64, step: f64) -> Vec<f64> {
    assert!(step > 0.0 && t1 > t0);
    let n = ((t1 - t0) / step).round() as usize;
    let mut grid: Vec<f64> = (0..=n)
        .map(|i| t0 + step * i as f64)
        .take_while(|&t| t < t1 - 1e-12 * step)
        .collect();
    grid.push(t1);
    grid
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Difference between the 5th- and 4th-order weights (error estimator).
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
/// Dense-output weights for the 4th-order interpolant.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

// PI step controller constants (classic values for this pair).
const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 10.0;

/// Integrate `y' = rhs(t, y)` from `t0` to `t1`, sampling at `grid`.
///
/// `grid` must be strictly increasing and contained in `[t0, t1]`; dense
/// output fills the samples without re-stepping. Local error per step is held
/// to `rel_tol * |y| + abs_tol` componentwise (RMS-combined).
pub fn integrate<const D: usize, F>(
    mut rhs: F,
    y0: [f64; D],
    t0: f64,
    t1: f64,
    grid: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory<D>>
where
    F: FnMut(f64, &[f64; D]) -> [f64; D],
{
    cfg.validate()?;
    if !(t1 > t0) {
        return Err(Error::invalid("t1", format!("need t0 < t1, got [{t0}, {t1}]")));
    }
    for w in grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::invalid("grid", "output times must be strictly increasing"));
        }
    }
    if let (Some(&first), Some(&last)) = (grid.first(), grid.last()) {
        if first < t0 - 1e-12 * (1.0 + t0.abs()) || last > t1 + 1e-12 * (1.0 + t1.abs()) {
            return Err(Error::invalid("grid", "output times must lie within [t0, t1]"));
        }
    }
    if y0.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::invalid("y0", "initial state must be componentwise nonnegative"));
    }

    let mut stats = StepStats::default();
    let mut times = Vec::with_capacity(grid.len());
    let mut states = Vec::with_capacity(grid.len());

    let mut gi = 0;
    // Emit grid points that coincide with t0.
    while gi < grid.len() && grid[gi] <= t0 + 1e-14 * (1.0 + t0.abs()) {
        times.push(grid[gi]);
        states.push(y0);
        gi += 1;
    }

    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    stats.rhs_evals += 1;
    check_finite(&k1, t)?;

    let h_max = t1 - t0;
    let mut h = match cfg.initial_step {
        Some(h0) => h0.min(h_max),
        None => {
            let (h0, evals) = initial_step(&mut rhs, t0, &y, &k1, cfg, h_max);
            stats.rhs_evals += evals;
            h0
        }
    };
    let mut fac_old: f64 = 1e-4;
    let mut rejected_last = false;

    let mut k = [[0.0; D]; 7];

    while t < t1 {
        if stats.steps_accepted + stats.steps_rejected >= cfg.max_steps {
            return Err(Error::BudgetExhausted {
                steps: stats.steps_accepted + stats.steps_rejected,
                t,
            });
        }
        if h.abs() < 100.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t, h });
        }
        let last_step = t + h >= t1;
        if last_step {
            h = t1 - t;
        }

        // Stages; k1 is carried over (FSAL).
        k[0] = k1;
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j] * h;
                if a != 0.0 {
                    for c in 0..D {
                        ys[c] += a * kj[c];
                    }
                }
            }
            k[s] = rhs(t + C[s] * h, &ys);
            stats.rhs_evals += 1;
        }
        // Stage 7 uses the b-row of A, so ys there is the 5th-order solution.
        let mut y_new = y;
        for (j, kj) in k.iter().enumerate().take(6) {
            let a = A[6][j] * h;
            if a != 0.0 {
                for c in 0..D {
                    y_new[c] += a * kj[c];
                }
            }
        }

        // Error norm (RMS of componentwise scaled error).
        let mut err_sq = 0.0;
        for c in 0..D {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[c];
            }
            e *= h;
            let sc = cfg.abs_tol + cfg.rel_tol * y[c].abs().max(y_new[c].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / D as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::NonFiniteDerivative { t });
        }

        let fac11 = err.powf(EXPO1);
        if err <= 1.0 {
            // Accept.
            let t_new = if last_step { t1 } else { t + h };
            let mut k_end = k[6];

            let mut clamped = false;
            for c in 0..D {
                if y_new[c] < 0.0 {
                    y_new[c] = cfg.positivity_floor;
                    stats.clamp_events += 1;
                    clamped = true;
                }
            }
            if clamped {
                k_end = rhs(t_new, &y_new);
                stats.rhs_evals += 1;
            }
            check_finite(&y_new, t_new)?;

            // Dense output over (t, t_new].
            if gi < grid.len() && grid[gi] <= t_new + 1e-14 * (1.0 + t_new.abs()) {
                let cont = dense_coefficients(&y, &y_new, &k, &k_end, h);
                while gi < grid.len() {
                    let tg = grid[gi];
                    if tg > t_new + 1e-14 * (1.0 + t_new.abs()) {
                        break;
                    }
                    let mut yg = if (tg - t_new).abs() <= 1e-14 * (1.0 + t_new.abs()) {
                        y_new
                    } else {
                        eval_dense(&cont, (tg - t) / h)
                    };
                    for v in yg.iter_mut() {
                        if *v < 0.0 {
                            *v = cfg.positivity_floor;
                            stats.clamp_events += 1;
                        }
                    }
                    times.push(tg);
                    states.push(yg);
                    gi += 1;
                }
            }

            t = t_new;
            y = y_new;
            k1 = k_end;
            stats.steps_accepted += 1;

            let mut fac = fac11 / fac_old.powf(BETA);
            fac = (fac / SAFETY).clamp(1.0 / MAX_SCALE, 1.0 / MIN_SCALE);
            fac_old = err.max(1e-4);
            let mut h_new = h / fac;
            if rejected_last {
                h_new = h_new.min(h);
                rejected_last = false;
            }
            h = h_new.min(h_max);
        } else {
            // Reject and shrink.
            stats.steps_rejected += 1;
            rejected_last = true;
            h /= (fac11 / SAFETY).min(1.0 / MIN_SCALE);
        }
    }

    Ok(Trajectory { times, states, stats })
}

fn check_finite<const D: usize>(y: &[f64; D], t: f64) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteDerivative { t })
    }
}

/// Automatic initial step (the classic two-derivative heuristic for a
/// 5th-order pair). Returns the step and the number of extra evaluations.
fn initial_step<const D: usize, F>(
    rhs: &mut F,
    t0: f64,
    y0: &[f64; D],
    f0: &[f64; D],
    cfg: &IntegratorConfig,
    h_max: f64,
) -> (f64, u64)
where
    F: FnMut(f64, &[f64; D]) -> [f64; D],
{
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for c in 0..D {
        let sc = cfg.abs_tol + cfg.rel_tol * y0[c].abs();
        dnf += (f0[c] / sc) * (f0[c] / sc);
        dny += (y0[c] / sc) * (y0[c] / sc);
    }
    let mut h0 = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        0.01 * (dny / dnf).sqrt()
    };
    h0 = h0.min(h_max);

    let mut y1 = *y0;
    for c in 0..D {
        y1[c] += h0 * f0[c];
    }
    let f1 = rhs(t0 + h0, &y1);

    let mut der2 = 0.0;
    for c in 0..D {
        let sc = cfg.abs_tol + cfg.rel_tol * y0[c].abs();
        der2 += ((f1[c] - f0[c]) / sc) * ((f1[c] - f0[c]) / sc);
    }
    let der2 = der2.sqrt() / h0;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(0.2)
    };
    ((100.0 * h0).min(h1).min(h_max), 1)
}

/// Interpolation coefficients for one accepted step.
fn dense_coefficients<const D: usize>(
    y0: &[f64; D],
    y1: &[f64; D],
    k: &[[f64; D]; 7],
    k_end: &[f64; D],
    h: f64,
) -> [[f64; D]; 5] {
    let mut cont = [[0.0; D]; 5];
    for c in 0..D {
        let ydiff = y1[c] - y0[c];
        let bspl = h * k[0][c] - ydiff;
        cont[0][c] = y0[c];
        cont[1][c] = ydiff;
        cont[2][c] = bspl;
        cont[3][c] = ydiff - h * k_end[c] - bspl;
        cont[4][c] = h
            * (D1 * k[0][c] + D3 * k[2][c] + D4 * k[3][c] + D5 * k[4][c] + D6 * k[5][c]
                + D7 * k_end[c]);
    }
    cont
}

fn eval_dense<const D: usize>(cont: &[[f64; D]; 5], theta: f64) -> [f64; D] {
    let th1 = 1.0 - theta;
    let mut out = [0.0; D];
    for c in 0..D {
        out[c] = cont[0][c]
            + theta
                * (cont[1][c] + th1 * (cont[2][c] + theta * (cont[3][c] + th1 * cont[4][c])));
    }
    out
}
