//! Least-squares estimation of reduced-model parameters against the
//! 1900-1920 Hudson Bay hare-lynx record.
//!
//! The objective integrates the reduced model from the first data row and
//! sums squared residuals of both series in individuals, equally weighted
//! (the two series share units and magnitude). Minimization is derivative-
//! free Nelder-Mead over the logarithms of the free parameters, which keeps
//! every trial point positive without constraint machinery.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::{integrate, IntegratorConfig};
use crate::model::ReducedParams;

/// Hudson Bay Company hare/lynx record, 1900-1920, in thousands.
pub const HARE_LYNX_THOUSANDS: [(i32, f64, f64); 21] = [
    (1900, 30.0, 4.0),
    (1901, 47.2, 6.1),
    (1902, 70.2, 9.8),
    (1903, 77.4, 35.2),
    (1904, 36.3, 59.4),
    (1905, 20.6, 41.7),
    (1906, 18.1, 19.0),
    (1907, 21.4, 13.0),
    (1908, 22.0, 8.3),
    (1909, 25.4, 9.1),
    (1910, 27.1, 7.4),
    (1911, 40.3, 8.0),
    (1912, 57.0, 12.3),
    (1913, 76.6, 19.5),
    (1914, 52.3, 45.7),
    (1915, 19.5, 51.1),
    (1916, 11.2, 29.7),
    (1917, 7.6, 15.8),
    (1918, 14.6, 9.7),
    (1919, 16.2, 10.1),
    (1920, 24.7, 8.6),
];

/// Reference reduced-model parameters for the hare-lynx system
/// (`mu_n = 1`, `mu_p = 1/7` fixed; the rest from the published fit).
pub fn hare_lynx_params() -> ReducedParams {
    ReducedParams::new(1.6567, 1.0, 8.5127, 1.0 / 7.0, 9.24, 303_000.0, 3.2e-5, 0.11)
        .expect("reference parameters are valid")
}

/// Yearly population counts in individuals (thousands scaled by 1e3).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub years: Vec<i32>,
    pub hares: Vec<f64>,
    pub lynx: Vec<f64>,
}

impl Dataset {
    /// The embedded hare-lynx record, scaled to individuals.
    pub fn embedded() -> Dataset {
        let mut d = Dataset {
            years: Vec::with_capacity(21),
            hares: Vec::with_capacity(21),
            lynx: Vec::with_capacity(21),
        };
        for (year, h, l) in HARE_LYNX_THOUSANDS {
            d.years.push(year);
            d.hares.push(h * 1e3);
            d.lynx.push(l * 1e3);
        }
        d
    }

    /// Parse a CSV with header `year,hares_thousands,lynx_thousands`.
    pub fn from_csv_str(text: &str) -> Result<Dataset> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            row: 0,
            message: "empty file".into(),
        })?;
        let header_fields: Vec<&str> = header.split(',').map(str::trim).collect();
        if header_fields != ["year", "hares_thousands", "lynx_thousands"] {
            return Err(Error::Parse {
                row: 1,
                message: format!("expected header year,hares_thousands,lynx_thousands, got {header:?}"),
            });
        }

        let mut d = Dataset {
            years: Vec::new(),
            hares: Vec::new(),
            lynx: Vec::new(),
        };
        for (idx, line) in lines {
            let row = idx + 1; // 1-based, header is row 1
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    row,
                    message: format!("expected 3 fields, got {}", fields.len()),
                });
            }
            let year: i32 = fields[0].parse().map_err(|e| Error::Parse {
                row,
                message: format!("bad year {:?}: {e}", fields[0]),
            })?;
            let hares: f64 = fields[1].parse().map_err(|e| Error::Parse {
                row,
                message: format!("bad hare count {:?}: {e}", fields[1]),
            })?;
            let lynx: f64 = fields[2].parse().map_err(|e| Error::Parse {
                row,
                message: format!("bad lynx count {:?}: {e}", fields[2]),
            })?;
            d.years.push(year);
            d.hares.push(hares * 1e3);
            d.lynx.push(lynx * 1e3);
        }
        d.validate()?;
        Ok(d)
    }

    pub fn from_csv_path(path: &std::path::Path) -> Result<Dataset> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
            row: 0,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Dataset::from_csv_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.years.len() != self.hares.len() || self.years.len() != self.lynx.len() {
            return Err(Error::Parse {
                row: 0,
                message: "column lengths differ".into(),
            });
        }
        if self.years.len() < 2 {
            return Err(Error::Parse {
                row: 0,
                message: "need at least two rows".into(),
            });
        }
        for (i, w) in self.years.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::Parse {
                    row: i + 3, // header + 1-based + offending second row
                    message: format!("years must be strictly increasing, got {} after {}", w[1], w[0]),
                });
            }
        }
        for (i, (&h, &l)) in self.hares.iter().zip(&self.lynx).enumerate() {
            if !(h > 0.0) || !(l > 0.0) {
                return Err(Error::Parse {
                    row: i + 2,
                    message: "counts must be positive".into(),
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.years.len()
    }

    pub fn is_empty(&self) -> bool {
        self.years.is_empty()
    }

    /// Sum of squares of both series, a scale reference for residuals.
    pub fn norm_sq(&self) -> f64 {
        self.hares.iter().chain(&self.lynx).map(|v| v * v).sum()
    }
}

/// Integrate the reduced model from the first data row and return the model
/// trajectory sampled at the data years.
pub fn model_trajectory(
    p: &ReducedParams,
    d: &Dataset,
    cfg: &IntegratorConfig,
) -> Result<Vec<(f64, f64)>> {
    let t1 = (d.years[d.len() - 1] - d.years[0]) as f64;
    let grid: Vec<f64> = d.years.iter().map(|&y| (y - d.years[0]) as f64).collect();
    let traj = integrate(
        |_, y| p.vector_field(y),
        [d.hares[0], d.lynx[0]],
        0.0,
        t1,
        &grid,
        cfg,
    )?;
    Ok(traj.states.iter().map(|y| (y[0], y[1])).collect())
}

/// Residual sum of squares of the reduced model against the data, both
/// series weighted equally in individuals.
pub fn objective_sse(p: &ReducedParams, d: &Dataset, cfg: &IntegratorConfig) -> Result<f64> {
    let samples = model_trajectory(p, d, cfg)?;
    let mut sse = 0.0;
    for (i, (n, pp)) in samples.iter().enumerate() {
        let rn = n - d.hares[i];
        let rl = pp - d.lynx[i];
        sse += rn * rn + rl * rl;
    }
    if !sse.is_finite() {
        return Err(Error::NonFiniteDerivative { t: f64::NAN });
    }
    Ok(sse)
}

/// Parameters of [`ReducedParams`] that can be freed for fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FreeParam {
    BetaN,
    MuN,
    BetaP,
    MuP,
    Eta,
    K,
    Kappa,
    Chi,
}

impl FreeParam {
    pub const ALL: [FreeParam; 8] = [
        FreeParam::BetaN,
        FreeParam::MuN,
        FreeParam::BetaP,
        FreeParam::MuP,
        FreeParam::Eta,
        FreeParam::K,
        FreeParam::Kappa,
        FreeParam::Chi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FreeParam::BetaN => "beta_n",
            FreeParam::MuN => "mu_n",
            FreeParam::BetaP => "beta_p",
            FreeParam::MuP => "mu_p",
            FreeParam::Eta => "eta",
            FreeParam::K => "k",
            FreeParam::Kappa => "kappa",
            FreeParam::Chi => "chi",
        }
    }

    pub fn from_name(name: &str) -> Option<FreeParam> {
        FreeParam::ALL.iter().copied().find(|p| p.name() == name)
    }

    fn get(self, p: &ReducedParams) -> f64 {
        match self {
            FreeParam::BetaN => p.beta_n,
            FreeParam::MuN => p.mu_n,
            FreeParam::BetaP => p.beta_p,
            FreeParam::MuP => p.mu_p,
            FreeParam::Eta => p.eta,
            FreeParam::K => p.k,
            FreeParam::Kappa => p.kappa,
            FreeParam::Chi => p.chi,
        }
    }

    fn set(self, p: &mut ReducedParams, v: f64) {
        match self {
            FreeParam::BetaN => p.beta_n = v,
            FreeParam::MuN => p.mu_n = v,
            FreeParam::BetaP => p.beta_p = v,
            FreeParam::MuP => p.mu_p = v,
            FreeParam::Eta => p.eta = v,
            FreeParam::K => p.k = v,
            FreeParam::Kappa => p.kappa = v,
            FreeParam::Chi => p.chi = v,
        }
    }
}

/// Free/fixed partition plus optimizer settings.
///
/// `base` carries every parameter: free entries are the initial guess, the
/// rest stay fixed, so the partition covers the record exactly once.
#[derive(Debug, Clone)]
pub struct FitConfig {
    pub base: ReducedParams,
    pub free: Vec<FreeParam>,
    /// Positive bounds per free parameter, aligned with `free`.
    pub bounds: Vec<(f64, f64)>,
    /// Budget of objective evaluations.
    pub max_iters: usize,
    /// Log-space simplex diameter below which the search stops.
    pub tolerance: f64,
    pub integrator: IntegratorConfig,
}

impl FitConfig {
    /// Default hare-lynx configuration: `mu_n` and `mu_p` fixed, the six
    /// remaining parameters free, starting from the reference values.
    pub fn hare_lynx_default() -> FitConfig {
        let free = vec![
            FreeParam::BetaN,
            FreeParam::K,
            FreeParam::Kappa,
            FreeParam::Chi,
            FreeParam::BetaP,
            FreeParam::Eta,
        ];
        let base = hare_lynx_params();
        let bounds = free.iter().map(|f| default_bounds(*f, &base)).collect();
        FitConfig {
            base,
            free,
            bounds,
            max_iters: 4000,
            tolerance: 1e-6,
            integrator: IntegratorConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bounds.len() != self.free.len() {
            return Err(Error::invalid("bounds", "one interval per free parameter"));
        }
        for (i, f) in self.free.iter().enumerate() {
            if self.free[..i].contains(f) {
                return Err(Error::invalid("free", format!("{} listed twice", f.name())));
            }
            let (lo, hi) = self.bounds[i];
            if !(lo > 0.0 && hi > lo) {
                return Err(Error::invalid("bounds", "need 0 < lo < hi"));
            }
            let v = f.get(&self.base);
            if v < lo || v > hi {
                return Err(Error::invalid(
                    "initial_guess",
                    format!("{} = {v} outside [{lo}, {hi}]", f.name()),
                ));
            }
        }
        Ok(())
    }

    fn assemble(&self, log_x: &[f64]) -> ReducedParams {
        let mut p = self.base;
        for (i, f) in self.free.iter().enumerate() {
            f.set(&mut p, log_x[i].exp());
        }
        p
    }
}

/// Wide positive box around a reference value.
fn default_bounds(f: FreeParam, base: &ReducedParams) -> (f64, f64) {
    let v = f.get(base);
    (v / 100.0, v * 100.0)
}

/// Estimated parameters with optimizer diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub params: ReducedParams,
    /// Residual sum of squares (individuals^2, both series).
    pub sse: f64,
    /// Objective evaluations spent.
    pub iterations: usize,
    pub converged: bool,
}

/// Nelder-Mead minimization of [`objective_sse`] over the free parameters in
/// log-space, with one restart from the best vertex.
///
/// Trial points are clamped to the (log) bounds; infeasible or failed
/// integrations score `+inf`, so the simplex retreats from them. Exhausting
/// the budget returns the best point seen with `converged = false`.
pub fn fit(config: &FitConfig, d: &Dataset) -> Result<FitResult> {
    config.validate()?;
    d.validate()?;

    let mut objective = |log_x: &[f64]| -> f64 {
        let p = config.assemble(log_x);
        if p.validate().is_err() {
            return f64::INFINITY;
        }
        match objective_sse(&p, d, &config.integrator) {
            Ok(s) => s,
            Err(_) => f64::INFINITY,
        }
    };

    let x0: Vec<f64> = config.free.iter().map(|f| f.get(&config.base).ln()).collect();
    let f0 = objective(&x0);
    let mut total_evals = 1usize;
    if config.free.is_empty() {
        return Ok(FitResult {
            params: config.base,
            sse: f0,
            iterations: total_evals,
            converged: true,
        });
    }

    let log_bounds: Vec<(f64, f64)> = config.bounds.iter().map(|(lo, hi)| (lo.ln(), hi.ln())).collect();
    let mut best = (x0.clone(), f0);
    let mut converged = false;
    // One restart from the best vertex rebuilds the simplex and escapes
    // premature collapse along a single direction.
    for round in 0..2 {
        let budget = config.max_iters.saturating_sub(total_evals);
        if budget == 0 {
            converged = false;
            break;
        }
        let step = if round == 0 { 0.08 } else { 0.02 };
        let run = nelder_mead(
            &mut objective,
            &best.0,
            step,
            &log_bounds,
            config.tolerance,
            budget,
        );
        total_evals += run.evals;
        if run.value < best.1 {
            best = (run.point, run.value);
        }
        converged = run.converged;
    }

    Ok(FitResult {
        params: config.assemble(&best.0),
        sse: best.1,
        iterations: total_evals,
        converged,
    })
}

struct SimplexRun {
    point: Vec<f64>,
    value: f64,
    evals: usize,
    converged: bool,
}

/// Standard Nelder-Mead with reflection 1, expansion 2, contraction 1/2,
/// shrink 1/2, on a box-clamped domain. Stops when the simplex diameter
/// falls below `tol` or the evaluation budget runs out.
fn nelder_mead(
    f: &mut impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    bounds: &[(f64, f64)],
    tol: f64,
    max_evals: usize,
) -> SimplexRun {
    let n = x0.len();
    let mut evals = 0usize;
    let clamp = |x: &mut Vec<f64>| {
        for (v, (lo, hi)) in x.iter_mut().zip(bounds) {
            *v = v.clamp(*lo, *hi);
        }
    };
    macro_rules! eval {
        ($x:expr) => {{
            evals += 1;
            f($x)
        }};
    }

    // Initial simplex: x0 plus a step along each coordinate.
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let mut x = x0.to_vec();
    clamp(&mut x);
    let fx = eval!(&x);
    simplex.push((x, fx));
    for i in 0..n {
        let mut xi = x0.to_vec();
        // Step inward if the bound is right there.
        xi[i] = if xi[i] + step <= bounds[i].1 { xi[i] + step } else { xi[i] - step };
        clamp(&mut xi);
        let fxi = eval!(&xi);
        simplex.push((xi, fxi));
    }

    loop {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0_f64, f64::max)
            })
            .fold(0.0_f64, f64::max);
        let converged = diameter < tol;
        if converged || evals >= max_evals {
            let (point, value) = simplex.swap_remove(0);
            return SimplexRun { point, value, evals, converged };
        }

        // Centroid of all but the worst.
        let worst = simplex[n].clone();
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }

        let point_along = |t: f64| {
            let mut x: Vec<f64> = centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect();
            clamp(&mut x);
            x
        };

        let xr = point_along(1.0);
        let fr = eval!(&xr);
        if fr < simplex[0].1 {
            // Try expanding; keep the better of the two.
            let xe = point_along(2.0);
            let fe = eval!(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            // Contract inside or outside, else shrink toward the best.
            let (xc, fc) = if fr < worst.1 {
                let x = point_along(0.5);
                let fx = eval!(&x);
                (x, fx)
            } else {
                let x = point_along(-0.5);
                let fx = eval!(&x);
                (x, fx)
            };
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best_x = simplex[0].0.clone();
                for (x, fx) in simplex.iter_mut().skip(1) {
                    for (v, b) in x.iter_mut().zip(&best_x) {
                        *v = b + 0.5 * (*v - b);
                    }
                    clamp(x);
                    *fx = eval!(x);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines;
    use approx::assert_relative_eq;

    #[test]
    fn embedded_dataset_rows() {
        let d = Dataset::embedded();
        assert_eq!(d.len(), 21);
        assert_eq!((d.years[0], d.hares[0], d.lynx[0]), (1900, 30_000.0, 4_000.0));
        let i = d.years.iter().position(|&y| y == 1904).unwrap();
        assert_eq!((d.hares[i], d.lynx[i]), (36_300.0, 59_400.0));
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let good = "year,hares_thousands,lynx_thousands\n1900,30,4\n1901,47.2,6.1\n";
        let d = Dataset::from_csv_str(good).unwrap();
        assert_eq!(d.hares[1], 47_200.0);

        let out_of_order = "year,hares_thousands,lynx_thousands\n1901,47.2,6.1\n1900,30,4\n";
        let err = Dataset::from_csv_str(out_of_order).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");

        let bad_field = "year,hares_thousands,lynx_thousands\n1900,thirty,4\n1901,47.2,6.1\n";
        let err = Dataset::from_csv_str(bad_field).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }), "{err}");

        let bad_header = "y,h,l\n1900,30,4\n";
        assert!(Dataset::from_csv_str(bad_header).is_err());
    }

    #[test]
    fn self_fit_has_near_zero_residual() {
        // Synthesize data from the model itself; the objective at the
        // generating parameters is integration noise only.
        let p = hare_lynx_params();
        let cfg = IntegratorConfig::default();
        let d = synthetic_dataset(&p, &cfg);
        let sse = objective_sse(&p, &d, &cfg).unwrap();
        assert!(sse <= 1e-6 * d.norm_sq(), "sse = {sse:e}");
    }

    pub(crate) fn synthetic_dataset(p: &ReducedParams, cfg: &IntegratorConfig) -> Dataset {
        let template = Dataset::embedded();
        let samples = model_trajectory(p, &template, cfg).unwrap();
        Dataset {
            years: template.years.clone(),
            hares: samples.iter().map(|s| s.0).collect(),
            lynx: samples.iter().map(|s| s.1).collect(),
        }
    }

    #[test]
    fn reference_sse_matches_committed_baseline() {
        let sse = objective_sse(
            &hare_lynx_params(),
            &Dataset::embedded(),
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert_relative_eq!(sse, baselines::TABLE2_SSE, max_relative = 1e-3);
    }

    #[test]
    fn reference_beats_constant_mean_predictor() {
        let d = Dataset::embedded();
        let mean_h = d.hares.iter().sum::<f64>() / d.len() as f64;
        let mean_l = d.lynx.iter().sum::<f64>() / d.len() as f64;
        let sse_const: f64 = d
            .hares
            .iter()
            .zip(&d.lynx)
            .map(|(h, l)| (h - mean_h) * (h - mean_h) + (l - mean_l) * (l - mean_l))
            .sum();
        assert!(baselines::TABLE2_SSE < sse_const);
    }

    #[test]
    fn objective_is_deterministic() {
        let p = hare_lynx_params();
        let d = Dataset::embedded();
        let cfg = IntegratorConfig::default();
        let a = objective_sse(&p, &d, &cfg).unwrap();
        let b = objective_sse(&p, &d, &cfg).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn objective_scale_consistency() {
        // Scaling data and (N0, P0, K, 1/kappa) by c rescales sse by c^2.
        let p = hare_lynx_params();
        let d = Dataset::embedded();
        let cfg = IntegratorConfig::with_tolerances(1e-10, 1e-12);
        let sse = objective_sse(&p, &d, &cfg).unwrap();

        let c = 3.0;
        let mut pc = p;
        pc.k *= c;
        pc.kappa /= c;
        let dc = Dataset {
            years: d.years.clone(),
            hares: d.hares.iter().map(|v| v * c).collect(),
            lynx: d.lynx.iter().map(|v| v * c).collect(),
        };
        let sse_c = objective_sse(&pc, &dc, &cfg).unwrap();
        assert_relative_eq!(sse_c, sse * c * c, max_relative = 1e-6);
    }

    #[test]
    fn empty_free_set_is_identity() {
        let mut config = FitConfig::hare_lynx_default();
        config.free.clear();
        config.bounds.clear();
        let d = Dataset::embedded();
        let r = fit(&config, &d).unwrap();
        assert!(r.converged);
        assert_eq!(r.params, config.base);
        let direct = objective_sse(&config.base, &d, &config.integrator).unwrap();
        assert_eq!(r.sse, direct);
    }

    #[test]
    fn synthetic_recovery_from_perturbed_start() {
        let truth = hare_lynx_params();
        let cfg = IntegratorConfig::default();
        let d = synthetic_dataset(&truth, &cfg);

        let mut config = FitConfig::hare_lynx_default();
        // Perturb the free parameters away from the truth.
        config.base.beta_n *= 1.07;
        config.base.k *= 0.93;
        config.base.kappa *= 1.05;
        config.base.chi *= 0.95;
        config.base.beta_p *= 1.04;
        config.base.eta *= 1.05;
        let r = fit(&config, &d).unwrap();
        assert!(
            r.sse <= 1e-4 * d.norm_sq(),
            "recovered sse = {:e} after {} evals",
            r.sse,
            r.iterations
        );
    }

    #[test]
    fn best_vertex_sse_is_monotone() {
        // Track the running best across objective evaluations.
        let d = Dataset::embedded();
        let config = FitConfig::hare_lynx_default();
        let mut best_seen = f64::INFINITY;
        let mut history = Vec::new();
        let mut obj = |x: &[f64]| {
            let p = config.assemble(x);
            let v = if p.validate().is_err() {
                f64::INFINITY
            } else {
                objective_sse(&p, &d, &config.integrator).unwrap_or(f64::INFINITY)
            };
            best_seen = best_seen.min(v);
            history.push(best_seen);
            v
        };
        let x0: Vec<f64> = config.free.iter().map(|f| f.get(&config.base).ln()).collect();
        let bounds: Vec<(f64, f64)> =
            config.bounds.iter().map(|(lo, hi)| (lo.ln(), hi.ln())).collect();
        let _ = nelder_mead(&mut obj, &x0, 0.08, &bounds, 1e-4, 300);
        assert!(history.windows(2).all(|w| w[1] <= w[0]));
    }
}
