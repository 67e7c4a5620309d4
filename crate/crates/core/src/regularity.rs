//! Discrete Hölder norms, exponent fits and end-to-end regularity checks.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frac_calc::TimeSeries;
use std::sync::Arc;

use crate::problem::{
    check_compat_space_time, check_compat_spatial, solution_derivatives, solve,
    CompatibilityReport, ProblemSpec, Source,
};

/// Two-grid growth above this ratio counts as divergence.
pub const DIVERGENCE_RATIO: f64 = 1.5;
/// Slack on fitted exponents.
pub const EXPONENT_MARGIN: f64 = 0.1;
/// Lags dropped at each end of the exponent fit.
const FIT_TRIM: usize = 2;
const MIN_LEVELS: usize = 5;
/// Width of the strip next to each end used by the necessity probe.
const BOUNDARY_STRIP: f64 = 0.1;

fn sup_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).norm()))
}

/// `max_{i<j} ||v(t_j) - v(t_i)||_inf / (t_j - t_i)^beta` over all node pairs.
pub fn holder_seminorm_time(v: &TimeSeries, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::domain(format!(
            "time Hölder exponent must lie in (0, 1], got {beta}"
        )));
    }
    if v.len() < 2 {
        return Err(Error::domain("time seminorm needs at least two nodes"));
    }
    let t = v.grid().nodes();
    Ok((0..t.len())
        .into_par_iter()
        .map(|j| {
            (0..j).fold(0.0_f64, |m, i| {
                m.max(sup_diff(v.row(j), v.row(i)) / (t[j] - t[i]).powf(beta))
            })
        })
        .reduce(|| 0.0, f64::max))
}

fn seminorm_uniform(f: &[Complex64], h: f64, sigma: f64) -> f64 {
    (0..f.len())
        .map(|j| {
            (0..j).fold(0.0_f64, |m, i| {
                m.max((f[j] - f[i]).norm() / (h * (j - i) as f64).powf(sigma))
            })
        })
        .fold(0.0, f64::max)
}

/// Discrete `C^order` norm of samples on a uniform grid of spacing `h`:
/// `sum_{k <= [order]} max |D^k f| + [D^[order] f]_{order - [order]}` with
/// forward divided differences `D`. `order` must not be an integer.
pub fn spatial_holder_norm(f: &[Complex64], h: f64, order: f64) -> Result<f64> {
    if !(order > 0.0 && order.fract() != 0.0 && order.is_finite()) {
        return Err(Error::domain(format!(
            "Hölder order must be positive and non-integer, got {order}"
        )));
    }
    if !(h > 0.0) {
        return Err(Error::domain("grid spacing must be positive"));
    }
    let k = order.floor() as usize;
    if f.len() < k + 4 {
        return Err(Error::domain(format!(
            "order {order} needs at least {} samples",
            k + 4
        )));
    }
    let mut d = f.to_vec();
    let mut norm = d.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
    for _ in 0..k {
        d = d.windows(2).map(|w| (w[1] - w[0]) / h).collect();
        norm += d.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
    }
    Ok(norm + seminorm_uniform(&d, h, order.fract()))
}

/// `max_t` of [`spatial_holder_norm`] over the rows of a series.
pub fn sup_spatial_norm(v: &TimeSeries, h: f64, order: f64) -> Result<f64> {
    let norms: Vec<f64> = (0..v.len())
        .into_par_iter()
        .map(|i| spatial_holder_norm(v.row(i), h, order))
        .collect::<Result<_>>()?;
    Ok(norms.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderEstimate {
    /// Fitted exponent; `f64::INFINITY` for a constant series.
    pub exponent: f64,
    /// Seminorm at `min(exponent, 1)`.
    pub seminorm: f64,
    pub fit_residual: f64,
    pub h_range: (f64, f64),
}

/// Modulus of continuity `w(h) = max_{|t_j - t_i| <= h} ||v_j - v_i||` at
/// dyadic `h = T / 2^k`, and the least-squares slope of `log w` against
/// `log h` with the two smallest and two largest lags dropped.
pub fn fit_time_exponent(v: &TimeSeries) -> Result<HolderEstimate> {
    let t = v.grid().nodes();
    let span = v.grid().t_final();
    let min_step = t
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let mut lags = Vec::new();
    let mut h = span / 2.0;
    while h >= min_step * (1.0 - 1e-12) {
        lags.push(h);
        h /= 2.0;
    }
    if lags.len() < MIN_LEVELS {
        return Err(Error::domain(format!(
            "exponent fit needs at least {MIN_LEVELS} dyadic lag levels, grid gives {}",
            lags.len()
        )));
    }
    let modulus: Vec<f64> = lags
        .par_iter()
        .map(|&h| {
            let mut w = 0.0_f64;
            for j in 0..t.len() {
                for i in (0..j).rev() {
                    if t[j] - t[i] > h * (1.0 + 1e-12) {
                        break;
                    }
                    w = w.max(sup_diff(v.row(j), v.row(i)));
                }
            }
            w
        })
        .collect();
    let scale = v.max_abs();
    if modulus
        .iter()
        .all(|&w| w <= 1e-14 * scale.max(f64::MIN_POSITIVE))
    {
        return Ok(HolderEstimate {
            exponent: f64::INFINITY,
            seminorm: 0.0,
            fit_residual: 0.0,
            h_range: (lags[lags.len() - 1], lags[0]),
        });
    }
    let trim = if lags.len() >= MIN_LEVELS + 2 * FIT_TRIM {
        FIT_TRIM
    } else {
        (lags.len() - MIN_LEVELS) / 2
    };
    let window: Vec<(f64, f64)> = lags
        .iter()
        .zip(&modulus)
        .skip(trim)
        .take(lags.len() - 2 * trim)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&h, &w)| (h.ln(), w.ln()))
        .collect();
    if window.len() < 2 {
        return Err(Error::Convergence(
            "too few non-zero lags for an exponent fit".into(),
        ));
    }
    let nw = window.len() as f64;
    let mx = window.iter().map(|p| p.0).sum::<f64>() / nw;
    let my = window.iter().map(|p| p.1).sum::<f64>() / nw;
    let sxx: f64 = window.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = window.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let resid = window
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
        .sum::<f64>()
        .sqrt();
    let beta = slope.clamp(1e-6, 1.0);
    Ok(HolderEstimate {
        exponent: slope,
        seminorm: holder_seminorm_time(v, beta)?,
        fit_residual: resid,
        h_range: (lags[lags.len() - 1 - trim], lags[trim]),
    })
}

/// Which regularity statement a check addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularityClass {
    /// Hölder in space, bounded in time.
    Spatial,
    /// Joint space-time Hölder class.
    SpaceTime,
}

impl RegularityClass {
    pub fn name(self) -> &'static str {
        match self {
            RegularityClass::Spatial => "spatial",
            RegularityClass::SpaceTime => "space_time",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityEntry {
    pub quantity: String,
    /// Value on the base grid.
    pub value: f64,
    /// Value after one refinement.
    pub refined: f64,
    pub exponent: Option<f64>,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub class: RegularityClass,
    pub entries: Vec<RegularityEntry>,
}

impl RegularityReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "class: {}", self.class.name())?;
        for e in &self.entries {
            writeln!(w, "{}.value: {:.16e}", e.quantity, e.value)?;
            writeln!(w, "{}.refined: {:.16e}", e.quantity, e.refined)?;
            if let Some(x) = e.exponent {
                writeln!(w, "{}.exponent: {:.16e}", e.quantity, x)?;
            }
            writeln!(w, "{}.threshold: {:.16e}", e.quantity, e.threshold)?;
            writeln!(
                w,
                "{}.verdict: {}",
                e.quantity,
                if e.pass { "pass" } else { "fail" }
            )?;
        }
        writeln!(
            w,
            "overall: {}",
            if self.all_pass() { "pass" } else { "fail" }
        )?;
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "quantity,exponent,seminorm,verdict")?;
        for e in &self.entries {
            let x = e.exponent.map_or(String::new(), |x| format!("{x:.16e}"));
            writeln!(
                w,
                "{},{},{:.16e},{}",
                e.quantity,
                x,
                e.value,
                if e.pass { "pass" } else { "fail" }
            )?;
        }
        Ok(())
    }
}

struct Measured {
    du_theta: f64,
    u_2theta: f64,
    du_time: HolderEstimate,
    au_time: HolderEstimate,
    du_semi: f64,
    au_semi: f64,
}

fn measure(spec: &ProblemSpec) -> Result<Measured> {
    let sol = solve(spec)?;
    let op = spec.operator()?;
    let (du, au) = solution_derivatives(spec, &sol, &op)?;
    let h = sol.space().h();
    let theta = spec.theta;
    let full = sol.full_series()?;
    let beta = (spec.alpha * theta / 2.0).min(1.0);
    Ok(Measured {
        du_theta: sup_spatial_norm(&du, h, theta)?,
        u_2theta: sup_spatial_norm(&full, h, 2.0 + theta)?,
        du_time: fit_time_exponent(&du)?,
        au_time: fit_time_exponent(&au)?,
        du_semi: holder_seminorm_time(&du, beta)?,
        au_semi: holder_seminorm_time(&au, beta)?,
    })
}

/// Solves on the base and once-refined grids and checks that the solution
/// has the regularity the data entitle it to: bounded spatial norms of
/// `D^alpha u` (order theta) and `u` (order 2 + theta), and for
/// [`RegularityClass::SpaceTime`] time exponents of `D^alpha u`, `A_h u` of
/// at least `alpha theta / 2` (less the margin) or a stable seminorm there.
pub fn verify_regularity(spec: &ProblemSpec, class: RegularityClass) -> Result<RegularityReport> {
    let base = measure(spec)?;
    let fine = measure(&spec.refined(1))?;
    let bounded = |quantity: &str, a: f64, b: f64| RegularityEntry {
        quantity: quantity.into(),
        value: a,
        refined: b,
        exponent: None,
        threshold: DIVERGENCE_RATIO,
        pass: b <= DIVERGENCE_RATIO * a.max(f64::MIN_POSITIVE),
    };
    let mut entries = vec![
        bounded("caputo_spatial_norm", base.du_theta, fine.du_theta),
        bounded("solution_spatial_norm", base.u_2theta, fine.u_2theta),
    ];
    if class == RegularityClass::SpaceTime {
        let target = spec.alpha * spec.theta / 2.0 - EXPONENT_MARGIN;
        let timed = |quantity: &str, est: HolderEstimate, a: f64, b: f64| RegularityEntry {
            quantity: quantity.into(),
            value: a,
            refined: b,
            exponent: Some(est.exponent),
            threshold: target,
            pass: est.exponent >= target || b <= DIVERGENCE_RATIO * a.max(f64::MIN_POSITIVE),
        };
        entries.push(timed(
            "caputo_time_holder",
            base.du_time,
            base.du_semi,
            fine.du_semi,
        ));
        entries.push(timed(
            "operator_time_holder",
            base.au_time,
            base.au_semi,
            fine.au_semi,
        ));
    }
    Ok(RegularityReport { class, entries })
}

/// Paired run: `spec` against a twin whose source is shifted by a constant,
/// which breaks only the corner condition linking `A u0 + f(0)` to the
/// Caputo derivative of the boundary data at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NecessityProbe {
    pub shift: f64,
    pub compatible: CompatibilityReport,
    pub violating: CompatibilityReport,
    /// Time exponent of `D^alpha u` next to the boundary.
    pub compatible_exponent: f64,
    pub violating_exponent: f64,
}

impl NecessityProbe {
    pub fn gap(&self) -> f64 {
        self.compatible_exponent - self.violating_exponent
    }

    /// Names of the conditions that fail in the violating run but not in the
    /// compatible one.
    pub fn newly_failed(&self) -> Vec<&'static str> {
        self.violating
            .conditions
            .iter()
            .filter(|c| !c.pass && self.compatible.get(&c.name).is_some_and(|b| b.pass))
            .map(|c| c.name)
            .collect()
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "shift: {:.16e}", self.shift)?;
        writeln!(
            w,
            "compatible.failed: {}",
            self.compatible.failed().join(" ")
        )?;
        writeln!(w, "violating.failed: {}", self.violating.failed().join(" "))?;
        writeln!(
            w,
            "compatible.boundary_exponent: {:.16e}",
            self.compatible_exponent
        )?;
        writeln!(
            w,
            "violating.boundary_exponent: {:.16e}",
            self.violating_exponent
        )?;
        writeln!(w, "gap: {:.16e}", self.gap())?;
        Ok(())
    }
}

fn boundary_exponent(spec: &ProblemSpec) -> Result<f64> {
    let sol = solve(spec)?;
    let op = spec.operator()?;
    let (du, _) = solution_derivatives(spec, &sol, &op)?;
    let grid = sol.space();
    let keep: Vec<usize> = (0..grid.n())
        .filter(|&i| grid.x(i) <= BOUNDARY_STRIP || grid.x(i) >= 1.0 - BOUNDARY_STRIP)
        .collect();
    let rows = du
        .rows()
        .map(|r| keep.iter().map(|&i| r[i]).collect())
        .collect();
    let strip = TimeSeries::from_rows(du.grid().clone(), rows)?;
    Ok(fit_time_exponent(&strip)?.exponent)
}

pub fn necessity_probe(
    spec: &ProblemSpec,
    class: RegularityClass,
    shift: f64,
) -> Result<NecessityProbe> {
    let f = match &spec.f {
        Source::Field(f) => f.clone(),
        Source::DiscretePowerLaw(_) => {
            return Err(Error::domain(
                "the necessity probe needs the source as a field of (t, x)",
            ));
        }
    };
    let mut twin = spec.clone();
    twin.f = Source::Field(Arc::new(move |t, x| f(t, x) + shift));
    let check = |s: &ProblemSpec| match class {
        RegularityClass::Spatial => check_compat_spatial(s),
        RegularityClass::SpaceTime => check_compat_space_time(s),
    };
    Ok(NecessityProbe {
        shift,
        compatible: check(spec),
        violating: check(&twin),
        compatible_exponent: boundary_exponent(spec)?,
        violating_exponent: boundary_exponent(&twin)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frac_calc::TimeGrid;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn scalar(grid: &TimeGrid, f: impl Fn(f64) -> f64) -> TimeSeries {
        TimeSeries::scalar(grid.clone(), |t| c(f(t)))
    }

    #[test]
    fn time_seminorm_examples() {
        let g = TimeGrid::uniform(1.0, 64).unwrap();
        assert_eq!(
            holder_seminorm_time(&scalar(&g, |_| 3.0), 0.5).unwrap(),
            0.0
        );
        assert!((holder_seminorm_time(&scalar(&g, |t| t), 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(
            (holder_seminorm_time(&scalar(&g, |t| t.powf(0.3)), 0.3).unwrap() - 1.0).abs() < 1e-12
        );
        assert!(holder_seminorm_time(&scalar(&g, |t| t), 0.0).is_err());
    }

    #[test]
    fn spatial_norm_examples() {
        let ones = vec![c(1.0); 17];
        assert!((spatial_holder_norm(&ones, 1.0 / 18.0, 0.5).unwrap() - 1.0).abs() < 1e-15);
        // f(x) = x on interior nodes x_i = i h: sup x_n plus max (x_j - x_i)^(1/2)
        let n = 17;
        let h = 1.0 / (n as f64 + 1.0);
        let f: Vec<_> = (1..=n).map(|i| c(i as f64 * h)).collect();
        let span = (n - 1) as f64 * h;
        let expect = n as f64 * h + span.sqrt();
        assert!((spatial_holder_norm(&f, h, 0.5).unwrap() - expect).abs() < 1e-12);
        // order 1.5 adds sup |f'| = 1 and a zero seminorm of the constant derivative
        assert!((spatial_holder_norm(&f, h, 1.5).unwrap() - (n as f64 * h + 1.0)).abs() < 1e-12);
        assert!(spatial_holder_norm(&f, h, 1.0).is_err());
    }

    #[test]
    fn spatial_divergence_detected() {
        let norm = |n: usize| {
            let h = 1.0 / (n as f64 + 1.0);
            let f: Vec<_> = (1..=n)
                .map(|i| c((i as f64 * h - 0.5).abs().powf(0.3)))
                .collect();
            spatial_holder_norm(&f, h, 0.5).unwrap()
        };
        // a deficit of 0.2 in the exponent grows like h^-0.2
        let (a, b) = (norm(15), norm(2047));
        assert!(b / a > DIVERGENCE_RATIO, "{a} {b}");
        let smooth = |n: usize| {
            let h = 1.0 / (n as f64 + 1.0);
            let f: Vec<_> = (1..=n).map(|i| c((i as f64 * h).sin())).collect();
            spatial_holder_norm(&f, h, 0.5).unwrap()
        };
        assert!(smooth(2047) / smooth(15) < 1.1);
    }

    #[test]
    fn exponent_fit_on_powers() {
        let g = TimeGrid::uniform(1.0, 1024).unwrap();
        for beta in [0.2, 0.3, 0.5, 0.6, 0.9] {
            let e = fit_time_exponent(&scalar(&g, |t| t.powf(beta))).unwrap();
            assert!((e.exponent - beta).abs() < 0.05, "{beta}: {e:?}");
        }
        let e = fit_time_exponent(&scalar(&g, |t| t)).unwrap();
        assert!((e.exponent - 1.0).abs() < 0.05);
        let e = fit_time_exponent(&scalar(&g, |_| 2.0)).unwrap();
        assert_eq!(e.exponent, f64::INFINITY);
        assert_eq!(e.seminorm, 0.0);
        let short = TimeGrid::uniform(1.0, 8).unwrap();
        assert!(fit_time_exponent(&scalar(&short, |t| t)).is_err());
    }
}
