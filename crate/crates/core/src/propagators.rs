//! Resolvent propagators `T_p(t) = (1/2 pi i) int_Gamma e^{lambda t} lambda^p (lambda^alpha - A_h)^{-1} d lambda`
//! and the solution terms built from them.
//!
//! `p = 0` is `T(t)`, `p = -1` its time integral `T1(t)`, `p = -2` the second
//! integral `T2(t)`, and `p = alpha - 2` generates the `u1` term.

use std::borrow::Cow;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::contour::{build_contour, build_contour_with_radius, ContourNodes, ContourSpec};
use crate::elliptic::{ellipticity_check, EllipticOp, GridFn, TriDiagMatrix};
use crate::error::{Error, Result};
use crate::frac_calc::{TimeGrid, TimeSeries};

const ANGLE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct PropagatorContext {
    op: EllipticOp,
    spec: ContourSpec,
    unit: ContourNodes,
    /// Smallest admissible arc radius in the `lambda` plane.
    radius_floor: f64,
}

impl PropagatorContext {
    pub fn new(op: EllipticOp, spec: ContourSpec) -> Result<Self> {
        let ell = ellipticity_check(&op);
        if !ell.pass {
            return Err(Error::Precondition {
                what: "leading coefficient argument exceeds (1 - alpha/2) pi".into(),
                measured: ell.max_arg,
                tolerance: ell.bound,
            });
        }
        let alpha = op.alpha();
        let sector = op.sector();
        let upper = ((PI - sector.omega) / alpha).min(PI);
        if !(spec.phi > PI / 2.0 && spec.phi <= upper + ANGLE_SLACK) {
            return Err(Error::Contour(format!(
                "angle {} outside (pi/2, {upper}] for alpha = {alpha}, omega = {}",
                spec.phi, sector.omega
            )));
        }
        let unit = build_contour(&spec, 1.0)?;
        let radius_floor = sector.radius.powf(1.0 / alpha);
        Ok(PropagatorContext {
            op,
            spec,
            unit,
            radius_floor,
        })
    }

    /// Context with [`ContourSpec::default_for`] the operator's sector.
    pub fn with_defaults(op: EllipticOp) -> Result<Self> {
        let spec = ContourSpec::default_for(op.alpha(), op.sector().omega)?;
        Self::new(op, spec)
    }

    pub fn op(&self) -> &EllipticOp {
        &self.op
    }

    pub fn alpha(&self) -> f64 {
        self.op.alpha()
    }

    pub fn spec(&self) -> &ContourSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.op.grid().n()
    }

    pub fn radius_floor(&self) -> f64 {
        self.radius_floor
    }

    /// Contour for time `t`: the unit layout scaled by `1/t`, unless the arc
    /// would then pass inside the eigenvalues outside the sector.
    fn nodes_for(&self, t: f64) -> Result<Cow<'_, ContourNodes>> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::domain(format!(
                "propagator time must be positive, got {t}"
            )));
        }
        if self.spec.radius / t >= self.radius_floor {
            return Ok(Cow::Owned(self.unit.scaled(t)));
        }
        Ok(Cow::Owned(floored(&self.spec, self.radius_floor, t, t)?))
    }

    /// One contour serving every lag in `[lo, hi]`: arc radius chosen for
    /// `hi`, rays laid out for the slower decay at `lo`.
    fn band_nodes(&self, lo: f64, hi: f64) -> Result<ContourNodes> {
        // rays sized for `lo` cover the faster decay at `hi` with fewer nodes
        let mut spec = self.spec;
        spec.nodes_per_ray *= 2;
        if spec.radius / hi >= self.radius_floor {
            return build_contour_with_radius(&spec, spec.radius / hi, lo);
        }
        floored(&spec, self.radius_floor, lo, hi)
    }

    /// `T_p(t) f` for a real power `p`.
    pub fn apply_kernel(&self, t: f64, power: f64, f: &[Complex64]) -> Result<GridFn> {
        self.check_len(f)?;
        let nodes = self.nodes_for(t)?;
        let real = self.is_real_pair(f);
        let m = if real { nodes.upper_len() } else { nodes.len() };
        let pts = &nodes.points()[..m];
        let wts = &nodes.weights()[..m];
        let alpha = self.alpha();
        let matrix = self.op.matrix();
        let n = self.dim();
        let parts: Vec<GridFn> = pts
            .par_iter()
            .zip(wts.par_iter())
            .map(|(&l, &w)| {
                let mut out = vec![Complex64::new(0.0, 0.0); n];
                let mut scratch = vec![Complex64::new(0.0, 0.0); n];
                let coef = node_coefficient(l, w, t, power);
                solve_at(matrix, l.powf(alpha), f, &mut out, &mut scratch)?;
                for v in out.iter_mut() {
                    *v *= coef;
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        let mut acc = vec![Complex64::new(0.0, 0.0); n];
        for p in &parts {
            for (a, v) in acc.iter_mut().zip(p) {
                *a += v;
            }
        }
        Ok(finish(acc, real))
    }

    pub fn apply_t(&self, t: f64, f: &[Complex64]) -> Result<GridFn> {
        self.apply_kernel(t, 0.0, f)
    }

    /// `int_0^t T(s) f ds`.
    pub fn apply_t1(&self, t: f64, f: &[Complex64]) -> Result<GridFn> {
        self.apply_kernel(t, -1.0, f)
    }

    /// `int_0^t (t - s) T(s) f ds`.
    pub fn apply_t2(&self, t: f64, f: &[Complex64]) -> Result<GridFn> {
        self.apply_kernel(t, -2.0, f)
    }

    /// Sequential `acc += T_p(t) f`, used inside parallel loops over time.
    fn accumulate(
        &self,
        t: f64,
        power: f64,
        f: &[Complex64],
        acc: &mut [Complex64],
        ws: &mut Workspace,
    ) -> Result<()> {
        let nodes = self.nodes_for(t)?;
        let real = self.is_real_pair(f);
        let m = if real { nodes.upper_len() } else { nodes.len() };
        let scale = if real { 2.0 } else { 1.0 };
        let alpha = self.alpha();
        for (&l, &w) in nodes.points()[..m].iter().zip(&nodes.weights()[..m]) {
            let coef = node_coefficient(l, w, t, power) * scale;
            solve_at(
                self.op.matrix(),
                l.powf(alpha),
                f,
                &mut ws.out,
                &mut ws.scratch,
            )?;
            if real {
                for (a, v) in acc.iter_mut().zip(&ws.out) {
                    a.re += (coef * v).re;
                }
            } else {
                for (a, v) in acc.iter_mut().zip(&ws.out) {
                    *a += coef * v;
                }
            }
        }
        Ok(())
    }

    fn is_real_pair(&self, f: &[Complex64]) -> bool {
        self.op.is_real() && f.iter().all(|v| v.im == 0.0)
    }

    fn check_len(&self, f: &[Complex64]) -> Result<()> {
        if f.len() != self.dim() {
            return Err(Error::domain(format!(
                "grid function has {} entries, operator has {}",
                f.len(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Contour with the arc held at `floor`, which now carries `exp(floor t)`
/// growth and passes near the unstable eigenvalues, so it gets
/// proportionally more nodes.
fn floored(spec: &ContourSpec, floor: f64, lo: f64, hi: f64) -> Result<ContourNodes> {
    let grow = (2.0 * floor * hi / spec.radius).ceil() as usize;
    let mut spec = *spec;
    spec.arc_nodes *= grow.max(1);
    build_contour_with_radius(&spec, floor, lo)
}

struct Workspace {
    out: GridFn,
    scratch: GridFn,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace {
            out: vec![Complex64::new(0.0, 0.0); n],
            scratch: vec![Complex64::new(0.0, 0.0); n],
        }
    }
}

fn node_coefficient(l: Complex64, w: Complex64, t: f64, power: f64) -> Complex64 {
    let mut c = w * (l * t).exp();
    if power != 0.0 {
        c *= l.powf(power);
    }
    c
}

fn solve_at(
    matrix: &TriDiagMatrix,
    z: Complex64,
    f: &[Complex64],
    out: &mut [Complex64],
    scratch: &mut [Complex64],
) -> Result<()> {
    matrix.shifted_solve_into(z, f, out, scratch).map_err(|e| match e {
        Error::NearSingular { z } => Error::Contour(format!(
            "resolvent near-singular at lambda^alpha = {z}; contour radius too small for the spectrum"
        )),
        other => other,
    })
}

/// Upper-half sums of real problems are doubled and the imaginary part dropped.
fn finish(acc: GridFn, real: bool) -> GridFn {
    if real {
        acc.into_iter()
            .map(|v| Complex64::new(2.0 * v.re, 0.0))
            .collect()
    } else {
        acc
    }
}

/// `int_0^{t_i} T(t_i - s) f(s) ds` at every grid node, with `f` replaced by
/// its piecewise-linear interpolant.
///
/// Writing the interpolant as `f_0 + s_0 s + sum_j (s_j - s_{j-1}) (s - t_j)_+`
/// with slopes `s_j` gives, exactly,
/// `T1(t) f_0 + T2(t) s_0 + sum_{t_j < t} T2(t - t_j) (s_j - s_{j-1})`.
///
/// Lags in `[tau0 2^b, tau0 2^(b+1))` share one contour, so each output
/// needs one set of resolvent solves per band rather than per lag.
pub fn duhamel(ctx: &PropagatorContext, f: &TimeSeries) -> Result<TimeSeries> {
    let n = ctx.dim();
    if f.dim() != n {
        return Err(Error::domain(format!(
            "source has {} spatial entries, operator has {n}",
            f.dim()
        )));
    }
    let grid = f.grid().clone();
    let t = grid.nodes();
    let m = grid.steps();
    let slopes: Vec<GridFn> = (0..m)
        .map(|j| {
            let dt = t[j + 1] - t[j];
            f.row(j + 1)
                .iter()
                .zip(f.row(j))
                .map(|(a, b)| (a - b) / dt)
                .collect()
        })
        .collect();
    let kinks: Vec<GridFn> = (1..m)
        .map(|j| {
            slopes[j]
                .iter()
                .zip(&slopes[j - 1])
                .map(|(a, b)| a - b)
                .collect()
        })
        .collect();
    let real = ctx.op().is_real() && f.rows().all(|r| r.iter().all(|v| v.im == 0.0));

    let tau0 = t
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let band_of = |lag: f64| ((lag / tau0).log2().floor().max(0.0)) as usize;
    let bands = if m > 1 { band_of(t[m] - t[1]) + 1 } else { 0 };
    let contours: Vec<BandContour> = (0..bands)
        .into_par_iter()
        .map(|b| {
            let lo = tau0 * 2f64.powi(b as i32);
            BandContour::new(ctx, ctx.band_nodes(lo, 2.0 * lo)?, real)
        })
        .collect::<Result<_>>()?;

    let rows: Vec<GridFn> = (0..=m)
        .into_par_iter()
        .map(|i| {
            let mut acc = vec![Complex64::new(0.0, 0.0); n];
            if i == 0 {
                return Ok(acc);
            }
            let mut ws = Workspace::new(n);
            ctx.accumulate(t[i], -1.0, f.row(0), &mut acc, &mut ws)?;
            ctx.accumulate(t[i], -2.0, &slopes[0], &mut acc, &mut ws)?;
            // lags shrink as j grows, so each band is a contiguous run of j
            let mut j = 1;
            while j < i {
                let b = band_of(t[i] - t[j]);
                let mut end = j + 1;
                while end < i && band_of(t[i] - t[end]) == b {
                    end += 1;
                }
                let members: Vec<(f64, &GridFn)> = (j..end)
                    .map(|k| (t[i] - t[k], &kinks[k - 1]))
                    .filter(|(_, d)| d.iter().any(|v| *v != Complex64::new(0.0, 0.0)))
                    .collect();
                if !members.is_empty() {
                    contours[b].accumulate(ctx, &members, &mut acc, &mut ws)?;
                }
                j = end;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    TimeSeries::from_rows(grid, rows)
}

/// Band contour with per-node `lambda^alpha` and `w lambda^-2` cached.
struct BandContour {
    points: Vec<Complex64>,
    shifts: Vec<Complex64>,
    coefs: Vec<Complex64>,
    real: bool,
}

impl BandContour {
    fn new(ctx: &PropagatorContext, nodes: ContourNodes, real: bool) -> Result<Self> {
        let m = if real { nodes.upper_len() } else { nodes.len() };
        let scale = if real { 2.0 } else { 1.0 };
        let points = nodes.points()[..m].to_vec();
        let shifts = points.iter().map(|l| l.powf(ctx.alpha())).collect();
        let coefs = points
            .iter()
            .zip(&nodes.weights()[..m])
            .map(|(l, w)| w * scale / (l * l))
            .collect();
        Ok(BandContour {
            points,
            shifts,
            coefs,
            real,
        })
    }

    /// `acc += sum_(lag, d) T2(lag) d`.
    fn accumulate(
        &self,
        ctx: &PropagatorContext,
        members: &[(f64, &GridFn)],
        acc: &mut [Complex64],
        ws: &mut Workspace,
    ) -> Result<()> {
        let mut combo = vec![Complex64::new(0.0, 0.0); acc.len()];
        for ((&l, &z), &c) in self.points.iter().zip(&self.shifts).zip(&self.coefs) {
            combo.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            for &(lag, d) in members {
                let e = (l * lag).exp();
                for (v, x) in combo.iter_mut().zip(d.iter()) {
                    *v += e * x;
                }
            }
            solve_at(ctx.op().matrix(), z, &combo, &mut ws.out, &mut ws.scratch)?;
            if self.real {
                for (a, v) in acc.iter_mut().zip(&ws.out) {
                    a.re += (c * v).re;
                }
            } else {
                for (a, v) in acc.iter_mut().zip(&ws.out) {
                    *a += c * v;
                }
            }
        }
        Ok(())
    }
}

/// `u0 + int_0^t T(t - s) (f(s) + A_h u0) ds`.
pub fn initial_term_u0(
    ctx: &PropagatorContext,
    u0: &[Complex64],
    f: &TimeSeries,
) -> Result<TimeSeries> {
    ctx.check_len(u0)?;
    let au0 = ctx.op().apply(u0);
    let shifted = TimeSeries::from_rows(
        f.grid().clone(),
        f.rows()
            .map(|r| r.iter().zip(&au0).map(|(a, b)| a + b).collect())
            .collect(),
    )?;
    let w = duhamel(ctx, &shifted)?;
    TimeSeries::from_rows(
        w.grid().clone(),
        w.rows()
            .map(|r| r.iter().zip(u0).map(|(a, b)| a + b).collect())
            .collect(),
    )
}

/// `T_{alpha-2}(t) u1` on the grid, zero at `t = 0`. Only for `alpha > 1`.
pub fn initial_term_u1(
    ctx: &PropagatorContext,
    u1: &[Complex64],
    grid: &TimeGrid,
) -> Result<TimeSeries> {
    let alpha = ctx.alpha();
    if alpha <= 1.0 {
        return Err(Error::domain(format!(
            "the u1 term needs alpha > 1, got {alpha}"
        )));
    }
    ctx.check_len(u1)?;
    let n = ctx.dim();
    let t = grid.nodes();
    let rows: Vec<GridFn> = (0..t.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = vec![Complex64::new(0.0, 0.0); n];
            if i > 0 {
                ctx.accumulate(t[i], alpha - 2.0, u1, &mut acc, &mut Workspace::new(n))?;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    TimeSeries::from_rows(grid.clone(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::{laplacian_eigenvalue, SpaceGrid};
    use crate::mittag_leffler::mittag_leffler;

    fn ml(a: f64, b: f64, x: f64) -> f64 {
        mittag_leffler(a, b, Complex64::new(x, 0.0)).unwrap().re
    }

    fn ctx(n: usize, alpha: f64) -> PropagatorContext {
        let g = SpaceGrid::new(n).unwrap();
        PropagatorContext::with_defaults(EllipticOp::laplacian(g, alpha).unwrap()).unwrap()
    }

    fn mode(g: &SpaceGrid, k: usize) -> GridFn {
        g.sample_real(|x| (k as f64 * PI * x).sin())
    }

    fn rel_err(u: &[Complex64], f: &[Complex64], scale: f64) -> f64 {
        let num = u
            .iter()
            .zip(f)
            .fold(0.0_f64, |m, (a, b)| m.max((a - scale * b).norm()));
        num / scale.abs().max(1e-300)
    }

    /// Error against `e f`, relative to the free kernel `t^(alpha - 1 - p)`
    /// where the exact value has decayed far below it.
    fn kernel_err(u: &[Complex64], f: &[Complex64], e: f64, t: f64, alpha: f64, p: f64) -> f64 {
        let num = u
            .iter()
            .zip(f)
            .fold(0.0_f64, |m, (a, b)| m.max((a - e * b).norm()));
        num / e.abs().max(t.powf(alpha - 1.0 - p))
    }

    #[test]
    fn t_on_modes_matches_mittag_leffler() {
        for alpha in [0.5, 1.0, 1.5] {
            let c = ctx(31, alpha);
            let g = *c.op().grid();
            for k in [1, 3] {
                let mu = laplacian_eigenvalue(&g, k);
                for t in [0.05, 0.5, 2.0] {
                    let u = c.apply_t(t, &mode(&g, k)).unwrap();
                    let e = t.powf(alpha - 1.0) * ml(alpha, alpha, -mu * t.powf(alpha));
                    let err = kernel_err(&u, &mode(&g, k), e, t, alpha, 0.0);
                    assert!(err < 1e-8, "alpha={alpha} k={k} t={t}: {err}");
                }
            }
        }
    }

    #[test]
    fn alpha_one_is_heat_semigroup() {
        let c = ctx(31, 1.0);
        let g = *c.op().grid();
        for k in [1, 2, 7] {
            let mu = laplacian_eigenvalue(&g, k);
            let t = 0.03;
            let u = c.apply_t(t, &mode(&g, k)).unwrap();
            assert!(kernel_err(&u, &mode(&g, k), (-mu * t).exp(), t, 1.0, 0.0) < 1e-9);
            let u = c.apply_t1(t, &mode(&g, k)).unwrap();
            assert!(
                kernel_err(&u, &mode(&g, k), (1.0 - (-mu * t).exp()) / mu, t, 1.0, -1.0) < 1e-9
            );
        }
    }

    #[test]
    fn t1_on_modes_and_derivative() {
        let alpha = 0.7;
        let c = ctx(31, alpha);
        let g = *c.op().grid();
        let mu = laplacian_eigenvalue(&g, 1);
        let f = mode(&g, 1);
        for t in [0.1, 1.0] {
            let u = c.apply_t1(t, &f).unwrap();
            let e = t.powf(alpha) * ml(alpha, alpha + 1.0, -mu * t.powf(alpha));
            assert!(rel_err(&u, &f, e) < 1e-8);
        }
        let (t, h) = (0.4, 1e-4);
        let up = c.apply_t1(t + h, &f).unwrap();
        let dn = c.apply_t1(t - h, &f).unwrap();
        let d = c.apply_t(t, &f).unwrap();
        for i in 0..g.n() {
            let fd = (up[i] - dn[i]) / (2.0 * h);
            assert!((fd - d[i]).norm() < 1e-6);
        }
    }

    #[test]
    fn zero_input_gives_zero() {
        let c = ctx(15, 0.5);
        let z = vec![Complex64::new(0.0, 0.0); 15];
        assert!(c.apply_t(1.0, &z).unwrap().iter().all(|v| v.norm() == 0.0));
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        let d = duhamel(&c, &TimeSeries::zeros(grid, 15)).unwrap();
        assert_eq!(d.max_abs(), 0.0);
    }

    #[test]
    fn propagators_do_not_mix_modes() {
        let c = ctx(31, 1.5);
        let g = *c.op().grid();
        let f = mode(&g, 2);
        for p in [0.0, -1.0, -2.0, -0.5] {
            let u = c.apply_kernel(0.3, p, &f).unwrap();
            for k in [1, 3, 4, 9] {
                let other = mode(&g, k);
                let proj: Complex64 =
                    u.iter().zip(&other).map(|(a, b)| a * b).sum::<Complex64>() * (2.0 * g.h());
                assert!(proj.norm() < 1e-10, "p={p} k={k}: {proj}");
            }
        }
    }

    #[test]
    fn complex_input_matches_linear_combination() {
        let c = ctx(15, 0.8);
        let g = *c.op().grid();
        let a = mode(&g, 1);
        let b = g.sample_real(|x| x * (1.0 - x));
        let mixed: GridFn = a
            .iter()
            .zip(&b)
            .map(|(x, y)| x + Complex64::i() * y)
            .collect();
        let um = c.apply_t(0.2, &mixed).unwrap();
        let ua = c.apply_t(0.2, &a).unwrap();
        let ub = c.apply_t(0.2, &b).unwrap();
        for i in 0..15 {
            assert!((um[i] - (ua[i] + Complex64::i() * ub[i])).norm() < 1e-12);
        }
    }

    #[test]
    fn duhamel_constant_source() {
        for alpha in [0.5, 1.5] {
            let c = ctx(31, alpha);
            let g = *c.op().grid();
            let mu = laplacian_eigenvalue(&g, 1);
            let f = mode(&g, 1);
            let grid = TimeGrid::uniform(1.0, 8).unwrap();
            let src = TimeSeries::from_fn(grid.clone(), g.n(), |_| f.clone());
            let u = duhamel(&c, &src).unwrap();
            for (i, &t) in grid.nodes().iter().enumerate().skip(1) {
                let e = t.powf(alpha) * ml(alpha, alpha + 1.0, -mu * t.powf(alpha));
                assert!(rel_err(u.row(i), &f, e) < 1e-8, "alpha={alpha} t={t}");
            }
        }
    }

    #[test]
    fn duhamel_heat_with_decaying_source() {
        // u' = -mu u + e^{-t}: u = (e^{-t} - e^{-mu t}) / (mu - 1)
        let c = ctx(31, 1.0);
        let g = *c.op().grid();
        let mu = laplacian_eigenvalue(&g, 1);
        let f = mode(&g, 1);
        let mut errs = Vec::new();
        for m in [32, 64] {
            let grid = TimeGrid::uniform(1.0, m).unwrap();
            let src = TimeSeries::from_fn(grid.clone(), g.n(), |t| {
                f.iter().map(|v| v * (-t).exp()).collect()
            });
            let u = duhamel(&c, &src).unwrap();
            let err = grid
                .nodes()
                .iter()
                .enumerate()
                .map(|(i, &t)| {
                    kernel_err(
                        u.row(i),
                        &f,
                        ((-t).exp() - (-mu * t).exp()) / (mu - 1.0),
                        1.0,
                        1.0,
                        -1.0,
                    )
                })
                .fold(0.0, f64::max);
            errs.push(err);
        }
        assert!(errs[1] < 3e-5, "{errs:?}");
        assert!(errs[0] / errs[1] > 3.5, "{errs:?}");
    }

    #[test]
    fn banded_duhamel_matches_per_lag_sum() {
        for (alpha, grading) in [(0.5, 1.0), (0.5, 3.0), (1.5, 2.0)] {
            let c = ctx(15, alpha);
            let g = *c.op().grid();
            let grid = TimeGrid::graded(1.0, 40, grading).unwrap();
            let src = TimeSeries::from_fn(grid.clone(), g.n(), |t| {
                g.sample_real(|x| (3.0 * t).sin() * x * (1.0 - x) + t.sqrt() * (2.0 * PI * x).sin())
            });
            let banded = duhamel(&c, &src).unwrap();
            let t = grid.nodes();
            let sl = |j: usize| -> GridFn {
                src.row(j + 1)
                    .iter()
                    .zip(src.row(j))
                    .map(|(a, b)| (a - b) / (t[j + 1] - t[j]))
                    .collect()
            };
            for i in [1, 2, 17, 40] {
                let mut acc = c.apply_t1(t[i], src.row(0)).unwrap();
                let mut add = |v: GridFn| acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
                add(c.apply_t2(t[i], &sl(0)).unwrap());
                for j in 1..i {
                    let d: GridFn = sl(j).iter().zip(sl(j - 1)).map(|(a, b)| a - b).collect();
                    add(c.apply_t2(t[i] - t[j], &d).unwrap());
                }
                let scale = acc.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
                let diff = acc
                    .iter()
                    .zip(banded.row(i))
                    .fold(0.0_f64, |m, (a, b)| m.max((a - b).norm()));
                assert!(
                    diff <= 1e-8 * scale.max(1e-3),
                    "alpha={alpha} i={i}: {diff} vs {scale}"
                );
            }
        }
    }

    #[test]
    fn u0_term_is_mittag_leffler_decay() {
        for alpha in [0.5, 1.0, 1.5] {
            let c = ctx(31, alpha);
            let g = *c.op().grid();
            let mu = laplacian_eigenvalue(&g, 1);
            let u0 = mode(&g, 1);
            let grid = TimeGrid::uniform(1.0, 4).unwrap();
            let u = initial_term_u0(&c, &u0, &TimeSeries::zeros(grid.clone(), g.n())).unwrap();
            for (i, &t) in grid.nodes().iter().enumerate() {
                let e = ml(alpha, 1.0, -mu * t.powf(alpha));
                let err = kernel_err(u.row(i), &u0, e, 1.0, 1.0, 0.0);
                assert!(err < 1e-8, "alpha={alpha} t={t}: {err}");
            }
        }
    }

    #[test]
    fn u1_term_on_mode() {
        let alpha = 1.5;
        let c = ctx(31, alpha);
        let g = *c.op().grid();
        let mu = laplacian_eigenvalue(&g, 1);
        let u1 = mode(&g, 1);
        let grid = TimeGrid::uniform(1.0, 5).unwrap();
        let u = initial_term_u1(&c, &u1, &grid).unwrap();
        assert_eq!(u.row(0).iter().map(|v| v.norm()).sum::<f64>(), 0.0);
        for (i, &t) in grid.nodes().iter().enumerate().skip(1) {
            let e = t * ml(alpha, 2.0, -mu * t.powf(alpha));
            assert!(rel_err(u.row(i), &u1, e) < 1e-8, "t={t}");
        }
        let tiny = TimeGrid::from_nodes(vec![0.0, 1e-4]).unwrap();
        let s = initial_term_u1(&c, &u1, &tiny).unwrap();
        assert!(rel_err(s.row(1), &u1, 1e-4) < 1e-4);
        let c1 = ctx(15, 1.0);
        assert!(initial_term_u1(&c1, &vec![Complex64::new(0.0, 0.0); 15], &grid).is_err());
    }

    #[test]
    fn rejects_inadmissible_angle() {
        let g = SpaceGrid::new(15).unwrap();
        let op = EllipticOp::laplacian(g, 1.5).unwrap();
        let spec = ContourSpec::new(0.8 * PI, 4.0, 48, 64).unwrap();
        assert!(matches!(
            PropagatorContext::new(op, spec),
            Err(Error::Contour(_))
        ));
    }

    #[test]
    fn unstable_modes_enlarge_the_arc() {
        // A_h + 20 has its lowest eigenvalue near +10; T(t) grows like a scalar ML of +10
        let g = SpaceGrid::new(31).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let op = EllipticOp::from_fns(g, |_| one, |_| 0.0 * one, |_| 20.0 * one, 0.8).unwrap();
        let c = PropagatorContext::with_defaults(op).unwrap();
        assert!(c.radius_floor() > 10f64.powf(1.0 / 0.8));
        let nu = 20.0 - laplacian_eigenvalue(&g, 1);
        let f = mode(&g, 1);
        let t = 0.5;
        let u = c.apply_t(t, &f).unwrap();
        let e = t.powf(-0.2) * ml(0.8, 0.8, nu * t.powf(0.8));
        let err = rel_err(&u, &f, e);
        assert!(err < 1e-8, "{e}: {err}");
    }
}
