//! Paths `Gamma(phi, r)` and their quadrature nodes.
//!
//! The path runs in from `inf * e^{-i phi}` along a ray, around the arc of
//! radius `r` through the positive real axis, and out along the ray at angle
//! `phi`. Rays carry Gauss-Legendre panels that grow geometrically away from
//! the arc; the arc carries Gauss-Legendre panels refined toward the corners.
//! All weights include the `1 / (2 pi i)` factor.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_on;

/// `-ln(1e-16)`: rays stop where `exp(Re(lambda) t)` drops below 1e-16.
pub const DECAY_CUTOFF: f64 = 36.841_361_487_904_734;

const RAY_PANEL: usize = 6;
const ARC_PANEL: usize = 8;
/// Below this `|cos(phi)|` the rays decay slowly and oscillate, and panel
/// lengths are also capped by the local oscillation scale.
const STEEP_RAY_COS: f64 = 0.2;

/// Shape and resolution of a contour in the scaled variable `mu = lambda t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSpec {
    pub phi: f64,
    pub radius: f64,
    pub nodes_per_ray: usize,
    pub arc_nodes: usize,
    /// Outer end of each ray in `|mu|`; `f64::INFINITY` lets the decay
    /// cutoff decide.
    pub truncation: f64,
}

impl ContourSpec {
    pub fn new(phi: f64, radius: f64, nodes_per_ray: usize, arc_nodes: usize) -> Result<Self> {
        let spec = ContourSpec {
            phi,
            radius,
            nodes_per_ray,
            arc_nodes,
            truncation: f64::INFINITY,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_truncation(mut self, truncation: f64) -> Result<Self> {
        self.truncation = truncation;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.phi > PI / 2.0 && self.phi < PI) {
            return Err(Error::Contour(format!(
                "phi = {} must lie in (pi/2, pi)",
                self.phi
            )));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::Contour(format!(
                "radius must be positive, got {}",
                self.radius
            )));
        }
        if self.nodes_per_ray < 4 || self.arc_nodes < 4 {
            return Err(Error::Contour("node counts must be at least 4".into()));
        }
        if self.arc_nodes % 2 != 0 {
            return Err(Error::Contour(
                "arc_nodes must be even (conjugate pairs)".into(),
            ));
        }
        if !(self.truncation > self.radius) {
            return Err(Error::Contour(format!(
                "truncation {} must exceed the radius {}",
                self.truncation, self.radius
            )));
        }
        Ok(())
    }
}

/// Fraction of the admissible angle range used by [`default_phi`].
pub const PHI_FRACTION: f64 = 0.7;

/// Angle `pi/2 + 0.7 (upper - pi/2)` inside the admissible range
/// `(pi/2, upper]`, `upper = min(pi, (pi - omega)/alpha)`.
///
/// Leaning toward the upper end shortens the rays (faster decay of
/// `exp(lambda t)`) while keeping clear of the resolvent's singularities.
pub fn default_phi(alpha: f64, omega: f64) -> Result<f64> {
    let upper = ((PI - omega) / alpha).min(PI);
    if !(upper > PI / 2.0) {
        return Err(Error::Contour(format!(
            "no admissible angle: (pi - omega)/alpha = {upper} <= pi/2 for omega = {omega}, alpha = {alpha}"
        )));
    }
    Ok(PI / 2.0 + PHI_FRACTION * (upper - PI / 2.0))
}

/// Scaled radius used by [`ContourSpec::default_for`]. For `alpha > 1` the
/// poles of `(lambda^alpha + xi)^-1` sit close to the rays; a larger arc keeps
/// the small ones away from the path.
pub fn default_radius(alpha: f64) -> f64 {
    if alpha <= 1.25 {
        4.0
    } else {
        8.0
    }
}

impl ContourSpec {
    /// 48 nodes per ray, 64 on the arc, default angle and radius.
    pub fn default_for(alpha: f64, omega: f64) -> Result<Self> {
        ContourSpec::new(default_phi(alpha, omega)?, default_radius(alpha), 48, 64)
    }
}

/// Quadrature nodes on a contour.
///
/// The first `upper_len` entries lie in the closed upper half plane; the
/// remaining ones are their conjugates, in the same order, with conjugated
/// weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourNodes {
    points: Vec<Complex64>,
    weights: Vec<Complex64>,
    upper_len: usize,
}

impl ContourNodes {
    fn from_upper(points: Vec<Complex64>, weights: Vec<Complex64>) -> Self {
        let upper_len = points.len();
        let mut p = points;
        let mut w = weights;
        for k in 0..upper_len {
            p.push(p[k].conj());
            w.push(w[k].conj());
        }
        ContourNodes {
            points: p,
            weights: w,
            upper_len,
        }
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn upper_len(&self) -> usize {
        self.upper_len
    }

    pub fn upper(&self) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
        self.points[..self.upper_len]
            .iter()
            .copied()
            .zip(self.weights[..self.upper_len].iter().copied())
    }

    /// The image under `lambda -> lambda / t`, weights included.
    pub fn scaled(&self, t: f64) -> ContourNodes {
        let inv = 1.0 / t;
        ContourNodes {
            points: self.points.iter().map(|p| p * inv).collect(),
            weights: self.weights.iter().map(|w| w * inv).collect(),
            upper_len: self.upper_len,
        }
    }

    /// `sum_j w_j g(lambda_j)` in node order.
    pub fn integrate<F: Fn(Complex64) -> Complex64>(&self, g: F) -> Complex64 {
        self.points
            .iter()
            .zip(&self.weights)
            .fold(Complex64::new(0.0, 0.0), |acc, (&l, &w)| acc + w * g(l))
    }

    /// Same as [`integrate`](Self::integrate) for integrands with
    /// `g(conj(lambda)) = conj(g(lambda))`, using only the upper half.
    pub fn integrate_real<F: Fn(Complex64) -> Complex64>(&self, g: F) -> f64 {
        2.0 * self.upper().fold(0.0, |acc, (l, w)| acc + (w * g(l)).re)
    }

    /// Diagnostic dump: `re,im,w_re,w_im`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "re,im,w_re,w_im")?;
        for (p, w) in self.points.iter().zip(&self.weights) {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                p.re, p.im, w.re, w.im
            )?;
        }
        Ok(())
    }
}

/// Nodes for `Gamma(phi, radius / t_scale)`, laid out for the decay of
/// `exp(lambda * t_scale)`.
pub fn build_contour(spec: &ContourSpec, t_scale: f64) -> Result<ContourNodes> {
    build_scaled(spec, spec.radius, t_scale)
}

/// Nodes for `Gamma(phi, radius_lambda)` with ray layout adapted to the decay
/// of `exp(lambda * decay_time)`; `spec.radius` is ignored.
pub fn build_contour_with_radius(
    spec: &ContourSpec,
    radius_lambda: f64,
    decay_time: f64,
) -> Result<ContourNodes> {
    if !(radius_lambda > 0.0 && radius_lambda.is_finite()) {
        return Err(Error::Contour(format!(
            "radius must be positive, got {radius_lambda}"
        )));
    }
    build_scaled(spec, radius_lambda * decay_time, decay_time)
}

fn build_scaled(spec: &ContourSpec, r_mu: f64, t_scale: f64) -> Result<ContourNodes> {
    spec.validate()?;
    if !(t_scale > 0.0 && t_scale.is_finite()) {
        return Err(Error::Contour(format!(
            "time scale must be positive, got {t_scale}"
        )));
    }
    let phi = spec.phi;
    let cos = phi.cos().abs();
    let mut length = DECAY_CUTOFF / cos;
    if spec.truncation.is_finite() {
        length = length.min(spec.truncation - r_mu);
    }
    if !(length > 0.0) {
        return Err(Error::Contour("truncation leaves an empty ray".into()));
    }

    let first = (0.2 * r_mu).min(length / 4.0);
    let panels = (spec.nodes_per_ray / RAY_PANEL).max(1);
    let edges = if cos >= STEEP_RAY_COS {
        geometric_edges(first, length, panels)
    } else {
        oscillatory_edges(first, length, panels, phi.sin(), cos)
    };

    let inv_2pi_i = Complex64::new(0.0, -1.0 / (2.0 * PI));
    let dir = Complex64::from_polar(1.0, phi);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (n, e) in panel_sizes(spec.nodes_per_ray, panels)
        .into_iter()
        .zip(edges.windows(2))
    {
        let (s, w) = gauss_legendre_on(n, e[0], e[1]);
        for (si, wi) in s.into_iter().zip(w) {
            points.push(dir * ((r_mu + si) / t_scale));
            weights.push(dir * inv_2pi_i * (wi / t_scale));
        }
    }

    let half = spec.arc_nodes / 2;
    let arc_panels = (half / ARC_PANEL).max(1);
    let arc = arc_edges(phi, arc_panels);
    let r_lambda = r_mu / t_scale;
    for (n, e) in panel_sizes(half, arc_panels)
        .into_iter()
        .zip(arc.windows(2))
    {
        let (th, w) = gauss_legendre_on(n, e[0], e[1]);
        for (ti, wi) in th.into_iter().zip(w) {
            let l = Complex64::from_polar(r_lambda, ti);
            points.push(l);
            // d lambda = i lambda d theta, times 1/(2 pi i)
            weights.push(l * (wi / (2.0 * PI)));
        }
    }
    Ok(ContourNodes::from_upper(points, weights))
}

/// Closed version for validation: rays from `radius` to `truncation` joined
/// by an outer arc through the negative real axis. Integrals of functions
/// analytic outside the origin return the residue at 0.
pub fn build_closed_contour(spec: &ContourSpec) -> Result<ContourNodes> {
    spec.validate()?;
    if !spec.truncation.is_finite() {
        return Err(Error::Contour(
            "closed contour needs a finite truncation".into(),
        ));
    }
    let open = build_scaled(spec, spec.radius, 1.0)?;
    let mut points: Vec<Complex64> = open.points[..open.upper_len].to_vec();
    let mut weights: Vec<Complex64> = open.weights[..open.upper_len].to_vec();
    let half = spec.arc_nodes / 2;
    let panels = (half / ARC_PANEL).max(1);
    let big = spec.truncation;
    let sizes = panel_sizes(half, panels);
    let step = (PI - spec.phi) / panels as f64;
    for (k, n) in sizes.into_iter().enumerate() {
        let a = spec.phi + k as f64 * step;
        let (th, w) = gauss_legendre_on(n, a, a + step);
        for (ti, wi) in th.into_iter().zip(w) {
            let l = Complex64::from_polar(big, ti);
            points.push(l);
            weights.push(l * (wi / (2.0 * PI)));
        }
    }
    Ok(ContourNodes::from_upper(points, weights))
}

/// Splits `total` nodes over `panels` panels as evenly as possible.
fn panel_sizes(total: usize, panels: usize) -> Vec<usize> {
    let base = total / panels;
    let extra = total % panels;
    (0..panels).map(|k| base + usize::from(k < extra)).collect()
}

fn geometric_edges(first: f64, length: f64, panels: usize) -> Vec<f64> {
    if panels == 1 {
        return vec![0.0, length];
    }
    let p = (panels - 1) as f64;
    let log_q = (length / first).ln() / p;
    let mut e = vec![0.0];
    e.extend((0..panels).map(|k| length * ((k as f64 - p) * log_q).exp()));
    e[panels] = length;
    e
}

/// Greedy layout: panel `k` has length `min(first q^k, cap(s))`, where
/// `cap(s)` keeps a Gauss panel accurate on `exp(i omega s - decay s)`.
fn greedy_edges(
    first: f64,
    length: f64,
    omega: f64,
    decay: f64,
    log_q: f64,
    cap_scale: f64,
) -> Vec<f64> {
    let g = RAY_PANEL as f64;
    let mut e = vec![0.0];
    let mut k = 0.0;
    while *e.last().unwrap() < length {
        let s = *e.last().unwrap();
        let cap = cap_scale * 4.0 * g / omega
            * (1e-13_f64.ln() / (2.0 * g) + decay * s / (2.0 * g)).exp();
        let grow = first * (k * log_q).min(600.0).exp();
        e.push(s + grow.min(cap));
        k += 1.0;
        if e.len() > 100_000 {
            break;
        }
    }
    let n = e.len();
    e[n - 1] = length;
    e
}

fn oscillatory_edges(first: f64, length: f64, panels: usize, omega: f64, decay: f64) -> Vec<f64> {
    let big_q = 1e9_f64.ln();
    let count = |e: &Vec<f64>| e.len() - 1;
    let mut edges = if count(&greedy_edges(first, length, omega, decay, big_q, 1.0)) > panels {
        // cap-bound: widen the cap until the panel budget fits
        let (mut lo, mut hi) = (1.0_f64, 1e9_f64);
        for _ in 0..100 {
            let m = (lo * hi).sqrt();
            if count(&greedy_edges(first, length, omega, decay, big_q, m)) > panels {
                lo = m;
            } else {
                hi = m;
            }
        }
        greedy_edges(first, length, omega, decay, big_q, hi)
    } else {
        let (mut lo, mut hi) = (0.0_f64, big_q);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if count(&greedy_edges(first, length, omega, decay, m, 1.0)) > panels {
                lo = m;
            } else {
                hi = m;
            }
        }
        greedy_edges(first, length, omega, decay, hi, 1.0)
    };
    while edges.len() - 1 < panels {
        let i = (0..edges.len() - 1)
            .max_by(|&a, &b| (edges[a + 1] - edges[a]).total_cmp(&(edges[b + 1] - edges[b])))
            .unwrap();
        edges.insert(i + 1, 0.5 * (edges[i] + edges[i + 1]));
    }
    edges
}

/// Arc panel edges on `[0, phi]`: uniform on `[0, phi/2]`, halving toward
/// the corner at `phi`.
fn arc_edges(phi: f64, panels: usize) -> Vec<f64> {
    match panels {
        1 => vec![0.0, phi],
        2 => vec![0.0, phi / 2.0, phi],
        m => {
            let graded = m.div_ceil(2).min(5);
            let uniform = m - graded;
            let mut e: Vec<f64> = (0..=uniform)
                .map(|k| phi / 2.0 * k as f64 / uniform as f64)
                .collect();
            e.extend((2..=graded).map(|k| phi - phi * 0.5_f64.powi(k as i32)));
            e.push(phi);
            e
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> ContourSpec {
        ContourSpec::new(0.75 * PI, 3.0, 48, 48).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(ContourSpec::new(PI / 2.0, 1.0, 48, 48).is_err());
        assert!(ContourSpec::new(PI, 1.0, 48, 48).is_err());
        assert!(ContourSpec::new(2.0, 0.0, 48, 48).is_err());
        assert!(ContourSpec::new(2.0, 1.0, 3, 48).is_err());
        assert!(ContourSpec::new(2.0, 1.0, 48, 9).is_err());
        assert!(spec().with_truncation(2.0).is_err());
    }

    #[test]
    fn node_counts_are_exact() {
        for (nr, na) in [(4, 4), (48, 48), (50, 10), (97, 64)] {
            let s = ContourSpec::new(2.2, 1.0, nr, na).unwrap();
            let c = build_contour(&s, 1.0).unwrap();
            assert_eq!(c.len(), 2 * nr + na);
        }
        let s = ContourSpec::new(1.62, 1.0, 60, 16).unwrap();
        assert_eq!(build_contour(&s, 0.3).unwrap().len(), 136);
    }

    #[test]
    fn conjugate_symmetry_is_exact() {
        let c = build_contour(&spec(), 0.7).unwrap();
        let n = c.upper_len();
        for k in 0..n {
            assert_eq!(c.points()[n + k], c.points()[k].conj());
            assert_eq!(c.weights()[n + k], c.weights()[k].conj());
        }
        let v = c.integrate(|l| (l * 0.7).exp() / (l * l + 2.0));
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn scaling_in_t() {
        let a = build_contour(&spec(), 1.0).unwrap();
        let b = build_contour(&spec(), 2.0).unwrap();
        for (p, q) in a.points().iter().zip(b.points()) {
            assert!((p / 2.0 - q).norm() <= 1e-15 * p.norm());
        }
    }

    #[test]
    fn inverse_laplace_of_lambda_pow_minus_two() {
        let c = build_contour(&spec(), 1.0).unwrap();
        let v = c.integrate(|l| l.exp() / (l * l));
        assert!((v - 1.0).norm() < 1e-8, "{v}");
    }

    #[test]
    fn closed_contour_recovers_residue() {
        let s = ContourSpec::new(0.7 * PI, 1.0, 24, 8)
            .unwrap()
            .with_truncation(10.0)
            .unwrap();
        let c = build_closed_contour(&s).unwrap();
        let v = c.integrate(|l| 1.0 / l);
        assert!((v - 1.0).norm() < 1e-10, "{v}");
        let s = s
            .with_truncation(10.0)
            .map(|s| ContourSpec {
                nodes_per_ray: 96,
                arc_nodes: 48,
                ..s
            })
            .unwrap();
        let v = build_closed_contour(&s)
            .unwrap()
            .integrate(|l| 1.0 / (l * l));
        assert!(v.norm() < 1e-10, "{v}");
    }

    #[test]
    fn steep_rays_use_capped_layout() {
        // slow decay along nearly vertical rays needs many more nodes
        let s = ContourSpec::new(1.62, 3.0, 600, 48).unwrap();
        let c = build_contour(&s, 1.0).unwrap();
        let v = c.integrate(|l| l.exp() / (l * l));
        assert!((v - 1.0).norm() < 1e-8, "{v}");
    }

    #[test]
    fn default_phi_bounds() {
        let p = default_phi(1.5, 0.0).unwrap();
        assert!(p > PI / 2.0 && p < 2.0 * PI / 3.0);
        assert!((default_phi(1.0, 0.0).unwrap() - 0.85 * PI).abs() < 1e-15);
        assert!(default_phi(1.9, 0.3).is_err());
    }

    #[test]
    fn csv_dump_has_one_row_per_node() {
        let c = build_contour(&spec(), 1.0).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), c.len() + 1);
        assert!(text.starts_with("re,im,w_re,w_im"));
    }
}
