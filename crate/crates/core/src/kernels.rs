//! Scalar kernels evaluated on contours and on the real axis.

use std::f64::consts::PI;

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::contour::{build_contour, build_contour_with_radius, ContourSpec};
use crate::error::{Error, Result};
use crate::quadrature::Adaptive;

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::domain(format!(
            "alpha must lie in (0, 2), got {alpha}"
        )));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::domain(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// Contour for `h(t, xi)`: angle halfway between `pi/2` and `min(pi, pi/alpha)`,
/// radius `min(xi^(1/alpha)/2, 1/t)` so the pole at `xi^(1/alpha)` stays
/// outside and `exp(r t)` stays bounded. Steep rays (alpha near 2) get more
/// nodes because they decay slowly.
pub fn kernel_contour_spec(t: f64, xi: f64, alpha: f64) -> Result<ContourSpec> {
    check_alpha(alpha)?;
    check_positive("t", t)?;
    check_positive("xi", xi)?;
    let phi = 0.5 * (PI / 2.0 + (PI / alpha).min(PI));
    let radius = (0.5 * xi.powf(1.0 / alpha)).min(1.0 / t);
    let nodes = if phi.cos().abs() < 0.2 { 1200 } else { 240 };
    ContourSpec::new(phi, radius, nodes, 64)
}

/// `(1/2 pi i) int_Gamma e^{lambda t} / (lambda^alpha - xi) d lambda` with
/// `spec.radius` taken as the radius in the `lambda` plane.
pub fn kernel_h_contour(t: f64, xi: f64, alpha: f64, spec: &ContourSpec) -> Result<f64> {
    check_alpha(alpha)?;
    check_positive("t", t)?;
    check_positive("xi", xi)?;
    let ra = spec.radius.powf(alpha);
    if ra >= xi {
        return Err(Error::Precondition {
            what: "contour radius must satisfy r^alpha < xi so the pole stays outside".into(),
            measured: ra,
            tolerance: xi,
        });
    }
    if alpha * spec.phi >= 2.0 * PI {
        return Err(Error::Contour("alpha * phi must stay below 2 pi".into()));
    }
    let nodes = build_contour_with_radius(spec, spec.radius, t)?;
    Ok(nodes.integrate_real(|l| (l * t).exp() / (l.powf(alpha) - xi)))
}

/// `(1/pi) int_0^inf e^{-t tau} tau^alpha sin(alpha pi) / (tau^{2 alpha} - 2 xi cos(alpha pi) tau^alpha + xi^2) d tau`.
pub fn kernel_h_real(t: f64, xi: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_positive("t", t)?;
    check_positive("xi", xi)?;
    let s = (alpha * PI).sin();
    if alpha == 1.0 {
        return Ok(0.0);
    }
    let c2 = 2.0 * xi * (alpha * PI).cos();
    let integrand = move |tau: f64| {
        let ta = tau.powf(alpha);
        (-t * tau).exp() * ta * s / (ta * ta - c2 * ta + xi * xi) / PI
    };
    // tau^(alpha+1) / xi^2 below 1e-20 on the left, exp(-t tau) below 1e-20 on the right
    let y_lo = ((1e-20 * xi * xi).ln() / (alpha + 1.0)).min(-5.0);
    let y_hi = (46.0 / t).ln();
    let peak = xi.powf(1.0 / alpha);
    Adaptive::with_abs_tol(1e-13).integrate_half_line(integrand, y_lo, y_hi, &[peak, 1.0 / t])
}

/// `int_0^inf int_0^inf e^{-a t tau} t^b tau^c / (tau^d + xi) dt d tau`,
/// with the inner integral done in closed form.
pub fn scaling_integral(a: f64, b: f64, c: f64, d: f64, xi: f64) -> Result<f64> {
    check_positive("a", a)?;
    check_positive("xi", xi)?;
    if !(-1.0 < b && b < c && c < b + d) {
        return Err(Error::domain(format!(
            "need -1 < b < c < b + d, got b = {b}, c = {c}, d = {d}"
        )));
    }
    let front = gamma(b + 1.0) / a.powf(b + 1.0);
    let p = c - b;
    // tau * integrand ~ tau^p / xi at 0 and tau^(p - d) at infinity
    let y0 = xi.ln() / d;
    let y_lo = (y0 - 40.0 / p).max(-700.0);
    let y_hi = (y0 + 40.0 / (d - p)).min(700.0);
    let inner = Adaptive::with_abs_tol(1e-15).integrate(
        |y| {
            let tau = y.exp();
            tau.powf(p) / (tau.powf(d) + xi)
        },
        y_lo,
        y_hi,
        &[y0],
    )?;
    Ok(front * inner)
}

/// `(1/2 pi i) int_Gamma e^{lambda t} / (lambda^alpha + xi) d lambda` on the
/// contour scaled by `t`; equals `t^(alpha-1) E_{alpha,alpha}(-xi t^alpha)`.
pub fn scalar_propagator(t: f64, xi: f64, alpha: f64, spec: &ContourSpec) -> Result<f64> {
    scalar_propagator_weighted(t, xi, alpha, 0.0, spec)
}

/// Same with an extra factor `lambda^power` in the integrand.
pub fn scalar_propagator_weighted(
    t: f64,
    xi: f64,
    alpha: f64,
    power: f64,
    spec: &ContourSpec,
) -> Result<f64> {
    check_alpha(alpha)?;
    check_positive("t", t)?;
    if !(xi >= 0.0) {
        return Err(Error::domain(format!("xi must be non-negative, got {xi}")));
    }
    if alpha * spec.phi >= PI {
        return Err(Error::Contour(format!(
            "phi = {} leaves the poles of (lambda^alpha + xi)^-1 on the wrong side",
            spec.phi
        )));
    }
    let nodes = build_contour(spec, t)?;
    let p = Complex64::new(power, 0.0);
    Ok(nodes.integrate_real(|l| (l * t).exp() * l.powc(p) / (l.powf(alpha) + xi)))
}
