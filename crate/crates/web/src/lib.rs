//! wasm-bindgen bindings for the static demo page in `www/`.

use wasm_bindgen::prelude::*;

use caputo::config::RunConfig;
use caputo::kernels::{kernel_contour_spec, kernel_h_contour, kernel_h_real};
use caputo::mittag_leffler::mittag_leffler;
use caputo::problem::{real_fn, solve, ProblemSpec};
use caputo::Complex64;

fn js(e: caputo::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Solves the problem described by an INI configuration and returns
/// `[x_0 .. x_{n+1}, u_0 .. u_{n+1}]` at the final time (real parts).
#[wasm_bindgen]
pub fn solve_config(ini: &str) -> Result<Vec<f64>, JsValue> {
    let cfg = RunConfig::parse(ini).map_err(js)?;
    let sol = solve(&cfg.spec).map_err(js)?;
    let last = sol.times().len() - 1;
    let row = sol.full_row(last);
    let n = sol.space().n();
    let mut out: Vec<f64> = (0..n + 2).map(|i| i as f64 / (n + 1) as f64).collect();
    out.extend(row.iter().map(|z| z.re));
    Ok(out)
}

/// Decay of the first sine mode under the discrete Laplacian:
/// `[t, computed amplitude, Mittag-Leffler amplitude]` per time node.
#[wasm_bindgen]
pub fn mode_decay(alpha: f64, n: usize, steps: usize) -> Result<Vec<f64>, JsValue> {
    let mut spec = ProblemSpec::new(alpha, 0.5, 1.0, n, steps).map_err(js)?;
    spec.u0 = real_fn(|x| (std::f64::consts::PI * x).sin());
    let sol = solve(&spec).map_err(js)?;
    let grid = sol.space();
    let mid = (n - 1) / 2;
    let peak = grid.sample_real(|x| (std::f64::consts::PI * x).sin())[mid].re;
    let mu = caputo::elliptic::laplacian_eigenvalue(grid, 1);
    let mut out = Vec::with_capacity(3 * sol.times().len());
    for (i, &t) in sol.times().iter().enumerate() {
        let e = mittag_leffler(alpha, 1.0, Complex64::new(-mu * t.powf(alpha), 0.0)).map_err(js)?;
        out.extend([t, sol.interior().row(i)[mid].re / peak, e.re]);
    }
    Ok(out)
}

/// The kernel `h(t, xi)` by contour quadrature and on the real axis.
#[wasm_bindgen]
pub fn kernel_pair(alpha: f64, t: f64, xi: f64) -> Result<Vec<f64>, JsValue> {
    let spec = kernel_contour_spec(t, xi, alpha).map_err(js)?;
    let c = kernel_h_contour(t, xi, alpha, &spec).map_err(js)?;
    let r = kernel_h_real(t, xi, alpha).map_err(js)?;
    Ok(vec![c, r])
}
