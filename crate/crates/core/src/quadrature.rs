//! Scalar quadrature rules shared by the contour and kernel code.
//!
//! Two families live here: fixed Gauss-Legendre rules (used panel by panel on
//! contours) and a globally adaptive Gauss-Kronrod 7/15 integrator for the
//! real-axis integrals.

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "gauss_legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped onto `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        x.iter().map(|&xi| mid + half * xi).collect(),
        w.iter().map(|&wi| half * wi).collect(),
    )
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive integration settings.
#[derive(Debug, Clone, Copy)]
pub struct Adaptive {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Adaptive {
    fn default() -> Self {
        Adaptive {
            abs_tol: 1e-12,
            rel_tol: 1e-13,
            max_intervals: 4000,
        }
    }
}

impl Adaptive {
    pub fn with_abs_tol(abs_tol: f64) -> Self {
        Adaptive {
            abs_tol,
            ..Default::default()
        }
    }

    /// Globally adaptive G7K15 over `[a, b]` split first at `breaks`.
    pub fn integrate<F: Fn(f64) -> f64>(
        &self,
        f: F,
        a: f64,
        b: f64,
        breaks: &[f64],
    ) -> Result<f64> {
        let mut pts = vec![a];
        let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
        inner.sort_by(|x, y| x.total_cmp(y));
        pts.extend(inner);
        pts.push(b);

        let mut intervals: Vec<(f64, f64, f64, f64)> = pts
            .windows(2)
            .map(|w| {
                let (v, e) = gk15(&f, w[0], w[1]);
                (w[0], w[1], v, e)
            })
            .collect();

        loop {
            let total: f64 = intervals.iter().map(|iv| iv.2).sum();
            let err: f64 = intervals.iter().map(|iv| iv.3).sum();
            if !total.is_finite() {
                return Err(Error::Convergence(
                    "integrand produced a non-finite value".into(),
                ));
            }
            if err <= self.abs_tol.max(self.rel_tol * total.abs()) {
                return Ok(total);
            }
            if intervals.len() >= self.max_intervals {
                return Err(Error::Convergence(format!(
                    "adaptive quadrature stalled at error {err:.3e} after {} intervals",
                    intervals.len()
                )));
            }
            let (idx, _) = intervals
                .iter()
                .enumerate()
                .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
                .expect("at least one interval");
            let (lo, hi, _, _) = intervals.swap_remove(idx);
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return Err(Error::Convergence(
                    "interval underflow in adaptive quadrature".into(),
                ));
            }
            let (v1, e1) = gk15(&f, lo, mid);
            let (v2, e2) = gk15(&f, mid, hi);
            intervals.push((lo, mid, v1, e1));
            intervals.push((mid, hi, v2, e2));
        }
    }

    /// Integral over `(0, inf)` through the substitution `tau = exp(y)`.
    ///
    /// The integrand must decay at both ends: the window in `y` is
    /// `[y_lo, y_hi]` and any `breaks` are given in `tau`.
    pub fn integrate_half_line<F: Fn(f64) -> f64>(
        &self,
        f: F,
        y_lo: f64,
        y_hi: f64,
        breaks: &[f64],
    ) -> Result<f64> {
        let mut ybreaks: Vec<f64> = breaks
            .iter()
            .filter(|&&b| b > 0.0)
            .map(|b| b.ln())
            .collect();
        // A single wide panel can miss a narrow bump entirely, so start from
        // panels at most two units long in y.
        let chunks = ((y_hi - y_lo) / 2.0).ceil().max(1.0) as usize;
        ybreaks.extend((1..chunks).map(|k| y_lo + (y_hi - y_lo) * k as f64 / chunks as f64));
        self.integrate(
            |y| {
                let tau = y.exp();
                f(tau) * tau
            },
            y_lo,
            y_hi,
            &ybreaks,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in 1..=16 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(xi, wi)| wi * xi.powi(deg as i32))
                    .sum();
                let exact = if deg % 2 == 1 {
                    0.0
                } else {
                    2.0 / (deg as f64 + 1.0)
                };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        // int_0^1 x^{-1/2} dx = 2
        let v = Adaptive::default()
            .integrate(|x| x.powf(-0.5), 0.0, 1.0, &[])
            .unwrap();
        assert!((v - 2.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn half_line_gamma_integral() {
        // int_0^inf tau^{0.3} e^{-tau} dtau = Gamma(1.3)
        let v = Adaptive::default()
            .integrate_half_line(|t| t.powf(0.3) * (-t).exp(), -140.0, 4.0, &[])
            .unwrap();
        assert!((v - 0.897_470_696_306_277_2).abs() < 1e-12, "{v}");
    }
}
