//! Second-order operators `a u'' + b u' + c u` on `(0, 1)` with Dirichlet
//! conditions, discretised by central differences on a uniform grid.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type GridFn = Vec<Complex64>;

const PIVOT_FLOOR: f64 = 1e-300;
/// Safety factor applied to estimated sector angle and radius.
pub const SECTOR_MARGIN: f64 = 1.1;

/// Interior nodes `x_i = i h`, `i = 1..=n`, `h = 1/(n+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpaceGrid {
    n: usize,
}

impl SpaceGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::domain(format!(
                "space grid needs at least 3 interior nodes, got {n}"
            )));
        }
        Ok(SpaceGrid { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.n as f64 + 1.0)
    }

    /// Coordinate of unknown `i` (zero-based).
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 1.0) * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    pub fn sample<F: Fn(f64) -> Complex64>(&self, f: F) -> GridFn {
        (0..self.n).map(|i| f(self.x(i))).collect()
    }

    pub fn sample_real<F: Fn(f64) -> f64>(&self, f: F) -> GridFn {
        self.sample(|x| Complex64::new(f(x), 0.0))
    }

    /// Grid with half the spacing.
    pub fn refined(&self) -> Self {
        SpaceGrid { n: 2 * self.n + 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriDiagMatrix {
    pub sub: Vec<Complex64>,
    pub diag: Vec<Complex64>,
    pub sup: Vec<Complex64>,
}

impl TriDiagMatrix {
    pub fn new(sub: Vec<Complex64>, diag: Vec<Complex64>, sup: Vec<Complex64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 || sub.len() + 1 != n || sup.len() + 1 != n {
            return Err(Error::domain(
                "tridiagonal band lengths must be n-1, n, n-1",
            ));
        }
        Ok(TriDiagMatrix { sub, diag, sup })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, u: &[Complex64]) -> GridFn {
        let n = self.n();
        assert_eq!(u.len(), n, "vector length does not match matrix");
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * u[i];
                if i > 0 {
                    v += self.sub[i - 1] * u[i - 1];
                }
                if i + 1 < n {
                    v += self.sup[i] * u[i + 1];
                }
                v
            })
            .collect()
    }

    pub fn is_real(&self) -> bool {
        self.sub
            .iter()
            .chain(&self.diag)
            .chain(&self.sup)
            .all(|v| v.im == 0.0)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> TriDiagMatrix {
        TriDiagMatrix {
            sub: self.sup.iter().map(|v| v.conj()).collect(),
            diag: self.diag.iter().map(|v| v.conj()).collect(),
            sup: self.sub.iter().map(|v| v.conj()).collect(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.diag[i]
            } else if j + 1 == i {
                self.sub[j]
            } else if i + 1 == j {
                self.sup[i]
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Solves `(z I - self) w = rhs` by elimination without pivoting.
    pub fn shifted_solve(&self, z: Complex64, rhs: &[Complex64]) -> Result<GridFn> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.n()];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.n()];
        self.shifted_solve_into(z, rhs, &mut out, &mut scratch)?;
        Ok(out)
    }

    /// Allocation-free variant of [`shifted_solve`](Self::shifted_solve).
    pub fn shifted_solve_into(
        &self,
        z: Complex64,
        rhs: &[Complex64],
        out: &mut [Complex64],
        scratch: &mut [Complex64],
    ) -> Result<()> {
        let n = self.n();
        assert!(rhs.len() == n && out.len() == n && scratch.len() == n);
        // forward sweep on the bands of zI - A: sub/sup negated
        let mut pivot = z - self.diag[0];
        if pivot.norm() < PIVOT_FLOOR {
            return Err(Error::NearSingular { z });
        }
        out[0] = rhs[0] / pivot;
        for i in 1..n {
            scratch[i] = -self.sup[i - 1] / pivot;
            pivot = (z - self.diag[i]) + self.sub[i - 1] * scratch[i];
            if pivot.norm() < PIVOT_FLOOR || !pivot.is_finite() {
                return Err(Error::NearSingular { z });
            }
            out[i] = (rhs[i] + self.sub[i - 1] * out[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            out[i] -= scratch[i + 1] * out[i + 1];
        }
        Ok(())
    }
}

/// Sector metadata: the spectrum of `-A_h` lies in `|Arg| <= omega` apart
/// from eigenvalues of modulus below `radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sector {
    pub omega: f64,
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub struct EllipticOp {
    grid: SpaceGrid,
    a: GridFn,
    b: GridFn,
    c: GridFn,
    alpha: f64,
    matrix: TriDiagMatrix,
    sector: Sector,
}

impl EllipticOp {
    pub fn new(grid: SpaceGrid, a: GridFn, b: GridFn, c: GridFn, alpha: f64) -> Result<Self> {
        let n = grid.n();
        if a.len() != n || b.len() != n || c.len() != n {
            return Err(Error::domain("coefficient samples do not match the grid"));
        }
        if let Some(i) = a.iter().position(|v| v.norm() == 0.0 || !v.is_finite()) {
            return Err(Error::domain(format!(
                "leading coefficient vanishes at x = {}",
                grid.x(i)
            )));
        }
        if b.iter().chain(&c).any(|v| !v.is_finite()) {
            return Err(Error::domain("coefficients must be finite"));
        }
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::domain(format!(
                "alpha must lie in (0, 2), got {alpha}"
            )));
        }
        let matrix = assemble(&a, &b, &c, &grid);
        let sector = estimate_sector(&matrix, &a)?;
        Ok(EllipticOp {
            grid,
            a,
            b,
            c,
            alpha,
            matrix,
            sector,
        })
    }

    pub fn from_fns<A, B, C>(grid: SpaceGrid, a: A, b: B, c: C, alpha: f64) -> Result<Self>
    where
        A: Fn(f64) -> Complex64,
        B: Fn(f64) -> Complex64,
        C: Fn(f64) -> Complex64,
    {
        Self::new(grid, grid.sample(a), grid.sample(b), grid.sample(c), alpha)
    }

    /// `u''` with Dirichlet conditions.
    pub fn laplacian(grid: SpaceGrid, alpha: f64) -> Result<Self> {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self::from_fns(grid, |_| one, |_| zero, |_| zero, alpha)
    }

    pub fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    pub fn a(&self) -> &[Complex64] {
        &self.a
    }

    pub fn b(&self) -> &[Complex64] {
        &self.b
    }

    pub fn c(&self) -> &[Complex64] {
        &self.c
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn matrix(&self) -> &TriDiagMatrix {
        &self.matrix
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn is_real(&self) -> bool {
        self.matrix.is_real()
    }

    /// `A_h u` with homogeneous boundary values.
    pub fn apply(&self, u: &[Complex64]) -> GridFn {
        self.matrix.apply(u)
    }

    /// Contribution of boundary values `u(0) = gl`, `u(1) = gr` to rows 1 and n.
    pub fn boundary_terms(&self, gl: Complex64, gr: Complex64) -> GridFn {
        let n = self.grid.n();
        let h = self.grid.h();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        out[0] = (self.a[0] / (h * h) - self.b[0] / (2.0 * h)) * gl;
        out[n - 1] += (self.a[n - 1] / (h * h) + self.b[n - 1] / (2.0 * h)) * gr;
        out
    }

    /// `A_h u` for a grid function with boundary values `gl`, `gr`.
    pub fn apply_with_boundary(&self, u: &[Complex64], gl: Complex64, gr: Complex64) -> GridFn {
        let mut out = self.apply(u);
        for (o, b) in out.iter_mut().zip(self.boundary_terms(gl, gr)) {
            *o += b;
        }
        out
    }
}

/// Central-difference matrix of `a D^2 + b D + c` with eliminated Dirichlet rows.
pub fn assemble(
    a: &[Complex64],
    b: &[Complex64],
    c: &[Complex64],
    grid: &SpaceGrid,
) -> TriDiagMatrix {
    let n = grid.n();
    let h = grid.h();
    let h2 = h * h;
    let diag = (0..n).map(|i| -2.0 * a[i] / h2 + c[i]).collect();
    let sub = (1..n).map(|i| a[i] / h2 - b[i] / (2.0 * h)).collect();
    let sup = (0..n - 1).map(|i| a[i] / h2 + b[i] / (2.0 * h)).collect();
    TriDiagMatrix { sub, diag, sup }
}

/// Solves `(z I - A_h) w = rhs`.
pub fn resolvent_solve(op: &EllipticOp, z: Complex64, rhs: &[Complex64]) -> Result<GridFn> {
    let w = op.matrix.shifted_solve(z, rhs)?;
    debug_assert!({
        let aw = op.matrix.apply(&w);
        let scale = rhs.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
        let res = w
            .iter()
            .zip(&aw)
            .zip(rhs)
            .fold(0.0_f64, |m, ((wi, awi), ri)| {
                m.max((z * wi - awi - ri).norm())
            });
        res <= 1e-10 * scale.max(f64::MIN_POSITIVE) * (1.0 + z.norm() / 1e4)
    });
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticityReport {
    pub max_arg: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
}

/// Compares `max_i |Arg a_i|` with `(1 - alpha/2) pi`.
pub fn ellipticity_check(op: &EllipticOp) -> EllipticityReport {
    let max_arg = op.a.iter().fold(0.0_f64, |m, v| m.max(v.arg().abs()));
    let bound = (1.0 - op.alpha / 2.0) * PI;
    EllipticityReport {
        max_arg,
        bound,
        margin: bound - max_arg,
        pass: max_arg < bound,
    }
}

/// Eigenvalues of the assembled matrix from a dense complex Schur form.
pub fn eigenvalues(matrix: &TriDiagMatrix) -> Result<Vec<Complex64>> {
    let dense = matrix.to_dense();
    let schur = nalgebra::linalg::Schur::try_new(dense, 1e-14, 10_000)
        .ok_or_else(|| Error::Convergence("Schur iteration did not converge".into()))?;
    let ev = schur
        .eigenvalues()
        .ok_or_else(|| Error::Convergence("Schur form is not triangular".into()))?;
    Ok(ev.iter().copied().collect())
}

/// Sector of `-A_h`: the angle covers the leading-coefficient arguments and
/// the eigenvalues in the right half plane; eigenvalues outside that angle
/// set the radius. Both get a 10% margin.
pub fn estimate_sector(matrix: &TriDiagMatrix, a: &[Complex64]) -> Result<Sector> {
    let ell = a.iter().fold(0.0_f64, |m, v| m.max(v.arg().abs()));
    let nu: Vec<Complex64> = eigenvalues(matrix)?.into_iter().map(|m| -m).collect();
    let spec = nu
        .iter()
        .filter(|v| v.re > 0.0)
        .fold(0.0_f64, |m, v| m.max(v.arg().abs()));
    let omega = (SECTOR_MARGIN * ell.max(spec)).min(PI);
    let radius = nu
        .iter()
        .filter(|v| v.re <= 0.0 || v.arg().abs() > omega)
        .fold(0.0_f64, |m, v| m.max(v.norm()));
    Ok(Sector {
        omega,
        radius: SECTOR_MARGIN * radius,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSample {
    pub lambda: Complex64,
    /// Lower bound for `||(lambda - A_h)^{-1}||_2`; infinite when the solve broke down.
    pub norm: f64,
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectorProbe {
    pub samples: Vec<ProbeSample>,
    /// `sup |lambda| ||R(lambda)||` over samples with a finite estimate.
    pub sup_scaled: f64,
    /// Sample points where the solve broke down (inside the spectrum).
    pub singular: Vec<Complex64>,
}

const PROBE_ITERATIONS: usize = 30;

/// Estimates `||(lambda - A_h)^{-1}||_2` on `lambda = r e^{i theta}` for all
/// given angles and radii, by power iteration on `R^H R` from a seeded random
/// start. The estimate never exceeds the true norm.
pub fn sector_probe(
    op: &EllipticOp,
    rays: &[f64],
    radii: &[f64],
    seed: u64,
) -> Result<SectorProbe> {
    if rays.is_empty() || radii.is_empty() {
        return Err(Error::domain(
            "sector probe needs at least one angle and one radius",
        ));
    }
    let adj = op.matrix.adjoint();
    let n = op.grid.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::new();
    let mut singular = Vec::new();
    for &theta in rays {
        for &r in radii {
            let lambda = Complex64::from_polar(r, theta);
            let mut v: GridFn = (0..n)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            normalize(&mut v);
            let mut est = 0.0;
            let mut broke = false;
            for _ in 0..PROBE_ITERATIONS {
                let w = match op.matrix.shifted_solve(lambda, &v) {
                    Ok(w) => w,
                    Err(Error::NearSingular { .. }) => {
                        broke = true;
                        break;
                    }
                    Err(e) => return Err(e),
                };
                est = norm2(&w);
                if !est.is_finite() {
                    broke = true;
                    break;
                }
                let mut u = match adj.shifted_solve(lambda.conj(), &w) {
                    Ok(u) => u,
                    Err(Error::NearSingular { .. }) => {
                        broke = true;
                        break;
                    }
                    Err(e) => return Err(e),
                };
                if norm2(&u) == 0.0 {
                    break;
                }
                normalize(&mut u);
                v = u;
            }
            if broke {
                singular.push(lambda);
                samples.push(ProbeSample {
                    lambda,
                    norm: f64::INFINITY,
                    scaled: f64::INFINITY,
                });
            } else {
                samples.push(ProbeSample {
                    lambda,
                    norm: est,
                    scaled: r * est,
                });
            }
        }
    }
    let sup_scaled = samples
        .iter()
        .filter(|s| s.scaled.is_finite())
        .fold(0.0_f64, |m, s| m.max(s.scaled));
    Ok(SectorProbe {
        samples,
        sup_scaled,
        singular,
    })
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(v: &mut [Complex64]) {
    let s = norm2(v);
    if s > 0.0 {
        for x in v.iter_mut() {
            *x /= s;
        }
    }
}

/// Discrete Dirichlet Laplacian eigenvalue `-mu_k`, `mu_k = (4/h^2) sin^2(k pi h / 2)`.
pub fn laplacian_eigenvalue(grid: &SpaceGrid, k: usize) -> f64 {
    let h = grid.h();
    4.0 / (h * h) * (k as f64 * PI * h / 2.0).sin().powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
    }

    #[test]
    fn grid_basics() {
        assert!(SpaceGrid::new(2).is_err());
        let g = SpaceGrid::new(7).unwrap();
        assert_eq!(g.h(), 0.125);
        assert_eq!(g.x(0), 0.125);
        assert_eq!(g.x(6), 0.875);
        assert_eq!(g.refined().n(), 15);
    }

    #[test]
    fn sine_is_discrete_eigenvector() {
        let g = SpaceGrid::new(31).unwrap();
        let op = EllipticOp::laplacian(g, 0.5).unwrap();
        for k in [1, 4, 17] {
            let u = g.sample_real(|x| (k as f64 * PI * x).sin());
            let au = op.apply(&u);
            let mu = laplacian_eigenvalue(&g, k);
            let expect: GridFn = u.iter().map(|v| -mu * v).collect();
            assert!(max_diff(&au, &expect) < 1e-9 * mu);
        }
    }

    #[test]
    fn additivity_in_zeroth_order_term() {
        let g = SpaceGrid::new(15).unwrap();
        let lap = EllipticOp::laplacian(g, 1.0).unwrap();
        let shifted = EllipticOp::from_fns(g, |_| c(1.0), |_| c(0.0), |_| c(5.0), 1.0).unwrap();
        let u = g.sample_real(|x| x * x * (1.0 - x));
        let lhs = shifted.apply(&u);
        let rhs: GridFn = lap
            .apply(&u)
            .iter()
            .zip(&u)
            .map(|(a, b)| a + 5.0 * b)
            .collect();
        assert!(max_diff(&lhs, &rhs) < 1e-12);
        assert!(lap.apply(&vec![c(0.0); 15]).iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn second_order_convergence_of_laplacian() {
        let mut errs = Vec::new();
        for n in [15, 31, 63] {
            let g = SpaceGrid::new(n).unwrap();
            let op = EllipticOp::laplacian(g, 1.0).unwrap();
            let u = g.sample_real(|x| (PI * x).sin());
            let au = op.apply(&u);
            let exact: GridFn = u.iter().map(|v| -PI * PI * v).collect();
            errs.push(max_diff(&au, &exact));
        }
        assert!((errs[0] / errs[1] - 4.0).abs() < 0.1);
        assert!((errs[1] / errs[2] - 4.0).abs() < 0.1);
    }

    #[test]
    fn boundary_terms_reproduce_linear_function() {
        // u = 2 + 3x has zero second derivative; with b = 1 the operator gives 3
        let g = SpaceGrid::new(9).unwrap();
        let op = EllipticOp::from_fns(g, |_| c(1.0), |_| c(1.0), |_| c(0.0), 1.0).unwrap();
        let u = g.sample_real(|x| 2.0 + 3.0 * x);
        let au = op.apply_with_boundary(&u, c(2.0), c(5.0));
        assert!(au.iter().all(|v| (v - 3.0).norm() < 1e-10));
    }

    #[test]
    fn resolvent_diagonalizes_in_sine_basis() {
        let g = SpaceGrid::new(63).unwrap();
        let op = EllipticOp::laplacian(g, 1.0).unwrap();
        let z = Complex64::new(-3.0, 7.0);
        for k in [1, 5, 40] {
            let f = g.sample_real(|x| (k as f64 * PI * x).sin());
            let w = resolvent_solve(&op, z, &f).unwrap();
            let mu = laplacian_eigenvalue(&g, k);
            let expect: GridFn = f.iter().map(|v| v / (z + mu)).collect();
            assert!(max_diff(&w, &expect) < 1e-11);
        }
    }

    #[test]
    fn resolvent_at_zero_inverts_operator() {
        let g = SpaceGrid::new(20).unwrap();
        let op = EllipticOp::laplacian(g, 1.0).unwrap();
        let f = g.sample_real(|x| x.exp());
        let w = resolvent_solve(&op, c(0.0), &f).unwrap();
        let back: GridFn = op.apply(&w).iter().map(|v| -v).collect();
        assert!(max_diff(&back, &f) < 1e-9);
    }

    #[test]
    fn near_singular_detected() {
        let g = SpaceGrid::new(3).unwrap();
        // zI - A_h with A_h = diag(1) and no coupling: z = 1 is singular
        let m = TriDiagMatrix::new(vec![c(0.0); 2], vec![c(1.0); 3], vec![c(0.0); 2]).unwrap();
        assert!(matches!(
            m.shifted_solve(c(1.0), &[c(1.0); 3]),
            Err(Error::NearSingular { .. })
        ));
        let _ = g;
    }

    #[test]
    fn ellipticity_examples() {
        let g = SpaceGrid::new(7).unwrap();
        let zero = |_| c(0.0);
        let op = EllipticOp::laplacian(g, 1.5).unwrap();
        assert!(ellipticity_check(&op).pass);
        let rot = Complex64::from_polar(1.0, PI / 3.0);
        let op = EllipticOp::from_fns(g, |_| rot, zero, zero, 1.5).unwrap();
        let r = ellipticity_check(&op);
        assert!(!r.pass && (r.max_arg - PI / 3.0).abs() < 1e-15);
        let rot = Complex64::from_polar(1.0, PI / 8.0);
        let op = EllipticOp::from_fns(g, |_| rot, zero, zero, 1.0).unwrap();
        assert!(ellipticity_check(&op).pass);
    }

    #[test]
    fn sector_of_laplacian_is_thin() {
        let g = SpaceGrid::new(31).unwrap();
        let op = EllipticOp::laplacian(g, 1.0).unwrap();
        let s = op.sector();
        assert!(s.omega < 1e-10, "{s:?}");
        assert_eq!(s.radius, 0.0);
        // a large positive zeroth-order term pushes low modes out of the sector
        let op = EllipticOp::from_fns(g, |_| c(1.0), |_| c(0.0), |_| c(20.0), 1.0).unwrap();
        let s = op.sector();
        assert!(
            (s.radius - 1.1 * (20.0 - laplacian_eigenvalue(&g, 1))).abs() < 1e-8,
            "{s:?}"
        );
    }

    #[test]
    fn probe_on_imaginary_axis_and_near_eigenvalue() {
        let g = SpaceGrid::new(31).unwrap();
        let op = EllipticOp::laplacian(g, 1.0).unwrap();
        let p = sector_probe(&op, &[PI / 2.0, -PI / 2.0], &[0.1, 1.0, 10.0, 1e3, 1e5], 7).unwrap();
        assert!(
            p.sup_scaled <= 1.0 + 1e-12 && p.sup_scaled > 0.5,
            "{}",
            p.sup_scaled
        );
        let mu1 = laplacian_eigenvalue(&g, 1);
        let p = sector_probe(&op, &[PI], &[mu1 * (1.0 + 1e-9)], 7).unwrap();
        assert!(p.sup_scaled > 1e6 || !p.singular.is_empty());
        let p = sector_probe(&op, &[0.0], &[1e-300], 7).unwrap();
        assert!(p.samples[0].norm.is_finite());
    }

    #[test]
    fn resolvent_identity() {
        // R(z1) - R(z2) = (z2 - z1) R(z1) R(z2)
        let g = SpaceGrid::new(40).unwrap();
        let op = EllipticOp::from_fns(g, |x| c(1.0 + x), |x| c(x.sin()), |_| c(-1.0), 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f: GridFn = (0..40)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        for _ in 0..100 {
            let mut z = || {
                Complex64::from_polar(
                    10f64.powf(rng.gen_range(-1.0..4.0)),
                    rng.gen_range(-2.5..2.5),
                )
            };
            let (z1, z2) = (z(), z());
            let r1 = resolvent_solve(&op, z1, &f).unwrap();
            let r2 = resolvent_solve(&op, z2, &f).unwrap();
            let r12 = resolvent_solve(&op, z1, &r2).unwrap();
            let lhs: GridFn = r1.iter().zip(&r2).map(|(a, b)| a - b).collect();
            let rhs: GridFn = r12.iter().map(|v| (z2 - z1) * v).collect();
            let scale = r1.iter().chain(&r2).fold(0.0_f64, |m, v| m.max(v.norm()));
            assert!(max_diff(&lhs, &rhs) <= 1e-10 * scale, "z1={z1} z2={z2}");
        }
    }
}
