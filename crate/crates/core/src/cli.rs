use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use caputo::config::{Format, RunConfig};
use caputo::elliptic::laplacian_eigenvalue;
use caputo::kernels::{kernel_contour_spec, kernel_h_contour, kernel_h_real, scaling_integral};
use caputo::mittag_leffler::mittag_leffler;
use caputo::problem::{
    check_compat_space_time, check_compat_spatial, real_fn, residual, ProblemSpec,
};
use caputo::regularity::{self, necessity_probe, RegularityClass};
use caputo::{Complex64, Error, Result};

const KERNEL_TOL: f64 = 1e-8;
const ZERO_KERNEL_TOL: f64 = 1e-10;
const SLOPE_TOL: f64 = 1e-3;
const CONSTANT_TOL: f64 = 1e-6;
const MODE_TOL: f64 = 1e-6;
const HEAT_TOL: f64 = 1e-8;

pub struct Options {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub refine: u32,
    pub seed: u64,
}

pub fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Domain(_) | Error::Parse { .. } | Error::Config(_) | Error::Io(_) => 2,
        _ => 3,
    }
}

fn load(opts: &Options) -> Result<RunConfig> {
    let path = opts
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("this subcommand needs --config <path>".into()))?;
    let mut cfg = RunConfig::load(path).map_err(|e| match e {
        Error::Parse { .. } => e.context(path.display().to_string()),
        other => other,
    })?;
    cfg.spec = cfg.spec.refined(opts.refine);
    if let Some(out) = &opts.out {
        cfg.directory = out.clone();
    }
    Ok(cfg)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

fn write_summary(dir: &Path, name: &str, rows: &[(String, String)]) -> Result<()> {
    let mut w = create(dir, name)?;
    writeln!(w, "quantity,value")?;
    for (k, v) in rows {
        writeln!(w, "{k},{v}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn solve(opts: &Options) -> Result<bool> {
    let cfg = load(opts)?;
    let spec = &cfg.spec;
    let sol = caputo::problem::solve(spec)?;
    let dir = &cfg.directory;
    if cfg.wants(Format::Csv) {
        let mut w = create(dir, "solution.csv")?;
        sol.write_long_csv(&mut w)?;
        w.flush()?;
    }
    let res = residual(spec, &sol)?;
    let mut rows = vec![
        ("alpha".to_string(), format!("{:.16e}", spec.alpha)),
        ("theta".to_string(), format!("{:.16e}", spec.theta)),
        ("T".to_string(), format!("{:.16e}", spec.t_final)),
        ("n".to_string(), spec.n.to_string()),
        ("M".to_string(), spec.steps.to_string()),
        ("grading".to_string(), format!("{:.16e}", spec.grading)),
        ("refine".to_string(), opts.refine.to_string()),
        (
            "max_residual".to_string(),
            format!("{:.16e}", res.max_abs()),
        ),
    ];
    println!(
        "solved: n = {}, M = {}, max residual {:.3e}",
        spec.n,
        spec.steps,
        res.max_abs()
    );
    if let Some(exact) = &cfg.exact {
        let xs = sol.space().nodes();
        let mut err = 0.0_f64;
        for (i, &t) in sol.times().iter().enumerate() {
            for (v, &x) in sol.interior().row(i).iter().zip(&xs) {
                err = err.max((v - Complex64::new(exact(t, x), 0.0)).norm());
            }
        }
        println!("max error vs closed form: {err:.3e}");
        rows.push(("max_error".into(), format!("{err:.16e}")));
    }
    if cfg.wants(Format::Text) {
        let mut w = create(dir, "report.txt")?;
        writeln!(w, "command: solve")?;
        for (k, v) in &rows {
            writeln!(w, "{k}: {v}")?;
        }
        w.flush()?;
    }
    if cfg.wants(Format::Csv) {
        write_summary(dir, "summary.csv", &rows)?;
    }
    Ok(true)
}

fn classes(cfg: &RunConfig) -> Vec<RegularityClass> {
    let mut out = Vec::new();
    if cfg.checks.spatial {
        out.push(RegularityClass::Spatial);
    }
    if cfg.checks.space_time {
        out.push(RegularityClass::SpaceTime);
    }
    out
}

pub fn check_compat(opts: &Options) -> Result<bool> {
    let cfg = load(opts)?;
    let mut all = true;
    let mut rows = Vec::new();
    for class in classes(&cfg) {
        let report = match class {
            RegularityClass::Spatial => check_compat_spatial(&cfg.spec),
            RegularityClass::SpaceTime => check_compat_space_time(&cfg.spec),
        };
        for c in &report.conditions {
            println!(
                "{:10} {:24} measured {:.3e}  threshold {:.3e}  {}",
                class.name(),
                c.name,
                c.measured,
                c.threshold,
                verdict(c.pass)
            );
        }
        if cfg.wants(Format::Text) {
            let mut w = create(&cfg.directory, &format!("compat_{}.txt", class.name()))?;
            report.write_text(&mut w)?;
            w.flush()?;
        }
        if cfg.wants(Format::Csv) {
            let mut w = create(&cfg.directory, &format!("compat_{}.csv", class.name()))?;
            report.write_csv(&mut w)?;
            w.flush()?;
        }
        rows.push((
            class.name().to_string(),
            verdict(report.all_pass()).to_string(),
        ));
        all &= report.all_pass();
    }
    if cfg.wants(Format::Csv) {
        write_summary(&cfg.directory, "summary.csv", &rows)?;
    }
    Ok(all)
}

pub fn verify_regularity(opts: &Options) -> Result<bool> {
    let cfg = load(opts)?;
    let mut all = true;
    let mut rows = Vec::new();
    for class in classes(&cfg) {
        let report = regularity::verify_regularity(&cfg.spec, class)?;
        for e in &report.entries {
            let exp = e.exponent.map_or(String::from("-"), |x| format!("{x:.3}"));
            println!(
                "{:10} {:22} base {:.3e}  refined {:.3e}  exponent {exp}  {}",
                class.name(),
                e.quantity,
                e.value,
                e.refined,
                verdict(e.pass)
            );
        }
        if cfg.wants(Format::Text) {
            let mut w = create(&cfg.directory, &format!("regularity_{}.txt", class.name()))?;
            report.write_text(&mut w)?;
            w.flush()?;
        }
        if cfg.wants(Format::Csv) {
            let mut w = create(&cfg.directory, &format!("regularity_{}.csv", class.name()))?;
            report.write_csv(&mut w)?;
            w.flush()?;
        }
        rows.push((
            class.name().to_string(),
            verdict(report.all_pass()).to_string(),
        ));
        all &= report.all_pass();
    }
    if cfg.checks.necessity_probe {
        let probe = necessity_probe(&cfg.spec, RegularityClass::SpaceTime, cfg.probe_shift)?;
        let flagged = probe.newly_failed();
        let pass = flagged == ["corner_compatibility"] && probe.gap() > 0.0;
        println!(
            "necessity probe: flagged {:?}, boundary exponent {:.3} -> {:.3} (gap {:.3})  {}",
            flagged,
            probe.compatible_exponent,
            probe.violating_exponent,
            probe.gap(),
            verdict(pass)
        );
        if cfg.wants(Format::Text) {
            let mut w = create(&cfg.directory, "necessity_probe.txt")?;
            probe.write_text(&mut w)?;
            writeln!(w, "verdict: {}", verdict(pass))?;
            w.flush()?;
        }
        rows.push((
            "necessity_probe_gap".into(),
            format!("{:.16e}", probe.gap()),
        ));
        all &= pass;
    }
    if cfg.wants(Format::Csv) {
        write_summary(&cfg.directory, "summary.csv", &rows)?;
    }
    Ok(all)
}

pub fn kernel_test(opts: &Options) -> Result<bool> {
    let mut cases = Vec::new();
    for alpha in [0.3, 0.7, 1.3, 1.8] {
        for t in [0.1, 1.0, 5.0] {
            for xi in [0.5, 2.0, 10.0] {
                cases.push((alpha, t, xi));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..8 {
        cases.push((
            rng.gen_range(0.2..1.8),
            rng.gen_range(0.1..5.0),
            rng.gen_range(0.5..10.0),
        ));
    }
    let mut all = true;
    let mut table = Vec::new();
    println!(
        "{:>6} {:>6} {:>6} {:>22} {:>22} {:>10}",
        "alpha", "t", "xi", "contour", "real axis", "|diff|"
    );
    for (alpha, t, xi) in cases {
        let spec = kernel_contour_spec(t, xi, alpha)?;
        let c = kernel_h_contour(t, xi, alpha, &spec)?;
        let r = kernel_h_real(t, xi, alpha)?;
        let d = (c - r).abs();
        all &= d < KERNEL_TOL;
        println!("{alpha:6.3} {t:6.3} {xi:6.3} {c:22.15e} {r:22.15e} {d:10.2e}");
        table.push((alpha, t, xi, c, r, d));
    }
    let mut zero = 0.0_f64;
    for t in [0.1, 1.0, 5.0] {
        for xi in [0.5, 2.0, 10.0] {
            zero = zero.max(kernel_h_contour(t, xi, 1.0, &kernel_contour_spec(t, xi, 1.0)?)?.abs());
        }
    }
    all &= zero < ZERO_KERNEL_TOL;
    println!(
        "alpha = 1: max |h| = {zero:.2e}  {}",
        verdict(zero < ZERO_KERNEL_TOL)
    );

    for (a, b, c, d) in [
        (1.0, 0.0, 1.0, 2.0),
        (2.0, 0.5, 1.5, 2.5),
        (0.5, -0.5, 0.3, 1.2),
    ] {
        let pts: Vec<(f64, f64)> = (0..9)
            .map(|k| {
                let xi = 10f64.powf(-2.0 + 0.5 * k as f64);
                scaling_integral(a, b, c, d, xi).map(|v| (xi.ln(), v.ln()))
            })
            .collect::<Result<_>>()?;
        let slope = fit_slope(&pts);
        let want = (c - b) / d - 1.0;
        let ok = (slope - want).abs() < SLOPE_TOL;
        all &= ok;
        println!(
            "scaling ({a}, {b}, {c}, {d}): slope {slope:.6} expected {want:.6}  {}",
            verdict(ok)
        );
    }
    let c = scaling_integral(1.0, 0.0, 1.0, 2.0, 1.0)?;
    let ok = (c - std::f64::consts::FRAC_PI_2).abs() < CONSTANT_TOL;
    all &= ok;
    println!(
        "scaling constant (1, 0, 1, 2): {c:.12} vs pi/2  {}",
        verdict(ok)
    );

    if let Some(dir) = &opts.out {
        let mut w = create(dir, "kernel_test.csv")?;
        writeln!(w, "alpha,t,xi,contour,real,abs_diff")?;
        for (alpha, t, xi, c, r, d) in table {
            writeln!(
                w,
                "{alpha:.16e},{t:.16e},{xi:.16e},{c:.16e},{r:.16e},{d:.16e}"
            )?;
        }
        w.flush()?;
    }
    Ok(all)
}

fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

pub fn oracle(opts: &Options) -> Result<bool> {
    let n = match &opts.config {
        Some(_) => load(opts)?.spec.n,
        None => 127,
    };
    let mut all = true;
    let mut table = Vec::new();
    let mut run = |alpha: f64, k: usize, tol: f64| -> Result<()> {
        let mut spec = ProblemSpec::new(alpha, 0.5, 1.0, n, 10)?;
        spec.u0 = real_fn(move |x| (k as f64 * std::f64::consts::PI * x).sin());
        let sol = caputo::problem::solve(&spec)?;
        let grid = sol.space();
        let mu = laplacian_eigenvalue(grid, k);
        let u0 = grid.sample(|x| (spec.u0)(x));
        for i in [1, 5, 10] {
            let t = sol.times()[i];
            let e = mittag_leffler(alpha, 1.0, Complex64::new(-mu * t.powf(alpha), 0.0))?.re;
            let err = sol
                .interior()
                .row(i)
                .iter()
                .zip(&u0)
                .fold(0.0_f64, |m, (u, v)| m.max((u - e * v).norm()))
                / e.abs().max(1.0);
            all &= err <= tol;
            println!(
                "alpha {alpha:.2} mode {k} t {t:.2}: E = {e:.12e}  error {err:.2e}  {}",
                verdict(err <= tol)
            );
            table.push((alpha, k, t, e, err));
        }
        Ok(())
    };
    for alpha in [0.5, 1.5] {
        run(alpha, 1, MODE_TOL)?;
    }
    for k in 1..=3 {
        run(1.0, k, HEAT_TOL)?;
    }
    if let Some(dir) = &opts.out {
        let mut w = create(dir, "oracle.csv")?;
        writeln!(w, "alpha,mode,t,exact,error")?;
        for (alpha, k, t, e, err) in table {
            writeln!(w, "{alpha:.16e},{k},{t:.16e},{e:.16e},{err:.16e}")?;
        }
        w.flush()?;
    }
    Ok(all)
}
