//! INI-style run configuration.
//!
//! ```text
//! [problem]
//! alpha = 0.5
//! theta = 0.5
//! T = 1
//! n = 127
//! M = 256
//! f = sin(pi*x) * exp(-t)
//! u0 = sin(pi*x)
//!
//! [contour]
//! nodes_per_ray = 48
//! ```
//!
//! Problem keys: `alpha theta T n M grading a b c f f0 gL gR u0 u1 exact
//! delta1 delta2`. `a b c u0 u1 f0` are expressions in `x`, `gL gR` in `t`,
//! `f exact` in both. `f0` replaces `f` by the discrete power-law source with
//! closed-form solution `t^alpha / Gamma(alpha + 1) f0`.
//!
//! Contour keys: `phi radius nodes_per_ray arc_nodes`; missing ones take the
//! defaults for the operator's sector. Checks: `spatial space_time
//! necessity_probe` (booleans), `probe_shift`. Output: `directory`, `formats`
//! (comma list of `csv`, `text`).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::contour::ContourSpec;
use crate::error::{Error, Result};
use crate::expr::{line_col, parse_expr, Expr, Var};
use crate::problem::{CutoffProfile, ProblemSpec, Source, SpaceFn, TimeFn};

const SECTIONS: [&str; 4] = ["problem", "contour", "checks", "output"];
const PROBLEM_KEYS: [&str; 18] = [
    "alpha", "theta", "T", "n", "M", "grading", "a", "b", "c", "f", "f0", "gL", "gR", "u0", "u1",
    "exact", "delta1", "delta2",
];
const CONTOUR_KEYS: [&str; 4] = ["phi", "radius", "nodes_per_ray", "arc_nodes"];
const CHECK_KEYS: [&str; 4] = ["spatial", "space_time", "necessity_probe", "probe_shift"];
const OUTPUT_KEYS: [&str; 2] = ["directory", "formats"];

/// A value with the position of its first byte in the config file.
#[derive(Debug, Clone)]
struct Entry {
    value: String,
    offset: usize,
}

#[derive(Debug, Clone, Default)]
struct Ini {
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

fn parse_error(src: &str, offset: usize, msg: impl Into<String>) -> Error {
    let (line, col) = line_col(src, offset);
    Error::Parse {
        line,
        col,
        msg: msg.into(),
    }
}

fn parse_ini(src: &str) -> Result<Ini> {
    let mut ini = Ini::default();
    let mut current: Option<String> = None;
    let mut offset = 0;
    for raw in src.split_inclusive('\n') {
        let line_start = offset;
        offset += raw.len();
        let body = raw.split(['#', ';']).next().unwrap_or("");
        let lead = body.len() - body.trim_start().len();
        let text = body.trim();
        if text.is_empty() {
            continue;
        }
        let at = line_start + lead;
        if let Some(rest) = text.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| parse_error(src, at, "section header missing ']'"))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(parse_error(
                    src,
                    at + 1,
                    format!("unknown section [{name}]"),
                ));
            }
            if ini.sections.contains_key(name) {
                return Err(parse_error(
                    src,
                    at,
                    format!("section [{name}] appears twice"),
                ));
            }
            ini.sections.insert(name.to_string(), BTreeMap::new());
            current = Some(name.to_string());
            continue;
        }
        let Some(eq) = text.find('=') else {
            return Err(parse_error(src, at, "expected 'key = value'"));
        };
        let section = current
            .as_ref()
            .ok_or_else(|| parse_error(src, at, "key outside of any section"))?;
        let key = text[..eq].trim();
        let allowed: &[&str] = match section.as_str() {
            "problem" => &PROBLEM_KEYS,
            "contour" => &CONTOUR_KEYS,
            "checks" => &CHECK_KEYS,
            _ => &OUTPUT_KEYS,
        };
        if !allowed.contains(&key) {
            return Err(parse_error(
                src,
                at,
                format!("unknown key '{key}' in [{section}]"),
            ));
        }
        let after = &text[eq + 1..];
        let value_lead = after.len() - after.trim_start().len();
        let entry = Entry {
            value: after.trim().to_string(),
            offset: at + eq + 1 + value_lead,
        };
        if entry.value.is_empty() {
            return Err(parse_error(
                src,
                entry.offset,
                format!("empty value for '{key}'"),
            ));
        }
        let map = ini
            .sections
            .get_mut(section)
            .expect("section inserted above");
        if map.insert(key.to_string(), entry).is_some() {
            return Err(parse_error(src, at, format!("duplicate key '{key}'")));
        }
    }
    Ok(ini)
}

struct Reader<'a> {
    src: &'a str,
    ini: &'a Ini,
}

impl Reader<'_> {
    fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.ini.sections.get(section).and_then(|m| m.get(key))
    }

    fn number(&self, section: &str, key: &str) -> Result<Option<f64>> {
        let Some(e) = self.get(section, key) else {
            return Ok(None);
        };
        // numeric keys accept constant expressions such as `2/3` or `pi/2`
        let expr = self.expr(e)?;
        if expr.uses(Var::T) || expr.uses(Var::X) {
            return Err(parse_error(
                self.src,
                e.offset,
                format!("'{key}' must be a constant"),
            ));
        }
        let v = expr
            .eval(0.0, 0.0)
            .map_err(|err| parse_error(self.src, e.offset, err.to_string()))?;
        Ok(Some(v))
    }

    fn count(&self, section: &str, key: &str) -> Result<Option<usize>> {
        let Some(e) = self.get(section, key) else {
            return Ok(None);
        };
        e.value.parse().map(Some).map_err(|_| {
            parse_error(
                self.src,
                e.offset,
                format!("'{key}' must be a non-negative integer"),
            )
        })
    }

    fn flag(&self, section: &str, key: &str) -> Result<Option<bool>> {
        let Some(e) = self.get(section, key) else {
            return Ok(None);
        };
        match e.value.as_str() {
            "true" | "yes" | "on" | "1" => Ok(Some(true)),
            "false" | "no" | "off" | "0" => Ok(Some(false)),
            _ => Err(parse_error(
                self.src,
                e.offset,
                format!("'{key}' must be true or false"),
            )),
        }
    }

    fn expr(&self, e: &Entry) -> Result<Expr> {
        parse_expr(&e.value)
            .map_err(|err| parse_error(self.src, e.offset + err.offset, err.message))
    }

    /// Expression restricted to `vars`, checked to evaluate on a sample of
    /// `[0, t_final] x [0, 1]`.
    fn data(&self, key: &str, vars: &[Var], t_final: f64) -> Result<Option<Expr>> {
        let Some(e) = self.get("problem", key) else {
            return Ok(None);
        };
        let expr = self.expr(e)?;
        for (v, name) in [(Var::T, "t"), (Var::X, "x")] {
            if expr.uses(v) && !vars.contains(&v) {
                return Err(parse_error(
                    self.src,
                    e.offset,
                    format!("'{key}' may not depend on {name}"),
                ));
            }
        }
        for i in 0..=16 {
            for j in 0..=16 {
                let (t, x) = (t_final * i as f64 / 16.0, j as f64 / 16.0);
                match expr.eval(t, x) {
                    Ok(v) if v.is_finite() => {}
                    Ok(v) => {
                        return Err(parse_error(
                            self.src,
                            e.offset,
                            format!("'{key}' is {v} at t = {t}, x = {x}"),
                        ));
                    }
                    Err(err) => {
                        return Err(parse_error(
                            self.src,
                            e.offset,
                            format!("'{key}' at t = {t}, x = {x}: {err}"),
                        ));
                    }
                }
            }
        }
        Ok(Some(expr))
    }
}

fn space_fn(e: Expr) -> SpaceFn {
    Arc::new(move |x| Complex64::new(e.eval(0.0, x).unwrap_or(f64::NAN), 0.0))
}

fn time_fn(e: Expr) -> TimeFn {
    Arc::new(move |t| Complex64::new(e.eval(t, 0.0).unwrap_or(f64::NAN), 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Checks {
    pub spatial: bool,
    pub space_time: bool,
    pub necessity_probe: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Text,
}

#[derive(Clone)]
pub struct RunConfig {
    pub spec: ProblemSpec,
    /// Closed-form solution, when known.
    pub exact: Option<Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>>,
    pub checks: Checks,
    pub probe_shift: f64,
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl std::fmt::Debug for RunConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RunConfig")
            .field("spec", &self.spec)
            .field("exact", &self.exact.is_some())
            .field("checks", &self.checks)
            .field("probe_shift", &self.probe_shift)
            .field("directory", &self.directory)
            .field("formats", &self.formats)
            .finish()
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&src)
    }

    pub fn parse(src: &str) -> Result<Self> {
        let ini = parse_ini(src)?;
        let r = Reader { src, ini: &ini };
        let need = |key: &str| Error::Config(format!("[problem] needs '{key}'"));
        let alpha = r.number("problem", "alpha")?.ok_or_else(|| need("alpha"))?;
        let theta = r.number("problem", "theta")?.ok_or_else(|| need("theta"))?;
        let t_final = r.number("problem", "T")?.ok_or_else(|| need("T"))?;
        let n = r.count("problem", "n")?.ok_or_else(|| need("n"))?;
        let steps = r.count("problem", "M")?.ok_or_else(|| need("M"))?;
        let mut spec = ProblemSpec::new(alpha, theta, t_final, n, steps)?;
        if let Some(g) = r.number("problem", "grading")? {
            spec.grading = g;
        }
        let (only_x, only_t, both) = (&[Var::X][..], &[Var::T][..], &[Var::T, Var::X][..]);
        for (key, slot) in [("a", &mut spec.a), ("b", &mut spec.b), ("c", &mut spec.c)] {
            if let Some(e) = r.data(key, only_x, t_final)? {
                *slot = space_fn(e);
            }
        }
        for (key, slot) in [("u0", &mut spec.u0), ("u1", &mut spec.u1)] {
            if let Some(e) = r.data(key, only_x, t_final)? {
                *slot = space_fn(e);
            }
        }
        for (key, slot) in [("gL", &mut spec.gl), ("gR", &mut spec.gr)] {
            if let Some(e) = r.data(key, only_t, t_final)? {
                *slot = time_fn(e);
            }
        }
        let f = r.data("f", both, t_final)?;
        let f0 = r.data("f0", only_x, t_final)?;
        let mut exact: Option<Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>> = None;
        match (f, f0) {
            (Some(_), Some(_)) => {
                let at = r.get("problem", "f0").expect("present").offset;
                return Err(parse_error(src, at, "give either 'f' or 'f0', not both"));
            }
            (Some(f), None) => {
                spec.f = Source::Field(Arc::new(move |t, x| {
                    Complex64::new(f.eval(t, x).unwrap_or(f64::NAN), 0.0)
                }));
            }
            (None, Some(f0)) => {
                let g = gamma(alpha + 1.0);
                let e = f0.clone();
                exact = Some(Arc::new(move |t, x| {
                    t.powf(alpha) / g * e.eval(0.0, x).unwrap_or(f64::NAN)
                }));
                spec.f = Source::DiscretePowerLaw(space_fn(f0));
            }
            (None, None) => {}
        }
        if let Some(e) = r.data("exact", both, t_final)? {
            exact = Some(Arc::new(move |t, x| e.eval(t, x).unwrap_or(f64::NAN)));
        }
        let d1 = r.number("problem", "delta1")?;
        let d2 = r.number("problem", "delta2")?;
        if d1.is_some() || d2.is_some() {
            let def = CutoffProfile::default();
            spec.cutoff = CutoffProfile::new(d1.unwrap_or(def.delta1), d2.unwrap_or(def.delta2))?;
        }

        let contour_given = CONTOUR_KEYS.iter().any(|k| r.get("contour", k).is_some());
        if contour_given {
            let op = spec.operator()?;
            let mut c = ContourSpec::default_for(alpha, op.sector().omega)?;
            if let Some(v) = r.number("contour", "phi")? {
                c.phi = v;
            }
            if let Some(v) = r.number("contour", "radius")? {
                c.radius = v;
            }
            if let Some(v) = r.count("contour", "nodes_per_ray")? {
                c.nodes_per_ray = v;
            }
            if let Some(v) = r.count("contour", "arc_nodes")? {
                c.arc_nodes = v;
            }
            c.validate()?;
            spec.contour = Some(c);
        }
        spec.validate()?;

        let checks = Checks {
            spatial: r.flag("checks", "spatial")?.unwrap_or(true),
            space_time: r.flag("checks", "space_time")?.unwrap_or(true),
            necessity_probe: r.flag("checks", "necessity_probe")?.unwrap_or(false),
        };
        let probe_shift = r.number("checks", "probe_shift")?.unwrap_or(1.0);
        let directory = r
            .get("output", "directory")
            .map_or_else(|| PathBuf::from("out"), |e| PathBuf::from(&e.value));
        let formats = match r.get("output", "formats") {
            None => vec![Format::Csv, Format::Text],
            Some(e) => e
                .value
                .split(',')
                .map(|s| match s.trim() {
                    "csv" => Ok(Format::Csv),
                    "text" => Ok(Format::Text),
                    other => Err(parse_error(
                        src,
                        e.offset,
                        format!("unknown output format '{other}'"),
                    )),
                })
                .collect::<Result<_>>()?,
        };
        Ok(RunConfig {
            spec,
            exact,
            checks,
            probe_shift,
            directory,
            formats,
        })
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = "\
# power-law source
[problem]
alpha = 0.5
theta = 0.5
T = 1
n = 15
M = 16
grading = 2
f0 = sin(pi*x) * x * (1 - x)

[contour]
nodes_per_ray = 48

[output]
formats = csv
";

    #[test]
    fn parses_basic() {
        let cfg = RunConfig::parse(BASIC).unwrap();
        assert_eq!(cfg.spec.alpha, 0.5);
        assert_eq!(cfg.spec.n, 15);
        assert_eq!(cfg.spec.grading, 2.0);
        assert_eq!(cfg.spec.contour.unwrap().nodes_per_ray, 48);
        assert!(matches!(cfg.spec.f, Source::DiscretePowerLaw(_)));
        assert!(cfg.exact.is_some());
        assert_eq!(cfg.formats, vec![Format::Csv]);
        assert!(cfg.checks.spatial && !cfg.checks.necessity_probe);
    }

    fn err_pos(src: &str) -> (usize, usize) {
        match RunConfig::parse(src).unwrap_err() {
            Error::Parse { line, col, .. } => (line, col),
            other => panic!("expected a parse error, got {other}"),
        }
    }

    #[test]
    fn reports_positions() {
        let head = "[problem]\nalpha = 0.5\ntheta = 0.5\nT = 1\nn = 7\nM = 8\n";
        assert_eq!(err_pos(&format!("{head}f = sin(pi*y)\n")), (7, 12));
        assert_eq!(err_pos(&format!("{head}u0 = t\n")), (7, 6));
        assert_eq!(err_pos(&format!("{head}bogus = 1\n")), (7, 1));
        assert_eq!(err_pos(&format!("{head}[nope]\n")), (7, 2));
        assert_eq!(err_pos(&format!("{head}  f = (1 +\n")), (7, 11));
        assert_eq!(err_pos(&format!("{head}u0 = sqrt(x - 1)\n")), (7, 6));
        assert_eq!(err_pos("alpha = 1\n"), (1, 1));
    }

    #[test]
    fn revalidates_problem() {
        let src = "[problem]\nalpha = 1.5\ntheta = 1.5\nT = 1\nn = 7\nM = 8\n";
        assert!(matches!(RunConfig::parse(src), Err(Error::Domain(_))));
        assert!(matches!(
            RunConfig::parse("[problem]\nalpha = 0.5\n"),
            Err(Error::Config(_))
        ));
    }
}
