//! Scenario files.
//!
//! A scenario is plain text: `[section]` headers followed by `key = value`
//! lines. `#` starts a comment. Complex numbers are written `(re,im)`; a bare
//! real number is also accepted. Lists are whitespace separated.
//!
//! ```text
//! [scenario]
//! id = sine-schedule
//! mode = gl-entire
//!
//! [family]
//! kind = sine
//! count = 4000
//!
//! [numeric]
//! schedule = 20 40 80 160
//! eps = 1e-6
//! ```
//!
//! Sections and keys:
//!
//! | section | keys |
//! |---|---|
//! | `scenario` | `id`, `mode` |
//! | `family`, `family.N` | `kind` (`explicit`, `parametric`, `sine`), `roots`, `scale`, `exponent`, `phases`, `count`, `indexing`, `q`, `genus` |
//! | `product` | `ordering` (`identity`, `rearranged`), `eval` |
//! | `polynomial` | `coefficients` (ascending) or `roots` with optional `leading` |
//! | `multivariate` | `m`, `kind` (`polynomial`, `products`), repeated `term` and `form` |
//! | `points` | repeated `point`, `query`, `section` |
//! | `numeric` | see [`Numeric`] |
//! | `output` | `dir` |
//!
//! A `term` line is `coefficient : exponents`, e.g. `term = (1,0) : 2 0`.
//! A `form` line is `coefficients ; constant`, e.g. `form = (1,0) (1,0) ; (0,2)`.
//! `family.N` sections declare the factor for coordinate `N` when
//! `multivariate.kind = products`.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;

use crate::roots::Indexing;
use crate::{Error, Result};

/// A problem found while reading a scenario, with a 1-based position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, col {}: {}", self.line, self.col, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    GlPoly,
    GlEntire,
    GlSections,
    Rearrange,
    Stability,
    Corollary,
    SepHull,
}

impl Mode {
    pub const ALL: [Mode; 7] = [
        Mode::GlPoly,
        Mode::GlEntire,
        Mode::GlSections,
        Mode::Rearrange,
        Mode::Stability,
        Mode::Corollary,
        Mode::SepHull,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::GlPoly => "gl-poly",
            Mode::GlEntire => "gl-entire",
            Mode::GlSections => "gl-sections",
            Mode::Rearrange => "rearrange",
            Mode::Stability => "stability",
            Mode::Corollary => "corollary",
            Mode::SepHull => "sep-hull",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Mode::ALL.iter().map(|m| m.as_str()).collect();
                format!("unknown mode `{s}` (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyKind {
    Explicit(Vec<Complex64>),
    Parametric {
        scale: f64,
        exponent: f64,
        phases: Vec<Complex64>,
        count: usize,
        indexing: Indexing,
    },
    /// Roots `+-1, +-2, ...`, paired.
    Sine { count: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyDecl {
    pub kind: FamilyKind,
    pub q: usize,
    /// `None` means estimate it.
    pub genus: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ordering {
    Identity,
    Rearranged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductDecl {
    pub ordering: Ordering,
    /// Points at which the truncated product is evaluated and reported.
    pub eval: Vec<Complex64>,
}

impl Default for ProductDecl {
    fn default() -> Self {
        ProductDecl {
            ordering: Ordering::Identity,
            eval: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolyDecl {
    Coefficients(Vec<Complex64>),
    Roots { roots: Vec<Complex64>, leading: Complex64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum MultiKind {
    Polynomial {
        terms: Vec<(Complex64, Vec<u32>)>,
        forms: Vec<(Vec<Complex64>, Complex64)>,
    },
    Products,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiDecl {
    pub m: usize,
    pub kind: MultiKind,
}

/// Numeric knobs. Optional fields fall back to mode-dependent defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Numeric {
    /// Inclusion tolerance; 1e-7 for polynomial checks, 1e-3 for schedules.
    pub eps: Option<f64>,
    pub schedule: Vec<usize>,
    pub window: usize,
    pub n_target: usize,
    pub target: f64,
    pub resolution: usize,
    /// `re_min re_max im_min im_max`, shared by every coordinate.
    pub bbox: Option<[f64; 4]>,
    pub seed: u64,
    pub budget: usize,
    /// Cone angles; defaults to zeros.
    pub theta: Option<Vec<f64>>,
    /// 1-based coordinate for sections and partial derivatives.
    pub coordinate: usize,
    pub box_radius: f64,
    pub samples: usize,
    pub degree_cap: usize,
    pub iteration_cap: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Also run the grid membership check for two-variable polynomials.
    pub direct: bool,
}

impl Default for Numeric {
    fn default() -> Self {
        Numeric {
            eps: None,
            schedule: vec![20, 40, 80],
            window: 200,
            n_target: 2000,
            target: 0.05,
            resolution: 32,
            bbox: None,
            seed: 0,
            budget: 200,
            theta: None,
            coordinate: 1,
            box_radius: 2.0,
            samples: 20,
            degree_cap: 4000,
            iteration_cap: 50,
            tol: 1e-10,
            max_iter: 1000,
            direct: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub id: String,
    pub mode: Mode,
    pub family: Option<FamilyDecl>,
    /// `family.1`, `family.2`, ... in order.
    pub coordinate_families: Vec<FamilyDecl>,
    pub product: ProductDecl,
    pub polynomial: Option<PolyDecl>,
    pub multivariate: Option<MultiDecl>,
    pub points: Vec<Vec<Complex64>>,
    pub queries: Vec<Vec<Complex64>>,
    pub sections: Vec<Vec<Complex64>>,
    pub numeric: Numeric,
    pub output_dir: Option<PathBuf>,
}

// ---------------------------------------------------------------- raw layer

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    value: String,
    line: usize,
    key_col: usize,
    value_col: usize,
}

#[derive(Debug, Clone)]
struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

const SECTIONS: &[&str] = &["scenario", "family", "product", "polynomial", "multivariate", "points", "numeric", "output"];

fn keys_for(section: &str) -> &'static [&'static str] {
    match section {
        "scenario" => &["id", "mode"],
        "product" => &["ordering", "eval"],
        "polynomial" => &["coefficients", "roots", "leading"],
        "multivariate" => &["m", "kind", "term", "form"],
        "points" => &["point", "query", "section"],
        "numeric" => &[
            "eps", "schedule", "window", "n_target", "target", "resolution", "bbox", "seed", "budget", "theta",
            "coordinate", "box_radius", "samples", "degree_cap", "iteration_cap", "tol", "max_iter", "direct",
        ],
        "output" => &["dir"],
        _ => &["kind", "roots", "scale", "exponent", "phases", "count", "indexing", "q", "genus"],
    }
}

fn repeatable(section: &str, key: &str) -> bool {
    matches!((section, key), ("multivariate", "term" | "form") | ("points", "point" | "query" | "section"))
}

fn is_family_section(name: &str) -> bool {
    name == "family"
        || name
            .strip_prefix("family.")
            .is_some_and(|n| n.parse::<usize>().is_ok_and(|k| k >= 1))
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn lex(text: &str, diags: &mut Vec<Diagnostic>) -> Vec<Section> {
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let body = strip_comment(raw);
        let trimmed = body.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = body.len() - body.trim_start().len();
        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                diags.push(Diagnostic { line: line_no, col: indent + 1, message: "unterminated section header".into() });
                continue;
            };
            let name = name.trim().to_string();
            if !SECTIONS.contains(&name.as_str()) && !is_family_section(&name) {
                diags.push(Diagnostic { line: line_no, col: indent + 2, message: format!("unknown section `{name}`") });
            } else if sections.iter().any(|s| s.name == name) {
                diags.push(Diagnostic { line: line_no, col: indent + 2, message: format!("duplicate section `{name}`") });
            }
            sections.push(Section { name, line: line_no, entries: Vec::new() });
            continue;
        }
        let Some(eq) = body.find('=') else {
            diags.push(Diagnostic { line: line_no, col: indent + 1, message: "expected `key = value`".into() });
            continue;
        };
        let key = body[..eq].trim().to_string();
        let after = &body[eq + 1..];
        let value_col = eq + 2 + (after.len() - after.trim_start().len());
        let value = after.trim().to_string();
        let Some(section) = sections.last_mut() else {
            diags.push(Diagnostic { line: line_no, col: indent + 1, message: "key outside of any section".into() });
            continue;
        };
        let allowed = keys_for(&section.name);
        if !allowed.contains(&key.as_str()) {
            diags.push(Diagnostic {
                line: line_no,
                col: indent + 1,
                message: format!("unknown key `{key}` in [{}]", section.name),
            });
            continue;
        }
        if !repeatable(&section.name, &key) && section.entries.iter().any(|e| e.key == key) {
            diags.push(Diagnostic { line: line_no, col: indent + 1, message: format!("duplicate key `{key}`") });
            continue;
        }
        section.entries.push(Entry { key, value, line: line_no, key_col: indent + 1, value_col });
    }
    sections
}

// ----------------------------------------------------------- value parsing

/// Split on whitespace that is not inside parentheses.
fn tokens(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = None;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ => {}
        }
        if ch.is_whitespace() && depth == 0 {
            if let Some(st) = start.take() {
                out.push(&s[st..i]);
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(st) = start {
        out.push(&s[st..]);
    }
    out
}

pub fn parse_complex(tok: &str) -> std::result::Result<Complex64, String> {
    let t = tok.trim();
    if let Some(inner) = t.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
        let (a, b) = inner.split_once(',').ok_or_else(|| format!("expected `(re,im)`, got `{t}`"))?;
        let re: f64 = a.trim().parse().map_err(|_| format!("bad real part `{}`", a.trim()))?;
        let im: f64 = b.trim().parse().map_err(|_| format!("bad imaginary part `{}`", b.trim()))?;
        if !re.is_finite() || !im.is_finite() {
            return Err(format!("non-finite complex value `{t}`"));
        }
        Ok(Complex64::new(re, im))
    } else {
        let re: f64 = t.parse().map_err(|_| format!("expected a complex number, got `{t}`"))?;
        if !re.is_finite() {
            return Err(format!("non-finite value `{t}`"));
        }
        Ok(Complex64::new(re, 0.0))
    }
}

fn parse_complex_list(s: &str) -> std::result::Result<Vec<Complex64>, String> {
    tokens(s).into_iter().map(parse_complex).collect()
}

fn fmt_c(z: Complex64) -> String {
    format!("({:?},{:?})", z.re, z.im)
}

fn fmt_c_list(v: &[Complex64]) -> String {
    v.iter().map(|z| fmt_c(*z)).collect::<Vec<_>>().join(" ")
}

fn parse_indexing(s: &str) -> std::result::Result<Indexing, String> {
    match s {
        "shell" => Ok(Indexing::Shell),
        "sequential" => Ok(Indexing::Sequential),
        _ => {
            let b = s
                .strip_prefix("blocks:")
                .and_then(|b| b.parse::<usize>().ok())
                .filter(|b| *b >= 1)
                .ok_or_else(|| format!("unknown indexing `{s}` (shell, sequential or blocks:B with B >= 1)"))?;
            Ok(Indexing::Blocks(b))
        }
    }
}

struct Reader<'a> {
    diags: &'a mut Vec<Diagnostic>,
}

impl Reader<'_> {
    fn err(&mut self, e: &Entry, message: impl Into<String>) {
        self.diags.push(Diagnostic { line: e.line, col: e.value_col, message: message.into() });
    }

    fn parse<T: FromStr>(&mut self, e: &Entry, what: &str) -> Option<T> {
        match e.value.parse::<T>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.err(e, format!("`{}` must be {what}, got `{}`", e.key, e.value));
                None
            }
        }
    }

    fn uint(&mut self, e: &Entry, min: usize) -> Option<usize> {
        let v: usize = self.parse(e, "a non-negative integer")?;
        if v < min {
            self.err(e, format!("{} ≥ {min} required", e.key));
            return None;
        }
        Some(v)
    }

    fn real(&mut self, e: &Entry) -> Option<f64> {
        let v: f64 = self.parse(e, "a number")?;
        if !v.is_finite() {
            self.err(e, format!("`{}` must be finite", e.key));
            return None;
        }
        Some(v)
    }

    fn positive(&mut self, e: &Entry) -> Option<f64> {
        let v = self.real(e)?;
        if v <= 0.0 {
            self.err(e, format!("{} > 0 required", e.key));
            return None;
        }
        Some(v)
    }

    fn complex_list(&mut self, e: &Entry) -> Option<Vec<Complex64>> {
        match parse_complex_list(&e.value) {
            Ok(v) => Some(v),
            Err(m) => {
                self.err(e, m);
                None
            }
        }
    }

    fn complex(&mut self, e: &Entry) -> Option<Complex64> {
        match parse_complex(&e.value) {
            Ok(v) => Some(v),
            Err(m) => {
                self.err(e, m);
                None
            }
        }
    }
}

fn get<'a>(s: &'a Section, key: &str) -> Option<&'a Entry> {
    s.entries.iter().find(|e| e.key == key)
}

fn all<'a>(s: &'a Section, key: &'a str) -> impl Iterator<Item = &'a Entry> + 'a {
    s.entries.iter().filter(move |e| e.key == key)
}

fn read_family(s: &Section, r: &mut Reader) -> Option<FamilyDecl> {
    let kind_name = get(s, "kind").map(|e| e.value.as_str()).unwrap_or("parametric");
    let q = get(s, "q").and_then(|e| r.uint(e, 0)).unwrap_or(0);
    let genus = get(s, "genus").and_then(|e| r.uint(e, 0));
    let forbid = |keys: &[&str], r: &mut Reader| {
        for k in keys {
            if let Some(e) = get(s, k) {
                r.diags.push(Diagnostic {
                    line: e.line,
                    col: e.key_col,
                    message: format!("`{k}` does not apply to kind = {kind_name}"),
                });
            }
        }
    };
    let kind = match kind_name {
        "explicit" => {
            forbid(&["scale", "exponent", "phases", "count", "indexing"], r);
            let Some(e) = get(s, "roots") else {
                r.diags.push(Diagnostic { line: s.line, col: 1, message: format!("[{}] needs `roots`", s.name) });
                return None;
            };
            let roots = r.complex_list(e)?;
            if roots.iter().any(|z| *z == Complex64::new(0.0, 0.0)) {
                r.err(e, "roots must be non-zero; use `q` for a zero at the origin");
                return None;
            }
            FamilyKind::Explicit(roots)
        }
        "sine" => {
            forbid(&["roots", "scale", "exponent", "phases", "indexing"], r);
            let count = get(s, "count").and_then(|e| r.uint(e, 0)).unwrap_or(4000);
            FamilyKind::Sine { count }
        }
        "parametric" => {
            forbid(&["roots"], r);
            let scale = get(s, "scale").and_then(|e| r.positive(e)).unwrap_or(1.0);
            let exponent = get(s, "exponent").and_then(|e| r.positive(e)).unwrap_or(1.0);
            let phases = match get(s, "phases") {
                Some(e) => {
                    let p = r.complex_list(e)?;
                    if p.is_empty() || p.iter().any(|z| (z.norm() - 1.0).abs() > 1e-12) {
                        r.err(e, "phases must be a non-empty list of unit-modulus values");
                        return None;
                    }
                    p
                }
                None => vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
            };
            let count = get(s, "count").and_then(|e| r.uint(e, 0)).unwrap_or(4000);
            let indexing = match get(s, "indexing") {
                Some(e) => match parse_indexing(&e.value) {
                    Ok(i) => i,
                    Err(m) => {
                        r.err(e, m);
                        return None;
                    }
                },
                None => Indexing::Shell,
            };
            FamilyKind::Parametric { scale, exponent, phases, count, indexing }
        }
        other => {
            let e = get(s, "kind").expect("non-default kind comes from an entry");
            r.err(e, format!("unknown family kind `{other}` (explicit, parametric or sine)"));
            return None;
        }
    };
    Some(FamilyDecl { kind, q, genus })
}

fn read_numeric(s: &Section, r: &mut Reader) -> Numeric {
    let mut n = Numeric::default();
    for e in &s.entries {
        match e.key.as_str() {
            "eps" => n.eps = r.positive(e).or(n.eps),
            "schedule" => {
                let vals: std::result::Result<Vec<usize>, _> = e.value.split_whitespace().map(str::parse).collect();
                match vals {
                    Ok(v) if !v.is_empty() && v[0] >= 1 && v.windows(2).all(|w| w[0] < w[1]) => n.schedule = v,
                    _ => r.err(e, "schedule must be a strictly increasing list of positive integers"),
                }
            }
            "window" => n.window = r.uint(e, 1).unwrap_or(n.window),
            "n_target" => n.n_target = r.uint(e, 1).unwrap_or(n.n_target),
            "target" => n.target = r.positive(e).unwrap_or(n.target),
            "resolution" => match r.parse::<usize>(e, "a non-negative integer") {
                Some(v) if (4..=256).contains(&v) => n.resolution = v,
                Some(v) if v < 4 => r.err(e, "resolution ≥ 4 required"),
                Some(_) => r.err(e, "resolution ≤ 256 required"),
                None => {}
            },
            "bbox" => {
                let vals: std::result::Result<Vec<f64>, _> = e.value.split_whitespace().map(str::parse).collect();
                match vals {
                    Ok(v) if v.len() == 4 && v.iter().all(|x| x.is_finite()) && v[0] < v[1] && v[2] < v[3] => {
                        n.bbox = Some([v[0], v[1], v[2], v[3]])
                    }
                    _ => r.err(e, "bbox must be `re_min re_max im_min im_max` with min < max"),
                }
            }
            "seed" => n.seed = r.parse(e, "an unsigned 64-bit integer").unwrap_or(n.seed),
            "budget" => n.budget = r.uint(e, 1).unwrap_or(n.budget),
            "theta" => {
                let vals: std::result::Result<Vec<f64>, _> = e.value.split_whitespace().map(str::parse).collect();
                match vals {
                    Ok(v) if !v.is_empty() && v.iter().all(|x| x.is_finite()) => n.theta = Some(v),
                    _ => r.err(e, "theta must be a non-empty list of finite angles"),
                }
            }
            "coordinate" => n.coordinate = r.uint(e, 1).unwrap_or(n.coordinate),
            "box_radius" => n.box_radius = r.positive(e).unwrap_or(n.box_radius),
            "samples" => n.samples = r.uint(e, 1).unwrap_or(n.samples),
            "degree_cap" => n.degree_cap = r.uint(e, 2).unwrap_or(n.degree_cap),
            "iteration_cap" => n.iteration_cap = r.uint(e, 1).unwrap_or(n.iteration_cap),
            "tol" => n.tol = r.positive(e).unwrap_or(n.tol),
            "max_iter" => n.max_iter = r.uint(e, 1).unwrap_or(n.max_iter),
            "direct" => n.direct = r.parse(e, "true or false").unwrap_or(n.direct),
            _ => unreachable!("keys filtered by the lexer"),
        }
    }
    n
}

fn read_multivariate(s: &Section, r: &mut Reader) -> Option<MultiDecl> {
    let Some(me) = get(s, "m") else {
        r.diags.push(Diagnostic { line: s.line, col: 1, message: "[multivariate] needs `m`".into() });
        return None;
    };
    let m = r.uint(me, 1)?;
    let kind = get(s, "kind").map(|e| e.value.as_str()).unwrap_or("polynomial");
    match kind {
        "products" => Some(MultiDecl { m, kind: MultiKind::Products }),
        "polynomial" => {
            let mut terms = Vec::new();
            for e in all(s, "term") {
                let Some((c, ex)) = e.value.split_once(':') else {
                    r.err(e, "term must be `coefficient : exponents`");
                    continue;
                };
                let Ok(c) = parse_complex(c) else {
                    r.err(e, format!("bad coefficient `{}`", c.trim()));
                    continue;
                };
                let ex: std::result::Result<Vec<u32>, _> = ex.split_whitespace().map(str::parse).collect();
                match ex {
                    Ok(ex) if ex.len() == m => terms.push((c, ex)),
                    _ => r.err(e, format!("term needs {m} non-negative exponents")),
                }
            }
            let mut forms = Vec::new();
            for e in all(s, "form") {
                let Some((a, b)) = e.value.split_once(';') else {
                    r.err(e, "form must be `coefficients ; constant`");
                    continue;
                };
                match (parse_complex_list(a), parse_complex(b)) {
                    (Ok(a), Ok(b)) if a.len() == m => forms.push((a, b)),
                    (Ok(_), Ok(_)) => r.err(e, format!("form needs {m} coefficients")),
                    (Err(msg), _) | (_, Err(msg)) => r.err(e, msg),
                }
            }
            if all(s, "term").next().is_some() && all(s, "form").next().is_some() {
                r.diags.push(Diagnostic { line: s.line, col: 1, message: "use either `term` or `form` lines, not both".into() });
                return None;
            }
            if all(s, "term").chain(all(s, "form")).next().is_none() {
                r.diags.push(Diagnostic { line: s.line, col: 1, message: "[multivariate] polynomial needs `term` or `form` lines".into() });
                return None;
            }
            Some(MultiDecl { m, kind: MultiKind::Polynomial { terms, forms } })
        }
        other => {
            let e = get(s, "kind").expect("non-default kind comes from an entry");
            r.err(e, format!("unknown multivariate kind `{other}` (polynomial or products)"));
            None
        }
    }
}

/// Parse and validate a scenario. All problems are collected before failing.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut diags = Vec::new();
    let sections = lex(text, &mut diags);
    let mut r = Reader { diags: &mut diags };
    let find = |name: &str| sections.iter().find(|s| s.name == name);

    let mut id = String::from("scenario");
    let mut mode = None;
    let mut mode_pos = (1, 1);
    match find("scenario") {
        Some(s) => {
            if let Some(e) = get(s, "id") {
                if e.value.is_empty() || e.value.chars().any(|c| c.is_whitespace() || c == '/') {
                    r.err(e, "id must be non-empty without whitespace or `/`");
                } else {
                    id = e.value.clone();
                }
            }
            match get(s, "mode") {
                Some(e) => {
                    mode_pos = (e.line, e.value_col);
                    match e.value.parse::<Mode>() {
                        Ok(m) => mode = Some(m),
                        Err(msg) => r.err(e, msg),
                    }
                }
                None => r.diags.push(Diagnostic { line: s.line, col: 1, message: "[scenario] needs `mode`".into() }),
            }
        }
        None => r.diags.push(Diagnostic { line: 1, col: 1, message: "missing required section [scenario]".into() }),
    }

    let family = find("family").and_then(|s| read_family(s, &mut r));
    let mut coord: BTreeMap<usize, (usize, FamilyDecl)> = BTreeMap::new();
    for s in sections.iter().filter(|s| s.name.starts_with("family.") && is_family_section(&s.name)) {
        let k: usize = s.name[7..].parse().expect("checked by is_family_section");
        if let Some(f) = read_family(s, &mut r) {
            coord.insert(k, (s.line, f));
        }
    }

    let mut product = ProductDecl::default();
    if let Some(s) = find("product") {
        if let Some(e) = get(s, "ordering") {
            match e.value.as_str() {
                "identity" => product.ordering = Ordering::Identity,
                "rearranged" => product.ordering = Ordering::Rearranged,
                other => r.err(e, format!("unknown ordering `{other}` (identity or rearranged)")),
            }
        }
        if let Some(e) = get(s, "eval") {
            product.eval = r.complex_list(e).unwrap_or_default();
        }
    }

    let polynomial = find("polynomial").and_then(|s| {
        let coeffs = get(s, "coefficients");
        let roots = get(s, "roots");
        match (coeffs, roots) {
            (Some(_), Some(e)) => {
                r.diags.push(Diagnostic { line: e.line, col: e.key_col, message: "give `coefficients` or `roots`, not both".into() });
                None
            }
            (Some(e), None) => {
                if let Some(l) = get(s, "leading") {
                    r.diags.push(Diagnostic { line: l.line, col: l.key_col, message: "`leading` only applies to `roots`".into() });
                }
                r.complex_list(e).map(PolyDecl::Coefficients)
            }
            (None, Some(e)) => {
                let leading = get(s, "leading").and_then(|l| r.complex(l)).unwrap_or(Complex64::new(1.0, 0.0));
                if leading == Complex64::new(0.0, 0.0) {
                    r.err(get(s, "leading").expect("zero leading came from an entry"), "leading coefficient must be non-zero");
                }
                r.complex_list(e).map(|roots| PolyDecl::Roots { roots, leading })
            }
            (None, None) => {
                r.diags.push(Diagnostic { line: s.line, col: 1, message: "[polynomial] needs `coefficients` or `roots`".into() });
                None
            }
        }
    });

    let multivariate = find("multivariate").and_then(|s| read_multivariate(s, &mut r));

    let mut points = Vec::new();
    let mut queries = Vec::new();
    let mut section_samples = Vec::new();
    if let Some(s) = find("points") {
        for e in &s.entries {
            if let Some(v) = r.complex_list(e) {
                match e.key.as_str() {
                    "point" => points.push(v),
                    "query" => queries.push(v),
                    _ => section_samples.push(v),
                }
            }
        }
    }

    let numeric = find("numeric").map(|s| read_numeric(s, &mut r)).unwrap_or_default();
    let output_dir = find("output").and_then(|s| get(s, "dir")).map(|e| PathBuf::from(&e.value));

    // cross-section requirements
    let (ml, mc) = mode_pos;
    let need = |ok: bool, msg: &str, diags: &mut Vec<Diagnostic>| {
        if !ok {
            diags.push(Diagnostic { line: ml, col: mc, message: msg.to_string() });
        }
    };
    let coordinate_families: Vec<FamilyDecl>;
    {
        let expected: Vec<usize> = (1..=coord.len()).collect();
        let got: Vec<usize> = coord.keys().copied().collect();
        if got != expected {
            let line = coord.values().next().map_or(1, |(l, _)| *l);
            r.diags.push(Diagnostic { line, col: 1, message: "family.N sections must be numbered 1, 2, ... without gaps".into() });
        }
        coordinate_families = coord.into_values().map(|(_, f)| f).collect();
    }
    let has = |name: &str| find(name).is_some();
    if let Some(mode) = mode {
        let d = &mut *r.diags;
        match mode {
            Mode::GlPoly => need(has("polynomial"), "mode gl-poly requires a [polynomial] section", d),
            Mode::GlEntire | Mode::Rearrange => need(has("family"), &format!("mode {mode} requires a [family] section"), d),
            Mode::GlSections => need(has("multivariate"), "mode gl-sections requires a [multivariate] section", d),
            Mode::Stability | Mode::Corollary => need(
                has("polynomial") || has("multivariate"),
                &format!("mode {mode} requires a [polynomial] or [multivariate] section"),
                d,
            ),
            Mode::SepHull => need(!points.is_empty(), "mode sep-hull requires `point` lines in [points]", d),
        }
        if let Some(mv) = &multivariate {
            if mv.kind == MultiKind::Products {
                need(
                    coordinate_families.len() == mv.m,
                    &format!("multivariate products with m = {} need sections [family.1] .. [family.{}]", mv.m, mv.m),
                    d,
                );
            }
            need(numeric.coordinate <= mv.m, "numeric.coordinate exceeds m", d);
            if let Some(t) = &numeric.theta {
                if matches!(mode, Mode::Stability | Mode::Corollary) {
                    need(t.len() == mv.m, "theta needs one angle per variable", d);
                }
            }
            for smp in &section_samples {
                need(smp.len() + 1 == mv.m, &format!("each `section` needs {} values", mv.m.saturating_sub(1)), d);
            }
        } else if matches!(mode, Mode::Stability | Mode::Corollary) {
            if let Some(t) = &numeric.theta {
                need(t.len() == 1, "theta needs one angle for a univariate polynomial", d);
            }
        }
        if mode == Mode::SepHull {
            let m = points.first().map_or(0, |p| p.len());
            need(m >= 1 && points.iter().all(|p| p.len() == m), "all points need the same, positive number of coordinates", d);
            need(queries.iter().all(|p| p.len() == m), "queries need as many coordinates as points", d);
        }
        if mode == Mode::GlSections && numeric.direct {
            need(numeric.bbox.is_some(), "direct = true needs a bbox", d);
        }
    }

    if !diags.is_empty() {
        diags.sort_by_key(|d| (d.line, d.col));
        return Err(Error::Config(diags));
    }
    Ok(ScenarioConfig {
        id,
        mode: mode.expect("no diagnostics implies a mode"),
        family,
        coordinate_families,
        product,
        polynomial,
        multivariate,
        points,
        queries,
        sections: section_samples,
        numeric,
        output_dir,
    })
}

fn write_family(s: &mut String, header: &str, f: &FamilyDecl) {
    let _ = writeln!(s, "\n[{header}]");
    match &f.kind {
        FamilyKind::Explicit(roots) => {
            let _ = writeln!(s, "kind = explicit");
            let _ = writeln!(s, "roots = {}", fmt_c_list(roots));
        }
        FamilyKind::Sine { count } => {
            let _ = writeln!(s, "kind = sine");
            let _ = writeln!(s, "count = {count}");
        }
        FamilyKind::Parametric { scale, exponent, phases, count, indexing } => {
            let _ = writeln!(s, "kind = parametric");
            let _ = writeln!(s, "scale = {scale:?}");
            let _ = writeln!(s, "exponent = {exponent:?}");
            let _ = writeln!(s, "phases = {}", fmt_c_list(phases));
            let _ = writeln!(s, "count = {count}");
            let _ = writeln!(s, "indexing = {indexing}");
        }
    }
    let _ = writeln!(s, "q = {}", f.q);
    if let Some(g) = f.genus {
        let _ = writeln!(s, "genus = {g}");
    }
}

/// Canonical text form; [`parse_config`] reads it back to an equal config.
pub fn serialize_config(c: &ScenarioConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "[scenario]");
    let _ = writeln!(s, "id = {}", c.id);
    let _ = writeln!(s, "mode = {}", c.mode);
    if let Some(f) = &c.family {
        write_family(&mut s, "family", f);
    }
    for (k, f) in c.coordinate_families.iter().enumerate() {
        write_family(&mut s, &format!("family.{}", k + 1), f);
    }
    let _ = writeln!(s, "\n[product]");
    let _ = writeln!(
        s,
        "ordering = {}",
        match c.product.ordering {
            Ordering::Identity => "identity",
            Ordering::Rearranged => "rearranged",
        }
    );
    if !c.product.eval.is_empty() {
        let _ = writeln!(s, "eval = {}", fmt_c_list(&c.product.eval));
    }
    if let Some(p) = &c.polynomial {
        let _ = writeln!(s, "\n[polynomial]");
        match p {
            PolyDecl::Coefficients(v) => {
                let _ = writeln!(s, "coefficients = {}", fmt_c_list(v));
            }
            PolyDecl::Roots { roots, leading } => {
                let _ = writeln!(s, "roots = {}", fmt_c_list(roots));
                let _ = writeln!(s, "leading = {}", fmt_c(*leading));
            }
        }
    }
    if let Some(mv) = &c.multivariate {
        let _ = writeln!(s, "\n[multivariate]");
        let _ = writeln!(s, "m = {}", mv.m);
        match &mv.kind {
            MultiKind::Products => {
                let _ = writeln!(s, "kind = products");
            }
            MultiKind::Polynomial { terms, forms } => {
                let _ = writeln!(s, "kind = polynomial");
                for (coef, ex) in terms {
                    let ex: Vec<String> = ex.iter().map(|e| e.to_string()).collect();
                    let _ = writeln!(s, "term = {} : {}", fmt_c(*coef), ex.join(" "));
                }
                for (a, b) in forms {
                    let _ = writeln!(s, "form = {} ; {}", fmt_c_list(a), fmt_c(*b));
                }
            }
        }
    }
    if !(c.points.is_empty() && c.queries.is_empty() && c.sections.is_empty()) {
        let _ = writeln!(s, "\n[points]");
        for (key, list) in [("point", &c.points), ("query", &c.queries), ("section", &c.sections)] {
            for p in list {
                let _ = writeln!(s, "{key} = {}", fmt_c_list(p));
            }
        }
    }
    let n = &c.numeric;
    let _ = writeln!(s, "\n[numeric]");
    if let Some(e) = n.eps {
        let _ = writeln!(s, "eps = {e:?}");
    }
    let sched: Vec<String> = n.schedule.iter().map(|v| v.to_string()).collect();
    let _ = writeln!(s, "schedule = {}", sched.join(" "));
    let _ = writeln!(s, "window = {}", n.window);
    let _ = writeln!(s, "n_target = {}", n.n_target);
    let _ = writeln!(s, "target = {:?}", n.target);
    let _ = writeln!(s, "resolution = {}", n.resolution);
    if let Some(b) = n.bbox {
        let _ = writeln!(s, "bbox = {:?} {:?} {:?} {:?}", b[0], b[1], b[2], b[3]);
    }
    let _ = writeln!(s, "seed = {}", n.seed);
    let _ = writeln!(s, "budget = {}", n.budget);
    if let Some(t) = &n.theta {
        let t: Vec<String> = t.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(s, "theta = {}", t.join(" "));
    }
    let _ = writeln!(s, "coordinate = {}", n.coordinate);
    let _ = writeln!(s, "box_radius = {:?}", n.box_radius);
    let _ = writeln!(s, "samples = {}", n.samples);
    let _ = writeln!(s, "degree_cap = {}", n.degree_cap);
    let _ = writeln!(s, "iteration_cap = {}", n.iteration_cap);
    let _ = writeln!(s, "tol = {:?}", n.tol);
    let _ = writeln!(s, "max_iter = {}", n.max_iter);
    let _ = writeln!(s, "direct = {}", n.direct);
    if let Some(d) = &c.output_dir {
        let _ = writeln!(s, "\n[output]");
        let _ = writeln!(s, "dir = {}", d.display());
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diags(text: &str) -> Vec<Diagnostic> {
        match parse_config(text) {
            Err(Error::Config(d)) => d,
            other => panic!("expected diagnostics, got {other:?}"),
        }
    }

    #[test]
    fn minimal_gl_poly() {
        let c = parse_config("[scenario]\nmode = gl-poly\n[polynomial]\ncoefficients = (-1,0) 0 (1,0)\n").unwrap();
        assert_eq!(c.mode, Mode::GlPoly);
        assert_eq!(c.id, "scenario");
        assert_eq!(
            c.polynomial,
            Some(PolyDecl::Coefficients(vec![Complex64::new(-1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]))
        );
        assert_eq!(c.numeric, Numeric::default());
    }

    #[test]
    fn resolution_zero_is_reported_at_its_line() {
        let d = diags("[scenario]\nmode = sep-hull\n[points]\npoint = (0,0)\n[numeric]\nresolution = 0\n");
        assert_eq!(d, vec![Diagnostic { line: 6, col: 14, message: "resolution ≥ 4 required".into() }]);
    }

    #[test]
    fn unknown_keys_and_sections() {
        let d = diags("[scenario]\nmode = gl-poly\ncolour = red\n[polynomial]\ncoefficients = 1 2 3\n[extras]\n");
        assert_eq!(d.len(), 2);
        assert_eq!((d[0].line, d[0].col), (3, 1));
        assert!(d[0].message.contains("unknown key `colour`"));
        assert!(d[1].message.contains("unknown section `extras`"));
    }

    #[test]
    fn missing_required_section() {
        let d = diags("[scenario]\nid = x\nmode = gl-entire\n");
        assert_eq!(d[0].line, 3);
        assert!(d[0].message.contains("requires a [family]"));
        let d = diags("[numeric]\nseed = 3\n");
        assert!(d[0].message.contains("[scenario]"));
    }

    #[test]
    fn several_problems_are_collected() {
        let d = diags("[scenario]\nmode = nope\n[numeric]\nwindow = 0\neps = -1\nschedule = 3 2\n");
        assert_eq!(d.len(), 4);
        assert!(d.windows(2).all(|w| w[0].line <= w[1].line));
    }

    #[test]
    fn complex_tokens() {
        assert_eq!(parse_complex("(1.5,-2)").unwrap(), Complex64::new(1.5, -2.0));
        assert_eq!(parse_complex("3").unwrap(), Complex64::new(3.0, 0.0));
        assert_eq!(parse_complex_list("( 1, 2) (3,4)").unwrap().len(), 2);
        assert!(parse_complex("(1;2)").is_err());
        assert!(parse_complex("(inf,0)").is_err());
    }

    #[test]
    fn full_round_trip() {
        let text = "\
[scenario]
id = everything
mode = gl-sections
[family]
kind = parametric
scale = 0.5
exponent = 0.5
phases = (1,0) (0,1) (-1,0) (0,-1)
count = 100
indexing = blocks:7
genus = 2
[family.1]
kind = sine
count = 50
[family.2]
kind = explicit
roots = (1,1) (2,-0.25)
q = 2
[product]
ordering = rearranged
eval = (0.5,0)
[multivariate]
m = 2
kind = products
[points]
section = (0.1,0.2)
query = (0,0) (1,1)
[numeric]
eps = 1e-9
schedule = 5 10
bbox = -1 1 -2 2
theta = 0.5 -0.25
seed = 99
direct = true
[output]
dir = some/dir
";
        let c = parse_config(text).unwrap();
        assert_eq!(c.coordinate_families.len(), 2);
        assert_eq!(c.numeric.bbox, Some([-1.0, 1.0, -2.0, 2.0]));
        let again = parse_config(&serialize_config(&c)).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn products_need_coordinate_families() {
        let d = diags("[scenario]\nmode = gl-sections\n[multivariate]\nm = 2\nkind = products\n[family.1]\nkind = sine\n");
        assert!(d.iter().any(|x| x.message.contains("[family.1] .. [family.2]")));
    }

    #[test]
    fn terms_and_forms() {
        let c = parse_config("[scenario]\nmode = stability\n[multivariate]\nm = 2\nterm = (1,0) : 1 1\nterm = -1 : 0 0\n").unwrap();
        match c.multivariate.unwrap().kind {
            MultiKind::Polynomial { terms, forms } => {
                assert_eq!(terms.len(), 2);
                assert!(forms.is_empty());
            }
            k => panic!("{k:?}"),
        }
        let d = diags("[scenario]\nmode = stability\n[multivariate]\nm = 2\nform = (1,0) ; 0\n");
        assert!(d[0].message.contains("form needs 2 coefficients"));
        assert_eq!(d[0].line, 5);
    }

    #[test]
    fn family_key_conflicts() {
        let d = diags("[scenario]\nmode = rearrange\n[family]\nkind = sine\nphases = (1,0)\n");
        assert!(d[0].message.contains("does not apply"));
        let d = diags("[scenario]\nmode = rearrange\n[family]\nkind = explicit\nroots = (0,0)\n");
        assert!(d[0].message.contains("non-zero"));
    }
}
