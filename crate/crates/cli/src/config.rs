//! Flat sectioned experiment configs: `[section]` headers and `key = value`
//! lines, full-line `#` comments, no nesting. Parsing and resolution track
//! line numbers so every rejection points at the offending line, and every
//! key must be consumed by the selected experiment: leftovers are errors.

use std::cell::RefCell;
use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt;

use bdex_core::boundary::BoundaryProfile;
use bdex_core::mesh::{DensityField, Mesh};
use bdex_core::params::ModelParams;
use bdex_core::pde::{cfl_bound, solve_elliptic};
use bdex_core::quasipotential::{InterpolationOptions, ReversalOptions};

/// One rejected config line; `line == 0` means no specific anchor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl ConfigError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        ConfigError { line, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

#[derive(Debug)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

#[derive(Debug)]
struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

/// Lexed config: the section/key table with line anchors.
#[derive(Debug)]
pub struct Parsed {
    sections: Vec<Section>,
}

impl Parsed {
    pub fn is_empty(&self) -> bool {
        self.sections.is_empty()
    }
}

/// Splits `text` into sections and entries, rejecting malformed lines,
/// duplicate sections, and duplicate keys.
pub fn parse(text: &str) -> Result<Parsed, Vec<ConfigError>> {
    let mut sections: Vec<Section> = Vec::new();
    let mut errors = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if let Some(rest) = t.strip_prefix('[') {
            match rest.strip_suffix(']') {
                Some(name) if !name.trim().is_empty() => {
                    let name = name.trim().to_string();
                    if let Some(prev) = sections.iter().find(|s| s.name == name) {
                        errors.push(ConfigError::new(
                            line,
                            format!("section [{name}] already declared on line {}", prev.line),
                        ));
                    } else {
                        sections.push(Section { name, line, entries: Vec::new() });
                    }
                }
                _ => errors.push(ConfigError::new(line, "malformed section header")),
            }
            continue;
        }
        let Some((key, value)) = t.split_once('=') else {
            errors.push(ConfigError::new(line, "expected `key = value`"));
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            errors.push(ConfigError::new(line, "empty key"));
            continue;
        }
        if value.is_empty() {
            errors.push(ConfigError::new(line, format!("key `{key}` has no value")));
            continue;
        }
        let Some(section) = sections.last_mut() else {
            errors.push(ConfigError::new(line, format!("key `{key}` before any section")));
            continue;
        };
        if let Some(prev) = section.entries.iter().find(|e| e.key == key) {
            errors.push(ConfigError::new(
                line,
                format!("key `{key}` already set on line {}", prev.line),
            ));
            continue;
        }
        section.entries.push(Entry { key: key.to_string(), value: value.to_string(), line });
    }
    if errors.is_empty() {
        Ok(Parsed { sections })
    } else {
        Err(errors)
    }
}

/// Read access with consumption tracking: every section and key an
/// experiment touches is marked, and [`Reader::leftovers`] reports the rest.
struct Reader<'a> {
    parsed: &'a Parsed,
    seen_sections: RefCell<HashSet<usize>>,
    taken_keys: RefCell<HashSet<(usize, usize)>>,
}

#[derive(Clone, Copy)]
struct Handle<'a, 'r> {
    reader: &'r Reader<'a>,
    idx: usize,
}

impl<'a> Reader<'a> {
    fn new(parsed: &'a Parsed) -> Self {
        Reader {
            parsed,
            seen_sections: RefCell::new(HashSet::new()),
            taken_keys: RefCell::new(HashSet::new()),
        }
    }

    fn section<'r>(&'r self, name: &str) -> Option<Handle<'a, 'r>> {
        let idx = self.parsed.sections.iter().position(|s| s.name == name)?;
        self.seen_sections.borrow_mut().insert(idx);
        Some(Handle { reader: self, idx })
    }

    fn require<'r>(&'r self, name: &str, errs: &mut Vec<ConfigError>) -> Option<Handle<'a, 'r>> {
        let h = self.section(name);
        if h.is_none() {
            errs.push(ConfigError::new(0, format!("missing [{name}] section")));
        }
        h
    }

    fn leftovers(&self) -> Vec<ConfigError> {
        let seen = self.seen_sections.borrow();
        let taken = self.taken_keys.borrow();
        let mut errs = Vec::new();
        for (i, s) in self.parsed.sections.iter().enumerate() {
            if !seen.contains(&i) {
                errs.push(ConfigError::new(
                    s.line,
                    format!("unknown section [{}] for this experiment", s.name),
                ));
                continue;
            }
            for (j, e) in s.entries.iter().enumerate() {
                if !taken.contains(&(i, j)) {
                    errs.push(ConfigError::new(
                        e.line,
                        format!("unknown key `{}` in section [{}]", e.key, s.name),
                    ));
                }
            }
        }
        errs
    }
}

impl<'a, 'r> Handle<'a, 'r> {
    fn section(&self) -> &'a Section {
        &self.reader.parsed.sections[self.idx]
    }

    fn line(&self) -> usize {
        self.section().line
    }

    fn name(&self) -> &'a str {
        &self.section().name
    }

    /// Marks the key taken and hands back its raw value and line.
    fn raw(&self, key: &str) -> Option<(&'a str, usize)> {
        let s = self.section();
        let j = s.entries.iter().position(|e| e.key == key)?;
        self.reader.taken_keys.borrow_mut().insert((self.idx, j));
        Some((&s.entries[j].value, s.entries[j].line))
    }

    /// Marks every key in the section taken; used when the section cannot
    /// be interpreted at all, to avoid cascading unknown-key noise.
    fn take_all(&self) {
        let mut taken = self.reader.taken_keys.borrow_mut();
        for j in 0..self.section().entries.len() {
            taken.insert((self.idx, j));
        }
    }

    fn missing(&self, key: &str) -> ConfigError {
        ConfigError::new(self.line(), format!("missing key `{key}` in [{}]", self.name()))
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<(T, usize)>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(|x| Some((x, line))).map_err(|_| {
                ConfigError::new(line, format!("key `{key}` expects {what}, got `{v}`"))
            }),
        }
    }

    fn f64_opt(&self, key: &str, errs: &mut Vec<ConfigError>) -> Option<(f64, usize)> {
        self.parsed::<f64>(key, "a number").unwrap_or_else(|e| {
            errs.push(e);
            None
        })
    }

    fn f64_req(&self, key: &str, errs: &mut Vec<ConfigError>) -> Option<(f64, usize)> {
        let v = self.f64_opt(key, errs);
        if v.is_none() && !errs.iter().any(|e| e.line != 0 && e.message.contains(&format!("`{key}`"))) {
            errs.push(self.missing(key));
        }
        v
    }

    fn usize_opt(&self, key: &str, errs: &mut Vec<ConfigError>) -> Option<(usize, usize)> {
        self.parsed::<usize>(key, "a nonnegative integer").unwrap_or_else(|e| {
            errs.push(e);
            None
        })
    }

    fn usize_req(&self, key: &str, errs: &mut Vec<ConfigError>) -> Option<(usize, usize)> {
        let v = self.usize_opt(key, errs);
        if v.is_none() && !errs.iter().any(|e| e.line != 0 && e.message.contains(&format!("`{key}`"))) {
            errs.push(self.missing(key));
        }
        v
    }

    fn u64_opt(&self, key: &str, errs: &mut Vec<ConfigError>) -> Option<(u64, usize)> {
        self.parsed::<u64>(key, "a nonnegative integer").unwrap_or_else(|e| {
            errs.push(e);
            None
        })
    }

    fn bool_opt(&self, key: &str, errs: &mut Vec<ConfigError>) -> Option<(bool, usize)> {
        match self.raw(key) {
            None => None,
            Some(("true", line)) => Some((true, line)),
            Some(("false", line)) => Some((false, line)),
            Some((v, line)) => {
                errs.push(ConfigError::new(
                    line,
                    format!("key `{key}` expects true or false, got `{v}`"),
                ));
                None
            }
        }
    }

    fn list_f64(&self, key: &str, errs: &mut Vec<ConfigError>) -> Option<(Vec<f64>, usize)> {
        let (raw, line) = self.raw(key)?;
        let mut out = Vec::new();
        for part in raw.split(',') {
            match part.trim().parse::<f64>() {
                Ok(v) => out.push(v),
                Err(_) => {
                    errs.push(ConfigError::new(
                        line,
                        format!("key `{key}` expects comma-separated numbers, got `{part}`"),
                    ));
                    return None;
                }
            }
        }
        Some((out, line))
    }

    fn str_req(&self, key: &str, errs: &mut Vec<ConfigError>) -> Option<(&'a str, usize)> {
        let v = self.raw(key);
        if v.is_none() {
            errs.push(self.missing(key));
        }
        v
    }
}

/// Closed-form density profile used for initial data and targets. All
/// variants are checked to stay inside [0, 1] before any run starts.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSpec {
    Constant { value: f64 },
    /// Affine in the wall coordinate, `left` at u1 = -1 and `right` at +1.
    Affine { left: f64, right: f64 },
    /// `mean + amplitude * cos(mode * pi * (u1 + 1) / 2)`.
    Cosine { mean: f64, amplitude: f64, mode: usize },
    /// The stationary profile of the configured model, solved on demand.
    Stationary,
}

impl FieldSpec {
    pub fn realize(
        &self,
        mesh: &Mesh,
        b: &BoundaryProfile,
        params: &ModelParams,
    ) -> bdex_core::Result<DensityField> {
        match *self {
            FieldSpec::Constant { value } => Ok(DensityField::constant(*mesh, value)),
            FieldSpec::Affine { left, right } => Ok(DensityField::from_fn(*mesh, |u| {
                left + (right - left) * 0.5 * (u[0] + 1.0)
            })),
            FieldSpec::Cosine { mean, amplitude, mode } => Ok(DensityField::from_fn(*mesh, |u| {
                mean + amplitude * (mode as f64 * PI * 0.5 * (u[0] + 1.0)).cos()
            })),
            FieldSpec::Stationary => solve_elliptic(b, params, mesh),
        }
    }
}

/// How a rate-functional experiment builds its trajectory.
#[derive(Debug, Clone, PartialEq)]
pub enum PathSpec {
    /// Integrate the hydrodynamic equation from `initial`.
    Solution { initial: FieldSpec, t_end: f64, dt: Option<f64>, stride: usize },
    /// Straight power-schedule segment between two profiles on unit time.
    Interpolation { from: FieldSpec, to: FieldSpec, power: f64, frames: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Hydrostatics,
    Hydrodynamics,
    RateFunctional,
    Quasipotential,
    OracleValidate,
    LemmaSuite,
}

impl ExperimentKind {
    pub fn slug(&self) -> &'static str {
        match self {
            ExperimentKind::Hydrostatics => "hydrostatics",
            ExperimentKind::Hydrodynamics => "hydrodynamics",
            ExperimentKind::RateFunctional => "rate-functional",
            ExperimentKind::Quasipotential => "quasipotential",
            ExperimentKind::OracleValidate => "oracle-validate",
            ExperimentKind::LemmaSuite => "lemma-suite",
        }
    }
}

/// Per-kind payload with everything validated and ready to run.
#[derive(Debug, Clone)]
pub enum Spec {
    Hydrostatics {
        params: ModelParams,
        boundary: BoundaryProfile,
        mesh: Mesh,
        burn_in: f64,
        run_time: f64,
        batches: usize,
        samples_per_batch: usize,
        replicas: usize,
    },
    Hydrodynamics {
        params: ModelParams,
        boundary: BoundaryProfile,
        mesh: Mesh,
        initial: FieldSpec,
        t_end: f64,
        dt: Option<f64>,
        stride: usize,
    },
    RateFunctional {
        params: ModelParams,
        boundary: BoundaryProfile,
        mesh: Mesh,
        path: PathSpec,
    },
    Quasipotential {
        params: ModelParams,
        boundary: BoundaryProfile,
        mesh: Mesh,
        target: FieldSpec,
        interpolation: InterpolationOptions,
        reversal: ReversalOptions,
    },
    OracleValidate {
        params: ModelParams,
        boundary: BoundaryProfile,
        burn_in: f64,
        run_time: f64,
        transient_time: f64,
        replicas: usize,
    },
    LemmaSuite {
        params: ModelParams,
        boundary: BoundaryProfile,
        mesh: Mesh,
    },
}

/// A fully resolved experiment: kind, seed, output dir, typed payload.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub out_dir: Option<String>,
    pub spec: Spec,
}

fn read_model(r: &Reader, errs: &mut Vec<ConfigError>) -> Option<ModelParams> {
    let h = r.require("model", errs)?;
    let a = h.f64_req("a", errs);
    let d = h.usize_req("d", errs);
    let n = h.usize_req("n", errs);
    let ((a, a_line), (d, d_line), (n, n_line)) = (a?, d?, n?);
    if !(a.is_finite() && a > -0.5) {
        errs.push(ConfigError::new(
            a_line,
            format!("interaction strength a = {a} must be finite and > -1/2"),
        ));
        return None;
    }
    if d < 1 {
        errs.push(ConfigError::new(d_line, "dimension d must be >= 1"));
        return None;
    }
    if n < 2 {
        errs.push(ConfigError::new(n_line, "lattice scale n must be >= 2"));
        return None;
    }
    match ModelParams::new(a, d, n) {
        Ok(p) => Some(p),
        Err(e) => {
            errs.push(ConfigError::new(h.line(), e.to_string()));
            None
        }
    }
}

fn check_reservoir(v: f64, line: usize, errs: &mut Vec<ConfigError>) -> bool {
    if v.is_finite() && v > 0.0 && v < 1.0 {
        true
    } else {
        errs.push(ConfigError::new(
            line,
            format!("reservoir density {v} must lie strictly inside (0, 1)"),
        ));
        false
    }
}

fn read_boundary(r: &Reader, errs: &mut Vec<ConfigError>) -> Option<BoundaryProfile> {
    let h = r.require("boundary", errs)?;
    let (kind, kind_line) = match h.str_req("kind", errs) {
        Some(k) => k,
        None => {
            h.take_all();
            return None;
        }
    };
    let built = match kind {
        "constant" => {
            let (v, line) = h.f64_req("value", errs)?;
            if !check_reservoir(v, line, errs) {
                return None;
            }
            BoundaryProfile::constant(v)
        }
        "affine" => {
            let left = h.f64_req("left", errs);
            let right = h.f64_req("right", errs);
            let ((l, l_line), (rv, r_line)) = (left?, right?);
            let ok = check_reservoir(l, l_line, errs) & check_reservoir(rv, r_line, errs);
            if !ok {
                return None;
            }
            BoundaryProfile::two_sided(l, rv)
        }
        "tabulated" => {
            let left = h.list_f64("left", errs);
            let right = h.list_f64("right", errs);
            if left.is_none() {
                errs.push(h.missing("left"));
            }
            if right.is_none() {
                errs.push(h.missing("right"));
            }
            let ((l, l_line), (rv, r_line)) = (left?, right?);
            let mut ok = true;
            for &v in &l {
                ok &= check_reservoir(v, l_line, errs);
            }
            for &v in &rv {
                ok &= check_reservoir(v, r_line, errs);
            }
            if l.is_empty() || l.len() != rv.len() {
                errs.push(ConfigError::new(
                    h.line(),
                    "tabulated profile needs equal, nonempty face tables",
                ));
                return None;
            }
            if !ok {
                return None;
            }
            BoundaryProfile::tabulated(l, rv)
        }
        other => {
            errs.push(ConfigError::new(
                kind_line,
                format!("unknown boundary kind `{other}` (expected constant|affine|tabulated)"),
            ));
            h.take_all();
            return None;
        }
    };
    match built {
        Ok(b) => Some(b),
        Err(e) => {
            errs.push(ConfigError::new(h.line(), e.to_string()));
            None
        }
    }
}

fn read_mesh(r: &Reader, params: Option<&ModelParams>, errs: &mut Vec<ConfigError>) -> Option<Mesh> {
    let h = r.require("mesh", errs)?;
    let m1 = h.usize_req("m1", errs);
    let mt = h.usize_opt("mt", errs);
    let (m1, m1_line) = m1?;
    if m1 < 2 {
        errs.push(ConfigError::new(m1_line, "mesh needs at least 2 cells across the slab"));
        return None;
    }
    let params = params?;
    let (mt, mt_line) = mt.unwrap_or((1, h.line()));
    if params.d > 1 && mt < 2 {
        errs.push(ConfigError::new(
            mt_line,
            "transverse resolution mt must be >= 2 in dimension >= 2",
        ));
        return None;
    }
    match Mesh::new(params.d, m1, mt) {
        Ok(m) => Some(m),
        Err(e) => {
            errs.push(ConfigError::new(h.line(), e.to_string()));
            None
        }
    }
}

fn read_field_spec(r: &Reader, name: &str, errs: &mut Vec<ConfigError>) -> Option<FieldSpec> {
    let h = r.require(name, errs)?;
    let (kind, kind_line) = match h.str_req("kind", errs) {
        Some(k) => k,
        None => {
            h.take_all();
            return None;
        }
    };
    let in_unit = |v: f64, line: usize, errs: &mut Vec<ConfigError>| {
        if (0.0..=1.0).contains(&v) {
            true
        } else {
            errs.push(ConfigError::new(line, format!("density value {v} is outside [0, 1]")));
            false
        }
    };
    match kind {
        "constant" => {
            let (v, line) = h.f64_req("value", errs)?;
            in_unit(v, line, errs).then_some(FieldSpec::Constant { value: v })
        }
        "affine" => {
            let left = h.f64_req("left", errs);
            let right = h.f64_req("right", errs);
            let ((l, l_line), (rv, r_line)) = (left?, right?);
            let ok = in_unit(l, l_line, errs) & in_unit(rv, r_line, errs);
            ok.then_some(FieldSpec::Affine { left: l, right: rv })
        }
        "cosine" => {
            let mean = h.f64_req("mean", errs);
            let amplitude = h.f64_req("amplitude", errs);
            let mode = h.usize_opt("mode", errs).map(|(m, l)| (m, l)).unwrap_or((1, h.line()));
            let ((m, m_line), (amp, _)) = (mean?, amplitude?);
            let (mode, mode_line) = mode;
            if mode < 1 {
                errs.push(ConfigError::new(mode_line, "cosine mode must be >= 1"));
                return None;
            }
            if m - amp.abs() < 0.0 || m + amp.abs() > 1.0 {
                errs.push(ConfigError::new(
                    m_line,
                    format!("cosine profile range [{}, {}] leaves [0, 1]", m - amp.abs(), m + amp.abs()),
                ));
                return None;
            }
            Some(FieldSpec::Cosine { mean: m, amplitude: amp, mode })
        }
        "stationary" => Some(FieldSpec::Stationary),
        other => {
            errs.push(ConfigError::new(
                kind_line,
                format!("unknown profile kind `{other}` (expected constant|affine|cosine|stationary)"),
            ));
            h.take_all();
            None
        }
    }
}

struct TimeSpec {
    t_end: f64,
    dt: Option<(f64, usize)>,
    stride: usize,
}

fn read_time(r: &Reader, errs: &mut Vec<ConfigError>) -> Option<TimeSpec> {
    let h = r.require("time", errs)?;
    let t_end = h.f64_req("t_end", errs);
    let dt = h.f64_opt("dt", errs);
    let stride = h.usize_opt("stride", errs);
    let (t_end, t_line) = t_end?;
    if !(t_end.is_finite() && t_end > 0.0) {
        errs.push(ConfigError::new(t_line, "horizon t_end must be positive"));
        return None;
    }
    if let Some((v, line)) = dt {
        if !(v.is_finite() && v > 0.0) {
            errs.push(ConfigError::new(line, "time step must be positive"));
            return None;
        }
    }
    let stride = match stride {
        Some((0, line)) => {
            errs.push(ConfigError::new(line, "record stride must be >= 1"));
            return None;
        }
        Some((s, _)) => s,
        None => 1,
    };
    Some(TimeSpec { t_end, dt, stride })
}

/// Rejects an explicit step above the solver's stability limit, quoting the
/// computed bound.
fn check_dt(
    dt: Option<(f64, usize)>,
    params: Option<&ModelParams>,
    mesh: Option<&Mesh>,
    errs: &mut Vec<ConfigError>,
) -> Option<f64> {
    let (v, line) = dt?;
    if let (Some(p), Some(m)) = (params, mesh) {
        let bound = cfl_bound(p, m);
        if v > bound * (1.0 + 1e-12) {
            errs.push(ConfigError::new(
                line,
                format!("time step {v} exceeds the stability bound {bound}"),
            ));
        }
    }
    Some(v)
}

fn positive_f64(
    h: Handle,
    key: &str,
    what: &str,
    errs: &mut Vec<ConfigError>,
) -> Option<f64> {
    let (v, line) = h.f64_req(key, errs)?;
    if v.is_finite() && v > 0.0 {
        Some(v)
    } else {
        errs.push(ConfigError::new(line, format!("{what} must be positive")));
        None
    }
}

fn sites_of(params: &ModelParams) -> usize {
    (2 * params.n - 1) * params.n.pow((params.d - 1) as u32)
}

fn check_enumerable(params: Option<&ModelParams>, r: &Reader, errs: &mut Vec<ConfigError>) {
    if let Some(p) = params {
        let sites = sites_of(p);
        if sites > 20 {
            let line = r.section("model").map(|h| h.line()).unwrap_or(0);
            errs.push(ConfigError::new(
                line,
                format!("state space with {sites} sites is too large for exact enumeration (limit 20)"),
            ));
        }
    }
}

/// Resolves a parsed config into a runnable experiment, or the full list of
/// rejections sorted by line.
pub fn resolve(parsed: &Parsed) -> Result<Experiment, Vec<ConfigError>> {
    let r = Reader::new(parsed);
    let mut errs: Vec<ConfigError> = Vec::new();

    let Some(exp) = r.require("experiment", &mut errs) else {
        return Err(errs);
    };
    let kind = match exp.str_req("kind", &mut errs) {
        Some(("hydrostatics", _)) => Some(ExperimentKind::Hydrostatics),
        Some(("hydrodynamics", _)) => Some(ExperimentKind::Hydrodynamics),
        Some(("rate-functional", _)) => Some(ExperimentKind::RateFunctional),
        Some(("quasipotential", _)) => Some(ExperimentKind::Quasipotential),
        Some(("oracle-validate", _)) => Some(ExperimentKind::OracleValidate),
        Some(("lemma-suite", _)) => Some(ExperimentKind::LemmaSuite),
        Some((other, line)) => {
            errs.push(ConfigError::new(
                line,
                format!(
                    "unknown experiment kind `{other}` (expected hydrostatics|hydrodynamics|\
                     rate-functional|quasipotential|oracle-validate|lemma-suite)"
                ),
            ));
            None
        }
        None => None,
    };
    let seed = exp.u64_opt("seed", &mut errs).map(|(s, _)| s).unwrap_or(0);
    let out_dir = r
        .section("output")
        .and_then(|h| h.raw("dir").map(|(v, _)| v.to_string()));

    let spec = kind.and_then(|kind| build_spec(kind, &r, &mut errs));

    errs.extend(r.leftovers());
    errs.sort_by_key(|e| e.line);
    match (spec, errs.is_empty()) {
        (Some(spec), true) => Ok(Experiment { kind: kind.unwrap(), seed, out_dir, spec }),
        _ => {
            if errs.is_empty() {
                errs.push(ConfigError::new(0, "experiment could not be resolved"));
            }
            Err(errs)
        }
    }
}

fn build_spec(kind: ExperimentKind, r: &Reader, errs: &mut Vec<ConfigError>) -> Option<Spec> {
    let params = read_model(r, errs);
    let boundary = read_boundary(r, errs);
    match kind {
        ExperimentKind::Hydrostatics => {
            let mesh = read_mesh(r, params.as_ref(), errs);
            let h = r.require("run", errs)?;
            let burn_in = h.f64_req("burn_in", errs);
            let run_time = positive_f64(h, "run_time", "run time", errs);
            let batches = h.usize_req("batches", errs);
            let samples = h.usize_req("samples_per_batch", errs);
            let replicas = h.usize_opt("replicas", errs);
            let (burn_in, burn_line) = burn_in?;
            if burn_in < 0.0 {
                errs.push(ConfigError::new(burn_line, "burn-in must be nonnegative"));
                return None;
            }
            let (batches, batch_line) = batches?;
            if batches < 20 {
                errs.push(ConfigError::new(batch_line, "batch means need at least 20 batches"));
                return None;
            }
            let (samples, samples_line) = samples?;
            if samples == 0 {
                errs.push(ConfigError::new(samples_line, "need at least one snapshot per batch"));
                return None;
            }
            let replicas = match replicas {
                Some((0, line)) => {
                    errs.push(ConfigError::new(line, "need at least one replica"));
                    return None;
                }
                Some((v, _)) => v,
                None => 1,
            };
            Some(Spec::Hydrostatics {
                params: params?,
                boundary: boundary?,
                mesh: mesh?,
                burn_in,
                run_time: run_time?,
                batches,
                samples_per_batch: samples,
                replicas,
            })
        }
        ExperimentKind::Hydrodynamics => {
            let mesh = read_mesh(r, params.as_ref(), errs);
            let initial = read_field_spec(r, "initial", errs);
            let time = read_time(r, errs)?;
            let dt = check_dt(time.dt, params.as_ref(), mesh.as_ref(), errs);
            Some(Spec::Hydrodynamics {
                params: params?,
                boundary: boundary?,
                mesh: mesh?,
                initial: initial?,
                t_end: time.t_end,
                dt,
                stride: time.stride,
            })
        }
        ExperimentKind::RateFunctional => {
            let mesh = read_mesh(r, params.as_ref(), errs);
            let h = r.require("path", errs)?;
            let (path_kind, path_line) = match h.str_req("kind", errs) {
                Some(k) => k,
                None => {
                    h.take_all();
                    return None;
                }
            };
            let path = match path_kind {
                "solution" => {
                    let initial = read_field_spec(r, "initial", errs);
                    let time = read_time(r, errs)?;
                    let dt = check_dt(time.dt, params.as_ref(), mesh.as_ref(), errs);
                    PathSpec::Solution {
                        initial: initial?,
                        t_end: time.t_end,
                        dt,
                        stride: time.stride,
                    }
                }
                "interpolation" => {
                    let from = read_field_spec(r, "from", errs);
                    let to = read_field_spec(r, "to", errs);
                    let power = h.f64_opt("power", errs);
                    let frames = h.usize_opt("frames", errs);
                    let power = match power {
                        Some((p, line)) if !(p.is_finite() && p > 0.5) => {
                            errs.push(ConfigError::new(
                                line,
                                "schedule power must be > 1/2 for an integrable cost",
                            ));
                            return None;
                        }
                        Some((p, _)) => p,
                        None => 1.0,
                    };
                    let frames = match frames {
                        Some((f, line)) if f < 2 => {
                            errs.push(ConfigError::new(line, "a path needs at least two frames"));
                            return None;
                        }
                        Some((f, _)) => f,
                        None => 64,
                    };
                    PathSpec::Interpolation { from: from?, to: to?, power, frames }
                }
                other => {
                    errs.push(ConfigError::new(
                        path_line,
                        format!("unknown path kind `{other}` (expected solution|interpolation)"),
                    ));
                    return None;
                }
            };
            Some(Spec::RateFunctional {
                params: params?,
                boundary: boundary?,
                mesh: mesh?,
                path,
            })
        }
        ExperimentKind::Quasipotential => {
            let mesh = read_mesh(r, params.as_ref(), errs);
            let target = read_field_spec(r, "target", errs);
            let mut interpolation = InterpolationOptions::default();
            let mut reversal = ReversalOptions::default();
            if let Some(h) = r.section("options") {
                if let Some((frames, line)) = h.usize_opt("frames", errs) {
                    if frames < 2 {
                        errs.push(ConfigError::new(line, "interpolation needs at least two frames"));
                    }
                    interpolation.frames = frames;
                }
                if let Some((v, _)) = h.bool_opt("refine_knots", errs) {
                    interpolation.refine_knots = v;
                }
                if let Some((v, line)) = h.usize_opt("knots", errs) {
                    if v < 1 {
                        errs.push(ConfigError::new(line, "knot refinement needs at least one knot"));
                    }
                    interpolation.knots = v;
                }
                let lo = h.f64_opt("power_lo", errs);
                let hi = h.f64_opt("power_hi", errs);
                if let Some((v, _)) = lo {
                    interpolation.power_range.0 = v;
                }
                if let Some((v, _)) = hi {
                    interpolation.power_range.1 = v;
                }
                let (plo, phi_) = interpolation.power_range;
                if !(plo > 0.5 && phi_ > plo) {
                    let line = lo.or(hi).map(|(_, l)| l).unwrap_or(h.line());
                    errs.push(ConfigError::new(
                        line,
                        "power bracket must satisfy 0.5 < power_lo < power_hi",
                    ));
                }
                if let Some((v, line)) = h.f64_opt("tol", errs) {
                    if !(v.is_finite() && v > 0.0) {
                        errs.push(ConfigError::new(line, "relaxation tolerance must be positive"));
                    }
                    reversal.tol = v;
                }
                if let Some((v, line)) = h.f64_opt("t_cap", errs) {
                    if !(v.is_finite() && v > 0.0) {
                        errs.push(ConfigError::new(line, "relaxation horizon cap must be positive"));
                    }
                    reversal.t_cap = v;
                }
                if let Some((v, line)) = h.usize_opt("stride", errs) {
                    if v == 0 {
                        errs.push(ConfigError::new(line, "record stride must be >= 1"));
                    }
                    reversal.stride = v;
                }
                if let Some((v, line)) = h.usize_opt("bridge_frames", errs) {
                    if v < 2 {
                        errs.push(ConfigError::new(line, "the bridge needs at least two frames"));
                    }
                    reversal.bridge_frames = v;
                }
            }
            Some(Spec::Quasipotential {
                params: params?,
                boundary: boundary?,
                mesh: mesh?,
                target: target?,
                interpolation,
                reversal,
            })
        }
        ExperimentKind::OracleValidate => {
            check_enumerable(params.as_ref(), r, errs);
            let h = r.require("run", errs)?;
            let burn_in = h.f64_req("burn_in", errs);
            let run_time = positive_f64(h, "run_time", "run time", errs);
            let transient_time = positive_f64(h, "transient_time", "transient horizon", errs);
            let replicas = h.usize_req("replicas", errs);
            let (burn_in, burn_line) = burn_in?;
            if burn_in < 0.0 {
                errs.push(ConfigError::new(burn_line, "burn-in must be nonnegative"));
                return None;
            }
            let (replicas, rep_line) = replicas?;
            if replicas == 0 {
                errs.push(ConfigError::new(rep_line, "need at least one replica"));
                return None;
            }
            Some(Spec::OracleValidate {
                params: params?,
                boundary: boundary?,
                burn_in,
                run_time: run_time?,
                transient_time: transient_time?,
                replicas,
            })
        }
        ExperimentKind::LemmaSuite => {
            check_enumerable(params.as_ref(), r, errs);
            let mesh = read_mesh(r, params.as_ref(), errs);
            Some(Spec::LemmaSuite {
                params: params?,
                boundary: boundary?,
                mesh: mesh?,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve_text(text: &str) -> Result<Experiment, Vec<ConfigError>> {
        resolve(&parse(text).expect("lexes"))
    }

    const HYDRO: &str = "[experiment]\nkind = hydrodynamics\n\n[model]\na = 1.0\nd = 1\nn = 16\n\n\
        [boundary]\nkind = affine\nleft = 0.2\nright = 0.8\n\n[mesh]\nm1 = 16\n\n\
        [time]\nt_end = 0.1\n\n[initial]\nkind = constant\nvalue = 0.5\n";

    #[test]
    fn parses_sections_keys_and_comments() {
        let p = parse("# top\n[one]\nx = 1\n\n[two]\ny = a b\n").unwrap();
        assert_eq!(p.sections.len(), 2);
        assert_eq!(p.sections[1].entries[0].value, "a b");
        assert_eq!(p.sections[1].entries[0].line, 6);
    }

    #[test]
    fn rejects_duplicates_and_malformed_lines() {
        let errs = parse("[a]\nx = 1\nx = 2\n[a]\nnoequals\n").unwrap_err();
        let lines: Vec<usize> = errs.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![3, 4, 5]);
        assert!(errs[0].message.contains("already set on line 2"));
    }

    #[test]
    fn key_before_any_section_is_anchored() {
        let errs = parse("x = 1\n").unwrap_err();
        assert_eq!(errs[0].line, 1);
        assert!(errs[0].message.contains("before any section"));
    }

    #[test]
    fn resolves_a_hydrodynamics_config() {
        let exp = resolve_text(HYDRO).unwrap();
        assert_eq!(exp.kind, ExperimentKind::Hydrodynamics);
        match exp.spec {
            Spec::Hydrodynamics { t_end, stride, .. } => {
                assert_eq!(t_end, 0.1);
                assert_eq!(stride, 1);
            }
            _ => panic!("wrong spec"),
        }
    }

    #[test]
    fn rejects_interaction_below_the_admissible_range() {
        let text = HYDRO.replace("a = 1.0", "a = -0.6");
        let errs = resolve_text(&text).unwrap_err();
        assert!(errs.iter().any(|e| e.line == 5 && e.message.contains("> -1/2")), "{errs:?}");
    }

    #[test]
    fn rejects_reservoir_density_outside_the_open_interval() {
        let text = HYDRO.replace("right = 0.8", "right = 1.2");
        let errs = resolve_text(&text).unwrap_err();
        assert!(
            errs.iter().any(|e| e.message.contains("strictly inside (0, 1)")),
            "{errs:?}"
        );
    }

    #[test]
    fn rejects_time_step_above_the_stability_bound_quoting_it() {
        let text = HYDRO.replace("t_end = 0.1", "t_end = 0.1\ndt = 0.5");
        let errs = resolve_text(&text).unwrap_err();
        let e = errs.iter().find(|e| e.message.contains("stability bound")).unwrap();
        let bound = cfl_bound(
            &ModelParams::new(1.0, 1, 16).unwrap(),
            &Mesh::new(1, 16, 1).unwrap(),
        );
        assert!(e.message.contains(&format!("{bound}")));
    }

    #[test]
    fn rejects_unknown_keys_and_sections_with_anchors() {
        let text = format!("{HYDRO}typo = 3\n\n[extra]\nx = 1\n");
        let errs = resolve_text(&text).unwrap_err();
        assert!(errs.iter().any(|e| e.message.contains("unknown key `typo`")));
        assert!(errs.iter().any(|e| e.message.contains("unknown section [extra]")));
        assert!(errs.iter().all(|e| e.line > 0));
    }

    #[test]
    fn collects_several_errors_in_one_pass() {
        let text = HYDRO
            .replace("a = 1.0", "a = -0.9")
            .replace("left = 0.2", "left = -0.1");
        let errs = resolve_text(&text).unwrap_err();
        assert!(errs.len() >= 2, "{errs:?}");
    }

    #[test]
    fn cosine_profile_range_is_checked_statically() {
        let text = HYDRO.replace(
            "kind = constant\nvalue = 0.5",
            "kind = cosine\nmean = 0.9\namplitude = 0.3",
        );
        let errs = resolve_text(&text).unwrap_err();
        assert!(errs.iter().any(|e| e.message.contains("leaves [0, 1]")), "{errs:?}");
    }

    #[test]
    fn oracle_config_caps_the_state_space() {
        let text = "[experiment]\nkind = oracle-validate\n\n[model]\na = 0.0\nd = 1\nn = 40\n\n\
            [boundary]\nkind = constant\nvalue = 0.3\n\n\
            [run]\nburn_in = 1\nrun_time = 10\ntransient_time = 0.1\nreplicas = 100\n";
        let errs = resolve_text(text).unwrap_err();
        assert!(errs.iter().any(|e| e.message.contains("too large for exact enumeration")));
    }

    #[test]
    fn stationary_field_spec_realizes_via_the_elliptic_solver() {
        let text = HYDRO.replace("kind = constant\nvalue = 0.5", "kind = stationary");
        let exp = resolve_text(&text).unwrap();
        let Spec::Hydrodynamics { initial, params, boundary, mesh, .. } = exp.spec else {
            panic!("wrong spec");
        };
        let f = initial.realize(&mesh, &boundary, &params).unwrap();
        assert!(f.is_density(0.0));
    }
}
