//! Parametrized systems and their text format.
//!
//! ```text
//! # comment
//! vars: t1 t2
//! params: k1 k2 k3
//! domain: (0,1) (0,inf)
//! parambox: [0,1] [0,1] [0,1]
//! eq: k1 - k3*t1
//! eq: k2 - k3*t1*t2
//! ```
//!
//! Optional headers:
//! * `linear: k1 k2` fixes which parameter is solved for in each equation.
//! * `bounds: - k3` gives per-variable upper bounds on the positive
//!   solutions (`-` for none, a number, a parameter, or `c*param`).
//! * `density: u tn(0.5,0.1) u` sets per-parameter distributions
//!   (`u` uniform, `tn(mean,sd)` truncated normal); default uniform.

use std::fmt;

use super::error::SystemError;
use super::parse::parse_polynomial;
use super::poly::{is_identifier, Polynomial, VarSpace};

/// An interval with endpoints in the extended reals. Open or closed is
/// immaterial for integration; the parser accepts either bracket style.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn positive() -> Self {
        Self::new(0.0, f64::INFINITY)
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    pub fn center(&self) -> f64 {
        self.lo + (self.hi - self.lo) / 2.0
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", fmt_end(self.lo), fmt_end(self.hi))
    }
}

fn fmt_end(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

/// Known upper bound on a variable at every positive solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundHint {
    Const(f64),
    /// `scale * κ_index`, index among parameters.
    Param { index: usize, scale: f64 },
}

impl BoundHint {
    pub fn value(&self, params: &[f64]) -> f64 {
        match *self {
            BoundHint::Const(c) => c,
            BoundHint::Param { index, scale } => scale * params[index],
        }
    }

    fn render(&self, space: &VarSpace) -> String {
        match *self {
            BoundHint::Const(c) => format!("{c}"),
            BoundHint::Param { index, scale } if scale == 1.0 => space.k_names()[index].clone(),
            BoundHint::Param { index, scale } => format!("{scale}*{}", space.k_names()[index]),
        }
    }
}

/// Distribution of one parameter over its box interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ParamDensity {
    Uniform,
    TruncNormal { mean: f64, sd: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParametrizedSystem {
    pub space: VarSpace,
    pub equations: Vec<Polynomial>,
    pub domain: Vec<Interval>,
    pub param_box: Vec<Interval>,
    pub bound_hints: Vec<Option<BoundHint>>,
    pub densities: Vec<ParamDensity>,
    /// Parameter indices solved for, one per equation, if fixed by the user.
    pub linear: Option<Vec<usize>>,
}

impl ParametrizedSystem {
    /// A system on the positive orthant with unit parameter box.
    pub fn new(space: VarSpace, equations: Vec<Polynomial>) -> Result<Self, SystemError> {
        let n = space.n();
        let m = space.m();
        let sys = Self {
            domain: vec![Interval::positive(); n],
            param_box: vec![Interval::new(0.0, 1.0); m],
            bound_hints: vec![None; n],
            densities: vec![ParamDensity::Uniform; m],
            linear: None,
            space,
            equations,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn n(&self) -> usize {
        self.space.n()
    }

    pub fn m(&self) -> usize {
        self.space.m()
    }

    pub fn validate(&self) -> Result<(), SystemError> {
        let n = self.n();
        let m = self.m();
        if m < n {
            return Err(SystemError::TooFewParameters { n, m });
        }
        if self.equations.len() != n {
            return Err(SystemError::EquationCount {
                expected: n,
                got: self.equations.len(),
            });
        }
        if self.equations.iter().any(|p| p.dim() != n + m) {
            return Err(SystemError::Invalid("equation dimension mismatch".into()));
        }
        if self.domain.len() != n || self.bound_hints.len() != n {
            return Err(SystemError::Invalid(format!(
                "domain and bounds need {n} entries"
            )));
        }
        if self.param_box.len() != m || self.densities.len() != m {
            return Err(SystemError::Invalid(format!(
                "parameter box and densities need {m} entries"
            )));
        }
        for (i, iv) in self.domain.iter().enumerate() {
            if iv.lo.is_nan() || iv.hi.is_nan() || iv.lo >= iv.hi {
                return Err(SystemError::BadInterval {
                    name: self.space.t_names()[i].clone(),
                });
            }
        }
        for (j, iv) in self.param_box.iter().enumerate() {
            if !iv.is_bounded() || iv.lo >= iv.hi {
                return Err(SystemError::BadParamBox {
                    name: self.space.k_names()[j].clone(),
                });
            }
        }
        for d in &self.densities {
            if let ParamDensity::TruncNormal { mean, sd } = d {
                if !(sd.is_finite() && *sd > 0.0 && mean.is_finite()) {
                    return Err(SystemError::Invalid(
                        "truncated normal needs finite mean and sd > 0".into(),
                    ));
                }
            }
        }
        if let Some(lin) = &self.linear {
            if lin.len() != n || lin.iter().any(|&j| j >= m) {
                return Err(SystemError::Invalid(format!(
                    "linear parameter list needs {n} valid entries"
                )));
            }
        }
        for h in self.bound_hints.iter().flatten() {
            match *h {
                BoundHint::Const(c) if !(c.is_finite() && c > 0.0) => {
                    return Err(SystemError::Invalid("bound must be finite and positive".into()))
                }
                BoundHint::Param { index, scale } if index >= m || !(scale > 0.0) => {
                    return Err(SystemError::Invalid("bad parameter bound".into()))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Read a system from its text form.
    pub fn parse(text: &str) -> Result<Self, SystemError> {
        let mut vars: Option<(usize, Vec<String>)> = None;
        let mut params: Option<(usize, Vec<String>)> = None;
        let mut domain: Option<(usize, usize, String)> = None;
        let mut parambox: Option<(usize, usize, String)> = None;
        let mut bounds: Option<(usize, usize, String)> = None;
        let mut density: Option<(usize, usize, String)> = None;
        let mut linear: Option<(usize, usize, String)> = None;
        let mut eqs: Vec<(usize, usize, String)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let Some(colon) = content.find(':') else {
                return Err(format_err(line_no, first_col(content), "expected `key: value`"));
            };
            let key = content[..colon].trim();
            let value_col = colon + 2;
            let value = content[colon + 1..].to_string();
            let dup = |present: bool| {
                if present {
                    Err(format_err(line_no, first_col(content), &format!("duplicate `{key}` line")))
                } else {
                    Ok(())
                }
            };
            match key {
                "vars" => {
                    dup(vars.is_some())?;
                    vars = Some((line_no, split_names(&value, line_no, value_col)?));
                }
                "params" => {
                    dup(params.is_some())?;
                    params = Some((line_no, split_names(&value, line_no, value_col)?));
                }
                "domain" => {
                    dup(domain.is_some())?;
                    domain = Some((line_no, value_col, value));
                }
                "parambox" => {
                    dup(parambox.is_some())?;
                    parambox = Some((line_no, value_col, value));
                }
                "bounds" => {
                    dup(bounds.is_some())?;
                    bounds = Some((line_no, value_col, value));
                }
                "density" => {
                    dup(density.is_some())?;
                    density = Some((line_no, value_col, value));
                }
                "linear" => {
                    dup(linear.is_some())?;
                    linear = Some((line_no, value_col, value));
                }
                "eq" => eqs.push((line_no, value_col, value)),
                _ => {
                    return Err(format_err(
                        line_no,
                        first_col(content),
                        &format!("unknown key `{key}`"),
                    ))
                }
            }
        }

        let (vars_line, t_names) =
            vars.ok_or_else(|| format_err(1, 1, "missing `vars:` line"))?;
        let (_, k_names) = params.unwrap_or((vars_line, Vec::new()));
        let space = VarSpace::new(t_names, k_names).map_err(|e| SystemError::Expression {
            line: vars_line,
            source: e,
        })?;
        let n = space.n();
        let m = space.m();

        let mut equations = Vec::with_capacity(eqs.len());
        for (line, col, text) in &eqs {
            let p = parse_polynomial(text, &space).map_err(|e| SystemError::Expression {
                line: *line,
                source: shift_column(e, *col - 1),
            })?;
            equations.push(p);
        }
        if equations.len() != n {
            let line = eqs.last().map(|e| e.0).unwrap_or(vars_line);
            return Err(format_err(
                line,
                1,
                &format!("expected {n} `eq:` lines, found {}", equations.len()),
            ));
        }

        let domain = match domain {
            Some((line, col, v)) => parse_intervals(&v, line, col, n, true)?,
            None => vec![Interval::positive(); n],
        };
        let param_box = match parambox {
            Some((line, col, v)) => parse_intervals(&v, line, col, m, false)?,
            None => vec![Interval::new(0.0, 1.0); m],
        };
        let bound_hints = match bounds {
            Some((line, col, v)) => parse_bounds(&v, line, col, &space)?,
            None => vec![None; n],
        };
        let densities = match density {
            Some((line, col, v)) => parse_densities(&v, line, col, m)?,
            None => vec![ParamDensity::Uniform; m],
        };
        let linear = match linear {
            Some((line, col, v)) => {
                let names = tokens(&v, col);
                if names.len() != n {
                    return Err(format_err(line, col, &format!("expected {n} linear parameters")));
                }
                let mut out = Vec::new();
                for (c, name) in names {
                    let slot = space
                        .index_of(name)
                        .filter(|&s| !space.is_variable_slot(s))
                        .ok_or_else(|| format_err(line, c, &format!("`{name}` is not a parameter")))?;
                    out.push(slot - n);
                }
                Some(out)
            }
            None => None,
        };

        let sys = ParametrizedSystem {
            space,
            equations,
            domain,
            param_box,
            bound_hints,
            densities,
            linear,
        };
        sys.validate()?;
        Ok(sys)
    }

    /// Text form accepted by [`ParametrizedSystem::parse`].
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ParametrizedSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "vars: {}", self.space.t_names().join(" "))?;
        if self.m() > 0 {
            writeln!(f, "params: {}", self.space.k_names().join(" "))?;
        }
        let dom: Vec<String> = self.domain.iter().map(|i| i.to_string()).collect();
        writeln!(f, "domain: {}", dom.join(" "))?;
        let pb: Vec<String> = self
            .param_box
            .iter()
            .map(|i| format!("[{},{}]", i.lo, i.hi))
            .collect();
        writeln!(f, "parambox: {}", pb.join(" "))?;
        if self.bound_hints.iter().any(Option::is_some) {
            let b: Vec<String> = self
                .bound_hints
                .iter()
                .map(|h| h.map_or("-".to_string(), |h| h.render(&self.space)))
                .collect();
            writeln!(f, "bounds: {}", b.join(" "))?;
        }
        if self.densities.iter().any(|d| *d != ParamDensity::Uniform) {
            let d: Vec<String> = self
                .densities
                .iter()
                .map(|d| match d {
                    ParamDensity::Uniform => "u".to_string(),
                    ParamDensity::TruncNormal { mean, sd } => format!("tn({mean},{sd})"),
                })
                .collect();
            writeln!(f, "density: {}", d.join(" "))?;
        }
        if let Some(lin) = &self.linear {
            let names: Vec<&str> = lin.iter().map(|&j| self.space.k_names()[j].as_str()).collect();
            writeln!(f, "linear: {}", names.join(" "))?;
        }
        for eq in &self.equations {
            writeln!(f, "eq: {}", eq.display(&self.space))?;
        }
        Ok(())
    }
}

fn format_err(line: usize, column: usize, message: &str) -> SystemError {
    SystemError::Format {
        line,
        column,
        message: message.to_string(),
    }
}

fn first_col(s: &str) -> usize {
    s.len() - s.trim_start().len() + 1
}

fn shift_column(e: super::error::PolyError, offset: usize) -> super::error::PolyError {
    use super::error::PolyError as P;
    match e {
        P::UnknownIdentifier { name, column } => P::UnknownIdentifier {
            name,
            column: column + offset,
        },
        P::MalformedExponent { column } => P::MalformedExponent {
            column: column + offset,
        },
        P::NonConstantDivision { column } => P::NonConstantDivision {
            column: column + offset,
        },
        P::Syntax { message, column } => P::Syntax {
            message,
            column: column + offset,
        },
        other => other,
    }
}

/// Whitespace-separated tokens with their 1-based columns in the line.
fn tokens(value: &str, value_col: usize) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in value.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((value_col + s, &value[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((value_col + s, &value[s..]));
    }
    out
}

fn split_names(value: &str, line: usize, col: usize) -> Result<Vec<String>, SystemError> {
    tokens(value, col)
        .into_iter()
        .map(|(c, name)| {
            if is_identifier(name) {
                Ok(name.to_string())
            } else {
                Err(format_err(line, c, &format!("`{name}` is not a valid identifier")))
            }
        })
        .collect()
}

fn parse_endpoint(s: &str, allow_inf: bool) -> Option<f64> {
    let s = s.trim();
    let v = match s {
        "inf" | "+inf" => f64::INFINITY,
        "-inf" => f64::NEG_INFINITY,
        _ => s.parse::<f64>().ok().filter(|v| v.is_finite())?,
    };
    if !allow_inf && !v.is_finite() {
        return None;
    }
    Some(v)
}

fn parse_intervals(
    value: &str,
    line: usize,
    col: usize,
    expected: usize,
    allow_inf: bool,
) -> Result<Vec<Interval>, SystemError> {
    let toks = tokens(value, col);
    if toks.len() != expected {
        return Err(format_err(
            line,
            col,
            &format!("expected {expected} intervals, found {}", toks.len()),
        ));
    }
    let mut out = Vec::new();
    for (c, tok) in toks {
        let bad = || {
            format_err(
                line,
                c,
                &format!(
                    "malformed interval `{tok}`{}",
                    if allow_inf { "" } else { " (bounded endpoints required)" }
                ),
            )
        };
        let opens = tok.starts_with('(') || tok.starts_with('[');
        let closes = tok.ends_with(')') || tok.ends_with(']');
        if !opens || !closes || tok.len() < 2 {
            return Err(bad());
        }
        let inner = &tok[1..tok.len() - 1];
        let mut parts = inner.split(',');
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(bad());
        };
        let lo = parse_endpoint(a, allow_inf).ok_or_else(bad)?;
        let hi = parse_endpoint(b, allow_inf).ok_or_else(bad)?;
        if lo >= hi {
            return Err(format_err(line, c, &format!("interval `{tok}` is empty")));
        }
        out.push(Interval::new(lo, hi));
    }
    Ok(out)
}

fn parse_bounds(
    value: &str,
    line: usize,
    col: usize,
    space: &VarSpace,
) -> Result<Vec<Option<BoundHint>>, SystemError> {
    let toks = tokens(value, col);
    if toks.len() != space.n() {
        return Err(format_err(
            line,
            col,
            &format!("expected {} bounds, found {}", space.n(), toks.len()),
        ));
    }
    let mut out = Vec::new();
    for (c, tok) in toks {
        let bad = || format_err(line, c, &format!("malformed bound `{tok}`"));
        if tok == "-" {
            out.push(None);
            continue;
        }
        if let Ok(v) = tok.parse::<f64>() {
            if !(v.is_finite() && v > 0.0) {
                return Err(bad());
            }
            out.push(Some(BoundHint::Const(v)));
            continue;
        }
        let (scale, name) = match tok.split_once('*') {
            Some((s, name)) => (s.parse::<f64>().map_err(|_| bad())?, name),
            None => (1.0, tok),
        };
        let slot = space
            .index_of(name)
            .filter(|&s| !space.is_variable_slot(s))
            .ok_or_else(bad)?;
        if !(scale.is_finite() && scale > 0.0) {
            return Err(bad());
        }
        out.push(Some(BoundHint::Param {
            index: slot - space.n(),
            scale,
        }));
    }
    Ok(out)
}

fn parse_densities(
    value: &str,
    line: usize,
    col: usize,
    m: usize,
) -> Result<Vec<ParamDensity>, SystemError> {
    let toks = tokens(value, col);
    if toks.len() != m {
        return Err(format_err(
            line,
            col,
            &format!("expected {m} densities, found {}", toks.len()),
        ));
    }
    let mut out = Vec::new();
    for (c, tok) in toks {
        let bad = || format_err(line, c, &format!("malformed density `{tok}`"));
        if tok == "u" {
            out.push(ParamDensity::Uniform);
            continue;
        }
        let inner = tok
            .strip_prefix("tn(")
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(bad)?;
        let (a, b) = inner.split_once(',').ok_or_else(bad)?;
        let mean: f64 = a.trim().parse().map_err(|_| bad())?;
        let sd: f64 = b.trim().parse().map_err(|_| bad())?;
        if !(mean.is_finite() && sd.is_finite() && sd > 0.0) {
            return Err(bad());
        }
        out.push(ParamDensity::TruncNormal { mean, sd });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EX14: &str = "\
# two equations
vars: t1 t2
params: k1 k2 k3
domain: (0,1) (0,1)
parambox: [0,1] [0,1] [0,1]
eq: k1 - k3*t1
eq: k2 - k3*t1*t2
";

    #[test]
    fn parses_and_round_trips() {
        let sys = ParametrizedSystem::parse(EX14).unwrap();
        assert_eq!(sys.n(), 2);
        assert_eq!(sys.m(), 3);
        assert_eq!(sys.domain[1], Interval::new(0.0, 1.0));
        let again = ParametrizedSystem::parse(&sys.to_text()).unwrap();
        assert_eq!(sys, again);
    }

    #[test]
    fn optional_headers_round_trip() {
        let text = "\
vars: t
params: T1 T2
domain: (0,inf)
parambox: [1,3] [2,4]
bounds: 2*T2
density: u tn(3,0.1)
linear: T1
eq: T1*t - T2
";
        let sys = ParametrizedSystem::parse(text).unwrap();
        assert_eq!(
            sys.bound_hints[0],
            Some(BoundHint::Param {
                index: 1,
                scale: 2.0
            })
        );
        assert_eq!(sys.linear, Some(vec![0]));
        assert_eq!(ParametrizedSystem::parse(&sys.to_text()).unwrap(), sys);
    }

    #[test]
    fn diagnostics_have_line_and_column() {
        let text = "vars: t\nparams: k1 k2\neq: k2*t - k9\n";
        let err = ParametrizedSystem::parse(text).unwrap_err();
        assert_eq!(err.line(), Some(3));
        assert_eq!(err.column(), Some(12));

        let text = "vars: t\nparams: k\nparambox: [0,inf)\neq: k*t - 1\n";
        let err = ParametrizedSystem::parse(text).unwrap_err();
        assert_eq!(err.line(), Some(3));
        assert_eq!(err.column(), Some(11));
    }

    #[test]
    fn rejects_structural_problems() {
        assert!(ParametrizedSystem::parse("vars: t\nparams: k\n").is_err());
        assert!(matches!(
            ParametrizedSystem::parse("vars: t1 t2\nparams: k\neq: k\neq: k\n"),
            Err(SystemError::TooFewParameters { n: 2, m: 1 })
        ));
        assert!(ParametrizedSystem::parse("vars: t t\nparams: k k2\neq: k\n").is_err());
        assert!(ParametrizedSystem::parse("vars: t\nparams: k\nfoo: 1\neq: k\n").is_err());
    }
}
