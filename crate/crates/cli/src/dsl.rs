//! The experiment description language: a line-oriented format in which
//! every line declares one register, state, step, statement, or check.
//!
//! Grammar sketch (`#` starts a comment, blank lines are ignored):
//!
//! ```text
//! register <name> [labels=<l0>,<l1>]
//! state [unnormalized] <amp> |<labels>> (+ <amp> |<labels>>)*
//! step <k>: <agent> absorbs <target> in <basis>
//! step <k>: <agent> measures <targets> in <basis> [preserving] [collapse=<label>]
//! statement <id>: if <event> (and <event>)* then <event> [mode=forward|retro] [expect ...]
//! check <kind> ...
//! arithmetic float
//! ```
//!
//! An event is `<register>@<step> == <label> [basis=z|x]`, a basis is `z`,
//! `x`, `theta(<angle>)` or `states(<ket> ; <ket>)`, and an amplitude is an
//! exact literal like `1/sqrt3` with an optional `*phase(<angle>)` factor.
//! Expected values are exact literals or `~`-prefixed floats.
//!
//! The parser resolves amplitude literals but leaves all name resolution to
//! [`crate::lower`]; it reports the first offending line and column and
//! never panics on malformed input.

use std::fmt;

use frlogic_core::QuadAmp;

/// Position and expectation of the first token the parser rejected.
#[derive(Clone, Debug, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub expected: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}, column {}: expected {}",
            self.line, self.col, self.expected
        )
    }
}

impl std::error::Error for ParseError {}

/// Two-level event basis restriction on an event.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisKey {
    Z,
    X,
}

/// An amplitude literal, exact magnitude times `e^(i*phase)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AmpAst {
    pub magnitude: QuadAmp,
    pub phase: f64,
}

/// An expected probability: exact or to float tolerance.
#[derive(Clone, Debug, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Value {
    Exact(QuadAmp),
    Approx(f64),
}

/// One `<amp> |<labels>>` term.
#[derive(Clone, Debug, PartialEq)]
pub struct TermAst {
    pub amp: AmpAst,
    pub labels: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegisterDecl {
    pub line: usize,
    pub name: String,
    pub labels: Option<(String, String)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateDecl {
    pub line: usize,
    pub normalized: bool,
    pub terms: Vec<TermAst>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum BasisAst {
    Z,
    X,
    Theta(f64),
    /// Explicit joint states, each a superposition of product kets.
    States(Vec<Vec<TermAst>>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum StyleAst {
    Absorb,
    /// `measures`; records the outcome unless `collapse` projects instead.
    Measure { collapse: Option<String> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepDecl {
    pub line: usize,
    pub index: usize,
    pub agent: String,
    pub targets: Vec<String>,
    pub basis: BasisAst,
    pub style: StyleAst,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventAst {
    pub line: usize,
    pub register: String,
    pub at_step: usize,
    pub label: String,
    pub basis: Option<BasisKey>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeKey {
    Forward,
    Retro,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassKey {
    Holds,
    Fails,
    Vacuous,
    Probabilistic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpectAst {
    pub class: ClassKey,
    pub p: Option<Value>,
    pub q: Option<Value>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StatementDecl {
    pub line: usize,
    pub id: String,
    pub premises: Vec<EventAst>,
    pub conclusion: EventAst,
    pub mode: Option<ModeKey>,
    pub expect: Option<ExpectAst>,
}

#[derive(Clone, Debug, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum CheckDecl {
    Transitivity {
        line: usize,
        first: String,
        second: String,
        p: Option<Value>,
        valid: Option<bool>,
        divergence: Option<bool>,
        shift: Option<Value>,
    },
    Compatible {
        line: usize,
        e1: EventAst,
        e2: EventAst,
        compatible: Option<bool>,
        defect: Option<Value>,
    },
    Or {
        line: usize,
        branches: Vec<String>,
        merged: String,
        classical: Option<Value>,
        actual: Option<Value>,
        divergence: Option<bool>,
    },
    Mine {
        line: usize,
        contains: Vec<(EventAst, EventAst)>,
    },
    Final {
        line: usize,
        terms: Vec<TermAst>,
    },
    Joint {
        line: usize,
        registers: Vec<String>,
        rows: Vec<(String, Value)>,
    },
    Chain {
        line: usize,
        events: Vec<EventAst>,
        p: Option<Value>,
    },
    Defect {
        line: usize,
        register: String,
        at_step: usize,
        basis: Option<BasisKey>,
        later: EventAst,
        p: Option<Value>,
    },
    Conjunction {
        line: usize,
        premises: Vec<EventAst>,
        conclusion: EventAst,
        p: Option<Value>,
        flagged: Option<bool>,
    },
    Swap {
        line: usize,
        a: usize,
        b: usize,
    },
    Violation {
        line: usize,
        failing: QuadAmp,
        passing: QuadAmp,
        expect: Value,
    },
}

impl CheckDecl {
    pub fn line(&self) -> usize {
        match self {
            CheckDecl::Transitivity { line, .. }
            | CheckDecl::Compatible { line, .. }
            | CheckDecl::Or { line, .. }
            | CheckDecl::Mine { line, .. }
            | CheckDecl::Final { line, .. }
            | CheckDecl::Joint { line, .. }
            | CheckDecl::Chain { line, .. }
            | CheckDecl::Defect { line, .. }
            | CheckDecl::Conjunction { line, .. }
            | CheckDecl::Swap { line, .. }
            | CheckDecl::Violation { line, .. } => *line,
        }
    }
}

/// A parsed experiment file, before name resolution.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentFile {
    pub registers: Vec<RegisterDecl>,
    pub state: Option<StateDecl>,
    pub steps: Vec<StepDecl>,
    pub statements: Vec<StatementDecl>,
    pub checks: Vec<CheckDecl>,
    pub float_only: bool,
}

#[derive(Clone, Debug)]
struct Tok {
    text: String,
    col: usize,
}

/// Splits one line into tokens: kets (`|` through `>`) and
/// whitespace-delimited words.  `#` starts a comment.
fn split_tokens(line: &str, lineno: usize) -> Result<Vec<Tok>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            break;
        }
        let start = i;
        if c == '|' {
            i += 1;
            while i < chars.len() && chars[i] != '>' {
                i += 1;
            }
            if i == chars.len() {
                return Err(ParseError {
                    line: lineno,
                    col: start + 1,
                    expected: "a closing `>` for the ket".to_string(),
                });
            }
            i += 1;
        } else {
            while i < chars.len() && !chars[i].is_whitespace() && chars[i] != '|' && chars[i] != '#'
            {
                i += 1;
            }
        }
        toks.push(Tok {
            text: chars[start..i].iter().collect(),
            col: start + 1,
        });
    }
    Ok(toks)
}

struct Cur {
    toks: Vec<Tok>,
    i: usize,
    line: usize,
    end_col: usize,
}

impl Cur {
    fn new(toks: Vec<Tok>, line: usize) -> Self {
        let end_col = toks
            .last()
            .map(|t| t.col + t.text.chars().count())
            .unwrap_or(1);
        Cur {
            toks,
            i: 0,
            line,
            end_col,
        }
    }

    fn peek(&self) -> Option<&str> {
        self.toks.get(self.i).map(|t| t.text.as_str())
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.i).cloned();
        if t.is_some() {
            self.i += 1;
        }
        t
    }

    fn push_front(&mut self, tok: Tok) {
        self.toks.insert(self.i, tok);
    }

    fn err_here(&self, expected: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            col: self.toks.get(self.i).map(|t| t.col).unwrap_or(self.end_col),
            expected: expected.into(),
        }
    }

    fn take(&mut self, what: &str) -> Result<Tok, ParseError> {
        self.bump().ok_or_else(|| self.err_here(what))
    }

    fn literal(&mut self, text: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if t == text => {
                self.i += 1;
                Ok(())
            }
            _ => Err(self.err_here(format!("`{text}`"))),
        }
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.peek() == Some(text) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.i == self.toks.len() {
            Ok(())
        } else {
            Err(self.err_here("end of line"))
        }
    }
}

fn parse_amp(tok: &Tok, line: usize) -> Result<AmpAst, ParseError> {
    let err = |expected: &str| ParseError {
        line,
        col: tok.col,
        expected: expected.to_string(),
    };
    let (mag, phase) = match tok.text.split_once("*phase(") {
        Some((m, rest)) => {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| err("a closing `)` after the phase angle"))?;
            let phi: f64 = inner
                .parse()
                .map_err(|_| err("a number inside phase(...)"))?;
            (m, phi)
        }
        None => (tok.text.as_str(), 0.0),
    };
    let magnitude: QuadAmp = mag
        .parse()
        .map_err(|_| err("an amplitude literal like `1/sqrt3`"))?;
    Ok(AmpAst { magnitude, phase })
}

fn parse_value(tok: &Tok, line: usize) -> Result<Value, ParseError> {
    if let Some(rest) = tok.text.strip_prefix('~') {
        let x: f64 = rest.parse().map_err(|_| ParseError {
            line,
            col: tok.col,
            expected: "a float after `~`".to_string(),
        })?;
        Ok(Value::Approx(x))
    } else {
        let q: QuadAmp = tok.text.parse().map_err(|_| ParseError {
            line,
            col: tok.col,
            expected: "an exact value like `1/12` or a `~`-prefixed float".to_string(),
        })?;
        Ok(Value::Exact(q))
    }
}

fn parse_bool(tok: &Tok, line: usize) -> Result<bool, ParseError> {
    match tok.text.as_str() {
        "yes" | "true" => Ok(true),
        "no" | "false" => Ok(false),
        _ => Err(ParseError {
            line,
            col: tok.col,
            expected: "`yes` or `no`".to_string(),
        }),
    }
}

fn parse_usize(tok: &Tok, line: usize, what: &str) -> Result<usize, ParseError> {
    tok.text.parse().map_err(|_| ParseError {
        line,
        col: tok.col,
        expected: what.to_string(),
    })
}

fn ket_labels(tok: &Tok, line: usize) -> Result<Vec<String>, ParseError> {
    let inner = tok
        .text
        .strip_prefix('|')
        .and_then(|t| t.strip_suffix('>'))
        .ok_or_else(|| ParseError {
            line,
            col: tok.col,
            expected: "a ket like `|up down>`".to_string(),
        })?;
    let labels: Vec<String> = inner.split_whitespace().map(str::to_string).collect();
    if labels.is_empty() {
        return Err(ParseError {
            line,
            col: tok.col,
            expected: "at least one outcome label inside the ket".to_string(),
        });
    }
    Ok(labels)
}

/// `<amp> |<labels>> (+ <amp> |<labels>>)*`
fn parse_terms(cur: &mut Cur) -> Result<Vec<TermAst>, ParseError> {
    let mut terms = Vec::new();
    loop {
        let amp_tok = cur.take("an amplitude")?;
        if amp_tok.text.starts_with('|') {
            return Err(ParseError {
                line: cur.line,
                col: amp_tok.col,
                expected: "an amplitude before the ket".to_string(),
            });
        }
        let amp = parse_amp(&amp_tok, cur.line)?;
        let ket_tok = cur.take("a ket like `|up down>`")?;
        let labels = ket_labels(&ket_tok, cur.line)?;
        terms.push(TermAst { amp, labels });
        if !cur.eat("+") {
            break;
        }
    }
    Ok(terms)
}

fn parse_event(cur: &mut Cur) -> Result<EventAst, ParseError> {
    let tok = cur.take("an event like `mem.F@2 == up`")?;
    let (register, step_text) = tok.text.split_once('@').ok_or_else(|| ParseError {
        line: cur.line,
        col: tok.col,
        expected: "`register@step`".to_string(),
    })?;
    if register.is_empty() {
        return Err(ParseError {
            line: cur.line,
            col: tok.col,
            expected: "a register name before `@`".to_string(),
        });
    }
    let at_step: usize = step_text.parse().map_err(|_| ParseError {
        line: cur.line,
        col: tok.col,
        expected: "a step number after `@`".to_string(),
    })?;
    cur.literal("==")?;
    let label = cur.take("an outcome label")?.text;
    let basis = match cur.peek() {
        Some("basis=z") => {
            cur.i += 1;
            Some(BasisKey::Z)
        }
        Some("basis=x") => {
            cur.i += 1;
            Some(BasisKey::X)
        }
        _ => None,
    };
    Ok(EventAst {
        line: cur.line,
        register: register.to_string(),
        at_step,
        label,
        basis,
    })
}

/// Events chained with `and`.
fn parse_event_list(cur: &mut Cur) -> Result<Vec<EventAst>, ParseError> {
    let mut events = vec![parse_event(cur)?];
    while cur.eat("and") {
        events.push(parse_event(cur)?);
    }
    Ok(events)
}

fn parse_basis(cur: &mut Cur) -> Result<BasisAst, ParseError> {
    let tok = cur.take("a basis (`z`, `x`, `theta(...)`, or `states(...)`)")?;
    match tok.text.as_str() {
        "z" => Ok(BasisAst::Z),
        "x" => Ok(BasisAst::X),
        t if t.starts_with("theta(") => {
            let inner = t["theta(".len()..].strip_suffix(')').ok_or_else(|| ParseError {
                line: cur.line,
                col: tok.col,
                expected: "a closing `)` after the angle".to_string(),
            })?;
            let angle: f64 = inner.parse().map_err(|_| ParseError {
                line: cur.line,
                col: tok.col,
                expected: "a number inside theta(...)".to_string(),
            })?;
            Ok(BasisAst::Theta(angle))
        }
        t if t.starts_with("states(") => {
            // The leading amplitude may glue to `states(`; split it off.
            let rest = &t["states(".len()..];
            if !rest.is_empty() {
                cur.push_front(Tok {
                    text: rest.to_string(),
                    col: tok.col + "states(".len(),
                });
            }
            let mut states = Vec::new();
            loop {
                let mut terms = Vec::new();
                loop {
                    let amp = match cur.peek() {
                        Some(t) if t.starts_with('|') => AmpAst {
                            magnitude: "1".parse().unwrap(),
                            phase: 0.0,
                        },
                        _ => {
                            let amp_tok = cur.take("an amplitude or a ket")?;
                            parse_amp(&amp_tok, cur.line)?
                        }
                    };
                    let ket_tok = cur.take("a ket like `|up down>`")?;
                    let labels = ket_labels(&ket_tok, cur.line)?;
                    terms.push(TermAst { amp, labels });
                    if !cur.eat("+") {
                        break;
                    }
                }
                states.push(terms);
                if cur.eat(";") {
                    continue;
                }
                cur.literal(")")?;
                break;
            }
            Ok(BasisAst::States(states))
        }
        _ => Err(ParseError {
            line: cur.line,
            col: tok.col,
            expected: "a basis (`z`, `x`, `theta(...)`, or `states(...)`)".to_string(),
        }),
    }
}

/// Splits an indexed head token like `3:` or `2b:`.
fn parse_head_id(cur: &mut Cur, what: &str) -> Result<String, ParseError> {
    let tok = cur.take(what)?;
    match tok.text.strip_suffix(':') {
        Some(id) if !id.is_empty() => Ok(id.to_string()),
        _ => Err(ParseError {
            line: cur.line,
            col: tok.col,
            expected: what.to_string(),
        }),
    }
}

/// Trailing `key=value` pairs, in any order, each key at most once.
fn parse_kv(cur: &mut Cur, keys: &[&str]) -> Result<Vec<(String, Tok)>, ParseError> {
    let mut out: Vec<(String, Tok)> = Vec::new();
    while let Some(tok) = cur.bump() {
        let (key, value) = match tok.text.split_once('=') {
            Some((k, v)) if keys.contains(&k) && !v.is_empty() => (k.to_string(), v.to_string()),
            _ => {
                return Err(ParseError {
                    line: cur.line,
                    col: tok.col,
                    expected: format!("one of {}", list_keys(keys)),
                })
            }
        };
        if out.iter().any(|(k, _)| *k == key) {
            return Err(ParseError {
                line: cur.line,
                col: tok.col,
                expected: format!("`{key}=` only once"),
            });
        }
        let value_col = tok.col + key.chars().count() + 1;
        out.push((
            key,
            Tok {
                text: value,
                col: value_col,
            },
        ));
    }
    Ok(out)
}

fn list_keys(keys: &[&str]) -> String {
    keys.iter()
        .map(|k| format!("`{k}=`"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn parse_step(cur: &mut Cur) -> Result<StepDecl, ParseError> {
    let line = cur.line;
    let index_text = parse_head_id(cur, "a step number like `1:`")?;
    let index: usize = index_text.parse().map_err(|_| ParseError {
        line,
        col: cur.toks[cur.i - 1].col,
        expected: "a step number like `1:`".to_string(),
    })?;
    let agent = cur.take("an agent name")?.text;
    let verb = cur.take("`absorbs` or `measures`")?;
    let absorb = match verb.text.as_str() {
        "absorbs" => true,
        "measures" => false,
        _ => {
            return Err(ParseError {
                line,
                col: verb.col,
                expected: "`absorbs` or `measures`".to_string(),
            })
        }
    };
    let targets: Vec<String> = cur
        .take("a target register")?
        .text
        .split(',')
        .map(str::to_string)
        .collect();
    cur.literal("in")?;
    let basis = parse_basis(cur)?;
    let style = if absorb {
        StyleAst::Absorb
    } else {
        let preserving = cur.eat("preserving");
        let collapse = match cur.peek() {
            Some(t) if t.starts_with("collapse=") => {
                let label = t["collapse=".len()..].to_string();
                cur.i += 1;
                if label.is_empty() {
                    return Err(cur.err_here("an outcome label after `collapse=`"));
                }
                Some(label)
            }
            _ => None,
        };
        if preserving && collapse.is_some() {
            return Err(cur.err_here("`preserving` or `collapse=`, not both"));
        }
        StyleAst::Measure { collapse }
    };
    cur.finish()?;
    Ok(StepDecl {
        line,
        index,
        agent,
        targets,
        basis,
        style,
    })
}

fn parse_statement(cur: &mut Cur) -> Result<StatementDecl, ParseError> {
    let line = cur.line;
    let id = parse_head_id(cur, "a statement id like `2:`")?;
    cur.literal("if")?;
    let premises = parse_event_list(cur)?;
    cur.literal("then")?;
    let conclusion = parse_event(cur)?;
    let mode = match cur.peek() {
        Some("mode=forward") => {
            cur.i += 1;
            Some(ModeKey::Forward)
        }
        Some("mode=retro") => {
            cur.i += 1;
            Some(ModeKey::Retro)
        }
        _ => None,
    };
    let expect = if cur.eat("expect") {
        let class_tok = cur.take("a verdict (`holds`, `fails`, `vacuous`, `probabilistic`)")?;
        let class = match class_tok.text.as_str() {
            "holds" => ClassKey::Holds,
            "fails" => ClassKey::Fails,
            "vacuous" => ClassKey::Vacuous,
            "probabilistic" => ClassKey::Probabilistic,
            _ => {
                return Err(ParseError {
                    line,
                    col: class_tok.col,
                    expected: "a verdict (`holds`, `fails`, `vacuous`, `probabilistic`)"
                        .to_string(),
                })
            }
        };
        let mut p = None;
        let mut q = None;
        for (key, value) in parse_kv(cur, &["p", "q"])? {
            let v = parse_value(&value, line)?;
            match key.as_str() {
                "p" => p = Some(v),
                _ => q = Some(v),
            }
        }
        Some(ExpectAst { class, p, q })
    } else {
        cur.finish()?;
        None
    };
    Ok(StatementDecl {
        line,
        id,
        premises,
        conclusion,
        mode,
        expect,
    })
}

fn parse_check(cur: &mut Cur) -> Result<CheckDecl, ParseError> {
    let line = cur.line;
    let kind = cur.take(
        "a check kind (transitivity, compatible, or, mine, final, joint, chain, defect, \
         conjunction, swap, violation)",
    )?;
    match kind.text.as_str() {
        "transitivity" => {
            let first = cur.take("a statement id")?.text;
            let second = cur.take("a statement id")?.text;
            let mut p = None;
            let mut valid = None;
            let mut divergence = None;
            let mut shift = None;
            if cur.eat("expect") {
                for (key, value) in parse_kv(cur, &["p", "valid", "divergence", "shift"])? {
                    match key.as_str() {
                        "p" => p = Some(parse_value(&value, line)?),
                        "valid" => valid = Some(parse_bool(&value, line)?),
                        "divergence" => divergence = Some(parse_bool(&value, line)?),
                        _ => shift = Some(parse_value(&value, line)?),
                    }
                }
            } else {
                cur.finish()?;
            }
            Ok(CheckDecl::Transitivity {
                line,
                first,
                second,
                p,
                valid,
                divergence,
                shift,
            })
        }
        "compatible" => {
            let e1 = parse_event(cur)?;
            let e2 = parse_event(cur)?;
            let mut compatible = None;
            let mut defect = None;
            if cur.eat("expect") {
                for (key, value) in parse_kv(cur, &["compatible", "defect"])? {
                    match key.as_str() {
                        "compatible" => compatible = Some(parse_bool(&value, line)?),
                        _ => defect = Some(parse_value(&value, line)?),
                    }
                }
            } else {
                cur.finish()?;
            }
            Ok(CheckDecl::Compatible {
                line,
                e1,
                e2,
                compatible,
                defect,
            })
        }
        "or" => {
            let branches: Vec<String> = cur
                .take("branch statement ids")?
                .text
                .split(',')
                .map(str::to_string)
                .collect();
            cur.literal("merged")?;
            let merged = cur.take("the merged statement id")?.text;
            let mut classical = None;
            let mut actual = None;
            let mut divergence = None;
            if cur.eat("expect") {
                for (key, value) in parse_kv(cur, &["classical", "actual", "divergence"])? {
                    match key.as_str() {
                        "classical" => classical = Some(parse_value(&value, line)?),
                        "actual" => actual = Some(parse_value(&value, line)?),
                        _ => divergence = Some(parse_bool(&value, line)?),
                    }
                }
            } else {
                cur.finish()?;
            }
            Ok(CheckDecl::Or {
                line,
                branches,
                merged,
                classical,
                actual,
                divergence,
            })
        }
        "mine" => {
            let mut contains = Vec::new();
            while cur.eat("contains") {
                let premise = parse_event(cur)?;
                cur.literal("=>")?;
                let conclusion = parse_event(cur)?;
                contains.push((premise, conclusion));
            }
            cur.finish()?;
            Ok(CheckDecl::Mine { line, contains })
        }
        "final" => {
            let terms = parse_terms(cur)?;
            cur.finish()?;
            Ok(CheckDecl::Final { line, terms })
        }
        "joint" => {
            let registers: Vec<String> = cur
                .take("register name(s)")?
                .text
                .split(',')
                .map(str::to_string)
                .collect();
            let mut rows = Vec::new();
            if cur.eat("expect") {
                while let Some(tok) = cur.bump() {
                    let (label, value) = match tok.text.split_once('=') {
                        Some((l, v)) if !l.is_empty() && !v.is_empty() => (l, v),
                        _ => {
                            return Err(ParseError {
                                line,
                                col: tok.col,
                                expected: "`label=probability`".to_string(),
                            })
                        }
                    };
                    let value_tok = Tok {
                        text: value.to_string(),
                        col: tok.col + label.chars().count() + 1,
                    };
                    rows.push((label.to_string(), parse_value(&value_tok, line)?));
                }
            } else {
                cur.finish()?;
            }
            Ok(CheckDecl::Joint {
                line,
                registers,
                rows,
            })
        }
        "chain" => {
            let mut events = vec![parse_event(cur)?];
            while cur.eat("then") {
                events.push(parse_event(cur)?);
            }
            let mut p = None;
            if cur.eat("expect") {
                for (_, value) in parse_kv(cur, &["p"])? {
                    p = Some(parse_value(&value, line)?);
                }
            } else {
                cur.finish()?;
            }
            Ok(CheckDecl::Chain { line, events, p })
        }
        "defect" => {
            let tok = cur.take("an observable like `mem.F@2`")?;
            let (register, step_text) = tok.text.split_once('@').ok_or_else(|| ParseError {
                line,
                col: tok.col,
                expected: "`register@step`".to_string(),
            })?;
            let at_step: usize = step_text.parse().map_err(|_| ParseError {
                line,
                col: tok.col,
                expected: "a step number after `@`".to_string(),
            })?;
            let basis = match cur.peek() {
                Some("basis=z") => {
                    cur.i += 1;
                    Some(BasisKey::Z)
                }
                Some("basis=x") => {
                    cur.i += 1;
                    Some(BasisKey::X)
                }
                _ => None,
            };
            cur.literal("against")?;
            let later = parse_event(cur)?;
            let mut p = None;
            if cur.eat("expect") {
                for (_, value) in parse_kv(cur, &["p"])? {
                    p = Some(parse_value(&value, line)?);
                }
            } else {
                cur.finish()?;
            }
            Ok(CheckDecl::Defect {
                line,
                register: register.to_string(),
                at_step,
                basis,
                later,
                p,
            })
        }
        "conjunction" => {
            cur.literal("if")?;
            let premises = parse_event_list(cur)?;
            cur.literal("then")?;
            let conclusion = parse_event(cur)?;
            let mut p = None;
            let mut flagged = None;
            if cur.eat("expect") {
                for (key, value) in parse_kv(cur, &["p", "flagged"])? {
                    match key.as_str() {
                        "p" => p = Some(parse_value(&value, line)?),
                        _ => flagged = Some(parse_bool(&value, line)?),
                    }
                }
            } else {
                cur.finish()?;
            }
            Ok(CheckDecl::Conjunction {
                line,
                premises,
                conclusion,
                p,
                flagged,
            })
        }
        "swap" => {
            let a_tok = cur.take("a step number")?;
            let a = parse_usize(&a_tok, line, "a step number")?;
            let b_tok = cur.take("a step number")?;
            let b = parse_usize(&b_tok, line, "a step number")?;
            cur.finish()?;
            Ok(CheckDecl::Swap { line, a, b })
        }
        "violation" => {
            let mut failing = None;
            let mut passing = None;
            while let Some(tok) = cur.peek() {
                if tok == "expect" {
                    break;
                }
                let tok = cur.bump().unwrap();
                let (key, value) = tok.text.split_once('=').ok_or_else(|| ParseError {
                    line,
                    col: tok.col,
                    expected: "`failing=` or `passing=`".to_string(),
                })?;
                let value_tok = Tok {
                    text: value.to_string(),
                    col: tok.col + key.chars().count() + 1,
                };
                let amp = parse_amp(&value_tok, line)?;
                match key {
                    "failing" => failing = Some(amp.magnitude),
                    "passing" => passing = Some(amp.magnitude),
                    _ => {
                        return Err(ParseError {
                            line,
                            col: tok.col,
                            expected: "`failing=` or `passing=`".to_string(),
                        })
                    }
                }
            }
            let failing = failing.ok_or_else(|| cur.err_here("`failing=<amplitude>`"))?;
            let passing = passing.ok_or_else(|| cur.err_here("`passing=<amplitude>`"))?;
            cur.literal("expect")?;
            let mut expect = None;
            for (_, value) in parse_kv(cur, &["p"])? {
                expect = Some(parse_value(&value, line)?);
            }
            let expect = expect.ok_or_else(|| cur.err_here("`p=<probability>`"))?;
            Ok(CheckDecl::Violation {
                line,
                failing,
                passing,
                expect,
            })
        }
        _ => Err(ParseError {
            line,
            col: kind.col,
            expected: "a check kind (transitivity, compatible, or, mine, final, joint, chain, \
                       defect, conjunction, swap, violation)"
                .to_string(),
        }),
    }
}

/// Parses a whole experiment file.  Empty (or comment-only) input is
/// rejected at line 1, column 1.
pub fn parse(input: &str) -> Result<ExperimentFile, ParseError> {
    let mut file = ExperimentFile::default();
    let mut saw_any = false;
    for (idx, raw) in input.lines().enumerate() {
        let line = idx + 1;
        let toks = split_tokens(raw, line)?;
        if toks.is_empty() {
            continue;
        }
        saw_any = true;
        let mut cur = Cur::new(toks, line);
        let head = cur.bump().unwrap();
        match head.text.as_str() {
            "register" => {
                let name = cur.take("a register name")?.text;
                let labels = match cur.peek() {
                    Some(t) if t.starts_with("labels=") => {
                        let spec = t["labels=".len()..].to_string();
                        cur.i += 1;
                        let (l0, l1) = spec.split_once(',').ok_or_else(|| {
                            cur.err_here("two labels like `labels=fail,ok`")
                        })?;
                        if l0.is_empty() || l1.is_empty() {
                            return Err(cur.err_here("two labels like `labels=fail,ok`"));
                        }
                        Some((l0.to_string(), l1.to_string()))
                    }
                    _ => None,
                };
                cur.finish()?;
                file.registers.push(RegisterDecl { line, name, labels });
            }
            "state" => {
                if file.state.is_some() {
                    return Err(ParseError {
                        line,
                        col: head.col,
                        expected: "no second `state` line".to_string(),
                    });
                }
                let normalized = !cur.eat("unnormalized");
                let terms = parse_terms(&mut cur)?;
                cur.finish()?;
                file.state = Some(StateDecl {
                    line,
                    normalized,
                    terms,
                });
            }
            "step" => file.steps.push(parse_step(&mut cur)?),
            "statement" => file.statements.push(parse_statement(&mut cur)?),
            "check" => file.checks.push(parse_check(&mut cur)?),
            "arithmetic" => {
                cur.literal("float")?;
                cur.finish()?;
                file.float_only = true;
            }
            _ => {
                return Err(ParseError {
                    line,
                    col: head.col,
                    expected: "a declaration (`register`, `state`, `step`, `statement`, \
                               `check`, or `arithmetic`)"
                        .to_string(),
                })
            }
        }
    }
    if !saw_any {
        return Err(ParseError {
            line: 1,
            col: 1,
            expected: "at least one declaration".to_string(),
        });
    }
    Ok(file)
}
