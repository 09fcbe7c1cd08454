//! The line-oriented `.opm` model format.
//!
//! ```text
//! alphabet <id>+
//! state <id>+
//! initial <id>
//! trans <state> <action> <state> <prob>
//! term <state> <prob>
//! predicate <name> regex <regex>
//! observation <name> class <label> regex <regex>
//! observation <name> project <action>+
//! ```
//!
//! `#` starts a comment. Identifiers must be declared before use and
//! probabilities are `p/q` rationals or terminating decimals in (0, 1].

use std::fmt;

use num::{One, Signed};
use thiserror::Error;

use crate::automaton::RawAutomaton;
use crate::models::{ModelBundle, ModelError};
use crate::observation::{enumerate_projection_observables, ObservationSpec, PredicateSpec};
use crate::prob::{fmt_rational, parse_rational, Rational};
use crate::regex::{compile_regex, RegexError};

const REGEX_OPERATORS: &[char] = &['|', '*', '+', '?', '(', ')', '.'];

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    SyntaxError { line: usize, column: usize, message: String },
    #[error("line {line}, column {column}: unknown identifier `{name}`")]
    UnknownIdentifier { line: usize, column: usize, name: String },
    #[error("line {line}, column {column}: bad probability `{text}`")]
    BadProbability { line: usize, column: usize, text: String },
}

impl ParseError {
    pub fn position(&self) -> (usize, usize) {
        match self {
            ParseError::SyntaxError { line, column, .. }
            | ParseError::UnknownIdentifier { line, column, .. }
            | ParseError::BadProbability { line, column, .. } => (*line, *column),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FileTransition {
    pub from: String,
    pub action: String,
    pub to: String,
    pub weight: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ObservationDecl {
    Classes(Vec<(String, String)>),
    Project(Vec<String>),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ModelFile {
    pub alphabet: Vec<String>,
    pub states: Vec<String>,
    pub initial: String,
    pub transitions: Vec<FileTransition>,
    pub terminations: Vec<(String, Rational)>,
    pub predicates: Vec<(String, String)>,
    pub observations: Vec<(String, ObservationDecl)>,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum CompileError {
    #[error("no predicate named `{0}`")]
    UnknownPredicate(String),
    #[error("no observation named `{0}`")]
    UnknownObservation(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

struct Line<'a> {
    number: usize,
    text: &'a str,
    /// (1-based column, byte offset, token)
    tokens: Vec<(usize, usize, &'a str)>,
}

impl<'a> Line<'a> {
    fn split(number: usize, raw: &'a str) -> Self {
        let text = raw.split('#').next().unwrap_or("");
        let mut tokens = Vec::new();
        let mut start: Option<(usize, usize)> = None;
        for (col, (byte, ch)) in text.char_indices().enumerate() {
            match (ch.is_whitespace(), start) {
                (true, Some((c, b))) => {
                    tokens.push((c, b, &text[b..byte]));
                    start = None;
                }
                (false, None) => start = Some((col + 1, byte)),
                _ => {}
            }
        }
        if let Some((c, b)) = start {
            tokens.push((c, b, &text[b..]));
        }
        Line { number, text, tokens }
    }

    fn syntax(&self, column: usize, message: impl Into<String>) -> ParseError {
        ParseError::SyntaxError { line: self.number, column, message: message.into() }
    }

    fn end_column(&self) -> usize {
        self.text.chars().count() + 1
    }

    fn token(&self, i: usize, what: &str) -> Result<(usize, &'a str), ParseError> {
        self.tokens.get(i).map(|&(c, _, t)| (c, t)).ok_or_else(|| self.syntax(self.end_column(), format!("expected {what}")))
    }

    fn arity(&self, n: usize) -> Result<(), ParseError> {
        match self.tokens.get(n) {
            Some(&(c, _, t)) => Err(self.syntax(c, format!("unexpected `{t}`"))),
            None => Ok(()),
        }
    }

    /// Remainder of the line after token `i`, trimmed, with its starting column.
    fn rest(&self, i: usize) -> (usize, &'a str) {
        let (col, byte, tok) = self.tokens[i];
        let after = &self.text[byte + tok.len()..];
        let lead = after.chars().take_while(|c| c.is_whitespace()).count();
        (col + tok.chars().count() + lead, after.trim())
    }
}

struct Parser {
    file: ModelFile,
    initial_seen: bool,
}

impl Parser {
    fn known(&self, line: &Line, (column, name): (usize, &str), states: bool) -> Result<String, ParseError> {
        let pool = if states { &self.file.states } else { &self.file.alphabet };
        if pool.iter().any(|s| s == name) {
            Ok(name.to_string())
        } else {
            Err(ParseError::UnknownIdentifier { line: line.number, column, name: name.to_string() })
        }
    }

    fn probability(line: &Line, (column, text): (usize, &str)) -> Result<Rational, ParseError> {
        match parse_rational(text) {
            Some(p) if p.is_positive() && p <= Rational::one() => Ok(p),
            _ => Err(ParseError::BadProbability { line: line.number, column, text: text.to_string() }),
        }
    }

    fn regex(&self, line: &Line, (column, pattern): (usize, &str)) -> Result<String, ParseError> {
        compile_regex(pattern, &self.file.alphabet).map_err(|e| {
            let column = column + e.column() - 1;
            match e {
                RegexError::UnknownAction { name, .. } => ParseError::UnknownIdentifier { line: line.number, column, name },
                RegexError::Syntax { message, .. } => line.syntax(column, message),
            }
        })?;
        Ok(pattern.to_string())
    }

    fn declare(&mut self, line: &Line, states: bool) -> Result<(), ParseError> {
        if line.tokens.len() < 2 {
            return Err(line.syntax(line.end_column(), "expected at least one identifier"));
        }
        for &(column, _, name) in &line.tokens[1..] {
            if !states && name.contains(REGEX_OPERATORS) {
                return Err(line.syntax(column, format!("action `{name}` contains a regex operator")));
            }
            let pool = if states { &mut self.file.states } else { &mut self.file.alphabet };
            if pool.iter().any(|s| s == name) {
                return Err(line.syntax(column, format!("`{name}` declared twice")));
            }
            pool.push(name.to_string());
        }
        Ok(())
    }

    fn line(&mut self, line: &Line) -> Result<(), ParseError> {
        let Some(&(column, _, keyword)) = line.tokens.first() else {
            return Ok(());
        };
        match keyword {
            "alphabet" => self.declare(line, false),
            "state" => self.declare(line, true),
            "initial" => {
                if self.initial_seen {
                    return Err(line.syntax(column, "initial state given twice"));
                }
                self.file.initial = self.known(line, line.token(1, "a state")?, true)?;
                self.initial_seen = true;
                line.arity(2)
            }
            "trans" => {
                let from = self.known(line, line.token(1, "a source state")?, true)?;
                let action = self.known(line, line.token(2, "an action")?, false)?;
                let to = self.known(line, line.token(3, "a target state")?, true)?;
                let weight = Self::probability(line, line.token(4, "a probability")?)?;
                line.arity(5)?;
                self.file.transitions.push(FileTransition { from, action, to, weight });
                Ok(())
            }
            "term" => {
                let state = self.known(line, line.token(1, "a state")?, true)?;
                let weight = Self::probability(line, line.token(2, "a probability")?)?;
                line.arity(3)?;
                self.file.terminations.push((state, weight));
                Ok(())
            }
            "predicate" => {
                let (_, name) = line.token(1, "a predicate name")?;
                let (kc, kw) = line.token(2, "`regex`")?;
                if kw != "regex" {
                    return Err(line.syntax(kc, "expected `regex`"));
                }
                if self.file.predicates.iter().any(|(n, _)| n == name) {
                    return Err(line.syntax(line.tokens[1].0, format!("predicate `{name}` defined twice")));
                }
                let pattern = self.regex(line, line.rest(2))?;
                self.file.predicates.push((name.to_string(), pattern));
                Ok(())
            }
            "observation" => self.observation(line),
            other => Err(line.syntax(column, format!("unknown directive `{other}`"))),
        }
    }

    fn observation(&mut self, line: &Line) -> Result<(), ParseError> {
        let (name_col, name) = line.token(1, "an observation name")?;
        let (kc, kind) = line.token(2, "`class` or `project`")?;
        let existing = self.file.observations.iter().position(|(n, _)| n == name);
        match kind {
            "class" => {
                let (label_col, label) = line.token(3, "a class label")?;
                let (rc, kw) = line.token(4, "`regex`")?;
                if kw != "regex" {
                    return Err(line.syntax(rc, "expected `regex`"));
                }
                let pattern = self.regex(line, line.rest(4))?;
                match existing.map(|i| &mut self.file.observations[i].1) {
                    None => self.file.observations.push((name.into(), ObservationDecl::Classes(vec![(label.into(), pattern)]))),
                    Some(ObservationDecl::Classes(classes)) => {
                        if classes.iter().any(|(l, _)| l == label) {
                            return Err(line.syntax(label_col, format!("class `{label}` defined twice")));
                        }
                        classes.push((label.into(), pattern));
                    }
                    Some(ObservationDecl::Project(_)) => {
                        return Err(line.syntax(name_col, format!("`{name}` is already a projection")));
                    }
                }
                Ok(())
            }
            "project" => {
                if existing.is_some() {
                    return Err(line.syntax(name_col, format!("observation `{name}` defined twice")));
                }
                if line.tokens.len() < 4 {
                    return Err(line.syntax(line.end_column(), "expected at least one action"));
                }
                let actions = line.tokens[3..]
                    .iter()
                    .map(|&(c, _, t)| self.known(line, (c, t), false))
                    .collect::<Result<Vec<_>, _>>()?;
                self.file.observations.push((name.into(), ObservationDecl::Project(actions)));
                Ok(())
            }
            _ => Err(line.syntax(kc, "expected `class` or `project`")),
        }
    }
}

pub fn parse_model(text: &str) -> Result<ModelFile, ParseError> {
    let mut parser = Parser { file: ModelFile::default(), initial_seen: false };
    let mut lines = 0;
    for (i, raw) in text.lines().enumerate() {
        parser.line(&Line::split(i + 1, raw))?;
        lines = i + 1;
    }
    if !parser.initial_seen {
        return Err(ParseError::SyntaxError { line: lines.max(1), column: 1, message: "missing `initial` line".into() });
    }
    Ok(parser.file)
}

impl fmt::Display for ModelFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.alphabet.is_empty() {
            writeln!(f, "alphabet {}", self.alphabet.join(" "))?;
        }
        writeln!(f, "state {}", self.states.join(" "))?;
        writeln!(f, "initial {}", self.initial)?;
        for t in &self.transitions {
            writeln!(f, "trans {} {} {} {}", t.from, t.action, t.to, fmt_rational(&t.weight))?;
        }
        for (s, w) in &self.terminations {
            writeln!(f, "term {s} {}", fmt_rational(w))?;
        }
        for (name, pattern) in &self.predicates {
            writeln!(f, "predicate {name} regex {pattern}")?;
        }
        for (name, decl) in &self.observations {
            match decl {
                ObservationDecl::Classes(classes) => {
                    for (label, pattern) in classes {
                        writeln!(f, "observation {name} class {label} regex {pattern}")?;
                    }
                }
                ObservationDecl::Project(actions) => writeln!(f, "observation {name} project {}", actions.join(" "))?,
            }
        }
        Ok(())
    }
}

impl ModelFile {
    pub fn raw_automaton(&self) -> RawAutomaton {
        let mut raw = RawAutomaton::new(&self.initial);
        for s in &self.states {
            raw.declare_state(s);
        }
        for a in &self.alphabet {
            raw.declare_action(a);
        }
        for t in &self.transitions {
            raw.trans(&t.from, &t.action, &t.to, t.weight.clone());
        }
        for (s, w) in &self.terminations {
            raw.term(s, w.clone());
        }
        raw
    }

    pub fn predicate_names(&self) -> Vec<&str> {
        self.predicates.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn observation_names(&self) -> Vec<&str> {
        self.observations.iter().map(|(n, _)| n.as_str()).collect()
    }
}

/// Validates the automaton and compiles the named predicate and observation.
pub fn compile_bundle(mf: &ModelFile, predicate: &str, observation: &str) -> Result<ModelBundle, CompileError> {
    let pattern = &mf.predicates.iter().find(|(n, _)| n == predicate).ok_or_else(|| CompileError::UnknownPredicate(predicate.into()))?.1;
    let decl = &mf
        .observations
        .iter()
        .find(|(n, _)| n == observation)
        .ok_or_else(|| CompileError::UnknownObservation(observation.into()))?
        .1;
    let system = crate::models::fpfa(&mf.raw_automaton())?;
    let phi = compile_regex(pattern, system.alphabet()).map_err(ModelError::from)?.lift(&system).map_err(ModelError::from)?;
    let obs = match decl {
        ObservationDecl::Classes(classes) => {
            let mut out = Vec::new();
            for (label, pattern) in classes {
                let dfa = compile_regex(pattern, system.alphabet()).map_err(ModelError::from)?.lift(&system).map_err(ModelError::from)?;
                out.push((label.clone(), dfa));
            }
            ObservationSpec::new(observation, out).map_err(ModelError::from)?
        }
        ObservationDecl::Project(actions) => {
            let ids: Vec<_> = actions.iter().map(|a| system.action_id(a).expect("declared action")).collect();
            let mut spec = enumerate_projection_observables(&system, &ids).map_err(ModelError::from)?;
            spec.name = observation.to_string();
            spec
        }
    };
    Ok(ModelBundle {
        name: observation.to_string(),
        system,
        predicate: PredicateSpec::new(predicate, phi),
        observation: obs,
        params: Default::default(),
    })
}
