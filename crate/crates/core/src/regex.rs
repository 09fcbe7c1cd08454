//! Trace regular expressions compiled to minimal complete DFAs.
//!
//! Actions are space-separated identifiers; `|`, `*`, `+`, `?`, parentheses and
//! `.` (any action) are operators and always split tokens.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::automaton::ActionId;
use crate::dfa::TraceDfa;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RegexError {
    #[error("column {column}: unknown action `{name}`")]
    UnknownAction { name: String, column: usize },
    #[error("column {column}: {message}")]
    Syntax { message: String, column: usize },
}

impl RegexError {
    pub fn column(&self) -> usize {
        match self {
            RegexError::UnknownAction { column, .. } | RegexError::Syntax { column, .. } => *column,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Token {
    Ident(String),
    Any,
    Bar,
    Star,
    Plus,
    Question,
    Open,
    Close,
}

fn tokenize(src: &str) -> Vec<(Token, usize)> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut start = 0;
    for (col, ch) in src.chars().enumerate() {
        let op = match ch {
            '|' => Some(Token::Bar),
            '*' => Some(Token::Star),
            '+' => Some(Token::Plus),
            '?' => Some(Token::Question),
            '(' => Some(Token::Open),
            ')' => Some(Token::Close),
            '.' => Some(Token::Any),
            _ => None,
        };
        if ch.is_whitespace() || op.is_some() {
            if !current.is_empty() {
                out.push((Token::Ident(std::mem::take(&mut current)), start + 1));
            }
            if let Some(op) = op {
                out.push((op, col + 1));
            }
        } else {
            if current.is_empty() {
                start = col;
            }
            current.push(ch);
        }
    }
    if !current.is_empty() {
        out.push((Token::Ident(current), start + 1));
    }
    out
}

#[derive(Clone, Debug)]
enum Ast {
    Empty,
    Action(ActionId),
    Any,
    Concat(Vec<Ast>),
    Alt(Vec<Ast>),
    Star(Box<Ast>),
    Plus(Box<Ast>),
    Opt(Box<Ast>),
}

struct Parser<'a> {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    actions: &'a HashMap<&'a str, ActionId>,
    end_column: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn column(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end_column, |&(_, c)| c)
    }

    fn alt(&mut self) -> Result<Ast, RegexError> {
        let mut branches = vec![self.concat()?];
        while self.peek() == Some(&Token::Bar) {
            self.pos += 1;
            branches.push(self.concat()?);
        }
        Ok(if branches.len() == 1 { branches.pop().unwrap() } else { Ast::Alt(branches) })
    }

    fn concat(&mut self) -> Result<Ast, RegexError> {
        let mut items = Vec::new();
        while matches!(self.peek(), Some(Token::Ident(_) | Token::Any | Token::Open)) {
            items.push(self.repeat()?);
        }
        Ok(match items.len() {
            0 => Ast::Empty,
            1 => items.pop().unwrap(),
            _ => Ast::Concat(items),
        })
    }

    fn repeat(&mut self) -> Result<Ast, RegexError> {
        let mut node = self.atom()?;
        loop {
            node = match self.peek() {
                Some(Token::Star) => Ast::Star(Box::new(node)),
                Some(Token::Plus) => Ast::Plus(Box::new(node)),
                Some(Token::Question) => Ast::Opt(Box::new(node)),
                _ => return Ok(node),
            };
            self.pos += 1;
        }
    }

    fn atom(&mut self) -> Result<Ast, RegexError> {
        let column = self.column();
        let Some((tok, _)) = self.tokens.get(self.pos).cloned() else {
            return Err(RegexError::Syntax { message: "unexpected end of expression".into(), column });
        };
        self.pos += 1;
        match tok {
            Token::Ident(name) => match self.actions.get(name.as_str()) {
                Some(&a) => Ok(Ast::Action(a)),
                None => Err(RegexError::UnknownAction { name, column }),
            },
            Token::Any => Ok(Ast::Any),
            Token::Open => {
                let inner = self.alt()?;
                if self.peek() != Some(&Token::Close) {
                    return Err(RegexError::Syntax { message: "expected `)`".into(), column: self.column() });
                }
                self.pos += 1;
                Ok(inner)
            }
            other => Err(RegexError::Syntax { message: format!("unexpected {other:?}"), column }),
        }
    }
}

#[derive(Clone, Copy)]
enum Label {
    Action(ActionId),
    Any,
}

#[derive(Default)]
struct Nfa {
    eps: Vec<Vec<usize>>,
    edges: Vec<Vec<(Label, usize)>>,
}

impl Nfa {
    fn state(&mut self) -> usize {
        self.eps.push(Vec::new());
        self.edges.push(Vec::new());
        self.eps.len() - 1
    }

    /// Thompson construction; returns the fragment's entry and exit.
    fn fragment(&mut self, ast: &Ast) -> (usize, usize) {
        match ast {
            Ast::Empty => {
                let s = self.state();
                (s, s)
            }
            Ast::Action(a) => self.edge(Label::Action(*a)),
            Ast::Any => self.edge(Label::Any),
            Ast::Concat(items) => {
                let (first_in, mut out) = self.fragment(&items[0]);
                for item in &items[1..] {
                    let (i, o) = self.fragment(item);
                    self.eps[out].push(i);
                    out = o;
                }
                (first_in, out)
            }
            Ast::Alt(branches) => {
                let (s, e) = (self.state(), self.state());
                for b in branches {
                    let (i, o) = self.fragment(b);
                    self.eps[s].push(i);
                    self.eps[o].push(e);
                }
                (s, e)
            }
            Ast::Star(inner) | Ast::Plus(inner) | Ast::Opt(inner) => {
                let (s, e) = (self.state(), self.state());
                let (i, o) = self.fragment(inner);
                self.eps[s].push(i);
                self.eps[o].push(e);
                if !matches!(ast, Ast::Plus(_)) {
                    self.eps[s].push(e);
                }
                if !matches!(ast, Ast::Opt(_)) {
                    self.eps[o].push(i);
                }
                (s, e)
            }
        }
    }

    fn edge(&mut self, label: Label) -> (usize, usize) {
        let (s, e) = (self.state(), self.state());
        self.edges[s].push((label, e));
        (s, e)
    }

    fn closure(&self, seeds: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
        let mut set = BTreeSet::new();
        let mut stack: Vec<usize> = seeds.into_iter().collect();
        while let Some(s) = stack.pop() {
            if set.insert(s) {
                stack.extend(self.eps[s].iter().copied());
            }
        }
        set
    }
}

/// Compiles `pattern` over the ordered action names `actions`.
pub fn compile_regex(pattern: &str, actions: &[String]) -> Result<TraceDfa, RegexError> {
    let index: HashMap<&str, ActionId> = actions.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();
    let mut parser = Parser { tokens: tokenize(pattern), pos: 0, actions: &index, end_column: pattern.chars().count() + 1 };
    let ast = parser.alt()?;
    if parser.pos < parser.tokens.len() {
        return Err(RegexError::Syntax { message: "unbalanced `)` or stray operator".into(), column: parser.column() });
    }

    let mut nfa = Nfa::default();
    let (entry, exit) = nfa.fragment(&ast);

    let width = actions.len();
    let start = nfa.closure([entry]);
    let mut sets = vec![start.clone()];
    let mut ids = HashMap::from([(start, 0usize)]);
    let mut delta: Vec<Vec<usize>> = Vec::new();
    let mut i = 0;
    while i < sets.len() {
        let mut row = Vec::with_capacity(width);
        for a in 0..width {
            let targets = sets[i].iter().flat_map(|&s| {
                nfa.edges[s].iter().filter_map(move |&(l, t)| match l {
                    Label::Any => Some(t),
                    Label::Action(b) if b == a => Some(t),
                    Label::Action(_) => None,
                })
            });
            let next = nfa.closure(targets.collect::<Vec<_>>());
            let id = match ids.get(&next) {
                Some(&id) => id,
                None => {
                    let id = sets.len();
                    ids.insert(next.clone(), id);
                    sets.push(next);
                    id
                }
            };
            row.push(id);
        }
        delta.push(row);
        i += 1;
    }
    let accepting = sets.iter().map(|s| s.contains(&exit)).collect();
    Ok(TraceDfa::new(width, delta, 0, accepting).expect("subset construction is complete").minimize())
}
