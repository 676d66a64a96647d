//! Surface syntax for rule files.
//!
//! ```text
//! % comment
//! well_placed(A) :- on_ag(A, B), well_placed(B).
//! unstack(A, B) :-pre not well_placed(A).   % B1
//! r :- not p_exists.
//! ```
//!
//! Variables start with an uppercase letter or `_`; predicates and objects
//! start with a lowercase letter or digit. `:-pre` marks a shorthand rule
//! whose head is an action schema; expansion happens in the BK compiler.

use std::fmt;

use super::DatalogError;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TermAst {
    Var(String),
    Const(String),
}

impl fmt::Display for TermAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermAst::Var(v) | TermAst::Const(v) => f.write_str(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AtomAst {
    pub pred: String,
    pub args: Vec<TermAst>,
}

impl AtomAst {
    pub fn new(pred: impl Into<String>, args: Vec<TermAst>) -> Self {
        AtomAst {
            pred: pred.into(),
            args,
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|t| match t {
            TermAst::Var(v) => Some(v.as_str()),
            TermAst::Const(_) => None,
        })
    }
}

impl fmt::Display for AtomAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pred)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LiteralAst {
    pub atom: AtomAst,
    pub negated: bool,
}

impl LiteralAst {
    pub fn pos(atom: AtomAst) -> Self {
        LiteralAst {
            atom,
            negated: false,
        }
    }

    pub fn neg(atom: AtomAst) -> Self {
        LiteralAst {
            atom,
            negated: true,
        }
    }
}

impl fmt::Display for LiteralAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("not ")?;
        }
        write!(f, "{}", self.atom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RuleAst {
    pub head: AtomAst,
    pub body: Vec<LiteralAst>,
    /// `:-pre` shorthand: the body is extended with the action's preconditions.
    pub shorthand: bool,
    /// Trailing `% label` comment on the rule's last line, if any.
    pub label: Option<String>,
    pub line: usize,
}

impl RuleAst {
    pub fn new(head: AtomAst, body: Vec<LiteralAst>) -> Self {
        RuleAst {
            head,
            body,
            shorthand: false,
            label: None,
            line: 0,
        }
    }
}

impl fmt::Display for RuleAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        let arrow = if self.shorthand { " :-pre" } else { " :-" };
        if self.body.is_empty() {
            if self.shorthand {
                f.write_str(arrow)?;
            }
            return f.write_str(".");
        }
        f.write_str(arrow)?;
        for (i, l) in self.body.iter().enumerate() {
            f.write_str(if i == 0 { " " } else { ", " })?;
            write!(f, "{l}")?;
        }
        f.write_str(".")
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Arrow,
    PreArrow,
    Not,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

fn is_ident_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'-' || b == b'\''
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> u8 {
        let b = self.src[self.pos];
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        b
    }

    fn err(&self, msg: impl Into<String>) -> DatalogError {
        DatalogError::Syntax {
            line: self.line,
            col: self.col,
            msg: msg.into(),
        }
    }

    fn next(&mut self) -> Result<Option<(Tok, usize, usize)>, DatalogError> {
        loop {
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
                self.bump();
            }
            if self.pos >= self.src.len() {
                return Ok(None);
            }
            if self.src[self.pos] == b'%' {
                while self.pos < self.src.len() && self.src[self.pos] != b'\n' {
                    self.bump();
                }
                continue;
            }
            break;
        }
        let (line, col) = (self.line, self.col);
        let b = self.src[self.pos];
        let tok = match b {
            b'(' => {
                self.bump();
                Tok::LParen
            }
            b')' => {
                self.bump();
                Tok::RParen
            }
            b',' => {
                self.bump();
                Tok::Comma
            }
            b'.' => {
                self.bump();
                Tok::Dot
            }
            b':' => {
                self.bump();
                if self.pos >= self.src.len() || self.src[self.pos] != b'-' {
                    return Err(self.err("expected `:-`"));
                }
                self.bump();
                if self.src[self.pos..].starts_with(b"pre")
                    && !self
                        .src
                        .get(self.pos + 3)
                        .copied()
                        .is_some_and(is_ident_byte)
                {
                    for _ in 0..3 {
                        self.bump();
                    }
                    Tok::PreArrow
                } else {
                    Tok::Arrow
                }
            }
            b if b.is_ascii_alphanumeric() || b == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len() && is_ident_byte(self.src[self.pos]) {
                    self.bump();
                }
                let s = std::str::from_utf8(&self.src[start..self.pos])
                    .expect("ascii identifier")
                    .to_string();
                if s == "not" {
                    Tok::Not
                } else {
                    Tok::Ident(s)
                }
            }
            other => return Err(self.err(format!("unexpected character `{}`", other as char))),
        };
        Ok(Some((tok, line, col)))
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
    peeked: Option<(Tok, usize, usize)>,
}

impl<'a> Parser<'a> {
    fn peek(&mut self) -> Result<Option<&Tok>, DatalogError> {
        if self.peeked.is_none() {
            self.peeked = self.lex.next()?;
        }
        Ok(self.peeked.as_ref().map(|(t, _, _)| t))
    }

    fn take(&mut self) -> Result<Option<(Tok, usize, usize)>, DatalogError> {
        if self.peeked.is_none() {
            self.peeked = self.lex.next()?;
        }
        Ok(self.peeked.take())
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<usize, DatalogError> {
        match self.take()? {
            Some((t, line, _)) if &t == want => Ok(line),
            Some((t, line, col)) => Err(DatalogError::Syntax {
                line,
                col,
                msg: format!("expected {what}, found {t:?}"),
            }),
            None => Err(self.lex.err(format!("expected {what}, found end of input"))),
        }
    }

    fn ident(&mut self) -> Result<(String, usize, usize), DatalogError> {
        match self.take()? {
            Some((Tok::Ident(s), line, col)) => Ok((s, line, col)),
            Some((t, line, col)) => Err(DatalogError::Syntax {
                line,
                col,
                msg: format!("expected identifier, found {t:?}"),
            }),
            None => Err(self.lex.err("expected identifier, found end of input")),
        }
    }

    fn atom(&mut self) -> Result<AtomAst, DatalogError> {
        let (pred, line, col) = self.ident()?;
        if is_variable(&pred) {
            return Err(DatalogError::Syntax {
                line,
                col,
                msg: format!("predicate `{pred}` must start with a lowercase letter"),
            });
        }
        let mut args = Vec::new();
        if self.peek()? == Some(&Tok::LParen) {
            self.take()?;
            loop {
                let (t, _, _) = self.ident()?;
                args.push(if is_variable(&t) {
                    TermAst::Var(t)
                } else {
                    TermAst::Const(t)
                });
                match self.take()? {
                    Some((Tok::Comma, _, _)) => continue,
                    Some((Tok::RParen, _, _)) => break,
                    Some((t, line, col)) => {
                        return Err(DatalogError::Syntax {
                            line,
                            col,
                            msg: format!("expected `,` or `)`, found {t:?}"),
                        })
                    }
                    None => return Err(self.lex.err("unterminated argument list")),
                }
            }
        }
        Ok(AtomAst { pred, args })
    }

    fn literal(&mut self) -> Result<LiteralAst, DatalogError> {
        if self.peek()? == Some(&Tok::Not) {
            self.take()?;
            Ok(LiteralAst::neg(self.atom()?))
        } else {
            Ok(LiteralAst::pos(self.atom()?))
        }
    }

    fn rule(&mut self) -> Result<RuleAst, DatalogError> {
        let line = match &self.peeked {
            Some((_, l, _)) => *l,
            None => self.lex.line,
        };
        let head = self.atom()?;
        let mut rule = RuleAst::new(head, Vec::new());
        rule.line = line;
        let end_line = match self.take()? {
            Some((Tok::Dot, l, _)) => l,
            Some((arrow @ (Tok::Arrow | Tok::PreArrow), _, _)) => {
                rule.shorthand = arrow == Tok::PreArrow;
                if self.peek()? == Some(&Tok::Dot) {
                    self.expect(&Tok::Dot, "`.`")?
                } else {
                    loop {
                        rule.body.push(self.literal()?);
                        match self.take()? {
                            Some((Tok::Comma, _, _)) => continue,
                            Some((Tok::Dot, l, _)) => break l,
                            Some((t, line, col)) => {
                                return Err(DatalogError::Syntax {
                                    line,
                                    col,
                                    msg: format!("expected `,` or `.`, found {t:?}"),
                                })
                            }
                            None => return Err(self.lex.err("rule not terminated by `.`")),
                        }
                    }
                }
            }
            Some((t, line, col)) => {
                return Err(DatalogError::Syntax {
                    line,
                    col,
                    msg: format!("expected `:-`, `:-pre` or `.`, found {t:?}"),
                })
            }
            None => return Err(self.lex.err("rule not terminated by `.`")),
        };
        rule.line = rule.line.min(end_line);
        rule.label = trailing_comment(self.lex.src, self.lex.pos);
        Ok(rule)
    }
}

/// Text of a `%` comment following `pos` on the same line, if nothing else
/// precedes it.
fn trailing_comment(src: &[u8], mut pos: usize) -> Option<String> {
    while pos < src.len() && src[pos] != b'\n' {
        match src[pos] {
            b'%' => {
                let end = src[pos..]
                    .iter()
                    .position(|&b| b == b'\n')
                    .map_or(src.len(), |e| pos + e);
                let text = String::from_utf8_lossy(&src[pos + 1..end])
                    .trim()
                    .to_string();
                return (!text.is_empty()).then_some(text);
            }
            b if b.is_ascii_whitespace() => pos += 1,
            _ => return None,
        }
    }
    None
}

pub fn is_variable(s: &str) -> bool {
    s.chars()
        .next()
        .is_some_and(|c| c.is_ascii_uppercase() || c == '_')
}

/// Parses a rule file into its rules, in file order.
pub fn parse_rules(src: &str) -> Result<Vec<RuleAst>, DatalogError> {
    let mut p = Parser {
        lex: Lexer::new(src),
        peeked: None,
    };
    let mut out = Vec::new();
    while p.peek()?.is_some() {
        out.push(p.rule()?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_and_shorthand_rules() {
        let src = "% header\nwell_placed(A) :- on_ag(A, B), well_placed(B).\n\
                   unstack(A,B) :-pre not well_placed(A). % B1\n\
                   pickup(X) :-pre .\n\
                   r :- not p_exists.\n\
                   p(a).\n";
        let rules = parse_rules(src).unwrap();
        assert_eq!(rules.len(), 5);
        assert!(!rules[0].shorthand);
        assert_eq!(rules[0].body.len(), 2);
        assert!(rules[1].shorthand);
        assert!(rules[1].body[0].negated);
        assert_eq!(rules[1].label.as_deref(), Some("B1"));
        assert!(rules[2].shorthand && rules[2].body.is_empty());
        assert_eq!(rules[3].head.args.len(), 0);
        assert_eq!(rules[4].head.args, vec![TermAst::Const("a".into())]);
    }

    #[test]
    fn display_reparses() {
        let src = "h(X, Y) :- e(X, Z), not f(Z), t(Z, Y).\nunstack(A, B) :-pre.\n";
        let rules = parse_rules(src).unwrap();
        let printed: String = rules.iter().map(|r| format!("{r}\n")).collect();
        let again = parse_rules(&printed).unwrap();
        for (a, b) in rules.iter().zip(&again) {
            assert_eq!(a.head, b.head);
            assert_eq!(a.body, b.body);
            assert_eq!(a.shorthand, b.shorthand);
        }
    }

    #[test]
    fn reports_position_of_syntax_errors() {
        let err = parse_rules("p(X) :- q(X)\nr(Y) :- s(Y).").unwrap_err();
        match err {
            DatalogError::Syntax { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e:?}"),
        }
        assert!(parse_rules("p(X) :- q(X),").is_err());
        assert!(parse_rules("P(x).").is_err());
    }
}
