use super::PlanningError;

/// Source position, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone)]
pub enum Sexp {
    /// Symbols are lower-cased on read; PDDL is case-insensitive.
    Atom(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(s, _) => Some(s),
            Sexp::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(v, _) => Some(v),
            Sexp::Atom(..) => None,
        }
    }

    /// Head symbol of a list, if it is one.
    pub fn head(&self) -> Option<&str> {
        self.as_list()
            .and_then(|v| v.first())
            .and_then(Sexp::as_atom)
    }
}

pub fn syntax(pos: Pos, msg: impl Into<String>) -> PlanningError {
    PlanningError::Syntax {
        line: pos.line,
        col: pos.col,
        msg: msg.into(),
    }
}

/// Reads exactly one top-level expression.
pub fn parse(src: &str) -> Result<Sexp, PlanningError> {
    let mut stack: Vec<(Vec<Sexp>, Pos)> = Vec::new();
    let mut done: Option<Sexp> = None;
    let mut line = 1;
    let mut col = 1;
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        if c == ';' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
                col += 1;
            }
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            continue;
        }
        if done.is_some() {
            return Err(syntax(pos, "trailing input after expression"));
        }
        match c {
            '(' => {
                chars.next();
                col += 1;
                stack.push((Vec::new(), pos));
            }
            ')' => {
                chars.next();
                col += 1;
                let (items, start) = stack.pop().ok_or_else(|| syntax(pos, "unbalanced `)`"))?;
                let list = Sexp::List(items, start);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(list),
                    None => done = Some(list),
                }
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    s.extend(c.to_lowercase());
                    chars.next();
                    col += 1;
                }
                let atom = Sexp::Atom(s, pos);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(atom),
                    None => return Err(syntax(pos, "expected `(`")),
                }
            }
        }
    }
    if let Some((_, start)) = stack.last() {
        return Err(syntax(*start, "unclosed `(`"));
    }
    done.ok_or_else(|| syntax(Pos { line, col }, "empty input"))
}
