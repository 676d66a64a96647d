//! PDDL subset: STRIPS with `:typing` and `:negative-preconditions`.

use std::fmt;

use super::sexpr::{self, syntax, Pos, Sexp};
use super::PlanningError;

pub type TypeId = u32;
pub const OBJECT: TypeId = 0;

const SUPPORTED_REQUIREMENTS: &[&str] = &[":strips", ":typing", ":negative-preconditions"];

/// Type hierarchy rooted at `object`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Types {
    names: Vec<String>,
    parent: Vec<Option<TypeId>>,
}

impl Default for Types {
    fn default() -> Self {
        Types {
            names: vec!["object".into()],
            parent: vec![None],
        }
    }
}

impl Types {
    pub fn get(&self, name: &str) -> Option<TypeId> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| i as TypeId)
    }

    pub fn name(&self, t: TypeId) -> &str {
        &self.names[t as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn parent(&self, t: TypeId) -> Option<TypeId> {
        self.parent[t as usize]
    }

    /// `t` and all its ancestors, ending with `object`.
    pub fn ancestors(&self, t: TypeId) -> Vec<TypeId> {
        let mut out = vec![t];
        let mut cur = t;
        while let Some(p) = self.parent[cur as usize] {
            if out.contains(&p) {
                break;
            }
            out.push(p);
            cur = p;
        }
        out
    }

    pub fn is_subtype(&self, t: TypeId, of: TypeId) -> bool {
        self.ancestors(t).contains(&of)
    }

    fn declare(&mut self, name: &str) -> TypeId {
        self.get(name).unwrap_or_else(|| {
            self.names.push(name.to_string());
            self.parent.push(Some(OBJECT));
            (self.names.len() - 1) as TypeId
        })
    }

    fn set_parent(&mut self, t: TypeId, p: TypeId) {
        if t != OBJECT {
            self.parent[t as usize] = Some(p);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Predicate {
    pub name: String,
    pub params: Vec<TypeId>,
}

impl Predicate {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

/// Argument of a schema atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Term {
    /// Index into the schema's parameter list.
    Param(u32),
    /// Index into the domain's constant list.
    Const(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaAtom {
    pub pred: u32,
    pub args: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    /// Parameter names (without `?`) and types.
    pub params: Vec<(String, TypeId)>,
    pub pre: Vec<SchemaAtom>,
    pub neg_pre: Vec<SchemaAtom>,
    pub add: Vec<SchemaAtom>,
    pub del: Vec<SchemaAtom>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    pub name: String,
    pub requirements: Vec<String>,
    pub types: Types,
    pub constants: Vec<(String, TypeId)>,
    pub predicates: Vec<Predicate>,
    pub actions: Vec<ActionSchema>,
}

impl Domain {
    pub fn parse(src: &str) -> Result<Domain, PlanningError> {
        parse_domain(src)
    }

    pub fn predicate(&self, name: &str) -> Option<u32> {
        self.predicates
            .iter()
            .position(|p| p.name == name)
            .map(|i| i as u32)
    }

    pub fn action(&self, name: &str) -> Option<&ActionSchema> {
        self.actions.iter().find(|a| a.name == name)
    }

    pub fn max_arity(&self) -> usize {
        self.predicates
            .iter()
            .map(Predicate::arity)
            .max()
            .unwrap_or(0)
    }
}

/// A fact as it appears in a problem file.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fact {
    pub pred: String,
    pub args: Vec<String>,
}

impl Fact {
    pub fn new(pred: &str, args: &[&str]) -> Self {
        Fact {
            pred: pred.to_string(),
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.pred)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

/// Problem file contents, before validation against a domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub name: String,
    pub domain: String,
    /// Object names and type names.
    pub objects: Vec<(String, String)>,
    pub init: Vec<Fact>,
    pub goal: Vec<Fact>,
}

impl Problem {
    pub fn parse(src: &str) -> Result<Problem, PlanningError> {
        parse_problem_text(src)
    }
}

fn unsupported(keyword: &str, pos: Pos) -> PlanningError {
    PlanningError::Unsupported {
        keyword: keyword.to_string(),
        line: pos.line,
        col: pos.col,
    }
}

fn expect_list<'a>(e: &'a Sexp, what: &str) -> Result<&'a [Sexp], PlanningError> {
    e.as_list()
        .ok_or_else(|| syntax(e.pos(), format!("expected {what}")))
}

fn expect_atom<'a>(e: &'a Sexp, what: &str) -> Result<&'a str, PlanningError> {
    e.as_atom()
        .ok_or_else(|| syntax(e.pos(), format!("expected {what}")))
}

/// Parses `(define (<kind> name) ...)`, returning the name and the sections.
fn define<'a>(top: &'a Sexp, kind: &str) -> Result<(String, &'a [Sexp]), PlanningError> {
    let items = expect_list(top, "`(define ...)`")?;
    if items.first().and_then(Sexp::as_atom) != Some("define") {
        return Err(syntax(top.pos(), "expected `define`"));
    }
    let header = items
        .get(1)
        .ok_or_else(|| syntax(top.pos(), format!("missing `({kind} ...)` header")))?;
    let h = expect_list(header, "header")?;
    if h.len() != 2 || h[0].as_atom() != Some(kind) {
        return Err(syntax(header.pos(), format!("expected `({kind} <name>)`")));
    }
    Ok((expect_atom(&h[1], "name")?.to_string(), &items[2..]))
}

/// `a b - t c` → [(a, Some t), (b, Some t), (c, None)].
fn typed_list(items: &[Sexp]) -> Result<Vec<(String, Option<String>, Pos)>, PlanningError> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let s = expect_atom(&items[i], "name")?;
        if s == "-" {
            let t = items
                .get(i + 1)
                .ok_or_else(|| syntax(items[i].pos(), "missing type after `-`"))?;
            if t.head() == Some("either") {
                return Err(unsupported("either", t.pos()));
            }
            let t = expect_atom(t, "type name")?;
            if pending.is_empty() {
                return Err(syntax(items[i].pos(), "`-` without preceding names"));
            }
            out.extend(pending.drain(..).map(|(n, p)| (n, Some(t.to_string()), p)));
            i += 2;
        } else {
            pending.push((s.to_string(), items[i].pos()));
            i += 1;
        }
    }
    out.extend(pending.into_iter().map(|(n, p)| (n, None, p)));
    Ok(out)
}

fn resolve_type(types: &Types, name: Option<&str>, _pos: Pos) -> Result<TypeId, PlanningError> {
    match name {
        None => Ok(OBJECT),
        Some(n) => types.get(n).ok_or_else(|| PlanningError::Undeclared {
            kind: "type",
            name: n.to_string(),
        }),
    }
}

pub fn parse_domain(src: &str) -> Result<Domain, PlanningError> {
    let top = sexpr::parse(src)?;
    let (name, sections) = define(&top, "domain")?;
    let mut d = Domain {
        name,
        requirements: Vec::new(),
        types: Types::default(),
        constants: Vec::new(),
        predicates: Vec::new(),
        actions: Vec::new(),
    };
    for sec in sections {
        let items = expect_list(sec, "domain section")?;
        let key = items
            .first()
            .and_then(Sexp::as_atom)
            .ok_or_else(|| syntax(sec.pos(), "expected section keyword"))?;
        let body = &items[1..];
        match key {
            ":requirements" => {
                for r in body {
                    let r_name = expect_atom(r, "requirement")?;
                    if !SUPPORTED_REQUIREMENTS.contains(&r_name) {
                        return Err(unsupported(r_name, r.pos()));
                    }
                    d.requirements.push(r_name.to_string());
                }
            }
            ":types" => {
                for (n, parent, _) in typed_list(body)? {
                    let t = d.types.declare(&n);
                    let p = d.types.declare(parent.as_deref().unwrap_or("object"));
                    d.types.set_parent(t, p);
                }
            }
            ":constants" => {
                for (n, t, pos) in typed_list(body)? {
                    let t = resolve_type(&d.types, t.as_deref(), pos)?;
                    d.constants.push((n, t));
                }
            }
            ":predicates" => {
                for p in body {
                    let pi = expect_list(p, "predicate declaration")?;
                    let pname = pi
                        .first()
                        .and_then(Sexp::as_atom)
                        .ok_or_else(|| syntax(p.pos(), "expected predicate name"))?;
                    if d.predicate(pname).is_some() {
                        return Err(syntax(
                            p.pos(),
                            format!("predicate `{pname}` declared twice"),
                        ));
                    }
                    let params = typed_list(&pi[1..])?
                        .into_iter()
                        .map(|(_, t, pos)| resolve_type(&d.types, t.as_deref(), pos))
                        .collect::<Result<_, _>>()?;
                    d.predicates.push(Predicate {
                        name: pname.to_string(),
                        params,
                    });
                }
            }
            ":action" => {
                let a = parse_action(&d, sec, body)?;
                if d.action(&a.name).is_some() {
                    return Err(syntax(
                        sec.pos(),
                        format!("action `{}` declared twice", a.name),
                    ));
                }
                d.actions.push(a);
            }
            other => return Err(unsupported(other, items[0].pos())),
        }
    }
    Ok(d)
}

fn parse_action(d: &Domain, sec: &Sexp, body: &[Sexp]) -> Result<ActionSchema, PlanningError> {
    let name = expect_atom(
        body.first()
            .ok_or_else(|| syntax(sec.pos(), "missing action name"))?,
        "action name",
    )?
    .to_string();
    let mut a = ActionSchema {
        name,
        params: Vec::new(),
        pre: Vec::new(),
        neg_pre: Vec::new(),
        add: Vec::new(),
        del: Vec::new(),
    };
    let mut i = 1;
    while i < body.len() {
        let key = expect_atom(&body[i], "action keyword")?;
        let val = body
            .get(i + 1)
            .ok_or_else(|| syntax(body[i].pos(), format!("missing value for `{key}`")))?;
        match key {
            ":parameters" => {
                for (n, t, pos) in typed_list(expect_list(val, "parameter list")?)? {
                    let Some(stripped) = n.strip_prefix('?') else {
                        return Err(syntax(pos, format!("parameter `{n}` must start with `?`")));
                    };
                    a.params.push((
                        stripped.to_string(),
                        resolve_type(&d.types, t.as_deref(), pos)?,
                    ));
                }
            }
            ":precondition" => {
                let (mut pos, mut neg) = (Vec::new(), Vec::new());
                condition(d, &a, val, false, &mut pos, &mut neg)?;
                a.pre = pos;
                a.neg_pre = neg;
            }
            ":effect" => {
                let (mut add, mut del) = (Vec::new(), Vec::new());
                effect(d, &a, val, &mut add, &mut del)?;
                a.add = add;
                a.del = del;
            }
            other => return Err(unsupported(other, body[i].pos())),
        }
        i += 2;
    }
    Ok(a)
}

fn schema_atom(d: &Domain, a: &ActionSchema, e: &Sexp) -> Result<SchemaAtom, PlanningError> {
    let items = expect_list(e, "atom")?;
    let pname = items
        .first()
        .and_then(Sexp::as_atom)
        .ok_or_else(|| syntax(e.pos(), "expected predicate name"))?;
    let pred = d
        .predicate(pname)
        .ok_or_else(|| PlanningError::Undeclared {
            kind: "predicate",
            name: pname.to_string(),
        })?;
    let expected = d.predicates[pred as usize].arity();
    if expected != items.len() - 1 {
        return Err(PlanningError::Arity {
            pred: pname.to_string(),
            expected,
            found: items.len() - 1,
        });
    }
    let args = items[1..]
        .iter()
        .map(|t| {
            let s = expect_atom(t, "term")?;
            if let Some(v) = s.strip_prefix('?') {
                a.params
                    .iter()
                    .position(|(n, _)| n == v)
                    .map(|i| Term::Param(i as u32))
                    .ok_or_else(|| PlanningError::Undeclared {
                        kind: "variable",
                        name: s.to_string(),
                    })
            } else {
                d.constants
                    .iter()
                    .position(|(n, _)| n == s)
                    .map(|i| Term::Const(i as u32))
                    .ok_or_else(|| PlanningError::Undeclared {
                        kind: "constant",
                        name: s.to_string(),
                    })
            }
        })
        .collect::<Result<_, _>>()?;
    Ok(SchemaAtom { pred, args })
}

fn condition(
    d: &Domain,
    a: &ActionSchema,
    e: &Sexp,
    negated: bool,
    pos: &mut Vec<SchemaAtom>,
    neg: &mut Vec<SchemaAtom>,
) -> Result<(), PlanningError> {
    let items = expect_list(e, "condition")?;
    match e.head() {
        None if items.is_empty() => Ok(()),
        Some("and") if !negated => {
            for c in &items[1..] {
                condition(d, a, c, false, pos, neg)?;
            }
            Ok(())
        }
        Some("not") if !negated => {
            if items.len() != 2 {
                return Err(syntax(e.pos(), "`not` takes one argument"));
            }
            condition(d, a, &items[1], true, pos, neg)
        }
        Some(k @ ("and" | "not" | "or" | "imply" | "exists" | "forall" | "=" | "when")) => {
            Err(unsupported(k, e.pos()))
        }
        _ => {
            let atom = schema_atom(d, a, e)?;
            if negated {
                neg.push(atom);
            } else {
                pos.push(atom);
            }
            Ok(())
        }
    }
}

fn effect(
    d: &Domain,
    a: &ActionSchema,
    e: &Sexp,
    add: &mut Vec<SchemaAtom>,
    del: &mut Vec<SchemaAtom>,
) -> Result<(), PlanningError> {
    let items = expect_list(e, "effect")?;
    match e.head() {
        None if items.is_empty() => Ok(()),
        Some("and") => {
            for c in &items[1..] {
                effect(d, a, c, add, del)?;
            }
            Ok(())
        }
        Some("not") => {
            if items.len() != 2 {
                return Err(syntax(e.pos(), "`not` takes one argument"));
            }
            del.push(schema_atom(d, a, &items[1])?);
            Ok(())
        }
        Some(k @ ("forall" | "when" | "increase" | "decrease" | "assign")) => {
            Err(unsupported(k, e.pos()))
        }
        _ => {
            add.push(schema_atom(d, a, e)?);
            Ok(())
        }
    }
}

fn fact(e: &Sexp) -> Result<Fact, PlanningError> {
    let items = expect_list(e, "fact")?;
    let pred = items
        .first()
        .and_then(Sexp::as_atom)
        .ok_or_else(|| syntax(e.pos(), "expected predicate name"))?;
    if pred == "not" || pred == "=" {
        return Err(unsupported(pred, e.pos()));
    }
    let args = items[1..]
        .iter()
        .map(|t| expect_atom(t, "object").map(str::to_string))
        .collect::<Result<_, _>>()?;
    Ok(Fact {
        pred: pred.to_string(),
        args,
    })
}

fn goal_facts(e: &Sexp, out: &mut Vec<Fact>) -> Result<(), PlanningError> {
    match e.head() {
        Some("and") => {
            for c in &e.as_list().unwrap()[1..] {
                goal_facts(c, out)?;
            }
            Ok(())
        }
        None if e.as_list().is_some_and(<[Sexp]>::is_empty) => Ok(()),
        Some(k @ ("not" | "or" | "imply" | "exists" | "forall" | "=")) => {
            Err(unsupported(k, e.pos()))
        }
        _ => {
            out.push(fact(e)?);
            Ok(())
        }
    }
}

fn parse_problem_text(src: &str) -> Result<Problem, PlanningError> {
    let top = sexpr::parse(src)?;
    let (name, sections) = define(&top, "problem")?;
    let mut p = Problem {
        name,
        domain: String::new(),
        objects: Vec::new(),
        init: Vec::new(),
        goal: Vec::new(),
    };
    for sec in sections {
        let items = expect_list(sec, "problem section")?;
        let key = items
            .first()
            .and_then(Sexp::as_atom)
            .ok_or_else(|| syntax(sec.pos(), "expected section keyword"))?;
        match key {
            ":domain" => {
                p.domain = expect_atom(
                    items
                        .get(1)
                        .ok_or_else(|| syntax(sec.pos(), "missing domain name"))?,
                    "domain name",
                )?
                .to_string();
            }
            ":objects" => {
                for (n, t, _) in typed_list(&items[1..])? {
                    p.objects.push((n, t.unwrap_or_else(|| "object".into())));
                }
            }
            ":init" => {
                for f in &items[1..] {
                    p.init.push(fact(f)?);
                }
            }
            ":goal" => {
                if items.len() != 2 {
                    return Err(syntax(sec.pos(), "`:goal` takes one condition"));
                }
                goal_facts(&items[1], &mut p.goal)?;
            }
            ":requirements" => {
                for r in &items[1..] {
                    let r_name = expect_atom(r, "requirement")?;
                    if !SUPPORTED_REQUIREMENTS.contains(&r_name) {
                        return Err(unsupported(r_name, r.pos()));
                    }
                }
            }
            other => return Err(unsupported(other, items[0].pos())),
        }
    }
    Ok(p)
}

struct SchemaAtomDisplay<'a>(&'a Domain, &'a ActionSchema, &'a SchemaAtom);

impl fmt::Display for SchemaAtomDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let SchemaAtomDisplay(d, a, atom) = self;
        write!(f, "({}", d.predicates[atom.pred as usize].name)?;
        for t in &atom.args {
            match t {
                Term::Param(i) => write!(f, " ?{}", a.params[*i as usize].0)?,
                Term::Const(i) => write!(f, " {}", d.constants[*i as usize].0)?,
            }
        }
        f.write_str(")")
    }
}

fn typed_name(f: &mut fmt::Formatter<'_>, types: &Types, name: &str, t: TypeId) -> fmt::Result {
    if t == OBJECT {
        write!(f, "{name}")
    } else {
        write!(f, "{name} - {}", types.name(t))
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (domain {})", self.name)?;
        if !self.requirements.is_empty() {
            writeln!(f, "  (:requirements {})", self.requirements.join(" "))?;
        }
        if self.types.len() > 1 {
            f.write_str("  (:types")?;
            for t in 1..self.types.len() as TypeId {
                let p = self.types.parent(t).unwrap_or(OBJECT);
                write!(f, " {} - {}", self.types.name(t), self.types.name(p))?;
            }
            writeln!(f, ")")?;
        }
        if !self.constants.is_empty() {
            f.write_str("  (:constants")?;
            for (n, t) in &self.constants {
                write!(f, " ")?;
                typed_name(f, &self.types, n, *t)?;
            }
            writeln!(f, ")")?;
        }
        f.write_str("  (:predicates")?;
        for p in &self.predicates {
            write!(f, "\n    ({}", p.name)?;
            for (i, t) in p.params.iter().enumerate() {
                write!(f, " ")?;
                typed_name(f, &self.types, &format!("?x{i}"), *t)?;
            }
            f.write_str(")")?;
        }
        writeln!(f, ")")?;
        for a in &self.actions {
            writeln!(f, "  (:action {}", a.name)?;
            f.write_str("    :parameters (")?;
            for (i, (n, t)) in a.params.iter().enumerate() {
                if i > 0 {
                    f.write_str(" ")?;
                }
                typed_name(f, &self.types, &format!("?{n}"), *t)?;
            }
            writeln!(f, ")")?;
            f.write_str("    :precondition (and")?;
            for atom in &a.pre {
                write!(f, " {}", SchemaAtomDisplay(self, a, atom))?;
            }
            for atom in &a.neg_pre {
                write!(f, " (not {})", SchemaAtomDisplay(self, a, atom))?;
            }
            writeln!(f, ")")?;
            f.write_str("    :effect (and")?;
            for atom in &a.add {
                write!(f, " {}", SchemaAtomDisplay(self, a, atom))?;
            }
            for atom in &a.del {
                write!(f, " (not {})", SchemaAtomDisplay(self, a, atom))?;
            }
            writeln!(f, "))")?;
        }
        f.write_str(")\n")
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (problem {})", self.name)?;
        writeln!(f, "  (:domain {})", self.domain)?;
        f.write_str("  (:objects")?;
        for (n, t) in &self.objects {
            if t == "object" {
                write!(f, " {n}")?;
            } else {
                write!(f, " {n} - {t}")?;
            }
        }
        writeln!(f, ")")?;
        f.write_str("  (:init")?;
        for a in &self.init {
            write!(f, "\n    {a}")?;
        }
        writeln!(f, ")")?;
        f.write_str("  (:goal (and")?;
        for a in &self.goal {
            write!(f, "\n    {a}")?;
        }
        f.write_str(")))\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TYPED: &str = "(define (domain t)
      (:requirements :strips :typing :negative-preconditions)
      (:types car location - object vehicle - thing)
      (:constants depot - location)
      (:predicates (at ?c - car ?l - location) (free))
      (:action move :parameters (?c - car ?from ?to - location)
        :precondition (and (at ?c ?from) (not (at ?c ?to)))
        :effect (and (at ?c ?to) (not (at ?c ?from)) (not (free)))))";

    #[test]
    fn typed_domain_reads_back() {
        let d = parse_domain(TYPED).unwrap();
        assert_eq!(
            d.types
                .name(d.types.parent(d.types.get("vehicle").unwrap()).unwrap()),
            "thing"
        );
        assert_eq!(
            d.constants,
            vec![("depot".into(), d.types.get("location").unwrap())]
        );
        let mv = d.action("move").unwrap();
        assert_eq!(mv.params.len(), 3);
        assert_eq!(
            (mv.pre.len(), mv.neg_pre.len(), mv.add.len(), mv.del.len()),
            (1, 1, 1, 2)
        );
        assert_eq!(parse_domain(&d.to_string()).unwrap(), d);
    }

    #[test]
    fn rejects_outside_the_subset() {
        let src = "(define (domain x) (:requirements :strips :durative-actions))";
        match parse_domain(src) {
            Err(PlanningError::Unsupported { keyword, .. }) => {
                assert_eq!(keyword, ":durative-actions")
            }
            other => panic!("{other:?}"),
        }
        let src = "(define (domain x) (:predicates (p ?a)) (:action a :parameters (?x)
                   :precondition (or (p ?x)) :effect (p ?x)))";
        assert!(matches!(
            parse_domain(src),
            Err(PlanningError::Unsupported { .. })
        ));
    }

    #[test]
    fn undeclared_variable_is_reported() {
        let src = "(define (domain x) (:predicates (p ?a))
                   (:action a :parameters () :precondition (p ?y) :effect ()))";
        assert!(matches!(
            parse_domain(src),
            Err(PlanningError::Undeclared {
                kind: "variable",
                ..
            })
        ));
    }

    #[test]
    fn problem_round_trip() {
        let src = "(define (problem p1) (:domain bw) (:objects a b)
                   (:init (on a b) (clear a)) (:goal (and (on b a))))";
        let p = Problem::parse(src).unwrap();
        assert_eq!(p.objects.len(), 2);
        assert_eq!(p.goal, vec![Fact::new("on", &["b", "a"])]);
        assert_eq!(Problem::parse(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn negative_goals_are_rejected() {
        let src = "(define (problem p1) (:domain bw) (:objects a)
                   (:init) (:goal (not (clear a))))";
        assert!(matches!(
            Problem::parse(src),
            Err(PlanningError::Unsupported { .. })
        ));
    }
}
