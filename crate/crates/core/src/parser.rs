//! Recursive-descent parser for the concrete term syntax.
//!
//! ```text
//! P  ::= "0" | "new" x (":" TY)? "." P | P "|" P | M | "!" M | "(" P ")"
//! M  ::= G ("+" G)*        G ::= PI ("." P)?
//! PI ::= x "(" y ")" | x "<" y ">" | "tau" | x "?()" | x "!()"
//! TY ::= ident | ident "[" TY "]"
//! ```
//!
//! A prefix binds tighter than `+`, which binds tighter than `|`; `new`
//! extends as far right as possible. `a?().P` reads `a(x).P` and `a!().P`
//! reads `new x. a<x>.P` for a fresh `x`. The restriction introduced by `a!()`
//! is placed around the whole choice the output heads, so `!(a!().P)` is
//! rejected: a replicated choice cannot start with a restriction.

use thiserror::Error;

use crate::hierarchy::BaseTypeRef;
use crate::term::{Branch, Name, Prefix, Term, TypeExpr};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

/// Result of a parse with its side information.
#[derive(Debug, Clone)]
pub struct ParseOutput {
    pub term: Term,
    /// Binders whose display had to change to keep displays unique.
    pub renamed: Vec<(String, String)>,
    /// Free names of the term (legal, reported for information).
    pub free: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Zero,
    New,
    Tau,
    Dot,
    Bar,
    Plus,
    Bang,
    Question,
    LParen,
    RParen,
    Lt,
    Gt,
    Colon,
    LBrack,
    RBrack,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Eof => "end of input".to_string(),
            other => {
                let s = match other {
                    Tok::Zero => "0",
                    Tok::New => "new",
                    Tok::Tau => "tau",
                    Tok::Dot => ".",
                    Tok::Bar => "|",
                    Tok::Plus => "+",
                    Tok::Bang => "!",
                    Tok::Question => "?",
                    Tok::LParen => "(",
                    Tok::RParen => ")",
                    Tok::Lt => "<",
                    Tok::Gt => ">",
                    Tok::Colon => ":",
                    Tok::LBrack => "[",
                    Tok::RBrack => "]",
                    _ => unreachable!(),
                };
                format!("`{s}`")
            }
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize, usize)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => advance(1, &mut i, &mut col),
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                col += i - start;
                let tok = match word.as_str() {
                    "new" => Tok::New,
                    "tau" => Tok::Tau,
                    _ => Tok::Ident(word),
                };
                out.push((tok, l0, c0));
            }
            '0' if !chars.get(i + 1).is_some_and(|d| d.is_ascii_alphanumeric()) => {
                advance(1, &mut i, &mut col);
                out.push((Tok::Zero, l0, c0));
            }
            _ => {
                let tok = match c {
                    '.' => Tok::Dot,
                    '|' => Tok::Bar,
                    '+' => Tok::Plus,
                    '!' => Tok::Bang,
                    '?' => Tok::Question,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '<' => Tok::Lt,
                    '>' => Tok::Gt,
                    ':' => Tok::Colon,
                    '[' => Tok::LBrack,
                    ']' => Tok::RBrack,
                    other => {
                        return Err(ParseError {
                            line: l0,
                            col: c0,
                            message: format!("unexpected character `{other}`"),
                        })
                    }
                };
                advance(1, &mut i, &mut col);
                out.push((tok, l0, c0));
            }
        }
    }
    out.push((Tok::Eof, line, col));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    scope: Vec<(String, Name)>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let (_, line, col) = self.toks[self.pos];
        Err(ParseError { line, col, message: message.into() })
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {}, found {}", want.describe(), self.peek().describe()))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => self.error(format!("expected a name, found {}", other.describe())),
        }
    }

    fn resolve(&self, display: &str) -> Name {
        self.scope
            .iter()
            .rev()
            .find(|(s, _)| s == display)
            .map(|(_, n)| n.clone())
            .unwrap_or_else(|| Name::global(display))
    }

    fn process(&mut self) -> Result<Term, ParseError> {
        let mut items = vec![self.sequential()?];
        while *self.peek() == Tok::Bar {
            self.bump();
            items.push(self.sequential()?);
        }
        Ok(Term::par_all(items))
    }

    fn sequential(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Zero => {
                self.bump();
                Ok(Term::Nil)
            }
            Tok::LParen => {
                self.bump();
                let t = self.process()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Tok::New => self.restriction(),
            Tok::Bang => self.replication(),
            Tok::Ident(_) | Tok::Tau => {
                let (branches, hoisted) = self.choice()?;
                Ok(wrap_hoisted(Term::Choice(branches), hoisted))
            }
            other => self.error(format!("expected a process, found {}", other.describe())),
        }
    }

    fn restriction(&mut self) -> Result<Term, ParseError> {
        self.expect(Tok::New)?;
        let x = self.ident()?;
        let ty = if *self.peek() == Tok::Colon {
            self.bump();
            Some(self.type_expr()?)
        } else {
            None
        };
        self.expect(Tok::Dot)?;
        let name = Name::fresh(&x);
        self.scope.push((x, name.clone()));
        let body = self.process();
        self.scope.pop();
        Ok(Term::restrict(name, ty, body?))
    }

    fn replication(&mut self) -> Result<Term, ParseError> {
        self.expect(Tok::Bang)?;
        if *self.peek() == Tok::LParen {
            // `!(M)`: parenthesised choice
            self.bump();
            let at = self.pos;
            let (branches, hoisted) = self.choice()?;
            if !hoisted.is_empty() {
                self.pos = at;
                return self.error("a replicated choice cannot start with a nullary output `x!()`");
            }
            self.expect(Tok::RParen)?;
            return Ok(Term::Repl(branches));
        }
        let at = self.pos;
        let (branches, hoisted) = self.choice()?;
        if !hoisted.is_empty() {
            self.pos = at;
            return self.error("a replicated choice cannot start with a nullary output `x!()`");
        }
        Ok(Term::Repl(branches))
    }

    fn choice(&mut self) -> Result<(Vec<Branch>, Vec<Name>), ParseError> {
        let mut branches = Vec::new();
        let mut hoisted = Vec::new();
        loop {
            let (b, h) = self.guard()?;
            branches.push(b);
            hoisted.extend(h);
            if *self.peek() != Tok::Plus {
                break;
            }
            self.bump();
        }
        Ok((branches, hoisted))
    }

    fn guard(&mut self) -> Result<(Branch, Option<Name>), ParseError> {
        let mut hoisted = None;
        let mut bound = None;
        let prefix = match self.peek().clone() {
            Tok::Tau => {
                self.bump();
                Prefix::Tau
            }
            Tok::Ident(a) => {
                self.bump();
                let chan = self.resolve(&a);
                match (self.peek().clone(), self.peek_at(1).clone(), self.peek_at(2).clone()) {
                    (Tok::LParen, Tok::Ident(y), Tok::RParen) => {
                        self.pos += 3;
                        let var = Name::fresh(&y);
                        bound = Some((y, var.clone()));
                        Prefix::Input { chan, var }
                    }
                    (Tok::Lt, Tok::Ident(b), Tok::Gt) => {
                        self.pos += 3;
                        Prefix::Output { chan, msg: self.resolve(&b) }
                    }
                    (Tok::Question, Tok::LParen, Tok::RParen) => {
                        self.pos += 3;
                        Prefix::Input { chan, var: Name::fresh("_") }
                    }
                    (Tok::Bang, Tok::LParen, Tok::RParen) => {
                        self.pos += 3;
                        let dummy = Name::fresh("_");
                        hoisted = Some(dummy.clone());
                        Prefix::Output { chan, msg: dummy }
                    }
                    _ => return self.error(format!("expected `(x)`, `<x>`, `?()` or `!()` after `{a}`")),
                }
            }
            other => return self.error(format!("expected a prefix, found {}", other.describe())),
        };
        let cont = if *self.peek() == Tok::Dot {
            self.bump();
            if let Some(b) = bound.clone() {
                self.scope.push(b);
            }
            let c = self.continuation();
            if bound.is_some() {
                self.scope.pop();
            }
            c?
        } else {
            Term::Nil
        };
        Ok((Branch::new(prefix, cont), hoisted))
    }

    /// The process after a prefix dot: binds tighter than `+` and `|`.
    fn continuation(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Zero => {
                self.bump();
                Ok(Term::Nil)
            }
            Tok::LParen => {
                self.bump();
                let t = self.process()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Tok::New => self.restriction(),
            Tok::Bang => self.replication(),
            Tok::Ident(_) | Tok::Tau => {
                let (b, h) = self.guard()?;
                Ok(wrap_hoisted(Term::Choice(vec![b]), h))
            }
            other => self.error(format!("expected a process, found {}", other.describe())),
        }
    }

    fn type_expr(&mut self) -> Result<TypeExpr, ParseError> {
        let b = BaseTypeRef::named(&self.ident()?);
        if *self.peek() == Tok::LBrack {
            self.bump();
            let inner = self.type_expr()?;
            self.expect(Tok::RBrack)?;
            Ok(TypeExpr::channel(b, inner))
        } else {
            Ok(TypeExpr::only(b))
        }
    }
}

fn wrap_hoisted(t: Term, hoisted: impl IntoIterator<Item = Name>) -> Term {
    let hoisted: Vec<Name> = hoisted.into_iter().collect();
    hoisted.into_iter().rev().fold(t, |acc, x| Term::restrict(x, None, acc))
}

/// Parses a term. Binders are renamed to fresh, display-unique names.
pub fn parse(source: &str) -> Result<Term, ParseError> {
    parse_with_info(source).map(|o| o.term)
}

pub fn parse_with_info(source: &str) -> Result<ParseOutput, ParseError> {
    let mut p = Parser { toks: lex(source)?, pos: 0, scope: Vec::new() };
    let raw = p.process()?;
    if *p.peek() != Tok::Eof {
        return p.error(format!("unexpected {}", p.peek().describe()));
    }
    let (term, renaming) = raw.alpha_rename_fresh();
    let renamed = renaming
        .iter()
        .filter(|(old, new)| old.display() != new.display())
        .map(|(old, new)| (old.display().to_string(), new.display().to_string()))
        .collect();
    let mut free: Vec<String> = term.free_names().iter().map(|n| n.display().to_string()).collect();
    free.sort();
    Ok(ParseOutput { term, renamed, free })
}

/// Parses a type expression such as `t[u[v]]`.
pub fn parse_type(source: &str) -> Result<TypeExpr, ParseError> {
    let mut p = Parser { toks: lex(source)?, pos: 0, scope: Vec::new() };
    let ty = p.type_expr()?;
    if *p.peek() != Tok::Eof {
        return p.error(format!("unexpected {}", p.peek().describe()));
    }
    Ok(ty)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nil_and_errors() {
        assert_eq!(parse("0").unwrap(), Term::Nil);
        let e = parse("new . 0").unwrap_err();
        assert_eq!((e.line, e.col), (1, 5));
        assert!(parse("a(x) |").is_err());
        assert!(parse("a(x) @").is_err());
    }

    #[test]
    fn precedence() {
        // prefix > + > |
        let t = parse("a(x).b<x> + c(y) | d<e>").unwrap();
        let Term::Par(l, r) = &t else { panic!("{t:?}") };
        assert!(matches!(&**l, Term::Choice(bs) if bs.len() == 2));
        assert!(matches!(&**r, Term::Choice(bs) if bs.len() == 1));
        // new scopes to the right
        let t = parse("new x. a<x> | x(y)").unwrap();
        assert!(matches!(&t, Term::Restrict { body, .. } if matches!(**body, Term::Par(..))));
        assert!(t.free_names().iter().all(|n| n.display() == "a"));
    }

    #[test]
    fn nullary_sugar() {
        let t = parse("a?().b!().0").unwrap();
        let Term::Choice(bs) = &t else { panic!() };
        assert!(matches!(bs[0].prefix, Prefix::Input { .. }));
        assert!(matches!(bs[0].cont, Term::Restrict { .. }));
        let t = parse("a!() + b?()").unwrap();
        assert!(matches!(&t, Term::Restrict { body, .. } if matches!(**body, Term::Choice(ref bs) if bs.len() == 2)));
        let e = parse("!a!().0").unwrap_err();
        assert!(e.message.contains("replicated"));
    }

    #[test]
    fn annotations_and_types() {
        let t = parse("new x : t[u[v]]. x<y>").unwrap();
        let (_, ty) = &t.active_restrictions()[0];
        assert_eq!(ty.as_ref().unwrap().to_string(), "t[u[v]]");
        assert!(parse_type("t[").is_err());
    }

    #[test]
    fn duplicate_binders_renamed() {
        let out = parse_with_info("new a. new b. (a(x) | b(x))").unwrap();
        assert!(out.term.is_name_unique());
        assert_eq!(out.renamed, vec![("x".to_string(), "x1".to_string())]);
        let out = parse_with_info("c<d> | new c. c<d>").unwrap();
        assert!(out.term.is_name_unique());
        assert_eq!(out.free, vec!["c".to_string(), "d".to_string()]);
    }

    #[test]
    fn comments_and_primes() {
        let t = parse("// header\nnew t'. p<t'> // trailing\n").unwrap();
        assert_eq!(t.active_restrictions()[0].0.display(), "t'");
    }
}
