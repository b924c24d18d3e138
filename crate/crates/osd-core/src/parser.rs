//! Problem and substitution file parsing.
//!
//! Problem files are line oriented, UTF-8, with `#` comments. Symmetric
//! lines are `X = Y`, `X = Y + Z`, `X = Y * Z`; asymmetric lines use `=d`
//! and allow the compound on either side (`X =d Y * Z`, `Y + Z =d X`),
//! with the right side carrying the irreducibility restriction. A file
//! must be uniformly symmetric or uniformly asymmetric.
//!
//! Substitution files hold one `X -> term` binding per line with fully
//! parenthesized terms, or `X -> [slp:Nk] * Y` chains followed by an
//! `SLP:` section of productions `Nk -> a` / `Nk -> Ni Nj`. Production
//! names `N<digits>` live in their own namespace, so label variables should
//! not use such names.

use std::collections::HashMap;

use thiserror::Error;

use crate::asym::{AsymSystem, Side};
use crate::slp::{SlpId, SlpStore};
use crate::subst::Substitution;
use crate::system::{Rhs, StandardSystem};
use crate::term::{Op, Term};
use crate::vars::{VarId, VarTable};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}, column {col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

fn err<T>(line: usize, col: usize, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { line, col, msg: msg.into() })
}

/// A parsed problem: one uniform kind per file.
#[derive(Debug)]
pub enum Problem {
    Symmetric(StandardSystem),
    Asymmetric(AsymSystem),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok<'a> {
    Ident(&'a str),
    Plus,
    Star,
    Eq,
    EqAsym,
    LParen,
    RParen,
    Arrow,
}

struct Lexer<'a> {
    line: usize,
    toks: Vec<(usize, Tok<'a>)>,
    pos: usize,
}

fn lex<'a>(line_no: usize, line: &'a str, col_offset: usize) -> Result<Lexer<'a>, ParseError> {
    let mut toks = Vec::new();
    let bytes = line.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let col = col_offset + i + 1;
        match c {
            '#' => break,
            c if c.is_whitespace() => i += 1,
            '+' => {
                toks.push((col, Tok::Plus));
                i += 1;
            }
            '*' => {
                toks.push((col, Tok::Star));
                i += 1;
            }
            '(' => {
                toks.push((col, Tok::LParen));
                i += 1;
            }
            ')' => {
                toks.push((col, Tok::RParen));
                i += 1;
            }
            '-' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    toks.push((col, Tok::Arrow));
                    i += 2;
                } else {
                    return err(line_no, col, "expected '->'");
                }
            }
            '=' => {
                if bytes.get(i + 1) == Some(&b'd')
                    && !bytes
                        .get(i + 2)
                        .map(|b| (*b as char).is_ascii_alphanumeric() || *b == b'_')
                        .unwrap_or(false)
                {
                    toks.push((col, Tok::EqAsym));
                    i += 2;
                } else {
                    toks.push((col, Tok::Eq));
                    i += 1;
                }
            }
            // A leading underscore is reserved for solver-created
            // variables; those appear in substitution files only.
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() {
                    let c = bytes[i] as char;
                    if c.is_ascii_alphanumeric() || c == '_' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                toks.push((col, Tok::Ident(&line[start..i])));
            }
            c if c.is_ascii_digit() => {
                return err(line_no, col, "constants are not part of the theory");
            }
            other => return err(line_no, col, format!("unexpected character '{other}'")),
        }
    }
    Ok(Lexer { line: line_no, toks, pos: 0 })
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<Tok<'a>> {
        self.toks.get(self.pos).map(|(_, t)| *t)
    }

    fn col(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|(c, _)| *c)
            .unwrap_or(1)
    }

    fn next(&mut self) -> Option<Tok<'a>> {
        let t = self.peek();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect_ident(&mut self) -> Result<&'a str, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(s)
            }
            Some(Tok::LParen) => err(
                self.line,
                self.col(),
                "uninterpreted function symbols are not part of the theory",
            ),
            _ => err(self.line, self.col(), "expected an identifier"),
        }
    }

    fn done(&self) -> bool {
        self.pos == self.toks.len()
    }
}

type Shallow = (Option<Op>, String, Option<String>);

fn expect_user_ident(lx: &mut Lexer<'_>) -> Result<String, ParseError> {
    let col = lx.col();
    let name = lx.expect_ident()?;
    if name.starts_with('_') {
        return err(lx.line, col, "identifiers starting with '_' are reserved");
    }
    Ok(name.to_string())
}

// One side of a standard-form line: `X`, `X + Y`, or `X * Y`.
fn parse_shallow(lx: &mut Lexer<'_>) -> Result<Shallow, ParseError> {
    let first = expect_user_ident(lx)?;
    match lx.peek() {
        Some(Tok::Plus) => {
            lx.next();
            let second = expect_user_ident(lx)?;
            Ok((Some(Op::Plus), first, Some(second)))
        }
        Some(Tok::Star) => {
            lx.next();
            let second = expect_user_ident(lx)?;
            Ok((Some(Op::Times), first, Some(second)))
        }
        Some(Tok::LParen) => err(
            lx.line,
            lx.col(),
            "uninterpreted function symbols are not part of the theory",
        ),
        _ => Ok((None, first, None)),
    }
}

/// Parses a problem file.
pub fn parse_problem(text: &str) -> Result<Problem, ParseError> {
    let mut symmetric: Vec<(usize, Shallow, Shallow)> = Vec::new();
    let mut asymmetric: Vec<(usize, Shallow, Shallow)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let mut lx = lex(line_no, raw, 0)?;
        if lx.done() {
            continue;
        }
        let left = parse_shallow(&mut lx)?;
        let asym = match lx.next() {
            Some(Tok::Eq) => false,
            Some(Tok::EqAsym) => true,
            _ => return err(line_no, lx.col(), "expected '=' or '=d'"),
        };
        let right = parse_shallow(&mut lx)?;
        if !lx.done() {
            return err(line_no, lx.col(), "trailing input after equation");
        }
        if asym {
            asymmetric.push((line_no, left, right));
        } else {
            symmetric.push((line_no, left, right));
        }
    }

    match (symmetric.is_empty(), asymmetric.is_empty()) {
        (false, false) => {
            let line = asymmetric[0].0.max(symmetric[0].0);
            err(line, 1, "mixing '=' and '=d' equations in one file")
        }
        (true, true) => err(1, 1, "empty problem"),
        (false, true) => {
            let mut sys = StandardSystem::new(VarTable::new());
            for (line_no, (lop, la, _), right) in symmetric {
                if lop.is_some() {
                    return err(line_no, 1, "symmetric equations need a variable on the left");
                }
                let lhs = sys.vars.intern(&la);
                let rhs = match right {
                    (None, a, _) => {
                        let v = sys.vars.intern(&a);
                        if v == lhs {
                            return err(line_no, 1, "left side equals right side");
                        }
                        Rhs::Var(v)
                    }
                    (Some(Op::Plus), a, Some(b)) => {
                        Rhs::Sum(sys.vars.intern(&a), sys.vars.intern(&b))
                    }
                    (Some(Op::Times), a, Some(b)) => {
                        Rhs::Prod(sys.vars.intern(&a), sys.vars.intern(&b))
                    }
                    _ => unreachable!(),
                };
                sys.push(lhs, rhs);
            }
            Ok(Problem::Symmetric(sys))
        }
        (true, false) => {
            let mut sys = AsymSystem::new(VarTable::new());
            for (line_no, left, right) in asymmetric {
                let mut to_side = |(op, a, b): Shallow| match (op, b) {
                    (None, _) => Side::Var(sys.vars.intern(&a)),
                    (Some(Op::Plus), Some(b)) => {
                        Side::Sum(sys.vars.intern(&a), sys.vars.intern(&b))
                    }
                    (Some(Op::Times), Some(b)) => {
                        Side::Prod(sys.vars.intern(&a), sys.vars.intern(&b))
                    }
                    _ => unreachable!(),
                };
                let l = to_side(left);
                let r = to_side(right);
                if l.as_var().is_none() && r.as_var().is_none() {
                    return err(
                        line_no,
                        1,
                        "one side of an asymmetric equation must be a variable",
                    );
                }
                if let (Side::Var(a), Side::Var(b)) = (l, r) {
                    if a == b {
                        return err(line_no, 1, "left side equals right side");
                    }
                }
                sys.push(l, r);
            }
            Ok(Problem::Asymmetric(sys))
        }
    }
}

// Fully parenthesized terms: operand (op operand)?, operand = ident | (expr).
fn parse_term(lx: &mut Lexer<'_>, vars: &mut VarTable) -> Result<Term, ParseError> {
    let first = parse_operand(lx, vars)?;
    match lx.peek() {
        Some(Tok::Plus) => {
            lx.next();
            let second = parse_operand(lx, vars)?;
            Ok(Term::plus(first, second))
        }
        Some(Tok::Star) => {
            lx.next();
            let second = parse_operand(lx, vars)?;
            Ok(Term::times(first, second))
        }
        _ => Ok(first),
    }
}

fn parse_operand(lx: &mut Lexer<'_>, vars: &mut VarTable) -> Result<Term, ParseError> {
    match lx.next() {
        Some(Tok::Ident(s)) => Ok(Term::var(vars.intern(s))),
        Some(Tok::LParen) => {
            let inner = parse_term(lx, vars)?;
            match lx.next() {
                Some(Tok::RParen) => Ok(inner),
                _ => err(lx.line, lx.col(), "expected ')'"),
            }
        }
        _ => err(lx.line, lx.col(), "expected an identifier or '('"),
    }
}

fn nonterminal_id(s: &str) -> Option<u32> {
    s.strip_prefix('N').and_then(|rest| rest.parse::<u32>().ok())
}

/// Parses a substitution file against an existing variable registry. New
/// names are interned, so verification reports them as unbound variables
/// rather than failing here.
pub fn parse_substitution(text: &str, vars: &mut VarTable) -> Result<Substitution, ParseError> {
    let mut subst = Substitution::new();
    let mut store = SlpStore::new();
    let mut used_store = false;
    let mut raw_ids: HashMap<u32, SlpId> = HashMap::new();
    let mut pending_chains: Vec<(VarId, u32, VarId)> = Vec::new();
    let mut in_slp = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if trimmed == "SLP:" {
            in_slp = true;
            continue;
        }
        if in_slp {
            let mut lx = lex(line_no, raw, 0)?;
            let head = lx.expect_ident()?;
            let Some(head_id) = nonterminal_id(head) else {
                return err(line_no, 1, "expected a production head like 'N3'");
            };
            if lx.next() != Some(Tok::Arrow) {
                return err(line_no, lx.col(), "expected '->'");
            }
            let first = lx.expect_ident()?;
            let id = if lx.done() {
                store.atom(vars.intern(first))
            } else {
                let second = lx.expect_ident()?;
                let (Some(a), Some(b)) = (nonterminal_id(first), nonterminal_id(second)) else {
                    return err(line_no, 1, "expected two nonterminals like 'N1 N2'");
                };
                let (Some(&a), Some(&b)) = (raw_ids.get(&a), raw_ids.get(&b)) else {
                    return err(line_no, 1, "production references an id not yet defined");
                };
                store.concat(a, b)
            };
            if !lx.done() {
                return err(line_no, lx.col(), "trailing input after production");
            }
            raw_ids.insert(head_id, id);
            used_store = true;
            continue;
        }

        // Binding line: split at '->' textually so chain syntax is handled
        // before the lexer sees the brackets.
        let Some((head, rest)) = trimmed.split_once("->") else {
            return err(line_no, 1, "expected 'X -> <term>'");
        };
        let name = head.trim();
        let mut lx = lex(line_no, name, 0)?;
        let ident = lx.expect_ident()?;
        if !lx.done() {
            return err(line_no, 1, "binding head must be a single variable");
        }
        let v = vars.intern(ident);
        let rest = rest.trim();
        if let Some(spec) = rest.strip_prefix("[slp:N") {
            let Some((id_str, tail)) = spec.split_once(']') else {
                return err(line_no, 1, "expected '[slp:Nk] * Y'");
            };
            let Ok(raw_id) = id_str.parse::<u32>() else {
                return err(line_no, 1, "expected a program id");
            };
            let Some(tail) = tail.trim().strip_prefix('*') else {
                return err(line_no, 1, "expected '* <variable>' after the program");
            };
            let tail_var = vars.intern(tail.trim());
            pending_chains.push((v, raw_id, tail_var));
            continue;
        }
        let mut lx = lex(line_no, rest, raw.len() - rest.len())?;
        let t = parse_term(&mut lx, vars)?;
        if !lx.done() {
            return err(line_no, lx.col(), "trailing input after binding");
        }
        subst.bind(v, t);
    }

    for (v, raw_id, tail) in pending_chains {
        let Some(&label) = raw_ids.get(&raw_id) else {
            return err(1, 1, format!("binding references undefined program N{raw_id}"));
        };
        subst.bind_chain(v, label, tail);
        used_store = true;
    }
    if used_store {
        subst.store = Some(store);
    }
    Ok(subst)
}
