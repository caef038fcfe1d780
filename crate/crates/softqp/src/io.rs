//! Text problem-file format: parsing (untrusted input) and writing.
//!
//! A problem file is a whitespace-separated token stream of keyed sections:
//!
//! ```text
//! n 2
//! p 1
//! Q
//! 1 0
//! 0 1
//! q
//! 0 0
//! A
//! 1 1
//! l
//! -inf
//! u
//! 2
//! alpha 10
//! ```
//!
//! `n` and `p` must appear before the array keys that depend on them; the
//! array keys `Q` (`n*n` reals, row-major), `q` (`n`), `A` (`p*n`,
//! row-major), `l` and `u` (`p` each) may then come in any order. Layout is
//! free — any whitespace separates tokens. `inf` / `-inf` (case-insensitive)
//! are legal only in `l` and `u`; NaN is never legal. The optional `alpha`
//! key (a positive real) marks the instance as soft. Writing uses shortest
//! round-trip float formatting, so write→parse reproduces values exactly.

use crate::linalg::{DenseMatrix, DenseVector};
use crate::problem::{ProblemError, QpProblem, SoftQpProblem};
use std::io::Write;
use thiserror::Error;

/// Cap on total stored reals (`n*n + p*n + 2p + n`); keeps hostile headers
/// from turning into gigabyte allocations.
pub const MAX_ELEMENTS: usize = 4_000_000;

/// Parse failure, carrying 1-based line/column of the offending token where
/// one exists.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("input ended while reading `{key}`: expected {expected} values, found {found}")]
    Truncated {
        key: String,
        expected: usize,
        found: usize,
    },
    #[error("missing required key `{key}`")]
    MissingKey { key: &'static str },
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Parse result: the hard problem plus the optional soft penalty weight.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedProblem {
    pub problem: QpProblem,
    pub alpha: Option<f64>,
}

impl ParsedProblem {
    /// Interprets the file as a soft problem, requiring `alpha` either from
    /// the file or from the caller (a CLI flag); the flag wins.
    pub fn to_soft(
        &self,
        alpha_override: Option<f64>,
    ) -> Option<Result<SoftQpProblem, ProblemError>> {
        alpha_override
            .or(self.alpha)
            .map(|alpha| SoftQpProblem::new(self.problem.clone(), alpha))
    }
}

#[derive(Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    line: usize,
    col: usize,
}

struct Tokens<'a> {
    rest: &'a str,
    line: usize,
    col: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            rest: text,
            line: 1,
            col: 1,
        }
    }

    fn next(&mut self) -> Option<Token<'a>> {
        loop {
            let mut chars = self.rest.char_indices();
            match chars.next() {
                None => return None,
                Some((_, c)) if c.is_whitespace() => {
                    if c == '\n' {
                        self.line += 1;
                        self.col = 1;
                    } else {
                        self.col += 1;
                    }
                    self.rest = &self.rest[c.len_utf8()..];
                }
                Some(_) => break,
            }
        }
        let end = self
            .rest
            .char_indices()
            .find(|(_, c)| c.is_whitespace())
            .map(|(i, _)| i)
            .unwrap_or(self.rest.len());
        let token = Token {
            text: &self.rest[..end],
            line: self.line,
            col: self.col,
        };
        self.col += self.rest[..end].chars().count();
        self.rest = &self.rest[end..];
        Some(token)
    }
}

fn syntax(tok: &Token<'_>, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line: tok.line,
        col: tok.col,
        msg: msg.into(),
    }
}

fn parse_count(tok: &Token<'_>, key: &str) -> Result<usize, ParseError> {
    tok.text.parse::<usize>().map_err(|_| {
        syntax(
            tok,
            format!(
                "expected a nonnegative integer for `{key}`, got `{}`",
                tok.text
            ),
        )
    })
}

fn parse_real(tok: &Token<'_>, key: &str, allow_inf: bool) -> Result<f64, ParseError> {
    let v: f64 = tok.text.parse().map_err(|_| {
        syntax(
            tok,
            format!("expected a real number for `{key}`, got `{}`", tok.text),
        )
    })?;
    if v.is_nan() {
        return Err(syntax(tok, format!("NaN is not a legal value for `{key}`")));
    }
    if v.is_infinite() && !allow_inf {
        return Err(syntax(
            tok,
            format!("infinite values are only legal in bounds, not `{key}`"),
        ));
    }
    Ok(v)
}

fn read_scalar<'a>(tokens: &mut Tokens<'a>, key: &'static str) -> Result<Token<'a>, ParseError> {
    tokens.next().ok_or(ParseError::Truncated {
        key: key.to_string(),
        expected: 1,
        found: 0,
    })
}

fn read_block(
    tokens: &mut Tokens<'_>,
    count: usize,
    key: &str,
    allow_inf: bool,
) -> Result<Vec<f64>, ParseError> {
    let mut out = Vec::with_capacity(count.min(MAX_ELEMENTS));
    for _ in 0..count {
        match tokens.next() {
            Some(t) => out.push(parse_real(&t, key, allow_inf)?),
            None => {
                return Err(ParseError::Truncated {
                    key: key.to_string(),
                    expected: count,
                    found: out.len(),
                })
            }
        }
    }
    Ok(out)
}

fn require_dims(
    n: Option<usize>,
    p: Option<usize>,
    tok: &Token<'_>,
) -> Result<(usize, usize), ParseError> {
    let n = n.ok_or_else(|| syntax(tok, format!("key `{}` appears before `n`", tok.text)))?;
    let p = p.ok_or_else(|| syntax(tok, format!("key `{}` appears before `p`", tok.text)))?;
    check_budget(tok, n, p)?;
    Ok((n, p))
}

fn reject_duplicate(taken: bool, tok: &Token<'_>) -> Result<(), ParseError> {
    if taken {
        Err(syntax(tok, format!("duplicate key `{}`", tok.text)))
    } else {
        Ok(())
    }
}

/// Parses a problem file. See the module docs for the grammar.
pub fn parse_problem(text: &str) -> Result<ParsedProblem, ParseError> {
    let mut tokens = Tokens::new(text);
    let mut n: Option<usize> = None;
    let mut p: Option<usize> = None;
    let mut q_mat: Option<Vec<f64>> = None;
    let mut q_vec: Option<Vec<f64>> = None;
    let mut a_mat: Option<Vec<f64>> = None;
    let mut lower: Option<Vec<f64>> = None;
    let mut upper: Option<Vec<f64>> = None;
    let mut alpha: Option<f64> = None;

    while let Some(tok) = tokens.next() {
        match tok.text {
            "n" => {
                reject_duplicate(n.is_some(), &tok)?;
                let t = read_scalar(&mut tokens, "n")?;
                n = Some(parse_count(&t, "n")?);
            }
            "p" => {
                reject_duplicate(p.is_some(), &tok)?;
                let t = read_scalar(&mut tokens, "p")?;
                p = Some(parse_count(&t, "p")?);
            }
            "Q" => {
                reject_duplicate(q_mat.is_some(), &tok)?;
                let (n, _) = require_dims(n, p, &tok)?;
                q_mat = Some(read_block(&mut tokens, n * n, "Q", false)?);
            }
            "q" => {
                reject_duplicate(q_vec.is_some(), &tok)?;
                let (n, _) = require_dims(n, p, &tok)?;
                q_vec = Some(read_block(&mut tokens, n, "q", false)?);
            }
            "A" => {
                reject_duplicate(a_mat.is_some(), &tok)?;
                let (n, p) = require_dims(n, p, &tok)?;
                a_mat = Some(read_block(&mut tokens, p * n, "A", false)?);
            }
            "l" => {
                reject_duplicate(lower.is_some(), &tok)?;
                let (_, p) = require_dims(n, p, &tok)?;
                lower = Some(read_block(&mut tokens, p, "l", true)?);
            }
            "u" => {
                reject_duplicate(upper.is_some(), &tok)?;
                let (_, p) = require_dims(n, p, &tok)?;
                upper = Some(read_block(&mut tokens, p, "u", true)?);
            }
            "alpha" => {
                reject_duplicate(alpha.is_some(), &tok)?;
                let t = read_scalar(&mut tokens, "alpha")?;
                let v = parse_real(&t, "alpha", false)?;
                if v <= 0.0 {
                    return Err(syntax(
                        &t,
                        format!("alpha must be positive, got `{}`", t.text),
                    ));
                }
                alpha = Some(v);
            }
            other => {
                return Err(syntax(&tok, format!("unknown key `{other}`")));
            }
        }
    }

    let n = n.ok_or(ParseError::MissingKey { key: "n" })?;
    let p = p.ok_or(ParseError::MissingKey { key: "p" })?;
    let q_mat = q_mat.ok_or(ParseError::MissingKey { key: "Q" })?;
    let q_vec = q_vec.ok_or(ParseError::MissingKey { key: "q" })?;
    let a_mat = a_mat.ok_or(ParseError::MissingKey { key: "A" })?;
    let lower = lower.ok_or(ParseError::MissingKey { key: "l" })?;
    let upper = upper.ok_or(ParseError::MissingKey { key: "u" })?;

    let build = || -> Result<QpProblem, ProblemError> {
        QpProblem::new(
            DenseMatrix::new(n, n, q_mat).expect("token counts and finiteness already enforced"),
            DenseVector::new(q_vec).expect("NaN already rejected"),
            DenseMatrix::new(p, n, a_mat).expect("token counts and finiteness already enforced"),
            DenseVector::new(lower).expect("NaN already rejected"),
            DenseVector::new(upper).expect("NaN already rejected"),
        )
    };
    Ok(ParsedProblem {
        problem: build()?,
        alpha,
    })
}

fn check_budget(tok: &Token<'_>, n: usize, p: usize) -> Result<(), ParseError> {
    // Every step is checked: header values are attacker-controlled and may
    // sit anywhere in the usize range, so even `2 * p` could overflow.
    let total = n
        .checked_mul(n)
        .and_then(|nn| p.checked_mul(n).and_then(|pn| nn.checked_add(pn)))
        .and_then(|s| {
            p.checked_mul(2)
                .and_then(|pp| pp.checked_add(n))
                .and_then(|b| s.checked_add(b))
        });
    match total {
        Some(t) if t <= MAX_ELEMENTS => Ok(()),
        _ => Err(syntax(
            tok,
            format!("problem dimensions too large (n={n}, p={p})"),
        )),
    }
}

fn write_token(out: &mut impl Write, v: f64) -> std::io::Result<()> {
    if v == f64::INFINITY {
        write!(out, "inf")
    } else if v == f64::NEG_INFINITY {
        write!(out, "-inf")
    } else {
        // Shortest round-trip formatting: parse(write(v)) == v bit-for-bit.
        write!(out, "{v}")
    }
}

fn write_row(out: &mut impl Write, row: &[f64]) -> std::io::Result<()> {
    for (k, &v) in row.iter().enumerate() {
        if k > 0 {
            write!(out, " ")?;
        }
        write_token(out, v)?;
    }
    writeln!(out)
}

/// Writes a problem in the file format; `alpha` marks it soft. Output is
/// deterministic and parses back to exactly the same values.
pub fn write_problem(
    out: &mut impl Write,
    problem: &QpProblem,
    alpha: Option<f64>,
) -> std::io::Result<()> {
    let n = problem.num_vars();
    let p = problem.num_constraints();
    writeln!(out, "n {n}")?;
    writeln!(out, "p {p}")?;
    writeln!(out, "Q")?;
    for i in 0..n {
        write_row(out, problem.hessian().row(i))?;
    }
    writeln!(out, "q")?;
    write_row(out, problem.linear().as_slice())?;
    writeln!(out, "A")?;
    for i in 0..p {
        write_row(out, problem.constraints().row(i))?;
    }
    writeln!(out, "l")?;
    write_row(out, problem.lower().as_slice())?;
    writeln!(out, "u")?;
    write_row(out, problem.upper().as_slice())?;
    if let Some(a) = alpha {
        write!(out, "alpha ")?;
        write_token(out, a)?;
        writeln!(out)?;
    }
    Ok(())
}

/// Renders a problem to a string (thin wrapper over [`write_problem`]).
pub fn problem_to_string(problem: &QpProblem, alpha: Option<f64>) -> String {
    let mut buf = Vec::new();
    write_problem(&mut buf, problem, alpha).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("format emits ASCII only")
}
