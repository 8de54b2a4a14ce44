//! Module expressions: `N`, `M(4)`, `M(4)+N^2`, `ss(5)`, `exp(5,1)`,
//! `def(5; s2=1, s4=2)` or `def(5; s=(1,0,2,0))`.
//!
//! Deformation parameters are field elements written as integers: the base-`p`
//! digits of the value are the coordinates in the power basis, lowest first.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::displayzoo::{
    deformation_display, direct_sum, expected_module, module_m, module_n, supersingular_module, DeformationForm,
    DeformationPoint,
};
use crate::error::{Error, Result};
use crate::fcrystal::DieudonneDisplay;
use crate::wittring::RingContext;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Params {
    /// `sK=v` pairs.
    Named(Vec<(u32, u64)>),
    /// The full vector in coordinate order.
    Vector(Vec<u64>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModuleExpr {
    N,
    M(u32),
    Supersingular(u32),
    Expected { n: u32, j: u32 },
    Deformation { n: u32, params: Params },
    Sum(Vec<ModuleExpr>),
    Power(Box<ModuleExpr>, u32),
}

impl ModuleExpr {
    /// Half the rank, without building anything.
    pub fn half_rank(&self) -> u32 {
        match self {
            ModuleExpr::N => 1,
            ModuleExpr::M(m) => *m,
            ModuleExpr::Supersingular(n) | ModuleExpr::Expected { n, .. } | ModuleExpr::Deformation { n, .. } => *n,
            ModuleExpr::Sum(parts) => parts.iter().map(ModuleExpr::half_rank).sum(),
            ModuleExpr::Power(e, r) => e.half_rank() * r,
        }
    }

    pub fn build(&self, ctx: &Arc<RingContext>, form: DeformationForm) -> Result<DieudonneDisplay> {
        match self {
            ModuleExpr::N => Ok(module_n(ctx)),
            ModuleExpr::M(m) => module_m(ctx, *m),
            ModuleExpr::Supersingular(n) => supersingular_module(ctx, *n),
            ModuleExpr::Expected { n, j } => expected_module(ctx, *n, *j),
            ModuleExpr::Deformation { n, params } => deformation_display(ctx, &self::point(ctx, *n, params)?, form),
            ModuleExpr::Sum(parts) => {
                let mut it = parts.iter();
                let first = it
                    .next()
                    .ok_or_else(|| Error::Parse("empty sum".into()))?
                    .build(ctx, form)?;
                it.try_fold(first, |acc, e| direct_sum(&acc, &e.build(ctx, form)?))
            }
            ModuleExpr::Power(e, r) => {
                if *r == 0 {
                    return Err(Error::Parse("exponent must be ≥ 1".into()));
                }
                let base = e.build(ctx, form)?;
                (1..*r).try_fold(base.clone(), |acc, _| direct_sum(&acc, &base))
            }
        }
    }
}

/// The deformation point named by `params`.
pub fn point(ctx: &RingContext, n: u32, params: &Params) -> Result<DeformationPoint> {
    let f = ctx.field();
    let value = |v: u64| {
        f.from_index(v)
            .map_err(|_| Error::InvalidPoint(format!("{v} is not an element of a field of size {}", f.size())))
    };
    match params {
        Params::Named(pairs) => {
            let assignments = pairs
                .iter()
                .map(|&(k, v)| Ok((k, value(v)?)))
                .collect::<Result<Vec<_>>>()?;
            DeformationPoint::from_assignments(ctx, n, &assignments)
        }
        Params::Vector(vs) => DeformationPoint::new(n, vs.iter().map(|&v| value(v)).collect::<Result<_>>()?),
    }
}

impl fmt::Display for ModuleExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModuleExpr::N => f.write_str("N"),
            ModuleExpr::M(m) => write!(f, "M({m})"),
            ModuleExpr::Supersingular(n) => write!(f, "ss({n})"),
            ModuleExpr::Expected { n, j } => write!(f, "exp({n},{j})"),
            ModuleExpr::Deformation { n, params } => match params {
                Params::Named(p) if p.is_empty() => write!(f, "def({n})"),
                Params::Named(p) => {
                    let parts: Vec<String> = p.iter().map(|(k, v)| format!("s{k}={v}")).collect();
                    write!(f, "def({n}; {})", parts.join(","))
                }
                Params::Vector(v) => {
                    let parts: Vec<String> = v.iter().map(ToString::to_string).collect();
                    write!(f, "def({n}; s=({}))", parts.join(","))
                }
            },
            ModuleExpr::Sum(parts) => {
                let parts: Vec<String> = parts.iter().map(ToString::to_string).collect();
                f.write_str(&parts.join("+"))
            }
            ModuleExpr::Power(e, r) => match **e {
                ModuleExpr::Sum(_) => write!(f, "({e})^{r}"),
                _ => write!(f, "{e}^{r}"),
            },
        }
    }
}

impl FromStr for ModuleExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser {
            chars: s.chars().filter(|c| !c.is_whitespace()).collect(),
            pos: 0,
        };
        let e = p.sum()?;
        if p.pos != p.chars.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn error(&self, what: &str) -> Error {
        let rest: String = self.chars[self.pos.min(self.chars.len())..].iter().collect();
        Error::Parse(format!("{what} at position {} (remaining {rest:?})", self.pos))
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected '{c}'")))
        }
    }

    fn keyword(&mut self, word: &str) -> bool {
        let w: Vec<char> = word.chars().collect();
        if self.chars[self.pos..].starts_with(&w) {
            self.pos += w.len();
            true
        } else {
            false
        }
    }

    fn number<T: FromStr>(&mut self) -> Result<T> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse().map_err(|_| {
            self.pos = start;
            self.error("expected a number")
        })
    }

    fn sum(&mut self) -> Result<ModuleExpr> {
        let mut parts = vec![self.power()?];
        while self.eat('+') {
            parts.push(self.power()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().expect("one part")
        } else {
            ModuleExpr::Sum(parts)
        })
    }

    fn power(&mut self) -> Result<ModuleExpr> {
        let base = self.atom()?;
        if self.eat('^') {
            let r = self.number()?;
            if r == 0 {
                return Err(self.error("exponent must be ≥ 1"));
            }
            return Ok(ModuleExpr::Power(Box::new(base), r));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<ModuleExpr> {
        if self.eat('(') {
            let e = self.sum()?;
            self.expect(')')?;
            return Ok(e);
        }
        if self.keyword("M(") {
            let m = self.number()?;
            self.expect(')')?;
            return Ok(ModuleExpr::M(m));
        }
        if self.keyword("ss(") {
            let n = self.number()?;
            self.expect(')')?;
            return Ok(ModuleExpr::Supersingular(n));
        }
        if self.keyword("exp(") {
            let n = self.number()?;
            self.expect(',')?;
            let j = self.number()?;
            self.expect(')')?;
            return Ok(ModuleExpr::Expected { n, j });
        }
        if self.keyword("def(") {
            let n = self.number()?;
            let params = if self.eat(';') {
                self.params()?
            } else {
                Params::Named(vec![])
            };
            self.expect(')')?;
            return Ok(ModuleExpr::Deformation { n, params });
        }
        if self.eat('N') {
            return Ok(ModuleExpr::N);
        }
        Err(self.error("expected N, M(m), ss(n), exp(n,j), def(n; …) or a parenthesized sum"))
    }

    fn params(&mut self) -> Result<Params> {
        if self.keyword("s=(") {
            let mut values = vec![self.number()?];
            while self.eat(',') {
                values.push(self.number()?);
            }
            self.expect(')')?;
            return Ok(Params::Vector(values));
        }
        let mut pairs = Vec::new();
        loop {
            self.expect('s')?;
            let k = self.number()?;
            self.expect('=')?;
            let v = self.number()?;
            if pairs.iter().any(|(j, _)| *j == k) {
                return Err(self.error(&format!("s{k} assigned twice")));
            }
            pairs.push((k, v));
            if !self.eat(',') {
                break;
            }
        }
        Ok(Params::Named(pairs))
    }
}
