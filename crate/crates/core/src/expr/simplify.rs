//! Rewriting to a polynomial normal form.
//!
//! An expression is read as a Laurent polynomial with real coefficients over
//! "atoms": the four variables, function applications with normalized
//! arguments, and negative powers of non-monomial polynomials. Constants are
//! folded, like monomials are collected, and even powers of `sqrt(u)` are
//! reduced to powers of `u`. Anything past that (trigonometric identities,
//! rational-function cancellation) is left for numeric zero testing.

use std::collections::BTreeMap;

use super::{Expr, Func};

/// Terms beyond this count are kept as an opaque product instead of expanded.
const MAX_TERMS: usize = 4096;

/// Sums whose magnitude falls below this fraction of their largest addend are
/// treated as exact cancellations of rounded literals.
const CANCEL_REL: f64 = 1e-14;

type Mono = BTreeMap<String, i32>;

#[derive(Debug, Clone, Copy)]
struct Coef {
    value: f64,
    scale: f64,
}

#[derive(Debug, Clone, Default)]
struct Poly {
    terms: BTreeMap<Mono, Coef>,
}

impl Poly {
    fn constant(v: f64) -> Poly {
        let mut p = Poly::default();
        p.push(Mono::new(), v);
        p
    }

    fn monomial(key: String, exp: i32) -> Poly {
        let mut m = Mono::new();
        m.insert(key, exp);
        let mut p = Poly::default();
        p.push(m, 1.0);
        p
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn push(&mut self, mono: Mono, v: f64) {
        if v == 0.0 {
            return;
        }
        match self.terms.get_mut(&mono) {
            Some(c) => {
                let scale = c.scale.max(v.abs()).max(c.value.abs());
                let sum = c.value + v;
                if sum.abs() <= CANCEL_REL * scale {
                    self.terms.remove(&mono);
                } else {
                    *c = Coef { value: sum, scale };
                }
            }
            None => {
                self.terms.insert(
                    mono,
                    Coef {
                        value: v,
                        scale: v.abs(),
                    },
                );
            }
        }
    }

    fn add(mut self, other: &Poly, sign: f64) -> Poly {
        for (m, c) in &other.terms {
            self.push(m.clone(), sign * c.value);
        }
        self
    }

    fn scale(mut self, k: f64) -> Poly {
        if k == 0.0 {
            return Poly::default();
        }
        for c in self.terms.values_mut() {
            c.value *= k;
            c.scale *= k.abs();
        }
        self
    }

    fn single(&self) -> Option<(&Mono, f64)> {
        if self.terms.len() == 1 {
            self.terms.iter().next().map(|(m, c)| (m, c.value))
        } else {
            None
        }
    }

    fn as_constant(&self) -> Option<f64> {
        match self.terms.len() {
            0 => Some(0.0),
            1 => self.terms.get(&Mono::new()).map(|c| c.value),
            _ => None,
        }
    }
}

fn mono_mul(a: &Mono, b: &Mono) -> Mono {
    let mut out = a.clone();
    for (k, e) in b {
        let entry = out.entry(k.clone()).or_insert(0);
        *entry += e;
        if *entry == 0 {
            out.remove(k);
        }
    }
    out
}

fn mono_pow(a: &Mono, n: i32) -> Mono {
    a.iter().map(|(k, e)| (k.clone(), e * n)).collect()
}

#[derive(Default)]
struct Normalizer {
    atoms: BTreeMap<String, Expr>,
}

impl Normalizer {
    fn atom(&mut self, base: Expr, exp: i32) -> Poly {
        let key = base.to_string();
        self.atoms.entry(key.clone()).or_insert(base);
        Poly::monomial(key, exp)
    }

    fn poly_of(&mut self, e: &Expr) -> Poly {
        match e {
            Expr::Num(v) => Poly::constant(*v),
            Expr::Var(v) => self.atom(Expr::Var(*v), 1),
            Expr::Neg(a) => self.poly_of(a).scale(-1.0),
            Expr::Add(a, b) => {
                let pb = self.poly_of(b);
                self.poly_of(a).add(&pb, 1.0)
            }
            Expr::Sub(a, b) => {
                let pb = self.poly_of(b);
                self.poly_of(a).add(&pb, -1.0)
            }
            Expr::Mul(a, b) => {
                let pa = self.poly_of(a);
                let pb = self.poly_of(b);
                self.mul(&pa, &pb)
            }
            Expr::Div(a, b) => {
                let pa = self.poly_of(a);
                let pb = self.poly_of(b);
                let inv = self.pow(&pb, -1);
                match inv {
                    Some(inv) => self.mul(&pa, &inv),
                    None => {
                        let opaque = Expr::Div(Box::new(self.to_expr(&pa)), Box::new(Expr::zero()));
                        self.atom(opaque, 1)
                    }
                }
            }
            Expr::Pow(a, n) => {
                let pa = self.poly_of(a);
                match self.pow(&pa, *n) {
                    Some(p) => p,
                    None => {
                        let opaque = Expr::Pow(Box::new(self.to_expr(&pa)), *n);
                        self.atom(opaque, 1)
                    }
                }
            }
            Expr::Func(f, a) => {
                let inner = self.poly_of(a);
                if let Some(v) = inner.as_constant() {
                    if let Some(out) = f.apply(v) {
                        return Poly::constant(out);
                    }
                }
                let arg = self.to_expr(&inner);
                self.atom(Expr::Func(*f, Box::new(arg)), 1)
            }
        }
    }

    fn mul(&mut self, a: &Poly, b: &Poly) -> Poly {
        if a.terms.len() * b.terms.len() > MAX_TERMS {
            let opaque = Expr::Mul(Box::new(self.to_expr(a)), Box::new(self.to_expr(b)));
            return self.atom(opaque, 1);
        }
        let mut out = Poly::default();
        for (ma, ca) in &a.terms {
            for (mb, cb) in &b.terms {
                out.push(mono_mul(ma, mb), ca.value * cb.value);
            }
        }
        self.reduce_sqrt(out)
    }

    /// `None` only for negative powers of the zero polynomial.
    fn pow(&mut self, a: &Poly, n: i32) -> Option<Poly> {
        if n == 0 {
            return Some(Poly::constant(1.0));
        }
        if n < 0 {
            if a.is_zero() {
                return None;
            }
            if let Some((m, c)) = a.single() {
                let mut p = Poly::default();
                p.push(mono_pow(m, n), c.powi(n));
                return Some(self.reduce_sqrt(p));
            }
            let base = self.to_expr(a);
            return Some(self.atom(base, n));
        }
        let mut acc = a.clone();
        for _ in 1..n {
            if acc.terms.len() * a.terms.len() > MAX_TERMS {
                let base = self.to_expr(a);
                return Some(self.atom(base, n));
            }
            acc = self.mul(&acc, a);
        }
        Some(acc)
    }

    /// Rewrites `sqrt(u)^(2k + r)` as `u^k * sqrt(u)^r`.
    fn reduce_sqrt(&mut self, mut p: Poly) -> Poly {
        for _ in 0..8 {
            let target = p.terms.iter().find_map(|(m, c)| {
                m.iter().find_map(|(k, e)| match self.atoms.get(k) {
                    Some(Expr::Func(Func::Sqrt, inner)) if e.abs() >= 2 => {
                        Some((m.clone(), *c, k.clone(), *e, (**inner).clone()))
                    }
                    _ => None,
                })
            });
            let Some((mono, coef, key, exp, inner)) = target else {
                return p;
            };
            p.terms.remove(&mono);
            let half = exp / 2;
            let mut rest = mono.clone();
            let rem = exp - 2 * half;
            if rem == 0 {
                rest.remove(&key);
            } else {
                rest.insert(key, rem);
            }
            let inner_poly = self.poly_of(&inner);
            let lifted = self
                .pow(&inner_poly, half)
                .unwrap_or_else(|| Poly::monomial(inner.to_string(), half));
            let mut replacement = Poly::default();
            for (m, c) in &lifted.terms {
                replacement.push(mono_mul(&rest, m), coef.value * c.value);
            }
            p = p.add(&replacement, 1.0);
        }
        p
    }

    fn to_expr(&self, p: &Poly) -> Expr {
        let mut out: Option<Expr> = None;
        for (mono, c) in &p.terms {
            let magnitude = c.value.abs();
            let lead = (magnitude != 1.0 || mono.is_empty()).then_some(Expr::Num(magnitude));
            let factors = lead.into_iter().chain(
                mono.iter()
                    .map(|(k, e)| Expr::pow(self.atoms[k].clone(), *e)),
            );
            let term = factors
                .reduce(|prev, f| Expr::Mul(Box::new(prev), Box::new(f)))
                .unwrap_or_else(Expr::one);
            let negative = c.value < 0.0;
            out = Some(match out {
                None if negative => Expr::neg(term),
                None => term,
                Some(prev) if negative => Expr::Sub(Box::new(prev), Box::new(term)),
                Some(prev) => Expr::Add(Box::new(prev), Box::new(term)),
            });
        }
        out.unwrap_or_else(Expr::zero)
    }
}

/// Rewrites `e` into polynomial normal form.
pub fn simplify(e: &Expr) -> Expr {
    let mut n = Normalizer::default();
    let p = n.poly_of(e);
    n.to_expr(&p)
}

/// Whether the normal form of `e` is the zero polynomial.
pub(crate) fn normalizes_to_zero(e: &Expr) -> bool {
    Normalizer::default().poly_of(e).is_zero()
}
