#![allow(dead_code)]

use mageo::expr::{Expr, Point, Var};
use mageo::ma::MAStructure;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A polynomial of total degree ≤ 2 with up to four terms.
pub fn random_poly(rng: &mut ChaCha8Rng) -> Expr {
    let terms = rng.gen_range(1..=4);
    Expr::sum((0..terms).map(|_| {
        let c = Expr::num((rng.gen_range(-2.0..2.0_f64) * 8.0).round() / 8.0);
        let deg = rng.gen_range(0..=2);
        (0..deg).fold(c, |acc, _| {
            Expr::mul(acc, Expr::var(Var::ALL[rng.gen_range(0..4)]))
        })
    }))
}

pub fn random_structure(rng: &mut ChaCha8Rng) -> MAStructure {
    MAStructure::new(
        random_poly(rng),
        random_poly(rng),
        random_poly(rng),
        random_poly(rng),
        random_poly(rng),
    )
}

pub fn random_point(rng: &mut ChaCha8Rng) -> Point {
    Point(std::array::from_fn(|_| rng.gen_range(-2.0..2.0)))
}

/// A polynomial in `x, y` of degree ≤ 3.
pub fn random_graph_fn(rng: &mut ChaCha8Rng) -> Expr {
    let terms = rng.gen_range(1..=4);
    Expr::sum((0..terms).map(|_| {
        let c = Expr::num(rng.gen_range(-2.0..2.0_f64));
        let deg = rng.gen_range(0..=3);
        (0..deg).fold(c, |acc, _| {
            Expr::mul(acc, Expr::var([Var::X, Var::Y][rng.gen_range(0..2)]))
        })
    }))
}

/// Finite-difference partial derivative.
pub fn fd(e: &Expr, v: Var, pt: &Point) -> f64 {
    let h = 1e-5;
    let mut a = *pt;
    let mut b = *pt;
    a.0[v.index()] += h;
    b.0[v.index()] -= h;
    (e.eval(&a).unwrap() - e.eval(&b).unwrap()) / (2.0 * h)
}
