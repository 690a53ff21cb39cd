//! Exact sign certification of rational polynomials on closed intervals.
//!
//! Distinct real roots are counted with a Sturm chain of the square-free
//! part, and the interval is bisected until every piece either holds no
//! root (one interior sample decides its sign) or holds exactly one root
//! with non-vanishing endpoint values (the endpoints decide both sides).

use num_traits::{One, Signed, Zero};

use crate::poly::Polynomial;
use crate::scalar::Rational;

type QPoly = Polynomial<Rational>;

/// Returns `None` when `p(x) <= 0` for all `x` in `[lo, hi]`, otherwise a point where `p > 0`.
pub fn find_positive_point(p: &QPoly, lo: &Rational, hi: &Rational) -> Option<Rational> {
    assert!(lo <= hi, "empty interval");
    if p.is_zero() {
        return None;
    }
    for x in [lo, hi] {
        if p.eval(x).is_positive() {
            return Some(x.clone());
        }
    }
    if lo == hi {
        return None;
    }
    let mut q = p.square_free();
    for x in [lo, hi] {
        if q.eval(x).is_zero() {
            let linear = QPoly::linear(-x.clone(), Rational::one());
            q = q.div_rem(&linear).0;
        }
    }
    let chain = SturmChain::new(&q);
    scan(p, &q, &chain, lo.clone(), hi.clone())
}

/// `p >= 0` on `[lo, hi]`; returns a point where `p < 0` otherwise.
pub fn find_negative_point(p: &QPoly, lo: &Rational, hi: &Rational) -> Option<Rational> {
    find_positive_point(&-p, lo, hi)
}

fn scan(p: &QPoly, q: &QPoly, chain: &SturmChain, lo: Rational, hi: Rational) -> Option<Rational> {
    let mut stack = vec![(lo, hi)];
    while let Some((l, h)) = stack.pop() {
        let roots = chain.count_roots(&l, &h);
        if roots == 0 {
            let m = (l.clone() + h.clone()) / Rational::from_integer(2.into());
            if p.eval(&m).is_positive() {
                return Some(m);
            }
            continue;
        }
        let pl = p.eval(&l);
        let ph = p.eval(&h);
        if roots == 1 && !pl.is_zero() && !ph.is_zero() {
            if pl.is_positive() {
                return Some(l);
            }
            if ph.is_positive() {
                return Some(h);
            }
            continue;
        }
        let m = split_point(q, &l, &h);
        stack.push((m.clone(), h));
        stack.push((l, m));
    }
    None
}

/// An interior point of `(l, h)` that is not a root of `q`.
fn split_point(q: &QPoly, l: &Rational, h: &Rational) -> Rational {
    let width = h.clone() - l.clone();
    for den in 2i64.. {
        for num in 1..den {
            let m = l.clone() + width.clone() * Rational::new(num.into(), den.into());
            if !q.eval(&m).is_zero() {
                return m;
            }
        }
    }
    unreachable!("a nonzero polynomial has finitely many roots")
}

struct SturmChain {
    seq: Vec<QPoly>,
}

impl SturmChain {
    fn new(q: &QPoly) -> Self {
        let mut seq = vec![q.clone()];
        let d = q.derivative();
        if !d.is_zero() {
            seq.push(d);
            loop {
                let n = seq.len();
                let (_, r) = seq[n - 2].div_rem(&seq[n - 1]);
                if r.is_zero() {
                    break;
                }
                seq.push(-r);
            }
        }
        Self { seq }
    }

    fn variations(&self, x: &Rational) -> usize {
        let mut count = 0;
        let mut last: Option<bool> = None;
        for s in &self.seq {
            let v = s.eval(x);
            if v.is_zero() {
                continue;
            }
            let pos = v.is_positive();
            if last.is_some_and(|l| l != pos) {
                count += 1;
            }
            last = Some(pos);
        }
        count
    }

    /// Distinct roots in the open interval `(l, h)`; `l` and `h` must not be roots.
    fn count_roots(&self, l: &Rational, h: &Rational) -> usize {
        self.variations(l).saturating_sub(self.variations(h))
    }
}
