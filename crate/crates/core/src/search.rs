//! Maximizing `κ(w, f)` over a finite-dimensional space of C² cubic splines.
//!
//! The basis lives on `N = m - 1` uniform intervals. Uniform cubic B-splines
//! `B_{-3}, ..., B_{N-1}` are combined near each end so every basis function
//! vanishes there: `B_{-2} - 4B_{-3}`, `B_{-1} - B_{-3}`, the interior
//! `B_0, ..., B_{N-4}`, then `B_{N-3} - B_{N-1}` and `B_{N-2} - 4B_{N-1}`.
//! Gram matrices are assembled exactly in rational arithmetic and rounded once.

use nalgebra::{DMatrix, DVector};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::funcspace::{
    BoundaryCondition, Interval, Nonnegativity, PiecewisePolynomial, Smoothness, TestFunction, WeightSpec,
};
use crate::poly::Polynomial;
use crate::quadrature::integrate_adaptive;
use crate::scalar::{rational, Rational, Scalar};

/// Number of points in [`SearchResult::samples`].
pub const SAMPLE_POINTS: usize = 257;

/// Restarts from a fresh perturbation before giving up on an infeasible start.
const MAX_RESTARTS: usize = 5;

/// Segments of the uniform cubic B-spline in the local variable `u ∈ [0, 1]`,
/// from the segment where it rises to the one where it dies out.
fn segments() -> [Polynomial<Rational>; 4] {
    let p = |c: [i64; 4]| Polynomial::new(c.iter().map(|&v| rational(v, 6)).collect());
    [p([0, 0, 0, 1]), p([1, 3, 3, -3]), p([4, 0, -6, 3]), p([1, -3, 3, -1])]
}

/// Basis functions active on one interval, as polynomials in `u`.
type Local = Vec<(usize, Polynomial<Rational>)>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplineBasis {
    pub interval: [f64; 2],
    /// Number of basis functions.
    pub size: usize,
    pub intervals: usize,
    pub degree: usize,
    pub boundary: BoundaryCondition,
}

/// Gram matrices `(A_k)_ij = ∫ w φ_i^(k) φ_j^(k)` for `k = 0, 1, 2`.
#[derive(Clone, Debug)]
pub struct QuadraticForms {
    pub basis: SplineBasis,
    pub a0: DMatrix<f64>,
    pub a1: DMatrix<f64>,
    pub a2: DMatrix<f64>,
    /// `∫ φ_i φ_j` without the weight.
    pub mass: DMatrix<f64>,
    a: Rational,
    h: Rational,
    local: Vec<Local>,
    local_f64: Vec<Vec<(usize, Polynomial<f64>)>>,
}

fn local_basis(m: usize) -> Vec<Local> {
    let n = m - 1;
    // combination coefficients indexed by B-spline offset j + 3
    let mut by_offset: Vec<Vec<(usize, i64)>> = vec![Vec::new(); n + 3];
    by_offset[1].push((0, 1));
    by_offset[0].push((0, -4));
    by_offset[2].push((1, 1));
    by_offset[0].push((1, -1));
    for j in 0..n - 3 {
        by_offset[j + 3].push((j + 2, 1));
    }
    by_offset[n].push((m - 2, 1));
    by_offset[n + 2].push((m - 2, -1));
    by_offset[n + 1].push((m - 1, 1));
    by_offset[n + 2].push((m - 1, -4));
    let seg = segments();
    (0..n)
        .map(|k| {
            let mut acc: Vec<(usize, Polynomial<Rational>)> = Vec::new();
            for off in k..k + 4 {
                for &(i, c) in &by_offset[off] {
                    let piece = seg[k + 3 - off].scale(&rational(c, 1));
                    match acc.iter_mut().find(|(j, _)| *j == i) {
                        Some((_, p)) => *p = &*p + &piece,
                        None => acc.push((i, piece)),
                    }
                }
            }
            acc.sort_by_key(|(i, _)| *i);
            acc
        })
        .collect()
}

/// Exact Galerkin assembly of the three weighted forms on `m` spline functions.
pub fn assemble_forms<T: Scalar>(w: &WeightSpec<T>, iv: &Interval<T>, m: usize) -> Result<QuadraticForms> {
    if m < 4 {
        return Err(Error::Parameter(format!("basis size must be at least 4, got {m}")));
    }
    if w.nonnegativity() == Nonnegativity::CertifiedNegative {
        return Err(Error::Hypothesis("weight takes negative values".into()));
    }
    let iv: Interval<Rational> = iv.cast()?;
    let wp = w.to_piecewise().to_rational()?;
    if !w.interval().cast::<Rational>()?.matches(&iv) {
        return Err(Error::Parameter("weight is defined on a different interval".into()));
    }
    let n = m - 1;
    let a = iv.a().clone();
    let h = iv.length() / rational(n as i64, 1);
    let local = local_basis(m);
    let mut exact = vec![vec![vec![Rational::zero(); m]; m]; 4];
    for (k, act) in local.iter().enumerate() {
        let tk = &a + &h * rational(k as i64, 1);
        let tk1 = &tk + &h;
        let mut cuts = vec![Rational::zero(), Rational::one()];
        cuts.extend(
            wp.breakpoints()
                .iter()
                .filter(|x| **x > tk && **x < tk1)
                .map(|x| (x - &tk) / &h),
        );
        cuts.sort();
        let derivs: Vec<[Polynomial<Rational>; 3]> = act
            .iter()
            .map(|(_, p)| [p.clone(), p.derivative(), p.nth_derivative(2)])
            .collect();
        for (p, (i, _)) in act.iter().enumerate() {
            for (q, (j, _)) in act.iter().enumerate().skip(p) {
                let prod = &derivs[p][0] * &derivs[q][0];
                exact[3][*i][*j] += prod.integrate(&Rational::zero(), &Rational::one()) * &h;
            }
        }
        for c in cuts.windows(2) {
            let mid = &tk + &h * (&c[0] + &c[1]) / rational(2, 1);
            let idx = wp.piece_index(&mid)?;
            let wl = wp.local_pieces()[idx].compose_affine(&h, &(&tk - &wp.breakpoints()[idx]));
            for (p, (i, _)) in act.iter().enumerate() {
                for (q, (j, _)) in act.iter().enumerate().skip(p) {
                    for order in 0..3 {
                        let prod = &(&wl * &derivs[p][order]) * &derivs[q][order];
                        exact[order][*i][*j] += prod.integrate(&c[0], &c[1]) * h.pow(1 - 2 * order as i32);
                    }
                }
            }
        }
    }
    let to_matrix = |e: &Vec<Vec<Rational>>| {
        DMatrix::from_fn(m, m, |i, j| {
            let (i, j) = if i <= j { (i, j) } else { (j, i) };
            e[i][j].to_f64_lossy()
        })
    };
    let basis = SplineBasis {
        interval: [a.to_f64_lossy(), iv.b().to_f64_lossy()],
        size: m,
        intervals: n,
        degree: 3,
        boundary: BoundaryCondition::DirichletDirichlet,
    };
    Ok(QuadraticForms {
        basis,
        a0: to_matrix(&exact[0]),
        a1: to_matrix(&exact[1]),
        a2: to_matrix(&exact[2]),
        mass: to_matrix(&exact[3]),
        a,
        h,
        local_f64: local
            .iter()
            .map(|act| act.iter().map(|(i, p)| Ok((*i, p.cast()?))).collect::<Result<_>>())
            .collect::<Result<_>>()?,
        local,
    })
}

/// `(cᵀA0c, cᵀA1c, cᵀA2c)`.
fn form_values(f: &QuadraticForms, c: &DVector<f64>) -> (f64, f64, f64) {
    (c.dot(&(&f.a0 * c)), c.dot(&(&f.a1 * c)), c.dot(&(&f.a2 * c)))
}

fn log_kappa(f: &QuadraticForms, c: &DVector<f64>) -> Option<f64> {
    let (q0, q1, q2) = form_values(f, c);
    let v = 2.0 * q1.ln() - q0.ln() - q2.ln();
    (q0 > 0.0 && q1 > 0.0 && q2 > 0.0 && v.is_finite()).then_some(v)
}

impl QuadraticForms {
    pub fn size(&self) -> usize {
        self.basis.size
    }

    /// `(cᵀA1c)² / (cᵀA0c · cᵀA2c)`.
    pub fn kappa(&self, c: &[f64]) -> f64 {
        let c = DVector::from_column_slice(c);
        let (q0, q1, q2) = form_values(self, &c);
        q1 * q1 / (q0 * q2)
    }

    /// `∇ log κ = 4A1c/(cᵀA1c) - 2A0c/(cᵀA0c) - 2A2c/(cᵀA2c)`.
    pub fn gradient(&self, c: &[f64]) -> Vec<f64> {
        self.gradient_vec(&DVector::from_column_slice(c)).as_slice().to_vec()
    }

    fn gradient_vec(&self, c: &DVector<f64>) -> DVector<f64> {
        let (r0, r1, r2) = (&self.a0 * c, &self.a1 * c, &self.a2 * c);
        let (q0, q1, q2) = (c.dot(&r0), c.dot(&r1), c.dot(&r2));
        r1 * (4.0 / q1) - r0 * (2.0 / q0) - r2 * (2.0 / q2)
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let h = self.h.to_f64_lossy();
        let t = (x - self.a.to_f64_lossy()) / h;
        let k = (t.floor().max(0.0) as usize).min(self.basis.intervals - 1);
        (k, t - k as f64)
    }

    /// Value of `Σ c_i φ_i` at `x`.
    pub fn eval(&self, c: &[f64], x: f64) -> f64 {
        let (k, u) = self.locate(x);
        self.local_f64[k].iter().map(|(i, p)| c[*i] * p.eval(&u)).sum()
    }

    /// `Σ c_i φ_i` as an exact C² piecewise cubic vanishing at both ends.
    pub fn spline_function(&self, c: &[f64]) -> Result<TestFunction<Rational>> {
        if c.len() != self.size() {
            return Err(Error::Parameter(format!("expected {} coefficients, got {}", self.size(), c.len())));
        }
        let c: Vec<Rational> = c.iter().map(|v| v.cast()).collect::<Result<_>>()?;
        let inv_h = Rational::one() / &self.h;
        let mut breakpoints = Vec::with_capacity(self.local.len() + 1);
        let mut pieces = Vec::with_capacity(self.local.len());
        for (k, act) in self.local.iter().enumerate() {
            let tk = &self.a + &self.h * rational(k as i64, 1);
            let sum = act
                .iter()
                .fold(Polynomial::zero(), |acc, (i, p)| &acc + &p.scale(&c[*i]));
            pieces.push(sum.compose_affine(&inv_h, &(-&tk * &inv_h)));
            breakpoints.push(tk);
        }
        breakpoints.push(&self.a + &self.h * rational(self.local.len() as i64, 1));
        let p = PiecewisePolynomial::new(breakpoints, pieces, Smoothness::C2)?;
        Ok(TestFunction::piecewise(p, BoundaryCondition::DirichletDirichlet))
    }

    /// Unweighted L² projection of `sin(nπ(x - a)/(b - a))`.
    pub fn sine_projection(&self, n: u32) -> Result<Vec<f64>> {
        let freq = std::f64::consts::PI * n as f64;
        let (a, b) = (self.basis.interval[0], self.basis.interval[1]);
        let h = self.h.to_f64_lossy();
        let mut rhs = DVector::zeros(self.size());
        for (k, act) in self.local_f64.iter().enumerate() {
            let tk = a + h * k as f64;
            for (i, p) in act {
                let g = |u: f64| p.eval(&u) * (freq * (tk + h * u - a) / (b - a)).sin();
                rhs[*i] += integrate_adaptive(&g, &Interval::unit(), 1e-15)?.value * h;
            }
        }
        let chol = self
            .mass
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Internal("mass matrix is not positive definite".into()))?;
        Ok(chol.solve(&rhs).as_slice().to_vec())
    }

    /// `|uᵀMv| / sqrt(uᵀMu · vᵀMv)` with the unweighted mass matrix.
    pub fn correlation(&self, u: &[f64], v: &[f64]) -> f64 {
        let (u, v) = (DVector::from_column_slice(u), DVector::from_column_slice(v));
        let m = &self.mass;
        u.dot(&(m * &v)).abs() / (u.dot(&(m * &u)) * v.dot(&(m * &v))).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SearchOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
    pub armijo: f64,
    pub backtrack: f64,
    /// Largest step in the `A0` norm, relative to a unit-normalized iterate.
    pub step_cap: f64,
    /// Size of the random start perturbation in the `A2` energy norm, relative to the projected sine.
    pub perturbation: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            grad_tol: 1e-8,
            armijo: 1e-4,
            backtrack: 0.5,
            step_cap: 0.5,
            perturbation: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchResult {
    pub seed: u64,
    pub best_kappa: f64,
    pub initial_kappa: f64,
    /// Normalized so that `cᵀA0c = 1`.
    pub best_coefficients: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub stop: StopReason,
    pub gradient_norm_final: f64,
    /// Correlation of the maximizer with the projected first sine mode.
    pub correlation: f64,
    /// Correlations with the projected sine modes 1, 2 and 3.
    pub mode_correlations: [f64; 3],
    /// `(x, f(x))` on a uniform grid, scaled to `max |f| = 1`.
    pub samples: Vec<[f64; 2]>,
    /// `κ` after every accepted step, starting with the initial point.
    #[serde(skip)]
    pub history: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// `|∇ log κ| <= grad_tol`.
    Gradient,
    /// The line search found no increase and the predicted one is below rounding.
    RoundoffFloor,
    /// The line search found no increase although one was predicted.
    LineSearch,
    MaxIterations,
}

/// Predicted increases of `log κ` below this are indistinguishable from rounding.
const ROUNDOFF_FLOOR: f64 = 1e-13;

struct Ascent {
    c: DVector<f64>,
    log_kappa: f64,
    history: Vec<f64>,
    iterations: usize,
    stop: StopReason,
    gradient_norm: f64,
}

fn normalize(f: &QuadraticForms, c: DVector<f64>) -> DVector<f64> {
    let n = c.dot(&(&f.a0 * &c)).sqrt();
    c / n
}

/// Preconditioned ascent on `log κ`; `None` when the start is infeasible.
fn ascend(forms: &QuadraticForms, start: DVector<f64>, opts: &SearchOptions) -> Option<Ascent> {
    let mut c = normalize(forms, start);
    let mut f = log_kappa(forms, &c)?;
    let mut history = vec![f.exp()];
    let mut t: f64 = 1.0;
    for it in 0..opts.max_iter {
        let g = forms.gradient_vec(&c);
        let gn = g.norm();
        if gn <= opts.grad_tol {
            return Some(Ascent { c, log_kappa: f, history, iterations: it, stop: StopReason::Gradient, gradient_norm: gn });
        }
        let (q0, _, q2) = form_values(forms, &c);
        // leading part of the negated Hessian of log κ
        let precond = &forms.a0 * (2.0 / q0) + &forms.a2 * (2.0 / q2);
        let mut d = precond.cholesky()?.solve(&g);
        let dn = d.dot(&(&forms.a0 * &d)).sqrt();
        if dn > opts.step_cap {
            d *= opts.step_cap / dn;
        }
        let slope = g.dot(&d);
        if slope <= ROUNDOFF_FLOOR {
            return Some(Ascent { c, log_kappa: f, history, iterations: it, stop: StopReason::RoundoffFloor, gradient_norm: gn });
        }
        t = (2.0 * t).min(1.0);
        let accepted = loop {
            let trial = &c + &d * t;
            match log_kappa(forms, &trial) {
                Some(v) if v >= f + opts.armijo * t * slope => break Some((trial, v)),
                _ => {}
            }
            t *= opts.backtrack;
            if t < 1e-20 {
                break None;
            }
        };
        let Some((trial, v)) = accepted else {
            return Some(Ascent { c, log_kappa: f, history, iterations: it, stop: StopReason::LineSearch, gradient_norm: gn });
        };
        c = normalize(forms, trial);
        f = v;
        history.push(f.exp());
    }
    let gradient_norm = forms.gradient_vec(&c).norm();
    Some(Ascent {
        stop: if gradient_norm <= opts.grad_tol { StopReason::Gradient } else { StopReason::MaxIterations },
        c,
        log_kappa: f,
        history,
        iterations: opts.max_iter,
        gradient_norm,
    })
}

/// Single-start search from the projected first sine mode plus a seeded perturbation.
pub fn maximize_kappa(forms: &QuadraticForms, seed: u64, opts: &SearchOptions) -> Result<SearchResult> {
    let c0 = DVector::from_vec(forms.sine_projection(1)?);
    let e0 = c0.dot(&(&forms.a2 * &c0));
    let modes = [forms.sine_projection(2)?, forms.sine_projection(3)?];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_RESTARTS {
        let mut p = DVector::from_fn(forms.size(), |_, _| rng.random_range(-1.0..=1.0));
        let ep = p.dot(&(&forms.a2 * &p));
        if e0 > 0.0 && ep > 0.0 {
            p *= opts.perturbation * (e0 / ep).sqrt();
        }
        let start = &c0 + p;
        let initial_kappa = forms.kappa(start.as_slice());
        let Some(run) = ascend(forms, start, opts) else {
            continue;
        };
        let best: Vec<f64> = run.c.as_slice().to_vec();
        let correlation = forms.correlation(&best, c0.as_slice());
        let mode_correlations = [correlation, forms.correlation(&best, &modes[0]), forms.correlation(&best, &modes[1])];
        let (a, b) = (forms.basis.interval[0], forms.basis.interval[1]);
        let xs: Vec<f64> = (0..SAMPLE_POINTS)
            .map(|i| a + (b - a) * i as f64 / (SAMPLE_POINTS - 1) as f64)
            .collect();
        let ys: Vec<f64> = xs.iter().map(|x| forms.eval(&best, *x)).collect();
        let peak = ys.iter().fold(0.0_f64, |m, y| if y.abs() > m.abs() { *y } else { m });
        let samples = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| [*x, if peak != 0.0 { y / peak } else { *y }])
            .collect();
        return Ok(SearchResult {
            seed,
            best_kappa: run.log_kappa.exp(),
            initial_kappa,
            best_coefficients: best,
            iterations: run.iterations,
            converged: run.stop == StopReason::Gradient,
            stop: run.stop,
            gradient_norm_final: run.gradient_norm,
            correlation,
            mode_correlations,
            samples,
            history: run.history,
        });
    }
    Err(Error::NonConvergence(format!(
        "no feasible start after {MAX_RESTARTS} perturbations"
    )))
}

/// Independent starts, one per seed, in seed order.
pub fn maximize_multistart(forms: &QuadraticForms, seeds: &[u64], opts: &SearchOptions) -> Result<Vec<SearchResult>> {
    seeds.par_iter().map(|s| maximize_kappa(forms, *s, opts)).collect()
}

/// Largest `|∇_i - D_i|` over components, relative to `max_i |∇_i|`, where
/// `D` is the central difference of `log κ` with step `h`.
pub fn gradient_check(forms: &QuadraticForms, c: &[f64], h: f64) -> Result<f64> {
    if !(h > 0.0) || c.len() != forms.size() {
        return Err(Error::Parameter("need h > 0 and one coefficient per basis function".into()));
    }
    let cv = DVector::from_column_slice(c);
    log_kappa(forms, &cv).ok_or_else(|| Error::Parameter("coefficients outside the feasible region".into()))?;
    let g = forms.gradient_vec(&cv);
    let mut worst: f64 = 0.0;
    for i in 0..c.len() {
        let mut e = DVector::zeros(c.len());
        e[i] = h;
        let up = log_kappa(forms, &(&cv + &e));
        let down = log_kappa(forms, &(&cv - &e));
        let (Some(up), Some(down)) = (up, down) else {
            return Err(Error::Parameter("difference stencil leaves the feasible region".into()));
        };
        worst = worst.max((g[i] - (up - down) / (2.0 * h)).abs());
    }
    let scale = g.amax();
    Ok(if scale > 0.0 { worst / scale } else { worst })
}
