//! Systems of series equations `X_i = F_i(x, X_1, .., X_k)` and their solver.
//!
//! Rules are expression DAGs over the unknowns. [`GrammarSystem::solve`]
//! determines the solution one order at a time: the coefficient of `x^n` of
//! every unknown is computed from coefficients already known, which is exactly
//! the content of the guard condition. A rule that needs its own unknown at
//! the order being computed is reported as a guard violation. Exponential
//! series (main variable `x`) are handled internally in the scaled form
//! `n! [x^n]`, which keeps counting sequences integral.
//!
//! After solving, every rule is re-evaluated with plain truncated arithmetic
//! and must reproduce the solution exactly.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::rc::Rc;

use rug::{Complete, Integer, Rational};
use thiserror::Error;

use super::{Coeff, Series, SeriesError, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("unknown `{0}` has no rule")]
    Undefined(String),
    #[error("rule for {unknown} contains {what}, which has no pointwise value")]
    NotPointwise { unknown: String, what: &'static str },
    #[error("rule for `{unknown}` is not guarded: order {order} depends on itself")]
    GuardViolation { unknown: String, order: usize },
    #[error("no fixed point for `{unknown}` within {rounds} rounds")]
    NoFixedPoint { unknown: String, rounds: usize },
    #[error("rule for `{unknown}` fails to reproduce the solution at order {order}")]
    Residual { unknown: String, order: usize },
    #[error("a fixed series in the rule for `{unknown}` is only known to order {have}, need {need}")]
    KnownTooShort { unknown: String, have: usize, need: usize },
    #[error("in the rule for `{unknown}`: {source}")]
    Series { unknown: String, source: SeriesError },
}

enum Node<C: Coeff> {
    Const(C),
    Var,
    Unknown(usize),
    Known(Series<C>),
    Add(Expr<C>, Expr<C>),
    Sub(Expr<C>, Expr<C>),
    Neg(Expr<C>),
    Scale(Rational, Expr<C>),
    ScaleCoeff(C, Expr<C>),
    Mul(Expr<C>, Expr<C>),
    MulVar(Expr<C>),
    ShiftDown(Expr<C>),
    Exp(Expr<C>),
    Recip(Expr<C>),
    Compose(Series<C>, Expr<C>),
}

/// A node of a rule's expression DAG. Cloning shares the node.
pub struct Expr<C: Coeff>(Rc<Node<C>>);

impl<C: Coeff> Clone for Expr<C> {
    fn clone(&self) -> Self {
        Expr(Rc::clone(&self.0))
    }
}

impl<C: Coeff> fmt::Debug for Expr<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match &*self.0 {
            Node::Const(_) => "const",
            Node::Var => "var",
            Node::Unknown(_) => "unknown",
            Node::Known(_) => "known",
            Node::Add(..) => "add",
            Node::Sub(..) => "sub",
            Node::Neg(_) => "neg",
            Node::Scale(..) => "scale",
            Node::ScaleCoeff(..) => "scale",
            Node::Mul(..) => "mul",
            Node::MulVar(_) => "mul_var",
            Node::ShiftDown(_) => "shift_down",
            Node::Exp(_) => "exp",
            Node::Recip(_) => "recip",
            Node::Compose(..) => "compose",
        };
        write!(f, "Expr({name})")
    }
}

impl<C: Coeff> Expr<C> {
    fn new(node: Node<C>) -> Self {
        Expr(Rc::new(node))
    }

    /// A fixed series, e.g. one solved earlier.
    pub fn known(s: Series<C>) -> Self {
        Expr::new(Node::Known(s))
    }

    pub fn constant(c: C) -> Self {
        Expr::new(Node::Const(c))
    }

    pub fn exp(&self) -> Self {
        Expr::new(Node::Exp(self.clone()))
    }

    /// Reciprocal; the constant term must be a unit.
    pub fn recip(&self) -> Self {
        Expr::new(Node::Recip(self.clone()))
    }

    pub fn pow(&self, k: u32) -> Self {
        assert!(k >= 1, "use a constant for the zeroth power");
        let mut acc = self.clone();
        for _ in 1..k {
            acc = &acc * self;
        }
        acc
    }

    pub fn scale(&self, r: Rational) -> Self {
        Expr::new(Node::Scale(r, self.clone()))
    }

    pub fn scale_coeff(&self, c: C) -> Self {
        Expr::new(Node::ScaleCoeff(c, self.clone()))
    }

    /// Multiply by the main variable.
    pub fn mul_var(&self) -> Self {
        Expr::new(Node::MulVar(self.clone()))
    }

    /// Exact division by the main variable.
    pub fn shift_down(&self) -> Self {
        Expr::new(Node::ShiftDown(self.clone()))
    }

    /// `outer(self)`, substituting into the main variable of a fixed series.
    pub fn compose_into(&self, outer: Series<C>) -> Self {
        Expr::new(Node::Compose(outer, self.clone()))
    }

    fn ptr(&self) -> *const Node<C> {
        Rc::as_ptr(&self.0)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $variant:ident) => {
        impl<C: Coeff> $trait<&Expr<C>> for &Expr<C> {
            type Output = Expr<C>;
            fn $method(self, rhs: &Expr<C>) -> Expr<C> {
                Expr::new(Node::$variant(self.clone(), rhs.clone()))
            }
        }
        impl<C: Coeff> $trait<Expr<C>> for Expr<C> {
            type Output = Expr<C>;
            fn $method(self, rhs: Expr<C>) -> Expr<C> {
                Expr::new(Node::$variant(self, rhs))
            }
        }
        impl<C: Coeff> $trait<&Expr<C>> for Expr<C> {
            type Output = Expr<C>;
            fn $method(self, rhs: &Expr<C>) -> Expr<C> {
                Expr::new(Node::$variant(self, rhs.clone()))
            }
        }
        impl<C: Coeff> $trait<Expr<C>> for &Expr<C> {
            type Output = Expr<C>;
            fn $method(self, rhs: Expr<C>) -> Expr<C> {
                Expr::new(Node::$variant(self.clone(), rhs))
            }
        }
    };
}

binop!(Add, add, Add);
binop!(Sub, sub, Sub);
binop!(Mul, mul, Mul);

impl<C: Coeff> Neg for &Expr<C> {
    type Output = Expr<C>;
    fn neg(self) -> Expr<C> {
        Expr::new(Node::Neg(self.clone()))
    }
}

impl<C: Coeff> Neg for Expr<C> {
    type Output = Expr<C>;
    fn neg(self) -> Expr<C> {
        Expr::new(Node::Neg(self))
    }
}

/// Unknowns and their defining rules.
pub struct GrammarSystem<C: Coeff> {
    var: Var,
    ctx: C::Ctx,
    names: Vec<String>,
    rules: Vec<Option<Expr<C>>>,
    guard_gain: usize,
}

/// Solved series for every unknown of a system.
#[derive(Clone, Debug)]
pub struct Solution<C: Coeff> {
    names: Vec<String>,
    series: Vec<Series<C>>,
    /// Passes over the unknowns needed to reach the fixed point.
    pub rounds: usize,
    /// `(unknown, order)` of the first negative coefficient of each unknown
    /// that has one.
    pub negative: Vec<(String, usize)>,
}

impl<C: Coeff> Solution<C> {
    pub fn get(&self, name: &str) -> Option<&Series<C>> {
        self.names.iter().position(|n| n == name).map(|i| &self.series[i])
    }

    /// Like [`Solution::get`] but panics on an unknown name.
    pub fn series(&self, name: &str) -> &Series<C> {
        self.get(name).unwrap_or_else(|| panic!("no unknown named `{name}`"))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn into_map(self) -> HashMap<String, Series<C>> {
        self.names.into_iter().zip(self.series).collect()
    }
}

impl<C: Coeff> GrammarSystem<C> {
    pub fn new(var: Var, ctx: C::Ctx) -> Self {
        GrammarSystem {
            var,
            ctx,
            names: Vec::new(),
            rules: Vec::new(),
            guard_gain: 1,
        }
    }

    /// Declare the minimum gain in main-variable order per substitution.
    pub fn with_guard_gain(mut self, gain: usize) -> Self {
        assert!(gain >= 1);
        self.guard_gain = gain;
        self
    }

    pub fn guard_gain(&self) -> usize {
        self.guard_gain
    }

    pub fn var(&self) -> Var {
        self.var
    }

    pub fn ctx(&self) -> &C::Ctx {
        &self.ctx
    }

    /// Reference to the unknown `name`, declaring it if new.
    pub fn unknown(&mut self, name: &str) -> Expr<C> {
        let idx = match self.names.iter().position(|n| n == name) {
            Some(i) => i,
            None => {
                self.names.push(name.to_string());
                self.rules.push(None);
                self.names.len() - 1
            }
        };
        Expr::new(Node::Unknown(idx))
    }

    pub fn define(&mut self, name: &str, rule: Expr<C>) {
        self.unknown(name);
        let idx = self.names.iter().position(|n| n == name).unwrap();
        self.rules[idx] = Some(rule);
    }

    /// The main variable.
    pub fn var_expr(&self) -> Expr<C> {
        Expr::new(Node::Var)
    }

    pub fn rational(&self, r: Rational) -> Expr<C> {
        Expr::constant(C::from_rational(&self.ctx, r))
    }

    pub fn int(&self, k: i64) -> Expr<C> {
        self.rational(Rational::from(k))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    fn rules(&self) -> Result<Vec<&Expr<C>>, GrammarError> {
        self.rules
            .iter()
            .zip(&self.names)
            .map(|(r, n)| r.as_ref().ok_or_else(|| GrammarError::Undefined(n.clone())))
            .collect()
    }

    /// Order-by-order solve to `trunc` in the main variable.
    pub fn solve(&self, trunc: usize) -> Result<Solution<C>, GrammarError> {
        let rules = self.rules()?;
        let mut ev = Online::compile(self, &rules, trunc);
        let mut raw: Vec<Vec<C>> = vec![Vec::with_capacity(trunc + 1); rules.len()];
        for n in 0..=trunc {
            for (u, out) in raw.iter_mut().enumerate() {
                let root = ev.roots[u];
                ev.ensure(root, n, u)?;
                out.push(ev.cache[root][n].clone());
            }
        }
        let series: Vec<Series<C>> = raw.into_iter().map(|c| self.unscale(c)).collect();
        let sol = self.finish(series, trunc + 1);
        self.check_residual(&sol)?;
        Ok(sol)
    }

    /// Plain fixed-point iteration `X <- F(X)` from the zero seed.
    ///
    /// Every round gains at least `guard_gain` orders, so the iteration must
    /// stabilise within `trunc / guard_gain + 2` rounds.
    pub fn solve_by_iteration(&self, trunc: usize) -> Result<Solution<C>, GrammarError> {
        let rules = self.rules()?;
        let budget = trunc / self.guard_gain + 2;
        let zero = Series::zero(self.var, self.ctx.clone(), trunc);
        let mut current: Vec<Series<C>> = vec![zero; rules.len()];
        for round in 1..=budget {
            let mut next = Vec::with_capacity(rules.len());
            for (u, rule) in rules.iter().enumerate() {
                let v = self.eval_offline(rule, &current, trunc, u)?;
                next.push(pad(v, trunc));
            }
            if next == current {
                let sol = self.finish(current, round);
                self.check_residual(&sol)?;
                return Ok(sol);
            }
            current = next;
        }
        let stuck = rules
            .iter()
            .enumerate()
            .find(|&(u, rule)| {
                self.eval_offline(rule, &current, trunc, u)
                    .map(|v| pad(v, trunc) != current[u])
                    .unwrap_or(true)
            })
            .map(|(u, _)| self.names[u].clone())
            .unwrap_or_default();
        Err(GrammarError::NoFixedPoint {
            unknown: stuck,
            rounds: budget,
        })
    }

    /// Re-evaluate every rule on the solution with truncated arithmetic.
    pub fn check_residual(&self, sol: &Solution<C>) -> Result<(), GrammarError> {
        let rules = self.rules()?;
        let trunc = sol.series.first().map_or(0, |s| s.trunc());
        for (u, rule) in rules.iter().enumerate() {
            let v = self.eval_offline(rule, &sol.series, trunc, u)?;
            let upto = v.trunc().min(trunc);
            let have = sol.series[u].truncate(upto);
            if let Some(order) = v.truncate(upto).first_difference(&have) {
                return Err(GrammarError::Residual {
                    unknown: self.names[u].clone(),
                    order,
                });
            }
        }
        Ok(())
    }

    /// Evaluate an expression on given values of the unknowns.
    pub fn evaluate(&self, expr: &Expr<C>, values: &[Series<C>]) -> Result<Series<C>, GrammarError> {
        let trunc = values.first().map_or(0, |s| s.trunc());
        self.eval_offline(expr, values, trunc, usize::MAX)
    }

    fn finish(&self, series: Vec<Series<C>>, rounds: usize) -> Solution<C> {
        let negative = self
            .names
            .iter()
            .zip(&series)
            .filter_map(|(n, s)| s.first_negative().map(|k| (n.clone(), k)))
            .collect();
        Solution {
            names: self.names.clone(),
            series,
            rounds,
            negative,
        }
    }

    fn unscale(&self, mut coeffs: Vec<C>) -> Series<C> {
        if self.var == Var::X {
            let mut fact = Integer::from(1);
            for (n, c) in coeffs.iter_mut().enumerate() {
                if n > 1 {
                    fact *= n as u32;
                }
                c.scale(&Rational::from((1, &fact)));
            }
        }
        Series::from_coeffs(self.var, self.ctx.clone(), coeffs)
    }

    fn eval_offline(&self, expr: &Expr<C>, values: &[Series<C>], trunc: usize, unknown: usize) -> Result<Series<C>, GrammarError> {
        let mut memo: HashMap<*const Node<C>, Series<C>> = HashMap::new();
        self.eval_node(expr, values, trunc, unknown, None, &mut memo)
    }

    /// Right-hand sides of all rules with the main variable replaced by the
    /// series `x`, typically a jet `x0 + t` around a numeric point. Rules
    /// holding known series or compositions cannot be evaluated this way.
    pub fn rhs_at(&self, x: &Series<C>, values: &[Series<C>]) -> Result<Vec<Series<C>>, GrammarError> {
        let rules = self.rules()?;
        let trunc = x.trunc();
        let mut memo: HashMap<*const Node<C>, Series<C>> = HashMap::new();
        rules
            .iter()
            .enumerate()
            .map(|(u, r)| self.eval_node(r, values, trunc, u, Some(x), &mut memo))
            .collect()
    }

    fn eval_node(
        &self,
        expr: &Expr<C>,
        values: &[Series<C>],
        trunc: usize,
        unknown: usize,
        subst: Option<&Series<C>>,
        memo: &mut HashMap<*const Node<C>, Series<C>>,
    ) -> Result<Series<C>, GrammarError> {
        if let Some(v) = memo.get(&expr.ptr()) {
            return Ok(v.clone());
        }
        let name = || self.names.get(unknown).cloned().unwrap_or_else(|| "<expression>".to_string());
        let wrap = |source: SeriesError| GrammarError::Series { unknown: name(), source };
        let ev = |e: &Expr<C>, memo: &mut HashMap<_, _>| self.eval_node(e, values, trunc, unknown, subst, memo);
        let pointwise = |what: &'static str| GrammarError::NotPointwise { unknown: name(), what };
        let out = match &*expr.0 {
            Node::Const(c) => Series::constant(self.var, self.ctx.clone(), trunc, c.clone()),
            Node::Var => match subst {
                Some(x) => x.clone(),
                None => Series::variable(self.var, self.ctx.clone(), trunc),
            },
            Node::Unknown(i) => values[*i].clone(),
            Node::Known(_) if subst.is_some() => return Err(pointwise("a known series")),
            Node::Compose(..) if subst.is_some() => return Err(pointwise("a composition")),
            Node::Known(s) => {
                if s.trunc() < trunc {
                    return Err(GrammarError::KnownTooShort {
                        unknown: name(),
                        have: s.trunc(),
                        need: trunc,
                    });
                }
                s.truncate(trunc)
            }
            Node::Add(a, b) => &ev(a, memo)? + &ev(b, memo)?,
            Node::Sub(a, b) => &ev(a, memo)? - &ev(b, memo)?,
            Node::Neg(a) => -&ev(a, memo)?,
            Node::Scale(r, a) => ev(a, memo)?.scale(r),
            Node::ScaleCoeff(c, a) => ev(a, memo)?.scale_coeff(c),
            Node::Mul(a, b) => &ev(a, memo)? * &ev(b, memo)?,
            Node::MulVar(a) => match subst {
                Some(x) => &ev(a, memo)? * x,
                None => ev(a, memo)?.mul_var(),
            },
            Node::ShiftDown(a) => match subst {
                Some(x) => &ev(a, memo)? * &x.reciprocal().map_err(wrap)?,
                None => ev(a, memo)?.shift_down().map_err(wrap)?,
            },
            Node::Exp(a) => ev(a, memo)?.exp_general().map_err(wrap)?,
            Node::Recip(a) => ev(a, memo)?.reciprocal().map_err(wrap)?,
            Node::Compose(outer, a) => {
                // Composition is only known as far as the outer series is.
                let inner = ev(a, memo)?;
                Series::compose(outer, &inner).map_err(wrap)?
            }
        };
        memo.insert(expr.ptr(), out.clone());
        Ok(out)
    }
}

fn pad<C: Coeff>(s: Series<C>, trunc: usize) -> Series<C> {
    if s.trunc() >= trunc {
        return s.truncate(trunc);
    }
    let mut coeffs = s.coeffs().to_vec();
    coeffs.resize(trunc + 1, C::zero(s.ctx()));
    Series::from_coeffs(s.var(), s.ctx().clone(), coeffs)
}

/// Flattened node with child indices.
enum Op<C: Coeff> {
    Const(C),
    Var,
    Unknown(usize),
    Known(Vec<C>),
    Add(usize, usize),
    Sub(usize, usize),
    Neg(usize),
    Scale(Rational, usize),
    ScaleCoeff(C, usize),
    Mul(usize, usize),
    MulVar(usize),
    ShiftDown(usize),
    Exp(usize),
    Recip(usize),
    /// Outer coefficients are kept unscaled.
    Compose(Vec<C>, usize),
}

/// What a node needs for its next coefficient, copied out of [`Op`] so the
/// evaluator can be borrowed mutably while computing it.
enum Plan<C> {
    Done(C),
    Unknown(usize),
    Add(usize, usize, bool),
    Neg(usize),
    Scale(usize),
    Mul(usize, usize),
    MulVar(usize),
    ShiftDown(usize),
    Exp(usize),
    Recip(usize),
    Compose(usize),
}

/// Demand-driven evaluator holding one coefficient cache per node.
struct Online<'a, C: Coeff> {
    sys: &'a GrammarSystem<C>,
    ops: Vec<Op<C>>,
    roots: Vec<usize>,
    cache: Vec<Vec<C>>,
    /// Powers of the inner series for composition nodes.
    powers: Vec<Vec<Vec<C>>>,
    busy: Vec<bool>,
    /// Pascal rows `binom[n][k]`, only filled for the scaled case.
    binom: Vec<Vec<Integer>>,
    scaled: bool,
    one: C,
}

impl<'a, C: Coeff> Online<'a, C> {
    fn compile(sys: &'a GrammarSystem<C>, rules: &[&Expr<C>], trunc: usize) -> Self {
        let scaled = sys.var == Var::X;
        let mut ids: HashMap<*const Node<C>, usize> = HashMap::new();
        let mut ops: Vec<Op<C>> = Vec::new();
        let roots = rules
            .iter()
            .map(|r| Self::flatten(sys, r, scaled, trunc, &mut ids, &mut ops))
            .collect();
        let binom = if scaled {
            let mut rows: Vec<Vec<Integer>> = Vec::with_capacity(trunc + 3);
            for n in 0..trunc + 3 {
                let mut row = Vec::with_capacity(n + 1);
                for k in 0..=n {
                    if k == 0 || k == n {
                        row.push(Integer::from(1));
                    } else {
                        let prev: &Vec<Integer> = &rows[n - 1];
                        row.push((&prev[k - 1] + &prev[k]).complete());
                    }
                }
                rows.push(row);
            }
            rows
        } else {
            Vec::new()
        };
        let n = ops.len();
        Online {
            sys,
            ops,
            roots,
            cache: (0..n).map(|_| Vec::new()).collect(),
            powers: (0..n).map(|_| Vec::new()).collect(),
            busy: vec![false; n],
            binom,
            scaled,
            one: C::from_rational(&sys.ctx, Rational::from(1)),
        }
    }

    fn flatten(
        sys: &GrammarSystem<C>,
        e: &Expr<C>,
        scaled: bool,
        trunc: usize,
        ids: &mut HashMap<*const Node<C>, usize>,
        ops: &mut Vec<Op<C>>,
    ) -> usize {
        if let Some(&id) = ids.get(&e.ptr()) {
            return id;
        }
        let mut f = |c: &Expr<C>, ops: &mut Vec<Op<C>>| Self::flatten(sys, c, scaled, trunc, ids, ops);
        let op = match &*e.0 {
            Node::Const(c) => Op::Const(c.restrict(&sys.ctx)),
            Node::Var => Op::Var,
            Node::Unknown(i) => Op::Unknown(*i),
            Node::Known(s) => {
                let mut coeffs: Vec<C> = s.coeffs()[..=s.trunc().min(trunc + 1)]
                    .iter()
                    .map(|c| c.restrict(&C::meet(&c.ctx(), &sys.ctx)))
                    .map(|c| widen(c, &sys.ctx))
                    .collect();
                if scaled {
                    let mut fact = Integer::from(1);
                    for (n, c) in coeffs.iter_mut().enumerate() {
                        if n > 1 {
                            fact *= n as u32;
                        }
                        c.scale_int(&fact);
                    }
                }
                Op::Known(coeffs)
            }
            Node::Add(a, b) => Op::Add(f(a, ops), f(b, ops)),
            Node::Sub(a, b) => Op::Sub(f(a, ops), f(b, ops)),
            Node::Neg(a) => Op::Neg(f(a, ops)),
            Node::Scale(r, a) => Op::Scale(r.clone(), f(a, ops)),
            Node::ScaleCoeff(c, a) => Op::ScaleCoeff(c.restrict(&sys.ctx), f(a, ops)),
            Node::Mul(a, b) => Op::Mul(f(a, ops), f(b, ops)),
            Node::MulVar(a) => Op::MulVar(f(a, ops)),
            Node::ShiftDown(a) => Op::ShiftDown(f(a, ops)),
            Node::Exp(a) => Op::Exp(f(a, ops)),
            Node::Recip(a) => Op::Recip(f(a, ops)),
            Node::Compose(outer, a) => {
                let coeffs = outer.coeffs()[..=outer.trunc().min(trunc + 1)]
                    .iter()
                    .map(|c| widen(c.restrict(&C::meet(&c.ctx(), &sys.ctx)), &sys.ctx))
                    .collect();
                Op::Compose(coeffs, f(a, ops))
            }
        };
        ops.push(op);
        let id = ops.len() - 1;
        ids.insert(e.ptr(), id);
        id
    }

    fn name(&self, u: usize) -> String {
        self.sys.names[u].clone()
    }

    /// Fill the cache of `id` through order `n`. `owner` is the unknown whose
    /// rule is being evaluated, for error messages.
    fn ensure(&mut self, id: usize, n: usize, owner: usize) -> Result<(), GrammarError> {
        while self.cache[id].len() <= n {
            let k = self.cache[id].len();
            if self.busy[id] {
                let unknown = match self.ops[id] {
                    Op::Unknown(u) => u,
                    _ => owner,
                };
                return Err(GrammarError::GuardViolation {
                    unknown: self.name(unknown),
                    order: k,
                });
            }
            self.busy[id] = true;
            let v = self.compute(id, k, owner);
            self.busy[id] = false;
            let v = v?;
            self.cache[id].push(v);
        }
        Ok(())
    }

    fn zero(&self) -> C {
        C::zero(&self.sys.ctx)
    }

    fn compute(&mut self, id: usize, k: usize, owner: usize) -> Result<C, GrammarError> {
        let plan = match &self.ops[id] {
            Op::Const(c) => Plan::Done(if k == 0 { c.clone() } else { self.zero() }),
            Op::Var => Plan::Done(if k == 1 { self.one.clone() } else { self.zero() }),
            Op::Known(c) => match c.get(k) {
                Some(v) => Plan::Done(v.clone()),
                None => {
                    return Err(GrammarError::KnownTooShort {
                        unknown: self.name(owner),
                        have: c.len() - 1,
                        need: k,
                    })
                }
            },
            Op::Unknown(u) => Plan::Unknown(*u),
            Op::Add(a, b) => Plan::Add(*a, *b, false),
            Op::Sub(a, b) => Plan::Add(*a, *b, true),
            Op::Neg(a) => Plan::Neg(*a),
            Op::Scale(_, a) | Op::ScaleCoeff(_, a) => Plan::Scale(*a),
            Op::Mul(a, b) => Plan::Mul(*a, *b),
            Op::MulVar(a) => Plan::MulVar(*a),
            Op::ShiftDown(a) => Plan::ShiftDown(*a),
            Op::Exp(a) => Plan::Exp(*a),
            Op::Recip(a) => Plan::Recip(*a),
            Op::Compose(_, a) => Plan::Compose(*a),
        };
        let v = match plan {
            Plan::Done(v) => v,
            Plan::Unknown(u) => {
                let root = self.roots[u];
                self.ensure(root, k, u)?;
                self.cache[root][k].clone()
            }
            Plan::Add(a, b, sub) => {
                self.ensure(a, k, owner)?;
                self.ensure(b, k, owner)?;
                let mut v = self.cache[a][k].clone();
                if sub {
                    v.sub_assign(&self.cache[b][k]);
                } else {
                    v.add_assign(&self.cache[b][k]);
                }
                v
            }
            Plan::Neg(a) => {
                self.ensure(a, k, owner)?;
                let mut v = self.cache[a][k].clone();
                v.neg_assign();
                v
            }
            Plan::Scale(a) => {
                self.ensure(a, k, owner)?;
                let v = &self.cache[a][k];
                match &self.ops[id] {
                    Op::Scale(r, _) => {
                        let mut v = v.clone();
                        v.scale(r);
                        v
                    }
                    Op::ScaleCoeff(c, _) => v.mul(c),
                    _ => unreachable!(),
                }
            }
            Plan::Mul(a, b) => self.mul_coeff(a, b, k, owner)?,
            Plan::MulVar(a) => {
                if k == 0 {
                    self.zero()
                } else {
                    self.ensure(a, k - 1, owner)?;
                    let mut v = self.cache[a][k - 1].clone();
                    if self.scaled {
                        v.scale_int(&Integer::from(k));
                    }
                    v
                }
            }
            Plan::ShiftDown(a) => {
                self.ensure(a, k + 1, owner)?;
                if k == 0 && !self.cache[a][0].is_zero() {
                    return Err(GrammarError::Series {
                        unknown: self.name(owner),
                        source: SeriesError::NonzeroConstant {
                            op: "division by the main variable",
                            constant: format!("{:?}", self.cache[a][0]),
                        },
                    });
                }
                let mut v = self.cache[a][k + 1].clone();
                if self.scaled {
                    v.scale(&Rational::from((1, k as u64 + 1)));
                }
                v
            }
            Plan::Exp(a) => self.exp_coeff(id, a, k, owner)?,
            Plan::Recip(a) => self.recip_coeff(id, a, k, owner)?,
            Plan::Compose(a) => self.compose_coeff(id, a, k, owner)?,
        };
        Ok(v)
    }

    fn mul_coeff(&mut self, a: usize, b: usize, k: usize, owner: usize) -> Result<C, GrammarError> {
        if k == 0 {
            // The constant term vanishes as soon as one factor's does, which
            // may be decidable even when the other factor is still pending.
            return match self.ensure(a, 0, owner) {
                Ok(()) if self.cache[a][0].is_zero() => Ok(self.zero()),
                Ok(()) => {
                    self.ensure(b, 0, owner)?;
                    Ok(self.cache[a][0].mul(&self.cache[b][0]))
                }
                Err(e @ GrammarError::GuardViolation { .. }) => {
                    self.ensure(b, 0, owner)?;
                    if self.cache[b][0].is_zero() {
                        Ok(self.zero())
                    } else {
                        Err(e)
                    }
                }
                Err(e) => Err(e),
            };
        }
        self.ensure(a, 0, owner)?;
        self.ensure(b, 0, owner)?;
        let a0 = !self.cache[a][0].is_zero();
        let b0 = !self.cache[b][0].is_zero();
        let lo = if a0 { 0 } else { 1 };
        let hi = if b0 { k } else { k.saturating_sub(1) };
        if lo > hi {
            return Ok(self.zero());
        }
        self.ensure(a, hi, owner)?;
        self.ensure(b, k - lo, owner)?;
        let mut acc = self.zero();
        for i in lo..=hi {
            let (x, y) = (&self.cache[a][i], &self.cache[b][k - i]);
            if x.is_zero() || y.is_zero() {
                continue;
            }
            if self.scaled && i != 0 && i != k {
                acc.add_mul_int(x, y, &self.binom[k][i]);
            } else {
                acc.add_mul(x, y);
            }
        }
        Ok(acc)
    }

    fn exp_coeff(&mut self, id: usize, a: usize, k: usize, owner: usize) -> Result<C, GrammarError> {
        self.ensure(a, k, owner)?;
        if !self.cache[a][0].is_zero() {
            return Err(GrammarError::Series {
                unknown: self.name(owner),
                source: SeriesError::NonzeroConstant {
                    op: "exp",
                    constant: format!("{:?}", self.cache[a][0]),
                },
            });
        }
        if k == 0 {
            return Ok(self.one.clone());
        }
        let mut acc = self.zero();
        for j in 1..=k {
            let (x, e) = (&self.cache[a][j], &self.cache[id][k - j]);
            if x.is_zero() || e.is_zero() {
                continue;
            }
            if self.scaled {
                // e~_k = sum_j C(k-1, j-1) a~_j e~_{k-j}
                if j == 1 || j == k {
                    acc.add_mul(x, e);
                } else {
                    acc.add_mul_int(x, e, &self.binom[k - 1][j - 1]);
                }
            } else {
                acc.add_mul_int(x, e, &Integer::from(j));
            }
        }
        if !self.scaled {
            acc.scale(&Rational::from((1, k as u64)));
        }
        Ok(acc)
    }

    fn recip_coeff(&mut self, id: usize, a: usize, k: usize, owner: usize) -> Result<C, GrammarError> {
        self.ensure(a, k, owner)?;
        let inv0 = match self.cache[id].first() {
            Some(q0) => q0.clone(),
            None => self.cache[a][0].inverse().ok_or_else(|| GrammarError::Series {
                unknown: self.name(owner),
                source: SeriesError::NotUnit {
                    constant: format!("{:?}", self.cache[a][0]),
                },
            })?,
        };
        if k == 0 {
            return Ok(inv0);
        }
        let mut acc = self.zero();
        for j in 1..=k {
            let (x, q) = (&self.cache[a][j], &self.cache[id][k - j]);
            if x.is_zero() || q.is_zero() {
                continue;
            }
            if self.scaled && j != k {
                acc.add_mul_int(x, q, &self.binom[k][j]);
            } else {
                acc.add_mul(x, q);
            }
        }
        let mut v = acc.mul(&inv0);
        v.neg_assign();
        Ok(v)
    }

    fn compose_coeff(&mut self, id: usize, a: usize, k: usize, owner: usize) -> Result<C, GrammarError> {
        self.ensure(a, k, owner)?;
        if !self.cache[a][0].is_zero() {
            return Err(GrammarError::Series {
                unknown: self.name(owner),
                source: SeriesError::NonzeroConstant {
                    op: "composition",
                    constant: format!("{:?}", self.cache[a][0]),
                },
            });
        }
        let outer_len = match &self.ops[id] {
            Op::Compose(o, _) => o.len(),
            _ => unreachable!(),
        };
        if k >= outer_len {
            return Err(GrammarError::KnownTooShort {
                unknown: self.name(owner),
                have: outer_len - 1,
                need: k,
            });
        }
        // powers[id][j - 1] holds the coefficients of inner^j.
        let mut powers = std::mem::take(&mut self.powers[id]);
        let inner = &self.cache[a];
        if k >= 1 {
            powers.push(Vec::new());
        }
        for j in 1..=k {
            let v = if j == 1 {
                inner[k].clone()
            } else if j > k {
                self.zero()
            } else {
                let prev = &powers[j - 2];
                let mut acc = self.zero();
                for i in (j - 1)..k {
                    let (p, x) = (&prev[i], &inner[k - i]);
                    if p.is_zero() || x.is_zero() {
                        continue;
                    }
                    if self.scaled && i != 0 {
                        acc.add_mul_int(p, x, &self.binom[k][i]);
                    } else {
                        acc.add_mul(p, x);
                    }
                }
                acc
            };
            let row = &mut powers[j - 1];
            while row.len() < k {
                row.push(C::zero(&self.sys.ctx));
            }
            row.push(v);
        }
        let outer = match &self.ops[id] {
            Op::Compose(o, _) => o,
            _ => unreachable!(),
        };
        let mut acc = if k == 0 { outer[0].clone() } else { self.zero() };
        for j in 1..=k {
            let p = &powers[j - 1][k];
            if !p.is_zero() && !outer[j].is_zero() {
                acc.add_mul(&outer[j], p);
            }
        }
        self.powers[id] = powers;
        Ok(acc)
    }
}

/// Bring a coefficient to the system's shape, zero-padding if it is shorter.
fn widen<C: Coeff>(c: C, ctx: &C::Ctx) -> C {
    if &c.ctx() == ctx {
        return c;
    }
    let mut z = C::zero(ctx);
    z.add_assign(&c);
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{UnivariateSeries, YPoly};

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn tree_function_by_both_routes() {
        let mut sys: GrammarSystem<Rational> = GrammarSystem::new(Var::X, ());
        let w = sys.unknown("W");
        sys.define("W", w.exp().mul_var());
        let a = sys.solve(10).unwrap();
        let b = sys.solve_by_iteration(10).unwrap();
        assert_eq!(a.series("W"), b.series("W"));
        assert_eq!(a.series("W").coeff(3), &q(3, 2));
        assert!(b.rounds <= 12);
    }

    #[test]
    fn unguarded_rule_is_reported() {
        let mut sys: GrammarSystem<Rational> = GrammarSystem::new(Var::X, ());
        let a = sys.unknown("A");
        let one = sys.int(1);
        sys.define("A", &one + &(&a * &a));
        match sys.solve(5) {
            Err(GrammarError::GuardViolation { unknown, order }) => {
                assert_eq!(unknown, "A");
                assert_eq!(order, 0);
            }
            other => panic!("expected guard violation, got {other:?}"),
        }
        assert!(matches!(sys.solve_by_iteration(5), Err(GrammarError::NoFixedPoint { .. })));
    }

    #[test]
    fn undefined_unknown() {
        let mut sys: GrammarSystem<Rational> = GrammarSystem::new(Var::X, ());
        let b = sys.unknown("B");
        sys.define("A", b.mul_var());
        assert_eq!(sys.solve(3).unwrap_err(), GrammarError::Undefined("B".into()));
    }

    #[test]
    fn ordinary_variable_catalan() {
        // C = 1 + u C^2
        let mut sys: GrammarSystem<Rational> = GrammarSystem::new(Var::U, ());
        let c = sys.unknown("C");
        sys.define("C", sys.int(1) + (&c * &c).mul_var());
        let s = sys.solve(8).unwrap();
        let cat = [1, 1, 2, 5, 14, 42, 132, 429, 1430];
        for (n, want) in cat.iter().enumerate() {
            assert_eq!(s.series("C").coeff(n), &q(*want, 1));
        }
    }

    #[test]
    fn reciprocal_and_compose_nodes() {
        // A = x / (1 - A) gives Catalan numbers shifted; exponential scaling
        // must agree with the plain iteration.
        let mut sys: GrammarSystem<Rational> = GrammarSystem::new(Var::X, ());
        let a = sys.unknown("A");
        sys.define("A", (sys.int(1) - &a).recip().mul_var());
        let on = sys.solve(9).unwrap();
        let it = sys.solve_by_iteration(9).unwrap();
        assert_eq!(on.series("A"), it.series("A"));

        // F = x exp(G(F)) with G = x^2/2 fixed gives the same as F = x exp(F^2/2).
        let g = UnivariateSeries::from_rationals(Var::X, vec![q(0, 1), q(0, 1), q(1, 2)]);
        let g = crate::series::Series::from_coeffs(Var::X, (), {
            let mut c = g.coeffs().to_vec();
            c.resize(12, Rational::new());
            c
        });
        let mut s1: GrammarSystem<Rational> = GrammarSystem::new(Var::X, ());
        let f = s1.unknown("F");
        s1.define("F", f.compose_into(g).exp().mul_var());
        let mut s2: GrammarSystem<Rational> = GrammarSystem::new(Var::X, ());
        let f2 = s2.unknown("F");
        s2.define("F", (&f2 * &f2).scale(q(1, 2)).exp().mul_var());
        assert_eq!(s1.solve(10).unwrap().series("F"), s2.solve(10).unwrap().series("F"));
    }

    #[test]
    fn shift_down_node() {
        // B = u (1 + B^2) and D = B^2 / u.
        let mut sys: GrammarSystem<Rational> = GrammarSystem::new(Var::U, ());
        let b = sys.unknown("B");
        sys.define("B", sys.var_expr() + (&b * &b).mul_var());
        let d = (&b * &b).shift_down();
        sys.define("D", d);
        let s = sys.solve(6).unwrap();
        let bb = s.series("B");
        let want = (bb * bb).shift_down().unwrap();
        assert_eq!(s.series("D").truncate(5), want);
    }

    #[test]
    fn bivariate_solve_matches_iteration() {
        // D = y + x D^2 exp(y x D)
        let ty = 8;
        let mut sys: GrammarSystem<YPoly> = GrammarSystem::new(Var::X, ty);
        let d = sys.unknown("D");
        let y = Expr::constant(YPoly::monomial(ty, 1, q(1, 1)));
        let xd = d.mul_var();
        sys.define("D", &y + &(&xd * &d) * (&y * &xd).exp());
        let a = sys.solve(5).unwrap();
        let b = sys.solve_by_iteration(5).unwrap();
        assert_eq!(a.series("D"), b.series("D"));
        assert!(a.negative.is_empty());
    }
}
