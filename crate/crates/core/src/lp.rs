//! Exact rational linear programming with checkable certificates.
//!
//! Problems are stated as
//!
//! ```text
//! maximize c·x  subject to  A x = b,  G x <= h,  x >= 0
//! ```
//!
//! and solved by a two-phase dense tableau simplex with Bland's rule. The
//! solver returns either an optimality certificate (primal point, dual
//! multipliers, common objective value) or a Farkas certificate of
//! infeasibility. [`verify`] re-checks a certificate against the problem
//! using only the problem data.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prob::{fmt_rational, parse_rational};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("objective is unbounded")]
    Unbounded,
    #[error("constraint {label} references variable {var} but the problem has {num_vars}")]
    VariableOutOfRange { label: String, var: usize, num_vars: usize },
    #[error("objective has {got} coefficients, expected {expected}")]
    ObjectiveLength { got: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("certificate dimensions do not match the problem")]
    Dimension,
    #[error("primal variable {0} is negative")]
    NegativePrimal(usize),
    #[error("equality {0} is violated by the primal point")]
    EqualityViolated(String),
    #[error("inequality {0} is violated by the primal point")]
    InequalityViolated(String),
    #[error("multiplier of inequality {0} is negative")]
    NegativeMultiplier(String),
    #[error("dual constraint for variable {0} is violated")]
    DualInfeasible(usize),
    #[error("primal value {primal} differs from dual value {dual}")]
    DualityGap { primal: String, dual: String },
    #[error("stated objective value does not match the primal point")]
    ValueMismatch,
    #[error("Farkas combination does not yield a contradiction (rhs {0})")]
    NoContradiction(String),
}

/// Sparse row `Σ coeffs·x (= or <=) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, BigRational)>,
    pub rhs: BigRational,
    pub label: String,
}

impl Constraint {
    pub fn new(coeffs: Vec<(usize, BigRational)>, rhs: BigRational, label: impl Into<String>) -> Self {
        Self { coeffs, rhs, label: label.into() }
    }

    pub fn eval(&self, x: &[BigRational]) -> BigRational {
        self.coeffs.iter().map(|(j, a)| a * &x[*j]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub num_vars: usize,
    /// Maximized.
    pub objective: Vec<BigRational>,
    pub equalities: Vec<Constraint>,
    pub inequalities: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![BigRational::zero(); num_vars],
            equalities: Vec::new(),
            inequalities: Vec::new(),
        }
    }

    pub fn check(&self) -> Result<(), LpError> {
        if self.objective.len() != self.num_vars {
            return Err(LpError::ObjectiveLength {
                got: self.objective.len(),
                expected: self.num_vars,
            });
        }
        for c in self.equalities.iter().chain(&self.inequalities) {
            if let Some(&(var, _)) = c.coeffs.iter().find(|(j, _)| *j >= self.num_vars) {
                return Err(LpError::VariableOutOfRange {
                    label: c.label.clone(),
                    var,
                    num_vars: self.num_vars,
                });
            }
        }
        Ok(())
    }

    /// `Aᵀu + Gᵀv` for multipliers on the equalities and inequalities.
    fn combine(&self, eq: &[BigRational], ineq: &[BigRational]) -> Vec<BigRational> {
        let mut out = vec![BigRational::zero(); self.num_vars];
        for (c, u) in self.equalities.iter().zip(eq).chain(self.inequalities.iter().zip(ineq)) {
            if u.is_zero() {
                continue;
            }
            for (j, a) in &c.coeffs {
                out[*j] += a * u;
            }
        }
        out
    }

    fn combine_rhs(&self, eq: &[BigRational], ineq: &[BigRational]) -> BigRational {
        self.equalities
            .iter()
            .zip(eq)
            .chain(self.inequalities.iter().zip(ineq))
            .map(|(c, u)| &c.rhs * u)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalCertificate {
    #[serde(with = "rational_vec")]
    pub primal: Vec<BigRational>,
    #[serde(with = "rational_vec")]
    pub eq_duals: Vec<BigRational>,
    #[serde(with = "rational_vec")]
    pub ineq_duals: Vec<BigRational>,
    #[serde(with = "rational")]
    pub value: BigRational,
}

/// Multipliers `u` (free) and `v >= 0` with `Aᵀu + Gᵀv >= 0` and
/// `b·u + h·v < 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarkasCertificate {
    #[serde(with = "rational_vec")]
    pub eq_multipliers: Vec<BigRational>,
    #[serde(with = "rational_vec")]
    pub ineq_multipliers: Vec<BigRational>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Certificate {
    Optimal(OptimalCertificate),
    Infeasible(FarkasCertificate),
}

impl Certificate {
    pub fn is_optimal(&self) -> bool {
        matches!(self, Certificate::Optimal(_))
    }

    pub fn value(&self) -> Option<&BigRational> {
        match self {
            Certificate::Optimal(c) => Some(&c.value),
            Certificate::Infeasible(_) => None,
        }
    }

    pub fn primal(&self) -> Option<&[BigRational]> {
        match self {
            Certificate::Optimal(c) => Some(&c.primal),
            Certificate::Infeasible(_) => None,
        }
    }
}

/// Checks a certificate against `lp` in exact arithmetic. Shares no code
/// with the solver.
pub fn verify(lp: &LinearProgram, cert: &Certificate) -> Result<(), VerifyError> {
    let n_eq = lp.equalities.len();
    let n_in = lp.inequalities.len();
    match cert {
        Certificate::Optimal(c) => {
            if c.primal.len() != lp.num_vars || c.eq_duals.len() != n_eq || c.ineq_duals.len() != n_in {
                return Err(VerifyError::Dimension);
            }
            if let Some(j) = c.primal.iter().position(|x| x.is_negative()) {
                return Err(VerifyError::NegativePrimal(j));
            }
            for e in &lp.equalities {
                if e.eval(&c.primal) != e.rhs {
                    return Err(VerifyError::EqualityViolated(e.label.clone()));
                }
            }
            for g in &lp.inequalities {
                if g.eval(&c.primal) > g.rhs {
                    return Err(VerifyError::InequalityViolated(g.label.clone()));
                }
            }
            for (g, v) in lp.inequalities.iter().zip(&c.ineq_duals) {
                if v.is_negative() {
                    return Err(VerifyError::NegativeMultiplier(g.label.clone()));
                }
            }
            let combined = lp.combine(&c.eq_duals, &c.ineq_duals);
            if let Some(j) = combined.iter().zip(&lp.objective).position(|(a, c)| a < c) {
                return Err(VerifyError::DualInfeasible(j));
            }
            let primal: BigRational = lp.objective.iter().zip(&c.primal).map(|(a, x)| a * x).sum();
            let dual = lp.combine_rhs(&c.eq_duals, &c.ineq_duals);
            if primal != dual {
                return Err(VerifyError::DualityGap {
                    primal: fmt_rational(&primal),
                    dual: fmt_rational(&dual),
                });
            }
            if primal != c.value {
                return Err(VerifyError::ValueMismatch);
            }
            Ok(())
        }
        Certificate::Infeasible(f) => {
            if f.eq_multipliers.len() != n_eq || f.ineq_multipliers.len() != n_in {
                return Err(VerifyError::Dimension);
            }
            for (g, v) in lp.inequalities.iter().zip(&f.ineq_multipliers) {
                if v.is_negative() {
                    return Err(VerifyError::NegativeMultiplier(g.label.clone()));
                }
            }
            let combined = lp.combine(&f.eq_multipliers, &f.ineq_multipliers);
            if let Some(j) = combined.iter().position(|a| a.is_negative()) {
                return Err(VerifyError::DualInfeasible(j));
            }
            let rhs = lp.combine_rhs(&f.eq_multipliers, &f.ineq_multipliers);
            if !rhs.is_negative() {
                return Err(VerifyError::NoContradiction(fmt_rational(&rhs)));
            }
            Ok(())
        }
    }
}

struct Tableau {
    rows: Vec<Vec<BigRational>>,
    rhs: Vec<BigRational>,
    basis: Vec<usize>,
    /// Reduced costs `c_j - c_B B⁻¹ A_j`.
    reduced: Vec<BigRational>,
    objective: BigRational,
    /// Column holding `B⁻¹ e_r` for each row.
    identity_col: Vec<usize>,
    /// Row sign applied to make the right-hand side nonnegative.
    row_sign: Vec<bool>,
    artificial_start: usize,
    pivots: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars;
        let n_in = lp.inequalities.len();
        let m = lp.equalities.len() + n_in;
        let mut needs_artificial = Vec::with_capacity(m);
        let mut row_sign = Vec::with_capacity(m);
        for (r, c) in lp.equalities.iter().chain(&lp.inequalities).enumerate() {
            let negate = c.rhs.is_negative();
            row_sign.push(negate);
            needs_artificial.push(r < lp.equalities.len() || negate);
        }
        let n_art = needs_artificial.iter().filter(|&&a| a).count();
        let artificial_start = n + n_in;
        let cols = artificial_start + n_art;

        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut identity_col = Vec::with_capacity(m);
        let mut next_art = artificial_start;
        for (r, c) in lp.equalities.iter().chain(&lp.inequalities).enumerate() {
            let sign = if row_sign[r] { -BigRational::one() } else { BigRational::one() };
            let mut row = vec![BigRational::zero(); cols];
            for (j, a) in &c.coeffs {
                row[*j] += a * &sign;
            }
            if r >= lp.equalities.len() {
                row[n + r - lp.equalities.len()] = sign.clone();
            }
            if needs_artificial[r] {
                row[next_art] = BigRational::one();
                identity_col.push(next_art);
                next_art += 1;
            } else {
                identity_col.push(n + r - lp.equalities.len());
            }
            rows.push(row);
            rhs.push(&c.rhs * &sign);
        }
        Self {
            basis: identity_col.clone(),
            rows,
            rhs,
            reduced: Vec::new(),
            objective: BigRational::zero(),
            identity_col,
            row_sign,
            artificial_start,
            pivots: 0,
        }
    }

    fn cols(&self) -> usize {
        self.rows.first().map_or(self.artificial_start, Vec::len)
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.artificial_start
    }

    /// Sets up reduced costs for the objective `costs` (indexed by column).
    fn price(&mut self, costs: &[BigRational]) {
        let mut reduced = costs.to_vec();
        let mut objective = BigRational::zero();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = &costs[b];
            if cb.is_zero() {
                continue;
            }
            for (d, a) in reduced.iter_mut().zip(&self.rows[r]) {
                if !a.is_zero() {
                    *d -= cb * a;
                }
            }
            objective += cb * &self.rhs[r];
        }
        self.reduced = reduced;
        self.objective = objective;
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let inv = self.rows[r][q].recip();
        let pivot_row = std::mem::take(&mut self.rows[r]);
        let pivot_row: Vec<BigRational> = pivot_row
            .into_iter()
            .map(|a| if a.is_zero() { a } else { a * &inv })
            .collect();
        let pivot_rhs = &self.rhs[r] * &inv;
        let nz: Vec<usize> = (0..pivot_row.len()).filter(|&j| !pivot_row[j].is_zero()).collect();

        for i in 0..self.rows.len() {
            if i == r || self.rows[i][q].is_zero() {
                continue;
            }
            let f = self.rows[i][q].clone();
            let row = &mut self.rows[i];
            for &j in &nz {
                row[j] -= &f * &pivot_row[j];
            }
            self.rhs[i] -= &f * &pivot_rhs;
        }
        if !self.reduced[q].is_zero() {
            let f = self.reduced[q].clone();
            for &j in &nz {
                self.reduced[j] -= &f * &pivot_row[j];
            }
            self.objective += &f * &pivot_rhs;
        }
        self.rows[r] = pivot_row;
        self.rhs[r] = pivot_rhs;
        self.basis[r] = q;
        self.pivots += 1;
    }

    /// Bland's rule iterations. `Ok(())` at optimality.
    fn run(&mut self, allow_artificial: bool) -> Result<(), LpError> {
        loop {
            let limit = if allow_artificial { self.cols() } else { self.artificial_start };
            let Some(q) = (0..limit).find(|&j| self.reduced[j].is_positive()) else {
                return Ok(());
            };
            let mut leave: Option<(usize, BigRational)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][q];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[r] / a;
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => ratio < *best || (ratio == *best && self.basis[r] < self.basis[*lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
            let (r, _) = leave.ok_or(LpError::Unbounded)?;
            self.pivot(r, q);
        }
    }

    /// Row multipliers `y = c_B B⁻¹` mapped back to the original row signs.
    fn duals(&self, costs: &[BigRational]) -> Vec<BigRational> {
        self.identity_col
            .iter()
            .zip(&self.row_sign)
            .map(|(&col, &neg)| {
                let y = &costs[col] - &self.reduced[col];
                if neg {
                    -y
                } else {
                    y
                }
            })
            .collect()
    }
}

/// Solver statistics for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SolveStats {
    pub rows: usize,
    pub cols: usize,
    pub pivots: usize,
}

pub fn maximize(lp: &LinearProgram) -> Result<Certificate, LpError> {
    maximize_with_stats(lp).map(|(c, _)| c)
}

pub fn maximize_with_stats(lp: &LinearProgram) -> Result<(Certificate, SolveStats), LpError> {
    lp.check()?;
    let mut t = Tableau::build(lp);
    let cols = t.cols();
    let n_eq = lp.equalities.len();

    let mut phase1 = vec![BigRational::zero(); cols];
    for c in phase1.iter_mut().skip(t.artificial_start) {
        *c = -BigRational::one();
    }
    t.price(&phase1);
    t.run(true)?;

    if t.objective.is_negative() {
        let y = t.duals(&phase1);
        let stats = SolveStats { rows: t.rows.len(), cols, pivots: t.pivots };
        return Ok((
            Certificate::Infeasible(FarkasCertificate {
                eq_multipliers: y[..n_eq].to_vec(),
                ineq_multipliers: y[n_eq..].to_vec(),
            }),
            stats,
        ));
    }

    // Drive zero-level artificials out of the basis where possible; rows
    // where that fails are linearly dependent and stay inert.
    for r in 0..t.rows.len() {
        if t.is_artificial(t.basis[r]) {
            if let Some(q) = (0..t.artificial_start).find(|&j| !t.rows[r][j].is_zero()) {
                t.pivot(r, q);
            }
        }
    }

    let mut phase2 = vec![BigRational::zero(); cols];
    phase2[..lp.num_vars].clone_from_slice(&lp.objective);
    t.price(&phase2);
    t.run(false)?;

    let mut primal = vec![BigRational::zero(); lp.num_vars];
    for (r, &b) in t.basis.iter().enumerate() {
        if b < lp.num_vars {
            primal[b] = t.rhs[r].clone();
        }
    }
    let y = t.duals(&phase2);
    let stats = SolveStats { rows: t.rows.len(), cols, pivots: t.pivots };
    Ok((
        Certificate::Optimal(OptimalCertificate {
            primal,
            eq_duals: y[..n_eq].to_vec(),
            ineq_duals: y[n_eq..].to_vec(),
            value: t.objective.clone(),
        }),
        stats,
    ))
}

pub(crate) mod rational {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}")))
    }
}

pub(crate) mod rational_vec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(fmt_rational))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| parse_rational(s).ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}"))))
            .collect()
    }
}
