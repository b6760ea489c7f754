//! The four-party correlator inequality `S <= 7`.
//!
//! Parties are A=0, B=1, C=2, D=3. No term involves both B and C, so the
//! inequality can be evaluated from the ABD and ACD marginals alone.

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::behavior::{decode, outcome_sign, Behavior};
use crate::prob::{rat, Prob};
use crate::quantum::{QuantumError, QuantumModel};

pub const PARTY_A: usize = 0;
pub const PARTY_B: usize = 1;
pub const PARTY_C: usize = 2;
pub const PARTY_D: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InequalityError {
    #[error("correlator term {0} lists a party twice")]
    DuplicateParty(String),
    #[error("correlator term {0} has a zero coefficient")]
    ZeroCoefficient(String),
    #[error("party {0} does not exist in the behavior")]
    UnknownParty(usize),
    #[error("behavior must have 4 parties with binary settings and outcomes")]
    WrongShape,
    #[error("correlator {term} depends on absent parties' settings (variation {variation:e})")]
    SignallingAmbiguity { term: String, variation: f64 },
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorTerm {
    /// `(party, setting)` pairs.
    pub factors: Vec<(usize, usize)>,
    pub coefficient: BigRational,
}

impl CorrelatorTerm {
    pub fn new(factors: Vec<(usize, usize)>, coefficient: BigRational) -> Result<Self, InequalityError> {
        let term = Self { factors, coefficient };
        let mut parties: Vec<usize> = term.factors.iter().map(|f| f.0).collect();
        parties.sort_unstable();
        if parties.windows(2).any(|w| w[0] == w[1]) {
            return Err(InequalityError::DuplicateParty(term.label()));
        }
        if term.coefficient.is_zero() {
            return Err(InequalityError::ZeroCoefficient(term.label()));
        }
        Ok(term)
    }

    pub fn involves(&self, party: usize) -> bool {
        self.factors.iter().any(|f| f.0 == party)
    }

    /// Label such as `A0B1D1`.
    pub fn label(&self) -> String {
        self.factors
            .iter()
            .map(|&(p, x)| {
                let name = (b'A' + p as u8) as char;
                format!("{name}{x}")
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityS {
    terms: Vec<CorrelatorTerm>,
    bound: BigRational,
}

impl InequalityS {
    pub fn new(terms: Vec<CorrelatorTerm>, bound: BigRational) -> Self {
        Self { terms, bound }
    }

    /// The 23-term inequality on the A-D / B-D / A-C / C-D structure.
    pub fn four_party() -> Self {
        const A: usize = PARTY_A;
        const B: usize = PARTY_B;
        const C: usize = PARTY_C;
        const D: usize = PARTY_D;
        let table: [(i64, &[(usize, usize)]); 23] = [
            (-3, &[(A, 0)]),
            (-1, &[(B, 0)]),
            (-1, &[(B, 1)]),
            (-1, &[(C, 0)]),
            (-3, &[(D, 0)]),
            (-1, &[(A, 1), (B, 0)]),
            (-1, &[(A, 1), (B, 1)]),
            (1, &[(A, 0), (C, 0)]),
            (2, &[(A, 1), (C, 0)]),
            (1, &[(A, 0), (D, 0)]),
            (1, &[(B, 0), (D, 1)]),
            (-1, &[(B, 1), (D, 1)]),
            (-1, &[(C, 0), (D, 0)]),
            (-2, &[(C, 1), (D, 1)]),
            (1, &[(A, 0), (B, 0), (D, 0)]),
            (1, &[(A, 0), (B, 0), (D, 1)]),
            (1, &[(A, 0), (B, 1), (D, 0)]),
            (-1, &[(A, 0), (B, 1), (D, 1)]),
            (-1, &[(A, 1), (B, 0), (D, 0)]),
            (-1, &[(A, 1), (B, 1), (D, 0)]),
            (1, &[(A, 0), (C, 0), (D, 0)]),
            (2, &[(A, 1), (C, 0), (D, 0)]),
            (-2, &[(A, 0), (C, 1), (D, 1)]),
        ];
        let terms = table
            .iter()
            .map(|(k, f)| CorrelatorTerm::new(f.to_vec(), rat(*k, 1)).expect("valid term"))
            .collect();
        Self { terms, bound: rat(7, 1) }
    }

    pub fn terms(&self) -> &[CorrelatorTerm] {
        &self.terms
    }

    pub fn bound(&self) -> &BigRational {
        &self.bound
    }

    fn check_shape<T: Prob>(b: &Behavior<T>) -> Result<(), InequalityError> {
        if b.parties() == 4 && b.is_binary() {
            Ok(())
        } else {
            Err(InequalityError::WrongShape)
        }
    }

    /// `Σ coefficient × correlator`, checking that every correlator is
    /// independent of the absent parties' settings within `tol`.
    pub fn evaluate<T: Prob>(&self, b: &Behavior<T>, tol: &T) -> Result<T, InequalityError> {
        Self::check_shape(b)?;
        let mut total = T::zero();
        for term in &self.terms {
            total = total + coefficient::<T>(&term.coefficient) * correlator(b, term, tol)?;
        }
        Ok(total)
    }

    /// Evaluation with an explicit setting convention for absent parties
    /// (`absent[p]` is used whenever party p is not in a term).
    pub fn evaluate_at<T: Prob>(&self, b: &Behavior<T>, absent: &[usize]) -> Result<T, InequalityError> {
        Self::check_shape(b)?;
        let mut total = T::zero();
        for term in &self.terms {
            total = total + coefficient::<T>(&term.coefficient) * correlator_at(b, term, absent)?;
        }
        Ok(total)
    }

    /// Operator-expectation path, independent of the Born-rule table.
    pub fn evaluate_quantum(&self, m: &QuantumModel) -> Result<f64, InequalityError> {
        if m.parties() != 4 {
            return Err(InequalityError::WrongShape);
        }
        self.terms.iter().try_fold(0.0, |acc, term| {
            Ok(acc + coefficient::<f64>(&term.coefficient) * m.expectation(&term.factors)?)
        })
    }

    /// Coefficient vector over the 256 joint probabilities
    /// `p(abcd|xyzw)`, indexed `16 * setting_index + outcome_index`, with
    /// absent parties read at setting 0.
    pub fn as_functional(&self) -> Vec<BigRational> {
        let mut out = vec![BigRational::zero(); 256];
        for term in &self.terms {
            let mut xs = [0usize; 4];
            for &(p, x) in &term.factors {
                xs[p] = x;
            }
            let s = xs.iter().fold(0, |acc, &x| acc * 2 + x);
            for o in 0..16 {
                let os = decode(&[2, 2, 2, 2], o);
                let sign: i64 = term.factors.iter().map(|&(p, _)| outcome_sign(os[p])).product();
                out[s * 16 + o] += &term.coefficient * BigRational::from_integer(sign.into());
            }
        }
        out
    }

    pub fn sum_abs_coefficients(&self) -> BigRational {
        self.terms.iter().map(|t| Signed::abs(&t.coefficient)).sum()
    }

    /// Exhaustive maximum over the 256 deterministic local strategies.
    /// Returns the value and the maximizing strategy as `response[party][setting]`
    /// outcome indices; ties keep the first strategy in enumeration order.
    pub fn local_deterministic_max(&self) -> (BigRational, [[usize; 2]; 4]) {
        let mut best: Option<(BigRational, [[usize; 2]; 4])> = None;
        for code in 0..256usize {
            let mut response = [[0usize; 2]; 4];
            for (p, slot) in response.iter_mut().enumerate() {
                let bits = code >> (2 * (3 - p)) & 3;
                *slot = [bits >> 1, bits & 1];
            }
            let value: BigRational = self
                .terms
                .iter()
                .map(|t| {
                    let sign: i64 = t
                        .factors
                        .iter()
                        .map(|&(p, x)| outcome_sign(response[p][x]))
                        .product();
                    &t.coefficient * BigRational::from_integer(sign.into())
                })
                .sum();
            if best.as_ref().is_none_or(|(v, _)| value > *v) {
                best = Some((value, response));
            }
        }
        best.expect("nonempty enumeration")
    }
}

fn coefficient<T: Prob>(c: &BigRational) -> T {
    use num_traits::ToPrimitive;
    T::from_ratio(c.numer().to_i64().expect("small"), c.denom().to_i64().expect("small"))
}

/// Correlator of `term` with every absent party at the setting given in
/// `absent`.
pub fn correlator_at<T: Prob>(
    b: &Behavior<T>,
    term: &CorrelatorTerm,
    absent: &[usize],
) -> Result<T, InequalityError> {
    if absent.len() != b.parties() {
        return Err(InequalityError::WrongShape);
    }
    let mut xs = absent.to_vec();
    for &(p, x) in &term.factors {
        if p >= b.parties() || x >= b.settings()[p] {
            return Err(InequalityError::UnknownParty(p));
        }
        xs[p] = x;
    }
    let block = b.block(&xs);
    let mut acc = T::zero();
    for (o, prob) in block.iter().enumerate() {
        let os = b.outcome_tuple(o);
        let sign: i64 = term.factors.iter().map(|&(p, _)| outcome_sign(os[p])).product();
        acc = if sign > 0 { acc + prob.clone() } else { acc - prob.clone() };
    }
    Ok(acc)
}

/// Correlator with absent parties at setting 0, after checking that every
/// other absent-setting choice gives the same value within `tol`.
pub fn correlator<T: Prob>(b: &Behavior<T>, term: &CorrelatorTerm, tol: &T) -> Result<T, InequalityError> {
    let n = b.parties();
    let absent: Vec<usize> = (0..n).filter(|&p| !term.involves(p)).collect();
    let radices: Vec<usize> = absent.iter().map(|&p| b.settings()[p]).collect();
    let combos: usize = radices.iter().product();
    let reference = correlator_at(b, term, &vec![0; n])?;
    for k in 1..combos {
        let digits = decode(&radices, k);
        let mut xs = vec![0; n];
        for (&p, &d) in absent.iter().zip(&digits) {
            xs[p] = d;
        }
        let value = correlator_at(b, term, &xs)?;
        let diff = (value - reference.clone()).abs();
        if diff > *tol {
            return Err(InequalityError::SignallingAmbiguity {
                term: term.label(),
                variation: diff.to_f64(),
            });
        }
    }
    Ok(reference)
}
