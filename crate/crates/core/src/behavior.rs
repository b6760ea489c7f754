//! Conditional probability tables `p(outcomes | settings)` for n parties.
//!
//! Settings and outcomes are indexed in mixed radix with party 0 as the
//! most significant digit. Outcome index 0 stands for the eigenvalue +1 and
//! index 1 for -1.

use num_rational::BigRational;
use thiserror::Error;

use crate::prob::Prob;

/// Default tolerance for float behaviors.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BehaviorError {
    #[error("invalid shape: {0}")]
    Shape(String),
    #[error("negative probability {value} at settings {settings:?}, outcomes {outcomes:?}")]
    Negative {
        settings: Vec<usize>,
        outcomes: Vec<usize>,
        value: f64,
    },
    #[error("block for settings {settings:?} sums to {sum}")]
    NotNormalized { settings: Vec<usize>, sum: f64 },
    #[error("party subset is empty")]
    EmptySubset,
    #[error("party {0} does not exist")]
    UnknownParty(usize),
    #[error("party {0} appears more than once")]
    DuplicateParty(usize),
    #[error("conditioning event has zero probability at settings {settings:?}")]
    ZeroProbabilityCondition { settings: Vec<usize> },
    #[error("expected a 2-party behavior with 2 settings and 2 outcomes per party")]
    WrongShape,
    #[error("behavior is signalling (variation {variation})")]
    SignallingInput { variation: f64 },
}

pub(crate) fn encode(radices: &[usize], digits: &[usize]) -> usize {
    radices
        .iter()
        .zip(digits)
        .fold(0, |acc, (&r, &d)| acc * r + d)
}

pub(crate) fn decode(radices: &[usize], mut index: usize) -> Vec<usize> {
    let mut digits = vec![0; radices.len()];
    for (slot, &r) in digits.iter_mut().zip(radices).rev() {
        *slot = index % r;
        index /= r;
    }
    digits
}

/// ±1 value of an outcome index.
pub fn outcome_sign(outcome: usize) -> i64 {
    if outcome == 0 {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Behavior<T = f64> {
    settings: Vec<usize>,
    outcomes: Vec<usize>,
    /// `table[setting_index][outcome_index]`
    table: Vec<Vec<T>>,
}

impl<T: Prob> Behavior<T> {
    /// Validates nonnegativity and normalization (to `tol`; pass zero for
    /// exact rationals).
    pub fn new(
        settings: Vec<usize>,
        outcomes: Vec<usize>,
        table: Vec<Vec<T>>,
        tol: &T,
    ) -> Result<Self, BehaviorError> {
        let b = Self::new_unchecked(settings, outcomes, table)?;
        b.validate(tol)?;
        Ok(b)
    }

    /// Checks only the table shape; probabilities are taken as given.
    pub fn new_unchecked(
        settings: Vec<usize>,
        outcomes: Vec<usize>,
        table: Vec<Vec<T>>,
    ) -> Result<Self, BehaviorError> {
        if settings.is_empty() || settings.len() != outcomes.len() {
            return Err(BehaviorError::Shape(
                "settings and outcomes must list the same nonzero number of parties".into(),
            ));
        }
        if settings.iter().chain(&outcomes).any(|&k| k == 0) {
            return Err(BehaviorError::Shape("every party needs at least one setting and outcome".into()));
        }
        let n_set: usize = settings.iter().product();
        let n_out: usize = outcomes.iter().product();
        if table.len() != n_set || table.iter().any(|row| row.len() != n_out) {
            return Err(BehaviorError::Shape(format!(
                "expected {n_set} blocks of {n_out} probabilities"
            )));
        }
        Ok(Self { settings, outcomes, table })
    }

    pub fn from_fn(
        settings: Vec<usize>,
        outcomes: Vec<usize>,
        mut f: impl FnMut(&[usize], &[usize]) -> T,
    ) -> Result<Self, BehaviorError> {
        let n_set: usize = settings.iter().product();
        let n_out: usize = outcomes.iter().product();
        let table = (0..n_set)
            .map(|s| {
                let xs = decode(&settings, s);
                (0..n_out).map(|o| f(&xs, &decode(&outcomes, o))).collect()
            })
            .collect();
        Self::new_unchecked(settings, outcomes, table)
    }

    pub fn uniform(settings: Vec<usize>, outcomes: Vec<usize>) -> Self {
        let n_out: usize = outcomes.iter().product();
        let p = T::from_ratio(1, n_out as i64);
        Self::from_fn(settings, outcomes, |_, _| p.clone()).expect("valid shape")
    }

    /// Uniform behavior with binary settings and outcomes.
    pub fn uniform_binary(parties: usize) -> Self {
        Self::uniform(vec![2; parties], vec![2; parties])
    }

    /// Local deterministic behavior: `response[i][x]` is party i's outcome
    /// index for setting x.
    pub fn deterministic(response: &[Vec<usize>], outcomes: Vec<usize>) -> Self {
        let settings = response.iter().map(Vec::len).collect();
        Self::from_fn(settings, outcomes, |xs, os| {
            let hit = xs
                .iter()
                .zip(os)
                .enumerate()
                .all(|(i, (&x, &o))| response[i][x] == o);
            if hit {
                T::one()
            } else {
                T::zero()
            }
        })
        .expect("valid shape")
    }

    /// Product of local conditional distributions `local[i][x][o]`.
    pub fn product(local: &[Vec<Vec<T>>]) -> Result<Self, BehaviorError> {
        let settings = local.iter().map(Vec::len).collect();
        let outcomes = local
            .iter()
            .map(|p| p.first().map_or(0, Vec::len))
            .collect();
        Self::from_fn(settings, outcomes, |xs, os| {
            xs.iter()
                .zip(os)
                .enumerate()
                .fold(T::one(), |acc, (i, (&x, &o))| acc * local[i][x][o].clone())
        })
    }

    pub fn parties(&self) -> usize {
        self.settings.len()
    }

    pub fn settings(&self) -> &[usize] {
        &self.settings
    }

    pub fn outcomes(&self) -> &[usize] {
        &self.outcomes
    }

    pub fn table(&self) -> &[Vec<T>] {
        &self.table
    }

    pub fn setting_index(&self, xs: &[usize]) -> usize {
        encode(&self.settings, xs)
    }

    pub fn outcome_index(&self, os: &[usize]) -> usize {
        encode(&self.outcomes, os)
    }

    pub fn setting_tuple(&self, index: usize) -> Vec<usize> {
        decode(&self.settings, index)
    }

    pub fn outcome_tuple(&self, index: usize) -> Vec<usize> {
        decode(&self.outcomes, index)
    }

    pub fn prob(&self, xs: &[usize], os: &[usize]) -> &T {
        &self.table[self.setting_index(xs)][self.outcome_index(os)]
    }

    pub fn block(&self, xs: &[usize]) -> &[T] {
        &self.table[self.setting_index(xs)]
    }

    pub fn is_binary(&self) -> bool {
        self.settings.iter().chain(&self.outcomes).all(|&k| k == 2)
    }

    pub fn validate(&self, tol: &T) -> Result<(), BehaviorError> {
        for (s, row) in self.table.iter().enumerate() {
            let mut sum = T::zero();
            for (o, p) in row.iter().enumerate() {
                if *p < -tol.clone() {
                    return Err(BehaviorError::Negative {
                        settings: self.setting_tuple(s),
                        outcomes: self.outcome_tuple(o),
                        value: p.to_f64(),
                    });
                }
                sum = sum + p.clone();
            }
            if (sum.clone() - T::one()).abs() > *tol {
                return Err(BehaviorError::NotNormalized {
                    settings: self.setting_tuple(s),
                    sum: sum.to_f64(),
                });
            }
        }
        Ok(())
    }

    /// Convex combination `weight * self + (1 - weight) * other`.
    pub fn mix(&self, other: &Self, weight: &T) -> Result<Self, BehaviorError> {
        if self.settings != other.settings || self.outcomes != other.outcomes {
            return Err(BehaviorError::Shape("mixing behaviors of different shapes".into()));
        }
        let rest = T::one() - weight.clone();
        let table = self
            .table
            .iter()
            .zip(&other.table)
            .map(|(r1, r2)| {
                r1.iter()
                    .zip(r2)
                    .map(|(p, q)| weight.clone() * p.clone() + rest.clone() * q.clone())
                    .collect()
            })
            .collect();
        Ok(Self { settings: self.settings.clone(), outcomes: self.outcomes.clone(), table })
    }

    pub fn map<U: Prob>(&self, f: impl Fn(&T) -> U) -> Behavior<U> {
        Behavior {
            settings: self.settings.clone(),
            outcomes: self.outcomes.clone(),
            table: self.table.iter().map(|row| row.iter().map(&f).collect()).collect(),
        }
    }

    pub fn to_f64(&self) -> Behavior<f64> {
        self.map(Prob::to_f64)
    }

    /// Exact conversion of every entry (binary floats are dyadic rationals).
    pub fn to_rational(&self) -> Behavior<BigRational> {
        self.map(|p| <BigRational as Prob>::from_f64(p.to_f64()))
    }

    fn check_subset(&self, subset: &[usize]) -> Result<(), BehaviorError> {
        if subset.is_empty() {
            return Err(BehaviorError::EmptySubset);
        }
        let mut seen = vec![false; self.parties()];
        for &p in subset {
            if p >= self.parties() {
                return Err(BehaviorError::UnknownParty(p));
            }
            if std::mem::replace(&mut seen[p], true) {
                return Err(BehaviorError::DuplicateParty(p));
            }
        }
        Ok(())
    }

    /// Sums out the parties outside `subset`, keeping the full setting
    /// tuple so that dependence on excluded settings stays visible.
    pub fn marginal(&self, subset: &[usize]) -> Result<Marginal<T>, BehaviorError> {
        self.check_subset(subset)?;
        let sub_radices: Vec<usize> = subset.iter().map(|&p| self.outcomes[p]).collect();
        let n_sub: usize = sub_radices.iter().product();
        let n_out: usize = self.outcomes.iter().product();
        let projection: Vec<usize> = (0..n_out)
            .map(|o| {
                let os = self.outcome_tuple(o);
                let digits: Vec<usize> = subset.iter().map(|&p| os[p]).collect();
                encode(&sub_radices, &digits)
            })
            .collect();
        let table = self
            .table
            .iter()
            .map(|row| {
                let mut out = vec![T::zero(); n_sub];
                for (p, &k) in row.iter().zip(&projection) {
                    out[k] = out[k].clone() + p.clone();
                }
                out
            })
            .collect();
        Ok(Marginal {
            parties: subset.to_vec(),
            settings: self.settings.clone(),
            outcomes: sub_radices,
            table,
        })
    }

    /// For every nonempty proper subset S and every party j outside S,
    /// the largest total-variation distance between marginals of S as the
    /// setting of j varies; entries above `tol` are reported.
    pub fn no_signalling_check(&self, tol: &T) -> SignallingReport<T> {
        let n = self.parties();
        let mut entries = Vec::new();
        for mask in 1..(1usize << n) - 1 {
            let subset: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let marginal = self.marginal(&subset).expect("valid subset");
            for source in (0..n).filter(|j| mask >> j & 1 == 0) {
                let variation = marginal.max_variation(source);
                if variation > *tol {
                    entries.push(SignallingEntry {
                        receivers: subset.clone(),
                        source,
                        variation,
                    });
                }
            }
        }
        SignallingReport { entries }
    }

    pub fn is_no_signalling(&self, tol: &T) -> bool {
        self.no_signalling_check(tol).is_empty()
    }

    /// Bayes conditioning on fixed settings and outcomes of some parties.
    /// The result ranges over the remaining parties, in original order.
    pub fn condition(&self, fixed: &[Fixed]) -> Result<Behavior<T>, BehaviorError> {
        let fixed_parties: Vec<usize> = fixed.iter().map(|f| f.party).collect();
        self.check_subset(&fixed_parties)?;
        for f in fixed {
            if f.setting >= self.settings[f.party] || f.outcome >= self.outcomes[f.party] {
                return Err(BehaviorError::Shape(format!(
                    "setting/outcome out of range for party {}",
                    f.party
                )));
            }
        }
        let rest: Vec<usize> = (0..self.parties())
            .filter(|p| !fixed_parties.contains(p))
            .collect();
        if rest.is_empty() {
            return Err(BehaviorError::Shape("conditioning on every party leaves nothing".into()));
        }
        let rest_settings: Vec<usize> = rest.iter().map(|&p| self.settings[p]).collect();
        let rest_outcomes: Vec<usize> = rest.iter().map(|&p| self.outcomes[p]).collect();
        let n_rs: usize = rest_settings.iter().product();
        let n_ro: usize = rest_outcomes.iter().product();

        let mut table = Vec::with_capacity(n_rs);
        for rs in 0..n_rs {
            let rxs = decode(&rest_settings, rs);
            let mut xs = vec![0; self.parties()];
            for (&p, &x) in rest.iter().zip(&rxs) {
                xs[p] = x;
            }
            for f in fixed {
                xs[f.party] = f.setting;
            }
            let mut os = vec![0; self.parties()];
            for f in fixed {
                os[f.party] = f.outcome;
            }
            let block = self.block(&xs);
            let mut row = Vec::with_capacity(n_ro);
            for ro in 0..n_ro {
                let ros = decode(&rest_outcomes, ro);
                for (&p, &o) in rest.iter().zip(&ros) {
                    os[p] = o;
                }
                row.push(block[self.outcome_index(&os)].clone());
            }
            let total = row.iter().fold(T::zero(), |acc, p| acc + p.clone());
            if total.is_negligible() || total <= T::zero() {
                return Err(BehaviorError::ZeroProbabilityCondition { settings: xs });
            }
            table.push(row.into_iter().map(|p| p / total.clone()).collect());
        }
        Behavior::new_unchecked(rest_settings, rest_outcomes, table)
    }
}

/// One fixed party in a conditioning event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fixed {
    pub party: usize,
    pub setting: usize,
    pub outcome: usize,
}

/// Marginal of a party subset, still indexed by the full setting tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal<T> {
    parties: Vec<usize>,
    settings: Vec<usize>,
    outcomes: Vec<usize>,
    table: Vec<Vec<T>>,
}

impl<T: Prob> Marginal<T> {
    pub fn parties(&self) -> &[usize] {
        &self.parties
    }

    /// Distribution over the subset's outcomes at a full setting tuple.
    pub fn distribution(&self, full_settings: &[usize]) -> &[T] {
        &self.table[encode(&self.settings, full_settings)]
    }

    pub fn prob(&self, full_settings: &[usize], subset_outcomes: &[usize]) -> &T {
        &self.distribution(full_settings)[encode(&self.outcomes, subset_outcomes)]
    }

    /// Largest total-variation distance between distributions whose full
    /// setting tuples differ only in `source`'s setting.
    pub fn max_variation(&self, source: usize) -> T {
        let mut best = T::zero();
        for (s, row) in self.table.iter().enumerate() {
            let xs = decode(&self.settings, s);
            for alt in xs[source] + 1..self.settings[source] {
                let mut ys = xs.clone();
                ys[source] = alt;
                let other = &self.table[encode(&self.settings, &ys)];
                let tv = row
                    .iter()
                    .zip(other)
                    .fold(T::zero(), |acc, (p, q)| acc + (p.clone() - q.clone()).abs())
                    / T::from_ratio(2, 1);
                if tv > best {
                    best = tv;
                }
            }
        }
        best
    }

    /// Behavior of the subset with every excluded party held at the setting
    /// given for it in `full_settings` (entries for subset parties are ignored).
    pub fn restrict(&self, full_settings: &[usize]) -> Behavior<T> {
        let sub_settings: Vec<usize> = self.parties.iter().map(|&p| self.settings[p]).collect();
        let n: usize = sub_settings.iter().product();
        let table = (0..n)
            .map(|s| {
                let sxs = decode(&sub_settings, s);
                let mut xs = full_settings.to_vec();
                for (&p, &x) in self.parties.iter().zip(&sxs) {
                    xs[p] = x;
                }
                self.distribution(&xs).to_vec()
            })
            .collect();
        Behavior::new_unchecked(sub_settings, self.outcomes.clone(), table).expect("valid shape")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignallingEntry<T> {
    /// Party subset whose marginal changes.
    pub receivers: Vec<usize>,
    /// Party whose setting causes the change.
    pub source: usize,
    /// Largest total-variation distance observed.
    pub variation: T,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SignallingReport<T> {
    pub entries: Vec<SignallingEntry<T>>,
}

impl<T: Prob> SignallingReport<T> {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_variation(&self) -> T {
        self.entries
            .iter()
            .map(|e| e.variation.clone())
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    pub fn find(&self, receivers: &[usize], source: usize) -> Option<&SignallingEntry<T>> {
        self.entries
            .iter()
            .find(|e| e.receivers == receivers && e.source == source)
    }
}
