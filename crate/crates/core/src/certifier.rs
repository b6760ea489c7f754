//! Linear programs over four-party binary correlations.
//!
//! Variables are the 256 joint probabilities `p(abcd|xyzw)`, indexed
//! `16 * setting_index + outcome_index` (party A most significant). The
//! feasible region is the no-signalling polytope, optionally intersected
//! with the requirement that every B-C conditional `p(bc|yz, a x d w)` is
//! local. Locality of a conditional is linearised by multiplying each CH
//! facet through by `p(ad|xw)`.

use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::behavior::{decode, encode, Behavior, BehaviorError};
use crate::ch::ch_facets;
use crate::inequality::InequalityS;
use crate::lp::{maximize_with_stats, Certificate, Constraint, LinearProgram, LpError, SolveStats};
use crate::prob::{fmt_rational, rat, Prob};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertifierError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
    #[error("ABD and ACD marginals disagree on A-D at x={x}, w={w}, a={a}, d={d}")]
    InconsistentMarginals { x: usize, w: usize, a: usize, d: usize },
    #[error("expected a {0}")]
    WrongShape(&'static str),
    #[error("LP solution is unbounded, which cannot happen on a probability polytope")]
    Internal,
}

const BIN4: [usize; 4] = [2, 2, 2, 2];

/// Joint variable index for an n-party binary scenario.
pub fn joint_index(xs: &[usize], os: &[usize]) -> usize {
    let radices = vec![2; xs.len()];
    encode(&radices, xs) * (1 << os.len()) + encode(&radices, os)
}

/// One normalization equality per setting tuple.
pub fn normalization_constraints(n: usize) -> Vec<Constraint> {
    let radices = vec![2; n];
    (0..1usize << n)
        .map(|s| {
            let xs = decode(&radices, s);
            let coeffs = (0..1usize << n)
                .map(|o| (joint_index(&xs, &decode(&radices, o)), BigRational::one()))
                .collect();
            Constraint::new(coeffs, BigRational::one(), format!("norm x={xs:?}"))
        })
        .collect()
}

/// For every party j, the marginal of the other n-1 parties must not
/// depend on j's setting. Duplicate rows are not removed.
pub fn build_ns_polytope_constraints(n: usize) -> Vec<Constraint> {
    let radices = vec![2; n];
    let mut out = Vec::new();
    for j in 0..n {
        let others: Vec<usize> = (0..n).filter(|&p| p != j).collect();
        let rest = vec![2; n - 1];
        for rs in 0..1usize << (n - 1) {
            let rxs = decode(&rest, rs);
            for ro in 0..1usize << (n - 1) {
                let ros = decode(&rest, ro);
                let mut coeffs = Vec::with_capacity(4);
                for (xj, sign) in [(0, 1), (1, -1)] {
                    for oj in 0..2 {
                        let mut xs = vec![0; n];
                        let mut os = vec![0; n];
                        for (k, &p) in others.iter().enumerate() {
                            xs[p] = rxs[k];
                            os[p] = ros[k];
                        }
                        xs[j] = xj;
                        os[j] = oj;
                        coeffs.push((joint_index(&xs, &os), rat(sign, 1)));
                    }
                }
                out.push(Constraint::new(
                    coeffs,
                    BigRational::zero(),
                    format!("ns party={j} settings={rxs:?} outcomes={ros:?}"),
                ));
            }
        }
    }
    debug_assert!(out.iter().all(|c| c.coeffs.len() == 4 && radices.len() == n));
    out
}

/// The 8 CH facets for every `(a, x, d, w)` block, each `<= 0`.
pub fn build_bc_local_constraints() -> Vec<Constraint> {
    let mut out = Vec::with_capacity(128);
    for block in 0..16usize {
        let [a, x, d, w] = [block >> 3 & 1, block >> 2 & 1, block >> 1 & 1, block & 1];
        for facet in ch_facets() {
            let mut coeffs = Vec::new();
            for (s, row) in facet.coefficients.iter().enumerate() {
                let (y, z) = (s >> 1, s & 1);
                for (o, &k) in row.iter().enumerate() {
                    if k == 0 {
                        continue;
                    }
                    let (b, c) = (o >> 1, o & 1);
                    coeffs.push((joint_index(&[x, y, z, w], &[a, b, c, d]), rat(k, 1)));
                }
            }
            out.push(Constraint::new(
                coeffs,
                BigRational::zero(),
                format!("ch facet={} a={a} x={x} d={d} w={w}", facet.id),
            ));
        }
    }
    out
}

/// LP maximizing S over no-signalling correlations, with the B-C locality
/// constraints when `bc_local` is set.
pub fn s_program(bc_local: bool) -> LinearProgram {
    let mut lp = LinearProgram::new(256);
    lp.objective = InequalityS::four_party().as_functional();
    lp.equalities = normalization_constraints(4);
    lp.equalities.extend(build_ns_polytope_constraints(4));
    if bc_local {
        lp.inequalities = build_bc_local_constraints();
    }
    lp
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCertificate {
    pub program: LinearProgram,
    pub certificate: Certificate,
    pub stats: SolveStats,
}

impl BoundCertificate {
    pub fn optimum(&self) -> Option<&BigRational> {
        self.certificate.value()
    }
}

pub fn maximize_s(bc_local: bool) -> Result<BoundCertificate, CertifierError> {
    let program = s_program(bc_local);
    let (certificate, stats) = solve(&program)?;
    Ok(BoundCertificate { program, certificate, stats })
}

fn solve(lp: &LinearProgram) -> Result<(Certificate, SolveStats), CertifierError> {
    maximize_with_stats(lp).map_err(|e| match e {
        LpError::Unbounded => CertifierError::Internal,
        other => CertifierError::Lp(other),
    })
}

/// Reads a 256-entry primal vector back as a behavior.
pub fn joint_behavior(primal: &[BigRational]) -> Result<Behavior<BigRational>, BehaviorError> {
    let table = primal.chunks(16).map(<[_]>::to_vec).collect();
    Behavior::new(BIN4.to_vec(), BIN4.to_vec(), table, &BigRational::zero())
}

fn check_three_party<T: Prob>(b: &Behavior<T>) -> Result<(), CertifierError> {
    if b.parties() == 3 && b.is_binary() {
        Ok(())
    } else {
        Err(CertifierError::WrongShape("3-party binary marginal"))
    }
}

/// LP asking for a no-signalling, B-C-local joint whose ABD and ACD
/// marginals lie within `radius` of the given ones (entrywise). Marginals
/// are matched at the absent party's setting 0; the no-signalling rows
/// carry that to setting 1.
pub fn marginal_program(
    abd: &Behavior<BigRational>,
    acd: &Behavior<BigRational>,
    radius: &BigRational,
) -> Result<LinearProgram, CertifierError> {
    check_three_party(abd)?;
    check_three_party(acd)?;
    for (x, w, a, d) in (0..16).map(|k| (k >> 3 & 1, k >> 2 & 1, k >> 1 & 1, k & 1)) {
        let from_abd: BigRational = (0..2).map(|b| abd.prob(&[x, 0, w], &[a, b, d]).clone()).sum();
        let from_acd: BigRational = (0..2).map(|c| acd.prob(&[x, 0, w], &[a, c, d]).clone()).sum();
        let gap = num_traits::Signed::abs(&(from_abd - from_acd));
        if gap > radius * rat(2, 1) {
            return Err(CertifierError::InconsistentMarginals { x, w, a, d });
        }
    }

    let mut lp = s_program(true);
    lp.objective = vec![BigRational::zero(); 256];
    for (name, marginal, summed) in [("abd", abd, 2usize), ("acd", acd, 1usize)] {
        for s in 0..8 {
            let sx = decode(&[2, 2, 2], s);
            for o in 0..8 {
                let so = decode(&[2, 2, 2], o);
                // (A, other, D) -> full tuple, absent party at setting 0
                let kept = 3 - summed;
                let mut coeffs = Vec::with_capacity(2);
                for v in 0..2 {
                    let mut xs = [sx[0], 0, 0, sx[2]];
                    let mut os = [so[0], 0, 0, so[2]];
                    xs[kept] = sx[1];
                    os[kept] = so[1];
                    os[summed] = v;
                    coeffs.push((joint_index(&xs, &os), BigRational::one()));
                }
                let target = marginal.table()[s][o].clone();
                let label = format!("{name} settings={sx:?} outcomes={so:?}");
                if radius.is_zero() {
                    lp.equalities.push(Constraint::new(coeffs, target, label));
                } else {
                    let negated = coeffs.iter().map(|(j, a)| (*j, -a)).collect();
                    lp.inequalities
                        .push(Constraint::new(coeffs, &target + radius, format!("{label} upper")));
                    lp.inequalities
                        .push(Constraint::new(negated, -(target - radius), format!("{label} lower")));
                }
            }
        }
    }
    Ok(lp)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityResult {
    pub program: LinearProgram,
    pub certificate: Certificate,
    pub stats: SolveStats,
}

impl FeasibilityResult {
    pub fn is_feasible(&self) -> bool {
        self.certificate.is_optimal()
    }
}

pub fn marginal_feasibility(
    abd: &Behavior<BigRational>,
    acd: &Behavior<BigRational>,
    radius: &BigRational,
) -> Result<FeasibilityResult, CertifierError> {
    let program = marginal_program(abd, acd, radius)?;
    let (certificate, stats) = solve(&program)?;
    Ok(FeasibilityResult { program, certificate, stats })
}

/// The ABD and ACD marginals of a four-party behavior, at the absent
/// party's setting 0.
pub fn abd_acd_marginals<T: Prob>(b: &Behavior<T>) -> Result<(Behavior<T>, Behavior<T>), BehaviorError> {
    let abd = b.marginal(&[0, 1, 3])?.restrict(&[0, 0, 0, 0]);
    let acd = b.marginal(&[0, 2, 3])?.restrict(&[0, 0, 0, 0]);
    Ok((abd, acd))
}

/// Deterministic strategy `k` of the 2222 scenario as
/// `[[b(y=0), b(y=1)], [c(z=0), c(z=1)]]`.
pub fn deterministic_2222(k: usize) -> [[usize; 2]; 2] {
    [[k >> 3 & 1, k >> 2 & 1], [k >> 1 & 1, k & 1]]
}

/// LP over weights on the 16 deterministic strategies reproducing `b2`.
pub fn local_decomposition_program(b2: &Behavior<BigRational>) -> Result<LinearProgram, CertifierError> {
    if b2.parties() != 2 || !b2.is_binary() {
        return Err(CertifierError::WrongShape("2-party binary behavior"));
    }
    let mut lp = LinearProgram::new(16);
    for s in 0..4 {
        let (y, z) = (s >> 1, s & 1);
        for o in 0..4 {
            let (b, c) = (o >> 1, o & 1);
            let coeffs = (0..16)
                .filter(|&k| {
                    let [rb, rc] = deterministic_2222(k);
                    rb[y] == b && rc[z] == c
                })
                .map(|k| (k, BigRational::one()))
                .collect();
            lp.equalities
                .push(Constraint::new(coeffs, b2.table()[s][o].clone(), format!("p({b}{c}|{y}{z})")));
        }
    }
    Ok(lp)
}

/// Explicit local hidden-variable model for a no-signalling 2222 behavior,
/// or a Farkas certificate that none exists.
pub fn local_decomposition_2222(b2: &Behavior<BigRational>) -> Result<FeasibilityResult, CertifierError> {
    let program = local_decomposition_program(b2)?;
    let report = b2.no_signalling_check(&BigRational::zero());
    if !report.is_empty() {
        return Err(BehaviorError::SignallingInput { variation: report.max_variation().to_f64() }.into());
    }
    let (certificate, stats) = solve(&program)?;
    Ok(FeasibilityResult { program, certificate, stats })
}

pub fn describe_optimum(c: &Certificate) -> String {
    match c.value() {
        Some(v) => fmt_rational(v),
        None => "infeasible".into(),
    }
}
