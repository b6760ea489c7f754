//! Clauser-Horne facets of the two-party, two-setting, two-outcome local
//! polytope.
//!
//! The canonical facet is
//! `p(00|00) + p(00|01) + p(00|10) - p(00|11) - p_B(0|0) - p_C(0|0) <= 0`
//! with the single-party terms read at the partner's setting 0. The other
//! facets are obtained by relabelling inputs, outputs and parties and then
//! deduplicating by their values on the 24 vertices of the no-signalling
//! polytope.

use std::sync::OnceLock;

use crate::behavior::{Behavior, BehaviorError};
use crate::prob::Prob;

/// Integer coefficients over `p(b, c | y, z)`, indexed
/// `[2*y + z][2*b + c]`.
pub type ChCoefficients = [[i64; 4]; 4];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChFacet {
    pub id: usize,
    pub coefficients: ChCoefficients,
}

const CANONICAL: ChCoefficients = {
    let mut c = [[0i64; 4]; 4];
    // p(00|00) enters the sum once and each single-party marginal once
    c[0][0] = -1;
    c[0][1] = -1; // p_B(0|0) includes p(01|00)
    c[0][2] = -1; // p_C(0|0) includes p(10|00)
    c[1][0] = 1;
    c[2][0] = 1;
    c[3][0] = -1;
    c
};

/// Index map `(y, z, b, c) -> (y, z, b, c)` describing a relabelling.
type Relabel = fn([usize; 4]) -> [usize; 4];

const GENERATORS: [Relabel; 5] = [
    |[y, z, b, c]| [1 - y, z, b, c],
    |[y, z, b, c]| [y, 1 - z, b, c],
    |[y, z, b, c]| [y, z, 1 - b, c],
    |[y, z, b, c]| [y, z, b, 1 - c],
    |[y, z, b, c]| [z, y, c, b],
];

fn split(s: usize, o: usize) -> [usize; 4] {
    [s >> 1, s & 1, o >> 1, o & 1]
}

/// The 24 extremal no-signalling points: 16 deterministic strategies and
/// 8 PR boxes, as doubled integer tables.
pub(crate) fn ns_vertices_doubled() -> Vec<[[i64; 4]; 4]> {
    let mut out = Vec::with_capacity(24);
    for strat in 0..16usize {
        let (b0, b1, c0, c1) = (strat >> 3 & 1, strat >> 2 & 1, strat >> 1 & 1, strat & 1);
        let mut t = [[0; 4]; 4];
        for y in 0..2 {
            for z in 0..2 {
                let b = if y == 0 { b0 } else { b1 };
                let c = if z == 0 { c0 } else { c1 };
                t[2 * y + z][2 * b + c] = 2;
            }
        }
        out.push(t);
    }
    for (alpha, beta, gamma) in (0..8).map(|k| (k >> 2 & 1, k >> 1 & 1, k & 1)) {
        // b xor c = y*z xor alpha*y xor beta*z xor gamma
        let mut t = [[0; 4]; 4];
        for y in 0..2 {
            for z in 0..2 {
                let parity = (y * z) ^ (alpha * y) ^ (beta * z) ^ gamma;
                for b in 0..2 {
                    t[2 * y + z][2 * b + (b ^ parity)] = 1;
                }
            }
        }
        out.push(t);
    }
    out
}

fn facet_key(coefficients: &ChCoefficients, vertices: &[[[i64; 4]; 4]]) -> Vec<i64> {
    vertices
        .iter()
        .map(|v| {
            (0..4)
                .flat_map(|s| (0..4).map(move |o| (s, o)))
                .map(|(s, o)| coefficients[s][o] * v[s][o])
                .sum()
        })
        .collect()
}

fn generate() -> Vec<ChFacet> {
    let vertices = ns_vertices_doubled();
    let mut keys: Vec<Vec<i64>> = Vec::new();
    let mut facets = Vec::new();
    for mask in 0..(1usize << GENERATORS.len()) {
        // CH(T p) = sum_{s,o} CH[s][o] * p(T(s,o)), so coefficients move along T.
        let mut coefficients = [[0i64; 4]; 4];
        for s in 0..4 {
            for o in 0..4 {
                let mut idx = split(s, o);
                for (g, relabel) in GENERATORS.iter().enumerate() {
                    if mask >> g & 1 == 1 {
                        idx = relabel(idx);
                    }
                }
                let [y, z, b, c] = idx;
                coefficients[2 * y + z][2 * b + c] += CANONICAL[s][o];
            }
        }
        let key = facet_key(&coefficients, &vertices);
        if !keys.contains(&key) {
            keys.push(key);
            facets.push(ChFacet { id: facets.len(), coefficients });
        }
    }
    facets
}

/// All distinct CH facets; id 0 is the canonical one.
pub fn ch_facets() -> &'static [ChFacet] {
    static FACETS: OnceLock<Vec<ChFacet>> = OnceLock::new();
    FACETS.get_or_init(generate)
}

fn check_2222<T: Prob>(b: &Behavior<T>) -> Result<(), BehaviorError> {
    if b.parties() == 2 && b.is_binary() {
        Ok(())
    } else {
        Err(BehaviorError::WrongShape)
    }
}

/// Evaluates CH facet `facet_id` on a 2-party binary behavior.
pub fn ch_value<T: Prob>(b: &Behavior<T>, facet_id: usize) -> Result<T, BehaviorError> {
    check_2222(b)?;
    let facet = ch_facets()
        .get(facet_id)
        .ok_or_else(|| BehaviorError::Shape(format!("unknown CH facet {facet_id}")))?;
    Ok(apply(&facet.coefficients, b.table()))
}

pub(crate) fn apply<T: Prob>(coefficients: &ChCoefficients, table: &[Vec<T>]) -> T {
    let mut acc = T::zero();
    for (s, row) in coefficients.iter().enumerate() {
        for (o, &k) in row.iter().enumerate() {
            if k != 0 {
                acc = acc + T::from_ratio(k, 1) * table[s][o].clone();
            }
        }
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalityVerdict<T> {
    pub local: bool,
    /// Most violated facet id and its value, when nonlocal.
    pub witness: Option<(usize, T)>,
    pub facet_values: Vec<T>,
}

/// Facet test for 2-party locality. The input must be no-signalling
/// within `tol`.
pub fn is_local_2222<T: Prob>(b: &Behavior<T>, tol: &T) -> Result<LocalityVerdict<T>, BehaviorError> {
    check_2222(b)?;
    let report = b.no_signalling_check(tol);
    if !report.is_empty() {
        return Err(BehaviorError::SignallingInput {
            variation: report.max_variation().to_f64(),
        });
    }
    let facet_values: Vec<T> = ch_facets()
        .iter()
        .map(|f| apply(&f.coefficients, b.table()))
        .collect();
    let mut witness: Option<(usize, T)> = None;
    for (id, v) in facet_values.iter().enumerate() {
        if *v > *tol && witness.as_ref().is_none_or(|(_, w)| v > w) {
            witness = Some((id, v.clone()));
        }
    }
    Ok(LocalityVerdict { local: witness.is_none(), witness, facet_values })
}

pub fn pr_box<T: Prob>() -> Behavior<T> {
    Behavior::from_fn(vec![2, 2], vec![2, 2], |xs, os| {
        if (os[0] ^ os[1]) == (xs[0] & xs[1]) {
            T::from_ratio(1, 2)
        } else {
            T::zero()
        }
    })
    .expect("valid shape")
}
