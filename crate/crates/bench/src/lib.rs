//! Fixtures shared by the benchmarks.

pub use vcausal_core::{behavior::Behavior, num_rational::BigRational, prob::rat};

/// A nonlocal 2222 behavior: `k/8` of a PR box mixed with uniform noise.
pub fn noisy_pr_box(k: i64) -> Behavior<BigRational> {
    let weight = rat(k, 8);
    Behavior::from_fn(vec![2, 2], vec![2, 2], |xs, os| {
        let pr = if os[0] ^ os[1] == xs[0] & xs[1] { rat(1, 2) } else { rat(0, 1) };
        &weight * pr + (rat(1, 1) - &weight) * rat(1, 4)
    })
    .expect("valid shape")
}
