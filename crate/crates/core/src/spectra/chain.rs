//! Chain structure of the eigenvalues of `S = M_1 M_2` in the four-matrix
//! `(n/2, n/2)` family.
//!
//! Eigenvalues of `S` pair up twice: `t(s) = P12 / s` (the pair from a
//! `2 × 2` block of `M_1, M_2, S^{-1}`) and `u(s) = P34 / s` (from
//! `M_3, M_4, S`). Alternating `t` and `u` from `s_1` gives
//! `s_{2k+1} = ξ^{-1} s_{2k-1}` and `s_{2k+2} = ξ s_{2k}`, so each chain closes
//! after `2(m - 1)` values where `m - 1` is the order of `ξ`.
//! All values are angles; products are sums modulo one.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use super::{format_rational, reduce_angle, SpectraError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainSet {
    /// `s_1, ..., s_{2m-2}` as angles.
    pub values: Vec<String>,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainStructure {
    pub m: usize,
    pub sets: Vec<ChainSet>,
    /// `(m - 1) | n/2`.
    pub divides_half_n: bool,
    /// `m - 1 < n/2`.
    pub below_half_n: bool,
}

fn inconsistent(msg: impl Into<String>) -> SpectraError {
    SpectraError::InconsistentChains(msg.into())
}

/// Splits the eigenvalue multiset of `S` into `t`/`u` chains.
///
/// `p12` is the angle of `g1 h1 g2 h2`, `p34` that of `(g3 h3 g4 h4)^{-1}`, and
/// `xi` that of `ξ = P12 / P34`.
pub fn case_a_chain_structure(
    s_values: &[BigRational],
    p12: &BigRational,
    p34: &BigRational,
    xi: &BigRational,
) -> Result<ChainStructure, SpectraError> {
    let n = s_values.len();
    if n == 0 || !n.is_multiple_of(2) {
        return Err(inconsistent(format!("need an even number of eigenvalues, got {n}")));
    }
    let xi = reduce_angle(xi);
    if reduce_angle(&(p12 - p34)) != xi {
        return Err(inconsistent("P12 / P34 differs from ξ"));
    }
    let order = xi.denom().to_usize().ok_or_else(|| inconsistent("ξ order too large"))?;
    let half = n / 2;
    if !half.is_multiple_of(order) {
        return Err(inconsistent(format!(
            "ξ has order {order}, not a root of unity of order n/2 = {half}"
        )));
    }

    let t = |s: &BigRational| reduce_angle(&(p12 - s));
    let u = |s: &BigRational| reduce_angle(&(p34 - s));

    let mut pool: BTreeMap<BigRational, usize> = BTreeMap::new();
    for s in s_values {
        *pool.entry(reduce_angle(s)).or_insert(0) += 1;
    }

    let len = 2 * order;
    let mut sets: Vec<(Vec<BigRational>, usize)> = Vec::new();
    while let Some(start) = pool.keys().next().cloned() {
        let mut chain = Vec::with_capacity(len);
        chain.push(start.clone());
        for i in 1..len {
            let prev = &chain[i - 1];
            chain.push(if i % 2 == 1 { t(prev) } else { u(prev) });
        }
        if u(&chain[len - 1]) != start {
            return Err(inconsistent("chain does not close"));
        }
        check_recurrences(&chain, &xi, p12, p34)?;
        for v in &chain {
            match pool.get_mut(v) {
                Some(c) if *c > 0 => {
                    *c -= 1;
                    if *c == 0 {
                        pool.remove(v);
                    }
                }
                _ => {
                    return Err(inconsistent(format!(
                        "value {} required by the chain of {} is missing",
                        format_rational(v),
                        format_rational(&start)
                    )))
                }
            }
        }
        let mut key = chain.clone();
        key.sort();
        match sets.iter_mut().find(|(c, _)| {
            let mut k = c.clone();
            k.sort();
            k == key
        }) {
            Some((_, mult)) => *mult += 1,
            None => sets.push((chain, 1)),
        }
    }

    let m = order + 1;
    Ok(ChainStructure {
        m,
        sets: sets
            .into_iter()
            .map(|(values, multiplicity)| ChainSet {
                values: values.iter().map(format_rational).collect(),
                multiplicity,
            })
            .collect(),
        divides_half_n: half.is_multiple_of(m - 1),
        below_half_n: m - 1 < half,
    })
}

fn check_recurrences(
    chain: &[BigRational],
    xi: &BigRational,
    p12: &BigRational,
    p34: &BigRational,
) -> Result<(), SpectraError> {
    let len = chain.len();
    for i in 0..len {
        // 0-based i ↔ s_{i+1}; the successor two steps ahead wraps around.
        let next2 = &chain[(i + 2) % len];
        let expected = if i % 2 == 1 {
            reduce_angle(&(&chain[i] + xi))
        } else {
            reduce_angle(&(&chain[i] - xi))
        };
        if *next2 != expected {
            return Err(inconsistent("ξ-recurrence violated"));
        }
        let pair = reduce_angle(&(&chain[i] + &chain[(i + 1) % len]));
        let want = if i % 2 == 0 { p12 } else { p34 };
        if pair != reduce_angle(want) {
            return Err(inconsistent("pair product violated"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::rat;
    use num_traits::Zero;

    /// Forward generation from seeds, by the recurrences themselves.
    fn forward(seeds: &[BigRational], p12: &BigRational, xi: &BigRational, order: usize) -> Vec<BigRational> {
        let mut out = Vec::new();
        for s1 in seeds {
            for j in 0..order {
                let odd = reduce_angle(&(s1 - xi * BigRational::from_integer((j as i64).into())));
                let even = reduce_angle(&(p12 - &odd));
                out.push(odd);
                out.push(even);
            }
        }
        out
    }

    #[test]
    fn trivial_xi_gives_pairs() {
        let p12 = rat(1, 7);
        let xi = BigRational::zero();
        let p34 = p12.clone();
        let s = forward(&[rat(1, 11), rat(2, 13)], &p12, &xi, 1);
        let c = case_a_chain_structure(&s, &p12, &p34, &xi).unwrap();
        assert_eq!(c.m, 2);
        assert_eq!(c.sets.len(), 2);
        assert!(c.sets.iter().all(|set| set.values.len() == 2));
        assert!(c.divides_half_n && c.below_half_n);
    }

    #[test]
    fn half_turn_xi_for_n8() {
        let p12 = rat(1, 5);
        let xi = rat(1, 2);
        let p34 = reduce_angle(&(&p12 - &xi));
        let s = forward(&[rat(1, 17), rat(3, 19)], &p12, &xi, 2);
        assert_eq!(s.len(), 8);
        let c = case_a_chain_structure(&s, &p12, &p34, &xi).unwrap();
        assert_eq!(c.m, 3);
        assert_eq!(c.sets.len(), 2);
        assert!(c.sets.iter().all(|set| set.values.len() == 4));
        assert!(c.divides_half_n && c.below_half_n);
    }

    #[test]
    fn repeated_sets_get_multiplicity() {
        let p12 = rat(1, 5);
        let xi = BigRational::zero();
        let s = forward(&[rat(1, 17), rat(1, 17)], &p12, &xi, 1);
        let c = case_a_chain_structure(&s, &p12, &p12, &xi).unwrap();
        assert_eq!(c.sets.len(), 1);
        assert_eq!(c.sets[0].multiplicity, 2);
    }

    #[test]
    fn broken_multiset_is_rejected() {
        let p12 = rat(1, 5);
        let xi = rat(1, 2);
        let p34 = reduce_angle(&(&p12 - &xi));
        let mut s = forward(&[rat(1, 17), rat(3, 19)], &p12, &xi, 2);
        s[3] = rat(1, 23);
        assert!(matches!(
            case_a_chain_structure(&s, &p12, &p34, &xi),
            Err(SpectraError::InconsistentChains(_))
        ));
        // wrong ξ for the given P12/P34
        assert!(case_a_chain_structure(&s, &p12, &p12, &xi).is_err());
        // odd size
        assert!(case_a_chain_structure(&s[..3], &p12, &p34, &xi).is_err());
    }
}
