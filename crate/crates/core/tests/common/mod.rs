//! Independent oracles and random generators shared by the integration tests
//! and the acceptance harness.

#![allow(dead_code)]

use std::collections::BTreeSet;

use dsp_core::jnf::{ClassTuple, EigenSlot, JordanForm, Mode, Partition};
use dsp_core::spectra::{SpectralValue, Spectrum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;

/// Prime used for the exact matrix oracles; eigenvalues are `0, 1, 2, ...`.
pub const P: u64 = 1_000_003;

/// Explicit Jordan matrix of `form` over `F_P`, eigenvalue of slot `k` equal to `k`.
pub fn jordan_matrix(form: &JordanForm) -> Vec<Vec<u64>> {
    let n = form.n();
    let mut m = vec![vec![0; n]; n];
    let mut at = 0;
    for (k, slot) in form.groups().iter().enumerate() {
        for &b in slot.blocks.parts() {
            for i in 0..b {
                m[at + i][at + i] = k as u64;
                if i + 1 < b {
                    m[at + i][at + i + 1] = 1;
                }
            }
            at += b;
        }
    }
    m
}

fn inverse(a: u64) -> u64 {
    let (mut base, mut exp, mut acc) = (a % P, P - 2, 1u64);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % P;
        }
        base = base * base % P;
        exp >>= 1;
    }
    acc
}

/// Rank over `F_P` by Gaussian elimination.
pub fn rank_mod_p(mut m: Vec<Vec<u64>>) -> usize {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(pivot) = (rank..rows).find(|&r| m[r][c] != 0) else {
            continue;
        };
        m.swap(rank, pivot);
        let inv = inverse(m[rank][c]);
        for x in m[rank].iter_mut() {
            *x = *x * inv % P;
        }
        let pivot_row = m[rank].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != rank && row[c] != 0 {
                let f = row[c];
                for (x, p) in row.iter_mut().zip(&pivot_row).skip(c) {
                    *x = (*x + P - f * p % P) % P;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// `min_λ rk(J - λI)` over every `λ` that can matter: the eigenvalues and one non-eigenvalue.
pub fn brute_min_rank(form: &JordanForm) -> usize {
    let j = jordan_matrix(form);
    let n = form.n();
    (0..=form.groups().len() as u64)
        .map(|lambda| {
            let mut m = j.clone();
            for (i, row) in m.iter_mut().enumerate().take(n) {
                row[i] = (row[i] + P - lambda) % P;
            }
            rank_mod_p(m)
        })
        .min()
        .unwrap()
}

/// `n² - dim {X : XJ = JX}`, from the `n² × n²` matrix of `X ↦ XJ - JX`.
pub fn brute_class_dimension(form: &JordanForm) -> usize {
    let j = jordan_matrix(form);
    let n = form.n();
    let mut op = vec![vec![0u64; n * n]; n * n];
    // row (a, b) of XJ - JX, column (c, d) for the unknown X[c][d]
    for a in 0..n {
        for b in 0..n {
            let row = &mut op[a * n + b];
            for k in 0..n {
                // (XJ)[a][b] = Σ_k X[a][k] J[k][b]
                row[a * n + k] = (row[a * n + k] + j[k][b]) % P;
                // (JX)[a][b] = Σ_k J[a][k] X[k][b]
                row[k * n + b] = (row[k * n + b] + P - j[a][k]) % P;
            }
        }
    }
    rank_mod_p(op)
}

/// Uniformly random partition of `n` into `parts` positive pieces (a composition).
pub fn random_composition<R: Rng>(rng: &mut R, n: usize, parts: usize) -> Vec<usize> {
    let mut cuts: Vec<usize> = rand::seq::index::sample(rng, n - 1, parts - 1).into_vec();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(n - 1)) {
        out.push(c + 1 - prev);
        prev = c + 1;
    }
    out
}

pub fn random_partition<R: Rng>(rng: &mut R, n: usize) -> Partition {
    let parts = rng.random_range(1..=n);
    Partition::new(random_composition(rng, n, parts)).unwrap()
}

/// Random Jordan form of size `n` with at most `max_slots` eigenvalues.
pub fn random_jordan_form<R: Rng>(rng: &mut R, n: usize, max_slots: usize) -> JordanForm {
    let slots = rng.random_range(1..=n.min(max_slots));
    let groups = random_composition(rng, n, slots)
        .into_iter()
        .enumerate()
        .map(|(k, m)| EigenSlot::new(format!("e{k}"), random_partition(rng, m)))
        .collect();
    JordanForm::new(groups).unwrap()
}

/// Random diagonal form of size `n` (only 1×1 blocks).
pub fn random_diagonal_form<R: Rng>(rng: &mut R, n: usize, max_slots: usize) -> JordanForm {
    let slots = rng.random_range(1..=n.min(max_slots));
    JordanForm::diagonal(&random_composition(rng, n, slots)).unwrap()
}

pub fn random_tuple<R: Rng>(rng: &mut R, n: usize, forms: usize) -> ClassTuple {
    let mode = if rng.random_bool(0.5) {
        Mode::Additive
    } else {
        Mode::Multiplicative
    };
    ClassTuple::new(mode, (0..forms).map(|_| random_jordan_form(rng, n, n)).collect()).unwrap()
}

/// Random spectrum of size `n` whose values have denominators in `1..=den`,
/// so that relations are frequent.
pub fn random_spectrum<R: Rng>(rng: &mut R, n: usize, forms: usize, den: i64, mode: Mode) -> Spectrum {
    let forms = (0..forms)
        .map(|_| {
            let slots = rng.random_range(1..=n);
            let mults = random_composition(rng, n, slots);
            let mut used = BTreeSet::new();
            mults
                .into_iter()
                .map(|m| {
                    // widen the denominators once the small ones are used up
                    let mut den = den;
                    loop {
                        let q = rng.random_range(1..=den);
                        let p = match mode {
                            Mode::Additive => rng.random_range(-2 * q..=2 * q),
                            Mode::Multiplicative => rng.random_range(0..q),
                        };
                        let v = BigRational::new(p.into(), q.into());
                        if used.insert(v.clone()) {
                            break SpectralValue::new(v, m);
                        }
                        den += 1;
                    }
                })
                .collect()
        })
        .collect();
    Spectrum::new(mode, forms).unwrap()
}

fn subset_sums(
    values: &[BigRational],
    k: usize,
    start: usize,
    acc: BigRational,
    out: &mut BTreeSet<BigRational>,
    mode: Mode,
) {
    if k == 0 {
        out.insert(normalize(acc, mode));
        return;
    }
    for i in start..=values.len() - k {
        subset_sums(values, k - 1, i + 1, &acc + &values[i], out, mode);
    }
}

fn normalize(x: BigRational, mode: Mode) -> BigRational {
    match mode {
        Mode::Additive => x,
        Mode::Multiplicative => &x - x.floor(),
    }
}

/// Brute force: a proper sub-multiset of equal cardinality `k` from every form
/// whose values sum to zero (additive) or to an integer (multiplicative).
pub fn brute_force_generic(s: &Spectrum) -> bool {
    let mode = s.mode();
    let expanded: Vec<Vec<BigRational>> = s
        .forms()
        .iter()
        .map(|f| {
            f.iter()
                .flat_map(|sv| std::iter::repeat_n(sv.value.clone(), sv.mult))
                .collect()
        })
        .collect();
    for k in 1..s.n() {
        // reachable partial sums, one form at a time
        let mut reach: BTreeSet<BigRational> = BTreeSet::from([BigRational::zero()]);
        for values in &expanded {
            let mut sums = BTreeSet::new();
            subset_sums(values, k, 0, BigRational::zero(), &mut sums, mode);
            reach = reach
                .iter()
                .flat_map(|a| sums.iter().map(move |b| normalize(a + b, mode)))
                .collect();
        }
        if reach.contains(&BigRational::zero()) {
            return false;
        }
    }
    true
}

pub fn int(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}
