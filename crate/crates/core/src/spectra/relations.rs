//! Non-genericity relations: equal-cardinality sub-multisets of the
//! eigenvalues of every form whose values sum to zero (additive) or whose
//! angles sum to an integer (multiplicative).

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use super::{compute_gcd_data, GcdData, SpectraError, Spectrum};
use crate::jnf::Mode;

/// Default cap on candidate tuples for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_CAP: u128 = 100_000_000;

/// A sub-multiset per form, as chosen multiplicities over that form's distinct eigenvalues.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Relation {
    pub kcard: usize,
    pub choices: Vec<Vec<usize>>,
}

impl Relation {
    /// Exact evaluation of the relation on `s`.
    pub fn holds(&self, s: &Spectrum) -> bool {
        let total = s
            .forms()
            .iter()
            .zip(&self.choices)
            .flat_map(|(f, c)| f.iter().zip(c))
            .fold(BigRational::zero(), |acc, (sv, &c)| {
                acc + &sv.value * BigRational::from_integer(BigInt::from(c))
            });
        match s.mode() {
            Mode::Additive => total.is_zero(),
            Mode::Multiplicative => total.is_integer(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Genericity {
    pub generic: bool,
    pub witness: Option<Relation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RelativeGenericity {
    pub relatively_generic: bool,
    pub offending: Option<Relation>,
    pub gcd: GcdData,
}

/// Integer weights of all eigenvalues over a common denominator.
struct Weights {
    /// `Some(L)` in multiplicative mode: sums are taken modulo `L`.
    modulus: Option<BigInt>,
    /// Per form, per distinct eigenvalue: `(numerator, multiplicity)`.
    forms: Vec<Vec<(BigInt, usize)>>,
}

impl Weights {
    fn new(s: &Spectrum) -> Self {
        let lcm = s
            .forms()
            .iter()
            .flatten()
            .fold(BigInt::one(), |acc, sv| acc.lcm(sv.value.denom()));
        let forms = s
            .forms()
            .iter()
            .map(|f| {
                f.iter()
                    .map(|sv| {
                        let scaled = &sv.value * BigRational::from_integer(lcm.clone());
                        (scaled.to_integer(), sv.mult)
                    })
                    .collect()
            })
            .collect();
        Weights {
            modulus: (s.mode() == Mode::Multiplicative).then_some(lcm),
            forms,
        }
    }

    fn normalize(&self, x: BigInt) -> BigInt {
        match &self.modulus {
            Some(m) => x.mod_floor(m),
            None => x,
        }
    }

    fn weigh(&self, form: usize, choice: &[usize]) -> BigInt {
        let raw = self.forms[form]
            .iter()
            .zip(choice)
            .fold(BigInt::zero(), |acc, ((a, _), &c)| acc + a * BigInt::from(c));
        self.normalize(raw)
    }

    /// All choices of cardinality `k` in `form`, with their weights.
    fn choices(&self, form: usize, k: usize) -> Vec<(Vec<usize>, BigInt)> {
        let mults: Vec<usize> = self.forms[form].iter().map(|(_, m)| *m).collect();
        compositions(&mults, k)
            .into_iter()
            .map(|c| {
                let w = self.weigh(form, &c);
                (c, w)
            })
            .collect()
    }
}

/// Vectors `c` with `0 ≤ c_i ≤ bounds_i` and `Σ c_i = total`, in lexicographic order.
pub(crate) fn compositions(bounds: &[usize], total: usize) -> Vec<Vec<usize>> {
    fn rec(bounds: &[usize], rest: usize, cap: &[usize], cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let i = cur.len();
        if i == bounds.len() {
            if rest == 0 {
                out.push(cur.clone());
            }
            return;
        }
        if rest > cap[i] {
            return;
        }
        for c in 0..=bounds[i].min(rest) {
            cur.push(c);
            rec(bounds, rest - c, cap, cur, out);
            cur.pop();
        }
    }
    // cap[i] = Σ_{i' ≥ i} bounds[i'], for pruning.
    let mut cap = vec![0; bounds.len() + 1];
    for i in (0..bounds.len()).rev() {
        cap[i] = cap[i + 1] + bounds[i];
    }
    let mut out = Vec::new();
    rec(bounds, total, &cap, &mut Vec::new(), &mut out);
    out
}

fn check_kcard(s: &Spectrum, kcard: usize) -> Result<(), SpectraError> {
    if kcard == 0 || kcard >= s.n() {
        return Err(SpectraError::InvalidCardinality { kcard, n: s.n() });
    }
    Ok(())
}

pub fn enumerate_relations(s: &Spectrum, kcard: usize) -> Result<Vec<Relation>, SpectraError> {
    enumerate_relations_with_cap(s, kcard, DEFAULT_ENUMERATION_CAP)
}

/// Exhaustive list of satisfied relations of cardinality `kcard`.
pub fn enumerate_relations_with_cap(s: &Spectrum, kcard: usize, cap: u128) -> Result<Vec<Relation>, SpectraError> {
    check_kcard(s, kcard)?;
    let w = Weights::new(s);
    let per_form: Vec<Vec<(Vec<usize>, BigInt)>> = (0..w.forms.len()).map(|j| w.choices(j, kcard)).collect();
    let candidates = per_form
        .iter()
        .fold(1u128, |acc, c| acc.saturating_mul(c.len() as u128));
    if candidates > cap {
        return Err(SpectraError::BudgetExceeded { candidates, cap });
    }
    if per_form.iter().any(Vec::is_empty) {
        return Ok(Vec::new());
    }

    let (last, head) = per_form.split_last().expect("at least two forms");
    let mut by_weight: HashMap<&BigInt, Vec<usize>> = HashMap::new();
    for (i, (_, wt)) in last.iter().enumerate() {
        by_weight.entry(wt).or_default().push(i);
    }

    let mut out = Vec::new();
    let mut idx = vec![0usize; head.len()];
    loop {
        let partial = head
            .iter()
            .zip(&idx)
            .fold(BigInt::zero(), |acc, (choices, &i)| acc + &choices[i].1);
        let needed = w.normalize(-partial);
        if let Some(hits) = by_weight.get(&needed) {
            for &h in hits {
                let mut choices: Vec<Vec<usize>> = head.iter().zip(&idx).map(|(c, &i)| c[i].0.clone()).collect();
                choices.push(last[h].0.clone());
                out.push(Relation { kcard, choices });
            }
        }
        // odometer
        let mut pos = head.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < head[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Partial-sum counts over the first forms, used to count and reconstruct relations.
struct RelationCounter<'a> {
    w: &'a Weights,
    per_form: Vec<Vec<(Vec<usize>, BigInt)>>,
    /// `layers[j]`: weight of a choice over forms `0..=j` ↦ number of such choices.
    layers: Vec<HashMap<BigInt, u128>>,
    kcard: usize,
}

impl<'a> RelationCounter<'a> {
    fn new(w: &'a Weights, kcard: usize, cap: u128) -> Result<Self, SpectraError> {
        let per_form: Vec<Vec<(Vec<usize>, BigInt)>> = (0..w.forms.len()).map(|j| w.choices(j, kcard)).collect();
        let mut layers: Vec<HashMap<BigInt, u128>> = Vec::with_capacity(per_form.len() - 1);
        let mut first = HashMap::new();
        for (_, wt) in &per_form[0] {
            *first.entry(wt.clone()).or_insert(0u128) += 1;
        }
        layers.push(first);
        for choices in &per_form[1..per_form.len() - 1] {
            let prev = layers.last().expect("nonempty");
            let work = (prev.len() as u128).saturating_mul(choices.len() as u128);
            if work > cap {
                return Err(SpectraError::BudgetExceeded { candidates: work, cap });
            }
            let mut next: HashMap<BigInt, u128> = HashMap::with_capacity(prev.len());
            for (acc, count) in prev {
                for (_, wt) in choices {
                    let key = w.normalize(acc + wt);
                    let e = next.entry(key).or_insert(0);
                    *e = e.saturating_add(*count);
                }
            }
            layers.push(next);
        }
        Ok(RelationCounter {
            w,
            per_form,
            layers,
            kcard,
        })
    }

    fn count(&self) -> u128 {
        let prev = self.layers.last().expect("nonempty");
        let last = self.per_form.last().expect("nonempty");
        last.iter()
            .filter_map(|(_, wt)| prev.get(&self.w.normalize(-wt.clone())))
            .fold(0u128, |a, c| a.saturating_add(*c))
    }

    /// First satisfied relation accepted by `keep`, found by walking the layers backwards.
    fn find(&self, keep: &dyn Fn(&Relation) -> bool) -> Option<Relation> {
        let last = self.per_form.len() - 1;
        let mut stack: Vec<Vec<usize>> = Vec::new();
        self.walk(last, BigInt::zero(), &mut stack, keep)
    }

    fn walk(
        &self,
        form: usize,
        needed: BigInt,
        suffix: &mut Vec<Vec<usize>>,
        keep: &dyn Fn(&Relation) -> bool,
    ) -> Option<Relation> {
        for (choice, wt) in &self.per_form[form] {
            let rest = self.w.normalize(&needed - wt);
            if form == 0 {
                if !rest.is_zero() {
                    continue;
                }
                let mut choices = vec![choice.clone()];
                choices.extend(suffix.iter().rev().cloned());
                let rel = Relation {
                    kcard: self.kcard,
                    choices,
                };
                if keep(&rel) {
                    return Some(rel);
                }
                continue;
            }
            if !self.layers[form - 1].contains_key(&rest) {
                continue;
            }
            suffix.push(choice.clone());
            let found = self.walk(form - 1, rest, suffix, keep);
            suffix.pop();
            if found.is_some() {
                return found;
            }
        }
        None
    }
}

pub fn is_generic(s: &Spectrum) -> Result<Genericity, SpectraError> {
    is_generic_with_cap(s, DEFAULT_ENUMERATION_CAP)
}

/// No relation of any cardinality `1 ≤ k < n` holds.
pub fn is_generic_with_cap(s: &Spectrum, cap: u128) -> Result<Genericity, SpectraError> {
    let w = Weights::new(s);
    for kcard in 1..s.n() {
        let counter = RelationCounter::new(&w, kcard, cap)?;
        if counter.count() > 0 {
            return Ok(Genericity {
                generic: false,
                witness: counter.find(&|_| true),
            });
        }
    }
    Ok(Genericity {
        generic: true,
        witness: None,
    })
}

/// The relation takes every eigenvalue with exactly `t/l` of its multiplicity, `1 ≤ t < l`.
pub fn is_gamma_corollary(rel: &Relation, s: &Spectrum, gcd: &GcdData) -> bool {
    let l = gcd.l;
    if l < 2 || !(rel.kcard * l).is_multiple_of(s.n()) {
        return false;
    }
    let t = rel.kcard * l / s.n();
    (1..l).contains(&t)
        && s.forms()
            .iter()
            .zip(&rel.choices)
            .all(|(f, c)| f.iter().zip(c).all(|(sv, &ci)| ci * l == t * sv.mult))
}

pub fn is_relatively_generic(s: &Spectrum) -> Result<RelativeGenericity, SpectraError> {
    is_relatively_generic_with_cap(s, DEFAULT_ENUMERATION_CAP)
}

/// Only the basic relation and its corollaries hold.
pub fn is_relatively_generic_with_cap(s: &Spectrum, cap: u128) -> Result<RelativeGenericity, SpectraError> {
    let gcd = compute_gcd_data(s)?;
    if !gcd.gamma_b_holds {
        let g = is_generic_with_cap(s, cap)?;
        return Ok(RelativeGenericity {
            relatively_generic: g.generic,
            offending: g.witness,
            gcd,
        });
    }
    let w = Weights::new(s);
    let n = s.n();
    for kcard in 1..n {
        let counter = RelationCounter::new(&w, kcard, cap)?;
        let allowed = u128::from((kcard * gcd.l) % n == 0);
        if counter.count() > allowed {
            let offending = counter.find(&|r| !is_gamma_corollary(r, s, &gcd));
            return Ok(RelativeGenericity {
                relatively_generic: false,
                offending,
                gcd,
            });
        }
    }
    Ok(RelativeGenericity {
        relatively_generic: true,
        offending: None,
        gcd,
    })
}
