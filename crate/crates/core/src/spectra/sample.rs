//! Rejection sampling of exact test spectra with prescribed multiplicities.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    compute_gcd_data, is_generic, is_relatively_generic, rat, reduce_angle, SpectraError, SpectralValue, Spectrum,
};
use crate::jnf::{Mode, MultiplicityVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GenericityTarget {
    Generic,
    RelativelyGeneric,
}

/// What the sampled spectrum must satisfy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleTarget {
    pub genericity: GenericityTarget,
    /// Required `ξ` angle `k/q` (multiplicative only). Defaults to `1/q` for a
    /// generic target and to `0` for a relatively generic one.
    pub xi_angle: Option<BigRational>,
}

impl SampleTarget {
    pub fn generic() -> Self {
        SampleTarget {
            genericity: GenericityTarget::Generic,
            xi_angle: None,
        }
    }

    pub fn relatively_generic(xi_angle: Option<BigRational>) -> Self {
        SampleTarget {
            genericity: GenericityTarget::RelativelyGeneric,
            xi_angle,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleOptions {
    pub seed: u64,
    /// Denominators of freely chosen values are primes in `(bound/2, bound]`.
    pub denominator_bound: u64,
    pub max_attempts: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            seed: 0,
            denominator_bound: 1000,
            max_attempts: 1000,
        }
    }
}

fn primes_in(lo: u64, hi: u64) -> Vec<u64> {
    let hi = hi as usize;
    let mut sieve = vec![true; hi + 1];
    let mut out = Vec::new();
    for i in 2..=hi {
        if sieve[i] {
            if i as u64 > lo {
                out.push(i as u64);
            }
            let mut j = i * i;
            while j <= hi {
                sieve[j] = false;
                j += i;
            }
        }
    }
    out
}

/// Draws a spectrum with multiplicities `pmv` meeting `target`; deterministic in `opts.seed`.
pub fn sample_spectrum(
    pmv: &[MultiplicityVector],
    mode: Mode,
    target: &SampleTarget,
    opts: SampleOptions,
) -> Result<Spectrum, SpectraError> {
    if pmv.len() < 2 {
        return Err(SpectraError::TooFewForms(pmv.len()));
    }
    let n = pmv[0].total();
    if n == 0 || pmv.iter().any(|mv| mv.total() != n) {
        return Err(SpectraError::InvalidTarget(
            "multiplicity vectors must share a positive size".into(),
        ));
    }
    let q = pmv.iter().flat_map(|mv| mv.components()).fold(0usize, |g, m| g.gcd(m));
    let xi = resolve_xi(mode, q, target)?;

    let primes = primes_in(opts.denominator_bound / 2, opts.denominator_bound.max(3));
    if primes.is_empty() {
        return Err(SpectraError::InvalidTarget("denominator bound too small".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.max_attempts {
        let Some(s) = draw(pmv, mode, q, &xi, &primes, &mut rng) else {
            continue;
        };
        if accept(&s, target, &xi)? {
            return Ok(s);
        }
    }
    Err(SpectraError::SamplingExhausted(opts.max_attempts))
}

fn resolve_xi(mode: Mode, q: usize, target: &SampleTarget) -> Result<BigRational, SpectraError> {
    if mode == Mode::Additive {
        return match &target.xi_angle {
            Some(x) if !x.is_zero() => Err(SpectraError::InvalidTarget("additive spectra have no ξ".into())),
            _ => Ok(BigRational::zero()),
        };
    }
    let xi = match &target.xi_angle {
        Some(x) => reduce_angle(x),
        None => match target.genericity {
            GenericityTarget::Generic if q > 1 => rat(1, q as i64),
            _ => BigRational::zero(),
        },
    };
    let order = xi.denom().to_usize().unwrap_or(usize::MAX);
    if !q.is_multiple_of(order) {
        return Err(SpectraError::InvalidTarget(format!(
            "ξ angle {} is not a q-th root of unity for q = {q}",
            super::format_rational(&xi)
        )));
    }
    // ξ = exp(2πik/q) is primitive of order q exactly when its reduced denominator is q.
    if target.genericity == GenericityTarget::Generic && order != q {
        return Err(SpectraError::InvalidTarget(
            "a generic spectrum needs ξ primitive of order q".into(),
        ));
    }
    Ok(xi)
}

fn draw(
    pmv: &[MultiplicityVector],
    mode: Mode,
    q: usize,
    xi: &BigRational,
    primes: &[u64],
    rng: &mut ChaCha8Rng,
) -> Option<Spectrum> {
    let mut forms: Vec<Vec<SpectralValue>> = Vec::with_capacity(pmv.len());
    let mut prime_pool: Vec<u64> = primes.to_vec();
    let mut next_value = |rng: &mut ChaCha8Rng| -> BigRational {
        let p = if prime_pool.is_empty() {
            primes[rng.random_range(0..primes.len())]
        } else {
            prime_pool.swap_remove(rng.random_range(0..prime_pool.len()))
        } as i64;
        let a = rng.random_range(1..p);
        match mode {
            Mode::Multiplicative => rat(a, p),
            Mode::Additive => {
                if rng.random_bool(0.5) {
                    rat(a, p)
                } else {
                    rat(-a, p)
                }
            }
        }
    };
    for mv in pmv {
        forms.push(
            mv.components()
                .iter()
                .map(|&m| SpectralValue::new(next_value(rng), m))
                .collect(),
        );
    }
    // Compensate with the last eigenvalue of the last form.
    let last_form = forms.len() - 1;
    let last_slot = forms[last_form].len() - 1;
    let m_last = forms[last_form][last_slot].mult;
    let rest = forms
        .iter()
        .flatten()
        .take(forms.iter().map(Vec::len).sum::<usize>() - 1)
        .fold(BigRational::zero(), |acc, sv| {
            acc + &sv.value * BigRational::from_integer(BigInt::from(sv.mult))
        });
    let value = match mode {
        Mode::Additive => -rest / BigRational::from_integer(BigInt::from(m_last)),
        Mode::Multiplicative => {
            // Σ θ·(m/q) ≡ ξ (mod 1): θ_last·(m_last/q) ≡ ξ - rest/q.
            let reduced_last = m_last / q;
            let shift = rng.random_range(0..reduced_last) as i64;
            let qq = BigRational::from_integer(BigInt::from(q));
            let rhs = xi - rest / qq + rat(shift, 1);
            reduce_angle(&(rhs / BigRational::from_integer(BigInt::from(reduced_last))))
        }
    };
    forms[last_form][last_slot].value = value;
    Spectrum::new(mode, forms).ok()
}

fn accept(s: &Spectrum, target: &SampleTarget, xi: &BigRational) -> Result<bool, SpectraError> {
    let gcd = compute_gcd_data(s)?;
    if s.mode() == Mode::Multiplicative && &gcd.xi() != xi {
        return Ok(false);
    }
    Ok(match target.genericity {
        GenericityTarget::Generic => is_generic(s)?.generic,
        GenericityTarget::RelativelyGeneric => is_relatively_generic(s)?.relatively_generic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::validate_spectrum;

    fn mv(c: &[usize]) -> MultiplicityVector {
        MultiplicityVector::new(c.to_vec())
    }

    #[test]
    fn case_a_test_spectrum() {
        let pmv = vec![mv(&[2, 2]); 4];
        let s = sample_spectrum(
            &pmv,
            Mode::Multiplicative,
            &SampleTarget::relatively_generic(None),
            SampleOptions::default(),
        )
        .unwrap();
        validate_spectrum(&s).unwrap();
        let g = compute_gcd_data(&s).unwrap();
        assert_eq!((g.q, g.k, g.l), (2, 0, 2));
        assert!(is_relatively_generic(&s).unwrap().relatively_generic);
    }

    #[test]
    fn generic_quadruple() {
        let pmv = vec![mv(&[1, 1]); 4];
        let s = sample_spectrum(
            &pmv,
            Mode::Multiplicative,
            &SampleTarget::generic(),
            SampleOptions::default(),
        )
        .unwrap();
        assert!(is_generic(&s).unwrap().generic);
        assert_eq!(compute_gcd_data(&s).unwrap().q, 1);
    }

    #[test]
    fn additive_generic() {
        let pmv = vec![mv(&[2, 1]), mv(&[1, 1, 1]), mv(&[2, 1])];
        let s = sample_spectrum(&pmv, Mode::Additive, &SampleTarget::generic(), SampleOptions::default()).unwrap();
        validate_spectrum(&s).unwrap();
        assert!(is_generic(&s).unwrap().generic);
    }

    #[test]
    fn deterministic_in_seed() {
        let pmv = vec![mv(&[1, 1]); 4];
        let o = SampleOptions {
            seed: 42,
            ..SampleOptions::default()
        };
        let a = sample_spectrum(&pmv, Mode::Multiplicative, &SampleTarget::generic(), o).unwrap();
        let b = sample_spectrum(&pmv, Mode::Multiplicative, &SampleTarget::generic(), o).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn impossible_targets() {
        let pmv = vec![mv(&[2, 2]); 4];
        let bad = SampleTarget::relatively_generic(Some(rat(1, 3)));
        assert!(matches!(
            sample_spectrum(&pmv, Mode::Multiplicative, &bad, SampleOptions::default()),
            Err(SpectraError::InvalidTarget(_))
        ));
        let bad = SampleTarget {
            genericity: GenericityTarget::Generic,
            xi_angle: Some(BigRational::zero()),
        };
        assert!(matches!(
            sample_spectrum(&pmv, Mode::Multiplicative, &bad, SampleOptions::default()),
            Err(SpectraError::InvalidTarget(_))
        ));
    }
}
