//! Scaled-integer linear algebra for exact kernel powers.
//!
//! A `ScaledMatrix` stores a rational matrix as integer entries over a single
//! common denominator. Powers by repeated squaring then stay in integer
//! arithmetic with no per-operation gcd reduction, which is what makes exact
//! distributions at horizons in the tens of thousands of steps affordable.

use num::bigint::BigInt;
use num::integer::Integer;
use num::{BigRational, One, Signed, ToPrimitive, Zero};

use crate::chain::MarkovChain;

#[derive(Debug, Clone)]
pub(crate) struct ScaledMatrix {
    pub n: usize,
    /// Common positive denominator of all entries.
    pub denom: BigInt,
    /// Complete prime factorization of `denom`, when it was obtainable.
    /// Powers of chain kernels have astronomically large denominators whose
    /// factors are nevertheless known exactly; carrying them turns the gcd
    /// in every rational reduction into a handful of exact divisions.
    pub denom_factors: Option<Vec<(u64, u64)>>,
    /// Row-major numerators; entry (i, j) equals `entries[i * n + j] / denom`.
    pub entries: Vec<BigInt>,
}

/// Complete factorization of a small integer by trial division, or `None`
/// when the cofactor resists the division bound.
fn factorize_u64(mut n: u64) -> Option<Vec<(u64, u64)>> {
    let mut factors = Vec::new();
    let mut p = 2u64;
    while p.saturating_mul(p) <= n {
        if n % p == 0 {
            let mut e = 0u64;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            factors.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
        if p > 10_000_000 {
            return None;
        }
    }
    if n > 1 {
        factors.push((n, 1));
    }
    Some(factors)
}

fn merge_factors(
    a: &Option<Vec<(u64, u64)>>,
    b: &Option<Vec<(u64, u64)>>,
) -> Option<Vec<(u64, u64)>> {
    let (a, b) = (a.as_ref()?, b.as_ref()?);
    let mut merged: std::collections::BTreeMap<u64, u64> = a.iter().copied().collect();
    for &(p, e) in b {
        *merged.entry(p).or_insert(0) += e;
    }
    Some(merged.into_iter().collect())
}

/// Divides out the largest power of `p` from `num`, at most `cap`, returning
/// the exponent removed. Doubles the step size so even huge shared powers
/// cost only logarithmically many big divisions.
fn extract_prime_power(num: &mut BigInt, p: u64, cap: u64) -> u64 {
    let mut total = 0u64;
    let mut step = 1u64;
    while total < cap {
        let attempt = step.min(cap - total);
        let divisor = BigInt::from(p).pow(u32::try_from(attempt).expect("exponent fits u32"));
        let (q, rem) = num.div_rem(&divisor);
        if rem.is_zero() {
            *num = q;
            total += attempt;
            step = step.saturating_mul(2);
        } else if attempt == 1 {
            break;
        } else {
            step = 1;
        }
    }
    total
}

/// Builds the reduced rational `num / den` where `factors` is the complete
/// factorization of `den`. Avoids the quadratic gcd on huge operands.
pub(crate) fn reduce_with_factors(
    mut num: BigInt,
    mut den: BigInt,
    factors: &[(u64, u64)],
) -> BigRational {
    debug_assert!(!num.is_negative());
    if num.is_zero() {
        return BigRational::zero();
    }
    for &(p, e_den) in factors {
        let shared = extract_prime_power(&mut num, p, e_den);
        if shared > 0 {
            den /= BigInt::from(p).pow(u32::try_from(shared).expect("exponent fits u32"));
        }
    }
    BigRational::new_raw(num, den)
}

impl ScaledMatrix {
    /// The full kernel of `chain` over the lcm of its entry denominators.
    pub fn from_chain(chain: &MarkovChain) -> Self {
        let keep: Vec<usize> = (0..chain.n_states()).collect();
        Self::from_chain_block(chain, &keep)
    }

    /// The substochastic restriction of `chain`'s kernel to the states in
    /// `keep` (rows and columns), in the order given.
    pub fn from_chain_block(chain: &MarkovChain, keep: &[usize]) -> Self {
        let n = keep.len();
        let mut position = vec![usize::MAX; chain.n_states()];
        for (slot, &state) in keep.iter().enumerate() {
            position[state] = slot;
        }
        let mut denom = BigInt::one();
        for &state in keep {
            for (to, p) in chain.row(state) {
                if position[*to] != usize::MAX {
                    denom = denom.lcm(p.ratio().denom());
                }
            }
        }
        let mut entries = vec![BigInt::zero(); n * n];
        for (slot, &state) in keep.iter().enumerate() {
            for (to, p) in chain.row(state) {
                let target = position[*to];
                if target != usize::MAX {
                    let r = p.ratio();
                    entries[slot * n + target] = r.numer() * (&denom / r.denom());
                }
            }
        }
        let denom_factors = denom.to_u64().and_then(factorize_u64);
        ScaledMatrix { n, denom, denom_factors, entries }
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![BigInt::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = BigInt::one();
        }
        ScaledMatrix {
            n,
            denom: BigInt::one(),
            denom_factors: Some(Vec::new()),
            entries,
        }
    }

    pub fn mat_mul(&self, other: &ScaledMatrix) -> ScaledMatrix {
        debug_assert_eq!(self.n, other.n);
        let n = self.n;
        let mut entries = vec![BigInt::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = &self.entries[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = &other.entries[k * n + j];
                    if !b.is_zero() {
                        entries[i * n + j] += a * b;
                    }
                }
            }
        }
        ScaledMatrix {
            n,
            denom: &self.denom * &other.denom,
            denom_factors: merge_factors(&self.denom_factors, &other.denom_factors),
            entries,
        }
    }

    /// Exact `self^exp` by repeated squaring.
    pub fn pow(&self, exp: u64) -> ScaledMatrix {
        let mut result = ScaledMatrix::identity(self.n);
        let mut base = self.clone();
        let mut exp = exp;
        while exp > 0 {
            if exp & 1 == 1 {
                result = result.mat_mul(&base);
            }
            exp >>= 1;
            if exp > 0 {
                base = base.mat_mul(&base);
            }
        }
        result
    }

    /// Reduced rational with this matrix's denominator.
    pub fn make_ratio(&self, num: BigInt) -> BigRational {
        match &self.denom_factors {
            Some(factors) => reduce_with_factors(num, self.denom.clone(), factors),
            None => BigRational::new(num, self.denom.clone()),
        }
    }

    /// Entry (i, j) as a reduced rational.
    pub fn entry_ratio(&self, i: usize, j: usize) -> BigRational {
        self.make_ratio(self.entries[i * self.n + j].clone())
    }

    /// Row `i` as reduced rationals.
    pub fn row_ratios(&self, i: usize) -> Vec<BigRational> {
        (0..self.n).map(|j| self.entry_ratio(i, j)).collect()
    }

    /// Sum of row `i`'s numerators; the row mass is `row_numer_sum / denom`.
    pub fn row_numer_sum(&self, i: usize) -> BigInt {
        self.entries[i * self.n..(i + 1) * self.n]
            .iter()
            .sum()
    }

    /// Total variation distance between rows `i` and `j`: the one-sided sum
    /// of positive differences, reduced.
    pub fn tv_between(&self, i: usize, j: usize) -> BigRational {
        let a = &self.entries[i * self.n..(i + 1) * self.n];
        let b = &self.entries[j * self.n..(j + 1) * self.n];
        let mut diff = BigInt::zero();
        for (x, y) in a.iter().zip(b) {
            if x > y {
                diff += x - y;
            }
        }
        self.make_ratio(diff)
    }
}

/// Exact reduced sum `a_num / a.denom + b_num / b.denom`, using the factored
/// denominators to sidestep the gcd on huge operands when possible.
pub(crate) fn add_scaled(
    a: &ScaledMatrix,
    a_num: BigInt,
    b: &ScaledMatrix,
    b_num: BigInt,
) -> BigRational {
    let (Some(fa), Some(fb)) = (&a.denom_factors, &b.denom_factors) else {
        return a.make_ratio(a_num) + b.make_ratio(b_num);
    };
    let mut exponents: std::collections::BTreeMap<u64, (u64, u64)> = std::collections::BTreeMap::new();
    for &(p, e) in fa {
        exponents.entry(p).or_insert((0, 0)).0 = e;
    }
    for &(p, e) in fb {
        exponents.entry(p).or_insert((0, 0)).1 = e;
    }
    let mut lcm = BigInt::one();
    let mut scale_a = BigInt::one();
    let mut scale_b = BigInt::one();
    let mut factors = Vec::with_capacity(exponents.len());
    for (p, (ea, eb)) in exponents {
        let e = ea.max(eb);
        let base = BigInt::from(p);
        lcm *= base.pow(u32::try_from(e).expect("exponent fits u32"));
        scale_a *= base.pow(u32::try_from(e - ea).expect("exponent fits u32"));
        scale_b *= base.pow(u32::try_from(e - eb).expect("exponent fits u32"));
        factors.push((p, e));
    }
    reduce_with_factors(a_num * scale_a + b_num * scale_b, lcm, &factors)
}

// ---------------------------------------------------------------------------
// Rigorous power comparisons via dyadic interval arithmetic
// ---------------------------------------------------------------------------

/// A dyadic number `mantissa * 2^exp` used as a one-sided bound.
#[derive(Debug, Clone)]
struct Dyadic {
    mantissa: BigInt,
    exp: i64,
}

impl Dyadic {
    fn from_ratio_rounded(r: &BigRational, bits: u64, round_up: bool) -> Dyadic {
        // mantissa = round(numer * 2^s / denom) with s chosen so the
        // mantissa carries `bits` significant bits.
        let numer = r.numer();
        let denom = r.denom();
        let shift = bits as i64 + denom.bits() as i64 - numer.bits() as i64;
        let scaled = if shift >= 0 {
            numer << shift as u64
        } else {
            numer >> (-shift) as u64
        };
        let (q, rem) = scaled.div_rem(denom);
        let mantissa = if round_up && !rem.is_zero() { q + 1 } else { q };
        Dyadic { mantissa, exp: -shift }
    }

    fn mul_rounded(&self, other: &Dyadic, bits: u64, round_up: bool) -> Dyadic {
        let product = &self.mantissa * &other.mantissa;
        let excess = product.bits() as i64 - bits as i64;
        if excess <= 0 {
            return Dyadic { mantissa: product, exp: self.exp + other.exp };
        }
        let truncated = &product >> excess as u64;
        let lost = !(&truncated << excess as u64).eq(&product);
        let mantissa = if round_up && lost { truncated + 1 } else { truncated };
        Dyadic {
            mantissa,
            exp: self.exp + other.exp + excess,
        }
    }

    fn cmp_ratio(&self, r: &BigRational) -> std::cmp::Ordering {
        // Compare mantissa * 2^exp * denom with numer.
        let lhs = if self.exp >= 0 {
            (&self.mantissa << self.exp as u64) * r.denom()
        } else {
            &self.mantissa * r.denom()
        };
        let rhs = if self.exp >= 0 {
            r.numer().clone()
        } else {
            r.numer() << (-self.exp) as u64
        };
        lhs.cmp(&rhs)
    }
}

/// Rigorously decides whether `base^exp <= threshold` for rationals in
/// `(0, 1)`, without materializing the exact power.
///
/// Interval bounds on the power are maintained in dyadic arithmetic with
/// directed rounding and the precision doubles until the comparison is
/// decided. Callers must rule out the exact-equality case beforehand; it is
/// the one input on which the refinement cannot terminate.
pub(crate) fn power_at_most(base: &BigRational, exp: u64, threshold: &BigRational) -> bool {
    use std::cmp::Ordering;
    debug_assert!(exp > 0);
    let mut bits: u64 = 128;
    loop {
        let mut lo = Dyadic::from_ratio_rounded(&BigRational::one(), bits, false);
        let mut hi = lo.clone();
        let base_lo = Dyadic::from_ratio_rounded(base, bits, false);
        let base_hi = Dyadic::from_ratio_rounded(base, bits, true);
        let mut e = exp;
        let mut sq_lo = base_lo;
        let mut sq_hi = base_hi;
        while e > 0 {
            if e & 1 == 1 {
                lo = lo.mul_rounded(&sq_lo, bits, false);
                hi = hi.mul_rounded(&sq_hi, bits, true);
            }
            e >>= 1;
            if e > 0 {
                sq_lo = sq_lo.mul_rounded(&sq_lo, bits, false);
                sq_hi = sq_hi.mul_rounded(&sq_hi, bits, true);
            }
        }
        if hi.cmp_ratio(threshold) != Ordering::Greater {
            return true;
        }
        if lo.cmp_ratio(threshold) == Ordering::Greater {
            return false;
        }
        bits *= 2;
    }
}

/// Smallest `k >= 1` with `base^k <= threshold`, for `base` in `(0, 1)`.
pub(crate) fn min_exponent_reaching(base: &BigRational, threshold: &BigRational) -> u64 {
    debug_assert!(base > &BigRational::zero() && base < &BigRational::one());
    let mut hi: u64 = 1;
    while !power_at_most(base, hi, threshold) {
        hi = hi.checked_mul(2).expect("exponent fits in u64");
    }
    let mut lo = hi / 2; // base^lo > threshold (or lo = 0)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if power_at_most(base, mid, threshold) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::Prob;

    fn two_state(alpha: Prob) -> MarkovChain {
        let stay = alpha.complement();
        MarkovChain::from_dense(
            vec!["0".into(), "1".into()],
            vec![
                vec![stay.clone(), alpha.clone()],
                vec![alpha, stay],
            ],
        )
        .unwrap()
    }

    #[test]
    fn power_matches_iterated_multiplication() {
        let chain = two_state(Prob::from_ratio(1, 4).unwrap());
        let m = ScaledMatrix::from_chain(&chain);
        let direct = m.mat_mul(&m).mat_mul(&m);
        let powered = m.pow(3);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(direct.entry_ratio(i, j), powered.entry_ratio(i, j));
            }
        }
        // Closed form for the symmetric two-state chain.
        let expect = BigRational::new(BigInt::from(1 + 1), BigInt::from(2 * 8));
        // P^3(0,0) = (1 + (1/2)^3) / 2 = 9/16
        assert_eq!(
            powered.entry_ratio(0, 0),
            BigRational::new(BigInt::from(9), BigInt::from(16))
        );
        let _ = expect;
    }

    #[test]
    fn min_exponent_matches_exact_scan() {
        let quarter = BigRational::new(BigInt::from(1), BigInt::from(4));
        for (num, den) in [(3i64, 4i64), (9, 10), (99, 100), (2, 3)] {
            let base = BigRational::new(BigInt::from(num), BigInt::from(den));
            let fast = min_exponent_reaching(&base, &quarter);
            let mut k = 1u64;
            let mut value = base.clone();
            while value > quarter {
                value *= &base;
                k += 1;
            }
            assert_eq!(fast, k, "base {num}/{den}");
        }
        // A tiny base where exact powers would be astronomically large.
        let base = BigRational::new(BigInt::from(999_999_999i64), BigInt::from(1_000_000_000i64));
        let k = min_exponent_reaching(&base, &quarter);
        // ln(1/4)/ln(base) = 1386294360.67...
        assert_eq!(k, 1_386_294_361);
    }

    #[test]
    fn block_restriction_is_substochastic() {
        let chain = two_state(Prob::from_ratio(1, 10).unwrap());
        let block = ScaledMatrix::from_chain_block(&chain, &[0]);
        assert_eq!(
            block.entry_ratio(0, 0),
            BigRational::new(BigInt::from(9), BigInt::from(10))
        );
        let powered = block.pow(5);
        assert_eq!(
            BigRational::new(powered.row_numer_sum(0), powered.denom.clone()),
            crate::prob::ratio_pow(
                &BigRational::new(BigInt::from(9), BigInt::from(10)),
                5
            )
        );
    }
}
