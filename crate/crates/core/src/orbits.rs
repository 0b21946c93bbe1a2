//! Periodic orbits of star graphs as cyclic words.
//!
//! A periodic orbit of period `2k` goes out and back along `k` edges in
//! turn, so it is determined by the cyclic word of the `k` edges it visits.
//! Rotations of a word describe the same orbit; the lexicographically
//! smallest rotation is used as the canonical representative.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;

use crate::combinatorics::{binomial, multinomial};
use crate::error::{invalid, Error, Result};
use crate::graph::{s_amplitude, Scattering};

/// Default cap on the half-period for brute-force class enumeration.
pub const DEFAULT_ENUMERATION_BUDGET: usize = 12;

/// Cap on the number of candidate arrangements scanned by
/// [`enumerate_class`].
pub const MAX_CANDIDATES: u128 = 50_000_000;

/// A cyclic word over edge labels `1..=v`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrbitWord(Vec<u32>);

impl OrbitWord {
    pub fn new(letters: Vec<u32>) -> Result<Self> {
        if letters.is_empty() {
            return Err(invalid("an orbit word needs at least one letter"));
        }
        if letters.contains(&0) {
            return Err(invalid("edge labels start at 1"));
        }
        Ok(Self(letters))
    }

    /// Parses `"11212332"` (digits) or `"aabab"` (`a` = 1, `b` = 2, ...).
    /// Comma-separated labels are accepted for alphabets beyond 9.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let letters = if text.contains(',') {
            text.split(',')
                .map(|t| t.trim().parse::<u32>().map_err(|e| invalid(format!("bad label {t:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?
        } else {
            text.chars()
                .map(|c| match c {
                    '1'..='9' => Ok(c as u32 - '0' as u32),
                    'a'..='z' => Ok(c as u32 - 'a' as u32 + 1),
                    _ => Err(invalid(format!("bad letter {c:?} in orbit word"))),
                })
                .collect::<Result<Vec<_>>>()?
        };
        Self::new(letters)
    }

    pub fn letters(&self) -> &[u32] {
        &self.0
    }

    /// Word length `k`; the orbit period is `2k`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn rotation(&self, shift: usize) -> OrbitWord {
        let mut w = self.0.clone();
        w.rotate_left(shift % self.len());
        OrbitWord(w)
    }

    pub fn canonical(&self) -> OrbitWord {
        (0..self.len()).map(|s| self.rotation(s)).min().expect("nonempty")
    }

    pub fn is_canonical(&self) -> bool {
        is_least_rotation(&self.0)
    }

    /// Same orbit up to rotation.
    pub fn same_orbit(&self, other: &OrbitWord) -> bool {
        self.len() == other.len() && self.canonical() == other.canonical()
    }

    /// Number of cyclically adjacent pairs of different letters, i.e.
    /// transmissions through the center.
    pub fn transmissions(&self) -> usize {
        let k = self.len();
        (0..k).filter(|&i| self.0[i] != self.0[(i + 1) % k]).count()
    }
}

impl fmt::Display for OrbitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|&c| c <= 9) {
            for c in &self.0 {
                write!(f, "{c}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
            f.write_str(&parts.join(","))
        }
    }
}

fn is_least_rotation(w: &[u32]) -> bool {
    let k = w.len();
    (1..k).all(|s| {
        for i in 0..k {
            let (a, b) = (w[i], w[(i + s) % k]);
            if a != b {
                return a < b;
            }
        }
        true
    })
}

/// Degeneracy class of an orbit: per distinct edge (in increasing label
/// order), the number of visits `n_i` and of cyclic blocks `m_i`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrbitClass {
    n: Vec<u32>,
    m: Vec<u32>,
}

impl OrbitClass {
    pub fn new(n: Vec<u32>, m: Vec<u32>) -> Result<Self> {
        if n.is_empty() || n.len() != m.len() {
            return Err(invalid("n and m must be nonempty vectors of equal length"));
        }
        if n.iter().zip(&m).any(|(&ni, &mi)| mi < 1 || mi > ni) {
            return Err(invalid("need 1 <= m_i <= n_i for every edge"));
        }
        if n.len() >= 2 && m.iter().sum::<u32>() < 2 {
            return Err(invalid("sum of m must be at least 2 when j >= 2"));
        }
        Ok(Self { n, m })
    }

    pub fn j(&self) -> usize {
        self.n.len()
    }

    pub fn n(&self) -> &[u32] {
        &self.n
    }

    pub fn m(&self) -> &[u32] {
        &self.m
    }

    /// Half-period `N = sum n_i`.
    pub fn total_visits(&self) -> u32 {
        self.n.iter().sum()
    }

    /// `M = sum m_i`.
    pub fn total_blocks(&self) -> u32 {
        self.m.iter().sum()
    }
}

impl fmt::Display for OrbitClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "j={} n={:?} m={:?}", self.j(), self.n, self.m)
    }
}

pub fn classify(word: &OrbitWord) -> OrbitClass {
    let k = word.len();
    let w = word.letters();
    let mut stats: BTreeMap<u32, (u32, u32)> = BTreeMap::new();
    for i in 0..k {
        let e = stats.entry(w[i]).or_default();
        e.0 += 1;
        // a block starts wherever the cyclic predecessor differs
        if w[(i + k - 1) % k] != w[i] {
            e.1 += 1;
        }
    }
    let (n, mut m): (Vec<u32>, Vec<u32>) = stats.values().copied().unzip();
    if n.len() == 1 {
        m[0] = 1;
    }
    OrbitClass { n, m }
}

/// Largest `r` such that the word is an `r`-fold repeat.
pub fn repetition_number(word: &OrbitWord) -> usize {
    let w = word.letters();
    let k = w.len();
    (1..=k)
        .find(|&d| k % d == 0 && (d..k).all(|i| w[i] == w[i - d]))
        .map(|d| k / d)
        .expect("d = k always divides")
}

/// Product of scattering amplitudes along the orbit: a backscatter for every
/// cyclically adjacent equal pair, a transmission for every unequal pair and
/// a factor 1 for each outer-vertex reflection.
pub fn amplitude(word: &OrbitWord, v: usize) -> f64 {
    let t = word.transmissions() as i32;
    let b = word.len() as i32 - t;
    s_amplitude(Scattering::Backscatter, v).powi(b) * s_amplitude(Scattering::Transmit, v).powi(t)
}

/// Number of ordered ways to split `total` into `parts` positive parts.
pub fn partitions(total: u64, parts: u64) -> BigUint {
    if parts == 0 || parts > total {
        return BigUint::zero();
    }
    binomial(total - 1, parts - 1)
        .to_biguint()
        .expect("binomials are nonnegative")
}

fn candidate_count(n: &[u32]) -> u128 {
    // arrangements with the first letter fixed to 1
    let mut rest: Vec<u64> = n.iter().map(|&x| x as u64).collect();
    rest[0] -= 1;
    let c = multinomial(&rest);
    u128::try_from(c).unwrap_or(u128::MAX)
}

/// One canonical word per orbit in the class, in lexicographic order.
/// Infeasible classes yield an empty list.
pub fn enumerate_class(class: &OrbitClass) -> Result<Vec<OrbitWord>> {
    let needed = candidate_count(class.n());
    if needed > MAX_CANDIDATES {
        return Err(Error::BudgetExceeded {
            needed,
            budget: MAX_CANDIDATES,
        });
    }
    // The least rotation starts with the smallest letter, so only words
    // beginning with 1 need to be scanned.
    let mut rest: Vec<u32> = class
        .n()
        .iter()
        .enumerate()
        .flat_map(|(i, &c)| std::iter::repeat(i as u32 + 1).take(c as usize))
        .collect();
    rest.remove(0);
    let mut out = Vec::new();
    let mut word = Vec::with_capacity(rest.len() + 1);
    loop {
        word.clear();
        word.push(1);
        word.extend_from_slice(&rest);
        if is_least_rotation(&word) {
            let w = OrbitWord(word.clone());
            if classify(&w) == *class {
                out.push(w);
            }
        }
        if !next_permutation(&mut rest) {
            break;
        }
    }
    Ok(out)
}

fn next_permutation(a: &mut [u32]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let mut i = a.len() - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = a.len() - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

/// Orbits in the class, each weighted by `1 / r`, by explicit enumeration.
pub fn q_bruteforce(class: &OrbitClass, budget: usize) -> Result<BigRational> {
    let n = class.total_visits() as usize;
    if n > budget {
        return Err(Error::BudgetExceeded {
            needed: n as u128,
            budget: budget as u128,
        });
    }
    Ok(enumerate_class(class)?
        .iter()
        .map(|w| BigRational::new(BigInt::one(), BigInt::from(repetition_number(w))))
        .fold(BigRational::zero(), |acc, q| acc + q))
}

/// Closed-form weighted orbit count
///
/// `Q = prod binom(n_i - 1, m_i - 1) (-1)^M
///      sum_{1 <= t <= m} (-1)^T / T * multinomial(T; t) * prod binom(m_i - 1, t_i - 1)`.
///
/// For a single edge the only orbit is `a^k` with `r = k`, giving `1/k`.
pub fn q_formula(class: &OrbitClass) -> BigRational {
    if class.j() == 1 {
        return BigRational::new(BigInt::one(), BigInt::from(class.n()[0]));
    }
    let n: Vec<u64> = class.n().iter().map(|&x| x as u64).collect();
    let m: Vec<u64> = class.m().iter().map(|&x| x as u64).collect();
    let prefactor: BigInt = n
        .iter()
        .zip(&m)
        .map(|(&ni, &mi)| binomial(ni - 1, mi - 1))
        .product();

    let mut sum = BigRational::zero();
    let mut t: Vec<u64> = vec![1; m.len()];
    loop {
        let total: u64 = t.iter().sum();
        let mut term = BigRational::new(multinomial(&t), BigInt::from(total));
        for (&mi, &ti) in m.iter().zip(&t) {
            term *= BigRational::from_integer(binomial(mi - 1, ti - 1));
        }
        if total % 2 == 1 {
            term = -term;
        }
        sum += term;
        // odometer over 1 <= t_i <= m_i
        let mut i = 0;
        loop {
            if i == t.len() {
                let big_m: u64 = m.iter().sum();
                let q = sum * BigRational::from_integer(prefactor);
                return if big_m % 2 == 1 { -q } else { q };
            }
            if t[i] < m[i] {
                t[i] += 1;
                break;
            }
            t[i] = 1;
            i += 1;
        }
    }
}

/// Every feasible class with `j` edges and half-period `total`.
pub fn feasible_classes(j: usize, total: u32) -> Vec<OrbitClass> {
    let mut out = Vec::new();
    for n in positive_compositions(total, j) {
        let mut m: Vec<u32> = vec![1; j];
        loop {
            if let Ok(class) = OrbitClass::new(n.clone(), m.clone()) {
                if is_feasible(&class) {
                    out.push(class);
                }
            }
            let mut i = 0;
            loop {
                if i == j {
                    break;
                }
                if m[i] < n[i] {
                    m[i] += 1;
                    break;
                }
                m[i] = 1;
                i += 1;
            }
            if i == j {
                break;
            }
        }
    }
    out
}

/// A class is realizable iff no edge owns more than half of the blocks
/// (blocks of one edge must be separated by blocks of others); a single
/// edge always forms one block.
pub fn is_feasible(class: &OrbitClass) -> bool {
    if class.j() == 1 {
        return class.m()[0] == 1;
    }
    let total = class.total_blocks();
    class.m().iter().all(|&mi| 2 * mi <= total)
}

fn positive_compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    if parts == 0 || (total as usize) < parts {
        return Vec::new();
    }
    crate::combinatorics::weak_compositions((total as usize - parts) as u64, parts)
        .into_iter()
        .map(|c| c.into_iter().map(|x| x as u32 + 1).collect())
        .collect()
}

/// All canonical words of length `k` over `1..=v` (necklaces), generated
/// in lexicographic order by the Fredricksen–Kessler–Maiorana algorithm.
pub fn necklaces(v: u32, k: usize) -> Vec<OrbitWord> {
    let mut out = Vec::new();
    if k == 0 || v == 0 {
        return out;
    }
    let mut a = vec![0u32; k + 1];
    let mut i = 1usize;
    // a[1..=k] holds letters 0..v-1
    loop {
        if k % i == 0 {
            out.push(OrbitWord(a[1..=k].iter().map(|&x| x + 1).collect()));
        }
        // next prenecklace
        let mut p = k;
        while p > 0 && a[p] == v - 1 {
            p -= 1;
        }
        if p == 0 {
            break;
        }
        a[p] += 1;
        for q in p + 1..=k {
            a[q] = a[q - p];
        }
        i = p;
    }
    out
}

/// Signed sum helper used by tests: `true` when `q` is exactly zero or
/// positive.
pub fn is_nonnegative(q: &BigRational) -> bool {
    !q.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> OrbitWord {
        OrbitWord::parse(s).unwrap()
    }

    fn class(n: &[u32], m: &[u32]) -> OrbitClass {
        OrbitClass::new(n.to_vec(), m.to_vec()).unwrap()
    }

    fn rat(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(&w("11212332")), class(&[3, 3, 2], &[2, 3, 1]));
        assert_eq!(classify(&w("abab")), class(&[2, 2], &[2, 2]));
        assert_eq!(classify(&w("aaa")), class(&[3], &[1]));
        assert_eq!(classify(&w("aabab")), class(&[3, 2], &[2, 2]));
    }

    #[test]
    fn repetition_examples() {
        assert_eq!(repetition_number(&w("abab")), 2);
        assert_eq!(repetition_number(&w("aabab")), 1);
        assert_eq!(repetition_number(&w("aa")), 2);
        assert_eq!(repetition_number(&w("abcabcabc")), 3);
    }

    #[test]
    fn amplitude_examples() {
        assert_eq!(amplitude(&w("aaa"), 2), 0.0);
        for v in 1..10 {
            let b = -1.0 + 2.0 / v as f64;
            assert!((amplitude(&w("aaa"), v) - b.powi(3)).abs() < 1e-15);
        }
        assert!((amplitude(&w("aab"), 4) + 0.125).abs() < 1e-15);
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(enumerate_class(&class(&[2, 2], &[2, 2])).unwrap(), vec![w("1212")]);
        assert_eq!(enumerate_class(&class(&[3, 2], &[2, 2])).unwrap(), vec![w("11212")]);
        assert_eq!(enumerate_class(&class(&[1, 1], &[1, 1])).unwrap(), vec![w("12")]);
        assert!(enumerate_class(&class(&[1, 2], &[1, 2])).unwrap().is_empty());
    }

    #[test]
    fn enumeration_matches_exhaustive_scan() {
        // every word of length 5 over {1,2,3}, grouped by class
        let mut by_class: BTreeMap<OrbitClass, Vec<OrbitWord>> = BTreeMap::new();
        for code in 0..3u32.pow(5) {
            let letters: Vec<u32> = (0..5).map(|i| code / 3u32.pow(i) % 3 + 1).collect();
            let word = OrbitWord(letters);
            let c = classify(&word);
            // only classes labelled 1..j in order
            let distinct: Vec<u32> = word.letters().iter().copied().collect::<std::collections::BTreeSet<_>>().into_iter().collect();
            if distinct != (1..=c.j() as u32).collect::<Vec<_>>() {
                continue;
            }
            let canon = word.canonical();
            let list = by_class.entry(c).or_default();
            if !list.contains(&canon) {
                list.push(canon);
            }
        }
        for (c, mut words) in by_class {
            words.sort();
            assert_eq!(enumerate_class(&c).unwrap(), words, "{c}");
        }
    }

    #[test]
    fn q_examples() {
        assert_eq!(q_bruteforce(&class(&[2, 2], &[2, 2]), 12).unwrap(), rat(1, 2));
        assert_eq!(q_bruteforce(&class(&[3, 2], &[2, 2]), 12).unwrap(), rat(1, 1));
        assert_eq!(q_bruteforce(&class(&[5], &[1]), 12).unwrap(), rat(1, 5));
        assert_eq!(q_formula(&class(&[2, 2], &[2, 2])), rat(1, 2));
        assert_eq!(q_formula(&class(&[3, 2], &[2, 2])), rat(1, 1));
        let c = class(&[3, 3, 2], &[2, 3, 1]);
        assert_eq!(q_formula(&c), q_bruteforce(&c, 12).unwrap());
        assert_eq!(q_formula(&c), rat(2, 1));
    }

    #[test]
    fn q_budget() {
        let c = class(&[7, 6], &[2, 2]);
        assert!(matches!(q_bruteforce(&c, 12), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn partition_examples() {
        assert_eq!(partitions(5, 2), BigUint::from(4u32));
        assert_eq!(partitions(3, 3), BigUint::from(1u32));
        assert_eq!(partitions(3, 4), BigUint::zero());
        // direct enumeration of ordered positive triples summing to 6
        let mut count = 0u32;
        for a in 1..6 {
            for b in 1..6 {
                if a + b < 6 {
                    count += 1;
                }
            }
        }
        assert_eq!(partitions(6, 3), BigUint::from(count));
    }

    #[test]
    fn two_edge_sequence_count() {
        for na in 1..=6u32 {
            for nb in 1..=6u32 {
                for m in 1..=na.min(nb) {
                    let c = class(&[na, nb], &[m, m]);
                    let expected = BigRational::new(
                        binomial(na as u64 - 1, m as u64 - 1) * binomial(nb as u64 - 1, m as u64 - 1),
                        BigInt::from(m),
                    );
                    assert_eq!(q_bruteforce(&c, 12).unwrap(), expected, "{c}");
                }
            }
        }
    }

    #[test]
    fn necklace_counts() {
        // binary necklaces: 1, 2, 3, 4, 6, 8, 14 for k = 0..6 (k >= 1 here)
        let counts: Vec<usize> = (1..=6).map(|k| necklaces(2, k).len()).collect();
        assert_eq!(counts, vec![2, 3, 4, 6, 8, 14]);
        assert!(necklaces(3, 4).iter().all(|w| w.is_canonical()));
    }

    #[test]
    fn necklace_trace_identity() {
        // sum over orbits of (k / r) A = tr(B^k) with B = (2/v) J - I, whose
        // spectrum is {1, -1 (v - 1 times)}
        for v in 1..=4u32 {
            for k in 1..=7usize {
                let total: f64 = necklaces(v, k)
                    .iter()
                    .map(|w| k as f64 / repetition_number(w) as f64 * amplitude(w, v as usize))
                    .sum();
                let trace = 1.0 + (v as f64 - 1.0) * (-1f64).powi(k as i32);
                assert!((total - trace).abs() < 1e-10, "v={v} k={k}");
            }
        }
    }

    #[test]
    fn feasibility_matches_enumeration() {
        for j in 2..=3 {
            for total in j as u32..=6 {
                for n in positive_compositions(total, j) {
                    let mut all = Vec::new();
                    for m in crate::combinatorics::weak_compositions(0, 0) {
                        let _ = m;
                    }
                    // brute force over the m box
                    let ranges: Vec<Vec<u32>> = n.iter().map(|&x| (1..=x).collect()).collect();
                    let mut idx = vec![0usize; j];
                    'outer: loop {
                        let m: Vec<u32> = idx.iter().zip(&ranges).map(|(&i, r)| r[i]).collect();
                        if let Ok(c) = OrbitClass::new(n.clone(), m) {
                            let nonempty = !enumerate_class(&c).unwrap().is_empty();
                            assert_eq!(nonempty, is_feasible(&c), "{c}");
                            all.push(c);
                        }
                        for p in 0..j {
                            if idx[p] + 1 < ranges[p].len() {
                                idx[p] += 1;
                                continue 'outer;
                            }
                            idx[p] = 0;
                        }
                        break;
                    }
                    assert!(!all.is_empty());
                }
            }
        }
    }
}
