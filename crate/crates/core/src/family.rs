//! Families of equal-size subsets of `[n]`: sparsity, l-extension, marks,
//! spheres, splits and the space-augmenting extension.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::binom::{binom_u64, exact_binom};
use crate::error::{Error, Limits, Result};
use crate::logval::{ln_big, LogValue};
use crate::subset::{k_subsets, Subset, MAX_N};

/// The universe `[n]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroundSet {
    pub n: u32,
}

impl GroundSet {
    pub fn new(n: u32) -> Result<Self> {
        if !(1..=MAX_N).contains(&n) {
            return Err(Error::pre(format!("ground size must be in 1..={MAX_N}, got {n}")));
        }
        Ok(GroundSet { n })
    }

    pub fn all(self) -> Subset {
        Subset::full(self.n)
    }
}

/// A family of `m`-subsets of `[n]`, sorted and free of duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SetFamily {
    ground: GroundSet,
    m: u32,
    members: Vec<Subset>,
}

/// On-disk shape of a family.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyFile {
    n: u32,
    m: u32,
    sets: Vec<Vec<u32>>,
}

impl SetFamily {
    /// Builds a family, dropping duplicate members.
    pub fn new(n: u32, m: u32, members: impl IntoIterator<Item = Subset>) -> Result<Self> {
        let ground = GroundSet::new(n)?;
        if m > n {
            return Err(Error::pre(format!("member size {m} exceeds n={n}")));
        }
        let all = ground.all();
        let mut v: Vec<Subset> = members.into_iter().collect();
        for s in &v {
            if s.len() != m || !s.is_subset_of(all) {
                return Err(Error::pre(format!("{s} is not an {m}-subset of [{n}]")));
            }
        }
        v.sort_unstable();
        v.dedup();
        Ok(SetFamily {
            ground,
            m,
            members: v,
        })
    }

    pub fn empty(n: u32, m: u32) -> Result<Self> {
        SetFamily::new(n, m, [])
    }

    /// All of `C([n], m)`.
    pub fn full(n: u32, m: u32, limits: &Limits) -> Result<Self> {
        GroundSet::new(n)?;
        limits.check("full family", binom_u64(n, m) as u128)?;
        SetFamily::new(n, m, k_subsets(Subset::full(n), m))
    }

    /// `size` distinct members drawn uniformly from `C([n], m)` with a
    /// ChaCha8 stream seeded by `seed`.
    pub fn random(n: u32, m: u32, size: usize, seed: u64, limits: &Limits) -> Result<Self> {
        GroundSet::new(n)?;
        let cap = binom_u64(n, m);
        limits.check("random family", cap as u128)?;
        if size as u64 > cap {
            return Err(Error::pre(format!("size {size} exceeds C({n},{m}) = {cap}")));
        }
        let all: Vec<Subset> = k_subsets(Subset::full(n), m).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let picks = rand::seq::index::sample(&mut rng, all.len(), size);
        SetFamily::new(n, m, picks.iter().map(|i| all[i]))
    }

    pub fn n(&self) -> u32 {
        self.ground.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn ground(&self) -> GroundSet {
        self.ground
    }

    pub fn members(&self) -> &[Subset] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, s: Subset) -> bool {
        self.members.binary_search(&s).is_ok()
    }

    /// `C(n, m)`, the size of the full family.
    pub fn capacity(&self) -> u64 {
        binom_u64(self.n(), self.m)
    }

    /// `κ(U) = ln C(n,m) − ln|U|`.
    pub fn sparsity(&self) -> Result<LogValue> {
        if self.is_empty() {
            return Err(Error::EmptyFamily);
        }
        Ok(kappa(
            &BigUint::from(self.capacity()),
            &BigUint::from(self.len()),
        ))
    }

    /// `−ln(1 − |U| / C(n,m))`.
    pub fn complement_sparsity(&self) -> Result<LogValue> {
        let cap = self.capacity();
        if self.len() as u64 == cap {
            return Err(Error::FullFamily);
        }
        Ok(kappa(
            &BigUint::from(cap),
            &BigUint::from(cap - self.len() as u64),
        ))
    }

    /// The members of `C([n], m)` not in the family.
    pub fn complement(&self, limits: &Limits) -> Result<SetFamily> {
        limits.check("complement", self.capacity() as u128)?;
        let rest = k_subsets(self.ground.all(), self.m).filter(|s| !self.contains(*s));
        SetFamily::new(self.n(), self.m, rest)
    }

    /// `Ext(U, l)`: every `l`-set containing a member.
    pub fn extend(&self, l: u32, limits: &Limits) -> Result<SetFamily> {
        if l > self.n() {
            return Err(Error::pre(format!("length {l} exceeds n={}", self.n())));
        }
        if l < self.m {
            return SetFamily::empty(self.n(), l);
        }
        let per = binom_u64(self.n() - self.m, l - self.m) as u128;
        let predicted = (self.len() as u128 * per).min(binom_u64(self.n(), l) as u128);
        limits.check("extension", predicted)?;
        let mut out = BTreeSet::new();
        for &s in &self.members {
            for extra in k_subsets(self.ground.all() - s, l - self.m) {
                out.insert(s | extra);
            }
        }
        SetFamily::new(self.n(), l, out)
    }

    /// Number of members below each `l`-superset, keyed by superset.
    fn cover_counts(&self, l: u32, limits: &Limits) -> Result<HashMap<Subset, u64>> {
        let per = binom_u64(self.n() - self.m, l - self.m) as u128;
        limits.check("marks", self.len() as u128 * per)?;
        let mut counts: HashMap<Subset, u64> = HashMap::new();
        for &t in &self.members {
            for extra in k_subsets(self.ground.all() - t, l - self.m) {
                *counts.entry(t | extra).or_default() += 1;
            }
        }
        Ok(counts)
    }

    /// Marks `(t, d)` and double marks `(t, t', d)` with `t ∪ t' ⊆ d`, `|d| = l`.
    pub fn mark_stats(&self, l: u32, limits: &Limits) -> Result<MarkStats> {
        if !(self.m <= l && l <= self.n()) {
            return Err(Error::pre(format!("need m <= l <= n, got m={}, l={l}", self.m)));
        }
        let kappa_u = self.sparsity()?;
        let counts = self.cover_counts(l, limits)?;
        let mut marks = BigUint::zero();
        let mut doubles = BigUint::zero();
        for &x in counts.values() {
            marks += x;
            doubles += BigUint::from(x) * x;
        }
        let cnl = exact_binom(self.n() as u64, l as i64);
        let clm = exact_binom(l as u64, self.m as i64);
        let kappa_m = kappa(&(&cnl * &clm), &marks);
        let kappa_d_total = kappa(&(&cnl * &clm * &clm), &doubles);
        Ok(MarkStats {
            mark_count: marks,
            double_mark_count: doubles,
            kappa_m,
            kappa_d_total,
            kappa_d_proper: LogValue(kappa_d_total.value() - kappa_u.value()),
        })
    }

    /// `κ(U) <= κ(D) <= 2κ(U) − κ(Ext(U, l))`, within `1e-9`.
    pub fn check_lemma1(&self, l: u32, limits: &Limits) -> Result<bool> {
        let ku = self.sparsity()?.value();
        let kd = self.mark_stats(l, limits)?.kappa_d_total.value();
        let ke = self.extend(l, limits)?.sparsity()?.value();
        Ok(ku <= kd + TOL && kd <= 2.0 * ku - ke + TOL)
    }

    /// Members `t'` with `|t' \ t| = j`.
    pub fn sphere_subfamily(&self, t: Subset, j: u32) -> Result<SetFamily> {
        if t.len() != self.m || j > self.m {
            return Err(Error::pre(format!("need |t| = m and j <= m, got {t}, j={j}")));
        }
        let members = self.members.iter().copied().filter(|s| (*s - t).len() == j);
        SetFamily::new(self.n(), self.m, members)
    }

    /// Sparsity of a sphere sub-family measured against the sphere size
    /// `C(n−m, j) C(m, m−j)`; `None` when the sub-family is empty.
    pub fn sphere_sparsity(&self, t: Subset, j: u32) -> Result<Option<LogValue>> {
        let sphere = self.sphere_subfamily(t, j)?;
        if sphere.is_empty() {
            return Ok(None);
        }
        let (n, m) = (self.n() as u64, self.m as i64);
        let size = exact_binom(n - m as u64, j as i64) * exact_binom(m as u64, m - j as i64);
        Ok(Some(kappa(&size, &BigUint::from(sphere.len()))))
    }

    /// The average sphere sparsity `κ_S`, from
    /// `Σ_{t,j} C(l−m, m−j) C(m, j) e^{−κ(S(t, m−j))} = |U| C(l, m) e^{−κ_S}`.
    pub fn kappa_s(&self, l: u32) -> Result<LogValue> {
        if !(self.m <= l && l <= self.n()) {
            return Err(Error::pre(format!("need m <= l <= n, got m={}, l={l}", self.m)));
        }
        if self.is_empty() {
            return Err(Error::EmptyFamily);
        }
        let (n, m, l) = (self.n() as i64, self.m as i64, l as i64);
        let mut radius_counts = vec![0u64; self.m as usize + 1];
        for &t in &self.members {
            for &s in &self.members {
                radius_counts[(s - t).len() as usize] += 1;
            }
        }
        // e^{-κ(S)} C(m, j) reduces to |S| / C(n−m, m−j).
        let mut sum = BigRational::zero();
        for (radius, &count) in radius_counts.iter().enumerate() {
            let i = radius as i64;
            let sphere = exact_binom((n - m) as u64, i);
            if count == 0 || sphere.is_zero() {
                continue;
            }
            let weight = exact_binom((l - m) as u64, i);
            sum += BigRational::new((BigUint::from(count) * weight).into(), sphere.into());
        }
        let lhs = ln_big(&sum.numer().to_biguint().unwrap_or_default())
            - ln_big(&sum.denom().to_biguint().expect("positive"));
        let rhs = ln_big(&(BigUint::from(self.len()) * exact_binom(l as u64, m)));
        Ok(LogValue(rhs - lhs))
    }

    pub fn check_kappa_s_equals_kappa_d(&self, l: u32, limits: &Limits) -> Result<bool> {
        let ks = self.kappa_s(l)?.value();
        let kd = self.mark_stats(l, limits)?.kappa_d_proper.value();
        Ok((ks - kd).abs() <= TOL)
    }

    /// Space augmentation: adjoin `x` fresh points `n+1..n+x` and
    /// return every `(m+x)`-subset of `[n+x]` containing a member. The result
    /// is never sparser than `self`, and its complement never denser.
    pub fn augment_space(&self, x: u32, limits: &Limits) -> Result<SetFamily> {
        let n2 = self.n() + x;
        GroundSet::new(n2)?;
        let lifted = SetFamily {
            ground: GroundSet { n: n2 },
            m: self.m,
            members: self.members.clone(),
        };
        lifted.extend(self.m + x, limits)
    }

    /// Every ordered split of every member into parts of sizes `cards`.
    pub fn all_splits(&self, cards: &[u32], limits: &Limits) -> Result<Vec<Split>> {
        if cards.iter().sum::<u32>() != self.m || cards.contains(&0) {
            return Err(Error::pre(format!(
                "cards {cards:?} must be positive and sum to m={}",
                self.m
            )));
        }
        limits.check("splits", self.len() as u128 * multinomial(self.m, cards) as u128)?;
        let mut out = Vec::new();
        for &s in &self.members {
            split_rec(s, cards, &mut Vec::new(), &mut out);
        }
        Ok(out)
    }
}

const TOL: f64 = 1e-9;

/// `ln(total) − ln(count)`.
pub fn kappa(total: &BigUint, count: &BigUint) -> LogValue {
    LogValue::ratio(total, count)
}

/// `m! / Π c_j!`.
pub fn multinomial(m: u32, cards: &[u32]) -> u64 {
    let mut left = m;
    let mut acc = 1u64;
    for &c in cards {
        acc *= binom_u64(left, c);
        left -= c;
    }
    acc
}

/// `N = Π_j C(n − Σ_{i<j} c_i, c_j)`, the number of split-shaped tuples over `[n]`.
pub fn split_capacity(n: u32, cards: &[u32]) -> BigUint {
    let mut left = n as u64;
    let mut acc = BigUint::one();
    for &c in cards {
        acc *= exact_binom(left, c as i64);
        left = left.saturating_sub(c as u64);
    }
    acc
}

/// Sparsity of a collection of `count` splits measured against [`split_capacity`].
pub fn split_sparsity(n: u32, cards: &[u32], count: usize) -> Result<LogValue> {
    if count == 0 {
        return Err(Error::EmptyFamily);
    }
    Ok(kappa(&split_capacity(n, cards), &BigUint::from(count)))
}

fn split_rec(rest: Subset, cards: &[u32], parts: &mut Vec<Subset>, out: &mut Vec<Split>) {
    match cards.split_first() {
        None => out.push(Split {
            parts: parts.clone(),
        }),
        Some((&c, tail)) => {
            for part in k_subsets(rest, c) {
                parts.push(part);
                split_rec(rest - part, tail, parts, out);
                parts.pop();
            }
        }
    }
}

/// An ordered tuple of pairwise-disjoint parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Split {
    pub parts: Vec<Subset>,
}

impl Split {
    pub fn union(&self) -> Subset {
        self.parts.iter().fold(Subset::EMPTY, |a, &p| a | p)
    }

    pub fn is_disjoint(&self) -> bool {
        self.union().len() == self.parts.iter().map(|p| p.len()).sum::<u32>()
    }
}

/// Counts of marks and double marks with their sparsities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkStats {
    #[serde(with = "crate::logval::big")]
    pub mark_count: BigUint,
    #[serde(with = "crate::logval::big")]
    pub double_mark_count: BigUint,
    pub kappa_m: LogValue,
    pub kappa_d_total: LogValue,
    pub kappa_d_proper: LogValue,
}

impl SetFamily {
    /// Reads `{"n": .., "m": .., "sets": [[..], ..]}`, rejecting duplicate
    /// members, wrong cardinalities and out-of-range elements.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: FamilyFile =
            serde_json::from_str(text).map_err(|e| Error::parse(Some(e.line()), e.to_string()))?;
        let ground = GroundSet::new(file.n).map_err(|e| Error::parse(None, e.to_string()))?;
        if file.m > file.n {
            return Err(Error::parse(None, format!("m={} exceeds n={}", file.m, file.n)));
        }
        let mut seen = BTreeSet::new();
        for (i, set) in file.sets.iter().enumerate() {
            let mut s = Subset::EMPTY;
            for &x in set {
                if !(1..=ground.n).contains(&x) {
                    return Err(Error::parse(None, format!("set {i}: element {x} outside [{}]", ground.n)));
                }
                if s.contains(x) {
                    return Err(Error::parse(None, format!("set {i}: repeated element {x}")));
                }
                s = s.with(x);
            }
            if s.len() != file.m {
                return Err(Error::parse(
                    None,
                    format!("set {i} has {} elements, expected {}", s.len(), file.m),
                ));
            }
            if !seen.insert(s) {
                return Err(Error::parse(None, format!("duplicate set {s}")));
            }
        }
        SetFamily::new(file.n, file.m, seen)
    }

    /// Canonical form: members in lexicographic order, elements ascending.
    pub fn to_json(&self) -> String {
        let file = FamilyFile {
            n: self.n(),
            m: self.m,
            sets: self.members.iter().map(|s| s.to_vec()).collect(),
        };
        serde_json::to_string(&file).expect("serializable")
    }
}
