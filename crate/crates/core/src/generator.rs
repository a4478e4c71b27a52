//! Extension generators: greedy maximal `g` with small restricted sparsity,
//! length boosting, and validity accounting.

use num_bigint::BigUint;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::binom::binom_u64;
use crate::error::{Error, Limits, Result};
use crate::family::{kappa, SetFamily};
use crate::logval::LogValue;
use crate::subset::{k_subsets, Subset};

/// Identifier of the sampling PRNG, recorded in reports.
pub const PRNG: &str = "chacha8";

const TOL: f64 = 1e-9;

/// `Û_g` together with the map back to the original labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Restriction {
    /// `{s \ g : s ⊇ g}` over `[n − |g|]`.
    pub family: SetFamily,
    /// The elements of `[n] \ g`; new label `i` stands for `kept`'s `i`-th element.
    pub kept: Subset,
}

impl Restriction {
    pub fn original(&self, s: Subset) -> Subset {
        s.expand(self.kept)
    }
}

/// `Û_g = {s \ g : s ∈ U, s ⊇ g}` relabeled onto `[n] \ g`.
pub fn restrict(u: &SetFamily, g: Subset) -> Result<Restriction> {
    if g.len() > u.m() || !g.is_subset_of(u.ground().all()) {
        return Err(Error::pre(format!("{g} must be a subset of [n] with |g| <= m")));
    }
    let kept = u.ground().all() - g;
    let members = u
        .members()
        .iter()
        .filter(|s| g.is_subset_of(**s))
        .map(|s| (*s - g).compress(kept));
    let n = u.n() - g.len();
    // A ground set must be nonempty; g = [n] only happens when m = n.
    let family = SetFamily::new(n.max(1), u.m() - g.len(), members)?;
    Ok(Restriction { family, kept })
}

/// `|U_g|`: members containing `g`.
fn restricted_count(u: &SetFamily, g: Subset) -> usize {
    u.members().iter().filter(|s| g.is_subset_of(**s)).count()
}

/// `κ(Û_g)`, or `None` when `Û_g` is empty.
fn restricted_sparsity(u: &SetFamily, g: Subset) -> Option<LogValue> {
    let count = restricted_count(u, g);
    if count == 0 || g.len() > u.m() {
        return None;
    }
    let total = binom_u64(u.n() - g.len(), u.m() - g.len());
    Some(kappa(&BigUint::from(total), &BigUint::from(count)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneratorResult {
    pub g: Subset,
    /// Per-element sparsity allowance, `ln(l0 / m²)` unless overridden.
    pub r: f64,
    pub kappa_ug_hat: LogValue,
    /// `κ(U) / r`.
    pub size_bound: f64,
    /// No single-element extension (within the size cap, if any) is admissible.
    pub maximal: bool,
}

impl GeneratorResult {
    /// `κ(Û_g) <= κ(U) − r|g|` and `|g| <= κ(U)/r`, each within `1e-9`.
    pub fn satisfies_invariants(&self, kappa_u: f64) -> bool {
        let size = self.g.len() as f64;
        self.kappa_ug_hat.value() <= kappa_u - self.r * size + TOL && size <= self.size_bound + TOL
    }
}

fn admissible(u: &SetFamily, g: Subset, r: f64, kappa_u: f64) -> Option<LogValue> {
    restricted_sparsity(u, g).filter(|k| k.value() <= kappa_u - r * g.len() as f64 + TOL)
}

/// Whether no `g ∪ {x}` with `|g ∪ {x}| <= cap` is admissible.
pub fn is_maximal(u: &SetFamily, g: Subset, r: f64, cap: Option<u32>) -> Result<bool> {
    if cap.is_some_and(|c| g.len() >= c) {
        return Ok(true);
    }
    let kappa_u = u.sparsity()?.value();
    Ok((u.ground().all() - g)
        .iter()
        .all(|x| admissible(u, g.with(x), r, kappa_u).is_none()))
}

/// Greedy construction with an explicit `r`: repeatedly adds the element
/// maximizing `|Û_{g∪{x}}|` among admissible ones, smallest `x` on ties.
pub fn greedy_generator(u: &SetFamily, r: f64, cap: Option<u32>) -> Result<GeneratorResult> {
    if !(r > 0.0) {
        return Err(Error::pre(format!("r must be positive, got {r}")));
    }
    let kappa_u = u.sparsity()?.value();
    let mut g = Subset::EMPTY;
    loop {
        if cap.is_some_and(|c| g.len() >= c) {
            break;
        }
        let best = (u.ground().all() - g)
            .iter()
            .filter(|&x| admissible(u, g.with(x), r, kappa_u).is_some())
            .map(|x| (restricted_count(u, g.with(x)), x))
            .fold(None, |best: Option<(usize, u32)>, (c, x)| match best {
                Some((bc, _)) if bc >= c => best,
                _ => Some((c, x)),
            });
        match best {
            Some((_, x)) => g = g.with(x),
            None => break,
        }
    }
    Ok(GeneratorResult {
        g,
        r,
        kappa_ug_hat: restricted_sparsity(u, g).expect("g always keeps Û_g nonempty"),
        size_bound: kappa_u / r,
        maximal: is_maximal(u, g, r, cap)?,
    })
}

/// Greedy maximal generator with `r = ln(l0 / m²)`.
pub fn phase1_find_generator(u: &SetFamily, l0: u32) -> Result<GeneratorResult> {
    let m = u.m();
    if !(m * m < l0 && l0 <= u.n()) {
        return Err(Error::pre(format!(
            "need m^2 < l0 <= n, got m={m}, l0={l0}, n={}",
            u.n()
        )));
    }
    greedy_generator(u, (l0 as f64 / (m * m) as f64).ln(), None)
}

/// How validity is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum Mode {
    Exact,
    Sampled { budget: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityReport {
    pub l: u32,
    #[serde(with = "crate::logval::big")]
    pub valid_count: BigUint,
    #[serde(with = "crate::logval::big")]
    pub total_count: BigUint,
    pub complement_sparsity: LogValue,
    pub exact: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prng: Option<&'static str>,
    /// 99% Wilson interval for the valid fraction, when sampled.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci99: Option<[f64; 2]>,
}

impl ValidityReport {
    pub fn valid_fraction(&self) -> f64 {
        use num_traits::ToPrimitive;
        self.valid_count.to_f64().unwrap_or(f64::NAN) / self.total_count.to_f64().unwrap_or(f64::NAN)
    }
}

/// Counts `y ⊆ space` with `|y| = len` and `y ⊇ p` for some `p ∈ targets`.
fn count_valid(
    space: Subset,
    len: u32,
    targets: &[Subset],
    l_report: u32,
    mode: Mode,
    limits: &Limits,
) -> Result<ValidityReport> {
    let size = space.len();
    let total = binom_u64(size, len);
    let is_valid = |y: Subset| targets.iter().any(|p| p.is_subset_of(y));
    match mode {
        Mode::Exact => {
            limits.check("validity enumeration", total as u128)?;
            let valid = k_subsets(space, len).filter(|&y| is_valid(y)).count() as u64;
            Ok(ValidityReport {
                l: l_report,
                valid_count: valid.into(),
                total_count: total.into(),
                complement_sparsity: complement(total, valid),
                exact: true,
                sample_size: None,
                seed: None,
                prng: None,
                ci99: None,
            })
        }
        Mode::Sampled { budget, seed } => {
            if budget == 0 {
                return Err(Error::pre("sample budget must be positive"));
            }
            let elems = space.to_vec();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut valid = 0u64;
            for _ in 0..budget {
                let y = sample(&mut rng, size as usize, len as usize)
                    .into_iter()
                    .fold(Subset::EMPTY, |y, i| y.with(elems[i]));
                valid += is_valid(y) as u64;
            }
            Ok(ValidityReport {
                l: l_report,
                valid_count: valid.into(),
                total_count: budget.into(),
                complement_sparsity: complement(budget, valid),
                exact: false,
                sample_size: Some(budget),
                seed: Some(seed),
                prng: Some(PRNG),
                ci99: Some(wilson99(valid, budget)),
            })
        }
    }
}

fn complement(total: u64, valid: u64) -> LogValue {
    if valid >= total {
        LogValue::INFINITY
    } else {
        kappa(&BigUint::from(total), &BigUint::from(total - valid))
    }
}

/// Two-sided 99% Wilson score interval for a binomial proportion.
pub fn wilson99(successes: u64, trials: u64) -> [f64; 2] {
    const Z: f64 = 2.575_829_303_548_901;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + Z * Z / n;
    let centre = (p + Z * Z / (2.0 * n)) / denom;
    let half = Z * (p * (1.0 - p) / n + Z * Z / (4.0 * n * n)).sqrt() / denom;
    [(centre - half).max(0.0), (centre + half).min(1.0)]
}

/// Validity of the `(l − |g|)`-subsets `y` of `[n] \ g`: `y` is valid iff
/// `g ∪ y` contains a member of `U` that contains `g`.
pub fn validity_report(
    u: &SetFamily,
    g: Subset,
    l: u32,
    mode: Mode,
    limits: &Limits,
) -> Result<ValidityReport> {
    if !(g.len() <= u.m() && u.m() <= l && l <= u.n()) || !g.is_subset_of(u.ground().all()) {
        return Err(Error::pre(format!(
            "need g ⊆ [n], |g| <= m <= l <= n; got |g|={}, m={}, l={l}, n={}",
            g.len(),
            u.m(),
            u.n()
        )));
    }
    let targets = petals(u, g);
    count_valid(u.ground().all() - g, l - g.len(), &targets, l, mode, limits)
}

/// `{s \ g : s ∈ U, s ⊇ g}` in original labels.
pub fn petals(u: &SetFamily, g: Subset) -> Vec<Subset> {
    u.members()
        .iter()
        .filter(|s| g.is_subset_of(**s))
        .map(|s| *s - g)
        .collect()
}

/// Validity at length `|g| + i(l0 − |g|)`.
pub fn phase2_boost(
    u: &SetFamily,
    g: Subset,
    l0: u32,
    i: u32,
    limits: &Limits,
) -> Result<ValidityReport> {
    if i == 0 || l0 < g.len() {
        return Err(Error::pre(format!("need i >= 1 and l0 >= |g|, got i={i}, l0={l0}")));
    }
    let length = g.len() as u64 + i as u64 * (l0 - g.len()) as u64;
    if length > u.n() as u64 {
        return Err(Error::LengthOverflow { length, n: u.n() });
    }
    validity_report(u, g, length as u32, Mode::Exact, limits)
}

/// Boosted reports for `i = 1..=i_max` with the monotonicity audit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Phase2Audit {
    pub reports: Vec<ValidityReport>,
    pub monotone: bool,
}

pub fn phase2_sequence(
    u: &SetFamily,
    g: Subset,
    l0: u32,
    i_max: u32,
    limits: &Limits,
) -> Result<Phase2Audit> {
    let reports = (1..=i_max)
        .map(|i| phase2_boost(u, g, l0, i, limits))
        .collect::<Result<Vec<_>>>()?;
    let monotone = reports
        .windows(2)
        .all(|w| w[0].complement_sparsity <= w[1].complement_sparsity);
    Ok(Phase2Audit { reports, monotone })
}

/// Knobs for [`find_generator`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneratorConfig {
    /// The constant in `l0 = ε′ l / λ`.
    pub eps_prime: f64,
    /// Use this `r` instead of `ln(l0 / m²)`.
    pub r_override: Option<f64>,
    /// Largest admissible `|g|`.
    pub max_size: Option<u32>,
    pub mode: Mode,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            eps_prime: 0.25,
            r_override: None,
            max_size: None,
            mode: Mode::Exact,
        }
    }
}

/// The phase-one length used by [`find_generator`]:
/// `max(min(l, ⌊ε′ l / λ⌋), m² + 1)`.
pub fn phase1_length(m: u32, l: u32, lambda: f64, eps_prime: f64) -> u32 {
    let configured = (eps_prime * l as f64 / lambda).floor().max(0.0) as u32;
    configured.min(l).max(m * m + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorReport {
    pub g: Subset,
    pub l: u32,
    pub lambda_target: f64,
    #[serde(with = "crate::logval::big")]
    pub valid_count: BigUint,
    #[serde(with = "crate::logval::big")]
    pub total_count: BigUint,
    pub complement_sparsity: LogValue,
    pub mode: &'static str,
    pub seed: Option<u64>,
    pub success: bool,
    pub l0: u32,
    pub eps_prime: f64,
    pub kappa_u: LogValue,
    pub generator: GeneratorResult,
    pub validity: ValidityReport,
}

/// Chooses `g` as [`find_generator`] does, without the validity count.
pub fn select_generator(
    u: &SetFamily,
    l: u32,
    lambda: f64,
    cfg: &GeneratorConfig,
) -> Result<(GeneratorResult, u32)> {
    if u.m() == 0 {
        return Err(Error::pre("member size must be positive"));
    }
    if !(lambda > 0.0) {
        return Err(Error::pre(format!("lambda must be positive, got {lambda}")));
    }
    let m = u.m();
    let l0 = phase1_length(m, l, lambda, cfg.eps_prime);
    let r = cfg
        .r_override
        .unwrap_or_else(|| (l0 as f64 / (m * m) as f64).ln());
    Ok((greedy_generator(u, r, cfg.max_size)?, l0))
}

/// Phase one followed by a validity count at full length `l` over `[n]`:
/// an `l`-set `y` (which may meet `g`) is valid iff some member `s` has
/// `g ⊆ s ⊆ g ∪ y`.
pub fn find_generator(
    u: &SetFamily,
    l: u32,
    lambda: f64,
    cfg: &GeneratorConfig,
    limits: &Limits,
) -> Result<GeneratorReport> {
    if !(u.m() <= l && l <= u.n()) {
        return Err(Error::pre(format!("need m <= l <= n, got m={}, l={l}", u.m())));
    }
    let (generator, l0) = select_generator(u, l, lambda, cfg)?;
    let g = generator.g;
    let targets = petals(u, g);
    let validity = count_valid(u.ground().all(), l, &targets, l, cfg.mode, limits)?;
    Ok(GeneratorReport {
        g,
        l,
        lambda_target: lambda,
        valid_count: validity.valid_count.clone(),
        total_count: validity.total_count.clone(),
        complement_sparsity: validity.complement_sparsity,
        mode: if validity.exact { "exact" } else { "sampled" },
        seed: validity.seed,
        success: validity.complement_sparsity.value() >= lambda,
        l0,
        eps_prime: cfg.eps_prime,
        kappa_u: u.sparsity()?,
        generator,
        validity,
    })
}

/// The lexicographically least member `s` with `g ⊆ s ⊆ g ∪ y`.
pub fn witness(u: &SetFamily, g: Subset, y: Subset) -> Option<Subset> {
    let hull = g | y;
    u.members()
        .iter()
        .copied()
        .find(|s| g.is_subset_of(*s) && s.is_subset_of(hull))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_point_estimate() {
        let [lo, hi] = wilson99(30, 100);
        assert!(lo < 0.3 && 0.3 < hi);
        let [lo, hi] = wilson99(100, 100);
        assert!(lo > 0.9 && hi == 1.0);
    }

    #[test]
    fn phase1_length_respects_floor() {
        assert_eq!(phase1_length(2, 8, 1.0, 0.25), 5);
        assert_eq!(phase1_length(2, 100, 1.0, 0.25), 25);
        assert_eq!(phase1_length(3, 4, 1.0, 0.25), 10);
    }
}
