//! Sunflower search: the classic recursive procedure and the small-core
//! construction through an extension generator.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Limits, Result};
use crate::family::SetFamily;
use crate::generator::{find_generator, petals, witness, GeneratorConfig, GeneratorReport};
use crate::subset::Subset;

/// Members `core ∪ petals[j]` with pairwise-disjoint nonempty petals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Sunflower {
    pub core: Subset,
    pub petals: Vec<Subset>,
    #[serde(skip)]
    pub members: Vec<Subset>,
}

impl Sunflower {
    pub fn from_members(core: Subset, members: Vec<Subset>) -> Self {
        Sunflower {
            core,
            petals: members.iter().map(|s| *s - core).collect(),
            members,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }
}

/// All structural invariants, plus membership of every member in `u`.
pub fn verify_sunflower(f: &Sunflower, u: &SetFamily) -> bool {
    if f.petals.len() < 2 || f.petals.len() != f.members.len() {
        return false;
    }
    let mut seen = Subset::EMPTY;
    for (p, s) in f.petals.iter().zip(&f.members) {
        if p.is_empty() || !p.is_disjoint(f.core) || !p.is_disjoint(seen) {
            return false;
        }
        if *s != (f.core | *p) || s.len() != u.m() || !u.contains(*s) {
            return false;
        }
        seen = seen | *p;
    }
    true
}

/// Search budget for the backtracking steps.
pub const DEFAULT_NODE_BUDGET: u64 = 100_000;

/// Finds `delta` pairwise-disjoint sets among `sets` (in order), depth-first.
fn disjoint_pack(sets: &[Subset], delta: usize, budget: &mut u64) -> Option<Vec<Subset>> {
    fn go(
        sets: &[Subset],
        start: usize,
        used: Subset,
        delta: usize,
        picked: &mut Vec<Subset>,
        budget: &mut u64,
    ) -> bool {
        if picked.len() == delta {
            return true;
        }
        if sets.len() - start < delta - picked.len() {
            return false;
        }
        for i in start..sets.len() {
            if *budget == 0 {
                return false;
            }
            *budget -= 1;
            if sets[i].is_disjoint(used) {
                picked.push(sets[i]);
                if go(sets, i + 1, used | sets[i], delta, picked, budget) {
                    return true;
                }
                picked.pop();
            }
        }
        false
    }
    let mut picked = Vec::new();
    go(sets, 0, Subset::EMPTY, delta, &mut picked, budget).then_some(picked)
}

/// Recursive step: returns (core, members) of a sunflower within `members`.
fn er_rec(members: &[Subset], delta: usize) -> Option<(Subset, Vec<Subset>)> {
    if members.len() < delta {
        return None;
    }
    let mut used = Subset::EMPTY;
    let mut disjoint = Vec::new();
    for &s in members {
        if s.is_disjoint(used) {
            used = used | s;
            disjoint.push(s);
        }
    }
    if disjoint.len() >= delta && !disjoint.iter().any(|s| s.is_empty()) {
        disjoint.truncate(delta);
        return Some((Subset::EMPTY, disjoint));
    }
    // Every member meets `used`, so some element of it is popular.
    let x = used
        .iter()
        .map(|x| (members.iter().filter(|s| s.contains(x)).count(), x))
        .fold((0, 0), |best, cur| if cur.0 > best.0 { cur } else { best })
        .1;
    if x == 0 {
        return None;
    }
    let mut link: Vec<Subset> = members
        .iter()
        .filter(|s| s.contains(x))
        .map(|s| s.without(x))
        .collect();
    link.sort_unstable();
    let (core, found) = er_rec(&link, delta)?;
    Some((core.with(x), found.into_iter().map(|s| s.with(x)).collect()))
}

/// Exhaustive search over candidate cores for small ground sets.
fn exhaustive(u: &SetFamily, delta: usize) -> Option<Sunflower> {
    let mut cores = BTreeSet::new();
    for &s in u.members() {
        let elems = s.to_vec();
        for mask in 0u32..(1 << elems.len()) {
            if mask.count_ones() < u.m() {
                let c = elems
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .fold(Subset::EMPTY, |c, (_, &x)| c.with(x));
                cores.insert(c);
            }
        }
    }
    let mut budget = DEFAULT_NODE_BUDGET * 10;
    for core in cores {
        let link: Vec<Subset> = petals(u, core);
        if let Some(found) = disjoint_pack(&link, delta, &mut budget) {
            let members = found.into_iter().map(|p| p | core).collect();
            return Some(Sunflower::from_members(core, members));
        }
        if budget == 0 {
            break;
        }
    }
    None
}

/// Ground sizes for which a failed greedy search falls back to exhaustion.
pub const EXHAUSTIVE_MAX_N: u32 = 12;

/// Recursive disjoint-or-link procedure, with an exhaustive fallback for
/// `n <= 12`. `Ok(None)` is the structured "not found".
pub fn find_sunflower_er(u: &SetFamily, delta: u32) -> Result<Option<Sunflower>> {
    if delta < 2 {
        return Err(Error::pre(format!("delta must be at least 2, got {delta}")));
    }
    let delta = delta as usize;
    if u.len() < delta || u.m() == 0 {
        return Ok(None);
    }
    if let Some((core, members)) = er_rec(u.members(), delta) {
        return Ok(Some(Sunflower::from_members(core, members)));
    }
    if u.n() <= EXHAUSTIVE_MAX_N {
        return Ok(exhaustive(u, delta));
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallCoreOutcome {
    pub generator: GeneratorReport,
    pub sunflower: Option<Sunflower>,
    /// The pairwise-disjoint valid sets the petals were drawn from.
    pub valid_sets: Vec<Subset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Core `g` from an extension generator with `|g| < m`, then `delta`
/// pairwise-disjoint valid `(l − |g|)`-sets `y_j ⊆ [n] \ g`, each yielding a
/// member `s_j` with `g ⊆ s_j ⊆ g ∪ y_j`.
pub fn find_sunflower_small_core(
    u: &SetFamily,
    delta: u32,
    l: u32,
    lambda: f64,
    cfg: &GeneratorConfig,
    node_budget: u64,
    limits: &Limits,
) -> Result<SmallCoreOutcome> {
    if delta < 2 {
        return Err(Error::pre(format!("delta must be at least 2, got {delta}")));
    }
    if u.m() == 0 {
        return Err(Error::pre("member size must be positive"));
    }
    // A core must leave every petal nonempty.
    let cfg = GeneratorConfig {
        max_size: Some(cfg.max_size.unwrap_or(u.m() - 1).min(u.m() - 1)),
        ..*cfg
    };
    let generator = find_generator(u, l, lambda, &cfg, limits)?;
    let g = generator.g;
    let not_found = |generator, reason: String| SmallCoreOutcome {
        generator,
        sunflower: None,
        valid_sets: vec![],
        reason: Some(reason),
    };
    let span = l - g.len();
    if delta as u64 * span as u64 > (u.n() - g.len()) as u64 {
        return Ok(not_found(
            generator,
            format!("{delta} disjoint sets of size {span} do not fit in [n] \\ g"),
        ));
    }
    let mut budget = node_budget;
    let Some(chosen) = disjoint_pack(&petals(u, g), delta as usize, &mut budget) else {
        return Ok(not_found(
            generator,
            format!("fewer than {delta} disjoint valid sets found"),
        ));
    };
    // Pad each petal to a valid set of the full length with unused elements.
    let mut free = (u.ground().all() - g - chosen.iter().fold(Subset::EMPTY, |a, &p| a | p)).iter();
    let valid_sets: Vec<Subset> = chosen
        .iter()
        .map(|&p| {
            let mut y = p;
            while y.len() < span {
                y = y.with(free.next().expect("room checked above"));
            }
            y
        })
        .collect();
    let mut members = Vec::new();
    for &y in &valid_sets {
        let s = witness(u, g, y).expect("each padded set contains a petal");
        if !(s - g).is_empty() {
            members.push(s);
        }
    }
    debug_assert!(members.windows(2).all(|w| (w[0] - g).is_disjoint(w[1] - g)));
    if members.len() < delta as usize {
        return Ok(not_found(generator, "too few nonempty petals".into()));
    }
    let sunflower = Sunflower::from_members(g, members);
    Ok(SmallCoreOutcome {
        generator,
        sunflower: Some(sunflower),
        valid_sets,
        reason: None,
    })
}
