//! The shift pipeline for monotone circuits: clique generators with error
//! cliques, quadruples, valid splits, blocked edges, local shifts and the
//! audits that certify a returned term.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::ToPrimitive;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::binom::{binom_u64, exact_binom};
use crate::circuit::{
    generated_cliques, has_clique, max_clique, verify_counterexample, Circuit, DnfTable, EdgeSet, Node, Term,
};
use crate::error::{Error, Limits, Result};
use crate::family::SetFamily;
use crate::generator::{select_generator, GeneratorConfig, Mode};
use crate::logval::{deserialize_real, serialize_real};
use crate::subset::{k_subsets, Subset};

/// Ordered partitions are enumerated outright when there are at most this many.
pub const SPLIT_ENUM_MAX: u64 = 100_000;

/// Generator knobs used inside the clique-generator loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorSettings {
    /// Target complement sparsity handed to the generator search.
    pub lambda: f64,
    pub eps_prime: f64,
    /// Per-element sparsity allowance; derived from the phase-one length when absent.
    pub r: Option<f64>,
    /// Largest generator size.
    pub max_size: Option<u32>,
}

impl Default for GeneratorSettings {
    fn default() -> Self {
        GeneratorSettings {
            lambda: 1.0,
            eps_prime: 0.25,
            r: None,
            max_size: None,
        }
    }
}

fn default_budget() -> u64 {
    10_000
}

fn default_split_count() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftConfig {
    pub n: u32,
    /// Clique size.
    pub k: u32,
    /// Number of split blocks.
    pub q: u32,
    /// Block size, `n / q`.
    pub l: u32,
    /// Edges per blocked set `z_j`.
    pub z_block_size: u32,
    /// Removing `z_j` must leave no clique of this size inside block `j`.
    pub r_block: u32,
    /// Clique generation stops once fewer than `C(n,k)·e^{-lambda_c}`
    /// cliques remain; may be `"inf"` or `"-inf"`.
    #[serde(serialize_with = "serialize_real", deserialize_with = "deserialize_real")]
    pub lambda_c: f64,
    /// Blocked-set candidates per block: exhaustive up to this many, else sampled.
    #[serde(default = "default_budget")]
    pub candidate_budget: u64,
    /// Valid splits tried before giving up.
    #[serde(default = "default_split_count")]
    pub split_count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub generator: GeneratorSettings,
}

impl ShiftConfig {
    /// Asymptotic presets evaluated at finite `n`: `k ≈ n^{1/4}`,
    /// `q ≈ n^{5ε}` rounded down to a divisor of `n`, `|z_j| ≈ n^{11/6}`
    /// capped at `C(l,2)`, `r_block ≈ n^{1/5}` and `lambda_c = n^ε`.
    pub fn preset(n: u32, epsilon: f64) -> ShiftConfig {
        let nf = n as f64;
        let k = (nf.powf(0.25).ceil() as u32).clamp(2, n.max(2));
        let target_q = nf.powf(5.0 * epsilon).floor().max(1.0) as u32;
        let q = (1..=target_q.min(n)).rev().find(|d| n % d == 0).unwrap_or(1);
        let l = n / q;
        let z_block_size = (nf.powf(11.0 / 6.0).round() as u64).min(binom_u64(l, 2)) as u32;
        ShiftConfig {
            n,
            k,
            q,
            l,
            z_block_size,
            r_block: (nf.powf(0.2).round() as u32).max(2),
            lambda_c: nf.powf(epsilon),
            candidate_budget: default_budget(),
            split_count: default_split_count(),
            seed: 0,
            generator: GeneratorSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::pre(msg));
        if self.n < 2 || self.n > crate::circuit::MAX_VERTICES {
            return fail(format!("n={} out of range", self.n));
        }
        if !(2..=self.n).contains(&self.k) {
            return fail(format!("need 2 <= k <= n, got k={}", self.k));
        }
        if self.q == 0 || self.n % self.q != 0 || self.l != self.n / self.q {
            return fail(format!("need q | n and l = n/q, got n={} q={} l={}", self.n, self.q, self.l));
        }
        if self.r_block < 2 {
            return fail("r_block must be at least 2".into());
        }
        if self.z_block_size as u64 > binom_u64(self.l, 2) {
            return fail(format!("z_block_size exceeds C({},2)", self.l));
        }
        if self.lambda_c.is_nan() {
            return fail("lambda_c must be a number".into());
        }
        if !(self.generator.lambda > 0.0) {
            return fail("generator.lambda must be positive".into());
        }
        Ok(())
    }

    /// `(r_block − 1)·q < k`: a term avoiding `z` then has no `k`-clique.
    pub fn clique_bound_applies(&self) -> bool {
        (self.r_block.saturating_sub(1) as u64) * (self.q as u64) < self.k as u64
    }

    pub fn from_json(text: &str) -> Result<ShiftConfig> {
        let cfg: ShiftConfig =
            serde_json::from_str(text).map_err(|e| Error::parse(Some(e.line()), e.to_string()))?;
        cfg.validate().map_err(|e| Error::parse(None, e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    /// Smallest clique count that keeps the generator loop running.
    pub fn clique_threshold(&self) -> f64 {
        binom_u64(self.n, self.k) as f64 * (-self.lambda_c).exp()
    }
}

/// Generators and error cliques found at one node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeGenInfo {
    /// Identifier of the node in the circuit text.
    pub node: u32,
    pub generators: Vec<Subset>,
    pub error_cliques: Vec<Subset>,
    /// Every `k`-clique generated at the node, sorted.
    #[serde(skip)]
    pub generated: Vec<Subset>,
}

impl NodeGenInfo {
    pub fn is_error(&self, c: Subset) -> bool {
        self.error_cliques.binary_search(&c).is_ok()
    }

    pub fn is_generated(&self, c: Subset) -> bool {
        self.generated.binary_search(&c).is_ok()
    }

    pub fn non_error(&self) -> impl Iterator<Item = Subset> + '_ {
        self.generated.iter().copied().filter(|&c| !self.is_error(c))
    }

    pub fn has_generator(&self, g: Subset) -> bool {
        self.generators.contains(&g)
    }
}

/// Runs the generator loop at every node, children first. Leaves get the
/// edge endpoints as their only generator and no error cliques.
pub fn clique_generators(c: &Circuit, cfg: &ShiftConfig, limits: &Limits) -> Result<Vec<NodeGenInfo>> {
    if !c.is_monotone() {
        return Err(Error::pre("circuit must be monotone"));
    }
    let generated = generated_cliques(c, cfg.k, limits)?;
    let threshold = cfg.clique_threshold();
    let gen_cfg = GeneratorConfig {
        eps_prime: cfg.generator.eps_prime,
        r_override: cfg.generator.r,
        max_size: cfg.generator.max_size,
        mode: Mode::Exact,
    };
    let mut out: Vec<NodeGenInfo> = Vec::with_capacity(c.len());
    for (i, node) in c.nodes().iter().enumerate() {
        let gen_here = generated[i].clone();
        let mut info = NodeGenInfo {
            node: c.id(i),
            generators: Vec::new(),
            error_cliques: Vec::new(),
            generated: gen_here.clone(),
        };
        match *node {
            Node::Leaf(lit) => {
                if !gen_here.is_empty() {
                    info.generators.push(lit.edge.vertices());
                }
            }
            Node::And(a, b) | Node::Or(a, b) => {
                let inherited: BTreeSet<Subset> = out[a]
                    .error_cliques
                    .iter()
                    .chain(&out[b].error_cliques)
                    .copied()
                    .collect();
                let mut remaining: Vec<Subset> =
                    gen_here.iter().copied().filter(|s| !inherited.contains(s)).collect();
                while !remaining.is_empty() && remaining.len() as f64 >= threshold {
                    let u = SetFamily::new(cfg.n, cfg.k, remaining.iter().copied())?;
                    let (res, _) = select_generator(&u, cfg.l, cfg.generator.lambda, &gen_cfg)?;
                    let before = remaining.len();
                    remaining.retain(|s| !res.g.is_subset_of(*s));
                    debug_assert!(remaining.len() < before, "a generator always covers a member");
                    info.generators.push(res.g);
                }
                let mut errors: BTreeSet<Subset> = inherited;
                errors.extend(remaining);
                info.error_cliques = errors.into_iter().collect();
            }
        }
        out.push(info);
    }
    Ok(out)
}

/// `σ = (g, g1, g2, α)` together with one clique it is incident to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Quadruple {
    /// Node index in children-first order.
    pub node: usize,
    pub g: Subset,
    pub g1: Subset,
    pub g2: Subset,
    pub witness: Subset,
}

impl Quadruple {
    /// `C(g1 ∪ g2, 2) \ C(g, 2)`.
    pub fn d(&self) -> EdgeSet {
        EdgeSet::clique(self.g1 | self.g2).difference(EdgeSet::clique(self.g))
    }

    pub fn view(&self, c: &Circuit) -> QuadrupleView {
        QuadrupleView {
            node: c.id(self.node),
            g: self.g,
            g1: self.g1,
            g2: self.g2,
            witness: self.witness,
        }
    }
}

/// A quadruple as reported, with the node's text identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuadrupleView {
    pub node: u32,
    pub g: Subset,
    pub g1: Subset,
    pub g2: Subset,
    pub witness: Subset,
}

/// Whether `(g, g1, g2)` at `node` is incident to `clique`.
pub fn is_incident(
    c: &Circuit,
    info: &[NodeGenInfo],
    node: usize,
    (g, g1, g2): (Subset, Subset, Subset),
    clique: Subset,
) -> bool {
    let here = &info[node];
    if !here.is_generated(clique) || here.is_error(clique) || !here.has_generator(g) || !g.is_subset_of(clique) {
        return false;
    }
    match c.nodes()[node] {
        Node::Leaf(lit) => g == lit.edge.vertices() && g1 == g && g2 == g,
        Node::And(a, b) => {
            info[a].has_generator(g1) && g1.is_subset_of(clique) && info[b].has_generator(g2) && g2.is_subset_of(clique)
        }
        Node::Or(a, b) => {
            g1 == g2
                && g1.is_subset_of(clique)
                && [a, b]
                    .iter()
                    .any(|&ch| info[ch].has_generator(g1) && info[ch].is_generated(clique))
        }
    }
}

/// All quadruples incident to some non-error generated clique, sorted by
/// node then generators; each keeps the least clique it is incident to.
pub fn build_q0(c: &Circuit, info: &[NodeGenInfo]) -> Vec<Quadruple> {
    let mut found: BTreeMap<(usize, Subset, Subset, Subset), Subset> = BTreeMap::new();
    for (i, node) in c.nodes().iter().enumerate() {
        let here = &info[i];
        for clique in here.non_error() {
            for &g in here.generators.iter().filter(|g| g.is_subset_of(clique)) {
                let mut add = |g1: Subset, g2: Subset| {
                    found.entry((i, g, g1, g2)).or_insert(clique);
                };
                match *node {
                    Node::Leaf(_) => add(g, g),
                    Node::And(a, b) => {
                        for &g1 in info[a].generators.iter().filter(|x| x.is_subset_of(clique)) {
                            for &g2 in info[b].generators.iter().filter(|x| x.is_subset_of(clique)) {
                                add(g1, g2);
                            }
                        }
                    }
                    Node::Or(a, b) => {
                        for ch in [a, b] {
                            if info[ch].is_generated(clique) {
                                for &g1 in info[ch].generators.iter().filter(|x| x.is_subset_of(clique)) {
                                    add(g1, g1);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    found
        .into_iter()
        .map(|((node, g, g1, g2), witness)| Quadruple {
            node,
            g,
            g1,
            g2,
            witness,
        })
        .collect()
}

/// For every non-error clique `c` and generator `g ⊆ c` at a node, some
/// quadruple `(g, ·, ·, α)` in `q0` is incident to `c`.
pub fn audit_q0_coverage(c: &Circuit, info: &[NodeGenInfo], q0: &[Quadruple]) -> bool {
    let by_node = index_by_node(c, q0);
    (0..c.len()).all(|i| {
        info[i].non_error().all(|clique| {
            info[i].generators.iter().filter(|g| g.is_subset_of(clique)).all(|&g| {
                by_node[i]
                    .iter()
                    .map(|&x| q0[x])
                    .any(|s| s.g == g && is_incident(c, info, i, (s.g, s.g1, s.g2), clique))
            })
        })
    })
}

/// Error cliques only grow toward the root.
pub fn audit_error_monotone(c: &Circuit, info: &[NodeGenInfo]) -> bool {
    c.nodes().iter().enumerate().all(|(i, node)| match *node {
        Node::Leaf(_) => true,
        Node::And(a, b) | Node::Or(a, b) => [a, b].iter().all(|&ch| {
            info[ch]
                .error_cliques
                .iter()
                .all(|e| info[i].error_cliques.binary_search(e).is_ok())
        }),
    })
}

fn index_by_node(c: &Circuit, q0: &[Quadruple]) -> Vec<Vec<usize>> {
    let mut by_node = vec![Vec::new(); c.len()];
    for (x, s) in q0.iter().enumerate() {
        by_node[s.node].push(x);
    }
    by_node
}

/// Whether `y` is valid for every generator at every node: some
/// non-error clique `c` has `g ⊆ c ⊆ g ∪ y`.
pub fn part_is_valid(info: &[NodeGenInfo], y: Subset) -> bool {
    info.iter().all(|here| {
        here.generators.iter().all(|&g| {
            let hull = g | y;
            here.non_error().any(|c| g.is_subset_of(c) && c.is_subset_of(hull))
        })
    })
}

fn ordered_partitions(rest: Subset, l: u32, prefix: &mut Vec<Subset>, out: &mut Vec<Vec<Subset>>) {
    if rest.is_empty() {
        out.push(prefix.clone());
        return;
    }
    for y in k_subsets(rest, l) {
        prefix.push(y);
        ordered_partitions(rest - y, l, prefix, out);
        prefix.pop();
    }
}

/// Number of ordered partitions of `[n]` into `q` blocks of size `l`.
pub fn partition_count(n: u32, l: u32) -> u128 {
    let mut total: u128 = 1;
    let mut rest = n;
    while rest > 0 {
        total = total.saturating_mul(binom_u64(rest, l) as u128);
        rest -= l;
    }
    total
}

/// Up to `count` valid splits in seeded random order: every ordered
/// partition when there are at most [`SPLIT_ENUM_MAX`], otherwise random
/// partitions drawn from shuffled permutations.
pub fn build_splits(info: &[NodeGenInfo], cfg: &ShiftConfig, count: usize) -> Vec<Vec<Subset>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut candidates = Vec::new();
    if partition_count(cfg.n, cfg.l) <= SPLIT_ENUM_MAX as u128 {
        ordered_partitions(Subset::full(cfg.n), cfg.l, &mut Vec::new(), &mut candidates);
        candidates.shuffle(&mut rng);
    } else {
        let mut seen = BTreeSet::new();
        let mut perm: Vec<u32> = (1..=cfg.n).collect();
        for _ in 0..count.saturating_mul(50).max(1000) {
            perm.shuffle(&mut rng);
            let split: Vec<Subset> = perm.chunks(cfg.l as usize).map(Subset::of).collect();
            if seen.insert(split.clone()) {
                candidates.push(split);
            }
        }
    }
    let mut valid_part: HashMap<Subset, bool> = HashMap::new();
    candidates
        .into_iter()
        .filter(|split| {
            split
                .iter()
                .all(|&y| *valid_part.entry(y).or_insert_with(|| part_is_valid(info, y)))
        })
        .take(count)
        .collect()
}

/// Blocked-set candidates `z ⊆ C(y,2)` with `|z| = size` such that
/// `C(y,2) \ z` has no `r`-clique, sorted. Exhaustive when the number of
/// `size`-subsets is within `budget`, else `budget` seeded samples.
pub fn cliqueless_block_family(y: Subset, size: u32, r: u32, budget: u64, seed: u64) -> Vec<EdgeSet> {
    let all = EdgeSet::clique(y);
    let edges = all.to_vec();
    let total_edges = edges.len() as u32;
    if size > total_edges {
        return Vec::new();
    }
    let qualifies = |z: EdgeSet| !has_clique(all.difference(z), y, r);
    let total = exact_binom(total_edges as u64, size as i64);
    let exhaustive = total_edges <= 64 && total.to_u64().is_some_and(|t| t <= budget);
    let mut out: BTreeSet<EdgeSet> = BTreeSet::new();
    if exhaustive {
        for pick in k_subsets(Subset::full(total_edges), size) {
            let z = EdgeSet::of(&pick.iter().map(|i| edges[i as usize - 1]).collect::<Vec<_>>());
            if qualifies(z) {
                out.insert(z);
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..budget {
            let pick = rand::seq::index::sample(&mut rng, total_edges as usize, size as usize);
            let z = EdgeSet::of(&pick.iter().map(|i| edges[i]).collect::<Vec<_>>());
            if qualifies(z) {
                out.insert(z);
            }
        }
    }
    out.into_iter().collect()
}

/// Where a failed run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FailureStage {
    NoValidSplit,
    NoCliquelessBlock,
    ResidualQ,
    ChainPropertyViolation,
    Audit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftFailure {
    pub stage: FailureStage,
    pub reason: String,
    /// Index into the quadruple list of the offending `σ`, if any.
    pub sigma: Option<usize>,
}

/// Choices made by the blocked-edge loop for one split.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftState {
    pub split: Vec<Subset>,
    pub z_blocks: Vec<EdgeSet>,
    /// Block index chosen for each quadruple.
    pub y_choice: Vec<Option<usize>>,
    /// Index of `f(σ)` for each quadruple.
    pub f_choice: Vec<Option<usize>>,
    /// `|Q|` before the first block and after each block.
    pub q_trace: Vec<usize>,
}

impl ShiftState {
    pub fn z(&self) -> EdgeSet {
        self.z_blocks.iter().fold(EdgeSet::EMPTY, |a, &b| a.union(b))
    }
}

/// `f_j(σ)`: the least quadruple `(g, ·, ·, α)` incident to the least
/// non-error clique `c*` with `g ⊆ c* ⊆ g ∪ y`.
pub fn f_for_part(
    c: &Circuit,
    info: &[NodeGenInfo],
    q0: &[Quadruple],
    by_node: &[Vec<usize>],
    sigma: &Quadruple,
    y: Subset,
) -> Option<usize> {
    let hull = sigma.g | y;
    let star = info[sigma.node]
        .non_error()
        .find(|&x| sigma.g.is_subset_of(x) && x.is_subset_of(hull))?;
    by_node[sigma.node].iter().copied().find(|&x| {
        let s = &q0[x];
        s.g == sigma.g && is_incident(c, info, sigma.node, (s.g, s.g1, s.g2), star)
    })
}

/// The blocked-edge loop over blocks `1..q`: tentatively assign block `j`
/// to every remaining quadruple, keep the candidate `z_j` blocking the
/// fewest (first in candidate order on ties), and carry the blocked ones
/// forward. A quadruple with no `f_j` counts as blocked.
pub fn blocked_edges(
    c: &Circuit,
    info: &[NodeGenInfo],
    q0: &[Quadruple],
    split: &[Subset],
    cfg: &ShiftConfig,
) -> std::result::Result<ShiftState, (ShiftFailure, ShiftState)> {
    let by_node = index_by_node(c, q0);
    let mut state = ShiftState {
        split: split.to_vec(),
        z_blocks: Vec::new(),
        y_choice: vec![None; q0.len()],
        f_choice: vec![None; q0.len()],
        q_trace: vec![q0.len()],
    };
    let mut remaining: Vec<usize> = (0..q0.len()).collect();
    for (j, &y) in split.iter().enumerate() {
        let tentative: Vec<Option<(usize, EdgeSet)>> = remaining
            .iter()
            .map(|&x| f_for_part(c, info, q0, &by_node, &q0[x], y).map(|f| (f, q0[f].d())))
            .collect();
        let block_seed = cfg.seed ^ (j as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let candidates = cliqueless_block_family(y, cfg.z_block_size, cfg.r_block, cfg.candidate_budget, block_seed);
        if candidates.is_empty() {
            let fail = ShiftFailure {
                stage: FailureStage::NoCliquelessBlock,
                reason: format!("no blocked-set candidate for block {}", j + 1),
                sigma: None,
            };
            return Err((fail, state));
        }
        let blocked_by = |z: EdgeSet| -> Vec<bool> {
            tentative
                .iter()
                .map(|t| t.map_or(true, |(_, d)| !d.is_disjoint(z)))
                .collect()
        };
        let mut best: Option<(usize, EdgeSet, Vec<bool>)> = None;
        for &z in &candidates {
            let flags = blocked_by(z);
            let count = flags.iter().filter(|&&b| b).count();
            if best.as_ref().map_or(true, |(bc, _, _)| count < *bc) {
                best = Some((count, z, flags));
                if count == 0 {
                    break;
                }
            }
        }
        let (_, z, flags) = best.expect("candidates nonempty");
        state.z_blocks.push(z);
        let mut next = Vec::new();
        for (pos, &x) in remaining.iter().enumerate() {
            if flags[pos] {
                next.push(x);
            } else {
                let (f, _) = tentative[pos].expect("unblocked quadruples have f");
                state.y_choice[x] = Some(j);
                state.f_choice[x] = Some(f);
            }
        }
        remaining = next;
        state.q_trace.push(remaining.len());
    }
    if let Some(&x) = remaining.first() {
        let fail = ShiftFailure {
            stage: FailureStage::ResidualQ,
            reason: format!("{} quadruples still blocked after the last block", remaining.len()),
            sigma: Some(x),
        };
        return Err((fail, state));
    }
    Ok(state)
}

/// Builds `t(σ)` for every quadruple, children first: a leaf gives its
/// edge, AND joins the terms of the child quadruples named by `f(σ)`,
/// OR copies the term of the child that owns `f(σ)`'s generator.
pub fn local_shift(
    c: &Circuit,
    info: &[NodeGenInfo],
    q0: &[Quadruple],
    state: &ShiftState,
) -> std::result::Result<Vec<Term>, ShiftFailure> {
    let by_node = index_by_node(c, q0);
    let first_with = |node: usize, g: Subset| by_node[node].iter().copied().find(|&x| q0[x].g == g);
    let chain = |x: usize, msg: &str| ShiftFailure {
        stage: FailureStage::ChainPropertyViolation,
        reason: msg.to_string(),
        sigma: Some(x),
    };
    let mut terms: Vec<Term> = vec![Term::default(); q0.len()];
    for (x, sigma) in q0.iter().enumerate() {
        terms[x] = match c.nodes()[sigma.node] {
            Node::Leaf(lit) => Term::literal(lit),
            node => {
                let f = state.f_choice[x].ok_or_else(|| chain(x, "no f(σ) assigned"))?;
                let star = q0[f];
                match node {
                    Node::And(a, b) => {
                        let s1 = first_with(a, star.g1).ok_or_else(|| chain(x, "no quadruple at the left child"))?;
                        let s2 = first_with(b, star.g2).ok_or_else(|| chain(x, "no quadruple at the right child"))?;
                        terms[s1].union(terms[s2])
                    }
                    Node::Or(a, b) => {
                        let s1 = [a, b]
                            .iter()
                            .filter(|&&ch| info[ch].has_generator(star.g1))
                            .find_map(|&ch| first_with(ch, star.g1))
                            .ok_or_else(|| chain(x, "no quadruple at either child"))?;
                        terms[s1]
                    }
                    Node::Leaf(_) => unreachable!(),
                }
            }
        };
    }
    Ok(terms)
}

/// Every `|Q|` after a block is at most half the `|Q|` before it.
pub fn audit_convergence(q_trace: &[usize]) -> bool {
    q_trace.windows(2).all(|w| 2 * w[1] <= w[0])
}

/// Every edge of `d(f(σ))` has an endpoint in the chosen block and no edge
/// lies inside another block.
pub fn audit_independence(q0: &[Quadruple], state: &ShiftState) -> bool {
    q0.iter().enumerate().all(|(x, _)| {
        let (Some(j), Some(f)) = (state.y_choice[x], state.f_choice[x]) else {
            return true;
        };
        let d = q0[f].d();
        let y = state.split[j];
        d.iter().all(|e| !e.vertices().is_disjoint(y))
            && state
                .split
                .iter()
                .enumerate()
                .all(|(jj, &other)| jj == j || d.is_disjoint(EdgeSet::clique(other)))
    })
}

/// `Φ`: the union of `d(f(σ))` over all quadruples.
pub fn phi(q0: &[Quadruple], state: &ShiftState) -> EdgeSet {
    state
        .f_choice
        .iter()
        .flatten()
        .fold(EdgeSet::EMPTY, |acc, &f| acc.union(q0[f].d()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftStatus {
    Success,
    /// No root quadruple exists, so no term is produced.
    Vacuous,
    Failure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftOutcome {
    pub status: ShiftStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure_stage: Option<FailureStage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offending: Option<QuadrupleView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub term: Option<Term>,
    pub z: EdgeSet,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<Vec<Subset>>,
    pub q0_size: usize,
    #[serde(rename = "Q_trace")]
    pub q_trace: Vec<usize>,
    pub splits_tried: usize,
    pub audits: BTreeMap<&'static str, bool>,
}

impl ShiftOutcome {
    pub fn is_success(&self) -> bool {
        self.status == ShiftStatus::Success
    }

    /// Whether the returned term was certified as a counterexample.
    pub fn counterexample(&self) -> bool {
        self.audits.get("counterexample").copied().unwrap_or(false)
    }
}

/// Everything computed before splits are tried.
pub struct Prepared {
    pub table: DnfTable,
    pub info: Vec<NodeGenInfo>,
    pub q0: Vec<Quadruple>,
}

pub fn prepare(c: &Circuit, cfg: &ShiftConfig, limits: &Limits) -> Result<Prepared> {
    cfg.validate()?;
    if cfg.n != c.n() {
        return Err(Error::pre(format!("config n={} but circuit n={}", cfg.n, c.n())));
    }
    if !c.is_monotone() {
        return Err(Error::pre("circuit must be monotone"));
    }
    let table = DnfTable::build(c, limits, false)?;
    let info = clique_generators(c, cfg, limits)?;
    let q0 = build_q0(c, &info);
    Ok(Prepared { table, info, q0 })
}

/// Runs the whole pipeline over up to `split_count` valid splits and
/// returns the first success, else the last failure.
pub fn run_shift(c: &Circuit, cfg: &ShiftConfig, limits: &Limits) -> Result<ShiftOutcome> {
    let prep = prepare(c, cfg, limits)?;
    let Prepared { table, info, q0 } = &prep;
    let mut audits = BTreeMap::new();
    audits.insert("q0_coverage", audit_q0_coverage(c, info, q0));
    audits.insert("error_monotone", audit_error_monotone(c, info));
    let root_quads: Vec<usize> = (0..q0.len()).filter(|&x| q0[x].node == c.root()).collect();
    let mut outcome = ShiftOutcome {
        status: ShiftStatus::Failure,
        failure_stage: None,
        reason: None,
        offending: None,
        term: None,
        z: EdgeSet::EMPTY,
        split: None,
        q0_size: q0.len(),
        q_trace: Vec::new(),
        splits_tried: 0,
        audits,
    };
    if root_quads.is_empty() {
        outcome.status = ShiftStatus::Vacuous;
        outcome.audits.insert("term_in_dnf", true);
        outcome.audits.insert("term_avoids_z", true);
        return Ok(outcome);
    }
    let splits = build_splits(info, cfg, cfg.split_count);
    if splits.is_empty() {
        outcome.failure_stage = Some(FailureStage::NoValidSplit);
        outcome.reason = Some("no ordered partition is valid for every generator".into());
        return Ok(outcome);
    }
    let base_audits = outcome.audits.clone();
    for split in &splits {
        outcome.splits_tried += 1;
        outcome.audits = base_audits.clone();
        outcome.split = Some(split.clone());
        match attempt(c, cfg, table, info, q0, &root_quads, split) {
            Ok((term, state, extra)) => {
                outcome.z = state.z();
                outcome.q_trace = state.q_trace;
                outcome.audits.extend(extra);
                let certified = outcome.audits["term_in_dnf"] && outcome.audits["term_avoids_z"];
                if certified {
                    outcome.status = ShiftStatus::Success;
                    outcome.failure_stage = None;
                    outcome.reason = None;
                    outcome.offending = None;
                    outcome.term = Some(term);
                    return Ok(outcome);
                }
                outcome.failure_stage = Some(FailureStage::Audit);
                outcome.reason = Some("returned term failed DNF membership or meets z".into());
            }
            Err((fail, state)) => {
                outcome.z = state.as_ref().map_or(EdgeSet::EMPTY, ShiftState::z);
                outcome.q_trace = state.map(|s| s.q_trace).unwrap_or_default();
                outcome.failure_stage = Some(fail.stage);
                outcome.reason = Some(fail.reason);
                outcome.offending = fail.sigma.map(|x| q0[x].view(c));
            }
        }
    }
    Ok(outcome)
}

type Attempt = (Term, ShiftState, Vec<(&'static str, bool)>);

fn attempt(
    c: &Circuit,
    cfg: &ShiftConfig,
    table: &DnfTable,
    info: &[NodeGenInfo],
    q0: &[Quadruple],
    root_quads: &[usize],
    split: &[Subset],
) -> std::result::Result<Attempt, (ShiftFailure, Option<ShiftState>)> {
    let state = blocked_edges(c, info, q0, split, cfg).map_err(|(f, s)| (f, Some(s)))?;
    let terms = local_shift(c, info, q0, &state).map_err(|f| (f, Some(state.clone())))?;
    let z = state.z();
    let phi = phi(q0, &state);
    let root = root_quads
        .iter()
        .copied()
        .find(|&x| q0[x].g.is_empty())
        .unwrap_or(root_quads[0]);
    let term = terms[root];
    let outside = |x: usize| terms[x].pos.difference(EdgeSet::clique(q0[x].g));
    let all_edges = EdgeSet::clique(Subset::full(cfg.n));
    let z_cliqueless = max_clique(all_edges.difference(z), Subset::full(cfg.n)) <= (cfg.r_block - 1) * cfg.q;
    let counterexample = verify_counterexample(c, table, term, cfg.k);
    let extra = vec![
        ("term_in_dnf", table.contains(c.root(), term)),
        ("term_avoids_z", term.pos.is_disjoint(z)),
        ("z_cliqueless", z_cliqueless),
        ("local_terms_in_dnf", (0..q0.len()).all(|x| table.contains(q0[x].node, terms[x]))),
        ("disjointness", (0..q0.len()).all(|x| outside(x).is_disjoint(z))),
        ("dominance", (0..q0.len()).all(|x| outside(x).is_subset_of(phi))),
        ("phi_avoids_z", phi.is_disjoint(z)),
        ("independence", audit_independence(q0, &state)),
        ("convergence", audit_convergence(&state.q_trace)),
        ("counterexample", counterexample),
        ("soundness", !cfg.clique_bound_applies() || counterexample),
    ];
    Ok((term, state, extra))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::build_clique_circuit;

    fn cfg(n: u32, k: u32, q: u32, lambda_c: f64) -> ShiftConfig {
        ShiftConfig {
            n,
            k,
            q,
            l: n / q,
            z_block_size: 1,
            r_block: 2,
            lambda_c,
            candidate_budget: 1000,
            split_count: 5,
            seed: 1,
            generator: GeneratorSettings::default(),
        }
    }

    #[test]
    fn convergence_examples() {
        assert!(audit_convergence(&[8, 3, 1, 0]));
        assert!(!audit_convergence(&[8, 8, 0]));
    }

    #[test]
    fn negative_cutoff_makes_every_inner_clique_an_error() {
        let c = build_clique_circuit(4, 3, &Limits::default()).unwrap();
        let info = clique_generators(&c, &cfg(4, 3, 1, f64::NEG_INFINITY), &Limits::default()).unwrap();
        let root = &info[c.root()];
        assert!(root.generators.is_empty());
        assert_eq!(root.error_cliques.len(), 4);
    }

    #[test]
    fn infinite_cutoff_covers_the_root() {
        let c = build_clique_circuit(4, 3, &Limits::default()).unwrap();
        let info = clique_generators(&c, &cfg(4, 3, 1, f64::INFINITY), &Limits::default()).unwrap();
        let root = &info[c.root()];
        assert_eq!(root.generators, vec![Subset::EMPTY]);
        assert!(root.error_cliques.is_empty());
    }

    #[test]
    fn full_block_is_cliqueless() {
        let y = Subset::of(&[1, 2, 3, 4]);
        let z = cliqueless_block_family(y, 6, 3, 100, 0);
        assert_eq!(z, vec![EdgeSet::clique(y)]);
    }

    #[test]
    fn config_rejects_unknown_fields() {
        let text = r#"{"n":6,"k":3,"q":2,"l":3,"z_block_size":3,"r_block":2,"lambda_c":"inf","bogus":1}"#;
        assert!(ShiftConfig::from_json(text).is_err());
        let ok = r#"{"n":6,"k":3,"q":2,"l":3,"z_block_size":3,"r_block":2,"lambda_c":"inf"}"#;
        assert!(ShiftConfig::from_json(ok).unwrap().lambda_c.is_infinite());
    }
}
