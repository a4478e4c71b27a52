//! Circuits over edge literals: parsing, evaluation, DNF expansion,
//! generated cliques, minimal terms and the canonical clique circuits.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::fmt::{self, Write as _};

use serde::{Serialize, Serializer};

use crate::binom::binom_u64;
use crate::error::{Error, Limits, Result};
use crate::subset::{k_subsets, lex_cmp_u128, Subset};

/// Largest vertex count; `C(16, 2) = 120` edges fit in a `u128`.
pub const MAX_VERTICES: u32 = 16;

/// An edge `{u, v}` with `u < v`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    u: u32,
    v: u32,
}

impl Edge {
    pub fn new(a: u32, b: u32) -> Result<Edge> {
        if a == b || !(1..=MAX_VERTICES).contains(&a) || !(1..=MAX_VERTICES).contains(&b) {
            return Err(Error::pre(format!("invalid edge ({a},{b})")));
        }
        Ok(Edge {
            u: a.min(b),
            v: a.max(b),
        })
    }

    pub fn endpoints(self) -> (u32, u32) {
        (self.u, self.v)
    }

    pub fn vertices(self) -> Subset {
        Subset::of(&[self.u, self.v])
    }

    /// Colex position, independent of `n`.
    pub fn index(self) -> u32 {
        (self.v - 1) * (self.v - 2) / 2 + (self.u - 1)
    }

    pub fn from_index(i: u32) -> Edge {
        let mut v = 2;
        while (v - 1) * v / 2 <= i {
            v += 1;
        }
        Edge {
            u: i - (v - 1) * (v - 2) / 2 + 1,
            v,
        }
    }
}

impl fmt::Debug for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.u, self.v)
    }
}

impl Serialize for Edge {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.u, self.v].serialize(s)
    }
}

/// A set of edges as a bitmask over colex edge positions.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct EdgeSet(u128);

impl EdgeSet {
    pub const EMPTY: EdgeSet = EdgeSet(0);

    pub fn from_bits(b: u128) -> Self {
        EdgeSet(b)
    }

    pub fn bits(self) -> u128 {
        self.0
    }

    pub fn of(edges: &[Edge]) -> Self {
        edges.iter().fold(EdgeSet::EMPTY, |s, &e| s.with(e))
    }

    /// All edges inside a vertex set.
    pub fn clique(vertices: Subset) -> Self {
        let v = vertices.to_vec();
        let mut s = EdgeSet::EMPTY;
        for (i, &a) in v.iter().enumerate() {
            for &b in &v[i + 1..] {
                s = s.with(Edge { u: a, v: b });
            }
        }
        s
    }

    pub fn with(self, e: Edge) -> Self {
        EdgeSet(self.0 | 1 << e.index())
    }

    pub fn contains(self, e: Edge) -> bool {
        self.0 >> e.index() & 1 == 1
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, o: Self) -> Self {
        EdgeSet(self.0 | o.0)
    }

    pub fn intersection(self, o: Self) -> Self {
        EdgeSet(self.0 & o.0)
    }

    pub fn difference(self, o: Self) -> Self {
        EdgeSet(self.0 & !o.0)
    }

    pub fn is_subset_of(self, o: Self) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn is_disjoint(self, o: Self) -> bool {
        self.0 & o.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Edge> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let i = bits.trailing_zeros();
            bits &= bits - 1;
            Some(Edge::from_index(i))
        })
    }

    /// Vertices touched by some edge.
    pub fn vertices(self) -> Subset {
        self.iter().fold(Subset::EMPTY, |s, e| s | e.vertices())
    }

    pub fn to_vec(self) -> Vec<Edge> {
        let mut v: Vec<Edge> = self.iter().collect();
        v.sort();
        v
    }
}

impl Ord for EdgeSet {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        lex_cmp_u128(self.0, other.0)
    }
}

impl PartialOrd for EdgeSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for EdgeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.to_vec()).finish()
    }
}

impl Serialize for EdgeSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_vec().serialize(s)
    }
}

/// Whether `edges` contains a clique on `k` vertices drawn from `within`.
pub fn has_clique(edges: EdgeSet, within: Subset, k: u32) -> bool {
    fn grow(edges: EdgeSet, cand: Subset, need: u32) -> bool {
        if need == 0 {
            return true;
        }
        if cand.len() < need {
            return false;
        }
        for v in cand.iter() {
            let nbrs = cand
                .iter()
                .filter(|&w| w > v && edges.contains(Edge { u: v, v: w }))
                .fold(Subset::EMPTY, |s, w| s.with(w));
            if grow(edges, nbrs, need - 1) {
                return true;
            }
        }
        false
    }
    grow(edges, within, k)
}

/// Size of the largest clique of `edges` inside `within`.
pub fn max_clique(edges: EdgeSet, within: Subset) -> u32 {
    (1..=within.len())
        .take_while(|&k| has_clique(edges, within, k))
        .last()
        .unwrap_or(0)
}

/// A possibly negated edge variable.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize)]
pub struct Literal {
    pub edge: Edge,
    pub positive: bool,
}

/// A conjunction of literals.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Term {
    pub pos: EdgeSet,
    pub neg: EdgeSet,
}

impl Term {
    pub fn literal(lit: Literal) -> Term {
        let e = EdgeSet::EMPTY.with(lit.edge);
        if lit.positive {
            Term {
                pos: e,
                neg: EdgeSet::EMPTY,
            }
        } else {
            Term {
                pos: EdgeSet::EMPTY,
                neg: e,
            }
        }
    }

    pub fn positive(edges: EdgeSet) -> Term {
        Term {
            pos: edges,
            neg: EdgeSet::EMPTY,
        }
    }

    pub fn union(self, o: Term) -> Term {
        Term {
            pos: self.pos.union(o.pos),
            neg: self.neg.union(o.neg),
        }
    }

    pub fn is_subset_of(self, o: Term) -> bool {
        self.pos.is_subset_of(o.pos) && self.neg.is_subset_of(o.neg)
    }

    pub fn is_contradictory(self) -> bool {
        !self.pos.is_disjoint(self.neg)
    }

    pub fn is_positive(self) -> bool {
        self.neg.is_empty()
    }

    pub fn len(self) -> u32 {
        self.pos.len() + self.neg.len()
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }

    /// Whether every literal agrees with the assignment.
    pub fn consistent_with(self, s: &Assignment) -> bool {
        self.pos.is_subset_of(s.present) && self.neg.is_disjoint(s.present)
    }

    pub fn literals(self) -> Vec<Literal> {
        let mut v: Vec<Literal> = self
            .pos
            .iter()
            .map(|edge| Literal { edge, positive: true })
            .chain(self.neg.iter().map(|edge| Literal { edge, positive: false }))
            .collect();
        v.sort();
        v
    }
}

impl Ord for Term {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.pos.cmp(&other.pos).then(self.neg.cmp(&other.neg))
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, l) in self.literals().iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            let (u, v) = l.edge.endpoints();
            write!(f, "{}{u}{v}", if l.positive { "+" } else { "-" })?;
        }
        write!(f, "]")
    }
}

impl Serialize for Term {
    /// Signed edge triples `[sign, u, v]` with sign `1` or `-1`.
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let lits: Vec<[i64; 3]> = self
            .literals()
            .iter()
            .map(|l| {
                let (u, v) = l.edge.endpoints();
                [if l.positive { 1 } else { -1 }, u as i64, v as i64]
            })
            .collect();
        lits.serialize(s)
    }
}

/// The set of present edges; all others are absent.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Assignment {
    pub present: EdgeSet,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Node {
    Leaf(Literal),
    And(usize, usize),
    Or(usize, usize),
}

/// A fan-in-two DAG stored children-first: every child index is smaller
/// than its parent's. Nodes unreachable from the root are not kept.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Circuit {
    n: u32,
    nodes: Vec<Node>,
    /// File identifier of each node.
    ids: Vec<u32>,
    root: usize,
}

impl Circuit {
    /// Builds a circuit from nodes already in children-first order.
    pub fn new(n: u32, nodes: Vec<Node>, root: usize) -> Result<Circuit> {
        if !(2..=MAX_VERTICES).contains(&n) {
            return Err(Error::pre(format!("vertex count must be in 2..={MAX_VERTICES}")));
        }
        for (i, node) in nodes.iter().enumerate() {
            match *node {
                Node::Leaf(l) => {
                    if l.edge.v > n {
                        return Err(Error::pre(format!("leaf {i} uses vertex {} > n", l.edge.v)));
                    }
                }
                Node::And(a, b) | Node::Or(a, b) => {
                    if a >= i || b >= i {
                        return Err(Error::pre(format!("node {i} refers forward")));
                    }
                }
            }
        }
        if root >= nodes.len() {
            return Err(Error::pre("root out of range"));
        }
        let ids = (1..=nodes.len() as u32).collect();
        Circuit { n, nodes, ids, root }.pruned()
    }

    /// Drops nodes unreachable from the root, keeping relative order.
    fn pruned(self) -> Result<Circuit> {
        let mut keep = vec![false; self.nodes.len()];
        keep[self.root] = true;
        for i in (0..self.nodes.len()).rev() {
            if keep[i] {
                if let Node::And(a, b) | Node::Or(a, b) = self.nodes[i] {
                    keep[a] = true;
                    keep[b] = true;
                }
            }
        }
        let mut remap = vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        let mut ids = Vec::new();
        for i in 0..self.nodes.len() {
            if keep[i] {
                remap[i] = nodes.len();
                nodes.push(match self.nodes[i] {
                    Node::Leaf(l) => Node::Leaf(l),
                    Node::And(a, b) => Node::And(remap[a], remap[b]),
                    Node::Or(a, b) => Node::Or(remap[a], remap[b]),
                });
                ids.push(self.ids[i]);
            }
        }
        Ok(Circuit {
            n: self.n,
            root: remap[self.root],
            nodes,
            ids,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The identifier a node carries in the text format.
    pub fn id(&self, node: usize) -> u32 {
        self.ids[node]
    }

    pub fn node_by_id(&self, id: u32) -> Option<usize> {
        self.ids.iter().position(|&i| i == id)
    }

    pub fn is_monotone(&self) -> bool {
        self.nodes
            .iter()
            .all(|n| !matches!(n, Node::Leaf(l) if !l.positive))
    }

    pub fn evaluate(&self, s: &Assignment) -> bool {
        let mut val = vec![false; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            val[i] = match *node {
                Node::Leaf(l) => s.present.contains(l.edge) == l.positive,
                Node::And(a, b) => val[a] && val[b],
                Node::Or(a, b) => val[a] || val[b],
            };
        }
        val[self.root]
    }

    /// Parses the line format
    /// `<id> LEAF +|- <u> <v>`, `<id> AND <a> <b>`, `<id> OR <a> <b>`,
    /// `ROOT <id>`, with optional `N <n>`, blank lines and `#` comments.
    /// Lines may appear in any order; cycles and unknown ids are rejected.
    pub fn parse(text: &str) -> Result<Circuit> {
        #[derive(Clone, Copy)]
        enum Raw {
            Leaf(Literal),
            Gate(bool, u32, u32),
        }
        let mut defs: BTreeMap<u32, (Raw, usize)> = BTreeMap::new();
        let mut root: Option<(u32, usize)> = None;
        let mut declared_n: Option<u32> = None;
        for (idx, line) in text.lines().enumerate() {
            let ln = idx + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let tok: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| -> Result<u32> {
                s.parse::<u32>()
                    .map_err(|_| Error::parse(Some(ln), format!("expected an integer, found {s:?}")))
            };
            match tok.as_slice() {
                ["N", n] => {
                    if declared_n.replace(num(n)?).is_some() {
                        return Err(Error::parse(Some(ln), "repeated N line"));
                    }
                }
                ["ROOT", id] => {
                    if root.replace((num(id)?, ln)).is_some() {
                        return Err(Error::parse(Some(ln), "repeated ROOT line"));
                    }
                }
                [id, kind, rest @ ..] => {
                    let id = num(id)?;
                    let raw = match (*kind, rest) {
                        ("LEAF", [sign, u, v]) => {
                            let positive = match *sign {
                                "+" => true,
                                "-" => false,
                                s => return Err(Error::parse(Some(ln), format!("bad sign {s:?}"))),
                            };
                            let edge = Edge::new(num(u)?, num(v)?)
                                .map_err(|e| Error::parse(Some(ln), e.to_string()))?;
                            Raw::Leaf(Literal { edge, positive })
                        }
                        ("AND", [a, b]) => Raw::Gate(true, num(a)?, num(b)?),
                        ("OR", [a, b]) => Raw::Gate(false, num(a)?, num(b)?),
                        _ => return Err(Error::parse(Some(ln), format!("malformed line {line:?}"))),
                    };
                    if defs.insert(id, (raw, ln)).is_some() {
                        return Err(Error::parse(Some(ln), format!("duplicate id {id}")));
                    }
                }
                _ => return Err(Error::parse(Some(ln), format!("malformed line {line:?}"))),
            }
        }
        let (root_id, root_line) = root.ok_or_else(|| Error::parse(None, "missing ROOT line"))?;
        if !defs.contains_key(&root_id) {
            return Err(Error::parse(Some(root_line), format!("unknown root id {root_id}")));
        }
        for (raw, ln) in defs.values() {
            if let Raw::Gate(_, a, b) = raw {
                for c in [a, b] {
                    if !defs.contains_key(c) {
                        return Err(Error::parse(Some(*ln), format!("unknown reference {c}")));
                    }
                }
            }
        }
        // Reachable ids, then Kahn's algorithm preferring earlier lines so a
        // file that is already children-first keeps its order.
        let children = |id: u32| match defs[&id].0 {
            Raw::Gate(_, a, b) => vec![a, b],
            Raw::Leaf(_) => Vec::new(),
        };
        let mut reachable: BTreeSet<u32> = BTreeSet::new();
        let mut stack = vec![root_id];
        while let Some(id) = stack.pop() {
            if reachable.insert(id) {
                stack.extend(children(id));
            }
        }
        let mut parents: HashMap<u32, Vec<u32>> = HashMap::new();
        let mut pending: HashMap<u32, usize> = HashMap::new();
        for &id in &reachable {
            let ch = children(id);
            pending.insert(id, ch.len());
            for c in ch {
                parents.entry(c).or_default().push(id);
            }
        }
        let mut ready: BinaryHeap<Reverse<(usize, u32)>> = reachable
            .iter()
            .filter(|id| pending[id] == 0)
            .map(|&id| Reverse((defs[&id].1, id)))
            .collect();
        let mut order: Vec<u32> = Vec::with_capacity(reachable.len());
        while let Some(Reverse((_, id))) = ready.pop() {
            order.push(id);
            for &p in parents.get(&id).map(Vec::as_slice).unwrap_or(&[]) {
                let left = pending.get_mut(&p).expect("reachable parent");
                *left -= 1;
                if *left == 0 {
                    ready.push(Reverse((defs[&p].1, p)));
                }
            }
        }
        if order.len() < reachable.len() {
            let stuck = reachable.iter().find(|id| pending[id] > 0).expect("some node is stuck");
            return Err(Error::parse(Some(defs[stuck].1), format!("cycle through id {stuck}")));
        }
        let pos: HashMap<u32, usize> = order.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let nodes: Vec<Node> = order
            .iter()
            .map(|id| match defs[id].0 {
                Raw::Leaf(l) => Node::Leaf(l),
                Raw::Gate(true, a, b) => Node::And(pos[&a], pos[&b]),
                Raw::Gate(false, a, b) => Node::Or(pos[&a], pos[&b]),
            })
            .collect();
        let max_vertex = nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf(l) => Some(l.edge.v),
                _ => None,
            })
            .max()
            .unwrap_or(2);
        let n = declared_n.unwrap_or(max_vertex);
        if n < max_vertex || n > MAX_VERTICES {
            return Err(Error::parse(
                None,
                format!("N={n} must cover vertex {max_vertex} and be at most {MAX_VERTICES}"),
            ));
        }
        Ok(Circuit {
            n,
            root: pos[&root_id],
            nodes,
            ids: order,
        })
    }

    /// Canonical text: `N` line, nodes children-first, then `ROOT`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "N {}", self.n).unwrap();
        for (i, node) in self.nodes.iter().enumerate() {
            let id = self.ids[i];
            match *node {
                Node::Leaf(l) => {
                    let (u, v) = l.edge.endpoints();
                    writeln!(s, "{id} LEAF {} {u} {v}", if l.positive { "+" } else { "-" })
                }
                Node::And(a, b) => writeln!(s, "{id} AND {} {}", self.ids[a], self.ids[b]),
                Node::Or(a, b) => writeln!(s, "{id} OR {} {}", self.ids[a], self.ids[b]),
            }
            .unwrap();
        }
        writeln!(s, "ROOT {}", self.ids[self.root]).unwrap();
        s
    }
}

/// Incrementally assembled circuit with shared leaves.
struct Builder {
    nodes: Vec<Node>,
    leaves: HashMap<Edge, usize>,
}

impl Builder {
    fn leaf(&mut self, edge: Edge) -> usize {
        *self.leaves.entry(edge).or_insert_with(|| {
            self.nodes.push(Node::Leaf(Literal {
                edge,
                positive: true,
            }));
            self.nodes.len() - 1
        })
    }

    /// Balanced binary tree of `and`/`or` gates over `items`.
    fn balanced(&mut self, items: &[usize], and: bool) -> usize {
        if items.len() == 1 {
            return items[0];
        }
        let mid = items.len() / 2;
        let a = self.balanced(&items[..mid], and);
        let b = self.balanced(&items[mid..], and);
        self.nodes.push(if and { Node::And(a, b) } else { Node::Or(a, b) });
        self.nodes.len() - 1
    }
}

/// `OR` over `k`-sets `c` of `AND` over the edges returned by `group(c)`,
/// both as balanced trees.
pub fn build_grouped_circuit(
    n: u32,
    k: u32,
    limits: &Limits,
    mut group: impl FnMut(usize, Subset) -> Vec<Edge>,
) -> Result<Circuit> {
    if !(2 <= k && k <= n && n <= MAX_VERTICES) {
        return Err(Error::pre(format!("need 2 <= k <= n <= {MAX_VERTICES}")));
    }
    limits.check("clique circuit groups", binom_u64(n, k) as u128)?;
    let mut b = Builder {
        nodes: Vec::new(),
        leaves: HashMap::new(),
    };
    let mut tops = Vec::new();
    for (i, c) in k_subsets(Subset::full(n), k).enumerate() {
        let edges = group(i, c);
        if edges.is_empty() {
            return Err(Error::pre(format!("group {i} has no edges")));
        }
        let leaves: Vec<usize> = edges.into_iter().map(|e| b.leaf(e)).collect();
        tops.push(b.balanced(&leaves, true));
    }
    let root = b.balanced(&tops, false);
    Circuit::new(n, b.nodes, root)
}

/// The canonical monotone circuit for `CLIQUE_{n,k}`.
pub fn build_clique_circuit(n: u32, k: u32, limits: &Limits) -> Result<Circuit> {
    build_grouped_circuit(n, k, limits, |_, c| EdgeSet::clique(c).to_vec())
}

/// The canonical circuit with group `index` (in lexicographic order of
/// `k`-sets) cut down to its first `keep` edges.
pub fn build_mutilated_clique_circuit(
    n: u32,
    k: u32,
    index: usize,
    keep: usize,
    limits: &Limits,
) -> Result<Circuit> {
    build_grouped_circuit(n, k, limits, |i, c| {
        let mut e = EdgeSet::clique(c).to_vec();
        if i == index {
            e.truncate(keep);
        }
        e
    })
}

/// `DNF(α)` for every node, sorted and deduplicated.
#[derive(Debug, Clone)]
pub struct DnfTable {
    terms: Vec<Vec<Term>>,
}

impl DnfTable {
    /// Bottom-up expansion; `TooLarge` when a node's predicted term count
    /// exceeds the cap. With `drop_contradictions`, contradictory terms are
    /// filtered at every node.
    pub fn build(c: &Circuit, limits: &Limits, drop_contradictions: bool) -> Result<DnfTable> {
        let mut terms: Vec<Vec<Term>> = Vec::with_capacity(c.len());
        for node in c.nodes() {
            let mut t = match *node {
                Node::Leaf(l) => vec![Term::literal(l)],
                Node::And(a, b) => {
                    limits.check("DNF", terms[a].len() as u128 * terms[b].len() as u128)?;
                    let mut out = Vec::with_capacity(terms[a].len() * terms[b].len());
                    for x in &terms[a] {
                        for y in &terms[b] {
                            out.push(x.union(*y));
                        }
                    }
                    out
                }
                Node::Or(a, b) => {
                    limits.check("DNF", terms[a].len() as u128 + terms[b].len() as u128)?;
                    terms[a].iter().chain(&terms[b]).copied().collect()
                }
            };
            if drop_contradictions {
                t.retain(|x| !x.is_contradictory());
            }
            t.sort_unstable();
            t.dedup();
            terms.push(t);
        }
        Ok(DnfTable { terms })
    }

    pub fn terms(&self, node: usize) -> &[Term] {
        &self.terms[node]
    }

    pub fn contains(&self, node: usize, t: Term) -> bool {
        self.terms[node].binary_search(&t).is_ok()
    }
}

pub fn dnf(c: &Circuit, node: usize, limits: &Limits) -> Result<Vec<Term>> {
    Ok(DnfTable::build(c, limits, false)?.terms[node].clone())
}

/// `k`-sets `c` for which some all-positive term at `node` lies inside `C(c, 2)`.
pub fn cliques_generated_at(
    c: &Circuit,
    table: &DnfTable,
    node: usize,
    k: u32,
    limits: &Limits,
) -> Result<Vec<Subset>> {
    limits.check("k-sets", binom_u64(c.n(), k) as u128)?;
    let positive: Vec<EdgeSet> = table
        .terms(node)
        .iter()
        .filter(|t| t.is_positive())
        .map(|t| t.pos)
        .collect();
    Ok(k_subsets(Subset::full(c.n()), k)
        .filter(|&s| {
            let edges = EdgeSet::clique(s);
            positive.iter().any(|t| t.is_subset_of(edges))
        })
        .collect())
}

/// Generated `k`-cliques at every node, computed by set algebra rather than
/// DNF expansion: a positive leaf generates the `k`-sets containing its
/// edge, AND intersects, OR unites. Each list is sorted.
pub fn generated_cliques(c: &Circuit, k: u32, limits: &Limits) -> Result<Vec<Vec<Subset>>> {
    limits.check("k-sets", binom_u64(c.n(), k) as u128)?;
    let mut out: Vec<Vec<Subset>> = Vec::with_capacity(c.len());
    for node in c.nodes() {
        let v = match *node {
            Node::Leaf(l) if l.positive => {
                let e = l.edge.vertices();
                k_subsets(Subset::full(c.n()) - e, k.saturating_sub(2))
                    .map(|s| s | e)
                    .filter(|s| s.len() == k)
                    .collect::<Vec<_>>()
            }
            Node::Leaf(_) => Vec::new(),
            Node::And(a, b) => out[a]
                .iter()
                .filter(|s| out[b].binary_search(s).is_ok())
                .copied()
                .collect(),
            Node::Or(a, b) => {
                let mut v: Vec<Subset> = out[a].iter().chain(&out[b]).copied().collect();
                v.sort_unstable();
                v.dedup();
                v
            }
        };
        let mut v = v;
        v.sort_unstable();
        out.push(v);
    }
    Ok(out)
}

/// A global term derived with one term per visited node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimalTerm {
    pub term: Term,
    /// `(node id, term)` for every visited node, children first.
    pub trace: Vec<(u32, Term)>,
}

/// Follows a derivation of `root_term` from the root down, fixing the first
/// decomposition found at each node, then rebuilds bottom-up using those
/// fixed choices. The rebuilt term is a subset of `root_term`.
pub fn minimal_term(c: &Circuit, table: &DnfTable, root_term: Term) -> Result<MinimalTerm> {
    if !table.contains(c.root(), root_term) {
        return Err(Error::NotInDnf);
    }
    #[derive(Clone, Copy)]
    enum Choice {
        Leaf,
        And,
        Or(usize),
    }
    let mut choice: Vec<Option<Choice>> = vec![None; c.len()];
    let mut stack = vec![(c.root(), root_term)];
    while let Some((node, t)) = stack.pop() {
        if choice[node].is_some() {
            continue;
        }
        match c.nodes()[node] {
            Node::Leaf(_) => choice[node] = Some(Choice::Leaf),
            Node::And(a, b) => {
                let (ta, tb) = table
                    .terms(a)
                    .iter()
                    .filter(|x| x.is_subset_of(t))
                    .find_map(|&x| {
                        table
                            .terms(b)
                            .iter()
                            .find(|y| y.is_subset_of(t) && x.union(**y) == t)
                            .map(|&y| (x, y))
                    })
                    .ok_or(Error::NotInDnf)?;
                choice[node] = Some(Choice::And);
                stack.push((b, tb));
                stack.push((a, ta));
            }
            Node::Or(a, b) => {
                let child = if table.contains(a, t) {
                    a
                } else if table.contains(b, t) {
                    b
                } else {
                    return Err(Error::NotInDnf);
                };
                choice[node] = Some(Choice::Or(child));
                stack.push((child, t));
            }
        }
    }
    let mut built: Vec<Option<Term>> = vec![None; c.len()];
    let mut trace = Vec::new();
    for node in 0..c.len() {
        let Some(ch) = choice[node] else { continue };
        let t = match (ch, c.nodes()[node]) {
            (Choice::Leaf, Node::Leaf(l)) => Term::literal(l),
            (Choice::And, Node::And(a, b)) => built[a]
                .expect("child visited")
                .union(built[b].expect("child visited")),
            (Choice::Or(child), _) => built[child].expect("child visited"),
            _ => unreachable!("choice matches node kind"),
        };
        built[node] = Some(t);
        trace.push((c.id(node), t));
    }
    let term = built[c.root()].expect("root visited");
    debug_assert!(table.contains(c.root(), term));
    Ok(MinimalTerm { term, trace })
}

/// `t ∈ DNF(root)`, `t` free of contradictions, and the positive edges of
/// `t` contain no `k`-clique; the induced assignment is also re-evaluated.
pub fn verify_counterexample(c: &Circuit, table: &DnfTable, t: Term, k: u32) -> bool {
    table.contains(c.root(), t)
        && !t.is_contradictory()
        && !has_clique(t.pos, Subset::full(c.n()), k)
        && c.evaluate(&Assignment { present: t.pos })
}
