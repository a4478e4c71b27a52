use std::collections::HashMap;
use std::path::PathBuf;

use hamming_forge::circuit::*;
use hamming_forge::{Limits, Subset};
use proptest::prelude::*;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/circuits")
}

fn corpus() -> Vec<(String, String)> {
    let mut files: Vec<_> = std::fs::read_dir(fixtures().join("corpus"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| (p.display().to_string(), std::fs::read_to_string(&p).unwrap()))
        .collect()
}

/// A line-level evaluator over the raw text, independent of the parser.
struct RawCircuit {
    n: u32,
    defs: HashMap<u32, Vec<String>>,
    root: u32,
}

impl RawCircuit {
    fn new(text: &str) -> RawCircuit {
        let mut defs = HashMap::new();
        let (mut n, mut root) = (0, 0);
        for line in text.lines() {
            let line = line.split('#').next().unwrap().trim();
            let tok: Vec<String> = line.split_whitespace().map(String::from).collect();
            match tok.first().map(String::as_str) {
                None => {}
                Some("N") => n = tok[1].parse().unwrap(),
                Some("ROOT") => root = tok[1].parse().unwrap(),
                Some(id) => {
                    defs.insert(id.parse().unwrap(), tok[1..].to_vec());
                }
            }
        }
        RawCircuit { n, defs, root }
    }

    fn eval(&self, id: u32, present: &dyn Fn(u32, u32) -> bool, memo: &mut HashMap<u32, bool>) -> bool {
        if let Some(&v) = memo.get(&id) {
            return v;
        }
        let d = &self.defs[&id];
        let num = |i: usize| d[i].parse::<u32>().unwrap();
        let v = match d[0].as_str() {
            "LEAF" => present(num(2), num(3)) == (d[1] == "+"),
            "AND" => self.eval(num(1), present, memo) && self.eval(num(2), present, memo),
            "OR" => self.eval(num(1), present, memo) || self.eval(num(2), present, memo),
            k => panic!("unknown kind {k}"),
        };
        memo.insert(id, v);
        v
    }
}

fn all_edges(n: u32) -> Vec<Edge> {
    (1..=n).flat_map(|u| (u + 1..=n).map(move |v| Edge::new(u, v).unwrap())).collect()
}

fn assignment(edges: &[Edge], mask: u32) -> Assignment {
    let present = edges.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, e)| *e);
    Assignment { present: EdgeSet::of(&present.collect::<Vec<_>>()) }
}

#[test]
fn corpus_shape() {
    let files = corpus();
    assert_eq!(files.len(), 50);
    for (name, text) in &files {
        let c = Circuit::parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(c.n() <= 5 && c.len() <= 12, "{name}");
    }
}

/// Evaluation, DNF membership and the raw-text evaluator agree on every
/// assignment of every corpus circuit.
#[test]
fn corpus_dnf_oracle_equivalence() {
    let limits = Limits::default();
    for (name, text) in corpus() {
        let c = Circuit::parse(&text).unwrap();
        let raw = RawCircuit::new(&text);
        assert_eq!(raw.n, c.n());
        let table = DnfTable::build(&c, &limits, false).unwrap();
        let terms = table.terms(c.root());
        if c.is_monotone() {
            assert!(terms.iter().all(|t| t.is_positive()), "{name}");
        }
        let edges = all_edges(c.n());
        for mask in 0..1u32 << edges.len() {
            let s = assignment(&edges, mask);
            let by_eval = c.evaluate(&s);
            let by_dnf = terms.iter().any(|t| t.consistent_with(&s));
            let present = |u: u32, v: u32| s.present.contains(Edge::new(u, v).unwrap());
            let by_raw = raw.eval(raw.root, &present, &mut HashMap::new());
            assert_eq!(by_eval, by_dnf, "{name} mask {mask}");
            assert_eq!(by_eval, by_raw, "{name} mask {mask}");
        }
    }
}

#[test]
fn clique_circuit_examples() {
    let limits = Limits::default();
    let c = build_clique_circuit(4, 3, &limits).unwrap();
    let leaves = c.nodes().iter().filter(|n| matches!(n, Node::Leaf(_))).count();
    assert_eq!(leaves, 6);
    let terms = dnf(&c, c.root(), &limits).unwrap();
    assert_eq!(terms.len(), 4);
    assert!(terms.iter().all(|t| t.len() == 3 && t.is_positive()));
    let e = |u, v| Edge::new(u, v).unwrap();
    let tri = Assignment { present: EdgeSet::of(&[e(1, 2), e(1, 3), e(2, 3)]) };
    let path = Assignment { present: EdgeSet::of(&[e(1, 2), e(2, 3), e(3, 4)]) };
    assert!(c.evaluate(&tri) && !c.evaluate(&path));
    assert!(c.evaluate(&Assignment { present: EdgeSet::clique(Subset::full(4)) }));
    assert!(!c.evaluate(&Assignment { present: EdgeSet::EMPTY }));
    let single = build_clique_circuit(4, 4, &limits).unwrap();
    assert!(single.nodes().iter().all(|n| !matches!(n, Node::Or(..))));
    assert_eq!(dnf(&single, single.root(), &limits).unwrap().len(), 1);
}

#[test]
fn dnf_keeps_and_drops_contradictions() {
    let limits = Limits::default();
    let c = Circuit::parse("1 LEAF + 1 2\n2 LEAF + 1 3\n3 AND 1 2\n4 OR 3 1\nROOT 4\n").unwrap();
    let terms = dnf(&c, c.root(), &limits).unwrap();
    assert_eq!(format!("{terms:?}"), "[[+12], [+12 +13]]");
    let c = Circuit::parse("1 LEAF + 1 2\n2 LEAF - 1 2\n3 AND 1 2\nROOT 3\n").unwrap();
    assert!(DnfTable::build(&c, &limits, false).unwrap().terms(c.root())[0].is_contradictory());
    assert!(DnfTable::build(&c, &limits, true).unwrap().terms(c.root()).is_empty());
    assert!(matches!(
        DnfTable::build(&build_clique_circuit(6, 3, &limits).unwrap(), &Limits::new(10), false),
        Err(hamming_forge::Error::TooLarge { .. })
    ));
}

#[test]
fn generated_clique_examples() {
    let limits = Limits::default();
    let c = build_clique_circuit(4, 3, &limits).unwrap();
    let table = DnfTable::build(&c, &limits, false).unwrap();
    assert_eq!(cliques_generated_at(&c, &table, c.root(), 3, &limits).unwrap().len(), 4);
    let leaf = c.node_by_id(1).unwrap();
    let expected: Vec<Subset> = vec![Subset::of(&[1, 2, 3]), Subset::of(&[1, 2, 4])];
    assert_eq!(cliques_generated_at(&c, &table, leaf, 3, &limits).unwrap(), expected);
    let disjoint = Circuit::parse("1 LEAF + 1 2\n2 LEAF + 3 4\n3 AND 1 2\nROOT 3\n").unwrap();
    let t = DnfTable::build(&disjoint, &limits, false).unwrap();
    assert!(cliques_generated_at(&disjoint, &t, disjoint.root(), 3, &limits).unwrap().is_empty());
}

#[test]
fn set_algebra_matches_dnf_on_clique_fixtures() {
    let limits = Limits::default();
    for name in ["clique_4_3.txt", "clique_5_3.txt", "mutilated_6_3.txt"] {
        let c = Circuit::parse(&std::fs::read_to_string(fixtures().join(name)).unwrap()).unwrap();
        let table = DnfTable::build(&c, &limits, false).unwrap();
        let algebra = generated_cliques(&c, 3, &limits).unwrap();
        for node in 0..c.len() {
            assert_eq!(algebra[node], cliques_generated_at(&c, &table, node, 3, &limits).unwrap());
        }
    }
}

#[test]
fn minimal_terms_and_counterexamples() {
    let limits = Limits::default();
    let c = build_clique_circuit(4, 3, &limits).unwrap();
    let table = DnfTable::build(&c, &limits, false).unwrap();
    for &t in table.terms(c.root()) {
        let m = minimal_term(&c, &table, t).unwrap();
        assert_eq!(m.term, t);
        assert!(table.contains(c.root(), m.term));
        // DNF-shaped: the trace is one AND group plus the OR spine.
        assert_eq!(m.trace.iter().filter(|(_, x)| x.len() == 1).count(), 3);
        assert!(!verify_counterexample(&c, &table, t, 3));
    }
    let e12 = Term::positive(EdgeSet::of(&[Edge::new(1, 2).unwrap()]));
    assert!(matches!(minimal_term(&c, &table, e12), Err(hamming_forge::Error::NotInDnf)));

    // A shared subexpression reached twice must be given one consistent term.
    let shared = "1 LEAF + 1 2\n2 LEAF + 1 3\n3 OR 1 2\n4 LEAF + 2 3\n5 AND 3 4\n6 AND 5 3\nROOT 6\n";
    let c = Circuit::parse(shared).unwrap();
    let table = DnfTable::build(&c, &limits, false).unwrap();
    for &t in table.terms(c.root()) {
        let m = minimal_term(&c, &table, t).unwrap();
        assert!(m.term.is_subset_of(t) && table.contains(c.root(), m.term));
        let mut seen = HashMap::new();
        for (id, x) in &m.trace {
            assert!(seen.insert(*id, *x).is_none(), "node {id} visited twice");
        }
    }

    let leaf = Circuit::parse("1 LEAF + 1 2\nROOT 1\nN 4\n").unwrap();
    let table = DnfTable::build(&leaf, &limits, false).unwrap();
    assert!(verify_counterexample(&leaf, &table, e12, 3));

    let m = Circuit::parse(&std::fs::read_to_string(fixtures().join("mutilated_6_3.txt")).unwrap()).unwrap();
    let table = DnfTable::build(&m, &limits, false).unwrap();
    let e = |u, v| Edge::new(u, v).unwrap();
    let short = Term::positive(EdgeSet::of(&[e(1, 2), e(1, 3)]));
    assert!(verify_counterexample(&m, &table, short, 3));
    assert!(m.evaluate(&Assignment { present: short.pos }));
    assert!(!has_clique(short.pos, Subset::full(6), 3));
}

#[test]
fn parser_accepts_any_order_and_rejects_malformed() {
    let ordered = Circuit::parse("1 LEAF + 1 2\n2 LEAF + 1 3\n3 AND 1 2\nROOT 3\n").unwrap();
    let shuffled = Circuit::parse("ROOT 3\n3 AND 1 2\n# comment\n2 LEAF + 1 3\n1 LEAF + 1 2\n").unwrap();
    let limits = Limits::default();
    assert_eq!(dnf(&ordered, ordered.root(), &limits).unwrap(), dnf(&shuffled, shuffled.root(), &limits).unwrap());
    // Lines already in order keep their order.
    assert_eq!(Circuit::parse(&ordered.to_text()).unwrap(), ordered);
    for bad in [
        "",
        "1 LEAF + 1 1\nROOT 1\n",
        "1 LEAF * 1 2\nROOT 1\n",
        "1 LEAF + 1 2\nROOT 1\nROOT 1\n",
        "1 LEAF + 1 2\n1 LEAF + 1 3\nROOT 1\n",
        "1 XOR 2 3\nROOT 1\n",
        "N 3\n1 LEAF + 1 4\nROOT 1\n",
        "1 LEAF + 1 17\nROOT 1\n",
    ] {
        assert!(matches!(Circuit::parse(bad), Err(hamming_forge::Error::Parse { .. })), "{bad:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Random monotone circuits: evaluation is monotone, agrees with DNF
    /// membership, and survives a text round trip.
    #[test]
    fn random_monotone_circuits(
        leaves in proptest::collection::vec((1u32..=4, 1u32..=4), 1..5),
        gates in proptest::collection::vec((any::<bool>(), any::<u16>(), any::<u16>()), 0..7),
    ) {
        let mut text = String::from("N 4\n");
        let mut id = 0;
        for (u, v) in &leaves {
            id += 1;
            let (u, v) = if u == v { (*u, u % 4 + 1) } else { (*u, *v) };
            text += &format!("{id} LEAF + {u} {v}\n");
        }
        for (and, a, b) in &gates {
            let (a, b) = (1 + *a as u32 % id, 1 + *b as u32 % id);
            id += 1;
            text += &format!("{id} {} {a} {b}\n", if *and { "AND" } else { "OR" });
        }
        text += &format!("ROOT {id}\n");
        let c = Circuit::parse(&text).unwrap();
        prop_assert_eq!(Circuit::parse(&c.to_text()).unwrap(), c.clone());
        let table = DnfTable::build(&c, &Limits::default(), false).unwrap();
        let edges = all_edges(4);
        for mask in 0..1u32 << edges.len() {
            let s = assignment(&edges, mask);
            let v = c.evaluate(&s);
            prop_assert_eq!(v, table.terms(c.root()).iter().any(|t| t.consistent_with(&s)));
            if v {
                for extra in &edges {
                    let more = Assignment { present: s.present.with(*extra) };
                    prop_assert!(c.evaluate(&more));
                }
            }
        }
    }
}
