use hamming_forge::binom::ln_binom;
use hamming_forge::generator::*;
use hamming_forge::{Limits, SetFamily, Subset};
use num_bigint::BigUint;
use proptest::prelude::*;

const TOL: f64 = 1e-9;

fn two_triples() -> SetFamily {
    SetFamily::new(7, 3, [Subset::of(&[1, 2, 3]), Subset::of(&[1, 4, 6])]).unwrap()
}

fn family(n: u32, m: u32, keep: impl Fn(Subset) -> bool) -> SetFamily {
    let members = hamming_forge::subset::Combinations::new(Subset::full(n), m).filter(|s| keep(*s));
    SetFamily::new(n, m, members).unwrap()
}

/// `κ(Û_g)` recomputed from scratch, `None` when no member contains `g`.
fn oracle_kappa_hat(u: &SetFamily, g: Subset) -> Option<f64> {
    let count = u.members().iter().filter(|s| g.is_subset_of(**s)).count();
    (count > 0).then(|| ln_binom((u.n() - g.len()) as u64, (u.m() - g.len()) as i64) - (count as f64).ln())
}

/// Checks every phase-one postcondition independently of the library.
fn check_phase1(u: &SetFamily, res: &GeneratorResult) {
    let ku = u.sparsity().unwrap().value();
    let g = res.g;
    let hat = oracle_kappa_hat(u, g).expect("some member contains g");
    assert!((hat - res.kappa_ug_hat.value()).abs() < 1e-9);
    assert!(hat <= ku - res.r * g.len() as f64 + TOL, "kappa-hat inequality");
    assert!(g.len() as f64 <= ku / res.r + TOL, "size bound");
    assert!(res.maximal);
    for x in (Subset::full(u.n()) - g).iter() {
        let bigger = g.with(x);
        if bigger.len() > u.m() {
            continue;
        }
        if let Some(k) = oracle_kappa_hat(u, bigger) {
            assert!(k > ku - res.r * bigger.len() as f64 + TOL, "g + {x} would still be admissible");
        }
    }
}

/// Exact validity recount over `l`-sets of `[n]`, with a witness per valid set.
fn oracle_validity(u: &SetFamily, g: Subset, l: u32) -> (u64, u64) {
    let mut valid = 0;
    let mut total = 0;
    for y in hamming_forge::subset::Combinations::new(Subset::full(u.n()), l) {
        total += 1;
        let hull = g | y;
        if u.members().iter().any(|s| g.is_subset_of(*s) && s.is_subset_of(hull)) {
            valid += 1;
            let s = witness(u, g, y).expect("witness for a valid set");
            assert!(g.is_subset_of(s) && s.is_subset_of(hull) && u.contains(s));
        } else {
            assert!(witness(u, g, y).is_none());
        }
    }
    (valid, total)
}

#[test]
fn restriction_examples() {
    let u = two_triples();
    assert_eq!(restrict(&u, Subset::EMPTY).unwrap().family, u);
    let r = restrict(&u, Subset::of(&[1])).unwrap();
    let back: Vec<Vec<u32>> = r.family.members().iter().map(|s| r.original(*s).to_vec()).collect();
    assert_eq!(back, vec![vec![2, 3], vec![4, 6]]);
    assert_eq!(r.family.n(), 6);
    assert!(restrict(&u, Subset::of(&[5])).unwrap().family.is_empty());
}

#[test]
fn phase1_examples() {
    let limits = Limits::default();
    let full = SetFamily::full(6, 2, &limits).unwrap();
    assert_eq!(phase1_find_generator(&full, 5).unwrap().g, Subset::EMPTY);
    let star = family(8, 2, |s| s.contains(1));
    let res = phase1_find_generator(&star, 5).unwrap();
    let ku = star.sparsity().unwrap().value();
    // r <= κ(U) here, so 1 is admissible and greedy keeps going to a maximal
    // set; {1} alone is not maximal because {1, x} is admissible too.
    assert!(res.r <= ku);
    assert!(res.g.contains(1));
    assert_eq!(res.g, Subset::of(&[1, 2]));
    check_phase1(&star, &res);
    assert!(phase1_find_generator(&star, 4).is_err());
}

#[test]
fn validity_examples() {
    let limits = Limits::default();
    let single = SetFamily::new(6, 2, [Subset::of(&[1, 2])]).unwrap();
    let r = validity_report(&single, Subset::of(&[1, 2]), 4, Mode::Exact, &limits).unwrap();
    assert_eq!((r.valid_count, r.total_count), (BigUint::from(6u32), BigUint::from(6u32)));
    assert!(r.complement_sparsity.is_infinite());
    let r = validity_report(&two_triples(), Subset::EMPTY, 5, Mode::Exact, &limits).unwrap();
    assert_eq!((r.valid_count, r.total_count), (BigUint::from(11u32), BigUint::from(21u32)));
    assert!((r.complement_sparsity.value() - (21f64 / 10.0).ln()).abs() < TOL);
}

#[test]
fn sampled_agrees_with_exact() {
    let limits = Limits::default();
    let u = SetFamily::random(12, 3, 40, 5, &limits).unwrap();
    let g = Subset::EMPTY;
    let exact = validity_report(&u, g, 6, Mode::Exact, &limits).unwrap();
    for seed in 0..5 {
        let s = validity_report(&u, g, 6, Mode::Sampled { budget: 20_000, seed }, &limits).unwrap();
        let [lo, hi] = s.ci99.unwrap();
        assert!(lo <= exact.valid_fraction() && exact.valid_fraction() <= hi, "seed {seed}");
        assert_eq!(s.prng, Some(PRNG));
        assert_eq!(s, validity_report(&u, g, 6, Mode::Sampled { budget: 20_000, seed }, &limits).unwrap());
    }
}

#[test]
fn phase2_examples() {
    let limits = Limits::default();
    let star = family(9, 2, |s| s.contains(1));
    let g = Subset::of(&[1]);
    let one = phase2_boost(&star, g, 3, 1, &limits).unwrap();
    assert_eq!(one, validity_report(&star, g, 3, Mode::Exact, &limits).unwrap());
    let two = phase2_boost(&star, g, 3, 2, &limits).unwrap();
    assert!(two.complement_sparsity >= one.complement_sparsity);
    let full = SetFamily::full(9, 2, &limits).unwrap();
    let audit = phase2_sequence(&full, Subset::EMPTY, 3, 3, &limits).unwrap();
    assert!(audit.reports.iter().all(|r| r.complement_sparsity.is_infinite()));
    assert!(audit.monotone);
    assert!(phase2_boost(&star, g, 3, 5, &limits).is_err());
}

#[test]
fn find_generator_examples() {
    let limits = Limits::default();
    let cfg = GeneratorConfig::default();
    let full = SetFamily::full(6, 2, &limits).unwrap();
    let rep = find_generator(&full, 4, 1.0, &cfg, &limits).unwrap();
    assert_eq!(rep.g, Subset::EMPTY);
    assert!(rep.success);
    let inner = family(10, 2, |s| s.is_subset_of(Subset::full(4)));
    let rep = find_generator(&inner, 8, 1.0, &cfg, &limits).unwrap();
    let (valid, total) = oracle_validity(&inner, rep.g, 8);
    assert_eq!((rep.valid_count, rep.total_count), (BigUint::from(valid), BigUint::from(total)));
    // The two-triple family with the generator forced empty reproduces the 11 of 21 count.
    let empty = GeneratorConfig { max_size: Some(0), ..cfg };
    let rep = find_generator(&two_triples(), 5, 1.0, &empty, &limits).unwrap();
    assert_eq!((rep.valid_count, rep.total_count), (BigUint::from(11u32), BigUint::from(21u32)));
}

#[test]
fn sparse_random_success_flag_matches_recount() {
    let limits = Limits::default();
    for seed in 0..10 {
        let u = SetFamily::random(12, 2, 6, seed, &limits).unwrap();
        for l in [4, 8, 12] {
            let rep = find_generator(&u, l, 1.0, &GeneratorConfig::default(), &limits).unwrap();
            let (valid, total) = oracle_validity(&u, rep.g, l);
            let cs = if valid == total { f64::INFINITY } else { (total as f64 / (total - valid) as f64).ln() };
            assert_eq!(rep.success, cs >= 1.0, "seed {seed} l {l}");
        }
    }
}

/// The generator acceptance suite: 100 seeded families with `n <= 12`.
#[test]
fn phase1_postconditions_on_seeded_families() {
    let limits = Limits::default();
    for seed in 0..100u64 {
        let n = 5 + (seed % 8) as u32;
        let m = 1 + (seed / 8 % 3) as u32;
        let cap = hamming_forge::binom::binom_u64(n, m) as usize;
        let size = 1 + (seed as usize * 7) % cap.min(60);
        let u = SetFamily::random(n, m, size, seed, &limits).unwrap();
        let l0 = (m * m + 1).min(n);
        if m * m < l0 {
            check_phase1(&u, &phase1_find_generator(&u, l0).unwrap());
        }
        let rep = find_generator(&u, n.min(m + 4), 1.0, &GeneratorConfig::default(), &limits).unwrap();
        check_phase1(&u, &rep.generator);
        let (valid, _) = oracle_validity(&u, rep.g, rep.l);
        assert_eq!(rep.valid_count, BigUint::from(valid));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Any explicit `r` yields a maximal generator meeting both inequalities.
    #[test]
    fn greedy_meets_invariants(seed in 0u64..10_000, n in 4u32..=10, r in 0.05f64..3.0) {
        let limits = Limits::default();
        let m = 1 + (seed % 3) as u32;
        let cap = hamming_forge::binom::binom_u64(n, m) as usize;
        let u = SetFamily::random(n, m, 1 + seed as usize % cap, seed, &limits).unwrap();
        let res = greedy_generator(&u, r, None).unwrap();
        prop_assert!(res.satisfies_invariants(u.sparsity().unwrap().value()));
        check_phase1(&u, &res);
    }
}
