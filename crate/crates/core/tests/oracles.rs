//! Independent oracles for the exact computations. Frozen values were
//! produced by the oracle code in this file.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::Arc;

use btlab::cli::{run_suite, SuiteConfig, SuiteName};
use btlab::coeff::{system_window, CoeffSystem, SystemKind};
use btlab::hecke::{convolve, coset_decompose, hecke_act, DoubleCoset, HeckeElement};
use btlab::linalg::{Lambda, Mat};
use btlab::localfield::{LocalField, LocalFieldSpec};
use btlab::locaut::{check_presentation, conjugate_index, HGroup};
use btlab::phigamma::{dualize, iwasawa_normal_form, FinMod, IwasawaTruncSpec, IwasawaWord, Letter};
use btlab::report::{emit_report, parse_report, Format};
use btlab::tree::{tree_for_depth, Center, Edge, Tree, Vertex};
use btlab::BtError;

fn qp(p: u32) -> Arc<LocalField> {
    Arc::new(LocalField::new(LocalFieldSpec::qp(p, 40)).unwrap())
}

fn bfs_oracle(tree: &Tree, ball: &HashSet<Vertex>, s: &Vertex) -> HashMap<Vertex, u32> {
    let mut dist = HashMap::from([(s.clone(), 0u32)]);
    let mut queue = VecDeque::from([s.clone()]);
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        for w in tree.neighbors(&v).unwrap() {
            if ball.contains(&w) && !dist.contains_key(&w) {
                dist.insert(w.clone(), d + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

#[test]
fn tree_metric_matches_bfs() {
    for p in [2, 3] {
        let tree = tree_for_depth(qp(p), 4).unwrap();
        let w = tree.sigma_ball(4).unwrap();
        let ball: HashSet<Vertex> = w.verts.iter().cloned().collect();
        // |Z^(4)(sigma)| = 2 (1 + q + ... + q^4)
        assert_eq!(w.len() as u32, 2 * (0..=4).map(|i| p.pow(i)).sum::<u32>());
        for x in &w.verts {
            let d = bfs_oracle(&tree, &ball, x);
            for y in &w.verts {
                assert_eq!(d[y], tree.distance(x, y), "{x} {y}");
            }
        }
    }
}

#[test]
fn sigma_has_two_endpoints_at_distance_one() {
    let tree = tree_for_depth(qp(2), 3).unwrap();
    let [a, b] = Edge::sigma().endpoints();
    assert_eq!(tree.distance(&a, &b), 1);
    assert!(a == Vertex::x_plus() || b == Vertex::x_plus());
}

/// Closure of permutations of Z/p^d given as integer maps.
fn int_closure(gens: &[Vec<u32>]) -> usize {
    let n = gens[0].len();
    let id: Vec<u32> = (0..n as u32).collect();
    let mut seen = HashSet::from([id.clone()]);
    let mut queue = VecDeque::from([id]);
    while let Some(g) = queue.pop_front() {
        for s in gens {
            let h: Vec<u32> = g.iter().map(|&x| s[x as usize]).collect();
            if seen.insert(h.clone()) {
                queue.push_back(h);
            }
        }
    }
    seen.len()
}

/// Index oracle over Z_p: A is generated by x -> x + p^j on the class
/// a mod p^k (j >= k + e - 1), B by the same moves with k = m only.
fn index_oracle(p: u32, e: u32, m: u32) -> u64 {
    let d = m + e;
    let n = p.pow(d);
    let mv = |k: u32, a: u32, j: u32| -> Vec<u32> {
        (0..n).map(|x| if x % p.pow(k) == a { (x + p.pow(j)) % n } else { x }).collect()
    };
    let mut a = Vec::new();
    for k in 0..d {
        for r in 0..p.pow(k) {
            for j in (k + e - 1)..d {
                a.push(mv(k, r, j));
            }
        }
    }
    let b: Vec<Vec<u32>> = (0..p.pow(m)).map(|r| mv(m, r, m + e - 1)).collect();
    (int_closure(&a) / int_closure(&b)) as u64
}

#[test]
fn conjugate_index_matches_integer_oracle() {
    let frozen = [((2, 1, 1), 2u64), ((2, 1, 2), 8), ((3, 2, 1), 3), ((2, 2, 1), 2), ((3, 1, 1), 3)];
    for ((p, e, m), want) in frozen {
        assert_eq!(index_oracle(p, e, m), want);
        let k = qp(p);
        let tree = tree_for_depth(k.clone(), m + e + 2).unwrap();
        assert_eq!(conjugate_index(&k, &tree, e, m, 1_000_000).unwrap(), want, "({p},{e},{m})");
    }
}

#[test]
fn hgroup_laws_exhaustive() {
    let g = HGroup::new(qp(2), 1, 1, 2).unwrap();
    let all = g.enumerate(1000).unwrap();
    assert_eq!(all.len() as u128, g.order_formula());
    let id = g.identity();
    let perms: Vec<Vec<u32>> = all.iter().map(|x| g.end_perm(x).unwrap()).collect();
    let mut left = true;
    let mut right = true;
    for (i, a) in all.iter().enumerate() {
        assert_eq!(g.mul(a, &id).unwrap(), *a);
        assert_eq!(g.mul(&id, a).unwrap(), *a);
        assert_eq!(g.mul(a, &g.inv(a).unwrap()).unwrap(), id);
        for (j, b) in all.iter().enumerate() {
            let ab = g.mul(a, b).unwrap();
            let p = g.end_perm(&ab).unwrap();
            left &= p == perms[j].iter().map(|&x| perms[i][x as usize]).collect::<Vec<_>>();
            right &= p == perms[i].iter().map(|&x| perms[j][x as usize]).collect::<Vec<_>>();
            for c in all.iter().step_by(3) {
                assert_eq!(g.mul(&ab, c).unwrap(), g.mul(a, &g.mul(b, c).unwrap()).unwrap());
            }
        }
    }
    assert!(left || right, "action is not a homomorphism in either order");
}

#[test]
fn presentation_holds_at_q2() {
    for e in [1, 2] {
        let r = check_presentation(qp(2), e, 1, 1_000_000).unwrap();
        assert!(r.ok, "{r:?}");
        assert_eq!(r.order, r.order_formula);
        assert_eq!(r.order, r.image * r.kernel);
    }
}

#[test]
fn t_double_coset_has_q_cosets() {
    for p in [2, 3] {
        let tree = tree_for_depth(qp(p), 5).unwrap();
        for k in [1, -1] {
            assert_eq!(coset_decompose(&tree, &tree.t_pow(k), 1, 10_000).unwrap().len(), p as usize);
        }
        assert_eq!(coset_decompose(&tree, &tree.identity(), 1, 10_000).unwrap().len(), 1);
    }
}

#[test]
fn convolution_of_t_and_inverse() {
    let tree = tree_for_depth(qp(2), 5).unwrap();
    let l = Lambda::new(2, 2).unwrap();
    let a = HeckeElement::single(DoubleCoset::new(&tree, tree.t_pow(1), 1).unwrap());
    let b = HeckeElement::single(DoubleCoset::new(&tree, tree.t_pow(-1), 1).unwrap());
    for (x, y) in [(&a, &b), (&b, &a)] {
        let ab = convolve(&tree, &l, x, y).unwrap();
        let mut shape: Vec<(usize, u64)> = ab.terms.iter().map(|(c, n)| (c.cosets.len(), *n)).collect();
        shape.sort();
        assert_eq!(shape, vec![(1, 2), (2, 1)]);
    }
}

#[test]
fn hecke_operator_on_constant_system_is_q() {
    let tree = Arc::new(tree_for_depth(qp(2), 5).unwrap());
    let l = Lambda::new(2, 2).unwrap();
    let w = system_window(&tree, Center::Edge(Edge::sigma()), 3).unwrap();
    let f = CoeffSystem::build(tree.clone(), SystemKind::Constant, None, 1, w, l).unwrap();
    let h = f.homology();
    assert_eq!(h.h0.dim(), 1);
    let c = DoubleCoset::new(&tree, tree.t_pow(1), 1).unwrap();
    assert_eq!(hecke_act(&f, &h, &[1], &c).unwrap(), vec![2]);
    assert_eq!(hecke_act(&f, &h, &[3], &c).unwrap(), vec![2]);
}

#[test]
fn double_coset_rejects_higher_level() {
    let tree = tree_for_depth(qp(2), 5).unwrap();
    assert!(DoubleCoset::new(&tree, tree.t_pow(1), 2).is_err());
}

#[test]
fn dual_of_cyclic_modules() {
    let l = Lambda::new(3, 2).unwrap();
    // Z/9 + Z/3 + 0
    let m = FinMod { n: 3, rel: Mat::from_rows(&[vec![0, 0], vec![3, 0], vec![0, 1]]) };
    assert_eq!(m.len(&l), 3);
    assert_eq!(dualize(&l, &m).len, 3);
    assert_eq!(dualize(&l, &FinMod::free(2)).len, 4);
}

#[test]
fn iwasawa_rewrite_moves_lower_level_left() {
    let spec = IwasawaTruncSpec { p: 2, top: 1, r: 2, degree: 4, e: 1 };
    let u = |k, i| Letter { k, i };
    let nf = iwasawa_normal_form(&IwasawaWord::word(&[u(1, 0), u(0, 0)]), &spec).unwrap();
    assert_eq!(nf, IwasawaWord::word(&[u(0, 0), u(1, 1)]));
    let nf = iwasawa_normal_form(&IwasawaWord::word(&[u(1, 1), u(1, 0)]), &spec).unwrap();
    assert_eq!(nf, IwasawaWord::word(&[u(1, 0), u(1, 1)]));
    let long = IwasawaWord::word(&[u(0, 0); 5]);
    assert!(matches!(iwasawa_normal_form(&long, &spec), Err(BtError::DegreeBoundExceeded(4))));
}

#[test]
fn report_json_roundtrip_and_determinism() {
    let cfg = SuiteConfig::default();
    let a = run_suite(&cfg, SuiteName::Tree, 11, false).unwrap();
    let b = run_suite(&cfg, SuiteName::Tree, 11, false).unwrap();
    assert_eq!(emit_report(&a, Format::Json).unwrap(), emit_report(&b, Format::Json).unwrap());
    assert_eq!(parse_report(&emit_report(&a, Format::Json).unwrap()).unwrap(), a);
    assert!(a.all_pass());
}

#[test]
fn config_validation() {
    let bad: SuiteConfig = toml::from_str("p = 4").unwrap();
    assert!(matches!(bad.validate(), Err(BtError::Config(_))));
    let bad: SuiteConfig = toml::from_str("p = 2\nlambda = [2]").unwrap();
    assert!(bad.validate().is_err());
    assert!(toml::from_str::<SuiteConfig>("unknown = 1").is_err());
    let ok: SuiteConfig = toml::from_str("p = 3\nequal_char = true\nf = 2").unwrap();
    assert!(ok.validate().is_ok());
}
