use std::sync::Arc;

use proptest::prelude::*;

use btlab::linalg::{snf, Lambda, Mat};
use btlab::localfield::{LocalField, LocalFieldSpec};
use btlab::locaut::HGroup;
use btlab::phigamma::{dualize, eval_group_like, iwasawa_normal_form, FinMod, IwasawaTruncSpec, IwasawaWord, Letter};
use btlab::tree::{tree_for_depth, Tree};

fn tree(p: u32) -> Tree {
    tree_for_depth(Arc::new(LocalField::new(LocalFieldSpec::qp(p, 40)).unwrap()), 5).unwrap()
}

fn mat(p: u64, r: u32, rows: usize, cols: usize, seed: &[u64]) -> Mat {
    let md = p.pow(r);
    let mut m = Mat::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m.set(i, j, seed[(i * cols + j) % seed.len()] % md);
        }
    }
    m
}

fn letters(p: u64, top: u32) -> Vec<Letter> {
    (0..=top).flat_map(|k| (0..p.pow(k)).map(move |i| Letter { k, i })).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn distance_is_a_metric(p in 2u32..=3, a in any::<usize>(), b in any::<usize>(), c in any::<usize>()) {
        let t = tree(p);
        let w = t.sigma_ball(3).unwrap();
        let (x, y, z) = (&w.verts[a % w.len()], &w.verts[b % w.len()], &w.verts[c % w.len()]);
        prop_assert_eq!(t.distance(x, y), t.distance(y, x));
        prop_assert_eq!(t.distance(x, x), 0);
        prop_assert!(t.distance(x, z) <= t.distance(x, y) + t.distance(y, z));
    }

    #[test]
    fn unipotents_act_by_isometries(p in 2u32..=3, a in any::<usize>(), b in any::<usize>(), digit in any::<u8>(), pos in 0i32..3) {
        let t = tree(p);
        let w = t.sigma_ball(2).unwrap();
        let (x, y) = (&w.verts[a % w.len()], &w.verts[b % w.len()]);
        let g = t.n_mat(t.k.fe_digit(digit % p as u8, pos, t.n));
        let gx = t.act(&g, x).unwrap();
        let gy = t.act(&g, y).unwrap();
        prop_assert_eq!(t.distance(&gx, &gy), t.distance(x, y));
        let back = t.act(&t.inv(&g).unwrap(), &gx).unwrap();
        prop_assert_eq!(&back, x);
    }

    #[test]
    fn snf_lengths_add_up(p in prop::sample::select(vec![2u64, 3]), r in 1u32..=2, rows in 1usize..5, cols in 1usize..5,
                          seed in prop::collection::vec(any::<u64>(), 1..20)) {
        let l = Lambda::new(p, r).unwrap();
        let m = mat(p, r, rows, cols, &seed);
        let s = snf(&l, &m);
        prop_assert_eq!(s.image_len(&l) + s.coker_len(&l), r * rows as u32);
        let x: Vec<u64> = (0..cols).map(|j| seed[j % seed.len()] % l.modulus()).collect();
        let b = m.mul_vec(&l, &x);
        let y = s.solve(&l, &b).expect("image vector must be solvable");
        prop_assert_eq!(m.mul_vec(&l, &y), b);
    }

    #[test]
    fn dual_has_the_same_length(p in prop::sample::select(vec![2u64, 3]), r in 1u32..=2, n in 1usize..5, k in 0usize..4,
                                seed in prop::collection::vec(any::<u64>(), 1..20)) {
        let l = Lambda::new(p, r).unwrap();
        let m = FinMod { n, rel: mat(p, r, n, k, &seed) };
        let d = dualize(&l, &m);
        prop_assert_eq!(d.len, m.len(&l));
        for j in 0..d.funcs.cols {
            prop_assert!(d.contains(&l, &m.rel, &d.funcs.col(j)));
        }
    }

    #[test]
    fn hgroup_is_a_group(i in any::<usize>(), j in any::<usize>(), k in any::<usize>()) {
        let g = HGroup::new(Arc::new(LocalField::new(LocalFieldSpec::qp(2, 8)).unwrap()), 1, 2, 3).unwrap();
        let all = g.enumerate(10_000).unwrap();
        let (a, b, c) = (&all[i % all.len()], &all[j % all.len()], &all[k % all.len()]);
        let ab = g.mul(a, b).unwrap();
        prop_assert_eq!(g.mul(&ab, c).unwrap(), g.mul(a, &g.mul(b, c).unwrap()).unwrap());
        prop_assert_eq!(g.mul(&g.inv(a).unwrap(), a).unwrap(), g.identity());
    }

    #[test]
    fn normal_form_is_idempotent_and_exact(p in 2u64..=3, e in 1u32..=2, picks in prop::collection::vec(any::<usize>(), 0..4)) {
        let top = if p == 2 { 2 } else { 1 };
        let spec = IwasawaTruncSpec { p, top, r: 2, degree: 4, e };
        let alphabet = letters(p, top);
        let w: Vec<Letter> = picks.iter().map(|&i| alphabet[i % alphabet.len()]).collect();
        let word = IwasawaWord::word(&w);
        let nf = iwasawa_normal_form(&word, &spec).unwrap();
        prop_assert_eq!(iwasawa_normal_form(&nf, &spec).unwrap(), nf.clone());
        prop_assert_eq!(eval_group_like(&spec, &nf).unwrap(), eval_group_like(&spec, &word).unwrap());
    }
}
