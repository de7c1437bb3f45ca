//! Coefficient systems, hat actions and the etale pair on small windows.

use std::sync::Arc;

use btlab::coeff::{system_window, CoeffSystem, SystemKind};
use btlab::linalg::Lambda;
use btlab::localfield::{LocalField, LocalFieldSpec};
use btlab::locaut::{u_sigma_gens, AutCtx};
use btlab::phigamma::{build_pair, check_etale, halftree_window};
use btlab::tree::{tree_for_depth, Center, Edge, Tree, Vertex};

fn setup() -> (Arc<Tree>, Lambda) {
    let k = Arc::new(LocalField::new(LocalFieldSpec::qp(2, 40)).unwrap());
    (Arc::new(tree_for_depth(k, 6).unwrap()), Lambda::new(2, 1).unwrap())
}

fn sigma_system(t: &Arc<Tree>, kind: SystemKind, r: u32, l: Lambda) -> CoeffSystem {
    let w = system_window(t, Center::Edge(Edge::sigma()), r).unwrap();
    CoeffSystem::build(t.clone(), kind, None, 1, w, l).unwrap()
}

#[test]
fn boundary_lengths() {
    let (t, l) = setup();
    // constant system on a finite tree: H0 = Lambda, H1 = 0
    let h = sigma_system(&t, SystemKind::Constant, 3, l).homology();
    assert_eq!((h.h0_len, h.h1_len), (1, 0));
    let f = sigma_system(&t, SystemKind::Steinberg, 3, l);
    assert!(f.check_c_axioms(1).unwrap().pass);
    assert!(f.check_hyp123().unwrap().pass);
}

#[test]
fn hat_action_agrees_with_matrix_action() {
    let (t, l) = setup();
    let ctx = AutCtx::new(t.clone(), 1, 5).unwrap();
    for kind in [SystemKind::Constant, SystemKind::Steinberg] {
        let f = sigma_system(&t, kind, 3, l);
        for g in u_sigma_gens(&t, 1, 3) {
            let a = ctx.from_matrix(&g).unwrap();
            let hat = f.hat_action(&ctx, &a).unwrap();
            let mat = f.group_action(&g).unwrap();
            assert_eq!(hat.c0, mat.c0);
            assert_eq!(hat.c1, mat.c1);
        }
    }
}

#[test]
fn hat_action_is_multiplicative() {
    let (t, l) = setup();
    let ctx = AutCtx::new(t.clone(), 1, 5).unwrap();
    let f = sigma_system(&t, SystemKind::Steinberg, 3, l);
    let gens = ctx.standard_gens().unwrap();
    for (i, a) in gens.iter().enumerate().step_by(2) {
        let b = &gens[(i * 7 + 3) % gens.len()];
        let ab = a.compose(b).unwrap();
        let m = f.hat_action(&ctx, &ab).unwrap().c0;
        let ma = f.hat_action(&ctx, a).unwrap().c0;
        let mb = f.hat_action(&ctx, b).unwrap().c0;
        assert!(m == ma.mul(&l, &mb) || m == mb.mul(&l, &ma), "generator pair {i}");
    }
}

#[test]
fn invariants_and_roundtrip() {
    let (t, l) = setup();
    let ctx = AutCtx::new(t.clone(), 1, 4).unwrap();
    let ctxp = AutCtx::new_at(t.clone(), 1, 4, Center::Vertex(Vertex::x_plus())).unwrap();
    for kind in [SystemKind::Constant, SystemKind::Steinberg] {
        let f = sigma_system(&t, kind, 2, l);
        let h = f.homology();
        let r = f.hat_invariants(&ctx, &h, &Center::Edge(Edge::sigma())).unwrap();
        assert!(r.bijective && r.image_fixed, "{kind:?} {r:?}");
        assert_eq!(r.f_len, r.inv_len);
        let w = system_window(&t, Center::Vertex(Vertex::x_plus()), 2).unwrap();
        let f = CoeffSystem::build(t.clone(), kind, None, 1, w, l).unwrap();
        assert!(f.roundtrip(&ctxp).unwrap().pass, "{kind:?}");
    }
}

#[test]
fn doubled_vertex_breaks_the_axioms() {
    let (t, l) = setup();
    let f = sigma_system(&t, SystemKind::Constant, 3, l);
    assert!(f.check_c_axioms(1).unwrap().pass);
    let d = f.with_doubled_vertex(0);
    let ax = d.check_c_axioms(1).unwrap();
    assert!(!ax.pass);
    assert!(ax.checks.iter().any(|c| !c.generates || !c.image_is_invariants));
    assert_eq!(f.zero_like().homology().h0_len, 0);
}

#[test]
fn etale_pair_shapes() {
    let (t, l) = setup();
    // frozen from the constant and Steinberg windows of depth 4 and 5
    let frozen = [(SystemKind::Constant, 1, (1, 0)), (SystemKind::Steinberg, 1, (32, 31)), (SystemKind::Steinberg, 2, (64, 63))];
    for (kind, m, (d, dp)) in frozen {
        let f = CoeffSystem::build(t.clone(), kind, None, 1, halftree_window(&t, m + 3).unwrap(), l).unwrap();
        let pair = build_pair(&f).unwrap();
        let s = pair.summary();
        assert_eq!((s.d_len, s.dprime_len, s.coker_len), (d, dp, 1));
        let r = check_etale(&pair, m).unwrap();
        assert!(r.pass && r.psi_del_phi && r.phi_preserves_dprime, "{kind:?} {m} {r:?}");
    }
}
