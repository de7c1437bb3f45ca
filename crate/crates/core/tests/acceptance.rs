//! Acceptance suite: one PASS/FAIL line per criterion. Tolerances are exact
//! equality throughout; time limits are pinned below and measured on this
//! binary's single thread.
//!
//! Criteria listed in `KNOWN_GAPS` print FAIL without failing the target;
//! the analysis lives in the decision ledger.

use std::sync::Arc;
use std::time::{Duration, Instant};

use btlab::coeff::{system_window, CoeffSystem, SystemKind};
use btlab::hecke::{kernel_window_check, packet_invariants, HeckeOperatorSpec, Induction};
use btlab::linalg::Lambda;
use btlab::localfield::{LocalField, LocalFieldSpec};
use btlab::locaut::{check_presentation, conjugate_index, is_p_power, AutCtx};
use btlab::phigamma::{build_pair, check_etale, generator_bound, halftree_window, iwasawa_vs_group, qp_fact_check, IwasawaTruncSpec};
use btlab::tree::{tree_for_depth, Center, Edge, Tree, Vertex};
use btlab::Result;

/// The index formula disagrees with the computed index at (q,e,m) = (3,2,1).
const KNOWN_GAPS: &[u32] = &[3];

const SYSTEMS: [SystemKind; 2] = [SystemKind::Constant, SystemKind::Steinberg];

fn field(spec: LocalFieldSpec) -> Arc<LocalField> {
    Arc::new(LocalField::new(spec).expect("field"))
}

fn qp(p: u32) -> Arc<LocalField> {
    field(LocalFieldSpec::qp(p, 40))
}

fn tree(k: &Arc<LocalField>, depth: u32) -> Result<Arc<Tree>> {
    Ok(Arc::new(tree_for_depth(k.clone(), depth)?))
}

fn f2() -> Lambda {
    Lambda::new(2, 1).expect("F_2")
}

type Outcome = Result<(bool, String)>;

fn c1() -> Outcome {
    let mut pairs = 0usize;
    for p in [2, 3] {
        let t = tree(&qp(p), 4)?;
        let w = t.sigma_ball(4)?;
        for i in 0..w.len() {
            let b = w.bfs(i);
            for j in 0..w.len() {
                if b[j] != t.distance(&w.verts[i], &w.verts[j]) {
                    return Ok((false, format!("q={p} {} {}", w.verts[i], w.verts[j])));
                }
                pairs += 1;
            }
        }
    }
    Ok((true, format!("{pairs} pairs")))
}

fn c2() -> Outcome {
    let mut orders = Vec::new();
    for p in [2, 3] {
        for e in [1, 2] {
            for m in [1, 2] {
                let d = m + e + 1;
                let ctx = AutCtx::new(tree(&qp(p), d)?, e, d)?;
                let o = ctx.closure_image_order(&ctx.standard_gens()?, m, 5_000_000)?;
                if !is_p_power(o, p as usize) {
                    return Ok((false, format!("({p},{e},{m}) order {o}")));
                }
                orders.push(o);
            }
        }
    }
    Ok((true, format!("orders {orders:?}")))
}

fn c3() -> Outcome {
    let mut ok = true;
    let mut out = Vec::new();
    for ((p, e, m), want) in [((2, 1, 1), 2u64), ((2, 1, 2), 8), ((3, 2, 1), 9)] {
        let k = qp(p);
        let t = tree_for_depth(k.clone(), m + e + 2)?;
        let got = conjugate_index(&k, &t, e, m, 5_000_000)?;
        ok &= got == want;
        out.push(format!("({p},{e},{m}) {got} vs {want}"));
    }
    Ok((ok, out.join(", ")))
}

fn c4() -> Outcome {
    let mut out = Vec::new();
    for e in [1, 2] {
        let r = check_presentation(qp(2), e, 1, 5_000_000)?;
        if !r.ok {
            return Ok((false, format!("e={e} {r:?}")));
        }
        out.push(format!("e={e} |H|={} kernel {}", r.order, r.kernel));
    }
    Ok((true, out.join(", ")))
}

fn c5() -> Outcome {
    let r = iwasawa_vs_group(&IwasawaTruncSpec { p: 2, top: 1, r: 2, degree: 4, e: 1 })?;
    let quotients = r.relations.iter().filter(|x| x.kind == "quotient").count();
    Ok((r.pass && r.quotient_pass && quotients > 0, format!("{} relations, {quotients} quotient", r.relations.len())))
}

fn c6() -> Outcome {
    let t = tree(&qp(2), 4)?;
    let ctx = AutCtx::new(t.clone(), 1, 4)?;
    let mut out = Vec::new();
    for kind in SYSTEMS {
        let w = system_window(&t, Center::Edge(Edge::sigma()), 2)?;
        let f = CoeffSystem::build(t.clone(), kind, None, 1, w, f2())?;
        let r = f.hat_invariants(&ctx, &f.homology(), &Center::Edge(Edge::sigma()))?;
        if !(r.bijective && r.inv_len == r.f_len) {
            return Ok((false, format!("{kind:?} {r:?}")));
        }
        out.push(format!("{kind:?} {}={}", r.inv_len, r.f_len));
    }
    Ok((true, out.join(", ")))
}

fn c7() -> Outcome {
    let t = tree(&qp(2), 4)?;
    let ctx = AutCtx::new_at(t.clone(), 1, 4, Center::Vertex(Vertex::x_plus()))?;
    let mut out = Vec::new();
    for kind in SYSTEMS {
        let w = system_window(&t, Center::Vertex(Vertex::x_plus()), 2)?;
        let r = CoeffSystem::build(t.clone(), kind, None, 1, w, f2())?.roundtrip(&ctx)?;
        if !r.pass {
            return Ok((false, format!("{kind:?} {r:?}")));
        }
        out.push(format!("{kind:?} H0 {}", r.h0_len));
    }
    Ok((true, out.join(", ")))
}

fn induction(t: &Arc<Tree>, d: u32) -> Result<Induction> {
    Induction::new(t.clone(), t.sigma_ball(d)?, HeckeOperatorSpec::trivial(Arc::new(t.k.res.clone()), f2()))
}

fn c8() -> Outcome {
    let t = tree(&qp(2), 6)?;
    let mut dims = Vec::new();
    for lam in [0, 1] {
        for d in [3, 4] {
            let ctx = AutCtx::new(t.clone(), 1, d + 2)?;
            let (r, _) = packet_invariants(&induction(&t, d)?, &ctx, lam)?;
            if !(r.pass && r.invariant_len == 2) {
                return Ok((false, format!("lambda={lam} D={d} {r:?}")));
            }
            dims.push(r.invariant_len);
        }
    }
    Ok((true, format!("dimensions {dims:?}")))
}

fn c9() -> Outcome {
    let t = tree(&qp(2), 6)?;
    let ind = induction(&t, 4)?;
    let w2 = t.sigma_ball(2)?;
    let mut n = 0;
    for lam in [0, 1] {
        for &(h, _) in &w2.edges {
            let eta = Edge { head: w2.verts[h].clone() };
            if !kernel_window_check(&ind, lam, &eta)? {
                return Ok((false, format!("lambda={lam} eta={eta}")));
            }
            n += 1;
        }
    }
    Ok((true, format!("{n} (lambda, eta) pairs")))
}

fn c10() -> Outcome {
    let t = tree(&qp(2), 7)?;
    let mut out = Vec::new();
    for kind in SYSTEMS {
        for m in [1, 2] {
            let f = CoeffSystem::build(t.clone(), kind, None, 1, halftree_window(&t, m + 3)?, f2())?;
            let r = check_etale(&build_pair(&f)?, m)?;
            if !r.pass {
                return Ok((false, format!("{kind:?} m={m} {r:?}")));
            }
            out.push(format!("{kind:?}/{m}"));
        }
    }
    Ok((true, out.join(" ")))
}

fn c11() -> Outcome {
    let t = tree(&qp(2), 6)?;
    let ctx = AutCtx::new(t.clone(), 1, 5)?;
    let mut out = Vec::new();
    for kind in SYSTEMS {
        let f = CoeffSystem::build(t.clone(), kind, None, 1, halftree_window(&t, 3)?, f2())?;
        let g = generator_bound(&build_pair(&f)?, &ctx)?;
        if !(g.pass && g.n == 1 && !g.generators.is_empty() && g.generated_len == g.d_len) {
            return Ok((false, format!("{kind:?} {g:?}")));
        }
        out.push(format!("{kind:?} n=1 generates {}", g.d_len));
    }
    Ok((true, out.join(", ")))
}

fn c12() -> Outcome {
    let mut out = Vec::new();
    let t = tree(&qp(2), 5)?;
    for kind in SYSTEMS {
        let f = CoeffSystem::build(t.clone(), kind, None, 1, halftree_window(&t, 3)?, f2())?;
        let r = qp_fact_check(&build_pair(&f)?)?;
        if !r.equal || r.exploratory {
            return Ok((false, format!("{kind:?} {r:?}")));
        }
        out.push(format!("{kind:?} {}={}", r.fsig_len, r.invariant_len));
    }
    // q = 4: reported only
    let t4 = tree(&field(LocalFieldSpec::fq(2, 2, 30)), 5)?;
    for kind in SYSTEMS {
        let f = CoeffSystem::build(t4.clone(), kind, None, 1, halftree_window(&t4, 3)?, f2())?;
        let r = qp_fact_check(&build_pair(&f)?)?;
        out.push(format!("q=4 {kind:?} {} vs {} (exploratory)", r.fsig_len, r.invariant_len));
    }
    Ok((true, out.join(", ")))
}

fn main() {
    let criteria: [(u32, &str, u64, fn() -> Outcome); 12] = [
        (1, "tree metric oracle", 5, c1),
        (2, "pro-p closure image", 60, c2),
        (3, "conjugate subgroup index formula", 60, c3),
        (4, "hat group presentation", 120, c4),
        (5, "iwasawa relations", 30, c5),
        (6, "hat invariants bijection", 60, c6),
        (7, "homology roundtrip", 60, c7),
        (8, "supersingular packet dimension", 120, c8),
        (9, "kernel of T minus lambda", 30, c9),
        (10, "etale pair axioms", 60, c10),
        (11, "generator bound", 30, c11),
        (12, "invariants of the Q_p factor", 60, c12),
    ];
    let mut unexpected = Vec::new();
    for (id, name, limit, run) in criteria {
        let st = Instant::now();
        let out = run();
        let el = st.elapsed();
        let (ok, witness) = match out {
            Ok((ok, w)) => (ok, w),
            Err(e) => (false, format!("error: {e}")),
        };
        let in_time = el <= Duration::from_secs(limit);
        let pass = ok && in_time;
        let st = if pass { "PASS" } else { "FAIL" };
        println!("{st} [{id:2}] {name}: {witness} ({:.2} s, limit {limit} s)", el.as_secs_f64());
        if !pass && !KNOWN_GAPS.contains(&id) {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected acceptance failures: {unexpected:?}");
        std::process::exit(1);
    }
}
