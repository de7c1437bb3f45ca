//! Pontryagin duals of window homology on the half tree X+, the pair
//! D'(F) -> D(F) with the operators phi and psi, the Nakayama generator
//! bound, and the truncated Iwasawa algebra for F = Q_p.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::coeff::{len_of, CoeffSystem, Homology};
use crate::error::{BtError, Result};
use crate::linalg::{cols_to_mat, quotient_invariants, reduce_span, snf, Lambda, Mat, Quotient};
use crate::locaut::{AutCtx, DepthAut};
use crate::rep::reduce;
use crate::tree::{BallMode, Center, Edge, GMatrix, Tree, Vertex, Window};

/// A finite Lambda-module Lambda^n / span(rel).
#[derive(Clone, Debug)]
pub struct FinMod {
    pub n: usize,
    pub rel: Mat,
}

impl FinMod {
    pub fn free(n: usize) -> FinMod {
        FinMod { n, rel: Mat::zeros(n, 0) }
    }

    pub fn len(&self, l: &Lambda) -> u32 {
        Quotient::new(l, self.n, &self.rel).len()
    }
}

/// Hom(M, Lambda) for M = Lambda^n / span(rel), as the functionals on
/// Lambda^n killing the relations; `funcs` holds generators as columns and
/// the pairing with M is the dot product.
#[derive(Clone, Debug)]
pub struct DualModule {
    pub n: usize,
    pub funcs: Mat,
    pub len: u32,
}

pub fn dualize(l: &Lambda, m: &FinMod) -> DualModule {
    let funcs = if m.rel.cols == 0 {
        Mat::identity(m.n)
    } else {
        reduce_span(l, &snf(l, &m.rel.transpose()).kernel(l))
    };
    let len = len_of(l, &funcs);
    DualModule { n: m.n, funcs, len }
}

impl DualModule {
    /// Contragredient of an endomorphism A of Lambda^n: l -> l o A.
    pub fn pullback(&self, l: &Lambda, a: &Mat) -> Mat {
        a.transpose().mul(l, &self.funcs)
    }

    /// Whether a functional kills the relations.
    pub fn contains(&self, l: &Lambda, rel: &Mat, phi: &[u64]) -> bool {
        rel.cols == 0 || rel.transpose().mul_vec(l, phi).iter().all(|&x| x == 0)
    }
}

/// The forward window Z^(D)_+(x+) inside X+.
pub fn halftree_window(tree: &Tree, depth: u32) -> Result<Window> {
    tree.ball(&Center::Vertex(Vertex::x_plus()), depth, BallMode::Forward)
}

fn in_x_plus(tree: &Tree, v: &Vertex) -> bool {
    tree.distance(&Vertex::x_plus(), v) < tree.distance(&Vertex::x_minus(), v)
}

/// Matrix on C_0 of the forward window of c -> (g c) restricted to X+,
/// on chains supported in depth <= `src_depth`.
pub fn chain_map(f: &CoeffSystem, g: &GMatrix, src_depth: u32) -> Result<Mat> {
    let t = &f.tree;
    let vo = f.voffsets();
    let n = vo[f.win.len()];
    let mut m = Mat::zeros(n, n);
    for x in 0..f.win.len() {
        if f.win.dist[x] > src_depth {
            continue;
        }
        let xv = &f.win.verts[x];
        let gx = t.act(g, xv)?;
        match f.win.idx(&gx) {
            Some(y) => {
                let kb = reduce(t, &t.mul(&t.mul(&t.frame_inv(&gx), g), &t.frame(xv)))?;
                m.put(vo[y], vo[x], &f.vertex_matrix_kbar(x, y, &kb));
            }
            None if in_x_plus(t, &gx) => {
                return Err(BtError::WindowExceeded(format!("{gx} is beyond the window")));
            }
            None => {}
        }
    }
    Ok(m)
}

/// Matrix on C_0 of a hat automorphism (from a context around sigma) that
/// preserves X+.
pub fn hat_chain_map(f: &CoeffSystem, ctx: &AutCtx, a: &DepthAut) -> Result<Mat> {
    let vo = f.voffsets();
    let n = vo[f.win.len()];
    let mut m = Mat::zeros(n, n);
    for x in 0..f.win.len() {
        let cx = ctx
            .win
            .idx(&f.win.verts[x])
            .ok_or_else(|| BtError::WindowExceeded("automorphism window too small".into()))?;
        let ay = &ctx.win.verts[a.table[cx] as usize];
        let y = f
            .win
            .idx(ay)
            .ok_or_else(|| BtError::HypothesisViolated(format!("automorphism moves X+ to {ay}")))?;
        let kb = ctx.vertex_kbar(a, cx)?;
        m.put(vo[y], vo[x], &f.vertex_matrix_kbar(x, y, &kb));
    }
    Ok(m)
}

/// Columns: the image of F(sigma) in C_0 at x+.
fn fsigma_cols(f: &CoeffSystem) -> Result<Mat> {
    let n = f.voffsets()[f.win.len()];
    let xp = f.win.idx(&Vertex::x_plus()).ok_or(BtError::WindowExceeded("x+".into()))?;
    let fs = crate::coeff::unipotent_invariants(&f.rep);
    let mut m = Mat::zeros(n, fs.cols);
    if f.vdim(xp) > 0 {
        m.put(f.voffsets()[xp], 0, &fs);
    }
    Ok(m)
}

/// The pair D'(F) -> D(F) on the forward window of depth D.
#[derive(Clone, Debug)]
pub struct EtalePairTrunc {
    pub depth: u32,
    pub f: CoeffSystem,
    pub h: Homology,
    pub d: DualModule,
    pub dprime: DualModule,
    /// Relations for D': boundaries together with F(sigma).
    pub rel_prime: Mat,
    pub fsig: Mat,
    pub fsig_len: u32,
    /// Length of the image of F(sigma) in H_0.
    pub fsig_image_len: u32,
    pub coker_len: u32,
    pub injective: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairSummary {
    pub depth: u32,
    pub d_len: u32,
    pub dprime_len: u32,
    pub coker_len: u32,
    pub fsig_len: u32,
    pub fsig_image_len: u32,
    pub injective: bool,
    pub exact: bool,
}

pub fn build_pair(f: &CoeffSystem) -> Result<EtalePairTrunc> {
    let l = &f.lambda;
    if f.win.center != Center::Vertex(Vertex::x_plus()) || f.win.mode != BallMode::Forward {
        return Err(BtError::InvalidSpec("the pair lives on the forward window of x+".into()));
    }
    let hyp = f.check_hyp123()?;
    if !hyp.pass {
        return Err(BtError::HypothesisViolated(hyp.witnesses.join("; ")));
    }
    let h = f.homology();
    let n = h.bd.rows;
    let d = dualize(l, &FinMod { n, rel: h.bd.clone() });
    let fsig = fsigma_cols(f)?;
    let rel_prime = h.bd.hcat(&fsig);
    let dprime = dualize(l, &FinMod { n, rel: rel_prime.clone() });
    let fsig_len = len_of(l, &crate::coeff::unipotent_invariants(&f.rep)) * u32::from(f.vdim(0) > 0);
    let img: Vec<Vec<u64>> = (0..fsig.cols).map(|c| h.h0.project(l, &fsig.col(c))).collect();
    let fsig_image_len = if img.is_empty() { 0 } else { h.h0.sub_len(l, &cols_to_mat(h.h0.dim(), &img)) };
    // D' sits inside D as functionals; the inclusion is injective
    let injective = dprime.funcs.cols == 0 || (0..dprime.funcs.cols).all(|c| d.contains(l, &h.bd, &dprime.funcs.col(c)));
    let coker_len = d.len - dprime.len;
    Ok(EtalePairTrunc {
        depth: f.win.radius,
        f: f.clone(),
        h,
        d,
        dprime,
        rel_prime,
        fsig,
        fsig_len,
        fsig_image_len,
        coker_len,
        injective,
    })
}

impl EtalePairTrunc {
    pub fn summary(&self) -> PairSummary {
        PairSummary {
            depth: self.depth,
            d_len: self.d.len,
            dprime_len: self.dprime.len,
            coker_len: self.coker_len,
            fsig_len: self.fsig_len,
            fsig_image_len: self.fsig_image_len,
            injective: self.injective,
            exact: self.coker_len == self.fsig_image_len && self.coker_len <= self.fsig_len,
        }
    }

    /// Chain map of phi_{t^m}: c -> (t^{-m} c) restricted to X+.
    pub fn phi_chain(&self, m: u32) -> Result<Mat> {
        chain_map(&self.f, &self.f.tree.t_pow(-(m as i32)), self.depth)
    }

    /// Chain map of psi_{t^m}: c -> t^m c on chains of depth <= D - m.
    pub fn psi_chain(&self, m: u32) -> Result<Mat> {
        chain_map(&self.f, &self.f.tree.t_pow(m as i32), self.depth - m)
    }

    /// Coset representatives n(b) of N_0^(1) / t^m N_0^(1) t^{-m}.
    pub fn coset_reps(&self, m: u32) -> Vec<GMatrix> {
        let t = &self.f.tree;
        let q = t.q() as usize;
        (0..q.pow(m))
            .map(|mut idx| {
                let mut b = t.zero();
                for j in 0..m as i32 {
                    let c = (idx % q) as u8;
                    idx /= q;
                    b = t.k.fe_add(&b, &t.k.fe_digit(c, j, t.n));
                }
                t.n_mat(b)
            })
            .collect()
    }
}

/// Rewrites a chain on the forward window into a homologous chain
/// supported in depth >= m, using the transitions from child edges.
pub fn support_decompose(f: &CoeffSystem, c: &[u64], m: u32) -> Result<Vec<u64>> {
    let l = &f.lambda;
    if m > f.win.radius {
        return Err(BtError::BallTooSmall { need: m, have: f.win.radius });
    }
    let vo = f.voffsets();
    let eo = f.eoffsets();
    let mut c = c.to_vec();
    for x in 0..f.win.len() {
        if f.win.dist[x] >= m {
            continue;
        }
        let cx: Vec<u64> = c[vo[x]..vo[x + 1]].to_vec();
        if cx.iter().all(|&v| v == 0) {
            continue;
        }
        let kids: Vec<usize> = f
            .win
            .nbrs[x]
            .iter()
            .copied()
            .filter(|&y| f.win.dist[y] == f.win.dist[x] + 1)
            .map(|y| f.win.up_edge[y].unwrap())
            .collect();
        let mut sys = Mat::zeros(cx.len(), 0);
        for &i in &kids {
            sys = sys.hcat(f.transition(i, x));
        }
        let sol = snf(l, &sys)
            .solve(l, &cx)
            .ok_or_else(|| BtError::HypothesisViolated(format!("F({}) is not spanned by its child edges", f.win.verts[x])))?;
        let mut chain1 = vec![0u64; eo[f.edim.len()]];
        let mut off = 0;
        for &i in &kids {
            chain1[eo[i]..eo[i + 1]].copy_from_slice(&sol[off..off + f.edim[i]]);
            off += f.edim[i];
        }
        let bd = f.boundary().mul_vec(l, &chain1);
        for (a, b) in c.iter_mut().zip(&bd) {
            *a = l.sub(*a, *b);
        }
    }
    Ok(c)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EtaleReport {
    pub m: u32,
    pub psi_del_phi: bool,
    pub phi_preserves_dprime: bool,
    pub decomposition: bool,
    pub off_ball_identity: bool,
    pub pass: bool,
}

/// The first axiom as an exact identity of functionals on the window, and
/// the second through support decomposition and evaluation of
/// sum_n n phi psi n^{-1} on chains off Z^(m-1)_+(x+).
pub fn check_etale(pair: &EtalePairTrunc, m: u32) -> Result<EtaleReport> {
    if m == 0 {
        return Ok(EtaleReport { m, psi_del_phi: true, phi_preserves_dprime: true, decomposition: true, off_ball_identity: true, pass: true });
    }
    if pair.depth < m + 1 {
        return Err(BtError::BallTooSmall { need: m + 1, have: pair.depth });
    }
    let f = &pair.f;
    let l = &f.lambda;
    let vo = f.voffsets();
    let n = vo[f.win.len()];
    let phi = pair.phi_chain(m)?;
    let psi = pair.psi_chain(m)?;
    // coordinates of chains of depth <= D - m
    let inner: Vec<usize> = (0..f.win.len())
        .filter(|&x| f.win.dist[x] + m <= pair.depth)
        .flat_map(|x| vo[x]..vo[x + 1])
        .collect();
    let mut psi_del_phi = true;
    let mut preserves = true;
    for c in 0..pair.dprime.funcs.cols {
        let lp = pair.dprime.funcs.col(c);
        let phil = phi.transpose().mul_vec(l, &lp);
        if !pair.dprime.contains(l, &pair.rel_prime, &phil) {
            preserves = false;
        }
        let psil = psi.transpose().mul_vec(l, &phil);
        if inner.iter().any(|&i| psil[i] != lp[i]) {
            psi_del_phi = false;
        }
    }
    // support decomposition of every basis chain
    let mut decomposition = true;
    for j in 0..n {
        let mut e = vec![0u64; n];
        e[j] = 1;
        let d = match support_decompose(f, &e, m) {
            Ok(d) => d,
            Err(_) => {
                decomposition = false;
                break;
            }
        };
        let low = (0..f.win.len()).filter(|&x| f.win.dist[x] < m).any(|x| d[vo[x]..vo[x + 1]].iter().any(|&v| v != 0));
        let diff: Vec<u64> = d.iter().zip(&e).map(|(a, b)| l.sub(*a, *b)).collect();
        if low || !pair.h.h0.is_zero_class(l, &diff) {
            decomposition = false;
            break;
        }
    }
    // sum over cosets on chains of depth >= m
    let mut total = Mat::zeros(n, n);
    let t = &f.tree;
    for nb in pair.coset_reps(m) {
        let nm = chain_map(f, &nb, pair.depth)?;
        let ni = chain_map(f, &t.inv(&nb)?, pair.depth)?;
        total = total.add(l, &nm.mul(l, &psi).mul(l, &phi).mul(l, &ni));
    }
    let off_ball_identity = (0..f.win.len()).filter(|&x| f.win.dist[x] >= m).all(|x| {
        (vo[x]..vo[x + 1]).all(|j| (0..n).all(|i| total.get(i, j) == u64::from(i == j)))
    });
    let pass = psi_del_phi && preserves && decomposition && off_ball_identity;
    Ok(EtaleReport { m, psi_del_phi, phi_preserves_dprime: preserves, decomposition, off_ball_identity, pass })
}

/// Generators of N-hat_{0,1}^(e) acting on the forward window: matrices of
/// N_0^(e) and the branch automorphisms inside X+.
pub fn n_hat_gens(f: &CoeffSystem, ctx: &AutCtx) -> Result<Vec<Mat>> {
    let t = &f.tree;
    let e = ctx.e;
    let mut out = Vec::new();
    for j in 0..=f.win.radius + 1 {
        for z in t.k.res.basis() {
            let b = t.k.fe_digit(z, (e - 1 + j) as i32, t.n);
            out.push(chain_map(f, &t.n_mat(b), f.win.radius)?);
        }
    }
    for a in ctx.branch_auts(&Center::Edge(Edge::sigma()), f.win.radius)? {
        let moves_outside = (0..ctx.win.len()).any(|i| a.table[i] as usize != i && !in_x_plus(t, &ctx.win.verts[i]));
        if !moves_outside {
            out.push(hat_chain_map(f, ctx, &a)?);
        }
    }
    Ok(out)
}

/// p-torsion classes of H_0 fixed by the given chain maps.
fn fixed_p_torsion(l: &Lambda, q: &Quotient, acts: &[Mat]) -> Mat {
    let mut ind: Vec<Mat> = acts.iter().map(|a| q.induced(l, a)).collect();
    let d = q.dim();
    ind.push(Mat::identity(d).scale(l, l.add(1, l.p)));
    quotient_invariants(l, q, &ind)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorBound {
    pub n: u32,
    pub invariant_dim: u32,
    pub generators: Vec<Vec<u64>>,
    pub generated_len: u32,
    pub d_len: u32,
    pub pass: bool,
}

/// n = dim F(x+)^{N_0, p=0}; the dimension of the fixed p-torsion of H_0
/// under the hat group, and functionals of D generating D over the group.
pub fn generator_bound(pair: &EtalePairTrunc, ctx: &AutCtx) -> Result<GeneratorBound> {
    let f = &pair.f;
    let l = &f.lambda;
    let t = &f.tree;
    let xp = f.win.idx(&Vertex::x_plus()).unwrap();
    let dx = f.vdim(xp);
    let mut acts = Vec::new();
    for z in t.k.res.basis() {
        let b = t.k.fe_digit(z, ctx.e as i32 - 1, t.n);
        acts.push(f.vertex_matrix_kbar(xp, xp, &reduce(t, &t.n_mat(b))?));
    }
    acts.push(Mat::identity(dx).scale(l, l.add(1, l.p)));
    let n = len_of(l, &crate::linalg::invariants(l, dx, &acts));
    let gens = n_hat_gens(f, ctx)?;
    let q = &pair.h.h0;
    let inv = fixed_p_torsion(l, q, &gens);
    let invariant_dim = if inv.cols == 0 { 0 } else { q.sub_len(l, &inv) };
    // choose functionals that pair nondegenerately with the fixed classes
    let vs: Vec<Vec<u64>> = (0..inv.cols).map(|c| q.lift(l, &inv.col(c))).collect();
    let top = l.ppow(l.r - 1);
    let mut chosen: Vec<Vec<u64>> = Vec::new();
    let mut pairing: Vec<Vec<u64>> = Vec::new();
    for c in 0..pair.d.funcs.cols {
        if chosen.len() as u32 >= invariant_dim {
            break;
        }
        let phi = pair.d.funcs.col(c);
        let row: Vec<u64> = vs.iter().map(|v| dot(l, &phi, v) / top % l.p).collect();
        let mut trial = pairing.clone();
        trial.push(row);
        if rank_mod_p(l.p, &trial) == trial.len() {
            pairing = trial;
            chosen.push(phi);
        }
    }
    // submodule generated under the group
    let mut span = if chosen.is_empty() { Mat::zeros(pair.d.n, 0) } else { cols_to_mat(pair.d.n, &chosen) };
    let mut len = len_of(l, &span);
    loop {
        let mut next = span.clone();
        for g in &gens {
            next = next.hcat(&g.transpose().mul(l, &span));
        }
        next = reduce_span(l, &next);
        let nl = len_of(l, &next);
        span = next;
        if nl == len {
            break;
        }
        len = nl;
    }
    let pass = invariant_dim <= n && len == pair.d.len && chosen.len() as u32 <= n;
    Ok(GeneratorBound { n, invariant_dim, generators: chosen, generated_len: len, d_len: pair.d.len, pass })
}

fn dot(l: &Lambda, a: &[u64], b: &[u64]) -> u64 {
    a.iter().zip(b).fold(0, |acc, (x, y)| l.add(acc, l.mul(*x, *y)))
}

fn rank_mod_p(p: u64, rows: &[Vec<u64>]) -> usize {
    let mut m: Vec<Vec<u64>> = rows.iter().map(|r| r.iter().map(|x| x % p).collect()).collect();
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..m.len()).find(|&i| m[i][c] != 0) else { continue };
        m.swap(rank, piv);
        let inv = (1..p).find(|x| x * m[rank][c] % p == 1).unwrap();
        for i in 0..m.len() {
            if i != rank && m[i][c] != 0 {
                let fct = m[i][c] * inv % p;
                for k in 0..cols {
                    m[i][k] = (m[i][k] + p * p - fct * m[rank][k] % p) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QpFactReport {
    pub p: u64,
    pub q: u32,
    pub fsig_len: u32,
    pub invariant_len: u32,
    pub equal: bool,
    pub exploratory: bool,
}

/// Compares F(sigma) with the N_0^(1)-invariants of H_0 of the forward
/// window; asserted only for F = Q_p.
pub fn qp_fact_check(pair: &EtalePairTrunc) -> Result<QpFactReport> {
    let f = &pair.f;
    let l = &f.lambda;
    let t = &f.tree;
    let mut acts = Vec::new();
    for j in 0..=pair.depth + 1 {
        for z in t.k.res.basis() {
            acts.push(pair.h.h0.induced(l, &chain_map(f, &t.n_mat(t.k.fe_digit(z, j as i32, t.n)), pair.depth)?));
        }
    }
    let inv = quotient_invariants(l, &pair.h.h0, &acts);
    let invariant_len = if inv.cols == 0 { 0 } else { pair.h.h0.sub_len(l, &inv) };
    let exploratory = !(t.k.mixed() && t.q() == t.k.p());
    Ok(QpFactReport {
        p: l.p,
        q: t.q(),
        fsig_len: pair.fsig_len,
        invariant_len,
        equal: invariant_len == pair.fsig_len,
        exploratory,
    })
}

// ---------------------------------------------------------------------------
// Truncated Iwasawa algebra for F = Q_p

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IwasawaTruncSpec {
    pub p: u64,
    /// Top level K.
    pub top: u32,
    /// Coefficients in Z/p^r.
    pub r: u32,
    /// Maximal word length.
    pub degree: u32,
    pub e: u32,
}

impl IwasawaTruncSpec {
    pub fn validate(&self) -> Result<()> {
        if !crate::localfield::is_prime(self.p as u32) {
            return Err(BtError::InvalidSpec(format!("p = {} is not prime", self.p)));
        }
        if self.e == 0 || self.r == 0 {
            return Err(BtError::InvalidSpec("e and r must be positive".into()));
        }
        if self.p > 3 || self.top > 2 || self.r > 2 {
            return Err(BtError::InvalidSpec("iwasawa checks need p <= 3, K <= 2, r <= 2".into()));
        }
        Ok(())
    }

    fn modulus(&self) -> u64 {
        self.p.pow(self.r)
    }
}

/// The generator U_i^(k), i in Z/p^k.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub k: u32,
    pub i: u64,
}

/// A Lambda-combination of words in the generators.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IwasawaWord {
    pub terms: BTreeMap<Vec<Letter>, u64>,
}

impl IwasawaWord {
    pub fn word(letters: &[Letter]) -> IwasawaWord {
        IwasawaWord { terms: BTreeMap::from([(letters.to_vec(), 1)]) }
    }
}

/// Position of the leftmost pair out of order, with its replacement.
fn rewrite_at(spec: &IwasawaTruncSpec, a: Letter, b: Letter) -> Option<(Letter, Letter)> {
    if a.k > b.k {
        let pl = spec.p.pow(b.k);
        let pk = spec.p.pow(a.k);
        if a.i % pl == b.i % pl {
            Some((b, Letter { k: a.k, i: (a.i + pl) % pk }))
        } else {
            Some((b, a))
        }
    } else if a.k == b.k && a.i > b.i {
        Some((b, a))
    } else {
        None
    }
}

/// Normal form of a single word: levels ascending, then residues
/// ascending, rewriting with the relation left to right. `leftmost`
/// chooses which out-of-order pair is rewritten first.
pub fn normal_word(spec: &IwasawaTruncSpec, w: &[Letter], leftmost: bool) -> Vec<Letter> {
    let mut w = w.to_vec();
    loop {
        let n = w.len();
        let pos: Vec<usize> = (0..n.saturating_sub(1)).collect();
        let pick = if leftmost {
            pos.iter().copied().find(|&j| rewrite_at(spec, w[j], w[j + 1]).is_some())
        } else {
            pos.iter().rev().copied().find(|&j| rewrite_at(spec, w[j], w[j + 1]).is_some())
        };
        let Some(j) = pick else { return w };
        let (x, y) = rewrite_at(spec, w[j], w[j + 1]).unwrap();
        w[j] = x;
        w[j + 1] = y;
    }
}

pub fn iwasawa_normal_form(w: &IwasawaWord, spec: &IwasawaTruncSpec) -> Result<IwasawaWord> {
    spec.validate()?;
    let md = spec.modulus();
    let mut out: BTreeMap<Vec<Letter>, u64> = BTreeMap::new();
    for (word, &c) in &w.terms {
        if word.len() as u32 > spec.degree {
            return Err(BtError::DegreeBoundExceeded(spec.degree));
        }
        if let Some(l) = word.iter().find(|l| l.k > spec.top || l.i >= spec.p.pow(l.k)) {
            return Err(BtError::InvalidSpec(format!("generator U_{}^({}) outside the truncation", l.i, l.k)));
        }
        let nf = normal_word(spec, word, true);
        let e = out.entry(nf).or_insert(0);
        *e = (*e + c) % md;
    }
    out.retain(|_, v| *v != 0);
    Ok(IwasawaWord { terms: out })
}

/// Sparse element of (Z/p^r)[G] for G the permutation group generated by
/// the e_i^(k) on p^(e-1)Z/p^(K+e); products compose left to right.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroupAlg {
    pub terms: BTreeMap<Vec<u32>, u64>,
}

struct AlgCtx {
    size: usize,
    md: u64,
}

impl AlgCtx {
    fn new(spec: &IwasawaTruncSpec) -> AlgCtx {
        AlgCtx { size: spec.p.pow(spec.top + 1) as usize, md: spec.modulus() }
    }
    fn letter_perm(&self, spec: &IwasawaTruncSpec, l: Letter) -> Vec<u32> {
        let pk = spec.p.pow(l.k);
        // e_i^(k) translates by p^(k+e-1); in the coordinate y = x / p^(e-1)
        // this is a shift by p^k, so the model does not depend on e.
        let shift = spec.p.pow(l.k);
        (0..self.size as u64)
            .map(|x| if x % pk == l.i { ((x + shift) % self.size as u64) as u32 } else { x as u32 })
            .collect()
    }
    fn one(&self) -> GroupAlg {
        GroupAlg { terms: BTreeMap::from([((0..self.size as u32).collect(), 1)]) }
    }
    fn elem(&self, g: Vec<u32>) -> GroupAlg {
        GroupAlg { terms: BTreeMap::from([(g, 1)]) }
    }
    fn add(&self, a: &GroupAlg, b: &GroupAlg, sb: u64) -> GroupAlg {
        let mut t = a.terms.clone();
        for (g, c) in &b.terms {
            let e = t.entry(g.clone()).or_insert(0);
            *e = (*e + sb * c) % self.md;
        }
        t.retain(|_, v| *v != 0);
        GroupAlg { terms: t }
    }
    fn mul(&self, a: &GroupAlg, b: &GroupAlg) -> GroupAlg {
        let mut t: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
        for (g, x) in &a.terms {
            for (h, y) in &b.terms {
                // apply g first, then h
                let gh: Vec<u32> = g.iter().map(|&v| h[v as usize]).collect();
                let e = t.entry(gh).or_insert(0);
                *e = (*e + x * y) % self.md;
            }
        }
        t.retain(|_, v| *v != 0);
        GroupAlg { terms: t }
    }
    /// Letter as the group element e_i^(k).
    fn group_like(&self, spec: &IwasawaTruncSpec, l: Letter) -> GroupAlg {
        self.elem(self.letter_perm(spec, l))
    }
    /// Letter as U_i^(k) = 1 - e_i^(k).
    fn u_elem(&self, spec: &IwasawaTruncSpec, l: Letter) -> GroupAlg {
        self.add(&self.one(), &self.group_like(spec, l), self.md - 1)
    }
    fn eval(&self, spec: &IwasawaTruncSpec, w: &IwasawaWord, letter: &dyn Fn(Letter) -> GroupAlg) -> GroupAlg {
        let mut acc = GroupAlg::default();
        for (word, &c) in &w.terms {
            let mut m = self.one();
            for &l in word {
                m = self.mul(&m, &letter(l));
            }
            let _ = spec;
            acc = self.add(&acc, &m, c);
        }
        acc
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelationCheck {
    pub name: String,
    pub kind: String,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IwasawaReport {
    pub relations: Vec<RelationCheck>,
    pub commutation_pass: bool,
    pub quotient_pass: bool,
    /// Commutation relations read literally in the variables U = 1 - e;
    /// reported, not asserted.
    pub literal_u_failures: usize,
    pub literal_u_total: usize,
    pub normal_forms_checked: usize,
    pub normal_form_pass: bool,
    pub pass: bool,
}

fn letters(spec: &IwasawaTruncSpec, kmax: u32) -> Vec<Letter> {
    (0..=kmax).flat_map(|k| (0..spec.p.pow(k)).map(move |i| Letter { k, i })).collect()
}

/// Evaluates the commutation relations and the quotient relations in
/// (Z/p^r)[G_K] under U_i^(k) -> 1 - e_i^(k), and cross-checks normal forms
/// of short words.
pub fn iwasawa_vs_group(spec: &IwasawaTruncSpec) -> Result<IwasawaReport> {
    spec.validate()?;
    let ctx = AlgCtx::new(spec);
    let gl = |l: Letter| ctx.group_like(spec, l);
    let ul = |l: Letter| ctx.u_elem(spec, l);
    let mut relations = Vec::new();
    let mut literal_fail = 0;
    let mut literal_total = 0;
    let all = letters(spec, spec.top);
    for &a in &all {
        for &b in &all {
            if a.k < b.k || (a.k == b.k && a.i == b.i) {
                continue;
            }
            let pl = spec.p.pow(b.k);
            let shifted = if a.i % pl == b.i % pl { Letter { k: a.k, i: (a.i + pl) % spec.p.pow(a.k) } } else { a };
            let lhs = IwasawaWord::word(&[a, b]);
            let rhs = IwasawaWord::word(&[b, shifted]);
            let ok = ctx.eval(spec, &lhs, &gl) == ctx.eval(spec, &rhs, &gl);
            literal_total += 1;
            if ctx.eval(spec, &lhs, &ul) != ctx.eval(spec, &rhs, &ul) {
                literal_fail += 1;
            }
            relations.push(RelationCheck {
                name: format!("U_{}^({}) U_{}^({}) = U_{}^({}) U_{}^({})", a.i, a.k, b.i, b.k, b.i, b.k, shifted.i, shifted.k),
                kind: "commutation".into(),
                pass: ok,
            });
        }
    }
    for k in 1..=spec.top {
        for j in 0..spec.p.pow(k - 1) {
            let pk1 = spec.p.pow(k - 1);
            let mut prod = ctx.one();
            for i in (0..spec.p.pow(k)).filter(|i| i % pk1 == j) {
                prod = ctx.mul(&prod, &ctx.add(&ctx.one(), &ul(Letter { k, i }), ctx.md - 1));
            }
            let base = ctx.add(&ctx.one(), &ul(Letter { k: k - 1, i: j }), ctx.md - 1);
            let mut pw = ctx.one();
            for _ in 0..spec.p {
                pw = ctx.mul(&pw, &base);
            }
            let diff = ctx.add(&prod, &pw, ctx.md - 1);
            relations.push(RelationCheck {
                name: format!("prod (1 - U_i^({k})) = (1 - U_{j}^({}))^{}", k - 1, spec.p),
                kind: "quotient".into(),
                pass: diff.terms.is_empty(),
            });
        }
    }
    // normal forms of words of length <= 3 with levels <= 1
    let short = letters(spec, spec.top.min(1));
    let mut words: Vec<Vec<Letter>> = vec![vec![]];
    let mut frontier: Vec<Vec<Letter>> = vec![vec![]];
    for _ in 0..spec.degree.min(3) {
        let mut next = Vec::new();
        for w in &frontier {
            for &l in &short {
                let mut v = w.clone();
                v.push(l);
                next.push(v);
            }
        }
        words.extend(next.iter().cloned());
        frontier = next;
    }
    let mut nf_ok = true;
    for w in &words {
        let a = normal_word(spec, w, true);
        let b = normal_word(spec, w, false);
        let same_group = ctx.eval(spec, &IwasawaWord::word(w), &gl) == ctx.eval(spec, &IwasawaWord::word(&a), &gl);
        if a != b || !same_group {
            nf_ok = false;
        }
    }
    let commutation_pass = relations.iter().filter(|r| r.kind == "commutation").all(|r| r.pass);
    let quotient_pass = relations.iter().filter(|r| r.kind == "quotient").all(|r| r.pass);
    let pass = commutation_pass && quotient_pass && nf_ok;
    Ok(IwasawaReport {
        relations,
        commutation_pass,
        quotient_pass,
        literal_u_failures: literal_fail,
        literal_u_total: literal_total,
        normal_forms_checked: words.len(),
        normal_form_pass: nf_ok,
        pass,
    })
}

/// Group-algebra value of a word with letters read as e_i^(k); used by
/// tests to compare words.
pub fn eval_group_like(spec: &IwasawaTruncSpec, w: &IwasawaWord) -> Result<BTreeMap<Vec<u32>, u64>> {
    spec.validate()?;
    let ctx = AlgCtx::new(spec);
    Ok(ctx.eval(spec, w, &|l| ctx.group_like(spec, l)).terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rewrite_example() {
        let spec = IwasawaTruncSpec { p: 2, top: 1, r: 2, degree: 4, e: 1 };
        let w = IwasawaWord::word(&[Letter { k: 1, i: 0 }, Letter { k: 0, i: 0 }]);
        let nf = iwasawa_normal_form(&w, &spec).unwrap();
        assert_eq!(nf, IwasawaWord::word(&[Letter { k: 0, i: 0 }, Letter { k: 1, i: 1 }]));
    }
}
