//! Equivariant coefficient systems on windows of the tree and their
//! homology over Z/p^r.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{BtError, Result};
use crate::linalg::{cols_to_mat, is_injective, quotient_invariants, reduce_span, snf, span_len, Lambda, Mat, Quotient};
use crate::locaut::{AutCtx, DepthAut};
use crate::rep::{reduce, Gl2k, Rep, RepKind};
use crate::tree::{BallMode, Center, Edge, GMatrix, Tree, Vertex, Window};

pub use crate::linalg::invariants;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    /// Transitions into vertices of the SL2-orbit of x- carry a sign.
    MinusOrbit,
    AllPlus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Constant,
    Steinberg,
    FromRep,
}

/// A G-equivariant coefficient system restricted to a window. Vertex
/// modules are W^mult in the frame g_x, edge modules are given by their
/// transition matrices into the head and tail.
#[derive(Clone, Debug)]
pub struct CoeffSystem {
    pub tree: Arc<Tree>,
    pub lambda: Lambda,
    pub e: u32,
    pub win: Window,
    pub rep: Rep,
    pub vmult: Vec<usize>,
    pub edim: Vec<usize>,
    pub rhead: Vec<Mat>,
    pub rtail: Vec<Mat>,
    pub trivial_central_character: bool,
    pub sign: SignConvention,
    /// Sign of the action of s on F(sigma).
    pub eps: u64,
}

/// Basis of W^{N(k_F)}.
pub fn unipotent_invariants(rep: &Rep) -> Mat {
    let l = &rep.lambda;
    let acts: Vec<Mat> = rep
        .res
        .basis()
        .iter()
        .map(|&z| rep.matrix(&Gl2k { a: 1, b: z, c: 0, d: 1 }))
        .collect();
    reduce_span(l, &invariants(l, rep.dim(), &acts))
}

fn block_diag(m: &Mat, times: usize) -> Mat {
    let mut out = Mat::zeros(m.rows * times, m.cols * times);
    for i in 0..times {
        out.put(i * m.rows, i * m.cols, m);
    }
    out
}

impl CoeffSystem {
    /// The system F_V^(1) attached to a representation of GL2(k_F),
    /// inflated to K_{x+}, on the window Z^(depth)(center).
    pub fn from_rep(tree: Arc<Tree>, rep: Rep, e: u32, win: Window, sign: SignConvention) -> Result<CoeffSystem> {
        if rep.kind != RepKind::Trivial && e != 1 {
            return Err(BtError::InvalidSpec("representations of GL2(k_F) give systems of level 1".into()));
        }
        let l = rep.lambda;
        let fsig = unipotent_invariants(&rep);
        let rw = rep.matrix(&Gl2k { a: 0, b: 1, c: 1, d: 0 });
        let mut rhead = Vec::new();
        let mut rtail = Vec::new();
        let mut edim = Vec::new();
        for &(h, t) in &win.edges {
            let head = &win.verts[h];
            let c = head.digit(head.m - 1);
            let rn = rep.matrix(&Gl2k { a: 1, b: c, c: 0, d: 1 });
            let mut rh = fsig.clone();
            let mut rt = rn.mul(&l, &rw).mul(&l, &fsig);
            if sign == SignConvention::MinusOrbit {
                if minus_orbit(&tree, head) {
                    rh = rh.scale(&l, l.neg(1));
                }
                if minus_orbit(&tree, &win.verts[t]) {
                    rt = rt.scale(&l, l.neg(1));
                }
            }
            edim.push(fsig.cols);
            rhead.push(rh);
            rtail.push(rt);
        }
        Ok(CoeffSystem {
            tree,
            lambda: l,
            e,
            vmult: vec![1; win.len()],
            win,
            rep,
            edim,
            rhead,
            rtail,
            trivial_central_character: true,
            sign,
            eps: 1,
        })
    }

    pub fn build(tree: Arc<Tree>, kind: SystemKind, rep_kind: Option<RepKind>, e: u32, win: Window, lambda: Lambda) -> Result<CoeffSystem> {
        let rk = match kind {
            SystemKind::Constant => RepKind::Trivial,
            SystemKind::Steinberg => RepKind::Steinberg,
            SystemKind::FromRep => rep_kind.ok_or_else(|| BtError::InvalidSpec("from_rep needs a representation".into()))?,
        };
        let rep = Rep::new(rk, Arc::new(tree.k.res.clone()), lambda);
        CoeffSystem::from_rep(tree, rep, e, win, SignConvention::AllPlus)
    }

    /// Same system with F(x) replaced by F(x)^2 and transitions into x
    /// landing in the first summand.
    pub fn with_doubled_vertex(&self, x: usize) -> CoeffSystem {
        let mut out = self.clone();
        out.vmult[x] = 2;
        let pad = |m: &Mat| m.vcat(&Mat::zeros(m.rows, m.cols));
        for (i, &(h, t)) in self.win.edges.iter().enumerate() {
            if h == x {
                out.rhead[i] = pad(&self.rhead[i]);
            }
            if t == x {
                out.rtail[i] = pad(&self.rtail[i]);
            }
        }
        out
    }

    /// The zero system on the same window.
    pub fn zero_like(&self) -> CoeffSystem {
        let mut out = self.clone();
        out.vmult = vec![0; self.win.len()];
        out.edim = vec![0; self.win.edges.len()];
        out.rhead = vec![Mat::zeros(0, 0); self.win.edges.len()];
        out.rtail = out.rhead.clone();
        out
    }

    pub fn vdim(&self, x: usize) -> usize {
        self.rep.dim() * self.vmult[x]
    }

    pub fn voffsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.win.len() + 1);
        let mut acc = 0;
        for x in 0..self.win.len() {
            off.push(acc);
            acc += self.vdim(x);
        }
        off.push(acc);
        off
    }

    pub fn eoffsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.edim.len() + 1);
        let mut acc = 0;
        for &d in &self.edim {
            off.push(acc);
            acc += d;
        }
        off.push(acc);
        off
    }

    /// Transition of edge i into its endpoint x.
    pub fn transition(&self, i: usize, x: usize) -> &Mat {
        if self.win.edges[i].0 == x {
            &self.rhead[i]
        } else {
            &self.rtail[i]
        }
    }

    /// Boundary matrix C_1 -> C_0 (sum of transitions).
    pub fn boundary(&self) -> Mat {
        let vo = self.voffsets();
        let eo = self.eoffsets();
        let mut m = Mat::zeros(vo[self.win.len()], eo[self.edim.len()]);
        for (i, &(h, t)) in self.win.edges.iter().enumerate() {
            m.put(vo[h], eo[i], &self.rhead[i]);
            m.put(vo[t], eo[i], &self.rtail[i]);
        }
        m
    }

    fn vsign(&self, x: &Vertex) -> bool {
        self.sign == SignConvention::MinusOrbit && minus_orbit(&self.tree, x)
    }

    /// Matrix of an element of K_x Z given by its residue in the frame,
    /// from F(x) to F(y).
    pub fn vertex_matrix_kbar(&self, x: usize, y: usize, kbar: &Gl2k) -> Mat {
        let mut m = block_diag(&self.rep.matrix(kbar), self.vmult[x]);
        if self.vsign(&self.win.verts[x]) != self.vsign(&self.win.verts[y]) {
            m = m.scale(&self.lambda, self.lambda.neg(1));
        }
        m
    }

    /// Matrix of g : F(x) -> F(gx).
    pub fn vertex_matrix(&self, g: &GMatrix, x: usize) -> Result<(usize, Mat)> {
        let t = &self.tree;
        let xv = &self.win.verts[x];
        let gx = t.act(g, xv)?;
        let y = self.win.idx(&gx).ok_or_else(|| BtError::WindowExceeded(format!("{gx}")))?;
        let k = t.mul(&t.mul(&t.frame_inv(&gx), g), &t.frame(xv));
        let kb = reduce(t, &k)?;
        Ok((y, self.vertex_matrix_kbar(x, y, &kb)))
    }


    /// The matrix M with r_{j, y} M = vx r_{i, x}, where x is an endpoint
    /// of edge i and y the corresponding endpoint of edge j.
    pub fn edge_matrix(&self, i: usize, x: usize, j: usize, y: usize, vx: &Mat) -> Result<Mat> {
        let l = &self.lambda;
        let rhs = vx.mul(l, self.transition(i, x));
        let r = self.transition(j, y);
        if r.cols == 0 {
            return Ok(Mat::zeros(0, self.edim[i]));
        }
        let s = snf(l, r);
        let cols: Vec<Vec<u64>> = (0..rhs.cols)
            .map(|c| {
                s.solve(l, &rhs.col(c)).ok_or_else(|| {
                    BtError::HypothesisViolated(format!("edge action not defined at edge {i}"))
                })
            })
            .collect::<Result<_>>()?;
        Ok(cols_to_mat(r.cols, &cols))
    }

    fn check_prefix(&self, ctx: &AutCtx) -> Result<()> {
        if ctx.win.len() < self.win.len() || ctx.win.verts[..self.win.len()] != self.win.verts[..] {
            return Err(BtError::SpecMismatch("system window is not a prefix of the automorphism window".into()));
        }
        Ok(())
    }

    fn assemble(&self, vimg: &[(usize, Mat)], eimg: &[(usize, Mat)]) -> ChainAction {
        let vo = self.voffsets();
        let eo = self.eoffsets();
        let mut c0 = Mat::zeros(vo[self.win.len()], vo[self.win.len()]);
        for (x, (y, m)) in vimg.iter().enumerate() {
            c0.put(vo[*y], vo[x], m);
        }
        let mut c1 = Mat::zeros(eo[self.edim.len()], eo[self.edim.len()]);
        for (i, (j, m)) in eimg.iter().enumerate() {
            c1.put(eo[*j], eo[i], m);
        }
        ChainAction { c0, c1 }
    }

    fn edge_images(&self, table: &dyn Fn(usize) -> usize, vimg: &[(usize, Mat)]) -> Result<Vec<(usize, Mat)>> {
        self.win
            .edges
            .iter()
            .enumerate()
            .map(|(i, &(h, t))| {
                let (ah, at) = (table(h), table(t));
                let j = self
                    .win
                    .edge_between(ah, at)
                    .ok_or_else(|| BtError::HypothesisViolated("edge not mapped to an edge".into()))?;
                Ok((j, self.edge_matrix(i, h, j, ah, &vimg[h].1)?))
            })
            .collect()
    }

    /// Action of a locally algebraic automorphism on the chain groups.
    pub fn hat_action(&self, ctx: &AutCtx, a: &DepthAut) -> Result<ChainAction> {
        if !self.trivial_central_character {
            return Err(BtError::CentralCharacter);
        }
        self.check_prefix(ctx)?;
        let n = self.win.len();
        let vimg: Vec<(usize, Mat)> = (0..n)
            .map(|x| {
                let y = a.table[x] as usize;
                if y >= n {
                    return Err(BtError::WindowExceeded(format!("{} leaves the system window", self.win.verts[x])));
                }
                let kb = ctx.vertex_kbar(a, x)?;
                Ok((y, self.vertex_matrix_kbar(x, y, &kb)))
            })
            .collect::<Result<_>>()?;
        let eimg = self.edge_images(&|x| a.table[x] as usize, &vimg)?;
        Ok(self.assemble(&vimg, &eimg))
    }

    /// Action of a group element preserving the window.
    pub fn group_action(&self, g: &GMatrix) -> Result<ChainAction> {
        let n = self.win.len();
        let vimg: Vec<(usize, Mat)> = (0..n).map(|x| self.vertex_matrix(g, x)).collect::<Result<_>>()?;
        let table: Vec<usize> = vimg.iter().map(|(y, _)| *y).collect();
        let eimg = self.edge_images(&|x| table[x], &vimg)?;
        Ok(self.assemble(&vimg, &eimg))
    }

    pub fn homology(&self) -> Homology {
        let l = &self.lambda;
        let bd = self.boundary();
        let h0 = Quotient::new(l, bd.rows, &bd);
        let h1 = if bd.cols == 0 {
            Mat::zeros(0, 0)
        } else if bd.rows == 0 {
            Mat::identity(bd.cols)
        } else {
            reduce_span(l, &snf(l, &bd).kernel(l))
        };
        let h1_len = if h1.cols == 0 { 0 } else { span_len(l, &h1) };
        Homology { h0_len: h0.len(), h0, h1_len, h1, bd }
    }

    /// Classes in H_0 (quotient coordinates) of the image of F(x).
    pub fn vertex_image(&self, h: &Homology, x: usize) -> Mat {
        let vo = self.voffsets();
        let cols: Vec<Vec<u64>> = (0..self.vdim(x))
            .map(|k| {
                let mut v = vec![0u64; h.bd.rows];
                v[vo[x] + k] = 1;
                h.h0.project(&self.lambda, &v)
            })
            .collect();
        cols_to_mat(h.h0.dim(), &cols)
    }

    /// Classes in H_0 of the image of F(eta), through the head.
    pub fn edge_image(&self, h: &Homology, i: usize) -> Mat {
        let vo = self.voffsets();
        let (hd, _) = self.win.edges[i];
        let r = &self.rhead[i];
        let cols: Vec<Vec<u64>> = (0..r.cols)
            .map(|k| {
                let mut v = vec![0u64; h.bd.rows];
                for a in 0..r.rows {
                    v[vo[hd] + a] = r.get(a, k);
                }
                h.h0.project(&self.lambda, &v)
            })
            .collect();
        cols_to_mat(h.h0.dim(), &cols)
    }

    /// Index of the edge sigma in the window.
    pub fn sigma_edge(&self) -> Result<usize> {
        let a = self.win.idx(&Vertex::x_plus());
        let b = self.win.idx(&Vertex::x_minus());
        match (a, b) {
            (Some(a), Some(b)) => self.win.edge_between(a, b).ok_or(BtError::WindowExceeded("sigma".into())),
            _ => Err(BtError::WindowExceeded("sigma is not in the window".into())),
        }
    }

    fn interior(&self, x: usize, e: u32) -> bool {
        self.win.dist[x] + e + 1 <= self.win.radius
    }

    /// Generators of U^(e)_eta for the window edge i, as matrices.
    pub fn edge_level_gens(&self, i: usize, e: u32) -> Vec<GMatrix> {
        let t = &self.tree;
        let head = &self.win.verts[self.win.edges[i].0];
        crate::locaut::u_sigma_gens(t, e, e + 1)
            .iter()
            .map(|u| t.mul(&t.mul(&t.frame(head), u), &t.frame_inv(head)))
            .collect()
    }

    /// Matrices on F(z) of group elements fixing z.
    pub fn stabilizer_mats(&self, gens: &[GMatrix], z: usize) -> Result<Vec<Mat>> {
        gens.iter()
            .map(|g| {
                let (y, m) = self.vertex_matrix(g, z)?;
                if y != z {
                    return Err(BtError::HypothesisViolated("generator moves the vertex".into()));
                }
                Ok(m)
            })
            .collect()
    }

    /// The axioms of the category c^(e) at interior simplices.
    pub fn check_c_axioms(&self, e: u32) -> Result<AxiomReport> {
        let l = &self.lambda;
        let mut checks = Vec::new();
        let all = Gl2k::all(&self.rep.res);
        for (i, &(h, t)) in self.win.edges.iter().enumerate() {
            if !self.interior(h, e) || !self.interior(t, e) {
                continue;
            }
            let gens = self.edge_level_gens(i, e);
            for z in [h, t] {
                let r = self.transition(i, z);
                let injective = is_injective(l, r);
                let mats = self.stabilizer_mats(&gens, z)?;
                let inv = invariants(l, self.vdim(z), &mats);
                let fixed = mats.iter().all(|m| m.mul(l, r) == *r);
                let image_is_invariants = fixed && len_of(l, r) == len_of(l, &inv);
                let mut span = Mat::zeros(self.vdim(z), 0);
                for k in &all {
                    span = span.hcat(&self.vertex_matrix_kbar(z, z, k).mul(l, r));
                }
                let generates = len_of(l, &span) == l.r * self.vdim(z) as u32;
                checks.push(SimplexCheck {
                    simplex: format!("{} in {}", self.win.verts[z], Edge { head: self.win.verts[h].clone() }),
                    injective,
                    image_is_invariants,
                    generates,
                });
            }
        }
        let pass = checks.iter().all(|c| c.injective && c.image_is_invariants && c.generates);
        Ok(AxiomReport { checks, pass })
    }

    /// Hypotheses 1-3 at interior simplices, and generation of W by its
    /// N(k_F)-invariants under the opposite unipotent group.
    pub fn check_hyp123(&self) -> Result<HypReport> {
        let l = &self.lambda;
        let e = self.e;
        let t = &self.tree;
        let mut hyp1 = true;
        let mut hyp2 = true;
        let mut hyp3 = true;
        let mut witnesses = Vec::new();
        for (i, &(h, tl)) in self.win.edges.iter().enumerate() {
            if !self.interior(h, e) || !self.interior(tl, e) {
                continue;
            }
            for z in [h, tl] {
                if !is_injective(l, self.transition(i, z)) {
                    hyp1 = false;
                    witnesses.push(format!("hyp1 {}", self.win.verts[z]));
                }
            }
            let head = &self.win.verts[h];
            let gens: Vec<GMatrix> = self
                .rep
                .res
                .basis()
                .iter()
                .map(|&z| {
                    let b = t.k.fe_digit(z, e as i32 - 1, t.n);
                    t.mul(&t.mul(&t.frame(head), &t.n_mat(b)), &t.frame_inv(head))
                })
                .collect();
            let mats = self.stabilizer_mats(&gens, h)?;
            let inv = invariants(l, self.vdim(h), &mats);
            let r = &self.rhead[i];
            let fixed = mats.iter().all(|m| m.mul(l, r) == *r);
            if !(fixed && len_of(l, r) == len_of(l, &inv)) {
                hyp3 = false;
                witnesses.push(format!("hyp3 {}", Edge { head: head.clone() }));
            }
        }
        for x in 0..self.win.len() {
            if !self.interior(x, e) {
                continue;
            }
            let mut span = Mat::zeros(self.vdim(x), 0);
            let mut count = 0;
            for (i, &(_, tl)) in self.win.edges.iter().enumerate() {
                if tl == x {
                    span = span.hcat(&self.rtail[i]);
                    count += 1;
                }
            }
            if count != self.tree.q() as usize || len_of(l, &span) != l.r * self.vdim(x) as u32 {
                hyp2 = false;
                witnesses.push(format!("hyp2 {}", self.win.verts[x]));
            }
        }
        let wn = unipotent_invariants(&self.rep);
        let mut span = Mat::zeros(self.rep.dim(), 0);
        for c in 0..self.rep.res.q as u8 {
            span = span.hcat(&self.rep.matrix(&Gl2k { a: 1, b: 0, c, d: 1 }).mul(l, &wn));
        }
        let opposite_generation = len_of(l, &span) == l.r * self.rep.dim() as u32;
        Ok(HypReport { hyp1, hyp2, hyp3, opposite_generation, witnesses, pass: hyp1 && hyp2 && hyp3 })
    }

    /// Pushes a 0-chain toward sigma one shell at a time, subtracting
    /// boundaries. Each c_z at the outer shell must be fixed by
    /// U^(e)_{z-, z}; otherwise z is returned as a witness.
    pub fn reduce_support(&self, c: &[u64]) -> Result<ReduceOutcome> {
        if self.win.center != Center::Edge(Edge::sigma()) {
            return Err(BtError::InvalidSpec("support reduction runs on sigma-centered windows".into()));
        }
        let l = &self.lambda;
        let vo = self.voffsets();
        let mut c = c.to_vec();
        let mut steps = 0;
        let mut order: Vec<usize> = (0..self.win.len()).collect();
        order.sort_by_key(|&x| std::cmp::Reverse(self.win.dist[x]));
        for z in order {
            if self.win.dist[z] == 0 {
                break;
            }
            let cz: Vec<u64> = c[vo[z]..vo[z + 1]].to_vec();
            if cz.iter().all(|&v| v == 0) {
                continue;
            }
            let zm = self.win.nbrs[z]
                .iter()
                .copied()
                .find(|&y| self.win.dist[y] + 1 == self.win.dist[z])
                .expect("neighbor toward sigma");
            let i = self.win.edge_between(z, zm).expect("edge");
            let mats = self.stabilizer_mats(&self.edge_level_gens(i, self.e), z)?;
            if mats.iter().any(|m| m.mul_vec(l, &cz) != cz) {
                return Ok(ReduceOutcome::Failed { witness: self.win.verts[z].clone() });
            }
            let rz = self.transition(i, z);
            let Some(f) = snf(l, rz).solve(l, &cz) else {
                return Ok(ReduceOutcome::Failed { witness: self.win.verts[z].clone() });
            };
            let rm = self.transition(i, zm).mul_vec(l, &f);
            for k in 0..cz.len() {
                c[vo[z] + k] = 0;
            }
            for (k, v) in rm.iter().enumerate() {
                c[vo[zm] + k] = l.sub(c[vo[zm] + k], *v);
            }
            steps += 1;
        }
        Ok(ReduceOutcome::Reduced { chain: c, steps })
    }

    /// Compares the image of F(tau) in H_0 of the window with the invariants
    /// of the hat group of tau, tau = x+ or sigma.
    pub fn hat_invariants(&self, ctx: &AutCtx, h: &Homology, tau: &Center) -> Result<HatInvariants> {
        let l = &self.lambda;
        let gens = ctx.hat_gens(tau)?;
        let acts: Vec<Mat> = gens
            .iter()
            .map(|a| Ok(h.h0.induced(l, &self.hat_action(ctx, a)?.c0)))
            .collect::<Result<_>>()?;
        let inv = quotient_invariants(l, &h.h0, &acts);
        let (img, f_len) = match tau {
            Center::Vertex(v) => {
                let x = self.win.idx(v).ok_or(BtError::WindowExceeded(format!("{v}")))?;
                (self.vertex_image(h, x), l.r * self.vdim(x) as u32)
            }
            Center::Edge(_) => {
                let i = self.sigma_edge()?;
                (self.edge_image(h, i), len_of(l, &self.rhead[i]))
            }
        };
        let image_fixed = acts.iter().all(|a| {
            let d = a.mul(l, &img).sub(l, &img);
            (0..d.rows).all(|r| (0..d.cols).all(|c| d.get(r, c) % l.p.pow(h.h0.w[r]) == 0))
        });
        let inv_len = if inv.cols == 0 { 0 } else { h.h0.sub_len(l, &inv) };
        let image_len = if img.cols == 0 { 0 } else { h.h0.sub_len(l, &img) };
        Ok(HatInvariants {
            generators: gens.len(),
            f_len,
            image_len,
            inv_len,
            image_fixed,
            bijective: image_fixed && image_len == f_len && inv_len == f_len,
        })
    }

    /// Rebuilds the system from hat invariants of H_0 on a window around
    /// x+ and compares with F at x+ and sigma; the remaining simplices are
    /// translates of these.
    pub fn roundtrip(&self, ctx: &AutCtx) -> Result<RoundtripReport> {
        if !self.trivial_central_character {
            return Err(BtError::CentralCharacter);
        }
        if self.win.center != Center::Vertex(Vertex::x_plus()) {
            return Err(BtError::InvalidSpec("roundtrip runs on windows centered at x+".into()));
        }
        if self.win.radius + self.e + 1 > ctx.depth {
            return Err(BtError::BallTooSmall { need: self.win.radius + self.e + 1, have: ctx.depth });
        }
        let h = self.homology();
        let vertex = self.hat_invariants(ctx, &h, &Center::Vertex(Vertex::x_plus()))?;
        let edge = self.hat_invariants(ctx, &h, &Center::Edge(Edge::sigma()))?;
        let pass = vertex.bijective && edge.bijective;
        Ok(RoundtripReport { h0_len: h.h0_len, vertex, edge, pass })
    }

    pub fn manifest(&self) -> Manifest {
        let rows = |m: &Mat| (0..m.rows).map(|i| m.row(i)).collect::<Vec<_>>();
        Manifest {
            p: self.lambda.p,
            r: self.lambda.r,
            depth: self.win.radius,
            vertex_dims: (0..self.win.len()).map(|x| self.vdim(x)).collect(),
            edge_dims: self.edim.clone(),
            transitions: self.rhead.iter().zip(&self.rtail).map(|(a, b)| (rows(a), rows(b))).collect(),
            provider: format!("{:?}", self.rep.kind).to_lowercase(),
        }
    }
}

/// Length of the span of the columns.
pub fn len_of(l: &Lambda, m: &Mat) -> u32 {
    if m.cols == 0 || m.rows == 0 {
        0
    } else {
        span_len(l, m)
    }
}

/// Matrices of an automorphism on C_0 and C_1.
#[derive(Clone, Debug)]
pub struct ChainAction {
    pub c0: Mat,
    pub c1: Mat,
}

#[derive(Clone, Debug)]
pub struct Homology {
    pub bd: Mat,
    pub h0: Quotient,
    pub h0_len: u32,
    pub h1: Mat,
    pub h1_len: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimplexCheck {
    pub simplex: String,
    pub injective: bool,
    pub image_is_invariants: bool,
    pub generates: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AxiomReport {
    pub checks: Vec<SimplexCheck>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HypReport {
    pub hyp1: bool,
    pub hyp2: bool,
    pub hyp3: bool,
    pub opposite_generation: bool,
    pub witnesses: Vec<String>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReduceOutcome {
    Reduced { chain: Vec<u64>, steps: usize },
    Failed { witness: Vertex },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HatInvariants {
    pub generators: usize,
    pub f_len: u32,
    pub image_len: u32,
    pub inv_len: u32,
    pub image_fixed: bool,
    pub bijective: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RoundtripReport {
    pub h0_len: u32,
    pub vertex: HatInvariants,
    pub edge: HatInvariants,
    pub pass: bool,
}

/// Serialized form of a system.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub p: u64,
    pub r: u32,
    pub depth: u32,
    pub vertex_dims: Vec<usize>,
    pub edge_dims: Vec<usize>,
    pub transitions: Vec<(Vec<Vec<u64>>, Vec<Vec<u64>>)>,
    pub provider: String,
}

fn minus_orbit(tree: &Tree, x: &Vertex) -> bool {
    tree.distance(&Vertex::x_plus(), x) % 2 == 1
}

/// Symmetric window around sigma or x+.
pub fn system_window(tree: &Tree, center: Center, radius: u32) -> Result<Window> {
    tree.ball(&center, radius, BallMode::Symmetric)
}
