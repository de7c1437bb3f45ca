//! Finite-depth models of locally algebraic automorphism groups: the hat
//! groups acting on balls around sigma, the presented groups H_K and their
//! boundary and trace maps.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{BtError, Result};
use crate::localfield::{ExtensionData, LocalField};
use crate::rep::Gl2k;
use crate::tree::{BallMode, Center, Edge, GMatrix, Tree, Vertex, Window};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Flavor {
    HatUSigma,
    HatN0,
}

/// A permutation of the vertices of a window, indexed like the window.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DepthAut {
    pub e: u32,
    pub depth: u32,
    pub flavor: Flavor,
    pub table: Vec<u32>,
}

impl DepthAut {
    pub fn identity(e: u32, depth: u32, flavor: Flavor, n: usize) -> DepthAut {
        DepthAut { e, depth, flavor, table: (0..n as u32).collect() }
    }
    pub fn is_identity(&self) -> bool {
        self.table.iter().enumerate().all(|(i, &x)| i as u32 == x)
    }
    /// self after other.
    pub fn compose(&self, other: &DepthAut) -> Result<DepthAut> {
        if self.depth != other.depth || self.table.len() != other.table.len() {
            return Err(BtError::SpecMismatch("composing automorphisms of different depth".into()));
        }
        Ok(DepthAut {
            e: self.e,
            depth: self.depth,
            flavor: self.flavor,
            table: other.table.iter().map(|&i| self.table[i as usize]).collect(),
        })
    }
    pub fn inverse(&self) -> DepthAut {
        let mut t = vec![0u32; self.table.len()];
        for (i, &x) in self.table.iter().enumerate() {
            t[x as usize] = i as u32;
        }
        DepthAut { table: t, ..self.clone() }
    }
    /// Restriction to a prefix of the window (a smaller ball with the same
    /// center); fails if the prefix is not stable.
    pub fn restrict(&self, prefix: usize, depth: u32) -> Result<DepthAut> {
        let t: Vec<u32> = self.table[..prefix].to_vec();
        if t.iter().any(|&x| x as usize >= prefix) {
            return Err(BtError::WindowExceeded("restriction does not preserve the ball".into()));
        }
        Ok(DepthAut { e: self.e, depth, flavor: self.flavor, table: t })
    }
}

/// Permutation of a window induced by a matrix.
pub fn perm_of_matrix(tree: &Tree, win: &Window, g: &GMatrix) -> Result<Vec<u32>> {
    win.verts
        .iter()
        .map(|v| {
            let w = tree.act(g, v)?;
            win.idx(&w).map(|i| i as u32).ok_or_else(|| {
                BtError::WindowExceeded(format!("{v} is mapped to {w} outside the window"))
            })
        })
        .collect()
}

/// g_x y = n(u) t^m y for x = (m, u).
pub fn to_frame(tree: &Tree, x: &Vertex, y: &Vertex) -> Result<Vertex> {
    let z = y.shift(x.m);
    tree.act_n(&x.u_exact(z.m.max(x.m)), &z)
}

/// g_x^{-1} y.
pub fn from_frame(tree: &Tree, x: &Vertex, y: &Vertex) -> Result<Vertex> {
    let neg = tree.k.fe_neg(&x.u_exact(y.m.max(x.m)));
    Ok(tree.act_n(&neg, y)?.shift(-x.m))
}

/// Closure of a set of permutations (all of the same length) under
/// composition; returns all elements.
pub fn closure(gens: &[Vec<u32>], n: usize, cap: usize) -> Result<HashSet<Vec<u32>>> {
    let id: Vec<u32> = (0..n as u32).collect();
    let mut seen: HashSet<Vec<u32>> = HashSet::from([id.clone()]);
    let mut queue = VecDeque::from([id]);
    while let Some(g) = queue.pop_front() {
        for s in gens {
            let h: Vec<u32> = g.iter().map(|&i| s[i as usize]).collect();
            if !seen.contains(&h) {
                if seen.len() >= cap {
                    return Err(BtError::CapExceeded { cap });
                }
                seen.insert(h.clone());
                queue.push_back(h);
            }
        }
    }
    Ok(seen)
}

fn closure_tracked<T: Clone>(
    gens: &[(Vec<u32>, T)],
    n: usize,
    id_tag: T,
    mul: impl Fn(&T, &T) -> T,
    cap: usize,
) -> Result<HashMap<Vec<u32>, T>> {
    let id: Vec<u32> = (0..n as u32).collect();
    let mut seen: HashMap<Vec<u32>, T> = HashMap::from([(id.clone(), id_tag.clone())]);
    let mut queue = VecDeque::from([(id, id_tag)]);
    while let Some((g, tg)) = queue.pop_front() {
        for (s, ts) in gens {
            let h: Vec<u32> = g.iter().map(|&i| s[i as usize]).collect();
            if !seen.contains_key(&h) {
                if seen.len() >= cap {
                    return Err(BtError::CapExceeded { cap });
                }
                let th = mul(ts, &tg);
                seen.insert(h.clone(), th.clone());
                queue.push_back((h, th));
            }
        }
    }
    Ok(seen)
}

/// Generator matrices of 1 + pi^e M_2(O) up to pi^jmax.
pub fn congruence_gens(tree: &Tree, e: u32, jmax: u32) -> Vec<GMatrix> {
    let k = &tree.k;
    let mut out = Vec::new();
    for j in e..=jmax {
        for &z in &k.res.basis() {
            let x = k.fe_digit(z, j as i32, tree.n);
            let onepx = k.fe_add(&tree.one(), &x);
            out.push(tree.n_mat(x.clone()));
            out.push(tree.nlow_mat(x.clone()));
            out.push(tree.diag(onepx.clone(), tree.one()));
            out.push(tree.diag(tree.one(), onepx));
        }
    }
    out
}

/// Generator matrices of U_sigma^(e) up to pi^jmax.
pub fn u_sigma_gens(tree: &Tree, e: u32, jmax: u32) -> Vec<GMatrix> {
    let k = &tree.k;
    let mut out = Vec::new();
    for j in (e - 1)..=jmax {
        for &z in &k.res.basis() {
            let x = k.fe_digit(z, j as i32, tree.n);
            out.push(tree.n_mat(x.clone()));
            if j >= e {
                let onepx = k.fe_add(&tree.one(), &x);
                out.push(tree.nlow_mat(x));
                out.push(tree.diag(onepx.clone(), tree.one()));
                out.push(tree.diag(tree.one(), onepx));
            }
        }
    }
    out
}

/// Generators of GL2(O) with their residues.
fn gl2o_gens(tree: &Tree, jmax: u32) -> Vec<(GMatrix, Gl2k)> {
    let k = &tree.k;
    let res = &k.res;
    let mut out = Vec::new();
    for &z in &res.basis() {
        let x = k.fe_digit(z, 0, tree.n);
        out.push((tree.n_mat(x.clone()), Gl2k { a: 1, b: z, c: 0, d: 1 }));
        out.push((tree.nlow_mat(x), Gl2k { a: 1, b: 0, c: z, d: 1 }));
    }
    let g = res.primitive();
    out.push((tree.diag(k.fe_digit(g, 0, tree.n), tree.one()), Gl2k { a: g, b: 0, c: 0, d: 1 }));
    out.push((tree.w_mat(), Gl2k { a: 0, b: 1, c: 1, d: 0 }));
    for m in congruence_gens(tree, 1, jmax) {
        out.push((m, Gl2k::identity()));
    }
    if k.mixed() && k.p() == 2 {
        // -1 is not reached by the residue generators when p = 2
        let m1 = k.fe_int(-1, tree.n);
        out.push((tree.diag(m1, tree.one()), Gl2k::identity()));
    }
    out
}

/// Generators of the stabilizer of sigma in G (modulo the center).
fn sigma_stab_gens(tree: &Tree, jmax: u32) -> Vec<GMatrix> {
    let k = &tree.k;
    let res = &k.res;
    let mut out = Vec::new();
    for &z in &res.basis() {
        out.push(tree.n_mat(k.fe_digit(z, 0, tree.n)));
        out.push(tree.nlow_mat(k.fe_digit(z, 1, tree.n)));
    }
    let g = res.primitive();
    out.push(tree.diag(k.fe_digit(g, 0, tree.n), tree.one()));
    out.push(tree.diag(tree.one(), k.fe_digit(g, 0, tree.n)));
    out.extend(u_sigma_gens(tree, 1, jmax));
    if k.mixed() && k.p() == 2 {
        out.push(tree.diag(k.fe_int(-1, tree.n), tree.one()));
    }
    out.push(tree.s_mat());
    out
}

/// Context for automorphisms of Z^(depth)(sigma) at level e.
#[derive(Clone, Debug)]
pub struct AutCtx {
    pub tree: Arc<Tree>,
    pub e: u32,
    pub depth: u32,
    pub center: Center,
    pub win: Window,
    /// Z^(e)(x+).
    pub ball_v: Window,
    /// Z^(e)(sigma).
    pub ball_s: Window,
    /// Image of K_{x+} Z on Z^(e)(x+), with residues.
    pub vstab: HashMap<Vec<u32>, Gl2k>,
    /// Image of the stabilizer of sigma on Z^(e)(sigma), with a matrix.
    pub sstab: HashMap<Vec<u32>, GMatrix>,
    /// For window vertices x with Z^(e)(x) inside the window: window indices
    /// of g_x y for y in Z^(e)(x+).
    pub frame_fwd: Vec<Option<Vec<u32>>>,
    frame_inv: Vec<Option<HashMap<u32, u32>>>,
}

pub const DEFAULT_CAP: usize = 2_000_000;

impl AutCtx {
    pub fn new(tree: Arc<Tree>, e: u32, depth: u32) -> Result<AutCtx> {
        AutCtx::new_at(tree, e, depth, Center::Edge(Edge::sigma()))
    }

    /// Context on the ball of radius `depth` around x+ or sigma.
    pub fn new_at(tree: Arc<Tree>, e: u32, depth: u32, center: Center) -> Result<AutCtx> {
        match &center {
            Center::Vertex(v) if *v == Vertex::x_plus() => {}
            Center::Edge(ed) if *ed == Edge::sigma() => {}
            _ => return Err(BtError::InvalidSpec("center must be x+ or sigma".into())),
        }
        if e == 0 {
            return Err(BtError::InvalidSpec("level e must be at least 1".into()));
        }
        if depth < e + 1 {
            return Err(BtError::BallTooSmall { need: e + 1, have: depth });
        }
        let win = tree.ball(&center, depth, BallMode::Symmetric)?;
        let ball_v = tree.ball(&Center::Vertex(Vertex::x_plus()), e, BallMode::Symmetric)?;
        let ball_s = tree.sigma_ball(e)?;
        let jmax = e + 2;
        let vg: Vec<(Vec<u32>, Gl2k)> = gl2o_gens(&tree, jmax)
            .into_iter()
            .map(|(g, kb)| Ok((perm_of_matrix(&tree, &ball_v, &g)?, kb)))
            .collect::<Result<_>>()?;
        let res = tree.k.res.clone();
        let vstab = closure_tracked(&vg, ball_v.len(), Gl2k::identity(), |a, b| a.mul(&res, b), DEFAULT_CAP)?;
        let sg: Vec<(Vec<u32>, GMatrix)> = sigma_stab_gens(&tree, jmax)
            .into_iter()
            .map(|g| Ok((perm_of_matrix(&tree, &ball_s, &g)?, g)))
            .collect::<Result<_>>()?;
        let t2 = tree.clone();
        let sstab = closure_tracked(&sg, ball_s.len(), tree.identity(), |a, b| t2.mul(a, b), DEFAULT_CAP)?;
        let mut frame_fwd = Vec::with_capacity(win.len());
        let mut frame_inv = Vec::with_capacity(win.len());
        for (i, x) in win.verts.iter().enumerate() {
            if win.dist[i] + e > depth {
                frame_fwd.push(None);
                frame_inv.push(None);
                continue;
            }
            let img: Vec<u32> = ball_v
                .verts
                .iter()
                .map(|y| {
                    let z = to_frame(&tree, x, y)?;
                    win.idx(&z)
                        .map(|j| j as u32)
                        .ok_or_else(|| BtError::WindowExceeded(format!("{z} outside window")))
                })
                .collect::<Result<_>>()?;
            let inv: HashMap<u32, u32> = img.iter().enumerate().map(|(a, &b)| (b, a as u32)).collect();
            frame_fwd.push(Some(img));
            frame_inv.push(Some(inv));
        }
        Ok(AutCtx { tree, e, depth, center, win, ball_v, ball_s, vstab, sstab, frame_fwd, frame_inv })
    }

    pub fn identity(&self) -> DepthAut {
        DepthAut::identity(self.e, self.depth, Flavor::HatUSigma, self.win.len())
    }

    pub fn from_matrix(&self, g: &GMatrix) -> Result<DepthAut> {
        Ok(DepthAut {
            e: self.e,
            depth: self.depth,
            flavor: Flavor::HatUSigma,
            table: perm_of_matrix(&self.tree, &self.win, g)?,
        })
    }

    /// Residue class k_bar with g_{a x}^{-1} a g_x = k on Z^(e)(x+), for a
    /// window vertex x whose e-ball lies in the window.
    pub fn vertex_kbar(&self, a: &DepthAut, x: usize) -> Result<Gl2k> {
        let fwd = self.frame_fwd[x]
            .as_ref()
            .ok_or(BtError::BallTooSmall { need: self.win.dist[x] + self.e, have: self.depth })?;
        let ax = a.table[x] as usize;
        let inv = self.frame_inv[ax]
            .as_ref()
            .ok_or(BtError::BallTooSmall { need: self.win.dist[ax] + self.e, have: self.depth })?;
        let perm: Vec<u32> = fwd
            .iter()
            .map(|&y| {
                inv.get(&a.table[y as usize]).copied().ok_or_else(|| {
                    BtError::NoCertificate(format!("vertex {} is not mapped isometrically", self.win.verts[x]))
                })
            })
            .collect::<Result<_>>()?;
        self.vstab
            .get(&perm)
            .copied()
            .ok_or_else(|| BtError::NoCertificate(format!("vertex {}", self.win.verts[x])))
    }

    /// Edges of the window whose e-ball is inside the window.
    pub fn interior_edges(&self) -> Vec<usize> {
        (0..self.win.edges.len())
            .filter(|&i| {
                let (h, t) = self.win.edges[i];
                self.win.dist[h].max(self.win.dist[t]) + self.e <= self.depth
            })
            .collect()
    }

    /// Local algebraicity: for each interior edge a certificate g' with
    /// g' = a on Z^(e)(mu).
    pub fn is_locally_algebraic(&self, a: &DepthAut) -> Result<(bool, Vec<(Edge, GMatrix)>)> {
        if self.depth < self.e + 1 {
            return Err(BtError::BallTooSmall { need: self.e + 1, have: self.depth });
        }
        let tree = &self.tree;
        let mut certs = Vec::new();
        for ei in self.interior_edges() {
            let (h, t) = self.win.edges[ei];
            let mu = Edge { head: self.win.verts[h].clone() };
            let ah = &self.win.verts[a.table[h] as usize];
            let at = &self.win.verts[a.table[t] as usize];
            let nu = match Edge::from_pair(ah, at) {
                Ok(nu) => nu,
                Err(_) => return Ok((false, certs)),
            };
            let mut perm = Vec::with_capacity(self.ball_s.len());
            for y in &self.ball_s.verts {
                let z = to_frame(tree, &mu.head, y)?;
                let zi = self.win.idx(&z).ok_or_else(|| BtError::WindowExceeded(format!("{z}")))?;
                let az = &self.win.verts[a.table[zi] as usize];
                let back = from_frame(tree, &nu.head, az)?;
                match self.ball_s.idx(&back) {
                    Some(j) => perm.push(j as u32),
                    None => return Ok((false, certs)),
                }
            }
            match self.sstab.get(&perm) {
                Some(kmat) => {
                    let g = tree.mul(&tree.mul(&tree.frame(&nu.head), kmat), &tree.frame_inv(&mu.head));
                    certs.push((mu, g));
                }
                None => return Ok((false, certs)),
            }
        }
        Ok((true, certs))
    }

    /// Automorphisms acting like g' on the halftree at z away from its
    /// neighbor z- toward `toward` and trivially elsewhere, for g' running
    /// through generators of U^(e)_{z-}; z ranges over window vertices at
    /// distance 1..=zmax from `toward`.
    pub fn branch_auts(&self, toward: &Center, zmax: u32) -> Result<Vec<DepthAut>> {
        let tree = &self.tree;
        let dist_to = |v: &Vertex| match toward {
            Center::Vertex(c) => tree.distance(c, v),
            Center::Edge(ed) => tree.distance_to_edge(ed, v),
        };
        let kgens = congruence_gens(tree, self.e, self.depth + 2);
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for (zi, z) in self.win.verts.iter().enumerate() {
            let dz = dist_to(z);
            if dz == 0 || dz > zmax {
                continue;
            }
            let Some(zm) = self.win.nbrs[zi]
                .iter()
                .copied()
                .find(|&j| dist_to(&self.win.verts[j]) + 1 == dz)
            else {
                continue;
            };
            let zmv = &self.win.verts[zm];
            let half: Vec<usize> = (0..self.win.len())
                .filter(|&v| {
                    let vv = &self.win.verts[v];
                    tree.distance(vv, z) < tree.distance(vv, zmv)
                })
                .collect();
            for kg in &kgens {
                let mut table: Vec<u32> = (0..self.win.len() as u32).collect();
                for &v in &half {
                    let y = from_frame(tree, zmv, &self.win.verts[v])?;
                    let ky = tree.act(kg, &y)?;
                    let w = to_frame(tree, zmv, &ky)?;
                    table[v] = self
                        .win
                        .idx(&w)
                        .ok_or_else(|| BtError::WindowExceeded(format!("{w}")))?
                        as u32;
                }
                let a = DepthAut { e: self.e, depth: self.depth, flavor: Flavor::HatUSigma, table };
                if !a.is_identity() && seen.insert(a.table.clone()) {
                    out.push(a);
                }
            }
        }
        Ok(out)
    }

    /// Generator matrices of U^(e)_tau for tau = sigma or x+.
    pub fn level_matrices(&self, tau: &Center) -> Result<Vec<GMatrix>> {
        match tau {
            Center::Edge(ed) if *ed == Edge::sigma() => Ok(u_sigma_gens(&self.tree, self.e, self.depth + 2)),
            Center::Vertex(v) if *v == Vertex::x_plus() => Ok(congruence_gens(&self.tree, self.e, self.depth + 2)),
            _ => Err(BtError::InvalidSpec("level groups are provided for sigma and x+".into())),
        }
    }

    /// Restrictions of the generator matrices of U^(e)_tau.
    pub fn matrix_gens_at(&self, tau: &Center) -> Result<Vec<DepthAut>> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for g in self.level_matrices(tau)? {
            let a = self.from_matrix(&g)?;
            if !a.is_identity() && seen.insert(a.table.clone()) {
                out.push(a);
            }
        }
        Ok(out)
    }

    /// Generators of the hat group of tau: matrix generators together with
    /// branch automorphisms toward tau.
    pub fn hat_gens(&self, tau: &Center) -> Result<Vec<DepthAut>> {
        let mut out = self.matrix_gens_at(tau)?;
        let mut seen: HashSet<Vec<u32>> = out.iter().map(|a| a.table.clone()).collect();
        for a in self.branch_auts(tau, self.depth)? {
            if seen.insert(a.table.clone()) {
                out.push(a);
            }
        }
        Ok(out)
    }

    /// Restrictions of the U^(e)_sigma generator matrices.
    pub fn matrix_gens(&self) -> Result<Vec<DepthAut>> {
        self.matrix_gens_at(&Center::Edge(Edge::sigma()))
    }

    /// The standard generator set of the hat group of sigma at this depth.
    pub fn standard_gens(&self) -> Result<Vec<DepthAut>> {
        self.hat_gens(&Center::Edge(Edge::sigma()))
    }

    /// Membership in the hat group of U_sigma at this depth: for each
    /// interior edge mu some element of U^(e)_sigma agrees with a on
    /// Z^(e)(mu). Uses orbits of restriction tuples under the matrix
    /// generators.
    pub fn in_hat_u(&self, a: &DepthAut, cap: usize) -> Result<bool> {
        let gens: Vec<Vec<u32>> = self.matrix_gens()?.into_iter().map(|g| g.table).collect();
        for ei in self.interior_edges() {
            let (h, _) = self.win.edges[ei];
            let mu = Edge { head: self.win.verts[h].clone() };
            let ball = self.tree.ball(&Center::Edge(mu), self.e, BallMode::Symmetric)?;
            let pts: Vec<u32> = ball.verts.iter().map(|v| self.win.idx(v).unwrap() as u32).collect();
            let target: Vec<u32> = pts.iter().map(|&i| a.table[i as usize]).collect();
            let mut seen: HashSet<Vec<u32>> = HashSet::from([pts.clone()]);
            let mut queue = VecDeque::from([pts]);
            let mut found = false;
            while let Some(t) = queue.pop_front() {
                if t == target {
                    found = true;
                    break;
                }
                for g in &gens {
                    let nt: Vec<u32> = t.iter().map(|&i| g[i as usize]).collect();
                    if seen.insert(nt.clone()) {
                        if seen.len() > cap {
                            return Err(BtError::CapExceeded { cap });
                        }
                        queue.push_back(nt);
                    }
                }
            }
            if !found {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Order of the group generated by the restrictions to Z^(m)(sigma).
    pub fn closure_image_order(&self, gens: &[DepthAut], m: u32, cap: usize) -> Result<usize> {
        if m > self.depth {
            return Err(BtError::BallTooSmall { need: m, have: self.depth });
        }
        let n = self.win.prefix(m);
        let rs: Vec<Vec<u32>> = gens
            .iter()
            .map(|g| g.restrict(n, m).map(|r| r.table))
            .collect::<Result<_>>()?;
        Ok(closure(&rs, n, cap)?.len())
    }
}

/// Whether n is a power of p.
pub fn is_p_power(n: usize, p: usize) -> bool {
    let mut n = n;
    while n > 1 && n % p == 0 {
        n /= p;
    }
    n == 1
}

// ---------------------------------------------------------------------------
// The presented groups H_K^(e)

/// Parameters of H_K^(e): entries at level k lie in p^(k+e-1) / p^prec.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HSpec {
    pub e: u32,
    pub top: u32,
    pub prec: u32,
}

/// An element of H_K^(e): levels[k][a] = x_{a,k} as `prec` digits, with a
/// running over O/p^k in little-endian digit order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HElem {
    pub spec: HSpec,
    pub levels: Vec<Vec<Vec<u8>>>,
}

/// Arithmetic context for H_K^(e) over a local field.
#[derive(Clone, Debug)]
pub struct HGroup {
    pub k: Arc<LocalField>,
    pub spec: HSpec,
}

impl HGroup {
    pub fn new(k: Arc<LocalField>, e: u32, top: u32, prec: u32) -> Result<HGroup> {
        if e == 0 {
            return Err(BtError::InvalidSpec("e must be positive".into()));
        }
        Ok(HGroup { k, spec: HSpec { e, top, prec } })
    }

    fn q(&self) -> usize {
        self.k.q() as usize
    }

    /// Lowest allowed digit position at level k.
    pub fn floor(&self, level: u32) -> u32 {
        level + self.spec.e - 1
    }

    pub fn identity(&self) -> HElem {
        let p = self.spec.prec as usize;
        HElem {
            spec: self.spec,
            levels: (0..=self.spec.top)
                .map(|k| vec![vec![0u8; p]; self.q().pow(k)])
                .collect(),
        }
    }

    pub fn check(&self, h: &HElem) -> Result<()> {
        if h.spec != self.spec {
            return Err(BtError::SpecMismatch(format!("{:?} vs {:?}", h.spec, self.spec)));
        }
        for (k, lv) in h.levels.iter().enumerate() {
            let fl = self.floor(k as u32) as usize;
            for x in lv {
                if x.iter().take(fl.min(x.len())).any(|&d| d != 0) {
                    return Err(BtError::InvalidSpec(format!("entry at level {k} below p^{fl}")));
                }
            }
        }
        Ok(())
    }

    /// Element with a single entry x_{a,k} = value.
    pub fn single(&self, level: u32, a: &[u8], value: &[u8]) -> HElem {
        let mut h = self.identity();
        let idx = self.k.class_index(a);
        let p = self.spec.prec as usize;
        let mut v = value.to_vec();
        v.resize(p, 0);
        for d in v.iter_mut().take(self.floor(level).min(p as u32) as usize) {
            *d = 0;
        }
        h.levels[level as usize][idx] = v;
        h
    }

    /// epsilon_K o ... o epsilon_0 applied to x in O/p^len (len <= prec),
    /// using the levels below `upto`.
    fn delta_partial(&self, h: &HElem, upto: usize, x: &[u8]) -> Vec<u8> {
        let len = x.len();
        let mut y = x.to_vec();
        for k in 0..upto.min(h.levels.len()) {
            if k > len {
                break;
            }
            let a = self.k.class_index(&y[..k]);
            let add = &h.levels[k][a][..len];
            y = self.k.add_d(&y, add);
        }
        y
    }

    fn delta_partial_inv(&self, h: &HElem, upto: usize, x: &[u8]) -> Vec<u8> {
        let len = x.len();
        let mut y = x.to_vec();
        for k in (0..upto.min(h.levels.len())).rev() {
            if k > len {
                continue;
            }
            let a = self.k.class_index(&y[..k]);
            let sub = &h.levels[k][a][..len];
            y = self.k.sub_d(&y, sub);
        }
        y
    }

    /// The action of h on O/p^len, len <= prec.
    pub fn act_end(&self, h: &HElem, x: &[u8]) -> Result<Vec<u8>> {
        if x.len() > self.spec.prec as usize {
            return Err(BtError::PrecisionExhausted("class finer than the precision".into()));
        }
        Ok(self.delta_partial(h, h.levels.len(), x))
    }

    pub fn mul(&self, a: &HElem, b: &HElem) -> Result<HElem> {
        if a.spec != self.spec || b.spec != self.spec {
            return Err(BtError::SpecMismatch("HElem specs differ".into()));
        }
        let mut out = self.identity();
        for k in 0..a.levels.len() {
            let classes = self.k.all_classes(k as u32);
            for (ci, c) in classes.iter().enumerate() {
                // (a_{<k} . b_k)_c = b_k at delta(a_{<k})^{-1}(c)
                let pre = self.delta_partial_inv(a, k, c);
                let bi = self.k.class_index(&pre);
                out.levels[k][ci] = self.k.add_d(&a.levels[k][ci], &b.levels[k][bi]);
            }
        }
        Ok(out)
    }

    pub fn inv(&self, a: &HElem) -> Result<HElem> {
        if a.spec != self.spec {
            return Err(BtError::SpecMismatch("HElem spec differs".into()));
        }
        let mut out = self.identity();
        for k in 0..a.levels.len() {
            // built from the levels of `out` below k, which invert a_{<k}
            let classes = self.k.all_classes(k as u32);
            for (di, d) in classes.iter().enumerate() {
                let img = self.delta_partial(a, k, d);
                let ai = self.k.class_index(&img);
                out.levels[k][di] = self.k.neg_d(&a.levels[k][ai]);
            }
        }
        Ok(out)
    }

    /// Every element, in a fixed order.
    pub fn enumerate(&self, cap: usize) -> Result<Vec<HElem>> {
        let p = self.spec.prec;
        let mut slots: Vec<(usize, usize, u32)> = Vec::new();
        for k in 0..=self.spec.top {
            let fl = self.floor(k);
            if fl >= p {
                continue;
            }
            for a in 0..self.q().pow(k) {
                slots.push((k as usize, a, fl));
            }
        }
        let per: Vec<usize> = slots.iter().map(|&(_, _, fl)| self.q().pow(p - fl)).collect();
        let total: usize = per.iter().try_fold(1usize, |acc, &x| acc.checked_mul(x)).unwrap_or(usize::MAX);
        if total > cap {
            return Err(BtError::CapExceeded { cap });
        }
        let mut out = Vec::with_capacity(total);
        for mut idx in 0..total {
            let mut h = self.identity();
            for (s, &(k, a, fl)) in slots.iter().enumerate() {
                let v = idx % per[s];
                idx /= per[s];
                let digits = self.k.all_classes(p - fl).swap_remove(v);
                for (i, d) in digits.into_iter().enumerate() {
                    h.levels[k][a][fl as usize + i] = d;
                }
            }
            out.push(h);
        }
        Ok(out)
    }

    /// Predicted order: prod_k q^(max(0, prec - k - e + 1) q^k).
    pub fn order_formula(&self) -> u128 {
        let q = self.q() as u128;
        (0..=self.spec.top)
            .map(|k| {
                let ex = (self.spec.prec as i64 - self.floor(k) as i64).max(0) as u32;
                q.pow(ex * (self.q() as u32).pow(k))
            })
            .product()
    }

    /// The permutation of O/p^(top+1) induced by h.
    pub fn end_perm(&self, h: &HElem) -> Result<Vec<u32>> {
        let len = (self.spec.top + 1).min(self.spec.prec);
        self.k
            .all_classes(len)
            .iter()
            .map(|x| Ok(self.k.class_index(&self.act_end(h, x)?) as u32))
            .collect()
    }

    /// The single-entry generators x_{a,k} = zeta p^(k+e-1+j).
    pub fn generators(&self) -> Vec<HElem> {
        let mut out = Vec::new();
        for k in 0..=self.spec.top {
            for a in self.k.all_classes(k) {
                for j in self.floor(k)..self.spec.prec {
                    for &z in &self.k.res.basis() {
                        let mut v = vec![0u8; self.spec.prec as usize];
                        if self.k.mixed() {
                            v[j as usize] = 1;
                        } else {
                            v[j as usize] = z;
                        }
                        out.push(self.single(k, &a, &v));
                        if self.k.mixed() {
                            break;
                        }
                    }
                }
            }
        }
        out
    }
}

/// The boundary map H^(e+1)_{K-1} -> H^(e)_K: each level-k component y
/// contributes diag(y) at level k+1 and -y at level k; the factors are
/// multiplied with higher levels on the left.
pub fn boundary(src: &HGroup, dst: &HGroup, h: &HElem) -> Result<HElem> {
    src.check(h)?;
    if src.spec.e != dst.spec.e + 1 || src.spec.prec != dst.spec.prec || src.spec.top + 1 > dst.spec.top + 1 {
        return Err(BtError::SpecMismatch("boundary needs e+1 -> e at equal precision".into()));
    }
    let mut acc = dst.identity();
    for k in (0..h.levels.len()).rev() {
        if k + 1 > dst.spec.top as usize {
            // the diagonal part would live above the top level; skip only if zero
            if h.levels[k].iter().any(|x| x.iter().any(|&d| d != 0)) {
                return Err(BtError::DepthExceedsK { d: k as u32 + 1, k: dst.spec.top });
            }
            continue;
        }
        let mut f = dst.identity();
        let q = dst.q();
        for (a, y) in h.levels[k].iter().enumerate() {
            f.levels[k][a] = dst.k.neg_d(y);
            for c in 0..q {
                // classes mod p^(k+1) reducing to a: index a + c q^k
                f.levels[k + 1][a + c * q.pow(k as u32)] = y.clone();
            }
        }
        acc = dst.mul(&acc, &f)?;
    }
    Ok(acc)
}

/// Outcome of the exhaustive presentation check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PresentationReport {
    pub order: u64,
    pub order_formula: u64,
    pub image: u64,
    pub kernel: u64,
    pub boundary_image: u64,
    pub kernel_equals_boundary: bool,
    pub ok: bool,
}

/// Exhaustive check that the kernel of the action of H_K^(e) on O/p^(K+1)
/// is the image of the boundary map.
pub fn check_presentation(k: Arc<LocalField>, e: u32, top: u32, cap: usize) -> Result<PresentationReport> {
    let prec = top + 1;
    let h = HGroup::new(k.clone(), e, top, prec)?;
    let all = h.enumerate(cap)?;
    let id_perm: Vec<u32> = (0..k.q().pow(prec)).collect();
    let mut images: HashSet<Vec<u32>> = HashSet::new();
    let mut kernel: HashSet<HElem> = HashSet::new();
    for x in &all {
        let p = h.end_perm(x)?;
        if p == id_perm {
            kernel.insert(x.clone());
        }
        images.insert(p);
    }
    let mut bimg: HashSet<HElem> = HashSet::new();
    if top >= 1 {
        let src = HGroup::new(k.clone(), e + 1, top - 1, prec)?;
        for y in src.enumerate(cap)? {
            bimg.insert(boundary(&src, &h, &y)?);
        }
    } else {
        bimg.insert(h.identity());
    }
    let keq = kernel == bimg;
    let order = all.len() as u64;
    let formula = h.order_formula() as u64;
    let ok = keq && formula == order && images.len() as u64 * bimg.len() as u64 == order;
    Ok(PresentationReport {
        order,
        order_formula: formula,
        image: images.len() as u64,
        kernel: kernel.len() as u64,
        boundary_image: bimg.len() as u64,
        kernel_equals_boundary: keq,
        ok,
    })
}

/// Forward window Z_+^(D)(x+).
pub fn forward_window(tree: &Tree, depth: u32) -> Result<Window> {
    tree.ball(&Center::Vertex(Vertex::x_plus()), depth, BallMode::Forward)
}

/// The automorphism of the forward ball of depth D induced by h:
/// (m, u) -> (m, delta(h)(u) mod p^m).
pub fn h_to_treeaut(h: &HGroup, x: &HElem, win: &Window) -> Result<DepthAut> {
    let depth = win.radius;
    if depth > h.spec.top + 1 || depth > h.spec.prec {
        return Err(BtError::DepthExceedsK { d: depth, k: h.spec.top });
    }
    let table = win
        .verts
        .iter()
        .map(|v| {
            let digits: Vec<u8> = (0..v.m).map(|i| v.digit(i)).collect();
            let img = h.act_end(x, &digits)?;
            let w = Vertex::from_digits(v.m, 0, &img);
            win.idx(&w).map(|i| i as u32).ok_or_else(|| BtError::WindowExceeded(format!("{w}")))
        })
        .collect::<Result<_>>()?;
    Ok(DepthAut { e: h.spec.e, depth, flavor: Flavor::HatN0, table })
}

/// Image of the hat N_{0,1}^(e) on the forward ball of depth D, as the
/// closure of the images of the single-entry generators.
pub fn n0_image(k: &Arc<LocalField>, tree: &Tree, e: u32, depth: u32, cap: usize) -> Result<HashSet<Vec<u32>>> {
    let win = forward_window(tree, depth)?;
    let top = depth.saturating_sub(1).max(0);
    let h = HGroup::new(k.clone(), e, top, depth)?;
    let gens: Vec<Vec<u32>> = h
        .generators()
        .iter()
        .map(|g| h_to_treeaut(&h, g, &win).map(|a| a.table))
        .collect::<Result<_>>()?;
    closure(&gens, win.len(), cap)
}

/// Index of the intersection with t^m N t^-m inside the image of the hat
/// N_{0,1}^(e), computed on the forward ball of depth m + e.
pub fn conjugate_index(k: &Arc<LocalField>, tree: &Tree, e: u32, m: u32, cap: usize) -> Result<u64> {
    if m == 0 {
        return Ok(1);
    }
    let depth = m + e;
    let big = forward_window(tree, depth)?;
    let a = n0_image(k, tree, e, depth, cap)?;
    // the subgroup: independent copies of the depth-e image on each subtree at level m
    let small_win = forward_window(tree, e)?;
    let small = n0_image(k, tree, e, e, cap)?;
    let roots: Vec<usize> = (0..big.len()).filter(|&i| big.verts[i].m == m as i32).collect();
    let mut gens: Vec<Vec<u32>> = Vec::new();
    for &r in &roots {
        let root = &big.verts[r];
        // position map: small window vertex -> big window vertex in the subtree
        let map: Vec<usize> = small_win
            .verts
            .iter()
            .map(|v| {
                let w = tree.act_n(&root.u_exact(v.m + m as i32), &v.shift(m as i32))?;
                big.idx(&w).ok_or_else(|| BtError::WindowExceeded(format!("{w}")))
            })
            .collect::<Result<_>>()?;
        for s in &small {
            let mut t: Vec<u32> = (0..big.len() as u32).collect();
            for (i, &j) in map.iter().enumerate() {
                t[j] = map[s[i] as usize] as u32;
            }
            gens.push(t);
        }
    }
    let b = closure(&gens, big.len(), cap)?;
    if !b.iter().all(|x| a.contains(x)) {
        return Err(BtError::HypothesisViolated("conjugate subgroup not contained in the image".into()));
    }
    Ok((a.len() / b.len()) as u64)
}

/// The canonical retraction along the end through (D, f): the element
/// [[pi^k, f' - pi^k f], [0, 1]] of TN agreeing with a on the apartment,
/// where the image end is (D + k, f'). `win` must contain the path.
pub fn retract_along_end(tree: &Tree, a: &DepthAut, win: &Window, f: &Vertex) -> Result<GMatrix> {
    let fi = win.idx(f).ok_or_else(|| BtError::WindowExceeded(format!("{f}")))?;
    let img = &win.verts[a.table[fi] as usize];
    let shift = img.m - f.m;
    // check agreement on the ancestors inside the window
    let mut cur = f.clone();
    let mut cur_img = img.clone();
    while let Some(ci) = win.idx(&cur) {
        if win.verts[a.table[ci] as usize] != cur_img {
            return Err(BtError::HypothesisViolated("automorphism does not preserve the end alpha_0".into()));
        }
        if cur.m <= win.verts.iter().map(|v| v.m).min().unwrap_or(0) {
            break;
        }
        cur = cur.parent();
        cur_img = cur_img.parent();
    }
    let k = &tree.k;
    let prec = img.m;
    let pik = tree.pi_pow(shift);
    let b = k.fe_sub(&img.u_exact(prec), &k.fe_mul(&pik, &f.u_exact(f.m)));
    Ok(GMatrix { a: pik, b: b.truncate(prec.min(b.prec()))?, c: tree.zero(), d: tree.one() })
}

/// Restriction of an automorphism of the forward ball at (-j, 0) to the
/// subtrees rooted at the level-0 vertices (0, b).
pub fn decompose_product(win: &Window, a: &DepthAut) -> Result<Vec<(Vertex, Vec<(usize, usize)>)>> {
    let mut out = Vec::new();
    for (ri, r) in win.verts.iter().enumerate() {
        if r.m != 0 {
            continue;
        }
        let mut comp = Vec::new();
        for (i, v) in win.verts.iter().enumerate() {
            if v.m >= 0 && (0..=v.m).fold(v.clone(), |x, _| if x.m > 0 { x.parent() } else { x }) == *r {
                let j = a.table[i] as usize;
                let w = &win.verts[j];
                let wr = (0..=w.m).fold(w.clone(), |x, _| if x.m > 0 { x.parent() } else { x });
                if wr != *r {
                    return Err(BtError::HypothesisViolated(format!(
                        "subtree at {r} is not preserved"
                    )));
                }
                comp.push((i, j));
            }
        }
        let _ = ri;
        out.push((r.clone(), comp));
    }
    Ok(out)
}

/// Reassemble components into a table on the window (vertices not covered
/// are fixed).
pub fn reassemble(win: &Window, comps: &[(Vertex, Vec<(usize, usize)>)], e: u32) -> DepthAut {
    let mut t: Vec<u32> = (0..win.len() as u32).collect();
    for (_, c) in comps {
        for &(i, j) in c {
            t[i] = j as u32;
        }
    }
    DepthAut { e, depth: win.radius, flavor: Flavor::HatN0, table: t }
}

/// The levelwise trace H^(e)_K[F] -> H^(e')_K'[E].
pub fn trace_map(ext: &ExtensionData, src: &HGroup, dst: &HGroup, h: &HElem) -> Result<HElem> {
    let ram = ext.ram;
    if dst.spec.e * ram > src.spec.e {
        return Err(BtError::HypothesisViolated(format!(
            "need e' * e(F/E) <= e, got {} * {} > {}",
            dst.spec.e, ram, src.spec.e
        )));
    }
    src.check(h)?;
    let mut out = dst.identity();
    let dprec = dst.spec.prec as usize;
    let tr = |x: &[u8]| -> Result<Vec<u8>> {
        let t = ext.trace_digits(x);
        if t.len() < dprec {
            return Err(BtError::PrecisionExhausted("trace image too short".into()));
        }
        Ok(t[..dprec].to_vec())
    };
    out.levels[0][0] = tr(&h.levels[0][0])?;
    for m in 1..=dst.spec.top {
        let eclasses = ext.small.all_classes(m);
        for (ci, c) in eclasses.iter().enumerate() {
            let mut acc = vec![0u8; dprec];
            for t in 0..ram {
                let lvl = m * ram - t;
                if lvl as usize >= h.levels.len() {
                    return Err(BtError::DepthExceedsK { d: lvl, k: src.spec.top });
                }
                let fc = ext.embed_digits(c, lvl as usize)?;
                let fi = src.k.class_index(&fc);
                let v = tr(&h.levels[lvl as usize][fi])?;
                acc = ext.small.add_d(&acc, &v);
            }
            out.levels[m as usize][ci] = acc;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localfield::LocalFieldSpec;
    use crate::tree::tree_for_depth;

    fn ctx(p: u32, f: u32, e: u32, d: u32) -> AutCtx {
        let spec = if f == 1 { LocalFieldSpec::qp(p, 40) } else { LocalFieldSpec::fq(p, f, 40) };
        let t = tree_for_depth(Arc::new(LocalField::new(spec).unwrap()), d).unwrap();
        AutCtx::new(Arc::new(t), e, d).unwrap()
    }

    #[test]
    fn matrices_are_locally_algebraic() {
        let c = ctx(2, 1, 1, 3);
        for g in c.matrix_gens().unwrap() {
            assert!(c.is_locally_algebraic(&g).unwrap().0);
        }
    }

    #[test]
    fn h_group_laws_small() {
        let k = Arc::new(LocalField::new(LocalFieldSpec::qp(2, 4)).unwrap());
        let h = HGroup::new(k, 1, 1, 2).unwrap();
        let all = h.enumerate(1000).unwrap();
        assert_eq!(all.len(), 16);
        for a in &all {
            let ai = h.inv(a).unwrap();
            assert_eq!(h.mul(a, &ai).unwrap(), h.identity());
            assert_eq!(h.mul(&ai, a).unwrap(), h.identity());
        }
    }
}
