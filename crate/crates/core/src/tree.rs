//! The Bruhat-Tits tree of PGL2(F) in Iwasawa coordinates.
//!
//! A vertex (m, u) is the class of the lattice with basis columns
//! (pi^m, 0) and (u, 1), i.e. n(u) t^m x+ with t = diag(pi, 1). The class u
//! lives in F / p^m O and is stored as its digits in positions lo..m-1.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{BtError, Result};
use crate::localfield::{Fe, LocalField};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex {
    pub m: i32,
    /// Position of the first digit; equals m when u = 0.
    pub lo: i32,
    /// Digits of u in positions lo..m-1; the first one is nonzero.
    pub d: Vec<u8>,
}

impl Vertex {
    pub fn x_plus() -> Vertex {
        Vertex { m: 0, lo: 0, d: Vec::new() }
    }
    pub fn x_minus() -> Vertex {
        Vertex { m: -1, lo: -1, d: Vec::new() }
    }
    /// Vertex (m, 0).
    pub fn level(m: i32) -> Vertex {
        Vertex { m, lo: m, d: Vec::new() }
    }
    /// Canonical vertex from a level and an expansion of u known at least
    /// modulo pi^m.
    pub fn from_fe(m: i32, u: &Fe) -> Result<Vertex> {
        if u.prec() < m {
            return Err(BtError::PrecisionExhausted(format!(
                "coordinate known modulo pi^{} but level is {m}",
                u.prec()
            )));
        }
        let mut lo = u.v.min(m);
        let mut d: Vec<u8> = (lo..m).map(|i| u.digit(i)).collect();
        let skip = d.iter().position(|&x| x != 0).unwrap_or(d.len());
        d.drain(..skip);
        lo += skip as i32;
        Ok(Vertex { m, lo, d })
    }
    /// Vertex (m, sum digits[i] pi^(lo+i)).
    pub fn from_digits(m: i32, lo: i32, digits: &[u8]) -> Vertex {
        Vertex::from_fe(m, &Fe { v: lo, d: digits.to_vec() }.truncate_or_pad(m))
            .expect("padded expansion")
    }
    pub fn digit(&self, pos: i32) -> u8 {
        if pos < self.lo || pos >= self.m {
            0
        } else {
            self.d[(pos - self.lo) as usize]
        }
    }
    /// u as an expansion padded with zeros up to precision `prec`.
    pub fn u_exact(&self, prec: i32) -> Fe {
        let lo = self.lo.min(prec);
        Fe { v: lo, d: (lo..prec).map(|i| self.digit(i)).collect() }
    }
    pub fn parent(&self) -> Vertex {
        let m = self.m - 1;
        if self.lo >= m {
            return Vertex::level(m);
        }
        let mut d = self.d.clone();
        d.pop();
        if d.is_empty() {
            Vertex::level(m)
        } else {
            Vertex { m, lo: self.lo, d }
        }
    }
    pub fn child(&self, c: u8) -> Vertex {
        let m = self.m + 1;
        if self.d.is_empty() {
            if c == 0 {
                Vertex::level(m)
            } else {
                Vertex { m, lo: self.m, d: vec![c] }
            }
        } else {
            let mut d = self.d.clone();
            d.push(c);
            Vertex { m, lo: self.lo, d }
        }
    }
    /// Apply t^k: (m, u) -> (m + k, pi^k u).
    pub fn shift(&self, k: i32) -> Vertex {
        Vertex { m: self.m + k, lo: self.lo + k, d: self.d.clone() }
    }
    /// Serialized form (m, digit-string), digit string starting at `lo`.
    pub fn repr(&self) -> String {
        let s: String = self.d.iter().map(|x| format!("{x:x}")).collect();
        format!("({},{}:{})", self.m, self.lo, s)
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.repr())
    }
}

impl Fe {
    fn truncate_or_pad(&self, prec: i32) -> Fe {
        let lo = self.v.min(prec);
        Fe { v: lo, d: (lo..prec).map(|i| self.digit(i)).collect() }
    }
}

/// An edge, stored through its endpoint farther from the end alpha_0 (the
/// child endpoint); the other endpoint is its parent.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub head: Vertex,
}

impl Edge {
    pub fn sigma() -> Edge {
        Edge { head: Vertex::x_plus() }
    }
    pub fn tail(&self) -> Vertex {
        self.head.parent()
    }
    pub fn from_pair(a: &Vertex, b: &Vertex) -> Result<Edge> {
        if a.parent() == *b {
            Ok(Edge { head: a.clone() })
        } else if b.parent() == *a {
            Ok(Edge { head: b.clone() })
        } else {
            Err(BtError::InvalidSpec(format!("{a} and {b} are not adjacent")))
        }
    }
    pub fn endpoints(&self) -> [Vertex; 2] {
        [self.head.clone(), self.tail()]
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}, {}}}", self.tail(), self.head)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Half {
    Plus,
    Minus,
}

/// A 2x2 matrix over F with entries given as truncated expansions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GMatrix {
    pub a: Fe,
    pub b: Fe,
    pub c: Fe,
    pub d: Fe,
}

impl GMatrix {
    /// Lowest entry valuation (None if all entries are zero to precision).
    pub fn min_val(&self) -> Option<i32> {
        [&self.a, &self.b, &self.c, &self.d].iter().filter_map(|x| x.val()).min()
    }
    pub fn min_prec(&self) -> i32 {
        [&self.a, &self.b, &self.c, &self.d].iter().map(|x| x.prec()).min().unwrap()
    }
}

/// Tree context: field arithmetic, working precision N and denominator
/// bound B.
#[derive(Clone, Debug)]
pub struct Tree {
    pub k: Arc<LocalField>,
    pub n: i32,
    pub b: i32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Center {
    Vertex(Vertex),
    Edge(Edge),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BallMode {
    Symmetric,
    Forward,
}

/// A finite set of vertices with adjacency, indexed in breadth-first order
/// of distance to its center.
#[derive(Clone, Debug)]
pub struct Window {
    pub center: Center,
    pub mode: BallMode,
    pub radius: u32,
    pub verts: Vec<Vertex>,
    pub index: HashMap<Vertex, usize>,
    pub dist: Vec<u32>,
    pub nbrs: Vec<Vec<usize>>,
    /// Edges as (head, tail) index pairs.
    pub edges: Vec<(usize, usize)>,
    /// For each vertex, the edge to its parent if the parent is in the window.
    pub up_edge: Vec<Option<usize>>,
}

impl Window {
    pub fn len(&self) -> usize {
        self.verts.len()
    }
    pub fn is_empty(&self) -> bool {
        self.verts.is_empty()
    }
    pub fn idx(&self, v: &Vertex) -> Option<usize> {
        self.index.get(v).copied()
    }
    pub fn contains(&self, v: &Vertex) -> bool {
        self.index.contains_key(v)
    }
    /// Number of vertices at distance at most r from the center (a prefix).
    pub fn prefix(&self, r: u32) -> usize {
        self.dist.iter().take_while(|&&d| d <= r).count()
    }
    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.up_edge[a]
            .filter(|&e| self.edges[e].1 == b)
            .or_else(|| self.up_edge[b].filter(|&e| self.edges[e].1 == a))
    }
    /// Breadth-first distances inside the window from vertex `s`.
    pub fn bfs(&self, s: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.len()];
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            for &y in &self.nbrs[x] {
                if dist[y] == u32::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        dist
    }
}

impl Tree {
    pub fn new(k: Arc<LocalField>, n: i32, b: i32) -> Result<Tree> {
        if n < 1 || b < 0 {
            return Err(BtError::InvalidSpec("tree precision must be positive".into()));
        }
        Ok(Tree { k, n, b })
    }

    pub fn q(&self) -> u32 {
        self.k.q()
    }

    pub fn check_window(&self, v: &Vertex) -> Result<()> {
        if v.lo < -self.b {
            return Err(BtError::WindowExceeded(format!(
                "vertex {v} needs denominators beyond pi^-{}",
                self.b
            )));
        }
        if v.m - v.lo.min(v.m) > self.n {
            return Err(BtError::WindowExceeded(format!("vertex {v} longer than N")));
        }
        Ok(())
    }

    /// Parent first, then the q children in residue order.
    pub fn neighbors(&self, v: &Vertex) -> Result<Vec<Vertex>> {
        self.check_window(v)?;
        let par = v.parent();
        self.check_window(&par)?;
        let mut out = Vec::with_capacity(self.q() as usize + 1);
        out.push(par);
        for c in 0..self.q() {
            out.push(v.child(c as u8));
        }
        Ok(out)
    }

    pub fn distance(&self, a: &Vertex, b: &Vertex) -> u32 {
        let top = a.m.min(b.m);
        let start = a.lo.min(b.lo).min(top);
        let ell = (start..top).find(|&i| a.digit(i) != b.digit(i)).unwrap_or(top);
        (a.m - ell + b.m - ell) as u32
    }

    pub fn distance_to_edge(&self, e: &Edge, v: &Vertex) -> u32 {
        self.distance(&e.head, v).min(self.distance(&e.tail(), v))
    }

    pub fn halftree_of(&self, v: &Vertex) -> Half {
        if v.m >= 0 && v.lo >= 0 {
            Half::Plus
        } else {
            Half::Minus
        }
    }

    pub fn oriented_head(&self, e: &Edge) -> Vertex {
        e.head.clone()
    }

    // ---- matrices ----

    pub fn one(&self) -> Fe {
        self.k.fe_int(1, self.n)
    }
    pub fn zero(&self) -> Fe {
        Fe::zero(self.n)
    }
    pub fn scalar(&self, x: Fe) -> GMatrix {
        GMatrix { a: x.clone(), b: self.zero(), c: self.zero(), d: x }
    }
    pub fn identity(&self) -> GMatrix {
        self.scalar(self.one())
    }
    pub fn pi_pow(&self, k: i32) -> Fe {
        self.k.fe_digit(1, k, k + self.n)
    }
    pub fn mat(&self, a: Fe, b: Fe, c: Fe, d: Fe) -> GMatrix {
        GMatrix { a, b, c, d }
    }
    /// t^k = diag(pi^k, 1).
    pub fn t_pow(&self, k: i32) -> GMatrix {
        GMatrix { a: self.pi_pow(k), b: self.zero(), c: self.zero(), d: self.one() }
    }
    /// n(b) = [[1, b], [0, 1]].
    pub fn n_mat(&self, b: Fe) -> GMatrix {
        GMatrix { a: self.one(), b, c: self.zero(), d: self.one() }
    }
    /// Lower unipotent [[1, 0], [c, 1]].
    pub fn nlow_mat(&self, c: Fe) -> GMatrix {
        GMatrix { a: self.one(), b: self.zero(), c, d: self.one() }
    }
    pub fn diag(&self, x: Fe, y: Fe) -> GMatrix {
        GMatrix { a: x, b: self.zero(), c: self.zero(), d: y }
    }
    /// w = antidiag(1, 1).
    pub fn w_mat(&self) -> GMatrix {
        GMatrix { a: self.zero(), b: self.one(), c: self.one(), d: self.zero() }
    }
    /// s = [[0, 1], [pi, 0]], which swaps x+ and x-.
    pub fn s_mat(&self) -> GMatrix {
        GMatrix { a: self.zero(), b: self.one(), c: self.pi_pow(1), d: self.zero() }
    }
    /// g_x = n(u) t^m, mapping x+ to x = (m, u) and x- to the parent of x.
    pub fn frame(&self, x: &Vertex) -> GMatrix {
        GMatrix { a: self.pi_pow(x.m), b: x.u_exact(self.n), c: self.zero(), d: self.one() }
    }
    pub fn frame_inv(&self, x: &Vertex) -> GMatrix {
        let pim = self.pi_pow(-x.m);
        let b = self.k.fe_neg(&self.k.fe_mul(&pim, &x.u_exact(self.n)));
        GMatrix { a: pim, b, c: self.zero(), d: self.one() }
    }

    pub fn mul(&self, x: &GMatrix, y: &GMatrix) -> GMatrix {
        let k = &self.k;
        let e = |p: &Fe, q: &Fe, r: &Fe, s: &Fe| k.fe_add(&k.fe_mul(p, q), &k.fe_mul(r, s));
        GMatrix {
            a: e(&x.a, &y.a, &x.b, &y.c),
            b: e(&x.a, &y.b, &x.b, &y.d),
            c: e(&x.c, &y.a, &x.d, &y.c),
            d: e(&x.c, &y.b, &x.d, &y.d),
        }
    }
    pub fn det(&self, x: &GMatrix) -> Fe {
        let k = &self.k;
        k.fe_sub(&k.fe_mul(&x.a, &x.d), &k.fe_mul(&x.b, &x.c))
    }
    pub fn inv(&self, x: &GMatrix) -> Result<GMatrix> {
        let k = &self.k;
        let di = k.fe_inv(&self.det(x))?;
        Ok(GMatrix {
            a: k.fe_mul(&di, &x.d),
            b: k.fe_neg(&k.fe_mul(&di, &x.b)),
            c: k.fe_neg(&k.fe_mul(&di, &x.c)),
            d: k.fe_mul(&di, &x.a),
        })
    }
    /// Multiply by pi^-v so that the lowest entry valuation becomes 0.
    pub fn normalize(&self, x: &GMatrix) -> Result<GMatrix> {
        let v = x.min_val().ok_or_else(|| BtError::Singular("zero matrix".into()))?;
        let s = self.pi_pow(-v);
        let k = &self.k;
        Ok(GMatrix {
            a: k.fe_mul(&s, &x.a),
            b: k.fe_mul(&s, &x.b),
            c: k.fe_mul(&s, &x.c),
            d: k.fe_mul(&s, &x.d),
        })
    }

    // ---- action ----

    /// t^k acting on a vertex.
    pub fn act_t(&self, k: i32, v: &Vertex) -> Vertex {
        v.shift(k)
    }

    /// n(b) acting on a vertex; b must be known modulo pi^m.
    pub fn act_n(&self, b: &Fe, v: &Vertex) -> Result<Vertex> {
        let u = v.u_exact(v.m);
        Vertex::from_fe(v.m, &self.k.fe_add(&u, b))
    }

    /// General action by column reduction of g [[pi^m, u], [0, 1]].
    pub fn act(&self, g: &GMatrix, v: &Vertex) -> Result<Vertex> {
        let vmin = g.min_val().ok_or_else(|| BtError::Singular("zero matrix".into()))?;
        let big_v = (-vmin).max(0);
        let depth = self.distance(&Vertex::x_plus(), v) as i32;
        if self.n < depth + 2 * big_v + 2 {
            return Err(BtError::PrecisionExhausted(format!(
                "acting at depth {depth} with entries of valuation {vmin} needs N >= {}",
                depth + 2 * big_v + 2
            )));
        }
        let k = &self.k;
        let pim = self.pi_pow(v.m);
        let u = v.u_exact(self.n.max(v.m + 1));
        let ma = k.fe_mul(&g.a, &pim);
        let mb = k.fe_add(&k.fe_mul(&g.a, &u), &g.b);
        let mc = k.fe_mul(&g.c, &pim);
        let md = k.fe_add(&k.fe_mul(&g.c, &u), &g.d);
        let pivot_right = match (mc.val(), md.val()) {
            (None, None) => {
                return Err(BtError::PrecisionExhausted("bottom row vanishes to precision".into()))
            }
            (_, None) => false,
            (None, Some(_)) => true,
            (Some(vc), Some(vd)) => vd <= vc,
        };
        let (p, qq, r) = if pivot_right {
            let ratio = k.fe_mul(&mc, &k.fe_inv(&md)?);
            (k.fe_sub(&ma, &k.fe_mul(&ratio, &mb)), mb, md)
        } else {
            let ratio = k.fe_mul(&md, &k.fe_inv(&mc)?);
            (k.fe_sub(&mb, &k.fe_mul(&ratio, &ma)), ma, mc)
        };
        let rinv = k.fe_inv(&r)?;
        let pr = k.fe_mul(&p, &rinv);
        let m2 = pr
            .val()
            .ok_or_else(|| BtError::PrecisionExhausted("lattice determinant lost".into()))?;
        let u2 = k.fe_mul(&qq, &rinv);
        Vertex::from_fe(m2, &u2)
    }

    pub fn act_edge(&self, g: &GMatrix, e: &Edge) -> Result<Edge> {
        let a = self.act(g, &e.head)?;
        let b = self.act(g, &e.tail())?;
        Edge::from_pair(&a, &b)
    }

    // ---- balls ----

    pub fn ball(&self, center: &Center, radius: u32, mode: BallMode) -> Result<Window> {
        let (starts, fixed_dist): (Vec<Vertex>, bool) = match (center, mode) {
            (Center::Vertex(v), _) => (vec![v.clone()], false),
            (Center::Edge(e), BallMode::Symmetric) => (vec![e.head.clone(), e.tail()], false),
            (Center::Edge(e), BallMode::Forward) => (vec![e.head.clone()], false),
        };
        let _ = fixed_dist;
        let mut verts: Vec<Vertex> = Vec::new();
        let mut index: HashMap<Vertex, usize> = HashMap::new();
        let mut dist: Vec<u32> = Vec::new();
        let mut queue = VecDeque::new();
        for s in starts {
            self.check_window(&s)?;
            index.insert(s.clone(), verts.len());
            verts.push(s);
            dist.push(0);
            queue.push_back(verts.len() - 1);
        }
        while let Some(i) = queue.pop_front() {
            if dist[i] == radius {
                continue;
            }
            let x = verts[i].clone();
            let next: Vec<Vertex> = match mode {
                BallMode::Symmetric => self.neighbors(&x)?,
                BallMode::Forward => (0..self.q()).map(|c| x.child(c as u8)).collect(),
            };
            for y in next {
                if index.contains_key(&y) {
                    continue;
                }
                self.check_window(&y)?;
                index.insert(y.clone(), verts.len());
                verts.push(y);
                dist.push(dist[i] + 1);
                queue.push_back(verts.len() - 1);
            }
        }
        let nv = verts.len();
        let mut nbrs = vec![Vec::new(); nv];
        let mut edges = Vec::new();
        let mut up_edge = vec![None; nv];
        for i in 0..nv {
            if let Some(&j) = index.get(&verts[i].parent()) {
                up_edge[i] = Some(edges.len());
                edges.push((i, j));
                nbrs[i].push(j);
                nbrs[j].push(i);
            }
        }
        for nb in nbrs.iter_mut() {
            nb.sort_unstable();
        }
        Ok(Window {
            center: center.clone(),
            mode,
            radius,
            verts,
            index,
            dist,
            nbrs,
            edges,
            up_edge,
        })
    }

    /// Z^(r)(sigma).
    pub fn sigma_ball(&self, r: u32) -> Result<Window> {
        self.ball(&Center::Edge(Edge::sigma()), r, BallMode::Symmetric)
    }
}

/// Precision settings adequate for computing on Z^(depth)(sigma) with
/// matrices in the edge stabilizers: B = depth + 3, N = 2B + depth + 4.
pub fn tree_for_depth(k: Arc<LocalField>, depth: u32) -> Result<Tree> {
    let b = depth as i32 + 3;
    Tree::new(k, 2 * b + depth as i32 + 4, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localfield::LocalFieldSpec;

    fn tree(p: u32, f: u32) -> Tree {
        let spec = if f == 1 { LocalFieldSpec::qp(p, 20) } else { LocalFieldSpec::fq(p, f, 20) };
        tree_for_depth(Arc::new(LocalField::new(spec).unwrap()), 4).unwrap()
    }

    #[test]
    fn neighbors_of_x_plus() {
        let t = tree(2, 1);
        let nb = t.neighbors(&Vertex::x_plus()).unwrap();
        assert_eq!(nb.len(), 3);
        assert_eq!(nb[0], Vertex::x_minus());
        assert_eq!(nb[1], Vertex::level(1));
        assert_eq!(nb[2], Vertex::from_digits(1, 0, &[1]));
    }

    #[test]
    fn w_moves_x_minus() {
        let t = tree(2, 1);
        assert_eq!(t.act(&t.w_mat(), &Vertex::x_minus()).unwrap(), Vertex::level(1));
        assert_eq!(t.act(&t.s_mat(), &Vertex::x_plus()).unwrap(), Vertex::x_minus());
        assert_eq!(t.act(&t.s_mat(), &Vertex::x_minus()).unwrap(), Vertex::x_plus());
    }

    #[test]
    fn ball_sizes() {
        let t = tree(2, 1);
        assert_eq!(t.sigma_ball(1).unwrap().len(), 6);
        assert_eq!(t.sigma_ball(4).unwrap().len(), 62);
        let f = t.ball(&Center::Vertex(Vertex::x_plus()), 1, BallMode::Forward).unwrap();
        assert_eq!(f.len(), 3);
    }
}
