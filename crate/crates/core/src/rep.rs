//! GL2 over the residue field and its small representations over Z/p^r.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{BtError, Result};
use crate::linalg::{Lambda, Mat};
use crate::localfield::ResidueField;
use crate::tree::{GMatrix, Tree};

/// An element [[a, b], [c, d]] of GL2(k_F).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Gl2k {
    pub a: u8,
    pub b: u8,
    pub c: u8,
    pub d: u8,
}

impl Gl2k {
    pub fn identity() -> Gl2k {
        Gl2k { a: 1, b: 0, c: 0, d: 1 }
    }
    pub fn mul(&self, k: &ResidueField, o: &Gl2k) -> Gl2k {
        let e = |x: u8, y: u8, z: u8, w: u8| k.add(k.mul(x, y), k.mul(z, w));
        Gl2k {
            a: e(self.a, o.a, self.b, o.c),
            b: e(self.a, o.b, self.b, o.d),
            c: e(self.c, o.a, self.d, o.c),
            d: e(self.c, o.b, self.d, o.d),
        }
    }
    pub fn det(&self, k: &ResidueField) -> u8 {
        k.sub(k.mul(self.a, self.d), k.mul(self.b, self.c))
    }
    pub fn inv(&self, k: &ResidueField) -> Gl2k {
        let di = k.inv(self.det(k)).expect("invertible");
        Gl2k {
            a: k.mul(di, self.d),
            b: k.mul(di, k.neg(self.b)),
            c: k.mul(di, k.neg(self.c)),
            d: k.mul(di, self.a),
        }
    }
    /// All elements of GL2(k_F).
    pub fn all(k: &ResidueField) -> Vec<Gl2k> {
        let q = k.q as u8;
        let mut out = Vec::new();
        for a in 0..q {
            for b in 0..q {
                for c in 0..q {
                    for d in 0..q {
                        let g = Gl2k { a, b, c, d };
                        if g.det(k) != 0 {
                            out.push(g);
                        }
                    }
                }
            }
        }
        out
    }
    /// A generating set: upper unipotents, the Weyl element and a torus.
    pub fn generators(k: &ResidueField) -> Vec<Gl2k> {
        let mut g: Vec<Gl2k> = k.basis().iter().map(|&z| Gl2k { a: 1, b: z, c: 0, d: 1 }).collect();
        g.push(Gl2k { a: 0, b: 1, c: 1, d: 0 });
        g.push(Gl2k { a: k.primitive(), b: 0, c: 0, d: 1 });
        g
    }
    /// Action on P^1(k_F); points 0..q-1 are [x:1], q is [1:0].
    pub fn act_p1(&self, k: &ResidueField, x: u32) -> u32 {
        let q = k.q;
        let (num, den) = if x == q {
            (self.a, self.c)
        } else {
            let xx = x as u8;
            (k.add(k.mul(self.a, xx), self.b), k.add(k.mul(self.c, xx), self.d))
        };
        if den == 0 {
            q
        } else {
            k.mul(num, k.inv(den).unwrap()) as u32
        }
    }
}

/// Reduction of a matrix in K Z: scale to integral with a unit entry, then
/// reduce modulo pi.
pub fn reduce(tree: &Tree, g: &GMatrix) -> Result<Gl2k> {
    let h = tree.normalize(g)?;
    let r = |x: &crate::localfield::Fe| -> Result<u8> {
        if x.prec() < 1 {
            return Err(BtError::PrecisionExhausted("entry unknown modulo pi".into()));
        }
        Ok(x.digit(0))
    };
    let out = Gl2k { a: r(&h.a)?, b: r(&h.b)?, c: r(&h.c)?, d: r(&h.d)? };
    if out.det(&tree.k.res) == 0 {
        return Err(BtError::HypothesisViolated(format!(
            "matrix is not in K Z for this vertex: {out:?}"
        )));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepKind {
    Trivial,
    Steinberg,
    /// The permutation module k[P^1(k_F)].
    Principal,
}

/// A representation of GL2(k_F) on a free Lambda-module.
#[derive(Clone, Debug)]
pub struct Rep {
    pub kind: RepKind,
    pub res: Arc<ResidueField>,
    pub lambda: Lambda,
}

impl Rep {
    pub fn new(kind: RepKind, res: Arc<ResidueField>, lambda: Lambda) -> Rep {
        Rep { kind, res, lambda }
    }
    pub fn dim(&self) -> usize {
        let q = self.res.q as usize;
        match self.kind {
            RepKind::Trivial => 1,
            RepKind::Steinberg => q,
            RepKind::Principal => q + 1,
        }
    }
    pub fn matrix(&self, g: &Gl2k) -> Mat {
        let q = self.res.q;
        let l = &self.lambda;
        match self.kind {
            RepKind::Trivial => Mat::identity(1),
            RepKind::Principal => {
                let n = q as usize + 1;
                let mut m = Mat::zeros(n, n);
                for x in 0..=q {
                    m.set(g.act_p1(&self.res, x) as usize, x as usize, 1);
                }
                m
            }
            RepKind::Steinberg => {
                // basis e_x = delta_x - delta_inf for x in k_F
                let n = q as usize;
                let mut m = Mat::zeros(n, n);
                let ginf = g.act_p1(&self.res, q);
                for x in 0..q {
                    let gx = g.act_p1(&self.res, x);
                    if gx != q {
                        let v = l.add(m.get(gx as usize, x as usize), 1);
                        m.set(gx as usize, x as usize, v);
                    }
                    if ginf != q {
                        let v = l.sub(m.get(ginf as usize, x as usize), 1);
                        m.set(ginf as usize, x as usize, v);
                    }
                }
                m
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steinberg_is_a_representation() {
        let res = Arc::new(ResidueField::new(3, 1));
        let l = Lambda::new(3, 2).unwrap();
        let rep = Rep::new(RepKind::Steinberg, res.clone(), l);
        let all = Gl2k::all(&res);
        for g in all.iter().step_by(5) {
            for h in all.iter().step_by(7) {
                let lhs = rep.matrix(&g.mul(&res, h));
                let rhs = rep.matrix(g).mul(&l, &rep.matrix(h));
                assert_eq!(lhs, rhs);
            }
        }
    }
}
