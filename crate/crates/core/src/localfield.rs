//! Truncated arithmetic in O_F for F = Q_p or F = F_q((t)).
//!
//! Elements are little-endian digit vectors. In the mixed case the digits are
//! base-p digits with carries; in the equal characteristic case they are
//! coefficients in the residue field F_q and addition is digitwise.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{BtError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Mixed,
    Equal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LocalFieldSpec {
    pub p: u32,
    pub f: u32,
    pub kind: Kind,
    #[serde(rename = "N")]
    pub n: u32,
}

pub fn is_prime(p: u32) -> bool {
    p >= 2 && (2..p).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

impl LocalFieldSpec {
    pub fn qp(p: u32, n: u32) -> Self {
        LocalFieldSpec { p, f: 1, kind: Kind::Mixed, n }
    }

    pub fn fq(p: u32, f: u32, n: u32) -> Self {
        LocalFieldSpec { p, f, kind: Kind::Equal, n }
    }

    pub fn q(&self) -> u32 {
        self.p.pow(self.f)
    }

    pub fn validate(&self) -> Result<()> {
        if !is_prime(self.p) {
            return Err(BtError::InvalidSpec(format!("p = {} is not prime", self.p)));
        }
        if self.f == 0 || self.n == 0 {
            return Err(BtError::InvalidSpec("f and N must be positive".into()));
        }
        if self.kind == Kind::Mixed && self.f != 1 {
            return Err(BtError::InvalidSpec("mixed characteristic requires f = 1".into()));
        }
        if (self.p as u64).pow(self.f) > 256 {
            return Err(BtError::InvalidSpec("residue field larger than 256".into()));
        }
        Ok(())
    }
}

/// The finite field F_q with q = p^f, elements encoded as base-p coefficient
/// integers of polynomials modulo a fixed monic irreducible.
#[derive(Clone, Debug)]
pub struct ResidueField {
    pub p: u32,
    pub f: u32,
    pub q: u32,
    /// Coefficients of the monic modulus, low degree first (length f+1).
    pub modulus: Vec<u32>,
    add: Vec<u8>,
    mul: Vec<u8>,
    neg: Vec<u8>,
    inv: Vec<u8>,
}

fn poly_of(x: u32, p: u32, f: u32) -> Vec<u32> {
    let mut v = Vec::with_capacity(f as usize);
    let mut x = x;
    for _ in 0..f {
        v.push(x % p);
        x /= p;
    }
    v
}

fn int_of(c: &[u32], p: u32) -> u32 {
    c.iter().rev().fold(0, |acc, &d| acc * p + d)
}

fn poly_rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    // m monic
    let mut r = a.to_vec();
    let dm = m.len() - 1;
    while r.len() > dm {
        let lead = r[r.len() - 1] % p;
        let shift = r.len() - 1 - dm;
        if lead != 0 {
            for (i, &mi) in m.iter().enumerate() {
                let idx = shift + i;
                r[idx] = (r[idx] + p * p - (lead * mi) % p) % p;
            }
        }
        r.pop();
    }
    r
}

fn is_irreducible(m: &[u32], p: u32) -> bool {
    let deg = m.len() - 1;
    for d in 1..=deg / 2 {
        for tail in 0..p.pow(d as u32) {
            let mut g = poly_of(tail, p, d as u32);
            g.push(1);
            if poly_rem(m, &g, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

impl ResidueField {
    pub fn new(p: u32, f: u32) -> Self {
        let q = p.pow(f);
        let modulus = if f == 1 {
            vec![0, 1]
        } else {
            (0..q)
                .map(|tail| {
                    let mut m = poly_of(tail, p, f);
                    m.push(1);
                    m
                })
                .find(|m| is_irreducible(m, p))
                .expect("irreducible polynomial exists")
        };
        let qs = q as usize;
        let mut add = vec![0u8; qs * qs];
        let mut mul = vec![0u8; qs * qs];
        let mut neg = vec![0u8; qs];
        let mut inv = vec![0u8; qs];
        for a in 0..q {
            let pa = poly_of(a, p, f);
            neg[a as usize] = int_of(&pa.iter().map(|&c| (p - c) % p).collect::<Vec<_>>(), p) as u8;
            for b in 0..q {
                let pb = poly_of(b, p, f);
                let s: Vec<u32> = pa.iter().zip(&pb).map(|(x, y)| (x + y) % p).collect();
                add[a as usize * qs + b as usize] = int_of(&s, p) as u8;
                let mut prod = vec![0u32; 2 * f as usize];
                for (i, x) in pa.iter().enumerate() {
                    for (j, y) in pb.iter().enumerate() {
                        prod[i + j] = (prod[i + j] + x * y) % p;
                    }
                }
                let r = if f == 1 { vec![prod[0]] } else { poly_rem(&prod, &modulus, p) };
                mul[a as usize * qs + b as usize] = int_of(&r, p) as u8;
            }
        }
        for a in 1..qs {
            for b in 1..qs {
                if mul[a * qs + b] == 1 {
                    inv[a] = b as u8;
                }
            }
        }
        ResidueField { p, f, q, modulus, add, mul, neg, inv }
    }

    #[inline]
    pub fn add(&self, a: u8, b: u8) -> u8 {
        self.add[a as usize * self.q as usize + b as usize]
    }
    #[inline]
    pub fn mul(&self, a: u8, b: u8) -> u8 {
        self.mul[a as usize * self.q as usize + b as usize]
    }
    #[inline]
    pub fn neg(&self, a: u8) -> u8 {
        self.neg[a as usize]
    }
    #[inline]
    pub fn sub(&self, a: u8, b: u8) -> u8 {
        self.add(a, self.neg(b))
    }
    pub fn inv(&self, a: u8) -> Option<u8> {
        if a == 0 {
            None
        } else {
            Some(self.inv[a as usize])
        }
    }
    pub fn pow(&self, a: u8, e: u64) -> u8 {
        let mut r = 1u8;
        let mut b = a;
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, b);
            }
            b = self.mul(b, b);
            e >>= 1;
        }
        r
    }
    /// Image of an integer in the prime field.
    pub fn from_int(&self, n: i64) -> u8 {
        n.rem_euclid(self.p as i64) as u8
    }
    /// Elements p^i, i < f, as an F_p-basis.
    pub fn basis(&self) -> Vec<u8> {
        (0..self.f).map(|i| self.p.pow(i) as u8).collect()
    }
    /// A generator of the cyclic group F_q^x.
    pub fn primitive(&self) -> u8 {
        let order = self.q as u64 - 1;
        (1..self.q as u8)
            .find(|&g| {
                (1..order).all(|k| order % k != 0 || self.pow(g, k) != 1)
            })
            .unwrap_or(1)
    }
    /// Trace from F_q down to the prime field.
    pub fn trace_to_prime(&self, a: u8) -> u8 {
        let mut s = 0u8;
        let mut x = a;
        for _ in 0..self.f {
            s = self.add(s, x);
            x = self.pow(x, self.p as u64);
        }
        s
    }
}

/// Valuation of a truncated element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Valuation {
    Finite(u32),
    /// The truncation is zero; the true valuation is at least this value.
    AtLeast(u32),
}

/// An element of O_F known modulo p_F^N.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OElem {
    pub spec: LocalFieldSpec,
    pub digits: Vec<u8>,
}

/// A Laurent expansion sum_i d[i] pi^(v+i), known modulo pi^(v + d.len()).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fe {
    pub v: i32,
    pub d: Vec<u8>,
}

impl Fe {
    /// Absolute precision: the value is known modulo pi^prec.
    pub fn prec(&self) -> i32 {
        self.v + self.d.len() as i32
    }
    pub fn digit(&self, pos: i32) -> u8 {
        if pos < self.v || pos >= self.prec() {
            0
        } else {
            self.d[(pos - self.v) as usize]
        }
    }
    pub fn is_zero(&self) -> bool {
        self.d.iter().all(|&x| x == 0)
    }
    /// Position of the lowest nonzero digit.
    pub fn val(&self) -> Option<i32> {
        self.d.iter().position(|&x| x != 0).map(|i| self.v + i as i32)
    }
    pub fn zero(prec: i32) -> Fe {
        Fe { v: prec, d: Vec::new() }
    }
    /// Digits in positions lo..hi (zeros below v). Fails if hi > prec.
    pub fn window(&self, lo: i32, hi: i32) -> Result<Vec<u8>> {
        if hi > self.prec() {
            return Err(BtError::PrecisionExhausted(format!(
                "need digits below {hi}, have {}",
                self.prec()
            )));
        }
        Ok((lo..hi).map(|i| self.digit(i)).collect())
    }
    /// Keep only the information modulo pi^prec.
    pub fn truncate(&self, prec: i32) -> Result<Fe> {
        if prec > self.prec() {
            return Err(BtError::PrecisionExhausted(format!(
                "truncation to {prec} but only {} known",
                self.prec()
            )));
        }
        let lo = self.v.min(prec);
        Ok(Fe { v: lo, d: self.window(lo, prec)? })
    }
    /// Strip leading zero digits.
    pub fn normalized(&self) -> Fe {
        match self.d.iter().position(|&x| x != 0) {
            Some(i) => Fe { v: self.v + i as i32, d: self.d[i..].to_vec() },
            None => Fe::zero(self.prec()),
        }
    }
}

/// Context carrying the spec and residue-field tables.
#[derive(Clone, Debug)]
pub struct LocalField {
    pub spec: LocalFieldSpec,
    pub res: ResidueField,
}

impl LocalField {
    pub fn new(spec: LocalFieldSpec) -> Result<Self> {
        spec.validate()?;
        Ok(LocalField { spec, res: ResidueField::new(spec.p, spec.f) })
    }

    pub fn p(&self) -> u32 {
        self.spec.p
    }
    pub fn q(&self) -> u32 {
        self.res.q
    }
    pub fn mixed(&self) -> bool {
        self.spec.kind == Kind::Mixed
    }

    // ---- digit kernels on aligned slices ----

    pub fn add_d(&self, a: &[u8], b: &[u8]) -> Vec<u8> {
        debug_assert_eq!(a.len(), b.len());
        if self.mixed() {
            let p = self.spec.p;
            let mut carry = 0u32;
            a.iter()
                .zip(b)
                .map(|(&x, &y)| {
                    let s = x as u32 + y as u32 + carry;
                    carry = s / p;
                    (s % p) as u8
                })
                .collect()
        } else {
            a.iter().zip(b).map(|(&x, &y)| self.res.add(x, y)).collect()
        }
    }

    pub fn sub_d(&self, a: &[u8], b: &[u8]) -> Vec<u8> {
        debug_assert_eq!(a.len(), b.len());
        if self.mixed() {
            let p = self.spec.p as i32;
            let mut borrow = 0i32;
            a.iter()
                .zip(b)
                .map(|(&x, &y)| {
                    let mut s = x as i32 - y as i32 - borrow;
                    borrow = 0;
                    if s < 0 {
                        s += p;
                        borrow = 1;
                    }
                    s as u8
                })
                .collect()
        } else {
            a.iter().zip(b).map(|(&x, &y)| self.res.sub(x, y)).collect()
        }
    }

    pub fn neg_d(&self, a: &[u8]) -> Vec<u8> {
        self.sub_d(&vec![0; a.len()], a)
    }

    /// First `len` digits of the product of two digit vectors.
    pub fn mul_d(&self, a: &[u8], b: &[u8], len: usize) -> Vec<u8> {
        let la = a.len().min(len);
        let lb = b.len().min(len);
        if self.mixed() {
            let p = self.spec.p as u64;
            let mut acc = vec![0u64; len];
            for i in 0..la {
                if a[i] == 0 {
                    continue;
                }
                for j in 0..lb.min(len - i) {
                    acc[i + j] += a[i] as u64 * b[j] as u64;
                }
            }
            let mut carry = 0u64;
            acc.iter()
                .map(|&x| {
                    let s = x + carry;
                    carry = s / p;
                    (s % p) as u8
                })
                .collect()
        } else {
            let mut acc = vec![0u8; len];
            for i in 0..la {
                if a[i] == 0 {
                    continue;
                }
                for j in 0..lb.min(len - i) {
                    acc[i + j] = self.res.add(acc[i + j], self.res.mul(a[i], b[j]));
                }
            }
            acc
        }
    }

    /// Inverse of a unit digit vector to `len` digits (Newton iteration).
    pub fn inv_d(&self, a: &[u8], len: usize) -> Result<Vec<u8>> {
        let a0 = *a.first().ok_or_else(|| BtError::Singular("empty unit".into()))?;
        let i0 = self.res.inv(a0).ok_or_else(|| BtError::Singular("non-unit inverse".into()))?;
        if a.len() < len {
            return Err(BtError::PrecisionExhausted("unit known to too few digits".into()));
        }
        let mut x = vec![i0];
        let mut prec = 1usize;
        while prec < len {
            let np = (2 * prec).min(len);
            x.resize(np, 0);
            let ax = self.mul_d(&a[..np], &x, np);
            let mut one = vec![0u8; np];
            one[0] = 1;
            let err = self.sub_d(&one, &ax);
            let corr = self.mul_d(&x, &err, np);
            x = self.add_d(&x, &corr);
            prec = np;
        }
        x.truncate(len);
        Ok(x)
    }

    /// Base-p digits of a signed integer, `len` digits (equal characteristic:
    /// the prime-field image in position 0).
    pub fn int_digits(&self, n: i64, len: usize) -> Vec<u8> {
        let mut out = vec![0u8; len];
        if len == 0 {
            return out;
        }
        if !self.mixed() {
            out[0] = self.res.from_int(n);
            return out;
        }
        let p = self.spec.p as i64;
        let mut m = n.unsigned_abs();
        for o in out.iter_mut() {
            *o = (m % p as u64) as u8;
            m /= p as u64;
        }
        if n < 0 {
            out = self.neg_d(&out);
        }
        out
    }

    // ---- OElem operations ----

    fn check(&self, a: &OElem) -> Result<()> {
        if a.spec != self.spec {
            return Err(BtError::SpecMismatch(format!("{:?} vs {:?}", a.spec, self.spec)));
        }
        if a.digits.len() != self.spec.n as usize {
            return Err(BtError::SpecMismatch("digit vector length differs from N".into()));
        }
        Ok(())
    }

    pub fn elem(&self, digits: &[u8]) -> OElem {
        let n = self.spec.n as usize;
        let mut d: Vec<u8> = digits.iter().take(n).copied().collect();
        d.resize(n, 0);
        OElem { spec: self.spec, digits: d }
    }

    pub fn from_int(&self, n: i64) -> OElem {
        OElem { spec: self.spec, digits: self.int_digits(n, self.spec.n as usize) }
    }

    pub fn zero(&self) -> OElem {
        self.from_int(0)
    }
    pub fn one(&self) -> OElem {
        self.from_int(1)
    }
    /// The uniformizer p_F (p for Q_p, t for F_q((t))).
    pub fn uniformizer(&self) -> OElem {
        self.elem(&[0, 1])
    }

    pub fn add(&self, a: &OElem, b: &OElem) -> Result<OElem> {
        self.check(a)?;
        self.check(b)?;
        Ok(OElem { spec: self.spec, digits: self.add_d(&a.digits, &b.digits) })
    }
    pub fn sub(&self, a: &OElem, b: &OElem) -> Result<OElem> {
        self.check(a)?;
        self.check(b)?;
        Ok(OElem { spec: self.spec, digits: self.sub_d(&a.digits, &b.digits) })
    }
    pub fn neg(&self, a: &OElem) -> Result<OElem> {
        self.check(a)?;
        Ok(OElem { spec: self.spec, digits: self.neg_d(&a.digits) })
    }
    pub fn mul(&self, a: &OElem, b: &OElem) -> Result<OElem> {
        self.check(a)?;
        self.check(b)?;
        let n = self.spec.n as usize;
        Ok(OElem { spec: self.spec, digits: self.mul_d(&a.digits, &b.digits, n) })
    }

    /// Dispatch used by the CLI: add, mul or neg (b ignored for neg).
    pub fn arith(&self, op: &str, a: &OElem, b: Option<&OElem>) -> Result<OElem> {
        match (op, b) {
            ("add", Some(b)) => self.add(a, b),
            ("mul", Some(b)) => self.mul(a, b),
            ("neg", _) => self.neg(a),
            _ => Err(BtError::InvalidSpec(format!("bad arith op {op}"))),
        }
    }

    pub fn valuation(&self, a: &OElem) -> Valuation {
        match a.digits.iter().position(|&x| x != 0) {
            Some(i) => Valuation::Finite(i as u32),
            None => Valuation::AtLeast(self.spec.n),
        }
    }

    /// Class of a in O_F / p_F^m, as m digits.
    pub fn quotient_class(&self, a: &OElem, m: u32) -> Result<Vec<u8>> {
        self.check(a)?;
        if m > self.spec.n {
            return Err(BtError::QuotientTooFine { m, n: self.spec.n });
        }
        Ok(a.digits[..m as usize].to_vec())
    }

    /// All digit vectors of length m (the classes of O_F / p_F^m), in
    /// little-endian lexicographic order.
    pub fn all_classes(&self, m: u32) -> Vec<Vec<u8>> {
        let q = self.q() as usize;
        let total = q.pow(m);
        (0..total)
            .map(|mut idx| {
                (0..m)
                    .map(|_| {
                        let d = (idx % q) as u8;
                        idx /= q;
                        d
                    })
                    .collect()
            })
            .collect()
    }

    /// Index of a digit vector in the enumeration of `all_classes`.
    pub fn class_index(&self, digits: &[u8]) -> usize {
        let q = self.q() as usize;
        digits.iter().rev().fold(0, |acc, &d| acc * q + d as usize)
    }

    // ---- Laurent (Fe) operations ----

    pub fn fe_int(&self, n: i64, prec: i32) -> Fe {
        Fe { v: 0, d: self.int_digits(n, prec.max(0) as usize) }
    }
    /// A residue-field element placed at position `pos`.
    pub fn fe_digit(&self, c: u8, pos: i32, prec: i32) -> Fe {
        if prec <= pos {
            return Fe::zero(prec);
        }
        let mut d = vec![0u8; (prec - pos) as usize];
        d[0] = c;
        Fe { v: pos, d }
    }
    pub fn fe_from_oelem(&self, a: &OElem) -> Fe {
        Fe { v: 0, d: a.digits.clone() }
    }

    pub fn fe_add(&self, a: &Fe, b: &Fe) -> Fe {
        let lo = a.v.min(b.v);
        let hi = a.prec().min(b.prec());
        if hi <= lo {
            return Fe::zero(hi);
        }
        let x: Vec<u8> = (lo..hi).map(|i| a.digit(i)).collect();
        let y: Vec<u8> = (lo..hi).map(|i| b.digit(i)).collect();
        Fe { v: lo, d: self.add_d(&x, &y) }
    }
    pub fn fe_sub(&self, a: &Fe, b: &Fe) -> Fe {
        let lo = a.v.min(b.v);
        let hi = a.prec().min(b.prec());
        if hi <= lo {
            return Fe::zero(hi);
        }
        let x: Vec<u8> = (lo..hi).map(|i| a.digit(i)).collect();
        let y: Vec<u8> = (lo..hi).map(|i| b.digit(i)).collect();
        Fe { v: lo, d: self.sub_d(&x, &y) }
    }
    pub fn fe_neg(&self, a: &Fe) -> Fe {
        Fe { v: a.v, d: self.neg_d(&a.d) }
    }
    pub fn fe_mul(&self, a: &Fe, b: &Fe) -> Fe {
        match (a.val(), b.val()) {
            (Some(va), Some(vb)) => {
                let la = (a.prec() - va) as usize;
                let lb = (b.prec() - vb) as usize;
                let l = la.min(lb);
                let ua = &a.d[(va - a.v) as usize..];
                let ub = &b.d[(vb - b.v) as usize..];
                Fe { v: va + vb, d: self.mul_d(ua, ub, l) }
            }
            (None, Some(vb)) => Fe::zero(a.prec() + vb),
            (Some(va), None) => Fe::zero(b.prec() + va),
            (None, None) => Fe::zero(a.prec() + b.prec()),
        }
    }
    pub fn fe_inv(&self, a: &Fe) -> Result<Fe> {
        let va = a.val().ok_or_else(|| {
            BtError::PrecisionExhausted("inverse of an element indistinguishable from 0".into())
        })?;
        let u = &a.d[(va - a.v) as usize..];
        Ok(Fe { v: -va, d: self.inv_d(u, u.len())? })
    }
    /// Equality of the classes modulo pi^prec.
    pub fn fe_eq_mod(&self, a: &Fe, b: &Fe, prec: i32) -> Result<bool> {
        let lo = a.v.min(b.v).min(prec);
        Ok(a.window(lo, prec)? == b.window(lo, prec)?)
    }
}

impl fmt::Display for OElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.digits.iter().map(|d| d.to_string()).collect();
        write!(f, "[{}]", s.join(","))
    }
}

/// Data of an extension F/E of equal characteristic local fields with
/// s = t^ram, or the trivial extension Q_p/Q_p.
#[derive(Clone, Debug)]
pub struct ExtensionData {
    pub big: LocalField,
    pub small: LocalField,
    pub ram: u32,
    /// Residue inclusion k_E -> k_F.
    pub incl: Vec<u8>,
    /// Residue trace k_F -> k_E.
    pub res_trace: Vec<u8>,
}

impl ExtensionData {
    pub fn new(big: LocalFieldSpec, small: LocalFieldSpec, ram: u32) -> Result<Self> {
        let bf = LocalField::new(big)?;
        let sf = LocalField::new(small)?;
        if big.p != small.p || big.kind != small.kind {
            return Err(BtError::InvalidSpec("extension fields differ in p or kind".into()));
        }
        if ram == 0 || big.f % small.f != 0 {
            return Err(BtError::InvalidSpec("need ram >= 1 and f_E | f_F".into()));
        }
        if big.kind == Kind::Mixed && ram != 1 {
            return Err(BtError::InvalidSpec("ramified mixed extensions are out of scope".into()));
        }
        // root of the modulus of k_E inside k_F
        let p = small.p;
        let alpha = (0..bf.q() as u8)
            .find(|&a| {
                let mut acc = 0u8;
                for &c in sf.res.modulus.iter().rev() {
                    acc = bf.res.add(bf.res.mul(acc, a), bf.res.from_int(c as i64));
                }
                acc == 0
            })
            .ok_or_else(|| BtError::InvalidSpec("no residue embedding".into()))?;
        let incl: Vec<u8> = (0..sf.q())
            .map(|x| {
                let c = poly_of(x, p, small.f);
                let mut acc = 0u8;
                for &ci in c.iter().rev() {
                    acc = bf.res.add(bf.res.mul(acc, alpha), bf.res.from_int(ci as i64));
                }
                acc
            })
            .collect();
        let qe = sf.q() as u64;
        let deg = big.f / small.f;
        let res_trace: Vec<u8> = (0..bf.q() as u8)
            .map(|a| {
                let mut s = 0u8;
                let mut x = a;
                for _ in 0..deg {
                    s = bf.res.add(s, x);
                    x = bf.res.pow(x, qe);
                }
                incl.iter().position(|&y| y == s).expect("trace lands in k_E") as u8
            })
            .collect();
        Ok(ExtensionData { big: bf, small: sf, ram, incl, res_trace })
    }

    /// Precision of the image of an element known modulo p_F^n.
    pub fn image_prec(&self, n: u32) -> u32 {
        n.div_ceil(self.ram)
    }

    /// Trace of a digit vector (coefficients of t^0..t^(n-1)) to digits over E.
    pub fn trace_digits(&self, a: &[u8]) -> Vec<u8> {
        let n = a.len() as u32;
        let out_len = self.image_prec(n) as usize;
        if self.big.mixed() {
            return a.to_vec();
        }
        let eps = self.small.res.from_int(self.ram as i64);
        (0..out_len)
            .map(|j| {
                let tr = self.res_trace[a[j * self.ram as usize] as usize];
                self.small.res.mul(eps, tr)
            })
            .collect()
    }

    pub fn trace_to_subfield(&self, a: &OElem) -> Result<OElem> {
        if a.spec != self.big.spec {
            return Err(BtError::SpecMismatch("element not in the big field".into()));
        }
        let d = self.trace_digits(&a.digits);
        if d.len() < self.small.spec.n as usize {
            return Err(BtError::PrecisionExhausted(format!(
                "trace known to {} digits, target N = {}",
                d.len(),
                self.small.spec.n
            )));
        }
        Ok(self.small.elem(&d))
    }

    /// Digits of an element of O_E viewed in O_F (s -> t^ram), `len` digits.
    pub fn embed_digits(&self, b: &[u8], len: usize) -> Result<Vec<u8>> {
        if self.big.mixed() {
            return Ok(b.iter().copied().chain(std::iter::repeat(0)).take(len).collect());
        }
        let r = self.ram as usize;
        if b.len() * r < len {
            return Err(BtError::PrecisionExhausted("embedding needs more E digits".into()));
        }
        Ok((0..len)
            .map(|i| if i % r == 0 { self.incl[b[i / r] as usize] } else { 0 })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f4_tables() {
        let r = ResidueField::new(2, 2);
        // omega encoded as 2, omega^2 = omega + 1 = 3
        assert_eq!(r.mul(2, 2), 3);
        assert_eq!(r.add(2, 3), 1);
        for a in 1..4u8 {
            assert_eq!(r.mul(a, r.inv(a).unwrap()), 1);
        }
        assert_eq!(r.trace_to_prime(2), 1);
    }

    #[test]
    fn q9_field_is_a_field() {
        let r = ResidueField::new(3, 2);
        for a in 1..9u8 {
            assert!(r.inv(a).is_some());
        }
        assert_eq!(r.pow(r.primitive(), 8), 1);
        assert_ne!(r.pow(r.primitive(), 4), 1);
    }

    #[test]
    fn qp_inverse() {
        let k = LocalField::new(LocalFieldSpec::qp(3, 6)).unwrap();
        let a = k.int_digits(5, 6);
        let ia = k.inv_d(&a, 6).unwrap();
        let one = k.mul_d(&a, &ia, 6);
        assert_eq!(one, k.int_digits(1, 6));
    }
}
