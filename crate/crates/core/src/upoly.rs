//! Tame towers K/L/Q_l, the group Gal(K/L) in split form, and the ring k[u]/u^N.
//!
//! K = K_0(pi) with pi^e in L, so Gal(K/L) = Gal(K_0/L) x| mu_e. An element is stored as
//! `(t, j)`: it acts on k by the t-th power of the kL-Frobenius and sends pi to zeta_e^j pi.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::gfq::{gcd, Field, Fq};

#[derive(Clone, Debug)]
pub struct TameTower {
    pub l: u32,
    /// e(K/L)
    pub e: u32,
    /// f(K/L)
    pub f_rel: u32,
    pub e_l: u32,
    pub f_l: u32,
    pub e_k: u32,
    pub f_k: u32,
    /// Precision of the truncated ring, e_K * l.
    pub n: usize,
    pub d0: u32,
    pub e_prime: u32,
    pub lm1_prime: u32,
    pub u: i64,
    pub v: i64,
    /// Residue of G_pi; pi^{e_K} = l * G_pi(pi) with G_pi constant.
    pub g_pi: u32,
    k: Arc<Field>,
    zeta_e: Fq,
}

#[derive(Serialize)]
pub struct TowerSummary {
    pub l: u32,
    pub e: u32,
    pub f_rel: u32,
    pub e_l: u32,
    pub f_l: u32,
    pub e_k: u32,
    pub f_k: u32,
    pub n: usize,
    pub d0: u32,
    pub u: i64,
    pub v: i64,
}

fn inverse_mod(a: i64, m: i64) -> Option<i64> {
    if m == 1 {
        return Some(0);
    }
    (1..m).find(|x| (a * x).rem_euclid(m) == 1)
}

impl TameTower {
    /// `g_pi` is the (constant) residue of G_pi in F_l^x.
    pub fn new(l: u32, e: u32, f_rel: u32, e_l: u32, f_l: u32, g_pi: i64) -> Result<Self> {
        if l < 3 || !(2..l).take_while(|d| d * d <= l).all(|d| l % d != 0) {
            return domain(format!("l = {l} must be an odd prime"));
        }
        if e == 0 || f_rel == 0 || e_l == 0 || f_l == 0 {
            return domain("ramification and residue degrees must be positive");
        }
        if e % l == 0 {
            return domain(format!("l = {l} divides e = {e}; the tower is not tame"));
        }
        let g_pi = g_pi.rem_euclid(l as i64) as u32;
        if g_pi == 0 {
            return domain("G_pi must have unit residue");
        }
        let f_k = f_rel * f_l;
        let k = Arc::new(Field::new(l, f_k)?);
        if (k.size() - 1) % e != 0 {
            return domain(format!("e = {e} does not divide l^{f_k} - 1"));
        }
        let e_k = e * e_l;
        let d0 = gcd((l - 1) as u64, e as u64) as u32;
        let e_prime = e / d0;
        let lm1_prime = (l - 1) / d0;
        let u = if (l - 1) % e == 0 || e_prime == 1 {
            1
        } else {
            inverse_mod(lm1_prime as i64, e_prime as i64).ok_or_else(|| Error::Invariant("(l-1)' not invertible mod e'".into()))?
        };
        let v = (u * lm1_prime as i64 - 1) / e_prime as i64;
        debug_assert_eq!(u * lm1_prime as i64 - v * e_prime as i64, 1);
        let zeta_e = k.exp(((k.size() - 1) / e) as i64);
        Ok(TameTower {
            l,
            e,
            f_rel,
            e_l,
            f_l,
            e_k,
            f_k,
            n: (e_k * l) as usize,
            d0,
            e_prime,
            lm1_prime,
            u,
            v,
            g_pi,
            k,
            zeta_e,
        })
    }

    /// K = Q_{l^2}((-l)^{1/(l^2-1)}) over L = Q_l.
    pub fn eprime(l: u32) -> Result<Self> {
        if l < 3 {
            return domain("l must be an odd prime");
        }
        Self::new(l, l * l - 1, 2, 1, 1, -1)
    }

    /// K/L with L = Q_l, G_pi = -1.
    pub fn over_ql(l: u32, e: u32, f_rel: u32) -> Result<Self> {
        Self::new(l, e, f_rel, 1, 1, -1)
    }

    pub fn is_eprime(&self) -> bool {
        self.e == self.l * self.l - 1 && self.f_rel == 2 && self.e_l == 1 && self.f_l == 1 && self.g_pi == self.l - 1
    }

    pub fn field(&self) -> &Arc<Field> {
        &self.k
    }

    /// Generator of mu_e fixed by the tower.
    pub fn zeta_e(&self) -> Fq {
        self.zeta_e
    }

    /// x' = x / d0.
    pub fn prime(&self, x: i64) -> Result<i64> {
        if x.rem_euclid(self.d0 as i64) != 0 {
            return domain(format!("{x} is not divisible by d0 = {}", self.d0));
        }
        Ok(x / self.d0 as i64)
    }

    /// c_pi = -G_pi^l reduced mod u, as an element of F_l.
    pub fn c_pi(&self) -> Fq {
        let k = &self.k;
        k.neg(k.upow(k.from_int(self.g_pi as i64), self.l as i64))
    }

    pub fn in_kl(&self, x: Fq) -> bool {
        self.k.in_subfield(x, self.f_l)
    }

    pub fn kl_elements(&self) -> Vec<Fq> {
        self.k.elements().filter(|&x| self.in_kl(x)).collect()
    }

    pub fn ring(&self) -> TruncRing {
        TruncRing::new(self.k.clone(), self.n)
    }

    pub fn ring_with_len(&self, len: usize) -> TruncRing {
        TruncRing::new(self.k.clone(), len)
    }

    pub fn summary(&self) -> TowerSummary {
        TowerSummary {
            l: self.l,
            e: self.e,
            f_rel: self.f_rel,
            e_l: self.e_l,
            f_l: self.f_l,
            e_k: self.e_k,
            f_k: self.f_k,
            n: self.n,
            d0: self.d0,
            u: self.u,
            v: self.v,
        }
    }

    // --- the group ---

    pub fn group_order(&self) -> u32 {
        self.e * self.f_rel
    }

    pub fn identity(&self) -> GroupElem {
        GroupElem { t: 0, j: 0 }
    }

    pub fn frob(&self) -> GroupElem {
        GroupElem { t: 1 % self.f_rel, j: 0 }
    }

    pub fn inertia_gen(&self) -> GroupElem {
        GroupElem { t: 0, j: 1 % self.e }
    }

    /// Nontrivial generators in the order (Frobenius, inertia).
    pub fn generators(&self) -> Vec<GroupElem> {
        let mut g = Vec::new();
        if self.f_rel > 1 {
            g.push(self.frob());
        }
        if self.e > 1 {
            g.push(self.inertia_gen());
        }
        g
    }

    /// q with frob * gamma * frob^-1 = gamma^q.
    pub fn conjugation_exponent(&self) -> u32 {
        (self.l as u64).pow(self.f_l) as u32 % self.e.max(1)
    }

    /// Defining relations as pairs of words in `generators()` indices, lhs = rhs.
    pub fn relations(&self) -> Vec<Relation> {
        let gens = self.generators();
        let frob = gens.iter().position(|&g| g == self.frob() && self.f_rel > 1);
        let gamma = gens.iter().position(|&g| g == self.inertia_gen() && self.e > 1);
        let mut rels = Vec::new();
        if let Some(i) = gamma {
            rels.push(Relation {
                name: "gamma^e = 1",
                lhs: vec![i; self.e as usize],
                rhs: vec![],
            });
        }
        if let Some(p) = frob {
            rels.push(Relation {
                name: "phi^f = 1",
                lhs: vec![p; self.f_rel as usize],
                rhs: vec![],
            });
        }
        if let (Some(p), Some(i)) = (frob, gamma) {
            let mut rhs = vec![i; self.conjugation_exponent() as usize];
            rhs.push(p);
            rels.push(Relation {
                name: "phi gamma = gamma^q phi",
                lhs: vec![p, i],
                rhs,
            });
        }
        rels
    }

    pub fn elements(&self) -> Vec<GroupElem> {
        (0..self.f_rel).flat_map(|t| (0..self.e).map(move |j| GroupElem { t, j })).collect()
    }

    pub fn compose(&self, a: GroupElem, b: GroupElem) -> GroupElem {
        // (t1, z1)(t2, z2) = (t1 + t2, z1 * sigma^t1(z2))
        let twist = (self.l as u64).pow(self.f_l * a.t) % self.e as u64;
        GroupElem {
            t: (a.t + b.t) % self.f_rel,
            j: ((a.j as u64 + b.j as u64 * twist) % self.e as u64) as u32,
        }
    }

    /// g(pi)/pi, a root of unity in k.
    pub fn zeta_of(&self, g: GroupElem) -> Fq {
        self.k.upow(self.zeta_e, g.j as i64)
    }

    /// Action on residue field elements.
    pub fn act_scalar(&self, g: GroupElem, x: Fq) -> Fq {
        self.k.frobenius_pow(x, (g.t * self.f_l) as i64)
    }

    /// Closes the generators under composition and checks order and relations.
    pub fn group_order_check(&self) -> Result<u32> {
        let gens = self.generators();
        let mut seen = vec![self.identity()];
        let mut frontier = vec![self.identity()];
        while let Some(x) = frontier.pop() {
            for &g in &gens {
                let y = self.compose(g, x);
                if !seen.contains(&y) {
                    seen.push(y);
                    frontier.push(y);
                }
            }
        }
        let order = seen.len() as u32;
        if order != self.group_order() {
            return Err(Error::Invariant(format!(
                "generated group has order {order}, expected {}",
                self.group_order()
            )));
        }
        for rel in self.relations() {
            let eval = |w: &[usize]| w.iter().fold(self.identity(), |acc, &i| self.compose(acc, gens[i]));
            if eval(&rel.lhs) != eval(&rel.rhs) {
                return Err(Error::Invariant(format!("relation {} fails", rel.name)));
            }
        }
        Ok(order)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct GroupElem {
    pub t: u32,
    pub j: u32,
}

#[derive(Clone, Debug)]
pub struct Relation {
    pub name: &'static str,
    pub lhs: Vec<usize>,
    pub rhs: Vec<usize>,
}

/// Coefficients of an element of k[u]/u^len, lowest degree first, always exactly `len` long.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TruncPoly(pub Vec<Fq>);

impl TruncPoly {
    pub fn coeff(&self, i: usize) -> Fq {
        self.0.get(i).copied().unwrap_or(Fq::ZERO)
    }
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }
    /// u-adic valuation; `None` for zero.
    pub fn valuation(&self) -> Option<usize> {
        self.0.iter().position(|c| !c.is_zero())
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// The ring k[u]/u^len.
#[derive(Clone, Debug)]
pub struct TruncRing {
    pub k: Arc<Field>,
    pub len: usize,
}

impl TruncRing {
    pub fn new(k: Arc<Field>, len: usize) -> Self {
        TruncRing { k, len }
    }

    pub fn zero(&self) -> TruncPoly {
        TruncPoly(vec![Fq::ZERO; self.len])
    }

    pub fn one(&self) -> TruncPoly {
        self.constant(Fq::ONE)
    }

    pub fn constant(&self, c: Fq) -> TruncPoly {
        self.monomial(c, 0)
    }

    /// c u^d, zero when d >= len.
    pub fn monomial(&self, c: Fq, d: usize) -> TruncPoly {
        let mut p = self.zero();
        if d < self.len {
            p.0[d] = c;
        }
        p
    }

    pub fn from_coeffs(&self, coeffs: &[Fq]) -> TruncPoly {
        let mut p = self.zero();
        for (i, &c) in coeffs.iter().enumerate().take(self.len) {
            p.0[i] = c;
        }
        p
    }

    pub fn add(&self, a: &TruncPoly, b: &TruncPoly) -> TruncPoly {
        TruncPoly(a.0.iter().zip(&b.0).map(|(&x, &y)| self.k.add(x, y)).collect())
    }

    pub fn sub(&self, a: &TruncPoly, b: &TruncPoly) -> TruncPoly {
        TruncPoly(a.0.iter().zip(&b.0).map(|(&x, &y)| self.k.sub(x, y)).collect())
    }

    pub fn neg(&self, a: &TruncPoly) -> TruncPoly {
        TruncPoly(a.0.iter().map(|&x| self.k.neg(x)).collect())
    }

    pub fn scale(&self, c: Fq, a: &TruncPoly) -> TruncPoly {
        TruncPoly(a.0.iter().map(|&x| self.k.mul(c, x)).collect())
    }

    pub fn mul(&self, a: &TruncPoly, b: &TruncPoly) -> TruncPoly {
        let mut out = self.zero();
        for (i, &x) in a.0.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, &y) in b.0[..self.len - i].iter().enumerate() {
                if !y.is_zero() {
                    let slot = &mut out.0[i + j];
                    *slot = self.k.add(*slot, self.k.mul(x, y));
                }
            }
        }
        out
    }

    /// a * u^d.
    pub fn shift_up(&self, a: &TruncPoly, d: usize) -> TruncPoly {
        let mut out = self.zero();
        for i in 0..self.len.saturating_sub(d) {
            out.0[i + d] = a.0[i];
        }
        out
    }

    /// a / u^d, dropping the low coefficients (callers check divisibility).
    pub fn shift_down(&self, a: &TruncPoly, d: usize) -> TruncPoly {
        let mut out = self.zero();
        for i in d..self.len {
            out.0[i - d] = a.0[i];
        }
        out
    }

    /// h -> h^l: c u^i -> c^l u^{il}.
    pub fn frobenius(&self, a: &TruncPoly) -> TruncPoly {
        let l = self.k.characteristic() as usize;
        let mut out = self.zero();
        for (i, &c) in a.0.iter().enumerate() {
            if i * l >= self.len {
                break;
            }
            out.0[i * l] = self.k.frobenius(c);
        }
        out
    }

    pub fn is_unit(&self, a: &TruncPoly) -> bool {
        !a.coeff(0).is_zero()
    }

    pub fn inverse(&self, a: &TruncPoly) -> Result<TruncPoly> {
        let c0 = a.coeff(0);
        if c0.is_zero() {
            return domain("inverse of a non-unit");
        }
        let k = &self.k;
        let inv0 = k.inv(c0)?;
        let mut b = self.zero();
        b.0[0] = inv0;
        for n in 1..self.len {
            let mut s = Fq::ZERO;
            for i in 1..=n {
                s = k.add(s, k.mul(a.0[i], b.0[n - i]));
            }
            b.0[n] = k.neg(k.mul(s, inv0));
        }
        Ok(b)
    }

    /// Reduction to k[u]/u^len for a shorter or longer ring.
    pub fn recast(&self, a: &TruncPoly) -> TruncPoly {
        self.from_coeffs(&a.0)
    }

    /// sum c_i u^i -> sum g(c_i) (g(pi)/pi)^i u^i
    pub fn act(&self, tower: &TameTower, g: GroupElem, a: &TruncPoly) -> TruncPoly {
        let z = tower.zeta_of(g);
        let mut zi = Fq::ONE;
        let mut out = self.zero();
        for (i, &c) in a.0.iter().enumerate() {
            if !c.is_zero() {
                out.0[i] = self.k.mul(tower.act_scalar(g, c), zi);
            }
            zi = self.k.mul(zi, z);
        }
        out
    }

    /// True iff every generator fixes `a`.
    pub fn fixed_subring_test(&self, tower: &TameTower, a: &TruncPoly) -> bool {
        tower.generators().into_iter().all(|g| self.act(tower, g, a) == *a)
    }

    /// Coordinates over F_l: coefficient i, digit t at index i*f + t.
    pub fn flatten(&self, a: &TruncPoly) -> Vec<u32> {
        a.0.iter().flat_map(|&c| self.k.digits(c)).collect()
    }

    pub fn unflatten(&self, v: &[u32]) -> TruncPoly {
        let f = self.k.degree() as usize;
        TruncPoly(v.chunks(f).map(|d| self.k.from_digits(d)).collect())
    }
}
