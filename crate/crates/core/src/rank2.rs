//! Extensions of rank one modules: M = <e, e'>, M_1 = <u^s e, u^r e' + h e>,
//! phi_1(u^s e) = b e, phi_1(u^r e' + h e) = a e', [g] diagonal with exponents k1, k2.
//!
//! The sub is M(s, b, d) on e, the quotient M(r, a, c) on e'.

use std::sync::Arc;

use serde::Serialize;

use crate::breuil::{flat, is_morphism, BreuilModule, DescentData, Vector, WithDescent};
use crate::error::{domain, Error, Result};
use crate::gfq::Fq;
use crate::rank1::{character, homs, Character, Rank1Module};
use crate::upoly::{TameTower, TruncPoly};

#[derive(Clone, Debug)]
pub struct Rank2Ext {
    pub tower: Arc<TameTower>,
    pub sub: Rank1Module,
    pub quot: Rank1Module,
    pub h: TruncPoly,
}

/// M(r, a, c; s, b, d; n, h_n) with a, b, h_n read in F_l.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Rank2Label {
    pub r: u32,
    pub a: u32,
    pub c: u32,
    pub s: u32,
    pub b: u32,
    pub d: u32,
    pub n: u32,
    pub h_n: u32,
}

impl std::fmt::Display for Rank2Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "M({},{},{};{},{},{};{},{})",
            self.r, self.a, self.c, self.s, self.b, self.d, self.n, self.h_n
        )
    }
}

impl Rank2Ext {
    /// Checks the support conditions on h that descent data imposes below degree s + e_K.
    pub fn new(sub: Rank1Module, quot: Rank1Module, h: TruncPoly) -> Result<Self> {
        let tower = sub.tower.clone();
        if !Arc::ptr_eq(&tower, &quot.tower) && tower.summary_key() != quot.tower.summary_key() {
            return domain("sub and quotient live over different towers");
        }
        let ring = tower.ring();
        if h.len() != ring.len {
            return Err(Error::Dimension {
                expected: ring.len,
                got: h.len(),
            });
        }
        let (r, s, ek) = (quot.r as usize, sub.r as usize, tower.e_k as usize);
        let lo = (r + s).saturating_sub(ek);
        let target = (r as i64 + quot.k_exp() - sub.k_exp()).rem_euclid(tower.e as i64);
        for (i, &c) in h.0.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if i < lo {
                return domain(format!("h has a term of degree {i} below u^{lo}"));
            }
            if i < s + ek && ((i as i64 - target).rem_euclid(tower.e as i64) != 0 || !tower.in_kl(c)) {
                return domain(format!("term of degree {i} is not fixed by the descent data"));
            }
        }
        Ok(Rank2Ext { tower, sub, quot, h })
    }

    pub fn k1(&self) -> i64 {
        self.sub.k_exp()
    }

    pub fn k2(&self) -> i64 {
        self.quot.k_exp()
    }

    pub fn to_breuil(&self) -> WithDescent {
        let t = &self.tower;
        let ring = t.ring();
        let k = t.field();
        let (r, s) = (self.quot.r as usize, self.sub.r as usize);
        let module = BreuilModule {
            tower: t.clone(),
            rank: 2,
            m1_gens: vec![
                vec![ring.monomial(Fq::ONE, s), ring.zero()],
                vec![self.h.clone(), ring.monomial(Fq::ONE, r)],
            ],
            phi1: vec![
                vec![ring.constant(self.sub.a), ring.zero()],
                vec![ring.zero(), ring.constant(self.quot.a)],
            ],
        };
        let mats = t
            .generators()
            .into_iter()
            .map(|g| {
                let z = t.zeta_of(g);
                vec![
                    vec![ring.constant(k.upow(z, self.k1())), ring.zero()],
                    vec![ring.zero(), ring.constant(k.upow(z, self.k2()))],
                ]
            })
            .collect();
        WithDescent {
            module,
            descent: DescentData { mats },
        }
    }

    /// e -> e
    pub fn inclusion(&self) -> Vec<Vector> {
        let ring = self.tower.ring();
        vec![vec![ring.one(), ring.zero()]]
    }

    /// e -> 0, e' -> e
    pub fn projection(&self) -> Vec<Vector> {
        let ring = self.tower.ring();
        vec![vec![ring.zero()], vec![ring.one()]]
    }

    /// The label when h is a single monomial with F_l coefficient (or zero, with n = 0, h_n = 0).
    pub fn label(&self) -> Option<Rank2Label> {
        let k = self.tower.field();
        let (n, h_n) = match self.h.valuation() {
            None => (0, 0),
            Some(v) => {
                if self.h.0.iter().filter(|c| !c.is_zero()).count() != 1 {
                    return None;
                }
                (v as u32, k.to_prime(self.h.0[v])?)
            }
        };
        Some(Rank2Label {
            r: self.quot.r,
            a: k.to_prime(self.quot.a)?,
            c: self.quot.c,
            s: self.sub.r,
            b: k.to_prime(self.sub.a)?,
            d: self.sub.c,
            n,
            h_n,
        })
    }

    /// n - (l s' - r') = -k (l + 1) for the E' normal form.
    pub fn lattice_k(&self) -> Option<i64> {
        let lab = self.label()?;
        let l = self.tower.l as i64;
        let x = l * self.sub.r_prime() as i64 - self.quot.r_prime() as i64 - lab.n as i64;
        (x % (l + 1) == 0).then_some(x / (l + 1))
    }
}

impl TameTower {
    fn summary_key(&self) -> (u32, u32, u32, u32, u32, u32) {
        (self.l, self.e, self.f_rel, self.e_l, self.f_l, self.g_pi)
    }
}

/// Output of the inductive procedure for H = u^s T - ratio u^r T^l.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalForm {
    /// u^s T - ratio u^r T^l
    pub h_prime: TruncPoly,
    /// H - H': terms of degree < s, plus possibly N eta u^{i0}
    pub residual: TruncPoly,
    pub eta: Option<Fq>,
    pub eta_multiple: u32,
    pub t: TruncPoly,
}

/// The least element of kL (else of k) outside the image of x -> x - ratio x^l on k.
pub fn eta_for(tower: &TameTower, ratio: Fq) -> Option<Fq> {
    let k = tower.field();
    if k.artin_schreier_surjective(ratio) {
        return None;
    }
    let outside = |x: &Fq| k.solve_x_minus_cxl(ratio, *x).is_none();
    tower.kl_elements().into_iter().find(outside).or_else(|| k.elements().find(outside))
}

fn transport(tower: &TameTower, h: &TruncPoly, r: u32, s: u32, ratio: Fq, reduce: bool) -> Result<Option<NormalForm>> {
    let k = tower.field();
    let ring = tower.ring();
    let n = ring.len;
    if h.len() != n {
        return Err(Error::Dimension { expected: n, got: h.len() });
    }
    if ratio.is_zero() {
        return domain("ratio b/a must be nonzero");
    }
    let (l, r, s) = (tower.l as i64, r as i64, s as i64);
    let num = l * s - r;
    let mut order: Vec<i64> = (0..n as i64).collect();
    order.sort_by_key(|&i| ((l - 1) * i - num).abs());

    let mut t: Vec<Option<Fq>> = vec![None; n];
    let mut resid = vec![Fq::ZERO; n];
    let mut eta = None;
    let mut eta_multiple = 0;
    for i in order {
        let hi = h.0[i as usize];
        if (l - 1) * i == num {
            let j = i - s;
            if j >= 0 {
                let x = match k.solve_x_minus_cxl(ratio, hi) {
                    Some(x) => x,
                    None if reduce => {
                        let e =
                            eta_for(tower, ratio).ok_or_else(|| Error::Invariant("base case unsolvable yet x - c x^l is onto".into()))?;
                        let (m, x) = (1..tower.l)
                            .find_map(|m| {
                                let shift = k.mul(k.from_int(m as i64), e);
                                k.solve_x_minus_cxl(ratio, k.sub(hi, shift)).map(|x| (m, x))
                            })
                            .ok_or_else(|| Error::Invariant("eta multiples do not cover the cokernel".into()))?;
                        eta = Some(e);
                        eta_multiple = m;
                        resid[i as usize] = k.mul(k.from_int(m as i64), e);
                        x
                    }
                    None => return Ok(None),
                };
                t[j as usize] = Some(x);
            } else if !hi.is_zero() {
                if !reduce {
                    return Ok(None);
                }
                resid[i as usize] = hi;
            }
            continue;
        }
        let prev = if i >= r && (i - r) % l == 0 {
            t[((i - r) / l) as usize].unwrap_or(Fq::ZERO)
        } else {
            Fq::ZERO
        };
        let val = k.add(hi, k.mul(ratio, k.frobenius(prev)));
        if i >= s {
            t[(i - s) as usize] = Some(val);
        } else if !val.is_zero() {
            if !reduce {
                return Ok(None);
            }
            resid[i as usize] = val;
        }
    }
    let t = TruncPoly(t.into_iter().map(|x| x.unwrap_or(Fq::ZERO)).collect());
    let h_prime = ring.sub(
        &ring.shift_up(&t, s as usize),
        &ring.scale(ratio, &ring.shift_up(&ring.frobenius(&t), r as usize)),
    );
    let residual = TruncPoly(resid);
    if ring.add(&h_prime, &residual) != *h {
        return Err(Error::Invariant("transport solution does not reproduce H".into()));
    }
    Ok(Some(NormalForm {
        h_prime,
        residual,
        eta,
        eta_multiple,
        t,
    }))
}

/// Some T with u^s T - ratio u^r T^l = H, if one exists.
pub fn solve_transport(tower: &TameTower, h: &TruncPoly, r: u32, s: u32, ratio: Fq) -> Result<Option<TruncPoly>> {
    Ok(transport(tower, h, r, s, ratio, false)?.map(|nf| nf.t))
}

/// Splits H = H' + residual with H' in the image of T -> u^s T - ratio u^r T^l.
pub fn normal_form_h(tower: &TameTower, h: &TruncPoly, r: u32, s: u32, ratio: Fq) -> Result<NormalForm> {
    Ok(transport(tower, h, r, s, ratio, true)?.expect("reduction mode always returns"))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EtaSlot {
    pub degree: u32,
    pub eta: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExtBasis {
    pub degrees: Vec<u32>,
    pub eta_slot: Option<EtaSlot>,
    /// [kL : F_l]
    pub coeff_dim: u32,
    pub dim: usize,
}

/// F_l-basis 1, w, ..., w^{f_L - 1} of kL, w a generator of kL^x.
fn kl_basis(tower: &TameTower) -> Vec<Fq> {
    let k = tower.field();
    let q = k.size() as i64;
    let ql = (tower.l as i64).pow(tower.f_l);
    let w = k.exp((q - 1) / (ql - 1));
    (0..tower.f_l as i64).map(|t| k.upow(w, t)).collect()
}

/// The normal-form parameter space for extensions of `quot` by `sub`.
pub fn ext_basis(sub: &Rank1Module, quot: &Rank1Module) -> ExtBasis {
    let t = &sub.tower;
    let (r, s) = (quot.r, sub.r);
    let lo = (r + s).saturating_sub(t.e_k);
    let target = (r as i64 + quot.k_exp() - sub.k_exp()).rem_euclid(t.e as i64);
    let degrees: Vec<u32> = (lo..s).filter(|&i| (i as i64 - target).rem_euclid(t.e as i64) == 0).collect();
    let eta_slot = if homs(quot, sub).is_empty() {
        None
    } else {
        let ratio = t.field().div(sub.a, quot.a).expect("units");
        eta_for(t, ratio).map(|eta| EtaSlot {
            degree: (t.l * s - r) / (t.l - 1),
            eta: eta.0,
        })
    };
    let dim = degrees.len() * t.f_l as usize + usize::from(eta_slot.is_some());
    ExtBasis {
        degrees,
        eta_slot,
        coeff_dim: t.f_l,
        dim,
    }
}

impl ExtBasis {
    /// h for the given F_l coordinates (degree-major, then kL basis, then the eta slot).
    pub fn element(&self, tower: &TameTower, coords: &[u32]) -> Result<TruncPoly> {
        if coords.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: coords.len(),
            });
        }
        let k = tower.field();
        let ring = tower.ring();
        let basis = kl_basis(tower);
        let mut h = ring.zero();
        for (di, &deg) in self.degrees.iter().enumerate() {
            let mut c = Fq::ZERO;
            for (bi, &b) in basis.iter().enumerate() {
                c = k.add(c, k.mul(k.from_int(coords[di * basis.len() + bi] as i64), b));
            }
            h.0[deg as usize] = c;
        }
        if let Some(slot) = &self.eta_slot {
            let m = k.from_int(*coords.last().expect("eta coordinate") as i64);
            h.0[slot.degree as usize] = k.add(h.0[slot.degree as usize], k.mul(m, Fq(slot.eta)));
        }
        Ok(h)
    }

    /// h for each unit coordinate vector.
    pub fn classes(&self, tower: &TameTower) -> Vec<TruncPoly> {
        (0..self.dim)
            .map(|i| {
                let mut x = vec![0; self.dim];
                x[i] = 1;
                self.element(tower, &x).expect("sized")
            })
            .collect()
    }
}

fn require_eprime(t: &TameTower) -> Result<()> {
    if t.is_eprime() {
        Ok(())
    } else {
        Err(Error::UnsupportedTower("this operation needs the E'/Q_l preset".into()))
    }
}

/// The exponent n of the nonsplit E' normal form, if the window admits one.
pub fn eprime_exponent(tower: &TameTower, r: u32, c: i64, s: u32, d: i64) -> Option<u32> {
    let (l, e) = (tower.l as i64, tower.e as i64);
    let (rp, sp) = (r as i64 / (l - 1), s as i64 / (l - 1));
    let target = ((l + 1) * (c - d) + l * sp - rp).rem_euclid(e);
    let lo = (r as i64 + s as i64 - e).max(0);
    let n = lo + (target - lo).rem_euclid(e);
    (n < s as i64).then_some(n as u32)
}

/// M(r, a, c; s, b, d; n, 1), or none when no n fits the window.
pub fn make_ext_eprime(tower: &Arc<TameTower>, r: u32, a: i64, c: i64, s: u32, b: i64, d: i64) -> Result<Option<Rank2Ext>> {
    require_eprime(tower)?;
    let quot = Rank1Module::eprime(tower, r / (tower.l - 1), a, c)?;
    let sub = Rank1Module::eprime(tower, s / (tower.l - 1), b, d)?;
    if r % (tower.l - 1) != 0 || s % (tower.l - 1) != 0 {
        return domain("r and s must be multiples of l - 1");
    }
    if quot.a == sub.a && quot.c == sub.c {
        return domain("(a, c) = (b, d) is excluded");
    }
    let Some(n) = eprime_exponent(tower, r, c, s, d) else {
        return Ok(None);
    };
    let h = tower.ring().monomial(Fq::ONE, n as usize);
    Rank2Ext::new(sub, quot, h).map(Some)
}

/// Whether the descended representation of an E' normal form splits.
pub fn is_split(m: &Rank2Ext) -> bool {
    m.quot.r > m.sub.r && m.quot.c == m.sub.c
}

/// The map M(0, a, c) -> N, f -> v u^{l s'} e + (1 - a/b) v u^{l r'} e' with v = 1,
/// when the representation splits.
pub fn split_witness(m: &Rank2Ext) -> Result<Option<Vec<Vector>>> {
    require_eprime(&m.tower)?;
    if !is_split(m) {
        return Ok(None);
    }
    let t = &m.tower;
    let k = t.field();
    let ring = t.ring();
    let w = k.sub(Fq::ONE, k.div(m.quot.a, m.sub.a)?);
    let l = t.l as usize;
    let x = vec![vec![
        ring.monomial(Fq::ONE, l * m.sub.r_prime() as usize),
        ring.monomial(w, l * m.quot.r_prime() as usize),
    ]];
    let src = Rank1Module::new(t.clone(), 0, m.quot.a, m.quot.c as i64)?.to_breuil();
    if !is_morphism(&src, &m.to_breuil(), &x) {
        return Err(Error::Invariant("split witness is not a morphism".into()));
    }
    Ok(Some(x))
}

/// The generic-fibre isomorphism N1 -> N2 between nonsplit E' normal forms, if one exists.
pub fn hom_rank2(n1: &Rank2Ext, n2: &Rank2Ext) -> Result<Option<Vec<Vector>>> {
    require_eprime(&n1.tower)?;
    let (Some(k1), Some(k2)) = (n1.lattice_k(), n2.lattice_k()) else {
        return domain("hom_rank2 needs E' normal forms with h = u^n");
    };
    if is_split(n1) || is_split(n2) {
        return domain("hom_rank2 needs nonsplit representations");
    }
    if (n1.quot.a, n1.quot.c, n1.sub.a, n1.sub.c) != (n2.quot.a, n2.quot.c, n2.sub.a, n2.sub.c)
        || n1.quot.r > n2.quot.r
        || n1.sub.r > n2.sub.r
    {
        return Ok(None);
    }
    let t = &n1.tower;
    let k = t.field();
    let ring = t.ring();
    let l = t.l as usize;
    let l_top = t.l as i64;
    let (a, b) = (n1.quot.a, n1.sub.a);
    let x = if k1 == k2 {
        vec![
            vec![
                ring.monomial(Fq::ONE, l * (n2.sub.r_prime() - n1.sub.r_prime()) as usize),
                ring.zero(),
            ],
            vec![
                ring.zero(),
                ring.monomial(Fq::ONE, l * (n2.quot.r_prime() - n1.quot.r_prime()) as usize),
            ],
        ]
    } else if k1 == 1 && k2 == l_top {
        let ba = k.div(b, a)?;
        vec![
            vec![ring.monomial(Fq::ONE, l * (l + 1 - n1.sub.r_prime() as usize)), ring.zero()],
            vec![ring.constant(ba), ring.constant(ba)],
        ]
    } else if k1 == l_top && k2 == 1 {
        vec![
            vec![ring.one(), ring.zero()],
            vec![
                ring.constant(k.neg(Fq::ONE)),
                ring.monomial(k.div(a, b)?, l * n2.quot.r_prime() as usize),
            ],
        ]
    } else {
        return Ok(None);
    };
    if !is_morphism(&n1.to_breuil(), &n2.to_breuil(), &x) {
        return Err(Error::Invariant(format!(
            "constructed map {:?} -> {:?} is not a morphism",
            n1.label(),
            n2.label()
        )));
    }
    Ok(Some(x))
}

fn monomial(p: &TruncPoly) -> Option<(Fq, usize)> {
    let mut it = p.0.iter().enumerate().filter(|(_, c)| !c.is_zero());
    let (i, &c) = it.next()?;
    it.next().is_none().then_some((c, i))
}

/// Kernel exponent bound for e -> v u^alpha f, e' -> y u^beta f + z u^gamma f' with v, z != 0.
pub fn triangular_bound(x: &[Vector]) -> Option<usize> {
    if x.len() != 2 || x.iter().any(|c| c.len() != 2) || !x[0][1].is_zero() {
        return None;
    }
    let (_, alpha) = monomial(&x[0][0])?;
    let (_, gamma) = monomial(&x[1][1])?;
    if x[1][0].is_zero() {
        return Some(alpha.max(gamma));
    }
    let (_, beta) = monomial(&x[1][0])?;
    Some(gamma.max((alpha + gamma).saturating_sub(beta)))
}

/// Whether the kernel of the Breuil map contains no free k[u]/u^N-submodule.
pub fn generic_fibre_iso(tower: &TameTower, x: &[Vector]) -> Result<bool> {
    if let Some(bound) = triangular_bound(x) {
        if bound < tower.ring().len {
            return Ok(true);
        }
    }
    generic_fibre_iso_direct(tower, x)
}

/// Kernel inside u R^n, read off an F_l-basis of the kernel.
pub fn generic_fibre_iso_direct(tower: &TameTower, x: &[Vector]) -> Result<bool> {
    Ok(flat::map_kernel(tower, x)?.iter().all(|v| v.iter().all(|h| h.coeff(0).is_zero())))
}

#[derive(Clone, Debug, Serialize)]
pub struct LatticePoint {
    pub r_prime: u32,
    pub s_prime: u32,
    pub label: Rank2Label,
    pub split: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LatticeReport {
    pub l: u32,
    pub k: u32,
    pub points: Vec<LatticePoint>,
    /// (i, j) with a generic-fibre isomorphism point i -> point j, i != j.
    pub homs: Vec<(usize, usize)>,
    pub maximal: Option<usize>,
    pub minimal: Option<usize>,
    /// Character of the quotient M(r, a, c).
    pub top: Character,
    /// Character of the sub M(s, b, d).
    pub bottom: Character,
    pub peu_ramifie: Option<bool>,
}

/// The integral models M(r, a, c; s, b, d; n, 1) with n = l s' - r' - k (l + 1).
/// For k = 1 the k = l point (0, l + 1) is included.
pub fn lattice(tower: &Arc<TameTower>, k: u32, a: i64, b: i64, c: i64, d: i64) -> Result<LatticeReport> {
    require_eprime(tower)?;
    let l = tower.l;
    if k > l {
        return domain(format!("k = {k} exceeds l = {l}"));
    }
    let lm1 = l as i64 - 1;
    if (d - c - k as i64).rem_euclid(lm1) != 0 {
        return domain(format!("k = {k} is not congruent to d - c mod l - 1"));
    }
    let ks: Vec<u32> = if k == 1 { vec![1, l] } else { vec![k] };
    let mut points = Vec::new();
    for rp in 0..=l + 1 {
        for sp in 0..=l + 1 {
            let (r, s) = (rp * (l - 1), sp * (l - 1));
            let Some(m) = make_ext_eprime(tower, r, a, c, s, b, d)? else {
                continue;
            };
            let kk = m.lattice_k().expect("normal form");
            if ks.iter().any(|&x| x as i64 == kk) {
                points.push(LatticePoint {
                    r_prime: rp,
                    s_prime: sp,
                    label: m.label().expect("normal form"),
                    split: is_split(&m),
                });
            }
        }
    }
    let mods: Vec<Rank2Ext> = points
        .iter()
        .map(|p| make_ext_eprime(tower, p.label.r, a, c, p.label.s, b, d).map(|m| m.expect("present")))
        .collect::<Result<_>>()?;
    let mut hom_pairs = Vec::new();
    if k > 0 {
        for (i, m1) in mods.iter().enumerate() {
            for (j, m2) in mods.iter().enumerate() {
                if i != j && hom_rank2(m1, m2)?.is_some() {
                    hom_pairs.push((i, j));
                }
            }
        }
    }
    let n = points.len();
    let count_to = |j: usize| hom_pairs.iter().filter(|p| p.1 == j).count();
    let count_from = |i: usize| hom_pairs.iter().filter(|p| p.0 == i).count();
    let (maximal, minimal) = if k == 0 || n == 0 {
        (None, None)
    } else {
        ((0..n).find(|&j| count_to(j) == n - 1), (0..n).find(|&i| count_from(i) == n - 1))
    };
    let quot = Rank1Module::eprime(tower, 0, a, c)?;
    let sub = Rank1Module::eprime(tower, 0, b, d)?;
    Ok(LatticeReport {
        l,
        k,
        points,
        homs: hom_pairs,
        maximal,
        minimal,
        top: character(&quot)?,
        bottom: character(&sub)?,
        peu_ramifie: ((d - c - 1).rem_euclid(lm1) == 0).then_some(true),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::breuil::{check_exact, dieudonne_reduce, validate};
    use crate::rank1::classify;
    use proptest::prelude::*;

    fn e3() -> Arc<TameTower> {
        Arc::new(TameTower::eprime(3).unwrap())
    }

    fn poly(t: &TameTower, terms: &[(usize, Fq)]) -> TruncPoly {
        let mut p = t.ring().zero();
        for &(i, c) in terms {
            p.0[i] = c;
        }
        p
    }

    #[test]
    fn transport_examples() {
        let t = e3();
        let ring = t.ring();
        let k = t.field();
        let zero = ring.zero();
        assert_eq!(solve_transport(&t, &zero, 2, 6, Fq::ONE).unwrap(), Some(zero.clone()));
        let h = ring.sub(&ring.monomial(Fq::ONE, 10), &ring.monomial(Fq::ONE, 14));
        let sol = solve_transport(&t, &h, 2, 6, Fq::ONE).unwrap().unwrap();
        let back = ring.sub(&ring.shift_up(&sol, 6), &ring.shift_up(&ring.frobenius(&sol), 2));
        assert_eq!(back, h);
        let image: Vec<Fq> = k.elements().map(|x| k.sub(x, k.frobenius(x))).collect();
        let outside = k.elements().find(|c| !image.contains(c)).unwrap();
        assert_eq!(solve_transport(&t, &poly(&t, &[(8, outside)]), 2, 6, Fq::ONE).unwrap(), None);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn transport_round_trip(rp in 0u32..=4, sp in 0u32..=4, ratio in 1u32..9, coeffs in proptest::collection::vec(0u32..9, 24)) {
            let t = e3();
            let ring = t.ring();
            let (r, s) = (2 * rp, 2 * sp);
            let t0 = TruncPoly(coeffs.iter().map(|&c| Fq(c)).chain(std::iter::repeat(Fq::ZERO)).take(ring.len).collect());
            let ratio = Fq(ratio);
            let h = ring.sub(&ring.shift_up(&t0, s as usize), &ring.scale(ratio, &ring.shift_up(&ring.frobenius(&t0), r as usize)));
            let sol = solve_transport(&t, &h, r, s, ratio).unwrap().expect("solvable by construction");
            let back = ring.sub(&ring.shift_up(&sol, s as usize), &ring.scale(ratio, &ring.shift_up(&ring.frobenius(&sol), r as usize)));
            prop_assert_eq!(back, h.clone());
            if h.0[s as usize..].iter().all(|c| c.is_zero()) {
                prop_assert!(h.is_zero());
            }
        }

        #[test]
        fn normal_form_round_trip(rp in 0u32..=4, sp in 0u32..=4, ratio in 1u32..9, coeffs in proptest::collection::vec(0u32..9, 24)) {
            let t = e3();
            let ring = t.ring();
            let (r, s) = (2 * rp, 2 * sp);
            let h = TruncPoly(coeffs.iter().map(|&c| Fq(c)).chain(std::iter::repeat(Fq::ZERO)).take(ring.len).collect());
            let nf = normal_form_h(&t, &h, r, s, Fq(ratio)).unwrap();
            let i0 = (3 * s as i64 - r as i64) / 2;
            for (i, c) in nf.residual.0.iter().enumerate() {
                prop_assert!(c.is_zero() || i < s as usize || (nf.eta_multiple > 0 && i as i64 == i0));
            }
            prop_assert!(solve_transport(&t, &nf.h_prime, r, s, Fq(ratio)).unwrap().is_some());
        }
    }

    #[test]
    fn ext_basis_examples() {
        let t = e3();
        let sub = Rank1Module::eprime(&t, 3, 2, 0).unwrap();
        let quot = Rank1Module::eprime(&t, 1, 1, 0).unwrap();
        let eb = ext_basis(&sub, &quot);
        assert_eq!((eb.degrees.clone(), eb.dim), (vec![0], 1));
        for m in classify(&t) {
            for q in classify(&t) {
                let eb = ext_basis(&m, &q);
                assert!(eb.dim <= 2);
                if q.r == 6 && m.r == 2 && eb.eta_slot.is_none() {
                    assert!(eb.degrees.iter().all(|&d| d < 2));
                }
            }
        }
    }

    #[test]
    fn ext_basis_matches_flat_oracle_and_classes_are_independent() {
        let t = e3();
        let all = classify(&t);
        let space = flat::FlatSpace::new(&t, 1);
        let ring = t.ring();
        for sub in all.iter().step_by(3) {
            for quot in all.iter().step_by(2) {
                let eb = ext_basis(sub, quot);
                let o = flat::ExtOracle::new(&sub.to_breuil(), &quot.to_breuil()).unwrap();
                assert_eq!(o.dim(), eb.dim, "{:?} by {:?}", quot.params(), sub.params());
                let ng = t.generators().len();
                let classes: Vec<Vec<u32>> = eb
                    .classes(&t)
                    .into_iter()
                    .map(|h| {
                        let m = Rank2Ext::new(sub.clone(), quot.clone(), h.clone()).unwrap();
                        let w = m.to_breuil();
                        assert!(validate(&w.module, Some(&w.descent)).is_empty());
                        let x = o.encode(&space, &[vec![h]], &[vec![ring.zero()]], &vec![vec![vec![ring.zero()]]; ng]);
                        assert!(o.is_cocycle(&x));
                        x
                    })
                    .collect();
                assert_eq!(o.class_rank(&classes), eb.dim);
            }
        }
    }

    #[test]
    fn eprime_normal_forms() {
        let t = e3();
        let m = make_ext_eprime(&t, 2, 1, 0, 6, 2, 0).unwrap().unwrap();
        assert_eq!(m.label().unwrap().n, 0);
        assert!(make_ext_eprime(&t, 2, 1, 0, 0, 2, 0).unwrap().is_none());
        let m = make_ext_eprime(&t, 0, 1, 0, 4, 2, 1).unwrap().unwrap();
        assert_eq!(m.label().unwrap().n, 2);
        assert!(make_ext_eprime(&t, 2, 1, 0, 6, 1, 0).is_err());
        for r in (0..=8).step_by(2) {
            for s in (0..=8).step_by(2) {
                for (a, c, b, d) in [(1, 0, 2, 0), (1, 0, 1, 1), (2, 1, 1, 0)] {
                    let sub = Rank1Module::eprime(&t, s / 2, b, d).unwrap();
                    let quot = Rank1Module::eprime(&t, r / 2, a, c).unwrap();
                    let eb = ext_basis(&sub, &quot);
                    let got = make_ext_eprime(&t, r, a, c, s, b, d).unwrap();
                    assert_eq!(got.as_ref().map(|m| m.label().unwrap().n), eb.degrees.first().copied());
                    if let Some(m) = got {
                        let w = m.to_breuil();
                        assert!(validate(&w.module, Some(&w.descent)).is_empty());
                        assert!(check_exact(&m.sub.to_breuil(), &w, &m.quot.to_breuil(), &m.inclusion(), &m.projection()).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn split_criterion_matches_hom_search() {
        let t = e3();
        let mut split_seen = 0;
        for r in (0..=8).step_by(2) {
            for s in (0..=8).step_by(2) {
                for (a, c, b, d) in [(1, 0, 2, 0), (1, 0, 1, 1), (2, 1, 1, 0), (2, 0, 1, 0)] {
                    let Some(m) = make_ext_eprime(&t, r, a, c, s, b, d).unwrap() else {
                        continue;
                    };
                    let src = Rank1Module::new(t.clone(), 0, m.quot.a, m.quot.c as i64).unwrap().to_breuil();
                    let space = flat::hom_space(&src, &m.to_breuil()).unwrap();
                    assert_eq!(is_split(&m), !space.is_empty(), "{}", m.label().unwrap());
                    if is_split(&m) {
                        split_seen += 1;
                        assert!(split_witness(&m).unwrap().is_some());
                    }
                }
            }
        }
        assert!(split_seen > 0);
        let m = make_ext_eprime(&t, 6, 1, 0, 2, 2, 0).unwrap().unwrap();
        assert_eq!(m.label().unwrap().n, 0);
        assert!(is_split(&m));
    }

    #[test]
    fn rank2_maps_and_generic_fibre() {
        let t = e3();
        let n1 = make_ext_eprime(&t, 0, 1, 0, 4, 2, 1).unwrap().unwrap();
        let n2 = make_ext_eprime(&t, 4, 1, 0, 8, 2, 1).unwrap().unwrap();
        assert_eq!(n2.label().unwrap().n, 6);
        let x = hom_rank2(&n1, &n2).unwrap().unwrap();
        assert!(generic_fibre_iso(&t, &x).unwrap());
        assert!(generic_fibre_iso_direct(&t, &x).unwrap());
        assert!(hom_rank2(&n2, &n1).unwrap().is_none());
        let id = hom_rank2(&n1, &n1).unwrap().unwrap();
        assert!(generic_fibre_iso(&t, &id).unwrap());
        let ring = t.ring();
        let zero = vec![vec![ring.zero(), ring.zero()]; 2];
        assert!(!generic_fibre_iso(&t, &zero).unwrap());
    }

    #[test]
    fn dieudonne_reduction_is_functorial_on_lattice_maps() {
        let t = e3();
        let k = t.field();
        let rep = lattice(&t, 1, 1, 2, 0, 1).unwrap();
        let mods: Vec<Rank2Ext> = rep
            .points
            .iter()
            .map(|p| make_ext_eprime(&t, p.label.r, 1, 0, p.label.s, 2, 1).unwrap().unwrap())
            .collect();
        for &(i, j) in &rep.homs {
            let x = hom_rank2(&mods[i], &mods[j]).unwrap().unwrap();
            let (a, b) = (mods[i].to_breuil(), mods[j].to_breuil());
            let da = dieudonne_reduce(&a.module, Some(&a.descent)).unwrap();
            let db = dieudonne_reduce(&b.module, Some(&b.descent)).unwrap();
            // row convention: row p of a matrix holds the image of basis vector p
            let x0: Vec<Vec<Fq>> = x.iter().map(|c| c.iter().map(|h| h.coeff(0)).collect()).collect();
            let mul = |p: &Vec<Vec<Fq>>, q: &Vec<Vec<Fq>>| -> Vec<Vec<Fq>> {
                (0..2)
                    .map(|r| {
                        (0..2)
                            .map(|c| (0..2).fold(Fq::ZERO, |acc, m| k.add(acc, k.mul(p[r][m], q[m][c]))))
                            .collect()
                    })
                    .collect()
            };
            assert_eq!(mul(&da.f_matrix, &x0), mul(&x0, &db.f_matrix), "{i} -> {j}");
            assert_eq!(mul(&da.v_matrix, &x0), mul(&x0, &db.v_matrix), "{i} -> {j}");
            assert_eq!(mul(&da.inertia, &x0), mul(&x0, &db.inertia), "{i} -> {j}");
        }
    }

    #[test]
    fn lattice_counts_and_extremes() {
        for l in [3u32, 5] {
            let t = Arc::new(TameTower::eprime(l).unwrap());
            for k in 1..l {
                let (c, d) = (0i64, k as i64 % (l as i64 - 1));
                let rep = lattice(&t, k, 1, 2, c, d).unwrap();
                assert_eq!(rep.points.len() as u32, (l - k + 1).pow(2), "l = {l}, k = {k}");
                let max = &rep.points[rep.maximal.unwrap()].label;
                let min = &rep.points[rep.minimal.unwrap()].label;
                assert_eq!((max.r, max.s, max.n), ((l - k) * (l - 1), (l + 1) * (l - 1), l * l - k * l));
                assert_eq!((min.r, min.s, min.n), (0, (k + 1) * (l - 1), l - k));
                for p in &rep.points {
                    assert!(p.r_prime <= l - k && p.s_prime >= k + 1 && !p.split);
                }
                for (i, p) in rep.points.iter().enumerate() {
                    for (j, q) in rep.points.iter().enumerate() {
                        let expected = i != j && p.r_prime <= q.r_prime && p.s_prime <= q.s_prime;
                        assert_eq!(rep.homs.contains(&(i, j)), expected);
                    }
                }
            }
            let rep = lattice(&t, 0, 1, 2, 0, 0).unwrap();
            assert!(rep.points.iter().all(|p| p.r_prime > p.s_prime && p.split));
            assert!(rep.maximal.is_none() && rep.homs.is_empty());
        }
        let t = e3();
        assert_eq!(lattice(&t, 2, 1, 2, 0, 0).unwrap().points.len(), 4);
        let rep = lattice(&t, 1, 1, 2, 0, 1).unwrap();
        assert_eq!(rep.peu_ramifie, Some(true));
        assert_eq!((rep.top.cyclo_exp, rep.bottom.cyclo_exp), (1, 0));
    }
}
