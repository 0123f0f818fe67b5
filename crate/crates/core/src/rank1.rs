//! Rank one Breuil modules M(r, a, c) with descent data.
//!
//! M = (k[u]/u^N) e, M_1 = u^r M, phi_1(u^r e) = a e, [g] e = (g(pi)/pi)^{k2} e with
//! k2 = e'c - U l r'.

use std::sync::Arc;

use serde::Serialize;

use crate::breuil::{BreuilModule, DescentData, WithDescent};
use crate::error::{check_guard, domain, Error, Result, DEFAULT_GUARD};
use crate::gfq::Fq;
use crate::upoly::{TameTower, TruncPoly};

#[derive(Clone, Debug)]
pub struct Rank1Module {
    pub tower: Arc<TameTower>,
    pub r: u32,
    pub a: Fq,
    /// Taken mod d0.
    pub c: u32,
}

impl PartialEq for Rank1Module {
    fn eq(&self, o: &Self) -> bool {
        (self.r, self.a, self.c) == (o.r, o.a, o.c)
    }
}
impl Eq for Rank1Module {}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Rank1Params {
    pub r: u32,
    pub r_prime: u32,
    pub a: u32,
    pub c: u32,
}

/// An unramified twist times a power of the mod-l cyclotomic character.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Character {
    /// Frobenius eigenvalue of the unramified part, in F_l^x.
    pub unit: u32,
    /// Exponent of omega, mod l - 1.
    pub cyclo_exp: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Rank1Morphism {
    pub alpha: Fq,
    /// e' -> alpha u^degree e
    pub degree: u32,
}

impl Rank1Module {
    pub fn new(tower: Arc<TameTower>, r: u32, a: Fq, c: i64) -> Result<Self> {
        if r > tower.e_k {
            return domain(format!("r = {r} exceeds e_K = {}", tower.e_k));
        }
        if r % tower.d0 != 0 {
            return domain(format!("d0 = {} does not divide r = {r}", tower.d0));
        }
        if a.is_zero() || a.0 >= tower.field().size() || !tower.in_kl(a) {
            return domain("a must lie in kL^x");
        }
        let c = c.rem_euclid(tower.d0 as i64) as u32;
        Ok(Rank1Module { tower, r, a, c })
    }

    /// M(r' (l-1), a, c) in the E' preset, a read in F_l.
    pub fn eprime(tower: &Arc<TameTower>, r_prime: u32, a: i64, c: i64) -> Result<Self> {
        let k = tower.field();
        Self::new(tower.clone(), r_prime * (tower.l - 1), k.from_int(a), c)
    }

    pub fn r_prime(&self) -> u32 {
        self.r / self.tower.d0
    }

    /// k2 = e'c - U l r', reduced mod e.
    pub fn k_exp(&self) -> i64 {
        let t = &self.tower;
        (t.e_prime as i64 * self.c as i64 - t.u * t.l as i64 * self.r_prime() as i64).rem_euclid(t.e as i64)
    }

    pub fn params(&self) -> Rank1Params {
        Rank1Params {
            r: self.r,
            r_prime: self.r_prime(),
            a: self.a.0,
            c: self.c,
        }
    }

    pub fn to_breuil(&self) -> WithDescent {
        let t = &self.tower;
        let ring = t.ring();
        let k = t.field();
        let module = BreuilModule {
            tower: t.clone(),
            rank: 1,
            m1_gens: vec![vec![ring.monomial(Fq::ONE, self.r as usize)]],
            phi1: vec![vec![ring.constant(self.a)]],
        };
        let mats = t
            .generators()
            .into_iter()
            .map(|g| vec![vec![ring.constant(k.upow(t.zeta_of(g), self.k_exp()))]])
            .collect();
        WithDescent {
            module,
            descent: DescentData { mats },
        }
    }
}

/// log base the field generator of x, for x in kL^x, modulo the index of (kL^x)^{l-1}.
fn kl_power_class(t: &TameTower, x: Fq) -> u64 {
    let k = t.field();
    let q = k.size() as u64;
    let ql = (t.l as u64).pow(t.f_l);
    let step = (q - 1) / (ql - 1);
    (k.log(x).expect("unit") as u64 / step) % (t.l as u64 - 1)
}

/// x in (kL^x)^{l-1}
pub fn is_kl_power(t: &TameTower, x: Fq) -> bool {
    kl_power_class(t, x) == 0
}

/// The least element of kL^x in each class mod (kL^x)^{l-1}.
pub fn unit_class_reps(t: &TameTower) -> Vec<Fq> {
    let mut reps: Vec<Fq> = Vec::new();
    let mut seen = Vec::new();
    for x in t.kl_elements().into_iter().filter(|x| !x.is_zero()) {
        let c = kl_power_class(t, x);
        if !seen.contains(&c) {
            seen.push(c);
            reps.push(x);
        }
    }
    reps
}

/// One module per isomorphism class.
pub fn classify(tower: &Arc<TameTower>) -> Vec<Rank1Module> {
    let reps = unit_class_reps(tower);
    let mut out = Vec::new();
    for r in (0..=tower.e_k).step_by(tower.d0 as usize) {
        for &a in &reps {
            for c in 0..tower.d0 {
                out.push(Rank1Module::new(tower.clone(), r, a, c as i64).expect("valid by construction"));
            }
        }
    }
    out
}

/// All morphisms M -> N, one per admissible alpha, in increasing alpha.
pub fn homs(m: &Rank1Module, n: &Rank1Module) -> Vec<Rank1Morphism> {
    let t = &m.tower;
    let k = t.field();
    let (r, s) = (m.r as i64, n.r as i64);
    let lm1 = t.l as i64 - 1;
    if r > s || (s - r) % lm1 != 0 {
        return Vec::new();
    }
    let degree = t.l as i64 * (s - r) / lm1;
    if (m.k_exp() - degree - n.k_exp()).rem_euclid(t.e as i64) != 0 {
        return Vec::new();
    }
    let ratio = k.div(m.a, n.a).expect("units");
    t.kl_elements()
        .into_iter()
        .filter(|&x| !x.is_zero() && k.upow(x, lm1) == ratio)
        .map(|alpha| Rank1Morphism {
            alpha,
            degree: degree as u32,
        })
        .collect()
}

/// The morphism as a 1 x 1 column matrix.
pub fn morphism_matrix(m: &Rank1Module, f: &Rank1Morphism) -> Vec<Vec<TruncPoly>> {
    vec![vec![m.tower.ring().monomial(f.alpha, f.degree as usize)]]
}

pub fn is_isomorphic(m: &Rank1Module, n: &Rank1Module) -> bool {
    m.r == n.r && !homs(m, n).is_empty()
}

/// The generic fibre character; needs L = Q_l.
pub fn character(m: &Rank1Module) -> Result<Character> {
    let t = &m.tower;
    if t.e_l != 1 || t.f_l != 1 {
        return Err(Error::UnsupportedTower("characters are computed for L = Q_l only".into()));
    }
    let l = t.l as i64;
    let x = t.v * m.r_prime() as i64 - t.lm1_prime as i64 * m.c as i64;
    let k = t.field();
    let eps = k.neg(k.from_int(t.g_pi as i64));
    let unit = k.mul(m.a, k.upow(eps, x));
    Ok(Character {
        unit: k.to_prime(unit).expect("F_l element"),
        cyclo_exp: (1 + x).rem_euclid(l - 1) as u32,
    })
}

/// (e_K - r, a / G_pi(0)) for the underlying Oort-Tate group scheme.
pub fn oort_tate_param(m: &Rank1Module) -> (u32, Fq) {
    let t = &m.tower;
    let k = t.field();
    (t.e_k - m.r, k.div(m.a, k.from_int(t.g_pi as i64)).expect("unit"))
}

/// Whether M(r, a) without descent data acquires descent data: d0 | r and
/// a in kL^x ((k[u]/u^{el})^x)^{l-1}.
pub fn admits_descent(tower: &TameTower, r: u32, a: &TruncPoly) -> Result<bool> {
    let a0 = a.coeff(0);
    if a0.is_zero() {
        return domain("a must be a unit");
    }
    if r % tower.d0 != 0 {
        return Ok(false);
    }
    // 1 + u k[[u]] is an l-group, so (l-1)-th powers of units are (k^x)^{l-1} (1 + u k[[u]])
    let k = tower.field();
    let q = k.size() as u64;
    let ql = (tower.l as u64).pow(tower.f_l);
    let g = crate::gfq::gcd((q - 1) / (ql - 1), tower.l as u64 - 1);
    Ok(k.log(a0)? as u64 % g == 0)
}

/// Brute-force version of `admits_descent` over k[u]/u^len, for small len.
pub fn admits_descent_bruteforce(tower: &TameTower, r: u32, a: &TruncPoly, len: usize) -> Result<bool> {
    let k = tower.field();
    let q = k.size() as u128;
    check_guard("unit enumeration", q.pow(len as u32), DEFAULT_GUARD)?;
    if r % tower.d0 != 0 {
        return Ok(false);
    }
    let ring = tower.ring_with_len(len);
    let target = ring.recast(a);
    let lm1 = tower.l as usize - 1;
    let mut powers = std::collections::HashSet::new();
    for idx in 0..q.pow(len as u32) {
        let mut i = idx;
        let coeffs: Vec<Fq> = (0..len)
            .map(|_| {
                let d = (i % q) as u32;
                i /= q;
                Fq(d)
            })
            .collect();
        if coeffs[0].is_zero() {
            continue;
        }
        let x = TruncPoly(coeffs);
        let mut p = ring.one();
        for _ in 0..lm1 {
            p = ring.mul(&p, &x);
        }
        powers.insert(p);
    }
    let kl: Vec<Fq> = tower.kl_elements().into_iter().filter(|x| !x.is_zero()).collect();
    Ok(powers.iter().any(|p| kl.iter().any(|&c| ring.scale(c, p) == target)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::breuil::{flat, is_morphism, validate};

    fn e3() -> Arc<TameTower> {
        Arc::new(TameTower::eprime(3).unwrap())
    }

    #[test]
    fn census_sizes() {
        assert_eq!(classify(&e3()).len(), 20);
        assert_eq!(classify(&Arc::new(TameTower::eprime(5).unwrap())).len(), 112);
    }

    #[test]
    fn every_class_is_valid() {
        for m in classify(&e3()) {
            let w = m.to_breuil();
            assert!(validate(&w.module, Some(&w.descent)).is_empty(), "{:?}", m.params());
        }
    }

    #[test]
    fn identity_and_characters() {
        let t = e3();
        let m = Rank1Module::eprime(&t, 1, 1, 1).unwrap();
        let h = homs(&m, &m);
        assert_eq!(h[0], Rank1Morphism { alpha: Fq::ONE, degree: 0 });
        let x = character(&Rank1Module::eprime(&t, 0, 1, 0).unwrap()).unwrap();
        assert_eq!((x.unit, x.cyclo_exp), (1, 1));
        assert_eq!(oort_tate_param(&Rank1Module::eprime(&t, 0, 1, 0).unwrap()), (8, Fq(2)));
    }

    #[test]
    fn homs_agree_with_hom_space_oracle() {
        let t = e3();
        let all = classify(&t);
        for m in &all {
            for n in &all {
                let maps = homs(m, n);
                for f in &maps {
                    assert!(is_morphism(&m.to_breuil(), &n.to_breuil(), &morphism_matrix(m, f)));
                }
                let space = flat::hom_space(&m.to_breuil(), &n.to_breuil()).unwrap();
                // the nonzero maps are alpha u^D with alpha in the F_l^x-torsor; the F_l-span is a line or zero
                assert_eq!(space.len(), usize::from(!maps.is_empty()), "{:?} -> {:?}", m.params(), n.params());
            }
        }
    }

    #[test]
    fn eprime_hom_examples() {
        let t = e3();
        let h = homs(
            &Rank1Module::eprime(&t, 0, 2, 1).unwrap(),
            &Rank1Module::eprime(&t, 1, 2, 1).unwrap(),
        );
        assert_eq!(h.iter().map(|f| (f.alpha.0, f.degree)).collect::<Vec<_>>(), vec![(1, 3), (2, 3)]);
        assert!(homs(
            &Rank1Module::eprime(&t, 0, 1, 0).unwrap(),
            &Rank1Module::eprime(&t, 1, 1, 1).unwrap()
        )
        .is_empty());
        assert_eq!(oort_tate_param(&Rank1Module::eprime(&t, 1, 1, 0).unwrap()), (6, Fq(2)));
        for r in 0..=4 {
            let x = character(&Rank1Module::eprime(&t, r, 1, 1).unwrap()).unwrap();
            assert_eq!((x.unit, x.cyclo_exp), (1, 0));
        }
    }

    #[test]
    fn hom_existence_matches_congruences() {
        for t in [
            e3(),
            Arc::new(TameTower::over_ql(7, 4, 2).unwrap()),
            Arc::new(TameTower::over_ql(5, 3, 2).unwrap()),
        ] {
            let all = classify(&t);
            let k = t.field();
            let lm1 = t.l as i64 - 1;
            for m in &all {
                for n in &all {
                    let (r, s) = (m.r as i64, n.r as i64);
                    let expected = r <= s
                        && (s - r) % lm1 == 0
                        && is_kl_power(&t, k.div(m.a, n.a).unwrap())
                        && (m.c as i64 - n.c as i64 - t.v * (r - s) / lm1).rem_euclid(t.d0 as i64) == 0;
                    assert_eq!(!homs(m, n).is_empty(), expected, "{:?} -> {:?}", m.params(), n.params());
                }
            }
        }
    }

    #[test]
    fn classes_are_pairwise_distinct_and_compose() {
        let t = Arc::new(TameTower::eprime(5).unwrap());
        let all = classify(&t);
        for (i, m) in all.iter().enumerate() {
            for (j, n) in all.iter().enumerate() {
                assert_eq!(is_isomorphic(m, n), i == j);
            }
        }
        let k = t.field();
        for m in &all {
            for n in &all {
                for p in &all {
                    for f in homs(m, n) {
                        for g in homs(n, p) {
                            let composite = Rank1Morphism {
                                alpha: k.mul(f.alpha, g.alpha),
                                degree: f.degree + g.degree,
                            };
                            assert!(homs(m, p).contains(&composite));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn character_shift_along_r() {
        for t in [e3(), Arc::new(TameTower::over_ql(7, 4, 2).unwrap())] {
            let lm1 = t.l - 1;
            for m in classify(&t) {
                for s in (m.r..=t.e_k).step_by(lm1 as usize) {
                    let c = m.c as i64 + t.v * (s as i64 - m.r as i64) / lm1 as i64;
                    let n = Rank1Module::new(t.clone(), s, m.a, c).unwrap();
                    assert_eq!(character(&m).unwrap(), character(&n).unwrap());
                }
            }
        }
    }

    #[test]
    fn general_tower_character_is_hom_invariant() {
        let t = Arc::new(TameTower::over_ql(7, 4, 2).unwrap());
        let all = classify(&t);
        for m in &all {
            for n in &all {
                if !homs(m, n).is_empty() {
                    assert_eq!(character(m).unwrap(), character(n).unwrap());
                }
            }
        }
    }

    #[test]
    fn unsupported_tower_for_characters() {
        let t = Arc::new(TameTower::new(3, 2, 1, 1, 2, -1).unwrap());
        let m = classify(&t).remove(0);
        assert!(matches!(character(&m), Err(Error::UnsupportedTower(_))));
    }

    #[test]
    fn descent_obstruction() {
        let t = e3();
        let k = t.field();
        let r = t.ring();
        assert!(!admits_descent(&t, 2, &r.constant(k.generator())).unwrap());
        assert!(admits_descent(&t, 2, &r.constant(k.upow(k.generator(), 2))).unwrap());
        assert!(!admits_descent(&t, 3, &r.one()).unwrap());
        for a in k.units() {
            for c1 in k.elements() {
                let poly = r.from_coeffs(&[a, c1]);
                assert_eq!(
                    admits_descent(&t, 2, &poly).unwrap(),
                    admits_descent_bruteforce(&t, 2, &poly, 2).unwrap()
                );
            }
        }
    }
}
