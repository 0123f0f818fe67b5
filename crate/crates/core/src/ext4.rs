//! Self-extensions 0 -> M -> N -> M -> 0 of the nonsplit admissible rank two modules, in the
//! normal form with two parameters (v, z), and an oracle for the dimension of Ext^1(M, M).

use std::sync::Arc;

use serde::Serialize;

use crate::admissible::{check_relations, TypeTau};
use crate::breuil::flat::{ExtOracle, FlatSpace};
use crate::breuil::{check_exact, dieudonne_reduce, validate, BreuilModule, DescentData, DieudonneData, Vector, WithDescent};
use crate::error::{domain, Error, Result};
use crate::gfq::Fq;
use crate::rank2::{is_split, make_ext_eprime, Rank2Ext};
use crate::upoly::TameTower;

/// Number of free parameters of the normal form.
pub const NORMAL_FORM_DIM: usize = 2;

/// Whether M = M(r, a, c; s, b, d; 0, 1) with r' + s' = l + 1, 1 <= r' <= l - 1 and
/// d = c + 1 - r' mod l - 1.
pub fn has_self_ext_shape(m: &Rank2Ext) -> bool {
    let t = &m.tower;
    let l = t.l;
    let Some(lab) = m.label() else { return false };
    let (rp, sp) = (m.quot.r_prime(), m.sub.r_prime());
    t.is_eprime()
        && lab.n == 0
        && lab.h_n == 1
        && rp + sp == l + 1
        && (1..l).contains(&rp)
        && (lab.d as i64 - lab.c as i64 - 1 + rp as i64).rem_euclid(l as i64 - 1) == 0
        && !is_split(m)
}

/// The type of a module of self-extension shape, normalized to i = r' (the other choice is m -> l m).
pub fn type_of(m: &Rank2Ext) -> Result<TypeTau> {
    if !has_self_ext_shape(m) {
        return domain("module is not of the admissible self-extension shape");
    }
    let l = m.tower.l as i64;
    let i = m.quot.r_prime() as i64;
    let j = (-(m.quot.c as i64)).rem_euclid(l - 1);
    TypeTau::new(l as u32, (l + 1) * j + i)
}

/// The self-extension-shape module for (i, j, a, b): r' = i when i < l, and the swapped family when i = l.
pub fn admissible_base(tower: &Arc<TameTower>, tau: &TypeTau, a: i64, b: i64) -> Result<Rank2Ext> {
    let l = tower.l;
    if tau.l != l {
        return domain("type and tower disagree");
    }
    let (i, j) = (tau.i as i64, tau.j as i64);
    let (rp, c, sp, d) = if tau.i < l {
        (tau.i, -j, l + 1 - tau.i, 1 - i - j)
    } else {
        (1, 1 - i - j, l, -j)
    };
    let lm1 = l as i64 - 1;
    if (a - b).rem_euclid(l as i64) == 0 && (c - d).rem_euclid(lm1) == 0 {
        return domain(format!("(a, c) = (b, d): i = {i} needs a != b"));
    }
    let m = make_ext_eprime(tower, rp * (l - 1), a, c, sp * (l - 1), b, d)?
        .ok_or_else(|| Error::Invariant("admissible family member has no extension".into()))?;
    if !has_self_ext_shape(&m) {
        return Err(Error::Invariant(format!(
            "{} is not of the expected shape",
            m.label().expect("label")
        )));
    }
    Ok(m)
}

#[derive(Clone, Debug)]
pub struct Rank4Module {
    pub base: Rank2Ext,
    pub v: u32,
    pub z: u32,
}

impl Rank4Module {
    /// Basis (e, e', f, f'); M_1 = <u^s e, u^r e' + e, u^s f, u^r f' + f>,
    /// phi_1 = (b e, a e', b f + v e, a f' + z e').
    pub fn to_breuil(&self) -> WithDescent {
        let t = &self.base.tower;
        let ring = t.ring();
        let k = t.field();
        let (r, s) = (self.base.quot.r as usize, self.base.sub.r as usize);
        let (a, b) = (self.base.quot.a, self.base.sub.a);
        let vec4 = |x: [(usize, crate::upoly::TruncPoly); 2]| -> Vector {
            let mut out = vec![ring.zero(); 4];
            for (i, p) in x {
                out[i] = ring.add(&out[i], &p);
            }
            out
        };
        let us = ring.monomial(Fq::ONE, s);
        let ur = ring.monomial(Fq::ONE, r);
        let one = ring.one();
        let zero = ring.zero();
        let m1_gens = vec![
            vec4([(0, us.clone()), (1, zero.clone())]),
            vec4([(1, ur.clone()), (0, one.clone())]),
            vec4([(2, us), (3, zero.clone())]),
            vec4([(3, ur), (2, one)]),
        ];
        let cv = ring.constant(k.from_int(self.v as i64));
        let cz = ring.constant(k.from_int(self.z as i64));
        let phi1 = vec![
            vec4([(0, ring.constant(b)), (1, zero.clone())]),
            vec4([(1, ring.constant(a)), (0, zero.clone())]),
            vec4([(2, ring.constant(b)), (0, cv)]),
            vec4([(3, ring.constant(a)), (1, cz)]),
        ];
        let (k1, k2) = (self.base.k1(), self.base.k2());
        let mats = t
            .generators()
            .into_iter()
            .map(|g| {
                let zg = t.zeta_of(g);
                [k1, k2, k1, k2]
                    .iter()
                    .enumerate()
                    .map(|(j, &ex)| {
                        let mut col = vec![ring.zero(); 4];
                        col[j] = ring.constant(k.upow(zg, ex));
                        col
                    })
                    .collect()
            })
            .collect();
        WithDescent {
            module: BreuilModule {
                tower: t.clone(),
                rank: 4,
                m1_gens,
                phi1,
            },
            descent: DescentData { mats },
        }
    }

    /// e -> e, e' -> e'
    pub fn inclusion(&self) -> Vec<Vector> {
        let ring = self.base.tower.ring();
        (0..2)
            .map(|j| (0..4).map(|i| if i == j { ring.one() } else { ring.zero() }).collect())
            .collect()
    }

    /// e, e' -> 0; f -> e, f' -> e'
    pub fn projection(&self) -> Vec<Vector> {
        let ring = self.base.tower.ring();
        (0..4)
            .map(|j| (0..2).map(|i| if j == i + 2 { ring.one() } else { ring.zero() }).collect())
            .collect()
    }
}

pub fn self_ext(m: &Rank2Ext, v: i64, z: i64) -> Result<Rank4Module> {
    if !has_self_ext_shape(m) {
        return domain("self-extensions need M(r,a,c;s,b,d;0,1) with r' + s' = l + 1 and d = c + 1 - r'");
    }
    let l = m.tower.l as i64;
    let n = Rank4Module {
        base: m.clone(),
        v: v.rem_euclid(l) as u32,
        z: z.rem_euclid(l) as u32,
    };
    let w = n.to_breuil();
    let bad = validate(&w.module, Some(&w.descent));
    if !bad.is_empty() {
        return Err(Error::Invariant(format!("normal form fails validation: {}", bad[0])));
    }
    let base = m.to_breuil();
    if !check_exact(&base, &w, &base, &n.inclusion(), &n.projection())? {
        return Err(Error::Invariant("normal form is not an extension of M by M".into()));
    }
    Ok(n)
}

/// Reduction on the basis (e, f, e', f').
pub fn dieudonne_rank4(n: &Rank4Module) -> Result<DieudonneData> {
    let w = n.to_breuil();
    let d = dieudonne_reduce(&w.module, Some(&w.descent))?;
    const ORDER: [usize; 4] = [0, 2, 1, 3];
    let permute = |m: &[Vec<Fq>]| -> Vec<Vec<Fq>> { ORDER.iter().map(|&i| ORDER.iter().map(|&j| m[i][j]).collect()).collect() };
    Ok(DieudonneData {
        dim: 4,
        f_matrix: permute(&d.f_matrix),
        v_matrix: permute(&d.v_matrix),
        inertia: permute(&d.inertia),
    })
}

/// Whether N satisfies the relations of the type of its base, with T = ab.
pub fn satisfies_relations(n: &Rank4Module) -> Result<bool> {
    let t = &n.base.tower;
    let tau = type_of(&n.base)?;
    let d = dieudonne_rank4(n)?;
    Ok(check_relations(t, &d, tau.m as i64, t.field().mul(n.base.quot.a, n.base.sub.a)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConstrainedSubspace {
    pub dim: usize,
    /// (v, z) pairs in F_l.
    pub basis: Vec<(u32, u32)>,
}

/// {(v, z) : v + (b/a) z = 0}, spanned by (-(b/a), 1).
pub fn constrained_subspace(m: &Rank2Ext) -> Result<ConstrainedSubspace> {
    if !has_self_ext_shape(m) {
        return domain("module is not of the admissible self-extension shape");
    }
    let k = m.tower.field();
    let ratio = k.div(m.sub.a, m.quot.a)?;
    let v = k.to_prime(k.neg(ratio)).expect("a, b lie in F_l");
    Ok(ConstrainedSubspace {
        dim: 1,
        basis: vec![(v, 1)],
    })
}

/// dim Ext^1(M, M) by linear algebra over F_l.
pub fn oracle_ext_dim(m: &Rank2Ext) -> Result<usize> {
    let w = m.to_breuil();
    Ok(ExtOracle::new(&w, &w)?.dim())
}

/// Rank of the classes of N(1, 0) and N(0, 1) in the oracle's quotient.
pub fn normal_form_rank(m: &Rank2Ext) -> Result<usize> {
    let t = &m.tower;
    let w = m.to_breuil();
    let oracle = ExtOracle::new(&w, &w)?;
    let space = FlatSpace::new(t, 2);
    let ring = t.ring();
    let zero = || vec![ring.zero(), ring.zero()];
    let gens = t.generators().len();
    let classes: Vec<Vec<u32>> = [(1, 0), (0, 1)]
        .iter()
        .map(|&(v, z)| {
            let phi = vec![vec![ring.constant(Fq(v)), ring.zero()], vec![ring.zero(), ring.constant(Fq(z))]];
            oracle.encode(&space, &[zero(), zero()], &phi, &vec![vec![zero(), zero()]; gens])
        })
        .collect();
    if let Some(c) = classes.iter().find(|c| !oracle.is_cocycle(c)) {
        return Err(Error::Invariant(format!("normal form class {c:?} is not a cocycle")));
    }
    Ok(oracle.class_rank(&classes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admissible::enumerate_admissible;
    use std::collections::BTreeSet;

    fn e3() -> Arc<TameTower> {
        Arc::new(TameTower::eprime(3).unwrap())
    }

    fn all_bases(t: &Arc<TameTower>) -> Vec<Rank2Ext> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for tau in TypeTau::all(t.l) {
            for m in enumerate_admissible(t, &tau).unwrap() {
                if has_self_ext_shape(&m) && seen.insert(m.label()) {
                    out.push(m);
                }
            }
        }
        out
    }

    /// Rows of F and V on (e, f, e', f') read off the normal form by hand.
    fn expected(a: u32, b: u32, v: u32, z: u32, l: u32) -> (Vec<Vec<u32>>, Vec<Vec<u32>>) {
        let inv = |x: u32| (1..l).find(|y| x * y % l == 1).unwrap();
        let neg = |x: u32| (l - x % l) % l;
        let ai = inv(a);
        let f = vec![vec![0; 4], vec![0; 4], vec![neg(b), 0, 0, 0], vec![neg(v), neg(b), 0, 0]];
        let vm = vec![vec![0; 4], vec![0; 4], vec![ai, 0, 0, 0], vec![neg(z * ai % l * ai % l), ai, 0, 0]];
        (f, vm)
    }

    #[test]
    fn bases_at_three() {
        let t = e3();
        let bases = all_bases(&t);
        assert_eq!(bases.len(), 12);
        for m in &bases {
            let tau = type_of(m).unwrap();
            assert!(enumerate_admissible(&t, &tau).unwrap().iter().any(|x| x.label() == m.label()));
            let again = admissible_base(&t, &tau, m.quot.a.0 as i64, m.sub.a.0 as i64).unwrap();
            assert_eq!(again.label(), m.label());
        }
        assert!(admissible_base(&t, &TypeTau::new(3, 1).unwrap(), 1, 1).is_err());
        let m = admissible_base(&t, &TypeTau::new(3, 1).unwrap(), 1, 2).unwrap();
        assert_eq!(m.label().unwrap().to_string(), "M(2,1,0;6,2,0;0,1)");
    }

    #[test]
    fn normal_forms_validate_and_reduce_as_expected() {
        let t = e3();
        let k = t.field();
        for m in all_bases(&t) {
            let (a, b) = (k.to_prime(m.quot.a).unwrap(), k.to_prime(m.sub.a).unwrap());
            let line = constrained_subspace(&m).unwrap();
            assert_eq!(line.dim, 1);
            let (bv, bz) = line.basis[0];
            for v in 0..3 {
                for z in 0..3 {
                    let n = self_ext(&m, v as i64, z as i64).unwrap();
                    let d = dieudonne_rank4(&n).unwrap();
                    let as_u = |x: &Vec<Vec<Fq>>| -> Vec<Vec<u32>> {
                        x.iter().map(|r| r.iter().map(|&c| k.to_prime(c).unwrap()).collect()).collect()
                    };
                    let (ef, ev) = expected(a, b, v, z, 3);
                    assert_eq!(as_u(&d.f_matrix), ef);
                    assert_eq!(as_u(&d.v_matrix), ev);
                    let on_line = (0..3).any(|x| (x * bv % 3, x * bz % 3) == (v, z));
                    assert_eq!(satisfies_relations(&n).unwrap(), on_line, "{} v={v} z={z}", m.label().unwrap());
                }
            }
        }
    }

    #[test]
    fn constrained_line_examples() {
        let t = e3();
        let m = admissible_base(&t, &TypeTau::new(3, 1).unwrap(), 1, 2).unwrap();
        assert_eq!(constrained_subspace(&m).unwrap().basis, vec![(1, 1)]);
        let m = admissible_base(&t, &TypeTau::new(3, 2).unwrap(), 2, 2).unwrap();
        assert_eq!(constrained_subspace(&m).unwrap().basis, vec![(2, 1)]);
    }

    #[test]
    fn split_self_extension_has_zero_class() {
        let t = e3();
        let m = admissible_base(&t, &TypeTau::new(3, 1).unwrap(), 1, 2).unwrap();
        let n = self_ext(&m, 0, 0).unwrap();
        let d = dieudonne_rank4(&n).unwrap();
        assert_eq!(d.f_matrix.iter().flatten().filter(|c| !c.is_zero()).count(), 2);
        let other = (0..=4u32)
            .find_map(|rp| {
                make_ext_eprime(&t, 2 * rp, 1, 0, 4, 2, 0)
                    .unwrap()
                    .filter(|x| !has_self_ext_shape(x))
            })
            .unwrap();
        assert!(self_ext(&other, 1, 0).is_err());
    }

    #[test]
    fn oracle_dimension_and_independence() {
        let t = e3();
        let m = admissible_base(&t, &TypeTau::new(3, 1).unwrap(), 1, 2).unwrap();
        assert_eq!(oracle_ext_dim(&m).unwrap(), NORMAL_FORM_DIM);
        assert_eq!(normal_form_rank(&m).unwrap(), NORMAL_FORM_DIM);
    }
}
