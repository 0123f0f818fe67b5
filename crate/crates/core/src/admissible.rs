//! Rank two E' normal forms whose closed-fibre Dieudonne module satisfies the relations
//! imposed by a tame type tau = w2^m + w2^{lm}, and the resulting shapes of rho-bar on inertia.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::Serialize;

use crate::breuil::{dieudonne_reduce, DieudonneData};
use crate::error::{domain, Error, Result};
use crate::gfq::{Field, Fq};
use crate::rank1::{character, Character};
use crate::rank2::{is_split, make_ext_eprime, Rank2Ext, Rank2Label};
use crate::upoly::TameTower;

/// m = (l + 1) j + i with 1 <= i <= l.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TypeTau {
    pub l: u32,
    /// Reduced mod l^2 - 1.
    pub m: u32,
    pub i: u32,
    /// Reduced mod l - 1.
    pub j: u32,
}

impl TypeTau {
    pub fn new(l: u32, m: i64) -> Result<Self> {
        let e = (l * l - 1) as i64;
        let m = m.rem_euclid(e) as u32;
        if m % (l + 1) == 0 {
            return domain(format!("l + 1 = {} divides m = {m}", l + 1));
        }
        Ok(TypeTau {
            l,
            m,
            i: m % (l + 1),
            j: (m / (l + 1)) % (l - 1),
        })
    }

    /// Every valid type for this l, in increasing m.
    pub fn all(l: u32) -> Vec<TypeTau> {
        (0..(l * l - 1) as i64).filter_map(|m| TypeTau::new(l, m).ok()).collect()
    }
}

fn mat_mul(k: &Field, a: &[Vec<Fq>], b: &[Vec<Fq>]) -> Vec<Vec<Fq>> {
    let n = a.len();
    (0..n)
        .map(|r| {
            (0..n)
                .map(|c| (0..n).fold(Fq::ZERO, |acc, t| k.add(acc, k.mul(a[r][t], b[t][c]))))
                .collect()
        })
        .collect()
}

fn mat_pow(k: &Field, a: &[Vec<Fq>], e: u32) -> Vec<Vec<Fq>> {
    let n = a.len();
    let mut out: Vec<Vec<Fq>> = (0..n)
        .map(|r| (0..n).map(|c| if r == c { Fq::ONE } else { Fq::ZERO }).collect())
        .collect();
    for _ in 0..e {
        out = mat_mul(k, &out, a);
    }
    out
}

fn is_scalar(a: &[Vec<Fq>], s: Fq) -> bool {
    a.iter()
        .enumerate()
        .all(|(r, row)| row.iter().enumerate().all(|(c, &x)| x == if r == c { s } else { Fq::ZERO }))
}

/// [z] + [z]^l = z^{-m} + z^{-lm}, [z]^{l+1} = z^{-(l+1)m}, and F + T V = 0, at z = zeta_e.
pub fn check_relations(tower: &TameTower, d: &DieudonneData, m: i64, t: Fq) -> bool {
    let k = tower.field();
    let l = tower.l;
    let z = tower.zeta_e();
    let g = &d.inertia;
    let gl = mat_pow(k, g, l);
    let sum: Vec<Vec<Fq>> = g
        .iter()
        .zip(&gl)
        .map(|(x, y)| x.iter().zip(y).map(|(&p, &q)| k.add(p, q)).collect())
        .collect();
    let trace_ok = is_scalar(&sum, k.add(k.upow(z, -m), k.upow(z, -(l as i64) * m)));
    let det_ok = is_scalar(&mat_pow(k, g, l + 1), k.upow(z, -(l as i64 + 1) * m));
    let fv_ok = d
        .f_matrix
        .iter()
        .zip(&d.v_matrix)
        .all(|(fr, vr)| fr.iter().zip(vr).all(|(&f, &v)| k.add(f, k.mul(t, v)).is_zero()));
    trace_ok && det_ok && fv_ok
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum DropReason {
    /// (a, c) = (b, d)
    Centralizer,
    /// No n in the window
    NoExtension,
    Relations,
    Split,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Candidate {
    pub r: u32,
    pub a: u32,
    pub c: u32,
    pub s: u32,
    pub b: u32,
    pub d: u32,
}

struct Built {
    module: Rank2Ext,
    label: Rank2Label,
    dieudonne: DieudonneData,
    t: Fq,
}

/// All E' normal forms at one l with their reductions, filtered per type on demand.
pub struct Sweep {
    tower: Arc<TameTower>,
    entries: Vec<(Candidate, std::result::Result<Built, DropReason>)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub kept: Vec<Rank2Label>,
    pub dropped: Vec<(Candidate, DropReason)>,
}

impl Sweep {
    pub fn new(tower: &Arc<TameTower>) -> Result<Self> {
        if !tower.is_eprime() {
            return Err(Error::UnsupportedTower("the sweep runs over the E'/Q_l preset".into()));
        }
        let l = tower.l;
        let k = tower.field();
        let mut entries = Vec::new();
        for rp in 0..=l + 1 {
            for sp in 0..=l + 1 {
                for c in 0..l - 1 {
                    for d in 0..l - 1 {
                        for a in 1..l {
                            for b in 1..l {
                                let cand = Candidate {
                                    r: rp * (l - 1),
                                    a,
                                    c,
                                    s: sp * (l - 1),
                                    b,
                                    d,
                                };
                                if (a, c) == (b, d) {
                                    entries.push((cand, Err(DropReason::Centralizer)));
                                    continue;
                                }
                                let built = make_ext_eprime(tower, cand.r, a as i64, c as i64, cand.s, b as i64, d as i64)?;
                                let Some(module) = built else {
                                    entries.push((cand, Err(DropReason::NoExtension)));
                                    continue;
                                };
                                let w = module.to_breuil();
                                let dieudonne = dieudonne_reduce(&w.module, Some(&w.descent))?;
                                let label = module.label().expect("normal form");
                                let t = k.from_int((a * b) as i64);
                                entries.push((
                                    cand,
                                    Ok(Built {
                                        module,
                                        label,
                                        dieudonne,
                                        t,
                                    }),
                                ));
                            }
                        }
                    }
                }
            }
        }
        Ok(Sweep {
            tower: tower.clone(),
            entries,
        })
    }

    pub fn filter(&self, tau: &TypeTau) -> SweepResult {
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        for (cand, e) in &self.entries {
            match e {
                Err(reason) => dropped.push((*cand, *reason)),
                Ok(b) => {
                    if !check_relations(&self.tower, &b.dieudonne, tau.m as i64, b.t) {
                        dropped.push((*cand, DropReason::Relations));
                    } else if is_split(&b.module) {
                        dropped.push((*cand, DropReason::Split));
                    } else {
                        kept.push(b.label);
                    }
                }
            }
        }
        kept.sort();
        SweepResult { kept, dropped }
    }
}

/// Brute-force path: every normal form at this l filtered by the relations for tau.
pub fn enumerate_admissible_bruteforce(tower: &Arc<TameTower>, tau: &TypeTau) -> Result<SweepResult> {
    Ok(Sweep::new(tower)?.filter(tau))
}

/// Closed-form path: M((l-1)(l+1-i), a, 1-i-j; (l-1)i, b, -j; 0, 1) and
/// M((l-1)i, a, -j; (l-1)(l+1-i), b, 1-i-j; 0, 1), split members removed.
pub fn enumerate_admissible(tower: &Arc<TameTower>, tau: &TypeTau) -> Result<Vec<Rank2Ext>> {
    if !tower.is_eprime() || tower.l != tau.l {
        return Err(Error::UnsupportedTower("type and tower disagree, or tower is not E'".into()));
    }
    let l = tower.l;
    let (i, j) = (tau.i as i64, tau.j as i64);
    let families = [
        ((l - 1) * (l + 1 - tau.i), 1 - i - j, (l - 1) * tau.i, -j),
        ((l - 1) * tau.i, -j, (l - 1) * (l + 1 - tau.i), 1 - i - j),
    ];
    let lm1 = l as i64 - 1;
    let mut out = Vec::new();
    for (r, c, s, d) in families {
        for a in 1..l as i64 {
            for b in 1..l as i64 {
                if a == b && (c - d).rem_euclid(lm1) == 0 {
                    continue;
                }
                let m = make_ext_eprime(tower, r, a, c, s, b, d)?
                    .ok_or_else(|| Error::Invariant(format!("no n for family member r = {r}, s = {s}")))?;
                if m.label().map(|x| x.n) != Some(0) {
                    return Err(Error::Invariant("family member has n != 0".into()));
                }
                if !is_split(&m) {
                    out.push(m);
                }
            }
        }
    }
    out.sort_by_key(|m| m.label());
    Ok(out)
}

/// Diagonal of rho-bar: the quotient's character on top, the sub's below.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct RhoBarForm {
    pub top: Character,
    pub bottom: Character,
    pub star_nonzero: bool,
    pub peu_ramifie: Option<bool>,
}

/// (omega^top, *; 0, omega^bottom) on inertia.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct InertiaForm {
    pub top_exp: u32,
    pub bottom_exp: u32,
    pub peu_ramifie: bool,
}

impl RhoBarForm {
    pub fn on_inertia(&self) -> InertiaForm {
        InertiaForm {
            top_exp: self.top.cyclo_exp,
            bottom_exp: self.bottom.cyclo_exp,
            peu_ramifie: self.peu_ramifie == Some(true),
        }
    }
}

pub fn rho_bar_of(m: &Rank2Ext) -> Result<RhoBarForm> {
    let lm1 = m.tower.l as i64 - 1;
    if m.quot.a == m.sub.a && m.quot.c == m.sub.c {
        return domain("equal diagonal characters");
    }
    let dc = m.sub.c as i64 - m.quot.c as i64;
    Ok(RhoBarForm {
        top: character(&m.quot)?,
        bottom: character(&m.sub)?,
        star_nonzero: !is_split(m),
        peu_ramifie: ((dc - 1).rem_euclid(lm1) == 0).then_some(true),
    })
}

/// (omega^{i+j}, omega^{1+j}), peu-ramifie if i = 2; (omega^{1+j}, omega^{i+j}), peu-ramifie if i = l - 1.
pub fn theorem_main_forms(tau: &TypeTau) -> BTreeSet<InertiaForm> {
    let lm1 = tau.l - 1;
    let (x, y) = ((tau.i + tau.j) % lm1, (1 + tau.j) % lm1);
    BTreeSet::from([
        InertiaForm {
            top_exp: x,
            bottom_exp: y,
            peu_ramifie: tau.i == 2,
        },
        InertiaForm {
            top_exp: y,
            bottom_exp: x,
            peu_ramifie: tau.i == tau.l - 1,
        },
    ])
}

/// Admissible modules grouped by their rho-bar form.
pub fn modules_by_form(mods: &[Rank2Ext]) -> Result<BTreeMap<RhoBarForm, Vec<Rank2Label>>> {
    let mut out: BTreeMap<RhoBarForm, Vec<Rank2Label>> = BTreeMap::new();
    for m in mods {
        out.entry(rho_bar_of(m)?).or_default().push(m.label().expect("normal form"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::breuil::{validate, BreuilModule, DescentData};
    use crate::rank1::Rank1Module;

    fn e3() -> Arc<TameTower> {
        Arc::new(TameTower::eprime(3).unwrap())
    }

    #[test]
    fn type_decomposition() {
        let t = TypeTau::new(3, 1).unwrap();
        assert_eq!((t.i, t.j), (1, 0));
        let t = TypeTau::new(5, 13).unwrap();
        assert_eq!((t.i, t.j), (1, 2));
        assert!(TypeTau::new(3, 4).is_err());
        assert_eq!(TypeTau::all(3).len(), 6);
        for t in TypeTau::all(5) {
            assert_eq!((t.l + 1) * t.j + t.i, t.m);
        }
    }

    #[test]
    fn relations_on_examples() {
        let t = e3();
        let k = t.field();
        let m = make_ext_eprime(&t, 2, 1, 0, 6, 2, 0).unwrap().unwrap();
        let w = m.to_breuil();
        let d = dieudonne_reduce(&w.module, Some(&w.descent)).unwrap();
        assert!(check_relations(&t, &d, 1, k.from_int(2)));
        assert!(!check_relations(&t, &d, 2, k.from_int(2)));

        let r = t.ring();
        let z = k.upow(t.zeta_e(), 1);
        let direct = BreuilModule {
            tower: t.clone(),
            rank: 2,
            m1_gens: vec![vec![r.one(), r.zero()], vec![r.zero(), r.one()]],
            phi1: vec![vec![r.one(), r.zero()], vec![r.zero(), r.constant(k.from_int(2))]],
        };
        let q0 = Rank1Module::eprime(&t, 0, 1, 0).unwrap().k_exp();
        let q1 = Rank1Module::eprime(&t, 0, 2, 1).unwrap().k_exp();
        let dd = DescentData {
            mats: t
                .generators()
                .into_iter()
                .map(|g| {
                    let zg = t.zeta_of(g);
                    vec![
                        vec![r.constant(k.upow(zg, q0)), r.zero()],
                        vec![r.zero(), r.constant(k.upow(zg, q1))],
                    ]
                })
                .collect(),
        };
        assert!(validate(&direct, Some(&dd)).is_empty());
        let d = dieudonne_reduce(&direct, Some(&dd)).unwrap();
        assert_ne!(z, Fq::ZERO);
        for m in 0..8 {
            assert!(!check_relations(&t, &d, m, k.from_int(2)));
        }
    }

    #[test]
    fn brute_force_matches_closed_form_at_3() {
        let t = e3();
        let sweep = Sweep::new(&t).unwrap();
        for tau in TypeTau::all(3) {
            let brute = sweep.filter(&tau);
            let closed: Vec<Rank2Label> = enumerate_admissible(&t, &tau).unwrap().iter().map(|m| m.label().unwrap()).collect();
            assert_eq!(brute.kept, closed, "m = {}", tau.m);
            let forms = modules_by_form(&enumerate_admissible(&t, &tau).unwrap()).unwrap();
            assert!(forms.values().all(|v| v.len() == 1));
            let on_inertia: BTreeSet<InertiaForm> = forms.keys().map(|f| f.on_inertia()).collect();
            assert_eq!(on_inertia, theorem_main_forms(&tau), "m = {}", tau.m);
        }
        let m1 = sweep.filter(&TypeTau::new(3, 1).unwrap());
        assert!(m1.kept.iter().all(|x| (x.r, x.c, x.s, x.d, x.n) == (2, 0, 6, 0, 0) && x.a != x.b));
        assert_eq!(m1.kept.len(), 2);
    }

    #[test]
    fn rank_two_reduction_is_nilpotent() {
        // on (e, e'): F e = V e = 0, F e' = -b e, V e' = (1/a) e
        let t = e3();
        let k = t.field();
        for tau in TypeTau::all(3) {
            for m in enumerate_admissible(&t, &tau).unwrap() {
                let w = m.to_breuil();
                let d = dieudonne_reduce(&w.module, Some(&w.descent)).unwrap();
                let (a, b) = (m.quot.a, m.sub.a);
                let z = Fq::ZERO;
                assert_eq!(d.f_matrix, vec![vec![z, z], vec![k.neg(b), z]]);
                assert_eq!(d.v_matrix, vec![vec![z, z], vec![k.inv(a).unwrap(), z]]);
            }
        }
    }

    #[test]
    fn forms_examples() {
        let f = theorem_main_forms(&TypeTau::new(3, 1).unwrap());
        assert_eq!(f.len(), 1);
        let f: Vec<_> = theorem_main_forms(&TypeTau::new(3, 2).unwrap()).into_iter().collect();
        assert_eq!(
            f.iter().map(|x| (x.top_exp, x.bottom_exp, x.peu_ramifie)).collect::<Vec<_>>(),
            vec![(0, 1, true), (1, 0, true)]
        );
        let f: Vec<_> = theorem_main_forms(&TypeTau::new(5, 3).unwrap()).into_iter().collect();
        assert_eq!(
            f.iter().map(|x| (x.top_exp, x.bottom_exp, x.peu_ramifie)).collect::<Vec<_>>(),
            vec![(1, 3, false), (3, 1, false)]
        );
        let m = make_ext_eprime(&e3(), 2, 1, 0, 6, 2, 0).unwrap().unwrap();
        let rho = rho_bar_of(&m).unwrap();
        assert_eq!(
            (rho.top.cyclo_exp, rho.bottom.cyclo_exp, rho.top.unit, rho.bottom.unit),
            (1, 1, 1, 2)
        );
    }

    #[test]
    fn swapping_variables_exchanges_families() {
        for l in [3u32, 5] {
            let t = Arc::new(TameTower::eprime(l).unwrap());
            for tau in TypeTau::all(l) {
                let (i, j) = (tau.i as i64, tau.j as i64);
                let swapped = TypeTau::new(l, (l as i64 + 1) * (i + j - 1) + (l as i64 + 1 - i)).unwrap();
                let a: BTreeSet<_> = enumerate_admissible(&t, &tau).unwrap().iter().map(|m| m.label()).collect();
                let b: BTreeSet<_> = enumerate_admissible(&t, &swapped).unwrap().iter().map(|m| m.label()).collect();
                assert_eq!(a, b);
            }
        }
    }
}
