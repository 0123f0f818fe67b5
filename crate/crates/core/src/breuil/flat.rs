//! Breuil modules flattened to F_l-vector spaces.
//!
//! Every structure map is F_l-linear after forgetting the k[u]-structure (x -> x^l is additive),
//! so validity, Hom and Ext^1 reduce to ranks and kernels over F_l. Nothing here uses the
//! chain-ring echelon; it is the independent route used to cross-check the main algorithms.
//!
//! Coordinates: basis vector j, degree i, field digit t sit at index (j * N + i) * f + t.

use std::collections::BTreeSet;

use crate::error::{check_guard, Result};
use crate::exactlin::{Echelon, FlMatrix};
use crate::gfq::Fq;
use crate::upoly::{TameTower, TruncPoly, TruncRing};

use super::{apply_semilinear, basis_vec, combine, vadd, vscale, vsub, zero_vec, Axiom, BreuilModule, DescentData, Vector, WithDescent};

/// Default bound on the number of F_l unknowns in a Hom or Ext computation.
pub const UNKNOWN_GUARD: u128 = 5000;

#[derive(Clone, Debug)]
pub struct FlatSpace {
    pub ring: TruncRing,
    pub rank: usize,
    pub f: usize,
    pub dim: usize,
    l: u32,
}

impl FlatSpace {
    pub fn new(tower: &TameTower, rank: usize) -> Self {
        let ring = tower.ring();
        let f = tower.field().degree() as usize;
        FlatSpace {
            dim: rank * ring.len * f,
            ring,
            rank,
            f,
            l: tower.l,
        }
    }

    pub fn flatten(&self, v: &Vector) -> Vec<u32> {
        v.iter().flat_map(|h| self.ring.flatten(h)).collect()
    }

    pub fn unflatten(&self, x: &[u32]) -> Vector {
        x.chunks(self.ring.len * self.f).map(|c| self.ring.unflatten(c)).collect()
    }

    /// beta_t u^i e_j
    pub fn basis_element(&self, idx: usize) -> Vector {
        let t = idx % self.f;
        let i = (idx / self.f) % self.ring.len;
        let j = idx / (self.f * self.ring.len);
        let mut v = zero_vec(&self.ring, self.rank);
        v[j] = self.ring.monomial(Fq(self.l.pow(t as u32)), i);
        v
    }

    /// (beta_t u^i) as a scalar, for the F_l-spanning set of an R-span.
    fn scalar(&self, idx: usize) -> TruncPoly {
        self.ring.monomial(Fq(self.l.pow((idx % self.f) as u32)), idx / self.f)
    }

    fn scalars(&self) -> usize {
        self.ring.len * self.f
    }
}

fn neg(l: u32, v: &[u32]) -> Vec<u32> {
    v.iter().map(|&x| (l - x) % l).collect()
}

fn add(l: u32, a: &[u32], b: &[u32]) -> Vec<u32> {
    a.iter().zip(b).map(|(&x, &y)| (x + y) % l).collect()
}

fn sub(l: u32, a: &[u32], b: &[u32]) -> Vec<u32> {
    add(l, a, &neg(l, b))
}

/// M_1 and phi_1 as the F_l-span of the graph {(s, phi_1(s))}.
#[derive(Clone, Debug)]
pub struct FlatModule {
    pub space: FlatSpace,
    graph: Echelon,
}

impl FlatModule {
    pub fn new(m: &BreuilModule) -> Self {
        let space = FlatSpace::new(&m.tower, m.rank);
        let r = &space.ring;
        let mut graph = Echelon::new(space.l, 2 * space.dim);
        for (x, px) in m.m1_gens.iter().zip(&m.phi1) {
            for s in 0..space.scalars() {
                let c = space.scalar(s);
                let mut row = space.flatten(&vscale(r, &c, x));
                row.extend(space.flatten(&vscale(r, &r.frobenius(&c), px)));
                graph.insert(row);
            }
        }
        FlatModule { space, graph }
    }

    /// Reduces (y, 0) by the graph: returns the part outside M_1 and, for y in M_1, phi_1(y).
    pub fn split(&self, y: &[u32]) -> (Vec<u32>, Vec<u32>) {
        let d = self.space.dim;
        let mut v = y.to_vec();
        v.resize(2 * d, 0);
        let red = self.graph.reduce(v);
        (red[..d].to_vec(), neg(self.space.l, &red[d..]))
    }

    pub fn contains(&self, y: &[u32]) -> bool {
        self.split(y).0.iter().all(|&c| c == 0)
    }

    pub fn phi1(&self, y: &[u32]) -> Option<Vec<u32>> {
        let (rest, img) = self.split(y);
        rest.iter().all(|&c| c == 0).then_some(img)
    }

    pub fn well_defined(&self) -> bool {
        self.graph.pivots().iter().all(|&p| p < self.space.dim)
    }

    /// F_l-basis of M_1 paired with phi_1 of each element.
    pub fn m1_basis(&self) -> Vec<(Vec<u32>, Vec<u32>)> {
        let d = self.space.dim;
        self.graph
            .rows()
            .iter()
            .zip(self.graph.pivots())
            .filter(|(_, &p)| p < d)
            .map(|(row, _)| (row[..d].to_vec(), row[d..].to_vec()))
            .collect()
    }

    pub fn m1_dim(&self) -> usize {
        self.m1_basis().len()
    }
}

/// Axioms broken by (M, descent data), decided by F_l-linear algebra only.
pub fn flat_violations(m: &BreuilModule, dd: Option<&DescentData>) -> BTreeSet<Axiom> {
    let mut out = BTreeSet::new();
    let tower = &m.tower;
    let n = m.rank;
    let r = m.ring();
    let shape_ok = m.phi1.len() == m.m1_gens.len()
        && m.m1_gens
            .iter()
            .chain(&m.phi1)
            .all(|v| v.len() == n && v.iter().all(|h| h.len() == r.len));
    if !shape_ok {
        out.insert(Axiom::Shape);
        return out;
    }
    let fm = FlatModule::new(m);
    let sp = &fm.space;
    let l = sp.l;
    let ek = tower.e_k as usize;
    for idx in 0..sp.dim {
        let i = (idx / sp.f) % r.len;
        if i >= ek && !fm.contains(&sp.flatten(&sp.basis_element(idx))) {
            out.insert(Axiom::FiltrationContainsUeM);
            break;
        }
    }
    if !fm.well_defined() {
        out.insert(Axiom::Phi1Semilinear);
    }
    let mut span = Echelon::new(l, sp.dim);
    for px in &m.phi1 {
        for s in 0..sp.scalars() {
            span.insert(sp.flatten(&vscale(&r, &sp.scalar(s), px)));
        }
    }
    if span.rank() < sp.dim {
        out.insert(Axiom::Phi1Spans);
    }
    let Some(dd) = dd else { return out };
    let gens = tower.generators();
    if dd.mats.len() != gens.len() || dd.mats.iter().any(|mat| mat.len() != n || mat.iter().any(|c| c.len() != n)) {
        out.insert(Axiom::Shape);
        return out;
    }
    let act = |gi: usize, x: &[u32]| sp.flatten(&apply_semilinear(tower, &r, gens[gi], &dd.mats[gi], &sp.unflatten(x)));
    let basis = fm.m1_basis();
    for gi in 0..gens.len() {
        let mut img = Echelon::new(l, sp.dim);
        for idx in 0..sp.dim {
            img.insert(act(gi, &sp.flatten(&sp.basis_element(idx))));
        }
        if img.rank() < sp.dim {
            out.insert(Axiom::DescentBijective);
        }
        for (s, ps) in &basis {
            match fm.phi1(&act(gi, s)) {
                None => {
                    out.insert(Axiom::DescentPreservesFiltration);
                }
                Some(lhs) => {
                    if lhs != act(gi, ps) {
                        out.insert(Axiom::DescentCommutesWithPhi1);
                    }
                }
            }
        }
    }
    for rel in tower.relations() {
        let word = |w: &[usize], x: Vec<u32>| w.iter().rev().fold(x, |acc, &i| act(i, &acc));
        for idx in 0..sp.dim {
            let e = sp.flatten(&sp.basis_element(idx));
            if word(&rel.lhs, e.clone()) != word(&rel.rhs, e) {
                out.insert(Axiom::DescentComposition);
                break;
            }
        }
    }
    out
}

/// Matrix whose column u is `f(e_u)` for a linear `f` on F_l^unknowns.
fn linear_map_columns(l: u32, unknowns: usize, f: impl Fn(&[u32]) -> Vec<u32>) -> FlMatrix {
    let mut cols = Vec::with_capacity(unknowns);
    let mut x = vec![0u32; unknowns];
    for u in 0..unknowns {
        x[u] = 1;
        cols.push(f(&x));
        x[u] = 0;
    }
    let rows = cols.first().map_or(0, |c| c.len());
    // drop rows that vanish on every unknown
    let keep: Vec<usize> = (0..rows).filter(|&i| cols.iter().any(|c| c[i] != 0)).collect();
    let cols: Vec<Vec<u32>> = cols.into_iter().map(|c| keep.iter().map(|&i| c[i]).collect()).collect();
    FlMatrix::from_cols(l, keep.len(), &cols).expect("uniform columns")
}

fn kernel(m: &FlMatrix, unknowns: usize) -> Vec<Vec<u32>> {
    if m.nrows() == 0 {
        return (0..unknowns)
            .map(|u| {
                let mut v = vec![0; unknowns];
                v[u] = 1;
                v
            })
            .collect();
    }
    m.kernel_basis()
}

/// F_l-basis of the kernel of the R-linear map R^n -> R^m with columns `x`.
pub fn map_kernel(tower: &TameTower, x: &[Vector]) -> Result<Vec<Vector>> {
    let src = FlatSpace::new(tower, x.len());
    let dst_rank = x.first().map_or(0, |c| c.len());
    check_guard("kernel unknowns", src.dim as u128, UNKNOWN_GUARD)?;
    let r = &src.ring;
    let m = linear_map_columns(src.l, src.dim, |v| {
        let y = src.unflatten(v);
        let img = combine(r, dst_rank, &y, x);
        img.iter().flat_map(|h| r.flatten(h)).collect()
    });
    Ok(kernel(&m, src.dim).iter().map(|v| src.unflatten(v)).collect())
}

/// An F_l-basis of Hom(src, dst) in the category with descent data, as column matrices.
pub fn hom_space(src: &WithDescent, dst: &WithDescent) -> Result<Vec<Vec<Vector>>> {
    let tower = &src.module.tower;
    let ns = src.module.rank;
    let fd = FlatModule::new(&dst.module);
    let sp = &fd.space;
    let l = sp.l;
    let r = &sp.ring;
    let unknowns = ns * sp.dim;
    check_guard("hom unknowns", unknowns as u128, UNKNOWN_GUARD)?;
    let gens = tower.generators();
    let decode = |x: &[u32]| -> Vec<Vector> { x.chunks(sp.dim).map(|c| sp.unflatten(c)).collect() };
    let constraints = |x: &[u32]| -> Vec<u32> {
        let xm = decode(x);
        let mut out = Vec::new();
        for (g, pg) in src.module.m1_gens.iter().zip(&src.module.phi1) {
            let y = combine(r, sp.rank, g, &xm);
            let (rest, img) = fd.split(&sp.flatten(&y));
            out.extend(rest);
            out.extend(sub(l, &img, &sp.flatten(&combine(r, sp.rank, pg, &xm))));
        }
        for (gi, &g) in gens.iter().enumerate() {
            for (j, xj) in xm.iter().enumerate() {
                let lhs = apply_semilinear(tower, r, g, &dst.descent.mats[gi], xj);
                let rhs = combine(r, sp.rank, &src.descent.mats[gi][j], &xm);
                out.extend(sp.flatten(&vsub(r, &lhs, &rhs)));
            }
        }
        out
    };
    let m = linear_map_columns(l, unknowns, constraints);
    Ok(kernel(&m, unknowns).iter().map(|v| decode(v)).collect())
}

/// Extensions 0 -> S -> E -> Q -> 0 with E = S + Q as modules, parametrized by
/// H_i (S-part of the lift of the i-th M_1 generator of Q), Phi_i (S-part of its phi_1) and
/// A_{g,j} (S-part of [g] on the j-th basis vector of Q). Ext^1 = cocycles / coboundaries.
pub struct ExtOracle {
    pub unknowns: usize,
    pub cocycle_dim: usize,
    pub coboundary_dim: usize,
    l: u32,
    ds: usize,
    m: usize,
    q: usize,
    ngens: usize,
    constraint: FlMatrix,
    coboundaries: Echelon,
}

impl ExtOracle {
    pub fn new(sub_mod: &WithDescent, quot: &WithDescent) -> Result<Self> {
        let tower = sub_mod.module.tower.clone();
        let fs = FlatModule::new(&sub_mod.module);
        let ss = fs.space.clone();
        let r = ss.ring.clone();
        let l = ss.l;
        let p = sub_mod.module.rank;
        let ds = ss.dim;
        let qm = &quot.module;
        let qn = qm.rank;
        let qs = FlatSpace::new(&tower, qn);
        let ys = &qm.m1_gens;
        let m = ys.len();
        let gens = tower.generators();
        let ng = gens.len();
        let unknowns = ds * (2 * m + ng * qn);
        check_guard("extension unknowns", unknowns as u128, UNKNOWN_GUARD)?;

        // R-combinations of the generators of Q_1, flattened over F_l
        let span_cols: Vec<Vec<u32>> = (0..m)
            .flat_map(|i| (0..qs.scalars()).map(move |s| (i, s)))
            .map(|(i, s)| qs.flatten(&vscale(&r, &qs.scalar(s), &ys[i])))
            .collect();
        let span = FlMatrix::from_cols(l, qs.dim, &span_cols).expect("shape");
        let coeffs = |x: &[u32]| -> Vec<TruncPoly> { x.chunks(qs.scalars()).map(|c| r.unflatten(c)).collect() };
        let express = |v: &Vector| -> Result<Vec<TruncPoly>> {
            let x = span
                .solve(&qs.flatten(v))?
                .ok_or_else(|| crate::error::Error::Domain("quotient is not a valid Breuil module".into()))?;
            Ok(coeffs(&x))
        };
        let syz: Vec<Vec<TruncPoly>> = span.kernel_basis().iter().map(|v| coeffs(v)).collect();
        let ue = r.monomial(Fq::ONE, tower.e_k as usize);
        let rho: Vec<Vec<TruncPoly>> = (0..qn)
            .map(|j| express(&vscale(&r, &ue, &basis_vec(&r, qn, j))))
            .collect::<Result<_>>()?;
        let mu: Vec<Vec<Vec<TruncPoly>>> = gens
            .iter()
            .enumerate()
            .map(|(gi, &g)| {
                ys.iter()
                    .map(|y| express(&apply_semilinear(&tower, &r, g, &quot.descent.mats[gi], y)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;

        let smat = &sub_mod.descent.mats;
        let qmat = &quot.descent.mats;
        let block = |x: &[u32], b: usize| ss.unflatten(&x[b * ds..(b + 1) * ds]);
        let a_block = |gi: usize, j: usize| 2 * m + gi * qn + j;
        let s_act = |gi: usize, v: &Vector| apply_semilinear(&tower, &r, gens[gi], &smat[gi], v);
        // S-part of [g]_E on (sv, qv)
        let e_act = |x: &[u32], gi: usize, sv: &Vector, qv: &Vector| -> (Vector, Vector) {
            let gq: Vec<TruncPoly> = qv.iter().map(|h| r.act(&tower, gens[gi], h)).collect();
            let a: Vec<Vector> = (0..qn).map(|j| block(x, a_block(gi, j))).collect();
            let s_new = vadd(&r, &s_act(gi, sv), &combine(&r, p, &gq, &a));
            let q_new = apply_semilinear(&tower, &r, gens[gi], &qmat[gi], qv);
            (s_new, q_new)
        };
        let rels = tower.relations();
        let constraints = |x: &[u32]| -> Vec<u32> {
            let h: Vec<Vector> = (0..m).map(|i| block(x, i)).collect();
            let ph: Vec<Vector> = (0..m).map(|i| block(x, m + i)).collect();
            let mut out = Vec::new();
            for sz in &syz {
                let y = combine(&r, p, sz, &h);
                let (rest, img) = fs.split(&ss.flatten(&y));
                out.extend(rest);
                let szl: Vec<TruncPoly> = sz.iter().map(|c| r.frobenius(c)).collect();
                out.extend(sub(l, &img, &ss.flatten(&combine(&r, p, &szl, &ph))));
            }
            for rj in &rho {
                out.extend(fs.split(&ss.flatten(&combine(&r, p, rj, &h))).0);
            }
            for (gi, &g) in gens.iter().enumerate() {
                let a: Vec<Vector> = (0..qn).map(|j| block(x, a_block(gi, j))).collect();
                for i in 0..m {
                    let gy: Vec<TruncPoly> = ys[i].iter().map(|c| r.act(&tower, g, c)).collect();
                    let d = vsub(
                        &r,
                        &vadd(&r, &combine(&r, p, &gy, &a), &s_act(gi, &h[i])),
                        &combine(&r, p, &mu[gi][i], &h),
                    );
                    let (rest, phid) = fs.split(&ss.flatten(&d));
                    out.extend(rest);
                    let mul: Vec<TruncPoly> = mu[gi][i].iter().map(|c| r.frobenius(c)).collect();
                    let gphi: Vec<TruncPoly> = qm.phi1[i].iter().map(|c| r.act(&tower, g, c)).collect();
                    let lhs = add(l, &phid, &ss.flatten(&combine(&r, p, &mul, &ph)));
                    let rhs = vadd(&r, &combine(&r, p, &gphi, &a), &s_act(gi, &ph[i]));
                    out.extend(sub(l, &lhs, &ss.flatten(&rhs)));
                }
            }
            for rel in &rels {
                for j in 0..qn {
                    let run = |w: &[usize]| {
                        w.iter()
                            .rev()
                            .fold((zero_vec(&r, p), basis_vec(&r, qn, j)), |(sv, qv), &gi| e_act(x, gi, &sv, &qv))
                            .0
                    };
                    out.extend(ss.flatten(&vsub(&r, &run(&rel.lhs), &run(&rel.rhs))));
                }
            }
            out
        };
        let constraint = linear_map_columns(l, unknowns, constraints);
        let cocycle_dim = unknowns - if constraint.nrows() == 0 { 0 } else { constraint.rank() };

        let mut coboundaries = Echelon::new(l, unknowns);
        for (s, ps) in fs.m1_basis() {
            for i in 0..m {
                let mut v = vec![0u32; unknowns];
                v[i * ds..(i + 1) * ds].copy_from_slice(&s);
                v[(m + i) * ds..(m + i + 1) * ds].copy_from_slice(&ps);
                coboundaries.insert(v);
            }
        }
        for j in 0..qn {
            for c in 0..ds {
                let mut xs: Vec<Vector> = vec![zero_vec(&r, p); qn];
                xs[j] = ss.unflatten(&{
                    let mut e = vec![0u32; ds];
                    e[c] = 1;
                    e
                });
                let mut v = vec![0u32; unknowns];
                for i in 0..m {
                    let dh = combine(&r, p, &ys[i], &xs);
                    let dphi = combine(&r, p, &qm.phi1[i], &xs);
                    v[i * ds..(i + 1) * ds].copy_from_slice(&neg(l, &ss.flatten(&dh)));
                    v[(m + i) * ds..(m + i + 1) * ds].copy_from_slice(&neg(l, &ss.flatten(&dphi)));
                }
                for gi in 0..ng {
                    for jj in 0..qn {
                        let da = vsub(&r, &s_act(gi, &xs[jj]), &combine(&r, p, &qmat[gi][jj], &xs));
                        let b = a_block(gi, jj);
                        v[b * ds..(b + 1) * ds].copy_from_slice(&ss.flatten(&da));
                    }
                }
                coboundaries.insert(v);
            }
        }
        let coboundary_dim = coboundaries.rank();
        let oracle = ExtOracle {
            unknowns,
            cocycle_dim,
            coboundary_dim,
            l,
            ds,
            m,
            q: qn,
            ngens: ng,
            constraint,
            coboundaries,
        };
        if oracle.coboundaries.rows().iter().any(|b| !oracle.is_cocycle(b)) {
            return Err(crate::error::Error::Invariant(
                "a trivial extension fails the cocycle constraints".into(),
            ));
        }
        Ok(oracle)
    }

    pub fn dim(&self) -> usize {
        self.cocycle_dim - self.coboundary_dim
    }

    pub fn is_cocycle(&self, x: &[u32]) -> bool {
        self.constraint.nrows() == 0 || self.constraint.mul_vec(x).expect("shape").iter().all(|&c| c == 0)
    }

    /// Packs (H, Phi, A) into the unknown vector.
    pub fn encode(&self, space: &FlatSpace, h: &[Vector], phi: &[Vector], a: &[Vec<Vector>]) -> Vec<u32> {
        let mut v = Vec::with_capacity(self.unknowns);
        debug_assert_eq!(space.dim, self.ds);
        debug_assert!(h.len() == self.m && phi.len() == self.m && a.len() == self.ngens);
        for x in h.iter().chain(phi) {
            v.extend(space.flatten(x));
        }
        for per_gen in a {
            debug_assert_eq!(per_gen.len(), self.q);
            for x in per_gen {
                v.extend(space.flatten(x));
            }
        }
        v
    }

    /// Dimension of the span of the given extension classes in Ext^1.
    pub fn class_rank(&self, classes: &[Vec<u32>]) -> usize {
        let mut e = self.coboundaries.clone();
        let base = e.rank();
        for c in classes {
            e.insert(c.clone());
        }
        e.rank() - base
    }

    pub fn prime(&self) -> u32 {
        self.l
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::breuil::validate;
    use std::sync::Arc;

    fn rank1(t: &Arc<TameTower>, r0: usize, a: u32, k2: i64) -> WithDescent {
        let r = t.ring();
        let k = t.field();
        WithDescent {
            module: BreuilModule {
                tower: t.clone(),
                rank: 1,
                m1_gens: vec![vec![r.monomial(Fq::ONE, r0)]],
                phi1: vec![vec![r.constant(Fq(a))]],
            },
            descent: DescentData {
                mats: t
                    .generators()
                    .into_iter()
                    .map(|g| vec![vec![r.constant(k.upow(t.zeta_of(g), k2))]])
                    .collect(),
            },
        }
    }

    #[test]
    fn flat_route_agrees_with_validate_on_tampering() {
        let t = Arc::new(TameTower::eprime(3).unwrap());
        let r = t.ring();
        let good = rank1(&t, 2, 1, 1);
        assert!(validate(&good.module, Some(&good.descent)).is_empty());
        assert_eq!(flat_violations(&good.module, Some(&good.descent)), BTreeSet::new());
        let mut bad = good.clone();
        bad.module.m1_gens[0][0] = r.monomial(Fq::ONE, 9);
        let axes: BTreeSet<Axiom> = validate(&bad.module, Some(&bad.descent)).into_iter().map(|v| v.axiom).collect();
        assert!(axes.contains(&Axiom::FiltrationContainsUeM));
        assert_eq!(axes, flat_violations(&bad.module, Some(&bad.descent)));
        let mut bad = good.clone();
        bad.descent.mats[1][0][0] = r.constant(t.field().upow(t.zeta_e(), 2));
        assert!(!flat_violations(&bad.module, Some(&bad.descent)).is_empty());
        assert!(!validate(&bad.module, Some(&bad.descent)).is_empty());
    }

    #[test]
    fn self_hom_is_a_line_and_kernel_of_identity_is_zero() {
        let t = Arc::new(TameTower::eprime(3).unwrap());
        let m = rank1(&t, 4, 2, 3);
        assert_eq!(hom_space(&m, &m).unwrap().len(), 1);
        let r = t.ring();
        assert!(map_kernel(&t, &[vec![r.one()]]).unwrap().is_empty());
        assert_eq!(map_kernel(&t, &[vec![r.monomial(Fq::ONE, 20)]]).unwrap().len(), 20 * 2);
    }

    #[test]
    fn ext_of_rank_one_modules_has_split_class_as_zero() {
        let t = Arc::new(TameTower::eprime(3).unwrap());
        let s = rank1(&t, 6, 1, -9);
        let q = rank1(&t, 2, 2, -3);
        let o = ExtOracle::new(&s, &q).unwrap();
        assert!(o.cocycle_dim >= o.coboundary_dim);
        assert_eq!(o.class_rank(&[vec![0; o.unknowns]]), 0);
    }
}
