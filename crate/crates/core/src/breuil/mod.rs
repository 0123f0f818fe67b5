//! Breuil modules over k[u]/u^{e_K l} with descent data, their validation, reduction to
//! Dieudonne modules, and morphism and exactness checks.
//!
//! Vectors are coordinate lists in the fixed basis. A matrix is a list of columns: column j is
//! the image of basis vector j. Descent matrices are indexed like `TameTower::generators()`.

pub mod flat;
pub mod submodule;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::gfq::{Field, Fq};
use crate::upoly::{GroupElem, TameTower, TruncPoly, TruncRing};

pub use submodule::Submodule;

pub type Vector = Vec<TruncPoly>;

#[derive(Clone, Debug)]
pub struct BreuilModule {
    pub tower: Arc<TameTower>,
    pub rank: usize,
    /// Generators of M_1.
    pub m1_gens: Vec<Vector>,
    /// phi_1 of each generator of M_1.
    pub phi1: Vec<Vector>,
}

#[derive(Clone, Debug)]
pub struct DescentData {
    /// `mats[g][j]` is [g] applied to basis vector j.
    pub mats: Vec<Vec<Vector>>,
}

#[derive(Clone, Debug)]
pub struct WithDescent {
    pub module: BreuilModule,
    pub descent: DescentData,
}

/// Which axiom a violation breaks.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Axiom {
    Shape,
    FiltrationContainsUeM,
    Phi1Semilinear,
    Phi1Spans,
    DescentBijective,
    DescentPreservesFiltration,
    DescentCommutesWithPhi1,
    DescentComposition,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axiom::Shape => "shape of the data",
            Axiom::FiltrationContainsUeM => "u^{e_K} M inside M_1",
            Axiom::Phi1Semilinear => "phi_1 semilinearity (well defined on relations)",
            Axiom::Phi1Spans => "phi_1(M_1) spans M",
            Axiom::DescentBijective => "[g] is a semilinear bijection",
            Axiom::DescentPreservesFiltration => "[g] preserves M_1",
            Axiom::DescentCommutesWithPhi1 => "[g] commutes with phi_1",
            Axiom::DescentComposition => "[g][h] = [gh]",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub axiom: Axiom,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.axiom, self.detail)
    }
}

fn violation(axiom: Axiom, detail: impl Into<String>) -> Violation {
    Violation {
        axiom,
        detail: detail.into(),
    }
}

// --- vector helpers over k[u]/u^N ---

pub fn zero_vec(r: &TruncRing, n: usize) -> Vector {
    vec![r.zero(); n]
}

pub fn basis_vec(r: &TruncRing, n: usize, j: usize) -> Vector {
    let mut v = zero_vec(r, n);
    v[j] = r.one();
    v
}

pub fn vadd(r: &TruncRing, a: &Vector, b: &Vector) -> Vector {
    a.iter().zip(b).map(|(x, y)| r.add(x, y)).collect()
}

pub fn vsub(r: &TruncRing, a: &Vector, b: &Vector) -> Vector {
    a.iter().zip(b).map(|(x, y)| r.sub(x, y)).collect()
}

pub fn vscale(r: &TruncRing, h: &TruncPoly, a: &Vector) -> Vector {
    a.iter().map(|x| r.mul(h, x)).collect()
}

/// sum_j h_j * cols[j]
pub fn combine(r: &TruncRing, dim: usize, h: &[TruncPoly], cols: &[Vector]) -> Vector {
    let mut out = zero_vec(r, dim);
    for (hj, c) in h.iter().zip(cols) {
        if !hj.is_zero() {
            out = vadd(r, &out, &vscale(r, hj, c));
        }
    }
    out
}

/// [g](sum_j h_j e_j) = sum_j g(h_j) [g]e_j
pub fn apply_semilinear(tower: &TameTower, r: &TruncRing, g: GroupElem, mat: &[Vector], v: &Vector) -> Vector {
    let dim = mat.first().map_or(v.len(), |c| c.len());
    let gh: Vec<TruncPoly> = v.iter().map(|h| r.act(tower, g, h)).collect();
    combine(r, dim, &gh, mat)
}

pub fn reduce_mod_u(v: &Vector) -> Vec<Fq> {
    v.iter().map(|h| h.coeff(0)).collect()
}

// --- small dense linear algebra over k ---

/// Solves A x = b over k where `cols` are the columns of A; free variables are zero.
pub(crate) fn k_solve(k: &Field, cols: &[Vec<Fq>], b: &[Fq]) -> Option<Vec<Fq>> {
    let n = b.len();
    let m = cols.len();
    let mut rows: Vec<Vec<Fq>> = (0..n)
        .map(|i| {
            let mut r: Vec<Fq> = cols.iter().map(|c| c[i]).collect();
            r.push(b[i]);
            r
        })
        .collect();
    let mut piv_cols = Vec::new();
    let mut rnk = 0;
    for c in 0..m {
        let Some(p) = (rnk..n).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(rnk, p);
        let inv = k.inv(rows[rnk][c]).expect("nonzero pivot");
        rows[rnk] = rows[rnk].iter().map(|&x| k.mul(x, inv)).collect();
        for i in 0..n {
            if i != rnk && !rows[i][c].is_zero() {
                let f = rows[i][c];
                let pr = rows[rnk].clone();
                for (x, y) in rows[i].iter_mut().zip(pr) {
                    *x = k.sub(*x, k.mul(f, y));
                }
            }
        }
        piv_cols.push(c);
        rnk += 1;
    }
    if rows[rnk..].iter().any(|r| !r[m].is_zero()) {
        return None;
    }
    let mut x = vec![Fq::ZERO; m];
    for (i, &c) in piv_cols.iter().enumerate() {
        x[c] = rows[i][m];
    }
    Some(x)
}

pub(crate) fn k_rank(k: &Field, cols: &[Vec<Fq>]) -> usize {
    let n = cols.first().map_or(0, |c| c.len());
    let mut rows: Vec<Vec<Fq>> = cols.to_vec();
    let mut rnk = 0;
    for c in 0..n {
        let Some(p) = (rnk..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(rnk, p);
        let inv = k.inv(rows[rnk][c]).expect("nonzero pivot");
        let pr: Vec<Fq> = rows[rnk].iter().map(|&x| k.mul(x, inv)).collect();
        for row in rows.iter_mut().skip(rnk + 1) {
            let f = row[c];
            if !f.is_zero() {
                for (x, &y) in row.iter_mut().zip(&pr) {
                    *x = k.sub(*x, k.mul(f, y));
                }
            }
        }
        rnk += 1;
    }
    rnk
}

impl BreuilModule {
    pub fn ring(&self) -> TruncRing {
        self.tower.ring()
    }

    pub fn filtration(&self) -> Submodule {
        Submodule::new(&self.ring(), self.rank, &self.m1_gens)
    }

    /// phi_1(y) for y in M_1, through any expression of y in the generators.
    pub fn phi1_apply(&self, fil: &Submodule, y: &Vector) -> Option<Vector> {
        let r = self.ring();
        let h = fil.express(y)?;
        let hl: Vec<TruncPoly> = h.iter().map(|x| r.frobenius(x)).collect();
        Some(combine(&r, self.rank, &hl, &self.phi1))
    }
}

/// Every axiom failure of (M, descent data); empty iff valid.
pub fn validate(m: &BreuilModule, dd: Option<&DescentData>) -> Vec<Violation> {
    let mut out = Vec::new();
    let tower = &m.tower;
    let r = m.ring();
    let n = m.rank;
    let shape_ok = m.phi1.len() == m.m1_gens.len()
        && m.m1_gens
            .iter()
            .chain(&m.phi1)
            .all(|v| v.len() == n && v.iter().all(|h| h.len() == r.len));
    if !shape_ok {
        out.push(violation(
            Axiom::Shape,
            "generator and phi_1 lists must be rank-length vectors over k[u]/u^N",
        ));
        return out;
    }
    let fil = m.filtration();
    for j in 0..n {
        let v = vscale(&r, &r.monomial(Fq::ONE, tower.e_k as usize), &basis_vec(&r, n, j));
        if !fil.contains(&v) {
            out.push(violation(Axiom::FiltrationContainsUeM, format!("u^e_K e_{j} not in M_1")));
        }
    }
    for (s, h) in fil.syzygies().iter().enumerate() {
        let hl: Vec<TruncPoly> = h.iter().map(|x| r.frobenius(x)).collect();
        if combine(&r, n, &hl, &m.phi1).iter().any(|c| !c.is_zero()) {
            out.push(violation(
                Axiom::Phi1Semilinear,
                format!("relation {s} among M_1 generators is not respected"),
            ));
        }
    }
    let image = Submodule::new(&r, n, &m.phi1);
    if (0..n).any(|j| !image.contains(&basis_vec(&r, n, j))) {
        out.push(violation(Axiom::Phi1Spans, "phi_1(M_1) generates a proper submodule"));
    }
    let Some(dd) = dd else { return out };
    let gens = tower.generators();
    if dd.mats.len() != gens.len() || dd.mats.iter().any(|mat| mat.len() != n || mat.iter().any(|c| c.len() != n)) {
        out.push(violation(Axiom::Shape, "one n x n matrix per group generator"));
        return out;
    }
    let k = tower.field();
    for (gi, (&g, mat)) in gens.iter().zip(&dd.mats).enumerate() {
        let modu: Vec<Vec<Fq>> = mat.iter().map(reduce_mod_u).collect();
        if k_rank(k, &modu) < n {
            out.push(violation(Axiom::DescentBijective, format!("generator {gi} is singular mod u")));
        }
        for (i, x) in m.m1_gens.iter().enumerate() {
            let gx = apply_semilinear(tower, &r, g, mat, x);
            match m.phi1_apply(&fil, &gx) {
                None => out.push(violation(
                    Axiom::DescentPreservesFiltration,
                    format!("generator {gi} moves M_1 generator {i} out of M_1"),
                )),
                Some(lhs) => {
                    let rhs = apply_semilinear(tower, &r, g, mat, &m.phi1[i]);
                    if lhs != rhs {
                        out.push(violation(
                            Axiom::DescentCommutesWithPhi1,
                            format!("generator {gi} and phi_1 disagree on M_1 generator {i}"),
                        ));
                    }
                }
            }
        }
    }
    for rel in tower.relations() {
        let apply_word = |word: &[usize], v: &Vector| {
            word.iter()
                .rev()
                .fold(v.clone(), |acc, &i| apply_semilinear(tower, &r, gens[i], &dd.mats[i], &acc))
        };
        if (0..n).any(|j| {
            let e = basis_vec(&r, n, j);
            apply_word(&rel.lhs, &e) != apply_word(&rel.rhs, &e)
        }) {
            out.push(violation(Axiom::DescentComposition, format!("relation {} fails", rel.name)));
        }
    }
    out
}

/// Mod-u data of a Breuil module. Row j of each matrix holds the coordinates of the operator
/// applied to basis vector j.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DieudonneData {
    pub dim: usize,
    pub f_matrix: Vec<Vec<Fq>>,
    pub v_matrix: Vec<Vec<Fq>>,
    /// [g] mod u for the inertia generator g with g(pi)/pi = zeta_e.
    pub inertia: Vec<Vec<Fq>>,
}

/// F = (1/c_pi) phi_1(u^{e_K} -) and V = (phi_1 mod u)^{-1} followed by M_1/uM_1 -> M/uM.
pub fn dieudonne_reduce(m: &BreuilModule, dd: Option<&DescentData>) -> Result<DieudonneData> {
    let tower = &m.tower;
    let k = tower.field();
    let r = m.ring();
    let n = m.rank;
    if m.m1_gens.len() != n {
        return domain("reduction needs exactly rank-many M_1 generators");
    }
    let fil = m.filtration();
    let cpi_inv = k.inv(tower.c_pi())?;
    let mut f_matrix = Vec::with_capacity(n);
    for j in 0..n {
        let y = vscale(&r, &r.monomial(Fq::ONE, tower.e_k as usize), &basis_vec(&r, n, j));
        let img = m
            .phi1_apply(&fil, &y)
            .ok_or_else(|| Error::Domain("u^e_K M is not inside M_1".into()))?;
        f_matrix.push(reduce_mod_u(&img).into_iter().map(|c| k.mul(c, cpi_inv)).collect());
    }
    let p: Vec<Vec<Fq>> = m.phi1.iter().map(reduce_mod_u).collect();
    let gens_mod_u: Vec<Vec<Fq>> = m.m1_gens.iter().map(reduce_mod_u).collect();
    let mut v_matrix = Vec::with_capacity(n);
    for j in 0..n {
        let mut target = vec![Fq::ZERO; n];
        target[j] = Fq::ONE;
        let beta = k_solve(k, &p, &target).ok_or_else(|| Error::Domain("phi_1 mod u is not bijective".into()))?;
        let alpha: Vec<Fq> = beta.iter().map(|&b| k.frobenius_pow(b, -1)).collect();
        let mut row = vec![Fq::ZERO; n];
        for (a, g) in alpha.iter().zip(&gens_mod_u) {
            for (slot, &c) in row.iter_mut().zip(g) {
                *slot = k.add(*slot, k.mul(*a, c));
            }
        }
        v_matrix.push(row);
    }
    let inertia = match (dd, tower.generators().iter().position(|&g| g == tower.inertia_gen() && tower.e > 1)) {
        (Some(dd), Some(gi)) => dd.mats[gi].iter().map(reduce_mod_u).collect(),
        _ => (0..n)
            .map(|j| (0..n).map(|i| if i == j { Fq::ONE } else { Fq::ZERO }).collect())
            .collect(),
    };
    Ok(DieudonneData {
        dim: n,
        f_matrix,
        v_matrix,
        inertia,
    })
}

/// True iff the R-linear map with columns `x` is a morphism of Breuil modules with descent.
pub fn is_morphism(src: &WithDescent, dst: &WithDescent, x: &[Vector]) -> bool {
    morphism_defects(src, dst, x).is_empty()
}

pub fn morphism_defects(src: &WithDescent, dst: &WithDescent, x: &[Vector]) -> Vec<String> {
    let tower = &src.module.tower;
    let r = src.module.ring();
    let (ns, nd) = (src.module.rank, dst.module.rank);
    let mut out = Vec::new();
    if x.len() != ns || x.iter().any(|c| c.len() != nd) {
        out.push(format!("expected {ns} columns of length {nd}"));
        return out;
    }
    let fil = dst.module.filtration();
    for (i, g) in src.module.m1_gens.iter().enumerate() {
        let img = combine(&r, nd, g, x);
        match dst.module.phi1_apply(&fil, &img) {
            None => out.push(format!("M_1 generator {i} does not land in M_1")),
            Some(lhs) => {
                if lhs != combine(&r, nd, &src.module.phi1[i], x) {
                    out.push(format!("phi_1 not respected on M_1 generator {i}"));
                }
            }
        }
    }
    for (gi, &g) in tower.generators().iter().enumerate() {
        for j in 0..ns {
            let lhs = apply_semilinear(tower, &r, g, &dst.descent.mats[gi], &x[j]);
            let rhs = combine(&r, nd, &src.descent.mats[gi][j], x);
            if lhs != rhs {
                out.push(format!("descent generator {gi} not respected on basis vector {j}"));
            }
        }
    }
    out
}

/// Whether 0 -> sub -> mid -> quot -> 0 is a short exact sequence of Breuil modules.
pub fn check_exact(sub: &WithDescent, mid: &WithDescent, quot: &WithDescent, inc: &[Vector], proj: &[Vector]) -> Result<bool> {
    for (a, b, map, name) in [(sub, mid, inc, "inclusion"), (mid, quot, proj, "projection")] {
        let defects = morphism_defects(a, b, map);
        if !defects.is_empty() {
            return domain(format!("{name} is not a morphism: {}", defects.join("; ")));
        }
    }
    let r = mid.module.ring();
    let k = mid.module.tower.field();
    let (a, n, b) = (sub.module.rank, mid.module.rank, quot.module.rank);
    if a + b != n {
        return Ok(false);
    }
    for col in inc {
        if combine(&r, b, col, proj).iter().any(|c| !c.is_zero()) {
            return Ok(false);
        }
    }
    let inc_mod_u: Vec<Vec<Fq>> = inc.iter().map(reduce_mod_u).collect();
    let proj_mod_u: Vec<Vec<Fq>> = proj.iter().map(reduce_mod_u).collect();
    Ok(k_rank(k, &inc_mod_u) == a && k_rank(k, &proj_mod_u) == b)
}
