//! Submodules of (k[u]/u^N)^n given by generators.
//!
//! The echelon pivots on the lowest u-valuation in each column (ties: lowest row). After a pivot
//! of valuation v is placed, u^{N-v} times the pivot row is fed back as a new row, so at every
//! column the remaining rows generate exactly the elements that vanish on earlier columns.

use crate::upoly::{TruncPoly, TruncRing};

use super::Vector;

#[derive(Clone, Debug)]
struct Row {
    vec: Vector,
    coeffs: Vec<TruncPoly>,
}

#[derive(Clone, Debug)]
struct Pivot {
    col: usize,
    val: usize,
    row: Row,
}

#[derive(Clone, Debug)]
pub struct Submodule {
    ring: TruncRing,
    rank: usize,
    ngens: usize,
    pivots: Vec<Pivot>,
    syzygies: Vec<Vec<TruncPoly>>,
}

fn axpy(r: &TruncRing, dst: &mut Row, q: &TruncPoly, src: &Row) {
    // dst -= q * src
    for (d, s) in dst.vec.iter_mut().zip(&src.vec) {
        *d = r.sub(d, &r.mul(q, s));
    }
    for (d, s) in dst.coeffs.iter_mut().zip(&src.coeffs) {
        *d = r.sub(d, &r.mul(q, s));
    }
}

fn scale(r: &TruncRing, row: &Row, q: &TruncPoly) -> Row {
    Row {
        vec: row.vec.iter().map(|x| r.mul(q, x)).collect(),
        coeffs: row.coeffs.iter().map(|x| r.mul(q, x)).collect(),
    }
}

impl Submodule {
    pub fn new(ring: &TruncRing, rank: usize, gens: &[Vector]) -> Self {
        let r = ring;
        let m = gens.len();
        let mut rows: Vec<Row> = gens
            .iter()
            .enumerate()
            .map(|(i, g)| Row {
                vec: g.clone(),
                coeffs: (0..m).map(|j| if i == j { r.one() } else { r.zero() }).collect(),
            })
            .collect();
        let mut pivots = Vec::new();
        for col in 0..rank {
            let best = rows
                .iter()
                .enumerate()
                .filter_map(|(i, row)| row.vec[col].valuation().map(|v| (v, i)))
                .min();
            let Some((val, idx)) = best else { continue };
            let mut piv = rows.remove(idx);
            let unit = r.shift_down(&piv.vec[col], val);
            let inv = r.inverse(&unit).expect("shifted entry has unit constant term");
            piv = scale(r, &piv, &inv);
            for row in rows.iter_mut() {
                if !row.vec[col].is_zero() {
                    let q = r.shift_down(&row.vec[col], val);
                    axpy(r, row, &q, &piv);
                }
            }
            if val > 0 {
                let aug = scale(r, &piv, &r.monomial(crate::gfq::Fq::ONE, r.len - val));
                rows.push(aug);
            }
            pivots.push(Pivot { col, val, row: piv });
        }
        let syzygies = rows
            .into_iter()
            .filter(|row| row.coeffs.iter().any(|c| !c.is_zero()))
            .map(|row| row.coeffs)
            .collect();
        Submodule {
            ring: ring.clone(),
            rank,
            ngens: m,
            pivots,
            syzygies,
        }
    }

    /// Coefficients h with x = sum h_i gen_i, or `None` if x is not in the submodule.
    pub fn express(&self, x: &Vector) -> Option<Vec<TruncPoly>> {
        let r = &self.ring;
        let mut cur = Row {
            vec: x.clone(),
            coeffs: vec![r.zero(); self.ngens],
        };
        for p in &self.pivots {
            let entry = &cur.vec[p.col];
            let Some(v) = entry.valuation() else { continue };
            if v < p.val {
                return None;
            }
            let q = r.shift_down(entry, p.val);
            axpy(r, &mut cur, &q, &p.row);
        }
        // cur.vec = x - sum coeffs * gens, with coeffs negated along the way
        cur.vec
            .iter()
            .all(|c| c.is_zero())
            .then(|| cur.coeffs.iter().map(|c| r.neg(c)).collect())
    }

    pub fn contains(&self, x: &Vector) -> bool {
        self.express(x).is_some()
    }

    /// Generators of the relation module among the original generators.
    pub fn syzygies(&self) -> &[Vec<TruncPoly>] {
        &self.syzygies
    }

    /// Pivot (column, valuation) pairs.
    pub fn profile(&self) -> Vec<(usize, usize)> {
        self.pivots.iter().map(|p| (p.col, p.val)).collect()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }
}
