//! Cocycles of Gal(K/L) with values in k[u]/u^n, additively with a twist or multiplicatively.
//!
//! A cocycle is stored by its values on `TameTower::generators()`. Construction extends it to
//! the whole group and rejects data that does not extend.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::error::{check_guard, domain, Error, Result, DEFAULT_GUARD};
use crate::exactlin::FlMatrix;
use crate::gfq::Fq;
use crate::upoly::{GroupElem, TameTower, TruncPoly, TruncRing};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum CocycleKind {
    /// g . f = (g(pi)/pi)^twist * g(f)
    Additive { twist: i64 },
    /// g . f = g(f) on units
    Multiplicative,
}

#[derive(Clone, Debug)]
pub struct Cocycle {
    pub kind: CocycleKind,
    pub len: usize,
    pub values: Vec<TruncPoly>,
}

struct Ctx<'a> {
    tower: &'a TameTower,
    ring: TruncRing,
    kind: CocycleKind,
}

impl Ctx<'_> {
    fn neutral(&self) -> TruncPoly {
        match self.kind {
            CocycleKind::Additive { .. } => self.ring.zero(),
            CocycleKind::Multiplicative => self.ring.one(),
        }
    }

    fn act(&self, g: GroupElem, f: &TruncPoly) -> TruncPoly {
        let a = self.ring.act(self.tower, g, f);
        match self.kind {
            CocycleKind::Additive { twist } => self.ring.scale(self.tower.field().upow(self.tower.zeta_of(g), twist), &a),
            CocycleKind::Multiplicative => a,
        }
    }

    fn op(&self, a: &TruncPoly, b: &TruncPoly) -> TruncPoly {
        match self.kind {
            CocycleKind::Additive { .. } => self.ring.add(a, b),
            CocycleKind::Multiplicative => self.ring.mul(a, b),
        }
    }

    /// c(s_1 ... s_k) from generator values, via c(s w) = c(s) * s.c(w).
    fn eval_word(&self, gens: &[GroupElem], values: &[TruncPoly], word: &[usize]) -> TruncPoly {
        word.iter()
            .rev()
            .fold(self.neutral(), |acc, &i| self.op(&values[i], &self.act(gens[i], &acc)))
    }

    fn relations_hold(&self, values: &[TruncPoly]) -> bool {
        let gens = self.tower.generators();
        self.tower
            .relations()
            .iter()
            .all(|r| self.eval_word(&gens, values, &r.lhs) == self.eval_word(&gens, values, &r.rhs))
    }

    fn coboundary(&self, b: &TruncPoly) -> Result<Vec<TruncPoly>> {
        self.tower
            .generators()
            .into_iter()
            .map(|g| {
                let gb = self.act(g, b);
                Ok(match self.kind {
                    CocycleKind::Additive { .. } => self.ring.sub(&gb, b),
                    CocycleKind::Multiplicative => self.ring.mul(&gb, &self.ring.inverse(b)?),
                })
            })
            .collect()
    }
}

fn ctx(tower: &TameTower, kind: CocycleKind, len: usize) -> Ctx<'_> {
    Ctx {
        tower,
        ring: tower.ring_with_len(len),
        kind,
    }
}

impl Cocycle {
    /// Validates by extending to every group element and checking c(gh) = c(g) * g.c(h).
    pub fn new(tower: &TameTower, kind: CocycleKind, len: usize, values: Vec<TruncPoly>) -> Result<Self> {
        let gens = tower.generators();
        if values.len() != gens.len() {
            return Err(Error::Dimension {
                expected: gens.len(),
                got: values.len(),
            });
        }
        let cx = ctx(tower, kind, len);
        let values: Vec<TruncPoly> = values.iter().map(|v| cx.ring.recast(v)).collect();
        if kind == CocycleKind::Multiplicative && values.iter().any(|v| !cx.ring.is_unit(v)) {
            return domain("multiplicative cocycle values must be units");
        }
        let full = extend(&cx, &gens, &values)?;
        for (&g, cg) in &full {
            for (&h, ch) in &full {
                if full[&tower.compose(g, h)] != cx.op(cg, &cx.act(g, ch)) {
                    return domain("values do not satisfy the cocycle identity");
                }
            }
        }
        Ok(Cocycle { kind, len, values })
    }

    /// The value on every group element.
    pub fn extend(&self, tower: &TameTower) -> Result<HashMap<GroupElem, TruncPoly>> {
        extend(&ctx(tower, self.kind, self.len), &tower.generators(), &self.values)
    }
}

fn extend(cx: &Ctx<'_>, gens: &[GroupElem], values: &[TruncPoly]) -> Result<HashMap<GroupElem, TruncPoly>> {
    let tower = cx.tower;
    let mut full = HashMap::new();
    full.insert(tower.identity(), cx.neutral());
    let mut frontier = vec![tower.identity()];
    while let Some(x) = frontier.pop() {
        let cxv = full[&x].clone();
        for (i, &s) in gens.iter().enumerate() {
            let y = tower.compose(s, x);
            let val = cx.op(&values[i], &cx.act(s, &cxv));
            match full.get(&y) {
                Some(prev) if *prev != val => return domain("generator values do not extend to the group"),
                Some(_) => {}
                None => {
                    full.insert(y, val);
                    frontier.push(y);
                }
            }
        }
    }
    Ok(full)
}

fn solve_additive(tower: &TameTower, twist: i64, len: usize, values: &[TruncPoly]) -> Option<TruncPoly> {
    let cx = ctx(tower, CocycleKind::Additive { twist }, len);
    let r = &cx.ring;
    let f = tower.field().degree() as usize;
    let l = tower.l;
    let dim = len * f;
    let cols: Vec<Vec<u32>> = (0..dim)
        .map(|idx| {
            let b = r.monomial(Fq(l.pow((idx % f) as u32)), idx / f);
            cx.coboundary(&b).expect("additive").iter().flat_map(|v| r.flatten(v)).collect()
        })
        .collect();
    let rhs: Vec<u32> = values.iter().flat_map(|v| r.flatten(v)).collect();
    let m = FlMatrix::from_cols(l, rhs.len(), &cols).expect("shape");
    let x = m.solve(&rhs).expect("shape")?;
    Some(r.unflatten(&x))
}

/// b with c(g) = g.b - b on every generator.
pub fn additive_coboundary_solve(tower: &TameTower, c: &Cocycle) -> Result<TruncPoly> {
    let CocycleKind::Additive { twist } = c.kind else {
        return domain("expected an additive cocycle");
    };
    solve_additive(tower, twist, c.len, &c.values).ok_or_else(|| Error::Invariant("additive cocycle is not a coboundary".into()))
}

/// The class i mod e and a unit b with c(g) g(b)/b = (g(pi)/pi)^i on every generator.
pub fn mult_cocycle_class(tower: &TameTower, c: &Cocycle) -> Result<(u32, TruncPoly)> {
    if c.kind != CocycleKind::Multiplicative {
        return domain("expected a multiplicative cocycle");
    }
    let k = tower.field();
    let gens = tower.generators();
    let cx = ctx(tower, CocycleKind::Multiplicative, c.len);
    let r = &cx.ring;
    let zeta_pow = |g: GroupElem, i: i64| k.upow(tower.zeta_of(g), i);

    let mut found = None;
    'outer: for i in 0..tower.e {
        for b0 in k.units() {
            let ok = gens
                .iter()
                .zip(&c.values)
                .all(|(&g, v)| k.mul(v.coeff(0), k.mul(tower.act_scalar(g, b0), k.inv(b0).expect("unit"))) == zeta_pow(g, i as i64));
            if ok {
                found = Some((i, b0));
                break 'outer;
            }
        }
    }
    let (i, b0) = found.ok_or_else(|| Error::Invariant("no constant term class".into()))?;
    let mut b = r.constant(b0);
    let twisted = |b: &TruncPoly| -> Vec<TruncPoly> {
        let cob = cx.coboundary(b).expect("unit");
        gens.iter()
            .zip(&c.values)
            .zip(cob)
            .map(|((&g, v), cb)| r.scale(zeta_pow(g, -(i as i64)), &r.mul(v, &cb)))
            .collect()
    };
    for m in 1..c.len {
        let cur = twisted(&b);
        let layer = tower.ring_with_len(1);
        let a: Vec<TruncPoly> = cur.iter().map(|v| layer.constant(v.coeff(m))).collect();
        let beta =
            solve_additive(tower, m as i64, 1, &a).ok_or_else(|| Error::Invariant(format!("degree {m} layer is not a coboundary")))?;
        let corr = r.sub(&r.one(), &r.monomial(beta.coeff(0), m));
        b = r.mul(&b, &corr);
    }
    if twisted(&b).iter().any(|v| *v != r.one()) {
        return Err(Error::Invariant("lifting did not trivialize the cocycle".into()));
    }
    Ok((i, b))
}

/// g -> (g(pi)/pi)^i as a multiplicative cocycle.
pub fn standard_class(tower: &TameTower, len: usize, i: i64) -> Cocycle {
    let r = tower.ring_with_len(len);
    let values = tower
        .generators()
        .into_iter()
        .map(|g| r.constant(tower.field().upow(tower.zeta_of(g), i)))
        .collect();
    Cocycle {
        kind: CocycleKind::Multiplicative,
        len,
        values,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct H1Count {
    pub cocycles: u128,
    pub coboundaries: u128,
    pub h1: u128,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct H1Sizes {
    pub n: usize,
    pub additive: H1Count,
    pub multiplicative: H1Count,
}

fn all_polys(r: &TruncRing, units_only: bool) -> Vec<TruncPoly> {
    let q = r.k.size() as u64;
    let total = q.pow(r.len as u32);
    (0..total)
        .filter_map(|mut idx| {
            let coeffs: Vec<Fq> = (0..r.len)
                .map(|_| {
                    let d = (idx % q) as u32;
                    idx /= q;
                    Fq(d)
                })
                .collect();
            (!units_only || !coeffs[0].is_zero()).then(|| TruncPoly(coeffs))
        })
        .collect()
}

fn count_h1(cx: &Ctx<'_>, pool: &[TruncPoly]) -> Result<H1Count> {
    let gens = cx.tower.generators();
    let rels = cx.tower.relations();
    // candidates per generator, prefiltered by the relations that only involve that generator
    let per_gen: Vec<Vec<&TruncPoly>> = (0..gens.len())
        .map(|gi| {
            pool.iter()
                .filter(|x| {
                    rels.iter().filter(|r| r.lhs.iter().chain(&r.rhs).all(|&i| i == gi)).all(|r| {
                        let mut vals = vec![cx.neutral(); gens.len()];
                        vals[gi] = (*x).clone();
                        cx.eval_word(&gens, &vals, &r.lhs) == cx.eval_word(&gens, &vals, &r.rhs)
                    })
                })
                .collect()
        })
        .collect();
    let mut cocycles: u128 = 0;
    let mut idx = vec![0usize; gens.len()];
    if per_gen.iter().all(|c| !c.is_empty()) {
        loop {
            let vals: Vec<TruncPoly> = idx.iter().enumerate().map(|(g, &i)| per_gen[g][i].clone()).collect();
            if cx.relations_hold(&vals) {
                cocycles += 1;
            }
            let mut pos = 0;
            loop {
                if pos == idx.len() {
                    break;
                }
                idx[pos] += 1;
                if idx[pos] < per_gen[pos].len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == idx.len() {
                break;
            }
        }
    }
    let mut bset = HashSet::new();
    for b in pool {
        bset.insert(cx.coboundary(b)?);
    }
    let coboundaries = bset.len() as u128;
    if cocycles % coboundaries != 0 {
        return Err(Error::Invariant("coboundaries do not divide cocycles".into()));
    }
    Ok(H1Count {
        cocycles,
        coboundaries,
        h1: cocycles / coboundaries,
    })
}

fn search_space(tower: &TameTower, n: usize) -> u128 {
    (tower.field().size() as u128).pow((n * tower.generators().len()) as u32)
}

/// Additive #H^1 with the given twist, by enumerating cocycles on generators.
pub fn h1_additive_bruteforce(tower: &TameTower, n: usize, twist: i64) -> Result<H1Count> {
    check_guard("cocycle enumeration", search_space(tower, n), DEFAULT_GUARD)?;
    let cx = ctx(tower, CocycleKind::Additive { twist }, n);
    count_h1(&cx, &all_polys(&cx.ring, false))
}

/// Additive (untwisted) and multiplicative #H^1 for k[u]/u^n, by exhaustive enumeration.
pub fn h1_sizes_bruteforce(tower: &TameTower, n: usize) -> Result<H1Sizes> {
    if n == 0 {
        return domain("n must be positive");
    }
    check_guard("cocycle enumeration", search_space(tower, n), DEFAULT_GUARD)?;
    let add = ctx(tower, CocycleKind::Additive { twist: 0 }, n);
    let all = all_polys(&add.ring, false);
    let additive = count_h1(&add, &all)?;
    let mul = ctx(tower, CocycleKind::Multiplicative, n);
    let units: Vec<TruncPoly> = all.into_iter().filter(|p| !p.coeff(0).is_zero()).collect();
    let multiplicative = count_h1(&mul, &units)?;
    Ok(H1Sizes {
        n,
        additive,
        multiplicative,
    })
}
