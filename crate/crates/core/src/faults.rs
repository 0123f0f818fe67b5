//! Seeded fault injection: perturb one coefficient of phi_1, of an M_1 generator or of a
//! descent matrix, then check that `validate` flags it.
//!
//! A perturbation can leave the module valid (for instance a change in degree >= e_K of an M_1
//! generator). Those are benign, decided by the independent `flat_violations` route, and are not
//! counted as faults.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::breuil::flat::flat_violations;
use crate::breuil::{validate, WithDescent};
use crate::error::{domain, Result};
use crate::gfq::Fq;
use crate::rank1::classify;
use crate::rank2::make_ext_eprime;
use crate::upoly::TameTower;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum FaultTarget {
    Phi1,
    M1,
    Descent,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Fault {
    pub module: String,
    pub target: FaultTarget,
    /// Generator (M_1 generator, or group generator for descent).
    pub index: usize,
    pub column: usize,
    pub slot: usize,
    pub degree: usize,
    pub delta: u32,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct FaultReport {
    pub seed: u64,
    pub injections: usize,
    pub genuine: usize,
    pub caught: usize,
    pub benign: usize,
    /// Caught faults re-checked by the flat route.
    pub cross_checked: usize,
    pub cross_check_disagreements: usize,
    pub missed: Vec<Fault>,
}

impl FaultReport {
    pub fn all_caught(&self) -> bool {
        self.missed.is_empty() && self.cross_check_disagreements == 0 && self.caught == self.genuine
    }
}

/// Every rank one class and every E' normal form M(r,a,c;s,b,d;n,1) with a = 1, as the fault corpus.
pub fn fault_corpus(tower: &Arc<TameTower>) -> Result<Vec<(String, WithDescent)>> {
    if !tower.is_eprime() {
        return domain("the fault corpus is built over the E' preset");
    }
    let l = tower.l;
    let mut out: Vec<(String, WithDescent)> = classify(tower)
        .iter()
        .map(|m| {
            let p = m.params();
            let w = m.to_breuil();
            (format!("M({},{},{})", p.r, tower.field().to_prime(m.a).unwrap_or(0), p.c), w)
        })
        .collect();
    for rp in 0..=l + 1 {
        for sp in 0..=l + 1 {
            for c in 0..l - 1 {
                for d in 0..l - 1 {
                    for b in 1..l {
                        if (1, c) == (b, d) {
                            continue;
                        }
                        if let Some(m) = make_ext_eprime(tower, rp * (l - 1), 1, c as i64, sp * (l - 1), b as i64, d as i64)? {
                            out.push((m.label().expect("normal form").to_string(), m.to_breuil()));
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn perturb(w: &WithDescent, rng: &mut ChaCha8Rng, name: &str) -> (WithDescent, Fault) {
    let k = w.module.tower.field();
    let len = w.module.ring().len;
    let n = w.module.rank;
    let mut out = w.clone();
    let target = [FaultTarget::Phi1, FaultTarget::M1, FaultTarget::Descent][rng.gen_range(0..3)];
    let delta = Fq(rng.gen_range(1..k.size()));
    let (index, column, slot, degree) = match target {
        FaultTarget::Phi1 | FaultTarget::M1 => (
            rng.gen_range(0..w.module.m1_gens.len()),
            0,
            rng.gen_range(0..n),
            rng.gen_range(0..len),
        ),
        FaultTarget::Descent => (
            rng.gen_range(0..w.descent.mats.len()),
            rng.gen_range(0..n),
            rng.gen_range(0..n),
            rng.gen_range(0..len),
        ),
    };
    let coeff = match target {
        FaultTarget::Phi1 => &mut out.module.phi1[index][slot].0[degree],
        FaultTarget::M1 => &mut out.module.m1_gens[index][slot].0[degree],
        FaultTarget::Descent => &mut out.descent.mats[index][column][slot].0[degree],
    };
    *coeff = k.add(*coeff, delta);
    let fault = Fault {
        module: name.to_string(),
        target,
        index,
        column,
        slot,
        degree,
        delta: delta.0,
    };
    (out, fault)
}

/// Injects until `genuine` invalid modules have been produced. Every `cross_check_every`-th
/// caught fault is also confirmed by the flat route.
pub fn run_faults(tower: &Arc<TameTower>, seed: u64, genuine: usize, cross_check_every: usize) -> Result<FaultReport> {
    let corpus = fault_corpus(tower)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = FaultReport {
        seed,
        ..Default::default()
    };
    while rep.genuine < genuine {
        let (name, w) = &corpus[rng.gen_range(0..corpus.len())];
        let (bad, fault) = perturb(w, &mut rng, name);
        rep.injections += 1;
        if !validate(&bad.module, Some(&bad.descent)).is_empty() {
            rep.genuine += 1;
            rep.caught += 1;
            if cross_check_every > 0 && rep.caught % cross_check_every == 0 {
                rep.cross_checked += 1;
                if flat_violations(&bad.module, Some(&bad.descent)).is_empty() {
                    rep.cross_check_disagreements += 1;
                }
            }
        } else if flat_violations(&bad.module, Some(&bad.descent)).is_empty() {
            rep.benign += 1;
        } else {
            rep.genuine += 1;
            rep.missed.push(fault);
        }
    }
    Ok(rep)
}
