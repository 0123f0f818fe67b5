//! The finite field F_{l^f}.
//!
//! Elements are encoded as integers `sum c_i l^i` where `c_i` are the coefficients of the
//! residue polynomial modulo the defining polynomial. That integer is also the enumeration order:
//! "least element" anywhere in the crate means least code.

use std::fmt;

use crate::error::{domain, Error, Result};
use crate::exactlin::{Echelon, FlMatrix};

/// Largest field size for which log/exp tables are built.
const MAX_FIELD_SIZE: u64 = 1 << 20;
/// Below this size addition goes through a full table.
const ADD_TABLE_SIZE: u32 = 256;

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default, serde::Serialize, serde::Deserialize)]
pub struct Fq(pub u32);

impl Fq {
    pub const ZERO: Fq = Fq(0);
    pub const ONE: Fq = Fq(1);

    pub fn code(self) -> u32 {
        self.0
    }
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Fq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub struct Field {
    l: u32,
    degree: u32,
    q: u32,
    modulus: Vec<u32>,
    generator: Fq,
    exp: Vec<u32>,
    log: Vec<u32>,
    add: Option<Vec<u32>>,
    neg: Vec<u32>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}^{} mod {:?}", self.l, self.degree, self.modulus)
    }
}

fn is_prime(n: u32) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

// Dense polynomials over F_l, low degree first, no trailing zeros.
fn poly_trim(mut p: Vec<u32>) -> Vec<u32> {
    while p.last() == Some(&0) {
        p.pop();
    }
    p
}

fn poly_rem(a: &[u32], m: &[u32], l: u32) -> Vec<u32> {
    let mut r = poly_trim(a.to_vec());
    let dm = m.len() - 1;
    let lead_inv = crate::exactlin::inv_mod(m[dm], l);
    while r.len() > dm {
        let shift = r.len() - 1 - dm;
        let f = (*r.last().unwrap() as u64 * lead_inv as u64 % l as u64) as u32;
        for (i, &c) in m.iter().enumerate() {
            let idx = shift + i;
            r[idx] = ((r[idx] as u64 + (l - f) as u64 * c as u64) % l as u64) as u32;
        }
        r = poly_trim(r);
    }
    r
}

fn poly_mulmod(a: &[u32], b: &[u32], m: &[u32], l: u32) -> Vec<u32> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u32; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = ((out[i + j] as u64 + x as u64 * y as u64) % l as u64) as u32;
        }
    }
    poly_rem(&out, m, l)
}

fn digits_of(code: u32, l: u32, f: u32) -> Vec<u32> {
    let mut c = code;
    (0..f)
        .map(|_| {
            let d = c % l;
            c /= l;
            d
        })
        .collect()
}

fn code_of(digits: &[u32], l: u32) -> u32 {
    digits.iter().rev().fold(0, |acc, &d| acc * l + d)
}

fn monic_from_code(code: u32, l: u32, f: u32) -> Vec<u32> {
    let mut p = digits_of(code, l, f);
    p.push(1);
    p
}

fn is_irreducible(p: &[u32], l: u32) -> bool {
    let f = (p.len() - 1) as u32;
    if f <= 1 {
        return true;
    }
    // trial division by every monic polynomial of degree 1..=f/2
    for d in 1..=f / 2 {
        for code in 0..l.pow(d) {
            let div = monic_from_code(code, l, d);
            if poly_rem(p, &div, l).is_empty() {
                return false;
            }
        }
    }
    true
}

impl Field {
    /// Builds F_{l^f} with the least monic irreducible modulus and least primitive generator.
    pub fn new(l: u32, f: u32) -> Result<Field> {
        if !is_prime(l) {
            return domain(format!("{l} is not prime"));
        }
        if f == 0 {
            return domain("field degree must be positive");
        }
        let q64 = (l as u64).checked_pow(f).unwrap_or(u64::MAX);
        if q64 > MAX_FIELD_SIZE {
            return Err(Error::Guard {
                what: "field size",
                needed: q64 as u128,
                limit: MAX_FIELD_SIZE as u128,
            });
        }
        let q = q64 as u32;
        let modulus = (0..l.pow(f))
            .map(|c| monic_from_code(c, l, f))
            .find(|m| is_irreducible(m, l))
            .expect("an irreducible polynomial of every degree exists");

        let to_poly = |c: u32| poly_trim(digits_of(c, l, f));
        let to_code = |p: &[u32]| {
            let mut d = p.to_vec();
            d.resize(f as usize, 0);
            code_of(&d, l)
        };
        let order = |c: u32| -> u32 {
            let base = to_poly(c);
            let mut acc = base.clone();
            let mut n = 1;
            while acc != [1] {
                acc = poly_mulmod(&acc, &base, &modulus, l);
                n += 1;
            }
            n
        };
        let generator = if q == 2 {
            1
        } else {
            (1..q).find(|&c| order(c) == q - 1).expect("multiplicative group is cyclic")
        };

        let mut exp = Vec::with_capacity(q as usize - 1);
        let mut log = vec![u32::MAX; q as usize];
        let g = to_poly(generator);
        let mut acc = vec![1u32];
        for i in 0..q - 1 {
            let c = to_code(&acc);
            exp.push(c);
            log[c as usize] = i;
            acc = poly_mulmod(&acc, &g, &modulus, l);
        }

        let neg: Vec<u32> = (0..q)
            .map(|c| code_of(&digits_of(c, l, f).iter().map(|&d| (l - d) % l).collect::<Vec<_>>(), l))
            .collect();
        let mut field = Field {
            l,
            degree: f,
            q,
            modulus,
            generator: Fq(generator),
            exp,
            log,
            add: None,
            neg,
        };
        if q <= ADD_TABLE_SIZE {
            let mut table = vec![0u32; (q * q) as usize];
            for a in 0..q {
                for b in 0..q {
                    table[(a * q + b) as usize] = field.add_slow(a, b);
                }
            }
            field.add = Some(table);
        }
        Ok(field)
    }

    fn add_slow(&self, a: u32, b: u32) -> u32 {
        let (l, mut a, mut b) = (self.l, a, b);
        let mut out = 0;
        let mut place = 1;
        for _ in 0..self.degree {
            out += ((a % l + b % l) % l) * place;
            a /= l;
            b /= l;
            place *= l;
        }
        out
    }

    pub fn characteristic(&self) -> u32 {
        self.l
    }
    pub fn degree(&self) -> u32 {
        self.degree
    }
    pub fn size(&self) -> u32 {
        self.q
    }
    /// Coefficients of the defining polynomial, constant term first, leading 1 included.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }
    /// The fixed generator of the multiplicative group.
    pub fn generator(&self) -> Fq {
        self.generator
    }

    pub fn elements(&self) -> impl Iterator<Item = Fq> {
        (0..self.q).map(Fq)
    }
    pub fn units(&self) -> impl Iterator<Item = Fq> {
        (1..self.q).map(Fq)
    }

    /// Image of an integer in the prime subfield.
    pub fn from_int(&self, n: i64) -> Fq {
        Fq(n.rem_euclid(self.l as i64) as u32)
    }

    /// The prime-field value of `x`, if `x` lies in F_l.
    pub fn to_prime(&self, x: Fq) -> Option<u32> {
        (x.0 < self.l).then_some(x.0)
    }

    pub fn digits(&self, x: Fq) -> Vec<u32> {
        digits_of(x.0, self.l, self.degree)
    }
    pub fn from_digits(&self, d: &[u32]) -> Fq {
        Fq(code_of(d, self.l))
    }

    #[inline]
    pub fn add(&self, a: Fq, b: Fq) -> Fq {
        match &self.add {
            Some(t) => Fq(t[(a.0 * self.q + b.0) as usize]),
            None => Fq(self.add_slow(a.0, b.0)),
        }
    }
    #[inline]
    pub fn neg(&self, a: Fq) -> Fq {
        Fq(self.neg[a.0 as usize])
    }
    #[inline]
    pub fn sub(&self, a: Fq, b: Fq) -> Fq {
        self.add(a, self.neg(b))
    }
    #[inline]
    pub fn mul(&self, a: Fq, b: Fq) -> Fq {
        if a.0 == 0 || b.0 == 0 {
            return Fq::ZERO;
        }
        let s = self.log[a.0 as usize] as u64 + self.log[b.0 as usize] as u64;
        Fq(self.exp[(s % (self.q as u64 - 1)) as usize])
    }

    pub fn inv(&self, a: Fq) -> Result<Fq> {
        if a.is_zero() {
            return domain("zero is not invertible");
        }
        let n = self.q - 1;
        Ok(Fq(self.exp[((n - self.log[a.0 as usize]) % n) as usize]))
    }

    pub fn div(&self, a: Fq, b: Fq) -> Result<Fq> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// `a^n` for any integer `n`; negative exponents require a unit.
    pub fn pow(&self, a: Fq, n: i64) -> Result<Fq> {
        if a.is_zero() {
            return match n {
                0 => Ok(Fq::ONE),
                n if n > 0 => Ok(Fq::ZERO),
                _ => domain("zero to a negative power"),
            };
        }
        let m = self.q as i64 - 1;
        let e = (self.log[a.0 as usize] as i64 * n.rem_euclid(m)).rem_euclid(m);
        Ok(Fq(self.exp[e as usize]))
    }

    /// Powers of a unit; panics on zero with a negative exponent.
    pub fn upow(&self, a: Fq, n: i64) -> Fq {
        self.pow(a, n).expect("unit power")
    }

    /// Discrete logarithm to the base of the fixed generator.
    pub fn log(&self, a: Fq) -> Result<u32> {
        if a.is_zero() {
            return domain("log of zero");
        }
        Ok(self.log[a.0 as usize])
    }

    pub fn exp(&self, n: i64) -> Fq {
        Fq(self.exp[n.rem_euclid(self.q as i64 - 1) as usize])
    }

    /// x -> x^l.
    pub fn frobenius(&self, x: Fq) -> Fq {
        self.frobenius_pow(x, 1)
    }

    /// x -> x^(l^t) for any integer t.
    pub fn frobenius_pow(&self, x: Fq, t: i64) -> Fq {
        if x.is_zero() {
            return x;
        }
        let t = t.rem_euclid(self.degree as i64) as u32;
        let m = self.q as u64 - 1;
        let mut e = self.log[x.0 as usize] as u64;
        for _ in 0..t {
            e = e * self.l as u64 % m;
        }
        Fq(self.exp[e as usize])
    }

    /// Membership in the subfield of size l^d (d must divide the degree).
    pub fn in_subfield(&self, x: Fq, d: u32) -> bool {
        self.frobenius_pow(x, d as i64) == x
    }

    /// True iff x^((q-1)/gcd(d, q-1)) = 1.
    pub fn is_power_residue(&self, x: Fq, d: u64) -> Result<bool> {
        if x.is_zero() {
            return domain("power residue test of zero");
        }
        let g = gcd(d, self.q as u64 - 1);
        Ok(self.log[x.0 as usize] as u64 % g == 0)
    }

    /// The matrix over F_l of x -> x - c x^l in the digit basis.
    fn artin_schreier_matrix(&self, c: Fq) -> FlMatrix {
        let f = self.degree as usize;
        let cols: Vec<Vec<u32>> = (0..f)
            .map(|t| {
                let b = Fq(self.l.pow(t as u32));
                self.digits(self.sub(b, self.mul(c, self.frobenius(b))))
            })
            .collect();
        FlMatrix::from_cols(self.l, f, &cols).expect("square")
    }

    /// The least x (in code order) with x - c x^l = h, or `None` if h is not in the image.
    pub fn solve_x_minus_cxl(&self, c: Fq, h: Fq) -> Option<Fq> {
        let m = self.artin_schreier_matrix(c);
        let x0 = m.solve(&self.digits(h)).expect("shape")?;
        // kernel in echelon form keyed on the most significant digit, then clear those digits
        let f = self.degree as usize;
        let flip = |v: &[u32]| v.iter().rev().copied().collect::<Vec<u32>>();
        let mut ech = Echelon::new(self.l, f);
        for k in m.kernel_basis() {
            ech.insert(flip(&k));
        }
        let reduced = ech.reduce(flip(&x0));
        Some(self.from_digits(&flip(&reduced)))
    }

    /// Whether x -> x - c x^l is onto.
    pub fn artin_schreier_surjective(&self, c: Fq) -> bool {
        self.artin_schreier_matrix(c).rank() == self.degree as usize
    }
}
