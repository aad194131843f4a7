//! Exact field scalars: arbitrary-precision rationals or a prime field `F_p`.
//!
//! Every numeric value in this crate flows through [`Scalar`]. There is no
//! floating point anywhere; equality of computed invariants is always literal
//! equality of exact field elements.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;
use thiserror::Error;

/// Coefficient field selector, fixed at construction time of any algebra.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Field {
    /// The rational numbers (the default everywhere).
    Q,
    /// The prime field with `p` elements.
    Fp(u64),
}

impl Field {
    /// The characteristic of the field: 0 for the rationals, `p` for `F_p`.
    pub fn characteristic(self) -> u64 {
        match self {
            Field::Q => 0,
            Field::Fp(p) => p,
        }
    }

    /// The zero element.
    pub fn zero(self) -> Scalar {
        match self {
            Field::Q => Scalar::Q(BigRational::zero()),
            Field::Fp(p) => Scalar::Fp { p, value: 0 },
        }
    }

    /// The unit element.
    pub fn one(self) -> Scalar {
        self.from_i64(1)
    }

    /// The canonical image of a signed integer.
    pub fn from_i64(self, v: i64) -> Scalar {
        match self {
            Field::Q => Scalar::Q(BigRational::from_integer(BigInt::from(v))),
            Field::Fp(p) => {
                let value = v.rem_euclid(p as i64) as u64;
                Scalar::Fp { p, value }
            }
        }
    }

    /// `(-1)^k` as a field element.
    pub fn sign(self, k: i64) -> Scalar {
        if k.rem_euclid(2) == 0 {
            self.one()
        } else {
            self.from_i64(-1)
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Q => write!(f, "q"),
            Field::Fp(p) => write!(f, "fp:{p}"),
        }
    }
}

/// Error raised when parsing a field selector such as `q` or `fp:101`.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum FieldParseError {
    #[error("unknown field selector {0:?}; expected `q` or `fp:<prime>`")]
    Unknown(String),
    #[error("field modulus {0} is not prime")]
    NotPrime(u64),
    #[error("field modulus {0:?} is not a valid integer")]
    BadModulus(String),
}

impl std::str::FromStr for Field {
    type Err = FieldParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "q" || s == "Q" {
            return Ok(Field::Q);
        }
        if let Some(rest) = s.strip_prefix("fp:") {
            let p: u64 = rest
                .parse()
                .map_err(|_| FieldParseError::BadModulus(rest.to_string()))?;
            if !is_prime(p) {
                return Err(FieldParseError::NotPrime(p));
            }
            return Ok(Field::Fp(p));
        }
        Err(FieldParseError::Unknown(s.to_string()))
    }
}

/// Deterministic primality test, adequate for 64-bit moduli supplied on a CLI.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    // Deterministic Miller-Rabin for u64 with the standard 12-witness set.
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a % n, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// An exact element of the chosen coefficient field.
///
/// Mixing scalars from different fields is a programming error and panics:
/// every algebra fixes its field at construction and never crosses it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Scalar {
    Q(BigRational),
    Fp { p: u64, value: u64 },
}

impl Scalar {
    pub fn field(&self) -> Field {
        match self {
            Scalar::Q(_) => Field::Q,
            Scalar::Fp { p, .. } => Field::Fp(*p),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Q(r) => r.is_zero(),
            Scalar::Fp { value, .. } => *value == 0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Q(r) => r.is_one(),
            Scalar::Fp { value, .. } => *value == 1,
        }
    }

    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Q(r) => Scalar::Q(-r.clone()),
            Scalar::Fp { p, value } => Scalar::Fp {
                p: *p,
                value: if *value == 0 { 0 } else { p - value },
            },
        }
    }

    pub fn add(&self, other: &Scalar) -> Scalar {
        match (self, other) {
            (Scalar::Q(a), Scalar::Q(b)) => Scalar::Q(a + b),
            (Scalar::Fp { p, value: a }, Scalar::Fp { p: q, value: b }) => {
                assert_eq!(p, q, "scalar field mismatch");
                Scalar::Fp {
                    p: *p,
                    value: (a + b) % p,
                }
            }
            _ => panic!("scalar field mismatch"),
        }
    }

    pub fn sub(&self, other: &Scalar) -> Scalar {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Scalar) -> Scalar {
        match (self, other) {
            (Scalar::Q(a), Scalar::Q(b)) => Scalar::Q(a * b),
            (Scalar::Fp { p, value: a }, Scalar::Fp { p: q, value: b }) => {
                assert_eq!(p, q, "scalar field mismatch");
                Scalar::Fp {
                    p: *p,
                    value: mul_mod(*a, *b, *p),
                }
            }
            _ => panic!("scalar field mismatch"),
        }
    }

    /// Multiplicative inverse; panics on zero (callers pivot on nonzero entries only).
    pub fn inv(&self) -> Scalar {
        match self {
            Scalar::Q(r) => {
                assert!(!r.is_zero(), "inverse of zero");
                Scalar::Q(r.recip())
            }
            Scalar::Fp { p, value } => {
                assert!(*value != 0, "inverse of zero");
                Scalar::Fp {
                    p: *p,
                    value: pow_mod(*value, p - 2, *p),
                }
            }
        }
    }

    pub fn div(&self, other: &Scalar) -> Scalar {
        self.mul(&other.inv())
    }

    /// Render as the interchange coefficient string: `"3"`, `"-1/2"`, or the
    /// least nonnegative residue for prime fields.
    pub fn to_coeff_string(&self) -> String {
        match self {
            Scalar::Q(r) => {
                if r.denom().is_one() {
                    r.numer().to_string()
                } else {
                    format!("{}/{}", r.numer(), r.denom())
                }
            }
            Scalar::Fp { value, .. } => value.to_string(),
        }
    }

    /// Parse the interchange coefficient string for the given field.
    pub fn parse_coeff(field: Field, s: &str) -> Option<Scalar> {
        match field {
            Field::Q => {
                if let Some((num, den)) = s.split_once('/') {
                    let n: BigInt = num.parse().ok()?;
                    let d: BigInt = den.parse().ok()?;
                    if d.is_zero() {
                        return None;
                    }
                    Some(Scalar::Q(BigRational::new(n, d)))
                } else {
                    let n: BigInt = s.parse().ok()?;
                    Some(Scalar::Q(BigRational::from_integer(n)))
                }
            }
            Field::Fp(p) => {
                let v: i64 = s.parse().ok()?;
                Some(Field::Fp(p).from_i64(v))
            }
        }
    }

    /// Exact integer value if this scalar is an integer rational (used by
    /// displays that want `-1`/`+1` forms); `None` for proper fractions or `F_p`.
    pub fn as_integer(&self) -> Option<BigInt> {
        match self {
            Scalar::Q(r) if r.denom().is_one() => Some(r.numer().clone()),
            _ => None,
        }
    }

    /// True for rational scalars with negative sign (display convenience).
    pub fn is_negative_rational(&self) -> bool {
        matches!(self, Scalar::Q(r) if r.is_negative())
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_coeff_string())
    }
}
