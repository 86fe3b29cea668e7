//! Symbol sequences over Z x {L, R}: generators, minimal potentials, and the
//! tail threshold T_s.
//!
//! Arbitrary symbol oracles are not supported; a sequence is always backed by
//! one of three generator forms (eventually periodic, fast parametric, or an
//! explicit prefix with constant padding), each of which carries its own
//! growth certificate. That certificate is what makes the minimal potential
//! and the tail threshold finitely computable.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::RwLock;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::map::CosineMap;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AddressError {
    #[error("period must be nonempty")]
    EmptyPeriod,
    #[error("fast generator needs x > 0, scale > 0 and a nonempty side pattern")]
    BadFastGenerator,
    #[error("symbol index at position {k} exceeds the exact integer range")]
    SymbolOverflow { k: usize },
    #[error("shifted potential left the representable range")]
    PotentialOverflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    L,
    R,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::R => 1.0,
            Side::L => -1.0,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::L => write!(f, "L"),
            Side::R => write!(f, "R"),
        }
    }
}

/// One symbol (n, L|R). The magnitude |(n, L)| = |(n, R)| = |n|.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StripSymbol {
    pub n: i64,
    pub side: Side,
}

impl StripSymbol {
    pub fn new(n: i64, side: Side) -> Self {
        Self { n, side }
    }

    pub fn magnitude(&self) -> u64 {
        self.n.unsigned_abs()
    }
}

impl fmt::Display for StripSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.n, self.side)
    }
}

impl Serialize for StripSymbol {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        (self.n, self.side).serialize(s)
    }
}

impl<'de> Deserialize<'de> for StripSymbol {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (n, side) = <(i64, Side)>::deserialize(d)?;
        Ok(Self { n, side })
    }
}

fn default_scale() -> f64 {
    1.0
}

/// Generator forms behind an external address.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Generator {
    /// preperiod `pre` followed by the cycle `per` repeated forever.
    Periodic {
        #[serde(default)]
        pre: Vec<StripSymbol>,
        per: Vec<StripSymbol>,
    },
    /// |n_k| = round(scale * F^{k-1}(x) / 2 pi); sides cycle through `sides`.
    Fast {
        x: f64,
        #[serde(default = "default_scale")]
        scale: f64,
        sides: Vec<Side>,
    },
    /// finite symbol list then the constant `pad` forever.
    Prefix {
        symbols: Vec<StripSymbol>,
        pad: StripSymbol,
    },
}

/// A lazily evaluable symbol sequence with its generator. The realized-symbol
/// cache is grow-only and idempotent, so concurrent readers are safe.
pub struct ExternalAddress {
    gen: Generator,
    cache: RwLock<Vec<StripSymbol>>,
}

impl fmt::Debug for ExternalAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExternalAddress")
            .field("gen", &self.gen)
            .finish()
    }
}

impl Clone for ExternalAddress {
    fn clone(&self) -> Self {
        Self {
            gen: self.gen.clone(),
            cache: RwLock::new(self.cache.read().unwrap().clone()),
        }
    }
}

impl PartialEq for ExternalAddress {
    fn eq(&self, other: &Self) -> bool {
        self.gen == other.gen
    }
}

impl Serialize for ExternalAddress {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.gen.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExternalAddress {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let gen = Generator::deserialize(d)?;
        Self::from_generator(gen).map_err(D::Error::custom)
    }
}

impl ExternalAddress {
    pub fn from_generator(gen: Generator) -> Result<Self, AddressError> {
        match &gen {
            Generator::Periodic { per, .. } => {
                if per.is_empty() {
                    return Err(AddressError::EmptyPeriod);
                }
            }
            Generator::Fast { x, scale, sides } => {
                if !(*x > 0.0) || !(*scale > 0.0) || sides.is_empty() {
                    return Err(AddressError::BadFastGenerator);
                }
            }
            Generator::Prefix { .. } => {}
        }
        Ok(Self {
            gen,
            cache: RwLock::new(Vec::new()),
        })
    }

    pub fn periodic(pre: Vec<StripSymbol>, per: Vec<StripSymbol>) -> Result<Self, AddressError> {
        Self::from_generator(Generator::Periodic { pre, per })
    }

    pub fn fast(x: f64, scale: f64, sides: Vec<Side>) -> Result<Self, AddressError> {
        Self::from_generator(Generator::Fast { x, scale, sides })
    }

    pub fn prefix(symbols: Vec<StripSymbol>, pad: StripSymbol) -> Self {
        Self::from_generator(Generator::Prefix { symbols, pad }).expect("prefix is always valid")
    }

    pub fn generator(&self) -> &Generator {
        &self.gen
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.gen).expect("generator serializes")
    }

    /// F^{k-1}(x) as f64, +inf once past the representable range.
    fn fast_level(x: f64, k: usize) -> f64 {
        let mut v = x;
        for _ in 1..k {
            if !v.is_finite() {
                return f64::INFINITY;
            }
            v = v.exp_m1();
        }
        v
    }

    /// |n_k| for the fast form, as f64 (exact while below 2^53).
    fn fast_magnitude(x: f64, scale: f64, k: usize) -> f64 {
        (scale * Self::fast_level(x, k) / TAU).round()
    }

    /// The k-th symbol, 1-indexed. Fast generators overflow the exact integer
    /// range after a handful of entries; that is reported, not approximated.
    pub fn symbol_at(&self, k: usize) -> Result<StripSymbol, AddressError> {
        assert!(k >= 1, "symbols are 1-indexed");
        {
            let cache = self.cache.read().unwrap();
            if k <= cache.len() {
                return Ok(cache[k - 1]);
            }
        }
        match &self.gen {
            Generator::Periodic { pre, per } => Ok(if k <= pre.len() {
                pre[k - 1]
            } else {
                per[(k - 1 - pre.len()) % per.len()]
            }),
            Generator::Prefix { symbols, pad } => Ok(if k <= symbols.len() {
                symbols[k - 1]
            } else {
                *pad
            }),
            Generator::Fast { x, scale, sides } => {
                let mag = Self::fast_magnitude(*x, *scale, k);
                if !(mag <= i64::MAX as f64) {
                    return Err(AddressError::SymbolOverflow { k });
                }
                Ok(StripSymbol::new(mag as i64, sides[(k - 1) % sides.len()]))
            }
        }
    }

    pub fn side_at(&self, k: usize) -> Side {
        match &self.gen {
            Generator::Periodic { .. } | Generator::Prefix { .. } => {
                self.symbol_at(k).expect("exact symbol").side
            }
            Generator::Fast { sides, .. } => sides[(k - 1) % sides.len()],
        }
    }

    /// 2 pi n_k as f64. Exact for exact symbols; for deep fast entries this is
    /// the rounded magnitude carried at f64 precision, which is all the
    /// telescope ever consumes (only the ratio to F^k(t) matters there).
    pub fn offset_2pi(&self, k: usize) -> f64 {
        match &self.gen {
            Generator::Periodic { .. } | Generator::Prefix { .. } => {
                TAU * self.symbol_at(k).expect("exact symbol").n as f64
            }
            Generator::Fast { x, scale, .. } => TAU * Self::fast_magnitude(*x, *scale, k),
        }
    }

    /// ln(2 pi |n_k|), assembled in log space so it stays finite even when the
    /// magnitude itself does not; -inf for a zero symbol.
    pub fn ln_abs_offset_2pi(&self, k: usize) -> f64 {
        match &self.gen {
            Generator::Periodic { .. } | Generator::Prefix { .. } => {
                let mag = self.symbol_at(k).expect("exact symbol").magnitude() as f64;
                (TAU * mag).ln()
            }
            Generator::Fast { x, scale, .. } => {
                let mag = Self::fast_magnitude(*x, *scale, k);
                if mag == 0.0 {
                    return f64::NEG_INFINITY;
                }
                if mag.is_finite() {
                    return (TAU * mag).ln();
                }
                // ln(2 pi round(scale F^{k-1}(x) / 2 pi)) ~ ln scale + ln F^{k-1}(x)
                let below = Self::fast_level(*x, k - 1);
                scale.ln() + below + (-(-below).exp()).ln_1p()
            }
        }
    }

    /// Sign of n_k (fast magnitudes are nonnegative by construction).
    pub fn symbol_sign(&self, k: usize) -> f64 {
        match &self.gen {
            Generator::Periodic { .. } | Generator::Prefix { .. } => {
                let n = self.symbol_at(k).expect("exact symbol").n;
                if n < 0 {
                    -1.0
                } else {
                    1.0
                }
            }
            Generator::Fast { .. } => 1.0,
        }
    }

    /// Materialize the first `len` symbols (also fills the cache).
    pub fn prefix_symbols(&self, len: usize) -> Result<Vec<StripSymbol>, AddressError> {
        let mut out = Vec::with_capacity(len);
        for k in 1..=len {
            out.push(self.symbol_at(k)?);
        }
        let mut cache = self.cache.write().unwrap();
        if cache.len() < out.len() {
            *cache = out.clone();
        }
        Ok(out)
    }

    /// The shifted address (drop the first symbol).
    pub fn shift(&self) -> Result<Self, AddressError> {
        let gen = match &self.gen {
            Generator::Periodic { pre, per } => {
                if pre.is_empty() {
                    let mut rotated = per.clone();
                    rotated.rotate_left(1);
                    Generator::Periodic {
                        pre: Vec::new(),
                        per: rotated,
                    }
                } else {
                    Generator::Periodic {
                        pre: pre[1..].to_vec(),
                        per: per.clone(),
                    }
                }
            }
            Generator::Prefix { symbols, pad } => Generator::Prefix {
                symbols: if symbols.is_empty() {
                    Vec::new()
                } else {
                    symbols[1..].to_vec()
                },
                pad: *pad,
            },
            Generator::Fast { x, scale, sides } => {
                let shifted = x.exp_m1();
                if !shifted.is_finite() {
                    return Err(AddressError::PotentialOverflow);
                }
                let mut rotated = sides.clone();
                rotated.rotate_left(1);
                Generator::Fast {
                    x: shifted,
                    scale: *scale,
                    sides: rotated,
                }
            }
        };
        Self::from_generator(gen)
    }

    pub fn shift_n(&self, n: usize) -> Result<Self, AddressError> {
        let mut cur = self.clone();
        for _ in 0..n {
            cur = cur.shift()?;
        }
        Ok(cur)
    }

    /// Fast generators are fast; bounded (periodic/prefix) ones are slow.
    pub fn is_fast(&self) -> bool {
        matches!(self.gen, Generator::Fast { .. })
    }

    /// Minimal potential t_s: the infimum of t > 0 for which the symbol
    /// magnitudes vanish against F^{k-1}(t). Exactly 0 for bounded sequences
    /// and exactly x for the fast parametric form.
    pub fn minimal_potential(&self) -> f64 {
        match &self.gen {
            Generator::Periodic { .. } | Generator::Prefix { .. } => 0.0,
            Generator::Fast { x, .. } => *x,
        }
    }
}

/// T_s: least T >= T_ab with 4 pi |s_{n+1}| < F^n(T) for every n >= 1.
///
/// Bounded generators are scanned over one full cycle (later occurrences of
/// the same magnitude only relax the constraint). The fast form is scanned
/// until phase growth certifies every deeper constraint; each constraint is
/// inverted through a `ln_1p` chain so nothing large is ever formed.
pub fn tail_threshold(map: &CosineMap, addr: &ExternalAddress) -> f64 {
    let mut t = map.t_ab;
    let constraint = |mag4pi: f64, n: usize| -> f64 {
        let mut c = mag4pi;
        for _ in 0..n {
            c = c.ln_1p();
        }
        c
    };
    match addr.generator() {
        Generator::Periodic { pre, per } => {
            let horizon = pre.len() + 2 * per.len() + 1;
            for n in 1..=horizon {
                let mag = addr.symbol_at(n + 1).expect("exact symbol").magnitude() as f64;
                if mag > 0.0 {
                    t = t.max(constraint(4.0 * PI * mag, n));
                }
            }
        }
        Generator::Prefix { symbols, .. } => {
            let horizon = symbols.len() + 2;
            for n in 1..=horizon {
                let mag = addr.symbol_at(n + 1).expect("exact symbol").magnitude() as f64;
                if mag > 0.0 {
                    t = t.max(constraint(4.0 * PI * mag, n));
                }
            }
        }
        Generator::Fast { x, scale, .. } => {
            // any T >= x satisfies the asymptotic constraints with scale < 1/2;
            // with scale >= 1/2 the finite scan below dominates anyway.
            t = t.max(*x);
            let mut level = *x; // F^{n-1}(x) entering iteration n
            for n in 1..=220 {
                if level > 705.0 {
                    // 4 pi |s_{n+1}| ~ 2 scale F^n(x): one inverse step in log
                    // form, then n-1 more. Deeper constraints shrink toward x
                    // super-exponentially fast, so stop here.
                    let c = constraint(level + (2.0 * scale).ln(), n - 1);
                    t = t.max(c);
                    break;
                }
                level = level.exp_m1();
                let mag = (scale * level / TAU).round();
                if mag >= 1.0 {
                    let raw = 4.0 * PI * mag;
                    let c = if raw.is_finite() {
                        constraint(raw, n)
                    } else {
                        constraint(level.ln() + (2.0 * scale).ln(), n - 1)
                    };
                    t = t.max(c);
                }
            }
        }
    }
    t
}
