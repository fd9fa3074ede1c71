//! Finite abelian groups `Z_{n_1} x ... x Z_{n_k}`, their characters, and
//! dense element sets.
//!
//! Elements are encoded as little-endian mixed-radix integers: the element
//! `(x_1, ..., x_k)` has index `x_1 + n_1 * (x_2 + n_2 * (x_3 + ...))`. The
//! dual group is identified with the group itself through
//! `gamma_u(x) = exp(2 pi i sum_j u_j x_j / n_j)`, so a set of characters is
//! just another [`ElementSet`].

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::par;

/// Default ceiling on `|G|`.
pub const DEFAULT_MAX_GROUP: usize = 1 << 20;

/// Environment variable overriding [`DEFAULT_MAX_GROUP`].
pub const MAX_GROUP_ENV: &str = "SPECDBL_MAX_GROUP";

/// The ceiling in effect: `SPECDBL_MAX_GROUP` when set and parseable,
/// otherwise [`DEFAULT_MAX_GROUP`].
pub fn group_ceiling() -> usize {
    std::env::var(MAX_GROUP_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(DEFAULT_MAX_GROUP)
}

struct GroupInner {
    orders: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
    /// Least common multiple of the orders; every character value is an
    /// `exponent`-th root of unity.
    exponent: usize,
    /// `roots[k] = exp(2 pi i k / exponent)`.
    roots: Vec<Complex64>,
}

/// A finite abelian group given as a product of cyclic factors.
///
/// Cloning is cheap; the root-of-unity table is shared.
#[derive(Clone)]
pub struct FiniteAbelianGroup {
    inner: Arc<GroupInner>,
}

impl PartialEq for FiniteAbelianGroup {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner.orders == other.inner.orders
    }
}

impl Eq for FiniteAbelianGroup {}

impl fmt::Debug for FiniteAbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Group{:?}", self.inner.orders)
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl FiniteAbelianGroup {
    /// Builds the group with the ceiling from [`group_ceiling`].
    pub fn new(orders: &[usize]) -> Result<Self> {
        Self::with_ceiling(orders, group_ceiling())
    }

    pub fn with_ceiling(orders: &[usize], ceiling: usize) -> Result<Self> {
        if orders.is_empty() {
            return Err(Error::NoFactors);
        }
        let mut size: u128 = 1;
        for (index, &order) in orders.iter().enumerate() {
            if order < 2 {
                return Err(Error::OrderTooSmall { index, order });
            }
            size = size.saturating_mul(order as u128);
        }
        if size > ceiling as u128 {
            return Err(Error::GroupTooLarge { size, ceiling });
        }
        let size = size as usize;
        let mut strides = Vec::with_capacity(orders.len());
        let mut stride = 1;
        for &order in orders {
            strides.push(stride);
            stride *= order;
        }
        let exponent = orders.iter().fold(1, |l, &n| l / gcd(l, n) * n);
        let roots = (0..exponent)
            .map(|k| Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / exponent as f64))
            .collect();
        Ok(Self {
            inner: Arc::new(GroupInner {
                orders: orders.to_vec(),
                strides,
                size,
                exponent,
                roots,
            }),
        })
    }

    /// `Z_2^rank`.
    pub fn binary(rank: usize) -> Result<Self> {
        Self::new(&vec![2; rank])
    }

    pub fn orders(&self) -> &[usize] {
        &self.inner.orders
    }

    pub fn rank(&self) -> usize {
        self.inner.orders.len()
    }

    /// `|G|`.
    pub fn size(&self) -> usize {
        self.inner.size
    }

    /// Stride of coordinate `j` in the mixed-radix encoding.
    pub fn stride(&self, j: usize) -> usize {
        self.inner.strides[j]
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(vec![0; self.rank()])
    }

    pub fn check(&self, element: &GroupElement) -> Result<()> {
        let orders = self.orders();
        if element.0.len() != orders.len() {
            return Err(Error::DimensionMismatch {
                expected: orders.len(),
                found: element.0.len(),
            });
        }
        for (position, (&value, &order)) in element.0.iter().zip(orders).enumerate() {
            if value >= order {
                return Err(Error::CoordinateOutOfRange {
                    position,
                    value,
                    order,
                });
            }
        }
        Ok(())
    }

    pub fn encode(&self, element: &GroupElement) -> Result<usize> {
        self.check(element)?;
        Ok(element
            .0
            .iter()
            .zip(&self.inner.strides)
            .map(|(&c, &s)| c * s)
            .sum())
    }

    pub fn decode(&self, index: usize) -> Result<GroupElement> {
        self.check_index(index)?;
        Ok(GroupElement(self.digits(index)))
    }

    pub(crate) fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.size() {
            return Err(Error::IndexOutOfRange {
                index,
                size: self.size(),
            });
        }
        Ok(())
    }

    pub(crate) fn digits(&self, mut index: usize) -> Vec<usize> {
        self.orders()
            .iter()
            .map(|&n| {
                let d = index % n;
                index /= n;
                d
            })
            .collect()
    }

    /// Index of `a + b`.
    pub fn add_index(&self, mut a: usize, mut b: usize) -> usize {
        let mut out = 0;
        for (&n, &s) in self.orders().iter().zip(&self.inner.strides) {
            let d = (a % n + b % n) % n;
            a /= n;
            b /= n;
            out += d * s;
        }
        out
    }

    /// Index of `-a`.
    pub fn neg_index(&self, mut a: usize) -> usize {
        let mut out = 0;
        for (&n, &s) in self.orders().iter().zip(&self.inner.strides) {
            let d = a % n;
            a /= n;
            out += ((n - d) % n) * s;
        }
        out
    }

    /// Index of `a - b`.
    pub fn sub_index(&self, a: usize, b: usize) -> usize {
        self.add_index(a, self.neg_index(b))
    }

    /// Exact phase of `gamma(x)` as a numerator over [`Self::exponent`].
    pub fn phase_index(&self, mut gamma: usize, mut x: usize) -> usize {
        let l = self.inner.exponent;
        let mut acc = 0;
        for &n in self.orders() {
            let u = gamma % n;
            let v = x % n;
            gamma /= n;
            x /= n;
            acc = (acc + (u * v % n) * (l / n)) % l;
        }
        acc
    }

    /// Least common multiple of the orders.
    pub fn exponent(&self) -> usize {
        self.inner.exponent
    }

    /// `exp(2 pi i k / exponent)`.
    pub fn root(&self, k: usize) -> Complex64 {
        self.inner.roots[k % self.inner.exponent]
    }

    /// `gamma(x)` for encoded indices.
    pub fn char_value_index(&self, gamma: usize, x: usize) -> Complex64 {
        self.inner.roots[self.phase_index(gamma, x)]
    }

    /// `gamma(x) = exp(2 pi i sum_j gamma_j x_j / n_j)`.
    pub fn char_value(&self, gamma: &GroupElement, x: &GroupElement) -> Result<Complex64> {
        let g = self.encode(gamma)?;
        let y = self.encode(x)?;
        Ok(self.char_value_index(g, y))
    }
}

/// A group element (or character) as a vector of residues.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement(pub Vec<usize>);

impl GroupElement {
    pub fn coords(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for GroupElement {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

/// A subset of a finite abelian group stored as a dense bitmask.
#[derive(Clone, PartialEq, Eq)]
pub struct ElementSet {
    group: FiniteAbelianGroup,
    bits: Vec<u64>,
    len: usize,
}

impl fmt::Debug for ElementSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ElementSet")
            .field("group", &self.group)
            .field("members", &self.indices())
            .finish()
    }
}

impl ElementSet {
    pub fn empty(group: &FiniteAbelianGroup) -> Self {
        Self {
            group: group.clone(),
            bits: vec![0; group.size().div_ceil(64)],
            len: 0,
        }
    }

    pub fn full(group: &FiniteAbelianGroup) -> Self {
        let mut s = Self::empty(group);
        for i in 0..group.size() {
            s.insert(i);
        }
        s
    }

    pub fn singleton(group: &FiniteAbelianGroup, index: usize) -> Result<Self> {
        Self::from_indices(group, [index])
    }

    pub fn from_indices<I>(group: &FiniteAbelianGroup, indices: I) -> Result<Self>
    where
        I: IntoIterator<Item = usize>,
    {
        let mut s = Self::empty(group);
        for i in indices {
            group.check_index(i)?;
            s.insert(i);
        }
        Ok(s)
    }

    pub fn from_elements(group: &FiniteAbelianGroup, elements: &[GroupElement]) -> Result<Self> {
        let mut s = Self::empty(group);
        for e in elements {
            s.insert(group.encode(e)?);
        }
        Ok(s)
    }

    /// Builds a set from a membership mask over `[0, |G|)`.
    pub(crate) fn from_mask(group: &FiniteAbelianGroup, mask: &[bool]) -> Self {
        let mut s = Self::empty(group);
        for (i, &m) in mask.iter().enumerate() {
            if m {
                s.insert(i);
            }
        }
        s
    }

    /// Returns whether the element was newly inserted.
    fn insert(&mut self, index: usize) -> bool {
        let (w, b) = (index / 64, index % 64);
        let fresh = self.bits[w] & (1 << b) == 0;
        if fresh {
            self.bits[w] |= 1 << b;
            self.len += 1;
        }
        fresh
    }

    fn from_words(group: &FiniteAbelianGroup, bits: Vec<u64>) -> Self {
        let len = bits.iter().map(|w| w.count_ones() as usize).sum();
        Self {
            group: group.clone(),
            bits,
            len,
        }
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, index: usize) -> bool {
        index < self.group.size() && self.bits[index / 64] & (1 << (index % 64)) != 0
    }

    pub fn contains_element(&self, element: &GroupElement) -> bool {
        self.group
            .encode(element)
            .map(|i| self.contains(i))
            .unwrap_or(false)
    }

    /// Member indices in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &word)| {
            let mut word = word;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let b = word.trailing_zeros() as usize;
                word &= word - 1;
                Some(w * 64 + b)
            })
        })
    }

    pub fn indices(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn elements(&self) -> Vec<GroupElement> {
        self.iter()
            .map(|i| GroupElement(self.group.digits(i)))
            .collect()
    }

    fn same_group(&self, other: &Self) -> Result<()> {
        if self.group != other.group {
            return Err(Error::GroupMismatch {
                left: self.group.orders().to_vec(),
                right: other.group.orders().to_vec(),
            });
        }
        Ok(())
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.group == other.group && self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.same_group(other)?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| a | b)
            .collect();
        Ok(Self::from_words(&self.group, bits))
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.same_group(other)?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| a & b)
            .collect();
        Ok(Self::from_words(&self.group, bits))
    }

    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.same_group(other)?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| a & !b)
            .collect();
        Ok(Self::from_words(&self.group, bits))
    }

    /// `G \ self`.
    pub fn complement(&self) -> Self {
        let full = Self::full(&self.group);
        full.difference(self).expect("same group")
    }

    /// `x + self`.
    pub fn translate(&self, x: usize) -> Result<Self> {
        self.group.check_index(x)?;
        let mut out = Self::empty(&self.group);
        for i in self.iter() {
            out.insert(self.group.add_index(i, x));
        }
        Ok(out)
    }
}

/// `S + T = {s + t}`.
pub fn sumset(s: &ElementSet, t: &ElementSet) -> Result<ElementSet> {
    s.same_group(t)?;
    let group = s.group();
    let words = group.size().div_ceil(64);
    let left = s.indices();
    let right = t.indices();
    if left.is_empty() || right.is_empty() {
        return Ok(ElementSet::empty(group));
    }
    // Each worker ORs the translates of T by one block of S into a private
    // mask; masks are merged afterwards.
    let block = left.len().div_ceil(64).max(1);
    let blocks: Vec<&[usize]> = left.chunks(block).collect();
    let partial = par::map_slice(&blocks, |chunk| {
        let mut bits = vec![0u64; words];
        for &a in chunk.iter() {
            for &b in &right {
                let c = group.add_index(a, b);
                bits[c / 64] |= 1 << (c % 64);
            }
        }
        bits
    });
    let mut bits = vec![0u64; words];
    for p in partial {
        for (w, x) in bits.iter_mut().zip(p) {
            *w |= x;
        }
    }
    Ok(ElementSet::from_words(group, bits))
}

/// `S - T = {s - t}`.
pub fn difference_set(s: &ElementSet, t: &ElementSet) -> Result<ElementSet> {
    sumset(s, &negate_set(t))
}

/// `-S`.
pub fn negate_set(s: &ElementSet) -> ElementSet {
    let mut out = ElementSet::empty(s.group());
    for i in s.iter() {
        out.insert(s.group().neg_index(i));
    }
    out
}

/// The subgroup generated by `generators`.
pub fn subgroup_span(
    group: &FiniteAbelianGroup,
    generators: &[GroupElement],
) -> Result<ElementSet> {
    let gens = generators
        .iter()
        .map(|g| group.encode(g))
        .collect::<Result<Vec<_>>>()?;
    let mut span = ElementSet::empty(group);
    span.insert(0);
    let mut queue = vec![0usize];
    while let Some(x) = queue.pop() {
        for &g in &gens {
            let y = group.add_index(x, g);
            if span.insert(y) {
                queue.push(y);
            }
        }
    }
    Ok(span)
}

/// A uniformly random `size`-subset, deterministic in `seed`.
pub fn random_subset(group: &FiniteAbelianGroup, size: usize, seed: u64) -> Result<ElementSet> {
    if size > group.size() {
        return Err(Error::SizeExceedsGroup {
            requested: size,
            size: group.size(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, group.size(), size);
    ElementSet::from_indices(group, picks)
}

/// `H^perp = {gamma : gamma(h) = 1 for all h in H}`, computed with exact
/// integer phases.
pub fn annihilator(h: &ElementSet) -> ElementSet {
    let group = h.group();
    let members = h.indices();
    let mask = par::map_range(group.size(), |gamma| {
        members.iter().all(|&x| group.phase_index(gamma, x) == 0)
    });
    ElementSet::from_mask(group, &mask)
}
