//! Finite encodings of points of the product space M^N: a prefix of explicit
//! coordinates followed by a constant tail pad, the shift map, the product
//! metric, and word enumeration.

use crate::error::{Result, RuelleError};
use crate::space::StateSpace;

/// Read-only coordinate access for evaluation points. Coordinates are
/// 1-based; every coordinate beyond `explicit_len` equals `pad`.
///
/// The trait is object-safe on purpose: potential evaluation recurses through
/// wrapper views (shift, truncation, prepended buffers) and dynamic dispatch
/// keeps that recursion finite. Views are read-only, and the `Sync` bound
/// lets enumeration strata share them across threads.
pub trait CoordView: Sync {
    fn coord(&self, k: usize) -> usize;
    fn explicit_len(&self) -> usize;
    fn pad(&self) -> usize;
}

/// A point (x_1, ..., x_m, pad, pad, ...) of M^N, represented exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    pub prefix: Vec<usize>,
    pub pad: usize,
}

impl Configuration {
    pub fn from_prefix(prefix: Vec<usize>, pad: usize) -> Self {
        Configuration { prefix, pad }
    }

    /// The eventually-fixed point pad^infinity.
    pub fn pure_pad(pad: usize) -> Self {
        Configuration { prefix: Vec::new(), pad }
    }

    /// sigma(x): drops the first coordinate. On a pure pad this is the
    /// identity (pad^inf is a fixed point of the shift).
    pub fn shift(&self) -> Self {
        if self.prefix.is_empty() {
            self.clone()
        } else {
            Configuration { prefix: self.prefix[1..].to_vec(), pad: self.pad }
        }
    }

    /// sigma^n(x).
    pub fn shift_n(&self, n: usize) -> Self {
        let k = n.min(self.prefix.len());
        Configuration { prefix: self.prefix[k..].to_vec(), pad: self.pad }
    }

    /// a.x: prepends one symbol. `shift(prepend(a, x)) == x`.
    pub fn prepend(&self, a: usize) -> Self {
        let mut prefix = Vec::with_capacity(self.prefix.len() + 1);
        prefix.push(a);
        prefix.extend_from_slice(&self.prefix);
        Configuration { prefix, pad: self.pad }
    }

    pub fn check_space(&self, space: &StateSpace) -> Result<()> {
        space.check_index(self.pad)?;
        for &i in &self.prefix {
            space.check_index(i)?;
        }
        Ok(())
    }

    /// Short human-readable form: "(a,b,c) pad p".
    pub fn describe(&self) -> String {
        let body: Vec<String> = self.prefix.iter().map(|i| i.to_string()).collect();
        format!("({}) pad {}", body.join(","), self.pad)
    }
}

impl CoordView for Configuration {
    #[inline]
    fn coord(&self, k: usize) -> usize {
        debug_assert!(k >= 1);
        if k <= self.prefix.len() {
            self.prefix[k - 1]
        } else {
            self.pad
        }
    }

    #[inline]
    fn explicit_len(&self) -> usize {
        self.prefix.len()
    }

    #[inline]
    fn pad(&self) -> usize {
        self.pad
    }
}

/// View of sigma^by(x) without copying.
pub struct ShiftView<'a> {
    pub inner: &'a dyn CoordView,
    pub by: usize,
}

impl CoordView for ShiftView<'_> {
    #[inline]
    fn coord(&self, k: usize) -> usize {
        self.inner.coord(k + self.by)
    }

    #[inline]
    fn explicit_len(&self) -> usize {
        self.inner.explicit_len().saturating_sub(self.by)
    }

    #[inline]
    fn pad(&self) -> usize {
        self.inner.pad()
    }
}

/// A bare word buffer padded beyond its end.
pub struct BufView<'a> {
    pub buf: &'a [usize],
    pub pad: usize,
}

impl CoordView for BufView<'_> {
    #[inline]
    fn coord(&self, k: usize) -> usize {
        if k <= self.buf.len() {
            self.buf[k - 1]
        } else {
            self.pad
        }
    }

    #[inline]
    fn explicit_len(&self) -> usize {
        self.buf.len()
    }

    #[inline]
    fn pad(&self) -> usize {
        self.pad
    }
}

/// head_1 ... head_len followed by the tail view: the word a.x of the
/// operator sum, with `head` borrowed straight from an enumeration buffer.
pub struct ChainView<'a> {
    pub head: &'a [usize],
    pub tail: &'a dyn CoordView,
}

impl CoordView for ChainView<'_> {
    #[inline]
    fn coord(&self, k: usize) -> usize {
        if k <= self.head.len() {
            self.head[k - 1]
        } else {
            self.tail.coord(k - self.head.len())
        }
    }

    #[inline]
    fn explicit_len(&self) -> usize {
        self.head.len() + self.tail.explicit_len()
    }

    #[inline]
    fn pad(&self) -> usize {
        self.tail.pad()
    }
}

/// Integration variable over M^n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Word {
    pub indices: Vec<usize>,
}

/// Lexicographic index of a word, first coordinate most significant.
pub fn word_index(n_symbols: usize, indices: &[usize]) -> usize {
    let mut idx = 0usize;
    for &i in indices {
        idx = idx * n_symbols + i;
    }
    idx
}

/// Inverse of [`word_index`] for words of length `len`.
pub fn word_from_index(n_symbols: usize, len: usize, mut idx: usize) -> Vec<usize> {
    let mut out = vec![0usize; len];
    for slot in out.iter_mut().rev() {
        *slot = idx % n_symbols;
        idx /= n_symbols;
    }
    out
}

/// Number of words of length `n`, or None on overflow.
pub fn word_count(n_symbols: usize, n: usize) -> Option<usize> {
    n_symbols.checked_pow(u32::try_from(n).ok()?)
}

pub const DEFAULT_ENUMERATION_CAP: usize = 10_000_000;

/// All words of length `n` in lexicographic order. Refuses to start when the
/// count exceeds `cap`; callers beyond the cap must sample with a seed.
pub fn enumerate_words(
    space: &StateSpace,
    n: usize,
    cap: usize,
) -> Result<impl Iterator<Item = Word> + '_> {
    let n_symbols = space.n();
    let total = word_count(n_symbols, n)
        .filter(|&t| t <= cap)
        .ok_or(RuelleError::CapExceeded { n_symbols, n, cap })?;
    Ok((0..total).map(move |idx| Word { indices: word_from_index(n_symbols, n, idx) }))
}

/// Partial product distance plus the exact geometric tail.
#[derive(Clone, Copy, Debug)]
pub struct DistanceBound {
    /// sum_{k <= depth} 2^-k d(x_k, y_k)
    pub partial: f64,
    /// exact remainder 2^-depth d(pad_x, pad_y); both tails are constant
    /// beyond `depth` by the precondition, so this is not just a bound
    pub tail: f64,
    /// partial + tail
    pub total: f64,
}

/// d(x, y) = sum_k 2^-k d(x_k, y_k), split at `depth`. Requires `depth` to
/// cover both prefixes so the remainder is an exact geometric series.
pub fn product_distance(
    space: &StateSpace,
    x: &Configuration,
    y: &Configuration,
    depth: usize,
) -> Result<DistanceBound> {
    x.check_space(space)?;
    y.check_space(space)?;
    let need = x.prefix.len().max(y.prefix.len());
    if depth < need {
        return Err(RuelleError::domain(format!(
            "depth {depth} must cover both prefixes (max length {need})"
        )));
    }
    let mut partial = 0.0;
    let mut scale = 0.5;
    for k in 1..=depth {
        partial += scale * space.distance(x.coord(k), y.coord(k));
        scale *= 0.5;
    }
    // Remaining coordinates are the two pads: sum_{k > depth} 2^-k d = 2^-depth d.
    let tail = 2.0 * scale * space.distance(x.pad, y.pad);
    Ok(DistanceBound { partial, tail, total: partial + tail })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary() -> StateSpace {
        StateSpace::uniform_binary()
    }

    #[test]
    fn shift_drops_first_and_fixes_pure_pad() {
        let x = Configuration::from_prefix(vec![0, 1, 0], 0);
        assert_eq!(x.shift().prefix, vec![1, 0]);
        let p = Configuration::pure_pad(0);
        assert_eq!(p.shift(), p);
        // shifting m times empties the prefix
        assert_eq!(x.shift_n(3), Configuration::pure_pad(0));
        assert_eq!(x.shift_n(10), Configuration::pure_pad(0));
    }

    #[test]
    fn prepend_sections_the_shift() {
        let x = Configuration::from_prefix(vec![1, 0], 1);
        let ax = x.prepend(0);
        assert_eq!(ax.prefix, vec![0, 1, 0]);
        assert_eq!(ax.shift(), x);
        let p = Configuration::pure_pad(1).prepend(0);
        assert_eq!(p.prefix, vec![0]);
        assert_eq!(p.pad, 1);
    }

    #[test]
    fn coord_view_reads_pad_beyond_prefix() {
        let x = Configuration::from_prefix(vec![1, 0], 0);
        assert_eq!(x.coord(1), 1);
        assert_eq!(x.coord(2), 0);
        assert_eq!(x.coord(3), 0);
        assert_eq!(x.coord(100), 0);

        let sv = ShiftView { inner: &x, by: 1 };
        assert_eq!(sv.coord(1), 0);
        assert_eq!(sv.explicit_len(), 1);

        let buf = [1usize, 1];
        let cv = ChainView { head: &buf, tail: &x };
        assert_eq!(cv.coord(1), 1);
        assert_eq!(cv.coord(3), 1);
        assert_eq!(cv.coord(4), 0);
        assert_eq!(cv.explicit_len(), 4);
    }

    #[test]
    fn word_indexing_roundtrips_lexicographically() {
        let s = binary();
        let words: Vec<Word> = enumerate_words(&s, 3, 100).unwrap().collect();
        assert_eq!(words.len(), 8);
        assert_eq!(words[0].indices, vec![0, 0, 0]);
        assert_eq!(words[7].indices, vec![1, 1, 1]);
        for (i, w) in words.iter().enumerate() {
            assert_eq!(word_index(2, &w.indices), i);
            assert_eq!(word_from_index(2, 3, i), w.indices);
        }
    }

    #[test]
    fn enumerate_respects_cap() {
        let s = binary();
        let err = enumerate_words(&s, 30, 1000).err().unwrap();
        assert!(matches!(err, RuelleError::CapExceeded { .. }));
        assert!(err.to_string().contains("sampling"));

        let three = StateSpace::make_finite_alphabet(&["a", "b", "c"], None).unwrap();
        assert_eq!(enumerate_words(&three, 2, 100).unwrap().count(), 9);
        assert_eq!(enumerate_words(&three, 1, 100).unwrap().count(), 3);
    }

    #[test]
    fn product_distance_basics() {
        let s = binary();
        let x = Configuration::from_prefix(vec![0], 0);
        let y = Configuration::from_prefix(vec![1], 0);
        let d = product_distance(&s, &x, &y, 1).unwrap();
        assert_eq!(d.total, 0.5);
        assert_eq!(d.tail, 0.0);

        let same = product_distance(&s, &x, &x, 4).unwrap();
        assert_eq!(same.total, 0.0);

        // differ only at coordinate 3
        let a = Configuration::from_prefix(vec![0, 0, 0], 0);
        let b = Configuration::from_prefix(vec![0, 0, 1], 0);
        let d = product_distance(&s, &a, &b, 3).unwrap();
        assert!((d.total - 0.125).abs() < 1e-15);
    }

    #[test]
    fn product_distance_tail_is_exact_for_differing_pads() {
        let s = binary();
        let x = Configuration::pure_pad(0);
        let y = Configuration::pure_pad(1);
        let d = product_distance(&s, &x, &y, 5).unwrap();
        // exact distance is sum 2^-k = 1
        assert!((d.total - 1.0).abs() < 1e-15);
        assert!((d.tail - 2f64.powi(-5)).abs() < 1e-15);
    }

    #[test]
    fn product_distance_agreement_bound() {
        // agreeing on the first k coordinates forces d <= 2^-k diam
        let s = binary();
        let x = Configuration::from_prefix(vec![1, 0, 1, 0], 0);
        let y = Configuration::from_prefix(vec![1, 0, 1, 1], 1);
        let d = product_distance(&s, &x, &y, 4).unwrap();
        assert!(d.total <= 2f64.powi(-3) + 1e-15);
    }

    #[test]
    fn product_distance_validates_inputs() {
        let s = binary();
        let x = Configuration::from_prefix(vec![0, 1, 1], 0);
        let y = Configuration::pure_pad(0);
        assert!(product_distance(&s, &x, &y, 2).is_err());
        let bad = Configuration::from_prefix(vec![5], 0);
        assert!(matches!(
            product_distance(&s, &bad, &y, 3),
            Err(RuelleError::IndexOutOfRange { .. })
        ));
    }
}
