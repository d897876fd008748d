//! Random colorings of the target graph, color-set bitmasks and the number of
//! colorings needed for a given error rate.

use std::fmt;

use rand::Rng;
use thiserror::Error;

/// 0-based color; printed 1-based.
pub type Color = u8;

/// Set of colors as a 32-bit mask, bit `i` standing for color `i + 1`.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ColorSet(pub u32);

impl ColorSet {
    pub const EMPTY: ColorSet = ColorSet(0);

    #[inline]
    pub fn singleton(c: Color) -> Self {
        ColorSet(1 << c)
    }

    /// All `k` colors.
    #[inline]
    pub fn full(k: usize) -> Self {
        ColorSet(crate::graph::low_bits(k))
    }

    #[inline]
    pub fn contains(self, c: Color) -> bool {
        self.0 >> c & 1 == 1
    }

    #[inline]
    pub fn with(self, c: Color) -> Self {
        ColorSet(self.0 | 1 << c)
    }

    #[inline]
    pub fn without(self, c: Color) -> Self {
        ColorSet(self.0 & !(1 << c))
    }

    #[inline]
    pub fn union(self, other: Self) -> Self {
        ColorSet(self.0 | other.0)
    }

    #[inline]
    pub fn intersection(self, other: Self) -> Self {
        ColorSet(self.0 & other.0)
    }

    #[inline]
    pub fn difference(self, other: Self) -> Self {
        ColorSet(self.0 & !other.0)
    }

    #[inline]
    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Debug for ColorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for ColorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        let mut first = true;
        for c in 0..32 {
            if self.contains(c) {
                if !first {
                    f.write_str(",")?;
                }
                write!(f, "{}", c + 1)?;
                first = false;
            }
        }
        f.write_str("}")
    }
}

/// A color per target vertex, drawn from `palette` colors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    colors: Vec<Color>,
    palette: usize,
}

impl Coloring {
    /// Each vertex gets a color drawn uniformly and independently.
    pub fn random<R: Rng + ?Sized>(target_size: usize, palette: usize, rng: &mut R) -> Self {
        assert!((1..=32).contains(&palette), "palette of {palette} colors");
        let colors = (0..target_size)
            .map(|_| rng.random_range(0..palette) as Color)
            .collect();
        Coloring { colors, palette }
    }

    pub fn from_colors(colors: Vec<Color>, palette: usize) -> Self {
        assert!(colors.iter().all(|&c| (c as usize) < palette));
        Coloring { colors, palette }
    }

    #[inline]
    pub fn color(&self, v: u32) -> Color {
        self.colors[v as usize]
    }

    pub fn colors(&self) -> &[Color] {
        &self.colors
    }

    pub fn palette(&self) -> usize {
        self.palette
    }

    /// Colors of the given vertices, or `None` if two share a color.
    pub fn rainbow_set(&self, vertices: &[u32]) -> Option<ColorSet> {
        let mut set = ColorSet::EMPTY;
        for &v in vertices {
            let c = self.color(v);
            if set.contains(c) {
                return None;
            }
            set = set.with(c);
        }
        Some(set)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum IterationError {
    #[error("error rate must lie strictly between 0 and 1, got {0}")]
    Epsilon(f64),
    #[error("pattern must have at least one vertex")]
    EmptyPattern,
}

/// Probability that a fixed occurrence of a `k`-vertex pattern is colorful
/// under a uniform `k`-coloring: `k! / k^k`.
pub fn colorful_probability(k: usize) -> f64 {
    (1..=k).map(|i| i as f64 / k as f64).product()
}

/// Smallest `t` with `(1 - p)^t <= e^(-t p) <= epsilon`, i.e.
/// `ceil(ln(1/epsilon) / p)` with `p = k!/k^k`.
pub fn iteration_count(pattern_size: usize, epsilon: f64) -> Result<u64, IterationError> {
    if pattern_size == 0 {
        return Err(IterationError::EmptyPattern);
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(IterationError::Epsilon(epsilon));
    }
    let raw = (1.0 / epsilon).ln() / colorful_probability(pattern_size);
    // absorb rounding noise so exact integers are not bumped up
    Ok((raw - 1e-9).ceil().max(1.0) as u64)
}
