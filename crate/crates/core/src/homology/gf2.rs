//! Bit-packed vectors over GF(2).

/// A GF(2) column stored as packed words; trailing zero words are trimmed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BitColumn {
    words: Vec<u64>,
}

impl BitColumn {
    pub fn from_indices(indices: &[usize]) -> Self {
        let mut col = BitColumn::default();
        for &i in indices {
            col.toggle(i);
        }
        col
    }

    pub fn toggle(&mut self, i: usize) {
        let w = i / 64;
        if self.words.len() <= w {
            self.words.resize(w + 1, 0);
        }
        self.words[w] ^= 1 << (i % 64);
        self.trim();
    }

    pub fn get(&self, i: usize) -> bool {
        self.words.get(i / 64).is_some_and(|w| w >> (i % 64) & 1 == 1)
    }

    pub fn is_zero(&self) -> bool {
        self.words.is_empty()
    }

    pub fn xor_assign(&mut self, other: &BitColumn) {
        if self.words.len() < other.words.len() {
            self.words.resize(other.words.len(), 0);
        }
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
        self.trim();
    }

    /// Largest set index (the "lowest one" in matrix pictures).
    pub fn highest(&self) -> Option<usize> {
        let last = self.words.last()?;
        Some((self.words.len() - 1) * 64 + 63 - last.leading_zeros() as usize)
    }

    /// Smallest set index.
    pub fn lowest(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn trim(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }
}

/// Rank of a set of columns by row echelon elimination on their smallest
/// set index.
pub fn rank(columns: impl IntoIterator<Item = BitColumn>) -> usize {
    let mut basis: std::collections::HashMap<usize, BitColumn> = std::collections::HashMap::new();
    for mut col in columns {
        while let Some(lead) = col.lowest() {
            match basis.get(&lead) {
                Some(b) => col.xor_assign(b),
                None => {
                    basis.insert(lead, col);
                    break;
                }
            }
        }
    }
    basis.len()
}
