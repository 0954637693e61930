//! Set partitions of `{0, .., n-1}` in canonical form: blocks sorted
//! internally and ordered by least element.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Validates that `blocks` are non-empty, disjoint and cover `0..n`.
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        for block in &blocks {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            for &s in block {
                if s >= n {
                    return Err(Error::InvalidPartition(format!("state {} out of range", s + 1)));
                }
                if std::mem::replace(&mut seen[s], true) {
                    return Err(Error::InvalidPartition(format!("state {} repeated", s + 1)));
                }
            }
        }
        if let Some(s) = seen.iter().position(|x| !x) {
            return Err(Error::InvalidPartition(format!("state {} not covered", s + 1)));
        }
        Ok(Self::canonical(n, blocks))
    }

    fn canonical(n: usize, mut blocks: Vec<Vec<usize>>) -> Self {
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Self { n, blocks }
    }

    /// Groups positions holding equal labels (the kernel of `labels`).
    pub fn from_labels<L: PartialEq>(labels: &[L]) -> Self {
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut reps: Vec<&L> = Vec::new();
        for (i, l) in labels.iter().enumerate() {
            match reps.iter().position(|r| *r == l) {
                Some(k) => blocks[k].push(i),
                None => {
                    reps.push(l);
                    blocks.push(vec![i]);
                }
            }
        }
        // first-occurrence order already sorts blocks by least element
        Self {
            n: labels.len(),
            blocks,
        }
    }

    /// From 1-based blocks as read from JSON.
    pub fn from_one_based(n: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut out = Vec::with_capacity(blocks.len());
        for b in blocks {
            let mut v = Vec::with_capacity(b.len());
            for &s in b {
                if s == 0 || s > n {
                    return Err(Error::InvalidPartition(format!("state {s} outside 1..={n}")));
                }
                v.push(s - 1);
            }
            out.push(v);
        }
        Self::new(n, out)
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            n,
            blocks: (0..n).map(|i| vec![i]).collect(),
        }
    }

    pub fn whole(n: usize) -> Self {
        Self {
            n,
            blocks: vec![(0..n).collect()],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// `labels[s]` is the index of the block containing `s`.
    pub fn block_index(&self) -> Vec<usize> {
        let mut labels = vec![0; self.n];
        for (r, b) in self.blocks.iter().enumerate() {
            for &s in b {
                labels[s] = r;
            }
        }
        labels
    }

    /// Trivial partitions are `{S}` and the singletons.
    pub fn is_trivial(&self) -> bool {
        self.blocks.len() == 1 || self.blocks.len() == self.n
    }

    pub fn same_block(&self, i: usize, j: usize) -> bool {
        let idx = self.block_index();
        idx[i] == idx[j]
    }

    /// Block sizes in canonical block order.
    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    /// True when every block meets each block of `other` exactly once.
    pub fn is_transversal_of(&self, other: &Partition) -> bool {
        let idx = other.block_index();
        self.blocks.iter().all(|b| {
            let mut hit = vec![0usize; other.len()];
            for &s in b {
                hit[idx[s]] += 1;
            }
            hit.iter().all(|&c| c == 1)
        })
    }

    pub fn to_one_based(&self) -> Vec<Vec<usize>> {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|s| s + 1).collect())
            .collect()
    }

    /// Every partition of `0..n`, via restricted-growth strings.
    pub fn enumerate(n: usize) -> impl Iterator<Item = Partition> {
        RestrictedGrowth::new(n).map(|labels| Partition::from_labels(&labels))
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.blocks {
            write!(f, "{{")?;
            for (k, s) in b.iter().enumerate() {
                if k > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", s + 1)?;
            }
            write!(f, "}}")?;
        }
        Ok(())
    }
}

/// Strings `a` with `a[0] = 0` and `a[i] <= 1 + max(a[..i])`.
struct RestrictedGrowth {
    current: Option<Vec<usize>>,
}

impl RestrictedGrowth {
    fn new(n: usize) -> Self {
        Self {
            current: if n == 0 { None } else { Some(vec![0; n]) },
        }
    }
}

impl Iterator for RestrictedGrowth {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let a = self.current.as_mut().unwrap();
        let n = a.len();
        let mut prefix_max = vec![0; n];
        for i in 1..n {
            prefix_max[i] = prefix_max[i - 1].max(a[i - 1]);
        }
        let mut i = n;
        loop {
            if i <= 1 {
                self.current = None;
                break;
            }
            i -= 1;
            if a[i] <= prefix_max[i] {
                a[i] += 1;
                for x in a.iter_mut().skip(i + 1) {
                    *x = 0;
                }
                break;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_ordering() {
        let p = Partition::new(4, vec![vec![3, 1], vec![2, 0]]).unwrap();
        assert_eq!(p.blocks(), &[vec![0, 2], vec![1, 3]]);
        assert_eq!(p.to_string(), "{1,3}{2,4}");
        assert_eq!(Partition::from_labels(&[7, 9, 7, 9]), p);
    }

    #[test]
    fn invalid_partitions() {
        assert!(Partition::new(3, vec![vec![0, 1]]).is_err());
        assert!(Partition::new(3, vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(Partition::new(2, vec![vec![0, 1], vec![]]).is_err());
        assert!(Partition::from_one_based(2, &[vec![0, 1]]).is_err());
    }

    #[test]
    fn bell_numbers() {
        let counts: Vec<usize> = (1..=6).map(|n| Partition::enumerate(n).count()).collect();
        assert_eq!(counts, vec![1, 2, 5, 15, 52, 203]);
        assert_eq!(Partition::enumerate(10).count(), 115_975);
    }

    #[test]
    fn transversals() {
        let s = Partition::new(6, vec![vec![0, 1], vec![2, 3], vec![4, 5]]).unwrap();
        let c = Partition::from_one_based(6, &[vec![1, 3, 5], vec![2, 4, 6]]).unwrap();
        assert!(c.is_transversal_of(&s));
        assert!(s.is_transversal_of(&c));
        let t = Partition::new(6, vec![vec![0, 2], vec![1, 3], vec![4, 5]]).unwrap();
        assert!(!c.is_transversal_of(&t));
        assert!(Partition::singletons(3).is_trivial());
        assert!(Partition::whole(3).is_trivial());
    }
}
