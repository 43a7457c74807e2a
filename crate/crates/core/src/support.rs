//! Supports of per-point tables over a finite ontic space.

use serde::Serialize;

/// Values at or below this count as zero when taking supports.
pub const DELTA_SUPP: f64 = 1e-12;

/// A set of ontic-point indices, kept sorted and deduplicated.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Support(Vec<usize>);

impl Support {
    pub fn empty() -> Self {
        Support(Vec::new())
    }

    /// Every point of an `n`-point space.
    pub fn full(n: usize) -> Self {
        Support((0..n).collect())
    }

    pub fn from_indices(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Support(indices)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn union(&self, other: &Support) -> Support {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Support(out)
    }

    pub fn intersection(&self, other: &Support) -> Support {
        Support(self.0.iter().copied().filter(|&x| other.contains(x)).collect())
    }

    /// `self − other`.
    pub fn difference(&self, other: &Support) -> Support {
        Support(self.0.iter().copied().filter(|&x| !other.contains(x)).collect())
    }

    pub fn is_subset(&self, other: &Support) -> bool {
        self.0.iter().all(|&x| other.contains(x))
    }

    pub fn is_disjoint(&self, other: &Support) -> bool {
        self.0.iter().all(|&x| !other.contains(x))
    }

    /// Total measure of the set under per-point weights.
    pub fn measure(&self, weights: &[f64]) -> f64 {
        self.0.iter().map(|&i| weights[i]).sum()
    }
}

impl FromIterator<usize> for Support {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        Support::from_indices(iter.into_iter().collect())
    }
}

/// `{λ : value(λ) > threshold}`.
pub fn support(values: &[f64], threshold: f64) -> Support {
    Support(
        values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > threshold)
            .map(|(i, _)| i)
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_basics() {
        assert!(support(&[0.0; 5], DELTA_SUPP).is_empty());
        let mut t = vec![0.0; 6];
        t[3] = 1.0;
        assert_eq!(support(&t, DELTA_SUPP).as_slice(), &[3]);
        assert!(support(&[1e-13, 2e-12], DELTA_SUPP).as_slice() == [1]);
    }

    #[test]
    fn set_algebra() {
        let a = Support::from_indices(vec![5, 1, 3, 3]);
        let b = Support::from_indices(vec![3, 4]);
        assert_eq!(a.as_slice(), &[1, 3, 5]);
        assert_eq!(a.union(&b).as_slice(), &[1, 3, 4, 5]);
        assert_eq!(a.intersection(&b).as_slice(), &[3]);
        assert_eq!(a.difference(&b).as_slice(), &[1, 5]);
        assert!(Support::from_indices(vec![1, 5]).is_subset(&a));
        assert!(!a.is_disjoint(&b));
        assert!((a.measure(&[0.5; 6]) - 1.5).abs() < 1e-15);
    }
}
