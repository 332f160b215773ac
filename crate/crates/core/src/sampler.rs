use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bscan::BScan;
use crate::error::{DataError, Result};

/// Endless stream of unregistered `(hn, ln)` pairs.
///
/// Every epoch both sets are shuffled independently and zipped positionally.
/// An epoch has `max(|hn|, |ln|)` pairs; the smaller set wraps around its
/// own permutation.
#[derive(Debug, Clone)]
pub struct UnpairedIterator<'a> {
    hn: &'a [BScan],
    ln: &'a [BScan],
    rng: ChaCha8Rng,
    order: Vec<(usize, usize)>,
    pos: usize,
    epoch: usize,
}

impl<'a> UnpairedIterator<'a> {
    pub fn new(hn: &'a [BScan], ln: &'a [BScan], seed: u64) -> Result<Self> {
        if hn.is_empty() || ln.is_empty() {
            return Err(DataError::Dataset(format!(
                "unpaired sampling needs non-empty sets, got {} HN and {} LN images",
                hn.len(),
                ln.len()
            )));
        }
        Ok(UnpairedIterator {
            hn,
            ln,
            rng: ChaCha8Rng::seed_from_u64(seed),
            order: Vec::new(),
            pos: 0,
            epoch: 0,
        })
    }

    pub fn epoch_len(&self) -> usize {
        self.hn.len().max(self.ln.len())
    }

    /// Number of epochs started so far.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    fn reshuffle(&mut self) {
        let mut ph: Vec<usize> = (0..self.hn.len()).collect();
        let mut pl: Vec<usize> = (0..self.ln.len()).collect();
        ph.shuffle(&mut self.rng);
        pl.shuffle(&mut self.rng);
        let n = self.epoch_len();
        self.order = (0..n).map(|i| (ph[i % ph.len()], pl[i % pl.len()])).collect();
        self.pos = 0;
        self.epoch += 1;
    }

    /// Index pairs of the next full epoch. Only valid at an epoch boundary.
    pub fn next_epoch_indices(&mut self) -> Vec<(usize, usize)> {
        self.reshuffle();
        self.pos = self.order.len();
        self.order.clone()
    }

    pub fn next_epoch(&mut self) -> Vec<(&'a BScan, &'a BScan)> {
        let (hn, ln) = (self.hn, self.ln);
        self.next_epoch_indices()
            .into_iter()
            .map(|(h, l)| (&hn[h], &ln[l]))
            .collect()
    }
}

impl<'a> Iterator for UnpairedIterator<'a> {
    type Item = (&'a BScan, &'a BScan);

    fn next(&mut self) -> Option<Self::Item> {
        if self.pos >= self.order.len() {
            self.reshuffle();
        }
        let (h, l) = self.order[self.pos];
        self.pos += 1;
        Some((&self.hn[h], &self.ln[l]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bscan::Domain;

    fn set(n: usize, domain: Domain) -> Vec<BScan> {
        (0..n)
            .map(|i| BScan::filled(8, 8, i as f64 / n as f64, domain).unwrap().with_source_id(format!("{i}")))
            .collect()
    }

    #[test]
    fn singleton_sets_repeat() {
        let h = set(1, Domain::HighNoise);
        let l = set(1, Domain::LowNoise);
        let it = UnpairedIterator::new(&h, &l, 0).unwrap();
        for (a, b) in it.take(5) {
            assert_eq!(a.source_id(), "0");
            assert_eq!(b.source_id(), "0");
        }
    }

    #[test]
    fn each_image_once_per_epoch() {
        let h = set(7, Domain::HighNoise);
        let l = set(7, Domain::LowNoise);
        let mut it = UnpairedIterator::new(&h, &l, 4).unwrap();
        for _ in 0..3 {
            let idx = it.next_epoch_indices();
            let mut hs: Vec<_> = idx.iter().map(|p| p.0).collect();
            let mut ls: Vec<_> = idx.iter().map(|p| p.1).collect();
            hs.sort();
            ls.sort();
            assert_eq!(hs, (0..7).collect::<Vec<_>>());
            assert_eq!(ls, (0..7).collect::<Vec<_>>());
        }
    }

    #[test]
    fn same_seed_same_sequence() {
        let h = set(5, Domain::HighNoise);
        let l = set(3, Domain::LowNoise);
        let a: Vec<_> = UnpairedIterator::new(&h, &l, 9).unwrap().take(20)
            .map(|(x, y)| (x.source_id().to_string(), y.source_id().to_string())).collect();
        let b: Vec<_> = UnpairedIterator::new(&h, &l, 9).unwrap().take(20)
            .map(|(x, y)| (x.source_id().to_string(), y.source_id().to_string())).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_set_errors() {
        let h = set(2, Domain::HighNoise);
        assert!(UnpairedIterator::new(&h, &[], 0).is_err());
        assert!(UnpairedIterator::new(&[], &h, 0).is_err());
    }
}
