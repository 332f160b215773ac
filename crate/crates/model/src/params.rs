//! Flat parameter storage shared by all networks.

use rand::Rng;
use rand_distr::{Distribution, Normal};

/// One named parameter tensor, stored flat in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    pub params: Vec<Param>,
}

impl ParamSet {
    /// Adds a tensor drawn from `N(0, std)`; `std == 0` gives zeros.
    pub fn add<R: Rng + ?Sized>(&mut self, name: impl Into<String>, shape: &[usize], std: f64, rng: &mut R) -> usize {
        let n: usize = shape.iter().product();
        let data = if std > 0.0 {
            let dist = Normal::new(0.0, std).expect("positive std");
            (0..n).map(|_| dist.sample(rng)).collect()
        } else {
            vec![0.0; n]
        };
        self.params.push(Param {
            name: name.into(),
            shape: shape.to_vec(),
            data,
        });
        self.params.len() - 1
    }

    pub fn get(&self, idx: usize) -> &[f64] {
        &self.params[idx].data
    }

    pub fn count(&self) -> usize {
        self.params.iter().map(|p| p.data.len()).sum()
    }

    pub fn zero_grads(&self) -> Grads {
        Grads(self.params.iter().map(|p| vec![0.0; p.data.len()]).collect())
    }

    /// Copies values from `other`; names and shapes must match.
    pub fn load_from(&mut self, other: &ParamSet) -> Result<(), String> {
        if self.params.len() != other.params.len() {
            return Err(format!(
                "expected {} tensors, found {}",
                self.params.len(),
                other.params.len()
            ));
        }
        for (dst, src) in self.params.iter_mut().zip(&other.params) {
            if dst.name != src.name || dst.shape != src.shape {
                return Err(format!(
                    "tensor mismatch: {} {:?} vs {} {:?}",
                    dst.name, dst.shape, src.name, src.shape
                ));
            }
            dst.data.copy_from_slice(&src.data);
        }
        Ok(())
    }
}

/// Gradient buffers aligned with a [`ParamSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct Grads(pub Vec<Vec<f64>>);

impl Grads {
    pub fn slot(&mut self, idx: usize) -> &mut [f64] {
        &mut self.0[idx]
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().flatten().all(|&g| g == 0.0)
    }

    pub fn add_assign(&mut self, other: &Grads) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.0.iter().flatten().copied().collect()
    }
}
