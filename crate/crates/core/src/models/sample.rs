use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;

use super::{CellField, ModelKind, PointPattern, PointProcessModel};

impl PointProcessModel {
    /// Draws one realization; identical seeds give identical patterns.
    pub fn sample(&self, seed: u64) -> PointPattern {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng)
    }

    /// Draws the cardinality, then locations by inverse CDF over cell masses
    /// (uniform within the chosen cell). Entries are returned in random
    /// order so the tuple law is exchangeable.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> PointPattern {
        let d = self.space().dimension();
        let mut coords = Vec::new();
        match &self.kind {
            ModelKind::Poisson { intensity } => {
                let lambda = intensity.total();
                let n = if lambda > 0.0 {
                    Poisson::new(lambda).expect("positive mean").sample(rng) as usize
                } else {
                    0
                };
                for _ in 0..n {
                    self.push_point(intensity, rng, &mut coords);
                }
            }
            ModelKind::IidCluster {
                cardinality,
                spatial,
            } => {
                let n = WeightedIndex::new(cardinality)
                    .expect("validated pmf")
                    .sample(rng);
                for _ in 0..n {
                    self.push_point(spatial, rng, &mut coords);
                }
            }
            ModelKind::MultiBernoulli { components } => {
                let mut pts: Vec<Vec<f64>> = Vec::new();
                for c in components {
                    if rng.random::<f64>() < c.existence {
                        let mut p = Vec::with_capacity(d);
                        self.push_point(&c.pdf, rng, &mut p);
                        pts.push(p);
                    }
                }
                pts.shuffle(rng);
                coords = pts.concat();
            }
            ModelKind::EmptyOnly => {}
        }
        PointPattern::from_flat(d, coords)
    }

    fn push_point<R: Rng + ?Sized>(&self, field: &CellField, rng: &mut R, out: &mut Vec<f64>) {
        let cell = field.invert(rng.random::<f64>());
        for (lo, hi) in self.layout.cell_box(cell) {
            out.push(lo + (hi - lo) * rng.random::<f64>());
        }
    }
}
