use super::*;
use crate::pgfl::TestFunction;

fn desk(cells: usize) -> CellLayout {
    CellLayout::new(BaseSpace::desk(), cells).unwrap()
}

fn poisson_desk() -> PointProcessModel {
    PointProcessModel::poisson_constant(desk(100), 0.5).unwrap()
}

fn bernoulli_desk(q: f64) -> PointProcessModel {
    let l = desk(100);
    let pdf = uniform_pdf(&l);
    PointProcessModel::multi_bernoulli(l, vec![(q, pdf)]).unwrap()
}

fn mixed_bernoulli(cells: usize) -> PointProcessModel {
    let l = desk(cells);
    let a = gaussian_pdf(&l, &[3.0], 1.5).unwrap();
    let b = gaussian_pdf(&l, &[7.0], 2.0).unwrap();
    let c = uniform_pdf(&l);
    PointProcessModel::multi_bernoulli(l, vec![(0.3, a), (0.8, b), (0.55, c)]).unwrap()
}

/// Σ over all cell tuples of p^(n)·vol^n, by enumeration.
fn brute_slice_mass(model: &PointProcessModel, n: usize) -> f64 {
    let m = model.layout().len();
    let vol = model.layout().cell_volume();
    let mut idx = vec![0usize; n];
    let mut total = 0.0;
    loop {
        total += model.janossy_cells(&idx) * vol.powi(n as i32);
        let mut j = n;
        loop {
            if j == 0 {
                return total;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < m {
                break;
            }
            idx[j] = 0;
        }
    }
}

#[test]
fn poisson_janossy_values_and_units() {
    let m = poisson_desk();
    let p0 = m.janossy(&PointPattern::line(&[])).unwrap();
    assert!((p0.value() - (-5.0f64).exp()).abs() < 1e-15);
    assert_eq!(p0.unit(), UnitExp::ZERO);
    let p1 = m.janossy(&PointPattern::line(&[3.7])).unwrap();
    assert!((p1.value() - 0.5 * (-5.0f64).exp()).abs() < 1e-15);
    assert_eq!(p1.unit(), UnitExp::integer(-1));
    let p3 = m.janossy(&PointPattern::line(&[1.0, 2.0, 9.9])).unwrap();
    assert!((p3.value() - (-5.0f64).exp() * 0.125 / 6.0).abs() < 1e-16);
    assert_eq!(p3.unit(), UnitExp::integer(-3));
}

#[test]
fn bernoulli_janossy_values() {
    let m = bernoulli_desk(0.5);
    let p0 = m.janossy(&PointPattern::line(&[])).unwrap();
    assert!((p0.value() - 0.5).abs() < 1e-15);
    let p1 = m.janossy(&PointPattern::line(&[4.2])).unwrap();
    assert!((p1.value() - 0.05).abs() < 1e-15);
    assert_eq!(p1.unit(), UnitExp::integer(-1));
    assert_eq!(m.janossy(&PointPattern::line(&[1.0, 2.0])).unwrap().value(), 0.0);
}

#[test]
fn janossy_rejects_invalid_patterns() {
    let m = poisson_desk();
    assert!(matches!(
        m.janossy(&PointPattern::line(&[11.0])),
        Err(Error::OutOfWindow { .. })
    ));
    assert!(matches!(
        m.janossy(&PointPattern::line(&[2.0, 2.0])),
        Err(Error::DuplicatePoints)
    ));
    let planar = PointPattern::from_points(2, &[vec![1.0, 1.0]]).unwrap();
    assert!(matches!(m.janossy(&planar), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn janossy_is_exactly_permutation_symmetric() {
    let m = mixed_bernoulli(40);
    let phi = PointPattern::line(&[0.3, 6.1, 8.75]);
    let base = m.janossy(&phi).unwrap();
    for perm in [[0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
        assert_eq!(m.janossy(&phi.permuted(&perm)).unwrap(), base);
    }
}

#[test]
fn cardinality_pmf_examples() {
    let p = poisson_desk();
    assert!((p.cardinality_pmf(2) - 0.084224337488569).abs() < 1e-12);
    let e = PointProcessModel::empty_only(desk(10));
    assert_eq!(e.cardinality_pmf(0), 1.0);
    assert_eq!(e.cardinality_pmf(1), 0.0);
    assert_eq!(e.cardinality_pmf(7), 0.0);
    assert!((bernoulli_desk(0.5).cardinality_pmf(1) - 0.5).abs() < 1e-15);
}

#[test]
fn cardinality_pmf_matches_slice_quadrature() {
    let p = PointProcessModel::poisson_constant(desk(12), 0.5).unwrap();
    for n in 0..=3 {
        assert!((brute_slice_mass(&p, n) - p.cardinality_pmf(n)).abs() < 1e-12, "n = {n}");
    }
    let mb = mixed_bernoulli(12);
    let mut total = 0.0;
    for n in 0..=3 {
        let brute = brute_slice_mass(&mb, n);
        assert!((brute - mb.cardinality_pmf(n)).abs() < 1e-12, "n = {n}");
        total += brute;
    }
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn slice_linear_matches_enumeration_for_mixtures() {
    let mb = mixed_bernoulli(10);
    let l = mb.layout().clone();
    let w1: Vec<f64> = (0..10).map(|c| (c as f64 * 0.37).sin()).collect();
    let w2: Vec<f64> = (0..10).map(|c| 1.0 - c as f64 / 10.0).collect();
    let mut brute = 0.0;
    for a in 0..10 {
        for b in 0..10 {
            brute += w1[a] * w2[b] * mb.janossy_cells(&[a, b]) * l.cell_volume().powi(2);
        }
    }
    assert!((mb.slice_linear(&[&w1, &w2]) - brute).abs() < 1e-14);
}

#[test]
fn normalization_under_tail_rule() {
    let l = desk(20);
    let pdf = gaussian_pdf(&l, &[5.0], 2.0).unwrap();
    let models = [
        PointProcessModel::poisson_constant(l.clone(), 0.5).unwrap(),
        PointProcessModel::poisson_fn(l.clone(), |x| 0.2 + 0.1 * x[0]).unwrap(),
        PointProcessModel::iid_cluster(l.clone(), vec![0.1, 0.2, 0.3, 0.4], pdf.clone()).unwrap(),
        mixed_bernoulli(20),
        PointProcessModel::empty_only(l),
    ];
    for m in &models {
        let n_max = m.truncation_order(1e-10);
        let mass: f64 = (0..=n_max).map(|n| m.cardinality_pmf(n)).sum();
        assert!(mass >= 1.0 - 1e-8, "{:?}: {mass}", m.tag());
        assert!(m.tail_mass(n_max) < 1e-10);
    }
}

#[test]
fn poisson_tail_matches_series_oracle() {
    let m = poisson_desk();
    // 1 − Σ_{n ≤ 10} e^{-5} 5^n/n!, summed independently
    let mut term = (-5.0f64).exp();
    let mut head = term;
    for n in 1..=10 {
        term *= 5.0 / n as f64;
        head += term;
    }
    assert!((m.tail_mass(10) - (1.0 - head)).abs() < 1e-14);
}

#[test]
fn model_validation() {
    let l = desk(10);
    assert!(PointProcessModel::poisson(l.clone(), vec![-1.0; 10]).is_err());
    assert!(PointProcessModel::poisson(l.clone(), vec![1.0; 9]).is_err());
    assert!(PointProcessModel::iid_cluster(l.clone(), vec![0.5, 0.4], uniform_pdf(&l)).is_err());
    assert!(PointProcessModel::iid_cluster(l.clone(), vec![0.5, 0.5], vec![1.0; 10]).is_err());
    assert!(PointProcessModel::multi_bernoulli(l.clone(), vec![(1.5, uniform_pdf(&l))]).is_err());
    let too_many = vec![(0.1, uniform_pdf(&l)); MAX_COMPONENTS + 1];
    assert!(PointProcessModel::multi_bernoulli(l, too_many).is_err());
}

#[test]
fn sampler_is_deterministic_and_in_window() {
    let m = mixed_bernoulli(50);
    for seed in 0..50 {
        let a = m.sample(seed);
        assert_eq!(a, m.sample(seed));
        assert!(a.points().all(|x| m.space().contains(x)));
    }
    let e = PointProcessModel::empty_only(desk(10));
    assert!((0..20).all(|s| e.sample(s).is_empty()));
}

#[test]
fn sampler_poisson_mean() {
    let m = poisson_desk();
    let n = 100_000u64;
    let mean = (0..n).map(|s| m.sample(s).len() as f64).sum::<f64>() / n as f64;
    assert!((mean - 5.0).abs() < 3.0 * (5.0 / n as f64).sqrt(), "mean {mean}");
}

#[test]
fn sampler_bernoulli_empty_frequency() {
    let m = bernoulli_desk(0.5);
    let n = 100_000u64;
    let freq = (0..n).filter(|&s| m.sample(s).is_empty()).count() as f64 / n as f64;
    assert!((freq - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt(), "freq {freq}");
}

#[test]
fn sampler_frequencies_match_pmf() {
    let m = mixed_bernoulli(30);
    let n = 100_000u64;
    let mut counts = [0usize; 4];
    for s in 0..n {
        counts[m.sample(s).len()] += 1;
    }
    for (k, &c) in counts.iter().enumerate() {
        let p = m.cardinality_pmf(k);
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((c as f64 / n as f64 - p).abs() < 3.0 * se + 1e-12, "n = {k}");
    }
}

#[test]
fn pgfl_closed_form_examples() {
    let p = poisson_desk();
    let l = p.layout().clone();
    let one = TestFunction::constant(&l, 1.0).unwrap();
    let h08 = TestFunction::constant(&l, 0.8).unwrap();
    let zero = TestFunction::constant(&l, 0.0).unwrap();
    assert!((p.pgfl_closed_form(&one).unwrap() - 1.0).abs() < 1e-12);
    assert!((p.pgfl_closed_form(&h08).unwrap() - (-1.0f64).exp()).abs() < 1e-12);
    assert!((bernoulli_desk(0.5).pgfl_closed_form(&zero).unwrap() - 0.5).abs() < 1e-15);
    assert!((mixed_bernoulli(100).pgfl_closed_form(&one).unwrap() - 1.0).abs() < 1e-12);
    let e = PointProcessModel::empty_only(l);
    assert_eq!(e.pgfl_closed_form(&zero).unwrap(), 1.0);
}

#[test]
fn relabel_rescales_fields_and_keeps_probabilities() {
    let m = mixed_bernoulli(20);
    let r = m.relabel(1000.0);
    assert_eq!(r.space().bounds(), &[(0.0, 10_000.0)]);
    for n in 0..=3 {
        assert!((m.cardinality_pmf(n) - r.cardinality_pmf(n)).abs() < 1e-14);
    }
    let phi = PointPattern::line(&[2.5, 7.5]);
    let phi_r = phi.relabel(m.space(), 1000.0);
    let a = m.janossy(&phi).unwrap().value();
    let b = r.janossy(&phi_r).unwrap().value();
    assert!((b - a * 1e-6).abs() < 1e-12 * a);
}
