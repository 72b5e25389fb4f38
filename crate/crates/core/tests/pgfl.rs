use ppinfo::measure::{prob_measure, PatternSet, QuadratureGrid};
use ppinfo::models::{gaussian_pdf, uniform_pdf, BaseSpace, CellLayout, PointPattern, PointProcessModel, Region};
use ppinfo::pgfl::{
    chain_differential, janossy_from_pgfl, nth_differential, pgfl_eval, projection_from_pgfl, Perturbation,
    TestFunction,
};
use ppinfo::units::UnitExp;
use ppinfo::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn desk(cells: usize) -> CellLayout {
    CellLayout::new(BaseSpace::desk(), cells).unwrap()
}

fn grid_for(m: &PointProcessModel) -> QuadratureGrid {
    QuadratureGrid::for_model(m, 1e-10).unwrap()
}

fn poisson_desk() -> PointProcessModel {
    PointProcessModel::poisson_constant(desk(100), 0.5).unwrap()
}

fn bernoulli_desk(q: f64) -> PointProcessModel {
    let l = desk(100);
    let pdf = uniform_pdf(&l);
    PointProcessModel::multi_bernoulli(l, vec![(q, pdf)]).unwrap()
}

fn all_models(cells: usize) -> Vec<PointProcessModel> {
    let l = desk(cells);
    let bump = gaussian_pdf(&l, &[3.0], 1.5).unwrap();
    vec![
        PointProcessModel::poisson_constant(l.clone(), 0.5).unwrap(),
        PointProcessModel::poisson_fn(l.clone(), |x| 0.1 + 0.06 * x[0]).unwrap(),
        PointProcessModel::iid_cluster(l.clone(), vec![0.2, 0.3, 0.4, 0.1], bump.clone()).unwrap(),
        PointProcessModel::multi_bernoulli(l.clone(), vec![(0.6, bump), (0.3, uniform_pdf(&l))]).unwrap(),
        PointProcessModel::empty_only(l),
    ]
}

fn iv(lo: f64, hi: f64) -> Region {
    Region::interval(&BaseSpace::desk(), lo, hi).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn random_h(layout: &CellLayout, rng: &mut ChaCha8Rng) -> TestFunction {
    TestFunction::new((0..layout.len()).map(|_| rng.random::<f64>()).collect()).unwrap()
}

#[test]
fn pgfl_eval_examples() {
    let m = poisson_desk();
    let g = grid_for(&m);
    let l = m.layout();
    let at = |v: f64| pgfl_eval(&m, &TestFunction::constant(l, v).unwrap(), &g).unwrap();
    assert!((at(1.0) - 1.0).abs() < 1e-6);
    assert!((at(0.0) - (-5.0f64).exp()).abs() < 1e-15);
    assert!((at(0.8) - (-1.0f64).exp()).abs() < 1e-6);
}

#[test]
fn g_of_one_is_one_for_every_model() {
    for m in all_models(40) {
        let one = TestFunction::constant(m.layout(), 1.0).unwrap();
        let v = pgfl_eval(&m, &one, &grid_for(&m)).unwrap();
        assert!((v - 1.0).abs() < 1e-6, "{:?}: {v}", m.tag());
    }
}

#[test]
fn chain_differential_of_poisson_along_indicator() {
    let m = poisson_desk();
    let g = grid_for(&m);
    let zero = TestFunction::constant(m.layout(), 0.0).unwrap();
    let d = chain_differential(&m, &zero, &Perturbation::Indicator(iv(0.0, 1.0)), &g).unwrap();
    assert_eq!(d.unit(), UnitExp::ZERO);
    // G(0)·∫1_B·λ, finite-differenced on the closed form exp(∫(h−1)λ)
    let closed = |eps: f64| (0.5 * eps - 5.0f64).exp();
    let oracle = (closed(1e-6) - closed(-1e-6)) / 2e-6;
    assert!(rel(d.value(), oracle) < 1e-6);
    assert!((d.value() - 0.0033690).abs() < 5e-8);
}

#[test]
fn chain_differential_along_dirac_recovers_first_janossy() {
    let m = poisson_desk();
    let g = grid_for(&m);
    let zero = TestFunction::constant(m.layout(), 0.0).unwrap();
    let d = chain_differential(&m, &zero, &Perturbation::Dirac(vec![4.33]), &g).unwrap();
    assert_eq!(d.unit(), UnitExp::integer(-1));
    let j = m.janossy(&PointPattern::line(&[4.33])).unwrap();
    assert!(rel(d.value(), j.value()) < 1e-4);
    assert!(rel(d.value(), 0.5 * (-5.0f64).exp()) < 1e-4);
}

#[test]
fn zero_perturbation_gives_exact_zero() {
    let m = poisson_desk();
    let h = TestFunction::constant(m.layout(), 0.3).unwrap();
    let d = chain_differential(&m, &h, &Perturbation::Field(vec![0.0; 100]), &grid_for(&m)).unwrap();
    assert_eq!(d.value(), 0.0);
}

#[test]
fn second_differential_with_indicators_matches_projection() {
    let m = poisson_desk();
    let g = grid_for(&m);
    let zero = TestFunction::constant(m.layout(), 0.0).unwrap();
    let (b1, b2) = (iv(0.0, 1.0), iv(2.0, 3.5));
    let d = nth_differential(
        &m,
        &zero,
        &[Perturbation::Indicator(b1.clone()), Perturbation::Indicator(b2.clone())],
        &g,
    )
    .unwrap();
    // 2!·P^(2)(B1×B2) = e^{-5}·λ²·|B1||B2|
    let closed = (-5.0f64).exp() * 0.25 * 1.0 * 1.5;
    assert!(rel(d.value(), closed) < 1e-4);
    let slice = PatternSet::new().with_slice(vec![b1, b2]).unwrap();
    let p2 = prob_measure(&m, &slice, &g).unwrap();
    assert!(rel(d.value() / 2.0, p2) < 1e-4);
}

#[test]
fn mixed_differentials_are_symmetric() {
    let l = desk(50);
    let m = PointProcessModel::iid_cluster(l.clone(), vec![0.1, 0.3, 0.4, 0.2], gaussian_pdf(&l, &[4.0], 2.0).unwrap())
        .unwrap();
    let g = grid_for(&m);
    let h = TestFunction::constant(&l, 0.4).unwrap();
    let e1 = Perturbation::Indicator(iv(1.0, 3.0));
    let e2 = Perturbation::Field((0..50).map(|c| (c as f64 * 0.2).cos()).collect());
    let a = nth_differential(&m, &h, &[e1.clone(), e2.clone()], &g).unwrap().value();
    let b = nth_differential(&m, &h, &[e2, e1], &g).unwrap().value();
    assert!(rel(a, b) < 1e-5, "{a} vs {b}");
}

#[test]
fn zeroth_differential_is_g_itself() {
    for m in all_models(30) {
        let g = grid_for(&m);
        let h = TestFunction::from_fn(m.layout(), |x| 0.2 + 0.07 * x[0]).unwrap();
        let d = nth_differential(&m, &h, &[], &g).unwrap();
        assert_eq!(d.unit(), UnitExp::ZERO);
        assert_eq!(d.value(), pgfl_eval(&m, &h, &g).unwrap());
    }
}

#[test]
fn order_above_three_is_rejected() {
    let m = poisson_desk();
    let zero = TestFunction::constant(m.layout(), 0.0).unwrap();
    let etas = vec![Perturbation::Indicator(iv(0.0, 1.0)); 4];
    assert!(matches!(
        nth_differential(&m, &zero, &etas, &grid_for(&m)),
        Err(Error::DifferentialOrder(4))
    ));
}

#[test]
fn janossy_from_pgfl_examples() {
    let p = poisson_desk();
    let g = grid_for(&p);
    let empty = janossy_from_pgfl(&p, &PointPattern::line(&[]), &g).unwrap();
    assert_eq!(empty.unit(), UnitExp::ZERO);
    assert_eq!(empty.value(), pgfl_eval(&p, &TestFunction::constant(p.layout(), 0.0).unwrap(), &g).unwrap());
    assert!(rel(empty.value(), (-5.0f64).exp()) < 1e-12);

    let x = PointPattern::line(&[6.71]);
    let v = janossy_from_pgfl(&p, &x, &g).unwrap();
    assert_eq!(v.unit(), UnitExp::integer(-1));
    assert!(rel(v.value(), p.janossy(&x).unwrap().value()) < 1e-4);

    let mb = bernoulli_desk(0.5);
    let v = janossy_from_pgfl(&mb, &x, &grid_for(&mb)).unwrap();
    assert_eq!(v.unit(), UnitExp::integer(-1));
    assert!(rel(v.value(), 0.05) < 1e-4);
}

#[test]
fn janossy_from_pgfl_two_points() {
    let l = desk(40);
    let models = [
        PointProcessModel::poisson_fn(l.clone(), |x| 0.2 + 0.05 * x[0]).unwrap(),
        PointProcessModel::multi_bernoulli(
            l.clone(),
            vec![(0.7, gaussian_pdf(&l, &[3.0], 1.5).unwrap()), (0.4, uniform_pdf(&l))],
        )
        .unwrap(),
    ];
    let phi = PointPattern::line(&[2.1, 7.4]);
    for m in &models {
        let v = janossy_from_pgfl(m, &phi, &grid_for(m)).unwrap();
        assert_eq!(v.unit(), UnitExp::integer(-2));
        let j = m.janossy(&phi).unwrap().value();
        assert!(rel(v.value(), j) < 1e-4, "{:?}: {} vs {j}", m.tag(), v.value());
    }
    // a single Bernoulli component cannot place two points; what remains is
    // round-off amplified by two nested 1/(ε·|B|) quotients
    let single = bernoulli_desk(0.5);
    let v = janossy_from_pgfl(&single, &phi, &grid_for(&single)).unwrap();
    assert!(v.value().abs() < 1e-3 * 0.05 * 0.05, "{}", v.value());
    assert!(janossy_from_pgfl(&single, &PointPattern::line(&[1.0, 2.0, 3.0]), &grid_for(&single)).is_err());
}

#[test]
fn moyal_relation_for_every_model() {
    let boxes = [iv(0.0, 2.5), iv(5.0, 7.5), iv(7.5, 10.0)];
    for m in all_models(40) {
        let g = grid_for(&m);
        for n in 1..=2 {
            for start in 0..=(boxes.len() - n) {
                let regions: Vec<Region> = boxes[start..start + n].to_vec();
                let via_pgfl = projection_from_pgfl(&m, &regions, &g).unwrap();
                let set = PatternSet::new().with_slice(regions).unwrap();
                let direct = prob_measure(&m, &set, &g).unwrap();
                let ok = if direct == 0.0 {
                    via_pgfl.abs() < 1e-9
                } else {
                    rel(via_pgfl, direct) < 1e-4
                };
                assert!(ok, "{:?} n = {n}: {via_pgfl} vs {direct}", m.tag());
            }
        }
    }
}

#[test]
fn chain_differential_is_linear_in_direction() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for m in all_models(30) {
        let g = grid_for(&m);
        let h = random_h(m.layout(), &mut rng);
        let e1: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
        let e2: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (a, b) = (0.7, -1.9);
        let combo: Vec<f64> = e1.iter().zip(&e2).map(|(x, y)| a * x + b * y).collect();
        let d = |e: Vec<f64>| chain_differential(&m, &h, &Perturbation::Field(e), &g).unwrap().value();
        let lhs = d(combo);
        let rhs = a * d(e1) + b * d(e2);
        assert!((lhs - rhs).abs() < 1e-6, "{:?}: {lhs} vs {rhs}", m.tag());
    }
}

#[test]
fn series_matches_closed_form_on_random_test_functions() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for m in all_models(30) {
        let g = grid_for(&m);
        for _ in 0..20 {
            let h = random_h(m.layout(), &mut rng);
            let a = pgfl_eval(&m, &h, &g).unwrap();
            let b = m.pgfl_closed_form(&h).unwrap();
            assert!((a - b).abs() < 1e-6, "{:?}: {a} vs {b}", m.tag());
        }
    }
}

#[test]
fn pgfl_is_monotone_in_h() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for m in all_models(30) {
        let g = grid_for(&m);
        for _ in 0..10 {
            let lo: Vec<f64> = (0..30).map(|_| rng.random::<f64>()).collect();
            let hi: Vec<f64> = lo.iter().map(|&v| v + (1.0 - v) * rng.random::<f64>()).collect();
            let a = pgfl_eval(&m, &TestFunction::new(lo).unwrap(), &g).unwrap();
            let b = pgfl_eval(&m, &TestFunction::new(hi).unwrap(), &g).unwrap();
            assert!(a <= b + 1e-9, "{:?}: {a} > {b}", m.tag());
        }
    }
}

#[test]
fn indicator_outside_window_is_rejected() {
    assert!(Region::interval(&BaseSpace::desk(), 9.0, 11.0).is_err());
}
