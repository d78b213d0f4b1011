use entperc::pdl::{
    induced_scp_density, jones_concatenation, jones_concatenation_sample, maxwellian_density,
    maxwellian_mean, maxwellian_scale_for_mean, mean_scp, pdl_from_scp, sample_pdl, sample_scp,
    scp_from_pdl, weak_element_chain, weak_pdl_mean_approx, Budget, JonesMatrix, MeanMethod,
    PdlModel, PdlSpec,
};
use entperc::quadrature::integrate;
use entperc::rng::RandomStream;
use entperc::stats::{ks_one_sample, ks_two_sample, ks_two_sample_critical};
use entperc::ScpDistribution;
use std::f64::consts::{LN_10, PI};

const LIN_JIANG: [f64; 5] = [0.8, 1.2, 1.4, 1.0, 0.7];

// Maxwell CDF written out independently of the library.
fn maxwell_cdf(a: f64, p: f64) -> f64 {
    let z = p / a;
    libm::erf(z / 2f64.sqrt()) - (2.0 / PI).sqrt() * z * (-z * z / 2.0).exp()
}

#[test]
fn map_round_trip_on_0_to_60_db() {
    for i in 0..=60_000 {
        let p = i as f64 * 1e-3;
        let x = scp_from_pdl(p).unwrap();
        let back = pdl_from_scp(x).unwrap();
        assert!((back - p).abs() <= 1e-12 * p.max(1.0), "P={p}: {back}");
    }
    for i in 0..=10_000 {
        let x = 1e-6 + (1.0 - 1e-6) * i as f64 / 10_000.0;
        let back = scp_from_pdl(pdl_from_scp(x).unwrap()).unwrap();
        assert!((back - x).abs() <= 1e-12);
    }
}

#[test]
fn map_reference_points() {
    assert_eq!(scp_from_pdl(0.0).unwrap(), 1.0);
    assert!((scp_from_pdl(10.0).unwrap() - 2.0 / 11.0).abs() < 1e-15);
    assert!((pdl_from_scp(2.0 / 11.0).unwrap() - 10.0).abs() < 1e-12);
    assert!(scp_from_pdl(100.0).unwrap() < 1e-9);
    let x = 2.0 / (1.0 + 10f64.powf(0.235));
    assert!((pdl_from_scp(x).unwrap() - 2.35).abs() < 1e-12);
    assert!(scp_from_pdl(-0.1).is_err());
    assert!(pdl_from_scp(0.0).is_err());
    assert!(pdl_from_scp(1.01).is_err());
    let xs: Vec<f64> = (0..1000).map(|i| scp_from_pdl(i as f64 * 0.05).unwrap()).collect();
    assert!(xs.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn maxwellian_moments_by_quadrature() {
    for mean in [0.1, 1.0, 2.35, 5.0] {
        let a = maxwellian_scale_for_mean(mean);
        assert!((a - mean * (PI / 2.0).sqrt() / 2.0).abs() < 1e-15);
        let mass = integrate(|p| maxwellian_density(a, p).unwrap(), 0.0, 40.0 * a, 1e-12).unwrap();
        let m1 = integrate(|p| p * maxwellian_density(a, p).unwrap(), 0.0, 40.0 * a, 1e-12).unwrap();
        assert!((mass.value - 1.0).abs() < 1e-9);
        assert!((m1.value - 2.0 * a * (2.0 / PI).sqrt()).abs() < 1e-9);
        assert!((maxwellian_mean(a) - mean).abs() < 1e-12);
    }
    assert!(maxwellian_density(0.0, 1.0).is_err());
}

#[test]
fn induced_density_normalised() {
    for mean_db in [0.1, 1.0, 2.35, 6.0] {
        let model = PdlModel::maxwellian(mean_db).unwrap();
        let total = integrate(|x| induced_scp_density(&model, x).unwrap(), 0.0, 1.0, 1e-10).unwrap();
        assert!((total.value - 1.0).abs() <= 1e-6, "mean {mean_db}: {}", total.value);
    }
    let link = PdlModel::concatenated_link(LIN_JIANG.to_vec()).unwrap();
    assert!(induced_scp_density(&link, 0.5).is_err());
}

#[test]
fn sampled_pushforward_matches_analytic_cdf() {
    let n = 1_000_000;
    let model = PdlModel::maxwellian(2.35).unwrap();
    let a = maxwellian_scale_for_mean(2.35);
    let mut xs = sample_scp(&model, n, 2024);
    xs.sort_by(f64::total_cmp);
    // F_X(x) = P(P ≥ P(x))
    let d = ks_one_sample(&xs, |x| 1.0 - maxwell_cdf(a, pdl_from_scp(x.clamp(1e-300, 1.0)).unwrap()));
    let band = 4.0 * ((2.0f64 / 0.001).ln() / (2.0 * n as f64)).sqrt();
    assert!(d <= 0.005 && d <= band, "KS {d} (band {band})");

    let dist = ScpDistribution::pdl_induced(PdlSpec::Maxwellian { mean_db: 2.35 }).unwrap();
    let d2 = ks_one_sample(&xs, |x| dist.cdf(x));
    assert!(d2 <= 0.005);
}

#[test]
fn point_mass_pdl_pushes_to_point_scp() {
    let model = PdlModel::concatenated_link(vec![3.0]).unwrap();
    let target = scp_from_pdl(3.0).unwrap();
    assert!(sample_scp(&model, 1000, 1).iter().all(|&x| (x - target).abs() < 1e-12));
    let zero = PdlModel::concatenated_link(vec![0.0]).unwrap();
    let m = mean_scp(&zero, &Budget::default()).unwrap();
    assert_eq!(m.mean, 1.0);
    assert_eq!(m.method, MeanMethod::Exact);
}

#[test]
fn concatenation_bounds_and_unitarity() {
    let mut rng = RandomStream::new(3);
    for _ in 0..2000 {
        let u = JonesMatrix::haar_unitary(&mut rng);
        assert!(u.unitarity_defect() <= 1e-12);
    }
    let elements = [0.5, 3.0, 0.7, 1.1];
    let total: f64 = elements.iter().sum();
    let largest = elements.iter().cloned().fold(0.0, f64::max);
    let lower = (2.0 * largest - total).max(0.0);
    for _ in 0..20_000 {
        let p = jones_concatenation_sample(&elements, &mut rng).unwrap();
        assert!(p >= lower - 1e-9 && p <= total + 1e-9, "{p}");
    }
    assert!(jones_concatenation_sample(&[-1.0], &mut rng).is_err());
}

#[test]
fn aligned_and_crossed_couplings() {
    let id = [JonesMatrix::IDENTITY, JonesMatrix::IDENTITY];
    assert!((jones_concatenation(&[1.3, 2.1], &id).unwrap() - 3.4).abs() < 1e-12);
    let crossed = [JonesMatrix::IDENTITY, JonesMatrix::rotation(PI / 2.0)];
    assert!((jones_concatenation(&[1.3, 2.1], &crossed).unwrap() - 0.8).abs() < 1e-12);
    let mut rng = RandomStream::new(9);
    for _ in 0..100 {
        assert!((jones_concatenation_sample(&[3.0], &mut rng).unwrap() - 3.0).abs() < 1e-12);
    }
}

#[test]
fn permutation_symmetry() {
    let n = 100_000;
    let mut forward = sample_pdl(&PdlModel::concatenated_link(LIN_JIANG.to_vec()).unwrap(), n, 11);
    let mut permuted = LIN_JIANG.to_vec();
    permuted.reverse();
    permuted.swap(0, 2);
    let mut shuffled = sample_pdl(&PdlModel::concatenated_link(permuted).unwrap(), n, 12);
    forward.sort_by(f64::total_cmp);
    shuffled.sort_by(f64::total_cmp);
    let d = ks_two_sample(&forward, &shuffled);
    assert!(d <= ks_two_sample_critical(n, n, 1e-3), "KS {d}");
}

#[test]
fn weak_pdl_expansion() {
    let model = PdlModel::maxwellian(0.1).unwrap();
    let exact = mean_scp(&model, &Budget::default()).unwrap();
    assert_eq!(exact.method, MeanMethod::Quadrature);
    let approx = weak_pdl_mean_approx(0.1).unwrap();
    assert!((approx - (1.0 - LN_10 / 20.0 * 0.1)).abs() < 1e-15);
    assert!((exact.mean - approx).abs() <= 1e-4);
    // 2.35 dB is outside the weak regime
    let strong = mean_scp(&PdlModel::maxwellian(2.35).unwrap(), &Budget::default()).unwrap();
    let approx = weak_pdl_mean_approx(2.35).unwrap();
    assert!((approx - 0.7294).abs() < 1e-3);
    assert!((strong.mean - approx).abs() > 5e-3);
    assert_eq!(weak_pdl_mean_approx(0.0).unwrap(), 1.0);
}

#[test]
fn weak_chain_calibration() {
    let model = weak_element_chain(2.35, 200, 5).unwrap();
    let ps = sample_pdl(&model, 200_000, 99);
    let mean = ps.iter().sum::<f64>() / ps.len() as f64;
    assert!((mean - 2.35).abs() <= 0.02, "chain mean {mean}");
    let single = weak_element_chain(2.35, 1, 5).unwrap();
    assert_eq!(single.deterministic_pdl(), Some(2.35));
}

#[test]
fn lin_jiang_mean_scp() {
    let model = PdlModel::concatenated_link(LIN_JIANG.to_vec()).unwrap();
    let m = mean_scp(&model, &Budget { samples: 1_000_000, seed: 1, tolerance: 1e-10 }).unwrap();
    assert_eq!(m.method, MeanMethod::MonteCarlo);
    assert!((m.mean - 0.755).abs() <= 0.005, "{}", m.mean);
    assert!(m.stderr < 1e-3);
}

#[test]
fn samplers_are_deterministic() {
    let model = PdlModel::concatenated_link(LIN_JIANG.to_vec()).unwrap();
    let a = sample_pdl(&model, 40_000, 7);
    let b = sample_pdl(&model, 40_000, 7);
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
}
