use maxnorm::density::{closed_form_density2, Point2};
use maxnorm::khintchine::{
    empirical_maxnorm_cdf, ks_critical_value_001, ks_statistic, row_radius, sample_chi3, sample_joint, SampleBatch,
};
use maxnorm::quadrature::{self, IntegrandSpec};
use maxnorm::specfun::std_normal_quantile;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

#[test]
fn chi3_moments() {
    let n = 1_000_000u64;
    let ys: Vec<f64> = (0..n).into_par_iter().map(|i| row_radius(3, i)).collect();
    let nf = n as f64;
    let ey = mean(&ys);
    let ey2 = ys.iter().map(|y| y * y).sum::<f64>() / nf;
    // Var(Y²) = E[Y⁴] - 9 = 15 - 9.
    assert!((ey2 - 3.0).abs() <= 3.0 * (6.0 / nf).sqrt(), "E[Y²]={ey2}");
    let mu = 2.0 * (2.0 / std::f64::consts::PI).sqrt();
    assert!((mu - 1.595_769_121_6).abs() < 1e-10);
    assert!((ey - mu).abs() <= 3.0 * ((3.0 - mu * mu) / nf).sqrt(), "E[Y]={ey}");
    assert!(ys.iter().all(|&y| y > 0.0));
}

#[test]
fn chi3_first_draw_is_reproducible() {
    let a = sample_chi3(&mut ChaCha20Rng::seed_from_u64(42));
    let b = sample_chi3(&mut ChaCha20Rng::seed_from_u64(42));
    assert_eq!(a.to_bits(), b.to_bits());
    assert!(a > 0.0);
}

#[test]
fn rows_bounded_by_their_radius() {
    let batch = sample_joint(4, 2000, 11).unwrap();
    for (i, row) in batch.rows().enumerate() {
        let y = row_radius(11, i as u64);
        assert!(row.iter().all(|x| x.abs() <= y), "row {i}");
    }
}

#[test]
fn joint_sample_is_bit_reproducible() {
    let a = sample_joint(3, 5000, 99).unwrap();
    let b = sample_joint(3, 5000, 99).unwrap();
    assert_eq!(a, b);
    assert!(a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
    // Rows do not depend on how many rows are drawn.
    let short = sample_joint(3, 10, 99).unwrap();
    assert_eq!(short.data(), &a.data()[..30]);
    assert_ne!(sample_joint(3, 10, 100).unwrap().data(), short.data());
}

#[test]
fn univariate_moments() {
    let n = 100_000;
    let batch = sample_joint(1, n, 5).unwrap();
    let xs = batch.column(0);
    let m = mean(&xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
    let nf = n as f64;
    assert!(m.abs() <= 3.0 / nf.sqrt(), "mean {m}");
    assert!((var - 1.0).abs() <= 3.0 * (2.0 / nf).sqrt(), "var {var}");
}

#[test]
fn columns_are_standard_normal() {
    let n = 200_000;
    let batch = sample_joint(2, n, 1).unwrap();
    let crit = ks_critical_value_001(n);
    assert!((crit - 0.003_645).abs() < 1e-6);
    for j in 0..2 {
        let d = ks_statistic(&batch.column(j)).unwrap();
        assert!(d <= crit, "column {j}: {d}");
    }
}

#[test]
fn ks_oracle_cases() {
    let n = 100_000;
    let perfect: Vec<f64> = (0..n)
        .map(|i| std_normal_quantile((i as f64 + 0.5) / n as f64))
        .collect();
    assert!(ks_statistic(&perfect).unwrap() <= 1.0 / n as f64);

    // An independent normal stream: inverse-transform of ChaCha uniforms on a distinct seed.
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    let normal: Vec<f64> = (0..n)
        .map(|_| {
            let u = ((rand_chacha::rand_core::RngCore::next_u64(&mut rng) >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
            std_normal_quantile(u)
        })
        .collect();
    assert!(ks_statistic(&normal).unwrap() <= 0.005_16);

    let uniform: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * (i as f64 + 0.5) / n as f64).collect();
    assert!(ks_statistic(&uniform).unwrap() >= 0.1);
}

#[test]
fn magnitude_dependence_and_column_correlation() {
    let n = 100_000;
    let batch = sample_joint(2, n, 17).unwrap();
    let (c1, c2) = (batch.column(0), batch.column(1));
    let a1: Vec<f64> = c1.iter().map(|x| x.abs()).collect();
    let a2: Vec<f64> = c2.iter().map(|x| x.abs()).collect();
    assert!(correlation(&a1, &a2) > 0.2);
    assert!(correlation(&c1, &c2).abs() <= 3.0 / (n as f64).sqrt());
}

#[test]
fn maxnorm_cdf_matches_shell_integral() {
    let n = 200_000;
    let batch = sample_joint(2, n, 1).unwrap();
    let q = quadrature::integrate(
        &IntegrandSpec::finite(
            |m: f64| 8.0 * m * closed_form_density2(Point2 { x1: m, x2: 0.0 }),
            0.0,
            1.0,
        ),
        1e-13,
    )
    .unwrap()
    .value;
    let e = empirical_maxnorm_cdf(&batch, 1.0);
    assert!((e - q).abs() <= 3.0 * (q * (1.0 - q) / n as f64).sqrt(), "{e} vs {q}");
    assert_eq!(empirical_maxnorm_cdf(&batch, 100.0), 1.0);
    assert_eq!(empirical_maxnorm_cdf(&batch, 0.0), 0.0);
    assert!(empirical_maxnorm_cdf(&batch, 0.5) <= e);
}

/// Probability of the cell [a1,b1]×[a2,b2] under the bivariate closed form.
fn cell_probability(a1: f64, b1: f64, a2: f64, b2: f64) -> f64 {
    let outer = |x1: f64| {
        let inner = |x2: f64| closed_form_density2(Point2 { x1, x2 });
        quadrature::integrate(&IntegrandSpec::finite(inner, a2, b2), 1e-13)
            .unwrap()
            .value
    };
    quadrature::integrate(&IntegrandSpec::finite(outer, a1, b1), 1e-12)
        .unwrap()
        .value
}

fn histogram(batch: &SampleBatch, bins: usize, lo: f64, hi: f64) -> Vec<u64> {
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins * bins];
    for row in batch.rows() {
        let i = ((row[0] - lo) / width).floor();
        let j = ((row[1] - lo) / width).floor();
        if (0.0..bins as f64).contains(&i) && (0.0..bins as f64).contains(&j) {
            counts[i as usize * bins + j as usize] += 1;
        }
    }
    counts
}

#[test]
fn histogram_matches_density() {
    let (bins, lo, hi) = (40usize, -2.5, 2.5);
    let n = 1_000_000;
    let batch = sample_joint(2, n, 8).unwrap();
    let counts = histogram(&batch, bins, lo, hi);
    let width = (hi - lo) / bins as f64;
    let edge = |k: usize| lo + width * k as f64;
    let probs: Vec<f64> = (0..bins * bins)
        .into_par_iter()
        .map(|c| {
            let (i, j) = (c / bins, c % bins);
            cell_probability(edge(i), edge(i + 1), edge(j), edge(j + 1))
        })
        .collect();
    let nf = n as f64;
    let z: Vec<f64> = counts
        .iter()
        .zip(&probs)
        .map(|(&k, &p)| (k as f64 - nf * p) / (nf * p * (1.0 - p)).sqrt())
        .collect();
    let worst = z.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mean_abs = z.iter().map(|v| v.abs()).sum::<f64>() / z.len() as f64;
    assert!(worst <= 5.0, "max |z| = {worst}");
    assert!(mean_abs <= 1.5, "mean |z| = {mean_abs}");
}
