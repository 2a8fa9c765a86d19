//! The constant-modulus projection must largely preserve the effective gain
//! distribution: over many runs the mean per-stream gain of the hybrid
//! solver stays close to the digital one.

use hybrid_precoding::channel::{run_rng, sample_scenario_with_rng, synthesize_channel, ArrayGeometry};
use hybrid_precoding::evaluation::{gain_histogram, Algorithm, ScenarioConfig};
use hybrid_precoding::mat::CMat;
use hybrid_precoding::precoding::{run_h_lisa, run_lisa};

#[test]
fn hybrid_projection_preserves_mean_gain() {
    let bs = ArrayGeometry::new(8, 8);
    let ms = ArrayGeometry::linear(1);
    let runs = 1000;
    let mut digital_gains = Vec::new();
    let mut hybrid_gains = Vec::new();
    for run in 0..runs {
        let mut rng = run_rng(1, run);
        let sets = sample_scenario_with_rng(&mut rng, 8, 3);
        let channels: Vec<CMat> = sets.iter().map(|p| synthesize_channel(p, bs, ms)).collect();
        let digital = run_lisa(&channels, 8, 1.0).unwrap();
        let hybrid = run_h_lisa(&channels, 8, 1.0).unwrap();
        assert!(digital.power.gains.iter().all(|&g| g > 0.0));
        assert!(hybrid.power.gains.iter().all(|&g| g > 0.0));
        digital_gains.extend(digital.power.gains.iter().copied());
        hybrid_gains.extend(hybrid.power.gains.iter().copied());
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let digital_mean = mean(&digital_gains);
    let hybrid_mean = mean(&hybrid_gains);
    let ratio = (hybrid_mean - digital_mean).abs() / digital_mean;
    assert!(
        ratio < 0.15,
        "mean gain changed by {:.1}%: digital {digital_mean:.3}, hybrid {hybrid_mean:.3}",
        ratio * 100.0
    );
}

#[test]
fn histogram_covers_both_solvers_with_shared_edges() {
    let config = ScenarioConfig {
        users: 8,
        paths_per_user: 3,
        bs_geometry: ArrayGeometry::new(8, 8),
        ms_geometry: ArrayGeometry::linear(1),
        bs_rf_chains: 8,
        ms_rf_chains: None,
        snr_grid_db: vec![0.0],
        runs: 50,
        seed: 1,
        algorithms: vec![Algorithm::Lisa, Algorithm::HLisa],
    };
    let hist = gain_histogram(&config, 0.0, 0.5).unwrap();
    assert_eq!(hist.counts.len(), 2);
    let totals: Vec<u64> = hist.counts.iter().map(|(_, c)| c.iter().sum()).collect();
    assert!(totals.iter().all(|&t| t > 0));
    // Same edge grid for every algorithm, starting at zero.
    assert_eq!(hist.edges[0], 0.0);
    assert_eq!(hist.counts[0].1.len(), hist.edges.len() - 1);
    assert_eq!(hist.counts[1].1.len(), hist.edges.len() - 1);
}
