//! Acceptance suite: reproduces the reference figure values at desk scale and
//! enforces the structural guarantees of every solver. One pass/fail line per
//! criterion (run with `--nocapture` to see the lines for passing criteria).

use hybrid_precoding::baselines::{dpc_sum_capacity, PowerMode};
use hybrid_precoding::channel::{
    run_rng, sample_scenario_with_rng, synthesize_channel, ArrayGeometry,
};
use hybrid_precoding::evaluation::{
    audit_solution, execute_algorithm, run_monte_carlo, Algorithm, ScenarioConfig, ScenarioData,
};
use hybrid_precoding::mat::{dot_conj, C64, CMat};
use hybrid_precoding::precoding::{
    apply_ms_analog_constraints, lc_select_stream, lisa_select_stream, run_h_lisa, run_lc_h_lisa,
    run_lc_lisa, run_lisa, waterfill, AllocationState,
};
use std::time::Instant;

const RUNS: usize = 1000;
const SEED: u64 = 1;
const MEAN_TOL: f64 = 1.0;

fn fig_config(
    paths: usize,
    ms_geometry: ArrayGeometry,
    ms_rf_chains: Option<usize>,
    algorithms: Vec<Algorithm>,
) -> ScenarioConfig {
    ScenarioConfig {
        users: 8,
        paths_per_user: paths,
        bs_geometry: ArrayGeometry::new(8, 8),
        ms_geometry,
        bs_rf_chains: 8,
        ms_rf_chains,
        snr_grid_db: vec![0.0],
        runs: RUNS,
        seed: SEED,
        algorithms,
    }
}

struct CriterionReport {
    name: &'static str,
    failures: Vec<String>,
    lines: Vec<String>,
}

impl CriterionReport {
    fn new(name: &'static str) -> Self {
        Self { name, failures: Vec::new(), lines: Vec::new() }
    }

    fn check_mean(&mut self, label: &str, measured: f64, expected: f64, tol: f64) {
        let ok = (measured - expected).abs() <= tol;
        self.lines
            .push(format!("  {label}: measured {measured:.3}, expected {expected} +/- {tol}"));
        if !ok {
            self.failures.push(format!(
                "{label}: measured {measured:.3} outside {expected} +/- {tol}"
            ));
        }
    }

    fn check(&mut self, label: &str, ok: bool, detail: String) {
        self.lines.push(format!("  {label}: {detail}"));
        if !ok {
            self.failures.push(format!("{label}: {detail}"));
        }
    }

    fn finish(self) {
        for line in &self.lines {
            println!("{line}");
        }
        if self.failures.is_empty() {
            println!("PASS {}", self.name);
        } else {
            println!("FAIL {}", self.name);
            panic!("{} failed:\n  {}", self.name, self.failures.join("\n  "));
        }
    }
}

fn mean_of(curve: &[hybrid_precoding::evaluation::CurvePoint], alg: Algorithm) -> f64 {
    let stat = curve[0]
        .stats
        .iter()
        .find(|s| s.algorithm == alg)
        .unwrap_or_else(|| panic!("algorithm {alg} missing from curve"));
    assert_eq!(stat.failures, 0, "{alg} recorded failures");
    stat.mean_sum_rate
}

#[test]
fn criterion_1_single_path_means_at_0db() {
    let algs = vec![
        Algorithm::TwoStage(PowerMode::Equal),
        Algorithm::TwoStage(PowerMode::Waterfilling),
        Algorithm::Lisa,
        Algorithm::HLisa,
        Algorithm::LcLisa,
        Algorithm::LcHLisa,
        Algorithm::Capacity,
    ];
    let config = fig_config(1, ArrayGeometry::linear(1), None, algs);
    let curve = run_monte_carlo(&config).unwrap();

    let mut report =
        CriterionReport::new("criterion 1: single-path 0 dB means (K=8, N_BS=64, N_MS=1, L=1)");
    report.check_mean("2SMUHPA+WF", mean_of(&curve, Algorithm::TwoStage(PowerMode::Waterfilling)), 18.0, MEAN_TOL);
    report.check_mean("2SMUHPA", mean_of(&curve, Algorithm::TwoStage(PowerMode::Equal)), 16.0, MEAN_TOL);
    for alg in [Algorithm::Lisa, Algorithm::HLisa, Algorithm::LcLisa, Algorithm::LcHLisa] {
        report.check_mean(&format!("{alg}"), mean_of(&curve, alg), 20.0, MEAN_TOL);
    }
    report.check_mean("capacity", mean_of(&curve, Algorithm::Capacity), 21.0, MEAN_TOL);

    // Single-path channels make the path-domain selection exact: per-run
    // rates of the full and path-domain solvers agree to 1e-6.
    let mut worst = 0.0f64;
    for run in 0..RUNS as u64 {
        let mut rng = run_rng(SEED, run);
        let sets = sample_scenario_with_rng(&mut rng, 8, 1);
        let channels: Vec<CMat> = sets
            .iter()
            .map(|s| synthesize_channel(s, config.bs_geometry, config.ms_geometry))
            .collect();
        let full = run_lisa(&channels, 8, 1.0).unwrap();
        let lc = run_lc_lisa(&sets, config.bs_geometry, config.ms_geometry, 8, 1.0).unwrap();
        let a = audit_solution(&full, &channels).unwrap();
        let b = audit_solution(&lc, &channels).unwrap();
        worst = worst.max((a - b).abs());
    }
    report.check(
        "LISA vs LC-LISA per-run rate agreement",
        worst < 1e-6,
        format!("largest per-run difference {worst:.3e} (tolerance 1e-6)"),
    );
    report.finish();
}

#[test]
fn criterion_2_three_path_means_at_0db() {
    let algs = vec![
        Algorithm::TwoStage(PowerMode::Equal),
        Algorithm::TwoStage(PowerMode::Waterfilling),
        Algorithm::Lisa,
        Algorithm::HLisa,
        Algorithm::Capacity,
    ];
    let config = fig_config(3, ArrayGeometry::linear(1), None, algs);
    let curve = run_monte_carlo(&config).unwrap();

    let mut report =
        CriterionReport::new("criterion 2: three-path 0 dB means (K=8, N_BS=64, N_MS=1, L=3)");
    report.check_mean("2SMUHPA+WF", mean_of(&curve, Algorithm::TwoStage(PowerMode::Waterfilling)), 13.0, MEAN_TOL);
    report.check_mean("2SMUHPA", mean_of(&curve, Algorithm::TwoStage(PowerMode::Equal)), 12.0, MEAN_TOL);
    report.check_mean("H-LISA", mean_of(&curve, Algorithm::HLisa), 19.0, MEAN_TOL);
    report.check_mean("LISA", mean_of(&curve, Algorithm::Lisa), 20.5, MEAN_TOL);
    report.check_mean("capacity", mean_of(&curve, Algorithm::Capacity), 22.0, MEAN_TOL);
    report.finish();
}

#[test]
fn criterion_3_two_antenna_receivers_at_0db() {
    let algs = vec![
        Algorithm::TwoStage(PowerMode::Equal),
        Algorithm::Lisa,
        Algorithm::HLisa,
        Algorithm::BlockDiagonalization,
        Algorithm::Capacity,
    ];
    let config = fig_config(3, ArrayGeometry::linear(2), Some(2), algs);
    let curve = run_monte_carlo(&config).unwrap();

    let mut report = CriterionReport::new(
        "criterion 3: two-antenna receivers 0 dB means (K=8, N_BS=64, N_MS=2, L=3)",
    );
    report.check_mean("LISA", mean_of(&curve, Algorithm::Lisa), 26.0, MEAN_TOL);
    report.check_mean("H-LISA", mean_of(&curve, Algorithm::HLisa), 25.0, MEAN_TOL);
    report.check_mean("2SMUHPA", mean_of(&curve, Algorithm::TwoStage(PowerMode::Equal)), 18.0, MEAN_TOL);
    // Known defect: the reference value of ~18 is only reached by a
    // joint-inversion zero-forcing variant of the baseline. The implemented
    // block diagonalization (per-user eigen-beamforming in the others'
    // nullspace, joint waterfilling, exhaustive subset search, as contracted)
    // attains ~23 and this check fails honestly. See the repository notes.
    report.check_mean("BD", mean_of(&curve, Algorithm::BlockDiagonalization), 18.0, MEAN_TOL);
    report.check_mean("capacity", mean_of(&curve, Algorithm::Capacity), 29.0, MEAN_TOL);
    report.finish();
}

#[test]
fn criterion_4_large_receivers_at_0db() {
    let algs = vec![
        Algorithm::TwoStage(PowerMode::Equal),
        Algorithm::Lisa,
        Algorithm::HLisa,
        Algorithm::LcLisa,
        Algorithm::LcHLisa,
        Algorithm::HLisaMsAnalog,
        Algorithm::LcHLisaMsAnalog,
        Algorithm::Capacity,
    ];
    let config = fig_config(3, ArrayGeometry::new(4, 4), Some(2), algs);
    let curve = run_monte_carlo(&config).unwrap();

    let mut report = CriterionReport::new(
        "criterion 4: sixteen-antenna receivers 0 dB means (K=8, N_BS=64, N_MS=16, L=3)",
    );
    report.check_mean("2SMUHPA", mean_of(&curve, Algorithm::TwoStage(PowerMode::Equal)), 39.0, MEAN_TOL);
    for alg in [Algorithm::HLisa, Algorithm::LcHLisa, Algorithm::LcLisa] {
        report.check_mean(&format!("{alg}"), mean_of(&curve, alg), 48.0, MEAN_TOL);
    }
    report.check_mean("LISA", mean_of(&curve, Algorithm::Lisa), 49.0, MEAN_TOL);
    report.check_mean("capacity", mean_of(&curve, Algorithm::Capacity), 65.0, MEAN_TOL);

    // Analog receive processing with two RF chains costs at most 1.5 bits
    // against the fully digital counterpart.
    let pairs = [
        (Algorithm::HLisaMsAnalog, Algorithm::HLisa),
        (Algorithm::LcHLisaMsAnalog, Algorithm::LcHLisa),
    ];
    for (analog, digital) in pairs {
        let gap = mean_of(&curve, digital) - mean_of(&curve, analog);
        report.check(
            &format!("{analog} vs {digital}"),
            gap.abs() <= 1.5,
            format!("gap {gap:.3} bits (tolerance 1.5)"),
        );
    }
    report.finish();
}

/// Random small instance for the property suite.
struct Instance {
    sets: Vec<hybrid_precoding::channel::PathSet>,
    channels: Vec<CMat>,
    bs: ArrayGeometry,
    ms: ArrayGeometry,
    n_rf: usize,
    ms_rf: usize,
    power: f64,
}

fn random_instance(index: u64) -> Instance {
    let mut rng = run_rng(0xACCE97, index);
    use rand::Rng;
    let bs_choices = [ArrayGeometry::new(2, 2), ArrayGeometry::new(4, 2), ArrayGeometry::new(4, 4)];
    let bs = bs_choices[rng.random_range(0..bs_choices.len())];
    let ms = if rng.random_bool(0.5) { ArrayGeometry::linear(1) } else { ArrayGeometry::linear(2) };
    let users = rng.random_range(1..=4usize);
    let paths = rng.random_range(1..=3usize);
    let n_rf = (users * ms.elements()).min(bs.elements());
    let ms_rf = ms.elements().min(2).max(1);
    let power = 10f64.powf(rng.random_range(-1.0..2.0));
    let sets = sample_scenario_with_rng(&mut rng, users, paths);
    let channels: Vec<CMat> = sets.iter().map(|s| synthesize_channel(s, bs, ms)).collect();
    Instance { sets, channels, bs, ms, n_rf, ms_rf, power }
}

fn stream_columns(
    sol: &hybrid_precoding::precoding::PrecodingSolution,
) -> Vec<(usize, Vec<C64>, Vec<C64>)> {
    let mut taken = vec![0usize; sol.precoders.len()];
    sol.stream_users
        .iter()
        .map(|&u| {
            let j = taken[u];
            taken[u] += 1;
            (u, sol.equalizers[u].col(j), sol.precoders[u].col(j))
        })
        .collect()
}

#[test]
fn criterion_5_property_suite() {
    let mut report = CriterionReport::new("criterion 5: property suite on 500 random instances");
    let instances = 500;

    // Solver-level properties: zero interference, power budget, constant
    // modulus, rate audit, capacity dominance.
    let mut worst_cross = 0.0f64;
    let mut worst_power = f64::NEG_INFINITY;
    let mut worst_modulus = 0.0f64;
    let mut worst_audit = 0.0f64;
    let mut worst_lower_audit = f64::NEG_INFINITY;
    let mut worst_dominance = f64::NEG_INFINITY;
    let mut solver_failures = 0usize;

    for idx in 0..instances {
        let inst = random_instance(idx);
        let data = ScenarioData {
            path_sets: &inst.sets,
            channels: &inst.channels,
            bs_geometry: inst.bs,
            ms_geometry: inst.ms,
        };
        let capacity = dpc_sum_capacity(&inst.channels, inst.power, 1e-9, 5000)
            .unwrap()
            .sum_capacity;

        let mut algorithms = vec![
            Algorithm::Lisa,
            Algorithm::HLisa,
            Algorithm::LcLisa,
            Algorithm::LcHLisa,
            Algorithm::HLisaMsAnalog,
            Algorithm::LcHLisaMsAnalog,
            Algorithm::BlockDiagonalization,
        ];
        if inst.channels.len() == inst.n_rf {
            algorithms.push(Algorithm::TwoStage(PowerMode::Equal));
            algorithms.push(Algorithm::TwoStage(PowerMode::Waterfilling));
        }

        for alg in algorithms {
            let sol = match execute_algorithm(alg, &data, inst.power, inst.n_rf, inst.ms_rf) {
                Ok(s) => s,
                Err(_) => {
                    solver_failures += 1;
                    continue;
                }
            };
            // Power budget.
            worst_power = worst_power.max(sol.total_power() - inst.power);
            // Zero interference between live streams.
            let cols = stream_columns(&sol);
            for i in 0..cols.len() {
                if sol.power.powers[i] <= 0.0 {
                    continue;
                }
                let (ui, gi, pi) = &cols[i];
                let own = dot_conj(gi, &inst.channels[*ui].matvec(pi)).norm();
                for (j, col) in cols.iter().enumerate() {
                    if i == j || sol.power.powers[j] <= 0.0 {
                        continue;
                    }
                    let cross = dot_conj(gi, &inst.channels[*ui].matvec(&col.2)).norm();
                    worst_cross = worst_cross.max(cross / own.max(1e-12));
                }
            }
            // Constant-modulus exactness.
            if let Some(h) = &sol.hybrid {
                let target = 1.0 / (inst.bs.elements() as f64).sqrt();
                for i in 0..h.analog.rows() {
                    for j in 0..h.analog.cols() {
                        worst_modulus = worst_modulus.max((h.analog[(i, j)].norm() - target).abs());
                    }
                }
            }
            if matches!(alg, Algorithm::HLisaMsAnalog | Algorithm::LcHLisaMsAnalog) {
                let target = 1.0 / (inst.ms.elements() as f64).sqrt();
                for g in &sol.equalizers {
                    for j in 0..g.cols() {
                        for z in &g.col(j) {
                            worst_modulus = worst_modulus.max((z.norm() - target).abs());
                        }
                    }
                }
            }
            // Rate audit: the shared formula equals the internal accounting
            // for orthonormal equalizers and can only exceed it for the
            // constant-modulus receive variants (correlated noise).
            let eq4 = audit_solution(&sol, &inst.channels).unwrap();
            if matches!(alg, Algorithm::HLisaMsAnalog | Algorithm::LcHLisaMsAnalog) {
                worst_lower_audit = worst_lower_audit.max(sol.sum_rate - eq4);
            } else {
                worst_audit = worst_audit.max((eq4 - sol.sum_rate).abs());
            }
            // Capacity dominance.
            worst_dominance = worst_dominance.max(eq4 - capacity);
        }
    }
    report.check(
        "zero-interference audit",
        worst_cross < 1e-7,
        format!("worst relative cross gain {worst_cross:.3e} (tolerance 1e-7)"),
    );
    report.check(
        "power budget",
        worst_power <= 1e-6,
        format!("worst budget excess {worst_power:.3e} (tolerance 1e-6)"),
    );
    report.check(
        "constant modulus",
        worst_modulus < 1e-12,
        format!("worst modulus deviation {worst_modulus:.3e} (tolerance 1e-12)"),
    );
    report.check(
        "rate audit identity",
        worst_audit < 1e-6,
        format!("worst audit mismatch {worst_audit:.3e} (tolerance 1e-6)"),
    );
    report.check(
        "rate audit lower bound (analog receivers)",
        worst_lower_audit < 1e-6,
        format!("worst internal-over-audited excess {worst_lower_audit:.3e}"),
    );
    report.check(
        "capacity dominance",
        worst_dominance <= 1e-6,
        format!("worst rate-over-capacity excess {worst_dominance:.3e}"),
    );
    report.check("solver failures", solver_failures == 0, format!("{solver_failures} failures"));

    // State invariants after every allocation step, full and path-domain
    // selection, with and without the analog-receiver modifier.
    let mut worst_state = 0.0f64;
    for idx in 0..instances {
        let inst = random_instance(idx);
        for mode in 0..3 {
            let mut state =
                AllocationState::new(inst.bs.elements(), inst.ms.elements(), inst.channels.len());
            for _ in 0..inst.n_rf {
                let sel = match mode {
                    0 => lisa_select_stream(&state, &inst.channels).unwrap(),
                    1 => lc_select_stream(&state, &inst.sets, &inst.channels, inst.bs, inst.ms)
                        .unwrap(),
                    _ => {
                        let limited: Vec<usize> = (0..inst.channels.len())
                            .filter(|&k| state.streams_for(k) < inst.ms_rf)
                            .collect();
                        if limited.is_empty() {
                            None
                        } else {
                            match lisa_select_stream(&state, &inst.channels).unwrap() {
                                Some(mut sel) if limited.contains(&sel.user) => {
                                    let h_user = &inst.channels[sel.user];
                                    if apply_ms_analog_constraints(&mut sel, &state, h_user) {
                                        Some(sel)
                                    } else {
                                        None
                                    }
                                }
                                _ => None,
                            }
                        }
                    }
                };
                let Some(sel) = sel else { break };
                state.push_stream(sel.user, &sel.equalizer, &sel.beam, &inst.channels[sel.user]);
                worst_state = worst_state.max(state.invariant_violation());
            }
        }
    }
    report.check(
        "state invariants (orthonormality, triangularity, projector idempotence)",
        worst_state < 1e-9,
        format!("worst violation {worst_state:.3e} (tolerance 1e-9)"),
    );

    // Waterfilling against an independent bisection oracle.
    let mut worst_wf = 0.0f64;
    {
        use rand::Rng;
        let mut rng = run_rng(0x3A7E6, 0);
        for _ in 0..instances {
            let n = rng.random_range(1..=12usize);
            let gains: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..8.0)).collect();
            let budget = rng.random_range(0.05..50.0);
            let wf = waterfill(&gains, budget).unwrap();
            let spent = |mu: f64| -> f64 {
                gains.iter().map(|&l| (mu - 1.0 / (l * l)).max(0.0)).sum()
            };
            let mut lo = 0.0;
            let mut hi = budget + gains.iter().map(|&l| 1.0 / (l * l)).fold(0.0, f64::max);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if spent(mid) > budget {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let mu = 0.5 * (lo + hi);
            for (&g, &p) in gains.iter().zip(&wf.powers) {
                let oracle = (mu - 1.0 / (g * g)).max(0.0);
                worst_wf = worst_wf.max((p - oracle).abs());
            }
        }
    }
    report.check(
        "waterfilling KKT vs bisection oracle",
        worst_wf < 1e-6,
        format!("worst power deviation {worst_wf:.3e} (tolerance 1e-6)"),
    );
    report.finish();
}

#[test]
fn criterion_6_high_snr_slope() {
    let config = ScenarioConfig {
        snr_grid_db: vec![30.0, 40.0],
        ..fig_config(1, ArrayGeometry::linear(1), None, vec![Algorithm::Lisa])
    };
    let curve = run_monte_carlo(&config).unwrap();
    let slope = curve[1].stats[0].mean_sum_rate - curve[0].stats[0].mean_sum_rate;
    // Eight spatial degrees of freedom: 8 * log2(10) bits over a decade.
    let expected = 8.0 * 10f64.log2();
    let mut report = CriterionReport::new("criterion 6: high-SNR degrees of freedom");
    report.check(
        "LISA slope 30->40 dB",
        (slope - expected).abs() <= 0.15 * expected,
        format!("{slope:.2} bits per decade, expected {expected:.2} +/- 15%"),
    );
    report.finish();
}

#[test]
fn criterion_7_path_domain_variant_is_faster() {
    let bs = ArrayGeometry::new(8, 8);
    let ms = ArrayGeometry::new(4, 4);
    let runs = 25;
    let mut full_times = Vec::with_capacity(runs);
    let mut lc_times = Vec::with_capacity(runs);
    for run in 0..runs as u64 {
        let mut rng = run_rng(0xBE9C4, run);
        let sets = sample_scenario_with_rng(&mut rng, 8, 3);
        let channels: Vec<CMat> = sets.iter().map(|s| synthesize_channel(s, bs, ms)).collect();

        let t0 = Instant::now();
        let full = run_h_lisa(&channels, 8, 1.0).unwrap();
        full_times.push(t0.elapsed().as_secs_f64());

        let t1 = Instant::now();
        let lc = run_lc_h_lisa(&sets, bs, ms, 8, 1.0).unwrap();
        lc_times.push(t1.elapsed().as_secs_f64());

        assert!(full.n_streams() >= 1 && lc.n_streams() >= 1);
    }
    full_times.sort_by(f64::total_cmp);
    lc_times.sort_by(f64::total_cmp);
    let full_median = full_times[runs / 2];
    let lc_median = lc_times[runs / 2];
    let mut report = CriterionReport::new("criterion 7: path-domain complexity advantage");
    report.check(
        "median wall time",
        lc_median < full_median,
        format!(
            "LC-H-LISA {:.3} ms vs H-LISA {:.3} ms over {runs} runs",
            lc_median * 1e3,
            full_median * 1e3
        ),
    );
    report.finish();
}

