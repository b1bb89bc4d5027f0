//! End-to-end acceptance suite. Every criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wsnsim_core::coverage::{comm_coverage_of, sensing_coverage_of};
use wsnsim_core::experiment::{parse_config_str, run_experiment, series_file_name, ExperimentSpec, SUMMARY_HEADER};
use wsnsim_core::radio::{critical_transmission_range, received_power, rx_energy, tx_energy, GrowthTerm};
use wsnsim_core::{
    a3_construct, a3cov_construct, comm_coverage, deploy, initialize, sense_probability, sensing_coverage,
    sink_reachable, A3Params, CoverageGrid, DeploymentArea, DeploymentConfig, EnergyParams, Execution, Life,
    NetworkState, NodeId, Point, RadioParams, Role, SensingParams, SimConfig, Simulation, TcProtocol, TmChoice,
    TmProtocol, SINK,
};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel_close(got: f64, want: f64, tol: f64) -> bool {
    got == want || ((got - want) / want).abs() <= tol
}

fn desk_json(out: &Path, tc_list: &str, tm_list: &str) -> String {
    format!(
        r#"{{
  "deployment.node_count": 100,
  "deployment.width": 300,
  "deployment.height": 200,
  "radio.comm_radius": 60,
  "radio.sensing_radius": 15,
  "max_steps": 20000,
  "metrics_stride": 10,
  "tc_list": {tc_list},
  "tm_list": {tm_list},
  "seeds": [1, 2, 3, 4, 5, 6, 7, 8, 9, 10],
  "output_dir": {out:?}
}}"#
    )
}

const SIX_TM: &str = r#"["DGETRec", "HGETRecRot", "SGETRot", "DGTTRec", "HGTTRecRot", "SGTTRot"]"#;

fn desk_spec(out: &Path, tc_list: &str, tm_list: &str) -> ExperimentSpec {
    parse_config_str(&desk_json(out, tc_list, tm_list), Path::new("desk.json")).expect("desk config parses")
}

// 1
fn formula_fidelity() -> Outcome {
    let energy = EnergyParams::default();
    let tx = tx_energy(&energy, 1000, 100.0).map_err(|e| e.to_string())?;
    check(rel_close(tx, 1.5e-4, 1e-15), || format!("tx_energy = {tx:e}"))?;
    let rx = rx_energy(&energy, 1000);
    check(rel_close(rx, 5.0e-5, 1e-15), || format!("rx_energy = {rx:e}"))?;

    let ctr = [
        (2, GrowthTerm::LogLog, 0.332_141_235_133_980_01),
        (10, GrowthTerm::LogLog, 0.315_977_273_170_064_1),
        (300, GrowthTerm::LogLog, 0.088_877_989_367_443_94),
        (1_000_000, GrowthTerm::LogLog, 0.002_287_668_926_815_185_7),
        (10, GrowthTerm::Zero, 0.270_727_833_604_051_1),
        (300, GrowthTerm::Zero, 0.077_793_966_139_731_67),
        (1_000_000, GrowthTerm::Zero, 0.002_097_048_781_806_605),
    ];
    for (n, f, want) in ctr {
        let got = critical_transmission_range(n, f).map_err(|e| e.to_string())?;
        check(rel_close(got, want, 1e-12), || format!("ctr({n}, {f:?}) = {got}, want {want}"))?;
    }

    let power = [
        ([1.0, 1.0, 1.0, 1.0, 1.0], 1.0, 1.0),
        ([1.0, 1.0, 1.0, 1.0, 1.0], 10.0, 1e-4),
        ([0.5, 2.0, 1.5, 1.2, 0.8], 37.5, 6.990_506_666_666_666_7e-7),
        ([2.0, 1.0, 1.0, 1.5, 1.5], 100.0, 1.0125e-7),
    ];
    for ([pt, gt, gr, ht, hr], d, want) in power {
        let radio = RadioParams {
            tx_power: pt,
            gain_tx: gt,
            gain_rx: gr,
            height_tx: ht,
            height_rx: hr,
            ..RadioParams::default()
        };
        let got = received_power(&radio, d).map_err(|e| e.to_string())?;
        check(rel_close(got, want, 1e-12), || format!("received_power(d={d}) = {got:e}, want {want:e}"))?;
    }
    Ok(format!("tx {tx:e} J, rx {rx:e} J, 7 CTR and 4 received-power values within 1e-12"))
}

// 2
fn sensing_boundaries() -> Outcome {
    let sp = SensingParams::default();
    let r = RadioParams::default().sensing_radius;
    let inner = r - sp.uncertainty_radius;
    let outer = r + sp.uncertainty_radius;
    for i in 0..=100 {
        let x = inner * i as f64 / 100.0;
        check(sense_probability(&sp, r, x) == 1.0, || format!("p({x}) != 1 inside r - r_u"))?;
    }
    for x in [outer + 1e-9, outer + 0.5, outer + 10.0, 1e6] {
        check(sense_probability(&sp, r, x) == 0.0, || format!("p({x}) != 0 beyond r + r_u"))?;
    }
    let right = sense_probability(&sp, r, inner + 1e-12);
    check((right - 1.0).abs() < 1e-9, || format!("discontinuity at r - r_u: {right}"))?;
    let mid = sense_probability(&sp, r, inner + 1.0);
    let want = 0.606_530_659_712_633_4;
    check((mid - want).abs() <= 1e-12, || format!("p(alpha = 1) = {mid}, want {want}"))?;
    Ok(format!("p(alpha = 1) = {mid:.15}"))
}

fn disk_component(state: &NetworkState, radius: f64, members: &dyn Fn(NodeId) -> bool) -> BTreeSet<NodeId> {
    let mut seen = BTreeSet::new();
    if !state.is_alive(SINK) {
        return seen;
    }
    seen.insert(SINK);
    let mut stack = vec![SINK];
    while let Some(u) = stack.pop() {
        for v in 0..state.nodes.len() {
            if !seen.contains(&v) && members(v) && state.dist(u, v) <= radius {
                seen.insert(v);
                stack.push(v);
            }
        }
    }
    seen
}

// 3
fn cds_properties() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0DE);
    let params = A3Params::default();
    let sp = SensingParams::default();
    let none = BTreeSet::new();
    let mut promoted = 0usize;
    for case in 0..1000u64 {
        let n = rng.gen_range(5..=50usize);
        let area = DeploymentArea {
            width: rng.gen_range(100.0..400.0),
            height: rng.gen_range(100.0..400.0),
        };
        let radio = RadioParams {
            comm_radius: rng.gen_range(40.0..120.0),
            sensing_radius: rng.gen_range(10.0..30.0),
            ..RadioParams::default()
        };
        let cfg = DeploymentConfig {
            node_count: n,
            area,
            seed: case,
        };
        let state = deploy(&cfg, &radio, &EnergyParams::default()).map_err(|e| e.to_string())?;
        let r = radio.comm_radius;
        let ctx = || format!("case {case} (n = {n}, R = {r:.2})");

        let a = a3_construct(&state, &params, &none).map_err(|e| format!("{}: {e}", ctx()))?;
        let t = &a.topology;
        t.check_tree().map_err(|e| format!("{}: {e}", ctx()))?;
        for (&c, &p) in &t.parent {
            check(state.dist(c, p) <= r, || format!("{}: link {c}-{p} longer than R", ctx()))?;
        }
        let component = disk_component(&state, r, &|v| state.is_alive(v));
        for &v in &component {
            let dominated = t.active.contains(&v) || t.active.iter().any(|&u| state.dist(u, v) <= r);
            check(dominated, || format!("{}: node {v} not dominated", ctx()))?;
            check(v == SINK || t.parent.contains_key(&v), || format!("{}: node {v} not attached", ctx()))?;
        }
        let backbone = disk_component(&state, r, &|v| t.active.contains(&v));
        check(backbone == t.active, || format!("{}: active set not connected", ctx()))?;
        check(a3_construct(&state, &params, &none).map_err(|e| e.to_string())? == a, || {
            format!("{}: A3 not deterministic", ctx())
        })?;

        let b = a3cov_construct(&state, &params, &sp, &none).map_err(|e| format!("{}: {e}", ctx()))?;
        b.topology.check_tree().map_err(|e| format!("{}: A3Cov {e}", ctx()))?;
        check(t.active.is_subset(&b.topology.active), || format!("{}: A3Cov not a superset", ctx()))?;
        promoted += b.topology.active.len() - t.active.len();
        let grid = CoverageGrid::new(&area, 4.0).map_err(|e| e.to_string())?;
        let pts = |ids: &BTreeSet<NodeId>| ids.iter().map(|&i| state.position(i)).collect::<Vec<Point>>();
        let ca = sensing_coverage_of(&pts(&t.active), radio.sensing_radius, &sp, &grid, Execution::Sequential);
        let cb = sensing_coverage_of(&pts(&b.topology.active), radio.sensing_radius, &sp, &grid, Execution::Sequential);
        check(cb >= ca, || format!("{}: A3Cov sensing {cb} < A3 {ca}", ctx()))?;
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("1000 deployments, {promoted} coverage promotions, {elapsed:.2?}"))
}

// 4
fn reachability_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut total = 0usize;
    for case in 0..500u64 {
        let n = rng.gen_range(1..=20usize);
        let radio = RadioParams {
            comm_radius: rng.gen_range(20.0..90.0),
            ..RadioParams::default()
        };
        let cfg = DeploymentConfig {
            node_count: n,
            area: DeploymentArea {
                width: 200.0,
                height: 150.0,
            },
            seed: case,
        };
        let mut state = deploy(&cfg, &radio, &EnergyParams::default()).map_err(|e| e.to_string())?;
        for node in state.nodes.iter_mut() {
            if node.id != SINK {
                node.role = if rng.gen_bool(0.6) { Role::Active } else { Role::Sleeping };
            }
            if rng.gen_bool(0.15) {
                node.life = Life::Dead;
            }
        }

        // Boolean transitive closure of the member adjacency matrix.
        let member = |v: usize| state.nodes[v].is_alive() && matches!(state.nodes[v].role, Role::Active | Role::Sink);
        let mut reach = vec![vec![false; n]; n];
        for u in 0..n {
            for v in 0..n {
                reach[u][v] = member(u) && member(v) && (u == v || state.dist(u, v) <= radio.comm_radius);
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if reach[i][k] && reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
        let want: BTreeSet<NodeId> = (0..n).filter(|&v| reach[SINK][v]).collect();
        let got = sink_reachable(&state);
        check(got == want, || format!("case {case}: got {got:?}, want {want:?}"))?;
        total += got.len();
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("500 instances equal, {total} reachable nodes in total, {elapsed:.2?}"))
}

// 5
fn energy_conservation() -> Outcome {
    let start = Instant::now();
    let config = SimConfig::default();
    let mut sim = Simulation::new(config).map_err(|e| e.to_string())?;
    let mut worst = sim.state().ledger_error();
    let mut last_alive = sim.state().alive_count();
    let mut samples = 1usize;
    while !sim.finished() {
        let report = sim.step().map_err(|e| e.to_string())?;
        if let Some(s) = report.sample {
            samples += 1;
            let err = sim.state().ledger_error();
            worst = worst.max(err);
            check(err <= 1e-9, || format!("ledger error {err:e} at step {}", s.time))?;
            check(s.alive <= last_alive, || format!("alive rose at step {}", s.time))?;
            check(s.sink_reachable <= s.alive, || format!("reachable > alive at step {}", s.time))?;
            last_alive = s.alive;
        }
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{samples} samples, worst ledger error {worst:e}, {last_alive} alive at the end, {elapsed:.2?}"
    ))
}

// 6
fn coverage_stability() -> Outcome {
    let (state, _) = initialize(&SimConfig::default()).map_err(|e| e.to_string())?;
    let area = SimConfig::default().deployment.area;
    let sp = SensingParams::default();
    let coarse = CoverageGrid::new(&area, 4.0).map_err(|e| e.to_string())?;
    let fine = CoverageGrid::new(&area, 2.0).map_err(|e| e.to_string())?;
    let dc = (comm_coverage(&state, &coarse) - comm_coverage(&state, &fine)).abs();
    let ds = (sensing_coverage(&state, &sp, &coarse) - sensing_coverage(&state, &sp, &fine)).abs();
    check(dc < 0.01, || format!("comm coverage moved by {dc}"))?;
    check(ds < 0.01, || format!("sensing coverage moved by {ds}"))?;

    let square = DeploymentArea {
        width: 200.0,
        height: 200.0,
    };
    let grid = CoverageGrid::new(&square, 4.0).map_err(|e| e.to_string())?;
    let disk = comm_coverage_of(&[square.center()], 100.0, &grid, Execution::Sequential);
    let dp = (disk - std::f64::consts::FRAC_PI_4).abs();
    check(dp < 0.01, || format!("single sink coverage {disk}"))?;
    Ok(format!("4 m vs 2 m: comm {dc:.5}, sensing {ds:.5}; disk {disk:.5} vs pi/4"))
}

// 7
fn maintenance_benefit() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = desk_spec(
        dir.path(),
        r#"["A3", "A3Cov"]"#,
        r#"["None", "DGETRec", "HGETRecRot", "SGETRot", "DGTTRec", "HGTTRecRot", "SGTTRot"]"#,
    );
    let output = run_experiment(&spec, Execution::Parallel).map_err(|e| e.to_string())?;
    let means: BTreeMap<(TcProtocol, TmChoice), f64> = output
        .ranking
        .iter()
        .map(|e| ((e.tc, e.tm), e.mean_time_to_10pct))
        .collect();
    let gated = spec.base.tc;
    let baseline = means[&(gated, TmChoice::None)];
    let mut parts = vec![format!("{gated}+None {baseline:.1}")];
    let mut failures = Vec::new();
    for p in TmProtocol::ALL {
        let m = means[&(gated, TmChoice::Protocol(p))];
        parts.push(format!("{p} {m:.1}"));
        if m < baseline {
            failures.push(format!("{gated}+{p} {m:.1} < {baseline:.1}"));
        }
    }
    let other = TcProtocol::ALL.into_iter().find(|&t| t != gated).expect("two protocols");
    let other_base = means[&(other, TmChoice::None)];
    let behind = TmProtocol::ALL
        .iter()
        .filter(|&&p| means[&(other, TmChoice::Protocol(p))] < other_base)
        .count();
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    check(failures.is_empty(), || failures.join("; "))?;
    Ok(format!(
        "{}; (info: {other}+None {other_base:.1}, {behind} of 6 {other} protocols below it) {elapsed:.2?}",
        parts.join(", ")
    ))
}

fn left_sum_from_csv(text: &str, column: usize) -> i64 {
    let rows: Vec<(i64, i64)> = text
        .lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            let (int, frac) = f[column].split_once('.').expect("six decimals");
            assert_eq!(frac.len(), 6);
            (f[0].parse().unwrap(), int.parse::<i64>().unwrap() * 1_000_000 + frac.parse::<i64>().unwrap())
        })
        .collect();
    rows.windows(2).map(|w| w[0].1 * (w[1].0 - w[0].0)).sum()
}

fn micros(text: &str) -> i64 {
    let (int, frac) = text.split_once('.').expect("six decimals");
    int.parse::<i64>().unwrap() * 1_000_000 + frac.parse::<i64>().unwrap()
}

fn sweep_into(dir: &Path) -> Result<ExperimentSpec, String> {
    let spec = desk_spec(dir, r#"["A3", "A3Cov"]"#, SIX_TM);
    run_experiment(&spec, Execution::Parallel).map_err(|e| e.to_string())?;
    Ok(spec)
}

// 8
fn paper_sweep(dir: &Path) -> Outcome {
    let spec = sweep_into(dir)?;
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    let series: Vec<&PathBuf> = files
        .iter()
        .filter(|p| p.file_name().unwrap().to_string_lossy().starts_with("series_"))
        .collect();
    check(series.len() == 120, || format!("{} series files", series.len()))?;
    check(files.len() == 122, || format!("{} files in output", files.len()))?;

    let summary = std::fs::read_to_string(dir.join("summary.csv")).map_err(|e| e.to_string())?;
    let mut lines = summary.lines();
    check(lines.next() == Some(SUMMARY_HEADER), || "summary header".into())?;
    let mut seen = BTreeSet::new();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        check(seen.insert((f[0].to_string(), f[1].to_string(), f[2].to_string())), || {
            format!("duplicate summary row {line}")
        })?;
        let tc: TcProtocol = f[0].parse()?;
        let tm: TmChoice = f[1].parse()?;
        let seed: u64 = f[2].parse().map_err(|_| "seed".to_string())?;
        let csv = std::fs::read_to_string(dir.join(series_file_name(tc, tm, seed))).map_err(|e| e.to_string())?;
        check(left_sum_from_csv(&csv, 3) == micros(f[5]), || format!("comm integral mismatch in {line}"))?;
        check(left_sum_from_csv(&csv, 4) == micros(f[6]), || format!("sensing integral mismatch in {line}"))?;
        let bound = spec.base.max_steps as i64 * 1_000_000;
        check(micros(f[5]) <= bound && micros(f[6]) <= bound, || format!("integral above horizon in {line}"))?;
    }
    check(seen.len() == spec.combinations().len(), || format!("{} summary rows", seen.len()))?;

    let ranking = std::fs::read_to_string(dir.join("ranking.txt")).map_err(|e| e.to_string())?;
    let rank_line = ranking
        .lines()
        .find(|l| l.starts_with("A3+DGETRec rank:"))
        .ok_or("ranking lacks the A3+DGETRec line")?;
    Ok(format!("120 series + summary + ranking, integrals recomputed exactly; {rank_line}"))
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect()
}

// 9
fn determinism(first: &Path, second: &Path) -> Outcome {
    sweep_into(second)?;
    let a = tree(first);
    let b = tree(second);
    check(a.keys().eq(b.keys()), || "file sets differ".into())?;
    for (name, bytes) in &a {
        check(b[name] == *bytes, || format!("{name} differs"))?;
    }
    let size: usize = a.values().map(Vec::len).sum();
    Ok(format!("{} files, {size} bytes identical", a.len()))
}

// 10
fn protocol_distinctness(dir: &Path) -> Outcome {
    let seed = 1;
    let read = |tc: TcProtocol, p: TmProtocol| {
        std::fs::read_to_string(dir.join(series_file_name(tc, TmChoice::Protocol(p), seed))).unwrap()
    };
    let tc = SimConfig::default().tc;
    let series: Vec<(TmProtocol, String)> = TmProtocol::ALL.iter().map(|&p| (p, read(tc, p))).collect();
    let mut clashes = Vec::new();
    for i in 0..series.len() {
        for j in i + 1..series.len() {
            if series[i].1 == series[j].1 {
                clashes.push(format!("{} = {}", series[i].0, series[j].0));
            }
        }
    }
    let other = TcProtocol::ALL.into_iter().find(|&t| t != tc).expect("two protocols");
    let mut other_clashes = Vec::new();
    for (i, &p) in TmProtocol::ALL.iter().enumerate() {
        for &q in &TmProtocol::ALL[i + 1..] {
            if read(other, p) == read(other, q) {
                other_clashes.push(format!("{p} = {q}"));
            }
        }
    }
    check(clashes.is_empty(), || format!("{tc} seed {seed}: {}", clashes.join(", ")))?;
    let info = if other_clashes.is_empty() {
        format!("{other} also pairwise distinct")
    } else {
        format!("info: {other} identical pairs {}", other_clashes.join(", "))
    };
    Ok(format!("{tc} seed {seed}: 15 pairs distinct ({info})"))
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(outcome) => outcome,
        Err(panic) => Err(panic
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    }
}

#[test]
fn acceptance() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let criteria: Vec<(&str, Box<dyn FnOnce() -> Outcome + '_>)> = vec![
        ("formula fidelity", Box::new(formula_fidelity)),
        ("sensing model boundaries", Box::new(sensing_boundaries)),
        ("CDS properties", Box::new(cds_properties)),
        ("reachability oracle", Box::new(reachability_oracle)),
        ("energy conservation", Box::new(energy_conservation)),
        ("coverage estimator stability", Box::new(coverage_stability)),
        ("maintenance benefit", Box::new(maintenance_benefit)),
        ("protocol sweep artifacts", Box::new(|| paper_sweep(first.path()))),
        ("sweep determinism", Box::new(|| determinism(first.path(), second.path()))),
        ("protocol distinctness", Box::new(|| protocol_distinctness(first.path()))),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.into_iter().enumerate() {
        match guarded(f) {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                println!("FAIL {:>2} {name}: {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
