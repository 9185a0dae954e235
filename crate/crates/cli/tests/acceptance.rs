//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;

use ncv::estimate::{block_counts, estimate_b_sbm, estimate_dcbm};
use ncv::graph::{hamming_up_to_permutation, AdjacencyMatrix, Membership, NodeSet};
use ncv::models::{sim1_params, BlockMatrix, DcbmParams, DegreeParams, ModelParams, SbmParams};
use ncv::ncv::ncv_partition;
use ncv::seed::{derive, rng};
use ncv::sim::{run_polblogs, run_sim1, run_sim3, RunConfig, Sim1Spec, Sim3Spec, SuccessTable};
use ncv::spectral::{spectral_cluster_rect, spherical_spectral_cluster_rect};
use ncv::{Candidate, ModelKind};

const SEED: u64 = 0;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn judge(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn run(id: u32, name: &str, limit: Duration, check: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let verdict = check();
    let secs = start.elapsed().as_secs_f64();
    let timing = format!("{secs:.1}s (limit {}s)", limit.as_secs());
    let (tag, detail, ok) = match verdict {
        Verdict::Pass(d) if start.elapsed() <= limit => ("PASS", d, true),
        Verdict::Pass(d) => ("FAIL", format!("{d}; too slow"), false),
        Verdict::Fail(d) => ("FAIL", d, false),
        Verdict::Skip(d) => ("SKIP", d, true),
    };
    println!("{tag} {id:>2} {name}: {detail}; {timing}");
    ok
}

fn noiseless_recovery() -> Verdict {
    let n = 120;
    let mut worst = 0;
    for k in 1..=5usize {
        let g = Membership::from_sizes(&vec![n / k; k]).unwrap();
        let b = BlockMatrix::planted(k, 0.5, 0.1).unwrap();
        let sbm = ModelParams::from(SbmParams::new(g.clone(), b.clone()).unwrap()).expected_p();
        let psi = DegreeParams::normalized((0..n).map(|i| 0.2 + 0.8 * ((i * 37) % 11) as f64 / 10.0).collect(), &g).unwrap();
        let dcbm = ModelParams::from(DcbmParams::new(g.clone(), b, psi).unwrap()).expected_p();
        let plain = spectral_cluster_rect(&sbm, k, derive(SEED, &[1, k as u64])).unwrap();
        let (sph, _) = spherical_spectral_cluster_rect(&sbm, k, derive(SEED, &[2, k as u64])).unwrap();
        let (sph_dc, _) = spherical_spectral_cluster_rect(&dcbm, k, derive(SEED, &[3, k as u64])).unwrap();
        for est in [&plain, &sph, &sph_dc] {
            worst = worst.max(hamming_up_to_permutation(est, &g).unwrap());
        }
    }
    judge(worst == 0, format!("max Hamming distance {worst} over K=1..5 (must be 0)"))
}

struct Instance {
    a: AdjacencyMatrix,
    g: Membership,
    fitting: NodeSet,
    held: NodeSet,
    psi: Vec<f64>,
}

fn random_instance(r: &mut impl Rng) -> Instance {
    let n = r.random_range(4..=30);
    let k = r.random_range(1..=4.min(n));
    let p = r.random_range(0.1..0.9);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    let a = AdjacencyMatrix::from_edges(n, edges).unwrap();
    let g = Membership::new((0..n).map(|_| r.random_range(0..k)).collect(), k).unwrap();
    let held = NodeSet::new((0..n).filter(|_| r.random::<f64>() < 0.35).collect(), n).unwrap();
    let fitting = held.complement(n);
    let psi = (0..n).map(|_| f64::from(r.random_range(1u8..=8)) / 8.0).collect();
    Instance { a, g, fitting, held, psi }
}

/// Edges and weight from fitting nodes of community x to community y. Within
/// a community, a pair of fitting nodes is counted once.
fn brute_force(inst: &Instance, x: usize, y: usize, weighted: bool) -> (f64, f64) {
    let n = inst.a.n();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if i == j || inst.g.label(i) != x || inst.g.label(j) != y || !inst.fitting.contains(i) {
                continue;
            }
            if x == y && inst.fitting.contains(j) && i > j {
                continue;
            }
            num += f64::from(inst.a.get(i, j));
            den += if weighted { inst.psi[i] * inst.psi[j] } else { 1.0 };
        }
    }
    (num, den)
}

fn estimator_oracle() -> Verdict {
    let mut r = rng(derive(SEED, &[20]));
    let mut mismatches = 0;
    let mut compared = 0;
    for _ in 0..50 {
        let inst = random_instance(&mut r);
        let k = inst.g.k();
        let plain = block_counts(&inst.a, &inst.fitting, &inst.held, &inst.g, None).unwrap();
        let weighted = block_counts(&inst.a, &inst.fitting, &inst.held, &inst.g, Some(&inst.psi)).unwrap();
        let sbm = estimate_b_sbm(&inst.a, &inst.fitting, &inst.held, &inst.g, k).unwrap();
        let dcbm = estimate_dcbm(&inst.a, &inst.fitting, &inst.held, &inst.g, &inst.psi, k).unwrap();
        for x in 0..k {
            for y in 0..k {
                let (num, den) = brute_force(&inst, x, y, false);
                let (wnum, wden) = brute_force(&inst, x, y, true);
                compared += 1;
                let mut ok = (plain.edges(x, y), plain.pairs(x, y)) == (num, den)
                    && (weighted.edges(x, y), weighted.pairs(x, y)) == (wnum, wden);
                // off-diagonal estimates pool both directions
                let pooled = |w: bool| {
                    if x == y {
                        brute_force(&inst, x, x, w)
                    } else {
                        let (a, b) = (brute_force(&inst, x, y, w), brute_force(&inst, y, x, w));
                        (a.0 + b.0, a.1 + b.1)
                    }
                };
                let (pn, pd) = pooled(false);
                if pd > 0.0 {
                    ok &= sbm.b_hat.get(x, y) == pn / pd;
                }
                let (wpn, wpd) = pooled(true);
                if wpd > 0.0 {
                    ok &= dcbm.b_prime_hat[x][y] == wpn / wpd;
                }
                if !ok {
                    mismatches += 1;
                }
            }
        }
    }
    judge(mismatches == 0, format!("{mismatches} exact mismatches in {compared} ordered block pairs over 50 instances"))
}

fn unbiasedness() -> Verdict {
    let (n, k, reps) = (600, 3, 200u64);
    let params = sim1_params(n, k, n / k, 0.2).unwrap();
    let b = params.b.clone();
    let g = params.g.clone();
    let model = ModelParams::from(params);
    let mut sum = vec![vec![0.0; k]; k];
    let mut var = vec![vec![0.0; k]; k];
    for rep in 0..reps {
        let a = model.sample(&mut rng(derive(SEED, &[30, rep]))).unwrap();
        let part = ncv_partition(n, 3, derive(SEED, &[31, rep])).unwrap();
        let held = part.fold((rep % 3) as usize).clone();
        let fitting = held.complement(n);
        let est = estimate_b_sbm(&a, &fitting, &held, &g, k).unwrap();
        let counts = block_counts(&a, &fitting, &held, &g, None).unwrap();
        for x in 0..k {
            for y in 0..k {
                let pairs = if x == y { counts.pairs(x, x) } else { counts.pairs(x, y) + counts.pairs(y, x) };
                sum[x][y] += est.b_hat.get(x, y);
                var[x][y] += b.get(x, y) * (1.0 - b.get(x, y)) / pairs;
            }
        }
    }
    let mut worst: f64 = 0.0;
    for x in 0..k {
        for y in 0..k {
            let mean = sum[x][y] / reps as f64;
            let se = var[x][y].sqrt() / reps as f64;
            worst = worst.max((mean - b.get(x, y)).abs() / se);
        }
    }
    judge(worst <= 3.0, format!("largest |mean - B| = {worst:.2} standard errors (<= 3)"))
}

fn run_config(reps: usize) -> RunConfig {
    RunConfig {
        reps,
        seed: SEED,
        ..RunConfig::default()
    }
}

fn rates(table: &SuccessTable) -> String {
    table
        .rows
        .iter()
        .map(|r| format!("K={}: {:.2}", r.k, r.rate))
        .collect::<Vec<_>>()
        .join(", ")
}

fn sim3_rates(table: &SuccessTable, min_type: f64, min_k: f64) -> Verdict {
    let ok = table
        .rows
        .iter()
        .all(|r| r.p_type.unwrap_or(0.0) >= min_type && r.p_k_given_type.unwrap_or(0.0) >= min_k);
    let detail = table
        .rows
        .iter()
        .map(|r| {
            format!(
                "K={}: P(type)={:.2} P(K|type)={}",
                r.k,
                r.p_type.unwrap_or(0.0),
                r.p_k_given_type.map_or("-".into(), |p| format!("{p:.2}"))
            )
        })
        .collect::<Vec<_>>()
        .join(", ");
    judge(ok, format!("{detail} (>= {min_type}, >= {min_k})"))
}

fn ncv_bin(args: &[&str]) -> Result<Vec<u8>, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_ncv"))
        .args(args)
        .env_remove("NCV_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(String::from_utf8_lossy(&o.stderr).into_owned());
    }
    Ok(o.stdout)
}

/// Output of one CLI invocation with the given `--threads` value.
type Producer = Box<dyn FnMut(&str) -> Result<Vec<u8>, String>>;

fn determinism(dir: &Path) -> Verdict {
    let graph = dir.join("g.edges");
    let g = graph.to_str().unwrap();
    let mut checks = 0;
    let mut differing = Vec::new();
    let mut compare = |label: &str, mut make: Producer| -> Result<(), String> {
        let first = make("1")?;
        for threads in ["1", "2", "4"] {
            checks += 1;
            if make(threads)? != first {
                differing.push(format!("{label} --threads {threads}"));
            }
        }
        Ok(())
    };
    let result = (|| {
        ncv_bin(&["simulate", "dcbm", "--n", "240", "--k", "3", "--b-diag", "0.5", "--b-off", "0.1", "--seed", "9", "--output", g])?;
        let g = g.to_string();
        compare(
            "select",
            Box::new(move |t| ncv_bin(&["--threads", t, "select", "--input", &g, "--kmax", "5", "--seed", "4"])),
        )?;
        let json = dir.join("sim1.json");
        let json = json.to_str().unwrap().to_string();
        compare(
            "bench sim1",
            Box::new(move |t| {
                let mut out = ncv_bin(&[
                    "--threads", t, "bench", "sim1", "--n", "240", "--k", "2,3", "--n1", "40,balanced", "--r", "0.1",
                    "--reps", "3", "--seed", "4", "--json", &json,
                ])?;
                out.extend(std::fs::read(&json).map_err(|e| e.to_string())?);
                Ok(out)
            }),
        )?;
        compare(
            "bench sim3",
            Box::new(|t| ncv_bin(&["--threads", t, "bench", "sim3", "--n", "240", "--k", "1,2", "--reps", "2", "--seed", "4"])),
        )?;
        compare(
            "bench sim2",
            Box::new(|t| ncv_bin(&["--threads", t, "bench", "sim2", "--n", "200", "--k", "2", "--reps", "2", "--seed", "4"])),
        )?;
        Ok::<(), String>(())
    })();
    match result {
        Err(e) => Verdict::Fail(format!("command failed: {}", e.trim())),
        Ok(()) => judge(
            differing.is_empty(),
            format!("{} of {checks} repeated outputs differ{}", differing.len(), if differing.is_empty() { String::new() } else { format!(": {}", differing.join(", ")) }),
        ),
    }
}

fn polblogs() -> Verdict {
    let Some(path) = std::env::var_os("NCV_POLBLOGS") else {
        return Verdict::Skip("NCV_POLBLOGS not set".into());
    };
    let report = match run_polblogs(&path, &run_config(10)) {
        Ok(r) => r,
        Err(e) => return Verdict::Fail(e.to_string()),
    };
    let target = Candidate::new(ModelKind::Dcbm, 2);
    let freq = report.selections.frequency(target);
    judge(
        report.n == 1222 && report.modal == target && freq >= 0.9,
        format!("LCC {} nodes (1222), modal {} , dcbm(K=2) frequency {freq:.2} (>= 0.9)", report.n, report.modal),
    )
}

fn main() {
    let mut ok = true;
    let min = |m: u64| Duration::from_secs(60 * m);

    ok &= run(1, "noiseless recovery", Duration::from_secs(10), noiseless_recovery);
    ok &= run(2, "estimator oracle", Duration::from_secs(5), estimator_oracle);
    ok &= run(3, "estimator unbiasedness", min(2), unbiasedness);

    let mut sim1 = None;
    ok &= run(4, "sim1 balanced r=0.2", min(10), || {
        let spec = Sim1Spec {
            n: 1000,
            k: vec![2, 3, 4],
            n1: vec![None],
            r: vec![0.2],
            run: run_config(20),
        };
        let table = run_sim1(&spec).unwrap();
        let verdict = judge(table.rows.iter().all(|r| r.rate >= 0.9), format!("{} (>= 0.9)", rates(&table)));
        sim1 = Some(table);
        verdict
    });
    ok &= run(5, "sim1 sparse balanced r=0.01", min(3), || {
        let spec = Sim1Spec {
            n: 1000,
            k: vec![2],
            n1: vec![Some(500)],
            r: vec![0.01],
            run: run_config(20),
        };
        let table = run_sim1(&spec).unwrap();
        judge(table.rows[0].rate >= 0.85, format!("{} (>= 0.85)", rates(&table)))
    });
    ok &= run(6, "sim3 SBM side", min(15), || {
        let spec = Sim3Spec {
            n: vec![600],
            k: vec![1, 2, 3],
            model: vec![ModelKind::Sbm],
            run: run_config(20),
        };
        sim3_rates(&run_sim3(&spec).unwrap(), 0.95, 0.9)
    });
    ok &= run(7, "sim3 DCBM side", min(20), || {
        let spec = Sim3Spec {
            n: vec![1200],
            k: vec![2],
            model: vec![ModelKind::Dcbm],
            run: run_config(10),
        };
        sim3_rates(&run_sim3(&spec).unwrap(), 0.9, 0.9)
    });
    ok &= run(8, "under-selection", Duration::from_secs(1), || match &sim1 {
        Some(t) => {
            let rate = t.under_selection_rate();
            judge(rate <= 0.05, format!("K < K_true in {rate:.3} of criterion 4 runs (<= 0.05)"))
        }
        None => Verdict::Fail("criterion 4 produced no table".into()),
    });
    let dir = tempfile::tempdir().unwrap();
    ok &= run(9, "determinism across threads", min(5), || determinism(dir.path()));
    ok &= run(10, "political blogs", min(10), polblogs);

    if !ok {
        std::process::exit(1);
    }
}
