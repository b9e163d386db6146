//! Acceptance report: one line per criterion.
//!
//! Runs with a custom main so the lines reach the terminal without
//! `--nocapture`. A criterion that is not met is reported as FAIL; the
//! process still exits successfully so the rest of the suite runs.
//!
//! Optional inputs:
//! - `AREIL_ELEC_RAW`, `AREIL_PHONE_RAW`: raw rating logs for the ingestion
//!   check (default `data/raw/ratings_Electronics.csv` and
//!   `data/raw/ratings_Cell_Phones_and_Accessories.csv` under the workspace).
//! - `AREIL_FULL_SCALE=1`: also run the long full-scale training.

mod common;

use std::path::{Path, PathBuf};
use std::time::Instant;

use areil_core::corpus::{
    align_overlapping_users, build_graph, ingest_interactions, split_holdout, Domain, IngestOptions, Interaction,
};
use areil_core::evalkit::{
    disentanglement_probe, evaluate, evaluate_scorer, ndcg_at_k, recall_at_k, run_ablation, top_k, EvalSplit,
    ModelScorer, ProbeConfig, Scorer,
};
use areil_core::model::{
    classification_loss, classifier_weights, merge_user_embedding, param, propagate_and_concat, split_user_embedding,
    Grl, ModelConfig, ModelState, Variant,
};
use areil_core::numcore::{dot, grad_check, seeded_rng, spmm, DenseMatrix};
use areil_core::synthetic::{generate, SyntheticConfig};
use areil_core::trainer::{fit, objective, TrainConfig, TrainingData};
use rand::seq::index::sample;
use rand::Rng;

enum Status {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    status: Status,
    detail: String,
}

fn verdict(ok: bool, detail: String) -> Outcome {
    Outcome { status: if ok { Status::Pass } else { Status::Fail }, detail }
}

fn print_line(id: usize, name: &str, o: &Outcome) {
    let s = match o.status {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
        Status::Skip => "SKIP",
    };
    println!("criterion {id} [{s}] {name}: {}", o.detail);
}

fn gradient_integrity() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut worst_at = String::new();
    let mut failing = 0;
    for seed in 0..20 {
        let (_, mut model, data, batch) = common::grad_instance(seed);
        let cfg = model.config.clone();
        let graphs = data.graph_refs();
        let (_, grads) = objective(&cfg, &model.store, graphs, &batch, Grl::PassThrough, true).unwrap();
        for (p, g) in model.store.iter_mut().zip(grads.unwrap()) {
            p.grad = g;
        }
        let report = grad_check(&mut model.store, 1e-5, |s| {
            objective(&cfg, s, graphs, &batch, Grl::PassThrough, false).unwrap().0.total
        });
        let rel = report.max_rel_error();
        if rel >= 1e-5 {
            failing += 1;
        }
        if rel > worst {
            let w = report.worst().unwrap();
            worst = rel;
            worst_at = format!("seed {seed} {} analytic {:.3e} numeric {:.3e}", w.name, w.analytic, w.numeric);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst < 1e-5 && secs < 60.0,
        format!(
            "max relative error {worst:.3e} (limit 1e-5; {failing}/20 instances over; worst {worst_at}); {secs:.1} s"
        ),
    )
}

fn grl_contract() -> Outcome {
    let mut max_diff: f64 = 0.0;
    let mut forward_exact = true;
    for seed in 0..20 {
        let (_, model, data, _) = common::grad_instance(seed);
        let emb = model.embeddings(data.graph_refs()).unwrap();
        let [ex, ey] = &emb.domains;
        let w = classifier_weights(&model.store);
        let plain =
            classification_loss(&w, &ex.enhanced, &ey.enhanced, &ex.specific, &ey.specific, Grl::PassThrough).unwrap();
        for lambda in [0.0, 0.25, 1.0, 3.7] {
            let rev =
                classification_loss(&w, &ex.enhanced, &ey.enhanced, &ex.specific, &ey.specific, Grl::Reverse(lambda))
                    .unwrap();
            max_diff = max_diff
                .max(rev.d_shared_x.max_abs_diff(&plain.d_shared_x.scaled(-lambda)).unwrap())
                .max(rev.d_shared_y.max_abs_diff(&plain.d_shared_y.scaled(-lambda)).unwrap());
            let out = Grl::Reverse(lambda).forward(&ex.enhanced);
            forward_exact &= out.data().iter().zip(ex.enhanced.data()).all(|(a, b)| a.to_bits() == b.to_bits());
        }
    }
    verdict(
        max_diff < 1e-12 && forward_exact,
        format!("max |reversed + λ·plain| {max_diff:.3e} (limit 1e-12); forward bit-exact: {forward_exact}"),
    )
}

fn propagation_oracle() -> Outcome {
    let mut rng = seeded_rng(301);
    let mut max_diff: f64 = 0.0;
    let mut commutes = true;
    for _ in 0..100 {
        let users = rng.gen_range(1..25);
        let items = rng.gen_range(1..=50 - users);
        let edges: Vec<(usize, usize)> = (0..rng.gen_range(0..3 * (users + items)))
            .map(|_| (rng.gen_range(0..users), rng.gen_range(0..items)))
            .collect();
        let its: Vec<Interaction> = edges.iter().map(|&(u, i)| Interaction::new(u, i)).collect();
        let g = build_graph(&its, users, items).unwrap();
        let a = common::oracle_adjacency(users, items, &edges);
        let d = 2 * rng.gen_range(1..4);
        let k = rng.gen_range(0..4);
        let ue = DenseMatrix::uniform(users, d, 1.0, &mut rng);
        let ie = DenseMatrix::uniform(items, d, 1.0, &mut rng);
        let all = ue.vstack(&ie).unwrap();
        max_diff = max_diff.max(spmm(&g, &all).unwrap().max_abs_diff(&a.matmul(&all).unwrap()).unwrap());

        let (uo, io) = propagate_and_concat(&g, &ue, &ie, k).unwrap();
        let mut layer = all.clone();
        let mut expected = layer.clone();
        for _ in 0..k {
            layer = a.matmul(&layer).unwrap();
            expected = expected.hcat(&layer).unwrap();
        }
        max_diff = max_diff.max(uo.vstack(&io).unwrap().max_abs_diff(&expected).unwrap());

        let (shared, specific) = split_user_embedding(&uo, d).unwrap();
        let (us, up) = split_user_embedding(&ue, d).unwrap();
        let (is, ip) = split_user_embedding(&ie, d).unwrap();
        commutes &= propagate_and_concat(&g, &us, &is, k).unwrap().0 == shared;
        commutes &= propagate_and_concat(&g, &up, &ip, k).unwrap().0 == specific;
        commutes &= merge_user_embedding(&shared, &specific, d).unwrap() == uo;
    }
    verdict(
        max_diff < 1e-12 && commutes,
        format!("100 graphs, max abs diff {max_diff:.3e} (limit 1e-12); split commutes exactly: {commutes}"),
    )
}

fn metric_oracle() -> Outcome {
    let mut rng = seeded_rng(401);
    let (mut recall_mismatch, mut ndcg_diff) = (0, 0.0f64);
    for _ in 0..1000 {
        let n = rng.gen_range(1..80);
        let levels = rng.gen_range(1..10);
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..levels) as f64).collect();
        let m = rng.gen_range(0..=n / 3);
        let mut mask = sample(&mut rng, n, m).into_vec();
        mask.sort_unstable();
        let free: Vec<usize> = (0..n).filter(|i| !mask.contains(i)).collect();
        if free.is_empty() {
            continue;
        }
        let take = rng.gen_range(1..=free.len().min(8));
        let mut relevant: Vec<usize> = sample(&mut rng, free.len(), take).iter().map(|i| free[i]).collect();
        relevant.sort_unstable();
        let k = rng.gen_range(1..30);
        let flags: Vec<bool> = (0..n).map(|i| mask.contains(&i)).collect();
        let ranked = top_k(&scores, &flags, k);
        let (r, g) = common::brute_force_metrics(&scores, &relevant, &mask, k);
        if recall_at_k(&ranked, &relevant, k) != r {
            recall_mismatch += 1;
        }
        ndcg_diff = ndcg_diff.max((ndcg_at_k(&ranked, &relevant, k) - g).abs());
    }
    let users = 2000;
    let data = common::one_item_split(402, users, 1000);
    let scorer = common::RandomScorer { users, items: [1000; 2], seed: 403 };
    let report = evaluate_scorer(&scorer, &data, EvalSplit::Test, 20).unwrap();
    let sigma = (0.02f64 * 0.98 / users as f64).sqrt();
    let r = report.domain(Domain::X).recall;
    let chance_ok = (r - 0.02).abs() < 3.0 * sigma;
    verdict(
        recall_mismatch == 0 && ndcg_diff < 1e-12 && chance_ok,
        format!(
            "1000 instances: {recall_mismatch} recall mismatches, max ndcg diff {ndcg_diff:.3e}; \
             random Recall@20 {r:.5} vs 0.02 ± {:.5}",
            3.0 * sigma
        ),
    )
}

fn ablation_equivalences() -> Outcome {
    let cds =
        generate(&SyntheticConfig { num_users: 200, num_items: 80, dense_mean: 12.0, seed: 501, ..Default::default() })
            .unwrap();
    let data = TrainingData::new(split_holdout(&cds, 501).unwrap()).unwrap();
    let base = ModelConfig { embed_dim: 8, gcn_layers: 2, ..Default::default() };
    let train = TrainConfig {
        learning_rate: 1e-2,
        batch_size: 256,
        max_epochs: 3,
        patience: 3,
        seed: 502,
        ..Default::default()
    };

    let cfg = ModelConfig { variant: Variant::NoArem, ..base.clone() };
    let out = fit(ModelState::new(&cfg, data.dims(), &mut seeded_rng(503)).unwrap(), &data, &train).unwrap();
    let scorer = ModelScorer::from_model(&out.model, &data).unwrap();
    let mut identical = true;
    let mut scores = Vec::new();
    for d in Domain::BOTH {
        let (uo, io) = propagate_and_concat(
            data.graph_refs()[d.index()],
            out.model.store.value(param::user(d)),
            out.model.store.value(param::item(d)),
            cfg.gcn_layers,
        )
        .unwrap();
        for u in 0..data.split.num_users {
            scorer.score_items(d, u, &mut scores);
            identical &= scores.iter().zip(io.iter_rows()).all(|(s, item)| *s == dot(uo.row(u), item));
        }
    }

    let cfg = ModelConfig { lambda1: 0.0, ..base };
    let init = ModelState::new(&cfg, data.dims(), &mut seeded_rng(504)).unwrap();
    let out = fit(init.clone(), &data, &train).unwrap();
    let frozen = param::CLASSIFIER.into_iter().all(|i| out.model.store.value(i) == init.store.value(i));
    verdict(
        identical && frozen,
        format!(
            "gamma=1 scores identical to enhancement-free path: {identical}; lambda1=0 classifier unchanged: {frozen}"
        ),
    )
}

fn synthetic_transfer() -> (Outcome, Outcome) {
    let start = Instant::now();
    let model = ModelConfig {
        embed_dim: 32,
        gcn_layers: 2,
        gamma_s: 0.9,
        gamma_t: 0.9,
        lambda1: 0.1,
        lambda2: 1e-5,
        grl_lambda_max: 1.0,
        ..Default::default()
    };
    let variants = [Variant::Full, Variant::NoArem, Variant::NoIrlm, Variant::NoGraph];
    let seeds = [1u64, 2, 3, 4, 5];
    let mut ndcg_y = [0.0f64; 4];
    let (mut spe, mut sha) = (0.0, 0.0);
    for &seed in &seeds {
        let cds = generate(&SyntheticConfig { seed, ..Default::default() }).unwrap();
        let data = TrainingData::new(split_holdout(&cds, seed).unwrap()).unwrap();
        let train = TrainConfig {
            learning_rate: 1e-2,
            batch_size: 2048,
            max_epochs: 40,
            patience: 5,
            seed,
            ..Default::default()
        };
        let rows = run_ablation(&data, &model, &train, &variants, EvalSplit::Test, 20).unwrap();
        for (k, row) in rows.iter().enumerate() {
            ndcg_y[k] += row.report.domain(Domain::Y).ndcg / seeds.len() as f64;
        }
        let probe = disentanglement_probe(&rows[0].outcome.model, &data, &ProbeConfig::default()).unwrap();
        spe += probe.acc_specific / seeds.len() as f64;
        sha += probe.acc_shared / seeds.len() as f64;
    }
    let secs = start.elapsed().as_secs_f64();
    let [full, no_arem, no_irlm, no_graph] = ndcg_y;
    let transfer = verdict(
        full > no_arem && full > no_irlm && full >= 1.1 * no_graph && secs < 600.0,
        format!(
            "sparse-domain test NDCG@20, 5-seed mean: full {full:.5}, no_arem {no_arem:.5}, no_irlm {no_irlm:.5}, \
             no_graph {no_graph:.5} (full/no_graph {:.3}, needs >= 1.100); {secs:.0} s",
            full / no_graph
        ),
    );
    let probe = verdict(
        spe > 0.9 && sha < 0.6,
        format!("probe accuracy, 5-seed mean: specific {spe:.4} (needs > 0.9), shared {sha:.4} (needs < 0.6)"),
    );
    (transfer, probe)
}

fn raw_paths() -> (PathBuf, PathBuf) {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let pick = |var: &str, file: &str| {
        std::env::var_os(var).map(PathBuf::from).unwrap_or_else(|| root.join("data/raw").join(file))
    };
    (
        pick("AREIL_ELEC_RAW", "ratings_Electronics.csv"),
        pick("AREIL_PHONE_RAW", "ratings_Cell_Phones_and_Accessories.csv"),
    )
}

fn ingestion_fidelity() -> Outcome {
    let (elec, phone) = raw_paths();
    if !elec.exists() || !phone.exists() {
        return Outcome {
            status: Status::Skip,
            detail: format!("raw files not present ({} , {})", elec.display(), phone.display()),
        };
    }
    let opts = IngestOptions::default();
    let cds = align_overlapping_users(
        &ingest_interactions(&elec, &opts).unwrap(),
        &ingest_interactions(&phone, &opts).unwrap(),
    )
    .unwrap();
    let got = (
        cds.num_users(),
        cds.domain_x.num_items(),
        cds.domain_y.num_items(),
        cds.domain_x.interactions.len(),
        cds.domain_y.interactions.len(),
    );
    verdict(
        got == (3325, 17709, 38706, 52966, 118114),
        format!("users {}, items {}/{}, interactions {}/{}", got.0, got.1, got.2, got.3, got.4),
    )
}

fn full_scale() -> Outcome {
    let (elec, phone) = raw_paths();
    let wanted = std::env::var("AREIL_FULL_SCALE").is_ok_and(|v| v == "1");
    if !wanted || !elec.exists() || !phone.exists() {
        return Outcome {
            status: Status::Skip,
            detail: "non-gating long run; needs the raw files and AREIL_FULL_SCALE=1".into(),
        };
    }
    let opts = IngestOptions::default();
    let cds = align_overlapping_users(
        &ingest_interactions(&elec, &opts).unwrap(),
        &ingest_interactions(&phone, &opts).unwrap(),
    )
    .unwrap();
    let data = TrainingData::new(split_holdout(&cds, 2024).unwrap()).unwrap();
    let cfg = ModelConfig::default();
    let train = TrainConfig::default();
    let model = ModelState::new(&cfg, data.dims(), &mut seeded_rng(train.seed)).unwrap();
    let out = fit(model, &data, &train).unwrap();
    let r = evaluate(&out.model, &data, EvalSplit::Test, 20).unwrap().domain(Domain::X).recall;
    verdict(
        (r / 0.0829 - 1.0).abs() <= 0.15,
        format!("Elec test Recall@20 {:.2}% (target 8.29% ± 15% relative)", 100.0 * r),
    )
}

fn main() {
    // Skip the expensive work when only listing tests.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut passed = 0;
    let mut total = 0;
    let mut record = |id: usize, name: &str, o: Outcome| {
        print_line(id, name, &o);
        if !matches!(o.status, Status::Skip) {
            total += 1;
            passed += matches!(o.status, Status::Pass) as usize;
        }
    };
    record(1, "gradient integrity", gradient_integrity());
    record(2, "GRL contract", grl_contract());
    record(3, "propagation oracle", propagation_oracle());
    record(4, "metric oracle", metric_oracle());
    record(5, "ablation equivalences", ablation_equivalences());
    let (transfer, probe) = synthetic_transfer();
    record(6, "synthetic transfer", transfer);
    record(7, "disentanglement probe", probe);
    record(8, "ingestion fidelity", ingestion_fidelity());
    record(9, "full-scale reproduction (non-gating)", full_scale());
    println!("acceptance: {passed}/{total} evaluated criteria passed");
}
