//! Acceptance suite. Each test covers one numbered criterion and prints a
//! pass line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Golden files under `tests/golden/` are regenerated by running with the
//! `GOLDEN_REGEN=1` environment variable.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use evb::dsl::{parse, serialize, Element};
use evb::measurement::{
    compute_indicator, evaluate_question, format2, ingest_csv, MeasurementDataset,
    MeasurementRow,
};
use evb::model::{
    advance_program, merge_significance, significance_rank, CharacterizationVector, Factor,
    IndicatorDef, IndicatorKind, MeasurementProgram, ProgramError, Significance,
    SignificanceKind, TechnologyRef,
};
use evb::report::{render_evidence_statement, render_lesson, render_quality_model};
use evb::repository::{
    make_evidence_statement, EvidenceKind, EvidenceSubject, Store,
};

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_dir().join(name)).unwrap()
}

const EVB_FIXTURES: [&str; 5] = [
    "contexts.evb",
    "process_models.evb",
    "table2_quality_model.evb",
    "table3_observation.evb",
    "table4_problem_solution.evb",
];

/// Store preloaded with every fixture element.
fn fixture_store() -> (tempfile::TempDir, Store) {
    let dir = tempfile::tempdir().unwrap();
    let mut store = Store::open(dir.path()).unwrap();
    for name in EVB_FIXTURES {
        for el in parse(&fixture(name)).unwrap().elements {
            store.put(el, false).unwrap();
        }
    }
    (dir, store)
}

fn phase_dataset(pairs: &[(&str, f64)]) -> MeasurementDataset {
    MeasurementDataset {
        id: "ds".into(),
        rows: pairs
            .iter()
            .map(|(phase, h)| MeasurementRow {
                date: chrono::NaiveDate::from_ymd_opt(2002, 3, 4).unwrap(),
                phase: phase.to_string(),
                role: "developer".into(),
                effort_hours: *h,
            })
            .collect(),
    }
}

fn distribution_indicator() -> IndicatorDef {
    IndicatorDef {
        name: "effort_distribution".into(),
        kind: IndicatorKind::CumulativeDistribution,
        value_metric: "effort".into(),
        group_by: Some("phase".into()),
        order: None,
    }
}

fn random_dataset(rng: &mut impl Rng, max_rows: usize) -> MeasurementDataset {
    let keys = ["RP", "DP", "CP", "IP", "AP", "X", "Y"];
    let n = rng.gen_range(1..=max_rows);
    let rows = (0..n)
        .map(|_| {
            let key = keys[rng.gen_range(0..keys.len())];
            (key, (rng.gen_range(1..=4000) as f64) / 100.0)
        })
        .collect::<Vec<_>>();
    phase_dataset(&rows)
}

/// Independent oracle: per-group filter-and-sum in first-appearance order.
fn brute_force_groups(ds: &MeasurementDataset) -> Vec<(String, f64)> {
    let mut keys: Vec<String> = Vec::new();
    for row in &ds.rows {
        if !keys.contains(&row.phase) {
            keys.push(row.phase.clone());
        }
    }
    keys.into_iter()
        .map(|k| {
            let sum = ds
                .rows
                .iter()
                .filter(|r| r.phase == k)
                .map(|r| r.effort_hours)
                .sum();
            (k, sum)
        })
        .collect()
}

#[test]
fn criterion_1_fixture_fidelity() {
    let start = Instant::now();
    for name in EVB_FIXTURES {
        let text = fixture(name);
        let doc = parse(&text).unwrap_or_else(|e| panic!("{name}: parse errors {e:?}"));
        for el in &doc.elements {
            let violations = el.validate();
            assert!(violations.is_empty(), "{name}: {violations:?}");
        }
        let canon = serialize(&doc);
        assert_eq!(canon, text, "{name} is not in canonical form");
        let reparsed = parse(&canon).unwrap();
        assert_eq!(reparsed, doc, "{name} does not round-trip");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("criterion 1 (fixture fidelity): PASS in {elapsed:?}");
}

#[test]
fn criterion_2_indicator_oracle() {
    let start = Instant::now();

    let ds = phase_dataset(&[("RP", 350.0), ("DP", 350.0), ("CP", 550.0), ("IP", 150.0), ("AP", 50.0)]);
    let res = compute_indicator(&distribution_indicator(), &ds).unwrap();
    let expected = [24.14, 48.28, 86.21, 96.55, 100.00];
    for (row, exp) in res.rows.iter().zip(expected) {
        assert!(
            (row.cumulative_percent - exp).abs() < 0.005,
            "{}: {} vs {exp}",
            row.key,
            row.cumulative_percent
        );
    }

    let mut rng = rand::rngs::StdRng::seed_from_u64(0x5eed);
    for _ in 0..1000 {
        let ds = random_dataset(&mut rng, 20);
        let res = compute_indicator(&distribution_indicator(), &ds).unwrap();

        let percent_sum: f64 = res.rows.iter().map(|r| r.percent).sum();
        assert!((percent_sum - 100.0).abs() < 1e-9, "percent sum {percent_sum}");

        let mut prev = 0.0;
        for row in &res.rows {
            assert!(row.cumulative_percent >= prev - 1e-12);
            prev = row.cumulative_percent;
        }
        assert!((prev - 100.0).abs() < 1e-9);

        let oracle = brute_force_groups(&ds);
        assert_eq!(res.rows.len(), oracle.len());
        for (row, (key, sum)) in res.rows.iter().zip(&oracle) {
            assert_eq!(&row.key, key);
            assert!((row.value - sum).abs() < 1e-9 * sum.max(1.0));
        }
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!("criterion 2 (indicator oracle): PASS in {elapsed:?}");
}

#[test]
fn criterion_3_scale_equivariance() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(0x5ca1e);
    for _ in 0..500 {
        let ds = random_dataset(&mut rng, 20);
        let k: f64 = rng.gen_range(1e-6..=100.0);
        let scaled = MeasurementDataset {
            id: ds.id.clone(),
            rows: ds
                .rows
                .iter()
                .map(|r| MeasurementRow {
                    effort_hours: r.effort_hours * k,
                    ..r.clone()
                })
                .collect(),
        };
        let a = compute_indicator(&distribution_indicator(), &ds).unwrap();
        let b = compute_indicator(&distribution_indicator(), &scaled).unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.key, rb.key);
            assert!((ra.percent - rb.percent).abs() < 1e-9, "k={k}: {} vs {}", ra.percent, rb.percent);
            assert!((ra.cumulative_percent - rb.cumulative_percent).abs() < 1e-9);
        }
        assert!((b.total - a.total * k).abs() < 1e-9 * (a.total * k).abs().max(1.0));
    }
    println!("criterion 3 (scale equivariance): PASS");
}

#[test]
fn criterion_4_retrieval() {
    let (_dir, store) = fixture_store();

    let both = store.find_by_keywords(&["J2ME".into()]);
    let ids: Vec<&str> = both.iter().map(|(id, _)| id.as_str()).collect();
    assert_eq!(ids, ["LL3PXI2", "LL4PXI1"]);

    let push = store.find_by_keywords(&["push".into()]);
    assert_eq!(push.len(), 1);
    assert_eq!(push[0].0, "LL3PXI2");

    assert!(store.find_by_keywords(&["nonexistent-term".into()]).is_empty());
    println!("criterion 4 (retrieval): PASS");
}

#[test]
fn criterion_5_context_matching() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(0xc0ffee);
    let dir = tempfile::tempdir().unwrap();
    let mut store = Store::open(dir.path()).unwrap();

    let random_vector = |rng: &mut rand::rngs::StdRng, id: &str| {
        let n = rng.gen_range(1..=6);
        let mut factors = Vec::new();
        for _ in 0..n {
            let f = Factor::new(
                format!("cat{}", rng.gen_range(0..3)),
                format!("name{}", rng.gen_range(0..6)),
                format!("val{}", rng.gen_range(0..4)),
            );
            if !factors
                .iter()
                .any(|x: &Factor| x.category == f.category && x.name == f.name)
            {
                factors.push(f);
            }
        }
        CharacterizationVector { id: id.into(), factors }
    };

    let mut candidate_ids = Vec::new();
    for i in 0..30 {
        let cv = random_vector(&mut rng, &format!("CV{i}"));
        store.put(Element::Context(cv), false).unwrap();
        candidate_ids.push(format!("CV{i}"));
    }

    for round in 0..50 {
        let query = random_vector(&mut rng, &format!("Q{round}"));

        // self-match scores 1.0
        let self_id = format!("SELF{round}");
        let mut self_cv = query.clone();
        self_cv.id = self_id.clone();
        store.put(Element::Context(self_cv), false).unwrap();
        let scores = store.match_context(&query, &[self_id.clone()]).unwrap();
        assert_eq!(scores[0].score, 1.0);

        // disjoint vectors score 0.0
        let disjoint_id = format!("DISJ{round}");
        store
            .put(
                Element::Context(CharacterizationVector {
                    id: disjoint_id.clone(),
                    factors: vec![Factor::new("other", "other", "other")],
                }),
                false,
            )
            .unwrap();
        let scores = store.match_context(&query, &[disjoint_id]).unwrap();
        assert_eq!(scores[0].score, 0.0);

        // bounds and permutation determinism
        let ranked = store.match_context(&query, &candidate_ids).unwrap();
        for m in &ranked {
            assert!((0.0..=1.0).contains(&m.score));
            assert!(m.matched <= m.query_factors);
        }
        let mut shuffled = candidate_ids.clone();
        shuffled.shuffle(&mut rng);
        let ranked2 = store.match_context(&query, &shuffled).unwrap();
        assert_eq!(ranked, ranked2, "ranking depends on candidate order");
    }
    println!("criterion 5 (context matching): PASS");
}

#[test]
fn criterion_6_reference_integrity() {
    let dir = tempfile::tempdir().unwrap();
    let mut store = Store::open(dir.path()).unwrap();
    for el in parse(&fixture("contexts.evb")).unwrap().elements {
        store.put(el, false).unwrap();
    }
    for el in parse(&fixture("table2_quality_model.evb")).unwrap().elements {
        store.put(el, false).unwrap();
    }

    let dangling = store.check_references();
    assert_eq!(dangling, vec![("WISE-QM3PX11".to_string(), "PM1PX11".to_string())]);

    for el in parse(&fixture("process_models.evb")).unwrap().elements {
        store.put(el, false).unwrap();
    }
    assert!(store.check_references().is_empty());
    println!("criterion 6 (reference integrity): PASS");
}

#[test]
fn criterion_7_lifecycle() {
    // exhaustive over steps 1..=6
    for step in 1u8..=6 {
        let p = MeasurementProgram {
            id: "MP".into(),
            plan: "WISE-QM3PX11".into(),
            step,
            history: (1..=step).map(|s| (s, chrono::Utc::now())).collect(),
        };
        match advance_program(&p) {
            Ok(next) => {
                assert!(step < 6);
                assert_eq!(next.step, step + 1);
                assert_eq!(next.history.len(), p.history.len() + 1);
                let steps: Vec<u8> = next.history.iter().map(|(s, _)| *s).collect();
                assert_eq!(steps, (1..=step + 1).collect::<Vec<u8>>());
            }
            Err(ProgramError::AlreadyPackaged(_)) => assert_eq!(step, 6),
        }
    }

    // the only path from 1 is the five forward transitions
    let mut p = MeasurementProgram::new("MP", "WISE-QM3PX11");
    let mut visited = vec![p.step];
    while let Ok(next) = advance_program(&p) {
        visited.push(next.step);
        p = next;
    }
    assert_eq!(visited, vec![1, 2, 3, 4, 5, 6]);
    println!("criterion 7 (lifecycle): PASS");
}

#[test]
fn criterion_8_significance_algebra() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(0xa19eb7);
    let kinds = [
        SignificanceKind::FormalExperiment,
        SignificanceKind::CaseStudy,
        SignificanceKind::Survey,
    ];
    let random_sig = |rng: &mut rand::rngs::StdRng| {
        Significance::new(kinds[rng.gen_range(0..3)], rng.gen_range(1..=10))
    };

    for _ in 0..500 {
        let (a, b, c) = (random_sig(&mut rng), random_sig(&mut rng), random_sig(&mut rng));

        // total order: totality, antisymmetry, transitivity
        let ab = significance_rank(&a, &b);
        let ba = significance_rank(&b, &a);
        assert_eq!(ab, ba.reverse());
        if ab == std::cmp::Ordering::Equal {
            assert_eq!(a.kind, b.kind);
            assert_eq!(a.count, b.count);
        }
        if significance_rank(&a, &b) != std::cmp::Ordering::Greater
            && significance_rank(&b, &c) != std::cmp::Ordering::Greater
        {
            assert_ne!(significance_rank(&a, &c), std::cmp::Ordering::Greater);
        }

        // merge algebra on equal kinds
        if a.kind == b.kind {
            let ab = merge_significance(&a, &b).unwrap();
            let ba = merge_significance(&b, &a).unwrap();
            assert_eq!(ab, ba);
            if b.kind == c.kind {
                let left = merge_significance(&ab, &c).unwrap();
                let right = merge_significance(&a, &merge_significance(&b, &c).unwrap()).unwrap();
                assert_eq!(left, right);
            }
        } else {
            assert!(merge_significance(&a, &b).is_err());
        }
    }
    println!("criterion 8 (significance algebra): PASS");
}

fn check_golden(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("GOLDEN_REGEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|_| panic!("missing golden file {name}; run with GOLDEN_REGEN=1"));
    assert_eq!(actual, expected, "golden mismatch for {name}");
}

#[test]
fn criterion_9_golden_reports() {
    let (_dir, store) = fixture_store();

    let Some(Element::QualityModel(qm)) = store.get("WISE-QM3PX11") else { panic!() };
    let (_, csv) = ("table2_effort.csv", fixture("table2_effort.csv"));
    let (ds, errors) = ingest_csv("table2_effort", &csv).unwrap();
    assert!(errors.is_empty());
    let (_, result) = evaluate_question(qm, &ds).unwrap();
    assert_eq!(format2(result.rows.last().unwrap().cumulative_percent), "100.00");
    check_golden("quality_model_table2.md", &render_quality_model(qm, Some(&result)).body);
    check_golden("quality_model_table2_no_result.md", &render_quality_model(qm, None).body);

    let Some(Element::Lesson(ll3)) = store.get("LL3PXI2") else { panic!() };
    check_golden("lesson_table3.md", &render_lesson(ll3).body);
    let Some(Element::Lesson(ll4)) = store.get("LL4PXI1") else { panic!() };
    let table4 = render_lesson(ll4).body;
    assert!(table4.contains("A new transport protocol based on UDP was implemented"));
    assert!(table4.contains("See preventive solution."));
    check_golden("lesson_table4.md", &table4);

    let sig = Significance::case_study(1);
    let tech = make_evidence_statement(
        &store,
        EvidenceKind::TechnologyApplied,
        EvidenceSubject::Technology(TechnologyRef::new("J2ME")),
        "CV3PXI2",
        Some("WISE-QM3PX11"),
        sig,
    )
    .unwrap();
    let process = make_evidence_statement(
        &store,
        EvidenceKind::ProcessFollowed,
        EvidenceSubject::Element("PM1PX11".into()),
        "CV1PX11",
        None,
        sig,
    )
    .unwrap();
    let problem = make_evidence_statement(
        &store,
        EvidenceKind::ProblemSolved,
        EvidenceSubject::Element("LL4PXI1".into()),
        "CV1PX11",
        None,
        sig,
    )
    .unwrap();

    let sentences = [
        render_evidence_statement(&tech),
        render_evidence_statement(&process),
        render_evidence_statement(&problem),
    ];
    assert!(sentences[1].starts_with(
        "There is evidence with significance 1 case study that process model PM1PX11 was followed within context CV1PX11"
    ));
    assert!(sentences[2].contains("arose and was solved within the context"));
    check_golden("evidence_statements.txt", &format!("{}\n{}\n{}\n", sentences[0], sentences[1], sentences[2]));

    println!("criterion 9 (golden reports): PASS");
}
