use std::collections::BTreeMap;

use dioph_core::count::CountOptions;
use dioph_core::field::FieldCtx;
use dioph_core::scan::{
    enumerate_odd_prime_powers, read_csv, read_json, scan_residuals, search_smallest_q, write_csv,
    write_json, ClassRepresentatives, RMode, ScanConfig,
};

#[test]
fn persistence_round_trip_through_files() {
    let rows = scan_residuals(&ScanConfig::new(
        4,
        enumerate_odd_prime_powers(3, 31).unwrap(),
    ))
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("rows.csv");
    let json_path = dir.path().join("rows.json");
    write_csv(std::fs::File::create(&csv_path).unwrap(), &rows).unwrap();
    write_json(std::fs::File::create(&json_path).unwrap(), &rows).unwrap();

    for back in [
        read_csv(std::fs::File::open(&csv_path).unwrap()).unwrap(),
        read_json(std::fs::File::open(&json_path).unwrap()).unwrap(),
    ] {
        assert_eq!(back, rows);
        for row in &back {
            let (n1, nh) = row.recompute_norms().unwrap().unwrap();
            assert_eq!(n1.to_bits(), row.residual_norm_1.unwrap().to_bits());
            assert_eq!(nh.to_bits(), row.residual_norm_half.unwrap().to_bits());
        }
    }
}

#[test]
fn class_mode_matches_all_mode() {
    for m in 2..=4 {
        let fields = enumerate_odd_prime_powers(3, 27).unwrap();
        let all = scan_residuals(&ScanConfig::new(m, fields.clone())).unwrap();
        let class =
            scan_residuals(&ScanConfig::new(m, fields).with_r_mode(RMode::OnePerSquareClass))
                .unwrap();
        let mut by_class: BTreeMap<(u32, i32), u128> = BTreeMap::new();
        for row in &class {
            let ctx = FieldCtx::new(row.p as u64, row.k, None).unwrap();
            let chi = ctx.quad_char(ctx.elem(row.r as u64).unwrap());
            by_class.insert((row.q, chi), row.count.unwrap());
        }
        assert_eq!(by_class.len(), class.len());
        for row in &all {
            let ctx = FieldCtx::new(row.p as u64, row.k, None).unwrap();
            let chi = ctx.quad_char(ctx.elem(row.r as u64).unwrap());
            assert_eq!(
                row.count.unwrap(),
                by_class[&(row.q, chi)],
                "q={} m={m} r={}",
                row.q,
                row.r
            );
        }
    }
}

#[test]
fn scan_rows_are_ordered_and_thread_independent() {
    let fields = enumerate_odd_prime_powers(3, 60).unwrap();
    let mut cfg = ScanConfig::new(3, fields);
    cfg.opts = CountOptions::default().with_threads(Some(3));
    let a = scan_residuals(&cfg).unwrap();
    cfg.opts = CountOptions::single_threaded();
    let b = scan_residuals(&cfg).unwrap();
    assert_eq!(a, b);
    assert!(a.windows(2).all(|w| (w[0].q, w[0].r) < (w[1].q, w[1].r)));
}

#[test]
fn search_is_representative_independent() {
    for m in 2..=3 {
        let a = search_smallest_q(
            m,
            200,
            ClassRepresentatives::Smallest,
            &CountOptions::default(),
        )
        .unwrap();
        let b = search_smallest_q(
            m,
            200,
            ClassRepresentatives::Largest,
            &CountOptions::default(),
        )
        .unwrap();
        assert_eq!(a.q0, b.q0, "m = {m}");
        assert_eq!(
            a.failures.iter().map(|f| f.q).collect::<Vec<_>>(),
            b.failures.iter().map(|f| f.q).collect::<Vec<_>>()
        );
    }
}

#[test]
fn smallest_q_for_triples_verified_by_brute_force() {
    use dioph_core::count::{count_brute, CountSpec};
    use dioph_core::field::FieldElement;

    let res = search_smallest_q(
        3,
        200,
        ClassRepresentatives::Smallest,
        &CountOptions::default(),
    )
    .unwrap();
    assert_eq!(res.q0, 7);
    for f in &res.failures {
        let ctx = FieldCtx::prime(f.q as u64).unwrap();
        let spec = CountSpec::new(3, FieldElement::new(f.r));
        assert_eq!(
            count_brute(&ctx, &spec, &CountOptions::default())
                .unwrap()
                .count,
            0
        );
    }
    let ctx = FieldCtx::prime(7).unwrap();
    for r in ctx.nonzero_elements() {
        let n = count_brute(&ctx, &CountSpec::new(3, r), &CountOptions::default())
            .unwrap()
            .count;
        assert!(n > 0, "N_{r}(3, 7) = 0");
    }
}
