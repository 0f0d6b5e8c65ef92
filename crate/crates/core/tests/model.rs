use gtep::fixtures::{hydro, project, random_toy, three_bus_case, two_bus_case};
use gtep::model::{
    construction_factor, investment_coefficient, validate_case, LogicConstraint, LogicKind, OvernightCost, ProjectKind,
    Status,
};
use proptest::prelude::*;

#[test]
fn fixtures_validate() {
    for case in [two_bus_case(), three_bus_case(), random_toy(3)] {
        let report = validate_case(&case);
        assert!(report.is_ok(), "{}: {report}", case.name);
    }
}

#[test]
fn per_kw_cost_without_time_value() {
    let mut case = two_bus_case();
    case.horizon.discount_rate = 0.0;
    let t2 = case.thermals.iter_mut().find(|t| t.id == "T2").unwrap();
    t2.capacity = 100.0;
    let p = &mut case.candidates[0];
    p.overnight_cost = OvernightCost::PerKw(700.0);
    let coef = investment_coefficient(&case, &case.candidates[0], 1).unwrap();
    assert!((coef - 70_000_000.0).abs() < 1e-6);
}

#[test]
fn catalog_costs_keep_their_order() {
    let mut case = two_bus_case();
    let catalog = [("CCGT", 900.0), ("OCGT", 700.0), ("Diesel", 700.0), ("Solar", 1200.0), ("Wind", 1400.0)];
    let t2 = case.thermals.iter_mut().find(|t| t.id == "T2").unwrap();
    t2.capacity = 50.0;
    let coef: Vec<f64> = catalog
        .iter()
        .map(|&(_, c)| {
            let mut p = case.candidates[0].clone();
            p.overnight_cost = OvernightCost::PerKw(c);
            p.payment_schedule = vec![0.4, 0.6];
            p.wacc = 0.08;
            investment_coefficient(&case, &p, 2).unwrap()
        })
        .collect();
    assert!(coef[0] < coef[3] && coef[3] < coef[4]);
    assert_eq!(coef[1], coef[2]);
}

#[test]
fn two_year_schedule_matches_cash_flow_oracle() {
    // payments at the end of years 1 and 2, valued at commissioning (end of year 2)
    let oracle = 0.5 * 1.09 + 0.5;
    assert!((construction_factor(&[0.5, 0.5], 0.09) - oracle).abs() < 1e-12);

    let mut case = two_bus_case();
    case.horizon.discount_rate = 0.07;
    let mut p = project("P", ProjectKind::Thermal, "T2", 1e6);
    p.payment_schedule = vec![0.5, 0.5];
    p.wacc = 0.09;
    let coef = investment_coefficient(&case, &p, 3).unwrap();
    let want = 1e6 * oracle / 1.07f64.powi(2);
    assert!((coef - want).abs() < 1e-6);
}

#[test]
fn capex_multiplier_applies_per_stage() {
    let case = two_bus_case();
    let mut p = case.candidates[0].clone();
    p.capex_multiplier = vec![1.0, 0.5];
    let base = investment_coefficient(&case, &case.candidates[0], 3).unwrap();
    let scaled = investment_coefficient(&case, &p, 3).unwrap();
    assert!((scaled - 0.5 * base).abs() < 1e-9);
}

#[test]
fn violations_are_reported_together() {
    let mut case = two_bus_case();
    case.circuits[0].to_bus = case.circuits[0].from_bus;
    case.circuits[1].susceptance = -1.0;
    case.thermals[0].bus = 99;
    case.candidates[0].payment_schedule = vec![0.5, 0.2];
    case.scenarios = 0;
    let report = validate_case(&case);
    let paths: Vec<&str> = report.violations.iter().map(|v| v.path.as_str()).collect();
    assert!(report.mentions("self-loop circuit"));
    assert!(paths.contains(&"circuit[1].susceptance"));
    assert!(paths.contains(&"thermal[0].bus"));
    assert!(paths.iter().any(|p| p.starts_with("project[0]")));
    assert!(paths.contains(&"operation.scenarios"));
}

#[test]
fn logic_arity_is_checked() {
    let mut case = two_bus_case();
    case.logic.push(LogicConstraint {
        kind: LogicKind::Precedence,
        projects: vec!["P_T2".into()],
    });
    case.logic.push(LogicConstraint {
        kind: LogicKind::Exclusive,
        projects: vec!["P_T2".into(), "nope".into()],
    });
    let report = validate_case(&case);
    assert_eq!(report.violations.len(), 2, "{report}");
}

#[test]
fn candidate_must_target_candidate_device() {
    let mut case = two_bus_case();
    case.candidates[0].target = "T1".into();
    assert!(!validate_case(&case).is_ok());
}

/// Cycle test by repeated removal of hydros with no upstream plant left.
fn has_cycle(upstream: &[Vec<usize>]) -> bool {
    let n = upstream.len();
    let mut removed = vec![false; n];
    loop {
        let next = (0..n).find(|&i| !removed[i] && upstream[i].iter().all(|&u| removed[u]));
        match next {
            Some(i) => removed[i] = true,
            None => return removed.iter().any(|r| !r),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cascade_cycles_detected(edges in proptest::collection::vec((0usize..5, 0usize..5), 0..7)) {
        let mut case = two_bus_case();
        case.hydros = (0..5)
            .map(|i| {
                let mut h = hydro(&format!("H{i}"), 1, 50.0, 20.0, 1.0);
                h.max_block_power = 100.0;
                h
            })
            .collect();
        case.inflows = gtep::inflow::InflowModel::deterministic(&vec![vec![1.0]; 5]);
        let mut upstream = vec![Vec::new(); 5];
        for &(a, b) in &edges {
            if a != b && !upstream[b].contains(&a) {
                upstream[b].push(a);
            }
        }
        for (i, ups) in upstream.iter().enumerate() {
            case.hydros[i].upstream = ups.iter().map(|u| format!("H{u}")).collect();
        }
        let report = validate_case(&case);
        prop_assert_eq!(report.mentions("cyclic cascade"), has_cycle(&upstream), "{}", report);
    }

    #[test]
    fn coefficient_is_linear_in_overnight_cost(cost in 1.0f64..1e7, scale in 0.1f64..10.0, t in 1usize..=3) {
        let case = two_bus_case();
        let mut a = case.candidates[0].clone();
        a.overnight_cost = OvernightCost::Total(cost);
        let mut b = a.clone();
        b.overnight_cost = OvernightCost::Total(cost * scale);
        let ca = investment_coefficient(&case, &a, t).unwrap();
        let cb = investment_coefficient(&case, &b, t).unwrap();
        prop_assert!((cb - scale * ca).abs() <= 1e-9 * cb.abs());
    }

    #[test]
    fn later_entry_costs_less_with_positive_discount(seed in 0u64..200) {
        let case = random_toy(seed);
        prop_assert!(validate_case(&case).is_ok());
        for p in &case.candidates {
            let nt = case.horizon.stages;
            if p.earliest_stage < nt && case.horizon.discount_rate > 0.0 {
                let early = investment_coefficient(&case, p, p.earliest_stage).unwrap();
                let late = investment_coefficient(&case, p, nt).unwrap();
                prop_assert!(late < early);
            }
        }
    }

    #[test]
    fn schedules_summing_to_one_without_wacc_give_unit_factor(parts in proptest::collection::vec(0.01f64..1.0, 1..6)) {
        let total: f64 = parts.iter().sum();
        let schedule: Vec<f64> = parts.iter().map(|p| p / total).collect();
        prop_assert!((construction_factor(&schedule, 0.0) - 1.0).abs() < 1e-12);
        prop_assert!(construction_factor(&schedule, 0.1) >= 1.0 - 1e-12);
    }
}

#[test]
fn status_default_is_existing() {
    assert_eq!(Status::default(), Status::Existing);
}
