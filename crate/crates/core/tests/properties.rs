use std::path::Path;

use proptest::prelude::*;

use bellab::audit::{marginal_counts, two_rate_test};
use bellab::counts::{CountsTable, Outcome, SettingPair, Subject};
use bellab::io::{event_log_to_string, layout_to_string, parse_event_log, parse_layout};
use bellab::sim::{
    clone_records, run, verify_clones, Generator, HackerConfig, RewriteRule, SimConfig, StoreSpec,
};
use bellab::spacetime::{LayoutConfig, Party};
use bellab::vacuum::{correlator_tensor, minkowski_dot, realism_admissible, FourVector, InvariantCorrelator};

fn counts_strategy() -> impl Strategy<Value = CountsTable> {
    prop::collection::vec((0usize..5, 0usize..4, -1i8..=1, 0u64..1000), 0..20).prop_map(|cells| {
        let subjects = [Subject::A, Subject::B, Subject::C, Subject::Product, Subject::Joint];
        let mut t = CountsTable::default();
        for (s, p, v, n) in cells {
            let outcome = if subjects[s] == Subject::Joint { Outcome::Pair(v, -v) } else { Outcome::Single(v) };
            t.add(subjects[s], SettingPair::ALL[p], outcome, n);
            t.add_total(subjects[s], SettingPair::ALL[p], n);
        }
        t
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn counts_merge_is_associative_and_commutative(a in counts_strategy(), b in counts_strategy(), c in counts_strategy()) {
        let mut ab = a.clone();
        ab.merge(&b);
        let mut ba = b.clone();
        ba.merge(&a);
        prop_assert_eq!(&ab, &ba);
        let mut ab_c = ab.clone();
        ab_c.merge(&c);
        let mut bc = b.clone();
        bc.merge(&c);
        let mut a_bc = a.clone();
        a_bc.merge(&bc);
        prop_assert_eq!(ab_c, a_bc);
    }

    #[test]
    fn counts_text_round_trips(t in counts_strategy()) {
        prop_assert_eq!(CountsTable::parse_text(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn two_rate_antisymmetric(n1 in 0u64..3000, n2 in 0u64..3000) {
        prop_assume!(n1 + n2 > 0);
        let x = two_rate_test(n1, n2).unwrap();
        let y = two_rate_test(n2, n1).unwrap();
        prop_assert_eq!(x.z, -y.z);
        prop_assert_eq!(x.p_value, y.p_value);
        prop_assert!((0.0..=1.0).contains(&x.p_value));
    }

    #[test]
    fn correlator_tensor_symmetric(xi in -5.0f64..5.0, eta in -5.0f64..5.0, p in prop::array::uniform4(-3.0f64..3.0)) {
        let g = correlator_tensor(&InvariantCorrelator::new(xi, eta), &FourVector(p));
        for (mu, row) in g.iter().enumerate() {
            for (nu, v) in row.iter().enumerate() {
                prop_assert_eq!(*v, g[nu][mu]);
            }
        }
    }

    #[test]
    fn timelike_admissibility_scale_invariant(
        p in prop::array::uniform4(-3.0f64..3.0),
        xi in 0.01f64..5.0,
        frac in 0.0f64..1.0,
        lambda in 0.2f64..5.0,
    ) {
        let p = FourVector(p);
        let pp = minkowski_dot(&p, &p);
        prop_assume!(pp > 0.1);
        let eta = -frac * pp * xi;
        let c = InvariantCorrelator::new(xi, eta);
        let scaled = InvariantCorrelator::new(xi / (lambda * lambda), eta);
        prop_assert_eq!(realism_admissible(&c, &p), realism_admissible(&scaled, &p.scale(lambda)));
    }

    #[test]
    fn layout_text_round_trips(half in 1.0f64..5000.0, readout in 1e-9f64..1e-4, scale in 0.1f64..10.0) {
        let layout = LayoutConfig::swapping(half, readout, readout / 2.0).with_c(299_792_458.0 * scale);
        prop_assert_eq!(parse_layout(&layout_to_string(&layout), Path::new("p")).unwrap(), layout);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn event_logs_round_trip(
        seed in any::<u64>(),
        gen in 0usize..3,
        eff in 0.0f64..=1.0,
        jitter in 0u64..500,
        herald in any::<bool>(),
        frac in 0.0f64..=1.0,
    ) {
        let generator = [Generator::Quantum, Generator::Lhv, Generator::HackedLhv][gen];
        let mut c = SimConfig::new(generator, seed, 200);
        c.efficiency_b = eff;
        c.jitter_ns = jitter;
        if herald && generator == Generator::Quantum {
            c.heralding = true;
            c.layout = LayoutConfig::swapping(600.0, 2e-6, 1e-6);
        }
        if generator == Generator::HackedLhv {
            c.hacker = Some(HackerConfig {
                delay_ns: 3000,
                tamper_fraction: frac,
                target_copies: vec![],
                rule: RewriteRule::ChshMax,
                party: Party::B,
                allow_superluminal: false,
            });
        }
        let log = run(&c).unwrap();
        prop_assert!(log.records.iter().all(|r| r.is_well_formed()));
        prop_assert_eq!(parse_event_log(&event_log_to_string(&log, true), Path::new("p")).unwrap(), log.clone());

        let table = marginal_counts(&log).table;
        let total: u64 = SettingPair::ALL.iter().map(|&p| table.total(Subject::A, p).unwrap_or(0)).sum();
        prop_assert_eq!(total, 200);

        for m in 2..4 {
            let batch = clone_records(&log, m, &StoreSpec::uniform(m, 7)).unwrap();
            let v = verify_clones(&batch).unwrap();
            prop_assert!(v.excluded.is_empty());
            prop_assert_eq!(&v.clean, &log);
        }
    }
}
