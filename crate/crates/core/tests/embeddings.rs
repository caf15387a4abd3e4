use proptest::prelude::*;
use warpco::catalog::{map_from_id, map_with_params};
use warpco::embeddings::*;
use warpco::exponent::{half, rat, t_exponents, to_f64, zero, Exponent, Rational};
use warpco::radial_warping::{family_component, Family, SlowStartParams, WeaklyAdmissibleComponent};

fn e(n: i64) -> Exponent {
    Exponent::int(n)
}

const INF: Exponent = Exponent::Infinite;

/// Independent truth table: equality in d = 1; in d = 2 only p = 2 gives
/// one-sided embeddings (B into Co iff q <= 2, Co into B iff q >= 2).
fn expected(dim: usize, p: Exponent, q: Exponent) -> (bool, bool) {
    if dim == 1 {
        return (true, true);
    }
    if p != e(2) {
        return (false, false);
    }
    let qr = q.recip();
    (qr >= half(), qr <= half())
}

#[test]
fn besov_truth_table_matches() {
    let rows = besov_truth_table(0.5).unwrap();
    assert_eq!(rows.len(), 18);
    for r in rows {
        let (b_co, co_b) = expected(r.dim, r.p, r.q);
        assert_eq!((r.besov_into_co, r.co_into_besov), (b_co, co_b), "d={} p={} q={}", r.dim, r.p, r.q);
    }
}

#[test]
fn truth_table_independent_of_smoothness_and_log_weight_variant() {
    for s in [-1.0, 0.0, 2.5] {
        for r in besov_truth_table(s).unwrap() {
            assert_eq!((r.besov_into_co, r.co_into_besov), expected(r.dim, r.p, r.q));
        }
    }
    for dim in [1, 2] {
        for p in [e(1), e(2), e(3)] {
            for q in [e(1), e(2), INF] {
                let c = besov_vs_warped(Family::Ln, dim, &KappaSpec::BesovIdLog { s: 0.0 }, p, q, 0.0, p, q).unwrap();
                // Log-corrected weight: conditions reduce to (1+j)^{(d-1)t} and (1+j)^{(d-1)t~} bounded.
                let (t, tt) = t_exponents(p, p, q, q);
                let (b_co, co_b) = (dim == 1 || t == zero(), dim == 1 || tt == zero());
                assert_eq!(c.besov_into_co.holds(), b_co, "d={dim} p={p} q={q} {:?}", c.besov_into_co.sequence);
                assert_eq!(c.co_into_besov.holds(), co_b, "d={dim} p={p} q={q} {:?}", c.co_into_besov.sequence);
            }
        }
    }
}

type TRow = (Exponent, Rational, Rational);

#[test]
fn t_table_matches_hand_values() {
    let table: [(Exponent, [TRow; 3]); 4] = [
        (e(1), [(e(1), rat(1, 1), zero()), (e(2), half(), half()), (INF, zero(), rat(1, 1))]),
        (e(2), [(e(1), half(), zero()), (e(2), zero(), zero()), (INF, zero(), half())]),
        (e(3), [(e(1), rat(2, 3), zero()), (e(2), rat(1, 6), rat(1, 6)), (INF, zero(), rat(2, 3))]),
        (INF, [(e(1), rat(1, 1), zero()), (e(2), half(), half()), (INF, zero(), rat(1, 1))]),
    ];
    for (p, row) in table {
        for (q, t, tt) in row {
            assert_eq!(t_exponents(p, p, q, q), (t, tt), "p={p} q={q}");
        }
    }
}

#[test]
fn slow_start_variants_are_equal() {
    let sigma = WeaklyAdmissibleComponent::new(Family::Ln).unwrap();
    let a = map_with_params("ln", 1, Some(SlowStartParams::with_epsilon(&sigma, 1.0))).unwrap();
    let b = map_with_params("ln", 1, Some(SlowStartParams::with_epsilon(&sigma, 0.3))).unwrap();
    let rep = equality_check(&a, &b).unwrap();
    assert!(rep.equal, "{rep:?}");
    assert!(rep.subordinate.is_none());
}

#[test]
fn ln_and_alpha_half_are_unequal_one_sided() {
    let ln = map_from_id("ln", 2).unwrap();
    let al = map_from_id("alpha:0.5", 2).unwrap();
    let rep = equality_check(&ln, &al).unwrap();
    assert!(!rep.equal);
    assert!(!rep.bounded_12 && rep.bounded_21, "{rep:?}");
    let sub = rep.subordinate.unwrap();
    assert!(sub.starts_with(&format!("covering of {}", al.id())), "{sub}");
}

#[test]
fn general_maps_use_jacobian_products() {
    let a = map_from_id("tensor:ln,ln", 2).unwrap();
    let b = map_from_id("tensor:alpha:0.5,alpha:0.5", 2).unwrap();
    let rep = equality_check(&a, &b).unwrap();
    assert_eq!(rep.method, "jacobian-product");
    assert!(!rep.equal);
    let rep = equality_check(&a, &a).unwrap();
    assert!(rep.equal);
}

#[test]
fn radial_sandwich_reduces_for_equal_maps() {
    let rho = family_component(Family::Ln, None).unwrap();
    let kappa = LabeledWeight {
        label: "1".into(),
        eval: std::sync::Arc::new(|_: &[f64]| 1.0),
    };
    let sw = radial_embedding(&rho, &rho, 2, kappa, e(1), INF).unwrap();
    assert_eq!((sw.t, sw.t_tilde), (zero(), rat(1, 1)));
    for xi in [[0.3, 0.1], [5.0, -2.0], [40.0, 7.0]] {
        assert!(((sw.lower.eval)(&xi) - 1.0).abs() < 1e-12);
        assert!(((sw.upper.eval)(&xi) - 1.0).abs() < 1e-12);
    }
    let alpha = family_component(Family::Alpha { alpha: 0.5 }, None).unwrap();
    let k = LabeledWeight {
        label: "1".into(),
        eval: std::sync::Arc::new(|_: &[f64]| 1.0),
    };
    assert!(radial_embedding(&rho, &alpha, 2, k, e(2), e(2)).is_err());
}

#[test]
fn explicit_power_log_example() {
    // K_k = (1+|k|)^{-(d+ε)/r} in d dimensions lies in ℓ^r iff ε > 0.
    for d in [1usize, 2, 3] {
        let (q1, q2) = (e(3), e(2));
        let r = mixed_conjugate_exp(q2, q1);
        let b = |eps: Rational| -(Rational::from_integer(d as i64) + eps) / r;
        let ok = AsymptoticSequence::PowerLog { a: zero(), b: b(rat(1, 10)), dim: d };
        let edge = AsymptoticSequence::PowerLog { a: zero(), b: b(zero()), dim: d };
        assert_eq!(embed_same_covering(&ok, e(2), e(2), q1, q2).relation, Relation::Embeds);
        assert_eq!(embed_same_covering(&edge, e(2), e(2), q1, q2).relation, Relation::Fails);
    }
}

fn mixed_conjugate_exp(target: Exponent, source: Exponent) -> Rational {
    match warpco::exponent::mixed_conjugate(target, source) {
        Exponent::Finite(r) => r,
        Exponent::Infinite => panic!("finite exponent expected"),
    }
}

#[test]
fn shell_sequences_agree_with_closed_form() {
    for (b, s, want) in [(-2.0, e(1), Membership::Finite), (-0.5, e(2), Membership::Infinite), (0.0, INF, Membership::Finite)] {
        let seq = shell_sequence(2, 60, s, &|k| (1.0 + k.iter().map(|v| (v * v) as f64).sum::<f64>().sqrt()).powf(b));
        let got = ellq_membership(&seq, s);
        assert_eq!(got, want, "b={b} s={s}");
    }
}

#[test]
fn same_map_warped_embedding() {
    let map = map_from_id("ln", 1).unwrap();
    let one: warpco::warping_core::ScalarFn = std::sync::Arc::new(|_| 1.0);
    let v = warped_same_map(&map, one.clone(), one.clone(), e(2), e(2), e(2), e(2), 1.0, 200);
    assert_eq!(v.relation, Relation::Embeds);
    let grow: warpco::warping_core::ScalarFn = std::sync::Arc::new(|xi| (1.0 + xi[0].abs()).powf(0.5));
    let v = warped_same_map(&map, one, grow, e(2), e(2), e(2), e(2), 1.0, 200);
    assert_eq!(v.relation, Relation::Fails);
}

#[test]
fn embed_check_dispatch() {
    let co = SpaceDescriptor::Warped {
        map: "ln".into(),
        dim: 1,
        kappa: KappaSpec::BesovId { s: 1.0 },
        p: e(2),
        q: e(1),
    };
    let b = SpaceDescriptor::Besov { s: 1.0, p: e(2), q: e(1), dim: 1 };
    assert_eq!(embed_check(&co, &b).unwrap().relation, Relation::Equal);
    assert_eq!(embed_check(&b, &co).unwrap().relation, Relation::Equal);
    let co2 = SpaceDescriptor::Warped {
        map: "ln".into(),
        dim: 2,
        kappa: KappaSpec::BesovId { s: 1.0 },
        p: e(2),
        q: e(1),
    };
    let b2 = SpaceDescriptor::Besov { s: 1.0, p: e(2), q: e(1), dim: 2 };
    let v = embed_check(&b2, &co2).unwrap();
    assert_eq!((v.relation, v.direction.as_str()), (Relation::Embeds, "a into b"));
    let am = SpaceDescriptor::AlphaMod { alpha: 0.5, s: 1.0, p: e(2), q: e(2), dim: 2 };
    let warped = SpaceDescriptor::Warped {
        map: "alpha:0.5".into(),
        dim: 2,
        kappa: KappaSpec::Power { s: 1.0 },
        p: e(2),
        q: e(2),
    };
    let v = embed_check(&am, &warped).unwrap();
    assert_eq!(v.relation, Relation::Equal);
    assert!(v.note.contains("not proven"));
    assert!(embed_check(&b, &b).is_err());
    assert!(embed_check(&co, &b2).is_err());
}

#[test]
fn mixed_summability_cases() {
    let r = mixed_weight_summability(2.0, e(2), 2, 30).unwrap();
    assert_eq!(r.status, SummabilityStatus::Finite);
    assert!(r.extrapolated_tail < 0.01 * r.partial_sum);
    assert!(r.tail_bound < 0.01 * r.partial_sum, "{} vs {}", r.tail_bound, r.partial_sum);
    assert_eq!(mixed_weight_summability(0.0, e(1), 1, 30).unwrap().status, SummabilityStatus::ConditionViolated);
    assert_eq!(mixed_weight_summability(1.0, e(2), 2, 30).unwrap().status, SummabilityStatus::ConditionViolated);
    assert_eq!(mixed_weight_summability(1.0, INF, 2, 30).unwrap().status, SummabilityStatus::Finite);
}

#[test]
fn alpha_sandwich_sign() {
    let sw = besov_alpha_sandwich(0.5, 1.0, e(1), INF, 2, 0.1).unwrap();
    assert_eq!(sw.big_t_tilde, 1.0);
    assert!(sw.big_t_tilde >= 0.0 && sw.big_t >= 0.0);
    assert!(!sw.besov_equal);
    assert!(besov_alpha_sandwich(0.5, 1.0, e(2), e(2), 1, 0.1).unwrap().besov_equal);
}

fn exponent_strategy() -> impl Strategy<Value = Exponent> {
    prop_oneof![
        (1i64..6, 1i64..4).prop_map(|(n, d)| Exponent::Finite(rat(n + d - 1, d).max(rat(1, 1)))),
        Just(INF),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn numeric_mode_agrees_with_closed_form(
        a in prop_oneof![(-30i64..30).prop_filter("away from zero", |v| v.abs() >= 1).prop_map(|v| v as f64 / 20.0), Just(0.0)],
        b in -40i64..40,
        s in exponent_strategy(),
    ) {
        let b = b as f64 / 10.0;
        let sf = s.to_f64();
        if a == 0.0 {
            match s {
                Exponent::Infinite => prop_assume!(b == 0.0 || b.abs() >= 0.2),
                _ => prop_assume!((b * sf + 1.0).abs() >= 0.2),
            }
        }
        let exact = ellq_membership(
            &AsymptoticSequence::power_log(warpco::exponent::to_rational(a).unwrap(), warpco::exponent::to_rational(b).unwrap()),
            s,
        );
        let numeric = ellq_membership(&AsymptoticSequence::sample_power_log(a, b, 400), s);
        prop_assert_eq!(exact, numeric);
    }

    #[test]
    fn t_exponents_lie_in_unit_interval(p in exponent_strategy(), q in exponent_strategy()) {
        let (t, tt) = t_exponents(p, p, q, q);
        prop_assert!(to_f64(t) >= 0.0 && to_f64(t) <= 1.0);
        prop_assert!(to_f64(tt) >= 0.0 && to_f64(tt) <= 1.0);
        if p == e(2) && q == e(2) {
            prop_assert_eq!((t, tt), (zero(), zero()));
        }
    }

    #[test]
    fn same_covering_is_reflexive(p in exponent_strategy(), q in exponent_strategy()) {
        let seq = AsymptoticSequence::power_log(zero(), zero());
        prop_assert_eq!(embed_same_covering(&seq, p, p, q, q).relation, Relation::Embeds);
    }
}
