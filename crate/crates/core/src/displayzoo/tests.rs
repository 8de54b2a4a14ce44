use num_bigint::{BigInt, BigUint};
use proptest::prelude::*;

use super::*;
use crate::fcrystal::{
    a_number, newton_slopes, p_rank, polarization_check, signature, validate_display, NewtonPolygon, Slope,
};
use crate::testutil::{charpoly_rational, int_valuation};

fn ctx(p: u64, d: usize, n: u32) -> Arc<RingContext> {
    Arc::new(RingContext::new(p, d, n).unwrap())
}

fn q(a: i64, b: i64) -> Slope {
    Slope::new(a, b)
}

fn poly(parts: &[(i64, i64, usize)]) -> NewtonPolygon {
    NewtonPolygon::from_slopes(parts.iter().map(|&(a, b, m)| (q(a, b), m)))
}

fn half(rank: usize) -> NewtonPolygon {
    NewtonPolygon::isoclinic(q(1, 2), rank)
}

fn assert_structurally_sound(d: &DieudonneDisplay) {
    let report = validate_display(d).unwrap();
    assert!(report.passed(), "{report:?}");
    assert!(polarization_check(d).unwrap().is_empty());
    let np = newton_slopes(d).unwrap();
    assert!(np.invariant_violations().is_empty(), "{np}");
    assert_eq!(np.rank(), d.rank());
}

/// Matrix entries as signed integers (d = 1, symmetric residues).
fn signed_entries(d: &DieudonneDisplay) -> Vec<Vec<i64>> {
    let ctx = d.context();
    assert_eq!(ctx.degree(), 1);
    let modulus = BigInt::from(ctx.modulus_int().clone());
    let n = d.rank();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let c = BigInt::from(d.frobenius().get(i, j).coords()[0].clone());
                    let s = if &c * 2 > modulus { c - &modulus } else { c };
                    i64::try_from(s).unwrap()
                })
                .collect()
        })
        .collect()
}

/// Slopes from the exact integer characteristic polynomial (d = 1 only).
fn oracle_slopes(d: &DieudonneDisplay) -> NewtonPolygon {
    let p = d.context().p();
    let chi = charpoly_rational(&signed_entries(d));
    let vals: Vec<Option<u32>> = chi
        .iter()
        .map(|c| {
            assert!(c.is_integer());
            int_valuation(&c.to_integer(), p)
        })
        .collect();
    NewtonPolygon::from_coefficient_valuations(&vals).unwrap()
}

#[test]
fn module_n_by_hand() {
    let c = ctx(3, 1, 12);
    let n = module_n(&c);
    assert_structurally_sound(&n);
    assert_eq!(newton_slopes(&n).unwrap(), half(2));
    assert_eq!(signature(&n).unwrap(), (0, 1));
    assert_eq!(a_number(&n).unwrap(), 1);
    assert_eq!(p_rank(&n).unwrap(), 0);
}

#[test]
fn module_m2_by_hand() {
    let c = ctx(3, 1, 16);
    let m = module_m(&c, 2).unwrap();
    assert_structurally_sound(&m);
    assert_eq!(newton_slopes(&m).unwrap(), poly(&[(0, 1, 2), (1, 1, 2)]));
    assert_eq!(a_number(&m).unwrap(), 0);
    assert_eq!(p_rank(&m).unwrap(), 2);
    assert_eq!(signature(&m).unwrap(), (1, 1));
    // F v₂ = u₁ and F u₁ = v₂: the entries sit where the relations put them
    let (u1, v2) = (
        m.position(&BasisLabel::u(1)).unwrap(),
        m.position(&BasisLabel::v(2)).unwrap(),
    );
    assert_eq!(m.frobenius().get(u1, v2), &c.one());
    assert_eq!(m.frobenius().get(v2, u1), &c.one());
}

#[test]
fn module_m_slope_examples() {
    let c = ctx(3, 1, 64);
    let slopes = |m| newton_slopes(&module_m(&c, m).unwrap()).unwrap();
    assert_eq!(slopes(3), half(6));
    assert_eq!(slopes(4), poly(&[(1, 4, 4), (3, 4, 4)]));
    assert_eq!(slopes(6), poly(&[(1, 3, 6), (2, 3, 6)]));
    assert_eq!(slopes(7), half(14));
}

#[test]
fn module_m_family_formula() {
    for p in [2, 5] {
        let c = ctx(p, 1, 4 * 10 + 8);
        for m in 2..=10u32 {
            let d = module_m(&c, m).unwrap();
            assert_structurally_sound(&d);
            let expected = if m % 2 == 1 {
                half(2 * m as usize)
            } else {
                let h = m as i64 / 2;
                poly(&[(h - 1, 2 * h, m as usize), (h + 1, 2 * h, m as usize)])
            };
            assert_eq!(newton_slopes(&d).unwrap(), expected, "p={p} m={m}");
            assert_eq!(signature(&d).unwrap(), (1, m as usize - 1));
            if m > 2 {
                assert!(a_number(&d).unwrap() >= 1);
            }
        }
    }
}

#[test]
fn rejects_small_m() {
    let c = ctx(2, 1, 8);
    assert!(matches!(module_m(&c, 1), Err(Error::OutOfRange(_))));
    assert!(matches!(module_m(&c, 0), Err(Error::OutOfRange(_))));
}

#[test]
fn symmetric_pairing_fails_alternating_check() {
    let c = ctx(3, 1, 8);
    let m = module_m(&c, 2).unwrap();
    let mut j = m.pairing().clone();
    for i in 0..m.rank() {
        for k in 0..m.rank() {
            let x = j.get(i, k).clone();
            if !x.is_zero() {
                j.set(i, k, c.one());
            }
        }
    }
    let bad = DieudonneDisplay::new(c, m.basis().to_vec(), m.frobenius().clone(), j, m.grading().clone()).unwrap();
    let report = validate_display(&bad).unwrap();
    let alt = report.check("pairing_alternating").unwrap();
    assert!(!alt.passed);
    assert!(alt.offending.contains(&("u1".into(), "v1".into())));
    assert!(report.check("frobenius_swaps_grading").unwrap().passed);
}

#[test]
fn singular_frobenius_reports_v_not_computable() {
    let c = ctx(3, 1, 8);
    let m = module_m(&c, 2).unwrap();
    let zero = Matrix::zero(&c, 4);
    let bad = DieudonneDisplay::new(c, m.basis().to_vec(), zero, m.pairing().clone(), m.grading().clone()).unwrap();
    assert!(matches!(validate_display(&bad), Err(Error::VNotComputable(_))));
}

#[test]
fn direct_sum_examples() {
    let c = ctx(3, 1, 24);
    let m2 = module_m(&c, 2).unwrap();
    let n = module_n(&c);
    let s = direct_sum(&m2, &n).unwrap();
    assert_eq!(s.rank(), 6);
    assert_structurally_sound(&s);
    assert_eq!(newton_slopes(&s).unwrap(), poly(&[(0, 1, 2), (1, 2, 2), (1, 1, 2)]));
    assert_eq!(a_number(&s).unwrap(), a_number(&m2).unwrap() + a_number(&n).unwrap());

    let m4nn = with_copies_of_n(&c, module_m(&c, 4).unwrap(), 2).unwrap();
    assert_structurally_sound(&m4nn);
    let labels: Vec<String> = m4nn.basis().iter().map(ToString::to_string).collect();
    assert_eq!(&labels[8..], ["u0", "v0", "u0@1", "v0@1"]);
    assert_eq!(
        a_number(&m4nn).unwrap(),
        a_number(&module_m(&c, 4).unwrap()).unwrap() + 2
    );

    let other = ctx(5, 1, 24);
    assert!(matches!(
        direct_sum(&m2, &module_n(&other)),
        Err(Error::ContextMismatch(_))
    ));
}

#[test]
fn expected_module_examples() {
    let c = ctx(3, 1, 40);
    let e31 = expected_module(&c, 3, 1).unwrap();
    assert_eq!(e31.rank(), 6);
    assert_eq!(newton_slopes(&e31).unwrap(), poly(&[(0, 1, 2), (1, 2, 2), (1, 1, 2)]));
    let e41 = expected_module(&c, 4, 1).unwrap();
    assert_eq!(e41, module_m(&c, 4).unwrap());
    let e51 = expected_module(&c, 5, 1).unwrap();
    assert_eq!(newton_slopes(&e51).unwrap(), poly(&[(1, 4, 4), (1, 2, 2), (3, 4, 4)]));
    assert_eq!(newton_slopes(&e51).unwrap().min_slope(), Some(q(1, 4)));
    for n in 3..=8 {
        for j in 1..=n / 2 {
            let e = expected_module(&c, n, j).unwrap();
            assert_eq!(e.rank(), 2 * n as usize);
            assert_structurally_sound(&e);
        }
    }
    assert!(expected_module(&c, 5, 0).is_err());
    assert!(expected_module(&c, 5, 3).is_err());
    assert!(expected_module(&c, 2, 1).is_err());
}

#[test]
fn supersingular_module_examples() {
    let c = ctx(3, 1, 48);
    let s3 = supersingular_module(&c, 3).unwrap();
    assert_eq!(newton_slopes(&s3).unwrap(), half(6));
    let s4 = supersingular_module(&c, 4).unwrap();
    assert_eq!(s4.rank(), 8);
    assert_eq!(newton_slopes(&s4).unwrap(), half(8));
    for n in 3..=9 {
        let s = supersingular_module(&c, n).unwrap();
        assert_structurally_sound(&s);
        assert_eq!(signature(&s).unwrap(), (1, n as usize - 1));
    }
}

#[test]
fn zero_deformation_is_supersingular_module() {
    for (p, d) in [(2, 1), (3, 2)] {
        let c = ctx(p, d, 20);
        for n in 3..=8 {
            let pt = DeformationPoint::zero(&c, n).unwrap();
            assert!(pt.is_zero());
            for form in [DeformationForm::Polarized, DeformationForm::Literal] {
                assert_eq!(
                    deformation_display(&c, &pt, form).unwrap(),
                    supersingular_module(&c, n).unwrap()
                );
            }
        }
    }
}

#[test]
fn deformation_point_shape() {
    let c = ctx(3, 1, 8);
    assert_eq!(DeformationPoint::coordinate_indices(5), vec![2, 3, 4, 5]);
    assert_eq!(DeformationPoint::coordinate_indices(6), vec![0, 2, 3, 4, 5]);
    assert!(matches!(
        DeformationPoint::new(3, vec![c.field().one()]),
        Err(Error::InvalidPoint(_))
    ));
    assert!(matches!(DeformationPoint::zero(&c, 2), Err(Error::InvalidPoint(_))));
    let f = c.field();
    let pt = DeformationPoint::from_assignments(&c, 4, &[(0, f.one()), (3, f.from_int(2))]).unwrap();
    assert_eq!(pt.describe(&c), "s0=1,s2=0,s3=2");
    assert_eq!(pt.s(1), None);
    assert!(DeformationPoint::from_assignments(&c, 5, &[(0, f.one())]).is_err());
    // value from a bigger field
    let big = ctx(3, 2, 8);
    let foreign = DeformationPoint::new(3, vec![big.field().from_index(4).unwrap(), big.field().zero()]).unwrap();
    assert!(deformation_display(&c, &foreign, DeformationForm::Polarized).is_err());
}

#[test]
fn deformation_n3_s2_has_positive_p_rank() {
    let c = ctx(3, 1, 20);
    let pt = DeformationPoint::from_assignments(&c, 3, &[(2, c.field().one())]).unwrap();
    for form in [DeformationForm::Polarized, DeformationForm::Literal] {
        let d = deformation_display(&c, &pt, form).unwrap();
        assert_eq!(newton_slopes(&d).unwrap(), poly(&[(0, 1, 2), (1, 2, 2), (1, 1, 2)]));
    }
}

#[test]
fn deformation_n4_s0_depends_on_form() {
    let c = ctx(3, 1, 24);
    let pt = DeformationPoint::from_assignments(&c, 4, &[(0, c.field().one())]).unwrap();
    let pol = deformation_display(&c, &pt, DeformationForm::Polarized).unwrap();
    assert_eq!(newton_slopes(&pol).unwrap(), poly(&[(1, 4, 4), (3, 4, 4)]));
    assert!(polarization_check(&pol).unwrap().is_empty());
    let lit = deformation_display(&c, &pt, DeformationForm::Literal).unwrap();
    assert_eq!(newton_slopes(&lit).unwrap(), half(8));
    assert!(!polarization_check(&lit).unwrap().is_empty());
}

#[test]
fn polarization_over_all_n3_points() {
    let c = ctx(3, 1, 20);
    let f = c.field();
    for s2 in f.elements() {
        for s3 in f.elements() {
            let pt = DeformationPoint::new(3, vec![s2.clone(), s3.clone()]).unwrap();
            let pol = deformation_display(&c, &pt, DeformationForm::Polarized).unwrap();
            assert_structurally_sound(&pol);
            assert_eq!(signature(&pol).unwrap(), (1, 2));
            let lit = deformation_display(&c, &pt, DeformationForm::Literal).unwrap();
            let violations = polarization_check(&lit).unwrap();
            assert_eq!(violations.is_empty(), s3.is_zero(), "{}", pt.describe(&c));
            if !s3.is_zero() {
                let pairs: Vec<(String, String)> = violations
                    .iter()
                    .map(|v| (v.row.to_string(), v.col.to_string()))
                    .collect();
                assert_eq!(
                    pairs,
                    [("u2".to_string(), "u3".to_string()), ("v1".into(), "v1".into())]
                );
            }
        }
    }
}

#[test]
fn base_extension_keeps_slopes() {
    let small = ctx(3, 1, 40);
    let big = ctx(3, 2, 40);
    for m in [2, 3, 4, 6] {
        assert_eq!(
            newton_slopes(&module_m(&small, m).unwrap()).unwrap(),
            newton_slopes(&module_m(&big, m).unwrap()).unwrap()
        );
    }
    // a prime-field point viewed in the quadratic extension
    for n in [3u32, 4, 5] {
        for k in DeformationPoint::coordinate_indices(n) {
            let a = DeformationPoint::from_assignments(&small, n, &[(k, small.field().from_int(2))]).unwrap();
            let b = DeformationPoint::from_assignments(&big, n, &[(k, big.field().from_int(2))]).unwrap();
            let da = deformation_display(&small, &a, DeformationForm::Polarized).unwrap();
            let db = deformation_display(&big, &b, DeformationForm::Polarized).unwrap();
            assert_eq!(newton_slopes(&da).unwrap(), newton_slopes(&db).unwrap(), "n={n} s{k}");
        }
    }
}

#[test]
fn display_json_roundtrip() {
    let c = ctx(3, 2, 10);
    let f = c.field();
    let pt = DeformationPoint::from_assignments(&c, 4, &[(0, f.from_index(5).unwrap()), (2, f.one())]).unwrap();
    let d = deformation_display(&c, &pt, DeformationForm::Polarized).unwrap();
    let text = serde_json::to_string(&d.to_json()).unwrap();
    let back = DieudonneDisplay::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
    assert_eq!(back, d);
    assert_eq!(
        d.to_json().frobenius[0][d.position(&BasisLabel::v(3)).unwrap()].coords,
        vec![(BigUint::from(3u32).pow(10) - 1u32).to_string(), "0".to_string()]
    );
}

#[test]
fn form_names_roundtrip() {
    for form in [DeformationForm::Polarized, DeformationForm::Literal] {
        assert_eq!(form.name().parse::<DeformationForm>().unwrap(), form);
    }
    assert!("original".parse::<DeformationForm>().is_err());
    assert_eq!(DeformationForm::default(), DeformationForm::Polarized);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Berkowitz mod p^N against exact integer characteristic polynomials.
    #[test]
    fn slopes_match_exact_charpoly(
        p in prop_oneof![Just(2u64), Just(3u64)],
        n in 3u32..=6,
        raw in proptest::collection::vec(0u64..3, 5),
        literal in proptest::bool::ANY,
    ) {
        let c = ctx(p, 1, 4 * n + 8);
        let f = c.field();
        let params = raw[..(n - 1) as usize].iter().map(|&x| f.from_int((x % p) as i64)).collect();
        let pt = DeformationPoint::new(n, params).unwrap();
        let form = if literal { DeformationForm::Literal } else { DeformationForm::Polarized };
        let d = deformation_display(&c, &pt, form).unwrap();
        prop_assert_eq!(newton_slopes(&d).unwrap(), oracle_slopes(&d));
        prop_assert_eq!(signature(&d).unwrap(), (1, n as usize - 1));
        let np = newton_slopes(&d).unwrap();
        prop_assert_eq!(p_rank(&d).unwrap(), np.multiplicity(q(0, 1)));
        if np.multiplicity(q(0, 1)) == 0 {
            prop_assert!(a_number(&d).unwrap() >= 1);
        }
    }

    #[test]
    fn direct_sum_slopes_are_union(m1 in 2u32..=6, m2 in 2u32..=6, with_n in proptest::bool::ANY) {
        let c = ctx(2, 1, 60);
        let a = module_m(&c, m1).unwrap();
        let b = if with_n { module_n(&c) } else { module_m(&c, m2).unwrap() };
        let s = direct_sum(&a, &b).unwrap();
        prop_assert_eq!(
            newton_slopes(&s).unwrap(),
            newton_slopes(&a).unwrap().union(&newton_slopes(&b).unwrap())
        );
        prop_assert_eq!(a_number(&s).unwrap(), a_number(&a).unwrap() + a_number(&b).unwrap());
    }
}
