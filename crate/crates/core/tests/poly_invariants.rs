use proptest::prelude::*;

use shubin_core::poly::{int, rat, DerivKind, GaussianRational, TermBundle};

const NVARS: usize = 3;

fn term() -> impl Strategy<Value = (i64, i64, Vec<u32>)> {
    (-4i64..=4, -4i64..=4, prop::collection::vec(0u32..=3, NVARS))
}

fn bundle() -> impl Strategy<Value = TermBundle> {
    prop::collection::vec(term(), 0..5).prop_map(|ts| {
        ts.into_iter().fold(TermBundle::zero(NVARS), |acc, (re, im, e)| {
            &acc + &TermBundle::monomial(NVARS, GaussianRational::new(int(re), int(im)), e, int(0))
        })
    })
}

/// Homogeneous of degree `|α| + s` with one shared radial power `s ∈ {−2, −1/2, 0, 3/2}`.
fn homogeneous() -> impl Strategy<Value = (TermBundle, i64, i64)> {
    (1u32..=4, prop::sample::select(vec![(-2i64, 1i64), (-1, 2), (0, 1), (3, 2)]), prop::collection::vec((-3i64..=3, -3i64..=3, prop::collection::vec(0usize..NVARS, 4)), 1..4))
        .prop_map(|(deg, (sn, sd), ts)| {
            let p = ts.into_iter().fold(TermBundle::zero(NVARS), |acc, (re, im, picks)| {
                let mut e = vec![0u32; NVARS];
                for &i in picks.iter().take(deg as usize) {
                    e[i] += 1;
                }
                &acc + &TermBundle::monomial(NVARS, GaussianRational::new(int(re), int(im)), e, rat(sn, sd))
            });
            (p, deg as i64 * sd + sn, sd)
        })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![-2.0f64..-0.2, 0.2f64..2.0], NVARS)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn euler_identity((p, gn, gd) in homogeneous()) {
        let euler = (0..NVARS).fold(TermBundle::zero(NVARS), |acc, i| {
            &acc + &TermBundle::var(NVARS, i).multiply(&p.differentiate(i, DerivKind::Partial))
        });
        prop_assert!(euler.equals_as_function(&p.scale_rational(&rat(gn, gd))), "{} vs {}", euler, p);
        if p.is_polynomial() {
            prop_assert_eq!(euler, p.scale_rational(&rat(gn, gd)));
        }
    }

    #[test]
    fn d_squared_is_minus_partial_squared(p in bundle(), i in 0..NVARS, j in 0..NVARS) {
        let dd = p.differentiate(i, DerivKind::D).differentiate(j, DerivKind::D);
        let pp = p.differentiate(i, DerivKind::Partial).differentiate(j, DerivKind::Partial);
        prop_assert_eq!(dd, pp.scale_rational(&int(-1)));
    }

    #[test]
    fn multiply_commutes_and_associates(a in bundle(), b in bundle(), c in bundle()) {
        prop_assert_eq!(a.multiply(&b), b.multiply(&a));
        prop_assert_eq!(a.multiply(&b).multiply(&c), a.multiply(&b.multiply(&c)));
    }

    #[test]
    fn product_degree_is_additive((p, gn, gd) in homogeneous(), (q, hn, hd) in homogeneous()) {
        let prod = p.multiply(&q);
        prop_assume!(!prod.is_zero());
        prop_assert_eq!(prod.homogeneous_degree(), Some(rat(gn, gd) + rat(hn, hd)));
    }

    #[test]
    fn evaluation_is_multiplicative(a in bundle(), b in bundle(), z in point()) {
        let lhs = a.multiply(&b).evaluate(&z).unwrap();
        let rhs = a.evaluate(&z).unwrap() * b.evaluate(&z).unwrap();
        let scale = a.evaluate(&z).unwrap().norm().max(1.0) * b.evaluate(&z).unwrap().norm().max(1.0);
        prop_assert!((lhs - rhs).norm() <= 1e-12 * scale, "{} vs {}", lhs, rhs);
    }
}

#[test]
fn radial_derivative_is_exact() {
    // ∂_1 |z|^{1/2} = (1/2) z_1 |z|^{-3/2}
    let r = TermBundle::radial(2, rat(1, 2));
    let expected = TermBundle::monomial(2, GaussianRational::real(rat(1, 2)), vec![1, 0], rat(-3, 2));
    assert_eq!(r.differentiate(0, DerivKind::Partial), expected);
}
