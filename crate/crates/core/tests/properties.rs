use approx::assert_relative_eq;
use proptest::prelude::*;

use ballspace::functionals::{
    bbm_limit_extrapolate, bsvy_inner, gagliardo_seminorm, BsvyParams, GagliardoParams, KernelPolicy,
};
use ballspace::spaces::{norm, SpaceSpec};
use ballspace::weights::{dyadic_radii, hl_maximal, muckenhoupt_constant, CubeFamily, Weight};
use ballspace::{mask, truncate, DomainMask, DomainSpec, Grid, SampledField, TestFunctionSpec};

const BANACH: [&str; 6] = [
    "lebesgue:p=1.5",
    "weighted:r=2,a=0.5",
    "orlicz:p1=2,p2=3",
    "mixed:r=3",
    "morrey:r=2,alpha=3",
    "herz-local:p=2,q=2,a=0.3,xi=0",
];

fn grid() -> Grid {
    Grid::uniform(1, -2.0, 2.0, 32).unwrap()
}

fn field(values: Vec<f64>) -> SampledField {
    SampledField::new(grid(), values).unwrap()
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 32)
}

fn space() -> impl Strategy<Value = SpaceSpec> {
    prop::sample::select(BANACH.to_vec()).prop_map(|s| SpaceSpec::parse(s).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn norms_are_homogeneous(v in values(), c in -5.0f64..5.0, x in space()) {
        let f = field(v);
        let om = DomainMask::full(f.grid());
        let a = norm(&f.scaled(c).unwrap(), &x, &om).unwrap();
        let b = c.abs() * norm(&f, &x, &om).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * b.max(1e-12));
    }

    #[test]
    fn triangle_inequality(u in values(), v in values(), x in space()) {
        let (f, g) = (field(u), field(v));
        let om = DomainMask::full(f.grid());
        let lhs = norm(&f.add(&g).unwrap(), &x, &om).unwrap();
        let rhs = norm(&f, &x, &om).unwrap() + norm(&g, &x, &om).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn lattice_property(u in values(), t in prop::collection::vec(0.0f64..1.0, 32), x in space()) {
        let g = field(u.clone());
        let f = field(u.iter().zip(&t).map(|(a, s)| a * s).collect());
        let om = DomainMask::full(g.grid());
        prop_assert!(norm(&f, &x, &om).unwrap() <= norm(&g, &x, &om).unwrap() * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn truncations_increase_to_the_norm(v in values(), x in space()) {
        let f = field(v);
        let om = DomainMask::full(f.grid());
        let mut last = 0.0;
        for m in [0.25, 0.5, 1.0, 2.0, 3.0] {
            let n = norm(&truncate(&f, m).unwrap(), &x, &om).unwrap();
            prop_assert!(n + 1e-12 >= last * (1.0 - 1e-9));
            last = n;
        }
        assert_relative_eq!(last, norm(&f, &x, &om).unwrap(), max_relative = 1e-9);
    }

    #[test]
    fn mask_monotonicity(v in values(), r in 0.2f64..1.5, x in space()) {
        let f = field(v);
        let small = mask(&DomainSpec::ball(r), f.grid()).unwrap();
        let large = mask(&DomainSpec::ball(r + 0.4), f.grid()).unwrap();
        prop_assert!(small.is_subset_of(&large));
        prop_assert!(norm(&f, &x, &small).unwrap() <= norm(&f, &x, &large).unwrap() * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn maximal_operator_is_sublinear(u in values(), v in values()) {
        let (f, g) = (field(u), field(v));
        let radii = dyadic_radii(f.grid());
        let sum = hl_maximal(&f.add(&g).unwrap(), &radii).unwrap();
        let mf = hl_maximal(&f, &radii).unwrap();
        let mg = hl_maximal(&g, &radii).unwrap();
        for k in 0..sum.values().len() {
            prop_assert!(sum.values()[k] <= (mf.values()[k] + mg.values()[k]) * (1.0 + 1e-12) + 1e-12);
        }
        let mabs = hl_maximal(&f.abs(), &radii).unwrap();
        for (m, a) in mabs.values().iter().zip(f.values()) {
            prop_assert!(*m + 1e-12 >= a.abs());
        }
    }

    #[test]
    fn ap_constants_decrease_in_p(v in prop::collection::vec(0.1f64..5.0, 32)) {
        let w = Weight::from_field(&field(v)).unwrap();
        let family = CubeFamily::standard(w.grid(), &[]).unwrap();
        let mut last = f64::INFINITY;
        for p in [1.0, 1.5, 2.0, 3.0, 5.0] {
            let a = muckenhoupt_constant(&w, p, &family).unwrap().value;
            prop_assert!(a >= 1.0 - 1e-12);
            prop_assert!(a <= last * (1.0 + 1e-12));
            last = a;
        }
    }

    #[test]
    fn level_sets_shrink_in_lambda(v in values(), gamma in prop::sample::select(vec![-1.0, 1.0, 2.0])) {
        let f = field(v);
        let om = DomainMask::full(f.grid());
        let params = BsvyParams::new(gamma, 1.5, vec![1.0]).unwrap();
        let mut last: Option<Vec<f64>> = None;
        for lambda in [0.05, 0.2, 1.0, 5.0, 25.0] {
            let cur = bsvy_inner(&f, lambda, &params, &om, KernelPolicy::exclude()).unwrap().values().to_vec();
            if let Some(prev) = &last {
                for (a, b) in cur.iter().zip(prev) {
                    prop_assert!(*a <= *b + 1e-12);
                }
            }
            last = Some(cur);
        }
    }

    #[test]
    fn functionals_are_translation_invariant(c in -50.0f64..50.0, sigma in 0.3f64..1.0) {
        let at = |shift: f64| {
            let g = Grid::uniform(1, shift - 1.9, shift + 1.9, 48).unwrap();
            let f = TestFunctionSpec::parse(&format!("gaussian:sigma={sigma},center={shift}")).unwrap().sample(&g).unwrap();
            let om = DomainMask::full(&g);
            let s = gagliardo_seminorm(&f, GagliardoParams::new(0.5, 2.0).unwrap(), &om, KernelPolicy::exclude()).unwrap();
            let l = bsvy_inner(&f, 0.3, &BsvyParams::new(1.0, 2.0, vec![0.3]).unwrap(), &om, KernelPolicy::exclude()).unwrap();
            let x = norm(&f, &SpaceSpec::parse(&format!("herz-local:p=2,q=2,a=0.3,xi={shift}")).unwrap(), &om).unwrap();
            (s, norm(&l, &SpaceSpec::lebesgue(1.0), &om).unwrap(), x)
        };
        let (a, b) = (at(0.0), at(c));
        assert_relative_eq!(a.0, b.0, max_relative = 1e-9);
        assert_relative_eq!(a.1, b.1, max_relative = 1e-9);
        assert_relative_eq!(a.2, b.2, max_relative = 1e-9);
    }

    #[test]
    fn extrapolation_recovers_lines(a in -3.0f64..3.0, b in -5.0f64..5.0, noise in 0.0f64..1e-3) {
        let pairs: Vec<(f64, f64)> = [0.9, 0.95, 0.975, 0.99]
            .iter()
            .enumerate()
            .map(|(k, &s)| (s, a + b * (1.0 - s) + if k % 2 == 0 { noise } else { -noise }))
            .collect();
        let ex = bbm_limit_extrapolate(&pairs).unwrap();
        prop_assert!((ex.limit - a).abs() <= 4.0 * noise + 1e-9);
        prop_assert!(ex.residual <= 2.0 * noise + 1e-12);
    }
}
