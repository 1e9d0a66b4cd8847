use proptest::prelude::*;
use uclip::{clip, ClipRegion, Vector};

fn vector(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(
        prop_oneof![
            4 => -1e3..1e3f64,
            1 => -2.0..2.0f64,
            1 => Just(0.0),
            1 => Just(1.5),
        ],
        dim,
    )
}

fn region(dim: usize) -> impl Strategy<Value = ClipRegion> {
    prop_oneof![
        (0.01..100.0f64).prop_map(|g| ClipRegion::component(g).unwrap()),
        prop::collection::vec(0.01..100.0f64, dim)
            .prop_map(|g| ClipRegion::per_coordinate(Vector::new(g).unwrap()).unwrap()),
        (0.01..100.0f64).prop_map(|g| ClipRegion::norm(g).unwrap()),
        Just(ClipRegion::Unbounded),
        Just(ClipRegion::component(1.5).unwrap()),
    ]
}

fn case() -> impl Strategy<Value = (Vector, Vector, ClipRegion)> {
    (1usize..6).prop_flat_map(|d| {
        (vector(d), vector(d), region(d))
            .prop_map(|(x, y, r)| (Vector::new(x).unwrap(), Vector::new(y).unwrap(), r))
    })
}

fn bits(v: &Vector) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

/// Per-coordinate bounds of a component region, for dimension `d`.
fn component_bounds(r: &ClipRegion, d: usize) -> Option<Vec<f64>> {
    match r {
        ClipRegion::ComponentConstant(g) => Some(vec![*g; d]),
        ClipRegion::PerCoordinate(g) => Some(g.to_vec()),
        _ => None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn idempotent((x, _y, r) in case()) {
        let once = clip(&x, &r).unwrap();
        let twice = clip(&once, &r).unwrap();
        prop_assert_eq!(bits(&once), bits(&twice));
    }

    #[test]
    fn odd((x, _y, r) in case()) {
        let neg = x.scale(-1.0).unwrap();
        let a = clip(&neg, &r).unwrap();
        let b = clip(&x, &r).unwrap().scale(-1.0).unwrap();
        prop_assert_eq!(a.to_vec(), b.to_vec());
    }

    #[test]
    fn monotone_for_component_regions((x, y, r) in case()) {
        if component_bounds(&r, x.dim()).is_some() {
            let lo = x.zip_map(&y, f64::min).unwrap();
            let hi = x.zip_map(&y, f64::max).unwrap();
            let (cl, ch) = (clip(&lo, &r).unwrap(), clip(&hi, &r).unwrap());
            for (a, b) in cl.iter().zip(ch.iter()) {
                prop_assert!(a <= b);
            }
        }
    }

    #[test]
    fn output_inside_region((x, _y, r) in case()) {
        let c = clip(&x, &r).unwrap();
        match &r {
            ClipRegion::Norm(g) => prop_assert!(c.norm() <= *g),
            ClipRegion::Unbounded => prop_assert_eq!(bits(&c), bits(&x)),
            _ => {
                let g = component_bounds(&r, x.dim()).unwrap();
                for (cj, gj) in c.iter().zip(&g) {
                    prop_assert!(cj.abs() <= *gj);
                }
                let gmax = g.iter().copied().fold(0.0, f64::max);
                prop_assert!(c.norm_inf() <= gmax);
            }
        }
    }

    #[test]
    fn non_expansive((x, y, r) in case()) {
        let (cx, cy) = (clip(&x, &r).unwrap(), clip(&y, &r).unwrap());
        if r.is_norm() {
            let lhs = cx.sub(&cy).unwrap().norm();
            let rhs = x.sub(&y).unwrap().norm();
            prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12, "{} > {}", lhs, rhs);
        } else {
            for ((a, b), (u, v)) in cx.iter().zip(cy.iter()).zip(x.iter().zip(y.iter())) {
                prop_assert!((a - b).abs() <= (u - v).abs());
            }
        }
    }

    #[test]
    fn no_op_inside((x, _y, r) in case()) {
        let inside = match &r {
            ClipRegion::Norm(g) => x.norm() <= *g,
            ClipRegion::Unbounded => true,
            _ => {
                let g = component_bounds(&r, x.dim()).unwrap();
                x.iter().zip(&g).all(|(xj, gj)| xj.abs() < *gj)
            }
        };
        if inside {
            prop_assert_eq!(bits(&clip(&x, &r).unwrap()), bits(&x));
        }
    }

    #[test]
    fn norm_clip_keeps_direction(x in vector(3), g in 0.01..10.0f64) {
        let x = Vector::new(x).unwrap();
        let c = clip(&x, &ClipRegion::norm(g).unwrap()).unwrap();
        if !x.is_zero() {
            let cos = c.dot(&x).unwrap() / (c.norm() * x.norm());
            prop_assert!((cos - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn rejects_bad_inputs() {
    assert!(Vector::new(vec![f64::NAN]).is_err());
    assert!(ClipRegion::component(0.0).is_err());
    assert!(ClipRegion::norm(-1.0).is_err());
    let r = ClipRegion::per_coordinate(Vector::new(vec![1.0, 2.0]).unwrap()).unwrap();
    assert!(clip(&Vector::scalar(3.0).unwrap(), &r).is_err());
}

#[test]
fn exact_boundary_is_fixed() {
    let x = Vector::new(vec![3.0, 4.0]).unwrap();
    let c = clip(&x, &ClipRegion::norm(5.0).unwrap()).unwrap();
    assert_eq!(bits(&c), bits(&x));
    let y = Vector::scalar(-2.0).unwrap();
    assert_eq!(clip(&y, &ClipRegion::component(2.0).unwrap()).unwrap(), y);
}
