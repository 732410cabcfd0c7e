use std::sync::Arc;

use nalgebra::{DMatrix, Vector2, Vector3};
use proptest::prelude::*;

use curvedsurf::fem::CsrMatrix;
use curvedsurf::geometry::{CurvedSurface, SurfaceGeometry};
use curvedsurf::gridfunctions::AnalyticGridFunction;
use curvedsurf::io::{self, ordering, Encoding, Field, HigherOrderMeshData, ParsedFieldData};
use curvedsurf::lagrange::LagrangeBasis;
use curvedsurf::mesh::{self, LagrangeNumbering};
use curvedsurf::projections::{AnalyticSurface, SphereProjection, TorusProjection};
use curvedsurf::quadrature;

fn local_point() -> impl Strategy<Value = Vector2<f64>> {
    (0.0..1.0f64, 0.0..1.0f64)
        .prop_map(|(u, v)| if u + v > 1.0 { Vector2::new(1.0 - u, 1.0 - v) } else { Vector2::new(u, v) })
}

fn ambient_point(scale: f64) -> impl Strategy<Value = Vector3<f64>> {
    (-scale..scale, -scale..scale, -scale..scale).prop_map(|(x, y, z)| Vector3::new(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lagrange_partition_of_unity_and_reproduction(order in 1usize..=6, x in local_point(), a in 0usize..=6) {
        let basis = LagrangeBasis::triangle(order).unwrap();
        let phi = basis.evaluate(&x);
        prop_assert!((phi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let gradient_sum: Vector2<f64> = basis.gradients(&x).iter().sum();
        prop_assert!(gradient_sum.norm() < 1e-10);
        let a = a.min(order);
        let f = |p: &Vector2<f64>| p.x.powi(a as i32) * p.y.powi((order - a) as i32);
        let interpolant: f64 = phi.iter().zip(basis.node_positions()).map(|(w, p)| w * f(&p)).sum();
        prop_assert!((interpolant - f(&x)).abs() < 1e-11);
    }

    #[test]
    fn quadrature_integrates_monomials(degree in 0usize..=quadrature::MAX_DEGREE, split in 0.0..1.0f64) {
        let a = (split * degree as f64).floor() as usize;
        let b = degree - a;
        let factorial = |n: usize| (1..=n).map(|i| i as f64).product::<f64>();
        let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
        let value: f64 = quadrature::rule(2, degree)
            .unwrap()
            .iter()
            .map(|q| q.weight * q.position.x.powi(a as i32) * q.position.y.powi(b as i32))
            .sum();
        prop_assert!((value - exact).abs() < 1e-13 * (1.0 + exact));
    }

    #[test]
    fn file_ordering_is_a_permutation(order in 1usize..=6) {
        let n = (order + 1) * (order + 2) / 2;
        let canonical: Vec<usize> = (0..n).collect();
        let file = ordering::to_file(order, &canonical);
        prop_assert_eq!(ordering::to_canonical(order, &file), canonical);
        let mut sorted = file.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        prop_assert_eq!(&file[..3], &[0, 1, 2]);
    }

    #[test]
    fn projections_are_idempotent(p in ambient_point(3.0)) {
        let surfaces: [&dyn AnalyticSurface; 2] = [&SphereProjection::new(1.3), &TorusProjection::new(2.0, 0.7)];
        for s in surfaces {
            if let Ok(x) = s.project(&p) {
                prop_assert!((s.project(&x).unwrap() - x).norm() < 1e-10);
                prop_assert!((s.normal(&x).norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn flat_refinement_preserves_area_and_topology(levels in 0usize..=3, shape in 0usize..3) {
        let base = match shape {
            0 => mesh::tetrahedron(),
            1 => mesh::octahedron(),
            _ => mesh::icosahedron(1.0),
        };
        let fine = base.refined(levels, None).unwrap();
        prop_assert!((fine.area() - base.area()).abs() < 1e-12);
        prop_assert!(fine.is_closed());
        prop_assert_eq!(fine.euler_characteristic(), 2);
        prop_assert_eq!(fine.num_triangles(), base.num_triangles() * 4usize.pow(levels as u32));
    }

    #[test]
    fn numbering_shares_nodes_across_edges(order in 1usize..=5, levels in 0usize..=2) {
        let m = mesh::octahedron().refined(levels, None).unwrap();
        let numbering = LagrangeNumbering::new(&m, order).unwrap();
        let expected = m.num_vertices() + (order - 1) * m.num_edges() + m.num_triangles() * (order.saturating_sub(1) * order.saturating_sub(2) / 2);
        prop_assert_eq!(numbering.len(), expected);
        let mut seen = vec![false; numbering.len()];
        for e in 0..m.num_triangles() {
            for &g in numbering.element(e) {
                seen[g] = true;
            }
        }
        prop_assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn vtu_roundtrip_is_byte_stable(order in 1usize..=4, level in 0usize..=1, binary in any::<bool>(), scale in 0.5..2.0f64) {
        let projection = SphereProjection::new(scale);
        let m = Arc::new(mesh::icosahedron(scale).refined(level, Some(&projection)).unwrap());
        let cs = CurvedSurface::new(AnalyticGridFunction::from_projection(m, projection), order as i32).unwrap();
        let data = HigherOrderMeshData::from_curved_surface(&cs, order).unwrap();
        let n = LagrangeNumbering::new(data.mesh(), order).unwrap().len();
        let mut fields = ParsedFieldData::default();
        fields.point_data.insert("height".into(), Field::scalar((0..n).map(|i| (i as f64).sqrt() * scale).collect()));
        let encoding = if binary { Encoding::Base64 } else { Encoding::Ascii };
        let text = io::vtu_string(&data, &fields, encoding).unwrap();
        let (back, back_fields) = io::parse_vtu(&text).unwrap();
        prop_assert_eq!(back.nodes(), data.nodes());
        prop_assert_eq!(&back_fields, &fields);
        prop_assert_eq!(io::vtu_string(&back, &back_fields, encoding).unwrap(), text);
    }

    #[test]
    fn csr_product_matches_dense(n in 1usize..12, seed in any::<u64>()) {
        let values: Vec<f64> = (0..n * n)
            .map(|i| {
                let h = (seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
                if h % 3 == 0 { 0.0 } else { (h >> 11) as f64 / (1u64 << 53) as f64 - 0.5 }
            })
            .collect();
        let dense = DMatrix::from_row_slice(n, n, &values);
        let csr = CsrMatrix::from_dense(&dense);
        prop_assert_eq!(csr.to_dense(), dense.clone());
        let x: Vec<f64> = (0..n).map(|i| i as f64 - 0.5 * n as f64).collect();
        let mut y = vec![0.0; n];
        csr.mul_vec(&x, &mut y);
        let expected = &dense * nalgebra::DVector::from_vec(x);
        for i in 0..n {
            prop_assert!((y[i] - expected[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn curved_sphere_nodes_lie_on_the_sphere(order in 1usize..=4, x in local_point()) {
        let projection = SphereProjection::new(1.0);
        let m = Arc::new(mesh::icosahedron(1.0));
        let cs = CurvedSurface::new(AnalyticGridFunction::from_projection(m, projection), order as i32).unwrap();
        let basis = LagrangeBasis::triangle(order).unwrap();
        for e in [0, 7, 19] {
            let g = cs.element_geometry(e).unwrap();
            for p in basis.node_positions() {
                prop_assert!((g.global(&p).unwrap().norm() - 1.0).abs() < 1e-14);
            }
            // no point dips below the icosahedron's inradius 0.7947
            let r = g.global(&x).unwrap().norm();
            prop_assert!(r > 0.794 && r < 1.05, "{}", r);
            prop_assert!(g.integration_element(&x).unwrap() > 0.0);
        }
    }
}
