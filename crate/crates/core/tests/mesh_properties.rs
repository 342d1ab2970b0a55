use proptest::prelude::*;
use randfem_core::{Point2, RngStream, TriangleMesh};

fn single(a: Point2, b: Point2, c: Point2) -> TriangleMesh {
    TriangleMesh::new(vec![a, b, c], vec![[0, 1, 2]], vec![true; 3]).unwrap()
}

#[test]
fn single_triangle_geometry() {
    let m = single(Point2::new(0.0, 0.0), Point2::new(2.0, 0.0), Point2::new(0.0, 3.0));
    assert_eq!(m.triangle_area(0).unwrap(), 3.0);
    let g = m.barycenter(0).unwrap();
    assert!((g.x - 2.0 / 3.0).abs() < 1e-15 && (g.y - 1.0).abs() < 1e-15);

    let r = single(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0));
    assert_eq!(r.triangle_area(0).unwrap(), 0.5);
    let map = r.from_reference(0, [0, 1, 2]).unwrap();
    for p in [Point2::new(0.2, 0.3), Point2::new(1.0, 0.0), Point2::new(0.0, 0.0)] {
        assert_eq!(map.apply(p), p);
    }

    let s = single(Point2::new(0.0, 0.0), Point2::new(2.0, 0.0), Point2::new(0.0, 2.0));
    let map = s.from_reference(0, [0, 1, 2]).unwrap();
    assert_eq!(map.apply(Point2::new(0.25, 0.5)), Point2::new(0.5, 1.0));
    assert!((map.det().abs() - 4.0).abs() < 1e-15);
}

#[test]
fn structured_counts_and_adjacency() {
    for n in 1..=6u32 {
        let mesh = TriangleMesh::structured(n).unwrap();
        let k = 1usize << n;
        assert_eq!(mesh.n_vertices(), (k + 1) * (k + 1));
        assert_eq!(mesh.n_triangles(), 2 * k * k);
        assert_eq!(mesh.n_interior(), (k - 1) * (k - 1));
        let report = mesh.validate().unwrap();
        assert!((report.area_sum - 1.0).abs() < 1e-12);
        // Weitzenböck: |T| ≤ (√3/4) h².
        assert!(report.max_area <= 3f64.sqrt() / 4.0 * mesh.h() * mesh.h());
        assert!(report.quasi_uniformity > 0.0);
        // Brute-force adjacency: j is a vertex of t ⇔ t is listed for j.
        for j in 0..mesh.n_interior() {
            let v = mesh.interior_node(j);
            let brute: Vec<usize> = (0..mesh.n_triangles()).filter(|&t| mesh.triangle(t).contains(&v)).collect();
            let mut listed = mesh.node_triangles(j).to_vec();
            listed.sort_unstable();
            assert_eq!(listed, brute);
        }
    }
}

#[test]
fn partition_of_unity() {
    let mesh = TriangleMesh::structured(3).unwrap();
    let mut rng = RngStream::new(17, 0);
    for _ in 0..500 {
        let p = Point2::new(rng.next_f64(), rng.next_f64());
        let sum: f64 = (0..mesh.n_interior()).map(|j| mesh.basis_value(j, p).unwrap()).sum();
        assert!((-1e-12..=1.0 + 1e-12).contains(&sum), "sum {sum} at {p:?}");
    }
    // Equality on triangles with no boundary vertex.
    for t in 0..mesh.n_triangles() {
        if mesh.local_unknowns(t).iter().all(Option::is_some) {
            let p = mesh.barycenter(t).unwrap();
            let sum: f64 = (0..mesh.n_interior()).map(|j| mesh.basis_value(j, p).unwrap()).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn gradients_match_finite_differences() {
    let mesh = TriangleMesh::structured(3).unwrap();
    let mut rng = RngStream::new(3, 1);
    let delta = 1e-6 * mesh.grid_spacing().unwrap();
    for t in 0..mesh.n_triangles() {
        let [a, b, c] = mesh.corners(t);
        for _ in 0..10 {
            // Barycentric weights ≥ 0.1 keep the stencil inside the triangle.
            let (u, v) = (rng.next_f64(), rng.next_f64());
            let (u, v) = if u + v > 1.0 { (1.0 - u, 1.0 - v) } else { (u, v) };
            let (l1, l2) = (0.1 + 0.7 * u, 0.1 + 0.7 * v);
            let p = a * (1.0 - l1 - l2) + b * l1 + c * l2;
            for j in mesh.local_unknowns(t).into_iter().flatten() {
                let g = mesh.basis_gradient_on_triangle(j, t).unwrap();
                let val = |q: Point2| mesh.basis_value(j, q).unwrap();
                let dx = (val(p + Point2::new(delta, 0.0)) - val(p - Point2::new(delta, 0.0))) / (2.0 * delta);
                let dy = (val(p + Point2::new(0.0, delta)) - val(p - Point2::new(0.0, delta))) / (2.0 * delta);
                assert!((dx - g[0]).abs() < 1e-6 && (dy - g[1]).abs() < 1e-6, "t={t} j={j}");
            }
        }
    }
}

fn triangle() -> impl Strategy<Value = [Point2; 3]> {
    prop::array::uniform6(-5.0f64..5.0)
        .prop_map(|c| [Point2::new(c[0], c[1]), Point2::new(c[2], c[3]), Point2::new(c[4], c[5])])
        .prop_filter("non-degenerate", |[a, b, c]| (*b - *a).cross(*c - *a).abs() > 1e-2)
        .prop_map(|[a, b, c]| if (b - a).cross(c - a) > 0.0 { [a, b, c] } else { [a, c, b] })
}

fn ordering() -> impl Strategy<Value = [usize; 3]> {
    prop::sample::select(vec![[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]])
}

proptest! {
    #[test]
    fn reference_maps_round_trip(tri in triangle(), ord in ordering(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let mesh = single(tri[0], tri[1], tri[2]);
        let to_phys = mesh.from_reference(0, ord).unwrap();
        let to_ref = mesh.to_reference(0, ord).unwrap();
        prop_assert!((to_phys.det().abs() - 2.0 * mesh.area(0)).abs() < 1e-12 * (1.0 + mesh.area(0)));
        prop_assert_eq!(to_phys.apply(Point2::new(0.0, 0.0)), tri[ord[0]]);
        let back = to_ref.apply(to_phys.apply(Point2::new(a, b)));
        prop_assert!((back.x - a).abs() < 1e-12 && (back.y - b).abs() < 1e-12);
        let fixed = to_ref.apply(to_phys.apply(Point2::new(0.2, 0.3)));
        prop_assert!((fixed.x - 0.2).abs() < 1e-12 && (fixed.y - 0.3).abs() < 1e-12);
    }

    #[test]
    fn barycentric_coordinates_reproduce_points(tri in triangle(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let mesh = single(tri[0], tri[1], tri[2]);
        let (a, b) = if a + b > 1.0 { (1.0 - a, 1.0 - b) } else { (a, b) };
        let p = tri[0] * (1.0 - a - b) + tri[1] * a + tri[2] * b;
        let l = mesh.barycentric(0, p);
        prop_assert!((l[0] + l[1] + l[2] - 1.0).abs() < 1e-12);
        prop_assert!((l[1] - a).abs() < 1e-9 && (l[2] - b).abs() < 1e-9);
    }
}
