use randfem_core::assembly::{
    assemble_load_barycentric, assemble_load_is, assemble_load_mc, assemble_mass_vertices, assemble_stiffness_exact,
    assemble_stiffness_mc, CoefficientField,
};
use randfem_core::quadrature::{gauss_oracle, q_mc, TriangleRule};
use randfem_core::sampling::DrawProvenance;
use randfem_core::{ForcingTerm, Point2, Purpose, QuadratureDraw, RngStream, Sigma, TriangleMesh};

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn uniform(mesh: &TriangleMesh, seed: u64, rep: u32, purpose: Purpose) -> QuadratureDraw {
    QuadratureDraw::uniform(mesh, DrawProvenance::for_mesh(mesh, seed, rep, purpose)).unwrap()
}

#[test]
fn stratified_rule_is_unbiased() {
    let mesh = TriangleMesh::structured(2).unwrap();
    let cases: Vec<(&str, Box<dyn Fn(Point2) -> f64>)> = vec![
        ("1", Box::new(|_| 1.0)),
        ("x", Box::new(|p: Point2| p.x)),
        ("xy", Box::new(|p: Point2| p.x * p.y)),
        ("f2", Box::new(|p| ForcingTerm::F2.evaluate(p))),
    ];
    for (name, v) in cases {
        let exact = gauss_oracle(&v, &mesh, 8).unwrap();
        let samples: Vec<f64> = (0..10_000)
            .map(|r| q_mc(&v, &mesh, &uniform(&mesh, 21, r, Purpose::Quadrature)).unwrap())
            .collect();
        let (m, se) = mean_and_se(&samples);
        assert!((m - exact).abs() <= 4.0 * se + 1e-14, "{name}: mean {m} oracle {exact} se {se}");
    }
}

#[test]
fn randomized_stiffness_entries_are_unbiased() {
    let mesh = TriangleMesh::structured(2).unwrap();
    let rule = TriangleRule::conical(8).unwrap();
    let sigma = Sigma::Sine;
    // Interior node 4 is the center (0.5, 0.5); node 5 its east neighbour.
    for (i, j) in [(4, 4), (4, 5), (4, 1)] {
        let mut exact = 0.0;
        for t in 0..mesh.n_triangles() {
            let (gi, gj) = (mesh.basis_gradient_on_triangle(i, t).unwrap(), mesh.basis_gradient_on_triangle(j, t).unwrap());
            let dot = gi[0] * gj[0] + gi[1] * gj[1];
            if dot != 0.0 {
                exact += dot * rule.integrate_on(&mesh, t, &|p: Point2| sigma.value(p));
            }
        }
        let samples: Vec<f64> = (0..10_000)
            .map(|r| assemble_stiffness_mc(&mesh, &sigma, &uniform(&mesh, 8, r, Purpose::Stiffness)).unwrap().get(i, j))
            .collect();
        let (m, se) = mean_and_se(&samples);
        assert!((m - exact).abs() <= 4.0 * se, "({i},{j}): mean {m} oracle {exact} se {se}");
    }
}

#[test]
fn randomized_stiffness_is_coercive() {
    // vᵀ A_MC v ≥ σ₀ vᵀ A v with σ₀ = 1/2 for the sine coefficient.
    let mesh = TriangleMesh::structured(3).unwrap();
    let exact = assemble_stiffness_exact(&mesh);
    let mut rng = RngStream::new(4, 4);
    for r in 0..100 {
        let a = assemble_stiffness_mc(&mesh, &Sigma::Sine, &uniform(&mesh, 2, r, Purpose::Stiffness)).unwrap();
        assert!(a.is_symmetric(0.0));
        let v: Vec<f64> = (0..mesh.n_interior()).map(|_| rng.next_normal()).collect();
        assert!(a.quadratic_form(&v) >= Sigma::Sine.lower_bound() * exact.quadratic_form(&v));
        for (i, j, _) in a.entries() {
            let share = mesh.node_triangles(i).iter().any(|t| mesh.node_triangles(j).contains(t));
            assert!(share);
        }
    }
}

#[test]
fn assemblies_are_deterministic() {
    let mesh = TriangleMesh::structured(3).unwrap();
    let d1 = uniform(&mesh, 99, 1, Purpose::Stiffness);
    let d2 = uniform(&mesh, 99, 1, Purpose::Stiffness);
    assert_eq!(
        assemble_stiffness_mc(&mesh, &Sigma::Sine, &d1).unwrap(),
        assemble_stiffness_mc(&mesh, &Sigma::Sine, &d2).unwrap()
    );
    let prov = DrawProvenance::for_mesh(&mesh, 99, 1, Purpose::LoadIs);
    let h1 = QuadratureDraw::hat(&mesh, prov).unwrap();
    let h2 = QuadratureDraw::hat(&mesh, prov).unwrap();
    assert_eq!(
        assemble_load_is(&mesh, &ForcingTerm::F1, &h1).unwrap(),
        assemble_load_is(&mesh, &ForcingTerm::F1, &h2).unwrap()
    );
}

#[test]
fn mass_row_sums_match_incident_areas() {
    let mesh = TriangleMesh::structured(3).unwrap();
    let m = assemble_mass_vertices(&mesh);
    for v in 0..mesh.n_vertices() {
        let row: f64 = m.entries().filter(|&(i, _, _)| i == v).map(|(_, _, x)| x).sum();
        let brute: f64 = (0..mesh.n_triangles())
            .filter(|&t| mesh.triangle(t).contains(&v))
            .map(|t| mesh.area(t) / 3.0)
            .sum();
        assert!((row - brute).abs() < 1e-15, "vertex {v}");
    }
}

#[test]
fn importance_sampling_beats_monte_carlo_for_smooth_forcing() {
    let mesh = TriangleMesh::structured(3).unwrap();
    let j = 24; // node (0.5, 0.5)
    let f = ForcingTerm::F2;
    let exact = gauss_oracle(&|p: Point2| f.evaluate(p) * mesh.basis_value(j, p).unwrap(), &mesh, 8).unwrap();
    let mut mc = Vec::new();
    let mut is = Vec::new();
    for r in 0..10_000 {
        mc.push(assemble_load_mc(&mesh, &f, &uniform(&mesh, 5, r, Purpose::LoadMc)).unwrap()[j]);
        let hat = QuadratureDraw::hat(&mesh, DrawProvenance::for_mesh(&mesh, 5, r, Purpose::LoadIs)).unwrap();
        is.push(assemble_load_is(&mesh, &f, &hat).unwrap()[j]);
    }
    let (m_mc, se_mc) = mean_and_se(&mc);
    let (m_is, se_is) = mean_and_se(&is);
    assert!((m_mc - exact).abs() <= 4.0 * se_mc);
    assert!((m_is - exact).abs() <= 4.0 * se_is);
    assert!(se_is < se_mc, "IS se {se_is} vs MC se {se_mc}");
}

#[test]
fn barycentric_load_of_shifted_singular_forcing() {
    let mesh = TriangleMesh::structured(3).unwrap();
    let (load, nonfinite) = assemble_load_barycentric(&mesh, &ForcingTerm::F1Eps);
    assert!(nonfinite.is_empty());
    // Each incident triangle whose centroid lies on x = y contributes about
    // (|T|/3) eps^{-0.49}; diagonal nodes have two, their neighbours one.
    let third = mesh.area(0) / 3.0;
    let spike = third * f64::EPSILON.powf(-0.49);
    for j in 0..mesh.n_interior() {
        let on_line = mesh
            .node_triangles(j)
            .iter()
            .filter(|&&t| {
                let g = mesh.barycenter(t).unwrap();
                g.x == g.y
            })
            .count() as f64;
        if on_line > 0.0 {
            assert!(load[j] > 0.5 * on_line * spike && load[j] < 2.0 * on_line * spike, "node {j}: {}", load[j]);
        } else {
            assert!(load[j].abs() < 1e-3 * spike);
        }
    }
    // Without the shift the same rule hits the singularity.
    let (_, nonfinite) = assemble_load_barycentric(&mesh, &ForcingTerm::F1);
    assert!(!nonfinite.is_empty());
}
