use csfem::bench::{
    gen_full_ring, gen_joint, gen_patch, gen_plate, gen_ring, interpolate, max_couple_stress, patch_exact, ring_profile,
    run_bench, BenchName, BenchSpec, CANTILEVER_BOUND,
};
use csfem::model::ElementKind;
use csfem::{parse_model, serialize_model, validate_model, Analysis, Error};

fn solved(model: &csfem::model::Model) -> Analysis {
    let mut a = Analysis::new(model).unwrap();
    a.run().unwrap();
    a
}

#[test]
fn patch_is_exact_for_every_membrane_kind() {
    for kind in ElementKind::MEMBRANES {
        let model = gen_patch(kind, [0.8, 1.1], 1.0);
        let a = solved(&model);
        for n in &model.nodes {
            let u = a.node_displacement(n.id).unwrap();
            let ex = patch_exact(n.x, n.y);
            assert!((u[0] - ex[0]).abs() < 1e-9 && (u[1] - ex[1]).abs() < 1e-9, "{kind} node {}", n.id);
        }
        assert!(max_couple_stress(&a.element_fields()) < 1e-10, "{kind}");
    }
}

#[test]
fn patch_ignores_interior_node_and_length_scale() {
    let reference = solved(&gen_patch(ElementKind::Csmq4, [1.0, 1.0], 1.0));
    // at l = 1e3 the curvature stiffness dwarfs the membrane part and rounding shows at 1e-8
    for (l, tol) in [(1e-3, 1e-12), (1.0, 1e-12), (1e3, 1e-8)] {
        let a = solved(&gen_patch(ElementKind::Csmq4, [1.0, 1.0], l));
        for n in &a.model().nodes {
            let (u, r) = (a.node_displacement(n.id).unwrap(), reference.node_displacement(n.id).unwrap());
            for c in 0..3 {
                assert!((u[c] - r[c]).abs() < tol, "l = {l}: {} vs {}", u[c], r[c]);
            }
        }
    }
}

#[test]
fn half_ring_matches_the_full_ring() {
    for kind in [ElementKind::Csmq4, ElementKind::Csmq8] {
        let half = solved(&gen_ring(3, 12, kind, 0.3));
        let full = solved(&gen_full_ring(3, 24, kind, 0.3));
        let ph = ring_profile(&half).unwrap();
        let pf = ring_profile(&full).unwrap();
        assert_eq!(ph.len(), pf.len());
        for (a, b) in ph.iter().zip(&pf) {
            assert!((a[0] - b[0]).abs() < 1e-12);
            assert!((a[1] - b[1]).abs() < 1e-8, "{kind} r = {}: {} vs {}", a[0], a[1], b[1]);
        }
        assert_eq!(interpolate(&ph, 1.0).unwrap(), 1.0);
        assert_eq!(interpolate(&ph, 2.0).unwrap(), 0.0);
    }
}

#[test]
fn ring_profile_decays_from_the_inner_edge() {
    let spec = BenchSpec { density: 6, ..BenchSpec::new(BenchName::Ring) };
    let r = run_bench(&spec).unwrap();
    let p = &r.profiles[0].points;
    // a slight undershoot below zero is allowed next to the clamped outer edge
    assert!(p.iter().filter(|q| q[0] <= 1.75).collect::<Vec<_>>().windows(2).all(|w| w[1][1] < w[0][1]));
    assert!(p.iter().all(|q| q[1] > -0.05 && q[1] <= 1.0));
}

#[test]
fn interpolation_and_probe_errors() {
    let p = [[1.0, 4.0], [2.0, 2.0], [4.0, 0.0]];
    assert_eq!(interpolate(&p, 1.5).unwrap(), 3.0);
    assert_eq!(interpolate(&p, 3.0).unwrap(), 1.0);
    assert_eq!(interpolate(&p, 2.0).unwrap(), 2.0);
    assert!(matches!(interpolate(&p, 4.5), Err(Error::Evaluation(_))));
    assert!(matches!(interpolate(&[], 1.0), Err(Error::Evaluation(_))));
    // a patch has a single interior node on x = 0 above the origin
    let a = solved(&gen_patch(ElementKind::Csmq4, [0.8, 1.1], 1.0));
    assert!(ring_profile(&a).is_ok());
    let mut shifted = gen_patch(ElementKind::Csmq4, [0.8, 1.1], 1.0);
    shifted.nodes.iter_mut().for_each(|n| n.x += 10.0);
    let a = solved(&shifted);
    assert!(matches!(ring_profile(&a), Err(Error::Evaluation(_))));
}

#[test]
fn joint_resistance_is_bounded_and_grows_with_l() {
    for ratio in [0.1, 1.0, 10.0] {
        let mut previous = 0.0;
        for l in [1e-3, 0.1, 1.0, 10.0, 1e3] {
            let a = solved(&gen_joint(4, ElementKind::Csmq4, l, ratio));
            let resistance = a.history().last().unwrap().driven[1];
            assert!(resistance > 0.0 && resistance <= CANTILEVER_BOUND, "ratio {ratio}, l {l}: {resistance}");
            assert!(resistance >= previous, "ratio {ratio}, l {l}");
            previous = resistance;
        }
    }
}

#[test]
fn joint_bench_reports_resistance() {
    let spec = BenchSpec { density: 4, l: 1e3, ..BenchSpec::new(BenchName::Joint) };
    let r = run_bench(&spec).unwrap();
    let resistance = r.metric("resistance").unwrap();
    assert!(resistance > 0.0 && resistance <= CANTILEVER_BOUND);
}

fn first_step_reaction(n: usize) -> f64 {
    let mut model = gen_plate(n, ElementKind::Csmq4, 2.0);
    model.analysis.steps = 40;
    let mut a = Analysis::new(&model).unwrap();
    a.step().unwrap().driven[0]
}

#[test]
fn plate_elastic_slope_is_mesh_converged() {
    let r: Vec<f64> = [8, 16, 32].iter().map(|&n| first_step_reaction(n)).collect();
    assert!(r[0] > 0.0);
    assert!((r[1] / r[2] - 1.0).abs() < 0.01, "{r:?}");
    assert!((r[0] / r[2] - 1.0).abs() < 0.03, "{r:?}");
}

#[test]
fn plate_stress_concentrates_beside_the_hole() {
    let mut model = gen_plate(16, ElementKind::Csmq4, 2.0);
    model.analysis.steps = 40;
    let mut a = Analysis::new(&model).unwrap();
    a.step().unwrap();
    let fields = a.element_fields();
    let points = fields.iter().flat_map(|f| f.points.iter());
    let (mut near, mut far, mut count) = (f64::MIN, 0.0, 0);
    for p in points {
        let [x, y] = p.x;
        if x.abs() < 0.3 && y.abs() < 1.4 {
            near = near.max(p.sigma[0]);
        } else if x.abs() > 4.0 {
            far += p.sigma[0];
            count += 1;
        }
    }
    let far = far / count as f64;
    assert!(far > 0.0);
    assert!(near > 1.5 * far, "near {near}, far {far}");
}

#[test]
fn generated_models_round_trip_and_validate() {
    let models = [
        gen_patch(ElementKind::Csmt6, [0.8, 1.1], 1.0),
        gen_ring(2, 8, ElementKind::Csmq8, 0.1),
        gen_joint(4, ElementKind::Csmq5, 10.0, 1.0),
        gen_plate(4, ElementKind::Csmq4, 2.0),
    ];
    for m in &models {
        assert!(validate_model(m).is_empty(), "{:?}", validate_model(m));
        let text = serialize_model(m);
        let back = parse_model(&text).unwrap();
        assert_eq!(&back, m);
        assert_eq!(serialize_model(&back), text);
    }
}
