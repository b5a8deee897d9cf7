mod common;

use mmwave_plan::scenario::{generate_service_grid, GridSet, Scenario};
use mmwave_plan::visibility::{direct_visibility, OcclusionIndex};
use mmwave_plan::Point3;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn matches_box_oracles(seed in any::<u64>()) {
        prop_assert!(common::compare_scene(seed).is_ok(), "{:?}", common::compare_scene(seed));
    }

    #[test]
    fn occlusion_is_symmetric_and_matches_slabs(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (scenario, boxes) = common::random_box_scene(&mut rng);
        let occ = OcclusionIndex::new(&scenario);
        for _ in 0..40 {
            let p = common::random_source(&mut rng, &boxes);
            let q = common::random_source(&mut rng, &boxes);
            let c = occ.segment_clear(p, q);
            prop_assert_eq!(c, occ.segment_clear(q, p));
            prop_assert_eq!(c, occ.segment_clear_brute(p, q));
            prop_assert_eq!(c, common::clear(&boxes, p, q));
        }
    }
}

#[test]
fn oracle_scenes_exercise_indirect_paths() {
    let (mut spec, mut diff) = (0, 0);
    for seed in 0..50 {
        let [_, s, f] = common::compare_scene(seed).unwrap();
        spec += (s > 0) as usize;
        diff += (f > 0) as usize;
    }
    assert!(
        spec >= 10 && diff >= 10,
        "specular in {spec} scenes, diffuse in {diff}"
    );
}

#[test]
fn empty_scene_is_all_direct() {
    let s = Scenario::open_field(20.0, 10.0, 1.0);
    let sa: GridSet = generate_service_grid(&s);
    let occ = OcclusionIndex::new(&s);
    let d = direct_visibility(Point3::new(3.0, 4.0, 10.0), &sa, &occ);
    assert_eq!(d.count_ones(..), 200);
}

#[test]
fn wall_graze_does_not_block() {
    let boxes = [common::Boxy {
        lo: [10.0, 5.0],
        hi: [15.0, 10.0],
        h: 10.0,
    }];
    let s = common::box_scene(&boxes);
    let occ = OcclusionIndex::new(&s);
    // runs exactly along the south wall
    assert!(occ.segment_clear(Point3::new(5.0, 5.0, 2.0), Point3::new(20.0, 5.0, 2.0)));
    // and through the interior
    assert!(!occ.segment_clear(Point3::new(5.0, 7.0, 2.0), Point3::new(20.0, 7.0, 2.0)));
    // over the roof, touching it along the way
    assert!(occ.segment_clear(Point3::new(5.0, 7.0, 10.0), Point3::new(20.0, 7.0, 10.0)));
}
