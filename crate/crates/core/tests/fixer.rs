mod common;

use common::*;
use liftlearn_core::fixer::*;
use liftlearn_core::planning::{fixtures, Case, Flags, GroundModel, State};
use liftlearn_core::symmetry::{count_permutations, enumerate_permutations, Permutation};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Duration;

fn exact() -> BranchAndBound {
    BranchAndBound::default()
}

#[test]
fn variable_count_of_one_gripper_step() {
    let b = fixtures::bundle("gripper-6-2-2").unwrap();
    assert_eq!((b.index.num_props(), b.index.num_actions()), (28, 50));
    let w = walks(&b, 1, 1, 1);
    let p = noisy_problem(&b, &w, 0.0, ObjectiveMask::ALL, &mut ChaCha8Rng::seed_from_u64(0));
    let prog = build(&p, &b.domain, &b.index);
    let pairs: usize = (0..b.domain.schemas.len()).map(|s| b.domain.bound_predicates(s).len()).sum();
    assert_eq!(prog.num_vars(), 28 * 2 + 50 + 3 * 28 + 3 * pairs);
    assert!(prog.var_id(Var::StepAdd { trace: 0, prop: 27, t: 0 }).is_some());
}

#[test]
fn truthful_tiny_problem_recovers_ground_truth() {
    let b = fixtures::bundle("blocksworld-1").unwrap();
    for seed in 0..4 {
        let w = walks(&b, 1, 1, seed);
        let p = noisy_problem(&b, &w, 0.0, ObjectiveMask::ALL, &mut ChaCha8Rng::seed_from_u64(0));
        let r = exact().solve(&p, &b.domain, &b.index).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert_sound(&b, &p, &r);
        let a = r.assignment.as_ref().unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(Some(&a.traces[0].actions), w[0].actions.as_ref());
        assert_eq!(a.traces[0].states, w[0].states);
        assert_eq!(enumerate_optimum(&p, &b.domain, &b.index, 1 << 20).unwrap(), r.objective);
    }
}

#[test]
fn truthful_assignment_is_feasible_and_optimal() {
    let b = fixtures::bundle("blocksworld-3").unwrap();
    let w = walks(&b, 3, 3, 5);
    let p = noisy_problem(&b, &w, 0.0, ObjectiveMask::ALL, &mut ChaCha8Rng::seed_from_u64(0));
    let truth = Assignment {
        model: b.model.clone(),
        traces: w
            .iter()
            .map(|t| TraceAssignment { states: t.states.clone(), actions: t.actions.clone().unwrap() })
            .collect(),
    };
    check_assignment(&p, &b.domain, &b.index, &truth).unwrap();
    let prog = build(&p, &b.domain, &b.index);
    assert!(prog.violations(&prog.values(&truth, &b.domain, &b.index)).is_empty());
    let r = exact().solve(&p, &b.domain, &b.index).unwrap();
    assert_eq!(r.status, Status::Optimal);
    assert_sound(&b, &p, &r);
    assert!((r.objective.unwrap() - objective_value(&p, &b.domain, &truth)).abs() < 1e-9);
}

#[test]
fn empty_objective_accepts_any_consistent_assignment() {
    let b = fixtures::bundle("blocksworld-2").unwrap();
    let w = walks(&b, 1, 2, 3);
    let mut p = noisy_problem(&b, &w, 0.1, ObjectiveMask::NONE, &mut ChaCha8Rng::seed_from_u64(1));
    let r = exact().solve(&p, &b.domain, &b.index).unwrap();
    assert_eq!(r.status, Status::Optimal);
    assert_eq!(r.objective, Some(0.0));
    assert_sound(&b, &p, &r);
    p.mask = ObjectiveMask::ALL;
    let truth = Assignment {
        model: b.model.clone(),
        traces: vec![TraceAssignment { states: w[0].states.clone(), actions: w[0].actions.clone().unwrap() }],
    };
    p.mask = ObjectiveMask::NONE;
    assert_eq!(objective_value(&p, &b.domain, &truth), 0.0);
}

#[test]
fn zero_time_limit_returns_nothing() {
    let b = fixtures::bundle("blocksworld-2").unwrap();
    let p = noisy_problem(&b, &walks(&b, 1, 2, 3), 0.1, ObjectiveMask::ALL, &mut ChaCha8Rng::seed_from_u64(1));
    let s = BranchAndBound::new(SolverOptions { time_limit: Some(Duration::ZERO), node_limit: None });
    let r = s.solve(&p, &b.domain, &b.index).unwrap();
    assert_eq!(r.status, Status::TimeoutNoSolution);
    assert!(r.assignment.is_none());
    assert!(extract_pseudo_labels(&p, &r, 0).is_empty());
}

#[test]
fn node_limit_keeps_a_sound_incumbent() {
    let b = fixtures::bundle("blocksworld-3").unwrap();
    let w = walks(&b, 3, 3, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p = random_problem(&b, &w, &mut rng);
    let s = BranchAndBound::new(SolverOptions { time_limit: None, node_limit: Some(2000) });
    let r = s.solve(&p, &b.domain, &b.index).unwrap();
    assert!(matches!(r.status, Status::Feasible | Status::TimeoutNoSolution | Status::Optimal));
    if r.assignment.is_some() {
        assert!(r.bound >= r.objective.unwrap() - 1e-9);
    }
    assert_sound(&b, &p, &r);
}

#[test]
fn unreachable_endpoints_are_infeasible() {
    let b = fixtures::bundle("blocksworld-3").unwrap();
    let w = walks(&b, 1, 1, 0);
    let mut p = noisy_problem(&b, &w, 0.0, ObjectiveMask::ALL, &mut ChaCha8Rng::seed_from_u64(0));
    // no single action touches every proposition
    let mut fin = p.traces[0].initial.clone();
    for q in 0..b.index.num_props() {
        fin.flip(q);
    }
    p.traces[0].final_state = fin;
    let r = exact().solve(&p, &b.domain, &b.index).unwrap();
    assert_eq!(r.status, Status::Infeasible);
    assert_eq!(enumerate_optimum(&p, &b.domain, &b.index, 1 << 20).unwrap(), None);
}

#[test]
fn optimum_matches_enumeration_on_random_predictions() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for name in ["blocksworld-1", "blocksworld-2"] {
        let b = fixtures::bundle(name).unwrap();
        for steps in [1, 2] {
            for seed in 0..5 {
                let w = walks(&b, 1, steps, seed);
                let p = random_problem(&b, &w, &mut rng);
                let r = exact().solve(&p, &b.domain, &b.index).unwrap();
                let e = enumerate_optimum(&p, &b.domain, &b.index, 1 << 20).unwrap();
                assert_eq!(r.status, Status::Optimal);
                assert!((r.objective.unwrap() - e.unwrap()).abs() < 1e-9, "{name} T={steps}");
                assert_sound(&b, &p, &r);
            }
        }
    }
}

#[test]
fn checker_agrees_with_program_rows_on_perturbed_assignments() {
    let b = fixtures::bundle("blocksworld-2").unwrap();
    let w = walks(&b, 2, 2, 4);
    let p = noisy_problem(&b, &w, 0.1, ObjectiveMask::ALL, &mut ChaCha8Rng::seed_from_u64(3));
    let prog = build(&p, &b.domain, &b.index);
    let base = Assignment {
        model: b.model.clone(),
        traces: w.iter().map(|t| TraceAssignment { states: t.states.clone(), actions: t.actions.clone().unwrap() }).collect(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    use rand::Rng;
    let (mut ok, mut bad) = (0, 0);
    for _ in 0..400 {
        let mut a = base.clone();
        match rng.random_range(0..3) {
            0 => {
                let j = rng.random_range(0..a.traces.len());
                let t = rng.random_range(0..a.traces[j].states.len());
                let q = rng.random_range(0..b.index.num_props());
                a.traces[j].states[t].flip(q);
            }
            1 => {
                let j = rng.random_range(0..a.traces.len());
                let t = rng.random_range(0..a.traces[j].actions.len());
                a.traces[j].actions[t] = rng.random_range(0..b.index.num_actions());
            }
            _ => {
                let (s, k) = b.domain.pairs().nth(rng.random_range(0..b.domain.num_pairs())).unwrap();
                a.model.set(s, k, Case::from_index(rng.random_range(0..4)).flags());
            }
        }
        let checker = check_assignment(&p, &b.domain, &b.index, &a).is_ok();
        let rows = prog.violations(&prog.values(&a, &b.domain, &b.index)).is_empty();
        assert_eq!(checker, rows);
        if checker { ok += 1 } else { bad += 1 }
    }
    assert!(ok > 20 && bad > 20, "{ok} consistent / {bad} inconsistent");

    // invalid lifted triples are caught by both
    let mut a = base.clone();
    a.model.set(0, 0, Flags { pre: false, add: true, del: true });
    assert_eq!(check_assignment(&p, &b.domain, &b.index, &a).unwrap_err().family, "del-implies-pre");
    assert!(!prog.violations(&prog.values(&a, &b.domain, &b.index)).is_empty());
}

#[test]
fn permutation_counts() {
    let (bw, _) = fixtures::domain("blocksworld").unwrap();
    assert_eq!(count_permutations(&bw), 16);
    let (gr, _) = fixtures::domain("gripper").unwrap();
    assert_eq!(count_permutations(&gr), 4);
    let perms = enumerate_permutations(&bw, 100).unwrap();
    assert_eq!(perms.len(), 16);
    assert!(perms[0].is_identity());
    assert!(perms.windows(2).all(|w| w[0].key() < w[1].key()));
    assert!(enumerate_permutations(&bw, 15).is_none());
}

fn truthful_result(b: &fixtures::Bundle, w: &[liftlearn_core::planning::StateTrace]) -> (FixProblem, FixResult) {
    let p = noisy_problem(b, w, 0.0, ObjectiveMask::ALL, &mut ChaCha8Rng::seed_from_u64(0));
    let r = exact().solve(&p, &b.domain, &b.index).unwrap();
    (p, r)
}

#[test]
fn alignment_keeps_a_matching_solution() {
    let b = fixtures::bundle("blocksworld-3").unwrap();
    let (p, r) = truthful_result(&b, &walks(&b, 2, 3, 1));
    let (aligned, perm) = align_permutation(&r, &p, &b.domain, &b.index, 1000);
    assert!(perm.is_identity());
    assert_eq!(aligned, r);
}

#[test]
fn alignment_undoes_a_schema_swap() {
    let b = fixtures::bundle("gripper-3-1-2").unwrap();
    let (p, r) = truthful_result(&b, &walks(&b, 2, 3, 2));
    let pick = b.domain.schema_id("pick").unwrap();
    let drop = b.domain.schema_id("drop").unwrap();
    let mut swap = Permutation::identity(&b.domain);
    swap.schema.swap(pick, drop);
    let a = r.assignment.as_ref().unwrap();
    let amap = swap.action_map(&b.index);
    let swapped = FixResult {
        assignment: Some(Assignment {
            model: swap.apply_model(&b.domain, &a.model),
            traces: a
                .traces
                .iter()
                .map(|t| TraceAssignment { states: t.states.clone(), actions: t.actions.iter().map(|&x| amap[x]).collect() })
                .collect(),
        }),
        ..r.clone()
    };
    // the renamed solution is still consistent with its own traces
    let gm = GroundModel::new(&swapped.assignment.as_ref().unwrap().model, &b.index);
    for t in &swapped.assignment.as_ref().unwrap().traces {
        for (i, &act) in t.actions.iter().enumerate() {
            assert_eq!(gm.successor(&t.states[i], act).unwrap(), t.states[i + 1]);
        }
    }
    assert_ne!(swapped.assignment, r.assignment);
    let (aligned, perm) = align_permutation(&swapped, &p, &b.domain, &b.index, 1000);
    assert_eq!(perm.schema[pick], drop);
    assert_eq!(aligned.assignment, r.assignment);
    // states untouched, actions relabelled consistently
    for (x, y) in aligned.assignment.as_ref().unwrap().traces.iter().zip(&swapped.assignment.as_ref().unwrap().traces) {
        assert_eq!(x.states, y.states);
    }
}

#[test]
fn alignment_scores_both_parameter_orders() {
    let b = fixtures::bundle("blocksworld-3").unwrap();
    let (p, r) = truthful_result(&b, &walks(&b, 3, 3, 6));
    let stack = b.domain.schema_id("stack").unwrap();
    let mut flip = Permutation::identity(&b.domain);
    flip.params[stack] = vec![1, 0];
    let a = r.assignment.as_ref().unwrap();
    let scores: Vec<f64> = [Permutation::identity(&b.domain), flip.clone()]
        .iter()
        .map(|q| model_agreement(&b.domain, &q.apply_model(&b.domain, &a.model), &p.model))
        .collect();
    assert!(scores[0] > scores[1]);
    let flipped = FixResult {
        assignment: Some(Assignment { model: flip.apply_model(&b.domain, &a.model), traces: a.traces.clone() }),
        ..r.clone()
    };
    let (aligned, perm) = align_permutation(&flipped, &p, &b.domain, &b.index, 1000);
    assert_eq!(perm.params[stack], vec![1, 0]);
    assert_eq!(aligned.assignment.as_ref().unwrap().model, b.model);
}

#[test]
fn pseudo_labels_follow_the_solution() {
    let b = fixtures::bundle("blocksworld-2").unwrap();
    let w = walks(&b, 2, 2, 9);
    let (p, r) = truthful_result(&b, &w);
    let labels = extract_pseudo_labels(&p, &r, 57);
    assert_eq!(labels.len(), 2);
    for (l, t) in labels.iter().zip(&w) {
        assert_eq!(l.epoch, 57);
        assert_eq!(l.states, t.states);
        assert_eq!(Some(&l.actions), t.actions.as_ref());
    }
    let pickup = b.domain.schema_id("pickup").unwrap();
    let ontable = b.domain.predicate_id("on-table").unwrap();
    let k = b.domain.pairs().position(|(s, bb)| s == pickup && b.domain.bound_predicates(s)[bb].predicate == ontable).unwrap();
    assert_eq!(labels[0].cases[k], Case::PreDel);
    assert_eq!(labels[0].cases[k].label(), 4);
    assert!((labels[0].weight(157, 0.99) - 0.99f64.powi(100)).abs() < 1e-12);
}

#[test]
fn files_round_trip() {
    let b = fixtures::bundle("gripper-3-1-2").unwrap();
    let w = walks(&b, 2, 3, 3);
    let p = noisy_problem(&b, &w, 0.2, ObjectiveMask::STATE_ACTION, &mut ChaCha8Rng::seed_from_u64(5));
    let mut buf = Vec::new();
    write_problem(&mut buf, &p, &b.domain, &b.index).unwrap();
    assert_eq!(read_problem(&buf[..], &b.domain, &b.index).unwrap(), p);

    let r = exact().solve(&p, &b.domain, &b.index).unwrap();
    let mut buf = Vec::new();
    write_result(&mut buf, &r, &b.domain, &b.index).unwrap();
    let back = read_result(&buf[..], &b.domain, &b.index).unwrap();
    assert_eq!(back.assignment, r.assignment);
    assert_eq!(back.status, r.status);

    let labels = extract_pseudo_labels(&p, &r, 3);
    let mut buf = Vec::new();
    write_labels(&mut buf, &labels, &b.index).unwrap();
    assert_eq!(read_labels(&buf[..], &b.domain, &b.index).unwrap(), labels);
    let _ = State::empty(0);
}
