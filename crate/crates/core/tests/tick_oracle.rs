mod common;

use common::tick_oracle::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const BUDGET: u64 = 8;

fn assert_agrees(cases: &[Case]) {
    for c in cases {
        let want = oracle_run(&c.tree, &c.scripts, BUDGET);
        let got = executor_run(&c.tree, &c.scripts, BUDGET);
        assert_eq!(got, want, "mismatch on {:?} with {:?}", c.tree.root, c.scripts);
    }
}

#[test]
fn agrees_on_all_depth2_trees() {
    let cases = exhaustive_depth2();
    assert!(cases.len() > 4000);
    assert_agrees(&cases);
}

#[test]
fn agrees_on_sampled_depth3_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    assert_agrees(&random_depth3(&mut rng, 2000));
}

#[test]
fn sequence_children_ticked_left_to_right() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for c in random_depth3(&mut rng, 500) {
        let run = executor_run(&c.tree, &c.scripts, BUDGET);
        for (path, node) in c.tree.root.walk() {
            if !matches!(node.kind, btforge::bt::NodeKind::Sequence) {
                continue;
            }
            for tick in 0..run.ticks {
                let order: Vec<usize> = run
                    .trace
                    .iter()
                    .filter(|(t, p, _)| *t == tick && p.len() == path.len() + 1 && p.starts_with(path.indices()))
                    .map(|(_, p, _)| p[path.len()])
                    .collect();
                assert!(order.windows(2).all(|w| w[0] < w[1]), "{order:?}");
            }
        }
    }
}

#[test]
fn failure_always_reports_a_leaf() {
    use btforge::executor::{execute, ScriptedEnvironment};
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for c in random_depth3(&mut rng, 500) {
        let mut env = ScriptedEnvironment::new();
        for (id, s) in &c.scripts {
            env = env.script(id.clone(), s.clone());
        }
        let r = execute(&c.tree, &mut env, BUDGET).unwrap();
        if !r.succeeded() {
            assert!(r
                .failure_reports
                .iter()
                .any(|f| c.tree.get(&f.node_path).is_some_and(|n| n.kind.is_leaf())));
        }
    }
}
