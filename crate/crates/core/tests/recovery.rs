mod common;

use btforge::bench::{load_suite, load_task, TaskSpec};
use btforge::bt::{parse_bt, NodePath};
use btforge::envsim::bind_adapter;
use btforge::executor::{execute, BbValue, Executor, FailureKind, TickStatus};
use btforge::generator::{PromptMode, ScriptedGenerator};
use btforge::recovery::{
    escalate, generate_validated, regen_prompt, run_with_recovery, AttemptStage, RecoveryError, RecoveryPolicy,
    RegenScope,
};
use btforge::validator::ViolationCode;

use common::{fault_lines, suite_dir};

fn task(id: &str) -> TaskSpec {
    load_task(&suite_dir().join("tasks").join(format!("{id}.yaml"))).unwrap()
}

fn doc(body: &str) -> String {
    format!("<root BTCPP_format=\"4\"><BehaviorTree ID=\"MainTree\">{body}</BehaviorTree></root>")
}

#[test]
fn hallucinated_leaf_is_corrected_on_the_second_attempt() {
    let t = task("nav-e-01");
    let gen = ScriptedGenerator::new([doc(r#"<FlyTo goal="kitchen"/>"#), doc(r#"<MoveTo goal="kitchen"/>"#)]);
    let v = generate_validated(&t, &gen, &RecoveryPolicy::default(), &PromptMode::ZeroShot).unwrap();
    assert_eq!(v.attempts_used, 2);
    assert!(v.history[0].report.has(ViolationCode::UnknownNode));
    assert!(v.history[1].report.accepted());
    let prompts = gen.prompts();
    assert_eq!(prompts.len(), 2);
    assert!(!prompts[0].input.contains("rejected"));
    assert!(prompts[1].input.contains("FlyTo"), "{}", prompts[1].input);
}

#[test]
fn generation_gives_up_after_the_attempt_budget() {
    let t = task("nav-e-01");
    let gen = ScriptedGenerator::new(["<root><BehaviorTree>"]);
    let policy = RecoveryPolicy {
        max_inference_retries: 3,
        ..RecoveryPolicy::default()
    };
    match generate_validated(&t, &gen, &policy, &PromptMode::ZeroShot) {
        Err(RecoveryError::GenerationExhausted { history }) => {
            assert_eq!(history.len(), 3);
            assert!(history.iter().all(|a| a.report.has(ViolationCode::SyntaxError)));
        }
        other => panic!("expected exhaustion, got {other:?}"),
    }
    assert_eq!(gen.requests(), 3);
}

#[test]
fn fault_fixtures_escalate_to_the_declared_subtree() {
    let tasks = load_suite(&suite_dir()).unwrap();
    for line in fault_lines() {
        let Some(expected) = line.subtree else { continue };
        let t = tasks.iter().find(|t| t.id == line.task_id).unwrap();
        let tree = parse_bt(&line.outputs[0]).unwrap();
        let mut env = bind_adapter(t.world.clone(), &t.manifest).unwrap();
        let result = execute(&tree, &mut env, 10_000).unwrap();
        assert_eq!(result.final_status, TickStatus::Failure, "{}", t.id);
        let report = result.failure_reports.last().unwrap();
        assert_eq!(report.kind, FailureKind::Leaf);
        let esc = escalate(t, report, &tree, RegenScope::FailedSubtree).unwrap();
        assert_eq!(esc.subtree_path, NodePath::new(expected), "{}", t.id);
        assert!(!esc.context.env_message.is_empty());
        let whole = escalate(t, report, &tree, RegenScope::WholeTree).unwrap();
        assert_eq!(whole.subtree_path, NodePath::root());
    }
}

#[test]
fn docking_away_from_the_dock_is_regenerated() {
    let t = task("nav-e-11");
    let first = doc(r#"<Sequence><MoveTo goal="living_room"/><Dock/></Sequence>"#);
    let fix = doc(r#"<Sequence><MoveTo goal="dock"/><Dock/></Sequence>"#);
    let gen = ScriptedGenerator::new([first, fix]);
    let mut env = bind_adapter(t.world.clone(), &t.manifest).unwrap();
    let out = run_with_recovery(&t, &gen, &mut env, &RecoveryPolicy::default(), &PromptMode::ZeroShot).unwrap();
    assert_eq!(out.regen_rounds_used, 1);
    assert_eq!(out.result.final_status, TickStatus::Success);
    assert!(env.goal_met(&t.goal));
    assert_eq!(out.final_tree.root.leaf_ids(), ["MoveTo", "MoveTo", "Dock"]);
    let regen = &gen.prompts()[1].input;
    assert!(regen.contains("no dock at living_room"), "{regen}");
    assert!(regen.contains("Failed action: Dock"));
}

#[test]
fn invalid_replacement_is_retried_within_the_round() {
    let t = task("nav-e-11");
    let gen = ScriptedGenerator::new([
        doc(r#"<Sequence><MoveTo goal="living_room"/><Dock/></Sequence>"#),
        doc(r#"<Sequence><Teleport to="dock"/><Dock/></Sequence>"#),
        doc(r#"<Sequence><MoveTo goal="dock"/><Dock/></Sequence>"#),
    ]);
    let mut env = bind_adapter(t.world.clone(), &t.manifest).unwrap();
    let out = run_with_recovery(&t, &gen, &mut env, &RecoveryPolicy::default(), &PromptMode::ZeroShot).unwrap();
    assert_eq!(out.regen_rounds_used, 1);
    assert_eq!(out.history.len(), 3);
    assert_eq!(out.history[1].stage, AttemptStage::Regeneration { round: 1 });
    assert!(!out.history[1].report.accepted());
    assert!(out.result.succeeded());
}

#[test]
fn persistent_failure_exhausts_the_rounds() {
    let t = task("nav-m-04");
    let bad = doc(r#"<Sequence><MoveTo goal="office"/></Sequence>"#);
    let gen = ScriptedGenerator::new([bad.clone()]);
    let policy = RecoveryPolicy {
        max_regen_rounds: 2,
        ..RecoveryPolicy::default()
    };
    let mut env = bind_adapter(t.world.clone(), &t.manifest).unwrap();
    match run_with_recovery(&t, &gen, &mut env, &policy, &PromptMode::ZeroShot) {
        Err(RecoveryError::RegenExhausted(o)) => {
            assert_eq!(o.regen_rounds_used, 2);
            assert_eq!(o.result.final_status, TickStatus::Failure);
        }
        other => panic!("expected RegenExhausted, got {other:?}"),
    }
    // With regeneration disabled the failure is an ordinary outcome.
    let gen = ScriptedGenerator::new([bad]);
    let out = run_with_recovery(&t, &gen, &mut env, &RecoveryPolicy::plain(), &PromptMode::ZeroShot).unwrap();
    assert_eq!(out.regen_rounds_used, 0);
    assert_eq!(out.result.final_status, TickStatus::Failure);
}

#[test]
fn regeneration_context_carries_the_blackboard() {
    let t = task("nav-h-04");
    let tree = parse_bt(&doc(r#"<Sequence><ReadBattery level="{lvl}"/><Dock/></Sequence>"#)).unwrap();
    let mut env = bind_adapter(t.world.clone(), &t.manifest).unwrap();
    let mut seen = Vec::new();
    let mut ex = Executor::new(&tree);
    ex.subscribe(|r| seen.push(r.clone()));
    let result = ex.run(&mut env, 100).unwrap();
    drop(ex);
    assert_eq!(result.final_status, TickStatus::Failure);
    assert_eq!(seen.len(), 1);
    assert_eq!(seen[0].blackboard_snapshot.get("lvl"), Some(&BbValue::Number(100.0)));
    assert_eq!(seen[0].node_path, NodePath::new(vec![1]));

    let esc = escalate(&t, &seen[0], &tree, RegenScope::FailedSubtree).unwrap();
    assert_eq!(esc.subtree_path, NodePath::new(vec![1]));
    assert_eq!(esc.context.failed_leaf, "Dock");
    let prompt = regen_prompt(
        &btforge::generator::build_prompt(&t, &PromptMode::ZeroShot).unwrap(),
        &tree,
        &esc,
    );
    assert!(prompt.input.contains("  lvl = 100"), "{}", prompt.input);
    assert!(prompt.input.contains("<Dock/>"));
}

#[test]
fn escalation_looks_through_root_decorators() {
    let t = task("nav-m-05");
    let tree = parse_bt(&doc(
        r#"<Repeat num_cycles="2"><Sequence><MoveTo goal="kitchen"/><MoveTo goal="nowhere"/></Sequence></Repeat>"#,
    ))
    .unwrap();
    let mut env = bind_adapter(t.world.clone(), &t.manifest).unwrap();
    let result = execute(&tree, &mut env, 100).unwrap();
    let report = result.failure_reports.last().unwrap();
    assert_eq!(report.node_path, NodePath::new(vec![0, 1]));
    let esc = escalate(&t, report, &tree, RegenScope::FailedSubtree).unwrap();
    assert_eq!(esc.subtree_path, NodePath::new(vec![0, 1]));
}
