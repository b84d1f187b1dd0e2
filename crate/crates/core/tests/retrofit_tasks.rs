use retrofit::harness::{afterlearner, generalization_experiment, AfterlearnerConfig, GeneralizationConfig};
use retrofit::tasks::{make_task, NormalizationTask, RetrofitTask, TaskName, TaskOptions, TwoConstantTask};
use retrofit::OptimizerName;

fn retrofit_gain(task: &dyn RetrofitTask, config: &AfterlearnerConfig) -> (f64, f64) {
    let result = afterlearner(config, task.domain(), task.validation()).unwrap();
    assert_eq!(result.total_evaluations, config.runs * config.budgets[0]);
    (task.test_loss(&task.domain().neutral()), task.test_loss(&result.best_parameters))
}

#[test]
fn normalization_improves_on_most_seeds() {
    let options = TaskOptions::default();
    let mut improved = 0;
    for seed in 0..20 {
        let task = make_task(TaskName::Normalization, seed, &options).unwrap();
        let config = AfterlearnerConfig::new(vec![OptimizerName::NgOptLite], vec![50], 6, seed);
        let (base, retro) = retrofit_gain(task.as_ref(), &config);
        improved += usize::from(retro < base);
    }
    assert!(improved >= 17, "{improved}/20");
}

#[test]
fn planted_normalization_optimum_beats_baseline() {
    for seed in 0..5 {
        let task = NormalizationTask::planted(seed, 1).unwrap();
        let neutral = task.domain().neutral();
        assert!(task.test_loss(task.planted_optimum()) <= task.test_loss(&neutral));
    }
}

#[test]
fn seq_rescale_improves_on_most_seeds() {
    let options = TaskOptions::default();
    let mut improved = 0;
    for seed in 0..10 {
        let task = make_task(TaskName::SeqRescale, seed, &options).unwrap();
        let config = AfterlearnerConfig::new(vec![OptimizerName::DiagonalEs], vec![1000], 1, seed);
        let (base, retro) = retrofit_gain(task.as_ref(), &config);
        improved += usize::from(retro < base);
    }
    assert!(improved >= 8, "{improved}/10");
}

#[test]
fn noisy_runs_are_reproducible_from_a_fresh_task() {
    let run = || {
        let task = make_task(TaskName::Policy, 3, &TaskOptions::default()).unwrap();
        let config = AfterlearnerConfig::new(vec![OptimizerName::OptimisticNoisyOnePlusOne], vec![40], 3, 9)
            .with_noise(true);
        let mut buf = Vec::new();
        afterlearner(&config, task.domain(), task.validation()).unwrap().write_summary(&mut buf).unwrap();
        buf
    };
    let first = run();
    assert_eq!(first, run());
    let text = String::from_utf8(first).unwrap();
    assert!(text.contains("\"schema_version\": 1"));
}

#[test]
fn generalization_csv_shape_and_determinism() {
    let config = GeneralizationConfig {
        configs: vec![(1, 16), (8, 2)],
        replicas: 5,
        optimizers: vec![OptimizerName::NgOptLite],
        workers: 1,
        seed: 4,
    };
    let report = generalization_experiment(TwoConstantTask::new, &config).unwrap();
    let csv = report.to_csv().unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "k,b,replica,val_loss,test_loss");
    assert_eq!(lines.len(), 1 + 2 * 5);
    assert_eq!(report.summaries.len(), 2);
    assert!(report.summary(8, 2).is_some());
    let again = generalization_experiment(TwoConstantTask::new, &config).unwrap();
    assert_eq!(csv, again.to_csv().unwrap());

    let bad = GeneralizationConfig { configs: vec![(1, 16), (4, 2)], ..config };
    assert!(generalization_experiment(TwoConstantTask::new, &bad).is_err());
}
