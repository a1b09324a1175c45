use std::collections::BTreeMap;

use egp_core::attempts::{
    class_from_labels, class_from_probs, one_vs_rest, AttemptClass, Task, ThresholdPair,
};
use egp_core::corpus::load_annotations;
use egp_core::metrics::{
    best_f1, confusion, f1, max_precision_envelope, pr_scatter, precision_recall,
    write_envelope_csv, write_scatter_csv,
};
use egp_core::Error;
use log::info;
use serde::Serialize;

use super::{create, listing, load_detections, out_path, write_json};
use crate::config::RunConfig;
use crate::detections::{self, Detection, Key};
use crate::failure::{Context, Failure};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaskResult {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    /// Gold positives for this task.
    pub support: usize,
}

#[derive(Debug, Serialize)]
struct StatementReport {
    egp_id: u32,
    n: usize,
    tasks: BTreeMap<&'static str, TaskResult>,
}

#[derive(Debug, Serialize)]
struct MacroResult {
    precision: Option<f64>,
    recall: Option<f64>,
    f1: Option<f64>,
    /// Statements with a defined F1.
    n_statements: usize,
}

#[derive(Debug, Serialize)]
struct Report {
    detections: &'static str,
    n_pairs: usize,
    statements: Vec<StatementReport>,
    macro_average: BTreeMap<&'static str, MacroResult>,
}

pub fn evaluate(cfg: &RunConfig) -> Result<(), Failure> {
    let path = cfg.annotations()?;
    let annotations =
        load_annotations(path).context(format!("loading annotations {}", path.display()))?;
    let rows = load_detections(cfg)?;
    let by_key: BTreeMap<Key, &Detection> = rows.iter().map(|d| (d.key(), d)).collect();

    let mut missing = Vec::new();
    // egp_id -> (p_o, p_c, gold class) per annotated pair
    let mut per_statement: BTreeMap<u32, Vec<(f64, f64, AttemptClass)>> = BTreeMap::new();
    for a in &annotations {
        let key = (a.essay_id.clone(), a.index, a.egp_id);
        match by_key.get(&key) {
            Some(d) => per_statement.entry(a.egp_id).or_default().push((
                d.p_o,
                d.p_c,
                class_from_labels(a.y_o == 1, a.y_c == 1),
            )),
            None => missing.push(format!("({}, {}, {})", a.essay_id, a.index, a.egp_id)),
        }
    }
    if !missing.is_empty() {
        return Err(Failure::input(format!(
            "detections {} do not cover {} annotated pairs: {}",
            cfg.detections().display(),
            missing.len(),
            listing(missing.iter())
        )));
    }

    let binary = detections::is_binary(&rows);
    let pr_dir = cfg.out_dir().join("pr");
    let mut statements = Vec::new();
    for (&egp_id, items) in &per_statement {
        let mut tasks = BTreeMap::new();
        for task in Task::ALL {
            let result = if binary {
                single_point(items, task)
            } else {
                let (result, curves) = envelope_point(items, task)?;
                if let Some((scatter, envelope)) = curves {
                    let stem = format!("{egp_id}_{task}");
                    write_scatter_csv(
                        create(&pr_dir.join(format!("{stem}_scatter.csv")))?,
                        &scatter,
                    )?;
                    write_envelope_csv(
                        create(&pr_dir.join(format!("{stem}_envelope.csv")))?,
                        &envelope,
                    )?;
                }
                result
            };
            tasks.insert(task.as_str(), result);
        }
        statements.push(StatementReport {
            egp_id,
            n: items.len(),
            tasks,
        });
    }

    let mut macro_average = BTreeMap::new();
    for task in Task::ALL {
        let defined: Vec<&TaskResult> = statements
            .iter()
            .map(|s| &s.tasks[task.as_str()])
            .filter(|r| r.f1.is_some())
            .collect();
        let mean = |f: fn(&TaskResult) -> Option<f64>| {
            let v: Vec<f64> = defined.iter().filter_map(|r| f(r)).collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        };
        macro_average.insert(
            task.as_str(),
            MacroResult {
                precision: mean(|r| r.precision),
                recall: mean(|r| r.recall),
                f1: mean(|r| r.f1),
                n_statements: defined.len(),
            },
        );
    }

    let report = Report {
        detections: if binary { "binary" } else { "probability" },
        n_pairs: annotations.len(),
        statements,
        macro_average,
    };
    write_json(&out_path(cfg, "evaluation.json")?, &report)?;
    write_csv(cfg, &report)?;
    info!("evaluated {} annotated pairs", report.n_pairs);

    if report.macro_average.values().all(|m| m.f1.is_none()) {
        return Err(Failure::Undefined(
            "no statement has gold positives for any task; F1 is undefined throughout".into(),
        ));
    }
    Ok(())
}

fn write_csv(cfg: &RunConfig, report: &Report) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(create(&out_path(cfg, "evaluation.csv")?)?);
    w.write_record([
        "egp_id",
        "task",
        "n",
        "support",
        "precision",
        "recall",
        "f1",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for s in &report.statements {
        for (task, r) in &s.tasks {
            w.write_record([
                s.egp_id.to_string(),
                task.to_string(),
                s.n.to_string(),
                r.support.to_string(),
                opt(r.precision),
                opt(r.recall),
                opt(r.f1),
            ])?;
        }
    }
    for (task, m) in &report.macro_average {
        w.write_record([
            "macro".to_string(),
            task.to_string(),
            m.n_statements.to_string(),
            String::new(),
            opt(m.precision),
            opt(m.recall),
            opt(m.f1),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn gold_for(items: &[(f64, f64, AttemptClass)], task: Task) -> Vec<bool> {
    items
        .iter()
        .map(|&(_, _, c)| one_vs_rest(c, task))
        .collect()
}

/// Binary detections: the one operating point they define. F1 is undefined
/// without gold positives and zero when nothing is predicted.
pub fn single_point(items: &[(f64, f64, AttemptClass)], task: Task) -> TaskResult {
    let gold = gold_for(items, task);
    let at = ThresholdPair::both(0.5).expect("valid threshold");
    let pred: Vec<bool> = items
        .iter()
        .map(|&(o, c, _)| one_vs_rest(class_from_probs(o, c, at), task))
        .collect();
    let conf = confusion(&pred, &gold).expect("equal lengths");
    let (precision, recall) = precision_recall(&conf);
    TaskResult {
        precision,
        recall,
        f1: recall.map(|r| f1(precision.unwrap_or(0.0), r)),
        support: conf.tp + conf.fn_,
    }
}

type Curves = (Vec<egp_core::metrics::PrPoint>, egp_core::metrics::Envelope);

/// Probability detections: the best-F1 point of the max-precision envelope.
pub fn envelope_point(
    items: &[(f64, f64, AttemptClass)],
    task: Task,
) -> Result<(TaskResult, Option<Curves>), Failure> {
    let support = gold_for(items, task).iter().filter(|&&g| g).count();
    let undefined = TaskResult {
        precision: None,
        recall: None,
        f1: None,
        support,
    };
    let p_o: Vec<f64> = items.iter().map(|i| i.0).collect();
    let p_c: Vec<f64> = items.iter().map(|i| i.1).collect();
    let gold: Vec<AttemptClass> = items.iter().map(|i| i.2).collect();
    let scatter = match pr_scatter(&p_o, &p_c, &gold, task) {
        Ok(s) => s,
        Err(Error::Undefined(_)) => return Ok((undefined, None)),
        Err(e) => return Err(e.into()),
    };
    let envelope = max_precision_envelope(&scatter)?;
    let result = match best_f1(&envelope) {
        Ok(best) => {
            let &(recall, precision) = envelope
                .points
                .iter()
                .find(|&&(r, p)| f1(p, r) == best)
                .expect("best point on the envelope");
            TaskResult {
                precision: Some(precision),
                recall: Some(recall),
                f1: Some(best),
                support,
            }
        }
        // Every candidate predicts nothing positive.
        Err(_) => TaskResult {
            precision: None,
            recall: Some(0.0),
            f1: Some(0.0),
            support,
        },
    };
    Ok((result, Some((scatter, envelope))))
}
