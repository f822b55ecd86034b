use embviz_core::data::{Label, TaskKind};
use embviz_core::knn::{knn_predict, NeighborSet};
use embviz_core::Scalar;

use crate::{PromptBundle, RawResponse};

fn response(text: String) -> RawResponse {
    RawResponse {
        text,
        latency_secs: 0.0,
        usage: None,
        request_id: Some("mock".into()),
        retries: 0,
    }
}

/// Deterministic stand-in for a VLM: states the distance-weighted KNN
/// decision in the response style seen from real models.
///
/// Panics if `ns` is empty.
pub fn mock_vlm_respond<T: Scalar>(p: &PromptBundle, ns: &NeighborSet<T>) -> RawResponse {
    let vote = knn_predict(ns, p.task_kind)
        .expect("mock needs a non-empty neighbor set of the prompt's task kind");
    match (p.task_kind, vote.label) {
        (TaskKind::Classification, Label::Class(c)) => {
            let (name, color) = p
                .colormap
                .iter()
                .find(|e| e.class_index == c)
                .map(|e| (e.class_name.clone(), e.color_name.clone()))
                .unwrap_or_else(|| (format!("class {c}"), "unknown".into()));
            response(format!(
                "The red star (query point) is closest to the {color}-colored training points, \
                 which are associated with {name}. FINAL ANSWER: {name}"
            ))
        }
        (_, label) => {
            // `{}` on f64 prints the shortest string that parses back exactly.
            let v = label.value().unwrap_or(f64::NAN);
            response(format!(
                "The red star (query point) sits among training points whose distance-weighted \
                 mean value is {v}. FINAL ANSWER: {v}"
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use embviz_core::parser::{parse_classification, parse_regression, Channel, ClassMap};

    use super::*;
    use crate::prompt::tests::{neighbor_set, plot};
    use crate::{build_prompt, PromptMode};

    fn bundle(task: TaskKind, ns: &NeighborSet<f64>) -> PromptBundle {
        let viz = plot(&[
            ("Class_1", "blue"),
            ("Class_2", "green"),
            ("Class_10", "orange"),
        ]);
        build_prompt(&viz, Some(ns), None, PromptMode::TsneKnn, task).unwrap()
    }

    fn classmap(p: &PromptBundle) -> ClassMap {
        let pairs: Vec<(String, String)> = p
            .colormap
            .iter()
            .map(|e| (e.class_name.clone(), e.color_name.clone()))
            .collect();
        ClassMap::new(&pairs).unwrap()
    }

    #[test]
    fn winner_is_verbalized() {
        let ns = neighbor_set(&[
            (0.1, Label::Class(1)),
            (0.5, Label::Class(0)),
            (0.6, Label::Class(0)),
        ]);
        let p = bundle(TaskKind::Classification, &ns);
        let r = mock_vlm_respond(&p, &ns);
        assert!(r.text.ends_with("FINAL ANSWER: Class_2"));
        assert!(r.text.contains("green-colored"));
        let parsed = parse_classification(&r.text, &classmap(&p)).unwrap();
        assert_eq!(parsed.value, Label::Class(1));
        assert_eq!(parsed.channel, Channel::Sentinel);
    }

    #[test]
    fn tie_goes_to_smaller_index() {
        let ns = neighbor_set(&[(1.0, Label::Class(2)), (1.0, Label::Class(0))]);
        let r = mock_vlm_respond(&bundle(TaskKind::Classification, &ns), &ns);
        assert!(r.text.ends_with("FINAL ANSWER: Class_1"));
    }

    #[test]
    fn regression_mean() {
        let ns = neighbor_set(&[(1.0, Label::Value(2.0)), (1.0, Label::Value(4.0))]);
        let r = mock_vlm_respond(&bundle(TaskKind::Regression, &ns), &ns);
        assert!(r.text.ends_with("FINAL ANSWER: 3"));
        let ns = neighbor_set(&[(0.3, Label::Value(-1.25)), (0.7, Label::Value(1e-3))]);
        let r = mock_vlm_respond(&bundle(TaskKind::Regression, &ns), &ns);
        let want = knn_predict(&ns, TaskKind::Regression).unwrap().label;
        assert_eq!(parse_regression(&r.text).unwrap().value, want);
    }
}
