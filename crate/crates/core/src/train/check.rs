use crate::data::Utterance;
use crate::error::Result;
use crate::grad::fd::{numeric_param_grad, relative_error};
use crate::model::SegmentalModel;

use super::loss::{loss, loss_and_grads};

/// Backprop vs central differences for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub name: String,
    pub rel_error: f64,
}

/// Compares the gradient of the full training loss on `utt` with central
/// finite differences, for every parameter tensor.
pub fn gradient_check(model: &SegmentalModel, utt: &Utterance, with_length: bool, eps: f64) -> Result<Vec<GradCheck>> {
    let (_, analytic) = loss_and_grads(model, utt, with_length)?;
    let mut store = model.params.clone();
    let ids: Vec<_> = store.ids().collect();
    let mut out = Vec::with_capacity(ids.len());
    for id in ids {
        let numeric = numeric_param_grad(&mut store, id, eps, |s| {
            SegmentalModel::from_params(model.config.clone(), s.clone())
                .and_then(|m| loss(&m, utt, with_length))
                .map_or(f64::NAN, |l| l.total())
        });
        let exact = analytic[id.0].clone().unwrap_or_else(|| vec![0.0; numeric.len()]);
        out.push(GradCheck { name: store.get(id).name.clone(), rel_error: relative_error(&exact, &numeric) });
    }
    Ok(out)
}
