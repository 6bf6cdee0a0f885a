//! Reverse-mode traversal.

use std::collections::{HashMap, HashSet};

use crate::error::{AdError, Result};
use crate::tensor::{set_grad_enabled, Tensor};

/// Gradients keyed by tensor id.
#[derive(Default)]
pub struct Gradients {
    map: HashMap<u64, Tensor>,
}

impl Gradients {
    pub fn get(&self, t: &Tensor) -> Option<&Tensor> {
        self.map.get(&t.id())
    }

    /// Gradient for `t`, or zeros when `t` did not influence the loss.
    pub fn get_or_zeros(&self, t: &Tensor) -> Tensor {
        self.get(t)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(t.shape()).expect("valid shape"))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Post-order (inputs before consumers) over recorded nodes reachable from
/// `root`. Each tensor appears once.
fn topo_order(root: &Tensor) -> Vec<Tensor> {
    let mut order = Vec::new();
    let mut seen = HashSet::new();
    let mut stack: Vec<(Tensor, bool)> = vec![(root.clone(), false)];
    while let Some((t, expanded)) = stack.pop() {
        if expanded {
            order.push(t);
            continue;
        }
        if !seen.insert(t.id()) {
            continue;
        }
        stack.push((t.clone(), true));
        if let Some(node) = t.node() {
            for inp in node.inputs.iter().rev() {
                if inp.requires_grad() && !seen.contains(&inp.id()) {
                    stack.push((inp.clone(), false));
                }
            }
        }
    }
    order
}

enum Targets<'a> {
    AllLeaves,
    These(&'a HashSet<u64>),
}

fn run(loss: &Tensor, targets: Targets<'_>, create_graph: bool) -> Result<HashMap<u64, Tensor>> {
    if loss.numel() != 1 {
        return Err(AdError::NonScalarLoss(loss.shape().to_vec()));
    }
    let mut grads: HashMap<u64, Tensor> = HashMap::new();
    if !loss.requires_grad() {
        return Ok(grads);
    }
    let _mode = set_grad_enabled(create_graph);
    let order = topo_order(loss);

    let is_target = |t: &Tensor| match &targets {
        Targets::AllLeaves => t.is_leaf(),
        Targets::These(ids) => ids.contains(&t.id()),
    };
    // relevant: some target is reachable by walking down the inputs
    let mut relevant: HashSet<u64> = HashSet::new();
    for t in &order {
        let hit = is_target(t)
            || t
                .node()
                .is_some_and(|n| n.inputs.iter().any(|i| relevant.contains(&i.id())));
        if hit {
            relevant.insert(t.id());
        }
    }
    if !relevant.contains(&loss.id()) {
        return Ok(grads);
    }

    grads.insert(loss.id(), Tensor::ones(loss.shape())?);
    let mut result = HashMap::new();
    for t in order.iter().rev() {
        if !relevant.contains(&t.id()) {
            continue;
        }
        let g = if is_target(t) {
            match grads.get(&t.id()) {
                Some(g) => {
                    result.insert(t.id(), g.clone());
                    g.clone()
                }
                None => continue,
            }
        } else {
            match grads.remove(&t.id()) {
                Some(g) => g,
                None => continue,
            }
        };
        let Some(node) = t.node() else { continue };
        let needs: Vec<bool> = node.inputs.iter().map(|i| relevant.contains(&i.id())).collect();
        let vjps = node.op.vjp(&node.inputs, t, &g, &needs, create_graph)?;
        for (inp, gi) in node.inputs.iter().zip(vjps) {
            let Some(gi) = gi else { continue };
            if !relevant.contains(&inp.id()) {
                continue;
            }
            let merged = match grads.remove(&inp.id()) {
                Some(prev) => prev.add(&gi)?,
                None => gi,
            };
            grads.insert(inp.id(), merged);
        }
    }
    Ok(result)
}

/// Gradients of a scalar `loss` for every leaf that requires grad.
/// Fan-out contributions are summed.
pub fn backward(loss: &Tensor) -> Result<Gradients> {
    Ok(Gradients {
        map: run(loss, Targets::AllLeaves, false)?,
    })
}

/// Gradients of `loss` w.r.t. each tensor in `wrt` (zeros where unreachable).
/// With `create_graph`, the results are recorded graph nodes and can be
/// differentiated again.
pub fn grad(loss: &Tensor, wrt: &[&Tensor], create_graph: bool) -> Result<Vec<Tensor>> {
    let ids: HashSet<u64> = wrt.iter().map(|t| t.id()).collect();
    let map = run(loss, Targets::These(&ids), create_graph)?;
    Ok(wrt
        .iter()
        .map(|t| {
            map.get(&t.id())
                .cloned()
                .unwrap_or_else(|| Tensor::zeros(t.shape()).expect("valid shape"))
        })
        .collect())
}

/// `∂loss/∂wrt` as a differentiable graph node (double backprop).
pub fn grad_as_node(loss: &Tensor, wrt: &Tensor) -> Result<Tensor> {
    Ok(grad(loss, &[wrt], true)?.remove(0))
}
