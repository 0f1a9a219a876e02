use crate::semantics::{Label, Lts, StateKind, Transition};

use super::partition::{mu_blocks, weak_closure, Partition};

fn same_output(
    lts: &Lts,
    part: &Partition,
    a: &Transition,
    b: &Transition,
    tol: f64,
) -> bool {
    let (Label::Output { channel: ca, values: va, .. }, Label::Output { channel: cb, values: vb, .. }) =
        (&a.label, &b.label)
    else {
        return false;
    };
    if ca != cb || va != vb || a.branches.len() != b.branches.len() {
        return false;
    }
    a.branches.iter().all(|x| {
        b.branches.iter().any(|y| {
            x.values == y.values
                && (x.prob - y.prob).abs() <= tol
                && part.same(x.target, y.target)
                && match (lts.env_density(x.target), lts.env_density(y.target)) {
                    (Some(dx), Some(dy)) => dx.approx_eq(&dy, tol),
                    _ => false,
                }
        })
    })
}

/// Checks that `(s, t)` satisfies every clause of a probabilistic
/// branching bisimulation w.r.t. `part`, read literally: `⇒` is taken over
/// the whole weak closure, not only inert steps.
fn pair_ok(lts: &Lts, part: &Partition, s: usize, t: usize, tol: f64) -> Result<(), String> {
    if lts.kind(s) == StateKind::Probabilistic || lts.kind(t) == StateKind::Probabilistic {
        let (ms, mt) = (mu_blocks(lts, s, part), mu_blocks(lts, t, part));
        let blocks = ms.keys().chain(mt.keys());
        for d in blocks {
            let (x, y) = (ms.get(d).copied().unwrap_or(0.0), mt.get(d).copied().unwrap_or(0.0));
            if (x - y).abs() > tol {
                return Err(format!("μ({s}, B{d}) = {x} but μ({t}, B{d}) = {y}"));
            }
        }
    }
    if lts.kind(s) == StateKind::Probabilistic {
        return Ok(());
    }
    let closure: Vec<usize> = weak_closure(lts, t).into_iter().filter(|u| part.same(*u, s)).collect();
    for e in lts.outgoing(s) {
        let ok = match &e.label {
            Label::Tau => {
                part.same(e.dst, t)
                    || closure.iter().any(|u| {
                        part.same(e.dst, *u) || lts.outgoing(*u).any(|f| f.label.is_tau() && part.same(f.dst, e.dst))
                    })
            }
            Label::Input { .. } => closure
                .iter()
                .any(|u| lts.outgoing(*u).any(|f| f.label == e.label && part.same(f.dst, e.dst))),
            Label::Output { .. } => {
                closure.iter().any(|u| lts.outgoing(*u).any(|f| same_output(lts, part, e, f, tol)))
            }
            Label::Prob(_) => true,
        };
        if !ok {
            return Err(format!("{s} --{}--> {} is not matched from {t}", e.label, e.dst));
        }
    }
    Ok(())
}

/// Verifies that `part`, read as an equivalence relation, is a
/// probabilistic branching bisimulation. Returns the first violated clause.
pub fn verify_branching(lts: &Lts, part: &Partition, tol: f64) -> Result<(), String> {
    for block in part.blocks() {
        for &s in &block {
            for &t in &block {
                if s != t {
                    pair_ok(lts, part, s, t, tol)?;
                }
            }
        }
    }
    Ok(())
}
