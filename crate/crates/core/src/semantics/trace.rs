use std::collections::HashSet;

use crate::qstate::DensityMatrix;

use super::config::Configuration;
use super::lts::Lts;
use super::step::{Label, Semantics};
use super::SemanticsError;

#[derive(Clone, Debug)]
pub struct TraceStep {
    /// The transition that led here; `None` for the initial configuration.
    pub label: Option<Label>,
    pub config: Configuration,
}

impl Semantics {
    /// One maximal run that always takes the first available transition.
    pub fn trace(&self, initial: Configuration, max_steps: usize) -> Result<Vec<TraceStep>, SemanticsError> {
        let mut steps = vec![TraceStep { label: None, config: initial }];
        while steps.len() <= max_steps {
            let cur = &steps.last().expect("non-empty").config;
            let next = match cur {
                Configuration::Probabilistic(bs) => bs
                    .first()
                    .map(|b| (Label::Prob(b.prob), Configuration::Mixed(b.mixture.clone()))),
                Configuration::Mixed(_) => self.transitions(cur)?.into_iter().next(),
            };
            match next {
                Some((label, config)) => steps.push(TraceStep { label: Some(label), config }),
                None => break,
            }
        }
        Ok(steps)
    }
}

/// The density of a single qubit sent on an interface channel.
#[derive(Clone, Debug)]
pub struct OutputDensity {
    /// The inputs received before the output, e.g. `a?[|0>]`.
    pub input: String,
    pub density: DensityMatrix,
}

/// For every input history, the reduced density of the qubit output on
/// `channel`, taken over the emitting configuration. Distinct densities for
/// the same history (from different interleavings or branches) are all
/// reported.
pub fn final_output_density(lts: &Lts, channel: &str) -> Result<Vec<OutputDensity>, SemanticsError> {
    let mut out: Vec<OutputDensity> = Vec::new();
    let mut seen = HashSet::new();
    let mut stack = vec![(lts.initial, Vec::<String>::new(), false)];
    while let Some((s, tag, emitted)) = stack.pop() {
        if !seen.insert((s, tag.clone(), emitted)) {
            continue;
        }
        let mut any = false;
        for t in lts.outgoing(s) {
            any = true;
            match &t.label {
                Label::Input { .. } => {
                    let mut tag2 = tag.clone();
                    tag2.push(t.label.to_string());
                    stack.push((t.dst, tag2, emitted));
                }
                Label::Output { channel: c, qubits, .. } if c == channel => {
                    if qubits.len() != 1 {
                        return Err(SemanticsError::NotSingleQubit(c.clone(), qubits.len()));
                    }
                    let m = lts.state(s).config.as_mixture().expect("outputs leave non-probabilistic states");
                    let density = m.density(qubits)?;
                    let input = tag.join(" ");
                    if !out.iter().any(|o| o.input == input && o.density.approx_eq(&density, 1e-9)) {
                        out.push(OutputDensity { input, density });
                    }
                    stack.push((t.dst, tag.clone(), true));
                }
                _ => stack.push((t.dst, tag.clone(), emitted)),
            }
        }
        if !any && !emitted {
            return Err(SemanticsError::MissingOutput { channel: channel.to_string(), state: s });
        }
    }
    let mut order: Vec<String> = Vec::new();
    for o in &out {
        if !order.contains(&o.input) {
            order.push(o.input.clone());
        }
    }
    order.sort();
    out.sort_by_key(|o| order.iter().position(|i| *i == o.input));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{load_program, Value};
    use crate::semantics::{InputPolicy, Limits, Options};

    #[test]
    fn identity_returns_its_input() {
        let p = load_program("process Identity(a:^[Qbit], d:^[Qbit]) = a?[x:Qbit].d![x].0").unwrap();
        let sem = Semantics::new(p, InputPolicy::basis(), Options::default());
        let args = [Value::Chan("a".into()), Value::Chan("d".into())];
        let lts = sem.explore("Identity", &args, Limits::default()).unwrap();
        let ds = final_output_density(&lts, "d").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds[0].input, "a?[|0>]");
        assert!((ds[0].density.get(0, 0).re - 1.0).abs() < 1e-12);
        assert!((ds[1].density.get(1, 1).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_output_is_an_error() {
        let p = load_program("process Sink(a:^[Qbit]) = a?[x:Qbit].0").unwrap();
        let sem = Semantics::new(p, InputPolicy::basis(), Options::default());
        let lts = sem.explore("Sink", &[Value::Chan("a".into())], Limits::default()).unwrap();
        assert!(matches!(final_output_density(&lts, "d"), Err(SemanticsError::MissingOutput { .. })));
    }

    #[test]
    fn trace_runs_to_the_end() {
        let p = load_program("process Identity(a:^[Qbit], d:^[Qbit]) = a?[x:Qbit].d![x].0").unwrap();
        let sem = Semantics::new(p, InputPolicy::basis(), Options::default());
        let args = [Value::Chan("a".into()), Value::Chan("d".into())];
        let steps = sem.trace(sem.initial_config("Identity", &args).unwrap(), 100).unwrap();
        assert_eq!(steps.len(), 3);
        assert!(steps[2].config.as_mixture().unwrap().is_terminal());
    }
}
