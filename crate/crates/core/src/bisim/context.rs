use crate::lang::{load_program, Program};
use crate::semantics::InputPolicy;

use super::process::{check_process_equiv, EquivConfig, ProcessVerdict};
use super::BisimError;

/// A process template with a hole. Every `HOLE` in `body` is replaced by the
/// name of the process under test.
#[derive(Clone, Debug)]
pub struct Context {
    pub name: String,
    /// Parameter list of the resulting process, as source text.
    pub params: String,
    pub body: String,
}

impl Context {
    pub fn new(name: &str, params: &str, body: &str) -> Self {
        Context { name: name.into(), params: params.into(), body: body.into() }
    }

    fn definition(&self, def: &str, hole: &str) -> String {
        format!("process {def}({}) =\n  {}\n", self.params, self.body.replace("HOLE", hole))
    }
}

#[derive(Clone, Debug)]
pub struct ContextResult {
    pub context: String,
    /// `Err` holds the reason the context was skipped, usually a type error.
    pub outcome: Result<ProcessVerdict, String>,
}

/// Contexts for processes with interface `(a:^[Qbit], d:^[Qbit])`. The last
/// one shares a qubit between the hole and another thread and is expected
/// to be rejected by the type checker.
pub fn standard_contexts() -> Vec<Context> {
    let ad = "a:^[Qbit], d:^[Qbit]";
    vec![
        Context::new("input-prefix", "e:^[bit], a:^[Qbit], d:^[Qbit]", "e?[z:bit].HOLE(a, d)"),
        Context::new("deaf-parallel", "a:^[Qbit], d:^[Qbit], e:^[Qbit]", "HOLE(a, d) || (qbit r) e![r].0"),
        Context::new("hadamard-before", ad, "(new b)(a?[x:Qbit].{x *= H}.b![x].0 || HOLE(b, d))"),
        Context::new("hadamard-after", ad, "(new e)(HOLE(a, e) || e?[y:Qbit].{y *= H}.d![y].0)"),
        Context::new(
            "bell-half",
            "d:^[Qbit], e:^[Qbit]",
            "(qbit r, s) {r *= H}.{r,s *= CNot}.(new a)(a![r].0 || HOLE(a, d) || e![s].0)",
        ),
        Context::new("measure-output", "a:^[Qbit], m:^[bit]", "(new d)(HOLE(a, d) || d?[y:Qbit].m![measure y].0)"),
        Context::new("shared-qubit", "d:^[Qbit]", "(qbit r) (new a)(a![r].0 || HOLE(a, d) || {r *= H}.0)"),
    ]
}

fn fresh(program: &Program, base: &str) -> String {
    let mut name = base.to_string();
    while program.get(&name).is_some() {
        name.push('_');
    }
    name
}

/// Plugs `p` and `q` into every context and compares the results. Contexts
/// that do not typecheck are reported as skipped.
pub fn context_regression(
    program: &Program,
    p: &str,
    q: &str,
    contexts: &[Context],
    policy: &InputPolicy,
    cfg: &EquivConfig,
) -> Result<Vec<ContextResult>, BisimError> {
    let (cp, cq) = (fresh(program, "CtxLeft"), fresh(program, "CtxRight"));
    let base = program.to_string();
    let mut out = Vec::new();
    for c in contexts {
        let src = format!("{base}\n{}\n{}", c.definition(&cp, p), c.definition(&cq, q));
        let outcome = match load_program(&src) {
            Ok(prog) => Ok(check_process_equiv(&prog, &cp, &prog, &cq, policy, cfg)?),
            Err(d) => Err(d.to_string()),
        };
        out.push(ContextResult { context: c.name.clone(), outcome });
    }
    Ok(out)
}
