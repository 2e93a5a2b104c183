use std::collections::BTreeSet;

use super::ast::{BinOp, Cond, Contract, Expr, FunctionDef, SourceLoc, Stmt};
use super::{
    account_address, CheckedErrorKind, DeployError, ExecResult, Instrumentation, StorageState, Termination,
    Transaction, TxError, Value, DEPLOYER,
};
use crate::metrics::{self, CostVector, MetricId, MetricKind};

/// Non-local exits out of statement execution.
enum Exit {
    Return(Value),
    Halt,
    Abort(Termination),
}

struct Machine<'a> {
    storage: StorageState,
    locals: Vec<Value>,
    sender: Value,
    instr: &'a Instrumentation,
    steps: u64,
    loops: Vec<SourceLoc>,
    trace: Vec<(SourceLoc, bool)>,
    costs: CostVector,
    executed: BTreeSet<SourceLoc>,
    stores: Vec<(SourceLoc, u64)>,
}

impl<'a> Machine<'a> {
    fn new(storage: StorageState, f: &FunctionDef, args: &[Value], sender: Value, instr: &'a Instrumentation) -> Self {
        let mut locals = vec![0; f.frame_size];
        locals[..args.len()].copy_from_slice(args);
        Self {
            storage,
            locals,
            sender,
            instr,
            steps: 0,
            loops: Vec::new(),
            trace: Vec::new(),
            costs: CostVector::new(),
            executed: BTreeSet::new(),
            stores: Vec::new(),
        }
    }

    fn run_body(&mut self, body: &[Stmt]) -> Termination {
        match self.block(body) {
            Ok(()) => Termination::Normal { returned: None },
            Err(Exit::Return(v)) => Termination::Normal { returned: Some(v) },
            Err(Exit::Halt) => Termination::Halted,
            Err(Exit::Abort(t)) => t,
        }
    }

    fn block(&mut self, body: &[Stmt]) -> Result<(), Exit> {
        for s in body {
            self.stmt(s)?;
        }
        Ok(())
    }

    fn tick(&mut self, loc: SourceLoc) -> Result<(), Exit> {
        self.steps += 1;
        if self.steps > self.instr.step_budget {
            let loc = self.loops.last().copied().unwrap_or(loc);
            return Err(Exit::Abort(Termination::CheckedError {
                loc,
                error: CheckedErrorKind::StepBudget,
            }));
        }
        self.executed.insert(loc);
        Ok(())
    }

    fn store(&mut self, loc: SourceLoc, slot: u64, value: Value) {
        self.stores.push((loc, slot));
        if let Some(attack) = self.instr.attack_slot {
            let id = MetricId::new(loc, MetricKind::StoreDistance);
            self.costs
                .record_with(id, metrics::store_cost(slot, attack), self.instr.merge);
        }
        self.storage.set(slot, value);
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), Exit> {
        self.tick(s.loc())?;
        match s {
            Stmt::Let { local, value, .. } | Stmt::AssignLocal { local, value, .. } => {
                let v = self.eval(value)?;
                self.locals[*local] = v;
            }
            Stmt::AssignScalar { slot, value, loc } => {
                let v = self.eval(value)?;
                self.store(*loc, *slot, v);
            }
            Stmt::AssignIndex {
                base,
                index,
                value,
                loc,
            } => {
                let i = self.eval(index)?;
                let v = self.eval(value)?;
                self.store(*loc, element_slot(*base, i), v);
            }
            Stmt::Push { base, value, loc } => {
                let v = self.eval(value)?;
                let len = self.storage.get(*base);
                self.store(*loc, element_slot(*base, len), v);
                self.store(*loc, *base, len.wrapping_add(1));
            }
            Stmt::Pop { base, loc } => {
                let len = self.storage.get(*base);
                self.store(*loc, *base, len.wrapping_sub(1));
            }
            Stmt::Require { cond, .. } => {
                if !self.cond(cond)? {
                    return Err(Exit::Abort(Termination::RequireFailed { loc: s.loc() }));
                }
            }
            Stmt::Assert { cond, .. } => {
                if !self.cond(cond)? {
                    return Err(Exit::Abort(Termination::AssertFailed { loc: s.loc() }));
                }
            }
            Stmt::If {
                cond,
                then_body,
                else_body,
                ..
            } => {
                if self.cond(cond)? {
                    self.block(then_body)?;
                } else {
                    self.block(else_body)?;
                }
            }
            Stmt::While { cond, body, loc } => {
                self.loops.push(*loc);
                let r = self.while_loop(cond, body, *loc);
                self.loops.pop();
                r?;
            }
            Stmt::Return { value, .. } => {
                let v = self.eval(value)?;
                return Err(Exit::Return(v));
            }
            Stmt::Halt { .. } => return Err(Exit::Halt),
        }
        Ok(())
    }

    fn while_loop(&mut self, cond: &Cond, body: &[Stmt], loc: SourceLoc) -> Result<(), Exit> {
        while self.cond(cond)? {
            self.block(body)?;
            // every re-evaluation of the loop head is a step
            self.tick(loc)?;
        }
        Ok(())
    }

    fn cond(&mut self, c: &Cond) -> Result<bool, Exit> {
        let l = self.eval(&c.lhs)?;
        let r = self.eval(&c.rhs)?;
        let (to_false, to_true) = metrics::branch_costs(c.op, l, r, c.signedness);
        let merge = self.instr.merge;
        self.costs
            .record_with(MetricId::new(c.loc, MetricKind::FlipToFalse), to_false, merge);
        self.costs
            .record_with(MetricId::new(c.loc, MetricKind::FlipToTrue), to_true, merge);
        let taken = metrics::evaluate(c.op, l, r, c.signedness);
        self.executed.insert(c.loc);
        self.trace.push((c.loc, taken));
        Ok(taken)
    }

    fn eval(&mut self, e: &Expr) -> Result<Value, Exit> {
        Ok(match e {
            Expr::Int(v) => *v,
            Expr::Local(i) => self.locals[*i],
            Expr::Scalar(slot) => self.storage.get(*slot),
            Expr::Sender => self.sender,
            Expr::Len(base) => self.storage.get(*base),
            Expr::Index { base, index } => {
                let i = self.eval(index)?;
                self.storage.get(element_slot(*base, i))
            }
            Expr::Binary { op, lhs, rhs, loc } => {
                let l = self.eval(lhs)?;
                let r = self.eval(rhs)?;
                match op {
                    BinOp::Add => l.wrapping_add(r),
                    BinOp::Sub => l.wrapping_sub(r),
                    BinOp::Mul => l.wrapping_mul(r),
                    BinOp::Div | BinOp::Rem if r == 0 => {
                        let error = if *op == BinOp::Div {
                            CheckedErrorKind::DivisionByZero
                        } else {
                            CheckedErrorKind::ModuloByZero
                        };
                        self.executed.insert(*loc);
                        return Err(Exit::Abort(Termination::CheckedError { loc: *loc, error }));
                    }
                    BinOp::Div => l.wrapping_div(r),
                    BinOp::Rem => l.wrapping_rem(r),
                }
            }
        })
    }
}

/// Storage slot of element `index` of the array based at `base`.
pub(crate) fn element_slot(base: u64, index: Value) -> u64 {
    base.wrapping_add(1).wrapping_add(index as u64)
}

fn run_function(
    f: &FunctionDef,
    state: &StorageState,
    args: &[Value],
    sender: Value,
    instr: &Instrumentation,
) -> ExecResult {
    let mut m = Machine::new(state.clone(), f, args, sender, instr);
    let termination = m.run_body(&f.body);
    let post_state = if termination.aborts() { state.clone() } else { m.storage };
    ExecResult {
        function: f.name.clone(),
        post_state,
        branch_trace: m.trace,
        cost_vector: m.costs,
        executed_locs: m.executed,
        termination,
        store_events: m.stores,
    }
}

/// Runs the constructor (if any) from the all-zero state.
pub fn deploy(contract: &Contract, deployer: u8) -> Result<StorageState, DeployError> {
    let sender = account_address(deployer).unwrap_or(super::ACCOUNTS[0]);
    let mut state = StorageState::new();
    for d in &contract.decls {
        if let Some(v) = d.initializer {
            state.set(d.slot, v);
        }
    }
    match &contract.init {
        None => Ok(state),
        Some(init) => {
            let r = run_function(init, &state, &[], sender, &Instrumentation::default());
            if r.termination.aborts() {
                Err(DeployError::Constructor(r.termination))
            } else {
                Ok(r.post_state)
            }
        }
    }
}

/// Executes one transaction against `state`. Pure: the input state is not
/// modified, the resulting state is returned in the result.
pub fn execute_tx(
    contract: &Contract,
    state: &StorageState,
    tx: &Transaction,
    instr: &Instrumentation,
) -> Result<ExecResult, TxError> {
    let f = tx.validate(contract)?;
    let sender = account_address(tx.sender).expect("validated");
    Ok(run_function(f, state, &tx.args, sender, instr))
}

/// Deploys a fresh instance (sender 0) and runs the sequence in order.
pub fn run_sequence(
    contract: &Contract,
    seq: &[Transaction],
    instr: &Instrumentation,
) -> Result<Vec<ExecResult>, SequenceError> {
    let state = deploy(contract, DEPLOYER)?;
    Ok(run_sequence_from(contract, &state, seq, instr)?)
}

/// Runs the sequence from an already deployed state.
pub fn run_sequence_from(
    contract: &Contract,
    deployed: &StorageState,
    seq: &[Transaction],
    instr: &Instrumentation,
) -> Result<Vec<ExecResult>, TxError> {
    let mut out: Vec<ExecResult> = Vec::with_capacity(seq.len());
    for tx in seq {
        let pre = out.last().map_or(deployed, |r| &r.post_state);
        let r = execute_tx(contract, pre, tx, instr)?;
        out.push(r);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SequenceError {
    #[error(transparent)]
    Deploy(#[from] DeployError),
    #[error(transparent)]
    Tx(#[from] TxError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minivm::parse_contract;

    fn run1(src: &str, f: &str, args: Vec<Value>) -> ExecResult {
        let c = parse_contract(src).unwrap();
        let s = deploy(&c, 0).unwrap();
        execute_tx(&c, &s, &Transaction::new(f, args, 0), &Instrumentation::default()).unwrap()
    }

    #[test]
    fn division_by_zero_is_a_checked_error() {
        let r = run1("contract C { var x; fn f(a) { x = 1; return 10 / a; } }", "f", vec![0]);
        assert!(matches!(
            r.termination,
            Termination::CheckedError {
                error: CheckedErrorKind::DivisionByZero,
                ..
            }
        ));
        assert_eq!(r.post_state, StorageState::new());
        let r = run1("contract C { fn f(a) { return 10 % a; } }", "f", vec![0]);
        assert!(matches!(
            r.termination,
            Termination::CheckedError {
                error: CheckedErrorKind::ModuloByZero,
                ..
            }
        ));
    }

    #[test]
    fn min_div_minus_one_wraps() {
        let r = run1("contract C { fn f(a) { return a / -1; } }", "f", vec![i64::MIN]);
        assert_eq!(
            r.termination,
            Termination::Normal {
                returned: Some(i64::MIN)
            }
        );
    }

    #[test]
    fn step_budget_reports_the_loop_head() {
        let src = "contract C { fn f() {\n let i = 0;\n while (i >= 0) { i = i + 1; }\n} }";
        let r = run1(src, "f", vec![]);
        match r.termination {
            Termination::CheckedError {
                loc,
                error: CheckedErrorKind::StepBudget,
            } => assert_eq!(loc, SourceLoc::new(3, 2)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn loop_keeps_closest_approach() {
        // condition evaluated with costs 5,4,3,2,1 (flip to false) then 0
        let src = "contract C { fn f() { let i = 0; while (i < 5) { i = i + 1; } return i; } }";
        let r = run1(src, "f", vec![]);
        let loc = r.branch_trace[0].0;
        assert_eq!(r.branch_trace.len(), 6);
        assert_eq!(r.cost_vector.get(MetricId::new(loc, MetricKind::FlipToFalse)), Some(0));
        assert_eq!(r.cost_vector.get(MetricId::new(loc, MetricKind::FlipToTrue)), Some(0));
    }

    #[test]
    fn halt_keeps_state() {
        let r = run1("contract C { var x; fn f() { x = 3; halt; x = 4; } }", "f", vec![]);
        assert_eq!(r.termination, Termination::Halted);
        assert_eq!(r.post_state.get(0), 3);
    }

    #[test]
    fn bad_transactions_are_rejected() {
        let c = parse_contract("contract C { fn f(a) { } }").unwrap();
        let s = StorageState::new();
        let i = Instrumentation::default();
        assert!(matches!(
            execute_tx(&c, &s, &Transaction::new("g", vec![], 0), &i),
            Err(TxError::UnknownFunction(_))
        ));
        assert!(matches!(
            execute_tx(&c, &s, &Transaction::new("f", vec![], 0), &i),
            Err(TxError::Arity { .. })
        ));
        assert!(matches!(
            execute_tx(&c, &s, &Transaction::new("f", vec![1], 4), &i),
            Err(TxError::Sender(4))
        ));
    }

    #[test]
    fn failing_constructor_fails_deployment() {
        let c = parse_contract("contract C { fn init() { assert(1 == 2); } }").unwrap();
        assert!(matches!(deploy(&c, 0), Err(DeployError::Constructor(_))));
    }

    #[test]
    fn contract_without_init_deploys_to_zero() {
        let c = parse_contract("contract C { var x; var a[]; fn f() {} }").unwrap();
        assert_eq!(deploy(&c, 0).unwrap(), StorageState::new());
    }
}
