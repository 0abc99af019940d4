use super::config::CellKind;
use super::params::Parameters;
use crate::error::{Error, Result};
use crate::tensor::{ActivationKind, Graph, Real, Var};

/// Input weights, recurrent weights and bias of one gate.
#[derive(Clone, Copy)]
pub struct Gate<'g, T: Real> {
    pub w: Var<'g, T>,
    pub u: Var<'g, T>,
    pub b: Var<'g, T>,
}

impl<'g, T: Real> Gate<'g, T> {
    /// `x·W + h·U + b`
    pub fn pre_activation(&self, x: &Var<'g, T>, h: &Var<'g, T>) -> Result<Var<'g, T>> {
        x.matmul(&self.w)?.add(&h.matmul(&self.u)?)?.add_bias(&self.b)
    }
}

#[derive(Clone, Copy)]
pub struct GruWeights<'g, T: Real> {
    pub update: Gate<'g, T>,
    pub reset: Gate<'g, T>,
    pub candidate: Gate<'g, T>,
}

#[derive(Clone, Copy)]
pub struct LstmWeights<'g, T: Real> {
    pub input: Gate<'g, T>,
    pub forget: Gate<'g, T>,
    pub output: Gate<'g, T>,
    pub candidate: Gate<'g, T>,
}

#[derive(Clone, Copy)]
pub enum CellWeights<'g, T: Real> {
    Gru(GruWeights<'g, T>),
    Lstm(LstmWeights<'g, T>),
}

/// Recurrent state; rows are batch items.
#[derive(Clone, Copy, Debug)]
pub enum CellState<'g, T: Real> {
    Gru { h: Var<'g, T> },
    Lstm { h: Var<'g, T>, c: Var<'g, T> },
}

impl<'g, T: Real> CellState<'g, T> {
    pub fn h(&self) -> Var<'g, T> {
        match *self {
            CellState::Gru { h } | CellState::Lstm { h, .. } => h,
        }
    }

    /// Zero state for `batch` rows.
    pub fn zeros(graph: &'g Graph<T>, cell: CellKind, batch: usize, units: usize) -> Self {
        let zero = || graph.constant(crate::Tensor::zeros([batch, units]));
        match cell {
            CellKind::Gru => CellState::Gru { h: zero() },
            CellKind::Lstm => CellState::Lstm { h: zero(), c: zero() },
        }
    }
}

fn bind_gate<'g, T: Real>(
    graph: &'g Graph<T>,
    params: &Parameters<T>,
    prefix: &str,
    gate: &str,
    tracked: bool,
) -> Result<Gate<'g, T>> {
    let get = |part: &str| -> Result<Var<'g, T>> {
        let name = format!("{prefix}.{gate}.{part}");
        let t = params.get(&name).ok_or_else(|| Error::InvalidConfig(format!("missing parameter `{name}`")))?.clone();
        Ok(if tracked { graph.param(name, t) } else { graph.constant(t) })
    };
    Ok(Gate { w: get("w")?, u: get("u")?, b: get("b")? })
}

impl<'g, T: Real> CellWeights<'g, T> {
    pub(crate) fn bind(
        graph: &'g Graph<T>,
        params: &Parameters<T>,
        prefix: &str,
        cell: CellKind,
        tracked: bool,
    ) -> Result<Self> {
        let gate = |g: &str| bind_gate(graph, params, prefix, g, tracked);
        Ok(match cell {
            CellKind::Gru => {
                CellWeights::Gru(GruWeights { update: gate("z")?, reset: gate("r")?, candidate: gate("h")? })
            }
            CellKind::Lstm => CellWeights::Lstm(LstmWeights {
                input: gate("i")?,
                forget: gate("f")?,
                output: gate("o")?,
                candidate: gate("c")?,
            }),
        })
    }

    pub fn step(
        &self,
        x: &Var<'g, T>,
        state: &CellState<'g, T>,
        activation: ActivationKind,
    ) -> Result<CellState<'g, T>> {
        match (self, state) {
            (CellWeights::Gru(w), CellState::Gru { h }) => {
                Ok(CellState::Gru { h: gru_cell_step(w, x, h, activation)? })
            }
            (CellWeights::Lstm(w), CellState::Lstm { h, c }) => {
                let (h, c) = lstm_cell_step(w, x, (h, c), activation)?;
                Ok(CellState::Lstm { h, c })
            }
            _ => Err(Error::InvalidConfig("cell state does not match cell kind".into())),
        }
    }
}

/// One GRU step:
///
/// ```text
/// z  = σ(x·Wz + h·Uz + bz)
/// r  = σ(x·Wr + h·Ur + br)
/// h̃  = act(x·Wh + (r ⊙ h)·Uh + bh)
/// h' = z ⊙ h + (1 − z) ⊙ h̃
/// ```
pub fn gru_cell_step<'g, T: Real>(
    w: &GruWeights<'g, T>,
    x: &Var<'g, T>,
    h_prev: &Var<'g, T>,
    activation: ActivationKind,
) -> Result<Var<'g, T>> {
    let z = w.update.pre_activation(x, h_prev)?.sigmoid();
    let r = w.reset.pre_activation(x, h_prev)?.sigmoid();
    let candidate = w.candidate.pre_activation(x, &r.mul(h_prev)?)?.activation(activation)?;
    z.mul(h_prev)?.add(&z.one_minus().mul(&candidate)?)
}

/// One LSTM step; gates are sigmoid, `act` applies to the candidate and to
/// the cell state on output.
pub fn lstm_cell_step<'g, T: Real>(
    w: &LstmWeights<'g, T>,
    x: &Var<'g, T>,
    (h_prev, c_prev): (&Var<'g, T>, &Var<'g, T>),
    activation: ActivationKind,
) -> Result<(Var<'g, T>, Var<'g, T>)> {
    let i = w.input.pre_activation(x, h_prev)?.sigmoid();
    let f = w.forget.pre_activation(x, h_prev)?.sigmoid();
    let o = w.output.pre_activation(x, h_prev)?.sigmoid();
    let candidate = w.candidate.pre_activation(x, h_prev)?.activation(activation)?;
    let c = f.mul(c_prev)?.add(&i.mul(&candidate)?)?;
    let h = o.mul(&c.activation(activation)?)?;
    Ok((h, c))
}
