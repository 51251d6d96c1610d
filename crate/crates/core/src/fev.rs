//! Cost accounting in scalar-product units (FEV).
//!
//! One unit is one n-dimensional dot product. The per-oracle counts:
//!
//! | event                | units          |
//! |----------------------|----------------|
//! | logistic value       | 1              |
//! | logistic gradient    | 1              |
//! | network value        | hidden + 1     |
//! | network gradient     | 2 hidden + 1   |
//! | quadratic value      | n              |
//! | quadratic gradient   | n              |
//!
//! A value-and-gradient request is charged the sum of both. Diagnostics
//! (full objective, stationarity, distance to the reference) are never
//! charged.

/// One oracle call on one component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalEvent {
    LogisticValue,
    LogisticGradient,
    NnValue { hidden: usize },
    NnGradient { hidden: usize },
    QuadraticValue { n: usize },
    QuadraticGradient { n: usize },
}

impl EvalEvent {
    pub fn units(self) -> u64 {
        match self {
            EvalEvent::LogisticValue | EvalEvent::LogisticGradient => 1,
            EvalEvent::NnValue { hidden } => hidden as u64 + 1,
            EvalEvent::NnGradient { hidden } => 2 * hidden as u64 + 1,
            EvalEvent::QuadraticValue { n } | EvalEvent::QuadraticGradient { n } => n as u64,
        }
    }
}

/// The value and gradient events a problem emits per component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostModel {
    pub value: EvalEvent,
    pub gradient: EvalEvent,
}

impl CostModel {
    pub fn logistic() -> Self {
        Self {
            value: EvalEvent::LogisticValue,
            gradient: EvalEvent::LogisticGradient,
        }
    }

    pub fn nn(hidden: usize) -> Self {
        Self {
            value: EvalEvent::NnValue { hidden },
            gradient: EvalEvent::NnGradient { hidden },
        }
    }

    pub fn quadratic(n: usize) -> Self {
        Self {
            value: EvalEvent::QuadraticValue { n },
            gradient: EvalEvent::QuadraticGradient { n },
        }
    }
}

/// Running FEV total. Never decreases.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FevLedger {
    total: u64,
}

impl FevLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn account(&mut self, event: EvalEvent) -> &mut Self {
        self.account_many(event, 1)
    }

    pub fn account_many(&mut self, event: EvalEvent, components: usize) -> &mut Self {
        self.total = self
            .total
            .saturating_add(event.units().saturating_mul(components as u64));
        self
    }

    pub fn charge_value(&mut self, model: CostModel, components: usize) {
        self.account_many(model.value, components);
    }

    pub fn charge_gradient(&mut self, model: CostModel, components: usize) {
        self.account_many(model.gradient, components);
    }

    pub fn charge_value_gradient(&mut self, model: CostModel, components: usize) {
        self.account_many(model.value, components)
            .account_many(model.gradient, components);
    }
}
