use super::{FailureReason, PlanRequest, Planner, PlannerOutcome};

/// Replays a fixed sequence of outcomes, one per call.
#[derive(Debug, Clone, Default)]
pub struct ScriptedPlanner {
    script: Vec<PlannerOutcome>,
    cursor: usize,
}

impl ScriptedPlanner {
    pub fn new(script: Vec<PlannerOutcome>) -> Self {
        Self { script, cursor: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.script.len() - self.cursor
    }
}

impl Planner for ScriptedPlanner {
    fn plan(&mut self, _req: &PlanRequest) -> PlannerOutcome {
        match self.script.get(self.cursor) {
            Some(o) => {
                self.cursor += 1;
                o.clone()
            }
            None => PlannerOutcome::failure(FailureReason::ScriptExhausted),
        }
    }

    fn name(&self) -> &'static str {
        "scripted"
    }
}
