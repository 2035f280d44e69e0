use alloc::string::{String, ToString};

use crate::models::ModelKind;

/// Non-batch processes one sample at a time; `Batch(b)` processes `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BatchSetting {
    NonBatch,
    Batch(usize),
}

impl BatchSetting {
    /// Samples per forward pass.
    pub fn size(self) -> usize {
        match self {
            BatchSetting::NonBatch => 1,
            BatchSetting::Batch(b) => b,
        }
    }

    pub fn label(self) -> String {
        match self {
            BatchSetting::NonBatch => "nonbatch".into(),
            BatchSetting::Batch(b) => b.to_string(),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "nonbatch" | "non-batch" | "non_batch" => Some(BatchSetting::NonBatch),
            n => n.parse().ok().filter(|b| *b > 0).map(BatchSetting::Batch),
        }
    }
}

impl core::fmt::Display for BatchSetting {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(&self.label())
    }
}

/// The four timed components of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    TrainForward,
    Backward,
    FullTrain,
    InferForward,
}

impl Component {
    pub const ALL: [Component; 4] = [
        Component::TrainForward,
        Component::Backward,
        Component::FullTrain,
        Component::InferForward,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Component::TrainForward => "train_forward",
            Component::Backward => "backward",
            Component::FullTrain => "full_train",
            Component::InferForward => "infer_forward",
        }
    }
}

/// Seconds spent in each component.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Timings {
    pub train_forward: f64,
    pub backward: f64,
    pub full_train: f64,
    pub infer_forward: f64,
}

impl Timings {
    /// Unmeasured timings (accuracy-only runs) are NaN.
    pub const UNMEASURED: Timings = Timings {
        train_forward: f64::NAN,
        backward: f64::NAN,
        full_train: f64::NAN,
        infer_forward: f64::NAN,
    };

    /// Every component finite and positive.
    pub fn is_measured(&self) -> bool {
        Component::ALL.iter().all(|&c| {
            let t = self.get(c);
            t.is_finite() && t > 0.0
        })
    }

    pub fn get(&self, c: Component) -> f64 {
        match c {
            Component::TrainForward => self.train_forward,
            Component::Backward => self.backward,
            Component::FullTrain => self.full_train,
            Component::InferForward => self.infer_forward,
        }
    }
}

/// One `(model, batch, seed)` measurement; the unit of analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub model: ModelKind,
    pub batch: BatchSetting,
    pub seed: u64,
    /// Timing repetition index, 0 unless a cell is repeated.
    pub rep: u32,
    pub timings: Timings,
    /// Test RMSE in price units.
    pub rmse: f64,
    /// Test directional accuracy in percent; `None` when undefined.
    pub da: Option<f64>,
    pub equiv_l2: f64,
}
