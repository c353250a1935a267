use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("self-loop on vertex {vertex}{}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    SelfLoop { line: Option<usize>, vertex: u32 },

    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: u32, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("graph is not regular")]
    NotRegular,

    #[error("random regular pairing failed after {attempts} restarts")]
    RestartBudgetExhausted { attempts: usize },

    #[error("schedule did not close within {cap} iterations (last ratio T/L = {last_ratio:.4})")]
    ScheduleDidNotClose {
        cap: usize,
        last_ratio: f64,
        trajectory: Box<crate::schedule::Schedule>,
    },

    #[error("property check failed at iteration {iteration} after {retries} retries: {summary}")]
    RetryBudgetExhausted {
        iteration: usize,
        retries: usize,
        summary: String,
        report: Box<crate::nibble::PropertyReport>,
    },

    #[error("finisher precondition violated at vertex {vertex}: list size {list_size} < {ratio} x max color degree {max_color_degree}")]
    FinisherPrecondition {
        vertex: u32,
        list_size: usize,
        max_color_degree: usize,
        ratio: f64,
    },

    #[error("resampling cap of {cap} exhausted with {violated} violated constraints")]
    ResampleCapExhausted { cap: usize, violated: usize },

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}
