use std::io::Write;

use super::StepResult;

pub const TRACE_SCHEMA_VERSION: u32 = 1;

/// Streams one CSV row per environment step for the plotting tools.
pub struct TraceWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(sink: W) -> csv::Result<Self> {
        let mut inner = csv::Writer::from_writer(sink);
        inner.write_record([
            "schema_version", "step", "x", "y", "z", "roll", "pitch", "yaw", "d", "reward", "terminated", "truncated",
        ])?;
        Ok(Self { inner })
    }

    pub fn record(&mut self, r: &StepResult) -> csv::Result<()> {
        let p = &r.observation.pose;
        self.inner.write_record(&[
            TRACE_SCHEMA_VERSION.to_string(),
            r.info.step_index.to_string(),
            p.x.to_string(),
            p.y.to_string(),
            p.z.to_string(),
            p.roll.to_string(),
            p.pitch.to_string(),
            p.yaw.to_string(),
            r.info.d.to_string(),
            r.reward.to_string(),
            (r.terminated as u8).to_string(),
            (r.truncated as u8).to_string(),
        ])
    }

    pub fn into_inner(self) -> std::io::Result<W> {
        self.inner.into_inner().map_err(|e| e.into_error())
    }
}
