//! CSV tables and SVG maps of benchmark and trajectory reports.

use std::fmt::Write as _;

use super::{GoalBenchmarkReport, TrajectoryReport};

const SIZE: f64 = 480.0;
const MARGIN: f64 = 30.0;

/// Square viewport covering `[-half, half]²` mm with +y up.
struct Frame {
    half: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = [f64; 2]>) -> Self {
        let m = points.fold(10.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs()));
        Self { half: m * 1.1 }
    }

    fn px(&self, p: [f64; 2]) -> (f64, f64) {
        let s = (SIZE - 2.0 * MARGIN) / (2.0 * self.half);
        (MARGIN + (p[0] + self.half) * s, MARGIN + (self.half - p[1]) * s)
    }

    fn open(&self, title: &str) -> String {
        let mut s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
             <text x=\"{MARGIN}\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\">{title}</text>\n"
        );
        let (ox, oy) = self.px([0.0, 0.0]);
        let _ = writeln!(
            s,
            "<line x1=\"{MARGIN}\" y1=\"{oy:.2}\" x2=\"{:.2}\" y2=\"{oy:.2}\" stroke=\"#ccc\"/>\n\
             <line x1=\"{ox:.2}\" y1=\"{MARGIN}\" x2=\"{ox:.2}\" y2=\"{:.2}\" stroke=\"#ccc\"/>",
            SIZE - MARGIN,
            SIZE - MARGIN
        );
        s
    }
}

/// Goals and best agent positions, green for reached goals and red for
/// missed ones, each pair joined by a faded blue line.
pub fn benchmark_svg(report: &GoalBenchmarkReport) -> String {
    let frame = Frame::fit(
        report
            .episodes
            .iter()
            .flat_map(|e| [e.goal, e.best_position])
            .chain([[0.0, 0.0]]),
    );
    let mut s = frame.open(&format!(
        "{} goals, success rate {:.2}",
        report.episodes.len(),
        report.aggregate.success_rate
    ));
    for e in &report.episodes {
        let (gx, gy) = frame.px(e.goal);
        let (bx, by) = frame.px(e.best_position);
        let _ = writeln!(
            s,
            "<line x1=\"{gx:.2}\" y1=\"{gy:.2}\" x2=\"{bx:.2}\" y2=\"{by:.2}\" stroke=\"blue\" stroke-opacity=\"0.3\"/>"
        );
    }
    for e in &report.episodes {
        let (gx, gy) = frame.px(e.goal);
        let (bx, by) = frame.px(e.best_position);
        let color = if e.reached { "green" } else { "red" };
        let _ = writeln!(
            s,
            "<circle class=\"goal\" data-episode=\"{}\" cx=\"{gx:.2}\" cy=\"{gy:.2}\" r=\"4\" fill=\"{color}\"/>\n\
             <circle class=\"best\" cx=\"{bx:.2}\" cy=\"{by:.2}\" r=\"2\" fill=\"{color}\" fill-opacity=\"0.6\"/>",
            e.index
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn benchmark_csv(report: &GoalBenchmarkReport) -> csv::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "schema_version",
        "episode", "seed", "goal_x", "goal_y", "reached", "steps", "min_distance", "best_x", "best_y", "total_reward",
    ])?;
    for e in &report.episodes {
        w.write_record([
            report.schema_version.to_string(),
            e.index.to_string(),
            e.seed.to_string(),
            e.goal[0].to_string(),
            e.goal[1].to_string(),
            e.reached.to_string(),
            e.steps.to_string(),
            e.min_distance.to_string(),
            e.best_position[0].to_string(),
            e.best_position[1].to_string(),
            e.total_reward.to_string(),
        ])?;
    }
    finish(w)
}

/// Reference arc, waypoints (green when reached) and the agent's path.
pub fn trajectory_svg(report: &TrajectoryReport) -> String {
    let frame = Frame::fit(report.waypoints.iter().chain(&report.positions).copied().chain([[0.0, 0.0]]));
    let mut s = frame.open(&format!(
        "{} steps, max deviation {:.1} mm",
        report.total_steps, report.max_deviation
    ));
    let poly = |pts: &[[f64; 2]]| {
        pts.iter()
            .map(|p| {
                let (x, y) = frame.px(*p);
                format!("{x:.2},{y:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    let _ = writeln!(
        s,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#888\" stroke-width=\"2\" stroke-dasharray=\"6 4\"/>",
        poly(&report.waypoints)
    );
    let mut path = vec![[0.0, 0.0]];
    path.extend_from_slice(&report.positions);
    let _ = writeln!(s, "<polyline points=\"{}\" fill=\"none\" stroke=\"blue\"/>", poly(&path));
    for (w, reached) in report.waypoints.iter().zip(&report.reached) {
        let (x, y) = frame.px(*w);
        let color = if *reached { "green" } else { "red" };
        let _ = writeln!(s, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"4\" fill=\"{color}\"/>");
    }
    s.push_str("</svg>\n");
    s
}

pub fn trajectory_csv(report: &TrajectoryReport) -> csv::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["schema_version", "step", "x", "y", "deviation"])?;
    for (k, (p, d)) in report.positions.iter().zip(&report.deviations).enumerate() {
        w.write_record([
            report.schema_version.to_string(),
            (k + 1).to_string(), p[0].to_string(), p[1].to_string(), d.to_string()])?;
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> csv::Result<String> {
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{BenchmarkAggregate, EpisodeRecord, PaperBenchmarkReference};

    fn report(flags: &[bool]) -> GoalBenchmarkReport {
        let episodes: Vec<EpisodeRecord> = flags
            .iter()
            .enumerate()
            .map(|(i, &reached)| EpisodeRecord {
                index: i,
                seed: i as u64,
                goal: [50.0 + i as f64, -60.0],
                reached,
                steps: 10,
                steps_taken: 10,
                min_distance: 5.0,
                best_position: [45.0, -55.0],
                total_reward: 1.0,
                truncation: None,
            })
            .collect();
        GoalBenchmarkReport {
            schema_version: 1,
            seed: 0,
            distance_threshold: 20.0,
            max_steps: 1000,
            aggregate: BenchmarkAggregate {
                episodes: episodes.len(),
                success_rate: 0.0,
                average_steps: 10.0,
                average_steps_successful: None,
                average_min_distance: 5.0,
                mean_episode_reward: 1.0,
            },
            episodes,
            paper_reference: PaperBenchmarkReference::default(),
        }
    }

    fn goal_colors(svg: &str) -> Vec<&str> {
        svg.lines()
            .filter(|l| l.contains("class=\"goal\""))
            .map(|l| l.split("fill=\"").nth(1).unwrap().split('"').next().unwrap())
            .collect()
    }

    #[test]
    fn colors_follow_reach_flags() {
        let svg = benchmark_svg(&report(&[true, false, true]));
        assert_eq!(goal_colors(&svg), ["green", "red", "green"]);
        assert_eq!(svg.matches("stroke=\"blue\"").count(), 3);
    }

    #[test]
    fn all_failures_are_red() {
        let svg = benchmark_svg(&report(&[false; 5]));
        assert!(goal_colors(&svg).iter().all(|c| *c == "red"));
    }

    #[test]
    fn csv_has_one_row_per_episode() {
        let csv = benchmark_csv(&report(&[true, false, true, true])).unwrap();
        assert_eq!(csv.lines().count(), 1 + 4);
    }
}
