//! Learning-curve figure from the training CSV.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};

const WIDTH: f64 = 640.0;
const PANEL: f64 = 220.0;
const MARGIN: f64 = 50.0;

struct Series {
    x: Vec<f64>,
    reward: Vec<f64>,
    success: Vec<f64>,
}

fn parse(text: &str) -> Result<Series> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("learning curve has no `{name}` column"))
    };
    let (ix, ir, is) = (col("env_steps")?, col("mean_episode_reward")?, col("success_rate")?);
    let mut s = Series {
        x: Vec::new(),
        reward: Vec::new(),
        success: Vec::new(),
    };
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| rec[i].parse::<f64>().unwrap_or(f64::NAN);
        s.x.push(num(ix));
        s.reward.push(num(ir));
        s.success.push(num(is));
    }
    if s.x.is_empty() {
        bail!("learning curve has no rows");
    }
    Ok(s)
}

fn panel(svg: &mut String, top: f64, title: &str, x: &[f64], y: &[f64], fixed: Option<(f64, f64)>) {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(_, v)| v.is_finite()).map(|(a, b)| (*a, *b)).collect();
    let x_max = x.iter().copied().fold(1.0, f64::max);
    let (lo, hi) = fixed.unwrap_or_else(|| {
        let lo = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        if lo.is_finite() && hi > lo {
            (lo, hi)
        } else {
            (lo.min(0.0) - 1.0, hi.max(0.0) + 1.0)
        }
    });
    let w = WIDTH - 2.0 * MARGIN;
    let h = PANEL - 40.0;
    let px = |v: f64| MARGIN + v / x_max * w;
    let py = |v: f64| top + 20.0 + (hi - v) / (hi - lo) * h;
    let _ = writeln!(
        svg,
        "<text x=\"{MARGIN}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\">{title}</text>\n\
         <rect x=\"{MARGIN}\" y=\"{:.1}\" width=\"{w}\" height=\"{h}\" fill=\"none\" stroke=\"#999\"/>\n\
         <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{hi:.3}</text>\n\
         <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{lo:.3}</text>",
        top + 14.0,
        top + 20.0,
        MARGIN - 4.0,
        top + 30.0,
        MARGIN - 4.0,
        top + 20.0 + h,
    );
    let line: Vec<String> = pts.iter().map(|(a, b)| format!("{:.2},{:.2}", px(*a), py(*b))).collect();
    let _ = writeln!(svg, "<polyline points=\"{}\" fill=\"none\" stroke=\"blue\"/>", line.join(" "));
}

pub fn learning_curve_svg(csv_text: &str) -> Result<String> {
    let s = parse(csv_text)?;
    let height = 2.0 * PANEL + 30.0;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{height}\" viewBox=\"0 0 {WIDTH} {height}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    panel(&mut svg, 0.0, "mean episode reward", &s.x, &s.reward, None);
    panel(&mut svg, PANEL, "success rate", &s.x, &s.success, Some((0.0, 1.0)));
    let x_max = s.x.iter().copied().fold(0.0, f64::max);
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">environment steps (0 to {x_max})</text>\n</svg>",
        WIDTH / 2.0,
        height - 8.0
    );
    Ok(svg)
}
