//! Figures of a completed study: power against the true association
//! measure, the 4x4 histogram/scatter/correlation panel, and the scatter of
//! log odds ratio against phi.
//!
//! Each figure is computed as plain data first ([`PowerCurve`],
//! [`CorrelationPanel`]) and rendered to SVG second.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::montecarlo::DistributionResult;
use crate::report::spline::SmoothingSpline;
use crate::report::svg::{Frame, Svg};
use crate::statistics::TestKind;

pub const HISTOGRAM_BINS: usize = 20;
const CURVE_SAMPLES: usize = 200;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureKind {
    PowerVsMeasureScatter,
    PowerHistogramMatrix,
    PairwiseCorrelationPanel,
    MeasureScatter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Smoothing {
    None,
    #[default]
    CubicSmoothingSpline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FigureSpec {
    pub kind: FigureKind,
    pub smoothing: Smoothing,
}

/// Population measure on the horizontal axis of a power plot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    LogOdds,
    Phi,
}

impl Measure {
    /// Z1 and Z2 are plotted against ln(theta), Z3 and Z4 against phi.
    pub fn native_to(test: TestKind) -> Self {
        if test.uses_log_odds() {
            Measure::LogOdds
        } else {
            Measure::Phi
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Measure::LogOdds => "ln(odds ratio)",
            Measure::Phi => "phi",
        }
    }

    fn value(self, row: &DistributionResult) -> Option<f64> {
        match self {
            Measure::LogOdds => row.true_log_odds.finite(),
            Measure::Phi => row.true_phi.is_finite().then_some(row.true_phi),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerCurve {
    pub test: TestKind,
    pub measure: Measure,
    /// `(true measure, estimated power)` for every plottable distribution.
    pub points: Vec<(f64, f64)>,
    /// Distributions left out because the measure is infinite or undefined.
    pub excluded: usize,
    pub spline: Option<SmoothingSpline>,
    pub x_range: (f64, f64),
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

pub fn power_vs_measure(rows: &[DistributionResult], test: TestKind, smoothing: Smoothing) -> PowerCurve {
    let measure = Measure::native_to(test);
    let mut points = Vec::with_capacity(rows.len());
    let mut excluded = 0;
    for row in rows {
        match measure.value(row) {
            Some(x) => points.push((x, row.power(test))),
            None => excluded += 1,
        }
    }
    let spline = match smoothing {
        Smoothing::None => None,
        Smoothing::CubicSmoothingSpline => {
            let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
            SmoothingSpline::fit(&xs, &ys)
        }
    };
    let x_range = match measure {
        Measure::Phi => (-1.0, 1.0),
        Measure::LogOdds => padded_range(points.iter().map(|p| p.0)),
    };
    PowerCurve {
        test,
        measure,
        points,
        excluded,
        spline,
        x_range,
    }
}

fn draw_power_panel(svg: &mut Svg, frame: &Frame, curve: &PowerCurve, alpha: f64) {
    let color = COLORS[curve.test.index()];
    frame.draw_axes(svg, 4, curve.measure.label(), "estimated power");
    svg.line(
        frame.left,
        frame.y(alpha),
        frame.left + frame.width,
        frame.y(alpha),
        "gray",
        1.0,
        true,
    );
    for &(x, y) in &curve.points {
        svg.circle(frame.x(x), frame.y(y), 2.5, color);
    }
    if let Some(spline) = &curve.spline {
        let (lo, hi) = curve.x_range;
        let pts: Vec<(f64, f64)> = (0..=CURVE_SAMPLES)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / CURVE_SAMPLES as f64;
                let y = spline.eval(x).clamp(frame.y_range.0, frame.y_range.1);
                (frame.x(x), frame.y(y))
            })
            .collect();
        svg.polyline(&pts, "black", 1.5);
        svg.comment(&format!(
            "{} spline: gcv lambda={:.6e} effective_df={:.4}",
            curve.test.label(),
            spline.lambda,
            spline.effective_df
        ));
    }
    svg.text(
        frame.left + frame.width / 2.0,
        frame.top - 8.0,
        12.0,
        "middle",
        &format!("{} ({})", curve.test.label(), curve.test.description()),
    );
    let mut caption = format!("n = {}", curve.points.len());
    if curve.excluded > 0 {
        caption.push_str(&format!("; {} with infinite or undefined measure excluded", curve.excluded));
    }
    if let Some(spline) = &curve.spline {
        caption.push_str(&format!("; spline df {:.1}", spline.effective_df));
    }
    svg.text(frame.left, frame.top + frame.height + 46.0, 9.0, "start", &caption);
}

/// Side-by-side power plots, one panel per curve.
pub fn render_power_figure(curves: &[PowerCurve], title: &str, alpha: f64) -> String {
    let panel_w = 360.0;
    let panel_h = 280.0;
    let margin = 70.0;
    let width = curves.len() as f64 * (panel_w + margin) + margin;
    let mut svg = Svg::new(width, panel_h + 140.0);
    svg.text(width / 2.0, 24.0, 14.0, "middle", title);
    for (i, curve) in curves.iter().enumerate() {
        let frame = Frame {
            left: margin + i as f64 * (panel_w + margin),
            top: 60.0,
            width: panel_w,
            height: panel_h,
            x_range: curve.x_range,
            y_range: (0.0, 1.0),
        };
        draw_power_panel(&mut svg, &frame, curve, alpha);
    }
    svg.finish()
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// One test's power against its native measure with a spline overlay.
pub fn emit_power_vs_measure(
    rows: &[DistributionResult],
    test: TestKind,
    alpha: f64,
    path: &Path,
) -> Result<PowerCurve> {
    let curve = power_vs_measure(rows, test, Smoothing::CubicSmoothingSpline);
    let title = format!("Power of {} against {}", test.label(), curve.measure.label());
    write_file(path, &render_power_figure(std::slice::from_ref(&curve), &title, alpha))?;
    Ok(curve)
}

pub fn pearson_correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len()) as f64;
    if n < 2.0 {
        return f64::NAN;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return f64::NAN;
    }
    sxy / (sxx * syy).sqrt()
}

/// Ordinary least squares `y = intercept + slope x`.
pub fn least_squares_line(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len().min(y.len()) as f64;
    if n < 2.0 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

/// Counts over `HISTOGRAM_BINS` equal bins of `[0, 1]`; 1.0 lands in the
/// last bin.
pub fn power_histogram(powers: &[f64]) -> [u64; HISTOGRAM_BINS] {
    let mut bins = [0u64; HISTOGRAM_BINS];
    for &p in powers {
        let i = ((p * HISTOGRAM_BINS as f64).floor() as usize).min(HISTOGRAM_BINS - 1);
        bins[i] += 1;
    }
    bins
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationPanel {
    /// Power series per test, in row order.
    pub powers: [Vec<f64>; 4],
    pub histograms: [[u64; HISTOGRAM_BINS]; 4],
    /// Pearson correlation of the power series; `NaN` when one is constant.
    pub correlations: [[f64; 4]; 4],
    /// `(intercept, slope)` of power of the row test on the column test.
    pub fits: [[Option<(f64, f64)>; 4]; 4],
}

pub fn correlation_panel(rows: &[DistributionResult]) -> CorrelationPanel {
    let powers = TestKind::ALL.map(|t| rows.iter().map(|r| r.power(t)).collect::<Vec<_>>());
    let histograms = std::array::from_fn(|i| power_histogram(&powers[i]));
    let correlations =
        std::array::from_fn(|i| std::array::from_fn(|j| pearson_correlation(&powers[i], &powers[j])));
    let fits = std::array::from_fn(|i| std::array::from_fn(|j| least_squares_line(&powers[j], &powers[i])));
    CorrelationPanel {
        powers,
        histograms,
        correlations,
        fits,
    }
}

/// Diagonal: density histograms. Below: scatter of row-test power against
/// column-test power with the least-squares line. Above: correlation.
pub fn render_correlation_panel(panel: &CorrelationPanel) -> String {
    let cell = 150.0;
    let gap = 18.0;
    let left = 60.0;
    let top = 60.0;
    let size = left + 4.0 * (cell + gap) + 20.0;
    let mut svg = Svg::new(size, size + 20.0);
    svg.text(size / 2.0, 26.0, 14.0, "middle", "Correlation plots and histograms of powers");
    let n = panel.powers[0].len().max(1) as f64;
    let bin_width = 1.0 / HISTOGRAM_BINS as f64;
    let max_density = panel
        .histograms
        .iter()
        .flatten()
        .map(|&c| c as f64 / (n * bin_width))
        .fold(1.0, f64::max);

    #[allow(clippy::needless_range_loop)]
    for i in 0..4 {
        for j in 0..4 {
            let x0 = left + j as f64 * (cell + gap);
            let y0 = top + i as f64 * (cell + gap);
            let unit = Frame {
                left: x0,
                top: y0,
                width: cell,
                height: cell,
                x_range: (0.0, 1.0),
                y_range: (0.0, 1.0),
            };
            svg.rect(x0, y0, cell, cell, "none", "black");
            if i == 0 {
                svg.text(x0 + cell / 2.0, y0 - 6.0, 11.0, "middle", TestKind::ALL[j].label());
            }
            if j == 0 {
                svg.rotated_text(x0 - 12.0, y0 + cell / 2.0, 11.0, TestKind::ALL[i].label());
            }
            if i == j {
                let frame = Frame {
                    y_range: (0.0, max_density),
                    ..unit
                };
                for (b, &count) in panel.histograms[i].iter().enumerate() {
                    let density = count as f64 / (n * bin_width);
                    let xl = frame.x(b as f64 * bin_width);
                    let xr = frame.x((b + 1) as f64 * bin_width);
                    let yt = frame.y(density);
                    svg.rect(xl, yt, xr - xl, frame.y(0.0) - yt, COLORS[i], "white");
                }
            } else if i > j {
                for (px, py) in panel.powers[j].iter().zip(&panel.powers[i]) {
                    svg.circle(unit.x(*px), unit.y(*py), 1.8, COLORS[i]);
                }
                if let Some((a, b)) = panel.fits[i][j] {
                    let y_at = |x: f64| (a + b * x).clamp(0.0, 1.0);
                    svg.line(unit.x(0.0), unit.y(y_at(0.0)), unit.x(1.0), unit.y(y_at(1.0)), "black", 1.2, false);
                }
            } else {
                let r = panel.correlations[i][j];
                let label = if r.is_finite() { format!("{r:.3}") } else { "n/a".to_string() };
                svg.text(x0 + cell / 2.0, y0 + cell / 2.0 + 8.0, 22.0, "middle", &label);
            }
        }
    }
    svg.finish()
}

pub fn emit_correlation_panel(rows: &[DistributionResult], path: &Path) -> Result<CorrelationPanel> {
    let panel = correlation_panel(rows);
    write_file(path, &render_correlation_panel(&panel))?;
    Ok(panel)
}

/// Scatter of true ln(theta) against true phi.
pub fn render_measure_scatter(rows: &[DistributionResult]) -> String {
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| Some((r.true_phi, r.true_log_odds.finite()?)))
        .filter(|p| p.0.is_finite())
        .collect();
    let excluded = rows.len() - points.len();
    let mut svg = Svg::new(480.0, 420.0);
    svg.text(240.0, 24.0, 14.0, "middle", "ln(odds ratio) against phi");
    let frame = Frame {
        left: 70.0,
        top: 50.0,
        width: 380.0,
        height: 290.0,
        x_range: (-1.0, 1.0),
        y_range: padded_range(points.iter().map(|p| p.1)),
    };
    frame.draw_axes(&mut svg, 4, "phi", "ln(odds ratio)");
    for &(x, y) in &points {
        svg.circle(frame.x(x), frame.y(y), 2.5, COLORS[0]);
    }
    let mut caption = format!("n = {}", points.len());
    if excluded > 0 {
        caption.push_str(&format!("; {excluded} with infinite or undefined measure excluded"));
    }
    svg.text(frame.left, 400.0, 9.0, "start", &caption);
    svg.finish()
}

pub const WALD_FIGURE: &str = "fig_wald.svg";
pub const RAO_FIGURE: &str = "fig_rao.svg";
pub const CORRELATION_FIGURE: &str = "fig_corr_panel.svg";
pub const MEASURE_FIGURE: &str = "fig_measures.svg";

/// Writes every figure into `dir` and returns the paths written.
pub fn write_figures(rows: &[DistributionResult], alpha: f64, dir: &Path) -> Result<Vec<PathBuf>> {
    let curves = |tests: [TestKind; 2]| tests.map(|t| power_vs_measure(rows, t, Smoothing::CubicSmoothingSpline));
    let wald = render_power_figure(
        &curves([TestKind::WaldLogOr, TestKind::WaldPhi]),
        "Wald tests: odds ratio and canonical correlation",
        alpha,
    );
    let rao = render_power_figure(
        &curves([TestKind::ScoreLogOr, TestKind::ScorePhi]),
        "Rao tests: odds ratio and canonical correlation",
        alpha,
    );
    let outputs = [
        (WALD_FIGURE, wald),
        (RAO_FIGURE, rao),
        (CORRELATION_FIGURE, render_correlation_panel(&correlation_panel(rows))),
        (MEASURE_FIGURE, render_measure_scatter(rows)),
    ];
    let mut written = Vec::with_capacity(outputs.len());
    for (name, contents) in outputs {
        let path = dir.join(name);
        write_file(&path, &contents)?;
        written.push(path);
    }
    Ok(written)
}
