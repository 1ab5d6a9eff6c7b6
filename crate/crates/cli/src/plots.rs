use growthlab::estimators::collapse::CurvePoint;
use growthlab::experiment::SweepCell;
use growthlab::{DailySnapshot, TlsFit};

use crate::svg::{palette, text, Axis, Document, Panel};

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Log-log scatter of `(P, F)` with the orthogonal regression line.
pub fn growth_scatter(points: &[(f64, f64)], fit: &TlsFit) -> String {
    let (x0, x1) = bounds(points.iter().map(|p| p.0));
    let (y0, y1) = bounds(points.iter().map(|p| p.1));
    let mut doc = Document::new(560.0, 440.0);
    let panel = Panel {
        left: 70.0,
        top: 30.0,
        width: 460.0,
        height: 350.0,
        x: Axis::log(x0, x1),
        y: Axis::log(y0, y1),
    };
    panel.frame(&mut doc, "active population P", "total activity F");
    panel.circles(&mut doc, points, 2.5, "steelblue");
    let line = |p: f64| 10f64.powf(fit.intercept + fit.slope * p.log10());
    panel.segment(&mut doc, (x0, line(x0)), (x1, line(x1)), "crimson");
    text(
        &mut doc,
        80.0,
        50.0,
        &format!("gamma = {:.3}, adjusted R2 = {:.3}, {} days", fit.slope, fit.adjusted_r2, fit.n_points),
    );
    doc.finish()
}

/// `gamma` against `1/beta`, one dot per successful cell coloured by `C`,
/// with the theoretical curve.
pub fn sweep_plot(cells: &[SweepCell], c_values: &[f64]) -> String {
    let ok: Vec<(&SweepCell, f64)> = cells
        .iter()
        .filter_map(|c| c.result.as_ref().ok().map(|f| (c, f.gamma_fit)))
        .collect();
    let (g0, g1) = bounds(ok.iter().map(|p| p.1).chain([1.0, 2.0]));
    let mut doc = Document::new(620.0, 460.0);
    let panel = Panel {
        left: 70.0,
        top: 30.0,
        width: 440.0,
        height: 360.0,
        x: Axis::linear(0.0, 1.0),
        y: Axis::linear((g0 - 0.1).min(0.8), g1 + 0.1),
    };
    panel.frame(&mut doc, "heterogeneity 1/beta", "growth exponent gamma");
    let theory: Vec<(f64, f64)> = (20..=200)
        .map(|k| {
            let x = k as f64 / 200.0;
            (x, (2.0 * x).max(1.0))
        })
        .collect();
    panel.polyline(&mut doc, &theory, "black");
    for (i, &c) in c_values.iter().enumerate() {
        let pts: Vec<(f64, f64)> = ok.iter().filter(|(cell, _)| cell.c == c).map(|(cell, g)| (cell.inverse_beta, *g)).collect();
        let colour = palette(i, c_values.len());
        panel.circles(&mut doc, &pts, 2.5, &colour);
        let y = 40.0 + 14.0 * i as f64;
        doc.push(&format!("<rect x=\"530\" y=\"{:.2}\" width=\"8\" height=\"8\" fill=\"{colour}\"/>", y - 8.0));
        text(&mut doc, 542.0, y, &format!("C = {c}"));
    }
    doc.finish()
}

/// Raw daily histograms, and the pooled rescaled curve with the fitted
/// power law as an inset.
pub fn collapse_plot(days: &[DailySnapshot], curve: &[CurvePoint], beta: f64) -> String {
    // at most 12 raw days keep the document small
    let step = days.len().div_ceil(12).max(1);
    let shown: Vec<&DailySnapshot> = days.iter().step_by(step).collect();
    let (f0, f1) = bounds(shown.iter().flat_map(|d| d.histogram.bins().iter().map(|b| b.0)));
    let (n0, n1) = bounds(shown.iter().flat_map(|d| d.histogram.bins().iter().map(|b| b.1 as f64)));
    let mut doc = Document::new(620.0, 460.0);
    let main = Panel {
        left: 70.0,
        top: 30.0,
        width: 520.0,
        height: 360.0,
        x: Axis::log(f0, f1),
        y: Axis::log(n0, n1),
    };
    main.frame(&mut doc, "activity f", "users n(f)");
    for (i, d) in shown.iter().enumerate() {
        let pts: Vec<(f64, f64)> = d.histogram.bins().iter().map(|&(f, n)| (f, n as f64)).collect();
        main.circles(&mut doc, &pts, 1.5, &palette(i, shown.len()));
    }

    if !curve.is_empty() {
        let pts: Vec<(f64, f64)> = curve
            .iter()
            .map(|p| (10f64.powf(p.log_relative), 10f64.powf(p.log_density)))
            .collect();
        let (r0, r1) = bounds(pts.iter().map(|p| p.0));
        let (d0, d1) = bounds(pts.iter().map(|p| p.1));
        doc.push("<rect x=\"380\" y=\"40\" width=\"200\" height=\"150\" fill=\"white\" stroke=\"gray\"/>");
        let inset = Panel {
            left: 420.0,
            top: 50.0,
            width: 150.0,
            height: 100.0,
            x: Axis::log(r0, r1),
            y: Axis::log(d0, d1),
        };
        inset.frame(&mut doc, "f / f_max", "density");
        inset.circles(&mut doc, &pts, 2.0, "steelblue");
        let a = curve.iter().map(|p| p.log_density + beta * p.log_relative).sum::<f64>() / curve.len() as f64;
        let line = |r: f64| 10f64.powf(a - beta * r.log10());
        inset.segment(&mut doc, (r0, line(r0)), (r1, line(r1)), "crimson");
        text(&mut doc, 80.0, 50.0, &format!("beta = {beta:.3}, {} days", days.len()));
    }
    doc.finish()
}
