//! Minimal self-contained SVG plotting for run ledgers.

use hyprl_core::monitor::BootstrapLedger;

const W: f64 = 720.0;
const H: f64 = 420.0;
const PAD: f64 = 48.0;

fn polyline(points: &[(f64, f64)], color: &str) -> String {
    let coords: Vec<String> =
        points.iter().map(|&(x, y)| format!("{x:.2},{y:.2}")).collect();
    format!(
        "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
        coords.join(" ")
    )
}

/// X(t), Y(t) and the bootstrap budget as one SVG.
pub fn ledger_svg(ledger: &BootstrapLedger) -> String {
    let samples = ledger.samples();
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    );
    if samples.len() < 2 {
        svg.push_str("<text x=\"20\" y=\"30\">not enough samples</text>\n</svg>\n");
        return svg;
    }
    let t0 = samples[0].t;
    let t1 = samples[samples.len() - 1].t;
    let ymax = samples
        .iter()
        .fold(ledger.budget, |a, s| a.max(s.x).max(s.y2.sqrt()))
        .max(f64::MIN_POSITIVE);
    let sx = |t: f64| PAD + (t - t0) / (t1 - t0) * (W - 2.0 * PAD);
    let sy = |v: f64| H - PAD - v / ymax * (H - 2.0 * PAD);

    let x_line: Vec<(f64, f64)> = samples.iter().map(|s| (sx(s.t), sy(s.x))).collect();
    let y_line: Vec<(f64, f64)> = samples.iter().map(|s| (sx(s.t), sy(s.y2.sqrt()))).collect();
    svg.push_str(&format!(
        "<line x1=\"{PAD}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n\
         <line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{0}\" stroke=\"black\"/>\n",
        H - PAD,
        W - PAD
    ));
    if ledger.budget > 0.0 && ledger.budget <= ymax {
        let yb = sy(ledger.budget);
        svg.push_str(&format!(
            "<line x1=\"{PAD}\" y1=\"{yb:.2}\" x2=\"{:.2}\" y2=\"{yb:.2}\" \
             stroke=\"crimson\" stroke-dasharray=\"6,4\"/>\n",
            W - PAD
        ));
    }
    svg.push_str(&polyline(&x_line, "steelblue"));
    svg.push_str(&polyline(&y_line, "darkorange"));
    svg.push_str(&format!(
        "<text x=\"{PAD}\" y=\"24\" font-size=\"13\">X (blue), Y (orange), budget {:.3e} (dashed)</text>\n",
        ledger.budget
    ));
    svg.push_str("</svg>\n");
    svg
}
