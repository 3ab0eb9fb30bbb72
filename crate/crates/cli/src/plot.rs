//! gnuplot scripts for the written CSV files.

use std::fmt::Write;

fn header(out: &mut String, title: &str) {
    let _ = writeln!(out, "set datafile separator ','");
    let _ = writeln!(out, "set title '{title}'");
    let _ = writeln!(out, "set xlabel 't'");
    let _ = writeln!(out, "set ylabel 'q(t)'");
    let _ = writeln!(out, "set grid");
    let _ = writeln!(out, "set key top right");
}

/// Every coordinate of one solution against `t`.
pub fn single(csv: &str, dim: usize, k: f64) -> String {
    let mut out = String::new();
    header(&mut out, &format!("A numerical solution for k = {k}"));
    let _ = writeln!(out, "set xrange [{}:{}]", -k, k);
    let curves: Vec<String> = (0..dim)
        .map(|c| format!("'{csv}' using 1:{} with lines lw 2 title 'q_{}'", c + 2, c + 1))
        .collect();
    let _ = writeln!(out, "plot {}", curves.join(", \\\n     "));
    let _ = writeln!(out, "pause -1");
    out
}

/// First coordinate of each ladder solution on `[-window, window]`.
pub fn overlay(files: &[(f64, String)], window: f64) -> String {
    let mut out = String::new();
    header(&mut out, "Numerical solutions on a common window");
    let _ = writeln!(out, "set xrange [{}:{}]", -window, window);
    let curves: Vec<String> = files
        .iter()
        .map(|(k, f)| format!("'{f}' using 1:2 with lines lw 2 title 'k = {k}'"))
        .collect();
    let _ = writeln!(out, "plot {}", curves.join(", \\\n     "));
    let _ = writeln!(out, "pause -1");
    out
}
