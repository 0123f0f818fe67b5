//! The (r', s') region of a lattice: ASCII grid and SVG, r' horizontal and s' vertical.

use std::fmt::Write;

use breuilkit::rank2::LatticeReport;

fn glyph(rep: &LatticeReport, rp: u32, sp: u32) -> char {
    let Some(i) = rep.points.iter().position(|p| p.r_prime == rp && p.s_prime == sp) else {
        return '.';
    };
    if rep.maximal == Some(i) {
        'M'
    } else if rep.minimal == Some(i) {
        'm'
    } else if rep.points[i].split {
        's'
    } else {
        '#'
    }
}

/// One line per s', top row s' = l + 1.
pub fn ascii(rep: &LatticeReport) -> Vec<String> {
    let top = rep.l + 1;
    let mut lines: Vec<String> = (0..=top)
        .rev()
        .map(|sp| {
            let row: String = (0..=top).map(|rp| glyph(rep, rp, sp)).flat_map(|c| [' ', c]).collect();
            format!("{sp:>2} |{row}")
        })
        .collect();
    lines.push(format!("   +{}", "-".repeat(2 * (top as usize + 1))));
    lines.push(format!("    {}", (0..=top).map(|rp| format!(" {}", rp % 10)).collect::<String>()));
    lines
}

pub fn svg(rep: &LatticeReport) -> String {
    const CELL: u32 = 40;
    let n = rep.l + 2;
    let size = CELL * (n + 1);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(s, r#"<rect width="{size}" height="{size}" fill="white"/>"#);
    let x = |rp: u32| CELL * (rp + 1);
    let y = |sp: u32| CELL * (n - sp);
    for i in 0..n {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{i}</text>"#,
            x(i),
            size - 8
        );
        let _ = writeln!(s, r#"<text x="12" y="{}" font-size="12">{i}</text>"#, y(i) + 4);
    }
    for &(i, j) in &rep.homs {
        let (p, q) = (&rep.points[i], &rep.points[j]);
        // only cover relations, so the picture stays readable
        if p.r_prime.abs_diff(q.r_prime) + p.s_prime.abs_diff(q.s_prime) == 1 {
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray"/>"#,
                x(p.r_prime),
                y(p.s_prime),
                x(q.r_prime),
                y(q.s_prime)
            );
        }
    }
    for p in &rep.points {
        let c = match glyph(rep, p.r_prime, p.s_prime) {
            'M' => "crimson",
            'm' => "navy",
            's' => "orange",
            _ => "black",
        };
        let _ = writeln!(
            s,
            r#"<circle cx="{}" cy="{}" r="6" fill="{c}"><title>{}</title></circle>"#,
            x(p.r_prime),
            y(p.s_prime),
            p.label
        );
    }
    s.push_str("</svg>\n");
    s
}
