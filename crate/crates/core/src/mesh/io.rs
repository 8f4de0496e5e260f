//! Line-oriented text format.
//!
//! ```text
//! mesh <dim> <nvertices> <nsimplices>
//! v x y [z]
//! s i0 i1 i2 [i3]
//! ```
//!
//! `#` starts a comment. Only vertices and top-dimensional simplices are
//! stored; edge and face tables are rebuilt on read. A comment of the form
//! `# domain <tag>` restores the domain tag.

use std::fmt::Write as _;

use super::Mesh;
use crate::error::{Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn read_mesh(text: &str) -> Result<Mesh> {
    let mut header: Option<(usize, usize, usize, usize)> = None;
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut simplices: Vec<Vec<usize>> = Vec::new();
    let mut simplex_lines: Vec<usize> = Vec::new();
    let mut tag = String::from("file");
    let mut last_line = 0;

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        last_line = lineno;
        if let Some(rest) = raw.trim_start().strip_prefix("# domain ") {
            tag = rest.trim().to_string();
            continue;
        }
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let kind = tokens.next().unwrap_or_default();
        let rest: Vec<&str> = tokens.collect();
        match (kind, header) {
            ("mesh", None) => {
                if rest.len() != 3 {
                    return Err(parse_err(lineno, "header must be 'mesh <dim> <nvertices> <nsimplices>'"));
                }
                let nums: Vec<usize> = rest
                    .iter()
                    .map(|t| t.parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| parse_err(lineno, "malformed header count"))?;
                if nums[0] != 2 && nums[0] != 3 {
                    return Err(parse_err(lineno, format!("unsupported dimension {}", nums[0])));
                }
                header = Some((nums[0], nums[1], nums[2], lineno));
            }
            ("mesh", Some(_)) => return Err(parse_err(lineno, "duplicate header")),
            (_, None) => return Err(parse_err(lineno, "expected 'mesh' header first")),
            ("v", Some((dim, nv, _, _))) => {
                if !simplices.is_empty() {
                    return Err(parse_err(lineno, "vertex after simplices"));
                }
                if rest.len() != dim {
                    return Err(parse_err(lineno, format!("vertex needs {dim} coordinates")));
                }
                if vertices.len() == nv {
                    return Err(parse_err(lineno, format!("more than {nv} vertices")));
                }
                let mut p = [0.0; 3];
                for (k, t) in rest.iter().enumerate() {
                    p[k] = t
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| parse_err(lineno, format!("malformed coordinate '{t}'")))?;
                }
                vertices.push(p);
            }
            ("s", Some((dim, nv, ns, _))) => {
                if rest.len() != dim + 1 {
                    return Err(parse_err(lineno, format!("simplex needs {} indices", dim + 1)));
                }
                if simplices.len() == ns {
                    return Err(parse_err(lineno, format!("more than {ns} simplices")));
                }
                let mut s = Vec::with_capacity(dim + 1);
                for t in &rest {
                    let v: usize = t
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("malformed index '{t}'")))?;
                    if v >= nv {
                        return Err(parse_err(
                            lineno,
                            format!("vertex index out of range: {v} of {nv}"),
                        ));
                    }
                    s.push(v);
                }
                let mut sorted = s.clone();
                sorted.sort_unstable();
                if sorted.windows(2).any(|w| w[0] == w[1]) {
                    return Err(parse_err(lineno, "repeated vertex in simplex"));
                }
                simplices.push(s);
                simplex_lines.push(lineno);
            }
            (other, Some(_)) => {
                return Err(parse_err(lineno, format!("unknown record '{other}'")));
            }
        }
    }

    let (dim, nv, ns, hline) = header.ok_or_else(|| parse_err(last_line.max(1), "missing header"))?;
    if vertices.len() != nv {
        return Err(parse_err(hline, format!("header declares {nv} vertices, found {}", vertices.len())));
    }
    if simplices.is_empty() {
        return Err(parse_err(last_line.max(1), "no simplices"));
    }
    if simplices.len() != ns {
        return Err(parse_err(hline, format!("header declares {ns} simplices, found {}", simplices.len())));
    }
    let mut keyed: Vec<(Vec<usize>, usize)> = simplices
        .iter()
        .zip(&simplex_lines)
        .map(|(s, &l)| {
            let mut k = s.clone();
            k.sort_unstable();
            (k, l)
        })
        .collect();
    keyed.sort();
    if let Some(w) = keyed.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(parse_err(w[1].1.max(w[0].1), "duplicate simplex"));
    }
    Mesh::from_simplices(dim, vertices, simplices, tag)
}

pub fn write_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# domain {}", mesh.domain_tag());
    let _ = writeln!(s, "mesh {} {} {}", mesh.dim(), mesh.num_vertices(), mesh.num_cells());
    for v in mesh.vertices() {
        let _ = write!(s, "v");
        for c in &v[..mesh.dim()] {
            let _ = write!(s, " {c:?}");
        }
        s.push('\n');
    }
    for c in mesh.cells() {
        let _ = write!(s, "s");
        for i in c {
            let _ = write!(s, " {i}");
        }
        s.push('\n');
    }
    s
}
