//! OFF and OBJ reading and writing (vertices and triangles only).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "off" => Some(MeshFormat::Off),
            "obj" => Some(MeshFormat::Obj),
            _ => None,
        }
    }
}

pub fn load_mesh(path: impl AsRef<Path>, format: MeshFormat) -> Result<Mesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mesh = match format {
        MeshFormat::Off => parse_off(&text)?,
        MeshFormat::Obj => parse_obj(&text)?,
    };
    Ok(match path.file_stem().and_then(|s| s.to_str()) {
        Some(stem) => mesh.with_name(stem),
        None => mesh,
    })
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>, format: MeshFormat) -> Result<()> {
    let text = match format {
        MeshFormat::Off => write_off(mesh),
        MeshFormat::Obj => write_obj(mesh),
    };
    fs::write(path, text)?;
    Ok(())
}

/// 17 significant digits: enough for an exact decimal round trip of any f64.
fn fmt_coord(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_off(mesh: &Mesh) -> String {
    let mut out = String::new();
    out.push_str("OFF\n");
    let _ = writeln!(out, "{} {} 0", mesh.vertex_count(), mesh.face_count());
    for v in mesh.vertices() {
        let _ = writeln!(
            out,
            "{} {} {}",
            fmt_coord(v.x),
            fmt_coord(v.y),
            fmt_coord(v.z)
        );
    }
    for [a, b, c] in mesh.faces() {
        let _ = writeln!(out, "3 {a} {b} {c}");
    }
    out
}

pub fn write_obj(mesh: &Mesh) -> String {
    let mut out = String::new();
    if let Some(name) = mesh.name() {
        let _ = writeln!(out, "o {name}");
    }
    for v in mesh.vertices() {
        let _ = writeln!(
            out,
            "v {} {} {}",
            fmt_coord(v.x),
            fmt_coord(v.y),
            fmt_coord(v.z)
        );
    }
    for [a, b, c] in mesh.faces() {
        let _ = writeln!(out, "f {} {} {}", a + 1, b + 1, c + 1);
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("bad {what} `{tok}`")))
}

pub fn parse_off(text: &str) -> Result<Mesh> {
    // (1-based line number, content without comments)
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let mut header_tokens = header.split_whitespace();
    if header_tokens.next() != Some("OFF") {
        return Err(parse_err(hl, "expected `OFF` header"));
    }
    // counts may follow the keyword on the same line
    let rest: Vec<&str> = header_tokens.collect();
    let (cl, counts) = if rest.is_empty() {
        let (cl, l) = lines
            .next()
            .ok_or_else(|| parse_err(hl, "missing counts line"))?;
        (cl, l.split_whitespace().collect::<Vec<_>>())
    } else {
        (hl, rest)
    };
    let mut it = counts.into_iter();
    let nv: usize = parse_num(it.next(), cl, "vertex count")?;
    let nf: usize = parse_num(it.next(), cl, "face count")?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(cl, "unexpected end of file in vertex block"))?;
        let mut t = l.split_whitespace();
        let x = parse_num(t.next(), ln, "x")?;
        let y = parse_num(t.next(), ln, "y")?;
        let z = parse_num(t.next(), ln, "z")?;
        vertices.push(Vec3::new(x, y, z));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(cl, "unexpected end of file in face block"))?;
        let mut t = l.split_whitespace();
        let k: usize = parse_num(t.next(), ln, "face arity")?;
        if k != 3 {
            return Err(parse_err(
                ln,
                format!("only triangles are supported, got {k}-gon"),
            ));
        }
        let a = parse_num(t.next(), ln, "vertex index")?;
        let b = parse_num(t.next(), ln, "vertex index")?;
        let c = parse_num(t.next(), ln, "vertex index")?;
        faces.push([a, b, c]);
    }
    Mesh::new(vertices, faces)
}

pub fn parse_obj(text: &str) -> Result<Mesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut name = None;
    let mut ignored = 0usize;
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let l = raw.split('#').next().unwrap_or("").trim();
        let mut t = l.split_whitespace();
        match t.next() {
            None => {}
            Some("v") => {
                let x = parse_num(t.next(), ln, "x")?;
                let y = parse_num(t.next(), ln, "y")?;
                let z = parse_num(t.next(), ln, "z")?;
                vertices.push(Vec3::new(x, y, z));
            }
            Some("f") => {
                let idx: Vec<&str> = t.collect();
                if idx.len() != 3 {
                    return Err(parse_err(
                        ln,
                        format!("only triangles are supported, got {} indices", idx.len()),
                    ));
                }
                let mut face = [0usize; 3];
                for (slot, tok) in face.iter_mut().zip(idx) {
                    let first = tok.split('/').next().unwrap_or("");
                    let k: i64 = parse_num(Some(first), ln, "vertex index")?;
                    *slot = match k {
                        k if k > 0 => (k - 1) as usize,
                        k if k < 0 && (-k) as usize <= vertices.len() => {
                            vertices.len() - (-k) as usize
                        }
                        _ => return Err(parse_err(ln, format!("invalid vertex index {k}"))),
                    };
                }
                faces.push(face);
            }
            Some("o") if name.is_none() => {
                name = t.next().map(str::to_owned);
            }
            Some(_) => ignored += 1,
        }
    }
    if ignored > 0 {
        warn!("OBJ: ignored {ignored} non-geometry records");
    }
    let mesh = Mesh::new(vertices, faces)?;
    Ok(match name {
        Some(n) => mesh.with_name(n),
        None => mesh,
    })
}
