//! Wavefront OBJ subset: `v x y z`, `f a b c d` with 1-based indices and
//! `#` comments. Texture and normal references (`f 1/2/3 ...`) are accepted
//! and ignored, as are `vt`, `vn`, `o`, `g`, `s`, `usemtl` and `mtllib`.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use shellvib_core::mesh::ControlMesh;
use shellvib_core::Vec3;

use crate::{Error, Result};

const IGNORED: [&str; 7] = ["vt", "vn", "o", "g", "s", "usemtl", "mtllib"];

pub fn read_obj(reader: impl Read) -> Result<ControlMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Obj { line: line_no, message: e.to_string() })?;
        let bad = |message: String| Error::Obj { line: line_no, message };
        let content = line.split('#').next().unwrap_or("").trim();
        let mut tokens = content.split_whitespace();
        let Some(tag) = tokens.next() else { continue };
        let rest: Vec<&str> = tokens.collect();
        match tag {
            "v" => {
                if rest.len() != 3 && rest.len() != 4 {
                    return Err(bad(format!("vertex needs 3 coordinates, got {}", rest.len())));
                }
                let mut c = [0.0; 3];
                for (k, t) in rest[..3].iter().enumerate() {
                    c[k] = t.parse::<f64>().map_err(|_| bad(format!("bad coordinate {t:?}")))?;
                    if !c[k].is_finite() {
                        return Err(bad(format!("non-finite coordinate {t:?}")));
                    }
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            "f" => {
                if rest.len() != 4 {
                    return Err(bad(format!("only quads are supported, face has {} vertices", rest.len())));
                }
                let mut f = [0usize; 4];
                for (k, t) in rest.iter().enumerate() {
                    let idx = t.split('/').next().unwrap_or("");
                    let idx: usize = idx.parse().map_err(|_| bad(format!("bad vertex index {t:?}")))?;
                    if idx == 0 {
                        return Err(bad("vertex indices are 1-based".into()));
                    }
                    f[k] = idx - 1;
                }
                faces.push(f);
            }
            t if IGNORED.contains(&t) => {}
            t => return Err(bad(format!("unsupported statement {t:?}"))),
        }
    }
    Ok(ControlMesh::new(vertices, faces)?)
}

pub fn load_obj(path: impl AsRef<Path>) -> Result<ControlMesh> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_obj(file)
}

/// Writes the real (non-ghost) vertices and faces. Coordinates use the
/// shortest representation that parses back to the same value.
pub fn write_obj(mut w: impl Write, mesh: &ControlMesh) -> std::io::Result<()> {
    let m = mesh.without_ghosts();
    writeln!(w, "# {} vertices, {} quads", m.vertices().len(), m.num_faces())?;
    for p in m.vertices() {
        writeln!(w, "v {} {} {}", p.x, p.y, p.z)?;
    }
    for f in m.faces() {
        writeln!(w, "f {} {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1, f[3] + 1)?;
    }
    Ok(())
}

pub fn save_obj(path: impl AsRef<Path>, mesh: &ControlMesh) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_obj(&mut buf, mesh).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}
