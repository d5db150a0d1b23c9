//! GSRC Bookshelf `.blocks`, `.nets`, `.pl` and `.aux` files.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::model::{Endpoint, Floorplan, Module, Net, Orientation, Pad, Pin, ProblemInstance};

use super::{IoError, ParseError};

/// Contents of a `.blocks` file.
#[derive(Debug, Clone, PartialEq)]
pub struct BlocksFile {
    pub modules: Vec<Module>,
    pub terminals: Vec<String>,
}

/// One pin reference of a `.nets` file, with its optional percent offset.
#[derive(Debug, Clone, PartialEq)]
pub struct NetPin {
    pub name: String,
    pub offset: Option<(f64, f64)>,
}

/// One line of a `.pl` file.
#[derive(Debug, Clone, PartialEq)]
pub struct PlEntry {
    pub name: String,
    pub x: f64,
    pub y: f64,
    pub orientation: Option<Orientation>,
}

/// Paths of one benchmark.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchmarkFiles {
    pub blocks: PathBuf,
    pub nets: PathBuf,
    pub pl: PathBuf,
}

fn err(file: &'static str, line: usize, message: impl Into<String>) -> ParseError {
    ParseError { file, line, message: message.into() }
}

/// Non-empty, non-comment lines with their 1-based numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.trim();
        (!l.is_empty() && !l.starts_with('#')).then_some((i + 1, l))
    })
}

fn is_header(line: &str) -> bool {
    line.starts_with("UCSC ") || line.starts_with("UCLA ")
}

/// `Key : value` with an integer value.
fn count_line(line: &str) -> Option<(&str, usize)> {
    let (k, v) = line.split_once(':')?;
    let v = v.split_whitespace().next()?.parse().ok()?;
    Some((k.trim(), v))
}

fn parse_f64(tok: &str, file: &'static str, line: usize) -> Result<f64, ParseError> {
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| err(file, line, format!("expected a number, found `{tok}`")))
}

pub fn parse_blocks(text: &str) -> Result<BlocksFile, ParseError> {
    const F: &str = "blocks";
    let mut declared_hard = None;
    let mut declared_terms = None;
    let mut modules = Vec::new();
    let mut terminals = Vec::new();

    for (ln, line) in content_lines(text) {
        if is_header(line) {
            continue;
        }
        if let Some((key, v)) = count_line(line) {
            match key {
                "NumHardRectilinearBlocks" => declared_hard = Some((v, ln)),
                "NumTerminals" => declared_terms = Some((v, ln)),
                "NumSoftRectangularBlocks" if v > 0 => {
                    return Err(err(F, ln, "soft blocks are not supported, only hard rectangular modules"))
                }
                "NumSoftRectangularBlocks" => {}
                _ => return Err(err(F, ln, format!("unknown count `{key}`"))),
            }
            continue;
        }
        let mut toks = line.split_whitespace();
        let name = toks.next().expect("line is non-empty");
        match toks.next() {
            Some("terminal") => terminals.push(name.to_string()),
            Some("hardrectilinear") => {
                let rest = line[line.find("hardrectilinear").unwrap() + "hardrectilinear".len()..].trim();
                let (count, verts) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
                let count: usize =
                    count.parse().map_err(|_| err(F, ln, format!("bad vertex count `{count}` for `{name}`")))?;
                let points = parse_vertices(verts).map_err(|m| err(F, ln, format!("`{name}`: {m}")))?;
                if count != 4 || points.len() != 4 {
                    return Err(err(
                        F,
                        ln,
                        format!("`{name}` has {} vertices (declared {count}); only 4-vertex rectangles are supported", points.len()),
                    ));
                }
                let (w, h) = rectangle_extent(&points)
                    .ok_or_else(|| err(F, ln, format!("`{name}` is not an axis-aligned rectangle")))?;
                modules.push(Module::new(name, w, h).map_err(|e| err(F, ln, e.to_string()))?);
            }
            Some("softrectangular") => {
                return Err(err(F, ln, format!("`{name}` is a soft block; only hard modules are supported")))
            }
            Some(kind) => return Err(err(F, ln, format!("unknown block type `{kind}` for `{name}`"))),
            None => return Err(err(F, ln, format!("missing block type for `{name}`"))),
        }
    }

    if let Some((want, ln)) = declared_hard {
        if want != modules.len() {
            return Err(err(F, ln, format!("NumHardRectilinearBlocks is {want} but {} blocks were listed", modules.len())));
        }
    }
    if let Some((want, ln)) = declared_terms {
        if want != terminals.len() {
            return Err(err(F, ln, format!("NumTerminals is {want} but {} terminals were listed", terminals.len())));
        }
    }
    Ok(BlocksFile { modules, terminals })
}

fn parse_vertices(s: &str) -> Result<Vec<(f64, f64)>, String> {
    let mut out = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        let open = rest.strip_prefix('(').ok_or_else(|| format!("expected `(` at `{rest}`"))?;
        let close = open.find(')').ok_or("unterminated vertex")?;
        let (a, b) = open[..close].split_once(',').ok_or("vertex needs two coordinates")?;
        let x = a.trim().parse::<f64>().map_err(|_| format!("bad coordinate `{}`", a.trim()))?;
        let y = b.trim().parse::<f64>().map_err(|_| format!("bad coordinate `{}`", b.trim()))?;
        out.push((x, y));
        rest = open[close + 1..].trim_start();
    }
    Ok(out)
}

/// Width and height of four vertices forming an axis-aligned rectangle.
fn rectangle_extent(p: &[(f64, f64)]) -> Option<(f64, f64)> {
    let (x0, x1) = p.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v.0), b.max(v.0)));
    let (y0, y1) = p.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v.1), b.max(v.1)));
    let corner = |v: &(f64, f64)| (v.0 == x0 || v.0 == x1) && (v.1 == y0 || v.1 == y1);
    let mut corners: Vec<(u8, u8)> = p.iter().map(|v| ((v.0 == x1) as u8, (v.1 == y1) as u8)).collect();
    corners.sort();
    corners.dedup();
    (p.iter().all(corner) && corners.len() == 4 && x1 > x0 && y1 > y0).then_some((x1 - x0, y1 - y0))
}

pub fn parse_nets(text: &str) -> Result<Vec<Vec<NetPin>>, ParseError> {
    const F: &str = "nets";
    let mut nets: Vec<Vec<NetPin>> = Vec::new();
    let mut expected: Option<(usize, usize)> = None; // (degree, line)
    let mut declared_nets = None;
    let mut declared_pins = None;

    let close = |nets: &Vec<Vec<NetPin>>, expected: Option<(usize, usize)>| -> Result<(), ParseError> {
        if let (Some((deg, ln)), Some(last)) = (expected, nets.last()) {
            if last.len() != deg {
                return Err(err(F, ln, format!("net {} declares degree {deg} but lists {} pins", nets.len(), last.len())));
            }
        }
        Ok(())
    };

    for (ln, line) in content_lines(text) {
        if is_header(line) {
            continue;
        }
        if let Some(rest) = line.strip_prefix("NetDegree") {
            close(&nets, expected)?;
            let deg = rest
                .trim_start()
                .strip_prefix(':')
                .and_then(|r| r.split_whitespace().next())
                .and_then(|d| d.parse::<usize>().ok())
                .ok_or_else(|| err(F, ln, "malformed NetDegree line"))?;
            nets.push(Vec::with_capacity(deg));
            expected = Some((deg, ln));
            continue;
        }
        if let Some((key, v)) = count_line(line) {
            match key {
                "NumNets" => {
                    declared_nets = Some((v, ln));
                    continue;
                }
                "NumPins" => {
                    declared_pins = Some((v, ln));
                    continue;
                }
                _ => {}
            }
        }
        let Some(net) = nets.last_mut() else {
            return Err(err(F, ln, "pin listed before any NetDegree line"));
        };
        if let Some((deg, _)) = expected {
            if net.len() == deg {
                return Err(err(F, ln, format!("net {} has more pins than its degree {deg}", nets.len())));
            }
        }
        let (head, offset) = match line.split_once(':') {
            Some((h, o)) => (h, Some(parse_offset(o, ln)?)),
            None => (line, None),
        };
        let name = head.split_whitespace().next().ok_or_else(|| err(F, ln, "missing pin name"))?;
        net.push(NetPin { name: name.to_string(), offset });
    }
    close(&nets, expected)?;

    if let Some((want, ln)) = declared_nets {
        if want != nets.len() {
            return Err(err(F, ln, format!("NumNets is {want} but {} nets were listed", nets.len())));
        }
    }
    if let Some((want, ln)) = declared_pins {
        let got: usize = nets.iter().map(Vec::len).sum();
        if want != got {
            return Err(err(F, ln, format!("NumPins is {want} but {got} pins were listed")));
        }
    }
    Ok(nets)
}

fn parse_offset(s: &str, ln: usize) -> Result<(f64, f64), ParseError> {
    let toks: Vec<&str> = s.split_whitespace().collect();
    let pct = |t: &str| {
        let v = t.strip_prefix('%').ok_or_else(|| err("nets", ln, format!("offset `{t}` must start with %")))?;
        parse_f64(v, "nets", ln)
    };
    match toks.as_slice() {
        [a, b] => Ok((pct(a)?, pct(b)?)),
        _ => Err(err("nets", ln, "pin offset must be `%x %y`")),
    }
}

fn orientation_from_tag(tag: &str) -> Option<Orientation> {
    match tag {
        "N" => Some(Orientation::R0),
        "E" => Some(Orientation::R90),
        "S" => Some(Orientation::R180),
        "W" => Some(Orientation::R270),
        _ => None,
    }
}

fn orientation_tag(r: Orientation) -> &'static str {
    ["N", "E", "S", "W"][r.index()]
}

pub fn parse_pl(text: &str) -> Result<Vec<PlEntry>, ParseError> {
    const F: &str = "pl";
    let mut out = Vec::new();
    for (ln, line) in content_lines(text) {
        if is_header(line) {
            continue;
        }
        let line = line.trim_end_matches("/FIXED").trim_end();
        let (head, tail) = match line.split_once(':') {
            Some((h, t)) => (h, Some(t.trim())),
            None => (line, None),
        };
        let toks: Vec<&str> = head.split_whitespace().collect();
        let [name, x, y] = toks.as_slice() else {
            return Err(err(F, ln, "expected `name x y [: orientation]`"));
        };
        let orientation = match tail {
            Some(t) => Some(orientation_from_tag(t).ok_or_else(|| err(F, ln, format!("unsupported orientation `{t}`")))?),
            None => None,
        };
        out.push(PlEntry { name: name.to_string(), x: parse_f64(x, F, ln)?, y: parse_f64(y, F, ln)?, orientation });
    }
    Ok(out)
}

/// Reads `Key : a.blocks a.nets a.pl`, resolving names against `dir`.
pub fn parse_aux(text: &str, dir: &Path) -> Result<BenchmarkFiles, ParseError> {
    const F: &str = "aux";
    for (ln, line) in content_lines(text) {
        let Some((_, files)) = line.split_once(':') else { continue };
        let pick = |ext: &str| files.split_whitespace().find(|f| f.ends_with(ext)).map(|f| dir.join(f));
        let missing = |ext: &str| err(F, ln, format!("no {ext} file listed"));
        return Ok(BenchmarkFiles {
            blocks: pick(".blocks").ok_or_else(|| missing(".blocks"))?,
            nets: pick(".nets").ok_or_else(|| missing(".nets"))?,
            pl: pick(".pl").ok_or_else(|| missing(".pl"))?,
        });
    }
    Err(err(F, 0, "no `Key : files...` line found"))
}

/// Resolves names and builds the instance. Every terminal must have a `.pl`
/// coordinate; module entries in the `.pl` are ignored here.
pub fn assemble(blocks: BlocksFile, nets: &[Vec<NetPin>], pl: &[PlEntry]) -> Result<ProblemInstance, ParseError> {
    let module_ids: HashMap<&str, usize> = blocks.modules.iter().enumerate().map(|(i, m)| (m.name.as_str(), i)).collect();
    let coords: HashMap<&str, (f64, f64)> = pl.iter().map(|e| (e.name.as_str(), (e.x, e.y))).collect();
    let mut pads = Vec::with_capacity(blocks.terminals.len());
    let mut pad_ids = HashMap::new();
    for t in &blocks.terminals {
        if module_ids.contains_key(t.as_str()) || pad_ids.contains_key(t.as_str()) {
            return Err(err("blocks", 0, format!("name `{t}` is declared twice")));
        }
        let &(x, y) = coords.get(t.as_str()).ok_or_else(|| err("pl", 0, format!("terminal `{t}` has no coordinates")))?;
        pad_ids.insert(t.as_str(), pads.len());
        pads.push(Pad::new(t.clone(), x, y).map_err(|e| err("pl", 0, e.to_string()))?);
    }

    let mut out = Vec::with_capacity(nets.len());
    for (k, net) in nets.iter().enumerate() {
        let mut pins = Vec::with_capacity(net.len());
        for p in net {
            let endpoint = if let Some(&i) = module_ids.get(p.name.as_str()) {
                Endpoint::Module(i)
            } else if let Some(&i) = pad_ids.get(p.name.as_str()) {
                Endpoint::Pad(i)
            } else {
                return Err(err("nets", 0, format!("net {k} names undeclared block or terminal `{}`", p.name)));
            };
            pins.push(Pin { endpoint, offset: p.offset.unwrap_or((0.0, 0.0)) });
        }
        out.push(Net::new(pins));
    }
    let modules = blocks.modules;
    ProblemInstance::new(modules, pads, out).map_err(|e| err("nets", 0, e.to_string()))
}

fn read(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Read { path: path.to_path_buf(), source })
}

pub fn load_aux(path: &Path) -> Result<BenchmarkFiles, IoError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    Ok(parse_aux(&read(path)?, dir)?)
}

/// Loads an instance together with the parsed `.pl` entries.
pub fn load(files: &BenchmarkFiles) -> Result<(ProblemInstance, Vec<PlEntry>), IoError> {
    let blocks = parse_blocks(&read(&files.blocks)?).map_err(|e| e.at(&files.blocks))?;
    let nets = parse_nets(&read(&files.nets)?).map_err(|e| e.at(&files.nets))?;
    let pl = parse_pl(&read(&files.pl)?).map_err(|e| e.at(&files.pl))?;
    let inst = assemble(blocks, &nets, &pl)?;
    Ok((inst, pl))
}

/// Module positions from `.pl` entries (lower-left corners); modules
/// without an entry stay at the origin.
pub fn plan_from_pl(instance: &ProblemInstance, entries: &[PlEntry]) -> Floorplan {
    let by_name: HashMap<&str, &PlEntry> = entries.iter().map(|e| (e.name.as_str(), e)).collect();
    let mut plan = Floorplan::zeros(instance.len());
    for (i, m) in instance.modules().iter().enumerate() {
        if let Some(e) = by_name.get(m.name.as_str()) {
            plan.r[i] = e.orientation.unwrap_or_default();
            plan.set_lower_left(instance, i, e.x, e.y);
        } else {
            plan.set_lower_left(instance, i, 0.0, 0.0);
        }
    }
    plan
}

/// `.pl` text with lower-left module corners and orientations, then pads.
pub fn write_pl(instance: &ProblemInstance, plan: &Floorplan) -> String {
    let mut s = String::from("UCLA pl 1.0\n\n");
    for (i, m) in instance.modules().iter().enumerate() {
        let (x, y) = plan.lower_left(instance, i);
        let _ = writeln!(s, "{} {} {} : {}", m.name, x, y, orientation_tag(plan.r[i]));
    }
    for p in instance.pads() {
        let _ = writeln!(s, "{} {} {}", p.name, p.x, p.y);
    }
    s
}

pub fn write_blocks(instance: &ProblemInstance) -> String {
    let mut s = String::from("UCSC blocks 1.0\n\n");
    let _ = writeln!(s, "NumSoftRectangularBlocks : 0");
    let _ = writeln!(s, "NumHardRectilinearBlocks : {}", instance.len());
    let _ = writeln!(s, "NumTerminals : {}\n", instance.pads().len());
    for m in instance.modules() {
        let (w, h) = (m.width, m.height);
        let _ = writeln!(s, "{} hardrectilinear 4 (0, 0) (0, {h}) ({w}, {h}) ({w}, 0)", m.name);
    }
    s.push('\n');
    for p in instance.pads() {
        let _ = writeln!(s, "{} terminal", p.name);
    }
    s
}

pub fn write_nets(instance: &ProblemInstance) -> String {
    let pins: usize = instance.nets().iter().map(|n| n.pins.len()).sum();
    let mut s = String::from("UCLA nets 1.0\n\n");
    let _ = writeln!(s, "NumNets : {}", instance.nets().len());
    let _ = writeln!(s, "NumPins : {pins}\n");
    for net in instance.nets() {
        let _ = writeln!(s, "NetDegree : {}", net.pins.len());
        for pin in &net.pins {
            let name = match pin.endpoint {
                Endpoint::Module(i) => &instance.modules()[i].name,
                Endpoint::Pad(i) => &instance.pads()[i].name,
            };
            if pin.offset == (0.0, 0.0) {
                let _ = writeln!(s, "{name} B");
            } else {
                let _ = writeln!(s, "{name} B : %{} %{}", pin.offset.0, pin.offset.1);
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const BLOCKS: &str = "UCSC blocks 1.0\n# comment\n\nNumSoftRectangularBlocks : 0\nNumHardRectilinearBlocks : 2\nNumTerminals : 1\n\nsb0 hardrectilinear 4 (0,0) (0,6) (8,6) (8,0)\nsb1 hardrectilinear 4 (0, 0) (0, 2) (3, 2) (3, 0)\np1 terminal\n";
    const NETS: &str = "UCLA nets 1.0\nNumNets : 2\nNumPins : 4\nNetDegree : 2\nsb0 B\np1 B\nNetDegree : 2\nsb0 B : %50.0 %-25\nsb1 B\n";
    const PL: &str = "UCLA pl 1.0\n\np1 0 100\nsb0 3 4 : E\n";

    #[test]
    fn block_extent_from_vertices() {
        let b = parse_blocks(BLOCKS).unwrap();
        assert_eq!((b.modules[0].width, b.modules[0].height), (8.0, 6.0));
        assert_eq!(b.terminals, vec!["p1".to_string()]);
    }

    #[test]
    fn count_mismatch_names_both_numbers() {
        let text = BLOCKS.replace("NumHardRectilinearBlocks : 2", "NumHardRectilinearBlocks : 3");
        let e = parse_blocks(&text).unwrap_err();
        assert!(e.message.contains('3') && e.message.contains('2'), "{e}");
        assert_eq!(e.line, 5);
    }

    #[test]
    fn rejects_bad_blocks() {
        for bad in [
            "a hardrectilinear 4 (0,0) (0,6) (8,6)",
            "a hardrectilinear 4 (0,0) (0,6) (8,5) (8,0)",
            "a hardrectilinear 6 (0,0) (0,6) (4,6) (4,3) (8,3) (8,0)",
            "a softrectangular 100 0.5 2",
            "a hardrectilinear 4 (0,0 (0,6) (8,6) (8,0)",
        ] {
            let e = parse_blocks(bad).unwrap_err();
            assert_eq!(e.line, 1, "{bad}");
        }
    }

    #[test]
    fn nets_grammar_walk() {
        let nets = parse_nets(NETS).unwrap();
        assert_eq!(nets.len(), 2);
        assert_eq!(nets[0][0].name, "sb0");
        assert_eq!(nets[0][1].name, "p1");
        assert_eq!(nets[1][0].offset, Some((50.0, -25.0)));
    }

    #[test]
    fn degree_mismatch_is_an_error() {
        let text = "NetDegree : 3\na B\nb B\nNetDegree : 2\na B\nb B\n";
        assert_eq!(parse_nets(text).unwrap_err().line, 1);
        let text = "NetDegree : 1\na B\nb B\n";
        assert_eq!(parse_nets(text).unwrap_err().line, 3);
    }

    #[test]
    fn pad_coordinates_and_assembly() {
        let pl = parse_pl(PL).unwrap();
        assert_eq!(pl[0], PlEntry { name: "p1".into(), x: 0.0, y: 100.0, orientation: None });
        assert_eq!(pl[1].orientation, Some(Orientation::R90));
        let inst = assemble(parse_blocks(BLOCKS).unwrap(), &parse_nets(NETS).unwrap(), &pl).unwrap();
        assert_eq!(inst.nets()[0].pins[0].endpoint, Endpoint::Module(0));
        assert_eq!(inst.nets()[0].pins[1].endpoint, Endpoint::Pad(0));
        assert_eq!(inst.pads()[0].y, 100.0);
    }

    #[test]
    fn undeclared_name_reports_net_index() {
        let nets = parse_nets("NetDegree : 2\nsb0 B\nzz B\nNetDegree : 2\nsb0 B\nsb9 B\n").unwrap();
        let pl = parse_pl(PL).unwrap();
        let e = assemble(parse_blocks(BLOCKS).unwrap(), &nets[1..], &pl).unwrap_err();
        assert!(e.message.contains("net 0") && e.message.contains("sb9"), "{e}");
    }

    #[test]
    fn unplaced_terminal_is_an_error() {
        let e = assemble(parse_blocks(BLOCKS).unwrap(), &parse_nets(NETS).unwrap(), &[]).unwrap_err();
        assert!(e.message.contains("p1"));
    }

    #[test]
    fn aux_resolves_paths() {
        let f = parse_aux("RowBasedPlacement : n10.nets n10.blocks n10.pl\n", Path::new("/data")).unwrap();
        assert_eq!(f.blocks, PathBuf::from("/data/n10.blocks"));
        assert_eq!(f.pl, PathBuf::from("/data/n10.pl"));
        assert!(parse_aux("# nothing\n", Path::new(".")).is_err());
    }

    #[test]
    fn pl_round_trip() {
        let inst = assemble(parse_blocks(BLOCKS).unwrap(), &parse_nets(NETS).unwrap(), &parse_pl(PL).unwrap()).unwrap();
        let mut plan = Floorplan::zeros(2);
        plan.r[0] = Orientation::R270;
        plan.set_lower_left(&inst, 0, 1.0 / 3.0, 17.25);
        plan.set_lower_left(&inst, 1, 1e6 + 0.1, -4.0);
        let back = plan_from_pl(&inst, &parse_pl(&write_pl(&inst, &plan)).unwrap());
        assert_eq!(back.r, plan.r);
        for i in 0..2 {
            assert!((back.x[i] - plan.x[i]).abs() < 1e-6 && (back.y[i] - plan.y[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn written_files_parse_back() {
        let inst = assemble(parse_blocks(BLOCKS).unwrap(), &parse_nets(NETS).unwrap(), &parse_pl(PL).unwrap()).unwrap();
        let plan = Floorplan::zeros(2);
        let again = assemble(
            parse_blocks(&write_blocks(&inst)).unwrap(),
            &parse_nets(&write_nets(&inst)).unwrap(),
            &parse_pl(&write_pl(&inst, &plan)).unwrap(),
        )
        .unwrap();
        assert_eq!(again, inst);
    }
}
