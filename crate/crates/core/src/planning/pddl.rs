//! Reader and writer for the `:strips :typing` subset of PDDL.

use std::fmt::Write as _;

use super::domain::{ActionModel, ActionSchema, BoundPredicate, Domain, Flags, ParamBinding, Predicate};
use super::ground::Instance;
use super::types::{TypeId, TypeTree};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Atom(String, usize),
    List(Vec<Sexp>, usize),
}

impl Sexp {
    fn line(&self) -> usize {
        match self {
            Sexp::Atom(_, l) | Sexp::List(_, l) => *l,
        }
    }

    fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(s, _) => Some(s),
            Sexp::List(..) => None,
        }
    }

    fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(v, _) => Some(v),
            Sexp::Atom(..) => None,
        }
    }
}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse { line, msg: msg.into() })
}

fn parse_sexp(src: &str) -> Result<Sexp> {
    let mut stack: Vec<(Vec<Sexp>, usize)> = Vec::new();
    let mut done: Option<Sexp> = None;
    for (lineno, raw) in src.lines().enumerate() {
        let line = lineno + 1;
        let text = raw.split(';').next().unwrap_or("");
        let mut chars = text.char_indices().peekable();
        while let Some((i, c)) = chars.next() {
            match c {
                '(' => {
                    if done.is_some() {
                        return err(line, "trailing input after top-level expression");
                    }
                    stack.push((Vec::new(), line));
                }
                ')' => {
                    let Some((items, l)) = stack.pop() else {
                        return err(line, "unbalanced `)`");
                    };
                    let node = Sexp::List(items, l);
                    match stack.last_mut() {
                        Some((parent, _)) => parent.push(node),
                        None => done = Some(node),
                    }
                }
                c if c.is_whitespace() => {}
                _ => {
                    let mut end = i + c.len_utf8();
                    while let Some(&(j, d)) = chars.peek() {
                        if d.is_whitespace() || d == '(' || d == ')' {
                            break;
                        }
                        end = j + d.len_utf8();
                        chars.next();
                    }
                    let tok = text[i..end].to_ascii_lowercase();
                    match stack.last_mut() {
                        Some((parent, _)) => parent.push(Sexp::Atom(tok, line)),
                        None => return err(line, format!("unexpected token `{tok}`")),
                    }
                }
            }
        }
    }
    if let Some((_, l)) = stack.last() {
        return err(*l, "unclosed `(`");
    }
    done.ok_or(Error::Parse { line: 0, msg: "empty input".into() })
}

/// Splits `a b - t c - u d` into `[(a,t),(b,t),(c,u),(d,object)]`.
fn typed_list(items: &[Sexp]) -> Result<Vec<(String, Option<String>, usize)>> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, usize)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let Some(tok) = items[i].atom() else {
            return err(items[i].line(), "expected a name in typed list");
        };
        if tok == "-" {
            let Some(t) = items.get(i + 1).and_then(Sexp::atom) else {
                return err(items[i].line(), "expected a type after `-`");
            };
            if pending.is_empty() {
                return err(items[i].line(), "`-` without preceding names");
            }
            for (n, l) in pending.drain(..) {
                out.push((n, Some(t.to_string()), l));
            }
            i += 2;
        } else {
            pending.push((tok.to_string(), items[i].line()));
            i += 1;
        }
    }
    out.extend(pending.into_iter().map(|(n, l)| (n, None, l)));
    Ok(out)
}

fn expect_header<'a>(top: &'a Sexp, kind: &str) -> Result<(&'a [Sexp], String)> {
    let items = top.list().ok_or(Error::Parse { line: top.line(), msg: "expected a list".into() })?;
    if items.first().and_then(Sexp::atom) != Some("define") {
        return err(top.line(), "expected `(define ...)`");
    }
    let head = items.get(1).and_then(Sexp::list);
    match head {
        Some([Sexp::Atom(k, _), Sexp::Atom(n, _)]) if k == kind => Ok((&items[2..], n.clone())),
        _ => err(top.line(), format!("expected `({kind} <name>)`")),
    }
}

fn resolve_type(types: &TypeTree, name: Option<&str>, line: usize) -> Result<TypeId> {
    let n = name.unwrap_or(TypeTree::ROOT);
    types.id(n).or_else(|_| err(line, format!("unknown type `{n}`")))
}

/// Parses a domain file into its vocabulary and the action model it states.
pub fn parse_domain(src: &str) -> Result<(Domain, ActionModel)> {
    let top = parse_sexp(src)?;
    let (sections, name) = expect_header(&top, "domain")?;

    let mut type_decls = Vec::new();
    let mut pred_decls: Vec<(String, Vec<(String, Option<String>, usize)>, usize)> = Vec::new();
    let mut action_decls: Vec<&[Sexp]> = Vec::new();

    for sec in sections {
        let Some(items) = sec.list() else {
            return err(sec.line(), "expected a section");
        };
        match items.first().and_then(Sexp::atom) {
            Some(":requirements") => {
                for r in &items[1..] {
                    match r.atom() {
                        Some(":strips") | Some(":typing") => {}
                        other => {
                            return err(
                                r.line(),
                                format!("unsupported requirement `{}`", other.unwrap_or("?")),
                            )
                        }
                    }
                }
            }
            Some(":types") => {
                for (n, p, _) in typed_list(&items[1..])? {
                    type_decls.push((n, p));
                }
            }
            Some(":predicates") => {
                for p in &items[1..] {
                    let Some(pl) = p.list() else {
                        return err(p.line(), "expected a predicate declaration");
                    };
                    let Some(pname) = pl.first().and_then(Sexp::atom) else {
                        return err(p.line(), "predicate without a name");
                    };
                    pred_decls.push((pname.to_string(), typed_list(&pl[1..])?, p.line()));
                }
            }
            Some(":action") => action_decls.push(items),
            Some(other) => return err(sec.line(), format!("unsupported section `{other}`")),
            None => return err(sec.line(), "empty section"),
        }
    }

    let types = TypeTree::from_declarations(&type_decls)?;
    let mut predicates = Vec::new();
    for (pname, params, line) in &pred_decls {
        let params = params
            .iter()
            .map(|(_, t, l)| resolve_type(&types, t.as_deref(), *l))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| match e {
                Error::Parse { msg, .. } => Error::Parse { line: *line, msg },
                e => e,
            })?;
        predicates.push(Predicate { name: pname.clone(), params });
    }

    struct RawAction<'a> {
        name: String,
        params: Vec<String>,
        pre: Option<&'a Sexp>,
        eff: Option<&'a Sexp>,
    }
    let mut schemas = Vec::new();
    let mut raw = Vec::new();
    for items in action_decls {
        let line = items[0].line();
        let Some(aname) = items.get(1).and_then(Sexp::atom) else {
            return err(line, "action without a name");
        };
        let mut params = Vec::new();
        let mut ptypes = Vec::new();
        let mut pre = None;
        let mut eff = None;
        let mut i = 2;
        while i < items.len() {
            let key = items[i].atom();
            let val = items.get(i + 1);
            match (key, val) {
                (Some(":parameters"), Some(v)) => {
                    let Some(vl) = v.list() else {
                        return err(v.line(), "expected a parameter list");
                    };
                    for (n, t, l) in typed_list(vl)? {
                        params.push(n.trim_start_matches('?').to_string());
                        ptypes.push(resolve_type(&types, t.as_deref(), l)?);
                    }
                }
                (Some(":precondition"), Some(v)) => pre = Some(v),
                (Some(":effect"), Some(v)) => eff = Some(v),
                _ => return err(items[i].line(), "malformed action body"),
            }
            i += 2;
        }
        schemas.push(ActionSchema { name: aname.to_string(), params: ptypes });
        raw.push(RawAction { name: aname.to_string(), params, pre, eff });
    }

    let domain = Domain::new(name, types, predicates, schemas)?;
    let mut model = ActionModel::empty(&domain);
    for (si, ra) in raw.iter().enumerate() {
        let conj = |e: Option<&Sexp>| -> Result<Vec<(bool, BoundPredicate, usize)>> {
            let Some(e) = e else { return Ok(Vec::new()) };
            let items = e.list().ok_or(Error::Parse { line: e.line(), msg: "expected a list".into() })?;
            let lits: Vec<&Sexp> = if items.first().and_then(Sexp::atom) == Some("and") {
                items[1..].iter().collect()
            } else if items.is_empty() {
                Vec::new()
            } else {
                vec![e]
            };
            lits.into_iter()
                .map(|lit| literal(&domain, si, &ra.params, lit))
                .collect()
        };
        let mut flags = vec![Flags::default(); domain.bound_predicates(si).len()];
        for (positive, bp, line) in conj(ra.pre)? {
            if !positive {
                return err(line, format!("{}: negative preconditions are not supported", ra.name));
            }
            let b = domain.bound_id(si, &bp).expect("validated by literal");
            flags[b].pre = true;
        }
        for (positive, bp, _) in conj(ra.eff)? {
            let b = domain.bound_id(si, &bp).expect("validated by literal");
            if positive {
                flags[b].add = true;
            } else {
                flags[b].del = true;
            }
        }
        for (b, f) in flags.into_iter().enumerate() {
            model.set(si, b, f);
        }
    }
    model.validate(&domain)?;
    Ok((domain, model))
}

fn literal(
    domain: &Domain,
    schema: usize,
    params: &[String],
    lit: &Sexp,
) -> Result<(bool, BoundPredicate, usize)> {
    let line = lit.line();
    let items = lit.list().ok_or(Error::Parse { line, msg: "expected a literal".into() })?;
    let (positive, atom) = if items.first().and_then(Sexp::atom) == Some("not") {
        match items.get(1) {
            Some(a) if items.len() == 2 => (false, a),
            _ => return err(line, "malformed `not`"),
        }
    } else {
        (true, lit)
    };
    let aitems = atom.list().ok_or(Error::Parse { line, msg: "expected an atom".into() })?;
    let Some(pname) = aitems.first().and_then(Sexp::atom) else {
        return err(line, "atom without a predicate");
    };
    let Some(pi) = domain.predicate_id(pname) else {
        return err(line, format!("unknown predicate `{pname}`"));
    };
    let mut binding = Vec::new();
    for a in &aitems[1..] {
        let Some(v) = a.atom() else {
            return err(line, "nested term in atom");
        };
        let v = v.trim_start_matches('?');
        let Some(j) = params.iter().position(|p| p == v) else {
            return err(line, format!("`{v}` is not a parameter of the action"));
        };
        binding.push(j);
    }
    let bp = BoundPredicate { predicate: pi, binding: ParamBinding(binding) };
    if domain.bound_id(schema, &bp).is_none() {
        return err(
            line,
            format!("atom `{pname}` does not bind injectively with matching types"),
        );
    }
    Ok((positive, bp, line))
}

/// Parses a problem file: objects and initial facts. Goals are ignored.
pub fn parse_problem(src: &str, domain: &Domain) -> Result<Instance> {
    let top = parse_sexp(src)?;
    let (sections, name) = expect_header(&top, "problem")?;
    let mut objects = Vec::new();
    let mut init_src: Vec<&Sexp> = Vec::new();
    for sec in sections {
        let Some(items) = sec.list() else {
            return err(sec.line(), "expected a section");
        };
        match items.first().and_then(Sexp::atom) {
            Some(":domain") => {
                let d = items.get(1).and_then(Sexp::atom).unwrap_or("");
                if d != domain.name {
                    return err(sec.line(), format!("problem is for domain `{d}`, not `{}`", domain.name));
                }
            }
            Some(":objects") => {
                for (n, t, l) in typed_list(&items[1..])? {
                    objects.push((n, resolve_type(&domain.types, t.as_deref(), l)?));
                }
            }
            Some(":init") => init_src.extend(items[1..].iter()),
            Some(":goal") => {}
            Some(other) => return err(sec.line(), format!("unsupported section `{other}`")),
            None => return err(sec.line(), "empty section"),
        }
    }
    let mut inst = Instance::new(name, domain, objects)?;
    for fact in init_src {
        let line = fact.line();
        let items = fact.list().ok_or(Error::Parse { line, msg: "expected a fact".into() })?;
        let Some(pname) = items.first().and_then(Sexp::atom) else {
            return err(line, "fact without a predicate");
        };
        let Some(pi) = domain.predicate_id(pname) else {
            return err(line, format!("unknown predicate `{pname}`"));
        };
        let args = items[1..]
            .iter()
            .map(|a| {
                a.atom()
                    .and_then(|o| inst.object_id(o))
                    .ok_or(Error::Parse { line, msg: "unknown object in fact".into() })
            })
            .collect::<Result<Vec<_>>>()?;
        inst.init.push((pi, args));
    }
    Ok(inst)
}

fn var(j: usize) -> String {
    let mut s = String::from("?");
    let mut n = j;
    loop {
        s.insert(1, (b'a' + (n % 26) as u8) as char);
        if n < 26 {
            break;
        }
        n = n / 26 - 1;
    }
    s
}

fn typed_params(types: &TypeTree, params: &[TypeId]) -> String {
    params
        .iter()
        .enumerate()
        .map(|(j, &t)| format!("{} - {}", var(j), types.name(t)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Deterministic pretty-printer; output parses back to an equal domain and
/// model.
pub fn write_domain(domain: &Domain, model: &ActionModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (domain {})", domain.name);
    let _ = writeln!(out, "  (:requirements :strips :typing)");
    let mut groups: Vec<(TypeId, Vec<&str>)> = Vec::new();
    for (id, name) in domain.types.declared() {
        let parent = domain.types.parent(id).unwrap_or(0);
        match groups.iter_mut().find(|(p, _)| *p == parent) {
            Some((_, names)) => names.push(name),
            None => groups.push((parent, vec![name])),
        }
    }
    if groups.is_empty() {
        let _ = writeln!(out, "  (:types object)");
    } else {
        let _ = writeln!(out, "  (:types");
        for (parent, names) in &groups {
            let _ = writeln!(out, "    {} - {}", names.join(" "), domain.types.name(*parent));
        }
        let _ = writeln!(out, "  )");
    }
    let _ = writeln!(out, "  (:predicates");
    for p in &domain.predicates {
        let ps = typed_params(&domain.types, &p.params);
        if ps.is_empty() {
            let _ = writeln!(out, "    ({})", p.name);
        } else {
            let _ = writeln!(out, "    ({} {})", p.name, ps);
        }
    }
    let _ = writeln!(out, "  )");
    for (si, s) in domain.schemas.iter().enumerate() {
        let atom = |b: usize| {
            let bp = &domain.bound_predicates(si)[b];
            let mut a = format!("({}", domain.predicates[bp.predicate].name);
            for &j in &bp.binding.0 {
                a.push(' ');
                a.push_str(&var(j));
            }
            a.push(')');
            a
        };
        let flags = model.schema_flags(si);
        let pre: Vec<String> = (0..flags.len()).filter(|&b| flags[b].pre).map(atom).collect();
        let mut eff: Vec<String> = Vec::new();
        for (b, f) in flags.iter().enumerate() {
            if f.add {
                eff.push(atom(b));
            }
            if f.del {
                eff.push(format!("(not {})", atom(b)));
            }
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "  (:action {}", s.name);
        let _ = writeln!(out, "    :parameters ({})", typed_params(&domain.types, &s.params));
        let _ = writeln!(out, "    :precondition (and {})", pre.join(" "));
        let _ = writeln!(out, "    :effect (and {}))", eff.join(" "));
    }
    out.push_str(")\n");
    out
}
