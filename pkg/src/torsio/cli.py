"""Command-line entry point.

    torsio invariant --manifold S3 --seeds 10
    torsio verify --suite complex-identities
    torsio glue --manifold a.json --manifold2 b.json --map map.json --out glued.json
    torsio glue --manifold S2xI --map shift.json --self-glue
    torsio transport --manifold a.json --manifold2 b.json --map map.json --out b_moved.json

Exit codes: 0 success, 2 unreadable input, 3 geometry failure or incompatible
gluing, 4 tolerance breach or failed check.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import triangulation as tri
from .complex import build_complex, evaluate_invariant, theorem1_residuals
from .errors import (Degenerate, DegenerateTetrahedron, GeneralPositionFailure, IncompatibleBoundary,
                     MissingInnerVertices, NonManifold, NonOrientable, PlacementMismatch, RankDeficient,
                     SingularPlanMinor, TorsioError, ZeroLength)
from .geometry import (TET_EDGES, Placement, check_general_position, coordinates_from_lengths, d_length_d_coords,
                       dihedral_angle, random_placement, tetra_angles_from_lengths)
from .gluing import (GluingFixture, GluingMap, ball_pair_fixture, check_composition, check_placements, glue,
                     self_glue_fixture, self_glue_folded, solid_torus_pair_fixture, transport_placement)
from .triangulation import BUILTIN_NAMES, Triangulation

EXIT_OK, EXIT_PARSE, EXIT_GEOMETRY, EXIT_TOLERANCE = 0, 2, 3, 4

GEOMETRY_ERRORS = (GeneralPositionFailure, DegenerateTetrahedron, ZeroLength, RankDeficient, SingularPlanMinor,
                   MissingInnerVertices, IncompatibleBoundary, PlacementMismatch, NonManifold, NonOrientable,
                   Degenerate)


class ParseFailure(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    manifold: str | None = None
    manifold2: str | None = None
    map_path: str | None = None
    seed: int = 0
    seeds: int = 1
    tolerance: float = 1e-6
    suite: str | None = None
    out: str | None = None
    self_glue: bool = False

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ParseFailure("--tolerance must be positive")
        if self.seeds < 1:
            raise ParseFailure("--seeds must be at least 1")


# ----------------------------------------------------------------------------
# input


def load_manifold(spec: str) -> tuple[Triangulation, dict | None]:
    """A builtin name or a JSON file with ``tetrahedra`` and optional ``coordinates``."""
    if spec in BUILTIN_NAMES:
        return tri.builtin(spec), None
    path = Path(spec)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseFailure(f"cannot read {spec}: {exc}") from exc
    try:
        return tri.loads(text)
    except (json.JSONDecodeError, ValueError, TypeError, KeyError) as exc:
        raise ParseFailure(f"{spec}: {exc}") from exc


def load_map(spec: str) -> GluingMap:
    try:
        return GluingMap.from_json(Path(spec).read_text())
    except OSError as exc:
        raise ParseFailure(f"cannot read {spec}: {exc}") from exc
    except (json.JSONDecodeError, ValueError, TypeError, KeyError) as exc:
        raise ParseFailure(f"{spec}: {exc}") from exc


def placement_for(t: Triangulation, coords: dict | None, seed: int, fixed: dict | None = None) -> Placement:
    """File coordinates win; missing vertices are drawn from ``seed``."""
    given = dict(fixed or {})
    if coords:
        given.update(coords)
    if given and all(v in given for v in t.vertices):
        p = Placement({v: tuple(given[v]) for v in t.vertices}, seed)
        check_general_position(t, p)
        return p
    return random_placement(t, seed, fixed=given or None)


# ----------------------------------------------------------------------------
# reports


def _rel_spread(values: list[float]) -> float:
    if not values:
        return 0.0
    ref = max(abs(v) for v in values)
    if ref == 0.0:
        return 0.0
    return (max(values) - min(values)) / ref


def print_table(rows: list[tuple], header: tuple) -> None:
    cells = [tuple(str(c) for c in header)] + [tuple(_fmt(c) for c in r) for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    for k, r in enumerate(cells):
        print("  ".join(c.ljust(w) for c, w in zip(r, widths)))
        if k == 0:
            print("  ".join("-" * w for w in widths))


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, indent=1, sort_keys=True, default=_json_default)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


# ----------------------------------------------------------------------------
# invariant


def cmd_invariant(cfg: RunConfig) -> tuple[dict, int]:
    from .grassmann import generating_data

    if not cfg.manifold:
        raise ParseFailure("--manifold is required")
    t, coords = load_manifold(cfg.manifold)
    seeds = [cfg.seed + k for k in range(cfg.seeds)]
    report: dict = {"manifold": t.summary(), "seeds": seeds, "tolerance": cfg.tolerance}
    rows = []
    if t.is_closed:
        values = []
        for s in seeds:
            r = evaluate_invariant(t, placement_for(t, coords, s))
            values.append(r.value)
            rows.append((s, r.value, r.f3_ratio))
        report["kind"] = "scalar"
        report["invariant"] = values[0]
        report["per_seed"] = values
        report["max_relative_spread"] = _rel_spread(values)
    else:
        # the invariant depends on the boundary geometry, so every seed shares it
        p0 = placement_for(t, coords, seeds[0])
        fixed = {v: p0.coords[v] for v in t.boundary_vertices}
        first = None
        spreads = []
        per_seed = []
        for s in seeds:
            p = p0 if s == seeds[0] else placement_for(t, None, s, fixed)
            el = generating_data(t, p).element
            if first is None:
                first = el
            scale = max(first.max_abs(), el.max_abs(), 1e-300)
            spreads.append((el - first).max_abs() / scale)
            per_seed.append(el.constant())
            rows.append((s, el.constant(), len(el.terms)))
        assert first is not None
        report["kind"] = "scalar" if not first.registry.names else "generating-function"
        report["invariant"] = first.constant() if report["kind"] == "scalar" else first.to_json()
        report["per_seed"] = per_seed
        report["max_relative_spread"] = max(spreads)
    print_table(rows, ("seed", "value", "f3 ratio" if t.is_closed else "terms"))
    print(f"max relative spread {report['max_relative_spread']:.3g}")
    ok = report["max_relative_spread"] <= cfg.tolerance
    report["pass"] = ok
    return report, EXIT_OK if ok else EXIT_TOLERANCE


# ----------------------------------------------------------------------------
# verification suites


@dataclass
class Check:
    name: str
    measured: float
    bound: float
    passed: bool
    note: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "measured": self.measured, "bound": self.bound,
                "pass": self.passed, "note": self.note}


def suite_complex_identities(cfg: RunConfig) -> list[Check]:
    checks = []
    bound = 1e-8
    for name in BUILTIN_NAMES:
        t = tri.builtin(name)
        worst = 0.0
        for k in range(cfg.seeds):
            c = build_complex(t, random_placement(t, cfg.seed + k), sway_component=0 if t.m else None)
            worst = max(worst, *theorem1_residuals(c))
        checks.append(Check(f"{name} f(k+1) f(k)", worst, bound, worst <= bound))
    return checks


def suite_gluing(cfg: RunConfig) -> list[Check]:
    checks = []
    for make in (ball_pair_fixture, solid_torus_pair_fixture):
        for k in range(cfg.seeds):
            fx = make(cfg.seed + k)
            r = check_composition(fx)
            checks.append(Check(f"{fx.name} seed {cfg.seed + k}", r.rel_error, cfg.tolerance,
                                r.rel_error <= cfg.tolerance, f"composed {r.composed:.6g} direct {r.direct:.6g}"))
    return checks


def suite_zero_lemmas(cfg: RunConfig) -> list[Check]:
    checks = []
    bound = 1e-8
    for name in ("S2xI", "T2xI"):
        for k in range(cfg.seeds):
            fx = self_glue_fixture(name, cfg.seed + k)
            r = self_glue_folded(fx.m1, fx.p1, fx.gmap)
            rel = abs(r.value) / r.scale if r.scale else abs(r.value)
            glued = glue(fx.m1, None, fx.gmap, fx.p1)
            direct = evaluate_invariant(glued.triangulation, glued.placement)  # type: ignore[arg-type]
            checks.append(Check(f"{name} self-glue seed {cfg.seed + k}", rel, bound,
                                rel <= bound and direct.is_zero,
                                f"value {r.value:.6g} glued f3 ratio {direct.f3_ratio:.3g}"))
    return checks


def _richardson(f: Callable[[float], np.ndarray], h: float) -> np.ndarray:
    d1 = (f(h) - f(-h)) / (2 * h)
    d2 = (f(h / 2) - f(-h / 2)) / h
    return (4 * d2 - d1) / 3


def derivative_errors(count: int, seed: int) -> tuple[float, float]:
    """Worst relative error of the length and angle derivatives against finite differences."""
    rng = np.random.default_rng(seed)
    worst_len = worst_ang = 0.0
    done = 0
    while done < count:
        x = rng.random((4, 3))
        if abs(np.linalg.det(x[1:] - x[0])) < 1e-2:
            continue
        done += 1
        p = Placement({k: tuple(x[k]) for k in range(4)})
        for a, b in TET_EDGES:
            grad = d_length_d_coords((a, b), p)
            for v in (a, b):
                for c in range(3):
                    def f(h, v=v, c=c):
                        y = x.copy()
                        y[v, c] += h
                        return np.array(np.linalg.norm(y[a] - y[b]))
                    fd = float(_richardson(f, 1e-3))
                    worst_len = max(worst_len, abs(fd - grad[(v, c)]) / max(abs(fd), 1e-3))
        lengths = np.array([np.linalg.norm(x[a] - x[b]) for a, b in TET_EDGES])
        _, J = tetra_angles_from_lengths(lengths)

        def angles(dl, j):
            y = coordinates_from_lengths(lengths + dl * np.eye(6)[j])
            return np.array([dihedral_angle(y[a], y[b], *[y[k] for k in range(4) if k not in (a, b)])
                             for a, b in TET_EDGES])
        scale = np.abs(J).max()
        for j in range(6):
            fd = _richardson(lambda h: angles(h, j), 1e-5)
            worst_ang = max(worst_ang, float(np.abs(fd - J[:, j]).max() / scale))
    return worst_len, worst_ang


def suite_derivatives(cfg: RunConfig) -> list[Check]:
    n = max(100, cfg.seeds)
    el, ea = derivative_errors(n, cfg.seed)
    return [Check(f"length gradient, {n} tetrahedra", el, 1e-6, el <= 1e-6),
            Check(f"angle jacobian, {n} tetrahedra", ea, 1e-6, ea <= 1e-6)]


SUITES: dict[str, Callable[[RunConfig], list[Check]]] = {
    "complex-identities": suite_complex_identities,
    "gluing": suite_gluing,
    "zero-lemmas": suite_zero_lemmas,
    "derivatives": suite_derivatives,
}


def cmd_verify(cfg: RunConfig) -> tuple[dict, int]:
    if cfg.suite not in SUITES:
        raise ParseFailure(f"unknown suite {cfg.suite!r}; choose from {sorted(SUITES)}")
    checks = SUITES[cfg.suite](cfg)
    print_table([(c.name, c.measured, c.bound, "PASS" if c.passed else "FAIL") for c in checks],
                ("check", "measured", "bound", "result"))
    ok = all(c.passed for c in checks)
    report = {"suite": cfg.suite, "seed": cfg.seed, "seeds": cfg.seeds, "pass": ok,
              "checks": [c.to_dict() for c in checks]}
    return report, EXIT_OK if ok else EXIT_TOLERANCE


# ----------------------------------------------------------------------------
# gluing


def _with_inner_vertex(t: Triangulation, p: Placement) -> tuple[Triangulation, Placement]:
    # a side without inner vertices would glue to a non-simplicial complex
    from .complex import subdivide_for_anchors

    if t.inner_vertices:
        return t, p
    t, p, _ = subdivide_for_anchors(t, p, needed=1)
    return t, p


def cmd_glue(cfg: RunConfig) -> tuple[dict, int]:
    if not cfg.manifold or not cfg.map_path:
        raise ParseFailure("--manifold and --map are required")
    gmap = load_map(cfg.map_path)
    t1, c1 = load_manifold(cfg.manifold)
    p1 = placement_for(t1, c1, cfg.seed)
    if cfg.self_glue or gmap.self_glue:
        gmap = GluingMap(gmap.source, gmap.target, dict(gmap.vertex_map), True)
        if not c1:
            # both layers must sit at the same place before they can be identified
            p1 = p1.with_coords({gmap.vertex_map[v]: p1.coords[v] for v in gmap.vertex_map})
        res = glue(t1, None, gmap, p1)
        folded = self_glue_folded(t1, p1, gmap)
        direct = evaluate_invariant(res.triangulation, res.placement)  # type: ignore[arg-type]
        rel = abs(folded.value) / folded.scale if folded.scale else abs(folded.value)
        zero = rel <= 1e-8
        report = {"self_glue": True, "glued": res.triangulation.summary(), "composed": folded.value,
                  "scale": folded.scale, "relative": rel, "reported_zero": zero,
                  "direct": direct.value, "direct_f3_ratio": direct.f3_ratio,
                  "folded_rank_deficiency": folded.rank_deficiency}
        print_table([("composed", folded.value), ("|composed| / scale", rel), ("direct", direct.value)],
                    ("quantity", "value"))
        _write_glued(cfg, res)
        return report, EXIT_OK
    if not cfg.manifold2:
        raise ParseFailure("--manifold2 is required unless --self-glue is given")
    t2, c2 = load_manifold(cfg.manifold2)
    fixed = {gmap.vertex_map[v]: p1.coords[v] for v in gmap.vertex_map}
    p2 = placement_for(t2, c2, cfg.seed + 1, None if c2 else fixed)
    check_placements(gmap, p1, p2)
    t1, p1 = _with_inner_vertex(t1, p1)
    t2, p2 = _with_inner_vertex(t2, p2)
    r = check_composition(GluingFixture("cli", t1, t2, gmap, p1, p2))
    res = glue(t1, t2, gmap, p1, p2)
    diff = r.composed - r.direct
    report = {"self_glue": False, "glued": res.triangulation.summary(), "composed": r.composed,
              "direct": r.direct, "difference": diff, "relative_error": r.rel_error,
              "sign_flag": r.sign_flag, "free_edges": r.free_edges, "pass": r.rel_error <= cfg.tolerance}
    print_table([("composed", r.composed), ("direct", r.direct), ("difference", diff)], ("quantity", "value"))
    _write_glued(cfg, res)
    return report, EXIT_OK if report["pass"] else EXIT_TOLERANCE


def _write_glued(cfg: RunConfig, res) -> None:
    if cfg.out:
        target = Path(cfg.out)
        target.write_text(tri.dumps(res.triangulation, res.placement.coords) + "\n")


def cmd_transport(cfg: RunConfig) -> tuple[dict, int]:
    """Move the second manifold rigidly so that its boundary matches the first one through the map."""
    if not (cfg.manifold and cfg.manifold2 and cfg.map_path):
        raise ParseFailure("--manifold, --manifold2 and --map are required")
    gmap = load_map(cfg.map_path)
    t1, c1 = load_manifold(cfg.manifold)
    t2, c2 = load_manifold(cfg.manifold2)
    p1 = placement_for(t1, c1, cfg.seed)
    p2 = placement_for(t2, c2, cfg.seed + 1)
    moved = transport_placement(p2, gmap, p1)
    text = tri.dumps(t2, moved.coords)
    if cfg.out:
        Path(cfg.out).write_text(text + "\n")
    return {"transported": True, "vertices": len(t2.vertices)}, EXIT_OK


COMMANDS = {"invariant": cmd_invariant, "verify": cmd_verify, "glue": cmd_glue, "transport": cmd_transport}


# ----------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits with 2 already; keep the message on stderr
        self.print_usage(sys.stderr)
        print(f"torsio: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_PARSE)


def build_parser() -> argparse.ArgumentParser:
    default_seed = os.environ.get("TORSIO_SEED", "0")
    ap = _Parser(prog="torsio", description="Geometric torsion invariants of triangulated 3-manifolds.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--manifold", help="builtin name or JSON file")
        sp.add_argument("--manifold2")
        sp.add_argument("--map", dest="map_path")
        sp.add_argument("--seed", type=int, default=None, help=f"default from TORSIO_SEED ({default_seed})")
        sp.add_argument("--seeds", type=int, default=1)
        sp.add_argument("--tolerance", type=float, default=1e-6)
        sp.add_argument("--suite", choices=sorted(SUITES) if name == "verify" else None)
        sp.add_argument("--out")
        sp.add_argument("--self-glue", action="store_true")
    return ap


def _default_seed() -> int:
    raw = os.environ.get("TORSIO_SEED", "0")
    try:
        return int(raw)
    except ValueError as exc:
        raise ParseFailure(f"TORSIO_SEED must be an integer, got {raw!r}") from exc


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        seed = args.seed if args.seed is not None else _default_seed()
        cfg = RunConfig(args.command, args.manifold, args.manifold2, args.map_path, seed, args.seeds,
                        args.tolerance, args.suite, args.out, args.self_glue)
        report, code = COMMANDS[args.command](cfg)
        if args.command in ("glue", "transport") and cfg.out:
            # --out holds the manifold; the report sits next to it
            emit(report, str(Path(cfg.out).with_suffix(".report.json")))
        emit(report, None if args.command in ("glue", "transport") else cfg.out)
        return code
    except ParseFailure as exc:
        print(f"torsio: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except GEOMETRY_ERRORS as exc:
        print(f"torsio: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except TorsioError as exc:
        print(f"torsio: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY


if __name__ == "__main__":
    sys.exit(main())
