"""Smoke test for the snowglyph extension module.

Run after `cargo build --release -p snowglyph-py --features extension-module`:

    python3 python/smoke_test.py

If `snowglyph` is not importable (for example it was not installed with
maturin), the freshly built shared library under target/ is used.
"""
import json
import math
import os
import shutil
import sys
import tempfile
import xml.etree.ElementTree as ET

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def import_snowglyph():
    try:
        import snowglyph  # noqa: F401
        return snowglyph
    except ImportError:
        pass
    for profile in ("release", "debug"):
        lib = os.path.join(ROOT, "target", profile, "libsnowglyph.so")
        if os.path.exists(lib):
            tmp = tempfile.mkdtemp()
            shutil.copy(lib, os.path.join(tmp, "snowglyph.so"))
            sys.path.insert(0, tmp)
            import snowglyph
            return snowglyph
    sys.exit("snowglyph not found; build crates/python with --features extension-module")


sg = import_snowglyph()

count = sg.parse_count_field("  Several ")
assert count["kind"] == "ordinal" and count["label"] == "several", count
assert sg.parse_count_field("7") == {"kind": "numeric", "n": 7}
try:
    sg.parse_count_field("a few")
except ValueError:
    pass
else:
    raise AssertionError("unparseable count accepted")

color = sg.count_to_color("several")
assert color["family"] == "ordinal-green", color
assert abs(color["darkness"] - math.log(6.5) / math.log(101)) < 1e-9, color
assert color["hex"].startswith("#") and len(color["hex"]) == 7

members, enclosing = sg.pack_circles([8.0, 11.3, 8.0, 16.0])
for i, a in enumerate(members):
    assert math.hypot(a[0] - enclosing[0], a[1] - enclosing[1]) + a[2] <= enclosing[2] + 1e-9
    for b in members[i + 1:]:
        assert math.hypot(a[0] - b[0], a[1] - b[1]) >= a[2] + b[2] - 1e-9
assert sg.min_enclosing_circle(members) == enclosing or all(
    abs(x - y) < 1e-9 for x, y in zip(sg.min_enclosing_circle(members), enclosing)
)
cx, cy = sg.polygon_centroid([(0, 0), (4, 0), (4, 2), (0, 2)])
assert abs(cx - 2) < 1e-12 and abs(cy - 1) < 1e-12

ds = sg.generate_synthetic(seed=42)
again = sg.generate_synthetic(seed=42)
assert ds.reports_jsonl() == again.reports_jsonl()
ids = ds.report_ids()
assert len(ds) == len(ids) > 0

views = ds.view_models()
timeline_ids = sorted(m["report_id"] for b in views["timeline"]["bins"] for m in b["glyph"]["members"])
assert timeline_ids == sorted(ids)

session = sg.Session("py", ds.dataset_id)
assert session.apply_action({"type": "set", "ids": ids[:3] + ["ghost"]}, ds) == (1, 1)
assert session.apply_action(json.dumps({"type": "remove", "ids": ids[:1]}), ds) == (2, 0)
assert session.selected == sorted(ids[1:3])
lit = ds.view_models(session=session)
flagged = sorted(
    m["report_id"]
    for b in lit["timeline"]["bins"]
    for m in b["glyph"]["members"]
    if m["highlighted"]
)
assert flagged == session.selected

tip = ds.tooltip(ids[0])
assert tip["report"]["report_id"] == ids[0] and tip["count_display"]
try:
    ds.tooltip("nope")
except KeyError:
    pass
else:
    raise AssertionError("unknown report id accepted")

summary = ds.weather_summary(24)
assert len(summary["stations"]) == 5, summary.keys()

for view in ("timeline", "matrix", "map", "elevation", "aspect"):
    ET.fromstring(ds.render_svg(view, session=session))

with tempfile.TemporaryDirectory() as tmp:
    ds.save(tmp)
    loaded = sg.Dataset.load(tmp, ds.dataset_id)
    assert loaded.reports_jsonl() == ds.reports_jsonl()
    log = os.path.join(tmp, "py.jsonl")
    session.write_log(log)
    replayed = sg.Session.read_log(log, loaded)
    assert replayed.selected == session.selected and replayed.version == 2

fresh = sg.Dataset("fresh")
has_errors, diags = fresh.ingest(reports_jsonl=ds.reports_jsonl().splitlines()[0] + "\n{bad\n")
assert has_errors and len(fresh) == 1, diags

print("snowglyph smoke test ok:", len(ids), "reports")
