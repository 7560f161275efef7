import copy
import json
import math

import numpy as np
import pytest

from bangbang.config import ConfigError, SolverSettings, digest, load, parse
from bangbang.core import Ball, ConstraintMode, Rectangle


def base_doc():
    return {
        "domain": {"kind": "ball", "dimension": 2, "radius": 1.0},
        "materials": [
            {"label": "M1", "lambda_min": 1, "lambda_max": 1, "fraction": 0.4},
            {"label": "M2", "lambda_min": 2, "lambda_max": 2, "fraction": 0.4},
            {"label": "M3", "lambda_min": 3, "lambda_max": 3, "fraction": 0.2},
        ],
        "loads": [
            {
                "weight": 1,
                "source": {"pieces": [{"r_lo": 0, "r_hi": 0.5, "coeffs": [1]}, {"r_lo": 0.5, "r_hi": 1, "coeffs": [0]}]},
            }
        ],
    }


def test_parse_ball():
    cfg = parse(base_doc())
    assert isinstance(cfg.problem.domain, Ball)
    np.testing.assert_allclose(cfg.problem.quantities, np.array([0.4, 0.4, 0.2]) * math.pi, rtol=1e-15)
    assert cfg.solver == SolverSettings()
    assert cfg.kind == "ball"


def test_quantities():
    doc = base_doc()
    for m, q in zip(doc["materials"], (1.0, 1.0, math.pi - 2.0)):
        del m["fraction"]
        m["quantity"] = q
    cfg = parse(doc)
    assert cfg.problem.quantities[2] == pytest.approx(math.pi - 2)


def test_disk_in_rectangle():
    doc = base_doc()
    doc["domain"] = {"kind": "disk_in_rectangle", "extents": [[-1, 1], [-1, 1]], "disk": {"radius": 1}}
    doc["solver"] = {"h": 0.125}
    cfg = parse(doc)
    assert isinstance(cfg.problem.domain, Rectangle)
    assert cfg.problem.domain.disk == (0.0, 0.0, 1.0)
    assert cfg.solver.h == 0.125


@pytest.mark.parametrize(
    "edit, field",
    [
        (lambda d: d["materials"][1].pop("lambda_min"), "materials[1].lambda_min"),
        (lambda d: d["domain"].pop("radius"), "domain.radius"),
        (lambda d: d.pop("loads"), "loads"),
        (lambda d: d["materials"][0].update(lambda_min=-1), "materials[0].lambda_min"),
        (lambda d: d["loads"][0].update(weight=0), "loads[0].weight"),
        (lambda d: d.update(extra=1), "<root>"),
        (lambda d: d["domain"].update(kind="torus"), "domain.kind"),
        (lambda d: d.update(solver={"damping": 2}), "solver.damping"),
        (lambda d: d["loads"][0]["source"]["pieces"][1].update(r_lo=0.6), "loads[0].source.pieces"),
        (lambda d: d["materials"][0].update(lambda_min=5), "materials[0]"),
    ],
)
def test_errors_name_the_field(edit, field):
    doc = base_doc()
    edit(doc)
    with pytest.raises(ConfigError) as exc:
        parse(doc)
    assert str(exc.value).startswith(field)


def test_fraction_sum_exact():
    doc = base_doc()
    doc["materials"][2]["fraction"] = 0.25
    with pytest.raises(ConfigError, match=r"materials\[\*\]\.fraction"):
        parse(doc)


def test_fraction_sum_tolerance():
    doc = base_doc()
    doc["materials"][2]["fraction"] = 0.2 + 5e-10
    cfg = parse(doc)
    assert cfg.problem.quantities.sum() == pytest.approx(math.pi, rel=1e-14)


def test_mixing_rejected():
    doc = base_doc()
    del doc["materials"][1]["fraction"]
    doc["materials"][1]["quantity"] = 1.0
    with pytest.raises(ConfigError, match="mixes"):
        parse(doc)


def test_both_given_rejected():
    doc = base_doc()
    doc["materials"][1]["quantity"] = 1.0
    with pytest.raises(ConfigError, match=r"materials\[1\]"):
        parse(doc)


def test_upper_mode():
    doc = base_doc()
    doc["constraint_mode"] = "upper"
    doc["materials"][2]["fraction"] = 0.9
    cfg = parse(doc)
    assert cfg.problem.constraint.mode is ConstraintMode.UPPER
    doc["materials"][2]["fraction"] = 0.1
    with pytest.raises(ConfigError):
        parse(doc)


def test_rectangle_needs_dimension_two():
    doc = base_doc()
    doc["domain"] = {"kind": "rectangle", "dimension": 3, "extents": [[0, 1], [0, 1]]}
    with pytest.raises(ConfigError, match="domain.dimension"):
        parse(doc)


def test_ball_rejects_field_files():
    doc = base_doc()
    doc["loads"][0]["source"] = {"file": "f.csv"}
    with pytest.raises(ConfigError, match=r"loads\[0\]\.source"):
        parse(doc)


def test_digest_is_canonical():
    a = base_doc()
    b = json.loads(json.dumps(a, indent=4, sort_keys=False))
    b = dict(reversed(list(b.items())))
    assert digest(a) == digest(b)
    c = copy.deepcopy(a)
    c["materials"][0]["lambda_max"] = 1.5
    assert digest(a) != digest(c)


def test_load(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(base_doc()))
    assert load(p).digest == digest(base_doc())
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load(tmp_path / "bad.json")
    with pytest.raises(ConfigError, match="no such"):
        load(tmp_path / "missing.json")
