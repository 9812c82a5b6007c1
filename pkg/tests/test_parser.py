import numpy as np
import pytest

from mpcc_newton.errors import DimensionError, ProblemFormatError
from mpcc_newton.model import PrimalDual
from mpcc_newton.parser import ProblemFileParser, load_lq_problem, load_point
from mpcc_newton.problem import LinearQuadraticProblem, obstacle, toy
from mpcc_newton.residual import assemble_F
from mpcc_newton.serializer import dump_lq_problem, dump_point

TOY_TEXT = """
name: toy-file
n: 3
l: 2
m: 0
p: 1
Q:
  - [0.1, 0, 0]
  - [0, 0.1, 0]
  - [0, 0, 0.1]
c: [1, 1, -1]
c0: 0
g:
  A:
    - [-4, 0, 1]
    - [0, -4, 1]
  b: [0, 0]
G:
  A: [[1, 0, 0]]
  b: [0]
H:
  A: [[0, 1, 0]]
  b: [0]
"""


def test_parse_toy_file():
    prob = ProblemFileParser().parse(TOY_TEXT)
    ref = toy(0.1)
    assert prob.name == "toy-file"
    assert prob.dims == ref.dims
    assert prob.is_linear_quadratic
    rng = np.random.default_rng(0)
    for x in rng.normal(size=(20, 3)):
        assert prob.f(x) == pytest.approx(ref.f(x))
        for block in ("g", "h", "G", "H"):
            assert np.array_equal(prob.constraint(block, x), ref.constraint(block, x))


def test_exponent_literals_are_numbers():
    text = TOY_TEXT.replace("c0: 0", "c0: 1e-5")
    assert ProblemFileParser().parse(text).c0 == 1e-5


def test_json_is_accepted():
    text = ('{"n": 1, "l": 0, "m": 0, "p": 0, "Q": [[2.0]], "c": [-1.0], "c0": 0.25}')
    prob = ProblemFileParser().parse(text)
    assert prob.dims == (1, 0, 0, 0)
    assert prob.f(np.array([0.5])) == pytest.approx(0.0)


def test_missing_dimension_reports_field():
    with pytest.raises(ProblemFormatError) as err:
        ProblemFileParser("toy.yaml").parse(TOY_TEXT.replace("l: 2\n", ""))
    assert err.value.field == "l"
    assert str(err.value).startswith("toy.yaml, field 'l'")


def test_bad_number_reports_line():
    text = TOY_TEXT.replace("c: [1, 1, -1]", "c: [1, one, -1]")
    with pytest.raises(ProblemFormatError) as err:
        ProblemFileParser("toy.yaml").parse(text)
    assert err.value.field == "c"
    assert err.value.line == 11
    assert "line 11" in str(err.value)


def test_invalid_yaml():
    with pytest.raises(ProblemFormatError) as err:
        ProblemFileParser("broken.yaml").parse("n: [1, 2\nl: 0\n")
    assert err.value.line is not None


def test_wrong_shapes_raise_dimension_error():
    with pytest.raises(DimensionError):
        ProblemFileParser().parse(TOY_TEXT.replace("c: [1, 1, -1]", "c: [1, 1]"))
    with pytest.raises(DimensionError):
        ProblemFileParser().parse(TOY_TEXT.replace("  b: [0, 0]", "  b: [0]"))


def test_nonsymmetric_Q_is_symmetrized(caplog):
    text = TOY_TEXT.replace("  - [0.1, 0, 0]\n", "  - [0.1, 0.2, 0]\n")
    with caplog.at_level("WARNING"):
        prob = ProblemFileParser().parse(text)
    assert prob.symmetrized
    assert np.array_equal(prob.Q, prob.Q.T)
    assert prob.Q[0, 1] == pytest.approx(0.1)
    assert "not symmetric" in caplog.text


def test_parse_point_accepts_lambda_alias():
    z = ProblemFileParser().parse_point("x: [0, 0, 0]\nlambda: [0.75, 0.25]\nmu: [2]\nnu: [0]\n", (3, 2, 0, 1))
    assert np.array_equal(z.lam, [0.75, 0.25])
    assert z.eta.size == 0


def test_parse_point_rejects_unknown_fields_and_dims():
    with pytest.raises(ProblemFormatError):
        ProblemFileParser().parse_point("x: [0]\nkappa: [1]\n")
    with pytest.raises(DimensionError):
        ProblemFileParser().parse_point("x: [0, 0]\n", (3, 2, 0, 1))


def test_toy_round_trip(tmp_path):
    path = tmp_path / "toy.yaml"
    path.write_text(dump_lq_problem(toy(0.1)), encoding="utf-8")
    prob = load_lq_problem(str(path))
    ref = toy(0.1)
    assert prob.name == "toy"
    assert np.array_equal(prob.reference_x, ref.reference_x)
    rng = np.random.default_rng(1)
    for x in rng.uniform(-5.0, 5.0, size=(100, 3)):
        assert prob.f(x) == ref.f(x)
        for block in ("g", "G", "H"):
            assert np.array_equal(prob.constraint(block, x), ref.constraint(block, x))


def test_obstacle_export_reproduces_residual(tmp_path):
    ref = obstacle(4)
    path = tmp_path / "obstacle.yaml"
    path.write_text(dump_lq_problem(ref), encoding="utf-8")
    prob = load_lq_problem(str(path))
    rng = np.random.default_rng(2)
    for _ in range(20):
        z = PrimalDual.from_vector(rng.uniform(-3.0, 3.0, 12 + 4 + 4 + 8), ref.dims)
        assert np.array_equal(assemble_F(prob, z).F, assemble_F(ref, z).F)


def test_point_round_trip(tmp_path):
    z = PrimalDual([0.1, 1.0 / 3.0], [], [np.pi], [-2.5], [1e-17])
    path = tmp_path / "z.yaml"
    path.write_text(dump_point(z), encoding="utf-8")
    back = load_point(str(path), (2, 0, 1, 1))
    assert np.array_equal(back.stack(), z.stack())


@pytest.mark.parametrize("name", ["yes", "1e-3", "null", "a: b", "[x]", "toy #2"])
def test_problem_name_round_trip(tmp_path, name):
    ref = toy(0.1)
    prob = LinearQuadraticProblem(ref.Q, ref.c, ref.c0, ref.blocks, name=name)
    path = tmp_path / "named.yaml"
    path.write_text(dump_lq_problem(prob), encoding="utf-8")
    assert load_lq_problem(str(path)).name == name
