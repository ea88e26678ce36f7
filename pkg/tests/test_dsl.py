import pytest
from hypothesis import given
from hypothesis import strategies as st

from confsym import expr as E
from confsym.dsl import (
    AsymmetricMetric,
    DegenerateMetric,
    DimensionTooSmall,
    DSLSyntaxError,
    UndeclaredSymbol,
    parse_expr,
    parse_geometry,
    print_geometry,
)
from confsym.tensor import christoffel

FLAT = """
manifold { dim = 3; coords = [x1, x2, x3]; signature = "+++"; }
metric g { g[x1,x1] = 1; g[x2,x2] = 1; g[3,3] = 1; }
"""

DIPIRRO = """
manifold { dim = 3; coords = [x1, x2, x3]; }
functions { a(x1, x2); b(x1, x2); gamma(x1, x2); c(x3); }
metric g {
  g[x1,x1] = 2*(gamma + c)/a;
  g[x2,x2] = 2*(gamma + c)/b;
  g[x3,x3] = 2*(gamma + c);
}
symbol K degree 2 { K[x1,x1] = c*a/(gamma + c); K[x3,x3] = -gamma/(gamma + c); }
scalar f = x1^2 + 1/2;
"""


def test_flat_has_zero_christoffel():
    spec = parse_geometry(FLAT)
    assert spec.dim == 3 and spec.coords == ("x1", "x2", "x3")
    assert christoffel(spec.geometry()).is_zero()


def test_dipirro_accepted():
    spec = parse_geometry(DIPIRRO)
    a, c, gamma = (E.function(n, spec.functions[n]) for n in ("a", "c", "gamma"))
    assert (spec.metric[0][0] - (gamma + c) * 2 / a).is_zero()
    assert spec.symbols["K"].degree == 2
    assert (spec.scalars["f"] - (E.coord("x1") ** 2 + E.const(1) / 2)).is_zero()


def test_undeclared_symbol_position():
    src = "manifold { dim = 3; coords = [x1, x2, x3]; }\nmetric g {\n  g[x1,x1] = w(x1);\n}\n"
    with pytest.raises(UndeclaredSymbol) as info:
        parse_geometry(src)
    assert info.value.line == 3 and info.value.col == 14


@pytest.mark.parametrize(
    "src, exc",
    [
        ("manifold { dim = 2; coords = [x, y]; } metric g { g[x,x] = 1; g[y,y] = 1; }", DimensionTooSmall),
        ("manifold { dim = 3; coords = [x1, x2, x3]; } metric g { g[1,1] = 1; g[2,2] = 1; }", DegenerateMetric),
        ("manifold { dim = 3; coords = [x1, x2, x3]; } metric g { g[1,1] = 1; g[1,2] = 1; g[2,1] = 2; g[2,2] = 1; g[3,3] = 1; }", AsymmetricMetric),
        ("manifold { dim = 3; coords = [x1, x2, x3]; } metric g { g[1,1] = 1 +; }", DSLSyntaxError),
        ("metric g { g[1,1] = 1; }", DSLSyntaxError),
    ],
)
def test_validation_errors(src, exc):
    with pytest.raises(exc):
        parse_geometry(src)


def test_parse_expr_examples():
    spec = parse_geometry(DIPIRRO)
    e = parse_expr("c(x3)*a(x1,x2)/(gamma(x1,x2)+c(x3))", spec)
    a, c, gamma = (E.function(n, spec.functions[n]) for n in ("a", "c", "gamma"))
    assert (e - c * a / (gamma + c)).is_zero()
    assert (parse_expr("x1^2 + 1/2", spec) - E.coord("x1") ** 2 - E.const(1) / 2).is_zero()
    spec2 = parse_geometry(
        "manifold { dim = 3; coords = [x1, x2, x3]; } functions { u(x2); v(x3); } metric g { g[1,1]=1; g[2,2]=1; g[3,3]=1; }"
    )
    lg = parse_expr("log(u(x2)+v(x3))", spec2)
    (gen,) = lg.generators()
    assert isinstance(gen, E.Atom) and gen.kind == "log"


def test_printed_derivatives_parse_back():
    spec = parse_geometry(DIPIRRO)
    e = E.diff(parse_expr("log(a + gamma)*exp(x1*x2)", spec), "x1", "x2")
    assert (parse_expr(e.to_str(), spec) - e).is_zero()


def test_print_parse_roundtrip_fixtures():
    from confsym import load_fixture

    for name in ("dipirro", "stackel", "minkowski_reduction", "lemma_product", "conformally_flat3"):
        spec = load_fixture(name)
        again = parse_geometry(print_geometry(spec))
        assert again.coords == spec.coords
        assert all((p - q).is_zero() for r1, r2 in zip(spec.metric, again.metric) for p, q in zip(r1, r2))
        assert set(again.symbols) == set(spec.symbols)


@given(
    st.lists(st.integers(-5, 5), min_size=3, max_size=3),
    st.integers(1, 4),
)
def test_generated_diagonal_metrics_roundtrip(coeffs, k):
    entries = ["%d + x%d^%d" % (abs(c) + 1, i + 1, 2 * k) for i, c in enumerate(coeffs)]
    src = "manifold { dim = 3; coords = [x1, x2, x3]; } metric g { %s }" % " ".join(
        "g[%d,%d] = %s;" % (i + 1, i + 1, e) for i, e in enumerate(entries)
    )
    spec = parse_geometry(src)
    again = parse_geometry(print_geometry(spec))
    for i in range(3):
        assert (spec.metric[i][i] - again.metric[i][i]).is_zero()
