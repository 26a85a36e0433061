import numpy as np
import pytest

from rwlab.field import Field, Grid, mesh, weighted_norm
from rwlab.geometry import BALL, Geometry, MediumPair
from rwlab.operator import (DIRECT_NODE_LIMIT, DIRICHLET, SOMMERFELD,
                            SolveConfig, SolverError, apply_resolvent,
                            assemble, resolvent_sweep,
                            solve_with_boundary_values)
from rwlab.oracles import GaussianBump, manufactured_pair
from rwlab.spectral import SpectralParam, branch_coefficients

FREE = Geometry(BALL, 2, MediumPair(1.0, 2.0), radius=1000.0)
FREE3 = Geometry(BALL, 3, MediumPair(1.0, 2.0), radius=1000.0)


def gaussian_source(g):
    xs = mesh(g)
    r2 = sum(np.broadcast_to(x, g.shape) ** 2 for x in xs)
    return Field(g, np.exp(-r2).astype(np.complex128))


def test_solve_config_validation():
    with pytest.raises(ValueError):
        SolveConfig(method="magic")
    with pytest.raises(ValueError):
        SolveConfig(tolerance=0.0)
    with pytest.raises(ValueError):
        SolveConfig(tolerance=0.5)
    with pytest.raises(ValueError):
        SolveConfig(max_iterations=0)
    with pytest.raises(ValueError):
        SolveConfig(closure="robin")
    with pytest.raises(ValueError):
        SolveConfig(damping=0.0)


def test_assemble_validation():
    p = SpectralParam(1.0, 0.5)
    g = Grid(3, 2.0, 16)
    with pytest.raises(ValueError):
        assemble(g, FREE, p)           # dim mismatch
    with pytest.raises(ValueError):
        assemble(Grid(2, 2.0, 16), FREE, p, closure="robin")


def test_interior_stencil_row():
    g = Grid(2, 1.0, 17)
    z = complex(2.0, 0.7)
    p = SpectralParam(2.0, 0.7)
    op = assemble(g, FREE, p, closure=DIRICHLET)
    a = op.matrix.tocsr()
    i = 8 * 17 + 8                     # center node
    row = a.getrow(i).toarray().ravel()
    h2 = g.h**2
    assert row[i] == pytest.approx(4.0 / h2 - z * 1.0, rel=1e-15)
    for j in (i - 1, i + 1, i - 17, i + 17):
        assert row[j] == pytest.approx(-1.0 / h2, rel=1e-15)
    assert np.count_nonzero(row) == 5


def test_shift_moves_only_the_diagonal():
    g = Grid(2, 2.0, 17)
    z1, z2 = complex(1.0, 0.5), complex(3.0, -0.25)
    a1 = assemble(g, FREE, SpectralParam.from_z(z1), closure=DIRICHLET).matrix
    a2 = assemble(g, FREE, SpectralParam.from_z(z2), closure=DIRICHLET).matrix
    mu = assemble(g, FREE, SpectralParam.from_z(z1), closure=DIRICHLET).mu_flat
    diff = (a1 - a2).toarray()
    want = np.diag((z2 - z1) * mu)
    assert np.max(np.abs(diff - want)) < 1e-12


@pytest.mark.parametrize("closure", [DIRICHLET, SOMMERFELD])
def test_conjugate_parameter_conjugates_the_matrix(closure):
    g = Grid(2, 2.0, 16)
    geom = Geometry(BALL, 2, MediumPair(1.0, 4.0), radius=1.0)
    plus = SpectralParam(2.0, 0.75)
    minus = SpectralParam(2.0, -0.75)
    a_plus = assemble(g, geom, plus, closure=closure).matrix.toarray()
    a_minus = assemble(g, geom, minus, closure=closure).matrix.toarray()
    assert np.array_equal(a_minus, np.conj(a_plus))


def test_sommerfeld_correction_is_diagonal_on_faces():
    g = Grid(2, 2.0, 16)
    p = SpectralParam(1.0, 0.5)
    a_s = assemble(g, FREE, p, closure=SOMMERFELD).matrix
    a_d = assemble(g, FREE, p, closure=DIRICHLET).matrix
    diff = (a_s - a_d).toarray()
    assert np.max(np.abs(diff - np.diag(np.diag(diff)))) == 0.0
    bc = branch_coefficients(p)
    k_b = complex(bc.c_a, bc.c_b)      # mu = 1 on the whole box
    corner = -2.0 * (1.0 + 1j * k_b * g.h) / g.h**2
    assert diff[0, 0] == pytest.approx(corner, rel=1e-14)
    edge = 16 * 1 + 0                  # one face only
    assert diff[edge, edge] == pytest.approx(corner / 2.0, rel=1e-14)
    interior = 16 * 8 + 8
    assert diff[interior, interior] == 0.0


def test_zero_source_short_circuits():
    g = Grid(2, 2.0, 17)
    op = assemble(g, FREE, SpectralParam(1.0, 0.5))
    zero = Field(g, np.zeros(g.shape))
    u, rep = apply_resolvent(op, zero, SolveConfig(method="direct"))
    assert np.all(u.values == 0)
    assert rep.iterations == 0 and rep.final_residual == 0.0


def test_source_grid_mismatch():
    op = assemble(Grid(2, 2.0, 17), FREE, SpectralParam(1.0, 0.5))
    f = gaussian_source(Grid(2, 2.0, 16))
    with pytest.raises(ValueError):
        apply_resolvent(op, f, SolveConfig(method="direct"))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_manufactured_solution_convergence():
    errs = {}
    for n in (65, 129):
        g = Grid(2, 6.0, n)
        p = SpectralParam(1.0, 0.5)
        u_exact, f = manufactured_pair(GaussianBump(1.0), p, FREE, g)
        op = assemble(g, FREE, p)
        u, _ = apply_resolvent(op, f, SolveConfig(method="direct"))
        diff = Field(g, u.values - u_exact.values)
        errs[n] = weighted_norm(diff, 0.0) / weighted_norm(u_exact, 0.0)
    assert errs[65] < 1.5e-2
    assert errs[129] < 4e-3
    assert errs[65] / errs[129] > 3.0


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_direct_and_iterative_agree():
    g = Grid(2, 6.0, 65)
    p = SpectralParam(1.0, 0.5)
    f = gaussian_source(g)
    op = assemble(g, FREE, p)
    ud, _ = apply_resolvent(op, f, SolveConfig(method="direct"))
    ui, rep = apply_resolvent(op, f, SolveConfig(method="iterative",
                                                 tolerance=1e-10,
                                                 max_iterations=400))
    rel = weighted_norm(Field(g, ud.values - ui.values), 0.0) \
        / weighted_norm(ud, 0.0)
    assert rel < 1e-6
    assert rep.iterations > 0
    assert rep.final_residual < 1e-10


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_direct_node_limit():
    g = Grid(3, 2.0, 64)               # 262144 nodes, over the cap
    assert g.n_nodes > DIRECT_NODE_LIMIT
    op = assemble(g, FREE3, SpectralParam(1.0, 0.5))
    f = gaussian_source(g)
    with pytest.raises(SolverError):
        apply_resolvent(op, f, SolveConfig(method="direct"))


def test_truncation_warning_when_damping_is_weak():
    g = Grid(2, 2.0, 17)
    op = assemble(g, FREE, SpectralParam(1.0, 1e-6))
    f = gaussian_source(g)
    with pytest.warns(RuntimeWarning, match="box damping"):
        apply_resolvent(op, f, SolveConfig(method="direct"))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_resolvent_sweep_isolates_failures():
    g = Grid(2, 6.0, 33)
    f = gaussian_source(g)
    params = [SpectralParam(1.0, 32.0), SpectralParam(1.0, 1e-9)]
    cfg = SolveConfig(method="iterative", tolerance=1e-8, max_iterations=7)
    entries = resolvent_sweep(g, FREE, params, f, cfg)
    assert [e.param for e in entries] == params
    assert entries[0].u is not None and entries[0].error == ""
    assert entries[1].u is None and entries[1].report is None
    assert entries[1].error != ""


def test_boundary_value_solve_reproduces_affine_data():
    g = Grid(2, 1.0, 17)
    z = complex(2.0, 1.0)
    p = SpectralParam.from_z(z)
    op = assemble(g, FREE, p, closure=DIRICHLET)
    xs = mesh(g)
    u_exact = (0.3 + 0.7 * xs[0] - 0.2 * xs[1]).astype(np.complex128)
    u_exact = np.broadcast_to(u_exact, g.shape).copy()
    # the affine profile has zero discrete Laplacian, so A u = -z mu u
    f = Field(g, -z * u_exact)
    trace = Field(g, u_exact)
    u, rep = solve_with_boundary_values(op, f, trace)
    assert np.max(np.abs(u.values - u_exact)) < 1e-10
    assert rep.final_residual < 1e-12


def test_boundary_value_solve_respects_node_limit():
    g = Grid(3, 2.0, 64)
    op = assemble(g, FREE3, SpectralParam(1.0, 0.5), closure=DIRICHLET)
    f = gaussian_source(g)
    with pytest.raises(SolverError):
        solve_with_boundary_values(op, f, f)
