import numpy as np
import pytest

from ncdisint import linalg
from ncdisint.algebra import Algebra, density_state, matrix_algebra, state_from_density
from ncdisint.classical import FinProb, classical_disintegration, embed_function, embed_stoch, embed_to_algebra
from ncdisint.disintegration import (
    disintegrate,
    disintegrate_matrix_case,
    disintegrate_matrix_unitary_case,
    make_problem,
    uniqueness_check,
    verify_disintegration,
)
from ncdisint.errors import DimensionError, IllPosedProblem, InvalidMapError, InvalidStateError
from ncdisint.maps import (
    BlockMap,
    BratteliHom,
    ae_equal,
    apply,
    block_embedding,
    bratteli_to_blockmap,
    choi_residual,
    compose,
    identity_choi,
    identity_map,
    kraus_from_choi,
    KrausSet,
    maps_equal,
    trivial_unitaries,
)
from ncdisint.sampling import random_density, random_unitary, synthesize

from helpers import replace_null_rows

EPR = np.outer([1, 0, 0, 1], [1, 0, 0, 1]) / 2


def test_diag_example():
    r = disintegrate_matrix_case(np.diag([0.1, 0.3, 0.15, 0.45]), np.diag([0.25, 0.75]), 2)
    assert r.exists
    assert np.allclose(r.tau[0][0], np.diag([0.4, 0.6]), atol=1e-12)
    assert r.certificate.verification.passed


def test_epr_has_no_disintegration():
    r = disintegrate_matrix_case(EPR, np.eye(2) / 2, 2)
    assert not r.exists
    assert r.map is None and r.tau is None
    assert "reconstruction" in r.certificate.violations
    assert r.certificate.residuals["reconstruction"] == pytest.approx(0.5)


@pytest.mark.parametrize("p,n", [(1, 1), (2, 2), (3, 2), (2, 3)])
def test_product_states(rng, p, n):
    tau0, sigma0 = random_density(p, rng), random_density(n, rng)
    r = disintegrate_matrix_case(np.kron(tau0, sigma0), sigma0, p)
    assert r.exists
    assert np.allclose(r.tau[0][0], tau0, atol=1e-10)
    f = bratteli_to_blockmap(block_embedding(p, n))
    assert maps_equal(compose(r.map, f), identity_map(matrix_algebra(n)))
    assert linalg.max_abs(r.map.choi[0][0] - np.kron(r.tau[0][0].T, identity_choi(n))) < 1e-12


def test_unitary_identity_reduces(rng):
    rho = np.kron(random_density(2, rng), random_density(2, rng))
    sigma = linalg.partial_trace_left(rho, 2, 2)
    a = disintegrate_matrix_case(rho, sigma, 2)
    b = disintegrate_matrix_unitary_case(rho, sigma, 2, np.eye(4))
    assert a.exists and b.exists
    assert maps_equal(a.map, b.map)


def test_entangled_but_disintegrable(rng):
    tau, sigma = random_density(2, rng), random_density(2, rng)
    u = random_unitary(4, rng)
    rho = u @ np.kron(tau, sigma) @ u.conj().T
    # the plain embedding does not work for this rho, the conjugated one does
    with pytest.raises(IllPosedProblem):
        disintegrate_matrix_case(rho, sigma, 2)
    r = disintegrate_matrix_unitary_case(rho, sigma, 2, u)
    assert r.exists
    assert np.allclose(r.tau[0][0], tau, atol=1e-10)
    v = r.certificate.verification
    assert v.passed


def test_pure_rho_mixed_sigma_fails(rng):
    for _ in range(10):
        rho = random_density(4, rng, rank=1)
        sigma = linalg.partial_trace_left(rho, 2, 2)
        assert linalg.rank(sigma) == 2
        assert not disintegrate_matrix_case(rho, sigma, 2).exists


def test_matrix_case_errors():
    with pytest.raises(InvalidStateError):
        disintegrate_matrix_case(2 * np.eye(4) / 4, np.eye(2) / 2, 2)
    with pytest.raises(DimensionError):
        disintegrate_matrix_case(np.eye(4) / 4, np.eye(2) / 2, 3)
    with pytest.raises(IllPosedProblem):
        disintegrate_matrix_case(np.eye(4) / 4, np.diag([0.3, 0.7]), 2)
    with pytest.raises(InvalidMapError):
        disintegrate_matrix_unitary_case(np.eye(4) / 4, np.eye(2) / 2, 2, 2 * np.eye(4))


def test_general_reduces_to_matrix_case(rng):
    rho = np.kron(random_density(3, rng), random_density(2, rng))
    a = disintegrate_matrix_case(rho, linalg.partial_trace_left(rho, 3, 2), 3)
    b = disintegrate(make_problem(block_embedding(3, 2), density_state(rho)))
    assert a.exists and b.exists
    assert choi_residual(a.map, b.map) < 1e-10
    assert np.allclose(a.tau[0][0], b.tau[0][0])


def test_classical_example():
    p = FinProb([0.2, 0.3, 0.5, 0.0])
    f = [0, 0, 1, 1]
    hom = embed_function(f, 3)
    _, omega = embed_to_algebra(p)
    r = disintegrate(make_problem(hom, omega))
    assert r.exists
    q = FinProb([0.5, 0.5, 0.0])
    expected = classical_disintegration(f, p, q)
    assert np.allclose(expected.matrix[:, 0], [0.4, 0.6, 0, 0])
    assert np.allclose(expected.matrix[:, 2], [0.25] * 4)
    assert choi_residual(r.map, embed_stoch(expected)) < 1e-12
    # tau_ji is 1x1 and equals p_i / q_j on the fibre
    assert r.tau[0][1][0, 0] == pytest.approx(0.6)
    assert r.tau[2][0] is None


def test_diagonal_into_m2():
    src, tgt = Algebra((1, 1)), matrix_algebra(2)
    hom = BratteliHom(src, tgt, np.array([[1, 1]]), trivial_unitaries(tgt))
    problem = make_problem(hom, density_state(np.diag([0.3, 0.7])))
    assert np.allclose(problem.xi.weights, [0.3, 0.7])
    r = disintegrate(problem)
    assert r.exists
    x = tgt.element([[[1.0, 2.0], [3.0, 4.0]]])
    out = apply(r.map, x)
    assert [b[0, 0] for b in out.blocks] == pytest.approx([1.0, 4.0])


def test_off_diagonal_coherence_blocks_existence():
    src, tgt = Algebra((1, 1)), matrix_algebra(2)
    hom = BratteliHom(src, tgt, np.array([[1, 1]]), trivial_unitaries(tgt))
    rho = np.array([[0.5, 0.5], [0.5, 0.5]])
    r = disintegrate(make_problem(hom, density_state(rho)))
    assert not r.exists
    assert r.certificate.violations == ("reconstruction",)


def test_make_problem_checks_xi():
    hom = block_embedding(2, 2)
    omega = density_state(np.diag([0.1, 0.3, 0.15, 0.45]))
    make_problem(hom, omega, density_state(np.diag([0.25, 0.75])))
    with pytest.raises(IllPosedProblem):
        make_problem(hom, omega, density_state(np.diag([0.5, 0.5])))


def test_verify_rejects_rescaled_kraus():
    r = disintegrate_matrix_case(np.diag([0.1, 0.3, 0.15, 0.45]), np.diag([0.25, 0.75]), 2)
    ks = kraus_from_choi(r.map)
    ops = list(ks.ops[0][0])
    ops[0] = 1.01 * ops[0]
    bad = KrausSet(ks.source, ks.target, ((tuple(ops),),)).to_blockmap()
    problem = make_problem(block_embedding(2, 2), density_state(np.diag([0.1, 0.3, 0.15, 0.45])))
    good = verify_disintegration(problem, r.map)
    worse = verify_disintegration(problem, bad)
    assert good.passed and not worse.passed
    assert max(worse.unitality, worse.state) > 1e-8


def _null_instance(rng):
    while True:
        inst = synthesize(rng)
        if inst.problem.xi.null_blocks():
            return inst


def test_second_candidate_on_null_rows(rng):
    inst = _null_instance(rng)
    r = disintegrate(inst.problem)
    r2 = replace_null_rows(inst.problem, r.map, rng)
    assert verify_disintegration(inst.problem, r2).passed
    assert not maps_equal(r.map, r2)
    assert ae_equal(r.map, r2, inst.problem.xi)
    assert uniqueness_check(inst.problem, r.map, r2)
    assert uniqueness_check(inst.problem, r.map, r.map)


def test_uniqueness_check_detects_row_change(rng):
    inst = synthesize(rng)
    r = disintegrate(inst.problem).map
    live = [j for j in range(r.target.num_blocks) if j not in inst.problem.xi.null_blocks()]
    grid = [list(row) for row in r.choi]
    j = live[0]
    grid[j][0] = grid[j][0] + 1e-3 * np.eye(grid[j][0].shape[0])
    assert not uniqueness_check(inst.problem, r, BlockMap(r.source, r.target, tuple(tuple(x) for x in grid)))


def test_soundness_and_completeness(rng):
    for _ in range(25):
        inst = synthesize(rng)
        r = disintegrate(inst.problem)
        assert r.exists
        assert r.certificate.verification.passed
        for j, row in enumerate(inst.tau):
            if j in inst.problem.xi.null_blocks():
                continue
            for i, t in enumerate(row):
                if t is not None:
                    assert linalg.max_abs(t - r.tau[j][i]) < 1e-9


def test_null_rows_only_ae(rng):
    inst = _null_instance(rng)
    r = disintegrate(inst.problem).map
    composite = compose(r, inst.problem.hom_map)
    ident = identity_map(inst.problem.hom.source)
    assert ae_equal(composite, ident, inst.problem.xi)


def test_unconstrained_placeholder(rng):
    src, tgt = Algebra((1, 2)), Algebra((3,))
    hom = BratteliHom(src, tgt, np.array([[1, 1]]), trivial_unitaries(tgt))
    omega = state_from_density(tgt, [np.diag([1.0, 0.0, 0.0])])
    problem = make_problem(hom, omega)
    assert problem.xi.null_blocks() == frozenset({1})
    r = disintegrate(problem)
    assert r.exists
    assert r.unconstrained == frozenset({(1, 0)})
    assert np.allclose(r.tau[1][0], [[1.0]])
    out = apply(r.map, tgt.unit())
    assert np.allclose(out.blocks[1], np.eye(2))
