import numpy as np
import pytest

from ncdisint import linalg
from ncdisint.algebra import Algebra, density_state, matrix_algebra, state_from_density
from ncdisint.errors import AlgebraMismatch, DimensionError, InvalidMapError
from ncdisint.maps import (
    BlockMap,
    BratteliHom,
    adjoint,
    ae_equal,
    ae_witness,
    apply,
    block_embedding,
    bratteli_apply,
    bratteli_to_blockmap,
    choi_from_kraus,
    choi_residual,
    compose,
    conjugation_map,
    from_function,
    hom_residual,
    identity_map,
    is_cp,
    is_positive_heuristic,
    is_unital,
    kraus_from_choi,
    linear_combination,
    maps_equal,
    pullback_state,
    trace_map,
    transpose_map,
    trivial_unitaries,
    verify_hom,
)
from ncdisint.sampling import random_cpu_map, random_density, random_unitary

from helpers import ae_distinct_pair as helper_ae_distinct_pair


def ae_distinct_pair():
    phi, psi, p = helper_ae_distinct_pair()
    return phi, psi, density_state(p)


def null_perturbed(p_perp):
    """``A -> A + tr(A) P_perp`` on ``M_2``."""
    alg = matrix_algebra(2)
    return from_function(alg, alg, lambda a: alg.element([a.blocks[0] + np.trace(a.blocks[0]) * p_perp]))


def rand_elem(alg, rng):
    return alg.element([rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) for n in alg.dims])


def test_identity_apply(rng):
    alg = Algebra((2, 1, 3))
    x = rand_elem(alg, rng)
    assert apply(identity_map(alg), x).allclose(x, 1e-12)


def test_trace_map():
    out = apply(trace_map(2), matrix_algebra(2).element([np.diag([0.3, 1.7])]))
    assert np.allclose(out.blocks[0], [[2.0]])


def test_null_perturbation_on_identity():
    f = null_perturbed(np.diag([0.0, 1.0]))
    out = apply(f, matrix_algebra(2).unit())
    assert np.allclose(out.blocks[0], np.diag([1.0, 3.0]))


def test_grid_shape_checked():
    with pytest.raises(DimensionError):
        BlockMap(matrix_algebra(2), matrix_algebra(2), ((np.eye(3),),))
    with pytest.raises(DimensionError):
        BlockMap(Algebra((1, 1)), matrix_algebra(1), ((np.eye(1),),))


def test_apply_mismatch():
    with pytest.raises(AlgebraMismatch):
        apply(identity_map(matrix_algebra(2)), matrix_algebra(3).unit())


def test_transpose_map():
    t = transpose_map(2)
    assert not is_cp(t)
    assert is_positive_heuristic(t, samples=50)
    assert linalg.min_eigenvalue(t.choi[0][0]) == pytest.approx(-1.0)
    x = np.array([[1, 2], [3, 4]])
    assert np.allclose(apply(t, matrix_algebra(2).element([x])).blocks[0], x.T)


def test_positive_heuristic_refutes():
    neg = linear_combination([-1.0], [identity_map(matrix_algebra(2))])
    assert not is_positive_heuristic(neg, samples=4)


def test_ae_distinct_maps_cpu():
    phi, psi, _ = ae_distinct_pair()
    for f in (phi, psi):
        assert is_cp(f) and is_unital(f)


def test_identity_cp_unital():
    f = identity_map(Algebra((2, 3)))
    assert is_cp(f) and is_unital(f)


def test_kraus_of_conjugation(rng):
    u = random_unitary(3, rng)
    ks = kraus_from_choi(conjugation_map(u))
    ops = ks.ops[0][0]
    assert len(ops) == 1
    phase = ops[0][0, 0] / u[0, 0]
    assert abs(abs(phase) - 1) < 1e-10
    assert np.allclose(ops[0], phase * u)


def test_kraus_of_identity():
    ops = kraus_from_choi(identity_map(matrix_algebra(3))).ops[0][0]
    assert len(ops) == 1
    assert np.allclose(ops[0] / ops[0][0, 0], np.eye(3))


def test_kraus_roundtrip(rng):
    f = random_cpu_map(Algebra((2, 1)), Algebra((3, 2)), rng, kraus=3)
    assert choi_residual(kraus_from_choi(f).to_blockmap(), f) < 1e-9


def test_kraus_of_weighted_partial_trace():
    # R(A) = sum_jk tau_kj A_jk, Choi = tau^T (x) Choi(id)
    tau = np.array([[0.7, 0.2], [0.2, 0.3]])
    n = 2
    alg_src = matrix_algebra(4)
    r = from_function(
        alg_src,
        matrix_algebra(n),
        lambda a: matrix_algebra(n).element([linalg.partial_trace_left(np.kron(tau, np.eye(n)) @ a.blocks[0], 2, n)]),
    )
    ks = kraus_from_choi(r)
    assert len(ks.ops[0][0]) == 2
    assert choi_residual(ks.to_blockmap(), r) < 1e-12


def test_kraus_rejects_non_cp():
    with pytest.raises(InvalidMapError):
        kraus_from_choi(transpose_map(2))


def test_choi_from_kraus_shape_check():
    with pytest.raises(DimensionError):
        choi_from_kraus([np.eye(2)], 3, 2)


def test_adjoint_identity():
    f = identity_map(Algebra((2, 1)))
    assert maps_equal(adjoint(f), f)


def test_adjoint_conjugation(rng):
    v = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
    assert maps_equal(adjoint(conjugation_map(v)), conjugation_map(v.conj().T))


def test_adjoint_inner_product(rng):
    src, tgt = Algebra((2, 1)), Algebra((3,))
    f = random_cpu_map(src, tgt, rng)
    for _ in range(5):
        a, b = rand_elem(src, rng), rand_elem(tgt, rng)
        lhs = sum(np.vdot(x, y) for x, y in zip(b.blocks, apply(f, a).blocks))
        rhs = sum(np.vdot(x, y) for x, y in zip(apply(adjoint(f), b).blocks, a.blocks))
        assert abs(lhs - rhs) < 1e-9


def test_unital_iff_adjoint_trace_preserving(rng):
    src, tgt = Algebra((2, 2)), Algebra((3, 1))
    f = random_cpu_map(src, tgt, rng)
    g = linear_combination([1.1], [f])
    for h, expect in ((f, True), (g, False)):
        assert is_unital(h) is expect
        rho = state_from_density(tgt, [0.5 * random_density(3, rng), [[0.5]]]).weighted_densities()
        total = sum(np.trace(b) for b in apply(adjoint(h), rho).blocks)
        assert bool(abs(total - 1) < 1e-9) == expect


def test_compose_identity(rng):
    f = random_cpu_map(Algebra((2,)), Algebra((1, 2)), rng)
    assert maps_equal(compose(identity_map(f.target), f), f)
    assert maps_equal(compose(f, identity_map(f.source)), f)


def test_compose_partial_trace_after_embedding():
    p, n = 3, 2
    big = matrix_algebra(p * n)
    ptr = from_function(big, matrix_algebra(n), lambda a: matrix_algebra(n).element([linalg.partial_trace_left(a.blocks[0], p, n)]))
    emb = bratteli_to_blockmap(block_embedding(p, n))
    assert maps_equal(compose(ptr, emb), linear_combination([p], [identity_map(matrix_algebra(n))]))


def test_compose_matches_sequential_apply(rng):
    a, b, c = Algebra((2, 1)), Algebra((3,)), Algebra((1, 2))
    f, g = random_cpu_map(a, b, rng), random_cpu_map(b, c, rng)
    h = compose(g, f)
    for _, e in a.matrix_units():
        assert apply(h, e).allclose(apply(g, apply(f, e)), 1e-10)


def test_compose_mismatch(rng):
    with pytest.raises(AlgebraMismatch):
        compose(identity_map(matrix_algebra(2)), identity_map(matrix_algebra(3)))


def test_pullback_identity(rng):
    s = density_state(random_density(3, rng))
    out = pullback_state(identity_map(s.algebra), s)
    assert np.allclose(out.densities[0], s.densities[0])


def test_pullback_along_block_embedding(rng):
    rho = random_density(4, rng)
    out = pullback_state(bratteli_to_blockmap(block_embedding(2, 2)), density_state(rho))
    assert np.allclose(out.densities[0], linalg.partial_trace_left(rho, 2, 2))


def test_pullback_rejects_non_unital():
    f = null_perturbed(np.diag([0.0, 1.0]))
    with pytest.raises(InvalidMapError):
        pullback_state(f, density_state(np.eye(2) / 2))


def test_ae_equal_self(rng):
    f = random_cpu_map(Algebra((2,)), Algebra((2,)), rng)
    assert ae_equal(f, f, density_state(np.diag([1.0, 0.0])))


def test_ae_equal_ae_distinct_pair():
    phi, psi, xi = ae_distinct_pair()
    assert ae_equal(phi, psi, xi)
    assert not maps_equal(phi, psi)


def test_ae_equal_full_rank_forces_equality():
    f = null_perturbed(np.diag([0.0, 1.0]))
    xi = density_state(np.diag([0.3, 0.7]))
    assert not ae_equal(f, identity_map(matrix_algebra(2)), xi)
    w = ae_witness(f, identity_map(matrix_algebra(2)), xi)
    assert (w.block, w.row, w.col) == (0, 0, 0) and w.residual == pytest.approx(1.0)


def test_ae_equal_mismatch():
    with pytest.raises(AlgebraMismatch):
        ae_equal(identity_map(matrix_algebra(2)), identity_map(matrix_algebra(2)), density_state(np.eye(3) / 3))


def test_bratteli_block_embedding(rng):
    b = rng.normal(size=(2, 2))
    out = bratteli_apply(block_embedding(3, 2), matrix_algebra(2).element([b]))
    assert np.allclose(out.blocks[0], np.kron(np.eye(3), b))


def test_bratteli_classical_function():
    f = [1, 0, 1]
    c = np.zeros((3, 2), dtype=int)
    c[np.arange(3), f] = 1
    hom = BratteliHom(Algebra((1, 1)), Algebra((1, 1, 1)), c, trivial_unitaries(Algebra((1, 1, 1))))
    out = bratteli_apply(hom, Algebra((1, 1)).element([[[5.0]], [[7.0]]]))
    assert [b[0, 0] for b in out.blocks] == [7.0, 5.0, 7.0]


def test_bratteli_single_copy_is_conjugation(rng):
    u = random_unitary(3, rng)
    hom = BratteliHom(matrix_algebra(3), matrix_algebra(3), np.array([[1]]), (u,))
    assert maps_equal(bratteli_to_blockmap(hom), conjugation_map(u))


@pytest.mark.parametrize(
    "c,u,err",
    [
        ([[2]], None, "dimension law"),
        ([[1]], np.diag([1.0, 2.0]), "unitary"),
        ([[-1]], None, "nonnegative"),
    ],
)
def test_bratteli_validation(c, u, err):
    tgt = matrix_algebra(2)
    with pytest.raises(InvalidMapError, match=err):
        BratteliHom(matrix_algebra(2), tgt, np.array(c), (np.eye(2) if u is None else u,))


def test_identity_hom_is_identity_map():
    alg = Algebra((2, 1))
    hom = BratteliHom(alg, alg, np.eye(2, dtype=int), trivial_unitaries(alg))
    assert maps_equal(bratteli_to_blockmap(hom), identity_map(alg))


def test_bratteli_blockmap_is_hom(rng):
    src, tgt = Algebra((2, 1)), Algebra((5, 3))
    c = np.array([[2, 1], [1, 1]])
    hom = BratteliHom(src, tgt, c, tuple(random_unitary(m, rng) for m in tgt.dims))
    f = bratteli_to_blockmap(hom)
    assert is_cp(f) and is_unital(f) and verify_hom(f)
    x = rand_elem(src, rng)
    assert apply(f, x).allclose(bratteli_apply(hom, x), 1e-10)


@pytest.mark.parametrize(
    "f",
    [
        from_function(matrix_algebra(2), matrix_algebra(2), lambda a: matrix_algebra(2).element([np.trace(a.blocks[0]) / 2 * np.eye(2)])),
        transpose_map(2),
    ],
    ids=["depolarizing", "transpose"],
)
def test_verify_hom_rejects(f):
    assert not verify_hom(f)
    assert hom_residual(f) > 1e-3


def test_two_ampliation_positive(rng):
    f = random_cpu_map(matrix_algebra(2), matrix_algebra(2), rng)
    assert is_cp(f)
    amp = from_function(
        matrix_algebra(4),
        matrix_algebra(4),
        lambda a: matrix_algebra(4).element(
            [np.block([[apply(f, matrix_algebra(2).element([a.blocks[0][2 * r:2 * r + 2, 2 * c:2 * c + 2]])).blocks[0] for c in range(2)] for r in range(2)])]
        ),
    )
    for _ in range(10):
        x = random_density(4, rng, rank=1)
        out = apply(amp, matrix_algebra(4).element([x])).blocks[0]
        assert linalg.min_eigenvalue(out) > -1e-10


def test_ae_equal_implies_compressed_equality_and_same_pullback(rng):
    phi, psi, xi = ae_distinct_pair()
    p = np.diag([1.0, 0.0])
    cphi = compose(conjugation_map(p), phi)
    cpsi = compose(conjugation_map(p), psi)
    assert maps_equal(cphi, cpsi)
    a = pullback_state(phi, xi)
    b = pullback_state(psi, xi)
    assert np.allclose(a.densities[0], b.densities[0], atol=1e-9)
